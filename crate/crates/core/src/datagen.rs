//! Synthetic datasets for the selection experiments.

use std::path::PathBuf;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::densities::{tweedie_sample, TweedieModel};
use crate::error::{DivselError, Result};
use crate::io::{read_matrix, MatrixFormat};

pub const DEFAULT_SCALAR_COUNT: usize = 10_000;
pub const DEFAULT_MULTINOMIAL_DIM: usize = 1000;
pub const DEFAULT_MULTINOMIAL_TRIALS: u64 = 10_000_000;

/// What to generate or load. Scalar samples are an `N x 1` column, multinomial
/// counts a `1 x dim` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    TweedieScalar { mu: f64, phi: f64, p: f64, count: usize },
    Multinomial { dim: usize, trials: u64 },
    /// Diagonal blocks of `U[0, high]` entries with `U(0, noise]` added everywhere.
    BlockMatrix { blocks: Vec<(usize, usize)>, high: f64, noise: f64 },
    FromFile { path: PathBuf, format: MatrixFormat },
}

impl DatasetSpec {
    pub fn default_multinomial() -> Self {
        DatasetSpec::Multinomial { dim: DEFAULT_MULTINOMIAL_DIM, trials: DEFAULT_MULTINOMIAL_TRIALS }
    }

    /// 50 x 30 with blocks 30 x 20 and 20 x 10.
    pub fn default_block_matrix() -> Self {
        DatasetSpec::BlockMatrix { blocks: vec![(30, 20), (20, 10)], high: 10.0, noise: 1.0 }
    }
}

/// `p ~` normalized iid uniforms, then `x ~ Multinomial(trials, p)` by
/// sequential conditional binomials.
fn multinomial(rng: &mut ChaCha8Rng, dim: usize, trials: u64) -> Result<Vec<f64>> {
    let u = draw_weights(rng, dim);
    let total: f64 = u.iter().sum();
    let mut remaining_mass = 1.0;
    let mut remaining = trials;
    let mut out = Vec::with_capacity(dim);
    for (k, uk) in u.iter().enumerate() {
        let p = uk / total;
        let draw = if k + 1 == dim || remaining == 0 {
            remaining
        } else {
            let q = (p / remaining_mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| DivselError::param(format!("binomial: {e}")))?
                .sample(rng)
        };
        out.push(draw as f64);
        remaining -= draw;
        remaining_mass -= p;
    }
    Ok(out)
}

fn draw_weights(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| 1.0 - rng.random::<f64>()).collect()
}

/// The cell probabilities behind `gen_dataset(Multinomial { dim, .. }, seed)`.
pub fn multinomial_probabilities(dim: usize, seed: u64) -> Vec<f64> {
    let u = draw_weights(&mut ChaCha8Rng::seed_from_u64(seed), dim);
    let total: f64 = u.iter().sum();
    u.iter().map(|v| v / total).collect()
}

pub fn gen_dataset(spec: &DatasetSpec, seed: u64) -> Result<Array2<f64>> {
    match spec {
        DatasetSpec::TweedieScalar { mu, phi, p, count } => {
            if *count == 0 {
                return Err(DivselError::param("sample count must be positive"));
            }
            let model = TweedieModel::new(*mu, *phi, *p)?;
            let x = tweedie_sample(&model, *count, seed)?;
            Ok(Array2::from_shape_vec((*count, 1), x).expect("column shape"))
        }
        DatasetSpec::Multinomial { dim, trials } => {
            if *dim == 0 || *trials == 0 {
                return Err(DivselError::param("multinomial dimension and trials must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = multinomial(&mut rng, *dim, *trials)?;
            Ok(Array2::from_shape_vec((1, *dim), x).expect("row shape"))
        }
        DatasetSpec::BlockMatrix { blocks, high, noise } => {
            if blocks.is_empty() || blocks.iter().any(|(r, c)| *r == 0 || *c == 0) {
                return Err(DivselError::param("blocks must have positive sizes"));
            }
            if !(high.is_finite() && *high >= 0.0 && noise.is_finite() && *noise > 0.0) {
                return Err(DivselError::param("block height must be >= 0 and noise > 0"));
            }
            let rows: usize = blocks.iter().map(|b| b.0).sum();
            let cols: usize = blocks.iter().map(|b| b.1).sum();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = Array2::zeros((rows, cols));
            let (mut r0, mut c0) = (0, 0);
            for &(r, c) in blocks {
                for i in r0..r0 + r {
                    for j in c0..c0 + c {
                        m[[i, j]] = rng.random::<f64>() * high;
                    }
                }
                r0 += r;
                c0 += c;
            }
            m.mapv_inplace(|x| x + (1.0 - rng.random::<f64>()) * noise);
            Ok(m)
        }
        DatasetSpec::FromFile { path, format } => read_matrix(path, *format),
    }
}

/// Row labels of the generating blocks (for clustering checks).
pub fn block_labels(blocks: &[(usize, usize)]) -> Vec<usize> {
    blocks.iter().enumerate().flat_map(|(k, (r, _))| std::iter::repeat_n(k, *r)).collect()
}
