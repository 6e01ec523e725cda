use std::path::Path;
use std::time::Instant;

use divsel_core::datagen::{gen_dataset, DatasetSpec};
use divsel_core::estimators::{
    drop_nonpositive, medal_select, sm_select, MedalOptions, ModelFitter, PrecomputedFitter,
    ScalarFitter, SelectionGrid, SelectionResult, DEFAULT_PHI_COUNT, DEFAULT_PHI_RANGE,
};
use divsel_core::factorization::{nmf_alpha, nmf_beta, pnmf_gamma, FitConfig, Init, NmfFitter, PnmfFitter};
use divsel_core::io::{read_matrix, write_atomic, write_matrix, MatrixFormat};
use divsel_core::quadrature::shared_rule;
use divsel_core::report::{curve_csv, ConfigEcho, DatasetFingerprint, RunReport};
use divsel_core::{DivselError, Family};
use ndarray::Array2;

use crate::args::{Case, EstimatorArg, FamilyArg, GenArgs, Kind, ModelArg, NmfArgs, PnmfArgs, SelectArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(DivselError),
}

impl From<DivselError> for CliError {
    fn from(e: DivselError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(DivselError::Numerical(_) | DivselError::Convergence(_)) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn family_of(f: FamilyArg) -> Family {
    match f {
        FamilyArg::Beta => Family::Beta,
        FamilyArg::Alpha => Family::Alpha,
        FamilyArg::Gamma => Family::Gamma,
        FamilyArg::Renyi => Family::Renyi,
    }
}

fn load(path: &Path) -> CliResult<Array2<f64>> {
    Ok(read_matrix(path, MatrixFormat::from_path(path))?)
}

fn save(path: &Path, m: &Array2<f64>) -> CliResult<()> {
    Ok(write_matrix(path, m, MatrixFormat::from_path(path))?)
}

fn parse_floats(text: &str, what: &str, count: usize) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != count {
        return Err(CliError::Usage(format!("{what} '{text}' needs {count} colon-separated fields")));
    }
    parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("{what} '{text}': bad number '{p}'"))))
        .collect()
}

/// `lo:step:hi`, or the family default.
pub fn param_grid(text: Option<&str>, family: Family) -> CliResult<Vec<f64>> {
    let values = match text {
        Some(t) => {
            let v = parse_floats(t, "grid", 3)?;
            SelectionGrid::range(v[0], v[1], v[2])?
        }
        None => match family {
            Family::Renyi => SelectionGrid::range(0.05, 0.05, 2.0)?,
            _ => SelectionGrid::range(-2.0, 0.05, 2.0)?,
        },
    };
    Ok(match family {
        // the alpha family is scored through a transform that is singular at 0
        Family::Alpha if text.is_none() => values.into_iter().filter(|a| *a != 0.0).collect(),
        _ => values,
    })
}

/// `lo:hi:count`, log-spaced, or the default.
pub fn phi_grid(text: Option<&str>) -> CliResult<Vec<f64>> {
    match text {
        Some(t) => {
            let v = parse_floats(t, "phi grid", 3)?;
            if v[2] < 1.0 || v[2].fract() != 0.0 {
                return Err(CliError::Usage(format!("phi grid '{t}': count must be a positive integer")));
            }
            Ok(SelectionGrid::log_spaced(v[0], v[1], v[2] as usize)?)
        }
        None => Ok(SelectionGrid::log_spaced(DEFAULT_PHI_RANGE.0, DEFAULT_PHI_RANGE.1, DEFAULT_PHI_COUNT)?),
    }
}

pub fn run_gen(a: &GenArgs) -> CliResult<()> {
    let spec = match a.kind {
        Kind::Tweedie => {
            let p = match (a.case, a.power) {
                (Some(Case::Gaussian), _) => 0.0,
                (Some(Case::Poisson), _) => 1.0,
                (Some(Case::Gamma), _) => 2.0,
                (Some(Case::InverseGaussian), _) => 3.0,
                (None, Some(p)) => p,
                (None, None) => return Err(CliError::Usage("tweedie data needs --case or --power".into())),
            };
            DatasetSpec::TweedieScalar { mu: a.mu, phi: a.phi, p, count: a.count }
        }
        Kind::Multinomial => DatasetSpec::Multinomial { dim: a.dim, trials: a.trials },
        Kind::Block => DatasetSpec::default_block_matrix(),
    };
    let m = gen_dataset(&spec, a.seed)?;
    save(&a.out, &m)?;
    println!("wrote {}x{} matrix to {}", m.nrows(), m.ncols(), a.out.display());
    Ok(())
}

pub fn run_select(a: &SelectArgs) -> CliResult<()> {
    let started = Instant::now();
    let family = family_of(a.family);
    let data = load(&a.data)?;
    let (rows, cols) = data.dim();
    let all: Vec<f64> = data.iter().copied().collect();
    let fit_config = FitConfig { max_iters: a.iters, seed: a.seed, ..FitConfig::default() };

    if a.drop_zeros && matches!(a.model, ModelArg::Nmf | ModelArg::Pnmf) {
        return Err(CliError::Usage("--drop-zeros applies to the scalar and precomputed models".into()));
    }
    if a.mu.is_some() && a.model != ModelArg::Precomputed {
        return Err(CliError::Usage("--mu requires --model precomputed".into()));
    }
    let rank = || a.rank.ok_or_else(|| CliError::Usage("factorization models need --rank".into()));

    let (x, fitter, dropped): (Vec<f64>, Box<dyn ModelFitter>, usize) = match a.model {
        ModelArg::Scalar => {
            let (x, dropped) = if a.drop_zeros { drop_nonpositive(&all) } else { (all, 0) };
            (x, Box::new(ScalarFitter), dropped)
        }
        ModelArg::Precomputed => {
            let path = a.mu.as_ref().ok_or_else(|| CliError::Usage("--model precomputed needs --mu".into()))?;
            let mu = load(path)?;
            if mu.dim() != data.dim() {
                return Err(CliError::Usage(format!(
                    "--mu has shape {:?} but the data has shape {:?}",
                    mu.dim(),
                    data.dim()
                )));
            }
            let keep: Vec<(f64, f64)> = all
                .iter()
                .zip(mu.iter())
                .filter(|(x, _)| !a.drop_zeros || **x > 0.0)
                .map(|(x, m)| (*x, *m))
                .collect();
            let dropped = all.len() - keep.len();
            let (x, mu): (Vec<f64>, Vec<f64>) = keep.into_iter().unzip();
            (x, Box::new(PrecomputedFitter::new(mu)?), dropped)
        }
        ModelArg::Nmf => {
            let fitter = NmfFitter { rows, cols, rank: rank()?, config: fit_config.clone() };
            (all, Box::new(fitter), 0)
        }
        ModelArg::Pnmf => {
            let config = FitConfig { init: Init::EuclideanWarmStart, ..fit_config.clone() };
            (all, Box::new(PnmfFitter { rows, cols, rank: rank()?, config }), 0)
        }
    };

    let grid = SelectionGrid::new(param_grid(a.grid.as_deref(), family)?, phi_grid(a.phi_grid.as_deref())?)?;
    let result: SelectionResult = match a.estimator {
        EstimatorArg::Medal => {
            let rule = shared_rule(a.quad_order)?;
            medal_select(family, &x, fitter.as_ref(), &grid, &rule, MedalOptions::default())?
        }
        EstimatorArg::Sm => sm_select(family, &x, fitter.as_ref(), &grid)?,
    };

    let factorized = matches!(a.model, ModelArg::Nmf | ModelArg::Pnmf);
    let report = RunReport {
        dataset: DatasetFingerprint::of(&data),
        config: ConfigEcho {
            family: family.as_str().into(),
            estimator: result.estimator.as_str().into(),
            model: fitter.name().into(),
            rank: if factorized { a.rank } else { None },
            param_grid: grid.param_values().to_vec(),
            phi_grid: grid.phi_values().to_vec(),
            quadrature_order: a.quad_order,
            seed: a.seed,
            iterations: if factorized { Some(a.iters) } else { None },
            dropped_entries: dropped,
        },
        selection: result,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    };
    let json = report.to_json()?;
    let curve = curve_csv(&report.selection);
    if let Some(p) = &a.out {
        write_atomic(p, json.as_bytes())?;
    }
    if let Some(p) = &a.curve {
        write_atomic(p, curve.as_bytes())?;
    }
    if dropped > 0 {
        eprintln!("dropped {dropped} nonpositive entries");
    }
    println!(
        "best {} = {} (phi = {})",
        family.as_str(),
        report.selection.best_param,
        report.selection.best_phi
    );
    Ok(())
}

fn print_trace(trace: &[f64], violations: usize) {
    let last = trace.last().copied().unwrap_or(f64::NAN);
    println!(
        "iterations {} objective {} -> {} ({} monotonicity violations)",
        trace.len().saturating_sub(1),
        trace[0],
        last,
        violations
    );
}

pub fn run_nmf(a: &NmfArgs) -> CliResult<()> {
    let v = load(&a.data)?;
    let mask = a.mask.as_deref().map(load).transpose()?;
    let cfg = FitConfig { max_iters: a.iters, seed: a.seed, mask, ..FitConfig::default() };
    let model = match a.family {
        FamilyArg::Beta => nmf_beta(&v, a.rank, a.param, &cfg)?,
        FamilyArg::Alpha => nmf_alpha(&v, a.rank, a.param, &cfg)?,
        other => return Err(CliError::Usage(format!("nmf supports --family beta or alpha, not {other:?}"))),
    };
    save(&a.out_w, &model.w)?;
    if let (Some(p), Some(h)) = (&a.out_h, &model.h) {
        save(p, h)?;
    }
    print_trace(&model.objective_trace, model.monotonicity_violations.len());
    Ok(())
}

pub fn run_pnmf(a: &PnmfArgs) -> CliResult<()> {
    let v = load(&a.data)?;
    let init = if a.no_warm_start { Init::RandomUniform } else { Init::EuclideanWarmStart };
    let cfg = FitConfig { max_iters: a.iters, seed: a.seed, init, ..FitConfig::default() };
    let model = pnmf_gamma(&v, a.rank, a.param, &cfg)?;
    save(&a.out_w, &model.w)?;
    print_trace(&model.objective_trace, model.monotonicity_violations.len());
    Ok(())
}
