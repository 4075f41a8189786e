//! The Cartesian grid of signal × σ² × model cells.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{holdout_optimism, kfold_optimism, mc_optimism_with, OptimismEstimate, ResamplingPlan, VarianceReduction};
use crate::models::{KernelSpec, LinearFeatures, MlpSpec, ModelSpec, NtkLayerwiseSpec};
use crate::numcore::rng::normal_vec;
use crate::numcore::{hash_seed, DenseMatrix, SeedStream};
use crate::signals::{Dataset, DesignSpec, SignalKind, SignalSpec};
use crate::theory::{
    cor5_quadratic_form, exp_signal_scaled, fk_closed_form, thm1_optimism, thm2_lowrank_bound, thm3_ridge_optimism,
    thm4_kernel_optimism, EvalMethod, NtkFeatureMap, PopulationMoments, TheoryValue,
};

use super::config::{ExperimentConfig, Mode, ModelEntry};
use super::csvio::ResultRow;
use super::dataset::load_dataset_csv;

/// Coordinates of one cell. Synthetic cells carry a signal and σ².
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub signal: Option<(SignalKind, f64)>,
    pub model: ModelEntry,
}

impl Cell {
    /// Seed derived from the master seed and the cell's own coordinates,
    /// so adding or removing other cells never changes this one.
    pub fn seed(&self, master: u64) -> u64 {
        let sig = match &self.signal {
            Some((kind, s2)) => {
                let spec = SignalSpec { kind: kind.clone(), noise_var: *s2 };
                format!("{}|{}|{:016x}", spec.kind_name(), spec.param_label(), s2.to_bits())
            }
            None => "data".into(),
        };
        let m = &self.model;
        hash_seed(&format!(
            "{master}|{sig}|{}|{}|{}",
            m.family,
            m.lambda.map_or("-".into(), |l| format!("{:016x}", l.to_bits())),
            m.rank.map_or("-".into(), |r| r.to_string())
        ))
    }
}

/// Cells in emission order: signal parameter, then σ², then model.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    if cfg.mode == Mode::RealData {
        return cfg.models.iter().map(|m| Cell { signal: None, model: m.clone() }).collect();
    }
    let mut out = Vec::new();
    for kind in &cfg.signals {
        for &s2 in &cfg.sigma2 {
            for m in &cfg.models {
                out.push(Cell { signal: Some((kind.clone(), s2)), model: m.clone() });
            }
        }
    }
    out
}

/// Concrete model for input dimension `d`. Random kernel weights come from `stream`.
pub fn build_model(entry: &ModelEntry, cfg: &ExperimentConfig, d: usize, stream: &SeedStream) -> Result<ModelSpec> {
    let lambda = entry.lambda.unwrap_or(0.0);
    let spec = match entry.family.as_str() {
        "mean" => ModelSpec::Mean,
        "ols" => ModelSpec::Ols { intercept: false },
        "ols+1" => ModelSpec::Ols { intercept: true },
        "ridge" => ModelSpec::Ridge { lambda, intercept: false },
        "ridge+1" => ModelSpec::Ridge { lambda, intercept: true },
        "bended" => ModelSpec::Bended,
        "lowrank" => ModelSpec::LowRank { rank: entry.rank.unwrap_or(1) },
        "krr-linear" => ModelSpec::Krr { kernel: KernelSpec::Linear, lambda },
        "krr-ntk" => {
            let mut r = stream.child("ntk-init").rng();
            let w0 = DenseMatrix::new(d, cfg.width, normal_vec(&mut r, d * cfg.width))?;
            ModelSpec::Krr { kernel: KernelSpec::Ntk { w0, a: normal_vec(&mut r, cfg.width) }, lambda }
        }
        "mlp" => ModelSpec::Mlp(MlpSpec {
            hidden: cfg.hidden.clone(),
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            optimizer: cfg.optimizer,
        }),
        "ntk" => ModelSpec::NtkLayerwise(NtkLayerwiseSpec {
            m: cfg.width,
            lambda,
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            optimizer: cfg.optimizer,
        }),
        other => return Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
    };
    spec.validate()?;
    Ok(spec)
}

/// Scaled theory value and its standard error, or `None` for families
/// without an asymptotic formula.
pub fn theory_for(
    signal: &SignalSpec,
    spec: &ModelSpec,
    n: usize,
    budget: usize,
    stream: &SeedStream,
) -> Result<Option<(f64, f64)>> {
    let s2 = signal.noise_var;
    let closed = |v: Result<f64>| v.map(|v| Some((v, 0.0)));
    let d = signal.input_dim();
    let design = DesignSpec::standard(d)?;
    let method = if d == 1 { EvalMethod::Quadrature } else { EvalMethod::InnerMc };
    let pm = |phi: LinearFeatures| PopulationMoments::from_features(Arc::new(phi), signal, &design, method, budget, stream);
    let scaled = |v: TheoryValue| -> Result<Option<(f64, f64)>> {
        let sc = v.scaled_optimism.ok_or(Error::ZeroNoiseVariance)?;
        Ok(Some((sc, v.scaled_stderr(s2).unwrap_or(0.0))))
    };
    let raw_or_int = |intercept: bool| if intercept { LinearFeatures::Intercept } else { LinearFeatures::Raw };
    match (spec, &signal.kind) {
        (ModelSpec::Ols { intercept: false }, SignalKind::PiecewiseK { k }) => closed(fk_closed_form(*k, s2)),
        (ModelSpec::Ols { intercept: false }, SignalKind::Polynomial { coeffs }) => closed(cor5_quadratic_form(coeffs, s2)),
        (ModelSpec::Ols { intercept: false }, SignalKind::ExpBump { a, b }) => closed(exp_signal_scaled(*a, *b, s2)),
        (ModelSpec::Ols { intercept }, _) => scaled(thm1_optimism(&pm(raw_or_int(*intercept))?, n, budget, stream)?),
        (ModelSpec::Mean, _) => scaled(thm1_optimism(&pm(LinearFeatures::Constant)?, n, budget, stream)?),
        (ModelSpec::Bended, _) => scaled(thm1_optimism(&pm(LinearFeatures::Bended)?, n, budget, stream)?),
        (ModelSpec::Ridge { lambda, intercept }, _) => {
            scaled(thm3_ridge_optimism(&pm(raw_or_int(*intercept))?, *lambda, n, budget, stream)?)
        }
        (ModelSpec::LowRank { rank }, _) => scaled(thm2_lowrank_bound(&pm(LinearFeatures::Raw)?, *rank, n, budget, stream)?),
        // The kernel fit solves (K + λI)α = y, which is ridge with penalty λ/n.
        (ModelSpec::Krr { kernel: KernelSpec::Linear, lambda }, _) => {
            scaled(thm3_ridge_optimism(&pm(LinearFeatures::Raw)?, lambda / n as f64, n, budget, stream)?)
        }
        (ModelSpec::Krr { kernel: KernelSpec::Ntk { w0, a }, lambda }, _) => {
            let phi = NtkFeatureMap { w0: w0.clone(), a: a.clone() };
            scaled(thm4_kernel_optimism(phi, signal, &design, lambda / n as f64, n, budget, stream)?)
        }
        _ => Ok(None),
    }
}

/// Runs every cell. Configuration problems are errors; cell failures are
/// recorded in the row's status.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let data = match (cfg.mode, &cfg.dataset) {
        (Mode::RealData, Some(path)) => Some(load_dataset_csv(path, &cfg.target)?),
        _ => None,
    };
    let master = cfg.seed.expect("validated");
    Ok(cells(cfg).par_iter().map(|c| run_cell(cfg, c, master, data.as_ref())).collect())
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell, master: u64, data: Option<&Dataset>) -> ResultRow {
    let seed = cell.seed(master);
    let mut row = ResultRow {
        mode: cfg.mode.name().into(),
        signal_kind: "data".into(),
        k_or_coeffs: String::new(),
        sigma2: None,
        model: cell.model.family.clone(),
        lambda: cell.model.lambda,
        n_train: cfg.n_train,
        num_runs: if cfg.mode == Mode::Theory { 0 } else { cfg.num_runs },
        err_train_mean: None,
        err_test_mean: None,
        opt_raw: None,
        opt_scaled: None,
        stderr: None,
        theory_value: None,
        theory_stderr: None,
        seed,
        status: "ok".into(),
        opt_per_n: None,
    };
    if cell.model.family == "lowrank" {
        row.model = format!("lowrank{}", cell.model.rank.unwrap_or(1));
    }
    let stream = SeedStream::new(seed, 0);
    let outcome = match (&cell.signal, data) {
        (None, Some(data)) => {
            if let Some(path) = &cfg.dataset {
                row.k_or_coeffs = format!("{}:{}", path.file_stem().map_or(String::new(), |s| s.to_string_lossy().into()), cfg.target);
            }
            real_cell(cfg, cell, data, seed, &stream, &mut row)
        }
        (Some((kind, s2)), _) => synthetic_cell(cfg, cell, kind, *s2, seed, &stream, &mut row),
        (None, None) => Err(Error::InvalidArgument("cell has neither a signal nor a dataset".into())),
    };
    if let Err(e) = outcome {
        row.status = format!("error: {e}");
    }
    row
}

fn fill(row: &mut ResultRow, est: &OptimismEstimate, noise_var: Option<f64>) {
    row.n_train = est.n_train;
    row.err_train_mean = Some(est.err_train_mean);
    row.err_test_mean = Some(est.err_test_mean);
    row.opt_raw = Some(est.opt_raw);
    row.opt_scaled = est.opt_scaled;
    row.stderr = Some(match (est.opt_scaled, noise_var) {
        (Some(_), Some(s2)) => est.scaled_stderr(s2).unwrap_or(est.stderr_opt),
        _ => est.stderr_opt,
    });
    row.opt_per_n = Some(est.opt_raw / est.n_train as f64);
}

fn synthetic_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    kind: &SignalKind,
    s2: f64,
    seed: u64,
    stream: &SeedStream,
    row: &mut ResultRow,
) -> Result<()> {
    let signal = SignalSpec::new(kind.clone(), s2)?;
    row.signal_kind = signal.kind_name().into();
    row.k_or_coeffs = signal.param_label();
    row.sigma2 = Some(s2);
    let d = signal.input_dim();
    let spec = build_model(&cell.model, cfg, d, stream)?;
    if matches!(cfg.mode, Mode::Simulate | Mode::Compare) {
        let closed_form = !spec.is_stochastic() && !matches!(spec, ModelSpec::Krr { .. });
        let reduction = if cfg.control_variate && closed_form {
            VarianceReduction::PopulationReference
        } else {
            VarianceReduction::None
        };
        let design = DesignSpec::standard(d)?;
        let est = mc_optimism_with(&signal, &design, &spec, cfg.n_train, cfg.n_test, cfg.num_runs, seed, reduction)?;
        fill(row, &est, Some(s2));
    }
    if matches!(cfg.mode, Mode::Theory | Mode::Compare) && s2 > 0.0 {
        if let Some((v, se)) = theory_for(&signal, &spec, cfg.n_train, cfg.theory_budget, &stream.child("theory"))? {
            row.theory_value = Some(v);
            row.theory_stderr = Some(se);
        }
    }
    Ok(())
}

fn real_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    data: &Dataset,
    seed: u64,
    stream: &SeedStream,
    row: &mut ResultRow,
) -> Result<()> {
    let spec = build_model(&cell.model, cfg, data.d(), stream)?;
    let est = match cfg.plan {
        ResamplingPlan::HoldOut { .. } => holdout_optimism(data, &spec, &cfg.plan, seed)?,
        ResamplingPlan::KFold { .. } => kfold_optimism(data, &spec, &cfg.plan, seed)?,
    };
    row.num_runs = cfg.plan.num_runs();
    fill(row, &est, data.noise_var);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn theory_mode_delegates_to_closed_form() {
        let c = cfg("mode = theory\nk = 0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1\nsigma2 = 0.05\nmodel = ols\nseed = 1\n");
        let rows = run_grid(&c).unwrap();
        assert_eq!(rows.len(), 11);
        for r in rows {
            let k: f64 = r.k_or_coeffs.parse().unwrap();
            assert_eq!(r.theory_value, Some(fk_closed_form(k, 0.05).unwrap()));
            assert!(r.opt_raw.is_none() && r.is_ok());
        }
    }

    #[test]
    fn simulate_half_is_one() {
        let c = cfg("k = 0.5\nsigma2 = 0.01\nmodel = ols\nnum_runs = 2000\nseed = 3\n");
        let rows = run_grid(&c).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        let (v, se) = (r.opt_scaled.unwrap(), r.stderr.unwrap());
        assert!((v - 1.0).abs() <= (3.0 * se).max(0.05), "{v} ± {se}");
    }

    #[test]
    fn compare_mode_at_quarter() {
        let c = cfg("mode = compare\nk = 0.25\nsigma2 = 0.05\nmodel = ols\nnum_runs = 2000\nseed = 4\n");
        let r = &run_grid(&c).unwrap()[0];
        let t = r.theory_value.unwrap();
        assert!((t - 4.75).abs() < 1e-12);
        assert!((r.opt_scaled.unwrap() - t).abs() <= (3.0 * r.stderr.unwrap()).max(0.05 * t));
    }

    #[test]
    fn grid_isolation() {
        let full = cfg("k = 0, 0.5, 1\nsigma2 = 0.01\nmodel = ols, bended\nnum_runs = 20\nn_train = 30\nseed = 9\n");
        let part = cfg("k = 0, 1\nsigma2 = 0.01\nmodel = ols, bended\nnum_runs = 20\nn_train = 30\nseed = 9\n");
        let a = run_grid(&full).unwrap();
        let b = run_grid(&part).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(&a[0..2], &b[0..2]);
        assert_eq!(&a[4..6], &b[2..4]);
    }

    #[test]
    fn failed_cells_do_not_abort() {
        let c = cfg("k = 0\nsigma2 = 0.01\nmodel = ols, lowrank\nrank = 3\nnum_runs = 4\nn_train = 10\nseed = 2\n");
        let rows = run_grid(&c).unwrap();
        assert!(rows[0].is_ok());
        assert!(rows[1].status.starts_with("error:"), "{}", rows[1].status);
    }

    #[test]
    fn theory_covers_model_families() {
        let s = SignalSpec::piecewise_k(0.0, 0.01).unwrap();
        let st = SeedStream::new(1, 0);
        let c = cfg("seed = 1\n");
        for fam in ["ols+1", "mean", "bended", "ridge", "ridge+1", "lowrank", "krr-linear"] {
            let e = ModelEntry { family: fam.into(), lambda: Some(0.5), rank: Some(1) };
            let spec = build_model(&e, &c, 1, &st).unwrap();
            let t = theory_for(&s, &spec, 100, 2000, &st).unwrap();
            assert!(t.is_some_and(|(v, _)| v.is_finite() && v > 0.0), "{fam}");
        }
        let mlp = build_model(&ModelEntry { family: "mlp".into(), lambda: None, rank: None }, &c, 1, &st).unwrap();
        assert_eq!(theory_for(&s, &mlp, 100, 2000, &st).unwrap(), None);
    }

    #[test]
    fn krr_linear_theory_matches_ridge_scaling() {
        let s = SignalSpec::piecewise_k(0.2, 0.02).unwrap();
        let st = SeedStream::new(5, 0);
        let c = cfg("seed = 1\n");
        let krr = build_model(&ModelEntry { family: "krr-linear".into(), lambda: Some(40.0), rank: None }, &c, 1, &st).unwrap();
        let ridge = build_model(&ModelEntry { family: "ridge".into(), lambda: Some(0.2), rank: None }, &c, 1, &st).unwrap();
        let a = theory_for(&s, &krr, 200, 2000, &st).unwrap().unwrap();
        let b = theory_for(&s, &ridge, 200, 2000, &st).unwrap().unwrap();
        assert!((a.0 - b.0).abs() < 1e-12);
    }
}
