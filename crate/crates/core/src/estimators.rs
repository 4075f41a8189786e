//! Empirical optimism: Monte-Carlo regeneration of synthetic datasets,
//! hold-out and k-fold resampling of a fixed dataset.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{fit, predict, FittedModel, ModelSpec, Payload};
use crate::numcore::{derive_stream, mean, SeedStream};
use crate::signals::{sample_dataset_with, Dataset, DesignSpec, SignalSpec};

/// Aggregated train/test errors and their gap.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimismEstimate {
    pub err_train_mean: f64,
    pub err_test_mean: f64,
    /// Always `err_test_mean − err_train_mean`.
    pub opt_raw: f64,
    pub opt_scaled: Option<f64>,
    pub stderr_opt: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub num_runs: usize,
}

impl OptimismEstimate {
    fn from_runs(train: &[f64], test: &[f64], n_train: usize, n_test: usize, noise_var: Option<f64>) -> Self {
        let err_train_mean = mean(train);
        let err_test_mean = mean(test);
        let opt_raw = err_test_mean - err_train_mean;
        let gaps: Vec<f64> = test.iter().zip(train).map(|(a, b)| a - b).collect();
        let (_, stderr_opt) = crate::numcore::mean_stderr(&gaps);
        let opt_scaled = noise_var.and_then(|s| scale_optimism(opt_raw, n_train, s).ok());
        Self { err_train_mean, err_test_mean, opt_raw, opt_scaled, stderr_opt, n_train, n_test, num_runs: train.len() }
    }

    /// Standard error on the scaled value.
    pub fn scaled_stderr(&self, noise_var: f64) -> Option<f64> {
        scale_optimism(self.stderr_opt, self.n_train, noise_var).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResamplingPlan {
    /// Random split; the test part is bootstrapped to its own size unless `bootstrap` is off.
    HoldOut { test_fraction: f64, num_runs: usize, bootstrap: bool },
    /// Fold 0 tests; every other fold trains in turn.
    KFold { k: usize, num_runs: usize },
}

impl ResamplingPlan {
    pub fn holdout(num_runs: usize) -> Self {
        ResamplingPlan::HoldOut { test_fraction: 0.2, num_runs, bootstrap: true }
    }

    pub fn num_runs(&self) -> usize {
        match self {
            ResamplingPlan::HoldOut { num_runs, .. } | ResamplingPlan::KFold { num_runs, .. } => *num_runs,
        }
    }
}

/// Variance reduction for [`mc_optimism_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceReduction {
    None,
    /// Subtract the test−train gap of a fixed reference predictor. That gap
    /// has mean zero, so the estimate stays unbiased.
    PopulationReference,
}

/// Rows in the pilot sample that fits the reference predictor.
const PILOT_ROWS: usize = 100_000;

/// `(1/n)·Σ(yᵢ − ŷᵢ)²`.
pub fn mse(model: &FittedModel, data: &Dataset) -> Result<f64> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let pred = predict(model, &data.x)?;
    let sq: Vec<f64> = pred.iter().zip(&data.y).map(|(p, y)| (y - p).powi(2)).collect();
    Ok(mean(&sq))
}

/// `opt_raw · n_train / (2σ²)`.
pub fn scale_optimism(opt_raw: f64, n_train: usize, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::ZeroNoiseVariance);
    }
    Ok(opt_raw * n_train as f64 / (2.0 * sigma2))
}

/// Inverse of [`scale_optimism`].
pub fn unscale_optimism(opt_scaled: f64, n_train: usize, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::ZeroNoiseVariance);
    }
    Ok(opt_scaled * 2.0 * sigma2 / n_train as f64)
}

pub fn mc_optimism(
    signal: &SignalSpec,
    design: &DesignSpec,
    spec: &ModelSpec,
    n_train: usize,
    n_test: usize,
    num_runs: usize,
    master_seed: u64,
) -> Result<OptimismEstimate> {
    mc_optimism_with(signal, design, spec, n_train, n_test, num_runs, master_seed, VarianceReduction::None)
}

/// Run `r` uses stream `r`: train rows, then test rows, from one generator;
/// the model draws from a child stream.
#[allow(clippy::too_many_arguments)]
pub fn mc_optimism_with(
    signal: &SignalSpec,
    design: &DesignSpec,
    spec: &ModelSpec,
    n_train: usize,
    n_test: usize,
    num_runs: usize,
    master_seed: u64,
    reduction: VarianceReduction,
) -> Result<OptimismEstimate> {
    if num_runs < 2 {
        return Err(Error::InvalidArgument(format!("num_runs = {num_runs} must be >= 2")));
    }
    if n_train == 0 || n_test == 0 {
        return Err(Error::EmptyDataset);
    }
    spec.validate()?;
    let reference = match reduction {
        VarianceReduction::None => None,
        VarianceReduction::PopulationReference => Some(reference_predictor(signal, design, spec, master_seed)?),
    };
    let runs: Vec<(f64, f64)> = (0..num_runs as u64)
        .into_par_iter()
        .map(|r| {
            let stream = derive_stream(master_seed, r);
            let mut rng = stream.rng();
            let train = sample_dataset_with(signal, design, n_train, &mut rng)?;
            let test = sample_dataset_with(signal, design, n_test, &mut rng)?;
            let model = fit(spec, &train, &stream.child("model"))?;
            let (tr, te) = (mse(&model, &train)?, mse(&model, &test)?);
            match &reference {
                None => Ok((tr, te)),
                Some(m) => Ok((tr + mse(m, &test)? - mse(m, &train)?, te)),
            }
        })
        .collect::<Result<_>>()?;
    let (train, test): (Vec<f64>, Vec<f64>) = runs.into_iter().unzip();
    Ok(OptimismEstimate::from_runs(&train, &test, n_train, n_test, Some(signal.noise_var)))
}

/// The same family fitted once on a large pilot sample, standing in for
/// the population fit. Closed-form linear families only.
fn reference_predictor(signal: &SignalSpec, design: &DesignSpec, spec: &ModelSpec, master_seed: u64) -> Result<FittedModel> {
    if spec.is_stochastic() || matches!(spec, ModelSpec::Krr { .. }) {
        return Err(Error::UnsupportedCombination(format!("no reference predictor for model {}", spec.name())));
    }
    let pilot = SeedStream::new(master_seed, 0).child("pilot");
    let data = sample_dataset_with(signal, design, PILOT_ROWS, &mut pilot.rng())?;
    let model = fit(spec, &data, &pilot)?;
    debug_assert!(matches!(model.payload, Payload::Linear { .. }));
    Ok(model)
}

fn check_train_rows(spec: &ModelSpec, rows: usize, d: usize) -> Result<()> {
    let needed = spec.min_train_rows(d).max(1);
    if rows < needed {
        return Err(Error::FoldTooSmall { rows, needed });
    }
    Ok(())
}

/// Train and test row indices of one hold-out run. Test rows are already bootstrapped.
pub fn holdout_indices(n: usize, test_fraction: f64, bootstrap: bool, stream: &SeedStream) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 {
        return Err(Error::TestPartitionEmpty);
    }
    if n_test >= n {
        return Err(Error::FoldTooSmall { rows: 0, needed: 1 });
    }
    let mut rng = stream.rng();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let held = perm.split_off(n - n_test);
    let test = if bootstrap { (0..n_test).map(|_| held[rng.random_range(0..n_test)]).collect() } else { held };
    Ok((perm, test))
}

/// The `k` folds of one k-fold run, sizes differing by at most one.
pub fn kfold_partition(n: usize, k: usize, stream: &SeedStream) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must be in [2, {n}]")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream.rng());
    Ok((0..k).map(|f| perm[f * n / k..(f + 1) * n / k].to_vec()).collect())
}

pub fn holdout_optimism(data: &Dataset, spec: &ModelSpec, plan: &ResamplingPlan, master_seed: u64) -> Result<OptimismEstimate> {
    let ResamplingPlan::HoldOut { test_fraction, num_runs, bootstrap } = *plan else {
        return Err(Error::InvalidArgument("holdout_optimism needs a hold-out plan".into()));
    };
    check_runs(num_runs)?;
    spec.validate()?;
    let (tr0, te0) = holdout_indices(data.n(), test_fraction, bootstrap, &derive_stream(master_seed, 0))?;
    check_train_rows(spec, tr0.len(), data.d())?;
    let runs: Vec<(f64, f64)> = (0..num_runs as u64)
        .into_par_iter()
        .map(|r| {
            let stream = derive_stream(master_seed, r);
            let (tr, te) = holdout_indices(data.n(), test_fraction, bootstrap, &stream)?;
            let train = data.subset(&tr)?;
            let model = fit(spec, &train, &stream.child("model"))?;
            Ok((mse(&model, &train)?, mse(&model, &data.subset(&te)?)?))
        })
        .collect::<Result<_>>()?;
    let (train, test): (Vec<f64>, Vec<f64>) = runs.into_iter().unzip();
    Ok(OptimismEstimate::from_runs(&train, &test, tr0.len(), te0.len(), data.noise_var))
}

pub fn kfold_optimism(data: &Dataset, spec: &ModelSpec, plan: &ResamplingPlan, master_seed: u64) -> Result<OptimismEstimate> {
    let ResamplingPlan::KFold { k, num_runs } = *plan else {
        return Err(Error::InvalidArgument("kfold_optimism needs a k-fold plan".into()));
    };
    check_runs(num_runs)?;
    spec.validate()?;
    let n = data.n();
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must be in [2, {n}]")));
    }
    // The smallest fold has n/k rows.
    check_train_rows(spec, n / k, data.d())?;
    let runs: Vec<(f64, f64)> = (0..num_runs as u64)
        .into_par_iter()
        .map(|r| {
            let stream = derive_stream(master_seed, r);
            let folds = kfold_partition(n, k, &stream)?;
            let test = data.subset(&folds[0])?;
            let mut tr = Vec::with_capacity(k - 1);
            let mut te = Vec::with_capacity(k - 1);
            for (j, fold) in folds.iter().enumerate().skip(1) {
                let train = data.subset(fold)?;
                let model = fit(spec, &train, &stream.child(&format!("fold{j}")))?;
                tr.push(mse(&model, &train)?);
                te.push(mse(&model, &test)?);
            }
            Ok((mean(&tr), mean(&te)))
        })
        .collect::<Result<_>>()?;
    let (train, test): (Vec<f64>, Vec<f64>) = runs.into_iter().unzip();
    Ok(OptimismEstimate::from_runs(&train, &test, n / k, n / k, data.noise_var))
}

fn check_runs(num_runs: usize) -> Result<()> {
    if num_runs == 0 {
        return Err(Error::InvalidArgument("num_runs must be >= 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit_mean, fit_ols};
    use crate::numcore::DenseMatrix;
    use crate::signals::sample_dataset;
    use crate::theory::fk_closed_form;

    fn ds(x: &[f64], y: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        Dataset::new(DenseMatrix::from_rows(&rows).unwrap(), y.to_vec(), None).unwrap()
    }

    fn one_d() -> DesignSpec {
        DesignSpec::standard(1).unwrap()
    }

    #[test]
    fn mse_examples() {
        let d = ds(&[1.0, 2.0], &[1.0, -1.0]);
        let zero = fit_mean(&ds(&[0.0, 0.0], &[0.0, 0.0])).unwrap();
        assert_eq!(mse(&zero, &d).unwrap(), 1.0);
        let sat = ds(&[2.0], &[3.0]);
        assert!(mse(&fit_ols(&sat, false).unwrap(), &sat).unwrap() < 1e-24);
        let wide = Dataset::new(DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap(), vec![1.0], None).unwrap();
        assert!(matches!(mse(&fit_ols(&sat, false).unwrap(), &wide), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn scaling() {
        assert!((scale_optimism(0.002, 1000, 0.01).unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(scale_optimism(0.0, 10, 0.3).unwrap(), 0.0);
        assert_eq!(scale_optimism(1.0, 10, 0.0), Err(Error::ZeroNoiseVariance));
        for raw in [1e-9, 0.123, 7.5] {
            let back = unscale_optimism(scale_optimism(raw, 37, 0.07).unwrap(), 37, 0.07).unwrap();
            assert!((back - raw).abs() <= 1e-15 * raw);
        }
    }

    #[test]
    fn noiseless_well_specified_has_no_optimism() {
        let s = SignalSpec::linear(vec![1.0, -2.0], 0.0).unwrap();
        let e = mc_optimism(&s, &DesignSpec::standard(2).unwrap(), &ModelSpec::Ols { intercept: false }, 20, 20, 10, 1).unwrap();
        assert!(e.opt_raw.abs() < 1e-10);
        assert_eq!(e.opt_scaled, None);
        assert_eq!(e.opt_raw, e.err_test_mean - e.err_train_mean);
    }

    #[test]
    fn fk_endpoints_match_closed_form() {
        for (k, runs) in [(1.0, 2000), (0.0, 2000)] {
            let s = SignalSpec::piecewise_k(k, 0.01).unwrap();
            let e = mc_optimism(&s, &one_d(), &ModelSpec::Ols { intercept: false }, 1000, 1000, runs, 5).unwrap();
            let want = fk_closed_form(k, 0.01).unwrap();
            let got = e.opt_scaled.unwrap();
            let se = e.scaled_stderr(0.01).unwrap();
            assert!((got - want).abs() <= (3.0 * se).max(0.05 * want), "k={k} got {got} ± {se}");
        }
    }

    #[test]
    fn control_variate_is_unbiased_and_tighter() {
        let s = SignalSpec::piecewise_k(0.0, 0.01).unwrap();
        let spec = ModelSpec::Ols { intercept: false };
        let plain = mc_optimism(&s, &one_d(), &spec, 200, 200, 400, 8).unwrap();
        let cv = mc_optimism_with(&s, &one_d(), &spec, 200, 200, 400, 8, VarianceReduction::PopulationReference).unwrap();
        assert!(cv.stderr_opt < 0.5 * plain.stderr_opt, "{} vs {}", cv.stderr_opt, plain.stderr_opt);
        assert_eq!(cv.err_test_mean, plain.err_test_mean);
        let want = fk_closed_form(0.0, 0.01).unwrap();
        let se = cv.scaled_stderr(0.01).unwrap();
        assert!((cv.opt_scaled.unwrap() - want).abs() <= (4.0 * se).max(0.05 * want));
        let mlp = ModelSpec::Mlp(Default::default());
        assert!(mc_optimism_with(&s, &one_d(), &mlp, 20, 20, 2, 8, VarianceReduction::PopulationReference).is_err());
    }

    #[test]
    fn stderr_halves_with_four_times_the_runs() {
        let s = SignalSpec::piecewise_k(0.2, 0.05).unwrap();
        let spec = ModelSpec::Ols { intercept: true };
        let a = mc_optimism(&s, &one_d(), &spec, 50, 50, 1000, 3).unwrap();
        let b = mc_optimism(&s, &one_d(), &spec, 50, 50, 2000, 3).unwrap();
        let ratio = b.stderr_opt / a.stderr_opt;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(ratio >= 0.8 * r && ratio <= 1.25 * r, "ratio {ratio}");
    }

    #[test]
    fn holdout_noiseless_linear_is_zero() {
        let s = SignalSpec::linear(vec![2.0, 1.0], 0.0).unwrap();
        let data = sample_dataset(&s, &DesignSpec::standard(2).unwrap(), 50, &derive_stream(4, 0)).unwrap();
        let e = holdout_optimism(&data, &ModelSpec::Ols { intercept: false }, &ResamplingPlan::holdout(20), 4).unwrap();
        assert!(e.opt_raw.abs() < 1e-8);
        assert_eq!(e.n_test, 10);
        assert_eq!(e.opt_scaled, None);
    }

    #[test]
    fn holdout_duplicated_rows_interpolating_model() {
        let plan = ResamplingPlan::HoldOut { test_fraction: 0.2, num_runs: 30, bootstrap: true };
        let repeated = ds(&[2.0; 10], &[6.0; 10]);
        let e = holdout_optimism(&repeated, &ModelSpec::Ols { intercept: false }, &plan, 9).unwrap();
        assert!(e.opt_raw.abs() < 1e-20);
        let e = holdout_optimism(&repeated, &ModelSpec::Mean, &plan, 9).unwrap();
        assert_eq!(e.opt_raw, 0.0);
    }

    #[test]
    fn holdout_matches_enumeration() {
        let data = ds(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]);
        let plan = ResamplingPlan::HoldOut { test_fraction: 0.25, num_runs: 5, bootstrap: true };
        let e = holdout_optimism(&data, &ModelSpec::Mean, &plan, 21).unwrap();
        let (mut gaps, mut trains) = (0.0, 0.0);
        for r in 0..5 {
            let (tr, te) = holdout_indices(4, 0.25, true, &derive_stream(21, r)).unwrap();
            assert_eq!(tr.len(), 3);
            let m: f64 = tr.iter().map(|&i| data.y[i]).sum::<f64>() / 3.0;
            let train: f64 = tr.iter().map(|&i| (data.y[i] - m).powi(2)).sum::<f64>() / 3.0;
            let test = (data.y[te[0]] - m).powi(2);
            gaps += test - train;
            trains += train;
        }
        assert!((e.opt_raw - gaps / 5.0).abs() < 1e-12);
        assert!((e.err_train_mean - trains / 5.0).abs() < 1e-12);
    }

    #[test]
    fn holdout_errors() {
        let data = ds(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        let plan = ResamplingPlan::HoldOut { test_fraction: 0.1, num_runs: 3, bootstrap: false };
        assert_eq!(holdout_optimism(&data, &ModelSpec::Mean, &plan, 0), Err(Error::TestPartitionEmpty));
    }

    #[test]
    fn kfold_realizable_and_too_small() {
        let data = ds(&[1.0, -2.0, 3.0, 0.5], &[2.0, -4.0, 6.0, 1.0]);
        let plan = ResamplingPlan::KFold { k: 2, num_runs: 4 };
        let e = kfold_optimism(&data, &ModelSpec::Ols { intercept: false }, &plan, 2).unwrap();
        assert!(e.opt_raw.abs() < 1e-8);
        let wide = Dataset::new(DenseMatrix::from_fn(6, 3, |i, j| (i * 3 + j) as f64).unwrap(), vec![0.0; 6], None).unwrap();
        let r = kfold_optimism(&wide, &ModelSpec::Ols { intercept: false }, &ResamplingPlan::KFold { k: 6, num_runs: 1 }, 0);
        assert_eq!(r, Err(Error::FoldTooSmall { rows: 1, needed: 3 }));
    }

    #[test]
    fn kfold_matches_enumeration() {
        let data = ds(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.0, 10.0, 10.0]);
        let plan = ResamplingPlan::KFold { k: 2, num_runs: 1 };
        let e = kfold_optimism(&data, &ModelSpec::Mean, &plan, 13).unwrap();
        let folds = kfold_partition(4, 2, &derive_stream(13, 0)).unwrap();
        let mean_of = |idx: &[usize]| idx.iter().map(|&i| data.y[i]).sum::<f64>() / idx.len() as f64;
        let m = mean_of(&folds[1]);
        let sq = |idx: &[usize]| idx.iter().map(|&i| (data.y[i] - m).powi(2)).sum::<f64>() / idx.len() as f64;
        assert!((e.err_train_mean - sq(&folds[1])).abs() < 1e-12);
        assert!((e.err_test_mean - sq(&folds[0])).abs() < 1e-12);
        let mut all: Vec<usize> = folds.concat();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = SignalSpec::piecewise_k(0.3, 0.05).unwrap();
        let spec = ModelSpec::Bended;
        let run = |t: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| mc_optimism(&s, &one_d(), &spec, 40, 40, 64, 17).unwrap())
        };
        assert_eq!(run(1), run(6));
    }

    #[test]
    fn positivity_for_unregularized_fits() {
        for k in [0.0, 0.3, 0.5, 0.8] {
            let s = SignalSpec::piecewise_k(k, 0.05).unwrap();
            for spec in [ModelSpec::Ols { intercept: true }, ModelSpec::Bended] {
                let e = mc_optimism(&s, &one_d(), &spec, 100, 100, 300, 23).unwrap();
                assert!(e.opt_raw >= -3.0 * e.stderr_opt, "k={k} {}", spec.name());
            }
        }
    }
}
