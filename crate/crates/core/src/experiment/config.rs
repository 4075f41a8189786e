//! Line-oriented `key = value` configuration.
//!
//! `#` starts a comment. List keys accept comma-separated values and may be
//! repeated, each occurrence appending. Set-valued keys (`coeffs`, `exp`,
//! `beta`) take one comma-separated set per line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimators::ResamplingPlan;
use crate::models::Optimizer;
use crate::signals::SignalKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Theory,
    Compare,
    RealData,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Theory => "theory",
            Mode::Compare => "compare",
            Mode::RealData => "realdata",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "simulate" => Some(Mode::Simulate),
            "theory" => Some(Mode::Theory),
            "compare" => Some(Mode::Compare),
            "realdata" => Some(Mode::RealData),
            _ => None,
        }
    }
}

/// One model-grid column before the input dimension is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEntry {
    pub family: String,
    pub lambda: Option<f64>,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub signals: Vec<SignalKind>,
    pub sigma2: Vec<f64>,
    pub models: Vec<ModelEntry>,
    pub n_train: usize,
    pub n_test: usize,
    pub num_runs: usize,
    pub seed: Option<u64>,
    pub hidden: Vec<usize>,
    pub width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub dataset: Option<PathBuf>,
    pub target: String,
    pub plan: ResamplingPlan,
    pub theory_budget: usize,
    pub control_variate: bool,
    pub output: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "mode", "signal", "k", "coeffs", "exp", "beta", "sigma2", "model", "lambda", "rank", "hidden", "width",
    "epochs", "learning_rate", "optimizer", "n_train", "n_test", "num_runs", "seed", "dataset", "target",
    "plan", "test_fraction", "folds", "bootstrap", "theory_budget", "control_variate", "output",
];

/// Raw values per key with the line each came from.
type Entries = BTreeMap<String, Vec<(usize, String)>>;

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| err(line, format!("`{key}`: cannot parse `{}`", v.trim())))
}

fn split(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| err(0, format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| err(line, "expected `key = value`"))?;
            let key = k.trim();
            if !KEYS.contains(&key) {
                return Err(err(line, format!("unknown key `{key}`")));
            }
            entries.entry(key.to_string()).or_default().push((line, v.trim().to_string()));
        }
        build(&entries)
    }
}

fn single<'a>(e: &'a Entries, key: &str) -> Result<Option<(usize, &'a str)>> {
    match e.get(key).map(Vec::as_slice) {
        None => Ok(None),
        Some([(l, v)]) => Ok(Some((*l, v.as_str()))),
        Some(many) => Err(err(many[1].0, format!("`{key}` takes a single value"))),
    }
}

fn scalar<T: std::str::FromStr>(e: &Entries, key: &str, default: T) -> Result<T> {
    match single(e, key)? {
        None => Ok(default),
        Some((l, v)) => num(l, key, v),
    }
}

fn list<T: std::str::FromStr>(e: &Entries, key: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (l, v) in e.get(key).into_iter().flatten() {
        for item in split(v) {
            out.push(num(*l, key, item)?);
        }
    }
    Ok(out)
}

fn sets(e: &Entries, key: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    e.get(key)
        .into_iter()
        .flatten()
        .map(|(l, v)| Ok((*l, split(v).map(|s| num(*l, key, s)).collect::<Result<Vec<f64>>>()?)))
        .collect()
}

fn flag(e: &Entries, key: &str, default: bool) -> Result<bool> {
    match single(e, key)? {
        None => Ok(default),
        Some((_, "true" | "yes" | "1")) => Ok(true),
        Some((_, "false" | "no" | "0")) => Ok(false),
        Some((l, v)) => Err(err(l, format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn build(e: &Entries) -> Result<ExperimentConfig> {
    let mode = match single(e, "mode")? {
        None => Mode::Simulate,
        Some((l, v)) => Mode::parse(v).ok_or_else(|| err(l, format!("unknown mode `{v}`")))?,
    };
    let signals = build_signals(e)?;
    let sigma2: Vec<f64> = list(e, "sigma2")?;
    if let Some(bad) = sigma2.iter().find(|s| !(**s >= 0.0)) {
        return Err(err(line_of(e, "sigma2"), format!("sigma2 = {bad} must be >= 0")));
    }
    let models = build_models(e)?;
    let n_train = scalar(e, "n_train", 1000usize)?;
    let n_test = scalar(e, "n_test", n_train)?;
    let optimizer = match single(e, "optimizer")? {
        None | Some((_, "adam")) => Optimizer::Adam,
        Some((_, "sgd")) => Optimizer::SGD_DEFAULT,
        Some((l, v)) => return Err(err(l, format!("unknown optimizer `{v}`"))),
    };
    let num_runs = scalar(e, "num_runs", 10_000usize)?;
    let plan = match single(e, "plan")? {
        None | Some((_, "holdout")) => ResamplingPlan::HoldOut {
            test_fraction: scalar(e, "test_fraction", 0.2)?,
            num_runs,
            bootstrap: flag(e, "bootstrap", true)?,
        },
        Some((_, "kfold")) => ResamplingPlan::KFold { k: scalar(e, "folds", 5usize)?, num_runs },
        Some((l, v)) => return Err(err(l, format!("unknown plan `{v}`"))),
    };
    let cfg = ExperimentConfig {
        mode,
        signals,
        sigma2,
        models,
        n_train,
        n_test,
        num_runs,
        seed: match single(e, "seed")? {
            None => None,
            Some((l, v)) => Some(num(l, "seed", v)?),
        },
        hidden: {
            let h: Vec<usize> = list(e, "hidden")?;
            if h.is_empty() { vec![50, 50] } else { h }
        },
        width: scalar(e, "width", 50usize)?,
        epochs: scalar(e, "epochs", 300usize)?,
        learning_rate: scalar(e, "learning_rate", 0.01)?,
        optimizer,
        dataset: single(e, "dataset")?.map(|(_, v)| PathBuf::from(v)),
        target: single(e, "target")?.map(|(_, v)| v.to_string()).unwrap_or_else(|| "y".into()),
        plan,
        theory_budget: scalar(e, "theory_budget", 100_000usize)?,
        control_variate: flag(e, "control_variate", false)?,
        output: single(e, "output")?.map(|(_, v)| PathBuf::from(v)),
    };
    Ok(cfg)
}

fn line_of(e: &Entries, key: &str) -> usize {
    e.get(key).and_then(|v| v.first()).map_or(0, |(l, _)| *l)
}

fn build_signals(e: &Entries) -> Result<Vec<SignalKind>> {
    let kind = single(e, "signal")?;
    let (line, name) = kind.unwrap_or((0, "fk"));
    let out: Vec<SignalKind> = match name {
        "fk" => list::<f64>(e, "k")?.into_iter().map(|k| SignalKind::PiecewiseK { k }).collect(),
        "poly" => sets(e, "coeffs")?.into_iter().map(|(_, coeffs)| SignalKind::Polynomial { coeffs }).collect(),
        "exp" => sets(e, "exp")?
            .into_iter()
            .map(|(l, v)| match v.as_slice() {
                [a, b] => Ok(SignalKind::ExpBump { a: *a, b: *b }),
                _ => Err(err(l, "`exp` takes `a, b`")),
            })
            .collect::<Result<_>>()?,
        "linear" => sets(e, "beta")?.into_iter().map(|(_, beta)| SignalKind::LinearMap { beta }).collect(),
        other => return Err(err(line, format!("unknown signal `{other}`"))),
    };
    Ok(out)
}

const FAMILIES: &[&str] =
    &["mean", "ols", "ols+1", "ridge", "ridge+1", "bended", "lowrank", "krr-linear", "krr-ntk", "mlp", "ntk"];

fn build_models(e: &Entries) -> Result<Vec<ModelEntry>> {
    let lambdas: Vec<f64> = list(e, "lambda")?;
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0)) {
        return Err(err(line_of(e, "lambda"), format!("lambda = {bad} must be >= 0")));
    }
    let lambdas = if lambdas.is_empty() { vec![0.0] } else { lambdas };
    let ranks: Vec<usize> = list(e, "rank")?;
    let ranks = if ranks.is_empty() { vec![1] } else { ranks };
    let mut out = Vec::new();
    for (l, v) in e.get("model").into_iter().flatten() {
        for fam in split(v) {
            if !FAMILIES.contains(&fam) {
                return Err(err(*l, format!("unknown model `{fam}`")));
            }
            let entry = |lambda, rank| ModelEntry { family: fam.to_string(), lambda, rank };
            match fam {
                "ridge" | "ridge+1" | "krr-linear" | "krr-ntk" | "ntk" => {
                    out.extend(lambdas.iter().map(|&la| entry(Some(la), None)))
                }
                "lowrank" => out.extend(ranks.iter().map(|&r| entry(None, Some(r)))),
                _ => out.push(entry(None, None)),
            }
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Checks that the grids a mode needs are present.
    pub fn validate(&self) -> Result<()> {
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(err(0, msg)) };
        need(self.seed.is_some(), "no seed: set `seed` or pass --seed")?;
        need(!self.models.is_empty(), "no `model` given")?;
        need(self.n_train > 0 && self.n_test > 0, "n_train and n_test must be >= 1")?;
        match self.mode {
            Mode::RealData => need(self.dataset.is_some(), "realdata mode needs `dataset`")?,
            _ => {
                need(!self.signals.is_empty(), "empty signal grid")?;
                need(!self.sigma2.is_empty(), "empty `sigma2` grid")?;
            }
        }
        if self.mode != Mode::Theory {
            need(self.num_runs >= 2, "num_runs must be >= 2")?;
        }
        Ok(())
    }
}
