//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, keys are dotted and unknown keys
//! are rejected. Lists are comma separated. Every key except `model.name` has a
//! default; defaults that depend on other keys (θ₀ box, slope window, Poisson
//! grid) are resolved at parse time so the echoed configuration is complete.
//!
//! | key | default |
//! |-----|---------|
//! | `experiment` | set by the subcommand |
//! | `model.name` | required: `ou`, `linear`, `affine` or `bounded-link` |
//! | `model.theta_star` | `1` (`linear`: required, row-major d×d) |
//! | `model.rate`, `model.level` | `1`, `0` (`affine` only) |
//! | `noise.sigma` | `1` (scalar, or row-major m×m) |
//! | `schedule.c_alpha`, `schedule.c0` | `4`, `1` |
//! | `integrator.dt`, `integrator.burn_in`, `integrator.x0` | `0.005`, `2000`, zeros |
//! | `engine.horizon`, `engine.checkpoints` | `2000`, `60` |
//! | `engine.theta0_lo`, `engine.theta0_hi` | θ* ∓ 1 |
//! | `engine.theta_bound` | `1e6` |
//! | `run.n_reps`, `run.master_seed`, `run.parallelism` | `200`, `0`, `0` (all cores) |
//! | `output.dir` | `out` |
//! | `rate.p` | `2,4` |
//! | `rate.window_lo`, `rate.window_hi` | T/100, T |
//! | `rate.slope_tolerance` | `(2p − 1)/20` per entry of `rate.p` |
//! | `rate.oracle_from`, `rate.oracle_tolerance` | `100`, `0.15` |
//! | `clt.t_eval`, `clt.variance_band` | T, `0.15` |
//! | `covariance.tol`, `covariance.agreement` | `1e-10`, `1e-8` |
//! | `poisson.rhs` | `centred-square` or `objective-gradient` |
//! | `poisson.theta`, `poisson.component` | θ* + 0.5, `0` |
//! | `poisson.grid_lo`, `poisson.grid_hi`, `poisson.grid_n` | ±6 stationary sd, `4001` |
//! | `poisson.residual_limit`, `poisson.closed_form_range` | `1e-4`, `5` |
//! | `simulate.n_steps`, `simulate.stride` | (T − 1)/dt, `100` |
//! | `simulate.replay`, `simulate.theta0` | none, `engine.theta0_lo` |
//! | `estimate.dump` | `true` |
//! | `sweep.c_alpha`, `sweep.tolerance` | `0.8,4`, `0.15` |

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sgdct_core::engine::EngineConfig;
use sgdct_core::model::{AffineMeanReversion, BoundedLink, LinearFamily, ScalarOu};
use sgdct_core::poisson::Grid1D;
use sgdct_core::sde::{IntegratorConfig, DEFAULT_BURN_IN, DEFAULT_DT};
use sgdct_core::{BuiltinModel, DriftModel, Matrix, NoiseSpec, ParameterVector, ScheduleSpec, StateVector};

use crate::error::{Error, Result};

const KEYS: &[&str] = &[
    "experiment",
    "model.name",
    "model.theta_star",
    "model.rate",
    "model.level",
    "noise.sigma",
    "schedule.c_alpha",
    "schedule.c0",
    "integrator.dt",
    "integrator.burn_in",
    "integrator.x0",
    "engine.horizon",
    "engine.checkpoints",
    "engine.theta0_lo",
    "engine.theta0_hi",
    "engine.theta_bound",
    "run.n_reps",
    "run.master_seed",
    "run.parallelism",
    "output.dir",
    "rate.p",
    "rate.window_lo",
    "rate.window_hi",
    "rate.slope_tolerance",
    "rate.oracle_from",
    "rate.oracle_tolerance",
    "clt.t_eval",
    "clt.variance_band",
    "covariance.tol",
    "covariance.agreement",
    "poisson.rhs",
    "poisson.theta",
    "poisson.component",
    "poisson.grid_lo",
    "poisson.grid_hi",
    "poisson.grid_n",
    "poisson.residual_limit",
    "poisson.closed_form_range",
    "simulate.n_steps",
    "simulate.stride",
    "simulate.replay",
    "simulate.theta0",
    "estimate.dump",
    "sweep.c_alpha",
    "sweep.tolerance",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    VerifyRate,
    VerifyClt,
    PredictCovariance,
    PoissonSolve,
    Simulate,
    Estimate,
    RegimeSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::VerifyRate,
        Experiment::VerifyClt,
        Experiment::PredictCovariance,
        Experiment::PoissonSolve,
        Experiment::Simulate,
        Experiment::Estimate,
        Experiment::RegimeSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyRate => "verify-rate",
            Experiment::VerifyClt => "verify-clt",
            Experiment::PredictCovariance => "predict-covariance",
            Experiment::PoissonSolve => "poisson-solve",
            Experiment::Simulate => "simulate",
            Experiment::Estimate => "estimate",
            Experiment::RegimeSweep => "regime-sweep",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    Ou { theta_star: f64 },
    Linear { dim: usize, theta_star: Vec<f64> },
    Affine { rate: f64, level: f64 },
    BoundedLink { theta_star: f64 },
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Ou { .. } => "ou",
            ModelConfig::Linear { .. } => "linear",
            ModelConfig::Affine { .. } => "affine",
            ModelConfig::BoundedLink { .. } => "bounded-link",
        }
    }

    pub fn build(&self) -> Result<BuiltinModel> {
        Ok(match self {
            ModelConfig::Ou { theta_star } => BuiltinModel::Ou(ScalarOu::new(*theta_star)?),
            ModelConfig::Linear { dim, theta_star } => BuiltinModel::Linear(LinearFamily::new(*dim, theta_star.clone())?),
            ModelConfig::Affine { rate, level } => BuiltinModel::Affine(AffineMeanReversion::new(*rate, *level)?),
            ModelConfig::BoundedLink { theta_star } => BuiltinModel::BoundedLink(BoundedLink::new(*theta_star)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonRhs {
    /// `G(x) = E_π[x²] − x²`, the reference problem with a closed form for OU.
    CentredSquare,
    /// `G(x) = ∂_c ḡ(θ) − ∂_c g(x, θ)`, the right-hand side behind h̄.
    ObjectiveGradient,
}

impl PoissonRhs {
    fn name(self) -> &'static str {
        match self {
            PoissonRhs::CentredSquare => "centred-square",
            PoissonRhs::ObjectiveGradient => "objective-gradient",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateConfig {
    pub p: Vec<f64>,
    pub window: (f64, f64),
    pub slope_tolerance: Vec<f64>,
    pub oracle_from: f64,
    pub oracle_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltConfig {
    pub t_eval: f64,
    pub variance_band: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceConfig {
    pub tol: f64,
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonConfig {
    pub rhs: PoissonRhs,
    pub theta: Vec<f64>,
    pub component: usize,
    /// `(lo, hi, n)`; only resolved for scalar-state models.
    pub grid: Option<(f64, f64, usize)>,
    pub residual_limit: f64,
    pub closed_form_range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub n_steps: u64,
    pub stride: u64,
    pub replay: Option<PathBuf>,
    pub theta0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub c_alpha: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelConfig,
    pub noise_sigma: Vec<f64>,
    pub c_alpha: f64,
    pub c0: f64,
    pub dt: f64,
    pub burn_in: u64,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub checkpoints: usize,
    pub theta0_lo: Vec<f64>,
    pub theta0_hi: Vec<f64>,
    pub theta_bound: f64,
    pub n_reps: usize,
    pub master_seed: u64,
    pub parallelism: usize,
    pub output_dir: PathBuf,
    pub rate: RateConfig,
    pub clt: CltConfig,
    pub covariance: CovarianceConfig,
    pub poisson: PoissonConfig,
    pub simulate: SimulateConfig,
    pub estimate_dump: bool,
    pub sweep: SweepConfig,
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::parse_str(&text, None)
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn range(key: &str, line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Range {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Syntax {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if value.is_empty() {
                return Err(Error::Syntax {
                    line,
                    message: format!("`{key}` has an empty value"),
                });
            }
            if let Some((_, first)) = map.get(key) {
                return Err(Error::DuplicateKey {
                    line,
                    key: key.to_string(),
                    first: *first,
                });
            }
            map.insert(key.to_string(), (value.to_string(), line));
        }
        Ok(Entries { map })
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|(_, l)| *l)
    }

    fn typed<T>(&self, key: &str, expected: &'static str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((value, line)) => parse(value).map(Some).ok_or_else(|| Error::Type {
                line,
                key: key.to_string(),
                expected,
                value: value.to_string(),
            }),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.typed(key, "a finite number", parse_f64)
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.typed(key, "a comma-separated list of finite numbers", |s| {
            s.split(',').map(|p| parse_f64(p.trim())).collect()
        })
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.typed(key, "a nonnegative integer", |s| s.parse().ok())
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.typed(key, "a 64-bit unsigned integer", |s| match s.strip_prefix("0x") {
            Some(hex) => u64::from_str_radix(hex, 16).ok(),
            None => s.parse().ok(),
        })
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.typed(key, "true or false", |s| s.parse().ok())
    }

    fn string(&self, key: &str) -> Option<String> {
        self.raw(key).map(|(v, _)| v.to_string())
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key)?.unwrap_or(default);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(range(key, self.line(key), format!("must be positive, got {v}")))
        }
    }

    fn list_of_len(&self, key: &str, len: usize, default: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>> {
        match self.list(key)? {
            None => Ok(default()),
            Some(v) if v.len() == len => Ok(v),
            Some(v) => Err(range(key, self.line(key), format!("expected {len} entries, got {}", v.len()))),
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl ExperimentConfig {
    /// Parses configuration text. `experiment` overrides the `experiment` key.
    pub fn parse_str(text: &str, experiment: Option<Experiment>) -> Result<Self> {
        let e = Entries::parse(text)?;

        let experiment = match experiment {
            Some(x) => x,
            None => {
                let (name, line) = e.raw("experiment").ok_or(Error::MissingKey("experiment"))?;
                name.parse().map_err(|_| Error::Type {
                    line,
                    key: "experiment".into(),
                    expected: "an experiment name",
                    value: name.to_string(),
                })?
            }
        };

        let model = Self::parse_model(&e)?;
        let built = model.build()?;
        let (k, m) = (built.param_dim(), built.state_dim());
        let theta_star = built.true_theta().map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; k]);

        let noise_sigma = e.list("noise.sigma")?.unwrap_or_else(|| vec![1.0]);
        if noise_sigma.len() != 1 && noise_sigma.len() != m * m {
            return Err(range(
                "noise.sigma",
                e.line("noise.sigma"),
                format!("expected 1 or {} entries, got {}", m * m, noise_sigma.len()),
            ));
        }

        let c_alpha = e.positive("schedule.c_alpha", 4.0)?;
        let c0 = e.f64("schedule.c0")?.unwrap_or(1.0);
        if c0 < 0.0 {
            return Err(range("schedule.c0", e.line("schedule.c0"), format!("must be nonnegative, got {c0}")));
        }
        let dt = e.positive("integrator.dt", DEFAULT_DT)?;
        if dt > 1.0 {
            return Err(range("integrator.dt", e.line("integrator.dt"), format!("must lie in (0, 1], got {dt}")));
        }
        let burn_in = e.u64("integrator.burn_in")?.unwrap_or(DEFAULT_BURN_IN);
        let x0 = e.list_of_len("integrator.x0", m, || vec![0.0; m])?;

        let horizon = e.f64("engine.horizon")?.unwrap_or(2000.0);
        if horizon < 1.0 {
            return Err(range("engine.horizon", e.line("engine.horizon"), format!("must be at least 1, got {horizon}")));
        }
        let checkpoints = e.usize("engine.checkpoints")?.unwrap_or(sgdct_core::engine::DEFAULT_CHECKPOINTS);
        if checkpoints < 2 {
            return Err(range("engine.checkpoints", e.line("engine.checkpoints"), "need at least 2 checkpoints"));
        }
        let theta0_lo = e.list_of_len("engine.theta0_lo", k, || theta_star.iter().map(|t| t - 1.0).collect())?;
        let theta0_hi = e.list_of_len("engine.theta0_hi", k, || theta_star.iter().map(|t| t + 1.0).collect())?;
        let theta_bound = e.positive("engine.theta_bound", sgdct_core::engine::DEFAULT_THETA_BOUND)?;

        let n_reps = e.usize("run.n_reps")?.unwrap_or(200);
        if n_reps < 2 {
            return Err(range("run.n_reps", e.line("run.n_reps"), format!("need at least 2 replications, got {n_reps}")));
        }
        let master_seed = e.u64("run.master_seed")?.unwrap_or(0);
        let parallelism = e.usize("run.parallelism")?.unwrap_or(0);
        let output_dir = PathBuf::from(e.string("output.dir").unwrap_or_else(|| "out".into()));

        let p = e.list("rate.p")?.unwrap_or_else(|| vec![2.0, 4.0]);
        if let Some(bad) = p.iter().find(|p| **p < 1.0) {
            return Err(range("rate.p", e.line("rate.p"), format!("moment orders must be >= 1, got {bad}")));
        }
        let window = (
            e.f64("rate.window_lo")?.unwrap_or(horizon / 100.0),
            e.f64("rate.window_hi")?.unwrap_or(horizon),
        );
        if !(window.0 < window.1) {
            return Err(range("rate.window_lo", e.line("rate.window_lo"), "window must satisfy lo < hi"));
        }
        let slope_tolerance = e.list_of_len("rate.slope_tolerance", p.len(), || p.iter().map(|p| (2.0 * p - 1.0) / 20.0).collect())?;
        let rate = RateConfig {
            p,
            window,
            slope_tolerance,
            oracle_from: e.f64("rate.oracle_from")?.unwrap_or(100.0),
            oracle_tolerance: e.positive("rate.oracle_tolerance", 0.15)?,
        };

        let clt = CltConfig {
            t_eval: e.f64("clt.t_eval")?.unwrap_or(horizon),
            variance_band: e.positive("clt.variance_band", 0.15)?,
        };
        let covariance = CovarianceConfig {
            tol: e.positive("covariance.tol", 1e-10)?,
            agreement: e.positive("covariance.agreement", 1e-8)?,
        };

        let rhs = match e.raw("poisson.rhs") {
            None | Some(("centred-square", _)) => PoissonRhs::CentredSquare,
            Some(("objective-gradient", _)) => PoissonRhs::ObjectiveGradient,
            Some((value, line)) => {
                return Err(Error::Type {
                    line,
                    key: "poisson.rhs".into(),
                    expected: "centred-square or objective-gradient",
                    value: value.into(),
                })
            }
        };
        let component = e.usize("poisson.component")?.unwrap_or(0);
        if component >= k {
            return Err(range("poisson.component", e.line("poisson.component"), format!("must be below {k}")));
        }
        let grid = Self::parse_grid(&e, &built, &noise_sigma)?;
        let poisson = PoissonConfig {
            rhs,
            theta: e.list_of_len("poisson.theta", k, || theta_star.iter().map(|t| t + 0.5).collect())?,
            component,
            grid,
            residual_limit: e.positive("poisson.residual_limit", 1e-4)?,
            closed_form_range: e.positive("poisson.closed_form_range", 5.0)?,
        };

        let simulate = SimulateConfig {
            n_steps: e.u64("simulate.n_steps")?.unwrap_or(((horizon - 1.0) / dt).round().max(1.0) as u64),
            stride: e.u64("simulate.stride")?.unwrap_or(100).max(1),
            replay: e.string("simulate.replay").map(PathBuf::from),
            theta0: e.list_of_len("simulate.theta0", k, || theta0_lo.clone())?,
        };
        if simulate.n_steps == 0 {
            return Err(range("simulate.n_steps", e.line("simulate.n_steps"), "need at least one step"));
        }

        let sweep = SweepConfig {
            c_alpha: e.list("sweep.c_alpha")?.unwrap_or_else(|| vec![0.8, 4.0]),
            tolerance: e.positive("sweep.tolerance", 0.15)?,
        };
        if let Some(bad) = sweep.c_alpha.iter().find(|c| **c <= 0.0) {
            return Err(range("sweep.c_alpha", e.line("sweep.c_alpha"), format!("must be positive, got {bad}")));
        }

        let cfg = ExperimentConfig {
            experiment,
            model,
            noise_sigma,
            c_alpha,
            c0,
            dt,
            burn_in,
            x0,
            horizon,
            checkpoints,
            theta0_lo,
            theta0_hi,
            theta_bound,
            n_reps,
            master_seed,
            parallelism,
            output_dir,
            rate,
            clt,
            covariance,
            poisson,
            simulate,
            estimate_dump: e.bool("estimate.dump")?.unwrap_or(true),
            sweep,
        };
        // surface cross-field problems (burn-in length, θ₀ box, checkpoint grid) now
        cfg.engine_config()?;
        Ok(cfg)
    }

    fn parse_model(e: &Entries) -> Result<ModelConfig> {
        let name = e.string("model.name").ok_or(Error::MissingKey("model.name"))?;
        let scalar_theta = |default: f64| -> Result<f64> {
            match e.list("model.theta_star")? {
                None => Ok(default),
                Some(v) if v.len() == 1 => Ok(v[0]),
                Some(v) => Err(range("model.theta_star", e.line("model.theta_star"), format!("expected 1 entry, got {}", v.len()))),
            }
        };
        let reject = |key: &str| -> Result<()> {
            match e.line(key) {
                Some(line) => Err(range(key, Some(line), format!("not a parameter of model `{name}`"))),
                None => Ok(()),
            }
        };
        let model = match name.as_str() {
            "ou" => ModelConfig::Ou { theta_star: scalar_theta(1.0)? },
            "bounded-link" => ModelConfig::BoundedLink { theta_star: scalar_theta(1.0)? },
            "linear" => {
                let theta_star = e.list("model.theta_star")?.ok_or(Error::MissingKey("model.theta_star"))?;
                let dim = (theta_star.len() as f64).sqrt().round() as usize;
                if dim * dim != theta_star.len() {
                    return Err(range(
                        "model.theta_star",
                        e.line("model.theta_star"),
                        format!("linear model needs d*d entries, got {}", theta_star.len()),
                    ));
                }
                ModelConfig::Linear { dim, theta_star }
            }
            "affine" => {
                reject("model.theta_star")?;
                ModelConfig::Affine {
                    rate: e.f64("model.rate")?.unwrap_or(1.0),
                    level: e.f64("model.level")?.unwrap_or(0.0),
                }
            }
            _ => {
                return Err(Error::Type {
                    line: e.line("model.name").unwrap_or(0),
                    key: "model.name".into(),
                    expected: "one of ou, linear, affine, bounded-link",
                    value: name,
                })
            }
        };
        if !matches!(model, ModelConfig::Affine { .. }) {
            reject("model.rate")?;
            reject("model.level")?;
        }
        Ok(model)
    }

    fn parse_grid(e: &Entries, model: &BuiltinModel, sigma: &[f64]) -> Result<Option<(f64, f64, usize)>> {
        let given = (e.f64("poisson.grid_lo")?, e.f64("poisson.grid_hi")?, e.usize("poisson.grid_n")?);
        let default = if model.state_dim() == 1 {
            let noise = NoiseSpec::scalar(sigma[0])?;
            Grid1D::default_for(model, &noise).ok().map(|g| (g.lo(), g.hi(), g.len()))
        } else {
            None
        };
        let grid = match (given, default) {
            ((None, None, None), d) => d,
            ((lo, hi, n), d) => {
                let (dlo, dhi, dn) = d.unwrap_or((-6.0, 6.0, 4001));
                Some((lo.unwrap_or(dlo), hi.unwrap_or(dhi), n.unwrap_or(dn)))
            }
        };
        if let Some((lo, hi, n)) = grid {
            if !(lo < hi) || n < 3 {
                return Err(range("poisson.grid_n", e.line("poisson.grid_n"), "grid needs lo < hi and at least 3 nodes"));
            }
        }
        Ok(grid)
    }

    /// Every key with its resolved value, in documentation order. `output.dir`
    /// and `run.parallelism` are left out: neither affects any result.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out: Vec<(&'static str, String)> = vec![("experiment", self.experiment.name().into()), ("model.name", self.model.name().into())];
        match &self.model {
            ModelConfig::Ou { theta_star } | ModelConfig::BoundedLink { theta_star } => out.push(("model.theta_star", fmt_f64(*theta_star))),
            ModelConfig::Linear { theta_star, .. } => out.push(("model.theta_star", fmt_list(theta_star))),
            ModelConfig::Affine { rate, level } => {
                out.push(("model.rate", fmt_f64(*rate)));
                out.push(("model.level", fmt_f64(*level)));
            }
        }
        out.extend([
            ("noise.sigma", fmt_list(&self.noise_sigma)),
            ("schedule.c_alpha", fmt_f64(self.c_alpha)),
            ("schedule.c0", fmt_f64(self.c0)),
            ("integrator.dt", fmt_f64(self.dt)),
            ("integrator.burn_in", self.burn_in.to_string()),
            ("integrator.x0", fmt_list(&self.x0)),
            ("engine.horizon", fmt_f64(self.horizon)),
            ("engine.checkpoints", self.checkpoints.to_string()),
            ("engine.theta0_lo", fmt_list(&self.theta0_lo)),
            ("engine.theta0_hi", fmt_list(&self.theta0_hi)),
            ("engine.theta_bound", fmt_f64(self.theta_bound)),
            ("run.n_reps", self.n_reps.to_string()),
            ("run.master_seed", self.master_seed.to_string()),
            ("rate.p", fmt_list(&self.rate.p)),
            ("rate.window_lo", fmt_f64(self.rate.window.0)),
            ("rate.window_hi", fmt_f64(self.rate.window.1)),
            ("rate.slope_tolerance", fmt_list(&self.rate.slope_tolerance)),
            ("rate.oracle_from", fmt_f64(self.rate.oracle_from)),
            ("rate.oracle_tolerance", fmt_f64(self.rate.oracle_tolerance)),
            ("clt.t_eval", fmt_f64(self.clt.t_eval)),
            ("clt.variance_band", fmt_f64(self.clt.variance_band)),
            ("covariance.tol", fmt_f64(self.covariance.tol)),
            ("covariance.agreement", fmt_f64(self.covariance.agreement)),
            ("poisson.rhs", self.poisson.rhs.name().into()),
            ("poisson.theta", fmt_list(&self.poisson.theta)),
            ("poisson.component", self.poisson.component.to_string()),
        ]);
        if let Some((lo, hi, n)) = self.poisson.grid {
            out.extend([
                ("poisson.grid_lo", fmt_f64(lo)),
                ("poisson.grid_hi", fmt_f64(hi)),
                ("poisson.grid_n", n.to_string()),
            ]);
        }
        out.extend([
            ("poisson.residual_limit", fmt_f64(self.poisson.residual_limit)),
            ("poisson.closed_form_range", fmt_f64(self.poisson.closed_form_range)),
            ("simulate.n_steps", self.simulate.n_steps.to_string()),
            ("simulate.stride", self.simulate.stride.to_string()),
        ]);
        if let Some(path) = &self.simulate.replay {
            out.push(("simulate.replay", path.display().to_string()));
        }
        out.extend([
            ("simulate.theta0", fmt_list(&self.simulate.theta0)),
            ("estimate.dump", self.estimate_dump.to_string()),
            ("sweep.c_alpha", fmt_list(&self.sweep.c_alpha)),
            ("sweep.tolerance", fmt_f64(self.sweep.tolerance)),
        ]);
        out
    }

    /// The resolved configuration as parseable text.
    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        let m = self.x0.len();
        Ok(if self.noise_sigma.len() == 1 {
            NoiseSpec::isotropic(m, self.noise_sigma[0])?
        } else {
            NoiseSpec::new(Matrix::from_row_major(m, m, self.noise_sigma.clone())?)?
        })
    }

    pub fn schedule(&self) -> Result<ScheduleSpec> {
        Ok(ScheduleSpec::new(self.c_alpha, self.c0)?)
    }

    pub fn engine_config(&self) -> Result<EngineConfig<BuiltinModel>> {
        self.engine_config_with(self.schedule()?)
    }

    pub fn engine_config_with(&self, schedule: ScheduleSpec) -> Result<EngineConfig<BuiltinModel>> {
        let integrator = IntegratorConfig::new(self.dt, StateVector::new(self.x0.clone())?, self.burn_in)?;
        let checkpoints = sgdct_core::engine::geometric_checkpoints(self.horizon, self.checkpoints, self.dt)?;
        Ok(EngineConfig::new(self.model.build()?, self.noise()?, schedule, self.horizon)?
            .with_integrator(integrator)?
            .with_checkpoints(checkpoints)?
            .with_theta0_box(ParameterVector::new(self.theta0_lo.clone())?, ParameterVector::new(self.theta0_hi.clone())?)?
            .with_theta_bound(self.theta_bound)?)
    }
}
