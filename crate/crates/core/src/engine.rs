//! The coupled estimation loop: one Euler–Maruyama step of X and one SGDCT
//! update of θ per time step, both driven by the same increment.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::linalg::{dot, norm};
use crate::model::{check_dims, DriftModel, NoiseSpec, ParameterVector, StateVector};
use crate::schedule::ScheduleSpec;
use crate::sde::{check_state, rng_from_seed, IntegratorConfig, Stepper};
use crate::{CoreError, Fnv64, Result};

pub const DEFAULT_THETA_BOUND: f64 = 1e6;
pub const DEFAULT_CHECKPOINTS: usize = 60;

/// Everything needed to run one replication.
#[derive(Debug, Clone)]
pub struct EngineConfig<M> {
    pub model: M,
    pub noise: NoiseSpec,
    pub schedule: ScheduleSpec,
    pub integrator: IntegratorConfig,
    pub theta0_box: (ParameterVector, ParameterVector),
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    pub theta_bound: f64,
}

impl<M: DriftModel> EngineConfig<M> {
    /// Defaults: integrator per [`IntegratorConfig::default_for`], θ₀ box of
    /// half-width 1 around θ* (or [−1, 1]), 60 geometric checkpoints, bound 10⁶.
    pub fn new(model: M, noise: NoiseSpec, schedule: ScheduleSpec, horizon: f64) -> Result<Self> {
        let k = model.param_dim();
        let integrator = IntegratorConfig::default_for(model.state_dim());
        let center = model.true_theta().map(|t| t.to_vec()).unwrap_or_else(|| vec![0.0; k]);
        let lo = ParameterVector::new(center.iter().map(|c| c - 1.0).collect())?;
        let hi = ParameterVector::new(center.iter().map(|c| c + 1.0).collect())?;
        let checkpoints = geometric_checkpoints(horizon, DEFAULT_CHECKPOINTS, integrator.dt())?;
        let cfg = EngineConfig {
            model,
            noise,
            schedule,
            integrator,
            theta0_box: (lo, hi),
            horizon,
            checkpoints,
            theta_bound: DEFAULT_THETA_BOUND,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces the integrator and re-snaps the default checkpoint grid to the new step.
    pub fn with_integrator(mut self, integrator: IntegratorConfig) -> Result<Self> {
        self.integrator = integrator;
        self.checkpoints = geometric_checkpoints(self.horizon, DEFAULT_CHECKPOINTS, self.integrator.dt())?;
        self.validate()?;
        Ok(self)
    }

    pub fn with_theta0_box(mut self, lo: ParameterVector, hi: ParameterVector) -> Result<Self> {
        self.theta0_box = (lo, hi);
        self.validate()?;
        Ok(self)
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<f64>) -> Result<Self> {
        self.checkpoints = checkpoints;
        self.validate()?;
        Ok(self)
    }

    pub fn with_theta_bound(mut self, bound: f64) -> Result<Self> {
        self.theta_bound = bound;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, m) = (self.model.param_dim(), self.model.state_dim());
        if self.noise.dim() != m {
            return Err(CoreError::Dimension {
                what: "noise",
                expected: m,
                got: self.noise.dim(),
            });
        }
        if self.integrator.x0().len() != m {
            return Err(CoreError::Dimension {
                what: "initial state",
                expected: m,
                got: self.integrator.x0().len(),
            });
        }
        let (lo, hi) = &self.theta0_box;
        if lo.len() != k || hi.len() != k {
            return Err(CoreError::Dimension {
                what: "theta0 box",
                expected: k,
                got: lo.len().min(hi.len()),
            });
        }
        if lo.iter().zip(hi.iter()).any(|(a, b)| a > b) {
            return Err(CoreError::Input("theta0 box lower bound exceeds upper bound".into()));
        }
        if !(self.horizon >= 1.0 && self.horizon.is_finite()) {
            return Err(CoreError::Input(alloc::format!("horizon must be finite and >= 1, got {}", self.horizon)));
        }
        if !(self.theta_bound > 0.0) {
            return Err(CoreError::Input("theta bound must be positive".into()));
        }
        let dt = self.integrator.dt();
        let mut last: Option<u64> = None;
        for &c in &self.checkpoints {
            if !(c >= 1.0 && c <= self.horizon) {
                return Err(CoreError::Input(alloc::format!("checkpoint {c} outside [1, {}]", self.horizon)));
            }
            let idx = grid_index(c, dt);
            if last.is_some_and(|l| idx <= l) {
                return Err(CoreError::Input(alloc::format!(
                    "checkpoint {c} is not after the previous one on the dt = {dt} grid"
                )));
            }
            last = Some(idx);
        }
        Ok(())
    }

    pub fn digest(&self) -> u64 {
        let mut h = Fnv64::default();
        self.model.fingerprint(&mut h);
        self.noise.sigma().as_slice().iter().for_each(|v| h.write_f64(*v));
        h.write_f64(self.schedule.c_alpha());
        h.write_f64(self.schedule.c0());
        h.write_f64(self.integrator.dt());
        h.write_u64(self.integrator.burn_in());
        self.integrator.x0().iter().for_each(|v| h.write_f64(*v));
        self.theta0_box.0.iter().chain(self.theta0_box.1.iter()).for_each(|v| h.write_f64(*v));
        h.write_f64(self.horizon);
        h.write_u64(self.checkpoints.len() as u64);
        self.checkpoints.iter().for_each(|v| h.write_f64(*v));
        h.write_f64(self.theta_bound);
        h.finish()
    }
}

/// Index `n` of the first grid time `1 + n·dt` at or after `t`.
fn grid_index(t: f64, dt: f64) -> u64 {
    let raw = (t - 1.0) / dt;
    // absorb representation error in t so exact grid times map onto themselves
    libm::ceil(raw - 1e-9 * raw.max(1.0)).max(0.0) as u64
}

#[inline]
fn grid_time(n: u64, dt: f64) -> f64 {
    1.0 + n as f64 * dt
}

/// `n` log-uniform times from 1 to `horizon`, snapped up to the `dt` grid with
/// duplicates removed.
pub fn geometric_checkpoints(horizon: f64, n: usize, dt: f64) -> Result<Vec<f64>> {
    if !(horizon >= 1.0 && horizon.is_finite()) || !(dt > 0.0) {
        return Err(CoreError::Input("checkpoint grid needs horizon >= 1 and dt > 0".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let last = grid_index(horizon, dt);
    let mut out: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Option<u64> = None;
    for j in 0..n {
        let frac = if n == 1 { 1.0 } else { j as f64 / (n - 1) as f64 };
        let t = libm::pow(horizon, frac);
        let idx = grid_index(t, dt).min(last);
        if prev.is_some_and(|p| idx <= p) {
            continue;
        }
        // the final point is the horizon itself
        out.push(if idx == last { horizon } else { grid_time(idx, dt) });
        prev = Some(idx);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub theta: ParameterVector,
    pub x: StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
    pub seed: u64,
    pub config_digest: u64,
}

/// Scratch space for the parameter update.
struct Updater {
    f: Vec<f64>,
    resid: Vec<f64>,
    w: Vec<f64>,
    grad: Vec<f64>,
}

impl Updater {
    fn new(k: usize, m: usize) -> Self {
        Updater {
            f: vec![0.0; m],
            resid: vec![0.0; m],
            w: vec![0.0; m],
            grad: vec![0.0; k * m],
        }
    }

    /// θ += α ∇_θf(x, θ) (σσᵀ)⁻¹ (Δx − f(x, θ) dt)
    #[inline]
    fn apply<M: DriftModel + ?Sized>(
        &mut self,
        model: &M,
        noise: &NoiseSpec,
        alpha: f64,
        x: &[f64],
        theta: &mut [f64],
        delta_x: &[f64],
        dt: f64,
    ) {
        let m = x.len();
        model.drift(x, theta, &mut self.f);
        model.drift_grad(x, theta, &mut self.grad);
        for j in 0..m {
            self.resid[j] = delta_x[j] - self.f[j] * dt;
        }
        let p = noise.precision().as_slice();
        for i in 0..m {
            self.w[i] = dot(&p[i * m..(i + 1) * m], &self.resid);
        }
        for (i, th) in theta.iter_mut().enumerate() {
            *th += alpha * dot(&self.grad[i * m..(i + 1) * m], &self.w);
        }
    }
}

/// One SGDCT update at time `t` with observed increment `delta_x`.
#[allow(clippy::too_many_arguments)]
pub fn sgdct_step<M: DriftModel + ?Sized>(
    model: &M,
    noise: &NoiseSpec,
    schedule: &ScheduleSpec,
    t: f64,
    x: &[f64],
    theta: &[f64],
    delta_x: &[f64],
    dt: f64,
) -> Result<ParameterVector> {
    check_dims(model, noise, x, theta)?;
    if delta_x.len() != x.len() {
        return Err(CoreError::Dimension {
            what: "increment",
            expected: x.len(),
            got: delta_x.len(),
        });
    }
    let alpha = schedule.alpha(t)?;
    let mut next = theta.to_vec();
    Updater::new(model.param_dim(), model.state_dim()).apply(model, noise, alpha, x, &mut next, delta_x, dt);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::ParameterDiverged { t, theta: next });
    }
    Ok(ParameterVector::new(next).expect("checked finite"))
}

/// Runs one replication. θ₀ is drawn uniformly from the box, X is burned in
/// from x0, then the clock starts at t = 1 and advances by dt until T.
pub fn run<M: DriftModel>(config: &EngineConfig<M>, seed: u64) -> Result<Trajectory> {
    config.validate()?;
    let model = &config.model;
    let noise = &config.noise;
    let (k, m) = (model.param_dim(), model.state_dim());
    let dt = config.integrator.dt();
    let mut rng = rng_from_seed(seed);

    let (lo, hi) = &config.theta0_box;
    let mut theta: Vec<f64> = lo
        .iter()
        .zip(hi.iter())
        .map(|(a, b)| a + (b - a) * rng.random::<f64>())
        .collect();

    let mut stepper = Stepper::new(m, dt);
    let mut x = config.integrator.x0().to_vec();
    let burn_in = config.integrator.burn_in();
    for step in 0..burn_in {
        stepper.step(model, noise, &mut x, &mut rng).map_err(|e| e.at_step(step))?;
    }

    let targets: Vec<u64> = config.checkpoints.iter().map(|&c| grid_index(c, dt)).collect();
    let last = grid_index(config.horizon, dt);
    let mut updater = Updater::new(k, m);
    let mut records = Vec::with_capacity(targets.len());
    let mut next_target = 0usize;
    let mut n: u64 = 0;
    loop {
        while next_target < targets.len() && targets[next_target] == n {
            records.push(Checkpoint {
                t: grid_time(n, dt),
                theta: ParameterVector::new(theta.clone()).expect("finite"),
                x: StateVector::new(x.clone()).expect("finite"),
            });
            next_target += 1;
        }
        if n >= last {
            break;
        }
        let t = grid_time(n, dt);
        let step = burn_in + n;
        stepper.draw(&mut rng);
        stepper.increment(model, noise, &x);
        updater.apply(model, noise, config.schedule.rate(t), &x, &mut theta, &stepper.dx, dt);
        for (xi, d) in x.iter_mut().zip(&stepper.dx) {
            *xi += d;
        }
        check_state(&x, dt).map_err(|e| e.at_step(step))?;
        let th_norm = norm(&theta);
        if !th_norm.is_finite() {
            return Err(CoreError::ParameterDiverged { t, theta }.at_step(step));
        }
        if th_norm > config.theta_bound {
            return Err(CoreError::MomentBlowup {
                step,
                t,
                norm: th_norm,
                bound: config.theta_bound,
            });
        }
        n += 1;
    }
    Ok(Trajectory {
        checkpoints: records,
        seed,
        config_digest: config.digest(),
    })
}

/// Runs SGDCT over an observed path `(t_i, x_i)`, using `x_{i+1} − x_i` as the
/// increment and `t_{i+1} − t_i` as the step. Records θ at every row whose time
/// is at or after the next requested checkpoint.
pub fn replay_path<M: DriftModel + ?Sized>(
    model: &M,
    noise: &NoiseSpec,
    schedule: &ScheduleSpec,
    theta0: &ParameterVector,
    path: &[(f64, StateVector)],
    checkpoints: &[f64],
) -> Result<Vec<Checkpoint>> {
    let (k, m) = (model.param_dim(), model.state_dim());
    if theta0.len() != k {
        return Err(CoreError::Dimension {
            what: "theta0",
            expected: k,
            got: theta0.len(),
        });
    }
    if path.len() < 2 {
        return Err(CoreError::Input("a replayed path needs at least two rows".into()));
    }
    let mut theta = theta0.to_vec();
    let mut updater = Updater::new(k, m);
    let mut delta = vec![0.0; m];
    let mut records = Vec::new();
    let mut next_target = 0usize;
    for i in 0..path.len() {
        let (t, x) = (&path[i].0, &path[i].1);
        if x.len() != m {
            return Err(CoreError::Dimension {
                what: "path state",
                expected: m,
                got: x.len(),
            });
        }
        while next_target < checkpoints.len() && checkpoints[next_target] <= *t {
            records.push(Checkpoint {
                t: *t,
                theta: ParameterVector::new(theta.clone())?,
                x: x.clone(),
            });
            next_target += 1;
        }
        let Some((t_next, x_next)) = path.get(i + 1) else { break };
        let dt = t_next - t;
        if !(dt > 0.0) {
            return Err(CoreError::Input(alloc::format!("path times must increase (row {})", i + 1)));
        }
        for j in 0..m {
            delta[j] = x_next[j] - x[j];
        }
        updater.apply(model, noise, schedule.alpha(*t)?, x, &mut theta, &delta, dt);
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::ParameterDiverged { t: *t, theta }.at_step(i as u64));
        }
    }
    Ok(records)
}

/// One output of the splitmix64 generator for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `index` under `master`.
pub fn seed_split(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{objective_gradient, CustomModel, LinearFamily, ScalarOu};
    use crate::Matrix;

    fn ou() -> ScalarOu {
        ScalarOu::new(1.0).unwrap()
    }

    fn unit() -> NoiseSpec {
        NoiseSpec::scalar(1.0).unwrap()
    }

    #[test]
    fn step_hand_value() {
        // α_t = 1 at t = 1 with C_α = 2, C0 = 1
        let s = ScheduleSpec::new(2.0, 1.0).unwrap();
        let next = sgdct_step(&ou(), &unit(), &s, 1.0, &[1.0], &[2.0], &[-0.01], 0.01).unwrap();
        assert!((next[0] - 1.99).abs() < 1e-14);
    }

    #[test]
    fn zero_gradient_or_zero_residual_leaves_theta() {
        let s = ScheduleSpec::new(2.0, 1.0).unwrap();
        let next = sgdct_step(&ou(), &unit(), &s, 3.0, &[0.0], &[2.0], &[0.37], 0.01).unwrap();
        assert_eq!(next[0], 2.0);
        let next = sgdct_step(&ou(), &unit(), &s, 3.0, &[1.5], &[1.0], &[-1.5 * 0.01], 0.01).unwrap();
        assert_eq!(next[0], 1.0);
    }

    #[test]
    fn noiseless_step_is_gradient_descent() {
        let model = LinearFamily::new(2, vec![1.0, 0.2, -0.1, 0.8]).unwrap();
        let noise = NoiseSpec::new(Matrix::from_rows(&[&[1.0, 0.0], &[0.3, 0.6]]).unwrap()).unwrap();
        let s = ScheduleSpec::new(3.0, 0.5).unwrap();
        let (x, theta, dt, t) = ([0.4, -1.1], [1.3, 0.0, 0.5, 0.9], 0.01, 7.0);
        let mut fs = [0.0; 2];
        model.true_drift(&x, &mut fs);
        let dx = [fs[0] * dt, fs[1] * dt];
        let stepped = sgdct_step(&model, &noise, &s, t, &x, &theta, &dx, dt).unwrap();
        let g = objective_gradient(&model, &noise, &x, &theta).unwrap();
        let a = s.alpha(t).unwrap();
        for i in 0..4 {
            assert!((stepped[i] - (theta[i] - a * g[i] * dt)).abs() < 1e-15);
        }
    }

    #[test]
    fn splitmix_reference_values() {
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(seed_split(42, 3), seed_split(42, 3));
        assert_ne!(seed_split(42, 0), seed_split(42, 1));
    }

    #[test]
    fn default_grid_shape() {
        let g = geometric_checkpoints(2000.0, 60, 0.005).unwrap();
        assert_eq!(g.len(), 60);
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 2000.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        // tight horizons collapse duplicates instead of failing
        let g = geometric_checkpoints(1.05, 60, 0.005).unwrap();
        assert_eq!(g.len(), 11);
    }

    #[test]
    fn run_is_deterministic_and_records_requested_times() {
        let cfg = EngineConfig::new(ou(), unit(), ScheduleSpec::new(4.0, 1.0).unwrap(), 50.0).unwrap();
        let a = run(&cfg, 9).unwrap();
        let b = run(&cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checkpoints.len(), cfg.checkpoints.len());
        for (c, req) in a.checkpoints.iter().zip(&cfg.checkpoints) {
            assert!(c.t >= req - 1e-9 && c.t < req + 0.005);
        }
        let (lo, hi) = (cfg.theta0_box.0[0], cfg.theta0_box.1[0]);
        assert!(a.checkpoints[0].theta[0] >= lo && a.checkpoints[0].theta[0] <= hi);
    }

    #[test]
    fn empty_checkpoints_give_empty_trajectory() {
        let cfg = EngineConfig::new(ou(), unit(), ScheduleSpec::new(4.0, 1.0).unwrap(), 5.0)
            .unwrap()
            .with_checkpoints(Vec::new())
            .unwrap();
        assert!(run(&cfg, 1).unwrap().checkpoints.is_empty());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = EngineConfig::new(ou(), unit(), ScheduleSpec::new(4.0, 1.0).unwrap(), 5.0).unwrap();
        assert!(base.clone().with_checkpoints(vec![0.5]).is_err());
        assert!(base.clone().with_checkpoints(vec![2.001, 2.002]).is_err());
        let lo = ParameterVector::new(vec![1.0]).unwrap();
        let hi = ParameterVector::new(vec![0.0]).unwrap();
        assert!(base.with_theta0_box(lo, hi).is_err());
    }

    #[test]
    fn blowup_is_reported() {
        // anti-gradient drift pushes θ away without bound
        let runaway = CustomModel::new("runaway", 1, 1, |x, t, o| o[0] = t[0] * x[0], |x, _, o| o[0] = -x[0], |x, o| o[0] = -x[0]);
        let cfg = EngineConfig::new(runaway, unit(), ScheduleSpec::new(50.0, 0.0).unwrap(), 500.0)
            .unwrap()
            .with_theta_bound(100.0)
            .unwrap();
        let err = run(&cfg, 3).unwrap_err();
        assert!(
            matches!(err, CoreError::MomentBlowup { .. } | CoreError::AtStep { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn replay_matches_engine_on_its_own_path() {
        // feed the engine's X stream back through replay: θ must agree exactly
        let cfg = EngineConfig::new(ou(), unit(), ScheduleSpec::new(4.0, 1.0).unwrap(), 3.0)
            .unwrap()
            .with_checkpoints(Vec::new())
            .unwrap();
        let dt = cfg.integrator.dt();
        let mut rng = rng_from_seed(4);
        let theta0 = cfg.theta0_box.0[0] + 2.0 * rng.random::<f64>();
        let mut stepper = Stepper::new(1, dt);
        let mut x = vec![0.0];
        for _ in 0..cfg.integrator.burn_in() {
            stepper.step(&cfg.model, &cfg.noise, &mut x, &mut rng).unwrap();
        }
        let mut path = vec![(1.0, StateVector::new(x.clone()).unwrap())];
        for n in 1..=400u64 {
            stepper.step(&cfg.model, &cfg.noise, &mut x, &mut rng).unwrap();
            path.push((grid_time(n, dt), StateVector::new(x.clone()).unwrap()));
        }
        let cfg = cfg.with_checkpoints(vec![3.0]).unwrap();
        let traj = run(&cfg, 4).unwrap();
        let rec = replay_path(&cfg.model, &cfg.noise, &cfg.schedule, &ParameterVector::new(vec![theta0]).unwrap(), &path, &[3.0]).unwrap();
        assert!((rec[0].theta[0] - traj.checkpoints[0].theta[0]).abs() < 1e-12);
    }
}
