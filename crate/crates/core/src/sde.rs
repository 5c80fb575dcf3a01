//! Euler–Maruyama simulation of the data process `dX = f*(X) dt + σ dW`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::linalg::norm;
use crate::model::{DriftModel, NoiseSpec, StateVector};
use crate::{CoreError, Result};

/// States with norm above this are treated as a divergence.
pub const DIVERGENCE_BOUND: f64 = 1e8;

/// Upper limit on `burn_in · dt` in model time units.
pub const MAX_BURN_IN_TIME: f64 = 1e5;

pub const DEFAULT_DT: f64 = 0.005;
pub const DEFAULT_BURN_IN: u64 = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    dt: f64,
    x0: StateVector,
    burn_in: u64,
}

impl IntegratorConfig {
    pub fn new(dt: f64, x0: StateVector, burn_in: u64) -> Result<Self> {
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(CoreError::Input(alloc::format!("dt must lie in (0, 1], got {dt}")));
        }
        if burn_in as f64 * dt > MAX_BURN_IN_TIME {
            return Err(CoreError::Input(alloc::format!(
                "burn-in of {burn_in} steps exceeds {MAX_BURN_IN_TIME} time units"
            )));
        }
        Ok(IntegratorConfig { dt, x0, burn_in })
    }

    /// dt = 0.005, 2000 burn-in steps, x0 = 0.
    pub fn default_for(state_dim: usize) -> Self {
        IntegratorConfig {
            dt: DEFAULT_DT,
            x0: StateVector::zeros(state_dim),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn x0(&self) -> &StateVector {
        &self.x0
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }
}

/// Scratch buffers for allocation-free Euler steps.
pub(crate) struct Stepper {
    pub(crate) drift: Vec<f64>,
    pub(crate) xi: Vec<f64>,
    pub(crate) dx: Vec<f64>,
    sqrt_dt: f64,
    dt: f64,
}

impl Stepper {
    pub(crate) fn new(m: usize, dt: f64) -> Self {
        Stepper {
            drift: vec![0.0; m],
            xi: vec![0.0; m],
            dx: vec![0.0; m],
            sqrt_dt: libm::sqrt(dt),
            dt,
        }
    }

    /// Fills `self.dx` with `f*(x)dt + σ√dt ξ` for the given draws already in `self.xi`.
    #[inline]
    pub(crate) fn increment<M: DriftModel + ?Sized>(&mut self, model: &M, noise: &NoiseSpec, x: &[f64]) {
        model.true_drift(x, &mut self.drift);
        let sigma = noise.sigma().as_slice();
        let m = x.len();
        for i in 0..m {
            let row = &sigma[i * m..(i + 1) * m];
            let mut s = 0.0;
            for j in 0..m {
                s += row[j] * self.xi[j];
            }
            self.dx[i] = self.drift[i] * self.dt + self.sqrt_dt * s;
        }
    }

    #[inline]
    pub(crate) fn draw<R: Rng>(&mut self, rng: &mut R) {
        for v in self.xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }

    /// One full step in place: draw, increment, apply, check.
    #[inline]
    pub(crate) fn step<M: DriftModel + ?Sized, R: Rng>(
        &mut self,
        model: &M,
        noise: &NoiseSpec,
        x: &mut [f64],
        rng: &mut R,
    ) -> Result<()> {
        self.draw(rng);
        self.increment(model, noise, x);
        for (xi, d) in x.iter_mut().zip(&self.dx) {
            *xi += d;
        }
        check_state(x, self.dt)
    }
}

#[inline]
pub(crate) fn check_state(x: &[f64], dt: f64) -> Result<()> {
    let ok = x.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_BOUND);
    if ok && norm(x) <= DIVERGENCE_BOUND {
        Ok(())
    } else {
        Err(CoreError::Diverged { x: x.to_vec(), dt })
    }
}

/// `x + f*(x)dt + σ√dt ξ`
pub fn euler_step<M: DriftModel + ?Sized>(
    model: &M,
    noise: &NoiseSpec,
    x: &[f64],
    dt: f64,
    xi: &[f64],
) -> Result<StateVector> {
    let m = model.state_dim();
    if x.len() != m || xi.len() != m || noise.dim() != m {
        return Err(CoreError::Dimension {
            what: "euler step",
            expected: m,
            got: if x.len() != m { x.len() } else if xi.len() != m { xi.len() } else { noise.dim() },
        });
    }
    if !(dt > 0.0) {
        return Err(CoreError::Input(alloc::format!("dt must be positive, got {dt}")));
    }
    let mut stepper = Stepper::new(m, dt);
    stepper.xi.copy_from_slice(xi);
    stepper.increment(model, noise, x);
    let next: Vec<f64> = x.iter().zip(&stepper.dx).map(|(a, d)| a + d).collect();
    check_state(&next, dt)?;
    Ok(StateVector::new(next).expect("checked finite"))
}

pub(crate) fn rng_from_seed(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Streaming Euler–Maruyama path. The `k`-th yielded state (from 0) is the
/// state after `burn_in + k + 1` steps and carries time `1 + k·dt`.
pub struct PathStream<'a, M: DriftModel + ?Sized> {
    model: &'a M,
    noise: &'a NoiseSpec,
    rng: Xoshiro256PlusPlus,
    stepper: Stepper,
    x: Vec<f64>,
    dt: f64,
    k: u64,
    n_steps: u64,
    pending: Option<CoreError>,
    failed: bool,
}

impl<M: DriftModel + ?Sized> Iterator for PathStream<'_, M> {
    type Item = Result<(f64, StateVector)>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(e) = self.pending.take() {
            self.failed = true;
            return Some(Err(e));
        }
        if self.failed || self.k >= self.n_steps {
            return None;
        }
        if let Err(e) = self.stepper.step(self.model, self.noise, &mut self.x, &mut self.rng) {
            self.failed = true;
            return Some(Err(e));
        }
        let t = 1.0 + self.k as f64 * self.dt;
        self.k += 1;
        Some(Ok((t, StateVector::new(self.x.clone()).expect("checked finite"))))
    }
}

pub fn simulate_path<'a, M: DriftModel + ?Sized>(
    model: &'a M,
    noise: &'a NoiseSpec,
    config: &IntegratorConfig,
    seed: u64,
    n_steps: u64,
) -> Result<PathStream<'a, M>> {
    if n_steps == 0 {
        return Err(CoreError::Input("n_steps must be at least 1".into()));
    }
    let m = model.state_dim();
    if config.x0.len() != m || noise.dim() != m {
        return Err(CoreError::Dimension {
            what: "initial state",
            expected: m,
            got: config.x0.len(),
        });
    }
    let mut rng = rng_from_seed(seed);
    let mut stepper = Stepper::new(m, config.dt);
    let mut x = config.x0.to_vec();
    let mut pending = None;
    for step in 0..config.burn_in {
        if let Err(e) = stepper.step(model, noise, &mut x, &mut rng) {
            pending = Some(e.at_step(step));
            break;
        }
    }
    Ok(PathStream {
        model,
        noise,
        rng,
        stepper,
        x,
        dt: config.dt,
        k: 0,
        n_steps,
        pending,
        failed: false,
    })
}

/// Time average of `‖X_t‖^power` over `horizon` time units after burn-in.
pub fn stationary_moment<M: DriftModel + ?Sized>(
    model: &M,
    noise: &NoiseSpec,
    config: &IntegratorConfig,
    power: u32,
    horizon: f64,
    seed: u64,
) -> Result<f64> {
    if power % 2 != 0 {
        return Err(CoreError::Input(alloc::format!("moment power must be even, got {power}")));
    }
    if !(horizon >= 1e3) {
        return Err(CoreError::Input(alloc::format!("horizon must be at least 1e3, got {horizon}")));
    }
    if power == 0 {
        return Ok(1.0);
    }
    let n = libm::ceil(horizon / config.dt) as u64;
    let half = (power / 2) as i32;
    let mut sum = 0.0;
    for item in simulate_path(model, noise, config, seed, n)? {
        let (_, x) = item?;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        sum += libm::pow(r2, half as f64);
    }
    Ok(sum / n as f64)
}
