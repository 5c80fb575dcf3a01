//! Parametric drift families `f(x, θ)`, the true drift `f*`, the pointwise
//! objective `g(x, θ) = ½‖f(x, θ) − f*(x)‖²_{(σσᵀ)⁻¹}` and closed-form
//! metadata for the built-in models.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::linalg::{dot, norm, Matrix};
use crate::{CoreError, Fnv64, Result};

macro_rules! finite_vector {
    ($(#[$doc:meta])* $name:ident, $what:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(entries: Vec<f64>) -> Result<Self> {
                if entries.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::Input(alloc::format!("{} has non-finite entries", $what)));
                }
                Ok($name(entries))
            }

            pub fn from_slice(entries: &[f64]) -> Result<Self> {
                Self::new(entries.to_vec())
            }

            pub fn zeros(len: usize) -> Self {
                $name(vec![0.0; len])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }
    };
}

finite_vector!(
    /// The parameter estimate θ ∈ ℝᵏ.
    ParameterVector,
    "parameter vector"
);
finite_vector!(
    /// A state X ∈ ℝᵐ of the observed diffusion.
    StateVector,
    "state vector"
);

/// Constant diffusion coefficient σ together with the cached `(σσᵀ)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    sigma: Matrix,
    cov: Matrix,
    cov_inv: Matrix,
}

impl NoiseSpec {
    pub fn new(sigma: Matrix) -> Result<Self> {
        if !sigma.is_square() || sigma.rows() == 0 {
            return Err(CoreError::Input("sigma must be a non-empty square matrix".into()));
        }
        if !sigma.is_finite() {
            return Err(CoreError::Input("sigma has non-finite entries".into()));
        }
        let cov = sigma.matmul(&sigma.transpose());
        let cov_inv = cov.inverse_spd().ok_or(CoreError::SingularNoise)?;
        Ok(NoiseSpec { sigma, cov, cov_inv })
    }

    /// σ = s for a scalar state.
    pub fn scalar(s: f64) -> Result<Self> {
        Self::new(Matrix::scalar(s))
    }

    /// σ = s·I in dimension `m`.
    pub fn isotropic(m: usize, s: f64) -> Result<Self> {
        Self::new(Matrix::identity(m).scale(s))
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    /// σσᵀ
    pub fn covariance(&self) -> &Matrix {
        &self.cov
    }

    /// (σσᵀ)⁻¹
    pub fn precision(&self) -> &Matrix {
        &self.cov_inv
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.sigma.scale(c))
    }
}

/// Stationary mean and covariance of the data process.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
}

impl Stationary {
    /// E[X_i²] per coordinate.
    pub fn second_moments(&self) -> Vec<f64> {
        self.mean
            .iter()
            .enumerate()
            .map(|(i, mu)| mu * mu + self.covariance[(i, i)])
            .collect()
    }
}

/// ḡ(θ) with its gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedObjective {
    pub gbar: f64,
    pub grad: Vec<f64>,
    pub hessian: Matrix,
}

/// Closed-form quantities under the invariant measure π.
pub trait AnalyticModel {
    fn stationary(&self, noise: &NoiseSpec) -> Stationary;

    fn averaged(&self, noise: &NoiseSpec, theta: &[f64]) -> AveragedObjective;

    /// `∫ ∇_θf (σσᵀ)⁻¹ ∇_θfᵀ dπ` at θ*, which is h̄(θ*) for a well-specified model.
    fn fisher_at_truth(&self, noise: &NoiseSpec) -> Matrix;
}

/// A parametric drift family.
///
/// Buffers are caller-provided so the estimation loop never allocates. The
/// parameter gradient is laid out as a `k × m` row-major matrix whose row
/// `i` is `∂f/∂θ_i`.
pub trait DriftModel: Send + Sync {
    fn name(&self) -> &str;

    fn param_dim(&self) -> usize;

    fn state_dim(&self) -> usize;

    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]);

    fn drift_grad(&self, x: &[f64], theta: &[f64], out: &mut [f64]);

    fn true_drift(&self, x: &[f64], out: &mut [f64]);

    /// θ* for well-specified families.
    fn true_theta(&self) -> Option<&[f64]> {
        None
    }

    fn analytic(&self) -> Option<&dyn AnalyticModel> {
        None
    }

    fn fingerprint(&self, h: &mut Fnv64) {
        h.write(self.name().as_bytes());
        if let Some(t) = self.true_theta() {
            t.iter().for_each(|v| h.write_f64(*v));
        }
    }
}

macro_rules! forward_drift_model {
    ($($ty:ty),*) => {$(
        impl<T: DriftModel + ?Sized> DriftModel for $ty {
            fn name(&self) -> &str { (**self).name() }
            fn param_dim(&self) -> usize { (**self).param_dim() }
            fn state_dim(&self) -> usize { (**self).state_dim() }
            #[inline]
            fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) { (**self).drift(x, theta, out) }
            #[inline]
            fn drift_grad(&self, x: &[f64], theta: &[f64], out: &mut [f64]) { (**self).drift_grad(x, theta, out) }
            #[inline]
            fn true_drift(&self, x: &[f64], out: &mut [f64]) { (**self).true_drift(x, out) }
            fn true_theta(&self) -> Option<&[f64]> { (**self).true_theta() }
            fn analytic(&self) -> Option<&dyn AnalyticModel> { (**self).analytic() }
            fn fingerprint(&self, h: &mut Fnv64) { (**self).fingerprint(h) }
        }
    )*};
}

forward_drift_model!(&T, Box<T>, Arc<T>);

fn scalar_variance(noise: &NoiseSpec) -> f64 {
    noise.covariance()[(0, 0)]
}

/// `f(x, θ) = −θx`, `f*(x) = −θ*x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarOu {
    theta_star: [f64; 1],
}

impl ScalarOu {
    pub fn new(theta_star: f64) -> Result<Self> {
        if !(theta_star > 0.0 && theta_star.is_finite()) {
            return Err(CoreError::Input("OU mean-reversion rate theta* must be positive".into()));
        }
        Ok(ScalarOu {
            theta_star: [theta_star],
        })
    }
}

impl DriftModel for ScalarOu {
    fn name(&self) -> &str {
        "ou"
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        1
    }
    #[inline]
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = -theta[0] * x[0];
    }
    #[inline]
    fn drift_grad(&self, x: &[f64], _theta: &[f64], out: &mut [f64]) {
        out[0] = -x[0];
    }
    #[inline]
    fn true_drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -self.theta_star[0] * x[0];
    }
    fn true_theta(&self) -> Option<&[f64]> {
        Some(&self.theta_star)
    }
    fn analytic(&self) -> Option<&dyn AnalyticModel> {
        Some(self)
    }
}

impl AnalyticModel for ScalarOu {
    fn stationary(&self, noise: &NoiseSpec) -> Stationary {
        let v = scalar_variance(noise) / (2.0 * self.theta_star[0]);
        Stationary {
            mean: vec![0.0],
            covariance: Matrix::scalar(v),
        }
    }

    fn averaged(&self, _noise: &NoiseSpec, theta: &[f64]) -> AveragedObjective {
        // m₂/σ² = 1/(2θ*) whatever σ is
        let curvature = 1.0 / (2.0 * self.theta_star[0]);
        let d = theta[0] - self.theta_star[0];
        AveragedObjective {
            gbar: 0.5 * curvature * d * d,
            grad: vec![curvature * d],
            hessian: Matrix::scalar(curvature),
        }
    }

    fn fisher_at_truth(&self, _noise: &NoiseSpec) -> Matrix {
        Matrix::scalar(1.0 / (2.0 * self.theta_star[0]))
    }
}

/// `f(x, Θ) = −Θx` in dimension `d` with all `d²` entries of Θ free (row-major θ).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFamily {
    dim: usize,
    theta_star: Vec<f64>,
}

impl LinearFamily {
    /// `theta_star` is Θ* in row-major order; `−Θ*` must be Hurwitz.
    pub fn new(dim: usize, theta_star: Vec<f64>) -> Result<Self> {
        if dim == 0 || theta_star.len() != dim * dim {
            return Err(CoreError::Dimension {
                what: "linear family theta*",
                expected: dim * dim,
                got: theta_star.len(),
            });
        }
        let model = LinearFamily { dim, theta_star };
        // −Θ* is Hurwitz iff Θ*P + PΘ*ᵀ = I has a positive definite solution
        let p = model.lyapunov(&Matrix::identity(dim))?;
        if p.cholesky().is_none() {
            return Err(CoreError::Input("linear family requires -Theta* to be stable".into()));
        }
        Ok(model)
    }

    fn theta_matrix(&self) -> Matrix {
        Matrix::from_row_major(self.dim, self.dim, self.theta_star.clone()).expect("dims checked at construction")
    }

    /// Solves `Θ*P + PΘ*ᵀ = S` through its vectorised form.
    fn lyapunov(&self, s: &Matrix) -> Result<Matrix> {
        let d = self.dim;
        let t = self.theta_matrix();
        let mut a = Matrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let row = i * d + j;
                for k in 0..d {
                    // (ΘP)_ij = Σ_k Θ_ik P_kj, (PΘᵀ)_ij = Σ_k P_ik Θ_jk
                    a[(row, k * d + j)] += t[(i, k)];
                    a[(row, i * d + k)] += t[(j, k)];
                }
            }
        }
        let p = a.solve(s.as_slice())?;
        Ok(Matrix::from_row_major(d, d, p)?.symmetrize())
    }
}

impl DriftModel for LinearFamily {
    fn name(&self) -> &str {
        "linear"
    }
    fn param_dim(&self) -> usize {
        self.dim * self.dim
    }
    fn state_dim(&self) -> usize {
        self.dim
    }
    #[inline]
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            out[i] = -dot(&theta[i * d..(i + 1) * d], x);
        }
    }
    #[inline]
    fn drift_grad(&self, x: &[f64], _theta: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..d {
            for b in 0..d {
                out[(a * d + b) * d + a] = -x[b];
            }
        }
    }
    #[inline]
    fn true_drift(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            out[i] = -dot(&self.theta_star[i * d..(i + 1) * d], x);
        }
    }
    fn true_theta(&self) -> Option<&[f64]> {
        Some(&self.theta_star)
    }
    fn analytic(&self) -> Option<&dyn AnalyticModel> {
        Some(self)
    }
}

impl AnalyticModel for LinearFamily {
    fn stationary(&self, noise: &NoiseSpec) -> Stationary {
        let p = self.lyapunov(noise.covariance()).expect("stable by construction");
        Stationary {
            mean: vec![0.0; self.dim],
            covariance: p,
        }
    }

    fn averaged(&self, noise: &NoiseSpec, theta: &[f64]) -> AveragedObjective {
        let d = self.dim;
        let p = self.stationary(noise).covariance;
        let s_inv = noise.precision();
        let diff: Vec<f64> = theta.iter().zip(&self.theta_star).map(|(a, b)| a - b).collect();
        let dm = Matrix::from_row_major(d, d, diff).expect("k = d²");
        // ḡ = ½ tr(Dᵀ S⁻¹ D P), ∇ḡ = S⁻¹ D P, Hessian = S⁻¹ ⊗ P
        let grad_m = s_inv.matmul(&dm).matmul(&p);
        let gbar = 0.5 * dot(dm.as_slice(), grad_m.as_slice());
        let k = d * d;
        let mut hessian = Matrix::zeros(k, k);
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        hessian[(a * d + b, c * d + e)] = s_inv[(a, c)] * p[(b, e)];
                    }
                }
            }
        }
        AveragedObjective {
            gbar,
            grad: grad_m.as_slice().to_vec(),
            hessian,
        }
    }

    fn fisher_at_truth(&self, noise: &NoiseSpec) -> Matrix {
        self.averaged(noise, &self.theta_star).hessian
    }
}

/// `f(x, θ) = θ₁(θ₂ − x)`: mean reversion at rate θ₁ towards level θ₂.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMeanReversion {
    theta_star: [f64; 2],
}

impl AffineMeanReversion {
    pub fn new(rate: f64, level: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite() && level.is_finite()) {
            return Err(CoreError::Input("affine model needs a positive finite rate and finite level".into()));
        }
        Ok(AffineMeanReversion {
            theta_star: [rate, level],
        })
    }
}

impl DriftModel for AffineMeanReversion {
    fn name(&self) -> &str {
        "affine"
    }
    fn param_dim(&self) -> usize {
        2
    }
    fn state_dim(&self) -> usize {
        1
    }
    #[inline]
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[0] * (theta[1] - x[0]);
    }
    #[inline]
    fn drift_grad(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[1] - x[0];
        out[1] = theta[0];
    }
    #[inline]
    fn true_drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.theta_star[0] * (self.theta_star[1] - x[0]);
    }
    fn true_theta(&self) -> Option<&[f64]> {
        Some(&self.theta_star)
    }
    fn analytic(&self) -> Option<&dyn AnalyticModel> {
        Some(self)
    }
}

impl AnalyticModel for AffineMeanReversion {
    fn stationary(&self, noise: &NoiseSpec) -> Stationary {
        Stationary {
            mean: vec![self.theta_star[1]],
            covariance: Matrix::scalar(scalar_variance(noise) / (2.0 * self.theta_star[0])),
        }
    }

    fn averaged(&self, noise: &NoiseSpec, theta: &[f64]) -> AveragedObjective {
        let s2 = scalar_variance(noise);
        let v = s2 / (2.0 * self.theta_star[0]);
        let (r, l) = (theta[0], theta[1]);
        let dr = r - self.theta_star[0];
        let dl = l - self.theta_star[1];
        // E[(f − f*)²] = θ₁²(θ₂ − θ₂*)² + (θ₁ − θ₁*)² Var(X)
        let gbar = 0.5 * (r * r * dl * dl + dr * dr * v) / s2;
        let grad = vec![(r * dl * dl + dr * v) / s2, r * r * dl / s2];
        let h12 = 2.0 * r * dl / s2;
        let hessian = Matrix::from_rows(&[&[(dl * dl + v) / s2, h12], &[h12, r * r / s2]]).expect("2x2");
        AveragedObjective { gbar, grad, hessian }
    }

    fn fisher_at_truth(&self, noise: &NoiseSpec) -> Matrix {
        let s2 = scalar_variance(noise);
        let v = s2 / (2.0 * self.theta_star[0]);
        Matrix::from_diag(&[v / s2, self.theta_star[0] * self.theta_star[0] / s2])
    }
}

/// `f(x, θ) = −η(θ)x` with the monotone link `η(θ) = θ + tanh θ`.
///
/// ḡ is non-convex away from θ* (η'' ≠ 0) but has a single critical point and
/// an inward-pointing gradient, and f grows linearly in θ.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedLink {
    theta_star: [f64; 1],
}

impl BoundedLink {
    pub fn new(theta_star: f64) -> Result<Self> {
        if !(theta_star > 0.0 && theta_star.is_finite()) {
            return Err(CoreError::Input("bounded-link model needs theta* > 0 for a stable truth".into()));
        }
        Ok(BoundedLink {
            theta_star: [theta_star],
        })
    }

    #[inline]
    pub fn link(theta: f64) -> f64 {
        theta + libm::tanh(theta)
    }

    #[inline]
    pub fn link_prime(theta: f64) -> f64 {
        let t = libm::tanh(theta);
        2.0 - t * t
    }

    pub fn link_second(theta: f64) -> f64 {
        let t = libm::tanh(theta);
        -2.0 * t * (1.0 - t * t)
    }
}

impl DriftModel for BoundedLink {
    fn name(&self) -> &str {
        "bounded-link"
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        1
    }
    #[inline]
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = -Self::link(theta[0]) * x[0];
    }
    #[inline]
    fn drift_grad(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = -Self::link_prime(theta[0]) * x[0];
    }
    #[inline]
    fn true_drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -Self::link(self.theta_star[0]) * x[0];
    }
    fn true_theta(&self) -> Option<&[f64]> {
        Some(&self.theta_star)
    }
    fn analytic(&self) -> Option<&dyn AnalyticModel> {
        Some(self)
    }
}

impl AnalyticModel for BoundedLink {
    fn stationary(&self, noise: &NoiseSpec) -> Stationary {
        let v = scalar_variance(noise) / (2.0 * Self::link(self.theta_star[0]));
        Stationary {
            mean: vec![0.0],
            covariance: Matrix::scalar(v),
        }
    }

    fn averaged(&self, _noise: &NoiseSpec, theta: &[f64]) -> AveragedObjective {
        let eta_star = Self::link(self.theta_star[0]);
        let w = 1.0 / (2.0 * eta_star);
        let d = Self::link(theta[0]) - eta_star;
        let p = Self::link_prime(theta[0]);
        AveragedObjective {
            gbar: 0.5 * w * d * d,
            grad: vec![w * d * p],
            hessian: Matrix::scalar(w * (p * p + d * Self::link_second(theta[0]))),
        }
    }

    fn fisher_at_truth(&self, _noise: &NoiseSpec) -> Matrix {
        let p = Self::link_prime(self.theta_star[0]);
        Matrix::scalar(p * p / (2.0 * Self::link(self.theta_star[0])))
    }
}

/// The built-in catalog, dispatched statically in the estimation loop.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinModel {
    Ou(ScalarOu),
    Linear(LinearFamily),
    Affine(AffineMeanReversion),
    BoundedLink(BoundedLink),
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            BuiltinModel::Ou($m) => $e,
            BuiltinModel::Linear($m) => $e,
            BuiltinModel::Affine($m) => $e,
            BuiltinModel::BoundedLink($m) => $e,
        }
    };
}

impl DriftModel for BuiltinModel {
    fn name(&self) -> &str {
        dispatch!(self, m => m.name())
    }
    fn param_dim(&self) -> usize {
        dispatch!(self, m => m.param_dim())
    }
    fn state_dim(&self) -> usize {
        dispatch!(self, m => m.state_dim())
    }
    #[inline]
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        dispatch!(self, m => m.drift(x, theta, out))
    }
    #[inline]
    fn drift_grad(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        dispatch!(self, m => m.drift_grad(x, theta, out))
    }
    #[inline]
    fn true_drift(&self, x: &[f64], out: &mut [f64]) {
        dispatch!(self, m => m.true_drift(x, out))
    }
    fn true_theta(&self) -> Option<&[f64]> {
        dispatch!(self, m => m.true_theta())
    }
    fn analytic(&self) -> Option<&dyn AnalyticModel> {
        dispatch!(self, m => m.analytic())
    }
}

type VecFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;
type TruthFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A user-supplied family. Misspecified families are allowed; no analytic
/// metadata is available for them.
pub struct CustomModel {
    name: String,
    k: usize,
    m: usize,
    drift: Box<VecFn>,
    grad: Box<VecFn>,
    truth: Box<TruthFn>,
    true_theta: Option<Vec<f64>>,
}

impl CustomModel {
    pub fn new(
        name: impl Into<String>,
        param_dim: usize,
        state_dim: usize,
        drift: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        drift_grad: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        true_drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        CustomModel {
            name: name.into(),
            k: param_dim,
            m: state_dim,
            drift: Box::new(drift),
            grad: Box::new(drift_grad),
            truth: Box::new(true_drift),
            true_theta: None,
        }
    }

    pub fn with_true_theta(mut self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.k {
            return Err(CoreError::Dimension {
                what: "true theta",
                expected: self.k,
                got: theta.len(),
            });
        }
        self.true_theta = Some(theta);
        Ok(self)
    }
}

impl core::fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CustomModel")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl DriftModel for CustomModel {
    fn name(&self) -> &str {
        &self.name
    }
    fn param_dim(&self) -> usize {
        self.k
    }
    fn state_dim(&self) -> usize {
        self.m
    }
    fn drift(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        (self.drift)(x, theta, out)
    }
    fn drift_grad(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        (self.grad)(x, theta, out)
    }
    fn true_drift(&self, x: &[f64], out: &mut [f64]) {
        (self.truth)(x, out)
    }
    fn true_theta(&self) -> Option<&[f64]> {
        self.true_theta.as_deref()
    }
}

pub(crate) fn check_dims<M: DriftModel + ?Sized>(model: &M, noise: &NoiseSpec, x: &[f64], theta: &[f64]) -> Result<()> {
    let m = model.state_dim();
    if noise.dim() != m {
        return Err(CoreError::Dimension {
            what: "noise",
            expected: m,
            got: noise.dim(),
        });
    }
    if x.len() != m {
        return Err(CoreError::Dimension {
            what: "state",
            expected: m,
            got: x.len(),
        });
    }
    if theta.len() != model.param_dim() {
        return Err(CoreError::Dimension {
            what: "parameter",
            expected: model.param_dim(),
            got: theta.len(),
        });
    }
    Ok(())
}

/// `f(x, θ) − f*(x)`
fn residual<M: DriftModel + ?Sized>(model: &M, x: &[f64], theta: &[f64]) -> Vec<f64> {
    let m = model.state_dim();
    let mut f = vec![0.0; m];
    let mut fs = vec![0.0; m];
    model.drift(x, theta, &mut f);
    model.true_drift(x, &mut fs);
    f.iter().zip(&fs).map(|(a, b)| a - b).collect()
}

/// `g(x, θ) = ½⟨f − f*, (σσᵀ)⁻¹ (f − f*)⟩`
pub fn pointwise_objective<M: DriftModel + ?Sized>(model: &M, noise: &NoiseSpec, x: &[f64], theta: &[f64]) -> Result<f64> {
    check_dims(model, noise, x, theta)?;
    let r = residual(model, x, theta);
    let g = 0.5 * dot(&r, &noise.precision().mul_vec(&r));
    if !g.is_finite() {
        return Err(CoreError::Evaluation {
            x: x.to_vec(),
            theta: theta.to_vec(),
        });
    }
    Ok(g.max(0.0))
}

/// `∇_θ g(x, θ) = ∇_θf (σσᵀ)⁻¹ (f − f*)`
pub fn objective_gradient<M: DriftModel + ?Sized>(
    model: &M,
    noise: &NoiseSpec,
    x: &[f64],
    theta: &[f64],
) -> Result<Vec<f64>> {
    check_dims(model, noise, x, theta)?;
    let (k, m) = (model.param_dim(), model.state_dim());
    let w = noise.precision().mul_vec(&residual(model, x, theta));
    let mut grad = vec![0.0; k * m];
    model.drift_grad(x, theta, &mut grad);
    Ok((0..k).map(|i| dot(&grad[i * m..(i + 1) * m], &w)).collect())
}

/// ḡ(θ) = ∫ g(x, θ) π(dx) in closed form, for models that carry analytic metadata.
pub fn averaged_objective<M: DriftModel + ?Sized>(
    model: &M,
    noise: &NoiseSpec,
    theta: &[f64],
) -> Result<AveragedObjective> {
    let analytic = model.analytic().ok_or_else(|| {
        CoreError::Unsupported(alloc::format!(
            "model '{}' has no closed-form invariant measure; use the poisson module's quadrature route",
            model.name()
        ))
    })?;
    if theta.len() != model.param_dim() {
        return Err(CoreError::Dimension {
            what: "parameter",
            expected: model.param_dim(),
            got: theta.len(),
        });
    }
    if noise.dim() != model.state_dim() {
        return Err(CoreError::Dimension {
            what: "noise",
            expected: model.state_dim(),
            got: noise.dim(),
        });
    }
    Ok(analytic.averaged(noise, theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthTier {
    /// Up to quadratic growth in θ (strongly convex results).
    Quadratic,
    /// Up to linear growth in θ (non-convex CLT).
    Linear,
}

impl GrowthTier {
    pub fn bound(self) -> f64 {
        match self {
            GrowthTier::Quadratic => 2.0,
            GrowthTier::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub passes: bool,
    pub estimated_degree: f64,
}

/// Estimates the growth degree of ‖f(x, θ)‖ in ‖θ‖ by log-log regression for
/// ‖θ‖ ∈ [10, 10⁴] along several directions and fixed state probes.
pub fn growth_check<M: DriftModel + ?Sized>(model: &M, tier: GrowthTier) -> Result<GrowthReport> {
    let (k, m) = (model.param_dim(), model.state_dim());
    let mut directions: Vec<Vec<f64>> = Vec::new();
    let diag = 1.0 / libm::sqrt(k as f64);
    directions.push(vec![diag; k]);
    directions.push(vec![-diag; k]);
    for i in 0..k {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        directions.push(e.clone());
        e[i] = -1.0;
        directions.push(e);
    }
    let x_probes: Vec<Vec<f64>> = [0.5, 1.0, 2.0, -1.5].iter().map(|&c| vec![c; m]).collect();
    let radii: Vec<f64> = (0..13).map(|j| libm::pow(10.0, 1.0 + 3.0 * j as f64 / 12.0)).collect();

    let mut degree = 0.0f64;
    let mut out = vec![0.0; m];
    for dir in &directions {
        for x in &x_probes {
            let mut logs = Vec::with_capacity(radii.len());
            for &r in &radii {
                let theta: Vec<f64> = dir.iter().map(|d| d * r).collect();
                model.drift(x, &theta, &mut out);
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::Evaluation {
                        x: x.clone(),
                        theta,
                    });
                }
                let n = norm(&out);
                if n == 0.0 {
                    break;
                }
                logs.push((libm::log(r), libm::log(n)));
            }
            if logs.len() < radii.len() {
                continue;
            }
            degree = degree.max(least_squares_slope(&logs));
        }
    }
    Ok(GrowthReport {
        passes: degree <= tier.bound() + 0.1,
        estimated_degree: degree,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Max relative error between `drift_grad` and central differences of
/// `drift` (step `1e-5·max(1, |θ_i|)`) over random probes.
pub fn gradient_check<M: DriftModel + ?Sized>(model: &M, probes: usize, seed: u64) -> f64 {
    let (k, m) = (model.param_dim(), model.state_dim());
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let center = model.true_theta().map(|t| t.to_vec()).unwrap_or_else(|| vec![0.0; k]);
    let mut analytic = vec![0.0; k * m];
    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let x: Vec<f64> = (0..m).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let theta: Vec<f64> = center.iter().map(|c| c + rng.sample::<f64, _>(StandardNormal)).collect();
        model.drift_grad(&x, &theta, &mut analytic);
        for i in 0..k {
            let h = 1e-5 * theta[i].abs().max(1.0);
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += h;
            tm[i] -= h;
            model.drift(&x, &tp, &mut plus);
            model.drift(&x, &tm, &mut minus);
            for j in 0..m {
                let fd = (plus[j] - minus[j]) / (2.0 * h);
                let err = (analytic[i * m + j] - fd).abs() / fd.abs().max(1.0);
                worst = worst.max(err);
            }
        }
    }
    worst
}

/// Max of ‖f(x, θ*) − f*(x)‖ over the given probe states. `None` if θ* is unknown.
pub fn well_specified_gap<M: DriftModel + ?Sized>(model: &M, probes: &[Vec<f64>]) -> Option<f64> {
    let theta = model.true_theta()?;
    Some(probes.iter().map(|x| norm(&residual(model, x, theta))).fold(0.0, f64::max))
}
