//! One-dimensional Poisson equation `L_x v = G` for the scalar diffusion
//! `dX = f*(X) dt + σ dW`, with `L_x v = f* v' + ½σ² v''`, and the
//! fluctuation matrix h̄(θ) built from its solutions.
//!
//! With the invariant density `π ∝ exp(2F/σ²)`, `F' = f*`, the centred
//! solution satisfies `(π v')' = (2/σ²) G π`, so
//! `v'(x) = (2/σ²) π(x)⁻¹ ∫_lo^x G π`. Everything is evaluated by
//! cell-wise Gauss–Legendre quadrature with π kept in log space.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::model::{objective_gradient, DriftModel, NoiseSpec};
use crate::quad::{gauss_legendre5, GL5_NODES, GL5_WEIGHTS};
use crate::{CoreError, Result};

/// Largest tail mass outside the grid that is tolerated.
pub const TAIL_MASS_LIMIT: f64 = 1e-6;

/// Largest `|∫ G dπ|` accepted before recentring.
pub const CENTERING_LIMIT: f64 = 1e-6;

/// Nodes where π falls below this are excluded from the trusted interval.
const TRUST_FLOOR: f64 = 1e-280;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CoreError::Input(alloc::format!("grid needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if n < 3 {
            return Err(CoreError::Input(alloc::format!("grid needs at least 3 nodes, got {n}")));
        }
        Ok(Grid1D { lo, hi, n })
    }

    /// `[mean − 6 sd, mean + 6 sd]` with `n` nodes.
    pub fn around(mean: f64, sd: f64, n: usize) -> Result<Self> {
        Self::new(mean - 6.0 * sd, mean + 6.0 * sd, n)
    }

    /// The default grid for models with a known stationary law: ±6 sd, 4001 nodes.
    pub fn default_for<M: DriftModel + ?Sized>(model: &M, noise: &NoiseSpec) -> Result<Self> {
        require_scalar(model, noise)?;
        let analytic = model.analytic().ok_or_else(|| {
            CoreError::Unsupported("default grid needs a closed-form stationary law; pass an explicit grid".into())
        })?;
        let st = analytic.stationary(noise);
        Self::around(st.mean[0], libm::sqrt(st.covariance[(0, 0)]), 4001)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

fn require_scalar<M: DriftModel + ?Sized>(model: &M, noise: &NoiseSpec) -> Result<()> {
    if model.state_dim() != 1 || noise.dim() != 1 {
        return Err(CoreError::Unsupported(alloc::format!(
            "the Poisson solver is one-dimensional; model '{}' has state dimension {}",
            model.name(),
            model.state_dim()
        )));
    }
    Ok(())
}

/// Log-space invariant density on a grid.
struct Density<'a, M: ?Sized> {
    model: &'a M,
    grid: Grid1D,
    two_over_s2: f64,
    /// `2F/σ² − log Z` at the nodes, so `π = exp(log_pi)`.
    log_pi: Vec<f64>,
}

impl<'a, M: DriftModel + ?Sized> Density<'a, M> {
    fn new(model: &'a M, noise: &NoiseSpec, grid: Grid1D) -> Result<Self> {
        require_scalar(model, noise)?;
        let s2 = noise.covariance()[(0, 0)];
        let two_over_s2 = 2.0 / s2;
        let mut d = Density {
            model,
            grid,
            two_over_s2,
            log_pi: vec![0.0; grid.len()],
        };
        for i in 1..grid.len() {
            let (a, b) = (grid.node(i - 1), grid.node(i));
            d.log_pi[i] = d.log_pi[i - 1] + two_over_s2 * gauss_legendre5(a, b, |y| d.true_drift(y));
        }
        if d.log_pi.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Evaluation {
                x: vec![f64::NAN],
                theta: Vec::new(),
            });
        }
        let peak = d.log_pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        d.log_pi.iter_mut().for_each(|v| *v -= peak);
        let mass: f64 = (0..grid.len() - 1).map(|i| d.cell_integral(i, |_| 1.0)).sum();
        let log_z = libm::log(mass);
        d.log_pi.iter_mut().for_each(|v| *v -= log_z);
        d.check_tails(s2)?;
        Ok(d)
    }

    fn true_drift(&self, y: f64) -> f64 {
        let mut out = [0.0];
        self.model.true_drift(&[y], &mut out);
        out[0]
    }

    /// `log π(y)` given `log π(a)`, for `y` within a cell of `a`.
    fn log_pi_from(&self, a: f64, log_pi_a: f64, y: f64) -> f64 {
        if y == a {
            return log_pi_a;
        }
        log_pi_a + self.two_over_s2 * gauss_legendre5(a, y, |z| self.true_drift(z))
    }

    fn pi_at(&self, i: usize, y: f64) -> f64 {
        libm::exp(self.log_pi_from(self.grid.node(i), self.log_pi[i], y))
    }

    /// `∫_{x_i}^{x_{i+1}} g π`
    fn cell_integral(&self, i: usize, g: impl Fn(f64) -> f64) -> f64 {
        self.partial_integral(i, self.grid.node(i + 1), g)
    }

    /// `∫_{x_i}^{y} g π` for `y` in cell `i`.
    fn partial_integral(&self, i: usize, y: f64, g: impl Fn(f64) -> f64) -> f64 {
        self.segment_integral(self.grid.node(i), self.log_pi[i], y, g)
    }

    /// Signed `∫_a^y g π` given `log π(a)`.
    fn segment_integral(&self, a: f64, log_pi_a: f64, y: f64, g: impl Fn(f64) -> f64) -> f64 {
        let c = 0.5 * (a + y);
        let h = 0.5 * (y - a);
        GL5_NODES
            .iter()
            .zip(GL5_WEIGHTS.iter())
            .map(|(u, w)| {
                let z = c + h * u;
                w * g(z) * libm::exp(self.log_pi_from(a, log_pi_a, z))
            })
            .sum::<f64>()
            * h
    }

    /// `∫ g π` over the half-line beyond one end of the grid, marching outward
    /// in grid-sized cells until π has fallen by a factor e⁻⁵⁰.
    ///
    /// The mass out there is tiny, but v' divides by π near the ends, so
    /// leaving it out would bias v' by a relative amount of order
    /// `π(end)/π(x)` well inside the grid.
    fn tail_integral(&self, upper: bool, g: impl Fn(f64) -> f64) -> f64 {
        let n = self.grid.len();
        let h = if upper { self.grid.step() } else { -self.grid.step() };
        let (mut a, start) = if upper { (self.grid.hi(), self.log_pi[n - 1]) } else { (self.grid.lo(), self.log_pi[0]) };
        let mut log_pi_a = start;
        let mut total = 0.0;
        for _ in 0..1_000_000 {
            if log_pi_a < start - 50.0 || !log_pi_a.is_finite() {
                break;
            }
            let b = a + h;
            total += self.segment_integral(a, log_pi_a, b, &g);
            log_pi_a = self.log_pi_from(a, log_pi_a, b);
            a = b;
        }
        // oriented integrals: outward on the upper side, inward on the lower
        if upper {
            total
        } else {
            -total
        }
    }

    fn check_tails(&self, s2: f64) -> Result<()> {
        let n = self.grid.len();
        let (lo, hi) = (self.grid.lo(), self.grid.hi());
        let (f_lo, f_hi) = (self.true_drift(lo), self.true_drift(hi));
        if !(f_lo > 0.0 && f_hi < 0.0) {
            return Err(CoreError::Truncation(alloc::format!(
                "true drift does not point inward at the grid ends (f*({lo}) = {f_lo}, f*({hi}) = {f_hi})"
            )));
        }
        // for a log-concave tail, mass beyond b is at most π(b)σ²/(2|f*(b)|)
        let lower = libm::exp(self.log_pi[0]) * s2 / (2.0 * f_lo.abs());
        let upper = libm::exp(self.log_pi[n - 1]) * s2 / (2.0 * f_hi.abs());
        if lower > TAIL_MASS_LIMIT || upper > TAIL_MASS_LIMIT {
            return Err(CoreError::Truncation(alloc::format!(
                "estimated mass outside [{lo}, {hi}] is {:e} below and {:e} above",
                lower,
                upper
            )));
        }
        Ok(())
    }

    fn mode(&self) -> usize {
        self.log_pi
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    fn pi(&self) -> Vec<f64> {
        self.log_pi.iter().map(|v| libm::exp(*v)).collect()
    }
}

/// Normalised invariant density at the grid nodes.
pub fn stationary_density<M: DriftModel + ?Sized>(model: &M, noise: &NoiseSpec, grid: &Grid1D) -> Result<Vec<f64>> {
    Ok(Density::new(model, noise, *grid)?.pi())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    pub grid: Grid1D,
    pub pi: Vec<f64>,
    pub v: Vec<f64>,
    pub dv_dx: Vec<f64>,
    /// `sup |L_x v − G|` over trusted interior nodes.
    pub residual_sup: f64,
    /// The quadrature mean `∫ G dπ` that was subtracted from G.
    pub centering_correction: f64,
    /// Node range `[first, last]` where π is representable and v' is reliable.
    pub trusted: (usize, usize),
    mid_dv_dx: Vec<f64>,
    mid_pi: Vec<f64>,
}

impl PoissonSolution {
    pub fn trusted_interval(&self) -> (f64, f64) {
        (self.grid.node(self.trusted.0), self.grid.node(self.trusted.1))
    }

    /// Simpson's rule per cell against π, using node and midpoint values of `g(x, v')`.
    fn integrate_with(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let h = self.grid.step();
        (0..self.grid.len() - 1)
            .map(|i| {
                let (a, b) = (self.grid.node(i), self.grid.node(i + 1));
                let m = 0.5 * (a + b);
                h / 6.0
                    * (g(a, self.dv_dx[i]) * self.pi[i]
                        + 4.0 * g(m, self.mid_dv_dx[i]) * self.mid_pi[i]
                        + g(b, self.dv_dx[i + 1]) * self.pi[i + 1])
            })
            .sum()
    }
}

/// Solves `L_x v = G` with `∫ v dπ = 0`.
///
/// Cumulative integrals of `Gπ` are accumulated from the low end on the left of
/// the mode and from the high end on the right, so the division by a tiny π in
/// either tail only sees that tail's own mass.
pub fn solve<M: DriftModel + ?Sized>(
    model: &M,
    noise: &NoiseSpec,
    g: impl Fn(f64) -> f64,
    grid: &Grid1D,
) -> Result<PoissonSolution> {
    let d = Density::new(model, noise, *grid)?;
    let n = grid.len();
    let h = grid.step();
    let k = d.two_over_s2;

    let cells: Vec<f64> = (0..n - 1).map(|i| d.cell_integral(i, &g)).collect();
    let (tail_lo, tail_hi) = (d.tail_integral(false, &g), d.tail_integral(true, &g));
    let (mass_lo, mass_hi) = (d.tail_integral(false, |_| 1.0), d.tail_integral(true, |_| 1.0));
    let mean: f64 = (cells.iter().sum::<f64>() + tail_lo + tail_hi) / (1.0 + mass_lo + mass_hi);
    if !mean.is_finite() {
        return Err(CoreError::Evaluation {
            x: vec![f64::NAN],
            theta: Vec::new(),
        });
    }
    if mean.abs() >= CENTERING_LIMIT {
        return Err(CoreError::Input(alloc::format!(
            "right-hand side is not centred under pi: mean {mean:e} exceeds {CENTERING_LIMIT:e}"
        )));
    }
    let gc = |x: f64| g(x) - mean;
    let cells: Vec<f64> = (0..n - 1).map(|i| cells[i] - mean * d.cell_integral(i, |_| 1.0)).collect();

    let mode = d.mode();
    // J(x_i) = ∫_lo^{x_i} G π = −∫_{x_i}^{hi} G π
    let mut j_nodes = vec![0.0; n];
    j_nodes[0] = tail_lo - mean * mass_lo;
    for i in 1..=mode {
        j_nodes[i] = j_nodes[i - 1] + cells[i - 1];
    }
    if mode + 1 < n {
        j_nodes[n - 1] = -(tail_hi - mean * mass_hi);
        for i in (mode + 1..n - 1).rev() {
            j_nodes[i] = j_nodes[i + 1] - cells[i];
        }
    }

    let pi = d.pi();
    let dv_dx: Vec<f64> = (0..n).map(|i| if pi[i] > 0.0 { k * j_nodes[i] / pi[i] } else { 0.0 }).collect();

    let mut mid_dv_dx = vec![0.0; n - 1];
    let mut mid_pi = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let m = 0.5 * (grid.node(i) + grid.node(i + 1));
        let j_mid = if i < mode {
            j_nodes[i] + d.partial_integral(i, m, gc)
        } else {
            j_nodes[i + 1] - (cells[i] - d.partial_integral(i, m, gc))
        };
        mid_pi[i] = d.pi_at(i, m);
        mid_dv_dx[i] = if mid_pi[i] > 0.0 { k * j_mid / mid_pi[i] } else { 0.0 };
    }

    let mut v = vec![0.0; n];
    for i in 1..n {
        v[i] = v[i - 1] + h / 6.0 * (dv_dx[i - 1] + 4.0 * mid_dv_dx[i - 1] + dv_dx[i]);
    }

    let first = pi.iter().position(|&p| p >= TRUST_FLOOR).unwrap_or(0);
    let last = pi.iter().rposition(|&p| p >= TRUST_FLOOR).unwrap_or(n - 1);

    let mut sol = PoissonSolution {
        grid: *grid,
        pi,
        v,
        dv_dx,
        residual_sup: 0.0,
        centering_correction: mean,
        trusted: (first, last),
        mid_dv_dx,
        mid_pi,
    };

    // v at midpoints by cubic Hermite interpolation, then centre under π
    let v_nodes = sol.v.clone();
    let v_mean: f64 = (0..n - 1)
        .map(|i| {
            let vm = 0.5 * (v_nodes[i] + v_nodes[i + 1]) + h * (sol.dv_dx[i] - sol.dv_dx[i + 1]) / 8.0;
            h / 6.0 * (v_nodes[i] * sol.pi[i] + 4.0 * vm * sol.mid_pi[i] + v_nodes[i + 1] * sol.pi[i + 1])
        })
        .sum();
    sol.v.iter_mut().for_each(|x| *x -= v_mean);

    let s2_half = 1.0 / k;
    let mut residual = 0.0f64;
    for i in first.max(1)..last.min(n - 2) + 1 {
        let x = grid.node(i);
        let second = (sol.dv_dx[i + 1] - sol.dv_dx[i - 1]) / (2.0 * h);
        let lv = d.true_drift(x) * sol.dv_dx[i] + s2_half * second;
        residual = residual.max((lv - gc(x)).abs());
    }
    if !residual.is_finite() {
        return Err(CoreError::Integration("non-finite Poisson residual".into()));
    }
    sol.residual_sup = residual;
    Ok(sol)
}

/// `h̄(θ) = ∫ (∇_θf/σ² − ∇_x v)σ²(∇_θf/σ² − ∇_x v)ᵀ dπ` for a scalar state,
/// where `v_c` solves `L_x v_c = ∂_c ḡ(θ) − ∂_c g(x, θ)`.
pub fn hbar<M: DriftModel + ?Sized>(model: &M, noise: &NoiseSpec, theta: &[f64], grid: &Grid1D) -> Result<Matrix> {
    require_scalar(model, noise)?;
    let k = model.param_dim();
    if theta.len() != k {
        return Err(CoreError::Dimension {
            what: "parameter",
            expected: k,
            got: theta.len(),
        });
    }
    let d = Density::new(model, noise, *grid)?;
    let s2 = noise.covariance()[(0, 0)];
    let grad_g = |x: f64| objective_gradient(model, noise, &[x], theta).expect("dimensions checked");
    let grad_gbar: Vec<f64> = (0..k)
        .map(|c| (0..grid.len() - 1).map(|i| d.cell_integral(i, |x| grad_g(x)[c])).sum())
        .collect();

    let mut solutions = Vec::with_capacity(k);
    for c in 0..k {
        let sol = solve(model, noise, |x| grad_gbar[c] - grad_g(x)[c], grid).map_err(|e| match e {
            CoreError::Input(msg) => CoreError::Input(alloc::format!("component {c}: {msg}")),
            other => other,
        })?;
        solutions.push(sol);
    }

    let drift_grad = |x: f64| {
        let mut out = vec![0.0; k];
        model.drift_grad(&[x], theta, &mut out);
        out
    };
    let nodes = grid.nodes();
    let h = grid.step();
    let mut out = Matrix::zeros(k, k);
    let first = &solutions[0];
    for a in 0..k {
        for b in a..k {
            let (sa, sb) = (&solutions[a], &solutions[b]);
            let term = |x: f64, va: f64, vb: f64| {
                let df = drift_grad(x);
                (df[a] / s2 - va) * s2 * (df[b] / s2 - vb)
            };
            let value: f64 = (0..grid.len() - 1)
                .map(|i| {
                    let (x0, x1) = (nodes[i], nodes[i + 1]);
                    let xm = 0.5 * (x0 + x1);
                    h / 6.0
                        * (term(x0, sa.dv_dx[i], sb.dv_dx[i]) * first.pi[i]
                            + 4.0 * term(xm, sa.mid_dv_dx[i], sb.mid_dv_dx[i]) * first.mid_pi[i]
                            + term(x1, sa.dv_dx[i + 1], sb.dv_dx[i + 1]) * first.pi[i + 1])
                })
                .sum();
            out[(a, b)] = value;
            out[(b, a)] = value;
        }
    }
    Ok(out)
}

/// `∫ ∇_θf (σσᵀ)⁻¹ ∇_θfᵀ dπ` by cell-wise quadrature: the well-specified value of h̄(θ*).
pub fn fisher_information<M: DriftModel + ?Sized>(
    model: &M,
    noise: &NoiseSpec,
    theta: &[f64],
    grid: &Grid1D,
) -> Result<Matrix> {
    let d = Density::new(model, noise, *grid)?;
    let k = model.param_dim();
    let s2 = noise.covariance()[(0, 0)];
    let mut out = Matrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let value: f64 = (0..grid.len() - 1)
                .map(|i| {
                    d.cell_integral(i, |x| {
                        let mut g = vec![0.0; k];
                        model.drift_grad(&[x], theta, &mut g);
                        g[a] * g[b] / s2
                    })
                })
                .sum();
            out[(a, b)] = value;
            out[(b, a)] = value;
        }
    }
    Ok(out)
}

impl PoissonSolution {
    /// `∫ v dπ` by the same Simpson rule used for centring.
    pub fn mean_under_pi(&self) -> f64 {
        let h = self.grid.step();
        (0..self.grid.len() - 1)
            .map(|i| {
                let vm = 0.5 * (self.v[i] + self.v[i + 1]) + h * (self.dv_dx[i] - self.dv_dx[i + 1]) / 8.0;
                h / 6.0 * (self.v[i] * self.pi[i] + 4.0 * vm * self.mid_pi[i] + self.v[i + 1] * self.pi[i + 1])
            })
            .sum()
    }

    /// `∫ (v')² dπ`, a convenient scalar summary of the correction's size.
    pub fn gradient_energy(&self) -> f64 {
        self.integrate_with(|_, dv| dv * dv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AffineMeanReversion, BoundedLink, ScalarOu};

    fn ou(theta: f64) -> ScalarOu {
        ScalarOu::new(theta).unwrap()
    }

    fn unit() -> NoiseSpec {
        NoiseSpec::scalar(1.0).unwrap()
    }

    fn grid() -> Grid1D {
        Grid1D::new(-6.0, 6.0, 4001).unwrap()
    }

    #[test]
    fn ou_density_is_gaussian() {
        let pi = stationary_density(&ou(1.0), &unit(), &grid()).unwrap();
        let mid = pi[2000];
        assert!((mid - 1.0 / libm::sqrt(core::f64::consts::PI)).abs() < 1e-10, "{mid}");
        for i in 0..2000 {
            assert!((pi[i] - pi[4000 - i]).abs() < 1e-10);
        }
        let h = grid().step();
        let trap: f64 = pi.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        assert!((trap - 1.0).abs() < 1e-8);
    }

    #[test]
    fn narrow_grid_is_a_truncation_error() {
        let g = Grid1D::new(-1.0, 1.0, 101).unwrap();
        assert!(matches!(stationary_density(&ou(1.0), &unit(), &g), Err(CoreError::Truncation(_))));
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let sol = solve(&ou(1.0), &unit(), |_| 0.0, &grid()).unwrap();
        assert!(sol.v.iter().chain(&sol.dv_dx).all(|&v| v == 0.0));
    }

    #[test]
    fn ou_quadratic_solution() {
        let sol = solve(&ou(1.0), &unit(), |x| 0.5 - x * x, &grid()).unwrap();
        let nodes = grid().nodes();
        for (i, &x) in nodes.iter().enumerate() {
            if x.abs() <= 5.0 {
                assert!((sol.dv_dx[i] - x).abs() < 1e-9, "x = {x}: {}", sol.dv_dx[i]);
                assert!((sol.v[i] - (0.5 * x * x - 0.25)).abs() < 1e-9);
            }
        }
        assert!(sol.residual_sup < 1e-6, "{}", sol.residual_sup);
        assert!(sol.mean_under_pi().abs() < 1e-10);
    }

    #[test]
    fn uncentred_rhs_is_rejected() {
        assert!(matches!(solve(&ou(1.0), &unit(), |x| x * x, &grid()), Err(CoreError::Input(_))));
    }

    #[test]
    fn hbar_at_truth() {
        let h = hbar(&ou(1.0), &unit(), &[1.0], &grid()).unwrap();
        assert!((h[(0, 0)] - 0.5).abs() < 1e-9);
        let bl = BoundedLink::new(1.0).unwrap();
        let expected = BoundedLink::link_prime(1.0).powi(2) / (2.0 * BoundedLink::link(1.0));
        let g = Grid1D::default_for(&bl, &unit()).unwrap();
        let h = hbar(&bl, &unit(), &[1.0], &g).unwrap();
        // the ±6 sd grid drops about 1e-7 of the second moment
        assert!((h[(0, 0)] - expected).abs() < 1e-6);
        let direct = fisher_information(&bl, &unit(), &[1.0], &g).unwrap();
        assert!((h[(0, 0)] - direct[(0, 0)]).abs() < 1e-10);
    }

    #[test]
    fn hbar_off_truth_includes_the_correction() {
        // v' = (θ − θ*) x / θ*, so the integrand is x²(θ/θ*)² and h̄ = m₂ θ²/θ*²
        let h = hbar(&ou(1.0), &unit(), &[2.0], &grid()).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-8, "{}", h[(0, 0)]);
    }

    #[test]
    fn affine_hbar_matches_fisher() {
        let m = AffineMeanReversion::new(2.0, 0.5).unwrap();
        let noise = NoiseSpec::scalar(0.7).unwrap();
        let g = Grid1D::default_for(&m, &noise).unwrap();
        let h = hbar(&m, &noise, &[2.0, 0.5], &g).unwrap();
        let f = m.analytic().unwrap().fisher_at_truth(&noise);
        assert!(h.max_abs_diff(&f) < 1e-6 * f.max_abs(), "{h:?} vs {f:?}");
    }
}
