//! Limiting covariance Σ̄ of `√t (θ_t − θ*)` by two independent routes, the
//! fundamental solution of the linearised error dynamics, and an approximate
//! ODE for the second moment.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::quad::integrate_vec;
use crate::schedule::ScheduleSpec;
use crate::{CoreError, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Columns are eigenvectors.
    pub u: Matrix,
    /// Ascending.
    pub lambda: Vec<f64>,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> Matrix {
        self.u.matmul(&Matrix::from_diag(&self.lambda)).matmul(&self.u.transpose())
    }

    /// `U · diag(g(λ)) · Uᵀ`
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Matrix {
        let d: Vec<f64> = self.lambda.iter().map(|&l| g(l)).collect();
        self.u.matmul(&Matrix::from_diag(&d)).matmul(&self.u.transpose())
    }
}

fn check_symmetric(a: &Matrix, what: &str) -> Result<()> {
    if !a.is_square() || a.rows() == 0 {
        return Err(CoreError::Input(alloc::format!("{what} must be a non-empty square matrix")));
    }
    if !a.is_finite() {
        return Err(CoreError::Input(alloc::format!("{what} has non-finite entries")));
    }
    if a.asymmetry() > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(CoreError::Input(alloc::format!(
            "{what} is not symmetric (asymmetry {:e})",
            a.asymmetry()
        )));
    }
    Ok(())
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
/// `1e-12 · ‖A‖`.
pub fn symmetric_eigen(a: &Matrix) -> Result<EigenDecomposition> {
    check_symmetric(a, "matrix")?;
    let n = a.rows();
    let mut m = a.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>();
        if libm::sqrt(off) <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let lambda: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut u = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            u[(r, col)] = v[(r, src)];
        }
    }
    Ok(EigenDecomposition { u, lambda })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Eigen,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePrediction {
    pub sigma_bar: Matrix,
    pub hessian: Matrix,
    pub hbar: Matrix,
    pub c_alpha: f64,
    pub method: Method,
}

fn validate_inputs(hessian: &Matrix, hbar: &Matrix, c_alpha: f64) -> Result<EigenDecomposition> {
    check_symmetric(hessian, "hessian")?;
    check_symmetric(hbar, "hbar")?;
    if hessian.rows() != hbar.rows() {
        return Err(CoreError::Dimension {
            what: "hbar",
            expected: hessian.rows(),
            got: hbar.rows(),
        });
    }
    if !(c_alpha > 0.0 && c_alpha.is_finite()) {
        return Err(CoreError::Input(alloc::format!("c_alpha must be positive, got {c_alpha}")));
    }
    let eig = symmetric_eigen(hessian)?;
    let lambda_min = eig.lambda[0];
    if !(lambda_min > 0.0) {
        return Err(CoreError::Input(alloc::format!(
            "hessian must be positive definite (smallest eigenvalue {lambda_min})"
        )));
    }
    if !(2.0 * lambda_min * c_alpha > 1.0) {
        return Err(CoreError::Domain(alloc::format!(
            "limiting covariance needs 2 * lambda_min * c_alpha > 1 (lambda_min = {lambda_min}, c_alpha = {c_alpha})"
        )));
    }
    Ok(eig)
}

fn finish(sigma: Matrix, hessian: &Matrix, hbar: &Matrix, c_alpha: f64, method: Method) -> Result<CovariancePrediction> {
    let sigma_bar = sigma.symmetrize();
    let min_eig = symmetric_eigen(&sigma_bar)?.lambda[0];
    if min_eig < -1e-10 * sigma_bar.max_abs().max(1.0) {
        return Err(CoreError::Input(alloc::format!(
            "limiting covariance is not positive semidefinite (min eigenvalue {min_eig}); is hbar PSD?"
        )));
    }
    Ok(CovariancePrediction {
        sigma_bar,
        hessian: hessian.clone(),
        hbar: hbar.clone(),
        c_alpha,
        method,
    })
}

/// `Σ̄ = U [ (Uᵀ h̄ U)_{mm'} · C_α² / ((λ_m + λ_m') C_α − 1) ] Uᵀ`
pub fn sigma_bar_eigen(hessian: &Matrix, hbar: &Matrix, c_alpha: f64) -> Result<CovariancePrediction> {
    let eig = validate_inputs(hessian, hbar, c_alpha)?;
    let k = hessian.rows();
    let mut core = eig.u.transpose().matmul(hbar).matmul(&eig.u);
    for a in 0..k {
        for b in 0..k {
            core[(a, b)] *= c_alpha * c_alpha / ((eig.lambda[a] + eig.lambda[b]) * c_alpha - 1.0);
        }
    }
    let sigma = eig.u.matmul(&core).matmul(&eig.u.transpose());
    finish(sigma, hessian, hbar, c_alpha, Method::Eigen)
}

/// `Σ̄ = C_α² ∫₀^∞ e^{−s(C_α H − I/2)} h̄ e^{−s(C_α Hᵀ − I/2)} ds`, evaluated on
/// doubling panels with matrix exponentials (no eigendecomposition) until the
/// integrand norm drops below `tol · 10⁻³`.
pub fn sigma_bar_quadrature(hessian: &Matrix, hbar: &Matrix, c_alpha: f64, tol: f64) -> Result<CovariancePrediction> {
    validate_inputs(hessian, hbar, c_alpha)?;
    if !(tol > 0.0) {
        return Err(CoreError::Input("tol must be positive".into()));
    }
    let k = hessian.rows();
    let a = hessian.scale(c_alpha).sub(&Matrix::identity(k).scale(0.5));
    let integrand = |s: f64, out: &mut [f64]| {
        let e = a.scale(-s).expm();
        let v = e.matmul(hbar).matmul(&e.transpose());
        out.copy_from_slice(v.as_slice());
    };
    let mut total = vec![0.0; k * k];
    let mut buf = vec![0.0; k * k];
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let cutoff = tol * 1e-3;
    for _ in 0..200 {
        let panel = integrate_vec(integrand, k * k, lo, hi, cutoff * 1e-2, 1e-13, 2000)?;
        total.iter_mut().zip(&panel.value).for_each(|(t, p)| *t += p);
        integrand(hi, &mut buf);
        let tail = c_alpha * c_alpha * libm::sqrt(buf.iter().map(|v| v * v).sum::<f64>());
        if tail < cutoff {
            let sigma = Matrix::from_row_major(k, k, total)?.scale(c_alpha * c_alpha);
            return finish(sigma, hessian, hbar, c_alpha, Method::Quadrature);
        }
        if !tail.is_finite() {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(CoreError::Domain("covariance integrand does not decay".into()))
}

fn check_times(t: f64, s: f64) -> Result<()> {
    if !(s >= 1.0 && s <= t && t.is_finite()) {
        return Err(CoreError::Domain(alloc::format!("need 1 <= s <= t, got s = {s}, t = {t}")));
    }
    Ok(())
}

/// `Φ*_{t,s} = U diag(((C0+s)/(C0+t))^{λ_m C_α}) Uᵀ`, the propagator of
/// `dΦ = −α_t H Φ dt`. Reduces to `(s/t)^{λC_α}` when `C0 = 0`.
pub fn fundamental_solution(hessian: &Matrix, schedule: &ScheduleSpec, t: f64, s: f64) -> Result<Matrix> {
    check_times(t, s)?;
    let eig = symmetric_eigen(hessian)?;
    let ratio = (schedule.c0() + s) / (schedule.c0() + t);
    Ok(eig.map(|l| libm::pow(ratio, l * schedule.c_alpha())))
}

/// `Ψ^{(p)}_{t,s} = ((C0+s)/(C0+t))^{p C C_α}`
pub fn psi(p: f64, convexity_constant: f64, schedule: &ScheduleSpec, t: f64, s: f64) -> Result<f64> {
    check_times(t, s)?;
    if !(p >= 1.0) {
        return Err(CoreError::Input(alloc::format!("psi needs p >= 1, got {p}")));
    }
    let ratio = (schedule.c0() + s) / (schedule.c0() + t);
    Ok(libm::pow(ratio, p * convexity_constant * schedule.c_alpha()))
}

/// Integrates `dm/dt = −2 α_t C m + α_t² tr h̄` with classical RK4 from
/// `t_grid[0]` and reports `m` at each grid time.
pub fn moment_ode_oracle(
    convexity_constant: f64,
    hbar_trace: f64,
    schedule: &ScheduleSpec,
    m0: f64,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    let Some(&t_start) = t_grid.first() else {
        return Ok(Vec::new());
    };
    if !(t_start >= 1.0) {
        return Err(CoreError::Input(alloc::format!("time grid must start at or after 1, got {t_start}")));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CoreError::Input("time grid must be strictly increasing".into()));
    }
    let c = convexity_constant;
    let rhs = |t: f64, m: f64| {
        let a = schedule.rate(t);
        -2.0 * a * c * m + a * a * hbar_trace
    };
    let stiffness = (2.0 * c * schedule.c_alpha()).max(1.0);
    let mut out = Vec::with_capacity(t_grid.len());
    let (mut t, mut m) = (t_start, m0);
    out.push(m);
    for &target in &t_grid[1..] {
        while t < target {
            let h = (0.05 * (schedule.c0() + t) / stiffness).min(target - t);
            if !(h > 1e-12 * t) {
                // accept landing within rounding of the target
                if target - t <= 1e-12 * t {
                    break;
                }
                return Err(CoreError::Integration(alloc::format!("step size underflow at t = {t}")));
            }
            let k1 = rhs(t, m);
            let k2 = rhs(t + 0.5 * h, m + 0.5 * h * k1);
            let k3 = rhs(t + 0.5 * h, m + 0.5 * h * k2);
            let k4 = rhs(t + h, m + h * k3);
            m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t = if target - t - h <= 0.0 { target } else { t + h };
        }
        out.push(m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_simple_matrices() {
        let e = symmetric_eigen(&Matrix::identity(3)).unwrap();
        assert_eq!(e.lambda, vec![1.0, 1.0, 1.0]);
        let e = symmetric_eigen(&Matrix::from_diag(&[2.0, 1.0])).unwrap();
        assert_eq!(e.lambda, vec![1.0, 2.0]);
        assert!((e.u[(1, 0)].abs() - 1.0).abs() < 1e-15);
        assert!(e.u.transpose().matmul(&e.u).max_abs_diff(&Matrix::identity(2)) < 1e-15);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&a), Err(CoreError::Input(_))));
    }

    #[test]
    fn sigma_bar_hand_values() {
        let one = Matrix::scalar(1.0);
        let p = sigma_bar_eigen(&one, &one, 1.0).unwrap();
        assert!((p.sigma_bar[(0, 0)] - 1.0).abs() < 1e-15);

        let p = sigma_bar_eigen(&Matrix::from_diag(&[1.0, 2.0]), &Matrix::identity(2), 2.0).unwrap();
        assert!((p.sigma_bar[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
        assert!((p.sigma_bar[(1, 1)] - 4.0 / 7.0).abs() < 1e-14);
        assert!(p.sigma_bar[(0, 1)].abs() < 1e-15);

        let p = sigma_bar_eigen(&Matrix::scalar(0.5), &Matrix::scalar(0.5), 4.0).unwrap();
        assert!((p.sigma_bar[(0, 0)] - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_route_hand_values() {
        let one = Matrix::scalar(1.0);
        let p = sigma_bar_quadrature(&one, &one, 1.0, 1e-12).unwrap();
        assert!((p.sigma_bar[(0, 0)] - 1.0).abs() < 1e-10);

        let h = Matrix::from_rows(&[&[1.0, 0.3], &[0.3, 1.0]]).unwrap();
        let p = sigma_bar_quadrature(&Matrix::from_diag(&[1.0, 2.0]), &h, 2.0, 1e-12).unwrap();
        assert!((p.sigma_bar[(0, 1)] - 0.3 * 4.0 / 5.0).abs() < 1e-10);
        assert_eq!(p.method, Method::Quadrature);
    }

    #[test]
    fn regime_violation_is_a_domain_error() {
        let h = Matrix::scalar(0.5);
        assert!(matches!(sigma_bar_eigen(&h, &h, 1.0), Err(CoreError::Domain(_))));
        assert!(matches!(sigma_bar_quadrature(&h, &h, 0.9, 1e-8), Err(CoreError::Domain(_))));
    }

    #[test]
    fn fundamental_solution_values() {
        let s1 = ScheduleSpec::new(1.0, 0.0).unwrap();
        let phi = fundamental_solution(&Matrix::scalar(1.0), &s1, 2.0, 1.0).unwrap();
        assert!((phi[(0, 0)] - 0.5).abs() < 1e-15);
        let h = Matrix::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap();
        let id = fundamental_solution(&h, &s1, 3.0, 3.0).unwrap();
        assert!(id.max_abs_diff(&Matrix::identity(2)) < 1e-15);
        assert!(fundamental_solution(&h, &s1, 2.0, 3.0).is_err());
    }

    #[test]
    fn psi_values() {
        let s = ScheduleSpec::new(1.0, 0.0).unwrap();
        assert!((psi(2.0, 1.0, &s, 4.0, 1.0).unwrap() - 1.0 / 16.0).abs() < 1e-16);
        assert_eq!(psi(2.0, 1.0, &s, 4.0, 4.0).unwrap(), 1.0);
        let s = ScheduleSpec::new(4.0, 0.0).unwrap();
        let e = core::f64::consts::E;
        assert!((psi(1.0, 0.5, &s, e, 1.0).unwrap() - libm::exp(-2.0)).abs() < 1e-15);
        assert!(psi(1.0, 0.5, &s, 1.0, 2.0).is_err());
    }

    #[test]
    fn moment_ode_limits() {
        let s = ScheduleSpec::new(4.0, 0.0).unwrap();
        let zero = moment_ode_oracle(0.5, 0.0, &s, 0.0, &[1.0, 10.0, 100.0]).unwrap();
        assert!(zero.iter().all(|&m| m == 0.0));

        let grid = [1.0, 10.0, 1e3, 1e4];
        let m = moment_ode_oracle(0.5, 0.5, &s, 1.0, &grid).unwrap();
        let scaled = m[3] * 1e4;
        assert!((scaled / (8.0 / 3.0) - 1.0).abs() < 0.01, "{scaled}");
    }

    #[test]
    fn moment_ode_subcritical_tail_slope() {
        let s = ScheduleSpec::new(0.8, 0.0).unwrap();
        let grid: Vec<f64> = (0..=20).map(|j| libm::pow(10.0, 5.0 + j as f64 / 20.0)).collect();
        let mut full = vec![1.0];
        full.extend(&grid);
        let m = moment_ode_oracle(0.5, 0.5, &s, 1.0, &full).unwrap();
        let pts: Vec<(f64, f64)> = grid.iter().zip(&m[1..]).map(|(t, v)| (libm::log(*t), libm::log(*v))).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
        assert!((slope + 0.8).abs() < 0.02, "{slope}");
    }
}
