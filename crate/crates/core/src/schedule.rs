//! Learning-rate schedules `α_t = C_α / (C_0 + t)` and regime analysis.

use crate::quad::integrate;
use crate::{CoreError, Result};

/// Polynomial learning rate `α_t = C_α / (C_0 + t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec {
    c_alpha: f64,
    c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Supercritical,
    Boundary,
    Subcritical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub cc_alpha: f64,
    pub regime: Regime,
    /// Predicted log-log slope of E‖θ_t − θ*‖² in t.
    pub predicted_l2_slope: f64,
    /// At the boundary the rate picks up a logarithmic factor, `log t / t`.
    pub log_correction: bool,
}

const REGIME_EPS: f64 = 1e-12;

impl ScheduleSpec {
    pub fn new(c_alpha: f64, c0: f64) -> Result<Self> {
        if !(c_alpha > 0.0 && c_alpha.is_finite()) {
            return Err(CoreError::Input(alloc::format!("c_alpha must be positive, got {c_alpha}")));
        }
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(CoreError::Input(alloc::format!("c0 must be nonnegative, got {c0}")));
        }
        Ok(ScheduleSpec { c_alpha, c0 })
    }

    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn alpha(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || self.c0 + t <= 0.0 {
            return Err(CoreError::Domain(alloc::format!("alpha undefined at t = {t} with c0 = {}", self.c0)));
        }
        Ok(self.rate(t))
    }

    /// Unchecked `α_t` for the inner loop.
    #[inline]
    pub fn rate(&self, t: f64) -> f64 {
        self.c_alpha / (self.c0 + t)
    }

    /// `∫_s^t α_u du`
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        self.c_alpha * libm::log((self.c0 + t) / (self.c0 + s))
    }

    /// Classifies the product `C·C_α` where `C` is the smallest Hessian eigenvalue at θ*.
    pub fn regime_check(&self, convexity_constant: f64) -> Result<RegimeReport> {
        if !(convexity_constant > 0.0 && convexity_constant.is_finite()) {
            return Err(CoreError::Domain(alloc::format!(
                "convexity constant must be positive, got {convexity_constant}"
            )));
        }
        let cc_alpha = convexity_constant * self.c_alpha;
        let (regime, slope) = if cc_alpha > 1.0 + REGIME_EPS {
            (Regime::Supercritical, -1.0)
        } else if cc_alpha < 1.0 - REGIME_EPS {
            (Regime::Subcritical, -2.0 * cc_alpha)
        } else {
            (Regime::Boundary, -1.0)
        };
        Ok(RegimeReport {
            cc_alpha,
            regime,
            predicted_l2_slope: slope,
            log_correction: regime == Regime::Boundary,
        })
    }

    /// `t · ∫₁ᵗ α_s² e^{−λ ∫ₛᵗ α_u du} ds` at `t = horizon`, by adaptive quadrature.
    ///
    /// This is the scalar bracket that multiplies h̄ in the limiting covariance
    /// when `λ` is a sum of two Hessian eigenvalues; for the polynomial schedule
    /// it tends to `C_α² / (λC_α − 1)`.
    pub fn bracket_limit(&self, lambda_sum: f64, horizon: f64, tol: f64) -> Result<f64> {
        let product = lambda_sum * self.c_alpha;
        if !(product > 1.0) {
            return Err(CoreError::Domain(alloc::format!(
                "bracket diverges unless lambda_sum * c_alpha > 1 (got {lambda_sum} * {} = {product})",
                self.c_alpha
            )));
        }
        if !(horizon >= 1.0 && horizon.is_finite()) || !(tol > 0.0) {
            return Err(CoreError::Input("bracket_limit needs horizon >= 1 and tol > 0".into()));
        }
        // substitute u = ln(C0 + s) so the mass piled up near s = t is spread out
        let t = horizon;
        let integrand = |u: f64| {
            let s = libm::exp(u) - self.c0;
            let a = self.rate(s);
            t * a * a * libm::exp(-lambda_sum * self.integral(s, t)) * (self.c0 + s)
        };
        let lo = libm::log(self.c0 + 1.0);
        let hi = libm::log(self.c0 + t);
        let (value, _) = integrate(integrand, lo, hi, tol * 1e-3, tol * 1e-3)?;
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        assert_eq!(ScheduleSpec::new(1.0, 1.0).unwrap().alpha(0.0).unwrap(), 1.0);
        assert_eq!(ScheduleSpec::new(4.0, 0.0).unwrap().alpha(2.0).unwrap(), 2.0);
        assert!((ScheduleSpec::new(4.0, 1.0).unwrap().alpha(999.0).unwrap() - 0.004).abs() < 1e-18);
        assert!(ScheduleSpec::new(4.0, 0.0).unwrap().alpha(0.0).is_err());
        assert!(ScheduleSpec::new(-1.0, 0.0).is_err());
        assert!(ScheduleSpec::new(1.0, -0.5).is_err());
    }

    #[test]
    fn regimes() {
        let s = ScheduleSpec::new(4.0, 0.0).unwrap();
        let r = s.regime_check(0.5).unwrap();
        assert_eq!((r.regime, r.predicted_l2_slope), (Regime::Supercritical, -1.0));

        let r = ScheduleSpec::new(0.8, 0.0).unwrap().regime_check(0.5).unwrap();
        assert_eq!(r.regime, Regime::Subcritical);
        assert!((r.predicted_l2_slope + 0.8).abs() < 1e-15);

        let r = ScheduleSpec::new(1.0, 0.0).unwrap().regime_check(1.0).unwrap();
        assert_eq!(r.regime, Regime::Boundary);
        assert!(r.log_correction);

        assert!(s.regime_check(0.0).is_err());
    }

    #[test]
    fn regime_depends_on_product_only() {
        let a = ScheduleSpec::new(3.0, 0.0).unwrap().regime_check(0.25).unwrap();
        let b = ScheduleSpec::new(6.0, 0.0).unwrap().regime_check(0.125).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn integral_grows_logarithmically() {
        let s = ScheduleSpec::new(2.0, 0.0).unwrap();
        let (numeric, _) = integrate(|t| s.rate(t), 1.0, 1e6, 0.0, 1e-10).unwrap();
        assert!((numeric / (2.0 * libm::log(1e6)) - 1.0).abs() < 1e-6);
        let shifted = ScheduleSpec::new(2.0, 1.0).unwrap();
        let (numeric, _) = integrate(|t| shifted.rate(t), 1.0, 1e6, 0.0, 1e-10).unwrap();
        assert!((numeric / shifted.integral(1.0, 1e6) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bracket_limit_closed_forms() {
        let s = ScheduleSpec::new(2.0, 0.0).unwrap();
        let b = s.bracket_limit(2.0, 1e6, 1e-6).unwrap();
        assert!((b - 4.0 / 3.0).abs() < 1e-4, "{b}");

        let s = ScheduleSpec::new(1.0, 0.0).unwrap();
        assert!((s.bracket_limit(3.0, 1e6, 1e-6).unwrap() - 0.5).abs() < 1e-4);

        let s = ScheduleSpec::new(0.9, 0.0).unwrap();
        assert!(matches!(s.bracket_limit(1.0, 1e6, 1e-6), Err(CoreError::Domain(_))));
    }

    #[test]
    fn bracket_limit_converges_in_horizon() {
        let s = ScheduleSpec::new(4.0, 1.0).unwrap();
        let tol = 1e-4;
        let a = s.bracket_limit(1.0, 1e5, tol * 1e-2).unwrap();
        let b = s.bracket_limit(1.0, 1e6, tol * 1e-2).unwrap();
        assert!((a - b).abs() < tol);
        assert!((b - 16.0 / 3.0).abs() < tol);
    }
}
