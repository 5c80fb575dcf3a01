//! Numerical quadrature: globally adaptive Gauss–Kronrod (7/15) for scalar
//! and vector-valued integrands, plus a fixed 5-point Gauss–Legendre rule
//! used for cell-wise integration on grids.

use alloc::vec;
use alloc::vec::Vec;

use crate::{CoreError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 5-point Gauss–Legendre nodes and weights on [-1, 1].
pub const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
pub const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// `∫_a^b f` with the 5-point Gauss–Legendre rule.
pub fn gauss_legendre5(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

fn gk15<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, buf: &mut [f64], dim: usize) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let nodes: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for &sign in nodes {
            f(c + sign * h * x, buf);
            for d in 0..dim {
                kron[d] += wk * buf[d];
                if i % 2 == 1 {
                    gauss[d] += WG[i / 2] * buf[d];
                }
            }
        }
    }
    let mut error = 0.0f64;
    for d in 0..dim {
        kron[d] *= h;
        gauss[d] *= h;
        error = error.max((kron[d] - gauss[d]).abs());
    }
    Segment {
        a,
        b,
        value: kron,
        error,
    }
}

/// Globally adaptive Gauss–Kronrod integration of a vector-valued function.
///
/// The integrand writes its `dim` components into the provided buffer. The
/// error is measured in the max norm and the loop stops once it falls below
/// `max(abs_tol, rel_tol · |I|_∞)`.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(CoreError::Input("quadrature bounds must be finite with a <= b".into()));
    }
    let mut buf = vec![0.0; dim];
    let mut segments = vec![gk15(&mut f, a, b, &mut buf, dim)];
    let mut evaluations = 15;
    loop {
        let mut total = vec![0.0; dim];
        let mut error = 0.0;
        for s in &segments {
            for d in 0..dim {
                total[d] += s.value[d];
            }
            error += s.error;
        }
        if total.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Integration("non-finite integrand".into()));
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if error <= abs_tol.max(rel_tol * scale) {
            return Ok(QuadResult {
                value: total,
                error,
                evaluations,
            });
        }
        if segments.len() >= max_segments {
            return Err(CoreError::Integration("segment budget exhausted before tolerance".into()));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.error.total_cmp(&y.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            return Err(CoreError::Integration("interval width underflow".into()));
        }
        segments.push(gk15(&mut f, seg.a, mid, &mut buf, dim));
        segments.push(gk15(&mut f, mid, seg.b, &mut buf, dim));
        evaluations += 30;
    }
}

/// Scalar convenience wrapper around [`integrate_vec`]; returns `(value, error)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let r = integrate_vec(|x, out| out[0] = f(x), 1, a, b, abs_tol, rel_tol, 10_000)?;
    Ok((r.value[0], r.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // GK15 integrates degree 22 exactly
        let (v, _) = integrate(|x| x.powi(10), 0.0, 1.0, 1e-14, 0.0).unwrap();
        assert!((v - 1.0 / 11.0).abs() < 1e-15);
        let g = gauss_legendre5(0.0, 2.0, |x| x.powi(9));
        assert!((g - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn peaked_integrand_converges() {
        let (v, _) = integrate(|x| libm::exp(-1000.0 * (x - 0.3) * (x - 0.3)), 0.0, 1.0, 1e-13, 1e-12).unwrap();
        let exact = libm::sqrt(core::f64::consts::PI / 1000.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn vector_components_share_segments() {
        let r = integrate_vec(
            |x, out| {
                out[0] = libm::sin(x);
                out[1] = libm::cos(x);
            },
            2,
            0.0,
            core::f64::consts::PI,
            1e-13,
            0.0,
            1000,
        )
        .unwrap();
        assert!((r.value[0] - 2.0).abs() < 1e-13);
        assert!(r.value[1].abs() < 1e-13);
    }

    #[test]
    fn rejects_reversed_bounds() {
        assert!(integrate(|x| x, 1.0, 0.0, 1e-8, 0.0).is_err());
    }
}
