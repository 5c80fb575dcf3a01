//! Estimators over Monte Carlo replications: moment curves, log-log slopes and
//! CLT diagnostics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::engine::Trajectory;
use crate::linalg::Matrix;
use crate::model::ParameterVector;
use crate::{CoreError, Fnv64, Result};

/// Fraction of failed replications above which a set is rejected.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// One-sample KS critical value at the 1% level is `KS_CRITICAL_1PCT / √N`.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFailure {
    pub index: usize,
    pub message: String,
}

/// Samples of θ at each checkpoint, ordered by replication index.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSet {
    pub n_reps: usize,
    pub master_seed: u64,
    pub checkpoints: Vec<f64>,
    pub theta_star: ParameterVector,
    /// `samples[j][r]` is θ at checkpoint `j` of the `r`-th successful replication.
    pub samples: Vec<Vec<ParameterVector>>,
    pub failures: Vec<ReplicationFailure>,
}

impl ReplicationSet {
    /// Assembles a set from per-replication results given in index order.
    pub fn from_results(
        master_seed: u64,
        theta_star: ParameterVector,
        results: Vec<Result<Trajectory>>,
    ) -> Result<Self> {
        let n_reps = results.len();
        if n_reps < 2 {
            return Err(CoreError::Input("a replication set needs at least two replications".into()));
        }
        let mut checkpoints: Option<Vec<f64>> = None;
        let mut samples: Vec<Vec<ParameterVector>> = Vec::new();
        let mut failures = Vec::new();
        for (index, result) in results.into_iter().enumerate() {
            match result {
                Ok(traj) => {
                    let times: Vec<f64> = traj.checkpoints.iter().map(|c| c.t).collect();
                    match &checkpoints {
                        None => {
                            samples = vec![Vec::with_capacity(n_reps); times.len()];
                            checkpoints = Some(times);
                        }
                        Some(existing) if *existing != times => {
                            return Err(CoreError::Input(alloc::format!(
                                "replication {index} recorded a different checkpoint grid"
                            )));
                        }
                        Some(_) => {}
                    }
                    for (j, c) in traj.checkpoints.into_iter().enumerate() {
                        if c.theta.len() != theta_star.len() {
                            return Err(CoreError::Dimension {
                                what: "replication theta",
                                expected: theta_star.len(),
                                got: c.theta.len(),
                            });
                        }
                        samples[j].push(c.theta);
                    }
                }
                Err(e) => failures.push(ReplicationFailure {
                    index,
                    message: alloc::format!("{e}"),
                }),
            }
        }
        if failures.len() as f64 > MAX_FAILURE_FRACTION * n_reps as f64 {
            let first = &failures[0];
            return Err(CoreError::Input(alloc::format!(
                "{} of {n_reps} replications failed (first: replication {}: {})",
                failures.len(),
                first.index,
                first.message
            )));
        }
        Ok(ReplicationSet {
            n_reps,
            master_seed,
            checkpoints: checkpoints.unwrap_or_default(),
            theta_star,
            samples,
            failures,
        })
    }

    /// FNV-1a over every sample bit pattern, in index order.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv64::default();
        h.write_u64(self.n_reps as u64);
        h.write_u64(self.master_seed);
        self.checkpoints.iter().for_each(|t| h.write_f64(*t));
        for row in &self.samples {
            for theta in row {
                theta.iter().for_each(|v| h.write_f64(*v));
            }
        }
        for f in &self.failures {
            h.write_u64(f.index as u64);
            h.write(f.message.as_bytes());
        }
        h.finish()
    }

    pub fn checkpoint_index(&self, t: f64) -> Option<usize> {
        self.checkpoints.iter().position(|&c| (c - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

fn deviation_norm2(theta: &[f64], star: &[f64]) -> f64 {
    theta.iter().zip(star).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `(t, mean over replications of ‖θ_t − θ*‖^p)` per checkpoint.
pub fn moment_curve(set: &ReplicationSet, p: f64) -> Vec<(f64, f64)> {
    set.checkpoints
        .iter()
        .zip(&set.samples)
        .map(|(&t, row)| {
            if p == 0.0 {
                return (t, 1.0);
            }
            let sum: f64 = row
                .iter()
                .map(|theta| libm::pow(deviation_norm2(theta, &set.theta_star), 0.5 * p))
                .sum();
            (t, sum / row.len() as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares slope of `log value` against `log t` over points with `t` in
/// the closed window.
pub fn loglog_slope(curve: &[(f64, f64)], window: (f64, f64)) -> Result<SlopeEstimate> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(t, _)| *t >= window.0 * (1.0 - 1e-12) && *t <= window.1 * (1.0 + 1e-12))
        .cloned()
        .collect();
    if pts.len() < 2 {
        return Err(CoreError::Input(alloc::format!(
            "need at least two points in [{}, {}], found {}",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(t, v)| !(*v > 0.0) || !(*t > 0.0)) {
        return Err(CoreError::Input(alloc::format!("log-log fit needs positive values, got {v} at t = {t}")));
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|(t, v)| (libm::log(*t), libm::log(*v))).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if !(sxx > 0.0) {
        return Err(CoreError::Input("log-log fit needs at least two distinct times".into()));
    }
    let slope = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let stderr = if xy.len() > 2 {
        let rss: f64 = xy.iter().map(|p| { let r = p.1 - intercept - slope * p.0; r * r }).sum();
        libm::sqrt(rss / (n - 2.0) / sxx)
    } else {
        0.0
    };
    Ok(SlopeEstimate {
        slope,
        stderr,
        window,
        points: xy.len(),
    })
}

/// `√t (θ_t − θ*)` for every replication at checkpoint `t_eval`.
pub fn rescaled_sample(set: &ReplicationSet, t_eval: f64) -> Result<Vec<ParameterVector>> {
    let j = set
        .checkpoint_index(t_eval)
        .ok_or_else(|| CoreError::Input(alloc::format!("{t_eval} is not a checkpoint of this set")))?;
    let t = set.checkpoints[j];
    let scale = libm::sqrt(t);
    set.samples[j]
        .iter()
        .map(|theta| ParameterVector::new(theta.iter().zip(set.theta_star.iter()).map(|(a, b)| scale * (a - b)).collect()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub t_eval: f64,
    pub n: usize,
    pub mean: Vec<f64>,
    pub empirical_cov: Matrix,
    pub predicted_cov: Matrix,
    /// Entry-wise `empirical / predicted`; `None` where the prediction vanishes.
    pub variance_ratio: Vec<Option<f64>>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    /// KS distance of each whitened coordinate to the standard normal.
    pub ks_statistic: Vec<f64>,
    pub ks_critical: f64,
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// One-sample Kolmogorov–Smirnov distance of `data` to the distribution `cdf`.
pub fn ks_statistic(data: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Compares a sample of `√t (θ_t − θ*)` to `N(0, predicted)`. Coordinates are
/// whitened with the Cholesky factor of the prediction before the KS test.
pub fn clt_diagnostics(t_eval: f64, samples: &[ParameterVector], predicted: &Matrix) -> Result<CltReport> {
    let n = samples.len();
    if n < 100 {
        return Err(CoreError::Input(alloc::format!("CLT diagnostics need at least 100 samples, got {n}")));
    }
    let k = samples[0].len();
    if predicted.rows() != k || !predicted.is_square() {
        return Err(CoreError::Dimension {
            what: "predicted covariance",
            expected: k,
            got: predicted.rows(),
        });
    }
    if samples.iter().any(|s| s.len() != k) {
        return Err(CoreError::Input("samples have inconsistent dimensions".into()));
    }
    let chol = predicted
        .cholesky()
        .ok_or_else(|| CoreError::Input("predicted covariance is singular; cannot standardise".into()))?;

    let nf = n as f64;
    // shift by the first sample so constant data give exactly zero spread
    let origin = samples[0].to_vec();
    let shifted: Vec<Vec<f64>> = samples.iter().map(|s| s.iter().zip(&origin).map(|(a, o)| a - o).collect()).collect();
    let shift_mean: Vec<f64> = (0..k).map(|i| shifted.iter().map(|s| s[i]).sum::<f64>() / nf).collect();
    let mean: Vec<f64> = origin.iter().zip(&shift_mean).map(|(o, m)| o + m).collect();
    let mut cov = Matrix::zeros(k, k);
    for s in &shifted {
        for a in 0..k {
            for b in 0..k {
                cov[(a, b)] += (s[a] - shift_mean[a]) * (s[b] - shift_mean[b]);
            }
        }
    }
    let cov = cov.scale(1.0 / (nf - 1.0)).symmetrize();

    let floor = 1e-12 * predicted.max_abs();
    let variance_ratio = predicted
        .as_slice()
        .iter()
        .zip(cov.as_slice())
        .map(|(p, e)| if p.abs() > floor { Some(e / p) } else { None })
        .collect();

    let mut skewness = Vec::with_capacity(k);
    let mut excess_kurtosis = Vec::with_capacity(k);
    for i in 0..k {
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for s in &shifted {
            let d = s[i] - shift_mean[i];
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= nf;
        m3 /= nf;
        m4 /= nf;
        if m2 > 0.0 {
            skewness.push(m3 / libm::pow(m2, 1.5));
            excess_kurtosis.push(m4 / (m2 * m2) - 3.0);
        } else {
            skewness.push(0.0);
            excess_kurtosis.push(0.0);
        }
    }

    let whitened: Vec<Vec<f64>> = samples.iter().map(|s| chol.forward_substitute(s)).collect();
    let ks_statistic = (0..k)
        .map(|i| {
            let coord: Vec<f64> = whitened.iter().map(|z| z[i]).collect();
            ks_statistic(&coord, normal_cdf)
        })
        .collect();

    Ok(CltReport {
        t_eval,
        n,
        mean,
        empirical_cov: cov,
        predicted_cov: predicted.clone(),
        variance_ratio,
        skewness,
        excess_kurtosis,
        ks_statistic,
        ks_critical: KS_CRITICAL_1PCT / libm::sqrt(nf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Checkpoint;
    use crate::model::StateVector;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn pv(v: &[f64]) -> ParameterVector {
        ParameterVector::from_slice(v).unwrap()
    }

    fn traj(times: &[f64], thetas: &[f64]) -> Trajectory {
        Trajectory {
            checkpoints: times
                .iter()
                .zip(thetas)
                .map(|(&t, &th)| Checkpoint {
                    t,
                    theta: pv(&[th]),
                    x: StateVector::zeros(1),
                })
                .collect(),
            seed: 0,
            config_digest: 0,
        }
    }

    #[test]
    fn curve_of_exact_samples_is_zero() {
        let results = (0..4).map(|_| Ok(traj(&[1.0, 2.0], &[1.0, 1.0]))).collect();
        let set = ReplicationSet::from_results(1, pv(&[1.0]), results).unwrap();
        assert!(moment_curve(&set, 2.0).iter().all(|&(_, v)| v == 0.0));
        assert!(moment_curve(&set, 0.0).iter().all(|&(_, v)| v == 1.0));
        assert!(rescaled_sample(&set, 2.0).unwrap().iter().all(|s| s[0] == 0.0));
        assert!(rescaled_sample(&set, 3.0).is_err());
    }

    #[test]
    fn rescaled_hand_value() {
        let results = vec![Ok(traj(&[100.0], &[1.1])), Ok(traj(&[100.0], &[1.0]))];
        let set = ReplicationSet::from_results(1, pv(&[1.0]), results).unwrap();
        let r = rescaled_sample(&set, 100.0).unwrap();
        assert!((r[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_failures_abort() {
        let mut results: Vec<Result<Trajectory>> = (0..50).map(|_| Ok(traj(&[1.0], &[1.0]))).collect();
        results[3] = Err(CoreError::Diverged { x: vec![1e9], dt: 0.1 });
        assert!(ReplicationSet::from_results(1, pv(&[1.0]), results).is_err());

        let mut results: Vec<Result<Trajectory>> = (0..200).map(|_| Ok(traj(&[1.0], &[1.0]))).collect();
        results[7] = Err(CoreError::Diverged { x: vec![1e9], dt: 0.1 });
        let set = ReplicationSet::from_results(1, pv(&[1.0]), results).unwrap();
        assert_eq!(set.failures.len(), 1);
        assert_eq!(set.failures[0].index, 7);
        assert_eq!(set.samples[0].len(), 199);
    }

    #[test]
    fn slope_hand_values() {
        let grid: Vec<f64> = (0..10).map(|j| libm::pow(10.0, j as f64 / 3.0)).collect();
        let inv: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 3.0 / t)).collect();
        let s = loglog_slope(&inv, (1.0, 1e3)).unwrap();
        assert!((s.slope + 1.0).abs() < 1e-12 && s.stderr < 1e-12);
        let inv2: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 3.0 / (t * t))).collect();
        assert!((loglog_slope(&inv2, (1.0, 1e3)).unwrap().slope + 2.0).abs() < 1e-12);
        let two = loglog_slope(&[(1.0, 1.0), (10.0, 0.1)], (1.0, 10.0)).unwrap();
        assert!((two.slope + 1.0).abs() < 1e-12);
        assert!(loglog_slope(&[(1.0, 1.0), (10.0, 0.0)], (1.0, 10.0)).is_err());
    }

    #[test]
    fn normal_fixture_passes_ks() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
        let samples: Vec<ParameterVector> = (0..10_000).map(|_| pv(&[rng.sample(StandardNormal)])).collect();
        let r = clt_diagnostics(1.0, &samples, &Matrix::identity(1)).unwrap();
        let ratio = r.variance_ratio[0].unwrap();
        assert!((0.95..=1.05).contains(&ratio));
        assert!(r.ks_statistic[0] < 1.63 / 100.0);
        assert!(r.ks_critical < 0.01629);
    }

    #[test]
    fn scaling_samples_scales_covariance() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let base: Vec<ParameterVector> = (0..500)
            .map(|_| pv(&[rng.sample(StandardNormal), rng.random::<f64>()]))
            .collect();
        let doubled: Vec<ParameterVector> = base.iter().map(|s| pv(&[2.0 * s[0], 2.0 * s[1]])).collect();
        let a = clt_diagnostics(1.0, &base, &Matrix::identity(2)).unwrap();
        let b = clt_diagnostics(1.0, &doubled, &Matrix::identity(2)).unwrap();
        assert!(b.empirical_cov.max_abs_diff(&a.empirical_cov.scale(4.0)) < 1e-12);
        let constant: Vec<ParameterVector> = (0..100).map(|_| pv(&[0.3, 0.3])).collect();
        let c = clt_diagnostics(1.0, &constant, &Matrix::identity(2)).unwrap();
        assert_eq!(c.empirical_cov.max_abs(), 0.0);
    }

    #[test]
    fn singular_prediction_is_rejected() {
        let samples: Vec<ParameterVector> = (0..100).map(|i| pv(&[i as f64])).collect();
        assert!(clt_diagnostics(1.0, &samples, &Matrix::scalar(0.0)).is_err());
        assert!(clt_diagnostics(1.0, &samples[..50], &Matrix::scalar(1.0)).is_err());
    }
}
