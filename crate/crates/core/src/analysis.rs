//! Evaluation metrics: area under the difference-to-random curve, integer
//! histograms of importance scores, Gaussian-smoothed KL divergence and
//! Welch's t-test.

use statrs::function::beta::beta_reg;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("sigma must be positive, got {0}")]
    Sigma(f64),
    #[error("sample too small: need at least 2 values, got {0}")]
    SampleTooSmall(usize),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceCurve {
    pub differences: Vec<f64>,
    pub strategy: String,
}

pub fn difference_curve(strategy: &str, curve: &[f64], random: &[f64]) -> Result<DifferenceCurve> {
    if curve.len() != random.len() {
        return Err(AnalysisError::LengthMismatch(curve.len(), random.len()));
    }
    Ok(DifferenceCurve {
        differences: curve.iter().zip(random).map(|(a, b)| a - b).collect(),
        strategy: strategy.to_string(),
    })
}

/// `Σ_r (acc_strategy[r] − acc_random[r])` with unit round spacing.
pub fn area_under_difference(strategy: &[f64], random: &[f64]) -> Result<f64> {
    if strategy.len() != random.len() {
        return Err(AnalysisError::LengthMismatch(strategy.len(), random.len()));
    }
    Ok(strategy.iter().zip(random).map(|(a, b)| a - b).sum())
}

/// Averages each set of seed curves per round, then integrates the
/// difference of the averages.
pub fn area_under_mean_difference(strategy: &[Vec<f64>], random: &[Vec<f64>]) -> Result<f64> {
    let (a, _) = curve_mean_and_spread(strategy)?;
    let (b, _) = curve_mean_and_spread(random)?;
    area_under_difference(&a, &b)
}

/// Per-round mean and unbiased standard deviation over curves. A single
/// curve has zero spread.
pub fn curve_mean_and_spread(curves: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = curves.first().ok_or(AnalysisError::Empty)?;
    for c in curves {
        if c.len() != first.len() {
            return Err(AnalysisError::LengthMismatch(first.len(), c.len()));
        }
    }
    let n = curves.len() as f64;
    let mut mean = vec![0.0; first.len()];
    let mut spread = vec![0.0; first.len()];
    for r in 0..first.len() {
        let m = curves.iter().map(|c| c[r]).sum::<f64>() / n;
        mean[r] = m;
        if curves.len() > 1 {
            let ss: f64 = curves.iter().map(|c| (c[r] - m).powi(2)).sum();
            spread[r] = (ss / (n - 1.0)).sqrt();
        }
    }
    Ok((mean, spread))
}

/// Mean and unbiased standard deviation of a sample (0 for one value).
pub fn mean_and_std(values: &[f64]) -> Result<(f64, f64)> {
    let curves: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    let (m, s) = curve_mean_and_spread(&curves)?;
    Ok((m[0], s[0]))
}

/// Counts per integer value `0..=max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl IntHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Extends with empty bins up to `bins`.
    pub fn padded(&self, bins: usize) -> IntHistogram {
        let mut counts = self.counts.clone();
        if counts.len() < bins {
            counts.resize(bins, 0);
        }
        IntHistogram {
            counts,
            total: self.total,
        }
    }
}

pub fn importance_histogram(scores: &[u32]) -> Result<IntHistogram> {
    let max = *scores.iter().max().ok_or(AnalysisError::Empty)? as usize;
    let mut counts = vec![0u64; max + 1];
    for &s in scores {
        counts[s as usize] += 1;
    }
    Ok(IntHistogram {
        counts,
        total: scores.len() as u64,
    })
}

const KL_FLOOR: f64 = 1e-12;

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Normalizes, convolves with the kernel (zero outside the bin range),
/// floors and renormalizes.
fn smooth(hist: &IntHistogram, bins: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let total = hist.total.max(1) as f64;
    let p: Vec<f64> = hist.padded(bins).counts.iter().map(|&c| c as f64 / total).collect();
    let mut out: Vec<f64> = (0..bins as i64)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .filter_map(|(k, w)| {
                    let j = i + k as i64 - radius;
                    (0..bins as i64).contains(&j).then(|| w * p[j as usize])
                })
                .sum::<f64>()
                .max(KL_FLOOR)
        })
        .collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= z);
    out
}

/// `KL(p ‖ q)` after Gaussian smoothing of both histograms over their common
/// bin range; `sigma` is in bins and the kernel is truncated at ±4σ.
pub fn smoothed_kl(p: &IntHistogram, q: &IntHistogram, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(AnalysisError::Sigma(sigma));
    }
    let bins = p.bins().max(q.bins());
    let kernel = gaussian_kernel(sigma);
    let ps = smooth(p, bins, &kernel);
    let qs = smooth(q, bins, &kernel);
    Ok(ps.iter().zip(&qs).map(|(a, b)| a * (a / b).ln()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestReport {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub significant_at_0p05: bool,
}

fn sample_stats(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided Welch t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestReport> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(AnalysisError::SampleTooSmall(s.len()));
        }
    }
    let (ma, va) = sample_stats(a);
    let (mb, vb) = sample_stats(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sa = va / na;
    let sb = vb / nb;
    let se2 = sa + sb;
    let report = |t: f64, df: f64, p: f64| TTestReport {
        t,
        df,
        p_value: p,
        significant_at_0p05: p < 0.05,
    };
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if ma == mb {
            report(0.0, df, 1.0)
        } else {
            report((ma - mb).signum() * f64::INFINITY, df, 0.0)
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0);
    Ok(report(t, df, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn area_examples() {
        let a = area_under_difference(&[0.5, 0.6, 0.7], &[0.5, 0.5, 0.5]).unwrap();
        assert!((a - 0.3).abs() < 1e-15);
        assert_eq!(area_under_difference(&[0.3, 0.9], &[0.3, 0.9]).unwrap(), 0.0);
        assert!(area_under_difference(&[0.3], &[0.3, 0.9]).is_err());
        let d = difference_curve("gauss", &[0.5, 0.7], &[0.5, 0.5]).unwrap();
        assert!((d.differences[1] - 0.2).abs() < 1e-15);
        let m = area_under_mean_difference(&[vec![0.6, 0.8], vec![0.4, 0.6]], &[vec![0.5, 0.5]]).unwrap();
        assert!((m - 0.2).abs() < 1e-12);
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(importance_histogram(&[0, 0, 1, 3]).unwrap().counts, vec![2, 1, 0, 1]);
        let h = importance_histogram(&[0; 5]).unwrap();
        assert_eq!((h.counts.clone(), h.total), (vec![5], 5));
        assert_eq!(importance_histogram(&[]), Err(AnalysisError::Empty));
    }

    #[test]
    fn smoothed_kl_two_bin_reference() {
        // Independent evaluation: with σ = 0.5 the kernel weights at offsets
        // 0 and ±1 are 1 and e^-2 (the ±2 taps fall outside two bins), so
        // p̃ = (1, e^-2)/(1+e^-2) and q̃ is its mirror. KL = (a-b)·ln(a/b)
        // with a-b = tanh(1) and ln(a/b) = 2.
        let p = IntHistogram { counts: vec![1, 0], total: 1 };
        let q = IntHistogram { counts: vec![0, 1], total: 1 };
        let kl = smoothed_kl(&p, &q, 0.5).unwrap();
        assert!((kl - 2.0 * 1f64.tanh()).abs() < 1e-12, "{kl}");
        assert!(kl > 0.0);
        assert_eq!(smoothed_kl(&p, &q, 0.0), Err(AnalysisError::Sigma(0.0)));
        let wide = smoothed_kl(&p, &q, 200.0).unwrap();
        assert!(wide < 1e-4, "{wide}");
    }

    #[test]
    fn smoothed_kl_pads_to_common_range() {
        let p = importance_histogram(&[0, 1, 1]).unwrap();
        let q = importance_histogram(&[0, 4, 5]).unwrap();
        assert!(smoothed_kl(&p, &q, 1.0).unwrap() > 0.0);
        assert!(smoothed_kl(&q, &p, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn welch_reference_values() {
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((r.t + 3.6742).abs() < 1e-4, "{r:?}");
        assert!((r.df - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.0213).abs() < 1e-3, "{r:?}");
        assert!(r.significant_at_0p05);
        let s = welch_t_test(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.t, -r.t);
        assert!((s.p_value - r.p_value).abs() < 1e-15);
        let same = welch_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((same.t, same.p_value), (0.0, 1.0));
        let flat = welch_t_test(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!((flat.t, flat.p_value), (0.0, 1.0));
        assert_eq!(welch_t_test(&[1.0], &[1.0, 2.0]), Err(AnalysisError::SampleTooSmall(1)));
    }

    #[test]
    fn welch_null_rejection_rate() {
        let mut rng = crate::seed::rng(2024);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let rejections = (0..1000)
            .filter(|_| {
                let a: Vec<f64> = (0..5).map(|_| normal.sample(&mut rng)).collect();
                let b: Vec<f64> = (0..5).map(|_| normal.sample(&mut rng)).collect();
                welch_t_test(&a, &b).unwrap().p_value < 0.05
            })
            .count();
        let rate = rejections as f64 / 1000.0;
        assert!((0.02..=0.09).contains(&rate), "{rate}");
    }

    #[test]
    fn spread_examples() {
        let (m, s) = curve_mean_and_spread(&[vec![0.4], vec![0.6]]).unwrap();
        assert!((m[0] - 0.5).abs() < 1e-15);
        assert!((s[0] - 0.02f64.sqrt()).abs() < 1e-12);
        let (_, s) = curve_mean_and_spread(&[vec![0.4, 0.5]]).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        let (_, s) = curve_mean_and_spread(&[vec![0.4, 0.5], vec![0.4, 0.5]]).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        assert!(curve_mean_and_spread(&[vec![0.4], vec![0.4, 0.5]]).is_err());
    }

    fn curve() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 1..20)
    }

    proptest! {
        #[test]
        fn area_is_antisymmetric((a, b) in curve().prop_flat_map(|a| {
            let n = a.len();
            (Just(a), prop::collection::vec(0.0f64..1.0, n))
        })) {
            prop_assert_eq!(area_under_difference(&a, &a).unwrap(), 0.0);
            let ab = area_under_difference(&a, &b).unwrap();
            let ba = area_under_difference(&b, &a).unwrap();
            prop_assert!((ab + ba).abs() < 1e-12);
        }

        #[test]
        fn smoothed_kl_is_a_divergence(
            p in prop::collection::vec(0u32..12, 1..60),
            q in prop::collection::vec(0u32..12, 1..60),
            sigma in 0.1f64..5.0,
        ) {
            let hp = importance_histogram(&p).unwrap();
            let hq = importance_histogram(&q).unwrap();
            prop_assert!(smoothed_kl(&hp, &hp, sigma).unwrap().abs() < 1e-12);
            prop_assert!(smoothed_kl(&hp, &hq, sigma).unwrap() >= -1e-12);
        }
    }
}
