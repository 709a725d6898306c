//! Two-component univariate Gaussian mixture over switch counts, fit by EM.
//!
//! Component `U` models the less-switching samples and `F` the frequently
//! switching ones; after fitting, `F` is always the component with the larger
//! mean.

use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MixtureError {
    #[error("need at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("non-finite value {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gmm1D {
    pub weight_u: f64,
    pub mean_u: f64,
    pub std_u: f64,
    pub weight_f: f64,
    pub mean_f: f64,
    pub std_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub variance_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_tolerance: 1e-8,
            variance_floor: 1e-6,
        }
    }
}

/// Why a fit was abandoned. Callers treat this as a fallback trigger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Degenerate {
    /// Overall sample variance below the floor.
    ZeroVariance { variance: f64 },
    /// A component weight fell below `1 / len(values)`.
    CollapsedComponent { iteration: usize, weight: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub gmm: Gmm1D,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood after initialization and after every M-step.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmOutcome {
    Fitted(GmmFit),
    Degenerate(Degenerate),
}

impl EmOutcome {
    pub fn fitted(&self) -> Option<&GmmFit> {
        match self {
            EmOutcome::Fitted(fit) => Some(fit),
            EmOutcome::Degenerate(_) => None,
        }
    }
}

impl fmt::Display for EmOutcome {
    /// One-line record for the round log.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmOutcome::Fitted(fit) => {
                let g = &fit.gmm;
                write!(
                    f,
                    "weight_u={:.6} mean_u={:.6} std_u={:.6} weight_f={:.6} mean_f={:.6} std_f={:.6} iterations={} log_likelihood={:.6}",
                    g.weight_u, g.mean_u, g.std_u, g.weight_f, g.mean_f, g.std_f, fit.iterations, fit.log_likelihood
                )
            }
            EmOutcome::Degenerate(Degenerate::ZeroVariance { variance }) => {
                write!(f, "degenerate=zero_variance variance={variance:e}")
            }
            EmOutcome::Degenerate(Degenerate::CollapsedComponent { iteration, weight }) => {
                write!(f, "degenerate=collapsed_component iteration={iteration} weight={weight:e}")
            }
        }
    }
}

fn log_normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - std.ln() - 0.5 * (2.0 * PI).ln()
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl Gmm1D {
    fn log_terms(&self, x: f64) -> (f64, f64) {
        (
            self.weight_u.ln() + log_normal_pdf(x, self.mean_u, self.std_u),
            self.weight_f.ln() + log_normal_pdf(x, self.mean_f, self.std_f),
        )
    }

    /// Posterior `(r_u, r_f)` of one value.
    pub fn responsibility(&self, x: f64) -> (f64, f64) {
        let (lu, lf) = self.log_terms(x);
        let total = log_sum_exp(lu, lf);
        let r_f = (lf - total).exp();
        ((lu - total).exp(), r_f)
    }
}

/// `Σ log(ω_u φ_u(x) + ω_f φ_f(x))`, evaluated in log space.
pub fn log_likelihood(gmm: &Gmm1D, values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&x| {
            let (lu, lf) = gmm.log_terms(x);
            log_sum_exp(lu, lf)
        })
        .sum()
}

pub fn responsibilities(gmm: &Gmm1D, values: &[f64]) -> Vec<(f64, f64)> {
    values.iter().map(|&x| gmm.responsibility(x)).collect()
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Fits the two-component mixture. Means start at the 25th/75th percentiles
/// (or min/max when those coincide), weights at 0.5 and both variances at
/// the overall variance.
pub fn fit_em(values: &[f64], config: &EmConfig) -> Result<EmOutcome, MixtureError> {
    if values.len() < 2 {
        return Err(MixtureError::TooFewValues(values.len()));
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(MixtureError::NonFinite(bad));
    }
    // Sorting makes every sum order-independent, so the fit is exactly
    // permutation invariant.
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if variance < config.variance_floor {
        return Ok(EmOutcome::Degenerate(Degenerate::ZeroVariance { variance }));
    }
    let (mut lo, mut hi) = (quantile(&xs, 0.25), quantile(&xs, 0.75));
    if lo == hi {
        lo = xs[0];
        hi = xs[xs.len() - 1];
    }
    let std = variance.sqrt();
    let mut gmm = Gmm1D {
        weight_u: 0.5,
        mean_u: lo,
        std_u: std,
        weight_f: 0.5,
        mean_f: hi,
        std_f: std,
    };
    let mut ll = log_likelihood(&gmm, &xs);
    let mut history = vec![ll];
    let mut iterations = 0;
    let mut r_f = vec![0.0; xs.len()];
    while iterations < config.max_iterations {
        iterations += 1;
        for (r, &x) in r_f.iter_mut().zip(&xs) {
            *r = gmm.responsibility(x).1;
        }
        let n_f: f64 = r_f.iter().sum();
        let n_u: f64 = r_f.iter().map(|r| 1.0 - r).sum();
        let weight_f = n_f / n;
        let weight_u = 1.0 - weight_f;
        let min_weight = weight_u.min(weight_f);
        if min_weight < 1.0 / n {
            return Ok(EmOutcome::Degenerate(Degenerate::CollapsedComponent {
                iteration: iterations,
                weight: min_weight,
            }));
        }
        let mean_f = r_f.iter().zip(&xs).map(|(r, x)| r * x).sum::<f64>() / n_f;
        let mean_u = r_f.iter().zip(&xs).map(|(r, x)| (1.0 - r) * x).sum::<f64>() / n_u;
        let var_f = r_f
            .iter()
            .zip(&xs)
            .map(|(r, x)| r * (x - mean_f).powi(2))
            .sum::<f64>()
            / n_f;
        let var_u = r_f
            .iter()
            .zip(&xs)
            .map(|(r, x)| (1.0 - r) * (x - mean_u).powi(2))
            .sum::<f64>()
            / n_u;
        gmm = Gmm1D {
            weight_u,
            mean_u,
            std_u: var_u.max(config.variance_floor).sqrt(),
            weight_f,
            mean_f,
            std_f: var_f.max(config.variance_floor).sqrt(),
        };
        let next = log_likelihood(&gmm, &xs);
        history.push(next);
        let change = (next - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        ll = next;
        if change < config.relative_tolerance {
            break;
        }
    }
    if gmm.mean_u > gmm.mean_f {
        gmm = Gmm1D {
            weight_u: gmm.weight_f,
            mean_u: gmm.mean_f,
            std_u: gmm.std_f,
            weight_f: gmm.weight_u,
            mean_f: gmm.mean_u,
            std_f: gmm.std_u,
        };
    }
    Ok(EmOutcome::Fitted(GmmFit {
        gmm,
        iterations,
        log_likelihood: ll,
        history,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn fit(values: &[f64]) -> GmmFit {
        match fit_em(values, &EmConfig::default()).unwrap() {
            EmOutcome::Fitted(f) => f,
            EmOutcome::Degenerate(d) => panic!("unexpected degenerate fit {d:?}"),
        }
    }

    #[test]
    fn recovers_separated_components() {
        let mut rng = crate::seed::rng(42);
        let a = Normal::new(0.0, 1.0).unwrap();
        let b = Normal::new(10.0, 1.0).unwrap();
        let mut values: Vec<f64> = (0..500).map(|_| a.sample(&mut rng)).collect();
        values.extend((0..500).map(|_| b.sample(&mut rng)));
        let g = fit(&values).gmm;
        assert!(g.mean_u.abs() < 0.3, "{g:?}");
        assert!((g.mean_f - 10.0).abs() < 0.3, "{g:?}");
        assert!((g.weight_u - 0.5).abs() < 0.05 && (g.weight_f - 0.5).abs() < 0.05);
    }

    #[test]
    fn constant_values_are_degenerate() {
        assert!(matches!(
            fit_em(&[5.0; 10], &EmConfig::default()).unwrap(),
            EmOutcome::Degenerate(Degenerate::ZeroVariance { .. })
        ));
        assert_eq!(
            fit_em(&[1.0], &EmConfig::default()),
            Err(MixtureError::TooFewValues(1))
        );
    }

    #[test]
    fn two_point_clusters() {
        let g = fit(&[0.0, 0.0, 0.0, 0.0, 10.0, 10.0, 10.0, 10.0]).gmm;
        assert!(g.mean_u.abs() < 1e-9 && (g.mean_f - 10.0).abs() < 1e-9);
        assert_eq!(g.weight_u, 0.5);
        assert_eq!(g.weight_f, 0.5);
        assert!((g.std_u - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn likelihood_closed_form() {
        let g = Gmm1D {
            weight_u: 0.5,
            mean_u: 0.0,
            std_u: 1.0,
            weight_f: 0.5,
            mean_f: 0.0,
            std_f: 1.0,
        };
        let expected = -(2.0 * PI).sqrt().ln();
        assert!((log_likelihood(&g, &[0.0]) - expected).abs() < 1e-12);
        assert!((expected + 0.9189385).abs() < 1e-6);
        assert!((log_likelihood(&g, &[0.7, 0.7]) - 2.0 * log_likelihood(&g, &[0.7])).abs() < 1e-12);
        let one_sided = Gmm1D {
            weight_u: 1.0,
            weight_f: 0.0,
            ..g
        };
        assert!(log_likelihood(&one_sided, &[0.0]).is_finite());
    }

    #[test]
    fn responsibility_cases() {
        let g = Gmm1D {
            weight_u: 0.5,
            mean_u: 0.0,
            std_u: 1.0,
            weight_f: 0.5,
            mean_f: 10.0,
            std_f: 1.0,
        };
        let (ru, rf) = g.responsibility(5.0);
        assert!((rf - 0.5).abs() < 1e-12 && (ru - 0.5).abs() < 1e-12);
        // density ratio at x = 10: exp(-50) vs 1
        let (_, rf) = g.responsibility(10.0);
        assert!(rf > 0.999);
        assert!((rf - 1.0 / (1.0 + (-50f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn display_line() {
        let line = fit_em(&[0.0, 0.0, 1.0, 9.0, 10.0, 10.0], &EmConfig::default())
            .unwrap()
            .to_string();
        assert!(line.starts_with("weight_u="), "{line}");
        assert!(line.contains("iterations="));
        let d = fit_em(&[2.0, 2.0], &EmConfig::default()).unwrap().to_string();
        assert!(d.starts_with("degenerate=zero_variance"));
    }

    #[test]
    fn em_is_monotone_on_random_data() {
        let mut rng = crate::seed::rng(3);
        for _ in 0..100 {
            let n = rng.gen_range(5..200);
            let values: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(0..12) as f64 + if rng.gen_bool(0.3) { 5.0 } else { 0.0 })
                .collect();
            if let EmOutcome::Fitted(f) = fit_em(&values, &EmConfig::default()).unwrap() {
                for w in f.history.windows(2) {
                    assert!(w[1] >= w[0] - 1e-9, "{:?}", f.history);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn responsibilities_sum_to_one(x in -50.0f64..50.0, mu in -5.0f64..5.0, s in 0.1f64..4.0, w in 0.01f64..0.99) {
            let g = Gmm1D { weight_u: w, mean_u: mu, std_u: s, weight_f: 1.0 - w, mean_f: mu + 3.0, std_f: s * 1.5 };
            let (ru, rf) = g.responsibility(x);
            prop_assert!((ru + rf - 1.0).abs() < 1e-12);
        }

        #[test]
        fn fit_is_permutation_invariant_and_canonical(
            mut values in prop::collection::vec(0u32..15, 4..60),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let a: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            values.shuffle(&mut crate::seed::rng(seed));
            let b: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            let fa = fit_em(&a, &EmConfig::default()).unwrap();
            prop_assert_eq!(&fa, &fit_em(&b, &EmConfig::default()).unwrap());
            if let EmOutcome::Fitted(f) = fa {
                prop_assert!(f.gmm.mean_f >= f.gmm.mean_u);
                prop_assert!((f.gmm.weight_u + f.gmm.weight_f - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn fit_is_translation_equivariant(
            values in prop::collection::vec(0u32..15, 4..60),
            shift in -20.0f64..20.0,
        ) {
            let a: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
            let fa = fit_em(&a, &EmConfig::default()).unwrap();
            let fb = fit_em(&b, &EmConfig::default()).unwrap();
            match (fa, fb) {
                (EmOutcome::Fitted(fa), EmOutcome::Fitted(fb)) => {
                    let (x, y) = (fa.gmm, fb.gmm);
                    prop_assert!((x.mean_u + shift - y.mean_u).abs() < 1e-6);
                    prop_assert!((x.mean_f + shift - y.mean_f).abs() < 1e-6);
                    prop_assert!((x.weight_u - y.weight_u).abs() < 1e-6);
                    prop_assert!((x.std_u - y.std_u).abs() < 1e-6);
                    prop_assert!((x.std_f - y.std_f).abs() < 1e-6);
                }
                (EmOutcome::Degenerate(_), EmOutcome::Degenerate(_)) => {}
                (a, b) => prop_assert!(false, "outcome kind differs: {:?} vs {:?}", a, b),
            }
        }
    }
}
