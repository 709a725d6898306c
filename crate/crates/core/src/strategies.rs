//! Acquisition functions. Every selector picks a duplicate-free batch of
//! `min(b, |pool|)` pool positions; score-based strategies are oriented so
//! that higher means "select".

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::matrix::Matrix;
use crate::mixture::{fit_em, EmConfig, EmOutcome, MixtureError};
use crate::network::{log_softmax, MlpModel, NetworkError};
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum StrategyError {
    #[error("empty pool")]
    EmptyPool,
    #[error("strategy {0} requires switch counts")]
    MissingSwitchCounts(Strategy),
    #[error("empty center set")]
    EmptyCenters,
    #[error("all weights are zero")]
    AllZeroWeights,
    #[error("invalid weight {0}")]
    InvalidWeight(f64),
    #[error("switch counts ({counts}) not aligned with pool ({pool})")]
    Misaligned { counts: usize, pool: usize },
    #[error("unknown strategy {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
}

pub type Result<T, E = StrategyError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Random,
    Entropy,
    LeastConfidence,
    Coreset,
    SwitchTopK,
    Gauss,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Random,
        Strategy::Entropy,
        Strategy::LeastConfidence,
        Strategy::Coreset,
        Strategy::SwitchTopK,
        Strategy::Gauss,
    ];

    /// Stable CLI identifier.
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Entropy => "entropy",
            Strategy::LeastConfidence => "leastconf",
            Strategy::Coreset => "coreset",
            Strategy::SwitchTopK => "switchtopk",
            Strategy::Gauss => "gauss",
        }
    }

    pub fn needs_switch_counts(self) -> bool {
        matches!(self, Strategy::SwitchTopK | Strategy::Gauss)
    }

    pub fn select(self, ctx: &AcquisitionContext<'_>) -> Result<Selection> {
        match self {
            Strategy::Random => select_random(ctx),
            Strategy::Entropy => {
                let scores = score_entropy(ctx)?;
                Ok(Selection::from_scores(&scores, ctx.batch_size))
            }
            Strategy::LeastConfidence => {
                let scores = score_least_confidence(ctx)?;
                Ok(Selection::from_scores(&scores, ctx.batch_size))
            }
            Strategy::Coreset => select_coreset(ctx),
            Strategy::SwitchTopK => select_switch_topk(ctx),
            Strategy::Gauss => select_gauss(ctx),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| StrategyError::Unknown(s.to_string()))
    }
}

/// Everything an acquisition function may look at. Pool labels are not part
/// of it.
#[derive(Debug, Clone)]
pub struct AcquisitionContext<'a> {
    pub model: &'a MlpModel,
    /// Sorted sample indices of the pool.
    pub pool_idx: &'a [usize],
    /// Rows aligned with `pool_idx`.
    pub pool_features: &'a Matrix,
    /// Rows of the labeled train set; coreset centers.
    pub train_features: &'a Matrix,
    /// Per-pool-sample switch counts aligned with `pool_idx`.
    pub switch_counts: Option<&'a [u32]>,
    pub batch_size: usize,
    pub seed: u64,
    pub em_config: EmConfig,
}

impl AcquisitionContext<'_> {
    fn batch(&self) -> usize {
        self.batch_size.min(self.pool_idx.len())
    }

    fn counts(&self, strategy: Strategy) -> Result<&[u32]> {
        let counts = self
            .switch_counts
            .ok_or(StrategyError::MissingSwitchCounts(strategy))?;
        if counts.len() != self.pool_idx.len() {
            return Err(StrategyError::Misaligned {
                counts: counts.len(),
                pool: self.pool_idx.len(),
            });
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceScores {
    pub scores: Vec<f64>,
    pub strategy: Strategy,
}

/// Chosen pool positions with the score or sampling weight behind each.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub positions: Vec<usize>,
    pub values: Vec<f64>,
    /// Mixture fit, for strategies that perform one.
    pub mixture: Option<EmOutcome>,
}

impl Selection {
    fn from_scores(scores: &ImportanceScores, b: usize) -> Selection {
        let positions = topk(&scores.scores, b);
        let values = positions.iter().map(|&p| scores.scores[p]).collect();
        Selection {
            positions,
            values,
            mixture: None,
        }
    }
}

pub fn select_random(ctx: &AcquisitionContext<'_>) -> Result<Selection> {
    if ctx.pool_idx.is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    let positions = uniform_subset(ctx.pool_idx.len(), ctx.batch(), ctx.seed);
    Ok(Selection {
        values: vec![1.0; positions.len()],
        positions,
        mixture: None,
    })
}

fn uniform_subset(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    let mut picked = index::sample(&mut rng, n, k.min(n)).into_vec();
    picked.sort_unstable();
    picked
}

/// Softmax entropy `−Σ p ln p` from log-probabilities.
pub fn entropy_of_log_probs(log_p: &[f64]) -> f64 {
    -log_p
        .iter()
        .map(|&lp| if lp == f64::NEG_INFINITY { 0.0 } else { lp.exp() * lp })
        .sum::<f64>()
}

pub fn entropy_of_probs(p: &[f64]) -> f64 {
    -p.iter()
        .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
        .sum::<f64>()
}

pub fn least_confidence_of_probs(p: &[f64]) -> f64 {
    1.0 - p.iter().copied().fold(0.0, f64::max)
}

pub fn score_entropy(ctx: &AcquisitionContext<'_>) -> Result<ImportanceScores> {
    let logits = ctx.model.forward(ctx.pool_features)?;
    let scores = logits
        .iter_rows()
        .map(|row| log_softmax(row).map(|lp| entropy_of_log_probs(&lp)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ImportanceScores {
        scores,
        strategy: Strategy::Entropy,
    })
}

pub fn score_least_confidence(ctx: &AcquisitionContext<'_>) -> Result<ImportanceScores> {
    let probs = ctx.model.probabilities(ctx.pool_features)?;
    Ok(ImportanceScores {
        scores: probs.iter_rows().map(least_confidence_of_probs).collect(),
        strategy: Strategy::LeastConfidence,
    })
}

/// Indices of the `b` largest scores (ties to the lower index), ascending.
pub fn topk(scores: &[f64], b: usize) -> Vec<usize> {
    let keys: Vec<usize> = (0..scores.len()).collect();
    let mut picked = rank_desc(scores, &keys, b);
    picked.sort_unstable();
    picked
}

/// Positions of the `b` largest scores; ties broken by ascending `keys`.
fn rank_desc(scores: &[f64], keys: &[usize], b: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &c| scores[c].total_cmp(&scores[a]).then(keys[a].cmp(&keys[c])));
    order.truncate(b.min(scores.len()));
    order
}

/// Greedy k-center: each pick is the pool point farthest (Euclidean) from
/// its nearest center, where centers are `centers` plus earlier picks.
/// Returns `(pool position, distance at pick time)` in pick order.
pub fn k_center_greedy(pool: &Matrix, centers: &Matrix, b: usize) -> Result<Vec<(usize, f64)>> {
    if pool.rows() == 0 {
        return Err(StrategyError::EmptyPool);
    }
    if centers.rows() == 0 {
        return Err(StrategyError::EmptyCenters);
    }
    let sq = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut nearest: Vec<f64> = pool
        .iter_rows()
        .map(|p| {
            centers
                .iter_rows()
                .map(|c| sq(p, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut taken = vec![false; pool.rows()];
    let mut picks = Vec::with_capacity(b.min(pool.rows()));
    for _ in 0..b.min(pool.rows()) {
        let mut best: Option<usize> = None;
        for i in 0..pool.rows() {
            if !taken[i] && best.is_none_or(|j| nearest[i] > nearest[j]) {
                best = Some(i);
            }
        }
        let Some(pick) = best else { break };
        taken[pick] = true;
        picks.push((pick, nearest[pick].sqrt()));
        let anchor = pool.row(pick);
        for (d, row) in nearest.iter_mut().zip(pool.iter_rows()) {
            *d = d.min(sq(row, anchor));
        }
    }
    Ok(picks)
}

pub fn select_coreset(ctx: &AcquisitionContext<'_>) -> Result<Selection> {
    if ctx.pool_idx.is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    let pool = ctx.model.embed(ctx.pool_features)?;
    let centers = ctx.model.embed(ctx.train_features)?;
    let picks = k_center_greedy(&pool, &centers, ctx.batch())?;
    Ok(Selection {
        positions: picks.iter().map(|p| p.0).collect(),
        values: picks.iter().map(|p| p.1).collect(),
        mixture: None,
    })
}

/// Pool positions with the most switch events; ties to the lower sample
/// index in `pool_idx`.
pub fn switch_topk(pool_idx: &[usize], counts: &[u32], b: usize) -> Vec<usize> {
    let scores: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
    let mut picked = rank_desc(&scores, pool_idx, b);
    picked.sort_unstable_by_key(|&p| pool_idx[p]);
    picked
}

pub fn select_switch_topk(ctx: &AcquisitionContext<'_>) -> Result<Selection> {
    let counts = ctx.counts(Strategy::SwitchTopK)?;
    let positions = switch_topk(ctx.pool_idx, counts, ctx.batch());
    let values = positions.iter().map(|&p| f64::from(counts[p])).collect();
    Ok(Selection {
        positions,
        values,
        mixture: None,
    })
}

/// Weighted sampling without replacement with exponential keys
/// `−ln(u)/w`; the `k` smallest keys win. Zero-weight entries are only used,
/// uniformly at random, when fewer than `k` weights are positive. Result is
/// sorted ascending.
pub fn weighted_sample_without_replacement(weights: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(StrategyError::InvalidWeight(w));
    }
    let k = k.min(weights.len());
    if k == 0 {
        return Ok(Vec::new());
    }
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    if positive == 0 {
        return Err(StrategyError::AllZeroWeights);
    }
    let mut rng = seed::rng(seed);
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = 1.0 - rng.gen::<f64>();
            (-u.ln() / w, i)
        })
        .filter(|&(_, i)| weights[i] > 0.0)
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut picked: Vec<usize> = keyed.iter().take(k).map(|&(_, i)| i).collect();
    if picked.len() < k {
        let zeros: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] == 0.0).collect();
        for p in index::sample(&mut rng, zeros.len(), k - picked.len()) {
            picked.push(zeros[p]);
        }
    }
    picked.sort_unstable();
    Ok(picked)
}

/// Gaussian switch sampling: fit the two-component mixture to the pool's
/// switch counts and sample the batch with probabilities given by each
/// sample's responsibility under the higher-mean component. A degenerate fit
/// falls back to uniform random selection.
pub fn select_gauss(ctx: &AcquisitionContext<'_>) -> Result<Selection> {
    if ctx.pool_idx.is_empty() {
        return Err(StrategyError::EmptyPool);
    }
    let counts = ctx.counts(Strategy::Gauss)?;
    let b = ctx.batch();
    if b == ctx.pool_idx.len() {
        return Ok(Selection {
            positions: (0..b).collect(),
            values: vec![1.0; b],
            mixture: None,
        });
    }
    let values: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
    let outcome = fit_em(&values, &ctx.em_config)?;
    let fit = match &outcome {
        EmOutcome::Fitted(fit) => fit,
        EmOutcome::Degenerate(_) => {
            let mut fallback = select_random(ctx)?;
            fallback.mixture = Some(outcome);
            return Ok(fallback);
        }
    };
    let weights: Vec<f64> = values.iter().map(|&x| fit.gmm.responsibility(x).1).collect();
    let positions = match weighted_sample_without_replacement(&weights, b, ctx.seed) {
        Ok(p) => p,
        Err(StrategyError::AllZeroWeights) => {
            let mut fallback = select_random(ctx)?;
            fallback.mixture = Some(outcome);
            return Ok(fallback);
        }
        Err(e) => return Err(e),
    };
    Ok(Selection {
        values: positions.iter().map(|&p| weights[p]).collect(),
        positions,
        mixture: Some(outcome),
    })
}
