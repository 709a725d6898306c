//! The active learning round loop, the oracle-importance analysis mode and
//! multi-run suites.
//!
//! Every round retrains the classifier from scratch on the current train set.
//! During training, the whole remaining pool is classified after each epoch
//! to count prediction switches; counts never carry over between rounds.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::{split_initial, split_with_test, Dataset, DatasetError, LabelOracle, PoolPartition};
use crate::dynamics::{event_rows, DynamicsError, EventRow, ForgettingTracker, SwitchTracker};
use crate::matrix::Matrix;
use crate::mixture::{EmConfig, EmOutcome};
use crate::network::{init_model, train_epochs, MlpConfig, MlpModel, NetworkError, TrainConfig};
use crate::seed::{self, Stream};
use crate::strategies::{AcquisitionContext, Strategy, StrategyError};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("strategy {0} requires switch counts but switch tracking is disabled")]
    TrackingDisabled(Strategy),
    #[error("train label for sample {0} was read before being revealed")]
    Unrevealed(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("run panicked: {0}")]
    Panicked(String),
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Standard,
    /// Scores come from one model trained on the fully labeled pool.
    OracleImportance,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::OracleImportance => "oracle_importance",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Mode::Standard),
            "oracle_importance" | "oracle" => Ok(Mode::OracleImportance),
            other => Err(EngineError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// How the test set is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum TestSplit {
    /// Carve this fraction out of the dataset.
    Fraction(f64),
    /// Use exactly these sample indices (e.g. an appended test file).
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub hidden: Vec<usize>,
    /// `shuffle_seed` is ignored; shuffling is seeded per run and round.
    pub train: TrainConfig,
    pub strategy: Strategy,
    pub rounds: usize,
    pub batch_per_round: usize,
    pub initial_train: usize,
    pub test_split: TestSplit,
    pub seeds: Vec<u64>,
    pub mode: Mode,
    pub track_switches: bool,
    pub em: EmConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            train: TrainConfig::default(),
            strategy: Strategy::Random,
            rounds: 10,
            batch_per_round: 1024,
            initial_train: 128,
            test_split: TestSplit::Fraction(0.2),
            seeds: vec![0, 1, 2, 3, 4],
            mode: Mode::Standard,
            track_switches: true,
            em: EmConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(EngineError::Config("rounds must be positive".into()));
        }
        if self.batch_per_round == 0 {
            return Err(EngineError::Config("batch per round must be positive".into()));
        }
        if self.initial_train == 0 {
            return Err(EngineError::Config("initial train size must be positive".into()));
        }
        if self.train.epochs_per_round == 0 {
            return Err(EngineError::Config("at least one epoch per round is required".into()));
        }
        if !(self.train.learning_rate.is_finite() && self.train.learning_rate >= 0.0) {
            return Err(EngineError::Config("learning rate must be finite and >= 0".into()));
        }
        if self.mode == Mode::Standard
            && !self.track_switches
            && self.strategy.needs_switch_counts()
        {
            return Err(EngineError::TrackingDisabled(self.strategy));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchSummary {
    pub min: u32,
    pub mean: f64,
    pub max: u32,
}

impl SwitchSummary {
    fn of(counts: &[u32]) -> Option<Self> {
        let min = *counts.iter().min()?;
        let max = *counts.iter().max()?;
        let mean = counts.iter().map(|&c| f64::from(c)).sum::<f64>() / counts.len() as f64;
        Some(Self { min, mean, max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub train_size: usize,
    pub test_accuracy: f64,
    /// Sample indices acquired at the end of this round, in selection order.
    pub selected: Vec<usize>,
    /// Score or sampling weight of each selected sample.
    pub selected_values: Vec<f64>,
    /// Pool switch counts the acquisition saw.
    pub switch_summary: Option<SwitchSummary>,
    pub mixture: Option<EmOutcome>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub strategy: Strategy,
    pub mode: Mode,
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
}

pub const CURVE_HEADER: &str = "round,train_size,test_accuracy,switch_min,switch_mean,switch_max";
pub const SELECTIONS_HEADER: &str = "round,strategy,sample_index,score_or_weight";

impl LearningCurve {
    pub fn accuracies(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.test_accuracy).collect()
    }

    /// Per-round accuracy table; deterministic (no timings).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for r in &self.rounds {
            let (lo, mean, hi) = match r.switch_summary {
                Some(s) => (s.min.to_string(), s.mean.to_string(), s.max.to_string()),
                None => Default::default(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.round, r.train_size, r.test_accuracy, lo, mean, hi
            ));
        }
        out
    }

    pub fn selections_csv(&self) -> String {
        let mut out = String::from(SELECTIONS_HEADER);
        out.push('\n');
        for r in &self.rounds {
            for (idx, value) in r.selected.iter().zip(&r.selected_values) {
                out.push_str(&format!("{},{},{},{}\n", r.round, self.strategy, idx, value));
            }
        }
        out
    }

    /// One line per round holding the mixture fit, when one was made.
    pub fn mixture_log(&self) -> String {
        self.rounds
            .iter()
            .filter_map(|r| r.mixture.as_ref().map(|m| format!("round={} {m}\n", r.round)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub curve: LearningCurve,
    /// Per-round pool event counts (standard mode).
    pub events: Vec<(usize, EventRow)>,
    /// Frozen counts from the fully trained reference model (oracle mode).
    pub reference_events: Option<Vec<EventRow>>,
    pub initial_partition: PoolPartition,
}

impl RunOutput {
    pub fn events_csv(&self) -> String {
        let mut out = format!("round,{}\n", crate::dynamics::EVENT_HEADER);
        for (round, row) in &self.events {
            out.push_str(&format!("{round},{}\n", row.csv_fields()));
        }
        out
    }

    pub fn reference_events_csv(&self) -> Option<String> {
        self.reference_events.as_ref().map(|rows| {
            let mut out = format!("{}\n", crate::dynamics::EVENT_HEADER);
            for row in rows {
                out.push_str(&row.csv_fields());
                out.push('\n');
            }
            out
        })
    }
}

fn partition_for(config: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<PoolPartition> {
    let split_seed = seed::derive(seed, Stream::Split, 0);
    let partition = match &config.test_split {
        TestSplit::Fraction(f) => split_initial(dataset, config.initial_train, *f, split_seed)?,
        TestSplit::Fixed(idx) => split_with_test(dataset, idx.clone(), config.initial_train, split_seed)?,
    };
    if partition.test_idx().is_empty() {
        return Err(EngineError::Config("test set is empty".into()));
    }
    Ok(partition)
}

fn train_config(config: &ExperimentConfig, shuffle_seed: u64) -> TrainConfig {
    TrainConfig {
        shuffle_seed,
        ..config.train.clone()
    }
}

fn fresh_model(config: &ExperimentConfig, dataset: &Dataset, init_seed: u64) -> Result<MlpModel> {
    Ok(init_model(&MlpConfig::new(
        dataset.feature_dim(),
        &config.hidden,
        dataset.num_classes(),
        init_seed,
    ))?)
}

/// Trains `model` and, when `tracker` is given, classifies `watch` after
/// every epoch to feed it.
fn train_tracked(
    model: &mut MlpModel,
    rows: &Matrix,
    labels: &[usize],
    train: &TrainConfig,
    watch: &Matrix,
    mut tracker: Option<&mut SwitchTracker>,
    mut forgetting: Option<(&mut ForgettingTracker, &[usize])>,
) -> Result<()> {
    let mut failure: Option<EngineError> = None;
    train_epochs(model, rows, labels, train, |_, m| {
        if failure.is_some() || (tracker.is_none() && forgetting.is_none()) {
            return;
        }
        let mut step = || -> Result<()> {
            let predictions = m.predict(watch)?;
            if let Some(t) = tracker.as_deref_mut() {
                t.record_predictions(&predictions)?;
            }
            if let Some((f, y)) = forgetting.as_mut() {
                f.record_labeled(&predictions, y)?;
            }
            Ok(())
        };
        if let Err(e) = step() {
            failure = Some(e);
        }
    })?;
    failure.map_or(Ok(()), Err)
}

/// Frozen scores of oracle-importance mode.
struct Reference {
    model: MlpModel,
    /// Switch count per sample index (train ∪ pool only).
    switch_by_sample: BTreeMap<usize, u32>,
    rows: Vec<EventRow>,
}

/// Trains one model on the fully labeled train ∪ pool, counting switch and
/// forgetting events of every one of those samples across its epochs.
fn fit_reference(
    config: &ExperimentConfig,
    dataset: &Dataset,
    partition: &PoolPartition,
    seed: u64,
) -> Result<Reference> {
    let mut full: Vec<usize> = partition
        .train_idx()
        .iter()
        .chain(partition.pool_idx())
        .copied()
        .collect();
    full.sort_unstable();
    let x = dataset.features().select_rows(&full);
    // Analysis mode: the reference model sees every label.
    let y: Vec<usize> = full.iter().map(|&i| dataset.labels()[i]).collect();
    let mut model = fresh_model(config, dataset, seed::derive(seed, Stream::OracleModel, 0))?;
    let mut switches = SwitchTracker::new(full.len());
    let mut forgetting = ForgettingTracker::new(full.len());
    train_tracked(
        &mut model,
        &x,
        &y,
        &train_config(config, seed::derive(seed, Stream::OracleModel, 1)),
        &x,
        Some(&mut switches),
        Some((&mut forgetting, &y)),
    )?;
    let rows = event_rows(&full, &switches, Some(&forgetting))?;
    let switch_by_sample = rows.iter().map(|r| (r.sample_index, r.switch_count)).collect();
    Ok(Reference {
        model,
        switch_by_sample,
        rows,
    })
}

/// Runs one active learning experiment for `seed`, dispatching on
/// `config.mode`.
pub fn run_experiment(config: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<RunOutput> {
    config.validate()?;
    let partition = partition_for(config, dataset, seed)?;
    let reference = match config.mode {
        Mode::Standard => None,
        Mode::OracleImportance => Some(fit_reference(config, dataset, &partition, seed)?),
    };
    run_loop(config, dataset, seed, partition, reference)
}

/// Oracle-importance analysis: scores are frozen once from a model trained
/// on the fully labeled pool, while the measured model is still retrained
/// from scratch every round.
pub fn run_oracle_importance(
    config: &ExperimentConfig,
    dataset: &Dataset,
    seed: u64,
) -> Result<RunOutput> {
    if config.mode != Mode::OracleImportance {
        return Err(EngineError::Config(format!(
            "mode mismatch: expected {}, got {}",
            Mode::OracleImportance,
            config.mode
        )));
    }
    run_experiment(config, dataset, seed)
}

fn run_loop(
    config: &ExperimentConfig,
    dataset: &Dataset,
    seed: u64,
    mut partition: PoolPartition,
    reference: Option<Reference>,
) -> Result<RunOutput> {
    let initial_partition = partition.clone();
    let mut oracle = LabelOracle::new(dataset, &partition);
    let features = dataset.features();
    let test_x = features.select_rows(partition.test_idx());
    let test_y: Vec<usize> = partition.test_idx().iter().map(|&i| dataset.labels()[i]).collect();
    let track = reference.is_none() && config.track_switches;

    let mut rounds = Vec::new();
    let mut events = Vec::new();
    for round in 0..=config.rounds {
        let started = Instant::now();
        let r = round as u64;
        let train_idx = partition.train_idx().to_vec();
        let pool_idx = partition.pool_idx().to_vec();
        let train_y = match oracle.known_labels(&train_idx) {
            Some(y) => y,
            None => {
                let missing = train_idx.iter().copied().find(|&i| !oracle.is_revealed(i));
                return Err(EngineError::Unrevealed(missing.unwrap_or_default()));
            }
        };
        let train_x = features.select_rows(&train_idx);
        let pool_x = features.select_rows(&pool_idx);

        let mut model = fresh_model(config, dataset, seed::derive(seed, Stream::ModelInit, r))?;
        let mut tracker = track.then(|| SwitchTracker::new(pool_idx.len()));
        train_tracked(
            &mut model,
            &train_x,
            &train_y,
            &train_config(config, seed::derive(seed, Stream::Shuffle, r)),
            &pool_x,
            tracker.as_mut(),
            None,
        )?;
        let test_accuracy = model.accuracy(&test_x, &test_y)?;

        let switch_counts: Option<Vec<u32>> = match (&reference, &tracker) {
            (Some(reference), _) => Some(
                pool_idx
                    .iter()
                    .map(|i| reference.switch_by_sample.get(i).copied().unwrap_or(0))
                    .collect(),
            ),
            (None, Some(t)) => {
                let counts = t.counts()?;
                for row in event_rows(&pool_idx, t, None)? {
                    events.push((round, row));
                }
                Some(counts)
            }
            (None, None) => None,
        };

        let mut record = RoundRecord {
            round,
            train_size: train_idx.len(),
            test_accuracy,
            selected: Vec::new(),
            selected_values: Vec::new(),
            switch_summary: switch_counts.as_deref().and_then(SwitchSummary::of),
            mixture: None,
            seconds: 0.0,
        };

        let last = round == config.rounds || pool_idx.is_empty();
        if !last {
            let ctx = AcquisitionContext {
                model: reference.as_ref().map_or(&model, |r| &r.model),
                pool_idx: &pool_idx,
                pool_features: &pool_x,
                train_features: &train_x,
                switch_counts: switch_counts.as_deref(),
                batch_size: config.batch_per_round,
                seed: seed::derive(seed, Stream::Acquire, r),
                em_config: config.em.clone(),
            };
            let selection = config.strategy.select(&ctx)?;
            let chosen: Vec<usize> = selection.positions.iter().map(|&p| pool_idx[p]).collect();
            oracle.reveal_labels(&chosen)?;
            partition.move_to_train(&chosen)?;
            record.selected = chosen;
            record.selected_values = selection.values;
            record.mixture = selection.mixture;
        }
        record.seconds = started.elapsed().as_secs_f64();
        rounds.push(record);
        if last {
            break;
        }
    }
    Ok(RunOutput {
        curve: LearningCurve {
            strategy: config.strategy,
            mode: config.mode,
            seed,
            rounds,
        },
        events,
        reference_events: reference.map(|r| r.rows),
        initial_partition,
    })
}

/// Identity of one run inside a suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunKey {
    pub mode: Mode,
    pub strategy: Strategy,
    pub seed: u64,
}

impl RunKey {
    /// Directory name of the run, e.g. `gauss_seed3` or `oracle-coreset_seed0`.
    pub fn dir_name(&self) -> String {
        let prefix = match self.mode {
            Mode::Standard => "",
            Mode::OracleImportance => "oracle-",
        };
        format!("{prefix}{}_seed{}", self.strategy, self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub key: RunKey,
    pub config: ExperimentConfig,
}

/// Expands `base` into one plan per (mode, strategy, seed). A standard-mode
/// random baseline is always included for every seed.
pub fn plan_suite(base: &ExperimentConfig, strategies: &[Strategy], modes: &[Mode]) -> Vec<RunPlan> {
    let mut keys: Vec<RunKey> = Vec::new();
    for &mode in modes {
        for &strategy in strategies {
            for &seed in &base.seeds {
                keys.push(RunKey { mode, strategy, seed });
            }
        }
    }
    for &seed in &base.seeds {
        keys.push(RunKey {
            mode: Mode::Standard,
            strategy: Strategy::Random,
            seed,
        });
    }
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|key| RunPlan {
            key,
            config: ExperimentConfig {
                strategy: key.strategy,
                mode: key.mode,
                seeds: vec![key.seed],
                ..base.clone()
            },
        })
        .collect()
}

pub type SuiteResults = BTreeMap<RunKey, Result<RunOutput>>;

/// Executes every plan independently on up to `jobs` threads. Failures are
/// recorded per run; results are keyed, so completion order does not matter.
pub fn run_suite(plans: &[RunPlan], dataset: &Dataset, jobs: usize) -> SuiteResults {
    let execute = |plan: &RunPlan| {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            run_experiment(&plan.config, dataset, plan.key.seed)
        }))
        .unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            Err(EngineError::Panicked(msg))
        });
        (plan.key, outcome)
    };
    if jobs <= 1 {
        return plans.iter().map(execute).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| plans.par_iter().map(execute).collect()),
        Err(_) => plans.iter().map(execute).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_blobs, BlobSpec};

    fn blobs(per_class: usize, fraction: f64) -> Dataset {
        synth_blobs(&BlobSpec {
            num_classes: 4,
            per_class,
            feature_dim: 2,
            spread: 1.0,
            outlier_fraction: fraction,
            seed: 0,
        })
        .unwrap()
    }

    fn small_config(strategy: Strategy) -> ExperimentConfig {
        ExperimentConfig {
            hidden: vec![16],
            train: TrainConfig {
                epochs_per_round: 5,
                minibatch_size: 32,
                learning_rate: 1e-2,
                shuffle_seed: 0,
            },
            strategy,
            rounds: 3,
            batch_per_round: 16,
            initial_train: 32,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn train_size_grows_by_batch() {
        let ds = blobs(100, 0.0);
        let out = run_experiment(&small_config(Strategy::Random), &ds, 1).unwrap();
        let sizes: Vec<usize> = out.curve.rounds.iter().map(|r| r.train_size).collect();
        assert_eq!(sizes, vec![32, 48, 64, 80]);
        assert!(out.curve.rounds.iter().all(|r| (0.0..=1.0).contains(&r.test_accuracy)));
        assert!(out.curve.rounds.last().unwrap().selected.is_empty());
    }

    #[test]
    fn pool_exhaustion_stops_the_loop() {
        // 160 samples: 32 test, 28 initial, 100 pool
        let ds = blobs(40, 0.0);
        let config = ExperimentConfig {
            rounds: 5,
            batch_per_round: 64,
            initial_train: 28,
            test_split: TestSplit::Fraction(0.2),
            ..small_config(Strategy::Random)
        };
        let out = run_experiment(&config, &ds, 0).unwrap();
        assert_eq!(out.initial_partition.pool_idx().len(), 100);
        let acquisitions = out.curve.rounds.iter().filter(|r| !r.selected.is_empty()).count();
        assert_eq!(acquisitions, 2);
        assert_eq!(out.curve.rounds.len(), 3);
        assert_eq!(out.curve.rounds[2].train_size, 128);
    }

    #[test]
    fn tracking_disabled_rejects_switch_strategies() {
        let ds = blobs(50, 0.0);
        let config = ExperimentConfig {
            track_switches: false,
            ..small_config(Strategy::Gauss)
        };
        assert!(matches!(
            run_experiment(&config, &ds, 0),
            Err(EngineError::TrackingDisabled(Strategy::Gauss))
        ));
        let config = ExperimentConfig {
            track_switches: false,
            ..small_config(Strategy::Entropy)
        };
        assert!(run_experiment(&config, &ds, 0).unwrap().events.is_empty());
    }

    #[test]
    fn conservation_and_label_discipline() {
        let ds = blobs(60, 0.0);
        for strategy in Strategy::ALL {
            let out = run_experiment(&small_config(strategy), &ds, 2).unwrap();
            let p = &out.initial_partition;
            let total = p.train_idx().len() + p.pool_idx().len();
            let mut seen: Vec<usize> = p.train_idx().to_vec();
            for r in &out.curve.rounds {
                assert_eq!(r.train_size, seen.len(), "{strategy}");
                for &i in &r.selected {
                    assert!(p.pool_idx().binary_search(&i).is_ok());
                    assert!(!seen.contains(&i));
                    seen.push(i);
                }
            }
            assert!(seen.len() <= total);
            for w in out.curve.rounds.windows(2) {
                assert_eq!(w[1].train_size - w[0].train_size, 16);
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let ds = blobs(60, 0.0);
        for strategy in [Strategy::Gauss, Strategy::Coreset] {
            let a = run_experiment(&small_config(strategy), &ds, 9).unwrap();
            let b = run_experiment(&small_config(strategy), &ds, 9).unwrap();
            assert_eq!(a.curve.to_csv(), b.curve.to_csv());
            assert_eq!(a.curve.selections_csv(), b.curve.selections_csv());
            assert_eq!(a.events_csv(), b.events_csv());
        }
    }

    #[test]
    fn oracle_mode_freezes_reference_scores() {
        let ds = blobs(60, 0.05);
        let config = ExperimentConfig {
            mode: Mode::OracleImportance,
            ..small_config(Strategy::SwitchTopK)
        };
        let out = run_oracle_importance(&config, &ds, 4).unwrap();
        let reference = out.reference_events.as_ref().unwrap();
        let p = &out.initial_partition;
        assert_eq!(reference.len(), p.train_idx().len() + p.pool_idx().len());
        assert!(reference.iter().all(|r| r.forget_count.unwrap() <= r.switch_count));
        assert!(out.events.is_empty());
        // selections follow the frozen counts: every pick has a count no
        // lower than any pool sample left behind in that round
        let counts: BTreeMap<usize, u32> = reference.iter().map(|r| (r.sample_index, r.switch_count)).collect();
        for (r, value) in out.curve.rounds[0].selected.iter().zip(&out.curve.rounds[0].selected_values) {
            assert_eq!(f64::from(counts[r]), *value);
        }
        assert!(run_oracle_importance(&small_config(Strategy::SwitchTopK), &ds, 4).is_err());
    }

    #[test]
    fn suite_isolates_failures() {
        let ds = blobs(50, 0.0);
        let base = ExperimentConfig {
            seeds: vec![0, 1],
            track_switches: false,
            ..small_config(Strategy::Random)
        };
        let plans = plan_suite(&base, &[Strategy::Entropy, Strategy::Gauss], &[Mode::Standard]);
        assert_eq!(plans.len(), 6);
        let results = run_suite(&plans, &ds, 2);
        assert_eq!(results.len(), 6);
        for (key, result) in &results {
            assert_eq!(result.is_err(), key.strategy == Strategy::Gauss, "{key:?}");
        }
        let sequential = run_suite(&plans, &ds, 1);
        for (key, result) in &results {
            if let (Ok(a), Ok(b)) = (result, &sequential[key]) {
                assert_eq!(a.curve.to_csv(), b.curve.to_csv());
            }
        }
    }
}
