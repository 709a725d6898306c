//! Per-sample event counters over the per-epoch time axis.
//!
//! A switch event is a change of the predicted class between consecutive
//! observations. A forgetting event is a transition from correctly to
//! incorrectly classified and needs labels. The first observation of a
//! tracker is a baseline and never counts.

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("length mismatch: tracker has {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("tracker has not recorded any epoch")]
    Empty,
}

pub type Result<T, E = DynamicsError> = std::result::Result<T, E>;

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(DynamicsError::LengthMismatch { expected, found });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchTracker {
    last_prediction: Vec<Option<usize>>,
    switch_count: Vec<u32>,
    epochs_seen: u32,
}

impl SwitchTracker {
    pub fn new(samples: usize) -> Self {
        Self {
            last_prediction: vec![None; samples],
            switch_count: vec![0; samples],
            epochs_seen: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.switch_count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.switch_count.is_empty()
    }

    pub fn epochs_seen(&self) -> u32 {
        self.epochs_seen
    }

    pub fn record_predictions(&mut self, predictions: &[usize]) -> Result<()> {
        check_len(self.len(), predictions.len())?;
        for ((last, count), &new) in self
            .last_prediction
            .iter_mut()
            .zip(&mut self.switch_count)
            .zip(predictions)
        {
            if matches!(*last, Some(old) if old != new) {
                *count += 1;
            }
            *last = Some(new);
        }
        self.epochs_seen += 1;
        Ok(())
    }

    /// Snapshot of the per-sample switch counts.
    pub fn counts(&self) -> Result<Vec<u32>> {
        if self.epochs_seen == 0 {
            return Err(DynamicsError::Empty);
        }
        Ok(self.switch_count.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgettingTracker {
    last_correct: Vec<Option<bool>>,
    forget_count: Vec<u32>,
    epochs_seen: u32,
}

impl ForgettingTracker {
    pub fn new(samples: usize) -> Self {
        Self {
            last_correct: vec![None; samples],
            forget_count: vec![0; samples],
            epochs_seen: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.forget_count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forget_count.is_empty()
    }

    pub fn epochs_seen(&self) -> u32 {
        self.epochs_seen
    }

    pub fn record_labeled(&mut self, predictions: &[usize], labels: &[usize]) -> Result<()> {
        check_len(self.len(), predictions.len())?;
        check_len(self.len(), labels.len())?;
        for (i, (&p, &y)) in predictions.iter().zip(labels).enumerate() {
            let correct = p == y;
            if self.last_correct[i] == Some(true) && !correct {
                self.forget_count[i] += 1;
            }
            self.last_correct[i] = Some(correct);
        }
        self.epochs_seen += 1;
        Ok(())
    }

    pub fn counts(&self) -> Result<Vec<u32>> {
        if self.epochs_seen == 0 {
            return Err(DynamicsError::Empty);
        }
        Ok(self.forget_count.clone())
    }
}

/// One row of the event-count dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRow {
    pub sample_index: usize,
    pub switch_count: u32,
    pub forget_count: Option<u32>,
    pub epochs_seen: u32,
}

pub const EVENT_HEADER: &str = "sample_index,switch_count,forget_count,epochs_seen";

impl EventRow {
    /// CSV fields in header order; `forget_count` is empty when unlabeled.
    pub fn csv_fields(&self) -> String {
        let forget = self.forget_count.map(|f| f.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{}",
            self.sample_index, self.switch_count, forget, self.epochs_seen
        )
    }
}

/// Joins tracker counts with the sample indices they were recorded for.
pub fn event_rows(
    sample_indices: &[usize],
    switches: &SwitchTracker,
    forgetting: Option<&ForgettingTracker>,
) -> Result<Vec<EventRow>> {
    let s = switches.counts()?;
    check_len(s.len(), sample_indices.len())?;
    let f = forgetting.map(ForgettingTracker::counts).transpose()?;
    if let Some(f) = &f {
        check_len(s.len(), f.len())?;
    }
    Ok(sample_indices
        .iter()
        .enumerate()
        .map(|(k, &sample_index)| EventRow {
            sample_index,
            switch_count: s[k],
            forget_count: f.as_ref().map(|f| f[k]),
            epochs_seen: switches.epochs_seen(),
        })
        .collect())
}
