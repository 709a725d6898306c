//! Dataset ingestion, synthetic blobs, pool partitioning and the simulated
//! label oracle.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::matrix::Matrix;
use crate::seed;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
const BLOB_CENTER_SCALE: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic 0x{found:08x} at byte offset 0 (expected 0x{expected:08x})")]
    BadMagic { found: u32, expected: u32 },
    #[error("truncated payload at byte offset {offset}: need {needed} bytes, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("count mismatch: {images} images vs {labels} labels (count field at byte offset 4)")]
    CountMismatch { images: usize, labels: usize },
    #[error("no rows")]
    NoRows,
    #[error("ragged row {row}: expected {expected} columns, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric cell at row {row}, column {column}: {value:?}")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("negative label {value} at row {row}")]
    NegativeLabel { row: usize, value: f64 },
    #[error("label {value} at row {row} is not an integer")]
    FractionalLabel { row: usize, value: f64 },
    #[error("label column {column} out of range for {width} columns")]
    LabelColumn { column: usize, width: usize },
    #[error("outlier_fraction {0} outside [0,1]")]
    OutlierFraction(f64),
    #[error("budget exceeds available samples: {requested} initial + 1 > {available} non-test samples")]
    Budget { requested: usize, available: usize },
    #[error("index {0} is not in the unlabeled pool")]
    NotInPool(usize),
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

/// Features, labels and optional ground-truth outlier flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
    outlier_flags: Option<Vec<bool>>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        num_classes: usize,
        outlier_flags: Option<Vec<bool>>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(DatasetError::Invalid(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if num_classes == 0 || features.cols() == 0 {
            return Err(DatasetError::Invalid(
                "num_classes and feature_dim must be positive".into(),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(DatasetError::Invalid(format!(
                "label {bad} >= num_classes {num_classes}"
            )));
        }
        if let Some(flags) = &outlier_flags {
            if flags.len() != labels.len() {
                return Err(DatasetError::Invalid(format!(
                    "{} outlier flags for {} samples",
                    flags.len(),
                    labels.len()
                )));
            }
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            outlier_flags,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn outlier_flags(&self) -> Option<&[bool]> {
        self.outlier_flags.as_deref()
    }

    /// Appends `other` after `self`; returns the combined dataset and the
    /// index range occupied by `other`. Used to attach a separate test file.
    pub fn append(&self, other: &Dataset) -> Result<(Dataset, std::ops::Range<usize>)> {
        if self.feature_dim() != other.feature_dim() {
            return Err(DatasetError::Invalid(format!(
                "feature_dim {} vs {}",
                self.feature_dim(),
                other.feature_dim()
            )));
        }
        let flags = match (&self.outlier_flags, &other.outlier_flags) {
            (None, None) => None,
            (a, b) => {
                let mut f = a.clone().unwrap_or_else(|| vec![false; self.len()]);
                f.extend(b.clone().unwrap_or_else(|| vec![false; other.len()]));
                Some(f)
            }
        };
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let combined = Dataset::new(
            self.features.vstack(&other.features),
            labels,
            self.num_classes.max(other.num_classes),
            flags,
        )?;
        Ok((combined, self.len()..self.len() + other.len()))
    }
}

fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let raw = fs::read(path).map_err(io_err)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io_err)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    match bytes.get(offset..offset + 4) {
        Some(b) => Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]])),
        None => Err(DatasetError::Truncated {
            offset,
            needed: 4,
            available: bytes.len().saturating_sub(offset),
        }),
    }
}

fn payload(bytes: &[u8], offset: usize, needed: usize) -> Result<&[u8]> {
    bytes
        .get(offset..offset + needed)
        .ok_or(DatasetError::Truncated {
            offset,
            needed,
            available: bytes.len().saturating_sub(offset),
        })
}

/// Parses an IDX image file (magic 0x00000803) into `(count, pixels, raw bytes)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, &[u8])> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DatasetError::BadMagic {
            found: magic,
            expected: IDX_IMAGES_MAGIC,
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let pixels = rows * cols;
    let data = payload(bytes, 16, count * pixels)?;
    Ok((count, pixels, data))
}

/// Parses an IDX label file (magic 0x00000801).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DatasetError::BadMagic {
            found: magic,
            expected: IDX_LABELS_MAGIC,
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    payload(bytes, 8, count)
}

/// Loads an IDX image/label pair; gzip is detected from the magic bytes.
/// Pixels are scaled to `[0, 1]` by dividing by 255.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let image_bytes = read_maybe_gzip(images_path)?;
    let label_bytes = read_maybe_gzip(labels_path)?;
    idx_from_bytes(&image_bytes, &label_bytes)
}

pub fn idx_from_bytes(image_bytes: &[u8], label_bytes: &[u8]) -> Result<Dataset> {
    let (count, pixels, data) = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if labels.len() != count {
        return Err(DatasetError::CountMismatch {
            images: count,
            labels: labels.len(),
        });
    }
    if count == 0 {
        return Err(DatasetError::NoRows);
    }
    let features = Matrix::from_vec(
        count,
        pixels,
        data.iter().map(|&b| f64::from(b) / 255.0).collect(),
    );
    let labels: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
    let num_classes = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::new(features, labels, num_classes, None)
}

/// Loads a header-less numeric CSV; `label_column` holds non-negative
/// integer class labels, all other columns become features in file order.
pub fn load_csv(path: &Path, label_column: usize) -> Result<Dataset> {
    let bytes = read_maybe_gzip(path)?;
    let text = String::from_utf8_lossy(&bytes);
    csv_from_str(&text, label_column)
}

pub fn csv_from_str(text: &str, label_column: usize) -> Result<Dataset> {
    let mut width = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (row, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = *width.get_or_insert(cells.len());
        if cells.len() != expected {
            return Err(DatasetError::Ragged {
                row,
                expected,
                found: cells.len(),
            });
        }
        if label_column >= expected {
            return Err(DatasetError::LabelColumn {
                column: label_column,
                width: expected,
            });
        }
        for (column, cell) in cells.iter().enumerate() {
            let value: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| DatasetError::NonNumeric {
                    row,
                    column,
                    value: (*cell).to_string(),
                })?;
            if column == label_column {
                if value < 0.0 {
                    return Err(DatasetError::NegativeLabel { row, value });
                }
                if value.fract() != 0.0 {
                    return Err(DatasetError::FractionalLabel { row, value });
                }
                labels.push(value as usize);
            } else {
                data.push(value);
            }
        }
    }
    let Some(width) = width else {
        return Err(DatasetError::NoRows);
    };
    if width < 2 {
        return Err(DatasetError::Invalid(
            "need at least one feature column besides the label".into(),
        ));
    }
    let num_classes = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::new(
        Matrix::from_vec(labels.len(), width - 1, data),
        labels,
        num_classes,
        None,
    )
}

/// Parameters for [`synth_blobs`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub num_classes: usize,
    pub per_class: usize,
    pub feature_dim: usize,
    pub spread: f64,
    pub outlier_fraction: f64,
    pub seed: u64,
}

/// Center of blob class `class`: the hypercube corner whose coordinates are
/// the bits of `class`, scaled by 10.
pub fn blob_center(class: usize, feature_dim: usize) -> Vec<f64> {
    (0..feature_dim)
        .map(|d| {
            if d < usize::BITS as usize && (class >> d) & 1 == 1 {
                BLOB_CENTER_SCALE
            } else {
                0.0
            }
        })
        .collect()
}

/// Isotropic Gaussian blobs around hypercube corners. A fraction of each
/// class is relabeled to a different random class and flagged as outliers.
pub fn synth_blobs(spec: &BlobSpec) -> Result<Dataset> {
    let BlobSpec {
        num_classes,
        per_class,
        feature_dim,
        spread,
        outlier_fraction,
        seed,
    } = *spec;
    if !(0.0..=1.0).contains(&outlier_fraction) {
        return Err(DatasetError::OutlierFraction(outlier_fraction));
    }
    if num_classes < 2 || per_class == 0 || feature_dim == 0 {
        return Err(DatasetError::Invalid(
            "blobs need num_classes >= 2, per_class >= 1, feature_dim >= 1".into(),
        ));
    }
    let corners = if feature_dim >= usize::BITS as usize {
        usize::MAX
    } else {
        1usize << feature_dim
    };
    if num_classes > corners {
        return Err(DatasetError::Invalid(format!(
            "{num_classes} classes need more than {feature_dim} dimensions for distinct centers"
        )));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(DatasetError::Invalid(format!("spread {spread} must be finite and >= 0")));
    }

    let mut rng = seed::rng(seed);
    let n = num_classes * per_class;
    let mut data = Vec::with_capacity(n * feature_dim);
    let mut labels = Vec::with_capacity(n);
    let mut flags = vec![false; n];
    let flips_per_class = (outlier_fraction * per_class as f64).floor() as usize;

    for class in 0..num_classes {
        let center = blob_center(class, feature_dim);
        for _ in 0..per_class {
            for &c in &center {
                let z: f64 = rng.sample(StandardNormal);
                data.push(c + spread * z);
            }
            labels.push(class);
        }
        let base = class * per_class;
        for offset in index::sample(&mut rng, per_class, flips_per_class).into_vec() {
            let shift = rng.gen_range(1..num_classes);
            labels[base + offset] = (class + shift) % num_classes;
            flags[base + offset] = true;
        }
    }
    Dataset::new(
        Matrix::from_vec(n, feature_dim, data),
        labels,
        num_classes,
        Some(flags),
    )
}

/// Disjoint, sorted index sets for the labeled train set, the unlabeled
/// pool and the test set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolPartition {
    train_idx: Vec<usize>,
    pool_idx: Vec<usize>,
    test_idx: Vec<usize>,
}

impl PoolPartition {
    pub fn new(
        mut train_idx: Vec<usize>,
        mut pool_idx: Vec<usize>,
        mut test_idx: Vec<usize>,
        n_samples: usize,
    ) -> Result<Self> {
        train_idx.sort_unstable();
        pool_idx.sort_unstable();
        test_idx.sort_unstable();
        let mut seen = vec![false; n_samples];
        for &i in train_idx.iter().chain(&pool_idx).chain(&test_idx) {
            match seen.get_mut(i) {
                Some(s) if !*s => *s = true,
                Some(_) => {
                    return Err(DatasetError::Invalid(format!(
                        "index {i} appears in more than one set"
                    )))
                }
                None => {
                    return Err(DatasetError::Invalid(format!(
                        "index {i} out of range for {n_samples} samples"
                    )))
                }
            }
        }
        Ok(Self {
            train_idx,
            pool_idx,
            test_idx,
        })
    }

    pub fn train_idx(&self) -> &[usize] {
        &self.train_idx
    }

    pub fn pool_idx(&self) -> &[usize] {
        &self.pool_idx
    }

    pub fn test_idx(&self) -> &[usize] {
        &self.test_idx
    }

    /// Moves `indices` from the pool into the train set.
    pub fn move_to_train(&mut self, indices: &[usize]) -> Result<()> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &i in &sorted {
            if self.pool_idx.binary_search(&i).is_err() {
                return Err(DatasetError::NotInPool(i));
            }
        }
        self.pool_idx.retain(|i| sorted.binary_search(i).is_err());
        self.train_idx.extend_from_slice(&sorted);
        self.train_idx.sort_unstable();
        Ok(())
    }
}

/// Carves a test set (uniform without replacement) from `dataset`, then draws
/// `initial_train` samples uniformly from the remainder; the rest is pool.
pub fn split_initial(
    dataset: &Dataset,
    initial_train: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<PoolPartition> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(DatasetError::Invalid(format!(
            "test_fraction {test_fraction} outside [0,1)"
        )));
    }
    let n = dataset.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    let available = n - n_test;
    if initial_train + 1 > available {
        return Err(DatasetError::Budget {
            requested: initial_train,
            available,
        });
    }
    let mut rng = seed::rng(seed);
    let test_idx = index::sample(&mut rng, n, n_test).into_vec();
    let mut is_test = vec![false; n];
    for &i in &test_idx {
        is_test[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
    let mut is_train = vec![false; rest.len()];
    for p in index::sample(&mut rng, rest.len(), initial_train) {
        is_train[p] = true;
    }
    let (mut train, mut pool) = (Vec::new(), Vec::new());
    for (&i, &t) in rest.iter().zip(&is_train) {
        if t {
            train.push(i);
        } else {
            pool.push(i);
        }
    }
    PoolPartition::new(
        train,
        pool,
        test_idx,
        n,
    )
}

/// Like [`split_initial`] but with a fixed test set (e.g. a separate test
/// file appended via [`Dataset::append`]).
pub fn split_with_test(
    dataset: &Dataset,
    test_idx: Vec<usize>,
    initial_train: usize,
    seed: u64,
) -> Result<PoolPartition> {
    let n = dataset.len();
    let mut is_test = vec![false; n];
    for &i in &test_idx {
        if i >= n {
            return Err(DatasetError::Invalid(format!("test index {i} out of range")));
        }
        is_test[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
    if initial_train + 1 > rest.len() {
        return Err(DatasetError::Budget {
            requested: initial_train,
            available: rest.len(),
        });
    }
    let mut rng = seed::rng(seed);
    let mut is_train = vec![false; rest.len()];
    for p in index::sample(&mut rng, rest.len(), initial_train) {
        is_train[p] = true;
    }
    let mut train = Vec::new();
    let mut pool = Vec::new();
    for (&i, t) in rest.iter().zip(is_train) {
        if t {
            train.push(i);
        } else {
            pool.push(i);
        }
    }
    PoolPartition::new(train, pool, test_idx, n)
}

/// Simulated annotator. Train-set labels are revealed up front; pool labels
/// are released only through [`LabelOracle::reveal_labels`].
#[derive(Debug, Clone)]
pub struct LabelOracle<'a> {
    source: &'a Dataset,
    revealable: Vec<bool>,
    revealed: Vec<bool>,
}

impl<'a> LabelOracle<'a> {
    pub fn new(source: &'a Dataset, partition: &PoolPartition) -> Self {
        let n = source.len();
        let mut revealable = vec![false; n];
        let mut revealed = vec![false; n];
        for &i in partition.train_idx() {
            revealable[i] = true;
            revealed[i] = true;
        }
        for &i in partition.pool_idx() {
            revealable[i] = true;
        }
        Self {
            source,
            revealable,
            revealed,
        }
    }

    /// Releases the labels of `indices`. Revealing an index twice returns the
    /// same label; indices outside the train/pool sets are rejected.
    pub fn reveal_labels(&mut self, indices: &[usize]) -> Result<Vec<usize>> {
        for &i in indices {
            if !self.revealable.get(i).copied().unwrap_or(false) {
                return Err(DatasetError::NotInPool(i));
            }
        }
        Ok(indices
            .iter()
            .map(|&i| {
                self.revealed[i] = true;
                self.source.labels[i]
            })
            .collect())
    }

    pub fn is_revealed(&self, i: usize) -> bool {
        self.revealed.get(i).copied().unwrap_or(false)
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed.iter().filter(|&&r| r).count()
    }

    /// Labels of already revealed samples; `None` if any index is unrevealed.
    pub fn known_labels(&self, indices: &[usize]) -> Option<Vec<usize>> {
        indices
            .iter()
            .map(|&i| self.is_revealed(i).then(|| self.source.labels[i]))
            .collect()
    }
}
