//! Flat `key = value` experiment configuration with dotted-key overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gauss_core::dataset::{load_csv, load_idx, synth_blobs, BlobSpec};
use gauss_core::engine::TestSplit;
use gauss_core::{Dataset, EmConfig, ExperimentConfig, Mode, Strategy, TrainConfig};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Every key a config file or override may set, with its default.
const KEYS: &[(&str, &str)] = &[
    ("dataset.kind", "blobs"),
    ("dataset.name", ""),
    ("dataset.path", ""),
    ("dataset.labels", ""),
    ("dataset.test_path", ""),
    ("dataset.test_labels", ""),
    ("dataset.label_column", "0"),
    ("dataset.test_fraction", "0.2"),
    ("dataset.classes", "4"),
    ("dataset.per_class", "250"),
    ("dataset.dim", "2"),
    ("dataset.spread", "1.0"),
    ("dataset.outliers", "0.0"),
    ("dataset.seed", "0"),
    ("model.hidden", "64"),
    ("train.epochs", "30"),
    ("train.lr", "0.0001"),
    ("train.batch", "32"),
    ("al.strategy", "random"),
    ("al.rounds", "10"),
    ("al.batch", "1024"),
    ("al.initial", "128"),
    ("al.seeds", "0,1,2,3,4"),
    ("al.track", "true"),
    ("em.iterations", "200"),
    ("em.tolerance", "1e-8"),
    ("em.variance_floor", "1e-6"),
    ("mode", "standard"),
];

pub fn is_known_key(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// Raw settings after defaults, file entries and overrides, in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            entries: KEYS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !is_known_key(key) {
            return Err(CliError::Config(format!("unknown key {key:?}")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.entries.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key);
        raw.parse()
            .map_err(|e| CliError::Config(format!("{key} = {raw:?}: {e}")))
    }

    fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| CliError::Config(format!("{key}: {s:?}: {e}")))
            })
            .collect()
    }

    pub fn strategies(&self) -> Result<Vec<Strategy>, CliError> {
        let list = self.parse_list("al.strategy")?;
        if list.is_empty() {
            return Err(CliError::Config("al.strategy is empty".into()));
        }
        Ok(list)
    }

    pub fn modes(&self) -> Result<Vec<Mode>, CliError> {
        let list = self.parse_list("mode")?;
        if list.is_empty() {
            return Err(CliError::Config("mode is empty".into()));
        }
        Ok(list)
    }

    /// Experiment settings; strategy and mode are the first listed ones.
    pub fn experiment(&self, seed_offset: u64) -> Result<ExperimentConfig, CliError> {
        let seeds: Vec<u64> = self.parse_list("al.seeds")?;
        if seeds.is_empty() {
            return Err(CliError::Config("al.seeds is empty".into()));
        }
        let test_fraction: f64 = self.parse_value("dataset.test_fraction")?;
        if !(test_fraction > 0.0 && test_fraction < 1.0) && self.get("dataset.test_path").is_empty() {
            return Err(CliError::Config(format!(
                "dataset.test_fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        let config = ExperimentConfig {
            hidden: self.parse_list("model.hidden")?,
            train: TrainConfig {
                epochs_per_round: self.parse_value("train.epochs")?,
                learning_rate: self.parse_value("train.lr")?,
                minibatch_size: self.parse_value("train.batch")?,
                ..TrainConfig::default()
            },
            strategy: self.strategies()?[0],
            rounds: self.parse_value("al.rounds")?,
            batch_per_round: self.parse_value("al.batch")?,
            initial_train: self.parse_value("al.initial")?,
            test_split: TestSplit::Fraction(test_fraction),
            seeds: seeds.iter().map(|s| s + seed_offset).collect(),
            mode: self.modes()?[0],
            track_switches: self.parse_value("al.track")?,
            em: EmConfig {
                max_iterations: self.parse_value("em.iterations")?,
                relative_tolerance: self.parse_value("em.tolerance")?,
                variance_floor: self.parse_value("em.variance_floor")?,
            },
        };
        if config.train.minibatch_size == 0 {
            return Err(CliError::Config("train.batch must be positive".into()));
        }
        config
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(config)
    }

    /// Label used as the dataset column of analysis tables.
    pub fn dataset_name(&self) -> String {
        let name = self.get("dataset.name");
        if !name.is_empty() {
            return name.to_string();
        }
        match self.get("dataset.kind") {
            "blobs" => "blobs".to_string(),
            _ => Path::new(self.get("dataset.path"))
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_string()),
        }
    }

    /// Loads the configured dataset. A separate test file, when given, is
    /// appended and fixed as the test split.
    pub fn load_dataset(&self, experiment: &mut ExperimentConfig) -> Result<Dataset, CliError> {
        let main = match self.get("dataset.kind") {
            "blobs" => synth_blobs(&BlobSpec {
                num_classes: self.parse_value("dataset.classes")?,
                per_class: self.parse_value("dataset.per_class")?,
                feature_dim: self.parse_value("dataset.dim")?,
                spread: self.parse_value("dataset.spread")?,
                outlier_fraction: self.parse_value("dataset.outliers")?,
                seed: self.parse_value("dataset.seed")?,
            })
            .map_err(|e| CliError::Dataset(e.to_string()))?,
            "csv" => {
                let column = self.parse_value("dataset.label_column")?;
                load_csv(&self.data_path("dataset.path")?, column)
                    .map_err(|e| CliError::Dataset(e.to_string()))?
            }
            "idx" => load_idx(
                &self.data_path("dataset.path")?,
                &self.data_path("dataset.labels")?,
            )
            .map_err(|e| CliError::Dataset(e.to_string()))?,
            other => return Err(CliError::Config(format!("unknown dataset.kind {other:?}"))),
        };
        if self.get("dataset.test_path").is_empty() {
            return Ok(main);
        }
        let test = match self.get("dataset.kind") {
            "csv" => load_csv(
                &self.data_path("dataset.test_path")?,
                self.parse_value("dataset.label_column")?,
            ),
            "idx" => load_idx(
                &self.data_path("dataset.test_path")?,
                &self.data_path("dataset.test_labels")?,
            ),
            other => {
                return Err(CliError::Config(format!(
                    "dataset.test_path is not supported for kind {other:?}"
                )))
            }
        }
        .map_err(|e| CliError::Dataset(e.to_string()))?;
        let (combined, range) = main
            .append(&test)
            .map_err(|e| CliError::Dataset(e.to_string()))?;
        experiment.test_split = TestSplit::Fixed(range.collect());
        Ok(combined)
    }

    /// Resolves a path key, relative paths against `GAUSS_DATA_DIR` when set.
    fn data_path(&self, key: &str) -> Result<PathBuf, CliError> {
        let raw = self.get(key);
        if raw.is_empty() {
            return Err(CliError::Config(format!("{key} is required")));
        }
        let path = PathBuf::from(raw);
        if path.is_relative() {
            if let Some(root) = std::env::var_os("GAUSS_DATA_DIR") {
                return Ok(PathBuf::from(root).join(path));
            }
        }
        Ok(path)
    }
}

pub type Overrides = Vec<(String, String)>;

/// Splits `--section.key value` and `--section.key=value` pairs out of argv.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides), CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if !key.contains('.') {
            rest.push(arg);
            continue;
        }
        if !is_known_key(&key) {
            return Err(CliError::Config(format!("unknown override --{key}")));
        }
        let value = match inline {
            Some(v) => v,
            None => iter
                .next()
                .ok_or_else(|| CliError::Config(format!("--{key} needs a value")))?,
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

/// SHA-256 over the feature bits and labels of a loaded dataset.
pub fn dataset_hash(dataset: &Dataset) -> String {
    let mut hasher = Sha256::new();
    hasher.update((dataset.len() as u64).to_le_bytes());
    hasher.update((dataset.feature_dim() as u64).to_le_bytes());
    for row in dataset.features().iter_rows() {
        for v in row {
            hasher.update(v.to_le_bytes());
        }
    }
    for &label in dataset.labels() {
        hasher.update((label as u64).to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_unknown_keys() {
        let c = RawConfig::parse("# header\nal.batch = 32  # inline\n\nmodel.hidden=8,8\n").unwrap();
        assert_eq!(c.get("al.batch"), "32");
        assert_eq!(c.get("model.hidden"), "8,8");
        assert!(matches!(RawConfig::parse("al.bogus = 1"), Err(CliError::Config(_))));
        assert!(matches!(RawConfig::parse("just words"), Err(CliError::Config(_))));
    }

    #[test]
    fn overrides_are_split_from_argv() {
        let args = ["gauss", "run", "--al.batch", "32", "--out", "x", "--train.lr=0.5"]
            .map(String::from)
            .to_vec();
        let (rest, overrides) = extract_overrides(args).unwrap();
        assert_eq!(rest, ["gauss", "run", "--out", "x"]);
        assert_eq!(
            overrides,
            vec![
                ("al.batch".to_string(), "32".to_string()),
                ("train.lr".to_string(), "0.5".to_string())
            ]
        );
        assert!(extract_overrides(vec!["--al.nope".into(), "1".into()]).is_err());
        assert!(extract_overrides(vec!["--al.batch".into()]).is_err());
    }

    #[test]
    fn experiment_from_defaults() {
        let mut c = RawConfig::default();
        c.set("al.strategy", "gauss,entropy").unwrap();
        let e = c.experiment(10).unwrap();
        assert_eq!(e.strategy, Strategy::Gauss);
        assert_eq!(e.seeds, vec![10, 11, 12, 13, 14]);
        assert_eq!(c.strategies().unwrap().len(), 2);
        c.set("al.rounds", "zero").unwrap();
        assert!(matches!(c.experiment(0), Err(CliError::Config(_))));
    }

    #[test]
    fn dataset_hash_tracks_content() {
        let mut c = RawConfig::default();
        c.set("dataset.per_class", "5").unwrap();
        let mut e = c.experiment(0).unwrap();
        let a = c.load_dataset(&mut e).unwrap();
        let b = c.load_dataset(&mut e).unwrap();
        assert_eq!(dataset_hash(&a), dataset_hash(&b));
        c.set("dataset.seed", "1").unwrap();
        let other = c.load_dataset(&mut e).unwrap();
        assert_ne!(dataset_hash(&a), dataset_hash(&other));
    }

    #[test]
    fn missing_dataset_file_is_a_dataset_error() {
        let mut c = RawConfig::default();
        c.set("dataset.kind", "csv").unwrap();
        c.set("dataset.path", "/nonexistent/data.csv").unwrap();
        let mut e = c.experiment(0).unwrap();
        assert!(matches!(c.load_dataset(&mut e), Err(CliError::Dataset(_))));
    }
}
