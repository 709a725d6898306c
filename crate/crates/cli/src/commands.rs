//! The five subcommands and the files they read and write.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use gauss_core::analysis::{
    area_under_difference, curve_mean_and_spread, importance_histogram, mean_and_std,
    smoothed_kl, welch_t_test,
};
use gauss_core::engine::{plan_suite, run_experiment, run_suite, RunKey};
use gauss_core::{Dataset, ExperimentConfig, Mode, RunOutput, Strategy};
use serde_json::{json, Value};

use crate::config::{dataset_hash, RawConfig};
use crate::output::{parse_cell, write_atomic, Table};
use crate::{Cli, CliError, Command};

pub const MANIFEST: &str = "manifest.json";
pub const INDEX: &str = "index.csv";
pub const INDEX_HEADER: &str = "run,mode,strategy,seed,status,final_accuracy,error";
pub const AREA: &str = "area.csv";
pub const KL: &str = "kl.csv";
pub const TTEST: &str = "ttest.csv";
pub const REPORT: &str = "report.csv";

pub fn dispatch(cli: &Cli, overrides: &[(String, String)]) -> Result<(), CliError> {
    match &cli.command {
        Command::Run => cmd_run(cli, overrides, None),
        Command::Oracle => cmd_run(cli, overrides, Some(Mode::OracleImportance)),
        Command::Suite => cmd_suite(cli, overrides),
        Command::Analyze { dir, sigma } => cmd_analyze(dir, *sigma),
        Command::Report { dir } => cmd_report(dir),
    }
}

fn load_config(cli: &Cli, overrides: &[(String, String)]) -> Result<RawConfig, CliError> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    for (key, value) in overrides {
        raw.set(key, value)?;
    }
    Ok(raw)
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

struct Manifest {
    path: PathBuf,
    body: Value,
}

impl Manifest {
    fn new(dir: &Path, command: &str, raw: &RawConfig, dataset: &Dataset, runs: Vec<Value>) -> Self {
        Self {
            path: dir.join(MANIFEST),
            body: json!({
                "version": env!("CARGO_PKG_VERSION"),
                "command": command,
                "config": raw.entries(),
                "dataset": {
                    "name": raw.dataset_name(),
                    "sha256": dataset_hash(dataset),
                    "samples": dataset.len(),
                    "features": dataset.feature_dim(),
                    "classes": dataset.num_classes(),
                },
                "runs": runs,
                "started_at": now(),
                "completed_at": Value::Null,
            }),
        }
    }

    fn write(&self) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(&self.body)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        write_atomic(&self.path, format!("{text}\n").as_bytes())
    }

    fn complete(mut self) -> Result<(), CliError> {
        self.body["completed_at"] = Value::String(now());
        self.write()
    }
}

fn run_files(mode: Mode) -> Vec<&'static str> {
    let mut files = vec!["curve.csv", "selections.csv", "events.csv", "mixture.log"];
    if mode == Mode::OracleImportance {
        files.push("reference_events.csv");
    }
    files
}

fn run_entry(key: &RunKey, dir: &str) -> Value {
    json!({
        "run": dir,
        "mode": key.mode.name(),
        "strategy": key.strategy.name(),
        "seed": key.seed,
        "files": run_files(key.mode),
    })
}

fn write_run(dir: &Path, output: &RunOutput) -> Result<(), CliError> {
    write_atomic(&dir.join("curve.csv"), output.curve.to_csv().as_bytes())?;
    write_atomic(&dir.join("selections.csv"), output.curve.selections_csv().as_bytes())?;
    write_atomic(&dir.join("events.csv"), output.events_csv().as_bytes())?;
    write_atomic(&dir.join("mixture.log"), output.curve.mixture_log().as_bytes())?;
    if let Some(reference) = output.reference_events_csv() {
        write_atomic(&dir.join("reference_events.csv"), reference.as_bytes())?;
    }
    Ok(())
}

fn prepare(cli: &Cli, overrides: &[(String, String)]) -> Result<(RawConfig, ExperimentConfig, Dataset), CliError> {
    let raw = load_config(cli, overrides)?;
    let mut experiment = raw.experiment(cli.seed_offset)?;
    let dataset = raw.load_dataset(&mut experiment)?;
    Ok((raw, experiment, dataset))
}

fn cmd_run(cli: &Cli, overrides: &[(String, String)], force_mode: Option<Mode>) -> Result<(), CliError> {
    let (raw, mut experiment, dataset) = prepare(cli, overrides)?;
    if let Some(mode) = force_mode {
        experiment.mode = mode;
    }
    let key = RunKey {
        mode: experiment.mode,
        strategy: experiment.strategy,
        seed: experiment.seeds[0],
    };
    let command = if force_mode.is_some() { "oracle" } else { "run" };
    let manifest = Manifest::new(&cli.out, command, &raw, &dataset, vec![run_entry(&key, ".")]);
    manifest.write()?;
    let output = run_experiment(&experiment, &dataset, key.seed)?;
    write_run(&cli.out, &output)?;
    manifest.complete()
}

fn sanitize(message: &str) -> String {
    message.replace([',', '\n', '\r'], ";")
}

fn cmd_suite(cli: &Cli, overrides: &[(String, String)]) -> Result<(), CliError> {
    let (raw, experiment, dataset) = prepare(cli, overrides)?;
    let plans = plan_suite(&experiment, &raw.strategies()?, &raw.modes()?);
    let entries = plans
        .iter()
        .map(|p| run_entry(&p.key, &p.key.dir_name()))
        .collect();
    let manifest = Manifest::new(&cli.out, "suite", &raw, &dataset, entries);
    manifest.write()?;
    let results = run_suite(&plans, &dataset, cli.jobs.max(1));
    let mut index = format!("{INDEX_HEADER}\n");
    for (key, result) in &results {
        let dir = key.dir_name();
        let (status, accuracy, error) = match result {
            Ok(output) => {
                write_run(&cli.out.join(&dir), output)?;
                let last = output.curve.accuracies().last().copied().unwrap_or(f64::NAN);
                ("ok", last.to_string(), String::new())
            }
            Err(e) => ("failed", String::new(), sanitize(&e.to_string())),
        };
        writeln!(
            index,
            "{dir},{},{},{},{status},{accuracy},{error}",
            key.mode, key.strategy, key.seed
        )
        .expect("writing to a String cannot fail");
    }
    write_atomic(&cli.out.join(INDEX), index.as_bytes())?;
    manifest.complete()
}

/// One successful run listed in a suite index.
struct SuiteRun {
    dir: PathBuf,
    key: RunKey,
}

impl SuiteRun {
    fn accuracies(&self) -> Result<Vec<f64>, CliError> {
        let path = self.dir.join("curve.csv");
        let table = Table::read(&path)?;
        let col = table.column("test_accuracy")?;
        table.rows.iter().map(|r| parse_cell(&r[col], &path)).collect()
    }

    /// Selected sample indices per round.
    fn selections(&self) -> Result<BTreeMap<usize, Vec<usize>>, CliError> {
        let path = self.dir.join("selections.csv");
        let table = Table::read(&path)?;
        let (rc, sc) = (table.column("round")?, table.column("sample_index")?);
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for row in &table.rows {
            out.entry(parse_cell(&row[rc], &path)?)
                .or_default()
                .push(parse_cell(&row[sc], &path)?);
        }
        Ok(out)
    }

    /// Reference-model forgetting count per sample index.
    fn reference_forgetting(&self) -> Result<BTreeMap<usize, u32>, CliError> {
        let path = self.dir.join("reference_events.csv");
        let table = Table::read(&path)?;
        let (ic, fc) = (table.column("sample_index")?, table.column("forget_count")?);
        table
            .rows
            .iter()
            .filter(|r| !r[fc].is_empty())
            .map(|r| Ok((parse_cell(&r[ic], &path)?, parse_cell(&r[fc], &path)?)))
            .collect()
    }
}

type Group = (Mode, Strategy);

fn label((mode, strategy): Group) -> String {
    match mode {
        Mode::Standard => strategy.to_string(),
        Mode::OracleImportance => format!("oracle-{strategy}"),
    }
}

/// Successful runs of a suite, grouped by (mode, strategy) and keyed by seed.
fn read_suite(dir: &Path) -> Result<BTreeMap<Group, BTreeMap<u64, SuiteRun>>, CliError> {
    let path = dir.join(INDEX);
    if !path.exists() {
        return Err(CliError::Unanalyzed(format!("{} has no {INDEX}", dir.display())));
    }
    let table = Table::read(&path)?;
    let cols = ["run", "mode", "strategy", "seed", "status"].map(|c| table.column(c));
    let [run, mode, strategy, seed, status] = cols;
    let (run, mode, strategy, seed, status) = (run?, mode?, strategy?, seed?, status?);
    let mut groups: BTreeMap<Group, BTreeMap<u64, SuiteRun>> = BTreeMap::new();
    for row in table.rows.iter().filter(|r| r[status] == "ok") {
        let key = RunKey {
            mode: row[mode].parse().map_err(|e| CliError::Runtime(format!("{e}")))?,
            strategy: row[strategy].parse().map_err(|e| CliError::Runtime(format!("{e}")))?,
            seed: parse_cell(&row[seed], &path)?,
        };
        groups.entry((key.mode, key.strategy)).or_default().insert(
            key.seed,
            SuiteRun {
                dir: dir.join(&row[run]),
                key,
            },
        );
    }
    if groups.is_empty() {
        return Err(CliError::Unanalyzed(format!("{} has no successful runs", dir.display())));
    }
    Ok(groups)
}

fn dataset_name(dir: &Path) -> String {
    std::fs::read_to_string(dir.join(MANIFEST))
        .ok()
        .and_then(|text| serde_json::from_str::<Value>(&text).ok())
        .and_then(|v| v["dataset"]["name"].as_str().map(String::from))
        .unwrap_or_else(|| "dataset".to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

const RANDOM: Group = (Mode::Standard, Strategy::Random);

fn cmd_analyze(dir: &Path, sigma: f64) -> Result<(), CliError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CliError::Config(format!("sigma must be positive, got {sigma}")));
    }
    let groups = read_suite(dir)?;
    let random = groups
        .get(&RANDOM)
        .ok_or_else(|| CliError::MissingBaseline(format!("{} has no standard random runs", dir.display())))?;
    let mut random_curves = BTreeMap::new();
    for (&seed, run) in random {
        random_curves.insert(seed, run.accuracies()?);
    }

    let mut area = format!("strategy,{}\n", dataset_name(dir));
    for (&group, runs) in &groups {
        let mut areas = Vec::new();
        for (seed, run) in runs {
            if let Some(baseline) = random_curves.get(seed) {
                areas.push(area_under_difference(&run.accuracies()?, baseline).map_err(runtime)?);
            }
        }
        let cell = match mean_and_std(&areas) {
            Ok((mean, spread)) => format!("{mean:.4} ± {spread:.4}"),
            Err(_) => "NA".to_string(),
        };
        writeln!(area, "{},{cell}", label(group)).expect("writing to a String cannot fail");
    }
    write_atomic(&dir.join(AREA), area.as_bytes())?;

    let reference_group = [(Mode::Standard, Strategy::Gauss), RANDOM]
        .into_iter()
        .find(|g| groups.contains_key(g))
        .unwrap_or(RANDOM);
    let final_accuracies = |runs: &BTreeMap<u64, SuiteRun>| -> Result<Vec<f64>, CliError> {
        runs.values()
            .map(|r| Ok(r.accuracies()?.last().copied().unwrap_or(f64::NAN)))
            .collect()
    };
    let reference_acc = final_accuracies(&groups[&reference_group])?;
    let mut ttest = String::from("strategy,reference,t,df,p_value,significant\n");
    for (&group, runs) in groups.iter().filter(|(g, _)| **g != reference_group) {
        let fields = match welch_t_test(&final_accuracies(runs)?, &reference_acc) {
            Ok(r) => format!("{:.4},{:.4},{:.4},{}", r.t, r.df, r.p_value, r.significant_at_0p05),
            Err(_) => "NA,NA,NA,NA".to_string(),
        };
        writeln!(ttest, "{},{},{fields}", label(group), label(reference_group))
            .expect("writing to a String cannot fail");
    }
    write_atomic(&dir.join(TTEST), ttest.as_bytes())?;

    if groups.keys().any(|(m, _)| *m == Mode::OracleImportance) {
        write_atomic(&dir.join(KL), kl_table(&groups, sigma)?.as_bytes())?;
    }
    Ok(())
}

/// Reference forgetting counts of the samples selected in each round.
fn round_scores(
    run: &SuiteRun,
    reference: &BTreeMap<usize, u32>,
) -> Result<BTreeMap<usize, Vec<u32>>, CliError> {
    Ok(run
        .selections()?
        .into_iter()
        .map(|(round, picked)| {
            let scores = picked.iter().filter_map(|i| reference.get(i).copied()).collect();
            (round, scores)
        })
        .collect())
}

/// Smoothed KL between the reference-forgetting histograms of each standard
/// strategy's selections and each oracle strategy's selections, averaged
/// over matching rounds and seeds.
fn kl_table(groups: &BTreeMap<Group, BTreeMap<u64, SuiteRun>>, sigma: f64) -> Result<String, CliError> {
    let mut out = String::from("strategy,reference,sigma,kl,kl_reverse,pairs\n");
    let (oracle, standard): (Vec<_>, Vec<_>) = groups
        .iter()
        .partition(|((mode, _), _)| *mode == Mode::OracleImportance);
    for (&row_group, row_runs) in &standard {
        for (&col_group, col_runs) in &oracle {
            let (mut forward, mut reverse) = (Vec::new(), Vec::new());
            for (seed, col_run) in col_runs.iter() {
                let Some(row_run) = row_runs.get(seed) else {
                    continue;
                };
                debug_assert_eq!(row_run.key.seed, col_run.key.seed);
                let reference = col_run.reference_forgetting()?;
                let rows = round_scores(row_run, &reference)?;
                let cols = round_scores(col_run, &reference)?;
                for (round, p_scores) in &rows {
                    let Some(q_scores) = cols.get(round) else {
                        continue;
                    };
                    let (Ok(p), Ok(q)) = (importance_histogram(p_scores), importance_histogram(q_scores)) else {
                        continue;
                    };
                    forward.push(smoothed_kl(&p, &q, sigma).map_err(runtime)?);
                    reverse.push(smoothed_kl(&q, &p, sigma).map_err(runtime)?);
                }
            }
            let mean = |v: &[f64]| match v.len() {
                0 => "NA".to_string(),
                n => format!("{:.6}", v.iter().sum::<f64>() / n as f64),
            };
            writeln!(
                out,
                "{},{},{sigma},{},{},{}",
                label(row_group),
                label(col_group),
                mean(&forward),
                mean(&reverse),
                forward.len()
            )
            .expect("writing to a String cannot fail");
        }
    }
    Ok(out)
}

fn cmd_report(dir: &Path) -> Result<(), CliError> {
    let groups = read_suite(dir)?;
    if !dir.join(AREA).exists() {
        return Err(CliError::Unanalyzed(format!("{} has not been analyzed", dir.display())));
    }
    let mut report = String::from("round,strategy,mean_acc,std_acc\n");
    for (&group, runs) in &groups {
        let curves = runs
            .values()
            .map(SuiteRun::accuracies)
            .collect::<Result<Vec<_>, _>>()?;
        let (mean, spread) = curve_mean_and_spread(&curves).map_err(runtime)?;
        for (round, (m, s)) in mean.iter().zip(&spread).enumerate() {
            writeln!(report, "{round},{},{m:.6},{s:.6}", label(group)).expect("writing to a String cannot fail");
        }
    }
    write_atomic(&dir.join(REPORT), report.as_bytes())
}
