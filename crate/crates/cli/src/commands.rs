use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use bandsim::config::PRESETS;
use bandsim::harness::output::{
    read_welfare_csv, write_comparisons_csv, write_json, write_steps_csv, write_summary_json,
    write_sweep_csv, write_welfare_csv,
};
use bandsim::harness::{
    self as harness, compare, run_scenario, testbed_mode, tune_history, RunOptions, Summary,
    TestbedConfig,
};
use bandsim::market::{Ledger, Outcome, TxPayload};
use bandsim::policies::{EstimatorMode, PolicySpec};
use bandsim::{Error, RunConfig};
use log::info;
use serde::Serialize;

use crate::Common;

/// Maps onto the process exit code: 2 for bad input, 3 for everything else.
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidInput(_) => Failure::Config(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn load_config(common: &Common, fallback_preset: &str) -> Result<RunConfig, Failure> {
    let cfg = match (&common.config, &common.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(config_err)?;
            RunConfig::from_json(&text)
                .with_context(|| format!("in {}", path.display()))
                .map_err(config_err)?
        }
        (None, preset) => {
            let name = preset.as_deref().unwrap_or(fallback_preset);
            RunConfig::preset(name).ok_or_else(|| {
                config_err(anyhow!(
                    "unknown preset {name:?}; available: {}",
                    PRESETS.join(", ")
                ))
            })?
        }
    };
    Ok(cfg)
}

/// `--seed`, then the config's seed, then fresh entropy (reported on stderr so
/// the run can be repeated).
fn resolve_seed(common: &Common, cfg: &RunConfig) -> u64 {
    common.seed.or(cfg.general.seed).unwrap_or_else(|| {
        let seed = rand::random();
        eprintln!("seed: {seed}");
        seed
    })
}

fn out_dir(common: &Common) -> Result<Option<&Path>, Failure> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))
                .map_err(Failure::Runtime)?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

fn write_file<F>(dir: &Path, name: &str, write: F) -> CmdResult
where
    F: FnOnce(&mut BufWriter<File>) -> bandsim::error::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(Failure::Runtime)?;
    let mut w = BufWriter::new(file);
    write(&mut w)?;
    w.flush()?;
    info!("wrote {}", path.display());
    Ok(())
}

fn parse_policies(names: &[String]) -> Result<Option<Vec<PolicySpec>>, Failure> {
    if names.is_empty() {
        return Ok(None);
    }
    names
        .iter()
        .map(|n| {
            PolicySpec::from_name(n).ok_or_else(|| config_err(anyhow!("unknown policy {n:?}")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn run_options(
    common: &Common,
    seed: u64,
    iterations: Option<usize>,
    keep_steps: bool,
) -> RunOptions {
    RunOptions {
        iterations,
        seed,
        threads: common.parallel,
        keep_steps,
    }
}

pub fn simulate(
    common: &Common,
    policies: &[String],
    iterations: Option<usize>,
    steps: bool,
) -> CmdResult {
    let mut cfg = load_config(common, "default")?;
    if let Some(specs) = parse_policies(policies)? {
        cfg.policies = specs;
    }
    cfg.validate().map_err(config_err)?;
    let seed = resolve_seed(common, &cfg);
    let dir = out_dir(common)?;
    let opts = run_options(common, seed, iterations, steps && dir.is_some());
    let run = run_scenario(&cfg, &cfg.policies, &opts)?;
    let summary = Summary::from_run(&run)?;
    match dir {
        Some(dir) => {
            write_file(dir, "welfare.csv", |w| write_welfare_csv(&run, w))?;
            write_file(dir, "summary.json", |w| write_summary_json(&summary, w))?;
            if steps {
                write_file(dir, "steps.csv", |w| write_steps_csv(&run, w))?;
            }
        }
        None => write_summary_json(&summary, io::stdout().lock())?,
    }
    Ok(())
}

fn parse_window(token: &str) -> Result<EstimatorMode, Failure> {
    let token = token.trim();
    if token.eq_ignore_ascii_case("unlimited") {
        return Ok(EstimatorMode::FullMean);
    }
    let w: usize = token.parse().map_err(|_| {
        config_err(anyhow!(
            "window {token:?} is neither `unlimited` nor a positive integer"
        ))
    })?;
    let mode = EstimatorMode::Window { w };
    mode.validate().map_err(Failure::from)?;
    Ok(mode)
}

pub fn tune(common: &Common, windows: &[String], iterations: Option<usize>) -> CmdResult {
    let cfg = load_config(common, "default")?;
    cfg.validate().map_err(config_err)?;
    let modes = windows
        .iter()
        .map(|w| parse_window(w))
        .collect::<Result<Vec<_>, _>>()?;
    let seed = resolve_seed(common, &cfg);
    let tuning = tune_history(&cfg, &modes, &run_options(common, seed, iterations, false))?;
    match out_dir(common)? {
        Some(dir) => {
            write_file(dir, "welfare.csv", |w| write_welfare_csv(&tuning.run, w))?;
            write_file(dir, "tuning.csv", |w| {
                write_comparisons_csv(&tuning.rows, w)
            })?;
        }
        None => write_comparisons_csv(&tuning.rows, io::stdout().lock())?,
    }
    Ok(())
}

fn testbed_config(cfg: &RunConfig) -> Result<&TestbedConfig, Failure> {
    cfg.testbed
        .as_ref()
        .ok_or_else(|| config_err(anyhow!("configuration has no `testbed` section")))
}

struct AssignmentRow {
    ue: usize,
    optimal_network: usize,
}

pub fn testbed(common: &Common, repetitions: Option<usize>) -> CmdResult {
    let cfg = load_config(common, "training")?;
    let mut tb = testbed_config(&cfg)?.clone();
    if let Some(r) = repetitions {
        tb.repetitions = r;
    }
    tb.validate().map_err(config_err)?;
    let seed = resolve_seed(common, &cfg);
    let result = testbed_mode(&tb, seed)?;
    let rows: Vec<AssignmentRow> = tb
        .dynamic_ues()
        .into_iter()
        .zip(&result.optimal.assignment)
        .map(|(ue, net)| AssignmentRow {
            ue: ue + 1,
            optimal_network: net.0 + 1,
        })
        .collect();
    let write_rows = |w: &mut dyn Write| -> bandsim::error::Result<()> {
        let mut text = String::from("ue,optimal_network\n");
        for r in &rows {
            text.push_str(&format!("{},{}\n", r.ue, r.optimal_network));
        }
        w.write_all(text.as_bytes())?;
        Ok(())
    };
    match out_dir(common)? {
        Some(dir) => {
            write_file(dir, "testbed.json", |w| write_json(&result, w))?;
            write_file(dir, "assignment.csv", |w| write_rows(w))?;
        }
        None => write_json(&result, io::stdout().lock())?,
    }
    Ok(())
}

pub fn sweep(common: &Common, s_values: &[usize], repetitions: usize) -> CmdResult {
    let cfg = load_config(common, "training")?;
    let tb = testbed_config(&cfg)?;
    tb.validate().map_err(config_err)?;
    let seed = resolve_seed(common, &cfg);
    let rows = harness::training_sweep(tb, s_values, repetitions, seed)?;
    match out_dir(common)? {
        Some(dir) => write_file(dir, "sweep.csv", |w| write_sweep_csv(&rows, w))?,
        None => write_sweep_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn read_payloads(path: &Path) -> Result<Vec<TxPayload>, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config_err)?;
    let parsed = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)
    } else {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    };
    parsed
        .with_context(|| format!("parsing payloads in {}", path.display()))
        .map_err(config_err)
}

#[derive(Serialize)]
struct LedgerReport<'a> {
    outcomes: Vec<Outcome>,
    records: Vec<bandsim::market::OfferRecord>,
    balances: &'a std::collections::BTreeMap<String, bandsim::market::Tokens>,
}

pub fn ledger_exec(
    payloads: &Path,
    trusted: &[String],
    log_in: Option<&Path>,
    log_out: Option<&Path>,
) -> CmdResult {
    let txs = read_payloads(payloads)?;
    let mut ledger = match log_in {
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("opening {}", path.display()))
                .map_err(config_err)?;
            let entries = Ledger::read_log(BufReader::new(file))?;
            Ledger::replay(trusted, &entries)?
        }
        None => Ledger::new(trusted),
    };
    let outcomes = txs
        .into_iter()
        .map(|tx| ledger.execute(tx))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(path) = log_out {
        let file = File::create(path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(Failure::Runtime)?;
        let mut w = BufWriter::new(file);
        ledger.write_log(&mut w)?;
        w.flush()?;
    }
    let report = LedgerReport {
        outcomes,
        records: ledger.state().records(),
        balances: ledger.state().balances(),
    };
    write_json(&report, io::stdout().lock())?;
    Ok(())
}

pub fn stats(welfare: &Path, policy: Option<&str>, baselines: &[String]) -> CmdResult {
    let file = File::open(welfare)
        .with_context(|| format!("opening {}", welfare.display()))
        .map_err(config_err)?;
    let run = read_welfare_csv(BufReader::new(file))?;
    let find = |name: &str| {
        run.policy_index(name)
            .ok_or_else(|| config_err(anyhow!("policy {name:?} not in {}", welfare.display())))
    };
    let reference = match policy {
        Some(name) => find(name)?,
        None => run.policy_index("ExpectedUtility").unwrap_or(0),
    };
    let others: Vec<usize> = if baselines.is_empty() {
        (0..run.policies.len())
            .filter(|p| *p != reference)
            .collect()
    } else {
        baselines
            .iter()
            .map(|b| find(b))
            .collect::<Result<_, _>>()?
    };
    let rows = others
        .iter()
        .map(|&b| compare(&run, reference, b, others.len()))
        .collect::<Result<Vec<_>, _>>()?;
    write_comparisons_csv(&rows, io::stdout().lock())?;
    Ok(())
}

pub fn presets(name: Option<&str>) -> CmdResult {
    let mut out = io::stdout().lock();
    match name {
        None => {
            for p in PRESETS {
                writeln!(out, "{p}")?;
            }
        }
        Some(name) => {
            let cfg = RunConfig::preset(name).ok_or_else(|| {
                config_err(anyhow!(
                    "unknown preset {name:?}; available: {}",
                    PRESETS.join(", ")
                ))
            })?;
            writeln!(out, "{}", cfg.to_json())?;
        }
    }
    Ok(())
}
