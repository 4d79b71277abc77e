//! CSV and JSON writers with fixed column order.

use std::io::Write;

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::scenario::{Comparison, RunResult, Summary};
use super::testbed::SweepRow;

pub const WELFARE_HEADER: [&str; 3] = ["iteration", "policy", "welfare"];
pub const STEPS_HEADER: [&str; 9] = [
    "iter",
    "step",
    "dut",
    "policy",
    "provider",
    "app",
    "price",
    "throughput_mbps",
    "reward",
];
pub const COMPARISON_HEADER: [&str; 7] = [
    "policy",
    "baseline",
    "mean_welfare",
    "baseline_mean_welfare",
    "improvement",
    "t",
    "p_adjusted",
];
pub const SWEEP_HEADER: [&str; 4] = [
    "training_steps",
    "repetitions",
    "success_rate",
    "theoretical",
];

#[derive(Serialize)]
struct WelfareRow<'a> {
    iteration: usize,
    policy: &'a str,
    welfare: f64,
}

#[derive(Deserialize)]
struct OwnedWelfareRow {
    iteration: usize,
    policy: String,
    welfare: f64,
}

#[derive(Serialize)]
struct StepRow<'a> {
    iter: usize,
    step: usize,
    dut: usize,
    policy: &'a str,
    provider: usize,
    app: usize,
    price: f64,
    throughput_mbps: f64,
    reward: f64,
}

/// One row per (iteration, policy). Iterations are zero-based.
pub fn write_welfare_csv<W: Write>(run: &RunResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for it in 0..run.iterations {
        for (p, name) in run.policies.iter().enumerate() {
            w.serialize(WelfareRow {
                iteration: it,
                policy: name,
                welfare: run.welfare[p][it],
            })?;
        }
    }
    if run.iterations == 0 {
        w.write_record(WELFARE_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per DUT decision. DUT, provider and app are one-based.
pub fn write_steps_csv<W: Write>(run: &RunResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if run.records.is_empty() {
        w.write_record(STEPS_HEADER)?;
    }
    for r in &run.records {
        w.serialize(StepRow {
            iter: r.iter,
            step: r.step,
            dut: r.dut + 1,
            policy: &r.policy,
            provider: r.provider.0 + 1,
            app: r.app.0 + 1,
            price: r.price,
            throughput_mbps: r.throughput_mbps,
            reward: r.reward,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a welfare CSV back into a step-less [`RunResult`]. Policies keep
/// their first-appearance order; every policy must cover the same
/// iterations `0..n`.
pub fn read_welfare_csv<R: Read>(input: R) -> Result<RunResult> {
    let mut order: Vec<String> = Vec::new();
    let mut series: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for row in csv::Reader::from_reader(input).deserialize::<OwnedWelfareRow>() {
        let row = row?;
        if !series.contains_key(&row.policy) {
            order.push(row.policy.clone());
        }
        let cells = series.entry(row.policy.clone()).or_default();
        if cells.insert(row.iteration, row.welfare).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate welfare row for {} iteration {}",
                row.policy, row.iteration
            )));
        }
    }
    let iterations = series.values().next().map_or(0, BTreeMap::len);
    let mut welfare = Vec::with_capacity(order.len());
    for name in &order {
        let cells = &series[name];
        if cells.len() != iterations || cells.keys().enumerate().any(|(i, k)| i != *k) {
            return Err(Error::InvalidInput(format!(
                "policy {name} does not cover iterations 0..{iterations}"
            )));
        }
        welfare.push(cells.values().copied().collect::<Vec<_>>());
    }
    Ok(RunResult {
        seed: 0,
        iterations,
        discounted_return: vec![Vec::new(); order.len()],
        selections: vec![Vec::new(); order.len()],
        policies: order,
        welfare,
        records: Vec::new(),
    })
}

pub fn write_comparisons_csv<W: Write>(rows: &[Comparison], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(COMPARISON_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(SWEEP_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_summary_json<W: Write>(summary: &Summary, out: W) -> Result<()> {
    write_json(summary, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::StepRecord;
    use crate::types::{AppId, ProviderId};

    fn tiny() -> RunResult {
        RunResult {
            seed: 1,
            iterations: 2,
            policies: vec!["A".into(), "B".into()],
            welfare: vec![vec![1.0, 2.0], vec![3.0, 4.5]],
            discounted_return: vec![vec![0.0; 2]; 2],
            selections: vec![vec![0, 0]; 2],
            records: vec![StepRecord {
                iter: 0,
                step: 0,
                dut: 0,
                policy: "A".into(),
                provider: ProviderId(1),
                app: AppId(0),
                price: 9.0,
                throughput_mbps: 60.0,
                reward: 1.25,
            }],
        }
    }

    #[test]
    fn welfare_csv_layout() {
        let mut buf = Vec::new();
        write_welfare_csv(&tiny(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "iteration,policy,welfare\n0,A,1.0\n0,B,3.0\n1,A,2.0\n1,B,4.5\n"
        );
    }

    #[test]
    fn steps_csv_layout() {
        let mut buf = Vec::new();
        write_steps_csv(&tiny(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), STEPS_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "0,0,1,A,2,1,9.0,60.0,1.25");
    }

    #[test]
    fn welfare_csv_reads_back() {
        let mut buf = Vec::new();
        write_welfare_csv(&tiny(), &mut buf).unwrap();
        let back = read_welfare_csv(buf.as_slice()).unwrap();
        assert_eq!(back.policies, vec!["A", "B"]);
        assert_eq!(back.welfare, tiny().welfare);
    }

    #[test]
    fn ragged_welfare_csv_is_rejected() {
        let text = "iteration,policy,welfare\n0,A,1\n0,B,2\n1,A,3\n";
        assert!(read_welfare_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn comparison_csv_leaves_missing_statistics_blank() {
        let row = Comparison {
            policy: "A".into(),
            baseline: "B".into(),
            mean_welfare: 2.0,
            baseline_mean_welfare: 0.0,
            improvement: None,
            t: None,
            p_adjusted: None,
        };
        let mut buf = Vec::new();
        write_comparisons_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            format!("{}\nA,B,2.0,0.0,,,\n", COMPARISON_HEADER.join(","))
        );
    }

    #[test]
    fn empty_outputs_still_have_headers() {
        let mut run = tiny();
        run.records.clear();
        let mut buf = Vec::new();
        write_steps_csv(&run, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            STEPS_HEADER.join(",")
        );
        let mut buf = Vec::new();
        write_sweep_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            SWEEP_HEADER.join(",")
        );
        let mut buf = Vec::new();
        write_comparisons_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            COMPARISON_HEADER.join(",")
        );
    }
}
