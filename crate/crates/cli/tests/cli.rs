use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bandsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bandsim"))
        .args(args)
        .env_remove("BANDSIM_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bandsim(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn header(text: &str) -> &str {
    text.lines().next().unwrap_or("")
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let tmp = TempDir::new().unwrap();
    let dirs: Vec<String> = ["a", "b"]
        .iter()
        .map(|d| tmp.path().join(d).display().to_string())
        .collect();
    for dir in &dirs {
        ok(&[
            "simulate",
            "--iterations",
            "4",
            "--seed",
            "11",
            "--steps",
            "--out",
            dir,
        ]);
    }
    for file in ["welfare.csv", "summary.json", "steps.csv"] {
        let a = fs::read(Path::new(&dirs[0]).join(file)).unwrap();
        let b = fs::read(Path::new(&dirs[1]).join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    let one = ok(&[
        "simulate",
        "--iterations",
        "6",
        "--seed",
        "4",
        "--parallel",
        "1",
    ]);
    let three = ok(&[
        "simulate",
        "--iterations",
        "6",
        "--seed",
        "4",
        "--parallel",
        "3",
    ]);
    assert_eq!(one, three);
}

#[test]
fn single_policy_summary() {
    let text = ok(&[
        "simulate",
        "--iterations",
        "3",
        "--seed",
        "1",
        "--policies",
        "random",
    ]);
    let summary: Value = serde_json::from_str(&text).unwrap();
    let policies = summary["policies"].as_array().unwrap();
    assert_eq!(policies.len(), 1);
    assert_eq!(policies[0]["policy"], "Random");
    assert!(summary["comparisons"].as_array().unwrap().is_empty());
}

#[test]
fn expected_utility_beats_random_at_a_fixed_location() {
    let text = ok(&[
        "simulate",
        "--preset",
        "fixed-location-fixed-price",
        "--iterations",
        "30",
        "--seed",
        "42",
    ]);
    let summary: Value = serde_json::from_str(&text).unwrap();
    let vs_random = summary["comparisons"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["baseline"] == "Random")
        .unwrap();
    assert_eq!(vs_random["policy"], "ExpectedUtility");
    assert!(vs_random["improvement"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_seed_is_drawn_and_reported() {
    let out = bandsim(&["simulate", "--iterations", "2", "--policies", "eu,random"]);
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let seed = stderr
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .expect("seed printed")
        .to_string();
    let first = String::from_utf8(out.stdout).unwrap();
    let again = ok(&[
        "simulate",
        "--iterations",
        "2",
        "--policies",
        "eu,random",
        "--seed",
        &seed,
    ]);
    assert_eq!(first, again);
}

#[test]
fn output_headers_are_stable() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().display().to_string();
    ok(&[
        "simulate",
        "--iterations",
        "2",
        "--seed",
        "1",
        "--steps",
        "--out",
        &out,
    ]);
    assert_eq!(
        header(&read(&tmp.path().join("welfare.csv"))),
        "iteration,policy,welfare"
    );
    assert_eq!(
        header(&read(&tmp.path().join("steps.csv"))),
        "iter,step,dut,policy,provider,app,price,throughput_mbps,reward"
    );
    let summary: Value = serde_json::from_str(&read(&tmp.path().join("summary.json"))).unwrap();
    let keys: Vec<&str> = summary
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    assert_eq!(keys, ["comparisons", "iterations", "policies", "seed"]);

    ok(&[
        "tune-history",
        "--windows",
        "unlimited,2",
        "--iterations",
        "4",
        "--seed",
        "1",
        "--out",
        &out,
    ]);
    assert_eq!(
        header(&read(&tmp.path().join("tuning.csv"))),
        "policy,baseline,mean_welfare,baseline_mean_welfare,improvement,t,p_adjusted"
    );
    ok(&[
        "training-sweep",
        "--s",
        "2",
        "--repetitions",
        "10",
        "--seed",
        "1",
        "--out",
        &out,
    ]);
    assert_eq!(
        header(&read(&tmp.path().join("sweep.csv"))),
        "training_steps,repetitions,success_rate,theoretical"
    );
}

#[test]
fn tuning_with_only_the_baseline_is_empty() {
    let text = ok(&[
        "tune-history",
        "--windows",
        "unlimited",
        "--iterations",
        "4",
        "--seed",
        "1",
    ]);
    assert_eq!(
        text.trim(),
        "policy,baseline,mean_welfare,baseline_mean_welfare,improvement,t,p_adjusted"
    );
}

#[test]
fn tuning_rows_match_the_emitted_welfare() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().display().to_string();
    ok(&[
        "tune-history",
        "--iterations",
        "8",
        "--seed",
        "5",
        "--out",
        &out,
    ]);
    let rows = csv_rows(&read(&tmp.path().join("tuning.csv")));
    assert_eq!(rows.len(), 4);

    let welfare = csv_rows(&read(&tmp.path().join("welfare.csv")));
    let mean = |policy: &str| {
        let v: Vec<f64> = welfare
            .iter()
            .filter(|r| &r[1] == policy)
            .map(|r| r[2].parse::<f64>().unwrap())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    for row in rows {
        assert_eq!(&row[1], "ExpectedUtility(unlimited)");
        let expected = mean(&row[0]) / mean(&row[1]) - 1.0;
        let reported: f64 = row[4].parse().unwrap();
        assert!(
            (reported - expected).abs() < 1e-12,
            "{}: {reported} vs {expected}",
            &row[0]
        );
    }
}

#[test]
fn stats_reproduces_the_summary() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().display().to_string();
    ok(&[
        "simulate",
        "--iterations",
        "8",
        "--seed",
        "2",
        "--out",
        &out,
    ]);
    let summary: Value = serde_json::from_str(&read(&tmp.path().join("summary.json"))).unwrap();
    let welfare = tmp.path().join("welfare.csv").display().to_string();
    let rows = csv_rows(&ok(&["stats", "--welfare", &welfare]));
    let comparisons = summary["comparisons"].as_array().unwrap();
    assert_eq!(rows.len(), comparisons.len());
    for (row, c) in rows.iter().zip(comparisons) {
        assert_eq!(&row[1], c["baseline"].as_str().unwrap());
        let p: f64 = row[6].parse().unwrap();
        let expected = c["p_adjusted"].as_f64().unwrap();
        assert!(
            (p - expected).abs() <= 1e-12 * expected.max(1e-300),
            "{p} vs {expected}"
        );
    }
}

#[test]
fn training_sweep_reports_theoretical_success() {
    let text = ok(&[
        "training-sweep",
        "--s",
        "2,4,6,8",
        "--repetitions",
        "50",
        "--seed",
        "3",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    let theory: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(theory, [0.5, 0.75, 0.875, 0.9375]);
}

#[test]
fn testbed_finds_the_optimal_assignment() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().display().to_string();
    ok(&[
        "testbed",
        "--repetitions",
        "20",
        "--seed",
        "1",
        "--out",
        &out,
    ]);
    assert_eq!(
        read(&tmp.path().join("assignment.csv")),
        "ue,optimal_network\n1,2\n2,1\n"
    );
    let result: Value = serde_json::from_str(&read(&tmp.path().join("testbed.json"))).unwrap();
    assert!((result["optimal"]["value"].as_f64().unwrap() - 2.5).abs() < 1e-12);
}

#[test]
fn ledger_exec_applies_offer_and_allocation() {
    let tmp = TempDir::new().unwrap();
    let payloads = tmp.path().join("tx.jsonl");
    fs::write(
        &payloads,
        [
            r#"{"action":"deposit","provider":"ue1","signer":"exchange","amount":10}"#,
            r#"{"action":"offer","provider":"net1","signer":"net1","price":5,"max_allocations":3}"#,
            r#"{"action":"allocate","provider":"net1","signer":"ue1","epoch":0,"price":5}"#,
        ]
        .join("\n"),
    )
    .unwrap();
    let log = tmp.path().join("log.jsonl");
    let text = ok(&[
        "ledger",
        "exec",
        payloads.to_str().unwrap(),
        "--log-out",
        log.to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_str(&text).unwrap();
    assert!(report["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .all(|o| o["status"] == "accepted"));
    let record = &report["records"][0];
    assert_eq!(record["provider"], "net1");
    assert_eq!(record["allocations_left"], 2);
    assert_eq!(report["balances"]["ue1"], 5);
    assert_eq!(report["balances"]["net1"], 5);

    // Replaying the log and allocating again drains one more slot.
    let more = tmp.path().join("more.jsonl");
    fs::write(
        &more,
        r#"{"action":"allocate","provider":"net1","signer":"ue1","epoch":0,"price":5}"#,
    )
    .unwrap();
    let text = ok(&[
        "ledger",
        "exec",
        more.to_str().unwrap(),
        "--log-in",
        log.to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["records"][0]["allocations_left"], 1);
    assert_eq!(report["balances"]["ue1"], 0);
}

#[test]
fn exit_codes_distinguish_config_and_runtime_errors() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"general": {"steps": 10, "bogus": 1}}"#).unwrap();
    assert_eq!(
        bandsim(&["simulate", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    fs::write(&bad, r#"{"general": {"steps": 0}}"#).unwrap();
    assert_eq!(
        bandsim(&["simulate", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bandsim(&["simulate", "--config", "/nonexistent/cfg.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bandsim(&["simulate", "--preset", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        bandsim(&["tune-history", "--windows", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        bandsim(&["testbed", "--preset", "default"]).status.code(),
        Some(2)
    );

    let file = tmp.path().join("not-a-dir");
    fs::write(&file, "").unwrap();
    let out = bandsim(&[
        "simulate",
        "--iterations",
        "1",
        "--seed",
        "1",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn presets_are_listed_and_parse_back() {
    let names = ok(&["presets"]);
    assert!(names.lines().any(|l| l == "competing"));
    let tmp = TempDir::new().unwrap();
    for name in names.lines() {
        let json = ok(&["presets", name]);
        let path = tmp.path().join(format!("{name}.json"));
        fs::write(&path, &json).unwrap();
        if name == "training" {
            ok(&[
                "testbed",
                "--config",
                path.to_str().unwrap(),
                "--repetitions",
                "2",
                "--seed",
                "1",
            ]);
        } else {
            ok(&[
                "simulate",
                "--config",
                path.to_str().unwrap(),
                "--iterations",
                "1",
                "--seed",
                "1",
            ]);
        }
    }
}
