use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polysample"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_lines(o: &Output) -> Vec<serde_json::Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

const SAMPLE_CSV: &[&str] = &[
    "sample",
    "--n",
    "4",
    "--d",
    "3",
    "--equilateral",
    "--count",
    "10",
    "--seed",
    "1",
    "--format",
    "csv",
];

#[test]
fn sample_csv_shape() {
    let o = run(SAMPLE_CSV);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("w_1,w_2,w_3,y_1_1,"));
    assert!(lines[0].ends_with(",y_4_3,weight"));
    for line in &lines[1..] {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 3 + 12 + 1);
        // edges close up and have unit length
        for k in 0..3 {
            let s: f64 = (0..4).map(|i| fields[3 + 3 * i + k]).sum();
            assert!(s.abs() < 1e-10);
        }
        for i in 0..4 {
            let e = &fields[3 + 3 * i..6 + 3 * i];
            assert!((e.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(fields[15] > 0.0);
    }
}

#[test]
fn sample_output_is_byte_identical_across_runs_and_threads() {
    let a = run(SAMPLE_CSV);
    let b = run(SAMPLE_CSV);
    assert_eq!(a.stdout, b.stdout);
    let many = [
        "sample",
        "--n",
        "5",
        "--d",
        "3",
        "--count",
        "3000",
        "--chunk-size",
        "100",
        "--format",
        "jsonl",
    ];
    let one = run(&[&many[..], &["--threads", "1"]].concat());
    let four = run(&[&many[..], &["--threads", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(stdout(&one).lines().count(), 3000);
}

#[test]
fn jsonl_mirrors_csv() {
    let csv = run(SAMPLE_CSV);
    let mut args = SAMPLE_CSV.to_vec();
    *args.last_mut().unwrap() = "jsonl";
    let jsonl = run(&args);
    let rows: Vec<Vec<f64>> = stdout(&csv)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    for (row, rec) in rows.iter().zip(json_lines(&jsonl)) {
        let mut flat: Vec<f64> = rec["w"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        for e in rec["y"].as_array().unwrap() {
            flat.extend(e.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()));
        }
        flat.push(rec["weight"].as_f64().unwrap());
        // both formats print round-trip representations
        assert_eq!(&flat, row);
    }
}

#[test]
fn unclosable_edgelengths_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.txt");
    fs::write(&path, "8 16 3 4\n").unwrap();
    let o = run(&["sample", "--edgelengths", path.to_str().unwrap(), "--count", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(
        err.contains("r[2] = 16") && err.contains("half the total length"),
        "{err}"
    );
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_flags_are_usage_errors() {
    for args in [
        &["sample", "--d", "3", "--count", "5"][..],
        &["sample", "--n", "4", "--d", "1", "--count", "5"],
        &["sample", "--n", "4", "--count", "0"],
        &["sample", "--n", "4", "--count", "5", "--rho", "/nonexistent"],
        &["estimate", "--n", "4", "--functional", "chord:1:9"],
        &["estimate", "--n", "4", "--functional", "radius"],
        &[
            "histogram",
            "--n",
            "4",
            "--functional",
            "gyradius",
            "--count",
            "10",
            "--lo",
            "2",
            "--hi",
            "1",
        ],
        &[
            "histogram",
            "--n",
            "4",
            "--functional",
            "gyradius",
            "--count",
            "10",
            "--lo",
            "0",
            "--hi",
            "1",
            "--reference",
            "pentagon",
        ],
        &["verify-jacobian", "--n", "7", "--d", "2"],
        &["verify-jacobian", "--n", "4", "--d", "4"],
        &["frobnicate"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn custom_edgelengths_and_rho_files() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.txt");
    let rho = dir.path().join("rho.txt");
    fs::write(&r, "1 0.5\n1.5 1 1 1\n").unwrap();
    fs::write(&rho, "1 1 1 1 1 1").unwrap();
    let o = run(&[
        "sample",
        "--edgelengths",
        r.to_str().unwrap(),
        "--rho",
        rho.to_str().unwrap(),
        "--count",
        "4",
        "--format",
        "jsonl",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = json_lines(&o);
    assert_eq!(recs.len(), 4);
    assert_eq!(recs[0]["y"].as_array().unwrap().len(), 6);

    let mismatch = run(&[
        "sample",
        "--edgelengths",
        r.to_str().unwrap(),
        "--n",
        "5",
        "--count",
        "1",
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn estimate_reports_json_and_reproduces() {
    let args = [
        "estimate",
        "--n",
        "4",
        "--d",
        "3",
        "--equilateral",
        "--quotient",
        "--functional",
        "chord:1:3",
        "--rel-radius",
        "0.01",
        "--seed",
        "4",
    ];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0));
    let v = &json_lines(&o)[0];
    let mean = v["mean"].as_f64().unwrap();
    let radius = v["ci_radius"].as_f64().unwrap();
    assert!(radius <= 0.01 * mean);
    assert!((mean - 1.0).abs() <= radius * 4.0 / 2.576);
    assert!(v["ess"].as_f64().unwrap() <= v["n_samples"].as_f64().unwrap());
    assert!(v["wall_seconds"].is_null());
    assert_eq!(run(&args).stdout, o.stdout);

    let verbose = run(&[&args[..], &["--verbose"]].concat());
    assert!(json_lines(&verbose)[0]["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn estimate_budget_exit_code() {
    let o = run(&[
        "estimate",
        "--n",
        "8",
        "--functional",
        "gyradius",
        "--rel-radius",
        "1e-6",
        "--max-samples",
        "500",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json_lines(&o)[0]["n_samples"].as_u64(), Some(500));
}

#[test]
fn histogram_columns_and_mass() {
    let o = run(&[
        "histogram",
        "--n",
        "6",
        "--d",
        "3",
        "--quotient",
        "--functional",
        "chord:1:4",
        "--count",
        "20000",
        "--bins",
        "30",
        "--lo",
        "0",
        "--hi",
        "3",
        "--reference",
        "hexagon-eq",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("bin_center,density,standard_error,reference_density")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 30);
    let mass: f64 = rows.iter().map(|r| r[1] * 0.1).sum();
    assert!((mass - 1.0).abs() < 1e-9);
    assert!((rows[0][0] - 0.05).abs() < 1e-12);
    assert!((rows[0][3] - 0.0025).abs() < 1e-12);

    let plain = run(&[
        "histogram",
        "--n",
        "5",
        "--functional",
        "gyradius",
        "--count",
        "100",
        "--lo",
        "0",
        "--hi",
        "0.5",
        "--bins",
        "4",
    ]);
    assert_eq!(stdout(&plain).lines().next(), Some("bin_center,density,standard_error"));
    assert_eq!(stdout(&plain).lines().count(), 5);
}

#[test]
fn verify_jacobian_passes() {
    let o = run(&["verify-jacobian", "--n", "4", "--d", "2", "--cases", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = json_lines(&o);
    assert_eq!(recs.len(), 21);
    let summary = &recs[20];
    assert_eq!(summary["cases"].as_u64(), Some(20));
    assert_eq!(summary["failures"].as_u64(), Some(0));
    let max = summary["max_relative_error"].as_f64().unwrap();
    assert!(max <= 1e-5 && summary["median_relative_error"].as_f64().unwrap() <= max);
}

#[test]
fn help_documents_exit_codes() {
    let text = stdout(&run(&["--help"]));
    for code in [
        "0  success",
        "2  invalid",
        "3  the sampler",
        "4  the sample budget",
        "5  Jacobian",
    ] {
        assert!(text.contains(code), "{code}");
    }
    assert!(stdout(&run(&["estimate", "--help"])).contains("Exit codes"));
}
