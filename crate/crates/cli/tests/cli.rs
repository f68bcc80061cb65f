use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn polarq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polarq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = polarq(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

/// Noiseless ternary channel: output `y` reveals `x = y`.
fn noiseless_channel(dir: &TempDir) -> String {
    let p = path(dir, "noiseless.chan");
    fs::write(
        &p,
        "q=3;atoms=3\nw=0.5;p=1,0,0\nw=0.3;p=0,1,0\nw=0.2;p=0,0,1\n",
    )
    .unwrap();
    p
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn construct_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.spec"), path(&dir, "b.spec"));
    for out in [&a, &b] {
        ok(&[
            "construct",
            "--q",
            "3",
            "--n",
            "6",
            "--rate",
            "0.6",
            "--seed",
            "7",
            "--samples",
            "2000",
            "--out",
            out,
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let spec = fs::read_to_string(&a).unwrap();
    let frozen = spec
        .lines()
        .find_map(|l| l.strip_prefix("frozen="))
        .unwrap();
    assert_eq!(frozen.split(',').count(), 39);
}

#[test]
fn compress_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let chan = noiseless_channel(&dir);
    let spec = path(&dir, "code.spec");
    ok(&[
        "construct",
        "--channel",
        &chan,
        "--n",
        "3",
        "--method",
        "exact",
        "--threshold",
        "0.5",
        "--out",
        &spec,
    ]);
    let symbols = "0\n2\n1\n1\n0\n2\n2\n1\n1\n0\n0\n0\n2\n1\n2\n0\n";
    let (input, stream, output) = (
        path(&dir, "x.txt"),
        path(&dir, "x.pqc"),
        path(&dir, "out.txt"),
    );
    fs::write(&input, symbols).unwrap();
    ok(&[
        "compress", "--spec", &spec, "--in", &input, "--out", &stream,
    ]);
    let bytes = fs::read(&stream).unwrap();
    assert!(bytes.starts_with(b"POLARQC v1\nq=3;n=3;count=2\n"));
    // Side information equals the symbols on a noiseless channel.
    let side = path(&dir, "y.txt");
    fs::write(&side, symbols).unwrap();
    ok(&[
        "decompress",
        "--spec",
        &spec,
        "--in",
        &stream,
        "--side",
        &side,
        "--out",
        &output,
    ]);
    assert_eq!(fs::read_to_string(&output).unwrap(), symbols);
}

#[test]
fn full_rate_spec_never_fails() {
    let dir = TempDir::new().unwrap();
    let spec = path(&dir, "full.spec");
    ok(&[
        "construct",
        "--q",
        "3",
        "--n",
        "5",
        "--rate",
        "1",
        "--seed",
        "1",
        "--samples",
        "200",
        "--out",
        &spec,
    ]);
    let text = ok(&[
        "simulate", "--spec", &spec, "--trials", "100", "--seed", "3",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(
        rows[0],
        [
            "q",
            "n",
            "compression_rate",
            "trials",
            "failures",
            "failure_rate",
            "std_err",
            "seed",
            "spec_sha256"
        ]
    );
    assert_eq!(rows[1][4], "0");
    assert_eq!(rows[1][8].len(), 64);
}

#[test]
fn noiseless_profile_has_zero_symmetric_entropy() {
    let dir = TempDir::new().unwrap();
    let chan = noiseless_channel(&dir);
    let text = ok(&[
        "profile",
        "--channel",
        &chan,
        "--n",
        "4",
        "--method",
        "exact",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["index", "h_hat", "z_hat", "t"]);
    assert_eq!(rows.len(), 17);
    for r in &rows[1..] {
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn level_profile_tracks_mean_sqrt_t() {
    let text = ok(&[
        "profile", "--q", "3", "--n", "3", "--levels", "--method", "exact",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    let sqrt_t: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert!((sqrt_t[0] - 0.5).abs() < 1e-9);
    assert!(sqrt_t.windows(2).all(|p| p[1] < p[0]));
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let text = ok(&["contraction", "--q", "3", "--trials", "20", "--seed", "5"]);
    let rows = csv_rows(&text);
    assert_eq!(
        rows[0],
        ["q", "trials", "evaluated", "lambda_hat", "mean_ratio"]
    );
    let lambda = &rows[1][3];
    let mantissa = lambda.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{lambda}");
    assert!(lambda.parse::<f64>().unwrap() < 1.0);
}

#[test]
fn experiment_commands_are_deterministic() {
    let args = [
        "verify-inequalities",
        "--q",
        "2,5",
        "--trials",
        "50",
        "--seed",
        "11",
    ];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let rows = csv_rows(&a);
    assert_eq!(
        rows[0],
        ["bound", "q", "trials", "passed", "failed", "min_margin"]
    );
    assert!(rows[1..].iter().all(|r| r[4] == "0"), "{a}");
    let alpha = [
        "estimate-alpha",
        "--q",
        "3",
        "--trials",
        "50",
        "--refine",
        "10",
        "--seed",
        "2",
    ];
    assert_eq!(ok(&alpha), ok(&alpha));
}

fn assert_error(args: &[&str], code: i32, kind: &str) {
    let out = polarq(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}");
    let line = String::from_utf8(out.stderr).unwrap();
    let prefix = format!("error: kind={kind}; message=");
    assert!(line.starts_with(&prefix), "{line}");
    assert_eq!(line.trim_end().lines().count(), 1, "{line}");
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_error(&["construct", "--q", "3", "--n", "3"], 2, "parse");
    assert_error(&["frobnicate"], 2, "parse");
    let missing = dir.path().join("missing.spec");
    let missing = missing.to_str().unwrap();
    assert_error(&["compress", "--spec", missing, "--in", missing], 3, "io");
    assert_error(
        &[
            "construct",
            "--q",
            "3",
            "--n",
            "3",
            "--rate",
            "1.5",
            "--seed",
            "1",
        ],
        4,
        "model",
    );
    assert_error(&["estimate-alpha", "--q", "4", "--seed", "1"], 4, "model");
    let bad = path(&dir, "bad.spec");
    fs::write(&bad, "not a spec\n").unwrap();
    assert_error(
        &["simulate", "--spec", &bad, "--trials", "1", "--seed", "1"],
        2,
        "parse",
    );
    assert!(Path::new(&bad).exists());
}

#[test]
fn auto_method_matches_exact_under_budget() {
    let base = [
        "construct",
        "--q",
        "3",
        "--n",
        "4",
        "--rate",
        "0.5",
        "--seed",
        "1",
    ];
    let exact = ok(&[&base[..], &["--method", "exact"]].concat());
    assert_eq!(ok(&[&base[..], &["--method", "auto"]].concat()), exact);
    // A tiny budget forces the Monte Carlo fallback.
    let fallback = ok(&[&base[..], &["--method", "auto", "--atom-budget", "4"]].concat());
    assert!(fallback.contains("digest=mc;"), "{fallback}");
}
