use std::path::Path;
use std::process::{Command, Output};

use hawkes::{read_events, read_params, write_events, write_params};
use hawkes_core::model::validate_sequence;
use hawkes_core::HawkesParams;

fn hawkes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hawkes")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hawkes(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_reproducible_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, params) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("p.json"));
    let args = ["simulate", "--hub", "5", "--gamma", "0.5,2", "--horizon", "300", "--seed", "3"];
    let stdout = ok(&[&args[..], &["--out", s(&a), "--out-params", s(&params)]].concat());
    ok(&[&args[..], &["--out", s(&b)]].concat());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let seq = read_events(&a).unwrap();
    assert_eq!(seq.horizon(), 300.0);
    assert_eq!(seq.num_nodes(), 5);
    assert!(stdout.contains(&format!("events: {}", seq.len())));
    let p = read_params(&params).unwrap();
    assert_eq!(p.num_kernels(), 2);
    assert!(stdout.contains(&format!("branching radius: {}", p.branching_matrix().spectral_radius)));

    let c = dir.path().join("c.csv");
    ok(&["simulate", "--hub", "5", "--gamma", "0.5,2", "--horizon", "300", "--seed", "4", "--out", s(&c)]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn simulate_target_events_sets_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.csv");
    ok(&["simulate", "--scale-free", "6", "--mu", "0.05", "--target-events", "777", "--out", s(&out)]);
    let seq = read_events(&out).unwrap();
    assert_eq!(seq.len(), 777);
    assert_eq!(seq.horizon(), *seq.times().last().unwrap());
}

#[test]
fn unstable_params_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.json");
    write_params(&params, &HawkesParams::new(vec![0.1, 0.1], vec![0.9, 0.4, 0.4, 0.9], vec![1.0]).unwrap()).unwrap();
    let out = hawkes(&["simulate", "--params", s(&params), "--horizon", "10", "--out", s(&dir.path().join("e.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("branching radius"));
}

#[test]
fn explosion_guard_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.json");
    write_params(&params, &HawkesParams::new(vec![1.0], vec![1.5], vec![1.0]).unwrap()).unwrap();
    let out = hawkes(&[
        "simulate", "--params", s(&params), "--horizon", "1000", "--allow-unstable", "--max-events", "500", "--out",
        s(&dir.path().join("e.csv")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_or_malformed_inputs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "time,mark\n0.5,0\n0.2,0\n").unwrap();
    let args = |events: &Path| {
        hawkes(&[
            "fit", "--events", s(events), "--epochs", "2", "--out-params", s(&dir.path().join("p.json")),
            "--out-report", s(&dir.path().join("r.csv")),
        ])
    };
    let out = args(&bad);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:3:"), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(args(&dir.path().join("absent.csv")).status.code(), Some(2));
    assert_eq!(hawkes(&["fit", "--bogus"]).status.code(), Some(2));
}

#[test]
fn grad_check_toy_passes_and_lists_kinks() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("e.csv");
    let params = dir.path().join("p.json");
    write_events(&events, &validate_sequence(vec![0.0, 0.4, 1.0, 1.3], vec![0, 1, 0, 1], 2.0, 2).unwrap()).unwrap();
    // alpha[0][0][1] sits exactly on the hinge.
    write_params(&params, &HawkesParams::new(vec![0.1, 0.2], vec![0.5, 0.05, 0.2, 0.3], vec![1.0]).unwrap()).unwrap();
    let stdout = ok(&["grad-check", "--events", s(&events), "--params", s(&params)]);
    assert!(stdout.contains("excluded: alpha[0][0][1] (kink)"), "{stdout}");
    let max_abs: f64 = stdout.lines().find_map(|l| l.strip_prefix("max_abs_err: ")).unwrap().parse().unwrap();
    assert!(max_abs < 1e-6);

    let out = hawkes(&["grad-check", "--events", s(&events), "--params", s(&params), "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

fn fit_report(dir: &Path, events: &Path, tag: &str, extra: &[&str]) -> (String, HawkesParams) {
    let report = dir.join(format!("{tag}.csv"));
    let params = dir.join(format!("{tag}.json"));
    let base = ["fit", "--events", s(events), "--epochs", "15", "--k", "2", "--no-timings"];
    ok(&[&base[..], extra, &["--out-params", s(&params), "--out-report", s(&report)]].concat());
    (std::fs::read_to_string(report).unwrap(), read_params(&params).unwrap())
}

#[test]
fn fit_batched_matches_unbatched() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("e.csv");
    ok(&["simulate", "--hub", "4", "--target-events", "3001", "--seed", "1", "--out", s(&events)]);
    let (full, full_params) = fit_report(dir.path(), &events, "full", &[]);
    let (batched, batched_params) = fit_report(dir.path(), &events, "batched", &["--batch-size", "2^9"]);
    let (seq, _) = fit_report(dir.path(), &events, "seq", &["--backend", "sequential"]);
    assert!(full.starts_with("epoch,nll,loglik_per_event,grad_norm,seconds\n"));
    for other in [&batched, &seq] {
        assert_eq!(full.lines().count(), 16);
        for (a, b) in full.lines().skip(1).zip(other.lines().skip(1)) {
            let a: Vec<f64> = a.split(',').map(|x| x.parse().unwrap()).collect();
            let b: Vec<f64> = b.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(a[0], b[0]);
            assert!((a[1] - b[1]).abs() <= 1e-10 * a[1].abs(), "{a:?} vs {b:?}");
            assert_eq!(a[4], 0.0);
        }
    }
    for (x, y) in full_params.to_flat().iter().zip(batched_params.to_flat()) {
        assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-6), "{x} vs {y}");
    }
}

#[test]
fn fit_uses_cache_and_positivity_modes() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("e.csv");
    ok(&["simulate", "--hub", "3", "--target-events", "500", "--seed", "2", "--out", s(&events)]);
    let (plain, _) = fit_report(dir.path(), &events, "plain", &[]);
    let (cached, _) = fit_report(dir.path(), &events, "cached", &["--cache"]);
    assert!(dir.path().join("e.csv.hwkc").exists());
    let (again, _) = fit_report(dir.path(), &events, "again", &["--cache"]);
    assert_eq!(plain, cached);
    assert_eq!(plain, again);

    let (soft, params) = fit_report(dir.path(), &events, "soft", &["--positivity", "softplus"]);
    assert_ne!(soft, plain);
    assert!(params.to_flat().iter().all(|x| *x >= 0.0));
    let out = hawkes(&["fit", "--events", s(&events), "--positivity", "clip", "--out-params", "x", "--out-report", "y"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    ok(&[
        "bench", "--grid", "N=2^8..2^9", "--m", "4", "--k", "2", "--repeats", "1", "--naive-cap", "256", "--out", s(&out),
    ]);
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "backend,N,M,K,epoch_time_seconds,peak_state_bytes,status,crosscheck");
    assert_eq!(lines.len(), 7);
    assert!(lines.iter().any(|l| l.starts_with("naive,512,4,2,,,skipped(quadratic)")));
    assert!(lines.iter().filter(|l| l.starts_with("scan,")).all(|l| l.ends_with(",ok,pass")));
}
