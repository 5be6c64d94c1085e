//! The `bfactory` front end: exit codes, output stability and seed precedence.

use std::path::Path;
use std::process::Command;

use bernoulli_factory::cli::run_cli;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("bfactory").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn bin(args: &[&str], env_seed: Option<&str>) -> (i32, Vec<u8>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bfactory"));
    cmd.args(args).env_remove("BFACTORY_SEED");
    if let Some(s) = env_seed {
        cmd.env("BFACTORY_SEED", s);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), out.stdout)
}

#[test]
fn analyze_prints_closed_form_values() {
    let (code, out, _) = run(&["analyze", "sqrt", "--p", "0.25"]);
    assert_eq!(code, 0);
    let mut rows = out.lines();
    assert_eq!(
        rows.next().unwrap(),
        "p,f,f_error,f_prime,f_prime_error,expected_n_rand,expected_n_nonrand,information_bound"
    );
    let fields: Vec<f64> = rows.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(fields[0], 0.25);
    for (got, want) in [(fields[1], 0.5), (fields[3], 1.0), (fields[5], 2.0), (fields[6], 70.0 / 3.0), (fields[7], 0.75)] {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    let (code, out, _) = run(&["analyze", "entropy", "--p", "geom:0.5,0.125,3", "--format", "json"]);
    assert_eq!(code, 0);
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["analyze", "power:a=1.5"],
        vec!["analyze", "sqrt", "--bogus"],
        vec!["simulate", "pc(sqrt,"],
        vec!["simulate", "sqrt", "--p", "1.5"],
        vec!["simulate", "sqrt", "--algo", "fast"],
        vec!["simulate"],
        vec!["nonsense"],
        vec!["analyze", "complement(sqrt)"],
    ] {
        let (code, _, err) = run(&args);
        assert_eq!(code, 2, "{args:?}");
        assert!(!err.is_empty());
    }
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("selftest"));
}

#[test]
fn reports_are_byte_identical_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let args = |file: &str, threads: &str, format: &str| {
        vec![
            "simulate".to_string(),
            "prod(sqrt,flip_input(entropy))".into(),
            "--p".into(),
            "0.2,0.7".into(),
            "--reps".into(),
            "20000".into(),
            "--seed".into(),
            "17".into(),
            "--threads".into(),
            threads.into(),
            "--format".into(),
            format.into(),
            "--out".into(),
            path(file),
        ]
    };
    for format in ["csv", "json"] {
        for (file, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
            let argv: Vec<String> = args(&format!("{file}.{format}"), threads, format);
            let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
            assert_eq!(run(&refs).0, 0);
        }
        let read = |f: &str| std::fs::read(Path::new(&path(&format!("{f}.{format}")))).unwrap();
        assert_eq!(read("a"), read("b"));
        assert_eq!(read("a"), read("c"));
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(path("a.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["expression"], "prod(sqrt,flip_input(entropy))");
    assert_eq!(report["points"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_exit_code_follows_the_gates() {
    let (code, out, err) = run(&["verify", "sqrt", "--p", "0.25", "--reps", "50000", "--seed", "3"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("schema_version,"));
    assert!(err.lines().all(|l| l.starts_with("PASS")), "{err}");
    assert!(err.contains("joint_law"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    // A gate width of a thousandth of a standard error cannot be met.
    std::fs::write(&cfg, "expression = \"sqrt\"\np = [0.5]\nreps = 20000\ngate_sigma = 0.001\n").unwrap();
    let (code, _, err) = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("FAIL"));
    let (code, _, _) = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);

    std::fs::write(&cfg, "expression = \"sqrt\"\nrepz = 5\n").unwrap();
    assert_eq!(run(&["verify", "--config", cfg.to_str().unwrap()]).0, 2);
}

#[test]
fn nonrandomized_flag_and_algo_agree() {
    let a = run(&["simulate", "sqrt", "--p", "0.5", "--reps", "5000", "--seed", "1", "--nonrandomized"]);
    let b = run(&["simulate", "sqrt", "--p", "0.5", "--reps", "5000", "--seed", "1", "--algo", "nonrand"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    assert!(a.1.contains(",nonrand,"));
    let fields: Vec<&str> = a.1.lines().nth(1).unwrap().split(',').collect();
    let header: Vec<&str> = a.1.lines().next().unwrap().split(',').collect();
    let col = |name: &str| fields[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("mean_uniforms").parse::<f64>().unwrap(), 0.0);
}

#[test]
fn seed_precedence() {
    let base = ["simulate", "log2_sqrt", "--p", "0.3", "--reps", "4096"];
    fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
        base.iter().chain(extra).copied().collect()
    }

    let flag = bin(&with(&base, &["--seed", "5"]), None);
    let env = bin(&base, Some("5"));
    let both = bin(&with(&base, &["--seed", "5"]), Some("6"));
    let zero = bin(&base, None);
    let explicit_zero = bin(&with(&base, &["--seed", "0"]), None);
    assert_eq!(flag.0, 0);
    assert_eq!(flag.1, env.1);
    assert_eq!(flag.1, both.1);
    assert_eq!(zero.1, explicit_zero.1);
    assert_ne!(flag.1, zero.1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("seeded.toml");
    std::fs::write(&cfg, "expression = \"log2_sqrt\"\np = [0.3]\nreps = 4096\nseed = 5\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(bin(&["simulate", "--config", cfg], Some("6")).1, flag.1);
    assert_eq!(bin(&["simulate", "--config", cfg, "--seed", "0"], Some("6")).1, zero.1);
    assert_eq!(bin(&base, Some("banana")).0, 2);
}

#[test]
fn sweep_and_selftest() {
    let (code, out, err) = run(&["sweep", "sqrt", "power:a=7/10", "--p", "geom:0.25,0.015625,3", "--reps", "20000"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 1 + 2 * 3);
    assert_eq!(err.lines().filter(|l| l.starts_with("slope")).count(), 2);

    let (code, out, _) = run(&["selftest", "--reps", "10000", "--seed", "1"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().last().unwrap().ends_with("0 failed"));
}
