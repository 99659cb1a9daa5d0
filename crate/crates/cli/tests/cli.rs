//! End-to-end subcommand tests through the library entry point, checking
//! artifacts on disk and exit codes.

use std::fs;
use std::path::PathBuf;

use relay_ldpc_cli::run;

fn bundled_profile() -> String {
    concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/profiles/two_source.profile"
    )
    .to_string()
}

fn run_args(args: &[&str]) -> u8 {
    let mut argv = vec!["relay-ldpc"];
    argv.extend_from_slice(args);
    run(argv)
}

#[test]
fn verify_accepts_the_bundled_profile() {
    assert_eq!(run_args(&["verify", &bundled_profile()]), 0);
}

#[test]
fn verify_distinguishes_syntax_from_semantics() {
    let dir = tempfile::tempdir().unwrap();
    let garbled = dir.path().join("garbled.profile");
    fs::write(&garbled, "version 1\nsources 2\n[source 1]\nvar one 2 0\n").unwrap();
    assert_eq!(run_args(&["verify", garbled.to_str().unwrap()]), 2);

    // Structurally fine, but a declared rate is off by 0.1.
    let text = fs::read_to_string(bundled_profile()).unwrap();
    let lied = dir.path().join("lied.profile");
    fs::write(&lied, text.replace("r_plus 0.7", "r_plus 0.8")).unwrap();
    assert_eq!(run_args(&["verify", lied.to_str().unwrap()]), 1);
}

#[test]
fn missing_files_fail_without_panicking() {
    assert_eq!(run_args(&["verify", "/no/such/file.profile"]), 1);
    assert_eq!(run_args(&["exit", "/no/such/file.profile", "--sigmas", "1"]), 1);
}

#[test]
fn usage_errors_exit_with_code_2() {
    assert_eq!(run_args(&["no-such-subcommand"]), 2);
    assert_eq!(run_args(&["exit", &bundled_profile()]), 2); // --sigmas required
}

#[test]
fn exit_trajectories_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let code = run_args(&[
            "exit",
            &bundled_profile(),
            "--sigmas",
            "0.9,1.1",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let a = fs::read(&out1).unwrap();
    assert_eq!(a, fs::read(&out2).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("iteration,source,i_ev1,i_ev2,i_ec1,i_ec2,i_app"));
    assert!(text.contains("# converged=true"));
}

#[test]
fn threshold_reports_the_declared_design_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("threshold.csv");
    let code = run_args(&[
        "threshold",
        &bundled_profile(),
        "--weights",
        "0.970555,1.1899",
        "--tol",
        "1e-2",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(2).unwrap();
    let t_star: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!((t_star - 1.0).abs() < 0.05, "t_star {t_star}");
}

#[test]
fn capacity_sweeps_emit_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    fs::write(&params, r#"{"p": 1.0, "p1": 0.5, "n1": 1.0, "n2": 0.55}"#).unwrap();
    let out = dir.path().join("sweep.csv");
    let code = run_args(&[
        "capacity",
        params.to_str().unwrap(),
        "--sweep",
        "8",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 10); // header + 9 rows
    assert!(text.contains("# optimum: alpha="));

    // A fixed alpha in the file short-circuits the optimization.
    fs::write(
        &params,
        r#"{"p": 1.0, "p1": 0.5, "n1": 1.0, "n2": 0.55, "alpha": 0.5}"#,
    )
    .unwrap();
    let code = run_args(&["capacity", params.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# fixed power split"));
    assert!(text.lines().last().unwrap().starts_with("5.00000000e-1,"));

    // Bad JSON is a syntax failure.
    fs::write(&params, "{p: oops").unwrap();
    assert_eq!(run_args(&["capacity", params.to_str().unwrap()]), 2);
}

#[test]
fn simulate_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let code = run_args(&[
            "simulate",
            &bundled_profile(),
            "--n",
            "2000",
            "--sigmas",
            "0.5,0.6",
            "--trials",
            "2",
            "--seed",
            "9",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let a = fs::read(&out1).unwrap();
    assert_eq!(a, fs::read(&out2).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("seed=9"));
    assert!(text.contains("source,bits,bit_errors,ber,ci_lo,ci_hi,frame_errors,fer"));
    let all = text.lines().last().unwrap();
    assert!(all.starts_with("all,8000,"));
}

#[test]
fn separate_emits_a_parseable_single_type_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("separate.profile");
    let code = run_args(&[
        "separate",
        &bundled_profile(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(run_args(&["verify", out.to_str().unwrap()]), 0);
    // Each shared (3,3) check splits into one check per source of degree 6.
    let text = fs::read_to_string(&out).unwrap();
    let sv = relay_ldpc::profile_io::parse(&text)
        .unwrap()
        .to_profile()
        .unwrap();
    assert_eq!(sv.uppers.len(), 2);
    for (m, e) in sv.uppers.iter().enumerate() {
        assert!((e.coeff - 0.2).abs() < 1e-12);
        let mut degrees = vec![0, 0];
        degrees[m] = 6;
        assert_eq!(e.degrees, degrees);
    }
}

#[test]
fn optimize_writes_profile_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let spec: PathBuf = dir.path().join("search.json");
    fs::write(
        &spec,
        format!(
            r#"{{
  "lowers": [[{{"coeff": 0.3, "d1": 15}}], [{{"coeff": 0.42, "d1": 10}}]],
  "d1_sets": [[2, 3, 6, 7, 20], [2, 3, 6, 7, 20]],
  "d2_values": [0, 1, 2, 3, 7, 14, 21],
  "upper_degrees": [[3, 3]],
  "r1_targets": [0.2, 0.2],
  "weights": [0.970555, 1.1899],
  "population": 4,
  "generations": 1,
  "seed": 11,
  "warm_profiles": ["{}"]
}}"#,
            bundled_profile()
        ),
    )
    .unwrap();
    let out = dir.path().join("best.profile");
    let audit = dir.path().join("audit.jsonl");
    let code = run_args(&[
        "optimize",
        spec.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--audit",
        audit.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(run_args(&["verify", out.to_str().unwrap()]), 0);

    let lines: Vec<String> = fs::read_to_string(&audit)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines.len(), 2); // initial population plus one generation
    let mut last_best = f64::NEG_INFINITY;
    for line in &lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let best = v["best_sigma_sys"].as_f64().unwrap();
        assert!(best >= last_best);
        last_best = best;
    }
    // Warm-started from the reference profile, the best stays at least as
    // good as the reference design threshold.
    assert!(last_best > 0.7, "best sigma_sys {last_best}");
}
