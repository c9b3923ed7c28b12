use std::path::Path;
use std::process::Command;

use omega_shift::{build_omega_table, SieveConfig, SieveError};
use omega_shift_cli::experiment::cache_file;
use omega_shift_cli::verify::{verify_suite_with, FaultInjection, Level, Outcome};
use omega_shift_cli::{run_experiment, ExperimentConfig, ExperimentError, WRule};

const BIN: &str = env!("CARGO_BIN_EXE_omega-shift");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

/// CSV text with the runtime column dropped.
fn without_runtime(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn minimal_config_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "x_list = 1e4\nk_list = 2\ny_grid = -1, 0, 1\noutput_dir = out\n",
    );
    let out = Command::new(BIN).args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("out/report_x10000.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "statistic,x,k,w,param,empirical,theoretical,rel_dev,error_scale,runtime_ms"
    );
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1..4].iter().filter(|l| l.starts_with("Thm1.S_k_y,")).count(), 3);
    assert!(lines[4].starts_with("Summary,"));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report_x10000.json")).unwrap()).unwrap();
    let meta = &json["metadata"];
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta["r_definition"].as_str().unwrap().contains("(k-1)/log2(x)"));
    assert_eq!(json["rows"].as_array().unwrap().len(), 4);
    assert_eq!(json["rows"][1]["param"], 0.0);
    assert_eq!(json["rows"][1]["theoretical"], 0.5);
}

#[test]
fn reports_are_deterministic_across_runs_and_threads() {
    let body = "x_list = 2e4, 1e5\nk_list = 1, 2, 3\ny_grid = -1.5, 0, 0.5, 2\nell_max = 6\nmoments = 1, 2, 3, 4\n\
                ks = true\nbaseline = true\nd_k_c = 1\ntotals = true\ntruncation_prime = 1e5\nw_rule = squared_loglog\n";
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip(["1", "1", "8"]) {
        let cfg = write_config(dir.path(), &format!("{body}output_dir = out\n"));
        let out = Command::new(BIN)
            .env("OMEGA_SHIFT_THREADS", threads)
            .args(["run", "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for x in [20_000, 100_000] {
        let name = format!("out/report_x{x}.csv");
        let reference = without_runtime(&dirs[0].path().join(&name));
        assert!(
            reference.contains("Remark1-m4") && reference.contains("Thm2.S_k_ell") && reference.contains("Sec3.2.D_k")
        );
        assert!(reference.contains("Goudout.pi_k_y") && reference.contains("ErdosKac.omega_y"));
        for d in &dirs[1..] {
            assert_eq!(without_runtime(&d.path().join(&name)), reference);
        }
    }
}

#[test]
fn cache_is_reused_and_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let mut cfg = ExperimentConfig::new(vec![5_000], vec![1, 2], vec![0.0], dir.path().join("out"));
    cfg.w_rule = WRule::Fixed(20);
    cfg.cache_dir = Some(cache.clone());

    let first = run_experiment(&cfg).unwrap();
    let path = cache_file(&cache, 5_000, 20);
    assert!(path.exists());
    let second = run_experiment(&cfg).unwrap();
    let stats = |r: &[omega_shift_cli::XReport]| r[0].rows.iter().map(|r| r.empirical.to_bits()).collect::<Vec<_>>();
    assert_eq!(stats(&first), stats(&second));

    // a table for a different w stored under the requested name
    build_omega_table(&SieveConfig::new(5_000, 7))
        .unwrap()
        .write_cache(&path)
        .unwrap();
    match run_experiment(&cfg) {
        Err(ExperimentError::Sieve(SieveError::CacheMismatch {
            found_w: 7, want_w: 20, ..
        })) => {}
        other => panic!("expected cache mismatch, got {other:?}"),
    }

    let cfg_path = write_config(
        dir.path(),
        "x_list = 5000\nk_list = 1\ny_grid = 0\nw_rule = fixed:20\ncache_dir = cache\noutput_dir = out\n",
    );
    let out = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cache header mismatch"));
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "x_list = 1e4\nk_list = 40\ny_grid = 0\noutput_dir = out\n");
    let out = Command::new(BIN).args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

#[test]
fn fault_injection_is_named_in_output() {
    let summary = verify_suite_with(
        Level::Fast,
        FaultInjection {
            flip_g_square_sign: true,
        },
    );
    assert!(!summary.passed());
    let failed: Vec<&str> = summary
        .checks
        .iter()
        .filter(|c| c.outcome == Outcome::Fail)
        .map(|c| c.name.as_str())
        .collect();
    assert_eq!(failed, ["convolution_check"]);

    let out = Command::new(BIN)
        .args(["verify", "--level", "fast", "--inject-fault", "flip-g-square"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL convolution_check"));
    assert!(text.contains("first failure: convolution_check"));
}

#[test]
fn verify_fast_passes() {
    let out = Command::new(BIN).args(["verify", "--level", "fast"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn constants_and_sieve_commands() {
    let out = Command::new(BIN)
        .args(["constants", "--r", "1", "--z", "-0.5,0.25", "--P", "1e5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["A_r", "C_r", "h_r(z)", "H(r,z)", "tail bound"] {
        assert!(text.contains(key), "{text}");
    }
    assert!(text.contains("A_r    = 6.0792"));

    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["sieve", "--x", "1e5", "--w", "100", "--cache"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    // 9592 primes and 108 higher prime powers
    assert!(text.contains("pi_1 = 9700"), "{text}");
    assert!(cache_file(dir.path(), 100_000, 100).exists());
}
