use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "basis.N=64\ngrid.dt=0.004\ngrid.T=2\nvariant.N=64\n";

fn memkernel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memkernel"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) {
    fs::write(dir.join("cfg.txt"), format!("{SMALL}{extra}")).unwrap();
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_measurements_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "variant.enabled=true\n");
    let o = memkernel(&["simulate", "cfg.txt"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let text = fs::read_to_string(out.join("measurements.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,H,K,Theta_f,Y_f"));
    assert_eq!(lines.count(), 501);
    let variant = fs::read_to_string(out.join("variant_measurements.csv")).unwrap();
    assert!(variant.starts_with("t,variant_HL,variant_thetaL\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["grid"]["steps"], 500);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn fixed_seed_reproduces_files_bitwise() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        write_config(dir.path(), "noise.level=0.01\nnoise.seed=7\n");
        assert!(memkernel(&["simulate", "cfg.txt"], dir.path()).status.success());
        let o = memkernel(&["identify", "cfg.txt", "--stage", "beta"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let out = dir.path().join("out");
        (
            fs::read(out.join("measurements.csv")).unwrap(),
            fs::read(out.join("report.json")).unwrap(),
            fs::read(out.join("beta_hat.csv")).unwrap(),
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn malformed_key_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "grid.steps=10\n");
    let o = memkernel(&["simulate", "cfg.txt"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.steps"), "{}", stderr(&o));
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = memkernel(&["simulate", "nope.txt"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stage_a_without_stage_one_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    assert!(memkernel(&["simulate", "cfg.txt"], dir.path()).status.success());
    let o = memkernel(&["identify", "cfg.txt", "--stage", "a"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn stages_run_separately_and_together() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    assert!(memkernel(&["simulate", "cfg.txt"], dir.path()).status.success());
    let out = dir.path().join("out");

    let o = memkernel(&["identify", "cfg.txt", "--stage", "beta"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("beta_hat.csv").exists());
    assert!(!out.join("a_hat.csv").exists());

    let o = memkernel(&["identify", "cfg.txt", "--stage", "a"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let a_split = fs::read(out.join("a_hat.csv")).unwrap();

    let o = memkernel(&["identify", "cfg.txt"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(out.join("a_hat.csv")).unwrap(), a_split);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["closure"]["y_f"].as_f64().unwrap() < 1e-3);
    assert!(report["beta"]["error"]["rel_l2"].as_f64().unwrap() < 0.01);
    assert!(report["a"]["error"]["rel_l2"].as_f64().unwrap() < 0.02);
}

#[test]
fn variant_flag_reads_variant_measurements() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "variant.enabled=true\n");
    assert!(memkernel(&["simulate", "cfg.txt"], dir.path()).status.success());
    let o = memkernel(&["identify", "cfg.txt", "--stage", "beta", "--variant"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!(report["beta"].is_null());
    assert!(report["variant_beta"]["error"]["rel_l2"].as_f64().is_some());

    fs::remove_file(dir.path().join("out/variant_measurements.csv")).unwrap();
    let o = memkernel(&["identify", "cfg.txt", "--stage", "beta", "--variant"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unstable_grid_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.txt"), "basis.N=256\ngrid.dt=0.01\n").unwrap();
    let o = memkernel(&["simulate", "cfg.txt"], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn sweep_rows_and_empty_sweep() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    let o = memkernel(&["sweep", "cfg.txt", "--axis", "noise", "--values"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = memkernel(&["sweep", "cfg.txt", "--axis", "noise"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/sweep_noise.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "noise,beta_rel_l2,a_rel_l2,alpha_beta,alpha_a");
    assert_eq!(lines.len(), 5);
}

#[test]
fn single_point_sweep_matches_identify() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    let o = memkernel(&["sweep", "cfg.txt", "--axis", "modes", "--values", "64"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/sweep_modes.csv")).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();

    assert!(memkernel(&["simulate", "cfg.txt"], dir.path()).status.success());
    assert!(memkernel(&["identify", "cfg.txt"], dir.path()).status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(row[1], report["beta"]["error"]["rel_l2"].as_f64().unwrap());
    assert_eq!(row[2], report["a"]["error"]["rel_l2"].as_f64().unwrap());
}

#[test]
fn default_round_trip_meets_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.txt"), "# defaults\n").unwrap();
    assert!(memkernel(&["simulate", "cfg.txt"], dir.path()).status.success());
    let o = memkernel(&["identify", "cfg.txt"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!(report["beta"]["error"]["rel_l2"].as_f64().unwrap() <= 0.01);
    assert!(report["a"]["error"]["rel_l2"].as_f64().unwrap() <= 0.04);
}
