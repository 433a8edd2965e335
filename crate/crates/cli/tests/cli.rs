use std::path::Path;
use std::process::{Command, Output};

use phonon_tc::formats::read_csv;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phonon-tc")).args(args).env("RUST_LOG", "error").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL: &[&str] = &["--cutoff", "24", "--samples", "21", "--t-end", "0.4", "--husimi-at", "0,0.4", "--tol", "1e-7"];

#[test]
fn dumped_preset_reproduces_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let mut args = vec!["run", "--preset", "fig3", "--parallel", "2", "--out", a.to_str().unwrap()];
    args.extend(SMALL);
    assert_eq!(code(&bin(&args)), 0);

    let mut dump = vec!["dump-preset", "fig3"];
    dump.extend(SMALL);
    let out = bin(&dump);
    assert_eq!(code(&out), 0);
    let cfg = tmp.path().join("fig3.toml");
    std::fs::write(&cfg, &out.stdout).unwrap();
    let args = ["run", "--config", cfg.to_str().unwrap(), "--parallel", "1", "--out", b.to_str().unwrap()];
    assert_eq!(code(&bin(&args)), 0);

    let (mut ma, mut mb) = (manifest(&a), manifest(&b));
    assert!(ma["timing"]["total_s"].is_number());
    ma.as_object_mut().unwrap().remove("timing");
    mb.as_object_mut().unwrap().remove("timing");
    assert_eq!(ma, mb);
    for f in ["fig3_trajectory.csv", "fig3_husimi_t0.csv", "fig3_husimi_t0p4.csv", "classical.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_writes_one_file_per_member() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig2");
    let args = ["run", "--preset", "fig2", "--cutoff", "16", "--samples", "11", "--t-end", "0.2", "--out", out.to_str().unwrap()];
    assert_eq!(code(&bin(&args)), 0);
    let mut csv: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csv.sort();
    assert_eq!(
        csv,
        ["classical.csv", "omega2_300khz_trajectory.csv", "omega2_500khz_trajectory.csv", "omega2_700khz_trajectory.csv"]
    );
    let (header, rows) = read_csv(&out.join("omega2_500khz_trajectory.csv"), true).unwrap();
    assert_eq!(&header[..5], ["t_ms", "Na", "rescaled_Na", "purity", "p0"]);
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert!((r[2] - 0.25 * r[1]).abs() <= 1e-15 * r[1].abs().max(1.0));
    }
    let m = manifest(&out);
    assert_eq!(m["members"].as_array().unwrap().len(), 3);
    assert!(out.join("validation.json").exists());
}

#[test]
fn rates_with_threshold_drive_echo_both_readings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("custom");
    let args = [
        "run",
        "--rates",
        "g=0.54,kappa=0.003645,delta=5",
        "--epsilon-from-threshold",
        "14.27",
        "--cutoff",
        "20",
        "--samples",
        "5",
        "--t-end",
        "0.05",
        "--formats",
        "json",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(code(&bin(&args)), 0);
    let m = manifest(&out);
    let drive = &m["members"][0]["drive"];
    // ε/2π = 14.27/√(2π·0.003645)/2π and 14.27/√0.003645
    let angular = 14.27 / (std::f64::consts::TAU * 0.003645).sqrt() / std::f64::consts::TAU;
    let ordinary = 14.27 / 0.003645f64.sqrt();
    assert!((drive["epsilon_khz_angular"].as_f64().unwrap() - angular).abs() < 1e-9 * angular);
    assert!((drive["epsilon_khz_ordinary"].as_f64().unwrap() - ordinary).abs() < 1e-9 * ordinary);
    assert_eq!(drive["reading"], "angular");
    assert!((m["members"][0]["rates"]["g_khz"].as_f64().unwrap() - 0.54).abs() < 1e-12);
    assert!(!out.join("custom_trajectory.csv").exists());
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut String)) -> std::path::PathBuf {
    let mut text = String::from_utf8(bin(&["dump-preset", "fig3", "--cutoff", "12", "--samples", "5", "--t-end", "0.05", "--husimi-at", "0"]).stdout).unwrap();
    edit(&mut text);
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn validation_failures_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let equal = write_config(tmp.path(), "eq.toml", |t| *t = t.replace("omega_e_rabi_khz = 1340.0", "omega_e_rabi_khz = 22400.0"));
    let out = bin(&["validate", "--config", equal.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL") && text.contains("gamma >> Omega_e"));
    assert_eq!(code(&bin(&["validate", "--preset", "fig5"])), 0);

    // Γ/η̃₁Ω₁ ≈ 1.2 is a hard failure
    let strong = write_config(tmp.path(), "strong.toml", |t| *t = t.replace("omega1_rabi_khz = 100.0", "omega1_rabi_khz = 1000.0"));
    let o = tmp.path().join("o");
    assert_eq!(code(&bin(&["run", "--config", strong.to_str().unwrap(), "--out", o.to_str().unwrap()])), 1);
    assert!(!o.join("manifest.json").exists());
    assert_eq!(code(&bin(&["run", "--config", strong.to_str().unwrap(), "--out", o.to_str().unwrap(), "--force"])), 0);
    assert_eq!(manifest(&o)["forced"], true);

    assert_eq!(code(&bin(&["run", "--preset", "fig9"])), 1);
    assert_eq!(code(&bin(&["run", "--preset", "fig3", "--config", "x.toml"])), 1);
}

#[test]
fn unwritable_output_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("plain");
    std::fs::write(&file, b"").unwrap();
    let out = file.join("sub");
    let args = ["run", "--preset", "fig3", "--cutoff", "8", "--samples", "3", "--t-end", "0.01", "--husimi-at", "0", "--out", out.to_str().unwrap()];
    assert_eq!(code(&bin(&args)), 3);
}

#[test]
fn eliminate_reports_closed_forms() {
    let out = bin(&["eliminate", "--preset", "fig3", "--fock-dim", "4"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let s2 = &v[0]["stage2"];
    assert!(v[0]["stage1"]["jump_error"].as_f64().unwrap() < 1e-12);
    assert!(s2["gain_jump_error"].as_f64().unwrap() < 1e-12);
    assert!(s2["damping_jump_error"].as_f64().unwrap() < 1e-12);
    let (g, gf) = (s2["g_from_jump"].as_f64().unwrap(), s2["g_formula"].as_f64().unwrap());
    assert!((g / gf - 1.0).abs() < 1e-12);
    assert_eq!(s2["gain_jump"].as_array().unwrap().len(), 4);
}

#[test]
fn oracle_preset_runs_both_models() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("oracle");
    assert_eq!(code(&bin(&["run", "--preset", "oracle-small", "--samples", "41", "--out", out.to_str().unwrap()])), 0);
    let m = manifest(&out);
    let errs: Vec<f64> = m["members"].as_array().unwrap().iter().map(|x| x["oracle_sup_rel_error"].as_f64().unwrap()).collect();
    assert_eq!(errs.len(), 2);
    assert!(errs[1] < errs[0]);
    let (header, rows) = read_csv(&out.join("ratio_10_oracle.csv"), true).unwrap();
    assert_eq!(header, ["t_ms", "Na_effective", "Na_full"]);
    assert_eq!(rows.len(), 41);
}
