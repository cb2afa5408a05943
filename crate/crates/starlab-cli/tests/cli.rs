use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn starlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("STARLAB_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(d, "c.json", "{}");
    assert_eq!(
        starlab(&["nonsense", "--config", &c], d).status.code(),
        Some(1)
    );
    assert_eq!(starlab(&["profile"], d).status.code(), Some(1));
    assert_eq!(
        starlab(&["profile", "--config", "missing.json"], d)
            .status
            .code(),
        Some(1)
    );
    let broken = write_config(d, "broken.json", "{ not json");
    assert_eq!(
        starlab(&["profile", "--config", &broken], d).status.code(),
        Some(1)
    );
    let unknown = write_config(d, "unknown.json", r#"{"model": {"gamma": 2}}"#);
    assert_eq!(
        starlab(&["profile", "--config", &unknown], d).status.code(),
        Some(1)
    );
    assert_eq!(starlab(&["--version"], d).status.code(), Some(0));
}

#[test]
fn weight_violation_names_the_constraint() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(d, "c.json", r#"{"weights": {"a": 1.5}}"#);
    let o = starlab(&["evolve-ss", "--config", &c], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("0 < a < 1"), "{}", stderr(&o));
}

#[test]
fn thermo_gate_names_the_constraint() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(d, "c.json", r#"{"model": {"k": 1.0, "c_nu": 2.0}}"#);
    let o = starlab(&["evolve-thermo", "--config", &c], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("3K − c_ν = 0"), "{}", stderr(&o));
    let c = write_config(d, "e.json", r#"{"model": {"epsilon": 0.1}}"#);
    let o = starlab(&["evolve-thermo", "--config", &c], d);
    assert!(stderr(&o).contains("1/6 < epsilon K < 1"), "{}", stderr(&o));
}

#[test]
fn scenario_in_config_must_agree() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(d, "c.json", r#"{"scenario": "phase"}"#);
    assert_eq!(
        starlab(&["profile", "--config", &c], d).status.code(),
        Some(1)
    );
}

#[test]
fn invalid_thread_cap_is_a_config_error() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(d, "c.json", "{}");
    let o = Command::new(env!("CARGO_BIN_EXE_starlab"))
        .args(["profile", "--config", &c])
        .current_dir(d)
        .env("STARLAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn profile_writes_table_sidecar_plot_and_manifest() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(d, "c.json", r#"{"grid": {"intervals": 50}}"#);
    let o = starlab(&["profile", "--config", &c, "--out", "run"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = d.join("run");
    let csv = fs::read_to_string(run.join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("y,w,rho_bar"));
    assert_eq!(csv.lines().count(), 52);
    let side = read_json(&run.join("profile.json"));
    assert!((side["R0"].as_f64().unwrap() - 13.7937).abs() < 1e-3);
    assert!(fs::read_to_string(run.join("profile.svg"))
        .unwrap()
        .starts_with("<svg"));
    let m = read_json(&run.join("manifest.json"));
    assert!(m["version"].as_str().unwrap().starts_with("starlab "));
    assert_eq!(m["config"]["grid"]["intervals"], 50);
    assert_eq!(m["config"]["model"]["delta"], 0.0);
    assert!(m["events"].as_array().unwrap().is_empty());
    assert!(m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v == "profile.csv"));
}

#[test]
fn thermo_profile_has_temperature_column() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(
        d,
        "c.json",
        r#"{"model": {"gas": "thermo"}, "grid": {"intervals": 40}}"#,
    );
    let o = starlab(&["profile", "--config", &c, "--out", "run"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("run/profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("y,w,rho_bar,theta_bar"));
    let side = read_json(&d.join("run/profile.json"));
    assert_eq!(side["polytropic_index"], 3.0);
    assert_eq!(side["c_nu"], 3.0);
}

#[test]
fn collapsing_expansion_fails_only_under_verify() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(d, "c.json", r#"{"model": {"delta": -0.5, "a1": 0.5}}"#);
    let o = starlab(&["expansion", "--config", &c, "--out", "plain"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = starlab(
        &["expansion", "--config", &c, "--out", "strict", "--verify"],
        d,
    );
    assert_eq!(o.status.code(), Some(2));
    let side = read_json(&d.join("strict/expansion.json"));
    assert_eq!(side["classification"], "Collapse");
    assert!(side["T_collapse"].as_f64().unwrap() > 0.0);
    let m = read_json(&d.join("strict/manifest.json"));
    assert_eq!(m["events"][0]["kind"], "collapse");
    assert_eq!(m["events"][0]["severity"], "failure");
}

#[test]
fn phase_writes_every_trajectory_and_the_portrait() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(d, "c.json", r#"{"horizon": {"end": 10}}"#);
    let o = starlab(&["phase", "--config", &c, "--out", "run", "--verify"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = d.join("run");
    let csvs = fs::read_dir(&run)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("trajectory_")
        })
        .count();
    assert_eq!(csvs, 9);
    let svg = fs::read_to_string(run.join("portrait.svg")).unwrap();
    assert!(svg.contains("zero energy") && svg.contains("stroke-dasharray"));
    let fates = read_json(&run.join("fates.json"));
    let list = fates["trajectories"].as_array().unwrap();
    assert_eq!(list.len(), 9);
    assert_eq!(list[4]["fate"], "Stationary");
    assert_eq!(list[5]["fate"], "Expand");
    assert_eq!(list[3]["fate"], "Collapse");
}

#[test]
fn zero_amplitude_self_similar_run_stays_at_rest() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(
        d,
        "c.json",
        r#"{"initial": {"amplitude": 0}, "horizon": {"end": 2, "emit_every": 1}, "grid": {"intervals": 40}}"#,
    );
    let o = starlab(
        &["evolve-ss", "--config", &c, "--out", "run", "--verify"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let run = d.join("run");
    for k in 0..3 {
        let text = fs::read_to_string(run.join(format!("snapshots/snapshot_{k:04}.csv"))).unwrap();
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(&v[1..], &[0.0, 0.0]);
        }
    }
    let mut r = csv::Reader::from_path(run.join("energy.csv")).unwrap();
    let h = r.headers().unwrap().clone();
    let col = h.iter().position(|c| c == "d_pert").unwrap();
    let rows: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row[col].parse::<f64>().unwrap(), 0.0);
    }
    let schema = read_json(&run.join("energy_schema.json"));
    assert_eq!(schema["columns"].as_array().unwrap().len(), h.len());
}

#[test]
fn evolve_outputs_are_byte_identical_across_runs() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(
        d,
        "c.json",
        r#"{"horizon": {"end": 1}, "grid": {"intervals": 40}, "sweep_seeds": [7]}"#,
    );
    for out in ["a", "b"] {
        let o = starlab(
            &["evolve-linear", "--config", &c, "--out", out, "--seed", "3"],
            d,
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let m = read_json(&d.join("a/manifest.json"));
    assert_eq!(m["seed"], 3);
    let outputs: Vec<String> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert!(
        outputs.iter().any(|p| p.starts_with("seed_3/"))
            && outputs.iter().any(|p| p.starts_with("seed_7/"))
    );
    let mut csvs = 0;
    for rel in outputs.iter().filter(|p| p.ends_with(".csv")) {
        assert_eq!(
            fs::read(d.join("a").join(rel)).unwrap(),
            fs::read(d.join("b").join(rel)).unwrap(),
            "{rel}"
        );
        csvs += 1;
    }
    assert!(csvs > 10);
    assert_eq!(
        fs::read(d.join("a/manifest.json")).unwrap(),
        fs::read(d.join("b/manifest.json")).unwrap()
    );
}

#[test]
fn different_seeds_give_different_data() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let c = write_config(
        d,
        "c.json",
        r#"{"horizon": {"end": 0.2}, "grid": {"intervals": 40}}"#,
    );
    for (out, seed) in [("a", "1"), ("b", "2")] {
        assert!(starlab(
            &[
                "evolve-thermo",
                "--config",
                &c,
                "--out",
                out,
                "--seed",
                seed
            ],
            d
        )
        .status
        .success());
    }
    let a = fs::read(d.join("a/snapshots/snapshot_0000.csv")).unwrap();
    let b = fs::read(d.join("b/snapshots/snapshot_0000.csv")).unwrap();
    assert_ne!(a, b);
    let head = String::from_utf8(a).unwrap();
    assert!(head.starts_with("x,xi,xi_t,zeta\n"));
    let eul = fs::read_to_string(d.join("a/eulerian/eulerian_0000.csv")).unwrap();
    assert!(eul.starts_with("r,rho,u,theta_abs\n"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let raw = fs::read_to_string(&p).unwrap();
        let cfg = starlab_cli::config::validate_config(&raw, None);
        assert!(cfg.is_ok(), "{}: {:?}", p.display(), cfg.err());
        n += 1;
    }
    assert!(n >= 8);
}
