use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sample(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample").join(rel)
}

fn tha(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tha"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_values(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn reduce_examples_through_files() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("scan.csv");
    fs::write(&raw, "# three points\nwavelength_nm,i_ref,i_mes,t_f\n1500,1,1,1\n1501,1,0.5,1\n1502,1,1,0.1\n").unwrap();
    let o = tha(dir.path(), &["reduce", s(&raw)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = csv_values(&dir.path().join("scan_spectrum.csv"));
    assert_eq!(v, vec![(1500.0, 0.0), (1501.0, -3.0103), (1502.0, 10.0)]);
}

#[test]
fn reduce_filter_override() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("scan.csv");
    fs::write(&raw, "wavelength_nm,i_ref,i_mes\n1500,1,1\n1501,2,1\n").unwrap();
    let o = tha(dir.path(), &["reduce", s(&raw), "--filter-db", "-10", "--output", "r.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = csv_values(&dir.path().join("r.csv"));
    assert_eq!(v, vec![(1500.0, 10.0), (1501.0, 6.9897)]);

    let o = tha(dir.path(), &["reduce", s(&raw)]);
    assert_eq!(code(&o), 1, "t_f column missing without override");
}

#[test]
fn reduce_rejects_bad_row_with_location() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("bad.csv");
    fs::write(&raw, "wavelength_nm,i_ref,i_mes,t_f\n1500,1,1,1\n1501,1,abc,1\n").unwrap();
    let o = tha(dir.path(), &["reduce", s(&raw)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.csv:3"), "{}", stderr(&o));
    assert!(!dir.path().join("bad_spectrum.csv").exists());
}

#[test]
fn reduce_rejects_nonpositive_intensity() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("zero.csv");
    fs::write(&raw, "wavelength_nm,i_ref,i_mes,t_f\n1500,1,0,1\n").unwrap();
    let o = tha(dir.path(), &["reduce", s(&raw)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("1500"), "{}", stderr(&o));
}

#[test]
fn synth_attenuator_is_flat() {
    let dir = TempDir::new().unwrap();
    let o = tha(dir.path(), &["--grid", "1500:1510:5", "synth", "attenuator", "--id", "att", "--params", r#"{"loss_db":30}"#]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for leg in ["forward", "backward"] {
        let v = csv_values(&dir.path().join(format!("att_{leg}.csv")));
        assert_eq!(v, vec![(1500.0, -30.0), (1505.0, -30.0), (1510.0, -30.0)]);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("att.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "two-port");
    assert_eq!(manifest["provenance"]["synthetic"]["name"], "attenuator");
}

#[test]
fn synth_bend_filter_matches_calibration() {
    let dir = TempDir::new().unwrap();
    let o = tha(dir.path(), &["synth", "bend-filter", "--id", "w", "--params", r#"{"radius_mm":12}"#]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = csv_values(&dir.path().join("w_forward.csv"));
    let at = |l: f64| v.iter().find(|p| p.0 == l).unwrap().1;
    assert!(at(1550.0) >= -1.0);
    assert!(v.iter().filter(|p| p.0 >= 1830.0).all(|p| p.1 <= -30.0));
}

#[test]
fn synth_manifest_loads_as_component() {
    let dir = TempDir::new().unwrap();
    let o = tha(dir.path(), &["synth", "attenuator", "--id", "att", "--params", r#"{"loss_db":10}"#]);
    assert_eq!(code(&o), 0);
    fs::write(dir.path().join("cat.json"), r#"{"components":["att.json"]}"#).unwrap();
    fs::write(
        dir.path().join("s.json"),
        r#"{"name":"s","catalog":"cat.json","outbound":[{"component":"att","leg":"forward"}],"reflection":{"flat_db":-40}}"#,
    )
    .unwrap();
    let o = tha(dir.path(), &["compose", s(&dir.path().join("s.json"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = csv_values(&dir.path().join("s_composite.csv"));
    assert!(v.iter().all(|p| p.1 == -60.0));
}

#[test]
fn synth_bad_input_exits_1() {
    let dir = TempDir::new().unwrap();
    let o = tha(dir.path(), &["synth", "bend-filter", "--id", "w", "--params", r#"{"radius_mm":-5}"#]);
    assert_eq!(code(&o), 1);
    let o = tha(dir.path(), &["synth", "laser", "--id", "x"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown model"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn evaluate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = tha(dir.path(), &["evaluate", s(&sample("alice_protected.json"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = tha(dir.path(), &["evaluate", s(&sample("alice.json"))]);
    assert_eq!(code(&o), 2);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("alice_report.json")).unwrap()).unwrap();
    assert_eq!(report["secure"], false);
    assert!(!report["loopholes"].as_array().unwrap().is_empty());
    for key in ["wavelength_nm", "t_db", "mu_p", "chi"] {
        assert!(report["worst"][key].is_number(), "{key}");
    }

    let o = tha(dir.path(), &["evaluate", s(&dir.path().join("missing.json"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn evaluate_failure_leaves_no_files() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    fs::write(data.join("a.csv"), "wavelength_nm,transmittance_db\n1500,-1\n1600,oops\n").unwrap();
    fs::write(
        data.join("a.json"),
        r#"{"id":"a","kind":"two-port","legs":{"forward":"a.csv","backward":"a.csv"}}"#,
    )
    .unwrap();
    fs::write(data.join("cat.json"), r#"{"components":["a.json"]}"#).unwrap();
    fs::write(
        data.join("s.json"),
        r#"{"name":"s","catalog":"cat.json","outbound":[{"component":"a","leg":"forward"}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = tha(&out, &["evaluate", s(&data.join("s.json"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("a.csv:3"), "{}", stderr(&o));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().count() == 0);
}

#[test]
fn outputs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        tha(d.path(), &["evaluate", s(&sample("bob.json"))]);
        tha(d.path(), &["plan", s(&sample("bob.json")), "--countermeasures", s(&sample("countermeasures/catalog.json"))]);
    }
    for f in ["bob_report.json", "bob_curve.csv", "bob_plan.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn curve_csv_uses_six_significant_digits() {
    let dir = TempDir::new().unwrap();
    tha(dir.path(), &["evaluate", s(&sample("alice.json"))]);
    let text = fs::read_to_string(dir.path().join("alice_curve.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "wavelength_nm,t_db,mu_p,chi");
    for line in text.lines().skip(1) {
        for field in line.split(',') {
            let x: f64 = field.parse().unwrap();
            assert_eq!(tha_core::format::format_sig(x), field);
            assert_eq!(tha_core::format::format_sig(tha_core::format::round_sig(x)), field);
        }
    }
}

#[test]
fn global_flags_apply() {
    let dir = TempDir::new().unwrap();
    let o = tha(
        dir.path(),
        &["--grid", "1600:1700:10", "--ref-db", "-50", "--fixed-1550", "--chi-max", "0.5", "evaluate", s(&sample("alice.json"))],
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("alice_report.json")).unwrap()).unwrap();
    assert_eq!(report["grid_points"], 11);
    assert_eq!(report["budget"]["photon_energy_mode"], "fixed_1550");
    assert_eq!(report["thresholds"]["chi_max"], 0.5);

    let plain = TempDir::new().unwrap();
    tha(plain.path(), &["--grid", "1600:1700:10", "compose", s(&sample("alice.json"))]);
    tha(dir.path(), &["--grid", "1600:1700:10", "--ref-db", "-50", "compose", s(&sample("alice.json"))]);
    let a = csv_values(&plain.path().join("alice_composite.csv"));
    let b = csv_values(&dir.path().join("alice_composite.csv"));
    for (x, y) in a.iter().zip(&b) {
        assert!((x.1 - y.1 - 10.0).abs() < 1e-3);
    }
}

#[test]
fn bad_grid_exits_1() {
    let dir = TempDir::new().unwrap();
    let o = tha(dir.path(), &["--grid", "2100:1500:1", "evaluate", s(&sample("alice.json"))]);
    assert_eq!(code(&o), 1);
    let o = tha(dir.path(), &["--grid", "1500-2100", "evaluate", s(&sample("alice.json"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn plan_search_and_verify() {
    let dir = TempDir::new().unwrap();
    let cm = sample("countermeasures/catalog.json");
    let o = tha(dir.path(), &["plan", s(&sample("alice.json")), "--countermeasures", s(&cm)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("alice_plan.json")).unwrap()).unwrap();
    assert_eq!(plan["status"], "feasible");
    assert_eq!(plan["strategy"], "exhaustive");
    assert_eq!(plan["plan"]["picks"], serde_json::json!({"cwdm": 1, "isolator": 1, "windings_12mm": 1}));

    let o = tha(
        dir.path(),
        &["plan", s(&sample("alice.json")), "--countermeasures", s(&cm), "--verify", s(&sample("plans/alice_stack.json"))],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = tha(dir.path(), &["plan", s(&sample("alice.json")), "--countermeasures", s(&sample("countermeasures/isolator_only.json"))]);
    assert_eq!(code(&o), 2);
    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("alice_plan.json")).unwrap()).unwrap();
    assert_eq!(plan["status"], "no_feasible_plan");
    assert!(plan["best"]["achieved_worst_chi"].as_f64().unwrap() > 0.01);
}

#[test]
fn plan_loss_budget_and_greedy() {
    let dir = TempDir::new().unwrap();
    let cm = sample("countermeasures/catalog.json");
    let o = tha(
        dir.path(),
        &["plan", s(&sample("bob.json")), "--countermeasures", s(&cm), "--strategy", "greedy"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = tha(
        dir.path(),
        &["plan", s(&sample("bob.json")), "--countermeasures", s(&cm), "--loss-budget", "2"],
    );
    assert_eq!(code(&o), 2, "two isolators cost more than 2 dB at 1550 nm");
    let o = tha(
        dir.path(),
        &["plan", s(&sample("bob.json")), "--countermeasures", s(&cm), "--verify", s(&sample("plans/alice_stack.json"))],
    );
    assert_eq!(code(&o), 2, "the single-isolator stack is not enough for bob");
}

#[test]
fn plan_unknown_pick_exits_1() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("p.json");
    fs::write(&p, r#"{"picks":{"watchdog":1}}"#).unwrap();
    let o = tha(
        dir.path(),
        &["plan", s(&sample("alice.json")), "--countermeasures", s(&sample("countermeasures/catalog.json")), "--verify", s(&p)],
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("watchdog"), "{}", stderr(&o));
}
