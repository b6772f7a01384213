use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn winvex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_winvex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn export(dir: &Path) {
    let o = winvex(&["catalog", "export", "--dir", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
}

fn cfg(dir: &Path, id: &str) -> String {
    dir.join(format!("{id}.cfg")).to_str().unwrap().to_string()
}

#[test]
fn classify_minus7_is_all_consistent() {
    let dir = tempfile::tempdir().unwrap();
    export(dir.path());
    let o = winvex(&[
        "classify",
        "--config",
        &cfg(dir.path(), "preinvex-minus7"),
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["schema_version"], 1);
    let verdicts = v["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 13);
    assert!(verdicts.iter().all(|x| x["status"] == "consistent-on-samples"));
    assert!(v["counterexamples"].as_array().unwrap().is_empty());
}

#[test]
fn plus6_check_prints_origin_witness() {
    let dir = tempfile::tempdir().unwrap();
    export(dir.path());
    let o = winvex(&[
        "check",
        "--class",
        "w-preinvex",
        "--config",
        &cfg(dir.path(), "shifted-plus6"),
    ]);
    assert_eq!(code(&o), 1);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("z1=(0.0) z2=(0.0) delta=0.0"), "{text}");
    assert!(text.contains("violation=6.0"), "{text}");
}

#[test]
fn catalog_run_quintic_matches() {
    assert_eq!(code(&winvex(&["catalog", "run", "quintic"])), 0);
}

#[test]
fn flags_override_config() {
    let o = winvex(&[
        "check",
        "--fixture",
        "preinvex-minus7",
        "--seed",
        "99",
        "--samples",
        "50",
        "--delta-points",
        "5",
        "--box",
        "-1,1",
        "--eta-mode",
        "as-written",
        "--class",
        "w-pre-pseudo-invex",
        "--json",
    ]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["seed"], 99);
    let verdict = &v["verdicts"][0];
    assert_eq!(verdict["key"], "w-pre-pseudo-invex@as-written");
    assert_eq!(verdict["config"]["pair_samples"], 50);
    assert_eq!(verdict["config"]["delta_points"], 5);
    assert_eq!(verdict["sampling_box"][0]["lo"], -1.0);
}

#[test]
fn report_file_reverifies_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plus6.json");
    let o = winvex(&[
        "classify",
        "--fixture",
        "shifted-plus6",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let p = path.to_str().unwrap();
    let o = winvex(&["report", p, "--reverify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(code(&winvex(&["report", p])), 0);

    let mut v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    v["counterexamples"][0]["counterexample"]["violation"] = Value::from(1.0);
    fs::write(&path, v.to_string()).unwrap();
    let o = winvex(&["report", p, "--reverify", "--json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)[0]["ok"], false);
}

#[test]
fn theorems_and_optimize() {
    let o = winvex(&[
        "theorems",
        "--fixture",
        "preinvex-minus7",
        "--samples",
        "200",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["theorem_reports"].as_array().unwrap().len(), 8);
    let o = winvex(&[
        "optimize",
        "--fixture",
        "preinvex-minus7",
        "--samples",
        "200",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let best = v["solve_results"][0]["best_value"].as_f64().unwrap();
    assert!((best - 6.0).abs() <= 1e-6);
    assert_eq!(v["theorem_reports"][0]["status"], "supported");
}

#[test]
fn set_check_modes() {
    assert_eq!(code(&winvex(&["set-check", "--fixture", "set-halfline"])), 0);
    assert_eq!(
        code(&winvex(&[
            "set-check",
            "--fixture",
            "set-halfline",
            "--mode",
            "classical"
        ])),
        1
    );
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "[run]\ndim = 1\n[functions]\neta = \"z1 +\"\n").unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["classify"],
        vec!["classify", "--config", "/nonexistent.cfg"],
        vec!["classify", "--config", bad.to_str().unwrap()],
        vec!["check", "--fixture", "nope"],
        vec!["check", "--fixture", "quintic", "--box", "1"],
        vec!["check", "--fixture", "quintic", "--class", "sort-of-convex"],
        vec!["optimize", "--fixture", "set-halfline"],
        vec!["report", "/nonexistent.json"],
    ] {
        let o = winvex(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn catalog_list_and_export_round_trip() {
    let o = winvex(&["catalog", "list", "--json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o).as_array().unwrap().len(), 6);
    let dir = tempfile::tempdir().unwrap();
    export(dir.path());
    let o = winvex(&[
        "classify",
        "--config",
        &cfg(dir.path(), "quintic"),
        "--samples",
        "100",
    ]);
    assert_eq!(code(&o), 1);
}

/// Set `WINVEX_UPDATE_GOLDEN=1` to rewrite the golden files.
#[test]
fn golden_reports() {
    let cases: [(&str, &[&str]); 2] = [
        (
            "plus6_classify.json",
            &[
                "classify",
                "--fixture",
                "shifted-plus6",
                "--samples",
                "12",
                "--delta-points",
                "5",
                "--json",
            ],
        ),
        (
            "halfline_set_check.json",
            &[
                "set-check",
                "--fixture",
                "set-halfline-classical",
                "--samples",
                "12",
                "--delta-points",
                "5",
                "--json",
            ],
        ),
    ];
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for (name, args) in cases {
        let out = String::from_utf8(winvex(args).stdout).unwrap();
        let path = dir.join(name);
        if std::env::var_os("WINVEX_UPDATE_GOLDEN").is_some() {
            fs::create_dir_all(&dir).unwrap();
            fs::write(&path, &out).unwrap();
        }
        let golden = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert_eq!(out, golden, "{name} drifted from its golden file");
    }
}
