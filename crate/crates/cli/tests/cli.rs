use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cosym_cli::config::{parse_config, CheckName, RunConfig};
use cosym_cli::report::Status;
use cosym_cli::runner::run;
use serde_json::Value;

fn cosym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosym"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn closed_only_on_the_standard_space() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = r3_standard\nchecks = [closed]\n");
    let out_path = dir.path().join("report.json");
    let out = cosym(&["run", &cfg, "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "{stdout}");
    assert!(stdout.starts_with("closed: pass"), "{stdout}");

    let report = json(&out_path);
    assert_eq!(report["report_version"], 1);
    assert_eq!(report["checks"]["closed"]["detail"]["omega"], 0.0);
    assert_eq!(report["checks"]["closed"]["detail"]["eta"], 0.0);
    for (name, entry) in report["checks"].as_object().unwrap() {
        if name != "closed" {
            assert_eq!(entry["status"], "skipped", "{name}");
            assert!(entry.get("detail").is_none(), "{name} carries residuals");
        }
    }
}

#[test]
fn full_quadrant_suite_passes_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("csv");
    let out_path = dir.path().join("report.json");
    let out = cosym(&[
        "run",
        "cn(3,1)",
        "--out",
        out_path.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let report = json(&out_path);
    assert_eq!(report["summary"]["all_passed"], true);
    assert_eq!(report["summary"]["failed"], 0);
    // cn(3,1) carries no closed Reeb orbit probe, so only holonomy is skipped.
    assert_eq!(report["checks"]["holonomy"]["status"], "skipped");
    assert_eq!(report["summary"]["passed"], 12);

    let body = fs::read_to_string(csv.join("moment_body.csv")).unwrap();
    assert!(body.starts_with("mu_1,mu_2\n"));
    assert!(body.lines().count() > 3);
    let crit = fs::read_to_string(csv.join("critical_components.csv")).unwrap();
    assert!(crit.starts_with("generator,value,"));
    assert_eq!(crit.lines().count(), 3);
}

#[test]
fn half_turn_holonomy_is_cyclic_of_order_two() {
    let cfg = RunConfig::new("mapping_torus_rot(1/2)").with_checks(&[CheckName::Holonomy]);
    let report = run(&cfg).report;
    assert_eq!(report.status(CheckName::Holonomy), Some(Status::Pass));
    let h = report.holonomy.as_ref().unwrap();
    assert_eq!(h["descriptor"]["kind"], "cyclic_finite");
    assert_eq!(h["descriptor"]["q"], 2);
}

#[test]
fn reports_are_byte_identical_for_a_fixed_seed() {
    let a = cosym(&["run", "mapping_torus_id", "--seed", "9"]);
    let b = cosym(&["run", "mapping_torus_id", "--seed", "9"]);
    assert_eq!(a.status.code(), b.status.code());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_and_tolerances_land_in_the_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = cosym(&[
        "run",
        "r3_standard",
        "--seed",
        "17",
        "--tol",
        "tol_closed=1e-3",
        "--tol",
        "tol_rank=1e-10",
        "--checks",
        "classify,closed",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let p = &json(&out_path)["provenance"];
    assert_eq!(p["seed"], 17);
    assert_eq!(p["tolerances"]["tol_closed"], 1e-3);
    assert_eq!(p["tolerances"]["tol_rank"], 1e-10);
    assert_eq!(
        p["checks_requested"],
        serde_json::json!(["classify", "closed"])
    );
    assert!(p.get("wall_time_s").is_none());
}

#[test]
fn failing_check_gives_exit_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = cn(3,1)\nfoliation = variant\nchecks = [quasi_iso, closed]\n",
    );
    let out_path = dir.path().join("r.json");
    let out = cosym(&["run", &cfg, "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out_path);
    assert_eq!(report["checks"]["quasi_iso"]["status"], "fail");
    // A failure does not stop the other checks.
    assert_eq!(report["checks"]["closed"]["status"], "pass");
    assert_ne!(report["provenance"]["foliation"], "ker_flat");
}

#[test]
fn inapplicable_check_named_explicitly_is_an_error() {
    let cfg = RunConfig::new("r3_standard").with_checks(&[CheckName::Holonomy, CheckName::Closed]);
    let report = run(&cfg).report;
    assert_eq!(report.status(CheckName::Holonomy), Some(Status::Error));
    assert_eq!(report.status(CheckName::Closed), Some(Status::Pass));
    assert_eq!(report.exit_code(), 1);

    // Under the default list the same check is skipped instead.
    let report = run(&RunConfig::new("r3_standard")).report;
    assert_eq!(report.status(CheckName::Holonomy), Some(Status::Skipped));
}

#[test]
fn bad_configs_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = r3_standard\ntol_rank = -1\n");
    let out = cosym(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(
        cosym(&["run", "r3_standard", "--checks", "nonsense"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cosym(&["run", "no_such_space"]).status.code(), Some(2));
    assert_eq!(
        cosym(&["run", "r3_standard", "--tol", "tol_eig=0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cosym(&["explain", "nonsense"]).status.code(), Some(2));
}

#[test]
fn scenario_errors_are_reported_per_check() {
    let mut cfg = parse_config("scenario = r3_standard\nchecks = [closed, classify]\n").unwrap();
    cfg.grid_override = Some(vec![5, 5]);
    let report = run(&cfg).report;
    assert!(report.scenario_error.is_some());
    assert_eq!(report.status(CheckName::Closed), Some(Status::Error));
    assert_eq!(report.status(CheckName::Classify), Some(Status::Error));
    assert_eq!(report.status(CheckName::Body), Some(Status::Skipped));
    assert_eq!(report.exit_code(), 1);
}

#[test]
fn list_and_explain() {
    let out = cosym(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("cn(n,k)")));
    assert_eq!(text.lines().count(), 10);

    for check in CheckName::ALL {
        let out = cosym(&["explain", check.as_str()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(String::from_utf8(out.stdout)
            .unwrap()
            .starts_with(&format!("{check}: ")));
    }
}
