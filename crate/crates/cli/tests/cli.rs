use std::process::{Command, Output};

use laguerre::{Report, Status};

fn laguerre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laguerre"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn reports(out: &Output) -> Vec<Report> {
    serde_json::from_slice(&out.stdout).expect("report JSON")
}

#[test]
fn theorem_catalog_at_q5() {
    let out = laguerre(&["theorems", "run", "--q", "5", "--id", "all", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(rs.len(), 29);
    let ids: Vec<&str> = rs.iter().map(|r| r.check_id.as_str()).collect();
    let catalog: Vec<&str> = laguerre::CheckId::ALL.iter().map(|id| id.as_str()).collect();
    assert_eq!(ids, catalog);
    let report_only: Vec<&str> = rs
        .iter()
        .filter(|r| r.status == Status::ReportOnly)
        .map(|r| r.check_id.as_str())
        .collect();
    assert_eq!(report_only, ["L3.1"]);
}

#[test]
fn json_round_trips() {
    let out = laguerre(&["skewaffine", "verify", "--q", "3", "--axiom", "pap,l1", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(
        rs.iter().map(|r| r.check_id.as_str()).collect::<Vec<_>>(),
        ["SKA-L1", "SKA-Pap"]
    );
    let again = serde_json::to_string_pretty(&rs).unwrap() + "\n";
    assert_eq!(again.as_bytes(), out.stdout.as_slice());
    assert!(rs[1].reading_notes.is_some());
}

#[test]
fn multiple_q_ordered_by_id_then_q() {
    let out = laguerre(&["theorems", "run", "--q", "5,3", "--id", "R4.1,P2.2", "--json"]);
    let keys: Vec<(String, u32)> = reports(&out).into_iter().map(|r| (r.check_id, r.q)).collect();
    let expect = [("P2.2", 5), ("P2.2", 3), ("R4.1", 5), ("R4.1", 3)];
    assert_eq!(keys, expect.map(|(i, q)| (i.to_string(), q)));
}

#[test]
fn char2_group_fails_a3() {
    let out = laguerre(&["group", "verify", "--q", "2", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let a3 = reports(&out).into_iter().find(|r| r.check_id == "A3").unwrap();
    assert_eq!(a3.status, Status::Fail);
    assert!(!a3.witnesses.is_empty());
}

#[test]
fn skewaffine_q3_exhaustive() {
    let out = laguerre(&["skewaffine", "verify", "--q", "3", "--axiom", "all", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = reports(&out);
    assert_eq!(rs.len(), 9);
    assert!(rs.iter().all(|r| r.stats["mode"] == "exhaustive"));
}

#[test]
fn sampled_budget_is_reported() {
    let out = laguerre(&[
        "skewaffine",
        "verify",
        "--q",
        "5",
        "--axiom",
        "T",
        "--budget",
        "sample:2000",
        "--seed",
        "7",
        "--json",
    ]);
    let r = &reports(&out)[0];
    assert_eq!(r.cases_checked, 2000);
    assert_eq!(r.stats["mode"], "sample:2000 seed:7");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["theorems", "run", "--q", "4"][..],
        &["theorems", "run", "--q", "5", "--id", "Z1.1"],
        &["skewaffine", "verify", "--q", "5", "--axiom", "Q"],
        &["skewaffine", "verify", "--q", "5", "--budget", "sample:0"],
        &["group", "verify", "--q", "5", "--pencil", "ideal:1@K:2,0,0"],
        &["plane", "verify"],
        &["frobnicate"],
    ] {
        let out = laguerre(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn human_output_has_summary() {
    let out = laguerre(&["plane", "verify", "--q", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("LAG    q=3   pass"));
    assert!(text.ends_with("1 reports: 1 pass, 0 fail, 0 report_only, 0 error\n"));
}

#[test]
fn non_canonical_pencils() {
    for pencil in ["p:1,2", "ideal:3@K:3,1,4", "p:0,0@K:2,0,0"] {
        let out = laguerre(&["group", "verify", "--q", "5", "--pencil", pencil]);
        assert_eq!(out.status.code(), Some(0), "{pencil}");
    }
}

#[test]
fn export_space() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("space.json");
    let out = laguerre(&["export", "--q", "3", "--what", "space", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["q"], 3);
    let lines = v["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 39);
    for key in ["base", "kind", "class", "points"] {
        assert!(lines[0].get(key).is_some(), "{key}");
    }
    for what in ["plane", "group"] {
        let path = dir.path().join(format!("{what}.json"));
        let out = laguerre(&["export", "--q", "5", "--what", what, "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(path.exists());
    }
}

#[test]
fn list_names_every_id() {
    let out = laguerre(&["theorems", "list"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 29);
    assert!(text.lines().next().unwrap().starts_with("P2.1"));
}
