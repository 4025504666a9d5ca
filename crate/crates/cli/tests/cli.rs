use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn coarsekit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coarsekit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn condition<'a>(report: &'a Value, prefix: &str) -> &'a Value {
    report["report"]["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"].as_str().unwrap().starts_with(prefix))
        .unwrap()
}

const PLANE: &str = r#"{
  "group": {"preset": "Zn", "n": 2},
  "radius": 10,
  "subgroup": {"kind": "zero-coords", "coords": [0]},
  "targets": {"r": "1", "eps": "1"},
  "quotient": {"ball-sets": {"radius": "6", "r": "2"}},
  "fibers": {"ball-sets": {"radius": "20", "r": "25"}}
}"#;

#[test]
fn folner_certificate_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = coarsekit(
        d,
        &["generate", "folner", "--half-width", "10", "--window", "50", "--r", "2", "-o", "f.json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = json(&d.join("f.json"));
    assert_eq!(cert["kind"], "prop-a-sets");
    assert_eq!(cert["space"]["source"], "cayley");
    assert_eq!(cert["eps"], "4/21");

    let out = coarsekit(d, &["verify", "f.json", "-o", "r.json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&d.join("r.json"));
    assert_eq!(report["seed"], 0);
    assert_eq!(report["report"]["verdict"], "pass");
}

#[test]
fn narrow_boxes_fail_at_one_fifth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    coarsekit(
        d,
        &["generate", "folner", "--half-width", "1", "--window", "50", "--r", "2", "-o", "f.json"],
    );
    let mut cert = json(&d.join("f.json"));
    cert["eps"] = "1/5".into();
    std::fs::write(d.join("f.json"), cert.to_string()).unwrap();
    let out = coarsekit(d, &["verify", "--scope", "ambient", "f.json", "-o", "r.json"]);
    assert_eq!(out.status.code(), Some(1));
    let near = condition(&json(&d.join("r.json")), "near").clone();
    // interior ratio |A_x Δ A_y| / |A_x| = 4/3 at distance 2
    assert_eq!(near["worst"], "4/3");
    assert_eq!(near["witness"]["distance"], "2/1");
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), "{\"kind\": ").unwrap();
    assert_eq!(coarsekit(d, &["verify", "bad.json"]).status.code(), Some(2));
    std::fs::write(d.join("odd.json"), r#"{"kind": "prop-a-sets"}"#).unwrap();
    assert_eq!(coarsekit(d, &["verify", "odd.json"]).status.code(), Some(2));
    assert_eq!(coarsekit(d, &["verify", "missing.json"]).status.code(), Some(2));
}

#[test]
fn conversion_chain_keeps_the_space_recipe() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let steps: [&[&str]; 4] = [
        &["generate", "folner", "--half-width", "3", "--window", "20", "--r", "1", "-o", "a.json"],
        &["convert", "sets-to-vector", "a.json", "-o", "b.json"],
        &["convert", "prop-a-to-strong", "b.json", "-o", "c.json", "--provenance", "c.prov.json"],
        &["convert", "strong-to-coarse", "c.json", "-o", "d.json", "--report", "d.report.json"],
    ];
    for args in steps {
        let out = coarsekit(d, args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let strong = json(&d.join("c.json"));
    assert_eq!(strong["kind"], "strong-embed");
    assert_eq!(strong["space"]["source"], "cayley");
    assert_eq!(strong["tail"][0]["delta"], "0/1");
    assert_eq!(json(&d.join("c.prov.json"))["operation"], "prop-a-to-strong");
    assert_eq!(json(&d.join("d.report.json"))["report"]["verdict"], "pass");
    // a conversion applied to the wrong kind is an input error
    assert_eq!(
        coarsekit(d, &["convert", "strong-to-coarse", "a.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn combine_over_a_projection() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("proj.json"),
        r#"{"source": "projection", "group": {"preset": "Zn", "n": 2}, "radius": 12, "coord": 0}"#,
    )
    .unwrap();
    let steps: [&[&str]; 3] = [
        &["generate", "family-ball", "--family", "proj.json", "--radius", "6", "--r", "1", "-o", "outer.json"],
        &[
            "generate", "fiber-balls", "--family", "proj.json", "--radius", "24", "--r", "13", "--flavor", "exact", "-o",
            "fib.json",
        ],
        &[
            "combine", "exact", "--outer", "outer.json", "--fibers", "fib.json", "--r", "1", "--eps", "1", "-o",
            "out.json", "--provenance", "prov.json", "--report", "rep.json",
        ],
    ];
    for args in steps {
        let out = coarsekit(d, args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(json(&d.join("out.json"))["kind"], "prop-a-vector");
    assert_eq!(json(&d.join("prov.json"))["operation"], "combine-exact");
    assert_eq!(json(&d.join("rep.json"))["report"]["verdict"], "pass");
}

#[test]
fn group_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = coarsekit(d, &["group", "orbits", "--group", "Z", "--radius", "10", "--action", "shift:0,2,10"]);
    assert!(out.status.success());
    let orbits: Value = serde_json::from_slice(&out.stdout).unwrap();
    let reps: Vec<&str> = orbits["orbits"].as_array().unwrap().iter().map(|o| o["representative"].as_str().unwrap()).collect();
    assert_eq!(reps, ["0", "-1"]);

    let out = coarsekit(d, &["group", "tk", "--group", "Z", "--radius", "12", "--action", "translation"]);
    let tk: Value = serde_json::from_slice(&out.stdout).unwrap();
    let n: Vec<u64> = tk["n"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(n, (0..=12).collect::<Vec<_>>());

    let out = coarsekit(d, &["group", "constant", "--group", "Z", "--radius", "10", "--action", "shift:0,2,10"]);
    let c: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(c["c"], 2);
}

#[test]
fn extension_pipeline_writes_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("ext.json"), PLANE).unwrap();
    let out = coarsekit(d, &["pipeline", "extension", "ext.json", "--out-dir", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = json(&d.join("out/provenance.json"));
    let roles: Vec<&str> = log["files"].as_array().unwrap().iter().map(|f| f["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["quotient", "subgroup", "family", "fibers", "final"]);
    assert!(log["files"].as_array().unwrap().iter().all(|f| f["verdict"] == "pass"));
    assert_eq!(log["stages"][3]["parameters"]["S_X"], "12/1");
    assert!(log["stages"][1]["parameters"].get("C").is_some());
    // every written certificate verifies again from disk
    for role in roles {
        let out = coarsekit(d, &["verify", &format!("out/{role}.json")]);
        assert_eq!(out.status.code(), Some(0), "{role}");
    }
}

#[test]
fn undersized_window_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("ext.json"), PLANE.replace("\"radius\": 10", "\"radius\": 1")).unwrap();
    let out = coarsekit(d, &["pipeline", "extension", "ext.json", "--out-dir", "out"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("action-to-se-family"), "{err}");
}

#[test]
fn whole_subgroup_passes_through() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("ext.json"),
        PLANE.replace(r#"{"kind": "zero-coords", "coords": [0]}"#, r#"{"kind": "whole"}"#),
    )
    .unwrap();
    let out = coarsekit(d, &["pipeline", "extension", "ext.json", "--out-dir", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&d.join("out/provenance.json"))["degenerate"], "whole-group");
    let sub = json(&d.join("out/subgroup.json"));
    let fin = json(&d.join("out/final.json"));
    assert_eq!(sub["field"]["vectors"], fin["field"]["vectors"]);
}

#[test]
fn reports_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("ext.json"), PLANE).unwrap();
    for t in ["1", "8"] {
        let out = coarsekit(
            d,
            &["--threads", t, "--seed", "7", "pipeline", "extension", "ext.json", "--out-dir", &format!("t{t}")],
        );
        assert!(out.status.success());
    }
    for f in ["report.json", "provenance.json", "final.json", "family.report.json"] {
        let a = std::fs::read(d.join("t1").join(f)).unwrap();
        let b = std::fs::read(d.join("t8").join(f)).unwrap();
        assert!(a == b, "{f} differs across thread counts");
    }
    assert_eq!(json(&d.join("t1/report.json"))["seed"], 7);
}

#[test]
fn space_build_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = coarsekit(d, &["space", "build", "--group", "Z2", "--radius", "3", "--quotient", "zero-coords:0", "--inline", "-o", "q.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let q = json(&d.join("q.json"));
    assert_eq!(q["source"], "inline");
    assert_eq!(q["points"].as_array().unwrap().len(), 7);
    assert_eq!(coarsekit(d, &["space", "check", "q.json"]).status.code(), Some(0));

    // d(a,c) = 5 > d(a,b) + d(b,c) = 2
    std::fs::write(
        d.join("bad.json"),
        r#"{"source": "inline", "points": ["a", "b", "c"], "dist": [[], ["1"], ["5", "1"]]}"#,
    )
    .unwrap();
    assert_eq!(coarsekit(d, &["space", "check", "bad.json"]).status.code(), Some(1));
}
