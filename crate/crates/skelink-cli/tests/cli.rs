use std::path::Path;
use std::process::{Command, Output};

fn skelink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skelink")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    skelink(&all)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

fn parse_svg(text: &str) -> [f64; 4] {
    let doc = roxmltree::Document::parse(text).expect("well-formed svg");
    let vb: Vec<f64> = doc.root_element().attribute("viewBox").unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
    [vb[0], vb[1], vb[2], vb[3]]
}

#[test]
fn malformed_scene_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("bad.json");
    std::fs::write(&scene, "{\n  \"regions\": [ {\"id\": 1,, } ]\n}").unwrap();
    let out = run_in(dir.path(), &["medial", "--scene", scene.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn too_few_samples_and_unknown_names_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["medial", "--scene", "ellipse", "--n", "16"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["medial", "--scene", "no_such_scene"]).status.code(), Some(2));
    let bad_mode = run_in(dir.path(), &["linking", "--scene", "two_disks", "--bounding", "truncated"]);
    assert_eq!(bad_mode.status.code(), Some(2));
    assert_eq!(skelink(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn ellipse_axis_has_one_chain_and_two_tips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["medial", "--scene", "ellipse", "--n", "256"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let axes = json(dir.path(), "medial.json");
    let axis = &axes[0];
    assert_eq!(axis["chains"].as_array().unwrap().len(), 1);
    let tips = axis["nodes"].as_array().unwrap().iter().filter(|n| n["kind"] == "A3").count();
    assert_eq!(tips, 2);
    let sample = &axis["chains"][0]["samples"][0];
    for key in ["x", "r", "u_plus", "u_minus", "kappa_r_plus", "rho_plus", "weight"] {
        assert!(sample.get(key).is_some(), "missing {key}");
    }
    parse_svg(&read(dir.path(), "medial.svg"));
}

#[test]
fn invariants_are_deterministic_and_dot_matches_json() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["invariants", "--scene", "two_disks", "--n", "128", "--tau-sweep", "1.5,2.5"];
    assert!(run_in(a.path(), &args).status.success());
    assert!(run_in(b.path(), &args).status.success());
    for f in ["invariants.json", "graph.dot", "tau_sweep.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs between runs");
    }
    let j = json(a.path(), "invariants.json");
    assert_eq!(j["report"]["c_pair"].as_array().unwrap().len(), 1);
    let graph = &j["graph"];
    let dot = read(a.path(), "graph.dot");
    let edges = dot.lines().filter(|l| l.contains("--")).count();
    let nodes = dot.lines().filter(|l| l.contains("[label=") && !l.contains("--")).count();
    assert_eq!(nodes, graph["vertices"].as_array().unwrap().len());
    assert_eq!(edges, graph["edges"].as_array().unwrap().len());
    assert_eq!(read(a.path(), "tau_sweep.csv").lines().next(), Some("tau,kind,a,b,value"));
}

#[test]
fn clusters_separate_at_high_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["graph", "--scene", "three_clusters", "--n", "128", "--b", "0.01"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let j = json(dir.path(), "graph.json");
    assert_eq!(j["thresholded"]["components"].as_array().unwrap().len(), 3);
    parse_svg(&read(dir.path(), "graph.svg"));
}

#[test]
fn render_writes_well_formed_svgs_framing_the_scene() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["render", "--scene", "two_disks", "--n", "128"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = skelink::scene::two_disks().build(128).unwrap();
    let (lo, hi) = skelink::render::view_box(&config);
    let expect = [lo.x, -hi.y, hi.x - lo.x, hi.y - lo.y];
    for f in ["medial.svg", "linking.svg", "spherical.svg", "graph.svg", "flow_t0p25.svg", "flow_t1.svg"] {
        let vb = parse_svg(&read(dir.path(), f));
        for k in 0..4 {
            assert!((vb[k] - expect[k]).abs() < 1e-4, "{f}: {vb:?} vs {expect:?}");
        }
    }
}

#[test]
fn flow_rejects_times_outside_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["flow", "--scene", "two_disks", "--n", "128", "--t", "0.5,1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(dir.path(), &["flow", "--scene", "two_disks", "--n", "128"]);
    assert!(out.status.success());
    let audit = json(dir.path(), "flow.json");
    assert_eq!(audit["crossings"].as_array().unwrap().len(), 0);
}

#[test]
fn validate_exit_codes_and_repeatable_report() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ok = run_in(a.path(), &["validate", "--scene", "ellipse", "--n", "512", "--seed", "3"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    run_in(b.path(), &["validate", "--scene", "ellipse", "--n", "512", "--seed", "3"]);
    assert_eq!(read(a.path(), "validation.json"), read(b.path(), "validation.json"));
    let coarse = run_in(a.path(), &["validate", "--scene", "bean", "--n", "64"]);
    assert_eq!(coarse.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&coarse.stdout).contains("FAIL"));
}
