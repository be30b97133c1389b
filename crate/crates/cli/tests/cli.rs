use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use graphon_turing_cli::ExperimentConfig;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_graphon-turing"));
    c.env_remove("GRAPHON_TURING_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, column: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == column).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

const SMALL_RING: &str = r#"
sizes = [40]

[graphon]
kind = "small_world"
p = 0.9
q = 0.01
alpha = 0.2

[seeds]
base = 3
count = 2

[model]
r = 1.0
b = 1.0
kappa = { index = 2 }
profile_epsilon = 0.002

[matching]
k_star = 1
delta = 0.03
gamma = 0.1
l3_radius = 0.1
"#;

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_RING);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for cmd in ["spectrum", "bifurcate"] {
        for (out, jobs) in [(&a, "1"), (&b, "3")] {
            let o = run(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs]);
            assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.contains_key(Path::new("bifurcate/N40-seed4/branch.csv")));
    assert!(fa.contains_key(Path::new("bifurcate/N40-deterministic/profile.csv")));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (k, v) in &fa {
        assert!(v == &fb[k], "{} differs between reruns", k.display());
    }
}

#[test]
fn every_output_directory_has_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_RING);
    let out = tmp.path().join("out");
    assert!(run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    let dir = out.join("spectrum");
    for e in fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            let m = json(&p.join("metadata.json"));
            assert_eq!(m["status"], "ok");
            assert_eq!(m["config"]["seeds"]["base"], 3);
            assert_eq!(m["version"], graphon_turing::VERSION);
        }
    }
    let top = json(&dir.join("metadata.json"));
    assert_eq!(top["tasks"].as_array().unwrap().len(), 3);
    let header = fs::read_to_string(dir.join("N40-seed3/eigenvalues.csv")).unwrap();
    assert!(header.starts_with("N,index,eigenvalue,normalized\n"));
}

#[test]
fn printed_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_RING);
    let once = run(&["bifurcate", "--config", cfg.to_str().unwrap(), "--print-config"]);
    assert!(once.status.success());
    let text = String::from_utf8(once.stdout).unwrap();
    let again = ExperimentConfig::from_toml(&text).unwrap().to_toml();
    assert_eq!(text, again);
    for cmd in ["spectrum", "bifurcate", "resonance", "bipartite", "concentration"] {
        let o = run(&[cmd, "--print-config", "--seed", "9"]);
        let text = String::from_utf8(o.stdout).unwrap();
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.seeds.base, 9);
        assert_eq!(cfg.to_toml(), text);
    }
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_config(tmp.path(), &format!("{SMALL_RING}\n[extra]\nx = 1\n"));
    let o = run(&["spectrum", "--config", unknown.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["spectrum", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = write_config(tmp.path(), &SMALL_RING.replace("p = 0.9", "p = 1.5"));
    assert_eq!(run(&["spectrum", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let no_model = write_config(tmp.path(), "sizes = [10]\n[graphon]\nkind = \"erdos_renyi\"\np = 0.5\n");
    assert_eq!(run(&["bifurcate", "--config", no_model.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["bipartite", "--config", no_model.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_3_and_record_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_RING.replace("kappa = { index = 2 }", "kappa = { largest_near = { center = 3.0, radius = 0.01 } }");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let o = run(&["bifurcate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let m = json(&out.join("bifurcate/N40-seed3/metadata.json"));
    assert_eq!(m["status"], "failed");
    assert!(m["diagnostics"][0].as_str().unwrap().contains("no eigenvalue"));
    assert_eq!(json(&out.join("bifurcate/metadata.json"))["status"], "failed");
}

#[test]
fn output_root_falls_back_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sizes = [6]\n[graphon]\nkind = \"erdos_renyi\"\np = 0.5\n");
    let root = tmp.path().join("envroot");
    let o = bin()
        .args(["spectrum", "--config", cfg.to_str().unwrap()])
        .env("GRAPHON_TURING_OUT", &root)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(root.join("spectrum/N6-deterministic/eigenvalues.csv").exists());
}

#[test]
fn complete_graph_spectrum_is_minus_p() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sizes = [2, 30]\n[graphs]\nrandom = false\n[graphon]\nkind = \"erdos_renyi\"\np = 0.3\n",
    );
    let out = tmp.path().join("out");
    assert!(run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    for n in [2, 30] {
        let norm: Vec<f64> = csv_column(&out.join(format!("spectrum/N{n}-deterministic/eigenvalues.csv")), "normalized")
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(norm.len(), n);
        assert!(norm[0].abs() < 1e-12);
        assert!(norm[1..].iter().all(|l| (l + 0.3).abs() < 1e-12), "{norm:?}");
    }
}

#[test]
fn deterministic_branch_is_a_pitchfork() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_RING.replace("sizes = [40]", "sizes = [100]").replace("count = 2", "count = 1");
    let cfg = write_config(tmp.path(), &format!("{text}\n[graphs]\nrandom = false\n"));
    let out = tmp.path().join("out");
    let o = run(&["bifurcate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ev = json(&out.join("bifurcate/N100-deterministic/events.json"));
    assert!(ev["fit"]["a2"].as_f64().unwrap().abs() < 1e-6);
    assert!(ev["profile"]["dominant_mode"] == 1);
    let stable = csv_column(&out.join("bifurcate/N100-deterministic/branch.csv"), "stable");
    assert!(stable.iter().all(|s| s == "true" || s == "false"));
}

#[test]
fn bipartite_with_equal_groups_merges_the_middle_cluster() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sizes = [60]\n[graphon]\nkind = \"bipartite\"\np = 0.5\nalpha = 0.5\n",
    );
    let out = tmp.path().join("out");
    assert!(run(&["bipartite", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    let p = json(&out.join("bipartite/N60-deterministic/prediction.json"));
    assert_eq!(p["merged_middle"], true);
    let rows = csv_column(&out.join("bipartite/N60-seed1/profile.csv"), "u");
    assert_eq!(rows.len(), 60);
}

#[test]
fn concentration_writes_one_row_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sizes = [20, 40]\n[seeds]\ncount = 4\n[graphon]\nkind = \"small_world\"\np = 0.9\nq = 0.01\nalpha = 0.2\n",
    );
    let out = tmp.path().join("out");
    assert!(run(&["concentration", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    let seeds = csv_column(&out.join("concentration/concentration.csv"), "seed");
    assert_eq!(seeds, ["1", "2", "3", "4", "1", "2", "3", "4"]);
    let r = json(&out.join("concentration/N40/concentration.json"));
    assert_eq!(r["ratios"].as_array().unwrap().len(), 4);
}
