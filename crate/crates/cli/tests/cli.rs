use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SQUARE: &str = "POLYLINK 1\ncomponents 1\nvertices 4\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n";

fn ropewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ropewalk")).args(args).env_remove("ROPEWALK_STYLE").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn info_reports_the_square() {
    let dir = TempDir::new().unwrap();
    let sq = write(&dir, "square.link", SQUARE);
    let out = ropewalk(&["info", s(&sq)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("PRop        8.0000"), "{text}");
    assert!(text.contains("PThi        0.5"));
    assert!(text.contains("struts      2 (2 intra-component)"));
}

#[test]
fn info_json_keys() {
    let dir = TempDir::new().unwrap();
    let sq = write(&dir, "square.link", SQUARE);
    let out = ropewalk(&["info", s(&sq), "--json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["components"], 1);
    assert_eq!(v["vertices"], 4);
    assert_eq!(v["pthi"], 0.5);
    assert_eq!(v["prop"], 8.0);
    assert_eq!(v["struts"], 2);
    assert_eq!(v["governing"]["kind"], "kink");
    for key in ["total_length", "min_minrad", "delta", "intra_component_struts"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.link", "");
    let bad = write(&dir, "bad.link", "POLYLINE 7\n");
    let crossing = write(&dir, "bowtie.link", "POLYLINK 1\ncomponents 1\nvertices 4\n0 0 0\n1 1 0\n1 0 0\n0 1 0\n");
    let sq = write(&dir, "square.link", SQUARE);
    assert_eq!(ropewalk(&["info", s(&dir.path().join("missing.link"))]).status.code(), Some(2));
    assert_eq!(ropewalk(&["info", s(&empty)]).status.code(), Some(2));
    assert_eq!(ropewalk(&["info"]).status.code(), Some(2));
    assert_eq!(ropewalk(&["info", s(&sq), "--delta", "-1"]).status.code(), Some(2));
    assert_eq!(ropewalk(&["--threads", "0", "info", s(&sq)]).status.code(), Some(2));
    let out = ropewalk(&["info", s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    assert_eq!(ropewalk(&["info", s(&crossing)]).status.code(), Some(4));
    assert_eq!(ropewalk(&["tighten", "--seed", "pretzel:3"]).status.code(), Some(2));
}

#[test]
fn struts_csv_carries_forces() {
    let dir = TempDir::new().unwrap();
    let sq = write(&dir, "square.link", SQUARE);
    let csv = dir.path().join("struts.csv");
    assert!(ropewalk(&["struts", s(&sq), "--out", s(&csv)]).status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0,0,0.5,0,2,0.5,1.0,"));
    assert!(lines[2].starts_with("0,1,0.5,0,3,0.5,1.0,"));
    assert_eq!(stdout(&ropewalk(&["struts", s(&sq)])), text);
}

#[test]
fn contactmap_is_deterministic_and_styled() {
    let dir = TempDir::new().unwrap();
    let sq = write(&dir, "square.link", SQUARE);
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    assert!(ropewalk(&["contactmap", s(&sq), "--out", s(&a)]).status.success());
    assert!(ropewalk(&["contactmap", s(&sq), "--out", s(&b)]).status.success());
    let svg = fs::read(&a).unwrap();
    assert_eq!(svg, fs::read(&b).unwrap());
    assert!(String::from_utf8_lossy(&svg).contains("<svg"));

    let style = write(&dir, "style.txt", "# custom fill\nbox_fill = #123456\n");
    let c = dir.path().join("c.svg");
    let out = Command::new(env!("CARGO_BIN_EXE_ropewalk"))
        .args(["contactmap", s(&sq), "--out", s(&c)])
        .env("ROPEWALK_STYLE", &style)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&c).unwrap().contains("#123456"));
}

#[test]
fn smoothbound_of_square_is_a_circle() {
    let dir = TempDir::new().unwrap();
    let sq = write(&dir, "square.link", SQUARE);
    let out = ropewalk(&["smoothbound", s(&sq), "--json"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["prop"], 8.0);
    assert!((v["smooth_bound"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn tighten_round_polygon_converges_immediately() {
    let dir = TempDir::new().unwrap();
    let out_link = dir.path().join("c.link");
    let log = dir.path().join("c.csv");
    let out = ropewalk(&["tighten", "--seed", "circle:64", "--out", s(&out_link), "--log", s(&log)]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("Converged"));
    assert_eq!(fs::read_to_string(&log).unwrap().lines().count(), 1);
    let info: Value = serde_json::from_slice(&ropewalk(&["info", s(&out_link), "--json"]).stdout).unwrap();
    assert!((info["pthi"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn tighten_is_reproducible_and_reads_vect() {
    let dir = TempDir::new().unwrap();
    let vect = write(
        &dir,
        "hopf.vect",
        &{
            let mut t = String::from("VECT\n2 24 0\n-12 -12\n0 0\n");
            for k in 0..12 {
                let a = std::f64::consts::TAU * k as f64 / 12.0;
                t += &format!("{} {} 0\n", a.cos(), a.sin());
            }
            for k in 0..12 {
                let a = std::f64::consts::TAU * k as f64 / 12.0;
                t += &format!("{} 0 {}\n", 1.0 + a.cos(), a.sin());
            }
            t
        },
    );
    let run = |tag: &str| {
        let log = dir.path().join(format!("{tag}.csv"));
        let link = dir.path().join(format!("{tag}.link"));
        let out = ropewalk(&["tighten", s(&vect), "--max-steps", "5", "--log", s(&log), "--out", s(&link)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read(&log).unwrap(), fs::read(&link).unwrap())
    };
    let (log_a, link_a) = run("a");
    let (log_b, link_b) = run("b");
    assert_eq!(log_a, log_b);
    assert_eq!(link_a, link_b);
    let text = String::from_utf8(log_a).unwrap();
    assert!(text.starts_with("step_index,length_before"));
    assert_eq!(text.lines().count(), 6);
}
