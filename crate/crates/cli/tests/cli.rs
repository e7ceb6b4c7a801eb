use std::f64::consts::E;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qhgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhgeo")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn value(out: &str, key: &str) -> f64 {
    out.lines().find_map(|l| l.strip_prefix(key)).map(|v| v.trim().parse().unwrap()).unwrap_or_else(|| panic!("no {key} in {out}"))
}

fn csv_points(path: &Path) -> Vec<(f64, f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("phi,x,y"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

const PUNCTURED: &str = r#"{"boundary": [[0, 0]]}"#;
const SQUARE: &str = r#"{"polygon": [[0, 0], [1, 0], [1, 1], [0, 1]], "samples_per_unit": 1}"#;

#[test]
fn distance_matches_closed_form_and_oracle() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.json", PUNCTURED);
    let y = format!("{E},0");
    let o = qhgeo(&["distance", "--input", s(&input), "--x", "1,0", "--y", &y]);
    assert_eq!(code(&o), 0, "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("engine 1.000000"), "{out}");
    assert!((value(&out, "oracle") - 1.0).abs() <= 0.01);
    assert!(value(&out, "relative_gap") <= 0.01);
}

#[test]
fn coincident_points_are_at_distance_zero() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.json", PUNCTURED);
    let o = qhgeo(&["distance", "--input", s(&input), "--x", "0.3,-0.2", "--y", "0.3,-0.2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(value(&stdout(&o), "engine"), 0.0);
}

#[test]
fn input_errors_exit_with_3() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"boundary\": [[0, 0]");
    let o = qhgeo(&["distance", "--input", s(&bad), "--x", "1,0", "--y", "2,0"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed domain JSON"));

    let p = write(&dir, "p.json", PUNCTURED);
    for args in [
        vec!["distance", "--input", s(&p), "--x", "0,0", "--y", "1,0"],
        vec!["distance", "--input", s(&p), "--x", "1;0", "--y", "1,0"],
        vec!["distance", "--input", "/nonexistent/domain.json", "--x", "1,0", "--y", "2,0"],
        vec!["verify", "--suite", "nonexistent", "--seed", "7", "--output", s(dir.path())],
        vec!["verify", "--suite", "algebraic", "--output", s(dir.path())],
        vec!["ball", "--input", s(&p), "--x", "1,0", "--r", "0.5", "--samples", "15", "--output", "b.svg"],
        vec!["ball", "--input", s(&p), "--x", "1,0", "--r", "-1", "--output", "b.svg"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&qhgeo(&args)), 3, "{args:?}");
    }
}

#[test]
fn punctured_ball_is_an_exp_image_circle() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.json", PUNCTURED);
    let svg = dir.path().join("ball.svg");
    let o = qhgeo(&["ball", "--input", s(&input), "--x", "1,0", "--r", "0.5", "--samples", "16", "--geodesics", "4", "--output", s(&svg)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let pts = csv_points(&svg.with_extension("csv"));
    assert!(pts.len() >= 16);
    for (_, x, y) in pts {
        let r = (x.hypot(y).ln()).hypot(y.atan2(x));
        assert!((r - 0.5).abs() <= 1e-8, "{r}");
    }
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<polygon") && text.matches("<polyline").count() == 4);
}

#[test]
fn tiny_ball_polygon_is_convex() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.json", r#"{"boundary": [[0, 0], [1.2, 0.3], [0.4, 1.1], [-0.7, 0.8], [0.5, -0.9]]}"#);
    let (svg, csv) = (dir.path().join("b.svg"), dir.path().join("b.csv"));
    let o = qhgeo(&["ball", "--input", s(&input), "--x", "0.35,0.45", "--r", "0.009", "--output", s(&svg), "--csv", s(&csv)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let p = csv_points(&csv);
    let n = p.len();
    let turns: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b, c) = (p[k], p[(k + 1) % n], p[(k + 2) % n]);
            (b.1 - a.1) * (c.2 - b.2) - (b.2 - a.2) * (c.1 - b.1)
        })
        .collect();
    assert!(turns.iter().all(|&t| t > 0.0) || turns.iter().all(|&t| t < 0.0));
}

#[test]
fn ball_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.json", r#"{"boundary": [[0, 0], [1, 0], [0.3, 0.8]]}"#);
    let run = |name: &str, parallel: bool| {
        let svg = dir.path().join(name);
        let mut args = vec!["ball", "--input", s(&input), "--x", "0.45,0.3", "--r", "1.2", "--geodesics", "8", "--output", s(&svg)];
        if parallel {
            args.push("--parallel");
        }
        assert_eq!(code(&qhgeo(&args)), 0);
        (std::fs::read(&svg).unwrap(), std::fs::read(svg.with_extension("csv")).unwrap())
    };
    let a = run("a.svg", false);
    assert_eq!(a, run("b.svg", false));
    assert_eq!(a, run("c.svg", true));
    let text = String::from_utf8(a.0).unwrap();
    let layers: Vec<usize> = ["nuclei", "edges", "ball", "geodesics"].iter().map(|l| text.find(&format!("<g id=\"{l}\"")).unwrap()).collect();
    assert!(layers.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn geodesic_json_and_shot() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.json", PUNCTURED);
    let (json, svg) = (dir.path().join("g.json"), dir.path().join("g.svg"));
    let o = qhgeo(&["geodesic", "--input", s(&input), "--x", "2,0", "--y", "-2,0", "--output", s(&json), "--svg", s(&svg)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["unique"], false);
    assert_eq!(v["paths"].as_array().unwrap().len(), 2);
    assert!((v["distance"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 2);

    let o = qhgeo(&["geodesic", "--input", s(&input), "--x", "1,0", "--phi", "0", "--length", "1"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["paths"][0]["total_qh_len"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["distance"].is_null());
}

#[test]
fn verify_writes_per_statement_reports() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r");
    let o = qhgeo(&["verify", "--suite", "algebraic", "--seed", "7", "--trials", "100000", "--output", s(&out)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let csv = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    for id in ["prop_curv_d2", "prop_curv_d3", "prop_curv_d8", "prop_distcurv"] {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join(format!("{id}.json"))).unwrap()).unwrap();
        assert_eq!(v["failures"], 0);
        assert_eq!(v["trials"], 100000);
    }
    assert_eq!(stdout(&o), csv);
}

#[test]
fn approximation_ladder_is_monotone() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "sq.json", SQUARE);
    let o = qhgeo(&["approximate", "--input", s(&input), "--x", "0.5,0.5", "--y", "0.6,0.5", "--levels", "4..7"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let table = stdout(&o);
    let rows: Vec<Vec<String>> = table.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    let nuclei: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(nuclei, [64, 128, 256, 512]);
    let d: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] >= w[0] - 1e-3), "{table}");
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn coarsest_level_equals_direct_domain() {
    let dir = TempDir::new().unwrap();
    let poly = write(&dir, "sq.json", SQUARE);
    let direct = write(&dir, "four.json", r#"{"boundary": [[0, 0], [1, 0], [1, 1], [0, 1]]}"#);
    let o = qhgeo(&["approximate", "--input", s(&poly), "--x", "0.3,0.4", "--y", "0.7,0.55", "--levels", "0..0"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    let level0: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    let o = qhgeo(&["distance", "--input", s(&direct), "--x", "0.3,0.4", "--y", "0.7,0.55", "--skip-oracle"]);
    assert!((value(&stdout(&o), "engine") - level0).abs() <= 1e-6);
}

#[test]
fn approximate_rejects_bad_polygons_and_points() {
    let dir = TempDir::new().unwrap();
    let bowtie = write(&dir, "bow.json", r#"{"polygon": [[0, 0], [1, 1], [1, 0], [0, 1]], "samples_per_unit": 2}"#);
    let o = qhgeo(&["approximate", "--input", s(&bowtie), "--x", "0.5,0.2", "--y", "0.5,0.3"]);
    assert_eq!(code(&o), 3);
    let sq = write(&dir, "sq.json", SQUARE);
    let o = qhgeo(&["approximate", "--input", s(&sq), "--x", "1.5,0.5", "--y", "0.5,0.5"]);
    assert_eq!(code(&o), 3);
    let pts = write(&dir, "pts.json", PUNCTURED);
    let o = qhgeo(&["approximate", "--input", s(&pts), "--x", "1,0", "--y", "2,0"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn oracle_compare_on_random_pairs() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "d.json", r#"{"boundary": [[0, 0], [1, 0.2], [0.4, 1], [-0.6, 0.5], [0.2, -0.8], [1.3, -0.5]]}"#);
    let csv = dir.path().join("cmp.csv");
    let o = qhgeo(&["oracle-compare", "--input", s(&input), "--trials", "3", "--seed", "11", "--output", s(&csv)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    for l in text.lines().skip(1) {
        let gap: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(gap <= 0.02);
    }
    // an impossible tolerance is a numeric failure
    let o = qhgeo(&["oracle-compare", "--input", s(&input), "--x", "0.5,0.5", "--y", "-0.2,0.1", "--tol", "1e-12"]);
    assert_eq!(code(&o), 2);
}
