use gaussconvex::cylinder::{open_grid, partition};
use serde_json::Value;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussconvex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn cylinder_table_shape() {
    let out = run(&["cylinder-table", "--n", "2", "--grid", "99"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,k,R,s,phi,ps"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 198);
    assert!(rows.iter().all(|r| r.split(',').count() == 6));
}

#[test]
fn saint_venant_report_fields() {
    let out = run(&[
        "verify",
        "--check",
        "saint-venant",
        "--body",
        "ball:R=1",
        "--n",
        "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    for key in [
        "check", "lhs", "rhs", "margin", "verdict", "config", "version",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["config"]["n"], 2);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    let (lhs, rhs) = (v["lhs"].as_f64().unwrap(), v["rhs"].as_f64().unwrap());
    assert!(lhs < rhs);
}

#[test]
fn violation_exits_one() {
    let out = run(&["verify", "--check", "halfspace-alpha", "--a", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], "violation");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(
        run(&["measure", "--body", "ball:R=-1"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["measure"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--check", "nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["specfun", "--fn", "psi-inv", "--x", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn numerical_failure_exits_three() {
    let out = run(&[
        "measure",
        "--body",
        "lp:r=1,p=1.5",
        "--n",
        "3",
        "--max-panels",
        "1",
        "--tol",
        "1e-14",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn counterexample_search_exits_zero_with_witness() {
    let out = run(&[
        "verify",
        "--check",
        "counterexample",
        "--transform",
        "phi_inv",
        "--family",
        "balls",
        "--sizes",
        "3",
        "--grid",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "witness_found");
    assert_eq!(v["details"]["first_witness"]["confirmed"], true);
}

#[test]
fn config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(&[
        "config",
        "--n",
        "3",
        "--seed",
        "17",
        "--tol",
        "3e-12",
        "--body",
        "interp:lambda=0.25;ball:R=1|box:a=1/2/3",
    ]);
    assert_eq!(first.status.code(), Some(0));
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, &first.stdout).unwrap();
    let second = run(&["config", "--config", path.to_str().unwrap()]);
    assert_eq!(first.stdout, second.stdout);
    let over = run(&["config", "--config", path.to_str().unwrap(), "--n", "2"]);
    assert!(String::from_utf8(over.stdout).unwrap().contains("n = 2\n"));
}

#[test]
fn reports_are_written_under_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "measure",
        "--body",
        "box:a=0.5/1",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--out",
        "sub/m.json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("sub/m.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let m = v["results"][0]["measure"]["value"].as_f64().unwrap();
    let want = libm::erf(0.5 / 2f64.sqrt()) * libm::erf(1.0 / 2f64.sqrt());
    assert!((m - want).abs() < 1e-12);
    assert_eq!(v["config"]["seed"], 20240917);
}

#[test]
fn specfun_values() {
    let v = json(&run(&["specfun", "--fn", "psi", "--x", "-1.5"]));
    assert!((v["value"].as_f64().unwrap() - 0.5 * libm::erfc(1.5 / 2f64.sqrt())).abs() < 1e-16);
    let v = json(&run(&["specfun", "--fn", "j", "--p", "1", "--x", "2"]));
    assert!((v["value"].as_f64().unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-14);
}

#[test]
fn partition_crossings_csv() {
    let text = String::from_utf8(run(&["partition", "--n", "2", "--crossings"]).stdout).unwrap();
    assert_eq!(text.lines().next(), Some("kind,i,j,a"));
    assert!(text.lines().any(|l| l.starts_with("phi,1,2,")));
    assert!(text.lines().any(|l| l.starts_with("s,1,2,")));
}

/// Polylines of the SVG as (label, points) in pixel coordinates.
fn curves(svg: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out = Vec::new();
    for chunk in svg.split("<polyline").skip(1) {
        let pts = chunk
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        let label = chunk
            .split("<title>")
            .nth(1)
            .unwrap()
            .split("</title>")
            .next()
            .unwrap();
        let pts = pts
            .split_whitespace()
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        out.push((label.to_string(), pts));
    }
    out
}

#[test]
fn phi12_figure_crosses_once_where_the_partition_says() {
    let out = run(&["plot", "--figure", "phi12", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let svg = String::from_utf8(out.stdout).unwrap();
    assert!(svg.starts_with("<?xml") && svg.contains("version=\"1.1\""));
    let c = curves(&svg);
    assert_eq!(c.len(), 2);
    assert_eq!((c[0].0.as_str(), c[1].0.as_str()), ("phi_1", "phi_2"));
    let (p1, p2) = (&c[0].1, &c[1].1);
    assert_eq!(p1.len(), p2.len());
    // SVG y grows downwards; only the sign of the gap matters.
    let gaps: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| b.1 - a.1).collect();
    let flips: Vec<usize> = (1..gaps.len())
        .filter(|&i| gaps[i - 1] * gaps[i] < 0.0)
        .collect();
    assert_eq!(flips.len(), 1, "crossings at {flips:?}");
    let i = flips[0];
    let a = |k: usize| 0.01 + 0.98 * k as f64 / (p1.len() - 1) as f64;
    let alpha = partition(2, &open_grid(999))
        .unwrap()
        .last_phi_crossing(1, 2)
        .unwrap();
    assert!(
        a(i - 1) <= alpha && alpha <= a(i),
        "{} {alpha} {}",
        a(i - 1),
        a(i)
    );
}

#[test]
fn other_figures_render() {
    for (fig, count) in [("s12", 2), ("phi-s", 4), ("phi-diff", 1)] {
        let out = run(&["plot", "--figure", fig, "--n", "2", "--grid", "50"]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(
            curves(&String::from_utf8(out.stdout).unwrap()).len(),
            count,
            "{fig}"
        );
    }
    assert_eq!(run(&["plot", "--figure", "nope"]).status.code(), Some(2));
}
