use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tuckercheb"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary_field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .trim()
        .to_string()
}

fn stats(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn product_of_variables_is_rank_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("xyz.tcheb");
    let o = run(&["approx", "--expr", "x*y*z", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(summary_field(&stdout(&o), "ranks"), "[1, 1, 1]");
    let s = stats(&out.with_extension("json"));
    assert_eq!(s["version"], 1);
    assert_eq!(s["ranks"], serde_json::json!([1, 1, 1]));
    assert_eq!(&fs::read(&out).unwrap()[..7], b"TCHEB3F");

    // A Chebyshev grid crossing on the 17-point grids reproduces the sample.
    let c = |j: f64| (j * std::f64::consts::PI / 16.0).cos();
    let (x, y, z) = (c(3.0), c(10.0), c(7.0));
    let o = run(&[
        "eval",
        "--in",
        path_str(&out),
        "--at",
        &x.to_string(),
        &y.to_string(),
        &z.to_string(),
        "--compare-expr",
        "x*y*z",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,z,value,exact,abs_error"));
    let err: f64 = lines.next().unwrap().split(',').nth(5).unwrap().parse().unwrap();
    assert!(err <= 1e-14, "{err}");
}

#[test]
fn explicit_stats_path_and_points_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("a.tcheb");
    let st = dir.path().join("stats.json");
    let o = run(&[
        "approx",
        "--expr",
        "exp(x*y)*cos(z)",
        "--tol",
        "1e-10",
        "--out",
        path_str(&out),
        "--stats",
        path_str(&st),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stats(&st)["certified"].as_bool().unwrap());

    let pts = dir.path().join("pts.csv");
    fs::write(&pts, "x,y,z\n0.1,0.2,0.3\n-0.5,0.25,-1\n").unwrap();
    let csv_out = dir.path().join("vals.csv");
    let o = run(&[
        "eval",
        "--in",
        path_str(&out),
        "--points",
        path_str(&pts),
        "--out",
        path_str(&csv_out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&csv_out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "x,y,z,value");
    assert_eq!(rows.len(), 3);
    let v: f64 = rows[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!((v - (0.02f64).exp() * 0.3f64.cos()).abs() < 1e-8);
}

#[test]
fn out_of_domain_point_warns_but_evaluates() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("a.tcheb");
    assert_eq!(code(&run(&["approx", "--expr", "x+y", "--out", path_str(&out)])), 0);
    let o = run(&["eval", "--in", path_str(&out), "--at", "1.5", "0", "0"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("outside [-1,1]^3"), "{}", stderr(&o));
    let v: f64 = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    // Extrapolation amplifies coefficient round-off by about T_16(1.5) ~ 1e7.
    assert!((v - 1.5).abs() < 1e-7, "{v}");
}

#[test]
fn coshinv_needs_no_refinement() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c.tcheb");
    let o = run(&["approx", "--fn", "coshinv", "--tol", "1e-12", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stats(&out.with_extension("json"));
    assert_eq!(s["phases"]["refinement"]["total"], 0);
    assert_eq!(s["fine_dims"], s["coarse_dims"]);
}

#[test]
fn runge_restarts_and_is_one_at_the_origin() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.tcheb");
    let o = run(&["approx", "--fn", "runge3", "--tol", "1e-12", "--out", path_str(&out)]);
    // The cone point at the origin keeps the Halton error above 10·tol, so the
    // run ends uncertified with its own exit code.
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    let s = stats(&out.with_extension("json"));
    assert!(s["restarts"].as_u64().unwrap() >= 1);
    assert_eq!(s["certified"], false);

    let o = run(&["eval", "--in", path_str(&out), "--at", "0", "0", "0"]);
    assert_eq!(code(&o), 0);
    let v: f64 = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!((v - 1.0).abs() <= 10.0 * 1e-12, "{v}");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&run(&["approx", "--expr", "x+*y"])), 3);
    assert_eq!(code(&run(&["approx", "--expr", "foo(x)"])), 3);
    assert_eq!(code(&run(&["approx", "--expr", "log(x)"])), 4);
    assert_eq!(code(&run(&["approx"])), 2);
    assert_eq!(code(&run(&["approx", "--expr", "x", "--fn", "runge3"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["approx", "--fn", "no-such"])), 1);

    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.tcheb");
    assert_eq!(
        code(&run(&["eval", "--in", path_str(&missing), "--at", "0", "0", "0"])),
        1
    );

    let out = dir.path().join("a.tcheb");
    assert_eq!(code(&run(&["approx", "--expr", "x*y", "--out", path_str(&out)])), 0);
    let bytes = fs::read(&out).unwrap();
    let cut = dir.path().join("cut.tcheb");
    fs::write(&cut, &bytes[..bytes.len() - 3]).unwrap();
    assert_eq!(code(&run(&["eval", "--in", path_str(&cut), "--at", "0", "0", "0"])), 3);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "0.1,0.2\n").unwrap();
    assert_eq!(
        code(&run(&["eval", "--in", path_str(&out), "--points", path_str(&bad)])),
        3
    );
    fs::write(&bad, "0.1,0.2,0.3\n0.1,abc,0.3\n").unwrap();
    assert_eq!(
        code(&run(&["eval", "--in", path_str(&out), "--points", path_str(&bad)])),
        3
    );
}

const HEADER: &str = "function,tol,seed,status,restarts,rank1,rank2,rank3,degree1,degree2,degree3,\
phase1_total,phase1_distinct,phase2_total,phase2_distinct,phase3_total,phase3_distinct,\
verify_total,verify_distinct,total_calls,distinct_points,fine_product,halton_error,vscale,wall_ms,message";

fn without_wall_time(csv: &str) -> Vec<Vec<String>> {
    let wall = HEADER.split(',').position(|c| c == "wall_ms").unwrap();
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            r.iter()
                .enumerate()
                .filter(|&(i, _)| i != wall)
                .map(|(_, v)| v.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn bench_csv_schema_and_determinism() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "bench".to_string(),
            "--fns".into(),
            "separable-demo,expdist,unknown".into(),
            "--tol".into(),
            "1e-10".into(),
            "--seed".into(),
            "3".into(),
            "--out".into(),
            path_str(p).to_string(),
        ]
    };
    let run_owned = |v: Vec<String>| run(&v.iter().map(String::as_str).collect::<Vec<_>>());
    let o = run_owned(args(&a));
    // One failing function does not abort the batch; the exit code reports it.
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stdout(&o).contains("separable-demo"));
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some(HEADER));
    assert_eq!(text.lines().count(), 4);
    let rows = without_wall_time(&text);
    assert_eq!(rows[0][3], "certified");
    assert_eq!(rows[1][3], "certified");
    assert_eq!(rows[2][3], "error");
    for row in &rows[..2] {
        let halton: f64 = row[22].parse().unwrap();
        let vscale: f64 = row[23].parse().unwrap();
        assert!(halton <= 10.0 * 1e-10 * vscale);
    }

    run_owned(args(&b));
    assert_eq!(rows, without_wall_time(&fs::read_to_string(&b).unwrap()));
}

#[test]
fn rank_degree_study() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rd.csv");
    let o = run(&[
        "study",
        "rankdeg",
        "--eps-list",
        "1e-1,1e-2,1e-3",
        "--grid",
        "40",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,degree,rank"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[2] <= v[1], "{line}");
    }
    let o = run(&["study", "rankdeg", "--grid", "1000"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--grid"));
}
