use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn paradiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paradiag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let mut rows = vec![header];
    for rec in r.records() {
        rows.push(rec.unwrap().iter().map(String::from).collect());
    }
    rows
}

#[test]
fn solve_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = paradiag(&[
        "solve",
        "--N",
        "32",
        "--m",
        "15",
        "--gamma",
        "1e-2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = read_csv(&out);
    assert_eq!(
        rows[0],
        [
            "gamma",
            "N",
            "J",
            "NoU",
            "preconditioner",
            "iter",
            "cpu_s",
            "error",
            "converged"
        ]
    );
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][..5], ["1e-2", "32", "225", "7200", "palpha"]);
    assert_eq!(rows[1][8], "true");
}

#[test]
fn nonconvergence_exits_two_and_keeps_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = paradiag(&[
        "solve",
        "--N",
        "16",
        "--m",
        "7",
        "--precond",
        "none",
        "--maxit",
        "1",
        "--tol",
        "1e-14",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let rows = read_csv(&out);
    assert_eq!(rows[1][4], "none");
    assert_eq!(rows[1][5], "1");
    assert_eq!(rows[1][8], "false");
}

#[test]
fn invalid_configs_exit_one() {
    for args in [
        &["solve", "--gamma", "0"][..],
        &["solve", "--N", "0"],
        &["solve", "--spatial", "multigrid", "--m", "10"],
        &["solve", "--precond", "jacobi"],
        &["solve", "--alpha", "2"],
        &["solve", "--config", "/nonexistent/run.toml"],
        &["reproduce", "--table", "3"],
    ] {
        let o = paradiag(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("run.csv");
    fs::write(
        &cfg,
        "problem = \"example2\"\ngamma = 0.1\nN = 8\nm = 7\nprecond = \"msc\"\n",
    )
    .unwrap();
    let o = paradiag(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--N",
        "12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = read_csv(&out);
    assert_eq!(rows[1][..5], ["1e-1", "12", "49", "588", "msc"]);
}

#[test]
fn custom_problem_with_variable_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("custom.toml");
    let out = dir.path().join("run.csv");
    fs::write(
        &cfg,
        r#"problem = "custom"
gamma = 0.01
N = 10
m = 15
spatial = "multigrid"
cycles = 2
coefficient = "1 + 0.5 * x1 * x2"
source = "0"
target = "x1 * (1 - x1) * x2 * (1 - x2)"
y0 = "0"
mask = "x1 > 0.25"
"#,
    )
    .unwrap();
    let o = paradiag(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = read_csv(&out);
    // no reference solution, no error value
    assert_eq!(rows[1][7], "");
    assert_eq!(rows[1][8], "true");
}

#[test]
fn reproduce_desk_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<Vec<String>>> = (0..2)
        .map(|k| {
            let out = dir.path().join(format!("t1_{k}.csv"));
            let o = paradiag(&[
                "reproduce",
                "--table",
                "1",
                "--scale",
                "desk",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(o.status.code(), Some(0));
            read_csv(&out)
        })
        .collect();
    assert_eq!(runs[0].len(), 11);
    let cpu = runs[0][0].iter().position(|h| h == "cpu_s").unwrap();
    let strip = |rows: &Vec<Vec<String>>| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != cpu)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect()
    };
    assert_eq!(strip(&runs[0]), strip(&runs[1]));
    let matched = runs[0].iter().skip(1).filter(|r| r[11] == "pass").count();
    assert_eq!(matched, 10);
}

#[test]
fn bench_trivial_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let o = paradiag(&[
        "bench",
        "--N",
        "1,2",
        "--m",
        "3",
        "--repeats",
        "1",
        "--threads",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = read_csv(&out);
    assert_eq!(
        rows[0],
        ["preconditioner", "threads", "N", "J", "apply_s", "exponent"]
    );
    assert_eq!(rows.len(), 5);
    assert!(rows[1][5].parse::<f64>().is_ok());
}
