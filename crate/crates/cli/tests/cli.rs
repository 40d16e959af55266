use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_landau-lab");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const MAXWELLIAN: &str = r#"
[grid]
dimension = 2
points = 32

[initial]
kind = "maxwellian"

[solver]
t_end = 0.01
record_every = 0.002
"#;

fn columns(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // no output path anywhere
    let cfg = write_config(dir.path(), "m.toml", MAXWELLIAN);
    assert_eq!(run(&["simulate", &cfg]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "/nonexistent/run.toml"]).status.code(), Some(2));
    let bad = write_config(dir.path(), "bad.toml", &MAXWELLIAN.replace("dimension = 2", "dimension = 4"));
    assert_eq!(run(&["simulate", &bad, "--output", "x.csv"]).status.code(), Some(2));
    assert_eq!(run(&["t0", "--d", "3", "--tmax", "3.0"]).status.code(), Some(2));
    assert_eq!(run(&["gamma2", "--d", "4"]).status.code(), Some(2));
    // a step far beyond the stability limit aborts the solver
    let unstable = write_config(dir.path(), "u.toml", &MAXWELLIAN.replace("[solver]", "[solver]\ndt = 0.5"));
    let out = dir.path().join("u.csv");
    assert_eq!(run(&["simulate", &unstable, "--output", out.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn maxwellian_run_stays_at_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MAXWELLIAN);
    let csv = dir.path().join("nested/m.csv");
    let out = run(&["simulate", &cfg, "--output", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = columns(&std::fs::read_to_string(&csv).unwrap());
    assert_eq!(&header[..9], &["t", "H", "H_rel", "D_dasI", "D_rel", "ddtD_fd", "ddtD_formula", "good", "bad"]);
    assert_eq!(header.last().unwrap(), "l1_exact");
    assert_eq!(rows.len(), 6);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for row in &rows {
        assert!(row[col("D_dasI")].parse::<f64>().unwrap().abs() <= 2e-2);
        assert!(row[col("D_rel")].parse::<f64>().unwrap().abs() <= 1e-12);
        assert!((row[col("mass")].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(row[col("good")], "");
    }
}

#[test]
fn simulation_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = MAXWELLIAN.replace("kind = \"maxwellian\"", "kind = \"gaussian\"\ncovariance = [1.3, 0.7]");
    let cfg = write_config(dir.path(), "g.toml", &text);
    let read = |name: &str| {
        let csv = dir.path().join(name);
        assert!(run(&["simulate", &cfg, "--output", csv.to_str().unwrap()]).status.success());
        std::fs::read(csv).unwrap()
    };
    assert_eq!(read("a.csv"), read("b.csv"));
}

#[test]
fn t0_reports_all_quantities() {
    let out = run(&["t0"]);
    assert!(out.status.success());
    let (header, rows) = columns(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(header, ["quantity", "value"]);
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        names,
        ["lambda", "cbar", "t0_explicit", "t0_implicit", "lambda_delta", "alpha_lower", "beta_lower"]
    );
    let unit = run(&["t0", "--tmax", "1.0"]);
    let (_, rows) = columns(&String::from_utf8(unit.stdout).unwrap());
    for r in rows.iter().filter(|r| r[0].starts_with("t0_")) {
        assert_eq!(r[1].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn gamma2_explicit_members() {
    let out = run(&["gamma2", "--family", "cos2theta", "--members", "0.5;1.0", "--resolution", "64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].ends_with("ratio,fourth_lhs,fourth_rhs"));
    assert_eq!(lines[3], "min_ratio,bound");
    let bound: f64 = lines[4].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(bound, 4.0);
    // members without a family are ambiguous
    assert_eq!(run(&["gamma2", "--members", "0.5"]).status.code(), Some(2));
}

#[test]
fn lifted_verify_identities() {
    let dir = tempfile::tempdir().unwrap();
    let text = MAXWELLIAN
        .replace("points = 32", "points = 16")
        .replace("kind = \"maxwellian\"", "kind = \"gaussian\"\ncovariance = [1.5, 0.5]");
    let cfg = write_config(dir.path(), "l.toml", &text);
    let out = run(&["lifted-verify", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = columns(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(header, ["check", "value", "reference", "abs_diff"]);
    for name in ["tensorization_identity", "tensorization_deviation", "tensorization_k"] {
        let row = rows.iter().find(|r| r[0] == name).unwrap();
        let value: f64 = row[1].parse().unwrap();
        let diff: f64 = row[3].parse().unwrap();
        assert!(diff <= 1e-9 * value.abs().max(1.0), "{name}: {diff}");
    }
    let good = rows.iter().find(|r| r[0] == "good_term").unwrap();
    assert_eq!(good[2], "");
    let three_d = write_config(dir.path(), "l3.toml", &MAXWELLIAN.replace("dimension = 2", "dimension = 3"));
    assert_eq!(run(&["lifted-verify", &three_d]).status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        landau_lab::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 5);
}
