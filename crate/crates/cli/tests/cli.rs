use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sturmian-cocycle"));
    c.env_remove("STURMIAN_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn stderr_record(o: &Output) -> Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(err.lines().last().expect("a failure record")).expect("failure record is JSON")
}

#[test]
fn gaps_emit_depth_rows_with_halving_lengths() {
    let o = run(&["gaps", "--depth", "5", "--alpha", "gold2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n,left,right,length,h");
    assert_eq!(lines.len(), 6);
    for (n, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], n.to_string());
        let length: f64 = fields[3].parse().unwrap();
        assert!((length - 0.5f64.powi(n as i32 + 1)).abs() < 1e-15);
    }
    assert!(text.contains("# alpha: gold2\n") && text.contains("# depth: 5\n"));
}

#[test]
fn pure_sweep_of_period_two() {
    let o = run(&["sweep", "--period-max", "2", "--family", "pure"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# sturmian measure: mu_I0 = 0, lambda1 = 0.22314355131420976\n"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "orbit_id,period,mu_I0_num,mu_I0_den,lambda1,bound,margin");
    assert!(lines[1].starts_with("1:0,1,1,1,0.0,"));
    assert!(lines[2].starts_with("2:01,2,1,2,0.0,"));
    assert_eq!(lines.len(), 3);
}

#[test]
fn json_mirrors_csv() {
    let csv = stdout(&run(&["gaps", "--depth", "4"]));
    let json: Value = serde_json::from_str(&stdout(&run(&["gaps", "--depth", "4", "--format", "json"]))).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), data_lines(&csv).len() - 1);
    assert_eq!(rows[2]["length"].as_f64(), Some(0.125));
    assert_eq!(json["meta"]["command"], "gaps");
    assert_eq!(json["meta"]["seed"], "0");
}

#[test]
fn output_is_byte_stable_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for threads in ["1", "4", "4"] {
        let path = dir.path().join(format!("sweep-{}.csv", bodies.len()));
        let o = bin()
            .env("RAYON_NUM_THREADS", threads)
            .args(["sweep", "--period-max", "8", "--out", path.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
        bodies.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[1], bodies[2]);
}

#[test]
fn seed_determines_monte_carlo_output() {
    let args = ["herman-check", "--iters", "2000", "--points", "3", "--depth", "2", "--seed", "9"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let other = run(&["herman-check", "--iters", "2000", "--points", "3", "--depth", "2", "--seed", "10"]);
    assert_ne!(run(&args).stdout, other.stdout);
}

#[test]
fn parameters_must_satisfy_c_above_epsilon() {
    let o = run(&["gaps", "--epsilon", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let rec = stderr_record(&o);
    assert_eq!(rec["status"], "invalid-config");
    assert!(rec["error"].as_str().unwrap().contains("c > ε > 0"));
    assert_eq!(run(&["gaps", "--epsilon", "0"]).status.code(), Some(2));
    assert_eq!(run(&["gaps", "--gamma", "1"]).status.code(), Some(2));
    assert!(run(&["gaps", "--gamma", "4", "--epsilon", "0.5"]).status.success());
}

#[test]
fn c_and_gamma_are_exclusive() {
    assert_eq!(run(&["gaps", "--c", "0.3", "--gamma", "2"]).status.code(), Some(2));
    let text = stdout(&run(&["gaps", "--depth", "1", "--c", "0.6931471805599453"]));
    assert!(text.contains("# gamma: 3.73205080756887"));
}

#[test]
fn precision_defaults_from_environment() {
    let o = bin().env("STURMIAN_PRECISION", "192").args(["gaps", "--depth", "2"]).output().unwrap();
    assert!(stdout(&o).contains("# precision: 192\n"));
    let o = bin().env("STURMIAN_PRECISION", "192").args(["gaps", "--depth", "2", "--precision", "256"]).output().unwrap();
    assert!(stdout(&o).contains("# precision: 256\n"));
}

#[test]
fn failed_check_exits_nonzero_with_record() {
    // Ten steps are far too few for the exponent to settle.
    let o = run(&["sturmian-exponent", "--iters", "10", "--points", "10"]);
    assert_eq!(o.status.code(), Some(1));
    let rec = stderr_record(&o);
    assert_eq!(rec["status"], "failed");
    assert_eq!(rec["command"], "sturmian-exponent");
    assert_eq!(rec["failures"][0]["check"], "Sturmian exponent equals c");
    assert!(!data_lines(&stdout(&o)).is_empty());
}

#[test]
fn checks_pass_at_small_scale() {
    for args in [
        &["herman-check", "--iters", "200000", "--points", "4", "--depth", "10"][..],
        &["family-audit", "--points", "6", "--samples", "3", "--iters", "200"],
        &["lemma-key", "--depth", "4", "--samples", "10"],
        &["sturmian-exponent", "--iters", "200000"],
        &["--family", "pure", "lemma-key", "--depth", "2", "--samples", "4"],
    ] {
        let o = run(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn figure_data_commands() {
    let text = stdout(&run(&["staircase", "--points", "16"]));
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 17);
    let h: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(h.windows(2).all(|w| w[1] >= w[0] - 1e-20));
    let text = stdout(&run(&["phi", "--depth", "3", "--points", "32"]));
    for line in &data_lines(&text)[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let phi: f64 = f[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&phi));
        assert!(f[1].is_empty() || f[1].parse::<usize>().unwrap() < 3);
    }
    let text = stdout(&run(&["demo-shift", "--depth", "3"]));
    assert_eq!(data_lines(&text), ["k,word_exponent,circle_exponent", "1,0.0,", "2,0.0,0.0", "3,0.0,0.0"]);
}
