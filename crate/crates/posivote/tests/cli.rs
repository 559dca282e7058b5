use std::path::PathBuf;
use std::process::{Command, Output};

fn posivote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posivote"))
        .args(args)
        .env_remove("POSIVOTE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn cap_at_r1_is_one() {
    let out = posivote(&["cap", "--r", "1", "--s", "0.5"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "r,s,cap\n1.0,0.5,1.0\n");
}

#[test]
fn non_weighted_curves_at_k1_are_flat() {
    let out = posivote(&["curves", "--methods", "q-nw", "--k", "1", "--s", "0.5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,k,s,r,m_over_n,ratio"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 201);
    for row in rows {
        assert_eq!(row.rsplit(',').next(), Some("1.0"), "{row}");
    }
}

#[test]
fn full_sweep_has_45_series() {
    let out = posivote(&["curves", "--methods", "all", "--k", "1,3,5", "--s", "0.2,0.5,0.8", "--r", "0:2:0.01"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut keys: Vec<(String, String, String)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string(), f[2].to_string())
        })
        .collect();
    assert_eq!(keys.len(), 45 * 201);
    keys.dedup();
    assert_eq!(keys.len(), 45);
}

#[test]
fn output_file_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = posivote(&["curves", "--k", "3", "--s", "0.5", "--methods", "all", "--output", path.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let a = std::fs::read(a).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(b).unwrap());
}

#[test]
fn aggregate_fixture() {
    for file in ["three_ballots.json", "three_ballots.csv"] {
        let out = posivote(&["aggregate", "--ballots", &fixture(file), "--dim", "0", "--method", "q-lw", "--format", "json"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!((v["mu"].as_f64().unwrap() - 0.6875).abs() < 1e-12);
        assert_eq!(v["m_hat"], 1);
    }
    let out = posivote(&["aggregate", "--ballots", &fixture("three_ballots.json"), "--method", "q-nw"]);
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "q-nw");
    assert_eq!(row[2], "0.875");
}

#[test]
fn aggregate_over_budget_reports_cost() {
    let out = posivote(&["aggregate", "--ballots", &fixture("three_ballots.json"), "--p", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("16"), "{err}");
}

#[test]
fn missing_ballot_file() {
    let out = posivote(&["aggregate", "--ballots", "/nonexistent/ballots.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/ballots.json"));
}

#[test]
fn unknown_subcommand_and_flag() {
    let out = posivote(&["plot"]);
    assert_eq!(out.status.code(), Some(2));
    let out = posivote(&["curves", "--colour", "red"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

fn simulate_with(env_seed: Option<&str>, extra: &[&str]) -> String {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_posivote"));
    cmd.args(["simulate", "--n", "2000", "--q", "0.2", "--trials", "3"]).args(extra);
    match env_seed {
        Some(seed) => cmd.env("POSIVOTE_SEED", seed),
        None => cmd.env_remove("POSIVOTE_SEED"),
    };
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn first_seed(csv: &str) -> String {
    csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string()
}

#[test]
fn seed_precedence() {
    assert_eq!(first_seed(&simulate_with(None, &[])), "42");
    assert_eq!(first_seed(&simulate_with(Some("7"), &[])), "7");
    assert_eq!(first_seed(&simulate_with(Some("7"), &["--seed", "9"])), "9");
    assert_eq!(simulate_with(Some("5"), &[]), simulate_with(None, &["--seed", "5"]));
}

#[test]
fn simulate_json_report() {
    let text = simulate_with(None, &["--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["trials"].as_array().unwrap().len(), 3);
    let table = simulate_with(None, &["--format", "table"]);
    assert!(table.trim_end().ends_with("PASS"));
}

#[test]
fn simulate_failure_exits_nonzero() {
    // a minority needs a second dimension to concentrate away from
    let out = posivote(&["simulate", "--n", "10", "--m", "1", "--k", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[cfg(unix)]
#[test]
fn serve_answers_and_dumps_on_interrupt() {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpStream;
    use std::process::Stdio;

    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("sessions.json");
    let mut child = Command::new(env!("CARGO_BIN_EXE_posivote"))
        .args(["serve", "--port", "0", "--output", dump.to_str().unwrap()])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    stderr.read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").expect(&line).to_string();

    let body = r#"{"k":2,"rule":{"voting":"linear","p":10},"method":"l-lw"}"#;
    let mut stream = TcpStream::connect(&addr).unwrap();
    stream
        .set_read_timeout(Some(std::time::Duration::from_secs(10)))
        .unwrap();
    write!(
        stream,
        "POST /sessions HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    assert!(response.starts_with("HTTP/1.1 201"), "{response}");

    let status = Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(child.wait().unwrap().success());
    let dumped: serde_json::Value = serde_json::from_slice(&std::fs::read(&dump).unwrap()).unwrap();
    assert_eq!(dumped.as_array().unwrap().len(), 1);
}
