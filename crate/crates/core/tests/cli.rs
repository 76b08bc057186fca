use hallband::cli::table::{Cell, Table};
use serde_json::Value;
use std::process::{Command, Output};

fn hallband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hallband")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bands_range_yields_nine_rows_with_fixed_header() {
    let o = hallband(&["bands", "n=1", "k=0:4:0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,k,lambda,dlambda,err_est,method");
    assert_eq!(lines.len(), 10);
    assert!(text.ends_with('\n'));
    let first: Vec<&str> = lines[1].split(',').collect();
    let lambda: f64 = first[2].parse().unwrap();
    assert!((lambda - 3.0).abs() < 1e-8);
    let mantissa = first[2].split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn precision_floor_exits_three_with_reason() {
    let o = hallband(&["kdelta", "n=1", "delta=1e-12", "--format", "json"]);
    assert_eq!(o.status.code(), Some(3));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reason"], "precision-floor");
    assert_eq!(v["status"], "error");
    let csv = hallband(&["kdelta", "n=1", "delta=1e-12"]);
    assert_eq!(csv.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&csv.stderr).contains("precision-floor"));
}

#[test]
fn validation_failures_exit_two_before_computing() {
    for args in [
        &["bands", "n=0"][..],
        &["bands", "k=4:0:0.5"],
        &["bands", "delta=1e-4"],
        &["bands", "bogus=1"],
        &["bands", "--step", "-1"],
        &["edge", "n=1"],
        &["bulk", "profile=power:0.4"],
        &["localize", "epsilon=1.2"],
        &["nonsense"],
    ] {
        let o = hallband(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = hallband(&["edge", "n=1", "interval=0.5,1.5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reason"], "bulk-interval");
}

#[test]
fn json_output_round_trips_and_carries_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.json");
    let o = hallband(&["kdelta", "n=2", "delta=1e-4,1e-6", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "kdelta");
    assert_eq!(v["config"]["n"], 2);
    let table = Table { columns: serde_json::from_value(v["columns"].clone()).unwrap(), rows: serde_json::from_value(v["rows"].clone()).unwrap() };
    assert_eq!(table.rows.len(), 2);
    let text = serde_json::to_string(&table).unwrap();
    assert_eq!(serde_json::from_str::<Table>(&text).unwrap(), table);
    match &table.rows[1][2] {
        Cell::Float(k) => assert!(*k > 3.5 && *k < 5.0),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = hallband(&["derivative", "n=2", "k=0:3:1", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn flags_override_tokens_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults\nn = 3\nk = 0:1:0.5\ndelta = 1e-4\ncrosscheck = false\n").unwrap();
    let o = hallband(&["bands", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["n"], 3);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["config"]["solver"]["crosscheck"], false);

    let o = hallband(&["bands", "--config", cfg.to_str().unwrap(), "n=2", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["n"], 2);

    let o = hallband(&["bands", "--config", cfg.to_str().unwrap(), "n=2", "--n", "1", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["n"], 1);
    assert_eq!(v["rows"][0][2].as_f64().map(|l| (l - 3.0).abs() < 1e-8), Some(true));
}

#[test]
fn help_documents_every_column() {
    for (cmd, cols) in [
        ("bands", &["n", "k", "lambda", "dlambda", "err_est", "method"][..]),
        ("localize", &["epsilon", "strip_width", "mass", "shape", "ratio", "bound"]),
        ("verify", &["check", "computed", "reference", "deviation", "tolerance", "pass"]),
    ] {
        let o = hallband(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        let docs = text.split("Output columns:").nth(1).unwrap_or_else(|| panic!("{cmd} help lacks columns"));
        for c in cols {
            assert!(docs.lines().any(|l| l.trim_start().starts_with(&format!("{c} "))), "{cmd}: {c}");
        }
    }
}

#[test]
fn edge_and_bulk_commands_produce_rows() {
    let unit = hallband(&["edge", "n=1", "interval=1.5,2.5", "--format", "json"]);
    let scaled = hallband(&["edge", "n=1", "interval=6,10", "b=4", "--format", "json"]);
    assert_eq!(scaled.status.code(), Some(0), "{}", String::from_utf8_lossy(&scaled.stderr));
    let u: Value = serde_json::from_str(&stdout(&unit)).unwrap();
    let v: Value = serde_json::from_str(&stdout(&scaled)).unwrap();
    let (c_minus, c_plus) = (v["rows"][0][6].as_f64().unwrap(), v["rows"][0][7].as_f64().unwrap());
    assert!(c_minus > 0.0 && c_minus <= c_plus);
    assert!((c_minus - 2.0 * u["rows"][0][6].as_f64().unwrap()).abs() < 1e-9 * c_minus);

    let o = hallband(&["bulk", "n=1", "delta=1e-4", "crosscheck=false", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let cols: Vec<String> = serde_json::from_value(v["columns"].clone()).unwrap();
    let get = |name: &str| v["rows"][0][cols.iter().position(|c| c == name).unwrap()].clone();
    assert!(get("current").as_f64().unwrap() < 0.0);
    assert!(get("current").as_f64().unwrap().abs() <= get("current_bound").as_f64().unwrap());
    assert!((get("full_mass").as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(get("profile"), "indicator:0,1");
}

#[test]
fn synthesize_grid_shape() {
    let o = hallband(&["synthesize", "delta=1e-4", "x=0:2:1", "y=-1:1:0.5", "crosscheck=false"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,re,im,modulus");
    assert_eq!(lines.len(), 1 + 3 * 5);
    assert!(lines[1..6].iter().all(|l| l.ends_with(",0.0000000000000000e0")));
}
