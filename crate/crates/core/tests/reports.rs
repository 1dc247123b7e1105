use std::path::Path;

use morreylab::harness::{estimate_constant, make_case, Draft, Provenance};
use morreylab::suite::{emit_report, parse_config, read_report, run_suite, Format};
use morreylab::VerificationReport;
use serde_json::Value;

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

// Checks the keywords the shipped schema uses.
fn conforms(v: &Value, s: &Value, at: &str) -> Result<(), String> {
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().filter_map(|x| x.as_str()).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{at}: expected {types:?}, got {v}"));
        }
    }
    if let Some(Value::Array(options)) = s.get("enum") {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in enum"));
        }
    }
    if let (Some(min), Some(x)) = (s.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            return Err(format!("{at}: {x} < {min}"));
        }
    }
    if let (Some(min), Some(x)) = (s.get("exclusiveMinimum").and_then(Value::as_f64), v.as_f64()) {
        if x <= min {
            return Err(format!("{at}: {x} <= {min}"));
        }
    }
    if let Value::Object(obj) = v {
        let props = s.get("properties").and_then(Value::as_object);
        for key in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{at}: missing {key}"));
            }
        }
        for (k, x) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => conforms(x, sub, &format!("{at}.{k}"))?,
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{at}: unexpected key {k}"));
                }
                None => {}
            }
        }
    }
    if let (Value::Array(xs), Some(items)) = (v, s.get("items")) {
        for (i, x) in xs.iter().enumerate() {
            conforms(x, items, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

fn sample_report() -> VerificationReport {
    let mut d = Draft::new("hardy-2.4");
    d.param("p", 2.0);
    for (i, (s, l, r)) in [(0, 1.0, 3.0), (0, 0.1, 0.7), (1, 2.0, 3.0), (1, 1e-300, 2.0), (2, 5.5, 7.0)].iter().enumerate() {
        d.push(make_case(format!("case-{i}"), *s, *l, *r));
    }
    d.push(make_case("zero-rhs", 2, 1.0, 0.0));
    estimate_constant(d, 1.5, Provenance { seed: 7, config_hash: "abc".into(), version: "0.1.0".into() }).unwrap()
}

#[test]
fn emit_then_read_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let r = sample_report();
    let paths = emit_report(&r, dir.path(), &[Format::Json, Format::Csv]).unwrap();
    assert_eq!(paths.len(), 2);
    assert_eq!(read_report(&paths[0]).unwrap(), r);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
    conforms(&v, &schema(), "$").unwrap();
}

#[test]
fn csv_agrees_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let r = sample_report();
    emit_report(&r, dir.path(), &[Format::Json, Format::Csv]).unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("hardy-2.4.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["case_id", "scale_index", "lhs", "rhs", "ratio"]);
    let rows: Vec<(String, f64)> = rd
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].to_string(), rec[4].parse().unwrap())
        })
        .collect();
    let json: Vec<(String, f64)> = r.cases.iter().map(|c| (c.case_id.clone(), c.ratio)).collect();
    assert_eq!(rows, json);
}

#[test]
fn empty_report_has_reason() {
    let dir = tempfile::tempdir().unwrap();
    let r = estimate_constant(Draft::new("trace-3.5"), 1.5, Provenance::default()).unwrap();
    let paths = emit_report(&r, dir.path(), &[Format::Json]).unwrap();
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
    conforms(&v, &schema(), "$").unwrap();
    assert_eq!(v["cases"], serde_json::json!([]));
    assert_eq!(v["pass"], false);
    assert!(v["reason"].is_string());
    assert!(v["empirical_constant"].is_null());
}

#[test]
fn schema_rejects_missing_keys() {
    let mut v = serde_json::to_value(sample_report()).unwrap();
    v.as_object_mut().unwrap().remove("provenance");
    assert!(conforms(&v, &schema(), "$").is_err());
}

#[test]
fn counterexample_run_writes_sweep_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("ids = [\"counterexample-2.9\"]\noutput_dir = {:?}\n", dir.path().to_str().unwrap());
    let cfg = parse_config(&text).unwrap();
    let (reports, summary) = run_suite(&cfg).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(summary.all_pass, reports[0].pass);
    for f in ["counterexample-2.9.json", "counterexample-2.9.csv", "counterexample-2.9-sweep.json", "counterexample-2.9-sweep.csv", "summary.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let sweep: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("counterexample-2.9-sweep.json")).unwrap()).unwrap();
    assert!((sweep["slope_bdu"].as_f64().unwrap() + 2.0).abs() <= 0.15);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("counterexample-2.9.json")).unwrap()).unwrap();
    conforms(&v, &schema(), "$").unwrap();
}

#[test]
fn failed_suite_is_recorded_and_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    // κ list that the grid cannot resolve
    let text = format!(
        "ids = [\"counterexample-2.9\", \"truncated-2.6\"]\noutput_dir = {:?}\n[grid]\nd = 3\nL = 2.0\nn = 33\n[sweep]\nkappas = [0.25, 0.125]\np = 2.0\nd = 3\nn = 9\n",
        dir.path().to_str().unwrap()
    );
    let cfg = parse_config(&text).unwrap();
    let (reports, summary) = run_suite(&cfg).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(!reports[0].pass && reports[0].reason.is_some());
    assert!(!summary.all_pass);
    assert!(dir.path().join("truncated-2.6.json").exists());
}
