use std::path::{Path, PathBuf};

use serde_json::Value;
use wittenlab::config::{load_config, parse_config};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema() -> Value {
    serde_json::from_str(&std::fs::read_to_string(root().join("schema/experiment.schema.json")).unwrap()).unwrap()
}

fn configs() -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(root().join("configs")).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == "json")).collect();
    v.sort();
    v
}

/// Every key of `value` is declared in `schema`, recursively; required keys are present.
fn conforms(value: &Value, schema: &Value, at: &str) {
    let Some(props) = schema.get("properties").and_then(Value::as_object) else { return };
    let obj = value.as_object().unwrap_or_else(|| panic!("{at}: expected an object"));
    for (k, v) in obj {
        let sub = props.get(k).unwrap_or_else(|| panic!("{at}.{k}: not in schema"));
        conforms(v, sub, &format!("{at}.{k}"));
    }
    for r in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
        assert!(obj.contains_key(r.as_str().unwrap()), "{at}: missing required {r}");
    }
}

#[test]
fn shipped_configs_parse_and_match_the_schema() {
    let s = schema();
    let files = configs();
    assert!(files.len() >= 8);
    for p in files {
        let cfg = load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let raw: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        conforms(&raw, &s, &p.display().to_string());
        let effective = serde_json::to_value(&cfg).unwrap();
        conforms(&effective, &s, &format!("{} (effective)", p.display()));
    }
}

#[test]
fn schema_declares_exactly_the_serialized_settings() {
    let cfg = parse_config(
        r#"{"experiment": "all", "manifold": {"topology": "torus", "dimension": 2, "resolution": 16, "periods": [1, 1]},
            "t_grid": {"min": 0, "max": 10, "count": 11},
            "comparison": {"t_values": [5], "cutoff_eta": 0.1},
            "torsion_formula": {"t_max": 10, "count": 5, "tolerance": 0.1},
            "corpus": {}, "output": "out"}"#,
    )
    .unwrap();
    let v = serde_json::to_value(&cfg).unwrap();
    let s = schema();
    for section in ["manifold", "t_grid", "solver", "morse", "comparison", "torsion_formula", "corpus", "oscillator"] {
        let declared: Vec<&String> = s["properties"][section]["properties"].as_object().unwrap().keys().collect();
        let serialized: Vec<&String> = v[section].as_object().unwrap().keys().collect();
        let (mut a, mut b) = (declared, serialized);
        a.sort();
        b.sort();
        assert_eq!(a, b, "section {section}");
    }
}

#[test]
fn malformed_values_report_their_path() {
    let bad = r#"{"experiment": "x", "manifold": {"topology": "torus", "dimension": 2, "resolution": 8}, "solver": {"overlap_min": 2}}"#;
    match parse_config(bad) {
        Err(wittenlab::Error::Config { path, .. }) => assert_eq!(path, "solver.overlap_min"),
        other => panic!("{other:?}"),
    }
}
