//! Trace file formats.
//!
//! Flat: `{"actions": [...], "traces": [[...], ...]}`.
//! Rich: an array of records `{"trace_id", "intent", "action_sequence":
//! [{"step", "action", "params", "output"}, ...]}`, or a single record.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Trace, TraceError, TraceSet};
use crate::order::ActionCatalog;

/// Provenance of a synthesized trace set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Curation {
    pub target: f64,
    pub realized: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatTraceFile {
    pub actions: Vec<String>,
    pub traces: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curation: Option<Curation>,
}

pub fn parse_trace_file(text: &str) -> Result<TraceSet, TraceError> {
    parse_trace_value(&serde_json::from_str(text)?)
}

/// Auto-detects the schema by its top-level shape.
pub fn parse_trace_value(doc: &Value) -> Result<TraceSet, TraceError> {
    match doc {
        Value::Array(records) => parse_rich(records, false),
        Value::Object(obj) if obj.contains_key("traces") => parse_flat(obj),
        Value::Object(obj) if obj.contains_key("action_sequence") => {
            parse_rich(std::slice::from_ref(doc), true)
        }
        _ => Err(schema(
            "$",
            "expected an array of trace records or an object with `traces`",
        )),
    }
}

fn schema(path: impl Into<String>, reason: impl Into<String>) -> TraceError {
    TraceError::Schema {
        path: path.into(),
        reason: reason.into(),
    }
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, TraceError> {
    v.as_str().ok_or_else(|| schema(path, "expected a string"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, TraceError> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn parse_flat(obj: &Map<String, Value>) -> Result<TraceSet, TraceError> {
    let rows = as_array(&obj["traces"], "$.traces")?;
    let mut sequences = Vec::with_capacity(rows.len());
    for (t, row) in rows.iter().enumerate() {
        let path = format!("$.traces[{t}]");
        let names = as_array(row, &path)?
            .iter()
            .enumerate()
            .map(|(k, v)| as_str(v, &format!("{path}[{k}]")).map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        sequences.push(names);
    }
    let catalog = match obj.get("actions") {
        Some(actions) => {
            let names = as_array(actions, "$.actions")?
                .iter()
                .enumerate()
                .map(|(k, v)| as_str(v, &format!("$.actions[{k}]")).map(str::to_string))
                .collect::<Result<Vec<_>, _>>()?;
            ActionCatalog::new(names)?
        }
        None => {
            let mut catalog = ActionCatalog::default();
            for name in sequences.iter().flatten() {
                catalog.intern(name);
            }
            catalog
        }
    };
    let traces = sequences
        .into_iter()
        .enumerate()
        .map(|(t, actions)| Trace::new(format!("trace-{t}"), actions))
        .collect();
    TraceSet::new(catalog, traces)
}

fn parse_rich(records: &[Value], bare: bool) -> Result<TraceSet, TraceError> {
    let mut catalog = ActionCatalog::default();
    let mut traces = Vec::with_capacity(records.len());
    for (r, record) in records.iter().enumerate() {
        let path = if bare { "$".to_string() } else { format!("$[{r}]") };
        let obj = record
            .as_object()
            .ok_or_else(|| schema(&path, "expected a trace record object"))?;
        let id = match obj.get("trace_id") {
            Some(v) => as_str(v, &format!("{path}.trace_id"))?.to_string(),
            None => format!("trace-{r}"),
        };
        let seq_path = format!("{path}.action_sequence");
        let steps = as_array(
            obj.get("action_sequence")
                .ok_or_else(|| schema(&seq_path, "missing"))?,
            &seq_path,
        )?;

        let mut entries = Vec::with_capacity(steps.len());
        for (k, step) in steps.iter().enumerate() {
            let step_path = format!("{seq_path}[{k}]");
            let step_obj = step
                .as_object()
                .ok_or_else(|| schema(&step_path, "expected a step object"))?;
            let number = step_obj
                .get("step")
                .and_then(Value::as_i64)
                .ok_or_else(|| schema(format!("{step_path}.step"), "expected an integer"))?;
            let action = as_str(
                step_obj
                    .get("action")
                    .ok_or_else(|| schema(format!("{step_path}.action"), "missing"))?,
                &format!("{step_path}.action"),
            )?;
            entries.push((number, action, step_obj));
        }
        entries.sort_by_key(|&(number, _, _)| number);

        let mut trace = Trace::new(id, entries.iter().map(|&(_, a, _)| a.to_string()));
        if let Some(intent) = obj.get("intent").and_then(Value::as_str) {
            trace.meta.insert("intent".into(), intent.into());
        }
        for &(_, action, step_obj) in &entries {
            for key in ["params", "output"] {
                if let Some(v) = step_obj.get(key) {
                    trace
                        .meta
                        .insert(format!("{key}.{action}"), serde_json::to_string(v)?);
                }
            }
        }
        for a in &trace.actions {
            catalog.intern(a);
        }
        traces.push(trace);
    }
    TraceSet::new(catalog, traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample_record() -> Value {
        json!({
          "trace_id": "T01_qwen-plus_20260104",
          "intent": "Create a 2-core 4G ECS instance in Hangzhou Zone H",
          "action_sequence": [
            { "step": 1, "action": "CreateVpc",
              "output": {"VpcId": "vpc-9517..."} },
            { "step": 2, "action": "CreateVSwitch",
              "params": {"VpcId": "vpc-9517...", "ZoneId": "cn-hangzhou-h"},
              "output": {"VSwitchId": "vsw-191b..."} },
            { "step": 3, "action": "CreateSecurityGroup",
              "params": {"VpcId": "vpc-9517..."},
              "output": {"SecurityGroupId": "sg-0fae..."} },
            { "step": 4, "action": "RunInstances",
              "params": {"VSwitchId": "vsw-191b...", "SecurityGroupId": "sg-0fae..."},
              "output": {"InstanceId": "i-007d..."} }
          ]
        })
    }

    #[test]
    fn rich_record_projects_actions() {
        let ts = parse_trace_value(&json!([sample_record()])).unwrap();
        assert_eq!(ts.len(), 1);
        let t = &ts.traces()[0];
        assert_eq!(t.id, "T01_qwen-plus_20260104");
        assert_eq!(
            t.actions,
            ["CreateVpc", "CreateVSwitch", "CreateSecurityGroup", "RunInstances"]
        );
        assert!(t.meta["intent"].starts_with("Create a 2-core"));
        assert_eq!(t.meta["output.CreateVpc"], r#"{"VpcId":"vpc-9517..."}"#);
        // a bare record is accepted too
        assert_eq!(parse_trace_value(&sample_record()).unwrap().len(), 1);
    }

    #[test]
    fn steps_are_sorted_before_projection() {
        let mut shuffled = sample_record();
        let steps = shuffled["action_sequence"].as_array_mut().unwrap();
        steps.swap(0, 3);
        steps.swap(1, 2);
        let a = parse_trace_value(&json!([shuffled])).unwrap();
        let b = parse_trace_value(&json!([sample_record()])).unwrap();
        assert_eq!(a.traces()[0].actions, b.traces()[0].actions);
    }

    #[test]
    fn flat_schema() {
        let ts = parse_trace_file(r#"{"actions":["a","b"],"traces":[["a","b"]]}"#).unwrap();
        assert_eq!(ts.encoded(), &[vec![0, 1]]);
        let ts = parse_trace_file(r#"{"traces":[["b","a"],["a"]]}"#).unwrap();
        assert_eq!(ts.catalog().names(), ["b", "a"]);
    }

    #[test]
    fn schema_errors_carry_paths() {
        let err = parse_trace_file(r#"{"traces":[["a", 3]]}"#).unwrap_err();
        assert!(matches!(err, TraceError::Schema { ref path, .. } if path == "$.traces[0][1]"));
        let err = parse_trace_value(&json!([{"trace_id": "x", "action_sequence": [{"action": "a"}]}]))
            .unwrap_err();
        assert!(
            matches!(err, TraceError::Schema { ref path, .. } if path == "$[0].action_sequence[0].step")
        );
        assert!(matches!(
            parse_trace_value(&json!(42)),
            Err(TraceError::Schema { .. })
        ));
    }

    #[test]
    fn duplicate_actions_are_rejected() {
        let doc = json!([{"trace_id": "dup", "action_sequence": [
            {"step": 1, "action": "a"}, {"step": 2, "action": "a"}]}]);
        assert!(matches!(
            parse_trace_value(&doc),
            Err(TraceError::DuplicateAction { trace_id, name }) if trace_id == "dup" && name == "a"
        ));
    }

    #[test]
    fn flat_writer_round_trips() {
        let ts = parse_trace_file(r#"{"actions":["a","b","c"],"traces":[["c","a"]]}"#).unwrap();
        let flat = ts.to_flat(Some(Curation {
            target: 1.0,
            realized: 1.0,
            seed: 7,
        }));
        let text = serde_json::to_string(&flat).unwrap();
        assert!(text.contains(r#""curation":{"target":1.0,"realized":1.0,"seed":7}"#));
        assert_eq!(parse_trace_file(&text).unwrap().encoded(), ts.encoded());
    }
}
