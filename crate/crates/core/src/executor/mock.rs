use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExecutorError, IoRegistry, IoSignature};
use crate::order::{ActionCatalog, Poset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureMode {
    Always,
    /// Fails on the first invocation only.
    Once,
}

/// Mock tool table plus the ground-truth dependencies used by the oracle
/// planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub registry: IoRegistry,
    #[serde(default)]
    pub truth_edges: Vec<[String; 2]>,
    #[serde(default)]
    pub failures: BTreeMap<String, FailureMode>,
    /// Blackboard fields present before the first action.
    #[serde(default)]
    pub initial: BTreeMap<String, String>,
}

impl Scenario {
    pub fn from_json(json: &str) -> Result<Self, ExecutorError> {
        Ok(serde_json::from_str(json)?)
    }

    /// Registry actions in lexicographic order.
    pub fn catalog(&self) -> ActionCatalog {
        ActionCatalog::new(self.registry.keys()).expect("map keys are distinct")
    }

    /// Closure of `truth_edges` over `catalog`.
    pub fn truth_poset(&self, catalog: &ActionCatalog) -> Result<Poset, ExecutorError> {
        let edges = self
            .truth_edges
            .iter()
            .map(|[a, b]| Ok((catalog.resolve(a)?, catalog.resolve(b)?)))
            .collect::<Result<Vec<_>, ExecutorError>>()?;
        Ok(Poset::transitive_closure(catalog.len(), edges)?)
    }
}

/// `<field stem>-<8 hex digits>`, where the stem is the lowercased field
/// name without a trailing `Id`/`Ids`.
pub fn mock_token(seed: u64, action: &str, field: &str) -> String {
    let stem = field
        .strip_suffix("Ids")
        .or_else(|| field.strip_suffix("Id"))
        .filter(|s| !s.is_empty())
        .unwrap_or(field)
        .to_lowercase();
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(action.as_bytes());
    h.update([0]);
    h.update(field.as_bytes());
    format!("{stem}-{}", &hex::encode(h.finalize())[..8])
}

/// Stateful stand-in for the real tools of one run.
#[derive(Debug, Clone)]
pub struct MockTools<'a> {
    scenario: &'a Scenario,
    seed: u64,
    calls: BTreeMap<String, usize>,
}

impl<'a> MockTools<'a> {
    pub fn new(scenario: &'a Scenario, seed: u64) -> Self {
        MockTools {
            scenario,
            seed,
            calls: BTreeMap::new(),
        }
    }

    /// Outputs of `action`, or an error message. Inputs are assumed filled.
    pub fn invoke(
        &mut self,
        action: &str,
        _inputs: &BTreeMap<String, String>,
    ) -> Result<BTreeMap<String, String>, String> {
        let n = self.calls.entry(action.to_string()).or_default();
        *n += 1;
        match self.scenario.failures.get(action) {
            Some(FailureMode::Always) => return Err(format!("{action} failed")),
            Some(FailureMode::Once) if *n == 1 => return Err(format!("{action} failed")),
            _ => {}
        }
        let sig = self
            .scenario
            .registry
            .get(action)
            .ok_or_else(|| format!("unknown action {action}"))?;
        Ok(sig
            .outputs
            .iter()
            .map(|f| (f.clone(), mock_token(self.seed, action, f)))
            .collect())
    }

    pub fn calls(&self, action: &str) -> usize {
        self.calls.get(action).copied().unwrap_or(0)
    }
}

fn sig(inputs: &[&str], outputs: &[&str]) -> IoSignature {
    IoSignature {
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    }
}

fn edges(pairs: &[(&str, &str)]) -> Vec<[String; 2]> {
    pairs.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect()
}

/// VPC, then switch and security group side by side, then the instance.
pub fn s1_scenario() -> Scenario {
    let registry = [
        ("CreateVpc", sig(&["RegionId"], &["VpcId"])),
        ("CreateVSwitch", sig(&["VpcId", "ZoneId"], &["VSwitchId"])),
        ("CreateSecurityGroup", sig(&["VpcId"], &["SecurityGroupId"])),
        (
            "RunInstances",
            sig(&["VSwitchId", "SecurityGroupId"], &["InstanceIds"]),
        ),
    ];
    Scenario {
        registry: registry.into_iter().map(|(a, s)| (a.to_string(), s)).collect(),
        truth_edges: edges(&[
            ("CreateVpc", "CreateVSwitch"),
            ("CreateVpc", "CreateSecurityGroup"),
            ("CreateVSwitch", "RunInstances"),
            ("CreateSecurityGroup", "RunInstances"),
        ]),
        failures: BTreeMap::new(),
        initial: [("RegionId", "cn-hangzhou"), ("ZoneId", "cn-hangzhou-h")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
    }
}

/// [`s1_scenario`] with an ingress rule on the security group before the
/// instance starts.
pub fn s1_security_scenario() -> Scenario {
    let mut s = s1_scenario();
    s.registry.insert(
        "AuthorizeSecurityGroup".into(),
        sig(&["SecurityGroupId"], &["PermissionId"]),
    );
    s.truth_edges = edges(&[
        ("CreateVpc", "CreateVSwitch"),
        ("CreateVpc", "CreateSecurityGroup"),
        ("CreateSecurityGroup", "AuthorizeSecurityGroup"),
        ("CreateVSwitch", "RunInstances"),
        ("AuthorizeSecurityGroup", "RunInstances"),
    ]);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_are_deterministic() {
        let t = mock_token(7, "CreateVpc", "VpcId");
        assert!(t.starts_with("vpc-") && t.len() == 12);
        assert_eq!(t, mock_token(7, "CreateVpc", "VpcId"));
        assert_ne!(t, mock_token(8, "CreateVpc", "VpcId"));
        assert!(mock_token(0, "RunInstances", "InstanceIds").starts_with("instance-"));
        assert!(mock_token(0, "X", "Id").starts_with("id-"));
    }

    #[test]
    fn invoke_outputs_and_failures() {
        let mut s = s1_scenario();
        let inputs = BTreeMap::from([("RegionId".to_string(), "r".to_string())]);
        let out = MockTools::new(&s, 3).invoke("CreateVpc", &inputs).unwrap();
        assert_eq!(out.keys().collect::<Vec<_>>(), ["VpcId"]);
        assert_eq!(out["VpcId"], mock_token(3, "CreateVpc", "VpcId"));

        s.failures.insert("CreateVpc".into(), FailureMode::Once);
        let mut tools = MockTools::new(&s, 3);
        assert!(tools.invoke("CreateVpc", &inputs).is_err());
        assert!(tools.invoke("CreateVpc", &inputs).is_ok());
        assert_eq!(tools.calls("CreateVpc"), 2);

        s.failures.insert("CreateVpc".into(), FailureMode::Always);
        let mut tools = MockTools::new(&s, 3);
        assert!(tools.invoke("CreateVpc", &inputs).is_err());
        assert!(tools.invoke("CreateVpc", &inputs).is_err());
    }

    #[test]
    fn scenario_json_round_trip() {
        let mut s = s1_security_scenario();
        s.failures.insert("RunInstances".into(), FailureMode::Once);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"once\""));
        assert_eq!(Scenario::from_json(&json).unwrap(), s);
        let minimal = Scenario::from_json(r#"{"registry": {"A": {"outputs": ["X"]}}}"#).unwrap();
        assert_eq!(minimal.catalog().names(), ["A"]);
        assert!(Scenario::from_json(r#"{"registry": {"A": {}}, "truth_edges": [["A", "B"]]}"#)
            .unwrap()
            .truth_poset(&minimal.catalog())
            .is_err());
    }
}
