//! Scenario documents: one JSON object per file, tagged by `kind`.
//!
//! ```json
//! {"kind": "lottery", "outcomes": ["a", "b"], "p0": [0.5, 0.5], "U": [1, 0], "beta": 1}
//! ```
//!
//! Validation stops at the first violated constraint and names its path
//! (`p0`, `root.children[1].prior`, `transitions[2][0]`, ...). Unknown
//! fields are rejected. [`Scenario::to_canonical_json`] emits a canonical
//! form: fixed key order, shortest round-trip floats, two-space indent and a
//! trailing newline, so saving a loaded scenario is idempotent.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::control::FiniteMdp;
use crate::error::{Error, Result};
use crate::lottery::BoundedLottery;
use crate::measure::{FinitePartition, ProbabilityVector, MASS_TOLERANCE};
use crate::satisficing::DiscreteSource;
use crate::tree::{DecisionTree, NodeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LotteryScenario {
    pub outcomes: Vec<String>,
    pub p0: Vec<f64>,
    #[serde(rename = "U")]
    pub utility: Vec<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncatedPoisson {
    pub lambda: f64,
    pub low: u32,
    pub high: u32,
}

/// A source is given either explicitly or as a truncated Poisson law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatisficeScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated_poisson: Option<TruncatedPoisson>,
    /// Reference distribution `Q` for the Gibbs-versus-maximum comparison;
    /// defaults to the source pmf.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeScenario {
    #[serde(default)]
    pub root_utility: f64,
    pub root: NodeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpScenario {
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: Vec<f64>,
    pub horizon: usize,
    /// β for KL control.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_action: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_obs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    Lottery(LotteryScenario),
    Satisfice(SatisficeScenario),
    Tree(TreeScenario),
    Mdp(MdpScenario),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Lottery(_) => "lottery",
            Payload::Satisfice(_) => "satisfice",
            Payload::Tree(_) => "tree",
            Payload::Mdp(_) => "mdp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub payload: Payload,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let Value::Object(mut obj) = value else {
            return Err(Error::schema("$", "scenario must be a JSON object"));
        };
        let seed = match obj.remove("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| Error::schema("seed", "must be an unsigned 64-bit integer"))?,
            ),
        };
        let kind = match obj.get("kind") {
            Some(Value::String(k)) => k.clone(),
            Some(_) => return Err(Error::schema("kind", "must be a string")),
            None => return Err(Error::schema("kind", "missing")),
        };
        if !["lottery", "satisfice", "tree", "mdp"].contains(&kind.as_str()) {
            return Err(Error::schema(
                "kind",
                format!("unknown kind `{kind}`; expected lottery, satisfice, tree or mdp"),
            ));
        }
        let payload: Payload = serde_json::from_value(Value::Object(obj))
            .map_err(|e| Error::schema(kind.as_str(), e.to_string()))?;
        let scenario = Self { payload, seed };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_canonical_json())?;
        Ok(())
    }

    pub fn to_canonical_json(&self) -> String {
        let mut value = serde_json::to_value(&self.payload).expect("scenario serializes");
        if let (Some(seed), Value::Object(obj)) = (self.seed, &mut value) {
            obj.insert("seed".into(), Value::from(seed));
        }
        let mut out = serde_json::to_string_pretty(&sorted(value)).expect("value serializes");
        out.push('\n');
        out
    }

    /// Hex SHA-256 of the canonical form.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn validate(&self) -> Result<()> {
        match &self.payload {
            Payload::Lottery(l) => l.build().map(drop),
            Payload::Satisfice(s) => {
                s.source()?;
                s.prior_distribution().map(drop)
            }
            Payload::Tree(t) => t.build().map(drop),
            Payload::Mdp(m) => m.build().map(drop),
        }
    }
}

fn sorted(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<_> = m.into_iter().collect();
            keys.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                keys.into_iter()
                    .map(|(k, v)| (k, sorted(v)))
                    .collect::<Map<_, _>>(),
            )
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sorted).collect()),
        other => other,
    }
}

fn probability_vector(path: &str, w: &[f64]) -> Result<ProbabilityVector> {
    if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::schema(
            format!("{path}[{i}]"),
            "must be a finite nonnegative number",
        ));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::schema(
            path,
            format!("probabilities sum to {total}, not 1"),
        ));
    }
    ProbabilityVector::new(w.to_vec()).map_err(|e| Error::schema(path, e.to_string()))
}

fn strictly_positive(path: &str, w: &[f64]) -> Result<()> {
    match w.iter().position(|x| *x <= 0.0) {
        Some(i) => Err(Error::schema(
            format!("{path}[{i}]"),
            "must be strictly positive",
        )),
        None => Ok(()),
    }
}

fn finite_all(path: &str, w: &[f64]) -> Result<()> {
    match w.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::schema(format!("{path}[{i}]"), "must be finite")),
        None => Ok(()),
    }
}

impl LotteryScenario {
    pub fn build(&self) -> Result<BoundedLottery> {
        let outcomes = FinitePartition::new(self.outcomes.clone())
            .map_err(|e| Error::schema("outcomes", e.to_string()))?;
        let n = outcomes.len();
        if self.p0.len() != n {
            return Err(Error::schema(
                "p0",
                format!("expected {n} entries, got {}", self.p0.len()),
            ));
        }
        if self.utility.len() != n {
            return Err(Error::schema(
                "U",
                format!("expected {n} entries, got {}", self.utility.len()),
            ));
        }
        let prior = probability_vector("p0", &self.p0)?;
        strictly_positive("p0", &self.p0)?;
        finite_all("U", &self.utility)?;
        if !self.beta.is_finite() {
            return Err(Error::schema("beta", "must be finite"));
        }
        BoundedLottery::new(outcomes, prior, self.utility.clone(), self.beta)
    }
}

impl SatisficeScenario {
    pub fn source(&self) -> Result<DiscreteSource> {
        match (&self.support, &self.pmf, &self.truncated_poisson) {
            (Some(support), Some(pmf), None) => {
                if support.len() != pmf.len() {
                    return Err(Error::schema(
                        "pmf",
                        format!("expected {} entries, got {}", support.len(), pmf.len()),
                    ));
                }
                finite_all("support", support)?;
                if let Some(i) = support.windows(2).position(|w| w[0] >= w[1]) {
                    return Err(Error::schema(
                        format!("support[{}]", i + 1),
                        "support must be strictly increasing",
                    ));
                }
                let pmf_v = probability_vector("pmf", pmf)?;
                strictly_positive("pmf", pmf)?;
                DiscreteSource::new(support.clone(), pmf_v)
            }
            (None, None, Some(tp)) => {
                if !(tp.lambda > 0.0 && tp.lambda.is_finite()) {
                    return Err(Error::schema(
                        "truncated_poisson.lambda",
                        "must be positive",
                    ));
                }
                if tp.low > tp.high {
                    return Err(Error::schema(
                        "truncated_poisson.high",
                        "must be at least `low`",
                    ));
                }
                DiscreteSource::truncated_poisson(tp.lambda, tp.low, tp.high)
            }
            _ => Err(Error::schema(
                "support",
                "give either `support` and `pmf`, or `truncated_poisson`",
            )),
        }
    }

    /// `Q` for the Gibbs comparison: the explicit prior, or the source pmf.
    pub fn prior_distribution(&self) -> Result<ProbabilityVector> {
        match &self.prior {
            None => Ok(self.source()?.pmf().clone()),
            Some(q) => {
                let n = self.source()?.len();
                if q.len() != n {
                    return Err(Error::schema(
                        "prior",
                        format!("expected {n} entries, got {}", q.len()),
                    ));
                }
                let v = probability_vector("prior", q)?;
                strictly_positive("prior", q)?;
                Ok(v)
            }
        }
    }
}

impl TreeScenario {
    pub fn build(&self) -> Result<DecisionTree> {
        check_node("root", &self.root)?;
        if !self.root_utility.is_finite() {
            return Err(Error::schema("root_utility", "must be finite"));
        }
        DecisionTree::from_spec(&self.root, self.root_utility)
    }

    pub fn from_tree(tree: &DecisionTree) -> Self {
        Self {
            root_utility: tree.root_utility(),
            root: tree.to_spec(),
        }
    }
}

fn check_node(path: &str, node: &NodeSpec) -> Result<()> {
    if node.beta == 0.0 || !node.beta.is_finite() {
        return Err(Error::schema(
            format!("{path}.beta"),
            "must be finite and nonzero",
        ));
    }
    if node.children.is_empty() {
        return Err(Error::schema(
            format!("{path}.children"),
            "internal node needs at least one child",
        ));
    }
    let mut total = 0.0;
    for (i, c) in node.children.iter().enumerate() {
        let cp = format!("{path}.children[{i}]");
        if !(c.prior > 0.0 && c.prior <= 1.0) {
            return Err(Error::schema(format!("{cp}.prior"), "must lie in (0, 1]"));
        }
        if !c.reward.is_finite() {
            return Err(Error::schema(format!("{cp}.reward"), "must be finite"));
        }
        total += c.prior;
        if let Some(child) = &c.node {
            check_node(&format!("{cp}.node"), child)?;
        }
    }
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::schema(
            format!("{path}.children"),
            format!("priors sum to {total}, not 1"),
        ));
    }
    Ok(())
}

impl MdpScenario {
    pub fn build(&self) -> Result<FiniteMdp> {
        let n = self.rewards.len();
        if n == 0 {
            return Err(Error::schema("rewards", "at least one state required"));
        }
        finite_all("rewards", &self.rewards)?;
        if self.transitions.len() != n {
            return Err(Error::schema(
                "transitions",
                format!("expected {n} state blocks, got {}", self.transitions.len()),
            ));
        }
        for (s, actions) in self.transitions.iter().enumerate() {
            if actions.is_empty() {
                return Err(Error::schema(
                    format!("transitions[{s}]"),
                    "state needs at least one action",
                ));
            }
            for (a, row) in actions.iter().enumerate() {
                let p = format!("transitions[{s}][{a}]");
                if row.len() != n {
                    return Err(Error::schema(
                        p,
                        format!("expected {n} entries, got {}", row.len()),
                    ));
                }
                probability_vector(&p, row)?;
            }
        }
        if self.horizon == 0 {
            return Err(Error::schema("horizon", "must be at least 1"));
        }
        for (name, b) in [
            ("beta", self.beta),
            ("beta_action", self.beta_action),
            ("beta_obs", self.beta_obs),
        ] {
            if let Some(b) = b {
                if b == 0.0 || !b.is_finite() {
                    return Err(Error::schema(name, "must be finite and nonzero"));
                }
            }
        }
        FiniteMdp::new(self.transitions.clone(), self.rewards.clone(), self.horizon)
    }
}
