//! JSON config ingestion.
//!
//! ```json
//! { "n": 5, "a": "0.35", "tau": "0.255", "g": "complete",
//!   "f": {"kind": "poly", "exponent": "1/2"},
//!   "initial_infected": [1], "arithmetic": "rational" }
//! ```
//!
//! `a` and `tau` are scalars or per-agent arrays; `g` is `"complete"` or an
//! explicit matrix. Numbers may be `"p/q"` strings, decimal strings or JSON
//! numbers; all are read exactly. Agent labels are 1-based.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{AgentSet, Interaction, ModelConfig, UtilityCurve};
use crate::numeric::{rational_from_json, render_rational, Arithmetic, Rational};

/// Raw config document. Every field is optional so command-line flags can
/// fill in or override what the file leaves out.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_infected: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arithmetic: Option<Arithmetic>,
}

impl ConfigSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn homogeneous(n: usize, a: &Rational, tau: &Rational) -> Self {
        ConfigSpec {
            n: Some(n),
            a: Some(Value::String(render_rational(a))),
            tau: Some(Value::String(render_rational(tau))),
            ..Default::default()
        }
    }

    pub fn set_a(&mut self, a: &str) {
        self.a = Some(Value::String(a.to_string()));
    }

    pub fn set_tau(&mut self, tau: &str) {
        self.tau = Some(Value::String(tau.to_string()));
    }

    pub fn arithmetic(&self) -> Arithmetic {
        self.arithmetic.unwrap_or_default()
    }

    /// Builds the exact-valued config; convert with [`ModelConfig::convert`]
    /// for float runs.
    pub fn build(&self) -> Result<ModelConfig<Rational>> {
        let n = self
            .n
            .ok_or_else(|| Error::InvalidConfig("missing `n`".into()))?;
        if n < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 agents, got {n}")));
        }
        let a = per_agent(self.a.as_ref(), n, "a")?;
        let tau = per_agent(self.tau.as_ref(), n, "tau")?;
        let interaction = match &self.g {
            None => Interaction::Complete,
            Some(Value::String(s)) if s == "complete" => Interaction::Complete,
            Some(Value::Array(rows)) => {
                let matrix = rows
                    .iter()
                    .map(|row| match row {
                        Value::Array(cells) => cells.iter().map(rational_from_json).collect(),
                        other => Err(Error::Parse(format!("g row must be an array, got {other}"))),
                    })
                    .collect::<Result<Vec<Vec<Rational>>>>()?;
                Interaction::Weighted(matrix)
            }
            Some(other) => {
                return Err(Error::Parse(format!(
                    "`g` must be \"complete\" or a matrix, got {other}"
                )))
            }
        };
        let utility = match &self.f {
            None => UtilityCurve::Identity,
            Some(v) => parse_utility(v)?,
        };
        let labels = self.initial_infected.clone().unwrap_or_else(|| vec![1]);
        let mut infected = AgentSet::empty(n);
        for label in labels {
            if label == 0 || label > n {
                return Err(Error::AgentOutOfRange { agent: label, n });
            }
            infected.insert(label - 1);
        }
        let cfg = ModelConfig {
            n,
            interaction,
            tau,
            utility,
            initial_actions: a,
            initial_infected: infected,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Common `(a, τ)` if both are given as scalars.
    pub fn scalar_params(&self) -> Option<(Rational, Rational)> {
        let a = self.a.as_ref().filter(|v| !v.is_array())?;
        let tau = self.tau.as_ref().filter(|v| !v.is_array())?;
        Some((rational_from_json(a).ok()?, rational_from_json(tau).ok()?))
    }
}

fn per_agent(value: Option<&Value>, n: usize, name: &str) -> Result<Vec<Rational>> {
    match value {
        None => Err(Error::InvalidConfig(format!("missing `{name}`"))),
        Some(Value::Array(items)) => {
            if items.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "`{name}` has {} entries, expected {n}",
                    items.len()
                )));
            }
            items.iter().map(rational_from_json).collect()
        }
        Some(v) => Ok(vec![rational_from_json(v)?; n]),
    }
}

fn parse_utility(v: &Value) -> Result<UtilityCurve> {
    let kind = match v {
        Value::String(s) => s.as_str(),
        Value::Object(map) => map
            .get("kind")
            .and_then(Value::as_str)
            .or_else(|| map.keys().next().map(String::as_str))
            .unwrap_or(""),
        _ => "",
    };
    match kind {
        "identity" => Ok(UtilityCurve::Identity),
        "sqrt" | "square-root" => Ok(UtilityCurve::SquareRoot),
        "poly" | "polynomial" => {
            let exponent = v
                .get("exponent")
                .or_else(|| v.get("poly").filter(|e| !e.is_object()))
                .ok_or_else(|| Error::Parse("polynomial utility needs an `exponent`".into()))?;
            let curve = UtilityCurve::Polynomial(rational_from_json(exponent)?);
            curve.validate()?;
            Ok(curve)
        }
        _ => Err(Error::Parse(format!("unknown utility curve {v}"))),
    }
}

/// A built config in whichever arithmetic the document asked for.
#[derive(Debug, Clone)]
pub enum AnyConfig {
    Rational(ModelConfig<Rational>),
    Float(ModelConfig<f64>),
}

impl AnyConfig {
    pub fn from_spec(spec: &ConfigSpec) -> Result<Self> {
        let exact = spec.build()?;
        Ok(match spec.arithmetic() {
            Arithmetic::Rational => AnyConfig::Rational(exact),
            Arithmetic::Float => AnyConfig::Float(exact.convert::<f64>()),
        })
    }

    pub fn n(&self) -> usize {
        match self {
            AnyConfig::Rational(c) => c.n,
            AnyConfig::Float(c) => c.n,
        }
    }

    pub fn exact(&self) -> Result<&ModelConfig<Rational>> {
        match self {
            AnyConfig::Rational(c) => Ok(c),
            AnyConfig::Float(_) => Err(Error::ExactArithmeticRequired),
        }
    }
}

/// Runs `body` with the config in its own arithmetic.
#[macro_export]
macro_rules! with_config {
    ($any:expr, $cfg:ident => $body:expr) => {
        match $any {
            $crate::config::AnyConfig::Rational($cfg) => $body,
            $crate::config::AnyConfig::Float($cfg) => $body,
        }
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, rat};

    #[test]
    fn parses_a_full_document() {
        let spec = ConfigSpec::from_json_str(
            r#"{"n": 3, "a": "0.35", "tau": [0.2, "1/4", "0.3"],
                "g": [[0, 1, "1/2"], [1, 0, 1], ["0.5", 1, 0]],
                "f": {"kind": "poly", "exponent": "1/2"},
                "initial_infected": [2], "arithmetic": "float"}"#,
        )
        .unwrap();
        let cfg = spec.build().unwrap();
        assert_eq!(cfg.n, 3);
        assert_eq!(cfg.initial_actions, vec![rat("7/20"); 3]);
        assert_eq!(cfg.tau, vec![rat("1/5"), rat("1/4"), rat("3/10")]);
        assert_eq!(cfg.utility, UtilityCurve::Polynomial(rat("1/2")));
        assert_eq!(cfg.initial_infected, AgentSet::singleton(3, 1));
        assert!(matches!(cfg.interaction, Interaction::Weighted(_)));
        assert_eq!(spec.arithmetic(), Arithmetic::Float);
        assert!(matches!(AnyConfig::from_spec(&spec).unwrap(), AnyConfig::Float(_)));
    }

    #[test]
    fn defaults_are_complete_identity_patient_zero_rational() {
        let spec = ConfigSpec::from_json_str(r#"{"n": 4, "a": 0, "tau": 0.3}"#).unwrap();
        let cfg = spec.build().unwrap();
        assert_eq!(cfg.interaction, Interaction::Complete);
        assert_eq!(cfg.utility, UtilityCurve::Identity);
        assert_eq!(cfg.initial_infected, AgentSet::singleton(4, 0));
        assert_eq!(cfg.initial_actions, vec![int(0); 4]);
        assert_eq!(spec.arithmetic(), Arithmetic::Rational);
        assert_eq!(spec.scalar_params(), Some((int(0), rat("3/10"))));
    }

    #[test]
    fn utility_spellings() {
        for (text, want) in [
            (r#""identity""#, UtilityCurve::Identity),
            (r#"{"identity": {}}"#, UtilityCurve::Identity),
            (r#""sqrt""#, UtilityCurve::SquareRoot),
            (r#"{"poly": "2"}"#, UtilityCurve::Polynomial(int(2))),
            (r#"{"kind": "poly", "exponent": 3}"#, UtilityCurve::Polynomial(int(3))),
        ] {
            let v: Value = serde_json::from_str(text).unwrap();
            assert_eq!(parse_utility(&v).unwrap(), want, "{text}");
        }
        let v: Value = serde_json::from_str(r#"{"kind": "poly", "exponent": "-1"}"#).unwrap();
        assert!(parse_utility(&v).is_err());
    }

    #[test]
    fn rejects_bad_documents() {
        for text in [
            r#"{"a": 0, "tau": 0.3}"#,
            r#"{"n": 1, "a": 0, "tau": 0.3}"#,
            r#"{"n": 3, "a": [0, 0], "tau": 0.3}"#,
            r#"{"n": 3, "a": 0, "tau": 1}"#,
            r#"{"n": 3, "a": 0, "tau": 0}"#,
            r#"{"n": 3, "a": 0, "tau": 0.3, "initial_infected": [4]}"#,
            r#"{"n": 3, "a": 0, "tau": 0.3, "initial_infected": []}"#,
            r#"{"n": 3, "a": 0, "tau": 0.3, "g": "ring"}"#,
        ] {
            let parsed = ConfigSpec::from_json_str(text).and_then(|s| s.build());
            assert!(parsed.is_err(), "{text}");
        }
        assert!(ConfigSpec::from_json_str(r#"{"n": 3, "bogus": 1}"#).is_err());
    }

    #[test]
    fn float_configs_cannot_be_used_exactly() {
        let spec =
            ConfigSpec::from_json_str(r#"{"n": 3, "a": 0, "tau": 0.3, "arithmetic": "float"}"#).unwrap();
        let any = AnyConfig::from_spec(&spec).unwrap();
        assert!(matches!(any.exact(), Err(Error::ExactArithmeticRequired)));
    }
}
