//! JSON exchange format for systems and gauge sets.
//!
//! Rationals travel as `"num/den"` strings so files diff bit-exactly.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::catalog::AnySystem;
use crate::gauge::{Configuration, GaugeError, GaugeDistribution, GaugeSet, IgnitionIndex};
use crate::scalar::{parse_rational, Rational, Scalar};
use crate::system::{outcome_bits, setting_vector, ModelError, ProbabilitySystem};

pub const SCHEMA: &str = "gaugesim/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema {found:?} is not {SCHEMA:?}")]
    Schema { found: String },
    #[error("bad probability {value} at x={x:?} u={u:?}")]
    BadProbability { x: Vec<u8>, u: Vec<usize>, value: String },
    #[error("unknown scalar kind {0:?}")]
    ScalarKind(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
}

pub type Result<T> = std::result::Result<T, IoError>;

#[derive(Debug, Serialize, Deserialize)]
struct EntryDoc {
    x: Vec<u8>,
    u: Vec<usize>,
    p: Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct SystemDoc {
    #[serde(default)]
    schema: Option<String>,
    #[serde(default)]
    name: Option<String>,
    n: usize,
    k: usize,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    scalar: Option<String>,
    #[serde(alias = "entries")]
    table: Vec<EntryDoc>,
}

fn rational_of(v: &Value) -> Option<Rational> {
    match v {
        Value::String(s) => parse_rational(s).ok(),
        // The decimal text of a JSON number parses exactly.
        Value::Number(n) => parse_rational(&n.to_string()).ok(),
        _ => None,
    }
}

fn float_of(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok().or_else(|| rational_of(v).map(|r| r.to_f64())),
        _ => None,
    }
}

fn build<S: Scalar>(doc: &SystemDoc, parse: impl Fn(&Value) -> Option<S>) -> Result<ProbabilitySystem<S>> {
    let labels = doc.labels.clone().unwrap_or_else(|| crate::system::default_labels(doc.k));
    let entries = doc
        .table
        .iter()
        .map(|e| {
            parse(&e.p)
                .map(|p| (e.x.clone(), e.u.clone(), p))
                .ok_or_else(|| IoError::BadProbability { x: e.x.clone(), u: e.u.clone(), value: e.p.to_string() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbabilitySystem::new(doc.n, doc.k, labels, entries)?)
}

/// Parse a system document. `"scalar"` selects `"rational"` (default) or `"float"`.
pub fn system_from_json(text: &str) -> Result<AnySystem> {
    let doc: SystemDoc = serde_json::from_str(text)?;
    if let Some(s) = &doc.schema {
        if s != SCHEMA {
            return Err(IoError::Schema { found: s.clone() });
        }
    }
    match doc.scalar.as_deref().unwrap_or("rational") {
        "rational" => Ok(AnySystem::Rational(build(&doc, rational_of)?)),
        "float" => Ok(AnySystem::Float(build(&doc, float_of)?)),
        other => Err(IoError::ScalarKind(other.to_string())),
    }
}

fn scalar_value<S: Scalar>(p: &S) -> Value {
    match S::BACKEND {
        crate::scalar::Backend::Rational => Value::String(p.key()),
        crate::scalar::Backend::Float => json!(p.to_f64()),
    }
}

fn scalar_kind<S: Scalar>() -> &'static str {
    match S::BACKEND {
        crate::scalar::Backend::Rational => "rational",
        crate::scalar::Backend::Float => "float",
    }
}

/// Every target in table order, `u` outer and `x` inner.
pub fn system_to_value<S: Scalar>(sys: &ProbabilitySystem<S>, name: Option<&str>) -> Value {
    let mut entries = Vec::with_capacity(sys.table().len());
    for ui in 0..sys.setting_count() {
        let u = setting_vector(ui, sys.n(), sys.k());
        for xm in 0..sys.outcome_count() {
            entries.push(json!({ "x": outcome_bits(xm, sys.n()), "u": u, "p": scalar_value(sys.p_at(xm, ui)) }));
        }
    }
    let mut doc = json!({
        "schema": SCHEMA,
        "n": sys.n(),
        "k": sys.k(),
        "labels": sys.labels(),
        "scalar": scalar_kind::<S>(),
        "table": entries,
    });
    if let Some(name) = name {
        doc["name"] = json!(name);
    }
    doc
}

pub fn any_system_to_value(sys: &AnySystem, name: Option<&str>) -> Value {
    match sys {
        AnySystem::Rational(s) => system_to_value(s, name),
        AnySystem::Float(s) => system_to_value(s, name),
    }
}

/// `{"gamma", "support", "weights"}` per configuration.
pub fn gauges_to_value<S: Scalar>(gauges: &GaugeSet<S>) -> Value {
    let list: Vec<Value> = gauges
        .distributions
        .iter()
        .enumerate()
        .map(|(gamma, d)| {
            json!({
                "gamma": gamma,
                "region": d.config.region,
                "setting": d.config.setting,
                "support": d.weights.iter().map(|(j, _)| j.0).collect::<Vec<_>>(),
                "weights": d.weights.iter().map(|(_, w)| scalar_value(w)).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "schema": SCHEMA, "n": gauges.n, "k": gauges.k, "scalar": scalar_kind::<S>(), "gauges": list })
}

#[derive(Debug, Deserialize)]
struct GaugeDoc {
    gamma: usize,
    support: Vec<u64>,
    weights: Vec<Value>,
}

#[derive(Debug, Deserialize)]
struct GaugeSetDoc {
    n: usize,
    k: usize,
    gauges: Vec<GaugeDoc>,
}

/// Read an exported gauge set back with exact rational weights.
pub fn gauges_from_json(text: &str) -> Result<GaugeSet<Rational>> {
    let doc: GaugeSetDoc = serde_json::from_str(text)?;
    let mut dists = Vec::with_capacity(doc.gauges.len());
    for g in &doc.gauges {
        let weights = g
            .support
            .iter()
            .zip(&g.weights)
            .map(|(&j, w)| {
                rational_of(w).map(|r| (IgnitionIndex(j), r)).ok_or_else(|| IoError::BadProbability {
                    x: Vec::new(),
                    u: vec![g.gamma],
                    value: w.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        dists.push(GaugeDistribution::new(Configuration::from_index(g.gamma, doc.k), weights));
    }
    Ok(GaugeSet::new(doc.n, doc.k, dists)?)
}

/// Format a scalar for reports: exact string for rationals, number for floats.
pub fn report_scalar<S: Scalar>(p: &S) -> Value {
    scalar_value(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn rational_round_trip() {
        let sys = catalog::w_xy();
        let text = system_to_value(&sys, Some("w-xy")).to_string();
        match system_from_json(&text).unwrap() {
            AnySystem::Rational(back) => assert_eq!(back, sys),
            AnySystem::Float(_) => panic!("expected rational"),
        }
    }

    #[test]
    fn float_round_trip() {
        let sys = catalog::epr_b(&[0.0, 0.3]).unwrap();
        let text = system_to_value(&sys, None).to_string();
        match system_from_json(&text).unwrap() {
            AnySystem::Float(back) => assert_eq!(back, sys),
            AnySystem::Rational(_) => panic!("expected float"),
        }
    }

    #[test]
    fn numbers_parse_exactly_as_rationals() {
        let text = r#"{"n":1,"k":1,"table":[{"x":[0],"u":[0],"p":0.25},{"x":[1],"u":[0],"p":"3/4"}]}"#;
        let AnySystem::Rational(s) = system_from_json(text).unwrap() else { panic!() };
        assert_eq!(s.p(&[0], &[0]), &Rational::from_ratio(1, 4));
    }

    #[test]
    fn normalization_violation_surfaces() {
        let text = r#"{"n":1,"k":1,"entries":[{"x":[0],"u":[0],"p":"1/2"},{"x":[1],"u":[0],"p":"1/3"}]}"#;
        assert!(matches!(system_from_json(text), Err(IoError::Model(ModelError::NormalizationViolation { .. }))));
    }

    #[test]
    fn wrong_schema_rejected() {
        let text = r#"{"schema":"other/9","n":1,"k":1,"entries":[]}"#;
        assert!(matches!(system_from_json(text), Err(IoError::Schema { .. })));
    }

    #[test]
    fn gauge_round_trip() {
        let g = catalog::fixtures::pr_box_gauges();
        let back = gauges_from_json(&gauges_to_value(&g).to_string()).unwrap();
        assert_eq!(back, g);
    }
}
