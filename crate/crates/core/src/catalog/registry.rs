use std::f64::consts::PI;

use super::fixtures;
use super::{CatalogError, Result};
use crate::gauge::{epr_b_working_gauge, epr_regular_gauge, GaugeSet};
use crate::scalar::{parse_rational, Rational};
use crate::system::ProbabilitySystem;

/// A system in either scalar backend.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySystem {
    Rational(ProbabilitySystem<Rational>),
    Float(ProbabilitySystem<f64>),
}

impl AnySystem {
    pub fn n(&self) -> usize {
        match self {
            AnySystem::Rational(s) => s.n(),
            AnySystem::Float(s) => s.n(),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            AnySystem::Rational(s) => s.k(),
            AnySystem::Float(s) => s.k(),
        }
    }

    pub fn to_f64(&self) -> ProbabilitySystem<f64> {
        match self {
            AnySystem::Rational(s) => s.to_f64(),
            AnySystem::Float(s) => s.clone(),
        }
    }
}

/// A gauge set in either scalar backend.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyGaugeSet {
    Rational(GaugeSet<Rational>),
    Float(GaugeSet<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
}

/// `name=value` overrides; missing names fall back to the declared default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(Vec<(String, String)>);

impl Params {
    pub fn new() -> Self {
        Params(Vec::new())
    }

    pub fn parse(assignments: &[String]) -> Result<Self> {
        let mut out = Vec::new();
        for a in assignments {
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| CatalogError::BadParam(format!("expected name=value, got {a:?}")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Params(out))
    }

    pub fn with(mut self, name: &str, value: &str) -> Self {
        self.0.push((name.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().rev().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(k, _)| k.as_str())
    }
}

const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "one-region",
        summary: "single region, P(0|k) = probs[k]",
        params: &[ParamSpec { name: "probs", default: "1,1/2,1/2", help: "comma-separated P(0|k)" }],
    },
    CatalogEntry {
        name: "general-bell2",
        summary: "totally correlated 2-region, 2-setting family",
        params: &[ParamSpec { name: "q", default: "1/2,1/2,3/4,3/4", help: "q1,q2,q3,q4" }],
    },
    CatalogEntry {
        name: "general-bipartite2",
        summary: "general locally consistent 2-region, 2-setting family",
        params: &[ParamSpec { name: "q", default: "3/4,3/4,3/4,3/4,1/4,1/4,1/4,1/4", help: "q1..q8" }],
    },
    CatalogEntry {
        name: "epr-b",
        summary: "EPR-B pair at given polarizer angles (float)",
        params: &[ParamSpec { name: "angles", default: "0,pi/5,pi/2", help: "comma-separated angles, e.g. 0,pi/4" }],
    },
    CatalogEntry {
        name: "epr-b-regular",
        summary: "EPR-B pair at angles k*pi/K (float)",
        params: &[ParamSpec { name: "k", default: "3", help: "number of settings K >= 2" }],
    },
    CatalogEntry { name: "singlet", summary: "spin singlet along X, Y, Z", params: &[] },
    CatalogEntry { name: "pr-box", summary: "Popescu-Rohrlich box", params: &[] },
    CatalogEntry { name: "ghz-xy", summary: "GHZ state, settings X and Y", params: &[] },
    CatalogEntry { name: "w-xy", summary: "W state, settings X and Y", params: &[] },
    CatalogEntry { name: "ghz-zzz", summary: "GHZ state at the single setting Z", params: &[] },
    CatalogEntry { name: "w-zzz", summary: "W state at the single setting Z", params: &[] },
    CatalogEntry { name: "super-ghz", summary: "three regions, every conditioning a PR-box", params: &[] },
    CatalogEntry {
        name: "quasi-super-ghz",
        summary: "super-GHZ with zeros lifted to eps",
        params: &[ParamSpec { name: "eps", default: "1/16", help: "0 <= eps <= 1/4, decimal or p/q" }],
    },
];

pub fn entries() -> &'static [CatalogEntry] {
    ENTRIES
}

pub fn entry(name: &str) -> Result<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| CatalogError::UnknownEntry(name.to_string()))
}

fn param<'a>(entry: &'static CatalogEntry, params: &'a Params, name: &str) -> &'a str {
    params
        .get(name)
        .or_else(|| entry.params.iter().find(|p| p.name == name).map(|p| p.default))
        .unwrap_or("")
}

fn rational_list(name: &str, text: &str) -> Result<Vec<Rational>> {
    text.split(',')
        .map(|t| parse_rational(t).map_err(|_| CatalogError::BadParam(format!("{name}: {t:?}"))))
        .collect()
}

fn fixed<const N: usize>(name: &str, v: Vec<Rational>) -> Result<[Rational; N]> {
    let len = v.len();
    v.try_into().map_err(|_| CatalogError::BadParam(format!("{name} needs {N} values, got {len}")))
}

/// Parse an angle such as `0`, `0.3`, `pi`, `pi/5`, `3pi/4` or `3*pi/4`.
pub fn parse_angle(text: &str) -> Option<f64> {
    let t = text.trim().to_ascii_lowercase();
    let Some(pos) = t.find("pi") else {
        return t.parse().ok();
    };
    let coef = t[..pos].trim().trim_end_matches('*').trim();
    let coef: f64 = if coef.is_empty() { 1.0 } else if coef == "-" { -1.0 } else { coef.parse().ok()? };
    let rest = t[pos + 2..].trim();
    let div: f64 = match rest.strip_prefix('/') {
        Some(d) => d.trim().parse().ok()?,
        None if rest.is_empty() => 1.0,
        None => return None,
    };
    Some(coef * PI / div)
}

fn angle_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|t| parse_angle(t).ok_or_else(|| CatalogError::BadParam(format!("angle {t:?}")))).collect()
}

fn check_names(entry: &CatalogEntry, params: &Params) -> Result<()> {
    for name in params.names() {
        if !entry.params.iter().any(|p| p.name == name) {
            return Err(CatalogError::BadParam(format!("{} has no parameter {name:?}", entry.name)));
        }
    }
    Ok(())
}

/// Build a catalog system by name.
pub fn build(name: &str, params: &Params) -> Result<AnySystem> {
    let e = entry(name)?;
    check_names(e, params)?;
    let p = |n: &str| param(e, params, n);
    Ok(match name {
        "one-region" => AnySystem::Rational(super::one_region(&rational_list("probs", p("probs"))?)?),
        "general-bell2" => AnySystem::Rational(super::general_bell2(fixed("q", rational_list("q", p("q"))?)?)?),
        "general-bipartite2" => {
            AnySystem::Rational(super::general_bipartite2(fixed("q", rational_list("q", p("q"))?)?)?)
        }
        "epr-b" => AnySystem::Float(super::epr_b(&angle_list(p("angles"))?)?),
        "epr-b-regular" => {
            let k: usize = p("k").parse().map_err(|_| CatalogError::BadParam(format!("k={}", p("k"))))?;
            AnySystem::Float(super::epr_b_regular(k)?)
        }
        "singlet" => AnySystem::Rational(super::singlet()),
        "pr-box" => AnySystem::Rational(super::pr_box()),
        "ghz-xy" => AnySystem::Rational(super::ghz_xy()),
        "w-xy" => AnySystem::Rational(super::w_xy()),
        "ghz-zzz" => AnySystem::Rational(super::ghz_zzz()),
        "w-zzz" => AnySystem::Rational(super::w_zzz()),
        "super-ghz" => AnySystem::Rational(super::super_ghz()),
        "quasi-super-ghz" => AnySystem::Rational(super::quasi_super_ghz(super::rational_param("eps", p("eps"))?)?),
        other => return Err(CatalogError::UnknownEntry(other.to_string())),
    })
}

/// Stored reference gauge table for an entry, when one exists.
pub fn reference_gauges(name: &str, params: &Params) -> Result<Option<AnyGaugeSet>> {
    let e = entry(name)?;
    check_names(e, params)?;
    let p = |n: &str| param(e, params, n);
    Ok(match name {
        "one-region" => Some(AnyGaugeSet::Rational(fixtures::one_region_gauges(&rational_list("probs", p("probs"))?))),
        "general-bell2" => Some(AnyGaugeSet::Rational(fixtures::bell2_gauges(&fixed("q", rational_list("q", p("q"))?)?))),
        "singlet" => Some(AnyGaugeSet::Rational(fixtures::singlet_gauges())),
        "pr-box" => Some(AnyGaugeSet::Rational(fixtures::pr_box_gauges())),
        "ghz-xy" => Some(AnyGaugeSet::Rational(fixtures::ghz_xy_gauges())),
        "w-xy" => Some(AnyGaugeSet::Rational(fixtures::w_xy_gauges())),
        "epr-b" => epr_b_working_gauge(&angle_list(p("angles"))?).ok().map(AnyGaugeSet::Float),
        "epr-b-regular" => {
            let k: usize = p("k").parse().map_err(|_| CatalogError::BadParam(format!("k={}", p("k"))))?;
            if k < 2 {
                None
            } else {
                epr_regular_gauge(k).to_gauge_set().ok().map(AnyGaugeSet::Float)
            }
        }
        _ => None,
    })
}
