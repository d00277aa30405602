//! Parameterized example systems and their reference gauge tables.

use std::f64::consts::PI;

use thiserror::Error;

use crate::gauge::{continuous_gauge, ContinuousGauge};
use crate::scalar::{parse_rational, Rational, Scalar};
use crate::system::{default_labels, ModelError, ProbabilitySystem};

pub mod fixtures;
mod registry;

pub use registry::{build, entries, entry, parse_angle, reference_gauges, AnyGaugeSet, AnySystem, CatalogEntry, ParamSpec, Params};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("parameter {name} = {value} is out of range")]
    RangeError { name: String, value: String },
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("negative table entry at x={x:?} u={u:?}")]
    NegativeEntry { x: Vec<u8>, u: Vec<usize> },
    #[error("unknown catalog entry {0:?}")]
    UnknownEntry(String),
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, CatalogError>;

fn r(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn in_unit(name: &str, p: &Rational) -> Result<()> {
    if p.is_negative() || *p > r(1, 1) {
        return Err(CatalogError::RangeError { name: name.into(), value: p.to_string() });
    }
    Ok(())
}

/// Single region with `P(0|θ_k) = probs[k]`.
pub fn one_region(probs: &[Rational]) -> Result<ProbabilitySystem<Rational>> {
    if probs.is_empty() {
        return Err(CatalogError::BadParam("one_region needs at least one probability".into()));
    }
    for (k, p) in probs.iter().enumerate() {
        in_unit(&format!("p{k}"), p)?;
    }
    Ok(ProbabilitySystem::from_fn(1, probs.len(), default_labels(probs.len()), |x, u| {
        let p = probs[u[0]].clone();
        if x[0] == 0 { p } else { r(1, 1) - p }
    })?)
}

/// Locally consistent, totally correlated 2-region system with 2 settings.
pub fn general_bell2(q: [Rational; 4]) -> Result<ProbabilitySystem<Rational>> {
    let [q1, q2, q3, q4] = q.clone();
    for (i, v) in q.iter().enumerate() {
        in_unit(&format!("q{}", i + 1), v)?;
    }
    for (name, ok) in [
        ("q3 >= q1", q3 >= q1),
        ("q3 >= q2", q3 >= q2),
        ("q4 >= q1", q4 >= q1),
        ("q4 >= q2", q4 >= q2),
        ("q1 + q2 >= q3", q1.clone() + q2.clone() >= q3),
        ("q1 + q2 >= q4", q1.clone() + q2.clone() >= q4),
    ] {
        if !ok {
            return Err(CatalogError::ConstraintViolation(name.into()));
        }
    }
    let one = r(1, 1);
    let zero = r(0, 1);
    // Columns keyed by (u0, u1); rows by (x0, x1).
    let column = |u0: usize, u1: usize| -> [Rational; 4] {
        match (u0, u1) {
            (0, 0) => [one.clone() - q1.clone(), zero.clone(), zero.clone(), q1.clone()],
            (1, 1) => [one.clone() - q2.clone(), zero.clone(), zero.clone(), q2.clone()],
            (0, 1) => [
                one.clone() - q3.clone(),
                q3.clone() - q1.clone(),
                q3.clone() - q2.clone(),
                q1.clone() + q2.clone() - q3.clone(),
            ],
            _ => [
                one.clone() - q4.clone(),
                q4.clone() - q2.clone(),
                q4.clone() - q1.clone(),
                q1.clone() + q2.clone() - q4.clone(),
            ],
        }
    };
    Ok(ProbabilitySystem::from_fn(2, 2, default_labels(2), |x, u| {
        column(u[0], u[1])[(x[0] as usize) * 2 + x[1] as usize].clone()
    })?)
}

/// General locally consistent 2-region system with 2 settings.
pub fn general_bipartite2(q: [Rational; 8]) -> Result<ProbabilitySystem<Rational>> {
    let [q1, q2, q3, q4, q5, q6, q7, q8] = q;
    let one = r(1, 1);
    let column = |u0: usize, u1: usize| -> [Rational; 4] {
        match (u0, u1) {
            (0, 0) => [
                one.clone() - q1.clone(),
                q5.clone(),
                q7.clone(),
                q1.clone() - q5.clone() - q7.clone(),
            ],
            (1, 1) => [
                one.clone() - q2.clone(),
                q6.clone(),
                q8.clone(),
                q2.clone() - q6.clone() - q8.clone(),
            ],
            (0, 1) => [
                one.clone() - q3.clone(),
                q3.clone() - q1.clone() + q5.clone(),
                q3.clone() - q2.clone() + q8.clone(),
                q1.clone() + q2.clone() - q3.clone() - q5.clone() - q8.clone(),
            ],
            _ => [
                one.clone() - q4.clone(),
                q4.clone() - q2.clone() + q6.clone(),
                q4.clone() - q1.clone() + q7.clone(),
                q1.clone() + q2.clone() - q4.clone() - q6.clone() - q7.clone(),
            ],
        }
    };
    for u0 in 0..2 {
        for u1 in 0..2 {
            for (row, v) in column(u0, u1).iter().enumerate() {
                if v.is_negative() {
                    return Err(CatalogError::NegativeEntry { x: vec![(row / 2) as u8, (row % 2) as u8], u: vec![u0, u1] });
                }
            }
        }
    }
    Ok(ProbabilitySystem::from_fn(2, 2, default_labels(2), |x, u| {
        column(u[0], u[1])[(x[0] as usize) * 2 + x[1] as usize].clone()
    })?)
}

/// EPR-B pair at the given polarizer angles.
pub fn epr_b(angles: &[f64]) -> Result<ProbabilitySystem<f64>> {
    if angles.is_empty() {
        return Err(CatalogError::BadParam("epr_b needs at least one angle".into()));
    }
    let names = angles.iter().map(|a| format!("{a}")).collect();
    Ok(ProbabilitySystem::from_fn(2, angles.len(), names, |x, u| epr_b_probability(x[0], x[1], angles[u[0]], angles[u[1]]))?)
}

/// `P(x0;x1|θa;θb)` of an EPR-B pair.
pub fn epr_b_probability(x0: u8, x1: u8, theta_a: f64, theta_b: f64) -> f64 {
    let c = (theta_a - theta_b).cos();
    if x0 == x1 { 0.25 * (1.0 + c) } else { 0.25 * (1.0 - c) }
}

/// EPR-B with `K` settings `θ_k = kπ/K`.
pub fn epr_b_regular(k: usize) -> Result<ProbabilitySystem<f64>> {
    if k < 2 {
        return Err(CatalogError::RangeError { name: "K".into(), value: k.to_string() });
    }
    let angles: Vec<f64> = (0..k).map(|s| s as f64 * PI / k as f64).collect();
    epr_b(&angles)
}

/// Continuous-setting EPR-B pair backed by the continuous gauge sampler.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ContinuousEprB;

impl ContinuousEprB {
    pub fn probability(&self, x0: u8, x1: u8, theta_a: f64, theta_b: f64) -> f64 {
        epr_b_probability(x0, x1, theta_a, theta_b)
    }

    pub fn gauge(&self, theta: f64) -> ContinuousGauge {
        continuous_gauge(theta)
    }
}

pub fn epr_b_continuous() -> ContinuousEprB {
    ContinuousEprB
}

/// Spin singlet measured along X, Y, Z.
pub fn singlet() -> ProbabilitySystem<Rational> {
    ProbabilitySystem::from_fn(2, 3, labels(&["X", "Y", "Z"]), |x, u| {
        if u[0] != u[1] {
            r(1, 4)
        } else if x[0] != x[1] {
            r(1, 2)
        } else {
            r(0, 1)
        }
    })
    .expect("singlet table is valid")
}

/// Popescu-Rohrlich box: outcomes differ exactly when both settings are 1.
pub fn pr_box() -> ProbabilitySystem<Rational> {
    ProbabilitySystem::from_fn(2, 2, default_labels(2), |x, u| {
        if (x[0] ^ x[1]) as usize == (u[0] & u[1]) { r(1, 2) } else { r(0, 1) }
    })
    .expect("PR-box table is valid")
}

fn parity(x: &[u8]) -> usize {
    x.iter().map(|&b| b as usize).sum::<usize>() % 2
}

/// GHZ state measured along X (setting 0) or Y (setting 1).
pub fn ghz_xy() -> ProbabilitySystem<Rational> {
    ProbabilitySystem::from_fn(3, 2, labels(&["X", "Y"]), |x, u| {
        let ys: usize = u.iter().sum();
        if ys % 2 == 1 {
            r(1, 8)
        } else if parity(x) == (ys / 2) % 2 {
            r(1, 4)
        } else {
            r(0, 1)
        }
    })
    .expect("GHZ table is valid")
}

/// W state measured along X (setting 0) or Y (setting 1), in 24ths.
pub fn w_xy() -> ProbabilitySystem<Rational> {
    // Columns XXX, XXY, XYX, XYY; rows x0x1x2 = 000..111 read left to right.
    const COLUMNS: [[i64; 8]; 4] = [
        [9, 1, 1, 1, 1, 1, 1, 9],
        [5, 5, 1, 1, 1, 1, 5, 5],
        [5, 1, 5, 1, 1, 5, 1, 5],
        [5, 1, 1, 5, 5, 1, 1, 5],
    ];
    ProbabilitySystem::from_fn(3, 2, labels(&["X", "Y"]), |x, u| {
        // Flipping every setting maps a column onto its partner.
        let flip = u[0];
        let col = ((u[1] ^ flip) << 1) | (u[2] ^ flip);
        let row = ((x[0] as usize) << 2) | ((x[1] as usize) << 1) | x[2] as usize;
        r(COLUMNS[col][row], 24)
    })
    .expect("W table is valid")
}

/// GHZ state at the single setting (Z,Z,Z).
pub fn ghz_zzz() -> ProbabilitySystem<Rational> {
    ProbabilitySystem::from_fn(3, 1, labels(&["Z"]), |x, _| {
        if x == [0, 0, 0] || x == [1, 1, 1] { r(1, 2) } else { r(0, 1) }
    })
    .expect("GHZ table is valid")
}

/// W state at the single setting (Z,Z,Z).
pub fn w_zzz() -> ProbabilitySystem<Rational> {
    ProbabilitySystem::from_fn(3, 1, labels(&["Z"]), |x, _| {
        if x.iter().map(|&b| b as usize).sum::<usize>() == 1 { r(1, 3) } else { r(0, 1) }
    })
    .expect("W table is valid")
}

/// Three-region system whose every one-region conditioning is a PR-box.
pub fn super_ghz() -> ProbabilitySystem<Rational> {
    quasi_super_ghz(r(0, 1)).expect("epsilon 0 is in range")
}

/// Super-GHZ with every 0 replaced by `eps` and every 1/4 by `1/4 - eps`.
pub fn quasi_super_ghz(eps: Rational) -> Result<ProbabilitySystem<Rational>> {
    if eps.is_negative() || eps > r(1, 4) {
        return Err(CatalogError::RangeError { name: "eps".into(), value: eps.to_string() });
    }
    Ok(ProbabilitySystem::from_fn(3, 2, default_labels(2), |x, u| {
        let all_equal = u.iter().all(|&s| s == u[0]);
        let big = (parity(x) == 1) == all_equal;
        if big { r(1, 4) - eps.clone() } else { eps.clone() }
    })?)
}

/// Parse a decimal or `p/q` string into an exact rational parameter.
pub fn rational_param(name: &str, text: &str) -> Result<Rational> {
    parse_rational(text).map_err(|_| CatalogError::BadParam(format!("{name}={text}")))
}
