//! Hamming divergence, Bell triangle, CHSH and the one-region Bloch check.

use serde::Serialize;

use super::{MetricsError, Result};
use crate::scalar::{Scalar, EPS_NUM};
use crate::system::ProbabilitySystem;

pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Map from outcome bits to spins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinConvention {
    /// `s_i = 2x_i - 1` in every region.
    #[default]
    Uniform,
    /// `s_0 = 2x_0 - 1`, `s_1 = 1 - 2x_1`.
    Mixed,
}

fn check_settings<S: Scalar>(sys: &ProbabilitySystem<S>, settings: &[usize]) -> Result<()> {
    if let Some(&s) = settings.iter().find(|&&s| s >= sys.k()) {
        return Err(MetricsError::BadSetting { setting: s, k: sys.k() });
    }
    Ok(())
}

fn pair<S: Scalar>(sys: &ProbabilitySystem<S>, u0: usize, u1: usize) -> Result<[f64; 4]> {
    sys.require_arity(2)?;
    check_settings(sys, &[u0, u1])?;
    let ui = u0 + u1 * sys.k();
    Ok([0, 1, 2, 3].map(|xm| sys.p_at(xm, ui).to_f64()))
}

/// `P(1;0|u) + P(0;1|u)`.
pub fn hamming_divergence<S: Scalar>(sys: &ProbabilitySystem<S>, u0: usize, u1: usize) -> Result<f64> {
    let p = pair(sys, u0, u1)?;
    Ok(p[0b01] + p[0b10])
}

/// `d(θ0,θ1) + d(θ1,θ2) - d(θ0,θ2)`; negative means the triangle is violated.
pub fn bell_triangle_slack<S: Scalar>(sys: &ProbabilitySystem<S>, t0: usize, t1: usize, t2: usize) -> Result<f64> {
    Ok(hamming_divergence(sys, t0, t1)? + hamming_divergence(sys, t1, t2)? - hamming_divergence(sys, t0, t2)?)
}

/// Mean spin product `E[s_0 s_1]` at settings `(a, b)`.
pub fn correlation<S: Scalar>(sys: &ProbabilitySystem<S>, a: usize, b: usize, convention: SpinConvention) -> Result<f64> {
    let p = pair(sys, a, b)?;
    let same = p[0b00] + p[0b11];
    let diff = p[0b01] + p[0b10];
    Ok(match convention {
        SpinConvention::Uniform => same - diff,
        SpinConvention::Mixed => diff - same,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshValue {
    /// `E(A,B) + E(A',B) + E(A,B') - E(A',B')` before the absolute value.
    pub combination: f64,
    pub value: f64,
    /// `(A, A', B, B')`.
    pub tuple: [usize; 4],
    pub exceeds_classical: bool,
    pub exceeds_tsirelson: bool,
}

pub fn chsh<S: Scalar>(
    sys: &ProbabilitySystem<S>,
    a: usize,
    a2: usize,
    b: usize,
    b2: usize,
    convention: SpinConvention,
) -> Result<ChshValue> {
    let combination = correlation(sys, a, b, convention)? + correlation(sys, a2, b, convention)?
        + correlation(sys, a, b2, convention)?
        - correlation(sys, a2, b2, convention)?;
    let value = combination.abs();
    Ok(ChshValue {
        combination,
        value,
        tuple: [a, a2, b, b2],
        exceeds_classical: value > 2.0 + EPS_NUM,
        exceeds_tsirelson: value > TSIRELSON + EPS_NUM,
    })
}

/// Largest CHSH value over all tuples with `A != A'` and `B != B'`; `None`
/// when `K < 2`. Ties keep the first tuple in lexicographic order.
pub fn chsh_max<S: Scalar>(sys: &ProbabilitySystem<S>, convention: SpinConvention) -> Result<Option<ChshValue>> {
    sys.require_arity(2)?;
    let k = sys.k();
    let mut best: Option<ChshValue> = None;
    for a in 0..k {
        for a2 in (0..k).filter(|&s| s != a) {
            for b in 0..k {
                for b2 in (0..k).filter(|&s| s != b) {
                    let v = chsh(sys, a, a2, b, b2, convention)?;
                    if best.as_ref().is_none_or(|cur| v.value > cur.value + EPS_NUM) {
                        best = Some(v);
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Entropy of the same-spin outcomes at `(θ, θ)` under the mixed convention:
/// 0 for totally correlated pairs.
pub fn purity_witness<S: Scalar>(sys: &ProbabilitySystem<S>, setting: usize) -> Result<f64> {
    let p = pair(sys, setting, setting)?;
    // Mixed convention: equal spins mean opposite bits.
    Ok(super::entropy::shannon([p[0b01], p[0b10]]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlochCheck {
    pub components: [f64; 3],
    pub norm_squared: f64,
    pub compatible: bool,
}

/// `r_k = 2 Pr(0|θ_k) - 1`; compatible iff `Σ r_k² <= 1`.
pub fn bloch_compatibility<S: Scalar>(sys: &ProbabilitySystem<S>, region: usize, settings: [usize; 3]) -> Result<BlochCheck> {
    check_settings(sys, &settings)?;
    if region >= sys.n() {
        return Err(MetricsError::BadRegion { region, n: sys.n() });
    }
    let marg = sys.region_marginal(region)?;
    let components = settings.map(|s| 2.0 * marg[s][0].to_f64() - 1.0);
    let norm_squared: f64 = components.iter().map(|r| r * r).sum();
    Ok(BlochCheck { components, norm_squared, compatible: norm_squared <= 1.0 + EPS_NUM })
}
