//! Shannon measures over outcome distributions at fixed settings.

use serde::Serialize;

use super::{MetricsError, Result};
use crate::scalar::Scalar;
use crate::system::{setting_count, setting_vector, ProbabilitySystem};

/// Regions allowed in an information diagram.
pub const MAX_DIAGRAM_REGIONS: usize = 12;

/// Threshold for calling an entropy nonzero.
pub const EPS_ENT: f64 = 1e-9;

/// Entropy in bits with `0 log 0 = 0`.
pub fn shannon<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RelativeEntropy {
    Finite(f64),
    Infinite,
}

impl RelativeEntropy {
    pub fn value(self) -> f64 {
        match self {
            RelativeEntropy::Finite(v) => v,
            RelativeEntropy::Infinite => f64::INFINITY,
        }
    }
}

/// `S(p || q) = Σ p log2(p / q)`.
pub fn relative_entropy(p: &[f64], q: &[f64]) -> RelativeEntropy {
    let mut sum = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return RelativeEntropy::Infinite;
        }
        sum += pi * (pi / qi).log2();
    }
    RelativeEntropy::Finite(sum)
}

fn require_consistent<S: Scalar>(sys: &ProbabilitySystem<S>) -> Result<()> {
    match sys.local_consistency().worst {
        Some(w) => Err(MetricsError::Model(crate::system::ModelError::InconsistentMarginal {
            region: w.region,
            deviation: w.deviation,
        })),
        None => Ok(()),
    }
}

fn check_u<S: Scalar>(sys: &ProbabilitySystem<S>, u: &[usize]) -> Result<usize> {
    if u.len() != sys.n() {
        return Err(MetricsError::WrongArity { expected: sys.n(), found: u.len() });
    }
    if let Some(&s) = u.iter().find(|&&s| s >= sys.k()) {
        return Err(MetricsError::BadSetting { setting: s, k: sys.k() });
    }
    Ok(crate::system::setting_index(u, sys.k()))
}

/// Distribution of the regions in `mask` at setting vector index `ui`,
/// indexed by the compressed outcome bits of those regions.
fn masked_distribution<S: Scalar>(sys: &ProbabilitySystem<S>, ui: usize, mask: usize) -> Vec<f64> {
    let n = sys.n();
    let members: Vec<usize> = (0..n).filter(|r| mask >> r & 1 == 1).collect();
    let mut out = vec![0.0; 1 << members.len()];
    for (xm, p) in sys.column(ui).iter().enumerate() {
        let idx = members.iter().enumerate().fold(0, |acc, (pos, &r)| acc | (((xm >> r) & 1) << pos));
        out[idx] += p.to_f64();
    }
    out
}

/// Joint entropy of every region subset at `u`, indexed by subset mask.
fn joint_entropies_at<S: Scalar>(sys: &ProbabilitySystem<S>, ui: usize) -> Vec<f64> {
    (0..1usize << sys.n())
        .map(|mask| if mask == 0 { 0.0 } else { shannon(masked_distribution(sys, ui, mask)) })
        .collect()
}

/// Entropy of the marginal over `regions` with those regions at `settings`.
pub fn measurement_entropy<S: Scalar>(sys: &ProbabilitySystem<S>, regions: &[usize], settings: &[usize]) -> Result<f64> {
    if regions.len() != settings.len() {
        return Err(MetricsError::WrongArity { expected: regions.len(), found: settings.len() });
    }
    let mut order: Vec<(usize, usize)> = regions.iter().copied().zip(settings.iter().copied()).collect();
    order.sort_unstable();
    let kept: Vec<usize> = order.iter().map(|&(r, _)| r).collect();
    let sub_u: Vec<usize> = order.iter().map(|&(_, s)| s).collect();
    let m = sys.marginal(&kept)?;
    let ui = check_u(&m.system, &sub_u)?;
    Ok(shannon(m.system.column(ui).iter().map(Scalar::to_f64)))
}

/// Mutual information between the two regions at `(u0, u1)`, computed as
/// the relative entropy from the product of the marginals.
pub fn s2<S: Scalar>(sys: &ProbabilitySystem<S>, u0: usize, u1: usize) -> Result<f64> {
    sys.require_arity(2)?;
    total_entanglement(sys, &[u0, u1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyMatrix {
    pub k: usize,
    /// Row `u0`, column `u1`.
    pub values: Vec<Vec<f64>>,
}

impl EntropyMatrix {
    pub fn get(&self, u0: usize, u1: usize) -> f64 {
        self.values[u0][u1]
    }
}

pub fn s2_matrix<S: Scalar>(sys: &ProbabilitySystem<S>) -> Result<EntropyMatrix> {
    sys.require_arity(2)?;
    require_consistent(sys)?;
    let k = sys.k();
    let values = (0..k).map(|a| (0..k).map(|b| s2(sys, a, b)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    Ok(EntropyMatrix { k, values })
}

/// Signed measures of the atoms of the n-party information diagram at one
/// setting vector. Atom `A` (a nonempty region mask) is the part of the
/// diagram inside every `X_i` with `i` in `A` and outside the others.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InformationDiagram {
    pub n: usize,
    pub u: Vec<usize>,
    /// Joint entropy `I(α)` by subset mask; entry 0 is 0.
    pub joint: Vec<f64>,
    /// `μ(A)` by atom mask; entry 0 is 0.
    pub atoms: Vec<f64>,
}

impl InformationDiagram {
    pub fn atom(&self, mask: usize) -> f64 {
        self.atoms[mask]
    }

    /// Total measure of the atoms meeting `alpha`, which should equal `I(α)`.
    pub fn union_measure(&self, alpha: usize) -> f64 {
        (1..self.atoms.len()).filter(|a| a & alpha != 0).map(|a| self.atoms[a]).sum()
    }

    /// Measure of the innermost atom, the n-partite mutual information.
    pub fn innermost(&self) -> f64 {
        self.atoms[self.atoms.len() - 1]
    }
}

/// The atoms inside a union complement `β` sum to `T - I(full \ β)`;
/// Möbius inversion over subsets recovers each atom.
pub fn atom_measures<S: Scalar>(sys: &ProbabilitySystem<S>, u: &[usize]) -> Result<InformationDiagram> {
    let n = sys.n();
    if n > MAX_DIAGRAM_REGIONS {
        return Err(MetricsError::TooManyRegions { n, max: MAX_DIAGRAM_REGIONS });
    }
    require_consistent(sys)?;
    let ui = check_u(sys, u)?;
    let joint = joint_entropies_at(sys, ui);
    let full = (1usize << n) - 1;
    let total = joint[full];
    let inside: Vec<f64> = (0..=full).map(|beta| total - joint[full & !beta]).collect();
    let mut atoms = vec![0.0; full + 1];
    for a in 1..=full {
        let mut acc = 0.0;
        // Enumerate subsets b of a, including the empty set.
        let mut b = a;
        loop {
            let sign = if (a.count_ones() - b.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * inside[b];
            if b == 0 {
                break;
            }
            b = (b - 1) & a;
        }
        atoms[a] = acc;
    }
    Ok(InformationDiagram { n, u: u.to_vec(), joint, atoms })
}

/// Multivariate mutual information as the alternating sum of joint entropies.
pub fn s_n<S: Scalar>(sys: &ProbabilitySystem<S>, u: &[usize]) -> Result<f64> {
    require_consistent(sys)?;
    let ui = check_u(sys, u)?;
    Ok(alternating_sum(&joint_entropies_at(sys, ui)))
}

fn alternating_sum(joint: &[f64]) -> f64 {
    (1..joint.len())
        .map(|mask| if mask.count_ones() % 2 == 1 { joint[mask] } else { -joint[mask] })
        .sum()
}

/// Relative entropy of `P(·|u)` from the product of its single-region marginals.
pub fn total_entanglement<S: Scalar>(sys: &ProbabilitySystem<S>, u: &[usize]) -> Result<f64> {
    require_consistent(sys)?;
    let ui = check_u(sys, u)?;
    let n = sys.n();
    let singles: Vec<Vec<f64>> = (0..n).map(|r| masked_distribution(sys, ui, 1 << r)).collect();
    let p: Vec<f64> = sys.column(ui).iter().map(Scalar::to_f64).collect();
    let q: Vec<f64> = (0..p.len())
        .map(|xm| (0..n).map(|r| singles[r][(xm >> r) & 1]).product())
        .collect();
    let e = relative_entropy(&p, &q);
    debug_assert!(matches!(e, RelativeEntropy::Finite(_)), "product of own marginals covers the support");
    // Clamp the float noise of an exactly independent table.
    Ok(e.value().max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementScheme {
    /// `e_m` for `m = 2..=n`, stored at index `m - 2`.
    pub flags: Vec<usize>,
    pub degree: usize,
    pub max_total_entanglement: f64,
    pub maximally_entangled: bool,
}

/// For each subset size `m`, count the `m`-subsets whose marginal has a
/// nonzero `m`-partite entropy at some setting vector.
pub fn entanglement_scheme<S: Scalar>(sys: &ProbabilitySystem<S>) -> Result<EntanglementScheme> {
    require_consistent(sys)?;
    let n = sys.n();
    let k = sys.k();
    let mut flags = vec![0usize; n.saturating_sub(1)];
    for mask in 1usize..(1 << n) {
        let m = mask.count_ones() as usize;
        if m < 2 {
            continue;
        }
        let regions: Vec<usize> = (0..n).filter(|r| mask >> r & 1 == 1).collect();
        let sub = sys.marginal(&regions)?.system;
        let nonzero = (0..setting_count(m, k)).any(|ui| alternating_sum(&joint_entropies_at(&sub, ui)).abs() > EPS_ENT);
        if nonzero {
            flags[m - 2] += 1;
        }
    }
    let degree = flags.iter().rposition(|&e| e > 0).map(|i| i + 2).unwrap_or(1);
    let mut max_e: f64 = 0.0;
    for ui in 0..sys.setting_count() {
        max_e = max_e.max(total_entanglement(sys, &setting_vector(ui, n, k))?);
    }
    Ok(EntanglementScheme {
        flags,
        degree,
        max_total_entanglement: max_e,
        maximally_entangled: max_e >= (n as f64 - 1.0) - EPS_ENT && n > 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shannon_conventions() {
        assert_eq!(shannon([1.0, 0.0]), 0.0);
        assert!((shannon([0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert!((shannon([0.25; 4]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn relative_entropy_support() {
        assert_eq!(relative_entropy(&[0.5, 0.5], &[1.0, 0.0]), RelativeEntropy::Infinite);
        assert_eq!(relative_entropy(&[0.0, 1.0], &[0.5, 0.5]), RelativeEntropy::Finite(1.0));
    }
}
