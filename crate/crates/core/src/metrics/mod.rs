//! Inequality tests, entropy measures and the super-quantum classifier.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::system::{setting_count, Condition, ModelError, ProbabilitySystem};

pub mod entropy;
pub mod inequality;

pub use entropy::{
    atom_measures, entanglement_scheme, measurement_entropy, relative_entropy, s2, s2_matrix, s_n, shannon,
    total_entanglement, EntanglementScheme, EntropyMatrix, InformationDiagram, RelativeEntropy, EPS_ENT,
    MAX_DIAGRAM_REGIONS,
};
pub use inequality::{
    bell_triangle_slack, bloch_compatibility, chsh, chsh_max, correlation, hamming_divergence, purity_witness,
    BlochCheck, ChshValue, SpinConvention, TSIRELSON,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("operation needs {expected} components, got {found}")]
    WrongArity { expected: usize, found: usize },
    #[error("setting {setting} out of range for K = {k}")]
    BadSetting { setting: usize, k: usize },
    #[error("region {region} out of range for n = {n}")]
    BadRegion { region: usize, n: usize },
    #[error("information diagram of {n} regions exceeds the limit of {max}")]
    TooManyRegions { n: usize, max: usize },
    #[error(transparent)]
    Model(ModelError),
}

impl From<ModelError> for MetricsError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::WrongArity { expected, found } => MetricsError::WrongArity { expected, found },
            other => MetricsError::Model(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, MetricsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    Separable,
    EntangledQuantumCompatible,
    SuperQuantumDetected,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Separable => "separable",
            Class::EntangledQuantumCompatible => "entangled-quantum-compatible",
            Class::SuperQuantumDetected => "super-quantum-detected",
        }
    }
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A two-region subsystem reached by conditioning, with its best CHSH tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchChsh {
    /// Conditions applied in order; region indices are parent indices.
    pub conditions: Vec<Condition>,
    pub remaining_regions: Vec<usize>,
    /// Probability of reaching the branch at the conditioning settings.
    pub probability: f64,
    pub chsh: ChshValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub class: Class,
    /// First branch above the Tsirelson bound, if any.
    pub witness: Option<BranchChsh>,
    /// Branch with the largest CHSH value.
    pub max_branch: Option<BranchChsh>,
    pub branches: usize,
}

fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for r in start..n {
            cur.push(r);
            go(r + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, m, &mut Vec::new(), &mut out);
    out
}

/// Every two-region subsystem obtained by fixing the outcomes of `n - 2`
/// regions, at every setting and outcome with nonzero probability.
/// Subsets holding the highest regions come first, the same order the
/// minimum-step search uses. Within a subset regions are conditioned in
/// descending order so parent indices stay valid.
pub fn chsh_branches<S: Scalar>(sys: &ProbabilitySystem<S>) -> Result<Vec<BranchChsh>> {
    let n = sys.n();
    if n < 2 {
        return Ok(Vec::new());
    }
    let k = sys.k();
    let mut out = Vec::new();
    for subset in combinations(n, n - 2).into_iter().rev() {
        let mut order = subset.clone();
        order.reverse();
        let branches = setting_count(order.len(), k);
        for ui in 0..branches {
            for xm in 0..(1usize << order.len()) {
                let mut current = sys.clone();
                let mut conditions = Vec::with_capacity(order.len());
                let mut prob = 1.0;
                let mut reachable = true;
                for (pos, &region) in order.iter().enumerate() {
                    let setting = (ui / k.pow(pos as u32)) % k;
                    let outcome = ((xm >> pos) & 1) as u8;
                    match current.condition(region, setting, outcome) {
                        Ok(c) => {
                            prob *= c.branch_probability.to_f64();
                            current = c.system;
                            conditions.push(Condition { region, setting, outcome });
                        }
                        Err(ModelError::ZeroProbabilityBranch { .. }) => {
                            reachable = false;
                            break;
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                if !reachable {
                    continue;
                }
                let Some(best) = chsh_max(&current, SpinConvention::Uniform)? else {
                    continue;
                };
                let remaining = (0..n).filter(|r| !subset.contains(r)).collect();
                out.push(BranchChsh { conditions, remaining_regions: remaining, probability: prob, chsh: best });
            }
        }
    }
    Ok(out)
}

/// Branch with the largest CHSH value; ties keep the first in enumeration order.
pub fn max_branch_chsh<S: Scalar>(sys: &ProbabilitySystem<S>) -> Result<Option<BranchChsh>> {
    let mut best: Option<BranchChsh> = None;
    for b in chsh_branches(sys)? {
        if best.as_ref().is_none_or(|cur| b.chsh.value > cur.chsh.value + crate::scalar::EPS_NUM) {
            best = Some(b);
        }
    }
    Ok(best)
}

/// Separable tables are classical; otherwise look for a conditioned
/// two-region subsystem above the Tsirelson bound. Not finding one is
/// evidence of quantum compatibility, not a proof.
pub fn classify<S: Scalar>(sys: &ProbabilitySystem<S>) -> Result<Classification> {
    if let Some(w) = sys.local_consistency().worst {
        return Err(MetricsError::Model(ModelError::InconsistentMarginal { region: w.region, deviation: w.deviation }));
    }
    if sys.is_separable() {
        return Ok(Classification { class: Class::Separable, witness: None, max_branch: None, branches: 0 });
    }
    let branches = chsh_branches(sys)?;
    let count = branches.len();
    let witness = branches.iter().find(|b| b.chsh.exceeds_tsirelson).cloned();
    let mut max_branch: Option<BranchChsh> = None;
    for b in branches {
        if max_branch.as_ref().is_none_or(|cur| b.chsh.value > cur.chsh.value + crate::scalar::EPS_NUM) {
            max_branch = Some(b);
        }
    }
    let class = if witness.is_some() { Class::SuperQuantumDetected } else { Class::EntangledQuantumCompatible };
    Ok(Classification { class, witness, max_branch, branches: count })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_enumerate_in_order() {
        assert_eq!(combinations(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(4, 2).len(), 6);
    }
}
