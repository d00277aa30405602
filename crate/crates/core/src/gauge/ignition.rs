//! Configurations, ignition indices and working sets.

use serde::{Deserialize, Serialize};

use super::GaugeError;

/// Full index spaces are enumerated only up to this many configuration bits.
pub const MAX_FULL_BITS: usize = 24;

/// A (region, setting) pair; its index is `setting + region * K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub region: usize,
    pub setting: usize,
}

impl Configuration {
    pub fn new(region: usize, setting: usize) -> Self {
        Configuration { region, setting }
    }

    pub fn index(&self, k: usize) -> usize {
        self.setting + self.region * k
    }

    pub fn from_index(gamma: usize, k: usize) -> Self {
        Configuration { region: gamma / k, setting: gamma % k }
    }
}

/// Bit vector over configurations; bit `γ` is the outcome it projects to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IgnitionIndex(pub u64);

impl IgnitionIndex {
    pub fn bit(self, gamma: usize) -> u8 {
        ((self.0 >> gamma) & 1) as u8
    }

    /// True iff `x_i = bit(u_i + iK)` for every region.
    pub fn in_target(self, k: usize, x: &[u8], u: &[usize]) -> bool {
        x.iter().zip(u).enumerate().all(|(i, (&xi, &ui))| self.bit(ui + i * k) == xi)
    }

    /// Outcome mask produced at setting vector `u`.
    pub fn outcomes(self, k: usize, u: &[usize]) -> usize {
        u.iter().enumerate().fold(0, |m, (i, &ui)| m | ((self.bit(ui + i * k) as usize) << i))
    }
}

pub fn projection(gamma: usize, j: IgnitionIndex) -> u8 {
    j.bit(gamma)
}

/// All `j` in the full `nK`-bit index space reaching target `(x|u)`.
pub fn target_index_set(k: usize, x: &[u8], u: &[usize]) -> Result<Vec<IgnitionIndex>, GaugeError> {
    let bits = x.len() * k;
    if bits > MAX_FULL_BITS {
        return Err(GaugeError::IndexSpaceTooLarge { bits });
    }
    Ok((0..1u64 << bits).map(IgnitionIndex).filter(|j| j.in_target(k, x, u)).collect())
}

/// Bipartite K-bit view: `x_0 = bit(u_0)`, `x_1 = bit(u_1)` of the same `j`.
pub fn bell_target_index_set(k: usize, x: [u8; 2], u: [usize; 2]) -> Vec<u64> {
    (0..1u64 << k)
        .filter(|j| ((j >> u[0]) & 1) as u8 == x[0] && ((j >> u[1]) & 1) as u8 == x[1])
        .collect()
}

/// K-bit bipartite index to the general `2K`-bit one (both halves equal).
pub fn bell_lift(j: u64, k: usize) -> IgnitionIndex {
    IgnitionIndex(j * ((1u64 << k) + 1))
}

/// Inverse of [`bell_lift`], when `j` has two equal halves.
pub fn bell_project(j: IgnitionIndex, k: usize) -> Option<u64> {
    let low = j.0 & ((1u64 << k) - 1);
    (bell_lift(low, k) == j).then_some(low)
}

/// Ordered, duplicate-free support restriction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorkingSet(Vec<IgnitionIndex>);

impl WorkingSet {
    pub fn new(indices: Vec<IgnitionIndex>) -> Result<Self, GaugeError> {
        let mut seen = std::collections::HashSet::new();
        for j in &indices {
            if !seen.insert(*j) {
                return Err(GaugeError::DuplicateIndex(j.0));
            }
        }
        Ok(WorkingSet(indices))
    }

    pub fn full(n: usize, k: usize) -> Result<Self, GaugeError> {
        let bits = n * k;
        if bits > MAX_FULL_BITS {
            return Err(GaugeError::IndexSpaceTooLarge { bits });
        }
        Ok(WorkingSet((0..1u64 << bits).map(IgnitionIndex).collect()))
    }

    /// Bipartite lift of every entry.
    pub fn bell_lift(&self, k: usize) -> WorkingSet {
        WorkingSet(self.0.iter().map(|j| bell_lift(j.0, k)).collect())
    }

    pub fn indices(&self) -> &[IgnitionIndex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The `2K` integers whose K-bit expansion has at most one jump (cyclically
/// two plateaus), listed in trigonometric order.
pub fn double_plateau(k: usize) -> WorkingSet {
    assert!((2..=63).contains(&k), "double_plateau needs 2 <= K <= 63");
    let all = (1u64 << k) - 1;
    let cycle: Vec<u64> = (0..2 * k)
        .map(|t| if t <= k { (1u64 << t) - 1 } else { all & !((1u64 << (t - k)) - 1) })
        .collect();
    let shift = k.div_ceil(2);
    WorkingSet((0..2 * k).map(|r| IgnitionIndex(cycle[(r + shift) % (2 * k)])).collect())
}
