//! n-region, K-setting probability tables P(x|u).
//!
//! Outcome vectors are bit masks (bit `i` is the outcome of region `i`).
//! Setting vectors are mixed-radix integers `Σ u_i K^i`.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

/// Largest table (number of targets) a system may hold.
pub const MAX_TARGETS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("missing target x={x:?} u={u:?}")]
    MissingTarget { x: Vec<u8>, u: Vec<usize> },
    #[error("duplicate target x={x:?} u={u:?}")]
    DuplicateTarget { x: Vec<u8>, u: Vec<usize> },
    #[error("negative probability {p} at x={x:?} u={u:?}")]
    NegativeProbability { x: Vec<u8>, u: Vec<usize>, p: String },
    #[error("probabilities at u={u:?} sum to {sum}, not 1")]
    NormalizationViolation { u: Vec<usize>, sum: String },
    #[error("marginal depends on the setting of region {region} (deviation {deviation:e})")]
    InconsistentMarginal { region: usize, deviation: f64 },
    #[error("operation needs {expected} regions, system has {found}")]
    WrongArity { expected: usize, found: usize },
    #[error("branch (region {region}, setting {setting}, outcome {outcome}) has zero probability")]
    ZeroProbabilityBranch { region: usize, setting: usize, outcome: u8 },
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub fn outcome_mask(x: &[u8]) -> usize {
    x.iter().enumerate().fold(0, |m, (i, &b)| m | ((b as usize & 1) << i))
}

pub fn outcome_bits(mask: usize, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

pub fn setting_index(u: &[usize], k: usize) -> usize {
    u.iter().rev().fold(0, |acc, &s| acc * k + s)
}

pub fn setting_vector(mut index: usize, n: usize, k: usize) -> Vec<usize> {
    let mut u = Vec::with_capacity(n);
    for _ in 0..n {
        u.push(index % k);
        index /= k;
    }
    u
}

/// `K^n`, the number of setting vectors.
pub fn setting_count(n: usize, k: usize) -> usize {
    k.pow(n as u32)
}

pub fn default_labels(k: usize) -> Vec<String> {
    (0..k).map(|s| format!("t{s}")).collect()
}

/// A validated conditional probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySystem<S> {
    n: usize,
    k: usize,
    labels: Vec<String>,
    table: Vec<S>,
}

/// Marginal over a subset of regions (in ascending parent order).
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSystem<S> {
    pub kept_regions: Vec<usize>,
    pub system: ProbabilitySystem<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Condition {
    pub region: usize,
    pub setting: usize,
    pub outcome: u8,
}

/// System of the remaining regions after one region's outcome was fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedSystem<S> {
    pub condition: Condition,
    /// Parent indices of the regions of `system`, ascending.
    pub remaining_regions: Vec<usize>,
    /// Pr(outcome | setting) in the conditioned region.
    pub branch_probability: S,
    pub system: ProbabilitySystem<S>,
}

/// Worst single-region drop violation found by [`ProbabilitySystem::local_consistency`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConsistencyViolation {
    pub region: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub worst: Option<ConsistencyViolation>,
}

impl<S: Scalar> ProbabilitySystem<S> {
    /// Build a system from explicit `(x, u, p)` entries covering every target.
    pub fn new<I>(n: usize, k: usize, labels: Vec<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, Vec<usize>, S)>,
    {
        let size = check_shape(n, k, &labels)?;
        let mut slots: Vec<Option<S>> = vec![None; size];
        for (x, u, p) in entries {
            if x.len() != n || u.len() != n {
                return Err(ModelError::InvalidShape(format!(
                    "target x={x:?} u={u:?} does not have {n} components"
                )));
            }
            if x.iter().any(|&b| b > 1) || u.iter().any(|&s| s >= k) {
                return Err(ModelError::InvalidShape(format!("target x={x:?} u={u:?} out of range")));
            }
            let idx = (setting_index(&u, k) << n) | outcome_mask(&x);
            if slots[idx].is_some() {
                return Err(ModelError::DuplicateTarget { x, u });
            }
            slots[idx] = Some(p);
        }
        let mut table = Vec::with_capacity(size);
        for (idx, slot) in slots.into_iter().enumerate() {
            match slot {
                Some(p) => table.push(p),
                None => {
                    return Err(ModelError::MissingTarget {
                        x: outcome_bits(idx & ((1 << n) - 1), n),
                        u: setting_vector(idx >> n, n, k),
                    })
                }
            }
        }
        Self::from_table(n, k, labels, table)
    }

    /// Build a system by evaluating `f(x, u)` on every target.
    pub fn from_fn<F>(n: usize, k: usize, labels: Vec<String>, mut f: F) -> Result<Self>
    where
        F: FnMut(&[u8], &[usize]) -> S,
    {
        let size = check_shape(n, k, &labels)?;
        let mut table = Vec::with_capacity(size);
        for ui in 0..setting_count(n, k) {
            let u = setting_vector(ui, n, k);
            for xm in 0..(1usize << n) {
                table.push(f(&outcome_bits(xm, n), &u));
            }
        }
        Self::from_table(n, k, labels, table)
    }

    /// Build from a flat table indexed by `(setting_index << n) | outcome_mask`.
    pub fn from_table(n: usize, k: usize, labels: Vec<String>, table: Vec<S>) -> Result<Self> {
        let size = check_shape(n, k, &labels)?;
        if table.len() != size {
            return Err(ModelError::InvalidShape(format!(
                "table has {} entries, expected {size}",
                table.len()
            )));
        }
        let sys = ProbabilitySystem { n, k, labels, table };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        let width = 1usize << self.n;
        for ui in 0..self.setting_count() {
            let mut sum = S::zero();
            for xm in 0..width {
                let p = &self.table[(ui << self.n) | xm];
                if p.is_negative() {
                    return Err(ModelError::NegativeProbability {
                        x: outcome_bits(xm, self.n),
                        u: setting_vector(ui, self.n, self.k),
                        p: p.to_string(),
                    });
                }
                sum = sum + p.clone();
            }
            if !sum.approx_eq(&S::one()) {
                return Err(ModelError::NormalizationViolation {
                    u: setting_vector(ui, self.n, self.k),
                    sum: sum.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn setting_count(&self) -> usize {
        setting_count(self.n, self.k)
    }

    pub fn outcome_count(&self) -> usize {
        1 << self.n
    }

    pub fn table(&self) -> &[S] {
        &self.table
    }

    pub fn p(&self, x: &[u8], u: &[usize]) -> &S {
        self.p_at(outcome_mask(x), setting_index(u, self.k))
    }

    pub fn p_at(&self, x_mask: usize, u_index: usize) -> &S {
        &self.table[(u_index << self.n) | x_mask]
    }

    /// Outcome distribution (indexed by outcome mask) at one setting vector.
    pub fn column(&self, u_index: usize) -> &[S] {
        let w = 1 << self.n;
        &self.table[u_index * w..(u_index + 1) * w]
    }

    pub fn canonical_key(&self) -> String {
        let mut key = format!("{}:{}:", self.n, self.k);
        for p in &self.table {
            key.push_str(&p.key());
            key.push(',');
        }
        key
    }

    pub fn to_f64(&self) -> ProbabilitySystem<f64> {
        ProbabilitySystem {
            n: self.n,
            k: self.k,
            labels: self.labels.clone(),
            table: self.table.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// Sum over the outcomes of every region outside `kept`, for every
    /// assignment of the dropped settings. Returns the marginal table (using
    /// dropped settings all 0) and the worst deviation across the others.
    fn marginal_sums(&self, kept: &[usize]) -> (Vec<S>, Option<ConsistencyViolation>) {
        let n = self.n;
        let k = self.k;
        let m = kept.len();
        let dropped: Vec<usize> = (0..n).filter(|r| !kept.contains(r)).collect();
        let kd = setting_count(dropped.len(), k);
        let width = 1usize << m;
        let cells = setting_count(m, k) * width;
        let mut sums = vec![S::zero(); cells * kd];
        for ui in 0..self.setting_count() {
            let u = setting_vector(ui, n, k);
            let ku = kept.iter().rev().fold(0, |acc, &r| acc * k + u[r]);
            let du = dropped.iter().rev().fold(0, |acc, &r| acc * k + u[r]);
            for xm in 0..(1usize << n) {
                let kx = kept
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (pos, &r)| acc | (((xm >> r) & 1) << pos));
                let slot = ((ku * width) | kx) * kd + du;
                sums[slot] = sums[slot].clone() + self.table[(ui << n) | xm].clone();
            }
        }
        let mut worst: Option<ConsistencyViolation> = None;
        let mut out = Vec::with_capacity(cells);
        for cell in 0..cells {
            let base = &sums[cell * kd];
            for du in 1..kd {
                let other = &sums[cell * kd + du];
                if !other.approx_eq(base) {
                    let dev = other.abs_diff(base);
                    let dv = setting_vector(du, dropped.len(), k);
                    let pos = dv.iter().position(|&s| s != 0).unwrap_or(0);
                    if worst.as_ref().is_none_or(|w| dev > w.deviation) {
                        worst = Some(ConsistencyViolation { region: dropped[pos], deviation: dev });
                    }
                }
            }
            out.push(base.clone());
        }
        (out, worst)
    }

    /// Marginal over `kept_regions`; fails when it depends on a dropped setting.
    pub fn marginal(&self, kept_regions: &[usize]) -> Result<MarginalSystem<S>> {
        let mut kept = kept_regions.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.is_empty() || kept.len() != kept_regions.len() || kept.iter().any(|&r| r >= self.n) {
            return Err(ModelError::InvalidShape(format!(
                "kept regions {kept_regions:?} must be distinct and in 0..{}",
                self.n
            )));
        }
        let (table, worst) = self.marginal_sums(&kept);
        if let Some(v) = worst {
            return Err(ModelError::InconsistentMarginal { region: v.region, deviation: v.deviation });
        }
        let system = ProbabilitySystem { n: kept.len(), k: self.k, labels: self.labels.clone(), table };
        Ok(MarginalSystem { kept_regions: kept, system })
    }

    /// Single-region drop check. Summing a further region out of a
    /// setting-independent sum keeps it setting-independent, so passing every
    /// single drop certifies all partitions.
    pub fn local_consistency(&self) -> ConsistencyReport {
        let mut worst: Option<ConsistencyViolation> = None;
        if self.n > 1 {
            for drop in 0..self.n {
                let kept: Vec<usize> = (0..self.n).filter(|&r| r != drop).collect();
                let (_, w) = self.marginal_sums(&kept);
                if let Some(w) = w {
                    if worst.as_ref().is_none_or(|cur| w.deviation > cur.deviation) {
                        worst = Some(w);
                    }
                }
            }
        }
        ConsistencyReport { consistent: worst.is_none(), worst }
    }

    pub fn is_locally_consistent(&self) -> bool {
        self.local_consistency().consistent
    }

    /// Pr(x_i = outcome | u_i = setting), indexed `[setting][outcome]`.
    pub fn region_marginal(&self, region: usize) -> Result<Vec<[S; 2]>> {
        let m = self.marginal(&[region])?;
        Ok((0..self.k)
            .map(|s| [m.system.p_at(0, s).clone(), m.system.p_at(1, s).clone()])
            .collect())
    }

    pub fn is_totally_correlated(&self) -> Result<bool> {
        self.require_arity(2)?;
        Ok((0..self.k).all(|s| {
            let ui = s + s * self.k;
            self.p_at(0b01, ui).is_zero() && self.p_at(0b10, ui).is_zero()
        }))
    }

    /// True iff the table equals the product of its single-region marginals.
    pub fn is_separable(&self) -> bool {
        let Ok(marginals) = (0..self.n).map(|r| self.region_marginal(r)).collect::<Result<Vec<_>>>() else {
            return false;
        };
        for ui in 0..self.setting_count() {
            let u = setting_vector(ui, self.n, self.k);
            for xm in 0..self.outcome_count() {
                let prod = (0..self.n).fold(S::one(), |acc, r| {
                    acc * marginals[r][u[r]][(xm >> r) & 1].clone()
                });
                if !prod.approx_eq(self.p_at(xm, ui)) {
                    return false;
                }
            }
        }
        true
    }

    /// Fix the outcome of one region and renormalize the rest.
    pub fn condition(&self, region: usize, setting: usize, outcome: u8) -> Result<ConditionedSystem<S>> {
        if self.n < 2 {
            return Err(ModelError::WrongArity { expected: 2, found: self.n });
        }
        if region >= self.n || setting >= self.k || outcome > 1 {
            return Err(ModelError::InvalidShape(format!(
                "condition ({region}, {setting}, {outcome}) out of range"
            )));
        }
        let pr = self.region_marginal(region)?[setting][outcome as usize].clone();
        if pr.is_zero() {
            return Err(ModelError::ZeroProbabilityBranch { region, setting, outcome });
        }
        let remaining: Vec<usize> = (0..self.n).filter(|&r| r != region).collect();
        let n2 = self.n - 1;
        let mut table = Vec::with_capacity(setting_count(n2, self.k) << n2);
        let mut u = vec![0usize; self.n];
        for ui in 0..setting_count(n2, self.k) {
            let sub = setting_vector(ui, n2, self.k);
            for (pos, &r) in remaining.iter().enumerate() {
                u[r] = sub[pos];
            }
            u[region] = setting;
            let pui = setting_index(&u, self.k);
            for xm in 0..(1usize << n2) {
                let mut full = (outcome as usize) << region;
                for (pos, &r) in remaining.iter().enumerate() {
                    full |= ((xm >> pos) & 1) << r;
                }
                table.push(self.p_at(full, pui).clone() / pr.clone());
            }
        }
        let system = ProbabilitySystem { n: n2, k: self.k, labels: self.labels.clone(), table };
        Ok(ConditionedSystem {
            condition: Condition { region, setting, outcome },
            remaining_regions: remaining,
            branch_probability: pr,
            system,
        })
    }

    /// Regions concatenated in order; each factor's table multiplies in.
    pub fn product(parts: &[ProbabilitySystem<S>]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| ModelError::InvalidShape("product of no systems".into()))?;
        if parts.iter().any(|p| p.k != first.k) {
            return Err(ModelError::InvalidShape("factors use different setting counts".into()));
        }
        let n: usize = parts.iter().map(|p| p.n).sum();
        let k = first.k;
        Self::from_fn(n, k, first.labels.clone(), |x, u| {
            let mut offset = 0;
            let mut acc = S::one();
            for part in parts {
                acc = acc * part.p(&x[offset..offset + part.n], &u[offset..offset + part.n]).clone();
                offset += part.n;
            }
            acc
        })
    }

    pub fn require_arity(&self, expected: usize) -> Result<()> {
        if self.n == expected {
            Ok(())
        } else {
            Err(ModelError::WrongArity { expected, found: self.n })
        }
    }
}

fn check_shape(n: usize, k: usize, labels: &[String]) -> Result<usize> {
    if n == 0 || k == 0 {
        return Err(ModelError::InvalidShape("need at least one region and one setting".into()));
    }
    if labels.len() != k {
        return Err(ModelError::InvalidShape(format!("{} labels for {k} settings", labels.len())));
    }
    let size = (2 * k)
        .checked_pow(n as u32)
        .filter(|&s| s <= MAX_TARGETS)
        .ok_or_else(|| ModelError::InvalidShape(format!("(2K)^n too large for n={n}, K={k}")))?;
    Ok(size)
}

impl<S: Scalar> fmt::Display for ProbabilitySystem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ui in 0..self.setting_count() {
            let u = setting_vector(ui, self.n, self.k);
            let names: Vec<&str> = u.iter().map(|&s| self.labels[s].as_str()).collect();
            write!(f, "u=({})", names.join(","))?;
            for xm in 0..self.outcome_count() {
                let bits: String = outcome_bits(xm, self.n).iter().map(|b| b.to_string()).collect();
                write!(f, " {bits}:{}", self.p_at(xm, ui))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn index_helpers_round_trip() {
        for ui in 0..27 {
            assert_eq!(setting_index(&setting_vector(ui, 3, 3), 3), ui);
        }
        assert_eq!(outcome_mask(&[1, 0, 1]), 5);
        assert_eq!(outcome_bits(5, 3), vec![1, 0, 1]);
    }

    #[test]
    fn deterministic_one_region() {
        let sys = ProbabilitySystem::new(1, 1, vec!["z".into()], vec![(vec![0], vec![0], r(1, 1)), (vec![1], vec![0], r(0, 1))]).unwrap();
        assert_eq!(sys.n(), 1);
        assert!(sys.is_locally_consistent());
        assert!(sys.is_separable());
    }

    #[test]
    fn missing_and_negative() {
        let err = ProbabilitySystem::new(1, 1, vec!["z".into()], vec![(vec![0], vec![0], r(1, 1))]).unwrap_err();
        assert!(matches!(err, ModelError::MissingTarget { .. }));
        let err = ProbabilitySystem::new(1, 1, vec!["z".into()], vec![(vec![0], vec![0], r(3, 2)), (vec![1], vec![0], r(-1, 2))])
            .unwrap_err();
        assert!(matches!(err, ModelError::NegativeProbability { .. }));
    }

    #[test]
    fn inconsistent_table_reports_deviation() {
        // Region 0 marginal P(x0=0|t0) is 0.5 when u1 = 0 and 0.6 when u1 = 1.
        let sys = ProbabilitySystem::<f64>::from_fn(2, 2, default_labels(2), |x, u| {
            let p0 = if u[1] == 1 && u[0] == 0 { 0.6 } else { 0.5 };
            let px0 = if x[0] == 0 { p0 } else { 1.0 - p0 };
            px0 * 0.5
        })
        .unwrap();
        let rep = sys.local_consistency();
        assert!(!rep.consistent);
        let w = rep.worst.unwrap();
        assert_eq!(w.region, 1);
        assert!((w.deviation - 0.1).abs() < 1e-12);
        assert!(matches!(sys.marginal(&[0]), Err(ModelError::InconsistentMarginal { region: 1, .. })));
    }

    #[test]
    fn constant_table_is_consistent() {
        let sys = ProbabilitySystem::from_fn(2, 3, default_labels(3), |_, _| r(1, 4)).unwrap();
        assert!(sys.is_locally_consistent());
        assert!(sys.is_separable());
        assert!(!sys.is_totally_correlated().unwrap());
    }

    #[test]
    fn product_marginalizes_to_factor() {
        let a = ProbabilitySystem::from_fn(1, 2, default_labels(2), |x, u| {
            let p = if u[0] == 0 { r(1, 3) } else { r(3, 4) };
            if x[0] == 0 { p } else { r(1, 1) - p }
        })
        .unwrap();
        let b = ProbabilitySystem::from_fn(1, 2, default_labels(2), |x, u| {
            let p = if u[0] == 0 { r(1, 5) } else { r(1, 2) };
            if x[0] == 0 { p } else { r(1, 1) - p }
        })
        .unwrap();
        let ab = ProbabilitySystem::product(&[a.clone(), b.clone()]).unwrap();
        assert!(ab.is_separable());
        assert_eq!(ab.marginal(&[0]).unwrap().system, a);
        assert_eq!(ab.marginal(&[1]).unwrap().system, b);
        let c = ab.condition(0, 1, 0).unwrap();
        assert_eq!(c.system, b);
        assert_eq!(c.branch_probability, r(3, 4));
    }

    #[test]
    fn zero_branch_is_rejected() {
        let sys = ProbabilitySystem::from_fn(2, 1, default_labels(1), |x, _| if x == [0, 0] { r(1, 1) } else { r(0, 1) }).unwrap();
        assert!(matches!(sys.condition(0, 0, 1), Err(ModelError::ZeroProbabilityBranch { .. })));
    }
}
