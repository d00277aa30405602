//! Gauge distributions: non-negative solutions of the per-configuration
//! linear systems over ignition states.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::system::{outcome_bits, setting_count, setting_vector, ProbabilitySystem};

pub mod closed_form;
mod ignition;
pub mod simplex;

pub use closed_form::{continuous_gauge, epr_b_working_gauge, epr_regular_gauge, ContinuousGauge, RegularGauge};
pub use ignition::{
    bell_lift, bell_project, bell_target_index_set, double_plateau, projection, target_index_set, Configuration,
    IgnitionIndex, WorkingSet, MAX_FULL_BITS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaugeError {
    #[error("no non-negative gauge exists for configurations {configs:?}")]
    Infeasible { configs: Vec<Configuration> },
    #[error("working set is empty")]
    SupportTooSmall,
    #[error("full index space of {bits} bits exceeds the enumeration guard; supply a working set")]
    IndexSpaceTooLarge { bits: usize },
    #[error("ignition index {0} appears twice in the working set")]
    DuplicateIndex(u64),
    #[error("ignition index {index} has bits beyond the {bits} configuration bits")]
    IndexOutOfRange { index: u64, bits: usize },
    #[error("configuration {0:?} is outside the system")]
    BadConfiguration(Configuration),
    #[error("system is not locally consistent (region {region}, deviation {deviation:e})")]
    NotLocallyConsistent { region: usize, deviation: f64 },
    #[error("closed form has a negative entry: {entry} = {value}")]
    NegativeEntry { entry: String, value: f64 },
    #[error("unsupported setting count {0} for this closed form")]
    UnsupportedSettings(usize),
    #[error("gauge set shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, GaugeError>;

/// Probability vector over ignition states attached to one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeDistribution<S> {
    pub config: Configuration,
    /// Sorted by index; zero weights omitted.
    pub weights: Vec<(IgnitionIndex, S)>,
}

impl<S: Scalar> GaugeDistribution<S> {
    pub fn new(config: Configuration, mut weights: Vec<(IgnitionIndex, S)>) -> Self {
        weights.retain(|(_, w)| !w.is_zero());
        weights.sort_by_key(|(j, _)| *j);
        GaugeDistribution { config, weights }
    }

    pub fn weight(&self, j: IgnitionIndex) -> S {
        self.weights
            .binary_search_by_key(&j, |(i, _)| *i)
            .map(|pos| self.weights[pos].1.clone())
            .unwrap_or_else(|_| S::zero())
    }

    pub fn support(&self) -> Vec<IgnitionIndex> {
        self.weights.iter().map(|(j, _)| *j).collect()
    }

    pub fn total(&self) -> S {
        self.weights.iter().fold(S::zero(), |acc, (_, w)| acc + w.clone())
    }

    /// Outcome distribution (by mask) this gauge induces at setting vector `u`.
    pub fn reconstruct(&self, k: usize, u: &[usize]) -> Vec<S> {
        let mut out = vec![S::zero(); 1 << u.len()];
        for (j, w) in &self.weights {
            let xm = j.outcomes(k, u);
            out[xm] = out[xm].clone() + w.clone();
        }
        out
    }

    pub fn to_f64(&self) -> GaugeDistribution<f64> {
        GaugeDistribution {
            config: self.config,
            weights: self.weights.iter().map(|(j, w)| (*j, w.to_f64())).collect(),
        }
    }
}

/// One gauge distribution per configuration, ordered by configuration index.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSet<S> {
    pub n: usize,
    pub k: usize,
    pub distributions: Vec<GaugeDistribution<S>>,
}

impl<S: Scalar> GaugeSet<S> {
    pub fn new(n: usize, k: usize, distributions: Vec<GaugeDistribution<S>>) -> Result<Self> {
        if distributions.len() != n * k {
            return Err(GaugeError::Shape(format!("{} distributions for n*K = {}", distributions.len(), n * k)));
        }
        for (gamma, d) in distributions.iter().enumerate() {
            if d.config.index(k) != gamma {
                return Err(GaugeError::Shape(format!("distribution {gamma} carries configuration {:?}", d.config)));
            }
        }
        Ok(GaugeSet { n, k, distributions })
    }

    pub fn get(&self, gamma: usize) -> &GaugeDistribution<S> {
        &self.distributions[gamma]
    }

    pub fn to_f64(&self) -> GaugeSet<f64> {
        GaugeSet { n: self.n, k: self.k, distributions: self.distributions.iter().map(|d| d.to_f64()).collect() }
    }
}

fn check_consistent<S: Scalar>(sys: &ProbabilitySystem<S>) -> Result<()> {
    match sys.local_consistency().worst {
        Some(w) => Err(GaugeError::NotLocallyConsistent { region: w.region, deviation: w.deviation }),
        None => Ok(()),
    }
}

fn support_indices<S: Scalar>(sys: &ProbabilitySystem<S>, support: Option<&WorkingSet>) -> Result<Vec<IgnitionIndex>> {
    let bits = sys.n() * sys.k();
    match support {
        None => Ok(WorkingSet::full(sys.n(), sys.k())?.indices().to_vec()),
        Some(ws) if ws.is_empty() => Err(GaugeError::SupportTooSmall),
        Some(ws) => {
            if let Some(j) = ws.indices().iter().find(|j| bits < 64 && j.0 >> bits != 0) {
                return Err(GaugeError::IndexOutOfRange { index: j.0, bits });
            }
            Ok(ws.indices().to_vec())
        }
    }
}

/// Solve the joint equation system of every configuration in `configs`
/// over `support`. Columns with identical incidence are merged, keeping the
/// lowest index, which the entering rule would prefer anyway.
fn solve_joint<S: Scalar>(
    sys: &ProbabilitySystem<S>,
    configs: &[Configuration],
    support: &[IgnitionIndex],
) -> Option<Vec<(IgnitionIndex, S)>> {
    let n = sys.n();
    let k = sys.k();
    let settings: Vec<usize> = {
        let mut set = BTreeSet::new();
        for c in configs {
            for ui in 0..setting_count(n, k) {
                if setting_vector(ui, n, k)[c.region] == c.setting {
                    set.insert(ui);
                }
            }
        }
        set.into_iter().collect()
    };
    let vectors: Vec<Vec<usize>> = settings.iter().map(|&ui| setting_vector(ui, n, k)).collect();

    let mut columns: Vec<IgnitionIndex> = Vec::new();
    let mut signatures: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashMap<Vec<usize>, ()> = HashMap::new();
    for &j in support {
        let sig: Vec<usize> = vectors.iter().map(|u| j.outcomes(k, u)).collect();
        if seen.insert(sig.clone(), ()).is_none() {
            columns.push(j);
            signatures.push(sig);
        }
    }

    let width = 1usize << n;
    let rows = settings.len() * width;
    let mut a = vec![vec![S::zero(); columns.len()]; rows];
    let mut b = Vec::with_capacity(rows);
    for (block, &ui) in settings.iter().enumerate() {
        for xm in 0..width {
            b.push(sys.p_at(xm, ui).clone());
        }
        for (c, sig) in signatures.iter().enumerate() {
            a[block * width + sig[block]][c] = S::one();
        }
    }
    let x = simplex::phase_one(&a, &b, columns.len())?;
    Some(columns.into_iter().zip(x).filter(|(_, w)| !w.is_zero()).collect())
}

/// Non-negative gauge weights for one configuration, or `Infeasible`.
pub fn solve_gauge<S: Scalar>(
    sys: &ProbabilitySystem<S>,
    config: Configuration,
    support: Option<&WorkingSet>,
) -> Result<GaugeDistribution<S>> {
    if config.region >= sys.n() || config.setting >= sys.k() {
        return Err(GaugeError::BadConfiguration(config));
    }
    check_consistent(sys)?;
    let cols = support_indices(sys, support)?;
    solve_joint(sys, &[config], &cols)
        .map(|w| GaugeDistribution::new(config, w))
        .ok_or(GaugeError::Infeasible { configs: vec![config] })
}

/// One gauge per configuration.
///
/// Every configuration is first solved alone; if any fails the whole call is
/// `Infeasible` with the failing list. Configurations are then grouped
/// greedily in index order, a configuration joining the current group when
/// the joint system stays feasible, and each group shares one solution.
/// Sharing is what makes identical distributions come out identical.
pub fn solve_all_gauges<S: Scalar>(sys: &ProbabilitySystem<S>, support: Option<&WorkingSet>) -> Result<GaugeSet<S>> {
    check_consistent(sys)?;
    let cols = support_indices(sys, support)?;
    let k = sys.k();
    let count = sys.n() * k;
    let configs: Vec<Configuration> = (0..count).map(|g| Configuration::from_index(g, k)).collect();

    let mut single: Vec<Option<Vec<(IgnitionIndex, S)>>> = Vec::with_capacity(count);
    let mut failed = Vec::new();
    for &c in &configs {
        let sol = solve_joint(sys, &[c], &cols);
        if sol.is_none() {
            failed.push(c);
        }
        single.push(sol);
    }
    if !failed.is_empty() {
        return Err(GaugeError::Infeasible { configs: failed });
    }

    let mut assigned: Vec<Option<Vec<(IgnitionIndex, S)>>> = vec![None; count];
    for start in 0..count {
        if assigned[start].is_some() {
            continue;
        }
        let mut group = vec![configs[start]];
        let mut solution = single[start].clone().expect("checked above");
        for next in start + 1..count {
            if assigned[next].is_some() {
                continue;
            }
            group.push(configs[next]);
            match solve_joint(sys, &group, &cols) {
                Some(s) => solution = s,
                None => {
                    group.pop();
                }
            }
        }
        for c in &group {
            assigned[c.index(k)] = Some(solution.clone());
        }
    }
    let distributions = configs
        .iter()
        .zip(assigned)
        .map(|(c, w)| GaugeDistribution::new(*c, w.expect("every configuration assigned")))
        .collect();
    GaugeSet::new(sys.n(), k, distributions)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeDeviation {
    pub gamma: usize,
    pub x: Vec<u8>,
    pub u: Vec<usize>,
    pub expected: f64,
    pub reconstructed: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyCheck {
    /// Every reconstruction equal (exactly for rationals, within tolerance
    /// for floats) and every weight non-negative.
    pub exact: bool,
    pub max_deviation: f64,
    pub worst: Option<GaugeDeviation>,
    pub negative_weights: usize,
    pub checked: usize,
}

/// Reconstruct every target from every compatible gauge and compare.
pub fn verify_consistency<S: Scalar>(sys: &ProbabilitySystem<S>, gauges: &GaugeSet<S>) -> ConsistencyCheck {
    let n = sys.n();
    let k = sys.k();
    let mut check = ConsistencyCheck { exact: true, max_deviation: 0.0, worst: None, negative_weights: 0, checked: 0 };
    if gauges.n != n || gauges.k != k {
        check.exact = false;
        check.max_deviation = f64::INFINITY;
        return check;
    }
    for d in &gauges.distributions {
        check.negative_weights += d.weights.iter().filter(|(_, w)| w.is_negative()).count();
    }
    for ui in 0..sys.setting_count() {
        let u = setting_vector(ui, n, k);
        for (region, &setting) in u.iter().enumerate() {
            let gamma = Configuration::new(region, setting).index(k);
            let rec = gauges.get(gamma).reconstruct(k, &u);
            for (xm, value) in rec.iter().enumerate() {
                let expected = sys.p_at(xm, ui);
                check.checked += 1;
                if !value.approx_eq(expected) {
                    check.exact = false;
                }
                let dev = value.abs_diff(expected);
                if dev > check.max_deviation || (check.worst.is_none() && dev > 0.0) {
                    check.max_deviation = check.max_deviation.max(dev);
                    check.worst = Some(GaugeDeviation {
                        gamma,
                        x: outcome_bits(xm, n),
                        u: u.clone(),
                        expected: expected.to_f64(),
                        reconstructed: value.to_f64(),
                        deviation: dev,
                    });
                }
            }
        }
    }
    if check.negative_weights > 0 {
        check.exact = false;
    }
    check
}
