use std::collections::HashMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{CollapseError, CollapsePlan, CollapseTrace, Result, TraceStep};
use crate::gauge::{projection, solve_all_gauges, GaugeError, GaugeSet, IgnitionIndex};
use crate::scalar::Scalar;
use crate::system::{setting_index, setting_vector, Condition, ProbabilitySystem};

/// Overrides for the random choices of the final gauge step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Forcing {
    /// Configuration in parent numbering, `region * K + setting`.
    pub gamma: Option<usize>,
    pub ignition: Option<IgnitionIndex>,
}

/// Gauge set of a residual subsystem plus a sampler per configuration.
#[derive(Debug)]
struct LeafGauges<S> {
    gauges: GaugeSet<S>,
    samplers: Vec<(Vec<IgnitionIndex>, WeightedIndex<f64>)>,
}

impl<S: Scalar> LeafGauges<S> {
    fn new(gauges: GaugeSet<S>) -> Result<Self> {
        let samplers = gauges
            .distributions
            .iter()
            .enumerate()
            .map(|(gamma, d)| {
                let idx = d.support();
                let w: Vec<f64> = d.weights.iter().map(|(_, w)| w.to_f64().max(0.0)).collect();
                WeightedIndex::new(w)
                    .map(|wi| (idx, wi))
                    .map_err(|e| CollapseError::BadGauge { gamma, reason: e.to_string() })
            })
            .collect::<Result<_>>()?;
        Ok(LeafGauges { gauges, samplers })
    }
}

#[derive(Debug)]
enum Node<S> {
    Lead {
        id: String,
        /// Parent index of the region drawn here.
        region: usize,
        /// `[setting][outcome]`.
        marginal: Vec<[S; 2]>,
        /// Child node per `setting * 2 + outcome`; `None` for zero branches.
        children: Vec<Option<usize>>,
    },
    Leaf {
        id: String,
        /// Parent indices of the residual regions, ascending.
        remaining: Vec<usize>,
        system: ProbabilitySystem<S>,
        conditions: Vec<Condition>,
        gauges: Arc<LeafGauges<S>>,
    },
}

/// A plan with every reachable residual branch solved ahead of time.
#[derive(Debug)]
pub struct CompiledPlan<S> {
    system: ProbabilitySystem<S>,
    plan: CollapsePlan,
    nodes: Vec<Node<S>>,
}

type Memo<S> = HashMap<String, Option<Arc<LeafGauges<S>>>>;

fn branch_id(conditions: &[Condition]) -> String {
    if conditions.is_empty() {
        return "root".into();
    }
    conditions
        .iter()
        .map(|c| format!("r{}@{}={}", c.region, c.setting, c.outcome))
        .collect::<Vec<_>>()
        .join("/")
}

struct Builder<'a, S> {
    k: usize,
    lead: &'a [usize],
    /// 1-based position of the final gauge step.
    final_step: usize,
    nodes: Vec<Node<S>>,
    memo: &'a mut Memo<S>,
}

impl<S: Scalar> Builder<'_, S> {
    fn build(&mut self, sys: ProbabilitySystem<S>, remaining: Vec<usize>, conditions: Vec<Condition>) -> Result<usize> {
        let depth = conditions.len();
        let id = branch_id(&conditions);
        if depth == self.lead.len() {
            let key = sys.canonical_key();
            let cached = match self.memo.get(&key) {
                Some(c) => c.clone(),
                None => {
                    let solved = match solve_all_gauges(&sys, None) {
                        Ok(g) => Some(Arc::new(LeafGauges::new(g)?)),
                        Err(GaugeError::Infeasible { .. }) => None,
                        Err(e) => return Err(e.into()),
                    };
                    self.memo.insert(key, solved.clone());
                    solved
                }
            };
            let gauges = cached.ok_or_else(|| CollapseError::InfeasibleBranch { step: self.final_step, branch: id.clone() })?;
            self.nodes.push(Node::Leaf { id, remaining, system: sys, conditions, gauges });
            return Ok(self.nodes.len() - 1);
        }
        let region = self.lead[depth];
        let local = remaining.iter().position(|&r| r == region).expect("plan regions checked");
        let marginal = sys.region_marginal(local)?;
        let slot = self.nodes.len();
        self.nodes.push(Node::Lead { id, region, marginal: marginal.clone(), children: Vec::new() });
        let mut children = Vec::with_capacity(2 * self.k);
        let rest: Vec<usize> = remaining.iter().copied().filter(|&r| r != region).collect();
        for setting in 0..self.k {
            for outcome in 0..2u8 {
                if marginal[setting][outcome as usize].is_zero() {
                    children.push(None);
                    continue;
                }
                let c = sys.condition(local, setting, outcome)?;
                let mut conds = conditions.clone();
                conds.push(Condition { region, setting, outcome });
                children.push(Some(self.build(c.system, rest.clone(), conds)?));
            }
        }
        if let Node::Lead { children: ch, .. } = &mut self.nodes[slot] {
            *ch = children;
        }
        Ok(slot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductLawCheck {
    /// Exact for rationals, within tolerance for floats.
    pub exact: bool,
    pub max_deviation: f64,
    /// Targets times compatible final gauges examined.
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchCertificate<S> {
    pub branch: String,
    pub conditions: Vec<Condition>,
    pub remaining_regions: Vec<usize>,
    pub system: ProbabilitySystem<S>,
    pub gauges: GaugeSet<S>,
}

impl<S: Scalar> CompiledPlan<S> {
    pub fn compile(sys: &ProbabilitySystem<S>, plan: &CollapsePlan) -> Result<Self> {
        Self::compile_memo(sys, plan, &mut HashMap::new())
    }

    fn compile_memo(sys: &ProbabilitySystem<S>, plan: &CollapsePlan, memo: &mut Memo<S>) -> Result<Self> {
        plan.check_regions(sys.n())?;
        if let Some(w) = sys.local_consistency().worst {
            return Err(GaugeError::NotLocallyConsistent { region: w.region, deviation: w.deviation }.into());
        }
        let lead = plan.leading_regions();
        let mut b = Builder { k: sys.k(), lead: &lead, final_step: plan.len(), nodes: Vec::new(), memo };
        b.build(sys.clone(), (0..sys.n()).collect(), Vec::new())?;
        let nodes = b.nodes;
        Ok(CompiledPlan { system: sys.clone(), plan: plan.clone(), nodes })
    }

    /// One-step plan over a supplied gauge set, e.g. a stored fixture.
    pub fn from_gauges(sys: &ProbabilitySystem<S>, gauges: GaugeSet<S>) -> Result<Self> {
        if gauges.n != sys.n() || gauges.k != sys.k() {
            return Err(GaugeError::Shape(format!(
                "gauge set is for n={}, K={}; system has n={}, K={}",
                gauges.n,
                gauges.k,
                sys.n(),
                sys.k()
            ))
            .into());
        }
        let leaf = Node::Leaf {
            id: branch_id(&[]),
            remaining: (0..sys.n()).collect(),
            system: sys.clone(),
            conditions: Vec::new(),
            gauges: Arc::new(LeafGauges::new(gauges)?),
        };
        Ok(CompiledPlan { system: sys.clone(), plan: CollapsePlan::one_step(), nodes: vec![leaf] })
    }

    pub fn system(&self) -> &ProbabilitySystem<S> {
        &self.system
    }

    pub fn plan(&self) -> &CollapsePlan {
        &self.plan
    }

    /// Residual branches with their gauge sets, in depth-first order.
    pub fn certificate(&self) -> Vec<BranchCertificate<S>> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { id, remaining, system, conditions, gauges } => Some(BranchCertificate {
                    branch: id.clone(),
                    conditions: conditions.clone(),
                    remaining_regions: remaining.clone(),
                    system: system.clone(),
                    gauges: gauges.gauges.clone(),
                }),
                Node::Lead { .. } => None,
            })
            .collect()
    }

    pub(crate) fn check_u(&self, u: &[usize]) -> Result<()> {
        let (n, k) = (self.system.n(), self.system.k());
        if u.len() != n || u.iter().any(|&s| s >= k) {
            return Err(CollapseError::BadSettings { u: u.to_vec(), n, k });
        }
        Ok(())
    }

    /// Validate a forcing against `u`, assuming the plan's residual regions.
    pub(crate) fn check_forcing(&self, u: &[usize], forcing: &Forcing) -> Result<()> {
        let Some(gamma) = forcing.gamma else {
            if forcing.ignition.is_some() {
                return Err(CollapseError::InvalidPlan("forcing an ignition index needs a forced gauge".into()));
            }
            return Ok(());
        };
        let k = self.system.k();
        let (region, setting) = (gamma / k, gamma % k);
        let lead = self.plan.leading_regions();
        if region >= self.system.n() || lead.contains(&region) || u[region] != setting {
            return Err(CollapseError::IncompatibleGauge { gamma, u: u.to_vec() });
        }
        Ok(())
    }

    /// One collapse at `u`. Returns the outcome mask; pushes trace steps when asked.
    pub(crate) fn draw<R: Rng + ?Sized>(
        &self,
        u: &[usize],
        rng: &mut R,
        forcing: &Forcing,
        mut trace: Option<&mut Vec<TraceStep>>,
    ) -> Result<usize> {
        let k = self.system.k();
        let mut x = 0usize;
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                Node::Lead { id, region, marginal, children } => {
                    let setting = u[*region];
                    let p0 = marginal[setting][0].to_f64();
                    let outcome = u8::from(rng.random::<f64>() >= p0);
                    x |= (outcome as usize) << region;
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(TraceStep::Leading { region: *region, setting, outcome, branch: id.clone() });
                    }
                    node = children[setting * 2 + outcome as usize].expect("a drawn outcome has positive probability");
                }
                Node::Leaf { id, remaining, gauges, .. } => {
                    let (pos, gamma) = match forcing.gamma {
                        Some(g) => (remaining.iter().position(|&r| r == g / k).expect("forcing checked"), g),
                        None => {
                            let pos = rng.random_range(0..remaining.len());
                            (pos, remaining[pos] * k + u[remaining[pos]])
                        }
                    };
                    let local_gamma = pos * k + u[remaining[pos]];
                    let (support, sampler) = &gauges.samplers[local_gamma];
                    let j = match forcing.ignition {
                        Some(j) => {
                            if gauges.gauges.get(local_gamma).weight(j).is_zero() {
                                return Err(CollapseError::ForcedIndexOutsideSupport { gamma, index: j.0 });
                            }
                            j
                        }
                        None => support[sampler.sample(rng)],
                    };
                    for (p, &r) in remaining.iter().enumerate() {
                        x |= (projection(p * k + u[r], j) as usize) << r;
                    }
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(TraceStep::Final {
                            gamma,
                            region: remaining[pos],
                            setting: u[remaining[pos]],
                            ignition: j.0,
                            branch: id.clone(),
                        });
                    }
                    return Ok(x);
                }
            }
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, u: &[usize], rng: &mut R, forcing: &Forcing) -> Result<(Vec<u8>, CollapseTrace)> {
        self.check_u(u)?;
        self.check_forcing(u, forcing)?;
        let mut steps = Vec::with_capacity(self.plan.len());
        let xm = self.draw(u, rng, forcing, Some(&mut steps))?;
        let x: Vec<u8> = (0..self.system.n()).map(|r| ((xm >> r) & 1) as u8).collect();
        Ok((x.clone(), CollapseTrace { seed: None, u: u.to_vec(), steps, x }))
    }

    /// Run from a fresh generator seeded with `seed`; the trace records it.
    pub fn run_seeded(&self, u: &[usize], seed: u64, forcing: &Forcing) -> Result<(Vec<u8>, CollapseTrace)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, mut trace) = self.run(u, &mut rng, forcing)?;
        trace.seed = Some(seed);
        Ok((x, trace))
    }

    /// Re-run a seeded trace; the result must equal the original.
    pub fn replay(&self, trace: &CollapseTrace, forcing: &Forcing) -> Result<CollapseTrace> {
        let seed = trace.seed.ok_or_else(|| CollapseError::InvalidPlan("trace carries no seed".into()))?;
        Ok(self.run_seeded(&trace.u, seed, forcing)?.1)
    }

    /// Multiply the branch marginals down every path and compare the
    /// product with `P(x|u)`, once per compatible final gauge.
    pub fn product_law(&self) -> ProductLawCheck {
        let sys = &self.system;
        let (n, k) = (sys.n(), sys.k());
        let mut check = ProductLawCheck { exact: true, max_deviation: 0.0, checked: 0 };
        for ui in 0..sys.setting_count() {
            let u = setting_vector(ui, n, k);
            for xm in 0..sys.outcome_count() {
                let expected = sys.p_at(xm, ui);
                let mut weight = S::one();
                let mut node = Some(0usize);
                while let Some(Node::Lead { region, marginal, children, .. }) = node.map(|i| &self.nodes[i]) {
                    let outcome = (xm >> region) & 1;
                    weight = weight * marginal[u[*region]][outcome].clone();
                    node = children[u[*region] * 2 + outcome];
                }
                let mut products = Vec::new();
                match node.map(|i| &self.nodes[i]) {
                    Some(Node::Leaf { remaining, gauges, .. }) => {
                        let sub_u: Vec<usize> = remaining.iter().map(|&r| u[r]).collect();
                        let sub_x = remaining.iter().enumerate().fold(0, |acc, (p, &r)| acc | (((xm >> r) & 1) << p));
                        for (p, &s) in sub_u.iter().enumerate() {
                            let rec = gauges.gauges.get(p * k + s).reconstruct(k, &sub_u);
                            products.push(weight.clone() * rec[sub_x].clone());
                        }
                    }
                    // A zero-probability branch contributes nothing.
                    _ => products.push(S::zero()),
                }
                for prod in products {
                    check.checked += 1;
                    let dev = prod.abs_diff(expected);
                    if !prod.approx_eq(expected) {
                        check.exact = false;
                    }
                    check.max_deviation = check.max_deviation.max(dev);
                }
            }
        }
        check
    }
}

/// One-step collapse with a given gauge set.
pub fn one_step_run<S: Scalar, R: Rng + ?Sized>(
    sys: &ProbabilitySystem<S>,
    gauges: &GaugeSet<S>,
    u: &[usize],
    rng: &mut R,
    forcing: &Forcing,
) -> Result<(Vec<u8>, CollapseTrace)> {
    CompiledPlan::from_gauges(sys, gauges.clone())?.run(u, rng, forcing)
}

/// Compile `plan` and run it once; prefer [`CompiledPlan`] for repeated runs.
pub fn multi_step_run<S: Scalar, R: Rng + ?Sized>(
    sys: &ProbabilitySystem<S>,
    plan: &CollapsePlan,
    u: &[usize],
    rng: &mut R,
) -> Result<(Vec<u8>, CollapseTrace)> {
    CompiledPlan::compile(sys, plan)?.run(u, rng, &Forcing::default())
}

#[derive(Debug)]
pub struct MinSteps<S> {
    pub steps: usize,
    pub plan: CollapsePlan,
    pub compiled: CompiledPlan<S>,
}

impl<S: Scalar> MinSteps<S> {
    pub fn certificate(&self) -> Vec<BranchCertificate<S>> {
        self.compiled.certificate()
    }
}

fn descending_combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(hi: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for r in (0..hi).rev() {
            cur.push(r);
            go(r, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, m, &mut Vec::new(), &mut out);
    out
}

/// First plan with exactly `steps` steps that collapses classically, or
/// `None`. The set of residual branches depends only on which regions lead,
/// not on their order, so each region set is tried once, highest regions
/// first.
pub fn plan_with_steps<S: Scalar>(sys: &ProbabilitySystem<S>, steps: usize) -> Result<Option<MinSteps<S>>> {
    plan_with_steps_memo(sys, steps, &mut HashMap::new())
}

fn plan_with_steps_memo<S: Scalar>(sys: &ProbabilitySystem<S>, steps: usize, memo: &mut Memo<S>) -> Result<Option<MinSteps<S>>> {
    if steps == 0 || steps > sys.n() {
        return Err(CollapseError::InvalidPlan(format!("{steps} steps for a system of {} regions", sys.n())));
    }
    for lead in descending_combinations(sys.n(), steps - 1) {
        let plan = CollapsePlan::leading(&lead)?;
        match CompiledPlan::compile_memo(sys, &plan, memo) {
            Ok(compiled) => return Ok(Some(MinSteps { steps, plan, compiled })),
            Err(CollapseError::InfeasibleBranch { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Smallest number of steps admitting a classical collapse. Residual
/// feasibility is memoized on the conditioned table across attempts.
pub fn find_min_steps<S: Scalar>(sys: &ProbabilitySystem<S>) -> Result<MinSteps<S>> {
    let mut memo: Memo<S> = HashMap::new();
    for steps in 1..=sys.n() {
        if let Some(found) = plan_with_steps_memo(sys, steps, &mut memo)? {
            return Ok(found);
        }
    }
    unreachable!("a single residual region always has a gauge set")
}

/// Setting-vector index helper shared with the simulator.
pub(crate) fn u_index(u: &[usize], k: usize) -> usize {
    setting_index(u, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descending_combination_order() {
        assert_eq!(descending_combinations(3, 1), vec![vec![2], vec![1], vec![0]]);
        assert_eq!(descending_combinations(3, 2), vec![vec![2, 1], vec![2, 0], vec![1, 0]]);
        assert_eq!(descending_combinations(2, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn branch_ids() {
        assert_eq!(branch_id(&[]), "root");
        let c = [Condition { region: 2, setting: 0, outcome: 1 }, Condition { region: 0, setting: 1, outcome: 0 }];
        assert_eq!(branch_id(&c), "r2@0=1/r0@1=0");
    }
}
