//! Classical collapse: one-step gauge draws, multi-step cascades and the
//! Monte-Carlo harness around them.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::gauge::{GaugeError, IgnitionIndex};
use crate::system::ModelError;

mod engine;
mod simulate;

pub use engine::{
    find_min_steps, multi_step_run, one_step_run, plan_with_steps, BranchCertificate, CompiledPlan, Forcing, MinSteps,
    ProductLawCheck,
};
pub use simulate::{
    chi_square_homogeneity, simulate, simulate_continuous, thread_count, ChiSquareTest, ContinuousTable,
    EmpiricalTable, BLOCK_RUNS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollapseError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("step {step}: branch {branch} has no one-step gauge set")]
    InfeasibleBranch { step: usize, branch: String },
    #[error("settings {u:?} do not fit a system with n = {n}, K = {k}")]
    BadSettings { u: Vec<usize>, n: usize, k: usize },
    #[error("forced gauge {gamma} is not compatible with settings {u:?}")]
    IncompatibleGauge { gamma: usize, u: Vec<usize> },
    #[error("forced ignition index {index} has zero weight under gauge {gamma}")]
    ForcedIndexOutsideSupport { gamma: usize, index: u64 },
    #[error("gauge {gamma} cannot be sampled: {reason}")]
    BadGauge { gamma: usize, reason: String },
    #[error("need at least one run")]
    NoRuns,
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, CollapseError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "region", rename_all = "snake_case")]
pub enum Step {
    /// Draw this region's outcome from its marginal, then condition on it.
    LeadingRegion(usize),
    /// One-step gauge collapse of whatever is left.
    FinalGauge,
}

/// Ordered leading regions followed by one final gauge step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CollapsePlan {
    steps: Vec<Step>,
}

impl CollapsePlan {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        match steps.last() {
            Some(Step::FinalGauge) => {}
            _ => return Err(CollapseError::InvalidPlan("the last step must be the final gauge".into())),
        }
        let mut seen = Vec::new();
        for s in &steps[..steps.len() - 1] {
            match s {
                Step::FinalGauge => return Err(CollapseError::InvalidPlan("only one final gauge step".into())),
                Step::LeadingRegion(r) if seen.contains(r) => {
                    return Err(CollapseError::InvalidPlan(format!("region {r} leads twice")));
                }
                Step::LeadingRegion(r) => seen.push(*r),
            }
        }
        Ok(CollapsePlan { steps })
    }

    pub fn one_step() -> Self {
        CollapsePlan { steps: vec![Step::FinalGauge] }
    }

    pub fn leading(regions: &[usize]) -> Result<Self> {
        let mut steps: Vec<Step> = regions.iter().map(|&r| Step::LeadingRegion(r)).collect();
        steps.push(Step::FinalGauge);
        Self::new(steps)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Number of steps `m`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn leading_regions(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::LeadingRegion(r) => Some(*r),
                Step::FinalGauge => None,
            })
            .collect()
    }

    /// Leading regions must exist and leave at least one region for the gauge.
    pub fn check_regions(&self, n: usize) -> Result<()> {
        let lead = self.leading_regions();
        if let Some(r) = lead.iter().find(|&&r| r >= n) {
            return Err(CollapseError::InvalidPlan(format!("region {r} out of range for n = {n}")));
        }
        if lead.len() >= n {
            return Err(CollapseError::InvalidPlan(format!("{} leading regions leave nothing for the gauge", lead.len())));
        }
        Ok(())
    }
}

impl fmt::Display for CollapsePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .steps
            .iter()
            .map(|s| match s {
                Step::LeadingRegion(r) => r.to_string(),
                Step::FinalGauge => "final".to_string(),
            })
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// `"2,final"`, `"final"`; a missing trailing `final` is added.
impl FromStr for CollapsePlan {
    type Err = CollapseError;

    fn from_str(s: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("final") {
                steps.push(Step::FinalGauge);
            } else {
                let r = part
                    .parse()
                    .map_err(|_| CollapseError::InvalidPlan(format!("expected a region or 'final', got {part:?}")))?;
                steps.push(Step::LeadingRegion(r));
            }
        }
        if steps.last() != Some(&Step::FinalGauge) {
            steps.push(Step::FinalGauge);
        }
        Self::new(steps)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceStep {
    Leading { region: usize, setting: usize, outcome: u8, branch: String },
    /// `gamma` is in parent numbering, `region * K + setting`.
    Final { gamma: usize, region: usize, setting: usize, ignition: u64, branch: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CollapseTrace {
    pub seed: Option<u64>,
    pub u: Vec<usize>,
    pub steps: Vec<TraceStep>,
    pub x: Vec<u8>,
}

impl CollapseTrace {
    pub fn final_ignition(&self) -> Option<IgnitionIndex> {
        self.steps.iter().rev().find_map(|s| match s {
            TraceStep::Final { ignition, .. } => Some(IgnitionIndex(*ignition)),
            TraceStep::Leading { .. } => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_parse_and_display() {
        let p: CollapsePlan = "2,final".parse().unwrap();
        assert_eq!(p.steps(), &[Step::LeadingRegion(2), Step::FinalGauge]);
        assert_eq!(p.to_string(), "2,final");
        assert_eq!("final".parse::<CollapsePlan>().unwrap(), CollapsePlan::one_step());
        assert_eq!("1,0".parse::<CollapsePlan>().unwrap().leading_regions(), vec![1, 0]);
    }

    #[test]
    fn plan_invariants() {
        assert!(CollapsePlan::new(vec![]).is_err());
        assert!(CollapsePlan::new(vec![Step::FinalGauge, Step::FinalGauge]).is_err());
        assert!(CollapsePlan::new(vec![Step::FinalGauge, Step::LeadingRegion(0)]).is_err());
        assert!(CollapsePlan::leading(&[1, 1]).is_err());
        assert!("x,final".parse::<CollapsePlan>().is_err());
        let p = CollapsePlan::leading(&[0, 1]).unwrap();
        assert!(p.check_regions(2).is_err());
        assert!(p.check_regions(3).is_ok());
        assert!(CollapsePlan::leading(&[3]).unwrap().check_regions(3).is_err());
    }
}
