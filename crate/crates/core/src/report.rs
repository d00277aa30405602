//! JSON reports shared by the command line and in-process callers.

use serde_json::{json, Value};

use crate::collapse::{BranchCertificate, MinSteps};
use crate::gauge::GaugeSet;
use crate::io::{gauges_to_value, report_scalar, SCHEMA};
use crate::metrics::{self, MetricsError, SpinConvention};
use crate::scalar::Scalar;
use crate::system::{setting_count, setting_vector, ProbabilitySystem};

/// Every metric of a locally consistent system. With `settings` the
/// per-setting sections cover that vector only; otherwise every vector.
pub fn metrics_report<S: Scalar>(sys: &ProbabilitySystem<S>, settings: Option<&[usize]>) -> Result<Value, MetricsError> {
    let (n, k) = (sys.n(), sys.k());
    let vectors: Vec<Vec<usize>> = match settings {
        Some(u) => vec![u.to_vec()],
        None => (0..setting_count(n, k)).map(|ui| setting_vector(ui, n, k)).collect(),
    };

    let mut s1 = Vec::with_capacity(n);
    for r in 0..n {
        let row = (0..k).map(|s| metrics::measurement_entropy(sys, &[r], &[s])).collect::<Result<Vec<_>, _>>()?;
        s1.push(row);
    }

    let mut s2 = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let pair = sys.marginal(&[a, b])?.system;
            let m = metrics::s2_matrix(&pair)?;
            s2.push(json!({ "regions": [a, b], "values": m.values }));
        }
    }

    let mut atoms = Vec::new();
    let mut s_n = Vec::new();
    let mut total = Vec::new();
    for u in &vectors {
        if n <= metrics::MAX_DIAGRAM_REGIONS {
            let d = metrics::atom_measures(sys, u)?;
            atoms.push(json!({ "u": u, "joint": d.joint, "atoms": d.atoms }));
        }
        s_n.push(json!({ "u": u, "value": metrics::s_n(sys, u)? }));
        total.push(json!({ "u": u, "value": metrics::total_entanglement(sys, u)? }));
    }

    let chsh_max = if n == 2 { serde_json::to_value(metrics::chsh_max(sys, SpinConvention::Uniform)?).expect("plain data") } else { Value::Null };
    let scheme = metrics::entanglement_scheme(sys)?;
    let classification = metrics::classify(sys)?;
    Ok(json!({
        "schema": SCHEMA,
        "n": n,
        "k": k,
        "s1": s1,
        "s2_matrix": s2,
        "atoms": atoms,
        "s_n": s_n,
        "total_entanglement": total,
        "chsh_max": chsh_max,
        "scheme": scheme,
        "classification": classification,
    }))
}

pub fn classification_report<S: Scalar>(sys: &ProbabilitySystem<S>) -> Result<Value, MetricsError> {
    let c = metrics::classify(sys)?;
    Ok(json!({ "schema": SCHEMA, "class": c.class, "classification": c }))
}

pub fn gauge_set_report<S: Scalar>(gauges: &GaugeSet<S>) -> Value {
    let mut v = gauges_to_value(gauges);
    v["steps"] = json!(1);
    v["feasible"] = json!(true);
    v
}

fn branch_value<S: Scalar>(b: &BranchCertificate<S>) -> Value {
    json!({
        "branch": b.branch,
        "conditions": b.conditions,
        "remaining_regions": b.remaining_regions,
        "gauges": gauges_to_value(&b.gauges)["gauges"],
    })
}

pub fn min_steps_report<S: Scalar>(found: &MinSteps<S>) -> Value {
    let branches: Vec<Value> = found.certificate().iter().map(branch_value).collect();
    let law = found.compiled.product_law();
    json!({
        "schema": SCHEMA,
        "feasible": true,
        "steps": found.steps,
        "plan": found.plan.to_string(),
        "product_law": law,
        "branches": branches,
    })
}

/// Exact probability column as report values.
pub fn column_values<S: Scalar>(sys: &ProbabilitySystem<S>, u_index: usize) -> Vec<Value> {
    sys.column(u_index).iter().map(report_scalar).collect()
}
