//! Reference gauge tables for catalog systems, kept separate from solver
//! output (the solver may land on a different feasible vertex).

use crate::gauge::{bell_lift, Configuration, GaugeDistribution, GaugeSet, IgnitionIndex};
use crate::scalar::{Rational, Scalar};

fn r(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

/// Build a set from rows `(j, [numerator per γ])` over a common denominator.
fn from_rows(n: usize, k: usize, denom: i64, rows: &[(u64, &[i64])]) -> GaugeSet<Rational> {
    let distributions = (0..n * k)
        .map(|gamma| {
            let w = rows.iter().map(|(j, nums)| (IgnitionIndex(*j), r(nums[gamma], denom))).collect();
            GaugeDistribution::new(Configuration::from_index(gamma, k), w)
        })
        .collect();
    GaugeSet::new(n, k, distributions).expect("fixture shape")
}

fn uniform_on(n: usize, k: usize, supports: &[&[u64]]) -> GaugeSet<Rational> {
    let distributions = supports
        .iter()
        .enumerate()
        .map(|(gamma, js)| {
            let w = js.iter().map(|&j| (IgnitionIndex(j), r(1, js.len() as i64))).collect();
            GaugeDistribution::new(Configuration::from_index(gamma, k), w)
        })
        .collect();
    GaugeSet::new(n, k, distributions).expect("fixture shape")
}

/// One region: weight `p_k` on `j = 0`, `1 - p_k` on `j = 2^K - 1`.
pub fn one_region_gauges(probs: &[Rational]) -> GaugeSet<Rational> {
    let k = probs.len();
    let top = IgnitionIndex((1u64 << k) - 1);
    let distributions = probs
        .iter()
        .enumerate()
        .map(|(s, p)| GaugeDistribution::new(Configuration::new(0, s), vec![(IgnitionIndex(0), p.clone()), (top, r(1, 1) - p.clone())]))
        .collect();
    GaugeSet::new(1, k, distributions).expect("fixture shape")
}

fn bell2_column(q1: &Rational, q2: &Rational, q: &Rational) -> Vec<(u64, Rational)> {
    vec![
        (0, r(1, 1) - q.clone()),
        (1, q.clone() - q2.clone()),
        (2, q.clone() - q1.clone()),
        (3, q1.clone() + q2.clone() - q.clone()),
    ]
}

/// Gauges of the totally correlated 2-setting family on K-bit indices
/// `0..4`, lifted to the general encoding. Region 1 uses the mirrored family,
/// which swaps the roles of `q3` and `q4`.
pub fn bell2_gauges(q: &[Rational; 4]) -> GaugeSet<Rational> {
    let [q1, q2, q3, q4] = q;
    let cols = [
        bell2_column(q1, q2, q3),
        bell2_column(q1, q2, q4),
        bell2_column(q1, q2, q4),
        bell2_column(q1, q2, q3),
    ];
    let distributions = cols
        .into_iter()
        .enumerate()
        .map(|(gamma, col)| {
            let w = col.into_iter().map(|(j, p)| (bell_lift(j, 2), p)).collect();
            GaugeDistribution::new(Configuration::from_index(gamma, 2), w)
        })
        .collect();
    GaugeSet::new(2, 2, distributions).expect("fixture shape")
}

/// Singlet: one shared distribution, 1/4 on four ignition states.
pub fn singlet_gauges() -> GaugeSet<Rational> {
    let s: &[u64] = &[7, 28, 42, 49];
    uniform_on(2, 3, &[s; 6])
}

pub fn pr_box_gauges() -> GaugeSet<Rational> {
    uniform_on(2, 2, &[&[0, 15], &[6, 9], &[0, 15], &[6, 9]])
}

/// Super-GHZ conditioned on region 2 at setting 0, outcome 0.
pub fn super_ghz_branch_setting0_gauges() -> GaugeSet<Rational> {
    uniform_on(2, 2, &[&[4, 11], &[1, 14], &[1, 14], &[4, 11]])
}

/// Super-GHZ conditioned on region 2 at setting 1, outcome 0.
pub fn super_ghz_branch_setting1_gauges() -> GaugeSet<Rational> {
    uniform_on(2, 2, &[&[2, 13], &[7, 8], &[7, 8], &[2, 13]])
}

/// 28-state gauge set of the W state (X, Y settings), in 24ths.
pub fn w_xy_gauges() -> GaugeSet<Rational> {
    const ROWS: [(u64, [i64; 6]); 28] = [
        (0, [4, 4, 4, 4, 4, 4]),
        (2, [0, 0, 0, 0, 1, 0]),
        (5, [0, 0, 0, 0, 1, 5]),
        (9, [0, 0, 0, 0, 1, 1]),
        (10, [0, 0, 0, 0, 4, 0]),
        (14, [0, 0, 0, 0, 1, 0]),
        (17, [0, 0, 1, 5, 0, 0]),
        (18, [0, 0, 1, 1, 0, 0]),
        (20, [1, 5, 0, 0, 0, 0]),
        (21, [5, 0, 5, 0, 5, 0]),
        (22, [0, 1, 1, 0, 1, 1]),
        (24, [1, 1, 0, 0, 0, 0]),
        (25, [1, 0, 0, 1, 1, 0]),
        (26, [0, 1, 0, 1, 1, 1]),
        (31, [0, 0, 0, 0, 4, 0]),
        (33, [0, 0, 1, 1, 0, 0]),
        (34, [0, 0, 5, 1, 0, 0]),
        (36, [1, 1, 0, 0, 0, 0]),
        (37, [1, 0, 1, 0, 0, 1]),
        (38, [0, 1, 1, 0, 0, 1]),
        (40, [5, 1, 0, 0, 0, 0]),
        (41, [1, 0, 0, 1, 0, 1]),
        (42, [0, 5, 0, 5, 0, 5]),
        (47, [0, 0, 0, 0, 0, 4]),
        (55, [0, 0, 4, 0, 0, 0]),
        (59, [0, 0, 0, 4, 0, 0]),
        (61, [4, 0, 0, 0, 0, 0]),
        (62, [0, 4, 0, 0, 0, 0]),
    ];
    let rows: Vec<(u64, &[i64])> = ROWS.iter().map(|(j, w)| (*j, &w[..])).collect();
    from_rows(3, 2, 24, &rows)
}

/// 29-state gauge set of the GHZ state (X, Y settings), in 8ths.
pub fn ghz_xy_gauges() -> GaugeSet<Rational> {
    const ROWS: [(u64, [i64; 6]); 29] = [
        (2, [0, 0, 1, 0, 1, 0]),
        (3, [0, 1, 0, 0, 0, 1]),
        (5, [0, 0, 0, 0, 0, 1]),
        (7, [1, 0, 0, 1, 1, 0]),
        (8, [1, 0, 0, 0, 1, 0]),
        (10, [0, 0, 0, 0, 0, 1]),
        (12, [0, 0, 0, 1, 0, 0]),
        (13, [0, 1, 1, 0, 1, 0]),
        (17, [1, 0, 0, 1, 1, 0]),
        (20, [0, 1, 1, 0, 1, 0]),
        (26, [0, 1, 0, 1, 0, 0]),
        (27, [0, 0, 1, 0, 1, 0]),
        (28, [1, 0, 0, 0, 0, 1]),
        (30, [0, 0, 0, 0, 1, 0]),
        (32, [1, 0, 1, 0, 0, 1]),
        (34, [0, 0, 0, 1, 0, 0]),
        (38, [0, 1, 0, 0, 0, 1]),
        (39, [0, 0, 1, 0, 0, 0]),
        (40, [0, 1, 0, 0, 0, 0]),
        (41, [0, 0, 0, 1, 0, 1]),
        (45, [1, 0, 0, 0, 0, 0]),
        (47, [0, 0, 0, 0, 0, 1]),
        (48, [0, 1, 0, 1, 0, 0]),
        (49, [0, 0, 1, 0, 0, 0]),
        (52, [1, 0, 0, 0, 0, 0]),
        (54, [0, 0, 1, 0, 0, 0]),
        (57, [1, 0, 0, 0, 0, 0]),
        (59, [0, 0, 0, 1, 0, 0]),
        (62, [0, 1, 0, 0, 0, 0]),
    ];
    let rows: Vec<(u64, &[i64])> = ROWS.iter().map(|(j, w)| (*j, &w[..])).collect();
    from_rows(3, 2, 8, &rows)
}

fn float_rows(k: usize, rows: &[(u64, &[f64])]) -> GaugeSet<f64> {
    let distributions = (0..2 * k)
        .map(|gamma| {
            let s = gamma % k;
            let w = rows.iter().map(|(j, v)| (bell_lift(*j, k), v[s])).collect();
            GaugeDistribution::new(Configuration::from_index(gamma, k), w)
        })
        .collect();
    GaugeSet::new(2, k, distributions).expect("fixture shape")
}

/// Three-decimal EPR-B gauges at angles (0, π/5, π/2).
pub fn epr_b3_reference() -> GaugeSet<f64> {
    float_rows(
        3,
        &[
            (0, &[0.250, 0.349, 0.250]),
            (1, &[0.048, 0.048, 0.147]),
            (3, &[0.202, 0.103, 0.103]),
            (4, &[0.202, 0.103, 0.103]),
            (6, &[0.048, 0.048, 0.147]),
            (7, &[0.250, 0.349, 0.250]),
        ],
    )
}

/// Three-decimal EPR-B gauges at angles (0, π/4, π/2, 3π/4).
pub fn epr_b4_reference() -> GaugeSet<f64> {
    float_rows(
        4,
        &[
            (0, &[0.073, 0.177, 0.177, 0.073]),
            (1, &[0.073, 0.073, 0.177, 0.177]),
            (3, &[0.177, 0.073, 0.073, 0.177]),
            (7, &[0.177, 0.177, 0.073, 0.073]),
            (8, &[0.177, 0.177, 0.073, 0.073]),
            (12, &[0.177, 0.073, 0.073, 0.177]),
            (14, &[0.073, 0.073, 0.177, 0.177]),
            (15, &[0.073, 0.177, 0.177, 0.073]),
        ],
    )
}
