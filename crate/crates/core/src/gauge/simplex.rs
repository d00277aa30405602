//! Phase-one simplex for `A x = b, x >= 0` with Bland's rule.

use crate::scalar::Scalar;

/// Returns a basic feasible solution, or `None` when the system has no
/// non-negative solution. `a` is dense, row-major, `m × cols`.
///
/// Artificial columns are dropped once they leave the basis, so only
/// structural columns are entering candidates; among them the lowest index
/// with negative reduced cost enters, and ratio ties go to the lowest basic
/// variable index.
pub fn phase_one<S: Scalar>(a: &[Vec<S>], b: &[S], cols: usize) -> Option<Vec<S>> {
    let m = a.len();
    debug_assert_eq!(b.len(), m);
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(m);
    let mut rhs: Vec<S> = Vec::with_capacity(m);
    for (row, bi) in a.iter().zip(b) {
        debug_assert_eq!(row.len(), cols);
        if bi.is_negative() {
            rows.push(row.iter().map(|v| -v.clone()).collect());
            rhs.push(-bi.clone());
        } else {
            rows.push(row.clone());
            rhs.push(bi.clone());
        }
    }
    // Basis entries >= cols denote the artificial variable of that row.
    let mut basis: Vec<usize> = (0..m).map(|i| cols + i).collect();
    let mut cost = vec![S::zero(); cols];
    let mut cost_rhs = S::zero();
    for (row, bi) in rows.iter().zip(&rhs) {
        for (c, v) in cost.iter_mut().zip(row) {
            if !v.is_zero() {
                *c = c.clone() - v.clone();
            }
        }
        cost_rhs = cost_rhs - bi.clone();
    }

    while let Some(enter) = (0..cols).find(|&c| cost[c].is_negative()) {
        let mut leave: Option<(usize, S)> = None;
        for i in 0..m {
            if !rows[i][enter].is_positive() {
                continue;
            }
            let ratio = rhs[i].clone() / rows[i][enter].clone();
            let better = match &leave {
                None => true,
                Some((li, best)) => {
                    let d = ratio.clone() - best.clone();
                    d.is_negative() || (d.is_zero() && basis[i] < basis[*li])
                }
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        // Phase one is bounded below, so a column with negative reduced cost
        // always has a positive entry; bail out defensively on float noise.
        let Some((p, _)) = leave else {
            break;
        };
        pivot(&mut rows, &mut rhs, &mut cost, &mut cost_rhs, p, enter);
        basis[p] = enter;
    }

    if !cost_rhs.is_zero() {
        return None;
    }
    let mut x = vec![S::zero(); cols];
    for (i, &var) in basis.iter().enumerate() {
        if var < cols {
            x[var] = if rhs[i].is_negative() || rhs[i].is_zero() { S::zero() } else { rhs[i].clone() };
        }
    }
    Some(x)
}

fn pivot<S: Scalar>(rows: &mut [Vec<S>], rhs: &mut [S], cost: &mut [S], cost_rhs: &mut S, p: usize, enter: usize) {
    let inv = S::one() / rows[p][enter].clone();
    let nz: Vec<usize> = (0..rows[p].len()).filter(|&c| !rows[p][c].is_zero()).collect();
    for &c in &nz {
        rows[p][c] = rows[p][c].clone() * inv.clone();
    }
    rows[p][enter] = S::one();
    rhs[p] = rhs[p].clone() * inv;
    let prow = rows[p].clone();
    let prhs = rhs[p].clone();

    let eliminate = |row: &mut [S], r: &mut S| {
        let f = row[enter].clone();
        if f.is_zero() {
            row[enter] = S::zero();
            return;
        }
        for &c in &nz {
            let v = row[c].clone() - f.clone() * prow[c].clone();
            row[c] = if v.is_zero() { S::zero() } else { v };
        }
        row[enter] = S::zero();
        let v = r.clone() - f * prhs.clone();
        *r = if v.is_zero() { S::zero() } else { v };
    };
    for i in 0..rows.len() {
        if i != p {
            let (row, r) = (&mut rows[i], &mut rhs[i]);
            eliminate(row, r);
        }
    }
    eliminate(cost, cost_rhs);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn finds_feasible_point() {
        // x0 + x1 = 1, x1 + x2 = 1/2
        let a = vec![vec![r(1, 1), r(1, 1), r(0, 1)], vec![r(0, 1), r(1, 1), r(1, 1)]];
        let b = vec![r(1, 1), r(1, 2)];
        let x = phase_one(&a, &b, 3).unwrap();
        assert_eq!(x[0].clone() + x[1].clone(), r(1, 1));
        assert_eq!(x[1].clone() + x[2].clone(), r(1, 2));
        assert!(x.iter().all(|v| !v.is_negative()));
    }

    #[test]
    fn detects_infeasible() {
        // x0 + x1 = 1, x0 + x1 = 2
        let a = vec![vec![r(1, 1), r(1, 1)], vec![r(1, 1), r(1, 1)]];
        assert!(phase_one(&a, &[r(1, 1), r(2, 1)], 2).is_none());
        // x0 - x1 = -1 with x0 = 1 - x1 forces x1 = 1, x0 = 0: feasible.
        let a = vec![vec![r(1, 1), r(-1, 1)], vec![r(1, 1), r(1, 1)]];
        let x = phase_one(&a, &[r(-1, 1), r(1, 1)], 2).unwrap();
        assert_eq!(x, vec![r(0, 1), r(1, 1)]);
        // x0 = -1 has no non-negative solution.
        assert!(phase_one(&[vec![r(1, 1)]], &[r(-1, 1)], 1).is_none());
    }

    #[test]
    fn redundant_rows_are_fine() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 0.0]];
        let x = phase_one(&a, &[1.0, 2.0, 0.25], 2).unwrap();
        assert!((x[0] - 0.25).abs() < 1e-12 && (x[1] - 0.75).abs() < 1e-12);
    }
}
