//! Independent oracles for the integration tests. Nothing here calls the
//! library's metric or gauge code; tables are read through `p_at` only.

#![allow(dead_code)]

use num_complex::Complex64;

use gaugesim_core::scalar::{Rational, Scalar};
use gaugesim_core::system::ProbabilitySystem;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Eigenvector of a Pauli axis for outcome bit `x` (0 is the +1 eigenvalue).
fn eigenvector(axis: Axis, x: u8) -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if x == 0 { 1.0 } else { -1.0 };
    match axis {
        Axis::Z if x == 0 => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        Axis::Z => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        Axis::X => [Complex64::new(h, 0.0), Complex64::new(sign * h, 0.0)],
        Axis::Y => [Complex64::new(h, 0.0), Complex64::new(0.0, sign * h)],
    }
}

/// Born rule for a pure ket over `n` qubits; qubit `i` is bit `i` of the
/// computational index. Returns `|<b_x|ψ>|²`.
pub fn born(ket: &[Complex64], axes: &[Axis], x: &[u8]) -> f64 {
    let n = axes.len();
    assert_eq!(ket.len(), 1 << n);
    let mut amp = Complex64::new(0.0, 0.0);
    for (idx, a) in ket.iter().enumerate() {
        let mut bra = Complex64::new(1.0, 0.0);
        for i in 0..n {
            let bit = (idx >> i) & 1;
            bra *= eigenvector(axes[i], x[i])[bit].conj();
        }
        amp += bra * a;
    }
    amp.norm_sqr()
}

pub fn ghz_ket() -> Vec<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = vec![Complex64::new(0.0, 0.0); 8];
    k[0] = Complex64::new(h, 0.0);
    k[7] = Complex64::new(h, 0.0);
    k
}

pub fn w_ket() -> Vec<Complex64> {
    let a = 1.0 / 3f64.sqrt();
    let mut k = vec![Complex64::new(0.0, 0.0); 8];
    for idx in [1, 2, 4] {
        k[idx] = Complex64::new(a, 0.0);
    }
    k
}

pub fn singlet_ket() -> Vec<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![Complex64::new(0.0, 0.0), Complex64::new(h, 0.0), Complex64::new(-h, 0.0), Complex64::new(0.0, 0.0)]
}

pub fn bits(mask: usize, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

pub fn settings(index: usize, n: usize, k: usize) -> Vec<usize> {
    let mut rest = index;
    (0..n)
        .map(|_| {
            let s = rest % k;
            rest /= k;
            s
        })
        .collect()
}

/// Every `(x, u)` pair of a system, `u` outer.
pub fn targets(n: usize, k: usize) -> Vec<(Vec<u8>, Vec<usize>)> {
    let mut out = Vec::new();
    for ui in 0..k.pow(n as u32) {
        for xm in 0..1usize << n {
            out.push((bits(xm, n), settings(ui, n, k)));
        }
    }
    out
}

fn h(ps: impl IntoIterator<Item = f64>) -> f64 {
    ps.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

/// Joint outcome distribution of the regions in `mask` at settings `u`,
/// summed directly from the table.
pub fn marginal_at<S: Scalar>(sys: &ProbabilitySystem<S>, mask: usize, u: &[usize]) -> Vec<f64> {
    let n = sys.n();
    let mut out = vec![0.0; 1 << n];
    for xm in 0..1usize << n {
        let x = bits(xm, n);
        out[xm & mask] += sys.p(&x, u).to_f64();
    }
    out
}

pub fn joint_entropy<S: Scalar>(sys: &ProbabilitySystem<S>, mask: usize, u: &[usize]) -> f64 {
    h(marginal_at(sys, mask, u))
}

/// Three-region atoms written out by hand; index by region mask.
pub fn atoms3<S: Scalar>(sys: &ProbabilitySystem<S>, u: &[usize]) -> [f64; 8] {
    let i = |m: usize| joint_entropy(sys, m, u);
    let all = i(7);
    let mut mu = [0.0; 8];
    // Inside one region only: I(all) - I(other two).
    mu[1] = all - i(6);
    mu[2] = all - i(5);
    mu[4] = all - i(3);
    // Inside exactly a pair {a, b}, outside c: I(a,c) + I(b,c) - I(c) - I(all).
    mu[3] = i(5) + i(6) - i(4) - all;
    mu[5] = i(3) + i(6) - i(2) - all;
    mu[6] = i(3) + i(5) - i(1) - all;
    mu[7] = i(1) + i(2) + i(4) - i(3) - i(5) - i(6) + all;
    mu
}

/// Σ H(X_i) - H(X_1..X_n).
pub fn total_correlation<S: Scalar>(sys: &ProbabilitySystem<S>, u: &[usize]) -> f64 {
    let n = sys.n();
    (0..n).map(|r| joint_entropy(sys, 1 << r, u)).sum::<f64>() - joint_entropy(sys, (1 << n) - 1, u)
}

/// Mutual information of an EPR pair at relative angle with cosine `c`.
pub fn epr_mutual_information(c: f64) -> f64 {
    let term = |v: f64| if v > 0.0 { v * v.log2() } else { 0.0 };
    0.5 * (term(1.0 + c) + term(1.0 - c))
}

/// `E[s0 s1]` with uniform spins, straight from the pair table.
pub fn spin_product<S: Scalar>(sys: &ProbabilitySystem<S>, a: usize, b: usize) -> f64 {
    let p = |x0: u8, x1: u8| sys.p(&[x0, x1], &[a, b]).to_f64();
    p(0, 0) + p(1, 1) - p(0, 1) - p(1, 0)
}

/// Largest |CHSH| over all tuples, brute force.
pub fn chsh_brute<S: Scalar>(sys: &ProbabilitySystem<S>) -> f64 {
    let k = sys.k();
    let mut best: f64 = 0.0;
    for a in 0..k {
        for a2 in 0..k {
            for b in 0..k {
                for b2 in 0..k {
                    if a == a2 || b == b2 {
                        continue;
                    }
                    let v = spin_product(sys, a, b) + spin_product(sys, a2, b) + spin_product(sys, a, b2)
                        - spin_product(sys, a2, b2);
                    best = best.max(v.abs());
                }
            }
        }
    }
    best
}

/// Sum of gauge weights over indices whose configuration bits match `x`
/// at `u`, computed from raw bits.
pub fn reconstruct(weights: &[(u64, f64)], k: usize, x: &[u8], u: &[usize]) -> f64 {
    weights
        .iter()
        .filter(|(j, _)| x.iter().zip(u).enumerate().all(|(i, (&xi, &ui))| ((j >> (ui + i * k)) & 1) as u8 == xi))
        .map(|(_, w)| w)
        .sum()
}
