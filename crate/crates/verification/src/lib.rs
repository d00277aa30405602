//! Random instance generators shared by the acceptance run. Entropy
//! helpers here read tables directly and never call the metrics module.

use gaugesim_core::scalar::{Rational, Scalar};
use gaugesim_core::system::{default_labels, ProbabilitySystem};
use rand::Rng;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
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

/// Deterministic local strategy: bit `s + r*K` is region r's answer at setting s.
pub fn deterministic(n: usize, k: usize, strategy: u64) -> ProbabilitySystem<Rational> {
    ProbabilitySystem::from_fn(n, k, default_labels(k), |x, u| {
        let hit = (0..n).all(|r| ((strategy >> (u[r] + r * k)) & 1) as u8 == x[r]);
        if hit { q(1, 1) } else { q(0, 1) }
    })
    .expect("deterministic table")
}

/// Convex combination with integer weights.
pub fn mixture(parts: &[(ProbabilitySystem<Rational>, u32)]) -> ProbabilitySystem<Rational> {
    let total: u32 = parts.iter().map(|(_, w)| w).sum();
    let (n, k) = (parts[0].0.n(), parts[0].0.k());
    ProbabilitySystem::from_fn(n, k, default_labels(k), |x, u| {
        parts.iter().fold(q(0, 1), |acc, (s, w)| acc + s.p(x, u).clone() * q(*w as i64, total as i64))
    })
    .expect("mixture of valid tables")
}

/// Locally consistent rational system: a mixture of up to four deterministic
/// strategies, blended with a PR-box or super-GHZ table about half the time
/// when the shape allows it.
pub fn random_consistent<R: Rng>(rng: &mut R, n: usize, k: usize) -> ProbabilitySystem<Rational> {
    let count = rng.random_range(1..=4);
    let mut parts: Vec<_> =
        (0..count).map(|_| (deterministic(n, k, rng.random::<u64>()), rng.random_range(1..8))).collect();
    if k == 2 && n >= 2 && rng.random::<bool>() {
        let extra = if n == 2 { gaugesim_core::catalog::pr_box() } else { gaugesim_core::catalog::super_ghz() };
        parts.push((extra, rng.random_range(1..4)));
    }
    mixture(&parts)
}

/// Product of two independent one-region coins with `k` settings.
pub fn random_coin_product<R: Rng>(rng: &mut R, k: usize) -> ProbabilitySystem<f64> {
    let parts: Vec<_> = (0..2)
        .map(|_| {
            let p: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            ProbabilitySystem::from_fn(1, k, default_labels(k), |x, u| if x[0] == 0 { p[u[0]] } else { 1.0 - p[u[0]] })
                .expect("coin table")
        })
        .collect();
    ProbabilitySystem::product(&parts).expect("product of coins")
}

/// Local mixture where both regions share each response function.
pub fn random_correlated_local<R: Rng>(rng: &mut R, k: usize) -> ProbabilitySystem<Rational> {
    let count = rng.random_range(1..=5);
    let parts: Vec<_> = (0..count)
        .map(|_| {
            let shared = rng.random::<u64>() & ((1 << k) - 1);
            (deterministic(2, k, shared | (shared << k)), rng.random_range(1..8))
        })
        .collect();
    mixture(&parts)
}

/// Shannon entropy in bits of the regions in `mask` at settings `u`.
pub fn joint_entropy<S: Scalar>(sys: &ProbabilitySystem<S>, mask: usize, u: &[usize]) -> f64 {
    let n = sys.n();
    let mut cells = vec![0.0; 1 << n];
    for xm in 0..1usize << n {
        cells[xm & mask] += sys.p(&bits(xm, n), u).to_f64();
    }
    cells.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn generated_systems_are_consistent() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..20 {
            assert!(random_consistent(&mut rng, 3, 2).is_locally_consistent());
            assert!(random_correlated_local(&mut rng, 3).is_totally_correlated().unwrap());
            assert!(random_coin_product(&mut rng, 3).is_locally_consistent());
        }
    }

    #[test]
    fn entropy_of_a_fair_coin() {
        let sys = mixture(&[(deterministic(1, 1, 0), 1), (deterministic(1, 1, 1), 1)]);
        assert!((joint_entropy(&sys, 1, &[0]) - 1.0).abs() < 1e-12);
    }
}
