use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::engine::u_index;
use super::{CollapseError, CompiledPlan, Forcing, Result};
use crate::catalog::epr_b_probability;
use crate::gauge::{continuous_gauge, ContinuousGauge};
use crate::scalar::Scalar;
use crate::system::{setting_vector, ProbabilitySystem};

/// Runs per RNG stream. Block `b` always uses stream `b`, so results do not
/// depend on how blocks are spread over threads.
pub const BLOCK_RUNS: u64 = 4096;

/// Worker count from `GAUGESIM_THREADS`, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("GAUGESIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Run `runs` draws in fixed blocks across worker threads and sum the
/// per-block counts of `width` outcome cells.
fn run_blocks<F>(runs: u64, seed: u64, width: usize, draw: F) -> Result<Vec<u64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<usize> + Sync,
{
    if runs == 0 {
        return Err(CollapseError::NoRuns);
    }
    let blocks = runs.div_ceil(BLOCK_RUNS) as usize;
    let threads = thread_count().min(blocks).max(1);
    let next = AtomicUsize::new(0);
    let total = Mutex::new(vec![0u64; width]);
    let failure: Mutex<Option<CollapseError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| {
                let mut local = vec![0u64; width];
                loop {
                    let b = next.fetch_add(1, Ordering::Relaxed);
                    if b >= blocks {
                        break;
                    }
                    let mut rng = block_rng(seed, b as u64);
                    let len = BLOCK_RUNS.min(runs - b as u64 * BLOCK_RUNS);
                    for _ in 0..len {
                        match draw(&mut rng) {
                            Ok(cell) => local[cell] += 1,
                            Err(e) => {
                                failure.lock().expect("poisoned").get_or_insert(e);
                                return;
                            }
                        }
                    }
                }
                let mut t = total.lock().expect("poisoned");
                for (acc, c) in t.iter_mut().zip(local) {
                    *acc += c;
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(total.into_inner().expect("poisoned"))
}

/// Outcome counts per setting vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalTable {
    pub n: usize,
    pub k: usize,
    counts: BTreeMap<usize, Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalRow {
    pub u: Vec<usize>,
    pub runs: u64,
    /// Indexed by outcome mask, bit `i` for region `i`.
    pub counts: Vec<u64>,
}

impl EmpiricalTable {
    pub fn new(n: usize, k: usize) -> Self {
        EmpiricalTable { n, k, counts: BTreeMap::new() }
    }

    pub fn add(&mut self, u: &[usize], counts: &[u64]) {
        let row = self.counts.entry(u_index(u, self.k)).or_insert_with(|| vec![0; 1 << self.n]);
        for (acc, c) in row.iter_mut().zip(counts) {
            *acc += c;
        }
    }

    pub fn record(&mut self, u: &[usize], x_mask: usize) {
        let row = self.counts.entry(u_index(u, self.k)).or_insert_with(|| vec![0; 1 << self.n]);
        row[x_mask] += 1;
    }

    pub fn merge(&mut self, other: &EmpiricalTable) {
        assert_eq!((self.n, self.k), (other.n, other.k), "merging tables of different shape");
        for (&ui, row) in &other.counts {
            let u = setting_vector(ui, self.n, self.k);
            self.add(&u, row);
        }
    }

    pub fn counts(&self, u: &[usize]) -> Option<&[u64]> {
        self.counts.get(&u_index(u, self.k)).map(Vec::as_slice)
    }

    pub fn runs(&self, u: &[usize]) -> u64 {
        self.counts(u).map(|c| c.iter().sum()).unwrap_or(0)
    }

    pub fn total_runs(&self) -> u64 {
        self.counts.values().flatten().sum()
    }

    pub fn frequencies(&self, u: &[usize]) -> Option<Vec<f64>> {
        let c = self.counts(u)?;
        let total: u64 = c.iter().sum();
        Some(c.iter().map(|&v| v as f64 / total as f64).collect())
    }

    /// `½ Σ |freq - P(x|u)|`; `None` when `u` was never simulated.
    pub fn tv_distance<S: Scalar>(&self, sys: &ProbabilitySystem<S>, u: &[usize]) -> Option<f64> {
        let f = self.frequencies(u)?;
        let col = sys.column(u_index(u, self.k));
        Some(0.5 * f.iter().zip(col).map(|(a, b)| (a - b.to_f64()).abs()).sum::<f64>())
    }

    /// Counts of one region's outcome at `u`.
    pub fn region_counts(&self, u: &[usize], region: usize) -> Option<[u64; 2]> {
        let c = self.counts(u)?;
        let mut out = [0u64; 2];
        for (xm, &v) in c.iter().enumerate() {
            out[(xm >> region) & 1] += v;
        }
        Some(out)
    }

    pub fn rows(&self) -> Vec<EmpiricalRow> {
        self.counts
            .iter()
            .map(|(&ui, c)| EmpiricalRow { u: setting_vector(ui, self.n, self.k), runs: c.iter().sum(), counts: c.clone() })
            .collect()
    }
}

/// `runs` independent collapses at `u`.
pub fn simulate<S: Scalar>(
    plan: &CompiledPlan<S>,
    u: &[usize],
    runs: u64,
    seed: u64,
    forcing: &Forcing,
) -> Result<EmpiricalTable> {
    plan.check_u(u)?;
    plan.check_forcing(u, forcing)?;
    let sys = plan.system();
    let counts = run_blocks(runs, seed, 1 << sys.n(), |rng| plan.draw(u, rng, forcing, None))?;
    let mut table = EmpiricalTable::new(sys.n(), sys.k());
    table.add(u, &counts);
    Ok(table)
}

/// Outcome counts of the continuous EPR-B model at one angle pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousTable {
    pub theta: [f64; 2],
    /// Indexed by `x0 | x1 << 1`.
    pub counts: [u64; 4],
}

impl ContinuousTable {
    pub fn runs(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequency(&self, x0: u8, x1: u8) -> f64 {
        self.counts[(x0 | (x1 << 1)) as usize] as f64 / self.runs() as f64
    }

    pub fn tv_distance(&self) -> f64 {
        let mut s = 0.0;
        for x0 in 0..2u8 {
            for x1 in 0..2u8 {
                s += (self.frequency(x0, x1) - epr_b_probability(x0, x1, self.theta[0], self.theta[1])).abs();
            }
        }
        0.5 * s
    }

    pub fn region_counts(&self, region: usize) -> [u64; 2] {
        let mut out = [0u64; 2];
        for (xm, &v) in self.counts.iter().enumerate() {
            out[(xm >> region) & 1] += v;
        }
        out
    }
}

/// Continuous EPR-B collapse: pick one of the two angles uniformly, draw
/// `λ` from its gauge and project both regions with the same `λ`.
pub fn simulate_continuous(theta_a: f64, theta_b: f64, runs: u64, seed: u64) -> Result<ContinuousTable> {
    let gauges = [continuous_gauge(theta_a), continuous_gauge(theta_b)];
    let counts = run_blocks(runs, seed, 4, |rng| {
        let g = &gauges[usize::from(rng.random::<bool>())];
        let lambda = g.sample(rng);
        let x0 = ContinuousGauge::projection(theta_a, lambda);
        let x1 = ContinuousGauge::projection(theta_b, lambda);
        Ok((x0 | (x1 << 1)) as usize)
    })?;
    let wrap = |t: f64| t.rem_euclid(2.0 * PI);
    Ok(ContinuousTable { theta: [wrap(theta_a), wrap(theta_b)], counts: counts.try_into().expect("four cells") })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    /// True when homogeneity is not rejected at level `alpha`.
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Pearson homogeneity test over rows of category counts. Categories that
/// are empty in every row are dropped.
pub fn chi_square_homogeneity(rows: &[Vec<u64>]) -> ChiSquareTest {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let col_tot: Vec<f64> = (0..width).map(|c| rows.iter().map(|r| *r.get(c).unwrap_or(&0) as f64).sum()).collect();
    let row_tot: Vec<f64> = rows.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let grand: f64 = row_tot.iter().sum();
    let cols: Vec<usize> = (0..width).filter(|&c| col_tot[c] > 0.0).collect();
    let live_rows: Vec<usize> = (0..rows.len()).filter(|&r| row_tot[r] > 0.0).collect();
    let mut stat = 0.0;
    for &r in &live_rows {
        for &c in &cols {
            let expected = row_tot[r] * col_tot[c] / grand;
            let observed = *rows[r].get(c).unwrap_or(&0) as f64;
            stat += (observed - expected).powi(2) / expected;
        }
    }
    let dof = live_rows.len().saturating_sub(1) * cols.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(stat)
    };
    ChiSquareTest { statistic: stat, dof, p_value }
}
