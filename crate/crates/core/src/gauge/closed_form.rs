//! Closed-form gauges for EPR-B pairs: small working sets, regular angles,
//! and the continuous-setting limit.

use std::f64::consts::PI;

use rand::Rng;

use super::{bell_lift, double_plateau, Configuration, GaugeDistribution, GaugeError, GaugeSet, IgnitionIndex, Result, WorkingSet};
use crate::scalar::EPS_NUM;

/// Working-set gauges for a 2-region EPR-B system with 2, 3 or 4 settings.
///
/// Weights live on K-bit indices and are lifted to the general encoding;
/// the region-1 gauges duplicate the region-0 ones.
pub fn epr_b_working_gauge(angles: &[f64]) -> Result<GaugeSet<f64>> {
    let k = angles.len();
    let c = |a: usize, b: usize| (angles[b] - angles[a]).cos();
    // Each row: (K-bit indices sharing a weight, label, 4 * weight).
    let table: Vec<Vec<(Vec<u64>, String, f64)>> = match k {
        2 => {
            let c01 = c(0, 1);
            let g = vec![
                (vec![0, 3], "1+cos t01".to_string(), 1.0 + c01),
                (vec![1, 2], "1-cos t01".to_string(), 1.0 - c01),
            ];
            vec![g.clone(), g]
        }
        3 => vec![
            vec![
                (vec![0, 7], "1+cos t02".into(), 1.0 + c(0, 2)),
                (vec![1, 6], "1-cos t01".into(), 1.0 - c(0, 1)),
                (vec![3, 4], "cos t01-cos t02".into(), c(0, 1) - c(0, 2)),
            ],
            vec![
                (vec![0, 7], "cos t01+cos t21".into(), c(0, 1) + c(2, 1)),
                (vec![1, 6], "1-cos t01".into(), 1.0 - c(0, 1)),
                (vec![3, 4], "1-cos t12".into(), 1.0 - c(1, 2)),
            ],
            vec![
                (vec![0, 7], "1+cos t02".into(), 1.0 + c(0, 2)),
                (vec![1, 6], "cos t12-cos t02".into(), c(1, 2) - c(0, 2)),
                (vec![3, 4], "1-cos t12".into(), 1.0 - c(1, 2)),
            ],
        ],
        4 => vec![
            vec![
                (vec![0, 15], "1+cos t30".into(), 1.0 + c(3, 0)),
                (vec![1, 14], "1-cos t10".into(), 1.0 - c(1, 0)),
                (vec![3, 12], "cos t10-cos t20".into(), c(1, 0) - c(2, 0)),
                (vec![7, 8], "cos t20-cos t30".into(), c(2, 0) - c(3, 0)),
            ],
            vec![
                (vec![0, 15], "cos t10+cos t13".into(), c(1, 0) + c(1, 3)),
                (vec![1, 14], "1-cos t10".into(), 1.0 - c(1, 0)),
                (vec![3, 12], "1-cos t12".into(), 1.0 - c(1, 2)),
                (vec![7, 8], "cos t21-cos t31".into(), c(2, 1) - c(3, 1)),
            ],
            vec![
                (vec![0, 15], "cos t20+cos t23".into(), c(2, 0) + c(2, 3)),
                (vec![1, 14], "cos t21-cos t20".into(), c(2, 1) - c(2, 0)),
                (vec![3, 12], "1-cos t12".into(), 1.0 - c(1, 2)),
                (vec![7, 8], "1-cos t23".into(), 1.0 - c(2, 3)),
            ],
            vec![
                (vec![0, 15], "1+cos t30".into(), 1.0 + c(3, 0)),
                (vec![1, 14], "cos t31-cos t30".into(), c(3, 1) - c(3, 0)),
                (vec![3, 12], "cos t32-cos t31".into(), c(3, 2) - c(3, 1)),
                (vec![7, 8], "1-cos t23".into(), 1.0 - c(2, 3)),
            ],
        ],
        other => return Err(GaugeError::UnsupportedSettings(other)),
    };
    let mut per_setting = Vec::with_capacity(k);
    for (setting, rows) in table.iter().enumerate() {
        let mut weights = Vec::new();
        for (indices, label, value) in rows {
            if *value < -EPS_NUM {
                return Err(GaugeError::NegativeEntry { entry: format!("g{setting}: {label}"), value: *value / 4.0 });
            }
            for &j in indices {
                weights.push((bell_lift(j, k), (value / 4.0).max(0.0)));
            }
        }
        per_setting.push(weights);
    }
    duplicated_set(k, &per_setting)
}

fn duplicated_set(k: usize, per_setting: &[Vec<(IgnitionIndex, f64)>]) -> Result<GaugeSet<f64>> {
    let mut distributions = Vec::with_capacity(2 * k);
    for region in 0..2 {
        for (setting, w) in per_setting.iter().enumerate() {
            distributions.push(GaugeDistribution::new(Configuration::new(region, setting), w.clone()));
        }
    }
    GaugeSet::new(2, k, distributions)
}

/// Gauge family for `K` regularly spaced settings `θ_k = kπ/K` on the
/// double-plateau working set.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularGauge {
    pub k: usize,
    /// `g(r)` for `r` in `0..2K`.
    pub weights: Vec<f64>,
    /// `Π(r)` for `r` in `0..2K`.
    pub bits: Vec<u8>,
    pub working_set: WorkingSet,
}

pub fn epr_regular_gauge(k: usize) -> RegularGauge {
    assert!(k >= 2, "regular gauge needs K >= 2");
    let alpha = PI / (2 * k) as f64;
    let m = 0.5 * alpha.sin();
    // The odd-K form is centred on r = 0. For even K the same centring in
    // the double-plateau order puts the peak pair at r = 0, 1, i.e. the
    // cosine argument is (2r - 1)α.
    let weights = (0..2 * k as i64)
        .map(|r| {
            let arg = if k % 2 == 1 { 2 * r } else { 2 * r - 1 };
            m * (arg as f64 * alpha).cos().abs()
        })
        .collect();
    let working_set = double_plateau(k);
    let bits = working_set.indices().iter().map(|j| j.bit(0)).collect();
    RegularGauge { k, weights, bits, working_set }
}

impl RegularGauge {
    pub fn angles(&self) -> Vec<f64> {
        (0..self.k).map(|s| s as f64 * PI / self.k as f64).collect()
    }

    fn shifted(&self, setting: usize, r: usize) -> usize {
        let period = 2 * self.k;
        (r % period + period - setting % period) % period
    }

    /// `g_k(r) = g(r - k)`.
    pub fn weight(&self, setting: usize, r: usize) -> f64 {
        self.weights[self.shifted(setting, r)]
    }

    /// `Π_k(r) = Π(r - k)`.
    pub fn projection(&self, setting: usize, r: usize) -> u8 {
        self.bits[self.shifted(setting, r)]
    }

    /// Gauge set over the lifted double-plateau indices.
    pub fn to_gauge_set(&self) -> Result<GaugeSet<f64>> {
        let per_setting: Vec<Vec<(IgnitionIndex, f64)>> = (0..self.k)
            .map(|s| {
                (0..2 * self.k)
                    .map(|r| (bell_lift(self.working_set.indices()[r].0, self.k), self.weight(s, r)))
                    .collect()
            })
            .collect();
        duplicated_set(self.k, &per_setting)
    }
}

/// Continuous-setting gauge attached to polarizer angle `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousGauge {
    pub theta: f64,
}

pub fn continuous_gauge(theta: f64) -> ContinuousGauge {
    ContinuousGauge { theta: theta.rem_euclid(2.0 * PI) }
}

impl ContinuousGauge {
    /// `g_θ(λ) = |cos(θ - λ)| / 4` on `[0, 2π)`.
    pub fn density(&self, lambda: f64) -> f64 {
        0.25 * (self.theta - lambda).cos().abs()
    }

    /// Square wave: 1 where `cos(θ' - λ) > 0`.
    pub fn projection(theta: f64, lambda: f64) -> u8 {
        u8::from((theta - lambda).cos() > 0.0)
    }

    /// Inverse-CDF draw. Each half-period around `θ` and `θ + π` carries
    /// mass 1/2 with density `cos t / 2`, whose CDF `(1 + sin t) / 2` inverts
    /// to `asin`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let half: bool = rng.random();
        let v: f64 = rng.random();
        let t = (2.0 * v - 1.0).asin();
        let shift = if half { PI } else { 0.0 };
        (self.theta + t + shift).rem_euclid(2.0 * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_weights_normalized() {
        for k in 2..12 {
            let g = epr_regular_gauge(k);
            let s: f64 = g.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "K={k} sum {s}");
        }
    }

    #[test]
    fn regular_projection_is_shifted_bit() {
        for k in 2..9 {
            let g = epr_regular_gauge(k);
            for s in 0..k {
                for r in 0..2 * k {
                    assert_eq!(g.projection(s, r), g.working_set.indices()[r].bit(s), "K={k} s={s} r={r}");
                }
            }
        }
    }

    #[test]
    fn negative_entry_detected() {
        // t01 > t02 makes cos t01 - cos t02 negative.
        let err = epr_b_working_gauge(&[0.0, 1.2, 0.3]).unwrap_err();
        assert!(matches!(err, GaugeError::NegativeEntry { .. }));
        assert!(matches!(epr_b_working_gauge(&[0.0; 5]), Err(GaugeError::UnsupportedSettings(5))));
    }

    #[test]
    fn continuous_projection_endpoints() {
        assert_eq!(ContinuousGauge::projection(0.7, 0.7), 1);
        assert_eq!(ContinuousGauge::projection(0.7, 0.7 + PI), 0);
    }

    #[test]
    fn continuous_density_integrates_to_one() {
        let g = continuous_gauge(0.3);
        let steps = 200_000;
        let h = 2.0 * PI / steps as f64;
        let s: f64 = (0..steps).map(|i| g.density((i as f64 + 0.5) * h) * h).sum();
        assert!((s - 1.0).abs() < 1e-8);
    }
}
