//! Per-index statistics of the polarized channels and frozen-set selection.

mod exact;
mod mc;
mod spec;

pub use exact::{exact_entropy_levels, track_channels_exact, ExactTracking};
pub use mc::estimate_index_stats_mc;
pub use spec::{CodeSpec, Method, SpecError, StatsDigest, MAX_DEPTH};

use thiserror::Error;

use crate::channel::{Channel, ChannelError};
use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error("atom budget {budget} exceeded at level {level} (estimated {estimated} atoms)")]
    AtomBudgetExceeded {
        level: u32,
        estimated: u64,
        budget: u64,
    },
    #[error("depth {0} too large")]
    DepthTooLarge(u32),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("rate {0} outside [0, 1]")]
    RateOutOfRange(f64),
    #[error("threshold {0} is not a finite number")]
    BadThreshold(f64),
    #[error("initial bound {0} outside [0, 1]")]
    BoundOutOfRange(f64),
    #[error("statistics cover {have} indices, depth {n} needs {need}")]
    IncompleteStats { n: u32, have: usize, need: usize },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Statistics of one synthesized channel `W_n^(i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexRecord<T: Real> {
    pub index: usize,
    /// Conditional entropy `H(U_i | U_<i, Y)`, normalized.
    pub h_hat: T,
    /// Largest Bhattacharyya parameter over nonzero shifts.
    pub z_hat: T,
    /// Upper bound on `z_hat` from the squaring / `q^3` recursion.
    pub z_tilde: T,
    /// Standard errors of the Monte Carlo estimates; zero for exact values.
    pub h_std_err: T,
    pub z_std_err: T,
}

impl<T: Real> IndexRecord<T> {
    /// `T_i = h (1 - h)`.
    pub fn symmetric_entropy(&self) -> T {
        self.h_hat * (T::one() - self.h_hat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexStats<T: Real> {
    pub q: usize,
    pub n: u32,
    pub digest: StatsDigest,
    pub records: Vec<IndexRecord<T>>,
    /// Set when any channel on the way was merged lossily.
    pub approximate: bool,
}

impl<T: Real> IndexStats<T> {
    pub fn block_len(&self) -> usize {
        1 << self.n
    }

    pub fn entropy_sum(&self) -> T {
        self.records.iter().map(|r| r.h_hat).sum()
    }

    fn check_complete(&self) -> Result<(), ConstructionError> {
        if self.records.len() != self.block_len() {
            return Err(ConstructionError::IncompleteStats {
                n: self.n,
                have: self.records.len(),
                need: self.block_len(),
            });
        }
        Ok(())
    }
}

/// Upper bound on `Z_max(W_n^(i))` from `Z_max(W) = z0`: each `plus` step
/// squares the bound and each `minus` step multiplies it by `q^3`, capped at 1.
/// Steps are read from the most significant bit of `i` to the least.
pub fn z_bound_recursion<T: Real>(
    z0: T,
    i: usize,
    n: u32,
    q: usize,
) -> Result<T, ConstructionError> {
    if !(z0 >= T::zero() && z0 <= T::one()) {
        return Err(ConstructionError::BoundOutOfRange(z0.as_f64()));
    }
    let q3 = T::from_count(q).powi(3);
    let mut z = z0;
    for level in (0..n).rev() {
        z = if (i >> level) & 1 == 1 {
            z * z
        } else {
            (q3 * z).min(T::one())
        };
    }
    Ok(z)
}

/// How many indices to freeze.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrozenPolicy {
    /// Freeze the `⌈R N⌉` indices with the largest entropy.
    Rate(f64),
    /// Freeze every index with entropy above the threshold.
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T: Real> {
    pub spec: CodeSpec<T>,
    /// `Σ_{i not frozen} (q - 1) z_hat_i`.
    pub predicted_failure_bound: f64,
}

/// Builds a [`CodeSpec`] from per-index statistics.
///
/// Rate ties are broken by larger `z_hat`, then by smaller index.
pub fn select_frozen<T: Real>(
    stats: &IndexStats<T>,
    policy: FrozenPolicy,
    channel: Channel<T>,
) -> Result<Selection<T>, ConstructionError> {
    stats.check_complete()?;
    let len = stats.block_len();
    let frozen: Vec<usize> = match policy {
        FrozenPolicy::Rate(r) => {
            if !(0.0..=1.0).contains(&r) {
                return Err(ConstructionError::RateOutOfRange(r));
            }
            // The small offset keeps e.g. 0.6 * 1024 from rounding up past 614.4's ceiling.
            let count = ((r * len as f64 - 1e-9).ceil().max(0.0) as usize).min(len);
            let mut order: Vec<&IndexRecord<T>> = stats.records.iter().collect();
            order.sort_by(|a, b| {
                b.h_hat
                    .partial_cmp(&a.h_hat)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(
                        b.z_hat
                            .partial_cmp(&a.z_hat)
                            .unwrap_or(std::cmp::Ordering::Equal),
                    )
                    .then(a.index.cmp(&b.index))
            });
            order[..count].iter().map(|r| r.index).collect()
        }
        FrozenPolicy::Threshold(zeta) => {
            if !zeta.is_finite() {
                return Err(ConstructionError::BadThreshold(zeta));
            }
            stats
                .records
                .iter()
                .filter(|r| r.h_hat.as_f64() > zeta)
                .map(|r| r.index)
                .collect()
        }
    };
    let spec = CodeSpec::new(stats.n, frozen, channel, stats.digest)?;
    let mask = spec.frozen_mask();
    let qm1 = (stats.q - 1) as f64;
    let predicted_failure_bound = stats
        .records
        .iter()
        .filter(|r| !mask[r.index])
        .map(|r| qm1 * r.z_hat.as_f64())
        .sum();
    Ok(Selection {
        spec,
        predicted_failure_bound,
    })
}

/// Default `ρ` for the rough-polarization count.
pub const DEFAULT_RHO: f64 = 0.9;

/// Aggregates of one level's per-index statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSummary {
    pub n: u32,
    pub mean_t: f64,
    pub mean_sqrt_t: f64,
    /// Fraction of indices with `h <= eps`.
    pub frac_low: f64,
    /// Fraction of indices with `h >= 1 - eps`.
    pub frac_high: f64,
    /// Fraction of indices with `z_hat <= 2 rho^n`.
    pub frac_rough: f64,
}

impl ProfileSummary {
    pub fn frac_polarized(&self) -> f64 {
        self.frac_low + self.frac_high
    }
}

/// One row per index plus the level aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationProfile {
    pub rows: Vec<ProfileRow>,
    pub summary: ProfileSummary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub index: usize,
    pub h_hat: f64,
    pub z_hat: f64,
    pub t: f64,
}

pub fn polarization_profile<T: Real>(
    stats: &IndexStats<T>,
    eps: f64,
    rho: f64,
) -> PolarizationProfile {
    let rows: Vec<ProfileRow> = stats
        .records
        .iter()
        .map(|r| ProfileRow {
            index: r.index,
            h_hat: r.h_hat.as_f64(),
            z_hat: r.z_hat.as_f64(),
            t: r.symmetric_entropy().as_f64(),
        })
        .collect();
    let h: Vec<f64> = rows.iter().map(|r| r.h_hat).collect();
    let mut summary = summarize_entropies(stats.n, &h, eps);
    let cut = 2.0 * rho.powi(stats.n as i32);
    let len = rows.len().max(1) as f64;
    summary.frac_rough = rows.iter().filter(|r| r.z_hat <= cut).count() as f64 / len;
    PolarizationProfile { rows, summary }
}

/// Aggregates that depend on the entropies only; `frac_rough` is left at zero.
pub fn summarize_entropies(n: u32, h: &[f64], eps: f64) -> ProfileSummary {
    let len = h.len().max(1) as f64;
    let t = |x: f64| (x * (1.0 - x)).max(0.0);
    ProfileSummary {
        n,
        mean_t: h.iter().map(|&x| t(x)).sum::<f64>() / len,
        mean_sqrt_t: h.iter().map(|&x| t(x).sqrt()).sum::<f64>() / len,
        frac_low: h.iter().filter(|&&x| x <= eps).count() as f64 / len,
        frac_high: h.iter().filter(|&&x| x >= 1.0 - eps).count() as f64 / len,
        frac_rough: 0.0,
    }
}

/// One-step contraction `(sqrt T(W^-) + sqrt T(W^+)) / (2 sqrt T(W))`, or `None`
/// when `T(W)` is at most `min_t`.
pub fn contraction_ratio<T: Real>(w: &Channel<T>, min_t: f64) -> Option<f64> {
    let t = w.symmetric_entropy().as_f64();
    if t <= min_t {
        return None;
    }
    let tm = w.minus().symmetric_entropy().as_f64().max(0.0);
    let tp = w.plus().symmetric_entropy().as_f64().max(0.0);
    Some((tm.sqrt() + tp.sqrt()) / (2.0 * t.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digest() -> StatsDigest {
        StatsDigest {
            method: Method::Exact,
            samples: 0,
            seed: 0,
        }
    }

    fn stats(h: &[f64], z: &[f64]) -> IndexStats<f64> {
        IndexStats {
            q: 3,
            n: h.len().trailing_zeros(),
            digest: digest(),
            records: h
                .iter()
                .zip(z)
                .enumerate()
                .map(|(index, (&h_hat, &z_hat))| IndexRecord {
                    index,
                    h_hat,
                    z_hat,
                    z_tilde: 1.0,
                    h_std_err: 0.0,
                    z_std_err: 0.0,
                })
                .collect(),
            approximate: false,
        }
    }

    #[test]
    fn z_bound_examples() {
        let z = z_bound_recursion(0.5f64, 7, 3, 3).unwrap();
        assert_eq!(z, 0.5f64.powi(8));
        let z = z_bound_recursion(1e-4f64, 0, 2, 3).unwrap();
        assert!((z - 729e-4).abs() < 1e-15);
        assert_eq!(z_bound_recursion(0.1f64, 0, 3, 3).unwrap(), 1.0);
        // 0b10: minus first, then plus.
        let z = z_bound_recursion(1e-3f64, 1, 2, 2).unwrap();
        assert!((z - (8e-3f64).powi(2)).abs() < 1e-18);
        let z = z_bound_recursion(1e-3f64, 2, 2, 2).unwrap();
        assert!((z - 8e-6).abs() < 1e-18);
        assert!(z_bound_recursion(1.5f64, 0, 1, 2).is_err());
    }

    #[test]
    fn rate_policy_orders_by_entropy_then_z_then_index() {
        let s = stats(&[0.9, 0.1, 0.5, 0.5], &[0.2, 0.1, 0.3, 0.4]);
        let ch = Channel::qsc(3, 0.1).unwrap();
        let sel = select_frozen(&s, FrozenPolicy::Rate(0.5), ch.clone()).unwrap();
        assert_eq!(sel.spec.frozen(), &[0, 3]);
        let s = stats(&[0.5, 0.5, 0.5, 0.5], &[0.3, 0.3, 0.3, 0.3]);
        let sel = select_frozen(&s, FrozenPolicy::Rate(0.25), ch.clone()).unwrap();
        assert_eq!(sel.spec.frozen(), &[0]);
        let sel = select_frozen(&s, FrozenPolicy::Rate(1.0), ch.clone()).unwrap();
        assert_eq!(sel.spec.frozen().len(), 4);
        assert_eq!(sel.predicted_failure_bound, 0.0);
        assert!(select_frozen(&s, FrozenPolicy::Rate(1.5), ch).is_err());
    }

    #[test]
    fn threshold_policy_and_union_bound() {
        let s = stats(&[0.0, 0.2, 0.0, 0.7], &[0.01, 0.3, 0.02, 0.9]);
        let ch = Channel::qsc(3, 0.1).unwrap();
        let sel = select_frozen(&s, FrozenPolicy::Threshold(0.0), ch).unwrap();
        assert_eq!(sel.spec.frozen(), &[1, 3]);
        assert!((sel.predicted_failure_bound - 2.0 * 0.03).abs() < 1e-15);
    }

    #[test]
    fn profile_of_polarized_stats() {
        let s = stats(&[0.0, 1.0, 0.0, 1.0], &[0.0, 1.0, 0.0, 1.0]);
        let p = polarization_profile(&s, 0.05, DEFAULT_RHO);
        assert_eq!(p.summary.mean_t, 0.0);
        assert_eq!(p.summary.frac_low, 0.5);
        assert_eq!(p.summary.frac_high, 0.5);
        assert_eq!(p.summary.frac_polarized(), 1.0);
        assert_eq!(p.rows.len(), 4);
    }
}
