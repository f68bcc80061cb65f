//! Genie-aided Monte Carlo estimates of the per-index statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{z_bound_recursion, ConstructionError, IndexRecord, IndexStats, Method, StatsDigest};
use crate::channel::Channel;
use crate::codec::sc::ScDecoder;
use crate::real::{CompensatedSum, Real};
use crate::transform::transform;

/// Samples per independently seeded chunk.
const CHUNK: u64 = 256;

/// Per-index running sums over one chunk.
#[derive(Clone)]
struct Acc {
    h: Vec<f64>,
    h2: Vec<f64>,
    /// `z[i * (q - 1) + d - 1]`
    z: Vec<f64>,
    z2: Vec<f64>,
}

impl Acc {
    fn new(len: usize, q: usize) -> Self {
        Self {
            h: vec![0.0; len],
            h2: vec![0.0; len],
            z: vec![0.0; len * (q - 1)],
            z2: vec![0.0; len * (q - 1)],
        }
    }
}

/// Compensated totals across chunks, added in chunk order.
struct Totals {
    h: Vec<CompensatedSum>,
    h2: Vec<CompensatedSum>,
    z: Vec<CompensatedSum>,
    z2: Vec<CompensatedSum>,
}

impl Totals {
    fn new(len: usize, q: usize) -> Self {
        let v = |k| vec![CompensatedSum::new(); k];
        Self {
            h: v(len),
            h2: v(len),
            z: v(len * (q - 1)),
            z2: v(len * (q - 1)),
        }
    }

    fn absorb(&mut self, a: &Acc) {
        let add = |dst: &mut [CompensatedSum], src: &[f64]| {
            dst.iter_mut().zip(src).for_each(|(d, &s)| d.add(s));
        };
        add(&mut self.h, &a.h);
        add(&mut self.h2, &a.h2);
        add(&mut self.z, &a.z);
        add(&mut self.z2, &a.z2);
    }
}

/// Mean and standard error from a sum and a sum of squares.
fn mean_and_se(sum: f64, sum2: f64, count: f64) -> (f64, f64) {
    let mean = sum / count;
    if count < 2.0 {
        return (mean, 0.0);
    }
    let var = ((sum2 - count * mean * mean) / (count - 1.0)).max(0.0);
    (mean, (var / count).sqrt())
}

/// Estimates `H(U_i | U_<i, Y)` and `Z_max` of every synthesized channel.
///
/// Each sample draws `(X, Y)` from `w`, runs the decoder with the true `U_i`
/// substituted at every step, and records `-log_q P(u_i)` and, for each shift
/// `d`, `Σ_x sqrt(P(x) P(x + d))` from the step's posterior. `z_hat` is the
/// largest per-shift mean. Samples are split into chunks with their own seeded
/// stream, so the result depends only on `seed`.
pub fn estimate_index_stats_mc<T: Real>(
    w: &Channel<T>,
    n: u32,
    samples: u64,
    seed: u64,
) -> Result<IndexStats<T>, ConstructionError> {
    if samples == 0 {
        return Err(ConstructionError::NoSamples);
    }
    if n > super::MAX_DEPTH {
        return Err(ConstructionError::DepthTooLarge(n));
    }
    let q = w.q();
    let len = 1usize << n;
    let leaves: Vec<Vec<f64>> = w
        .atoms()
        .iter()
        .map(|a| a.posterior.probs().iter().map(|p| p.as_f64()).collect())
        .collect();
    let sampler = w.joint_sampler();
    let ln_q = (q as f64).ln();
    let chunks = samples.div_ceil(CHUNK);

    let partial: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut acc = Acc::new(len, q);
            let mut dec = ScDecoder::<f64>::new(q, n);
            let mut x = vec![0u32; len];
            let mut y = vec![0usize; len];
            let mut prob = vec![0.0f64; q];
            for _ in 0..count {
                for t in 0..len {
                    (x[t], y[t]) = sampler.sample(&mut rng);
                }
                let u = transform(&x, q).expect("sampled symbols are in range");
                dec.load_leaves(|t| &leaves[y[t]]);
                dec.run(|i, lik| {
                    let s: f64 = lik.iter().sum();
                    prob.iter_mut().zip(lik).for_each(|(p, &l)| *p = l / s);
                    let truth = u[i] as usize;
                    let h = -prob[truth].max(f64::MIN_POSITIVE).ln() / ln_q;
                    acc.h[i] += h;
                    acc.h2[i] += h * h;
                    for d in 1..q {
                        let z: f64 = (0..q).map(|v| (prob[v] * prob[(v + d) % q]).sqrt()).sum();
                        let k = i * (q - 1) + d - 1;
                        acc.z[k] += z;
                        acc.z2[k] += z * z;
                    }
                    u[i]
                });
            }
            acc
        })
        .collect();

    let mut totals = Totals::new(len, q);
    for a in &partial {
        totals.absorb(a);
    }
    let count = samples as f64;
    let z0 = w.z_max().max(T::zero()).min(T::one());
    let records = (0..len)
        .map(|i| {
            let (h, h_se) = mean_and_se(totals.h[i].value(), totals.h2[i].value(), count);
            let (z, z_se) = (1..q)
                .map(|d| {
                    let k = i * (q - 1) + d - 1;
                    mean_and_se(totals.z[k].value(), totals.z2[k].value(), count)
                })
                .fold(
                    (0.0, 0.0),
                    |best, cur| if cur.0 > best.0 { cur } else { best },
                );
            Ok(IndexRecord {
                index: i,
                h_hat: T::lit(h.clamp(0.0, 1.0)),
                z_hat: T::lit(z),
                z_tilde: z_bound_recursion(z0, i, n, q)?,
                h_std_err: T::lit(h_se),
                z_std_err: T::lit(z_se),
            })
        })
        .collect::<Result<Vec<_>, ConstructionError>>()?;
    Ok(IndexStats {
        q,
        n,
        digest: StatsDigest {
            method: Method::MonteCarlo,
            samples,
            seed,
        },
        records,
        approximate: w.is_approximate(),
    })
}
