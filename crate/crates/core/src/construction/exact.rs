//! Exact tracking of the polarized channel tree.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{z_bound_recursion, ConstructionError, IndexRecord, IndexStats, Method, StatsDigest};
use crate::channel::Channel;
use crate::real::{merge_key, CompensatedSum, Real};

/// The statistics and the channels of one level.
#[derive(Debug, Clone)]
pub struct ExactTracking<T: Real> {
    pub stats: IndexStats<T>,
    /// `channels[i]` is `W_n^(i)`, with posteriors reduced modulo cyclic shifts.
    pub channels: Vec<Channel<T>>,
}

/// Atoms the next level would hold before merging.
fn next_level_estimate<T: Real>(level: &[Channel<T>]) -> u64 {
    level
        .iter()
        .map(|w| {
            let k = w.len() as u64;
            k * k * (1 + w.q() as u64)
        })
        .sum()
}

fn expand<T: Real>(level: &[Channel<T>]) -> Vec<Channel<T>> {
    level
        .par_iter()
        .flat_map_iter(|w| [w.minus(), w.plus()])
        .map(|w| w.canonicalize_shifts())
        .collect()
}

fn materialize<T: Real>(
    w: &Channel<T>,
    n: u32,
    atom_budget: u64,
) -> Result<Vec<Vec<Channel<T>>>, ConstructionError> {
    if n > super::MAX_DEPTH {
        return Err(ConstructionError::DepthTooLarge(n));
    }
    let mut levels = vec![vec![w.canonicalize_shifts()]];
    for level in 1..=n {
        let prev = levels.last().expect("level 0 present");
        let estimated = next_level_estimate(prev);
        if estimated > atom_budget {
            return Err(ConstructionError::AtomBudgetExceeded {
                level,
                estimated,
                budget: atom_budget,
            });
        }
        let next = expand(prev);
        levels.push(next);
    }
    Ok(levels)
}

/// Builds all `2^n` channels `W_n^(i)` by repeated `minus`/`plus` steps with
/// lossless merging after each step.
///
/// `atom_budget` caps the pre-merge atom count of every level; exceeding it is
/// an error naming the level that would have been built.
pub fn track_channels_exact<T: Real>(
    w: &Channel<T>,
    n: u32,
    atom_budget: u64,
) -> Result<ExactTracking<T>, ConstructionError> {
    let channels = materialize(w, n, atom_budget)?
        .pop()
        .expect("at least one level");
    let z0 = w.z_max().max(T::zero()).min(T::one());
    let records = channels
        .iter()
        .enumerate()
        .map(|(index, ch)| {
            Ok(IndexRecord {
                index,
                h_hat: ch.entropy(),
                z_hat: ch.z_max(),
                z_tilde: z_bound_recursion(z0, index, n, w.q())?,
                h_std_err: T::zero(),
                z_std_err: T::zero(),
            })
        })
        .collect::<Result<Vec<_>, ConstructionError>>()?;
    let approximate = channels.iter().any(Channel::is_approximate);
    Ok(ExactTracking {
        stats: IndexStats {
            q: w.q(),
            n,
            digest: StatsDigest {
                method: Method::Exact,
                samples: 0,
                seed: 0,
            },
            records,
            approximate,
        },
        channels,
    })
}

/// Exact entropies `H(W_k^(i))` for every level `k = 0..=n`.
///
/// Levels up to `n - 1` are materialized under `atom_budget`. The last level
/// is never built: `H(V^-)` is summed directly over pairs of atoms of each
/// parent `V`, and `H(V^+) = 2 H(V) - H(V^-)`.
pub fn exact_entropy_levels<T: Real>(
    w: &Channel<T>,
    n: u32,
    atom_budget: u64,
) -> Result<Vec<Vec<f64>>, ConstructionError> {
    if n == 0 {
        return Ok(vec![vec![w.entropy().as_f64()]]);
    }
    let levels = materialize(w, n - 1, atom_budget)?;
    let mut out: Vec<Vec<f64>> = levels
        .iter()
        .map(|lv| lv.iter().map(|ch| ch.entropy().as_f64()).collect())
        .collect();
    let last = levels.last().expect("at least one level");
    let children: Vec<[f64; 2]> = last
        .par_iter()
        .map(|v| {
            let h = entropy_f64(v);
            let hm = minus_entropy_streamed(v).clamp(0.0, 1.0);
            let hp = (2.0 * h - hm).clamp(0.0, 1.0);
            [hm, hp]
        })
        .collect();
    out.push(children.into_iter().flatten().collect());
    Ok(out)
}

fn entropy_f64<T: Real>(w: &Channel<T>) -> f64 {
    let mut s = CompensatedSum::new();
    for a in w.atoms() {
        s.add(a.weight.as_f64() * a.posterior.entropy().as_f64());
    }
    s.value()
}

/// Posteriors and weights of one group of atoms, stored flat with stride `q`.
#[derive(Default)]
struct Group {
    post: Vec<f64>,
    weight: Vec<f64>,
}

impl Group {
    fn push(&mut self, p: &[f64], w: f64) {
        self.post.extend_from_slice(p);
        self.weight.push(w);
    }
}

fn canonical_key(p: &[f64]) -> Vec<i64> {
    let q = p.len();
    let key: Vec<i64> = p.iter().map(|&x| merge_key(x)).collect();
    (0..q)
        .map(|r| (0..q).map(|m| key[(m + r) % q]).collect::<Vec<i64>>())
        .max()
        .unwrap_or_default()
}

/// For each atom, the atom whose posterior is its negation `x -> -x` up to a
/// cyclic shift, when that partner is unambiguous and the relation is mutual.
fn negation_partners(post: &[Vec<f64>]) -> Vec<Option<usize>> {
    let mut index: HashMap<Vec<i64>, Option<usize>> = HashMap::with_capacity(post.len());
    for (k, p) in post.iter().enumerate() {
        index
            .entry(canonical_key(p))
            .and_modify(|slot| *slot = None)
            .or_insert(Some(k));
    }
    let partner: Vec<Option<usize>> = post
        .iter()
        .map(|p| {
            let q = p.len();
            let neg: Vec<f64> = (0..q).map(|x| p[(q - x) % q]).collect();
            index.get(&canonical_key(&neg)).copied().flatten()
        })
        .collect();
    (0..post.len())
        .map(|k| partner[k].filter(|&j| partner[j] == Some(k)))
        .collect()
}

/// `H(W^-)` as `Σ_{k,l} w_k w_l H(p_k * p_l)` without materializing `W^-`.
///
/// Both the swap `(k, l) -> (l, k)` and the negation of both posteriors leave
/// the summand unchanged, so each orbit of atom pairs is evaluated once with
/// the summed weight of its members.
pub(crate) fn minus_entropy_streamed<T: Real>(w: &Channel<T>) -> f64 {
    let q = w.q();
    let post: Vec<Vec<f64>> = w
        .atoms()
        .iter()
        .map(|a| a.posterior.probs().iter().map(|x| x.as_f64()).collect())
        .collect();
    let weight: Vec<f64> = w.atoms().iter().map(|a| a.weight.as_f64()).collect();
    let partner = negation_partners(&post);

    // Paired atoms are stored as adjacent (rep, partner) entries.
    let mut paired = Group::default();
    let mut fixed = Group::default();
    let mut free = Group::default();
    for k in 0..post.len() {
        match partner[k] {
            Some(j) if j == k => fixed.push(&post[k], weight[k]),
            Some(j) if k < j => {
                paired.push(&post[k], weight[k]);
                paired.push(&post[j], weight[j]);
            }
            Some(_) => {}
            None => free.push(&post[k], weight[k]),
        }
    }

    let row = row_kernel(q);
    let mut total = CompensatedSum::new();
    let mut buf: Vec<f64> = Vec::new();

    let m = paired.weight.len() / 2;
    for c in 0..m {
        let a = &paired.post[2 * c * q..(2 * c + 1) * q];
        let b = &paired.post[(2 * c + 1) * q..(2 * c + 2) * q];
        let (wa, wb) = (paired.weight[2 * c], paired.weight[2 * c + 1]);
        total.add(row(a, a, &[wa * wa + wb * wb]));
        total.add(row(a, b, &[2.0 * wa * wb]));
        let rest = &paired.weight[2 * c + 2..];
        buf.clear();
        buf.extend(rest.chunks_exact(2).flat_map(|pw| {
            [
                2.0 * (wa * pw[0] + wb * pw[1]),
                2.0 * (wa * pw[1] + wb * pw[0]),
            ]
        }));
        total.add(row(a, &paired.post[(2 * c + 2) * q..], &buf));
        buf.clear();
        buf.extend(fixed.weight.iter().map(|&wf| 2.0 * (wa + wb) * wf));
        total.add(row(a, &fixed.post, &buf));
    }
    for i in 0..fixed.weight.len() {
        let a = &fixed.post[i * q..(i + 1) * q];
        let wa = fixed.weight[i];
        total.add(row(a, a, &[wa * wa]));
        buf.clear();
        buf.extend(fixed.weight[i + 1..].iter().map(|&wf| 2.0 * wa * wf));
        total.add(row(a, &fixed.post[(i + 1) * q..], &buf));
    }
    for i in 0..free.weight.len() {
        let a = &free.post[i * q..(i + 1) * q];
        let wa = free.weight[i];
        total.add(row(a, a, &[wa * wa]));
        for g in [&paired, &fixed] {
            buf.clear();
            buf.extend(g.weight.iter().map(|&wl| 2.0 * wa * wl));
            total.add(row(a, &g.post, &buf));
        }
        buf.clear();
        buf.extend(free.weight[i + 1..].iter().map(|&wl| 2.0 * wa * wl));
        total.add(row(a, &free.post[(i + 1) * q..], &buf));
    }
    total.value() / (q as f64).ln()
}

type RowFn = fn(&[f64], &[f64], &[f64]) -> f64;

/// `Σ_l ws[l] * H_nat(a * ps[l])` for posteriors stored with stride `q`.
fn row_kernel(q: usize) -> RowFn {
    match q {
        2 => row_const::<2>,
        3 => row_const::<3>,
        4 => row_const::<4>,
        5 => row_const::<5>,
        6 => row_const::<6>,
        7 => row_const::<7>,
        8 => row_const::<8>,
        _ => row_dyn,
    }
}

fn row_const<const Q: usize>(a: &[f64], ps: &[f64], ws: &[f64]) -> f64 {
    let a: [f64; Q] = a.try_into().expect("posterior of length q");
    let mut acc = 0.0;
    for (p, &w) in ps.chunks_exact(Q).zip(ws) {
        let mut h = 0.0;
        for u in 0..Q {
            let mut c = 0.0;
            for x in 0..Q {
                c += a[(u + Q - x) % Q] * p[x];
            }
            if c > 0.0 {
                h -= c * c.ln();
            }
        }
        acc += w * h;
    }
    acc
}

fn row_dyn(a: &[f64], ps: &[f64], ws: &[f64]) -> f64 {
    let q = a.len();
    let mut acc = 0.0;
    for (p, &w) in ps.chunks_exact(q).zip(ws) {
        let mut h = 0.0;
        for u in 0..q {
            let c: f64 = (0..q).map(|x| a[(u + q - x) % q] * p[x]).sum();
            if c > 0.0 {
                h -= c * c.ln();
            }
        }
        acc += w * h;
    }
    acc
}
