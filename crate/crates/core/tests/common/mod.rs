//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use polarq::transform::{mul_matrix_vec, transform_matrix};
use polarq::JointChannel;

/// All vectors in `Z_q^len`, first coordinate fastest.
pub fn all_vectors(q: usize, len: usize) -> Vec<Vec<u32>> {
    let total = q.pow(len as u32);
    (0..total)
        .map(|mut c| {
            (0..len)
                .map(|_| {
                    let s = (c % q) as u32;
                    c /= q;
                    s
                })
                .collect()
        })
        .collect()
}

/// `U = G X` from the dense Kronecker-product matrix.
pub fn matrix_transform(x: &[u32], q: usize) -> Vec<u32> {
    let n = x.len().trailing_zeros();
    let g = transform_matrix(n, Some(n)).unwrap();
    mul_matrix_vec(&g, x, q)
}

/// Outcome of checking one decoded block against exhaustive enumeration.
#[derive(Debug, Default, Clone, Copy)]
pub struct MlCheck {
    /// Unfrozen decisions whose maximizer was unique and matched.
    pub unique: usize,
    /// Unfrozen decisions with a runner-up within the tie tolerance; the
    /// decoder's symbol was one of the tied maxima.
    pub tied: usize,
}

/// Joint weights `P(X = x | y)` up to a constant, keyed by `U = G x`, for
/// every input block.
pub fn ml_table(w: &JointChannel, y: &[usize]) -> Vec<(Vec<u32>, f64)> {
    let q = w.q();
    let n = y.len().trailing_zeros();
    let g = transform_matrix(n, Some(n)).unwrap();
    all_vectors(q, y.len())
        .into_iter()
        .map(|x| {
            let p: f64 = x
                .iter()
                .zip(y)
                .map(|(&s, &k)| w.atoms()[k].posterior.probs()[s as usize])
                .product();
            (mul_matrix_vec(&g, &x, q), p)
        })
        .collect()
}

/// Checks every decision of `u_dec` against a sequential maximum-likelihood
/// rule that enumerates all input blocks: at each unfrozen `i`, `u_dec[i]` must
/// maximize `P(U_i = a, U_<i = u_dec[<i] | y)`. Frozen positions must carry
/// `frozen_values`.
pub fn check_against_ml(
    w: &JointChannel,
    y: &[usize],
    frozen_mask: &[bool],
    frozen_values: &[u32],
    u_dec: &[u32],
    tie_tol: f64,
) -> Result<MlCheck, String> {
    check_with_table(
        &ml_table(w, y),
        w.q(),
        frozen_mask,
        frozen_values,
        u_dec,
        tie_tol,
    )
}

/// [`check_against_ml`] with a precomputed [`ml_table`].
pub fn check_with_table(
    table: &[(Vec<u32>, f64)],
    q: usize,
    frozen_mask: &[bool],
    frozen_values: &[u32],
    u_dec: &[u32],
    tie_tol: f64,
) -> Result<MlCheck, String> {
    let len = u_dec.len();
    let mut frozen = frozen_values.iter();
    let mut out = MlCheck::default();
    for i in 0..len {
        if frozen_mask[i] {
            let want = *frozen.next().unwrap();
            if u_dec[i] != want {
                return Err(format!(
                    "frozen index {i}: decoded {} expected {want}",
                    u_dec[i]
                ));
            }
            continue;
        }
        let mut score = vec![0.0f64; q];
        for (u, p) in table {
            if u[..i] == u_dec[..i] {
                score[u[i] as usize] += p;
            }
        }
        let top = score.iter().copied().fold(0.0, f64::max);
        let tied: Vec<usize> = (0..q)
            .filter(|&a| top - score[a] <= tie_tol * top)
            .collect();
        let got = u_dec[i] as usize;
        if !tied.contains(&got) {
            return Err(format!("index {i}: decoded {got}, scores {score:?}"));
        }
        if tied.len() > 1 {
            out.tied += 1;
        } else {
            out.unique += 1;
        }
    }
    Ok(out)
}

/// Channel with 2 or 3 outputs and moderately concentrated posteriors, so
/// that ML decisions are rarely close to ties.
pub fn moderate_channel<R: rand::Rng>(q: usize, rng: &mut R) -> JointChannel {
    let k = rng.random_range(2..=3);
    let weights = polarq::Dist::<f64>::sample(k, 2.0, rng).unwrap();
    let atoms = weights
        .probs()
        .iter()
        .map(|&w| polarq::Atom {
            weight: w,
            posterior: polarq::Dist::sample(q, 3.0, rng).unwrap(),
        })
        .collect();
    JointChannel::new(q, atoms).unwrap()
}

/// `H(U_i | U_<i, Y)` for every `i`, normalized, by enumerating the joint law
/// of `N = 2^n` independent uses of `w`.
pub fn brute_force_conditional_entropies(w: &JointChannel, n: u32) -> Vec<f64> {
    let q = w.q();
    let len = 1usize << n;
    let k = w.len();
    let ys = all_vectors(k, len);
    let xs = all_vectors(q, len);
    let us: Vec<Vec<u32>> = xs.iter().map(|x| matrix_transform(x, q)).collect();
    // prefix[l] maps (y index, first l symbols of u as an integer) to probability.
    let mut prefix: Vec<HashMap<(usize, usize), f64>> = vec![HashMap::new(); len + 1];
    for (yi, y) in ys.iter().enumerate() {
        let wy: f64 = y.iter().map(|&a| w.atoms()[a as usize].weight).product();
        for (x, u) in xs.iter().zip(&us) {
            let p: f64 = wy
                * x.iter()
                    .zip(y)
                    .map(|(&s, &a)| w.atoms()[a as usize].posterior.probs()[s as usize])
                    .product::<f64>();
            if p == 0.0 {
                continue;
            }
            let mut code = 0usize;
            *prefix[0].entry((yi, 0)).or_insert(0.0) += p;
            for l in 0..len {
                code = code * q + u[l] as usize;
                *prefix[l + 1].entry((yi, code)).or_insert(0.0) += p;
            }
        }
    }
    let ent: Vec<f64> = prefix
        .iter()
        .map(|m| m.values().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
        .collect();
    let lq = (q as f64).ln();
    (0..len).map(|i| (ent[i + 1] - ent[i]) / lq).collect()
}
