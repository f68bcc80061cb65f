//! Successive-cancellation recursion.
//!
//! The recursion runs on `X' = B_n X` (bit-reversed inputs), where the
//! transform factors as `U = K^{⊗n} X'`. For a block of length `m`, the first
//! half of `U` is the transform of `S = X'_top + X'_bot` and the second half the
//! transform of `X'_bot`, so one step decodes `S` from the cyclic convolution of
//! the two halves' likelihoods, then decodes `X'_bot` given `S`.
//!
//! Likelihood vectors are kept in the linear domain and rescaled so their
//! largest entry is one after every combination step.

use crate::dist::cyclic_convolve_into;
use crate::real::Real;
use crate::transform::{bit_reverse, bit_reverse_in_place};

/// Reusable buffers for decoding blocks of one shape.
#[derive(Debug, Clone)]
pub struct ScDecoder<T: Real> {
    q: usize,
    n: u32,
    /// `llh[d]` holds `N >> d` likelihood vectors of length `q`.
    llh: Vec<Vec<T>>,
    /// `xs[d]` holds the re-encoded decisions of the active depth-`d` subproblem.
    xs: Vec<Vec<u32>>,
    u: Vec<u32>,
    scratch: Vec<T>,
}

impl<T: Real> ScDecoder<T> {
    pub fn new(q: usize, n: u32) -> Self {
        let len = 1usize << n;
        Self {
            q,
            n,
            llh: (0..=n).map(|d| vec![T::zero(); (len >> d) * q]).collect(),
            xs: (0..=n).map(|d| vec![0u32; len >> d]).collect(),
            u: vec![0; len],
            scratch: vec![T::zero(); q],
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Fills the leaf likelihoods: `f(t)` must return the likelihood vector of
    /// input position `t` (natural order).
    pub fn load_leaves<'a, F>(&mut self, mut f: F)
    where
        F: FnMut(usize) -> &'a [T],
        T: 'a,
    {
        let q = self.q;
        let leaves = &mut self.llh[0];
        for j in 0..self.u.len() {
            let src = f(bit_reverse(j, self.n));
            leaves[j * q..(j + 1) * q].copy_from_slice(src);
        }
    }

    /// Leaf buffer in bit-reversed order, for callers that fill it directly.
    pub fn leaves_mut(&mut self) -> &mut [T] {
        &mut self.llh[0]
    }

    /// Runs the recursion. `decide(i, lik)` is called for `i = 0..N` in order
    /// with the (max-normalized) likelihood of `U_i` given the observations and
    /// the earlier decisions, and returns the symbol to commit.
    pub fn run<F>(&mut self, mut decide: F)
    where
        F: FnMut(usize, &[T]) -> u32,
    {
        let q = self.q;
        recurse(
            q,
            &mut self.llh,
            &mut self.xs,
            &mut self.u,
            &mut self.scratch,
            0,
            &mut decide,
        );
    }

    /// Decisions `û` from the last run.
    pub fn u(&self) -> &[u32] {
        &self.u
    }

    /// Input estimate `x̂` (natural order) implied by the last run's decisions.
    pub fn x_hat(&self) -> Vec<u32> {
        let mut x = self.xs[0].clone();
        bit_reverse_in_place(&mut x);
        x
    }
}

/// Rescales `v` so its maximum is one; an all-zero vector becomes uniform.
#[inline]
fn normalize_max<T: Real>(v: &mut [T]) {
    let m = v.iter().copied().fold(T::zero(), T::max);
    if m > T::zero() && m.is_finite() {
        let inv = m.recip();
        v.iter_mut().for_each(|x| *x = *x * inv);
    } else {
        v.iter_mut().for_each(|x| *x = T::one());
    }
}

fn recurse<T: Real, F>(
    q: usize,
    llh: &mut [Vec<T>],
    xs: &mut [Vec<u32>],
    u: &mut [u32],
    scratch: &mut [T],
    offset: usize,
    decide: &mut F,
) where
    F: FnMut(usize, &[T]) -> u32,
{
    let (cur, deeper) = llh.split_first_mut().expect("depth buffers");
    let (xcur, xdeeper) = xs.split_first_mut().expect("depth buffers");
    let m = xcur.len();
    if m == 1 {
        let sym = decide(offset, &cur[..q]);
        debug_assert!((sym as usize) < q);
        u[offset] = sym;
        xcur[0] = sym;
        return;
    }
    let h = m / 2;
    let (top, bot) = cur.split_at(h * q);
    {
        let child = &mut deeper[0][..h * q];
        for j in 0..h {
            let out = &mut child[j * q..(j + 1) * q];
            cyclic_convolve_into(&top[j * q..(j + 1) * q], &bot[j * q..(j + 1) * q], out);
            normalize_max(out);
        }
    }
    recurse(q, deeper, xdeeper, u, scratch, offset, decide);
    xcur[..h].copy_from_slice(&xdeeper[0][..h]);
    {
        let child = &mut deeper[0][..h * q];
        for j in 0..h {
            let s = xcur[j] as usize;
            let pt = &top[j * q..(j + 1) * q];
            let pb = &bot[j * q..(j + 1) * q];
            for x in 0..q {
                scratch[x] = pt[(s + q - x) % q] * pb[x];
            }
            let out = &mut child[j * q..(j + 1) * q];
            out.copy_from_slice(scratch);
            normalize_max(out);
        }
    }
    recurse(q, deeper, xdeeper, u, scratch, offset + h, decide);
    let qq = q as u32;
    for j in 0..h {
        let b = xdeeper[0][j];
        xcur[h + j] = b;
        xcur[j] = (xcur[j] + qq - b) % qq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::transform;

    #[test]
    fn genie_run_reproduces_transform() {
        // Point-mass leaves: every decision is forced and û must equal G x.
        let q = 3;
        let n = 3;
        let x: Vec<u32> = vec![2, 0, 1, 1, 0, 2, 2, 1];
        let mut dec = ScDecoder::<f64>::new(q, n);
        let leaves: Vec<Vec<f64>> = x
            .iter()
            .map(|&s| {
                (0..q)
                    .map(|v| if v == s as usize { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        dec.load_leaves(|t| &leaves[t]);
        dec.run(|_, lik| crate::dist::argmax_first(lik) as u32);
        assert_eq!(dec.u(), transform(&x, q).unwrap().as_slice());
        assert_eq!(dec.x_hat(), x);
    }

    #[test]
    fn decisions_arrive_in_index_order() {
        let mut dec = ScDecoder::<f64>::new(2, 4);
        dec.leaves_mut().iter_mut().for_each(|v| *v = 1.0);
        let mut seen = Vec::new();
        dec.run(|i, _| {
            seen.push(i);
            0
        });
        assert_eq!(seen, (0..16).collect::<Vec<_>>());
    }
}
