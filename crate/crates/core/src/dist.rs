//! Probability distributions over the cyclic group `Z_q`.
//!
//! [`Dist`] is the atom every other module builds on: entropies, sums of
//! independent symbols (cyclic convolution), cyclic shifts and convex mixtures.
//! Entropies are normalized by `lg q` so they live in `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::real::{xlogx, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("probability at index {index} is negative or not finite")]
    InvalidEntry { index: usize },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),
    #[error("invalid sampler parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed distribution literal: {0}")]
    Parse(String),
}

/// A probability vector over `Z_q`, `q >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist<T: Real> {
    probs: Vec<T>,
}

impl<T: Real> Dist<T> {
    /// Builds a distribution, renormalizing drift in `(sum_tolerance, input_tolerance]`.
    pub fn new(probs: Vec<T>) -> Result<Self, DistError> {
        let q = probs.len();
        if q < 2 {
            return Err(DistError::AlphabetTooSmall(q));
        }
        for (index, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < T::zero() {
                return Err(DistError::InvalidEntry { index });
            }
        }
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > T::input_tolerance() {
            return Err(DistError::NotNormalized { sum: sum.as_f64() });
        }
        let mut d = Self { probs };
        d.renormalize_if_drifted(sum);
        Ok(d)
    }

    /// Normalizes an arbitrary nonnegative weight vector. Fails if all weights vanish.
    pub fn from_weights(weights: Vec<T>) -> Result<Self, DistError> {
        let q = weights.len();
        if q < 2 {
            return Err(DistError::AlphabetTooSmall(q));
        }
        for (index, &p) in weights.iter().enumerate() {
            if !p.is_finite() || p < T::zero() {
                return Err(DistError::InvalidEntry { index });
            }
        }
        let sum: T = weights.iter().copied().sum();
        if sum <= T::zero() {
            return Err(DistError::NotNormalized { sum: 0.0 });
        }
        Ok(Self::from_unnormalized(weights, sum))
    }

    /// Internal constructor for vectors already known to be nonnegative with positive `sum`.
    pub(crate) fn from_unnormalized(mut probs: Vec<T>, sum: T) -> Self {
        if sum != T::one() {
            let inv = sum.recip();
            probs.iter_mut().for_each(|p| *p = *p * inv);
        }
        Self { probs }
    }

    fn renormalize_if_drifted(&mut self, sum: T) {
        if (sum - T::one()).abs() > T::sum_tolerance() {
            let inv = sum.recip();
            self.probs.iter_mut().for_each(|p| *p = *p * inv);
        }
    }

    pub fn uniform(q: usize) -> Result<Self, DistError> {
        if q < 2 {
            return Err(DistError::AlphabetTooSmall(q));
        }
        Ok(Self {
            probs: vec![T::from_count(q).recip(); q],
        })
    }

    pub fn point_mass(q: usize, symbol: usize) -> Result<Self, DistError> {
        if q < 2 {
            return Err(DistError::AlphabetTooSmall(q));
        }
        let mut probs = vec![T::zero(); q];
        probs[symbol % q] = T::one();
        Ok(Self { probs })
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    #[inline]
    pub fn get(&self, symbol: usize) -> T {
        self.probs[symbol % self.q()]
    }

    pub fn into_probs(self) -> Vec<T> {
        self.probs
    }

    /// Normalized Shannon entropy `-(1/lg q) Σ p lg p`, clamped to `[0, 1]`.
    pub fn entropy(&self) -> T {
        entropy_of(&self.probs)
    }

    /// The `j`-th cyclic shift: `result(m) = p(m - j)`.
    pub fn cyclic_shift(&self, j: i64) -> Self {
        let q = self.q();
        let j = j.rem_euclid(q as i64) as usize;
        let mut out = vec![T::zero(); q];
        for (m, slot) in out.iter_mut().enumerate() {
            *slot = self.probs[(m + q - j) % q];
        }
        Self { probs: out }
    }

    /// Law of `A + B mod q` for independent `A ~ self`, `B ~ other`.
    pub fn convolve(&self, other: &Self) -> Result<Self, DistError> {
        self.check_alphabet(other)?;
        let q = self.q();
        let mut out = vec![T::zero(); q];
        cyclic_convolve_into(&self.probs, &other.probs, &mut out);
        let sum: T = out.iter().copied().sum();
        let mut d = Self { probs: out };
        d.renormalize_if_drifted(sum);
        Ok(d)
    }

    /// `Σ_i |a(i) - b(i)|`, twice the total variation distance.
    pub fn l1_distance(&self, other: &Self) -> Result<T, DistError> {
        self.check_alphabet(other)?;
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(&a, &b)| (a - b).abs())
            .sum())
    }

    /// Pointwise convex combination `Σ_k weights(k) * parts[k]`.
    ///
    /// `weights` is a distribution over the `k` parts, so `k >= 2`; a single
    /// part is its own mixture and is accepted through [`Dist::mix_slice`].
    pub fn mix(weights: &Dist<T>, parts: &[Dist<T>]) -> Result<Self, DistError> {
        Self::mix_slice(weights.probs(), parts)
    }

    /// Like [`Dist::mix`] but with raw weights (nonnegative, summing to one).
    pub fn mix_slice(weights: &[T], parts: &[Dist<T>]) -> Result<Self, DistError> {
        if parts.is_empty() || weights.len() != parts.len() {
            return Err(DistError::InvalidWeights(format!(
                "{} weights for {} parts",
                weights.len(),
                parts.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(DistError::InvalidWeights("negative weight".into()));
        }
        let wsum: T = weights.iter().copied().sum();
        if (wsum - T::one()).abs() > T::input_tolerance() {
            return Err(DistError::InvalidWeights(format!("weights sum to {wsum}")));
        }
        let q = parts[0].q();
        for p in parts {
            if p.q() != q {
                return Err(DistError::AlphabetMismatch {
                    left: q,
                    right: p.q(),
                });
            }
        }
        let mut out = vec![T::zero(); q];
        for (&w, part) in weights.iter().zip(parts) {
            for (o, &p) in out.iter_mut().zip(&part.probs) {
                *o = *o + w * p;
            }
        }
        let sum: T = out.iter().copied().sum();
        let mut d = Self { probs: out };
        d.renormalize_if_drifted(sum);
        Ok(d)
    }

    /// Symmetric Dirichlet(`concentration`) draw over `Z_q`.
    pub fn sample<R: Rng + ?Sized>(
        q: usize,
        concentration: f64,
        rng: &mut R,
    ) -> Result<Self, DistError> {
        if q < 2 {
            return Err(DistError::AlphabetTooSmall(q));
        }
        if !(concentration.is_finite() && concentration > 0.0) {
            return Err(DistError::InvalidParameter(format!(
                "concentration must be positive, got {concentration}"
            )));
        }
        let gamma = Gamma::new(concentration, 1.0)
            .map_err(|e| DistError::InvalidParameter(e.to_string()))?;
        loop {
            let draws: Vec<f64> = (0..q).map(|_| gamma.sample(rng)).collect();
            let sum: f64 = draws.iter().sum();
            if sum > 0.0 && sum.is_finite() {
                let probs = draws.into_iter().map(|x| T::lit(x / sum)).collect();
                let mut d = Self { probs };
                let s: T = d.probs.iter().copied().sum();
                d.renormalize_if_drifted(s);
                return Ok(d);
            }
        }
    }

    /// Index of the largest entry; the smallest such index on ties.
    pub fn argmax(&self) -> usize {
        argmax_first(&self.probs)
    }

    /// `1 - max_x p(x)`.
    pub fn max_deficit(&self) -> T {
        T::one() - self.probs[self.argmax()]
    }

    /// `max_x |p(x) - 1/q|`.
    pub fn max_deviation_from_uniform(&self) -> T {
        let u = T::from_count(self.q()).recip();
        self.probs
            .iter()
            .map(|&p| (p - u).abs())
            .fold(T::zero(), T::max)
    }

    pub fn is_uniform(&self) -> bool {
        self.max_deviation_from_uniform() <= T::sum_tolerance()
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> Dist<U> {
        let probs: Vec<U> = self.probs.iter().map(|p| U::lit(p.as_f64())).collect();
        let sum: U = probs.iter().copied().sum();
        Dist::from_unnormalized(probs, sum)
    }

    fn check_alphabet(&self, other: &Self) -> Result<(), DistError> {
        if self.q() != other.q() {
            return Err(DistError::AlphabetMismatch {
                left: self.q(),
                right: other.q(),
            });
        }
        Ok(())
    }
}

/// Normalized entropy of a (normalized) probability slice, clamped to `[0, 1]`.
///
/// Terms are summed in sorted order, so any permutation of `probs` gives a
/// bit-identical result.
pub fn entropy_of<T: Real>(probs: &[T]) -> T {
    let q = probs.len();
    if q < 2 {
        return T::zero();
    }
    let mut sorted = probs.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let h: T = sorted.iter().map(|&p| -xlogx(p)).sum();
    let h = h / T::from_count(q).log2();
    h.max(T::zero()).min(T::one())
}

/// `out(k) = Σ_i a(i) b(k - i mod q)`.
#[inline]
pub(crate) fn cyclic_convolve_into<T: Real>(a: &[T], b: &[T], out: &mut [T]) {
    let q = a.len();
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (i, &ai) in a.iter().enumerate() {
            acc = acc + ai * b[(k + q - i) % q];
        }
        *slot = acc;
    }
}

#[inline]
pub(crate) fn argmax_first<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Formats a float with 17 significant digits; parses back bit-exactly.
pub(crate) fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

pub(crate) fn parse_real<T: Real>(s: &str) -> Option<T> {
    let v: f64 = s.trim().parse().ok()?;
    T::from_f64(v)
}

/// Text literal `q=<int>;p=<v0>,<v1>,...`.
impl<T: Real> fmt::Display for Dist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={};p=", self.q())?;
        for (i, &p) in self.probs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&fmt_real(p))?;
        }
        Ok(())
    }
}

impl<T: Real> FromStr for Dist<T> {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (q_part, p_part) = s
            .split_once(';')
            .ok_or_else(|| DistError::Parse(format!("missing ';' in {s:?}")))?;
        let q: usize = q_part
            .strip_prefix("q=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| DistError::Parse(format!("bad q field {q_part:?}")))?;
        let values = p_part
            .strip_prefix("p=")
            .ok_or_else(|| DistError::Parse(format!("bad p field {p_part:?}")))?;
        let probs = values
            .split(',')
            .map(|v| parse_real(v).ok_or_else(|| DistError::Parse(format!("bad value {v:?}"))))
            .collect::<Result<Vec<T>, _>>()?;
        if probs.len() != q {
            return Err(DistError::Parse(format!(
                "q={q} but {} values",
                probs.len()
            )));
        }
        Dist::new(probs)
    }
}
