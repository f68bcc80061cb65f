//! Channels `W = (X; Y)` as finite joint laws, and the polarization transforms.
//!
//! A channel is stored as a list of output atoms, each with its probability
//! `Pr[Y = y]` and the posterior `Pr[X = . | Y = y]`. The joint mass of
//! `(x, y_k)` is `weight_k * posterior_k(x)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use thiserror::Error;

use crate::dist::{argmax_first, cyclic_convolve_into, fmt_real, parse_real, Dist, DistError};
use crate::real::{merge_key, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel has no output atoms")]
    Empty,
    #[error("atom {index}: weight must be positive and finite")]
    InvalidWeight { index: usize },
    #[error("atom weights sum to {sum}, expected 1")]
    WeightsNotNormalized { sum: f64 },
    #[error("atom {index}: posterior alphabet {got} differs from channel alphabet {expected}")]
    AlphabetMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("flip probability {flip} outside [0, {max}]")]
    FlipOutOfRange { flip: f64, max: f64 },
    #[error("target entropy {0} outside [0, 1]")]
    EntropyOutOfRange(f64),
    #[error("merge tolerance must be nonnegative, got {0}")]
    NegativeTolerance(f64),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("malformed channel text: {0}")]
    Parse(String),
}

/// One output symbol: its probability and the posterior of the input given it.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom<T: Real> {
    pub weight: T,
    pub posterior: Dist<T>,
}

/// A channel with `q`-ary input and a finite output alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T: Real> {
    q: usize,
    atoms: Vec<Atom<T>>,
    /// Set once a lossy merge (`tol > 0`) has touched the channel.
    approximate: bool,
    /// Cumulative entropy change introduced by lossy merges.
    merge_entropy_delta: f64,
}

/// Entropy and Bhattacharyya statistics of a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats<T: Real> {
    pub entropy: T,
    pub symmetric_entropy: T,
    pub z_max: T,
    /// `Z_d` for `d = 1..q-1`, stored at index `d - 1`.
    pub z_by_d: Vec<T>,
}

impl<T: Real> Channel<T> {
    pub fn new(q: usize, atoms: Vec<Atom<T>>) -> Result<Self, ChannelError> {
        if q < 2 {
            return Err(DistError::AlphabetTooSmall(q).into());
        }
        if atoms.is_empty() {
            return Err(ChannelError::Empty);
        }
        for (index, a) in atoms.iter().enumerate() {
            if !(a.weight.is_finite() && a.weight > T::zero()) {
                return Err(ChannelError::InvalidWeight { index });
            }
            if a.posterior.q() != q {
                return Err(ChannelError::AlphabetMismatch {
                    index,
                    expected: q,
                    got: a.posterior.q(),
                });
            }
        }
        let sum: T = atoms.iter().map(|a| a.weight).sum();
        if (sum - T::one()).abs() > T::input_tolerance() {
            return Err(ChannelError::WeightsNotNormalized { sum: sum.as_f64() });
        }
        let mut ch = Self {
            q,
            atoms,
            approximate: false,
            merge_entropy_delta: 0.0,
        };
        if (sum - T::one()).abs() > T::sum_tolerance() {
            ch.rescale_weights(sum);
        }
        Ok(ch)
    }

    /// Builds a channel from joint masses: `columns[y][x] = Pr[X = x, Y = y]`.
    ///
    /// Columns with zero total mass are dropped. The total mass must be one.
    pub fn from_joint(q: usize, columns: &[Vec<T>]) -> Result<Self, ChannelError> {
        let mut atoms = Vec::with_capacity(columns.len());
        for (index, col) in columns.iter().enumerate() {
            if col.len() != q {
                return Err(ChannelError::AlphabetMismatch {
                    index,
                    expected: q,
                    got: col.len(),
                });
            }
            if col.iter().any(|v| !v.is_finite() || *v < T::zero()) {
                return Err(ChannelError::InvalidWeight { index });
            }
            let w: T = col.iter().copied().sum();
            if w > T::zero() {
                atoms.push(Atom {
                    weight: w,
                    posterior: Dist::from_unnormalized(col.clone(), w),
                });
            }
        }
        Self::new(q, atoms)
    }

    /// A source without side information: one output atom carrying `dist`.
    pub fn source(dist: Dist<T>) -> Self {
        Self {
            q: dist.q(),
            atoms: vec![Atom {
                weight: T::one(),
                posterior: dist,
            }],
            approximate: false,
            merge_entropy_delta: 0.0,
        }
    }

    /// q-ary symmetric channel with uniform input.
    ///
    /// Output `y` has weight `1/q` and posterior `1 - flip` on `y`,
    /// `flip/(q-1)` elsewhere.
    pub fn qsc(q: usize, flip: T) -> Result<Self, ChannelError> {
        if q < 2 {
            return Err(DistError::AlphabetTooSmall(q).into());
        }
        let qt = T::from_count(q);
        let max = (qt - T::one()) / qt;
        if !(flip >= T::zero() && flip <= max + T::sum_tolerance()) {
            return Err(ChannelError::FlipOutOfRange {
                flip: flip.as_f64(),
                max: max.as_f64(),
            });
        }
        let flip = flip.min(max);
        let off = flip / (qt - T::one());
        let atoms = (0..q)
            .map(|y| {
                let probs = (0..q)
                    .map(|x| if x == y { T::one() - flip } else { off })
                    .collect();
                let sum: T = (T::one() - flip) + off * (qt - T::one());
                Atom {
                    weight: qt.recip(),
                    posterior: Dist::from_unnormalized(probs, sum),
                }
            })
            .collect();
        Ok(Self {
            q,
            atoms,
            approximate: false,
            merge_entropy_delta: 0.0,
        })
    }

    /// q-ary symmetric channel whose entropy equals `target` (bisection on the flip probability).
    pub fn qsc_with_entropy(q: usize, target: T) -> Result<Self, ChannelError> {
        if !(target >= T::zero() && target <= T::one()) {
            return Err(ChannelError::EntropyOutOfRange(target.as_f64()));
        }
        let qt = T::from_count(q);
        let mut lo = T::zero();
        let mut hi = (qt - T::one()) / qt;
        for _ in 0..200 {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if Self::qsc(q, mid)?.entropy() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let hl = Self::qsc(q, lo)?.entropy();
        let hh = Self::qsc(q, hi)?.entropy();
        let flip = if (hl - target).abs() <= (hh - target).abs() {
            lo
        } else {
            hi
        };
        Self::qsc(q, flip)
    }

    /// Random channel with between 1 and `max_atoms` outputs.
    ///
    /// Posterior concentrations are drawn log-uniformly over `[0.05, 20]` so the
    /// corpus covers nearly deterministic, nearly uniform and mixed outputs.
    pub fn sample_random<R: Rng + ?Sized>(
        q: usize,
        max_atoms: usize,
        rng: &mut R,
    ) -> Result<Self, ChannelError> {
        let k = rng.random_range(1..=max_atoms.max(1));
        let weights = if k == 1 {
            vec![T::one()]
        } else {
            Dist::<T>::sample(k, 1.0, rng)?.into_probs()
        };
        let mut atoms = Vec::with_capacity(k);
        for w in weights {
            let conc = (rng.random_range(0.05f64.ln()..20f64.ln())).exp();
            let posterior = Dist::sample(q, conc, rng)?;
            if w > T::zero() {
                atoms.push(Atom {
                    weight: w,
                    posterior,
                });
            }
        }
        if atoms.is_empty() {
            atoms.push(Atom {
                weight: T::one(),
                posterior: Dist::uniform(q)?,
            });
        }
        let sum: T = atoms.iter().map(|a| a.weight).sum();
        let mut ch = Self::new(q, atoms)?;
        ch.rescale_weights(sum);
        Ok(ch)
    }

    fn rescale_weights(&mut self, sum: T) {
        if sum != T::one() {
            let inv = sum.recip();
            self.atoms
                .iter_mut()
                .for_each(|a| a.weight = a.weight * inv);
        }
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    pub fn merge_entropy_delta(&self) -> f64 {
        self.merge_entropy_delta
    }

    /// `H(X | Y)`, normalized.
    pub fn entropy(&self) -> T {
        let h: T = self
            .atoms
            .iter()
            .map(|a| a.weight * a.posterior.entropy())
            .sum();
        h.max(T::zero()).min(T::one())
    }

    /// `T(W) = H(W) (1 - H(W))`.
    pub fn symmetric_entropy(&self) -> T {
        let h = self.entropy();
        h * (T::one() - h)
    }

    /// Marginal law of the input `X`.
    pub fn input_marginal(&self) -> Dist<T> {
        let mut m = vec![T::zero(); self.q];
        for a in &self.atoms {
            for (mx, &p) in m.iter_mut().zip(a.posterior.probs()) {
                *mx = *mx + a.weight * p;
            }
        }
        let sum: T = m.iter().copied().sum();
        Dist::from_unnormalized(m, sum)
    }

    /// `W^- = (A0 + A1; B0, B1)`.
    pub fn minus(&self) -> Self {
        let q = self.q;
        let mut atoms = Vec::with_capacity(self.atoms.len() * self.atoms.len());
        let mut buf = vec![T::zero(); q];
        for a in &self.atoms {
            for b in &self.atoms {
                let w = a.weight * b.weight;
                if w <= T::zero() {
                    continue;
                }
                cyclic_convolve_into(a.posterior.probs(), b.posterior.probs(), &mut buf);
                let s: T = buf.iter().copied().sum();
                if s <= T::zero() {
                    continue;
                }
                atoms.push(Atom {
                    weight: w,
                    posterior: Dist::from_unnormalized(buf.clone(), s),
                });
            }
        }
        self.derived(atoms)
    }

    /// `W^+ = (A1; A0 + A1, B0, B1)`.
    pub fn plus(&self) -> Self {
        let q = self.q;
        let mut atoms = Vec::with_capacity(self.atoms.len() * self.atoms.len() * q);
        for a in &self.atoms {
            let pa = a.posterior.probs();
            for b in &self.atoms {
                let pb = b.posterior.probs();
                let w = a.weight * b.weight;
                for u in 0..q {
                    // Pr[A1 = x, A0 + A1 = u | y_a, y_b] = pa(u - x) pb(x)
                    let joint: Vec<T> = (0..q).map(|x| pa[(u + q - x) % q] * pb[x]).collect();
                    let s: T = joint.iter().copied().sum();
                    let weight = w * s;
                    if weight > T::zero() && s > T::zero() {
                        atoms.push(Atom {
                            weight,
                            posterior: Dist::from_unnormalized(joint, s),
                        });
                    }
                }
            }
        }
        self.derived(atoms)
    }

    fn derived(&self, atoms: Vec<Atom<T>>) -> Self {
        let sum: T = atoms.iter().map(|a| a.weight).sum();
        let mut ch = Self {
            q: self.q,
            atoms,
            approximate: self.approximate,
            merge_entropy_delta: self.merge_entropy_delta,
        };
        if (sum - T::one()).abs() > T::sum_tolerance() {
            ch.rescale_weights(sum);
        }
        ch
    }

    /// Per-shift Bhattacharyya parameters `Z_d = Σ_x Σ_y sqrt(p(x,y) p(x+d,y))`.
    pub fn z_by_d(&self) -> Vec<T> {
        let q = self.q;
        (1..q)
            .map(|d| {
                self.atoms
                    .iter()
                    .map(|a| {
                        let p = a.posterior.probs();
                        let s: T = (0..q).map(|x| (p[x] * p[(x + d) % q]).sqrt()).sum();
                        a.weight * s
                    })
                    .sum()
            })
            .collect()
    }

    pub fn z_max(&self) -> T {
        self.z_by_d().into_iter().fold(T::zero(), T::max)
    }

    pub fn bhattacharyya(&self) -> ChannelStats<T> {
        let z_by_d = self.z_by_d();
        let z_max = z_by_d.iter().copied().fold(T::zero(), T::max);
        let entropy = self.entropy();
        ChannelStats {
            entropy,
            symmetric_entropy: entropy * (T::one() - entropy),
            z_max,
            z_by_d,
        }
    }

    /// Exact error probability of the MAP decision on one channel use.
    ///
    /// An output whose argmax is not unique counts as a full error.
    pub fn ml_error_prob(&self) -> T {
        self.atoms
            .iter()
            .map(|a| {
                let p = a.posterior.probs();
                let best = argmax_first(p);
                let tied = p
                    .iter()
                    .enumerate()
                    .any(|(x, &v)| x != best && v == p[best]);
                if tied {
                    a.weight
                } else {
                    a.weight * (T::one() - p[best])
                }
            })
            .sum()
    }

    /// Merges outputs with (near-)identical posteriors.
    ///
    /// `tol = 0` merges posteriors equal up to floating rounding (same key under
    /// `Real::merge_bits` relative rounding), which leaves every statistic unchanged.
    /// `tol > 0` clusters greedily by L1 distance; the result is flagged as
    /// approximate and records the entropy change.
    pub fn merge_equivalent_outputs(&self, tol: T) -> Result<Self, ChannelError> {
        if !(tol >= T::zero()) {
            return Err(ChannelError::NegativeTolerance(tol.as_f64()));
        }
        if tol == T::zero() {
            return Ok(self.merge_exact(|_, p| p.to_vec()));
        }
        let mut reps: Vec<(Vec<T>, T, Vec<T>)> = Vec::new(); // (representative, weight, mass)
        for a in &self.atoms {
            let p = a.posterior.probs();
            let hit = reps.iter_mut().find(|(rep, _, _)| {
                rep.iter().zip(p).map(|(&r, &x)| (r - x).abs()).sum::<T>() <= tol
            });
            match hit {
                Some((_, w, mass)) => {
                    *w = *w + a.weight;
                    for (m, &x) in mass.iter_mut().zip(p) {
                        *m = *m + a.weight * x;
                    }
                }
                None => reps.push((
                    p.to_vec(),
                    a.weight,
                    p.iter().map(|&x| a.weight * x).collect(),
                )),
            }
        }
        let atoms = reps
            .into_iter()
            .map(|(_, w, mass)| Atom {
                weight: w,
                posterior: Dist::from_unnormalized(mass, w),
            })
            .collect();
        let mut out = self.derived(atoms);
        out.approximate = true;
        out.merge_entropy_delta += (out.entropy() - self.entropy()).as_f64();
        Ok(out)
    }

    /// Replaces every posterior by its canonical cyclic rotation, then merges.
    ///
    /// Entropy, every `Z_d`, the error probability, and the same statistics of
    /// every channel derived by `minus`/`plus`, are invariant under shifting
    /// individual posteriors, so this quotient is exact for those statistics.
    /// The joint law itself changes; do not use it for decoding.
    pub fn canonicalize_shifts(&self) -> Self {
        self.merge_exact(|q, p| {
            let key: Vec<i64> = p.iter().map(|&x| merge_key(x)).collect();
            let best = (0..q)
                .max_by(|&r, &s| {
                    let kr = (0..q).map(|m| key[(m + r) % q]);
                    let ks = (0..q).map(|m| key[(m + s) % q]);
                    kr.cmp(ks).then(s.cmp(&r))
                })
                .unwrap_or(0);
            (0..q).map(|m| p[(m + best) % q]).collect()
        })
    }

    fn merge_exact<F>(&self, canon: F) -> Self
    where
        F: Fn(usize, &[T]) -> Vec<T>,
    {
        let mut index: HashMap<Vec<i64>, usize> = HashMap::with_capacity(self.atoms.len());
        let mut groups: Vec<(T, Vec<T>)> = Vec::new();
        for a in &self.atoms {
            let p = canon(self.q, a.posterior.probs());
            let key: Vec<i64> = p.iter().map(|&x| merge_key(x)).collect();
            match index.get(&key) {
                Some(&g) => {
                    let (w, mass) = &mut groups[g];
                    *w = *w + a.weight;
                    for (m, &x) in mass.iter_mut().zip(&p) {
                        *m = *m + a.weight * x;
                    }
                }
                None => {
                    index.insert(key, groups.len());
                    groups.push((a.weight, p.iter().map(|&x| a.weight * x).collect()));
                }
            }
        }
        let atoms = groups
            .into_iter()
            .map(|(w, mass)| Atom {
                weight: w,
                posterior: Dist::from_unnormalized(mass, w),
            })
            .collect();
        self.derived(atoms)
    }

    /// Sampler for `(x, y)` pairs from the joint law.
    pub fn joint_sampler(&self) -> JointSampler<T> {
        JointSampler::new(self)
    }

    /// Sampler for outputs given an input, `Pr[Y = y | X = x]`.
    pub fn output_sampler(&self) -> OutputSampler {
        OutputSampler::new(self)
    }

    pub fn cast<U: Real>(&self) -> Channel<U> {
        let atoms: Vec<Atom<U>> = self
            .atoms
            .iter()
            .map(|a| Atom {
                weight: U::lit(a.weight.as_f64()),
                posterior: a.posterior.cast(),
            })
            .collect();
        let sum: U = atoms.iter().map(|a| a.weight).sum();
        let mut ch = Channel {
            q: self.q,
            atoms,
            approximate: self.approximate,
            merge_entropy_delta: self.merge_entropy_delta,
        };
        ch.rescale_weights(sum);
        ch
    }
}

/// Draws `(x, atom index)` pairs from a channel's joint law.
#[derive(Debug, Clone)]
pub struct JointSampler<T: Real> {
    outputs: WeightedIndex<f64>,
    posteriors: Vec<WeightedIndex<f64>>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Real> JointSampler<T> {
    fn new(ch: &Channel<T>) -> Self {
        let outputs = WeightedIndex::new(ch.atoms.iter().map(|a| a.weight.as_f64()))
            .expect("channel weights are positive");
        let posteriors = ch
            .atoms
            .iter()
            .map(|a| {
                WeightedIndex::new(a.posterior.probs().iter().map(|p| p.as_f64()))
                    .expect("posterior has positive mass")
            })
            .collect();
        Self {
            outputs,
            posteriors,
            _marker: std::marker::PhantomData,
        }
    }

    /// Returns `(x, y)` with `y` an atom index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, usize) {
        let y = self.outputs.sample(rng);
        let x = self.posteriors[y].sample(rng);
        (x as u32, y)
    }
}

/// Draws an output atom given the input symbol.
#[derive(Debug, Clone)]
pub struct OutputSampler {
    by_input: Vec<Option<WeightedIndex<f64>>>,
}

impl OutputSampler {
    fn new<T: Real>(ch: &Channel<T>) -> Self {
        let by_input = (0..ch.q)
            .map(|x| {
                let col: Vec<f64> = ch
                    .atoms
                    .iter()
                    .map(|a| (a.weight * a.posterior.probs()[x]).as_f64())
                    .collect();
                WeightedIndex::new(col).ok()
            })
            .collect();
        Self { by_input }
    }

    /// `None` when `x` has zero probability under the channel's input law.
    pub fn sample<R: Rng + ?Sized>(&self, x: u32, rng: &mut R) -> Option<usize> {
        self.by_input
            .get(x as usize)
            .and_then(|w| w.as_ref())
            .map(|w| w.sample(rng))
    }
}

/// Text format: header `q=<int>;atoms=<k>` then `k` lines `w=<weight>;p=<v0>,...`.
impl<T: Real> fmt::Display for Channel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "q={};atoms={}", self.q, self.atoms.len())?;
        for (k, a) in self.atoms.iter().enumerate() {
            write!(f, "w={};p=", fmt_real(a.weight))?;
            for (i, &p) in a.posterior.probs().iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str(&fmt_real(p))?;
            }
            if k + 1 < self.atoms.len() {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

impl<T: Real> Channel<T> {
    /// Parses the channel text format from a sequence of lines, consuming
    /// exactly the header plus `atoms` lines.
    pub fn parse_lines<'a, I>(lines: &mut I) -> Result<Self, ChannelError>
    where
        I: Iterator<Item = &'a str>,
    {
        let header = lines
            .next()
            .ok_or_else(|| ChannelError::Parse("missing header".into()))?
            .trim();
        let (q_part, k_part) = header
            .split_once(';')
            .ok_or_else(|| ChannelError::Parse(format!("bad header {header:?}")))?;
        let q: usize = q_part
            .strip_prefix("q=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ChannelError::Parse(format!("bad q field {q_part:?}")))?;
        let k: usize = k_part
            .strip_prefix("atoms=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ChannelError::Parse(format!("bad atoms field {k_part:?}")))?;
        let mut atoms = Vec::with_capacity(k);
        for i in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| ChannelError::Parse(format!("missing atom line {i}")))?
                .trim();
            let (w_part, p_part) = line
                .split_once(';')
                .ok_or_else(|| ChannelError::Parse(format!("bad atom line {line:?}")))?;
            let weight: T = w_part
                .strip_prefix("w=")
                .and_then(parse_real)
                .ok_or_else(|| ChannelError::Parse(format!("bad weight {w_part:?}")))?;
            let posterior: Dist<T> = format!("q={q};{p_part}")
                .parse()
                .map_err(|e: DistError| ChannelError::Parse(e.to_string()))?;
            atoms.push(Atom { weight, posterior });
        }
        Self::new(q, atoms)
    }
}

impl<T: Real> FromStr for Channel<T> {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let ch = Self::parse_lines(&mut lines)?;
        if let Some(extra) = lines.next() {
            return Err(ChannelError::Parse(format!("trailing content {extra:?}")));
        }
        Ok(ch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn atom(w: f64, p: &[f64]) -> Atom<f64> {
        Atom {
            weight: w,
            posterior: Dist::new(p.to_vec()).unwrap(),
        }
    }

    fn noiseless(q: usize) -> Channel<f64> {
        Channel::qsc(q, 0.0).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let u = Channel::source(Dist::<f64>::uniform(3).unwrap());
        assert_eq!(u.entropy(), 1.0);
        assert_eq!(noiseless(3).entropy(), 0.0);
        let w = Channel::new(2, vec![atom(0.5, &[1.0, 0.0]), atom(0.5, &[0.5, 0.5])]).unwrap();
        assert!((w.entropy() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Channel::<f64>::new(2, vec![]), Err(ChannelError::Empty));
        assert!(matches!(
            Channel::new(2, vec![atom(0.5, &[1.0, 0.0])]),
            Err(ChannelError::WeightsNotNormalized { .. })
        ));
        assert!(matches!(
            Channel::new(3, vec![atom(1.0, &[1.0, 0.0])]),
            Err(ChannelError::AlphabetMismatch { .. })
        ));
        assert!(matches!(
            Channel::new(2, vec![atom(0.0, &[1.0, 0.0]), atom(1.0, &[0.0, 1.0])]),
            Err(ChannelError::InvalidWeight { index: 0 })
        ));
    }

    #[test]
    fn minus_examples() {
        let u = Channel::source(Dist::<f64>::uniform(3).unwrap()).minus();
        assert_eq!(u.len(), 1);
        assert!((u.entropy() - 1.0).abs() < 1e-15);

        let n = noiseless(3).minus();
        assert_eq!(n.entropy(), 0.0);

        let s = Channel::source(Dist::<f64>::new(vec![0.75, 0.25]).unwrap()).minus();
        assert_eq!(s.len(), 1);
        let p = s.atoms()[0].posterior.probs();
        assert!((p[0] - 0.625).abs() < 1e-15 && (p[1] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn plus_examples() {
        assert_eq!(noiseless(3).plus().entropy(), 0.0);
        let u = Channel::source(Dist::<f64>::uniform(5).unwrap()).plus();
        assert!((u.entropy() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bhattacharyya_examples() {
        assert_eq!(noiseless(4).bhattacharyya().z_max, 0.0);
        let u = Channel::source(Dist::<f64>::uniform(3).unwrap()).bhattacharyya();
        assert!((u.z_max - 1.0).abs() < 1e-15);
        assert!(u.z_by_d.iter().all(|z| (z - 1.0).abs() < 1e-15));
        let s = Channel::source(Dist::<f64>::new(vec![0.9, 0.1]).unwrap()).bhattacharyya();
        assert!((s.z_by_d[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn ml_error_examples() {
        assert_eq!(noiseless(3).ml_error_prob(), 0.0);
        let tie = Channel::new(2, vec![atom(0.3, &[0.5, 0.5]), atom(0.7, &[1.0, 0.0])]).unwrap();
        assert!((tie.ml_error_prob() - 0.3).abs() < 1e-15);
        let s = Channel::source(Dist::<f64>::new(vec![0.9, 0.1]).unwrap());
        assert!((s.ml_error_prob() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn merge_examples() {
        let w = Channel::new(
            3,
            vec![
                atom(0.25, &[0.6, 0.3, 0.1]),
                atom(0.25, &[0.1, 0.1, 0.8]),
                atom(0.5, &[0.6, 0.3, 0.1]),
            ],
        )
        .unwrap();
        let m = w.merge_equivalent_outputs(0.0).unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.entropy() - w.entropy()).abs() < 1e-12);
        assert!(!m.is_approximate());

        let distinct = noiseless(3);
        assert_eq!(distinct.merge_equivalent_outputs(0.0).unwrap(), distinct);
        assert!(w.merge_equivalent_outputs(-1.0).is_err());
    }

    #[test]
    fn lossy_merge_is_flagged() {
        let w = Channel::new(2, vec![atom(0.5, &[0.8, 0.2]), atom(0.5, &[0.75, 0.25])]).unwrap();
        let m = w.merge_equivalent_outputs(0.2).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m.is_approximate());
        assert!(m.merge_entropy_delta() >= 0.0);
        assert!((m.merge_entropy_delta() - (m.entropy() - w.entropy())).abs() < 1e-15);
    }

    #[test]
    fn exact_tracking_atom_count_is_recorded() {
        // q=2 symmetric channel tracked four levels with exact merging.
        let mut level = vec![Channel::<f64>::qsc(2, 0.11).unwrap()];
        let mut unmerged_bound = 2usize;
        for _ in 0..4 {
            level = level
                .iter()
                .flat_map(|w| [w.minus(), w.plus()])
                .map(|w| w.merge_equivalent_outputs(0.0).unwrap())
                .collect();
            unmerged_bound = unmerged_bound
                .saturating_mul(unmerged_bound)
                .saturating_mul(2);
        }
        let max_atoms = level.iter().map(|w| w.len()).max().unwrap();
        assert!(max_atoms < unmerged_bound);
    }

    #[test]
    fn qsc_examples() {
        assert_eq!(Channel::<f64>::qsc(3, 0.0).unwrap().entropy(), 0.0);
        assert!((Channel::<f64>::qsc(3, 2.0 / 3.0).unwrap().entropy() - 1.0).abs() < 1e-15);
        let w = Channel::<f64>::qsc_with_entropy(3, 0.5).unwrap();
        assert!((w.entropy() - 0.5).abs() < 1e-9);
        assert!(Channel::<f64>::qsc(3, 0.7).is_err());
        assert!(Channel::<f64>::qsc(3, -0.1).is_err());
    }

    #[test]
    fn from_joint_drops_empty_outputs() {
        let ch = Channel::<f64>::from_joint(2, &[vec![0.25, 0.25], vec![0.0, 0.0], vec![0.5, 0.0]])
            .unwrap();
        assert_eq!(ch.len(), 2);
        assert!((ch.entropy() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shift_canonicalization_preserves_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w = Channel::<f64>::sample_random(3, 6, &mut rng).unwrap();
            let c = w.canonicalize_shifts();
            assert!((c.entropy() - w.entropy()).abs() < 1e-12);
            assert!((c.z_max() - w.z_max()).abs() < 1e-12);
            assert!((c.ml_error_prob() - w.ml_error_prob()).abs() < 1e-12);
            assert!((c.minus().entropy() - w.minus().entropy()).abs() < 1e-12);
            assert!((c.plus().z_max() - w.plus().z_max()).abs() < 1e-12);
        }
        assert_eq!(
            Channel::<f64>::qsc(5, 0.2)
                .unwrap()
                .canonicalize_shifts()
                .len(),
            1
        );
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = Channel::<f64>::sample_random(3, 5, &mut rng).unwrap();
        let text = w.to_string();
        let back: Channel<f64> = text.parse().unwrap();
        assert_eq!(back, w);
        assert_eq!(back.to_string(), text);
        assert!("q=2;atoms=2\nw=1;p=0.5,0.5"
            .parse::<Channel<f64>>()
            .is_err());
    }

    #[test]
    fn samplers_follow_the_joint_law() {
        let w = Channel::new(2, vec![atom(0.5, &[1.0, 0.0]), atom(0.5, &[0.2, 0.8])]).unwrap();
        let js = w.joint_sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut ones = 0;
        for _ in 0..n {
            let (x, y) = js.sample(&mut rng);
            if y == 0 {
                assert_eq!(x, 0);
            }
            ones += x as usize;
        }
        let rate = ones as f64 / n as f64;
        assert!((rate - 0.4).abs() < 0.01, "{rate}");

        let os = w.output_sampler();
        for _ in 0..1000 {
            // x = 1 is only produced by atom 1.
            assert_eq!(os.sample(1, &mut rng), Some(1));
        }
    }
}
