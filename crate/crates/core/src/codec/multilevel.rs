//! Composite alphabets: one prime-alphabet code per mixed-radix digit.
//!
//! For `q = q_1 q_2 ... q_s` (primes ascending), `x = u_1 + q_1 u_2 + q_1 q_2 u_3 + ...`.
//! Plane `j` is coded against the sub-channel `(U_j ; Y, U_1, ..., U_{j-1})`, so
//! the decoder of plane `j` sees the planes already decoded as side information.

use super::{compress, decompress, CodecError, CompressedBlock};
use crate::arith::{is_prime, prime_factors};
use crate::channel::{Atom, Channel};
use crate::construction::CodeSpec;
use crate::dist::Dist;
use crate::real::Real;
use crate::transform::SymbolVec;

fn check_factors(factors: &[usize]) -> Result<usize, CodecError> {
    let q: usize = factors.iter().product();
    let ok = !factors.is_empty()
        && factors.iter().all(|&f| is_prime(f))
        && factors.windows(2).all(|w| w[0] <= w[1]);
    if !ok {
        return Err(CodecError::BadFactorization { q });
    }
    Ok(q)
}

/// Mixed-radix digits of `x`, least significant first.
pub fn digit_decompose(x: u32, factors: &[usize]) -> Result<Vec<u32>, CodecError> {
    let q = check_factors(factors)?;
    if x as usize >= q {
        return Err(CodecError::SymbolOutOfRange {
            position: 0,
            symbol: x,
            q,
        });
    }
    let mut rest = x as usize;
    Ok(factors
        .iter()
        .map(|&f| {
            let d = rest % f;
            rest /= f;
            d as u32
        })
        .collect())
}

/// Inverse of [`digit_decompose`].
pub fn digit_compose(digits: &[u32], factors: &[usize]) -> Result<u32, CodecError> {
    check_factors(factors)?;
    if digits.len() != factors.len() {
        return Err(CodecError::LengthMismatch {
            what: "digits",
            expected: factors.len(),
            got: digits.len(),
        });
    }
    let mut x = 0usize;
    for (position, (&d, &f)) in digits.iter().zip(factors).enumerate().rev() {
        if d as usize >= f {
            return Err(CodecError::SymbolOutOfRange {
                position,
                symbol: d,
                q: f,
            });
        }
        x = x * f + d as usize;
    }
    Ok(x as u32)
}

/// The channel seen by one digit plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SubChannel<T: Real> {
    /// Prime alphabet size of this plane.
    pub q: usize,
    /// Product of the lower planes' alphabet sizes.
    pub lower: usize,
    pub channel: Channel<T>,
    /// `atom_map[k * lower + v]`: the sub-channel atom for parent atom `k` and
    /// lower-digit value `v`, or `None` when that combination has probability 0.
    pub atom_map: Vec<Option<usize>>,
}

impl<T: Real> SubChannel<T> {
    pub fn side_atom(&self, parent_atom: usize, lower_value: usize) -> Option<usize> {
        self.atom_map
            .get(parent_atom * self.lower + lower_value)
            .copied()
            .flatten()
    }
}

/// Splits `w` into one sub-channel per prime factor of its alphabet.
pub fn decompose_channel<T: Real>(w: &Channel<T>) -> Result<Vec<SubChannel<T>>, CodecError> {
    let q = w.q();
    let factors = prime_factors(q);
    let mut lower = 1usize;
    let mut out = Vec::with_capacity(factors.len());
    for &f in &factors {
        let mut atoms = Vec::new();
        let mut atom_map = Vec::with_capacity(w.len() * lower);
        for a in w.atoms() {
            let p = a.posterior.probs();
            for v in 0..lower {
                let mut mass = vec![T::zero(); f];
                for (x, &px) in p.iter().enumerate() {
                    if x % lower == v {
                        let d = (x / lower) % f;
                        mass[d] = mass[d] + px;
                    }
                }
                let s: T = mass.iter().copied().sum();
                let weight = a.weight * s;
                if s > T::zero() && weight > T::zero() {
                    atom_map.push(Some(atoms.len()));
                    atoms.push(Atom {
                        weight,
                        posterior: Dist::from_unnormalized(mass, s),
                    });
                } else {
                    atom_map.push(None);
                }
            }
        }
        let sum: T = atoms.iter().map(|a| a.weight).sum();
        for a in &mut atoms {
            a.weight = a.weight / sum;
        }
        let channel = Channel::new(f, atoms)?;
        out.push(SubChannel {
            q: f,
            lower,
            channel,
            atom_map,
        });
        lower *= f;
    }
    Ok(out)
}

/// `Σ_j (lg q_j / lg q) H(W_j)`, which equals `H(W)` in normalized units.
pub fn chain_rule_sum<T: Real>(q: usize, subs: &[SubChannel<T>]) -> T {
    let lq = T::from_count(q).ln();
    subs.iter()
        .map(|s| T::from_count(s.q).ln() / lq * s.channel.entropy())
        .sum()
}

/// One code per digit plane of a composite alphabet.
#[derive(Debug, Clone)]
pub struct MultilevelCode<T: Real> {
    q: usize,
    factors: Vec<usize>,
    planes: Vec<(CodeSpec<T>, SubChannel<T>)>,
}

impl<T: Real> MultilevelCode<T> {
    /// `specs[j]` must be a code for the `j`-th sub-channel of `w`.
    pub fn new(w: &Channel<T>, specs: Vec<CodeSpec<T>>) -> Result<Self, CodecError> {
        let subs = decompose_channel(w)?;
        let factors: Vec<usize> = subs.iter().map(|s| s.q).collect();
        if specs.len() != subs.len() {
            return Err(CodecError::LengthMismatch {
                what: "plane specs",
                expected: subs.len(),
                got: specs.len(),
            });
        }
        let n = specs.first().map(|s| s.n()).unwrap_or(0);
        for (spec, sub) in specs.iter().zip(&subs) {
            if spec.q() != sub.q || spec.n() != n || spec.channel().len() != sub.channel.len() {
                return Err(CodecError::BadFactorization { q: w.q() });
            }
        }
        Ok(Self {
            q: w.q(),
            factors,
            planes: specs.into_iter().zip(subs).collect(),
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn specs(&self) -> impl Iterator<Item = &CodeSpec<T>> {
        self.planes.iter().map(|(s, _)| s)
    }

    pub fn block_len(&self) -> usize {
        self.planes.first().map(|(s, _)| s.block_len()).unwrap_or(1)
    }

    /// Total rate `Σ_j (lg q_j / lg q) |F_j| / N`, in symbols of `Z_q` per input.
    pub fn compression_rate(&self) -> f64 {
        let lq = (self.q as f64).ln();
        self.planes
            .iter()
            .map(|(s, _)| (s.q() as f64).ln() / lq * s.compression_rate())
            .sum()
    }
}

/// Compresses each digit plane with its own code.
pub fn multilevel_compress<T: Real>(
    x: &[u32],
    code: &MultilevelCode<T>,
) -> Result<Vec<CompressedBlock>, CodecError> {
    if let Some(position) = x.iter().position(|&s| s as usize >= code.q) {
        return Err(CodecError::SymbolOutOfRange {
            position,
            symbol: x[position],
            q: code.q,
        });
    }
    let mut lower = 1usize;
    let mut blocks = Vec::with_capacity(code.planes.len());
    for (spec, sub) in &code.planes {
        let plane: Vec<u32> = x
            .iter()
            .map(|&s| ((s as usize / lower) % sub.q) as u32)
            .collect();
        blocks.push(compress(&plane, spec)?);
        lower *= sub.q;
    }
    Ok(blocks)
}

/// Decodes plane by plane, feeding each decoded plane to the next as side
/// information. A combination of observation and decoded lower digits that
/// the model rules out stops decoding with [`CodecError::PlaneFailure`]
/// (planes numbered from 1).
pub fn multilevel_decompress<T: Real>(
    blocks: &[CompressedBlock],
    y: &[usize],
    code: &MultilevelCode<T>,
) -> Result<SymbolVec, CodecError> {
    if blocks.len() != code.planes.len() {
        return Err(CodecError::LengthMismatch {
            what: "plane blocks",
            expected: code.planes.len(),
            got: blocks.len(),
        });
    }
    let len = code.block_len();
    if y.len() != len {
        return Err(CodecError::LengthMismatch {
            what: "observations",
            expected: len,
            got: y.len(),
        });
    }
    let parent_atoms = code.planes[0].1.atom_map.len();
    if let Some(position) = y.iter().position(|&k| k >= parent_atoms) {
        return Err(CodecError::AtomOutOfRange {
            position,
            index: y[position],
            atoms: parent_atoms,
        });
    }
    let mut low = vec![0usize; len];
    for (j, ((spec, sub), block)) in code.planes.iter().zip(blocks).enumerate() {
        let side = y
            .iter()
            .zip(&low)
            .map(|(&k, &v)| sub.side_atom(k, v))
            .collect::<Option<Vec<usize>>>()
            .ok_or(CodecError::PlaneFailure { plane: j + 1 })?;
        let digits = decompress(block, &side, spec)?;
        for (l, &d) in low.iter_mut().zip(&digits) {
            *l += d as usize * sub.lower;
        }
    }
    Ok(low.into_iter().map(|v| v as u32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{Method, StatsDigest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn digits_examples() {
        assert_eq!(digit_decompose(5, &[2, 3]).unwrap(), vec![1, 2]);
        assert_eq!(digit_decompose(0, &[2, 2, 3]).unwrap(), vec![0, 0, 0]);
        for q in [4usize, 6, 12] {
            let f = prime_factors(q);
            for x in 0..q as u32 {
                let d = digit_decompose(x, &f).unwrap();
                assert_eq!(digit_compose(&d, &f).unwrap(), x);
            }
        }
        assert!(digit_decompose(6, &[2, 3]).is_err());
        assert!(digit_decompose(1, &[3, 2]).is_err());
        assert!(digit_decompose(1, &[4]).is_err());
        assert!(digit_compose(&[2, 0], &[2, 3]).is_err());
    }

    #[test]
    fn uniform_source_planes_are_uniform() {
        let w = Channel::source(Dist::<f64>::uniform(6).unwrap());
        let subs = decompose_channel(&w).unwrap();
        assert_eq!(subs.len(), 2);
        assert!((subs[0].channel.entropy() - 1.0).abs() < 1e-12);
        assert!((subs[1].channel.entropy() - 1.0).abs() < 1e-12);
        assert!((chain_rule_sum(6, &subs) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_rule_on_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for q in [4, 6, 12] {
            for _ in 0..20 {
                let w = Channel::<f64>::sample_random(q, 4, &mut rng).unwrap();
                let subs = decompose_channel(&w).unwrap();
                assert!((chain_rule_sum(q, &subs) - w.entropy()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = Channel::<f64>::qsc(6, 0.0).unwrap();
        let subs = decompose_channel(&w).unwrap();
        let digest = StatsDigest {
            method: Method::Bound,
            samples: 0,
            seed: 0,
        };
        let n = 4;
        let specs = subs
            .iter()
            .map(|s| CodeSpec::new(n, vec![], s.channel.clone(), digest).unwrap())
            .collect();
        let code = MultilevelCode::new(&w, specs).unwrap();
        for _ in 0..10 {
            let x: Vec<u32> = (0..16).map(|_| rng.random_range(0..6)).collect();
            let y: Vec<usize> = x.iter().map(|&s| s as usize).collect();
            let blocks = multilevel_compress(&x, &code).unwrap();
            assert_eq!(multilevel_decompress(&blocks, &y, &code).unwrap(), x);
        }
    }

    #[test]
    fn impossible_side_information_names_the_plane() {
        let w = Channel::<f64>::qsc(6, 0.0).unwrap();
        let subs = decompose_channel(&w).unwrap();
        let digest = StatsDigest {
            method: Method::Bound,
            samples: 0,
            seed: 0,
        };
        // Plane 1 sends everything; plane 2 sends nothing.
        let specs = vec![
            CodeSpec::new(1, vec![0, 1], subs[0].channel.clone(), digest).unwrap(),
            CodeSpec::new(1, vec![], subs[1].channel.clone(), digest).unwrap(),
        ];
        let code = MultilevelCode::new(&w, specs).unwrap();
        let mut blocks = multilevel_compress(&[1, 4], &code).unwrap();
        // Corrupt plane 1 so its digits contradict the noiseless observations.
        blocks[0].payload = vec![0, 0];
        assert_eq!(
            multilevel_decompress(&blocks, &[1, 4], &code),
            Err(CodecError::PlaneFailure { plane: 2 })
        );
    }
}
