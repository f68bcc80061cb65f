//! Source and channel coding built on the successive-cancellation decoder.

pub mod multilevel;
pub mod sc;
pub mod stream;

use thiserror::Error;

use crate::channel::ChannelError;
use crate::construction::CodeSpec;
use crate::dist::argmax_first;
use crate::real::Real;
use crate::transform::{inverse_transform, transform, SymbolVec, TransformError};
use sc::ScDecoder;

/// Unnormalized posterior scores over one symbol.
pub type LikelihoodVec<T> = Vec<T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("block has q={block_q}, n={block_n}; spec has q={spec_q}, n={spec_n}")]
    ShapeMismatch {
        block_q: usize,
        block_n: u32,
        spec_q: usize,
        spec_n: u32,
    },
    #[error("output atom {index} at position {position} is outside the model's {atoms} atoms")]
    AtomOutOfRange {
        position: usize,
        index: usize,
        atoms: usize,
    },
    #[error("symbol {symbol} at position {position} is not in Z_{q}")]
    SymbolOutOfRange {
        position: usize,
        symbol: u32,
        q: usize,
    },
    #[error("alphabet size {q} is not a product of the given prime factors")]
    BadFactorization { q: usize },
    #[error("decoding of plane {plane} produced side information the model rules out")]
    PlaneFailure { plane: usize },
    #[error("malformed stream: {0}")]
    Stream(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// The frozen-index symbols of `U = G x`, in increasing index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBlock {
    pub q: usize,
    pub n: u32,
    pub payload: SymbolVec,
}

fn check_symbols(v: &[u32], q: usize) -> Result<(), CodecError> {
    match v.iter().position(|&s| s as usize >= q) {
        Some(position) => Err(CodecError::SymbolOutOfRange {
            position,
            symbol: v[position],
            q,
        }),
        None => Ok(()),
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), CodecError> {
    if expected != got {
        return Err(CodecError::LengthMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Transmits `U_i` for every frozen `i`.
pub fn compress<T: Real>(x: &[u32], spec: &CodeSpec<T>) -> Result<CompressedBlock, CodecError> {
    check_len("source symbols", spec.block_len(), x.len())?;
    check_symbols(x, spec.q())?;
    let u = transform(x, spec.q())?;
    Ok(CompressedBlock {
        q: spec.q(),
        n: spec.n(),
        payload: spec.frozen().iter().map(|&i| u[i]).collect(),
    })
}

/// Reusable decoder for one code.
#[derive(Debug, Clone)]
pub struct Decoder<T: Real> {
    sc: ScDecoder<T>,
    frozen_mask: Vec<bool>,
    /// Leaf likelihood for each output atom of the model.
    leaves: Vec<Vec<T>>,
}

/// Which likelihood the leaves carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafModel {
    /// `P(x | y)`: the input is drawn from the channel's own input law.
    Posterior,
    /// `P(y | x)`: the input is a codeword, not drawn from the model.
    Likelihood,
}

impl<T: Real> Decoder<T> {
    pub fn new(spec: &CodeSpec<T>, model: LeafModel) -> Self {
        let ch = spec.channel();
        let marginal = ch.input_marginal();
        // With a uniform input law both models give proportional leaves; using
        // the posterior then keeps the two decoders bit-identical.
        let model = if marginal.is_uniform() {
            LeafModel::Posterior
        } else {
            model
        };
        let leaves = ch
            .atoms()
            .iter()
            .map(|a| match model {
                LeafModel::Posterior => a.posterior.probs().to_vec(),
                LeafModel::Likelihood => a
                    .posterior
                    .probs()
                    .iter()
                    .zip(marginal.probs())
                    .map(|(&p, &m)| if m > T::zero() { p / m } else { T::zero() })
                    .collect(),
            })
            .collect();
        Self {
            sc: ScDecoder::new(spec.q(), spec.n()),
            frozen_mask: spec.frozen_mask(),
            leaves,
        }
    }

    /// Decodes one block; `frozen_values` are the symbols at the frozen indices
    /// in increasing order. Returns `û`.
    pub fn decode_u(
        &mut self,
        frozen_values: &[u32],
        y: &[usize],
    ) -> Result<SymbolVec, CodecError> {
        let len = self.sc.len();
        let frozen_count = self.frozen_mask.iter().filter(|&&f| f).count();
        check_len("frozen symbols", frozen_count, frozen_values.len())?;
        check_len("observations", len, y.len())?;
        check_symbols(frozen_values, self.sc.q())?;
        if let Some(position) = y.iter().position(|&k| k >= self.leaves.len()) {
            return Err(CodecError::AtomOutOfRange {
                position,
                index: y[position],
                atoms: self.leaves.len(),
            });
        }
        let leaves = &self.leaves;
        self.sc.load_leaves(|t| &leaves[y[t]]);
        let mask = &self.frozen_mask;
        let mut next_frozen = frozen_values.iter();
        self.sc.run(|i, lik| {
            if mask[i] {
                *next_frozen.next().expect("frozen count checked")
            } else {
                argmax_first(lik) as u32
            }
        });
        Ok(self.sc.u().to_vec())
    }
}

/// Successive-cancellation decoding of a compressed block; returns `û`.
pub fn sc_decode_u<T: Real>(
    block: &CompressedBlock,
    y: &[usize],
    spec: &CodeSpec<T>,
) -> Result<SymbolVec, CodecError> {
    check_shape(block, spec)?;
    Decoder::new(spec, LeafModel::Posterior).decode_u(&block.payload, y)
}

/// Successive-cancellation decoding of a compressed block; returns `x̂`.
pub fn sc_decode<T: Real>(
    block: &CompressedBlock,
    y: &[usize],
    spec: &CodeSpec<T>,
) -> Result<SymbolVec, CodecError> {
    let u = sc_decode_u(block, y, spec)?;
    Ok(inverse_transform(&u, spec.q())?)
}

/// Same as [`sc_decode`].
pub fn decompress<T: Real>(
    block: &CompressedBlock,
    y: &[usize],
    spec: &CodeSpec<T>,
) -> Result<SymbolVec, CodecError> {
    sc_decode(block, y, spec)
}

fn check_shape<T: Real>(block: &CompressedBlock, spec: &CodeSpec<T>) -> Result<(), CodecError> {
    if block.q != spec.q() || block.n != spec.n() {
        return Err(CodecError::ShapeMismatch {
            block_q: block.q,
            block_n: block.n,
            spec_q: spec.q(),
            spec_n: spec.n(),
        });
    }
    check_len("payload symbols", spec.frozen().len(), block.payload.len())
}

/// Places `message` at the unfrozen indices and `frozen_fill` (zeros when
/// `None`) at the frozen ones, and returns the codeword `x = G^{-1} u`.
pub fn channel_encode<T: Real>(
    message: &[u32],
    frozen_fill: Option<&[u32]>,
    spec: &CodeSpec<T>,
) -> Result<SymbolVec, CodecError> {
    let q = spec.q();
    let unfrozen = spec.unfrozen();
    check_len("message symbols", unfrozen.len(), message.len())?;
    check_symbols(message, q)?;
    let zeros = vec![0u32; spec.frozen().len()];
    let fill = frozen_fill.unwrap_or(&zeros);
    check_len("frozen symbols", spec.frozen().len(), fill.len())?;
    check_symbols(fill, q)?;
    let mut u = vec![0u32; spec.block_len()];
    for (&i, &s) in unfrozen.iter().zip(message) {
        u[i] = s;
    }
    for (&i, &s) in spec.frozen().iter().zip(fill) {
        u[i] = s;
    }
    Ok(inverse_transform(&u, q)?)
}

/// Decodes the message symbols from received output atoms.
pub fn channel_decode<T: Real>(
    received: &[usize],
    frozen_fill: Option<&[u32]>,
    spec: &CodeSpec<T>,
) -> Result<SymbolVec, CodecError> {
    let zeros = vec![0u32; spec.frozen().len()];
    let fill = frozen_fill.unwrap_or(&zeros);
    let u = Decoder::new(spec, LeafModel::Likelihood).decode_u(fill, received)?;
    Ok(spec.unfrozen().into_iter().map(|i| u[i]).collect())
}
