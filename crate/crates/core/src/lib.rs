//! q-ary polar coding over `Z_q`: channel polarization, code construction,
//! successive-cancellation decoding, and a numerical verification suite for
//! the entropy-gain inequalities behind polarization.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the CLI and the
//! verification suites use.

pub mod arith;
pub mod channel;
pub mod codec;
pub mod construction;
pub mod dist;
pub mod gain;
pub mod real;
pub mod transform;

pub use channel::{Atom, Channel, ChannelError, ChannelStats};
pub use codec::{
    channel_decode, channel_encode, compress, decompress, sc_decode, CodecError, CompressedBlock,
    LikelihoodVec,
};
pub use construction::{
    estimate_index_stats_mc, select_frozen, track_channels_exact, CodeSpec, ConstructionError,
    FrozenPolicy, IndexRecord, IndexStats,
};
pub use dist::{Dist, DistError};
pub use gain::{BoundCheckReport, BoundId, GainConstants, GainError, Operands};
pub use real::Real;
pub use transform::{
    bit_reversal_perm, inverse_transform, transform, transform_matrix, SymbolVec, TransformError,
};

/// Distribution over `Z_q` with `f64` entries.
pub type DistQ = Dist<f64>;
/// Channel `(X; Y)` with `f64` weights.
pub type JointChannel = Channel<f64>;
/// Code specification over an `f64` channel model.
pub type CodeSpecQ = CodeSpec<f64>;
/// Per-index statistics with `f64` values.
pub type IndexStatsQ = IndexStats<f64>;
/// Decoder likelihood vector with `f64` scores.
pub type LikelihoodVecQ = LikelihoodVec<f64>;
