//! `CodeSpec`: the frozen set plus the channel model shared by both ends.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::channel::{Channel, ChannelError};
use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("frozen index {index} outside [0, {len})")]
    FrozenOutOfRange { index: usize, len: usize },
    #[error("frozen indices must be strictly increasing")]
    FrozenNotSorted,
    #[error("channel alphabet {channel} differs from code alphabet {code}")]
    AlphabetMismatch { code: usize, channel: usize },
    #[error("depth {0} too large")]
    DepthTooLarge(u32),
    #[error("malformed code spec: {0}")]
    Parse(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// How the per-index statistics behind a code were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    MonteCarlo,
    Bound,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "mc",
            Method::Bound => "bound",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Method::Exact),
            "mc" => Ok(Method::MonteCarlo),
            "bound" => Ok(Method::Bound),
            other => Err(SpecError::Parse(format!("unknown method {other:?}"))),
        }
    }
}

/// Provenance of a construction: `method;samples;seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StatsDigest {
    pub method: Method,
    pub samples: u64,
    pub seed: u64,
}

impl fmt::Display for StatsDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{};{}", self.method, self.samples, self.seed)
    }
}

impl FromStr for StatsDigest {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(';').collect();
        let [method, samples, seed] = parts.as_slice() else {
            return Err(SpecError::Parse(format!("bad digest {s:?}")));
        };
        let num = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| SpecError::Parse(format!("bad digest field {v:?}")))
        };
        Ok(Self {
            method: method.parse()?,
            samples: num(samples)?,
            seed: num(seed)?,
        })
    }
}

/// A polar code over `Z_q` of length `2^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec<T: Real> {
    q: usize,
    n: u32,
    /// Strictly increasing; these are the indices the compressor transmits.
    frozen: Vec<usize>,
    channel: Channel<T>,
    digest: StatsDigest,
}

/// Largest supported depth.
pub const MAX_DEPTH: u32 = 30;

impl<T: Real> CodeSpec<T> {
    /// Sorts and de-duplicates `frozen`.
    pub fn new(
        n: u32,
        mut frozen: Vec<usize>,
        channel: Channel<T>,
        digest: StatsDigest,
    ) -> Result<Self, SpecError> {
        frozen.sort_unstable();
        frozen.dedup();
        Self::from_sorted(channel.q(), n, frozen, channel, digest)
    }

    fn from_sorted(
        q: usize,
        n: u32,
        frozen: Vec<usize>,
        channel: Channel<T>,
        digest: StatsDigest,
    ) -> Result<Self, SpecError> {
        if n > MAX_DEPTH {
            return Err(SpecError::DepthTooLarge(n));
        }
        if channel.q() != q {
            return Err(SpecError::AlphabetMismatch {
                code: q,
                channel: channel.q(),
            });
        }
        let len = 1usize << n;
        if frozen.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpecError::FrozenNotSorted);
        }
        if let Some(&index) = frozen.iter().find(|&&i| i >= len) {
            return Err(SpecError::FrozenOutOfRange { index, len });
        }
        Ok(Self {
            q,
            n,
            frozen,
            channel,
            digest,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn block_len(&self) -> usize {
        1 << self.n
    }

    pub fn frozen(&self) -> &[usize] {
        &self.frozen
    }

    /// Indices not in the frozen set, ascending.
    pub fn unfrozen(&self) -> Vec<usize> {
        let mask = self.frozen_mask();
        (0..self.block_len()).filter(|&i| !mask[i]).collect()
    }

    pub fn frozen_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.block_len()];
        for &i in &self.frozen {
            mask[i] = true;
        }
        mask
    }

    pub fn channel(&self) -> &Channel<T> {
        &self.channel
    }

    pub fn digest(&self) -> StatsDigest {
        self.digest
    }

    /// Compression rate `|frozen| / N`.
    pub fn compression_rate(&self) -> f64 {
        self.frozen.len() as f64 / self.block_len() as f64
    }
}

/// Text format:
///
/// ```text
/// POLARQ v1
/// q=<q>;n=<n>
/// frozen=<sorted comma-separated indices>
/// <channel text>
/// digest=<method;samples;seed>
/// ```
impl<T: Real> fmt::Display for CodeSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "POLARQ v1")?;
        writeln!(f, "q={};n={}", self.q, self.n)?;
        f.write_str("frozen=")?;
        for (k, i) in self.frozen.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        writeln!(f)?;
        writeln!(f, "{}", self.channel)?;
        writeln!(f, "digest={}", self.digest)
    }
}

impl<T: Real> FromStr for CodeSpec<T> {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s.lines();
        let mut next = |what: &str| {
            lines
                .next()
                .map(str::trim)
                .ok_or_else(|| SpecError::Parse(format!("missing {what}")))
        };
        let magic = next("header")?;
        if magic != "POLARQ v1" {
            return Err(SpecError::Parse(format!("bad magic line {magic:?}")));
        }
        let dims = next("dimensions")?;
        let (q_part, n_part) = dims
            .split_once(';')
            .ok_or_else(|| SpecError::Parse(format!("bad dimension line {dims:?}")))?;
        let q: usize = q_part
            .strip_prefix("q=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| SpecError::Parse(format!("bad q field {q_part:?}")))?;
        let n: u32 = n_part
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| SpecError::Parse(format!("bad n field {n_part:?}")))?;
        let frozen_line = next("frozen set")?;
        let list = frozen_line
            .strip_prefix("frozen=")
            .ok_or_else(|| SpecError::Parse(format!("bad frozen line {frozen_line:?}")))?;
        let frozen = if list.is_empty() {
            Vec::new()
        } else {
            list.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| SpecError::Parse(format!("bad frozen index {v:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        let rest: Vec<&str> = lines.collect();
        let digest_line = rest
            .iter()
            .rposition(|l| !l.trim().is_empty())
            .ok_or_else(|| SpecError::Parse("missing digest".into()))?;
        let digest = rest[digest_line]
            .trim()
            .strip_prefix("digest=")
            .ok_or_else(|| SpecError::Parse("missing digest line".into()))?
            .parse()?;
        let channel: Channel<T> = rest[..digest_line]
            .join("\n")
            .parse()
            .map_err(|e: ChannelError| SpecError::Parse(e.to_string()))?;
        Self::from_sorted(q, n, frozen, channel, digest)
    }
}
