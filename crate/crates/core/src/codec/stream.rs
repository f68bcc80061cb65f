//! Byte format for sequences of compressed blocks.
//!
//! ```text
//! POLARQC v1
//! q=<q>;n=<n>;count=<blocks>
//! <payload bytes, one symbol per byte, blocks back to back>
//! ```
//!
//! A multi-level stream is one such stream per digit plane, each preceded by a
//! `plane=<j>;q=<q_j>` line with `j` counted from 1.

use super::{CodecError, CompressedBlock};

/// Largest alphabet that fits one symbol per byte.
pub const MAX_STREAM_Q: usize = 251;

const MAGIC: &str = "POLARQC v1";

fn bad(msg: impl Into<String>) -> CodecError {
    CodecError::Stream(msg.into())
}

/// Appends one stream holding `blocks`, all of shape `(q, n)`.
pub fn write_stream(
    q: usize,
    n: u32,
    blocks: &[CompressedBlock],
    out: &mut Vec<u8>,
) -> Result<(), CodecError> {
    if q > MAX_STREAM_Q {
        return Err(bad(format!("q={q} exceeds {MAX_STREAM_Q}")));
    }
    let payload_len = blocks.first().map_or(0, |b| b.payload.len());
    for b in blocks {
        if b.q != q || b.n != n {
            return Err(CodecError::ShapeMismatch {
                block_q: b.q,
                block_n: b.n,
                spec_q: q,
                spec_n: n,
            });
        }
        if b.payload.len() != payload_len {
            return Err(bad("blocks have different payload lengths"));
        }
    }
    out.extend_from_slice(format!("{MAGIC}\nq={q};n={n};count={}\n", blocks.len()).as_bytes());
    for b in blocks {
        for (position, &s) in b.payload.iter().enumerate() {
            if s as usize >= q {
                return Err(CodecError::SymbolOutOfRange {
                    position,
                    symbol: s,
                    q,
                });
            }
            out.push(s as u8);
        }
    }
    Ok(())
}

/// Splits off one `\n`-terminated ASCII line.
fn take_line(bytes: &[u8]) -> Result<(&str, &[u8]), CodecError> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing line terminator"))?;
    let line = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not text"))?;
    Ok((line, &bytes[end + 1..]))
}

fn field<V: std::str::FromStr>(part: Option<&str>, name: &str) -> Result<V, CodecError> {
    part.and_then(|p| p.strip_prefix(name))
        .and_then(|p| p.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(format!("bad or missing field {name}")))
}

/// Header of one stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub q: usize,
    pub n: u32,
    pub count: usize,
}

fn read_header(bytes: &[u8]) -> Result<(StreamHeader, &[u8]), CodecError> {
    let (magic, rest) = take_line(bytes)?;
    if magic != MAGIC {
        return Err(bad(format!("bad magic line {magic:?}")));
    }
    let (dims, rest) = take_line(rest)?;
    let mut parts = dims.split(';');
    let header = StreamHeader {
        q: field(parts.next(), "q")?,
        n: field(parts.next(), "n")?,
        count: field(parts.next(), "count")?,
    };
    if parts.next().is_some() {
        return Err(bad(format!("bad dimension line {dims:?}")));
    }
    if header.q < 2 || header.q > MAX_STREAM_Q {
        return Err(bad(format!("unsupported q={}", header.q)));
    }
    Ok((header, rest))
}

fn read_blocks(
    header: StreamHeader,
    payload_len: usize,
    bytes: &[u8],
) -> Result<(Vec<CompressedBlock>, &[u8]), CodecError> {
    let total = header
        .count
        .checked_mul(payload_len)
        .ok_or_else(|| bad("block count overflows"))?;
    if bytes.len() < total {
        return Err(bad(format!(
            "expected {total} payload bytes, found {}",
            bytes.len()
        )));
    }
    let (body, rest) = bytes.split_at(total);
    if let Some(position) = body.iter().position(|&s| s as usize >= header.q) {
        return Err(CodecError::SymbolOutOfRange {
            position,
            symbol: body[position] as u32,
            q: header.q,
        });
    }
    let blocks = if payload_len == 0 {
        vec![Vec::new(); header.count]
    } else {
        body.chunks_exact(payload_len)
            .map(|c| c.iter().map(|&s| s as u32).collect())
            .collect()
    };
    let blocks = blocks
        .into_iter()
        .map(|payload| CompressedBlock {
            q: header.q,
            n: header.n,
            payload,
        })
        .collect();
    Ok((blocks, rest))
}

/// Reads a complete single stream; the payload length follows from the byte count.
pub fn read_stream(bytes: &[u8]) -> Result<(StreamHeader, Vec<CompressedBlock>), CodecError> {
    let (header, body) = read_header(bytes)?;
    let payload_len = match header.count {
        0 if body.is_empty() => 0,
        0 => return Err(bad("trailing bytes after an empty stream")),
        c if body.len() % c == 0 => body.len() / c,
        _ => return Err(bad("payload bytes do not divide into blocks")),
    };
    let (blocks, _) = read_blocks(header, payload_len, body)?;
    Ok((header, blocks))
}

/// Appends the planes of a multi-level stream; `planes[j]` holds the blocks of plane `j + 1`.
pub fn write_multilevel_stream(
    n: u32,
    planes: &[(usize, Vec<CompressedBlock>)],
    out: &mut Vec<u8>,
) -> Result<(), CodecError> {
    for (j, (q, blocks)) in planes.iter().enumerate() {
        out.extend_from_slice(format!("plane={};q={q}\n", j + 1).as_bytes());
        write_stream(*q, n, blocks, out)?;
    }
    Ok(())
}

/// Reads a multi-level stream whose plane `j + 1` carries `payload_lens[j]`
/// symbols per block.
pub fn read_multilevel_stream(
    bytes: &[u8],
    payload_lens: &[usize],
) -> Result<Vec<(StreamHeader, Vec<CompressedBlock>)>, CodecError> {
    let mut rest = bytes;
    let mut out = Vec::with_capacity(payload_lens.len());
    for (j, &len) in payload_lens.iter().enumerate() {
        let (line, after) = take_line(rest)?;
        let mut parts = line.split(';');
        let plane: usize = field(parts.next(), "plane")?;
        let q: usize = field(parts.next(), "q")?;
        if plane != j + 1 {
            return Err(bad(format!("expected plane {}, found {plane}", j + 1)));
        }
        let (header, body) = read_header(after)?;
        if header.q != q {
            return Err(bad(format!(
                "plane {plane} declares q={q}, stream has q={}",
                header.q
            )));
        }
        let (blocks, next) = read_blocks(header, len, body)?;
        out.push((header, blocks));
        rest = next;
    }
    if !rest.is_empty() {
        return Err(bad("trailing bytes after the last plane"));
    }
    Ok(out)
}
