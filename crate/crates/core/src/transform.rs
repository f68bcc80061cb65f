//! The `q`-ary polar transform over `Z_q` and its inverse.
//!
//! The transform is `U = G X` with `G = B_n K^{⊗n}`, `K = [[1, 1], [0, 1]]`
//! and `B_n` the bit-reversal permutation. Row `i` of `G` is the characteristic
//! vector of the indices whose bits contain those of `rev(i)`, so
//! `U_i = Σ_{j ⊇ rev(i)} X_j mod q`.
//!
//! Bit order: the most significant bit of an index selects the branch of the
//! first `minus`/`plus` step in the channel recursion and the least significant
//! bit selects the last one (bit 1 = `plus`).

use thiserror::Error;

/// Symbols in `Z_q`, stored one per `u32`.
pub type SymbolVec = Vec<u32>;

/// Largest `n` accepted by [`transform_matrix`] unless a bound is passed.
pub const DEFAULT_MATRIX_MAX_N: u32 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("block length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("symbol {symbol} at position {index} is not in Z_{q}")]
    SymbolOutOfRange { index: usize, symbol: u32, q: usize },
    #[error("matrix for n={n} exceeds the configured bound n<={max}")]
    TooLarge { n: u32, max: u32 },
}

/// `n` with `len == 2^n`.
pub fn log2_len(len: usize) -> Result<u32, TransformError> {
    if len == 0 || !len.is_power_of_two() {
        return Err(TransformError::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros())
}

/// Reverses the low `n` bits of `i`.
#[inline]
pub fn bit_reverse(i: usize, n: u32) -> usize {
    if n == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - n)
    }
}

/// The permutation `i -> rev_n(i)` as a lookup table.
pub fn bit_reversal_perm(n: u32) -> Vec<usize> {
    (0..1usize << n).map(|i| bit_reverse(i, n)).collect()
}

/// Applies the bit-reversal permutation in place.
pub fn bit_reverse_in_place<V>(v: &mut [V]) {
    let n = v.len().trailing_zeros();
    for i in 0..v.len() {
        let j = bit_reverse(i, n);
        if i < j {
            v.swap(i, j);
        }
    }
}

fn check(x: &[u32], q: usize) -> Result<u32, TransformError> {
    if q < 2 {
        return Err(TransformError::AlphabetTooSmall(q));
    }
    let n = log2_len(x.len())?;
    if let Some((index, &symbol)) = x.iter().enumerate().find(|(_, &s)| s as usize >= q) {
        return Err(TransformError::SymbolOutOfRange { index, symbol, q });
    }
    Ok(n)
}

/// `U = G X` over `Z_q`.
pub fn transform(x: &[u32], q: usize) -> Result<SymbolVec, TransformError> {
    check(x, q)?;
    let mut u = x.to_vec();
    butterflies(&mut u, q as u32, |a, b, q| (a + b) % q);
    bit_reverse_in_place(&mut u);
    Ok(u)
}

/// `X = G^{-1} U` over `Z_q`.
pub fn inverse_transform(u: &[u32], q: usize) -> Result<SymbolVec, TransformError> {
    check(u, q)?;
    let mut x = u.to_vec();
    bit_reverse_in_place(&mut x);
    butterflies(&mut x, q as u32, |a, b, q| (a + q - b) % q);
    Ok(x)
}

/// Replaces each pair `(v[j], v[j + h])` by `(op(v[j], v[j + h]), v[j + h])` at every stage.
fn butterflies(v: &mut [u32], q: u32, op: impl Fn(u32, u32, u32) -> u32) {
    let len = v.len();
    let mut h = 1;
    while h < len {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, &b) in lo.iter_mut().zip(hi.iter()) {
                *a = op(*a, b, q);
            }
        }
        h *= 2;
    }
}

/// Dense `G` over `Z_q` (entries 0/1), built from the Kronecker definition.
///
/// `max_n` bounds the size; `None` uses [`DEFAULT_MATRIX_MAX_N`].
pub fn transform_matrix(n: u32, max_n: Option<u32>) -> Result<Vec<Vec<u32>>, TransformError> {
    let max = max_n.unwrap_or(DEFAULT_MATRIX_MAX_N);
    if n > max {
        return Err(TransformError::TooLarge { n, max });
    }
    let mut kron: Vec<Vec<u32>> = vec![vec![1]];
    for _ in 0..n {
        let m = kron.len();
        let mut next = vec![vec![0u32; 2 * m]; 2 * m];
        // K ⊗ M = [[M, M], [0, M]]
        for r in 0..m {
            for c in 0..m {
                let v = kron[r][c];
                next[r][c] = v;
                next[r][m + c] = v;
                next[m + r][m + c] = v;
            }
        }
        kron = next;
    }
    // Row i of B_n · M is row rev(i) of M.
    Ok((0..kron.len())
        .map(|i| kron[bit_reverse(i, n)].clone())
        .collect())
}

/// `M x` over `Z_q` for a dense matrix.
pub fn mul_matrix_vec(m: &[Vec<u32>], x: &[u32], q: usize) -> SymbolVec {
    m.iter()
        .map(|row| {
            let s: u64 = row.iter().zip(x).map(|(&g, &v)| g as u64 * v as u64).sum();
            (s % q as u64) as u32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(transform(&[1, 2], 3).unwrap(), vec![0, 2]);
        assert_eq!(transform(&[0, 0, 0, 0], 5).unwrap(), vec![0; 4]);
        assert_eq!(transform(&[1, 2, 3, 4], 5).unwrap(), vec![0, 2, 1, 4]);
        assert_eq!(inverse_transform(&[0, 2], 3).unwrap(), vec![1, 2]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            transform(&[0, 1, 2], 3),
            Err(TransformError::NotPowerOfTwo(3))
        );
        assert!(matches!(
            transform(&[0, 3], 3),
            Err(TransformError::SymbolOutOfRange { index: 1, .. })
        ));
        assert_eq!(transform(&[0], 1), Err(TransformError::AlphabetTooSmall(1)));
        assert!(transform_matrix(11, None).is_err());
        assert!(transform_matrix(11, Some(11)).is_ok());
    }

    #[test]
    fn matrix_examples() {
        assert_eq!(transform_matrix(0, None).unwrap(), vec![vec![1]]);
        assert_eq!(
            transform_matrix(1, None).unwrap(),
            vec![vec![1, 1], vec![0, 1]]
        );
        assert_eq!(
            transform_matrix(2, None).unwrap(),
            vec![
                vec![1, 1, 1, 1],
                vec![0, 0, 1, 1],
                vec![0, 1, 0, 1],
                vec![0, 0, 0, 1]
            ]
        );
    }

    #[test]
    fn matrix_rows_are_superset_indicators() {
        let n = 3;
        let g = transform_matrix(n, None).unwrap();
        for (i, row) in g.iter().enumerate() {
            let r = bit_reverse(i, n);
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, u32::from(j & r == r), "row {i} col {j}");
            }
        }
    }

    #[test]
    fn bit_reversal() {
        assert_eq!(bit_reversal_perm(3), vec![0, 4, 2, 6, 1, 5, 3, 7]);
        assert_eq!(bit_reversal_perm(0), vec![0]);
        let mut v = vec![0, 1, 2, 3, 4, 5, 6, 7];
        bit_reverse_in_place(&mut v);
        assert_eq!(v, bit_reversal_perm(3));
    }
}
