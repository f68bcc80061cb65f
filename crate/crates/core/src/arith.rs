//! Integer helpers for alphabet sizes.

/// Trial-division primality test; alphabet sizes are small.
pub fn is_prime(q: usize) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factors of `q` in ascending order, with multiplicity (`12 -> [2, 2, 3]`).
pub fn prime_factors(mut q: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= q {
        while q.is_multiple_of(d) {
            out.push(d);
            q /= d;
        }
        d += 1;
    }
    if q > 1 {
        out.push(q);
    }
    out
}

/// Units of `Z_q`: residues coprime to `q`, ascending.
pub fn units(q: usize) -> Vec<usize> {
    (1..q).filter(|&a| gcd(a, q) == 1).collect()
}

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
