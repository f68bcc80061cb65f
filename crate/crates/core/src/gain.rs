//! Entropy gain of summation over `Z_q`, and numerical checks of the
//! inequalities that drive polarization.
//!
//! Every check is phrased as a claim `lhs >= rhs` and reported with its margin.
//! Inputs outside a bound's hypotheses are rejected with an error rather than
//! evaluated, since the bounds are conditional statements.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::arith::is_prime;
use crate::channel::{Atom, Channel, ChannelError};
use crate::dist::{cyclic_convolve_into, entropy_of, fmt_real, Dist, DistError};
use crate::real::{CompensatedSum, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GainError {
    #[error("{bound}: hypothesis violated: {reason}")]
    Hypothesis { bound: BoundId, reason: String },
    #[error("alphabet size {0} is not prime")]
    NotPrime(usize),
    #[error("unknown bound id {0:?}")]
    UnknownBound(String),
    #[error("operands of kind {got} do not fit bound {bound}")]
    WrongOperands { bound: BoundId, got: &'static str },
    #[error("no sampled channel had symmetric entropy above the degeneracy filter")]
    NoAdmissibleChannel,
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Catalog of checkable inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundId {
    /// `H(A+B) >= max(H(A), H(B))`.
    MaxEntropy,
    /// `H(A+B) >= (2H(A)+H(B))/3 + c min(T(A), T(B))` with `H(A) >= H(B)`; prime `q`.
    WeightedAverageGain,
    /// `-H` is strongly convex in L1: `H(a x + (1-a) y) >= a H(x) + (1-a) H(y) + a(1-a)|x-y|^2 / (2 lg q)`.
    StrongConvexity,
    /// Mixing shifts of `p` gains at least `l_i l_j / (l_i + l_j) |p^{+i} - p^{+j}|^2 / (2 lg q)`.
    ShiftMixtureGain,
    /// `|p^{+i} - p^{+j}|_1 >= (1 - H(p)) lg q / (2 q^2 (q-1) lg e)` for prime `q`, `i != j`.
    CyclicShiftDistance,
    /// `-(1/6) e lg e >= -(1-e) lg(1-e)` for `0 < e <= 1/500`.
    TailBound,
    /// `(5/4) e lg(1/e) >= e lg((q-1)/e)` for `0 < e <= (q-1)^-4`.
    LogRatioDominance,
    /// `x lg(1/x)` increases on `(0, 1/e)` and decreases on `(1/e, 1)`.
    XLogMonotone,
    /// Mass `1-e` on one symbol implies `H >= e lg(1/e) / lg q`.
    LowEntropyLower,
    /// Mass `1-e` on one symbol, `e` small, implies `H <= 17 e lg(1/e) / (12 lg q)`.
    LowEntropyUpper,
    /// Two low-entropy variables: `H(X+Y) - (2H(X)+H(Y))/3 >= T(Y)/51`.
    LowEntropySum,
    /// Quadratic lower bound on `f(1/q + t)`, `f(x) = -x lg x / lg q`.
    TaylorLower,
    /// Quadratic upper bound on `f(1/q + t)`.
    TaylorUpper,
    /// `H(p) >= 1 - q^2 d^2 / ln q` with `d` the max deviation from uniform.
    NearUniformLower,
    /// `H(p) <= 1 - q^2 (q ln q - (q-1)) d^2 / ((q-1)^3 ln q)`.
    NearUniformUpper,
    /// Two near-uniform variables: `H(X+Y) - H(X) >= ln q / (16 q^2) T(X)`.
    NearUniformSum,
}

impl BoundId {
    pub const ALL: [BoundId; 16] = [
        BoundId::MaxEntropy,
        BoundId::WeightedAverageGain,
        BoundId::StrongConvexity,
        BoundId::ShiftMixtureGain,
        BoundId::CyclicShiftDistance,
        BoundId::TailBound,
        BoundId::LogRatioDominance,
        BoundId::XLogMonotone,
        BoundId::LowEntropyLower,
        BoundId::LowEntropyUpper,
        BoundId::LowEntropySum,
        BoundId::TaylorLower,
        BoundId::TaylorUpper,
        BoundId::NearUniformLower,
        BoundId::NearUniformUpper,
        BoundId::NearUniformSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::MaxEntropy => "max_entropy",
            BoundId::WeightedAverageGain => "weighted_average_gain",
            BoundId::StrongConvexity => "strong_convexity",
            BoundId::ShiftMixtureGain => "shift_mixture_gain",
            BoundId::CyclicShiftDistance => "cyclic_shift_distance",
            BoundId::TailBound => "tail_bound",
            BoundId::LogRatioDominance => "log_ratio_dominance",
            BoundId::XLogMonotone => "xlog_monotone",
            BoundId::LowEntropyLower => "low_entropy_lower",
            BoundId::LowEntropyUpper => "low_entropy_upper",
            BoundId::LowEntropySum => "low_entropy_sum",
            BoundId::TaylorLower => "taylor_lower",
            BoundId::TaylorUpper => "taylor_upper",
            BoundId::NearUniformLower => "near_uniform_lower",
            BoundId::NearUniformUpper => "near_uniform_upper",
            BoundId::NearUniformSum => "near_uniform_sum",
        }
    }

    /// Bounds that only hold for prime alphabets.
    pub fn requires_prime(self) -> bool {
        matches!(
            self,
            BoundId::WeightedAverageGain | BoundId::CyclicShiftDistance
        )
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundId {
    type Err = GainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundId::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| GainError::UnknownBound(s.to_string()))
    }
}

/// Inputs to a bound check. Scalar bounds carry the alphabet size explicitly.
#[derive(Debug, Clone, PartialEq)]
pub enum Operands<T: Real> {
    /// Two distributions (sum bounds).
    Pair { a: Dist<T>, b: Dist<T> },
    /// Convex combination `alpha x + (1 - alpha) y`.
    Mixture { x: Dist<T>, y: Dist<T>, alpha: T },
    /// Mixture of the shifts of `p` with weights `lambda`, comparing shifts `i` and `j`.
    ShiftMixture {
        p: Dist<T>,
        lambda: Dist<T>,
        i: usize,
        j: usize,
    },
    /// Two shifts of one distribution.
    Shifts { p: Dist<T>, i: usize, j: usize },
    /// A small parameter `eps` for alphabet size `q`.
    Scalar { q: usize, eps: T },
    /// Two points `x < y` of the unit interval.
    Points { x: T, y: T },
    /// A distribution and the symbol whose mass is `1 - eps`.
    SymbolMass { p: Dist<T>, symbol: usize },
    /// An offset `t` from `1/q`.
    Offset { q: usize, t: T },
    /// One distribution.
    Single { p: Dist<T> },
}

impl<T: Real> Operands<T> {
    fn kind(&self) -> &'static str {
        match self {
            Operands::Pair { .. } => "pair",
            Operands::Mixture { .. } => "mixture",
            Operands::ShiftMixture { .. } => "shift_mixture",
            Operands::Shifts { .. } => "shifts",
            Operands::Scalar { .. } => "scalar",
            Operands::Points { .. } => "points",
            Operands::SymbolMass { .. } => "symbol_mass",
            Operands::Offset { .. } => "offset",
            Operands::Single { .. } => "single",
        }
    }
}

fn fmt_probs<T: Real>(f: &mut fmt::Formatter<'_>, name: &str, d: &Dist<T>) -> fmt::Result {
    write!(f, "{name}=")?;
    for (i, &p) in d.probs().iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        f.write_str(&fmt_real(p))?;
    }
    Ok(())
}

impl<T: Real> fmt::Display for Operands<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operands::Pair { a, b } => {
                fmt_probs(f, "a", a)?;
                f.write_str(";")?;
                fmt_probs(f, "b", b)
            }
            Operands::Mixture { x, y, alpha } => {
                fmt_probs(f, "x", x)?;
                f.write_str(";")?;
                fmt_probs(f, "y", y)?;
                write!(f, ";alpha={}", fmt_real(*alpha))
            }
            Operands::ShiftMixture { p, lambda, i, j } => {
                fmt_probs(f, "p", p)?;
                f.write_str(";")?;
                fmt_probs(f, "lambda", lambda)?;
                write!(f, ";i={i};j={j}")
            }
            Operands::Shifts { p, i, j } => {
                fmt_probs(f, "p", p)?;
                write!(f, ";i={i};j={j}")
            }
            Operands::Scalar { q, eps } => write!(f, "q={q};eps={}", fmt_real(*eps)),
            Operands::Points { x, y } => write!(f, "x={};y={}", fmt_real(*x), fmt_real(*y)),
            Operands::SymbolMass { p, symbol } => {
                fmt_probs(f, "p", p)?;
                write!(f, ";symbol={symbol}")
            }
            Operands::Offset { q, t } => write!(f, "q={q};t={}", fmt_real(*t)),
            Operands::Single { p } => fmt_probs(f, "p", p),
        }
    }
}

/// Outcome of one bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckReport<T: Real> {
    pub bound_id: BoundId,
    /// Serialized operands.
    pub inputs: String,
    pub lhs: T,
    pub rhs: T,
    /// `lhs - rhs`.
    pub margin: T,
    /// `margin >= -slack`.
    pub passed: bool,
    /// For [`BoundId::WeightedAverageGain`]: the first of the five entropy
    /// regimes (by the `gamma0` thresholds) the oriented pair falls into.
    pub case: Option<u8>,
}

impl<T: Real> BoundCheckReport<T> {
    fn new(bound_id: BoundId, operands: &Operands<T>, lhs: T, rhs: T) -> Self {
        let margin = lhs - rhs;
        Self {
            bound_id,
            inputs: operands.to_string(),
            lhs,
            rhs,
            margin,
            passed: margin >= -T::inequality_slack(),
            case: None,
        }
    }
}

/// `gamma0` and `c` from the weighted-average gain bound, plus an empirical
/// lower estimate of the conditional gain constant once one is measured.
#[derive(Debug, Clone, PartialEq)]
pub struct GainConstants<T: Real> {
    pub q: usize,
    /// `1 / (500 (q-1)^4 lg q)`.
    pub gamma0: T,
    /// `gamma0^3 lg q / (48 q^5 (q-1)^3 lg(6/gamma0) lg^2 e)`.
    pub c: T,
    pub alpha_estimate: Option<T>,
}

impl<T: Real> GainConstants<T> {
    pub fn new(q: usize) -> Result<Self, GainError> {
        if q < 2 {
            return Err(DistError::AlphabetTooSmall(q).into());
        }
        let qt = T::from_count(q);
        let qm1 = qt - T::one();
        let lgq = qt.log2();
        let gamma0 = (T::lit(500.0) * qm1.powi(4) * lgq).recip();
        let lge = T::LOG2_E();
        let c = gamma0.powi(3) * lgq
            / (T::lit(48.0) * qt.powi(5) * qm1.powi(3) * (T::lit(6.0) / gamma0).log2() * lge * lge);
        Ok(Self {
            q,
            gamma0,
            c,
            alpha_estimate: None,
        })
    }
}

fn hyp(bound: BoundId, ok: bool, reason: impl FnOnce() -> String) -> Result<(), GainError> {
    if ok {
        Ok(())
    } else {
        Err(GainError::Hypothesis {
            bound,
            reason: reason(),
        })
    }
}

fn same_q<T: Real>(a: &Dist<T>, b: &Dist<T>) -> Result<(), GainError> {
    if a.q() != b.q() {
        return Err(DistError::AlphabetMismatch {
            left: a.q(),
            right: b.q(),
        }
        .into());
    }
    Ok(())
}

/// `H(A+B) - (H(A) + H(B)) / 2`.
pub fn gain_unconditional<T: Real>(a: &Dist<T>, b: &Dist<T>) -> Result<T, GainError> {
    let s = a.convolve(b)?;
    Ok(s.entropy() - (a.entropy() + b.entropy()) / T::lit(2.0))
}

/// `H(A+B) >= max(H(A), H(B))`.
pub fn check_max_ineq<T: Real>(a: &Dist<T>, b: &Dist<T>) -> Result<BoundCheckReport<T>, GainError> {
    verify_bound(
        BoundId::MaxEntropy,
        &Operands::Pair {
            a: a.clone(),
            b: b.clone(),
        },
    )
}

/// Weighted-average gain bound with the constants in `consts`; orients the
/// pair so that `H(A) >= H(B)` and labels the entropy regime.
pub fn check_wtavg<T: Real>(
    a: &Dist<T>,
    b: &Dist<T>,
    consts: &GainConstants<T>,
) -> Result<BoundCheckReport<T>, GainError> {
    same_q(a, b)?;
    if a.q() != consts.q {
        return Err(DistError::AlphabetMismatch {
            left: a.q(),
            right: consts.q,
        }
        .into());
    }
    if !is_prime(consts.q) {
        return Err(GainError::NotPrime(consts.q));
    }
    let operands = Operands::Pair {
        a: a.clone(),
        b: b.clone(),
    };
    let (ha, hb) = oriented(a.entropy(), b.entropy());
    let lhs = a.convolve(b)?.entropy();
    let t = |h: T| h * (T::one() - h);
    let rhs = (T::lit(2.0) * ha + hb) / T::lit(3.0) + consts.c * t(ha).min(t(hb));
    let mut report = BoundCheckReport::new(BoundId::WeightedAverageGain, &operands, lhs, rhs);
    report.case = Some(wtavg_case(ha, hb, consts.gamma0));
    Ok(report)
}

fn oriented<T: Real>(x: T, y: T) -> (T, T) {
    if x >= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// First matching regime for `H(A) >= H(B)`:
/// 1 both `<= g`; 2 both in `[g/2, 1-g/2]`; 3 both `>= 1-g`;
/// 4 `H(A) > g`, `H(B) < g/2`; 5 `H(A) > 1-g/2`, `H(B) < 1-g`.
fn wtavg_case<T: Real>(ha: T, hb: T, g: T) -> u8 {
    let half = g / T::lit(2.0);
    let one = T::one();
    if ha <= g && hb <= g {
        1
    } else if ha >= half && hb >= half && ha <= one - half && hb <= one - half {
        2
    } else if ha >= one - g && hb >= one - g {
        3
    } else if ha > g && hb < half {
        4
    } else {
        // The five regimes cover every oriented pair; this is the remaining one.
        5
    }
}

/// `E_{y,z}[H(X_y + X_z) - (H(X_y) + H(X_z)) / 2]` over independent outputs.
///
/// Equals `H(W^-) - H(W)`; computed here from output pairs directly.
pub fn conditional_gain<T: Real>(w: &Channel<T>) -> T {
    let q = w.q();
    let atoms = w.atoms();
    let ent: Vec<T> = atoms.iter().map(|a| a.posterior.entropy()).collect();
    let mut buf = vec![T::zero(); q];
    let mut acc = CompensatedSum::new();
    for (k, a) in atoms.iter().enumerate() {
        for (l, b) in atoms.iter().enumerate().skip(k) {
            cyclic_convolve_into(a.posterior.probs(), b.posterior.probs(), &mut buf);
            let delta = entropy_of(&buf) - (ent[k] + ent[l]) / T::lit(2.0);
            let mult = if k == l { T::one() } else { T::lit(2.0) };
            acc.add((mult * a.weight * b.weight * delta).as_f64());
        }
    }
    T::lit(acc.value())
}

/// Check one catalog bound on the given operands.
pub fn verify_bound<T: Real>(
    bound: BoundId,
    operands: &Operands<T>,
) -> Result<BoundCheckReport<T>, GainError> {
    let wrong = || GainError::WrongOperands {
        bound,
        got: operands.kind(),
    };
    let two = T::lit(2.0);
    let report = |lhs: T, rhs: T| Ok(BoundCheckReport::new(bound, operands, lhs, rhs));
    match (bound, operands) {
        (BoundId::MaxEntropy, Operands::Pair { a, b }) => {
            same_q(a, b)?;
            report(a.convolve(b)?.entropy(), a.entropy().max(b.entropy()))
        }
        (BoundId::WeightedAverageGain, Operands::Pair { a, b }) => {
            check_wtavg(a, b, &GainConstants::new(a.q())?)
        }
        (BoundId::StrongConvexity, Operands::Mixture { x, y, alpha }) => {
            same_q(x, y)?;
            let al = *alpha;
            hyp(bound, al >= T::zero() && al <= T::one(), || {
                format!("alpha={al} outside [0,1]")
            })?;
            let mix = Dist::mix_slice(&[al, T::one() - al], &[x.clone(), y.clone()])?;
            let l1 = x.l1_distance(y)?;
            let lgq = T::from_count(x.q()).log2();
            let rhs = al * x.entropy()
                + (T::one() - al) * y.entropy()
                + al * (T::one() - al) * l1 * l1 / (two * lgq);
            report(mix.entropy(), rhs)
        }
        (BoundId::ShiftMixtureGain, Operands::ShiftMixture { p, lambda, i, j }) => {
            same_q(p, lambda)?;
            let q = p.q();
            let (i, j) = (*i % q, *j % q);
            hyp(bound, i != j, || {
                format!("shifts {i} and {j} coincide mod {q}")
            })?;
            let (li, lj) = (lambda.get(i), lambda.get(j));
            hyp(bound, li + lj > T::zero(), || {
                format!("lambda_{i} + lambda_{j} = 0")
            })?;
            let lhs = lambda.convolve(p)?.entropy();
            let d = p
                .cyclic_shift(i as i64)
                .l1_distance(&p.cyclic_shift(j as i64))?;
            let lgq = T::from_count(q).log2();
            let rhs = p.entropy() + li * lj / (li + lj) * d * d / (two * lgq);
            report(lhs, rhs)
        }
        (BoundId::CyclicShiftDistance, Operands::Shifts { p, i, j }) => {
            let q = p.q();
            if !is_prime(q) {
                return Err(GainError::NotPrime(q));
            }
            let (i, j) = (*i % q, *j % q);
            hyp(bound, i != j, || {
                format!("shifts {i} and {j} coincide mod {q}")
            })?;
            let lhs = p
                .cyclic_shift(i as i64)
                .l1_distance(&p.cyclic_shift(j as i64))?;
            let qt = T::from_count(q);
            let rhs = (T::one() - p.entropy()) * qt.log2()
                / (two * qt * qt * (qt - T::one()) * T::LOG2_E());
            report(lhs, rhs)
        }
        (BoundId::TailBound, Operands::Scalar { eps, .. }) => {
            let e = *eps;
            hyp(bound, e > T::zero() && e <= T::lit(1.0 / 500.0), || {
                format!("eps={e} outside (0, 1/500]")
            })?;
            let lhs = -(e * e.log2()) / T::lit(6.0);
            let rhs = -((T::one() - e) * (T::one() - e).log2());
            report(lhs, rhs)
        }
        (BoundId::LogRatioDominance, Operands::Scalar { q, eps }) => {
            let e = *eps;
            let qm1 = T::from_count(*q) - T::one();
            let cap = qm1.powi(4).recip();
            hyp(bound, *q >= 2 && e > T::zero() && e <= cap, || {
                format!("eps={e} outside (0, (q-1)^-4] for q={q}")
            })?;
            let lhs = T::lit(1.25) * e * e.recip().log2();
            let rhs = e * (qm1 / e).log2();
            report(lhs, rhs)
        }
        (BoundId::XLogMonotone, Operands::Points { x, y }) => {
            let (x, y) = (*x, *y);
            let knee = T::E().recip();
            let increasing = x > T::zero() && y <= knee;
            let decreasing = x >= knee && y < T::one();
            hyp(bound, x < y && (increasing || decreasing), || {
                format!("points {x} < {y} must lie on one side of 1/e within (0,1)")
            })?;
            let f = |v: T| v * v.recip().log2();
            if increasing {
                report(f(y), f(x))
            } else {
                report(f(x), f(y))
            }
        }
        (BoundId::LowEntropyLower, Operands::SymbolMass { p, symbol }) => {
            let e = symbol_deficit(bound, p, *symbol)?;
            hyp(bound, e < T::one(), || "symbol has zero mass".to_string())?;
            let lgq = T::from_count(p.q()).log2();
            let rhs = if e > T::zero() {
                e * e.recip().log2() / lgq
            } else {
                T::zero()
            };
            report(p.entropy(), rhs)
        }
        (BoundId::LowEntropyUpper, Operands::SymbolMass { p, symbol }) => {
            let e = symbol_deficit(bound, p, *symbol)?;
            let cap = low_entropy_cap::<T>(p.q());
            hyp(bound, e > T::zero() && e <= cap, || {
                format!("eps={e} outside (0, {cap}]")
            })?;
            let lgq = T::from_count(p.q()).log2();
            let lhs = T::lit(17.0) * e * e.recip().log2() / (T::lit(12.0) * lgq);
            report(lhs, p.entropy())
        }
        (BoundId::LowEntropySum, Operands::Pair { a, b }) => {
            same_q(a, b)?;
            let cap = low_entropy_cap::<T>(a.q());
            for (name, d) in [("a", a), ("b", b)] {
                let e = d.max_deficit();
                hyp(bound, e > T::zero() && e <= cap, || {
                    format!("{name}: eps={e} outside (0, {cap}]")
                })?;
            }
            let (x, y) = if a.entropy() >= b.entropy() {
                (a, b)
            } else {
                (b, a)
            };
            let (hx, hy) = (x.entropy(), y.entropy());
            let lhs = x.convolve(y)?.entropy() - (two * hx + hy) / T::lit(3.0);
            report(lhs, hy * (T::one() - hy) / T::lit(51.0))
        }
        (BoundId::TaylorLower | BoundId::TaylorUpper, Operands::Offset { q, t }) => {
            let t = *t;
            let qt = T::from_count(*q);
            hyp(
                bound,
                *q >= 2 && t >= -qt.recip() && t <= (qt - T::one()) / qt,
                || format!("t={t} outside [-1/q, (q-1)/q]"),
            )?;
            let lnq = qt.ln();
            let x = qt.recip() + t;
            let f = if x > T::zero() {
                -(x * x.ln()) / lnq
            } else {
                T::zero()
            };
            let linear = qt.recip() + (T::one() - lnq.recip()) * t;
            if bound == BoundId::TaylorLower {
                report(f, linear - qt / lnq * t * t)
            } else {
                let k = qt * (qt * lnq - (qt - T::one())) / ((qt - T::one()).powi(2) * lnq);
                report(linear - k * t * t, f)
            }
        }
        (BoundId::NearUniformLower, Operands::Single { p }) => {
            let qt = T::from_count(p.q());
            let d = p.max_deviation_from_uniform();
            report(p.entropy(), T::one() - qt * qt * d * d / qt.ln())
        }
        (BoundId::NearUniformUpper, Operands::Single { p }) => {
            let qt = T::from_count(p.q());
            let lnq = qt.ln();
            let d = p.max_deviation_from_uniform();
            let k = qt * qt * (qt * lnq - (qt - T::one())) / ((qt - T::one()).powi(3) * lnq);
            report(T::one() - k * d * d, p.entropy())
        }
        (BoundId::NearUniformSum, Operands::Pair { a, b }) => {
            same_q(a, b)?;
            let qt = T::from_count(a.q());
            let cap = (two * qt * qt).recip();
            for (name, d) in [("a", a), ("b", b)] {
                let dev = d.max_deviation_from_uniform();
                hyp(bound, dev > T::zero() && dev <= cap, || {
                    format!("{name}: deviation {dev} outside (0, {cap}]")
                })?;
            }
            let (x, y) = if a.entropy() >= b.entropy() {
                (a, b)
            } else {
                (b, a)
            };
            let hx = x.entropy();
            let lhs = x.convolve(y)?.entropy() - hx;
            let rhs = qt.ln() / (T::lit(16.0) * qt * qt) * hx * (T::one() - hx);
            report(lhs, rhs)
        }
        _ => Err(wrong()),
    }
}

fn symbol_deficit<T: Real>(bound: BoundId, p: &Dist<T>, symbol: usize) -> Result<T, GainError> {
    hyp(bound, symbol < p.q(), || {
        format!("symbol {symbol} not in Z_{}", p.q())
    })?;
    Ok((T::one() - p.get(symbol)).max(T::zero()))
}

/// `min(1/500, (q-1)^-4)`.
fn low_entropy_cap<T: Real>(q: usize) -> T {
    let qm1 = T::from_count(q) - T::one();
    T::lit(1.0 / 500.0).min(qm1.powi(4).recip())
}

/// Random distribution drawn from a mixture of regimes: Dirichlet with a
/// log-uniform concentration, a perturbed point mass, or a perturbed uniform.
pub fn sample_test_distribution<T: Real, R: Rng + ?Sized>(
    q: usize,
    rng: &mut R,
) -> Result<Dist<T>, GainError> {
    let pick: f64 = rng.random();
    if pick < 0.6 {
        let conc = log_uniform(rng, 0.02, 50.0);
        Ok(Dist::sample(q, conc, rng)?)
    } else if pick < 0.8 {
        let eps = log_uniform(rng, 1e-10, 0.5);
        Ok(low_entropy_dist(q, eps, rng.random_range(0..q), rng)?)
    } else {
        let qt = q as f64;
        let dev = log_uniform(rng, 1e-8, 1.0 / qt);
        Ok(near_uniform_dist(q, dev, rng)?)
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

/// Mass `1 - eps` on `symbol`, the rest spread by a Dirichlet draw.
fn low_entropy_dist<T: Real, R: Rng + ?Sized>(
    q: usize,
    eps: f64,
    symbol: usize,
    rng: &mut R,
) -> Result<Dist<T>, DistError> {
    let rest = Dist::<f64>::sample(q - 1, log_uniform(rng, 0.1, 10.0), rng)
        .map(Dist::into_probs)
        .unwrap_or_else(|_| vec![1.0]);
    let mut probs = Vec::with_capacity(q);
    let mut it = rest.into_iter();
    for x in 0..q {
        if x == symbol {
            probs.push(T::lit(1.0 - eps));
        } else {
            probs.push(T::lit(eps * it.next().unwrap_or(0.0)));
        }
    }
    Dist::new(probs)
}

/// Uniform plus a zero-sum perturbation whose largest entry has magnitude `dev`.
fn near_uniform_dist<T: Real, R: Rng + ?Sized>(
    q: usize,
    dev: f64,
    rng: &mut R,
) -> Result<Dist<T>, DistError> {
    let qt = q as f64;
    let dev = dev.min(1.0 / qt);
    loop {
        let raw: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = raw.iter().sum::<f64>() / qt;
        let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        let m = centered.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m <= 1e-12 {
            continue;
        }
        let probs = centered
            .iter()
            .map(|v| T::lit((1.0 / qt + v * dev / m).max(0.0)))
            .collect();
        return Dist::new(probs);
    }
}

/// Hypothesis-respecting random operands for `bound` over `Z_q`.
pub fn sample_operands<T: Real, R: Rng + ?Sized>(
    bound: BoundId,
    q: usize,
    rng: &mut R,
) -> Result<Operands<T>, GainError> {
    if q < 2 {
        return Err(DistError::AlphabetTooSmall(q).into());
    }
    if bound.requires_prime() && !is_prime(q) {
        return Err(GainError::NotPrime(q));
    }
    let qt = q as f64;
    let two_shifts = |rng: &mut R| {
        let i = rng.random_range(0..q);
        let j = (i + rng.random_range(1..q)) % q;
        (i, j)
    };
    Ok(match bound {
        BoundId::MaxEntropy | BoundId::WeightedAverageGain => Operands::Pair {
            a: sample_test_distribution(q, rng)?,
            b: sample_test_distribution(q, rng)?,
        },
        BoundId::StrongConvexity => Operands::Mixture {
            x: sample_test_distribution(q, rng)?,
            y: sample_test_distribution(q, rng)?,
            alpha: T::lit(rng.random_range(0.0..=1.0)),
        },
        BoundId::ShiftMixtureGain => {
            let (i, j) = two_shifts(rng);
            let lambda = loop {
                let l: Dist<T> = sample_test_distribution(q, rng)?;
                if l.get(i) + l.get(j) > T::zero() {
                    break l;
                }
            };
            Operands::ShiftMixture {
                p: sample_test_distribution(q, rng)?,
                lambda,
                i,
                j,
            }
        }
        BoundId::CyclicShiftDistance => {
            let (i, j) = two_shifts(rng);
            Operands::Shifts {
                p: sample_test_distribution(q, rng)?,
                i,
                j,
            }
        }
        BoundId::TailBound => Operands::Scalar {
            q,
            eps: T::lit(log_uniform(rng, 1e-12, 1.0 / 500.0)),
        },
        BoundId::LogRatioDominance => Operands::Scalar {
            q,
            eps: T::lit(log_uniform(rng, 1e-12, (qt - 1.0).powi(4).recip())),
        },
        BoundId::XLogMonotone => {
            let knee = (-1.0f64).exp();
            let (lo, hi) = if rng.random_bool(0.5) {
                (1e-9, knee)
            } else {
                (knee, 1.0 - 1e-9)
            };
            let mut a = rng.random_range(lo..hi);
            let mut b = rng.random_range(lo..hi);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            if a == b {
                b = (a + hi) / 2.0;
            }
            Operands::Points {
                x: T::lit(a),
                y: T::lit(b),
            }
        }
        BoundId::LowEntropyLower => {
            let symbol = rng.random_range(0..q);
            let eps = rng.random_range(0.0..1.0);
            Operands::SymbolMass {
                p: low_entropy_dist(q, eps, symbol, rng)?,
                symbol,
            }
        }
        BoundId::LowEntropyUpper => {
            let symbol = rng.random_range(0..q);
            let cap = low_entropy_cap::<f64>(q);
            let eps = log_uniform(rng, 1e-12, cap * (1.0 - 1e-9));
            Operands::SymbolMass {
                p: low_entropy_dist(q, eps, symbol, rng)?,
                symbol,
            }
        }
        BoundId::LowEntropySum => {
            let cap = low_entropy_cap::<f64>(q) * (1.0 - 1e-9);
            let draw = |rng: &mut R| {
                let eps = log_uniform(rng, 1e-12, cap);
                low_entropy_dist::<T, R>(q, eps, rng.random_range(0..q), rng)
            };
            Operands::Pair {
                a: draw(rng)?,
                b: draw(rng)?,
            }
        }
        BoundId::TaylorLower | BoundId::TaylorUpper => Operands::Offset {
            q,
            t: T::lit(rng.random_range(-1.0 / qt..=(qt - 1.0) / qt)),
        },
        BoundId::NearUniformLower | BoundId::NearUniformUpper => Operands::Single {
            p: sample_test_distribution(q, rng)?,
        },
        BoundId::NearUniformSum => {
            let cap = 1.0 / (2.0 * qt * qt) * (1.0 - 1e-9);
            Operands::Pair {
                a: near_uniform_dist(q, log_uniform(rng, 1e-6, cap), rng)?,
                b: near_uniform_dist(q, log_uniform(rng, 1e-6, cap), rng)?,
            }
        }
    })
}

/// Result of the empirical search for the conditional gain constant.
#[derive(Debug, Clone)]
pub struct AlphaEstimate<T: Real> {
    /// `alpha_estimate` holds the smallest observed `gain / T`.
    pub constants: GainConstants<T>,
    /// Channel attaining the minimum.
    pub channel: Channel<T>,
    pub gain: T,
    pub symmetric_entropy: T,
    /// Channels that passed the degeneracy filter.
    pub evaluated: usize,
}

/// Channels with `T(W)` at or below this are excluded from ratio estimates.
pub const DEGENERATE_T: f64 = 1e-6;

fn gain_ratio<T: Real>(w: &Channel<T>) -> Option<(T, T, T)> {
    let t = w.symmetric_entropy();
    if t <= T::lit(DEGENERATE_T) {
        return None;
    }
    let g = conditional_gain(w);
    Some((g / t, g, t))
}

/// Empirical lower estimate of `min gain(W) / T(W)` over random channels with
/// at most eight outputs, followed by `refine` local perturbation steps
/// around the incumbent minimizer.
pub fn estimate_alpha<T: Real>(
    q: usize,
    trials: usize,
    refine: usize,
    seed: u64,
) -> Result<AlphaEstimate<T>, GainError> {
    if !is_prime(q) {
        return Err(GainError::NotPrime(q));
    }
    if trials == 0 {
        return Err(GainError::NoTrials);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(T, T, T, Channel<T>)> = None;
    let mut evaluated = 0;
    let mut consider = |w: Channel<T>, best: &mut Option<(T, T, T, Channel<T>)>| {
        if let Some((r, g, t)) = gain_ratio(&w) {
            evaluated += 1;
            if best.as_ref().is_none_or(|b| r < b.0) {
                *best = Some((r, g, t, w));
            }
            true
        } else {
            false
        }
    };
    for _ in 0..trials {
        let w = Channel::sample_random(q, 8, &mut rng)?;
        consider(w, &mut best);
    }
    if best.is_none() {
        return Err(GainError::NoAdmissibleChannel);
    }
    for step in 0..refine {
        // Step size decays geometrically from 1 to 1e-3 over the refinement.
        let scale = 1e-3f64.powf(step as f64 / refine.max(1) as f64);
        let incumbent = &best.as_ref().expect("incumbent exists").3;
        if let Some(candidate) = perturb(incumbent, scale, &mut rng) {
            consider(candidate, &mut best);
        }
    }
    let (ratio, gain, t, channel) = best.expect("incumbent exists");
    let mut constants = GainConstants::new(q)?;
    constants.alpha_estimate = Some(ratio);
    Ok(AlphaEstimate {
        constants,
        channel,
        gain,
        symmetric_entropy: t,
        evaluated,
    })
}

/// Multiplies one randomly chosen coordinate (an atom weight or a posterior
/// entry) by `exp(scale * z)`, `z` standard normal, and renormalizes.
fn perturb<T: Real, R: Rng + ?Sized>(
    w: &Channel<T>,
    scale: f64,
    rng: &mut R,
) -> Option<Channel<T>> {
    let q = w.q();
    let k = w.len();
    let mut weights: Vec<f64> = w.atoms().iter().map(|a| a.weight.as_f64()).collect();
    let mut posts: Vec<Vec<f64>> = w
        .atoms()
        .iter()
        .map(|a| a.posterior.probs().iter().map(|p| p.as_f64()).collect())
        .collect();
    let z: f64 = StandardNormal.sample(rng);
    let factor = (scale * z).exp();
    let coord = rng.random_range(0..k * (q + 1));
    let (atom, slot) = (coord / (q + 1), coord % (q + 1));
    if slot == q {
        weights[atom] *= factor;
    } else {
        posts[atom][slot] *= factor;
    }
    let wsum: f64 = weights.iter().sum();
    let atoms: Option<Vec<Atom<T>>> = weights
        .iter()
        .zip(&posts)
        .map(|(&wt, p)| {
            let s: f64 = p.iter().sum();
            let probs = p.iter().map(|v| T::lit(v / s)).collect();
            Some(Atom {
                weight: T::lit(wt / wsum),
                posterior: Dist::from_weights(probs).ok()?,
            })
        })
        .collect();
    let atoms = atoms?;
    debug_assert_eq!(atoms.len(), k);
    let sum: T = atoms.iter().map(|a| a.weight).sum();
    let atoms = atoms
        .into_iter()
        .map(|a| Atom {
            weight: a.weight / sum,
            posterior: a.posterior,
        })
        .collect();
    Channel::new(q, atoms).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: &[f64]) -> Dist<f64> {
        Dist::new(p.to_vec()).unwrap()
    }

    fn h2(p: f64) -> f64 {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }

    #[test]
    fn unconditional_gain_examples() {
        let u = Dist::<f64>::uniform(3).unwrap();
        assert!(gain_unconditional(&u, &u).unwrap().abs() < 1e-15);
        let pm = Dist::<f64>::point_mass(3, 1).unwrap();
        assert_eq!(gain_unconditional(&pm, &pm).unwrap(), 0.0);
        let b = d(&[0.75, 0.25]);
        let g = gain_unconditional(&b, &b).unwrap();
        assert!((g - (h2(0.375) - h2(0.25))).abs() < 1e-14);
        assert!(gain_unconditional(&b, &u).is_err());
    }

    #[test]
    fn constants_match_closed_form() {
        let k = GainConstants::<f64>::new(3).unwrap();
        let lgq = 3f64.log2();
        let g0 = 1.0 / (500.0 * 16.0 * lgq);
        assert!((k.gamma0 - g0).abs() < 1e-18);
        let lge = std::f64::consts::LOG2_E;
        let c = g0.powi(3) * lgq / (48.0 * 243.0 * 8.0 * (6.0 / g0).log2() * lge * lge);
        assert!(((k.c - c) / c).abs() < 1e-12);
        assert!(k.c > 0.0);
    }

    #[test]
    fn wtavg_examples() {
        let k = GainConstants::<f64>::new(3).unwrap();
        let u = Dist::<f64>::uniform(3).unwrap();
        let r = check_wtavg(&u, &u, &k).unwrap();
        assert!(r.passed && r.margin.abs() < 1e-15);
        let pm = Dist::<f64>::point_mass(3, 0).unwrap();
        let r = check_wtavg(&pm, &pm, &k).unwrap();
        assert!(r.passed && r.lhs == 0.0 && r.rhs == 0.0);
        assert_eq!(r.case, Some(1));
        let k4 = GainConstants::<f64>::new(4).unwrap();
        let u4 = Dist::<f64>::uniform(4).unwrap();
        assert_eq!(check_wtavg(&u4, &u4, &k4), Err(GainError::NotPrime(4)));
    }

    #[test]
    fn case_labels() {
        let g = 0.01;
        assert_eq!(wtavg_case(0.005, 0.001, g), 1);
        assert_eq!(wtavg_case(0.5, 0.4, g), 2);
        assert_eq!(wtavg_case(0.999, 0.995, g), 3);
        assert_eq!(wtavg_case(0.5, 0.001, g), 4);
        assert_eq!(wtavg_case(0.999, 0.5, g), 5);
        assert_eq!(wtavg_case(0.9999, 0.002, g), 4);
        assert_eq!(wtavg_case(0.99999, 0.006, g), 5);
    }

    #[test]
    fn max_ineq_examples() {
        let a = d(&[0.5, 0.3, 0.2]);
        let pm = Dist::<f64>::point_mass(3, 2).unwrap();
        let r = check_max_ineq(&a, &pm).unwrap();
        assert!(r.margin.abs() < 1e-15 && r.passed);
        let u = Dist::<f64>::uniform(3).unwrap();
        let r = check_max_ineq(&a, &u).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15 && r.passed);
    }

    #[test]
    fn conditional_gain_examples() {
        let x = d(&[0.7, 0.2, 0.1]);
        let single = Channel::source(x.clone());
        assert!((conditional_gain(&single) - gain_unconditional(&x, &x).unwrap()).abs() < 1e-15);
        assert_eq!(conditional_gain(&Channel::<f64>::qsc(3, 0.0).unwrap()), 0.0);

        // Two outputs, weight 1/2: posteriors (1,0) and (1/2,1/2).
        let w = Channel::new(
            2,
            vec![
                Atom {
                    weight: 0.5,
                    posterior: d(&[1.0, 0.0]),
                },
                Atom {
                    weight: 0.5,
                    posterior: d(&[0.5, 0.5]),
                },
            ],
        )
        .unwrap();
        // Pairs: (pm,pm) -> 0; (pm,u) and (u,pm) -> 1 - 1/2; (u,u) -> 1 - 1.
        let by_hand = 0.25 * 0.0 + 0.5 * 0.5 + 0.25 * 0.0;
        assert!((conditional_gain(&w) - by_hand).abs() < 1e-15);
        assert!((conditional_gain(&w) - (w.minus().entropy() - w.entropy())).abs() < 1e-15);
    }

    #[test]
    fn catalog_examples() {
        let r = verify_bound(
            BoundId::LowEntropyLower,
            &Operands::SymbolMass {
                p: Dist::<f64>::point_mass(3, 1).unwrap(),
                symbol: 1,
            },
        )
        .unwrap();
        assert!(r.passed && r.lhs == 0.0 && r.rhs == 0.0);

        let u = Dist::<f64>::uniform(5).unwrap();
        for b in [BoundId::NearUniformLower, BoundId::NearUniformUpper] {
            let r = verify_bound(b, &Operands::Single { p: u.clone() }).unwrap();
            assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 1.0).abs() < 1e-15);
        }

        let eps = 1e-3;
        let p = d(&[1.0 - eps, eps]);
        let r = verify_bound(
            BoundId::LowEntropyUpper,
            &Operands::SymbolMass { p, symbol: 0 },
        )
        .unwrap();
        let expected_lhs = 17.0 * eps * (1.0 / eps).log2() / 12.0;
        assert!((r.lhs - expected_lhs).abs() < 1e-15);
        assert!((r.rhs - h2(eps)).abs() < 1e-15);
        assert!(r.passed);
    }

    #[test]
    fn hypothesis_violations_are_errors() {
        let err = verify_bound(
            BoundId::TailBound,
            &Operands::<f64>::Scalar { q: 2, eps: 0.01 },
        );
        assert!(matches!(err, Err(GainError::Hypothesis { .. })));
        let err = verify_bound(
            BoundId::CyclicShiftDistance,
            &Operands::Shifts {
                p: Dist::<f64>::uniform(4).unwrap(),
                i: 0,
                j: 1,
            },
        );
        assert_eq!(err, Err(GainError::NotPrime(4)));
        let err = verify_bound(
            BoundId::NearUniformSum,
            &Operands::Pair {
                a: Dist::<f64>::uniform(3).unwrap(),
                b: Dist::<f64>::uniform(3).unwrap(),
            },
        );
        assert!(matches!(err, Err(GainError::Hypothesis { .. })));
        let err = verify_bound(
            BoundId::TailBound,
            &Operands::Single {
                p: Dist::<f64>::uniform(3).unwrap(),
            },
        );
        assert!(matches!(err, Err(GainError::WrongOperands { .. })));
        assert!("no_such_bound".parse::<BoundId>().is_err());
    }

    #[test]
    fn every_bound_passes_on_sampled_operands() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &q in &[2usize, 3, 5, 7] {
            for b in BoundId::ALL {
                for _ in 0..200 {
                    let ops = sample_operands::<f64, _>(b, q, &mut rng).unwrap();
                    let r = verify_bound(b, &ops).unwrap();
                    assert!(
                        r.passed,
                        "{b} q={q} margin={} inputs={}",
                        r.margin, r.inputs
                    );
                }
            }
        }
    }

    #[test]
    fn bound_names_round_trip() {
        for b in BoundId::ALL {
            assert_eq!(b.name().parse::<BoundId>().unwrap(), b);
        }
    }

    #[test]
    fn alpha_estimate_is_positive_and_deterministic() {
        let a = estimate_alpha::<f64>(3, 50, 50, 5).unwrap();
        let b = estimate_alpha::<f64>(3, 50, 50, 5).unwrap();
        let est = a.constants.alpha_estimate.unwrap();
        assert!(est > 0.0);
        assert_eq!(Some(est), b.constants.alpha_estimate);
        assert!(a.symmetric_entropy > DEGENERATE_T);
        assert!(estimate_alpha::<f64>(4, 10, 0, 1).is_err());
    }
}
