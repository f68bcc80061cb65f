use std::path::{Path, PathBuf};

use polarq::codec::stream::{read_stream, write_stream};
use polarq::construction::{
    contraction_ratio, exact_entropy_levels, polarization_profile, summarize_entropies,
    ConstructionError, DEFAULT_RHO,
};
use polarq::gain::{estimate_alpha, sample_operands, verify_bound};
use polarq::{
    compress, decompress, estimate_index_stats_mc, select_frozen, track_channels_exact, BoundId,
    FrozenPolicy, IndexStatsQ, JointChannel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::files::{
    format_values, parse_values, read_bytes, read_channel, read_spec, read_text, real,
    write_output, Csv,
};

/// Where the channel model comes from: a file, or a QSC tuned to an entropy.
pub struct ChannelSource {
    pub channel: Option<PathBuf>,
    pub q: Option<usize>,
    pub entropy: f64,
}

impl ChannelSource {
    pub fn load(&self) -> Result<JointChannel, CliError> {
        match (&self.channel, self.q) {
            (Some(path), _) => read_channel(path),
            (None, Some(q)) => Ok(JointChannel::qsc_with_entropy(q, self.entropy)?),
            (None, None) => Err(CliError::Parse(
                "either --channel or --q is required".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StatsMethod {
    /// Genie-aided Monte Carlo.
    Mc,
    /// Exact channel tracking (small n only).
    Exact,
    /// Exact tracking, falling back to Monte Carlo when the atom budget runs out.
    Auto,
}

pub struct StatsConfig {
    pub n: u32,
    pub method: StatsMethod,
    pub samples: u64,
    pub seed: Option<u64>,
    pub atom_budget: u64,
}

impl StatsConfig {
    fn compute(&self, w: &JointChannel) -> Result<IndexStatsQ, CliError> {
        match self.method {
            StatsMethod::Exact => Ok(track_channels_exact(w, self.n, self.atom_budget)?.stats),
            StatsMethod::Mc => self.monte_carlo(w),
            StatsMethod::Auto => match track_channels_exact(w, self.n, self.atom_budget) {
                Ok(t) => Ok(t.stats),
                Err(ConstructionError::AtomBudgetExceeded { .. }) => self.monte_carlo(w),
                Err(e) => Err(e.into()),
            },
        }
    }

    fn monte_carlo(&self, w: &JointChannel) -> Result<IndexStatsQ, CliError> {
        let seed = self
            .seed
            .ok_or_else(|| CliError::Parse("--seed is required for Monte Carlo".into()))?;
        Ok(estimate_index_stats_mc(w, self.n, self.samples, seed)?)
    }
}

pub fn construct(
    source: &ChannelSource,
    stats: &StatsConfig,
    policy: FrozenPolicy,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let w = source.load()?;
    let s = stats.compute(&w)?;
    let sel = select_frozen(&s, policy, w)?;
    write_output(out, sel.spec.to_string().as_bytes())
}

pub fn compress_file(spec: &Path, input: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let spec = read_spec(spec)?;
    let x: Vec<u32> = parse_values(&read_text(input)?, input)?;
    let len = spec.block_len();
    if !x.len().is_multiple_of(len) {
        return Err(CliError::Model(format!(
            "{} symbols is not a multiple of the block length {len}",
            x.len()
        )));
    }
    let blocks = x
        .chunks(len)
        .map(|c| compress(c, &spec))
        .collect::<Result<Vec<_>, _>>()?;
    let mut bytes = Vec::new();
    write_stream(spec.q(), spec.n(), &blocks, &mut bytes)?;
    write_output(out, &bytes)
}

/// Side information defaults to the only output of a one-output channel.
pub fn decompress_file(
    spec: &Path,
    input: &Path,
    side: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let spec = read_spec(spec)?;
    let (header, blocks) = read_stream(&read_bytes(input)?)?;
    if header.q != spec.q() || header.n != spec.n() {
        return Err(CliError::Model(format!(
            "stream has q={} n={}, spec has q={} n={}",
            header.q,
            header.n,
            spec.q(),
            spec.n()
        )));
    }
    let len = spec.block_len();
    let y: Vec<usize> = match side {
        Some(path) => parse_values(&read_text(path)?, path)?,
        None if spec.channel().len() == 1 => vec![0; blocks.len() * len],
        None => {
            return Err(CliError::Parse(
                "--side is required when the channel has more than one output".into(),
            ))
        }
    };
    if y.len() != blocks.len() * len {
        return Err(CliError::Model(format!(
            "side information has {} entries, expected {}",
            y.len(),
            blocks.len() * len
        )));
    }
    let mut x = Vec::with_capacity(y.len());
    for (block, ys) in blocks.iter().zip(y.chunks(len.max(1))) {
        x.extend(decompress(block, ys, &spec)?);
    }
    write_output(out, format_values(&x).as_bytes())
}

pub fn simulate(
    spec_path: &Path,
    trials: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let raw = read_bytes(spec_path)?;
    let spec = read_spec(spec_path)?;
    let digest: String = Sha256::digest(&raw)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let w = spec.channel();
    let sampler = w.joint_sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = spec.block_len();
    let mut failures = 0u64;
    for _ in 0..trials {
        let (x, y): (Vec<u32>, Vec<usize>) = (0..len).map(|_| sampler.sample(&mut rng)).unzip();
        let block = compress(&x, &spec)?;
        failures += u64::from(decompress(&block, &y, &spec)? != x);
    }
    let t = trials.max(1) as f64;
    let p = failures as f64 / t;
    let mut csv = Csv::new(&[
        "q",
        "n",
        "compression_rate",
        "trials",
        "failures",
        "failure_rate",
        "std_err",
        "seed",
        "spec_sha256",
    ]);
    csv.row(&[
        spec.q().to_string(),
        spec.n().to_string(),
        real(spec.compression_rate()),
        trials.to_string(),
        failures.to_string(),
        real(p),
        real((p * (1.0 - p) / t).sqrt()),
        seed.to_string(),
        digest,
    ]);
    write_output(out, &csv.into_bytes())
}

/// Per-index rows for depth `n`, or per-depth summaries when `levels` is set.
pub fn profile(
    source: &ChannelSource,
    stats: &StatsConfig,
    epsilon: f64,
    levels: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let w = source.load()?;
    if levels {
        let h = exact_entropy_levels(&w, stats.n, stats.atom_budget)?;
        let mut csv = Csv::new(&[
            "n",
            "mean_t",
            "mean_sqrt_t",
            "frac_low",
            "frac_high",
            "frac_polarized",
        ]);
        for (n, lv) in h.iter().enumerate() {
            let s = summarize_entropies(n as u32, lv, epsilon);
            csv.row(&[
                n.to_string(),
                real(s.mean_t),
                real(s.mean_sqrt_t),
                real(s.frac_low),
                real(s.frac_high),
                real(s.frac_polarized()),
            ]);
        }
        return write_output(out, &csv.into_bytes());
    }
    let s = stats.compute(&w)?;
    let prof = polarization_profile(&s, epsilon, DEFAULT_RHO);
    let mut csv = Csv::new(&["index", "h_hat", "z_hat", "t"]);
    for r in &prof.rows {
        csv.row(&[r.index.to_string(), real(r.h_hat), real(r.z_hat), real(r.t)]);
    }
    write_output(out, &csv.into_bytes())
}

/// Each `(q, bound)` pair draws from its own stream of the seeded generator.
pub fn verify_inequalities(
    qs: &[usize],
    trials: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut csv = Csv::new(&["bound", "q", "trials", "passed", "failed", "min_margin"]);
    for (qi, &q) in qs.iter().enumerate() {
        for (bi, &bound) in BoundId::ALL.iter().enumerate() {
            if bound.requires_prime() && !polarq::arith::is_prime(q) {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((qi * BoundId::ALL.len() + bi) as u64);
            let mut passed = 0u64;
            let mut min_margin = f64::INFINITY;
            for _ in 0..trials {
                let ops = sample_operands::<f64, _>(bound, q, &mut rng)?;
                let r = verify_bound(bound, &ops)?;
                passed += u64::from(r.passed);
                min_margin = min_margin.min(r.margin);
            }
            csv.row(&[
                bound.name().to_string(),
                q.to_string(),
                trials.to_string(),
                passed.to_string(),
                (trials - passed).to_string(),
                real(min_margin),
            ]);
        }
    }
    write_output(out, &csv.into_bytes())
}

pub fn estimate_alpha_cmd(
    q: usize,
    trials: usize,
    refine: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let est = estimate_alpha::<f64>(q, trials, refine, seed)?;
    let mut csv = Csv::new(&[
        "q",
        "trials",
        "refine",
        "evaluated",
        "alpha_estimate",
        "gain",
        "symmetric_entropy",
        "gamma0",
        "c",
    ]);
    csv.row(&[
        q.to_string(),
        trials.to_string(),
        refine.to_string(),
        est.evaluated.to_string(),
        real(est.constants.alpha_estimate.unwrap_or(f64::NAN)),
        real(est.gain),
        real(est.symmetric_entropy),
        real(est.constants.gamma0),
        real(est.constants.c),
    ]);
    write_output(out, &csv.into_bytes())
}

/// Largest and mean one-step contraction over random channels, per `q`.
pub fn contraction(
    qs: &[usize],
    trials: u64,
    seed: u64,
    min_t: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut csv = Csv::new(&["q", "trials", "evaluated", "lambda_hat", "mean_ratio"]);
    for (qi, &q) in qs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(qi as u64);
        let mut ratios = Vec::new();
        for _ in 0..trials {
            let w = JointChannel::sample_random(q, 8, &mut rng)?;
            ratios.extend(contraction_ratio(&w, min_t));
        }
        let evaluated = ratios.len();
        let max = ratios.iter().copied().fold(f64::NAN, f64::max);
        let mean = ratios.iter().sum::<f64>() / evaluated.max(1) as f64;
        csv.row(&[
            q.to_string(),
            trials.to_string(),
            evaluated.to_string(),
            real(max),
            real(if evaluated == 0 { f64::NAN } else { mean }),
        ]);
    }
    write_output(out, &csv.into_bytes())
}
