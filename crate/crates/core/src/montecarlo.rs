//! Monte-Carlo sampling of `C = log det(I + HH^H/ζ)` and the empirical
//! statistics compared against the closed forms.
//!
//! Sample `s` of a run with seed `seed` is drawn from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `s`, so a sample does
//! not depend on which thread draws it or on how a run is split. Entries of
//! `X` are generated row-major, each from two uniforms by Box-Muller.

use std::f64::consts::TAU;
use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::asymptotics::AsymptoticStats;
use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::linalg::{gram_logdet, CMatrix};
use crate::normal::{normal_cdf, normal_quantile};

/// Generator for sample `index` of a run.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Circularly-symmetric complex Gaussian with `E|x|² = variance`.
#[inline]
fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    // 1 - U lies in (0, 1], keeping the logarithm finite.
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let r = (-variance * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    Complex64::new(r * c, r * s)
}

/// `X` with i.i.d. `CN(0, 1/M)` entries.
pub fn sample_noise<R: Rng>(n: usize, m: usize, rng: &mut R) -> CMatrix {
    let v = 1.0 / m as f64;
    let mut x = CMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            x[(i, j)] = complex_gaussian(rng, v);
        }
    }
    x
}

/// One draw of `H = A + Σ^{∘½} ⊙ X`.
pub fn sample_channel<R: Rng>(model: &ChannelModel, rng: &mut R) -> CMatrix {
    let x = sample_noise(model.n(), model.m(), rng);
    model.channel_from_noise(&x)
}

/// `log det(I + HH^H/ζ)`, evaluated on the smaller Gram matrix.
pub fn compute_mi(h: &CMatrix, zeta: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::Domain(format!("zeta must be positive, got {zeta}")));
    }
    let (n, m) = h.shape();
    // nalgebra storage is column-major, so columns are contiguous.
    if m <= n {
        let mut scratch = vec![Complex64::new(0.0, 0.0); m * m];
        gram_logdet(h.as_slice(), m, n, 1.0 / zeta, &mut scratch)
    } else {
        let ht = h.transpose();
        let mut scratch = vec![Complex64::new(0.0, 0.0); n * n];
        gram_logdet(ht.as_slice(), n, m, 1.0 / zeta, &mut scratch)
    }
}

/// Per-thread buffers for the sampling loop.
struct Workspace {
    h: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Draws sample `index` straight into a Gram-ready layout. Bit-identical to
/// `compute_mi(&sample_channel(model, &mut sample_rng(seed, index)), ζ)`.
fn draw_mi(model: &ChannelModel, seed: u64, index: u64, ws: &mut Workspace) -> Result<f64> {
    let (n, m) = (model.n(), model.m());
    let var = 1.0 / m as f64;
    let amp = model.profile().amplitude();
    let los = model.los();
    let mut rng = sample_rng(seed, index);
    let by_column = m <= n;
    for i in 0..n {
        for j in 0..m {
            let h = los[(i, j)] + complex_gaussian(&mut rng, var) * amp[(i, j)];
            let pos = if by_column { j * n + i } else { i * m + j };
            ws.h[pos] = h;
        }
    }
    let (count, len) = if by_column { (m, n) } else { (n, m) };
    gram_logdet(&ws.h, count, len, 1.0 / model.zeta(), &mut ws.scratch)
}

/// SHA-256 over the dimensions, `ζ`, `A` and `Σ` (little-endian bit patterns).
pub fn model_digest(model: &ChannelModel) -> String {
    let mut hasher = Sha256::new();
    hasher.update((model.n() as u64).to_le_bytes());
    hasher.update((model.m() as u64).to_le_bytes());
    hasher.update(model.zeta().to_bits().to_le_bytes());
    for z in model.los().iter() {
        hasher.update(z.re.to_bits().to_le_bytes());
        hasher.update(z.im.to_bits().to_le_bytes());
    }
    for s in model.profile().matrix().iter() {
        hasher.update(s.to_bits().to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Mutual-information samples of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct MiSampleSet {
    samples: Vec<f64>,
    sorted: Vec<f64>,
    seed: u64,
    /// Index of the first sample.
    start: u64,
    digest: String,
}

impl MiSampleSet {
    fn from_samples(samples: Vec<f64>, seed: u64, start: u64, digest: String) -> Self {
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        Self {
            samples,
            sorted,
            seed,
            start,
            digest,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance; `None` below two samples.
    pub fn variance(&self) -> Option<f64> {
        let s = self.samples.len();
        if s < 2 {
            return None;
        }
        let mean = self.mean();
        let ss: f64 = self.samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        Some(ss / (s - 1) as f64)
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> Option<f64> {
        self.variance().map(|v| (v / self.samples.len() as f64).sqrt())
    }

    /// Fraction of samples strictly below `rate`.
    pub fn empirical_outage(&self, rate: f64) -> f64 {
        let below = self.sorted.partition_point(|&x| x < rate);
        below as f64 / self.sorted.len() as f64
    }

    /// The first `count` samples, identical to a shorter run with the same seed.
    pub fn prefix(&self, count: usize) -> Result<MiSampleSet> {
        if count == 0 || count > self.samples.len() {
            return Err(Error::Domain(format!(
                "prefix of {count} requested from {} samples",
                self.samples.len()
            )));
        }
        Ok(Self::from_samples(
            self.samples[..count].to_vec(),
            self.seed,
            self.start,
            self.digest.clone(),
        ))
    }

    /// Concatenates contiguous runs of the same model and seed.
    pub fn merge(parts: Vec<MiSampleSet>) -> Result<MiSampleSet> {
        let mut parts = parts;
        parts.sort_by_key(|p| p.start);
        let first = parts
            .first()
            .ok_or_else(|| Error::Domain("nothing to merge".into()))?;
        let (seed, start, digest) = (first.seed, first.start, first.digest.clone());
        let mut next = start;
        let mut samples = Vec::new();
        for p in &parts {
            if p.seed != seed || p.digest != digest {
                return Err(Error::Domain("cannot merge runs of different models or seeds".into()));
            }
            if p.start != next {
                return Err(Error::Domain(format!(
                    "runs are not contiguous: expected start {next}, found {}",
                    p.start
                )));
            }
            next += p.samples.len() as u64;
            samples.extend_from_slice(&p.samples);
        }
        Ok(Self::from_samples(samples, seed, start, digest))
    }
}

/// `count` samples with indices `0..count`.
pub fn run_mc(model: &ChannelModel, count: usize, seed: u64) -> Result<MiSampleSet> {
    if count == 0 {
        return Err(Error::Domain("sample count must be >= 1".into()));
    }
    run_mc_range(model, seed, 0..count as u64)
}

/// Samples with indices in `range`.
pub fn run_mc_range(model: &ChannelModel, seed: u64, range: Range<u64>) -> Result<MiSampleSet> {
    if range.is_empty() {
        return Err(Error::Domain("empty sample range".into()));
    }
    let (n, m) = (model.n(), model.m());
    let d = n.min(m);
    let start = range.start;
    let samples = range
        .into_par_iter()
        .map_init(
            || Workspace {
                h: vec![Complex64::new(0.0, 0.0); n * m],
                scratch: vec![Complex64::new(0.0, 0.0); d * d],
            },
            |ws, index| draw_mi(model, seed, index, ws),
        )
        .collect::<Result<Vec<f64>>>()?;
    Ok(MiSampleSet::from_samples(samples, seed, start, model_digest(model)))
}

/// `(C − C̄)/√V` for every sample, in sample order.
pub fn normalized_samples(set: &MiSampleSet, stats: &AsymptoticStats) -> Result<Vec<f64>> {
    if !(stats.variance > 0.0) {
        return Err(Error::InvalidRegime("variance must be positive to normalize".into()));
    }
    let sd = stats.variance.sqrt();
    Ok(set.samples.iter().map(|x| (x - stats.emi) / sd).collect())
}

/// Two-sided Kolmogorov-Smirnov distance to the standard normal.
pub fn ks_statistic(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("KS statistic of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let s = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max((i + 1) as f64 / s - f).max(f - i as f64 / s);
    }
    Ok(d)
}

/// Normal QQ pairs `(Φ^{-1}((i − ½)/S), x_(i))`.
pub fn qq_data(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let s = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| (normal_quantile((i as f64 + 0.5) / s), x))
        .collect()
}

/// Least-squares slope of empirical on theoretical quantiles.
pub fn qq_slope(pairs: &[(f64, f64)]) -> f64 {
    let s = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / s;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / s;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Summary of a sample set, optionally against closed-form values.
#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub samples: usize,
    pub seed: u64,
    pub model_digest: String,
    pub mean_nats: f64,
    pub mean_bits: f64,
    pub variance: Option<f64>,
    pub standard_error: Option<f64>,
    /// Absent when there are fewer than [`KS_MIN_SAMPLES`] samples.
    pub ks: Option<f64>,
    pub qq_slope: Option<f64>,
    pub flags: Vec<String>,
    pub emi_delta: Option<f64>,
    pub variance_delta: Option<f64>,
}

/// Below this count the KS statistic is not reported.
pub const KS_MIN_SAMPLES: usize = 100;

pub fn summarize(set: &MiSampleSet, stats: Option<&AsymptoticStats>) -> Result<McSummary> {
    let mean = set.mean();
    let mut flags = Vec::new();
    let (mut ks, mut slope) = (None, None);
    if let Some(st) = stats.filter(|s| s.variance > 0.0) {
        let z = normalized_samples(set, st)?;
        if set.len() >= KS_MIN_SAMPLES {
            ks = Some(ks_statistic(&z)?);
        } else {
            flags.push("low-sample".to_string());
        }
        if set.len() >= 2 {
            slope = Some(qq_slope(&qq_data(&z)));
        }
    } else if set.len() < KS_MIN_SAMPLES {
        flags.push("low-sample".to_string());
    }
    let variance = set.variance();
    Ok(McSummary {
        samples: set.len(),
        seed: set.seed(),
        model_digest: set.digest().to_string(),
        mean_nats: mean,
        mean_bits: mean / std::f64::consts::LN_2,
        variance,
        standard_error: set.standard_error(),
        ks,
        qq_slope: slope,
        flags,
        emi_delta: stats.map(|s| mean - s.emi),
        variance_delta: stats.and_then(|s| variance.map(|v| v - s.variance)),
    })
}
