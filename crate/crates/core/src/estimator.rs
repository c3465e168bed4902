//! Self-normalized importance-sampling estimates, histograms, and the
//! polygon functionals they are usually applied to.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf_inv;

use crate::barycenter::{ClosedPolygon, EdgeLengths};
use crate::error::{Error, Result};
use crate::sampler::Sampler;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub mean: f64,
    pub ci_radius: f64,
    pub confidence: f64,
    pub n_samples: u64,
    pub effective_sample_size: f64,
}

fn check_pairs(values: &[f64], weights: &[f64]) -> Result<()> {
    if values.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    if values.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "weight {w} is not a finite nonnegative number"
        )));
    }
    Ok(())
}

/// `Σ wⱼfⱼ / Σ wⱼ`.
pub fn ratio_estimate(values: &[f64], weights: &[f64]) -> Result<f64> {
    let mut acc = RatioAccumulator::default();
    check_pairs(values, weights)?;
    for (&f, &w) in values.iter().zip(weights) {
        acc.add(f, w);
    }
    acc.mean()
}

/// Ratio estimate with a delta-method normal confidence interval.
pub fn ratio_ci(values: &[f64], weights: &[f64], confidence: f64) -> Result<EstimateReport> {
    check_pairs(values, weights)?;
    let mut acc = RatioAccumulator::default();
    for (&f, &w) in values.iter().zip(weights) {
        acc.add(f, w);
    }
    acc.report(confidence)
}

/// Two-sided standard normal quantile for the given coverage.
pub fn normal_quantile(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Domain {
            value: confidence,
            domain: "(0, 1)",
        });
    }
    Ok(std::f64::consts::SQRT_2 * erf_inv(confidence))
}

/// Running sums for a ratio estimate. Accumulators over disjoint sample
/// sets merge by addition.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioAccumulator {
    pub n: u64,
    pub sum_w: f64,
    pub sum_w2: f64,
    pub sum_wf: f64,
    pub sum_w2f: f64,
    pub sum_w2f2: f64,
}

impl RatioAccumulator {
    pub fn add(&mut self, f: f64, w: f64) {
        let w2 = w * w;
        self.n += 1;
        self.sum_w += w;
        self.sum_w2 += w2;
        self.sum_wf += w * f;
        self.sum_w2f += w2 * f;
        self.sum_w2f2 += w2 * f * f;
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum_w += other.sum_w;
        self.sum_w2 += other.sum_w2;
        self.sum_wf += other.sum_wf;
        self.sum_w2f += other.sum_w2f;
        self.sum_w2f2 += other.sum_w2f2;
    }

    pub fn mean(&self) -> Result<f64> {
        if !(self.sum_w > 0.0) {
            return Err(Error::ZeroWeightSum);
        }
        Ok(self.sum_wf / self.sum_w)
    }

    /// Delta-method variance `Σ wⱼ²(fⱼ - m)² / (Σ wⱼ)²` of the ratio estimate.
    pub fn variance(&self) -> Result<f64> {
        let m = self.mean()?;
        let num = self.sum_w2f2 - 2.0 * m * self.sum_w2f + m * m * self.sum_w2;
        Ok(num.max(0.0) / (self.sum_w * self.sum_w))
    }

    pub fn effective_sample_size(&self) -> f64 {
        if self.sum_w2 > 0.0 {
            (self.sum_w * self.sum_w / self.sum_w2).min(self.n as f64)
        } else {
            0.0
        }
    }

    pub fn report(&self, confidence: f64) -> Result<EstimateReport> {
        if self.n < 2 {
            return Err(Error::InvalidInput(
                "a confidence interval needs at least 2 samples".into(),
            ));
        }
        let z = normal_quantile(confidence)?;
        Ok(EstimateReport {
            mean: self.mean()?,
            ci_radius: z * self.variance()?.sqrt(),
            confidence,
            n_samples: self.n,
            effective_sample_size: self.effective_sample_size(),
        })
    }
}

/// A scalar function of a closed polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functional {
    /// Squared radius of gyration.
    Gyradius,
    /// Distance between vertices `i` and `j` (1-based).
    Chord { i: usize, j: usize },
}

impl Functional {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Functional::Gyradius => Ok(()),
            Functional::Chord { i, j } => {
                for index in [i, j] {
                    if !(1..=n).contains(&index) {
                        return Err(Error::IndexOutOfRange { index, n });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, y: &ClosedPolygon, r: &EdgeLengths) -> Result<f64> {
        match *self {
            Functional::Gyradius => Ok(gyradius_squared(y, r)),
            Functional::Chord { i, j } => chord_length(y, r, i, j),
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown functional '{s}', expected gyradius or chord:i:j"));
        if s == "gyradius" {
            return Ok(Functional::Gyradius);
        }
        let mut parts = s.split(':');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some("chord"), Some(i), Some(j), None) => Ok(Functional::Chord {
                i: i.parse().map_err(|_| bad())?,
                j: j.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for Functional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Functional::Gyradius => write!(f, "gyradius"),
            Functional::Chord { i, j } => write!(f, "chord:{i}:{j}"),
        }
    }
}

/// When [`run_until_ci`] stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub confidence: f64,
    /// Stop once `ci_radius ≤ rel_radius · |mean|`.
    pub rel_radius: f64,
    pub max_samples: u64,
    /// Chunks sampled in parallel between checks of the stopping criterion.
    pub chunks_per_round: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            confidence: 0.99,
            rel_radius: 1e-3,
            max_samples: 100_000_000,
            chunks_per_round: 16,
        }
    }
}

/// Samples until the confidence interval of `functional` is narrow enough.
///
/// The criterion is checked after every chunk, in chunk order, so the result
/// depends only on the seed and chunk size.
pub fn run_until_ci(sampler: &Sampler, functional: &Functional, rule: &StoppingRule) -> Result<EstimateReport> {
    if !(rule.rel_radius > 0.0) {
        return Err(Error::Domain {
            value: rule.rel_radius,
            domain: "(0, inf)",
        });
    }
    normal_quantile(rule.confidence)?;
    if rule.max_samples < 2 || rule.chunks_per_round == 0 {
        return Err(Error::InvalidInput(
            "need max_samples ≥ 2 and chunks_per_round ≥ 1".into(),
        ));
    }
    let config = sampler.config();
    functional.validate(config.n())?;
    let cs = config.chunk_size as u64;
    let max = rule.max_samples;
    let len = |c: u64| cs.min(max.saturating_sub(c * cs)) as usize;
    let total_chunks = max.div_ceil(cs);
    let r = &config.r;

    let mut total = RatioAccumulator::default();
    let mut start = 0;
    while start < total_chunks {
        let end = (start + rule.chunks_per_round).min(total_chunks);
        let parts = sampler.fold_chunks(start..end, len, RatioAccumulator::default, |acc, s| {
            // functional was validated above
            let f = functional.eval(&s.y, r).expect("validated functional");
            acc.add(f, s.weight);
        })?;
        for part in &parts {
            total.merge(part);
            if total.n >= 2 {
                let report = total.report(rule.confidence)?;
                if report.ci_radius <= rule.rel_radius * report.mean.abs() {
                    return Ok(report);
                }
            }
        }
        start = end;
    }
    Err(Error::BudgetExceeded {
        max_samples: max,
        report: Box::new(total.report(rule.confidence)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || bins == 0 {
            return Err(Error::InvalidInput(format!(
                "invalid histogram range [{lo}, {hi}] with {bins} bins"
            )));
        }
        Ok(Self { lo, hi, bins })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let bw = self.bin_width();
        let a = self.lo + k as f64 * bw;
        let b = if k + 1 == self.bins {
            self.hi
        } else {
            self.lo + (k + 1) as f64 * bw
        };
        (a, b)
    }

    pub fn center(&self, k: usize) -> f64 {
        let (a, b) = self.edges(k);
        0.5 * (a + b)
    }

    /// Bin index of `x`; the last bin is closed on the right.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let k = ((x - self.lo) / self.bin_width()) as usize;
        Some(k.min(self.bins - 1))
    }
}

/// Mergeable per-bin weight sums.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramAccumulator {
    pub spec: HistogramSpec,
    pub bin_w: Vec<f64>,
    pub bin_w2: Vec<f64>,
    pub total: RatioAccumulator,
    pub below_w: f64,
    pub above_w: f64,
}

impl HistogramAccumulator {
    pub fn new(spec: HistogramSpec) -> Self {
        Self {
            spec,
            bin_w: vec![0.0; spec.bins],
            bin_w2: vec![0.0; spec.bins],
            total: RatioAccumulator::default(),
            below_w: 0.0,
            above_w: 0.0,
        }
    }

    pub fn add(&mut self, x: f64, w: f64) {
        self.total.add(0.0, w);
        match self.spec.bin_of(x) {
            Some(k) => {
                self.bin_w[k] += w;
                self.bin_w2[k] += w * w;
            }
            None if x < self.spec.lo => self.below_w += w,
            None => self.above_w += w,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.spec, other.spec, "merging histograms with different bins");
        for k in 0..self.spec.bins {
            self.bin_w[k] += other.bin_w[k];
            self.bin_w2[k] += other.bin_w2[k];
        }
        self.total.merge(&other.total);
        self.below_w += other.below_w;
        self.above_w += other.above_w;
    }

    /// Densities normalized by the total weight, with delta-method standard errors.
    pub fn finish(&self) -> Result<Histogram> {
        let w = self.total.sum_w;
        if !(w > 0.0) {
            return Err(Error::ZeroWeightSum);
        }
        let bw = self.spec.bin_width();
        let s2 = self.total.sum_w2;
        let mut densities = Vec::with_capacity(self.spec.bins);
        let mut standard_errors = Vec::with_capacity(self.spec.bins);
        for k in 0..self.spec.bins {
            let p = self.bin_w[k] / w;
            let var = (self.bin_w2[k] * (1.0 - 2.0 * p) + p * p * s2).max(0.0) / (w * w);
            densities.push(p / bw);
            standard_errors.push(var.sqrt() / bw);
        }
        Ok(Histogram {
            spec: self.spec,
            densities,
            standard_errors,
            total_weight: w,
            below_weight: self.below_w,
            above_weight: self.above_w,
            n_samples: self.total.n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub densities: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub total_weight: f64,
    pub below_weight: f64,
    pub above_weight: f64,
    pub n_samples: u64,
}

impl Histogram {
    /// `Σ density · binwidth`, the fraction of weight inside the range.
    pub fn in_range_mass(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.spec.bin_width()
    }
}

/// Weighted histogram with densities normalized by the total weight, so
/// out-of-range samples reduce the in-range mass below 1.
pub fn weighted_histogram(values: &[f64], weights: &[f64], spec: HistogramSpec) -> Result<Histogram> {
    check_pairs(values, weights)?;
    let mut acc = HistogramAccumulator::new(spec);
    for (&x, &w) in values.iter().zip(weights) {
        acc.add(x, w);
    }
    acc.finish()
}

/// Vertices `v₁ = 0, vᵢ₊₁ = vᵢ + rᵢyᵢ`, translated to have mean zero.
pub fn vertices(y: &ClosedPolygon, r: &EdgeLengths) -> Vec<Vec<f64>> {
    let d = y.d();
    let n = y.n();
    let mut out = Vec::with_capacity(n);
    let mut v = vec![0.0; d];
    let mut mean = vec![0.0; d];
    for (yi, ri) in y.iter().zip(r.as_slice()) {
        out.push(v.clone());
        for k in 0..d {
            mean[k] += v[k];
            v[k] += ri * yi[k];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    for vi in &mut out {
        vi.iter_mut().zip(&mean).for_each(|(a, m)| *a -= m);
    }
    out
}

/// `(1/n) Σ |vᵢ - v̄|²`.
pub fn gyradius_squared(y: &ClosedPolygon, r: &EdgeLengths) -> f64 {
    let n = y.n() as f64;
    vertices(y, r)
        .iter()
        .map(|v| v.iter().map(|c| c * c).sum::<f64>())
        .sum::<f64>()
        / n
}

/// `|vᵢ - vⱼ|` for 1-based vertex indices.
pub fn chord_length(y: &ClosedPolygon, r: &EdgeLengths, i: usize, j: usize) -> Result<f64> {
    let n = y.n();
    Functional::Chord { i, j }.validate(n)?;
    let (a, b) = if i <= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
    let rs = r.as_slice();
    let mut v = vec![0.0; y.d()];
    for (k, rk) in rs.iter().enumerate().take(b).skip(a) {
        for (c, yk) in v.iter_mut().zip(y.dir(k)) {
            *c += rk * yk;
        }
    }
    Ok(v.iter().map(|c| c * c).sum::<f64>().sqrt())
}
