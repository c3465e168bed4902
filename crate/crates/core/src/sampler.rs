//! Weighted samples of closed polygons.
//!
//! Each sample starts as `n` independent uniform directions on `S^{d-1}`,
//! is closed by [`close`], and is tagged with its weight `K` (or `K̂` for the
//! shape measure). Work is split into chunks of `chunk_size` samples; chunk
//! `c` draws from the ChaCha stream `c` of the configured seed, so a batch is
//! the same no matter how many threads process it.

use std::ops::Range;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barycenter::{close, ArmConfig, ClosedPolygon, EdgeLengths, SolverSettings};
use crate::error::{Error, Result};
use crate::hyperbolic::BallPoint;
use crate::weights::{log_weights, RiemannWeights};

/// Consecutive closure failures after which sampling gives up.
pub const MAX_REDRAWS: usize = 100;
pub const DEFAULT_CHUNK_SIZE: usize = 4096;

/// Choice of the metric weights `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RhoChoice {
    /// `ρᵢ = √rᵢ`
    SqrtR,
    /// `ρᵢ = rᵢ`
    R,
    Custom(RiemannWeights),
}

impl RhoChoice {
    pub fn resolve(&self, r: &EdgeLengths) -> Result<RiemannWeights> {
        match self {
            RhoChoice::SqrtR => Ok(RiemannWeights::sqrt_r(r)),
            RhoChoice::R => Ok(RiemannWeights::r(r)),
            RhoChoice::Custom(rho) if rho.len() == r.len() => Ok(rho.clone()),
            RhoChoice::Custom(rho) => Err(Error::InvalidInput(format!(
                "{} metric weights for {} edges",
                rho.len(),
                r.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub d: usize,
    pub r: EdgeLengths,
    pub rho: RhoChoice,
    pub seed: u64,
    pub chunk_size: usize,
    /// Weight by `K̂` (shapes modulo rotation) instead of `K`.
    pub quotient: bool,
    pub settings: SolverSettings,
}

impl SamplerConfig {
    pub fn new(r: EdgeLengths, d: usize) -> Result<Self> {
        let config = Self {
            d,
            r,
            rho: RhoChoice::SqrtR,
            seed: 0,
            chunk_size: DEFAULT_CHUNK_SIZE,
            quotient: false,
            settings: SolverSettings::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn equilateral(n: usize, d: usize) -> Result<Self> {
        Self::new(EdgeLengths::equilateral(n)?, d)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rho(mut self, rho: RhoChoice) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_quotient(mut self, quotient: bool) -> Self {
        self.quotient = quotient;
        self
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidInput(format!(
                "dimension must be at least 2, got {}",
                self.d
            )));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidInput("chunk size must be positive".into()));
        }
        if self.quotient && self.n() <= self.d {
            // a closed polygon with n ≤ d edges lies in a hyperplane
            return Err(Error::InvalidInput(format!(
                "shape weights need more edges than dimensions, got n = {}, d = {}",
                self.n(),
                self.d
            )));
        }
        self.settings.validate()?;
        self.rho.resolve(&self.r).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub w: BallPoint,
    pub y: ClosedPolygon,
    /// `K` or `K̂`, without normalization constants.
    pub weight: f64,
    /// Failed closures discarded before this sample.
    pub redraw_count: usize,
}

/// Draws `n` independent uniform directions on `S^{d-1}`.
pub fn sample_arm<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> ArmConfig {
    let mut dirs = vec![0.0; n * d];
    for row in dirs.chunks_exact_mut(d) {
        loop {
            let mut sq = 0.0f64;
            for c in row.iter_mut() {
                *c = rng.sample(StandardNormal);
                sq += *c * *c;
            }
            if sq > 0.0 {
                let inv = sq.sqrt().recip();
                row.iter_mut().for_each(|c| *c *= inv);
                break;
            }
        }
    }
    ArmConfig::from_raw(d, dirs)
}

/// A validated configuration ready to produce samples.
#[derive(Debug, Clone)]
pub struct Sampler {
    config: SamplerConfig,
    rho: RiemannWeights,
}

impl Sampler {
    pub fn new(config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        let rho = config.rho.resolve(&config.r)?;
        Ok(Self { config, rho })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn rho(&self) -> &RiemannWeights {
        &self.rho
    }

    /// The generator for chunk `chunk`.
    pub fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(chunk);
        rng
    }

    /// Draws arms until one closes with a usable weight.
    pub fn next_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<WeightedSample> {
        let c = &self.config;
        for redraws in 0..MAX_REDRAWS {
            let x = sample_arm(rng, c.n(), c.d);
            let Ok((w, y)) = close(&x, &c.r, &c.settings) else {
                continue;
            };
            let Ok(lw) = log_weights(&w, &y, &c.r, &self.rho, c.quotient) else {
                continue;
            };
            let weight = if c.quotient { lw.log_k_hat() } else { lw.log_k }.exp();
            if weight.is_finite() && weight > 0.0 {
                return Ok(WeightedSample {
                    w,
                    y,
                    weight,
                    redraw_count: redraws,
                });
            }
        }
        Err(Error::AbortAfterRedraws { redraws: MAX_REDRAWS })
    }

    /// Folds `len` samples of chunk `chunk` into `acc`.
    pub fn fold_chunk<A>(
        &self,
        chunk: u64,
        len: usize,
        acc: &mut A,
        fold: impl Fn(&mut A, WeightedSample),
    ) -> Result<()> {
        let mut rng = self.chunk_rng(chunk);
        for _ in 0..len {
            fold(acc, self.next_sample(&mut rng)?);
        }
        Ok(())
    }

    /// Runs the chunks in `chunks` in parallel, each filling its own
    /// accumulator. `len(c)` gives the number of samples of chunk `c`.
    /// Accumulators come back in chunk order.
    pub fn fold_chunks<A, I, F, L>(&self, chunks: Range<u64>, len: L, init: I, fold: F) -> Result<Vec<A>>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, WeightedSample) + Sync,
        L: Fn(u64) -> usize + Sync,
    {
        chunks
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                self.fold_chunk(c, len(c), &mut acc, &fold)?;
                Ok(acc)
            })
            .collect()
    }

    /// Number of chunks needed for `count` samples and the size of chunk `c`.
    fn chunk_layout(&self, count: usize) -> (u64, impl Fn(u64) -> usize + Sync) {
        let cs = self.config.chunk_size;
        let chunks = count.div_ceil(cs) as u64;
        (chunks, move |c: u64| cs.min(count - c as usize * cs))
    }

    /// Folds exactly `count` samples, chunked as in [`Sampler::sample_batch`].
    pub fn fold_batch<A, I, F>(&self, count: usize, init: I, fold: F) -> Result<Vec<A>>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, WeightedSample) + Sync,
    {
        let (chunks, len) = self.chunk_layout(count);
        self.fold_chunks(0..chunks, len, init, fold)
    }

    /// Exactly `count` samples, ordered by chunk.
    pub fn sample_batch(&self, count: usize) -> Result<Vec<WeightedSample>> {
        if count == 0 {
            return Err(Error::InvalidInput("sample count must be at least 1".into()));
        }
        let parts = self.fold_batch(count, Vec::new, |v, s| v.push(s))?;
        Ok(parts.into_iter().flatten().collect())
    }
}
