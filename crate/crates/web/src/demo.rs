//! The computations behind the browser demo, kept free of JavaScript types
//! so they can be tested natively.

use polysample::analytic_refs::ReferencePdf;
use polysample::barycenter::{conformal_barycenter, interpolate_closure, ArmConfig, SolverSettings};
use polysample::estimator::{HistogramAccumulator, HistogramSpec};
use polysample::{
    chord_length, run_until_ci, sample_arm, EdgeLengths, Functional, Result, Sampler, SamplerConfig, StoppingRule,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A planar equilateral arm whose closure can be animated.
pub struct Closure {
    angles: Vec<f64>,
    r: EdgeLengths,
}

impl Closure {
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let r = EdgeLengths::equilateral(n)?;
        let arm = sample_arm(&mut ChaCha8Rng::seed_from_u64(seed), n, 2);
        let angles = arm.iter().map(|e| e[1].atan2(e[0])).collect();
        Ok(Self { angles, r })
    }

    pub fn n(&self) -> usize {
        self.angles.len()
    }

    pub fn set_angle(&mut self, i: usize, angle: f64) {
        self.angles[i] = angle;
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    fn arm(&self) -> ArmConfig {
        let dirs = self.angles.iter().flat_map(|a| [a.cos(), a.sin()]).collect();
        ArmConfig::new(2, dirs).expect("unit directions")
    }

    /// The `n + 1` vertices of the arm moved a fraction `t` of the way to its
    /// closure, flattened as `x₀, y₀, x₁, y₁, …` and centered on their mean.
    pub fn vertices(&self, t: f64) -> Result<Vec<f64>> {
        let x = interpolate_closure(&self.arm(), &self.r, t, &SolverSettings::default())?;
        let mut pts = vec![0.0, 0.0];
        let (mut px, mut py) = (0.0, 0.0);
        for e in x.iter() {
            px += e[0];
            py += e[1];
            pts.extend([px, py]);
        }
        let m = (self.n() + 1) as f64;
        let (sx, sy) = pts.chunks_exact(2).fold((0.0, 0.0), |a, p| (a.0 + p[0], a.1 + p[1]));
        Ok(pts
            .chunks_exact(2)
            .flat_map(|p| [p[0] - sx / m, p[1] - sy / m])
            .collect())
    }

    /// The conformal barycenter `w*` of the arm.
    pub fn barycenter(&self) -> Result<Vec<f64>> {
        Ok(conformal_barycenter(&self.arm(), &self.r, &SolverSettings::default())?.into_inner())
    }
}

/// Sampler setup whose chord density `reference` describes.
pub fn reference_setup(reference: ReferencePdf) -> Result<(SamplerConfig, Functional)> {
    let (r, quotient, chord) = match reference {
        ReferencePdf::HexagonEq => (vec![1.0; 6], true, (1, 4)),
        ReferencePdf::HexagonNeq => (vec![1.0, 0.5, 1.5, 1.0, 1.0, 1.0], true, (1, 4)),
        ReferencePdf::TetragonFull => (vec![1.0; 4], false, (1, 3)),
        ReferencePdf::TetragonQuotient => (vec![1.0; 4], true, (1, 3)),
    };
    let config = SamplerConfig::new(EdgeLengths::new(r)?, 3)?.with_quotient(quotient);
    Ok((config, Functional::Chord { i: chord.0, j: chord.1 }))
}

pub struct ChordHistogram {
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub reference: Vec<f64>,
}

/// Weighted chord histogram over the support of `reference`, with the exact
/// bin averages alongside.
pub fn chord_histogram(reference: ReferencePdf, count: usize, bins: usize, seed: u64) -> Result<ChordHistogram> {
    let (config, functional) = reference_setup(reference)?;
    let Functional::Chord { i, j } = functional else {
        unreachable!()
    };
    let (lo, hi) = reference.support();
    let spec = HistogramSpec::new(lo, hi, bins)?;
    let sampler = Sampler::new(config.with_seed(seed).with_chunk_size(1024))?;
    let r = sampler.config().r.clone();
    let parts = sampler.fold_batch(
        count,
        || HistogramAccumulator::new(spec),
        |acc, s| acc.add(chord_length(&s.y, &r, i, j).expect("valid chord"), s.weight),
    )?;
    let mut total = HistogramAccumulator::new(spec);
    parts.iter().for_each(|p| total.merge(p));
    let h = total.finish()?;
    Ok(ChordHistogram {
        centers: (0..bins).map(|k| spec.center(k)).collect(),
        densities: h.densities,
        standard_errors: h.standard_errors,
        reference: (0..bins)
            .map(|k| {
                let (a, b) = spec.edges(k);
                reference.bin_average(a, b)
            })
            .collect(),
    })
}

pub struct GyradiusEstimate {
    pub mean: f64,
    pub ci_radius: f64,
    pub n_samples: f64,
    /// `(n + 1)/12`, the exact mean for equilateral polygons.
    pub exact: f64,
}

pub fn gyradius_estimate(n: usize, d: usize, rel_radius: f64, max_samples: u64, seed: u64) -> Result<GyradiusEstimate> {
    let config = SamplerConfig::equilateral(n, d)?.with_seed(seed).with_chunk_size(256);
    let rule = StoppingRule {
        rel_radius,
        max_samples,
        chunks_per_round: 1,
        ..StoppingRule::default()
    };
    let report = run_until_ci(&Sampler::new(config)?, &Functional::Gyradius, &rule)?;
    Ok(GyradiusEstimate {
        mean: report.mean,
        ci_radius: report.ci_radius,
        n_samples: report.n_samples as f64,
        exact: (n + 1) as f64 / 12.0,
    })
}
