//! Monte Carlo sampling of closed polygons with prescribed edgelengths.
//!
//! Random arms (independent unit edge directions) are closed by shifting the
//! unit sphere by their conformal barycenter in the Poincaré ball. The closed
//! samples are not uniformly distributed, but each carries an explicit,
//! `O(n)`-computable weight that turns weighted averages into consistent
//! estimates under the Riemannian measure on closed polygons, or on their shapes
//! modulo rotation.
//!
//! ```
//! use polysample::{Functional, SamplerConfig, Sampler, StoppingRule, run_until_ci};
//!
//! let config = SamplerConfig::equilateral(4, 3).unwrap().with_quotient(true).with_seed(7);
//! let sampler = Sampler::new(config).unwrap();
//! let batch = sampler.sample_batch(100).unwrap();
//! assert_eq!(batch.len(), 100);
//!
//! let rule = StoppingRule { rel_radius: 0.05, ..StoppingRule::default() };
//! let report = run_until_ci(&sampler, &Functional::Chord { i: 1, j: 3 }, &rule).unwrap();
//! assert!((report.mean - 1.0).abs() < 0.1);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod analytic_refs;
pub mod barycenter;
pub mod error;
pub mod estimator;
pub mod hyperbolic;
pub mod oracle;
pub mod sampler;
pub mod weights;

pub use barycenter::{
    close, conformal_barycenter, interpolate_closure, open, ArmConfig, ClosedPolygon, EdgeLengths, SolverSettings,
};
pub use error::{Error, Result};
pub use estimator::{
    chord_length, gyradius_squared, ratio_ci, ratio_estimate, run_until_ci, vertices, weighted_histogram,
    EstimateReport, Functional, Histogram, HistogramSpec, StoppingRule,
};
pub use hyperbolic::{shift, BallPoint, UnitVec};
pub use sampler::{sample_arm, RhoChoice, Sampler, SamplerConfig, WeightedSample};
pub use weights::{jacobian_opening, weight_k, weight_k_hat, RiemannWeights};
