//! Reweighting factors for conformal-barycenter samples.
//!
//! A closed sample `(w, y)` arrives from the pushforward of the uniform
//! measure on arms. Weighting it by `K(w, y)` recovers the Riemannian measure
//! on closed polygons; weighting by `K̂(w, y)` recovers the quotient measure on
//! polygon shapes modulo rotation. Every factor only involves `d × d`
//! matrices accumulated in one pass over the edges, so evaluation is `O(n d²)`.
//!
//! All products are formed as sums of logarithms and exponentiated at the
//! end; the `log_*` variants stay finite even when the plain values would
//! overflow.

use nalgebra::{Cholesky, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::barycenter::{ClosedPolygon, EdgeLengths};
use crate::error::{Error, Result};
use crate::hyperbolic::{norm_sq, BallPoint, SmallMatrix};

/// The per-edge metric scales `ρᵢ` of the product-of-spheres metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannWeights(Vec<f64>);

impl RiemannWeights {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if let Some(i) = rho.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "metric weight rho[{}] = {} is not a positive finite number",
                i + 1,
                rho[i]
            )));
        }
        Ok(Self(rho))
    }

    /// `ρᵢ = √rᵢ`, the symplectic choice.
    pub fn sqrt_r(r: &EdgeLengths) -> Self {
        Self(r.as_slice().iter().map(|x| x.sqrt()).collect())
    }

    /// `ρᵢ = rᵢ`, spheres of radius `rᵢ`.
    pub fn r(r: &EdgeLengths) -> Self {
        Self(r.as_slice().to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// The three `d × d` matrices every weight is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSummary {
    /// `Σ rᵢ (I - yᵢyᵢᵀ)`
    pub gram_r: SmallMatrix,
    /// `Σ (rᵢ²/ρᵢ²) (I - yᵢyᵢᵀ)`
    pub gram_r2_rho2: SmallMatrix,
    /// `Σ ρᵢ² yᵢyᵢᵀ`
    pub sigma: SmallMatrix,
    /// Eigenvalues of `sigma`, ascending.
    pub sigma_eigs: Vec<f64>,
}

/// Pivot threshold, relative to the largest diagonal entry, below which a
/// Gram matrix is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-14;
/// Smallest admissible eigenvalue of `sigma`, relative to its trace.
const SPAN_TOLERANCE: f64 = 1e-12;

fn check_shapes(w: Option<&BallPoint>, y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<()> {
    if y.n() != r.len() || y.n() != rho.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} directions, {} edgelengths, {} metric weights",
            y.n(),
            r.len(),
            rho.len()
        )));
    }
    if let Some(w) = w {
        if w.dim() != y.d() {
            return Err(Error::InvalidInput(format!(
                "ball point has dimension {}, polygon {}",
                w.dim(),
                y.d()
            )));
        }
    }
    Ok(())
}

/// Accumulates the Gram matrices in one pass and diagonalizes `sigma`.
pub fn gram_summary(y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<GramSummary> {
    check_shapes(None, y, r, rho)?;
    let d = y.d();
    let mut gram_r = SmallMatrix::zeros(d, d);
    let mut gram_r2_rho2 = SmallMatrix::zeros(d, d);
    let mut sigma = SmallMatrix::zeros(d, d);
    let mut sum_r = 0.0;
    let mut sum_q = 0.0;
    for ((yi, &ri), &pi) in y.iter().zip(r.as_slice()).zip(rho.as_slice()) {
        let q = ri * ri / (pi * pi);
        let p2 = pi * pi;
        sum_r += ri;
        sum_q += q;
        for a in 0..d {
            for b in 0..=a {
                let outer = yi[a] * yi[b];
                gram_r[(a, b)] -= ri * outer;
                gram_r2_rho2[(a, b)] -= q * outer;
                sigma[(a, b)] += p2 * outer;
            }
        }
    }
    for a in 0..d {
        gram_r[(a, a)] += sum_r;
        gram_r2_rho2[(a, a)] += sum_q;
        for b in 0..a {
            gram_r[(b, a)] = gram_r[(a, b)];
            gram_r2_rho2[(b, a)] = gram_r2_rho2[(a, b)];
            sigma[(b, a)] = sigma[(a, b)];
        }
    }
    // Fails fast on collinear input before the eigensolver runs.
    log_det_spd(&gram_r)?;
    let mut sigma_eigs: Vec<f64> = SymmetricEigen::new(sigma.clone()).eigenvalues.iter().copied().collect();
    sigma_eigs.sort_by(f64::total_cmp);
    Ok(GramSummary {
        gram_r,
        gram_r2_rho2,
        sigma,
        sigma_eigs,
    })
}

/// `ln det` of a symmetric positive definite matrix via Cholesky.
pub(crate) fn log_det_spd(m: &SmallMatrix) -> Result<f64> {
    let scale = m.diagonal().amax();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::SingularGram);
    }
    let chol = Cholesky::new(m.clone()).ok_or(Error::SingularGram)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let pivot = l[(i, i)] * l[(i, i)];
        if !(pivot > SINGULAR_PIVOT * scale) {
            return Err(Error::SingularGram);
        }
        acc += pivot.ln();
    }
    Ok(acc)
}

/// `Σ ln |w + yᵢ|²`
fn sum_log_dist(w: &BallPoint, y: &ClosedPolygon) -> f64 {
    let wc = w.coords();
    y.iter()
        .map(|yi| {
            let s: f64 = yi.iter().zip(wc).map(|(a, b)| (a + b) * (a + b)).sum();
            s.ln()
        })
        .sum()
}

/// `ln λ`, where `λ` normalizes `χ(w) = λ 2ᵈ (1 - |w|²)^(n(d-1)-d)` to unit
/// mass on the ball.
pub fn log_normalization_constant(n: usize, d: usize) -> f64 {
    let m = ((n - 1) * (d - 1)) as f64;
    let df = d as f64;
    ln_gamma(m + 0.5 * df) - ln_gamma(m) - df * std::f64::consts::LN_2 - 0.5 * df * std::f64::consts::PI.ln()
}

/// The ball density `χ(w) = λ 2ᵈ (1 - |w|²)^(n(d-1)-d)` used to define `K`.
pub fn chi(w: &BallPoint, n: usize) -> f64 {
    let d = w.dim();
    let exponent = (n * (d - 1)) as f64 - d as f64;
    (log_normalization_constant(n, d) + d as f64 * std::f64::consts::LN_2 + exponent * (1.0 - w.norm().powi(2)).ln())
        .exp()
}

/// `ln Jop(w, y)`; see [`jacobian_opening`].
pub fn log_jacobian_opening(w: &BallPoint, y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<f64> {
    check_shapes(Some(w), y, r, rho)?;
    let g = gram_summary(y, r, rho)?;
    let d = y.d() as f64;
    let n = y.n() as f64;
    let one_minus = 1.0 - norm_sq(w.coords());
    Ok(
        d * (2.0 / one_minus).ln() + log_det_spd(&g.gram_r)? - 0.5 * log_det_spd(&g.gram_r2_rho2)?
            + (d - 1.0) * (n * one_minus.ln() - sum_log_dist(w, y)),
    )
}

/// Jacobian determinant of the opening map at `(w, y)`:
///
/// ```text
/// (2/(1-|w|²))ᵈ · det(Σ rᵢ(I - yᵢyᵢᵀ)) / √det(Σ rᵢ²/ρᵢ² (I - yᵢyᵢᵀ)) · Πᵢ ((1-|w|²)/|w+yᵢ|²)^(d-1)
/// ```
pub fn jacobian_opening(w: &BallPoint, y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<f64> {
    log_jacobian_opening(w, y, r, rho).map(f64::exp)
}

/// Logarithms of the sampling weights for one closed sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeights {
    /// `ln K`, without the normalization constant.
    pub log_k: f64,
    /// `-½ Σ_{k<l} ln(λₖ + λₗ)`, the inverse orbit-volume factor (up to constants).
    pub log_orbit_factor: f64,
}

impl LogWeights {
    pub fn log_k_hat(&self) -> f64 {
        self.log_k + self.log_orbit_factor
    }
}

/// Computes `ln K` and, if `quotient` is set, the orbit factor for `K̂`.
pub fn log_weights(
    w: &BallPoint,
    y: &ClosedPolygon,
    r: &EdgeLengths,
    rho: &RiemannWeights,
    quotient: bool,
) -> Result<LogWeights> {
    check_shapes(Some(w), y, r, rho)?;
    let g = gram_summary(y, r, rho)?;
    let d = y.d() as f64;
    let log_k = 0.5 * log_det_spd(&g.gram_r2_rho2)? - log_det_spd(&g.gram_r)? + (d - 1.0) * sum_log_dist(w, y);
    let log_orbit_factor = if quotient { log_orbit_factor(&g)? } else { 0.0 };
    Ok(LogWeights {
        log_k,
        log_orbit_factor,
    })
}

fn log_orbit_factor(g: &GramSummary) -> Result<f64> {
    let eigs = &g.sigma_eigs;
    let trace: f64 = eigs.iter().sum();
    if !(eigs[0] > SPAN_TOLERANCE * trace) {
        return Err(Error::DegenerateSpan);
    }
    let mut acc = 0.0;
    for k in 0..eigs.len() {
        for l in k + 1..eigs.len() {
            acc += (eigs[k] + eigs[l]).ln();
        }
    }
    Ok(-0.5 * acc)
}

/// `ln K(w, y)`; see [`weight_k`].
pub fn log_weight_k(
    w: &BallPoint,
    y: &ClosedPolygon,
    r: &EdgeLengths,
    rho: &RiemannWeights,
    normalized: bool,
) -> Result<f64> {
    let lw = log_weights(w, y, r, rho, false)?;
    let norm = if normalized {
        log_normalization_constant(y.n(), y.d())
    } else {
        0.0
    };
    Ok(lw.log_k + norm)
}

/// Sampling weight `K = χ/Jop` for the measure on closed polygons:
///
/// ```text
/// √det(Σ rᵢ²/ρᵢ² (I - yᵢyᵢᵀ)) / det(Σ rᵢ(I - yᵢyᵢᵀ)) · Πᵢ |w + yᵢ|^(2(d-1))
/// ```
///
/// times `λ` when `normalized`. Ratio estimators cancel `λ`, so it is usually omitted.
pub fn weight_k(
    w: &BallPoint,
    y: &ClosedPolygon,
    r: &EdgeLengths,
    rho: &RiemannWeights,
    normalized: bool,
) -> Result<f64> {
    log_weight_k(w, y, r, rho, normalized).map(f64::exp)
}

/// `ln K̂(w, y)`; see [`weight_k_hat`].
pub fn log_weight_k_hat(w: &BallPoint, y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<f64> {
    log_weights(w, y, r, rho, true).map(|lw| lw.log_k_hat())
}

/// Sampling weight for the quotient measure on shapes: unnormalized `K`
/// times `Π_{1≤k<l≤d} (λₖ + λₗ)^(-1/2)`, where `λₖ` are the eigenvalues of
/// `Σ ρᵢ² yᵢyᵢᵀ`.
pub fn weight_k_hat(w: &BallPoint, y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<f64> {
    log_weight_k_hat(w, y, r, rho).map(f64::exp)
}
