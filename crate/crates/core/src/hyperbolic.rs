//! The shift map of the Poincaré ball and its derivatives.
//!
//! `shift(w, ·)` is the hyperbolic translation of the open unit ball that
//! carries `w` to the origin. The rational formula extends smoothly to every
//! pair with `|w|·|z| < 1`, which is what the Jacobian computations rely on.
//!
//! Vectors are plain `&[f64]` slices of length `d`; matrices are dense
//! `d × d` [`SmallMatrix`] values.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `d × d` matrix; `d` is small, so nothing cleverer pays off.
pub type SmallMatrix = DMatrix<f64>;

/// Points with `|w| > 1 - BALL_MARGIN` are rejected as too close to the sphere at infinity.
pub const BALL_MARGIN: f64 = 1e-14;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// A point strictly inside the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint(Vec<f64>);

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "ball points need dimension >= 2, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        let n = norm(&coords);
        if n > 1.0 - BALL_MARGIN {
            return Err(Error::OutsideBall { norm: n });
        }
        Ok(Self(coords))
    }

    pub fn origin(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    /// Wraps coordinates already known to lie inside the ball.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(norm(&coords) < 1.0);
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// The antipodal point `-w`.
    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }

    /// `t · w` for `t ∈ [0, 1]`.
    pub fn scaled(&self, t: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&t));
        Self(self.0.iter().map(|c| t * c).collect())
    }
}

impl AsRef<[f64]> for BallPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A vector on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitVec(Vec<f64>);

impl UnitVec {
    pub const TOLERANCE: f64 = 1e-14;

    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("unit vectors need d >= 2 finite components".into()));
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::InvalidInput(format!("vector has norm {n}, expected 1")));
        }
        Ok(Self(coords))
    }

    /// Normalizes a nonzero vector.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Self::new(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for UnitVec {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Writes `shift(w, z)` into `out` without allocating. The caller guarantees
/// `|w|·|z| < 1`.
/// `1 - |v|²`, accurate to a few ulps even when `|v|` is close to 1.
pub(crate) fn one_minus_norm_sq(v: &[f64]) -> f64 {
    // compensated sum of exact products
    let mut hi = 1.0f64;
    let mut lo = 0.0f64;
    for &c in v {
        let p = c * c;
        let p_err = c.mul_add(c, -p);
        let sum = hi - p;
        let b = sum - hi;
        lo += (hi - (sum - b)) + (-p - b) - p_err;
        hi = sum;
    }
    hi + lo
}

/// Writes `shift(w, z)` into `out` without allocating. The caller guarantees
/// `|w|·|z| < 1`.
#[inline]
pub(crate) fn shift_into(w: &[f64], z: &[f64], out: &mut [f64]) {
    shift_into_with(w, one_minus_norm_sq(w), z, out);
}

/// [`shift_into`] with `s = 1 - |w|²` supplied by the caller.
#[inline]
pub(crate) fn shift_into_with(w: &[f64], s: f64, z: &[f64], out: &mut [f64]) {
    // With e = z - w the map reads (s e - |e|² w) / (|e|² + s t), where
    // t = 1 - |z|². This avoids the cancellation in 1 - 2⟨w,z⟩ + |w|²|z|²
    // when z is close to w.
    let t = 1.0 - norm_sq(z);
    let q: f64 = w.iter().zip(z).map(|(a, b)| (b - a) * (b - a)).sum();
    let inv = (q + s * t).recip();
    let a = s * inv;
    let b = q * inv;
    for ((o, &zi), &wi) in out.iter_mut().zip(z).zip(w) {
        *o = a * (zi - wi) - b * wi;
    }
}

fn check_pair(w: &[f64], z: &[f64]) -> Result<()> {
    if w.len() != z.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            w.len(),
            z.len()
        )));
    }
    let product = norm(w) * norm(z);
    if !(product < 1.0 - BALL_MARGIN) {
        return Err(Error::DegenerateDenominator { product });
    }
    Ok(())
}

/// The extended shift map
///
/// ```text
/// σ(w, z) = ((1 - |w|²) z - (1 + |z|² - 2⟨w,z⟩) w) / (1 - 2⟨w,z⟩ + |w|²|z|²)
/// ```
///
/// defined whenever `|w|·|z| < 1`. It maps the unit sphere to itself and the
/// open ball to itself.
pub fn shift(w: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    check_pair(w, z)?;
    let mut out = vec![0.0; z.len()];
    shift_into(w, z, &mut out);
    Ok(out)
}

/// Derivative of `shift(s, y)` with respect to `s`, for unit `y`.
pub fn shift_d1(s: &[f64], y: &[f64]) -> SmallMatrix {
    let d = y.len();
    let mut m = SmallMatrix::zeros(d, d);
    shift_d1_into(s, y, &mut m);
    m
}

/// `shift_d1` writing into a preallocated matrix.
pub(crate) fn shift_d1_into(s: &[f64], y: &[f64], m: &mut SmallMatrix) {
    debug_assert!((norm_sq(y) - 1.0).abs() < 1e-10);
    let d = y.len();
    let ss = norm_sq(s);
    // 1 - 2⟨s,y⟩ + |s|² = |y - s|² for unit y
    let denom: f64 = s.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum();
    let one_minus_sy = 0.5 * (denom + 1.0 - ss);
    let a = (1.0 - ss) / denom;
    let f = 2.0 / denom;
    for r in 0..d {
        // shifted point σ(s, y), component r
        let x_r = a * (y[r] - s[r]) - s[r];
        for c in 0..d {
            let mut v = s[r] * y[c] - y[r] * s[c] + x_r * (y[c] - s[c]);
            if r == c {
                v -= one_minus_sy;
            }
            m[(r, c)] = f * v;
        }
    }
}

/// Derivative of `shift(s, y)` with respect to `y`, for unit `y`. This is a
/// conformal matrix.
pub fn shift_d2(s: &[f64], y: &[f64]) -> SmallMatrix {
    debug_assert!((norm_sq(y) - 1.0).abs() < 1e-10);
    let d = y.len();
    let ss = norm_sq(s);
    let denom: f64 = s.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum();
    let a = (1.0 - ss) / denom;
    let f = 2.0 / denom;
    SmallMatrix::from_fn(d, d, |r, c| {
        let x_r = a * (y[r] - s[r]) - s[r];
        let mut v = -s[r] * (y[c] - s[c]) + x_r * (s[c] - ss * y[c]);
        if r == c {
            v += 0.5 * (1.0 - ss);
        }
        f * v
    })
}

/// Conformal factor `(1 - |w|²) / |w + y|²` of `D₂ shift(-w, y)`.
pub fn conformal_factor(w: &[f64], y: &[f64]) -> f64 {
    let wy: f64 = w.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum();
    (1.0 - norm_sq(w)) / wy
}

/// The matrix `(2 / (1 - |w|²)) ((1 + ⟨w,y⟩) I - (y + w) yᵀ)`, equal to
/// `D₂shift(-w,y)⁻¹ · (-D₁shift(-w,y))`.
pub fn c_matrix(w: &[f64], y: &[f64]) -> SmallMatrix {
    let d = y.len();
    let f = 2.0 / (1.0 - norm_sq(w));
    let wy = dot(w, y);
    SmallMatrix::from_fn(d, d, |r, c| {
        let mut v = -(y[r] + w[r]) * y[c];
        if r == c {
            v += 1.0 + wy;
        }
        f * v
    })
}
