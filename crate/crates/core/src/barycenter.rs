//! Conformal barycenters, and the closure/opening maps built on them.
//!
//! The conformal barycenter `w` of weighted directions `x` is the unique
//! point of the ball where the `r`-weighted directors toward the `xᵢ` cancel.
//! Shifting by `w` maps the directors at `w` to half the shifted directions
//! at the origin, so `w` is characterized by the closure residual
//! `F(w) = Σ rᵢ shift(w, xᵢ)` vanishing. We find that zero with damped Newton.

use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{
    dot, norm, one_minus_norm_sq, shift_d1_into, shift_into, shift_into_with, BallPoint, SmallMatrix,
};

/// Positive edgelengths satisfying `rⱼ < ½ Σ rᵢ` for every `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeLengths {
    r: Vec<f64>,
    total: f64,
}

impl EdgeLengths {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.len() < 3 {
            return Err(Error::InvalidInput(format!("need at least 3 edges, got {}", r.len())));
        }
        if let Some(i) = r.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "edgelength r[{}] = {} is not a positive finite number",
                i + 1,
                r[i]
            )));
        }
        let total: f64 = r.iter().sum();
        let half_total = 0.5 * total;
        if let Some(index) = r.iter().position(|&x| x >= half_total) {
            return Err(Error::NotClosable {
                index: index + 1,
                length: r[index],
                half_total,
            });
        }
        Ok(Self { r, total })
    }

    pub fn equilateral(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.r
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// `n` unit vectors in `ℝᵈ`, stored row-major (one row per edge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmConfig {
    d: usize,
    dirs: Vec<f64>,
}

/// Unit-norm tolerance applied when validating direction data.
const UNIT_TOLERANCE: f64 = 1e-12;

impl ArmConfig {
    pub fn new(d: usize, dirs: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("dimension must be >= 2, got {d}")));
        }
        if !dirs.len().is_multiple_of(d) || dirs.len() / d < 3 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not form at least 3 vectors of dimension {d}",
                dirs.len()
            )));
        }
        for (i, v) in dirs.chunks_exact(d).enumerate() {
            let n = norm(v);
            if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "direction {} has norm {n}, expected 1",
                    i + 1
                )));
            }
        }
        Ok(Self { d, dirs })
    }

    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let d = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidInput("vectors have differing dimensions".into()));
        }
        Self::new(d, vectors.concat())
    }

    pub(crate) fn from_raw(d: usize, dirs: Vec<f64>) -> Self {
        Self { d, dirs }
    }

    pub fn n(&self) -> usize {
        self.dirs.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dir(&self, i: usize) -> &[f64] {
        &self.dirs[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.dirs.chunks_exact(self.d)
    }

    /// Flat row-major coordinates.
    pub fn as_slice(&self) -> &[f64] {
        &self.dirs
    }

    /// Applies the same linear map (normally a rotation) to every direction.
    pub fn rotated(&self, q: &SmallMatrix) -> Self {
        Self::from_raw(self.d, rotate_rows(self.d, &self.dirs, q))
    }
}

pub(crate) fn rotate_rows(d: usize, rows: &[f64], q: &SmallMatrix) -> Vec<f64> {
    let mut out = vec![0.0; rows.len()];
    for (src, dst) in rows.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
        for (r, o) in dst.iter_mut().enumerate() {
            *o = (0..d).map(|c| q[(r, c)] * src[c]).sum();
        }
    }
    out
}

/// Sum `Σ rᵢ vᵢ` of row vectors.
pub(crate) fn weighted_sum(d: usize, rows: &[f64], r: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; d];
    for (v, &ri) in rows.chunks_exact(d).zip(r) {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += ri * x;
        }
    }
    acc
}

/// Tolerance for the closure invariant, relative to `Σ rᵢ`.
pub const CLOSURE_TOLERANCE: f64 = 1e-10;

/// Unit directions `y` with `Σ rᵢ yᵢ = 0` (within [`CLOSURE_TOLERANCE`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedPolygon {
    dirs: ArmConfig,
}

impl ClosedPolygon {
    pub fn new(dirs: ArmConfig, r: &EdgeLengths) -> Result<Self> {
        if dirs.n() != r.len() {
            return Err(Error::InvalidInput(format!(
                "{} directions but {} edgelengths",
                dirs.n(),
                r.len()
            )));
        }
        let gap = norm(&weighted_sum(dirs.d(), dirs.as_slice(), r.as_slice()));
        if gap > CLOSURE_TOLERANCE * r.total() {
            return Err(Error::InvalidInput(format!(
                "polygon does not close: |Σ rᵢ yᵢ| = {gap:e}"
            )));
        }
        Ok(Self { dirs })
    }

    pub(crate) fn from_raw(dirs: ArmConfig) -> Self {
        Self { dirs }
    }

    pub fn arm(&self) -> &ArmConfig {
        &self.dirs
    }

    pub fn n(&self) -> usize {
        self.dirs.n()
    }

    pub fn d(&self) -> usize {
        self.dirs.d()
    }

    pub fn dir(&self, i: usize) -> &[f64] {
        self.dirs.dir(i)
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.dirs.iter()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.dirs.as_slice()
    }

    pub fn rotated(&self, q: &SmallMatrix) -> Self {
        Self {
            dirs: self.dirs.rotated(q),
        }
    }

    pub fn into_arm(self) -> ArmConfig {
        self.dirs
    }
}

/// Knobs for the barycenter solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Target `|F(w)|`, relative to `Σ rᵢ`.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Backtracking factor applied to rejected Newton steps.
    pub step_shrink: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            max_iter: 100,
            step_shrink: 0.5,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) || self.max_iter < 1 || !(0.0 < self.step_shrink && self.step_shrink < 1.0) {
            return Err(Error::InvalidInput(format!("invalid solver settings {self:?}")));
        }
        Ok(())
    }
}

/// Iterates may not leave the ball of this radius.
const MAX_ITERATE_RADIUS: f64 = 1.0 - 1e-9;
/// Radius cap for the initial guess.
const INITIAL_RADIUS_CAP: f64 = 0.9;
const MAX_BACKTRACKS: usize = 60;
/// Sufficient-decrease constant of the line search.
const ARMIJO: f64 = 1e-4;

/// Whether every cluster of directions within `collision_tol` of each other
/// carries less than half the total edgelength. With `collision_tol = 0`
/// clusters are groups of exactly equal directions.
pub fn is_stable(x: &ArmConfig, r: &EdgeLengths, collision_tol: f64) -> bool {
    let n = x.n();
    assert_eq!(n, r.len(), "directions and edgelengths differ in length");
    let half = 0.5 * r.total();
    let rs = r.as_slice();
    if collision_tol <= 0.0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| {
            x.dir(a)
                .iter()
                .zip(x.dir(b))
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut mass = 0.0;
        for (k, &i) in order.iter().enumerate() {
            if k > 0 && x.dir(order[k - 1]) != x.dir(i) {
                mass = 0.0;
            }
            mass += rs[i];
            if mass >= half {
                return false;
            }
        }
        return true;
    }
    // Single-linkage clusters via union-find.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let dist_sq: f64 = x.dir(i).iter().zip(x.dir(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist_sq.sqrt() <= collision_tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut mass = vec![0.0; n];
    for (i, ri) in rs.iter().enumerate() {
        let root = find(&mut parent, i);
        mass[root] += ri;
    }
    mass.iter().all(|&m| m < half)
}

/// `F(w) = Σ rᵢ shift(w, xᵢ)`.
pub fn closure_residual(w: &BallPoint, x: &ArmConfig, r: &EdgeLengths) -> Vec<f64> {
    residual_raw(w.coords(), x, r.as_slice())
}

fn residual_raw(w: &[f64], x: &ArmConfig, r: &[f64]) -> Vec<f64> {
    let d = x.d();
    let s = one_minus_norm_sq(w);
    let mut acc = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for (xi, &ri) in x.iter().zip(r) {
        shift_into_with(w, s, xi, &mut tmp);
        for (a, t) in acc.iter_mut().zip(&tmp) {
            *a += ri * t;
        }
    }
    acc
}

/// Jacobian `Σ rᵢ D₁shift(w, xᵢ)` of [`closure_residual`].
pub fn closure_residual_jacobian(w: &BallPoint, x: &ArmConfig, r: &EdgeLengths) -> SmallMatrix {
    let d = x.d();
    let mut jac = SmallMatrix::zeros(d, d);
    let mut dm = SmallMatrix::zeros(d, d);
    for (xi, &ri) in x.iter().zip(r.as_slice()) {
        shift_d1_into(w.coords(), xi, &mut dm);
        jac += ri * &dm;
    }
    jac
}

/// Writes `shift(w, xᵢ)` into `y` and returns `Σ rᵢ shift(w, xᵢ)`.
fn shift_and_sum(w: &[f64], x: &ArmConfig, r: &[f64], y: &mut [f64]) -> Vec<f64> {
    let d = x.d();
    let s = one_minus_norm_sq(w);
    let mut acc = vec![0.0; d];
    for ((xi, yi), &ri) in x.iter().zip(y.chunks_exact_mut(d)).zip(r) {
        shift_into_with(w, s, xi, yi);
        for (a, t) in acc.iter_mut().zip(yi.iter()) {
            *a += ri * t;
        }
    }
    acc
}

/// `Σ rᵢ (I - yᵢyᵢᵀ)`, a quarter of the Hessian of the potential at the
/// origin of the current frame.
fn frame_hessian(y: &[f64], r: &[f64], d: usize) -> SmallMatrix {
    let mut h = SmallMatrix::zeros(d, d);
    let total: f64 = r.iter().sum();
    for (yi, &ri) in y.chunks_exact(d).zip(r) {
        for a in 0..d {
            for b in 0..=a {
                h[(a, b)] -= ri * yi[a] * yi[b];
            }
        }
    }
    for a in 0..d {
        h[(a, a)] += total;
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
    h
}

/// Change of the potential `Σ rᵢ log(|yᵢ - δ|² / (1 - |δ|²))` when moving
/// from the origin of the current frame to `δ`.
fn potential_change(y: &[f64], r: &[f64], delta: &[f64]) -> f64 {
    let dd = dot(delta, delta);
    let total: f64 = r.iter().sum();
    let mut acc = -total * (-dd).ln_1p();
    for (yi, &ri) in y.chunks_exact(delta.len()).zip(r) {
        acc += ri * (dd - 2.0 * dot(yi, delta)).ln_1p();
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub w: BallPoint,
    pub iterations: usize,
    /// `|F|` before the first step and after every accepted step.
    pub residual_history: Vec<f64>,
}

/// Finds the conformal barycenter of `x` with weights `r`.
pub fn conformal_barycenter(x: &ArmConfig, r: &EdgeLengths, settings: &SolverSettings) -> Result<BallPoint> {
    conformal_barycenter_traced(x, r, settings).map(|rep| rep.w)
}

/// [`conformal_barycenter`] returning the residual history as well.
pub fn conformal_barycenter_traced(x: &ArmConfig, r: &EdgeLengths, settings: &SolverSettings) -> Result<SolverReport> {
    solve(x, r, settings).map(|s| SolverReport {
        w: BallPoint::from_raw(s.w),
        iterations: s.iterations,
        residual_history: s.history,
    })
}

struct Solution {
    w: Vec<f64>,
    y: Vec<f64>,
    iterations: usize,
    history: Vec<f64>,
}

/// Damped Newton iteration for the minimizer of the convex potential
/// `Σ rᵢ log(|xᵢ - w|² / (1 - |w|²))`, whose critical point is the
/// conformal barycenter.
fn solve(x: &ArmConfig, r: &EdgeLengths, settings: &SolverSettings) -> Result<Solution> {
    if x.n() != r.len() {
        return Err(Error::InvalidInput(format!(
            "{} directions but {} edgelengths",
            x.n(),
            r.len()
        )));
    }
    settings.validate()?;
    let rs = r.as_slice();
    let d = x.d();
    let target = settings.residual_tol * r.total();

    let mut w = weighted_sum(d, x.as_slice(), rs);
    w.iter_mut().for_each(|c| *c /= r.total());
    let w0 = norm(&w);
    if w0 > INITIAL_RADIUS_CAP {
        w.iter_mut().for_each(|c| *c *= INITIAL_RADIUS_CAP / w0);
    }

    let n = x.n();
    let mut y = vec![0.0; n * d];
    let mut y_trial = vec![0.0; n * d];
    let mut f = shift_and_sum(&w, x, rs, &mut y);
    let mut f_norm = norm(&f);
    let mut history = vec![f_norm];
    let mut delta = vec![0.0; d];
    let mut minus_w = vec![0.0; d];
    let mut w_trial = vec![0.0; d];
    // rounding slack for the potential near convergence
    let flat = 1e-14 * r.total();

    let fail = |w: Vec<f64>, residual: f64, iterations: usize| {
        if !is_stable(x, r, 0.0) {
            Error::Unstable
        } else {
            Error::NonConvergence {
                best: w,
                residual,
                iterations,
            }
        }
    };

    let mut iter = 0;
    while f_norm > target {
        if iter == settings.max_iter {
            return Err(fail(w, f_norm, iter));
        }
        // Newton step in the frame where the iterate sits at the origin.
        // There the Jacobian of F is -2 Σ rᵢ(I - yᵢyᵢᵀ), which is also a
        // quarter of the Hessian of the potential, so the step decreases both.
        let rhs = DVector::from_iterator(d, f.iter().map(|c| 0.5 * c));
        let Some(step) = Cholesky::new(frame_hessian(&y, rs, d)).map(|c| c.solve(&rhs)) else {
            return Err(fail(w, f_norm, iter));
        };
        let slope = -2.0 * dot(&f, step.as_slice());

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            delta.iter_mut().zip(step.iter()).for_each(|(a, s)| *a = t * s);
            if norm(&delta) < MAX_ITERATE_RADIUS {
                let change = potential_change(&y, rs, &delta);
                minus_w.iter_mut().zip(&w).for_each(|(a, b)| *a = -b);
                shift_into(&minus_w, &delta, &mut w_trial);
                if norm(&w_trial) < MAX_ITERATE_RADIUS {
                    let f_trial = shift_and_sum(&w_trial, x, rs, &mut y_trial);
                    let n_trial = norm(&f_trial);
                    if (change <= ARMIJO * t * slope || change <= flat) && n_trial < f_norm {
                        std::mem::swap(&mut w, &mut w_trial);
                        std::mem::swap(&mut y, &mut y_trial);
                        f = f_trial;
                        f_norm = n_trial;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= settings.step_shrink;
        }
        if !accepted {
            return Err(fail(w, f_norm, iter));
        }
        history.push(f_norm);
        iter += 1;
    }
    Ok(Solution {
        w,
        y,
        iterations: iter,
        history,
    })
}

/// Shifts every direction by `w`.
fn shift_all(w: &[f64], x: &ArmConfig) -> ArmConfig {
    let d = x.d();
    let s = one_minus_norm_sq(w);
    let mut out = vec![0.0; x.as_slice().len()];
    for (xi, oi) in x.iter().zip(out.chunks_exact_mut(d)) {
        shift_into_with(w, s, xi, oi);
    }
    ArmConfig::from_raw(d, out)
}

/// The conformal closure map `x ↦ (w*, shift(w*, x))`.
pub fn close(x: &ArmConfig, r: &EdgeLengths, settings: &SolverSettings) -> Result<(BallPoint, ClosedPolygon)> {
    let s = solve(x, r, settings)?;
    Ok((
        BallPoint::from_raw(s.w),
        ClosedPolygon::from_raw(ArmConfig::from_raw(x.d(), s.y)),
    ))
}

/// The conformal opening map `(w, y) ↦ shift(-w, y)`, inverse of [`close`].
pub fn open(w: &BallPoint, y: &ClosedPolygon) -> ArmConfig {
    assert_eq!(w.dim(), y.d(), "dimension mismatch");
    shift_all(w.negated().coords(), y.arm())
}

/// The configuration `shift(t·w*, x)` on the path from `x` (`t = 0`) to its
/// closure (`t = 1`).
pub fn interpolate_closure(x: &ArmConfig, r: &EdgeLengths, t: f64, settings: &SolverSettings) -> Result<ArmConfig> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain {
            value: t,
            domain: "[0, 1]",
        });
    }
    let w = conformal_barycenter(x, r, settings)?;
    Ok(shift_all(w.scaled(t).coords(), x))
}

/// `|Σ rᵢxᵢ|`, zero exactly for closed polygons.
pub fn closure_gap(x: &ArmConfig, r: &EdgeLengths) -> f64 {
    norm(&weighted_sum(x.d(), x.as_slice(), r.as_slice()))
}

/// Max-norm distance between two configurations of equal shape.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}
