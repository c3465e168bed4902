//! Brute-force checks of the closed-form opening Jacobian.
//!
//! Everything here works with dense `(n+1)d`-dimensional matrices and finite
//! differences of the extended opening map, so it is only meant for small
//! polygons. The weights module never calls into it.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;

use crate::barycenter::{close, ClosedPolygon, EdgeLengths, SolverSettings};
use crate::error::{Error, Result};
use crate::hyperbolic::{dot, shift_d1, shift_d2, shift_into, BallPoint};
use crate::sampler::sample_arm;
use crate::weights::RiemannWeights;

/// Largest polygon the oracle accepts.
pub const MAX_EDGES: usize = 8;

fn check(y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<()> {
    if y.n() != r.len() || y.n() != rho.len() {
        return Err(Error::InvalidInput("length mismatch between y, r and rho".into()));
    }
    if y.n() > MAX_EDGES {
        return Err(Error::InvalidInput(format!(
            "the oracle handles at most {MAX_EDGES} edges, got {}",
            y.n()
        )));
    }
    Ok(())
}

/// Diagonal of the metric `g₁ = ⟨·,·⟩ × ⟨·,·⟩_ρ` on `ℝᵈ ⊕ (ℝᵈ)ⁿ`.
fn metric_g1(d: usize, rho: &RiemannWeights) -> Vec<f64> {
    let mut g = vec![1.0; d];
    for p in rho.as_slice() {
        g.extend(std::iter::repeat_n(p * p, d));
    }
    g
}

fn inner(g: &[f64], a: &[f64], b: &[f64]) -> f64 {
    g.iter().zip(a).zip(b).map(|((g, a), b)| g * a * b).sum()
}

/// The derivative `B = (0 Ω; 0 Yᵀ)` of the constraints `Σ rᵢyᵢ = 0`,
/// `½(|yᵢ|² - 1) = 0`, of size `(d + n) × d(n + 1)`.
pub fn build_constraint_matrix(y: &ClosedPolygon, r: &EdgeLengths) -> DMatrix<f64> {
    let (n, d) = (y.n(), y.d());
    let mut b = DMatrix::zeros(d + n, d * (n + 1));
    for (i, (yi, ri)) in y.iter().zip(r.as_slice()).enumerate() {
        let col = d * (i + 1);
        for k in 0..d {
            b[(k, col + k)] = *ri;
            b[(d + i, col + k)] = yi[k];
        }
    }
    b
}

/// `B*`, the adjoint of `B` from `g₁` to the Euclidean metric.
fn constraint_adjoint(b: &DMatrix<f64>, g: &[f64]) -> DMatrix<f64> {
    let mut bt = b.transpose();
    for (i, gi) in g.iter().enumerate() {
        bt.row_mut(i).scale_mut(gi.recip());
    }
    bt
}

/// `I - B*(BB*)⁻¹B`, the `g₁`-orthogonal projector onto `ker B`.
pub fn projector_from_constraints(y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<DMatrix<f64>> {
    check(y, r, rho)?;
    let g = metric_g1(y.d(), rho);
    let b = build_constraint_matrix(y, r);
    let bs = constraint_adjoint(&b, &g);
    let bbs = &b * &bs;
    let inv = Cholesky::new(bbs).ok_or(Error::SingularGram)?.inverse();
    let dim = g.len();
    Ok(DMatrix::identity(dim, dim) - bs * inv * b)
}

/// `γ = Ω R⁻¹ (I - YYᵀ) R⁻¹ Ωᵀ`, assembled from the full matrices.
pub fn gamma_assembled(y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<DMatrix<f64>> {
    check(y, r, rho)?;
    let (omega, r_inv, q) = blocks(y, r, rho);
    Ok(&omega * &r_inv * q * r_inv * omega.transpose())
}

/// `Ω`, `R⁻¹` and `Q = I - YYᵀ`.
fn blocks(y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (n, d) = (y.n(), y.d());
    let mut omega = DMatrix::zeros(d, n * d);
    let mut r_inv = DMatrix::zeros(n * d, n * d);
    let mut q = DMatrix::identity(n * d, n * d);
    for (i, yi) in y.iter().enumerate() {
        for a in 0..d {
            omega[(a, i * d + a)] = r.as_slice()[i];
            r_inv[(i * d + a, i * d + a)] = rho.as_slice()[i].recip();
            for c in 0..d {
                q[(i * d + a, i * d + c)] -= yi[a] * yi[c];
            }
        }
    }
    (omega, r_inv, q)
}

/// The projector in block form `diag(I, E)` with
/// `E = Q - R⁻² Q Ωᵀ γ⁻¹ Ω Q`.
pub fn projector_p(y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<DMatrix<f64>> {
    check(y, r, rho)?;
    let (n, d) = (y.n(), y.d());
    let (omega, r_inv, q) = blocks(y, r, rho);
    let gamma = &omega * &r_inv * &q * &r_inv * omega.transpose();
    let gamma_inv = Cholesky::new(gamma).ok_or(Error::SingularGram)?.inverse();
    let r_inv2 = &r_inv * &r_inv;
    let e = &q - r_inv2 * &q * omega.transpose() * gamma_inv * &omega * &q;
    let mut p = DMatrix::zeros(d * (n + 1), d * (n + 1));
    p.view_mut((0, 0), (d, d)).fill_with_identity();
    p.view_mut((d, d), (n * d, n * d)).copy_from(&e);
    Ok(p)
}

/// Modified Gram–Schmidt with a second pass, under the diagonal metric `g`.
/// Candidates whose remainder is below `drop_tol` times their norm are skipped.
fn orthonormalize(
    candidates: impl IntoIterator<Item = Vec<f64>>,
    g: &[f64],
    want: usize,
    drop_tol: f64,
) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(want);
    for mut v in candidates {
        if basis.len() == want {
            break;
        }
        let scale = inner(g, &v, &v).sqrt();
        if scale == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for e in &basis {
                let c = inner(g, e, &v);
                v.iter_mut().zip(e).for_each(|(vi, ei)| *vi -= c * ei);
            }
        }
        let len = inner(g, &v, &v).sqrt();
        if len > drop_tol * scale {
            v.iter_mut().for_each(|vi| *vi /= len);
            basis.push(v);
        }
    }
    basis
}

/// A `g₁`-orthonormal basis of `ker B = T(𝔹 × Pol)`, `n(d-1)` vectors of
/// length `d(n+1)`.
pub fn tangent_basis_ball_pol(y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<Vec<Vec<f64>>> {
    let p = projector_from_constraints(y, r, rho)?;
    let g = metric_g1(y.d(), rho);
    let want = y.n() * (y.d() - 1);
    let basis = orthonormalize(
        (0..g.len()).map(|k| p.column(k).iter().copied().collect()),
        &g,
        want,
        1e-8,
    );
    if basis.len() != want {
        return Err(Error::SingularGram);
    }
    Ok(basis)
}

/// A `ρ`-orthonormal basis of `T_x Arm`, `n(d-1)` vectors of length `nd`.
pub fn tangent_basis_arm(x: &[f64], d: usize, rho: &RiemannWeights) -> Vec<Vec<f64>> {
    let n = x.len() / d;
    let mut out = Vec::with_capacity(n * (d - 1));
    for (i, xi) in x.chunks_exact(d).enumerate() {
        let candidates = (0..d).map(|k| {
            let mut e: Vec<f64> = xi.iter().map(|c| -c * xi[k]).collect();
            e[k] += 1.0;
            e
        });
        for local in orthonormalize(candidates, &vec![1.0; d], d - 1, 1e-8) {
            let mut v = vec![0.0; n * d];
            for k in 0..d {
                v[i * d + k] = local[k] / rho.as_slice()[i];
            }
            out.push(v);
        }
    }
    out
}

/// The extended opening map `(w, y) ↦ (σ(-w, yᵢ))ᵢ` on a flat `(w, y)` vector.
fn open_extended(point: &[f64], d: usize) -> Vec<f64> {
    let minus_w: Vec<f64> = point[..d].iter().map(|c| -c).collect();
    let mut out = vec![0.0; point.len() - d];
    for (yi, oi) in point[d..].chunks_exact(d).zip(out.chunks_exact_mut(d)) {
        shift_into(&minus_w, yi, oi);
    }
    out
}

fn flat_point(w: &BallPoint, y: &ClosedPolygon) -> Vec<f64> {
    let mut p = w.coords().to_vec();
    p.extend_from_slice(y.as_slice());
    p
}

/// Central difference of `f` at `p` in direction `v`.
fn directional(f: impl Fn(&[f64]) -> Vec<f64>, p: &[f64], v: &[f64], h: f64) -> Vec<f64> {
    let plus: Vec<f64> = p.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = p.iter().zip(v).map(|(a, b)| a - h * b).collect();
    f(&plus)
        .iter()
        .zip(f(&minus))
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect()
}

/// Projects each block of `v` onto the tangent space of the sphere at `xᵢ`.
fn project_to_arm(v: &mut [f64], x: &[f64], d: usize) {
    for (vi, xi) in v.chunks_exact_mut(d).zip(x.chunks_exact(d)) {
        let c = dot(vi, xi);
        vi.iter_mut().zip(xi).for_each(|(a, b)| *a -= c * b);
    }
}

fn gram_det(vectors: &[Vec<f64>], g: &[f64]) -> f64 {
    let m = vectors.len();
    DMatrix::from_fn(m, m, |a, b| inner(g, &vectors[a], &vectors[b])).determinant()
}

fn rho_metric(d: usize, rho: &RiemannWeights) -> Vec<f64> {
    metric_g1(d, rho)[d..].to_vec()
}

fn check_step(step: f64) -> Result<()> {
    if !(1e-6..=1e-4).contains(&step) {
        return Err(Error::Domain {
            value: step,
            domain: "[1e-6, 1e-4]",
        });
    }
    Ok(())
}

/// `√det(Dop* Dop)` by central differences along a `g₁`-orthonormal basis of
/// the tangent space of `𝔹 × Pol`.
pub fn numeric_jacobian_opening(
    w: &BallPoint,
    y: &ClosedPolygon,
    r: &EdgeLengths,
    rho: &RiemannWeights,
    step: f64,
) -> Result<f64> {
    Ok(numeric_jacobian_squared(w, y, r, rho, step)?.sqrt())
}

fn numeric_jacobian_squared(
    w: &BallPoint,
    y: &ClosedPolygon,
    r: &EdgeLengths,
    rho: &RiemannWeights,
    step: f64,
) -> Result<f64> {
    check_step(step)?;
    let d = y.d();
    let basis = tangent_basis_ball_pol(y, r, rho)?;
    let p = flat_point(w, y);
    let x = open_extended(&p, d);
    let images: Vec<Vec<f64>> = basis
        .iter()
        .map(|e| {
            let mut v = directional(|q| open_extended(q, d), &p, e, step);
            project_to_arm(&mut v, &x, d);
            v
        })
        .collect();
    Ok(gram_det(&images, &rho_metric(d, rho)))
}

/// `det(Z*Z)` for `Z = D_y op(w, ·)`, by central differences in `y` alone.
pub fn numeric_det_zz(w: &BallPoint, y: &ClosedPolygon, rho: &RiemannWeights, step: f64) -> Result<f64> {
    check_step(step)?;
    let d = y.d();
    let x = open_extended(&flat_point(w, y), d);
    let images: Vec<Vec<f64>> = tangent_basis_arm(y.as_slice(), d, rho)
        .iter()
        .map(|e| {
            let f = |q: &[f64]| {
                let mut full = w.coords().to_vec();
                full.extend_from_slice(q);
                open_extended(&full, d)
            };
            let mut v = directional(f, y.as_slice(), e, step);
            project_to_arm(&mut v, &x, d);
            v
        })
        .collect();
    Ok(gram_det(&images, &rho_metric(d, rho)))
}

/// `det(P Ã* Ã P + I - P)` with `Ã = (c̃ | I)`, where `c̃ᵢ = b̃ᵢ⁻¹ ãᵢ` is
/// formed from the analytic partial derivatives of the shift map.
pub fn det_aa(w: &BallPoint, y: &ClosedPolygon, r: &EdgeLengths, rho: &RiemannWeights) -> Result<f64> {
    let p = projector_p(y, r, rho)?;
    let (n, d) = (y.n(), y.d());
    let minus_w: Vec<f64> = w.coords().iter().map(|c| -c).collect();
    let mut a_tilde = DMatrix::zeros(n * d, d * (n + 1));
    for (i, yi) in y.iter().enumerate() {
        let a_i = -shift_d1(&minus_w, yi);
        let b_i = shift_d2(&minus_w, yi);
        let c_i = b_i.lu().solve(&a_i).ok_or(Error::SingularGram)?;
        a_tilde.view_mut((i * d, 0), (d, d)).copy_from(&c_i);
        a_tilde.view_mut((i * d, d * (i + 1)), (d, d)).fill_with_identity();
    }
    // adjoint from g_ρ back to g₁
    let g = metric_g1(d, rho);
    let g_rho = DVector::from_vec(rho_metric(d, rho));
    let mut a_star = a_tilde.transpose();
    for k in 0..a_star.ncols() {
        a_star.column_mut(k).scale_mut(g_rho[k]);
    }
    for (k, gk) in g.iter().enumerate() {
        a_star.row_mut(k).scale_mut(gk.recip());
    }
    let dim = d * (n + 1);
    let m = &p * a_star * a_tilde * &p + DMatrix::identity(dim, dim) - &p;
    Ok(m.determinant())
}

/// `Πᵢ ((1 - |w|²)/|w + yᵢ|²)^(2(d-1))`.
pub fn det_zz_closed_form(w: &BallPoint, y: &ClosedPolygon) -> f64 {
    let d = y.d();
    y.iter()
        .map(|yi| crate::hyperbolic::conformal_factor(w.coords(), yi).powi(2 * (d as i32 - 1)))
        .product()
}

/// Length of the `SO(2)` orbit of a planar polygon under `g_ρ`, as the
/// length of an inscribed polyline with `segments` pieces.
pub fn orbit_length_so2(y: &ClosedPolygon, rho: &RiemannWeights, segments: usize) -> Result<f64> {
    if y.d() != 2 {
        return Err(Error::InvalidInput("the orbit check is planar".into()));
    }
    let g = rho_metric(2, rho);
    let rotate = |t: f64| -> Vec<f64> {
        let (s, c) = t.sin_cos();
        y.iter()
            .flat_map(|v| [c * v[0] - s * v[1], s * v[0] + c * v[1]])
            .collect()
    };
    let dt = std::f64::consts::TAU / segments as f64;
    let mut prev = rotate(0.0);
    let mut len = 0.0;
    for k in 1..=segments {
        let next = rotate(k as f64 * dt);
        let diff: Vec<f64> = next.iter().zip(&prev).map(|(a, b)| a - b).collect();
        len += inner(&g, &diff, &diff).sqrt();
        prev = next;
    }
    Ok(len)
}

/// A random point of `𝔹 × Pol`: a closed random arm and `w` uniform in the
/// ball of radius `max_radius`.
pub fn random_point<R: Rng + ?Sized>(
    rng: &mut R,
    r: &EdgeLengths,
    d: usize,
    max_radius: f64,
) -> Result<(BallPoint, ClosedPolygon)> {
    let (_, y) = loop {
        let x = sample_arm(rng, r.len(), d);
        if let Ok(closed) = close(&x, r, &SolverSettings::default()) {
            break closed;
        }
    };
    let dir = sample_arm(rng, 1, d);
    let radius = max_radius * rng.random::<f64>().powf(1.0 / d as f64);
    let w = BallPoint::new(dir.as_slice().iter().map(|c| c * radius).collect())?;
    Ok((w, y))
}

/// Outcome of one closed-form vs finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianCheck {
    pub closed_form: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

pub fn check_jacobian(
    w: &BallPoint,
    y: &ClosedPolygon,
    r: &EdgeLengths,
    rho: &RiemannWeights,
    step: f64,
) -> Result<JacobianCheck> {
    let closed_form = crate::weights::jacobian_opening(w, y, r, rho)?;
    let numeric = numeric_jacobian_opening(w, y, r, rho, step)?;
    Ok(JacobianCheck {
        closed_form,
        numeric,
        relative_error: ((numeric - closed_form) / closed_form).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{gram_summary, jacobian_opening};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cases(
        seed: u64,
        n: usize,
        d: usize,
        count: usize,
    ) -> Vec<(BallPoint, ClosedPolygon, EdgeLengths, RiemannWeights)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let r = EdgeLengths::new((0..n).map(|_| 0.5 + rng.random::<f64>()).collect())
                    .unwrap_or_else(|_| EdgeLengths::equilateral(n).unwrap());
                let rho = RiemannWeights::new((0..n).map(|_| 0.5 + rng.random::<f64>()).collect()).unwrap();
                let (w, y) = random_point(&mut rng, &r, d, 0.8).unwrap();
                (w, y, r, rho)
            })
            .collect()
    }

    #[test]
    fn constraint_matrix_shape_and_kernel() {
        for (_, y, r, rho) in cases(1, 5, 3, 5) {
            let b = build_constraint_matrix(&y, &r);
            assert_eq!((b.nrows(), b.ncols()), (3 + 5, 3 * 6));
            let g = metric_g1(3, &rho);
            let bbs = &b * constraint_adjoint(&b, &g);
            assert!(bbs.symmetric_eigenvalues().min() > 1e-6);
            for e in tangent_basis_ball_pol(&y, &r, &rho).unwrap() {
                assert!((&b * DVector::from_vec(e)).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn projectors_agree() {
        for &(n, d) in &[(3, 2), (4, 3), (6, 3), (5, 4)] {
            for (_, y, r, rho) in cases(2, n, d, 5) {
                let p = projector_p(&y, &r, &rho).unwrap();
                let p2 = projector_from_constraints(&y, &r, &rho).unwrap();
                assert!((&p - &p2).amax() < 1e-10);
                assert!((&p * &p - &p).amax() < 1e-10);
                assert!((build_constraint_matrix(&y, &r) * &p).amax() < 1e-10);
                // g₁-self-adjoint: G P = Pᵀ G
                let g = DMatrix::from_diagonal(&DVector::from_vec(metric_g1(d, &rho)));
                assert!((&g * &p - p.transpose() * &g).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn gamma_matches_weighted_projector_sum() {
        for (_, y, r, rho) in cases(3, 6, 3, 10) {
            let gamma = gamma_assembled(&y, &r, &rho).unwrap();
            let g = gram_summary(&y, &r, &rho).unwrap().gram_r2_rho2;
            assert!((gamma - g).amax() < 1e-12);
        }
    }

    #[test]
    fn bases_are_orthonormal() {
        for (w, y, r, rho) in cases(4, 4, 3, 3) {
            let g = metric_g1(3, &rho);
            let basis = tangent_basis_ball_pol(&y, &r, &rho).unwrap();
            assert_eq!(basis.len(), 4 * 2);
            let x = open_extended(&flat_point(&w, &y), 3);
            let arm = tangent_basis_arm(&x, 3, &rho);
            assert_eq!(arm.len(), 8);
            let gr = rho_metric(3, &rho);
            for (set, metric) in [(&basis, &g), (&arm, &gr)] {
                for a in 0..set.len() {
                    for b in 0..set.len() {
                        let expect = if a == b { 1.0 } else { 0.0 };
                        assert!((inner(metric, &set[a], &set[b]) - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn numeric_jacobian_matches_closed_form() {
        for &(n, d) in &[(3, 2), (4, 3), (5, 2)] {
            for (w, y, r, rho) in cases(5, n, d, 5) {
                let c = check_jacobian(&w, &y, &r, &rho, 1e-5).unwrap();
                assert!(c.relative_error < 1e-6, "n={n} d={d}: {c:?}");
            }
        }
    }

    #[test]
    fn step_sizes_agree() {
        for (w, y, r, rho) in cases(6, 4, 3, 5) {
            let a = numeric_jacobian_opening(&w, &y, &r, &rho, 1e-5).unwrap();
            let b = numeric_jacobian_opening(&w, &y, &r, &rho, 1e-4).unwrap();
            assert!(((a - b) / a).abs() < 1e-5);
        }
        let (w, y, r, rho) = cases(6, 4, 3, 1).pop().unwrap();
        assert!(numeric_jacobian_opening(&w, &y, &r, &rho, 1e-2).is_err());
    }

    #[test]
    fn factorization_pieces() {
        for &(n, d) in &[(3, 2), (4, 3), (5, 3)] {
            for (w, y, r, rho) in cases(7, n, d, 5) {
                let zz = numeric_det_zz(&w, &y, &rho, 1e-5).unwrap();
                let zz_exact = det_zz_closed_form(&w, &y);
                assert!(((zz - zz_exact) / zz_exact).abs() < 1e-8, "{zz} vs {zz_exact}");
                let aa = det_aa(&w, &y, &r, &rho).unwrap();
                let j2 = numeric_jacobian_squared(&w, &y, &r, &rho, 1e-5).unwrap();
                assert!(((aa * zz_exact - j2) / j2).abs() < 1e-6);
                let j = jacobian_opening(&w, &y, &r, &rho).unwrap();
                assert!(((aa * zz_exact).sqrt() / j - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn planar_orbit_volume() {
        let vol_so2 = std::f64::consts::TAU * 2f64.sqrt();
        for (_, y, r, rho) in cases(8, 5, 2, 10) {
            let e = gram_summary(&y, &r, &rho).unwrap().sigma_eigs;
            let expect = vol_so2 * ((e[0] + e[1]) / 2.0).sqrt();
            let got = orbit_length_so2(&y, &rho, 20_000).unwrap();
            assert!((got / expect - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn oracle_size_limit() {
        let (w, y, r, rho) = cases(9, 9, 2, 1).pop().unwrap();
        assert!(numeric_jacobian_opening(&w, &y, &r, &rho, 1e-5).is_err());
    }
}
