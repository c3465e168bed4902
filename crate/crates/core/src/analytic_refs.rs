//! Exact chord-length densities for small polygons, used as references for
//! sampled histograms.

use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Density of the chord skipping three edges of a random equilateral hexagon in `ℝ³`.
pub fn hexagon_eq_pdf(l: f64) -> f64 {
    if (0.0..=1.0).contains(&l) {
        l * l
    } else if l > 1.0 && l <= 3.0 {
        (l - 3.0).powi(2) / 4.0
    } else {
        0.0
    }
}

/// The same chord for edgelengths `(1, 1/2, 3/2, 1, 1, 1)`.
pub fn hexagon_neq_pdf(l: f64) -> f64 {
    if l > 0.0 && l <= 1.0 {
        0.8 * l * l
    } else if l > 1.0 && l <= 2.0 {
        0.4 * (3.0 - l)
    } else if l > 2.0 && l <= 3.0 {
        0.4 * (3.0 - l).powi(2)
    } else {
        0.0
    }
}

/// Complete elliptic integral of the second kind, `E(m) = ∫₀^{π/2} √(1 - m sin²θ) dθ`,
/// in the parameter convention. Any `m ≤ 1` is accepted.
pub fn ellip_e(m: f64) -> Result<f64> {
    if !(m <= 1.0) {
        return Err(Error::Domain {
            value: m,
            domain: "(-inf, 1]",
        });
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    // arithmetic-geometric mean with the Legendre correction sum
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    let mut sum = 0.5 * m;
    let mut pow = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        pow *= 2.0;
        sum += pow * c * c;
        let next_b = (a * b).sqrt();
        a = 0.5 * (a + b);
        b = next_b;
        if c.abs() <= f64::EPSILON * a {
            break;
        }
    }
    Ok(std::f64::consts::FRAC_PI_2 / a * (1.0 - sum))
}

fn tetragon_full_unnormalized(l: f64) -> f64 {
    let m = -(l * l - 4.0).powi(2) / (16.0 * l * l);
    8.0 * l * (4.0 - l * l).sqrt() * ellip_e(m).expect("m is negative")
}

fn tetragon_full_constant() -> f64 {
    static CONSTANT: OnceLock<f64> = OnceLock::new();
    *CONSTANT.get_or_init(|| {
        // ℓ = 2 sin θ removes the square-root endpoint behavior
        integrate(
            |t| {
                let (s, c) = t.sin_cos();
                tetragon_full_unnormalized(2.0 * s) * 2.0 * c
            },
            0.0,
            std::f64::consts::FRAC_PI_2,
        )
    })
}

/// Chord `ℓ(v₁, v₃)` density of a random equilateral quadrilateral in `ℝ³`
/// under the full measure, proportional to `8ℓ√(4-ℓ²) E(-(ℓ²-4)²/(16ℓ²))`
/// and normalized numerically.
pub fn tetragon_full_pdf(l: f64) -> Result<f64> {
    if !(l > 0.0 && l < 2.0) {
        return Err(Error::Domain {
            value: l,
            domain: "(0, 2)",
        });
    }
    Ok(tetragon_full_unnormalized(l) / tetragon_full_constant())
}

/// The same chord under the shape measure: uniform on `(0, 2)`.
pub fn tetragon_quotient_pdf(l: f64) -> f64 {
    if l > 0.0 && l < 2.0 {
        0.5
    } else {
        0.0
    }
}

/// `∫ₐᵇ f` by tanh-sinh quadrature.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, 1e-13).integral
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferencePdf {
    HexagonEq,
    HexagonNeq,
    TetragonFull,
    TetragonQuotient,
}

impl ReferencePdf {
    pub const ALL: [ReferencePdf; 4] = [
        ReferencePdf::HexagonEq,
        ReferencePdf::HexagonNeq,
        ReferencePdf::TetragonFull,
        ReferencePdf::TetragonQuotient,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ReferencePdf::HexagonEq => "hexagon-eq",
            ReferencePdf::HexagonNeq => "hexagon-neq",
            ReferencePdf::TetragonFull => "tetragon-full",
            ReferencePdf::TetragonQuotient => "tetragon-quotient",
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            ReferencePdf::HexagonEq | ReferencePdf::HexagonNeq => (0.0, 3.0),
            ReferencePdf::TetragonFull | ReferencePdf::TetragonQuotient => (0.0, 2.0),
        }
    }

    /// The density, zero outside the support.
    pub fn density(&self, l: f64) -> f64 {
        match self {
            ReferencePdf::HexagonEq => hexagon_eq_pdf(l),
            ReferencePdf::HexagonNeq => hexagon_neq_pdf(l),
            ReferencePdf::TetragonFull => tetragon_full_pdf(l).unwrap_or(0.0),
            ReferencePdf::TetragonQuotient => tetragon_quotient_pdf(l),
        }
    }

    /// Mean density over `[a, b]`, the value a histogram bin estimates.
    pub fn bin_average(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.support();
        let (ca, cb) = (a.max(lo), b.min(hi));
        if cb <= ca {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut left = ca;
        for k in self
            .breakpoints()
            .iter()
            .copied()
            .filter(|&k| k > ca && k < cb)
            .chain([cb])
        {
            acc += integrate(|l| self.density(l), left, k);
            left = k;
        }
        acc / (b - a)
    }

    fn breakpoints(&self) -> &'static [f64] {
        match self {
            ReferencePdf::HexagonEq => &[1.0],
            ReferencePdf::HexagonNeq => &[1.0, 2.0],
            _ => &[],
        }
    }
}

impl FromStr for ReferencePdf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown reference density '{s}'")))
    }
}
