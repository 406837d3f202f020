//! SU(2) elements and the coordinate charts used throughout the crate.
//!
//! An element is stored as its complex coordinates `(z1, z2)`,
//!
//! ```text
//!     U = |  z1    z2  |
//!         | -z2*   z1* |
//! ```
//!
//! with `|z1|^2 + |z2|^2 = 1`. The embedding coordinates `(w, x, y, z)` are
//! related by `U = w + i x σx + i y σy + i z σz`, i.e. `z1 = w + i z` and
//! `z2 = y + i x`.
//!
//! The Euler chart is the z-y-z decomposition
//! `U = exp(iψσz/2) exp(iθσy/2) exp(iφσz/2)`, so that
//! `z1 = e^{i(ψ+φ)/2} cos θ/2` and `z2 = e^{i(ψ-φ)/2} sin θ/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm drift below this is silently renormalized; above it is rejected.
pub const RENORMALIZE_LIMIT: f64 = 1e-9;

/// Below this modulus a coordinate is treated as zero by the Euler chart.
const EULER_DEGENERATE: f64 = 1e-13;

pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// An element of SU(2) in complex coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSu2")]
pub struct Su2 {
    z1: Complex64,
    z2: Complex64,
}

/// Unchecked wire form; deserialization goes through [`Su2::new`].
#[derive(Deserialize)]
struct RawSu2 {
    z1: Complex64,
    z2: Complex64,
}

impl TryFrom<RawSu2> for Su2 {
    type Error = Error;

    fn try_from(raw: RawSu2) -> Result<Self> {
        Su2::new(raw.z1, raw.z2)
    }
}

impl Default for Su2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Su2 {
    pub const fn identity() -> Self {
        Su2 {
            z1: Complex64 { re: 1.0, im: 0.0 },
            z2: Complex64 { re: 0.0, im: 0.0 },
        }
    }

    /// Builds an element from complex coordinates, renormalizing small drift.
    ///
    /// Pairs whose squared norm is off by more than [`RENORMALIZE_LIMIT`] are
    /// rejected: they do not describe an SU(2) element.
    pub fn new(z1: Complex64, z2: Complex64) -> Result<Self> {
        let norm_sq = z1.norm_sqr() + z2.norm_sqr();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > RENORMALIZE_LIMIT {
            return Err(Error::NormViolation { norm_sq });
        }
        Ok(Self::scaled(z1, z2, norm_sq))
    }

    /// Builds an element from any non-zero pair by dividing by its norm.
    pub fn normalized(z1: Complex64, z2: Complex64) -> Result<Self> {
        let norm_sq = z1.norm_sqr() + z2.norm_sqr();
        if !(norm_sq.is_finite() && norm_sq > 0.0) {
            return Err(Error::NormViolation { norm_sq });
        }
        Ok(Self::scaled(z1, z2, norm_sq))
    }

    fn scaled(z1: Complex64, z2: Complex64, norm_sq: f64) -> Self {
        if norm_sq == 1.0 {
            return Su2 { z1, z2 };
        }
        let inv = norm_sq.sqrt().recip();
        Su2 {
            z1: z1 * inv,
            z2: z2 * inv,
        }
    }

    /// Used where the pair is unit-norm by construction (closed forms,
    /// products of unit elements). Re-normalizes anyway to stop drift from
    /// accumulating over long products.
    pub(crate) fn from_unit(z1: Complex64, z2: Complex64) -> Self {
        Self::scaled(z1, z2, z1.norm_sqr() + z2.norm_sqr())
    }

    /// `exp(i (angle/2) n̂·σ)` for the unit vector `n̂` along `axis`.
    ///
    /// With this convention the rotation `exp(iησz/2)` has complex
    /// coordinates `(e^{iη/2}, 0)`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let len = norm3(axis);
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::domain("rotation axis must be a non-zero vector"));
        }
        if !angle.is_finite() {
            return Err(Error::domain("rotation angle must be finite"));
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let [nx, ny, nz] = axis.map(|a| a / len);
        Ok(Self::from_unit(
            Complex64::new(c, s * nz),
            Complex64::new(s * ny, s * nx),
        ))
    }

    /// Haar-random element (uniform on the 3-sphere).
    pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            if let Ok(u) = Self::normalized(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])) {
                return u;
            }
        }
    }

    #[inline]
    pub fn z1(&self) -> Complex64 {
        self.z1
    }

    #[inline]
    pub fn z2(&self) -> Complex64 {
        self.z2
    }

    pub fn norm_sqr(&self) -> f64 {
        self.z1.norm_sqr() + self.z2.norm_sqr()
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Su2) -> Su2 {
        let (a1, a2) = (self.z1, self.z2);
        let (b1, b2) = (rhs.z1, rhs.z2);
        Su2::from_unit(a1 * b1 - a2 * b2.conj(), a1 * b2 + a2 * b1.conj())
    }

    /// The inverse `U†`.
    pub fn adjoint(&self) -> Su2 {
        Su2 {
            z1: self.z1.conj(),
            z2: -self.z2,
        }
    }

    /// `-U`, which is a distinct element of SU(2).
    pub fn neg(&self) -> Su2 {
        Su2 {
            z1: -self.z1,
            z2: -self.z2,
        }
    }

    /// `e^{iα}` applied to the first row: left multiplication by `exp(iασz)`.
    pub fn z_phase(&self, alpha: f64) -> Su2 {
        let p = Complex64::from_polar(1.0, alpha);
        Su2 {
            z1: self.z1 * p,
            z2: self.z2 * p,
        }
    }

    pub fn to_matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.z1, self.z2], [-self.z2.conj(), self.z1.conj()]]
    }

    /// `Re Tr[self† · other]`.
    pub fn re_trace_inner(&self, other: &Su2) -> f64 {
        2.0 * (self.z1.conj() * other.z1 + self.z2.conj() * other.z2).re
    }

    /// `(1/2) ‖self - other‖_F`.
    pub fn distance(&self, other: &Su2) -> f64 {
        let d = (self.z1 - other.z1).norm_sqr() + (self.z2 - other.z2).norm_sqr();
        (0.5 * d).sqrt()
    }

    /// Largest modulus difference over the two complex coordinates.
    pub fn max_coord_error(&self, other: &Su2) -> f64 {
        (self.z1 - other.z1).norm().max((self.z2 - other.z2).norm())
    }

    /// The adjoint rotation `R(U)`: `σ·(R v) = U (σ·v) U†`.
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let u = self.to_matrix();
        let m = [
            [Complex64::new(v[2], 0.0), Complex64::new(v[0], -v[1])],
            [Complex64::new(v[0], v[1]), Complex64::new(-v[2], 0.0)],
        ];
        let um = mat_mul(&u, &m);
        let ud = self.adjoint().to_matrix();
        let r = mat_mul(&um, &ud);
        [r[1][0].re, r[1][0].im, r[0][0].re]
    }

    pub fn to_embedding(&self) -> EmbeddingCoords {
        EmbeddingCoords {
            w: self.z1.re,
            x: self.z2.im,
            y: self.z2.re,
            z: self.z1.im,
        }
    }

    pub fn from_embedding(r: &EmbeddingCoords) -> Result<Self> {
        Self::new(Complex64::new(r.w, r.z), Complex64::new(r.y, r.x))
    }

    /// Euler coordinates with `θ ∈ [0, π]`. Where only `ψ ± φ` is defined
    /// (`z1 = 0` or `z2 = 0`) the gauge `φ = 0` is used.
    pub fn to_euler(&self) -> EulerCoords {
        let (m1, m2) = (self.z1.norm(), self.z2.norm());
        let theta = 2.0 * m2.atan2(m1);
        if m2 < EULER_DEGENERATE {
            return EulerCoords {
                psi: 2.0 * self.z1.arg(),
                theta,
                phi: 0.0,
            };
        }
        if m1 < EULER_DEGENERATE {
            return EulerCoords {
                psi: 2.0 * self.z2.arg(),
                theta,
                phi: 0.0,
            };
        }
        let (a1, a2) = (self.z1.arg(), self.z2.arg());
        EulerCoords {
            psi: a1 + a2,
            theta,
            phi: a1 - a2,
        }
    }

    pub fn from_euler(e: &EulerCoords) -> Self {
        let (s, c) = (0.5 * e.theta).sin_cos();
        Self::from_unit(
            Complex64::from_polar(c, 0.5 * (e.psi + e.phi)),
            Complex64::from_polar(s, 0.5 * (e.psi - e.phi)),
        )
    }

    /// The Hopf projection `p̂(U) = ⟨↑| U σ U† |↑⟩`.
    ///
    /// Its spherical-polar angles are the Euler `(θ, φ)` of `U`, and it is
    /// unchanged by left multiplication with `exp(iασz)`.
    pub fn hopf_project(&self) -> S2Point {
        let c = self.z1 * self.z2.conj();
        S2Point::from_unit([2.0 * c.re, 2.0 * c.im, self.z1.norm_sqr() - self.z2.norm_sqr()])
    }
}

impl std::ops::Mul for Su2 {
    type Output = Su2;

    fn mul(self, rhs: Su2) -> Su2 {
        Su2::mul(&self, &rhs)
    }
}

fn mat_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Real 4-vector `(w, x, y, z)` on the unit 3-sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCoords {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EmbeddingCoords {
    pub fn as_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// The orthonormal tangent frame `L_x, L_y, L_z` at this point.
    pub fn tangent_frame(&self) -> TangentFrame {
        let EmbeddingCoords { w, x, y, z } = *self;
        TangentFrame {
            lx: [-x, w, z, -y],
            ly: [-y, -z, w, x],
            lz: [-z, y, -x, w],
        }
    }
}

/// Tangent vectors of the 3-sphere, ordered as `(w, x, y, z)` components.
///
/// Under the control field `n̂`, the embedding point moves as
/// `ṙ = n_x L_x + n_y L_y + n_z L_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentFrame {
    pub lx: [f64; 4],
    pub ly: [f64; 4],
    pub lz: [f64; 4],
}

/// z-y-z Euler angles, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerCoords {
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
}

/// Unit vector on the two-sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct S2Point {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl S2Point {
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = norm3(v);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::domain("cannot normalize a zero vector onto S^2"));
        }
        Ok(S2Point::from_unit(v.map(|c| c / n)))
    }

    pub(crate) fn from_unit(v: [f64; 3]) -> Self {
        S2Point {
            px: v[0],
            py: v[1],
            pz: v[2],
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.px, self.py, self.pz]
    }

    /// Great-circle distance to `other`, radians.
    pub fn angle_to(&self, other: &S2Point) -> f64 {
        let a = self.as_array();
        let b = other.as_array();
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        norm3(cross).atan2(dot)
    }
}

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projected {
    Finite(Complex64),
    Infinity,
}

impl Projected {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Projected::Finite(z) => Some(z),
            Projected::Infinity => None,
        }
    }

    fn from_ratio(num: Complex64, den: Complex64) -> Self {
        // a denominator at rounding level relative to the numerator is a pole
        if den.norm() <= 4.0 * f64::EPSILON * num.norm() || den == Complex64::new(0.0, 0.0) {
            return Projected::Infinity;
        }
        let q = num / den;
        if q.re.is_finite() && q.im.is_finite() {
            Projected::Finite(q)
        } else {
            Projected::Infinity
        }
    }
}

/// Stereographic projection from the south pole: `(px + i py) / (1 + pz)`.
///
/// For `p = p̂(U)` this evaluates to `conj(z2 / z1)`.
pub fn stereographic_south(p: &S2Point) -> Projected {
    Projected::from_ratio(Complex64::new(p.px, p.py), Complex64::new(1.0 + p.pz, 0.0))
}

/// Stereographic projection from the north pole: `(px + i py) / (1 - pz)`.
///
/// For `p = p̂(U)` this evaluates to `z1 / z2`.
pub fn stereographic_north(p: &S2Point) -> Projected {
    Projected::from_ratio(Complex64::new(p.px, p.py), Complex64::new(1.0 - p.pz, 0.0))
}

/// The Möbius image `f(e^{2iαt})`, `f(z) = e^{-iφ₀}(z - 1)/(β₊ z + β₋)`,
/// with `α = (1 + ω²/4)^{1/2}` and `β± = α ± ω/2`.
///
/// Along the time-optimal path with parameters `(φ₀, ω)` this equals
/// `z2/z1`, the complex conjugate of [`stereographic_south`] applied to
/// the Hopf projection.
pub fn mobius_image(omega: f64, phi0: f64, t: f64) -> Projected {
    let alpha = (1.0 + 0.25 * omega * omega).sqrt();
    let (bp, bm) = (alpha + 0.5 * omega, alpha - 0.5 * omega);
    let z = Complex64::from_polar(1.0, 2.0 * alpha * t);
    let num = Complex64::from_polar(1.0, -phi0) * (z - 1.0);
    Projected::from_ratio(num, z * bp + bm)
}

/// Polyline length of a path on S², measured along great circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcLength {
    pub length: f64,
    /// Largest angular gap between consecutive samples.
    pub max_gap: f64,
    /// Set when some gap exceeds [`ArcLength::MAX_GAP`].
    pub too_sparse: bool,
}

impl ArcLength {
    pub const MAX_GAP: f64 = 0.1;
}

/// Length of the Hopf-projected path traced by `states`.
///
/// For a path obeying the planar constraint this is twice the elapsed time.
pub fn s2_arclength(states: &[Su2]) -> ArcLength {
    let pts: Vec<S2Point> = states.iter().map(Su2::hopf_project).collect();
    let mut length = 0.0;
    let mut max_gap: f64 = 0.0;
    for w in pts.windows(2) {
        let d = w[0].angle_to(&w[1]);
        length += d;
        max_gap = max_gap.max(d);
    }
    ArcLength {
        length,
        max_gap,
        too_sparse: max_gap > ArcLength::MAX_GAP,
    }
}

/// Largest distance from `points` to their least-squares plane.
pub fn plane_fit_residual(points: &[[f64; 3]]) -> f64 {
    if points.len() < 4 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for k in 0..3 {
            c[k] += p[k] / n;
        }
    }
    let mut cov = nalgebra::Matrix3::<f64>::zeros();
    for p in points {
        let d = nalgebra::Vector3::new(p[0] - c[0], p[1] - c[1], p[2] - c[2]);
        cov += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("3x3 matrix has eigenvalues");
    let normal = eig.eigenvectors.column(imin);
    points
        .iter()
        .map(|p| ((p[0] - c[0]) * normal[0] + (p[1] - c[1]) * normal[1] + (p[2] - c[2]) * normal[2]).abs())
        .fold(0.0, f64::max)
}

/// Largest distance from `points` to their least-squares line, relative to
/// the spread of the points along the line.
pub fn line_fit_residual(points: &[Complex64]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let n = points.len() as f64;
    let c: Complex64 = points.iter().sum::<Complex64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - c;
        sxx += d.re * d.re;
        sxy += d.re * d.im;
        syy += d.im * d.im;
    }
    // principal axis of the 2x2 scatter matrix
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let dir = Complex64::from_polar(1.0, angle);
    let (mut off, mut lo, mut hi) = (0.0_f64, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let d = (p - c) * dir.conj();
        off = off.max(d.im.abs());
        lo = lo.min(d.re);
        hi = hi.max(d.re);
    }
    if hi > lo {
        off / (hi - lo)
    } else {
        0.0
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}
