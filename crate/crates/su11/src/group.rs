//! Defining-representation SU(1,1) arithmetic.
//!
//! An element is stored as the complex pair (alpha, beta) of
//!
//! ```text
//!     M = | alpha    conj(beta) |        |alpha|^2 - |beta|^2 = 1,
//!         | beta     conj(alpha)|
//! ```
//!
//! which preserves the Hermitian form with metric P = diag(1, -1).
//! The hyperbolic parametrization used throughout the crate is
//! alpha = cosh(theta) e^{i phi}, beta = sinh(theta) e^{i psi}.

use crate::error::GroupError;
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::Mul;

/// Default tolerance for the defining-constraint checks, relative-scaled by
/// the squared matrix norm.
pub const TOL_GROUP: f64 = 1e-12;

/// i*sigma_x / 2 as a 2x2 matrix.
pub fn k_x() -> Matrix2<Complex64> {
    let i = Complex64::i();
    Matrix2::new(
        Complex64::ZERO,
        0.5 * i,
        0.5 * i,
        Complex64::ZERO,
    )
}

/// i*sigma_y / 2 as a 2x2 matrix.
pub fn k_y() -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::ZERO,
        Complex64::new(0.5, 0.0),
        Complex64::new(-0.5, 0.0),
        Complex64::ZERO,
    )
}

/// sigma_z / 2 as a 2x2 matrix.
pub fn k_z() -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::new(0.5, 0.0),
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::new(-0.5, 0.0),
    )
}

/// n.k = n_z k_z - n_x k_x - n_y k_y in the defining representation.
pub fn n_dot_k(n: [f64; 3]) -> Matrix2<Complex64> {
    k_z() * Complex64::new(n[2], 0.0) - k_x() * Complex64::new(n[0], 0.0) - k_y() * Complex64::new(n[1], 0.0)
}

/// Reduce an angle to [0, 2*pi).
pub fn wrap_angle(x: f64) -> f64 {
    let mut r = x % TAU;
    if r < 0.0 {
        r += TAU;
    }
    // x % TAU can return TAU - eps rounding to TAU after the shift
    if r >= TAU {
        r -= TAU;
    }
    r
}

/// Signed distance from `x` to `target` on the circle of circumference `modulus`.
pub fn circle_distance(x: f64, target: f64, modulus: f64) -> f64 {
    let mut d = (x - target) % modulus;
    if d < -0.5 * modulus {
        d += modulus;
    } else if d >= 0.5 * modulus {
        d -= modulus;
    }
    d
}

/// Hyperbolic coordinates (theta, phi, psi) of a group element.
///
/// theta >= 0, phi and psi reduced to [0, 2*pi). At theta = 0 the angle psi
/// is undefined; it is canonicalized to 0 so that the coordinates are unique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicParams {
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

impl HyperbolicParams {
    /// Canonicalize: angles wrapped to [0, 2*pi), psi = 0 at theta = 0.
    pub fn new(theta: f64, phi: f64, psi: f64) -> Self {
        assert!(theta >= 0.0, "hyperbolic radius must be non-negative, got {theta}");
        let psi = if theta == 0.0 { 0.0 } else { wrap_angle(psi) };
        HyperbolicParams { theta, phi: wrap_angle(phi), psi }
    }

    pub fn identity() -> Self {
        HyperbolicParams { theta: 0.0, phi: 0.0, psi: 0.0 }
    }
}

/// Point (t, x, y, z) on the unit hyperboloid t^2 + z^2 - x^2 - y^2 = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperboloidCoords {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HyperboloidCoords {
    pub fn constraint_residual(&self) -> f64 {
        self.t * self.t + self.z * self.z - self.x * self.x - self.y * self.y - 1.0
    }
}

/// Normalization class of a direction in the algebra: n.n = n_z^2 - n_x^2 - n_y^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormClass {
    /// n.n = +1 (compact one-parameter subgroup).
    Plus,
    /// n.n = -1 (non-compact boost subgroup).
    Minus,
    /// n.n = 0 (parabolic directions).
    Null,
}

/// A direction in the algebra together with its normalization class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDirection {
    pub n: [f64; 3],
    pub class: NormClass,
}

impl AlgebraDirection {
    /// Minkowski square n.n = n_z^2 - n_x^2 - n_y^2.
    pub fn minkowski_sq(n: [f64; 3]) -> f64 {
        n[2] * n[2] - n[0] * n[0] - n[1] * n[1]
    }

    /// Build from components, verifying n.n is within `tol` of +1, -1 or 0.
    pub fn new(nx: f64, ny: f64, nz: f64, tol: f64) -> Result<Self, GroupError> {
        let n = [nx, ny, nz];
        let sq = Self::minkowski_sq(n);
        let class = if (sq - 1.0).abs() <= tol {
            NormClass::Plus
        } else if (sq + 1.0).abs() <= tol {
            NormClass::Minus
        } else if sq.abs() <= tol {
            NormClass::Null
        } else {
            return Err(GroupError::UnnormalizedDirection { norm: sq, tol });
        };
        Ok(AlgebraDirection { n, class })
    }

    /// Rescale an arbitrary non-null direction so that n.n = +1 or -1,
    /// returning the scale factor that multiplies chi.
    pub fn normalized(nx: f64, ny: f64, nz: f64, tol: f64) -> Result<(Self, f64), GroupError> {
        let sq = Self::minkowski_sq([nx, ny, nz]);
        if sq.abs() <= tol {
            return Ok((AlgebraDirection { n: [nx, ny, nz], class: NormClass::Null }, 1.0));
        }
        let s = sq.abs().sqrt();
        Ok((
            AlgebraDirection::new(nx / s, ny / s, nz / s, 1e-9)?,
            s,
        ))
    }
}

/// Exponential-map region of an element, decided by its trace 2*Re(alpha).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpClass {
    /// |Tr| < 2: image of compact directions.
    OmegaPlus,
    /// Tr > 2: image of boost directions.
    OmegaMinus,
    /// Tr = 2: parabolic boundary sheet (contains the identity).
    OmegaZero,
    /// Tr < -2: reachable only as -M with M in OmegaMinus.
    MinusOmegaMinus,
    /// Tr = -2: reachable only as -M with M in OmegaZero.
    MinusOmegaZero,
}

/// An SU(1,1) element in the defining representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    alpha: Complex64,
    beta: Complex64,
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement { alpha: Complex64::ONE, beta: Complex64::ZERO }
    }

    /// Construct from the matrix entries, enforcing |alpha|^2 - |beta|^2 = 1.
    pub fn from_alpha_beta(alpha: Complex64, beta: Complex64) -> Result<Self, GroupError> {
        Self::from_alpha_beta_tol(alpha, beta, TOL_GROUP)
    }

    /// As [`GroupElement::from_alpha_beta`] with an explicit tolerance,
    /// relative-scaled by |alpha|^2 + |beta|^2.
    pub fn from_alpha_beta_tol(
        alpha: Complex64,
        beta: Complex64,
        tol: f64,
    ) -> Result<Self, GroupError> {
        let scale = (alpha.norm_sqr() + beta.norm_sqr()).max(1.0);
        let residual = alpha.norm_sqr() - beta.norm_sqr() - 1.0;
        if residual.abs() > tol * scale {
            return Err(GroupError::ConstraintViolation { residual, tol: tol * scale });
        }
        Ok(GroupElement { alpha, beta })
    }

    /// alpha = cosh(theta) e^{i phi}, beta = sinh(theta) e^{i psi}.
    pub fn from_angles(p: HyperbolicParams) -> Self {
        let (ch, sh) = (p.theta.cosh(), p.theta.sinh());
        GroupElement {
            alpha: Complex64::from_polar(ch, p.phi),
            beta: if sh == 0.0 { Complex64::ZERO } else { Complex64::from_polar(sh, p.psi) },
        }
    }

    /// Inverse of [`GroupElement::from_angles`]: theta = acosh|alpha|,
    /// phi = arg(alpha), psi = arg(beta), with psi = 0 when beta = 0 and
    /// arguments shifted from (-pi, pi] to [0, 2*pi).
    pub fn to_angles(&self) -> HyperbolicParams {
        let r = self.alpha.norm().max(1.0);
        let theta = r.acosh();
        let phi = wrap_angle(self.alpha.arg());
        let psi = if self.beta.norm_sqr() == 0.0 { 0.0 } else { wrap_angle(self.beta.arg()) };
        HyperbolicParams { theta, phi, psi }
    }

    /// Construct from hyperboloid coordinates; the caller supplies the sheet
    /// through the sign of `c.t`.
    pub fn from_hyperboloid(c: HyperboloidCoords) -> Result<Self, GroupError> {
        let residual = c.constraint_residual();
        let scale = (c.t * c.t + c.x * c.x + c.y * c.y + c.z * c.z).max(1.0);
        if residual.abs() > TOL_GROUP * scale {
            return Err(GroupError::HyperboloidViolation { residual });
        }
        Ok(GroupElement {
            alpha: Complex64::new(c.t, c.z),
            beta: Complex64::new(c.x, c.y),
        })
    }

    /// (t, x, y, z) with alpha = t + i z and beta = x + i y.
    pub fn to_hyperboloid(&self) -> HyperboloidCoords {
        HyperboloidCoords { t: self.alpha.re, x: self.beta.re, y: self.beta.im, z: self.alpha.im }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// Tr M = 2 Re(alpha) (always real).
    pub fn trace(&self) -> f64 {
        2.0 * self.alpha.re
    }

    /// Residual of the defining constraint |alpha|^2 - |beta|^2 - 1.
    pub fn constraint_residual(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr() - 1.0
    }

    /// The 2x2 matrix [[alpha, conj(beta)], [beta, conj(alpha)]].
    pub fn matrix(&self) -> Matrix2<Complex64> {
        Matrix2::new(self.alpha, self.beta.conj(), self.beta, self.alpha.conj())
    }

    /// Group law: the matrix product self * other.
    pub fn multiply(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            alpha: self.alpha * other.alpha + self.beta.conj() * other.beta,
            beta: self.beta * other.alpha + self.alpha.conj() * other.beta,
        }
    }

    /// Matrix inverse: (alpha, beta) -> (conj(alpha), -beta).
    pub fn inverse(&self) -> GroupElement {
        GroupElement { alpha: self.alpha.conj(), beta: -self.beta }
    }

    /// -M, which is again in the group.
    pub fn negate(&self) -> GroupElement {
        GroupElement { alpha: -self.alpha, beta: -self.beta }
    }

    /// Frobenius distance between the two defining matrices.
    pub fn frobenius_distance(&self, other: &GroupElement) -> f64 {
        let da = self.alpha - other.alpha;
        let db = self.beta - other.beta;
        (2.0 * (da.norm_sqr() + db.norm_sqr())).sqrt()
    }

    /// Exponential-map region from the trace rule, with boundary tolerance
    /// `TOL_GROUP`.
    pub fn classify(&self) -> ExpClass {
        self.classify_tol(TOL_GROUP)
    }

    pub fn classify_tol(&self, tol: f64) -> ExpClass {
        let t = self.alpha.re;
        if (t - 1.0).abs() <= tol {
            ExpClass::OmegaZero
        } else if (t + 1.0).abs() <= tol {
            ExpClass::MinusOmegaZero
        } else if t > 1.0 {
            ExpClass::OmegaMinus
        } else if t < -1.0 {
            ExpClass::MinusOmegaMinus
        } else {
            ExpClass::OmegaPlus
        }
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        self.multiply(&rhs)
    }
}

/// exp(i chi n.k) for a normalized direction.
///
/// Plus class:  cos(chi/2) 1 + i sin(chi/2) * 2 n.k
/// Minus class: cosh(chi/2) 1 + i sinh(chi/2) * 2 n.k
/// Null class:  1 + i chi n.k
pub fn exp_map(chi: f64, dir: &AlgebraDirection) -> GroupElement {
    let n = dir.n;
    // i * 2 n.k = n_x sigma_x + n_y sigma_y + i n_z sigma_z, so in
    // hyperboloid coordinates x = s*n_x, y = s*n_y, z = s*n_z with the
    // class-dependent amplitude s.
    let (t, s) = match dir.class {
        NormClass::Plus => ((0.5 * chi).cos(), (0.5 * chi).sin()),
        NormClass::Minus => ((0.5 * chi).cosh(), (0.5 * chi).sinh()),
        NormClass::Null => (1.0, 0.5 * chi),
    };
    GroupElement {
        alpha: Complex64::new(t, s * n[2]),
        beta: Complex64::new(s * n[0], s * n[1]),
    }
}

/// Result of [`log_map`]: `element = (-1)^negated * exp_map(chi, direction)`.
#[derive(Debug, Clone, Copy)]
pub struct LogDecomposition {
    pub chi: f64,
    pub direction: AlgebraDirection,
    pub negated: bool,
}

/// Total logarithm: every element is exp(i chi n.k) up to an overall sign.
///
/// Plus-class results are canonicalized to the upper sheet n_z >= 1 (using
/// the 4*pi periodicity in chi), so that the direction is always conjugate
/// to the z-axis.
pub fn log_map(m: &GroupElement) -> LogDecomposition {
    let class = m.classify();
    let negated = matches!(class, ExpClass::MinusOmegaMinus | ExpClass::MinusOmegaZero);
    let w = if negated { m.negate() } else { *m };
    let c = w.to_hyperboloid();

    match w.classify() {
        ExpClass::OmegaPlus => {
            let t = c.t.clamp(-1.0, 1.0);
            let half_chi = t.acos(); // in (0, pi)
            let s = (1.0 - t * t).sqrt();
            let mut chi = 2.0 * half_chi;
            let mut n = [c.x / s, c.y / s, c.z / s];
            if n[2] < 0.0 {
                // exp(i chi n.k) = exp(i (4 pi - chi) (-n).k)
                chi = 2.0 * TAU - chi;
                n = [-n[0], -n[1], -n[2]];
            }
            LogDecomposition {
                chi,
                direction: AlgebraDirection { n, class: NormClass::Plus },
                negated,
            }
        }
        ExpClass::OmegaMinus => {
            let half_chi = c.t.acosh();
            let s = (c.t * c.t - 1.0).sqrt();
            LogDecomposition {
                chi: 2.0 * half_chi,
                direction: AlgebraDirection {
                    n: [c.x / s, c.y / s, c.z / s],
                    class: NormClass::Minus,
                },
                negated,
            }
        }
        _ => {
            // parabolic sheet: M = 1 + i chi n.k with (x, y, z) = (chi/2) n
            let norm = c.z.abs();
            if norm == 0.0 {
                // identity (numerically x = y = 0 is forced when z = 0)
                return LogDecomposition {
                    chi: 0.0,
                    direction: AlgebraDirection { n: [1.0, 0.0, 1.0], class: NormClass::Null },
                    negated,
                };
            }
            LogDecomposition {
                chi: 2.0 * norm,
                direction: AlgebraDirection {
                    n: [c.x / norm, c.y / norm, c.z / norm],
                    class: NormClass::Null,
                },
                negated,
            }
        }
    }
}

/// Invariant-measure density 1/sqrt(1 + x^2 + y^2 - z^2) in (x, y, z).
pub fn haar_density_xyz(x: f64, y: f64, z: f64) -> Result<f64, GroupError> {
    let arg = 1.0 + x * x + y * y - z * z;
    if arg <= 0.0 {
        return Err(GroupError::DomainError { value: arg });
    }
    Ok(arg.sqrt().recip())
}

/// Invariant-measure density sinh(theta) cosh(theta) in (theta, phi, psi).
pub fn haar_density_angles(theta: f64) -> f64 {
    theta.sinh() * theta.cosh()
}

/// Coefficients of the triangular factorization
/// exp(xi K+ - conj(xi) K-) = exp(plus_coeff K+) * diag_base^{2 Kz} * exp(minus_coeff K-).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BchFactors {
    pub plus_coeff: Complex64,
    pub diag_base: f64,
    pub minus_coeff: Complex64,
}

/// Normal-order factorization: plus_coeff = (xi/|xi|) tanh|xi|,
/// diag_base = 1/cosh|xi|, minus_coeff = -conj(plus_coeff).
pub fn bch_factors(xi: Complex64) -> BchFactors {
    let r = xi.norm();
    if r == 0.0 {
        return BchFactors {
            plus_coeff: Complex64::ZERO,
            diag_base: 1.0,
            minus_coeff: Complex64::ZERO,
        };
    }
    let plus = (xi / r) * r.tanh();
    BchFactors { plus_coeff: plus, diag_base: r.cosh().recip(), minus_coeff: -plus.conj() }
}

/// Antinormal-order factorization:
/// exp(xi K+ - conj(xi) K-) = exp(minus_coeff K-) * diag_base^{2 Kz} * exp(plus_coeff K+)
/// with diag_base = cosh|xi|.
pub fn bch_factors_antinormal(xi: Complex64) -> BchFactors {
    let r = xi.norm();
    if r == 0.0 {
        return BchFactors {
            plus_coeff: Complex64::ZERO,
            diag_base: 1.0,
            minus_coeff: Complex64::ZERO,
        };
    }
    let plus = (xi / r) * r.tanh();
    BchFactors { plus_coeff: plus, diag_base: r.cosh(), minus_coeff: -plus.conj() }
}

/// k+ = k_x + i k_y and k- = k_x - i k_y in the defining representation.
pub fn k_plus() -> Matrix2<Complex64> {
    Matrix2::new(Complex64::ZERO, Complex64::i(), Complex64::ZERO, Complex64::ZERO)
}

pub fn k_minus() -> Matrix2<Complex64> {
    Matrix2::new(Complex64::ZERO, Complex64::ZERO, Complex64::i(), Complex64::ZERO)
}

/// Casimir k_z^2 - k_x^2 - k_y^2 in the defining representation; a scalar
/// multiple of the identity (3/4).
pub fn casimir_defining() -> Matrix2<Complex64> {
    let kz = k_z();
    let kx = k_x();
    let ky = k_y();
    kz * kz - kx * kx - ky * ky
}

/// e^{i a k_z} e^{b sigma_x} e^{i c k_z} in closed form:
/// alpha = cosh(b) e^{i(a+c)/2}, beta = sinh(b) e^{i(c-a)/2}.
pub fn zxz_element(a: f64, b: f64, c: f64) -> GroupElement {
    GroupElement {
        alpha: Complex64::from_polar(b.cosh(), 0.5 * (a + c)),
        beta: if b == 0.0 {
            Complex64::ZERO
        } else {
            Complex64::from_polar(b.sinh(), 0.5 * (c - a))
        },
    }
}

/// e^{i chi k_z} = diag(e^{i chi/2}, e^{-i chi/2}).
pub fn exp_kz(chi: f64) -> GroupElement {
    GroupElement { alpha: Complex64::from_polar(1.0, 0.5 * chi), beta: Complex64::ZERO }
}

/// e^{i chi k_x} = e^{-(chi/2) sigma_x}.
pub fn exp_kx(chi: f64) -> GroupElement {
    GroupElement {
        alpha: Complex64::new((0.5 * chi).cosh(), 0.0),
        beta: Complex64::new(-(0.5 * chi).sinh(), 0.0),
    }
}

/// Uniform-ish random element for tests and self-checks: theta from
/// |N(0, sigma)|, phi and psi uniform.
pub fn random_element<R: rand::Rng + ?Sized>(rng: &mut R, theta_scale: f64) -> GroupElement {
    let theta: f64 = {
        let u: f64 = rng.random::<f64>();
        let v: f64 = rng.random::<f64>();
        // Box-Muller half-normal
        (-2.0 * u.max(1e-300).ln()).sqrt() * (PI * v).cos().abs() * theta_scale
    };
    let phi = rng.random::<f64>() * TAU;
    let psi = rng.random::<f64>() * TAU;
    GroupElement::from_angles(HyperbolicParams::new(theta, phi, psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn mat_dist(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> f64 {
        (a - b).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Series exponential of a 2x2 matrix, used as an independent oracle.
    fn expm2(m: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let norm: f64 = m.iter().map(|c| c.norm()).sum();
        let k = (norm.log2().ceil().max(0.0) as u32) + 4;
        let scaled = m / Complex64::new(2f64.powi(k as i32), 0.0);
        let mut term = Matrix2::identity();
        let mut sum = Matrix2::identity();
        for j in 1..24 {
            term = term * scaled / Complex64::new(j as f64, 0.0);
            sum += term;
        }
        let mut out = sum;
        for _ in 0..k {
            out = out * out;
        }
        out
    }

    #[test]
    fn from_alpha_beta_accepts_and_rejects() {
        let m = GroupElement::from_alpha_beta(Complex64::ONE, Complex64::ZERO).unwrap();
        assert_eq!(m, GroupElement::identity());

        let m = GroupElement::from_alpha_beta(
            Complex64::new(1f64.cosh(), 0.0),
            Complex64::new(1f64.sinh(), 0.0),
        )
        .unwrap();
        assert_abs_diff_eq!(m.trace(), 3.086_161_269_630_487, epsilon = 1e-12);

        assert!(matches!(
            GroupElement::from_alpha_beta(Complex64::ONE, Complex64::ONE),
            Err(GroupError::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn from_angles_reference_values() {
        let m = GroupElement::from_angles(HyperbolicParams::new(0.0, 0.0, 0.0));
        assert_eq!(m, GroupElement::identity());

        let m = GroupElement::from_angles(HyperbolicParams::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(m.alpha().re, 1.543_080_634_815_243_7, epsilon = 1e-15);
        assert_abs_diff_eq!(m.beta().re, 1.175_201_193_643_801_4, epsilon = 1e-15);

        // pure phase element: alpha = i
        let m = GroupElement::from_angles(HyperbolicParams::new(0.0, PI / 2.0, 1.7));
        assert_abs_diff_eq!((m.alpha() - Complex64::i()).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(m.beta(), Complex64::ZERO);
    }

    #[test]
    fn to_angles_branches() {
        let p = GroupElement::from_alpha_beta(Complex64::i(), Complex64::ZERO)
            .unwrap()
            .to_angles();
        assert_abs_diff_eq!(p.theta, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.phi, PI / 2.0, epsilon = 1e-12);
        assert_eq!(p.psi, 0.0);

        let p0 = HyperbolicParams::new(1.3, 0.7, 2.1);
        let p1 = GroupElement::from_angles(p0).to_angles();
        assert_abs_diff_eq!(p0.theta, p1.theta, epsilon = 1e-10);
        assert_abs_diff_eq!(p0.phi, p1.phi, epsilon = 1e-10);
        assert_abs_diff_eq!(p0.psi, p1.psi, epsilon = 1e-10);
    }

    #[test]
    fn multiply_and_inverse() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = random_element(&mut rng, 1.0);
            let id = m.multiply(&m.inverse());
            assert!(id.frobenius_distance(&GroupElement::identity()) < 1e-12);
            assert!(m.multiply(&GroupElement::identity()) == m);
        }
        // same-axis boosts compose additively
        let b1 = GroupElement::from_angles(HyperbolicParams::new(1.0, 0.0, 0.0));
        let prod = b1.multiply(&b1);
        assert_abs_diff_eq!(prod.to_angles().theta, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn classify_regions() {
        let m = GroupElement::from_alpha_beta(Complex64::i(), Complex64::ZERO).unwrap();
        assert_eq!(m.classify(), ExpClass::OmegaPlus);

        let b = GroupElement::from_angles(HyperbolicParams::new(1.0, 0.0, 0.0));
        assert_eq!(b.classify(), ExpClass::OmegaMinus);
        assert_eq!(b.negate().classify(), ExpClass::MinusOmegaMinus);

        assert_eq!(GroupElement::identity().classify(), ExpClass::OmegaZero);
        assert_eq!(GroupElement::identity().negate().classify(), ExpClass::MinusOmegaZero);
    }

    #[test]
    fn exp_map_reference_cases() {
        let n = AlgebraDirection::new(0.0, 0.0, 1.0, 1e-12).unwrap();
        let m = exp_map(0.0, &n);
        assert_eq!(m, GroupElement::identity());

        // chi = pi about z: i sigma_z
        let m = exp_map(PI, &n);
        assert!((m.alpha() - Complex64::i()).norm() < 1e-15);
        assert!(m.beta().norm() < 1e-15);

        // boost: chi = 2 along x equals from_angles(1, 0, 0)
        let n = AlgebraDirection::new(1.0, 0.0, 0.0, 1e-12).unwrap();
        let m = exp_map(2.0, &n);
        let expected = GroupElement::from_angles(HyperbolicParams::new(1.0, 0.0, 0.0));
        assert!(m.frobenius_distance(&expected) < 1e-14);
    }

    #[test]
    fn exp_map_against_series_oracle() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..100 {
            let chi: f64 = rng.random::<f64>() * 3.0;
            let raw: [f64; 3] = [
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            ];
            let (dir, scale) = AlgebraDirection::normalized(raw[0], raw[1], raw[2], 1e-14).unwrap();
            if dir.class == NormClass::Null {
                continue;
            }
            let m = exp_map(chi * scale, &dir);
            let gen = n_dot_k(raw) * Complex64::new(0.0, chi);
            let oracle = expm2(&gen);
            assert!(mat_dist(&m.matrix(), &oracle) < 1e-12, "{chi} {raw:?}");
        }
    }

    #[test]
    fn log_map_round_trip_all_regions() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        let mut seen = [false; 5];
        for k in 0..500 {
            let m = if k % 5 == 4 {
                // parabolic sheet: exp of a null direction, occasionally negated
                let chi: f64 = rng.random::<f64>() * 3.0;
                let ang: f64 = rng.random::<f64>() * TAU;
                let dir =
                    AlgebraDirection::new(ang.cos(), ang.sin(), 1.0, 1e-12).unwrap();
                let e = exp_map(chi, &dir);
                if k % 2 == 0 {
                    e.negate()
                } else {
                    e
                }
            } else {
                let e = random_element(&mut rng, 1.2);
                if k % 2 == 0 {
                    e.negate()
                } else {
                    e
                }
            };
            let d = log_map(&m);
            let mut back = exp_map(d.chi, &d.direction);
            if d.negated {
                back = back.negate();
            }
            assert!(
                m.frobenius_distance(&back) < 1e-10 * (1.0 + m.matrix().norm()),
                "round trip failed: {m:?} -> {d:?}"
            );
            seen[match m.classify() {
                ExpClass::OmegaPlus => 0,
                ExpClass::OmegaMinus => 1,
                ExpClass::OmegaZero => 2,
                ExpClass::MinusOmegaMinus => 3,
                ExpClass::MinusOmegaZero => 4,
            }] = true;
        }
        assert!(seen.iter().all(|s| *s), "regions covered: {seen:?}");
    }

    #[test]
    fn log_map_reference_cases() {
        let d = log_map(&GroupElement::identity());
        assert_eq!(d.chi, 0.0);
        assert!(!d.negated);

        let b = GroupElement::from_angles(HyperbolicParams::new(1.0, 0.0, 0.0));
        let d = log_map(&b);
        assert_abs_diff_eq!(d.chi, 2.0, epsilon = 1e-12);
        assert_eq!(d.direction.class, NormClass::Minus);
        assert_abs_diff_eq!(d.direction.n[0], 1.0, epsilon = 1e-12);
        assert!(!d.negated);

        let d = log_map(&b.negate());
        assert_abs_diff_eq!(d.chi, 2.0, epsilon = 1e-12);
        assert!(d.negated);
    }

    #[test]
    fn haar_density_values() {
        assert_abs_diff_eq!(haar_density_xyz(0.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(haar_density_angles(0.0), 0.0);
        assert_abs_diff_eq!(haar_density_angles(1.0), 1.813_430_203_923_509, epsilon = 1e-12);
        assert!(haar_density_xyz(0.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn bch_reference_values() {
        let f = bch_factors(Complex64::ZERO);
        assert_eq!(f.plus_coeff, Complex64::ZERO);
        assert_eq!(f.diag_base, 1.0);

        let f = bch_factors(Complex64::ONE);
        assert_abs_diff_eq!(f.plus_coeff.re, 0.761_594_155_955_764_9, epsilon = 1e-15);
        assert_abs_diff_eq!(f.diag_base, 1.0 / 1f64.cosh(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.minus_coeff.re, -0.761_594_155_955_764_9, epsilon = 1e-15);

        let f = bch_factors(Complex64::new(0.0, 0.5));
        assert_abs_diff_eq!(f.plus_coeff.im, 0.5f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.minus_coeff.im, 0.5f64.tanh(), epsilon = 1e-15);
    }

    /// Three-factor product in the defining rep for both orderings.
    fn bch_product(xi: Complex64, antinormal: bool) -> Matrix2<Complex64> {
        let f = if antinormal { bch_factors_antinormal(xi) } else { bch_factors(xi) };
        let one = Matrix2::identity();
        let ep = one + k_plus() * f.plus_coeff;
        let em = one + k_minus() * f.minus_coeff;
        let d = Matrix2::new(
            Complex64::new(f.diag_base, 0.0),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(f.diag_base.recip(), 0.0),
        );
        if antinormal {
            em * d * ep
        } else {
            ep * d * em
        }
    }

    #[test]
    fn bch_identity_both_orders() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..500 {
            let r = rng.random::<f64>() * 5.0;
            let ang = rng.random::<f64>() * TAU;
            let xi = Complex64::from_polar(r, ang);
            // exp(xi k+ - conj(xi) k-) = exp_map(2|xi|, (-Im/|xi|, -Re/|xi|, 0))
            let dir = AlgebraDirection::new(-xi.im / r, -xi.re / r, 0.0, 1e-9).unwrap();
            let reference = exp_map(2.0 * r, &dir).matrix();
            let scale = 1.0 + reference.norm();
            for &anti in &[false, true] {
                let prod = bch_product(xi, anti);
                assert!(
                    mat_dist(&prod, &reference) < 1e-12 * scale,
                    "xi = {xi}, antinormal = {anti}"
                );
            }
        }
    }

    #[test]
    fn casimir_is_scalar_three_quarters() {
        let c = casimir_defining();
        let expected = Matrix2::identity() * Complex64::new(0.75, 0.0);
        assert!(mat_dist(&c, &expected) < 1e-15);
        // commutes with the generators
        for g in [k_x(), k_y(), k_z()] {
            assert!(mat_dist(&(c * g), &(g * c)) < 1e-15);
        }
        // conjugation invariance for random group elements
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        for _ in 0..20 {
            let u = random_element(&mut rng, 1.0).matrix();
            let uinv = random_element(&mut rng, 0.0).matrix(); // placeholder, replaced below
            let _ = uinv;
            let u_inv = u.try_inverse().unwrap();
            assert!(mat_dist(&(u * c * u_inv), &c) < 1e-12);
        }
    }

    #[test]
    fn zxz_identity() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(23);
        for _ in 0..200 {
            let p = HyperbolicParams::new(
                rng.random::<f64>() * 2.0,
                rng.random::<f64>() * TAU,
                rng.random::<f64>() * TAU,
            );
            let direct = GroupElement::from_angles(p);
            let zxz = zxz_element(p.phi - p.psi, p.theta, p.phi + p.psi);
            assert!(direct.frobenius_distance(&zxz) < 1e-12 * (1.0 + direct.matrix().norm()));
        }
    }

    #[test]
    fn group_closure_bulk() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        for _ in 0..10_000 {
            let a = random_element(&mut rng, 1.0);
            let b = random_element(&mut rng, 1.0);
            let c = a.multiply(&b);
            let scale = (c.alpha().norm_sqr() + c.beta().norm_sqr()).max(1.0);
            assert!(c.constraint_residual().abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn measure_change_of_variables() {
        // haar_density_xyz transported through the angle chart equals sinh cosh
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(41);
        for _ in 0..1000 {
            let theta = 0.05 + rng.random::<f64>() * 1.5;
            let phi = rng.random::<f64>() * TAU;
            let psi = rng.random::<f64>() * TAU;
            if (phi.cos()).abs() < 0.05 {
                continue; // chart is singular where t -> 0
            }
            let chart = |th: f64, ph: f64, ps: f64| -> [f64; 3] {
                [th.sinh() * ps.cos(), th.sinh() * ps.sin(), th.cosh() * ph.sin()]
            };
            let h = 1e-5;
            let mut jac = [[0.0f64; 3]; 3];
            let vars = [theta, phi, psi];
            for j in 0..3 {
                let mut vp = vars;
                let mut vm = vars;
                vp[j] += h;
                vm[j] -= h;
                let fp = chart(vp[0], vp[1], vp[2]);
                let fm = chart(vm[0], vm[1], vm[2]);
                for i in 0..3 {
                    jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
                - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
                + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
            let [x, y, z] = chart(theta, phi, psi);
            let lhs = haar_density_xyz(x, y, z).unwrap() * det.abs();
            let rhs = haar_density_angles(theta);
            assert!(
                (lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()),
                "theta={theta} phi={phi}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn measure_invariance_under_translation() {
        // the density transported by r -> s o r is preserved
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(43);
        for _ in 0..200 {
            let s = random_element(&mut rng, 0.5);
            let r = random_element(&mut rng, 0.5);
            let c0 = r.to_hyperboloid();
            // the (x, y, z) chart is singular where t -> 0 on either side;
            // there the density 1/|t| diverges and finite differences lose
            // the quoted accuracy
            if c0.t.abs() < 0.5 || s.multiply(&r).to_hyperboloid().t.abs() < 0.5 {
                continue;
            }
            let sheet = c0.t.signum();
            let map = |x: f64, y: f64, z: f64| -> [f64; 3] {
                let t = sheet * (1.0 + x * x + y * y - z * z).max(0.0).sqrt();
                let m = GroupElement {
                    alpha: Complex64::new(t, z),
                    beta: Complex64::new(x, y),
                };
                let p = s.multiply(&m).to_hyperboloid();
                [p.x, p.y, p.z]
            };
            let h = 1e-5;
            let vars = [c0.x, c0.y, c0.z];
            let mut jac = [[0.0f64; 3]; 3];
            for j in 0..3 {
                // fourth-order central stencil at step h
                let at = |offset: f64| {
                    let mut v = vars;
                    v[j] += offset;
                    map(v[0], v[1], v[2])
                };
                let (f_m2, f_m1, f_p1, f_p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
                for i in 0..3 {
                    jac[i][j] =
                        (f_m2[i] - 8.0 * f_m1[i] + 8.0 * f_p1[i] - f_p2[i]) / (12.0 * h);
                }
            }
            let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
                - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
                + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
            let img = s.multiply(&r).to_hyperboloid();
            let lhs = haar_density_xyz(img.x, img.y, img.z).unwrap() * det.abs();
            let rhs = haar_density_xyz(c0.x, c0.y, c0.z).unwrap();
            assert!(
                (lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()),
                "invariance failed: {lhs} vs {rhs}"
            );
        }
    }
}
