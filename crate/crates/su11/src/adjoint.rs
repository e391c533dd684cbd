//! Adjoint representation: the SO+(2,1) image of the group and the
//! conjugating elements reducing one-parameter subgroups to an axis.
//!
//! Basis convention: vectors are (x, y, z) coefficients in the plain
//! expansion m = c_x K_x + c_y K_y + c_z K_z, with the adjoint action
//! M (c . K) M^{-1} = (R c) . K. The Minkowski pairing used by the
//! exponential map, n.K = n_z K_z - n_x K_x - n_y K_y, differs by the
//! signature flip eta = diag(-1, -1, 1): a pairing vector n corresponds to
//! the plain coefficient vector eta n.

use crate::error::AdjointError;
use crate::group::{AlgebraDirection, GroupElement, HyperbolicParams, NormClass};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Minkowski form v.w = v_z w_z - v_x w_x - v_y w_y (basis order x, y, z).
pub fn minkowski_dot(v: &Vector3<f64>, w: &Vector3<f64>) -> f64 {
    v.z * w.z - v.x * w.x - v.y * w.y
}

/// The adjoint matrices ad(K_i) K_j = [K_i, K_j] in the (K_x, K_y, K_z) basis.
pub fn ad_matrices() -> (Matrix3<Complex64>, Matrix3<Complex64>, Matrix3<Complex64>) {
    let o = Complex64::ZERO;
    let i = Complex64::i();
    let ad_kx = Matrix3::new(o, o, o, o, o, -i, o, -i, o);
    let ad_ky = Matrix3::new(o, o, i, o, o, o, i, o, o);
    let ad_kz = Matrix3::new(o, -i, o, i, o, o, o, o, o);
    (ad_kx, ad_ky, ad_kz)
}

/// An element of SO+(2,1): det = 1, preserves the Minkowski form, R_33 >= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzElement(pub Matrix3<f64>);

impl LorentzElement {
    pub fn identity() -> Self {
        LorentzElement(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Residual of R^T eta R = eta with eta = diag(-1, -1, 1).
    pub fn form_residual(&self) -> f64 {
        let eta = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        let r = self.0.transpose() * eta * self.0 - eta;
        r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn compose(&self, other: &LorentzElement) -> LorentzElement {
        LorentzElement(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }
}

/// Rotation block exp(i w ad(K_z)) (real closed form).
fn rot(w: f64) -> Matrix3<f64> {
    let (s, c) = w.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Boost block exp(-2 i theta ad(K_x)) (real closed form).
fn boost_x(b: f64) -> Matrix3<f64> {
    let (ch, sh) = (b.cosh(), b.sinh());
    Matrix3::new(1.0, 0.0, 0.0, 0.0, ch, -sh, 0.0, -sh, ch)
}

/// R(theta, phi, psi) = exp(i(phi-psi) ad K_z) exp(-2 i theta ad K_x)
/// exp(i(phi+psi) ad K_z), the image of M(theta, phi, psi).
pub fn so21_from_params(p: &HyperbolicParams) -> LorentzElement {
    LorentzElement(rot(p.phi - p.psi) * boost_x(2.0 * p.theta) * rot(p.phi + p.psi))
}

/// Image of the z-axis under R(p):
/// (-sinh 2theta sin(phi-psi), -sinh 2theta cos(phi-psi), cosh 2theta).
pub fn z_axis_image(p: &HyperbolicParams) -> Vector3<f64> {
    let a = p.phi - p.psi;
    Vector3::new(
        -(2.0 * p.theta).sinh() * a.sin(),
        -(2.0 * p.theta).sinh() * a.cos(),
        (2.0 * p.theta).cosh(),
    )
}

/// Which axis the direction is conjugated to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConjAxis {
    Z,
    X,
}

impl ConjAxis {
    pub fn label(&self) -> char {
        match self {
            ConjAxis::Z => 'z',
            ConjAxis::X => 'x',
        }
    }
}

/// Parameters p with n.K = U_p^dag K_axis U_p.
///
/// Plus-class directions (upper sheet n_z >= 1) conjugate to the z-axis,
/// minus-class directions to the x-axis. The representative is one member of
/// a U(1) family: left-multiplying the conjugator by any e^{i delta k_z}
/// (axis z) or e^{i delta k_x} (axis x) yields another valid choice.
pub fn conjugating_element(
    dir: &AlgebraDirection,
) -> Result<(HyperbolicParams, ConjAxis), AdjointError> {
    let [nx, ny, nz] = dir.n;
    match dir.class {
        NormClass::Null => Err(AdjointError::NullDirection),
        NormClass::Plus => {
            if nz < 1.0 - 1e-12 {
                return Err(AdjointError::LowerSheet { nz });
            }
            // q maps the z-axis onto eta n: cosh 2t = n_z,
            // sin a = n_x / sinh 2t, cos a = n_y / sinh 2t
            let t = 0.5 * nz.max(1.0).acosh();
            let s = (2.0 * t).sinh();
            let a = if s > 0.0 { f64::atan2(nx, ny) } else { 0.0 };
            let q = GroupElement::from_angles(HyperbolicParams::new(t, a.rem_euclid(TAU), 0.0));
            Ok((q.inverse().to_angles(), ConjAxis::Z))
        }
        NormClass::Minus => {
            // q maps the x-axis onto eta n: with n = (cosh u cos v, cosh u sin v, sinh u),
            // q = e^{i w k_z} e^{i b k_y} for b = -asinh(n_z), cos w = -n_x/cosh b
            let b = -(nz.asinh());
            let w = f64::atan2(ny, -nx);
            let m_rot = GroupElement::from_angles(HyperbolicParams::new(
                0.0,
                (0.5 * w).rem_euclid(TAU),
                0.0,
            ));
            // e^{i b k_y}: alpha = cosh(b/2), beta = -i sinh(b/2)
            let m_boost = GroupElement::from_alpha_beta_tol(
                Complex64::new((0.5 * b).cosh(), 0.0),
                Complex64::new(0.0, -(0.5 * b).sinh()),
                1e-9,
            )
            .expect("hyperbolic pair satisfies the constraint");
            let q = m_rot.multiply(&m_boost);
            Ok((q.inverse().to_angles(), ConjAxis::X))
        }
    }
}
