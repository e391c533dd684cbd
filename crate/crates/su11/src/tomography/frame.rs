//! Frame coefficients of the regularized group average.
//!
//! With a regularizer g the group average of |U>><<U| is diagonal in the
//! double index (m, n) with strictly positive entries
//!
//!   F_mn = 4 pi^2 sum_{p,p'} (-1)^{p+p'} c(p) c(p') I_g(m, n, p, p')
//!        = 4 pi^2 int sinh cosh g(theta) |<2m|U_theta|2n>|^2 dtheta,
//!
//! where I_g is the regularized kernel integral. For the default factor the
//! substitution x = 1/cosh^2(theta) gives
//!
//!   I_g = (1/2) int_0^1 x^{2n-p-p'+kappa-1/2} (1-x)^{p+p'+m-n} e^{-1/(1-x)} dx
//!
//! (the Jacobian contributes the 1/2 x^{-1/2} factor). Both evaluation paths
//! are computed and compared; their agreement and the positivity of every
//! entry certify the quadrature.

use super::regularizer::Regularizer;
use crate::error::TomoError;
use crate::fock::{c_kappa, matrix_element_closed, unitary_block_bch, Kappa, RepConfig};
use crate::group::HyperbolicParams;
use crate::quad;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

/// Which sector the table describes: a closed-form kappa sector or a general
/// truncated representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameSector {
    ClosedForm { kappa: Kappa },
    Rep { config: RepConfig },
}

impl FrameSector {
    pub fn kappa_value(&self) -> f64 {
        match self {
            FrameSector::ClosedForm { kappa } => kappa.value(),
            FrameSector::Rep { config } => config.kappa_eff(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FrameSector::ClosedForm { kappa } => match kappa {
                Kappa::Half => "closed-form-kappa-half".to_string(),
                Kappa::One => "closed-form-kappa-one".to_string(),
            },
            FrameSector::Rep { config } => format!("rep-{:?}-nmax-{}", config.kind, config.n_max),
        }
    }

    /// Matrix element <m|U_p|n> for this sector.
    pub(crate) fn block(&self, p: &HyperbolicParams, size: usize) -> nalgebra::DMatrix<num_complex::Complex64> {
        match self {
            FrameSector::ClosedForm { kappa } => {
                let mut u = nalgebra::DMatrix::zeros(size, size);
                for m in 0..size {
                    for n in 0..size {
                        u[(m, n)] = matrix_element_closed(*kappa, m, n, p);
                    }
                }
                u
            }
            FrameSector::Rep { config } => unitary_block_bch(config, p, size),
        }
    }
}

/// The diagonal frame table F_mn > 0 for m, n <= m_max.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameCoefficients {
    pub sector: FrameSector,
    pub m_max: usize,
    pub regularizer_id: String,
    pub regularizer_hash: String,
    pub quad_tol: f64,
    values: Vec<f64>,
}

impl FrameCoefficients {
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[m * (self.m_max + 1) + n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fingerprint of everything except the creation timestamp.
    pub fn fingerprint(&self) -> String {
        let key = format!(
            "sector={};m_max={};reg={};hash={};quad_tol={:e}",
            self.sector.label(),
            self.m_max,
            self.regularizer_id,
            self.regularizer_hash,
            self.quad_tol
        );
        let digest = Sha256::digest(key.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The regularized kernel integral I_{kappa,g}(m, n, p, p2).
///
/// For the default factor this is evaluated in x-space; for a general
/// regularizer the theta-space form
/// int sinh cosh g tanh^{2(p+p2)+2m-2n} cosh^{-(4n-2p-2p2+2kappa)} dtheta
/// is used. Both forms are the same integral under x = 1/cosh^2(theta).
pub fn i_kg(
    kappa: Kappa,
    m: usize,
    n: usize,
    p: usize,
    p2: usize,
    reg: &Regularizer,
) -> Result<f64, TomoError> {
    i_kg_value(kappa.value(), m, n, p, p2, reg, 1e-13)
}

fn i_kg_value(
    kappa: f64,
    m: usize,
    n: usize,
    p: usize,
    p2: usize,
    reg: &Regularizer,
    rel_tol: f64,
) -> Result<f64, TomoError> {
    let s = (p + p2) as f64;
    let tanh_pow = 2.0 * s + 2.0 * m as f64 - 2.0 * n as f64;
    if reg.is_default_form() {
        let x_pow = 2.0 * n as f64 - s + kappa - 0.5;
        let omx_pow = s + m as f64 - n as f64;
        let f = move |x: f64| {
            if x <= 0.0 || x >= 1.0 {
                return 0.0;
            }
            0.5 * x.powf(x_pow) * (1.0 - x).powf(omx_pow) * (-(1.0 - x).recip()).exp()
        };
        quad::integrate(f, 0.0, 1.0, 1e-300, rel_tol)
            .map(|r| r.value)
            .map_err(|e| TomoError::QuadratureFailure(e.to_string()))
    } else {
        let cosh_pow = 4.0 * n as f64 - 2.0 * s + 2.0 * kappa;
        let g = reg.clone();
        let f = move |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            t.sinh() * t.cosh() * g.g(t) * t.tanh().powf(tanh_pow) * t.cosh().powf(-cosh_pow)
        };
        quad::integrate(&f, 0.0, reg.support(), 1e-300, rel_tol)
            .map(|r| r.value)
            .map_err(|e| TomoError::QuadratureFailure(e.to_string()))
    }
}

/// F_mn by the signed double sum over the kernel integrals; the integrals
/// depend on p + p2 only, so they are evaluated once per diagonal.
fn frame_entry_double_sum(
    kappa: Kappa,
    m: usize,
    n: usize,
    reg: &Regularizer,
    rel_tol: f64,
) -> Result<f64, TomoError> {
    // convolution weights w_s = sum_{p+p2=s} (-1)^s c(p) c(p2)
    let c: Vec<f64> = (0..=n).map(|p| c_kappa(kappa, p, m, n)).collect();
    let mut total = 0.0;
    for s in 0..=(2 * n) {
        let mut w = 0.0;
        for p in s.saturating_sub(n)..=s.min(n) {
            w += c[p] * c[s - p];
        }
        if w == 0.0 {
            continue;
        }
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        let i = i_kg_value(kappa.value(), m, n, s, 0, reg, rel_tol)?;
        total += sign * w * i;
    }
    Ok(4.0 * PI * PI * total)
}

/// F_mn by the absolute-square single integral (the independent second path).
fn frame_entry_abs_square(
    kappa: Kappa,
    m: usize,
    n: usize,
    reg: &Regularizer,
    rel_tol: f64,
) -> Result<f64, TomoError> {
    let c: Vec<f64> = (0..=n).map(|p| c_kappa(kappa, p, m, n)).collect();
    let k = kappa.value();
    if reg.is_default_form() {
        // 4 pi^2 (1/2) int |sum_p (-1)^p c(p) ((1-x)/x)^p|^2
        //                 x^{2n+kappa-1/2} (1-x)^{m-n} e^{-1/(1-x)} dx
        let x_pow = 2.0 * n as f64 + k - 0.5;
        let omx_pow = m as f64 - n as f64;
        let f = move |x: f64| {
            if x <= 0.0 || x >= 1.0 {
                return 0.0;
            }
            let r = (1.0 - x) / x;
            let mut bracket = 0.0;
            let mut rp = 1.0;
            for (p, cp) in c.iter().enumerate() {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                bracket += sign * cp * rp;
                rp *= r;
            }
            0.5 * bracket
                * bracket
                * x.powf(x_pow)
                * (1.0 - x).powf(omx_pow)
                * (-(1.0 - x).recip()).exp()
        };
        quad::integrate(f, 0.0, 1.0, 1e-300, rel_tol)
            .map(|r| 4.0 * PI * PI * r.value)
            .map_err(|e| TomoError::QuadratureFailure(e.to_string()))
    } else {
        // 4 pi^2 int sinh cosh g |<2m|U_theta|2n>|^2 dtheta
        let g = reg.clone();
        let f = move |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let el = matrix_element_closed(kappa, m, n, &HyperbolicParams::new(t, 0.0, 0.0));
            t.sinh() * t.cosh() * g.g(t) * el.norm_sqr()
        };
        quad::integrate(&f, 0.0, reg.support(), 1e-300, rel_tol)
            .map(|r| 4.0 * PI * PI * r.value)
            .map_err(|e| TomoError::QuadratureFailure(e.to_string()))
    }
}

/// Build the frame table for a closed-form kappa sector.
///
/// Every entry is computed along both evaluation paths; disagreement beyond
/// 10 * quad_tol or a non-positive entry is reported as a failure. Internal
/// quadratures run well below quad_tol to absorb the sign-cancellation
/// amplification of the double sum.
pub fn frame_coefficients(
    kappa: Kappa,
    m_max: usize,
    reg: &Regularizer,
    quad_tol: f64,
) -> Result<FrameCoefficients, TomoError> {
    let rel_tol = (quad_tol * 1e-3).clamp(1e-14, 1e-10);
    let side = m_max + 1;
    let mut values = vec![0.0f64; side * side];
    for m in 0..side {
        for n in 0..side {
            let a = frame_entry_double_sum(kappa, m, n, reg, rel_tol)?;
            let b = frame_entry_abs_square(kappa, m, n, reg, rel_tol)?;
            if (a - b).abs() > 10.0 * quad_tol * (1.0 + a.abs()) {
                return Err(TomoError::QuadratureFailure(format!(
                    "two-path disagreement at ({m}, {n}): {a} vs {b}"
                )));
            }
            if !(a > 0.0) {
                return Err(TomoError::PositivityViolation { m, n, value: a });
            }
            values[m * side + n] = a;
        }
    }
    Ok(FrameCoefficients {
        sector: FrameSector::ClosedForm { kappa },
        m_max,
        regularizer_id: reg.id().to_string(),
        regularizer_hash: reg.description_hash(),
        quad_tol,
        values,
    })
}

/// Frame table for an arbitrary sector, evaluated from the exact truncated
/// matrix elements: F_mn = 4 pi^2 int sinh cosh g |W_mn(theta)|^2 dtheta.
pub fn frame_for_config(
    config: &RepConfig,
    m_max: usize,
    reg: &Regularizer,
    quad_tol: f64,
) -> Result<FrameCoefficients, TomoError> {
    let rel_tol = (quad_tol * 1e-2).clamp(1e-13, 1e-9);
    let side = m_max + 1;
    let mut values = vec![0.0f64; side * side];
    // one quadrature for the whole table: the integrand returns all entries
    let f = |theta: f64, out: &mut [f64]| {
        if theta <= 0.0 {
            return;
        }
        let block = unitary_block_bch(config, &HyperbolicParams::new(theta, 0.0, 0.0), side);
        let jac = theta.sinh() * theta.cosh() * reg.g(theta);
        for m in 0..side {
            for n in 0..side {
                out[m * side + n] = jac * block[(m, n)].norm_sqr();
            }
        }
    };
    let (vals, _err) = quad::integrate_vec(f, side * side, 0.0, reg.support(), 1e-300, rel_tol)
        .map_err(|e| TomoError::QuadratureFailure(e.to_string()))?;
    for m in 0..side {
        for n in 0..side {
            let v = 4.0 * PI * PI * vals[m * side + n];
            if !(v > 0.0) {
                return Err(TomoError::PositivityViolation { m, n, value: v });
            }
            values[m * side + n] = v;
        }
    }
    Ok(FrameCoefficients {
        sector: FrameSector::Rep { config: *config },
        m_max,
        regularizer_id: reg.id().to_string(),
        regularizer_hash: reg.description_hash(),
        quad_tol,
        values,
    })
}

/// Serialized cache file: header (sector, regularizer id and description
/// hash, m_max, quad_tol, creation time) plus the row-major table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameCacheFile {
    pub header: FrameCacheHeader,
    pub layout: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameCacheHeader {
    pub kappa: f64,
    pub sector: String,
    #[serde(flatten)]
    pub sector_spec: FrameSectorSpec,
    pub regularizer_id: String,
    pub regularizer_hash: String,
    pub m_max: usize,
    pub quad_tol: f64,
    pub created_unix: u64,
}

/// Machine-readable sector tag inside the cache header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameSectorSpec {
    pub sector_kind: FrameSector,
}

impl FrameCoefficients {
    pub fn to_cache_file(&self) -> FrameCacheFile {
        FrameCacheFile {
            header: FrameCacheHeader {
                kappa: self.sector.kappa_value(),
                sector: self.sector.label(),
                sector_spec: FrameSectorSpec { sector_kind: self.sector },
                regularizer_id: self.regularizer_id.clone(),
                regularizer_hash: self.regularizer_hash.clone(),
                m_max: self.m_max,
                quad_tol: self.quad_tol,
                created_unix: std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            },
            layout: "row-major".to_string(),
            values: self.values.clone(),
        }
    }

    pub fn from_cache_file(file: FrameCacheFile) -> Result<Self, TomoError> {
        let side = file.header.m_max + 1;
        if file.values.len() != side * side {
            return Err(TomoError::InvalidJob(format!(
                "cache table has {} values, expected {}",
                file.values.len(),
                side * side
            )));
        }
        Ok(FrameCoefficients {
            sector: file.header.sector_spec.sector_kind,
            m_max: file.header.m_max,
            regularizer_id: file.header.regularizer_id,
            regularizer_hash: file.header.regularizer_hash,
            quad_tol: file.header.quad_tol,
            values: file.values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernel_integral_pinned_values() {
        let reg = Regularizer::default_paper();
        // kappa = 1/2, m = n = p = p2 = 0: (1/2) int e^{-1/(1-x)} dx
        let v = i_kg(Kappa::Half, 0, 0, 0, 0, &reg).unwrap();
        assert_abs_diff_eq!(v, 7.424_775_338_796e-2, epsilon = 1e-12);
    }

    #[test]
    fn theta_form_matches_x_form() {
        // the same g registered without the default flag uses the theta form
        let generic = Regularizer::new(
            "exp-tanh-sech3-generic",
            "exp(-1/tanh(theta)^2)/cosh(theta)^3",
            |t: f64| {
                let tt = t.tanh();
                (-(tt * tt).recip()).exp() / t.cosh().powi(3)
            },
        )
        .unwrap();
        let default = Regularizer::default_paper();
        for &(kappa, m, n, p, p2) in &[
            (Kappa::Half, 0usize, 0usize, 0usize, 0usize),
            (Kappa::Half, 2, 1, 1, 0),
            (Kappa::One, 3, 3, 2, 1),
            (Kappa::Half, 1, 3, 2, 2),
            (Kappa::One, 0, 2, 1, 1),
        ] {
            let a = i_kg(kappa, m, n, p, p2, &default).unwrap();
            let b = i_kg(kappa, m, n, p, p2, &generic).unwrap();
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "({m},{n},{p},{p2}): {a} vs {b}");
        }
    }

    #[test]
    fn frame_pinned_and_positive() {
        let reg = Regularizer::default_paper();
        let f = frame_coefficients(Kappa::Half, 4, &reg, 1e-9).unwrap();
        // F_00 = 4 pi^2 I(0,0,0,0)
        assert_abs_diff_eq!(f.get(0, 0), 2.931_183_814_435, epsilon = 1e-8);
        assert_abs_diff_eq!(f.get(1, 0), 1.082_616_322_220, epsilon = 1e-8);
        // symmetric in (m, n) for this g
        assert_abs_diff_eq!(f.get(0, 1), f.get(1, 0), epsilon = 1e-10);
        assert!(f.values().iter().all(|&v| v > 0.0));

        let f1 = frame_coefficients(Kappa::One, 3, &reg, 1e-9).unwrap();
        assert_abs_diff_eq!(f1.get(0, 0), 1.385_721_607_849, epsilon = 1e-8);
    }

    #[test]
    fn rep_path_agrees_with_closed_form() {
        let reg = Regularizer::default_paper();
        let f_closed = frame_coefficients(Kappa::Half, 3, &reg, 1e-9).unwrap();
        let config = RepConfig::new(crate::fock::RepKind::SingleModeEven, 16).unwrap();
        let f_rep = frame_for_config(&config, 3, &reg, 1e-9).unwrap();
        for m in 0..=3 {
            for n in 0..=3 {
                assert!(
                    (f_closed.get(m, n) - f_rep.get(m, n)).abs() < 1e-8,
                    "({m},{n}): {} vs {}",
                    f_closed.get(m, n),
                    f_rep.get(m, n)
                );
            }
        }
    }

    #[test]
    fn cache_round_trip() {
        let reg = Regularizer::default_paper();
        let f = frame_coefficients(Kappa::Half, 2, &reg, 1e-9).unwrap();
        let file = f.to_cache_file();
        let json = serde_json::to_string(&file).unwrap();
        let back: FrameCacheFile = serde_json::from_str(&json).unwrap();
        let g = FrameCoefficients::from_cache_file(back).unwrap();
        assert_eq!(f.fingerprint(), g.fingerprint());
        assert_eq!(f.values(), g.values());
    }
}
