//! Truncated Fock-space realizations of the su(1,1) algebra.
//!
//! Three sector families are provided, each with basis index m = 0..n_max:
//!
//! * single-mode even  |2m>        (K+ = a^dag^2/2, kappa = 1/2)
//! * single-mode odd   |2m+1>
//! * two-mode          |m+|delta|> |m>  (K+ = a^dag b^dag, kappa = |delta|+1)
//!
//! In every sector K_z is diagonal with entries m + z0 and K+ has a single
//! real subdiagonal, so the triangular factorization of the squeeze
//! exponential yields matrix elements that are *exact* at any truncation:
//! the (m, n) entry of exp(lambda+ K+) base^{2 K_z} exp(lambda- K-) only
//! involves levels up to max(m, n). The dense-exponential route
//! [`unitary_exp`] is kept as an independent cross-check; it pads the
//! truncation internally because exponentiating a hard-truncated generator
//! reflects outgoing amplitude at the boundary back into the interior.

use crate::error::FockError;
use crate::group::HyperbolicParams;
use crate::quad;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Trailing-row mass above which a truncation warning is reported.
pub const TRUNCATION_MASS_LIMIT: f64 = 1e-8;

/// Sector family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepKind {
    SingleModeEven,
    SingleModeOdd,
    TwoMode { delta: i64 },
}

/// A sector together with its truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepConfig {
    pub kind: RepKind,
    pub n_max: usize,
}

impl RepConfig {
    pub fn new(kind: RepKind, n_max: usize) -> Result<Self, FockError> {
        if n_max < 1 {
            return Err(FockError::DimensionMismatch { expected: 2, got: n_max + 1 });
        }
        Ok(RepConfig { kind, n_max })
    }

    /// Matrix side n_max + 1.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// K_z diagonal offset z0: K_z |m> = (m + z0) |m>.
    pub fn kz_offset(&self) -> f64 {
        match self.kind {
            RepKind::SingleModeEven => 0.25,
            RepKind::SingleModeOdd => 0.75,
            RepKind::TwoMode { delta } => (delta.unsigned_abs() as f64 + 1.0) / 2.0,
        }
    }

    /// kappa = 2 z0, the exponent governing the (1/cosh theta)^kappa decay
    /// of the lowest matrix element.
    pub fn kappa_eff(&self) -> f64 {
        2.0 * self.kz_offset()
    }

    /// Subdiagonal coefficient of K+: K+ |m> = raise_coeff(m) |m+1>.
    pub fn raise_coeff(&self, m: usize) -> f64 {
        let m = m as f64;
        match self.kind {
            RepKind::SingleModeEven => ((2.0 * m + 1.0) * (2.0 * m + 2.0)).sqrt() / 2.0,
            RepKind::SingleModeOdd => ((2.0 * m + 2.0) * (2.0 * m + 3.0)).sqrt() / 2.0,
            RepKind::TwoMode { delta } => {
                let d = delta.unsigned_abs() as f64;
                ((m + 1.0) * (m + d + 1.0)).sqrt()
            }
        }
    }

    /// Upper index of the interior window 0..=window used by the
    /// truncation-sensitive checks.
    pub fn interior_window(&self) -> usize {
        self.n_max / 2
    }
}

/// Truncated generator matrices of one sector.
#[derive(Debug, Clone)]
pub struct RepMatrices {
    pub k_x: DMatrix<Complex64>,
    pub k_y: DMatrix<Complex64>,
    pub k_z: DMatrix<Complex64>,
    pub config: RepConfig,
}

impl RepMatrices {
    pub fn k_plus(&self) -> DMatrix<Complex64> {
        &self.k_x + &self.k_y * Complex64::i()
    }

    pub fn k_minus(&self) -> DMatrix<Complex64> {
        &self.k_x - &self.k_y * Complex64::i()
    }
}

/// Build K_x, K_y, K_z for a sector at its truncation.
pub fn build_generators(config: &RepConfig) -> RepMatrices {
    let d = config.dim();
    let mut kp = DMatrix::<Complex64>::zeros(d, d);
    for n in 0..d - 1 {
        kp[(n + 1, n)] = Complex64::new(config.raise_coeff(n), 0.0);
    }
    let km = kp.adjoint();
    let k_x = (&kp + &km) * Complex64::new(0.5, 0.0);
    let k_y = (&kp - &km) * Complex64::new(0.0, -0.5);
    let mut k_z = DMatrix::<Complex64>::zeros(d, d);
    for n in 0..d {
        k_z[(n, n)] = Complex64::new(n as f64 + config.kz_offset(), 0.0);
    }
    RepMatrices { k_x, k_y, k_z, config: *config }
}

/// A sector unitary U_{theta,phi,psi} as a truncated matrix.
#[derive(Debug, Clone)]
pub struct SectorUnitary {
    pub matrix: DMatrix<Complex64>,
    pub params: HyperbolicParams,
    pub config: RepConfig,
    /// Squared mass of the last row over the interior columns; large values
    /// mean interior states leak past the truncation under this unitary.
    pub trailing_mass: f64,
}

impl SectorUnitary {
    pub fn truncation_ok(&self) -> bool {
        self.trailing_mass <= TRUNCATION_MASS_LIMIT
    }
}

/// Triangular-factorization coefficients for given parameters.
struct SqueezeCoeffs {
    lambda_plus: Complex64,
    lambda_minus: Complex64,
    base: f64,
}

fn squeeze_coeffs(p: &HyperbolicParams) -> SqueezeCoeffs {
    // xi = -i theta e^{-i(psi - phi)}
    let xi = Complex64::from_polar(p.theta, -(p.psi - p.phi) - 0.5 * PI);
    let f = crate::group::bch_factors(xi);
    SqueezeCoeffs { lambda_plus: f.plus_coeff, lambda_minus: f.minus_coeff, base: f.diag_base }
}

/// Top-left `size` x `size` block of U_{theta,phi,psi}; entries are exact at
/// any truncation because the factorization only couples downward levels.
pub fn unitary_block_bch(
    config: &RepConfig,
    p: &HyperbolicParams,
    size: usize,
) -> DMatrix<Complex64> {
    let b = size;
    let z0 = config.kz_offset();
    let mut u = DMatrix::<Complex64>::zeros(b, b);
    if p.theta == 0.0 {
        for n in 0..b {
            u[(n, n)] = Complex64::from_polar(1.0, 2.0 * p.phi * (n as f64 + z0));
        }
        return u;
    }
    let c = squeeze_coeffs(p);
    let cvec: Vec<f64> = (0..b.saturating_sub(1)).map(|n| config.raise_coeff(n)).collect();

    // ls[m][i] = exp(l+ K+)[m,i] * base^(i+z0); rs[i][n] analogous
    let mut ls = vec![vec![Complex64::ZERO; b]; b];
    let mut rs = vec![vec![Complex64::ZERO; b]; b];
    for m in 0..b {
        ls[m][m] = Complex64::new(c.base.powf(m as f64 + z0), 0.0);
        for i in (0..m).rev() {
            let factor = c.lambda_plus * cvec[i] / ((m - i) as f64 * c.base);
            ls[m][i] = ls[m][i + 1] * factor;
        }
    }
    for n in 0..b {
        rs[n][n] = Complex64::new(c.base.powf(n as f64 + z0), 0.0);
        for i in (0..n).rev() {
            let factor = c.lambda_minus * cvec[i] / ((n - i) as f64 * c.base);
            rs[i][n] = rs[i + 1][n] * factor;
        }
    }
    for m in 0..b {
        for n in 0..b {
            let mut s = Complex64::ZERO;
            for i in 0..=m.min(n) {
                s += ls[m][i] * rs[i][n];
            }
            u[(m, n)] = s * Complex64::from_polar(1.0, 2.0 * p.phi * (n as f64 + z0));
        }
    }
    u
}

fn trailing_mass_of(config: &RepConfig, u: &DMatrix<Complex64>) -> f64 {
    // squeezing amplifies the occupied level by roughly cosh(2 theta), so the
    // warning watches columns up to n_max/4 (the 4x-headroom convention)
    let last = config.n_max;
    (0..=config.n_max / 4).map(|n| u[(last, n)].norm_sqr()).sum()
}

/// U = exp(xi K+ - conj(xi) K-) exp(2 i phi K_z) via the triangular
/// factorization (the primary construction).
pub fn unitary_bch(config: &RepConfig, p: &HyperbolicParams) -> SectorUnitary {
    let u = unitary_block_bch(config, p, config.dim());
    let trailing_mass = trailing_mass_of(config, &u);
    SectorUnitary { matrix: u, params: *p, config: *config, trailing_mass }
}

/// Dense-exponential cross-check oracle.
///
/// The generator is exponentiated at an internally padded truncation (grown
/// until the returned block is stable to 1e-12) and the requested block is
/// returned; exponentiating at the bare n_max reflects outgoing amplitude at
/// the boundary back into the interior.
pub fn unitary_exp(config: &RepConfig, p: &HyperbolicParams) -> SectorUnitary {
    let d = config.dim();
    if p.theta == 0.0 {
        return unitary_bch(config, p);
    }

    let block_at = |pad_dim: usize| -> DMatrix<Complex64> {
        let z0 = config.kz_offset();
        // exp(xi K+ - conj(xi) K-) = D exp(i H') D^dag with D = diag(e^{i gamma n})
        // and H' real symmetric tridiagonal with off-diagonal theta * c_n
        let gamma = -(p.psi - p.phi) - PI; // arg(-i xi)
        let mut h = DMatrix::<f64>::zeros(pad_dim, pad_dim);
        for n in 0..pad_dim - 1 {
            let v = p.theta * config.raise_coeff(n);
            h[(n + 1, n)] = v;
            h[(n, n + 1)] = v;
        }
        let eig = nalgebra::linalg::SymmetricEigen::new(h);
        let phases: Vec<Complex64> =
            eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, l)).collect();
        let mut block = DMatrix::<Complex64>::zeros(d, d);
        for m in 0..d {
            for n in 0..d {
                let mut s = Complex64::ZERO;
                for k in 0..pad_dim {
                    s += phases[k] * eig.eigenvectors[(m, k)] * eig.eigenvectors[(n, k)];
                }
                let dphase = Complex64::from_polar(1.0, gamma * (m as f64 - n as f64));
                let zphase = Complex64::from_polar(1.0, 2.0 * p.phi * (n as f64 + z0));
                block[(m, n)] = s * dphase * zphase;
            }
        }
        block
    };

    // the padding is grown until the oracle window (the first n_max/4 + 1
    // levels, where entrywise agreement is asserted) is stable; entries
    // beyond that window keep residual reflection error at strong squeezing
    let window = (config.n_max / 4 + 1).min(d);
    let mut pad = 2 * d + 32;
    let mut block = block_at(pad);
    loop {
        let next_pad = (pad + (pad / 2).max(64)).min(4096);
        let next = block_at(next_pad);
        let dev = (&next - &block)
            .view((0, 0), (window, window))
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        block = next;
        pad = next_pad;
        if dev <= 1e-11 || pad >= 4096 {
            break;
        }
    }

    let trailing_mass = trailing_mass_of(config, &block);
    SectorUnitary { matrix: block, params: *p, config: *config, trailing_mass }
}

/// kappa label of the two closed-form sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kappa {
    /// kappa = 1/2: single-mode even states |2n>.
    Half,
    /// kappa = 1: two-mode states |n>|n>.
    One,
}

impl Kappa {
    pub fn value(&self) -> f64 {
        match self {
            Kappa::Half => 0.5,
            Kappa::One => 1.0,
        }
    }

    /// The sector realizing this closed form (truncation chosen by caller).
    pub fn rep_kind(&self) -> RepKind {
        match self {
            Kappa::Half => RepKind::SingleModeEven,
            Kappa::One => RepKind::TwoMode { delta: 0 },
        }
    }
}

fn ln_factorial(k: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0f64; 4096];
        for k in 2..t.len() {
            t[k] = t[k - 1] + (k as f64).ln();
        }
        t
    });
    table[k]
}

/// Combinatorial coefficient of the closed-form matrix element; zero when
/// p + m - n < 0 or 2n - 2p < 0 (annihilation below the vacuum).
pub fn c_kappa(kappa: Kappa, p: usize, m: usize, n: usize) -> f64 {
    let pm = p as i64 + m as i64 - n as i64;
    if pm < 0 || n < p {
        return 0.0;
    }
    let pm = pm as usize;
    match kappa {
        Kappa::Half => {
            // sqrt((2n)!(2m)!) / (p! (p+m-n)! (2n-2p)! 2^{2p+m-n})
            let ln = 0.5 * (ln_factorial(2 * n) + ln_factorial(2 * m))
                - ln_factorial(p)
                - ln_factorial(pm)
                - ln_factorial(2 * n - 2 * p)
                - (2 * p + m - n) as f64 * 2f64.ln();
            ln.exp()
        }
        Kappa::One => {
            // n! m! / (p! (p+m-n)! ((n-p)!)^2)
            let ln = ln_factorial(n) + ln_factorial(m)
                - ln_factorial(p)
                - ln_factorial(pm)
                - 2.0 * ln_factorial(n - p);
            ln.exp()
        }
    }
}

/// Closed-form matrix element <2m| U_{theta,phi,psi} |2n> of the kappa
/// sector: e^{i phi (2n+kappa)} e^{i (psi-phi)(n-m)} *
/// sum_p c_kappa(p) (-i tanh)^{2p+m-n} (1/cosh)^{2n-2p+kappa}.
pub fn matrix_element_closed(kappa: Kappa, m: usize, n: usize, p: &HyperbolicParams) -> Complex64 {
    let k = kappa.value();
    if p.theta == 0.0 {
        if m == n {
            return Complex64::from_polar(1.0, p.phi * (2.0 * n as f64 + k));
        }
        return Complex64::ZERO;
    }
    let t = p.theta.tanh();
    let sech = p.theta.cosh().recip();
    let mi_t = Complex64::new(0.0, -t); // -i tanh(theta)
    let mut sum = Complex64::ZERO;
    for q in 0..=n {
        let c = c_kappa(kappa, q, m, n);
        if c == 0.0 {
            continue;
        }
        let pow = 2 * q as i64 + m as i64 - n as i64;
        sum += c * mi_t.powi(pow as i32) * sech.powf((2 * n - 2 * q) as f64 + k);
    }
    let phase = Complex64::from_polar(1.0, p.phi * (2.0 * n as f64 + k))
        * Complex64::from_polar(1.0, (p.psi - p.phi) * (n as f64 - m as f64));
    phase * sum
}

/// Integrate f over [0, inf) where f decays like e^{-rate * theta}; the
/// upper cutoff grows until the analytic tail bound drops below 0.1% of the
/// accumulated integral.
fn integrate_with_tail<F: Fn(f64) -> f64>(f: F, rate: f64, rel_tol: f64) -> Result<f64, FockError> {
    let mut upper = (12.0 / rate.max(0.25)).clamp(12.0, 120.0);
    let mut acc = quad::integrate(&f, 0.0, upper, 1e-14, rel_tol)
        .map_err(|e| FockError::DivergenceDetected(e.to_string()))?
        .value;
    loop {
        let tail = f(upper).abs() / rate;
        if tail <= 1e-3 * acc.abs().max(1e-300) || upper >= 400.0 {
            break;
        }
        let chunk = quad::integrate(&f, upper, upper + 20.0, 1e-14, rel_tol)
            .map_err(|e| FockError::DivergenceDetected(e.to_string()))?
            .value;
        acc += chunk;
        upper += 20.0;
    }
    Ok(acc)
}

/// Occupied-level weights of a normalized state vector.
fn occupation_weights(
    config: &RepConfig,
    v: &DVector<Complex64>,
) -> Result<Vec<(usize, f64)>, FockError> {
    if v.len() != config.dim() {
        return Err(FockError::DimensionMismatch { expected: config.dim(), got: v.len() });
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(FockError::NotNormalized { norm });
    }
    Ok(v.iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let w = c.norm_sqr() / (norm * norm);
            (w > 1e-16).then_some((i, w))
        })
        .collect())
}

/// |W_{mn}(theta)|^2 for the required pairs, where W = U_{theta,0,0};
/// entries are exact at any truncation.
fn abs_sq_entries(config: &RepConfig, theta: f64, pairs: &[(usize, usize)]) -> Vec<f64> {
    let p = HyperbolicParams::new(theta, 0.0, 0.0);
    let size = pairs.iter().map(|&(m, n)| m.max(n)).max().unwrap_or(0) + 1;
    let block = unitary_block_bch(config, &p, size);
    pairs.iter().map(|&(m, n)| block[(m, n)].norm_sqr()).collect()
}

/// Numerically integrated formal dimension d = [ int dnu |<v|U|v>|^2 ]^{-1}.
///
/// The phi and psi integrals project onto sum_{m,n} w_m w_n |W_mn(theta)|^2
/// (w = |v|^2), leaving a single theta quadrature.
pub fn formal_dimension_numeric(
    config: &RepConfig,
    v: &DVector<Complex64>,
) -> Result<f64, FockError> {
    let rate = decay_exponent(config);
    if rate <= 0.0 {
        return Err(FockError::DivergenceDetected(divergence_diagnostic(config)));
    }
    let occ = occupation_weights(config, v)?;
    let pairs: Vec<(usize, usize)> =
        occ.iter().flat_map(|&(m, _)| occ.iter().map(move |&(n, _)| (m, n))).collect();
    let weights: Vec<f64> =
        occ.iter().flat_map(|&(_, wm)| occ.iter().map(move |&(_, wn)| wm * wn)).collect();

    let integrand = |theta: f64| -> f64 {
        let sq = abs_sq_entries(config, theta, &pairs);
        let s: f64 = sq.iter().zip(&weights).map(|(a, w)| a * w).sum();
        theta.sinh() * theta.cosh() * s
    };
    let integral = integrate_with_tail(integrand, rate, 1e-9)?;
    Ok((4.0 * PI * PI * integral).recip())
}

/// Decay exponent of the theta integrand of int dnu |<v|U|v>|^2: the
/// integrand behaves like e^{(2 - 2 kappa) theta}, so the integral converges
/// exactly when 2 kappa - 2 > 0.
fn decay_exponent(config: &RepConfig) -> f64 {
    2.0 * config.kappa_eff() - 2.0
}

fn divergence_diagnostic(config: &RepConfig) -> String {
    format!(
        "theta integrand ~ sinh(theta) cosh(theta) / cosh(theta)^{} = e^{{{:+.1} theta}} does not decay \
         (the p + p' = 2n term of the squared matrix element)",
        2.0 * config.kappa_eff(),
        -decay_exponent(config),
    )
}

/// Square-summability verdict for a sector.
#[derive(Debug, Clone)]
pub enum Summability {
    Convergent { formal_dimension: f64 },
    Divergent { diagnostic: String },
}

/// Exponent-counting dichotomy: single-mode even and two-mode delta = 0
/// diverge; single-mode odd and two-mode |delta| >= 1 converge, and the
/// formal dimension is integrated numerically on the lowest basis state.
pub fn square_summability_check(config: &RepConfig) -> Summability {
    if decay_exponent(config) <= 0.0 {
        return Summability::Divergent { diagnostic: divergence_diagnostic(config) };
    }
    let mut v = DVector::<Complex64>::zeros(config.dim());
    v[0] = Complex64::ONE;
    match formal_dimension_numeric(config, &v) {
        Ok(d) => Summability::Convergent { formal_dimension: d },
        Err(e) => Summability::Divergent { diagnostic: e.to_string() },
    }
}

/// U_{theta,phi,psi} v together with the trailing mass of the applied
/// unitary (a warning-grade truncation indicator).
pub fn coherent_state(
    config: &RepConfig,
    p: &HyperbolicParams,
    v: &DVector<Complex64>,
) -> Result<(DVector<Complex64>, f64), FockError> {
    if v.len() != config.dim() {
        return Err(FockError::DimensionMismatch { expected: config.dim(), got: v.len() });
    }
    let u = unitary_bch(config, p);
    Ok((&u.matrix * v, u.trailing_mass))
}

/// Residual || int dnu U xi U^dag - 1 || on the interior window for a
/// square-summable sector; xi must be positive with trace equal to the
/// formal dimension for the residual to certify the group-average formula.
pub fn povm_normalization_check(
    config: &RepConfig,
    xi: &DMatrix<Complex64>,
) -> Result<f64, FockError> {
    let rate = decay_exponent(config);
    if rate <= 0.0 {
        return Err(FockError::DivergenceDetected(divergence_diagnostic(config)));
    }
    let d = config.dim();
    if xi.nrows() != d || xi.ncols() != d {
        return Err(FockError::DimensionMismatch { expected: d, got: xi.nrows() });
    }
    if (xi - xi.adjoint()).iter().map(|c| c.norm()).fold(0.0f64, f64::max) > 1e-8 {
        return Err(FockError::InvalidSeed("seed operator must be Hermitian".into()));
    }
    // only the diagonal of xi survives the phi, psi integration
    let xi_diag: Vec<f64> = (0..d).map(|k| xi[(k, k)].re).collect();
    if xi_diag.iter().any(|&x| x < -1e-10) {
        return Err(FockError::InvalidSeed("seed operator must be positive".into()));
    }
    let support: Vec<usize> =
        xi_diag.iter().enumerate().filter(|(_, &x)| x.abs() > 1e-16).map(|(k, _)| k).collect();
    let win = config.interior_window();

    // I_i = 4 pi^2 int sinh cosh sum_k xi_kk |W_ik|^2 must equal 1 for all i
    let pairs: Vec<(usize, usize)> =
        (0..=win).flat_map(|i| support.iter().map(move |&k| (i, k))).collect();
    let integrand = |theta: f64, out: &mut [f64]| {
        let sq = abs_sq_entries(config, theta, &pairs);
        let jac = theta.sinh() * theta.cosh();
        for (idx, &(i, k)) in pairs.iter().enumerate() {
            out[i] += jac * xi_diag[k] * sq[idx];
        }
    };
    let mut upper = (12.0 / rate.max(0.25)).clamp(12.0, 120.0);
    let (mut acc, _) = quad::integrate_vec(&integrand, win + 1, 0.0, upper, 1e-12, 1e-9)
        .map_err(|e| FockError::DivergenceDetected(e.to_string()))?;
    loop {
        let mut probe = vec![0.0; win + 1];
        integrand(upper, &mut probe);
        let tail = probe.iter().fold(0.0f64, |m, v| m.max(v.abs())) / rate;
        let scale = acc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if tail <= 1e-4 * scale.max(1e-300) || upper >= 400.0 {
            break;
        }
        let (chunk, _) = quad::integrate_vec(&integrand, win + 1, upper, upper + 20.0, 1e-12, 1e-9)
            .map_err(|e| FockError::DivergenceDetected(e.to_string()))?;
        for (a, c) in acc.iter_mut().zip(&chunk) {
            *a += c;
        }
        upper += 20.0;
    }

    let residual = acc.iter().map(|&v| (4.0 * PI * PI * v - 1.0).abs()).fold(0.0f64, f64::max);
    Ok(residual)
}

/// K_z^2 - K_x^2 - K_y^2 from the truncated generators; scalar on the
/// interior window.
pub fn casimir_sector(config: &RepConfig) -> DMatrix<Complex64> {
    let g = build_generators(config);
    &g.k_z * &g.k_z - &g.k_x * &g.k_x - &g.k_y * &g.k_y
}

/// The sector-dependent Casimir scalar z0 (z0 - 1).
pub fn casimir_scalar(config: &RepConfig) -> f64 {
    let z0 = config.kz_offset();
    z0 * (z0 - 1.0)
}
