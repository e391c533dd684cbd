//! Simulated evaluation of the traces Tr[rho U_{theta,phi,psi}].
//!
//! The exact mode multiplies the truncated matrices. The shot-noise mode
//! follows the feasible protocol: U_p is reduced to a conjugated axis
//! exponential through the logarithm and adjoint machinery, the rotated
//! state W rho W^dag is measured in the axis eigenbasis, and the trace is
//! the empirical mean of e^{i chi lambda} over the sampled eigenvalues. The
//! axis reduction reproduces U_p only up to a global phase (the sector
//! unitaries compose projectively, and negative-trace elements contribute
//! e^{2 pi i z0}); the phase is restored by aligning the reduced operator
//! with the directly constructed block on the state's support.

use crate::error::TomoError;
use crate::fock::{build_generators, unitary_block_bch, RepConfig};
use crate::group::{log_map, GroupElement, HyperbolicParams};
use crate::tomography::reconstruct::MeasurementMode;
use crate::{adjoint, AdjointError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::sync::OnceLock;

/// Per-sector measurement context; caches the K_x eigendecomposition.
pub struct Measurer {
    pub config: RepConfig,
    kx_eigen: OnceLock<Option<(Vec<f64>, DMatrix<f64>)>>,
}

impl Measurer {
    pub fn new(config: RepConfig) -> Self {
        Measurer { config, kx_eigen: OnceLock::new() }
    }

    /// Eigenvalues and (real orthogonal) eigenvectors of the truncated K_x;
    /// the truncated spectrum approximates the continuous one, so shot-noise
    /// measurements along x inherit a truncation sensitivity.
    fn kx_eigen(&self) -> Result<&(Vec<f64>, DMatrix<f64>), TomoError> {
        self.kx_eigen
            .get_or_init(|| {
                let g = build_generators(&self.config);
                let kx = g.k_x.map(|c| c.re);
                let eig = nalgebra::linalg::SymmetricEigen::try_new(kx, 1e-13, 0)?;
                Some((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
            })
            .as_ref()
            .ok_or(TomoError::AxisDiagonalizationFailure { axis: 'x' })
    }

    /// Tr[rho U_p] in the requested mode; rho may be truncated to fewer
    /// levels than the sector dimension.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        rho: &DMatrix<Complex64>,
        p: &HyperbolicParams,
        mode: MeasurementMode,
        rng: &mut R,
    ) -> Result<Complex64, TomoError> {
        let b = rho.nrows();
        if rho.ncols() != b || b > self.config.dim() {
            return Err(TomoError::DimensionMismatch(format!(
                "state is {}x{}, sector dimension {}",
                rho.nrows(),
                rho.ncols(),
                self.config.dim()
            )));
        }
        match mode {
            MeasurementMode::ExactTrace => {
                let u = unitary_block_bch(&self.config, p, b);
                let mut tr = Complex64::ZERO;
                for i in 0..b {
                    for j in 0..b {
                        tr += rho[(i, j)] * u[(j, i)];
                    }
                }
                Ok(tr)
            }
            MeasurementMode::ShotNoise { shots } => self.simulate_shots(rho, p, shots, rng),
        }
    }

    fn simulate_shots<R: Rng + ?Sized>(
        &self,
        rho: &DMatrix<Complex64>,
        p: &HyperbolicParams,
        shots: usize,
        rng: &mut R,
    ) -> Result<Complex64, TomoError> {
        let b = rho.nrows();
        let dim = self.config.dim();
        let m = GroupElement::from_angles(*p);
        let dec = log_map(&m);
        let (pw, axis) = adjoint::conjugating_element(&dec.direction).map_err(|e| match e {
            AdjointError::NullDirection => {
                TomoError::InvalidJob("parabolic element has no axis reduction".into())
            }
            AdjointError::LowerSheet { nz } => {
                TomoError::InvalidJob(format!("unexpected lower-sheet direction (n_z = {nz})"))
            }
        })?;
        let chi = dec.chi;

        // columns of W over the state's support
        let w = unitary_block_bch(&self.config, &pw, dim);
        // rho' = W rho W^dag restricted to the needed entries
        let wcols = w.view((0, 0), (dim, b));
        let rho_rot = &wcols * rho * wcols.adjoint();

        // outcome probabilities and eigenvalues of the measured axis
        let (probs, lambdas, axis_phases): (Vec<f64>, Vec<f64>, Vec<Complex64>) = match axis {
            adjoint::ConjAxis::Z => {
                let probs: Vec<f64> = (0..dim).map(|k| rho_rot[(k, k)].re.max(0.0)).collect();
                let lambdas: Vec<f64> =
                    (0..dim).map(|k| k as f64 + self.config.kz_offset()).collect();
                let phases = lambdas
                    .iter()
                    .map(|&l| Complex64::from_polar(1.0, chi * l))
                    .collect();
                (probs, lambdas, phases)
            }
            adjoint::ConjAxis::X => {
                let (vals, vecs) = self.kx_eigen()?;
                // q_k = v_k^dag rho' v_k
                let probs: Vec<f64> = (0..dim)
                    .map(|k| {
                        let col = vecs.column(k);
                        let mut acc = Complex64::ZERO;
                        for i in 0..dim {
                            let mut row = Complex64::ZERO;
                            for j in 0..dim {
                                row += rho_rot[(i, j)] * col[j];
                            }
                            acc += Complex64::new(col[i], 0.0) * row;
                        }
                        acc.re.max(0.0)
                    })
                    .collect();
                let phases =
                    vals.iter().map(|&l| Complex64::from_polar(1.0, chi * l)).collect();
                (probs, vals.clone(), phases)
            }
        };
        let _ = lambdas;
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(TomoError::InvalidJob("state has no support after rotation".into()));
        }

        // empirical mean of e^{i chi lambda} over sampled outcomes
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &q in &probs {
            acc += q / total;
            cumulative.push(acc);
        }
        let mut mean = Complex64::ZERO;
        for _ in 0..shots {
            let u: f64 = rng.random();
            let k = cumulative.partition_point(|&c| c < u).min(probs.len() - 1);
            mean += axis_phases[k];
        }
        mean /= shots as f64;

        // restore the projective phase: align W^dag E W with the direct block
        let direct = unitary_block_bch(&self.config, p, b);
        let mut reduced = DMatrix::<Complex64>::zeros(b, b);
        match axis {
            adjoint::ConjAxis::Z => {
                for i in 0..b {
                    for j in 0..b {
                        let mut s = Complex64::ZERO;
                        for k in 0..dim {
                            s += w[(k, i)].conj() * axis_phases_z(self.config.kz_offset(), chi, k)
                                * w[(k, j)];
                        }
                        reduced[(i, j)] = s;
                    }
                }
            }
            adjoint::ConjAxis::X => {
                let (vals, vecs) = self.kx_eigen()?;
                // C = V^T W[:, 0..b] (V real)
                let mut c = DMatrix::<Complex64>::zeros(dim, b);
                for k in 0..dim {
                    for j in 0..b {
                        let mut s = Complex64::ZERO;
                        for i in 0..dim {
                            s += Complex64::new(vecs[(i, k)], 0.0) * w[(i, j)];
                        }
                        c[(k, j)] = s;
                    }
                }
                for i in 0..b {
                    for j in 0..b {
                        let mut s = Complex64::ZERO;
                        for k in 0..dim {
                            s += c[(k, i)].conj()
                                * Complex64::from_polar(1.0, chi * vals[k])
                                * c[(k, j)];
                        }
                        reduced[(i, j)] = s;
                    }
                }
            }
        }
        let mut num = Complex64::ZERO;
        let mut den = 0.0;
        for i in 0..b {
            for j in 0..b {
                num += reduced[(i, j)].conj() * direct[(i, j)];
                den += reduced[(i, j)].norm_sqr();
            }
        }
        if den <= 0.0 || num.norm() == 0.0 {
            return Err(TomoError::InvalidJob("phase alignment degenerate".into()));
        }
        let omega = num / num.norm();
        Ok(omega * mean)
    }
}

fn axis_phases_z(z0: f64, chi: f64, k: usize) -> Complex64 {
    Complex64::from_polar(1.0, chi * (k as f64 + z0))
}

/// One-shot convenience wrapper over [`Measurer`].
pub fn simulate_measurement<R: Rng + ?Sized>(
    config: &RepConfig,
    rho: &DMatrix<Complex64>,
    p: &HyperbolicParams,
    mode: MeasurementMode,
    rng: &mut R,
) -> Result<Complex64, TomoError> {
    Measurer::new(*config).simulate(rho, p, mode, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::RepKind;
    use rand::SeedableRng;

    fn vacuum_rho(b: usize) -> DMatrix<Complex64> {
        let mut rho = DMatrix::<Complex64>::zeros(b, b);
        rho[(0, 0)] = Complex64::ONE;
        rho
    }

    #[test]
    fn exact_trace_diagonal_case() {
        // rho = |0><0|, p = (0, phi, 0): trace is e^{2 i phi z0}
        let config = RepConfig::new(RepKind::SingleModeEven, 40).unwrap();
        let measurer = Measurer::new(config);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let phi = 0.9;
        let got = measurer
            .simulate(
                &vacuum_rho(8),
                &HyperbolicParams::new(0.0, phi, 0.0),
                MeasurementMode::ExactTrace,
                &mut rng,
            )
            .unwrap();
        let expect = Complex64::from_polar(1.0, 2.0 * phi * 0.25);
        assert!((got - expect).norm() < 1e-12);
    }

    #[test]
    fn shot_noise_agrees_with_exact() {
        let config = RepConfig::new(RepKind::SingleModeEven, 60).unwrap();
        let measurer = Measurer::new(config);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);

        // squeezed state, compact-class parameters
        let (state, _) = crate::fock::coherent_state(
            &config,
            &HyperbolicParams::new(0.25, 0.0, 0.0),
            &{
                let mut v = nalgebra::DVector::<Complex64>::zeros(config.dim());
                v[0] = Complex64::ONE;
                v
            },
        )
        .unwrap();
        let b = 12;
        let mut rho = DMatrix::<Complex64>::zeros(b, b);
        for i in 0..b {
            for j in 0..b {
                rho[(i, j)] = state[i] * state[j].conj();
            }
        }
        let tr = rho.diagonal().iter().map(|c| c.re).sum::<f64>();
        rho /= Complex64::new(tr, 0.0);

        for p in [
            HyperbolicParams::new(0.4, 1.2, 0.3),   // trace > 2 region
            HyperbolicParams::new(0.2, 2.0, 5.0),   // |trace| < 2 region
            HyperbolicParams::new(0.3, 3.1, 0.1),   // trace < -2 region
        ] {
            let exact = measurer
                .simulate(&rho, &p, MeasurementMode::ExactTrace, &mut rng)
                .unwrap();
            let shots = 1_000_000usize;
            let noisy = measurer
                .simulate(&rho, &p, MeasurementMode::ShotNoise { shots }, &mut rng)
                .unwrap();
            let dev = (exact - noisy).norm();
            assert!(
                dev < 3.0 / (shots as f64).sqrt() + 2e-4,
                "{p:?}: exact {exact}, shot {noisy}, dev {dev}"
            );
        }
    }

    #[test]
    fn region_symmetry_of_the_integrand_factor() {
        // U at the parameters of -M differs from U at M's parameters by a
        // global phase only, so |Tr[rho U]| coincides on a grid
        let config = RepConfig::new(RepKind::SingleModeEven, 40).unwrap();
        let measurer = Measurer::new(config);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let rho = vacuum_rho(8);
        for &theta in &[0.2, 0.5, 0.9] {
            for &phi in &[0.3, 1.4] {
                let p = HyperbolicParams::new(theta, phi, 0.7);
                let m = GroupElement::from_angles(p);
                let p_neg = m.negate().to_angles();
                let a = measurer
                    .simulate(&rho, &p, MeasurementMode::ExactTrace, &mut rng)
                    .unwrap();
                let b = measurer
                    .simulate(&rho, &p_neg, MeasurementMode::ExactTrace, &mut rng)
                    .unwrap();
                assert!((a.norm() - b.norm()).abs() < 1e-10, "{p:?}");
                // for the even sector the phase between them is e^{i pi/2}
                let ratio = b / a;
                assert!((ratio - Complex64::i()).norm() < 1e-8, "ratio {ratio}");
            }
        }
    }
}
