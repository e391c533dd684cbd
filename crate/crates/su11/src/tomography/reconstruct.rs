//! Monte Carlo reconstruction of ensemble averages.
//!
//! The regularized identity Tr[rho A] = int dnu g f_A Tr[U rho] is estimated
//! by importance sampling: parameters are drawn from the normalized density
//! (sinh cosh g / z_theta) x uniform(phi) x uniform(psi) and every term is
//! weighted by the full measure normalization z_total = 4 pi^2 z_theta; the
//! estimator is unbiased with no further bookkeeping. Samples are generated
//! in fixed-size batches on independent counter-based substreams (one ChaCha
//! stream per batch index), and batch results are combined by pairwise
//! summation, so results are bit-identical for a given seed regardless of
//! the worker count.

use super::frame::FrameCoefficients;
use super::measure::Measurer;
use super::regularizer::{sample_group, Regularizer};
use crate::error::TomoError;
use crate::fock::{coherent_state, RepConfig};
use crate::group::HyperbolicParams;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// <<A|B>> = Tr[A^dag B].
pub fn double_ket_pairing(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Result<Complex64, TomoError> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(TomoError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok((a.adjoint() * b).trace())
}

/// Processing function f_A(p) = sum_{m,n} conj(<m|U_p|n>) A_mn / F_mn.
pub fn processing_function(
    a: &DMatrix<Complex64>,
    frame: &FrameCoefficients,
    p: &HyperbolicParams,
) -> Complex64 {
    let side = frame.m_max + 1;
    let block = frame.sector.block(p, side);
    processing_with_block(a, frame, &block)
}

fn processing_with_block(
    a: &DMatrix<Complex64>,
    frame: &FrameCoefficients,
    block: &DMatrix<Complex64>,
) -> Complex64 {
    let side = (frame.m_max + 1).min(a.nrows());
    let mut s = Complex64::ZERO;
    for m in 0..side {
        for n in 0..side {
            let amn = a[(m, n)];
            if amn != Complex64::ZERO {
                s += block[(m, n)].conj() * amn / frame.get(m, n);
            }
        }
    }
    s
}

/// Verdict of the processing-function variance gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarianceCheck {
    Finite(f64),
    Infinite,
}

/// <<A|F^{-1}|A>> = sum |A_mn|^2 / F_mn over the truncated table, plus a
/// boundary heuristic: when the band sums s_k = sum_{max(m,n)=k} |A_mn|^2/F_mn
/// are non-decreasing at the table edge *and* the last band dominates the
/// total, the implied infinite extension is treated as divergent.
pub fn variance_check(a: &DMatrix<Complex64>, frame: &FrameCoefficients) -> VarianceCheck {
    let side = (frame.m_max + 1).min(a.nrows());
    let mut bands = vec![0.0f64; side];
    for m in 0..side {
        for n in 0..side {
            let w = a[(m, n)].norm_sqr();
            if w > 0.0 {
                bands[m.max(n)] += w / frame.get(m, n);
            }
        }
    }
    let total: f64 = bands.iter().sum();
    if total == 0.0 {
        return VarianceCheck::Finite(0.0);
    }
    if side >= 3 {
        let k = side - 1;
        let non_decreasing = bands[k] >= bands[k - 1] && bands[k - 1] >= bands[k - 2];
        if non_decreasing && bands[k] > 0.5 * total {
            return VarianceCheck::Infinite;
        }
    }
    VarianceCheck::Finite(total)
}

/// How the traces Tr[rho U] are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum MeasurementMode {
    ExactTrace,
    ShotNoise { shots: usize },
}

/// A reconstruction job.
#[derive(Debug, Clone)]
pub struct TomographyJob {
    pub config: RepConfig,
    pub rho: DMatrix<Complex64>,
    pub observable: DMatrix<Complex64>,
    pub n_samples: usize,
    pub seed: u64,
    pub regularizer: Regularizer,
    pub measurement: MeasurementMode,
    pub frame: FrameCoefficients,
}

/// Estimate of Tr[rho A] with its statistical error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Estimate {
    pub value_re: f64,
    pub value_im: f64,
    /// Sample standard deviation of the averaged terms divided by sqrt(n);
    /// for Hermitian observables this is the deviation of the real part.
    pub stderr: f64,
    pub n_used: usize,
}

impl Estimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

const BATCH: usize = 1024;
/// Trailing diagonal mass of rho beyond which the job is rejected.
const RHO_TAIL_LIMIT: f64 = 1e-8;

fn pairwise_sum(values: &[(Complex64, f64, f64)]) -> (Complex64, f64, f64) {
    match values.len() {
        0 => (Complex64::ZERO, 0.0, 0.0),
        1 => values[0],
        len => {
            let (a, b) = values.split_at(len / 2);
            let x = pairwise_sum(a);
            let y = pairwise_sum(b);
            (x.0 + y.0, x.1 + y.1, x.2 + y.2)
        }
    }
}

/// Validate rho: Hermitian, unit trace, positive, small trailing mass.
fn validate_state(rho: &DMatrix<Complex64>) -> Result<(), TomoError> {
    let b = rho.nrows();
    if rho.ncols() != b || b == 0 {
        return Err(TomoError::DimensionMismatch("state must be square".into()));
    }
    let herm = (rho - rho.adjoint()).iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if herm > 1e-10 {
        return Err(TomoError::InvalidJob(format!("state not Hermitian (deviation {herm:.3e})")));
    }
    let tr: f64 = rho.diagonal().iter().map(|c| c.re).sum();
    if (tr - 1.0).abs() > 1e-10 {
        return Err(TomoError::InvalidJob(format!("state trace {tr} != 1")));
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(rho.clone());
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if min < -1e-10 {
        return Err(TomoError::InvalidJob(format!("state not positive (min eigenvalue {min:.3e})")));
    }
    let tail = rho[(b - 1, b - 1)].re;
    if tail > RHO_TAIL_LIMIT {
        return Err(TomoError::TruncationRejected { mass: tail, limit: RHO_TAIL_LIMIT });
    }
    Ok(())
}

/// Run a reconstruction job.
pub fn reconstruct(job: &TomographyJob) -> Result<Estimate, TomoError> {
    validate_state(&job.rho)?;
    let b = job.rho.nrows();
    if job.observable.nrows() != b || job.observable.ncols() != b {
        return Err(TomoError::DimensionMismatch(format!(
            "observable is {}x{}, state is {b}x{b}",
            job.observable.nrows(),
            job.observable.ncols()
        )));
    }
    if job.frame.m_max + 1 < b {
        return Err(TomoError::DimensionMismatch(format!(
            "frame table covers m <= {}, state needs {}",
            job.frame.m_max,
            b - 1
        )));
    }
    if job.frame.regularizer_id != job.regularizer.id() {
        return Err(TomoError::InvalidJob(format!(
            "frame was built for regularizer '{}', job uses '{}'",
            job.frame.regularizer_id,
            job.regularizer.id()
        )));
    }
    if job.n_samples == 0 {
        return Err(TomoError::InvalidJob("n_samples must be positive".into()));
    }
    if matches!(variance_check(&job.observable, &job.frame), VarianceCheck::Infinite) {
        return Err(TomoError::VarianceUnbounded);
    }

    let weight = job.regularizer.z_total();
    let n = job.n_samples;
    let batches = n.div_ceil(BATCH);
    let measurer = Measurer::new(job.config);

    let partials: Result<Vec<(Complex64, f64, f64)>, TomoError> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha12Rng::seed_from_u64(job.seed);
            rng.set_stream(batch as u64 + 1);
            let count = BATCH.min(n - batch * BATCH);
            let mut sum = Complex64::ZERO;
            let mut sum_re2 = 0.0f64;
            let mut sum_im2 = 0.0f64;
            for _ in 0..count {
                let p = sample_group(&job.regularizer, &mut rng);
                let block = job.frame.sector.block(&p, b);
                let f_a = processing_with_block(&job.observable, &job.frame, &block);
                let t = match job.measurement {
                    MeasurementMode::ExactTrace => {
                        let mut tr = Complex64::ZERO;
                        for i in 0..b {
                            for j in 0..b {
                                tr += job.rho[(i, j)] * block[(j, i)];
                            }
                        }
                        tr
                    }
                    MeasurementMode::ShotNoise { .. } => {
                        measurer.simulate(&job.rho, &p, job.measurement, &mut rng)?
                    }
                };
                let term = f_a * t * weight;
                sum += term;
                sum_re2 += term.re * term.re;
                sum_im2 += term.im * term.im;
            }
            Ok((sum, sum_re2, sum_im2))
        })
        .collect();
    let partials = partials?;
    let (sum, sum_re2, sum_im2) = pairwise_sum(&partials);

    let nf = n as f64;
    let mean = sum / nf;
    let var_re = (sum_re2 / nf - mean.re * mean.re).max(0.0) * nf / (nf - 1.0).max(1.0);
    let var_im = (sum_im2 / nf - mean.im * mean.im).max(0.0) * nf / (nf - 1.0).max(1.0);
    let hermitian = {
        let dev =
            (&job.observable - job.observable.adjoint()).iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        dev < 1e-12
    };
    let stderr = if hermitian {
        (var_re / nf).sqrt()
    } else {
        ((var_re + var_im) / nf).sqrt()
    };
    Ok(Estimate { value_re: mean.re, value_im: mean.im, stderr, n_used: n })
}

// ---------------------------------------------------------------------------
// job specification files
// ---------------------------------------------------------------------------

/// On-disk job description; states and observables may be given densely or
/// by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobSpec {
    pub config: RepConfig,
    pub m_max: usize,
    pub rho: StateSpec,
    pub observable: ObservableSpec,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default = "default_regularizer_id")]
    pub regularizer: String,
    pub measurement: MeasurementMode,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
}

fn default_regularizer_id() -> String {
    super::regularizer::DEFAULT_REGULARIZER_ID.to_string()
}

fn default_quad_tol() -> f64 {
    1e-9
}

/// Complex matrix entries serialized as [re, im] pairs, row-major rows.
pub type DenseMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpec {
    /// U_{theta,phi,psi} |0> on the sector, truncated to the job's m_max.
    SqueezedVacuum { theta: f64, phi: f64, psi: f64 },
    Dense(DenseMatrix),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableSpec {
    /// "identity" or "kz" on the truncated sector basis.
    Named(String),
    /// |level><level| projector.
    Projector { level: usize },
    Dense(DenseMatrix),
}

fn dense_to_matrix(d: &DenseMatrix, side: usize, what: &str) -> Result<DMatrix<Complex64>, TomoError> {
    if d.len() != side || d.iter().any(|row| row.len() != side) {
        return Err(TomoError::InvalidJob(format!(
            "{what} must be a {side}x{side} matrix of [re, im] pairs"
        )));
    }
    Ok(DMatrix::from_fn(side, side, |i, j| Complex64::new(d[i][j][0], d[i][j][1])))
}

impl JobSpec {
    /// Materialize the dense state on the truncated basis.
    pub fn build_rho(&self) -> Result<DMatrix<Complex64>, TomoError> {
        let side = self.m_max + 1;
        match &self.rho {
            StateSpec::Dense(d) => dense_to_matrix(d, side, "rho"),
            StateSpec::SqueezedVacuum { theta, phi, psi } => {
                let mut v = DVector::<Complex64>::zeros(self.config.dim());
                v[0] = Complex64::ONE;
                let p = HyperbolicParams::new(*theta, *phi, *psi);
                let (state, _) = coherent_state(&self.config, &p, &v)?;
                let trunc = state.rows(0, side).into_owned();
                let norm = trunc.norm();
                let mut rho = DMatrix::<Complex64>::zeros(side, side);
                for i in 0..side {
                    for j in 0..side {
                        rho[(i, j)] = trunc[i] * trunc[j].conj() / (norm * norm);
                    }
                }
                Ok(rho)
            }
        }
    }

    /// Materialize the observable on the truncated basis.
    pub fn build_observable(&self) -> Result<DMatrix<Complex64>, TomoError> {
        let side = self.m_max + 1;
        match &self.observable {
            ObservableSpec::Dense(d) => dense_to_matrix(d, side, "observable"),
            ObservableSpec::Projector { level } => {
                if *level >= side {
                    return Err(TomoError::InvalidJob(format!(
                        "projector level {level} outside table (m_max = {})",
                        self.m_max
                    )));
                }
                let mut a = DMatrix::<Complex64>::zeros(side, side);
                a[(*level, *level)] = Complex64::ONE;
                Ok(a)
            }
            ObservableSpec::Named(name) => match name.as_str() {
                "identity" => Ok(DMatrix::identity(side, side)),
                "kz" => {
                    let z0 = self.config.kz_offset();
                    let mut a = DMatrix::<Complex64>::zeros(side, side);
                    for i in 0..side {
                        a[(i, i)] = Complex64::new(i as f64 + z0, 0.0);
                    }
                    Ok(a)
                }
                other => Err(TomoError::InvalidJob(format!(
                    "unknown observable '{other}' (expected identity | kz)"
                ))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Kappa, RepKind};
    use crate::tomography::frame::frame_coefficients;

    fn even_frame(m_max: usize) -> (Regularizer, FrameCoefficients) {
        let reg = Regularizer::default_paper();
        let frame = frame_coefficients(Kappa::Half, m_max, &reg, 1e-9).unwrap();
        (reg, frame)
    }

    fn squeezed_job(
        observable: ObservableSpec,
        n_samples: usize,
        seed: u64,
    ) -> (TomographyJob, JobSpec) {
        let spec = JobSpec {
            config: RepConfig::new(RepKind::SingleModeEven, 60).unwrap(),
            m_max: 10,
            rho: StateSpec::SqueezedVacuum { theta: 0.3, phi: 0.0, psi: 0.0 },
            observable,
            n_samples,
            seed,
            regularizer: default_regularizer_id(),
            measurement: MeasurementMode::ExactTrace,
            quad_tol: 1e-9,
        };
        let (reg, frame) = even_frame(spec.m_max);
        let job = TomographyJob {
            config: spec.config,
            rho: spec.build_rho().unwrap(),
            observable: spec.build_observable().unwrap(),
            n_samples: spec.n_samples,
            seed: spec.seed,
            regularizer: reg,
            measurement: spec.measurement,
            frame,
        };
        (job, spec)
    }

    #[test]
    fn pairing_reference_cases() {
        let id = DMatrix::<Complex64>::identity(4, 4);
        assert_eq!(double_ket_pairing(&id, &id).unwrap().re, 4.0);
        let a = DMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64));
        let p = double_ket_pairing(&a, &a).unwrap();
        assert!(p.im.abs() < 1e-12 && p.re >= 0.0);
        let b = DMatrix::<Complex64>::zeros(2, 2);
        assert!(double_ket_pairing(&a, &b).is_err());
    }

    #[test]
    fn double_ket_product_identity() {
        // (A x B^T) |C>> = |A C B>> checked as pairings on random matrices
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(15);
        use rand::Rng;
        let mut rand_mat = |d: usize| {
            DMatrix::from_fn(d, d, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            })
        };
        let (a, b, c, x) = (rand_mat(4), rand_mat(4), rand_mat(4), rand_mat(4));
        // <<X | A C B>> via the pairing equals Tr[X^dag A C B]
        let lhs = double_ket_pairing(&x, &(&a * &c * &b)).unwrap();
        let rhs = (x.adjoint() * &a * &c * &b).trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn processing_function_special_cases() {
        let (_reg, frame) = even_frame(4);
        let side = 5;
        let zero = DMatrix::<Complex64>::zeros(side, side);
        let p = HyperbolicParams::new(0.4, 0.2, 0.8);
        assert_eq!(processing_function(&zero, &frame, &p), Complex64::ZERO);

        // single entry: conj(U_ab)/F_ab
        let mut single = DMatrix::<Complex64>::zeros(side, side);
        single[(2, 1)] = Complex64::ONE;
        let got = processing_function(&single, &frame, &p);
        let expect = crate::fock::matrix_element_closed(Kappa::Half, 2, 1, &p).conj()
            / frame.get(2, 1);
        assert!((got - expect).norm() < 1e-12);

        // identity parameters, diagonal observable: sum A_mm / F_mm with phases
        let mut diag = DMatrix::<Complex64>::zeros(side, side);
        for i in 0..side {
            diag[(i, i)] = Complex64::new(1.0 + i as f64, 0.0);
        }
        let got = processing_function(&diag, &frame, &HyperbolicParams::identity());
        let expect: Complex64 =
            (0..side).map(|i| Complex64::new((1.0 + i as f64) / frame.get(i, i), 0.0)).sum();
        assert!((got - expect).norm() < 1e-12);
    }

    #[test]
    fn variance_check_cases() {
        let (_reg, frame) = even_frame(10);
        let side = 11;
        let zero = DMatrix::<Complex64>::zeros(side, side);
        assert_eq!(variance_check(&zero, &frame), VarianceCheck::Finite(0.0));

        // interior single entry
        let mut single = DMatrix::<Complex64>::zeros(side, side);
        single[(2, 3)] = Complex64::ONE;
        match variance_check(&single, &frame) {
            VarianceCheck::Finite(v) => {
                assert!((v - 1.0 / frame.get(2, 3)).abs() < 1e-12)
            }
            VarianceCheck::Infinite => panic!("interior entry must be finite"),
        }

        // identity: finite sum of 1/F_mm
        let id = DMatrix::<Complex64>::identity(side, side);
        match variance_check(&id, &frame) {
            VarianceCheck::Finite(v) => {
                let expect: f64 = (0..side).map(|m| 1.0 / frame.get(m, m)).sum();
                assert!((v - expect).abs() < 1e-9);
            }
            VarianceCheck::Infinite => panic!("truncated identity must be finite"),
        }

        // an observable living at the truncation edge is flagged
        let mut edge = DMatrix::<Complex64>::zeros(side, side);
        edge[(10, 10)] = Complex64::ONE;
        assert_eq!(variance_check(&edge, &frame), VarianceCheck::Infinite);
    }

    #[test]
    fn reconstruct_identity_is_unit() {
        let (job, _) = squeezed_job(ObservableSpec::Named("identity".into()), 4000, 11);
        let est = reconstruct(&job).unwrap();
        assert!(
            (est.value_re - 1.0).abs() <= 3.0 * est.stderr,
            "estimate {} +- {}",
            est.value_re,
            est.stderr
        );
    }

    #[test]
    fn reconstruct_matches_direct_trace() {
        let (job, _) = squeezed_job(ObservableSpec::Projector { level: 0 }, 20_000, 1234);
        let direct = (&job.rho * &job.observable).trace().re;
        let est = reconstruct(&job).unwrap();
        assert!(
            (est.value_re - direct).abs() <= 3.0 * est.stderr,
            "estimate {} +- {} vs direct {direct}",
            est.value_re,
            est.stderr
        );
    }

    #[test]
    fn reconstruct_is_reproducible() {
        let (job, _) = squeezed_job(ObservableSpec::Projector { level: 0 }, 3000, 99);
        let a = reconstruct(&job).unwrap();
        let b = reconstruct(&job).unwrap();
        assert_eq!(a.value_re.to_bits(), b.value_re.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn reconstruct_worker_count_independent() {
        let (job, _) = squeezed_job(ObservableSpec::Projector { level: 0 }, 3000, 7);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = pool1.install(|| reconstruct(&job)).unwrap();
        let b = pool4.install(|| reconstruct(&job)).unwrap();
        assert_eq!(a.value_re.to_bits(), b.value_re.to_bits());
        assert_eq!(a.value_im.to_bits(), b.value_im.to_bits());
    }

    #[test]
    fn reconstruct_rejects_bad_states() {
        let (mut job, _) = squeezed_job(ObservableSpec::Named("identity".into()), 100, 1);
        job.rho[(10, 10)] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            reconstruct(&job),
            Err(TomoError::InvalidJob(_)) | Err(TomoError::TruncationRejected { .. })
        ));
    }

    #[test]
    fn reconstruct_rejects_edge_observables() {
        let (mut job, _) = squeezed_job(ObservableSpec::Named("identity".into()), 100, 1);
        let side = job.observable.nrows();
        job.observable = DMatrix::<Complex64>::zeros(side, side);
        job.observable[(side - 1, side - 1)] = Complex64::ONE;
        assert!(matches!(reconstruct(&job), Err(TomoError::VarianceUnbounded)));
    }

    #[test]
    fn job_spec_round_trip() {
        let (_, spec) = squeezed_job(ObservableSpec::Named("kz".into()), 10, 3);
        let json = serde_json::to_string(&spec).unwrap();
        let back: JobSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.n_samples, spec.n_samples);
        assert_eq!(back.m_max, spec.m_max);
        let rho = back.build_rho().unwrap();
        let tr: f64 = rho.diagonal().iter().map(|c| c.re).sum();
        assert!((tr - 1.0).abs() < 1e-12);
    }
}
