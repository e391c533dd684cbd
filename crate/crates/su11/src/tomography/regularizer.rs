//! Regularization factors g(theta) for the group measure.
//!
//! A regularizer multiplies the invariant density sinh(theta) cosh(theta);
//! it must be normalizable for the sampler to exist. Registration integrates
//! the weighted density once, storing the normalization and the effective
//! support, and the inverse-CDF sampling table is built lazily.

use crate::error::TomoError;
use crate::group::HyperbolicParams;
use crate::quad;
use rand::Rng;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock};

/// Id of the built-in default regularizer.
pub const DEFAULT_REGULARIZER_ID: &str = "exp-tanh-sech3";

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A positive weight g(theta) with finite int sinh cosh g dtheta.
#[derive(Clone)]
pub struct Regularizer {
    id: String,
    description: String,
    density: Density,
    /// int_0^inf sinh(t) cosh(t) g(t) dt.
    z_theta: f64,
    /// theta beyond which the weighted density mass is below ~1e-12.
    support: f64,
    /// the default g admits closed x-space kernel integrals
    is_default_form: bool,
    sampler: Arc<OnceLock<SamplerTable>>,
}

impl std::fmt::Debug for Regularizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Regularizer")
            .field("id", &self.id)
            .field("description", &self.description)
            .field("z_theta", &self.z_theta)
            .field("support", &self.support)
            .finish()
    }
}

impl Regularizer {
    /// Register a regularizer, verifying normalizability numerically.
    pub fn new<F>(id: &str, description: &str, g: F) -> Result<Self, TomoError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let density: Density = Arc::new(g);
        let weighted = {
            let density = density.clone();
            move |t: f64| t.sinh() * t.cosh() * density(t)
        };
        // integrate in 10-wide chunks until the contribution is negligible;
        // a growing tail marks a non-normalizable choice
        let mut z = 0.0;
        let mut upper = 0.0;
        let mut last_chunk = f64::INFINITY;
        while upper < 300.0 {
            let chunk = quad::integrate(&weighted, upper, upper + 10.0, 1e-14, 1e-11)
                .map_err(|e| TomoError::QuadratureFailure(e.to_string()))?
                .value;
            if chunk < 0.0 {
                return Err(TomoError::NotNormalizable(format!(
                    "negative weighted density near theta = {upper}"
                )));
            }
            z += chunk;
            upper += 10.0;
            if chunk <= 1e-12 * z.max(1e-300) {
                last_chunk = chunk;
                break;
            }
            last_chunk = chunk;
        }
        if upper >= 300.0 && last_chunk > 1e-10 * z.max(1e-300) {
            return Err(TomoError::NotNormalizable(format!(
                "weighted density still contributes {last_chunk:.3e} per decade at theta = 300"
            )));
        }
        if !(z > 0.0) || !z.is_finite() {
            return Err(TomoError::NotNormalizable(format!("normalization Z = {z}")));
        }
        Ok(Regularizer {
            id: id.to_string(),
            description: description.to_string(),
            density,
            z_theta: z,
            support: upper,
            is_default_form: false,
            sampler: Arc::new(OnceLock::new()),
        })
    }

    /// The default factor g(theta) = exp(-1/tanh^2 theta) / cosh^3 theta.
    pub fn default_paper() -> Self {
        let mut reg = Regularizer::new(
            DEFAULT_REGULARIZER_ID,
            "exp(-1/tanh(theta)^2)/cosh(theta)^3",
            |t: f64| {
                let tt = t.tanh();
                (-(tt * tt).recip()).exp() / t.cosh().powi(3)
            },
        )
        .expect("the default factor is normalizable");
        reg.is_default_form = true;
        reg
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// sha256 of the closed-form description string.
    pub fn description_hash(&self) -> String {
        let digest = Sha256::digest(self.description.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn g(&self, theta: f64) -> f64 {
        (self.density)(theta)
    }

    /// int sinh cosh g dtheta (theta part of the measure normalization).
    pub fn z_theta(&self) -> f64 {
        self.z_theta
    }

    /// Full measure normalization int dnu g = 4 pi^2 z_theta (phi and psi
    /// each contribute 2 pi).
    pub fn z_total(&self) -> f64 {
        4.0 * PI * PI * self.z_theta
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub(crate) fn is_default_form(&self) -> bool {
        self.is_default_form
    }

    fn sampler_table(&self) -> &SamplerTable {
        self.sampler.get_or_init(|| SamplerTable::build(self))
    }
}

/// Monotone inverse-CDF table with Hermite-cubic interpolation; the stored
/// derivative at each node is the exact density, so the interpolant meets
/// the 1e-10 tolerance with a few thousand nodes.
struct SamplerTable {
    theta: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

impl SamplerTable {
    fn build(reg: &Regularizer) -> SamplerTable {
        const NODES: usize = 8192;
        let hi = reg.support;
        let z = reg.z_theta;
        let theta: Vec<f64> = (0..=NODES).map(|i| hi * i as f64 / NODES as f64).collect();
        let pdf: Vec<f64> =
            theta.iter().map(|&t| t.sinh() * t.cosh() * reg.g(t) / z).collect();
        let mut cdf = vec![0.0f64; NODES + 1];
        for i in 0..NODES {
            let seg = quad::integrate(
                |t| t.sinh() * t.cosh() * reg.g(t) / z,
                theta[i],
                theta[i + 1],
                1e-15,
                1e-12,
            )
            .map(|r| r.value)
            .unwrap_or_else(|_| 0.5 * (pdf[i] + pdf[i + 1]) * (theta[i + 1] - theta[i]));
            cdf[i + 1] = cdf[i] + seg;
        }
        // normalize out the residual tail mass
        let total = cdf[NODES];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        let pdf = pdf.into_iter().map(|p| p / total).collect();
        SamplerTable { theta, cdf, pdf }
    }

    /// Invert the CDF by bisection to the bracketing node plus Newton steps
    /// on the local cubic.
    fn invert(&self, u: f64) -> f64 {
        let n = self.cdf.len() - 1;
        let mut lo = 0usize;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t0, t1) = (self.theta[lo], self.theta[hi]);
        let (c0, c1) = (self.cdf[lo], self.cdf[hi]);
        let (d0, d1) = (self.pdf[lo], self.pdf[hi]);
        let h = t1 - t0;
        if c1 <= c0 {
            return t0;
        }
        // Hermite cubic for the CDF on [t0, t1]
        let eval = |s: f64| -> (f64, f64) {
            let s2 = s * s;
            let s3 = s2 * s;
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = s3 - 2.0 * s2 + s;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let h11 = s3 - s2;
            let val = h00 * c0 + h10 * h * d0 + h01 * c1 + h11 * h * d1;
            let dh00 = 6.0 * s2 - 6.0 * s;
            let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
            let dh01 = -6.0 * s2 + 6.0 * s;
            let dh11 = 3.0 * s2 - 2.0 * s;
            let der = (dh00 * c0 + dh10 * h * d0 + dh01 * c1 + dh11 * h * d1) / h;
            (val, der)
        };
        let mut s = (u - c0) / (c1 - c0);
        for _ in 0..4 {
            let (val, der) = eval(s);
            if der > 0.0 {
                s -= (val - u) / (der * h);
            }
            s = s.clamp(0.0, 1.0);
        }
        t0 + s * h
    }
}

/// Draw (theta, phi, psi) with density sinh cosh g / z_theta x uniform(phi)
/// x uniform(psi).
pub fn sample_group<R: Rng + ?Sized>(reg: &Regularizer, rng: &mut R) -> HyperbolicParams {
    let table = reg.sampler_table();
    let u: f64 = rng.random();
    let theta = table.invert(u);
    let phi: f64 = rng.random::<f64>() * TAU;
    let psi: f64 = rng.random::<f64>() * TAU;
    HyperbolicParams::new(theta, phi, psi)
}

/// Registry of regularizers addressable by id.
#[derive(Debug, Clone, Default)]
pub struct RegularizerRegistry {
    map: HashMap<String, Regularizer>,
}

impl RegularizerRegistry {
    /// Registry containing the default factor.
    pub fn with_defaults() -> Self {
        let mut map = HashMap::new();
        let reg = Regularizer::default_paper();
        map.insert(reg.id().to_string(), reg);
        RegularizerRegistry { map }
    }

    pub fn register(&mut self, reg: Regularizer) {
        self.map.insert(reg.id().to_string(), reg);
    }

    pub fn get(&self, id: &str) -> Result<&Regularizer, TomoError> {
        self.map.get(id).ok_or_else(|| TomoError::UnknownRegularizer(id.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    #[test]
    fn default_regularizer_values() {
        let reg = Regularizer::default_paper();
        assert_eq!(reg.g(0.0), 0.0);
        // g(1) = exp(-1/tanh^2 1)/cosh^3 1
        assert_abs_diff_eq!(reg.g(1.0), 4.853_820_047_442_056e-2, epsilon = 1e-15);
        // pinned normalization constant
        assert_abs_diff_eq!(reg.z_theta(), 2.219_969_080_838_622e-1, epsilon = 1e-9);
    }

    #[test]
    fn rejects_non_normalizable() {
        assert!(Regularizer::new("flat", "1", |_| 1.0).is_err());
        assert!(Regularizer::new("growing", "cosh", |t| t.cosh()).is_err());
        // decaying fast enough is fine
        assert!(Regularizer::new("sech4", "1/cosh^4", |t| t.cosh().powi(-4)).is_ok());
    }

    #[test]
    fn registry_lookup() {
        let reg = RegularizerRegistry::with_defaults();
        assert!(reg.get(DEFAULT_REGULARIZER_ID).is_ok());
        assert!(matches!(reg.get("nope"), Err(TomoError::UnknownRegularizer(_))));
    }

    #[test]
    fn sampler_matches_density() {
        let reg = Regularizer::default_paper();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let n = 100_000usize;
        let mut phis = Vec::with_capacity(n);
        let mut psis = Vec::with_capacity(n);
        let mut thetas = Vec::with_capacity(n);
        for _ in 0..n {
            let p = sample_group(&reg, &mut rng);
            phis.push(p.phi / TAU);
            psis.push(p.psi / TAU);
            thetas.push(p.theta);
        }

        // Kolmogorov-Smirnov statistic for the uniform angle marginals
        for vals in [&mut phis, &mut psis] {
            vals.sort_by(f64::total_cmp);
            let d = vals
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let e1 = (i + 1) as f64 / n as f64;
                    let e0 = i as f64 / n as f64;
                    (v - e0).abs().max((e1 - v).abs())
                })
                .fold(0.0f64, f64::max);
            assert!(d < 0.01, "angle KS statistic {d}");
        }

        // chi-square against independently integrated bin masses, 50 bins
        let bins = 50usize;
        let hi = 3.0f64;
        let mut counts = vec![0usize; bins + 1];
        for &t in &thetas {
            let idx = ((t / hi) * bins as f64) as usize;
            counts[idx.min(bins)] += 1;
        }
        let z = reg.z_theta();
        let mut chi2 = 0.0;
        for (k, &c) in counts.iter().enumerate() {
            let (a, b) = if k < bins {
                (hi * k as f64 / bins as f64, hi * (k + 1) as f64 / bins as f64)
            } else {
                (hi, reg.support())
            };
            let p = quad::integrate(|t| t.sinh() * t.cosh() * reg.g(t) / z, a, b, 1e-13, 1e-10)
                .unwrap()
                .value;
            let expect = p * n as f64;
            if expect > 1.0 {
                chi2 += (c as f64 - expect).powi(2) / expect;
            }
        }
        // critical value of chi-square with 50 dof at p = 0.001
        assert!(chi2 < 86.66, "theta chi-square statistic {chi2}");
    }

    #[test]
    fn sampler_is_deterministic() {
        let reg = Regularizer::default_paper();
        let draw = |seed: u64| -> Vec<HyperbolicParams> {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            (0..50).map(|_| sample_group(&reg, &mut rng)).collect()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn inverse_cdf_accuracy() {
        // CDF(invert(u)) = u within the interpolation tolerance
        let reg = Regularizer::default_paper();
        let table = reg.sampler_table();
        let z = reg.z_theta();
        for &u in &[0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999] {
            let t = table.invert(u);
            let c = quad::integrate(
                |x| x.sinh() * x.cosh() * reg.g(x) / z,
                0.0,
                t,
                1e-14,
                1e-12,
            )
            .unwrap()
            .value;
            assert!((c - u).abs() < 1e-9, "u = {u}: cdf(inv) = {c}");
        }
    }
}
