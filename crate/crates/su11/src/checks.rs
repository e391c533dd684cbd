//! Self-check suites runnable from the command line.
//!
//! Each suite re-validates a family of invariants at runtime with a fixed
//! seed and reports one record per check; these are the same identities the
//! test suite asserts, packaged for operational verification.

use crate::fock::{
    formal_dimension_numeric, matrix_element_closed, square_summability_check, unitary_bch,
    unitary_exp, Kappa, RepConfig, RepKind, Summability,
};
use crate::group::{
    self, bch_factors, bch_factors_antinormal, exp_map, haar_density_angles, haar_density_xyz,
    k_minus, k_plus, log_map, random_element, AlgebraDirection, GroupElement, HyperbolicParams,
};
use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    /// Worst observed metric (residual, deviation, ...).
    pub metric: f64,
    /// Threshold the metric is compared against.
    pub threshold: f64,
}

impl CheckResult {
    fn new(suite: &str, name: &str, metric: f64, threshold: f64) -> Self {
        CheckResult {
            suite: suite.to_string(),
            name: name.to_string(),
            passed: metric <= threshold,
            metric,
            threshold,
        }
    }
}

/// Names understood by [`run_suite`].
pub const SUITES: &[&str] = &["group-core", "bch", "measure", "oracle", "formal-dimension"];

/// Run one suite by name ("all" runs every suite).
pub fn run_suite(name: &str) -> Option<Vec<CheckResult>> {
    match name {
        "group-core" => Some(group_core_suite()),
        "bch" => Some(bch_suite()),
        "measure" => Some(measure_suite()),
        "oracle" => Some(oracle_suite()),
        "formal-dimension" => Some(formal_dimension_suite()),
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s).expect("known suite"));
            }
            Some(out)
        }
        _ => None,
    }
}

fn group_core_suite() -> Vec<CheckResult> {
    let suite = "group-core";
    let mut rng = ChaCha12Rng::seed_from_u64(0x5151_0001);
    let mut out = Vec::new();

    // closure of the defining constraint over products
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let c = random_element(&mut rng, 1.0).multiply(&random_element(&mut rng, 1.0));
        let scale = (c.alpha().norm_sqr() + c.beta().norm_sqr()).max(1.0);
        worst = worst.max(c.constraint_residual().abs() / scale);
    }
    out.push(CheckResult::new(suite, "product-closure", worst, 1e-12));

    // parametrization round trips
    let mut worst: f64 = 0.0;
    for _ in 0..2_000 {
        let p = HyperbolicParams::new(
            rng.random::<f64>() * 2.0,
            rng.random::<f64>() * TAU,
            rng.random::<f64>() * TAU,
        );
        let q = GroupElement::from_angles(p).to_angles();
        worst = worst
            .max((p.theta - q.theta).abs())
            .max((p.phi - q.phi).abs())
            .max((p.psi - q.psi).abs());
    }
    out.push(CheckResult::new(suite, "angle-round-trip", worst, 1e-10));

    // exp/log consistency across all regions
    let mut worst: f64 = 0.0;
    for k in 0..2_000 {
        let m = {
            let e = random_element(&mut rng, 1.0);
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
        worst = worst.max(m.frobenius_distance(&back) / (1.0 + m.matrix().norm()));
    }
    out.push(CheckResult::new(suite, "exp-log-round-trip", worst, 1e-10));

    // measure change of variables at random points
    let mut worst: f64 = 0.0;
    let mut used = 0;
    while used < 1_000 {
        let theta = 0.05 + rng.random::<f64>() * 1.5;
        let phi = rng.random::<f64>() * TAU;
        let psi = rng.random::<f64>() * TAU;
        if phi.cos().abs() < 0.05 {
            continue;
        }
        used += 1;
        let chart = |th: f64, ph: f64, ps: f64| -> [f64; 3] {
            [th.sinh() * ps.cos(), th.sinh() * ps.sin(), th.cosh() * ph.sin()]
        };
        let h = 1e-5;
        let vars = [theta, phi, psi];
        let mut jac = [[0.0f64; 3]; 3];
        for j in 0..3 {
            let at = |offset: f64| {
                let mut v = vars;
                v[j] += offset;
                chart(v[0], v[1], v[2])
            };
            let (f_m2, f_m1, f_p1, f_p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
            for i in 0..3 {
                jac[i][j] = (f_m2[i] - 8.0 * f_m1[i] + 8.0 * f_p1[i] - f_p2[i]) / (12.0 * h);
            }
        }
        let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        let [x, y, z] = chart(theta, phi, psi);
        let lhs = haar_density_xyz(x, y, z).unwrap() * det.abs();
        let rhs = haar_density_angles(theta);
        worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    out.push(CheckResult::new(suite, "measure-change-of-variables", worst, 1e-9));
    out
}

fn bch_suite() -> Vec<CheckResult> {
    let suite = "bch";
    let mut rng = ChaCha12Rng::seed_from_u64(0x5151_0002);
    let mut worst_normal: f64 = 0.0;
    let mut worst_anti: f64 = 0.0;
    for _ in 0..1_000 {
        let r = rng.random::<f64>() * 5.0;
        let ang = rng.random::<f64>() * TAU;
        let xi = Complex64::from_polar(r, ang);
        let dir = if r > 0.0 {
            AlgebraDirection::new(-xi.im / r, -xi.re / r, 0.0, 1e-9).unwrap()
        } else {
            AlgebraDirection::new(1.0, 0.0, 0.0, 1e-9).unwrap()
        };
        let reference = exp_map(2.0 * r, &dir).matrix();
        let scale = 1.0 + reference.norm();
        for anti in [false, true] {
            let f = if anti { bch_factors_antinormal(xi) } else { bch_factors(xi) };
            let one = Matrix2::identity();
            let ep = one + k_plus() * f.plus_coeff;
            let em = one + k_minus() * f.minus_coeff;
            let d = Matrix2::new(
                Complex64::new(f.diag_base, 0.0),
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::new(f.diag_base.recip(), 0.0),
            );
            let prod = if anti { em * d * ep } else { ep * d * em };
            let dev = (prod - reference).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() / scale;
            if anti {
                worst_anti = worst_anti.max(dev);
            } else {
                worst_normal = worst_normal.max(dev);
            }
        }
    }
    vec![
        CheckResult::new(suite, "normal-order-identity", worst_normal, 1e-12),
        CheckResult::new(suite, "antinormal-order-identity", worst_anti, 1e-12),
    ]
}

fn measure_suite() -> Vec<CheckResult> {
    let suite = "measure";
    let mut rng = ChaCha12Rng::seed_from_u64(0x5151_0003);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    while used < 200 {
        let s = random_element(&mut rng, 0.5);
        let r = random_element(&mut rng, 0.5);
        let c0 = r.to_hyperboloid();
        if c0.t.abs() < 0.5 || s.multiply(&r).to_hyperboloid().t.abs() < 0.5 {
            continue;
        }
        used += 1;
        let sheet = c0.t.signum();
        let map = |x: f64, y: f64, z: f64| -> [f64; 3] {
            let t = sheet * (1.0 + x * x + y * y - z * z).max(0.0).sqrt();
            let m = GroupElement::from_alpha_beta_tol(
                Complex64::new(t, z),
                Complex64::new(x, y),
                1e-6,
            )
            .expect("on-shell point");
            let p = s.multiply(&m).to_hyperboloid();
            [p.x, p.y, p.z]
        };
        let h = 1e-5;
        let vars = [c0.x, c0.y, c0.z];
        let mut jac = [[0.0f64; 3]; 3];
        for j in 0..3 {
            let at = |offset: f64| {
                let mut v = vars;
                v[j] += offset;
                map(v[0], v[1], v[2])
            };
            let (f_m2, f_m1, f_p1, f_p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
            for i in 0..3 {
                jac[i][j] = (f_m2[i] - 8.0 * f_m1[i] + 8.0 * f_p1[i] - f_p2[i]) / (12.0 * h);
            }
        }
        let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        let img = s.multiply(&r).to_hyperboloid();
        let lhs = haar_density_xyz(img.x, img.y, img.z).unwrap() * det.abs();
        let rhs = haar_density_xyz(c0.x, c0.y, c0.z).unwrap();
        worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    vec![CheckResult::new(suite, "left-translation-invariance", worst, 1e-9)]
}

fn oracle_suite() -> Vec<CheckResult> {
    let suite = "oracle";
    let mut rng = ChaCha12Rng::seed_from_u64(0x5151_0004);
    let mut out = Vec::new();
    for (kappa, kind) in
        [(Kappa::Half, RepKind::SingleModeEven), (Kappa::One, RepKind::TwoMode { delta: 0 })]
    {
        let config = RepConfig::new(kind, 80).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let p = HyperbolicParams::new(
                rng.random::<f64>() * 2.0,
                rng.random::<f64>() * TAU,
                rng.random::<f64>() * TAU,
            );
            let dense = unitary_exp(&config, &p).matrix;
            for m in 0..=10usize {
                for n in 0..=10usize {
                    let c = matrix_element_closed(kappa, m, n, &p);
                    worst = worst.max((c - dense[(m, n)]).norm());
                }
            }
        }
        let name = match kappa {
            Kappa::Half => "closed-form-vs-exponential-kappa-half",
            Kappa::One => "closed-form-vs-exponential-kappa-one",
        };
        out.push(CheckResult::new(suite, name, worst, 1e-8));
    }

    // triangular route against the dense route on the interior window
    let config = RepConfig::new(RepKind::SingleModeOdd, 48).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let p = HyperbolicParams::new(
            rng.random::<f64>() * 1.5,
            rng.random::<f64>() * TAU,
            rng.random::<f64>() * TAU,
        );
        let a = unitary_bch(&config, &p).matrix;
        let b = unitary_exp(&config, &p).matrix;
        let w = config.n_max / 4 + 1;
        for i in 0..w {
            for j in 0..w {
                worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
    }
    out.push(CheckResult::new(suite, "triangular-vs-exponential", worst, 1e-8));
    out
}

fn formal_dimension_suite() -> Vec<CheckResult> {
    let suite = "formal-dimension";
    let config = RepConfig::new(RepKind::SingleModeOdd, 60).unwrap();
    let mut v = DVector::<Complex64>::zeros(config.dim());
    v[0] = Complex64::ONE;
    let expect = 1.0 / (4.0 * PI * PI);
    let mut out = Vec::new();
    match formal_dimension_numeric(&config, &v) {
        Ok(d) => {
            out.push(CheckResult::new(
                suite,
                "odd-sector-formal-dimension",
                (d - expect).abs() / expect,
                0.01,
            ));
        }
        Err(_) => out.push(CheckResult::new(suite, "odd-sector-formal-dimension", f64::MAX, 0.01)),
    }
    // dichotomy table
    let verdicts = [
        (RepKind::SingleModeEven, false),
        (RepKind::SingleModeOdd, true),
        (RepKind::TwoMode { delta: 0 }, false),
        (RepKind::TwoMode { delta: 1 }, true),
    ];
    let mut wrong = 0usize;
    for (kind, convergent) in verdicts {
        let c = RepConfig::new(kind, 40).unwrap();
        let got = matches!(square_summability_check(&c), Summability::Convergent { .. });
        if got != convergent {
            wrong += 1;
        }
    }
    out.push(CheckResult::new(suite, "square-summability-dichotomy", wrong as f64, 0.0));
    out
}

/// Convenience: overall verdict of a batch of results.
pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        for name in SUITES {
            let results = run_suite(name).unwrap();
            assert!(!results.is_empty());
            for r in &results {
                assert!(r.passed, "{}/{}: metric {} > {}", r.suite, r.name, r.metric, r.threshold);
            }
        }
    }

    #[test]
    fn unknown_suite_is_none() {
        assert!(run_suite("nope").is_none());
        assert!(run_suite("all").is_some());
    }

    // the group:: import keeps the module path used in docs compilable
    #[allow(unused_imports)]
    use group as _group_alias;
}
