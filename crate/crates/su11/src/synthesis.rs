//! Finite-gate approximation of group elements.
//!
//! A target M is factored as e^{i a k_z} e^{b sigma_x} e^{i c k_z} and each
//! factor is approximated by repetitions of the three-gate alphabet
//! G1 = e^{theta1 sigma_x}, G2 = e^{-theta2 sigma_x}, G3 = e^{i phi3 sigma_z}.
//! The phase searches reduce to the smallest N with ||N omega - tau|| <= tol
//! on a circle, solved by an exact compensated scan below a threshold and by
//! continued-fraction convergent jumps above it.

use crate::error::SynthError;
use crate::group::{circle_distance, wrap_angle, GroupElement, HyperbolicParams};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Default cap on gate repetition counts.
pub const DEFAULT_N_CAP: u64 = 100_000_000;

/// Below this cap the search scans every count and is exactly minimal.
const EXACT_SCAN_LIMIT: u64 = 4_000_000;

// ---------------------------------------------------------------------------
// double-double helpers: the scan accumulates N*omega mod m without drift
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}

impl Dd {
    fn add(self, other: Dd) -> Dd {
        let s = two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        let t = two_sum(s.hi, lo);
        Dd { hi: t.hi, lo: t.lo }
    }

    fn add_f64(self, x: f64) -> Dd {
        self.add(Dd { hi: x, lo: 0.0 })
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// n * omega reduced to [-m/2, m/2) in double-double arithmetic.
fn mul_mod(n: u64, omega: f64, modulus: f64) -> Dd {
    let p = two_prod(n as f64, omega);
    let k = (p.hi / modulus).round();
    let corr = two_prod(-k, modulus);
    let mut r = p.add(corr);
    // one more reduction step in case of rounding at the boundary
    while r.value() >= 0.5 * modulus {
        r = r.add_f64(-modulus);
    }
    while r.value() < -0.5 * modulus {
        r = r.add_f64(modulus);
    }
    r
}

/// Continued-fraction convergent denominators of x (guides for jump steps).
fn convergent_denominators(x: f64, cap: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut frac = x.fract().abs();
    let (mut q_prev, mut q) = (0u64, 1u64);
    for _ in 0..64 {
        if frac < 1e-18 {
            break;
        }
        let inv = frac.recip();
        let a = inv.floor();
        if a >= cap as f64 {
            break;
        }
        let next = (a as u64).saturating_mul(q).saturating_add(q_prev);
        if next > cap {
            break;
        }
        q_prev = q;
        q = next;
        out.push(q);
        frac = inv.fract();
    }
    out
}

/// Smallest n in [0, n_cap] with circle-distance(n*omega, tau; modulus) <= tol,
/// subject to an extra acceptance predicate. Returns the best miss on failure.
fn smallest_hit<P: FnMut(u64, f64) -> bool>(
    omega: f64,
    tau: f64,
    modulus: f64,
    tol: f64,
    n_cap: u64,
    mut accept: P,
) -> Result<(u64, f64), f64> {
    let target = {
        let mut t = tau % modulus;
        if t < 0.0 {
            t += modulus;
        }
        t
    };
    let mut best_miss = f64::INFINITY;

    // exact scan (minimal among accepted hits)
    let scan_to = n_cap.min(EXACT_SCAN_LIMIT);
    let mut acc = Dd { hi: 0.0, lo: 0.0 };
    let mut near: Vec<(u64, f64)> = Vec::new(); // near misses seeding the jump tier
    for n in 0..=scan_to {
        let d = {
            let mut d = acc.value() - target;
            if d < -0.5 * modulus {
                d += modulus;
            } else if d >= 0.5 * modulus {
                d -= modulus;
            }
            d
        };
        if d.abs() <= tol {
            if accept(n, d) {
                return Ok((n, d));
            }
        } else {
            best_miss = best_miss.min(d.abs());
            if near.len() < 48 || d.abs() < near.last().unwrap().1.abs() {
                near.push((n, d));
                near.sort_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
                near.truncate(48);
            }
        }
        acc = acc.add_f64(omega);
        let mut v = acc.value();
        while v >= modulus {
            acc = acc.add_f64(-modulus);
            v = acc.value();
        }
    }
    if scan_to == n_cap {
        return Err(best_miss);
    }

    // convergent-jump tier: step from a near miss by multiples of a convergent
    // denominator q, whose own residual is small; near-minimal, not minimal
    near.push((0, circle_distance(0.0, target, modulus)));
    let mut candidates: Vec<(u64, f64)> = Vec::new();
    for q in convergent_denominators(omega / modulus, n_cap) {
        let dq = mul_mod(q, omega, modulus).value();
        if dq == 0.0 {
            continue;
        }
        for &(n0, r0) in &near {
            let j = (-r0 / dq).round();
            if !(0.0..=(n_cap as f64)).contains(&j) {
                continue;
            }
            for dj in [-1.0f64, 0.0, 1.0] {
                let jj = j + dj;
                if jj < 0.0 {
                    continue;
                }
                let n = n0.saturating_add((jj as u64).saturating_mul(q));
                if n > n_cap {
                    continue;
                }
                let d = circle_distance(mul_mod(n, omega, modulus).value(), target, modulus);
                if d.abs() <= tol && accept(n, d) {
                    candidates.push((n, d));
                } else {
                    best_miss = best_miss.min(d.abs());
                }
            }
        }
    }
    candidates.sort_by_key(|c| c.0);
    candidates.first().copied().ok_or(best_miss)
}

// ---------------------------------------------------------------------------
// alphabet and sequences
// ---------------------------------------------------------------------------

/// The three-gate alphabet. Ratios theta1/theta2 and phi3/(2 pi) must pass a
/// rational-exclusion screen: no p/q with q <= 100 within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateAlphabet {
    theta1: f64,
    theta2: f64,
    phi3: f64,
}

const SCREEN_MAX_DEN: u64 = 100;
const SCREEN_DIST: f64 = 1e-9;

fn rational_screen(x: f64, name: &'static str) -> Result<(), SynthError> {
    for q in 1..=SCREEN_MAX_DEN {
        let p = (x * q as f64).round();
        let dist = (x - p / q as f64).abs();
        if dist <= SCREEN_DIST {
            return Err(SynthError::DegenerateAlphabet { ratio_name: name, p: p as i64, q, dist });
        }
    }
    Ok(())
}

impl GateAlphabet {
    pub fn new(theta1: f64, theta2: f64, phi3: f64) -> Result<Self, SynthError> {
        if !(theta1 > 0.0) || !(theta2 > 0.0) {
            return Err(SynthError::InvalidAlphabet(format!(
                "theta1 and theta2 must be positive, got {theta1}, {theta2}"
            )));
        }
        if !(phi3 > 0.0 && phi3 < TAU) {
            return Err(SynthError::InvalidAlphabet(format!(
                "phi3 must lie in (0, 2 pi), got {phi3}"
            )));
        }
        rational_screen(theta1 / theta2, "theta1/theta2")?;
        rational_screen(phi3 / TAU, "phi3/(2 pi)")?;
        Ok(GateAlphabet { theta1, theta2, phi3 })
    }

    /// theta1 = 1, theta2 = sqrt(2), phi3 = the golden angle 2 pi (1 - 1/phi).
    pub fn golden() -> Self {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        GateAlphabet::new(1.0, 2f64.sqrt(), TAU * (1.0 - phi.recip())).expect("screen passes")
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn phi3(&self) -> f64 {
        self.phi3
    }

    /// Exact matrix of gate^count (closed form, no iterated product drift).
    pub fn gate_power(&self, id: GateId, count: u64) -> GroupElement {
        match id {
            GateId::G1 => GroupElement::from_angles(HyperbolicParams::new(
                self.theta1 * count as f64,
                0.0,
                0.0,
            )),
            GateId::G2 => GroupElement::from_angles(HyperbolicParams::new(
                self.theta2 * count as f64,
                0.0,
                0.0,
            ))
            .inverse(),
            GateId::G3 => {
                let angle = mul_mod(count, self.phi3, TAU).value();
                GroupElement::from_angles(HyperbolicParams::new(0.0, wrap_angle(angle), 0.0))
            }
        }
    }
}

/// Gate identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateId {
    G1,
    G2,
    G3,
}

/// A synthesized program together with the achieved parameter errors.
///
/// `deltas` are the errors (delta_alpha, delta_beta, delta_gamma) of the
/// K_z / K_x / K_z exponents in the decomposition
/// U = e^{-i alpha K_z} e^{-i beta K_x} e^{-i gamma K_z}; the middle entry is
/// twice the error of the sigma_x half-angle b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSequence {
    pub word: Vec<(GateId, u64)>,
    pub target: HyperbolicParams,
    pub deltas: [f64; 3],
}

impl GateSequence {
    /// Total gate count (sum of repetition counts).
    pub fn gate_count(&self) -> u64 {
        self.word.iter().map(|(_, c)| c).sum()
    }
}

/// Energy constraint (photon-number moments) entering the accuracy bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConstraint {
    pub mean_e: f64,
    pub mean_e2: f64,
    pub lambda: ModeLambda,
}

/// lambda = 1/4 for the single-mode realization, 1/2 for two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeLambda {
    SingleMode,
    TwoMode,
}

impl ModeLambda {
    pub fn value(&self) -> f64 {
        match self {
            ModeLambda::SingleMode => 0.25,
            ModeLambda::TwoMode => 0.5,
        }
    }
}

impl EnergyConstraint {
    pub fn new(mean_e: f64, mean_e2: f64, lambda: ModeLambda) -> Result<Self, SynthError> {
        if mean_e < 0.0 || mean_e2 < mean_e * mean_e {
            return Err(SynthError::InvalidAlphabet(format!(
                "moments must satisfy E >= 0 and E2 >= E^2, got ({mean_e}, {mean_e2})"
            )));
        }
        Ok(EnergyConstraint { mean_e, mean_e2, lambda })
    }

    /// <E^2> + 2 lambda <E> + lambda^2.
    pub fn moment_form(&self) -> f64 {
        let l = self.lambda.value();
        self.mean_e2 + 2.0 * l * self.mean_e + l * l
    }
}

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

/// ZXZ parameters (a, b, c), angles reduced to [0, 2 pi):
/// M = +/- e^{i a k_z} e^{b sigma_x} e^{i c k_z}.
pub fn decompose_zxz(m: &GroupElement) -> (f64, f64, f64) {
    let (a, b, c, _) = decompose_zxz_signed(m);
    (a, b, c)
}

/// As [`decompose_zxz`], also returning the sign: the three-factor product
/// with both angles reduced mod 2 pi equals `sign * M`. The k_z exponential
/// has period 4 pi, so reducing a and c independently can flip the sign; the
/// synthesis folds it into the trailing G3 block.
pub fn decompose_zxz_signed(m: &GroupElement) -> (f64, f64, f64, f64) {
    let p = m.to_angles();
    let a0 = p.phi - p.psi;
    let c0 = p.phi + p.psi;
    let a = wrap_angle(a0);
    let c = wrap_angle(c0);
    // count 2 pi shifts: each flips the sign of one factor
    let shifts = (((a - a0) / TAU).round() as i64).rem_euclid(2)
        + (((c - c0) / TAU).round() as i64).rem_euclid(2);
    let sign = if shifts % 2 == 0 { 1.0 } else { -1.0 };
    (a, p.theta, c, sign)
}

/// Smallest N3 with circle-distance(N3 * phi3, target; 2 pi) <= tol.
pub fn approx_angle(target: f64, phi3: f64, tol: f64) -> Result<u64, SynthError> {
    approx_angle_capped(target, phi3, tol, DEFAULT_N_CAP)
}

pub fn approx_angle_capped(
    target: f64,
    phi3: f64,
    tol: f64,
    n_cap: u64,
) -> Result<u64, SynthError> {
    if !(tol > 0.0) {
        return Err(SynthError::NonPositiveTolerance(tol));
    }
    smallest_hit(phi3, wrap_angle(target), TAU, tol, n_cap, |_, _| true)
        .map(|(n, _)| n)
        .map_err(|best| SynthError::SearchExhausted { n_cap, tol, best })
}

/// Smallest-N2 pair with |N1 theta1 - N2 theta2 - target| <= tol.
pub fn approx_hyperbolic(
    target: f64,
    theta1: f64,
    theta2: f64,
    tol: f64,
) -> Result<(u64, u64), SynthError> {
    approx_hyperbolic_capped(target, theta1, theta2, tol, DEFAULT_N_CAP)
}

pub fn approx_hyperbolic_capped(
    target: f64,
    theta1: f64,
    theta2: f64,
    tol: f64,
    n_cap: u64,
) -> Result<(u64, u64), SynthError> {
    if !(tol > 0.0) {
        return Err(SynthError::NonPositiveTolerance(tol));
    }
    // want N2 with N2 theta2 = -target (mod theta1), then N1 is the nearest
    // lattice index; reject hits whose N1 would be negative
    let mut n1_out = 0u64;
    let hit = smallest_hit(theta2, -target, theta1, tol, n_cap, |n2, _| {
        let k = ((n2 as f64 * theta2 + target) / theta1).round();
        if k < 0.0 {
            return false;
        }
        n1_out = k as u64;
        true
    });
    match hit {
        Ok((n2, _)) => Ok((n1_out, n2)),
        Err(best) => Err(SynthError::SearchExhausted { n_cap, tol, best }),
    }
}

/// Approximate `target` by a word [G3^{n_a}, G1^{N1}, G2^{N2}, G3^{n_c}].
///
/// Each ZXZ factor is approximated so that the achieved exponent errors
/// (`deltas`) are at most `tol`; zero-count blocks are dropped from the word.
pub fn synthesize(
    target: &GroupElement,
    alphabet: &GateAlphabet,
    tol: f64,
) -> Result<GateSequence, SynthError> {
    synthesize_capped(target, alphabet, tol, DEFAULT_N_CAP)
}

pub fn synthesize_capped(
    target: &GroupElement,
    alphabet: &GateAlphabet,
    tol: f64,
    n_cap: u64,
) -> Result<GateSequence, SynthError> {
    if !(tol > 0.0) {
        return Err(SynthError::NonPositiveTolerance(tol));
    }
    let (a, b, c, sign) = decompose_zxz_signed(target);
    let params = target.to_angles();

    if target.frobenius_distance(&GroupElement::identity()) == 0.0 {
        return Ok(GateSequence { word: vec![], target: params, deltas: [0.0; 3] });
    }

    // the k_z exponent a is realized by G3^n = e^{i (2 n phi3) k_z}: search
    // n phi3 ~ a/2 on the 2 pi circle at tol/2 so the exponent error is <= tol
    let search_angle = |target_half: f64| -> Result<(u64, f64), SynthError> {
        if target_half == 0.0 {
            return Ok((0, 0.0));
        }
        smallest_hit(alphabet.phi3, target_half, TAU, 0.5 * tol, n_cap, |_, _| true)
            .map_err(|best| SynthError::SearchExhausted { n_cap, tol: 0.5 * tol, best })
    };

    let (n_a, e_a) = search_angle(wrap_angle(0.5 * a))?;
    // fold a negative reduction sign into the trailing phase block as a
    // half-turn: e^{i pi sigma_z} = -1
    let c_half = wrap_angle(0.5 * c + if sign < 0.0 { PI } else { 0.0 });
    let (n_c, e_c) = search_angle(c_half)?;

    let (n1, n2, e_b) = if b == 0.0 {
        (0, 0, 0.0)
    } else {
        let (n1, n2) =
            approx_hyperbolic_capped(b, alphabet.theta1, alphabet.theta2, 0.5 * tol, n_cap)?;
        let achieved = n1 as f64 * alphabet.theta1 - n2 as f64 * alphabet.theta2;
        (n1, n2, achieved - b)
    };

    let mut word = Vec::new();
    if n_a > 0 {
        word.push((GateId::G3, n_a));
    }
    if n1 > 0 {
        word.push((GateId::G1, n1));
    }
    if n2 > 0 {
        word.push((GateId::G2, n2));
    }
    if n_c > 0 {
        word.push((GateId::G3, n_c));
    }

    Ok(GateSequence {
        word,
        target: params,
        // exponent-parameter errors: the angle searches err by e on the
        // half-angle (2e on the k_z exponent), the hyperbolic search errs by
        // e_b on the sigma_x half-angle (2 e_b on the K_x exponent)
        deltas: [2.0 * e_a, 2.0 * e_b, 2.0 * e_c],
    })
}

/// Left-to-right product of the word's gate matrices.
///
/// Consecutive sigma_x gates (G1/G2) commute; their run is evaluated as a
/// single exponential e^{(N1 theta1 - N2 theta2) sigma_x}, which avoids the
/// cosh overflow of forming G1^{N1} on its own when the counts are large.
pub fn evaluate_sequence(seq: &GateSequence, alphabet: &GateAlphabet) -> GroupElement {
    let mut m = GroupElement::identity();
    let mut run = Dd { hi: 0.0, lo: 0.0 }; // accumulated sigma_x exponent

    let flush = |m: &mut GroupElement, run: &mut Dd| {
        let x = run.value();
        if x != 0.0 {
            let boost = GroupElement::from_angles(HyperbolicParams::new(x.abs(), 0.0, 0.0));
            let boost = if x < 0.0 { boost.inverse() } else { boost };
            *m = m.multiply(&boost);
        }
        *run = Dd { hi: 0.0, lo: 0.0 };
    };

    for &(id, count) in &seq.word {
        match id {
            GateId::G1 => run = run.add(two_prod(count as f64, alphabet.theta1)),
            GateId::G2 => run = run.add(two_prod(-(count as f64), alphabet.theta2)),
            GateId::G3 => {
                flush(&mut m, &mut run);
                m = m.multiply(&alphabet.gate_power(GateId::G3, count));
            }
        }
    }
    flush(&mut m, &mut run);
    m
}

/// Operator class selected by the sign analysis of the second-order defect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorClass {
    Kz2,
    Kx2,
}

/// The energy-constrained accuracy bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyBound {
    /// q = delta_a^2 + delta_c^2 + 2 cosh(beta) delta_a delta_c - delta_b^2.
    pub q: f64,
    /// epsilon = |q| (<E^2> + 2 lambda <E> + lambda^2).
    pub epsilon: f64,
    pub operator_class: OperatorClass,
}

/// First-order accuracy bound; requires every |delta| <= 0.1.
pub fn accuracy_bound(
    deltas: [f64; 3],
    beta: f64,
    constraint: &EnergyConstraint,
) -> Result<AccuracyBound, SynthError> {
    for d in deltas {
        if d.abs() > 0.1 {
            return Err(SynthError::DeltaTooLarge { value: d });
        }
    }
    let [da, db, dc] = deltas;
    let q = da * da + dc * dc + 2.0 * beta.cosh() * da * dc - db * db;
    let class = if q >= 0.0 { OperatorClass::Kz2 } else { OperatorClass::Kx2 };
    Ok(AccuracyBound { q, epsilon: q.abs() * constraint.moment_form(), operator_class: class })
}

/// One row of the empirical gate-count profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub tol: f64,
    /// None when the search was exhausted at this tolerance.
    pub n_total: Option<u64>,
    /// Achieved |q| of the accuracy analysis (beta = 2 theta of the target).
    pub q: Option<f64>,
}

/// Profile gate count against tolerance; this is the empirical f(N) relation.
pub fn empirical_f(
    alphabet: &GateAlphabet,
    target: &GroupElement,
    tol_schedule: &[f64],
) -> Vec<ProfileEntry> {
    use rayon::prelude::*;
    let beta = 2.0 * target.to_angles().theta;
    tol_schedule
        .par_iter()
        .map(|&tol| match synthesize(target, alphabet, tol) {
            Ok(seq) => {
                let [da, db, dc] = seq.deltas;
                let q = da * da + dc * dc + 2.0 * beta.cosh() * da * dc - db * db;
                ProfileEntry { tol, n_total: Some(seq.gate_count()), q: Some(q.abs()) }
            }
            Err(_) => ProfileEntry { tol, n_total: None, q: None },
        })
        .collect()
}

/// First-order Frobenius-norm bound for parameter errors of the ZXZ map,
/// computed by central differences at the target parameters.
pub fn zxz_first_order_bound(m: &GroupElement, deltas: [f64; 3]) -> f64 {
    let (a, b, c, sign) = decompose_zxz_signed(m);
    let h = 1e-6;
    let eval = |a: f64, b: f64, c: f64| {
        let e = crate::group::zxz_element(a, b, c);
        if sign < 0.0 {
            e.negate()
        } else {
            e
        }
    };
    let mut bound = 0.0;
    for (j, d) in deltas.iter().enumerate() {
        let mut vp = [a, b, c];
        let mut vm = [a, b, c];
        vp[j] += h;
        vm[j] -= h;
        let fp = eval(vp[0], vp[1], vp[2]);
        let fm = eval(vm[0], vm[1], vm[2]);
        let deriv = fp.frobenius_distance(&fm) / (2.0 * h);
        // deltas are exponent errors; the ZXZ angles move at half rate
        bound += deriv * d.abs() * 0.5;
    }
    bound
}
