//! Adaptive Gauss-Kronrod quadrature (7-15 pair).
//!
//! Globally adaptive bisection: the segment with the largest error estimate
//! is split until the summed error estimate meets the requested tolerance.
//! The error estimate per segment follows the usual QUADPACK rescaling.

/// Kronrod abscissae for the 15-point rule on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

/// 7-point Gauss weights (for the odd-indexed abscissae of `XGK`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

/// Quadrature failure modes.
#[derive(Debug, Clone, thiserror::Error)]
pub enum QuadError {
    #[error("requested tolerance not reached: error estimate {error:.3e} after {evaluations} evaluations")]
    ToleranceNotReached { error: f64, evaluations: usize },
    #[error("integrand returned a non-finite value near x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// One Gauss-Kronrod 7-15 evaluation on [a, b].
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let eval = |x: f64| -> Result<f64, QuadError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadError::NonFinite { x })
        }
    };

    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for (j, &w) in WGK.iter().enumerate().take(7) {
        res_asc += w * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let min_err = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && min_err > err {
        err = min_err;
    }

    Ok(Segment { a, b, value, error: err })
}

/// Integrate `f` over [a, b] until `abs_tol` or `rel_tol * |integral|` is met.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult, QuadError> {
    const MAX_SEGMENTS: usize = 4096;
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0 });
    }

    let mut segments = vec![gk15(&f, a, b)?];
    let mut evaluations = 15usize;

    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if error <= tol {
            return Ok(QuadResult { value: total, abs_error: error, evaluations });
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(QuadError::ToleranceNotReached { error, evaluations });
        }
        // split the worst segment
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let seg = segments.swap_remove(idx);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine precision
            segments.push(seg);
            let total: f64 = segments.iter().map(|s| s.value).sum();
            let error: f64 = segments.iter().map(|s| s.error).sum();
            return Ok(QuadResult { value: total, abs_error: error, evaluations });
        }
        segments.push(gk15(&f, seg.a, mid)?);
        segments.push(gk15(&f, mid, seg.b)?);
        evaluations += 30;
    }
}

/// Vector-valued analogue of [`integrate`]; the error is controlled in the max norm.
///
/// `f` writes its output into the provided buffer, which keeps hot loops
/// allocation-free.
pub fn integrate_vec<F: Fn(f64, &mut [f64])>(
    f: F,
    dim: usize,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(Vec<f64>, f64), QuadError> {
    const MAX_SEGMENTS: usize = 2048;

    struct VSeg {
        a: f64,
        b: f64,
        value: Vec<f64>,
        error: f64,
    }

    let gk = |a: f64, b: f64, buf: &mut Vec<f64>| -> Result<VSeg, QuadError> {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut kronrod = vec![0.0; dim];
        let mut gauss = vec![0.0; dim];

        let eval = |x: f64, buf: &mut Vec<f64>| -> Result<(), QuadError> {
            buf.iter_mut().for_each(|v| *v = 0.0);
            f(x, buf);
            if buf.iter().any(|v| !v.is_finite()) {
                return Err(QuadError::NonFinite { x });
            }
            Ok(())
        };

        eval(center, buf)?;
        for (k, v) in buf.iter().enumerate() {
            kronrod[k] += WGK[7] * v;
            gauss[k] += WG[3] * v;
        }
        for (j, &x) in XGK.iter().enumerate().take(7) {
            let dx = half * x;
            for &sign in &[-1.0, 1.0] {
                eval(center + sign * dx, buf)?;
                for (k, v) in buf.iter().enumerate() {
                    kronrod[k] += WGK[j] * v;
                    if j % 2 == 1 {
                        gauss[k] += WG[j / 2] * v;
                    }
                }
            }
        }
        let mut error = 0.0f64;
        for k in 0..dim {
            error = error.max(((kronrod[k] - gauss[k]) * half).abs());
        }
        let value = kronrod.iter().map(|v| v * half).collect();
        Ok(VSeg { a, b, value, error })
    };

    let mut buf = vec![0.0; dim];
    let mut segments = vec![gk(a, b, &mut buf)?];
    loop {
        let mut total = vec![0.0; dim];
        for s in &segments {
            for (t, v) in total.iter_mut().zip(&s.value) {
                *t += v;
            }
        }
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if error <= abs_tol.max(rel_tol * scale) {
            return Ok((total, error));
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(QuadError::ToleranceNotReached { error, evaluations: segments.len() * 15 });
        }
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let seg = segments.swap_remove(idx);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            segments.push(seg);
            let mut total = vec![0.0; dim];
            for s in &segments {
                for (t, v) in total.iter_mut().zip(&s.value) {
                    *t += v;
                }
            }
            let error: f64 = segments.iter().map(|s| s.error).sum();
            return Ok((total, error));
        }
        segments.push(gk(seg.a, mid, &mut buf)?);
        segments.push(gk(mid, seg.b, &mut buf)?);
    }
}
