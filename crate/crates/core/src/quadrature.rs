//! Adaptive Gauss–Kronrod quadrature and the substitutions used for the
//! power-law singular integrands of the kernel module.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-14,
            rel: 1e-9,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Self {
            rel,
            ..Self::default()
        }
    }
}

/// One 15-point Kronrod panel with the embedded 7-point Gauss estimate.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive bisection on the panel with the largest error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut evaluations = 15;
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "[{a}, {b}]: {} panels, estimate {total:e} +/- {total_err:e}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let (lv, le) = gk15(&f, worst.a, mid);
        let (rv, re) = gk15(&f, mid, worst.b);
        evaluations += 30;
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, error: re });
    }
    // recompute from the panels to shed accumulated cancellation
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral on [{a}, {b}]")));
    }
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// `∫_a^b f` for `f(x) ~ (x − a)^exponent` near `a`, `exponent > −1`.
///
/// Uses `x = a + (b − a) w^{1/(exponent+1)}`, which turns the endpoint
/// singularity into a bounded integrand on `[0, 1]`.
pub fn integrate_singular_left<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    exponent: f64,
    tol: Tolerance,
) -> Result<QuadResult> {
    if exponent <= -1.0 {
        return Err(Error::Quadrature(format!(
            "endpoint exponent {exponent} is not integrable"
        )));
    }
    let k = 1.0 / (exponent + 1.0);
    let len = b - a;
    integrate(
        |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let x = a + len * w.powf(k);
            let jac = len * k * w.powf(k - 1.0);
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_a^∞ f` for integrands with at least exponential decay.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    initial_width: f64,
    tol: Tolerance,
) -> Result<QuadResult> {
    integrate_decaying(f, a, f64::INFINITY, initial_width, tol)
}

/// `∫_a^b f` (possibly `b = ∞`) for integrands concentrated near `a`.
/// Panels of doubling width are added until `b` is reached or a panel
/// contributes below the tolerance.
pub fn integrate_decaying<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    initial_width: f64,
    tol: Tolerance,
) -> Result<QuadResult> {
    let mut lo = a;
    let mut width = initial_width.max(1e-3);
    let mut acc = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for _ in 0..80 {
        let hi = (lo + width).min(b);
        let piece = integrate(&f, lo, hi, tol)?;
        acc.value += piece.value;
        acc.error += piece.error;
        acc.evaluations += piece.evaluations;
        if hi >= b || piece.value.abs() <= tol.abs.max(1e-3 * tol.rel * acc.value.abs()) {
            return Ok(acc);
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Quadrature(format!("integral from {a} did not decay")))
}

/// Composite trapezoid on a uniform grid; spectrally accurate for the
/// doubly-exponentially decaying integrands produced by log substitutions.
pub fn trapezoid_uniform<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    let mut sum = 0.5 * (f(lo) + f(hi));
    for i in 1..n {
        sum += f(lo + i as f64 * h);
    }
    sum * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn endpoint_power_singularity() {
        // ∫_0^1 x^{-0.9} dx = 10
        let r = integrate_singular_left(|x| x.powf(-0.9), 0.0, 1.0, -0.9, Tolerance::rel(1e-10))
            .unwrap();
        assert!((r.value - 10.0).abs() < 1e-8, "{}", r.value);
        assert!(integrate_singular_left(|x| 1.0 / x, 0.0, 1.0, -1.0, Tolerance::default()).is_err());
    }

    #[test]
    fn exponential_tail() {
        let r = integrate_to_infinity(|x| (-x).exp(), 1.0, 1.0, Tolerance::rel(1e-11)).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn trapezoid_on_gaussian_is_spectral() {
        let v = trapezoid_uniform(&|x: f64| (-x * x).exp(), -10.0, 10.0, 0.5);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
