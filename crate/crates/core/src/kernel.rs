//! Bessel-potential kernel `R_β` (the inverse Fourier transform of
//! `(1+|ξ|²)^{−β/2}`, normalized to unit mass), its `L_r` norms and the
//! self-convolution `R_β^r ∗ R_β^r` that controls the noise condition.
//!
//! `R_β` is evaluated through the heat-kernel subordination integral
//!
//! ```text
//! R_β(x) = 1/(Γ(β/2)(4π)^{d/2}) ∫₀^∞ t^{(β−d)/2−1} e^{−t} e^{−|x|²/(4t)} dt
//! ```
//!
//! with a trapezoid rule in `s = ln t`. Repeated evaluations go through a
//! [`BesselKernel`] table of `ln R` on a uniform grid in `ln |x|`.

use std::cell::RefCell;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quadrature::{
    integrate, integrate_decaying, integrate_singular_left, integrate_to_infinity, Tolerance,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureScheme {
    /// Initial trapezoid step in `ln t`; halved until converged.
    pub log_time_step: f64,
    /// Relative convergence target for one kernel value.
    pub rel_tol: f64,
    /// Half-width of the integration window, in e-folds below the peak.
    pub window_efolds: f64,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self {
            log_time_step: 0.5,
            rel_tol: 1e-9,
            window_efolds: 45.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselKernelSpec {
    pub beta: f64,
    pub d: usize,
    pub quadrature: QuadratureScheme,
}

impl BesselKernelSpec {
    /// Accepts any `β > 0`; the near-origin power law and the `L_r`
    /// threshold only apply in the singular regime `β < d`.
    pub fn new(beta: f64, d: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(domain(format!("kernel order β = {beta} must be positive")));
        }
        if !(1..=3).contains(&d) {
            return Err(domain(format!("kernel dimension d = {d} outside 1..=3")));
        }
        Ok(Self {
            beta,
            d,
            quadrature: QuadratureScheme::default(),
        })
    }

    pub fn is_singular(&self) -> bool {
        self.beta < self.d as f64
    }

    /// `ln` of `1/(Γ(β/2)(4π)^{d/2})`.
    fn ln_prefactor(&self) -> f64 {
        -libm::lgamma(0.5 * self.beta) - 0.5 * self.d as f64 * (4.0 * PI).ln()
    }

    /// Threshold `d/(d−β)` above which `R_β ∉ L_r`; infinite when `β ≥ d`.
    pub fn lr_threshold(&self) -> f64 {
        if self.is_singular() {
            self.d as f64 / (self.d as f64 - self.beta)
        } else {
            f64::INFINITY
        }
    }
}

/// Surface area of the unit sphere in `ℝ^d` (counting measure in `d = 1`).
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(0.5 * d as f64) / libm::tgamma(0.5 * d as f64),
    }
}

/// `ln R_β(radius)` by direct quadrature.
pub fn ln_bessel_eval(spec: &BesselKernelSpec, radius: f64) -> Result<f64> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(domain(format!("kernel radius {radius} must be positive")));
    }
    let c = 0.5 * (spec.beta - spec.d as f64);
    let rho2 = radius * radius;
    // exponent g(s) = c·s − e^s − ρ² e^{−s}/4 is strictly concave in s
    let g = |s: f64| c * s - s.exp() - 0.25 * rho2 * (-s).exp();
    // positive root of t² − c·t − ρ²/4, written without cancellation
    let root = (c * c + rho2).sqrt();
    let peak_t = if c >= 0.0 {
        0.5 * (c + root)
    } else {
        0.5 * rho2 / (root - c)
    };
    let s_peak = peak_t.ln();
    let g_peak = g(s_peak);
    let drop = spec.quadrature.window_efolds;
    let mut lo = s_peak - 1.0;
    while g(lo) > g_peak - drop {
        lo -= 1.0;
    }
    let mut hi = s_peak + 1.0;
    while g(hi) > g_peak - drop {
        hi += 1.0;
    }
    let curvature = peak_t + 0.25 * rho2 / peak_t;
    let mut step = spec.quadrature.log_time_step.min(0.5 / curvature.sqrt());
    let integrand = |s: f64| (g(s) - g_peak).exp();
    let mut prev = crate::quadrature::trapezoid_uniform(&integrand, lo, hi, step);
    for _ in 0..16 {
        step *= 0.5;
        let next = crate::quadrature::trapezoid_uniform(&integrand, lo, hi, step);
        if (next - prev).abs() <= spec.quadrature.rel_tol * next.abs() {
            return Ok(next.ln() + g_peak + spec.ln_prefactor());
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "R_{}(|x| = {radius}) in d = {}: trapezoid refinement did not stabilize",
        spec.beta, spec.d
    )))
}

/// `R_β(x)` at `|x| = radius`.
pub fn bessel_eval(spec: &BesselKernelSpec, radius: f64) -> Result<f64> {
    ln_bessel_eval(spec, radius).map(f64::exp)
}

/// Tabulated `ln R_β` with cubic Hermite interpolation in `(ln ρ, ln R)`.
#[derive(Debug, Clone)]
pub struct BesselKernel {
    spec: BesselKernelSpec,
    u_lo: f64,
    du: f64,
    ln_values: Vec<f64>,
    slopes: Vec<f64>,
    rho_max: f64,
}

const TABLE_RHO_MIN: f64 = 1e-14;
const TABLE_RHO_MAX: f64 = 90.0;
const TABLE_STEP: f64 = 0.02;

impl BesselKernel {
    pub fn new(spec: BesselKernelSpec) -> Result<Self> {
        let u_lo = TABLE_RHO_MIN.ln();
        let u_hi = TABLE_RHO_MAX.ln();
        let n = ((u_hi - u_lo) / TABLE_STEP).ceil() as usize + 1;
        let du = (u_hi - u_lo) / (n - 1) as f64;
        let ln_values = (0..n)
            .map(|i| ln_bessel_eval(&spec, (u_lo + i as f64 * du).exp()))
            .collect::<Result<Vec<_>>>()?;
        let slopes = (0..n)
            .map(|i| {
                let y = &ln_values;
                if i >= 2 && i + 2 < n {
                    (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * du)
                } else if i == 0 {
                    (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * du)
                } else if i == n - 1 {
                    (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * du)
                } else {
                    (y[i + 1] - y[i - 1]) / (2.0 * du)
                }
            })
            .collect();
        Ok(Self {
            spec,
            u_lo,
            du,
            ln_values,
            slopes,
            rho_max: TABLE_RHO_MAX,
        })
    }

    pub fn spec(&self) -> &BesselKernelSpec {
        &self.spec
    }

    /// `ln R_β(ρ)`; `+∞` at `ρ = 0` in the singular regime.
    pub fn ln_value(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return if self.spec.is_singular() {
                f64::INFINITY
            } else {
                self.ln_values[0]
            };
        }
        let n = self.ln_values.len();
        if rho >= self.rho_max {
            // R_β(ρ) ~ ρ^{(β−d−1)/2} e^{−ρ}
            let last = self.ln_values[n - 1];
            let p = 0.5 * (self.spec.beta - self.spec.d as f64 - 1.0);
            return last - (rho - self.rho_max) + p * (rho / self.rho_max).ln();
        }
        let u = rho.ln();
        let x = (u - self.u_lo) / self.du;
        if x <= 0.0 {
            return self.ln_values[0] + self.slopes[0] * (u - self.u_lo);
        }
        let i = (x.floor() as usize).min(n - 2);
        let t = x - i as f64;
        let (y0, y1) = (self.ln_values[i], self.ln_values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.du, self.slopes[i + 1] * self.du);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    pub fn value(&self, rho: f64) -> f64 {
        self.ln_value(rho).exp()
    }

    /// Near-origin exponent of `R^r(ρ) ρ^{d−1}`, slightly lowered in the
    /// logarithmic case `β = d`.
    fn radial_exponent(&self, r: f64) -> f64 {
        let d = self.spec.d as f64;
        if self.spec.is_singular() {
            r * (self.spec.beta - d) + d - 1.0
        } else {
            d - 1.0 - 0.1
        }
    }

    /// `∫_{ℝ^d} R_β(x)^r dx`, or `None` when it diverges.
    pub fn power_integral(&self, r: f64) -> Result<Option<f64>> {
        if r >= self.spec.lr_threshold() {
            return Ok(None);
        }
        let d = self.spec.d;
        let tol = Tolerance::rel(1e-10);
        let f = |rho: f64| (r * self.ln_value(rho)).exp() * rho.powi(d as i32 - 1);
        let near = integrate_singular_left(f, 0.0, 1.0, self.radial_exponent(r), tol)?;
        let far = integrate_to_infinity(f, 1.0, 4.0, tol)?;
        Ok(Some(sphere_area(d) * (near.value + far.value)))
    }

    /// `(R^r ∗ R^r)(x)` at `|x| = radius`, `None` when infinite.
    pub fn self_convolution(&self, r: f64, radius: f64) -> Result<Option<f64>> {
        if radius <= 0.0 {
            return self.power_integral(2.0 * r);
        }
        if r >= self.spec.lr_threshold() {
            return Ok(None);
        }
        let a = radius;
        let d = self.spec.d;
        let tol = Tolerance::rel(1e-9);
        let exponent = self.radial_exponent(r);
        // Reflection y -> x - y swaps the two factors, so the integral is twice
        // the integral over the half-space H = {y.e1 < a/2}, where only the
        // pole at y = 0 is present. The polar angle is measured from e1.
        let inner = |theta: f64| -> Result<f64> {
            let ct = theta.cos();
            let f = |rho: f64| {
                let dist2 = (a * a + rho * rho - 2.0 * a * rho * ct).max(0.0);
                (r * (self.ln_value(rho) + self.ln_value(dist2.sqrt()))).exp()
                    * rho.powi(d as i32 - 1)
            };
            let split = 0.5 * a;
            let near = integrate_singular_left(f, 0.0, split, exponent, tol)?.value;
            let rho_max = if ct > 0.0 { split / ct } else { f64::INFINITY };
            let far = if rho_max > split {
                integrate_decaying(f, split, rho_max, a.max(1.0), tol)?.value
            } else {
                0.0
            };
            Ok(near + far)
        };
        let half_space = if d == 1 {
            inner(0.0)? + inner(PI)?
        } else {
            let failure = RefCell::new(None);
            let g = |theta: f64| {
                let weight = if d == 2 { 2.0 } else { 2.0 * PI * theta.sin() };
                match inner(theta) {
                    Ok(v) => weight * v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            };
            let tol = Tolerance::rel(1e-8);
            let total = integrate(g, 0.0, 0.5 * PI, tol)?.value + integrate(g, 0.5 * PI, PI, tol)?.value;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            total
        };
        Ok(Some(2.0 * half_space))
    }
}

/// Finite value or an analytic divergence verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Finite(f64),
    Divergent { reason: String },
}

impl Verdict {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Verdict::Finite(v) => Some(*v),
            Verdict::Divergent { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Verdict::Finite(_))
    }
}

/// `‖R_β‖_{L_r}`; divergent exactly when `r ≥ d/(d−β)`.
pub fn kernel_lr_norm(spec: &BesselKernelSpec, r: f64) -> Result<Verdict> {
    BesselKernel::new(*spec)?.lr_norm(r)
}

/// `(R_β^r ∗ R_β^r)(x)` at `|x| = radius`.
pub fn conv_rr(spec: &BesselKernelSpec, r: f64, radius: f64) -> Result<Verdict> {
    BesselKernel::new(*spec)?.conv_rr(r, radius)
}

impl BesselKernel {
    pub fn lr_norm(&self, r: f64) -> Result<Verdict> {
        if !(r >= 1.0) {
            return Err(domain(format!("L_r norm needs r ≥ 1, got {r}")));
        }
        let threshold = self.spec.lr_threshold();
        match self.power_integral(r)? {
            Some(v) => Ok(Verdict::Finite(v.powf(1.0 / r))),
            None => Ok(Verdict::Divergent {
                reason: format!(
                    "R_β ~ |x|^(β−d) near 0 with β = {}, d = {}: |x|^(r(β−d)) is not locally \
                     integrable for r = {r} ≥ d/(d−β) = {threshold}",
                    self.spec.beta, self.spec.d
                ),
            }),
        }
    }

    pub fn conv_rr(&self, r: f64, radius: f64) -> Result<Verdict> {
        if !(r >= 1.0) {
            return Err(domain(format!("convolution power needs r ≥ 1, got {r}")));
        }
        if radius < 0.0 {
            return Err(domain(format!("negative radius {radius}")));
        }
        let (beta, d) = (self.spec.beta, self.spec.d);
        match self.self_convolution(r, radius)? {
            Some(v) => Ok(Verdict::Finite(v)),
            None if radius == 0.0 => Ok(Verdict::Divergent {
                reason: format!(
                    "(R^r ∗ R^r)(0) = ‖R_β‖_{{2r}}^{{2r}} diverges: 2r = {} ≥ d/(d−β) = {}",
                    2.0 * r,
                    self.spec.lr_threshold()
                ),
            }),
            None => Ok(Verdict::Divergent {
                reason: format!(
                    "R_β^r is not locally integrable for r = {r} ≥ d/(d−β) (β = {beta}, d = {d})"
                ),
            }),
        }
    }

    /// Constants `(N₁, N₂)` with `N₁ ρ^{β−d} ≤ R_β(ρ) ≤ N₂ ρ^{β−d}` sampled on
    /// `ρ ∈ [10⁻⁸, 2]`.
    pub fn sandwich_constants(&self) -> Result<(f64, f64)> {
        if !self.spec.is_singular() {
            return Err(domain("sandwich bounds need β < d"));
        }
        let p = self.spec.beta - self.spec.d as f64;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for rho in crate::bernstein::log_space(1e-8, 2.0, 200) {
            let ratio = (self.ln_value(rho) - p * rho.ln()).exp();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        Ok((lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticClass {
    Bounded,
    Logarithmic,
    /// `|x|^{exponent}` with `exponent = 2α − d`.
    Power(f64),
}

/// Near-origin behavior of `R^r ∗ R^r` from the index `α = d − r(d − β)`.
pub fn asymptotic_class(alpha_index: f64, d: usize) -> Result<AsymptoticClass> {
    let df = d as f64;
    if !(alpha_index > 0.0 && alpha_index < df) {
        return Err(domain(format!("α = {alpha_index} outside (0, {d})")));
    }
    let half = 0.5 * df;
    Ok(if (alpha_index - half).abs() <= 1e-12 {
        AsymptoticClass::Logarithmic
    } else if alpha_index > half {
        AsymptoticClass::Bounded
    } else {
        AsymptoticClass::Power(2.0 * alpha_index - df)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvRow {
    pub radius: f64,
    pub value: f64,
    /// Least-squares log-log slope over this radius and its neighbors.
    pub fitted_slope_window: f64,
}

/// Convolution values over `radii` with local log-log slopes.
pub fn convolution_table(kernel: &BesselKernel, r: f64, radii: &[f64]) -> Result<Vec<ConvRow>> {
    let values = radii
        .iter()
        .map(|&rad| {
            kernel.conv_rr(r, rad)?.finite().ok_or_else(|| {
                domain(format!("convolution diverges at radius {rad}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = radii.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(n);
            let slope = crate::fit::loglog_fit(&radii[lo..hi], &values[lo..hi])
                .map(|f| f.slope)
                .unwrap_or(f64::NAN);
            ConvRow {
                radius: radii[i],
                value: values[i],
                fitted_slope_window: slope,
            }
        })
        .collect())
}

pub fn convolution_csv(rows: &[ConvRow]) -> String {
    let mut out = String::from("radius,value,fitted_slope_window\n");
    for row in rows {
        out.push_str(&format!(
            "{:e},{:e},{}\n",
            row.radius, row.value, row.fitted_slope_window
        ));
    }
    out
}
