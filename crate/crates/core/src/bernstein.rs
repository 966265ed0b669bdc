//! Catalog of Bernstein functions with weak lower scaling.
//!
//! Every family is a closed form with validated parameters; the declared
//! scaling index `δ₀` is attached per family and the scaling constant `c₀` is
//! certified numerically on a log-spaced grid at construction time.

use std::fmt;

use crate::error::{domain, invalid, Error, Result};
use crate::notation::FamilyCall;
use crate::rational::{self, q, qi, Q};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `λ^β`, `0 < β ≤ 1`.
    Stable { beta: f64 },
    /// `λ^{β₁} + λ^{β₂}`, `0 < β₁, β₂ ≤ 1`.
    StableSum { beta1: f64, beta2: f64 },
    /// `λ^β log(1+λ)^γ`, `β ∈ (0,1)`, `γ ∈ (−β, 1−β)`.
    StableLog { beta: f64, gamma: f64 },
    /// `(λ + m^{1/β})^β − m`, `β ∈ (0,1)`, `m > 0`.
    Relativistic { beta: f64, m: f64 },
    /// `λ / log(1 + λ^{β/2})`, `β ∈ (0,2)`.
    ConjugateGeometric { beta: f64 },
}

impl Family {
    fn validate(&self) -> Result<()> {
        let ok = |cond: bool, msg: &str| if cond { Ok(()) } else { Err(invalid(msg.to_string())) };
        match *self {
            Family::Stable { beta } => ok(beta > 0.0 && beta <= 1.0, "stable: need 0 < β ≤ 1"),
            Family::StableSum { beta1, beta2 } => ok(
                beta1 > 0.0 && beta1 <= 1.0 && beta2 > 0.0 && beta2 <= 1.0,
                "stable_sum: need 0 < β₁, β₂ ≤ 1",
            ),
            Family::StableLog { beta, gamma } => {
                ok(beta > 0.0 && beta < 1.0, "stable_log: need β ∈ (0,1)")?;
                ok(gamma > -beta && gamma < 1.0 - beta, "stable_log: need γ ∈ (−β, 1−β)")
            }
            Family::Relativistic { beta, m } => {
                ok(beta > 0.0 && beta < 1.0, "relativistic: need β ∈ (0,1)")?;
                ok(m > 0.0 && m.is_finite(), "relativistic: need m > 0")
            }
            Family::ConjugateGeometric { beta } => {
                ok(beta > 0.0 && beta < 2.0, "conj_geometric: need β ∈ (0,2)")
            }
        }
    }

    fn value(&self, lambda: f64) -> f64 {
        match *self {
            Family::Stable { beta } => lambda.powf(beta),
            Family::StableSum { beta1, beta2 } => lambda.powf(beta1) + lambda.powf(beta2),
            Family::StableLog { beta, gamma } => lambda.powf(beta) * lambda.ln_1p().powf(gamma),
            Family::Relativistic { beta, m } => {
                // m((1 + λ/μ)^β − 1) with μ = m^{1/β}; avoids cancellation for small λ
                let mu = m.powf(1.0 / beta);
                m * (beta * (lambda / mu).ln_1p()).exp_m1()
            }
            Family::ConjugateGeometric { beta } => lambda / lambda.powf(0.5 * beta).ln_1p(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinFunction {
    family: Family,
    delta0: Q,
    c0: f64,
    label: String,
}

/// Default certification grid: 60 log-spaced points on `[1e-6, 1e6]`.
pub fn default_ratio_grid() -> Vec<(f64, f64)> {
    let pts = log_space(1e-6, 1e6, 60);
    let mut grid = Vec::with_capacity(pts.len() * (pts.len() + 1) / 2);
    for (i, &r) in pts.iter().enumerate() {
        for &big in &pts[i..] {
            grid.push((r, big));
        }
    }
    grid
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

impl BernsteinFunction {
    fn build(family: Family, delta0: Q, label: String) -> Result<Self> {
        family.validate()?;
        let mut phi = Self {
            family,
            delta0,
            c0: 0.0,
            label,
        };
        phi.c0 = scaling_certificate(&phi, phi.declared_delta0(), &default_ratio_grid())?;
        Ok(phi)
    }

    fn exact(x: f64) -> Result<Q> {
        rational::from_f64(x)
    }

    pub fn stable(beta: f64) -> Result<Self> {
        Self::build(Family::Stable { beta }, Self::exact(beta)?, format!("stable({beta})"))
    }

    pub fn stable_sum(beta1: f64, beta2: f64) -> Result<Self> {
        Self::build(
            Family::StableSum { beta1, beta2 },
            Self::exact(beta1.min(beta2))?,
            format!("stable_sum({beta1}, {beta2})"),
        )
    }

    pub fn stable_log(beta: f64, gamma: f64) -> Result<Self> {
        Self::build(
            Family::StableLog { beta, gamma },
            Self::exact(beta)?,
            format!("stable_log({beta}, gamma={gamma})"),
        )
    }

    pub fn relativistic(beta: f64, m: f64) -> Result<Self> {
        Self::build(
            Family::Relativistic { beta, m },
            Self::exact(beta)?,
            format!("relativistic({beta}, m={m})"),
        )
    }

    pub fn conjugate_geometric(beta: f64) -> Result<Self> {
        Self::build(
            Family::ConjugateGeometric { beta },
            Self::exact(1.0 - 0.5 * beta)?,
            format!("conj_geometric({beta})"),
        )
    }

    /// Parses `stable(β)`, `stable_sum(β₁, β₂)`, `stable_log(β, gamma=γ)`,
    /// `relativistic(β, m=m)` or `conj_geometric(β)`. Arguments are exact
    /// rationals, so the declared `δ₀` is exact as well.
    pub fn parse(text: &str) -> Result<Self> {
        let call = FamilyCall::parse(text)?;
        let f = |x: &Q| rational::to_f64(x);
        let show = rational::show;
        match call.name.as_str() {
            "stable" => {
                call.check_arity(&["beta"])?;
                let b = call.require("beta", 0)?;
                Self::build(Family::Stable { beta: f(b) }, b.clone(), format!("stable({})", show(b)))
            }
            "stable_sum" => {
                call.check_arity(&["beta1", "beta2"])?;
                let b1 = call.require("beta1", 0)?;
                let b2 = call.require("beta2", 1)?;
                Self::build(
                    Family::StableSum { beta1: f(b1), beta2: f(b2) },
                    rational::min(b1, b2),
                    format!("stable_sum({}, {})", show(b1), show(b2)),
                )
            }
            "stable_log" => {
                call.check_arity(&["beta", "gamma"])?;
                let b = call.require("beta", 0)?;
                let g = call.require("gamma", 1)?;
                Self::build(
                    Family::StableLog { beta: f(b), gamma: f(g) },
                    b.clone(),
                    format!("stable_log({}, gamma={})", show(b), show(g)),
                )
            }
            "relativistic" => {
                call.check_arity(&["beta", "m"])?;
                let b = call.require("beta", 0)?;
                let m = call.require("m", 1)?;
                Self::build(
                    Family::Relativistic { beta: f(b), m: f(m) },
                    b.clone(),
                    format!("relativistic({}, m={})", show(b), show(m)),
                )
            }
            "conj_geometric" | "conjugate_geometric" => {
                call.check_arity(&["beta"])?;
                let b = call.require("beta", 0)?;
                Self::build(
                    Family::ConjugateGeometric { beta: f(b) },
                    qi(1) - b * q(1, 2),
                    format!("conj_geometric({})", show(b)),
                )
            }
            other => Err(invalid(format!("unknown Bernstein family `{other}`"))),
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn declared_delta0(&self) -> f64 {
        rational::to_f64(&self.delta0)
    }

    pub fn declared_delta0_exact(&self) -> &Q {
        &self.delta0
    }

    /// Scaling constant certified on [`default_ratio_grid`].
    pub fn declared_c0(&self) -> f64 {
        self.c0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `φ(λ)` for `λ > 0`.
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(domain(format!("φ evaluated at λ = {lambda}; need λ > 0")));
        }
        Ok(self.family.value(lambda))
    }

    /// Fourier multiplier of `−φ(Δ)` at `|ξ|² = xi_sq`; zero at the origin.
    pub fn symbol(&self, xi_sq: f64) -> f64 {
        if xi_sq <= 0.0 {
            0.0
        } else {
            self.family.value(xi_sq)
        }
    }
}

impl fmt::Display for BernsteinFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// `min over (r, R) of [φ(R)/φ(r)] / (R/r)^δ`.
pub fn scaling_certificate(phi: &BernsteinFunction, delta: f64, grid: &[(f64, f64)]) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain(format!("scaling index {delta} outside (0,1]")));
    }
    if grid.is_empty() {
        return Err(domain("empty ratio grid"));
    }
    let mut best = f64::INFINITY;
    for &(r, big) in grid {
        if !(r > 0.0 && r <= big) {
            return Err(domain(format!("grid pair ({r}, {big}) is not ordered and positive")));
        }
        let ratio = (phi.eval(big)?.ln() - phi.eval(r)?.ln() - delta * (big / r).ln()).exp();
        best = best.min(ratio);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub holds: bool,
    /// Largest `(−1)^n D^n φ(λ)` found, relative to `φ(λ)/λ^n`; zero when none is positive.
    pub worst_violation: f64,
    /// Set when no step size gave a stable finite-difference estimate.
    pub unstable: bool,
}

/// Central-difference estimate of `D^n φ(λ)` with the stencil error estimate.
pub fn finite_difference(phi: &BernsteinFunction, n: usize, lambda: f64) -> Result<(f64, f64)> {
    let stencil = |h: f64| -> Result<f64> {
        let f = |k: f64| phi.eval(lambda + k * h);
        Ok(match n {
            1 => (f(1.0)? - f(-1.0)?) / (2.0 * h),
            2 => (f(1.0)? - 2.0 * f(0.0)? + f(-1.0)?) / (h * h),
            3 => (f(2.0)? - 2.0 * f(1.0)? + 2.0 * f(-1.0)? - f(-2.0)?) / (2.0 * h.powi(3)),
            4 => (f(2.0)? - 4.0 * f(1.0)? + 6.0 * f(0.0)? - 4.0 * f(-1.0)? + f(-2.0)?) / h.powi(4),
            _ => return Err(domain(format!("derivative order {n} not supported (1..=4)"))),
        })
    };
    let h0 = (1e-4 * lambda).max(1e-6);
    let h_max = lambda / 2.5;
    let mut estimates = Vec::new();
    let mut h = h0;
    while h < h_max && estimates.len() < 12 {
        estimates.push(stencil(h)?);
        h *= 4.0;
    }
    if estimates.is_empty() {
        return Err(domain(format!("λ = {lambda} too small for a centered stencil")));
    }
    if estimates.len() == 1 {
        return Ok((estimates[0], f64::INFINITY));
    }
    let (best, err) = estimates
        .windows(2)
        .map(|w| (w[0], (w[0] - w[1]).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least two estimates");
    Ok((best, err))
}

/// Checks `(−1)^n D^n φ ≤ tol` for `n = 1..=n_max` on the grid.
pub fn bernstein_property_check(
    phi: &BernsteinFunction,
    n_max: usize,
    lambda_grid: &[f64],
) -> Result<PropertyReport> {
    if n_max == 0 || n_max > 4 {
        return Err(Error::Domain(format!("n_max = {n_max}; need 1 ≤ n_max ≤ 4")));
    }
    let mut worst: f64 = 0.0;
    let mut unstable = false;
    let mut holds = true;
    for &lambda in lambda_grid {
        let value = phi.eval(lambda)?;
        for n in 1..=n_max {
            let (d, err) = finite_difference(phi, n, lambda)?;
            let scale = value / lambda.powi(n as i32);
            if !(err <= 1e-2 * scale.max(d.abs())) {
                unstable = true;
            }
            let signed = if n % 2 == 0 { d } else { -d };
            let tol = 1e-6 * scale + err;
            if signed > tol {
                holds = false;
            }
            worst = worst.max(signed / scale);
        }
    }
    Ok(PropertyReport {
        holds,
        worst_violation: worst.max(0.0),
        unstable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(BernsteinFunction::stable(0.5).unwrap().eval(4.0).unwrap(), 2.0);
        let rel = BernsteinFunction::relativistic(0.5, 1.0).unwrap();
        assert!((rel.eval(3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((rel.symbol(8.0) - 2.0).abs() < 1e-15);
        let sum = BernsteinFunction::stable_sum(0.3, 0.7).unwrap();
        assert_eq!(sum.eval(1.0).unwrap(), 2.0);
        assert!(sum.eval(0.0).is_err());
        assert!(sum.eval(-1.0).is_err());
    }

    #[test]
    fn symbol_vanishes_at_origin() {
        for phi in catalog() {
            assert_eq!(phi.symbol(0.0), 0.0);
        }
        assert_eq!(BernsteinFunction::stable(0.5).unwrap().symbol(9.0), 3.0);
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        assert!(BernsteinFunction::stable(1.5).is_err());
        assert!(BernsteinFunction::stable(0.0).is_err());
        assert!(BernsteinFunction::stable_log(0.5, 0.6).is_err());
        assert!(BernsteinFunction::stable_log(0.5, -0.5).is_err());
        assert!(BernsteinFunction::relativistic(1.0, 1.0).is_err());
        assert!(BernsteinFunction::relativistic(0.5, 0.0).is_err());
        assert!(BernsteinFunction::conjugate_geometric(2.0).is_err());
        assert!(BernsteinFunction::parse("stable(3/2)").is_err());
        assert!(BernsteinFunction::parse("levy(1/2)").is_err());
    }

    #[test]
    fn declared_indices() {
        assert_eq!(*BernsteinFunction::parse("stable_sum(3/10, 7/10)").unwrap().declared_delta0_exact(), q(3, 10));
        assert_eq!(*BernsteinFunction::parse("conj_geometric(1)").unwrap().declared_delta0_exact(), q(1, 2));
        assert_eq!(*BernsteinFunction::parse("relativistic(1/2, m=2)").unwrap().declared_delta0_exact(), q(1, 2));
        assert_eq!(BernsteinFunction::parse("stable_log(1/2, gamma=3/10)").unwrap().label(), "stable_log(1/2, gamma=3/10)");
    }

    #[test]
    fn stable_certificate_is_exact() {
        let phi = BernsteinFunction::stable(0.5).unwrap();
        let c = scaling_certificate(&phi, 0.5, &default_ratio_grid()).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        let c = scaling_certificate(&phi, 0.7, &[(1.0, 100.0), (1.0, 1.0)]).unwrap();
        assert!(c <= 100f64.powf(-0.2) + 1e-12);
        assert!((c - 0.398_107_170_553_497_25).abs() < 1e-12);
        assert!(scaling_certificate(&phi, 0.5, &[]).is_err());
        assert!(scaling_certificate(&phi, 0.5, &[(2.0, 1.0)]).is_err());
    }

    #[test]
    fn property_check_examples() {
        let grid = log_space(1e-2, 1e2, 9);
        let r = bernstein_property_check(&BernsteinFunction::stable(0.5).unwrap(), 3, &grid).unwrap();
        assert!(r.holds && !r.unstable, "{r:?}");
        let r = bernstein_property_check(&BernsteinFunction::stable(1.0).unwrap(), 2, &grid).unwrap();
        assert!(r.holds, "{r:?}");
        let (d2, _) = finite_difference(&BernsteinFunction::stable(1.0).unwrap(), 2, 3.0).unwrap();
        assert!(d2.abs() < 1e-6);
        assert!(bernstein_property_check(&BernsteinFunction::stable(0.5).unwrap(), 5, &grid).is_err());
    }

    #[test]
    fn stable_log_matches_symbolic_derivatives() {
        // φ = λ^β L^γ with L = log(1+λ):
        // φ'  = βλ^{β−1}L^γ + γλ^β L^{γ−1}/(1+λ)
        // φ'' = β(β−1)λ^{β−2}L^γ + 2βγλ^{β−1}L^{γ−1}/(1+λ)
        //       + γ(γ−1)λ^β L^{γ−2}/(1+λ)² − γλ^β L^{γ−1}/(1+λ)²
        let (b, g) = (0.5f64, 0.3f64);
        let phi = BernsteinFunction::stable_log(b, g).unwrap();
        for &x in &log_space(1e-2, 1e2, 7) {
            let l = x.ln_1p();
            let d1 = b * x.powf(b - 1.0) * l.powf(g) + g * x.powf(b) * l.powf(g - 1.0) / (1.0 + x);
            let d2 = b * (b - 1.0) * x.powf(b - 2.0) * l.powf(g)
                + 2.0 * b * g * x.powf(b - 1.0) * l.powf(g - 1.0) / (1.0 + x)
                + g * (g - 1.0) * x.powf(b) * l.powf(g - 2.0) / (1.0 + x).powi(2)
                - g * x.powf(b) * l.powf(g - 1.0) / (1.0 + x).powi(2);
            assert!(d1 > 0.0 && d2 < 0.0);
            let (e1, _) = finite_difference(&phi, 1, x).unwrap();
            let (e2, _) = finite_difference(&phi, 2, x).unwrap();
            assert!((e1 - d1).abs() <= 1e-6 * d1.abs(), "{x}: {e1} vs {d1}");
            assert!((e2 - d2).abs() <= 1e-4 * d2.abs(), "{x}: {e2} vs {d2}");
        }
        let r = bernstein_property_check(&phi, 2, &log_space(1e-2, 1e2, 9)).unwrap();
        assert!(r.holds, "{r:?}");
    }

    pub(crate) fn catalog() -> Vec<BernsteinFunction> {
        vec![
            BernsteinFunction::stable(0.5).unwrap(),
            BernsteinFunction::stable(1.0).unwrap(),
            BernsteinFunction::stable_sum(0.3, 0.7).unwrap(),
            BernsteinFunction::stable_log(0.5, 0.3).unwrap(),
            BernsteinFunction::stable_log(0.5, -0.2).unwrap(),
            BernsteinFunction::relativistic(0.5, 1.0).unwrap(),
            BernsteinFunction::conjugate_geometric(1.0).unwrap(),
        ]
    }
}
