//! Spatial correlation measures `π` of the noise, the index
//! `α = d − r(d − δ₀(1−γ))`, branch-wise noise-condition verdicts, the
//! integral `ν = ∫ (R^r ∗ R^r) dπ` and spectral weights for noise synthesis.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{domain, invalid, Result};
use crate::kernel::{BesselKernel, BesselKernelSpec, Verdict};
use crate::notation::FamilyCall;
use crate::quadrature::{integrate_decaying, integrate_singular_left, Tolerance};
use crate::rational::{self, qi, Q};

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureFamily {
    /// Point mass at the origin (space-time white noise).
    DiracZero,
    /// Density `|x|^{−a}`, `0 < a < d`.
    Riesz { a: Q },
    /// Density `exp(−|x|²/(2σ²))`.
    Gaussian { sigma: Q },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMeasure {
    family: MeasureFamily,
    tempered_order: Option<Q>,
}

impl CorrelationMeasure {
    pub fn dirac() -> Self {
        Self {
            family: MeasureFamily::DiracZero,
            tempered_order: None,
        }
    }

    pub fn riesz(a: Q) -> Result<Self> {
        if a <= Q::zero() {
            return Err(invalid(format!("riesz exponent {} must be positive", rational::show(&a))));
        }
        Ok(Self {
            family: MeasureFamily::Riesz { a },
            tempered_order: None,
        })
    }

    pub fn gaussian(sigma: Q) -> Result<Self> {
        if sigma <= Q::zero() {
            return Err(invalid("gaussian width σ must be positive"));
        }
        Ok(Self {
            family: MeasureFamily::Gaussian { sigma },
            tempered_order: None,
        })
    }

    /// `dirac`, `riesz(a)` or `gaussian(σ)`, each with an optional `k=` for
    /// the tempered order.
    pub fn parse(text: &str) -> Result<Self> {
        let call = FamilyCall::parse(text)?;
        let mut measure = match call.name.as_str() {
            "dirac" | "dirac_zero" | "delta" => {
                call.check_arity(&["k"])?;
                if !call.positional.is_empty() {
                    return Err(invalid("`dirac` takes no positional arguments"));
                }
                Self::dirac()
            }
            "riesz" => {
                call.check_arity(&["a", "k"])?;
                Self::riesz(call.require("a", 0)?.clone())?
            }
            "gaussian" => {
                call.check_arity(&["sigma", "k"])?;
                Self::gaussian(call.require("sigma", 0)?.clone())?
            }
            other => return Err(invalid(format!("unknown correlation measure `{other}`"))),
        };
        if let Some((_, k)) = call.named.iter().find(|(key, _)| key == "k") {
            if *k < Q::zero() {
                return Err(invalid("tempered order k must be nonnegative"));
            }
            measure.tempered_order = Some(k.clone());
        }
        Ok(measure)
    }

    pub fn family(&self) -> &MeasureFamily {
        &self.family
    }

    /// Order `k` with `∫ (1+|x|²)^{−k/2} π(dx) < ∞`. Defaults to `0` for the
    /// finite measures and to `d` for the Riesz density.
    pub fn tempered_order(&self, d: usize) -> Q {
        if let Some(k) = &self.tempered_order {
            return k.clone();
        }
        match self.family {
            MeasureFamily::Riesz { .. } => qi(d as i64),
            _ => Q::zero(),
        }
    }

    /// Checks the family against the dimension (`a < d` for Riesz).
    pub fn validate_for(&self, d: usize) -> Result<()> {
        if let MeasureFamily::Riesz { a } = &self.family {
            if *a >= qi(d as i64) {
                return Err(invalid(format!(
                    "riesz exponent {} must lie in (0, {d})",
                    rational::show(a)
                )));
            }
        }
        if let Some(k) = &self.tempered_order {
            if let MeasureFamily::Riesz { a } = &self.family {
                if k + a <= qi(d as i64) {
                    return Err(invalid(format!(
                        "tempered order {} too small for |x|^(-{}) in d = {d}",
                        rational::show(k),
                        rational::show(a)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Spatial covariance `C(h)` at `|x| = h`; `None` for the atom.
    pub fn covariance(&self, h: f64) -> Option<f64> {
        match &self.family {
            MeasureFamily::DiracZero => None,
            MeasureFamily::Riesz { a } => Some(h.abs().powf(-rational::to_f64(a))),
            MeasureFamily::Gaussian { sigma } => {
                let s = rational::to_f64(sigma);
                Some((-0.5 * h * h / (s * s)).exp())
            }
        }
    }
}

impl fmt::Display for CorrelationMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl CorrelationMeasure {
    /// Canonical text that [`CorrelationMeasure::parse`] maps back to `self`.
    pub fn label(&self) -> String {
        let k = self
            .tempered_order
            .as_ref()
            .map(|k| format!("k={}", rational::show(k)));
        let args: Vec<String> = match &self.family {
            MeasureFamily::DiracZero => k.into_iter().collect(),
            MeasureFamily::Riesz { a } => std::iter::once(rational::show(a)).chain(k).collect(),
            MeasureFamily::Gaussian { sigma } => {
                std::iter::once(rational::show(sigma)).chain(k).collect()
            }
        };
        let name = match self.family {
            MeasureFamily::DiracZero => "dirac",
            MeasureFamily::Riesz { .. } => "riesz",
            MeasureFamily::Gaussian { .. } => "gaussian",
        };
        if args.is_empty() {
            name.to_string()
        } else {
            format!("{name}({})", args.join(", "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    BelowHalf,
    AtHalf,
    AboveHalf,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::BelowHalf => "below_half",
            Branch::AtHalf => "at_half",
            Branch::AboveHalf => "above_half",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DalangVerdict {
    pub alpha_index: Q,
    pub branch: Branch,
    pub holds: bool,
    pub reason: String,
    pub nu_numeric: Option<f64>,
}

/// `δ₀(1−γ)`, the order of the Bessel kernel behind the noise condition.
pub fn kernel_order(delta0: &Q, gamma: &Q) -> Q {
    delta0 * (Q::one() - gamma)
}

/// Upper end `d/(d − δ₀(1−γ))` of the admissible `r` window.
pub fn r_upper(d: usize, delta0: &Q, gamma: &Q) -> Q {
    let dq = qi(d as i64);
    &dq / (&dq - kernel_order(delta0, gamma))
}

/// `α = d − r(d − δ₀(1−γ))`, defined for `1 ≤ r < d/(d − δ₀(1−γ))`.
pub fn alpha_index(d: usize, delta0: &Q, gamma: &Q, r: &Q) -> Result<Q> {
    if d == 0 {
        return Err(domain("dimension must be positive"));
    }
    if !(*delta0 > Q::zero() && *delta0 <= Q::one()) {
        return Err(domain(format!("δ₀ = {} outside (0,1]", rational::show(delta0))));
    }
    if !(*gamma > Q::zero() && *gamma < Q::one()) {
        return Err(domain(format!("γ = {} outside (0,1)", rational::show(gamma))));
    }
    let upper = r_upper(d, delta0, gamma);
    if !(*r >= Q::one() && *r < upper) {
        return Err(domain(format!(
            "r = {} outside the window [1, d/(d − δ₀(1−γ))) = [1, {})",
            rational::show(r),
            rational::show(&upper)
        )));
    }
    let dq = qi(d as i64);
    Ok(&dq - r * (&dq - kernel_order(delta0, gamma)))
}

pub fn branch_of(alpha: &Q, d: usize) -> Branch {
    let half = Q::new(d.into(), 2.into());
    match alpha.cmp(&half) {
        std::cmp::Ordering::Less => Branch::BelowHalf,
        std::cmp::Ordering::Equal => Branch::AtHalf,
        std::cmp::Ordering::Greater => Branch::AboveHalf,
    }
}

/// Closed-form verdict on `∫ (R^r ∗ R^r) dπ < ∞`.
pub fn dalang_check(
    pi: &CorrelationMeasure,
    d: usize,
    delta0: &Q,
    gamma: &Q,
    r: &Q,
) -> Result<DalangVerdict> {
    pi.validate_for(d)?;
    let alpha = alpha_index(d, delta0, gamma, r)?;
    let branch = branch_of(&alpha, d);
    let show = rational::show;
    let (holds, reason) = match (&pi.family, branch) {
        (MeasureFamily::Gaussian { .. }, _) => (
            true,
            "bounded smooth density near 0 integrates every branch".to_string(),
        ),
        (MeasureFamily::Riesz { a }, Branch::BelowHalf) => {
            let two_alpha = qi(2) * &alpha;
            let holds = *a < two_alpha;
            (
                holds,
                format!(
                    "R^r∗R^r ~ |x|^(2α−d) near 0, so |x|^(2α−d−a) is integrable iff a < 2α: \
                     a = {}, 2α = {}",
                    show(a),
                    show(&two_alpha)
                ),
            )
        }
        (MeasureFamily::Riesz { a }, Branch::AtHalf) => (
            true,
            format!(
                "R^r∗R^r ~ log(1/|x|) near 0 and log(1/|x|)|x|^(−a) is integrable since a = {} < d",
                show(a)
            ),
        ),
        (MeasureFamily::Riesz { .. }, Branch::AboveHalf) => (
            true,
            "R^r∗R^r is bounded near 0 and the density is locally integrable".to_string(),
        ),
        (MeasureFamily::DiracZero, _) => {
            let two_r = qi(2) * r;
            let upper = r_upper(d, delta0, gamma);
            let holds = two_r < upper;
            (
                holds,
                format!(
                    "atom at 0: ν = (R^r∗R^r)(0) = ‖R_β‖_(2r)^(2r) with β = δ₀(1−γ) = {}, \
                     finite iff 2r = {} < d/(d−β) = {}",
                    show(&kernel_order(delta0, gamma)),
                    show(&two_r),
                    show(&upper)
                ),
            )
        }
    };
    Ok(DalangVerdict {
        alpha_index: alpha,
        branch,
        holds,
        reason,
        nu_numeric: None,
    })
}

/// `ν = ∫ (R^r ∗ R^r)(x) π(dx)` with `R = R_{δ₀(1−γ)}`.
pub fn nu_value(pi: &CorrelationMeasure, d: usize, delta0: &Q, gamma: &Q, r: &Q) -> Result<Verdict> {
    nu_value_with(pi, d, delta0, gamma, r, 1e-7)
}

/// [`nu_value`] with an explicit relative tolerance for the outer radial
/// integral.
pub fn nu_value_with(
    pi: &CorrelationMeasure,
    d: usize,
    delta0: &Q,
    gamma: &Q,
    r: &Q,
    rel_tol: f64,
) -> Result<Verdict> {
    let verdict = dalang_check(pi, d, delta0, gamma, r)?;
    if !verdict.holds {
        return Ok(Verdict::Divergent {
            reason: verdict.reason,
        });
    }
    let beta = rational::to_f64(&kernel_order(delta0, gamma));
    let rf = rational::to_f64(r);
    let kernel = BesselKernel::new(BesselKernelSpec::new(beta, d)?)?;
    if let MeasureFamily::DiracZero = pi.family {
        return kernel.conv_rr(rf, 0.0);
    }
    let alpha = rational::to_f64(&verdict.alpha_index);
    let df = d as f64;
    let (density_power, density): (f64, Box<dyn Fn(f64) -> f64>) = match &pi.family {
        MeasureFamily::Riesz { a } => {
            let a = rational::to_f64(a);
            (-a, Box::new(move |rho: f64| rho.powf(-a)))
        }
        MeasureFamily::Gaussian { sigma } => {
            let s = rational::to_f64(sigma);
            (0.0, Box::new(move |rho: f64| (-0.5 * rho * rho / (s * s)).exp()))
        }
        MeasureFamily::DiracZero => unreachable!(),
    };
    let conv_power = match verdict.branch {
        Branch::BelowHalf => 2.0 * alpha - df,
        // log(1/ρ) growth, absorbed by a slightly stronger power
        Branch::AtHalf => -0.05,
        Branch::AboveHalf => 0.0,
    };
    let failure = std::cell::RefCell::new(None);
    let integrand = |rho: f64| {
        if rho <= 0.0 {
            return 0.0;
        }
        match kernel.self_convolution(rf, rho) {
            Ok(Some(c)) => c * density(rho) * rho.powi(d as i32 - 1),
            Ok(None) => f64::INFINITY,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let tol = Tolerance::rel(rel_tol);
    let exponent = conv_power + density_power + df - 1.0;
    let near = integrate_singular_left(integrand, 0.0, 1.0, exponent, tol)?;
    let far = integrate_decaying(integrand, 1.0, f64::INFINITY, 1.0, tol)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let total = crate::kernel::sphere_area(d) * (near.value + far.value);
    if !total.is_finite() {
        return Err(crate::error::Error::Quadrature(format!(
            "ν integral for {} is not finite",
            pi.label()
        )));
    }
    Ok(Verdict::Finite(total))
}

/// Relative spectral density of `π` at frequency `xi` (dimension
/// `xi.len()`); `+∞` at `ξ = 0` for Riesz.
pub fn spectral_weight(pi: &CorrelationMeasure, xi: &[f64]) -> f64 {
    let d = xi.len() as f64;
    let norm_sq: f64 = xi.iter().map(|x| x * x).sum();
    match &pi.family {
        MeasureFamily::DiracZero => 1.0,
        MeasureFamily::Riesz { a } => {
            let a = rational::to_f64(a);
            if norm_sq == 0.0 {
                f64::INFINITY
            } else {
                norm_sq.sqrt().powf(a - d)
            }
        }
        MeasureFamily::Gaussian { sigma } => {
            let s = rational::to_f64(sigma);
            (-0.5 * s * s * norm_sq).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_index(2, &qi(1), &q(1, 4), &q(4, 3)).unwrap(), q(1, 3));
        assert_eq!(alpha_index(1, &q(1, 2), &q(1, 2), &qi(1)).unwrap(), q(1, 4));
        let err = alpha_index(2, &qi(1), &q(1, 4), &qi(2)).unwrap_err();
        assert!(err.to_string().contains("8/5"), "{err}");
    }

    #[test]
    fn riesz_threshold() {
        let (d, d0, g, r) = (2, qi(1), q(1, 4), q(4, 3));
        let holds = |a: Q| dalang_check(&CorrelationMeasure::riesz(a).unwrap(), d, &d0, &g, &r).unwrap();
        let v = holds(q(1, 3));
        assert!(v.holds);
        assert_eq!(v.branch, Branch::BelowHalf);
        assert!(!holds(q(2, 3)).holds);
        assert!(!holds(q(2, 3) + q(1, 1000)).holds);
        assert!(holds(q(2, 3) - q(1, 1000)).holds);
    }

    #[test]
    fn gaussian_and_dirac() {
        let g = CorrelationMeasure::gaussian(qi(1)).unwrap();
        assert!(dalang_check(&g, 2, &qi(1), &q(1, 4), &q(4, 3)).unwrap().holds);
        let dirac = CorrelationMeasure::dirac();
        // d = 1, β = 1/4: 2r = 2 ≥ 4/3
        let v = dalang_check(&dirac, 1, &q(1, 2), &q(1, 2), &qi(1)).unwrap();
        assert!(!v.holds && v.branch == Branch::BelowHalf);
        // d = 1, δ₀ = 1, γ = 1/4: α = 3/4 > 1/2
        assert!(dalang_check(&dirac, 1, &qi(1), &q(1, 4), &qi(1)).unwrap().holds);
    }

    #[test]
    fn spectral_examples() {
        let dirac = CorrelationMeasure::dirac();
        assert_eq!(spectral_weight(&dirac, &[3.0, -1.0]), 1.0);
        let g = CorrelationMeasure::gaussian(q(3, 2)).unwrap();
        assert_eq!(spectral_weight(&g, &[0.0]), 1.0);
        let r = CorrelationMeasure::riesz(qi(1)).unwrap();
        let ratio = spectral_weight(&r, &[2.0, 0.0]) / spectral_weight(&r, &[0.0, 1.0]);
        assert!((ratio - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parse_and_label_round_trip() {
        for text in ["dirac", "riesz(1/4)", "gaussian(1)", "riesz(1/3, k=2)", "dirac(k=1)"] {
            let m = CorrelationMeasure::parse(text).unwrap();
            assert_eq!(m.label(), text);
            assert_eq!(CorrelationMeasure::parse(&m.label()).unwrap(), m);
        }
        assert_eq!(CorrelationMeasure::parse("riesz(0.25)").unwrap().label(), "riesz(1/4)");
        assert!(CorrelationMeasure::parse("riesz(-1)").is_err());
        assert!(CorrelationMeasure::parse("cauchy(1)").is_err());
        let big = CorrelationMeasure::riesz(qi(2)).unwrap();
        assert!(dalang_check(&big, 2, &qi(1), &q(1, 4), &qi(1)).is_err());
    }
}
