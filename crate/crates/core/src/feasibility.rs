//! Admissibility of a full parameter tuple, the Hölder window and the
//! largest admissible superlinear noise exponent. All algebra is exact.

use std::fmt;

use num_traits::{One, Zero};

use crate::bernstein::BernsteinFunction;
use crate::correlation::{self, CorrelationMeasure, MeasureFamily};
use crate::error::{domain, invalid, Result};
use crate::rational::{self, q, qi, Q};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub d: usize,
    pub p: Q,
    pub q: Q,
    pub gamma: Q,
    pub delta0: Q,
    pub r: Q,
    pub lambda_sd: Q,
    pub lambda_b: Q,
    pub lambda_sm: Q,
    pub drift_active: bool,
}

impl ParamSet {
    pub fn validate(&self) -> Result<()> {
        let two = qi(2);
        if !(1..=3).contains(&self.d) {
            return Err(invalid(format!("dimension {} outside 1..=3", self.d)));
        }
        if self.p <= two || self.q <= two {
            return Err(invalid("p and q must exceed 2"));
        }
        if !(self.gamma > Q::zero() && self.gamma < Q::one()) {
            return Err(invalid("γ must lie in (0,1)"));
        }
        if !(self.delta0 > Q::zero() && self.delta0 <= Q::one()) {
            return Err(invalid("δ₀ must lie in (0,1]"));
        }
        if self.r < Q::one() {
            return Err(invalid("r must be at least 1"));
        }
        for (name, v) in [("λ_sd", &self.lambda_sd), ("λ_b", &self.lambda_b), ("λ_sm", &self.lambda_sm)] {
            if *v < Q::zero() {
                return Err(invalid(format!("{name} must be nonnegative")));
            }
        }
        Ok(())
    }

    fn pq_max(&self) -> Q {
        rational::max(&self.p, &self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Fails only because a strict inequality holds with equality.
    FailBoundary,
}

impl Status {
    pub fn passed(self) -> bool {
        self == Status::Pass
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::FailBoundary => "fail (boundary)",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// Short id: `a` .. `f`.
    pub name: &'static str,
    pub description: String,
    pub lhs: Option<Q>,
    pub lower: Option<Q>,
    pub upper: Option<Q>,
    pub status: Status,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub entries: Vec<Entry>,
    pub overall: bool,
    pub holder_window: Option<(Q, Q)>,
}

impl FeasibilityReport {
    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// `lower < v < upper` with equality reported as a boundary failure.
fn open_interval(v: &Q, lower: Option<&Q>, upper: Option<&Q>) -> Status {
    let above = lower.map_or(std::cmp::Ordering::Greater, |lo| v.cmp(lo));
    let below = upper.map_or(std::cmp::Ordering::Less, |hi| v.cmp(hi));
    use std::cmp::Ordering::*;
    match (above, below) {
        (Greater, Less) => Status::Pass,
        (Less, _) | (_, Greater) => Status::Fail,
        _ => Status::FailBoundary,
    }
}

fn interval_entry(name: &'static str, description: String, v: Q, lower: Option<Q>, upper: Option<Q>) -> Entry {
    let status = open_interval(&v, lower.as_ref(), upper.as_ref());
    Entry {
        name,
        description,
        lhs: Some(v),
        lower,
        upper,
        status,
        note: String::new(),
    }
}

/// `d + 1 − δ₀(2−γ)` over `d`, minus `1/p` and `λ_sd/max(p,q)`, plus `λ_b`.
pub fn burgers_quantity(params: &ParamSet) -> Q {
    let d = qi(params.d as i64);
    let drift = &params.delta0 * (qi(2) - &params.gamma);
    &params.lambda_b + (&d + Q::one() - drift) / &d
        - params.p.recip()
        - &params.lambda_sd / params.pq_max()
}

pub fn noise_quantity(params: &ParamSet) -> Q {
    &params.lambda_sm + (qi(2) * &params.r).recip() + q(1, 2)
        - params.p.recip()
        - &params.lambda_sd / params.pq_max()
}

/// `2/q + d/(δ₀p)`, which must stay below `γ`.
pub fn gamma_lower_bound(d: usize, p: &Q, qq: &Q, delta0: &Q) -> Q {
    qi(2) / qq + qi(d as i64) / (delta0 * p)
}

pub fn check_admissible(params: &ParamSet, pi: &CorrelationMeasure) -> Result<FeasibilityReport> {
    params.validate()?;
    pi.validate_for(params.d)?;
    let show = rational::show;
    let r_cap = rational::min(
        &(&params.p / qi(2)),
        &correlation::r_upper(params.d, &params.delta0, &params.gamma),
    );
    let mut entries = vec![
        interval_entry(
            "a",
            "1 ≤ r < min(p/2, d/(d − δ₀(1−γ)))".into(),
            params.r.clone(),
            None,
            Some(r_cap),
        ),
        interval_entry(
            "b",
            "0 < λ_b + (d+1−δ₀(2−γ))/d − 1/p − λ_sd/max(p,q) < 1".into(),
            burgers_quantity(params),
            Some(Q::zero()),
            Some(Q::one()),
        ),
        interval_entry(
            "c",
            "0 < λ_sm + 1/(2r) + 1/2 − 1/p − λ_sd/max(p,q) < 1".into(),
            noise_quantity(params),
            Some(Q::zero()),
            Some(Q::one()),
        ),
        interval_entry(
            "d",
            "2/q + d/(δ₀p) < γ".into(),
            gamma_lower_bound(params.d, &params.p, &params.q, &params.delta0),
            None,
            Some(params.gamma.clone()),
        ),
    ];

    let drift_index = &params.delta0 * (qi(2) - &params.gamma);
    let mut drift = interval_entry(
        "e",
        "drift active ⇒ δ₀(2−γ) > 1".into(),
        drift_index,
        Some(Q::one()),
        None,
    );
    if !params.drift_active {
        drift.status = Status::Pass;
        drift.note = "no drift term".into();
    }
    entries.push(drift);

    let dalang = match correlation::dalang_check(pi, params.d, &params.delta0, &params.gamma, &params.r) {
        Ok(v) => {
            let boundary = !v.holds && dalang_on_boundary(pi, params, &v.alpha_index);
            Entry {
                name: "f",
                description: format!("noise condition for π = {}", pi.label()),
                lhs: Some(v.alpha_index.clone()),
                lower: None,
                upper: None,
                status: if v.holds {
                    Status::Pass
                } else if boundary {
                    Status::FailBoundary
                } else {
                    Status::Fail
                },
                note: format!("α = {}, branch {}: {}", show(&v.alpha_index), v.branch, v.reason),
            }
        }
        Err(e) => Entry {
            name: "f",
            description: format!("noise condition for π = {}", pi.label()),
            lhs: None,
            lower: None,
            upper: None,
            status: Status::Fail,
            note: e.to_string(),
        },
    };
    entries.push(dalang);

    let overall = entries.iter().all(|e| e.status.passed());
    Ok(FeasibilityReport {
        entries,
        overall,
        holder_window: holder_window(params),
    })
}

fn dalang_on_boundary(pi: &CorrelationMeasure, params: &ParamSet, alpha: &Q) -> bool {
    match pi.family() {
        MeasureFamily::Riesz { a } => *a == qi(2) * alpha,
        MeasureFamily::DiracZero => {
            qi(2) * &params.r == correlation::r_upper(params.d, &params.delta0, &params.gamma)
        }
        MeasureFamily::Gaussian { .. } => false,
    }
}

/// `(1/q, γ/2 − d/(2δ₀p))` when the interval is nonempty.
pub fn holder_window(params: &ParamSet) -> Option<(Q, Q)> {
    let lo = params.q.recip();
    let hi = &params.gamma / qi(2) - qi(params.d as i64) / (qi(2) * &params.delta0 * &params.p);
    (lo < hi).then_some((lo, hi))
}

/// Default `(α, β)` with `1/q ≤ α < β ≤ γ/2 − d/(2δ₀p)`: `α` at the middle of
/// the window and `β` halfway between `α` and the upper end.
pub fn holder_exponents(params: &ParamSet) -> Option<(Q, Q)> {
    let (lo, hi) = holder_window(params)?;
    let alpha = (&lo + &hi) / qi(2);
    let beta = (&alpha + &hi) / qi(2);
    Some((alpha, beta))
}

/// Supremum of admissible `λ_sm`: `1/2 − 1/(2r) + 1/p + λ_sd/max(p,q)`.
pub fn max_lambda_sm(params: &ParamSet) -> Result<Q> {
    if params.r < Q::one() {
        return Err(domain("r must be at least 1"));
    }
    Ok(q(1, 2) - (qi(2) * &params.r).recip() + params.p.recip() + &params.lambda_sd / params.pq_max())
}

/// `φ(h^{−2})^{−γ/2+β} h^{−d/p}`.
pub fn spatial_modulus(phi: &BernsteinFunction, gamma: f64, beta: f64, p: f64, d: usize, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(domain(format!("spatial lag {h} must be positive")));
    }
    if beta > 0.5 * gamma {
        return Err(domain(format!("need β ≤ γ/2, got β = {beta}, γ = {gamma}")));
    }
    let exponent = beta - 0.5 * gamma;
    let scale = if exponent == 0.0 {
        1.0
    } else {
        phi.eval(h.powi(-2))?.powf(exponent)
    };
    Ok(scale * h.powf(-(d as f64) / p))
}
