//! Grid Sobolev norms, parabolic differences and empirical Hölder fits.

use serde::Serialize;

use crate::bernstein::BernsteinFunction;
use crate::error::{domain, Error, Result};
use crate::feasibility::spatial_modulus;
use crate::fit::{loglog_fit, median};
use crate::grid::{lp_norm, GridSpec, Spectral, SymbolKind};
use crate::solver::RunRecord;

/// `‖(1+φ(−Δ))^{γ/2} u‖_{L_p}` on the lattice.
pub fn sobolev_norm(
    field: &[f64],
    grid: &GridSpec,
    phi: &BernsteinFunction,
    gamma: f64,
    p: f64,
    kind: SymbolKind,
) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(domain(format!("Sobolev exponent p = {p} must be ≥ 2")));
    }
    if field.len() != grid.len() {
        return Err(domain("field length does not match the grid"));
    }
    if gamma == 0.0 {
        return Ok(lp_norm(grid, field, p));
    }
    let multiplier: Vec<f64> = grid
        .xi_squared(kind)
        .into_iter()
        .map(|x| (1.0 + phi.symbol(x)).powf(0.5 * gamma))
        .collect();
    let out = Spectral::new(*grid).apply_multiplier(field, &multiplier);
    Ok(lp_norm(grid, &out, p))
}

/// Least integer `L > γ − d/p`, at least one.
pub fn default_order(gamma: f64, d: usize, p: f64) -> usize {
    let bound = gamma - d as f64 / p;
    ((bound.floor() + 1.0).max(1.0)) as usize
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_k (−1)^{L−k} C(L,k) u(t + kτ, x + kh)` for every time index `t` with
/// `t + Lτ` inside the series. `tau` counts time levels, `h` lattice cells.
pub fn parabolic_difference(
    series: &[Vec<f64>],
    grid: &GridSpec,
    order: usize,
    tau: usize,
    h: &[i64],
) -> Result<Vec<Vec<f64>>> {
    if series.is_empty() {
        return Err(Error::LagOutOfRange("empty series".into()));
    }
    if h.len() > grid.d {
        return Err(Error::LagOutOfRange(format!("lag has {} components, grid has d = {}", h.len(), grid.d)));
    }
    if order * tau >= series.len() {
        return Err(Error::LagOutOfRange(format!(
            "L·τ = {} time levels exceeds the {} available",
            order * tau,
            series.len() - 1
        )));
    }
    let n_out = series.len() - order * tau;
    let coeffs: Vec<f64> = (0..=order)
        .map(|k| {
            let sign = if (order - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(order, k)
        })
        .collect();
    let shifts: Vec<Vec<i64>> = (0..=order).map(|k| h.iter().map(|c| c * k as i64).collect()).collect();
    Ok((0..n_out)
        .map(|t| {
            (0..grid.len())
                .map(|x| {
                    (0..=order)
                        .map(|k| coeffs[k] * series[t + k * tau][grid.shifted(x, &shifts[k])])
                        .sum()
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Time,
    Space,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    pub direction: Direction,
    pub fitted_exponent: f64,
    pub r_squared: f64,
    pub lag_min: f64,
    pub lag_max: f64,
    /// Lags span less than two decades.
    pub degenerate: bool,
    /// Fitted exponent of every (path, point) pair.
    pub samples: Vec<f64>,
}

/// Dyadic multiples `2^j` of one step inside `[2, max_steps]`.
fn dyadic_lags(max_steps: usize) -> Vec<usize> {
    let mut lags = Vec::new();
    let mut l = 2usize;
    while l <= max_steps {
        lags.push(l);
        l *= 2;
    }
    lags
}

/// Temporal fit: for each probe point, `max_t |u(t+τ,x) − u(t,x)|` against
/// dyadic `τ ∈ [2dt, T/4]`, fitted on log-log axes. Reports the median
/// exponent over points and paths.
pub fn estimate_holder_time(records: &[RunRecord], points: &[usize]) -> Result<HolderFit> {
    let first = records.first().ok_or_else(|| domain("no run records"))?;
    let dt = first.dt;
    let mut exponents = Vec::new();
    let mut r2 = Vec::new();
    let mut lag_range = (f64::NAN, f64::NAN);
    for rec in records {
        let levels = rec.probe_values.len();
        if levels < 2 {
            continue;
        }
        let lags = dyadic_lags((levels - 1) / 4);
        if lags.len() < 8 {
            return Err(Error::Precondition(format!(
                "only {} dyadic time lags in [2dt, T/4]; need 8",
                lags.len()
            )));
        }
        lag_range = (lags[0] as f64 * dt, *lags.last().unwrap() as f64 * dt);
        for &p in points {
            let col = rec
                .probe_points
                .iter()
                .position(|&q| q == p)
                .ok_or_else(|| domain(format!("point {p} was not probed")))?;
            let series: Vec<f64> = rec.probe_values.iter().map(|row| row[col]).collect();
            let (taus, sups): (Vec<f64>, Vec<f64>) = lags
                .iter()
                .map(|&l| {
                    let s = (0..series.len() - l)
                        .map(|t| (series[t + l] - series[t]).abs())
                        .fold(0.0, f64::max);
                    (l as f64 * dt, s)
                })
                .filter(|(_, s)| *s > 0.0)
                .unzip();
            if let Some(fit) = loglog_fit(&taus, &sups) {
                exponents.push(fit.slope);
                r2.push(fit.r_squared);
            }
        }
    }
    let fitted = median(&exponents).ok_or_else(|| Error::Precondition("no usable temporal increments".into()))?;
    Ok(HolderFit {
        direction: Direction::Time,
        fitted_exponent: fitted,
        r_squared: median(&r2).unwrap_or(f64::NAN),
        lag_min: lag_range.0,
        lag_max: lag_range.1,
        degenerate: lag_range.1 / lag_range.0 < 100.0,
        samples: exponents,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceRow {
    pub lag: f64,
    /// Largest `sup_x |D^L_{(0,h)}u|` over paths and snapshots.
    pub value: f64,
    pub modulus: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceFit {
    pub rows: Vec<SpaceRow>,
    pub order: usize,
    pub max_ratio: f64,
    /// Log-log slope of the ratio over the smaller half of the lags; a
    /// bounded ratio near `h → 0` has slope ≥ 0 up to noise.
    pub small_lag_slope: f64,
    pub fit: HolderFit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceModel<'a> {
    pub phi: &'a BernsteinFunction,
    pub gamma: f64,
    pub beta: f64,
    pub p: f64,
}

/// Spatial differences along the first axis at dyadic `h ∈ [2dx, L/8]`,
/// measured against the modulus `φ(h^{−2})^{−γ/2+β} h^{−d/p}`.
pub fn estimate_holder_space(
    records: &[RunRecord],
    grid: &GridSpec,
    model: SpaceModel<'_>,
    order: Option<usize>,
) -> Result<SpaceFit> {
    let order = order.unwrap_or_else(|| default_order(model.gamma, grid.d, model.p));
    let lags = dyadic_lags(grid.n / 8);
    if lags.len() < 2 {
        return Err(Error::Precondition("grid too coarse for spatial lags".into()));
    }
    let mut values = vec![0.0f64; lags.len()];
    let mut any = false;
    for rec in records {
        for snap in &rec.snapshots {
            any = true;
            let series = [snap.values.clone()];
            for (j, &l) in lags.iter().enumerate() {
                let mut shift = vec![0i64; grid.d];
                shift[0] = l as i64;
                let diff = parabolic_difference(&series, grid, order, 0, &shift)?;
                let s = diff[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                values[j] = values[j].max(s);
            }
        }
    }
    if !any {
        return Err(Error::Precondition("records carry no snapshots".into()));
    }
    let dx = grid.dx();
    let mut rows = Vec::with_capacity(lags.len());
    for (j, &l) in lags.iter().enumerate() {
        let h = l as f64 * dx;
        let modulus = spatial_modulus(model.phi, model.gamma, model.beta, model.p, grid.d, h)?;
        rows.push(SpaceRow {
            lag: h,
            value: values[j],
            modulus,
            ratio: values[j] / modulus,
        });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let half = rows.len().div_ceil(2).max(2);
    let (hs, rs): (Vec<f64>, Vec<f64>) = rows[..half]
        .iter()
        .filter(|r| r.ratio > 0.0)
        .map(|r| (r.lag, r.ratio))
        .unzip();
    let small_lag_slope = loglog_fit(&hs, &rs).map_or(f64::NAN, |f| f.slope);
    let (ha, va): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.value > 0.0).map(|r| (r.lag, r.value)).unzip();
    let raw = loglog_fit(&ha, &va);
    let fit = HolderFit {
        direction: Direction::Space,
        fitted_exponent: raw.map_or(f64::NAN, |f| f.slope),
        r_squared: raw.map_or(f64::NAN, |f| f.r_squared),
        lag_min: rows[0].lag,
        lag_max: rows.last().unwrap().lag,
        degenerate: rows.last().unwrap().lag / rows[0].lag < 100.0,
        samples: Vec::new(),
    };
    Ok(SpaceFit {
        rows,
        order,
        max_ratio,
        small_lag_slope,
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrrReport {
    /// `N(α,q) = 8·4^{1/q}(α+1/q)/(α−1/q)`; infinite at `α = 1/q`.
    pub constant: f64,
    /// Largest `|h(t)−h(s)| / (N|t−s|^{α−1/q} B(s,t)^{1/q})` over grid pairs.
    pub max_ratio: f64,
    pub holds: bool,
}

/// Garsia–Rodemich–Rumsey check on samples of `h` at `t_i = i·T/(n−1)`.
/// The double integral `B(s,t)` is a trapezoid sum over grid cells.
pub fn grr_check(path: &[f64], t_final: f64, alpha: f64, q: f64) -> Result<GrrReport> {
    if !(q > 0.0) || alpha < 1.0 / q {
        return Err(domain(format!("need q > 0 and α ≥ 1/q, got α = {alpha}, q = {q}")));
    }
    let n = path.len();
    if n < 3 {
        return Err(domain("need at least three samples"));
    }
    let dt = t_final / (n - 1) as f64;
    let constant = if alpha > 1.0 / q {
        8.0 * 4f64.powf(1.0 / q) * (alpha + 1.0 / q) / (alpha - 1.0 / q)
    } else {
        f64::INFINITY
    };
    let mut integrand = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..i {
            let gap = (i - j) as f64 * dt;
            let v = (path[i] - path[j]).abs().powf(q) / gap.powf(alpha * q + 1.0);
            integrand[i * n + j] = v;
            integrand[j * n + i] = v;
        }
    }
    let f = |i: usize, j: usize| integrand[i * n + j];
    // cell (i,j) covers [t_i,t_{i+1}]×[t_j,t_{j+1}]
    let cell = |i: usize, j: usize| 0.25 * (f(i, j) + f(i + 1, j) + f(i, j + 1) + f(i + 1, j + 1)) * dt * dt;
    // B(s,t) grows by an L-shaped strip of cells as t advances; accumulating
    // nonnegative terms avoids the cancellation of global prefix sums.
    let mut max_ratio = 0.0f64;
    for s in 0..n - 1 {
        let mut b = 0.0;
        for t in (s + 1)..n {
            let k = t - 1;
            b += cell(k, k);
            for j in s..k {
                b += cell(k, j) + cell(j, k);
            }
            let lhs = (path[t] - path[s]).abs();
            if lhs == 0.0 {
                continue;
            }
            let rhs = constant * ((t - s) as f64 * dt).powf(alpha - 1.0 / q) * b.powf(1.0 / q);
            let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
            max_ratio = max_ratio.max(ratio);
        }
    }
    Ok(GrrReport {
        constant,
        max_ratio,
        holds: max_ratio <= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_and_binomials() {
        assert_eq!(default_order(0.25, 1, 16.0), 1);
        assert_eq!(default_order(1.5, 1, 4.0), 2);
        assert_eq!(default_order(0.01, 2, 2.0), 1);
        assert_eq!(binomial(4, 2), 6.0);
    }

    #[test]
    fn differences_annihilate_polynomials() {
        let grid = GridSpec::new(1, 32, 1.0).unwrap();
        let constant = vec![vec![3.0; 32]; 4];
        for row in parabolic_difference(&constant, &grid, 1, 1, &[2]).unwrap() {
            assert!(row.iter().all(|v| *v == 0.0));
        }
        // affine in x away from the wrap
        let affine: Vec<f64> = (0..32).map(|i| 2.0 + 0.5 * i as f64).collect();
        let d2 = parabolic_difference(&[affine], &grid, 2, 0, &[1]).unwrap();
        for v in &d2[0][..30] {
            assert!(v.abs() < 1e-12);
        }
        assert!(parabolic_difference(&constant, &grid, 2, 2, &[1]).is_err());
    }

    #[test]
    fn grr_trivial_cases() {
        let flat = vec![1.0; 50];
        let rep = grr_check(&flat, 1.0, 0.5, 4.0).unwrap();
        assert_eq!(rep.max_ratio, 0.0);
        assert!(rep.holds);
        let line: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let rep = grr_check(&line, 1.0, 1.0, 4.0).unwrap();
        assert!(rep.holds && rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
        assert!(grr_check(&line, 1.0, 0.1, 4.0).is_err());
    }
}
