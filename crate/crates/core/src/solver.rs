//! Exponential-Euler stepping of the cutoff equation
//!
//! ```text
//! du = (φ(Δ)u + ζF_m(u) + b·∇B_m(u)) dt + ξ φ_m(u) dW
//! ```
//!
//! on a periodic lattice, with per-step diagnostics for the nonnegativity,
//! mass and non-explosion probes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinFunction;
use crate::correlation::CorrelationMeasure;
use crate::error::{domain, invalid, Error, Result};
use crate::grid::{GridSpec, Spectral, SymbolKind};
use crate::stochastics::{calibrate_noise, NoiseSynth, Purpose, RngSpec};

/// Multiplier `e^{−tφ(|ξ_k|²)}` at every bin.
pub fn semigroup_multiplier(phi: &BernsteinFunction, grid: &GridSpec, kind: SymbolKind, t: f64) -> Vec<f64> {
    grid.xi_squared(kind)
        .into_iter()
        .map(|x| (-t * phi.symbol(x)).exp())
        .collect()
}

/// `T_t u`, the linear flow of `φ(Δ)` on the torus.
pub fn semigroup_apply(
    phi: &BernsteinFunction,
    t: f64,
    field: &[f64],
    grid: &GridSpec,
    kind: SymbolKind,
) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(domain(format!("semigroup time {t} must be nonnegative")));
    }
    if field.len() != grid.len() {
        return Err(invalid("field length does not match the grid"));
    }
    if t == 0.0 {
        return Ok(field.to_vec());
    }
    let spectral = Spectral::new(*grid);
    Ok(spectral.apply_multiplier(field, &semigroup_multiplier(phi, grid, kind, t)))
}

/// `C¹` bump: `1` on `|z| ≤ 1`, `0` on `|z| ≥ 2`, cubic Hermite blend between.
pub fn bump(z: f64) -> f64 {
    let a = z.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let s = a - 1.0;
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

/// `h_m(z) = h(z/m)`.
pub fn cutoff(z: f64, m: f64) -> f64 {
    bump(z / m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TermKind {
    /// Dissipative reaction `F(u) = −c_sd u^{1+λ_sd}`.
    Reaction,
    /// Advected flux `B(u) = c_b u^{1+λ_b}`.
    Flux,
    /// Noise coefficient `c_sm u^{1+λ_sm}`.
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Nonlinearity {
    pub lambda_sd: f64,
    pub lambda_b: f64,
    pub lambda_sm: f64,
    pub c_sd: f64,
    pub c_b: f64,
    pub c_sm: f64,
}

impl Nonlinearity {
    pub fn off() -> Self {
        Self {
            lambda_sd: 0.0,
            lambda_b: 0.0,
            lambda_sm: 0.0,
            c_sd: 0.0,
            c_b: 0.0,
            c_sm: 0.0,
        }
    }
}

/// Term of the given kind at `u∨0`, times `h_m(u)`.
pub fn cutoff_nonlinearity(u: f64, m: f64, kind: TermKind, nl: &Nonlinearity) -> f64 {
    let h = cutoff(u, m);
    if h == 0.0 {
        return 0.0;
    }
    let pos = u.max(0.0);
    let power = match kind {
        TermKind::Reaction => -nl.c_sd * pos.powf(1.0 + nl.lambda_sd),
        TermKind::Flux => nl.c_b * pos.powf(1.0 + nl.lambda_b),
        TermKind::Noise => nl.c_sm * pos.powf(1.0 + nl.lambda_sm),
    };
    power * h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NoiseCoupling {
    /// Coefficient `ξ φ_m(u)`.
    Multiplicative,
    /// Constant coefficient, for the linear variance check.
    Additive(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InitialCondition {
    /// `a·exp(1 − 1/(1 − (|x−c|/w)²))` inside `|x−c| < w`, centred on the torus.
    Bump { amplitude: f64, width: f64 },
    /// `a·exp(−|x−c|²/(2w²))`, centred on the torus.
    Gaussian { amplitude: f64, width: f64 },
    Constant(f64),
    Field(Vec<f64>),
}

impl InitialCondition {
    pub fn build(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let centre = 0.5 * grid.l;
        let dist = |idx: usize| {
            grid.position(idx)
                .iter()
                .map(|x| (x - centre).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        Ok(match self {
            InitialCondition::Bump { amplitude, width } => (0..grid.len())
                .map(|i| {
                    let s = dist(i) / width;
                    if s < 1.0 {
                        amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
                    } else {
                        0.0
                    }
                })
                .collect(),
            InitialCondition::Gaussian { amplitude, width } => (0..grid.len())
                .map(|i| amplitude * (-0.5 * (dist(i) / width).powi(2)).exp())
                .collect(),
            InitialCondition::Constant(c) => vec![*c; grid.len()],
            InitialCondition::Field(v) => {
                if v.len() != grid.len() {
                    return Err(invalid("initial field length does not match the grid"));
                }
                v.clone()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub phi: BernsteinFunction,
    pub pi: CorrelationMeasure,
    /// `γ`, used only for the drift rule.
    pub gamma: f64,
    pub zeta: f64,
    pub xi: f64,
    pub drift: Vec<f64>,
    pub nonlinearity: Nonlinearity,
    pub m: f64,
    pub u0: InitialCondition,
    pub coupling: NoiseCoupling,
    pub symbol: SymbolKind,
}

impl ModelSpec {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(invalid("ζ must be positive and bounded"));
        }
        if !self.xi.is_finite() {
            return Err(invalid("ξ must be bounded"));
        }
        if !(self.m >= 1.0) {
            return Err(invalid(format!("cutoff level m = {} must be ≥ 1", self.m)));
        }
        if self.drift.len() != grid.d {
            return Err(invalid(format!("drift has {} components, grid has d = {}", self.drift.len(), grid.d)));
        }
        let delta0 = self.phi.declared_delta0();
        if self.drift.iter().any(|b| *b != 0.0) && delta0 * (2.0 - self.gamma) <= 1.0 {
            return Err(invalid(format!(
                "drift must vanish when δ₀(2−γ) = {} ≤ 1",
                delta0 * (2.0 - self.gamma)
            )));
        }
        let u0 = self.u0.build(grid)?;
        if u0.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("initial condition must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub values: Vec<f64>,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub sup: f64,
    pub min: f64,
    pub mass: f64,
    /// Cumulative `∫₀^t ∫ |u|^{1+λ_sd} h_m(u) dx ds`.
    pub dissipation: f64,
    /// Sites below `−tol·sup|u₀|` after this step.
    pub negative_count: usize,
    /// Share of the mass outside the central half of the torus.
    pub outer_mass_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blowup {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub path: usize,
    pub master_seed: u64,
    pub calibration: f64,
    pub dt: f64,
    pub initial_sup: f64,
    pub initial_min: f64,
    pub negativity_tol: f64,
    pub diagnostics: Vec<StepDiagnostics>,
    pub blowup: Option<Blowup>,
    /// Lattice indices of the probe points.
    pub probe_points: Vec<usize>,
    /// `u` at the probe points, one row per time level (including `t = 0`).
    pub probe_values: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub t_final: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub guard_ceiling: f64,
    /// Negativity threshold relative to `sup|u₀|`.
    pub negativity_rel_tol: f64,
    pub probe_points: Vec<usize>,
    /// Keep the full field every this many steps (and at `t = 0`).
    pub snapshot_every: Option<usize>,
    /// Noise constant; calibrated from `calibration_samples` fields when absent.
    pub calibration: Option<f64>,
    pub calibration_samples: usize,
}

impl RunOptions {
    pub fn new(t_final: f64, dt: f64, n_paths: usize) -> Self {
        Self {
            t_final,
            dt,
            n_paths,
            guard_ceiling: 1e6,
            negativity_rel_tol: 1e-8,
            probe_points: Vec::new(),
            snapshot_every: None,
            calibration: None,
            calibration_samples: 256,
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Precomputed operators for one model on one grid and step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: GridSpec,
    spectral: Spectral,
    model: ModelSpec,
    dt: f64,
    multiplier: Vec<f64>,
    synth: Option<NoiseSynth>,
    calibration: f64,
    guard_ceiling: f64,
}

impl Stepper {
    pub fn new(model: ModelSpec, grid: GridSpec, dt: f64, calibration: f64, guard_ceiling: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(domain("time step must be positive"));
        }
        model.validate(&grid)?;
        let noisy = match model.coupling {
            NoiseCoupling::Multiplicative => model.xi != 0.0 && model.nonlinearity.c_sm != 0.0,
            NoiseCoupling::Additive(c) => model.xi != 0.0 && c != 0.0,
        };
        let synth = if noisy { Some(NoiseSynth::new(&model.pi, grid)?) } else { None };
        Ok(Self {
            grid,
            spectral: Spectral::new(grid),
            multiplier: semigroup_multiplier(&model.phi, &grid, model.symbol, dt),
            model,
            dt,
            synth,
            calibration,
            guard_ceiling,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `dt·φ(ξ_max²)`: stiffness of the largest mode over one step.
    pub fn stiffness(&self) -> f64 {
        let xs = self.grid.xi_squared(self.model.symbol);
        let top = xs.iter().cloned().fold(0.0, f64::max);
        self.dt * self.model.phi.symbol(top)
    }

    /// One exponential-Euler step; the noise coefficient is taken at the left
    /// endpoint.
    pub fn step<R: rand::Rng + ?Sized>(&self, state: &FieldState, step_index: usize, rng: &mut R) -> Result<FieldState> {
        let model = &self.model;
        let nl = &model.nonlinearity;
        let dt = self.dt;
        let u = &state.values;
        let mut rhs: Vec<f64> = u
            .iter()
            .map(|&v| v + dt * model.zeta * cutoff_nonlinearity(v, model.m, TermKind::Reaction, nl))
            .collect();
        if model.drift.iter().any(|b| *b != 0.0) && nl.c_b != 0.0 {
            let flux: Vec<f64> = u
                .iter()
                .map(|&v| cutoff_nonlinearity(v, model.m, TermKind::Flux, nl))
                .collect();
            for (axis, b) in model.drift.iter().enumerate() {
                if *b == 0.0 {
                    continue;
                }
                let grad = self.spectral.derivative(&flux, axis);
                for (r, g) in rhs.iter_mut().zip(&grad) {
                    *r += dt * b * g;
                }
            }
        }
        if let Some(synth) = &self.synth {
            let dw = synth.increment(rng, dt, self.calibration);
            match model.coupling {
                NoiseCoupling::Multiplicative => {
                    for ((r, &v), w) in rhs.iter_mut().zip(u).zip(&dw) {
                        *r += model.xi * cutoff_nonlinearity(v, model.m, TermKind::Noise, nl) * w;
                    }
                }
                NoiseCoupling::Additive(c) => {
                    for (r, w) in rhs.iter_mut().zip(&dw) {
                        *r += model.xi * c * w;
                    }
                }
            }
        }
        let values = self.spectral.apply_multiplier(&rhs, &self.multiplier);
        let time = state.time + dt;
        let mut sup = 0.0f64;
        for v in &values {
            if !v.is_finite() {
                return Err(Error::Blowup {
                    step: step_index,
                    time,
                    reason: "non-finite value".into(),
                });
            }
            sup = sup.max(v.abs());
        }
        if sup > self.guard_ceiling {
            return Err(Error::Blowup {
                step: step_index,
                time,
                reason: format!("sup-norm {sup:e} above ceiling {:e}", self.guard_ceiling),
            });
        }
        Ok(FieldState { values, time })
    }

    fn dissipation_density(&self, u: &[f64]) -> f64 {
        let m = self.model.m;
        let lsd = self.model.nonlinearity.lambda_sd;
        u.iter().map(|v| v.abs().powf(1.0 + lsd) * cutoff(*v, m)).sum::<f64>() * self.grid.cell_volume()
    }

    fn outer_mass_fraction(&self, u: &[f64]) -> f64 {
        let centre = 0.5 * self.grid.l;
        let quarter = 0.25 * self.grid.l;
        let mut outer = 0.0;
        let mut total = 0.0;
        for (idx, v) in u.iter().enumerate() {
            let a = v.abs();
            total += a;
            if self.grid.position(idx).iter().any(|x| (x - centre).abs() > quarter) {
                outer += a;
            }
        }
        if total > 0.0 {
            outer / total
        } else {
            0.0
        }
    }

    /// Advances one path to `options.t_final`, stopping at the first guard trip.
    pub fn run_path(&self, path: usize, rng_spec: &RngSpec, options: &RunOptions) -> Result<RunRecord> {
        let u0 = self.model.u0.build(&self.grid)?;
        let initial_sup = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let initial_min = u0.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = options.negativity_rel_tol * initial_sup;
        let mut rng = rng_spec.stream(path as u64, Purpose::Noise);
        let mut state = FieldState { values: u0, time: 0.0 };
        let cell = self.grid.cell_volume();
        let probe = |u: &[f64]| options.probe_points.iter().map(|&i| u[i]).collect::<Vec<f64>>();
        let mut record = RunRecord {
            path,
            master_seed: rng_spec.master_seed,
            calibration: self.calibration,
            dt: self.dt,
            initial_sup,
            initial_min,
            negativity_tol: tol,
            diagnostics: Vec::with_capacity(options.steps()),
            blowup: None,
            probe_points: options.probe_points.clone(),
            probe_values: vec![probe(&state.values)],
            snapshots: Vec::new(),
        };
        if options.snapshot_every.is_some() {
            record.snapshots.push(Snapshot {
                step: 0,
                time: 0.0,
                values: state.values.clone(),
            });
        }
        let mut dissipation = 0.0;
        for step in 1..=options.steps() {
            let density = self.dissipation_density(&state.values);
            match self.step(&state, step, &mut rng) {
                Ok(next) => state = next,
                Err(Error::Blowup { step, time, reason }) => {
                    record.blowup = Some(Blowup { step, time, reason });
                    break;
                }
                Err(e) => return Err(e),
            }
            dissipation += density * self.dt;
            let u = &state.values;
            record.diagnostics.push(StepDiagnostics {
                step,
                time: state.time,
                sup: u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                min: u.iter().cloned().fold(f64::INFINITY, f64::min),
                mass: u.iter().sum::<f64>() * cell,
                dissipation,
                negative_count: u.iter().filter(|v| **v < -tol).count(),
                outer_mass_fraction: self.outer_mass_fraction(u),
            });
            record.probe_values.push(probe(u));
            if let Some(every) = options.snapshot_every {
                if every > 0 && step % every == 0 {
                    record.snapshots.push(Snapshot {
                        step,
                        time: state.time,
                        values: u.clone(),
                    });
                }
            }
        }
        Ok(record)
    }
}

/// Noise constant for a run: the configured one, or an empirical calibration
/// drawn from the run's own calibration stream.
pub fn run_calibration(model: &ModelSpec, grid: GridSpec, rng_spec: &RngSpec, options: &RunOptions) -> Result<f64> {
    if let Some(c) = options.calibration {
        return Ok(c);
    }
    let mut rng = rng_spec.stream(u64::MAX >> 8, Purpose::Calibration);
    Ok(calibrate_noise(&model.pi, grid, options.calibration_samples, &mut rng)?.constant)
}

/// Runs `options.n_paths` independent paths in parallel. Guard trips are
/// recorded per path; other errors abort the batch.
pub fn run(model: &ModelSpec, grid: GridSpec, rng_spec: &RngSpec, options: &RunOptions) -> Result<Vec<RunRecord>> {
    if !(options.t_final > 0.0) {
        return Err(domain("final time must be positive"));
    }
    if options.probe_points.iter().any(|&i| i >= grid.len()) {
        return Err(invalid("probe point outside the grid"));
    }
    let calibration = run_calibration(model, grid, rng_spec, options)?;
    let stepper = Stepper::new(model.clone(), grid, options.dt, calibration, options.guard_ceiling)?;
    (0..options.n_paths)
        .into_par_iter()
        .map(|path| stepper.run_path(path, rng_spec, options))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonnegativitySummary {
    pub global_min: f64,
    pub count_below: usize,
    pub tol: f64,
}

pub fn nonnegativity_probe(records: &[RunRecord]) -> Result<NonnegativitySummary> {
    let mut summary = NonnegativitySummary {
        global_min: f64::INFINITY,
        count_below: 0,
        tol: 0.0,
    };
    for r in records {
        if r.initial_min < 0.0 {
            return Err(Error::Precondition(format!(
                "path {} starts from a signed field (min {}); the probe needs u₀ ≥ 0",
                r.path, r.initial_min
            )));
        }
        summary.tol = summary.tol.max(r.negativity_tol);
        for d in &r.diagnostics {
            summary.global_min = summary.global_min.min(d.min);
            summary.count_below += d.negative_count;
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassSummary {
    pub path: usize,
    pub sup_mass: f64,
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassProbe {
    pub per_path: Vec<MassSummary>,
    /// Mean and standard error of `(sup_t ‖u‖₁)^{1/2}`.
    pub half_moment_mass: (f64, f64),
    /// Mean and standard error of the dissipation integral to the power 1/2.
    pub half_moment_dissipation: (f64, f64),
}

pub fn mass_probe(records: &[RunRecord]) -> Result<MassProbe> {
    let per_path: Vec<MassSummary> = records
        .iter()
        .map(|r| MassSummary {
            path: r.path,
            sup_mass: r.diagnostics.iter().map(|d| d.mass.abs()).fold(0.0, f64::max),
            dissipation: r.diagnostics.last().map_or(0.0, |d| d.dissipation),
        })
        .collect();
    let sm: Vec<f64> = per_path.iter().map(|p| p.sup_mass.sqrt()).collect();
    let sd: Vec<f64> = per_path.iter().map(|p| p.dissipation.sqrt()).collect();
    Ok(MassProbe {
        half_moment_mass: crate::fit::mean_se(&sm),
        half_moment_dissipation: crate::fit::mean_se(&sd),
        per_path,
    })
}
