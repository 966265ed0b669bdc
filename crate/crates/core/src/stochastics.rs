//! Subordinators, subordinate Brownian motion and spatially homogeneous
//! colored-noise increments.
//!
//! Randomness comes from ChaCha streams keyed by `(master_seed, path,
//! purpose)`, so a path's draws do not depend on scheduling order.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rustfft::num_complex::Complex64;

use crate::bernstein::{BernsteinFunction, Family};
use crate::correlation::{spectral_weight, CorrelationMeasure, MeasureFamily};
use crate::error::{domain, Error, Result};
use crate::grid::{GridSpec, Spectral};
use crate::quadrature::{integrate_singular_left, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Subordinator = 1,
    Brownian = 2,
    Noise = 3,
    Calibration = 4,
    Aux = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub master_seed: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Independent substream for `(path, purpose)`.
    pub fn stream(&self, path: u64, purpose: Purpose) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream((path << 8) | purpose as u64);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    pub t_grid: Vec<f64>,
    /// `S(t_{i+1}) − S(t_i)`, one per interval.
    pub increments: Vec<f64>,
}

impl SubordinatorPath {
    /// `S(t_i)` with `S(t_0) = 0`.
    pub fn values(&self) -> Vec<f64> {
        let mut acc = 0.0;
        std::iter::once(0.0)
            .chain(self.increments.iter().map(|dx| {
                acc += dx;
                acc
            }))
            .collect()
    }

    pub fn terminal(&self) -> f64 {
        self.increments.iter().sum()
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 2 {
        return Err(domain("time grid needs at least two points"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("time grid must be strictly increasing"));
    }
    Ok(())
}

/// One draw of the standard one-sided stable law with `E e^{−λS} = e^{−λ^β}`
/// (Kanter's representation), computed in log space.
pub fn standard_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    if beta >= 1.0 {
        return 1.0;
    }
    let u = PI * rng.random::<f64>();
    let e: f64 = Exp1.sample(rng);
    if u <= 0.0 {
        return 0.0;
    }
    let (sb, s1, sc) = ((beta * u).sin(), u.sin(), ((1.0 - beta) * u).sin());
    let ln_a = (sb.ln() - s1.ln()) / (1.0 - beta) + sc.ln() - sb.ln();
    ((1.0 - beta) / beta * (ln_a - e.ln())).exp()
}

/// Exact stable subordinator on `t_grid`; `β = 1` is the pure drift `S_t = t`.
pub fn sample_stable_subordinator<R: Rng + ?Sized>(
    beta: f64,
    t_grid: &[f64],
    rng: &mut R,
) -> Result<SubordinatorPath> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain(format!("stable index β = {beta} outside (0,1]")));
    }
    check_grid(t_grid)?;
    let increments = t_grid
        .windows(2)
        .map(|w| (w[1] - w[0]).powf(1.0 / beta) * standard_stable(beta, rng))
        .collect();
    Ok(SubordinatorPath {
        t_grid: t_grid.to_vec(),
        increments,
    })
}

/// One stable-type piece of a Lévy measure:
/// `ν(ds) = β/Γ(1−β) s^{−1−β} e^{−μs} ds`, or a drift when `β = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LevyComponent {
    beta: f64,
    tempering: f64,
}

impl LevyComponent {
    fn scale(&self) -> f64 {
        self.beta / libm::tgamma(1.0 - self.beta)
    }

    /// Intensity of jumps above `eps` before tempering.
    fn pareto_rate(&self, eps: f64) -> f64 {
        eps.powf(-self.beta) / libm::tgamma(1.0 - self.beta)
    }

    /// Mean of the jumps below `eps`, per unit time.
    fn small_jump_mean(&self, eps: f64) -> Result<f64> {
        let c = self.scale();
        if self.tempering == 0.0 {
            return Ok(c * eps.powf(1.0 - self.beta) / (1.0 - self.beta));
        }
        let mu = self.tempering;
        let beta = self.beta;
        let f = move |s: f64| c * s.powf(-beta) * (-mu * s).exp();
        Ok(integrate_singular_left(f, 0.0, eps, -beta, Tolerance::rel(1e-12))?.value)
    }

    /// `½ λ² ∫_0^ε s² ν(ds)`, bounding the Laplace-exponent error of
    /// replacing the small jumps by their mean.
    fn truncation_exponent(&self, eps: f64, lambda: f64) -> f64 {
        0.5 * lambda * lambda * self.scale() * eps.powf(2.0 - self.beta) / (2.0 - self.beta)
    }
}

fn levy_components(phi: &BernsteinFunction) -> Result<Vec<LevyComponent>> {
    let plain = |beta: f64| LevyComponent { beta, tempering: 0.0 };
    match *phi.family() {
        Family::Stable { beta } => Ok(vec![plain(beta)]),
        Family::StableSum { beta1, beta2 } => Ok(vec![plain(beta1), plain(beta2)]),
        Family::Relativistic { beta, m } => {
            // (λ+μ)^β − μ^β with m = μ^β
            Ok(vec![LevyComponent {
                beta,
                tempering: m.powf(1.0 / beta),
            }])
        }
        Family::StableLog { .. } | Family::ConjugateGeometric { .. } => Err(Error::Unsupported(format!(
            "no Lévy-measure sampler for {}",
            phi.label()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSample {
    pub path: SubordinatorPath,
    pub jump_cutoff: f64,
    exponents: Vec<(LevyComponent, f64)>,
}

impl GeneralSample {
    /// Upper bound on `|E e^{−λS_t} − e^{−tφ(λ)}|` caused by replacing the
    /// jumps below the cutoff with their mean.
    pub fn laplace_bias(&self, phi: &BernsteinFunction, lambda: f64, t: f64) -> f64 {
        let excess: f64 = self
            .exponents
            .iter()
            .map(|(c, _)| c.truncation_exponent(self.jump_cutoff, lambda))
            .sum();
        let exact = (-t * phi.symbol(lambda)).exp();
        exact * (-(-t * excess).exp_m1())
    }
}

/// Subordinator from its Lévy data: drift, compound-Poisson jumps above
/// `jump_cutoff` and the mean of the jumps below it.
pub fn sample_subordinator_general<R: Rng + ?Sized>(
    phi: &BernsteinFunction,
    t_grid: &[f64],
    rng: &mut R,
    jump_cutoff: f64,
) -> Result<GeneralSample> {
    if !(jump_cutoff > 0.0) {
        return Err(domain("jump cutoff must be positive"));
    }
    check_grid(t_grid)?;
    let components = levy_components(phi)?;
    let mut prepared = Vec::with_capacity(components.len());
    for c in &components {
        let mean = if c.beta < 1.0 {
            c.small_jump_mean(jump_cutoff)?
        } else {
            0.0
        };
        prepared.push((*c, mean));
    }
    let mut increments = Vec::with_capacity(t_grid.len() - 1);
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        let mut inc = 0.0;
        for (c, small_mean) in &prepared {
            if c.beta >= 1.0 {
                inc += dt;
                continue;
            }
            inc += small_mean * dt;
            let rate = c.pareto_rate(jump_cutoff) * dt;
            let count = Poisson::new(rate)
                .map_err(|e| domain(format!("jump intensity {rate}: {e}")))?
                .sample(rng) as u64;
            for _ in 0..count {
                let u: f64 = rng.random();
                let jump = jump_cutoff * (1.0 - u).powf(-1.0 / c.beta);
                if c.tempering > 0.0 {
                    // thinning with acceptance e^{−μ s}
                    let keep: f64 = rng.random();
                    if keep >= (-c.tempering * jump).exp() {
                        continue;
                    }
                }
                inc += jump;
            }
        }
        increments.push(inc);
    }
    Ok(GeneralSample {
        path: SubordinatorPath {
            t_grid: t_grid.to_vec(),
            increments,
        },
        jump_cutoff,
        exponents: prepared,
    })
}

/// Default jump cutoff for [`sample_subordinator`].
pub const DEFAULT_JUMP_CUTOFF: f64 = 1e-6;

/// Exact sampler for `stable`, the Lévy-data sampler otherwise.
pub fn sample_subordinator<R: Rng + ?Sized>(
    phi: &BernsteinFunction,
    t_grid: &[f64],
    rng: &mut R,
) -> Result<SubordinatorPath> {
    match *phi.family() {
        Family::Stable { beta } => sample_stable_subordinator(beta, t_grid, rng),
        _ => Ok(sample_subordinator_general(phi, t_grid, rng, DEFAULT_JUMP_CUTOFF)?.path),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbmPath {
    pub t_grid: Vec<f64>,
    /// `X(t_i)`, each of length `d`, starting at the origin.
    pub positions: Vec<Vec<f64>>,
}

/// `X_t = B_{S_t}` with `B` the Brownian motion generated by `Δ`
/// (variance `2s` at time `s`), so `E e^{iξ·X_t} = e^{−tφ(|ξ|²)}`.
pub fn sample_sbm<R: Rng + ?Sized>(
    phi: &BernsteinFunction,
    d: usize,
    t_grid: &[f64],
    rng_sub: &mut R,
    rng_bm: &mut R,
) -> Result<SbmPath> {
    if d == 0 {
        return Err(domain("dimension must be positive"));
    }
    let sub = sample_subordinator(phi, t_grid, rng_sub)?;
    let mut x = vec![0.0; d];
    let mut positions = vec![x.clone()];
    for ds in &sub.increments {
        let sd = (2.0 * ds).sqrt();
        for xi in x.iter_mut() {
            let z: f64 = StandardNormal.sample(rng_bm);
            *xi += sd * z;
        }
        positions.push(x.clone());
    }
    Ok(SbmPath {
        t_grid: t_grid.to_vec(),
        positions,
    })
}

/// Spectral synthesizer of stationary Gaussian fields with the covariance
/// structure of a correlation measure.
///
/// The raw field is `Z = IDFT(√w · DFT(η))` with `η` white, so its
/// covariance at displacement `h` is `(1/N) Σ_k w_k e^{iξ_k·h}` and a flat
/// spectrum gives unit variance. A Riesz spectrum is infinite at `ξ = 0`;
/// that bin borrows the value at the fundamental frequency.
#[derive(Debug, Clone)]
pub struct NoiseSynth {
    spectral: Spectral,
    sqrt_weights: Vec<f64>,
    weights: Vec<f64>,
    pi: CorrelationMeasure,
}

impl NoiseSynth {
    pub fn new(pi: &CorrelationMeasure, grid: GridSpec) -> Result<Self> {
        pi.validate_for(grid.d)?;
        let fundamental = 2.0 * PI / grid.l;
        let mut probe = vec![0.0; grid.d];
        probe[0] = fundamental;
        let zero_mode = spectral_weight(pi, &probe);
        let weights: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let w = spectral_weight(pi, &grid.frequency_vector(idx));
                if w.is_finite() {
                    w
                } else {
                    zero_mode
                }
            })
            .collect();
        Ok(Self {
            spectral: Spectral::new(grid),
            sqrt_weights: weights.iter().map(|w| w.sqrt()).collect(),
            weights,
            pi: pi.clone(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.spectral.grid()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn measure(&self) -> &CorrelationMeasure {
        &self.pi
    }

    /// Exact covariance of the raw field at a lattice displacement.
    pub fn raw_covariance(&self, shift: &[i64]) -> f64 {
        let g = self.grid();
        let h: Vec<f64> = shift.iter().map(|s| *s as f64 * g.dx()).collect();
        let sum: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(idx, w)| {
                let xi = g.frequency_vector(idx);
                let phase: f64 = xi.iter().zip(&h).map(|(a, b)| a * b).sum();
                w * phase.cos()
            })
            .sum();
        sum / g.len() as f64
    }

    /// One raw unit-scale field.
    pub fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex64> = (0..self.grid().len())
            .map(|_| Complex64::new(StandardNormal.sample(rng), 0.0))
            .collect();
        self.spectral.forward(&mut buf);
        for (z, s) in buf.iter_mut().zip(&self.sqrt_weights) {
            *z *= *s;
        }
        // the weights are even in ξ, so the product stays Hermitian and the
        // inverse transform is real up to rounding
        self.spectral.inverse_real(buf)
    }

    /// Increment `ΔW = √(κ·dt)·Z` of the calibrated noise over one step.
    pub fn increment<R: Rng + ?Sized>(&self, rng: &mut R, dt: f64, calibration: f64) -> Vec<f64> {
        let scale = (calibration * dt).sqrt();
        let mut z = self.sample_raw(rng);
        for v in z.iter_mut() {
            *v *= scale;
        }
        z
    }

    /// Reference displacement and target covariance used for calibration.
    pub fn calibration_target(&self) -> (Vec<i64>, f64) {
        let g = self.grid();
        let mut shift = vec![0i64; g.d];
        match self.pi.family() {
            MeasureFamily::DiracZero => (shift, 1.0 / g.cell_volume()),
            MeasureFamily::Gaussian { .. } => (shift, self.pi.covariance(0.0).unwrap_or(1.0)),
            MeasureFamily::Riesz { .. } => {
                shift[0] = (g.n / 16) as i64;
                let h = shift[0] as f64 * g.dx();
                (shift, self.pi.covariance(h).unwrap_or(1.0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub dt: f64,
}

pub fn sample_noise_increment<R: Rng + ?Sized>(
    pi: &CorrelationMeasure,
    grid: GridSpec,
    dt: f64,
    rng: &mut R,
    calibration: f64,
) -> Result<NoiseIncrement> {
    if !(dt > 0.0) {
        return Err(domain("time step must be positive"));
    }
    let synth = NoiseSynth::new(pi, grid)?;
    Ok(NoiseIncrement {
        grid,
        values: synth.increment(rng, dt, calibration),
        dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub constant: f64,
    /// Standard error of the constant from the sample spread.
    pub standard_error: f64,
    pub target: f64,
    pub empirical_raw: f64,
}

/// Multiplicative constant `κ` matching the synthesized covariance at the
/// reference displacement to the measure's covariance there, estimated from
/// `n_samples` raw fields (spatially averaged products).
pub fn calibrate_noise<R: Rng + ?Sized>(
    pi: &CorrelationMeasure,
    grid: GridSpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<Calibration> {
    if n_samples < 2 {
        return Err(domain("calibration needs at least two samples"));
    }
    let synth = NoiseSynth::new(pi, grid)?;
    let (shift, target) = synth.calibration_target();
    let per_sample: Vec<f64> = (0..n_samples)
        .map(|_| {
            let z = synth.sample_raw(rng);
            let n = z.len();
            (0..n).map(|i| z[i] * z[grid.shifted(i, &shift)]).sum::<f64>() / n as f64
        })
        .collect();
    let (mean, se) = crate::fit::mean_se(&per_sample);
    if !(mean > 0.0) {
        return Err(Error::Precondition(format!(
            "empirical reference covariance {mean} is not positive"
        )));
    }
    let constant = target / mean;
    Ok(Calibration {
        constant,
        standard_error: constant * se / mean,
        target,
        empirical_raw: mean,
    })
}

/// Calibration from the exact raw covariance (no sampling).
pub fn calibrate_exact(synth: &NoiseSynth) -> f64 {
    let (shift, target) = synth.calibration_target();
    target / synth.raw_covariance(&shift)
}
