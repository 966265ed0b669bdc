//! Periodic lattices on the torus `[0, L)^d` and the FFT plumbing shared by
//! the noise synthesizer, the solver and the regularity estimators.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub d: usize,
    /// Points per axis, a power of two.
    pub n: usize,
    /// Side length of the torus.
    pub l: f64,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, l: f64) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(invalid(format!("grid dimension {d} must be 1 or 2")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(invalid(format!("{n} points per axis: need a power of two ≥ 16")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid(format!("torus side {l} must be positive")));
        }
        Ok(Self { d, n, l })
    }

    pub fn dx(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Total number of lattice sites.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one cell, `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// Signed integer wavenumber of FFT bin `k` (Nyquist counted positive).
    pub fn wavenumber(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Angular frequency `2π k / L` of bin `k` along one axis.
    pub fn frequency(&self, k: usize) -> f64 {
        2.0 * PI * self.wavenumber(k) as f64 / self.l
    }

    /// Per-axis bin indices of a flat index (row-major, last axis fastest).
    pub fn axes(&self, idx: usize) -> [usize; 2] {
        if self.d == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    pub fn frequency_vector(&self, idx: usize) -> Vec<f64> {
        let ax = self.axes(idx);
        (0..self.d).map(|a| self.frequency(ax[a])).collect()
    }

    /// Position of a lattice site.
    pub fn position(&self, idx: usize) -> Vec<f64> {
        let ax = self.axes(idx);
        (0..self.d).map(|a| ax[a] as f64 * self.dx()).collect()
    }

    /// True if bin `idx` is a Nyquist bin along some axis.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let ax = self.axes(idx);
        (0..self.d).any(|a| ax[a] == self.n / 2)
    }

    /// Flat index of the site displaced by `shift` cells (periodic).
    pub fn shifted(&self, idx: usize, shift: &[i64]) -> usize {
        let n = self.n as i64;
        let ax = self.axes(idx);
        let wrap = |a: usize| ((ax[a] as i64 + shift.get(a).copied().unwrap_or(0)).rem_euclid(n)) as usize;
        if self.d == 1 {
            wrap(0)
        } else {
            wrap(0) * self.n + wrap(1)
        }
    }
}

/// Which discrete Laplacian the symbol `φ(|ξ|²)` is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymbolKind {
    /// Spectral `|ξ|²` at the torus frequencies.
    Continuous,
    /// Eigenvalues `Σ (4/dx²) sin²(ξ_j dx/2)` of the nearest-neighbour
    /// Laplacian. `exp(−tφ)` of it is a Markov kernel, so the discrete
    /// semigroup maps nonnegative fields to nonnegative fields.
    #[default]
    Lattice,
}

impl SymbolKind {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "continuous" | "spectral" => Ok(SymbolKind::Continuous),
            "lattice" => Ok(SymbolKind::Lattice),
            other => Err(invalid(format!("unknown symbol kind `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SymbolKind::Continuous => "continuous",
            SymbolKind::Lattice => "lattice",
        }
    }
}

impl GridSpec {
    /// `|ξ|²` (or its lattice analogue) at every FFT bin.
    pub fn xi_squared(&self, kind: SymbolKind) -> Vec<f64> {
        let dx = self.dx();
        (0..self.len())
            .map(|idx| {
                let xi = self.frequency_vector(idx);
                match kind {
                    SymbolKind::Continuous => xi.iter().map(|x| x * x).sum(),
                    SymbolKind::Lattice => xi
                        .iter()
                        .map(|x| 4.0 / (dx * dx) * (0.5 * x * dx).sin().powi(2))
                        .sum(),
                }
            })
            .collect()
    }
}

/// Forward and inverse DFTs of a `d`-dimensional periodic field.
#[derive(Clone)]
pub struct Spectral {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n),
            inverse: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        // rows (contiguous chunks of length n)
        fft.process(data);
        if self.grid.d == 2 {
            transpose(data, n);
            fft.process(data);
            transpose(data, n);
        }
    }

    /// Unnormalized forward DFT in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse DFT in place, normalized so `inverse(forward(u)) = u`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    pub fn forward_real(&self, field: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse DFT keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut spectrum);
        spectrum.into_iter().map(|z| z.re).collect()
    }

    /// Applies a real, even Fourier multiplier to a real field.
    pub fn apply_multiplier(&self, field: &[f64], multiplier: &[f64]) -> Vec<f64> {
        let mut buf = self.forward_real(field);
        for (z, m) in buf.iter_mut().zip(multiplier) {
            *z *= *m;
        }
        self.inverse_real(buf)
    }

    /// Spectral partial derivative along `axis`; the Nyquist bin is zeroed.
    pub fn derivative(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let mut buf = self.forward_real(field);
        for (idx, z) in buf.iter_mut().enumerate() {
            let k = self.grid.axes(idx)[axis];
            if k == self.grid.n / 2 {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, self.grid.frequency(k));
            }
        }
        self.inverse_real(buf)
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Discrete `L_p` norm `(Σ |u|^p dx^d)^{1/p}`.
pub fn lp_norm(grid: &GridSpec, field: &[f64], p: f64) -> f64 {
    let vol = grid.cell_volume();
    if p.is_infinite() {
        return field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    (field.iter().map(|v| v.abs().powf(p)).sum::<f64>() * vol).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates() {
        assert!(GridSpec::new(3, 16, 1.0).is_err());
        assert!(GridSpec::new(1, 24, 1.0).is_err());
        assert!(GridSpec::new(1, 8, 1.0).is_err());
        assert!(GridSpec::new(1, 16, 0.0).is_err());
    }

    #[test]
    fn round_trip_2d() {
        let g = GridSpec::new(2, 16, 3.0).unwrap();
        let s = Spectral::new(g);
        let field: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 31) as f64 - 15.0).collect();
        let back = s.inverse_real(s.forward_real(&field));
        for (a, b) in field.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_lands_in_its_bin() {
        let g = GridSpec::new(2, 16, 2.0 * PI).unwrap();
        let s = Spectral::new(g);
        // cos(2 x₁ + 3 x₂)
        let field: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.position(i);
                (2.0 * x[0] + 3.0 * x[1]).cos()
            })
            .collect();
        let spec = s.forward_real(&field);
        let idx = 2 * 16 + 3;
        assert!((spec[idx].re - 0.5 * g.len() as f64).abs() < 1e-9);
        let deriv = s.derivative(&field, 1);
        for (i, dv) in deriv.iter().enumerate() {
            let x = g.position(i);
            assert!((dv + 3.0 * (2.0 * x[0] + 3.0 * x[1]).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn lattice_symbol_below_continuous() {
        let g = GridSpec::new(1, 32, 5.0).unwrap();
        let c = g.xi_squared(SymbolKind::Continuous);
        let l = g.xi_squared(SymbolKind::Lattice);
        for (a, b) in c.iter().zip(&l) {
            assert!(*b <= *a + 1e-12);
        }
        // low modes agree to O(ξ⁴dx²)
        assert!((c[1] - l[1]).abs() < 1e-2 * c[1]);
    }
}
