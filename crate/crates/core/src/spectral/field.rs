use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Samples at collocation points: one buffer of `N^2` reals per component.
///
/// Components are a scalar (1), a vector (2) or a row-major tensor (4) with
/// entry `2*i + j` holding `∂_j u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl RealField {
    pub fn new(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::config("field needs at least one component"));
        }
        for (c, values) in comps.iter().enumerate() {
            if values.len() != grid.len() {
                return Err(Error::config(format!(
                    "component {c} has {} samples, grid expects {}",
                    values.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: Grid, ncomp: usize) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; ncomp],
        }
    }

    /// Samples `f(x, y)` for each component.
    pub fn from_fn<F>(grid: Grid, ncomp: usize, f: F) -> Self
    where
        F: Fn(usize, f64, f64) -> f64,
    {
        let n = grid.n();
        let comps = (0..ncomp)
            .map(|c| {
                (0..grid.len())
                    .map(|idx| f(c, grid.coordinate(idx / n), grid.coordinate(idx % n)))
                    .collect()
            })
            .collect();
        Self { grid, comps }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_comps(self) -> Vec<Vec<f64>> {
        self.comps
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    /// Pointwise Euclidean (Frobenius for tensors) magnitude across components.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|j| {
                self.comps
                    .iter()
                    .map(|c| c[j] * c[j])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Fourier coefficients `û_k` of a real field, one buffer per component.
///
/// Convention: `f(x) = Σ_k û_k e^{ik·x}`, so `û_k = N^{-2} Σ_j f(x_j) e^{-ik·x_j}`
/// and Parseval reads `∫|f|^2 dx = L^2 Σ_k |û_k|^2`. This is the only place the
/// scaling is defined; every norm in the crate uses the `L^2` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    comps: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn new(grid: Grid, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::config("field needs at least one component"));
        }
        for (c, values) in comps.iter().enumerate() {
            if values.len() != grid.len() {
                return Err(Error::config(format!(
                    "component {c} has {} coefficients, grid expects {}",
                    values.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: Grid, ncomp: usize) -> Self {
        Self {
            grid,
            comps: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; ncomp],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn comps(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Largest deviation from `û_{-k} = conj(û_k)` over all modes.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        self.comps
            .iter()
            .flat_map(|c| (0..g.len()).map(move |i| (c[i] - c[g.conj_index(i)].conj()).norm()))
            .fold(0.0, f64::max)
    }

    /// `Σ_k a_k conj(b_k) L^2` over all components: the L² inner product.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        check_same(&self.grid, &other.grid)?;
        if self.ncomp() != other.ncomp() {
            return Err(Error::config("component count mismatch"));
        }
        let s: f64 = self
            .comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re))
            .sum();
        Ok(s * self.grid.area())
    }

    pub fn scale(&mut self, factor: f64) {
        for z in self.comps.iter_mut().flatten() {
            *z *= factor;
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * factor;
            }
        }
    }

    /// Multiplies every mode by a per-mode real weight.
    /// Multiplies every mode by `weight(k)`, `k` the integer wavevector.
    pub fn apply_diag<F: Fn([i64; 2]) -> f64>(&mut self, weight: F) {
        let w: Vec<f64> = self.grid.modes().map(|(_, f)| weight(f)).collect();
        self.apply_weights(&w);
    }

    /// Multiplies mode `idx` by `w[idx]`.
    pub fn apply_weights(&mut self, w: &[f64]) {
        assert_eq!(w.len(), self.grid.len(), "weight table size");
        for c in self.comps.iter_mut() {
            for (z, &x) in c.iter_mut().zip(w) {
                *z *= x;
            }
        }
    }

    /// Copies modes into a grid of another resolution: exact on the shared
    /// modes, zero elsewhere (truncation or zero-padding).
    pub fn resample(&self, target: Grid) -> Result<SpectralField> {
        if !self.grid.same_box(&target) {
            return Err(Error::config("cannot resample across different box sizes"));
        }
        let mut out = SpectralField::zeros(target, self.ncomp());
        for (a, b) in self.grid.shared_modes(&target) {
            for c in 0..self.ncomp() {
                out.comps[c][b] = self.comps[c][a];
            }
        }
        Ok(out)
    }
}

/// A divergence-free, mean-zero, real velocity field in Fourier space with
/// zero Nyquist modes. Only produced by the Leray projection, so holding one
/// means the invariants hold (up to roundoff).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVelocity(SpectralField);

impl SpectralVelocity {
    pub fn zeros(grid: Grid) -> Self {
        Self(SpectralField::zeros(grid, 2))
    }

    pub(crate) fn from_projected(field: SpectralField) -> Self {
        debug_assert_eq!(field.ncomp(), 2);
        Self(field)
    }

    pub fn field(&self) -> &SpectralField {
        &self.0
    }

    pub fn into_field(self) -> SpectralField {
        self.0
    }

    pub fn grid(&self) -> &Grid {
        self.0.grid()
    }

    /// Restriction (or zero-padding) to another resolution of the same box.
    /// Shared modes exclude both Nyquist lines, so the invariants carry over.
    pub fn restrict(&self, target: Grid) -> Result<SpectralVelocity> {
        self.0.resample(target).map(Self)
    }

    pub fn rescaled(&self, factor: f64) -> SpectralVelocity {
        Self(self.0.scaled(factor))
    }

    /// `max_k |k·û_k|`, zero for an exactly solenoidal field.
    pub fn divergence_defect(&self) -> f64 {
        let g = *self.grid();
        g.modes()
            .map(|(idx, f)| {
                let [k1, k2] = g.wavevector_of(f);
                (self.0.comp(0)[idx] * k1 + self.0.comp(1)[idx] * k2).norm()
            })
            .fold(0.0, f64::max)
    }
}

impl std::ops::Deref for SpectralVelocity {
    type Target = SpectralField;

    fn deref(&self) -> &SpectralField {
        &self.0
    }
}

pub(crate) fn check_same(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::config(format!(
            "grid mismatch: N={} L={} vs N={} L={}",
            a.n(),
            a.length(),
            b.n(),
            b.length()
        )));
    }
    Ok(())
}
