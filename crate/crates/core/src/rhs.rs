//! Right-hand side of the filtered momentum equation.
//!
//! Sign convention, fixed here and nowhere else: the solver advances
//!
//! ```text
//! ∂u/∂t = ν Δu + P[ −(u·∇)u + ∇·((C_S δ)² |∇u| ∇u) + f ]
//! ```
//!
//! where `P` is the Leray projection. [`assemble_rhs`] returns the bracketed
//! projected part; the viscous term belongs to the integrator. The divergence
//! of the eddy-viscosity flux enters with a plus sign, so that
//! `(∇·T, u) = −(T, ∇u) ≤ 0` drains energy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::norms::{cube_integral, gradient_norm_sq};
use crate::spectral::{
    divergence_of_tensor, gradient_spectra, leray_project, Grid, SpectralField,
    SpectralVelocity, Transform,
};

/// Pointwise magnitude `|∇u|` used inside the eddy viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum GradVariant {
    /// `√(Σ_ij (∂_j u_i)²)`.
    #[default]
    Frobenius,
    /// `√(2 S:S)` with `S` the symmetric part of `∇u`.
    StrainRate,
}

impl GradVariant {
    pub fn name(&self) -> &'static str {
        match self {
            GradVariant::Frobenius => "frobenius",
            GradVariant::StrainRate => "strain-rate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "frobenius" => Some(GradVariant::Frobenius),
            "strain-rate" => Some(GradVariant::StrainRate),
            _ => None,
        }
    }

    fn magnitude(&self, g: [f64; 4]) -> f64 {
        match self {
            GradVariant::Frobenius => (g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]).sqrt(),
            GradVariant::StrainRate => {
                let s12 = 0.5 * (g[1] + g[2]);
                (2.0 * (g[0] * g[0] + g[3] * g[3] + 2.0 * s12 * s12)).sqrt()
            }
        }
    }
}

pub const DEFAULT_C_S: f64 = 0.17;
pub const DEFAULT_PAD_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmagorinskyParams {
    pub c_s: f64,
    /// Filter width; `None` means the grid spacing `L/N` of whatever grid the
    /// term is evaluated on.
    pub delta: Option<f64>,
    pub nu: f64,
    pub grad_variant: GradVariant,
    /// Zero-padding factor of the grid the eddy flux is evaluated on.
    pub pad_factor: f64,
}

impl SmagorinskyParams {
    pub fn new(nu: f64) -> Self {
        Self {
            c_s: DEFAULT_C_S,
            delta: None,
            nu,
            grad_variant: GradVariant::Frobenius,
            pad_factor: DEFAULT_PAD_FACTOR,
        }
    }

    pub fn with_c_s(mut self, c_s: f64) -> Self {
        self.c_s = c_s;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_s.is_finite() && self.c_s >= 0.0) {
            return Err(Error::config(format!("c_s ≥ 0 required (got {})", self.c_s)));
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::config(format!("delta > 0 required (got {d})")));
            }
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::config(format!("nu > 0 required (got {})", self.nu)));
        }
        if !(self.pad_factor.is_finite() && self.pad_factor >= 1.0) {
            return Err(Error::config(format!(
                "pad factor ≥ 1 required (got {})",
                self.pad_factor
            )));
        }
        Ok(())
    }

    pub fn filter_width(&self, grid: &Grid) -> f64 {
        self.delta.unwrap_or_else(|| grid.dx())
    }

    /// `(C_S δ)²`.
    pub fn eddy_coefficient(&self, grid: &Grid) -> f64 {
        let l = self.c_s * self.filter_width(grid);
        l * l
    }
}

/// One steady forcing mode: `f̂_k = amplitude`, `f̂_{-k} = conj(amplitude)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingMode {
    pub k: [i64; 2],
    pub amplitude: [Complex64; 2],
}

impl ForcingMode {
    /// `a · sin(k·x) · ê`, with `ê = (k₂, −k₁)/|k|` perpendicular to `k`.
    /// For `k = (0, 1)` this is `(a sin y, 0)`.
    pub fn shear(k: [i64; 2], a: f64) -> Self {
        let norm = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt().max(f64::MIN_POSITIVE);
        let e = [k[1] as f64 / norm, -(k[0] as f64) / norm];
        let c = Complex64::new(0.0, -0.5 * a);
        Self {
            k,
            amplitude: [c * e[0], c * e[1]],
        }
    }

    /// Real amplitude `a` of the shear form, if the mode was built that way.
    pub fn shear_amplitude(&self) -> f64 {
        2.0 * (self.amplitude[0].norm_sqr() + self.amplitude[1].norm_sqr()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForcingKind {
    Zero,
    SteadyMode,
    SteadyMultiMode,
}

impl ForcingKind {
    pub fn name(&self) -> &'static str {
        match self {
            ForcingKind::Zero => "zero",
            ForcingKind::SteadyMode => "steady-mode",
            ForcingKind::SteadyMultiMode => "steady-multi-mode",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero" => Some(ForcingKind::Zero),
            "steady-mode" => Some(ForcingKind::SteadyMode),
            "steady-multi-mode" => Some(ForcingKind::SteadyMultiMode),
            _ => None,
        }
    }
}

/// Time-independent body force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    pub modes: Vec<ForcingMode>,
}

impl ForcingSpec {
    pub fn zero() -> Self {
        Self {
            kind: ForcingKind::Zero,
            modes: Vec::new(),
        }
    }

    pub fn single(mode: ForcingMode) -> Self {
        Self {
            kind: ForcingKind::SteadyMode,
            modes: vec![mode],
        }
    }

    pub fn multi(modes: Vec<ForcingMode>) -> Self {
        Self {
            kind: ForcingKind::SteadyMultiMode,
            modes,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == ForcingKind::Zero || self.modes.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.modes.len()) {
            (ForcingKind::Zero, 0) | (ForcingKind::SteadyMode, 1) => {}
            (ForcingKind::SteadyMultiMode, n) if n >= 1 => {}
            (kind, n) => {
                return Err(Error::config(format!(
                    "forcing kind {} does not accept {n} modes",
                    kind.name()
                )))
            }
        }
        for m in &self.modes {
            if m.k == [0, 0] {
                return Err(Error::config("forcing at k = 0 would add a mean flow"));
            }
            if m.amplitude.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::config("forcing amplitude must be finite"));
            }
        }
        Ok(())
    }

    /// Projected forcing spectrum on `grid`.
    pub fn spectrum(&self, grid: &Grid) -> Result<SpectralVelocity> {
        self.validate()?;
        let mut f = SpectralField::zeros(*grid, 2);
        let kmax = (grid.n() / 2) as i64;
        for m in &self.modes {
            if m.k.iter().any(|k| k.abs() >= kmax) {
                return Err(Error::config(format!(
                    "forcing wavevector {:?} not resolved at N = {}",
                    m.k,
                    grid.n()
                )));
            }
            let p = grid.index_of(m.k[0]) * grid.n() + grid.index_of(m.k[1]);
            let q = grid.index_of(-m.k[0]) * grid.n() + grid.index_of(-m.k[1]);
            for c in 0..2 {
                f.comp_mut(c)[p] += m.amplitude[c];
                f.comp_mut(c)[q] += m.amplitude[c].conj();
            }
        }
        leray_project(&f)
    }
}

fn two_thirds(f: &SpectralField) -> SpectralField {
    let g = *f.grid();
    let mut out = f.clone();
    let kc = g.dealias_cutoff();
    out.apply_diag(|f| if f[0].abs() <= kc && f[1].abs() <= kc { 1.0 } else { 0.0 });
    out
}

fn as_refs(v: &[Vec<Complex64>]) -> Vec<&[Complex64]> {
    v.iter().map(|c| c.as_slice()).collect()
}

/// `−(u·∇)u` with 2/3-rule dealiasing (inputs and output truncated), unprojected.
pub fn advection_term(t: &Transform, u: &SpectralVelocity) -> SpectralField {
    let g = *u.grid();
    let ut = two_thirds(u.field());
    let mut spectra = ut.comps().to_vec();
    spectra.extend(gradient_spectra(&ut));
    let phys = t.to_physical(&as_refs(&spectra), &g, g.n());
    let (vel, grad) = phys.split_at(2);
    let products: Vec<Vec<f64>> = (0..2)
        .map(|i| {
            (0..g.len())
                .map(|j| -(vel[0][j] * grad[2 * i][j] + vel[1][j] * grad[2 * i + 1][j]))
                .collect()
        })
        .collect();
    let out = SpectralField::new(g, t.from_physical(&products, g.n(), &g)).expect("sizes match");
    two_thirds(&out)
}

/// Velocity gradient sampled on the padded evaluation grid.
fn padded_gradient(t: &Transform, u: &SpectralVelocity, p: &SmagorinskyParams) -> (Grid, Vec<Vec<f64>>) {
    let g = *u.grid();
    let m = g.padded_n(p.pad_factor);
    let fine = g.with_n(m).expect("padded grid is valid");
    let grads = gradient_spectra(u.field());
    (fine, t.to_physical(&as_refs(&grads), &g, m))
}

/// `∇·((C_S δ)² |∇u| ∇u)`, flux evaluated on the zero-padded grid and truncated back.
pub fn eddy_viscosity_term(t: &Transform, u: &SpectralVelocity, p: &SmagorinskyParams) -> SpectralField {
    let g = *u.grid();
    let coef = p.eddy_coefficient(&g);
    if coef == 0.0 {
        return SpectralField::zeros(g, 2);
    }
    let (fine, mut grad) = padded_gradient(t, u, p);
    for j in 0..fine.len() {
        let gj = [grad[0][j], grad[1][j], grad[2][j], grad[3][j]];
        let w = coef * p.grad_variant.magnitude(gj);
        for c in grad.iter_mut() {
            c[j] *= w;
        }
    }
    let flux = SpectralField::new(g, t.from_physical(&grad, fine.n(), &g)).expect("sizes match");
    divergence_of_tensor(&flux).expect("four components")
}

/// `P[−(u·∇)u + ∇·((C_S δ)²|∇u|∇u) + f]`; everything but the viscous term.
pub fn assemble_rhs(
    t: &Transform,
    u: &SpectralVelocity,
    forcing: &SpectralVelocity,
    p: &SmagorinskyParams,
) -> Result<SpectralVelocity> {
    if u.grid() != forcing.grid() {
        return Err(Error::config("forcing and velocity live on different grids"));
    }
    let mut total = advection_term(t, u);
    if p.c_s > 0.0 {
        total.axpy(1.0, &eddy_viscosity_term(t, u, p));
    }
    total.axpy(1.0, forcing.field());
    leray_project(&total)
}

/// `(ν‖∇u‖², (C_S δ)² ∫ |∇u|·|∇u|²)`.
///
/// With the Frobenius magnitude the second entry is `(C_S δ)² ‖∇u‖³_{L³}`. The
/// integral is taken on the same padded grid as the eddy flux, which makes
/// `(eddy_viscosity_term(u), u) = −smag` hold to roundoff.
pub fn dissipation_functionals(t: &Transform, u: &SpectralVelocity, p: &SmagorinskyParams) -> (f64, f64) {
    let visc = p.nu * gradient_norm_sq(u.field());
    let coef = p.eddy_coefficient(u.grid());
    if coef == 0.0 {
        return (visc, 0.0);
    }
    let (fine, grad) = padded_gradient(t, u, p);
    let smag = match p.grad_variant {
        GradVariant::Frobenius => {
            let mags: Vec<f64> = (0..fine.len())
                .map(|j| GradVariant::Frobenius.magnitude([grad[0][j], grad[1][j], grad[2][j], grad[3][j]]))
                .collect();
            cube_integral(&fine, &mags)
        }
        GradVariant::StrainRate => {
            (0..fine.len())
                .map(|j| {
                    let gj = [grad[0][j], grad[1][j], grad[2][j], grad[3][j]];
                    let f2: f64 = gj.iter().map(|x| x * x).sum();
                    GradVariant::StrainRate.magnitude(gj) * f2
                })
                .sum::<f64>()
                * fine.cell_area()
        }
    };
    (visc, coef * smag)
}
