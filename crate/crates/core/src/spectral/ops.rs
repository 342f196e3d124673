use num_complex::Complex64;

use super::fft::Transform;
use super::field::{RealField, SpectralField, SpectralVelocity};
use crate::error::{Error, Result};

/// Spectra of `∂_j f_i`, component `2*i + j`. Nyquist lines carry no
/// well-defined derivative and come out as zero.
pub fn gradient_spectra(f: &SpectralField) -> Vec<Vec<Complex64>> {
    let g = *f.grid();
    let mut out = Vec::with_capacity(2 * f.ncomp());
    let ik: Vec<[f64; 2]> = g
        .modes()
        .map(|(_, f)| if g.is_nyquist_mode(f) { [0.0; 2] } else { g.wavevector_of(f) })
        .collect();
    for c in f.comps() {
        for axis in 0..2 {
            out.push(
                c.iter()
                    .zip(&ik)
                    .map(|(&z, k)| z * Complex64::new(0.0, k[axis]))
                    .collect(),
            );
        }
    }
    out
}

/// Velocity gradient tensor `∂_j u_i` at the collocation points.
pub fn gradient(t: &Transform, u: &SpectralVelocity) -> RealField {
    gradient_of(t, u.field())
}

pub fn gradient_of(t: &Transform, f: &SpectralField) -> RealField {
    let g = *f.grid();
    let spectra = gradient_spectra(f);
    let refs: Vec<&[Complex64]> = spectra.iter().map(|c| c.as_slice()).collect();
    RealField::new(g, t.to_physical(&refs, &g, g.n())).expect("sizes match")
}

/// Spectral divergence `∂_j T_ij` of a row-major 2×2 tensor spectrum.
pub fn divergence_of_tensor(tensor: &SpectralField) -> Result<SpectralField> {
    if tensor.ncomp() != 4 {
        return Err(Error::usage("tensor divergence needs four components"));
    }
    let g = *tensor.grid();
    let mut out = SpectralField::zeros(g, 2);
    for (idx, f) in g.modes() {
        if g.is_nyquist_mode(f) {
            continue;
        }
        let [k1, k2] = g.wavevector_of(f);
        for i in 0..2 {
            let t1 = tensor.comp(2 * i)[idx];
            let t2 = tensor.comp(2 * i + 1)[idx];
            out.comp_mut(i)[idx] = Complex64::new(0.0, 1.0) * (t1 * k1 + t2 * k2);
        }
    }
    Ok(out)
}

/// Leray projection `û ← (I − k kᵀ/|k|²) v̂`, with the mean and the Nyquist
/// lines set to zero.
pub fn leray_project(v: &SpectralField) -> Result<SpectralVelocity> {
    if v.ncomp() != 2 {
        return Err(Error::usage(format!(
            "projection needs a 2-component field (got {})",
            v.ncomp()
        )));
    }
    let g = *v.grid();
    let mut out = v.clone();
    for (idx, f) in g.modes() {
        if idx == 0 || g.is_nyquist_mode(f) {
            out.comp_mut(0)[idx] = Complex64::new(0.0, 0.0);
            out.comp_mut(1)[idx] = Complex64::new(0.0, 0.0);
            continue;
        }
        let [k1, k2] = g.wavevector_of(f);
        let a = v.comp(0)[idx];
        let b = v.comp(1)[idx];
        let kdotv = (a * k1 + b * k2) / (k1 * k1 + k2 * k2);
        out.comp_mut(0)[idx] = a - kdotv * k1;
        out.comp_mut(1)[idx] = b - kdotv * k2;
    }
    Ok(SpectralVelocity::from_projected(out))
}

/// Velocity from a streamfunction spectrum: `u = (∂_y ψ, −∂_x ψ)`.
pub fn velocity_from_streamfunction(psi: &SpectralField) -> Result<SpectralVelocity> {
    if psi.ncomp() != 1 {
        return Err(Error::usage("streamfunction must be scalar"));
    }
    let g = *psi.grid();
    let mut v = SpectralField::zeros(g, 2);
    for (idx, f) in g.modes() {
        let [k1, k2] = g.wavevector_of(f);
        let z = psi.comp(0)[idx];
        v.comp_mut(0)[idx] = z * Complex64::new(0.0, k2);
        v.comp_mut(1)[idx] = z * Complex64::new(0.0, -k1);
    }
    leray_project(&v)
}
