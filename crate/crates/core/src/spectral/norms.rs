//! L², L³, H^s and H^{-1} norms.
//!
//! Physical-space integrals use the rectangle rule on the collocation points;
//! spectral sums carry the single `L^2` Parseval factor of the coefficient
//! convention (see [`SpectralField`]).

use serde::{Deserialize, Serialize};

use super::field::{check_same, RealField, SpectralField};
use super::grid::Grid;
use crate::error::{Error, Result};

/// Order of a Sobolev norm, restricted to `[-2, 4]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevOrder(f64);

impl SobolevOrder {
    pub const MIN: f64 = -2.0;
    pub const MAX: f64 = 4.0;

    pub fn new(s: f64) -> Result<Self> {
        if !(Self::MIN..=Self::MAX).contains(&s) {
            return Err(Error::config(format!(
                "Sobolev order {s} outside supported range [{}, {}]",
                Self::MIN,
                Self::MAX
            )));
        }
        Ok(Self(s))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn as_integer(&self) -> Option<u32> {
        (self.0 >= 0.0 && self.0.fract() == 0.0).then_some(self.0 as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SobolevVariant {
    /// `Σ_{|α|≤s} ‖D^α u‖²`, integer `s` only.
    DerivativeSum,
    /// `Σ_k (1+|k|²)^s |û_k|²`.
    Bessel,
}

/// Rectangle-rule `∫ a·b dx`, summed over components.
pub fn l2_inner(a: &RealField, b: &RealField) -> Result<f64> {
    check_same(a.grid(), b.grid())?;
    if a.ncomp() != b.ncomp() {
        return Err(Error::config(format!(
            "component mismatch: {} vs {}",
            a.ncomp(),
            b.ncomp()
        )));
    }
    let s: f64 = a
        .comps()
        .iter()
        .zip(b.comps())
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q))
        .sum();
    Ok(s * a.grid().cell_area())
}

/// `(∫ |a|^p dx)^{1/p}` with `|·|` the pointwise magnitude across components.
pub fn lp_norm(a: &RealField, p: u32) -> Result<f64> {
    let sum = match p {
        2 => a.magnitude().iter().map(|m| m * m).sum::<f64>(),
        3 => a.magnitude().iter().map(|m| m * m * m).sum::<f64>(),
        _ => return Err(Error::config(format!("unsupported L^p exponent {p} (expected 2 or 3)"))),
    };
    Ok((sum * a.grid().cell_area()).powf(1.0 / p as f64))
}

/// `∫ |a|^3 dx` computed from raw samples on an arbitrary resolution of the box.
pub fn cube_integral(grid: &Grid, magnitudes: &[f64]) -> f64 {
    magnitudes.iter().map(|m| m * m * m).sum::<f64>() * grid.cell_area()
}

/// Spectral `‖f‖²_{L²}` via Parseval.
pub fn l2_norm_sq(f: &SpectralField) -> f64 {
    weighted_sq(f, |_| 1.0)
}

/// `L^2 Σ_k w(k) |f̂_k|²` over all components, `k` the integer wavevector.
pub fn weighted_sq<W: Fn([i64; 2]) -> f64>(f: &SpectralField, weight: W) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for (idx, k) in g.modes() {
        let w = weight(k);
        for c in f.comps() {
            acc += w * c[idx].norm_sqr();
        }
    }
    acc * g.area()
}

/// `‖∇f‖²_{L²} = L^2 Σ_k |k|² |f̂_k|²`.
pub fn gradient_norm_sq(f: &SpectralField) -> f64 {
    let g = *f.grid();
    weighted_sq(f, |k| {
        if g.is_nyquist_mode(k) {
            0.0
        } else {
            let [k1, k2] = g.wavevector_of(k);
            k1 * k1 + k2 * k2
        }
    })
}

/// Weight of the squared H^s norm at physical wavevector `k`.
pub fn sobolev_weight(k: [f64; 2], s: SobolevOrder, variant: SobolevVariant) -> Result<f64> {
    let [k1, k2] = k;
    match variant {
        SobolevVariant::Bessel => Ok((1.0 + k1 * k1 + k2 * k2).powf(s.value())),
        SobolevVariant::DerivativeSum => {
            let order = s.as_integer().ok_or_else(|| {
                Error::usage(format!(
                    "derivative-sum norm needs integer s >= 0 (got {})",
                    s.value()
                ))
            })?;
            let (a, b) = (k1 * k1, k2 * k2);
            let mut w = 0.0;
            for total in 0..=order {
                for i in 0..=total {
                    w += a.powi(i as i32) * b.powi((total - i) as i32);
                }
            }
            Ok(w)
        }
    }
}

pub fn sobolev_norm_sq(f: &SpectralField, s: SobolevOrder, variant: SobolevVariant) -> Result<f64> {
    let g = *f.grid();
    // validates the variant once before the sweep
    sobolev_weight([0.0, 0.0], s, variant)?;
    Ok(weighted_sq(f, |k| {
        sobolev_weight(g.wavevector_of(k), s, variant).expect("validated above")
    }))
}

pub fn sobolev_norm(f: &SpectralField, s: SobolevOrder, variant: SobolevVariant) -> Result<f64> {
    sobolev_norm_sq(f, s, variant).map(f64::sqrt)
}

/// Bessel-weighted dual norm `(L^2 Σ_k |f̂_k|²/(1+|k|²))^{1/2}` of a mean-zero field.
pub fn h_minus_one_norm(f: &SpectralField) -> Result<f64> {
    let mean = f.comps().iter().map(|c| c[0].norm()).fold(0.0, f64::max);
    if mean > 1e-14 * (1.0 + f.max_abs()) {
        return Err(Error::usage(format!(
            "H^-1 norm requires a mean-zero field (mean coefficient {mean:e})"
        )));
    }
    let s = SobolevOrder::new(-1.0)?;
    sobolev_norm(f, s, SobolevVariant::Bessel)
}

/// Sharp Poincaré constant for mean-zero periodic fields, `L/(2π)`.
pub fn poincare_constant(grid: &Grid) -> f64 {
    1.0 / grid.k0()
}
