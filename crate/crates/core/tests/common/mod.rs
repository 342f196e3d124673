//! Invariant checks shared by the property tests and the acceptance harness.
//! Each returns the measured quantity; callers compare it with the bound.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smagflow::experiments::RandomICSpec;
use smagflow::ledger::gronwall_bound;
use smagflow::rhs::{advection_term, assemble_rhs, dissipation_functionals, eddy_viscosity_term, SmagorinskyParams};
use smagflow::spectral::norms::{l2_norm_sq, sobolev_norm, sobolev_weight, SobolevOrder, SobolevVariant};
use smagflow::spectral::{gradient, l2_inner, leray_project, Grid, RealField, SpectralField, SpectralVelocity, Transform};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform white noise in `[-1, 1]` at every collocation point.
pub fn noise(grid: Grid, ncomp: usize, seed: u64) -> RealField {
    let mut r = rng(seed);
    let comps = (0..ncomp)
        .map(|_| (0..grid.len()).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    RealField::new(grid, comps).unwrap()
}

/// Smooth solenoidal field with a random spectrum peaked at `k_p`.
pub fn smooth_velocity(grid: Grid, seed: u64, peak_k: f64) -> SpectralVelocity {
    RandomICSpec { peak_k, amplitude: 1.0 }.generate(&grid, seed).unwrap()
}

pub fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.comps()
        .iter()
        .zip(b.comps())
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

/// `|Σ quadrature − Σ spectral| / Σ quadrature` for `‖f‖²`.
pub fn parseval_defect(f: &RealField) -> f64 {
    let quad = l2_inner(f, f).unwrap();
    let spec = l2_norm_sq(&Transform::new().forward(f));
    (quad - spec).abs() / quad
}

pub fn round_trip_defect(f: &RealField) -> f64 {
    let t = Transform::new();
    let back = t.inverse(&t.forward(f));
    let err = back
        .comps()
        .iter()
        .zip(f.comps())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    err / f.max_abs()
}

/// `max |P(Pv) − Pv| / max |Pv|` for the spectrum of `noise`.
pub fn idempotence_defect(v: &SpectralField) -> f64 {
    let p = leray_project(v).unwrap();
    let pp = leray_project(p.field()).unwrap();
    max_diff(pp.field(), p.field()) / p.field().max_abs()
}

/// `max_k |k·û_k| / max_k |û_k|` after projection.
pub fn divergence_ratio(v: &SpectralField) -> f64 {
    let u = leray_project(v).unwrap();
    let g = *u.grid();
    let f = u.field();
    let div = g
        .modes()
        .map(|(i, m)| {
            let k = g.wavevector_of(m);
            (f.comp(0)[i] * k[0] + f.comp(1)[i] * k[1]).norm()
        })
        .fold(0.0, f64::max);
    div / f.max_abs()
}

/// Max error of the spectral `∂_x` and `∂_y` of a smooth test field against
/// second-order centered differences on `N` points.
pub fn gradient_fd_error(n: usize) -> f64 {
    let g = Grid::square(n).unwrap();
    let t = Transform::new();
    let field = |x: f64, y: f64| (x + 2.0 * y).sin() + 0.5 * (3.0 * x).cos() * y.sin();
    let phys = RealField::from_fn(g, 2, |c, x, y| if c == 0 { field(x, y) } else { 0.0 });
    let u = t.forward(&phys);
    // gradient component 2*i + j is ∂_j u_i; the projection is bypassed
    let grads = smagflow::spectral::gradient_of(&t, &u);
    let h = g.dx();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (g.coordinate(i), g.coordinate(j));
            let fdx = (field(x + h, y) - field(x - h, y)) / (2.0 * h);
            let fdy = (field(x, y + h) - field(x, y - h)) / (2.0 * h);
            let idx = i * n + j;
            err = err.max((grads.comp(0)[idx] - fdx).abs()).max((grads.comp(1)[idx] - fdy).abs());
        }
    }
    err
}

/// Observed orders of the spectral/FD discrepancy over `16, 32, 64`.
pub fn gradient_fd_orders() -> Vec<f64> {
    let e: Vec<f64> = [16, 32, 64].iter().map(|&n| gradient_fd_error(n)).collect();
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// `‖u‖_{H^{s'}} − ‖u‖_{H^s}` for `s ≤ s'`, Bessel variant; non-negative when monotone.
pub fn monotonicity_gap(u: &SpectralVelocity, s: f64, s2: f64) -> f64 {
    let n = |x| sobolev_norm(u.field(), SobolevOrder::new(x).unwrap(), SobolevVariant::Bessel).unwrap();
    n(s2) - n(s) * (1.0 - 1e-13)
}

/// `(ratio, c₁, c₂)` with `ratio = ‖u‖_ds / ‖u‖_b` and the bracket from the
/// weight ratio over the modes `u` occupies.
pub fn variant_bracket(u: &SpectralVelocity, s: f64) -> (f64, f64, f64) {
    let so = SobolevOrder::new(s).unwrap();
    let g = *u.grid();
    let f = u.field();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for (i, m) in g.modes() {
        if f.comps().iter().all(|c| c[i].norm() == 0.0) {
            continue;
        }
        let k = g.wavevector_of(m);
        let r = sobolev_weight(k, so, SobolevVariant::DerivativeSum).unwrap()
            / sobolev_weight(k, so, SobolevVariant::Bessel).unwrap();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let ds = sobolev_norm(f, so, SobolevVariant::DerivativeSum).unwrap();
    let b = sobolev_norm(f, so, SobolevVariant::Bessel).unwrap();
    (ds / b, lo.sqrt(), hi.sqrt())
}

/// `|(A(u), u)| / (‖A(u)‖ ‖u‖)` for the dealiased advection term `A`.
pub fn advection_neutrality(u: &SpectralVelocity) -> f64 {
    let a = advection_term(&Transform::new(), u);
    let inner = a.inner(u.field()).unwrap();
    inner.abs() / (l2_norm_sq(&a).sqrt() * l2_norm_sq(u.field()).sqrt())
}

/// `|(∇·T(u), u) + (c_sδ)²‖∇u‖³_{L³}| / ((c_sδ)²‖∇u‖³_{L³})`.
pub fn dissipativity_defect(u: &SpectralVelocity, p: &SmagorinskyParams) -> f64 {
    let t = Transform::new();
    let inner = eddy_viscosity_term(&t, u, p).inner(u.field()).unwrap();
    let (_, smag) = dissipation_functionals(&t, u, p);
    (inner + smag).abs() / smag
}

/// `max |T(λu) − λ²T(u)| / max |λ²T(u)|`.
pub fn homogeneity_defect(u: &SpectralVelocity, p: &SmagorinskyParams, lambda: f64) -> f64 {
    let t = Transform::new();
    let scaled = eddy_viscosity_term(&t, &u.rescaled(lambda), p);
    let reference = eddy_viscosity_term(&t, u, p).scaled(lambda * lambda);
    max_diff(&scaled, &reference) / reference.max_abs()
}

/// `max |RHS(c_s = 0) − P[A(u) + f]|`.
pub fn plain_ns_defect(u: &SpectralVelocity, f: &SpectralVelocity, nu: f64) -> f64 {
    let t = Transform::new();
    let p = SmagorinskyParams::new(nu).with_c_s(0.0);
    let rhs = assemble_rhs(&t, u, f, &p).unwrap();
    let mut direct = advection_term(&t, u);
    direct.axpy(1.0, f.field());
    max_diff(rhs.field(), leray_project(&direct).unwrap().field())
}

/// Divergence and Hermitian defects of `assemble_rhs(u)`.
pub fn rhs_defects(u: &SpectralVelocity, f: &SpectralVelocity, p: &SmagorinskyParams) -> (f64, f64) {
    let r = assemble_rhs(&Transform::new(), u, f, p).unwrap();
    (r.divergence_defect(), r.field().hermitian_defect())
}

/// Smallest `bound(β₂) − bound(β₁)` over the grid for `β₂ ≥ β₁`.
pub fn gronwall_monotonicity(seed: u64, len: usize) -> f64 {
    let mut r = rng(seed);
    let mut t = vec![0.0];
    for _ in 1..len {
        let last = *t.last().unwrap();
        t.push(last + r.gen_range(1e-3..0.5));
    }
    let alpha: Vec<f64> = (0..len).map(|_| r.gen_range(0.0..3.0)).collect();
    let b1: Vec<f64> = (0..len).map(|_| r.gen_range(0.0..2.0)).collect();
    let b2: Vec<f64> = b1.iter().map(|b| b + r.gen_range(0.0..1.0)).collect();
    let lo = gronwall_bound(&t, &alpha, &b1).unwrap().bound;
    let hi = gronwall_bound(&t, &alpha, &b2).unwrap().bound;
    hi.iter().zip(&lo).map(|(h, l)| h - l).fold(f64::INFINITY, f64::min)
}

/// Largest defect among divergence, mean and amplitude of a random draw.
pub fn random_ic_defect(grid: Grid, seed: u64, amplitude: f64, peak_k: f64) -> f64 {
    let u = RandomICSpec { peak_k, amplitude }.generate(&grid, seed).unwrap();
    let mean = u.field().comps().iter().map(|c| c[0].norm()).fold(0.0, f64::max);
    let amp = (l2_norm_sq(u.field()).sqrt() - amplitude).abs() / amplitude;
    u.divergence_defect().max(mean).max(amp).max(u.field().hermitian_defect())
}

/// Finite-difference check that the physical gradient tensor has the
/// expected layout: `∂_y` of `(sin y, 0)` is `(cos y)` in component 1.
pub fn gradient_layout_ok() -> bool {
    let g = Grid::square(16).unwrap();
    let t = Transform::new();
    let u = leray_project(&t.forward(&RealField::from_fn(g, 2, |c, _, y| if c == 0 { y.sin() } else { 0.0 })))
        .unwrap();
    let grad = gradient(&t, &u);
    (0..g.n()).all(|j| (grad.comp(1)[j] - g.coordinate(j).cos()).abs() < 1e-12)
}
