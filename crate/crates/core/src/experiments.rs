//! Refinement, time-step, viscosity and regularity studies.
//!
//! Every study is a pure function of its [`ExperimentConfig`]: independent
//! runs may execute on worker threads, and results are sorted by run key
//! before anything is reported.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{ignore, Interrupted, SchemeConfig, SimState, Solver, StepControl, Trajectory};
use crate::ledger::{
    asymptotic_bound_check, cumulative_trapezoid, gronwall_bound, EnergySeries, VerificationReport,
};
use crate::rhs::{ForcingSpec, SmagorinskyParams};
use crate::spectral::norms::{l2_norm_sq, sobolev_norm_sq, SobolevOrder, SobolevVariant};
use crate::spectral::{
    leray_project, poincare_constant, velocity_from_streamfunction, Grid, RealField, SpectralField,
    SpectralVelocity, Transform,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IcKind {
    Zero,
    TaylorGreen,
    RandomSpectrum,
}

impl IcKind {
    pub fn name(&self) -> &'static str {
        match self {
            IcKind::Zero => "zero",
            IcKind::TaylorGreen => "taylor-green",
            IcKind::RandomSpectrum => "random-spectrum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero" => Some(IcKind::Zero),
            "taylor-green" => Some(IcKind::TaylorGreen),
            "random-spectrum" => Some(IcKind::RandomSpectrum),
            _ => None,
        }
    }
}

/// Random solenoidal data with shell spectrum `E(k) ∝ k⁴ exp(−(k/k_p)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomICSpec {
    /// Peak wavenumber `k_p`, in units of `2π/L`.
    pub peak_k: f64,
    /// Target `‖u₀‖_{L²}`.
    pub amplitude: f64,
}

/// Lattice radius, in multiples of `k_p`, beyond which no modes are drawn.
const DRAW_RADIUS: f64 = 6.0;

impl RandomICSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.peak_k.is_finite() && self.peak_k > 0.0) {
            return Err(Error::config(format!("ic.peak_k > 0 required (got {})", self.peak_k)));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::config(format!(
                "ic.amplitude ≥ 0 required (got {})",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// Draws the field on `grid`. Phases are drawn over a lattice box that
    /// depends only on `peak_k`, so a given seed yields the same modes on
    /// every grid that resolves them.
    pub fn generate(&self, grid: &Grid, seed: u64) -> Result<SpectralVelocity> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut psi = SpectralField::zeros(*grid, 1);
        let reach = (DRAW_RADIUS * self.peak_k).ceil() as i64;
        let half = (grid.n() / 2) as i64;
        for n1 in -reach..=reach {
            for n2 in 0..=reach {
                if n2 == 0 && n1 <= 0 {
                    continue;
                }
                let phase = rng.gen::<f64>() * 2.0 * PI;
                if n1.abs() >= half || n2 >= half {
                    continue;
                }
                let k = ((n1 * n1 + n2 * n2) as f64).sqrt();
                // |û|² ∝ E(k)/k per lattice mode, and |ψ̂| = |û|/k
                let mag = k.sqrt() * (-0.5 * (k / self.peak_k).powi(2)).exp();
                let z = Complex64::from_polar(mag, phase);
                psi.comp_mut(0)[grid.mode_index([n1, n2])] = z;
                psi.comp_mut(0)[grid.mode_index([-n1, -n2])] = z.conj();
            }
        }
        let u = velocity_from_streamfunction(&psi)?;
        let norm = l2_norm_sq(u.field()).sqrt();
        if norm == 0.0 {
            return if self.amplitude == 0.0 {
                Ok(u)
            } else {
                Err(Error::config(format!(
                    "no resolvable modes for peak_k = {} on N = {}",
                    self.peak_k,
                    grid.n()
                )))
            };
        }
        Ok(u.rescaled(self.amplitude / norm))
    }
}

/// `a (sin x cos y, −cos x sin y)` in units of `2π/L`.
pub fn taylor_green(grid: &Grid, a: f64) -> SpectralVelocity {
    let k0 = grid.k0();
    let f = RealField::from_fn(*grid, 2, |c, x, y| {
        if c == 0 {
            a * (k0 * x).sin() * (k0 * y).cos()
        } else {
            -a * (k0 * x).cos() * (k0 * y).sin()
        }
    });
    leray_project(&Transform::new().forward(&f)).expect("two components")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcSpec {
    pub kind: IcKind,
    pub seed: u64,
    /// Taylor–Green: peak speed. Random spectrum: target L² norm.
    pub amplitude: f64,
    pub peak_k: f64,
}

impl Default for IcSpec {
    fn default() -> Self {
        Self {
            kind: IcKind::TaylorGreen,
            seed: 0,
            amplitude: 1.0,
            peak_k: 3.0,
        }
    }
}

impl IcSpec {
    pub fn build(&self, grid: &Grid) -> Result<SpectralVelocity> {
        match self.kind {
            IcKind::Zero => Ok(SpectralVelocity::zeros(*grid)),
            IcKind::TaylorGreen => {
                if !self.amplitude.is_finite() {
                    return Err(Error::config("ic.amplitude must be finite"));
                }
                Ok(taylor_green(grid, self.amplitude))
            }
            IcKind::RandomSpectrum => RandomICSpec {
                peak_k: self.peak_k,
                amplitude: self.amplitude,
            }
            .generate(grid, self.seed),
        }
    }
}

/// Everything one trajectory depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub grid: Grid,
    pub physics: SmagorinskyParams,
    pub forcing: ForcingSpec,
    pub scheme: SchemeConfig,
    pub ic: IcSpec,
    pub record_every: u64,
    pub s_track: Vec<SobolevOrder>,
}

impl SimParams {
    pub fn solver(&self) -> Result<Solver> {
        self.scheme.validate()?;
        Solver::new(self.grid, self.physics, &self.forcing, self.scheme.method)
    }

    pub fn initial(&self) -> Result<SpectralVelocity> {
        self.ic.build(&self.grid)
    }

    pub fn with_grid(&self, n: usize) -> Result<Self> {
        Ok(Self {
            grid: self.grid.with_n(n)?,
            ..self.clone()
        })
    }

    pub fn with_nu(&self, nu: f64) -> Self {
        let mut out = self.clone();
        out.physics.nu = nu;
        out
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        let mut out = self.clone();
        out.scheme.control = StepControl::Fixed { dt };
        out
    }

    pub fn run_from(&self, u0: SpectralVelocity) -> Result<std::result::Result<Trajectory, Box<Interrupted>>> {
        let solver = self.solver()?;
        Ok(solver.integrate(u0, &self.scheme, &self.s_track, self.record_every, &mut ignore()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Base run; its `ic`, `ic.seed` and `s_track` apply to every run.
    pub base: SimParams,
    pub resolutions: Vec<usize>,
    pub nu_list: Vec<f64>,
    /// Number of step sizes `dt, dt/2, …` in the uniqueness check.
    pub dt_levels: usize,
    pub tail_fraction: f64,
    /// Lower bound on `D_smag(ν_min)/D_smag(ν_max)` in the sweep.
    pub anomaly_threshold: f64,
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn new(base: SimParams) -> Self {
        Self {
            base,
            resolutions: vec![32, 64, 128],
            nu_list: vec![1e-1, 3e-2, 1e-2],
            dt_levels: 3,
            tail_fraction: 0.5,
            anomaly_threshold: 0.5,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("resolutions must be strictly increasing"));
        }
        for &n in &self.resolutions {
            self.base.grid.with_n(n)?;
        }
        if self.nu_list.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::config("nu_list must be strictly decreasing"));
        }
        if let Some(nu) = self.nu_list.iter().find(|nu| !(nu.is_finite() && **nu > 0.0)) {
            return Err(Error::config(format!("nu > 0 required (got {nu})")));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::config("tail_fraction must lie in (0, 1]"));
        }
        if self.dt_levels < 2 {
            return Err(Error::config("dt_levels ≥ 2 required"));
        }
        Ok(())
    }

    fn workers(&self) -> usize {
        if self.threads > 0 {
            self.threads
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

/// One trajectory of a study.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub key: String,
    pub params: SimParams,
    pub series: EnergySeries,
    pub final_state: Option<SimState>,
    pub error: Option<String>,
}

impl RunRecord {
    fn from_result(key: String, params: SimParams, r: Result<std::result::Result<Trajectory, Box<Interrupted>>>) -> Self {
        let s_list = params.s_track.clone();
        match r {
            Ok(Ok(tr)) => Self {
                key,
                params,
                series: tr.series,
                final_state: Some(tr.state),
                error: None,
            },
            Ok(Err(int)) => Self {
                key,
                params,
                series: int.partial,
                final_state: None,
                error: Some(int.error.to_string()),
            },
            Err(e) => Self {
                key,
                params,
                series: EnergySeries::new(s_list),
                final_state: None,
                error: Some(e.to_string()),
            },
        }
    }

    pub fn blew_up(&self) -> bool {
        self.final_state.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub report: VerificationReport,
    pub runs: Vec<RunRecord>,
}

/// Runs jobs on up to `workers` threads and returns results sorted by key.
fn run_all<K, T, F>(jobs: Vec<(K, F)>, workers: usize) -> Vec<(K, T)>
where
    K: Ord + Send,
    T: Send,
    F: FnOnce() -> T + Send,
{
    let queue = Mutex::new(jobs.into_iter());
    let done = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let job = queue.lock().expect("queue lock").next();
                let Some((key, f)) = job else { break };
                let out = f();
                done.lock().expect("result lock").push((key, out));
            });
        }
    });
    let mut out = done.into_inner().expect("result lock");
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// `‖a − b‖_{L²}` of two states on the same grid.
pub fn state_difference(a: &SpectralVelocity, b: &SpectralVelocity) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::usage(format!(
            "cannot compare states on N = {} and N = {}",
            a.grid().n(),
            b.grid().n()
        )));
    }
    let mut d = a.field().clone();
    d.axpy(-1.0, b.field());
    Ok(l2_norm_sq(&d).sqrt())
}

/// Errors below this count as "exactly resolved" in the refinement study.
pub const RESOLVED_TOL: f64 = 1e-8;

/// Compares `u_N(T)` with the restriction of `u_{2N}(T)` for every `N` in
/// `cfg.resolutions`. The initial field is generated on the finest grid and
/// restricted, and an unset filter width is pinned to the coarsest `L/N` so
/// that every run solves the same equation.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    if cfg.resolutions.len() < 3 {
        return Err(Error::usage("convergence study needs at least three resolutions"));
    }
    let mut base = cfg.base.clone();
    let coarsest = cfg.resolutions[0];
    let pinned = base.physics.delta.is_none();
    if pinned {
        base.physics.delta = Some(base.grid.length() / coarsest as f64);
    }
    let mut sizes: Vec<usize> = cfg.resolutions.iter().flat_map(|&n| [n, 2 * n]).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let finest = *sizes.last().expect("nonempty");
    let u_fine = base.with_grid(finest)?.initial()?;

    let mut jobs = Vec::new();
    for &n in &sizes {
        let p = base.with_grid(n)?;
        let u0 = u_fine.restrict(p.grid)?;
        jobs.push((n, move || {
            let r = p.run_from(u0);
            RunRecord::from_result(format!("N{n:04}"), p, r)
        }));
    }
    let runs: BTreeMap<usize, RunRecord> = run_all(jobs, cfg.workers()).into_iter().collect();

    let mut rep = VerificationReport::new("spectral convergence", RESOLVED_TOL);
    if pinned {
        rep.note(format!("filter width pinned to L/{coarsest}"));
    }
    let mut errors = Vec::new();
    let mut inconclusive = false;
    for &n in &cfg.resolutions {
        let (a, b) = (&runs[&n], &runs[&(2 * n)]);
        match (&a.final_state, &b.final_state) {
            (Some(sa), Some(sb)) => {
                let e = state_difference(&sa.u, &sb.u.restrict(sa.u.grid().to_owned())?)?;
                rep.measure(&format!("e_{n}"), e);
                errors.push(e);
            }
            _ => {
                inconclusive = true;
                rep.note(format!("pair N = {n}/{} inconclusive: run blew up", 2 * n));
            }
        }
    }
    let mut ratios = Vec::new();
    if !inconclusive {
        for (i, w) in errors.windows(2).enumerate() {
            let r = w[0] / w[1];
            rep.measure(&format!("ratio_{}", cfg.resolutions[i]), r);
            ratios.push(r);
        }
    }
    let resolved = !inconclusive && errors.iter().all(|&e| e <= RESOLVED_TOL);
    let decreasing = errors.windows(2).all(|w| w[0] > w[1]);
    let accelerating = ratios.windows(2).all(|w| w[1] > w[0]);
    rep.measure("strictly_decreasing", decreasing as u8 as f64)
        .measure("ratios_increasing", accelerating as u8 as f64);
    rep.passed = !inconclusive && (resolved || (decreasing && accelerating));
    if resolved {
        rep.note("all errors at roundoff: solution exactly resolved");
    }
    Ok(StudyOutcome {
        report: rep,
        runs: runs.into_values().collect(),
    })
}

/// Same data advanced with `dt, dt/2, …`; the successive differences must
/// shrink at the scheme order (±0.3).
pub fn uniqueness_check(cfg: &ExperimentConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    let dt = cfg
        .base
        .scheme
        .fixed_dt()
        .ok_or_else(|| Error::usage("uniqueness check needs a fixed time step"))?;
    let u0 = cfg.base.initial()?;
    let jobs: Vec<_> = (0..cfg.dt_levels)
        .map(|j| {
            let p = cfg.base.with_dt(dt / (1u64 << j) as f64);
            let u0 = u0.clone();
            (j, move || {
                let r = p.run_from(u0);
                RunRecord::from_result(format!("dt{j}"), p, r)
            })
        })
        .collect();
    let runs: Vec<RunRecord> = run_all(jobs, cfg.workers()).into_iter().map(|(_, r)| r).collect();

    let order = cfg.base.scheme.method.order() as f64;
    let mut rep = VerificationReport::new("time-step uniqueness", 0.3);
    rep.measure("nominal_order", order).measure("dt", dt);
    if let Some(bad) = runs.iter().find(|r| r.blew_up()) {
        rep.passed = false;
        rep.note(format!("run {} blew up: inconclusive", bad.key));
        return Ok(StudyOutcome { report: rep, runs });
    }
    let finals: Vec<&SpectralVelocity> = runs.iter().map(|r| &r.final_state.as_ref().expect("completed").u).collect();
    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|w| state_difference(w[0], w[1]))
        .collect::<Result<_>>()?;
    for (j, d) in diffs.iter().enumerate() {
        rep.measure(&format!("diff_{j}"), *d);
    }
    if diffs.iter().all(|&d| d == 0.0) {
        rep.note("all step sizes agree exactly");
        rep.measure("observed_order", order);
        rep.passed = true;
    } else if diffs.len() >= 2 {
        let observed = {
            let n = diffs.len();
            (diffs[n - 2] / diffs[n - 1]).log2()
        };
        rep.measure("observed_order", observed);
        rep.passed = observed.is_finite() && (observed - order).abs() <= 0.3;
    } else {
        rep.note("two step sizes give a difference but no order");
        rep.passed = diffs[0].is_finite();
    }
    Ok(StudyOutcome { report: rep, runs })
}

/// One run per viscosity; reports the long-time bound, the time-integrated
/// dissipations and `D_smag(ν_min)/D_smag(ν_max)`.
pub fn viscosity_sweep(cfg: &ExperimentConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    if cfg.base.physics.c_s <= 0.0 {
        return Err(Error::usage("viscosity sweep needs c_s > 0"));
    }
    if cfg.base.forcing.is_zero() {
        return Err(Error::usage("viscosity sweep needs nonzero forcing"));
    }
    if cfg.nu_list.is_empty() {
        return Err(Error::usage("nu_list is empty"));
    }
    let u0 = cfg.base.initial()?;
    let jobs: Vec<_> = cfg
        .nu_list
        .iter()
        .enumerate()
        .map(|(i, &nu)| {
            let p = cfg.base.with_nu(nu);
            let u0 = u0.clone();
            (i, move || {
                let r = p.run_from(u0);
                RunRecord::from_result(format!("nu{i}"), p, r)
            })
        })
        .collect();
    let runs: Vec<RunRecord> = run_all(jobs, cfg.workers()).into_iter().map(|(_, r)| r).collect();

    let c_p = poincare_constant(&cfg.base.grid);
    let mut rep = VerificationReport::new("viscosity sweep", cfg.anomaly_threshold);
    rep.measure("reference_constant", 2.0 * c_p * c_p);
    let mut all_ok = true;
    let mut d_smag = Vec::new();
    for (run, &nu) in runs.iter().zip(&cfg.nu_list) {
        let tag = format!("nu={nu:e}");
        rep.measure(&format!("{tag}/nu"), nu);
        if run.blew_up() {
            all_ok = false;
            d_smag.push(f64::NAN);
            rep.measure(&format!("{tag}/bounded"), 0.0);
            rep.note(format!("{tag}: {}", run.error.as_deref().unwrap_or("failed")));
            continue;
        }
        let t = run.series.times();
        let total = |f: &dyn Fn(&crate::ledger::EnergyRecord) -> f64| {
            *cumulative_trapezoid(&t, &run.series.column(f)).last().unwrap_or(&0.0)
        };
        let ds = total(&|r| r.smag_diss);
        let dv = total(&|r| r.visc_diss);
        d_smag.push(ds);
        let check = asymptotic_bound_check(&run.series, nu, &cfg.base.forcing, c_p, cfg.tail_fraction)?;
        for key in ["c_meas", "limsup_u_sq", "tail_drift", "stationary", "bounded", "reference_bound"] {
            rep.measure(&format!("{tag}/{key}"), check.value(key).expect("reported"));
        }
        rep.measure(&format!("{tag}/d_smag"), ds).measure(&format!("{tag}/d_visc"), dv);
        if !check.passed {
            all_ok = false;
            rep.note(format!("{tag}: tail not bounded and stationary"));
        }
    }
    let indicator = if d_smag.len() == 1 {
        1.0
    } else {
        d_smag[d_smag.len() - 1] / d_smag[0]
    };
    rep.measure("anomaly_indicator", indicator);
    rep.passed = all_ok && indicator.is_finite() && indicator >= cfg.anomaly_threshold;
    Ok(StudyOutcome { report: rep, runs })
}

/// Slack factor for the pointwise envelope comparison.
const ENVELOPE_SLACK: f64 = 1e-12;

/// Tracks `‖u(t)‖²_{H^s}` for each tracked `s` and fits the smallest
/// Grönwall rate `C₁ ≥ 0` with
/// `‖u(t)‖²_{H^s} ≤ (‖u₀‖²_{H^s} + ∫₀ᵗ ‖f‖²_{H^{s−2}}) e^{C₁ t}`.
pub fn regularity_track(cfg: &ExperimentConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    let base = &cfg.base;
    if base.s_track.is_empty() {
        return Err(Error::usage("regularity tracking needs at least one Sobolev order"));
    }
    if let Some(s) = base.s_track.iter().find(|s| s.value() <= 1.0) {
        return Err(Error::usage(format!(
            "regularity tracking needs s > 1 (got {})",
            s.value()
        )));
    }
    let solver = base.solver()?;
    let u0 = base.initial()?;
    let result = solver.integrate(u0.clone(), &base.scheme, &base.s_track, base.record_every, &mut ignore());
    let run = RunRecord::from_result("track".into(), base.clone(), Ok(result));

    let mut rep = VerificationReport::new("regularity envelope", ENVELOPE_SLACK);
    if run.blew_up() {
        rep.passed = false;
        rep.note(format!("run failed: {}", run.error.as_deref().unwrap_or("")));
        return Ok(StudyOutcome { report: rep, runs: vec![run] });
    }
    let t = run.series.times();
    let mut passed = true;
    for (i, &s) in base.s_track.iter().enumerate() {
        let tag = format!("s={}", s.value());
        let norms: Vec<f64> = run.series.column(|r| r.hs[i] * r.hs[i]);
        let u0_sq = sobolev_norm_sq(u0.field(), s, SobolevVariant::Bessel)?;
        let f_sq = sobolev_norm_sq(solver.forcing().field(), SobolevOrder::new(s.value() - 2.0)?, SobolevVariant::Bessel)?;
        let alpha: Vec<f64> = cumulative_trapezoid(&t, &vec![f_sq; t.len()])
            .into_iter()
            .map(|c| u0_sq + c)
            .collect();
        let mut c1 = 0.0_f64;
        for ((&ti, &h), &a) in t.iter().zip(&norms).zip(&alpha) {
            if ti > 0.0 && h > 0.0 && a > 0.0 {
                c1 = c1.max((h / a).ln() / ti);
            }
        }
        let env = gronwall_bound(&t, &alpha, &vec![c1; t.len()])?;
        let dominated = norms
            .iter()
            .zip(&env.bound)
            .all(|(h, b)| *h <= b * (1.0 + ENVELOPE_SLACK));
        let finite = norms.iter().all(|h| h.is_finite());
        let denom = u0_sq + f_sq;
        let implied_c = if denom > 0.0 {
            norms.iter().copied().fold(0.0, f64::max) / denom
        } else {
            f64::NAN
        };
        rep.measure(&format!("{tag}/c1"), c1)
            .measure(&format!("{tag}/implied_c"), implied_c)
            .measure(&format!("{tag}/max_norm_sq"), norms.iter().copied().fold(0.0, f64::max))
            .measure(&format!("{tag}/envelope_dominates"), dominated as u8 as f64)
            .measure(&format!("{tag}/bounded"), finite as u8 as f64);
        rep.profiles.insert(format!("{tag}/norm_sq"), norms);
        rep.profiles.insert(format!("{tag}/envelope"), env.bound);
        passed &= finite && dominated && c1.is_finite();
    }
    rep.profiles.insert("t".into(), t);
    rep.passed = passed;
    Ok(StudyOutcome { report: rep, runs: vec![run] })
}
