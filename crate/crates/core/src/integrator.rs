//! Integrating-factor Runge–Kutta time stepping of the projected Galerkin system.
//!
//! The viscous term is integrated exactly per mode through `e^{−ν|k|²τ}`;
//! the projected nonlinear and forcing terms go through explicit Lawson-type
//! RK stages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{record, EnergyRecord, EnergySeries};
use crate::rhs::{assemble_rhs, ForcingSpec, SmagorinskyParams};
use crate::spectral::norms::SobolevOrder;
use crate::spectral::{gradient, Grid, SpectralField, SpectralVelocity, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Method {
    #[default]
    IfRk4,
    IfRk3,
}

impl Method {
    pub fn order(&self) -> u32 {
        match self {
            Method::IfRk4 => 4,
            Method::IfRk3 => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::IfRk4 => "if-rk4",
            Method::IfRk3 => "if-rk3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "if-rk4" => Some(Method::IfRk4),
            "if-rk3" => Some(Method::IfRk3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepControl {
    Fixed { dt: f64 },
    /// Courant-number control with an upper step bound.
    Cfl { cfl: f64, dt_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub method: Method,
    pub control: StepControl,
    pub t_end: f64,
}

/// Speed floor guarding the advective bound for a resting fluid.
pub const U_FLOOR: f64 = 1e-8;

impl SchemeConfig {
    pub fn fixed(method: Method, dt: f64, t_end: f64) -> Self {
        Self {
            method,
            control: StepControl::Fixed { dt },
            t_end,
        }
    }

    pub fn cfl(method: Method, cfl: f64, dt_max: f64, t_end: f64) -> Self {
        Self {
            method,
            control: StepControl::Cfl { cfl, dt_max },
            t_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.control {
            StepControl::Fixed { dt } if !(dt.is_finite() && dt > 0.0) => {
                return Err(Error::config(format!("dt > 0 required (got {dt})")))
            }
            StepControl::Cfl { cfl, dt_max } => {
                if !(cfl > 0.0 && cfl <= 1.0) {
                    return Err(Error::config(format!("cfl must lie in (0, 1] (got {cfl})")));
                }
                if !(dt_max.is_finite() && dt_max > 0.0) {
                    return Err(Error::config(format!("dt_max > 0 required (got {dt_max})")));
                }
            }
            _ => {}
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::config(format!("t_end ≥ 0 required (got {})", self.t_end)));
        }
        Ok(())
    }

    pub fn fixed_dt(&self) -> Option<f64> {
        match self.control {
            StepControl::Fixed { dt } => Some(dt),
            StepControl::Cfl { .. } => None,
        }
    }
}

/// The coefficient vector `c_k(t)` of the truncated system, with its clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: SpectralVelocity,
    pub step_index: u64,
}

impl SimState {
    pub fn initial(u: SpectralVelocity) -> Self {
        Self {
            t: 0.0,
            u,
            step_index: 0,
        }
    }
}

/// Receives every state the integrator emits a record for.
pub trait Observer {
    fn observe(&mut self, state: &SimState, record: &EnergyRecord);
}

impl<F: FnMut(&SimState, &EnergyRecord)> Observer for F {
    fn observe(&mut self, state: &SimState, record: &EnergyRecord) {
        self(state, record)
    }
}

/// Completed run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: SimState,
    pub series: EnergySeries,
}

/// A run that stopped early, with everything recorded up to the failure.
#[derive(Debug)]
pub struct Interrupted {
    pub error: Error,
    pub partial: EnergySeries,
    pub last_good: SimState,
}

impl std::fmt::Display for Interrupted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} records kept)", self.error, self.partial.records.len())
    }
}

impl std::error::Error for Interrupted {}

/// Fixed problem data plus transform plans; advances states.
#[derive(Debug)]
pub struct Solver {
    grid: Grid,
    params: SmagorinskyParams,
    forcing_spec: ForcingSpec,
    forcing: SpectralVelocity,
    method: Method,
    transform: Transform,
}

impl Solver {
    pub fn new(grid: Grid, params: SmagorinskyParams, forcing: &ForcingSpec, method: Method) -> Result<Self> {
        params.validate()?;
        let spectrum = forcing.spectrum(&grid)?;
        Ok(Self {
            grid,
            params,
            forcing_spec: forcing.clone(),
            forcing: spectrum,
            method,
            transform: Transform::new(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &SmagorinskyParams {
        &self.params
    }

    pub fn forcing(&self) -> &SpectralVelocity {
        &self.forcing
    }

    pub fn forcing_spec(&self) -> &ForcingSpec {
        &self.forcing_spec
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn method(&self) -> Method {
        self.method
    }

    fn rhs(&self, u: &SpectralVelocity) -> SpectralField {
        assemble_rhs(&self.transform, u, &self.forcing, &self.params)
            .expect("grids checked at construction")
            .into_field()
    }

    /// Table of `e^{−ν|k|² τ}` per mode.
    fn decay_table(&self, tau: f64) -> Vec<f64> {
        let g = self.grid;
        let nu = self.params.nu;
        g.modes()
            .map(|(_, f)| {
                let [k1, k2] = g.wavevector_of(f);
                (-nu * (k1 * k1 + k2 * k2) * tau).exp()
            })
            .collect()
    }

    fn decay(f: &SpectralField, table: &[f64]) -> SpectralField {
        let mut out = f.clone();
        out.apply_weights(table);
        out
    }

    /// One step of size `dt`. Fails with [`Error::BlowUp`] if the new state
    /// is not finite.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<SimState> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::usage(format!("dt > 0 required (got {dt})")));
        }
        if state.u.grid() != &self.grid {
            return Err(Error::config("state grid differs from solver grid"));
        }
        let u0 = state.u.field();
        let e_half = self.decay_table(0.5 * dt);
        let e_full = self.decay_table(dt);
        let half = |f: &SpectralField| Self::decay(f, &e_half);
        let full = |f: &SpectralField| Self::decay(f, &e_full);
        let next = match self.method {
            Method::IfRk4 => {
                let h = dt;
                let k1 = self.rhs(&state.u);
                let mut a = u0.clone();
                a.axpy(0.5 * h, &k1);
                let u2 = half(&a);
                let k2 = self.rhs(&SpectralVelocity::from_projected(u2));
                let mut u3 = half(u0);
                u3.axpy(0.5 * h, &k2);
                let k3 = self.rhs(&SpectralVelocity::from_projected(u3));
                let mut u4 = full(u0);
                u4.axpy(h, &half(&k3));
                let k4 = self.rhs(&SpectralVelocity::from_projected(u4));

                // E(h)u + h/6 [E(h)k1 + 2E(h/2)(k2 + k3) + k4]
                let mut mid = k2;
                mid.axpy(1.0, &k3);
                let mut out = full(u0);
                out.axpy(h / 6.0, &full(&k1));
                out.axpy(h / 3.0, &half(&mid));
                out.axpy(h / 6.0, &k4);
                out
            }
            Method::IfRk3 => {
                let h = dt;
                let k1 = self.rhs(&state.u);
                let mut a = u0.clone();
                a.axpy(0.5 * h, &k1);
                let u2 = half(&a);
                let k2 = self.rhs(&SpectralVelocity::from_projected(u2));
                let mut u3 = full(u0);
                u3.axpy(-h, &full(&k1));
                u3.axpy(2.0 * h, &half(&k2));
                let k3 = self.rhs(&SpectralVelocity::from_projected(u3));
                let mut out = full(u0);
                out.axpy(h / 6.0, &full(&k1));
                out.axpy(2.0 * h / 3.0, &half(&k2));
                out.axpy(h / 6.0, &k3);
                out
            }
        };
        let t = state.t + dt;
        let step_index = state.step_index + 1;
        if !next.is_finite() {
            return Err(Error::BlowUp { t, step_index });
        }
        Ok(SimState {
            t,
            u: SpectralVelocity::from_projected(next),
            step_index,
        })
    }

    /// Step size from the Courant number, capped by the explicit stability
    /// estimate of the eddy-viscosity term and by `dt_max`.
    pub fn cfl_dt(&self, state: &SimState, cfl: f64, dt_max: f64) -> f64 {
        let dx = self.grid.dx();
        let phys = self.transform.inverse(state.u.field());
        let u_max = phys.magnitude().into_iter().fold(0.0, f64::max);
        let advective = cfl * dx / u_max.max(U_FLOOR);
        let coef = self.params.eddy_coefficient(&self.grid);
        let eddy = if coef > 0.0 {
            let g_max = gradient(&self.transform, &state.u)
                .magnitude()
                .into_iter()
                .fold(0.0, f64::max);
            dx * dx / (4.0 * coef * g_max + f64::EPSILON)
        } else {
            f64::INFINITY
        };
        advective.min(eddy).min(dt_max)
    }

    pub fn record(&self, state: &SimState, s_list: &[SobolevOrder]) -> EnergyRecord {
        record(&self.transform, state, &self.forcing, &self.params, s_list)
    }

    /// Runs from `state` to `scheme.t_end`, recording every `every`-th step
    /// (and the first and last states). A zero-length horizon returns the
    /// state unchanged with an empty series.
    pub fn integrate_from(
        &self,
        state: SimState,
        scheme: &SchemeConfig,
        s_list: &[SobolevOrder],
        every: u64,
        observer: &mut dyn Observer,
    ) -> std::result::Result<Trajectory, Box<Interrupted>> {
        let fail = |error: Error, partial: EnergySeries, last_good: SimState| {
            Box::new(Interrupted {
                error,
                partial,
                last_good,
            })
        };
        let mut series = EnergySeries::new(s_list.to_vec());
        if let Err(e) = scheme.validate() {
            return Err(fail(e, series, state));
        }
        if scheme.method != self.method {
            return Err(fail(
                Error::config("scheme method differs from solver method"),
                series,
                state,
            ));
        }
        let every = every.max(1);
        let t_end = scheme.t_end;
        if state.t >= t_end {
            return Ok(Trajectory { state, series });
        }
        let first = self.record(&state, s_list);
        observer.observe(&state, &first);
        series.records.push(first);

        let mut state = state;
        loop {
            let remaining = t_end - state.t;
            let dt = match scheme.control {
                StepControl::Fixed { dt } => dt,
                StepControl::Cfl { cfl, dt_max } => self.cfl_dt(&state, cfl, dt_max),
            };
            // land exactly on t_end; a final step within roundoff of dt
            // keeps dt itself so that stopping at a step boundary and
            // resuming repeats the straight-through steps bit for bit
            let last = remaining <= dt * (1.0 + 1e-9);
            let dt = if last && dt - remaining > 1e-9 * dt { remaining } else { dt };
            let mut next = match self.step(&state, dt) {
                Ok(s) => s,
                Err(e) => return Err(fail(e, series, state)),
            };
            if last {
                next.t = t_end;
            }
            if last || next.step_index % every == 0 {
                let rec = self.record(&next, s_list);
                observer.observe(&next, &rec);
                series.records.push(rec);
            }
            state = next;
            if last {
                break;
            }
        }
        Ok(Trajectory { state, series })
    }

    pub fn integrate(
        &self,
        u0: SpectralVelocity,
        scheme: &SchemeConfig,
        s_list: &[SobolevOrder],
        every: u64,
        observer: &mut dyn Observer,
    ) -> std::result::Result<Trajectory, Box<Interrupted>> {
        self.integrate_from(SimState::initial(u0), scheme, s_list, every, observer)
    }
}

/// No-op observer.
pub fn ignore() -> impl FnMut(&SimState, &EnergyRecord) {
    |_: &SimState, _: &EnergyRecord| {}
}
