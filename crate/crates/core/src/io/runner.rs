//! Executes a [`RunConfig`] into a run directory and re-verifies stored runs.
//!
//! A plain run writes `config.txt`, `series.csv`, `report.txt`,
//! `report.json` and `final.ckpt` (or `last_good.ckpt` after a blow-up);
//! `checkpoint.ckpt` is refreshed every `output.checkpoint_every` steps. An
//! experiment writes `config.txt`, the reports and, for each run `<key>`,
//! `runs/<key>.txt` (that run's effective config) and `runs/<key>.csv`.

use std::cell::RefCell;
use std::path::{Path, PathBuf};

use super::checkpoint::{load_checkpoint, save_checkpoint};
use super::config::{load_config, ExperimentKind, RunConfig};
use super::csv::{read_csv, write_csv};
use super::write_atomic;
use crate::error::{Error, Result};
use crate::experiments::{
    convergence_study, regularity_track, uniqueness_check, viscosity_sweep, RunRecord, StudyOutcome,
};
use crate::integrator::{SimState, StepControl};
use crate::ledger::{
    asymptotic_bound_check, verify_energy_identity, verify_energy_inequality, EnergySeries, VerificationReport,
};
use crate::spectral::poincare_constant;

/// Environment variable naming the default root for run directories.
pub const OUTPUT_ROOT_VAR: &str = "SMAGFLOW_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    VerificationFailed,
    BlowUp,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::VerificationFailed => 2,
            Outcome::BlowUp => 3,
        }
    }
}

/// Exit status for an error that stopped a run before any verdict.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Usage(_) | Error::Parse { .. } => 4,
        Error::BlowUp { .. } => 3,
        Error::Io { .. } | Error::Checkpoint(_) => 1,
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub dir: PathBuf,
    pub reports: Vec<VerificationReport>,
}

/// Run directory for a config loaded from `config_path`: `output.dir` if
/// set, else `$SMAGFLOW_OUTPUT_ROOT/<stem>`, else `runs/<stem>`.
pub fn default_run_dir(cfg: &RunConfig, config_path: &Path) -> PathBuf {
    if let Some(d) = &cfg.output_dir {
        return d.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    let stem = config_path.file_stem().map_or_else(|| "run".into(), |s| s.to_os_string());
    root.join(stem)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_reports(dir: &Path, reports: &[VerificationReport]) -> Result<()> {
    let text: String = reports.iter().map(|r| r.to_text()).collect();
    write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    let json = serde_json::to_string_pretty(reports).expect("reports serialize");
    write_atomic(&dir.join("report.json"), json.as_bytes())
}

/// Ledger checks on a stored or fresh series of a plain run.
fn series_checks(cfg: &RunConfig, series: &EnergySeries) -> Vec<VerificationReport> {
    if series.is_empty() {
        let mut rep = VerificationReport::new("run", 0.0);
        rep.passed = true;
        rep.note("no-op: t_end is not after the start time, nothing integrated");
        return vec![rep];
    }
    let u0 = 2.0 * series.records[0].energy;
    let mut out = vec![verify_energy_inequality(series, u0, cfg.physics.nu, poincare_constant(&cfg.grid))];
    if let (StepControl::Fixed { dt }, true) = (cfg.scheme.control, series.len() >= 2) {
        let tol = cfg.identity_tol.unwrap_or(f64::INFINITY);
        if let Ok(mut rep) = verify_energy_identity(series, dt, cfg.scheme.method.order(), None, tol) {
            if cfg.identity_tol.is_none() {
                rep.note("reported only (verify.identity_tol unset)");
            }
            out.push(rep);
        }
    }
    out
}

fn outcome_of(reports: &[VerificationReport]) -> Outcome {
    if reports.iter().all(|r| r.passed) {
        Outcome::Pass
    } else {
        Outcome::VerificationFailed
    }
}

/// Runs `cfg` and writes its outputs into `dir`.
pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunSummary> {
    create_dir(dir)?;
    write_atomic(&dir.join("config.txt"), cfg.emit().as_bytes())?;
    match cfg.experiment.kind {
        ExperimentKind::None => run_plain(cfg, dir),
        kind => run_experiment(cfg, kind, dir),
    }
}

fn initial_state(cfg: &RunConfig) -> Result<SimState> {
    let Some(path) = &cfg.resume else {
        return Ok(SimState::initial(cfg.ic.build(&cfg.grid)?));
    };
    let state = load_checkpoint(path)?;
    if *state.u.grid() != cfg.grid {
        return Err(Error::config(format!(
            "checkpoint {} is on N = {}, L = {}; config has N = {}, L = {}",
            path.display(),
            state.u.grid().n(),
            state.u.grid().length(),
            cfg.grid.n(),
            cfg.grid.length()
        )));
    }
    Ok(state)
}

fn run_plain(cfg: &RunConfig, dir: &Path) -> Result<RunSummary> {
    let params = cfg.sim_params();
    let solver = params.solver()?;
    let state = initial_state(cfg)?;
    let ckpt_error: RefCell<Option<Error>> = RefCell::new(None);
    let ckpt_path = dir.join("checkpoint.ckpt");
    let every = cfg.checkpoint_every;
    let mut observer = |s: &SimState, _: &crate::ledger::EnergyRecord| {
        if every > 0 && s.step_index > 0 && s.step_index.is_multiple_of(every) && ckpt_error.borrow().is_none() {
            if let Err(e) = save_checkpoint(s, &ckpt_path) {
                *ckpt_error.borrow_mut() = Some(e);
            }
        }
    };
    let result = solver.integrate_from(state, &cfg.scheme, &cfg.s_track, cfg.record_every, &mut observer);
    if let Some(e) = ckpt_error.into_inner() {
        return Err(e);
    }
    let csv = dir.join("series.csv");
    let (outcome, reports) = match result {
        Ok(traj) => {
            write_csv(&traj.series, &csv)?;
            save_checkpoint(&traj.state, &dir.join("final.ckpt"))?;
            let reports = series_checks(cfg, &traj.series);
            (outcome_of(&reports), reports)
        }
        Err(int) => {
            write_csv(&int.partial, &csv)?;
            let Error::BlowUp { t, step_index } = int.error else {
                return Err(int.error);
            };
            save_checkpoint(&int.last_good, &dir.join("last_good.ckpt"))?;
            let mut rep = VerificationReport::new("blow-up", 0.0);
            rep.measure("t", t).measure("step_index", step_index as f64);
            rep.note(format!(
                "non-finite state at t = {t} (step {step_index}); {} records kept",
                int.partial.len()
            ));
            let mut reports = vec![rep];
            if !int.partial.is_empty() {
                reports.extend(series_checks(cfg, &int.partial));
            }
            (Outcome::BlowUp, reports)
        }
    };
    write_reports(dir, &reports)?;
    Ok(RunSummary {
        outcome,
        dir: dir.to_path_buf(),
        reports,
    })
}

/// Effective config of one run inside a study.
fn run_config(cfg: &RunConfig, run: &RunRecord) -> RunConfig {
    let mut out = cfg.clone();
    out.grid = run.params.grid;
    out.physics = run.params.physics;
    out.scheme = run.params.scheme;
    out.experiment.kind = ExperimentKind::None;
    out.output_dir = None;
    out.resume = None;
    out
}

pub fn run_study(cfg: &RunConfig, kind: ExperimentKind) -> Result<StudyOutcome> {
    let ecfg = cfg.experiment_config();
    match kind {
        ExperimentKind::Convergence => convergence_study(&ecfg),
        ExperimentKind::Uniqueness => uniqueness_check(&ecfg),
        ExperimentKind::Sweep => viscosity_sweep(&ecfg),
        ExperimentKind::Regularity => regularity_track(&ecfg),
        ExperimentKind::None => Err(Error::usage("no experiment selected")),
    }
}

fn run_experiment(cfg: &RunConfig, kind: ExperimentKind, dir: &Path) -> Result<RunSummary> {
    if cfg.resume.is_some() {
        return Err(Error::config("ic.checkpoint cannot be combined with an experiment"));
    }
    let study = run_study(cfg, kind)?;
    let runs_dir = dir.join("runs");
    create_dir(&runs_dir)?;
    for r in &study.runs {
        write_atomic(&runs_dir.join(format!("{}.txt", r.key)), run_config(cfg, r).emit().as_bytes())?;
        write_csv(&r.series, &runs_dir.join(format!("{}.csv", r.key)))?;
    }
    let outcome = if study.report.passed {
        Outcome::Pass
    } else if study.runs.iter().any(|r| r.blew_up()) {
        Outcome::BlowUp
    } else {
        Outcome::VerificationFailed
    };
    let reports = vec![study.report];
    write_reports(dir, &reports)?;
    Ok(RunSummary {
        outcome,
        dir: dir.to_path_buf(),
        reports,
    })
}

/// Re-executes the ledger checks on the CSV series stored in `dir`.
pub fn verify_dir(dir: &Path) -> Result<RunSummary> {
    let cfg = load_config(&dir.join("config.txt"))?;
    let mut reports = Vec::new();
    if cfg.experiment.kind == ExperimentKind::None {
        reports.extend(series_checks(&cfg, &read_csv(&dir.join("series.csv"))?));
    } else {
        let runs_dir = dir.join("runs");
        let mut keys: Vec<PathBuf> = std::fs::read_dir(&runs_dir)
            .map_err(|e| Error::io(&runs_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        keys.sort();
        for csv in keys {
            let run_cfg = load_config(&csv.with_extension("txt"))?;
            let series = read_csv(&csv)?;
            let key = csv.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let mut checks = series_checks(&run_cfg, &series);
            if cfg.experiment.kind == ExperimentKind::Sweep && series.len() >= 2 {
                checks.push(asymptotic_bound_check(
                    &series,
                    run_cfg.physics.nu,
                    &run_cfg.forcing.spec(),
                    poincare_constant(&run_cfg.grid),
                    cfg.experiment.tail_fraction,
                )?);
            }
            for mut c in checks {
                c.check = format!("{key}: {}", c.check);
                reports.push(c);
            }
        }
    }
    Ok(RunSummary {
        outcome: outcome_of(&reports),
        dir: dir.to_path_buf(),
        reports,
    })
}
