//! Flat `section.key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment that runs to the end of the
//! line; blank lines are ignored. Keys are case-sensitive and every key not
//! listed in [`KEYS`] is rejected. Lists are comma-separated. Errors carry the
//! offending key and its line (line 0 for a missing key).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, IcKind, IcSpec, RandomICSpec, SimParams};
use crate::integrator::{Method, SchemeConfig, StepControl};
use crate::rhs::{ForcingKind, ForcingMode, ForcingSpec, GradVariant, SmagorinskyParams};
use crate::spectral::norms::SobolevOrder;
use crate::spectral::Grid;

/// Every accepted key with its default (`required` marks mandatory keys).
pub const KEYS: &[(&str, &str)] = &[
    ("grid.N", "required"),
    ("grid.L", "2π"),
    ("physics.nu", "required"),
    ("physics.c_s", "0.17"),
    ("physics.delta", "auto (L/N)"),
    ("physics.grad_variant", "frobenius | strain-rate"),
    ("physics.pad_factor", "1.5"),
    ("forcing.kind", "zero | steady-mode | steady-multi-mode"),
    ("forcing.modes", "empty; `k1:k2:a` shear modes a·sin(k·x)ê"),
    ("ic.kind", "taylor-green | random-spectrum | zero"),
    ("ic.seed", "0"),
    ("ic.amplitude", "1"),
    ("ic.peak_k", "3"),
    ("ic.checkpoint", "unset; resume from this checkpoint file"),
    ("scheme.method", "if-rk4 | if-rk3"),
    ("scheme.dt", "1e-3 unless scheme.cfl is set"),
    ("scheme.cfl", "unset; Courant-number step control"),
    ("scheme.dt_max", "1e-2 (with scheme.cfl only)"),
    ("scheme.t_end", "required"),
    ("output.every", "1"),
    ("output.s_track", "1, 2"),
    ("output.dir", "$SMAGFLOW_OUTPUT_ROOT/<config name>, else runs/<config name>"),
    ("output.checkpoint_every", "0 (final checkpoint only); a multiple of output.every"),
    ("experiment.kind", "none | convergence | uniqueness | sweep | regularity"),
    ("experiment.resolutions", "32, 64, 128"),
    ("experiment.nu_list", "0.1, 0.03, 0.01"),
    ("experiment.dt_levels", "3"),
    ("experiment.tail_fraction", "0.5"),
    ("experiment.anomaly_threshold", "0.5"),
    ("experiment.threads", "0 (all cores)"),
    ("verify.identity_tol", "unset; energy-identity residual is reported only"),
];

const DEFAULT_DT: f64 = 1e-3;
const DEFAULT_DT_MAX: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    None,
    Convergence,
    Uniqueness,
    Sweep,
    Regularity,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::None => "none",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Uniqueness => "uniqueness",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Regularity => "regularity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(ExperimentKind::None),
            "convergence" => Some(ExperimentKind::Convergence),
            "uniqueness" => Some(ExperimentKind::Uniqueness),
            "sweep" => Some(ExperimentKind::Sweep),
            "regularity" => Some(ExperimentKind::Regularity),
            _ => None,
        }
    }
}

/// Forcing as written in the file: shear modes `(k, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingDecl {
    pub kind: ForcingKind,
    pub modes: Vec<([i64; 2], f64)>,
}

impl ForcingDecl {
    pub fn spec(&self) -> ForcingSpec {
        ForcingSpec {
            kind: self.kind,
            modes: self.modes.iter().map(|&(k, a)| ForcingMode::shear(k, a)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub resolutions: Vec<usize>,
    pub nu_list: Vec<f64>,
    pub dt_levels: usize,
    pub tail_fraction: f64,
    pub anomaly_threshold: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub physics: SmagorinskyParams,
    pub forcing: ForcingDecl,
    pub ic: IcSpec,
    pub resume: Option<PathBuf>,
    pub scheme: SchemeConfig,
    pub record_every: u64,
    pub s_track: Vec<SobolevOrder>,
    pub output_dir: Option<PathBuf>,
    pub checkpoint_every: u64,
    pub experiment: ExperimentSpec,
    pub identity_tol: Option<f64>,
}

impl RunConfig {
    pub fn sim_params(&self) -> SimParams {
        SimParams {
            grid: self.grid,
            physics: self.physics,
            forcing: self.forcing.spec(),
            scheme: self.scheme,
            ic: self.ic,
            record_every: self.record_every,
            s_track: self.s_track.clone(),
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        let e = &self.experiment;
        ExperimentConfig {
            base: self.sim_params(),
            resolutions: e.resolutions.clone(),
            nu_list: e.nu_list.clone(),
            dt_levels: e.dt_levels,
            tail_fraction: e.tail_fraction,
            anomaly_threshold: e.anomaly_threshold,
            threads: e.threads,
        }
    }

    /// Effective configuration with every default written out.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("grid.N", self.grid.n().to_string());
        put("grid.L", num(self.grid.length()));
        put("physics.nu", num(self.physics.nu));
        put("physics.c_s", num(self.physics.c_s));
        put("physics.delta", self.physics.delta.map_or("auto".into(), num));
        put("physics.grad_variant", self.physics.grad_variant.name().into());
        put("physics.pad_factor", num(self.physics.pad_factor));
        put("forcing.kind", self.forcing.kind.name().into());
        put(
            "forcing.modes",
            self.forcing
                .modes
                .iter()
                .map(|(k, a)| format!("{}:{}:{}", k[0], k[1], num(*a)))
                .collect::<Vec<_>>()
                .join(", "),
        );
        put("ic.kind", self.ic.kind.name().into());
        put("ic.seed", self.ic.seed.to_string());
        put("ic.amplitude", num(self.ic.amplitude));
        put("ic.peak_k", num(self.ic.peak_k));
        if let Some(p) = &self.resume {
            put("ic.checkpoint", p.display().to_string());
        }
        put("scheme.method", self.scheme.method.name().into());
        match self.scheme.control {
            StepControl::Fixed { dt } => put("scheme.dt", num(dt)),
            StepControl::Cfl { cfl, dt_max } => {
                put("scheme.cfl", num(cfl));
                put("scheme.dt_max", num(dt_max));
            }
        }
        put("scheme.t_end", num(self.scheme.t_end));
        put("output.every", self.record_every.to_string());
        put("output.s_track", list(self.s_track.iter().map(|s| num(s.value()))));
        if let Some(p) = &self.output_dir {
            put("output.dir", p.display().to_string());
        }
        put("output.checkpoint_every", self.checkpoint_every.to_string());
        let e = &self.experiment;
        put("experiment.kind", e.kind.name().into());
        put("experiment.resolutions", list(e.resolutions.iter().map(|n| n.to_string())));
        put("experiment.nu_list", list(e.nu_list.iter().map(|v| num(*v))));
        put("experiment.dt_levels", e.dt_levels.to_string());
        put("experiment.tail_fraction", num(e.tail_fraction));
        put("experiment.anomaly_threshold", num(e.anomaly_threshold));
        put("experiment.threads", e.threads.to_string());
        if let Some(tol) = self.identity_tol {
            put("verify.identity_tol", num(tol));
        }
        out
    }
}

/// Shortest decimal that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn list(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(", ")
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_at(&text, path)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_at(text, Path::new("<config>"))
}

struct Entries<'a> {
    origin: &'a Path,
    map: BTreeMap<String, (String, usize)>,
}

impl Entries<'_> {
    fn read<'a>(text: &str, origin: &'a Path) -> Result<Entries<'a>> {
        let mut map = BTreeMap::new();
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `section.key = value`, found `{body}`")))?;
            let key = key.trim();
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(err(line, format!("{key}: unknown key")));
            }
            if let Some((_, first)) = map.get(key) {
                return Err(err(line, format!("{key}: duplicate key (first set on line {first})")));
            }
            map.insert(key.to_string(), (value.trim().to_string(), line));
        }
        Ok(Entries { origin, map })
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(_, l)| *l)
    }

    fn fail(&self, key: &str, message: impl std::fmt::Display) -> Error {
        Error::Parse {
            path: self.origin.to_path_buf(),
            line: self.line(key),
            message: format!("{key}: {message}"),
        }
    }

    /// Re-anchors a validation error at the line of `key`.
    fn at<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Config(m) | Error::Usage(m) => self.fail(key, m),
            other => other,
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(v, _)| v.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.fail(key, format!("expected {what}, found `{v}`"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.typed(key, "a number")?.unwrap_or(default))
    }

    fn required<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T> {
        self.typed(key, what)?
            .ok_or_else(|| self.fail(key, "missing required key"))
    }

    fn name<T>(&self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse(v).ok_or_else(|| {
                let choices = KEYS.iter().find(|(k, _)| *k == key).map_or("", |(_, d)| d);
                self.fail(key, format!("unknown value `{v}` (expected {choices})"))
            }),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, what: &str, default: Vec<T>) -> Result<Vec<T>> {
        let Some(v) = self.raw(key) else {
            return Ok(default);
        };
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse()
                    .map_err(|_| self.fail(key, format!("expected a list of {what}, found `{item}`")))
            })
            .collect()
    }
}

fn parse_mode(item: &str) -> Option<([i64; 2], f64)> {
    let mut parts = item.split(':').map(str::trim);
    let k1 = parts.next()?.parse().ok()?;
    let k2 = parts.next()?.parse().ok()?;
    let a = parts.next()?.parse().ok()?;
    parts.next().is_none().then_some(([k1, k2], a))
}

pub fn parse_config_at(text: &str, origin: &Path) -> Result<RunConfig> {
    let e = Entries::read(text, origin)?;

    let n: usize = e.required("grid.N", "a positive integer")?;
    let length = e.f64_or("grid.L", 2.0 * std::f64::consts::PI)?;
    let grid = e.at(if e.has("grid.L") && n.is_multiple_of(2) { "grid.L" } else { "grid.N" }, Grid::new(n, length))?;

    let nu: f64 = e.required("physics.nu", "a number")?;
    let delta = match e.raw("physics.delta") {
        None | Some("auto") => None,
        Some(_) => e.typed("physics.delta", "a number or `auto`")?,
    };
    let physics = SmagorinskyParams {
        c_s: e.f64_or("physics.c_s", crate::rhs::DEFAULT_C_S)?,
        delta,
        nu,
        grad_variant: e.name("physics.grad_variant", GradVariant::Frobenius, GradVariant::parse)?,
        pad_factor: e.f64_or("physics.pad_factor", crate::rhs::DEFAULT_PAD_FACTOR)?,
    };
    if !(physics.c_s.is_finite() && physics.c_s >= 0.0) {
        return Err(e.fail("physics.c_s", format!("c_s ≥ 0 required (got {})", physics.c_s)));
    }
    if !(physics.nu.is_finite() && physics.nu > 0.0) {
        return Err(e.fail("physics.nu", format!("nu > 0 required (got {nu})")));
    }
    if let Some(d) = delta.filter(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(e.fail("physics.delta", format!("delta > 0 required (got {d})")));
    }
    e.at("physics.pad_factor", physics.validate())?;

    let forcing_kind = e.name("forcing.kind", ForcingKind::Zero, ForcingKind::parse)?;
    let modes = match e.raw("forcing.modes") {
        None | Some("") => Vec::new(),
        Some(v) => v
            .split(',')
            .map(|item| {
                parse_mode(item.trim())
                    .ok_or_else(|| e.fail("forcing.modes", format!("expected `k1:k2:a`, found `{}`", item.trim())))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let forcing = ForcingDecl { kind: forcing_kind, modes };
    e.at("forcing.modes", forcing.spec().spectrum(&grid).map(|_| ()))?;

    let ic = IcSpec {
        kind: e.name("ic.kind", IcKind::TaylorGreen, IcKind::parse)?,
        seed: e.typed("ic.seed", "a non-negative integer")?.unwrap_or(0),
        amplitude: e.f64_or("ic.amplitude", 1.0)?,
        peak_k: e.f64_or("ic.peak_k", 3.0)?,
    };
    if ic.kind == IcKind::RandomSpectrum {
        let key = if e.has("ic.peak_k") && !(ic.peak_k > 0.0) { "ic.peak_k" } else { "ic.amplitude" };
        e.at(key, RandomICSpec { peak_k: ic.peak_k, amplitude: ic.amplitude }.validate())?;
    } else if !ic.amplitude.is_finite() {
        return Err(e.fail("ic.amplitude", "must be finite"));
    }
    let resume = e.raw("ic.checkpoint").filter(|v| !v.is_empty()).map(PathBuf::from);

    let method = e.name("scheme.method", Method::IfRk4, Method::parse)?;
    let t_end: f64 = e.required("scheme.t_end", "a number")?;
    let control = match (e.has("scheme.dt"), e.has("scheme.cfl")) {
        (true, true) => return Err(e.fail("scheme.cfl", "scheme.dt and scheme.cfl are mutually exclusive")),
        (_, true) => StepControl::Cfl {
            cfl: e.required("scheme.cfl", "a number")?,
            dt_max: e.f64_or("scheme.dt_max", DEFAULT_DT_MAX)?,
        },
        (_, false) => {
            if e.has("scheme.dt_max") {
                return Err(e.fail("scheme.dt_max", "only valid together with scheme.cfl"));
            }
            StepControl::Fixed { dt: e.f64_or("scheme.dt", DEFAULT_DT)? }
        }
    };
    let scheme = SchemeConfig { method, control, t_end };
    let scheme_key = match control {
        StepControl::Fixed { dt } if !(dt.is_finite() && dt > 0.0) => "scheme.dt",
        StepControl::Cfl { cfl, .. } if !(cfl > 0.0 && cfl <= 1.0) => "scheme.cfl",
        StepControl::Cfl { dt_max, .. } if !(dt_max.is_finite() && dt_max > 0.0) => "scheme.dt_max",
        _ => "scheme.t_end",
    };
    e.at(scheme_key, scheme.validate())?;

    let record_every: u64 = e.typed("output.every", "a positive integer")?.unwrap_or(1);
    if record_every == 0 {
        return Err(e.fail("output.every", "must be at least 1"));
    }
    let s_track = e
        .list("output.s_track", "numbers", vec![1.0, 2.0])?
        .into_iter()
        .map(|s: f64| e.at("output.s_track", SobolevOrder::new(s)))
        .collect::<Result<Vec<_>>>()?;
    let output_dir = e.raw("output.dir").filter(|v| !v.is_empty()).map(PathBuf::from);
    let checkpoint_every: u64 = e.typed("output.checkpoint_every", "a non-negative integer")?.unwrap_or(0);
    if !checkpoint_every.is_multiple_of(record_every) {
        return Err(e.fail(
            "output.checkpoint_every",
            format!("must be a multiple of output.every = {record_every}"),
        ));
    }

    let defaults = ExperimentConfig::new(SimParams {
        grid,
        physics,
        forcing: forcing.spec(),
        scheme,
        ic,
        record_every,
        s_track: s_track.clone(),
    });
    let experiment = ExperimentSpec {
        kind: e.name("experiment.kind", ExperimentKind::None, ExperimentKind::parse)?,
        resolutions: e.list("experiment.resolutions", "integers", defaults.resolutions.clone())?,
        nu_list: e.list("experiment.nu_list", "numbers", defaults.nu_list.clone())?,
        dt_levels: e.typed("experiment.dt_levels", "an integer")?.unwrap_or(defaults.dt_levels),
        tail_fraction: e.f64_or("experiment.tail_fraction", defaults.tail_fraction)?,
        anomaly_threshold: e.f64_or("experiment.anomaly_threshold", defaults.anomaly_threshold)?,
        threads: e.typed("experiment.threads", "an integer")?.unwrap_or(defaults.threads),
    };
    let identity_tol = e.typed("verify.identity_tol", "a number")?;
    if let Some(tol) = identity_tol {
        if !(tol >= 0.0) {
            return Err(e.fail("verify.identity_tol", format!("must be ≥ 0 (got {tol})")));
        }
    }

    let cfg = RunConfig {
        grid,
        physics,
        forcing,
        ic,
        resume,
        scheme,
        record_every,
        s_track,
        output_dir,
        checkpoint_every,
        experiment,
        identity_tol,
    };
    let exp_key = |m: &str| {
        [
            ("resolution", "experiment.resolutions"),
            ("nu", "experiment.nu_list"),
            ("tail_fraction", "experiment.tail_fraction"),
            ("dt_levels", "experiment.dt_levels"),
        ]
        .iter()
        .find(|(needle, _)| m.contains(needle))
        .map_or("experiment.resolutions", |(_, k)| k)
    };
    if let Err(err) = cfg.experiment_config().validate() {
        let key = exp_key(&err.to_string());
        return Err(e.at::<()>(key, Err(err)).unwrap_err());
    }
    Ok(cfg)
}
