//! Flat `key = value` experiment configuration.
//!
//! ```text
//! experiment = alpha_to_zero
//!
//! [domain]
//! shape = square
//! levels = 16
//!
//! [alpha]
//! schedule = pow2(-2..-12)
//! ```
//!
//! Keys before the first section are global. Sections are `[domain]`,
//! `[data]`, `[alpha]`, `[solver]` and `[output]`; `#` starts a comment.
//! Schedules are comma lists whose items are numbers, `pow2(a..b)` (2^a to
//! 2^b) or `logspace(a..b)` (10^a to 10^b), with integer steps.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use navier_slip::navierstokes::{InitialGuess, PicardOptions};
use navier_slip::spectra::EigenMethod;
use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Mms,
    AlphaToZero,
    AlphaToInfinity,
    UniformBound,
    CompatDisk,
    SpectraSuite,
    NsMms,
    NsLimits,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Mms,
        ExperimentKind::AlphaToZero,
        ExperimentKind::AlphaToInfinity,
        ExperimentKind::UniformBound,
        ExperimentKind::CompatDisk,
        ExperimentKind::SpectraSuite,
        ExperimentKind::NsMms,
        ExperimentKind::NsLimits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Mms => "mms",
            ExperimentKind::AlphaToZero => "alpha_to_zero",
            ExperimentKind::AlphaToInfinity => "alpha_to_infinity",
            ExperimentKind::UniformBound => "uniform_bound",
            ExperimentKind::CompatDisk => "compat_disk",
            ExperimentKind::SpectraSuite => "spectra_suite",
            ExperimentKind::NsMms => "ns_mms",
            ExperimentKind::NsLimits => "ns_limits",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Square,
    Disk,
}

/// Named load cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    /// Sin/cos manufactured solution (Stokes or Navier–Stokes by experiment).
    Manufactured,
    /// `f = β(x − c)` about the domain center `c`; incompatible on the disk.
    Swirl,
    /// `f = β(r² − 2/3)`: satisfies the compatibility condition on the unit disk.
    CompatibleDisk,
    Zero,
}

/// Spatial profile of the friction coefficient, multiplied by each α value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaField {
    Constant,
    /// `1 + ½ cos(2π x₁) cos(2π x₂)`
    Smooth,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainSpec {
    pub shape: Shape,
    pub radius: f64,
    /// Cells per side on the square, refinement level on the disk.
    pub levels: Vec<u32>,
    /// Disk levels for the Korn part of the spectral suite.
    pub disk_levels: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataSpec {
    pub load: LoadKind,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaSpec {
    /// Friction for level studies.
    pub value: f64,
    pub schedule: Vec<f64>,
    pub field: AlphaField,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSpec {
    pub compatibility_mode: bool,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub damping: f64,
    pub initial_guess: String,
    pub eigen_method: String,
    pub dense_limit: usize,
    /// Trilinear samples for the smallness indicator.
    pub samples: usize,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub domain: DomainSpec,
    pub data: DataSpec,
    pub alpha: AlphaSpec,
    pub solver: SolverSpec,
    pub output_dir: PathBuf,
}

fn num_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

fn int_list(values: &[u32]) -> String {
    values.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
}

/// Parses a schedule: numbers, `pow2(a..b)` and `logspace(a..b)`.
pub fn parse_schedule(text: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let generator = [("pow2(", 2.0f64), ("logspace(", 10.0)]
            .into_iter()
            .find_map(|(prefix, base)| item.strip_prefix(prefix).map(|rest| (rest, base)));
        if let Some((rest, base)) = generator {
            let inner = rest.strip_suffix(')').ok_or_else(|| format!("unterminated `{item}`"))?;
            let (a, b) = inner.split_once("..").ok_or_else(|| format!("expected `a..b` in `{item}`"))?;
            let a: i32 = a.trim().parse().map_err(|_| format!("bad exponent in `{item}`"))?;
            let b: i32 = b.trim().parse().map_err(|_| format!("bad exponent in `{item}`"))?;
            let step = if b >= a { 1 } else { -1 };
            let mut k = a;
            loop {
                out.push(base.powi(k));
                if k == b {
                    break;
                }
                k += step;
            }
        } else {
            out.push(item.parse::<f64>().map_err(|_| format!("bad schedule value `{item}`"))?);
        }
    }
    Ok(out)
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| LabError::config(format!("cannot read config {}: {e}", path.display())))
}

pub fn parse_levels(text: &str) -> std::result::Result<Vec<u32>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().map_err(|_| format!("bad level `{s}`")))
        .collect()
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{s}`")),
    }
}

fn parse_num<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|_| format!("cannot parse `{s}`"))
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        use ExperimentKind::*;
        let sweep = vec![0.0, 1e-2, 1.0, 1e2, 1e4, 1e6];
        let (shape, levels, load, schedule) = match kind {
            Mms => (Shape::Square, vec![8, 16, 32, 64], LoadKind::Manufactured, vec![1.0]),
            NsMms => (Shape::Square, vec![4, 8, 16, 32], LoadKind::Manufactured, vec![1.0]),
            AlphaToZero => (Shape::Square, vec![16], LoadKind::Swirl, parse_schedule("pow2(-2..-12)").unwrap()),
            AlphaToInfinity => (Shape::Square, vec![16], LoadKind::Swirl, parse_schedule("logspace(0..6)").unwrap()),
            UniformBound => (Shape::Square, vec![16], LoadKind::Swirl, sweep),
            CompatDisk => (Shape::Disk, vec![1, 2, 3, 4], LoadKind::CompatibleDisk, vec![1.0]),
            SpectraSuite => (Shape::Square, vec![4, 8, 16], LoadKind::Zero, sweep),
            NsLimits => {
                (Shape::Square, vec![8], LoadKind::Swirl, parse_schedule("pow2(0..-8), logspace(1..6)").unwrap())
            }
        };
        let pic = PicardOptions::default();
        ExperimentConfig {
            experiment: kind,
            domain: DomainSpec { shape, radius: 1.0, levels, disk_levels: vec![1, 2, 3, 4] },
            data: DataSpec { load, scale: if kind == NsLimits { 10.0 } else { 1.0 } },
            alpha: AlphaSpec { value: 1.0, schedule, field: AlphaField::Constant },
            solver: SolverSpec {
                compatibility_mode: false,
                max_iterations: pic.max_iterations,
                tolerance: pic.tolerance,
                damping: pic.damping,
                initial_guess: "zero".into(),
                eigen_method: "auto".into(),
                dense_limit: 2000,
                samples: 200,
                seed: 2024,
                threads: 1,
            },
            output_dir: PathBuf::from("out"),
        }
    }

    /// Parses `text`; `kind` is used when the file has no `experiment` key and
    /// must agree with it otherwise.
    pub fn parse(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        Self::parse_with(text, kind, None)
    }

    /// Like [`parse`](Self::parse) without a requested kind, falling back to
    /// `default` when the file declares none.
    pub fn parse_or(text: &str, default: ExperimentKind) -> Result<Self> {
        Self::parse_with(text, None, Some(default))
    }

    fn parse_with(text: &str, kind: Option<ExperimentKind>, default: Option<ExperimentKind>) -> Result<Self> {
        let mut entries = Vec::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| LabError::ConfigLine { line: line_no, message: "unterminated section".into() })?
                    .trim();
                if !["domain", "data", "alpha", "solver", "output"].contains(&name) {
                    return Err(LabError::ConfigLine { line: line_no, message: format!("unknown section [{name}]") });
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LabError::ConfigLine { line: line_no, message: format!("expected `key = value`, got `{line}`") })?;
            entries.push((line_no, section.clone(), key.trim().to_string(), value.trim().to_string()));
        }
        let declared = entries
            .iter()
            .find(|(_, s, k, _)| s.is_empty() && k == "experiment")
            .map(|(line, _, _, v)| v.parse::<ExperimentKind>().map_err(|m| LabError::ConfigLine { line: *line, message: m }))
            .transpose()?;
        let kind = match (declared, kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(LabError::config(format!("config declares experiment `{a}` but `{b}` was requested")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => default.ok_or_else(|| LabError::config("no experiment given"))?,
        };
        let mut cfg = ExperimentConfig::defaults(kind);
        for (line, section, key, value) in entries {
            cfg.set(&section, &key, &value).map_err(|message| LabError::ConfigLine { line, message })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        Self::parse(&read_config(path)?, kind)
    }

    pub fn from_file_or(path: &Path, default: ExperimentKind) -> Result<Self> {
        Self::parse_or(&read_config(path)?, default)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> std::result::Result<(), String> {
        match (section, key) {
            ("", "experiment") => {}
            ("domain", "shape") => {
                self.domain.shape = match v {
                    "square" => Shape::Square,
                    "disk" => Shape::Disk,
                    _ => return Err(format!("unknown shape `{v}`")),
                }
            }
            ("domain", "radius") => self.domain.radius = parse_num(v)?,
            ("domain", "levels") => self.domain.levels = parse_levels(v)?,
            ("domain", "disk_levels") => self.domain.disk_levels = parse_levels(v)?,
            ("data", "load") => {
                self.data.load = match v {
                    "manufactured" => LoadKind::Manufactured,
                    "swirl" => LoadKind::Swirl,
                    "compatible_disk" => LoadKind::CompatibleDisk,
                    "zero" => LoadKind::Zero,
                    _ => return Err(format!("unknown load `{v}`")),
                }
            }
            ("data", "scale") => self.data.scale = parse_num(v)?,
            ("alpha", "value") => self.alpha.value = parse_num(v)?,
            ("alpha", "schedule") => self.alpha.schedule = parse_schedule(v)?,
            ("alpha", "field") => {
                self.alpha.field = match v {
                    "constant" => AlphaField::Constant,
                    "smooth" => AlphaField::Smooth,
                    _ => return Err(format!("unknown alpha field `{v}`")),
                }
            }
            ("solver", "compatibility_mode") => self.solver.compatibility_mode = parse_bool(v)?,
            ("solver", "max_iterations") => self.solver.max_iterations = parse_num(v)?,
            ("solver", "tolerance") => self.solver.tolerance = parse_num(v)?,
            ("solver", "damping") => self.solver.damping = parse_num(v)?,
            ("solver", "initial_guess") => self.solver.initial_guess = v.to_string(),
            ("solver", "eigen_method") => self.solver.eigen_method = v.to_string(),
            ("solver", "dense_limit") => self.solver.dense_limit = parse_num(v)?,
            ("solver", "samples") => self.solver.samples = parse_num(v)?,
            ("solver", "seed") => self.solver.seed = parse_num(v)?,
            ("solver", "threads") => self.solver.threads = parse_num(v)?,
            ("output", "dir") => self.output_dir = PathBuf::from(v),
            _ => {
                let at = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
                return Err(format!("unknown key `{key}` at {at}"));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Config(m));
        for (name, levels) in [("levels", &self.domain.levels), ("disk_levels", &self.domain.disk_levels)] {
            if levels.is_empty() {
                return bad(format!("{name} must not be empty"));
            }
            if levels.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("{name} must be strictly increasing"));
            }
        }
        if self.domain.shape == Shape::Square && self.domain.levels[0] == 0 {
            return bad("square levels count cells per side and must be positive".into());
        }
        if !(self.domain.radius > 0.0 && self.domain.radius.is_finite()) {
            return bad("radius must be positive".into());
        }
        if self.alpha.schedule.is_empty() {
            return bad("alpha schedule must not be empty".into());
        }
        if self.alpha.schedule.iter().chain([&self.alpha.value]).any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("friction values must be finite and nonnegative".into());
        }
        if !self.data.scale.is_finite() {
            return bad("data scale must be finite".into());
        }
        if self.solver.threads == 0 {
            return bad("threads must be positive".into());
        }
        self.picard_options()?.validate().map_err(|e| LabError::Config(e.to_string()))?;
        self.eigen_method()?;
        use ExperimentKind::*;
        match (self.experiment, self.domain.shape, self.data.load) {
            (Mms | NsMms, Shape::Disk, _) => bad("manufactured solution studies run on the square".into()),
            (Mms | NsMms, _, l) if l != LoadKind::Manufactured => bad("mms experiments need load = manufactured".into()),
            (CompatDisk, Shape::Square, _) => bad("compat_disk runs on the disk".into()),
            (NsMms, _, _) if self.data.scale != 1.0 => bad("ns_mms does not support data scaling".into()),
            (_, Shape::Disk, LoadKind::Manufactured) => bad("the manufactured solution is not tangent to the circle".into()),
            (_, _, LoadKind::Manufactured) if self.alpha.field != AlphaField::Constant => {
                bad("the manufactured load needs a constant friction field".into())
            }
            _ => Ok(()),
        }
    }

    pub fn picard_options(&self) -> Result<PicardOptions> {
        let initial = match self.solver.initial_guess.as_str() {
            "zero" => InitialGuess::Zero,
            "stokes" => InitialGuess::Stokes,
            other => return Err(LabError::config(format!("unknown initial guess `{other}`"))),
        };
        Ok(PicardOptions {
            max_iterations: self.solver.max_iterations,
            tolerance: self.solver.tolerance,
            damping: self.solver.damping,
            initial,
        })
    }

    pub fn eigen_method(&self) -> Result<EigenMethod> {
        match self.solver.eigen_method.as_str() {
            "auto" => Ok(EigenMethod::Auto),
            "dense" => Ok(EigenMethod::Dense),
            "shift_invert" => Ok(EigenMethod::ShiftInvert),
            other => Err(LabError::config(format!("unknown eigen method `{other}`"))),
        }
    }

    /// Canonical text; `parse(to_text())` reproduces the config exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let shape = match self.domain.shape {
            Shape::Square => "square",
            Shape::Disk => "disk",
        };
        let load = match self.data.load {
            LoadKind::Manufactured => "manufactured",
            LoadKind::Swirl => "swirl",
            LoadKind::CompatibleDisk => "compatible_disk",
            LoadKind::Zero => "zero",
        };
        let field = match self.alpha.field {
            AlphaField::Constant => "constant",
            AlphaField::Smooth => "smooth",
        };
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "\n[domain]\nshape = {shape}\nradius = {:?}", self.domain.radius);
        let _ = writeln!(s, "levels = {}\ndisk_levels = {}", int_list(&self.domain.levels), int_list(&self.domain.disk_levels));
        let _ = writeln!(s, "\n[data]\nload = {load}\nscale = {:?}", self.data.scale);
        let _ = writeln!(s, "\n[alpha]\nvalue = {:?}\nschedule = {}\nfield = {field}", self.alpha.value, num_list(&self.alpha.schedule));
        let v = &self.solver;
        let _ = writeln!(
            s,
            "\n[solver]\ncompatibility_mode = {}\nmax_iterations = {}\ntolerance = {:?}\ndamping = {:?}\ninitial_guess = {}",
            v.compatibility_mode, v.max_iterations, v.tolerance, v.damping, v.initial_guess
        );
        let _ = writeln!(
            s,
            "eigen_method = {}\ndense_limit = {}\nsamples = {}\nseed = {}\nthreads = {}",
            v.eigen_method, v.dense_limit, v.samples, v.seed, v.threads
        );
        let _ = writeln!(s, "\n[output]\ndir = {}", self.output_dir.display());
        s
    }
}
