//! On-disk artifacts: content-addressed run directories, an append-only
//! NDJSON registry, and binary solution dumps.
//!
//! Layout under the output root:
//!
//! ```text
//! registry.ndjson
//! runs/<run id>/report.csv, fits.csv, report.json, ...
//! ```
//!
//! Solution dump: magic `NSLS1`, then three sections (velocity, pressure,
//! diagnostics), each a u32 little-endian length followed by that many f64
//! little-endian values.

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use navier_slip::stokes::{Diagnostics, Solution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::report::RunReport;

#[derive(Debug, Error)]
pub enum PersistenceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("run {run_id} already registered with different contents ({detail})")]
    DuplicateRun { run_id: String, detail: String },

    #[error("unsupported solution dump version `{found}` (expected `{}`)", SOLUTION_MAGIC)]
    VersionMismatch { found: String },

    #[error("malformed artifact: {0}")]
    Parse(String),
}

pub type Result<T, E = PersistenceError> = std::result::Result<T, E>;

pub const SOLUTION_MAGIC: &str = "NSLS1";
const MAGIC_STEM: &[u8] = b"NSLS";
pub const REGISTRY_FILE: &str = "registry.ndjson";

/// Serializes registry appends within the process.
static REGISTRY_WRITER: Mutex<()> = Mutex::new(());

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRegistryEntry {
    pub run_id: String,
    pub experiment: String,
    pub started_unix: u64,
    pub completed_unix: u64,
    /// Paths relative to the output root.
    pub artifacts: Vec<String>,
    pub status: RunStatus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
    /// Excluded from the integrity comparison (e.g. manifests with wall times).
    pub volatile: bool,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        Artifact { name: name.into(), bytes: bytes.into(), volatile: false }
    }

    pub fn volatile(name: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        Artifact { volatile: true, ..Artifact::new(name, bytes) }
    }
}

/// Content hash of a canonical config text together with the code versions.
pub fn run_id(canonical_config: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical_config.as_bytes());
    h.update(b"\0navier-slip ");
    h.update(navier_slip::VERSION.as_bytes());
    h.update(b"\0lab ");
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    format!("{:x}", h.finalize())
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| PersistenceError::Parse(format!("no file name in {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub struct Registry {
    root: PathBuf,
}

impl Registry {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Registry { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join("runs").join(run_id)
    }

    pub fn entries(&self) -> Result<Vec<RunRegistryEntry>> {
        let path = self.root.join(REGISTRY_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| PersistenceError::Parse(format!("registry line {}: {e}", i + 1)))
            })
            .collect()
    }

    pub fn find(&self, run_id: &str) -> Result<Option<RunRegistryEntry>> {
        Ok(self.entries()?.into_iter().find(|e| e.run_id == run_id))
    }

    /// Stores `artifacts` under the run directory and registers the run.
    ///
    /// A run already in the registry is verified instead: identical
    /// non-volatile bytes make this a no-op, anything else is `DuplicateRun`.
    pub fn store(&self, run_id: &str, experiment: &str, artifacts: &[Artifact]) -> Result<RunRegistryEntry> {
        let _guard = REGISTRY_WRITER.lock().unwrap_or_else(|p| p.into_inner());
        let dir = self.run_dir(run_id);
        if let Some(existing) = self.find(run_id)? {
            for a in artifacts.iter().filter(|a| !a.volatile) {
                let path = dir.join(&a.name);
                match fs::read(&path) {
                    Ok(bytes) if bytes == a.bytes => {}
                    Ok(_) => {
                        return Err(PersistenceError::DuplicateRun {
                            run_id: run_id.into(),
                            detail: format!("{} differs from the stored artifact", a.name),
                        })
                    }
                    Err(e) => {
                        return Err(PersistenceError::DuplicateRun {
                            run_id: run_id.into(),
                            detail: format!("stored {} is unreadable: {e}", a.name),
                        })
                    }
                }
            }
            return Ok(existing);
        }
        let started = now_unix();
        let mut paths = Vec::with_capacity(artifacts.len());
        for a in artifacts {
            if a.name.contains(['/', '\\']) || a.name.starts_with('.') {
                return Err(PersistenceError::Parse(format!("artifact name `{}` is not a plain file name", a.name)));
            }
            write_atomic(&dir.join(&a.name), &a.bytes)?;
            paths.push(format!("runs/{run_id}/{}", a.name));
        }
        let entry = RunRegistryEntry {
            run_id: run_id.into(),
            experiment: experiment.into(),
            started_unix: started,
            completed_unix: now_unix(),
            artifacts: paths,
            status: RunStatus::Complete,
        };
        let mut line = serde_json::to_string(&entry).map_err(|e| PersistenceError::Parse(e.to_string()))?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(self.root.join(REGISTRY_FILE))?;
        f.write_all(line.as_bytes())?;
        f.sync_all()?;
        Ok(entry)
    }
}

/// Deterministic report artifacts plus the (volatile) JSON manifest.
pub fn report_artifacts(report: &RunReport) -> Vec<Artifact> {
    vec![
        Artifact::new("report.csv", report.to_csv()),
        Artifact::new("fits.csv", report.fits_csv()),
        Artifact::volatile("report.json", report.to_json()),
    ]
}

pub fn store_run(root: &Path, report: &RunReport, extra: Vec<Artifact>) -> Result<RunRegistryEntry> {
    let mut artifacts = report_artifacts(report);
    artifacts.extend(extra);
    Registry::open(root)?.store(&run_id(&report.config), report.experiment.name(), &artifacts)
}

fn diagnostics_values(d: &Diagnostics) -> Vec<f64> {
    vec![
        d.energy_lhs,
        d.energy_rhs,
        d.energy_residual,
        d.h1_norm,
        d.pressure_l2,
        d.boundary_tangential_l2,
        d.divergence_l2,
        d.linear_residual,
        d.weak_divergence,
        d.pressure_mean,
        d.boundary_beta_moment,
        d.normal_defect,
        if d.guard_multiplier.is_some() { 1.0 } else { 0.0 },
        d.guard_multiplier.unwrap_or(0.0),
    ]
}

const DIAGNOSTICS_LEN: usize = 14;

pub fn encode_solution(sol: &Solution) -> Vec<u8> {
    let diag = diagnostics_values(&sol.diagnostics);
    let mut out = Vec::with_capacity(5 + 12 + 8 * (sol.velocity.len() + sol.pressure.len() + diag.len()));
    out.extend_from_slice(SOLUTION_MAGIC.as_bytes());
    for section in [&sol.velocity[..], &sol.pressure[..], &diag[..]] {
        let len = u32::try_from(section.len()).expect("section length fits in u32");
        out.extend_from_slice(&len.to_le_bytes());
        for v in section {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_solution(bytes: &[u8]) -> Result<Solution> {
    let magic_len = SOLUTION_MAGIC.len();
    if bytes.len() < magic_len || !bytes.starts_with(MAGIC_STEM) {
        return Err(PersistenceError::Parse("missing NSLS header".into()));
    }
    if &bytes[..magic_len] != SOLUTION_MAGIC.as_bytes() {
        return Err(PersistenceError::VersionMismatch { found: String::from_utf8_lossy(&bytes[..magic_len]).into() });
    }
    let mut pos = magic_len;
    let mut take = |n: usize, what: &str| -> Result<&[u8]> {
        let end = pos.checked_add(n).filter(|&e| e <= bytes.len()).ok_or_else(|| {
            PersistenceError::Parse(format!("truncated solution dump while reading {what} at byte {pos}"))
        })?;
        let s = &bytes[pos..end];
        pos = end;
        Ok(s)
    };
    let mut sections = Vec::with_capacity(3);
    for what in ["velocity", "pressure", "diagnostics"] {
        let len = u32::from_le_bytes(take(4, what)?.try_into().expect("4 bytes")) as usize;
        let raw = take(len.checked_mul(8).ok_or_else(|| PersistenceError::Parse("length overflow".into()))?, what)?;
        sections.push(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect::<Vec<f64>>());
    }
    if pos != bytes.len() {
        return Err(PersistenceError::Parse(format!("{} trailing bytes after solution dump", bytes.len() - pos)));
    }
    let d = sections.pop().expect("three sections");
    if d.len() != DIAGNOSTICS_LEN {
        return Err(PersistenceError::Parse(format!("expected {DIAGNOSTICS_LEN} diagnostics, found {}", d.len())));
    }
    let guard = match d[12] {
        f if f == 0.0 => None,
        f if f == 1.0 => Some(d[13]),
        f => return Err(PersistenceError::Parse(format!("bad guard flag {f}"))),
    };
    let diagnostics = Diagnostics {
        energy_lhs: d[0],
        energy_rhs: d[1],
        energy_residual: d[2],
        h1_norm: d[3],
        pressure_l2: d[4],
        boundary_tangential_l2: d[5],
        divergence_l2: d[6],
        linear_residual: d[7],
        weak_divergence: d[8],
        pressure_mean: d[9],
        boundary_beta_moment: d[10],
        normal_defect: d[11],
        guard_multiplier: guard,
    };
    let pressure = sections.pop().expect("three sections");
    let velocity = sections.pop().expect("three sections");
    Ok(Solution { velocity, pressure, diagnostics })
}

pub fn save_solution(path: &Path, sol: &Solution) -> Result<()> {
    write_atomic(path, &encode_solution(sol))
}

pub fn load_solution(path: &Path) -> Result<Solution> {
    decode_solution(&fs::read(path)?)
}
