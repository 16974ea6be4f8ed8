//! `nslab` command line. Exit codes: 0 success, 1 solver or I/O failure, 2
//! configuration error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use navier_slip::mesh::mesh_io_write;
use navier_slip::navierstokes::picard;
use navier_slip::spectra::{infsup_constant, korn_quotient_min, SpectralOptions};
use navier_slip::stokes::Discretization;

use crate::config::{parse_levels, parse_schedule, ExperimentConfig, ExperimentKind};
use crate::error::{LabError, Result};
use crate::experiments::{self, alpha_for, mesh_for, problem_data, SPECTRA_COLUMNS};
use crate::persistence::{self, encode_solution, run_id, Artifact, Registry};
use crate::report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "nslab", version, about = "Experiments for Stokes and Navier-Stokes flow with Navier slip")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the finest configured mesh as text.
    Mesh(Common),
    /// Solve one Stokes problem and store the solution dump.
    SolveStokes(Common),
    /// Solve one Navier-Stokes problem by Picard iteration.
    SolveNs(Common),
    /// Run an experiment and store its report.
    Experiment {
        kind: ExperimentKind,
        #[command(flatten)]
        common: Common,
    },
    /// Inf-sup and Korn constants on the finest configured mesh.
    Spectra(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated refinement levels.
    #[arg(long)]
    levels: Option<String>,
    /// Friction schedule, e.g. `0,1e-2,1` or `pow2(-2..-12)`.
    #[arg(long, allow_hyphen_values = true)]
    alpha_schedule: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self, kind: Option<ExperimentKind>, fallback: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) if kind.is_some() => ExperimentConfig::from_file(path, kind)?,
            Some(path) => ExperimentConfig::from_file_or(path, fallback)?,
            None => ExperimentConfig::defaults(kind.unwrap_or(fallback)),
        };
        if let Some(l) = &self.levels {
            cfg.domain.levels = parse_levels(l).map_err(LabError::Config)?;
        }
        if let Some(s) = &self.alpha_schedule {
            cfg.alpha.schedule = parse_schedule(s).map_err(LabError::Config)?;
        }
        if let Some(s) = self.seed {
            cfg.solver.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.solver.threads = t;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    // single solves default to the square at n = 16 with the swirl load
    let single = ExperimentKind::UniformBound;
    match cmd {
        Command::Mesh(c) => {
            let cfg = c.load(None, single)?;
            let mesh = experiments::mesh_for(&cfg, *cfg.domain.levels.last().expect("validated"))?;
            let path = cfg.output_dir.join("mesh.txt");
            std::fs::create_dir_all(&cfg.output_dir).map_err(persistence::PersistenceError::from)?;
            mesh_io_write(&path, &mesh)?;
            println!(
                "{}: {} vertices, {} triangles, h = {:.4e}",
                path.display(),
                mesh.vertices.len(),
                mesh.triangles.len(),
                mesh.mesh_size()
            );
            Ok(())
        }
        Command::SolveStokes(c) => solve(c.load(None, single)?, false),
        Command::SolveNs(c) => solve(c.load(None, single)?, true),
        Command::Experiment { kind, common } => {
            let cfg = common.load(Some(kind), kind)?;
            let report = experiments::run(&cfg)?;
            let entry = persistence::store_run(&cfg.output_dir, &report, Vec::new())?;
            print_report(&report);
            for a in &entry.artifacts {
                println!("wrote {}", cfg.output_dir.join(a).display());
            }
            Ok(())
        }
        Command::Spectra(c) => {
            let cfg = c.load(None, ExperimentKind::SpectraSuite)?;
            let level = *cfg.domain.levels.last().expect("validated");
            let mesh = mesh_for(&cfg, level)?;
            let opts = SpectralOptions {
                method: cfg.eigen_method()?,
                dense_limit: cfg.solver.dense_limit,
                seed: cfg.solver.seed,
                export_eigenvector: false,
            };
            let alpha = alpha_for(&cfg, cfg.alpha.value);
            let shape = format!("{:?}", cfg.domain.shape).to_lowercase();
            let mut report =
                RunReport::new(ExperimentKind::SpectraSuite, &SPECTRA_COLUMNS, spectra_text(&cfg), cfg.solver.threads);
            let results = navier_slip::par::with_threads(cfg.solver.threads, || -> Result<_> {
                Ok([
                    ("infsup", false, infsup_constant(&mesh, &alpha, &opts)?),
                    ("korn", false, korn_quotient_min(&mesh, &alpha, false, &opts)?),
                    ("korn", true, korn_quotient_min(&mesh, &alpha, true, &opts)?),
                ])
            })?;
            for (q, boundary, s) in results {
                println!("{q:<8} boundary_term={boundary:<5} constant={:.10e} unknowns={}", s.constant, s.unknowns);
                report.push_row(
                    vec![
                        q.into(),
                        shape.as_str().into(),
                        level.into(),
                        cfg.alpha.value.into(),
                        boundary.into(),
                        s.constant.into(),
                        s.raw_eigenvalue.into(),
                        format!("{:?}", s.method).to_lowercase().as_str().into(),
                        s.unknowns.into(),
                        s.mesh_size.into(),
                    ],
                    0.0,
                );
            }
            let entry = persistence::store_run(&cfg.output_dir, &report, Vec::new())?;
            println!("run {}", entry.run_id);
            Ok(())
        }
    }
}

fn spectra_text(cfg: &ExperimentConfig) -> String {
    format!("command = spectra\n{}", cfg.to_text())
}

fn solve(cfg: ExperimentConfig, navier_stokes: bool) -> Result<()> {
    let command = if navier_stokes { "solve-ns" } else { "solve-stokes" };
    let level = *cfg.domain.levels.last().expect("validated");
    let mesh = mesh_for(&cfg, level)?;
    let data = problem_data(&cfg, cfg.alpha.value);
    let (sol, iterations) = navier_slip::par::with_threads(cfg.solver.threads, || -> Result<_> {
        let disc = Discretization::new(&mesh);
        Ok(if navier_stokes {
            let (s, log) = picard(&disc, &data, &cfg.picard_options()?)?;
            (s, Some(log))
        } else {
            (disc.solve(&data)?, None)
        })
    })?;
    let d = &sol.diagnostics;
    println!(
        "{command}: |u|_H1 = {:.10e}, |pi|_L2 = {:.10e}, energy residual = {:.3e}",
        d.h1_norm, d.pressure_l2, d.energy_residual
    );
    let diag = serde_json::json!({
        "h1_norm": d.h1_norm,
        "pressure_l2": d.pressure_l2,
        "energy_lhs": d.energy_lhs,
        "energy_rhs": d.energy_rhs,
        "energy_residual": d.energy_residual,
        "boundary_tangential_l2": d.boundary_tangential_l2,
        "boundary_beta_moment": d.boundary_beta_moment,
        "linear_residual": d.linear_residual,
    });
    let mut artifacts = vec![
        Artifact::new("solution.nsls", encode_solution(&sol)),
        Artifact::new("mesh.txt", mesh.to_text()),
        Artifact::new("diagnostics.json", serde_json::to_string_pretty(&diag).expect("json")),
    ];
    if let Some(log) = iterations {
        println!("picard: {} iterations", log.records.len());
        artifacts.push(Artifact::new("iterations.csv", log.to_csv()));
    }
    let text = format!("command = {command}\n{}", cfg.to_text());
    let entry = Registry::open(&cfg.output_dir)?.store(&run_id(&text), command, &artifacts)?;
    for a in &entry.artifacts {
        println!("wrote {}", cfg.output_dir.join(a).display());
    }
    Ok(())
}

fn print_report(r: &RunReport) {
    println!("experiment {} ({} rows)", r.experiment, r.rows.len());
    for f in &r.fits {
        println!("  fit {:<32} slope {:>+.4} residual {:.2e} ({} points)", f.name, f.slope, f.residual, f.rows.len());
    }
    for (k, v) in &r.summary {
        println!("  {k:<36} {v:.6e}");
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
}

impl clap::ValueEnum for ExperimentKind {
    fn value_variants<'a>() -> &'a [Self] {
        &ExperimentKind::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}
