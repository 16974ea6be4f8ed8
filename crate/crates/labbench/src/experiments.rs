//! Experiment drivers. Independent schedule points run through the core
//! crate's data-parallel map; rows are assembled in schedule order.

use std::time::Instant;

use navier_slip::fem::{self, FeSystem};
use navier_slip::fields::{beta, Alpha};
use navier_slip::forms::ProblemData;
use navier_slip::manufactured::Manufactured;
use navier_slip::mesh::{make_disk, make_unit_square, TriMesh};
use navier_slip::navierstokes::{
    picard, picard_dirichlet, smallness_indicator, InitialGuess, IterationLog, PicardOptions, SmallnessOptions,
};
use navier_slip::spectra::{beta_inequality_checks, infsup_constant, korn_quotient_min, EigenMethod, SpectralOptions};
use navier_slip::stokes::{check_compatibility, check_compatibility_exact_disk, Diagnostics, Discretization, Solution};
use navier_slip::{par, Error, Point};

use crate::config::{AlphaField, ExperimentConfig, ExperimentKind, LoadKind, Shape};
use crate::error::{LabError, Result};
use crate::report::{Cell, RunReport};

/// Compatibility gate for the disk study, relative to the data scale.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    par::with_threads(cfg.solver.threads, || match cfg.experiment {
        ExperimentKind::Mms => run_mms(cfg),
        ExperimentKind::NsMms => run_ns_mms(cfg),
        ExperimentKind::AlphaToZero => run_alpha_to_zero(cfg),
        ExperimentKind::AlphaToInfinity => run_alpha_to_infinity(cfg),
        ExperimentKind::UniformBound => run_uniform_bound(cfg),
        ExperimentKind::CompatDisk => run_compat_disk(cfg),
        ExperimentKind::SpectraSuite => run_spectra_suite(cfg),
        ExperimentKind::NsLimits => run_ns_limits(cfg),
    })
}

pub fn mesh_for(cfg: &ExperimentConfig, level: u32) -> Result<TriMesh> {
    Ok(match cfg.domain.shape {
        Shape::Square => make_unit_square(level as usize)?,
        Shape::Disk => make_disk(level, cfg.domain.radius)?,
    })
}

fn finest_mesh(cfg: &ExperimentConfig) -> Result<TriMesh> {
    mesh_for(cfg, *cfg.domain.levels.last().expect("validated levels"))
}

pub fn alpha_for(cfg: &ExperimentConfig, value: f64) -> Alpha {
    match cfg.alpha.field {
        AlphaField::Constant => Alpha::Constant(value),
        AlphaField::Smooth => Alpha::Field(std::sync::Arc::new(move |x: Point, _| {
            value * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * x[0]).cos() * (2.0 * std::f64::consts::PI * x[1]).cos())
        })),
    }
}

/// Named load with friction `value`; manufactured loads depend on the experiment.
pub fn problem_data(cfg: &ExperimentConfig, value: f64) -> ProblemData {
    let center = match cfg.domain.shape {
        Shape::Square => [0.5, 0.5],
        Shape::Disk => [0.0, 0.0],
    };
    let r2 = cfg.domain.radius * cfg.domain.radius;
    let data = match cfg.data.load {
        LoadKind::Manufactured => {
            let m = if matches!(cfg.experiment, ExperimentKind::NsMms) {
                Manufactured::navier_stokes(value)
            } else {
                Manufactured::stokes(value)
            };
            m.problem_data()
        }
        LoadKind::Swirl => ProblemData::new(0.0).with_force(move |x| beta([x[0] - center[0], x[1] - center[1]])),
        LoadKind::CompatibleDisk => ProblemData::new(0.0).with_force(move |x| {
            let s = x[0] * x[0] + x[1] * x[1] - 2.0 * r2 / 3.0;
            let b = beta(x);
            [s * b[0], s * b[1]]
        }),
        LoadKind::Zero => ProblemData::new(0.0),
    };
    data.scaled(cfg.data.scale)
        .with_alpha(alpha_for(cfg, value))
        .with_compatibility_mode(cfg.solver.compatibility_mode)
}

fn relative_energy_residual(d: &Diagnostics) -> f64 {
    d.energy_residual / d.energy_lhs.max(1.0)
}

fn h1_distance(fe: &FeSystem, a: &[f64], b: &[f64]) -> Result<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(fem::norms(fe, &d)?.h1())
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

fn unknowns(fe: &FeSystem) -> usize {
    fe.num_velocity_dofs() + fe.num_pressure_dofs()
}

fn report(cfg: &ExperimentConfig, columns: &[&str]) -> RunReport {
    RunReport::new(cfg.experiment, columns, cfg.to_text(), cfg.solver.threads)
}

fn manufactured_errors(fe: &FeSystem, sol: &Solution, scale: f64) -> Result<(f64, f64, f64)> {
    let (l2, semi) = fem::velocity_error(fe, &sol.velocity, |x| {
        let (v, g) = (Manufactured::velocity(x), Manufactured::gradient(x));
        ([scale * v[0], scale * v[1]], [[scale * g[0][0], scale * g[0][1]], [scale * g[1][0], scale * g[1][1]]])
    })?;
    let pe = fem::pressure_error(fe, &sol.pressure, |x| scale * Manufactured::pressure(x))?;
    Ok((l2.hypot(semi), l2, pe))
}

const MMS_COLUMNS: [&str; 9] = [
    "level",
    "h",
    "unknowns",
    "velocity_h1_error",
    "velocity_l2_error",
    "pressure_l2_error",
    "energy_lhs",
    "energy_residual_rel",
    "linear_residual",
];

fn add_rate_fits(r: &mut RunReport) {
    let rows: Vec<usize> = (0..r.rows.len()).collect();
    r.add_fit("velocity_h1_rate", "h", "velocity_h1_error", &rows);
    r.add_fit("velocity_l2_rate", "h", "velocity_l2_error", &rows);
    r.add_fit("pressure_l2_rate", "h", "pressure_l2_error", &rows);
}

pub fn run_mms(cfg: &ExperimentConfig) -> Result<RunReport> {
    let data = problem_data(cfg, cfg.alpha.value);
    let scale = cfg.data.scale;
    let rows = par::map_slice(&cfg.domain.levels, |&level| {
        timed(|| {
            let disc = Discretization::new(&mesh_for(cfg, level)?);
            let sol = disc.solve(&data)?;
            let (h1, l2, pe) = manufactured_errors(&disc.fe, &sol, scale)?;
            let d = &sol.diagnostics;
            Ok(vec![
                Cell::from(level),
                disc.mesh().mesh_size().into(),
                unknowns(&disc.fe).into(),
                h1.into(),
                l2.into(),
                pe.into(),
                d.energy_lhs.into(),
                relative_energy_residual(d).into(),
                d.linear_residual.into(),
            ])
        })
    });
    let mut r = report(cfg, &MMS_COLUMNS);
    for row in rows {
        let (row, t) = row?;
        r.push_row(row, t);
    }
    add_rate_fits(&mut r);
    Ok(r)
}

pub fn run_ns_mms(cfg: &ExperimentConfig) -> Result<RunReport> {
    let data = problem_data(cfg, cfg.alpha.value);
    let opts = cfg.picard_options()?;
    let rows = par::map_slice(&cfg.domain.levels, |&level| {
        timed(|| {
            let disc = Discretization::new(&mesh_for(cfg, level)?);
            let (sol, log) = picard(&disc, &data, &opts)?;
            let (h1, l2, pe) = manufactured_errors(&disc.fe, &sol, 1.0)?;
            let d = &sol.diagnostics;
            Ok(vec![
                Cell::from(level),
                disc.mesh().mesh_size().into(),
                unknowns(&disc.fe).into(),
                h1.into(),
                l2.into(),
                pe.into(),
                d.energy_lhs.into(),
                relative_energy_residual(d).into(),
                d.linear_residual.into(),
                log.records.len().into(),
                log.nonlinear_residual.into(),
                max_skew(&log).into(),
            ])
        })
    });
    let mut columns = MMS_COLUMNS.to_vec();
    columns.extend(["iterations", "nonlinear_residual", "skew_defect"]);
    let mut r = report(cfg, &columns);
    for row in rows {
        let (row, t) = row?;
        r.push_row(row, t);
    }
    add_rate_fits(&mut r);

    // uniqueness check on the coarsest level
    let disc = Discretization::new(&mesh_for(cfg, cfg.domain.levels[0])?);
    let s = smallness_indicator(
        disc.mesh(),
        &data,
        &SmallnessOptions { samples: cfg.solver.samples, seed: cfg.solver.seed },
    )?;
    let (zero, _) = picard(&disc, &data, &PicardOptions { initial: InitialGuess::Zero, ..opts })?;
    let (stokes, _) = picard(&disc, &data, &PicardOptions { initial: InitialGuess::Stokes, ..opts })?;
    r.add_summary("smallness_indicator", s.indicator);
    r.add_summary("trilinear_constant", s.trilinear_constant);
    r.add_summary("coercivity_constant", s.coercivity_constant);
    r.add_summary("initial_guess_gap_h1", h1_distance(&disc.fe, &zero.velocity, &stokes.velocity)?);
    if s.uniqueness_regime() {
        r.notes.push("uniqueness regime (discrete estimate) on the coarsest level".into());
    }
    Ok(r)
}

fn max_skew(log: &IterationLog) -> f64 {
    log.records.iter().map(|x| x.skew_defect).fold(0.0, f64::max)
}

/// Schedule with duplicates of `skip` removed, in configured order.
fn schedule_without(cfg: &ExperimentConfig, skip: f64) -> Vec<f64> {
    cfg.alpha.schedule.iter().copied().filter(|&a| a != skip).collect()
}

fn note_monotone(r: &mut RunReport, column: &str, rows: &[usize]) {
    let v = r.column(column).expect("column exists");
    if let Some(w) = rows.windows(2).find(|w| v[w[1]] >= v[w[0]]) {
        r.notes.push(format!(
            "{column} is not monotone between rows {} and {} ({:.3e} -> {:.3e}); roundoff floor likely",
            w[0], w[1], v[w[0]], v[w[1]]
        ));
    }
}

pub fn run_alpha_to_zero(cfg: &ExperimentConfig) -> Result<RunReport> {
    let disc = Discretization::new(&finest_mesh(cfg)?);
    let (reference, t0) = timed(|| Ok(disc.solve(&problem_data(cfg, 0.0))?))?;
    let alphas = schedule_without(cfg, 0.0);
    let solved = par::map_slice(&alphas, |&a| timed(|| Ok(disc.solve(&problem_data(cfg, a))?)));
    let mut r = report(
        cfg,
        &["alpha", "velocity_h1_diff", "velocity_h1", "pressure_l2", "energy_residual_rel", "linear_residual"],
    );
    let push = |r: &mut RunReport, a: f64, s: &Solution, t: f64| -> Result<()> {
        let d = &s.diagnostics;
        let diff = h1_distance(&disc.fe, &s.velocity, &reference.velocity)?;
        r.push_row(
            vec![
                a.into(),
                diff.into(),
                d.h1_norm.into(),
                d.pressure_l2.into(),
                relative_energy_residual(d).into(),
                d.linear_residual.into(),
            ],
            t,
        );
        Ok(())
    };
    push(&mut r, 0.0, &reference, t0)?;
    for (&a, s) in alphas.iter().zip(solved) {
        let (s, t) = s?;
        push(&mut r, a, &s, t)?;
    }
    let rows: Vec<usize> = (1..r.rows.len()).collect();
    r.add_fit("h1_diff_vs_alpha", "alpha", "velocity_h1_diff", &rows);
    note_monotone(&mut r, "velocity_h1_diff", &rows);
    Ok(r)
}

pub fn run_alpha_to_infinity(cfg: &ExperimentConfig) -> Result<RunReport> {
    let disc = Discretization::new(&finest_mesh(cfg)?);
    let (dirichlet, t0) = timed(|| Ok(disc.solve_dirichlet(&problem_data(cfg, 0.0))?))?;
    let ref_norm = dirichlet.diagnostics.h1_norm;
    let alphas = cfg.alpha.schedule.clone();
    let solved = par::map_slice(&alphas, |&a| timed(|| Ok(disc.solve(&problem_data(cfg, a))?)));
    let mut r = report(
        cfg,
        &[
            "alpha",
            "velocity_h1_diff",
            "velocity_h1_diff_rel",
            "boundary_tangential_l2",
            "velocity_h1",
            "energy_residual_rel",
            "linear_residual",
        ],
    );
    let row = |a: f64, s: &Solution| -> Result<Vec<Cell>> {
        let d = &s.diagnostics;
        let diff = h1_distance(&disc.fe, &s.velocity, &dirichlet.velocity)?;
        Ok(vec![
            a.into(),
            diff.into(),
            (if ref_norm > 0.0 { diff / ref_norm } else { diff }).into(),
            d.boundary_tangential_l2.into(),
            d.h1_norm.into(),
            relative_energy_residual(d).into(),
            d.linear_residual.into(),
        ])
    };
    r.push_row(row(f64::INFINITY, &dirichlet)?, t0);
    for (&a, s) in alphas.iter().zip(solved) {
        let (s, t) = s?;
        r.push_row(row(a, &s)?, t);
    }
    let rows: Vec<usize> = (1..r.rows.len()).collect();
    r.add_fit("boundary_tangential_vs_alpha", "alpha", "boundary_tangential_l2", &rows);
    r.add_fit("h1_diff_vs_alpha", "alpha", "velocity_h1_diff", &rows);
    note_monotone(&mut r, "velocity_h1_diff", &rows);
    r.add_summary("dirichlet_h1", ref_norm);
    let rel = r.column("velocity_h1_diff_rel").expect("column exists");
    let (imax, _) = alphas.iter().enumerate().fold((0, f64::MIN), |m, (i, &a)| if a > m.1 { (i, a) } else { m });
    r.add_summary("largest_alpha", alphas[imax]);
    r.add_summary("largest_alpha_relative_diff", rel[imax + 1]);
    Ok(r)
}

pub fn run_uniform_bound(cfg: &ExperimentConfig) -> Result<RunReport> {
    let disc = Discretization::new(&finest_mesh(cfg)?);
    let solved = par::map_slice(&cfg.alpha.schedule, |&a| timed(|| Ok(disc.solve(&problem_data(cfg, a))?)));
    let mut r = report(
        cfg,
        &["alpha", "velocity_h1", "pressure_l2", "total", "energy_residual_rel", "linear_residual"],
    );
    for (&a, s) in cfg.alpha.schedule.iter().zip(solved) {
        let (s, t) = s?;
        let d = &s.diagnostics;
        r.push_row(
            vec![
                a.into(),
                d.h1_norm.into(),
                d.pressure_l2.into(),
                (d.h1_norm + d.pressure_l2).into(),
                relative_energy_residual(d).into(),
                d.linear_residual.into(),
            ],
            t,
        );
    }
    let total = r.column("total").expect("column exists");
    let max = total.iter().copied().fold(f64::MIN, f64::max);
    let min = total.iter().copied().fold(f64::MAX, f64::min);
    r.add_summary("max_total", max);
    r.add_summary("min_total", min);
    r.add_summary("ratio", if min > 0.0 { max / min } else { f64::NAN });
    Ok(r)
}

pub fn run_compat_disk(cfg: &ExperimentConfig) -> Result<RunReport> {
    let data = problem_data(cfg, cfg.alpha.value);
    let defect = check_compatibility_exact_disk(&data, cfg.domain.radius)?;
    let tolerance = COMPATIBILITY_TOL * cfg.data.scale.abs().max(1.0);
    if defect.abs() > tolerance {
        return Err(LabError::IncompatibleData { defect, tolerance });
    }
    let rows = par::map_slice(&cfg.domain.levels, |&level| {
        timed(|| {
            let mesh = mesh_for(cfg, level)?;
            let mesh_defect = check_compatibility(&data, &mesh)?;
            let disc = Discretization::new(&mesh);
            let s = disc.solve(&data)?;
            let d = &s.diagnostics;
            Ok(vec![
                Cell::from(level),
                mesh.mesh_size().into(),
                unknowns(&disc.fe).into(),
                d.boundary_beta_moment.abs().into(),
                d.h1_norm.into(),
                mesh_defect.into(),
                relative_energy_residual(d).into(),
                d.linear_residual.into(),
            ])
        })
    });
    let mut r = report(
        cfg,
        &[
            "level",
            "h",
            "unknowns",
            "boundary_beta_moment",
            "velocity_h1",
            "mesh_compatibility_defect",
            "energy_residual_rel",
            "linear_residual",
        ],
    );
    for row in rows {
        let (row, t) = row?;
        r.push_row(row, t);
    }
    r.add_summary("exact_disk_compatibility_defect", defect);
    let moments = r.column("boundary_beta_moment").expect("column exists");
    if moments.iter().all(|m| *m == 0.0) {
        r.notes.push("boundary moment vanishes on every level".into());
    } else {
        let rows: Vec<usize> = (0..r.rows.len()).collect();
        r.add_fit("boundary_moment_vs_h", "h", "boundary_beta_moment", &rows);
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug)]
enum SpectralCase {
    InfSup { level: u32, alpha: f64, method: Option<EigenMethod>, tag: &'static str },
    Korn { shape: Shape, level: u32, alpha: f64, boundary: bool },
    Beta { level: u32 },
}

pub const SPECTRA_COLUMNS: [&str; 10] =
    ["quantity", "domain", "level", "alpha", "boundary_term", "constant", "raw_eigenvalue", "method", "unknowns", "h"];

pub fn run_spectra_suite(cfg: &ExperimentConfig) -> Result<RunReport> {
    let base = SpectralOptions {
        method: cfg.eigen_method()?,
        dense_limit: cfg.solver.dense_limit,
        seed: cfg.solver.seed,
        export_eigenvector: false,
    };
    let squares = &cfg.domain.levels;
    let disks = &cfg.domain.disk_levels;
    let mut cases = Vec::new();
    for &level in squares {
        cases.push(SpectralCase::InfSup { level, alpha: cfg.alpha.value, method: None, tag: "infsup" });
    }
    for &alpha in &cfg.alpha.schedule {
        cases.push(SpectralCase::InfSup { level: squares[0], alpha, method: None, tag: "infsup_alpha_sweep" });
    }
    cases.push(SpectralCase::InfSup {
        level: squares[0],
        alpha: cfg.alpha.value,
        method: Some(EigenMethod::Dense),
        tag: "infsup_dense",
    });
    cases.push(SpectralCase::InfSup {
        level: squares[0],
        alpha: cfg.alpha.value,
        method: Some(EigenMethod::ShiftInvert),
        tag: "infsup_iterative",
    });
    for &level in squares {
        cases.push(SpectralCase::Korn { shape: Shape::Square, level, alpha: 0.0, boundary: false });
    }
    for &level in disks {
        cases.push(SpectralCase::Korn { shape: Shape::Disk, level, alpha: 0.0, boundary: false });
    }
    for &level in disks {
        cases.push(SpectralCase::Korn { shape: Shape::Disk, level, alpha: cfg.alpha.value, boundary: true });
    }
    cases.push(SpectralCase::Beta { level: disks[0] });

    let radius = cfg.domain.radius;
    let results = par::map_slice(&cases, |case| -> Result<(Vec<Vec<Cell>>, f64)> {
        timed(|| {
            let method_name = |m: EigenMethod| match m {
                EigenMethod::Auto => "auto",
                EigenMethod::Dense => "dense",
                EigenMethod::ShiftInvert => "shift_invert",
            };
            let row = |q: &str, dom: &str, level: u32, alpha: f64, boundary: bool, s: &navier_slip::spectra::SpectralReport| {
                vec![
                    Cell::from(q),
                    Cell::from(dom),
                    Cell::from(level),
                    Cell::from(alpha),
                    Cell::from(boundary),
                    Cell::from(s.constant),
                    Cell::from(s.raw_eigenvalue),
                    Cell::from(method_name(s.method)),
                    Cell::from(s.unknowns),
                    Cell::from(s.mesh_size),
                ]
            };
            Ok(match *case {
                SpectralCase::InfSup { level, alpha, method, tag } => {
                    let opts = SpectralOptions { method: method.unwrap_or(base.method), ..base };
                    let s = infsup_constant(&make_unit_square(level as usize)?, &Alpha::Constant(alpha), &opts)?;
                    vec![row(tag, "square", level, alpha, false, &s)]
                }
                SpectralCase::Korn { shape, level, alpha, boundary } => {
                    let (mesh, dom) = match shape {
                        Shape::Square => (make_unit_square(level as usize)?, "square"),
                        Shape::Disk => (make_disk(level, radius)?, "disk"),
                    };
                    let s = korn_quotient_min(&mesh, &Alpha::Constant(alpha), boundary, &base)?;
                    vec![row("korn", dom, level, alpha, boundary, &s)]
                }
                SpectralCase::Beta { level } => {
                    let b = beta_inequality_checks(&make_disk(level, radius)?, &base)?;
                    vec![
                        row("beta_volume", "disk", level, 0.0, false, &b.volume),
                        row("beta_boundary", "disk", level, 0.0, true, &b.boundary),
                    ]
                }
            })
        })
    });
    let mut r = report(cfg, &SPECTRA_COLUMNS);
    for res in results {
        let (rows, t) = res?;
        let share = t / rows.len() as f64;
        for row in rows {
            r.push_row(row, share);
        }
    }
    summarize_spectra(&mut r);
    Ok(r)
}

fn summarize_spectra(r: &mut RunReport) {
    let q = r.text_column("quantity").expect("column exists");
    let dom = r.text_column("domain").expect("column exists");
    let bt = r.column("boundary_term").expect("column exists");
    let c = r.column("constant").expect("column exists");
    let raw = r.column("raw_eigenvalue").expect("column exists");
    let pick = |pred: &dyn Fn(usize) -> bool, v: &[f64]| -> Vec<f64> { (0..v.len()).filter(|&i| pred(i)).map(|i| v[i]).collect() };
    let spread = |v: &[f64]| v.iter().copied().fold(f64::MIN, f64::max) - v.iter().copied().fold(f64::MAX, f64::min);
    let min = |v: &[f64]| v.iter().copied().fold(f64::MAX, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::MIN, f64::max);

    let infsup = pick(&|i| q[i] == "infsup", &c);
    r.add_summary("infsup_min", min(&infsup));
    r.add_summary("infsup_max", max(&infsup));
    r.add_summary("infsup_variation", spread(&infsup) / max(&infsup));
    r.add_summary("infsup_alpha_spread", spread(&pick(&|i| q[i] == "infsup_alpha_sweep", &c)));
    let dense = pick(&|i| q[i] == "infsup_dense", &c);
    let iterative = pick(&|i| q[i] == "infsup_iterative", &c);
    r.add_summary("infsup_dense_gap", (dense[0] - iterative[0]).abs());
    r.add_summary("korn_square_min", min(&pick(&|i| q[i] == "korn" && dom[i] == "square", &c)));
    let disk_zero = pick(&|i| q[i] == "korn" && dom[i] == "disk" && bt[i] == 0.0, &raw);
    let ratios: Vec<f64> = disk_zero.windows(2).map(|w| w[0] / w[1]).collect();
    r.add_summary("korn_disk_zero_min_decrease", if ratios.is_empty() { f64::NAN } else { min(&ratios) });
    r.add_summary("korn_disk_zero_max", max(&disk_zero));
    r.add_summary("korn_disk_friction_min", min(&pick(&|i| q[i] == "korn" && dom[i] == "disk" && bt[i] == 1.0, &c)));
    for name in ["beta_volume", "beta_boundary"] {
        if let Some(v) = pick(&|i| q[i] == name, &c).first() {
            r.add_summary(name, *v);
        }
    }
}

pub fn run_ns_limits(cfg: &ExperimentConfig) -> Result<RunReport> {
    let disc = Discretization::new(&finest_mesh(cfg)?);
    let opts = cfg.picard_options()?;
    let (zero, _) = picard(&disc, &problem_data(cfg, 0.0), &opts)?;
    let (dirichlet, _) = picard_dirichlet(&disc, &problem_data(cfg, 0.0), &opts)?;
    let alphas = schedule_without(cfg, 0.0);
    let solved = par::map_slice(&alphas, |&a| {
        let t = Instant::now();
        let res = picard(&disc, &problem_data(cfg, a), &opts);
        (res, t.elapsed().as_secs_f64())
    });
    let mut r = report(
        cfg,
        &[
            "alpha",
            "converged",
            "iterations",
            "velocity_h1_diff_zero",
            "velocity_h1_diff_dirichlet",
            "boundary_tangential_l2",
            "energy_residual_rel",
            "nonlinear_residual",
        ],
    );
    let mut achieved = Vec::new();
    for (&a, (res, t)) in alphas.iter().zip(solved) {
        match res {
            Ok((s, log)) => {
                let d = &s.diagnostics;
                achieved.push(a);
                r.push_row(
                    vec![
                        a.into(),
                        true.into(),
                        log.records.len().into(),
                        h1_distance(&disc.fe, &s.velocity, &zero.velocity)?.into(),
                        h1_distance(&disc.fe, &s.velocity, &dirichlet.velocity)?.into(),
                        d.boundary_tangential_l2.into(),
                        relative_energy_residual(d).into(),
                        log.nonlinear_residual.into(),
                    ],
                    t,
                );
            }
            Err(Error::MaxIterations { iterations, .. }) => {
                let nan = Cell::Num(f64::NAN);
                r.push_row(
                    vec![a.into(), false.into(), iterations.into(), nan.clone(), nan.clone(), nan.clone(), nan.clone(), nan],
                    t,
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut small: Vec<usize> = (0..alphas.len()).filter(|&i| alphas[i] <= 1.0).collect();
    small.sort_by(|&i, &j| alphas[j].total_cmp(&alphas[i]));
    let mut large: Vec<usize> = (0..alphas.len()).filter(|&i| alphas[i] >= 1.0).collect();
    large.sort_by(|&i, &j| alphas[i].total_cmp(&alphas[j]));
    r.add_fit("zero_limit", "alpha", "velocity_h1_diff_zero", &small);
    r.add_fit("infinity_boundary_tangential", "alpha", "boundary_tangential_l2", &large);
    r.add_fit("infinity_limit", "alpha", "velocity_h1_diff_dirichlet", &large);
    if achieved.len() < alphas.len() {
        r.notes.push(format!("Picard failed for {} of {} friction values", alphas.len() - achieved.len(), alphas.len()));
    }
    r.add_summary("achieved_alpha_min", achieved.iter().copied().fold(f64::NAN, f64::min));
    r.add_summary("achieved_alpha_max", achieved.iter().copied().fold(f64::NAN, f64::max));
    Ok(r)
}
