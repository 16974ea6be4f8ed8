//! Stationary Navier–Stokes by damped Picard (Oseen) iteration with the
//! skew-symmetric convection form, plus the smallness indicator and checks
//! of the trilinear identities.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{build_constraint_plan, BoundaryPolicy, ConstraintPlan};
use crate::fem::{norms, FeSystem};
use crate::fields::beta;
use crate::forms::{assemble_convection_skew, assemble_load, ProblemData};
use crate::mesh::TriMesh;
use crate::quadrature::quadrature;
use crate::spectra::{korn_quotient_min, SpectralOptions};
use crate::stokes::{Discretization, Solution, KERNEL_GUIDANCE};
use crate::{par, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialGuess {
    Zero,
    Stokes,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    pub max_iterations: usize,
    /// Relative H¹ velocity increment at convergence.
    pub tolerance: f64,
    /// `u_{k+1} = θ ũ + (1 − θ) u_k`.
    pub damping: f64,
    pub initial: InitialGuess,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { max_iterations: 50, tolerance: 1e-10, damping: 1.0, initial: InitialGuess::Zero }
    }
}

impl PicardOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid(format!("Picard tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖u_k − u_{k−1}‖_{H¹} / ‖u_k‖_{H¹}`
    pub increment: f64,
    /// `|uᵀ(A + M_α)u − ℓᵀu| / max(uᵀ(A + M_α)u, 1)`
    pub energy_residual: f64,
    /// `|uᵀC(w)u|` relative to `|u|ᵀ|C(w)||u|`
    pub skew_defect: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Relative residual of the nonlinear discrete weak form at the last iterate.
    pub nonlinear_residual: f64,
}

impl IterationLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,increment,energy_residual,skew_defect\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{:.17e},{:.17e},{:.17e}", r.iteration, r.increment, r.energy_residual, r.skew_defect);
        }
        s
    }

    /// Ratios of consecutive increments over the last `k` records.
    pub fn contraction_ratios(&self, k: usize) -> Vec<f64> {
        let n = self.records.len();
        let start = n.saturating_sub(k + 1);
        self.records[start..].windows(2).map(|w| w[1].increment / w[0].increment).collect()
    }
}

fn relative_skew(c: &crate::sparse::CsrMatrix, u: &[f64]) -> f64 {
    let mut abs = 0.0;
    for i in 0..c.nrows {
        abs += u[i].abs() * c.row(i).map(|(j, v)| v.abs() * u[j].abs()).sum::<f64>();
    }
    if abs == 0.0 {
        0.0
    } else {
        c.bilinear(u, u).abs() / abs
    }
}

pub fn solve_ns_picard(mesh: &TriMesh, data: &ProblemData, opts: &PicardOptions) -> Result<(Solution, IterationLog)> {
    picard(&Discretization::new(mesh), data, opts)
}

/// Picard iteration on a prepared discretization.
pub fn picard(disc: &Discretization, data: &ProblemData, opts: &PicardOptions) -> Result<(Solution, IterationLog)> {
    let plan = build_constraint_plan(&disc.fe, data)?;
    if plan.kernel_guard.is_some() && !data.compatibility_mode {
        return Err(Error::SingularSystem(KERNEL_GUIDANCE.into()));
    }
    picard_with_plan(disc, data, &plan, opts)
}

/// Dirichlet reference `u = 0` on Γ, same iteration with full clamping.
pub fn picard_dirichlet(disc: &Discretization, data: &ProblemData, opts: &PicardOptions) -> Result<(Solution, IterationLog)> {
    picard_with_plan(disc, data, &ConstraintPlan::new(&disc.fe, BoundaryPolicy::Clamped), opts)
}

pub fn picard_with_plan(
    disc: &Discretization,
    data: &ProblemData,
    plan: &ConstraintPlan,
    opts: &PicardOptions,
) -> Result<(Solution, IterationLog)> {
    opts.validate()?;
    let fe = &disc.fe;
    let energy_op = disc.energy_operator(data)?;
    let load = assemble_load(fe, data)?;
    let mut current = match opts.initial {
        InitialGuess::Zero => Solution {
            velocity: vec![0.0; fe.num_velocity_dofs()],
            pressure: vec![0.0; fe.num_pressure_dofs()],
            diagnostics: Default::default(),
        },
        InitialGuess::Stokes => disc.solve_linear(plan, &energy_op, &energy_op, &load)?,
    };
    let mut log = IterationLog::default();
    let theta = opts.damping;
    for k in 1..=opts.max_iterations {
        let c = assemble_convection_skew(fe, &current.velocity)?;
        let op = energy_op.add_scaled(1.0, &c, 1.0);
        let mut next = disc.solve_linear(plan, &op, &energy_op, &load)?;
        if theta < 1.0 {
            for (n, o) in next.velocity.iter_mut().zip(&current.velocity) {
                *n = theta * *n + (1.0 - theta) * o;
            }
            for (n, o) in next.pressure.iter_mut().zip(&current.pressure) {
                *n = theta * *n + (1.0 - theta) * o;
            }
            let lhs = energy_op.bilinear(&next.velocity, &next.velocity);
            let rhs = crate::sparse::dot(&load, &next.velocity);
            next.diagnostics.energy_lhs = lhs;
            next.diagnostics.energy_rhs = rhs;
            next.diagnostics.energy_residual = (lhs - rhs).abs();
        }
        let diff: Vec<f64> = next.velocity.iter().zip(&current.velocity).map(|(a, b)| a - b).collect();
        let dn = norms(fe, &diff)?.h1();
        let un = norms(fe, &next.velocity)?.h1();
        let increment = if dn == 0.0 { 0.0 } else { dn / un };
        if !increment.is_finite() {
            return Err(Error::numerical(format!("Picard increment became non-finite at iteration {k}")));
        }
        let d = &next.diagnostics;
        log.records.push(IterationRecord {
            iteration: k,
            increment,
            energy_residual: d.energy_residual / d.energy_lhs.max(1.0),
            skew_defect: relative_skew(&c, &next.velocity),
        });
        current = next;
        if increment <= opts.tolerance {
            log.converged = true;
            log.nonlinear_residual = nonlinear_residual(disc, plan, &energy_op, &load, &current)?;
            return Ok((current, log));
        }
    }
    Err(Error::MaxIterations {
        iterations: opts.max_iterations,
        last_increment: log.records.last().map_or(f64::NAN, |r| r.increment),
    })
}

/// `‖Tᵀ[(A + M_α + C(u))u − Bᵀπ − ℓ]‖ / ‖Tᵀℓ‖` on the constrained space.
fn nonlinear_residual(
    disc: &Discretization,
    plan: &ConstraintPlan,
    energy_op: &crate::sparse::CsrMatrix,
    load: &[f64],
    sol: &Solution,
) -> Result<f64> {
    let c = assemble_convection_skew(&disc.fe, &sol.velocity)?;
    let mut r = energy_op.add_scaled(1.0, &c, 1.0).mul_vec(&sol.velocity);
    let bt = disc.divergence.mul_vec_transpose(&sol.pressure);
    for i in 0..r.len() {
        r[i] -= bt[i] + load[i];
    }
    let mut rr = plan.restrict(&r);
    let lr = plan.restrict(load);
    let ln = crate::sparse::norm2(&lr);
    if let Some(g) = &plan.kernel_guard {
        // remove the guard direction, which carries the multiplier
        let g = plan.restrict(g);
        let s = crate::sparse::dot(&g, &rr) / crate::sparse::dot(&g, &g);
        rr.iter_mut().zip(&g).for_each(|(a, b)| *a -= s * b);
    }
    let rn = crate::sparse::norm2(&rr);
    Ok(if ln == 0.0 { rn } else { rn / ln })
}

/// `c̃(w; u, v) = ½∫_Ω [(w·∇)u·v − (w·∇)v·u]` by direct quadrature.
pub fn trilinear_form(fe: &FeSystem, w: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
    let n = fe.num_velocity_dofs();
    if w.len() != n || u.len() != n || v.len() != n {
        return Err(Error::invalid("trilinear form arguments must match the velocity space"));
    }
    let rule = quadrature(6)?;
    Ok(par::ordered_sum(fe.num_elements(), |e| {
        let area = fe.geometry[e].area;
        let mut s = 0.0;
        for (b, q) in &rule.triangle {
            let (wv, _) = fe.eval_velocity(w, e, *b);
            let (uv, gu) = fe.eval_velocity(u, e, *b);
            let (vv, gv) = fe.eval_velocity(v, e, *b);
            let mut t = 0.0;
            for i in 0..2 {
                let wu = gu[i][0] * wv[0] + gu[i][1] * wv[1];
                let wvv = gv[i][0] * wv[0] + gv[i][1] * wv[1];
                t += wu * vv[i] - wvv * uv[i];
            }
            s += 2.0 * area * q * 0.5 * t;
        }
        s
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrilinearDefects {
    pub skew_diagonal_defect: f64,
    pub antisymmetry_defect: f64,
    pub beta_defect: f64,
}

pub fn trilinear_defects(fe: &FeSystem, w: &[f64], u: &[f64], v: &[f64]) -> Result<TrilinearDefects> {
    if u.len() != fe.num_velocity_dofs() || v.len() != fe.num_velocity_dofs() {
        return Err(Error::invalid("field lengths must match the velocity space"));
    }
    let c = assemble_convection_skew(fe, w)?;
    let scale = c.max_abs();
    let antisymmetry_defect =
        if scale == 0.0 { 0.0 } else { c.add_scaled(1.0, &c.transpose(), 1.0).max_abs() / scale };
    let b = crate::fem::interpolate_velocity(fe, beta)?;
    let cb = assemble_convection_skew(fe, &b)?;
    Ok(TrilinearDefects {
        skew_diagonal_defect: relative_skew(&c, v),
        antisymmetry_defect,
        beta_defect: cb.bilinear(u, &b).abs(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallnessOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SmallnessOptions {
    fn default() -> Self {
        SmallnessOptions { samples: 200, seed: 2024 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallnessReport {
    /// `S = Ĉ_b Ĉ_coer⁻² (‖f‖_{L^{6/5}} + ‖F‖_{L²} + ‖h‖_{L²(Γ)})`
    pub indicator: f64,
    /// Sampled continuity constant of the skew trilinear form (discrete estimate).
    pub trilinear_constant: f64,
    /// Korn quotient minimum including the friction term.
    pub coercivity_constant: f64,
    pub data_norm: f64,
}

impl SmallnessReport {
    /// `S < 1`: uniqueness regime (discrete estimate).
    pub fn uniqueness_regime(&self) -> bool {
        self.indicator < 1.0
    }
}

/// `(Σ w |v/M|^p)^{1/p} · M`; exact under scaling of `v` by powers of two.
fn scaled_lp(values: &[(f64, f64)], p: f64) -> f64 {
    let m = values.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|(w, v)| w * (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// `‖f‖_{L^{6/5}} + ‖F‖_{L²} + ‖h_τ‖_{L²(Γ)}` by mesh quadrature.
pub fn data_norm(fe: &FeSystem, data: &ProblemData) -> Result<f64> {
    let rule = quadrature(6)?;
    let mut fvals = Vec::new();
    let mut svals = Vec::new();
    for e in 0..fe.num_elements() {
        let area = fe.geometry[e].area;
        for (b, w) in &rule.triangle {
            let x = fe.map_point(e, *b);
            let wa = 2.0 * area * w;
            if let Some(f) = &data.force {
                let v = f(x);
                fvals.push((wa, v[0].hypot(v[1])));
            }
            if let Some(m) = &data.stress {
                let m = m(x);
                svals.push((wa, m[0][0].hypot(m[0][1]).hypot(m[1][0].hypot(m[1][1]))));
            }
        }
    }
    let mut hvals = Vec::new();
    if let Some(h) = &data.boundary_force {
        for (k, e) in fe.mesh.boundary_edges.iter().enumerate() {
            let len = fe.mesh.edge_length(e);
            for &(s, w) in &rule.segment {
                let hv = h(fe.boundary_point(k, s), e.normal);
                hvals.push((len * w, hv[0] * e.tangent[0] + hv[1] * e.tangent[1]));
            }
        }
    }
    let total = scaled_lp(&fvals, 1.2) + scaled_lp(&svals, 2.0) + scaled_lp(&hvals, 2.0);
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::numerical("non-finite data norm"))
    }
}

/// Sampled sup of `|c̃(w;u,v)| / (‖w‖_{H¹}‖u‖_{H¹}‖v‖_{H¹})` over the constrained space.
pub fn trilinear_constant(fe: &FeSystem, data: &ProblemData, opts: &SmallnessOptions) -> Result<f64> {
    let plan = build_constraint_plan(fe, data)?;
    let (lo, hi) = fe.node_coords.iter().fold(([f64::MAX; 2], [f64::MIN; 2]), |(lo, hi), x| {
        ([lo[0].min(x[0]), lo[1].min(x[1])], [hi[0].max(x[0]), hi[1].max(x[1])])
    });
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let scale = 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // Random cubic fields: nodal noise would only probe the mesh scale.
    let mut draw = || -> Result<Vec<f64>> {
        let c: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = crate::fem::interpolate_velocity(fe, |x| {
            let (s, t) = ((x[0] - center[0]) / scale, (x[1] - center[1]) / scale);
            let m = [1.0, s, t, s * s, s * t, t * t, s * s * s, s * s * t, s * t * t, t * t * t];
            let dot = |k: usize| (0..10).map(|i| c[k * 10 + i] * m[i]).sum::<f64>();
            [dot(0), dot(1)]
        })?;
        Ok(plan.extend(&plan.restrict(&u)))
    };
    let mut draws = Vec::with_capacity(opts.samples);
    for _ in 0..opts.samples {
        draws.push((draw()?, draw()?, draw()?));
    }
    let ratios = draws
        .iter()
        .map(|(w, u, v)| -> Result<f64> {
            let t = trilinear_form(fe, w, u, v)?;
            let d = norms(fe, w)?.h1() * norms(fe, u)?.h1() * norms(fe, v)?.h1();
            Ok(if d > 0.0 { t.abs() / d } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

pub fn smallness_indicator(mesh: &TriMesh, data: &ProblemData, opts: &SmallnessOptions) -> Result<SmallnessReport> {
    let fe = crate::fem::build_taylor_hood(mesh);
    let cb = trilinear_constant(&fe, data, opts)?;
    let coer = korn_quotient_min(mesh, &data.alpha, true, &SpectralOptions::default())?.constant;
    if coer <= 0.0 {
        return Err(Error::SingularSystem("coercivity constant vanishes; the smallness indicator is undefined".into()));
    }
    let dn = data_norm(&fe, data)?;
    let factor = cb / (coer * coer);
    Ok(SmallnessReport { indicator: factor * dn, trilinear_constant: cb, coercivity_constant: coer, data_norm: dn })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_taylor_hood, interpolate_velocity};
    use crate::mesh::{make_disk, make_unit_square};

    fn swirl() -> ProblemData {
        ProblemData::new(1.0).with_force(|x| [-(x[1] - 0.5), x[0] - 0.5]).with_boundary_force(|x, _| [x[1], -x[0]])
    }

    #[test]
    fn zero_data_converges_immediately() {
        let (s, log) = solve_ns_picard(&make_unit_square(3).unwrap(), &ProblemData::new(1.0), &PicardOptions::default())
            .unwrap();
        assert_eq!(log.records.len(), 1);
        assert!(s.velocity.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn energy_identity_and_residual() {
        let (s, log) = solve_ns_picard(&make_unit_square(4).unwrap(), &swirl().scaled(20.0), &PicardOptions::default())
            .unwrap();
        assert!(log.converged);
        let d = s.diagnostics;
        assert!(d.energy_residual <= 1e-8 * d.energy_lhs.max(1.0));
        assert!(log.nonlinear_residual <= 1e-8, "{}", log.nonlinear_residual);
        assert!(log.records.iter().all(|r| r.skew_defect <= 1e-12));
        assert!(log.to_csv().lines().count() == log.records.len() + 1);
    }

    #[test]
    fn initial_guesses_agree() {
        let disc = Discretization::new(&make_unit_square(4).unwrap());
        let data = swirl().scaled(10.0);
        let (a, _) = picard(&disc, &data, &PicardOptions::default()).unwrap();
        let opts = PicardOptions { initial: InitialGuess::Stokes, ..Default::default() };
        let (b, _) = picard(&disc, &data, &opts).unwrap();
        let diff: Vec<f64> = a.velocity.iter().zip(&b.velocity).map(|(x, y)| x - y).collect();
        assert!(norms(&disc.fe, &diff).unwrap().h1() <= 1e-8);
    }

    #[test]
    fn large_data_hits_iteration_limit() {
        let opts = PicardOptions { max_iterations: 15, ..Default::default() };
        let r = solve_ns_picard(&make_unit_square(3).unwrap(), &swirl().scaled(1e4), &opts);
        assert!(matches!(r, Err(Error::MaxIterations { .. })), "{r:?}");
    }

    #[test]
    fn invalid_options() {
        let m = make_unit_square(2).unwrap();
        for o in [
            PicardOptions { damping: 0.0, ..Default::default() },
            PicardOptions { damping: 1.5, ..Default::default() },
            PicardOptions { tolerance: 0.0, ..Default::default() },
        ] {
            assert!(matches!(solve_ns_picard(&m, &swirl(), &o), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn damping_still_converges() {
        let opts = PicardOptions { damping: 0.7, max_iterations: 200, ..Default::default() };
        let (_, log) = solve_ns_picard(&make_unit_square(3).unwrap(), &swirl().scaled(10.0), &opts).unwrap();
        assert!(log.converged);
    }

    #[test]
    fn trilinear_form_matches_matrix() {
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut r = || (0..fe.num_velocity_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let (w, u, v) = (r(), r(), r());
        let c = assemble_convection_skew(&fe, &w).unwrap();
        let direct = trilinear_form(&fe, &w, &u, &v).unwrap();
        assert!((c.bilinear(&v, &u) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn defects() {
        let fe = build_taylor_hood(&make_disk(1, 1.0).unwrap());
        let z = vec![0.0; fe.num_velocity_dofs()];
        let d = trilinear_defects(&fe, &z, &z, &z).unwrap();
        assert_eq!((d.skew_diagonal_defect, d.antisymmetry_defect, d.beta_defect), (0.0, 0.0, 0.0));
        let u = interpolate_velocity(&fe, |x| [x[0] * x[1], 1.0 - x[0]]).unwrap();
        let d = trilinear_defects(&fe, &u, &u, &u).unwrap();
        assert!(d.skew_diagonal_defect <= 1e-12 && d.antisymmetry_defect == 0.0);
    }

    #[test]
    fn smallness_scales_linearly() {
        let mesh = make_unit_square(3).unwrap();
        let opts = SmallnessOptions { samples: 20, seed: 9 };
        let zero = smallness_indicator(&mesh, &ProblemData::new(1.0), &opts).unwrap();
        assert_eq!(zero.indicator, 0.0);
        let a = smallness_indicator(&mesh, &swirl(), &opts).unwrap();
        let b = smallness_indicator(&mesh, &swirl(), &opts).unwrap();
        assert_eq!(a, b);
        let c = smallness_indicator(&mesh, &swirl().scaled(2.0), &opts).unwrap();
        assert_eq!(c.indicator, 2.0 * a.indicator);
    }
}
