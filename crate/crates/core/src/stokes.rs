//! Stokes driver: assemble, constrain, solve, and report diagnostics.

use std::sync::Arc;

use crate::constraints::{apply_plan, build_constraint_plan, BoundaryPolicy, ConstraintPlan};
use crate::fem::{self, build_taylor_hood, FeSystem, Grad};
use crate::fields::beta;
use crate::forms::{assemble_div, assemble_friction, assemble_load, assemble_viscous, compatibility_functional, ProblemData};
use crate::mesh::{rot90, DomainTag, TriMesh};
use crate::quadrature::quadrature;
use crate::saddle::factor_solve;
use crate::sparse::{dot, CsrMatrix};
use crate::{Error, Point, Result};

/// Hint attached to singular solves on the disk with α ≡ 0.
pub const KERNEL_GUIDANCE: &str = "on the disk with zero friction the rigid rotation β(x) = (-x2, x1) is in the \
     kernel; enable compatibility mode to add the kernel guard, or use a nonzero friction coefficient";

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// `uᵀ(A + M_α)u`
    pub energy_lhs: f64,
    /// `ℓᵀu`
    pub energy_rhs: f64,
    pub energy_residual: f64,
    pub h1_norm: f64,
    pub pressure_l2: f64,
    pub boundary_tangential_l2: f64,
    pub divergence_l2: f64,
    /// Relative residual of the linear solve.
    pub linear_residual: f64,
    /// `‖Bu‖ / ‖|B||u|‖`
    pub weak_divergence: f64,
    pub pressure_mean: f64,
    /// `∫_Γ u·β ds`
    pub boundary_beta_moment: f64,
    /// Largest `|u·n|` at slip nodes (`|u|` at clamped nodes).
    pub normal_defect: f64,
    pub guard_multiplier: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Mesh-dependent operators shared by every solve on one mesh.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub fe: Arc<FeSystem>,
    pub viscous: CsrMatrix,
    pub divergence: CsrMatrix,
}

impl Discretization {
    pub fn new(mesh: &TriMesh) -> Discretization {
        let fe = build_taylor_hood(mesh);
        let viscous = assemble_viscous(&fe);
        let divergence = assemble_div(&fe);
        Discretization { fe: Arc::new(fe), viscous, divergence }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.fe.mesh
    }

    /// `A + M_α`.
    pub fn energy_operator(&self, data: &ProblemData) -> Result<CsrMatrix> {
        let m = assemble_friction(&self.fe, &data.alpha)?;
        Ok(self.viscous.add_scaled(1.0, &m, 1.0))
    }

    /// Slip problem; errors on the disk with α ≡ 0 unless compatibility mode is on.
    pub fn solve(&self, data: &ProblemData) -> Result<Solution> {
        let plan = build_constraint_plan(&self.fe, data)?;
        if plan.kernel_guard.is_some() && !data.compatibility_mode {
            return Err(Error::SingularSystem(KERNEL_GUIDANCE.into()));
        }
        self.solve_with_plan(data, &plan)
    }

    /// Dirichlet reference `u = 0` on Γ, same assembly with full clamping.
    pub fn solve_dirichlet(&self, data: &ProblemData) -> Result<Solution> {
        let plan = ConstraintPlan::new(&self.fe, BoundaryPolicy::Clamped);
        self.solve_with_plan(data, &plan)
    }

    pub fn solve_with_plan(&self, data: &ProblemData, plan: &ConstraintPlan) -> Result<Solution> {
        let op = self.energy_operator(data)?;
        let load = assemble_load(&self.fe, data)?;
        self.solve_linear(plan, &op, &op, &load)
    }

    /// Solves with system operator `op` and reports the energy identity for `energy_op`.
    pub(crate) fn solve_linear(
        &self,
        plan: &ConstraintPlan,
        op: &CsrMatrix,
        energy_op: &CsrMatrix,
        load: &[f64],
    ) -> Result<Solution> {
        let sys = apply_plan(op, &self.divergence, load, plan)?;
        let sol = factor_solve(&sys).map_err(|e| match e {
            Error::SingularSystem(msg) if plan.policy == BoundaryPolicy::Slip && self.mesh().is_axisymmetric() => {
                Error::SingularSystem(format!("{msg}; {KERNEL_GUIDANCE}"))
            }
            other => other,
        })?;
        let (velocity, pressure) = plan.reconstruct(&sol);
        let mut diagnostics = self.diagnostics(energy_op, load, &velocity, &pressure)?;
        diagnostics.linear_residual = sol.relative_residual;
        diagnostics.guard_multiplier = sol.guard_multiplier;
        diagnostics.normal_defect = plan.boundary_defect(&velocity);
        Ok(Solution { velocity, pressure, diagnostics })
    }

    fn diagnostics(&self, energy_op: &CsrMatrix, load: &[f64], u: &[f64], pi: &[f64]) -> Result<Diagnostics> {
        let fe = &self.fe;
        let n = fem::norms(fe, u)?;
        let lhs = energy_op.bilinear(u, u);
        let rhs = dot(load, u);
        let bu = self.divergence.mul_vec(u);
        let abs_u: Vec<f64> = u.iter().map(|v| v.abs()).collect();
        let abs_b = CsrMatrix { values: self.divergence.values.iter().map(|v| v.abs()).collect(), ..self.divergence.clone() };
        let scale = crate::sparse::norm2(&abs_b.mul_vec(&abs_u));
        Ok(Diagnostics {
            energy_lhs: lhs,
            energy_rhs: rhs,
            energy_residual: (lhs - rhs).abs(),
            h1_norm: n.h1(),
            pressure_l2: fem::pressure_l2(fe, pi)?,
            boundary_tangential_l2: n.boundary_l2_tangential,
            divergence_l2: n.divergence_l2,
            linear_residual: 0.0,
            weak_divergence: if scale > 0.0 { crate::sparse::norm2(&bu) / scale } else { 0.0 },
            pressure_mean: fem::pressure_integral(fe, pi)?,
            boundary_beta_moment: fem::boundary_beta_moment(fe, u)?,
            normal_defect: 0.0,
            guard_multiplier: None,
        })
    }

    pub fn energy_report(&self, sol: &Solution, data: &ProblemData) -> Result<EnergyReport> {
        let op = self.energy_operator(data)?;
        let load = assemble_load(&self.fe, data)?;
        let lhs = op.bilinear(&sol.velocity, &sol.velocity);
        let rhs = dot(&load, &sol.velocity);
        Ok(EnergyReport { lhs, rhs, residual: (lhs - rhs).abs() })
    }
}

pub fn solve_stokes(mesh: &TriMesh, data: &ProblemData) -> Result<Solution> {
    Discretization::new(mesh).solve(data)
}

pub fn energy_report(disc: &Discretization, sol: &Solution, data: &ProblemData) -> Result<EnergyReport> {
    disc.energy_report(sol, data)
}

/// Max over boundary Gauss points, projected onto the exact circle, of
/// `|2nᵀD(u)τ − ω + 2κ(u·τ)|` for a closed-form field returning value and gradient.
pub fn boundary_identity_defect(field: impl Fn(Point) -> (Point, Grad), mesh: &TriMesh) -> Result<f64> {
    let DomainTag::Disk { radius } = mesh.domain else {
        return Err(Error::invalid("boundary identity check needs a disk mesh"));
    };
    let kappa = 1.0 / radius;
    let rule = quadrature(6)?;
    let mut worst: f64 = 0.0;
    for e in &mesh.boundary_edges {
        let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        for &(s, _) in &rule.segment {
            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let r = p[0].hypot(p[1]);
            let n = [p[0] / r, p[1] / r];
            let x = [radius * n[0], radius * n[1]];
            let tau = rot90(n);
            let (u, g) = field(x);
            let un = u[0] * n[0] + u[1] * n[1];
            if un.abs() > 1e-10 * 1f64.max(u[0].hypot(u[1])) {
                return Err(Error::invalid(format!("field is not tangent to the circle: u·n = {un:.3e} at {x:?}")));
            }
            let d = [[g[0][0], 0.5 * (g[0][1] + g[1][0])], [0.5 * (g[0][1] + g[1][0]), g[1][1]]];
            let dtau = [d[0][0] * tau[0] + d[0][1] * tau[1], d[1][0] * tau[0] + d[1][1] * tau[1]];
            let lhs = 2.0 * (n[0] * dtau[0] + n[1] * dtau[1]);
            let omega = g[1][0] - g[0][1];
            let ut = u[0] * tau[0] + u[1] * tau[1];
            worst = worst.max((lhs - omega + 2.0 * kappa * ut).abs());
        }
    }
    Ok(worst)
}

/// Mesh-quadrature value of `∫_Ω f·β − ∫_Ω F:∇β + ∫_Γ h·β ds`.
pub fn check_compatibility(data: &ProblemData, mesh: &TriMesh) -> Result<f64> {
    if !mesh.is_axisymmetric() {
        return Err(Error::invalid("compatibility check needs a disk mesh"));
    }
    compatibility_functional(&build_taylor_hood(mesh), data)
}

/// The same functional on the exact disk of the given radius (polar tensor
/// quadrature: composite Gauss in r, periodic trapezoid in θ).
pub fn check_compatibility_exact_disk(data: &ProblemData, radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
    }
    const RADIAL_PANELS: usize = 32;
    const ANGLES: usize = 512;
    let gauss = quadrature(6)?.segment;
    let dtheta = 2.0 * std::f64::consts::PI / ANGLES as f64;
    let mut total = 0.0;
    for k in 0..ANGLES {
        let (st, ct) = (k as f64 * dtheta).sin_cos();
        let n = [ct, st];
        let mut ring = 0.0;
        if data.force.is_some() || data.stress.is_some() {
            for panel in 0..RADIAL_PANELS {
                for &(s, w) in &gauss {
                    let r = radius * (panel as f64 + s) / RADIAL_PANELS as f64;
                    let x = [r * ct, r * st];
                    let b = beta(x);
                    let mut v = 0.0;
                    if let Some(f) = &data.force {
                        let fv = f(x);
                        v += fv[0] * b[0] + fv[1] * b[1];
                    }
                    if let Some(m) = &data.stress {
                        let m = m(x);
                        v -= m[1][0] - m[0][1];
                    }
                    ring += w * radius / RADIAL_PANELS as f64 * r * v;
                }
            }
        }
        if let Some(h) = &data.boundary_force {
            let x = [radius * ct, radius * st];
            let hv = h(x, n);
            let tau = rot90(n);
            let ht = hv[0] * tau[0] + hv[1] * tau[1];
            let b = beta(x);
            ring += radius * ht * (b[0] * tau[0] + b[1] * tau[1]);
        }
        total += dtheta * ring;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::numerical("non-finite compatibility functional"))
    }
}
