//! Impermeability, pressure gauge and kernel guard.
//!
//! Each boundary velocity node is rotated into its `(n, τ)` frame and the
//! normal component is dropped; corner nodes are clamped. This is encoded as a
//! transformation `u = T x` from the reduced coordinates `x`, where every row
//! of `T` holds at most one entry, so the reduced operators are `TᵀAT`, `BT`
//! and `Tᵀℓ`.

use crate::fem::FeSystem;
use crate::forms::{alpha_is_zero, boundary_beta_vector, pressure_mean_vector, ProblemData};
use crate::mesh::DomainTag;
use crate::saddle::{SaddleSolution, SaddleSystem};
use crate::sparse::CsrMatrix;
use crate::{Error, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// `u·n = 0`, tangential component free (corners clamped).
    Slip,
    /// `u = 0` on Γ (no-slip reference).
    Clamped,
    /// No boundary constraint at all.
    Free,
}

/// Orthogonal frame of one boundary node; rows are `n` and `τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationBlock {
    pub node: usize,
    pub normal: Point,
    pub tangent: Point,
    /// Both rotated components eliminated.
    pub clamped: bool,
}

impl RotationBlock {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [self.normal, self.tangent]
    }

    /// `‖R Rᵀ − I‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        let (n, t) = (self.normal, self.tangent);
        let nn = n[0] * n[0] + n[1] * n[1] - 1.0;
        let tt = t[0] * t[0] + t[1] * t[1] - 1.0;
        let nt = n[0] * t[0] + n[1] * t[1];
        nn.abs().max(tt.abs()).max(nt.abs())
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintPlan {
    pub policy: BoundaryPolicy,
    pub num_full: usize,
    pub num_reduced: usize,
    pub num_pressure: usize,
    pub blocks: Vec<RotationBlock>,
    /// Row `i` of `T`: full DOF `i` equals `coeff · x[col]`.
    pub map: Vec<Option<(usize, f64)>>,
    /// `m_i = ∫ψ_i`.
    pub pressure_gauge: Vec<f64>,
    /// Full-space guard functional `u ↦ ∫_Γ u·β ds`.
    pub kernel_guard: Option<Vec<f64>>,
}

/// Plan for the slip problem; the guard is active iff the domain is the
/// disk and every friction sample is at most 10⁻¹⁴.
pub fn build_constraint_plan(fe: &FeSystem, data: &ProblemData) -> Result<ConstraintPlan> {
    let guard = matches!(fe.mesh.domain, DomainTag::Disk { .. }) && alpha_is_zero(fe, &data.alpha)?;
    let plan = ConstraintPlan::new(fe, BoundaryPolicy::Slip);
    Ok(if guard { plan.with_kernel_guard(fe) } else { plan })
}

impl ConstraintPlan {
    pub fn new(fe: &FeSystem, policy: BoundaryPolicy) -> ConstraintPlan {
        let nodes = fe.num_nodes();
        let mut frame_of = vec![None; nodes];
        if policy != BoundaryPolicy::Free {
            for b in &fe.boundary_nodes {
                frame_of[b.node] = Some(b.frame);
            }
        }
        let mut map = vec![None; 2 * nodes];
        let mut blocks = Vec::with_capacity(fe.boundary_nodes.len());
        let mut next = 0;
        for a in 0..nodes {
            match frame_of[a] {
                None => {
                    map[2 * a] = Some((next, 1.0));
                    map[2 * a + 1] = Some((next + 1, 1.0));
                    next += 2;
                }
                Some(f) => {
                    let clamped = policy == BoundaryPolicy::Clamped || f.corner;
                    if !clamped {
                        for c in 0..2 {
                            if f.tangent[c] != 0.0 {
                                map[2 * a + c] = Some((next, f.tangent[c]));
                            }
                        }
                        next += 1;
                    }
                    blocks.push(RotationBlock { node: a, normal: f.normal, tangent: f.tangent, clamped });
                }
            }
        }
        ConstraintPlan {
            policy,
            num_full: 2 * nodes,
            num_reduced: next,
            num_pressure: fe.num_pressure_dofs(),
            blocks,
            map,
            pressure_gauge: pressure_mean_vector(fe),
            kernel_guard: None,
        }
    }

    pub fn with_kernel_guard(mut self, fe: &FeSystem) -> Self {
        self.kernel_guard = Some(boundary_beta_vector(fe));
        self
    }

    /// Test hook: drops the guard regardless of the trigger.
    pub fn without_kernel_guard(mut self) -> Self {
        self.kernel_guard = None;
        self
    }

    pub fn num_eliminated(&self) -> usize {
        self.num_full - self.num_reduced
    }

    pub fn corner_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.clamped).count()
    }

    /// `Tᵀ v`.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.num_full, "restrict: length mismatch");
        let mut out = vec![0.0; self.num_reduced];
        for (i, m) in self.map.iter().enumerate() {
            if let Some((r, c)) = *m {
                out[r] += c * full[i];
            }
        }
        out
    }

    /// `T x`.
    pub fn extend(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.num_reduced, "extend: length mismatch");
        self.map.iter().map(|m| m.map_or(0.0, |(r, c)| c * reduced[r])).collect()
    }

    /// `TᵀAT`.
    pub fn reduce_operator(&self, a: &CsrMatrix) -> CsrMatrix {
        a.congruence(&self.map, self.num_reduced, &self.map, self.num_reduced)
    }

    /// `B T`.
    pub fn reduce_coupling(&self, b: &CsrMatrix) -> CsrMatrix {
        let identity: Vec<Option<(usize, f64)>> = (0..b.nrows).map(|i| Some((i, 1.0))).collect();
        b.congruence(&identity, b.nrows, &self.map, self.num_reduced)
    }

    /// Full velocity and physical pressure `π = −p` of a reduced solution.
    pub fn reconstruct(&self, sol: &SaddleSolution) -> (Vec<f64>, Vec<f64>) {
        (self.extend(&sol.velocity), sol.pressure.iter().map(|p| -p).collect())
    }

    /// Largest `|u·n|` over slip nodes and `|u|` over clamped nodes.
    pub fn boundary_defect(&self, u: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let v = [u[2 * b.node], u[2 * b.node + 1]];
                if b.clamped {
                    v[0].hypot(v[1])
                } else {
                    (v[0] * b.normal[0] + v[1] * b.normal[1]).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Reduced saddle system `[TᵀAT, (BT)ᵀ; BT, 0]` with gauge and optional guard.
pub fn apply_plan(a: &CsrMatrix, b: &CsrMatrix, load: &[f64], plan: &ConstraintPlan) -> Result<SaddleSystem> {
    if a.nrows != plan.num_full
        || a.ncols != plan.num_full
        || b.ncols != plan.num_full
        || b.nrows != plan.num_pressure
        || load.len() != plan.num_full
    {
        return Err(Error::invalid(format!(
            "blocks ({}x{}, {}x{}, {}) do not match the plan ({} velocity, {} pressure DOFs)",
            a.nrows,
            a.ncols,
            b.nrows,
            b.ncols,
            load.len(),
            plan.num_full,
            plan.num_pressure
        )));
    }
    let velocity_block = plan.reduce_operator(a);
    let symmetric = velocity_block.is_symmetric(1e-12);
    Ok(SaddleSystem {
        velocity_block,
        coupling: plan.reduce_coupling(b),
        pressure_gauge: Some(plan.pressure_gauge.clone()),
        kernel_guard: plan.kernel_guard.as_ref().map(|g| plan.restrict(g)),
        rhs_velocity: plan.restrict(load),
        rhs_pressure: vec![0.0; plan.num_pressure],
        symmetric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_taylor_hood, interpolate_velocity};
    use crate::fields::beta;
    use crate::forms::{assemble_div, assemble_viscous};
    use crate::mesh::{make_disk, make_unit_square};
    use crate::saddle::factor_solve;
    use std::f64::consts::PI;

    #[test]
    fn square_elimination_counts() {
        for n in [1, 4, 7] {
            let fe = build_taylor_hood(&make_unit_square(n).unwrap());
            let plan = build_constraint_plan(&fe, &ProblemData::new(1.0)).unwrap();
            assert!(plan.kernel_guard.is_none());
            let boundary = 8 * n;
            assert_eq!(plan.corner_count(), 4);
            assert_eq!(plan.num_eliminated(), (boundary - 4) + 2 * 4);
            assert!(plan.blocks.iter().all(|b| b.orthogonality_defect() <= 1e-14));
        }
    }

    #[test]
    fn disk_guard_trigger() {
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        for (a, active) in [(0.0, true), (1e-14, true), (1e-13, false), (1.0, false)] {
            let plan = build_constraint_plan(&fe, &ProblemData::new(a)).unwrap();
            assert_eq!(plan.kernel_guard.is_some(), active, "alpha {a}");
            assert_eq!(plan.corner_count(), 0);
            assert_eq!(plan.num_eliminated(), fe.boundary_nodes.len());
        }
        let square = build_taylor_hood(&make_unit_square(3).unwrap());
        assert!(build_constraint_plan(&square, &ProblemData::new(0.0)).unwrap().kernel_guard.is_none());
        assert!(build_constraint_plan(&fe, &ProblemData::new(0.0)).unwrap().without_kernel_guard().kernel_guard.is_none());
    }

    #[test]
    fn free_plan_is_identity() {
        let fe = build_taylor_hood(&make_unit_square(2).unwrap());
        let plan = ConstraintPlan::new(&fe, BoundaryPolicy::Free);
        let a = assemble_viscous(&fe);
        let b = assemble_div(&fe);
        let load: Vec<f64> = (0..plan.num_full).map(|i| i as f64).collect();
        let sys = apply_plan(&a, &b, &load, &plan).unwrap();
        assert_eq!(sys.velocity_block, a);
        assert_eq!(sys.coupling, b);
        assert_eq!(sys.rhs_velocity, load);
        assert!(sys.symmetric);
    }

    #[test]
    fn round_trip_of_tangential_fields() {
        let fe = build_taylor_hood(&make_disk(3, 1.0).unwrap());
        let plan = ConstraintPlan::new(&fe, BoundaryPolicy::Slip);
        let u = interpolate_velocity(&fe, |x| {
            let s = x[0] * x[0] + x[1] * x[1];
            [-x[1] * (1.0 + s), x[0] * (1.0 + s)]
        })
        .unwrap();
        let back = plan.extend(&plan.restrict(&u));
        assert!(u.iter().zip(&back).all(|(a, b)| (a - b).abs() <= 1e-13));

        let fe = build_taylor_hood(&make_unit_square(5).unwrap());
        let plan = ConstraintPlan::new(&fe, BoundaryPolicy::Slip);
        let u = interpolate_velocity(&fe, |x| {
            [PI * (PI * x[0]).sin() * (PI * x[1]).cos(), -PI * (PI * x[0]).cos() * (PI * x[1]).sin()]
        })
        .unwrap();
        let back = plan.extend(&plan.restrict(&u));
        assert!(u.iter().zip(&back).all(|(a, b)| (a - b).abs() <= 1e-13));
    }

    #[test]
    fn rotation_preserves_nodal_norm() {
        let fe = build_taylor_hood(&make_disk(2, 1.5).unwrap());
        let plan = ConstraintPlan::new(&fe, BoundaryPolicy::Slip);
        for b in &plan.blocks {
            let r = b.matrix();
            let v = [0.3, -1.7];
            let w = [r[0][0] * v[0] + r[0][1] * v[1], r[1][0] * v[0] + r[1][1] * v[1]];
            assert!((w[0].hypot(w[1]) - v[0].hypot(v[1])).abs() <= 1e-14);
        }
    }

    #[test]
    fn extended_vectors_are_impermeable() {
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        for policy in [BoundaryPolicy::Slip, BoundaryPolicy::Clamped] {
            let plan = ConstraintPlan::new(&fe, policy);
            let x: Vec<f64> = (0..plan.num_reduced).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            assert!(plan.boundary_defect(&plan.extend(&x)) <= 1e-13);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let fe = build_taylor_hood(&make_unit_square(2).unwrap());
        let plan = ConstraintPlan::new(&fe, BoundaryPolicy::Slip);
        let a = assemble_viscous(&fe);
        let b = assemble_div(&fe);
        assert!(matches!(apply_plan(&a, &b, &[0.0; 3], &plan), Err(Error::InvalidArgument(_))));
        assert!(matches!(apply_plan(&b, &b, &vec![0.0; plan.num_full], &plan), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rotation_is_in_the_unguarded_disk_kernel() {
        // nodal normals on the inscribed polygon are radial, so the interpolated
        // rotation lies in the constrained space: Rayleigh quotient ≤ C h²
        for level in 1..5 {
            let mesh = make_disk(level, 1.0).unwrap();
            let fe = build_taylor_hood(&mesh);
            let plan = ConstraintPlan::new(&fe, BoundaryPolicy::Slip);
            let a = plan.reduce_operator(&assemble_viscous(&fe));
            let b = plan.restrict(&interpolate_velocity(&fe, beta).unwrap());
            let q = a.bilinear(&b, &b) / crate::sparse::dot(&b, &b);
            let h = mesh.mesh_size();
            assert!(q <= 1e-12 * a.max_abs() + h * h * 1e-6, "level {level}: {q}");
        }
    }

    #[test]
    fn unguarded_disk_is_singular() {
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        let data = ProblemData::new(0.0).with_force(|x| [1.0 + x[1], x[0] * x[0]]);
        let plan = build_constraint_plan(&fe, &data).unwrap();
        let a = assemble_viscous(&fe);
        let b = assemble_div(&fe);
        let load = crate::forms::assemble_load(&fe, &data).unwrap();
        let guarded = apply_plan(&a, &b, &load, &plan).unwrap();
        let s = factor_solve(&guarded).unwrap();
        let (u, _) = plan.reconstruct(&s);
        assert!(crate::sparse::dot(&plan.kernel_guard.clone().unwrap(), &u).abs() <= 1e-12);
        let bare = apply_plan(&a, &b, &load, &plan.without_kernel_guard()).unwrap();
        assert!(matches!(factor_solve(&bare), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn square_with_zero_friction_is_nonsingular() {
        let fe = build_taylor_hood(&make_unit_square(4).unwrap());
        let data = ProblemData::new(0.0).with_force(|x| [-(x[1] - 0.5), x[0] - 0.5]);
        let plan = build_constraint_plan(&fe, &data).unwrap();
        let sys = apply_plan(
            &assemble_viscous(&fe),
            &assemble_div(&fe),
            &crate::forms::assemble_load(&fe, &data).unwrap(),
            &plan,
        )
        .unwrap();
        let s = factor_solve(&sys).unwrap();
        let (_, pi) = plan.reconstruct(&s);
        let mean = crate::sparse::dot(&plan.pressure_gauge, &pi);
        assert!(mean.abs() <= 1e-10 * crate::sparse::norm2(&pi).max(1e-300));
    }
}
