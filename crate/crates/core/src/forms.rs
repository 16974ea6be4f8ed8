//! Assembly of the bilinear and linear forms of the weak formulation
//!
//! ```text
//! a(u, φ) = 2∫_Ω D(u):D(φ) + ∫_Γ α u_τ·φ_τ
//! ℓ(φ)    = ∫_Ω f·φ − ∫_Ω F:∇φ + ∫_Γ h·φ
//! ```
//!
//! plus the divergence coupling and the skew-symmetric convection operator.

use std::fmt;
use std::sync::Arc;

use crate::fem::{p2_basis, p2_segment, FeSystem};
use crate::fields::{beta, Alpha, BoundaryField, MatrixField, VectorField, ALPHA_ZERO_TOL};
use crate::quadrature::{quadrature, QuadratureRule};
use crate::sparse::{CsrMatrix, Triplets};
use crate::{par, Error, Point, Result};

/// Volume force `f`, stress `F`, boundary force `h`, friction `α` and flags.
#[derive(Clone)]
pub struct ProblemData {
    pub force: Option<VectorField>,
    pub stress: Option<MatrixField>,
    /// Only the tangential part `(h·τ)τ` enters the load.
    pub boundary_force: Option<BoundaryField>,
    pub alpha: Alpha,
    /// Known lower bound `α*` of α on Γ (0 when none is claimed).
    pub alpha_lower_bound: f64,
    /// Enables the kernel guard on axisymmetric domains with α ≡ 0.
    pub compatibility_mode: bool,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("force", &self.force.is_some())
            .field("stress", &self.stress.is_some())
            .field("boundary_force", &self.boundary_force.is_some())
            .field("alpha", &self.alpha)
            .field("alpha_lower_bound", &self.alpha_lower_bound)
            .field("compatibility_mode", &self.compatibility_mode)
            .finish()
    }
}

impl ProblemData {
    pub fn new(alpha: impl Into<Alpha>) -> Self {
        ProblemData {
            force: None,
            stress: None,
            boundary_force: None,
            alpha: alpha.into(),
            alpha_lower_bound: 0.0,
            compatibility_mode: false,
        }
    }

    pub fn with_force(mut self, f: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        self.force = Some(Arc::new(f));
        self
    }

    pub fn with_stress(mut self, s: impl Fn(Point) -> [[f64; 2]; 2] + Send + Sync + 'static) -> Self {
        self.stress = Some(Arc::new(s));
        self
    }

    pub fn with_boundary_force(mut self, h: impl Fn(Point, Point) -> Point + Send + Sync + 'static) -> Self {
        self.boundary_force = Some(Arc::new(h));
        self
    }

    pub fn with_alpha(mut self, alpha: impl Into<Alpha>) -> Self {
        self.alpha = alpha.into();
        self
    }

    pub fn with_alpha_lower_bound(mut self, a: f64) -> Self {
        self.alpha_lower_bound = a;
        self
    }

    pub fn with_compatibility_mode(mut self, on: bool) -> Self {
        self.compatibility_mode = on;
        self
    }

    /// Multiplies `f`, `F` and `h` by `s` (α and flags unchanged).
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        if let Some(f) = self.force.clone() {
            out.force = Some(Arc::new(move |x| {
                let v = f(x);
                [s * v[0], s * v[1]]
            }));
        }
        if let Some(m) = self.stress.clone() {
            out.stress = Some(Arc::new(move |x| {
                let v = m(x);
                [[s * v[0][0], s * v[0][1]], [s * v[1][0], s * v[1][1]]]
            }));
        }
        if let Some(h) = self.boundary_force.clone() {
            out.boundary_force = Some(Arc::new(move |x, n| {
                let v = h(x, n);
                [s * v[0], s * v[1]]
            }));
        }
        out
    }

    /// Data sum (α and flags of `self`).
    pub fn plus(&self, other: &ProblemData) -> Self {
        fn add2(a: Option<Point>, b: Option<Point>) -> Point {
            let (a, b) = (a.unwrap_or([0.0; 2]), b.unwrap_or([0.0; 2]));
            [a[0] + b[0], a[1] + b[1]]
        }
        let mut out = self.clone();
        let (f1, f2) = (self.force.clone(), other.force.clone());
        if f1.is_some() || f2.is_some() {
            out.force = Some(Arc::new(move |x| add2(f1.as_ref().map(|f| f(x)), f2.as_ref().map(|f| f(x)))));
        }
        let (s1, s2) = (self.stress.clone(), other.stress.clone());
        if s1.is_some() || s2.is_some() {
            out.stress = Some(Arc::new(move |x| {
                let a = s1.as_ref().map(|f| f(x)).unwrap_or([[0.0; 2]; 2]);
                let b = s2.as_ref().map(|f| f(x)).unwrap_or([[0.0; 2]; 2]);
                [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
            }));
        }
        let (h1, h2) = (self.boundary_force.clone(), other.boundary_force.clone());
        if h1.is_some() || h2.is_some() {
            out.boundary_force =
                Some(Arc::new(move |x, n| add2(h1.as_ref().map(|f| f(x, n)), h2.as_ref().map(|f| f(x, n)))));
        }
        out
    }
}

/// Boundary quadrature used by every boundary form.
pub(crate) fn boundary_rule() -> QuadratureRule {
    quadrature(6).expect("order 6 is supported")
}

/// α at the boundary Gauss points, `[edge][point]`; rejects negative samples.
pub fn alpha_samples(fe: &FeSystem, alpha: &Alpha) -> Result<Vec<Vec<f64>>> {
    let rule = boundary_rule();
    let mut out = Vec::with_capacity(fe.mesh.boundary_edges.len());
    for (k, e) in fe.mesh.boundary_edges.iter().enumerate() {
        let mut row = Vec::with_capacity(rule.segment.len());
        for &(s, _) in &rule.segment {
            let a = alpha.sample(fe.boundary_point(k, s), e.marker);
            if a.is_nan() || a.is_infinite() {
                return Err(Error::numerical(format!("non-finite friction sample on boundary edge {k}")));
            }
            if a < 0.0 {
                return Err(Error::invalid(format!("negative friction coefficient {a} on boundary edge {k}")));
            }
            row.push(a);
        }
        out.push(row);
    }
    Ok(out)
}

/// True when every friction sample is at most [`ALPHA_ZERO_TOL`].
pub fn alpha_is_zero(fe: &FeSystem, alpha: &Alpha) -> Result<bool> {
    Ok(alpha_samples(fe, alpha)?.iter().flatten().all(|&a| a <= ALPHA_ZERO_TOL))
}

struct Local {
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// row-major
    vals: Vec<f64>,
}

fn assemble_locals(nrows: usize, ncols: usize, n: usize, f: impl Fn(usize) -> Local + Sync + Send) -> CsrMatrix {
    let locals = par::map_range(n, f);
    let total: usize = locals.iter().map(|l| l.vals.len()).sum();
    let mut t = Triplets::with_capacity(total);
    for l in &locals {
        let nc = l.cols.len();
        for (a, &r) in l.rows.iter().enumerate() {
            for (b, &c) in l.cols.iter().enumerate() {
                let v = l.vals[a * nc + b];
                if v != 0.0 {
                    t.push(r, c, v);
                }
            }
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, &t)
}

/// Element-wise P2–P2 vector operator with kernel `k(φ_a, ∇φ_a, φ_b, ∇φ_b) -> 2×2 block [c][d]`.
fn assemble_vector_operator(
    fe: &FeSystem,
    order: usize,
    kernel: impl Fn(f64, Point, f64, Point) -> [[f64; 2]; 2] + Sync + Send,
) -> CsrMatrix {
    let rule = quadrature(order).expect("supported order");
    let n = fe.num_velocity_dofs();
    assemble_locals(n, n, fe.num_elements(), |e| {
        let g = &fe.geometry[e];
        let mut vals = vec![0.0; 144];
        for (b, w) in &rule.triangle {
            let (phi, dphi) = p2_basis(*b, &g.grad_bary);
            let wa = 2.0 * g.area * w;
            for a in 0..6 {
                for bb in 0..6 {
                    let blk = kernel(phi[a], dphi[a], phi[bb], dphi[bb]);
                    for c in 0..2 {
                        for d in 0..2 {
                            vals[(2 * a + c) * 12 + 2 * bb + d] += wa * blk[c][d];
                        }
                    }
                }
            }
        }
        let dofs = fe.element_velocity_dofs(e).to_vec();
        Local { rows: dofs.clone(), cols: dofs, vals }
    })
}

/// `vᵀ A w = 2∫_Ω D(v):D(w)`.
pub fn assemble_viscous(fe: &FeSystem) -> CsrMatrix {
    assemble_vector_operator(fe, 4, |_, g, _, k| {
        let gk = g[0] * k[0] + g[1] * k[1];
        // δ_cd ∇φ_a·∇φ_b + ∂_dφ_a ∂_cφ_b
        [[gk + g[0] * k[0], g[1] * k[0]], [g[0] * k[1], gk + g[1] * k[1]]]
    })
}

/// `vᵀ L w = ∫_Ω ∇v:∇w`.
pub fn assemble_vector_laplacian(fe: &FeSystem) -> CsrMatrix {
    assemble_vector_operator(fe, 4, |_, g, _, k| {
        let gk = g[0] * k[0] + g[1] * k[1];
        [[gk, 0.0], [0.0, gk]]
    })
}

/// `vᵀ M w = ∫_Ω v·w`.
pub fn assemble_velocity_mass(fe: &FeSystem) -> CsrMatrix {
    assemble_vector_operator(fe, 4, |p, _, q, _| [[p * q, 0.0], [0.0, p * q]])
}

/// Gram matrix of the full H¹ inner product.
pub fn assemble_h1_gram(fe: &FeSystem) -> CsrMatrix {
    assemble_vector_laplacian(fe).add_scaled(1.0, &assemble_velocity_mass(fe), 1.0)
}

/// `vᵀ M_α w = ∫_Γ α (v·τ)(w·τ) ds` with the edge tangent.
pub fn assemble_friction(fe: &FeSystem, alpha: &Alpha) -> Result<CsrMatrix> {
    let samples = alpha_samples(fe, alpha)?;
    let rule = boundary_rule();
    let n = fe.num_velocity_dofs();
    let mut t = Triplets::with_capacity(36 * fe.mesh.boundary_edges.len());
    for (k, e) in fe.mesh.boundary_edges.iter().enumerate() {
        let len = fe.mesh.edge_length(e);
        let nodes = fe.boundary_edge_nodes[k];
        let tau = e.tangent;
        let mut m = [[0.0; 3]; 3];
        for (q, &(s, w)) in rule.segment.iter().enumerate() {
            let shape = p2_segment(s);
            let a = samples[k][q];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += len * w * a * shape[i] * shape[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                if m[i][j] == 0.0 {
                    continue;
                }
                for c in 0..2 {
                    for d in 0..2 {
                        t.push(2 * nodes[i] + c, 2 * nodes[j] + d, m[i][j] * tau[c] * tau[d]);
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &t))
}

/// `qᵀ B v = ∫_Ω q div v`, pressure × velocity.
pub fn assemble_div(fe: &FeSystem) -> CsrMatrix {
    let rule = quadrature(4).expect("supported order");
    assemble_locals(fe.num_pressure_dofs(), fe.num_velocity_dofs(), fe.num_elements(), |e| {
        let g = &fe.geometry[e];
        let mut vals = vec![0.0; 36];
        for (b, w) in &rule.triangle {
            let (_, dphi) = p2_basis(*b, &g.grad_bary);
            let wa = 2.0 * g.area * w;
            for q in 0..3 {
                for a in 0..6 {
                    for c in 0..2 {
                        vals[q * 12 + 2 * a + c] += wa * b[q] * dphi[a][c];
                    }
                }
            }
        }
        Local { rows: fe.element_pressure_dofs(e).to_vec(), cols: fe.element_velocity_dofs(e).to_vec(), vals }
    })
}

/// P1 pressure mass matrix.
pub fn assemble_pressure_mass(fe: &FeSystem) -> CsrMatrix {
    let np = fe.num_pressure_dofs();
    assemble_locals(np, np, fe.num_elements(), |e| {
        let a = fe.geometry[e].area;
        let mut vals = vec![a / 12.0; 9];
        for i in 0..3 {
            vals[4 * i] = a / 6.0;
        }
        let d = fe.element_pressure_dofs(e).to_vec();
        Local { rows: d.clone(), cols: d, vals }
    })
}

/// `∫_Ω ψ_i` for each pressure basis function.
pub fn pressure_mean_vector(fe: &FeSystem) -> Vec<f64> {
    let mut m = vec![0.0; fe.num_pressure_dofs()];
    for e in 0..fe.num_elements() {
        let a = fe.geometry[e].area / 3.0;
        for &v in &fe.mesh.triangles[e] {
            m[v] += a;
        }
    }
    m
}

/// `g` with `gᵀv = ∫_Γ v·β ds`.
pub fn boundary_beta_vector(fe: &FeSystem) -> Vec<f64> {
    let rule = boundary_rule();
    let mut g = vec![0.0; fe.num_velocity_dofs()];
    for (k, e) in fe.mesh.boundary_edges.iter().enumerate() {
        let len = fe.mesh.edge_length(e);
        let nodes = fe.boundary_edge_nodes[k];
        for &(s, w) in &rule.segment {
            let b = beta(fe.boundary_point(k, s));
            let shape = p2_segment(s);
            for i in 0..3 {
                g[2 * nodes[i]] += len * w * shape[i] * b[0];
                g[2 * nodes[i] + 1] += len * w * shape[i] * b[1];
            }
        }
    }
    g
}

/// `g` with `gᵀv = ∫_Ω v·β`.
pub fn volume_beta_vector(fe: &FeSystem) -> Vec<f64> {
    let rule = quadrature(4).expect("supported order");
    let mut g = vec![0.0; fe.num_velocity_dofs()];
    for e in 0..fe.num_elements() {
        let geo = &fe.geometry[e];
        let nodes = fe.element_nodes[e];
        for (b, w) in &rule.triangle {
            let (phi, _) = p2_basis(*b, &geo.grad_bary);
            let bx = beta(fe.map_point(e, *b));
            let wa = 2.0 * geo.area * w;
            for a in 0..6 {
                g[2 * nodes[a]] += wa * phi[a] * bx[0];
                g[2 * nodes[a] + 1] += wa * phi[a] * bx[1];
            }
        }
    }
    g
}

fn check_finite2(v: Point, what: &str) -> Result<()> {
    if v[0].is_finite() && v[1].is_finite() {
        Ok(())
    } else {
        Err(Error::numerical(format!("non-finite {what} sample")))
    }
}

/// Load vector ℓ with `ℓᵀv = ∫f·v − ∫F:∇v + ∫_Γ h_τ·v`.
pub fn assemble_load(fe: &FeSystem, data: &ProblemData) -> Result<Vec<f64>> {
    let n = fe.num_velocity_dofs();
    let mut load = vec![0.0; n];
    if data.force.is_some() || data.stress.is_some() {
        let rule = quadrature(6)?;
        let locals = par::map_range(fe.num_elements(), |e| -> Result<[f64; 12]> {
            let geo = &fe.geometry[e];
            let mut loc = [0.0; 12];
            for (b, w) in &rule.triangle {
                let x = fe.map_point(e, *b);
                let (phi, dphi) = p2_basis(*b, &geo.grad_bary);
                let wa = 2.0 * geo.area * w;
                if let Some(f) = &data.force {
                    let fv = f(x);
                    check_finite2(fv, "volume force")?;
                    for a in 0..6 {
                        loc[2 * a] += wa * fv[0] * phi[a];
                        loc[2 * a + 1] += wa * fv[1] * phi[a];
                    }
                }
                if let Some(s) = &data.stress {
                    let m = s(x);
                    check_finite2(m[0], "stress")?;
                    check_finite2(m[1], "stress")?;
                    for a in 0..6 {
                        for c in 0..2 {
                            loc[2 * a + c] -= wa * (m[c][0] * dphi[a][0] + m[c][1] * dphi[a][1]);
                        }
                    }
                }
            }
            Ok(loc)
        });
        for (e, loc) in locals.into_iter().enumerate() {
            let loc = loc?;
            for (k, d) in fe.element_velocity_dofs(e).into_iter().enumerate() {
                load[d] += loc[k];
            }
        }
    }
    if let Some(h) = &data.boundary_force {
        let rule = boundary_rule();
        for (k, e) in fe.mesh.boundary_edges.iter().enumerate() {
            let len = fe.mesh.edge_length(e);
            let nodes = fe.boundary_edge_nodes[k];
            for &(s, w) in &rule.segment {
                let hv = h(fe.boundary_point(k, s), e.normal);
                check_finite2(hv, "boundary force")?;
                let ht = hv[0] * e.tangent[0] + hv[1] * e.tangent[1];
                let shape = p2_segment(s);
                for i in 0..3 {
                    load[2 * nodes[i]] += len * w * ht * e.tangent[0] * shape[i];
                    load[2 * nodes[i] + 1] += len * w * ht * e.tangent[1] * shape[i];
                }
            }
        }
    }
    Ok(load)
}

/// Skew-symmetric convection matrix with
/// `vᵀ C(w) u = ½∫_Ω [(w·∇)u·v − (w·∇)v·u]`; `C(w) = −C(w)ᵀ` exactly.
pub fn assemble_convection_skew(fe: &FeSystem, w: &[f64]) -> Result<CsrMatrix> {
    if w.len() != fe.num_velocity_dofs() {
        return Err(Error::invalid(format!(
            "advecting field has length {}, space has {} DOFs",
            w.len(),
            fe.num_velocity_dofs()
        )));
    }
    let rule = quadrature(6)?;
    let n = fe.num_velocity_dofs();
    Ok(assemble_locals(n, n, fe.num_elements(), |e| {
        let geo = &fe.geometry[e];
        // nmat[a][b] = ∫ (w·∇φ_b) φ_a
        let mut nmat = [[0.0; 6]; 6];
        for (b, wq) in &rule.triangle {
            let (phi, dphi) = p2_basis(*b, &geo.grad_bary);
            let (wv, _) = fe.eval_velocity(w, e, *b);
            let wa = 2.0 * geo.area * wq;
            for a in 0..6 {
                for bb in 0..6 {
                    nmat[a][bb] += wa * phi[a] * (wv[0] * dphi[bb][0] + wv[1] * dphi[bb][1]);
                }
            }
        }
        let mut vals = vec![0.0; 144];
        for a in 0..6 {
            for bb in 0..6 {
                let s = 0.5 * (nmat[a][bb] - nmat[bb][a]);
                vals[(2 * a) * 12 + 2 * bb] = s;
                vals[(2 * a + 1) * 12 + 2 * bb + 1] = s;
            }
        }
        let dofs = fe.element_velocity_dofs(e).to_vec();
        Local { rows: dofs.clone(), cols: dofs, vals }
    }))
}

/// Mesh quadrature of `∫_Ω f·β − ∫_Ω F:∇β + ∫_Γ h·β ds`.
pub fn compatibility_functional(fe: &FeSystem, data: &ProblemData) -> Result<f64> {
    let mut total = 0.0;
    if data.force.is_some() || data.stress.is_some() {
        let rule = quadrature(6)?;
        for e in 0..fe.num_elements() {
            let area = fe.geometry[e].area;
            for (b, w) in &rule.triangle {
                let x = fe.map_point(e, *b);
                let bx = beta(x);
                let wa = 2.0 * area * w;
                if let Some(f) = &data.force {
                    let fv = f(x);
                    check_finite2(fv, "volume force")?;
                    total += wa * (fv[0] * bx[0] + fv[1] * bx[1]);
                }
                if let Some(s) = &data.stress {
                    // ∇β = [[0, -1], [1, 0]]
                    let m = s(x);
                    total -= wa * (m[1][0] - m[0][1]);
                }
            }
        }
    }
    if let Some(h) = &data.boundary_force {
        let rule = boundary_rule();
        for (k, e) in fe.mesh.boundary_edges.iter().enumerate() {
            let len = fe.mesh.edge_length(e);
            for &(s, w) in &rule.segment {
                let x = fe.boundary_point(k, s);
                let hv = h(x, e.normal);
                let ht = hv[0] * e.tangent[0] + hv[1] * e.tangent[1];
                let bx = beta(x);
                total += len * w * ht * (bx[0] * e.tangent[0] + bx[1] * e.tangent[1]);
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_taylor_hood, interpolate_velocity, norms};
    use crate::mesh::{make_disk, make_unit_square};
    use crate::sparse::{dot, norm2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn square(n: usize) -> FeSystem {
        build_taylor_hood(&make_unit_square(n).unwrap())
    }

    #[test]
    fn viscous_kills_rigid_motions() {
        for fe in [square(4), build_taylor_hood(&make_disk(2, 1.0).unwrap())] {
            let a = assemble_viscous(&fe);
            let scale = a.max_abs();
            assert!(a.is_symmetric(1e-12));
            for field in [[1.0, 0.0], [0.0, 1.0]] {
                let c = interpolate_velocity(&fe, |_| field).unwrap();
                assert!(a.mul_vec(&c).iter().all(|v| v.abs() <= 1e-12 * scale));
            }
            let b = interpolate_velocity(&fe, beta).unwrap();
            assert!(a.mul_vec(&b).iter().all(|v| v.abs() <= 1e-12 * scale));
        }
    }

    #[test]
    fn viscous_energy_of_constant_strain() {
        let fe = square(3);
        let a = assemble_viscous(&fe);
        let u = interpolate_velocity(&fe, |x| [x[0], -x[1]]).unwrap();
        assert!((a.bilinear(&u, &u) - 4.0).abs() <= 1e-12);
    }

    #[test]
    fn viscous_nullspace_is_exactly_rigid_motions() {
        use nalgebra::SymmetricEigen;
        let fe = square(1);
        let a = assemble_viscous(&fe).to_dense();
        let eig = SymmetricEigen::new(a.clone());
        let scale = a.abs().max();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0] >= -1e-10 * scale);
        assert!(ev[2].abs() <= 1e-12 * scale);
        assert!(ev[3] > 1e-3 * scale);
    }

    #[test]
    fn viscous_matches_strain_norm() {
        // 2‖D(v)‖² computed by direct quadrature of the discrete field
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        let a = assemble_viscous(&fe);
        let rule = quadrature(4).unwrap();
        for s in 0..100 {
            let v = random_vec(fe.num_velocity_dofs(), s);
            let mut direct = 0.0;
            for e in 0..fe.num_elements() {
                for (b, w) in &rule.triangle {
                    let (_, g) = fe.eval_velocity(&v, e, *b);
                    let d01 = 0.5 * (g[0][1] + g[1][0]);
                    direct += 2.0 * fe.geometry[e].area * w * 2.0 * (g[0][0].powi(2) + g[1][1].powi(2) + 2.0 * d01 * d01);
                }
            }
            let q = a.bilinear(&v, &v);
            assert!((q - direct).abs() <= 1e-12 * direct, "{q} vs {direct}");
        }
    }

    #[test]
    fn friction_zero_and_negative() {
        let fe = square(2);
        assert_eq!(assemble_friction(&fe, &Alpha::Constant(0.0)).unwrap().max_abs(), 0.0);
        assert!(matches!(assemble_friction(&fe, &Alpha::Constant(-1.0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn friction_of_rotation_on_disk() {
        use std::f64::consts::PI;
        for level in 1..5 {
            let mesh = make_disk(level, 1.0).unwrap();
            let fe = build_taylor_hood(&mesh);
            let m = assemble_friction(&fe, &Alpha::Constant(1.0)).unwrap();
            assert!(m.is_symmetric(1e-12));
            let b = interpolate_velocity(&fe, beta).unwrap();
            let q = m.bilinear(&b, &b);
            // β·τ_e = cos(π/m) on every chord; oracle Σ|e| cos²(π/m)
            let sides = mesh.boundary_edges.len() as f64;
            let oracle = mesh.perimeter() * (PI / sides).cos().powi(2);
            assert!((q - oracle).abs() <= 1e-13 * oracle);
            assert!((q - 2.0 * PI).abs() < 2.0 * PI * 1.5 * (PI / sides).powi(2));
        }
    }

    #[test]
    fn friction_on_one_side() {
        // α = 2 on the bottom only: uᵀMu = 2∫_0^1 u₁(x,0)² dx
        let fe = square(4);
        let m = assemble_friction(&fe, &Alpha::PerMarker(vec![2.0])).unwrap();
        let u = interpolate_velocity(&fe, |x| [x[0] * x[0] + 1.0 + x[1], 3.0 * x[0]]).unwrap();
        // ∫ (x²+1)² = 1/5 + 2/3 + 1
        let oracle = 2.0 * (0.2 + 2.0 / 3.0 + 1.0);
        assert!((m.bilinear(&u, &u) - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn friction_is_psd() {
        use nalgebra::SymmetricEigen;
        let fe = build_taylor_hood(&make_disk(1, 1.0).unwrap());
        let m = assemble_friction(&fe, &Alpha::Field(Arc::new(|x, _| 1.0 + x[0] * x[0]))).unwrap().to_dense();
        let scale = m.abs().max();
        let ev = SymmetricEigen::new(m).eigenvalues;
        assert!(ev.iter().all(|&l| l >= -1e-10 * scale));
    }

    #[test]
    fn divergence_coupling() {
        let fe = square(3);
        let b = assemble_div(&fe);
        let scale = b.max_abs();
        let rot = interpolate_velocity(&fe, beta).unwrap();
        assert!(b.mul_vec(&rot).iter().all(|v| v.abs() <= 1e-12 * scale));
        let strain = interpolate_velocity(&fe, |x| [x[0], -x[1]]).unwrap();
        assert!(b.mul_vec(&strain).iter().all(|v| v.abs() <= 1e-12 * scale));
        let radial = interpolate_velocity(&fe, |x| [x[0], x[1]]).unwrap();
        let br = b.mul_vec(&radial);
        let m = pressure_mean_vector(&fe);
        for s in 0..5 {
            let q = random_vec(fe.num_pressure_dofs(), 100 + s);
            assert!((dot(&q, &br) - 2.0 * dot(&q, &m)).abs() <= 1e-13);
        }
    }

    #[test]
    fn load_cases() {
        let fe = square(3);
        let zero = assemble_load(&fe, &ProblemData::new(1.0)).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let ex = ProblemData::new(1.0).with_force(|_| [1.0, 0.0]);
        let one = interpolate_velocity(&fe, |_| [1.0, 0.0]).unwrap();
        assert!((dot(&assemble_load(&fe, &ex).unwrap(), &one) - 1.0).abs() <= 1e-14);
        // F = I: ℓᵀv = −∫ div v = −1ᵀ B v
        let id = ProblemData::new(1.0).with_stress(|_| [[1.0, 0.0], [0.0, 1.0]]);
        let l = assemble_load(&fe, &id).unwrap();
        let b = assemble_div(&fe);
        let ones = vec![1.0; fe.num_pressure_dofs()];
        for s in 0..5 {
            let v = random_vec(fe.num_velocity_dofs(), 200 + s);
            assert!((dot(&l, &v) + b.bilinear(&ones, &v)).abs() <= 1e-13);
        }
    }

    #[test]
    fn load_rejects_non_finite() {
        let fe = square(2);
        let bad = ProblemData::new(1.0).with_force(|x| [1.0 / (x[0] - x[0]), 0.0]);
        assert!(matches!(assemble_load(&fe, &bad), Err(Error::Numerical(_))));
    }

    #[test]
    fn load_is_linear() {
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        let d1 = ProblemData::new(1.0)
            .with_force(|x| [x[1].sin(), x[0] * x[1]])
            .with_stress(|x| [[x[0], 1.0], [x[1] * x[1], -2.0]])
            .with_boundary_force(|x, n| [x[0] + n[1], 2.0]);
        let d2 = ProblemData::new(1.0).with_force(|x| [1.0, x[0].exp()]).with_boundary_force(|x, _| [x[1], x[0]]);
        let l1 = assemble_load(&fe, &d1).unwrap();
        let l2 = assemble_load(&fe, &d2).unwrap();
        let l = assemble_load(&fe, &d1.scaled(2.0).plus(&d2.scaled(-3.0))).unwrap();
        let scale = norm2(&l1) + norm2(&l2);
        for i in 0..l.len() {
            assert!((l[i] - (2.0 * l1[i] - 3.0 * l2[i])).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn boundary_load_is_tangential() {
        // a purely normal h contributes nothing
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        let d = ProblemData::new(1.0).with_boundary_force(|_, n| [3.0 * n[0], 3.0 * n[1]]);
        assert!(assemble_load(&fe, &d).unwrap().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn convection_is_exactly_skew() {
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        for s in 0..5 {
            let w = random_vec(fe.num_velocity_dofs(), 300 + s);
            let c = assemble_convection_skew(&fe, &w).unwrap();
            assert_eq!(c.add_scaled(1.0, &c.transpose(), 1.0).max_abs(), 0.0);
            for t in 0..20 {
                let v = random_vec(fe.num_velocity_dofs(), 400 + 20 * s + t);
                let abs_form: f64 =
                    (0..c.nrows).map(|i| v[i].abs() * c.row(i).map(|(j, x)| x.abs() * v[j].abs()).sum::<f64>()).sum();
                assert!(c.bilinear(&v, &v).abs() <= 1e-12 * abs_form);
            }
        }
        let zero = assemble_convection_skew(&fe, &vec![0.0; fe.num_velocity_dofs()]).unwrap();
        assert_eq!(zero.nnz(), 0);
    }

    #[test]
    fn convection_matches_closed_form() {
        // u polynomial of degree ≤ 2 is represented exactly; compare with direct
        // quadrature of ½[(β·∇)β·u − (β·∇)u·β], (β·∇)β = −x.
        let fe = build_taylor_hood(&make_disk(1, 1.0).unwrap());
        let b = interpolate_velocity(&fe, beta).unwrap();
        let c = assemble_convection_skew(&fe, &b).unwrap();
        let field = |x: Point| [x[0] * x[1] + 1.0, x[0] * x[0] - x[1]];
        let grad = |x: Point| [[x[1], x[0]], [2.0 * x[0], -1.0]];
        let u = interpolate_velocity(&fe, field).unwrap();
        let rule = quadrature(6).unwrap();
        let mut oracle = 0.0;
        for e in 0..fe.num_elements() {
            for (bc, w) in &rule.triangle {
                let x = fe.map_point(e, *bc);
                let (bv, uv, g) = (beta(x), field(x), grad(x));
                let bgrad_u = [g[0][0] * bv[0] + g[0][1] * bv[1], g[1][0] * bv[0] + g[1][1] * bv[1]];
                let term = -(x[0] * uv[0] + x[1] * uv[1]) - (bgrad_u[0] * bv[0] + bgrad_u[1] * bv[1]);
                oracle += 2.0 * fe.geometry[e].area * w * 0.5 * term;
            }
        }
        let val = c.bilinear(&u, &b);
        assert!((val - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "{val} vs {oracle}");
    }

    #[test]
    fn assembly_is_thread_count_independent() {
        let fe = square(6);
        let a1 = par::with_threads(1, || assemble_viscous(&fe));
        let a4 = par::with_threads(4, || assemble_viscous(&fe));
        assert_eq!(a1, a4);
    }

    #[test]
    fn strain_norm_consistent_with_norms_module() {
        // ‖D(u)‖² ≤ |u|²_{H¹}, equality for symmetric gradients
        let fe = square(2);
        let a = assemble_viscous(&fe);
        let u = interpolate_velocity(&fe, |x| [x[0] + x[1], x[0] - x[1]]).unwrap();
        let n = norms(&fe, &u).unwrap();
        assert!((0.5 * a.bilinear(&u, &u) - n.h1_semi.powi(2)).abs() <= 1e-12);
    }
}
