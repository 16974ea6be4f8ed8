//! Taylor–Hood P2/P1 spaces on a [`TriMesh`].
//!
//! Velocity nodes are the mesh vertices followed by the edge midpoints; the
//! velocity DOF of component `c` at node `a` is `2a + c`. Pressure DOFs are the
//! vertices.

use std::collections::HashMap;
use std::sync::Arc;

use crate::mesh::{boundary_frames, BoundaryFrameTable, NodeFrame, TriMesh};
use crate::quadrature::{quadrature, QuadratureRule};
use crate::{par, Error, Point, Result};

/// Velocity gradient, `g[i][j] = ∂_j u_i`.
pub type Grad = [[f64; 2]; 2];

#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub area: f64,
    pub grad_bary: [Point; 3],
}

#[derive(Clone, Copy, Debug)]
pub struct BoundaryNode {
    pub node: usize,
    pub frame: NodeFrame,
}

#[derive(Clone, Debug)]
pub struct FeSystem {
    pub mesh: Arc<TriMesh>,
    pub frames: BoundaryFrameTable,
    /// Unique mesh edges (sorted vertex pairs).
    pub edges: Vec<[usize; 2]>,
    /// Velocity nodes of each element: 3 vertices, then midpoints of edges
    /// (0,1), (1,2), (2,0).
    pub element_nodes: Vec<[usize; 6]>,
    pub geometry: Vec<ElementGeometry>,
    pub node_coords: Vec<Point>,
    /// Velocity nodes of each boundary edge: start, end, midpoint.
    pub boundary_edge_nodes: Vec<[usize; 3]>,
    pub boundary_nodes: Vec<BoundaryNode>,
}

impl FeSystem {
    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_velocity_dofs(&self) -> usize {
        2 * self.node_coords.len()
    }

    pub fn num_pressure_dofs(&self) -> usize {
        self.mesh.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.element_nodes.len()
    }

    /// Global velocity DOFs of an element, ordered `[node0.x, node0.y, node1.x, ...]`.
    pub fn element_velocity_dofs(&self, e: usize) -> [usize; 12] {
        let n = &self.element_nodes[e];
        let mut d = [0; 12];
        for a in 0..6 {
            d[2 * a] = 2 * n[a];
            d[2 * a + 1] = 2 * n[a] + 1;
        }
        d
    }

    pub fn element_pressure_dofs(&self, e: usize) -> [usize; 3] {
        self.mesh.triangles[e]
    }

    /// Physical point of barycentric coordinates `bary` in element `e`.
    pub fn map_point(&self, e: usize, bary: [f64; 3]) -> Point {
        let t = self.mesh.triangles[e];
        let v = &self.mesh.vertices;
        [
            bary[0] * v[t[0]][0] + bary[1] * v[t[1]][0] + bary[2] * v[t[2]][0],
            bary[0] * v[t[0]][1] + bary[1] * v[t[1]][1] + bary[2] * v[t[2]][1],
        ]
    }

    /// Point at parameter `s ∈ [0, 1]` along boundary edge `k`.
    pub fn boundary_point(&self, k: usize, s: f64) -> Point {
        let e = &self.mesh.boundary_edges[k];
        let (a, b) = (self.mesh.vertices[e.vertices[0]], self.mesh.vertices[e.vertices[1]]);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }

    /// Velocity value and gradient at a barycentric point of element `e`.
    pub fn eval_velocity(&self, coeffs: &[f64], e: usize, bary: [f64; 3]) -> (Point, Grad) {
        let (phi, dphi) = p2_basis(bary, &self.geometry[e].grad_bary);
        let nodes = &self.element_nodes[e];
        let mut u = [0.0; 2];
        let mut g = [[0.0; 2]; 2];
        for a in 0..6 {
            for c in 0..2 {
                let v = coeffs[2 * nodes[a] + c];
                u[c] += v * phi[a];
                g[c][0] += v * dphi[a][0];
                g[c][1] += v * dphi[a][1];
            }
        }
        (u, g)
    }

    pub fn eval_pressure(&self, coeffs: &[f64], e: usize, bary: [f64; 3]) -> f64 {
        let t = self.mesh.triangles[e];
        bary[0] * coeffs[t[0]] + bary[1] * coeffs[t[1]] + bary[2] * coeffs[t[2]]
    }

    /// Vorticity ω = ∂₁u₂ − ∂₂u₁ at a barycentric point.
    pub fn vorticity_at(&self, coeffs: &[f64], e: usize, bary: [f64; 3]) -> f64 {
        let (_, g) = self.eval_velocity(coeffs, e, bary);
        g[1][0] - g[0][1]
    }

    /// Velocity trace at parameter `s` along boundary edge `k`.
    pub fn eval_boundary_velocity(&self, coeffs: &[f64], k: usize, s: f64) -> Point {
        let shape = p2_segment(s);
        let nodes = &self.boundary_edge_nodes[k];
        let mut u = [0.0; 2];
        for a in 0..3 {
            u[0] += shape[a] * coeffs[2 * nodes[a]];
            u[1] += shape[a] * coeffs[2 * nodes[a] + 1];
        }
        u
    }

    fn check_velocity_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.num_velocity_dofs() {
            return Err(Error::invalid(format!(
                "velocity vector has length {}, space has {} DOFs",
                coeffs.len(),
                self.num_velocity_dofs()
            )));
        }
        Ok(())
    }

    fn check_pressure_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.num_pressure_dofs() {
            return Err(Error::invalid(format!(
                "pressure vector has length {}, space has {} DOFs",
                coeffs.len(),
                self.num_pressure_dofs()
            )));
        }
        Ok(())
    }
}

/// P2 basis values and gradients at barycentric point `b`.
pub fn p2_basis(b: [f64; 3], dl: &[Point; 3]) -> ([f64; 6], [Point; 6]) {
    let mut phi = [0.0; 6];
    let mut dphi = [[0.0; 2]; 6];
    for i in 0..3 {
        phi[i] = b[i] * (2.0 * b[i] - 1.0);
        let s = 4.0 * b[i] - 1.0;
        dphi[i] = [s * dl[i][0], s * dl[i][1]];
    }
    for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
        phi[3 + k] = 4.0 * b[i] * b[j];
        dphi[3 + k] = [
            4.0 * (b[i] * dl[j][0] + b[j] * dl[i][0]),
            4.0 * (b[i] * dl[j][1] + b[j] * dl[i][1]),
        ];
    }
    (phi, dphi)
}

/// 1D quadratic shape functions on an edge: start, end, midpoint.
#[inline]
pub fn p2_segment(s: f64) -> [f64; 3] {
    [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
}

fn element_geometry(p: [Point; 3]) -> ElementGeometry {
    let two_a = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let inv = 1.0 / two_a;
    ElementGeometry {
        area: 0.5 * two_a,
        grad_bary: [
            [(p[1][1] - p[2][1]) * inv, (p[2][0] - p[1][0]) * inv],
            [(p[2][1] - p[0][1]) * inv, (p[0][0] - p[2][0]) * inv],
            [(p[0][1] - p[1][1]) * inv, (p[1][0] - p[0][0]) * inv],
        ],
    }
}

pub fn build_taylor_hood(mesh: &TriMesh) -> FeSystem {
    let nv = mesh.vertices.len();
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut element_nodes = Vec::with_capacity(mesh.triangles.len());
    let mut geometry = Vec::with_capacity(mesh.triangles.len());
    for tri in &mesh.triangles {
        let mut nodes = [tri[0], tri[1], tri[2], 0, 0, 0];
        for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            let key = (tri[i].min(tri[j]), tri[i].max(tri[j]));
            let id = *edge_ids.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                edges.len() - 1
            });
            nodes[3 + k] = nv + id;
        }
        element_nodes.push(nodes);
        geometry.push(element_geometry([mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]]));
    }
    let mut node_coords = mesh.vertices.clone();
    node_coords.extend(edges.iter().map(|&[a, b]| {
        let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }));
    let frames = boundary_frames(mesh);
    let boundary_edge_nodes: Vec<[usize; 3]> = mesh
        .boundary_edges
        .iter()
        .map(|e| {
            let [a, b] = e.vertices;
            let id = edge_ids[&(a.min(b), a.max(b))];
            [a, b, nv + id]
        })
        .collect();
    let mut boundary_nodes: Vec<BoundaryNode> =
        frames.vertex_frames.iter().map(|&(v, frame)| BoundaryNode { node: v, frame }).collect();
    boundary_nodes.extend(
        boundary_edge_nodes.iter().zip(&frames.edge_frames).map(|(n, &frame)| BoundaryNode { node: n[2], frame }),
    );
    FeSystem {
        mesh: Arc::new(mesh.clone()),
        frames,
        edges,
        element_nodes,
        geometry,
        node_coords,
        boundary_edge_nodes,
        boundary_nodes,
    }
}

/// Nodal interpolant of a vector field into the velocity space.
pub fn interpolate_velocity(fe: &FeSystem, field: impl Fn(Point) -> Point) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(fe.num_velocity_dofs());
    for (a, &x) in fe.node_coords.iter().enumerate() {
        let v = field(x);
        if !(v[0].is_finite() && v[1].is_finite()) {
            return Err(Error::numerical(format!("non-finite field value at velocity node {a}")));
        }
        out.extend_from_slice(&v);
    }
    Ok(out)
}

/// Nodal interpolant of a scalar field into the pressure space.
pub fn interpolate_pressure(fe: &FeSystem, field: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    fe.mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(a, &x)| {
            let v = field(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::numerical(format!("non-finite field value at pressure node {a}")))
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub boundary_l2_tangential: f64,
    pub divergence_l2: f64,
    pub vorticity_l2: f64,
}

impl Norms {
    pub fn h1(&self) -> f64 {
        self.l2.hypot(self.h1_semi)
    }
}

/// Norms of a discrete velocity field (order-4 quadrature, exact for P2).
pub fn norms(fe: &FeSystem, coeffs: &[f64]) -> Result<Norms> {
    fe.check_velocity_len(coeffs)?;
    let rule = quadrature(4)?;
    let parts = par::map_range(fe.num_elements(), |e| {
        let area = fe.geometry[e].area;
        let mut acc = [0.0; 4];
        for (b, w) in &rule.triangle {
            let (u, g) = fe.eval_velocity(coeffs, e, *b);
            let wa = 2.0 * area * w;
            acc[0] += wa * (u[0] * u[0] + u[1] * u[1]);
            acc[1] += wa * (g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]);
            let div = g[0][0] + g[1][1];
            acc[2] += wa * div * div;
            let omega = g[1][0] - g[0][1];
            acc[3] += wa * omega * omega;
        }
        acc
    });
    let mut tot = [0.0; 4];
    for p in &parts {
        for k in 0..4 {
            tot[k] += p[k];
        }
    }
    let bnd = boundary_tangential_sq(fe, coeffs, &rule);
    Ok(Norms {
        l2: tot[0].sqrt(),
        h1_semi: tot[1].sqrt(),
        boundary_l2_tangential: bnd.sqrt(),
        divergence_l2: tot[2].sqrt(),
        vorticity_l2: tot[3].sqrt(),
    })
}

fn boundary_tangential_sq(fe: &FeSystem, coeffs: &[f64], rule: &QuadratureRule) -> f64 {
    let mut s = 0.0;
    for (k, e) in fe.mesh.boundary_edges.iter().enumerate() {
        let len = fe.mesh.edge_length(e);
        for &(t, w) in &rule.segment {
            let u = fe.eval_boundary_velocity(coeffs, k, t);
            let ut = u[0] * e.tangent[0] + u[1] * e.tangent[1];
            s += len * w * ut * ut;
        }
    }
    s
}

/// `∫_Γ u·β ds` with β(x) = (−x₂, x₁).
pub fn boundary_beta_moment(fe: &FeSystem, coeffs: &[f64]) -> Result<f64> {
    fe.check_velocity_len(coeffs)?;
    let rule = quadrature(4)?;
    let mut s = 0.0;
    for (k, e) in fe.mesh.boundary_edges.iter().enumerate() {
        let len = fe.mesh.edge_length(e);
        for &(t, w) in &rule.segment {
            let x = fe.boundary_point(k, t);
            let u = fe.eval_boundary_velocity(coeffs, k, t);
            s += len * w * (-x[1] * u[0] + x[0] * u[1]);
        }
    }
    Ok(s)
}

/// `(‖u − u_h‖_{L²}, |u − u_h|_{H¹})` against a closed-form field returning
/// value and gradient; order-6 quadrature.
pub fn velocity_error(
    fe: &FeSystem,
    coeffs: &[f64],
    exact: impl Fn(Point) -> (Point, Grad) + Sync + Send,
) -> Result<(f64, f64)> {
    fe.check_velocity_len(coeffs)?;
    let rule = quadrature(6)?;
    let parts = par::map_range(fe.num_elements(), |e| {
        let area = fe.geometry[e].area;
        let mut acc = [0.0; 2];
        for (b, w) in &rule.triangle {
            let (u, g) = fe.eval_velocity(coeffs, e, *b);
            let (ue, ge) = exact(fe.map_point(e, *b));
            let wa = 2.0 * area * w;
            acc[0] += wa * ((u[0] - ue[0]).powi(2) + (u[1] - ue[1]).powi(2));
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += (g[i][j] - ge[i][j]).powi(2);
                }
            }
            acc[1] += wa * s;
        }
        acc
    });
    let (l2, h1) = parts.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
    Ok((l2.sqrt(), h1.sqrt()))
}

/// `‖π − π_h‖_{L²}` against a closed-form pressure (order-6 quadrature).
pub fn pressure_error(fe: &FeSystem, coeffs: &[f64], exact: impl Fn(Point) -> f64 + Sync + Send) -> Result<f64> {
    fe.check_pressure_len(coeffs)?;
    let rule = quadrature(6)?;
    let s = par::ordered_sum(fe.num_elements(), |e| {
        let area = fe.geometry[e].area;
        rule.triangle
            .iter()
            .map(|(b, w)| 2.0 * area * w * (fe.eval_pressure(coeffs, e, *b) - exact(fe.map_point(e, *b))).powi(2))
            .sum::<f64>()
    });
    Ok(s.sqrt())
}

pub fn pressure_l2(fe: &FeSystem, coeffs: &[f64]) -> Result<f64> {
    pressure_error(fe, coeffs, |_| 0.0)
}

/// `∫_Ω π_h` (exact for P1).
pub fn pressure_integral(fe: &FeSystem, coeffs: &[f64]) -> Result<f64> {
    fe.check_pressure_len(coeffs)?;
    Ok((0..fe.num_elements())
        .map(|e| {
            let t = fe.mesh.triangles[e];
            fe.geometry[e].area * (coeffs[t[0]] + coeffs[t[1]] + coeffs[t[2]]) / 3.0
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_disk, make_unit_square};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dof_counts() {
        let fe = build_taylor_hood(&make_unit_square(1).unwrap());
        assert_eq!(fe.edges.len(), 5);
        assert_eq!((fe.num_velocity_dofs(), fe.num_pressure_dofs()), (18, 4));
        let fe = build_taylor_hood(&make_unit_square(2).unwrap());
        assert_eq!(fe.edges.len(), 16);
        assert_eq!(fe.num_velocity_dofs(), 50);
        let fe = build_taylor_hood(&make_disk(0, 1.0).unwrap());
        assert_eq!(fe.edges.len(), 12);
        assert_eq!(fe.num_pressure_dofs(), 7);
    }

    #[test]
    fn element_maps_are_injective() {
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        for e in 0..fe.num_elements() {
            let mut d = fe.element_velocity_dofs(e).to_vec();
            d.sort_unstable();
            d.dedup();
            assert_eq!(d.len(), 12);
            assert!(d.iter().all(|&i| i < fe.num_velocity_dofs()));
        }
    }

    #[test]
    fn constant_interpolation() {
        let fe = build_taylor_hood(&make_unit_square(3).unwrap());
        let u = interpolate_velocity(&fe, |_| [1.0, 2.0]).unwrap();
        assert!(u.chunks(2).all(|c| c == [1.0, 2.0]));
    }

    #[test]
    fn interpolation_rejects_non_finite() {
        let fe = build_taylor_hood(&make_unit_square(2).unwrap());
        let r = interpolate_velocity(&fe, |x| [1.0 / (x[0] - 0.5), 0.0]);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }

    #[test]
    fn nodal_match_of_smooth_field() {
        let fe = build_taylor_hood(&make_disk(2, 1.0).unwrap());
        let f = |x: Point| [(3.0 * x[0]).sin(), (x[1] * x[0]).cos()];
        let u = interpolate_velocity(&fe, f).unwrap();
        for (a, &x) in fe.node_coords.iter().enumerate() {
            let v = f(x);
            assert!((u[2 * a] - v[0]).abs() <= 1e-15 && (u[2 * a + 1] - v[1]).abs() <= 1e-15);
        }
    }

    #[test]
    fn rotation_is_reproduced_exactly() {
        let beta = |x: Point| [-x[1], x[0]];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for mesh in [make_unit_square(5).unwrap(), make_disk(2, 1.4).unwrap()] {
            let fe = build_taylor_hood(&mesh);
            let u = interpolate_velocity(&fe, beta).unwrap();
            for _ in 0..200 {
                let e = rng.random_range(0..fe.num_elements());
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                let bary = if a + b < 1.0 { [1.0 - a - b, a, b] } else { [a + b - 1.0, 1.0 - a, 1.0 - b] };
                let (v, g) = fe.eval_velocity(&u, e, bary);
                let ex = beta(fe.map_point(e, bary));
                assert!((v[0] - ex[0]).abs() <= 1e-13 && (v[1] - ex[1]).abs() <= 1e-13);
                assert!((g[0][1] + 1.0).abs() <= 1e-12 && (g[1][0] - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn norms_of_pure_strain() {
        let fe = build_taylor_hood(&make_unit_square(4).unwrap());
        let u = interpolate_velocity(&fe, |x| [x[0], -x[1]]).unwrap();
        let n = norms(&fe, &u).unwrap();
        assert!(n.divergence_l2 <= 1e-13);
        assert!((n.h1_semi - 2f64.sqrt()).abs() <= 1e-13);
        let zero = norms(&fe, &vec![0.0; u.len()]).unwrap();
        assert_eq!(zero, Norms::default());
    }

    #[test]
    fn polynomial_reproduction_in_norms() {
        // u = (x² + y, xy - 1): ‖u‖², |u|²_{H¹} in closed form on the unit square
        let fe = build_taylor_hood(&make_unit_square(3).unwrap());
        let u = interpolate_velocity(&fe, |x| [x[0] * x[0] + x[1], x[0] * x[1] - 1.0]).unwrap();
        let n = norms(&fe, &u).unwrap();
        // ∫(x²+y)² = 1/5 + 1/3 + 1/3 ; ∫(xy-1)² = 1/9 - 1/2 + 1
        let l2sq = 1.0 / 5.0 + 2.0 / 6.0 + 1.0 / 3.0 + 1.0 / 9.0 - 0.5 + 1.0;
        // |∇u|² = 4x² + 1 + y² + x²
        let h1sq = 5.0 / 3.0 + 1.0 + 1.0 / 3.0;
        assert!((n.l2 * n.l2 - l2sq).abs() <= 1e-12 * l2sq);
        assert!((n.h1_semi * n.h1_semi - h1sq).abs() <= 1e-12 * h1sq);
        // div = 2x + x = 3x; ω = y - 1
        assert!((n.divergence_l2.powi(2) - 3.0).abs() <= 1e-12 * 3.0);
        assert!((n.vorticity_l2.powi(2) - 1.0 / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn rotation_boundary_norm_on_disk() {
        // oracle: Σ_e |e| Σ_g w_g (β·τ_e)² with the exact segment points
        for level in 1..5 {
            let mesh = make_disk(level, 1.0).unwrap();
            let fe = build_taylor_hood(&mesh);
            let u = interpolate_velocity(&fe, |x| [-x[1], x[0]]).unwrap();
            let computed = norms(&fe, &u).unwrap().boundary_l2_tangential.powi(2);
            let mut oracle = 0.0;
            let gauss = [(0.5 - 0.5 / 3f64.sqrt(), 0.5), (0.5 + 0.5 / 3f64.sqrt(), 0.5)];
            for e in &mesh.boundary_edges {
                let (a, b) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                for (s, w) in gauss {
                    let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                    let bt = -x[1] * e.tangent[0] + x[0] * e.tangent[1];
                    oracle += len * w * bt * bt;
                }
            }
            assert!((computed - oracle).abs() <= 1e-13 * oracle);
            // β·τ_e = x·n_e = cos(π/m) along each chord of the unit circle
            let m = mesh.boundary_edges.len() as f64;
            let closed = 2.0 * m * (std::f64::consts::PI / m).sin() * (std::f64::consts::PI / m).cos().powi(2);
            assert!((computed - closed).abs() <= 1e-13 * closed);
        }
        let defect = |l| 2.0 * std::f64::consts::PI - {
            let fe = build_taylor_hood(&make_disk(l, 1.0).unwrap());
            let u = interpolate_velocity(&fe, |x| [-x[1], x[0]]).unwrap();
            norms(&fe, &u).unwrap().boundary_l2_tangential.powi(2)
        };
        let r = defect(3) / defect(4);
        assert!(r > 3.9 && r < 4.1);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let fe = build_taylor_hood(&make_unit_square(2).unwrap());
        assert!(matches!(norms(&fe, &[0.0; 3]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn norms_are_thread_count_independent() {
        let fe = build_taylor_hood(&make_disk(3, 1.0).unwrap());
        let u = interpolate_velocity(&fe, |x| [(5.0 * x[1]).sin(), x[0].exp()]).unwrap();
        let a = par::with_threads(1, || norms(&fe, &u).unwrap());
        let b = par::with_threads(3, || norms(&fe, &u).unwrap());
        assert_eq!(a.h1_semi.to_bits(), b.h1_semi.to_bits());
        assert_eq!(a.l2.to_bits(), b.l2.to_bits());
    }
}
