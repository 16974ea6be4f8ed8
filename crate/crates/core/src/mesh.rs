//! Triangular meshes of the unit square and of polygonal disks, boundary
//! frames, and the line-oriented text format.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Point, Result};

pub const MESH_HEADER: &str = "navier-slip-mesh v1";

/// Angle tolerance (radians) used to flag genuine corners.
pub const CORNER_ANGLE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainTag {
    Square,
    Disk { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    /// Oriented so that the domain lies on the left.
    pub vertices: [usize; 2],
    pub marker: u32,
    pub normal: Point,
    pub tangent: Point,
    pub curvature: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub domain: DomainTag,
}

/// Unit normal/tangent at a boundary velocity node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeFrame {
    pub normal: Point,
    pub tangent: Point,
    pub corner: bool,
}

/// Frames at boundary vertices and boundary edge midpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFrameTable {
    /// Sorted by vertex index.
    pub vertex_frames: Vec<(usize, NodeFrame)>,
    /// One per entry of `TriMesh::boundary_edges`, at the edge midpoint.
    pub edge_frames: Vec<NodeFrame>,
}

impl BoundaryFrameTable {
    pub fn vertex_frame(&self, v: usize) -> Option<&NodeFrame> {
        self.vertex_frames
            .binary_search_by_key(&v, |(i, _)| *i)
            .ok()
            .map(|k| &self.vertex_frames[k].1)
    }

    pub fn corner_count(&self) -> usize {
        self.vertex_frames.iter().filter(|(_, f)| f.corner).count()
    }
}

#[inline]
pub(crate) fn rot90(v: Point) -> Point {
    [-v[1], v[0]]
}

#[inline]
fn normalize(v: Point) -> Point {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

#[inline]
pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_from(vertices: &[Point], i: usize, j: usize, marker: u32, curvature: f64) -> BoundaryEdge {
    let (a, b) = (vertices[i], vertices[j]);
    let tangent = normalize([b[0] - a[0], b[1] - a[1]]);
    let normal = [tangent[1], -tangent[0]];
    BoundaryEdge { vertices: [i, j], marker, normal, tangent, curvature }
}

/// Structured triangulation of [0,1]² with `n` cells per side. Cell diagonals
/// alternate in a checkerboard pattern.
pub fn make_unit_square(n: usize) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::invalid("unit square needs at least one subdivision"));
    }
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let mut boundary_edges = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary_edges.push(edge_from(&vertices, idx(i, 0), idx(i + 1, 0), 1, 0.0));
    }
    for j in 0..n {
        boundary_edges.push(edge_from(&vertices, idx(n, j), idx(n, j + 1), 2, 0.0));
    }
    for i in (0..n).rev() {
        boundary_edges.push(edge_from(&vertices, idx(i + 1, n), idx(i, n), 3, 0.0));
    }
    for j in (0..n).rev() {
        boundary_edges.push(edge_from(&vertices, idx(0, j + 1), idx(0, j), 4, 0.0));
    }
    Ok(TriMesh { vertices, triangles, boundary_edges, domain: DomainTag::Square })
}

/// Polygonal disk of radius `radius` with `6·2^level` boundary vertices on the
/// circle. The interior is a ring lattice: ring `r` carries `6r` equally spaced
/// vertices on the circle of radius `radius·r/N`, `N = 2^level`.
pub fn make_disk(level: u32, radius: f64) -> Result<TriMesh> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
    }
    if level > 12 {
        return Err(Error::invalid(format!("disk level {level} is too large")));
    }
    let rings = 1usize << level;
    let ring_offset = |r: usize| if r == 0 { 0 } else { 1 + 3 * r * (r - 1) };
    let mut vertices = Vec::with_capacity(ring_offset(rings + 1));
    vertices.push([0.0, 0.0]);
    for r in 1..=rings {
        let rad = radius * r as f64 / rings as f64;
        let count = 6 * r;
        for k in 0..count {
            let theta = 2.0 * PI * k as f64 / count as f64;
            vertices.push([rad * theta.cos(), rad * theta.sin()]);
        }
    }
    let vid = |sector: usize, r: usize, t: usize| -> usize {
        if r == 0 {
            0
        } else {
            ring_offset(r) + (sector * r + t) % (6 * r)
        }
    };
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for s in 0..6 {
        for r in 0..rings {
            for t in 0..=r {
                triangles.push([vid(s, r, t), vid(s, r + 1, t), vid(s, r + 1, t + 1)]);
            }
            for t in 0..r {
                triangles.push([vid(s, r, t), vid(s, r + 1, t + 1), vid(s, r, t + 1)]);
            }
        }
    }
    let m = 6 * rings;
    let start = ring_offset(rings);
    let kappa = 1.0 / radius;
    let boundary_edges = (0..m)
        .map(|k| {
            let (i, j) = (start + k, start + (k + 1) % m);
            let mut e = edge_from(&vertices, i, j, 1, kappa);
            let mid = [0.5 * (vertices[i][0] + vertices[j][0]), 0.5 * (vertices[i][1] + vertices[j][1])];
            e.normal = normalize(mid);
            e.tangent = rot90(e.normal);
            e
        })
        .collect();
    Ok(TriMesh { vertices, triangles, boundary_edges, domain: DomainTag::Disk { radius } })
}

impl TriMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let (a, b) = (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_edges.iter().map(|e| self.edge_length(e)).sum()
    }

    /// Longest edge over all triangles.
    pub fn mesh_size(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (self.vertices[tri[k]], self.vertices[tri[(k + 1) % 3]]);
                h = h.max((b[0] - a[0]).hypot(b[1] - a[1]));
            }
        }
        h
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut best = f64::INFINITY;
        for tri in &self.triangles {
            for k in 0..3 {
                let p = self.vertices[tri[k]];
                let q = self.vertices[tri[(k + 1) % 3]];
                let r = self.vertices[tri[(k + 2) % 3]];
                let u = [q[0] - p[0], q[1] - p[1]];
                let v = [r[0] - p[0], r[1] - p[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        best
    }

    pub fn is_axisymmetric(&self) -> bool {
        matches!(self.domain, DomainTag::Disk { .. })
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let nv = self.vertices.len();
        if nv == 0 {
            return Err("mesh has no vertices".into());
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(format!("triangle {t} references a missing vertex"));
            }
            if !(self.triangle_area(t) > 0.0) {
                return Err(format!("triangle {t} has non-positive signed area"));
            }
        }
        // each boundary edge must belong to exactly one triangle, with matching orientation
        let mut half: std::collections::HashMap<(usize, usize), usize> = std::collections::HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *half.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (k, e) in self.boundary_edges.iter().enumerate() {
            let [a, b] = e.vertices;
            if a >= nv || b >= nv {
                return Err(format!("boundary edge {k} references a missing vertex"));
            }
            if half.get(&(a, b)) != Some(&1) || half.contains_key(&(b, a)) {
                return Err(format!("boundary edge {k} is not a boundary half-edge of exactly one triangle"));
            }
            let nn = e.normal[0].hypot(e.normal[1]);
            if (nn - 1.0).abs() > 1e-12 {
                return Err(format!("boundary edge {k} normal is not unit"));
            }
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let dir = [pb[0] - pa[0], pb[1] - pa[1]];
            if dir[0] * e.normal[1] - dir[1] * e.normal[0] >= 0.0 {
                return Err(format!("boundary edge {k} normal does not point outward"));
            }
        }
        // closed loops: every boundary vertex has one outgoing and one incoming edge
        let mut out_deg = vec![0u32; nv];
        let mut in_deg = vec![0u32; nv];
        for e in &self.boundary_edges {
            out_deg[e.vertices[0]] += 1;
            in_deg[e.vertices[1]] += 1;
        }
        if out_deg.iter().zip(&in_deg).any(|(o, i)| o != i || *o > 1) {
            return Err("boundary edges do not form closed simple loops".into());
        }
        Ok(())
    }

    /// Writes the canonical text representation.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MESH_HEADER}");
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.16e} {:.16e}", v[0], v[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let _ = writeln!(
                s,
                "{} {} {} {:.16e} {:.16e} {:.16e}",
                e.vertices[0], e.vertices[1], e.marker, e.normal[0], e.normal[1], e.curvature
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<TriMesh> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines.next().ok_or_else(|| Error::Parse { line: 0, message: format!("unexpected end of file, expected {what}") })
        };
        let (ln, header) = next("header")?;
        if header != MESH_HEADER {
            return Err(perr(ln, format!("expected header `{MESH_HEADER}`, found `{header}`")));
        }
        fn section(ln: usize, line: &str, name: &str) -> Result<usize> {
            let mut it = line.split_whitespace();
            match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
                (Some(n), Some(Ok(c)), None) if n == name => Ok(c),
                _ => Err(Error::Parse { line: ln, message: format!("expected `{name} <count>`, found `{line}`") }),
            }
        }
        fn fields<T: std::str::FromStr>(ln: usize, line: &str, n: usize) -> Result<Vec<T>> {
            let v: Vec<T> = line
                .split_whitespace()
                .map(|t| t.parse::<T>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line: ln, message: format!("malformed record `{line}`") })?;
            if v.len() != n {
                return Err(Error::Parse { line: ln, message: format!("expected {n} fields, found {}", v.len()) });
            }
            Ok(v)
        }

        let (ln, l) = next("vertex section")?;
        let nv = section(ln, l, "vertices")?;
        if nv == 0 {
            return Err(perr(ln, "empty vertex section".into()));
        }
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = next("vertex record")?;
            let v: Vec<f64> = fields(ln, l, 2)?;
            if !v.iter().all(|x| x.is_finite()) {
                return Err(perr(ln, "non-finite coordinate".into()));
            }
            vertices.push([v[0], v[1]]);
        }
        let (ln, l) = next("triangle section")?;
        let nt = section(ln, l, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = next("triangle record")?;
            let t: Vec<usize> = fields(ln, l, 3)?;
            if t.iter().any(|&i| i >= nv) {
                return Err(perr(ln, "triangle references a missing vertex".into()));
            }
            let tri = [t[0], t[1], t[2]];
            if !(signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) > 0.0) {
                return Err(perr(ln, "triangle has non-positive signed area".into()));
            }
            triangles.push(tri);
        }
        let (ln, l) = next("boundary section")?;
        let nb = section(ln, l, "boundary")?;
        let mut boundary_edges = Vec::with_capacity(nb);
        let mut curvature_seen = 0.0f64;
        for _ in 0..nb {
            let (ln, l) = next("boundary record")?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 6 {
                return Err(perr(ln, format!("expected 6 fields, found {}", parts.len())));
            }
            let ints: Vec<usize> = fields(ln, &parts[..3].join(" "), 3)?;
            let reals: Vec<f64> = fields(ln, &parts[3..].join(" "), 3)?;
            if ints[0] >= nv || ints[1] >= nv {
                return Err(perr(ln, "boundary edge references a missing vertex".into()));
            }
            let normal = [reals[0], reals[1]];
            if ((normal[0].hypot(normal[1])) - 1.0).abs() > 1e-12 {
                return Err(perr(ln, "boundary normal is not a unit vector".into()));
            }
            if !(reals[2] >= 0.0) {
                return Err(perr(ln, "curvature must be nonnegative".into()));
            }
            curvature_seen = curvature_seen.max(reals[2]);
            boundary_edges.push(BoundaryEdge {
                vertices: [ints[0], ints[1]],
                marker: ints[2] as u32,
                normal,
                tangent: rot90(normal),
                curvature: reals[2],
            });
        }
        if let Some((ln, l)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(perr(ln, format!("trailing content `{l}`")));
        }
        let domain = if curvature_seen > 0.0 {
            DomainTag::Disk { radius: 1.0 / curvature_seen }
        } else {
            DomainTag::Square
        };
        let mesh = TriMesh { vertices, triangles, boundary_edges, domain };
        mesh.validate().map_err(|m| perr(0, m))?;
        Ok(mesh)
    }
}

pub fn mesh_io_write(path: impl AsRef<Path>, mesh: &TriMesh) -> Result<()> {
    std::fs::write(path, mesh.to_text())?;
    Ok(())
}

pub fn mesh_io_read(path: impl AsRef<Path>) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path)?;
    TriMesh::from_text(&text)
}

/// Boundary frames at vertices (averaged adjacent edge normals) and at edge
/// midpoints (the edge normal).
///
/// A vertex is a corner when the turning angle between its two edges exceeds
/// what the stored curvature accounts for by more than [`CORNER_ANGLE_TOL`].
/// On the square that is the plain normal angle; on the disk the polygonal
/// turning `2π/m` matches the arc turning and no vertex is flagged.
pub fn boundary_frames(mesh: &TriMesh) -> BoundaryFrameTable {
    let nv = mesh.vertices.len();
    let mut incoming = vec![usize::MAX; nv];
    let mut outgoing = vec![usize::MAX; nv];
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        outgoing[e.vertices[0]] = k;
        incoming[e.vertices[1]] = k;
    }
    let mut vertex_frames = Vec::new();
    for v in 0..nv {
        let (ei, eo) = (incoming[v], outgoing[v]);
        if ei == usize::MAX || eo == usize::MAX {
            continue;
        }
        let (a, b) = (&mesh.boundary_edges[ei], &mesh.boundary_edges[eo]);
        let normal = normalize([a.normal[0] + b.normal[0], a.normal[1] + b.normal[1]]);
        let cos = (a.normal[0] * b.normal[0] + a.normal[1] * b.normal[1]).clamp(-1.0, 1.0);
        let turning = cos.acos();
        let arc_turning = half_arc_angle(mesh, a) + half_arc_angle(mesh, b);
        let corner = (turning - arc_turning).abs() > CORNER_ANGLE_TOL;
        vertex_frames.push((v, NodeFrame { normal, tangent: rot90(normal), corner }));
    }
    let edge_frames = mesh
        .boundary_edges
        .iter()
        .map(|e| NodeFrame { normal: e.normal, tangent: rot90(e.normal), corner: false })
        .collect();
    BoundaryFrameTable { vertex_frames, edge_frames }
}

/// Half the angle subtended by a chord of the curve of curvature κ.
fn half_arc_angle(mesh: &TriMesh, e: &BoundaryEdge) -> f64 {
    if e.curvature == 0.0 {
        0.0
    } else {
        (0.5 * e.curvature * mesh.edge_length(e)).clamp(-1.0, 1.0).asin()
    }
}
