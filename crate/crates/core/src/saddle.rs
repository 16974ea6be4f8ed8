//! Sparse direct solution of the constrained saddle-point systems
//!
//! ```text
//! [ A   Bᵀ  0   g ] [u]   [ℓ]
//! [ B   0   m   0 ] [p] = [r]
//! [ 0   mᵀ  0   0 ] [λ]   [0]
//! [ gᵀ  0   0   0 ] [μ]   [0]
//! ```
//!
//! `m` is the pressure gauge (mean value) and `g` the optional kernel guard.
//! The matrix is equilibrated, ordered by nested dissection, factorized by a
//! threshold-pivoting sparse LU and the solution is polished by iterative
//! refinement against the unscaled matrix.

mod lu;
mod ordering;

use crate::sparse::{norm2, CsrMatrix, Triplets};
use crate::{Error, Result};

/// Pivots below this fraction of the (equilibrated) matrix scale are rejected.
pub const PIVOT_TOL: f64 = 1e-13;
/// Required relative residual of every returned solution.
pub const RESIDUAL_TOL: f64 = 1e-10;
const PIVOT_THRESHOLD: f64 = 0.01;
const REFINEMENT_STEPS: usize = 6;

#[derive(Clone, Debug)]
pub struct SaddleSystem {
    /// Velocity (1,1) block.
    pub velocity_block: CsrMatrix,
    /// Pressure × velocity coupling `B`.
    pub coupling: CsrMatrix,
    /// Mean-value row `m` over the pressure unknowns.
    pub pressure_gauge: Option<Vec<f64>>,
    /// Guard row `g` over the velocity unknowns.
    pub kernel_guard: Option<Vec<f64>>,
    pub rhs_velocity: Vec<f64>,
    pub rhs_pressure: Vec<f64>,
    /// False once a convection block has been added.
    pub symmetric: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    /// Multiplier of the divergence rows (equals `−π`).
    pub pressure: Vec<f64>,
    pub gauge_multiplier: Option<f64>,
    pub guard_multiplier: Option<f64>,
    pub relative_residual: f64,
}

impl SaddleSystem {
    pub fn num_velocity(&self) -> usize {
        self.velocity_block.nrows
    }

    pub fn num_pressure(&self) -> usize {
        self.coupling.nrows
    }

    pub fn dim(&self) -> usize {
        self.num_velocity()
            + self.num_pressure()
            + usize::from(self.pressure_gauge.is_some())
            + usize::from(self.kernel_guard.is_some())
    }

    pub fn validate(&self) -> Result<()> {
        let (n, np) = (self.num_velocity(), self.num_pressure());
        let ok = self.velocity_block.ncols == n
            && self.coupling.ncols == n
            && self.rhs_velocity.len() == n
            && self.rhs_pressure.len() == np
            && self.pressure_gauge.as_ref().is_none_or(|m| m.len() == np)
            && self.kernel_guard.as_ref().is_none_or(|g| g.len() == n);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("saddle system blocks have inconsistent dimensions"))
        }
    }

    /// Assembled square matrix in the unknown order `[u, p, λ, μ]`.
    pub fn matrix(&self) -> CsrMatrix {
        let (n, np) = (self.num_velocity(), self.num_pressure());
        let dim = self.dim();
        let mut t = Triplets::with_capacity(self.velocity_block.nnz() + 2 * self.coupling.nnz() + 2 * (n + np));
        for i in 0..n {
            for (j, v) in self.velocity_block.row(i) {
                t.push(i, j, v);
            }
        }
        for q in 0..np {
            for (j, v) in self.coupling.row(q) {
                t.push(n + q, j, v);
                t.push(j, n + q, v);
            }
        }
        let mut next = n + np;
        if let Some(m) = &self.pressure_gauge {
            for (q, &v) in m.iter().enumerate() {
                if v != 0.0 {
                    t.push(n + q, next, v);
                    t.push(next, n + q, v);
                }
            }
            next += 1;
        }
        if let Some(g) = &self.kernel_guard {
            for (j, &v) in g.iter().enumerate() {
                if v != 0.0 {
                    t.push(j, next, v);
                    t.push(next, j, v);
                }
            }
        }
        CsrMatrix::from_triplets(dim, dim, &t)
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.dim());
        b.extend_from_slice(&self.rhs_velocity);
        b.extend_from_slice(&self.rhs_pressure);
        b.resize(self.dim(), 0.0);
        b
    }

    /// Splits a full solution vector into its blocks.
    pub fn split(&self, x: &[f64], relative_residual: f64) -> SaddleSolution {
        let (n, np) = (self.num_velocity(), self.num_pressure());
        let mut next = n + np;
        let gauge_multiplier = self.pressure_gauge.as_ref().map(|_| {
            next += 1;
            x[next - 1]
        });
        let guard_multiplier = self.kernel_guard.as_ref().map(|_| x[next]);
        SaddleSolution {
            velocity: x[..n].to_vec(),
            pressure: x[n..n + np].to_vec(),
            gauge_multiplier,
            guard_multiplier,
            relative_residual,
        }
    }

    pub fn factorize(&self) -> Result<Factorized> {
        self.validate()?;
        Factorized::new(self.matrix(), self.block_labels())
    }

    fn block_labels(&self) -> BlockLabels {
        BlockLabels {
            velocity: self.num_velocity(),
            pressure: self.num_pressure(),
            gauge: self.pressure_gauge.is_some(),
        }
    }
}

/// Solves the system once.
pub fn factor_solve(sys: &SaddleSystem) -> Result<SaddleSolution> {
    let f = sys.factorize()?;
    let (x, res) = f.solve(&sys.rhs())?;
    Ok(sys.split(&x, res))
}

#[derive(Clone, Copy, Debug)]
struct BlockLabels {
    velocity: usize,
    pressure: usize,
    gauge: bool,
}

impl BlockLabels {
    fn describe(&self, i: usize) -> String {
        if i < self.velocity {
            format!("velocity unknown {i}")
        } else if i < self.velocity + self.pressure {
            format!("pressure unknown {}", i - self.velocity)
        } else if i == self.velocity + self.pressure && self.gauge {
            "pressure gauge multiplier".into()
        } else {
            "kernel guard multiplier".into()
        }
    }
}

/// Factor-once, solve-many handle; immutable and shareable across threads.
#[derive(Clone, Debug)]
pub struct Factorized {
    matrix: CsrMatrix,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    lu: lu::LuFactors,
}

fn equilibrate(k: &CsrMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = k.nrows;
    let mut r = vec![1.0; n];
    let mut c = vec![1.0; n];
    for _ in 0..4 {
        let mut rmax = vec![0.0f64; n];
        let mut cmax = vec![0.0f64; n];
        for i in 0..n {
            for (j, v) in k.row(i) {
                let s = (r[i] * v * c[j]).abs();
                rmax[i] = rmax[i].max(s);
                cmax[j] = cmax[j].max(s);
            }
        }
        for i in 0..n {
            if rmax[i] == 0.0 || cmax[i] == 0.0 {
                return Err(Error::SingularSystem(format!("row or column {i} of the system is empty")));
            }
            r[i] /= rmax[i].sqrt();
            c[i] /= cmax[i].sqrt();
        }
    }
    Ok((r, c))
}

impl Factorized {
    /// Factorizes a general square matrix.
    pub fn from_matrix(k: CsrMatrix) -> Result<Factorized> {
        let n = k.nrows;
        Factorized::new(k, BlockLabels { velocity: n, pressure: 0, gauge: false })
    }

    fn new(k: CsrMatrix, labels: BlockLabels) -> Result<Factorized> {
        if k.nrows != k.ncols {
            return Err(Error::invalid("system matrix is not square"));
        }
        if k.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("system matrix has non-finite entries"));
        }
        let n = k.nrows;
        if n == 0 {
            let lu = lu::factor(&lu::Csc::from_csr(&k), &[], PIVOT_THRESHOLD, 0.0)
                .unwrap_or_else(|_| unreachable!("empty factorization cannot fail"));
            return Ok(Factorized { matrix: k, row_scale: vec![], col_scale: vec![], lu });
        }
        let (row_scale, col_scale) = equilibrate(&k)?;
        let mut scaled = k.clone();
        for i in 0..n {
            for p in scaled.row_ptr[i]..scaled.row_ptr[i + 1] {
                scaled.values[p] *= row_scale[i] * col_scale[scaled.col_idx[p]];
            }
        }
        let order = ordering::nested_dissection(&scaled);
        let abs_tol = PIVOT_TOL * scaled.max_abs();
        let lu = lu::factor(&lu::Csc::from_csr(&scaled), &order, PIVOT_THRESHOLD, abs_tol).map_err(|e| match e {
            lu::LuFailure::SmallPivot { step, column, pivot } => Error::SingularSystem(format!(
                "pivot {pivot:.3e} below {PIVOT_TOL:.0e} x scale at elimination step {step} ({})",
                labels.describe(column)
            )),
        })?;
        Ok(Factorized { matrix: k, row_scale, col_scale, lu })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    /// Entries of `L` and `U`.
    pub fn fill(&self) -> usize {
        self.lu.fill()
    }

    /// Smallest pivot magnitude of the equilibrated matrix.
    pub fn min_pivot(&self) -> f64 {
        self.lu.min_pivot
    }

    fn solve_once(&self, b: &[f64]) -> Vec<f64> {
        let sb: Vec<f64> = b.iter().zip(&self.row_scale).map(|(x, r)| x * r).collect();
        let y = self.lu.solve(&sb);
        y.iter().zip(&self.col_scale).map(|(x, c)| x * c).collect()
    }

    /// Solves `K x = b`; returns `x` and `‖Kx − b‖/‖b‖`.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        if b.len() != self.dim() {
            return Err(Error::invalid(format!("right-hand side has length {}, system has {}", b.len(), self.dim())));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("right-hand side has non-finite entries"));
        }
        let bn = norm2(b);
        if bn == 0.0 {
            return Ok((vec![0.0; b.len()], 0.0));
        }
        let mut x = self.solve_once(b);
        let residual = |x: &[f64]| -> Vec<f64> {
            let kx = self.matrix.mul_vec(x);
            b.iter().zip(kx).map(|(bi, ki)| bi - ki).collect()
        };
        let mut r = residual(&x);
        let mut rel = norm2(&r) / bn;
        for _ in 0..REFINEMENT_STEPS {
            if rel <= 1e-15 {
                break;
            }
            let dx = self.solve_once(&r);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let tr = residual(&trial);
            let trel = norm2(&tr) / bn;
            if !(trel < rel) {
                break;
            }
            let stalled = trel > 0.5 * rel;
            x = trial;
            r = tr;
            rel = trel;
            if stalled {
                break;
            }
        }
        if !rel.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("solution has non-finite entries"));
        }
        if rel > RESIDUAL_TOL {
            return Err(Error::SingularSystem(format!(
                "relative residual {rel:.3e} above {RESIDUAL_TOL:.0e} after refinement"
            )));
        }
        Ok((x, rel))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with full pivoting.
    fn dense_full_pivot_solve(mut a: DMatrix<f64>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        let mut colperm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut pi, mut pj, mut best) = (k, k, 0.0);
            for i in k..n {
                for j in k..n {
                    if a[(i, j)].abs() > best {
                        best = a[(i, j)].abs();
                        pi = i;
                        pj = j;
                    }
                }
            }
            a.swap_rows(k, pi);
            b.swap(k, pi);
            a.swap_columns(k, pj);
            colperm.swap(k, pj);
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
                b[i] -= f * b[k];
            }
        }
        let mut y = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[(k, j)] * y[j]).sum();
            y[k] = (b[k] - s) / a[(k, k)];
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[colperm[k]] = y[k];
        }
        x
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> CsrMatrix {
        // sparse symmetric diagonally dominant
        let mut t = Triplets::default();
        let mut diag = vec![1.0; n];
        for i in 0..n {
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    t.push(i, j, v);
                    t.push(j, i, v);
                    diag[i] += v.abs();
                    diag[j] += v.abs();
                }
            }
        }
        for (i, d) in diag.into_iter().enumerate() {
            t.push(i, i, d);
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn identity_block() {
        let sys = SaddleSystem {
            velocity_block: CsrMatrix::identity(3),
            coupling: CsrMatrix::zeros(0, 3),
            pressure_gauge: None,
            kernel_guard: None,
            rhs_velocity: vec![1.0, 0.0, 0.0],
            rhs_pressure: vec![],
            symmetric: true,
        };
        let s = factor_solve(&sys).unwrap();
        assert_eq!(s.velocity, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn spd_with_mean_constraint_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let a = random_spd(n, &mut rng);
        let ones = CsrMatrix::from_dense(&DMatrix::from_element(1, n, 1.0 / n as f64));
        let sys = SaddleSystem {
            velocity_block: a,
            coupling: ones,
            pressure_gauge: None,
            kernel_guard: None,
            rhs_velocity: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            rhs_pressure: vec![0.0],
            symmetric: true,
        };
        let s = factor_solve(&sys).unwrap();
        assert!(s.relative_residual <= RESIDUAL_TOL);
        let oracle = dense_full_pivot_solve(sys.matrix().to_dense(), sys.rhs());
        let x: Vec<f64> = s.velocity.iter().chain(&s.pressure).copied().collect();
        let diff = x.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-9, "max difference {diff}");
    }

    #[test]
    fn unsymmetric_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [5, 40, 300] {
            let mut t = Triplets::default();
            for i in 0..n {
                t.push(i, i, 0.1 + rng.random_range(0.0..1.0));
                for _ in 0..4 {
                    t.push(i, rng.random_range(0..n), rng.random_range(-1.0..1.0));
                }
            }
            let k = CsrMatrix::from_triplets(n, n, &t);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = Factorized::from_matrix(k.clone()).unwrap();
            let (x, res) = f.solve(&b).unwrap();
            assert!(res <= 1e-12);
            let oracle = dense_full_pivot_solve(k.to_dense(), b);
            let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(x.iter().zip(&oracle).all(|(a, b)| (a - b).abs() <= 1e-9 * scale));
        }
    }

    #[test]
    fn zero_diagonal_requires_off_diagonal_pivot() {
        // [[0, 1], [1, 0]]
        let k = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let (x, _) = Factorized::from_matrix(k).unwrap().solve(&[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_rejected() {
        // rank-deficient Laplacian (pure Neumann)
        let n = 30;
        let mut t = Triplets::default();
        for i in 0..n - 1 {
            t.push(i, i, 1.0);
            t.push(i + 1, i + 1, 1.0);
            t.push(i, i + 1, -1.0);
            t.push(i + 1, i, -1.0);
        }
        let k = CsrMatrix::from_triplets(n, n, &t);
        assert!(matches!(Factorized::from_matrix(k), Err(Error::SingularSystem(_))));
        let empty_row = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert!(matches!(Factorized::from_matrix(empty_row), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let k = CsrMatrix::from_dense(&DMatrix::from_row_slice(1, 1, &[f64::NAN]));
        assert!(matches!(Factorized::from_matrix(k), Err(Error::Numerical(_))));
        let f = Factorized::from_matrix(CsrMatrix::identity(1)).unwrap();
        assert!(matches!(f.solve(&[f64::INFINITY]), Err(Error::Numerical(_))));
    }

    #[test]
    fn scaling_equivariance_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spd(200, &mut rng);
        let f = Factorized::from_matrix(a).unwrap();
        let b: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (x, _) = f.solve(&b).unwrap();
        let (x2, _) = f.solve(&b).unwrap();
        assert_eq!(x, x2);
        for s in [1e-6, 3.0, 1e8] {
            let sb: Vec<f64> = b.iter().map(|v| s * v).collect();
            let (xs, _) = f.solve(&sb).unwrap();
            let xn = norm2(&x);
            let err: Vec<f64> = xs.iter().zip(&x).map(|(a, b)| a - s * b).collect();
            assert!(norm2(&err) <= 1e-13 * s * xn);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let sys = SaddleSystem {
            velocity_block: CsrMatrix::identity(3),
            coupling: CsrMatrix::zeros(1, 2),
            pressure_gauge: None,
            kernel_guard: None,
            rhs_velocity: vec![0.0; 3],
            rhs_pressure: vec![0.0],
            symmetric: true,
        };
        assert!(matches!(factor_solve(&sys), Err(Error::InvalidArgument(_))));
    }
}
