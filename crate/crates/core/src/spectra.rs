//! Discrete inf-sup and Korn-type constants from generalized eigenproblems
//! on the constrained (`u·n = 0`) velocity space.
//!
//! Small problems are solved densely. Larger ones use Lanczos with full
//! reorthogonalization on a shift-inverted operator, which is self-adjoint
//! in the inner product of the right-hand matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{BoundaryPolicy, ConstraintPlan};
use crate::fem::build_taylor_hood;
use crate::fields::Alpha;
use crate::forms::{
    assemble_div, assemble_friction, assemble_h1_gram, assemble_pressure_mass, assemble_velocity_mass, assemble_viscous,
    boundary_beta_vector, pressure_mean_vector, volume_beta_vector,
};
use crate::mesh::TriMesh;
use crate::saddle::{Factorized, SaddleSystem};
use crate::sparse::{dot, CsrMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense up to `dense_limit` unknowns, iterative above.
    #[default]
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralOptions {
    pub method: EigenMethod,
    pub dense_limit: usize,
    pub seed: u64,
    pub export_eigenvector: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { method: EigenMethod::Auto, dense_limit: 2000, seed: 0x5eed, export_eigenvector: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    pub quantity: &'static str,
    /// Reported constant, clamped to be nonnegative.
    pub constant: f64,
    /// Eigenvalue before clamping.
    pub raw_eigenvalue: f64,
    pub mesh_size: f64,
    pub alpha: String,
    pub unknowns: usize,
    pub method: EigenMethod,
    /// Reduced-space eigenvector (dense path only, when requested).
    pub eigenvector: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaInequalityReport {
    /// `min (‖D(u)‖² + (∫_Ω u·β)²) / ‖u‖²_{L²}`
    pub volume: SpectralReport,
    /// `min (‖D(u)‖² + (∫_Γ u·β ds)²) / ‖u‖²_{L²}`
    pub boundary: SpectralReport,
}

fn alpha_label(alpha: &Alpha) -> String {
    match alpha {
        Alpha::Constant(a) => format!("{a}"),
        Alpha::PerMarker(v) => format!("{v:?}"),
        Alpha::Field(_) => "field".into(),
    }
}

fn use_dense(opts: &SpectralOptions, n: usize) -> bool {
    match opts.method {
        EigenMethod::Dense => true,
        EigenMethod::ShiftInvert => false,
        EigenMethod::Auto => n <= opts.dense_limit,
    }
}

fn cholesky(m: &CsrMatrix) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    m.to_dense()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("right-hand matrix of the eigenproblem is not positive definite".into()))
}

/// Smallest eigenvalue of `A x = λ G x` (G SPD) and its G-normalized eigenvector.
fn dense_min_eig(a: &DMatrix<f64>, g: &CsrMatrix) -> Result<(f64, DVector<f64>)> {
    let chol = cholesky(g)?;
    let l = chol.l();
    let linv_a = l.solve_lower_triangular(a).ok_or_else(|| Error::numerical("triangular solve failed"))?;
    let m = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::numerical("triangular solve failed"))?;
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let (k, &lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::SingularSystem("empty eigenproblem".into()))?;
    let y = eig.eigenvectors.column(k).into_owned();
    let x = l.transpose().solve_upper_triangular(&y).ok_or_else(|| Error::numerical("triangular solve failed"))?;
    Ok((lam, x))
}

/// Largest eigenvalue of an operator self-adjoint in the `g` inner product,
/// by Lanczos with full reorthogonalization.
fn lanczos_max(mut op: impl FnMut(&[f64]) -> Result<Vec<f64>>, g: &CsrMatrix, seed: u64) -> Result<f64> {
    let n = g.nrows;
    let max_steps = n.min(400);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    // one application removes components in the operator's null space
    let mut v = op(&start)?;
    let gnorm = |x: &[f64]| g.bilinear(x, x).max(0.0).sqrt();
    let nv = gnorm(&v);
    if nv == 0.0 {
        return Ok(0.0);
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut gbasis: Vec<Vec<f64>> = vec![g.mul_vec(&basis[0])];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = f64::NAN;
    for j in 0..max_steps {
        let mut w = op(&basis[j])?;
        let a = dot(&gbasis[j], &w);
        alphas.push(a);
        for _ in 0..2 {
            for (b, gb) in basis.iter().zip(&gbasis) {
                let c = dot(gb, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = gnorm(&w);
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alphas[r]
            } else if r == c + 1 || c == r + 1 {
                betas[r.min(c)]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (k, &theta) = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let resid = (beta * eig.eigenvectors[(m - 1, k)]).abs();
        if resid <= 1e-13 * theta.abs() || beta <= 1e-14 * theta.abs() || (theta - last).abs() <= 1e-15 * theta.abs() {
            return Ok(theta);
        }
        last = theta;
        if j + 1 == max_steps || basis.len() == n {
            if resid <= 1e-8 * theta.abs() {
                return Ok(theta);
            }
            return Err(Error::numerical(format!("Lanczos did not converge (residual {resid:.3e})")));
        }
        betas.push(beta);
        w.iter_mut().for_each(|x| *x /= beta);
        gbasis.push(g.mul_vec(&w));
        basis.push(w);
    }
    unreachable!("loop returns")
}

fn mesh_data(mesh: &TriMesh) -> (crate::fem::FeSystem, ConstraintPlan) {
    let fe = build_taylor_hood(mesh);
    let plan = ConstraintPlan::new(&fe, BoundaryPolicy::Slip);
    (fe, plan)
}

/// Discrete LBB constant `γ_h = min_q sup_v (q, div v) / (‖q‖_{L²} ‖v‖_{H¹})`
/// over mean-zero P1 pressures and P2 velocities with `u·n = 0`.
///
/// α does not enter the pairing; it is accepted for reporting only.
pub fn infsup_constant(mesh: &TriMesh, alpha: &Alpha, opts: &SpectralOptions) -> Result<SpectralReport> {
    let (fe, plan) = mesh_data(mesh);
    if plan.num_reduced == 0 {
        return Err(Error::SingularSystem("constrained velocity space is trivial".into()));
    }
    let k = plan.reduce_operator(&assemble_h1_gram(&fe));
    let b = plan.reduce_coupling(&assemble_div(&fe));
    let q = assemble_pressure_mass(&fe);
    let m = pressure_mean_vector(&fe);
    let np = q.nrows;
    let unknowns = k.nrows + np;
    let dense = use_dense(opts, unknowns);
    let (mu, vec) = if dense {
        let kd = k.to_dense();
        let chol = kd.cholesky().ok_or_else(|| Error::SingularSystem("velocity Gram matrix is singular".into()))?;
        let bd = b.to_dense();
        let x = chol.solve(&bd.transpose());
        let mut s = &bd * x;
        // lift the constant pressure mode above the spectrum (μ ≤ 2 for the H¹ pairing)
        let area: f64 = m.iter().sum();
        for i in 0..np {
            for j in 0..np {
                s[(i, j)] += 10.0 * m[i] * m[j] / area;
            }
        }
        let (mu, y) = dense_min_eig(&s, &q)?;
        (mu, opts.export_eigenvector.then(|| y.iter().copied().collect()))
    } else {
        let sys = SaddleSystem {
            velocity_block: k,
            coupling: b,
            pressure_gauge: Some(m),
            kernel_guard: None,
            rhs_velocity: vec![],
            rhs_pressure: vec![],
            symmetric: true,
        };
        let nv = sys.num_velocity();
        let f = Factorized::from_matrix(sys.matrix())?;
        let dim = f.dim();
        let theta = lanczos_max(
            |y| {
                let qy = q.mul_vec(y);
                let mut rhs = vec![0.0; dim];
                for i in 0..np {
                    rhs[nv + i] = -qy[i];
                }
                let (x, _) = f.solve(&rhs)?;
                Ok(x[nv..nv + np].to_vec())
            },
            &q,
            opts.seed,
        )?;
        if theta <= 0.0 {
            return Err(Error::SingularSystem("divergence coupling vanishes on the constrained space".into()));
        }
        (1.0 / theta, None)
    };
    Ok(SpectralReport {
        quantity: "infsup",
        constant: mu.max(0.0).sqrt(),
        raw_eigenvalue: mu,
        mesh_size: mesh.mesh_size(),
        alpha: alpha_label(alpha),
        unknowns,
        method: if dense { EigenMethod::Dense } else { EigenMethod::ShiftInvert },
        eigenvector: vec,
    })
}

/// Smallest `λ` of `(A [+ M_α]) x = λ G x` on the constrained space, `G` the H¹ Gram matrix.
pub fn korn_quotient_min(
    mesh: &TriMesh,
    alpha: &Alpha,
    include_boundary_term: bool,
    opts: &SpectralOptions,
) -> Result<SpectralReport> {
    let (fe, plan) = mesh_data(mesh);
    if plan.num_reduced == 0 {
        return Err(Error::SingularSystem("constrained velocity space is trivial".into()));
    }
    let mut a = assemble_viscous(&fe);
    if include_boundary_term {
        a = a.add_scaled(1.0, &assemble_friction(&fe, alpha)?, 1.0);
    }
    let a = plan.reduce_operator(&a);
    let g = plan.reduce_operator(&assemble_h1_gram(&fe));
    min_generalized(a, None, &g, opts, 1e-2).map(|(lam, vec, dense)| SpectralReport {
        quantity: if include_boundary_term { "korn_with_boundary" } else { "korn" },
        constant: lam.max(0.0),
        raw_eigenvalue: lam,
        mesh_size: mesh.mesh_size(),
        alpha: alpha_label(alpha),
        unknowns: plan.num_reduced,
        method: if dense { EigenMethod::Dense } else { EigenMethod::ShiftInvert },
        eigenvector: vec,
    })
}

/// Smallest eigenvalue of `(A + c cᵀ) x = λ G x` for SPD `G` and PSD `A + c cᵀ`.
fn min_generalized(
    a: CsrMatrix,
    rank_one: Option<Vec<f64>>,
    g: &CsrMatrix,
    opts: &SpectralOptions,
    shift: f64,
) -> Result<(f64, Option<Vec<f64>>, bool)> {
    let n = a.nrows;
    if use_dense(opts, n) {
        let mut ad = a.to_dense();
        if let Some(c) = &rank_one {
            ad += DMatrix::from_fn(n, n, |i, j| c[i] * c[j]);
        }
        let (lam, x) = dense_min_eig(&ad, g)?;
        return Ok((lam, opts.export_eigenvector.then(|| x.iter().copied().collect()), true));
    }
    // (A + σG)⁻¹ G has eigenvalues 1/(λ + σ); the rank-one term goes through Sherman–Morrison
    let shifted = a.add_scaled(1.0, g, shift);
    let f = Factorized::from_matrix(shifted)?;
    let sm = match &rank_one {
        Some(c) => {
            let (z, _) = f.solve(c)?;
            Some((c.clone(), z.clone(), 1.0 + dot(c, &z)))
        }
        None => None,
    };
    let theta = lanczos_max(
        |x| {
            let (mut y, _) = f.solve(&g.mul_vec(x))?;
            if let Some((c, z, denom)) = &sm {
                let s = dot(c, &y) / denom;
                y.iter_mut().zip(z).for_each(|(v, zi)| *v -= s * zi);
            }
            Ok(y)
        },
        g,
        opts.seed,
    )?;
    if theta <= 0.0 {
        return Err(Error::numerical("shift-invert iteration produced a nonpositive eigenvalue"));
    }
    Ok((1.0 / theta - shift, None, false))
}

/// Optimal constants of the two rotation-penalized Korn inequalities on the disk.
pub fn beta_inequality_checks(mesh: &TriMesh, opts: &SpectralOptions) -> Result<BetaInequalityReport> {
    if !mesh.is_axisymmetric() {
        return Err(Error::invalid("the rotation-penalized inequalities are stated for the disk"));
    }
    let (fe, plan) = mesh_data(mesh);
    // ‖D(u)‖² = ½ uᵀAu
    let half_a = {
        let mut a = plan.reduce_operator(&assemble_viscous(&fe));
        a.values.iter_mut().for_each(|v| *v *= 0.5);
        a
    };
    let mass = plan.reduce_operator(&assemble_velocity_mass(&fe));
    let report = |c: Vec<f64>, quantity: &'static str| -> Result<SpectralReport> {
        let (lam, vec, dense) = min_generalized(half_a.clone(), Some(c), &mass, opts, 1e-2)?;
        Ok(SpectralReport {
            quantity,
            constant: lam.max(0.0),
            raw_eigenvalue: lam,
            mesh_size: mesh.mesh_size(),
            alpha: "0".into(),
            unknowns: plan.num_reduced,
            method: if dense { EigenMethod::Dense } else { EigenMethod::ShiftInvert },
            eigenvector: vec,
        })
    };
    Ok(BetaInequalityReport {
        volume: report(plan.restrict(&volume_beta_vector(&fe)), "beta_volume")?,
        boundary: report(plan.restrict(&boundary_beta_vector(&fe)), "beta_boundary")?,
    })
}
