//! Closed-form manufactured solutions.
//!
//! On the unit square
//!
//! ```text
//! u = (π sin πx cos πy, −π cos πx sin πy),   π_ex = cos πx cos πy
//! ```
//!
//! is divergence free, tangent to ∂Ω and has mean-zero pressure. `D(u)` is
//! diagonal, so on the square the friction datum reduces to `h = α u_τ`.

use std::f64::consts::PI;

use crate::fem::Grad;
use crate::forms::ProblemData;
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Manufactured {
    pub alpha: f64,
    /// Adds the convective term `(u·∇)u` to the force.
    pub navier_stokes: bool,
}

impl Manufactured {
    pub fn stokes(alpha: f64) -> Self {
        Manufactured { alpha, navier_stokes: false }
    }

    pub fn navier_stokes(alpha: f64) -> Self {
        Manufactured { alpha, navier_stokes: true }
    }

    pub fn velocity(x: Point) -> Point {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        [PI * sx * cy, -PI * cx * sy]
    }

    pub fn gradient(x: Point) -> Grad {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        let p2 = PI * PI;
        [[p2 * cx * cy, -p2 * sx * sy], [p2 * sx * sy, -p2 * cx * cy]]
    }

    pub fn pressure(x: Point) -> f64 {
        (PI * x[0]).cos() * (PI * x[1]).cos()
    }

    /// `(u·∇)u = π³ (sin πx cos πx, sin πy cos πy)`.
    pub fn convection(x: Point) -> Point {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        let p3 = PI * PI * PI;
        [p3 * sx * cx, p3 * sy * cy]
    }

    /// `f = −Δu + ∇π_ex [+ (u·∇)u]`.
    pub fn force(&self, x: Point) -> Point {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        let p3 = PI * PI * PI;
        let mut f = [(2.0 * p3 - PI) * sx * cy, -(2.0 * p3 + PI) * cx * sy];
        if self.navier_stokes {
            let c = Self::convection(x);
            f[0] += c[0];
            f[1] += c[1];
        }
        f
    }

    /// Tangential part of `2D(u)n + α u`.
    pub fn boundary_force(&self, x: Point, n: Point) -> Point {
        let g = Self::gradient(x);
        let u = Self::velocity(x);
        let d01 = 0.5 * (g[0][1] + g[1][0]);
        let v = [
            2.0 * (g[0][0] * n[0] + d01 * n[1]) + self.alpha * u[0],
            2.0 * (d01 * n[0] + g[1][1] * n[1]) + self.alpha * u[1],
        ];
        let vn = v[0] * n[0] + v[1] * n[1];
        [v[0] - vn * n[0], v[1] - vn * n[1]]
    }

    pub fn problem_data(&self) -> ProblemData {
        let (a, b) = (*self, *self);
        ProblemData::new(self.alpha)
            .with_force(move |x| a.force(x))
            .with_boundary_force(move |x, n| b.boundary_force(x, n))
    }

    /// `2‖D(u)‖² + α‖u_τ‖²_{L²(∂Ω)} = π⁴ + 2απ²` on the unit square.
    pub fn energy(&self) -> f64 {
        PI.powi(4) + 2.0 * self.alpha * PI * PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(f: impl Fn(Point) -> Point, x: Point) -> Grad {
        let h = 1e-6;
        let mut g = [[0.0; 2]; 2];
        for j in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[j] += h;
            xm[j] -= h;
            let (a, b) = (f(xp), f(xm));
            for i in 0..2 {
                g[i][j] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        g
    }

    #[test]
    fn gradient_and_force_match_finite_differences() {
        let m = Manufactured::navier_stokes(1.0);
        for &x in &[[0.13, 0.71], [0.5, 0.5], [0.9, 0.2]] {
            let g = Manufactured::gradient(x);
            let fd = fd_grad(Manufactured::velocity, x);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((g[i][j] - fd[i][j]).abs() < 1e-6);
                }
            }
            assert!((g[0][0] + g[1][1]).abs() < 1e-14);
            // −Δu by second differences of the gradient
            let h = 1e-4;
            let mut lap = [0.0; 2];
            for j in 0..2 {
                let (mut xp, mut xm) = (x, x);
                xp[j] += h;
                xm[j] -= h;
                let (up, um, u0) = (Manufactured::velocity(xp), Manufactured::velocity(xm), Manufactured::velocity(x));
                for i in 0..2 {
                    lap[i] += (up[i] - 2.0 * u0[i] + um[i]) / (h * h);
                }
            }
            let dp = [
                (Manufactured::pressure([x[0] + h, x[1]]) - Manufactured::pressure([x[0] - h, x[1]])) / (2.0 * h),
                (Manufactured::pressure([x[0], x[1] + h]) - Manufactured::pressure([x[0], x[1] - h])) / (2.0 * h),
            ];
            let u = Manufactured::velocity(x);
            let conv = [g[0][0] * u[0] + g[0][1] * u[1], g[1][0] * u[0] + g[1][1] * u[1]];
            let f = m.force(x);
            for i in 0..2 {
                assert!((f[i] - (-lap[i] + dp[i] + conv[i])).abs() < 1e-5, "component {i}");
            }
        }
    }

    #[test]
    fn tangent_on_square_boundary() {
        let m = Manufactured::stokes(3.0);
        for s in [0.1, 0.37, 0.8] {
            assert!(Manufactured::velocity([0.0, s])[0].abs() < 1e-15);
            assert!(Manufactured::velocity([1.0, s])[0].abs() < 1e-15);
            assert!(Manufactured::velocity([s, 0.0])[1].abs() < 1e-15);
            assert!(Manufactured::velocity([s, 1.0])[1].abs() < 1e-15);
            // h = α u_τ on the square
            let x = [s, 0.0];
            let h = m.boundary_force(x, [0.0, -1.0]);
            let u = Manufactured::velocity(x);
            assert!((h[0] - 3.0 * u[0]).abs() < 1e-12 && h[1].abs() < 1e-12);
        }
    }
}
