//! Integrability exponents of the friction coefficient and the volume force.
//!
//! `t(p)` is the exponent of the `L^t(Γ)` class required of α, `r(p)` the
//! exponent of the `L^r(Ω)` class of f, for solutions in `W^{1,p}`.

use crate::{Error, Result};

/// Default margin added on the strict branches.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Hölder conjugate `p' = p / (p − 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("exponent p = {p} must be finite and greater than 1")))
    }
}

/// `t(p)` with the default margin.
pub fn exponent_t(p: f64) -> Result<f64> {
    exponent_t_with(p, DEFAULT_EPSILON)
}

/// `t(p) = 2` at `p = 2`, `2 + ε` for `3/2 ≤ p ≤ 3`, `(2/3) max(p, p') + ε` otherwise.
pub fn exponent_t_with(p: f64, eps: f64) -> Result<f64> {
    check(p)?;
    if p == 2.0 {
        Ok(2.0)
    } else if (1.5..=3.0).contains(&p) {
        Ok(2.0 + eps)
    } else {
        Ok(2.0 / 3.0 * p.max(conjugate(p)) + eps)
    }
}

/// `r(p)` with the default margin.
pub fn exponent_r(p: f64) -> Result<f64> {
    exponent_r_with(p, DEFAULT_EPSILON)
}

/// `r(p) = max{1, 3p/(p+3)}`, raised to `1 + ε` at `p = 3/2` where the formula gives 1.
pub fn exponent_r_with(p: f64, eps: f64) -> Result<f64> {
    check(p)?;
    if p == 1.5 {
        return Ok(1.0 + eps);
    }
    Ok((3.0 * p / (p + 3.0)).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hilbert_values() {
        assert_eq!(exponent_r(2.0).unwrap(), 6.0 / 5.0);
        assert_eq!(exponent_t(2.0).unwrap(), 2.0);
        assert_eq!(exponent_r(6.0).unwrap(), 2.0);
        assert_eq!(exponent_r(1.5).unwrap(), 1.0 + DEFAULT_EPSILON);
        assert_eq!(exponent_r(1.2).unwrap(), 1.0);
        assert_eq!(exponent_t(3.0).unwrap(), 2.0 + DEFAULT_EPSILON);
        assert_eq!(exponent_t_with(2.5, 0.1).unwrap(), 2.1);
        assert!((exponent_t(6.0).unwrap() - (4.0 + DEFAULT_EPSILON)).abs() < 1e-15);
    }

    #[test]
    fn rejects_p_at_most_one() {
        for p in [1.0, 0.5, -3.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(exponent_t(p), Err(Error::InvalidArgument(_))));
            assert!(matches!(exponent_r(p), Err(Error::InvalidArgument(_))));
        }
    }

    proptest! {
        #[test]
        fn t_is_symmetric_under_conjugation(p in 1.01f64..20.0) {
            let a = exponent_t(p).unwrap();
            let b = exponent_t(conjugate(p)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn t_at_least_two(p in 1.01f64..20.0) {
            prop_assert!(exponent_t(p).unwrap() >= 2.0);
        }
    }
}
