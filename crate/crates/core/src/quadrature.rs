//! Symmetric triangle rules (exact to degree 2, 4, 6 on the reference
//! triangle) paired with Gauss–Legendre rules on [0, 1].

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub order: usize,
    /// Barycentric points and weights; weights sum to 1/2.
    pub triangle: Vec<([f64; 3], f64)>,
    /// Points in [0, 1] and weights; weights sum to 1.
    pub segment: Vec<(f64, f64)>,
}

fn orbit3(a: f64, w: f64, out: &mut Vec<([f64; 3], f64)>) {
    let b = 0.5 * (1.0 - a);
    out.push(([a, b, b], w));
    out.push(([b, a, b], w));
    out.push(([b, b, a], w));
}

fn orbit6(a: f64, b: f64, w: f64, out: &mut Vec<([f64; 3], f64)>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        out.push((p, w));
    }
}

fn gauss_legendre(points: usize) -> Vec<(f64, f64)> {
    match points {
        2 => {
            let d = 0.5 / 3f64.sqrt();
            vec![(0.5 - d, 0.5), (0.5 + d, 0.5)]
        }
        3 => {
            let d = 0.5 * (0.6f64).sqrt();
            vec![(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
        }
        4 => {
            let (x0, x1) = (0.069_431_844_202_973_712_388, 0.330_009_478_207_571_867_599);
            let (w0, w1) = (0.173_927_422_568_726_928_687, 0.326_072_577_431_273_071_313);
            vec![(x0, w0), (x1, w1), (1.0 - x1, w1), (1.0 - x0, w0)]
        }
        _ => unreachable!(),
    }
}

/// Rule integrating total degree ≤ `order` exactly; `order ∈ {2, 4, 6}`.
pub fn quadrature(order: usize) -> Result<QuadratureRule> {
    let mut triangle = Vec::new();
    let segment = match order {
        2 => {
            orbit3(2.0 / 3.0, 1.0 / 6.0, &mut triangle);
            gauss_legendre(2)
        }
        4 => {
            orbit3(0.108_103_018_168_070_227_36, 0.111_690_794_839_005_732_85, &mut triangle);
            orbit3(0.816_847_572_980_458_513_08, 0.054_975_871_827_660_933_819, &mut triangle);
            gauss_legendre(3)
        }
        6 => {
            orbit3(0.501_426_509_658_179_157_42, 0.058_393_137_863_189_683_013, &mut triangle);
            orbit3(0.873_821_971_016_995_543_32, 0.025_422_453_185_103_408_46, &mut triangle);
            orbit6(
                0.053_145_049_844_816_947_353,
                0.310_352_451_033_784_405_42,
                0.041_425_537_809_186_787_597,
                &mut triangle,
            );
            gauss_legendre(4)
        }
        _ => return Err(Error::invalid(format!("unsupported quadrature order {order} (expected 2, 4 or 6)"))),
    };
    Ok(QuadratureRule { order, triangle, segment })
}
