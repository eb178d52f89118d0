//! Intersections of a straight line with the unitarity circle
//! `|f − i/2| = 1/2` in the Argand plane.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

/// Points of the unitarity circle on the line `Re(f · conj(anchor)) = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intersections<T> {
    /// Discriminant inside the tangency window: one point.
    Tangent(Complex<T>),
    /// Two distinct points, ordered by imaginary part.
    Two { low: Complex<T>, high: Complex<T> },
}

impl<T: Real> Intersections<T> {
    pub fn points(&self) -> Vec<Complex<T>> {
        match *self {
            Intersections::Tangent(p) => vec![p],
            Intersections::Two { low, high } => vec![low, high],
        }
    }
}

/// Solves `Re(f · conj(anchor)) = c` on the unitarity circle.
///
/// With `f = i/2 + u/2`, `|u| = 1`, the constraint becomes `u · n = p` where
/// `n = anchor/|anchor|` and `p = (2c − Im anchor)/|anchor|`, so the
/// discriminant is `1 − p²`. Values within `tol_disc` of zero are treated as
/// tangency and return the chord midpoint.
pub fn line_circle_intersections<T: Real>(
    anchor: Complex<T>,
    c: T,
    tol_disc: T,
) -> Result<Intersections<T>> {
    let r = anchor.norm();
    if !(r > T::zero()) {
        return Err(Error::Domain("anchor wave must be nonzero".into()));
    }
    let n = anchor / r;
    let two = T::lit(2.0);
    let p = (two * c - anchor.im) / r;
    let disc = T::one() - p * p;
    let half = T::lit(0.5);
    let centre = Complex::new(T::zero(), half);
    if disc < -tol_disc {
        return Err(Error::NoIntersection {
            discriminant: disc.to_f64().unwrap_or(f64::NAN),
        });
    }
    if disc <= tol_disc {
        return Ok(Intersections::Tangent(centre + n * (p * half)));
    }
    let s = disc.sqrt();
    let perp = Complex::new(-n.im, n.re);
    let a = centre + (n * p + perp * s) * half;
    let b = centre + (n * p - perp * s) * half;
    let (low, high) = if a.im <= b.im { (a, b) } else { (b, a) };
    Ok(Intersections::Two { low, high })
}
