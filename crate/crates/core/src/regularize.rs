//! Unitary tails, mollified phase shifts and entire-function order estimates.
//!
//! A polynomial amplitude of degree `L` is completed by partial waves
//! `f_ℓ = r_ℓ` for `ℓ > L` with
//!
//! ```text
//! Re r_ℓ = (λ/2) ∫ P_ℓ(x) eˣ dx,   Im r_ℓ = (1 − √(1 − 4 Re² r_ℓ)) / 2,
//! ```
//!
//! so that every appended wave sits on the unitarity circle. Rodrigues'
//! formula and `ℓ` integrations by parts give
//! `∫ P_ℓ eˣ dx = ∫ (1 − x²)^ℓ cosh x dx / (2^ℓ ℓ!)` for every `ℓ`: the odd
//! part of `eˣ` integrates to zero against the even weight. The dispersive
//! tail therefore decays like `1/(2^ℓ ℓ!)` (order 1) and the absorptive tail
//! like its square (order 1/2).

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{PartialWaves, PhaseShifts};
use crate::error::{Error, Result};
use crate::legendre::gauss_rule;
use crate::real::Real;

/// Hard stop for the tail: `ℓ!` overflows `f64` past this.
pub const MAX_TAIL_L: usize = 170;
/// Tail waves are kept until `|Re r_ℓ|` drops below this (for `|λ| = 1/2`).
pub const TAIL_FLOOR: f64 = 1e-300;
/// Window elasticity `d ln ρ_ℓ / d ln ℓ` above which ratios are reported as
/// growing without bound.
pub const DIVERGENCE_ELASTICITY: f64 = 0.15;
pub const DEFAULT_ORDER_WINDOW: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCoefficients<T> {
    pub lambda: T,
    /// First tail index, `L + 1`.
    pub start: usize,
    pub re_r: Vec<T>,
    pub im_r: Vec<T>,
    pub lmax: usize,
}

impl<T: Real> TailCoefficients<T> {
    pub fn waves(&self) -> impl Iterator<Item = Complex<T>> + '_ {
        self.re_r.iter().zip(&self.im_r).map(|(&r, &i)| Complex::new(r, i))
    }

    /// `max |Im r − (Re² r + Im² r)|` over the tail.
    pub fn unitarity_residual(&self) -> T {
        self.waves()
            .map(|z| (z.im - z.norm_sqr()).abs())
            .fold(T::zero(), T::max)
    }

    /// `Im r_ℓ < (5/4) Re² r_ℓ` wherever `|Re r_ℓ| < 2/5`. Waves whose square
    /// underflows to zero are exactly zero in both parts and are skipped.
    pub fn square_bound_holds(&self) -> bool {
        let cap = T::lit(0.4);
        self.waves()
            .filter(|z| z.re.abs() < cap && z.re * z.re > T::zero())
            .all(|z| z.im < T::lit(1.25) * z.re * z.re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderFlag {
    Converging,
    Diverging,
    AllZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate<T> {
    /// Maximum ratio over the trailing window.
    pub rho: T,
    /// `ℓ ln ℓ / (−ln |a_ℓ|)` for every `ℓ ≥ 2` with `0 < |a_ℓ| < 1`.
    pub ratios: Vec<T>,
    /// Index `ℓ` of each entry of `ratios`.
    pub ells: Vec<usize>,
    pub window: usize,
    pub flag: OrderFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaSplitReport<T> {
    pub dispersive: OrderEstimate<T>,
    pub absorptive: OrderEstimate<T>,
    /// `|ρ_D − 1| < 0.15`.
    pub dispersive_order_one: bool,
    /// `|ρ_A − 1/2| < 0.1`.
    pub absorptive_order_half: bool,
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda.abs() < T::lit(0.5)) {
        return Err(Error::Domain(format!("|lambda| must be below 1/2, got {lambda}")));
    }
    Ok(())
}

fn ln_factorial<T: Real>(n: usize) -> T {
    (2..=n).fold(T::zero(), |acc, k| acc + T::of(k).ln())
}

/// `ln(1/(2^ℓ ℓ!))`.
fn ln_rodrigues_scale<T: Real>(l: usize) -> T {
    -(T::of(l) * T::LN_2() + ln_factorial::<T>(l))
}

/// `∫ (1 − x²)^ℓ cosh x dx` by Gauss-Legendre of order `ℓ + 30`.
fn rodrigues_integral<T: Real>(l: usize) -> Result<T> {
    let rule = gauss_rule::<T>(l + 30)?;
    let e = i32::try_from(l).map_err(|_| Error::Domain("tail index too large".into()))?;
    Ok(rule.integrate(|x| (T::one() - x * x).powi(e) * x.cosh()))
}

/// `Re r_ℓ = (λ/2) ∫ P_ℓ eˣ dx`, via the integrated-by-parts form with a
/// positive integrand and the `1/(2^ℓ ℓ!)` scale applied in log space.
pub fn tail_re<T: Real>(l: usize, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    if lambda == T::zero() {
        return Ok(T::zero());
    }
    let integral = rodrigues_integral::<T>(l)?;
    let mag = (lambda.abs() * T::lit(0.5)).ln() + ln_rodrigues_scale::<T>(l) + integral.ln();
    Ok(lambda.signum() * mag.exp())
}

/// `Re r_ℓ` from the power series `∫ P_ℓ eˣ dx = 2 Σ_j 2^{−j} / (j! (2ℓ+2j+1)!!)`.
pub fn tail_re_series<T: Real>(l: usize, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    if lambda == T::zero() {
        return Ok(T::zero());
    }
    let ln_double_fact = (0..=l).fold(T::zero(), |acc, k| acc + T::of(2 * k + 1).ln());
    let mut term = T::one();
    let mut sum = T::zero();
    for j in 0..200usize {
        sum += term;
        term = term * T::lit(0.5) / (T::of(j + 1) * T::of(2 * l + 2 * j + 3));
        if term < sum * T::epsilon() * T::lit(0.01) {
            break;
        }
    }
    let mag = (lambda.abs() * T::lit(0.5)).ln() + T::LN_2() - ln_double_fact + sum.ln();
    Ok(lambda.signum() * mag.exp())
}

/// `(λ/2) √(π/(ℓ − 1/2)) / (2^ℓ ℓ!)`, the large-`ℓ` form of [`tail_re`].
pub fn tail_re_asymptotic<T: Real>(l: usize, lambda: T) -> Result<T> {
    if l == 0 {
        return Err(Error::Domain("asymptotic tail needs l >= 1".into()));
    }
    if lambda == T::zero() {
        return Ok(T::zero());
    }
    let width = (T::PI() / (T::of(l) - T::lit(0.5))).ln() * T::lit(0.5);
    let mag = (lambda.abs() * T::lit(0.5)).ln() + ln_rodrigues_scale::<T>(l) + width;
    Ok(lambda.signum() * mag.exp())
}

/// Smaller root of `im = re² + im²`.
pub fn unitarize_tail<T: Real>(re: T) -> Result<T> {
    if !(re.abs() <= T::lit(0.5)) {
        return Err(Error::Domain(format!("|Re r| must not exceed 1/2, got {re}")));
    }
    let q = re * re;
    let root = (T::one() - T::lit(4.0) * q).sqrt();
    // 2 re² / (1 + √(1 − 4 re²)) avoids cancellation for small re.
    Ok(T::lit(2.0) * q / (T::one() + root))
}

/// Last tail index: the first `ℓ` with `|Re r_ℓ| < 1e−300` at `|λ| = 1/2`,
/// capped at 170. Independent of `λ` so that tails for different `λ` line up.
pub fn default_tail_lmax<T: Real>() -> Result<usize> {
    let floor = T::lit(TAIL_FLOOR).max(T::min_positive_value()).ln();
    let worst = T::lit(0.25).ln();
    for l in 0..MAX_TAIL_L {
        if worst + ln_rodrigues_scale::<T>(l) + rodrigues_integral::<T>(l)?.ln() < floor {
            return Ok(l);
        }
    }
    Ok(MAX_TAIL_L)
}

/// Tail waves `r_ℓ` for `ℓ = start..=lmax`.
pub fn tail_coefficients<T: Real>(start: usize, lambda: T, lmax: Option<usize>) -> Result<TailCoefficients<T>> {
    check_lambda(lambda)?;
    let lmax = match lmax {
        Some(l) => l,
        None => default_tail_lmax::<T>()?.max(start),
    };
    if lmax + 1 < start {
        return Err(Error::Domain(format!("lmax {lmax} is below the amplitude degree {}", start - 1)));
    }
    let pairs = (start..=lmax)
        .into_par_iter()
        .map(|l| {
            let re = tail_re(l, lambda)?;
            Ok((re, unitarize_tail(re)?))
        })
        .collect::<Result<Vec<(T, T)>>>()?;
    let (re_r, im_r) = pairs.into_iter().unzip();
    Ok(TailCoefficients {
        lambda,
        start,
        re_r,
        im_r,
        lmax,
    })
}

/// Appends the unitary tail to `w`; `lmax` defaults to [`default_tail_lmax`].
pub fn extend_amplitude<T: Real>(
    w: &PartialWaves<T>,
    lambda: T,
    lmax: Option<usize>,
) -> Result<(PartialWaves<T>, TailCoefficients<T>)> {
    let tail = tail_coefficients(w.f.len(), lambda, lmax)?;
    let mut f = w.f.clone();
    f.extend(tail.waves());
    Ok((PartialWaves::new(f), tail))
}

/// `δ_ℓ ← δ_ℓ exp(−λ ℓ ln ℓ)`, with `ℓ ln ℓ = 0` for `ℓ ≤ 1`.
pub fn mollify<T: Real>(d: &PhaseShifts<T>, lambda: T) -> Result<PhaseShifts<T>> {
    if !(lambda >= T::zero()) {
        return Err(Error::Domain(format!("mollifier scale must be nonnegative, got {lambda}")));
    }
    let delta = d
        .delta
        .iter()
        .enumerate()
        .map(|(l, &x)| {
            if l < 2 {
                x
            } else {
                let ll = T::of(l);
                x * (-lambda * ll * ll.ln()).exp()
            }
        })
        .collect();
    Ok(PhaseShifts::new(delta))
}

/// Order of an entire function from the decay of its coefficients:
/// `ρ ≈ max ℓ ln ℓ / (−ln |a_ℓ|)` over the last `window` entries.
pub fn order_estimate<T: Real>(coeffs: &[T], window: usize) -> Result<OrderEstimate<T>> {
    if window < 5 {
        return Err(Error::Domain(format!("order window must be at least 5, got {window}")));
    }
    if coeffs.len() < window {
        return Err(Error::Domain(format!(
            "need at least {window} coefficients, got {}",
            coeffs.len()
        )));
    }
    let tail_start = coeffs.len() - window;
    if coeffs[tail_start..].iter().all(|a| *a == T::zero()) {
        return Err(Error::AllZeroWindow);
    }
    let (ells, ratios): (Vec<usize>, Vec<T>) = coeffs
        .iter()
        .enumerate()
        .skip(2)
        .filter_map(|(l, a)| {
            let m = a.abs();
            (m > T::zero() && m < T::one()).then(|| {
                let ll = T::of(l);
                (l, ll * ll.ln() / -m.ln())
            })
        })
        .unzip();
    let in_window: Vec<(usize, T)> = ells
        .iter()
        .zip(&ratios)
        .filter(|(l, _)| **l >= tail_start)
        .map(|(&l, &r)| (l, r))
        .collect();
    let (Some(first), Some(last)) = (in_window.first(), in_window.last()) else {
        return Err(Error::Domain("no coefficient in (0, 1) inside the window".into()));
    };
    let rho = in_window.iter().fold(T::neg_infinity(), |m, &(_, r)| m.max(r));
    let flag = if last.0 > first.0 {
        let slope = (last.1 / first.1).ln() / (T::of(last.0) / T::of(first.0)).ln();
        if slope > T::lit(DIVERGENCE_ELASTICITY) {
            OrderFlag::Diverging
        } else {
            OrderFlag::Converging
        }
    } else {
        OrderFlag::Converging
    };
    Ok(OrderEstimate {
        rho,
        ratios,
        ells,
        window,
        flag,
    })
}

/// Orders of `Re f_ℓ` and `Im f_ℓ` for `ℓ ≤ upto`.
pub fn verify_da_split<T: Real>(w: &PartialWaves<T>, upto: usize, window: usize) -> Result<DaSplitReport<T>> {
    let n = (upto + 1).min(w.f.len());
    let re: Vec<T> = w.f[..n].iter().map(|z| z.re).collect();
    let im: Vec<T> = w.f[..n].iter().map(|z| z.im).collect();
    let dispersive = order_estimate(&re, window)?;
    let absorptive = order_estimate(&im, window)?;
    Ok(DaSplitReport {
        dispersive_order_one: (dispersive.rho - T::one()).abs() < T::lit(0.15),
        absorptive_order_half: (absorptive.rho - T::lit(0.5)).abs() < T::lit(0.1),
        dispersive,
        absorptive,
    })
}
