//! Legendre polynomials, Gauss-Legendre quadrature and the linearisation
//! integrals `G(a, b, n) = 1/2 ∫ P_a P_b P_n dx` used to expand products of
//! partial-wave sums.

use std::ops::{Add, Mul};

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Maximum Newton steps per root in [`gauss_rule`].
const NEWTON_BUDGET: usize = 100;

/// `P_l(z)` for complex `z` by the three-term recurrence.
pub fn eval_legendre<T: Real>(l: usize, z: Complex<T>) -> Complex<T> {
    let mut prev = Complex::new(T::one(), T::zero());
    if l == 0 {
        return prev;
    }
    let mut cur = z;
    for k in 1..l {
        let kf = T::of(k);
        let next = (z * cur * (kf + kf + T::one()) - prev * kf) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// `P_l(x)` for real `x`.
pub fn eval_legendre_real<T: Real>(l: usize, x: T) -> T {
    legendre_with_derivative(l, x).0
}

/// `(P_l(x), P_l'(x))`. The derivative uses the closed form away from
/// `x = ±1` and the endpoint values `(±1)^(l+1) l(l+1)/2` there.
pub fn legendre_with_derivative<T: Real>(l: usize, x: T) -> (T, T) {
    if l == 0 {
        return (T::one(), T::zero());
    }
    let mut prev = T::one();
    let mut cur = x;
    for k in 1..l {
        let kf = T::of(k);
        let next = ((kf + kf + T::one()) * x * cur - kf * prev) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    let lf = T::of(l);
    let one_minus = T::one() - x * x;
    let deriv = if one_minus.abs() <= T::epsilon() {
        let end = lf * (lf + T::one()) / T::lit(2.0);
        if x > T::zero() || l % 2 == 1 {
            end
        } else {
            -end
        }
    } else {
        lf * (prev - x * cur) / one_minus
    };
    (cur, deriv)
}

/// `[P_0(x), …, P_lmax(x)]`.
pub fn legendre_table<T: Real>(lmax: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(T::one());
    if lmax >= 1 {
        out.push(x);
    }
    for k in 1..lmax {
        let kf = T::of(k);
        let next = ((kf + kf + T::one()) * x * out[k] - kf * out[k - 1]) / (kf + T::one());
        out.push(next);
    }
    out
}

/// Gauss-Legendre rule on `[-1, 1]` with nodes in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    pub fn integrate_complex<F: FnMut(T) -> Complex<T>>(&self, mut f: F) -> Complex<T> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(Complex::zero(), |acc, (&x, &w)| acc + f(x) * w)
    }
}

/// n-point Gauss-Legendre rule by Newton iteration on the roots of `P_n`.
pub fn gauss_rule<T: Real>(n: usize) -> Result<QuadratureRule<T>> {
    if n == 0 {
        return Err(Error::Domain("quadrature order must be at least 1".into()));
    }
    let half = n.div_ceil(2);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::of(n);
    let stop = T::epsilon() * T::lit(4.0);
    for i in 0..half {
        // Tricomi-style initial guess, descending from the largest root.
        let guess = T::PI() * (T::of(i) + T::lit(0.75)) / (nf + T::lit(0.5));
        let mut x = guess.cos();
        let mut converged = false;
        for _ in 0..NEWTON_BUDGET {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= stop {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureNoConvergence(n));
        }
        if n % 2 == 1 && i == half - 1 {
            x = T::zero();
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `G(a, b, n) = 1/2 ∫_{-1}^{1} P_a P_b P_n dx`.
///
/// Zero without any quadrature when `a + b + n` is odd or the triangle
/// condition fails; otherwise exact Gauss quadrature of the degree
/// `a + b + n` integrand.
pub fn triple_product<T: Real>(a: usize, b: usize, n: usize) -> T {
    if !triple_selection(a, b, n) {
        return T::zero();
    }
    let order = (a + b + n + 2) / 2;
    let rule = gauss_rule::<T>(order).expect("small Gauss rules always converge");
    let top = a.max(b).max(n);
    let half = T::lit(0.5);
    rule.integrate(|x| {
        let p = legendre_table(top, x);
        p[a] * p[b] * p[n]
    }) * half
}

fn triple_selection(a: usize, b: usize, n: usize) -> bool {
    (a + b + n) % 2 == 0 && n <= a + b && a <= b + n && b <= a + n
}

/// Table of `G(a, b, n)` for `a, b ≤ lmax` and `n ≤ 2 lmax`, built from a
/// single rule that is exact for every entry.
#[derive(Debug, Clone)]
pub struct TripleProducts<T> {
    lmax: usize,
    values: Vec<T>,
}

impl<T: Real> TripleProducts<T> {
    pub fn new(lmax: usize) -> Self {
        let nmax = 2 * lmax;
        let rule = gauss_rule::<T>(2 * lmax + 2).expect("small Gauss rules always converge");
        let tables: Vec<Vec<T>> = rule.nodes.iter().map(|&x| legendre_table(nmax, x)).collect();
        let dim = lmax + 1;
        let mut values = vec![T::zero(); dim * dim * (nmax + 1)];
        let half = T::lit(0.5);
        for a in 0..=lmax {
            for b in 0..=lmax {
                for n in 0..=nmax {
                    if !triple_selection(a, b, n) {
                        continue;
                    }
                    let mut acc = T::zero();
                    for (p, &w) in tables.iter().zip(&rule.weights) {
                        acc += w * p[a] * p[b] * p[n];
                    }
                    values[(a * dim + b) * (nmax + 1) + n] = acc * half;
                }
            }
        }
        Self { lmax, values }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, n: usize) -> T {
        let nmax = 2 * self.lmax;
        debug_assert!(a <= self.lmax && b <= self.lmax && n <= nmax);
        self.values[(a * (self.lmax + 1) + b) * (nmax + 1) + n]
    }
}

/// Finite Legendre series `Σ c_k P_k(x)` with real or complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreSeries<C> {
    pub coeffs: Vec<C>,
}

impl<C> LegendreSeries<C>
where
    C: Copy + Zero + Add<Output = C>,
{
    /// Projects node values onto `P_0 … P_{nterms-1}`:
    /// `c_k = (2k+1)/2 Σ_i w_i v_i P_k(x_i)`.
    pub fn project<T>(rule: &QuadratureRule<T>, values: &[C], nterms: usize) -> Self
    where
        T: Real,
        C: Mul<T, Output = C>,
    {
        assert_eq!(values.len(), rule.order(), "one value per node");
        let mut coeffs = vec![C::zero(); nterms];
        for ((&x, &w), &v) in rule.nodes.iter().zip(&rule.weights).zip(values) {
            let p = legendre_table(nterms.saturating_sub(1), x);
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c = *c + v * (w * p[k]);
            }
        }
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = *c * (T::of(2 * k + 1) * T::lit(0.5));
        }
        Self { coeffs }
    }

    /// Drops trailing coefficients whose size is below `floor`.
    pub fn trim_by<F: Fn(&C) -> bool>(&mut self, negligible: F) {
        while self.coeffs.len() > 1 && negligible(self.coeffs.last().unwrap()) {
            self.coeffs.pop();
        }
    }

    pub fn eval<T>(&self, x: T) -> C
    where
        T: Real,
        C: Mul<T, Output = C>,
    {
        let mut acc = C::zero();
        let mut prev = T::one();
        let mut cur = x;
        for (k, &c) in self.coeffs.iter().enumerate() {
            match k {
                0 => acc = acc + c,
                1 => acc = acc + c * x,
                _ => {
                    let kf = T::of(k - 1);
                    let next = ((kf + kf + T::one()) * x * cur - kf * prev) / (kf + T::one());
                    prev = cur;
                    cur = next;
                    acc = acc + c * cur;
                }
            }
        }
        acc
    }
}

/// Outcome of checking `|z|^l < |P_l(z)| < (1+√2)^l |z|^l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport<T> {
    pub lower: T,
    pub value: T,
    pub upper: T,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Checks the growth bounds of `P_l` outside the unit disc.
///
/// Both comparisons are strict for `l ≥ 1`. At `l = 0` all three numbers
/// equal 1 and the comparisons are made non-strict.
pub fn check_bounds_inequality<T: Real>(l: usize, z: Complex<T>) -> Result<BoundsReport<T>> {
    let r = z.norm();
    if !(r > T::one()) {
        return Err(Error::Domain(format!("|z| = {r} must exceed 1")));
    }
    let value = eval_legendre(l, z).norm();
    let li = l as i32;
    let lower = r.powi(li);
    let upper = (T::one() + T::SQRT_2()).powi(li) * lower;
    let (lower_ok, upper_ok) = if l == 0 {
        (value >= lower, value <= upper)
    } else {
        (value > lower, value < upper)
    };
    Ok(BoundsReport {
        lower,
        value,
        upper,
        lower_ok,
        upper_ok,
    })
}
