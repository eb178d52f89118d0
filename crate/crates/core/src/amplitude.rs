//! Partial waves, phase shifts and the forward model
//! `f(x) = Σ (2l+1) f_l P_l(x)`, `F² = |f|²`.
//!
//! Kinematic factors are dropped throughout, so the total cross section is
//! `σ = Σ (2l+1) Im f_l = Im f(1)`.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::legendre::{gauss_rule, legendre_table, QuadratureRule, TripleProducts};
use crate::real::Real;

/// Phase shifts `δ_l` in radians, indexed by `l = 0…L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseShifts<T> {
    pub delta: Vec<T>,
}

/// Complex partial-wave amplitudes `f_l`, indexed by `l = 0…L`.
///
/// JSON form is `{"f": [[re, im], …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialWaves<T: Real> {
    #[serde(serialize_with = "ser_pairs", deserialize_with = "de_pairs")]
    pub f: Vec<Complex<T>>,
}

/// Legendre coefficients `C_n` of `F²(x) = Σ (2n+1) C_n P_n(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionCoefficients<T> {
    #[serde(rename = "C")]
    pub c: Vec<T>,
}

/// Real function of `cos θ` sampled at the nodes of a Gauss rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularFunction<T> {
    pub rule: QuadratureRule<T>,
    pub values: Vec<T>,
}

fn ser_pairs<T: Real, S: Serializer>(v: &[Complex<T>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| [z.re, z.im]))
}

fn de_pairs<'de, T: Real, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Complex<T>>, D::Error> {
    let raw: Vec<[T; 2]> = Vec::deserialize(d)?;
    Ok(raw.into_iter().map(|[re, im]| Complex::new(re, im)).collect())
}

impl<T: Real> PhaseShifts<T> {
    pub fn new(delta: Vec<T>) -> Self {
        Self { delta }
    }

    pub fn max_l(&self) -> usize {
        self.delta.len().saturating_sub(1)
    }
}

impl<T: Real> PartialWaves<T> {
    pub fn new(f: Vec<Complex<T>>) -> Self {
        Self { f }
    }

    pub fn max_l(&self) -> usize {
        self.f.len().saturating_sub(1)
    }

    /// Largest `|Im f_l − |f_l|²|` over all waves.
    pub fn unitarity_defect(&self) -> T {
        self.f
            .iter()
            .map(|z| (z.im - z.norm_sqr()).abs())
            .fold(T::zero(), T::max)
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitarity_defect() <= tol
            && self.f.iter().all(|z| z.im >= -tol && z.im <= T::one() + tol)
    }

    /// Phase shifts with `δ_l = arg(1 + 2i f_l)/2 ∈ (−π/2, π/2]`.
    ///
    /// `1 + 2i f_l = e^{2iδ_l}` for a unitary wave, and `f_l = 0` maps to 0.
    pub fn to_shifts(&self) -> PhaseShifts<T> {
        let two = T::lit(2.0);
        let delta = self
            .f
            .iter()
            .map(|z| {
                let s = Complex::new(T::one() - two * z.im, two * z.re);
                let d = s.im.atan2(s.re) / two;
                if d <= -T::FRAC_PI_2() {
                    T::FRAC_PI_2()
                } else {
                    d
                }
            })
            .collect();
        PhaseShifts { delta }
    }

    /// Maximum componentwise distance between two wave sets of equal length.
    pub fn distance(&self, other: &Self) -> T {
        let n = self.f.len().max(other.f.len());
        (0..n)
            .map(|l| {
                let a = self.f.get(l).copied().unwrap_or_else(Complex::zero);
                let b = other.f.get(l).copied().unwrap_or_else(Complex::zero);
                (a - b).norm()
            })
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> CrossSectionCoefficients<T> {
    pub fn new(c: Vec<T>) -> Self {
        Self { c }
    }

    /// `F²(x) = Σ (2n+1) C_n P_n(x)`.
    pub fn reconstruct(&self, x: T) -> T {
        let p = legendre_table(self.c.len().saturating_sub(1), x);
        self.c
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (n, &c)| acc + T::of(2 * n + 1) * c * p[n])
    }

    /// Largest `|ΔC_n|`, padding the shorter list with zeros.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let n = self.c.len().max(other.c.len());
        (0..n)
            .map(|i| {
                let a = self.c.get(i).copied().unwrap_or_else(T::zero);
                let b = other.c.get(i).copied().unwrap_or_else(T::zero);
                (a - b).abs()
            })
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> AngularFunction<T> {
    pub fn new(rule: QuadratureRule<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != rule.order() {
            return Err(Error::Domain(format!(
                "{} values for a rule of order {}",
                values.len(),
                rule.order()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("angular function has non-finite values".into()));
        }
        Ok(Self { rule, values })
    }

    /// `F = |f|` at the rule's nodes.
    pub fn modulus(w: &PartialWaves<T>, rule: QuadratureRule<T>) -> Self {
        let values = rule.nodes.iter().map(|&x| eval_unchecked(w, x).norm()).collect();
        Self { rule, values }
    }

    /// `F² = |f|²` at the rule's nodes.
    pub fn cross_section(w: &PartialWaves<T>, rule: QuadratureRule<T>) -> Self {
        let values = rule.nodes.iter().map(|&x| eval_unchecked(w, x).norm_sqr()).collect();
        Self { rule, values }
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }
}

/// `f_l = sin δ_l · e^{iδ_l}`.
pub fn waves_from_shifts<T: Real>(d: &PhaseShifts<T>) -> PartialWaves<T> {
    let f = d
        .delta
        .iter()
        .map(|&delta| {
            let s = delta.sin();
            Complex::new(s * delta.cos(), s * s)
        })
        .collect();
    PartialWaves { f }
}

pub(crate) fn eval_unchecked<T: Real>(w: &PartialWaves<T>, x: T) -> Complex<T> {
    let p = legendre_table(w.max_l(), x);
    w.f.iter()
        .enumerate()
        .fold(Complex::zero(), |acc, (l, &f)| acc + f * (T::of(2 * l + 1) * p[l]))
}

/// The scattering amplitude `f(x)` for `x = cos θ ∈ [−1, 1]`.
pub fn evaluate<T: Real>(w: &PartialWaves<T>, x: T) -> Result<Complex<T>> {
    if !(x.abs() <= T::one()) {
        return Err(Error::Domain(format!("cos theta = {x} outside [-1, 1]")));
    }
    Ok(eval_unchecked(w, x))
}

/// `σ = Σ (2l+1) Im f_l` (optical theorem).
pub fn total_cross_section<T: Real>(w: &PartialWaves<T>) -> T {
    w.f.iter()
        .enumerate()
        .fold(T::zero(), |acc, (l, z)| acc + T::of(2 * l + 1) * z.im)
}

/// `Σ (2l+1) |f_l|²`, equal to [`total_cross_section`] under elastic unitarity.
pub fn elastic_cross_section<T: Real>(w: &PartialWaves<T>) -> T {
    w.f.iter()
        .enumerate()
        .fold(T::zero(), |acc, (l, z)| acc + T::of(2 * l + 1) * z.norm_sqr())
}

/// `C_n = 1/2 ∫ |f|² P_n dx` by Gauss quadrature with `2L+1` nodes, which is
/// exact for the degree-`4L` integrand.
pub fn coefficients_by_quadrature<T: Real>(w: &PartialWaves<T>) -> CrossSectionCoefficients<T> {
    let l = w.max_l();
    let nmax = 2 * l;
    let rule = gauss_rule::<T>(2 * l + 1).expect("small Gauss rules always converge");
    let mut c = vec![T::zero(); nmax + 1];
    for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
        let p = legendre_table(nmax, x);
        let amp = w
            .f
            .iter()
            .enumerate()
            .fold(Complex::zero(), |acc, (k, &f)| acc + f * (T::of(2 * k + 1) * p[k]));
        let f2 = amp.norm_sqr();
        for (n, cn) in c.iter_mut().enumerate() {
            *cn += wt * f2 * p[n];
        }
    }
    let half = T::lit(0.5);
    CrossSectionCoefficients {
        c: c.into_iter().map(|v| v * half).collect(),
    }
}

/// `C_n = Σ_{a,b} (2a+1)(2b+1) Re(f_a f_b*) G(a, b, n)`.
pub fn coefficients_by_triple_products<T: Real>(
    w: &PartialWaves<T>,
    table: &TripleProducts<T>,
) -> CrossSectionCoefficients<T> {
    let l = w.max_l();
    assert!(table.lmax() >= l, "triple-product table too small");
    let mut c = vec![T::zero(); 2 * l + 1];
    for a in 0..=l {
        let wa = T::of(2 * a + 1);
        for b in a..=l {
            let re = (w.f[a] * w.f[b].conj()).re;
            let weight = if a == b { T::one() } else { T::lit(2.0) };
            let pre = weight * wa * T::of(2 * b + 1) * re;
            for (n, cn) in c.iter_mut().enumerate().take(a + b + 1).skip(b - a) {
                *cn += pre * table.get(a, b, n);
            }
        }
    }
    CrossSectionCoefficients { c }
}

/// Legendre coefficients of the differential cross section.
///
/// Computed algebraically from the triple products; in debug builds the
/// quadrature route is evaluated as well and the two must agree.
pub fn cross_section_coefficients<T: Real>(w: &PartialWaves<T>) -> CrossSectionCoefficients<T> {
    let table = TripleProducts::new(w.max_l());
    let out = coefficients_by_triple_products(w, &table);
    #[cfg(debug_assertions)]
    {
        let check = coefficients_by_quadrature(w);
        let scale = T::one().max(elastic_cross_section(w));
        let tol = T::epsilon() * T::lit(1e4) * scale;
        debug_assert!(
            out.max_abs_diff(&check) <= tol,
            "coefficient paths disagree by {}",
            out.max_abs_diff(&check)
        );
    }
    out
}

/// `f → −f*`, the sign flip of every phase shift.
pub fn conjugate_ambiguity<T: Real>(w: &PartialWaves<T>) -> PartialWaves<T> {
    PartialWaves {
        f: w.f.iter().map(|z| -z.conj()).collect(),
    }
}

/// Coefficient sequences `(Re f_l)` and `(Im f_l)` of the dispersive and
/// absorptive parts.
pub fn dispersive_absorptive<T: Real>(w: &PartialWaves<T>) -> (Vec<T>, Vec<T>) {
    w.f.iter().map(|z| (z.re, z.im)).unzip()
}
