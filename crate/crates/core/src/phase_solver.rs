//! Phase of the amplitude from its modulus.
//!
//! Elastic unitarity makes the phase `φ` of `f = F e^{iφ}` satisfy
//!
//! ```text
//! F(12) sin φ(12) = 1/(4π) ∫ dΩ₃ F(13) F(23) cos[φ(13) − φ(23)]
//! ```
//!
//! where `12`, `13`, `23` are the angles between three unit vectors. When
//! `sup F(13)F(23)/F(12)` is below 0.79 (0.89 with the sharper estimate) the
//! map `φ ↦ arcsin(rhs/F)` is a contraction and iterating it from `φ ≡ 0`
//! converges to the unique solution.
//!
//! Direction 1 sits at the pole and direction 2 at polar angle `θ₁₂`; the
//! direction-3 integral is Gauss-Legendre in `cos θ₃` times a trapezoid rule
//! in azimuth with twice as many points. Off-node values come from the
//! Legendre series of `F e^{iφ}` projected from the node values, which is
//! exact for polynomial amplitudes of degree below the node count.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{AngularFunction, PartialWaves};
use crate::error::{Error, Result};
use crate::legendre::{gauss_rule, legendre_table, LegendreSeries, QuadratureRule};
use crate::real::Real;

pub const MARTIN_NEWTON_BOUND: f64 = 0.79;
pub const GANGAL_KUPSCH_BOUND: f64 = 0.89;

/// Phase `φ(cos θ)` at the nodes of a rule, on the branch `(−π/2, π/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFunction<T> {
    pub rule: QuadratureRule<T>,
    pub phi: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport<T> {
    pub sup_ratio: T,
    /// `(θ₁₃, θ₂₃, ψ)` at the maximum, in radians.
    pub attained_at: [T; 3],
    pub condition_079: bool,
    pub condition_089: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace<T> {
    /// `max_i |φ_{k+1}(x_i) − φ_k(x_i)|` per iteration.
    pub changes: Vec<T>,
    pub converged: bool,
    pub iters: usize,
}

impl<T: Real> IterationTrace<T> {
    /// Largest ratio of successive changes after `skip` iterations, ignoring
    /// changes below `floor` (rounding noise).
    pub fn worst_contraction(&self, skip: usize, floor: T) -> Option<T> {
        self.changes
            .windows(2)
            .skip(skip)
            .filter(|w| w[0] > floor && w[1] > floor)
            .map(|w| w[1] / w[0])
            .fold(None, |acc: Option<T>, r| Some(acc.map_or(r, |a| a.max(r))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution<T> {
    pub phase: PhaseFunction<T>,
    pub trace: IterationTrace<T>,
}

impl<T: Real> PhaseFunction<T> {
    pub fn zero(rule: QuadratureRule<T>) -> Self {
        let phi = vec![T::zero(); rule.order()];
        Self { rule, phi }
    }

    /// `F e^{iφ}` at the nodes.
    pub fn amplitude_at_nodes(&self, modulus: &AngularFunction<T>) -> Vec<Complex<T>> {
        modulus
            .values
            .iter()
            .zip(&self.phi)
            .map(|(&f, &p)| Complex::from_polar(f, p))
            .collect()
    }

    /// Partial waves `f_l = 1/2 ∫ F e^{iφ} P_l dx` for `l ≤ lmax`.
    pub fn partial_waves(&self, modulus: &AngularFunction<T>, lmax: usize) -> PartialWaves<T> {
        let g = self.amplitude_at_nodes(modulus);
        let mut f = vec![Complex::zero(); lmax + 1];
        for ((&x, &w), &gi) in self.rule.nodes.iter().zip(&self.rule.weights).zip(&g) {
            let p = legendre_table(lmax, x);
            for (l, fl) in f.iter_mut().enumerate() {
                *fl = *fl + gi * (w * p[l]);
            }
        }
        let half = T::lit(0.5);
        PartialWaves::new(f.into_iter().map(|z| z * half).collect())
    }
}

fn check_positive<T: Real>(modulus: &AngularFunction<T>) -> Result<()> {
    for (i, &v) in modulus.values.iter().enumerate() {
        if !(v > T::zero()) {
            return Err(Error::NonpositiveF {
                node: i,
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(())
}

fn check_same_rule<T: Real>(modulus: &AngularFunction<T>, phase: &PhaseFunction<T>) -> Result<()> {
    if modulus.rule != phase.rule || phase.phi.len() != modulus.values.len() {
        return Err(Error::Domain("F and phi must live on the same quadrature rule".into()));
    }
    Ok(())
}

/// Series of `F e^{iφ}` with negligible trailing terms removed.
fn amplitude_series<T: Real>(modulus: &AngularFunction<T>, phase: &PhaseFunction<T>) -> LegendreSeries<Complex<T>> {
    let g = phase.amplitude_at_nodes(modulus);
    let mut s = LegendreSeries::project(&modulus.rule, &g, modulus.rule.order());
    let scale = s.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    let floor = scale * T::epsilon() * T::lit(0.1);
    s.trim_by(|c| c.norm() <= floor);
    s
}

/// Quadrature for the direction-3 integral: Gauss in `cos θ₃` and a
/// trapezoid of `2 n_azimuth` points in azimuth, folded onto `[0, π]`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature<T> {
    polar: QuadratureRule<T>,
    sin_polar: Vec<T>,
    cos_azimuth: Vec<T>,
    azimuth_weight: Vec<T>,
}

impl<T: Real> SphereQuadrature<T> {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_azimuth == 0 {
            return Err(Error::Domain("azimuth resolution must be positive".into()));
        }
        let polar = gauss_rule::<T>(n_polar)?;
        let sin_polar = polar.nodes.iter().map(|&u| (T::one() - u * u).sqrt()).collect();
        let total = 2 * n_azimuth;
        // ψ_m = 2π m / total, m = 0..=n_azimuth; interior points stand for
        // their mirror image too.
        let base = T::one() / T::of(total);
        let (cos_azimuth, azimuth_weight) = (0..=n_azimuth)
            .map(|m| {
                let psi = T::TAU() * T::of(m) / T::of(total);
                let mult = if m == 0 || m == n_azimuth { T::one() } else { T::lit(2.0) };
                (psi.cos(), base * mult)
            })
            .unzip();
        Ok(Self {
            polar,
            sin_polar,
            cos_azimuth,
            azimuth_weight,
        })
    }

    /// Matches the resolution of `rule`: same Gauss order, `2n` azimuths.
    pub fn for_rule(rule: &QuadratureRule<T>) -> Result<Self> {
        Self::new(rule.order(), rule.order())
    }

    /// `1/(4π) ∫ dΩ₃ Re[g(13) conj g(23)]` with `cos θ₁₂ = x12`.
    fn integrate(&self, g: &LegendreSeries<Complex<T>>, x12: T) -> T {
        let s12 = (T::one() - x12 * x12).max(T::zero()).sqrt();
        let mut acc = T::zero();
        for ((&u, &w), &su) in self.polar.nodes.iter().zip(&self.polar.weights).zip(&self.sin_polar) {
            let g13 = g.eval(u).conj();
            let mut inner = T::zero();
            for (&cp, &wp) in self.cos_azimuth.iter().zip(&self.azimuth_weight) {
                let x23 = (u * x12 + su * s12 * cp).max(-T::one()).min(T::one());
                inner += wp * (g.eval(x23) * g13).re;
            }
            acc += w * inner;
        }
        // Polar weights sum to 2 and azimuth weights to 1.
        acc * T::lit(0.5)
    }
}

/// Right-hand side of the phase equation at `cos θ₁₂ = x12`.
pub fn wu_ohmura_rhs<T: Real>(modulus: &AngularFunction<T>, phase: &PhaseFunction<T>, x12: T) -> Result<T> {
    check_positive(modulus)?;
    check_same_rule(modulus, phase)?;
    let quad = SphereQuadrature::for_rule(&modulus.rule)?;
    Ok(quad.integrate(&amplitude_series(modulus, phase), x12))
}

/// Right-hand side at `x12` using an explicit direction-3 quadrature.
pub fn wu_ohmura_rhs_with<T: Real>(
    modulus: &AngularFunction<T>,
    phase: &PhaseFunction<T>,
    x12: T,
    quad: &SphereQuadrature<T>,
) -> Result<T> {
    check_positive(modulus)?;
    check_same_rule(modulus, phase)?;
    Ok(quad.integrate(&amplitude_series(modulus, phase), x12))
}

/// Right-hand side at every node of the rule.
pub fn wu_ohmura_rhs_nodes<T: Real>(modulus: &AngularFunction<T>, phase: &PhaseFunction<T>) -> Result<Vec<T>> {
    check_positive(modulus)?;
    check_same_rule(modulus, phase)?;
    let quad = SphereQuadrature::for_rule(&modulus.rule)?;
    Ok(rhs_nodes(modulus, phase, &quad))
}

fn rhs_nodes<T: Real>(modulus: &AngularFunction<T>, phase: &PhaseFunction<T>, quad: &SphereQuadrature<T>) -> Vec<T> {
    let g = amplitude_series(modulus, phase);
    modulus
        .rule
        .nodes
        .par_iter()
        .map(|&x| quad.integrate(&g, x))
        .collect()
}

/// `max_i |F sin φ − rhs|` over the nodes.
pub fn wu_ohmura_residual<T: Real>(modulus: &AngularFunction<T>, phase: &PhaseFunction<T>) -> Result<T> {
    let rhs = wu_ohmura_rhs_nodes(modulus, phase)?;
    Ok(modulus
        .values
        .iter()
        .zip(&phase.phi)
        .zip(&rhs)
        .map(|((&f, &p), &r)| (f * p.sin() - r).abs())
        .fold(T::zero(), T::max))
}

/// Iterates `φ ← arcsin(rhs/F)` from `φ ≡ 0`; a run that exhausts
/// `max_iter` is returned with `converged == false`.
pub fn fixed_point_iterate<T: Real>(modulus: &AngularFunction<T>, max_iter: usize, tol: T) -> Result<PhaseSolution<T>> {
    check_positive(modulus)?;
    let quad = SphereQuadrature::for_rule(&modulus.rule)?;
    let mut phase = PhaseFunction::zero(modulus.rule.clone());
    let mut changes = Vec::new();
    for iter in 1..=max_iter {
        let rhs = rhs_nodes(modulus, &phase, &quad);
        let mut next = Vec::with_capacity(rhs.len());
        for (i, (&r, &f)) in rhs.iter().zip(&modulus.values).enumerate() {
            let s = r / f;
            if s.abs() > T::one() {
                return Err(Error::SinOutOfRange {
                    node: i,
                    cos_theta: modulus.rule.nodes[i].to_f64().unwrap_or(f64::NAN),
                    value: s.to_f64().unwrap_or(f64::NAN),
                });
            }
            let p = s.asin();
            next.push(if p <= -T::FRAC_PI_2() { T::FRAC_PI_2() } else { p });
        }
        let change = next
            .iter()
            .zip(&phase.phi)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        phase.phi = next;
        changes.push(change);
        if change < tol {
            return Ok(PhaseSolution {
                phase,
                trace: IterationTrace {
                    changes,
                    converged: true,
                    iters: iter,
                },
            });
        }
    }
    Ok(PhaseSolution {
        phase,
        trace: IterationTrace {
            changes,
            converged: false,
            iters: max_iter,
        },
    })
}

/// Solves the phase equation by fixed-point iteration.
pub fn fixed_point_solve<T: Real>(modulus: &AngularFunction<T>, max_iter: usize, tol: T) -> Result<PhaseSolution<T>> {
    let sol = fixed_point_iterate(modulus, max_iter, tol)?;
    if !sol.trace.converged {
        return Err(Error::MaxIterExceeded {
            iters: sol.trace.iters,
            last_change: sol
                .trace
                .changes
                .last()
                .and_then(|c| c.to_f64())
                .unwrap_or(f64::NAN),
        });
    }
    Ok(sol)
}

/// `sup F(13) F(23) / F(12)` over a grid of direction triples.
///
/// `θ₁₃, θ₂₃ ∈ [0, π]` and relative azimuth `ψ ∈ [0, π]` each take `n_grid`
/// equally spaced values, and `cos θ₁₂ = cos θ₁₃ cos θ₂₃ + sin θ₁₃ sin θ₂₃ cos ψ`.
/// A nonpositive interpolated `F(12)` makes the ratio infinite.
pub fn contraction_sup<T: Real>(modulus: &AngularFunction<T>, n_grid: usize) -> Result<ContractionReport<T>> {
    check_positive(modulus)?;
    if n_grid < 2 {
        return Err(Error::Domain("contraction grid needs at least 2 points per axis".into()));
    }
    let series = LegendreSeries::project(&modulus.rule, &modulus.values, modulus.rule.order());
    let step = T::PI() / T::of(n_grid - 1);
    let angles: Vec<T> = (0..n_grid).map(|k| step * T::of(k)).collect();
    let cs: Vec<(T, T)> = angles.iter().map(|a| (a.cos(), a.sin())).collect();
    let f_theta: Vec<T> = cs.iter().map(|&(c, _)| series.eval(c)).collect();
    let cos_psi: Vec<T> = angles.iter().map(|a| a.cos()).collect();

    let best = (0..n_grid)
        .into_par_iter()
        .map(|a| {
            let mut best = (T::neg_infinity(), [T::zero(); 3]);
            for b in 0..n_grid {
                let num = f_theta[a] * f_theta[b];
                for (p, &cp) in cos_psi.iter().enumerate() {
                    let x12 = (cs[a].0 * cs[b].0 + cs[a].1 * cs[b].1 * cp).max(-T::one()).min(T::one());
                    let den = series.eval(x12);
                    let ratio = if den > T::zero() { num / den } else { T::infinity() };
                    if ratio > best.0 {
                        best = (ratio, [angles[a], angles[b], angles[p]]);
                    }
                }
            }
            best
        })
        .reduce(
            || (T::neg_infinity(), [T::zero(); 3]),
            |x, y| if y.0 > x.0 { y } else { x },
        );
    Ok(ContractionReport {
        sup_ratio: best.0,
        attained_at: best.1,
        condition_079: best.0 < T::lit(MARTIN_NEWTON_BOUND),
        condition_089: best.0 < T::lit(GANGAL_KUPSCH_BOUND),
    })
}
