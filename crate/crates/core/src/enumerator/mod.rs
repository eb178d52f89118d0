//! Enumeration of every unitary amplitude reproducing a differential cross
//! section.
//!
//! The top coefficient `C_2L` fixes `|f_L|`. Going down in `l`, the
//! coefficient `C_{L+M}` only involves waves with index `≥ M`, and the
//! unknown `f_M` enters through the single pair `(M, L)`, so each step is a
//! straight line `Re(f_M f_L*) = const` in the Argand plane. Its crossings
//! with the unitarity circle give at most two candidates per step. Leaves of
//! the resulting tree are accepted when they reproduce every coefficient,
//! including the low ones `C_0 … C_{L-1}` that the descent never used.
//!
//! Only one member of each `f → −f*` pair is listed: the one with
//! `δ_L ∈ (0, π/2]`.

pub mod geometry;
pub mod scan;

use std::cmp::Ordering;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

pub use geometry::{line_circle_intersections, Intersections};

use crate::amplitude::{
    coefficients_by_triple_products, conjugate_ambiguity, CrossSectionCoefficients, PartialWaves,
};
use crate::error::{Error, Result};
use crate::legendre::TripleProducts;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig<T> {
    /// Leaf acceptance threshold on `max |ΔC_n|`; also the trimming floor.
    pub tol_residual: T,
    /// Half-width of the tangency window on the line/circle discriminant.
    pub tol_discriminant: T,
    /// Two solutions closer than this (componentwise) are the same.
    pub tol_dedupe: T,
    pub max_solutions: usize,
    pub prune_by_sigma: bool,
}

impl<T: Real> Default for DescentConfig<T> {
    fn default() -> Self {
        Self {
            tol_residual: T::lit(1e-8),
            tol_discriminant: T::lit(1e-10),
            tol_dedupe: T::lit(1e-7),
            max_solutions: 1024,
            prune_by_sigma: true,
        }
    }
}

impl<T: Real> DescentConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol_residual > T::zero()
            && self.tol_discriminant > T::zero()
            && self.tol_dedupe > T::zero()
            && self.max_solutions >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("descent tolerances must be positive and max_solutions ≥ 1".into()))
        }
    }
}

/// Canonical solutions reproducing one set of cross-section coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SolutionSet<T: Real> {
    pub sigma: T,
    pub solutions: Vec<PartialWaves<T>>,
    pub residuals: Vec<T>,
    pub branch_paths: Vec<String>,
}

impl<T: Real> SolutionSet<T> {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

/// Drops trailing coefficients with `|C_n| < tol`.
pub fn trim_coefficients<T: Real>(c: &CrossSectionCoefficients<T>, tol: T) -> CrossSectionCoefficients<T> {
    let mut v = c.c.clone();
    while v.last().is_some_and(|x| x.abs() < tol) {
        v.pop();
    }
    CrossSectionCoefficients::new(v)
}

/// `f_L` from the top coefficient `C_2L = (2L+1)² G(L,L,2L) sin² δ_L`, with
/// `δ_L ∈ (0, π/2]`.
///
/// `C` must already be trimmed. `sin² δ_L ∈ (1, 1 + slack]` is clamped to 1.
pub fn leading_wave<T: Real>(c: &CrossSectionCoefficients<T>, slack: T) -> Result<Complex<T>> {
    let top = c
        .c
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::InvalidCrossSection("no coefficients".into()))?;
    let l = top.div_ceil(2);
    let c_top = if top % 2 == 0 { c.c[top] } else { T::zero() };
    let table = TripleProducts::<T>::new(l);
    leading_from_table(c_top, l, &table, slack)
}

fn leading_from_table<T: Real>(c_top: T, l: usize, table: &TripleProducts<T>, slack: T) -> Result<Complex<T>> {
    let w = T::of(2 * l + 1);
    let s2 = c_top / (w * w * table.get(l, l, 2 * l));
    if !(s2 > T::zero()) || s2 > T::one() + slack {
        return Err(Error::InvalidCrossSection(format!(
            "top coefficient C_{} = {c_top} gives sin²δ_{l} = {s2}, outside (0, 1]",
            2 * l
        )));
    }
    let s2 = s2.min(T::one());
    let s = s2.sqrt();
    Ok(Complex::new(s * (T::one() - s2).sqrt(), s2))
}

/// Threshold index and solution-count bound for a total cross section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountBound {
    /// Largest `M ≥ 0` with `(7/8)(M + 1/2) < σ` (0 if none).
    pub threshold: usize,
    /// `max(1, 2^(M−1))`, saturating.
    pub bound: u64,
}

/// Bound on the number of canonical solutions for total cross section `σ`.
///
/// An ambiguity at step `M` forces `σ > (7/8)(M + 1/2)`, so no branching can
/// happen above the threshold index.
pub fn count_bound<T: Real>(sigma: T) -> CountBound {
    let eighth7 = T::lit(7.0 / 8.0);
    let mut m = 0usize;
    while eighth7 * (T::of(m + 1) + T::lit(0.5)) < sigma {
        m += 1;
    }
    let bound = if m <= 1 {
        1
    } else if m - 1 >= 64 {
        u64::MAX
    } else {
        1u64 << (m - 1)
    };
    CountBound { threshold: m, bound }
}

/// Drops the higher candidate at steps above the count-bound threshold.
pub fn sigma_prune<T: Real>(step: usize, threshold: usize, candidates: Intersections<T>) -> Vec<(Complex<T>, char)> {
    match candidates {
        Intersections::Tangent(p) => vec![(p, 'T')],
        Intersections::Two { low, .. } if step > threshold => vec![(low, 'L')],
        Intersections::Two { low, high } => vec![(low, 'L'), (high, 'H')],
    }
}

/// One leaf of the descent tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf<T: Real> {
    pub waves: PartialWaves<T>,
    pub path: String,
    pub residual: T,
}

/// Descent state shared by every branch for one input.
#[derive(Debug, Clone)]
pub struct Descent<T: Real> {
    target: CrossSectionCoefficients<T>,
    l: usize,
    table: TripleProducts<T>,
    leading: Complex<T>,
}

impl<T: Real> Descent<T> {
    /// Trims the input and fixes the leading wave.
    pub fn new(c: &CrossSectionCoefficients<T>, cfg: &DescentConfig<T>) -> Result<Self> {
        Self::with_table(c, cfg, None)
    }

    /// Like [`Descent::new`] but reuses a prebuilt table when it is large
    /// enough.
    pub fn with_table(
        c: &CrossSectionCoefficients<T>,
        cfg: &DescentConfig<T>,
        table: Option<&TripleProducts<T>>,
    ) -> Result<Self> {
        cfg.validate()?;
        if c.c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCrossSection("non-finite coefficient".into()));
        }
        let mut target = trim_coefficients(c, cfg.tol_residual);
        let top = target
            .c
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidCrossSection("all coefficients vanish".into()))?;
        let l = top.div_ceil(2);
        if top % 2 == 1 {
            target.c.push(T::zero());
        }
        let table = match table {
            Some(t) if t.lmax() == l => t.clone(),
            _ => TripleProducts::new(l),
        };
        let leading = leading_from_table(target.c[2 * l], l, &table, cfg.tol_residual)?;
        Ok(Self {
            target,
            l,
            table,
            leading,
        })
    }

    pub fn max_l(&self) -> usize {
        self.l
    }

    pub fn target(&self) -> &CrossSectionCoefficients<T> {
        &self.target
    }

    pub fn leading(&self) -> Complex<T> {
        self.leading
    }

    pub fn sigma(&self) -> T {
        self.target.c[0]
    }

    /// Right-hand side `c` of `Re(f_M f_L*) = c` given waves `M+1 … L`.
    fn step_value(&self, f: &[Complex<T>], m: usize) -> T {
        let l = self.l;
        let n = l + m;
        let mut known = T::zero();
        for a in (m + 1)..=l {
            for b in a..=l {
                let g = self.table.get(a, b, n);
                if g == T::zero() {
                    continue;
                }
                let mult = if a == b { T::one() } else { T::lit(2.0) };
                known += mult * T::of(2 * a + 1) * T::of(2 * b + 1) * g * (f[a] * f[b].conj()).re;
            }
        }
        let denom = T::lit(2.0) * T::of(2 * m + 1) * T::of(2 * l + 1) * self.table.get(m, l, l + m);
        (self.target.c[n] - known) / denom
    }

    fn residual(&self, w: &PartialWaves<T>) -> T {
        coefficients_by_triple_products(w, &self.table).max_abs_diff(&self.target)
    }

    /// Full residual vector `C_n(leaf) − C_n(target)`.
    pub fn residual_vector(&self, w: &PartialWaves<T>) -> Vec<T> {
        let got = coefficients_by_triple_products(w, &self.table);
        got.c.iter().zip(&self.target.c).map(|(&a, &b)| a - b).collect()
    }

    /// Every leaf of the tree, depth first with the lower point first. Steps
    /// whose line misses the circle end their branch.
    pub fn leaves(&self, cfg: &DescentConfig<T>) -> Vec<Leaf<T>> {
        let l = self.l;
        let threshold = count_bound(self.sigma()).threshold;
        let mut f = vec![Complex::zero(); l + 1];
        f[l] = self.leading;
        let mut out = Vec::new();
        let mut stack: Vec<(usize, Vec<Complex<T>>, String)> = Vec::new();
        if l == 0 {
            let w = PartialWaves::new(f);
            let residual = self.residual(&w);
            return vec![Leaf {
                waves: w,
                path: String::new(),
                residual,
            }];
        }
        stack.push((l - 1, f, String::new()));
        while let Some((m, f, path)) = stack.pop() {
            let c = self.step_value(&f, m);
            let Ok(hits) = line_circle_intersections(self.leading, c, cfg.tol_discriminant) else {
                continue;
            };
            let kept = if cfg.prune_by_sigma {
                sigma_prune(m, threshold, hits)
            } else {
                sigma_prune(m, usize::MAX, hits)
            };
            if m == 0 {
                for (p, tag) in kept {
                    let mut g = f.clone();
                    g[0] = p;
                    let w = PartialWaves::new(g);
                    let residual = self.residual(&w);
                    out.push(Leaf {
                        waves: w,
                        path: format!("{path}{tag}"),
                        residual,
                    });
                }
            } else {
                // Reversed so the lower point is popped first.
                for (p, tag) in kept.into_iter().rev() {
                    let mut g = f.clone();
                    g[m] = p;
                    stack.push((m - 1, g, format!("{path}{tag}")));
                }
            }
        }
        out
    }

    /// The leaf reached by a fixed branch string, if every step intersects.
    /// `'L'`/`'T'` take the lower (or only) point, `'H'` the higher one.
    pub fn follow(&self, path: &str, tol_disc: T) -> Option<PartialWaves<T>> {
        let l = self.l;
        if path.len() != l {
            return None;
        }
        let mut f = vec![Complex::zero(); l + 1];
        f[l] = self.leading;
        for (k, tag) in path.chars().enumerate() {
            let m = l - 1 - k;
            let c = self.step_value(&f, m);
            let hits = line_circle_intersections(self.leading, c, tol_disc).ok()?;
            f[m] = match (hits, tag) {
                (Intersections::Two { high, .. }, 'H') => high,
                (Intersections::Two { low, .. }, _) => low,
                (Intersections::Tangent(p), _) => p,
            };
        }
        Some(PartialWaves::new(f))
    }
}

/// Picks the representative of `{w, −w*}` whose first clearly nonzero real
/// part (scanning down from `L`) is positive. Only needed when `f_L` is
/// purely imaginary, where both members have `δ_L = π/2`.
fn canonicalize<T: Real>(w: PartialWaves<T>, tol: T) -> PartialWaves<T> {
    for z in w.f.iter().rev() {
        if z.re > tol {
            return w;
        }
        if z.re < -tol {
            return conjugate_ambiguity(&w);
        }
    }
    w
}

fn lexicographic<T: Real>(a: &PartialWaves<T>, b: &PartialWaves<T>) -> Ordering {
    for (x, y) in a.f.iter().zip(&b.f) {
        for (p, q) in [(x.im, y.im), (x.re, y.re)] {
            match p.partial_cmp(&q) {
                Some(Ordering::Equal) | None => {}
                Some(o) => return o,
            }
        }
    }
    Ordering::Equal
}

/// Every canonical unitary amplitude reproducing `c` within
/// `cfg.tol_residual`.
///
/// An empty set is a valid result: the cross section is then inconsistent
/// with elastic unitarity.
pub fn descend<T: Real>(c: &CrossSectionCoefficients<T>, cfg: &DescentConfig<T>) -> Result<SolutionSet<T>> {
    let descent = Descent::new(c, cfg)?;
    collect(&descent, cfg)
}

pub(crate) fn collect<T: Real>(descent: &Descent<T>, cfg: &DescentConfig<T>) -> Result<SolutionSet<T>> {
    let leaves = descent.leaves(cfg);
    let imaginary_top = descent.leading.re.abs() <= cfg.tol_dedupe * T::lit(1e-3);
    let mut accepted: Vec<Leaf<T>> = Vec::new();
    for mut leaf in leaves.into_iter().filter(|leaf| leaf.residual <= cfg.tol_residual) {
        if imaginary_top {
            leaf.waves = canonicalize(leaf.waves, cfg.tol_dedupe);
        }
        if accepted
            .iter()
            .any(|kept| kept.waves.distance(&leaf.waves) <= cfg.tol_dedupe)
        {
            continue;
        }
        accepted.push(leaf);
        if accepted.len() > cfg.max_solutions {
            return Err(Error::SolutionOverflow {
                limit: cfg.max_solutions,
            });
        }
    }
    accepted.sort_by(|a, b| lexicographic(&a.waves, &b.waves));
    for leaf in &accepted {
        assert!(leaf.residual <= cfg.tol_residual, "accepted leaf above tolerance");
    }
    let (solutions, rest): (Vec<_>, Vec<_>) = accepted
        .into_iter()
        .map(|leaf| (leaf.waves, (leaf.residual, leaf.path)))
        .unzip();
    let (residuals, branch_paths) = rest.into_iter().unzip();
    Ok(SolutionSet {
        sigma: descent.sigma(),
        solutions,
        residuals,
        branch_paths,
    })
}
