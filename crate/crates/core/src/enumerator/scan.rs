//! Seeded ambiguity scan.
//!
//! Amplitudes with a genuine second solution form a thin set (a curve for
//! `L = 2`), so plain sampling essentially never lands on one. The scan
//! therefore runs in two passes:
//!
//! 1. Latin-hypercube samples of the phase shifts are enumerated, and for
//!    each the best *near-miss* is recorded: the tree leaf, distinct from the
//!    input and its conjugate, with the smallest coefficient residual.
//! 2. The most promising near-misses are pulled onto the ambiguous set by a
//!    minimum-norm Gauss-Newton iteration on the phase shifts that drives the
//!    residual of that leaf to zero. Each refined point is then enumerated
//!    again with the ordinary tolerances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{collect, count_bound, Descent, DescentConfig, SolutionSet};
use crate::amplitude::{
    conjugate_ambiguity, coefficients_by_triple_products, waves_from_shifts, PartialWaves, PhaseShifts,
};
use crate::error::Result;
use crate::legendre::TripleProducts;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig<T> {
    /// Highest partial wave `L` of every sampled amplitude.
    pub max_l: usize,
    /// Number of Latin-hypercube samples (strata per axis).
    pub grid: usize,
    pub seed: u64,
    /// How many of the best near-misses are refined.
    pub refine: usize,
    /// Near-misses with a larger residual are not refined.
    pub max_near_miss: T,
    /// Lower end of the sampling range for `δ_L`; small top waves make the
    /// descent ill-conditioned.
    pub min_top_shift: T,
    pub descent: DescentConfig<T>,
}

impl<T: Real> ScanConfig<T> {
    pub fn new(max_l: usize, grid: usize, seed: u64) -> Self {
        Self {
            max_l,
            grid,
            seed,
            refine: 256,
            max_near_miss: T::lit(0.05),
            min_top_shift: T::lit(0.25),
            descent: DescentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSample<T> {
    pub delta: Vec<T>,
    pub sigma: T,
    pub count: usize,
    pub bound: u64,
    /// Smallest residual of a leaf distinct from the input (`None` if the
    /// tree has no such leaf).
    pub near_miss: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LocatedAmbiguity<T: Real> {
    /// Index of the sample the refinement started from.
    pub origin: usize,
    pub delta: Vec<T>,
    pub sigma: T,
    pub count: usize,
    pub bound: u64,
    pub solutions: SolutionSet<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AmbiguityAtlas<T: Real> {
    pub max_l: usize,
    pub grid: usize,
    pub seed: u64,
    pub samples: Vec<ScanSample<T>>,
    pub located: Vec<LocatedAmbiguity<T>>,
    pub max_count: usize,
    /// Samples or located points whose solution count exceeds the bound.
    pub bound_violations: usize,
}

/// Latin-hypercube phase-shift tuples: `δ_l ∈ (−π/2, π/2)` for `l < L` and
/// `δ_L ∈ [min_top, π/2)`.
pub fn latin_hypercube<T: Real>(max_l: usize, n: usize, seed: u64, min_top: T) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let min_top = min_top.to_f64().unwrap_or(0.25);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(max_l + 1);
    for l in 0..=max_l {
        let (lo, hi) = if l == max_l { (min_top, half_pi) } else { (-half_pi, half_pi) };
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        let col = strata
            .into_iter()
            .map(|s| {
                let u: f64 = rng.gen();
                lo + (hi - lo) * (s as f64 + u) / n as f64
            })
            .collect();
        columns.push(col);
    }
    (0..n)
        .map(|i| columns.iter().map(|col| T::lit(col[i])).collect())
        .collect()
}

fn distinct_from_input<T: Real>(leaf: &PartialWaves<T>, input: &PartialWaves<T>, gap: T) -> bool {
    leaf.distance(input) > gap && leaf.distance(&conjugate_ambiguity(input)) > gap
}

/// Best leaf of the unpruned tree that differs from the input (and its
/// conjugate) by more than `gap`: `(residual, path)`.
pub fn near_miss<T: Real>(descent: &Descent<T>, input: &PartialWaves<T>, cfg: &DescentConfig<T>, gap: T) -> Option<(T, String)> {
    let open = DescentConfig {
        prune_by_sigma: false,
        ..*cfg
    };
    descent
        .leaves(&open)
        .into_iter()
        .filter(|leaf| distinct_from_input(&leaf.waves, input, gap))
        .map(|leaf| (leaf.residual, leaf.path))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
}

/// Residual of the low coefficients `C_0 … C_{L-1}` for the leaf reached by
/// `path` when the input is `delta`.
fn path_residual<T: Real>(
    delta: &[T],
    path: &str,
    table: &TripleProducts<T>,
    cfg: &DescentConfig<T>,
) -> Option<(Vec<T>, PartialWaves<T>)> {
    let w = waves_from_shifts(&PhaseShifts::new(delta.to_vec()));
    let c = coefficients_by_triple_products(&w, table);
    let descent = Descent::with_table(&c, cfg, Some(table)).ok()?;
    if descent.max_l() + 1 != delta.len() {
        return None;
    }
    let leaf = descent.follow(path, cfg.tol_discriminant)?;
    let r = descent.residual_vector(&leaf);
    Some((r[..descent.max_l()].to_vec(), leaf))
}

/// Solves `A x = b` for a small dense system by Gaussian elimination with
/// partial pivoting.
fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())?;
        if !(a[piv][k].abs() > T::epsilon()) {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in (k + 1)..n {
            let factor = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= factor * v;
            }
            let v = b[k];
            b[i] -= factor * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

fn sup<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Moves `delta` onto the set where the leaf along `path` reproduces the
/// cross section exactly. Returns the refined phase shifts.
pub fn refine_ambiguity<T: Real>(delta: &[T], path: &str, cfg: &DescentConfig<T>) -> Option<Vec<T>> {
    let l = delta.len().checked_sub(1)?;
    if l == 0 {
        return None;
    }
    let table = TripleProducts::<T>::new(l);
    let h = T::lit(1e-7);
    let stop = T::epsilon() * T::lit(200.0);
    let mut x = delta.to_vec();
    let (mut r, _) = path_residual(&x, path, &table, cfg)?;
    for _ in 0..80 {
        if sup(&r) <= stop {
            return Some(x);
        }
        // Forward-difference Jacobian, L rows by L+1 columns.
        let mut jac = vec![vec![T::zero(); l + 1]; l];
        for k in 0..=l {
            let mut xp = x.clone();
            xp[k] += h;
            let (rp, _) = path_residual(&xp, path, &table, cfg)?;
            for i in 0..l {
                jac[i][k] = (rp[i] - r[i]) / h;
            }
        }
        let jjt: Vec<Vec<T>> = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| (0..=l).fold(T::zero(), |s, k| s + jac[i][k] * jac[j][k]))
                    .collect()
            })
            .collect();
        let y = solve_dense(jjt, r.clone())?;
        let step: Vec<T> = (0..=l)
            .map(|k| (0..l).fold(T::zero(), |s, i| s + jac[i][k] * y[i]))
            .collect();
        // Full Gauss-Newton step; halve only when the path ceases to exist.
        let mut scale = T::one();
        let mut next = None;
        for _ in 0..12 {
            let trial: Vec<T> = x.iter().zip(&step).map(|(&a, &s)| a - scale * s).collect();
            if let Some((rt, _)) = path_residual(&trial, path, &table, cfg) {
                next = Some((trial, rt));
                break;
            }
            scale = scale * T::lit(0.5);
        }
        let (nx, nr) = next?;
        if sup(&nr) >= sup(&r) && sup(&r) <= T::epsilon().sqrt() * T::lit(1e-3) {
            // Stalled at the rounding floor.
            return Some(x);
        }
        x = nx;
        r = nr;
    }
    (sup(&r) <= stop).then_some(x)
}

/// Maps phase shifts to `(−π/2, π/2]` and flips every sign when `δ_L < 0`,
/// so the tuple is the canonical member of its conjugate pair.
pub fn canonical_shifts<T: Real>(delta: &[T]) -> Vec<T> {
    let pi = T::PI();
    let half = T::FRAC_PI_2();
    let mut out: Vec<T> = delta
        .iter()
        .map(|&d| {
            let mut v = d - pi * ((d + half) / pi).floor();
            if v <= -half {
                v += pi;
            }
            v
        })
        .collect();
    if out.last().is_some_and(|&t| t < T::zero()) {
        for v in out.iter_mut() {
            *v = -*v;
        }
    }
    out
}

/// Runs the two-pass scan described in the module docs.
pub fn scan<T: Real>(cfg: &ScanConfig<T>) -> Result<AmbiguityAtlas<T>> {
    cfg.descent.validate()?;
    let table = TripleProducts::<T>::new(cfg.max_l);
    let tuples = latin_hypercube(cfg.max_l, cfg.grid, cfg.seed, cfg.min_top_shift);
    let gap = T::lit(1e-3);

    let evaluated: Vec<(ScanSample<T>, Option<String>)> = tuples
        .par_iter()
        .map(|delta| {
            let w = waves_from_shifts(&PhaseShifts::new(delta.clone()));
            let c = coefficients_by_triple_products(&w, &table);
            let sigma = c.c[0];
            let bound = count_bound(sigma).bound;
            let Ok(descent) = Descent::with_table(&c, &cfg.descent, Some(&table)) else {
                return (
                    ScanSample {
                        delta: delta.clone(),
                        sigma,
                        count: 0,
                        bound,
                        near_miss: None,
                    },
                    None,
                );
            };
            let count = collect(&descent, &cfg.descent).map(|s| s.len()).unwrap_or(0);
            let miss = near_miss(&descent, &w, &cfg.descent, gap);
            let sample = ScanSample {
                delta: delta.clone(),
                sigma,
                count,
                bound,
                near_miss: miss.as_ref().map(|m| m.0),
            };
            (sample, miss.map(|m| m.1))
        })
        .collect();

    let mut order: Vec<usize> = (0..evaluated.len())
        .filter(|&i| evaluated[i].0.near_miss.is_some_and(|r| r < cfg.max_near_miss))
        .collect();
    order.sort_by(|&a, &b| {
        let ra = evaluated[a].0.near_miss.unwrap();
        let rb = evaluated[b].0.near_miss.unwrap();
        ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    order.truncate(cfg.refine);

    let refined: Vec<Option<LocatedAmbiguity<T>>> = order
        .par_iter()
        .map(|&i| {
            let (sample, path) = &evaluated[i];
            let path = path.as_ref()?;
            let delta = canonical_shifts(&refine_ambiguity(&sample.delta, path, &cfg.descent)?);
            let w = waves_from_shifts(&PhaseShifts::new(delta.clone()));
            let c = coefficients_by_triple_products(&w, &table);
            let descent = Descent::with_table(&c, &cfg.descent, Some(&table)).ok()?;
            let solutions = collect(&descent, &cfg.descent).ok()?;
            let spread = solutions
                .solutions
                .iter()
                .flat_map(|a| solutions.solutions.iter().map(move |b| a.distance(b)))
                .fold(T::zero(), T::max);
            if solutions.len() < 2 || spread <= gap {
                return None;
            }
            let sigma = descent.sigma();
            Some(LocatedAmbiguity {
                origin: i,
                delta,
                sigma,
                count: solutions.len(),
                bound: count_bound(sigma).bound,
                solutions,
            })
        })
        .collect();

    let mut located: Vec<LocatedAmbiguity<T>> = Vec::new();
    for amb in refined.into_iter().flatten() {
        let duplicate = located.iter().any(|prev| {
            prev.delta
                .iter()
                .zip(&amb.delta)
                .all(|(a, b)| (*a - *b).abs() < T::lit(1e-6))
        });
        if !duplicate {
            located.push(amb);
        }
    }

    let samples: Vec<ScanSample<T>> = evaluated.into_iter().map(|(s, _)| s).collect();
    let max_count = samples
        .iter()
        .map(|s| s.count)
        .chain(located.iter().map(|a| a.count))
        .max()
        .unwrap_or(0);
    let bound_violations = samples
        .iter()
        .filter(|s| s.count as u64 > s.bound)
        .count()
        + located.iter().filter(|a| a.count as u64 > a.bound).count();
    Ok(AmbiguityAtlas {
        max_l: cfg.max_l,
        grid: cfg.grid,
        seed: cfg.seed,
        samples,
        located,
        max_count,
        bound_violations,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two distinct non-conjugate amplitudes share this cross section.
    pub(crate) const CRICHTON_DELTA: [f64; 3] = [-0.7919927835564963, -0.5884799633996962, 0.4210604159816394];
    /// Two solutions at a cross section where only one level of the descent
    /// may branch.
    pub(crate) const SINGLE_LEVEL_PAIR: [f64; 3] = [1.0188991883441336, -0.5367164009644272, 0.2455947851074045];

    #[test]
    fn scan_locates_ambiguities() {
        let atlas = scan(&ScanConfig::<f64>::new(2, 2000, 1)).unwrap();
        assert_eq!(atlas.samples.len(), 2000);
        assert!(atlas.samples.iter().all(|s| s.count == 1));
        assert!(!atlas.located.is_empty());
        for amb in &atlas.located {
            assert_eq!(amb.count, 2);
            assert!(amb.solutions.residuals.iter().all(|r| *r < 1e-8));
        }
        assert_eq!(atlas.max_count, 2);
    }

    #[test]
    fn latin_hypercube_is_stratified_and_seeded() {
        let a = latin_hypercube::<f64>(2, 50, 7, 0.25);
        let b = latin_hypercube::<f64>(2, 50, 7, 0.25);
        assert_eq!(a, b);
        assert_ne!(a, latin_hypercube::<f64>(2, 50, 8, 0.25));
        let half = std::f64::consts::FRAC_PI_2;
        for axis in 0..3 {
            let (lo, hi) = if axis == 2 { (0.25, half) } else { (-half, half) };
            let mut hits = vec![0usize; 50];
            for t in &a {
                assert!(t[axis] >= lo && t[axis] < hi);
                hits[((t[axis] - lo) / (hi - lo) * 50.0) as usize] += 1;
            }
            assert!(hits.iter().all(|&h| h == 1));
        }
    }

    #[test]
    fn canonical_shift_mapping() {
        let c = canonical_shifts(&[2.0f64, -0.3]);
        assert!((c[0] - (std::f64::consts::PI - 2.0)).abs() < 1e-15);
        assert!((c[1] - 0.3).abs() < 1e-15);
        let c = canonical_shifts(&[0.1f64, 0.2 + std::f64::consts::PI]);
        assert!((c[1] - 0.2).abs() < 1e-12 && (c[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn dense_solver() {
        let a = vec![vec![2.0f64, 1.0], vec![1.0, 3.0]];
        let x = solve_dense(a, vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(solve_dense(vec![vec![0.0f64]], vec![1.0]).is_none());
    }
}
