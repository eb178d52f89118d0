//! Brute-force solver for the inverse problem: every phase-shift tuple on a
//! regular grid is scored against the target coefficients, grid-local minima
//! are polished by Levenberg-Marquardt, and survivors are canonicalized.

use psa_core::amplitude::{coefficients_by_quadrature, waves_from_shifts, PhaseShifts};
use psa_core::{CrossSectionCoefficients64, PartialWaves64};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

fn residual(delta: &[f64], target: &CrossSectionCoefficients64) -> Vec<f64> {
    let w = waves_from_shifts(&PhaseShifts::new(delta.to_vec()));
    let c = coefficients_by_quadrature(&w);
    c.c.iter().zip(&target.c).map(|(a, b)| a - b).collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn levenberg_marquardt(start: &[f64], target: &CrossSectionCoefficients64) -> Option<Vec<f64>> {
    let n = start.len();
    let mut x = start.to_vec();
    let mut r = residual(&x, target);
    let mut mu = 1e-3;
    for _ in 0..400 {
        let cost = norm2(&r);
        if cost < 1e-28 {
            break;
        }
        let h = 1e-7;
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let rp = residual(&xp, target);
                let rm = residual(&xm, target);
                rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            })
            .collect();
        let jtj: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum()).collect())
            .collect();
        let jtr: Vec<f64> = (0..n).map(|i| cols[i].iter().zip(&r).map(|(a, b)| a * b).sum()).collect();
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += mu * (1.0 + jtj[i][i]);
            }
            let Some(step) = solve(a, jtr.clone()) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - s).collect();
            let rt = residual(&trial, target);
            if norm2(&rt) < cost {
                x = trial;
                r = rt;
                mu = (mu * 0.3).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (norm2(&r).sqrt() < 1e-11).then_some(x)
}

fn canonical(delta: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = delta
        .iter()
        .map(|&v| {
            let mut m = v.rem_euclid(PI);
            if m > FRAC_PI_2 {
                m -= PI;
            }
            m
        })
        .collect();
    if d.last().is_some_and(|&t| t < 0.0) {
        d.iter_mut().for_each(|v| *v = -*v);
    }
    d
}

/// All canonical amplitudes with the target coefficients, found by scanning
/// `points` values per axis (`δ_L` over `(0, π/2]`, the rest over a period).
pub fn grid_search(target: &CrossSectionCoefficients64, points: usize) -> Vec<PartialWaves64> {
    let l = (target.c.len() - 1) / 2;
    let dims = l + 1;
    let axis = |k: usize, i: usize| {
        if k == l {
            FRAC_PI_2 * (i as f64 + 0.5) / points as f64
        } else {
            -FRAC_PI_2 + PI * (i as f64 + 0.5) / points as f64
        }
    };
    let total = points.pow(dims as u32);
    let index = |mut flat: usize| {
        let mut idx = vec![0usize; dims];
        for v in idx.iter_mut() {
            *v = flat % points;
            flat /= points;
        }
        idx
    };
    let flat_of = |idx: &[usize]| idx.iter().rev().fold(0usize, |acc, &i| acc * points + i);
    let cost: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let idx = index(flat);
            let d: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| axis(k, i)).collect();
            norm2(&residual(&d, target))
        })
        .collect();

    // Grid-local minima; axes below the top are periodic.
    let mut minima: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .filter(|&flat| {
            let idx = index(flat);
            (0..dims).all(|k| {
                [-1i64, 1].iter().all(|&s| {
                    let mut nb = idx.clone();
                    let v = nb[k] as i64 + s;
                    if k == l {
                        if v < 0 || v >= points as i64 {
                            return true;
                        }
                        nb[k] = v as usize;
                    } else {
                        nb[k] = v.rem_euclid(points as i64) as usize;
                    }
                    cost[flat] <= cost[flat_of(&nb)]
                })
            })
        })
        .map(|flat| (cost[flat], flat))
        .collect();
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    minima.truncate(96);

    let polished: Vec<Vec<f64>> = minima
        .par_iter()
        .filter_map(|&(_, flat)| {
            let d: Vec<f64> = index(flat).iter().enumerate().map(|(k, &i)| axis(k, i)).collect();
            levenberg_marquardt(&d, target).map(|x| canonical(&x))
        })
        .collect();

    let mut out: Vec<PartialWaves64> = Vec::new();
    for d in polished {
        let w = waves_from_shifts(&PhaseShifts::new(d));
        if !out.iter().any(|o| o.distance(&w) < 1e-6) {
            out.push(w);
        }
    }
    out
}
