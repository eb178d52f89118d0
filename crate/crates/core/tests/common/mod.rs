#![allow(dead_code)]

pub mod oracle;

use psa_core::amplitude::{cross_section_coefficients, waves_from_shifts, PhaseShifts};
use psa_core::{CrossSectionCoefficients64, PartialWaves64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn amplitude(delta: &[f64]) -> (PartialWaves64, CrossSectionCoefficients64) {
    let w = waves_from_shifts(&PhaseShifts::new(delta.to_vec()));
    let c = cross_section_coefficients(&w);
    (w, c)
}

/// Shifts with `δ_l ∈ (−π/2, π/2)` below the top and `δ_L ∈ [top_min, π/2)`.
pub fn random_shifts(rng: &mut ChaCha8Rng, l: usize, top_min: f64) -> Vec<f64> {
    let half = std::f64::consts::FRAC_PI_2;
    let mut d: Vec<f64> = (0..l).map(|_| rng.gen_range(-half..half)).collect();
    d.push(rng.gen_range(top_min..half));
    d
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every element of `a` is within `tol` (per component) of some element of
/// `b` and vice versa.
pub fn same_set(a: &[PartialWaves64], b: &[PartialWaves64], tol: f64) -> bool {
    let close = |x: &PartialWaves64, y: &PartialWaves64| {
        x.f.len() == y.f.len() && x.f.iter().zip(&y.f).all(|(p, q)| (p.re - q.re).abs() <= tol && (p.im - q.im).abs() <= tol)
    };
    a.iter().all(|x| b.iter().any(|y| close(x, y))) && b.iter().all(|y| a.iter().any(|x| close(x, y)))
}
