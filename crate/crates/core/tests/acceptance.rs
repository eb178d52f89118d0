//! Exit criteria. Each check prints one PASS/FAIL line; the process fails if
//! any check fails.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use common::{amplitude, oracle::grid_search, random_shifts, rng, same_set};
use num_complex::Complex;
use psa_core::amplitude::{
    coefficients_by_quadrature, conjugate_ambiguity, evaluate, total_cross_section, AngularFunction,
};
use psa_core::enumerator::scan::{scan, AmbiguityAtlas, ScanConfig};
use psa_core::enumerator::{descend, DescentConfig};
use psa_core::legendre::{check_bounds_inequality, gauss_rule};
use psa_core::phase_solver::{contraction_sup, fixed_point_solve, wu_ohmura_residual, PhaseFunction};
use psa_core::regularize::{extend_amplitude, tail_coefficients, tail_re, tail_re_asymptotic, verify_da_split};
use psa_core::PartialWaves64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn max_component_gap(a: &PartialWaves64, b: &PartialWaves64) -> f64 {
    a.f.iter()
        .zip(&b.f)
        .map(|(p, q)| (p.re - q.re).abs().max((p.im - q.im).abs()))
        .fold(0.0, f64::max)
}

fn uniqueness_below_threshold() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1001);
    let cfg = DescentConfig::default();
    let (mut unique, mut worst, mut tried) = (0, 0.0f64, 0);
    while tried < 100 {
        let l = r.gen_range(1..=6);
        let mut delta: Vec<f64> = (0..l).map(|_| r.gen_range(-0.6..0.6)).collect();
        delta.push(r.gen_range(0.1..0.35));
        let (w, c) = amplitude(&delta);
        if total_cross_section(&w) >= 1.38 {
            continue;
        }
        tried += 1;
        if let Ok(set) = descend(&c, &cfg) {
            if set.len() == 1 {
                let gap = max_component_gap(&set.solutions[0], &w);
                worst = worst.max(gap);
                if gap < 1e-8 {
                    unique += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        unique == 100 && secs < 60.0,
        format!("{unique}/100 unique and matching, worst deviation {worst:.1e}, {secs:.1} s"),
    )
}

/// The three-wave scan, shared by the ambiguity and count-bound checks.
fn three_wave_scan() -> &'static Result<AmbiguityAtlas<f64>, String> {
    static ATLAS: OnceLock<Result<AmbiguityAtlas<f64>, String>> = OnceLock::new();
    ATLAS.get_or_init(|| scan(&ScanConfig::<f64>::new(2, 2000, 1)).map_err(|e| e.to_string()))
}

fn crichton_ambiguity() -> Outcome {
    let start = Instant::now();
    let atlas = match three_wave_scan() {
        Ok(a) => a,
        Err(e) => return outcome(false, format!("scan failed: {e}")),
    };
    let good: Vec<_> = atlas
        .located
        .iter()
        .filter(|amb| {
            let (_, c) = amplitude(&amb.delta);
            amb.solutions.len() == 2
                && amb
                    .solutions
                    .solutions
                    .iter()
                    .all(|s| coefficients_by_quadrature(s).max_abs_diff(&c) < 1e-8)
                && max_component_gap(&amb.solutions.solutions[0], &amb.solutions.solutions[1]) > 1e-3
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let first = good
        .first()
        .map(|a| format!(", e.g. sigma {:.4} at {:?}", a.sigma, a.delta))
        .unwrap_or_default();
    outcome(
        !good.is_empty() && secs < 300.0,
        format!("{} verified two-solution cross sections{first}, {secs:.1} s", good.len()),
    )
}

fn count_bound() -> Outcome {
    let (mut samples, mut violations, mut max_count) = (0usize, 0usize, 0usize);
    let mut notes = Vec::new();
    let mut atlases = Vec::new();
    for l in 1..=6 {
        match scan(&ScanConfig::<f64>::new(l, 2000, 100 + l as u64)) {
            Ok(a) => atlases.push(a),
            Err(e) => return outcome(false, format!("scan L={l} failed: {e}")),
        }
    }
    // Every scan run by this suite is held to the bound.
    let shared = match three_wave_scan() {
        Ok(a) => a,
        Err(e) => return outcome(false, format!("scan failed: {e}")),
    };
    for atlas in atlases.iter().chain(std::iter::once(shared)) {
        samples += atlas.samples.len();
        violations += atlas.bound_violations;
        max_count = max_count.max(atlas.max_count);
        for s in atlas.samples.iter().filter(|s| s.count as u64 > s.bound) {
            notes.push(format!("sample sigma {:.4}: {} > {}", s.sigma, s.count, s.bound));
        }
        for a in atlas.located.iter().filter(|a| a.count as u64 > a.bound) {
            notes.push(format!("located sigma {:.4}: {} > {} at {:?}", a.sigma, a.count, a.bound, a.delta));
        }
    }
    notes.truncate(3);
    outcome(
        samples >= 10_000 && violations == 0,
        format!(
            "{samples} samples, max count {max_count}, {violations} violations{}",
            if notes.is_empty() { String::new() } else { format!(" [{}]", notes.join("; ")) }
        ),
    )
}

fn sign_ambiguity() -> Outcome {
    let mut r = rng(2002);
    let cfg = DescentConfig::default();
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut inputs: Vec<Vec<f64>> = (0..40).map(|i| random_shifts(&mut r, 1 + i % 6, 0.25)).collect();
    inputs.push(vec![-0.7919927835564963, -0.5884799633996962, 0.4210604159816394]);
    for delta in inputs {
        let (_, c) = amplitude(&delta);
        let Ok(set) = descend(&c, &cfg) else { continue };
        for s in &set.solutions {
            let own = coefficients_by_quadrature(s);
            let flipped = coefficients_by_quadrature(&conjugate_ambiguity(s));
            worst = worst.max(own.max_abs_diff(&flipped));
            checked += 1;
        }
    }
    outcome(
        checked > 0 && worst < 1e-12,
        format!("{checked} solutions, worst |C(-f*) - C(f)| {worst:.1e}"),
    )
}

fn contraction_regime() -> Outcome {
    let start = Instant::now();
    let mut r = rng(3003);
    let rule = gauss_rule::<f64>(64).unwrap();
    let (mut accepted, mut passed, mut attempts) = (0, 0, 0);
    let (mut worst_res, mut worst_shift, mut worst_factor) = (0.0f64, 0.0f64, 0.0f64);
    while accepted < 20 && attempts < 500 {
        attempts += 1;
        let l = r.gen_range(1..=3);
        let mut delta = vec![r.gen_range(0.15..0.35)];
        for k in 1..=l {
            delta.push(r.gen_range(-0.1..0.1) / k as f64);
        }
        let (w, _) = amplitude(&delta);
        let f = AngularFunction::modulus(&w, rule.clone());
        if f.min_value() <= 0.0 {
            continue;
        }
        match contraction_sup(&f, 40) {
            Ok(rep) if rep.condition_079 => {}
            _ => continue,
        }
        accepted += 1;
        let Ok(sol) = fixed_point_solve(&f, 500, 1e-10) else { continue };
        let res = wu_ohmura_residual(&f, &sol.phase).unwrap_or(f64::INFINITY);
        let back = sol.phase.partial_waves(&f, l).to_shifts();
        let shift = back
            .delta
            .iter()
            .zip(&delta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let factor = sol.trace.worst_contraction(3, 1e-12).unwrap_or(0.0);
        worst_res = worst_res.max(res);
        worst_shift = worst_shift.max(shift);
        worst_factor = worst_factor.max(factor);
        if res < 1e-9 && shift < 1e-6 && factor <= 0.9 {
            passed += 1;
        }
    }
    outcome(
        accepted == 20 && passed == 20,
        format!(
            "{passed}/{accepted} solved, residual {worst_res:.1e}, shift error {worst_shift:.1e}, contraction factor {worst_factor:.3}, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn phase_identity() -> Outcome {
    let mut r = rng(4004);
    let rule = gauss_rule::<f64>(64).unwrap();
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 24 {
        let l = 1 + checked % 6;
        let delta = random_shifts(&mut r, l, 0.25);
        let (w, _) = amplitude(&delta);
        let f = AngularFunction::modulus(&w, rule.clone());
        if f.min_value() < 1e-3 {
            continue;
        }
        let phi = rule.nodes.iter().map(|&x| evaluate(&w, x).unwrap().arg()).collect();
        let phase = PhaseFunction {
            rule: rule.clone(),
            phi,
        };
        worst = worst.max(wu_ohmura_residual(&f, &phase).unwrap_or(f64::INFINITY));
        checked += 1;
    }
    outcome(worst < 1e-8, format!("{checked} amplitudes up to L = 6, worst residual {worst:.1e}"))
}

fn tail_construction() -> Outcome {
    let tail = match tail_coefficients::<f64>(3, 0.4, None) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let unit = tail.unitarity_residual();
    let bound = tail.square_bound_holds();
    let ratio = tail_re(20, 0.4f64).unwrap() / tail_re_asymptotic(20, 0.4f64).unwrap();
    outcome(
        unit < 1e-14 && bound && (ratio - 1.0).abs() < 0.02,
        format!(
            "{} waves to l = {}, unitarity {unit:.1e}, square bound {bound}, ratio at l = 20 {ratio:.6}",
            tail.re_r.len(),
            tail.lmax
        ),
    )
}

fn order_split() -> Outcome {
    let (w, _) = amplitude(&[0.5, 0.3]);
    let rep = extend_amplitude(&w, 0.4, None).and_then(|(ext, _)| verify_da_split(&ext, 50, 20));
    match rep {
        Ok(rep) => {
            let d = rep.dispersive.rho;
            let a = rep.absorptive.rho;
            outcome(
                (0.85..=1.25).contains(&d) && (0.40..=0.60).contains(&a),
                format!("dispersive {d:.4}, absorptive {a:.4} (l <= 50, window 20)"),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn lambda_continuity() -> Outcome {
    let (w, _) = amplitude(&[0.5, 0.3]);
    let grid: Vec<f64> = (0..200).map(|k| -1.0 + 2.0 * k as f64 / 199.0).collect();
    let base: Vec<f64> = grid.iter().map(|&x| evaluate(&w, x).unwrap().norm_sqr()).collect();
    let slopes: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&lambda| {
            let (ext, _) = extend_amplitude(&w, lambda, None).unwrap();
            let sup = grid
                .iter()
                .zip(&base)
                .map(|(&x, b)| (evaluate(&ext, x).unwrap().norm_sqr() - b).abs())
                .fold(0.0, f64::max);
            sup / lambda
        })
        .collect();
    let hi = slopes.iter().cloned().fold(f64::MIN, f64::max);
    let lo = slopes.iter().cloned().fold(f64::MAX, f64::min);
    outcome(hi / lo < 2.0, format!("sup|dF2|/lambda = {slopes:.4?}, spread {:.4}", hi / lo))
}

fn legendre_bounds() -> Outcome {
    let mut r = rng(5005);
    let mut violations = Vec::new();
    for _ in 0..500 {
        let radius = r.gen_range(1.0f64..=5.0).max(1.0 + 1e-9);
        let angle = r.gen_range(0.0..std::f64::consts::TAU);
        let l = r.gen_range(1..=30usize);
        let rep = check_bounds_inequality(l, Complex::from_polar(radius, angle)).unwrap();
        if !(rep.lower_ok && rep.upper_ok) {
            violations.push(l);
        }
    }
    let at_one = violations.iter().filter(|&&l| l == 1).count();
    outcome(
        violations.is_empty(),
        format!(
            "500 samples, {} violations ({at_one} at l = 1, where |P_1(z)| = |z| exactly)",
            violations.len()
        ),
    )
}

fn oracle_completeness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(6006);
    let cfg = DescentConfig::default();
    let mut agree = 0;
    let mut sizes = Vec::new();
    for i in 0..10 {
        let l = 1 + i % 3;
        let delta = random_shifts(&mut r, l, 0.25);
        let (_, c) = amplitude(&delta);
        let Ok(set) = descend(&c, &cfg) else { continue };
        let points = [200, 100, 36][l - 1];
        let brute = grid_search(&c, points);
        sizes.push(set.len());
        if same_set(&set.solutions, &brute, 1e-6) {
            agree += 1;
        }
    }
    outcome(
        agree == 10,
        format!(
            "{agree}/10 instances agree, solution counts {sizes:?}, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 11] = [
        ("uniqueness below sigma 1.38", uniqueness_below_threshold),
        ("two-fold ambiguity with three waves", crichton_ambiguity),
        ("solution count bound", count_bound),
        ("conjugate invariance", sign_ambiguity),
        ("contraction regime fixed point", contraction_regime),
        ("phase equation identity", phase_identity),
        ("unitary tail", tail_construction),
        ("dispersive/absorptive orders", order_split),
        ("continuity in lambda", lambda_continuity),
        ("Legendre growth bounds", legendre_bounds),
        ("enumerator vs brute force", oracle_completeness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let out = check();
        if !out.pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {}",
            if out.pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
