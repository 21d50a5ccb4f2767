//! Acceptance suite: one PASS/FAIL line per criterion, with the measured numbers.
//!
//! Runs without the libtest harness so the lines always reach the terminal. A criterion
//! listed in `KNOWN_RED` is expected to fail; the process fails if any other criterion
//! fails, or if a known-red one unexpectedly passes (so the list cannot go stale).

use std::time::Instant;

use bkp_core::bloch::assemble;
use bkp_core::criteria::{
    self, b_factor, classify_bloch, classify_periodic, ell_a_sq, ell_thresholds, epsilon_a, omega_star, omega_symbol,
    VerdictKind,
};
use bkp_core::orchestrate::{region_map, RegionGrid, RegionMode};
use bkp_core::reduced::lambda_bloch;
use bkp_core::spectrum::{
    band_scan, classify_default, convergence_check, match_displacement, periodic_prediction, spectrum,
    threshold_bisect,
};
use bkp_core::wave::{newton_refine, profile_residual, stokes_coefficients, stokes_wave, Profile, RefinedWave};
use bkp_core::{BlochSpec, PhysicalParams, Sigma};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that stay red, with the reason recorded in the decisions ledger.
const KNOWN_RED: &[u32] = &[7];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn params(b: f64, kappa: f64, k: f64) -> PhysicalParams {
    PhysicalParams::new(b, kappa, k, Sigma::MinusOne).unwrap()
}

fn refined(p: &PhysicalParams, a: f64) -> RefinedWave {
    newton_refine(&stokes_wave(p, a).unwrap(), p, 32, 1e-13).unwrap()
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

fn stokes_residual_order() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (b, k) in [(2.0, 1.0), (3.0, 0.7)] {
        let p = params(b, 2.0, k);
        let r = |a: f64| {
            let w = stokes_wave(&p, a).unwrap();
            profile_residual(w.cos_coeffs(), w.speed(), &p)
        };
        let ratio = r(0.02) / r(0.01);
        ok &= (12.0..=20.0).contains(&ratio);
        parts.push(format!("(b={b}, k={k}) ratio {ratio:.3}"));
    }
    check(ok, parts.join(", "))
}

fn newton_speed_oracle() -> Outcome {
    let p = params(2.0, 2.0, 1.0);
    let sc = stokes_coefficients(&p);
    let coeffs_ok = (sc.c0 - 1.0).abs() < 1e-15 && (sc.c2 + 1.25).abs() < 1e-15;
    let gap = |a: f64| (refined(&p, a).c - (sc.c0 + a * a * sc.c2)).abs();
    let (g1, g2, g3) = (gap(0.04), gap(0.02), gap(0.01));
    let (r1, r2) = (g1 / g2, g2 / g3);
    let ok = coeffs_ok && (12.0..=20.0).contains(&r1) && (12.0..=20.0).contains(&r2);
    check(ok, format!("c0={} c2={}, speed gap ratios {r1:.3}, {r2:.3}", sc.c0, sc.c2))
}

fn zero_amplitude() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // Entry errors are measured relative to max(|omega_n|, 1): the symbols reach several
    // hundred for small |n + xi|, where one ulp already exceeds 1e-14.
    let (mut worst_entry, mut worst_eig, mut biggest) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let ell = rng.random_range(0.0..2.0);
        let xi = rng.random_range(-0.49..0.5);
        let kappa = rng.random_range(0.2..4.0);
        let k = rng.random_range(0.2..3.0);
        let sigma = if rng.random_bool(0.5) { Sigma::MinusOne } else { Sigma::PlusOne };
        let p = PhysicalParams::new(1.0, kappa, k, sigma).unwrap();
        let spec = BlochSpec::new(ell, xi, 16).unwrap();
        let w = stokes_wave(&p, 0.0).unwrap();
        let m = assemble(&w, &spec, &p).unwrap();
        let omegas: Vec<Complex64> = m
            .mode_index
            .iter()
            .map(|&n| Complex64::new(0.0, omega_symbol(n, &spec, &p).unwrap()))
            .collect();
        for (d, o) in m.entries.diagonal().iter().zip(&omegas) {
            worst_entry = worst_entry.max((d - o).norm() / o.norm().max(1.0));
            biggest = biggest.max(o.norm());
        }
        worst_entry = worst_entry.max(m.entries.max_off_diagonal());
        let s = spectrum(&w, &spec, &p).unwrap();
        worst_eig = worst_eig.max(match_displacement(&s.eigenvalues, &omegas));
    }
    check(
        worst_entry <= 1e-14 && worst_eig <= 1e-12,
        format!("50 draws: matrix vs diagonal {worst_entry:.2e} (relative, |omega| up to {biggest:.1}), spectrum vs omega {worst_eig:.2e}"),
    )
}

fn spectral_symmetry() -> Outcome {
    let p = params(2.0, 2.0, 1.0);
    let (mut defect, mut reflect) = (0.0f64, 0.0f64);
    for a in [0.01, 0.03, 0.05] {
        let w = refined(&p, a);
        for ell in [0.1, 0.5, 1.0] {
            for xi in [0.1, 0.25, 0.4] {
                let plus = spectrum(&w, &BlochSpec::new(ell, xi, 32).unwrap(), &p).unwrap();
                let minus = spectrum(&w, &BlochSpec::new(ell, -xi, 32).unwrap(), &p).unwrap();
                let neg: Vec<Complex64> = minus.eigenvalues.iter().map(|z| -z).collect();
                defect = defect.max(plus.symmetry_defect).max(minus.symmetry_defect);
                reflect = reflect.max(match_displacement(&plus.eigenvalues, &neg));
            }
        }
    }
    check(defect <= 1e-8 && reflect <= 1e-10, format!("27 points: max defect {defect:.2e}, max reflection {reflect:.2e}"))
}

fn periodic_threshold(p: &PhysicalParams, a: f64) -> Result<f64, String> {
    let w = refined(p, a);
    let pred = periodic_prediction(p, a);
    let template = BlochSpec::new(0.0, 0.0, 32).unwrap();
    let (lo, hi) = (0.1 * pred.abs(), 3.0 * pred.abs());
    threshold_bisect(&w, p, &template, (lo, hi), 1e-12 * pred.abs(), None, pred)
        .map(|t| t.ell_star_sq)
        .map_err(|e| e.to_string())
}

fn kp1_threshold() -> Outcome {
    let p = params(2.0, 2.0, 1.0);
    let e1 = rel(periodic_threshold(&p, 0.05)?, ell_a_sq(&p, 0.05));
    let e2 = rel(periodic_threshold(&p, 0.025)?, ell_a_sq(&p, 0.025));
    let shrink = e1 / e2;
    check(
        e1 <= 0.10 && (3.0..=5.0).contains(&shrink),
        format!("relative error {e1:.4} at a=0.05, {e2:.5} at a=0.025, shrink factor {shrink:.3}"),
    )
}

fn kp1_growth_rate() -> Outcome {
    let p = params(2.0, 2.0, 1.0);
    let a = 0.05;
    let w = refined(&p, a);
    let s = spectrum(&w, &BlochSpec::from_ell_sq(0.5 * ell_a_sq(&p, a), 0.0, 32).unwrap(), &p).unwrap();
    let v = classify_default(&s);
    let e = rel(s.max_real, 1.875e-3);
    check(
        v.kind == VerdictKind::UnstableRealPair && e <= 0.2,
        format!("{} with max Re {:.5e} (relative error {e:.3})", v.kind, s.max_real),
    )
}

fn kp2_mirror() -> Outcome {
    let kp2 = PhysicalParams::with_k_sq(4.0, 2.0, 6.0, Sigma::PlusOne).unwrap();
    let la = ell_a_sq(&kp2, 0.05);
    let mut errors = Vec::new();
    for a in [0.05, 0.025, 0.0125] {
        let found = periodic_threshold(&kp2, a)?;
        errors.push(rel(found, -ell_a_sq(&kp2, a)));
    }
    let kp1 = kp2.with_sigma(Sigma::MinusOne);
    let w = refined(&kp1, 0.05);
    let mut stable = true;
    for f in [0.25, 0.5, 1.0, 2.0] {
        let ell = f * la.abs().sqrt();
        let s = spectrum(&w, &BlochSpec::new(ell, 0.0, 32).unwrap(), &kp1).unwrap();
        stable &= classify_default(&s).kind == VerdictKind::StableImaginary;
    }
    check(
        errors[0] <= 0.10 && stable,
        format!(
            "threshold relative error {:.4} at a=0.05 (then {:.4}, {:.4} as a halves; ratio {:.2}, {:.2}); sigma=-1 stable at all four ell: {stable}",
            errors[0],
            errors[1],
            errors[2],
            errors[0] / errors[1],
            errors[1] / errors[2]
        ),
    )
}

fn bloch_band() -> Outcome {
    let p = params(2.0, 2.0, 1.0);
    let (a, xi) = (0.02, 0.3);
    let (l0, lm, lc) = ell_thresholds(xi, &p).unwrap();
    let eps = epsilon_a(xi, &p, a).unwrap();
    let omega = omega_star(xi, &p).unwrap();
    let reduced = lambda_bloch(&p, a, 0.0, xi).unwrap().max_real();
    let w = refined(&p, a);
    let template = BlochSpec::new(0.0, xi, 32).unwrap();
    let band = band_scan(&w, &p, &template, (l0, lm), 121, None).map_err(|e| e.to_string())?;
    let s = spectrum(&w, &template.with_ell_sq(band.center), &p).unwrap();
    let top = s.most_unstable().unwrap();
    let (ec, ew, er, ei) = (
        rel(band.center, 0.12200),
        rel(band.half_width, 0.006786),
        rel(top.re, reduced),
        rel(top.im.abs(), omega),
    );
    check(
        ec <= 0.10 && ew <= 0.25 && er <= 0.25 && ei <= 0.10,
        format!(
            "center {:.5} (ell_c^2 {lc:.5}, err {ec:.3}), half-width {:.5} (eps_a {eps:.5}, err {ew:.3}), Re {:.5} (reduced {reduced:.5}, err {er:.3}), |Im| {:.5} (omega* {omega:.5}, err {ei:.3})",
            band.center, band.half_width, top.re, top.im.abs()
        ),
    )
}

const B_NEG_SAMPLES: [(f64, f64, f64); 3] = [(-2.0, 0.4, 0.3), (4.0, 16.0, 0.02), (6.0, 5.5, 0.45)];

fn b_negative_stability() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, &(b, k2, xi)) in B_NEG_SAMPLES.iter().enumerate() {
        let p = PhysicalParams::with_k_sq(b, 2.0, k2, Sigma::MinusOne).unwrap();
        let closed = classify_bloch(xi, &p).unwrap();
        let want = format!("bloch.b_neg.{}", i + 1);
        let (l0, lm, _) = ell_thresholds(xi, &p).unwrap();
        let w = refined(&p, 0.02);
        let mut worst = f64::NEG_INFINITY;
        let mut all_stable = true;
        for j in 0..20 {
            let l = l0 + (lm - l0) * j as f64 / 19.0;
            let s = spectrum(&w, &BlochSpec::from_ell_sq(l, xi, 32).unwrap(), &p).unwrap();
            all_stable &= classify_default(&s).kind == VerdictKind::StableImaginary;
            worst = worst.max(s.max_real);
        }
        ok &= all_stable && closed.case_label.starts_with(&want) && b_factor(xi, &p).unwrap() < 0.0;
        parts.push(format!("{want} (b={b}, k^2={k2}, xi={xi}) stable={all_stable} max Re {worst:.1e}"));
    }
    check(ok, parts.join("; "))
}

fn case_table_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checked, mut skipped, mut bad) = (0, 0, Vec::new());
    for _ in 0..10_000 {
        let b: f64 = rng.random_range(-10.0..12.0);
        let k2: f64 = rng.random_range(0.001..20.0);
        let xi: f64 = if rng.random_bool(0.05) { 0.5 } else { rng.random_range(0.001..=0.5) };
        if (b + 1.0).abs() < 1e-6 {
            skipped += 1;
            continue;
        }
        let p = PhysicalParams::with_k_sq(b, 2.0, k2, Sigma::MinusOne).unwrap();
        let (f1, f2) = criteria::b_factors(xi, &p);
        let bscale = 1.0 + k2 * (1.0 + b.abs()) + b.abs();
        let g = (b + 1.0) + (7.0 - 2.0 * b) * k2;
        let gscale = 1.0 + b.abs() + (7.0 + 2.0 * b.abs()) * k2;
        if f1.abs().min(f2.abs()) / bscale <= 1e-6 || g.abs() / gscale <= 1e-6 {
            skipped += 1;
            continue;
        }
        checked += 1;
        let bb = b_factor(xi, &p).unwrap();
        let vb = classify_bloch(xi, &p).unwrap().kind;
        if vb != if bb > 0.0 { VerdictKind::UnstableComplexPair } else { VerdictKind::StableImaginary } {
            bad.push(format!("bloch b={b} k2={k2} xi={xi}"));
        }
        let la = ell_a_sq(&p, 0.05);
        let vp = classify_periodic(&p, 0.05).kind;
        if vp != if la > 0.0 { VerdictKind::UnstableRealPair } else { VerdictKind::StableImaginary } {
            bad.push(format!("periodic b={b} k2={k2}"));
        }
    }
    let head: Vec<_> = bad.iter().take(3).cloned().collect();
    check(bad.is_empty(), format!("{checked} samples agree, {skipped} within margins skipped, mismatches {} {head:?}", bad.len()))
}

fn figure_map() -> Outcome {
    let grid = RegionGrid { b_range: (-4.0, 6.0), b_steps: 200, k_sq_range: (0.0, 10.0), k_sq_steps: 200 };
    let map = region_map(&grid, 2.0, Sigma::MinusOne, RegionMode::Periodic, 0.05, 0, 0).map_err(|e| e.to_string())?;
    let hk = 10.0 / 200.0;
    let mut shaded_middle = 0;
    let mut off_curve = 0;
    let mut transitions = 0;
    for ib in 0..grid.b_steps {
        let b = map.cell(ib, 0).b;
        let bound = (b + 1.0) / (2.0 * b - 7.0);
        for ik in 0..grid.k_sq_steps {
            let c = map.cell(ib, ik);
            if b > -1.0 && b <= 3.5 && c.verdict.kind == VerdictKind::StableImaginary {
                shaded_middle += 1;
            }
            // Shaded exactly on the side the curve predicts.
            let outside = b > 3.5 || b < -1.0;
            let should_shade = outside && c.k_sq > bound;
            if (c.verdict.kind == VerdictKind::StableImaginary) != should_shade {
                off_curve += 1;
            }
            if ik > 0 && map.cell(ib, ik - 1).verdict.kind != c.verdict.kind {
                transitions += 1;
                let mid = c.k_sq - 0.5 * hk;
                if (mid - bound).abs() > hk {
                    off_curve += 1;
                }
            }
        }
    }
    check(
        shaded_middle == 0 && off_curve == 0 && transitions > 0,
        format!("{transitions} verdict transitions, {off_curve} off the curve, {shaded_middle} shaded cells in -1<b<=7/2"),
    )
}

fn half_degeneracy() -> Outcome {
    let p = params(2.0, 2.0, 1.0);
    let (l0, lm, lc) = ell_thresholds(0.5, &p).unwrap();
    let t = 3.0 / 16.0;
    let w = omega_star(0.5, &p).unwrap();
    let dev = (l0 - t).abs().max((lm - t).abs()).max((lc - t).abs());
    check(dev <= 1e-14 && w == 0.0, format!("thresholds within {dev:.1e} of 3/16, omega*(1/2) = {w}"))
}

fn truncation_control() -> Outcome {
    let mut cases: Vec<(&str, PhysicalParams, f64, BlochSpec)> = Vec::new();
    let base = params(2.0, 2.0, 1.0);
    cases.push(("b=2 periodic", base, 0.05, BlochSpec::from_ell_sq(0.5 * ell_a_sq(&base, 0.05), 0.0, 32).unwrap()));
    let p3 = params(3.0, 2.0, 0.7);
    cases.push(("b=3 periodic", p3, 0.05, BlochSpec::from_ell_sq(0.5 * ell_a_sq(&p3, 0.05), 0.0, 32).unwrap()));
    let (_, _, lc) = ell_thresholds(0.3, &base).unwrap();
    cases.push(("b=2 band", base, 0.02, BlochSpec::from_ell_sq(lc, 0.3, 32).unwrap()));
    for &(b, k2, xi) in &B_NEG_SAMPLES {
        let p = PhysicalParams::with_k_sq(b, 2.0, k2, Sigma::MinusOne).unwrap();
        let (l0, lm, _) = ell_thresholds(xi, &p).unwrap();
        cases.push(("B<0", p, 0.02, BlochSpec::from_ell_sq(0.5 * (l0 + lm), xi, 32).unwrap()));
    }
    let kp2 = PhysicalParams::with_k_sq(4.0, 2.0, 6.0, Sigma::PlusOne).unwrap();
    cases.push(("kp2", kp2, 0.05, BlochSpec::from_ell_sq(0.5 * ell_a_sq(&kp2, 0.05).abs(), 0.0, 32).unwrap()));
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, p, a, spec) in &cases {
        let w = refined(p, *a);
        let d = convergence_check(&w, spec, p).map_err(|e| e.to_string())?;
        worst = worst.max(d);
        parts.push(format!("{name} {d:.1e}"));
    }
    check(worst <= 1e-10, format!("N=32 vs 64: {}", parts.join(", ")))
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Outcome); 13] = [
        (1, "Stokes residual is fourth order", 1.0, stokes_residual_order),
        (2, "Newton speed against the expansion", 5.0, newton_speed_oracle),
        (3, "zero amplitude is exact", 5.0, zero_amplitude),
        (4, "spectral symmetry and reflection", 30.0, spectral_symmetry),
        (5, "KP-I threshold and its convergence", 60.0, kp1_threshold),
        (6, "KP-I growth rate below threshold", 5.0, kp1_growth_rate),
        (7, "KP-II mirror threshold", 60.0, kp2_mirror),
        (8, "Bloch band around the collision", 120.0, bloch_band),
        (9, "B<0 samples stay stable", 120.0, b_negative_stability),
        (10, "case tables agree with signs", 1.0, case_table_consistency),
        (11, "region map boundary", 2.0, figure_map),
        (12, "xi = 1/2 degeneracy", 1.0, half_degeneracy),
        (13, "truncation control", 30.0, truncation_control),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let over = secs > budget;
        let (ok, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; took {secs:.2}s, budget {budget}s")),
            Err(d) => (false, d),
        };
        let red = KNOWN_RED.contains(&id);
        let tag = match (ok, red) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (expected FAIL)",
        };
        println!("criterion {id:>2} {tag}: {name} [{secs:.2}s] {detail}");
        passed += ok as usize;
        if ok == red {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/13 pass; known red: {KNOWN_RED:?}");
    if !unexpected.is_empty() {
        println!("acceptance: unexpected outcome for {unexpected:?}");
        std::process::exit(1);
    }
}
