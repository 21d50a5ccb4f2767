use std::io::Write;

use anyhow::{bail, Result};
use bkp_core::criteria::{self, fold_xi};
use bkp_core::orchestrate::{
    self, region_csv, region_map, region_svg, run_sweep, sweep_csv, to_json, Axis, Provenance, RegionGrid,
    RegionMode, SweepConfig, SweepPoint, Task,
};
use bkp_core::params::DEFAULT_MODES;
use bkp_core::reduced::{lambda_bloch, lambda_periodic};
use bkp_core::spectrum::{
    self, band_scan, classify_default, convergence_check, default_bracket, periodic_prediction, threshold_bisect,
};
use bkp_core::wave::{stokes_coefficients, Profile, Wave, WaveKind, DEFAULT_NEWTON_TOL};
use bkp_core::{BlochSpec, Error, PhysicalParams, Sigma};
use serde_json::{json, Map, Value};

use crate::resolve::{parse_list, targets, Format, Resolver};
use crate::{BandArgs, Common, RegionArgs, SpectrumArgs, SweepArgs, ThresholdArgs, WaveArgs};

fn sigma_flag(s: &Option<String>) -> Result<Option<Sigma>> {
    Ok(match s {
        Some(s) => Some(s.parse()?),
        None => None,
    })
}

struct Setup {
    res: Resolver,
    p: PhysicalParams,
    modes: usize,
    tol: f64,
    kind: WaveKind,
}

fn setup(c: &Common) -> Result<Setup> {
    let mut res = Resolver::new(c.config.as_deref())?;
    if c.k.is_some() || c.k2.is_some() {
        res.forget(&["k", "k2"]);
    }
    let b = res.req("b", c.b)?;
    let kappa = res.or("kappa", c.kappa, 2.0)?;
    let k2 = res.opt("k2", c.k2)?;
    let sigma = res.or("sigma", sigma_flag(&c.sigma)?, Sigma::MinusOne)?;
    let p = match k2 {
        Some(k2) => PhysicalParams::with_k_sq(b, kappa, k2, sigma)?,
        None => PhysicalParams::new(b, kappa, res.req("k", c.k)?, sigma)?,
    };
    let modes = res.or("modes", c.modes, DEFAULT_MODES)?;
    let tol = res.or("tol", c.tol, DEFAULT_NEWTON_TOL)?;
    let kind = match &c.wave {
        Some(s) => Some(s.parse::<WaveKind>()?),
        None => None,
    };
    let kind = res.or("wave", kind, WaveKind::Newton)?;
    Ok(Setup { res, p, modes, tol, kind })
}

struct Rendered {
    body: Value,
    csv: Option<String>,
    svg: Option<String>,
}

fn emit(c: &Common, command: &str, res: &Resolver, notes: Vec<String>, r: Rendered, default: Format) -> Result<()> {
    let mut prov = Provenance::new(command, res.used.clone());
    for n in notes {
        prov = prov.note(n);
    }
    let header = res.used.embed(command);
    for (path, format) in targets(&c.out, c.format, default)? {
        let text = match format {
            Format::Json => {
                let mut doc = Map::new();
                doc.insert("provenance".into(), serde_json::to_value(&prov)?);
                if let Value::Object(m) = &r.body {
                    doc.extend(m.clone());
                }
                to_json(&Value::Object(doc))?
            }
            Format::Csv => match &r.csv {
                Some(csv) => format!("{header}{csv}"),
                None => bail!(Error::InvalidParameter(format!("{command} has no CSV output"))),
            },
            Format::Svg => match &r.svg {
                Some(svg) => {
                    let (first, rest) = svg.split_once('\n').unwrap_or((svg, ""));
                    format!("{first}\n<metadata>\n{header}</metadata>\n{rest}")
                }
                None => bail!(Error::InvalidParameter(format!("{command} has no SVG output"))),
            },
        };
        match path {
            Some(p) => std::fs::write(&p, text)
                .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", p.display())))?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
    }
    Ok(())
}

fn cap_notes(w: &Wave) -> Vec<String> {
    match w {
        Wave::Newton(r) => r.seed_warning().into_iter().collect(),
        Wave::Stokes(_) => vec![],
    }
}

pub fn wave(args: WaveArgs) -> Result<()> {
    let Setup { mut res, p, modes, tol, kind } = setup(&args.common)?;
    let a = res.req("a", args.a)?;
    let w = Wave::build(&p, a, kind, modes, tol)?;
    let mut csv = String::from("n,coefficient\n");
    for (n, c) in w.cos_coeffs().iter().enumerate() {
        csv.push_str(&format!("{n},{}\n", orchestrate::fmt_f64(*c)));
    }
    let body = json!({
        "params": p,
        "wave": w,
        "residual_norm": w.residual_norm(),
        "stokes_coefficients": stokes_coefficients(&p),
    });
    emit(&args.common, "wave", &res, cap_notes(&w), Rendered { body, csv: Some(csv), svg: None }, Format::Json)
}

pub fn spectrum(args: SpectrumArgs) -> Result<()> {
    let Setup { mut res, p, modes, tol, kind } = setup(&args.common)?;
    let a = res.req("a", args.a)?;
    let ell = res.req("ell", args.ell)?;
    let xi = res.or("xi", args.xi, 0.0)?;
    if args.check {
        res.used.set("check", true);
    }
    let spec = BlochSpec::new(ell, xi, modes)?;
    let w = Wave::build(&p, a, kind, modes, tol)?;
    let s = spectrum::spectrum(&w, &spec, &p)?;
    let verdict = classify_default(&s);

    let dispersion = spec
        .modes()
        .into_iter()
        .map(|n| Ok(json!({ "n": n, "omega": criteria::omega_symbol(n, &spec, &p)? })))
        .collect::<Result<Vec<_>>>()?;
    let (xf, _) = fold_xi(xi);
    let (closed_form, reduced) = if spec.is_periodic() {
        (Some(criteria::classify_periodic(&p, a)), Some(lambda_periodic(&p, a, spec.ell_sq())))
    } else {
        let cf = criteria::classify_bloch(xf, &p).ok();
        let red = criteria::ell_thresholds(xf, &p)
            .and_then(|(_, _, lc)| lambda_bloch(&p, a, spec.ell_sq() - lc, xf))
            .ok();
        (cf, red)
    };
    let convergence = if args.check { Some(convergence_check(&w, &spec, &p)?) } else { None };

    let mut csv = String::from("re,im\n");
    for z in &s.eigenvalues {
        csv.push_str(&format!("{},{}\n", orchestrate::fmt_f64(z.re), orchestrate::fmt_f64(z.im)));
    }
    let body = json!({
        "params": p,
        "spec": spec,
        "wave": { "kind": kind, "amplitude": a, "speed": w.speed(), "residual_norm": w.residual_norm() },
        "spectrum": s,
        "verdict": verdict,
        "closed_form": closed_form,
        "reduced": reduced,
        "dispersion": dispersion,
        "convergence": convergence,
    });
    let mut notes = cap_notes(&w);
    if s.small_xi_caveat {
        notes.push(format!("|xi| < {}: Bloch modes crowd the origin; verdicts there are less reliable", spectrum::SMALL_XI));
    }
    emit(&args.common, "spectrum", &res, notes, Rendered { body, csv: Some(csv), svg: None }, Format::Json)?;

    let allowed = 10.0 * s.default_growth_tol();
    if s.symmetry_defect > allowed {
        bail!(Error::SymmetryDefect { defect: s.symmetry_defect, allowed });
    }
    Ok(())
}

pub fn threshold(args: ThresholdArgs) -> Result<()> {
    let Setup { mut res, p, modes, tol, kind } = setup(&args.common)?;
    let a = res.req("a", args.a)?;
    let xi = res.or("xi", args.xi, 0.0)?;
    let pred = periodic_prediction(&p, a);
    let (dlo, dhi) = default_bracket(pred);
    let (lo, hi) = if xi == 0.0 {
        (res.or("lo", args.lo, dlo)?, res.or("hi", args.hi, dhi)?)
    } else {
        (res.req("lo", args.lo)?, res.req("hi", args.hi)?)
    };
    let btol = res.or("bisect-tol", args.bisect_tol, 1e-10)?;
    let w = Wave::build(&p, a, kind, modes, tol)?;
    let template = BlochSpec::new(0.0, xi, modes)?;
    let t = threshold_bisect(&w, &p, &template, (lo, hi), btol, None, pred)?;
    let rel = (t.ell_star_sq - pred.abs()).abs() / pred.abs();
    let csv = format!(
        "ell_star_sq,prediction,relative_error,bracket_lo,bracket_hi,iterations,unstable_below\n{},{},{},{},{},{},{}\n",
        orchestrate::fmt_f64(t.ell_star_sq),
        orchestrate::fmt_f64(pred),
        orchestrate::fmt_f64(rel),
        orchestrate::fmt_f64(t.bracket.0),
        orchestrate::fmt_f64(t.bracket.1),
        t.iterations,
        t.unstable_below
    );
    let body = json!({
        "params": p,
        "threshold": t,
        "prediction": pred,
        "relative_error": rel,
        "closed_form": criteria::classify_periodic(&p, a),
        "reduced_at_half_threshold": lambda_periodic(&p, a, 0.5 * pred.abs()),
    });
    emit(&args.common, "threshold", &res, cap_notes(&w), Rendered { body, csv: Some(csv), svg: None }, Format::Json)
}

pub fn band(args: BandArgs) -> Result<()> {
    let Setup { mut res, p, modes, tol, kind } = setup(&args.common)?;
    let a = res.req("a", args.a)?;
    let xi = res.req("xi", args.xi)?;
    let (xf, _) = fold_xi(xi);
    let (l0, lm, lc) = criteria::ell_thresholds(xf, &p)?;
    let lo = res.or("lo", args.lo, l0)?;
    let hi = res.or("hi", args.hi, lm.max(lc))?;
    let steps = res.or("steps", args.steps, 121)?;
    let w = Wave::build(&p, a, kind, modes, tol)?;
    let template = BlochSpec::new(0.0, xi, modes)?;
    let band = band_scan(&w, &p, &template, (lo, hi), steps, None)?;

    let mut csv = String::from("ell_sq,max_real\n");
    for (x, m) in &band.samples {
        csv.push_str(&format!("{},{}\n", orchestrate::fmt_f64(*x), orchestrate::fmt_f64(*m)));
    }
    let body = json!({
        "params": p,
        "band": band,
        "prediction": {
            "ell_0_sq": l0,
            "ell_minus_sq": lm,
            "ell_c_sq": lc,
            "eps_a": criteria::epsilon_a(xf, &p, a).ok(),
            "b_factor": criteria::b_factor(xf, &p).ok(),
            "omega_star": criteria::omega_star(xf, &p).ok(),
            "closed_form": criteria::classify_bloch(xf, &p).ok(),
            "reduced_at_center": lambda_bloch(&p, a, band.center - lc, xf).ok(),
        },
    });
    emit(&args.common, "band", &res, cap_notes(&w), Rendered { body, csv: Some(csv), svg: None }, Format::Json)
}

pub fn region(args: RegionArgs) -> Result<()> {
    let c = &args.common;
    let mut res = Resolver::new(c.config.as_deref())?;
    let kappa = res.or("kappa", c.kappa, 2.0)?;
    let sigma = res.or("sigma", sigma_flag(&c.sigma)?, Sigma::MinusOne)?;
    let mode_name = res.or("mode", args.mode.clone(), "periodic".to_string())?;
    let (mode, default_a) = match mode_name.as_str() {
        "periodic" => (RegionMode::Periodic, 0.05),
        "bloch" => {
            let xi = res.req("xi", args.xi)?;
            (RegionMode::Bloch { xi: fold_xi(xi).0 }, 0.02)
        }
        other => bail!(Error::InvalidParameter(format!("mode must be periodic or bloch, got {other:?}"))),
    };
    let a = res.or("a", args.a, default_a)?;
    let grid = RegionGrid {
        b_range: (res.or("b-min", args.b_min, -4.0)?, res.or("b-max", args.b_max, 6.0)?),
        b_steps: res.or("b-steps", args.b_steps, 200)?,
        k_sq_range: (res.or("k2-min", args.k2_min, 0.0)?, res.or("k2-max", args.k2_max, 10.0)?),
        k_sq_steps: res.or("k2-steps", args.k2_steps, 200)?,
    };
    let verify = res.or("verify", args.verify, 0)?;
    let seed = res.or("seed", args.seed, 0)?;
    let map = region_map(&grid, kappa, sigma, mode, a, verify, seed)?;
    let disagreements = map.verified.iter().filter(|v| !v.agrees).count();
    if disagreements > 0 {
        eprintln!(
            "warning: {disagreements} of {} verified cells disagree with the closed form \
             (leading order in a; expect this close to a verdict boundary)",
            map.verified.len()
        );
    }
    let body = json!({ "region": map });
    let r = Rendered { body, csv: Some(region_csv(&map)?), svg: Some(region_svg(&map)) };
    emit(c, "region", &res, vec![], r, Format::Json)
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let c = &args.common;
    let mut res = Resolver::new(c.config.as_deref())?;
    let axes: Vec<Axis> = res.list("axis", args.axis.clone()).iter().map(|s| Axis::parse(s)).collect::<Result<_, _>>()?;
    let tasks: Vec<Task> = parse_list(&res.list("task", args.task.clone()))?;
    let swept = |name: &str| axes.iter().any(|a| format!("{:?}", a.name).eq_ignore_ascii_case(name));
    let fixed = |res: &mut Resolver, key: &str, cli: Option<f64>, default: Option<f64>| -> Result<f64> {
        if swept(key) {
            return Ok(f64::NAN);
        }
        match default {
            Some(d) => res.or(key, cli, d),
            None => res.req(key, cli),
        }
    };
    let b = fixed(&mut res, "b", c.b, None)?;
    let kappa = fixed(&mut res, "kappa", c.kappa, Some(2.0))?;
    let k = match c.k2 {
        Some(k2) if !swept("k") => {
            res.used.set("k2", k2);
            k2.sqrt()
        }
        _ => fixed(&mut res, "k", c.k, None)?,
    };
    let a = fixed(&mut res, "a", args.a, None)?;
    let ell = fixed(&mut res, "ell", args.ell, Some(0.0))?;
    let xi = fixed(&mut res, "xi", args.xi, Some(0.0))?;
    let sigma = res.or("sigma", sigma_flag(&c.sigma)?, Sigma::MinusOne)?;
    let n_modes = res.or("modes", c.modes, DEFAULT_MODES)?;
    let tol = res.or("tol", c.tol, DEFAULT_NEWTON_TOL)?;
    let kind = match &c.wave {
        Some(s) => Some(s.parse::<WaveKind>()?),
        None => None,
    };
    let wave = res.or("wave", kind, WaveKind::Newton)?;
    let default_workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let workers = res.or("workers", args.workers, default_workers)?;
    let seed = res.or("seed", args.seed, 0)?;
    let timing = res.or("timing", args.timing.then_some(true), false)?;
    // Worker count does not change the output; keep it out of the provenance so
    // artifacts from different machines compare equal.
    res.used.0.remove("workers");

    let cfg = SweepConfig {
        axes,
        fixed: SweepPoint { b, kappa, k, sigma, a, ell, xi },
        tasks,
        n_modes,
        wave,
        tol,
        seed,
        workers: workers.max(1),
        timing,
    };
    let rows = run_sweep(&cfg)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} sweep rows failed; see the case_label column", rows.len());
    }
    let body = json!({ "sweep": { "axes": cfg.axes, "tasks": cfg.tasks, "rows": rows } });
    let r = Rendered { body, csv: Some(sweep_csv(&rows)?), svg: None };
    emit(c, "sweep", &res, vec![], r, Format::Csv)
}
