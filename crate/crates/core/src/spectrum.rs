//! Spectra of assembled operators, numeric verdicts, threshold bisection and band scans.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{assemble, OperatorMatrix};
use crate::criteria::{self, RegionVerdict, VerdictKind};
use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{BlochSpec, PhysicalParams, Sigma};
use crate::wave::Profile;

/// Floquet exponents closer to 0 than this get a non-uniformity caveat.
pub const SMALL_XI: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Sorted by imaginary part, then real part.
    pub eigenvalues: Vec<Complex64>,
    /// Hausdorff distance between the spectrum and its image under `lambda -> -conj(lambda)`.
    pub symmetry_defect: f64,
    pub max_real: f64,
    pub spectral_radius: f64,
    /// Eigenvalues inside `near_origin_radius = r*(2)/2`.
    pub near_origin: Vec<Complex64>,
    pub near_origin_radius: f64,
    pub spec: BlochSpec,
    pub n_modes_used: usize,
    pub dimension: usize,
    pub small_xi_caveat: bool,
}

impl SpectrumResult {
    pub fn default_growth_tol(&self) -> f64 {
        1e-8 * self.spectral_radius.max(1.0)
    }

    /// The eigenvalue with the largest real part.
    pub fn most_unstable(&self) -> Option<Complex64> {
        self.eigenvalues.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re))
    }

    /// The `count` eigenvalues nearest the origin.
    pub fn nearest_origin(&self, count: usize) -> Vec<Complex64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)).then(a.re.total_cmp(&b.re)));
        v.truncate(count);
        v
    }
}

pub fn symmetry_defect(eigs: &[Complex64]) -> f64 {
    eigs.iter()
        .map(|x| {
            let r = -x.conj();
            eigs.iter().map(|y| (r - y).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn eigenvalues(matrix: &OperatorMatrix) -> Result<SpectrumResult> {
    let mut eigs = linalg::eigenvalues(&matrix.entries)?;
    eigs.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let radius = criteria::r_star(2, &matrix.params)? / 2.0;
    let max_real = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let spectral_radius = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(SpectrumResult {
        symmetry_defect: symmetry_defect(&eigs),
        max_real,
        spectral_radius,
        near_origin: eigs.iter().copied().filter(|z| z.norm() < radius).collect(),
        near_origin_radius: radius,
        spec: matrix.spec,
        n_modes_used: matrix.spec.n_modes,
        dimension: eigs.len(),
        small_xi_caveat: matrix.spec.xi != 0.0 && matrix.spec.xi.abs() < SMALL_XI,
        eigenvalues: eigs,
    })
}

/// Assemble and diagonalize in one go.
pub fn spectrum<W: Profile + ?Sized>(wave: &W, spec: &BlochSpec, p: &PhysicalParams) -> Result<SpectrumResult> {
    eigenvalues(&assemble(wave, spec, p)?)
}

/// Numeric verdict from a computed spectrum.
pub fn classify(result: &SpectrumResult, growth_tol: f64) -> RegionVerdict {
    let mut caveat = String::new();
    if result.small_xi_caveat {
        caveat.push_str(" (|xi|<0.01: not uniform in xi)");
    }
    if result.symmetry_defect > 10.0 * growth_tol {
        return RegionVerdict {
            kind: VerdictKind::Uncertified,
            case_label: format!("numeric: symmetry defect {:e} above 10*growth_tol{caveat}", result.symmetry_defect),
            witness: Some(result.symmetry_defect),
        };
    }
    if result.max_real <= growth_tol {
        return RegionVerdict {
            kind: VerdictKind::StableImaginary,
            case_label: format!("numeric: max Re <= {growth_tol:e}{caveat}"),
            witness: Some(result.max_real),
        };
    }
    let complex = result
        .eigenvalues
        .iter()
        .filter(|z| z.re > growth_tol)
        .any(|z| z.im.abs() > growth_tol);
    RegionVerdict {
        kind: if complex {
            VerdictKind::UnstableComplexPair
        } else {
            VerdictKind::UnstableRealPair
        },
        case_label: format!("numeric: max Re > {growth_tol:e}{caveat}"),
        witness: Some(result.max_real),
    }
}

/// Verdict with the default growth tolerance.
pub fn classify_default(result: &SpectrumResult) -> RegionVerdict {
    classify(result, result.default_growth_tol())
}

#[cfg(feature = "parallel")]
fn map_points<T, F>(xs: &[f64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    xs.par_iter().map(|&x| f(x)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_points<T, F>(xs: &[f64], f: F) -> Vec<T>
where
    F: Fn(f64) -> T,
{
    xs.iter().map(|&x| f(x)).collect()
}

/// Growth tolerance: `None` means the spectrum's default.
fn unstable_at<W: Profile + Sync + ?Sized>(
    wave: &W,
    p: &PhysicalParams,
    template: &BlochSpec,
    ell_sq: f64,
    growth_tol: Option<f64>,
) -> Result<(bool, SpectrumResult)> {
    let s = spectrum(wave, &template.with_ell_sq(ell_sq), p)?;
    let tol = growth_tol.unwrap_or_else(|| s.default_growth_tol());
    Ok((s.max_real > tol, s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub ell_star_sq: f64,
    pub bracket: (f64, f64),
    pub prediction: f64,
    pub iterations: usize,
    /// True when the unstable side is below the threshold.
    pub unstable_below: bool,
}

/// Closed-form threshold prediction for `xi = 0`: `ell_a^2` for KP-I, `-ell_a^2` for KP-II.
pub fn periodic_prediction(p: &PhysicalParams, a: f64) -> f64 {
    let la = criteria::ell_a_sq(p, a);
    match p.sigma {
        Sigma::MinusOne => la,
        Sigma::PlusOne => -la,
    }
}

/// Default bisection bracket `(0.1 p, 3 p)` around a prediction `p`.
pub fn default_bracket(prediction: f64) -> (f64, f64) {
    let p = prediction.abs();
    (0.1 * p, 3.0 * p)
}

/// Locate the `ell^2` where the instability predicate flips, by bisection.
pub fn threshold_bisect<W: Profile + Sync + ?Sized>(
    wave: &W,
    p: &PhysicalParams,
    template: &BlochSpec,
    bracket: (f64, f64),
    tol: f64,
    growth_tol: Option<f64>,
    prediction: f64,
) -> Result<ThresholdResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || lo < 0.0 {
        return Err(Error::InvalidParameter(format!("bad bracket ({lo}, {hi})")));
    }
    let (ulo, slo) = unstable_at(wave, p, template, lo, growth_tol)?;
    let (uhi, shi) = unstable_at(wave, p, template, hi, growth_tol)?;
    if ulo == uhi {
        let name = |s: &SpectrumResult| {
            let v = match growth_tol {
                Some(t) => classify(s, t),
                None => classify_default(s),
            };
            format!("{} (max Re {:e})", v.kind, s.max_real)
        };
        return Err(Error::NoSignChange { lower: name(&slo), upper: name(&shi) });
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let (u, _) = unstable_at(wave, p, template, mid, growth_tol)?;
        if u == ulo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        ell_star_sq: 0.5 * (lo + hi),
        bracket: (lo, hi),
        prediction,
        iterations,
        unstable_below: ulo,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    /// Edges of the unstable interval holding the largest growth rate.
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub half_width: f64,
    /// Every unstable interval found, edges refined by bisection.
    pub intervals: Vec<(f64, f64)>,
    pub peak_ell_sq: f64,
    pub peak_eigenvalue: Complex64,
    /// `(ell^2, max Re)` at each scan point.
    pub samples: Vec<(f64, f64)>,
}

/// Scan `ell^2` over `range` in `steps` uniform points, then refine the edges of each
/// unstable run.
pub fn band_scan<W: Profile + Sync + ?Sized>(
    wave: &W,
    p: &PhysicalParams,
    template: &BlochSpec,
    range: (f64, f64),
    steps: usize,
    growth_tol: Option<f64>,
) -> Result<BandResult> {
    let (lo, hi) = range;
    if !(lo < hi) || lo < 0.0 || steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "band scan needs 0 <= lo < hi and at least 2 steps, got ({lo}, {hi}) with {steps}"
        )));
    }
    let xs: Vec<f64> = (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect();
    let evals = map_points(&xs, |x| unstable_at(wave, p, template, x, growth_tol));
    let evals: Vec<(bool, SpectrumResult)> = evals.into_iter().collect::<Result<_>>()?;

    let samples: Vec<(f64, f64)> = xs.iter().zip(&evals).map(|(&x, (_, s))| (x, s.max_real)).collect();
    if !evals.iter().any(|(u, _)| *u) {
        return Err(Error::NoUnstablePoint { lo, hi });
    }

    let edge_tol = (hi - lo) * 1e-9;
    let refine = |a: f64, b: f64, unstable_at_a: bool| -> Result<f64> {
        let (mut a, mut b) = (a, b);
        while b - a > edge_tol {
            let m = 0.5 * (a + b);
            if unstable_at(wave, p, template, m, growth_tol)?.0 == unstable_at_a {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    };

    let mut intervals = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..steps {
        let u = evals[i].0;
        match (u, start) {
            (true, None) => {
                start = Some(if i == 0 { xs[0] } else { refine(xs[i - 1], xs[i], false)? });
            }
            (false, Some(s)) => {
                intervals.push((s, refine(xs[i - 1], xs[i], true)?));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        intervals.push((s, xs[steps - 1]));
    }

    let (peak_i, _) = evals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.max_real.total_cmp(&b.1 .1.max_real))
        .expect("non-empty scan");
    let peak_ell_sq = xs[peak_i];
    let peak_eigenvalue = evals[peak_i].1.most_unstable().expect("non-empty spectrum");
    let &(lower, upper) = intervals
        .iter()
        .find(|(a, b)| *a <= peak_ell_sq && peak_ell_sq <= *b)
        .unwrap_or(&intervals[0]);
    Ok(BandResult {
        lower,
        upper,
        center: 0.5 * (lower + upper),
        half_width: 0.5 * (upper - lower),
        intervals,
        peak_ell_sq,
        peak_eigenvalue,
        samples,
    })
}

/// Greedy nearest-neighbour matching of `a` into `b`; returns the largest displacement.
pub fn match_displacement(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1));
        match best {
            Some((j, d)) => {
                used[j] = true;
                worst = worst.max(d);
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Largest movement of the six eigenvalues nearest the origin when the truncation doubles.
pub fn convergence_check<W: Profile + ?Sized>(wave: &W, spec: &BlochSpec, p: &PhysicalParams) -> Result<f64> {
    let coarse = spectrum(wave, spec, p)?;
    let fine = spectrum(wave, &spec.with_modes(2 * spec.n_modes), p)?;
    Ok(match_displacement(&coarse.nearest_origin(6), &fine.eigenvalues))
}
