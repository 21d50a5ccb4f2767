//! Small-amplitude periodic traveling waves: third-order Stokes expansion and
//! Newton refinement of the profile equation in a cosine basis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

pub const DEFAULT_AMPLITUDE_CAP: f64 = 0.2;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
pub const MAX_NEWTON_ITERATIONS: usize = 50;

/// Even, real profile given by its cosine coefficients `w = sum_j cos_coeffs[j] cos(j z)`.
pub trait Profile {
    fn cos_coeffs(&self) -> &[f64];
    fn speed(&self) -> f64;
    fn amplitude(&self) -> f64;
    fn params(&self) -> &PhysicalParams;
    /// Short provenance string carried into assembled matrices.
    fn tag(&self) -> String;
}

/// Expansion coefficients `A0, A2, A3, c0, c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesCoefficients {
    pub a0: f64,
    pub a2: f64,
    pub a3: f64,
    pub c0: f64,
    pub c2: f64,
}

pub fn stokes_coefficients(p: &PhysicalParams) -> StokesCoefficients {
    let (b, kappa) = (p.b, p.kappa);
    let k2 = p.k_sq();
    let a0 = (1.0 + k2) / (4.0 * kappa * k2) * ((b - 3.0) * k2 - (b + 1.0));
    let a2 = (b + 1.0) * (1.0 + k2).powi(2) / (12.0 * kappa * k2);
    let a3 = (b + 1.0) * (1.0 + k2).powi(3) / (192.0 * kappa * kappa * k2 * k2)
        * ((2.0 * b + 3.0) * k2 + (b + 1.0));
    let c0 = kappa / (1.0 + k2);
    let c2 = ((-2.0 * b * b + 11.0 * b - 11.0) / 24.0 * k2 + (5.0 * b * b - 11.0 * b - 16.0) / 24.0
        - 5.0 * (b + 1.0).powi(2) / (24.0 * k2))
        / kappa;
    StokesCoefficients { a0, a2, a3, c0, c2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesWave {
    pub a: f64,
    /// Coefficients of `cos(jz)`, `j = 0..=3`.
    pub cos_coeffs: [f64; 4],
    pub c: f64,
    pub params: PhysicalParams,
}

pub fn stokes_wave(p: &PhysicalParams, a: f64) -> Result<StokesWave> {
    stokes_wave_capped(p, a, DEFAULT_AMPLITUDE_CAP)
}

pub fn stokes_wave_capped(p: &PhysicalParams, a: f64, cap: f64) -> Result<StokesWave> {
    if !a.is_finite() || a.abs() > cap {
        return Err(Error::AmplitudeCap { amplitude: a.abs(), cap });
    }
    let s = stokes_coefficients(p);
    let a2 = a * a;
    Ok(StokesWave {
        a,
        cos_coeffs: [a2 * s.a0, a, a2 * s.a2, a2 * a * s.a3],
        c: s.c0 + a2 * s.c2,
        params: *p,
    })
}

impl Profile for StokesWave {
    fn cos_coeffs(&self) -> &[f64] {
        &self.cos_coeffs
    }
    fn speed(&self) -> f64 {
        self.c
    }
    fn amplitude(&self) -> f64 {
        self.a
    }
    fn params(&self) -> &PhysicalParams {
        &self.params
    }
    fn tag(&self) -> String {
        format!("stokes(a={:e})", self.a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedWave {
    pub params: PhysicalParams,
    pub a: f64,
    /// Coefficients of `cos(jz)`, `j = 0..=N`.
    pub cos_coeffs: Vec<f64>,
    pub c: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub tol: f64,
    /// Residual of the seed; above 1e-2 the seed may sit outside the Newton basin.
    pub seed_residual: f64,
}

impl Profile for RefinedWave {
    fn cos_coeffs(&self) -> &[f64] {
        &self.cos_coeffs
    }
    fn speed(&self) -> f64 {
        self.c
    }
    fn amplitude(&self) -> f64 {
        self.a
    }
    fn params(&self) -> &PhysicalParams {
        &self.params
    }
    fn tag(&self) -> String {
        format!(
            "newton(a={:e}, N={}, residual={:e})",
            self.a,
            self.cos_coeffs.len() - 1,
            self.residual_norm
        )
    }
}

impl RefinedWave {
    pub fn seed_warning(&self) -> Option<String> {
        (self.seed_residual > 1e-2).then(|| {
            format!("seed residual {:e} is large; Newton may have left the small-amplitude branch", self.seed_residual)
        })
    }
}

/// Which construction to use for the wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    Stokes,
    Newton,
}

impl std::str::FromStr for WaveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stokes" => Ok(WaveKind::Stokes),
            "newton" => Ok(WaveKind::Newton),
            other => Err(Error::InvalidParameter(format!("wave kind must be stokes or newton, got {other:?}"))),
        }
    }
}

impl std::fmt::Display for WaveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WaveKind::Stokes => "stokes",
            WaveKind::Newton => "newton",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Wave {
    Stokes(StokesWave),
    Newton(RefinedWave),
}

impl Wave {
    pub fn build(p: &PhysicalParams, a: f64, kind: WaveKind, n_modes: usize, tol: f64) -> Result<Self> {
        let seed = stokes_wave(p, a)?;
        Ok(match kind {
            WaveKind::Stokes => Wave::Stokes(seed),
            WaveKind::Newton => Wave::Newton(newton_refine(&seed, p, n_modes, tol)?),
        })
    }

    fn inner(&self) -> &dyn Profile {
        match self {
            Wave::Stokes(w) => w,
            Wave::Newton(w) => w,
        }
    }

    pub fn residual_norm(&self) -> f64 {
        profile_residual(self.cos_coeffs(), self.speed(), self.params())
    }
}

impl Profile for Wave {
    fn cos_coeffs(&self) -> &[f64] {
        self.inner().cos_coeffs()
    }
    fn speed(&self) -> f64 {
        self.inner().speed()
    }
    fn amplitude(&self) -> f64 {
        self.inner().amplitude()
    }
    fn params(&self) -> &PhysicalParams {
        self.inner().params()
    }
    fn tag(&self) -> String {
        self.inner().tag()
    }
}

/// Exponential coefficients `w_hat[n + m]`, `n = -m..=m`, of a cosine series.
fn exp_coeffs(cos: &[f64]) -> (Vec<f64>, usize) {
    let m = cos.len().saturating_sub(1);
    let mut out = vec![0.0; 2 * m + 1];
    if cos.is_empty() {
        return (vec![0.0], 0);
    }
    out[m] = cos[0];
    for (j, &cj) in cos.iter().enumerate().skip(1) {
        out[m + j] = 0.5 * cj;
        out[m - j] = 0.5 * cj;
    }
    (out, m)
}

/// Exponential coefficients of the profile functional, modes `-2M..=2M`.
fn residual_coeffs(cos: &[f64], c: f64, p: &PhysicalParams) -> (Vec<f64>, usize) {
    let (w, m) = exp_coeffs(cos);
    let half = 2 * m;
    let k2 = p.k_sq();
    let b = p.b;
    let mut f = vec![0.0; 2 * half + 1];
    for (i, &wi) in w.iter().enumerate() {
        let n = i as f64 - m as f64;
        f[i + m] += (p.kappa - c) * wi - c * k2 * n * n * wi;
    }
    // Full triangular sum of the quadratic terms, no truncation.
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let j = i as f64 - m as f64;
        for (l, &wl) in w.iter().enumerate() {
            if wl == 0.0 {
                continue;
            }
            let q = l as f64 - m as f64;
            let kern = 0.5 * (b + 1.0) + k2 * q * q + 0.5 * (b - 1.0) * k2 * j * q;
            f[i + l] += kern * wi * wl;
        }
    }
    (f, half)
}

/// L2 norm (with the `1/(2 pi)` normalization) of the profile functional.
pub fn profile_residual(cos: &[f64], c: f64, p: &PhysicalParams) -> f64 {
    let (f, _) = residual_coeffs(cos, c, p);
    f.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Galerkin residual on cosine modes `0..=n`.
fn galerkin(cos: &[f64], c: f64, p: &PhysicalParams) -> DVector<f64> {
    let n = cos.len() - 1;
    let (f, half) = residual_coeffs(cos, c, p);
    DVector::from_fn(n + 1, |j, _| if j == 0 { f[half] } else { 2.0 * f[half + j] })
}

/// Jacobian of `galerkin` with respect to `(C_0, C_2, .., C_N, c)`.
fn jacobian(cos: &[f64], c: f64, p: &PhysicalParams) -> DMatrix<f64> {
    let n = cos.len() - 1;
    let (w, m) = exp_coeffs(cos);
    let k2 = p.k_sq();
    let b = p.b;
    let wh = |j: i64| -> f64 {
        if j.unsigned_abs() as usize > m {
            0.0
        } else {
            w[(j + m as i64) as usize]
        }
    };
    let ks = |j: f64, q: f64| 0.5 * (b + 1.0) + 0.5 * k2 * (j * j + q * q) + 0.5 * (b - 1.0) * k2 * j * q;
    // d F_hat_r / d w_hat_s treating each exponential coefficient as independent.
    let dfdw = |r: i64, s: i64| -> f64 {
        let mut v = 2.0 * ks(s as f64, (r - s) as f64) * wh(r - s);
        if r == s {
            let rf = r as f64;
            v += p.kappa - c - c * k2 * rf * rf;
        }
        v
    };
    let unknowns: Vec<usize> = std::iter::once(0).chain(2..=n).collect();
    let mut jac = DMatrix::zeros(n + 1, n + 1);
    for row in 0..=n {
        let r = row as i64;
        let scale = if row == 0 { 1.0 } else { 2.0 };
        for (col, &j) in unknowns.iter().enumerate() {
            let d = if j == 0 {
                dfdw(r, 0)
            } else {
                0.5 * (dfdw(r, j as i64) + dfdw(r, -(j as i64)))
            };
            jac[(row, col)] = scale * d;
        }
        let rf = r as f64;
        jac[(row, n)] = -scale * wh(r) * (1.0 + k2 * rf * rf);
    }
    jac
}

/// Solve the profile equation with the `cos z` coefficient pinned to `a`,
/// starting from the Stokes seed. Unknowns are the other `N` cosine
/// coefficients and the speed.
pub fn newton_refine(seed: &StokesWave, p: &PhysicalParams, n_modes: usize, tol: f64) -> Result<RefinedWave> {
    if n_modes < 4 {
        return Err(Error::InvalidParameter(format!(
            "newton_refine needs at least 4 cosine modes, got {n_modes}"
        )));
    }
    let mut cos = vec![0.0; n_modes + 1];
    for (j, &v) in seed.cos_coeffs.iter().enumerate() {
        cos[j] = v;
    }
    cos[1] = seed.a;
    let mut c = seed.c;
    let seed_residual = profile_residual(&cos, c, p);

    let mut res = galerkin(&cos, c, p);
    let mut norm = res.norm();
    let mut iterations = 0;
    while norm > 0.01 * tol && iterations < MAX_NEWTON_ITERATIONS {
        iterations += 1;
        let jac = jacobian(&cos, c, p);
        let step = jac
            .lu()
            .solve(&(-&res))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularJacobian { iteration: iterations })?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let mut trial = cos.clone();
            trial[0] += t * step[0];
            for j in 2..=n_modes {
                trial[j] += t * step[j - 1];
            }
            let tc = c + t * step[n_modes];
            let tres = galerkin(&trial, tc, p);
            let tnorm = tres.norm();
            if tnorm < norm || tnorm <= 0.01 * tol {
                cos = trial;
                c = tc;
                res = tres;
                norm = tnorm;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Stagnated at rounding level.
            break;
        }
    }
    let residual_norm = profile_residual(&cos, c, p);
    if residual_norm > tol {
        return Err(Error::NoConvergence { iterations, residual: residual_norm });
    }
    Ok(RefinedWave {
        params: *p,
        a: seed.a,
        cos_coeffs: cos,
        c,
        residual_norm,
        iterations,
        tol,
        seed_residual,
    })
}

/// Exponential-basis coefficients of `w`, `w_z`, `w_zz` for modes `-half..=half`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveDerivatives {
    pub half: usize,
    pub w: Vec<Complex64>,
    pub wz: Vec<Complex64>,
    pub wzz: Vec<Complex64>,
}

impl WaveDerivatives {
    #[inline]
    fn idx(&self, n: i64) -> Option<usize> {
        (n.unsigned_abs() as usize <= self.half).then(|| (n + self.half as i64) as usize)
    }

    /// Real coefficient `w_hat_n` (zero outside the stored range).
    #[inline]
    pub fn w_hat(&self, n: i64) -> f64 {
        self.idx(n).map_or(0.0, |i| self.w[i].re)
    }

    pub fn w_at(&self, n: i64) -> Complex64 {
        self.idx(n).map_or(Complex64::new(0.0, 0.0), |i| self.w[i])
    }

    pub fn wz_at(&self, n: i64) -> Complex64 {
        self.idx(n).map_or(Complex64::new(0.0, 0.0), |i| self.wz[i])
    }

    pub fn wzz_at(&self, n: i64) -> Complex64 {
        self.idx(n).map_or(Complex64::new(0.0, 0.0), |i| self.wzz[i])
    }

    /// Highest harmonic with a nonzero coefficient.
    pub fn bandwidth(&self) -> usize {
        (0..=self.half).rev().find(|&j| self.w_hat(j as i64) != 0.0).unwrap_or(0)
    }
}

pub fn wave_derivatives<W: Profile + ?Sized>(w: &W, n_modes: usize) -> WaveDerivatives {
    let cos = w.cos_coeffs();
    let len = 2 * n_modes + 1;
    let mut out = WaveDerivatives {
        half: n_modes,
        w: vec![Complex64::new(0.0, 0.0); len],
        wz: vec![Complex64::new(0.0, 0.0); len],
        wzz: vec![Complex64::new(0.0, 0.0); len],
    };
    for (j, &cj) in cos.iter().enumerate().take(n_modes + 1) {
        let v = if j == 0 { cj } else { 0.5 * cj };
        for n in [j as i64, -(j as i64)] {
            let i = (n + n_modes as i64) as usize;
            let nf = n as f64;
            out.w[i] = Complex64::new(v, 0.0);
            out.wz[i] = Complex64::new(0.0, nf * v);
            out.wzz[i] = Complex64::new(-nf * nf * v, 0.0);
        }
    }
    out
}
