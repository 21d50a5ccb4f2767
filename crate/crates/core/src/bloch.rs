//! Truncated Floquet-Bloch matrix of the linearized operator in the exponential basis.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::params::{BlochSpec, PhysicalParams};
use crate::wave::{wave_derivatives, Profile, WaveDerivatives};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMatrix {
    pub entries: CMatrix,
    /// Fourier mode of each row and column, ascending.
    pub mode_index: Vec<i64>,
    pub spec: BlochSpec,
    pub params: PhysicalParams,
    pub wave_tag: String,
    pub amplitude: f64,
    pub speed: f64,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.mode_index.len()
    }

    /// Row/column position of mode `n`.
    pub fn position(&self, n: i64) -> Option<usize> {
        self.mode_index.binary_search(&n).ok()
    }
}

/// Real factor `R_mn` of entry `(m, n)`; the entry is `i s_m / (1 + k^2 s_m^2) * R_mn`.
#[inline]
fn bracket(m: i64, n: i64, xi: f64, c: f64, ell_sq: f64, d: &WaveDerivatives, p: &PhysicalParams) -> f64 {
    let k2 = p.k_sq();
    let sn = n as f64 + xi;
    let j = m - n;
    let jf = j as f64;
    let wj = d.w_hat(j);
    let mut r = -wj * ((p.b + 1.0) + k2 * (jf * jf + (p.b - 1.0) * jf * sn + sn * sn));
    if m == n {
        r += c * (1.0 + k2 * sn * sn) - p.kappa - p.sigma.value() * ell_sq / (sn * sn);
    }
    r
}

pub fn assemble<W: Profile + ?Sized>(wave: &W, spec: &BlochSpec, p: &PhysicalParams) -> Result<OperatorMatrix> {
    let modes = spec.modes();
    assemble_modes(wave, spec, p, modes)
}

/// Assemble on an explicit mode list (ascending, no duplicates).
pub fn assemble_modes<W: Profile + ?Sized>(
    wave: &W,
    spec: &BlochSpec,
    p: &PhysicalParams,
    modes: Vec<i64>,
) -> Result<OperatorMatrix> {
    if modes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Dimension("mode list must be strictly ascending".into()));
    }
    if spec.xi == 0.0 && modes.contains(&0) {
        return Err(Error::Dimension("mode 0 must be excluded when xi = 0".into()));
    }
    let span = modes.last().copied().unwrap_or(0) - modes.first().copied().unwrap_or(0);
    let d = wave_derivatives(wave, span.max(0) as usize);
    let xi = spec.xi;
    let c = wave.speed();
    let ell_sq = spec.ell_sq();
    let k2 = p.k_sq();
    let n = modes.len();
    let entries = CMatrix::from_fn(n, |r, col| {
        let m = modes[r];
        let sm = m as f64 + xi;
        let pre = sm / (1.0 + k2 * sm * sm);
        Complex64::new(0.0, pre * bracket(m, modes[col], xi, c, ell_sq, &d, p))
    });
    Ok(OperatorMatrix {
        entries,
        mode_index: modes,
        spec: *spec,
        params: *p,
        wave_tag: wave.tag(),
        amplitude: wave.amplitude(),
        speed: c,
    })
}

/// Apply the operator to `v` (coefficients over `matrix.mode_index`) on a grid and
/// return the relative difference with `matrix * v`.
///
/// Products with the wave are formed pointwise after an inverse FFT; the constant
/// coefficient factors act on Fourier coefficients. `v` must vanish on modes with
/// `|n| > n_modes / 2`.
pub fn operator_apply_check<W: Profile + ?Sized>(
    matrix: &OperatorMatrix,
    wave: &W,
    v: &[Complex64],
) -> Result<f64> {
    if v.len() != matrix.dim() {
        return Err(Error::Dimension(format!(
            "test vector has {} entries, matrix has {}",
            v.len(),
            matrix.dim()
        )));
    }
    let band = (matrix.spec.n_modes / 2) as i64;
    if matrix
        .mode_index
        .iter()
        .zip(v)
        .any(|(&n, z)| n.abs() > band && *z != Complex64::new(0.0, 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "test vector must be band-limited to |n| <= {band}"
        )));
    }
    let p = &matrix.params;
    let xi = matrix.spec.xi;
    let k2 = p.k_sq();
    let wcos = wave.cos_coeffs();
    let wband = wcos.len() as i64 - 1;
    let out_band = band + wband;
    let size = ((2 * out_band + 2) as usize).max(16).next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let inv = planner.plan_fft_inverse(size);
    let fwd = planner.plan_fft_forward(size);
    let to_grid = |coef: &dyn Fn(i64) -> Complex64| -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for n in -out_band..=out_band {
            let z = coef(n);
            if z != Complex64::new(0.0, 0.0) {
                buf[n.rem_euclid(size as i64) as usize] = z;
            }
        }
        inv.process(&mut buf);
        buf
    };
    let vc = |n: i64| matrix.position(n).map_or(Complex64::new(0.0, 0.0), |i| v[i]);
    let wc = |n: i64| -> f64 {
        let j = n.unsigned_abs() as usize;
        match j {
            0 => wcos[0],
            _ if j < wcos.len() => 0.5 * wcos[j],
            _ => 0.0,
        }
    };
    let i = Complex64::new(0.0, 1.0);
    // Periodic parts of V, V_z, V_zz and of w, w_z, w_zz.
    let gv = to_grid(&|n| vc(n));
    let gvz = to_grid(&|n| i * (n as f64 + xi) * vc(n));
    let gvzz = to_grid(&|n| -((n as f64 + xi).powi(2)) * vc(n));
    let gw = to_grid(&|n| Complex64::new(wc(n), 0.0));
    let gwz = to_grid(&|n| i * n as f64 * wc(n));
    let gwzz = to_grid(&|n| Complex64::new(-(n as f64).powi(2) * wc(n), 0.0));

    let mut prod: Vec<Complex64> = (0..size)
        .map(|t| {
            gw[t] * gv[t] * (p.b + 1.0) - gwzz[t] * gv[t] * k2 - gwz[t] * gvz[t] * (k2 * (p.b - 1.0)) - gw[t] * gvzz[t] * k2
        })
        .collect();
    fwd.process(&mut prod);
    let scale = 1.0 / size as f64;
    let c = matrix.speed;
    let ell_sq = matrix.spec.ell_sq();

    let mv = matrix.entries.matvec(v)?;
    let mut diff = 0.0;
    let mut norm = 0.0;
    for n in -out_band..=out_band {
        if xi == 0.0 && n == 0 {
            continue;
        }
        let s = n as f64 + xi;
        let g = prod[n.rem_euclid(size as i64) as usize] * scale;
        let br = vc(n) * (c * (1.0 + k2 * s * s) - p.kappa - p.sigma.value() * ell_sq / (s * s)) - g;
        let grid = i * (s / (1.0 + k2 * s * s)) * br;
        let mat = matrix.position(n).map_or(Complex64::new(0.0, 0.0), |r| mv[r]);
        diff += (grid - mat).norm_sqr();
        norm += grid.norm_sqr();
    }
    Ok(if norm == 0.0 { diff.sqrt() } else { (diff / norm).sqrt() })
}
