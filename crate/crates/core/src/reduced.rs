//! Leading-order 2x2 reduced models near the origin (xi = 0) and near the
//! `omega_{-1} = omega_0` collision (xi != 0).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, b_factors};
use crate::error::{Error, Result};
use crate::params::{PhysicalParams, Sigma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    PeriodicOrigin,
    BlochCollision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedInputs {
    pub params: PhysicalParams,
    pub a: f64,
    pub ell_sq: Option<f64>,
    pub eps: Option<f64>,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedPrediction {
    pub lambda_pair: [Complex64; 2],
    pub regime: Regime,
    pub inputs: ReducedInputs,
    /// Bloch regime only; negative means a complex pair off the imaginary axis.
    pub discriminant: Option<f64>,
    /// Size of the dropped terms, up to an unknown constant.
    pub model_error_bound: f64,
}

impl ReducedPrediction {
    pub fn max_real(&self) -> f64 {
        self.lambda_pair[0].re.max(self.lambda_pair[1].re)
    }

    pub fn trace(&self) -> Complex64 {
        self.lambda_pair[0] + self.lambda_pair[1]
    }
}

/// Leading-order pair `lambda^2 = -ell^2 (ell^2 -/+ ell_a^2) / (1 + k^2)^2`.
pub fn lambda_periodic(p: &PhysicalParams, a: f64, ell_sq: f64) -> ReducedPrediction {
    let la = criteria::ell_a_sq(p, a);
    let shifted = match p.sigma {
        Sigma::MinusOne => ell_sq - la,
        Sigma::PlusOne => ell_sq + la,
    };
    let lam_sq = -ell_sq / (1.0 + p.k_sq()).powi(2) * shifted;
    let root = Complex64::new(lam_sq, 0.0).sqrt();
    ReducedPrediction {
        lambda_pair: [root, -root],
        regime: Regime::PeriodicOrigin,
        inputs: ReducedInputs { params: *p, a, ell_sq: Some(ell_sq), eps: None, xi: 0.0 },
        discriminant: None,
        model_error_bound: a * a * ell_sq * (ell_sq + a * a),
    }
}

/// Leading-order pair near `ell^2 = ell_c^2 + eps`, for `xi in (0, 1/2]`.
pub fn lambda_bloch(p: &PhysicalParams, a: f64, eps: f64, xi: f64) -> Result<ReducedPrediction> {
    if p.sigma != Sigma::MinusOne {
        return Err(Error::Domain("the collision model is derived for sigma = -1".into()));
    }
    let omega = criteria::omega_star(xi, p)?;
    let k2 = p.k_sq();
    let (f1, f2) = b_factors(xi, p);
    let e = xi - 1.0;
    let d1 = eps / (xi * (1.0 + k2 * xi * xi));
    let d2 = eps / (e * (1.0 + k2 * e * e));
    let g1 = e * f1 / (1.0 + k2 * e * e);
    let g2 = xi * f2 / (1.0 + k2 * xi * xi);
    let disc = (d1 - d2).powi(2) + g1 * g2 * a * a;
    let mid = Complex64::new(0.0, omega + 0.5 * (d1 + d2));
    // eigenvalues of i N are i * ((d1 + d2)/2 +- sqrt(disc)/2)
    let half = 0.5 * Complex64::new(disc, 0.0).sqrt();
    let i = Complex64::new(0.0, 1.0);
    Ok(ReducedPrediction {
        lambda_pair: [mid + i * half, mid - i * half],
        regime: Regime::BlochCollision,
        inputs: ReducedInputs { params: *p, a, ell_sq: None, eps: Some(eps), xi },
        discriminant: Some(disc),
        model_error_bound: a * a + (a * eps).abs(),
    })
}
