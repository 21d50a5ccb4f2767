use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sign of the transverse dispersion term. `MinusOne` is b-KP-I, `PlusOne` is b-KP-II.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sigma {
    #[serde(rename = "-1")]
    MinusOne,
    #[serde(rename = "+1")]
    PlusOne,
}

impl Sigma {
    pub fn value(self) -> f64 {
        match self {
            Sigma::MinusOne => -1.0,
            Sigma::PlusOne => 1.0,
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::MinusOne => write!(f, "-1"),
            Sigma::PlusOne => write!(f, "+1"),
        }
    }
}

impl FromStr for Sigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-1" | "minus" | "kp1" | "KP-I" => Ok(Sigma::MinusOne),
            "1" | "+1" | "plus" | "kp2" | "KP-II" => Ok(Sigma::PlusOne),
            other => Err(Error::InvalidParameter(format!(
                "sigma must be -1 or +1, got {other:?}"
            ))),
        }
    }
}

/// Model constants `(b, kappa, k, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct PhysicalParams {
    pub b: f64,
    pub kappa: f64,
    pub k: f64,
    pub sigma: Sigma,
    /// `k^2` as given. Kept separately so grids in `k^2` hit case boundaries exactly.
    k_sq: f64,
}

#[derive(Deserialize)]
struct RawParams {
    b: f64,
    kappa: f64,
    k: f64,
    sigma: Sigma,
    k_sq: Option<f64>,
}

impl TryFrom<RawParams> for PhysicalParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        match r.k_sq {
            Some(k2) => {
                let p = PhysicalParams::with_k_sq(r.b, r.kappa, k2, r.sigma)?;
                if (p.k - r.k).abs() > 1e-12 * r.k.abs() {
                    return Err(Error::InvalidParameter(format!(
                        "k = {} and k_sq = {k2} disagree",
                        r.k
                    )));
                }
                Ok(p)
            }
            None => PhysicalParams::new(r.b, r.kappa, r.k, r.sigma),
        }
    }
}

impl PhysicalParams {
    pub fn new(b: f64, kappa: f64, k: f64, sigma: Sigma) -> Result<Self> {
        Self::build(b, kappa, k, k * k, sigma)
    }

    fn build(b: f64, kappa: f64, k: f64, k_sq: f64, sigma: Sigma) -> Result<Self> {
        if !b.is_finite() || !kappa.is_finite() || !k.is_finite() {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if b == -1.0 {
            return Err(Error::InvalidParameter(
                "b = -1 is excluded from the wave family".into(),
            ));
        }
        if kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
        }
        if k <= 0.0 {
            return Err(Error::InvalidParameter(format!("k must be > 0, got {k}")));
        }
        Ok(Self { b, kappa, k, sigma, k_sq })
    }

    /// Convenience constructor taking `k^2` instead of `k`.
    pub fn with_k_sq(b: f64, kappa: f64, k_sq: f64, sigma: Sigma) -> Result<Self> {
        if !(k_sq > 0.0) {
            return Err(Error::InvalidParameter(format!("k^2 must be > 0, got {k_sq}")));
        }
        Self::build(b, kappa, k_sq.sqrt(), k_sq, sigma)
    }

    #[inline]
    pub fn k_sq(&self) -> f64 {
        self.k_sq
    }

    pub fn with_sigma(mut self, sigma: Sigma) -> Self {
        self.sigma = sigma;
        self
    }
}

/// Perturbation quantum numbers: transverse wave number, Floquet exponent, truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct BlochSpec {
    pub ell: f64,
    pub xi: f64,
    /// Modes run over `-n_modes..=n_modes` (with 0 dropped when `xi == 0`).
    pub n_modes: usize,
}

#[derive(Deserialize)]
struct RawSpec {
    ell: f64,
    xi: f64,
    n_modes: usize,
}

impl TryFrom<RawSpec> for BlochSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        BlochSpec::new(r.ell, r.xi, r.n_modes)
    }
}

pub const MIN_MODES: usize = 8;
pub const DEFAULT_MODES: usize = 32;

impl BlochSpec {
    pub fn new(ell: f64, xi: f64, n_modes: usize) -> Result<Self> {
        if !ell.is_finite() || !xi.is_finite() {
            return Err(Error::InvalidParameter("ell and xi must be finite".into()));
        }
        if n_modes < MIN_MODES {
            return Err(Error::InvalidParameter(format!(
                "n_modes must be >= {MIN_MODES}, got {n_modes}"
            )));
        }
        if !(xi > -0.5 && xi <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "xi must lie in (-1/2, 1/2], got {xi}"
            )));
        }
        Ok(Self { ell, xi, n_modes })
    }

    /// Build from `ell^2` (must be non-negative).
    pub fn from_ell_sq(ell_sq: f64, xi: f64, n_modes: usize) -> Result<Self> {
        if !(ell_sq >= 0.0) {
            return Err(Error::InvalidParameter(format!("ell^2 must be >= 0, got {ell_sq}")));
        }
        Self::new(ell_sq.sqrt(), xi, n_modes)
    }

    #[inline]
    pub fn ell_sq(&self) -> f64 {
        self.ell * self.ell
    }

    pub fn is_periodic(&self) -> bool {
        self.xi == 0.0
    }

    /// Ascending Fourier modes carried by the truncated operator.
    pub fn modes(&self) -> Vec<i64> {
        let n = self.n_modes as i64;
        (-n..=n).filter(|&m| !(self.is_periodic() && m == 0)).collect()
    }

    pub fn with_ell_sq(self, ell_sq: f64) -> Self {
        Self { ell: ell_sq.max(0.0).sqrt(), ..self }
    }

    pub fn with_modes(self, n_modes: usize) -> Self {
        Self { n_modes, ..self }
    }
}
