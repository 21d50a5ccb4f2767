//! Closed-form quantities: dispersion symbols, Krein signs, thresholds,
//! collision functions and the region classifiers.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::params::{BlochSpec, PhysicalParams, Sigma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictKind {
    StableImaginary,
    UnstableRealPair,
    UnstableComplexPair,
    Uncertified,
}

impl VerdictKind {
    pub fn is_unstable(self) -> bool {
        matches!(self, VerdictKind::UnstableRealPair | VerdictKind::UnstableComplexPair)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::StableImaginary => "STABLE_IMAGINARY",
            VerdictKind::UnstableRealPair => "UNSTABLE_REAL_PAIR",
            VerdictKind::UnstableComplexPair => "UNSTABLE_COMPLEX_PAIR",
            VerdictKind::Uncertified => "UNCERTIFIED",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub kind: VerdictKind,
    pub case_label: String,
    pub witness: Option<f64>,
}

impl RegionVerdict {
    fn new(kind: VerdictKind, case_label: impl Into<String>, witness: Option<f64>) -> Self {
        Self { kind, case_label: case_label.into(), witness }
    }
}

/// Label used for exact boundaries of the case tables.
pub const BOUNDARY: &str = "boundary";

#[inline]
fn check_zero_mode(n: i64, xi: f64) -> Result<()> {
    if xi == 0.0 && n == 0 {
        return Err(Error::Domain(
            "mode n = 0 is excluded on the zero-mean space (xi = 0)".into(),
        ));
    }
    Ok(())
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi <= 0.5) {
        return Err(Error::Domain(format!(
            "xi must lie in (0, 1/2] (fold negative xi first), got {xi}"
        )));
    }
    Ok(())
}

/// Map `xi` in `(-1/2, 1/2]` onto `[0, 1/2]`. The flag is true when the
/// spectrum must be negated (and modes reflected) to undo the fold.
pub fn fold_xi(xi: f64) -> (f64, bool) {
    if xi < 0.0 {
        (-xi, true)
    } else {
        (xi, false)
    }
}

/// Linear dispersion `omega_n(ell, xi)` for mode `n`.
pub fn omega_symbol(n: i64, spec: &BlochSpec, p: &PhysicalParams) -> Result<f64> {
    check_zero_mode(n, spec.xi)?;
    Ok(omega_raw(n as f64 + spec.xi, spec.ell_sq(), p))
}

/// `s = n + xi`, no domain checks.
pub(crate) fn omega_raw(s: f64, ell_sq: f64, p: &PhysicalParams) -> f64 {
    let k2 = p.k_sq();
    let d = 1.0 + k2 * s * s;
    s * (p.kappa / (1.0 + k2) - p.kappa / d - p.sigma.value() * ell_sq / (s * s * d))
}

/// `mu_n` and its sign. The sign is 0 when `mu` vanishes up to rounding of its two terms.
pub fn mu_and_krein(n: i64, spec: &BlochSpec, p: &PhysicalParams) -> Result<(f64, i8)> {
    check_zero_mode(n, spec.xi)?;
    let s = n as f64 + spec.xi;
    let k2 = p.k_sq();
    let t1 = p.kappa * k2 * (s * s - 1.0) / (1.0 + k2);
    let t2 = p.sigma.value() * spec.ell_sq() / (s * s);
    let mu = t1 - t2;
    let scale = t1.abs().max(t2.abs());
    let krein = if mu.abs() <= 4.0 * f64::EPSILON * scale || mu == 0.0 {
        0
    } else if mu > 0.0 {
        1
    } else {
        -1
    };
    Ok((mu, krein))
}

pub fn ell_a_sq(p: &PhysicalParams, a: f64) -> f64 {
    let k2 = p.k_sq();
    let b = p.b;
    ((b + 1.0) + (7.0 - 2.0 * b) * k2) * (b + 1.0) * (1.0 + k2).powi(2) / (12.0 * p.kappa * k2)
        * a
        * a
}

fn periodic_case(b: f64, k2: f64) -> Option<(bool, &'static str)> {
    let bound = (b + 1.0) / (2.0 * b - 7.0);
    if b > -1.0 && b <= 3.5 {
        Some((true, "periodic.la_pos.1: -1<b<=7/2"))
    } else if b > 3.5 && k2 < bound {
        Some((true, "periodic.la_pos.2: b>7/2, k^2<(b+1)/(2b-7)"))
    } else if b < -1.0 && k2 < bound {
        Some((true, "periodic.la_pos.3: b<-1, k^2<(b+1)/(2b-7)"))
    } else if b > 3.5 && k2 > bound {
        Some((false, "periodic.la_neg.1: b>7/2, k^2>(b+1)/(2b-7)"))
    } else if b < -1.0 && k2 > bound {
        Some((false, "periodic.la_neg.2: b<-1, k^2>(b+1)/(2b-7)"))
    } else {
        None
    }
}

/// Co-periodic (`xi = 0`) classification from the sign of `ell_a^2`.
pub fn classify_periodic(p: &PhysicalParams, a: f64) -> RegionVerdict {
    let la = ell_a_sq(p, a);
    match periodic_case(p.b, p.k_sq()) {
        Some((positive, label)) if la != 0.0 => {
            // KP-I destabilizes when ell_a^2 > 0, KP-II when ell_a^2 < 0.
            let unstable = match p.sigma {
                Sigma::MinusOne => positive,
                Sigma::PlusOne => !positive,
            };
            let kind = if unstable {
                VerdictKind::UnstableRealPair
            } else {
                VerdictKind::StableImaginary
            };
            RegionVerdict::new(kind, label, Some(la))
        }
        _ => RegionVerdict::new(VerdictKind::Uncertified, BOUNDARY, Some(la)),
    }
}

/// The three thresholds `(ell_0^2, ell_-^2, ell_c^2)`.
pub fn ell_thresholds(xi: f64, p: &PhysicalParams) -> Result<(f64, f64, f64)> {
    check_xi(xi)?;
    let k2 = p.k_sq();
    let pre = p.kappa * k2 / (1.0 + k2);
    let e = 1.0 - xi;
    let l0 = pre * (1.0 - xi * xi) * xi * xi;
    let lm = pre * xi * (2.0 - xi) * e * e;
    let num = (1.0 + xi) * (1.0 + k2 * e * e) + (1.0 + k2 * xi * xi) * (2.0 - xi);
    let lc = pre * e * e * xi * xi * num / collision_denominator(xi, k2);
    Ok((l0, lm, lc))
}

/// `(1-xi)(1+k^2(1-xi)^2) + xi(1+k^2 xi^2)`, shared by `ell_c`, `eps_a` and `omega_*`.
fn collision_denominator(xi: f64, k2: f64) -> f64 {
    let e = 1.0 - xi;
    e * (1.0 + k2 * e * e) + xi * (1.0 + k2 * xi * xi)
}

/// The two factors of `B`.
pub fn b_factors(xi: f64, p: &PhysicalParams) -> (f64, f64) {
    let k2 = p.k_sq();
    let b = p.b;
    let f1 = k2 * xi * xi + (1.0 - b) * k2 * xi + k2 + (b + 1.0);
    let f2 = k2 * xi * xi + (b - 3.0) * k2 * xi + (3.0 - b) * k2 + (b + 1.0);
    (f1, f2)
}

pub fn b_factor(xi: f64, p: &PhysicalParams) -> Result<f64> {
    check_xi(xi)?;
    let (f1, f2) = b_factors(xi, p);
    Ok(f1 * f2)
}

/// Half-width in `ell^2` of the instability band around `ell_c^2`.
pub fn epsilon_a(xi: f64, p: &PhysicalParams, a: f64) -> Result<f64> {
    let bb = b_factor(xi, p)?;
    if !(bb > 0.0) {
        return Err(Error::Domain(format!(
            "band half-width needs B > 0, got B = {bb}"
        )));
    }
    let k2 = p.k_sq();
    let e = 1.0 - xi;
    let geom = (xi * e).powf(1.5) * ((1.0 + k2 * xi * xi) * (1.0 + k2 * e * e)).sqrt()
        / collision_denominator(xi, k2);
    Ok(geom * bb.sqrt() * a.abs())
}

fn bloch_case(b: f64, k2: f64, xi: f64) -> Option<(bool, &'static str)> {
    let q1 = xi * xi + (1.0 - b) * xi + 1.0;
    let q2 = xi * xi + (b - 3.0) * xi + (3.0 - b);
    let r1 = -(1.0 + b) / q1;
    let r2 = -(1.0 + b) / q2;
    let x1 = (xi * xi - 3.0 * xi + 3.0) / (1.0 - xi);
    let x2 = (xi * xi + xi + 1.0) / xi;
    let half = xi == 0.5;

    if (-1.0..=3.0).contains(&b) {
        return Some((true, "bloch.b_pos.1: -1<=b<=3"));
    }
    if b < -1.0 {
        if half {
            let r = -4.0 * (1.0 + b) / (7.0 - 2.0 * b);
            return (k2 != r).then_some((true, "bloch.b_pos.2: b<-1, xi=1/2, k^2!=-4(1+b)/(7-2b)"));
        }
        if k2 > r1 || k2 < r2 {
            return Some((true, "bloch.b_pos.3: b<-1, k^2>-(1+b)/q1 or k^2<-(1+b)/q2"));
        }
        if r2 < k2 && k2 < r1 {
            return Some((false, "bloch.b_neg.1: b<-1, -(1+b)/q2<k^2<-(1+b)/q1"));
        }
        return None;
    }
    // b > 3 from here on.
    let r4 = 4.0 / (b - 3.0);
    if k2 <= r4 {
        return Some((true, "bloch.b_pos.4: b>3, k^2<=4/(b-3)"));
    }
    if half {
        if b <= 3.5 {
            return Some((true, "bloch.b_pos.5: 3<b<=7/2, xi=1/2, k^2>4/(b-3)"));
        }
        let r = -4.0 * (1.0 + b) / (7.0 - 2.0 * b);
        return (k2 != r).then_some((
            true,
            "bloch.b_pos.6: b>7/2, xi=1/2, k^2>4/(b-3), k^2!=-4(1+b)/(7-2b)",
        ));
    }
    if b <= x1 {
        return Some((true, "bloch.b_pos.7: 3<b<=(xi^2-3xi+3)/(1-xi)"));
    }
    if b <= x2 {
        if k2 < r2 {
            return Some((true, "bloch.b_pos.8: x1<b<=x2, 4/(b-3)<k^2<-(1+b)/q2"));
        }
        if k2 > r2 {
            return Some((false, "bloch.b_neg.2: x1<b<=x2, k^2>-(1+b)/q2"));
        }
        return None;
    }
    if k2 > r1 || k2 < r2 {
        return Some((true, "bloch.b_pos.9: b>x2, k^2>-(1+b)/q1 or 4/(b-3)<k^2<-(1+b)/q2"));
    }
    if r2 < k2 && k2 < r1 {
        return Some((false, "bloch.b_neg.3: b>x2, -(1+b)/q2<k^2<-(1+b)/q1"));
    }
    None
}

/// Classification near the `omega_{-1} = omega_0` collision for `xi in (0, 1/2]`.
pub fn classify_bloch(xi: f64, p: &PhysicalParams) -> Result<RegionVerdict> {
    check_xi(xi)?;
    let bb = b_factor(xi, p)?;
    if p.sigma == Sigma::PlusOne {
        return Ok(RegionVerdict::new(
            VerdictKind::Uncertified,
            "sigma=+1: no certified classification",
            Some(bb),
        ));
    }
    Ok(match bloch_case(p.b, p.k_sq(), xi) {
        Some((positive, label)) if bb != 0.0 => {
            let kind = if positive {
                VerdictKind::UnstableComplexPair
            } else {
                VerdictKind::StableImaginary
            };
            RegionVerdict::new(kind, label, Some(bb))
        }
        _ => RegionVerdict::new(VerdictKind::Uncertified, BOUNDARY, Some(bb)),
    })
}

/// Reference mode for the collision functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollisionRef {
    /// `F_n = omega_n - omega_{-1}`
    MinusOne,
    /// `F~_n = omega_n - omega_0`
    Zero,
}

impl CollisionRef {
    fn mode(self) -> i64 {
        match self {
            CollisionRef::MinusOne => -1,
            CollisionRef::Zero => 0,
        }
    }
}

/// Coefficients `(G, H)` with `omega_n - omega_ref = G + ell^2 H`.
pub fn collision_coeffs(n: i64, reference: CollisionRef, xi: f64, p: &PhysicalParams) -> (f64, f64) {
    let k2 = p.k_sq();
    let pre = p.kappa * k2 / (1.0 + k2);
    let g = |s: f64| pre * s * (s * s - 1.0) / (1.0 + k2 * s * s);
    let h = |s: f64| -p.sigma.value() / (s * (1.0 + k2 * s * s));
    let s = n as f64 + xi;
    let r = reference.mode() as f64 + xi;
    (g(s) - g(r), h(s) - h(r))
}

pub fn collision_f(
    n: i64,
    reference: CollisionRef,
    ell_sq: f64,
    xi: f64,
    p: &PhysicalParams,
) -> Result<f64> {
    check_xi(xi)?;
    let (g, h) = collision_coeffs(n, reference, xi, p);
    Ok(g + ell_sq * h)
}

/// The value of `ell^2` where `F_n` vanishes, if the slope is nonzero.
pub fn collision_root(n: i64, reference: CollisionRef, xi: f64, p: &PhysicalParams) -> Result<Option<f64>> {
    check_xi(xi)?;
    let (g, h) = collision_coeffs(n, reference, xi, p);
    Ok((h != 0.0).then(|| -g / h))
}

/// True when `k^2 <= 3`: the band classification then covers every `ell^2 > 0`.
pub fn longwave_guard(_xi: f64, p: &PhysicalParams) -> bool {
    p.k_sq() <= 3.0
}

/// Transverse wave number at which KP-II modes `p` and `-q` collide.
pub fn collision_ell_pq(pq: (u32, u32), par: &PhysicalParams) -> Result<f64> {
    if par.sigma != Sigma::PlusOne {
        return Err(Error::Domain(
            "mode collisions at nonzero ell only occur for sigma = +1".into(),
        ));
    }
    let (p, q) = pq;
    if p == 0 || q == 0 {
        return Err(Error::Domain("p and q must be positive".into()));
    }
    let k2 = par.k_sq();
    let (p, q) = (p as f64, q as f64);
    let dp = 1.0 + k2 * p * p;
    let dq = 1.0 + k2 * q * q;
    let lead = par.kappa * p * q * dp * dq / (p * dp + q * dq);
    Ok(lead * ((p + q) / (1.0 + k2) - (p * dq + q * dp) / (dp * dq)))
}

/// Spectral gap radius `r*(n)`.
pub fn r_star(n: u32, p: &PhysicalParams) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("r_star needs n >= 2, got {n}")));
    }
    let k2 = p.k_sq();
    let n = n as f64;
    Ok(p.kappa * (1.0 / (1.0 + k2) - 1.0 / (1.0 + k2 * n * n)))
}

/// Frequency at which `omega_{-1}` and `omega_0` meet when `ell^2 = ell_c^2`.
pub fn omega_star(xi: f64, p: &PhysicalParams) -> Result<f64> {
    check_xi(xi)?;
    let k2 = p.k_sq();
    Ok(2.0 * p.kappa * k2 * xi * (1.0 - xi) * (1.0 - 2.0 * xi)
        / ((1.0 + k2) * collision_denominator(xi, k2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(b: f64, kappa: f64, k: f64, sigma: Sigma) -> PhysicalParams {
        PhysicalParams::new(b, kappa, k, sigma).unwrap()
    }

    fn spec(ell_sq: f64, xi: f64) -> BlochSpec {
        BlochSpec::from_ell_sq(ell_sq, xi, 32).unwrap()
    }

    #[test]
    fn omega_examples() {
        let p = params(2.0, 2.0, 1.0, Sigma::MinusOne);
        let s = BlochSpec::new(0.8, 0.0, 32).unwrap();
        assert_relative_eq!(omega_symbol(1, &s, &p).unwrap(), 0.32, max_relative = 1e-14);
        assert_eq!(omega_symbol(1, &s.with_ell_sq(0.0), &p).unwrap(), 0.0);
        assert!(omega_symbol(0, &s, &p).is_err());
        // 0.3 * (1 - 2/1.09 + 0.16/(0.09 * 1.09))
        let s = BlochSpec::new(0.4, 0.3, 32).unwrap();
        let direct = 0.3 * (1.0 - 2.0 / 1.09 + 0.16 / (0.09 * 1.09));
        assert_relative_eq!(omega_symbol(0, &s, &p).unwrap(), direct, max_relative = 1e-14);
        assert!((direct - 0.23884).abs() < 1e-5);
    }

    #[test]
    fn krein_examples() {
        let p = params(2.0, 2.0, 1.0, Sigma::MinusOne);
        let (mu, kr) = mu_and_krein(2, &spec(0.36, 0.0), &p).unwrap();
        // kappa k^2 (n^2 - 1)/(1 + k^2) = 3 at these values
        assert_relative_eq!(mu, 3.0 + 0.36 / 4.0, max_relative = 1e-15);
        assert_eq!(kr, 1);

        for &xi in &[0.1, 0.25, 0.3, 0.5] {
            let (_, lm, _) = ell_thresholds(xi, &p).unwrap();
            let (mu, kr) = mu_and_krein(-1, &spec(lm, xi), &p).unwrap();
            assert_eq!(kr, 0, "xi {xi} mu {mu}");
        }
        let (mu, kr) = mu_and_krein(0, &spec(3.0 / 16.0, 0.5), &p).unwrap();
        assert!(mu.abs() < 1e-15);
        assert_eq!(kr, 0);
    }

    #[test]
    fn ell_a_examples() {
        let p = params(2.0, 2.0, 1.0, Sigma::MinusOne);
        assert_relative_eq!(ell_a_sq(&p, 0.05), 3.0 * 0.0025, max_relative = 1e-14);
        let p = PhysicalParams::with_k_sq(4.0, 3.0, 5.0, Sigma::MinusOne).unwrap();
        assert!(ell_a_sq(&p, 0.1).abs() < 1e-15);
    }

    #[test]
    fn periodic_examples() {
        let v = classify_periodic(&params(2.0, 2.0, 1.0, Sigma::MinusOne), 0.05);
        assert_eq!(v.kind, VerdictKind::UnstableRealPair);
        assert!(v.case_label.contains("-1<b<=7/2"));
        let p = PhysicalParams::with_k_sq(4.0, 2.0, 6.0, Sigma::MinusOne).unwrap();
        let v = classify_periodic(&p, 0.05);
        assert_eq!(v.kind, VerdictKind::StableImaginary);
        assert!(v.case_label.contains("b>7/2, k^2>(b+1)/(2b-7)"));
        let v = classify_periodic(&p.with_sigma(Sigma::PlusOne), 0.05);
        assert_eq!(v.kind, VerdictKind::UnstableRealPair);
        let p = PhysicalParams::with_k_sq(4.0, 2.0, 5.0, Sigma::MinusOne).unwrap();
        assert_eq!(classify_periodic(&p, 0.05).case_label, BOUNDARY);
    }

    #[test]
    fn threshold_examples() {
        let p = params(2.0, 2.0, 1.0, Sigma::MinusOne);
        let (l0, lm, lc) = ell_thresholds(0.5, &p).unwrap();
        for v in [l0, lm, lc] {
            assert_relative_eq!(v, 3.0 / 16.0, max_relative = 1e-14);
        }
        let (l0, lm, lc) = ell_thresholds(0.3, &p).unwrap();
        assert_relative_eq!(l0, 0.0819, max_relative = 1e-13);
        assert_relative_eq!(lm, 0.2499, max_relative = 1e-13);
        assert!((lc - 0.12200).abs() < 5e-5);
        assert!(l0 < lc && lc < lm);
        assert!(ell_thresholds(0.0, &p).is_err());
        assert!(ell_thresholds(-0.2, &p).is_err());
    }

    #[test]
    fn b_examples() {
        let p = params(2.0, 2.0, 1.0, Sigma::MinusOne);
        assert_relative_eq!(b_factor(0.3, &p).unwrap(), 3.79 * 3.79, max_relative = 1e-14);
        assert_relative_eq!(b_factor(0.5, &p).unwrap(), 14.0625, max_relative = 1e-15);
        let b = -3.0;
        let k2 = -4.0 * (1.0 + b) / (7.0 - 2.0 * b);
        let p = PhysicalParams::with_k_sq(b, 2.0, k2, Sigma::MinusOne).unwrap();
        assert!(b_factor(0.5, &p).unwrap().abs() < 1e-14);
        assert_eq!(classify_bloch(0.5, &p).unwrap().kind, VerdictKind::Uncertified);
    }

    #[test]
    fn epsilon_examples() {
        let p = params(2.0, 2.0, 1.0, Sigma::MinusOne);
        assert_relative_eq!(epsilon_a(0.5, &p, 0.02).unwrap(), 15.0 / 32.0 * 0.02, max_relative = 1e-14);
        let e = epsilon_a(0.3, &p, 1.0).unwrap();
        assert!((e - 0.3393).abs() < 1e-4, "{e}");
        assert_eq!(epsilon_a(0.3, &p, 0.0).unwrap(), 0.0);
        let p = PhysicalParams::with_k_sq(-2.0, 2.0, 0.4, Sigma::MinusOne).unwrap();
        assert!(epsilon_a(0.3, &p, 0.02).is_err());
    }

    #[test]
    fn bloch_examples() {
        for k in [0.3, 1.0, 3.0] {
            for xi in [0.1, 0.3, 0.5] {
                let v = classify_bloch(xi, &params(2.0, 2.0, k, Sigma::MinusOne)).unwrap();
                assert_eq!(v.kind, VerdictKind::UnstableComplexPair);
                assert!(v.case_label.starts_with("bloch.b_pos.1"));
            }
        }
        // k^2 = 2 sits inside the stable window at b = -2, xi = 0.3.
        let b = -2.0;
        let xi = 0.3;
        let q1: f64 = xi * xi + (1.0 - b) * xi + 1.0;
        let q2: f64 = xi * xi + (b - 3.0) * xi + (3.0 - b);
        let lo = -(1.0 + b) / q2;
        let hi = -(1.0 + b) / q1;
        assert!(lo < 0.4 && 0.4 < hi);
        let p = PhysicalParams::with_k_sq(b, 2.0, 0.4, Sigma::MinusOne).unwrap();
        let v = classify_bloch(xi, &p).unwrap();
        assert_eq!(v.kind, VerdictKind::StableImaginary);
        assert!(b_factor(xi, &p).unwrap() < 0.0);
        let p = PhysicalParams::with_k_sq(b, 2.0, 2.0, Sigma::MinusOne).unwrap();
        assert_eq!(classify_bloch(xi, &p).unwrap().kind, VerdictKind::UnstableComplexPair);

        let p = PhysicalParams::with_k_sq(4.0, 2.0, 4.0, Sigma::MinusOne).unwrap();
        let v = classify_bloch(0.25, &p).unwrap();
        assert!(v.case_label.starts_with("bloch.b_pos.4"));
        assert!(v.witness.unwrap() > 0.0);

        let v = classify_bloch(0.3, &params(2.0, 2.0, 1.0, Sigma::PlusOne)).unwrap();
        assert_eq!(v.kind, VerdictKind::Uncertified);
    }

    #[test]
    fn collision_examples() {
        let p = params(2.0, 2.0, 1.0, Sigma::MinusOne);
        let (_, _, lc) = ell_thresholds(0.3, &p).unwrap();
        let (_, h) = collision_coeffs(0, CollisionRef::MinusOne, 0.3, &p);
        let f = collision_f(0, CollisionRef::MinusOne, lc, 0.3, &p).unwrap();
        assert!((f / h).abs() < 1e-14);
        assert_relative_eq!(
            collision_root(0, CollisionRef::MinusOne, 0.3, &p).unwrap().unwrap(),
            lc,
            max_relative = 1e-13
        );
        // F_2 against -1 has no root at positive ell^2.
        for &xi in &[0.05, 0.3, 0.5] {
            for i in 0..50 {
                let l = 0.02 * i as f64;
                assert!(collision_f(2, CollisionRef::MinusOne, l, xi, &p).unwrap() > 0.0);
            }
        }
        // F~_{-2} < 0 below ell_0^2 when k^2 xi (2 - xi) <= 3.
        let xi = 0.3;
        let (l0, _, _) = ell_thresholds(xi, &p).unwrap();
        for i in 0..20 {
            let l = l0 * i as f64 / 20.0;
            assert!(collision_f(-2, CollisionRef::Zero, l, xi, &p).unwrap() < 0.0);
        }
    }

    #[test]
    fn collision_matches_omega_difference() {
        let p = params(3.0, 1.5, 0.8, Sigma::MinusOne);
        let xi = 0.37;
        let l = 0.21;
        let sp = spec(l, xi);
        for n in -4..=4 {
            let direct = omega_symbol(n, &sp, &p).unwrap() - omega_symbol(-1, &sp, &p).unwrap();
            let f = collision_f(n, CollisionRef::MinusOne, l, xi, &p).unwrap();
            assert!((direct - f).abs() < 1e-14, "n {n}");
        }
    }

    #[test]
    fn guard() {
        let xi = 0.3;
        assert!(longwave_guard(xi, &params(2.0, 2.0, 1.0, Sigma::MinusOne)));
        assert!(!longwave_guard(xi, &params(2.0, 2.0, 2.0, Sigma::MinusOne)));
        let p = PhysicalParams::with_k_sq(2.0, 2.0, 3.0, Sigma::MinusOne).unwrap();
        // sqrt(3)^2 rounds to 2.9999999999999996
        assert!(longwave_guard(xi, &p));
    }

    /// Brute-force root of `omega_p = omega_{-q}` in `ell^2` by bisection.
    fn pq_oracle(p_: i64, q: i64, par: &PhysicalParams) -> f64 {
        let f = |l: f64| omega_raw(p_ as f64, l, par) - omega_raw(-q as f64, l, par);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while f(lo).signum() == f(hi).signum() {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn pq_examples() {
        let p = params(2.0, 2.0, 1.0, Sigma::PlusOne);
        assert!(collision_ell_pq((1, 1), &p).unwrap().abs() < 1e-15);
        let v = collision_ell_pq((2, 1), &p).unwrap();
        assert_relative_eq!(v, pq_oracle(2, 1, &p), max_relative = 1e-12);
        for n in 2..6u32 {
            let v = collision_ell_pq((n, n), &p).unwrap();
            let o = pq_oracle(n as i64, n as i64, &p);
            assert!(o > 0.0);
            assert_relative_eq!(v, o, max_relative = 1e-12);
        }
        assert!(collision_ell_pq((2, 1), &p.with_sigma(Sigma::MinusOne)).is_err());
    }

    #[test]
    fn star_examples() {
        let p = params(2.0, 2.0, 1.0, Sigma::MinusOne);
        assert_relative_eq!(r_star(2, &p).unwrap(), 0.6, max_relative = 1e-15);
        assert!(r_star(1, &p).is_err());
        assert_eq!(omega_star(0.5, &p).unwrap(), 0.0);
        assert_relative_eq!(omega_star(0.3, &p).unwrap(), 0.336 / 2.74, max_relative = 1e-14);
    }

    #[test]
    fn omega_star_is_collision_frequency() {
        let p = params(2.5, 1.3, 1.2, Sigma::MinusOne);
        for &xi in &[0.1, 0.3, 0.45] {
            let (_, _, lc) = ell_thresholds(xi, &p).unwrap();
            let sp = spec(lc, xi);
            let w0 = omega_symbol(0, &sp, &p).unwrap();
            let wm = omega_symbol(-1, &sp, &p).unwrap();
            let ws = omega_star(xi, &p).unwrap();
            assert_relative_eq!(w0, ws, max_relative = 1e-12);
            assert_relative_eq!(wm, ws, max_relative = 1e-12);
        }
    }
}
