//! Browser bindings. Each exported function returns a JSON (or SVG) string so the page
//! needs no generated type glue beyond `wasm-bindgen`'s string passing.
//!
//! The `*_impl` functions carry the logic and are plain Rust, so they are tested natively.

use bkp_core::criteria::{self, fold_xi};
use bkp_core::orchestrate::{region_map, region_svg, to_json, RegionGrid, RegionMode};
use bkp_core::reduced::{lambda_bloch, lambda_periodic};
use bkp_core::spectrum::{self, classify_default};
use bkp_core::wave::{Profile, Wave, WaveKind, DEFAULT_NEWTON_TOL};
use bkp_core::{BlochSpec, PhysicalParams, Result, Sigma};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest truncation the page may request; keeps a single click well under a second.
pub const MAX_MODES: usize = 48;

fn params(b: f64, kappa: f64, k_sq: f64, sigma: i32) -> Result<PhysicalParams> {
    let sigma = if sigma >= 0 { Sigma::PlusOne } else { Sigma::MinusOne };
    PhysicalParams::with_k_sq(b, kappa, k_sq, sigma)
}

#[allow(clippy::too_many_arguments)]
pub fn spectrum_impl(b: f64, kappa: f64, k_sq: f64, sigma: i32, a: f64, ell: f64, xi: f64, n_modes: usize) -> Result<String> {
    let p = params(b, kappa, k_sq, sigma)?;
    let n_modes = n_modes.min(MAX_MODES);
    let spec = BlochSpec::new(ell, xi, n_modes)?;
    let w = Wave::build(&p, a, WaveKind::Newton, n_modes, DEFAULT_NEWTON_TOL)?;
    let s = spectrum::spectrum(&w, &spec, &p)?;
    to_json(&json!({
        "eigenvalues": s.eigenvalues,
        "max_real": s.max_real,
        "symmetry_defect": s.symmetry_defect,
        "verdict": classify_default(&s),
        "speed": w.speed(),
        "n_modes": n_modes,
    }))
}

/// Closed-form quantities at one parameter point, no eigenvalue solve.
pub fn predictions_impl(b: f64, kappa: f64, k_sq: f64, sigma: i32, a: f64, xi: f64) -> Result<String> {
    let p = params(b, kappa, k_sq, sigma)?;
    let la = criteria::ell_a_sq(&p, a);
    let periodic = json!({
        "ell_a_sq": la,
        "verdict": criteria::classify_periodic(&p, a),
        "reduced_at_half": lambda_periodic(&p, a, 0.5 * la.abs()),
    });
    let (xf, _) = fold_xi(xi);
    let bloch = match criteria::ell_thresholds(xf, &p) {
        Ok((l0, lm, lc)) => json!({
            "xi": xf,
            "ell_0_sq": l0,
            "ell_minus_sq": lm,
            "ell_c_sq": lc,
            "b_factor": criteria::b_factor(xf, &p).ok(),
            "eps_a": criteria::epsilon_a(xf, &p, a).ok(),
            "omega_star": criteria::omega_star(xf, &p).ok(),
            "verdict": criteria::classify_bloch(xf, &p).ok(),
            "reduced_at_collision": lambda_bloch(&p, a, 0.0, xf).ok(),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    to_json(&json!({ "periodic": periodic, "bloch": bloch }))
}

/// Closed-form region map over `b in [-4, 6]`, `k^2 in (0, 10]`.
pub fn region_svg_impl(bloch_xi: Option<f64>, kappa: f64, sigma: i32, steps: usize) -> Result<String> {
    let sigma = if sigma >= 0 { Sigma::PlusOne } else { Sigma::MinusOne };
    let steps = steps.clamp(10, 300);
    let grid = RegionGrid { b_range: (-4.0, 6.0), b_steps: steps, k_sq_range: (0.0, 10.0), k_sq_steps: steps };
    let mode = match bloch_xi {
        Some(xi) => RegionMode::Bloch { xi: fold_xi(xi).0 },
        None => RegionMode::Periodic,
    };
    let map = region_map(&grid, kappa, sigma, mode, 0.05, 0, 0)?;
    Ok(region_svg(&map))
}

fn js_err(e: bkp_core::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn spectrum_at(b: f64, kappa: f64, k_sq: f64, sigma: i32, a: f64, ell: f64, xi: f64, n_modes: usize) -> std::result::Result<String, JsValue> {
    spectrum_impl(b, kappa, k_sq, sigma, a, ell, xi, n_modes).map_err(js_err)
}

#[wasm_bindgen]
pub fn predictions(b: f64, kappa: f64, k_sq: f64, sigma: i32, a: f64, xi: f64) -> std::result::Result<String, JsValue> {
    predictions_impl(b, kappa, k_sq, sigma, a, xi).map_err(js_err)
}

/// `xi` outside `(0, 1/2]` (for example NaN) selects the periodic map.
#[wasm_bindgen]
pub fn region_map_svg(xi: f64, kappa: f64, sigma: i32, steps: usize) -> std::result::Result<String, JsValue> {
    let bloch = (xi.abs() > 0.0 && xi.abs() <= 0.5).then_some(xi);
    region_svg_impl(bloch, kappa, sigma, steps).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_at_zero_amplitude_is_imaginary() {
        let v: serde_json::Value = serde_json::from_str(&spectrum_impl(2.0, 2.0, 1.0, -1, 0.0, 0.8, 0.0, 8).unwrap()).unwrap();
        assert_eq!(v["verdict"]["kind"], "STABLE_IMAGINARY");
        assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn modes_are_capped() {
        let v: serde_json::Value = serde_json::from_str(&spectrum_impl(2.0, 2.0, 1.0, -1, 0.0, 0.8, 0.0, 500).unwrap()).unwrap();
        assert_eq!(v["n_modes"], MAX_MODES);
    }

    #[test]
    fn bad_parameters_surface_as_errors() {
        assert!(spectrum_impl(-1.0, 2.0, 1.0, -1, 0.1, 0.8, 0.0, 8).is_err());
        assert!(predictions_impl(2.0, -2.0, 1.0, -1, 0.1, 0.3).is_err());
    }
}
