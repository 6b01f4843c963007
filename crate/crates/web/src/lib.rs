//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Every function takes plain numbers and returns a JSON string so the page
//! needs no bindings beyond `JSON.parse`.

use concalc_core::besov::{besov_norm, lp_decompose, min_grid, TrigPolynomial};
use concalc_core::calculus::{central_difference_report, hs_differentiability_report, ContractionPath};
use concalc_core::dilation::{power_dilation, unitarity_defect, verify_dilation};
use concalc_core::funcalc::AnalyticFunction;
use concalc_core::linalg::operator_norm;
use concalc_core::semispectral::{moment_residual, semispectral_from_dilation};
use concalc_core::{ComplexMatrix, Result, C64};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn complex_pairs(flat: &[f64]) -> Vec<C64> {
    flat.chunks(2)
        .map(|c| C64::new(c[0], c.get(1).copied().unwrap_or(0.0)))
        .collect()
}

fn finish(v: Result<Value>) -> std::result::Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

/// Upper-triangular 2×2 matrix `[[a, b], [0, c]]`, rescaled onto the unit ball
/// when its norm exceeds one.
fn triangular(a: C64, b: C64, c: C64) -> Result<(ComplexMatrix, f64)> {
    let m = ComplexMatrix::from_rows(&[vec![a, b], vec![C64::new(0.0, 0.0), c]])?;
    let norm = operator_norm(&m)?;
    if norm > 1.0 {
        Ok((m.scale(C64::new(1.0 / norm, 0.0)), 1.0 / norm))
    } else {
        Ok((m, 1.0))
    }
}

pub fn besov_profile_json(min_k: i32, coeffs: &[f64], s: f64, p: f64, q: f64) -> Result<Value> {
    let phi = TrigPolynomial::new(min_k as i64, complex_pairs(coeffs))?;
    let grid = min_grid(&phi);
    let norm = besov_norm(&phi, s, p, q, grid)?;
    let lp = lp_decompose(&phi);
    let pieces = |list: &[TrigPolynomial]| -> Vec<f64> { list.iter().map(|w| w.lp_norm(p, grid)).collect() };
    let samples: Vec<Value> = (0..256)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / 256.0;
            let z = phi.eval(C64::from_polar(1.0, theta));
            json!([z.re, z.im])
        })
        .collect();
    Ok(json!({
        "norm": norm,
        "grid": grid,
        "analytic": pieces(&lp.analytic_pieces),
        "antianalytic": pieces(&lp.antianalytic_pieces),
        "reconstruction_error": lp.reconstruct().max_abs_diff(&phi),
        "samples": samples,
    }))
}

/// Besov norm and Littlewood–Paley piece norms of `Σ c_j z^{min_k + j}`.
/// `coeffs` holds interleaved real and imaginary parts.
#[wasm_bindgen]
pub fn besov_profile(min_k: i32, coeffs: &[f64], s: f64, p: f64, q: f64) -> std::result::Result<String, JsError> {
    finish(besov_profile_json(min_k, coeffs, s, p, q))
}

pub fn dilation_atoms_json(a: &[f64], b: f64, c: &[f64], degree: usize) -> Result<Value> {
    let (t, scaled) = triangular(complex_pairs(a)[0], C64::new(b, 0.0), complex_pairs(c)[0])?;
    let dilation = power_dilation(&t, degree)?;
    let measure = semispectral_from_dilation(&dilation)?;
    let atoms: Vec<Value> = measure
        .atoms()
        .iter()
        .map(|atom| json!({"re": atom.point.re, "im": atom.point.im, "mass": atom.weight.trace().re}))
        .collect();
    Ok(json!({
        "scaled_by": scaled,
        "dilation_dim": dilation.unitary().rows(),
        "fidelity": verify_dilation(&dilation, &t)?,
        "unitarity": unitarity_defect(&dilation),
        "moment_residual": moment_residual(&measure, &t, degree)?,
        "atoms": atoms,
    }))
}

/// Degree-N power dilation of `[[a, b], [0, c]]` and the atoms of its
/// semi-spectral measure. `a` and `c` are `[re, im]`.
#[wasm_bindgen]
pub fn dilation_atoms(a: &[f64], b: f64, c: &[f64], degree: usize) -> std::result::Result<String, JsError> {
    finish(dilation_atoms_json(a, b, c, degree))
}

pub fn derivative_convergence_json(coeffs: &[f64], theta: f64, radius: f64) -> Result<Value> {
    let phi = AnalyticFunction::new(complex_pairs(coeffs), "demo");
    let (t, _) = triangular(C64::new(0.4, 0.1), C64::new(0.5, 0.0), C64::new(-0.3, 0.2))?;
    let r_corner = C64::from_polar(radius, theta);
    let (r, _) = triangular(r_corner, C64::new(-0.2, 0.1), r_corner.conj())?;
    let path = ContractionPath::new(t, r)?;
    let study = |rep: concalc_core::calculus::DerivativeReport| {
        json!({
            "steps": rep.steps,
            "residuals": rep.step_residuals,
            "order": rep.observed_order,
        })
    };
    Ok(json!({
        "first": study(central_difference_report(&phi, &path, 0.5, 1)?),
        "second": study(central_difference_report(&phi, &path, 0.5, 2)?),
        "hilbert_schmidt": study(hs_differentiability_report(&phi, &path)?),
    }))
}

/// Finite-difference convergence of `t ↦ φ((1−t)T + tR)` at `t = ½`, with
/// the corner entries of `R` placed at `radius·e^{iθ}`.
#[wasm_bindgen]
pub fn derivative_convergence(coeffs: &[f64], theta: f64, radius: f64) -> std::result::Result<String, JsError> {
    finish(derivative_convergence_json(coeffs, theta, radius))
}
