//! Perturbation identities and operator derivatives along affine paths.
//!
//! All formulas are exact for polynomials. Non-polynomial functions enter
//! through Cesàro truncations, see [`cesaro_truncation`].

use serde::{Deserialize, Serialize};

use crate::divdiff::{projective_bound, tensor_expansion};
use crate::error::{Error, Result};
use crate::funcalc::{circle_point, AnalyticFunction};
use crate::linalg::{ensure_contraction, frobenius, spectral_norm};
use crate::matrix::ComplexMatrix;
use crate::opint::{doi_spectral, moi_tensor, DiagonalPolicy, DilationSpectrum, DividedDifferenceSymbol};

/// Degree limit of [`polynomial_taylor_oracle`].
pub const ORACLE_MAX_DEGREE: usize = 12;
/// Difference-quotient steps of [`hs_differentiability_report`].
pub const HS_STEPS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
/// Central-difference steps for first derivatives.
pub const FD1_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Central-difference steps for second derivatives.
pub const FD2_STEPS: [f64; 3] = [4e-2, 2e-2, 1e-2];

/// `T_t = (1 − t)T + tR`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionPath {
    t: ComplexMatrix,
    r: ComplexMatrix,
}

impl ContractionPath {
    pub fn new(t: ComplexMatrix, r: ComplexMatrix) -> Result<Self> {
        ensure_contraction(&t, "T")?;
        ensure_contraction(&r, "R")?;
        if t.rows() != r.rows() {
            return Err(Error::input(format!("T is {0}x{0} but R is {1}x{1}", t.rows(), r.rows())));
        }
        Ok(ContractionPath { t, r })
    }

    pub fn start(&self) -> &ComplexMatrix {
        &self.t
    }

    pub fn end(&self) -> &ComplexMatrix {
        &self.r
    }

    pub fn dim(&self) -> usize {
        self.t.rows()
    }

    /// Points with `t ∉ [0, 1]` are allowed but need not be contractions.
    pub fn at(&self, t: f64) -> ComplexMatrix {
        self.t.scale_real(1.0 - t) + self.r.scale_real(t)
    }

    /// `R − T`.
    pub fn direction(&self) -> ComplexMatrix {
        &self.r - &self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormUsed {
    Operator,
    HilbertSchmidt,
}

impl NormUsed {
    pub fn of(self, m: &ComplexMatrix) -> f64 {
        match self {
            NormUsed::Operator => spectral_norm(m),
            NormUsed::HilbertSchmidt => frobenius(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub order: usize,
    pub formula_value: ComplexMatrix,
    pub oracle_value: ComplexMatrix,
    pub residual: f64,
    pub norm_used: NormUsed,
    /// Step sizes of a convergence study, largest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub step_residuals: Vec<f64>,
    /// Least-squares slope of `log residual` against `log step`; `None` when
    /// every residual is at rounding level.
    #[serde(default)]
    pub observed_order: Option<f64>,
    /// A priori bound on the last residual, when one is available.
    #[serde(default)]
    pub bound: Option<f64>,
    /// Cesàro degree when the function was truncated.
    #[serde(default)]
    pub truncation_degree: Option<usize>,
}

impl DerivativeReport {
    fn compare(order: usize, formula_value: ComplexMatrix, oracle_value: ComplexMatrix, norm: NormUsed) -> Self {
        let residual = norm.of(&(&formula_value - &oracle_value));
        DerivativeReport {
            order,
            formula_value,
            oracle_value,
            residual,
            norm_used: norm,
            steps: Vec::new(),
            step_residuals: Vec::new(),
            observed_order: None,
            bound: None,
            truncation_degree: None,
        }
    }

    /// Observed order is at least `min_order`, or the study was exact.
    pub fn converges(&self, min_order: f64) -> bool {
        self.observed_order.is_none_or(|p| p >= min_order)
    }
}

fn ensure_polynomial(phi: &AnalyticFunction) -> Result<()> {
    if !phi.is_finite() {
        return Err(Error::input("function has non-finite coefficients"));
    }
    Ok(())
}

/// `‖φ(T) − φ(R) − DOI(𝔇φ; E_T, T − R, E_R)‖` through the dilation route.
pub fn increment_formula_residual(phi: &AnalyticFunction, path: &ContractionPath, policy: DiagonalPolicy) -> Result<f64> {
    ensure_polynomial(phi)?;
    let degree = phi.degree() + 1;
    let left = DilationSpectrum::new(&path.t, degree)?;
    let right = DilationSpectrum::new(&path.r, degree)?;
    increment_residual_with(phi, path, policy, &left, &right)
}

/// [`increment_formula_residual`] with precomputed spectra of degree above `deg φ`.
pub fn increment_residual_with(
    phi: &AnalyticFunction,
    path: &ContractionPath,
    policy: DiagonalPolicy,
    left: &DilationSpectrum,
    right: &DilationSpectrum,
) -> Result<f64> {
    let sym = DividedDifferenceSymbol::new(phi, policy);
    let doi = doi_spectral(|z, w| sym.eval(z, w), left, &(&path.t - &path.r), right)?;
    let lhs = phi.eval_matrix(&path.t) - phi.eval_matrix(&path.r);
    Ok(spectral_norm(&(lhs - doi.value)))
}

/// `‖φ(T)Q − Qφ(T) − DOI(𝔇φ; E_T, TQ − QT, E_T)‖`.
pub fn commutator_formula_residual(
    phi: &AnalyticFunction,
    t: &ComplexMatrix,
    q: &ComplexMatrix,
    policy: DiagonalPolicy,
) -> Result<f64> {
    ensure_polynomial(phi)?;
    ensure_contraction(t, "T")?;
    if q.rows() != t.rows() || q.cols() != t.rows() {
        return Err(Error::input("Q must have the shape of T"));
    }
    let spectrum = DilationSpectrum::new(t, phi.degree() + 1)?;
    let sym = DividedDifferenceSymbol::new(phi, policy);
    let commutator = t * q - q * t;
    let doi = doi_spectral(|z, w| sym.eval(z, w), &spectrum, &commutator, &spectrum)?;
    let ft = phi.eval_matrix(t);
    let lhs = &ft * q - q * &ft;
    Ok(spectral_norm(&(lhs - doi.value)))
}

/// `n!·MOI(𝔇ⁿφ; T_t, …, T_t; Δ, …, Δ)` with `Δ = R − T`.
pub fn nth_derivative(phi: &AnalyticFunction, path: &ContractionPath, t: f64, n: usize) -> Result<ComplexMatrix> {
    ensure_polynomial(phi)?;
    if n == 0 {
        return Err(Error::parameter("derivative order must be at least 1"));
    }
    let tt = path.at(t);
    let delta = path.direction();
    let te = tensor_expansion(phi, n);
    if te.is_empty() {
        return Ok(ComplexMatrix::zeros(path.dim(), path.dim()));
    }
    let ts = vec![&tt; n + 1];
    let qs = vec![&delta; n];
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    Ok(moi_tensor(&te, &ts, &qs)?.scale_real(factorial))
}

/// `DOI(𝔇φ; E_{T_t}, R − T, E_{T_t})` through the tensor route.
pub fn derivative(phi: &AnalyticFunction, path: &ContractionPath, t: f64) -> Result<ComplexMatrix> {
    nth_derivative(phi, path, t, 1)
}

/// `2·MOI(𝔇²φ; T_t, R − T, T_t, R − T, T_t)`.
pub fn second_derivative(phi: &AnalyticFunction, path: &ContractionPath, t: f64) -> Result<ComplexMatrix> {
    nth_derivative(phi, path, t, 2)
}

/// The first derivative through the dilation route, as a cross-check.
pub fn derivative_by_dilation(phi: &AnalyticFunction, path: &ContractionPath, t: f64) -> Result<ComplexMatrix> {
    ensure_polynomial(phi)?;
    let tt = path.at(t);
    let spectrum = DilationSpectrum::new(&tt, phi.degree() + 1)?;
    let sym = DividedDifferenceSymbol::new(phi, DiagonalPolicy::Derivative);
    Ok(doi_spectral(|z, w| sym.eval(z, w), &spectrum, &path.direction(), &spectrum)?.value)
}

/// `n!` times the coefficient of `sⁿ` in `φ(T_t + sΔ)`, by expanding every
/// monomial into words in `T_t` and `Δ`.
pub fn polynomial_taylor_oracle(phi: &AnalyticFunction, path: &ContractionPath, t: f64, n: usize) -> Result<ComplexMatrix> {
    ensure_polynomial(phi)?;
    if phi.degree() > ORACLE_MAX_DEGREE {
        return Err(Error::parameter(format!(
            "word expansion is limited to degree {ORACLE_MAX_DEGREE}, got {}",
            phi.degree()
        )));
    }
    let a = path.at(t);
    let delta = path.direction();
    let d = path.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for (m, &c) in phi.coefficients().iter().enumerate() {
        if m < n || c == crate::matrix::ZERO {
            continue;
        }
        for word in 0u32..(1u32 << m) {
            if word.count_ones() as usize != n {
                continue;
            }
            let mut prod = ComplexMatrix::identity(d);
            for bit in 0..m {
                prod = if word >> bit & 1 == 1 { &prod * &delta } else { &prod * &a };
            }
            acc = acc + prod.scale(c);
        }
    }
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    Ok(acc.scale_real(factorial))
}

/// `sup |φ′|` on the circle.
pub fn derivative_sup(phi: &AnalyticFunction) -> f64 {
    phi.derivative().circle_sup()
}

/// `‖φ(T) − φ(R)‖_{S2} ≤ ‖φ′‖_∞ ‖T − R‖_{S2}` up to `1e-8`.
pub fn hs_lipschitz_check(phi: &AnalyticFunction, path: &ContractionPath) -> Result<bool> {
    Ok(hs_lipschitz_excess(phi, path)? <= 1e-8)
}

/// Left side minus right side of [`hs_lipschitz_check`].
pub fn hs_lipschitz_excess(phi: &AnalyticFunction, path: &ContractionPath) -> Result<f64> {
    ensure_polynomial(phi)?;
    let lhs = frobenius(&(phi.eval_matrix(&path.t) - phi.eval_matrix(&path.r)));
    Ok(lhs - derivative_sup(phi) * frobenius(&path.direction()))
}

/// `‖φ(T)Q − Qφ(T)‖_{S2} ≤ ‖φ′‖_∞ ‖TQ − QT‖_{S2}` up to `1e-8`.
pub fn hs_commutator_check(phi: &AnalyticFunction, t: &ComplexMatrix, q: &ComplexMatrix) -> Result<bool> {
    Ok(hs_commutator_excess(phi, t, q)? <= 1e-8)
}

pub fn hs_commutator_excess(phi: &AnalyticFunction, t: &ComplexMatrix, q: &ComplexMatrix) -> Result<f64> {
    ensure_polynomial(phi)?;
    ensure_contraction(t, "T")?;
    if q.rows() != t.rows() || q.cols() != t.rows() {
        return Err(Error::input("Q must have the shape of T"));
    }
    let ft = phi.eval_matrix(t);
    let lhs = frobenius(&(&ft * q - q * &ft));
    Ok(lhs - derivative_sup(phi) * frobenius(&(t * q - q * t)))
}

/// Slope of the least-squares line through `(log x, log y)`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Keeps the steps whose residual is clearly above the rounding floor and
/// fits the order on those.
fn fit_order(steps: &[f64], residuals: &[f64], floor: impl Fn(f64) -> f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = steps
        .iter()
        .zip(residuals)
        .filter(|(&h, &r)| r > floor(h))
        .map(|(&h, &r)| (h, r))
        .unzip();
    log_log_slope(&xs, &ys)
}

fn scale_of(phi: &AnalyticFunction) -> f64 {
    1.0 + phi.coefficients().iter().map(|c| c.norm()).sum::<f64>()
}

/// Hilbert–Schmidt difference quotients `(φ(T_s) − φ(T))/s` against the
/// derivative at `t = 0`.
pub fn hs_differentiability_report(phi: &AnalyticFunction, path: &ContractionPath) -> Result<DerivativeReport> {
    let exact = derivative(phi, path, 0.0)?;
    let f0 = phi.eval_matrix(&path.t);
    let mut residuals = Vec::with_capacity(HS_STEPS.len());
    let mut last = None;
    for &s in &HS_STEPS {
        let quotient = (phi.eval_matrix(&path.at(s)) - &f0).scale_real(1.0 / s);
        residuals.push(frobenius(&(&quotient - &exact)));
        last = Some(quotient);
    }
    let delta = path.direction();
    let d2 = projective_bound(&tensor_expansion(phi, 2));
    let s_last = HS_STEPS[HS_STEPS.len() - 1];
    let bound = s_last * d2 * spectral_norm(&delta) * frobenius(&delta);
    let scale = scale_of(phi) * (1.0 + frobenius(&delta));
    let mut report = DerivativeReport::compare(1, last.expect("steps"), exact, NormUsed::HilbertSchmidt);
    report.observed_order = fit_order(&HS_STEPS, &residuals, |h| 1e3 * f64::EPSILON * scale / h);
    report.steps = HS_STEPS.to_vec();
    report.step_residuals = residuals;
    report.bound = Some(bound);
    Ok(report)
}

/// Same as [`hs_differentiability_report`] for the Cesàro mean of degree `n`.
pub fn hs_differentiability_report_cesaro(
    phi: &AnalyticFunction,
    path: &ContractionPath,
    n: usize,
) -> Result<DerivativeReport> {
    let mut report = hs_differentiability_report(&crate::funcalc::cesaro_mean(phi, n), path)?;
    report.truncation_degree = Some(n);
    Ok(report)
}

/// Whether a report from [`hs_differentiability_report`] meets its contract:
/// residuals decrease down to rounding level, the last one is within ten
/// times the bound, and the fitted order reaches `min_order`.
pub fn hs_report_passes(report: &DerivativeReport, min_order: f64) -> bool {
    let floor = 1e-9 * (1.0 + frobenius(&report.oracle_value));
    let decreasing = report
        .step_residuals
        .windows(2)
        .all(|w| w[1] <= w[0] || w[1] <= floor);
    let last = report.step_residuals.last().copied().unwrap_or(0.0);
    let bounded = report.bound.is_none_or(|b| last <= 10.0 * b + floor);
    decreasing && bounded && report.converges(min_order)
}

/// Central differences of order 1 or 2 against the tensor formula at `t`.
pub fn central_difference_report(
    phi: &AnalyticFunction,
    path: &ContractionPath,
    t: f64,
    order: usize,
) -> Result<DerivativeReport> {
    let exact = match order {
        1 => derivative(phi, path, t)?,
        2 => second_derivative(phi, path, t)?,
        _ => return Err(Error::parameter("central differences are implemented for orders 1 and 2")),
    };
    let steps: &[f64] = if order == 1 { &FD1_STEPS } else { &FD2_STEPS };
    let f = |s: f64| phi.eval_matrix(&path.at(s));
    let mut residuals = Vec::with_capacity(steps.len());
    let mut last = None;
    for &h in steps {
        let approx = if order == 1 {
            (f(t + h) - f(t - h)).scale_real(0.5 / h)
        } else {
            (f(t + h) - f(t).scale_real(2.0) + f(t - h)).scale_real(1.0 / (h * h))
        };
        residuals.push(spectral_norm(&(&approx - &exact)));
        last = Some(approx);
    }
    let scale = scale_of(phi) * (1.0 + spectral_norm(&path.direction())).powi(order as i32);
    let mut report = DerivativeReport::compare(order, last.expect("steps"), exact, NormUsed::Operator);
    report.observed_order = fit_order(steps, &residuals, |h| 1e3 * f64::EPSILON * scale / h.powi(order as i32));
    report.steps = steps.to_vec();
    report.step_residuals = residuals;
    Ok(report)
}

/// Smallest Cesàro degree (searched by doubling up to `max_degree`) whose
/// mean is within `tol` of `φ` on a circle grid.
pub fn cesaro_truncation(phi: &AnalyticFunction, tol: f64, max_degree: usize) -> Option<usize> {
    let grid = (crate::funcalc::GRID_OVERSAMPLING * (phi.degree() + 1)).max(256);
    let values: Vec<_> = (0..grid).map(|j| phi.eval(circle_point(j, grid))).collect();
    let mut n = 1;
    while n <= max_degree {
        let s = crate::funcalc::cesaro_mean(phi, n);
        let gap = (0..grid)
            .map(|j| (s.eval(circle_point(j, grid)) - values[j]).norm())
            .fold(0.0, f64::max);
        if gap <= tol {
            return Some(n);
        }
        n *= 2;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;
    use crate::sampling::{any_contraction, gaussian_matrix, random_contraction, random_polynomial, rng_for, ContractionMode};
    use rand::Rng;

    fn scalar(x: f64) -> ComplexMatrix {
        ComplexMatrix::diag_real(&[x])
    }

    fn random_path(rng: &mut impl Rng, d: usize) -> ContractionPath {
        ContractionPath::new(any_contraction(rng, d), any_contraction(rng, d)).unwrap()
    }

    #[test]
    fn path_basics() {
        let p = ContractionPath::new(scalar(0.2), scalar(0.6)).unwrap();
        assert!((p.at(0.5)[(0, 0)].re - 0.4).abs() < 1e-15);
        assert!((p.direction()[(0, 0)].re - 0.4).abs() < 1e-15);
        assert!(ContractionPath::new(scalar(1.5), scalar(0.0)).is_err());
        assert!(ContractionPath::new(scalar(0.5), ComplexMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn convex_path_stays_contractive() {
        let mut rng = rng_for(1, &[]);
        for _ in 0..50 {
            let d = rng.gen_range(1..=5);
            let p = random_path(&mut rng, d);
            for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
                assert!(spectral_norm(&p.at(t)) <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn increment_examples() {
        let p = ContractionPath::new(scalar(0.3), scalar(0.7)).unwrap();
        let policy = DiagonalPolicy::Derivative;
        assert!(increment_formula_residual(&AnalyticFunction::monomial(1), &p, policy).unwrap() < 1e-12);
        assert!(increment_formula_residual(&AnalyticFunction::monomial(2), &p, policy).unwrap() < 1e-12);
    }

    #[test]
    fn real_scalars_share_the_points_plus_minus_one() {
        // both dilations have eigenvalues ±1, so the zero diagonal drops mass
        let p = ContractionPath::new(scalar(0.3), scalar(0.7)).unwrap();
        let r = increment_formula_residual(&AnalyticFunction::monomial(2), &p, DiagonalPolicy::Zero).unwrap();
        assert!(r > 1e-3);
        let q = ContractionPath::new(scalar(0.3), ComplexMatrix::scalar(C64::new(0.0, 0.7))).unwrap();
        let r = increment_formula_residual(&AnalyticFunction::monomial(2), &q, DiagonalPolicy::Zero).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn increment_random_both_policies() {
        let mut rng = rng_for(2, &[]);
        for _ in 0..40 {
            let d = rng.gen_range(1..=5);
            let deg = rng.gen_range(0..=8);
            let phi = random_polynomial(&mut rng, deg);
            let p = random_path(&mut rng, d);
            for policy in DiagonalPolicy::ALL {
                let r = increment_formula_residual(&phi, &p, policy).unwrap();
                assert!(r < 1e-8, "{policy:?}: {r}");
            }
        }
    }

    #[test]
    fn commutator_examples() {
        let mut rng = rng_for(3, &[]);
        let t = any_contraction(&mut rng, 3);
        let q = gaussian_matrix(&mut rng, 3, 3);
        let phi = random_polynomial(&mut rng, 5);
        let pol = DiagonalPolicy::Derivative;
        assert!(commutator_formula_residual(&AnalyticFunction::monomial(1), &t, &q, pol).unwrap() < 1e-12);
        assert!(commutator_formula_residual(&phi, &t, &ComplexMatrix::identity(3), pol).unwrap() < 1e-10);
        assert!(commutator_formula_residual(&phi, &t, &(&t * &t), pol).unwrap() < 1e-10);
    }

    #[test]
    fn commutator_random() {
        let mut rng = rng_for(4, &[]);
        for _ in 0..40 {
            let d = rng.gen_range(1..=5);
            let deg = rng.gen_range(0..=8);
            let phi = random_polynomial(&mut rng, deg);
            let t = any_contraction(&mut rng, d);
            let q = gaussian_matrix(&mut rng, d, d);
            let r = commutator_formula_residual(&phi, &t, &q, DiagonalPolicy::Derivative).unwrap();
            assert!(r < 1e-8, "{r}");
        }
    }

    #[test]
    fn zero_diagonal_commutator_needs_normal_t() {
        let mut rng = rng_for(5, &[]);
        let phi = AnalyticFunction::monomial(3);
        let q = gaussian_matrix(&mut rng, 3, 3);
        let u = random_contraction(5, 3, ContractionMode::Unitary);
        assert!(commutator_formula_residual(&phi, &u, &q, DiagonalPolicy::Zero).unwrap() < 1e-9);
        let t = random_contraction(5, 3, ContractionMode::Strict);
        assert!(commutator_formula_residual(&phi, &t, &q, DiagonalPolicy::Zero).unwrap() > 1e-3);
    }

    #[test]
    fn derivative_examples() {
        let mut rng = rng_for(6, &[]);
        let p = random_path(&mut rng, 3);
        let delta = p.direction();
        for t in [0.0, 0.3, 1.0] {
            let d1 = derivative(&AnalyticFunction::monomial(1), &p, t).unwrap();
            assert!(d1.max_abs_diff(&delta) < 1e-15);
            let tt = p.at(t);
            let d2 = derivative(&AnalyticFunction::monomial(2), &p, t).unwrap();
            assert!(d2.max_abs_diff(&(&tt * &delta + &delta * &tt)) < 1e-14);
        }
        let sd = second_derivative(&AnalyticFunction::monomial(2), &p, 0.4).unwrap();
        assert!(sd.max_abs_diff(&(&delta * &delta).scale_real(2.0)) < 1e-14);
        assert!(second_derivative(&AnalyticFunction::monomial(1), &p, 0.4).unwrap().is_zero());
        for t in [0.0, 0.5, 0.9] {
            let third = nth_derivative(&AnalyticFunction::monomial(3), &p, t, 3).unwrap();
            assert!(third.max_abs_diff(&delta.pow(3).scale_real(6.0)) < 1e-13);
        }
        assert!(nth_derivative(&AnalyticFunction::monomial(3), &p, 0.2, 4).unwrap().is_zero());
    }

    #[test]
    fn derivative_at_zero_start() {
        let mut rng = rng_for(7, &[]);
        let r = any_contraction(&mut rng, 3);
        let p = ContractionPath::new(ComplexMatrix::zeros(3, 3), r.clone()).unwrap();
        for n in 1..=5 {
            let got = nth_derivative(&AnalyticFunction::monomial(n), &p, 0.0, n).unwrap();
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            assert!(got.max_abs_diff(&r.pow(n as u32).scale_real(fact)) < 1e-12);
        }
    }

    #[test]
    fn oracle_examples() {
        let mut rng = rng_for(8, &[]);
        let p = random_path(&mut rng, 3);
        let phi = random_polynomial(&mut rng, 6);
        let t = 0.3;
        let zeroth = polynomial_taylor_oracle(&phi, &p, t, 0).unwrap();
        assert!(zeroth.max_abs_diff(&phi.eval_matrix(&p.at(t))) < 1e-12);
        let tt = p.at(t);
        let delta = p.direction();
        let first = polynomial_taylor_oracle(&AnalyticFunction::monomial(2), &p, t, 1).unwrap();
        assert!(first.max_abs_diff(&(&tt * &delta + &delta * &tt)) < 1e-14);
        assert!(polynomial_taylor_oracle(&AnalyticFunction::monomial(13), &p, t, 1).is_err());
    }

    #[test]
    fn derivatives_match_oracle() {
        let mut rng = rng_for(9, &[]);
        for _ in 0..150 {
            let d = rng.gen_range(1..=5);
            let deg = rng.gen_range(0..=8);
            let n = rng.gen_range(1..=4);
            let t = rng.gen_range(0.0..=1.0);
            let phi = random_polynomial(&mut rng, deg);
            let p = random_path(&mut rng, d);
            let got = nth_derivative(&phi, &p, t, n).unwrap();
            let oracle = polynomial_taylor_oracle(&phi, &p, t, n).unwrap();
            let gap = spectral_norm(&(&got - &oracle)) / (1.0 + spectral_norm(&oracle));
            assert!(gap < 1e-10, "{gap}");
        }
    }

    #[test]
    fn derivative_routes_agree() {
        let mut rng = rng_for(10, &[]);
        for _ in 0..30 {
            let d = rng.gen_range(1..=4);
            let deg = rng.gen_range(0..=8);
            let phi = random_polynomial(&mut rng, deg);
            let p = random_path(&mut rng, d);
            let t = rng.gen_range(0.0..=1.0);
            let a = derivative(&phi, &p, t).unwrap();
            let b = derivative_by_dilation(&phi, &p, t).unwrap();
            assert!(spectral_norm(&(a - b)) < 1e-9);
        }
    }

    #[test]
    fn central_differences_converge() {
        let mut rng = rng_for(11, &[]);
        for _ in 0..40 {
            let d = rng.gen_range(1..=5);
            let deg = rng.gen_range(0..=10);
            let phi = random_polynomial(&mut rng, deg);
            let p = random_path(&mut rng, d);
            let t = rng.gen_range(0.1..=0.9);
            for order in [1, 2] {
                let rep = central_difference_report(&phi, &p, t, order).unwrap();
                assert!(rep.converges(1.9), "order {order}: {:?} {:?}", rep.observed_order, rep.step_residuals);
            }
        }
    }

    #[test]
    fn lipschitz_examples() {
        let mut rng = rng_for(12, &[]);
        let p = random_path(&mut rng, 3);
        assert!(hs_lipschitz_check(&AnalyticFunction::monomial(1), &p).unwrap());
        assert!(hs_lipschitz_excess(&AnalyticFunction::monomial(1), &p).unwrap().abs() < 1e-12);
        assert!(hs_lipschitz_check(&AnalyticFunction::constant(C64::new(2.0, 1.0)), &p).unwrap());
        for _ in 0..100 {
            let d = rng.gen_range(1..=6);
            let deg = rng.gen_range(0..=10);
            let phi = random_polynomial(&mut rng, deg);
            let p = random_path(&mut rng, d);
            assert!(hs_lipschitz_check(&phi, &p).unwrap());
            let q = gaussian_matrix(&mut rng, d, d);
            assert!(hs_commutator_check(&phi, p.start(), &q).unwrap());
        }
    }

    #[test]
    fn hs_report_examples() {
        let mut rng = rng_for(13, &[]);
        let p = random_path(&mut rng, 3);
        let rep = hs_differentiability_report(&AnalyticFunction::monomial(1), &p).unwrap();
        assert!(rep.step_residuals.iter().all(|&r| r < 1e-9));
        assert!(hs_report_passes(&rep, 0.95));

        // φ = z² on scalars: residual is exactly s·|R − T|²
        let p = ContractionPath::new(scalar(0.2), scalar(-0.5)).unwrap();
        let rep = hs_differentiability_report(&AnalyticFunction::monomial(2), &p).unwrap();
        for (s, r) in rep.steps.iter().zip(&rep.step_residuals) {
            assert!((r - s * 0.49).abs() < 1e-10);
        }
        assert!((rep.observed_order.unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn hs_reports_random() {
        let mut rng = rng_for(14, &[]);
        for _ in 0..60 {
            let d = rng.gen_range(1..=6);
            let deg = rng.gen_range(0..=10);
            let phi = random_polynomial(&mut rng, deg);
            let p = random_path(&mut rng, d);
            let rep = hs_differentiability_report(&phi, &p).unwrap();
            assert!(hs_report_passes(&rep, 0.95), "{:?} {:?}", rep.observed_order, rep.step_residuals);
        }
    }

    #[test]
    fn cesaro_truncated_report() {
        // geometric series with ratio 1/2, far from a polynomial of small degree
        let coeffs: Vec<f64> = (0..60).map(|k| 0.5f64.powi(k)).collect();
        let phi = AnalyticFunction::from_real(&coeffs);
        let n = cesaro_truncation(&phi, 1e-2, 4096).unwrap();
        assert!(n >= 64);
        let mut rng = rng_for(15, &[]);
        let p = random_path(&mut rng, 2);
        let rep = hs_differentiability_report_cesaro(&phi, &p, 8).unwrap();
        assert_eq!(rep.truncation_degree, Some(8));
        assert!(hs_report_passes(&rep, 0.95));
    }

    #[test]
    fn report_json() {
        let p = ContractionPath::new(scalar(0.2), scalar(-0.5)).unwrap();
        let rep = hs_differentiability_report(&AnalyticFunction::monomial(2), &p).unwrap();
        let text = serde_json::to_string(&rep).unwrap();
        assert!(text.contains(r#""norm_used":"hilbert_schmidt""#));
        let back: DerivativeReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.order, 1);
    }
}
