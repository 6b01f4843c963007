//! Polynomial functional calculus on contractions.
//!
//! A disk-algebra function is represented by its Taylor coefficients. Anything
//! that is not a polynomial enters through [`cesaro_mean`] truncations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_contraction, spectral_norm};
use crate::matrix::{ComplexMatrix, C64, ONE, ZERO};

/// Grid oversampling factor for sup-norms on the circle.
pub const GRID_OVERSAMPLING: usize = 64;
/// Relative gap below the grid maximum within which local maxima are refined.
const REFINE_BAND: f64 = 1e-2;
/// Allowed excess of `‖φ(T)‖` over the grid maximum of `|φ|`.
pub const GRID_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticFunction {
    #[serde(rename = "coeffs")]
    coefficients: Vec<C64>,
    #[serde(default)]
    label: String,
}

impl AnalyticFunction {
    pub fn new(coefficients: Vec<C64>, label: impl Into<String>) -> Self {
        let coefficients = if coefficients.is_empty() { vec![ZERO] } else { coefficients };
        AnalyticFunction {
            coefficients,
            label: label.into(),
        }
    }

    pub fn from_real(coefficients: &[f64]) -> Self {
        let c = coefficients.iter().map(|&x| C64::new(x, 0.0)).collect();
        AnalyticFunction::new(c, "")
    }

    /// `z^m`.
    pub fn monomial(m: usize) -> Self {
        let mut c = vec![ZERO; m + 1];
        c[m] = ONE;
        AnalyticFunction::new(c, format!("z^{m}"))
    }

    pub fn constant(c: C64) -> Self {
        AnalyticFunction::new(vec![c], "constant")
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Index of the last nonzero coefficient (0 for the zero function).
    pub fn degree(&self) -> usize {
        self.coefficients.iter().rposition(|z| *z != ZERO).unwrap_or(0)
    }

    pub fn coefficient(&self, k: usize) -> C64 {
        self.coefficients.get(k).copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coefficients.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> AnalyticFunction {
        let c: Vec<C64> = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        AnalyticFunction::new(c, format!("d/dz {}", self.label))
    }

    pub fn product(&self, other: &AnalyticFunction) -> AnalyticFunction {
        let mut c = vec![ZERO; self.coefficients.len() + other.coefficients.len() - 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            for (j, b) in other.coefficients.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        AnalyticFunction::new(c, format!("({})·({})", self.label, other.label))
    }

    pub fn scale(&self, s: C64) -> AnalyticFunction {
        AnalyticFunction::new(self.coefficients.iter().map(|c| c * s).collect(), self.label.clone())
    }

    /// Horner evaluation at a square matrix, no contraction check.
    pub fn eval_matrix(&self, t: &ComplexMatrix) -> ComplexMatrix {
        let n = t.rows();
        let mut acc = ComplexMatrix::zeros(n, n);
        for &c in self.coefficients.iter().rev() {
            acc = &acc * t;
            for i in 0..n {
                acc[(i, i)] += c;
            }
        }
        acc
    }

    /// Max of `|φ|` over `grid` equispaced points of the circle.
    pub fn grid_sup(&self, grid: usize) -> f64 {
        (0..grid)
            .map(|j| self.eval(circle_point(j, grid)).norm())
            .fold(0.0, f64::max)
    }

    /// `sup |φ|` on the circle: grid maximum, then golden-section refinement
    /// around every grid local maximum close to it.
    pub fn circle_sup(&self) -> f64 {
        let grid = self.default_grid();
        let step = std::f64::consts::TAU / grid as f64;
        let f = |theta: f64| self.eval(C64::from_polar(1.0, theta)).norm();
        let values: Vec<f64> = (0..grid).map(|j| self.eval(circle_point(j, grid)).norm()).collect();
        let grid_max = values.iter().copied().fold(0.0, f64::max);
        let mut best = grid_max;
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        for j in 0..grid {
            let (prev, next) = (values[(j + grid - 1) % grid], values[(j + 1) % grid]);
            if values[j] < prev || values[j] < next || values[j] < grid_max * (1.0 - REFINE_BAND) {
                continue;
            }
            let (mut a, mut b) = ((j as f64 - 1.0) * step, (j as f64 + 1.0) * step);
            while b - a > 1e-12 {
                let c = b - golden * (b - a);
                let d = a + golden * (b - a);
                if f(c) > f(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            best = best.max(f(0.5 * (a + b)));
        }
        best
    }

    /// Grid size used for sup-norms: `64·(deg + 1)`.
    pub fn default_grid(&self) -> usize {
        GRID_OVERSAMPLING * (self.degree() + 1)
    }
}

pub fn circle_point(j: usize, grid: usize) -> C64 {
    C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / grid as f64)
}

/// `φ(T) = Σ c_k T^k` for a contraction `T`.
pub fn eval_on_contraction(phi: &AnalyticFunction, t: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_contraction(t, "T")?;
    if !phi.is_finite() {
        return Err(Error::input("function has non-finite coefficients"));
    }
    Ok(phi.eval_matrix(t))
}

/// n-th Cesàro mean: coefficient k is scaled by `1 − k/(n+1)` and dropped past `n`.
pub fn cesaro_mean(phi: &AnalyticFunction, n: usize) -> AnalyticFunction {
    let c = (0..=n)
        .map(|k| phi.coefficient(k) * (1.0 - k as f64 / (n as f64 + 1.0)))
        .collect();
    AnalyticFunction::new(c, format!("σ_{n}({})", phi.label))
}

/// `‖φ(T)‖ − sup |φ|` with the sup from [`AnalyticFunction::circle_sup`].
pub fn von_neumann_residual(phi: &AnalyticFunction, t: &ComplexMatrix) -> Result<f64> {
    let value = eval_on_contraction(phi, t)?;
    Ok(spectral_norm(&value) - phi.circle_sup())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{any_contraction, random_polynomial, rng_for};
    use rand::Rng;

    #[test]
    fn identity_function() {
        let t = ComplexMatrix::from_real_rows(&[&[0.2, -0.3], &[0.1, 0.4]]).unwrap();
        let got = eval_on_contraction(&AnalyticFunction::monomial(1), &t).unwrap();
        assert!(got.max_abs_diff(&t) < 1e-15);
    }

    #[test]
    fn nilpotent() {
        let t = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let phi = AnalyticFunction::from_real(&[1.0, 0.0, 1.0]);
        let got = eval_on_contraction(&phi, &t).unwrap();
        assert!(got.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn cube_of_scalar() {
        let got = eval_on_contraction(&AnalyticFunction::monomial(3), &ComplexMatrix::diag_real(&[0.5])).unwrap();
        assert!((got[(0, 0)].re - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_contraction() {
        let t = ComplexMatrix::identity(2).scale_real(1.5);
        assert!(matches!(
            eval_on_contraction(&AnalyticFunction::monomial(1), &t),
            Err(Error::ContractViolation(_))
        ));
        assert!(von_neumann_residual(&AnalyticFunction::monomial(1), &t).is_err());
    }

    #[test]
    fn cesaro_examples() {
        let s = cesaro_mean(&AnalyticFunction::monomial(1), 1);
        assert_eq!(s.coefficients(), &[ZERO, C64::new(0.5, 0.0)]);

        let phi = AnalyticFunction::from_real(&[1.0, 2.0, 3.0]);
        let s = cesaro_mean(&phi, 4);
        for k in 0..=2 {
            let expected = phi.coefficient(k) * (1.0 - k as f64 / 5.0);
            assert!((s.coefficient(k) - expected).norm() < 1e-15);
        }
        assert_eq!(s.coefficient(3), ZERO);
    }

    #[test]
    fn cesaro_converges_uniformly() {
        // grid oracle: sup-distance between σ_n(z^5) and z^5 is 5/(n+1)
        let phi = AnalyticFunction::monomial(5);
        let sup_dist = |n: usize| {
            let s = cesaro_mean(&phi, n);
            (0..4096)
                .map(|j| {
                    let z = circle_point(j, 4096);
                    (s.eval(z) - phi.eval(z)).norm()
                })
                .fold(0.0, f64::max)
        };
        let mut last = f64::INFINITY;
        for n in [5, 50, 500, 5000, 10_000] {
            let d = sup_dist(n);
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn monomials_satisfy_von_neumann() {
        let mut rng = rng_for(3, &[]);
        for k in 0..8 {
            let t = any_contraction(&mut rng, 4);
            assert!(von_neumann_residual(&AnalyticFunction::monomial(k), &t).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn scalar_unitary_attains_bound() {
        // |1 + z| peaks at z = 1 with value 2
        let phi = AnalyticFunction::from_real(&[1.0, 1.0]);
        let r = von_neumann_residual(&phi, &ComplexMatrix::identity(1)).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn multiplicativity() {
        let mut rng = rng_for(5, &[]);
        for _ in 0..50 {
            let dim = rng.gen_range(1..=5);
            let t = any_contraction(&mut rng, dim);
            let (da, db) = (rng.gen_range(0..=5), rng.gen_range(0..=5));
            let a = random_polynomial(&mut rng, da);
            let b = random_polynomial(&mut rng, db);
            let lhs = a.product(&b).eval_matrix(&t);
            let rhs = &a.eval_matrix(&t) * &b.eval_matrix(&t);
            assert!(spectral_norm(&(lhs - rhs)) < 1e-9);
        }
    }

    #[test]
    fn json_shape() {
        let phi = AnalyticFunction::new(vec![ONE, C64::new(0.0, 2.0)], "p");
        let text = serde_json::to_string(&phi).unwrap();
        assert_eq!(text, r#"{"coeffs":[[1.0,0.0],[0.0,2.0]],"label":"p"}"#);
    }

    #[test]
    fn circle_sup_finds_off_grid_peaks() {
        let alpha = 0.5 * std::f64::consts::TAU / 128.0;
        let phi = AnalyticFunction::new(vec![ONE, C64::from_polar(1.0, -alpha)], "peak");
        assert!(phi.grid_sup(phi.default_grid()) < 2.0 - 1e-4);
        assert!((phi.circle_sup() - 2.0).abs() < 1e-12);

        let t = ComplexMatrix::scalar(C64::from_polar(1.0, alpha));
        let r = von_neumann_residual(&phi, &t).unwrap();
        assert!(r.abs() < 1e-12, "{r}");
    }

    #[test]
    fn von_neumann_on_unitaries() {
        for case in 0..200u64 {
            let mut rng = rng_for(31, &[case]);
            let deg = rng.gen_range(1..=10);
            let dim = rng.gen_range(1..=6);
            let phi = random_polynomial(&mut rng, deg);
            let u = crate::sampling::random_contraction(case, dim, crate::sampling::ContractionMode::Unitary);
            assert!(von_neumann_residual(&phi, &u).unwrap() <= GRID_SLACK);
        }
    }
}
