//! Double and multiple operator integrals.
//!
//! Two routes are provided. The dilation route diagonalizes power dilations
//! of the contractions and sums `Φ(λ_i, μ_j)` against compressed rank-one
//! pieces. The tensor route plugs the contractions into a finite
//! elementary-tensor expansion of the integrand.

use serde::{Deserialize, Serialize};

use crate::dilation::power_dilation;
use crate::divdiff::{divided_difference, TensorExpansion};
use crate::error::{Error, Result};
use crate::funcalc::{circle_point, AnalyticFunction};
use crate::linalg::{ensure_contraction, frobenius, spectral_norm, unitary_eig};
use crate::matrix::{ComplexMatrix, C64, ZERO};

/// Pairs closer than this are treated as lying on the diagonal.
pub const DIAGONAL_GAP: f64 = 1e-8;
/// Pointwise tolerance of the grid precheck in [`representation_independence_check`].
pub const GRID_AGREEMENT: f64 = 1e-8;
const GRID_SIDE: usize = 32;
const EIG_UNITARY_TOL: f64 = 1e-9;
/// Eigenvectors with less squared mass than this in `H` are ignored by the sup.
const NEGLIGIBLE_MASS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagonalPolicy {
    /// `𝔇φ(ζ, ζ) = φ′(ζ)`.
    Derivative,
    /// `Φ = 0` on the diagonal.
    Zero,
}

impl DiagonalPolicy {
    pub const ALL: [DiagonalPolicy; 2] = [Self::Derivative, Self::Zero];
}

/// `𝔇φ` as a function of two variables with a chosen diagonal.
#[derive(Debug, Clone)]
pub struct DividedDifferenceSymbol {
    phi: AnalyticFunction,
    derivative: AnalyticFunction,
    policy: DiagonalPolicy,
}

impl DividedDifferenceSymbol {
    pub fn new(phi: &AnalyticFunction, policy: DiagonalPolicy) -> Self {
        DividedDifferenceSymbol {
            phi: phi.clone(),
            derivative: phi.derivative(),
            policy,
        }
    }

    pub fn policy(&self) -> DiagonalPolicy {
        self.policy
    }

    pub fn eval(&self, z: C64, w: C64) -> C64 {
        if (z - w).norm() < DIAGONAL_GAP {
            return match self.policy {
                DiagonalPolicy::Zero => ZERO,
                DiagonalPolicy::Derivative => {
                    let mid = z + w;
                    let at = if mid.norm() > 0.0 { mid / mid.norm() } else { z };
                    self.derivative.eval(at)
                }
            };
        }
        divided_difference(&self.phi, 1, &[z, w]).unwrap_or(ZERO)
    }
}

/// Spectral data of a power dilation restricted to `H`: the eigenvalues of
/// `U` and the `H`-rows of its eigenvector matrix.
#[derive(Debug, Clone)]
pub struct DilationSpectrum {
    eigenvalues: Vec<C64>,
    rows: ComplexMatrix,
}

impl DilationSpectrum {
    pub fn new(t: &ComplexMatrix, degree: usize) -> Result<Self> {
        let dilation = power_dilation(t, degree)?;
        let eig = unitary_eig(dilation.unitary(), EIG_UNITARY_TOL)?;
        let d = dilation.base_dim();
        let n = eig.dim();
        Ok(DilationSpectrum {
            rows: eig.eigenvectors.block(0, 0, d, n),
            eigenvalues: eig.eigenvalues,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.rows.rows()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    fn supported(&self) -> Vec<bool> {
        (0..self.rows.cols())
            .map(|j| (0..self.rows.rows()).map(|i| self.rows[(i, j)].norm_sqr()).sum::<f64>() > NEGLIGIBLE_MASS)
            .collect()
    }
}

/// Result of a dilation-route integral.
#[derive(Debug, Clone)]
pub struct DoiValue {
    pub value: ComplexMatrix,
    /// `max |Φ(λ_i, μ_j)|` over eigenvalue pairs carrying mass in `H`.
    pub symbol_sup: f64,
}

/// `Σ_{i,j} Φ(λ_i, μ_j) P_H P_i Q̃ P_j |_H` for precomputed spectra.
pub fn doi_spectral(
    phi: impl Fn(C64, C64) -> C64,
    left: &DilationSpectrum,
    q: &ComplexMatrix,
    right: &DilationSpectrum,
) -> Result<DoiValue> {
    if q.rows() != left.base_dim() || q.cols() != right.base_dim() {
        return Err(Error::input(format!(
            "Q is {}x{} but the spectra have dimensions {} and {}",
            q.rows(),
            q.cols(),
            left.base_dim(),
            right.base_dim()
        )));
    }
    q.ensure_finite()?;
    let a = &left.rows;
    let b = &right.rows;
    let inner = &(&a.adjoint() * q) * b;
    let (sa, sb) = (left.supported(), right.supported());
    let mut sup = 0.0f64;
    let mut weighted = inner.clone();
    for i in 0..inner.rows() {
        for j in 0..inner.cols() {
            let v = phi(left.eigenvalues[i], right.eigenvalues[j]);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Evaluation(format!(
                    "symbol is not finite at ({}, {})",
                    left.eigenvalues[i], right.eigenvalues[j]
                )));
            }
            if sa[i] && sb[j] {
                sup = sup.max(v.norm());
            }
            weighted[(i, j)] = inner[(i, j)] * v;
        }
    }
    Ok(DoiValue {
        value: &(a * &weighted) * &b.adjoint(),
        symbol_sup: sup,
    })
}

/// Double operator integral of `Φ` with respect to the semi-spectral measures
/// of `T` and `R`, both taken from power dilations of degree `degree`.
pub fn doi_dilation(
    phi: impl Fn(C64, C64) -> C64,
    t: &ComplexMatrix,
    q: &ComplexMatrix,
    r: &ComplexMatrix,
    degree: usize,
) -> Result<ComplexMatrix> {
    let left = DilationSpectrum::new(t, degree)?;
    let right = if t == r { left.clone() } else { DilationSpectrum::new(r, degree)? };
    Ok(doi_spectral(phi, &left, q, &right)?.value)
}

fn ensure_shapes(ts: &[&ComplexMatrix], qs: &[&ComplexMatrix]) -> Result<()> {
    if ts.len() != qs.len() + 1 {
        return Err(Error::input(format!(
            "{} contractions need {} operators, got {}",
            ts.len(),
            ts.len().saturating_sub(1),
            qs.len()
        )));
    }
    for (i, t) in ts.iter().enumerate() {
        ensure_contraction(t, "contraction argument")?;
        if i < qs.len() && (qs[i].rows() != t.rows() || qs[i].cols() != ts[i + 1].rows()) {
            return Err(Error::input(format!(
                "operator {} is {}x{}, expected {}x{}",
                i + 1,
                qs[i].rows(),
                qs[i].cols(),
                t.rows(),
                ts[i + 1].rows()
            )));
        }
    }
    for q in qs {
        q.ensure_finite()?;
    }
    Ok(())
}

/// `Σ coeff · T_1^{a_1} Q_1 T_2^{a_2} Q_2 ⋯ T_{n+1}^{a_{n+1}}`.
pub fn moi_tensor(te: &TensorExpansion, ts: &[&ComplexMatrix], qs: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    ensure_shapes(ts, qs)?;
    if ts.len() != te.order() + 1 {
        return Err(Error::input(format!(
            "expansion of order {} needs {} contractions, got {}",
            te.order(),
            te.order() + 1,
            ts.len()
        )));
    }
    let max = te.max_exponent();
    let powers: Vec<Vec<ComplexMatrix>> = ts.iter().map(|t| t.powers(max)).collect();
    let (rows, cols) = (ts[0].rows(), ts[ts.len() - 1].rows());
    let mut acc = ComplexMatrix::zeros(rows, cols);
    for term in te.terms() {
        let mut prod = powers[0][term.exps[0]].clone();
        for (slot, &a) in term.exps.iter().enumerate().skip(1) {
            prod = &(&prod * qs[slot - 1]) * &powers[slot][a];
        }
        acc = acc + prod.scale(term.coeff);
    }
    Ok(acc)
}

/// `Σ coeff · T^{a_1} Q R^{a_2}` for an order-one expansion.
pub fn doi_tensor(te: &TensorExpansion, t: &ComplexMatrix, q: &ComplexMatrix, r: &ComplexMatrix) -> Result<ComplexMatrix> {
    if te.order() != 1 {
        return Err(Error::input(format!("double integral needs order 1, got {}", te.order())));
    }
    moi_tensor(te, &[t, r], &[q])
}

/// Largest pointwise gap between two order-one expansions on a 32×32 grid of
/// circle pairs.
pub fn grid_disagreement(a: &TensorExpansion, b: &TensorExpansion) -> Result<f64> {
    if a.order() != b.order() {
        return Err(Error::input("expansions have different orders"));
    }
    if a.order() != 1 {
        return Err(Error::input("grid comparison is implemented for order 1"));
    }
    let mut worst = 0.0f64;
    for i in 0..GRID_SIDE {
        for j in 0..GRID_SIDE {
            // offset the second grid so the diagonal is sampled off the nodes too
            let pts = [circle_point(i, GRID_SIDE), circle_point(2 * j + 1, 2 * GRID_SIDE)];
            worst = worst.max((a.eval(&pts)? - b.eval(&pts)?).norm());
        }
    }
    Ok(worst)
}

/// `‖DOI(rep_a) − DOI(rep_b)‖` after checking the two representations agree
/// as functions.
pub fn representation_independence_check(
    rep_a: &TensorExpansion,
    rep_b: &TensorExpansion,
    t: &ComplexMatrix,
    q: &ComplexMatrix,
    r: &ComplexMatrix,
) -> Result<f64> {
    let gap = grid_disagreement(rep_a, rep_b)?;
    if gap > GRID_AGREEMENT {
        return Err(Error::Precondition(format!(
            "representations differ as functions (grid gap {gap:e})"
        )));
    }
    let a = doi_tensor(rep_a, t, q, r)?;
    let b = doi_tensor(rep_b, t, q, r)?;
    Ok(spectral_norm(&(a - b)))
}

/// `‖DOI(Φ)‖_{S2} ≤ sup|Φ| · ‖Q‖_{S2}` with the sup over atom pairs.
pub fn doi_s2_bound_check(
    phi: impl Fn(C64, C64) -> C64,
    t: &ComplexMatrix,
    q: &ComplexMatrix,
    r: &ComplexMatrix,
    degree: usize,
) -> Result<bool> {
    let left = DilationSpectrum::new(t, degree)?;
    let right = if t == r { left.clone() } else { DilationSpectrum::new(r, degree)? };
    let out = doi_spectral(phi, &left, q, &right)?;
    Ok(frobenius(&out.value) <= out.symbol_sup * frobenius(q) + 1e-9)
}
