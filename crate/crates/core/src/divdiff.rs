//! Divided differences of polynomials.
//!
//! For `φ = Σ c_m z^m` the k-th divided difference is
//! `Σ_m c_m h_{m−k}(λ_1, …, λ_{k+1})` where `h_j` is the complete homogeneous
//! symmetric polynomial of degree `j`. [`TensorExpansion`] stores that sum
//! monomial by monomial, which is exactly an elementary-tensor representation
//! `Σ coeff · ζ_1^{a_1} ⊗ ⋯ ⊗ ζ_{k+1}^{a_{k+1}}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcalc::AnalyticFunction;
use crate::matrix::{C64, ONE, ZERO};

/// The recursion is used when `min_sep^k` is at least this; otherwise the
/// expansion is evaluated.
const RECURSION_GATE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorTerm {
    pub coeff: C64,
    pub exps: Vec<usize>,
}

impl TensorTerm {
    pub fn total_degree(&self) -> usize {
        self.exps.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpansionJson", into = "ExpansionJson")]
pub struct TensorExpansion {
    order: usize,
    terms: Vec<TensorTerm>,
}

#[derive(Serialize, Deserialize)]
struct ExpansionJson {
    order: usize,
    terms: Vec<TensorTerm>,
}

impl TryFrom<ExpansionJson> for TensorExpansion {
    type Error = Error;

    fn try_from(json: ExpansionJson) -> Result<Self> {
        TensorExpansion::new(json.order, json.terms)
    }
}

impl From<TensorExpansion> for ExpansionJson {
    fn from(te: TensorExpansion) -> Self {
        ExpansionJson {
            order: te.order,
            terms: te.terms,
        }
    }
}

impl TensorExpansion {
    pub fn new(order: usize, terms: Vec<TensorTerm>) -> Result<Self> {
        if let Some(bad) = terms.iter().find(|t| t.exps.len() != order + 1) {
            return Err(Error::input(format!(
                "term has {} exponents, order {order} needs {}",
                bad.exps.len(),
                order + 1
            )));
        }
        if terms.iter().any(|t| !(t.coeff.re.is_finite() && t.coeff.im.is_finite())) {
            return Err(Error::input("non-finite coefficient in tensor expansion"));
        }
        Ok(TensorExpansion { order, terms })
    }

    /// Number of tensor slots minus one.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[TensorTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest exponent appearing in any slot.
    pub fn max_exponent(&self) -> usize {
        self.terms.iter().flat_map(|t| t.exps.iter().copied()).max().unwrap_or(0)
    }

    /// `Σ coeff · Π ζ_i^{a_i}`.
    pub fn eval(&self, points: &[C64]) -> Result<C64> {
        if points.len() != self.order + 1 {
            return Err(Error::input(format!(
                "expansion of order {} takes {} points, got {}",
                self.order,
                self.order + 1,
                points.len()
            )));
        }
        Ok(self
            .terms
            .iter()
            .map(|t| {
                t.exps
                    .iter()
                    .zip(points)
                    .fold(t.coeff, |acc, (&a, &z)| acc * z.powu(a as u32))
            })
            .sum())
    }

    /// Multiplies every coefficient by `s`.
    pub fn scale(&self, s: C64) -> TensorExpansion {
        TensorExpansion {
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|t| TensorTerm {
                    coeff: t.coeff * s,
                    exps: t.exps.clone(),
                })
                .collect(),
        }
    }

    /// Concatenation of the term lists; same order required.
    pub fn concat(&self, other: &TensorExpansion) -> Result<TensorExpansion> {
        if self.order != other.order {
            return Err(Error::input("cannot join expansions of different order"));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(TensorExpansion {
            order: self.order,
            terms,
        })
    }
}

/// All `a ∈ N^parts` with `Σ a = total`, first slot descending.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut current = Vec::with_capacity(parts);
    fill(total, parts, &mut current, &mut out);
    out
}

fn fill(left: usize, parts: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        current.push(left);
        out.push(current.clone());
        current.pop();
        return;
    }
    for a in (0..=left).rev() {
        current.push(a);
        fill(left - a, parts - 1, current, out);
        current.pop();
    }
}

/// Exact monomial expansion of `𝔇^k φ`; `k = 0` gives `φ` itself.
pub fn tensor_expansion(phi: &AnalyticFunction, k: usize) -> TensorExpansion {
    let mut terms = Vec::new();
    for (m, &c) in phi.coefficients().iter().enumerate() {
        if c == ZERO || m < k {
            continue;
        }
        for exps in compositions(m - k, k + 1) {
            terms.push(TensorTerm { coeff: c, exps });
        }
    }
    TensorExpansion { order: k, terms }
}

/// `Σ |coeff|`, an upper bound for the projective tensor norm.
pub fn projective_bound(te: &TensorExpansion) -> f64 {
    te.terms.iter().map(|t| t.coeff.norm()).sum()
}

/// `h_0, …, h_max` of the given points.
fn complete_homogeneous(points: &[C64], max: usize) -> Vec<C64> {
    let mut h = vec![ZERO; max + 1];
    h[0] = ONE;
    // after processing x_1..x_i, h[j] = h_j(x_1..x_i)
    for (i, &x) in points.iter().enumerate() {
        if i == 0 {
            for j in 1..=max {
                h[j] = h[j - 1] * x;
            }
        } else {
            for j in 1..=max {
                let prev = h[j - 1];
                h[j] += x * prev;
            }
        }
    }
    h
}

fn via_expansion(phi: &AnalyticFunction, k: usize, points: &[C64]) -> C64 {
    let deg = phi.coefficients().len().saturating_sub(1);
    if deg < k {
        return ZERO;
    }
    let h = complete_homogeneous(points, deg - k);
    (k..=deg).map(|m| phi.coefficient(m) * h[m - k]).sum()
}

fn via_recursion(phi: &AnalyticFunction, points: &[C64]) -> C64 {
    let n = points.len();
    if n == 1 {
        return phi.eval(points[0]);
    }
    let mut left = points[..n - 1].to_vec();
    let a = via_recursion(phi, &left);
    left[n - 2] = points[n - 1];
    let b = via_recursion(phi, &left);
    (a - b) / (points[n - 2] - points[n - 1])
}

fn min_separation(points: &[C64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min((points[i] - points[j]).norm());
        }
    }
    best
}

/// `(𝔇^k φ)(λ_1, …, λ_{k+1})`.
///
/// Well separated points go through the defining recursion. Coincident or
/// nearly coincident points use the expansion, which is the confluent limit.
pub fn divided_difference(phi: &AnalyticFunction, k: usize, points: &[C64]) -> Result<C64> {
    if points.len() != k + 1 {
        return Err(Error::input(format!("order {k} needs {} points, got {}", k + 1, points.len())));
    }
    if points.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::input("non-finite evaluation point"));
    }
    if k == 0 {
        return Ok(phi.eval(points[0]));
    }
    let sep = min_separation(points);
    if k <= 12 && sep.powi(k as i32) >= RECURSION_GATE {
        Ok(via_recursion(phi, points))
    } else {
        Ok(via_expansion(phi, k, points))
    }
}
