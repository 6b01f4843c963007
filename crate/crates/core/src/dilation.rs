//! Finite unitary power dilations.
//!
//! For a contraction `T` on `H = C^d` and a fidelity degree `N`, the unitary
//! `U` acts on `K = H^{⊕(N+1)}` with block layout
//!
//! ```text
//! U[0][0] = T      U[0][N] = D_{T*}
//! U[1][0] = D_T    U[1][N] = −T*
//! U[j+1][j] = I    (1 ≤ j ≤ N−1)
//! ```
//!
//! where `D_T = (I − T*T)^{1/2}`. The leading `d×d` block of `U^n` equals
//! `T^n` for `0 ≤ n ≤ N` and generally not beyond.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_contraction, psd_sqrt, spectral_norm};
use crate::matrix::{ComplexMatrix, MatrixJson, C64};

/// Clamp tolerance for the defect operators.
const DEFECT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DilationJson", into = "DilationJson")]
pub struct PowerDilation {
    unitary: ComplexMatrix,
    base_dim: usize,
    degree: usize,
}

#[derive(Serialize, Deserialize)]
struct DilationJson {
    #[serde(flatten)]
    matrix: MatrixJson,
    base_dim: usize,
    degree: usize,
}

impl TryFrom<DilationJson> for PowerDilation {
    type Error = Error;

    fn try_from(json: DilationJson) -> Result<Self> {
        let unitary = ComplexMatrix::try_from(json.matrix)?;
        if json.degree == 0 || json.base_dim == 0 {
            return Err(Error::input("dilation needs base_dim ≥ 1 and degree ≥ 1"));
        }
        let size = json.base_dim * (json.degree + 1);
        if unitary.rows() != size || unitary.cols() != size {
            return Err(Error::input(format!(
                "dilation of base_dim {} and degree {} must be {size}x{size}",
                json.base_dim, json.degree
            )));
        }
        Ok(PowerDilation {
            unitary,
            base_dim: json.base_dim,
            degree: json.degree,
        })
    }
}

impl From<PowerDilation> for DilationJson {
    fn from(d: PowerDilation) -> Self {
        DilationJson {
            matrix: d.unitary.into(),
            base_dim: d.base_dim,
            degree: d.degree,
        }
    }
}

impl PowerDilation {
    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `H` sits in the first `base_dim` coordinates of `K`.
    pub fn embedding(&self) -> std::ops::Range<usize> {
        0..self.base_dim
    }

    /// `P_H X |_H`.
    pub fn compress(&self, x: &ComplexMatrix) -> ComplexMatrix {
        x.leading(self.base_dim)
    }

    /// Replaces the unitary; used to build corrupted dilations in tests and demos.
    pub fn with_unitary(&self, unitary: ComplexMatrix) -> Result<Self> {
        if unitary.rows() != self.unitary.rows() || unitary.cols() != self.unitary.cols() {
            return Err(Error::input("replacement unitary has the wrong shape"));
        }
        Ok(PowerDilation {
            unitary,
            base_dim: self.base_dim,
            degree: self.degree,
        })
    }
}

/// Defect operators `(D_T, D_{T*})`.
///
/// Both come from one SVD `T = W Σ V*`: `D_T = V (I − Σ²)^{1/2} V*` and
/// `D_{T*} = W (I − Σ²)^{1/2} W*`. Sharing the singular vectors makes
/// `T D_T = D_{T*} T` hold to rounding even when `‖T‖ = 1`, where separate
/// square roots of `I − T*T` and `I − TT*` would disagree at the `√ε` level.
pub fn defect_operators(t: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let d = t.rows();
    let svd = nalgebra::SVD::try_new(t.as_dmatrix().clone(), true, true, f64::EPSILON, 10_000)
        .ok_or(Error::NoConvergence(10_000))?;
    let (Some(w), Some(v_adj)) = (svd.u, svd.v_t) else {
        return Err(Error::NoConvergence(0));
    };
    let mut roots = Vec::with_capacity(d);
    for &s in svd.singular_values.iter() {
        if s > 1.0 + DEFECT_TOL {
            return Err(Error::contract(format!("T has singular value {s} > 1")));
        }
        roots.push(((1.0 - s) * (1.0 + s)).max(0.0).sqrt());
    }
    let v = v_adj.adjoint();
    let conj_diag = |q: &nalgebra::DMatrix<C64>| {
        let scaled = nalgebra::DMatrix::from_fn(d, d, |i, j| q[(i, j)] * roots[j]);
        let m = &scaled * q.adjoint();
        ComplexMatrix::from_dmatrix((&m + m.adjoint()) * C64::new(0.5, 0.0))
    };
    Ok((conj_diag(&v)?, conj_diag(&w)?))
}

/// Defects computed independently through [`psd_sqrt`]; used as a cross-check.
pub fn defect_operators_by_sqrt(t: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let id = ComplexMatrix::identity(t.rows());
    let dt = psd_sqrt(&(&id - &(&t.adjoint() * t)), DEFECT_TOL)?;
    let dts = psd_sqrt(&(&id - &(t * &t.adjoint())), DEFECT_TOL)?;
    Ok((dt, dts))
}

/// The 2×2 block unitary `[[T, D_{T*}], [D_T, −T*]]`.
pub fn halmos_dilation(t: &ComplexMatrix) -> Result<PowerDilation> {
    power_dilation(t, 1)
}

pub fn power_dilation(t: &ComplexMatrix, degree: usize) -> Result<PowerDilation> {
    if degree == 0 {
        return Err(Error::parameter("dilation degree must be at least 1"));
    }
    ensure_contraction(t, "T")?;
    let d = t.rows();
    let (dt, dts) = defect_operators(t)?;
    let n = degree;
    let mut u = ComplexMatrix::zeros(d * (n + 1), d * (n + 1));
    u.set_block(0, 0, t);
    u.set_block(0, n * d, &dts);
    u.set_block(d, 0, &dt);
    u.set_block(d, n * d, &(-t.adjoint()));
    let id = ComplexMatrix::identity(d);
    for j in 1..n {
        u.set_block((j + 1) * d, j * d, &id);
    }
    Ok(PowerDilation {
        unitary: u,
        base_dim: d,
        degree,
    })
}

/// `max_{0≤n≤N} ‖P_H U^n|_H − T^n‖`.
pub fn verify_dilation(dilation: &PowerDilation, t: &ComplexMatrix) -> Result<f64> {
    if !t.is_square() || t.rows() != dilation.base_dim {
        return Err(Error::input(format!(
            "T is {}x{} but the dilation has base dimension {}",
            t.rows(),
            t.cols(),
            dilation.base_dim
        )));
    }
    let u = &dilation.unitary;
    let mut u_pow = ComplexMatrix::identity(u.rows());
    let mut t_pow = ComplexMatrix::identity(t.rows());
    let mut worst = 0.0f64;
    for n in 0..=dilation.degree {
        if n > 0 {
            u_pow = &u_pow * u;
            t_pow = &t_pow * t;
        }
        worst = worst.max(spectral_norm(&(dilation.compress(&u_pow) - &t_pow)));
    }
    Ok(worst)
}

/// `‖U*U − I‖`.
pub fn unitarity_defect(dilation: &PowerDilation) -> f64 {
    let u = &dilation.unitary;
    spectral_norm(&(&u.adjoint() * u - ComplexMatrix::identity(u.rows())))
}
