//! Norms, the unitary eigensolver and PSD square roots.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, ONE, ZERO};

/// Default tolerance on `|λ| = 1` for unitary eigenvalues.
pub const TOL_UNIT: f64 = 1e-10;
/// Default tolerance on `V*V = I`.
pub const TOL_ORTH: f64 = 1e-10;
/// Tolerance used by [`is_contraction`] when a caller has no better value.
pub const TOL_CONTRACTION: f64 = 1e-10;

/// Reconstruction tolerance scales with the dimension.
pub fn tol_recon(dim: usize) -> f64 {
    1e-9 * dim as f64
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    m.ensure_finite()?;
    Ok(spectral_norm(m))
}

/// Frobenius norm.
pub fn hs_norm(m: &ComplexMatrix) -> Result<f64> {
    m.ensure_finite()?;
    Ok(frobenius(m))
}

pub(crate) fn frobenius(m: &ComplexMatrix) -> f64 {
    m.as_dmatrix().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// σ_max through the largest eigenvalue of the smaller Gram matrix. The
/// eigenvalue is computed to full relative accuracy, so the square root is too.
pub(crate) fn spectral_norm(m: &ComplexMatrix) -> f64 {
    let a = m.as_dmatrix();
    let scale = a.iter().fold(0.0f64, |s, z| s.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let a = a / C64::new(scale, 0.0);
    let gram = if a.nrows() <= a.ncols() {
        &a * a.adjoint()
    } else {
        a.adjoint() * &a
    };
    let (values, _) = hermitian_eigen(gram);
    let top = values.iter().fold(0.0f64, |s, &x| s.max(x));
    scale * top.sqrt()
}

/// Cyclic Jacobi eigensolver for Hermitian matrices. Returns eigenvalues and
/// the unitary whose columns are the matching eigenvectors.
pub fn hermitian_eigen(mut a: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = a.nrows();
    let mut v = DMatrix::<C64>::identity(n, n);
    let total = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if total == 0.0 {
        return (vec![0.0; n], v);
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-2 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a[(p, q)].norm();
                if g <= f64::MIN_POSITIVE {
                    continue;
                }
                // phase the (p, q) entry to a real positive number
                let e = a[(p, q)] / g;
                for k in 0..n {
                    a[(k, q)] *= e.conj();
                }
                for k in 0..n {
                    a[(q, k)] *= e;
                }
                for k in 0..n {
                    v[(k, q)] *= e.conj();
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let x = a[(k, p)];
                    let y = a[(k, q)];
                    a[(k, p)] = x * c - y * s;
                    a[(k, q)] = x * s + y * c;
                }
                for k in 0..n {
                    let x = a[(p, k)];
                    let y = a[(q, k)];
                    a[(p, k)] = x * c - y * s;
                    a[(q, k)] = x * s + y * c;
                }
                for k in 0..n {
                    let x = v[(k, p)];
                    let y = v[(k, q)];
                    v[(k, p)] = x * c - y * s;
                    v[(k, q)] = x * s + y * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(app - t * g, 0.0);
                a[(q, q)] = C64::new(aqq + t * g, 0.0);
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

pub fn is_contraction(t: &ComplexMatrix, tol: f64) -> Result<bool> {
    t.ensure_square("contraction candidate")?;
    Ok(operator_norm(t)? <= 1.0 + tol)
}

pub(crate) fn ensure_contraction(t: &ComplexMatrix, what: &str) -> Result<()> {
    t.ensure_square(what)?;
    let norm = operator_norm(t)?;
    if norm > 1.0 + TOL_CONTRACTION {
        return Err(Error::contract(format!("{what} is not a contraction (norm {norm})")));
    }
    Ok(())
}

/// Eigenpairs of a unitary matrix.
#[derive(Debug, Clone)]
pub struct UnitaryEigensystem {
    pub eigenvalues: Vec<C64>,
    /// Column `j` is the eigenvector for `eigenvalues[j]`.
    pub eigenvectors: ComplexMatrix,
}

impl UnitaryEigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(f(λ)) V*`.
    pub fn apply(&self, f: impl Fn(C64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let d: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let scaled = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * d[j]);
        &scaled * &v.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|l| l)
    }
}

/// Principal argument in `[0, 2π)`; angles within 1e-12 below 2π wrap to 0.
pub fn principal_arg(z: C64) -> f64 {
    let mut a = z.arg();
    if a < 0.0 {
        a += std::f64::consts::TAU;
    }
    if std::f64::consts::TAU - a < 1e-12 {
        a = 0.0;
    }
    a
}

/// Eigendecomposition of a unitary matrix through a complex Schur reduction.
///
/// For a normal matrix the Schur factor is diagonal, so the Schur vectors are
/// an orthonormal eigenbasis. Eigenvalues come back sorted by principal
/// argument.
pub fn unitary_eig(u: &ComplexMatrix, tol: f64) -> Result<UnitaryEigensystem> {
    u.ensure_square("unitary matrix")?;
    u.ensure_finite()?;
    let n = u.rows();
    // Frobenius bounds the operator norm and is far cheaper for large dilations
    let gram = &u.adjoint() * u;
    let defect = frobenius(&(gram - ComplexMatrix::identity(n)));
    if defect > tol {
        return Err(Error::contract(format!("matrix is not unitary: ‖U*U − I‖ = {defect:e}")));
    }
    let (q, t) = complex_schur(u.as_dmatrix().clone())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| principal_arg(t[(a, a)]).total_cmp(&principal_arg(t[(b, b)])));
    let eigenvalues = order.iter().map(|&k| t[(k, k)]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok(UnitaryEigensystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Complex Schur form `A = Q T Q*` by Householder reduction to Hessenberg form
/// followed by single-shift QR sweeps with Givens rotations.
pub(crate) fn complex_schur(mut h: DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let n = h.nrows();
    let mut q = DMatrix::<C64>::identity(n, n);
    hessenberg(&mut h, &mut q);
    if n == 1 {
        return Ok((q, h));
    }

    let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let max_iter = 60 * n;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // find the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut scale = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if scale == 0.0 {
                scale = norm;
            }
            if sub <= f64::EPSILON * scale {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter * n.max(4) {
            return Err(Error::NoConvergence(total));
        }
        let shift = if iter % 11 == 0 {
            // exceptional shift breaks the cycling of permutation-like blocks
            let angle = 1.0 + iter as f64 * 0.7;
            h[(hi, hi)] + C64::from_polar(h[(hi, hi - 1)].norm().max(1e-3), angle)
        } else {
            wilkinson_shift(&h, hi)
        };
        qr_sweep(&mut h, &mut q, lo, hi, shift);
    }
    Ok((q, h))
}

fn wilkinson_shift(h: &DMatrix<C64>, hi: usize) -> C64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Rotation `G = [[c, s], [-s̄, c]]` with `G·[a; b] = [r; 0]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

fn qr_sweep(h: &mut DMatrix<C64>, q: &mut DMatrix<C64>, lo: usize, hi: usize, shift: C64) {
    let n = h.nrows();
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..n {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        h[(k + 1, k)] = ZERO;
        rotations.push((c, s));
    }
    for (offset, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + offset;
        let top = (k + 1).min(hi);
        for i in 0..=top {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + s.conj() * y;
            h[(i, k + 1)] = -s * x + y * c;
        }
        for i in 0..n {
            let x = q[(i, k)];
            let y = q[(i, k + 1)];
            q[(i, k)] = x * c + s.conj() * y;
            q[(i, k + 1)] = -s * x + y * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

fn hessenberg(a: &mut DMatrix<C64>, q: &mut DMatrix<C64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tail = x[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if xnorm == 0.0 || tail == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { ONE } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // A ← (I − 2vv*) A
        for j in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * a[(k + 1 + i, j)]).sum();
            for (i, vi) in v.iter().enumerate() {
                a[(k + 1 + i, j)] -= *vi * dot * 2.0;
            }
        }
        // A ← A (I − 2vv*), Q ← Q (I − 2vv*)
        for m in [&mut *a, &mut *q] {
            for i in 0..n {
                let dot: C64 = v.iter().enumerate().map(|(j, vj)| m[(i, k + 1 + j)] * vj).sum();
                for (j, vj) in v.iter().enumerate() {
                    m[(i, k + 1 + j)] -= dot * vj.conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Hermitian square root of a positive semidefinite matrix. Eigenvalues in
/// `[-tol, 0)` are clamped to zero.
pub fn psd_sqrt(h: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    h.ensure_square("PSD matrix")?;
    h.ensure_finite()?;
    let skew = spectral_norm(&(h - &h.adjoint()));
    if skew > tol {
        return Err(Error::contract(format!("matrix is not Hermitian: ‖H − H*‖ = {skew:e}")));
    }
    let (values, v) = hermitian_eigen(h.hermitian_part().into_dmatrix());
    let mut roots = Vec::with_capacity(values.len());
    for &l in &values {
        if l < -tol {
            return Err(Error::NotPsd(l));
        }
        roots.push(l.max(0.0).sqrt());
    }
    let v = &v;
    let n = v.nrows();
    let scaled = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * roots[j]);
    let s = &scaled * v.adjoint();
    let s = (&s + s.adjoint()) * C64::new(0.5, 0.0);
    ComplexMatrix::from_dmatrix(s)
}
