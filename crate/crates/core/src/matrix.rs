//! Dense complex matrices.
//!
//! [`ComplexMatrix`] is a thin newtype over `nalgebra::DMatrix<Complex64>`
//! that guarantees finite entries at every construction boundary and carries
//! the JSON interchange format `{"rows": r, "cols": c, "data": [[re, im], ...]}`
//! (row-major).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix(DMatrix<C64>);

/// Wire form of a matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(json: MatrixJson) -> Result<Self> {
        let entries = json.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::new(json.rows, json.cols, entries)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        let data = m.row_major().into_iter().map(|z| [z.re, z.im]).collect();
        MatrixJson {
            rows: m.rows(),
            cols: m.cols(),
            data,
        }
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::input(format!("matrix shape {rows}x{cols} has a zero dimension")));
        }
        if entries.len() != rows * cols {
            return Err(Error::input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let m = ComplexMatrix(DMatrix::from_row_slice(rows, cols, &entries));
        m.ensure_finite()?;
        Ok(m)
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::input("matrix has a zero dimension"));
        }
        let m = ComplexMatrix(m);
        m.ensure_finite()?;
        Ok(m)
    }

    /// Real row-major entries, convenient for tests and literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::input("ragged rows"));
        }
        let entries = rows.iter().flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0))).collect();
        ComplexMatrix::new(r, c, entries)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::input("ragged rows"));
        }
        ComplexMatrix::new(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        ComplexMatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix(DMatrix::identity(n, n))
    }

    pub fn scalar(z: C64) -> Self {
        ComplexMatrix(DMatrix::from_element(1, 1, z))
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        ComplexMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        ComplexMatrix::diag(&v)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::input("matrix has non-finite entries"))
        }
    }

    pub fn ensure_square(&self, what: &str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::input(format!("{what} must be square, got {}x{}", self.rows(), self.cols())))
        }
    }

    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn scale(&self, z: C64) -> Self {
        ComplexMatrix(&self.0 * z)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Non-negative integer power by repeated squaring.
    pub fn pow(&self, n: u32) -> Self {
        assert!(self.is_square(), "pow needs a square matrix");
        let mut result = ComplexMatrix::identity(self.rows());
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// `[I, A, A², …, A^max]`.
    pub fn powers(&self, max: usize) -> Vec<Self> {
        let mut out = Vec::with_capacity(max + 1);
        out.push(ComplexMatrix::identity(self.rows()));
        for k in 1..=max {
            let next = &out[k - 1] * self;
            out.push(next);
        }
        out
    }

    pub fn block(&self, row: usize, col: usize, nrows: usize, ncols: usize) -> Self {
        ComplexMatrix(self.0.view((row, col), (nrows, ncols)).into_owned())
    }

    pub fn set_block(&mut self, row: usize, col: usize, b: &ComplexMatrix) {
        self.0.view_mut((row, col), (b.rows(), b.cols())).copy_from(&b.0);
    }

    /// Leading `d×d` block.
    pub fn leading(&self, d: usize) -> Self {
        self.block(0, 0, d, d)
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(self.0.component_mul(&other.0))
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        (&self.0 - &other.0).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Hermitian part `(M + M*)/2`.
    pub fn hermitian_part(&self) -> Self {
        ComplexMatrix((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| *z == ZERO)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<'a, 'b> $tr<&'b ComplexMatrix> for &'a ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: &'b ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(&self.0 $op &rhs.0)
            }
        }

        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op rhs.0)
            }
        }

        impl<'b> $tr<&'b ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: &'b ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-self.0)
    }
}
