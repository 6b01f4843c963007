//! Atomic semi-spectral measures of contractions.
//!
//! Compressing the spectral measure of a power dilation `U` to `H` gives a
//! finite list of circle points with PSD operator weights summing to `I`. Its
//! moments reproduce `T^n` up to the fidelity degree of the dilation.

use serde::{Deserialize, Serialize};

use crate::dilation::PowerDilation;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, principal_arg, spectral_norm, unitary_eig};
use crate::matrix::{ComplexMatrix, C64};

/// Eigenvalues closer than this (in arc length) share an atom.
pub const MERGE_ARC: f64 = 1e-8;
/// Atoms whose weight has trace below this are dropped.
const NEGLIGIBLE_TRACE: f64 = 1e-14;
/// Unitarity tolerance handed to the eigensolver.
const EIG_UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: C64,
    pub weight: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct AtomicSemiSpectralMeasure {
    atoms: Vec<Atom>,
    dim: usize,
    degree: usize,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<Atom>,
    degree: usize,
}

impl TryFrom<MeasureJson> for AtomicSemiSpectralMeasure {
    type Error = Error;

    fn try_from(json: MeasureJson) -> Result<Self> {
        AtomicSemiSpectralMeasure::new(json.atoms, json.degree)
    }
}

impl From<AtomicSemiSpectralMeasure> for MeasureJson {
    fn from(m: AtomicSemiSpectralMeasure) -> Self {
        MeasureJson {
            atoms: m.atoms,
            degree: m.degree,
        }
    }
}

/// Residuals of the measure axioms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// Smallest eigenvalue over all weights (≥ 0 up to rounding).
    pub min_eigenvalue: f64,
    /// Largest `‖w − w*‖`.
    pub hermitian_defect: f64,
    /// `‖Σ w − I‖`.
    pub mass_defect: f64,
}

impl AtomicSemiSpectralMeasure {
    /// Validates shapes only; the axioms are checked by [`Self::axioms`].
    pub fn new(atoms: Vec<Atom>, degree: usize) -> Result<Self> {
        let first = atoms.first().ok_or_else(|| Error::input("measure has no atoms"))?;
        let dim = first.weight.rows();
        for atom in &atoms {
            if !atom.weight.is_square() || atom.weight.rows() != dim {
                return Err(Error::input("atom weights must all be square of the same size"));
            }
            if !(atom.point.re.is_finite() && atom.point.im.is_finite()) {
                return Err(Error::input("atom point is not finite"));
            }
        }
        Ok(AtomicSemiSpectralMeasure { atoms, dim, degree })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn total_mass(&self) -> ComplexMatrix {
        self.atoms
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, a| acc + &a.weight)
    }

    pub fn axioms(&self) -> AxiomReport {
        let mut min_eigenvalue = f64::INFINITY;
        let mut hermitian_defect = 0.0f64;
        for atom in &self.atoms {
            hermitian_defect = hermitian_defect.max(spectral_norm(&(&atom.weight - &atom.weight.adjoint())));
            let (values, _) = hermitian_eigen(atom.weight.hermitian_part().into_dmatrix());
            min_eigenvalue = values.iter().fold(min_eigenvalue, |m, &x| m.min(x));
        }
        let mass_defect = spectral_norm(&(self.total_mass() - ComplexMatrix::identity(self.dim)));
        AxiomReport {
            min_eigenvalue,
            hermitian_defect,
            mass_defect,
        }
    }

    /// Mutable access for perturbation experiments.
    pub fn atoms_mut(&mut self) -> &mut [Atom] {
        &mut self.atoms
    }
}

fn arc_distance(a: C64, b: C64) -> f64 {
    let d = (principal_arg(a) - principal_arg(b)).abs();
    d.min(std::f64::consts::TAU - d)
}

/// Compresses the eigenprojections of the dilation's unitary to `H`.
pub fn semispectral_from_dilation(dilation: &PowerDilation) -> Result<AtomicSemiSpectralMeasure> {
    let eig = unitary_eig(dilation.unitary(), EIG_UNITARY_TOL)?;
    let d = dilation.base_dim();
    let v = &eig.eigenvectors;

    // eigenvalues arrive sorted by argument; chain neighbours into groups
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for j in 0..eig.dim() {
        match groups.last_mut() {
            Some(g) if arc_distance(eig.eigenvalues[*g.last().unwrap()], eig.eigenvalues[j]) < MERGE_ARC => {
                g.push(j)
            }
            _ => groups.push(vec![j]),
        }
    }
    if groups.len() > 1 {
        let first = groups[0][0];
        let last_group = groups.last().unwrap();
        if arc_distance(eig.eigenvalues[*last_group.last().unwrap()], eig.eigenvalues[first]) < MERGE_ARC {
            let tail = groups.pop().unwrap();
            groups[0].extend(tail);
        }
    }

    let mut atoms = Vec::with_capacity(groups.len());
    for group in groups {
        let mut weight = ComplexMatrix::zeros(d, d);
        let mut point_acc = C64::new(0.0, 0.0);
        for &j in &group {
            let col: Vec<C64> = (0..d).map(|i| v[(i, j)]).collect();
            let rank_one = ComplexMatrix::from_fn(d, d, |r, c| col[r] * col[c].conj());
            let mass: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            point_acc += eig.eigenvalues[j] * mass.max(1e-300);
            weight = weight + rank_one;
        }
        if weight.trace().re <= NEGLIGIBLE_TRACE {
            continue;
        }
        let point = point_acc / point_acc.norm();
        atoms.push(Atom {
            point,
            weight: weight.hermitian_part(),
        });
    }
    AtomicSemiSpectralMeasure::new(atoms, dilation.degree())
}

/// `Σ f(point)·weight`.
pub fn integrate(measure: &AtomicSemiSpectralMeasure, f: impl Fn(C64) -> C64) -> Result<ComplexMatrix> {
    let d = measure.dim;
    let mut acc = ComplexMatrix::zeros(d, d);
    for atom in &measure.atoms {
        let value = f(atom.point);
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::Evaluation(format!("integrand is not finite at {}", atom.point)));
        }
        acc = acc + atom.weight.scale(value);
    }
    Ok(acc)
}

/// `max_{0≤n≤n_max} ‖∫ζ^n dE − T^n‖`.
pub fn moment_residual(measure: &AtomicSemiSpectralMeasure, t: &ComplexMatrix, n_max: usize) -> Result<f64> {
    if n_max > measure.degree {
        return Err(Error::parameter(format!(
            "moment order {n_max} exceeds the fidelity degree {}",
            measure.degree
        )));
    }
    if !t.is_square() || t.rows() != measure.dim {
        return Err(Error::input("T does not match the measure dimension"));
    }
    let mut t_pow = ComplexMatrix::identity(measure.dim);
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        if n > 0 {
            t_pow = &t_pow * t;
        }
        let moment = integrate(measure, |z| z.powu(n as u32))?;
        worst = worst.max(spectral_norm(&(moment - &t_pow)));
    }
    Ok(worst)
}
