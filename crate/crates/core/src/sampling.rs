//! Seeded generators for random contractions, operators and polynomials.
//!
//! Every generator is a pure function of its arguments: the RNG stream is
//! derived from `(seed, dim, tag)` so the same call always returns the same
//! matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::funcalc::AnalyticFunction;
use crate::linalg::spectral_norm;
use crate::matrix::{ComplexMatrix, C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContractionMode {
    /// Gaussian scaled to norm at most 0.9.
    Strict,
    /// Gaussian scaled to norm exactly 1.
    Boundary,
    /// Orthonormalized Gaussian.
    Unitary,
}

impl ContractionMode {
    pub const ALL: [ContractionMode; 3] = [Self::Strict, Self::Boundary, Self::Unitary];

    fn tag(self) -> u64 {
        match self {
            Self::Strict => 1,
            Self::Boundary => 2,
            Self::Unitary => 3,
        }
    }
}

/// splitmix64 finalizer, used to mix seeds with call-site tags.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}

pub fn rng_for(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

pub fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let entries: Vec<C64> = (0..rows * cols).map(|_| gaussian(rng)).collect();
    ComplexMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j])
}

/// Modified Gram–Schmidt on the columns of a Gaussian matrix.
pub fn unitary_from(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    loop {
        let g = gaussian_matrix(rng, dim, dim);
        let mut cols: Vec<Vec<C64>> = (0..dim).map(|j| g.column(j)).collect();
        let mut ok = true;
        for j in 0..dim {
            for k in 0..j {
                let dot: C64 = (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                for i in 0..dim {
                    let v = cols[k][i];
                    cols[j][i] -= dot * v;
                }
            }
            // second pass keeps orthogonality at machine precision
            for k in 0..j {
                let dot: C64 = (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                for i in 0..dim {
                    let v = cols[k][i];
                    cols[j][i] -= dot * v;
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for z in cols[j].iter_mut() {
                *z /= norm;
            }
        }
        if ok {
            return ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i]);
        }
    }
}

pub fn random_contraction(seed: u64, dim: usize, mode: ContractionMode) -> ComplexMatrix {
    let mut rng = rng_for(seed, &[0xC0, dim as u64, mode.tag()]);
    contraction_from(&mut rng, dim, mode)
}

pub fn contraction_from(rng: &mut impl Rng, dim: usize, mode: ContractionMode) -> ComplexMatrix {
    match mode {
        ContractionMode::Unitary => unitary_from(rng, dim),
        ContractionMode::Strict | ContractionMode::Boundary => {
            let g = gaussian_matrix(rng, dim, dim);
            let s = spectral_norm(&g);
            let factor = match mode {
                ContractionMode::Strict => 0.9 / s.max(1.0),
                _ => 1.0 / s,
            };
            g.scale_real(factor)
        }
    }
}

/// Contraction with a randomly chosen mode, weighted towards strict ones.
pub fn any_contraction(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let mode = match rng.gen_range(0..6) {
        0 => ContractionMode::Boundary,
        1 => ContractionMode::Unitary,
        _ => ContractionMode::Strict,
    };
    contraction_from(rng, dim, mode)
}

/// Polynomial with Gaussian coefficients of exact degree `degree`.
pub fn random_polynomial(rng: &mut impl Rng, degree: usize) -> AnalyticFunction {
    let mut coeffs: Vec<C64> = (0..=degree).map(|_| gaussian(rng)).collect();
    if coeffs[degree] == ZERO {
        coeffs[degree] = C64::new(1.0, 0.0);
    }
    AnalyticFunction::new(coeffs, format!("random degree {degree}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_contraction, operator_norm};

    #[test]
    fn unitary_mode_is_unitary() {
        for dim in 1..=6 {
            let u = random_contraction(7, dim, ContractionMode::Unitary);
            assert!(is_contraction(&u, 1e-12).unwrap());
            let defect = &u.adjoint() * &u - ComplexMatrix::identity(dim);
            assert!(operator_norm(&defect).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn strict_and_boundary_norms() {
        for dim in 1..=6 {
            let s = random_contraction(11, dim, ContractionMode::Strict);
            assert!(operator_norm(&s).unwrap() <= 0.9 + 1e-12);
            let b = random_contraction(11, dim, ContractionMode::Boundary);
            assert!((operator_norm(&b).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        for mode in ContractionMode::ALL {
            assert_eq!(random_contraction(42, 4, mode), random_contraction(42, 4, mode));
        }
        assert_ne!(
            random_contraction(42, 4, ContractionMode::Strict),
            random_contraction(43, 4, ContractionMode::Strict)
        );
    }
}
