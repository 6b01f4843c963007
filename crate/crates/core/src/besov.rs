//! Littlewood–Paley pieces and Besov norms of trigonometric polynomials.
//!
//! The weight `w` is the canonical piecewise-linear bump: 0 at 1/2, 1 at 1
//! and 0 at 2. Piece `n ≥ 1` carries `w(k/2ⁿ)·φ̂(k)` for `k > 0`, piece 0 is
//! `z̄ + 1 + z`, and the conjugate pieces mirror onto negative frequencies.
//! At dyadic points `w(k/2ⁿ)` has denominator `2ⁿ`, so the weights are exact
//! in double precision for `n ≤ 52`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcalc::{circle_point, AnalyticFunction, GRID_OVERSAMPLING};
use crate::matrix::{C64, ZERO};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrigJson", into = "TrigJson")]
pub struct TrigPolynomial {
    min_k: i64,
    coeffs: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct TrigJson {
    min_k: i64,
    coeffs: Vec<C64>,
}

impl TryFrom<TrigJson> for TrigPolynomial {
    type Error = Error;

    fn try_from(json: TrigJson) -> Result<Self> {
        TrigPolynomial::new(json.min_k, json.coeffs)
    }
}

impl From<TrigPolynomial> for TrigJson {
    fn from(p: TrigPolynomial) -> Self {
        TrigJson {
            min_k: p.min_k,
            coeffs: p.coeffs,
        }
    }
}

impl TrigPolynomial {
    /// Coefficient `i` belongs to frequency `min_k + i`.
    pub fn new(min_k: i64, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::input("non-finite Fourier coefficient"));
        }
        Ok(TrigPolynomial { min_k, coeffs })
    }

    pub fn zero() -> Self {
        TrigPolynomial { min_k: 0, coeffs: Vec::new() }
    }

    /// `z^k`, negative `k` allowed.
    pub fn monomial(k: i64) -> Self {
        TrigPolynomial {
            min_k: k,
            coeffs: vec![C64::new(1.0, 0.0)],
        }
    }

    pub fn from_analytic(phi: &AnalyticFunction) -> Self {
        TrigPolynomial {
            min_k: 0,
            coeffs: phi.coefficients().to_vec(),
        }
    }

    pub fn min_k(&self) -> i64 {
        self.min_k
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Frequencies with stored coefficients.
    pub fn frequencies(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.coeffs.len() as i64).map(move |i| self.min_k + i)
    }

    pub fn coefficient(&self, k: i64) -> C64 {
        let i = k - self.min_k;
        if i < 0 {
            return ZERO;
        }
        self.coeffs.get(i as usize).copied().unwrap_or(ZERO)
    }

    /// `M = max |k|` over nonzero coefficients.
    pub fn max_frequency(&self) -> u64 {
        self.frequencies()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != ZERO)
            .map(|(k, _)| k.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn is_analytic(&self) -> bool {
        self.frequencies().zip(&self.coeffs).all(|(k, c)| k >= 0 || *c == ZERO)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.frequencies()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != ZERO)
            .map(|(k, &c)| c * z.powi(k as i32))
            .sum()
    }

    pub fn scale(&self, s: C64) -> TrigPolynomial {
        TrigPolynomial {
            min_k: self.min_k,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Coefficient-wise `Σ p_i`.
    pub fn sum<'a>(parts: impl IntoIterator<Item = &'a TrigPolynomial>) -> TrigPolynomial {
        let parts: Vec<&TrigPolynomial> = parts.into_iter().filter(|p| !p.coeffs.is_empty()).collect();
        if parts.is_empty() {
            return TrigPolynomial::zero();
        }
        let lo = parts.iter().map(|p| p.min_k).min().unwrap();
        let hi = parts.iter().map(|p| p.min_k + p.coeffs.len() as i64 - 1).max().unwrap();
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for p in parts {
            for (k, &c) in p.frequencies().zip(&p.coeffs) {
                coeffs[(k - lo) as usize] += c;
            }
        }
        TrigPolynomial { min_k: lo, coeffs }
    }

    pub fn add(&self, other: &TrigPolynomial) -> TrigPolynomial {
        TrigPolynomial::sum([self, other])
    }

    /// Largest coefficient gap.
    pub fn max_abs_diff(&self, other: &TrigPolynomial) -> f64 {
        let lo = self.min_k.min(other.min_k);
        let hi = (self.min_k + self.coeffs.len() as i64).max(other.min_k + other.coeffs.len() as i64);
        (lo..hi)
            .map(|k| (self.coefficient(k) - other.coefficient(k)).norm())
            .fold(0.0, f64::max)
    }

    /// `(1/G Σ |p(ζ_j)|^p)^{1/p}` on `G` equispaced points, max for `p = ∞`.
    pub fn lp_norm(&self, p: f64, grid: usize) -> f64 {
        let table: Vec<C64> = (0..grid).map(|j| circle_point(j, grid)).collect();
        let g = grid as i64;
        let terms: Vec<(i64, C64)> = self
            .frequencies()
            .zip(self.coeffs.iter().copied())
            .filter(|(_, c)| *c != ZERO)
            .collect();
        // ζ_j^k is the grid point with index j·k mod G
        let values = (0..g).map(|j| {
            terms
                .iter()
                .map(|&(k, c)| c * table[(j * k).rem_euclid(g) as usize])
                .sum::<C64>()
                .norm()
        });
        if p.is_infinite() {
            values.fold(0.0, f64::max)
        } else {
            (values.map(|v| v.powf(p)).sum::<f64>() / grid as f64).powf(1.0 / p)
        }
    }
}

/// `w(x)`: 0 off `[1/2, 2]`, linear up on `[1/2, 1]` and down on `[1, 2]`.
pub fn w_weight(x: f64) -> f64 {
    if (0.5..=1.0).contains(&x) {
        2.0 * x - 1.0
    } else if x > 1.0 && x <= 2.0 {
        2.0 - x
    } else {
        0.0
    }
}

/// Numerator of `w(k/2ⁿ)` over the denominator `2ⁿ`, in integers.
pub fn dyadic_weight(k: u64, n: u32) -> u128 {
    let k = k as u128;
    let p = 1u128 << n;
    if 2 * k >= p && k <= p {
        2 * k - p
    } else if k > p && k <= 2 * p {
        2 * p - k
    } else {
        0
    }
}

/// Exact check that the piece weights of frequency `k` sum to one.
pub fn partition_of_unity_exact(k: u64) -> bool {
    let top = 64 - k.max(1).leading_zeros() + 1;
    if k <= 1 {
        return (1..=top).all(|n| dyadic_weight(k, n) == 0 || k == 0);
    }
    // Σ_n num_n / 2ⁿ = 1  ⇔  Σ_n num_n · 2^{top−n} = 2^top
    let total: u128 = (1..=top).map(|n| dyadic_weight(k, n) << (top - n)).sum();
    total == 1u128 << top
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpDecomposition {
    /// `φ * W_n` for `n ≥ 0`.
    pub analytic_pieces: Vec<TrigPolynomial>,
    /// `φ * W_n^#` for `n ≥ 1`; entry `i` is piece `n = i + 1`.
    pub antianalytic_pieces: Vec<TrigPolynomial>,
}

impl LpDecomposition {
    pub fn reconstruct(&self) -> TrigPolynomial {
        TrigPolynomial::sum(self.analytic_pieces.iter().chain(&self.antianalytic_pieces))
    }

    /// Pieces with their dyadic index, analytic first.
    pub fn indexed(&self) -> impl Iterator<Item = (u32, &TrigPolynomial)> {
        self.analytic_pieces
            .iter()
            .enumerate()
            .map(|(n, p)| (n as u32, p))
            .chain(self.antianalytic_pieces.iter().enumerate().map(|(i, p)| (i as u32 + 1, p)))
    }
}

fn floor_log2(m: u64) -> u32 {
    63 - m.leading_zeros()
}

/// `x` rounded to a multiple of `ulp(c)`, so that `c − x` is exact.
fn snap(x: f64, c: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let a = c.abs();
    let ulp = f64::from_bits(a.to_bits() + 1) - a;
    (x / ulp).round() * ulp
}

/// Splits `c` as `a + b` with `a ≈ w·c`, `b ≈ (1 − w)·c` and `a + b = c`
/// exactly in floating point.
fn split(c: C64, w: f64) -> (C64, C64) {
    let a = C64::new(snap(c.re * w, c.re), snap(c.im * w, c.im));
    (a, c - a)
}

/// Frequency `|k| ∈ (2^j, 2^{j+1})` lives in pieces `j` and `j + 1`; powers
/// of two live in piece `j` only.
pub fn lp_decompose(phi: &TrigPolynomial) -> LpDecomposition {
    let m = phi.max_frequency();
    let top = if m < 2 { 0 } else { floor_log2(m) + 1 };
    let empty = TrigPolynomial {
        min_k: phi.min_k,
        coeffs: vec![ZERO; phi.coeffs.len()],
    };
    let mut analytic_pieces = vec![empty.clone(); top as usize + 1];
    let mut antianalytic_pieces = vec![empty; top as usize];
    for (i, (k, &c)) in phi.frequencies().zip(&phi.coeffs).enumerate() {
        if c == ZERO {
            continue;
        }
        let abs = k.unsigned_abs();
        if abs <= 1 {
            analytic_pieces[0].coeffs[i] = c;
            continue;
        }
        let j = floor_log2(abs);
        let mut put = |n: u32, v: C64| {
            if k > 0 {
                analytic_pieces[n as usize].coeffs[i] = v;
            } else {
                antianalytic_pieces[n as usize - 1].coeffs[i] = v;
            }
        };
        if abs == 1 << j {
            put(j, c);
        } else {
            let w = dyadic_weight(abs, j) as f64 / (1u64 << j) as f64;
            let (a, b) = split(c, w);
            put(j, a);
            put(j + 1, b);
        }
    }
    LpDecomposition {
        analytic_pieces,
        antianalytic_pieces,
    }
}

fn check_exponent(name: &str, x: f64) -> Result<()> {
    if !(x >= 1.0) {
        return Err(Error::parameter(format!("{name} must lie in [1, ∞], got {x}")));
    }
    Ok(())
}

/// Smallest admissible grid for [`besov_norm`].
pub fn min_grid(phi: &TrigPolynomial) -> usize {
    GRID_OVERSAMPLING * (phi.max_frequency() as usize + 1)
}

/// `‖{2^{ns} ‖φ * W_n‖_{L^p}}‖_{ℓ^q}` over all analytic and conjugate pieces.
pub fn besov_norm(phi: &TrigPolynomial, s: f64, p: f64, q: f64, grid: usize) -> Result<f64> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    if !s.is_finite() {
        return Err(Error::parameter("smoothness s must be finite"));
    }
    let need = min_grid(phi);
    if grid < need {
        return Err(Error::parameter(format!("grid {grid} is below the minimum {need}")));
    }
    let terms: Vec<f64> = lp_decompose(phi)
        .indexed()
        .map(|(n, piece)| {
            if piece.coeffs.iter().all(|c| *c == ZERO) {
                0.0
            } else {
                2f64.powf(n as f64 * s) * piece.lp_norm(p, grid)
            }
        })
        .collect();
    Ok(if q.is_infinite() {
        terms.into_iter().fold(0.0, f64::max)
    } else {
        terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    })
}

/// Drops the negative frequencies.
pub fn riesz_project(phi: &TrigPolynomial) -> TrigPolynomial {
    if phi.min_k >= 0 {
        return phi.clone();
    }
    let skip = (-phi.min_k) as usize;
    TrigPolynomial {
        min_k: 0,
        coeffs: phi.coeffs.iter().skip(skip).copied().collect(),
    }
}

/// `‖ℙ₊(φ * W_0)‖_{L^p} − ‖φ * W_0‖_{L^p}`. Every other analytic piece is
/// left alone by [`riesz_project`] and every conjugate piece is removed, so
/// for `q = 1` this bounds how much the Besov norm can grow under `ℙ₊`.
pub fn riesz_piece_zero_excess(phi: &TrigPolynomial, p: f64, grid: usize) -> f64 {
    let zeroth = &lp_decompose(phi).analytic_pieces[0];
    riesz_project(zeroth).lp_norm(p, grid) - zeroth.lp_norm(p, grid)
}

/// `(min, max)` over the radii of `(1 − r)^{n−s} ‖φ^{(n)}(r·)‖_{L^p}` divided by
/// the `B^s_{p∞}` norm of `φ`.
pub fn analytic_characterization_ratio(
    phi: &TrigPolynomial,
    s: f64,
    n: u32,
    p: f64,
    radii: &[f64],
    grid: usize,
) -> Result<(f64, f64)> {
    if !phi.is_analytic() {
        return Err(Error::Precondition("function has negative frequencies".into()));
    }
    if n as f64 <= s {
        return Err(Error::parameter(format!("derivative order {n} must exceed s = {s}")));
    }
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::parameter("radii must be a nonempty subset of (0, 1)"));
    }
    let norm = besov_norm(phi, s, p, f64::INFINITY, grid)?;
    if norm == 0.0 {
        return Err(Error::parameter("zero function has no ratio"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &r in radii {
        // φ^{(n)}(rζ) = Σ_k k(k−1)⋯(k−n+1) c_k r^{k−n} ζ^{k−n}
        let mut coeffs = Vec::new();
        for (k, &c) in phi.frequencies().zip(&phi.coeffs) {
            if k < n as i64 {
                continue;
            }
            let falling: f64 = (0..n as i64).map(|j| (k - j) as f64).product();
            let j = (k - n as i64) as usize;
            if coeffs.len() <= j {
                coeffs.resize(j + 1, ZERO);
            }
            coeffs[j] += c * falling * r.powi(j as i32);
        }
        let deriv = TrigPolynomial { min_k: 0, coeffs };
        let value = (1.0 - r).powf(n as f64 - s) * deriv.lp_norm(p, grid) / norm;
        lo = lo.min(value);
        hi = hi.max(value);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{gaussian, rng_for};
    use rand::Rng;

    const INF: f64 = f64::INFINITY;

    fn random_trig(rng: &mut impl Rng, max_m: i64) -> TrigPolynomial {
        let m = rng.gen_range(0..=max_m);
        let coeffs = (-m..=m).map(|_| gaussian(rng)).collect();
        TrigPolynomial::new(-m, coeffs).unwrap()
    }

    #[test]
    fn weight_values() {
        assert_eq!(w_weight(1.0), 1.0);
        assert_eq!(w_weight(1.5), 0.5);
        assert_eq!(w_weight(0.75), 0.5);
        for x in [0.5, 2.0, 3.0, 0.1, -1.0] {
            assert_eq!(w_weight(x), 0.0);
        }
        for k in 1..200u64 {
            for n in 0..10u32 {
                let exact = dyadic_weight(k, n) as f64 / (1u64 << n) as f64;
                assert_eq!(exact, w_weight(k as f64 / (1u64 << n) as f64));
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        for k in 0..=(1u64 << 16) {
            assert!(partition_of_unity_exact(k), "k = {k}");
        }
    }

    #[test]
    fn decomposition_examples() {
        let d = lp_decompose(&TrigPolynomial::monomial(1));
        assert_eq!(d.analytic_pieces[0].coefficient(1), C64::new(1.0, 0.0));
        assert!(d.analytic_pieces[1..].iter().all(|p| p.coefficient(1) == ZERO));

        let d = lp_decompose(&TrigPolynomial::monomial(4));
        for (n, p) in d.analytic_pieces.iter().enumerate() {
            let expected = if n == 2 { 1.0 } else { 0.0 };
            assert_eq!(p.coefficient(4).re, expected);
        }

        let d = lp_decompose(&TrigPolynomial::monomial(3));
        for (n, p) in d.analytic_pieces.iter().enumerate() {
            let expected = if n == 1 || n == 2 { 0.5 } else { 0.0 };
            assert_eq!(p.coefficient(3).re, expected);
        }
        assert_eq!(d.reconstruct().max_abs_diff(&TrigPolynomial::monomial(3)), 0.0);
    }

    #[test]
    fn reconstruction_is_exact() {
        let mut rng = rng_for(1, &[]);
        for _ in 0..100 {
            let phi = random_trig(&mut rng, 80);
            let d = lp_decompose(&phi);
            assert_eq!(d.reconstruct().max_abs_diff(&phi), 0.0);
        }
    }

    #[test]
    fn monomial_norms() {
        for m in 1..=64i64 {
            let phi = TrigPolynomial::monomial(m);
            let norm = besov_norm(&phi, 1.0, INF, 1.0, min_grid(&phi)).unwrap();
            assert!((norm - m as f64).abs() < 1e-9, "m = {m}: {norm}");
        }
    }

    #[test]
    fn constant_and_homogeneity() {
        let c = TrigPolynomial::new(0, vec![C64::new(3.0, -4.0)]).unwrap();
        assert!((besov_norm(&c, 1.0, INF, 1.0, 64).unwrap() - 5.0).abs() < 1e-12);
        let mut rng = rng_for(2, &[]);
        let phi = random_trig(&mut rng, 12);
        let g = min_grid(&phi);
        let s = C64::new(-1.5, 2.0);
        for (sm, p, q) in [(1.0, INF, 1.0), (0.5, 2.0, 2.0), (2.0, 1.0, INF)] {
            let a = besov_norm(&phi.scale(s), sm, p, q, g).unwrap();
            let b = s.norm() * besov_norm(&phi, sm, p, q, g).unwrap();
            assert!((a - b).abs() < 1e-9 * b);
        }
    }

    #[test]
    fn triangle_and_q_monotonicity() {
        let mut rng = rng_for(3, &[]);
        for _ in 0..50 {
            let a = random_trig(&mut rng, 20);
            let b = random_trig(&mut rng, 20);
            let sum = a.add(&b);
            let g = min_grid(&sum).max(min_grid(&a)).max(min_grid(&b));
            for (s, p) in [(1.0, INF), (0.5, 2.0), (1.5, 1.0)] {
                let n = |f: &TrigPolynomial, q: f64| besov_norm(f, s, p, q, g).unwrap();
                assert!(n(&sum, 1.0) <= n(&a, 1.0) + n(&b, 1.0) + 1e-9);
                let qs = [1.0, 1.5, 2.0, 4.0, INF];
                for w in qs.windows(2) {
                    assert!(n(&a, w[1]) <= n(&a, w[0]) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn riesz_projection() {
        let p = TrigPolynomial::new(-1, vec![C64::new(1.0, 0.0); 3]).unwrap();
        let proj = riesz_project(&p);
        assert_eq!(proj.min_k(), 0);
        assert_eq!(proj.coeffs(), &[C64::new(1.0, 0.0); 2]);
        let a = TrigPolynomial::from_analytic(&AnalyticFunction::from_real(&[1.0, 2.0]));
        assert_eq!(riesz_project(&a), a);

        let mut rng = rng_for(4, &[]);
        for _ in 0..100 {
            let phi = random_trig(&mut rng, 24);
            let g = min_grid(&phi);
            for (s, p, q) in [(1.0, INF, 1.0), (2.0, INF, 1.0)] {
                let lhs = besov_norm(&riesz_project(&phi), s, p, q, g).unwrap();
                let rhs = besov_norm(&phi, s, p, q, g).unwrap();
                assert!(lhs <= rhs + riesz_piece_zero_excess(&phi, p, g) + 1e-9);
            }
        }
    }

    #[test]
    fn riesz_can_grow_the_zeroth_piece() {
        // z̄/2 + 2 − 2z has sup 5/√2 while 2 − 2z has sup 4
        let phi = TrigPolynomial::new(-1, vec![C64::new(0.5, 0.0), C64::new(2.0, 0.0), C64::new(-2.0, 0.0)]).unwrap();
        let g = 4096;
        let before = besov_norm(&phi, 1.0, INF, 1.0, g).unwrap();
        let after = besov_norm(&riesz_project(&phi), 1.0, INF, 1.0, g).unwrap();
        assert!((before - 2.5 * 2f64.sqrt()).abs() < 1e-6);
        assert!((after - 4.0).abs() < 1e-12);
        assert!((after - before - riesz_piece_zero_excess(&phi, INF, g)).abs() < 1e-12);
    }

    #[test]
    fn grid_and_parameter_errors() {
        let phi = TrigPolynomial::monomial(10);
        assert!(matches!(besov_norm(&phi, 1.0, INF, 1.0, 100), Err(Error::Parameter(_))));
        assert!(besov_norm(&phi, 1.0, 0.5, 1.0, 704).is_err());
        assert!(besov_norm(&phi, 1.0, INF, f64::NAN, 704).is_err());
    }

    #[test]
    fn characterization_ratio() {
        let radii: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
        let z = TrigPolynomial::monomial(1);
        assert_eq!(analytic_characterization_ratio(&z, 1.0, 2, INF, &radii, 128).unwrap(), (0.0, 0.0));

        let z4 = TrigPolynomial::monomial(4);
        let (lo, hi) = analytic_characterization_ratio(&z4, 1.0, 2, INF, &[0.5], 320).unwrap();
        assert!(lo > 0.0 && lo == hi);

        let uppers: Vec<f64> = (2..=32)
            .map(|m| {
                let phi = TrigPolynomial::monomial(m);
                analytic_characterization_ratio(&phi, 1.0, 2, INF, &radii, min_grid(&phi)).unwrap().1
            })
            .collect();
        let max = uppers.iter().cloned().fold(0.0, f64::max);
        let min = uppers.iter().cloned().fold(INF, f64::min);
        assert!(max / min < 100.0);

        assert!(analytic_characterization_ratio(&TrigPolynomial::monomial(-1), 1.0, 2, INF, &[0.5], 128).is_err());
        assert!(analytic_characterization_ratio(&z4, 2.0, 2, INF, &[0.5], 320).is_err());
        assert!(analytic_characterization_ratio(&z4, 1.0, 2, INF, &[1.0], 320).is_err());
    }

    #[test]
    fn json_shape() {
        let p = TrigPolynomial::new(-1, vec![C64::new(1.0, 0.0), ZERO, C64::new(0.0, 1.0)]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"min_k":-1,"coeffs":[[1.0,0.0],[0.0,0.0],[0.0,1.0]]}"#);
        assert_eq!(serde_json::from_str::<TrigPolynomial>(&text).unwrap(), p);
    }
}
