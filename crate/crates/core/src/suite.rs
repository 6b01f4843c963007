//! Seeded verification suites and their reports.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::besov::{besov_norm, lp_decompose, min_grid, riesz_piece_zero_excess, riesz_project, TrigPolynomial};
use crate::calculus::{
    central_difference_report, commutator_formula_residual, hs_commutator_excess, hs_differentiability_report,
    hs_lipschitz_excess, hs_report_passes, increment_residual_with, nth_derivative, polynomial_taylor_oracle,
    ContractionPath,
};
use crate::dilation::{power_dilation, unitarity_defect, verify_dilation};
use crate::divdiff::tensor_expansion;
use crate::error::{Error, Result};
use crate::funcalc::{von_neumann_residual, AnalyticFunction, GRID_SLACK};
use crate::linalg::spectral_norm;
use crate::matrix::{ComplexMatrix, C64};
use crate::opint::{doi_spectral, doi_tensor, DiagonalPolicy, DilationSpectrum, DividedDifferenceSymbol};
use crate::sampling::{any_contraction, gaussian, gaussian_matrix, random_polynomial, rng_for};
use crate::semispectral::{moment_residual, semispectral_from_dilation};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Dilation,
    Semispectral,
    Increment,
    Commutator,
    #[serde(rename = "derivative1")]
    Derivative1,
    #[serde(rename = "derivative2")]
    Derivative2,
    #[serde(rename = "derivativeN")]
    DerivativeN,
    HsLipschitz,
    HsDiff,
    Besov,
    DoiDual,
    Vn,
}

impl Suite {
    pub const ALL: [Suite; 12] = [
        Suite::Dilation,
        Suite::Semispectral,
        Suite::Increment,
        Suite::Commutator,
        Suite::Derivative1,
        Suite::Derivative2,
        Suite::DerivativeN,
        Suite::HsLipschitz,
        Suite::HsDiff,
        Suite::Besov,
        Suite::DoiDual,
        Suite::Vn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Dilation => "dilation",
            Suite::Semispectral => "semispectral",
            Suite::Increment => "increment",
            Suite::Commutator => "commutator",
            Suite::Derivative1 => "derivative1",
            Suite::Derivative2 => "derivative2",
            Suite::DerivativeN => "derivativeN",
            Suite::HsLipschitz => "hs-lipschitz",
            Suite::HsDiff => "hs-diff",
            Suite::Besov => "besov",
            Suite::DoiDual => "doi-dual",
            Suite::Vn => "vn",
        }
    }

    /// Tolerance used when the config has no override under [`Suite::name`].
    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::Dilation | Suite::Semispectral | Suite::Besov | Suite::DoiDual => 1e-9,
            Suite::Increment | Suite::Commutator | Suite::HsLipschitz => 1e-8,
            Suite::DerivativeN => 1e-10,
            // order deficits: the residual is how far the fitted order falls short
            Suite::Derivative1 | Suite::Derivative2 | Suite::HsDiff => 0.0,
            Suite::Vn => GRID_SLACK,
        }
    }

    fn tag(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u64 + 0x5100
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::parameter(format!("unknown suite '{s}'")))
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: usize,
    pub hi: usize,
}

impl IntRange {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::parameter(format!("empty range {lo}..{hi}")));
        }
        Ok(IntRange { lo, hi })
    }

    fn sample(self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.lo..=self.hi)
    }
}

impl FromStr for IntRange {
    type Err = Error;

    /// `A..B` (inclusive) or a single `A`.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::parameter(format!("bad range bound '{t}'")))
        };
        match s.split_once("..") {
            Some((a, b)) => IntRange::new(parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                IntRange::new(v, v)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub dims: IntRange,
    pub degrees: IntRange,
    pub cases: usize,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            dims: IntRange { lo: 1, hi: 6 },
            degrees: IntRange { lo: 1, hi: 10 },
            cases: 200,
            tolerances: BTreeMap::new(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cases == 0 {
            return Err(Error::parameter("cases must be at least 1"));
        }
        if self.dims.lo == 0 {
            return Err(Error::parameter("dimensions start at 1"));
        }
        if self.dims.lo > self.dims.hi || self.degrees.lo > self.degrees.hi {
            return Err(Error::parameter("ranges must be nonempty"));
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::parameter(format!("tolerance {k} = {v} is not a nonnegative number")));
        }
        Ok(())
    }

    pub fn tolerance(&self, suite: Suite) -> f64 {
        self.tolerances
            .get(suite.name())
            .copied()
            .unwrap_or_else(|| suite.default_tolerance())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: usize,
    pub dim: usize,
    pub degree: usize,
    /// First 16 hex digits of the SHA-256 of the case inputs.
    pub digest: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: Suite,
    pub config: SuiteConfig,
    pub cases: Vec<CaseRecord>,
    pub max_residual: f64,
    pub pass: bool,
    pub wall_time_ms: u64,
}

impl SuiteReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the timing field zeroed, for determinism comparisons.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.wall_time_ms = 0;
        copy.to_json()
    }
}

/// Everything a case needs to report.
struct Outcome {
    dim: usize,
    degree: usize,
    inputs: Vec<u8>,
    residual: f64,
}

struct Digest16(Vec<u8>);

impl Digest16 {
    fn new() -> Self {
        Digest16(Vec::new())
    }

    fn matrix(mut self, m: &ComplexMatrix) -> Self {
        for z in m.row_major() {
            self.0.extend(z.re.to_le_bytes());
            self.0.extend(z.im.to_le_bytes());
        }
        self
    }

    fn function(mut self, phi: &AnalyticFunction) -> Self {
        for z in phi.coefficients() {
            self.0.extend(z.re.to_le_bytes());
            self.0.extend(z.im.to_le_bytes());
        }
        self
    }

    fn number(mut self, x: f64) -> Self {
        self.0.extend(x.to_le_bytes());
        self
    }
}

fn hex16(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn path_for(rng: &mut ChaCha8Rng, dim: usize) -> Result<ContractionPath> {
    let t = any_contraction(rng, dim);
    let r = any_contraction(rng, dim);
    ContractionPath::new(t, r)
}

fn order_deficit(order: Option<f64>, min: f64) -> f64 {
    order.map_or(0.0, |p| (min - p).max(0.0))
}

fn run_case(suite: Suite, cfg: &SuiteConfig, case_id: usize) -> Result<Outcome> {
    let mut rng = rng_for(cfg.seed, &[suite.tag(), case_id as u64]);
    let dim = cfg.dims.sample(&mut rng);
    let degree = cfg.degrees.sample(&mut rng);
    let outcome = |inputs: Digest16, residual: f64| Outcome {
        dim,
        degree,
        inputs: inputs.0,
        residual,
    };
    match suite {
        Suite::Dilation => {
            let t = any_contraction(&mut rng, dim);
            let d = power_dilation(&t, degree.max(1))?;
            let r = verify_dilation(&d, &t)?.max(unitarity_defect(&d));
            Ok(outcome(Digest16::new().matrix(&t).number(degree as f64), r))
        }
        Suite::Semispectral => {
            let t = any_contraction(&mut rng, dim);
            let n = degree.max(1);
            let measure = semispectral_from_dilation(&power_dilation(&t, n)?)?;
            let ax = measure.axioms();
            let r = moment_residual(&measure, &t, n)?
                .max(ax.mass_defect)
                .max(ax.hermitian_defect)
                .max(-ax.min_eigenvalue);
            Ok(outcome(Digest16::new().matrix(&t).number(n as f64), r))
        }
        Suite::Increment => {
            let phi = random_polynomial(&mut rng, degree);
            let path = path_for(&mut rng, dim)?;
            let left = DilationSpectrum::new(path.start(), degree + 1)?;
            let right = DilationSpectrum::new(path.end(), degree + 1)?;
            let mut r = 0.0f64;
            for policy in DiagonalPolicy::ALL {
                r = r.max(increment_residual_with(&phi, &path, policy, &left, &right)?);
            }
            let digest = Digest16::new().function(&phi).matrix(path.start()).matrix(path.end());
            Ok(outcome(digest, r))
        }
        Suite::Commutator => {
            let phi = random_polynomial(&mut rng, degree);
            let t = any_contraction(&mut rng, dim);
            let q = gaussian_matrix(&mut rng, dim, dim);
            let r = commutator_formula_residual(&phi, &t, &q, DiagonalPolicy::Derivative)?;
            Ok(outcome(Digest16::new().function(&phi).matrix(&t).matrix(&q), r))
        }
        Suite::Derivative1 | Suite::Derivative2 => {
            let order = if suite == Suite::Derivative1 { 1 } else { 2 };
            let phi = random_polynomial(&mut rng, degree);
            let path = path_for(&mut rng, dim)?;
            let t = rng.gen_range(0.1..=0.9);
            let report = central_difference_report(&phi, &path, t, order)?;
            let digest = Digest16::new().function(&phi).matrix(path.start()).matrix(path.end()).number(t);
            Ok(outcome(digest, order_deficit(report.observed_order, 1.9)))
        }
        Suite::DerivativeN => {
            let degree = degree.min(8);
            let phi = random_polynomial(&mut rng, degree);
            let path = path_for(&mut rng, dim)?;
            let t = rng.gen_range(0.0..=1.0);
            let n = rng.gen_range(1..=4);
            let got = nth_derivative(&phi, &path, t, n)?;
            let oracle = polynomial_taylor_oracle(&phi, &path, t, n)?;
            let r = spectral_norm(&(&got - &oracle)) / spectral_norm(&oracle).max(1.0);
            let digest = Digest16::new()
                .function(&phi)
                .matrix(path.start())
                .matrix(path.end())
                .number(t)
                .number(n as f64);
            Ok(Outcome {
                dim,
                degree,
                inputs: digest.0,
                residual: r,
            })
        }
        Suite::HsLipschitz => {
            let phi = random_polynomial(&mut rng, degree);
            let path = path_for(&mut rng, dim)?;
            let q = gaussian_matrix(&mut rng, dim, dim);
            let r = hs_lipschitz_excess(&phi, &path)?
                .max(hs_commutator_excess(&phi, path.start(), &q)?)
                .max(0.0);
            let digest = Digest16::new().function(&phi).matrix(path.start()).matrix(path.end()).matrix(&q);
            Ok(outcome(digest, r))
        }
        Suite::HsDiff => {
            let phi = random_polynomial(&mut rng, degree);
            let path = path_for(&mut rng, dim)?;
            let report = hs_differentiability_report(&phi, &path)?;
            let mut r = order_deficit(report.observed_order, 0.95);
            if !hs_report_passes(&report, 0.95) {
                r = r.max(1.0);
            }
            Ok(outcome(Digest16::new().function(&phi).matrix(path.start()).matrix(path.end()), r))
        }
        Suite::Besov => besov_case(&mut rng, case_id, degree),
        Suite::DoiDual => {
            let phi = random_polynomial(&mut rng, degree);
            let t = any_contraction(&mut rng, dim);
            let r_ = any_contraction(&mut rng, dim);
            let q = gaussian_matrix(&mut rng, dim, dim);
            let left = DilationSpectrum::new(&t, degree.max(1))?;
            let right = DilationSpectrum::new(&r_, degree.max(1))?;
            let sym = DividedDifferenceSymbol::new(&phi, DiagonalPolicy::Derivative);
            let a = doi_spectral(|z, w| sym.eval(z, w), &left, &q, &right)?.value;
            let b = doi_tensor(&tensor_expansion(&phi, 1), &t, &q, &r_)?;
            let r = spectral_norm(&(&a - &b)) / spectral_norm(&b).max(1.0);
            Ok(outcome(Digest16::new().function(&phi).matrix(&t).matrix(&r_).matrix(&q), r))
        }
        Suite::Vn => {
            let phi = random_polynomial(&mut rng, degree);
            let t = any_contraction(&mut rng, dim);
            let r = von_neumann_residual(&phi, &t)?.max(0.0);
            Ok(outcome(Digest16::new().function(&phi).matrix(&t), r))
        }
    }
}

/// Number of leading besov cases reserved for the `‖z^m‖ = m` table.
pub const BESOV_TABLE: usize = 64;

fn besov_case(rng: &mut ChaCha8Rng, case_id: usize, degree: usize) -> Result<Outcome> {
    const INF: f64 = f64::INFINITY;
    if case_id < BESOV_TABLE {
        let m = case_id as i64 + 1;
        let phi = TrigPolynomial::monomial(m);
        let norm = besov_norm(&phi, 1.0, INF, 1.0, min_grid(&phi))?;
        return Ok(Outcome {
            dim: 1,
            degree: m as usize,
            inputs: Digest16::new().number(m as f64).0,
            residual: (norm - m as f64).abs(),
        });
    }
    let m = rng.gen_range(0..=4 * degree) as i64;
    let coeffs: Vec<C64> = (-m..=m).map(|_| gaussian(rng)).collect();
    let other: Vec<C64> = (-m..=m).map(|_| gaussian(rng)).collect();
    let phi = TrigPolynomial::new(-m, coeffs.clone())?;
    let psi = TrigPolynomial::new(-m, other)?;
    let grid = min_grid(&phi).max(min_grid(&psi)).max(64);

    let mut r = lp_decompose(&phi).reconstruct().max_abs_diff(&phi);
    for (s, p, q) in [(1.0, INF, 1.0), (2.0, INF, 1.0)] {
        let n_phi = besov_norm(&phi, s, p, q, grid)?;
        let n_psi = besov_norm(&psi, s, p, q, grid)?;
        let riesz = besov_norm(&riesz_project(&phi), s, p, q, grid)? - n_phi - riesz_piece_zero_excess(&phi, p, grid).max(0.0);
        let triangle = besov_norm(&phi.add(&psi), s, p, q, grid)? - n_phi - n_psi;
        let c = C64::new(-0.75, 1.25);
        let homogeneity = (besov_norm(&phi.scale(c), s, p, q, grid)? - c.norm() * n_phi).abs() / n_phi.max(1.0);
        r = r.max(riesz).max(triangle).max(homogeneity);
    }
    let mut digest = Digest16::new();
    for z in &coeffs {
        digest = digest.number(z.re).number(z.im);
    }
    Ok(Outcome {
        dim: 1,
        degree: m as usize,
        inputs: digest.0,
        residual: r.max(0.0),
    })
}

fn now_ms() -> u128 {
    #[cfg(not(target_arch = "wasm32"))]
    {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0)
    }
    #[cfg(target_arch = "wasm32")]
    {
        0
    }
}

/// Runs every case of a suite. Cases are independent and seeded by
/// `(seed, suite, case_id)`; records come back sorted by `case_id`.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let started = now_ms();
    let tolerance = cfg.tolerance(suite);
    let total = if suite == Suite::Besov { BESOV_TABLE + cfg.cases } else { cfg.cases };
    let mut cases = Vec::with_capacity(total);
    for case_id in 0..total {
        let record = match run_case(suite, cfg, case_id) {
            Ok(o) => CaseRecord {
                case_id,
                dim: o.dim,
                degree: o.degree,
                digest: hex16(&o.inputs),
                residual: o.residual,
                tolerance,
                pass: o.residual <= tolerance,
                error: None,
            },
            Err(e) => CaseRecord {
                case_id,
                dim: 0,
                degree: 0,
                digest: String::new(),
                residual: f64::MAX,
                tolerance,
                pass: false,
                error: Some(e.to_string()),
            },
        };
        cases.push(record);
    }
    let max_residual = cases.iter().map(|c| c.residual).fold(0.0, f64::max);
    let pass = cases.iter().all(|c| c.pass);
    Ok(SuiteReport {
        schema: SCHEMA_VERSION,
        suite,
        config: cfg.clone(),
        cases,
        max_residual,
        pass,
        wall_time_ms: (now_ms() - started) as u64,
    })
}

#[derive(Serialize)]
struct CsvRow {
    case_id: usize,
    dim: usize,
    degree: usize,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

/// One row per case: `case_id,dim,degree,residual,tolerance,pass`.
pub fn write_csv<W: std::io::Write>(report: &SuiteReport, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["case_id", "dim", "degree", "residual", "tolerance", "pass"])?;
    for c in &report.cases {
        w.serialize(CsvRow {
            case_id: c.case_id,
            dim: c.dim,
            degree: c.degree,
            residual: c.residual,
            tolerance: c.tolerance,
            pass: c.pass,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(report: &SuiteReport, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    write_csv(report, file).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => io(source),
        other => Error::Input(format!("{other:?}")),
    })
}
