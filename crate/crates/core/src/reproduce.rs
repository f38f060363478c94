//! Reference computations with computed-versus-expected checks.

use serde::{Deserialize, Serialize};

use crate::birth_death::{
    bd_theorem_report, doubling_schedule, eigen_convergence, entrance_check, gap_identity_check, Poisson,
    PoissonAccelerated, RateFamily, Verdict,
};
use crate::bounds::{path_bound, spectral_bound, PathChoice};
use crate::error::{Error, Result};
use crate::generator::{build_rho_chain, AbsorbingGenerator, Transition};
use crate::simulate::{sandwich_experiment, SANDWICH_SLACK};
use crate::spectral::{dirichlet_eigenpair, full_spectrum_with_minors};

pub const CASES: [&str; 7] = [
    "rho1-amplitude",
    "rho-gt1-amplitude",
    "rho-gt1-lambda0",
    "golden-ratio",
    "sandwich-demo",
    "bd-poisson",
    "bd-accelerated",
];

pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;
pub const GOLDEN_SPECTRAL_BOUND: f64 = 1.894_427_190_999_916;
pub const SANDWICH_TIMES: [f64; 4] = [0.1, 1.0, 5.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Rule {
    /// `|computed - expected| <= tolerance`.
    Absolute,
    /// `|computed/expected - 1| <= tolerance`.
    Relative,
    /// `computed <= expected`.
    AtMost,
    /// `computed >= expected`.
    AtLeast,
    InRange { lo: f64, hi: f64 },
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub computed: Option<f64>,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(flatten)]
    pub rule: Rule,
    pub passed: bool,
}

impl Check {
    pub fn absolute(name: impl Into<String>, computed: f64, expected: f64, tol: f64) -> Self {
        let passed = (computed - expected).abs() <= tol;
        Self { name: name.into(), computed: Some(computed), expected: Some(expected), tolerance: Some(tol), rule: Rule::Absolute, passed }
    }

    pub fn relative(name: impl Into<String>, computed: f64, expected: f64, tol: f64) -> Self {
        let passed = (computed / expected - 1.0).abs() <= tol;
        Self { name: name.into(), computed: Some(computed), expected: Some(expected), tolerance: Some(tol), rule: Rule::Relative, passed }
    }

    pub fn at_most(name: impl Into<String>, computed: f64, limit: f64) -> Self {
        Self { name: name.into(), computed: Some(computed), expected: Some(limit), tolerance: None, rule: Rule::AtMost, passed: computed <= limit }
    }

    pub fn at_least(name: impl Into<String>, computed: f64, limit: f64) -> Self {
        Self { name: name.into(), computed: Some(computed), expected: Some(limit), tolerance: None, rule: Rule::AtLeast, passed: computed >= limit }
    }

    pub fn in_range(name: impl Into<String>, computed: f64, lo: f64, hi: f64) -> Self {
        let passed = (lo..=hi).contains(&computed);
        Self { name: name.into(), computed: Some(computed), expected: None, tolerance: None, rule: Rule::InRange { lo, hi }, passed }
    }

    pub fn holds(name: impl Into<String>, passed: bool) -> Self {
        Self { name: name.into(), computed: None, expected: None, tolerance: None, rule: Rule::Holds, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: String,
    pub description: String,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl CaseReport {
    fn new(case: &str, description: &str, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { case: case.into(), description: description.into(), checks, passed }
    }
}

pub fn golden_generator() -> AbsorbingGenerator {
    AbsorbingGenerator::new(2, &[Transition::new(0, 1, 1.0), Transition::new(1, 0, 1.0)], &[(0, 1.0)])
        .expect("golden instance is valid")
}

/// `½ (ρ+1)(ρ-1)² ρ^{-(N+1)}`.
pub fn rho_lambda0_asymptote(rho: f64, n: usize) -> f64 {
    0.5 * (rho + 1.0) * (rho - 1.0).powi(2) * rho.powi(-(n as i32 + 1))
}

pub fn reproduce(case: &str) -> Result<CaseReport> {
    match case {
        "rho1-amplitude" => rho1_amplitude(),
        "rho-gt1-amplitude" => rho_gt1_amplitude(),
        "rho-gt1-lambda0" => rho_gt1_lambda0(),
        "golden-ratio" => golden_ratio(),
        "sandwich-demo" => sandwich_demo(),
        "bd-poisson" => bd_poisson(),
        "bd-accelerated" => bd_accelerated(),
        other => Err(Error::UnknownCase(other.into())),
    }
}

pub fn reproduce_all() -> Result<Vec<CaseReport>> {
    CASES.iter().map(|c| reproduce(c)).collect()
}

fn rho1_amplitude() -> Result<CaseReport> {
    let mut checks = Vec::new();
    for (n, tol) in [(100usize, 1e-3), (400, 1e-4)] {
        let a = dirichlet_eigenpair(&build_rho_chain(n, 1.0)?)?.amplitude();
        checks.push(Check::relative(format!("amplitude N={n} vs 2N/pi"), a, 2.0 * n as f64 / std::f64::consts::PI, tol));
    }
    Ok(CaseReport::new("rho1-amplitude", "rho = 1: amplitude grows like 2N/pi", checks))
}

fn rho_gt1_amplitude() -> Result<CaseReport> {
    let a = dirichlet_eigenpair(&build_rho_chain(30, 2.0)?)?.amplitude();
    Ok(CaseReport::new(
        "rho-gt1-amplitude",
        "rho = 2, N = 30: amplitude tends to rho/(rho-1)",
        vec![Check::absolute("amplitude", a, 2.0, 1e-6)],
    ))
}

fn rho_gt1_lambda0() -> Result<CaseReport> {
    let rho = 2.0;
    let ns = [30usize, 40, 50, 60];
    let ratios: Vec<f64> = ns
        .iter()
        .map(|&n| Ok(dirichlet_eigenpair(&build_rho_chain(n, rho)?)?.lambda0 / rho_lambda0_asymptote(rho, n)))
        .collect::<Result<_>>()?;
    let mut checks = vec![Check::in_range("ratio N=30", ratios[0], 0.9, 1.1)];
    for (i, w) in ratios.windows(2).enumerate() {
        checks.push(Check::at_most(format!("|ratio-1| N={} vs N={}", ns[i + 1], ns[i]), (w[1] - 1.0).abs(), (w[0] - 1.0).abs()));
    }
    checks.push(Check::in_range("ratio N=60", ratios[3], 0.9, 1.1));
    Ok(CaseReport::new("rho-gt1-lambda0", "rho = 2: lambda0 against (rho+1)(rho-1)^2 / (2 rho^(N+1))", checks))
}

fn golden_ratio() -> Result<CaseReport> {
    let g = golden_generator();
    let pair = dirichlet_eigenpair(&g)?;
    let path = path_bound(&g, pair.lambda0, PathChoice::Best)?;
    let spectral = spectral_bound(&full_spectrum_with_minors(&g)?)?;
    Ok(CaseReport::new(
        "golden-ratio",
        "two states, unit rates, absorption from the first state",
        vec![
            Check::absolute("amplitude", pair.amplitude(), GOLDEN_RATIO, 1e-12),
            Check::absolute("path bound", path.bound, GOLDEN_RATIO, 1e-12),
            Check::absolute("spectral bound", spectral.bound, GOLDEN_SPECTRAL_BOUND, 1e-9),
        ],
    ))
}

fn sandwich_demo() -> Result<CaseReport> {
    let mut checks = Vec::new();
    for (label, gen) in [("golden", golden_generator()), ("rho1 N=10", build_rho_chain(10, 1.0)?)] {
        let n = gen.n();
        let mut mu0 = vec![0.0; n];
        mu0[n - 1] = 1.0;
        let table = sandwich_experiment(&gen, &mu0, &SANDWICH_TIMES)?;
        for row in &table.rows {
            let slack = (row.qsd_distance - row.lower).min(row.upper - row.qsd_distance);
            checks.push(Check::at_least(format!("{label} t={} slack", row.t), slack, -SANDWICH_SLACK));
        }
    }
    Ok(CaseReport::new("sandwich-demo", "total variation sandwich from the last state", checks))
}

fn bd_poisson() -> Result<CaseReport> {
    let v = entrance_check(&Poisson, 10_000)?;
    Ok(CaseReport::new(
        "bd-poisson",
        "b = 1, d_n = n: (S) fails",
        vec![
            Check::holds("(S) verdict negative", v.s_series_converges == Verdict::No),
            Check::holds("(R) verdict positive", v.r_series_diverges == Verdict::Yes),
        ],
    ))
}

/// Settings for the accelerated example.
pub const BD_SCHEDULE: (u32, u32) = (6, 14);
pub const BD_NMAX: usize = 32;
pub const BD_TOL: f64 = 1e-8;
pub const BD_TRACE_CUTOFF: usize = 1 << 20;
pub const BD_ENTRANCE_CUTOFF: usize = 10_000;
pub const GAP_IDENTITY_TOL: f64 = 1e-8;

/// Entrance verdicts, monotone truncations, theorem bound domination and the gap identity.
pub fn bd_pipeline_checks(rates: &dyn RateFamily) -> Result<Vec<Check>> {
    let v = entrance_check(rates, BD_ENTRANCE_CUTOFF)?;
    let series = eigen_convergence(rates, BD_NMAX, &doubling_schedule(BD_SCHEDULE.0, BD_SCHEDULE.1), BD_TOL)?;
    let report = bd_theorem_report(rates, &series, BD_TRACE_CUTOFF)?;
    let worst = |idx: Option<usize>| {
        series.violations.iter().filter(|m| m.index == idx).map(|m| m.increase).fold(0.0, f64::max)
    };
    let residual = series
        .ns()
        .iter()
        .map(|&n| gap_identity_check(rates, n).map(|g| g.residual))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let max_amp = report.amplitudes.iter().map(|a| a.1).fold(0.0, f64::max);
    Ok(vec![
        Check::holds("(R) verdict positive", v.r_series_diverges == Verdict::Yes),
        Check::holds("(S) verdict positive", v.s_series_converges == Verdict::Yes),
        Check::at_most("largest increase of lambda_N,0", worst(Some(0)), 0.0),
        Check::at_most("largest increase of lambda'_N,0", worst(None), 0.0),
        Check::holds("phi_N increasing at every N", series.rows.iter().all(|r| r.phi_increasing)),
        Check::holds("N0 found", report.n0.is_some()),
        Check::holds("theorem bound finite", report.theorem.bound.is_finite()),
        Check::holds("tail certified", report.theorem.tail_certified),
        Check::at_least("theorem bound vs largest amplitude", report.theorem.bound, max_amp),
        Check::at_most("gap identity residual", residual, GAP_IDENTITY_TOL),
    ])
}

fn bd_accelerated() -> Result<CaseReport> {
    Ok(CaseReport::new(
        "bd-accelerated",
        "b_n = ln^2(e+n), d_n = n ln^2(e-1+n): entrance boundary, truncations 2^6..2^14",
        bd_pipeline_checks(&PoissonAccelerated)?,
    ))
}
