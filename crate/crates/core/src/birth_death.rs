//! Birth–death chains on `{1, 2, …}` absorbed at 0, approached through
//! Neumann truncations on `{1, …, N}`.
//!
//! Rate families are indexed from 1 as in `b_x`, `d_x`; vectors returned by
//! this module are 0-based, so entry `i` refers to state `i + 1`.

use std::path::Path as FsPath;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{AbsorbingGenerator, BirthDeathChain};
use crate::linalg::{perron_inverse_iteration, SymTridiagLdl, TridiagMLu, PERRON_MAX_ITER, PERRON_TOL};

/// Birth and death rates `b_x`, `d_x` for `x >= 1`; `b_0 = 0`.
pub trait RateFamily: Send + Sync {
    fn birth(&self, x: usize) -> f64;
    fn death(&self, x: usize) -> f64;
    fn label(&self) -> String;

    /// Upper bound on `sum_{y>x} π_y / π_x`, when known in closed form.
    fn mass_ratio_bound(&self, _x: usize) -> Option<f64> {
        None
    }

    /// Upper bound on the sum over `x > m` of the (S) summands.
    fn s_tail_bound(&self, _m: usize) -> Option<f64> {
        None
    }
}

/// `b_n = 1`, `d_n = n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Poisson;

impl RateFamily for Poisson {
    fn birth(&self, _x: usize) -> f64 {
        1.0
    }

    fn death(&self, x: usize) -> f64 {
        x as f64
    }

    fn label(&self) -> String {
        "poisson".into()
    }

    fn mass_ratio_bound(&self, x: usize) -> Option<f64> {
        Some(factorial_mass_ratio(x))
    }
}

/// `b_n = ln²(e+n)`, `d_n = n ln²(e-1+n)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PoissonAccelerated;

impl RateFamily for PoissonAccelerated {
    fn birth(&self, x: usize) -> f64 {
        (std::f64::consts::E + x as f64).ln().powi(2)
    }

    fn death(&self, x: usize) -> f64 {
        x as f64 * (std::f64::consts::E - 1.0 + x as f64).ln().powi(2)
    }

    fn label(&self) -> String {
        "poisson-accelerated".into()
    }

    fn mass_ratio_bound(&self, x: usize) -> Option<f64> {
        Some(factorial_mass_ratio(x))
    }

    /// The summand is at most `1/(x ln² x)`, whose tail past `m` is at most `1/ln m`.
    fn s_tail_bound(&self, m: usize) -> Option<f64> {
        (m >= 2).then(|| 1.0 / (m as f64).ln())
    }
}

/// `sum_{y>x} x!/y! <= (x+2)/(x+1)²`.
fn factorial_mass_ratio(x: usize) -> f64 {
    let x = x as f64;
    (x + 2.0) / ((x + 1.0) * (x + 1.0))
}

/// `b_n = ρ`, `d_n = 1`.
#[derive(Debug, Clone, Copy)]
pub struct RhoRates {
    pub rho: f64,
}

impl RateFamily for RhoRates {
    fn birth(&self, _x: usize) -> f64 {
        self.rho
    }

    fn death(&self, _x: usize) -> f64 {
        1.0
    }

    fn label(&self) -> String {
        format!("rho:{}", self.rho)
    }

    fn mass_ratio_bound(&self, _x: usize) -> Option<f64> {
        (self.rho < 1.0).then(|| self.rho / (1.0 - self.rho))
    }
}

/// Rates given as expressions in `n`, e.g. `ln(e + n)^2`.
#[derive(Debug, Clone)]
pub struct ExpressionRates {
    birth_src: String,
    death_src: String,
    birth: meval::Expr,
    death: meval::Expr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExpressionFile {
    birth: String,
    death: String,
}

impl ExpressionRates {
    pub fn new(birth: &str, death: &str) -> Result<Self> {
        let parse = |s: &str| s.parse::<meval::Expr>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
        let out = Self { birth_src: birth.into(), death_src: death.into(), birth: parse(birth)?, death: parse(death)? };
        for x in 1..=3 {
            out.eval(&out.birth, x)?;
            out.eval(&out.death, x)?;
        }
        Ok(out)
    }

    /// JSON file `{"birth": "...", "death": "..."}`.
    pub fn from_file(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let f: ExpressionFile = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::new(&f.birth, &f.death)
    }

    fn eval(&self, expr: &meval::Expr, x: usize) -> Result<f64> {
        expr.eval_with_context((("n", x as f64), meval::Context::new()))
            .map_err(|e| Error::Parse(e.to_string()))
    }
}

impl RateFamily for ExpressionRates {
    fn birth(&self, x: usize) -> f64 {
        self.eval(&self.birth, x).unwrap_or(f64::NAN)
    }

    fn death(&self, x: usize) -> f64 {
        self.eval(&self.death, x).unwrap_or(f64::NAN)
    }

    fn label(&self) -> String {
        format!("b(n) = {}, d(n) = {}", self.birth_src, self.death_src)
    }
}

/// `poisson`, `poisson-accelerated`, `rho:<ρ>`, or a path to an expression file.
pub fn parse_family(spec: &str) -> Result<Box<dyn RateFamily>> {
    match spec {
        "poisson" => Ok(Box::new(Poisson)),
        "poisson-accelerated" => Ok(Box::new(PoissonAccelerated)),
        _ => {
            if let Some(r) = spec.strip_prefix("rho:") {
                let rho: f64 = r.parse().map_err(|_| Error::Parse(format!("bad rho in `{spec}`")))?;
                if !(rho > 0.0) || !rho.is_finite() {
                    return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
                }
                return Ok(Box::new(RhoRates { rho }));
            }
            let path = FsPath::new(spec);
            if path.exists() {
                return Ok(Box::new(ExpressionRates::from_file(path)?));
            }
            Err(Error::Parse(format!("unknown rate family `{spec}`")))
        }
    }
}

fn checked(v: f64, what: &str, x: usize) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{what} rate at {x} is {v}, must be positive and finite")))
    }
}

/// `ln π_x` for `x = 1..=n`, `π_1 = 1`.
pub fn log_pi_measure(rates: &dyn RateFamily, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for x in 1..=n {
        if x > 1 {
            acc += checked(rates.birth(x - 1), "birth", x - 1)?.ln() - checked(rates.death(x), "death", x)?.ln();
        }
        out.push(acc);
    }
    Ok(out)
}

/// `π_x = b_1⋯b_{x-1} / (d_2⋯d_x)` for `x = 1..=n`.
pub fn pi_measure(rates: &dyn RateFamily, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    log_pi_measure(rates, n)?
        .into_iter()
        .enumerate()
        .map(|(i, l)| if l.exp().is_finite() { Ok(l.exp()) } else { Err(Error::Overflow(format!("pi at state {}", i + 1))) })
        .collect()
}

/// Chain on `{1..N}` with absorption `d_1` and a reflecting top `L(N,N-1) = d_N`.
pub fn truncate_chain(rates: &dyn RateFamily, n: usize) -> Result<BirthDeathChain> {
    if n < 1 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let births: Vec<f64> = (1..n).map(|x| checked(rates.birth(x), "birth", x)).collect::<Result<_>>()?;
    let deaths: Vec<f64> = (1..=n).map(|x| checked(rates.death(x), "death", x)).collect::<Result<_>>()?;
    BirthDeathChain::from_rates(&births, &deaths)
}

/// Neumann truncation as a validated generator.
pub fn truncate_neumann(rates: &dyn RateFamily, n: usize) -> Result<AbsorbingGenerator> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("truncation needs N >= 2, got {n}")));
    }
    truncate_chain(rates, n)?.to_generator()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl Verdict {
    fn negate(self) -> Verdict {
        match self {
            Verdict::Yes => Verdict::No,
            Verdict::No => Verdict::Yes,
            Verdict::Inconclusive => Verdict::Inconclusive,
        }
    }
}

/// Convergence of `sum a_x` from `ln a_x` on `x = 1..=M`.
///
/// Non-decaying terms diverge; otherwise the ratio test and then
/// Bertrand's statistic `ln x (x (a_x/a_{x+1} - 1) - 1)` (above 1.1 converges,
/// below 0.9 diverges) are read at `x = M/2, 3M/4, M-1`.
pub fn series_converges(log_terms: &[f64]) -> Verdict {
    let m = log_terms.len();
    if m < 10 {
        return Verdict::Inconclusive;
    }
    let probes = [m / 2, 3 * m / 4, m - 1];
    let la = |x: usize| log_terms[x - 1];
    if la(m) >= la(m / 2) && probes.iter().all(|&x| la(x + 1) >= la(x)) {
        return Verdict::No;
    }
    if probes.iter().all(|&x| (la(x + 1) - la(x)).exp() <= 0.95) {
        return Verdict::Yes;
    }
    let bertrand: Vec<f64> =
        probes.iter().map(|&x| (x as f64).ln() * (x as f64 * (la(x) - la(x + 1)).exp_m1() - 1.0)).collect();
    if bertrand.iter().all(|&b| b >= 1.1) {
        Verdict::Yes
    } else if bertrand.iter().all(|&b| b <= 0.9) {
        Verdict::No
    } else {
        Verdict::Inconclusive
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntranceVerdict {
    pub cutoff: usize,
    /// (R): `sum 1/(π_x b_x) sum_{y<=x} π_y = ∞`.
    pub r_series_diverges: Verdict,
    /// (S): `sum 1/(π_x b_x) sum_{y>x} π_y < ∞`.
    pub s_series_converges: Verdict,
    /// `Z = sum π_x < ∞`.
    pub z_converges: Verdict,
    /// `sum 1/(π_x b_x) = ∞`, i.e. absorption is almost sure.
    pub absorption_series_diverges: Verdict,
    /// `ln` of the partial sums of (R).
    pub r_log_partial_sums: Vec<f64>,
    /// Partial sums of (S); empty when `Z` diverges.
    pub s_partial_sums: Vec<f64>,
    /// `ln sum_{x<=cutoff} π_x`.
    pub log_z_partial: f64,
}

/// (S) summands `a_x = R_x / b_x` with `R_x = sum_{y>x} π_y/π_x`, for `x = 1..=m`.
///
/// `R` is computed backward from `4m`. The result is an upper bound when the
/// family bounds the mass ratio there, a lower bound otherwise.
fn s_summands(rates: &dyn RateFamily, m: usize) -> Result<(Vec<f64>, bool)> {
    let top = 4 * m;
    let start = rates.mass_ratio_bound(top);
    let upper = start.is_some();
    let mut r = start.unwrap_or(0.0);
    let mut out = vec![0.0; m];
    for x in (1..top).rev() {
        let b = checked(rates.birth(x), "birth", x)?;
        r = b / checked(rates.death(x + 1), "death", x + 1)? * (1.0 + r);
        if x <= m {
            out[x - 1] = r / b;
        }
    }
    Ok((out, upper))
}

/// Numerical verdicts on conditions (R) and (S) up to `cutoff`.
pub fn entrance_check(rates: &dyn RateFamily, cutoff: usize) -> Result<EntranceVerdict> {
    if cutoff < 10 {
        return Err(Error::InvalidParameter(format!("cutoff must be at least 10, got {cutoff}")));
    }
    let log_pi = log_pi_measure(rates, cutoff + 1)?;
    let births: Vec<f64> = (1..=cutoff + 1).map(|x| checked(rates.birth(x), "birth", x)).collect::<Result<_>>()?;

    // (R): a_x = P_x / b_x, P_x = sum_{y<=x} π_y/π_x = 1 + P_{x-1} d_x / b_{x-1}
    let mut log_p = 0.0f64;
    let mut r_terms = Vec::with_capacity(cutoff + 1);
    for x in 1..=cutoff + 1 {
        if x > 1 {
            let d = checked(rates.death(x), "death", x)?;
            log_p = log_add(0.0, log_p + d.ln() - births[x - 2].ln());
        }
        r_terms.push(log_p - births[x - 1].ln());
    }
    let mut r_log_partial_sums = Vec::with_capacity(cutoff);
    let mut acc = f64::NEG_INFINITY;
    for &t in &r_terms[..cutoff] {
        acc = log_add(acc, t);
        r_log_partial_sums.push(acc);
    }
    let r_series_diverges = series_converges(&r_terms).negate();

    let km_terms: Vec<f64> = (0..=cutoff).map(|i| -log_pi[i] - births[i].ln()).collect();
    let absorption_series_diverges = series_converges(&km_terms).negate();

    let z_converges = series_converges(&log_pi);
    let log_z_partial = log_pi[..cutoff].iter().fold(f64::NEG_INFINITY, |a, &l| log_add(a, l));

    let (s_converges, s_partial_sums) = if z_converges == Verdict::No {
        (Verdict::No, Vec::new())
    } else {
        let (terms, _) = s_summands(rates, cutoff + 1)?;
        let logs: Vec<f64> = terms.iter().map(|t| t.ln()).collect();
        let mut sums = Vec::with_capacity(cutoff);
        let mut acc = 0.0;
        for &t in &terms[..cutoff] {
            acc += t;
            sums.push(acc);
        }
        (series_converges(&logs), sums)
    };

    Ok(EntranceVerdict {
        cutoff,
        r_series_diverges,
        s_series_converges: s_converges,
        z_converges,
        absorption_series_diverges,
        r_log_partial_sums,
        s_partial_sums,
        log_z_partial,
    })
}

/// `sum_n 1/λ_n = Z/d_1 + sum_x (1/(π_x b_x)) sum_{y>x} π_y`, split at `cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBound {
    pub cutoff: usize,
    /// Upper bound on `Z` when the family bounds the mass ratio, else the partial sum.
    pub z: f64,
    pub d1: f64,
    pub s_partial: f64,
    pub s_tail: Option<f64>,
    /// Certified upper bound on the trace, when every piece is certified.
    pub total_upper: Option<f64>,
}

pub fn trace_bound(rates: &dyn RateFamily, cutoff: usize) -> Result<TraceBound> {
    if cutoff < 2 {
        return Err(Error::InvalidParameter("cutoff must be at least 2".into()));
    }
    let log_pi = log_pi_measure(rates, cutoff)?;
    let mut log_z = log_pi.iter().fold(f64::NEG_INFINITY, |a, &l| log_add(a, l));
    let ratio = rates.mass_ratio_bound(cutoff);
    if let Some(r) = ratio {
        log_z = log_add(log_z, log_pi[cutoff - 1] + r.ln());
    }
    let z = log_z.exp();
    let d1 = checked(rates.death(1), "death", 1)?;
    let (terms, s_upper) = s_summands(rates, cutoff)?;
    let s_partial: f64 = terms.iter().sum();
    let s_tail = rates.s_tail_bound(cutoff);
    let total_upper = match (ratio, s_upper, s_tail) {
        (Some(_), true, Some(t)) => Some(z / d1 + s_partial + t),
        _ => None,
    };
    Ok(TraceBound { cutoff, z, d1, s_partial, s_tail, total_upper })
}

/// `2^lo, 2^(lo+1), …, 2^hi`.
pub fn doubling_schedule(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub n_states: usize,
    /// `λ_{N,n}` for `n = 0..min(n_max+1, N)`.
    pub lambda: Vec<f64>,
    /// First eigenvalue on `{2..N}` with 1 made absorbing.
    pub lambda0_prime: f64,
    /// `φ_N` with `φ_N(1) = 1`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phi: Vec<f64>,
    pub amplitude: f64,
    pub phi_increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    /// Eigenvalue index, `None` for `λ'_{N,0}`.
    pub index: Option<usize>,
    pub n_states: usize,
    pub increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationSeries {
    pub family: String,
    pub tol: f64,
    pub rows: Vec<TruncationRow>,
    pub violations: Vec<MonotonicityViolation>,
    /// Limit of `λ_{N,n}` once successive relative changes fall below `tol`.
    pub limits: Vec<Option<f64>>,
    pub lambda0_prime_limit: Option<f64>,
}

impl TruncationSeries {
    pub fn ns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n_states).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn strip_phi(&mut self) {
        self.rows.iter_mut().for_each(|r| r.phi = Vec::new());
    }
}

fn monotone_slack(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

fn truncation_row(rates: &dyn RateFamily, n: usize, n_max: usize) -> Result<TruncationRow> {
    let chain = truncate_chain(rates, n)?;
    let ldl = SymTridiagLdl::new(&chain);
    let lambda = ldl.eigenvalues(0..(n_max + 1).min(n));
    let lambda0_prime = if n == 1 { f64::INFINITY } else { SymTridiagLdl::new(&chain.slice(1, n)).eigenvalue(0) };
    let solver = TridiagMLu::new(&chain);
    let mut phi = perron_inverse_iteration(&solver, false, PERRON_TOL, PERRON_MAX_ITER)?.vector;
    let first = phi[0];
    phi.iter_mut().for_each(|p| *p /= first);
    let phi_increasing = phi.windows(2).all(|w| w[1] > w[0]);
    let amplitude = phi.iter().cloned().fold(0.0, f64::max) / phi.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TruncationRow { n_states: n, lambda, lambda0_prime, phi, amplitude, phi_increasing })
}

/// Eigenvalues of the Neumann truncations along `schedule`.
///
/// Errors with [`Error::NotConverged`] when `λ_0` or `λ'_0` has not settled
/// to `tol` by the last two sizes.
pub fn eigen_convergence(rates: &dyn RateFamily, n_max: usize, schedule: &[usize], tol: f64) -> Result<TruncationSeries> {
    if schedule.len() < 2 || schedule.windows(2).any(|w| w[1] <= w[0]) || schedule[0] < 2 {
        return Err(Error::InvalidParameter("schedule must be increasing, start at N >= 2 and hold at least two sizes".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let rows: Vec<TruncationRow> = schedule.par_iter().map(|&n| truncation_row(rates, n, n_max)).collect::<Result<_>>()?;

    let mut violations = Vec::new();
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        for (k, (&la, &lb)) in a.lambda.iter().zip(&b.lambda).enumerate() {
            if lb > la + monotone_slack(la) {
                violations.push(MonotonicityViolation { index: Some(k), n_states: b.n_states, increase: lb - la });
            }
        }
        if b.lambda0_prime > a.lambda0_prime + monotone_slack(a.lambda0_prime) {
            violations.push(MonotonicityViolation {
                index: None,
                n_states: b.n_states,
                increase: b.lambda0_prime - a.lambda0_prime,
            });
        }
    }

    let (prev, last) = (&rows[rows.len() - 2], &rows[rows.len() - 1]);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let limits: Vec<Option<f64>> = (0..=n_max)
        .map(|k| match (prev.lambda.get(k), last.lambda.get(k)) {
            (Some(&a), Some(&b)) if rel(a, b) < tol => Some(b),
            _ => None,
        })
        .collect();
    let lambda0_prime_limit = (rel(prev.lambda0_prime, last.lambda0_prime) < tol).then_some(last.lambda0_prime);
    if limits[0].is_none() || lambda0_prime_limit.is_none() {
        return Err(Error::NotConverged {
            last_deltas: vec![rel(prev.lambda[0], last.lambda[0]), rel(prev.lambda0_prime, last.lambda0_prime)],
        });
    }
    Ok(TruncationSeries { family: rates.label(), tol, rows, violations, limits, lambda0_prime_limit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    pub lambda0: f64,
    pub lambda0_prime: f64,
    /// `1 - λ0/λ0'`.
    pub gap_factor: f64,
    /// `1 - λ0/λn`, `n = 1..=n_used`.
    pub factors: Vec<f64>,
    pub tail_bound: Option<f64>,
    /// `c` with `-ln(1-u) <= c u` on the realized range of `u = λ0/λn`.
    pub log_concavity_constant: f64,
    /// `exp(c λ0 tail)`.
    pub tail_factor: f64,
    /// Bound from the finite product alone.
    pub partial_bound: f64,
    pub bound: f64,
    pub tail_certified: bool,
}

/// `((1 - λ0/λ0') prod_{n<=n_used} (1 - λ0/λn) exp(-c λ0 tail))^{-1}`.
pub fn theorem_bound(lambda0: f64, lambda0_prime: f64, lambdas: &[f64], tail_bound: Option<f64>) -> Result<TheoremBound> {
    if !(lambda0_prime > lambda0) {
        return Err(Error::GapViolation { lambda0, lambda0_prime });
    }
    if let Some(&l) = lambdas.iter().find(|&&l| !(l > lambda0)) {
        return Err(Error::GapViolation { lambda0, lambda0_prime: l });
    }
    let gap_factor = 1.0 - lambda0 / lambda0_prime;
    let factors: Vec<f64> = lambdas.iter().map(|&l| 1.0 - lambda0 / l).collect();
    let log_partial = -(-lambda0 / lambda0_prime).ln_1p() - lambdas.iter().map(|&l| (-lambda0 / l).ln_1p()).sum::<f64>();
    let (c, log_tail) = match tail_bound {
        None | Some(0.0) => (1.0, 0.0),
        Some(t) => {
            if !(t >= 0.0) {
                return Err(Error::InvalidParameter(format!("tail bound must be nonnegative, got {t}")));
            }
            let mut u = lambda0 * t;
            if let Some(&last) = lambdas.last() {
                u = u.min(lambda0 / last);
            }
            if !(u < 1.0) {
                return Err(Error::InvalidParameter(format!("tail term λ0·tail = {u} leaves no room for the log bound")));
            }
            let c = -(-u).ln_1p() / u;
            (c, c * lambda0 * t)
        }
    };
    Ok(TheoremBound {
        lambda0,
        lambda0_prime,
        gap_factor,
        factors,
        tail_bound,
        log_concavity_constant: c,
        tail_factor: log_tail.exp(),
        partial_bound: log_partial.exp(),
        bound: (log_partial + log_tail).exp(),
        tail_certified: tail_bound.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdBoundReport {
    pub theorem: TheoremBound,
    pub trace: TraceBound,
    pub n_used: usize,
    /// First truncation size `N0` with `λ_{N0,0} <= (λ0 + min(λ0', λ1)) / 2`.
    pub n0: Option<usize>,
    /// `(N, amplitude(φ_N))` for every computed `N >= N0`.
    pub amplitudes: Vec<(usize, f64)>,
    pub dominates: bool,
}

/// Theorem bound from converged limits, with the tail of `sum 1/λn`
/// certified through [`trace_bound`] when the family allows it.
pub fn bd_theorem_report(rates: &dyn RateFamily, series: &TruncationSeries, trace_cutoff: usize) -> Result<BdBoundReport> {
    let lambda0 = series.limits[0].ok_or(Error::NotConverged { last_deltas: vec![] })?;
    let lambda0_prime = series.lambda0_prime_limit.ok_or(Error::NotConverged { last_deltas: vec![] })?;
    let lambdas: Vec<f64> = series.limits[1..].iter().map_while(|l| *l).collect();
    let n_used = lambdas.len();
    let trace = trace_bound(rates, trace_cutoff)?;
    let last = series.rows.last().expect("schedule has rows");
    let tail = trace.total_upper.map(|t| {
        let head: f64 = last.lambda[..=n_used.min(last.lambda.len() - 1)].iter().map(|l| 1.0 / l).sum();
        (t - head).max(0.0)
    });
    let theorem = theorem_bound(lambda0, lambda0_prime, &lambdas, tail)?;
    let second = lambdas.first().map_or(lambda0_prime, |&l1| lambda0_prime.min(l1));
    let threshold = 0.5 * (lambda0 + second);
    let n0 = series.rows.iter().find(|r| r.lambda[0] <= threshold).map(|r| r.n_states);
    let amplitudes: Vec<(usize, f64)> = match n0 {
        Some(n0) => series.rows.iter().filter(|r| r.n_states >= n0).map(|r| (r.n_states, r.amplitude)).collect(),
        None => Vec::new(),
    };
    let dominates = n0.is_some() && amplitudes.iter().all(|&(_, a)| a <= theorem.bound);
    Ok(BdBoundReport { theorem, trace, n_used, n0, amplitudes, dominates })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapIdentity {
    pub n_states: usize,
    /// `λ0' - λ0`.
    pub lhs: f64,
    /// `η(1) b_1 φ'(2) φ(1) / η[φ' φ]`.
    pub rhs: f64,
    /// `|lhs - rhs| / lhs`.
    pub residual: f64,
}

/// Checks `λ0' - λ0 = η(1) b_1 φ'(2) φ(1) / η[φ'φ]` on the truncation at `N`.
pub fn gap_identity_check(rates: &dyn RateFamily, n: usize) -> Result<GapIdentity> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("gap identity needs N >= 2, got {n}")));
    }
    let chain = truncate_chain(rates, n)?;
    gap_identity_chain(&chain)
}

/// [`gap_identity_check`] on an explicit chain absorbed only from its first state.
pub fn gap_identity_chain(chain: &BirthDeathChain) -> Result<GapIdentity> {
    let n = chain.n();
    let pair = perron_inverse_iteration(&TridiagMLu::new(chain), false, PERRON_TOL, PERRON_MAX_ITER)?;
    let sub = chain.slice(1, n);
    let pair_p = perron_inverse_iteration(&TridiagMLu::new(&sub), false, PERRON_TOL, PERRON_MAX_ITER)?;
    let log_pi = chain.log_pi();
    let top = log_pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_pi.iter().map(|l| (l - top).exp()).collect();
    let phi = &pair.vector;
    let phi_p = &pair_p.vector;
    let overlap: f64 = (1..n).map(|x| w[x] * phi_p[x - 1] * phi[x]).sum();
    let rhs = w[0] * chain.up[0] * phi_p[0] * phi[0] / overlap;
    let lhs = pair_p.lambda - pair.lambda;
    Ok(GapIdentity { n_states: n, lhs, rhs, residual: (lhs - rhs).abs() / lhs })
}

/// `E[τ_{x,1}] = sum_{y=1}^{x-1} (1/(π_y b_y)) sum_{z=y+1}^{x} π_z`, the mean
/// time to reach 1 from `x` for the chain reflected at `x`.
pub fn hitting_time_from(rates: &dyn RateFamily, x: usize) -> Result<f64> {
    if x < 1 {
        return Err(Error::InvalidParameter("x must be at least 1".into()));
    }
    // A_y = sum_{z=y+1}^{x} π_z/π_y = (b_y/d_{y+1}) (1 + A_{y+1})
    let mut a = 0.0;
    let mut total = 0.0;
    for y in (1..x).rev() {
        let b = checked(rates.birth(y), "birth", y)?;
        a = b / checked(rates.death(y + 1), "death", y + 1)? * (1.0 + a);
        total += a / b;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub holds: bool,
    /// `max_x (K[φ](x) + λ φ(x))` over interior states.
    pub worst_slack: f64,
    /// 1-based state attaining it.
    pub worst_state: usize,
}

/// Checks `K[φ] <= -λ φ` on `{1..N-1}` for the truncation at `N`, up to
/// `1e-12 (b_x + d_x + λ) max φ`.
pub fn lyapunov_check(rates: &dyn RateFamily, phi: &[f64], lambda: f64, n: usize) -> Result<LyapunovReport> {
    if phi.len() != n || n < 2 {
        return Err(Error::InvalidParameter(format!("phi has {} entries for N = {n}", phi.len())));
    }
    if let Some(i) = phi.iter().position(|&p| !(p > 0.0)) {
        return Err(Error::NonPositiveInput(i));
    }
    let scale = phi.iter().cloned().fold(0.0, f64::max);
    let mut worst = (f64::NEG_INFINITY, 0usize);
    let mut holds = true;
    for x in 1..n {
        let b = checked(rates.birth(x), "birth", x)?;
        let d = checked(rates.death(x), "death", x)?;
        let below = if x > 1 { phi[x - 2] } else { 0.0 };
        let k_phi = d * below + b * phi[x] - (b + d) * phi[x - 1];
        let slack = k_phi + lambda * phi[x - 1];
        if slack > 1e-12 * (b + d + lambda) * scale {
            holds = false;
        }
        if slack > worst.0 {
            worst = (slack, x);
        }
    }
    Ok(LyapunovReport { holds, worst_slack: worst.0, worst_state: worst.1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletForm {
    /// `E(f)` with `η` normalized on `{1..N}`.
    pub energy: f64,
    /// `η(f²)`.
    pub mass: f64,
    pub quotient: f64,
}

/// `E(f) = η(1) d_1 f(1)² + sum_{x<N} η(x) b_x (f(x+1) - f(x))²`.
pub fn dirichlet_form(rates: &dyn RateFamily, f: &[f64], n: usize) -> Result<DirichletForm> {
    if f.len() != n || n < 1 {
        return Err(Error::InvalidParameter(format!("f has {} entries for N = {n}", f.len())));
    }
    let log_pi = log_pi_measure(rates, n)?;
    let top = log_pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_pi.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut energy = w[0] * checked(rates.death(1), "death", 1)? * f[0] * f[0];
    for x in 1..n {
        let diff = f[x] - f[x - 1];
        energy += w[x - 1] * checked(rates.birth(x), "birth", x)? * diff * diff;
    }
    let mass: f64 = w.iter().zip(f).map(|(w, v)| w * v * v).sum();
    Ok(DirichletForm { energy: energy / z, mass: mass / z, quotient: energy / mass })
}
