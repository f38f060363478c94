//! Trajectory-level Monte Carlo and transient distributions.
//!
//! Estimators draw from ChaCha8 streams: block `b` of a run with seed `s`
//! uses stream `b` of the generator seeded with `s`. Blocks run in parallel
//! and their moments are merged in block order, so results do not depend on
//! the thread count.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{AbsorbingGenerator, RateMatrix};
use crate::linalg::gth_stationary;
use crate::spectral::{dirichlet_eigenpair, lambda0_minor, quasi_stationary_dist, DirichletEigenpair};

/// Jump budget per trajectory.
pub const EVENT_BUDGET: u64 = 100_000_000;
/// Samples per RNG stream.
pub const BLOCK: usize = 1024;
/// `ψ_λ` estimates warn above this fraction of `λ0`.
pub const HEAVY_TAIL_RATIO: f64 = 0.9;
/// Survival mass below which the sandwich experiment warns.
pub const UNDERFLOW_MASS: f64 = 1e-250;
/// Poisson tail mass left out by uniformization, summed over all steps.
pub const UNIFORMIZATION_TOL: f64 = 1e-12;
/// Slack allowed on the sandwich inequalities.
pub const SANDWICH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub hit_target: bool,
    pub absorbed: bool,
    pub elapsed: f64,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Warning {
    HeavyTail { ratio: f64 },
    Underflow { time: f64, log10_survival: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl EstimateWithCI {
    fn exact(value: f64, n_samples: u64, seed: u64) -> Self {
        Self { mean: value, std_error: 0.0, n_samples, seed, warnings: Vec::new() }
    }

    /// `(mean - value) / std_error`, with the error floored at rounding level.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = self.mean - value;
        if d == 0.0 {
            return 0.0;
        }
        d / self.std_error.max(16.0 * f64::EPSILON * value.abs().max(self.mean.abs()))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64),
        }
    }
}

/// RNG for block `block` of a run seeded with `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn run_blocks<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b as u64);
            let len = BLOCK.min(n - b * BLOCK);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect()
}

/// Mean and standard error of `n` draws of `f`.
pub fn monte_carlo<F>(n: usize, seed: u64, f: F) -> Result<EstimateWithCI>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let blocks: Vec<Moments> = run_blocks(n, seed, |rng| f(rng))?
        .into_iter()
        .map(|xs| {
            let mut m = Moments::default();
            xs.into_iter().for_each(|x| m.push(x));
            m
        })
        .collect();
    let m = blocks.into_iter().fold(Moments::default(), Moments::merge);
    if !m.mean.is_finite() {
        return Err(Error::Overflow("Monte Carlo mean".into()));
    }
    let var = m.m2 / (m.n - 1) as f64;
    Ok(EstimateWithCI { mean: m.mean, std_error: (var / m.n as f64).sqrt(), n_samples: m.n, seed, warnings: Vec::new() })
}

enum Step {
    To(usize),
    Absorbed,
}

fn jump<R: Rng + ?Sized>(rates: &RateMatrix, x: usize, rng: &mut R) -> Step {
    let row = rates.row(x);
    let mut u = rng.random::<f64>() * rates.exit_rate(x);
    for &(y, r) in row {
        if u < r {
            return Step::To(y);
        }
        u -= r;
    }
    match row.last() {
        Some(&(y, _)) if rates.kill(x) == 0.0 => Step::To(y),
        _ => Step::Absorbed,
    }
}

fn check_state(rates: &RateMatrix, x: usize) -> Result<()> {
    if x >= rates.n() {
        return Err(Error::StateOutOfRange { index: x, n_states: rates.n() });
    }
    Ok(())
}

/// One trajectory from `start` until `target` is hit or the process is absorbed.
pub fn sample_path<R: Rng + ?Sized>(
    rates: &RateMatrix,
    start: usize,
    target: Option<usize>,
    rng: &mut R,
) -> Result<TrajectoryOutcome> {
    check_state(rates, start)?;
    let mut x = start;
    let mut elapsed = 0.0;
    let mut events = 0u64;
    loop {
        if Some(x) == target {
            return Ok(TrajectoryOutcome { hit_target: true, absorbed: false, elapsed, events });
        }
        if events >= EVENT_BUDGET {
            return Err(Error::EventBudgetExceeded(EVENT_BUDGET));
        }
        let hold: f64 = rng.sample(Exp1);
        elapsed += hold / rates.exit_rate(x);
        events += 1;
        match jump(rates, x, rng) {
            Step::Absorbed => return Ok(TrajectoryOutcome { hit_target: false, absorbed: true, elapsed, events }),
            Step::To(y) => x = y,
        }
    }
}

/// `ln E[exp(λ T)]` for `T ~ Exp(q)` when finite, otherwise `λ T` for a sampled `T`.
fn holding_log_factor<R: Rng + ?Sized>(q: f64, lambda: f64, rng: &mut R) -> f64 {
    if lambda < q {
        -(-lambda / q).ln_1p()
    } else {
        let t: f64 = rng.sample(Exp1);
        lambda * t / q
    }
}

/// Weight `exp(λ τ_y^x) 1{τ_y < τ_∞}` with holding times integrated out.
fn ratio_sample<R: Rng + ?Sized>(rates: &RateMatrix, lambda: f64, x: usize, y: usize, rng: &mut R) -> Result<f64> {
    let mut s = x;
    let mut log_w = 0.0f64;
    for _ in 0..EVENT_BUDGET {
        if s == y {
            return Ok(log_w.exp());
        }
        log_w += holding_log_factor(rates.exit_rate(s), lambda, rng);
        match jump(rates, s, rng) {
            Step::Absorbed => return Ok(0.0),
            Step::To(t) => s = t,
        }
    }
    Err(Error::EventBudgetExceeded(EVENT_BUDGET))
}

/// Estimates `E[exp(λ τ_y^x) 1{τ_y^x < τ_∞^x}]`, which equals `φ(x)/φ(y)` at `λ = λ0`.
///
/// Conditionally on the jump chain the weight is `prod q/(q-λ)` over the
/// states left before `y`; that product is what gets averaged.
pub fn estimate_ratio(gen: &AbsorbingGenerator, lambda: f64, x: usize, y: usize, n: usize, seed: u64) -> Result<EstimateWithCI> {
    check_state(gen, x)?;
    check_state(gen, y)?;
    if x == y {
        return Ok(EstimateWithCI::exact(1.0, n as u64, seed));
    }
    monte_carlo(n, seed, |rng| ratio_sample(gen, lambda, x, y, rng))
}

/// Jump-chain proposal tilted by `h(v) = E[exp(μ τ_y^v) 1{τ_y^v < τ_∞^v}]`.
///
/// Paths are drawn from `P'(u,v) ∝ L(u,v) h(v)` and reweighted by the
/// likelihood ratio, so the estimator stays unbiased for every `μ`; the
/// variance is small when `μ` is close to `λ`.
#[derive(Debug, Clone)]
pub struct TiltedProposal {
    pub mu: f64,
    pub target: usize,
    pub h: Vec<f64>,
    /// `sum_v L(u,v) h(v)`.
    mass: Vec<f64>,
    /// Cumulative proposal weights per state.
    cumulative: Vec<Vec<(usize, f64)>>,
}

impl TiltedProposal {
    pub fn new(rates: &RateMatrix, target: usize, mu: f64) -> Result<Self> {
        check_state(rates, target)?;
        let h = tilt_function(rates, target, mu)?;
        let mut mass = Vec::with_capacity(rates.n());
        let mut cumulative = Vec::with_capacity(rates.n());
        for u in 0..rates.n() {
            let mut acc = 0.0;
            let cum: Vec<(usize, f64)> = rates
                .row(u)
                .iter()
                .filter(|&&(v, _)| h[v] > 0.0)
                .map(|&(v, r)| {
                    acc += r * h[v];
                    (v, acc)
                })
                .collect();
            mass.push(acc);
            cumulative.push(cum);
        }
        Ok(Self { mu, target, h, mass, cumulative })
    }

    fn sample<R: Rng + ?Sized>(&self, rates: &RateMatrix, lambda: f64, x: usize, rng: &mut R) -> Result<f64> {
        let mut s = x;
        let mut log_w = 0.0f64;
        for _ in 0..EVENT_BUDGET {
            if s == self.target {
                return Ok(log_w.exp());
            }
            let q = rates.exit_rate(s);
            if !(lambda < q) {
                return Err(Error::SingularFactor { state: s, exit_rate: q, lambda });
            }
            let u = rng.random::<f64>() * self.mass[s];
            let cum = &self.cumulative[s];
            let idx = cum.partition_point(|&(_, c)| c <= u).min(cum.len() - 1);
            let v = cum[idx].0;
            log_w += self.mass[s].ln() - (q - lambda).ln() - self.h[v].ln();
            s = v;
        }
        Err(Error::EventBudgetExceeded(EVENT_BUDGET))
    }
}

/// `h(y) = 1` and `(K + μ) h = 0` off `y`, i.e. `h(x) = E[exp(μ τ_y^x) 1{τ_y^x < τ_∞^x}]`.
/// Requires `μ < λ0(S \ {y})`.
pub fn tilt_function(rates: &RateMatrix, y: usize, mu: f64) -> Result<Vec<f64>> {
    let n = rates.n();
    let keep: Vec<usize> = (0..n).filter(|&v| v != y).collect();
    let mut h = vec![0.0; n];
    h[y] = 1.0;
    if keep.is_empty() {
        return Ok(h);
    }
    let pos = |v: usize| if v < y { v } else { v - 1 };
    let m = keep.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &u) in keep.iter().enumerate() {
        a[(i, i)] = rates.exit_rate(u) - mu;
        for &(v, r) in rates.row(u) {
            if v == y {
                b[i] += r;
            } else {
                a[(i, pos(v))] -= r;
            }
        }
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidParameter(format!("tilt mu = {mu} makes the hitting system singular")))?;
    for (i, &u) in keep.iter().enumerate() {
        if !(sol[i] >= 0.0) || !sol[i].is_finite() {
            return Err(Error::InvalidParameter(format!("tilt mu = {mu} is not below the first eigenvalue of the minor")));
        }
        h[u] = sol[i];
    }
    Ok(h)
}

/// `μ = max(0, λ - (λ0(S∖{y}) - λ)/4)`.
pub fn default_tilt(gen: &AbsorbingGenerator, lambda: f64, y: usize) -> Result<f64> {
    let minor = lambda0_minor(gen, y)?;
    if !minor.is_finite() {
        return Ok(lambda.max(0.0));
    }
    Ok((lambda - 0.25 * (minor - lambda)).max(0.0))
}

/// [`estimate_ratio`] with paths drawn from a [`TiltedProposal`].
pub fn estimate_ratio_tilted(
    gen: &AbsorbingGenerator,
    lambda: f64,
    x: usize,
    y: usize,
    mu: f64,
    n: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    check_state(gen, x)?;
    check_state(gen, y)?;
    if x == y {
        return Ok(EstimateWithCI::exact(1.0, n as u64, seed));
    }
    let proposal = TiltedProposal::new(gen, y, mu)?;
    if proposal.h[x] == 0.0 {
        return Ok(EstimateWithCI::exact(0.0, n as u64, seed));
    }
    monte_carlo(n, seed, |rng| proposal.sample(gen, lambda, x, rng))
}

fn psi_sample<R: Rng + ?Sized>(rates: &RateMatrix, lambda: f64, x: usize, rng: &mut R) -> Result<f64> {
    let mut s = x;
    let mut log_w = 0.0f64;
    for _ in 0..EVENT_BUDGET {
        log_w += holding_log_factor(rates.exit_rate(s), lambda, rng);
        match jump(rates, s, rng) {
            Step::Absorbed => return Ok(log_w.exp()),
            Step::To(t) => s = t,
        }
    }
    Err(Error::EventBudgetExceeded(EVENT_BUDGET))
}

fn psi_warnings(gen: &AbsorbingGenerator, lambda: f64) -> Result<Vec<Warning>> {
    let lambda0 = dirichlet_eigenpair(gen)?.lambda0;
    let ratio = lambda / lambda0;
    Ok(if ratio > HEAVY_TAIL_RATIO { vec![Warning::HeavyTail { ratio }] } else { Vec::new() })
}

/// Estimates `ψ_λ(x) = E[exp(λ τ_∞^x)]`.
pub fn estimate_psi(gen: &AbsorbingGenerator, lambda: f64, x: usize, n: usize, seed: u64) -> Result<EstimateWithCI> {
    check_state(gen, x)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    let warnings = psi_warnings(gen, lambda)?;
    if lambda == 0.0 {
        return Ok(EstimateWithCI { warnings, ..EstimateWithCI::exact(1.0, n as u64, seed) });
    }
    let mut est = monte_carlo(n, seed, |rng| psi_sample(gen, lambda, x, rng))?;
    est.warnings = warnings;
    Ok(est)
}

fn law_sampler(gen: &AbsorbingGenerator, law: &[f64]) -> Result<WeightedIndex<f64>> {
    if law.len() != gen.n() {
        return Err(Error::InvalidParameter(format!("law has {} entries for {} states", law.len(), gen.n())));
    }
    WeightedIndex::new(law).map_err(|e| Error::InvalidParameter(format!("invalid law: {e}")))
}

/// Estimates `ψ_λ(μ) = sum_x μ(x) ψ_λ(x)` with starting states drawn from `law`.
pub fn estimate_psi_from_law(gen: &AbsorbingGenerator, lambda: f64, law: &[f64], n: usize, seed: u64) -> Result<EstimateWithCI> {
    let starts = law_sampler(gen, law)?;
    let warnings = psi_warnings(gen, lambda)?;
    let mut est = monte_carlo(n, seed, |rng| {
        let x = starts.sample(rng);
        psi_sample(gen, lambda, x, rng)
    })?;
    est.warnings = warnings;
    Ok(est)
}

/// Absorption times `τ_∞` with starting states drawn from `law`.
pub fn sample_absorption_times(gen: &AbsorbingGenerator, law: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    let starts = law_sampler(gen, law)?;
    Ok(run_blocks(n, seed, |rng| {
        let x = starts.sample(rng);
        Ok(sample_path(gen, x, None, rng)?.elapsed)
    })?
    .into_iter()
    .flatten()
    .collect())
}

/// First two moments of a sample against `Exp(λ0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialLawCheck {
    pub n: usize,
    /// `mean · λ0`.
    pub scaled_mean: f64,
    /// `variance · λ0²`.
    pub scaled_variance: f64,
    /// `|scaled_mean - 1| <= 3/√n`.
    pub mean_ok: bool,
    /// `|scaled_variance - 1| <= 10/√n`.
    pub variance_ok: bool,
}

pub fn exponential_law_check(times: &[f64], lambda0: f64) -> ExponentialLawCheck {
    let mut m = Moments::default();
    times.iter().for_each(|&t| m.push(t));
    let n = times.len();
    let scaled_mean = m.mean * lambda0;
    let scaled_variance = m.m2 / (n as f64 - 1.0) * lambda0 * lambda0;
    let root = (n as f64).sqrt();
    ExponentialLawCheck {
        n,
        scaled_mean,
        scaled_variance,
        mean_ok: (scaled_mean - 1.0).abs() <= 3.0 / root,
        variance_ok: (scaled_variance - 1.0).abs() <= 10.0 / root,
    }
}

/// Conservative generator stored as off-diagonal rows plus the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicGenerator {
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl ErgodicGenerator {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn diag(&self, x: usize) -> f64 {
        self.diag[x]
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return self.diag[x];
        }
        self.rows[x].iter().find(|&&(v, _)| v == y).map_or(0.0, |&(_, r)| r)
    }

    /// `max_x |sum_y L(x,y)| / max_x |L(x,x)|`.
    pub fn max_row_sum_defect(&self) -> f64 {
        let scale = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let worst = (0..self.n())
            .map(|x| (self.diag[x] + self.rows[x].iter().map(|&(_, r)| r).sum::<f64>()).abs())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for x in 0..n {
            m[(x, x)] = self.diag[x];
            for &(y, r) in &self.rows[x] {
                m[(x, y)] = r;
            }
        }
        m
    }

    /// `η L`.
    pub fn apply_left(&self, eta: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = eta.iter().zip(&self.diag).map(|(e, d)| e * d).collect();
        for x in 0..self.n() {
            for &(y, r) in &self.rows[x] {
                out[y] += eta[x] * r;
            }
        }
        out
    }

    /// Stationary law by state reduction on the off-diagonal rates.
    pub fn stationary(&self) -> Vec<f64> {
        let n = self.n();
        let mut q = vec![0.0; n * n];
        for x in 0..n {
            for &(y, r) in &self.rows[x] {
                q[x * n + y] = r;
            }
        }
        gth_stationary(&q, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoobTransform {
    pub lambda0: f64,
    pub generator: ErgodicGenerator,
    /// `η̃ ∝ ν φ`.
    pub eta: Vec<f64>,
}

/// `L̃(x,y) = φ(y) L(x,y) / φ(x)`, `L̃(x,x) = L(x,x) + λ0`.
pub fn doob_transform(gen: &AbsorbingGenerator, pair: &DirichletEigenpair) -> Result<DoobTransform> {
    let phi = &pair.phi;
    let rows = (0..gen.n())
        .map(|x| gen.row(x).iter().map(|&(y, r)| (y, phi[y] * r / phi[x])).collect())
        .collect();
    let diag = (0..gen.n()).map(|x| gen.diag(x) + pair.lambda0).collect();
    let nu = quasi_stationary_dist(gen)?.nu;
    let mut eta: Vec<f64> = nu.iter().zip(phi).map(|(a, b)| a * b).collect();
    let total: f64 = eta.iter().sum();
    eta.iter_mut().for_each(|e| *e /= total);
    Ok(DoobTransform { lambda0: pair.lambda0, generator: ErgodicGenerator { rows, diag }, eta })
}

/// `μ e^{tQ}` by uniformization for `Q` given as off-diagonal rows and a
/// nonpositive diagonal. Returns the normalized law and `ln` of its mass.
pub fn propagate(rows: &[Vec<(usize, f64)>], diag: &[f64], mu: &[f64], t: f64) -> (Vec<f64>, f64) {
    let theta = diag.iter().fold(0.0f64, |m, d| m.max(-d));
    let total: f64 = mu.iter().sum();
    let mut v: Vec<f64> = mu.iter().map(|m| m / total).collect();
    let mut log_mass = total.ln();
    if theta == 0.0 || t == 0.0 {
        return (v, log_mass);
    }
    let chunks = (theta * t / 32.0).ceil().max(1.0);
    let a = theta * t / chunks;
    let max_terms = (a + 40.0 * a.sqrt() + 50.0) as usize;
    let tol = (UNIFORMIZATION_TOL / chunks).max(4.0 * f64::EPSILON);
    for _ in 0..chunks as usize {
        let mut term = v.clone();
        let mut w = (-a).exp();
        let mut cum = w;
        let mut acc: Vec<f64> = term.iter().map(|x| w * x).collect();
        let mut k = 0;
        while 1.0 - cum > tol && k < max_terms {
            let mut next: Vec<f64> = term.iter().zip(diag).map(|(x, d)| x * (1.0 + d / theta)).collect();
            for (x, row) in rows.iter().enumerate() {
                for &(y, r) in row {
                    next[y] += term[x] * r / theta;
                }
            }
            term = next;
            k += 1;
            w *= a / k as f64;
            cum += w;
            acc.iter_mut().zip(&term).for_each(|(s, x)| *s += w * x);
        }
        let mass: f64 = acc.iter().sum();
        log_mass += mass.ln();
        v = acc.into_iter().map(|x| x / mass).collect();
    }
    (v, log_mass)
}

/// `½ sum |a - b|`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub t: f64,
    /// `‖μ_t - ν‖_tv`.
    pub qsd_distance: f64,
    /// `‖μ̃0 P̃_t - η̃‖_tv`.
    pub doob_distance: f64,
    pub lower: f64,
    pub upper: f64,
    pub log_survival: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichTable {
    pub phi_min: f64,
    pub phi_max: f64,
    pub rows: Vec<SandwichRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl SandwichTable {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Compares the conditioned law `μ_t` with the Doob-transformed chain started at `μ̃0 ∝ μ0 φ`.
pub fn sandwich_experiment(gen: &AbsorbingGenerator, mu0: &[f64], times: &[f64]) -> Result<SandwichTable> {
    let n = gen.n();
    if mu0.len() != n {
        return Err(Error::InvalidParameter(format!("initial law has {} entries for {} states", mu0.len(), n)));
    }
    if let Some(i) = mu0.iter().position(|&m| !(m >= 0.0) || !m.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial law has an invalid entry at {i}")));
    }
    if !(mu0.iter().sum::<f64>() > 0.0) {
        return Err(Error::InvalidParameter("initial law has zero mass".into()));
    }
    if let Some(&t) = times.iter().find(|&&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid time {t}")));
    }
    let pair = dirichlet_eigenpair(gen)?;
    let nu = quasi_stationary_dist(gen)?.nu;
    let doob = doob_transform(gen, &pair)?;
    let (phi_min, phi_max) = (pair.phi_min(), pair.phi_max());

    let k_rows: Vec<Vec<(usize, f64)>> = (0..n).map(|x| gen.row(x).to_vec()).collect();
    let k_diag: Vec<f64> = (0..n).map(|x| gen.diag(x)).collect();
    let tilde_mu0: Vec<f64> = mu0.iter().zip(&pair.phi).map(|(m, p)| m * p).collect();

    let mut rows = Vec::with_capacity(times.len());
    let mut warnings = Vec::new();
    for &t in times {
        let (mu_t, log_survival) = propagate(&k_rows, &k_diag, mu0, t);
        let (tilde_t, _) = propagate(&doob.generator.rows, &doob.generator.diag, &tilde_mu0, t);
        let log_survival = log_survival - mu0.iter().sum::<f64>().ln();
        if log_survival < UNDERFLOW_MASS.ln() {
            warnings.push(Warning::Underflow { time: t, log10_survival: log_survival / std::f64::consts::LN_10 });
        }
        let qsd_distance = total_variation(&mu_t, &nu);
        let doob_distance = total_variation(&tilde_t, &doob.eta);
        let lower = phi_min / (2.0 * phi_max) * doob_distance;
        let upper = 2.0 * phi_max / phi_min * doob_distance;
        let holds = lower <= qsd_distance + SANDWICH_SLACK && qsd_distance <= upper + SANDWICH_SLACK;
        rows.push(SandwichRow { t, qsd_distance, doob_distance, lower, upper, log_survival, holds });
    }
    Ok(SandwichTable { phi_min, phi_max, rows, warnings })
}
