//! Dirichlet eigen-analysis of `K`: the Perron pair `(λ0, φ)`, the
//! quasi-stationary distribution, the real spectrum of reversible
//! generators and the first eigenvalues of minors.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{AbsorbingGenerator, RateMatrix};
use crate::linalg::{factor, perron_inverse_iteration, SymTridiagLdl, PERRON_MAX_ITER, PERRON_TOL};

/// How `φ` is scaled. The amplitude does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `φ(first state) = 1`.
    #[default]
    FirstState,
    /// `ν[φ] = 1`.
    QsdMass,
    /// `max φ = 1`.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletEigenpair {
    pub lambda0: f64,
    pub phi: Vec<f64>,
    pub normalization: Normalization,
    pub iterations: usize,
    /// Relative width of the certified bracket on `lambda0`.
    pub bracket: f64,
}

impl DirichletEigenpair {
    pub fn phi_max(&self) -> f64 {
        self.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn phi_min(&self) -> f64 {
        self.phi.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn amplitude(&self) -> f64 {
        self.phi_max() / self.phi_min()
    }

    /// `‖Kφ + λ0 φ‖∞ / (λ0 ‖φ‖∞)`.
    pub fn relative_residual(&self, k: &RateMatrix) -> f64 {
        let kphi = k.apply(&self.phi);
        let r = kphi
            .iter()
            .zip(&self.phi)
            .map(|(a, p)| (a + self.lambda0 * p).abs())
            .fold(0.0, f64::max);
        r / (self.lambda0 * self.phi_max())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiStationaryDist {
    pub nu: Vec<f64>,
    pub lambda0: f64,
}

/// `(λ0, φ)` with `φ(first state) = 1`.
pub fn dirichlet_eigenpair(gen: &AbsorbingGenerator) -> Result<DirichletEigenpair> {
    dirichlet_eigenpair_normalized(gen, Normalization::FirstState)
}

pub fn dirichlet_eigenpair_normalized(gen: &AbsorbingGenerator, normalization: Normalization) -> Result<DirichletEigenpair> {
    let solver = factor(gen);
    let res = perron_inverse_iteration(solver.as_ref(), false, PERRON_TOL, PERRON_MAX_ITER)?;
    let mut phi = res.vector;
    let scale = match normalization {
        Normalization::FirstState => phi[0],
        Normalization::Max => phi.iter().cloned().fold(0.0, f64::max),
        Normalization::QsdMass => {
            let nu = perron_inverse_iteration(solver.as_ref(), true, PERRON_TOL, PERRON_MAX_ITER)?.vector;
            let total: f64 = nu.iter().sum();
            nu.iter().zip(&phi).map(|(n, p)| n * p).sum::<f64>() / total
        }
    };
    phi.iter_mut().for_each(|p| *p /= scale);
    Ok(DirichletEigenpair { lambda0: res.lambda, phi, normalization, iterations: res.iterations, bracket: res.bracket })
}

/// Left Perron vector of `K`, normalized to a probability.
pub fn quasi_stationary_dist(gen: &AbsorbingGenerator) -> Result<QuasiStationaryDist> {
    let solver = factor(gen);
    let res = perron_inverse_iteration(solver.as_ref(), true, PERRON_TOL, PERRON_MAX_ITER)?;
    let total: f64 = res.vector.iter().sum();
    Ok(QuasiStationaryDist { nu: res.vector.iter().map(|v| v / total).collect(), lambda0: res.lambda })
}

/// `max φ / min φ`.
pub fn amplitude(phi: &[f64]) -> Result<f64> {
    if phi.is_empty() {
        return Err(Error::InvalidParameter("empty vector".into()));
    }
    if let Some(i) = phi.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::NonPositiveInput(i));
    }
    let max = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max / min)
}

/// Smallest eigenvalue of `-K` for an arbitrary sub-Markovian rate matrix.
/// Reducible matrices are split into strongly connected blocks.
pub fn lambda0_of(rates: &RateMatrix) -> Result<f64> {
    let comps = rates.strongly_connected_components();
    if comps.len() == 1 {
        return lambda0_irreducible(rates);
    }
    let mut best = f64::INFINITY;
    for comp in comps {
        best = best.min(lambda0_irreducible(&rates.restrict(&comp))?);
    }
    Ok(best)
}

fn lambda0_irreducible(rates: &RateMatrix) -> Result<f64> {
    if rates.n() == 1 {
        return Ok(rates.exit_rate(0));
    }
    if rates.kills().iter().all(|&k| k <= 0.0) {
        return Ok(0.0);
    }
    let solver = factor(rates);
    Ok(perron_inverse_iteration(solver.as_ref(), false, PERRON_TOL, PERRON_MAX_ITER)?.lambda)
}

/// `λ0(S \ {x})`, with `λ0(∅) = +∞`.
pub fn lambda0_minor(gen: &AbsorbingGenerator, x: usize) -> Result<f64> {
    match gen.minor(&[x]) {
        Err(Error::EmptyResult) => Ok(f64::INFINITY),
        Err(e) => Err(e),
        Ok(m) => lambda0_of(&m.rates),
    }
}

/// `λ0' = min over x in O of λ0(S \ {x})`.
pub fn lambda0_prime(gen: &AbsorbingGenerator) -> Result<f64> {
    let mut best = f64::INFINITY;
    for x in gen.absorbing_states() {
        best = best.min(lambda0_minor(gen, x)?);
    }
    Ok(best)
}

/// Result of the detailed-balance search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reversibility {
    /// Normalized reversible probability `η` on `S`.
    Reversible(Vec<f64>),
    /// A cycle (first vertex repeated at the end) on which Kolmogorov's criterion fails.
    Witness(Vec<usize>),
}

impl Reversibility {
    pub fn measure(&self) -> Option<&[f64]> {
        match self {
            Reversibility::Reversible(eta) => Some(eta),
            Reversibility::Witness(_) => None,
        }
    }
}

/// Solve `η(x) K(x,y) = η(y) K(y,x)` along a BFS tree, then check every
/// remaining edge.
pub fn reversible_measure(rates: &RateMatrix) -> Reversibility {
    let n = rates.n();
    let mut log_eta = vec![f64::NAN; n];
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    log_eta[0] = 0.0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        for &(y, r) in rates.row(x) {
            let back = rates.rate(y, x);
            if back <= 0.0 {
                return Reversibility::Witness(vec![x, y, x]);
            }
            if log_eta[y].is_nan() {
                log_eta[y] = log_eta[x] + r.ln() - back.ln();
                parent[y] = x;
                depth[y] = depth[x] + 1;
                queue.push_back(y);
            }
        }
    }
    for x in 0..n {
        for &(y, r) in rates.row(x) {
            let a = log_eta[x] + r.ln();
            let b = log_eta[y] + rates.rate(y, x).ln();
            if (a - b).abs() > 1e-12 * (1.0 + a.abs() + b.abs()) {
                return Reversibility::Witness(kolmogorov_cycle(&parent, &depth, x, y));
            }
        }
    }
    let max = log_eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut eta: Vec<f64> = log_eta.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = eta.iter().sum();
    eta.iter_mut().for_each(|e| *e /= total);
    Reversibility::Reversible(eta)
}

/// Cycle `x -> y -> (tree path) -> x`.
fn kolmogorov_cycle(parent: &[usize], depth: &[usize], x: usize, y: usize) -> Vec<usize> {
    let (mut a, mut b) = (y, x);
    let mut from_y = vec![a];
    let mut from_x = vec![b];
    while depth[a] > depth[b] {
        a = parent[a];
        from_y.push(a);
    }
    while depth[b] > depth[a] {
        b = parent[b];
        from_x.push(b);
    }
    while a != b {
        a = parent[a];
        b = parent[b];
        from_y.push(a);
        from_x.push(b);
    }
    from_x.pop();
    let mut cycle = vec![x];
    cycle.extend(from_y);
    cycle.extend(from_x.into_iter().rev());
    cycle
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Eigenvalues of `-K`, ascending. The first entry is the inverse-iteration `λ0`.
    pub eigenvalues: Vec<f64>,
    pub reversible_measure: Option<Vec<f64>>,
    pub lambda0_prime: f64,
    /// Removed state -> ascending eigenvalues of the minor.
    pub minor_spectra: BTreeMap<usize, Vec<f64>>,
}

impl SpectrumReport {
    pub fn lambda0(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible_measure.is_some()
    }
}

/// Ascending eigenvalues of `-K` for a reversible sub-Markovian matrix.
/// Birth–death chains go through relative-accuracy bisection; anything else
/// through a dense symmetric solve of `D^{1/2}(-K)D^{-1/2}`.
pub fn reversible_eigenvalues(rates: &RateMatrix) -> Vec<f64> {
    if rates.n() == 1 {
        return vec![rates.exit_rate(0)];
    }
    if let Some(bd) = rates.as_birth_death() {
        return SymTridiagLdl::new(&bd).all_eigenvalues();
    }
    let n = rates.n();
    // symmetrized off-diagonal is -sqrt(K(x,y) K(y,x)), which does not need η
    let mut s = DMatrix::zeros(n, n);
    for x in 0..n {
        s[(x, x)] = rates.exit_rate(x);
        for &(y, r) in rates.row(x) {
            s[(x, y)] = -(r * rates.rate(y, x)).sqrt();
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// All eigenvalues of `-K`. Reversible inputs are symmetrized; for others
/// the eigenvalues are accepted only when they are numerically real.
pub fn full_spectrum(gen: &AbsorbingGenerator) -> Result<SpectrumReport> {
    spectrum(gen, false)
}

/// [`full_spectrum`] plus the spectrum of every single-state minor.
pub fn full_spectrum_with_minors(gen: &AbsorbingGenerator) -> Result<SpectrumReport> {
    spectrum(gen, true)
}

fn spectrum(gen: &AbsorbingGenerator, minors: bool) -> Result<SpectrumReport> {
    let lambda0 = dirichlet_eigenpair(gen)?.lambda0;
    let reversibility = reversible_measure(gen);
    let mut eigenvalues = match reversibility {
        Reversibility::Reversible(_) => reversible_eigenvalues(gen),
        Reversibility::Witness(_) => general_real_eigenvalues(gen)?,
    };
    eigenvalues[0] = lambda0;
    let lambda0_prime = lambda0_prime(gen)?;
    let mut minor_spectra = BTreeMap::new();
    if minors {
        for x in 0..gen.n() {
            let ev = match gen.minor(&[x]) {
                Err(Error::EmptyResult) => Vec::new(),
                Err(e) => return Err(e),
                Ok(m) => match reversibility {
                    Reversibility::Reversible(_) => reversible_eigenvalues(&m.rates),
                    Reversibility::Witness(_) => general_real_eigenvalues(&m.rates)?,
                },
            };
            minor_spectra.insert(x, ev);
        }
    }
    Ok(SpectrumReport {
        eigenvalues,
        reversible_measure: reversibility.measure().map(|m| m.to_vec()),
        lambda0_prime,
        minor_spectra,
    })
}

fn general_real_eigenvalues(rates: &RateMatrix) -> Result<Vec<f64>> {
    let a = -rates.to_dense();
    let scale = rates.max_rate().max(f64::MIN_POSITIVE);
    let ev = a.complex_eigenvalues();
    let max_imag = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_imag > 1e-9 * scale {
        return Err(Error::NotDiagonalizableDetected { max_imag });
    }
    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| a.total_cmp(b));
    Ok(re)
}
