//! Computable upper bounds on the amplitude `a_φ`.
//!
//! * path bound: `a_φ <= 1 / min P(γ_{y,x})` over `y ∈ O`, `x ∈ S`, where
//!   `P(γ) = prod L(γk,γk+1) / (|L(γk,γk)| - λ0)`;
//! * rough bound: `a_φ <= max Q(γ_{y,x})` with `Q(γ) = prod |L(γk,γk)| / L(γk,γk+1)`;
//! * graph bound `(R d / r)^D` for walks on digraphs with rates in `[r, R]`;
//! * spectral bound for reversible generators, from `λ0`, `λ0'` and the spectrum;
//! * the exact product formula for birth–death chains absorbed from the first state.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::birth_death::gap_identity_chain;
use crate::error::{Error, Result};
use crate::generator::{AbsorbingGenerator, Path, RateMatrix};
use crate::linalg::SymTridiagLdl;
use crate::spectral::{dirichlet_eigenpair, SpectrumReport};

/// Below this relative margin `|L(x,x)| - λ` counts as zero.
pub const SINGULAR_TOL: f64 = 1e-14;

fn factor_denominator(rates: &RateMatrix, x: usize, lambda: f64) -> Result<f64> {
    let q = rates.exit_rate(x);
    let den = q - lambda;
    if den <= SINGULAR_TOL * q {
        return Err(Error::SingularFactor { state: x, exit_rate: q, lambda });
    }
    Ok(den)
}

/// `P(γ)`; the empty path has weight 1.
pub fn path_weight(rates: &RateMatrix, lambda: f64, path: &Path) -> Result<f64> {
    let mut p = 1.0;
    for (u, v) in path.edges() {
        p *= rates.rate(u, v) / factor_denominator(rates, u, lambda)?;
    }
    Ok(p)
}

/// `Q(γ)`, the `λ0`-free companion of [`path_weight`].
pub fn path_q(rates: &RateMatrix, path: &Path) -> f64 {
    path.edges().map(|(u, v)| rates.exit_rate(u) / rates.rate(u, v)).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PathChoice {
    /// Maximize `P(γ)` for every pair.
    #[default]
    Best,
    /// Fewest edges, lexicographically smallest among those.
    Geodesic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCertificate {
    pub from: usize,
    pub to: usize,
    pub path: Path,
    pub weight: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBoundReport {
    pub choice: PathChoice,
    pub lambda0: f64,
    pub paths: Vec<PathCertificate>,
    /// `(min P)^{-1}`.
    pub bound: f64,
    /// `max Q` over the same paths.
    pub rough_bound: f64,
    /// Set when the search hit a numerically negative cycle and used the clamped fallback.
    pub used_fallback: bool,
}

/// Path bound over one path per `(y, x)`, `y ∈ O`, `x ∈ S`.
pub fn path_bound(gen: &AbsorbingGenerator, lambda0: f64, choice: PathChoice) -> Result<PathBoundReport> {
    let n = gen.n();
    let costs = edge_costs(gen, lambda0)?;
    let mut paths = Vec::new();
    let mut used_fallback = false;
    for y in gen.absorbing_states() {
        let preds = match choice {
            PathChoice::Geodesic => bfs_tree(gen, y),
            PathChoice::Best => match bellman_ford(&costs, y) {
                Some(p) => p,
                None => {
                    used_fallback = true;
                    dijkstra_clamped(&costs, y)
                }
            },
        };
        for x in 0..n {
            let path = Path::new(gen, trace_back(&preds, y, x))?;
            let weight = path_weight(gen, lambda0, &path)?;
            let q = path_q(gen, &path);
            paths.push(PathCertificate { from: y, to: x, path, weight, q });
        }
    }
    let min_p = paths.iter().map(|c| c.weight).fold(f64::INFINITY, f64::min);
    let max_q = paths.iter().map(|c| c.q).fold(0.0, f64::max);
    Ok(PathBoundReport { choice, lambda0, paths, bound: 1.0 / min_p, rough_bound: max_q, used_fallback })
}

/// Adjacency with costs `-ln(L(u,v) / (|L(u,u)| - λ0))`.
fn edge_costs(rates: &RateMatrix, lambda0: f64) -> Result<Vec<Vec<(usize, f64)>>> {
    (0..rates.n())
        .map(|u| {
            if rates.row(u).is_empty() {
                return Ok(Vec::new());
            }
            let den = factor_denominator(rates, u, lambda0)?;
            Ok(rates.row(u).iter().map(|&(v, r)| (v, -(r / den).ln())).collect())
        })
        .collect()
}

fn trace_back(preds: &[usize], source: usize, target: usize) -> Vec<usize> {
    let mut rev = vec![target];
    let mut v = target;
    while v != source {
        v = preds[v];
        rev.push(v);
        assert!(rev.len() <= preds.len(), "predecessor cycle");
    }
    rev.reverse();
    rev
}

fn better(cost: f64, edges: usize, old_cost: f64, old_edges: usize) -> bool {
    let tol = 1e-12 * (1.0 + cost.abs().max(old_cost.abs()));
    cost < old_cost - tol || (cost <= old_cost + tol && edges < old_edges)
}

/// Minimum-cost walks with at most `n - 1` edges. `None` if the costs
/// admit a (numerically) negative cycle.
fn bellman_ford(adj: &[Vec<(usize, f64)>], source: usize) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut edges = vec![usize::MAX; n];
    let mut pred = vec![usize::MAX; n];
    dist[source] = 0.0;
    edges[source] = 0;
    pred[source] = source;
    for _ in 0..n.saturating_sub(1) {
        let mut changed = false;
        for u in 0..n {
            if !dist[u].is_finite() {
                continue;
            }
            for &(v, c) in &adj[u] {
                if v == source {
                    continue;
                }
                let nd = dist[u] + c;
                let ne = edges[u] + 1;
                if !dist[v].is_finite() || better(nd, ne, dist[v], edges[v]) {
                    dist[v] = nd;
                    edges[v] = ne;
                    pred[v] = u;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for u in 0..n {
        if !dist[u].is_finite() {
            continue;
        }
        for &(v, c) in &adj[u] {
            let tol = 1e-12 * (1.0 + dist[v].abs());
            if dist[u] + c < dist[v] - tol {
                return None;
            }
        }
    }
    Some(pred)
}

/// Dijkstra on `max(cost, 0)`; the chosen paths are re-scored exactly by the caller.
fn dijkstra_clamped(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<usize> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut edges = vec![usize::MAX; n];
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    edges[source] = 0;
    pred[source] = source;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() && (u == usize::MAX || better(dist[v], edges[v], dist[u], edges[u])) {
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        for &(v, c) in &adj[u] {
            if done[v] {
                continue;
            }
            let nd = dist[u] + c.max(0.0);
            if !dist[v].is_finite() || better(nd, edges[u] + 1, dist[v], edges[v]) {
                dist[v] = nd;
                edges[v] = edges[u] + 1;
                pred[v] = u;
            }
        }
    }
    pred
}

fn bfs_tree(rates: &RateMatrix, source: usize) -> Vec<usize> {
    let mut pred = vec![usize::MAX; rates.n()];
    pred[source] = source;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in rates.row(u) {
            if pred[v] == usize::MAX {
                pred[v] = u;
                queue.push_back(v);
            }
        }
    }
    pred
}

/// `(R d / r)^D`.
pub fn graph_bound(max_out_degree: usize, diameter: usize, r_min: f64, r_max: f64) -> Result<f64> {
    if max_out_degree < 1 {
        return Err(Error::InvalidParameter("out-degree must be at least 1".into()));
    }
    if !(r_min > 0.0) || !(r_min <= r_max) || !r_max.is_finite() {
        return Err(Error::InvalidParameter(format!("need 0 < r <= R, got r = {r_min}, R = {r_max}")));
    }
    Ok((r_max * max_out_degree as f64 / r_min).powi(diameter as i32))
}

/// Inputs of [`graph_bound`] read off a generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParameters {
    /// Maximum out-degree, the absorbing edge included.
    pub max_out_degree: usize,
    /// Longest shortest directed path between two states of `S`.
    pub diameter: usize,
    pub r_min: f64,
    pub r_max: f64,
}

pub fn graph_parameters(gen: &AbsorbingGenerator) -> GraphParameters {
    let n = gen.n();
    let max_out_degree = (0..n).map(|x| gen.row(x).len() + usize::from(gen.kill(x) > 0.0)).max().unwrap_or(0);
    let mut diameter = 0;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in gen.row(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        diameter = diameter.max(dist.into_iter().max().unwrap_or(0));
    }
    let all = gen.transitions().map(|t| t.rate).chain(gen.kills().iter().cloned().filter(|&k| k > 0.0));
    let (r_min, r_max) = all.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    GraphParameters { max_out_degree, diameter, r_min, r_max }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBoundReport {
    pub lambda0: f64,
    pub lambda0_prime: f64,
    /// `1 - λ0/λ0'` first, then `1 - λ0/λk` for `k = 1..N-1`.
    pub factors: Vec<f64>,
    pub bound: f64,
    /// `max over y ∈ O of prod_l (1 - λ0/λ̃l)^{-1}` over the minor removing `y`,
    /// when minor spectra are in the report. Sits between `a_φ` and `bound`.
    pub minor_product: Option<f64>,
}

/// Spectral bound for reversible generators.
pub fn spectral_bound(report: &SpectrumReport) -> Result<SpectralBoundReport> {
    if !report.is_reversible() {
        return Err(Error::NotReversible);
    }
    let lambda0 = report.lambda0();
    let lambda0_prime = report.lambda0_prime;
    if !(lambda0_prime > lambda0) {
        return Err(Error::DegenerateGap { lambda0, lambda0_prime });
    }
    let mut factors = vec![1.0 - lambda0 / lambda0_prime];
    for &lk in &report.eigenvalues[1..] {
        if !(lk > lambda0) {
            return Err(Error::DegenerateGap { lambda0, lambda0_prime: lk });
        }
        factors.push(1.0 - lambda0 / lk);
    }
    let mut log_sum = (-lambda0 / lambda0_prime).ln_1p();
    for &lk in &report.eigenvalues[1..] {
        log_sum += (-lambda0 / lk).ln_1p();
    }
    let minor_product = if report.minor_spectra.is_empty() {
        None
    } else {
        let mut best: Option<f64> = None;
        for spectrum in report.minor_spectra.values() {
            let v = inverse_product(lambda0, spectrum);
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        best
    };
    Ok(SpectralBoundReport { lambda0, lambda0_prime, factors, bound: (-log_sum).exp(), minor_product })
}

/// `prod (1 - λ0/λ)^{-1}` accumulated in log space.
fn inverse_product(lambda0: f64, eigenvalues: &[f64]) -> f64 {
    (-eigenvalues.iter().map(|&l| (-lambda0 / l).ln_1p()).sum::<f64>()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactBdReport {
    pub lambda0: f64,
    /// Eigenvalues of the minor removing the first state, ascending.
    pub minor_eigenvalues: Vec<f64>,
    /// `λ̃0 - λ0` from the gap identity, free of cancellation.
    pub gap: Option<f64>,
    pub amplitude: f64,
}

/// For a birth–death chain absorbed only from its first state,
/// `a_φ = prod_l (1 - λ0/λ̃l)^{-1}` over the minor removing that state.
///
/// The `l = 0` factor is taken as `(λ̃0 - λ0)/λ̃0` with the numerator from
/// [`gap_identity_chain`], since `λ̃0` can agree with `λ0` to many digits.
pub fn exact_bd_amplitude(gen: &AbsorbingGenerator) -> Result<ExactBdReport> {
    let bd = gen
        .as_birth_death()
        .ok_or_else(|| Error::NotBirthDeath("a jump connects non-adjacent states".into()))?;
    if gen.absorbing_states() != [0] {
        return Err(Error::NotBirthDeath("absorption must happen from the first state only".into()));
    }
    let lambda0 = dirichlet_eigenpair(gen)?.lambda0;
    if gen.n() == 1 {
        return Ok(ExactBdReport { lambda0, minor_eigenvalues: Vec::new(), gap: None, amplitude: 1.0 });
    }
    let minor_eigenvalues = SymTridiagLdl::new(&bd.slice(1, gen.n())).all_eigenvalues();
    let gap = gap_identity_chain(&bd)?.rhs;
    let amplitude = minor_eigenvalues[0] / gap * inverse_product(lambda0, &minor_eigenvalues[1..]);
    Ok(ExactBdReport { lambda0, minor_eigenvalues, gap: Some(gap), amplitude })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{build_graph_walk, build_rho_chain, Transition};
    use crate::spectral::{full_spectrum, full_spectrum_with_minors};

    const SQRT5: f64 = 2.23606797749979;
    const GOLDEN: f64 = 1.618033988749895;

    fn golden() -> AbsorbingGenerator {
        AbsorbingGenerator::new(2, &[Transition::new(0, 1, 1.0), Transition::new(1, 0, 1.0)], &[(0, 1.0)]).unwrap()
    }

    #[test]
    fn golden_path_weights() {
        let g = golden();
        let l0 = (3.0 - SQRT5) / 2.0;
        let p = Path::new(&g, vec![0, 1]).unwrap();
        // 1 / (2 - λ0) = 1/φ
        assert!((path_weight(&g, l0, &p).unwrap() - 1.0 / GOLDEN).abs() < 1e-15);
        assert_eq!(path_weight(&g, l0, &Path::new(&g, vec![1]).unwrap()).unwrap(), 1.0);
        assert_eq!(path_weight(&g, 0.0, &p).unwrap(), 0.5);
        assert_eq!(path_q(&g, &p), 2.0);
        assert!(matches!(path_weight(&g, 2.0, &p), Err(Error::SingularFactor { state: 0, .. })));
    }

    #[test]
    fn golden_path_bound() {
        let g = golden();
        let l0 = dirichlet_eigenpair(&g).unwrap().lambda0;
        let rep = path_bound(&g, l0, PathChoice::Best).unwrap();
        assert!((rep.bound - GOLDEN).abs() < 1e-13);
        assert_eq!(rep.rough_bound, 2.0);
        assert_eq!(rep.paths.len(), 2);
        assert!(!rep.used_fallback);
    }

    #[test]
    fn golden_spectral_and_exact() {
        let g = golden();
        let rep = spectral_bound(&full_spectrum_with_minors(&g).unwrap()).unwrap();
        // ((1 - λ0)(1 - λ0/λ1))^{-1} with λ0 = (3-√5)/2, λ1 = (3+√5)/2
        let l0 = (3.0 - SQRT5) / 2.0;
        let l1 = (3.0 + SQRT5) / 2.0;
        let expected = 1.0 / ((1.0 - l0) * (1.0 - l0 / l1));
        assert!((rep.bound - expected).abs() < 1e-12);
        assert!((rep.bound - 1.894427190999916).abs() < 1e-12);
        assert!((rep.minor_product.unwrap() - GOLDEN).abs() < 1e-12);
        let exact = exact_bd_amplitude(&g).unwrap();
        assert!((exact.amplitude - GOLDEN).abs() < 1e-13);
    }

    #[test]
    fn singleton_bounds() {
        let g = AbsorbingGenerator::new(1, &[], &[(0, 3.0)]).unwrap();
        let rep = spectral_bound(&full_spectrum(&g).unwrap()).unwrap();
        assert_eq!(rep.bound, 1.0);
        let pb = path_bound(&g, 3.0, PathChoice::Best).unwrap();
        assert_eq!(pb.bound, 1.0);
        assert_eq!(exact_bd_amplitude(&g).unwrap().amplitude, 1.0);
    }

    #[test]
    fn graph_bounds() {
        assert_eq!(graph_bound(2, 0, 1.0, 3.0).unwrap(), 1.0);
        assert_eq!(graph_bound(1, 3, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(graph_bound(2, 5, 0.5, 1.0).unwrap(), 4f64.powi(5));
        assert!(graph_bound(0, 1, 1.0, 1.0).is_err());
        assert!(graph_bound(1, 1, 2.0, 1.0).is_err());
        let rho = 0.5;
        let n = 7;
        let params = graph_parameters(&build_rho_chain(n, rho).unwrap());
        assert_eq!(params.max_out_degree, 2);
        assert_eq!(params.diameter, n - 1);
        assert_eq!((params.r_min, params.r_max), (0.5, 1.5));
    }

    #[test]
    fn digraph_rough_bound_below_degree_power() {
        // directed 4-cycle with chords, unit rates
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (2, 0)];
        let g = build_graph_walk(4, &edges, &[1]).unwrap();
        let l0 = dirichlet_eigenpair(&g).unwrap().lambda0;
        let rep = path_bound(&g, l0, PathChoice::Geodesic).unwrap();
        let p = graph_parameters(&g);
        let d_pow = (p.max_out_degree as f64).powi(p.diameter as i32);
        assert!(rep.rough_bound <= d_pow);
        assert!(rep.bound <= rep.rough_bound);
        assert!(dirichlet_eigenpair(&g).unwrap().amplitude() <= rep.bound * (1.0 + 1e-12));
    }

    #[test]
    fn not_birth_death() {
        let g = build_graph_walk(3, &[(0, 1), (1, 2), (2, 0), (1, 0), (2, 1), (0, 2)], &[0]).unwrap();
        assert!(matches!(exact_bd_amplitude(&g), Err(Error::NotBirthDeath(_))));
        let two_exits = AbsorbingGenerator::new(
            2,
            &[Transition::new(0, 1, 1.0), Transition::new(1, 0, 1.0)],
            &[(0, 1.0), (1, 1.0)],
        )
        .unwrap();
        assert!(matches!(exact_bd_amplitude(&two_exits), Err(Error::NotBirthDeath(_))));
    }

    #[test]
    fn path_weight_increases_with_edge_rate() {
        let g = build_rho_chain(4, 1.0).unwrap();
        let path = Path::new(&g, vec![0, 1, 2, 3]).unwrap();
        let base = path_weight(&g, 0.1, &path).unwrap();
        // raise L(1,2) while keeping the denominators fixed
        let scaled: f64 = path
            .edges()
            .map(|(u, v)| {
                let r = if (u, v) == (1, 2) { 1.5 * g.rate(u, v) } else { g.rate(u, v) };
                r / (g.exit_rate(u) - 0.1)
            })
            .product();
        assert!(scaled > base);
    }
}
