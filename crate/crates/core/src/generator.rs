//! Absorbing generators on a finite state space `S`, with the absorbing
//! point kept out of the state list: absorption is a per-state rate.
//!
//! States are 0-based in this module.

use std::collections::VecDeque;
use std::ops::Deref;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking derived row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// One off-diagonal rate `L(from, to)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

impl Transition {
    pub fn new(from: usize, to: usize, rate: f64) -> Self {
        Self { from, to, rate }
    }
}

/// A sub-Markovian rate matrix in sparse row form.
///
/// Only positive off-diagonal rates are stored. The diagonal is never
/// stored: `K(x,x) = -(sum of row + kill(x))` is derived on demand, so the
/// full row of the absorbing generator sums to zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    kill: Vec<f64>,
    exit: Vec<f64>,
}

impl RateMatrix {
    /// Assemble from triplets. Duplicate triplets are summed, zero rates dropped.
    pub fn from_triplets(n: usize, transitions: &[Transition], kill: &[(usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("state space must be nonempty".into()));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for t in transitions {
            check_index(t.from, n)?;
            check_index(t.to, n)?;
            check_rate(t.from, t.to, t.rate)?;
            if t.from == t.to {
                return Err(Error::SelfTransition(t.from));
            }
            if t.rate > 0.0 {
                rows[t.from].push((t.to, t.rate));
            }
        }
        let mut k = vec![0.0; n];
        for &(x, r) in kill {
            check_index(x, n)?;
            check_rate(x, usize::MAX, r)?;
            k[x] += r;
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|e| e.0);
            row.dedup_by(|later, first| {
                if later.0 == first.0 {
                    first.1 += later.1;
                    true
                } else {
                    false
                }
            });
        }
        Ok(Self::from_rows(rows, k))
    }

    fn from_rows(rows: Vec<Vec<(usize, f64)>>, kill: Vec<f64>) -> Self {
        let exit = rows
            .iter()
            .zip(&kill)
            .map(|(row, k)| row.iter().map(|e| e.1).sum::<f64>() + k)
            .collect();
        Self { rows, kill, exit }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Positive off-diagonal entries of row `x`, sorted by column.
    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        match self.rows[x].binary_search_by_key(&y, |e| e.0) {
            Ok(i) => self.rows[x][i].1,
            Err(_) => 0.0,
        }
    }

    /// Killing (absorption) rate `L(x, ∞)`.
    pub fn kill(&self, x: usize) -> f64 {
        self.kill[x]
    }

    pub fn kills(&self) -> &[f64] {
        &self.kill
    }

    /// `|L(x,x)|`: total jump rate out of `x`, absorption included.
    pub fn exit_rate(&self, x: usize) -> f64 {
        self.exit[x]
    }

    pub fn exit_rates(&self) -> &[f64] {
        &self.exit
    }

    pub fn diag(&self, x: usize) -> f64 {
        -self.exit[x]
    }

    /// Largest rate magnitude, diagonal included.
    pub fn max_rate(&self) -> f64 {
        self.exit.iter().cloned().fold(0.0, f64::max)
    }

    /// Entry `K(x,y)` including the derived diagonal.
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        if x == y {
            self.diag(x)
        } else {
            self.rate(x, y)
        }
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |&(y, r)| Transition::new(x, y, r)))
    }

    /// `max_x |sum_y L(x,y)|` over the full row (absorbing column included).
    pub fn max_row_sum_defect(&self) -> f64 {
        (0..self.n())
            .map(|x| {
                let s: f64 = self.rows[x].iter().map(|e| e.1).sum::<f64>() + self.kill[x] - self.exit[x];
                s.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Dense copy of `K`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut k = DMatrix::zeros(n, n);
        for x in 0..n {
            k[(x, x)] = self.diag(x);
            for &(y, r) in &self.rows[x] {
                k[(x, y)] = r;
            }
        }
        k
    }

    /// `K f` for a function `f` on `S`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|x| {
                self.rows[x].iter().map(|&(y, r)| r * f[y]).sum::<f64>() - self.exit[x] * f[x]
            })
            .collect()
    }

    /// `mu K` for a measure `mu` on `S`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.n()).map(|x| -self.exit[x] * mu[x]).collect();
        for x in 0..self.n() {
            for &(y, r) in &self.rows[x] {
                out[y] += mu[x] * r;
            }
        }
        out
    }

    /// Forward adjacency lists of the positive-rate digraph.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        self.rows.iter().map(|row| row.iter().map(|e| e.0).collect()).collect()
    }

    fn reverse_adjacency(&self) -> Vec<Vec<usize>> {
        let mut rev = vec![Vec::new(); self.n()];
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, _) in row {
                rev[y].push(x);
            }
        }
        rev
    }

    /// `Err(NonIrreducible)` naming a witness pair when the positive-rate
    /// digraph is not strongly connected.
    pub fn check_irreducible(&self) -> Result<()> {
        let fwd = reachable_from(&self.adjacency(), 0);
        if let Some(y) = fwd.iter().position(|&r| !r) {
            return Err(Error::NonIrreducible { from: 0, unreachable: y });
        }
        let bwd = reachable_from(&self.reverse_adjacency(), 0);
        if let Some(x) = bwd.iter().position(|&r| !r) {
            return Err(Error::NonIrreducible { from: x, unreachable: 0 });
        }
        Ok(())
    }

    pub fn is_irreducible(&self) -> bool {
        self.check_irreducible().is_ok()
    }

    /// Strongly connected components (Kosaraju), each sorted ascending.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let adj = self.adjacency();
        let rev = self.reverse_adjacency();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![(s, 0usize)];
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                if *i < adj[v].len() {
                    let w = adj[v][*i];
                    *i += 1;
                    if !seen[w] {
                        seen[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    order.push(v);
                    stack.pop();
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut comps = Vec::new();
        for &s in order.iter().rev() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut i = 0;
            while i < members.len() {
                let v = members[i];
                for &w in &rev[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        members.push(w);
                    }
                }
                i += 1;
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    /// Principal sub-matrix on `keep` (ascending). Rates into dropped states
    /// become killing, so exit rates are unchanged.
    pub fn restrict(&self, keep: &[usize]) -> RateMatrix {
        let mut pos = vec![usize::MAX; self.n()];
        for (i, &x) in keep.iter().enumerate() {
            pos[x] = i;
        }
        let mut rows = Vec::with_capacity(keep.len());
        let mut kill = Vec::with_capacity(keep.len());
        for &x in keep {
            let mut k = self.kill[x];
            let mut row = Vec::new();
            for &(y, r) in &self.rows[x] {
                if pos[y] == usize::MAX {
                    k += r;
                } else {
                    row.push((pos[y], r));
                }
            }
            row.sort_by_key(|e| e.0);
            rows.push(row);
            kill.push(k);
        }
        let mut m = Self::from_rows(rows, kill);
        // keep |L(x,x)| bit-identical to the parent
        for (i, &x) in keep.iter().enumerate() {
            m.exit[i] = self.exit[x];
        }
        m
    }

    /// Tridiagonal view when every positive rate joins neighbours in index order.
    pub fn as_birth_death(&self) -> Option<BirthDeathChain> {
        let n = self.n();
        let mut up = vec![0.0; n];
        let mut down = vec![0.0; n];
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, r) in row {
                if y == x + 1 {
                    up[x] = r;
                } else if y + 1 == x {
                    down[x] = r;
                } else {
                    return None;
                }
            }
        }
        Some(BirthDeathChain { up, down, kill: self.kill.clone(), exit: self.exit.clone() })
    }
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        Err(Error::StateOutOfRange { index: i, n_states: n })
    } else {
        Ok(())
    }
}

fn check_rate(from: usize, to: usize, rate: f64) -> Result<()> {
    if !rate.is_finite() {
        return Err(Error::NonFiniteRate { from, to });
    }
    if rate < 0.0 {
        return Err(Error::NegativeRate { from, to, rate });
    }
    Ok(())
}

fn reachable_from(adj: &[Vec<usize>], s: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// A validated absorbing generator: `K` irreducible and at least one state
/// with positive absorption rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingGenerator {
    rates: RateMatrix,
}

impl Deref for AbsorbingGenerator {
    type Target = RateMatrix;

    fn deref(&self) -> &RateMatrix {
        &self.rates
    }
}

impl AbsorbingGenerator {
    pub fn new(n_states: usize, transitions: &[Transition], absorption: &[(usize, f64)]) -> Result<Self> {
        Self::from_rate_matrix(RateMatrix::from_triplets(n_states, transitions, absorption)?)
    }

    pub fn from_rate_matrix(rates: RateMatrix) -> Result<Self> {
        if rates.kills().iter().all(|&k| k <= 0.0) {
            return Err(Error::NoAbsorption);
        }
        rates.check_irreducible()?;
        debug_assert!(rates.max_row_sum_defect() <= ROW_SUM_TOL * rates.max_rate().max(1.0));
        Ok(Self { rates })
    }

    pub fn rates(&self) -> &RateMatrix {
        &self.rates
    }

    pub fn n_states(&self) -> usize {
        self.rates.n()
    }

    /// `O = {x : L(x,∞) > 0}`.
    pub fn absorbing_states(&self) -> Vec<usize> {
        (0..self.n()).filter(|&x| self.kill(x) > 0.0).collect()
    }

    /// The `(S \ removed)` restriction of `K`.
    pub fn minor(&self, removed: &[usize]) -> Result<Minor> {
        let n = self.n();
        let mut drop = vec![false; n];
        for &x in removed {
            check_index(x, n)?;
            drop[x] = true;
        }
        let kept: Vec<usize> = (0..n).filter(|&x| !drop[x]).collect();
        if kept.is_empty() {
            return Err(Error::EmptyResult);
        }
        let rates = self.rates.restrict(&kept);
        Ok(Minor { kept, rates })
    }
}

/// A principal minor of `K`. Need not be irreducible.
#[derive(Debug, Clone, PartialEq)]
pub struct Minor {
    /// Parent indices of the retained states, ascending.
    pub kept: Vec<usize>,
    pub rates: RateMatrix,
}

impl Minor {
    /// Promote to a validated generator when the minor is irreducible.
    pub fn into_generator(self) -> Result<AbsorbingGenerator> {
        AbsorbingGenerator::from_rate_matrix(self.rates)
    }
}

/// A path `(γ0, …, γl)` with positive rates on every step; `l = 0` allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path(Vec<usize>);

impl Path {
    pub fn new(rates: &RateMatrix, vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidParameter("a path needs at least one vertex".into()));
        }
        for &v in &vertices {
            check_index(v, rates.n())?;
        }
        for w in vertices.windows(2) {
            if rates.rate(w[0], w[1]) <= 0.0 {
                return Err(Error::InvalidPath { from: w[0], to: w[1] });
            }
        }
        Ok(Self(vertices))
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn start(&self) -> usize {
        self.0[0]
    }

    pub fn end(&self) -> usize {
        *self.0.last().unwrap()
    }

    /// Number of edges `l`.
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Nearest-neighbour chain on `0..n`: `up[x]` is the rate `x -> x+1`,
/// `down[x]` the rate `x -> x-1`, `kill[x]` the absorption rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathChain {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub kill: Vec<f64>,
    exit: Vec<f64>,
}

impl BirthDeathChain {
    /// Chain on `1..=N` absorbed through `1 -> 0` at rate `d_1`.
    /// `births = [b_1, …, b_{N-1}]`, `deaths = [d_1, …, d_N]`.
    pub fn from_rates(births: &[f64], deaths: &[f64]) -> Result<Self> {
        let n = deaths.len();
        if n == 0 || births.len() + 1 != n {
            return Err(Error::InvalidParameter(format!(
                "need N death rates and N-1 birth rates, got {} and {}",
                deaths.len(),
                births.len()
            )));
        }
        for (i, &r) in births.iter().chain(deaths).enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidParameter(format!("rate #{i} = {r} is not strictly positive")));
            }
        }
        let mut up = births.to_vec();
        up.push(0.0);
        let mut down = deaths.to_vec();
        let mut kill = vec![0.0; n];
        kill[0] = down[0];
        down[0] = 0.0;
        Ok(Self::from_parts(up, down, kill))
    }

    pub fn from_parts(up: Vec<f64>, down: Vec<f64>, kill: Vec<f64>) -> Self {
        let exit = (0..up.len()).map(|x| up[x] + down[x] + kill[x]).collect();
        Self { up, down, kill, exit }
    }

    pub fn n(&self) -> usize {
        self.up.len()
    }

    pub fn exit_rate(&self, x: usize) -> f64 {
        self.exit[x]
    }

    /// Sub-chain on the index range `lo..hi`; rates leaving the range become killing.
    pub fn slice(&self, lo: usize, hi: usize) -> Self {
        let mut up = self.up[lo..hi].to_vec();
        let mut down = self.down[lo..hi].to_vec();
        let mut kill = self.kill[lo..hi].to_vec();
        let m = hi - lo;
        kill[0] += down[0];
        down[0] = 0.0;
        kill[m - 1] += up[m - 1];
        up[m - 1] = 0.0;
        let mut out = Self::from_parts(up, down, kill);
        out.exit.copy_from_slice(&self.exit[lo..hi]);
        out
    }

    pub fn to_rate_matrix(&self) -> RateMatrix {
        let n = self.n();
        let mut rows = Vec::with_capacity(n);
        for x in 0..n {
            let mut row = Vec::new();
            if x > 0 && self.down[x] > 0.0 {
                row.push((x - 1, self.down[x]));
            }
            if x + 1 < n && self.up[x] > 0.0 {
                row.push((x + 1, self.up[x]));
            }
            rows.push(row);
        }
        let mut m = RateMatrix::from_rows(rows, self.kill.clone());
        m.exit.copy_from_slice(&self.exit);
        m
    }

    pub fn to_generator(&self) -> Result<AbsorbingGenerator> {
        AbsorbingGenerator::from_rate_matrix(self.to_rate_matrix())
    }

    /// Log of the reversibility weights `π_x = prod up[y]/down[y+1]`, `π_0 = 1`.
    pub fn log_pi(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n());
        let mut acc = 0.0;
        out.push(acc);
        for x in 1..self.n() {
            acc += self.up[x - 1].ln() - self.down[x].ln();
            out.push(acc);
        }
        out
    }
}

/// ρ-chain on `1..=N` absorbed at 0: rate ρ upward, 1 downward, `1+ρ` out of `N`.
pub fn build_rho_chain(n: usize, rho: f64) -> Result<AbsorbingGenerator> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("rho chain needs N >= 2, got {n}")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let births = vec![rho; n - 1];
    let mut deaths = vec![1.0; n];
    deaths[n - 1] = 1.0 + rho;
    BirthDeathChain::from_rates(&births, &deaths)?.to_generator()
}

/// Unit-rate random walk on a directed graph, with unit absorption from every state in `absorbing`.
pub fn build_graph_walk(n: usize, edges: &[(usize, usize)], absorbing: &[usize]) -> Result<AbsorbingGenerator> {
    let transitions: Vec<Transition> = edges.iter().map(|&(x, y)| Transition::new(x, y, 1.0)).collect();
    let mut rows_seen = std::collections::BTreeSet::new();
    for &(x, y) in edges {
        if !rows_seen.insert((x, y)) {
            return Err(Error::InvalidParameter(format!("duplicate edge {x} -> {y}")));
        }
    }
    let mut kill: Vec<(usize, f64)> = absorbing.iter().map(|&x| (x, 1.0)).collect();
    kill.sort_by_key(|e| e.0);
    kill.dedup_by_key(|e| e.0);
    AbsorbingGenerator::new(n, &transitions, &kill)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> AbsorbingGenerator {
        AbsorbingGenerator::new(2, &[Transition::new(0, 1, 1.0), Transition::new(1, 0, 1.0)], &[(0, 1.0)]).unwrap()
    }

    #[test]
    fn singleton() {
        let g = AbsorbingGenerator::new(1, &[], &[(0, 1.0)]).unwrap();
        assert_eq!(g.diag(0), -1.0);
        assert_eq!(g.absorbing_states(), vec![0]);
    }

    #[test]
    fn two_state_matrix() {
        let k = golden().to_dense();
        assert_eq!(k.as_slice(), &[-2.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn one_way_is_not_irreducible() {
        let err = AbsorbingGenerator::new(2, &[Transition::new(0, 1, 1.0)], &[(0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NonIrreducible { .. }));
    }

    #[test]
    fn construction_errors() {
        assert_eq!(AbsorbingGenerator::new(1, &[], &[]).unwrap_err(), Error::NoAbsorption);
        assert!(matches!(
            AbsorbingGenerator::new(2, &[Transition::new(0, 1, -1.0)], &[(0, 1.0)]),
            Err(Error::NegativeRate { .. })
        ));
        assert!(matches!(
            AbsorbingGenerator::new(2, &[Transition::new(0, 2, 1.0)], &[(0, 1.0)]),
            Err(Error::StateOutOfRange { index: 2, .. })
        ));
        assert!(matches!(
            AbsorbingGenerator::new(2, &[Transition::new(1, 1, 1.0)], &[(0, 1.0)]),
            Err(Error::SelfTransition(1))
        ));
    }

    #[test]
    fn duplicates_are_summed() {
        let g = AbsorbingGenerator::new(
            2,
            &[Transition::new(0, 1, 0.5), Transition::new(0, 1, 0.5), Transition::new(1, 0, 1.0)],
            &[(0, 1.0)],
        )
        .unwrap();
        assert_eq!(g.rate(0, 1), 1.0);
        assert_eq!(g.exit_rate(0), 2.0);
    }

    #[test]
    fn rho_chain_rates() {
        let g = build_rho_chain(2, 1.0).unwrap();
        assert_eq!(g.rate(0, 1), 1.0);
        assert_eq!(g.rate(1, 0), 2.0);
        assert_eq!(g.kill(0), 1.0);

        let g = build_rho_chain(3, 2.0).unwrap();
        assert_eq!(g.rate(0, 1), 2.0);
        assert_eq!(g.rate(1, 2), 2.0);
        assert_eq!(g.rate(1, 0), 1.0);
        assert_eq!(g.rate(2, 1), 3.0);
        assert_eq!(g.kill(0), 1.0);
        assert_eq!(g.kill(1), 0.0);

        assert!(matches!(build_rho_chain(1, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_rho_chain(3, 0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rho_chain_detailed_balance() {
        for &rho in &[0.3, 1.0, 2.0, 7.5] {
            let n = 12;
            let g = build_rho_chain(n, rho).unwrap();
            let bd = g.as_birth_death().unwrap();
            let pi: Vec<f64> = bd.log_pi().iter().map(|l| l.exp()).collect();
            for x in 0..n - 1 {
                let lhs = pi[x] * g.rate(x, x + 1);
                let rhs = pi[x + 1] * g.rate(x + 1, x);
                assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1.0), "{rho} {x}");
            }
        }
    }

    #[test]
    fn graph_walks() {
        let g = build_graph_walk(3, &[(0, 1), (1, 2), (2, 0)], &[0]).unwrap();
        assert_eq!(g.exit_rate(0), 2.0);
        assert_eq!(g.exit_rate(1), 1.0);
        let complete: Vec<_> = (0..3).flat_map(|x| (0..3).filter(move |&y| y != x).map(move |y| (x, y))).collect();
        let g = build_graph_walk(3, &complete, &[0, 1, 2]).unwrap();
        for x in 0..3 {
            assert_eq!(g.exit_rate(x), 3.0);
            assert_eq!(g.row(x).len(), 2);
        }
        let two_cycles = [(0, 1), (1, 0), (2, 3), (3, 2)];
        assert!(matches!(build_graph_walk(4, &two_cycles, &[0, 2]), Err(Error::NonIrreducible { .. })));
    }

    #[test]
    fn minors() {
        let g = build_rho_chain(2, 1.0).unwrap();
        let m = g.minor(&[0]).unwrap();
        assert_eq!(m.rates.to_dense().as_slice(), &[-2.0]);
        assert_eq!(g.minor(&[]).unwrap().rates.to_dense(), g.to_dense());
        assert_eq!(golden().minor(&[1]).unwrap().rates.to_dense().as_slice(), &[-2.0]);
        assert_eq!(golden().minor(&[0, 1]).unwrap_err(), Error::EmptyResult);
    }

    #[test]
    fn paths() {
        let g = golden();
        let p = Path::new(&g, vec![0, 1]).unwrap();
        assert_eq!(p.len(), 1);
        assert!(Path::new(&g, vec![1]).unwrap().is_empty());
        let g3 = build_rho_chain(3, 1.0).unwrap();
        assert!(matches!(Path::new(&g3, vec![0, 2]), Err(Error::InvalidPath { from: 0, to: 2 })));
    }

    #[test]
    fn scc_of_reducible_minor() {
        let g = build_rho_chain(5, 1.0).unwrap();
        let m = g.minor(&[2]).unwrap();
        let mut comps = m.rates.strongly_connected_components();
        comps.sort();
        assert_eq!(comps, vec![vec![0, 1], vec![2, 3]]);
    }
}
