#![allow(dead_code)]

use amplitude_core::{AbsorbingGenerator, BirthDeathChain, Transition};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Reversible generator with weights `pi` and symmetric conductances on a
/// random connected graph.
pub struct ReversibleInstance {
    pub gen: AbsorbingGenerator,
    pub pi: Vec<f64>,
    pub conductance: DMatrix<f64>,
    pub kill: Vec<f64>,
}

pub fn random_reversible<R: Rng>(rng: &mut R, n: usize) -> ReversibleInstance {
    let pi: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.1, 10.0)).collect();
    let mut c = DMatrix::zeros(n, n);
    for y in 1..n {
        let x = rng.random_range(0..y);
        let w = log_uniform(rng, 0.1, 10.0);
        c[(x, y)] = w;
        c[(y, x)] = w;
    }
    for x in 0..n {
        for y in x + 1..n {
            if c[(x, y)] == 0.0 && rng.random_bool(0.3) {
                let w = log_uniform(rng, 0.1, 10.0);
                c[(x, y)] = w;
                c[(y, x)] = w;
            }
        }
    }
    let mut kill = vec![0.0; n];
    let first = rng.random_range(0..n);
    kill[first] = log_uniform(rng, 0.1, 10.0);
    for k in kill.iter_mut() {
        if *k == 0.0 && rng.random_bool(0.2) {
            *k = log_uniform(rng, 0.1, 10.0);
        }
    }
    let mut transitions = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if c[(x, y)] > 0.0 {
                transitions.push(Transition::new(x, y, c[(x, y)] / pi[x]));
            }
        }
    }
    let absorption: Vec<(usize, f64)> = kill.iter().enumerate().filter(|(_, &k)| k > 0.0).map(|(x, &k)| (x, k)).collect();
    let gen = AbsorbingGenerator::new(n, &transitions, &absorption).expect("random instance is valid");
    ReversibleInstance { gen, pi, conductance: c, kill }
}

/// Ascending eigenvalues and eigenvectors of `-K` restricted to `keep`,
/// from the symmetrized dense matrix.
pub fn dense_oracle(inst: &ReversibleInstance, keep: &[usize]) -> (Vec<f64>, DMatrix<f64>) {
    let m = keep.len();
    let n = inst.pi.len();
    let mut s = DMatrix::zeros(m, m);
    for (i, &x) in keep.iter().enumerate() {
        let exit: f64 = (0..n).map(|y| inst.conductance[(x, y)]).sum::<f64>() / inst.pi[x] + inst.kill[x];
        s[(i, i)] = exit;
        for (j, &y) in keep.iter().enumerate() {
            if i != j && inst.conductance[(x, y)] > 0.0 {
                s[(i, j)] = -inst.conductance[(x, y)] / (inst.pi[x] * inst.pi[y]).sqrt();
            }
        }
    }
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `(λ0, amplitude)` from the dense oracle.
pub fn dense_lambda0_amplitude(inst: &ReversibleInstance) -> (f64, f64) {
    let n = inst.pi.len();
    let keep: Vec<usize> = (0..n).collect();
    let (values, vectors) = dense_oracle(inst, &keep);
    let phi: Vec<f64> = (0..n).map(|x| (vectors[(x, 0)] / inst.pi[x].sqrt()).abs()).collect();
    let max = phi.iter().cloned().fold(0.0, f64::max);
    let min = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    (values[0], max / min)
}

/// Birth–death chain on `{1..n}` absorbed from state 1, rates log-uniform in `[0.1, 10]`.
pub fn random_birth_death<R: Rng>(rng: &mut R, n: usize) -> BirthDeathChain {
    let births: Vec<f64> = (1..n).map(|_| log_uniform(rng, 0.1, 10.0)).collect();
    let deaths: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.1, 10.0)).collect();
    BirthDeathChain::from_rates(&births, &deaths).expect("positive rates")
}

fn dense_bd_symmetric(bd: &BirthDeathChain) -> DMatrix<f64> {
    let n = bd.n();
    let mut s = DMatrix::zeros(n, n);
    for x in 0..n {
        s[(x, x)] = bd.exit_rate(x);
        if x + 1 < n {
            let off = -(bd.up[x] * bd.down[x + 1]).sqrt();
            s[(x, x + 1)] = off;
            s[(x + 1, x)] = off;
        }
    }
    s
}

/// Symmetric tridiagonal eigenvalues of a birth–death chain by a dense solve.
pub fn dense_bd_eigenvalues(bd: &BirthDeathChain) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(dense_bd_symmetric(bd)).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `(λ0, φ)` of a birth–death chain by a dense symmetric solve.
pub fn dense_bd_ground(bd: &BirthDeathChain) -> (f64, Vec<f64>) {
    let n = bd.n();
    let eig = SymmetricEigen::new(dense_bd_symmetric(bd));
    let k = (0..n).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).expect("nonempty");
    let mut eta = vec![1.0; n];
    for x in 1..n {
        eta[x] = eta[x - 1] * bd.up[x - 1] / bd.down[x];
    }
    let phi = (0..n).map(|x| (eig.eigenvectors[(x, k)] / eta[x].sqrt()).abs()).collect();
    (eig.eigenvalues[k], phi)
}
