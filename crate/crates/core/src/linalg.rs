//! Numerical kernels for `A = -K`, a nonsingular M-matrix whose row sums
//! are the killing rates.
//!
//! Elimination follows Grassmann–Taksar–Heyman: pivots are rebuilt from the
//! remaining off-diagonal mass plus the accumulated row-sum deficit, so no
//! step subtracts positive quantities. Solves with a nonnegative right-hand
//! side are then accurate entrywise, which keeps exponentially small
//! eigenvalues (e.g. drifting birth–death chains) accurate to high relative
//! precision.

use crate::error::{Error, Result};
use crate::generator::{BirthDeathChain, RateMatrix};

/// A factorization of `A = -K` supporting `A x = b` and `A^T x = b`.
pub trait MSolver {
    fn dim(&self) -> usize;
    fn solve(&self, b: &[f64]) -> Vec<f64>;
    fn solve_transpose(&self, b: &[f64]) -> Vec<f64>;
}

/// Dense subtraction-free LU of `-K`.
#[derive(Debug, Clone)]
pub struct DenseMLu {
    n: usize,
    /// Row-major: strict lower part holds `L` (entries <= 0), upper part `U`.
    lu: Vec<f64>,
}

impl DenseMLu {
    pub fn new(k: &RateMatrix) -> Self {
        let n = k.n();
        let mut a = vec![0.0; n * n];
        let mut s: Vec<f64> = k.kills().to_vec();
        for x in 0..n {
            for &(y, r) in k.row(x) {
                a[x * n + y] = -r;
            }
        }
        for p in 0..n {
            let off: f64 = ((p + 1)..n).map(|j| -a[p * n + j]).sum();
            let piv = off + s[p];
            a[p * n + p] = piv;
            for i in (p + 1)..n {
                let aip = a[i * n + p];
                if aip == 0.0 {
                    continue;
                }
                let l = aip / piv;
                a[i * n + p] = l;
                for j in (p + 1)..n {
                    if j != i {
                        let apj = a[p * n + j];
                        if apj != 0.0 {
                            a[i * n + j] -= l * apj;
                        }
                    }
                }
                s[i] += -l * s[p];
            }
        }
        Self { n, lu: a }
    }
}

impl MSolver for DenseMLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let a = &self.lu;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= a[i * n + k] * y[k];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= a[i * n + j] * y[j];
            }
            y[i] = acc / a[i * n + i];
        }
        y
    }

    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let a = &self.lu;
        let mut z = b.to_vec();
        // U^T z = b
        for i in 0..n {
            let mut acc = z[i];
            for k in 0..i {
                acc -= a[k * n + i] * z[k];
            }
            z[i] = acc / a[i * n + i];
        }
        // L^T x = z
        for i in (0..n).rev() {
            let mut acc = z[i];
            for k in (i + 1)..n {
                acc -= a[k * n + i] * z[k];
            }
            z[i] = acc;
        }
        z
    }
}

/// Tridiagonal subtraction-free LU of `-K` for a birth–death chain.
#[derive(Debug, Clone)]
pub struct TridiagMLu {
    up: Vec<f64>,
    down: Vec<f64>,
    pivots: Vec<f64>,
}

impl TridiagMLu {
    pub fn new(bd: &BirthDeathChain) -> Self {
        let n = bd.n();
        let mut pivots = Vec::with_capacity(n);
        let mut s = bd.kill[0];
        pivots.push(bd.up[0] + s);
        for i in 1..n {
            s = bd.kill[i] + bd.down[i] * s / pivots[i - 1];
            pivots.push(bd.up[i] + s);
        }
        Self { up: bd.up.clone(), down: bd.down.clone(), pivots }
    }

    /// Pivots of the elimination, i.e. `D` in `-K = L D U'`.
    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }
}

impl MSolver for TridiagMLu {
    fn dim(&self) -> usize {
        self.pivots.len()
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let p = &self.pivots;
        let mut y = b.to_vec();
        for i in 1..n {
            y[i] += self.down[i] / p[i - 1] * y[i - 1];
        }
        y[n - 1] /= p[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = (y[i] + self.up[i] * y[i + 1]) / p[i];
        }
        y
    }

    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let p = &self.pivots;
        let mut z = b.to_vec();
        z[0] /= p[0];
        for i in 1..n {
            z[i] = (z[i] + self.up[i - 1] * z[i - 1]) / p[i];
        }
        for i in (0..n - 1).rev() {
            z[i] += self.down[i + 1] / p[i] * z[i + 1];
        }
        z
    }
}

/// Factor `-K`, using the tridiagonal kernel when the chain is birth–death.
pub fn factor(k: &RateMatrix) -> Box<dyn MSolver + Send + Sync> {
    match k.as_birth_death() {
        Some(bd) => Box::new(TridiagMLu::new(&bd)),
        None => Box::new(DenseMLu::new(k)),
    }
}

/// Outcome of a Perron inverse iteration.
#[derive(Debug, Clone)]
pub struct PerronResult {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// Relative width of the final Collatz–Wielandt bracket on `lambda`.
    pub bracket: f64,
}

pub const PERRON_TOL: f64 = 1e-14;
/// Accept a stalled iteration once the bracket is below this floor.
const PERRON_STALL_FLOOR: f64 = 1e-10;
pub const PERRON_MAX_ITER: usize = 100_000;

/// Inverse iteration for the smallest eigenvalue of `A = -K` (or of `A^T`
/// when `transpose`), started from the all-ones vector.
///
/// Every iterate stays positive, so `min x/w <= λ0 <= max x/w` with
/// `w = A^{-1} x` brackets the eigenvalue; the loop stops when the bracket
/// is relatively narrower than `tol`.
pub fn perron_inverse_iteration(solver: &dyn MSolver, transpose: bool, tol: f64, max_iter: usize) -> Result<PerronResult> {
    let n = solver.dim();
    let mut x = vec![1.0; n];
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    let mut last_bracket = f64::INFINITY;
    for it in 1..=max_iter {
        let w = if transpose { solver.solve_transpose(&x) } else { solver.solve(&x) };
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let r = x[i] / w[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let scale = w.iter().cloned().fold(0.0, f64::max);
        for i in 0..n {
            x[i] = w[i] / scale;
        }
        let bracket = (hi - lo) / hi;
        last_bracket = bracket;
        if !bracket.is_finite() {
            break;
        }
        if bracket < best * 0.999 {
            best = bracket;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if bracket <= tol || (since_best > 50 && bracket <= PERRON_STALL_FLOOR) {
            let lambda = 0.5 * (lo + hi);
            return Ok(PerronResult { lambda, vector: x, iterations: it, bracket });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: last_bracket })
}

/// Symmetric tridiagonal matrix similar to `-K` for a birth–death chain,
/// kept as `L D L^T` with the GTH pivots.
///
/// Eigenvalue counts use the differential stationary qd transform on this
/// representation, which determines every eigenvalue, small ones included,
/// to high relative accuracy.
#[derive(Debug, Clone)]
pub struct SymTridiagLdl {
    d: Vec<f64>,
    /// `d_i l_i^2 = up_i * down_{i+1} / d_i`.
    dll: Vec<f64>,
    upper: f64,
}

impl SymTridiagLdl {
    pub fn new(bd: &BirthDeathChain) -> Self {
        let lu = TridiagMLu::new(bd);
        let d = lu.pivots().to_vec();
        let n = d.len();
        let dll = (0..n.saturating_sub(1)).map(|i| bd.up[i] * bd.down[i + 1] / d[i]).collect();
        let upper = (0..n)
            .map(|i| {
                let left = if i > 0 { (bd.up[i - 1] * bd.down[i]).sqrt() } else { 0.0 };
                let right = if i + 1 < n { (bd.up[i] * bd.down[i + 1]).sqrt() } else { 0.0 };
                bd.exit_rate(i) + left + right
            })
            .fold(0.0, f64::max);
        Self { d, dll, upper }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.d.len();
        let mut count = 0;
        let mut s = -sigma;
        for i in 0..n - 1 {
            let mut dp = self.d[i] + s;
            if dp == 0.0 {
                dp = -f64::MIN_POSITIVE;
            }
            if dp < 0.0 {
                count += 1;
            }
            s = self.dll[i] * (s / dp) - sigma;
            if !s.is_finite() {
                s = if s.is_nan() { -sigma } else { s };
            }
        }
        if self.d[n - 1] + s < 0.0 {
            count += 1;
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based), by geometric then
    /// arithmetic bisection to relative width ~4 ulp.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.dim());
        let lo = 1e-300f64;
        if self.count_below(lo) > k {
            return lo;
        }
        self.refine(k, lo, self.top())
    }

    fn top(&self) -> f64 {
        self.upper * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }

    fn split(lo: f64, hi: f64) -> f64 {
        if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        }
    }

    /// Bisect for eigenvalue `k` given `count_below(lo) <= k < count_below(hi)`.
    fn refine(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..4000 {
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            let mid = Self::split(lo, hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvalues `range`, sharing bisection brackets between neighbours.
    pub fn eigenvalues(&self, range: std::ops::Range<usize>) -> Vec<f64> {
        let mut out = vec![f64::NAN; range.len()];
        if range.is_empty() {
            return out;
        }
        assert!(range.end <= self.dim());
        let lo = 1e-300f64;
        let c_lo = self.count_below(lo);
        for k in range.start..range.end.min(c_lo) {
            out[k - range.start] = lo;
        }
        let hi = self.top();
        let mut stack = vec![(lo, hi, c_lo, self.dim())];
        while let Some((lo, hi, c_lo, c_hi)) = stack.pop() {
            let (a, b) = (c_lo.max(range.start), c_hi.min(range.end));
            if a >= b {
                continue;
            }
            let mid = Self::split(lo, hi);
            let narrow = hi - lo <= 4.0 * f64::EPSILON * hi || mid <= lo || mid >= hi;
            if b - a == 1 || narrow {
                for k in a..b {
                    out[k - range.start] = self.refine(k, lo, hi);
                }
                continue;
            }
            let c_mid = self.count_below(mid);
            stack.push((lo, mid, c_lo, c_mid));
            stack.push((mid, hi, c_mid, c_hi));
        }
        out
    }

    pub fn all_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues(0..self.dim())
    }
}

/// Stationary law of an irreducible conservative generator by GTH
/// state reduction. `q` is row-major with rows summing to zero.
pub fn gth_stationary(q: &[f64], n: usize) -> Vec<f64> {
    let mut a = q.to_vec();
    for i in 0..n {
        a[i * n + i] = 0.0;
    }
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[k * n + j]).sum();
        for i in 0..k {
            a[i * n + k] /= s;
        }
        for i in 0..k {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                a[i * n + j] += aik * a[k * n + j];
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * a[i * n + k]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    pi
}
