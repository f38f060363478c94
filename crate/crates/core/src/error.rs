use thiserror::Error;

/// Errors raised across the crate. State indices are 0-based here; the
/// JSON and CLI layers translate them to the 1-based convention.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative rate {rate} on {from} -> {to}")]
    NegativeRate { from: usize, to: usize, rate: f64 },
    #[error("non-finite rate on {from} -> {to}")]
    NonFiniteRate { from: usize, to: usize },
    #[error("state index {index} out of range for {n_states} states")]
    StateOutOfRange { index: usize, n_states: usize },
    #[error("self-transition on state {0} is not allowed")]
    SelfTransition(usize),
    #[error("restriction to S is not irreducible: state {unreachable} cannot be reached from state {from}")]
    NonIrreducible { from: usize, unreachable: usize },
    #[error("no state has a positive absorption rate")]
    NoAbsorption,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("removing every state leaves an empty minor")]
    EmptyResult,
    #[error("eigen-iteration did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("non-reversible generator has complex eigenvalues (max |imag| = {max_imag:e})")]
    NotDiagonalizableDetected { max_imag: f64 },
    #[error("generator is not reversible")]
    NotReversible,
    #[error("vector has a non-positive entry at index {0}")]
    NonPositiveInput(usize),
    #[error("singular path factor at state {state}: exit rate {exit_rate} <= lambda {lambda}")]
    SingularFactor { state: usize, exit_rate: f64, lambda: f64 },
    #[error("invalid path: no positive rate on {from} -> {to}")]
    InvalidPath { from: usize, to: usize },
    #[error("degenerate gap: lambda0' = {lambda0_prime} <= lambda0 = {lambda0}")]
    DegenerateGap { lambda0: f64, lambda0_prime: f64 },
    #[error("generator is not a birth-death chain: {0}")]
    NotBirthDeath(String),
    #[error("event budget of {0} jumps exceeded (possible explosion)")]
    EventBudgetExceeded(u64),
    #[error("sequence did not converge: last relative changes {last_deltas:?}")]
    NotConverged { last_deltas: Vec<f64> },
    #[error("gap violation: lambda0' = {lambda0_prime} <= lambda0 = {lambda0}")]
    GapViolation { lambda0: f64, lambda0_prime: f64 },
    #[error("overflow in {0}")]
    Overflow(String),
    #[error("unknown reproduction case `{0}`")]
    UnknownCase(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
