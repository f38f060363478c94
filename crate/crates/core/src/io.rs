//! JSON generator files and small command-line value formats.
//!
//! Files use 1-based state indices:
//! `{"n_states": N, "transitions": [{"from": i, "to": j, "rate": r}], "absorption": [{"state": i, "rate": r}]}`.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{AbsorbingGenerator, RateMatrix, Transition, ROW_SUM_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionEntry {
    pub state: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub n_states: usize,
    #[serde(default)]
    pub transitions: Vec<TransitionEntry>,
    #[serde(default)]
    pub absorption: Vec<AbsorptionEntry>,
}

fn zero_based(i: usize, n: usize) -> Result<usize> {
    if i == 0 || i > n {
        Err(Error::StateOutOfRange { index: i, n_states: n })
    } else {
        Ok(i - 1)
    }
}

impl GeneratorFile {
    pub fn rate_matrix(&self) -> Result<RateMatrix> {
        let n = self.n_states;
        let transitions: Vec<Transition> = self
            .transitions
            .iter()
            .map(|t| Ok(Transition::new(zero_based(t.from, n)?, zero_based(t.to, n)?, t.rate)))
            .collect::<Result<_>>()?;
        let kill: Vec<(usize, f64)> =
            self.absorption.iter().map(|a| Ok((zero_based(a.state, n)?, a.rate))).collect::<Result<_>>()?;
        RateMatrix::from_triplets(n, &transitions, &kill)
    }

    pub fn generator(&self) -> Result<AbsorbingGenerator> {
        AbsorbingGenerator::from_rate_matrix(self.rate_matrix()?)
    }

    pub fn from_generator(gen: &RateMatrix) -> Self {
        let transitions =
            gen.transitions().map(|t| TransitionEntry { from: t.from + 1, to: t.to + 1, rate: t.rate }).collect();
        let absorption = (0..gen.n())
            .filter(|&x| gen.kill(x) > 0.0)
            .map(|x| AbsorptionEntry { state: x + 1, rate: gen.kill(x) })
            .collect();
        Self { n_states: gen.n(), transitions, absorption }
    }
}

pub fn parse_generator_file(text: &str) -> Result<GeneratorFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_generator(text: &str) -> Result<AbsorbingGenerator> {
    parse_generator_file(text)?.generator()
}

pub fn read_text(path: &FsPath) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn load_generator(path: &FsPath) -> Result<AbsorbingGenerator> {
    parse_generator(&read_text(path)?)
}

pub fn generator_to_json(gen: &RateMatrix) -> String {
    serde_json::to_string_pretty(&GeneratorFile::from_generator(gen)).expect("generator serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub n_states: Option<usize>,
    pub n_transitions: usize,
    /// 1-based states with positive absorption rate.
    pub absorbing_states: Vec<usize>,
    pub irreducible: Option<bool>,
    /// Strongly connected components (1-based) when `K` is reducible.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub components: Vec<Vec<usize>>,
    pub max_rate: Option<f64>,
    pub max_row_sum_defect: Option<f64>,
    pub row_sum_tolerance: Option<f64>,
    pub errors: Vec<String>,
}

/// Parses and checks a generator file, collecting every failure found.
pub fn validate(text: &str) -> ValidationReport {
    let mut report = ValidationReport {
        ok: false,
        n_states: None,
        n_transitions: 0,
        absorbing_states: Vec::new(),
        irreducible: None,
        components: Vec::new(),
        max_rate: None,
        max_row_sum_defect: None,
        row_sum_tolerance: None,
        errors: Vec::new(),
    };
    let file = match parse_generator_file(text) {
        Ok(f) => f,
        Err(e) => {
            report.errors.push(e.to_string());
            return report;
        }
    };
    report.n_states = Some(file.n_states);
    report.n_transitions = file.transitions.len();
    let rates = match file.rate_matrix() {
        Ok(r) => r,
        Err(e) => {
            report.errors.push(e.to_string());
            return report;
        }
    };
    report.absorbing_states = (0..rates.n()).filter(|&x| rates.kill(x) > 0.0).map(|x| x + 1).collect();
    if report.absorbing_states.is_empty() {
        report.errors.push(Error::NoAbsorption.to_string());
    }
    let irreducible = rates.is_irreducible();
    report.irreducible = Some(irreducible);
    if !irreducible {
        report.components =
            rates.strongly_connected_components().into_iter().map(|c| c.into_iter().map(|x| x + 1).collect()).collect();
        if let Err(e) = rates.check_irreducible() {
            report.errors.push(e.to_string());
        }
    }
    let tol = ROW_SUM_TOL * rates.max_rate().max(1.0);
    let defect = rates.max_row_sum_defect();
    report.max_rate = Some(rates.max_rate());
    report.max_row_sum_defect = Some(defect);
    report.row_sum_tolerance = Some(tol);
    if defect > tol {
        report.errors.push(format!("row sum defect {defect:e} exceeds {tol:e}"));
    }
    report.ok = report.errors.is_empty();
    report
}

/// Initial law: `delta:i` (1-based), `uniform`, or comma-separated weights.
pub fn parse_measure(spec: &str, n: usize) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec == "uniform" {
        return Ok(vec![1.0 / n as f64; n]);
    }
    if let Some(i) = spec.strip_prefix("delta:") {
        let i: usize = i.trim().parse().map_err(|_| Error::Parse(format!("bad state in `{spec}`")))?;
        let mut mu = vec![0.0; n];
        mu[zero_based(i, n)?] = 1.0;
        return Ok(mu);
    }
    let w = parse_list(spec)?;
    if w.len() != n {
        return Err(Error::InvalidParameter(format!("measure has {} weights for {n} states", w.len())));
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("measure weights must be nonnegative and finite".into()));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("measure has zero mass".into()));
    }
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Comma-separated floats.
pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("`{s}` is not a number"))))
        .collect()
}
