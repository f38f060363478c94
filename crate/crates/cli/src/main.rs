use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use amplitude_core::birth_death::{
    bd_theorem_report, doubling_schedule, eigen_convergence, entrance_check, gap_identity_check, parse_family,
};
use amplitude_core::bounds::{exact_bd_amplitude, graph_bound, graph_parameters, path_bound, spectral_bound, PathChoice};
use amplitude_core::io::{load_generator, parse_list, parse_measure, read_text, validate};
use amplitude_core::reproduce::{reproduce, CaseReport, CASES};
use amplitude_core::simulate::{default_tilt, estimate_ratio, estimate_ratio_tilted, sandwich_experiment};
use amplitude_core::spectral::{full_spectrum, full_spectrum_with_minors, lambda0_prime, quasi_stationary_dist};
use amplitude_core::{dirichlet_eigenpair, AbsorbingGenerator, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Parser, Serialize)]
#[command(name = "amplitude", version, about = "Amplitude of the first Dirichlet eigenvector of absorbing Markov generators")]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output format; defaults to csv for `sandwich` and json elsewhere.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
enum Command {
    /// Check a generator file.
    Validate(InputArgs),
    /// λ0, φ, ν and optionally the whole spectrum.
    Spectrum(SpectrumArgs),
    /// Upper bounds on the amplitude.
    Bounds(BoundsArgs),
    /// Monte Carlo estimate of φ(x)/φ(y).
    Simulate(SimulateArgs),
    /// Total variation sandwich between the conditioned law and the Doob transform.
    Sandwich(SandwichArgs),
    /// Birth–death chains on the nonnegative integers.
    Bd {
        #[command(subcommand)]
        command: BdCommand,
    },
    /// Recompute reference values and check them.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args, Serialize)]
struct InputArgs {
    /// Generator file (JSON, 1-based states).
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    /// Every eigenvalue, not only λ0.
    #[arg(long)]
    full: bool,
    /// Spectra of the single-state minors.
    #[arg(long)]
    minors: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Path,
    Spectral,
    Graph,
    ExactBd,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PathsArg {
    Best,
    Geodesic,
}

#[derive(Debug, Args, Serialize)]
struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, value_enum, default_value_t = PathsArg::Best)]
    paths: PathsArg,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    /// Start state (1-based).
    #[arg(long)]
    from: usize,
    /// Target state (1-based).
    #[arg(long)]
    to: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Importance tilt: `none`, `auto`, or a rate μ.
    #[arg(long, default_value = "none")]
    tilt: String,
}

#[derive(Debug, Args, Serialize)]
struct SandwichArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    /// Initial law: `delta:i`, `uniform`, or comma-separated weights.
    #[arg(long)]
    mu0: String,
    /// Comma-separated times.
    #[arg(long, default_value = "0.1,1,5,20")]
    times: String,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum BdCommand {
    /// Verdicts on the entrance conditions (R) and (S).
    Entrance(EntranceArgs),
    /// Eigenvalues of reflected truncations of doubling size.
    Converge(ConvergeArgs),
    /// Amplitude bound for the infinite chain.
    Bound(BoundArgs),
}

#[derive(Debug, Args, Serialize)]
struct RatesArgs {
    /// `poisson`, `poisson-accelerated`, `rho:<ρ>`, or a JSON file `{"birth": expr, "death": expr}` in `n`.
    #[arg(long)]
    rates: String,
}

#[derive(Debug, Args, Serialize)]
struct EntranceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    rates: RatesArgs,
    #[arg(long, default_value_t = 10_000)]
    cutoff: usize,
}

#[derive(Debug, Args, Serialize)]
struct ConvergeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    rates: RatesArgs,
    /// Largest eigenvalue index tracked.
    #[arg(long, default_value_t = 8)]
    nmax: usize,
    /// Relative change accepted as converged.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Smallest truncation is 2^min-exp.
    #[arg(long, default_value_t = 6)]
    min_exp: u32,
    /// Largest truncation is 2^max-exp.
    #[arg(long, default_value_t = 16)]
    max_exp: u32,
    /// Include φ_N in the output.
    #[arg(long)]
    phi: bool,
}

#[derive(Debug, Args, Serialize)]
struct BoundArgs {
    #[command(flatten)]
    #[serde(flatten)]
    rates: RatesArgs,
    #[arg(long, default_value_t = 32)]
    nmax: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 6)]
    min_exp: u32,
    #[arg(long, default_value_t = 14)]
    max_exp: u32,
    /// Cutoff for the trace series.
    #[arg(long, default_value_t = 1 << 20)]
    trace_cutoff: usize,
}

#[derive(Debug, Args, Serialize)]
struct ReproduceArgs {
    /// Cases to run; all when empty.
    cases: Vec<String>,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Reproduction(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NegativeRate { .. }
            | Error::NonFiniteRate { .. }
            | Error::StateOutOfRange { .. }
            | Error::SelfTransition(_)
            | Error::NonIrreducible { .. }
            | Error::NoAbsorption
            | Error::InvalidParameter(_)
            | Error::UnknownCase(_)
            | Error::Parse(_)
            | Error::InvalidPath { .. }
            | Error::NotBirthDeath(_)
            | Error::NotReversible
            | Error::NonPositiveInput(_)
            | Error::EmptyResult => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome = Result<Output, Failure>;

enum Output {
    Json(Value),
    /// Header and rows; the JSON form is used when JSON is requested.
    Table { header: Vec<String>, rows: Vec<Vec<String>>, json: Value },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let config = serde_json::to_value(&cli).expect("config serializes");
    let format = cli.format.unwrap_or(match cli.command {
        Command::Sandwich(_) => Format::Csv,
        _ => Format::Json,
    });
    let (result, code) = match run(&cli) {
        Ok(out) => (Some(out), 0),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            (Some(Output::Json(json!({ "error": msg }))), 1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            (Some(Output::Json(json!({ "error": msg }))), 2)
        }
        Err(Failure::Reproduction(report)) => {
            eprintln!("error: reproduction outside tolerance");
            (Some(Output::Json(report)), 3)
        }
    };
    if let Some(out) = result {
        let text = render(&config, out, format);
        let written = match &cli.out {
            Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
        };
        if let Err(e) = written {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}

fn render(config: &Value, out: Output, format: Format) -> String {
    match (out, format) {
        (Output::Table { header, rows, .. }, Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).expect("in-memory write");
            for r in &rows {
                w.write_record(r).expect("in-memory write");
            }
            let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
            format!("# config: {config}\n{body}")
        }
        (Output::Json(v), _) | (Output::Table { json: v, .. }, Format::Json) => {
            let mut s = serde_json::to_string_pretty(&json!({ "config": config, "result": v })).expect("json");
            s.push('\n');
            s
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn state(i: usize, gen: &AbsorbingGenerator) -> Result<usize, Failure> {
    if i == 0 || i > gen.n() {
        Err(Failure::Usage(format!("state {i} out of range 1..={}", gen.n())))
    } else {
        Ok(i - 1)
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate(a) => {
            let report = validate(&read_text(&a.input)?);
            if report.ok {
                Ok(Output::Json(to_value(&report)))
            } else {
                for e in &report.errors {
                    eprintln!("invalid: {e}");
                }
                Err(Failure::Usage(format!("{} is not a valid generator", a.input.display())))
            }
        }
        Command::Spectrum(a) => spectrum(a),
        Command::Bounds(a) => bounds(a),
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Sandwich(a) => sandwich(a),
        Command::Bd { command } => bd(command),
        Command::Reproduce(a) => run_reproduce(a),
    }
}

fn spectrum(a: &SpectrumArgs) -> Outcome {
    let gen = load_generator(&a.input.input)?;
    let pair = dirichlet_eigenpair(&gen)?;
    let nu = quasi_stationary_dist(&gen)?.nu;
    let mut result = json!({
        "lambda0": pair.lambda0,
        "phi": pair.phi,
        "amplitude": pair.amplitude(),
        "nu": nu,
        "bracket": pair.bracket,
        "relative_residual": pair.relative_residual(&gen),
    });
    let eigenvalues = if a.full || a.minors {
        let report = if a.minors { full_spectrum_with_minors(&gen)? } else { full_spectrum(&gen)? };
        result["lambda0_prime"] = json!(report.lambda0_prime);
        result["reversible"] = json!(report.is_reversible());
        if a.minors {
            let minors: serde_json::Map<String, Value> =
                report.minor_spectra.iter().map(|(k, v)| ((k + 1).to_string(), json!(v))).collect();
            result["minor_spectra"] = Value::Object(minors);
        }
        report.eigenvalues
    } else {
        result["lambda0_prime"] = json!(lambda0_prime(&gen)?);
        vec![pair.lambda0]
    };
    result["eigenvalues"] = json!(eigenvalues);
    let rows = (0..gen.n())
        .map(|x| {
            vec![
                (x + 1).to_string(),
                pair.phi[x].to_string(),
                nu[x].to_string(),
                eigenvalues.get(x).map(|v| v.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    Ok(Output::Table { header: vec!["state".into(), "phi".into(), "nu".into(), "eigenvalue".into()], rows, json: result })
}

fn bounds(a: &BoundsArgs) -> Outcome {
    let gen = load_generator(&a.input.input)?;
    let pair = dirichlet_eigenpair(&gen)?;
    let amplitude = pair.amplitude();
    let (bound, certificate) = match a.method {
        Method::Path => {
            let choice = match a.paths {
                PathsArg::Best => PathChoice::Best,
                PathsArg::Geodesic => PathChoice::Geodesic,
            };
            let mut r = path_bound(&gen, pair.lambda0, choice)?;
            for c in &mut r.paths {
                c.from += 1;
                c.to += 1;
            }
            let mut cert = to_value(&r);
            if let Some(paths) = cert["paths"].as_array_mut() {
                for p in paths {
                    if let Some(v) = p["path"].as_array_mut() {
                        v.iter_mut().for_each(|s| *s = json!(s.as_u64().unwrap_or(0) + 1));
                    }
                }
            }
            (r.bound, cert)
        }
        Method::Spectral => {
            let r = spectral_bound(&full_spectrum_with_minors(&gen)?)?;
            (r.bound, to_value(&r))
        }
        Method::Graph => {
            let p = graph_parameters(&gen);
            let b = graph_bound(p.max_out_degree, p.diameter, p.r_min, p.r_max)?;
            (b, to_value(&p))
        }
        Method::ExactBd => {
            let r = exact_bd_amplitude(&gen)?;
            (r.amplitude, to_value(&r))
        }
    };
    Ok(Output::Json(json!({
        "method": a.method,
        "bound": bound,
        "amplitude": amplitude,
        "lambda0": pair.lambda0,
        "certificate": certificate,
    })))
}

fn simulate(a: &SimulateArgs, seed: u64) -> Outcome {
    let gen = load_generator(&a.input.input)?;
    let (x, y) = (state(a.from, &gen)?, state(a.to, &gen)?);
    if a.samples < 2 {
        return Err(Failure::Usage("need at least 2 samples".into()));
    }
    let pair = dirichlet_eigenpair(&gen)?;
    let mu = match a.tilt.as_str() {
        "none" => None,
        "auto" => Some(default_tilt(&gen, pair.lambda0, y)?),
        s => Some(s.parse::<f64>().map_err(|_| Failure::Usage(format!("bad tilt `{s}`")))?),
    };
    let est = match mu {
        None => estimate_ratio(&gen, pair.lambda0, x, y, a.samples, seed)?,
        Some(mu) => estimate_ratio_tilted(&gen, pair.lambda0, x, y, mu, a.samples, seed)?,
    };
    let exact = pair.phi[x] / pair.phi[y];
    Ok(Output::Table {
        header: vec!["from".into(), "to".into(), "mean".into(), "std_error".into(), "exact".into(), "z".into()],
        rows: vec![vec![
            a.from.to_string(),
            a.to.to_string(),
            est.mean.to_string(),
            est.std_error.to_string(),
            exact.to_string(),
            est.z_score(exact).to_string(),
        ]],
        json: json!({
            "lambda0": pair.lambda0,
            "tilt": mu,
            "estimate": est,
            "exact": exact,
            "z_score": est.z_score(exact),
        }),
    })
}

fn sandwich(a: &SandwichArgs) -> Outcome {
    let gen = load_generator(&a.input.input)?;
    let mu0 = parse_measure(&a.mu0, gen.n())?;
    let times = parse_list(&a.times)?;
    let table = sandwich_experiment(&gen, &mu0, &times)?;
    for w in &table.warnings {
        eprintln!("warning: {}", serde_json::to_string(w).expect("json"));
    }
    let header = ["t", "qsd_distance", "doob_distance", "lower", "upper", "log_survival", "holds"];
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.t.to_string(),
                r.qsd_distance.to_string(),
                r.doob_distance.to_string(),
                r.lower.to_string(),
                r.upper.to_string(),
                r.log_survival.to_string(),
                r.holds.to_string(),
            ]
        })
        .collect();
    Ok(Output::Table { header: header.iter().map(|s| s.to_string()).collect(), rows, json: to_value(&table) })
}

fn bd(cmd: &BdCommand) -> Outcome {
    match cmd {
        BdCommand::Entrance(a) => {
            let rates = parse_family(&a.rates.rates)?;
            let v = entrance_check(rates.as_ref(), a.cutoff)?;
            let rows = (0..a.cutoff)
                .map(|i| {
                    vec![
                        (i + 1).to_string(),
                        v.r_log_partial_sums[i].to_string(),
                        v.s_partial_sums.get(i).map(|s| s.to_string()).unwrap_or_default(),
                    ]
                })
                .collect();
            let mut json = to_value(&v);
            json["family"] = json!(rates.label());
            Ok(Output::Table {
                header: vec!["x".into(), "r_log_partial_sum".into(), "s_partial_sum".into()],
                rows,
                json,
            })
        }
        BdCommand::Converge(a) => {
            let rates = parse_family(&a.rates.rates)?;
            let mut series = eigen_convergence(rates.as_ref(), a.nmax, &doubling_schedule(a.min_exp, a.max_exp), a.tol)?;
            if !a.phi {
                series.strip_phi();
            }
            let k = series.rows.iter().map(|r| r.lambda.len()).max().unwrap_or(0);
            let mut header = vec!["n_states".to_string()];
            header.extend((0..k).map(|i| format!("lambda_{i}")));
            header.extend(["lambda0_prime", "amplitude", "phi_increasing"].map(String::from));
            let rows = series
                .rows
                .iter()
                .map(|r| {
                    let mut row = vec![r.n_states.to_string()];
                    row.extend((0..k).map(|i| r.lambda.get(i).map(|v| v.to_string()).unwrap_or_default()));
                    row.extend([r.lambda0_prime.to_string(), r.amplitude.to_string(), r.phi_increasing.to_string()]);
                    row
                })
                .collect();
            Ok(Output::Table { header, rows, json: to_value(&series) })
        }
        BdCommand::Bound(a) => {
            let rates = parse_family(&a.rates.rates)?;
            let mut series =
                eigen_convergence(rates.as_ref(), a.nmax, &doubling_schedule(a.min_exp, a.max_exp), a.tol)?;
            series.strip_phi();
            let report = bd_theorem_report(rates.as_ref(), &series, a.trace_cutoff)?;
            let gaps: Vec<Value> = series
                .ns()
                .iter()
                .map(|&n| gap_identity_check(rates.as_ref(), n).map(|g| to_value(&g)))
                .collect::<Result<_, Error>>()?;
            if !report.theorem.tail_certified {
                eprintln!("warning: partial product only, tail uncertified");
            }
            Ok(Output::Json(json!({
                "family": rates.label(),
                "report": report,
                "monotone": series.is_monotone(),
                "violations": series.violations,
                "gap_identity": gaps,
            })))
        }
    }
}

fn run_reproduce(a: &ReproduceArgs) -> Outcome {
    let cases: Vec<&str> = if a.cases.is_empty() { CASES.to_vec() } else { a.cases.iter().map(String::as_str).collect() };
    let reports: Vec<CaseReport> = cases.iter().map(|c| reproduce(c)).collect::<Result<_, Error>>()?;
    for r in &reports {
        eprintln!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.case);
    }
    let value = to_value(&reports);
    if reports.iter().all(|r| r.passed) {
        Ok(Output::Json(value))
    } else {
        Err(Failure::Reproduction(value))
    }
}
