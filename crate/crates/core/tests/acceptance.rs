mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use amplitude_core::birth_death::{entrance_check, Poisson, PoissonAccelerated, Verdict};
use amplitude_core::bounds::{exact_bd_amplitude, path_bound, spectral_bound, PathChoice};
use amplitude_core::reproduce::{bd_pipeline_checks, golden_generator, reproduce, rho_lambda0_asymptote, Check};
use amplitude_core::simulate::{
    default_tilt, estimate_ratio, estimate_ratio_tilted, exponential_law_check, sample_absorption_times,
};
use amplitude_core::spectral::{full_spectrum, full_spectrum_with_minors, lambda0_minor, quasi_stationary_dist};
use amplitude_core::{build_rho_chain, dirichlet_eigenpair, AbsorbingGenerator};
use common::*;
use rand::Rng;

type Verdictish = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdictish {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn failed_checks(checks: &[Check]) -> Vec<String> {
    checks.iter().filter(|c| !c.passed).map(|c| format!("{} = {:?}", c.name, c.computed)).collect()
}

fn spectrum_closed_form() -> Verdictish {
    let mut worst = 0.0f64;
    for n in [5usize, 20, 100] {
        let ev = full_spectrum(&build_rho_chain(n, 1.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.eigenvalues;
        if ev.len() != n {
            return Err(format!("N={n}: {} eigenvalues", ev.len()));
        }
        for (k, &l) in ev.iter().enumerate() {
            let exact = 2.0 * (1.0 - ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos());
            worst = worst.max((l - exact).abs());
        }
    }
    ensure(worst <= 1e-10, format!("max abs error {worst:.2e}"))
}

fn rho1_amplitude() -> Verdictish {
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, tol) in [(100usize, 1e-3), (400, 1e-4)] {
        let a = dirichlet_eigenpair(&build_rho_chain(n, 1.0).unwrap()).map_err(|e| e.to_string())?.amplitude();
        let dev = (a * PI / (2.0 * n as f64) - 1.0).abs();
        ok &= dev <= tol;
        parts.push(format!("N={n}: |a pi/2N - 1| = {dev:.2e}"));
    }
    ensure(ok, parts.join(", "))
}

fn rho2_amplitude() -> Verdictish {
    let a = dirichlet_eigenpair(&build_rho_chain(30, 2.0).unwrap()).map_err(|e| e.to_string())?.amplitude();
    ensure((a - 2.0).abs() <= 1e-6, format!("a = {a:.12}"))
}

fn rho2_lambda0() -> Verdictish {
    let ns = [30usize, 40, 50, 60];
    let mut ratios = Vec::new();
    for &n in &ns {
        let l = dirichlet_eigenpair(&build_rho_chain(n, 2.0).unwrap()).map_err(|e| e.to_string())?.lambda0;
        ratios.push(l / rho_lambda0_asymptote(2.0, n));
    }
    let in_range = (0.9..=1.1).contains(&ratios[0]);
    let trend = ratios.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
    ensure(in_range && trend, format!("ratios at N=30..60: {ratios:.6?}"))
}

fn exact_birth_death() -> Verdictish {
    let mut rng = rng(5);
    let mut worst = 0.0f64;
    let mut worst_eig = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=200usize);
        let bd = random_birth_death(&mut rng, n);
        let gen = bd.to_generator().map_err(|e| e.to_string())?;
        let a = dirichlet_eigenpair(&gen).map_err(|e| e.to_string())?.amplitude();
        let exact = exact_bd_amplitude(&gen).map_err(|e| e.to_string())?;
        worst = worst.max((a / exact.amplitude - 1.0).abs());
        let dense = dense_bd_eigenvalues(&bd.slice(1, n));
        let scale = dense.last().cloned().unwrap_or(1.0);
        for (d, c) in dense.iter().zip(&exact.minor_eigenvalues) {
            worst_eig = worst_eig.max((d - c).abs() / scale);
        }
    }
    ensure(
        worst <= 1e-8 && worst_eig <= 1e-12,
        format!("max relative gap {worst:.2e}, minor spectrum vs dense {worst_eig:.2e}"),
    )
}

fn bound_dominance() -> Verdictish {
    let mut rng = rng(6);
    let (mut worst_amp, mut min_spec, mut min_path, mut min_gap) = (0.0f64, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for i in 0..200 {
        let n = rng.random_range(1..=12usize);
        let inst = random_reversible(&mut rng, n);
        let g = &inst.gen;
        let pair = dirichlet_eigenpair(g).map_err(|e| e.to_string())?;
        let (l0, amp) = dense_lambda0_amplitude(&inst);
        worst_amp = worst_amp.max((pair.amplitude() / amp - 1.0).abs()).max((pair.lambda0 / l0 - 1.0).abs());
        let spec = spectral_bound(&full_spectrum_with_minors(g).map_err(|e| e.to_string())?).map_err(|e| format!("#{i}: {e}"))?;
        let path = path_bound(g, pair.lambda0, PathChoice::Best).map_err(|e| format!("#{i}: {e}"))?;
        min_spec = min_spec.min(spec.bound / pair.amplitude());
        min_path = min_path.min(path.bound / pair.amplitude());
        for x in 0..n {
            let keep: Vec<usize> = (0..n).filter(|&y| y != x).collect();
            let minor = if keep.is_empty() { f64::INFINITY } else { dense_oracle(&inst, &keep).0[0] };
            let core_minor = lambda0_minor(g, x).map_err(|e| e.to_string())?;
            if (core_minor - minor).abs() > 1e-9 * minor.max(1.0) && minor.is_finite() {
                return Err(format!("#{i}: minor {x} eigenvalue {core_minor} vs dense {minor}"));
            }
            min_gap = min_gap.min(minor - l0);
        }
    }
    let ok = worst_amp <= 1e-8 && min_spec >= 1.0 - 1e-12 && min_path >= 1.0 - 1e-12 && min_gap > 0.0;
    ensure(
        ok,
        format!(
            "oracle agreement {worst_amp:.2e}, min spectral/a {min_spec:.6}, min path/a {min_path:.6}, min gap {min_gap:.3e}"
        ),
    )
}

fn golden() -> Verdictish {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let g = golden_generator();
    let pair = dirichlet_eigenpair(&g).map_err(|e| e.to_string())?;
    let path = path_bound(&g, pair.lambda0, PathChoice::Best).map_err(|e| e.to_string())?.bound;
    let spec = spectral_bound(&full_spectrum_with_minors(&g).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.bound;
    // 1 / ((1 - λ0) (1 - λ0/λ1)) with λ0, λ1 = (3 ∓ √5)/2
    let (l0, l1) = ((3.0 - 5f64.sqrt()) / 2.0, (3.0 + 5f64.sqrt()) / 2.0);
    let spec_oracle = 1.0 / ((1.0 - l0) * (1.0 - l0 / l1));
    let ok = (pair.amplitude() - phi).abs() <= 1e-12 && (path - phi).abs() <= 1e-12 && (spec - spec_oracle).abs() <= 1e-9;
    ensure(ok, format!("a = {:.15}, path {path:.15}, spectral {spec:.12} (oracle {spec_oracle:.12})", pair.amplitude()))
}

fn simulation() -> Verdictish {
    const SAMPLES: usize = 100_000;
    let mut parts = Vec::new();
    let mut ok = true;
    let mut check_pair = |label: &str, gen: &AbsorbingGenerator, x: usize, y: usize, exact: f64, tilted: bool, seed: u64| -> Result<(), String> {
        let l0 = dirichlet_eigenpair(gen).map_err(|e| e.to_string())?.lambda0;
        let est = if tilted {
            let mu = default_tilt(gen, l0, y).map_err(|e| e.to_string())?;
            estimate_ratio_tilted(gen, l0, x, y, mu, SAMPLES, seed)
        } else {
            estimate_ratio(gen, l0, x, y, SAMPLES, seed)
        }
        .map_err(|e| e.to_string())?;
        let z = est.z_score(exact);
        ok &= z.abs() <= 3.0;
        parts.push(format!("{label} z={z:+.2}"));
        Ok(())
    };
    let golden = golden_generator();
    let ratio = (1.0 + 5f64.sqrt()) / 2.0;
    check_pair("golden 2->1", &golden, 1, 0, ratio, false, 11)?;
    check_pair("golden 1->2", &golden, 0, 1, 1.0 / ratio, false, 12)?;
    let rho = build_rho_chain(10, 1.0).unwrap();
    let (_, phi) = dense_bd_ground(&rho.as_birth_death().expect("birth-death"));
    check_pair("rho1 1->10", &rho, 0, 9, phi[0] / phi[9], false, 13)?;
    check_pair("rho1 10->1", &rho, 9, 0, phi[9] / phi[0], true, 14)?;
    for (label, gen, seed) in [("golden", &golden, 15u64), ("rho1", &rho, 16)] {
        let qsd = quasi_stationary_dist(gen).map_err(|e| e.to_string())?;
        let times = sample_absorption_times(gen, &qsd.nu, SAMPLES, seed).map_err(|e| e.to_string())?;
        let c = exponential_law_check(&times, qsd.lambda0);
        ok &= c.mean_ok && c.variance_ok;
        parts.push(format!("{label} Exp: mean {:.4} var {:.4}", c.scaled_mean, c.scaled_variance));
    }
    ensure(ok, parts.join(", "))
}

fn sandwich() -> Verdictish {
    let r = reproduce("sandwich-demo").map_err(|e| e.to_string())?;
    let min = r.checks.iter().filter_map(|c| c.computed).fold(f64::INFINITY, f64::min);
    ensure(r.passed && r.checks.len() == 8, format!("min slack {min:.3e}; failing: {:?}", failed_checks(&r.checks)))
}

fn denumerable() -> Verdictish {
    let checks = bd_pipeline_checks(&PoissonAccelerated).map_err(|e| e.to_string())?;
    let summary: Vec<String> =
        checks.iter().map(|c| format!("{}{}", c.name, c.computed.map(|v| format!(" = {v:.6}")).unwrap_or_default())).collect();
    ensure(checks.iter().all(|c| c.passed), format!("{}; failing: {:?}", summary.join(", "), failed_checks(&checks)))
}

fn negative_control() -> Verdictish {
    let v = entrance_check(&Poisson, 10_000).map_err(|e| e.to_string())?;
    ensure(v.s_series_converges == Verdict::No, format!("(S) verdict {:?}", v.s_series_converges))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Option<Duration>, fn() -> Verdictish); 11] = [
        (1, "closed-form spectrum, rho = 1", Some(Duration::from_secs(1)), spectrum_closed_form),
        (2, "amplitude asymptotics, rho = 1", Some(Duration::from_secs(5)), rho1_amplitude),
        (3, "amplitude limit, rho = 2", Some(Duration::from_secs(1)), rho2_amplitude),
        (4, "lambda0 asymptotics, rho = 2", None, rho2_lambda0),
        (5, "exact birth-death identity", Some(Duration::from_secs(30)), exact_birth_death),
        (6, "bound dominance on random reversible chains", Some(Duration::from_secs(30)), bound_dominance),
        (7, "golden-ratio instance", Some(Duration::from_millis(100)), golden),
        (8, "probabilistic representation by simulation", Some(Duration::from_secs(60)), simulation),
        (9, "total variation sandwich", Some(Duration::from_secs(5)), sandwich),
        (10, "denumerable pipeline, accelerated example", Some(Duration::from_secs(120)), denumerable),
        (11, "negative control, Poisson", None, negative_control),
    ];
    let mut failures = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = limit.is_some_and(|l| elapsed > l);
        let (passed, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; runtime over {:?}", limit.unwrap())),
            Err(d) => (false, d),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {} {name} ({:.3} s): {detail}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
