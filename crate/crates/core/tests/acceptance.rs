//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiquantum::config::bundled;
use semiquantum::config::parse_scenario;
use semiquantum::diagnostics::{convergence_order_exact, discrepancy_scaling, energy_drift, lyapunov_max};
use semiquantum::dynamics::integrate_invariant;
use semiquantum::physics::{
    occupation_closed_form, occupation_difference_exact, quanta_expectation, vacuum_moments, Bogoliubov,
};
use semiquantum::{
    integrate, Method, ModelParams, OscBasis, QuantumInit, Representation, ScenarioConfig, TimeSeriesRecord,
};

type Outcome = Result<String, String>;

/// Name, time budget and check.
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn scenario(name: &str) -> ScenarioConfig {
    parse_scenario(bundled(name).expect("bundled scenario"), name).expect("bundled scenario parses")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn closed_form_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let om = rng.gen_range(0.05..20.0);
        let omd = rng.gen_range(-10.0..10.0);
        let w = rng.gen_range(0.05..20.0);
        let hbar = rng.gen_range(0.1..5.0);
        let closed = occupation_closed_form(om, omd, w);
        let m = vacuum_moments(om, omd, hbar).map_err(|e| e.to_string())?;
        let n = quanta_expectation(&m, &OscBasis::instantaneous(w).unwrap(), hbar).map_err(|e| e.to_string())?;
        worst = worst.max((closed - n).abs() / (closed + 0.5));
    }
    check(
        worst <= 1e-12,
        format!("worst relative error {worst:.2e} over 1000 triples"),
    )
}

fn vacuum_kick_spot() -> Outcome {
    let cfg = scenario("vacuum-kick");
    let state = cfg.initial_state().map_err(|e| e.to_string())?;
    let r = TimeSeriesRecord::from_state(&state, &cfg.params).map_err(|e| e.to_string())?;
    check(
        r.n_ours == 0.0 && (r.n_cdms - 0.0078125).abs() <= 1e-12,
        format!("N_ours(0) = {:e}, N_cdms(0) = {:.17}", r.n_ours, r.n_cdms),
    )
}

fn drift_at(dt: f64) -> Result<f64, String> {
    let mut cfg = scenario("vacuum-kick");
    cfg.method = Method::Rk4 { dt };
    let tr = integrate(&cfg).map_err(|e| e.to_string())?;
    if !tr.termination.is_completed() {
        return Err(format!("dt = {dt}: {}", tr.termination.status()));
    }
    energy_drift(&tr.records).map_err(|e| e.to_string())
}

fn energy_conservation() -> Outcome {
    let d1 = drift_at(1e-3)?;
    let d2 = drift_at(5e-4)?;
    let ratio = d1 / d2;
    check(
        d1 <= 1e-7 && (10.0..=22.0).contains(&ratio),
        format!("drift {d1:.2e} at dt=1e-3, {d2:.2e} at dt=5e-4, ratio {ratio:.1}"),
    )
}

fn representation_equivalence() -> Outcome {
    // Vacuum-kick is chaotic; at dt = 1e-3 truncation differences between
    // the three flows grow past 1e-8 by t = 50.
    let runs: Vec<Vec<TimeSeriesRecord>> = std::thread::scope(|s| {
        let handles: Vec<_> = Representation::ALL
            .iter()
            .map(|&rep| {
                s.spawn(move || {
                    let mut cfg = scenario("vacuum-kick");
                    cfg.t_end = 50.0;
                    cfg.method = Method::Rk4 { dt: 2.5e-4 };
                    cfg.sample_every = 40;
                    cfg.representation = rep;
                    integrate(&cfg).map(|t| t.records)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect::<Result<_, _>>()
    })
    .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for other in &runs[1..] {
        if other.len() != runs[0].len() {
            return Err("runs have different sample counts".into());
        }
        for (a, b) in runs[0].iter().zip(other) {
            worst = worst.max((a.x2 - b.x2).abs() / a.x2);
        }
    }
    check(
        worst <= 1e-8,
        format!("worst relative <x^2> difference {worst:.2e} over t in [0, 50]"),
    )
}

fn adiabatic_invariant() -> Outcome {
    let cfg = scenario("vacuum-kick");
    let s = integrate_invariant(&cfg, None).map_err(|e| e.to_string())?;
    if !s.termination.is_completed() {
        return Err(s.termination.status().to_string());
    }
    let worst = s.quanta.iter().fold(0.0f64, |m, n| m.max(n.abs()));
    check(
        worst <= 1e-6,
        format!("max |<a^dagger a>| = {worst:.2e} over t in [0, 100]"),
    )
}

fn difference_identity() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["vacuum-kick", "strong", "adiabatic"] {
        let tr = integrate(&scenario(name)).map_err(|e| e.to_string())?;
        for r in &tr.records {
            let exact = occupation_difference_exact(r.omega_eff, r.omega_eff_dot, r.omega, r.omegadot);
            worst = worst.max((r.n_ours - r.n_cdms - exact).abs());
        }
    }
    check(
        worst <= 1e-10,
        format!("worst absolute deviation {worst:.2e} on vacuum-kick, strong, adiabatic"),
    )
}

fn leading_order_law() -> Outcome {
    let s = discrepancy_scaling(&scenario("adiabatic"), &[0.2, 0.1, 0.05]).map_err(|e| e.to_string())?;
    let power = s.power.ok_or_else(|| s.note.clone().unwrap_or_default())?;
    let coeffs = s.remainder_coefficients();
    let consistent = coeffs
        .windows(2)
        .all(|w| w[0] > 0.0 && w[1] > 0.0 && (w[0] / w[1]).max(w[1] / w[0]) <= 5.0);
    check(
        (3.7..=4.3).contains(&power) && consistent,
        format!(
            "power {power:.3}; remainder / e^6 = [{}]",
            coeffs.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn trivial_limits() -> Outcome {
    let mut cfg = scenario("free");
    cfg.method = Method::Rk4 { dt: 0.01 };
    cfg.sample_every = 1;
    let tr = integrate(&cfg).map_err(|e| e.to_string())?;
    let (mut n_max, mut lin_max) = (0.0f64, 0.0f64);
    for r in &tr.records {
        n_max = n_max.max(r.n_ours.abs()).max(r.n_cdms.abs());
        lin_max = lin_max.max((r.a - (cfg.a0 + cfg.adot0 * r.t)).abs());
    }

    let (m, rho0) = (1.3, 0.6);
    let mut cfg = ScenarioConfig::new("breathing", ModelParams::new(m, 0.0, 1.0).unwrap(), 0.0, 0.0, 20.0);
    cfg.quantum_init = QuantumInit::Explicit { rho0, rhodot0: 0.0 };
    let tr = integrate(&cfg).map_err(|e| e.to_string())?;
    let mut rho_err = 0.0f64;
    for r in &tr.records {
        let (s, c) = (m * r.t).sin_cos();
        let exact = (rho0 * rho0 * c * c + s * s / (m * m * rho0 * rho0)).sqrt();
        rho_err = rho_err.max((r.rho - exact).abs() / exact);
    }
    check(
        n_max <= 1e-12 && lin_max <= 1e-12 && rho_err <= 1e-8,
        format!("e=0: max |N| {n_max:.1e}, max |A - A_lin| {lin_max:.1e}; width vs analytic {rho_err:.1e}"),
    )
}

fn unitarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut basis = || {
            OscBasis::new(
                rng.gen_range(0.05..20.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            )
            .unwrap()
        };
        let (a, b) = (basis(), basis());
        let Bogoliubov { alpha, beta } = Bogoliubov::between(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((alpha.norm_sqr() - beta.norm_sqr() - 1.0).abs());
    }
    check(
        worst <= 1e-12,
        format!("worst | |alpha|^2 - |beta|^2 - 1 | = {worst:.2e} over 1000 pairs"),
    )
}

fn diagnostics_self_tests() -> Outcome {
    let sho = |_t: f64, y: &[f64; 2]| -> semiquantum::Result<[f64; 2]> { Ok([y[1], -y[0]]) };
    let t_end = 10.0;
    let study = convergence_order_exact(
        &sho,
        [1.0, 0.0],
        t_end,
        &[0.1, 0.05, 0.025, 0.0125],
        [t_end.cos(), -t_end.sin()],
    )
    .map_err(|e| e.to_string())?;
    let mut free = scenario("free");
    free.t_end = 100.0;
    let mut lambdas = vec![lyapunov_max(&free, 1.0, 100.0).map_err(|e| e.to_string())?.lambda];
    let mut cfg = ScenarioConfig::new(
        "free-breathing",
        ModelParams::new(1.0, 0.0, 1.0).unwrap(),
        0.5,
        -0.3,
        100.0,
    );
    cfg.quantum_init = QuantumInit::Explicit {
        rho0: 0.7,
        rhodot0: 0.2,
    };
    lambdas.push(lyapunov_max(&cfg, 1.0, 100.0).map_err(|e| e.to_string())?.lambda);
    let lmax = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    check(
        (3.7..=4.3).contains(&study.order) && lmax <= 1e-3,
        format!(
            "rk4 order {:.3} on A'' = -A; lambda_max at e=0: {lmax:.2e}",
            study.order
        ),
    )
}

fn cli_reproducibility() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = Command::new(env!("CARGO_BIN_EXE_semiquantum"))
            .args(["simulate", "vacuum-kick", "-o"])
            .arg(d.path())
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
    }
    for f in ["timeseries.csv", "number_overlay.svg"] {
        let a = std::fs::read(dirs[0].path().join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(f)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{f} differs between runs"));
        }
    }
    Ok("timeseries.csv and number_overlay.svg byte-identical across two runs".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        (
            "closed-form occupation oracle",
            Duration::from_secs(1),
            closed_form_oracle,
        ),
        ("vacuum-kick spot values", Duration::from_secs(1), vacuum_kick_spot),
        ("energy conservation", Duration::from_secs(30), energy_conservation),
        (
            "representation equivalence",
            Duration::from_secs(60),
            representation_equivalence,
        ),
        ("adiabatic invariant", Duration::from_secs(30), adiabatic_invariant),
        (
            "exact discrepancy identity",
            Duration::from_secs(30),
            difference_identity,
        ),
        ("leading-order law", Duration::from_secs(120), leading_order_law),
        ("trivial limits", Duration::from_secs(30), trivial_limits),
        ("Bogoliubov unitarity", Duration::from_secs(1), unitarity),
        (
            "diagnostics self-tests",
            Duration::from_secs(30),
            diagnostics_self_tests,
        ),
        ("CLI reproducibility", Duration::from_secs(30), cli_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget {budget:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail} ({:.2}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
