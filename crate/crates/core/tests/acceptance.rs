//! Acceptance suite. Every test writes one `PASS`/`FAIL` line straight to
//! stdout (bypassing the test harness capture), then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use bsq::config::{Config, InitialFamily, InitialSpec};
use bsq::diagnostics::{cancellation_i1, cancellation_j1};
use bsq::experiments::{compute, initial_state, scheme_order, ExperimentName, Outcome};
use bsq::nonlinear::{GridSpec, SimConfig};
use bsq::rng::{random_scalar, random_solenoidal, stream_rng};
use bsq::{FrequencyGrid, Params};

fn verdict(id: u32, title: &str, passed: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let within = elapsed <= budget;
    let tag = if passed && within { "PASS" } else { "FAIL" };
    let line = format!(
        "{tag} criterion {id} ({title}): {detail}; {:.2}s of {}s\n",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    assert!(passed, "criterion {id} failed: {detail}");
    assert!(
        within,
        "criterion {id} over budget: {elapsed:?} > {budget:?}"
    );
}

fn run_experiment(name: ExperimentName) -> (Outcome, Duration) {
    let start = Instant::now();
    let o = compute(name, &Config::default(), 0).expect("experiment runs");
    (o, start.elapsed())
}

fn detail(o: &Outcome, filter: impl Fn(&str) -> bool) -> (bool, String) {
    let checks: Vec<_> = o.checks.iter().filter(|c| filter(&c.name)).collect();
    assert!(!checks.is_empty());
    let text = checks
        .iter()
        .map(|c| format!("{}={:.3e} (limit {:e})", c.name, c.value, c.threshold))
        .collect::<Vec<_>>()
        .join(", ");
    (checks.iter().all(|c| c.passed), text)
}

const MIN: u64 = 60;

#[test]
fn criterion_1_exact_propagator() {
    let (o, dt) = run_experiment(ExperimentName::LinearVerify);
    let (ok, d) = detail(&o, |_| true);
    verdict(
        1,
        "exact propagator vs RK4 oracle",
        ok,
        dt,
        Duration::from_secs(10),
        &d,
    );
}

#[test]
fn criterion_2_roots_and_root_bounds() {
    let start = Instant::now();
    let r = bsq::experiments::root_checks(10_000, 0, 0).unwrap();
    let ok = r.vieta_sum <= 1e-12 && r.vieta_product <= 1e-12 && r.bound_failures == 0;
    let d = format!(
        "{} samples, vieta sum {:.2e}, product {:.2e} (limit 1e-12), bound failures {}",
        r.samples, r.vieta_sum, r.vieta_product, r.bound_failures
    );
    verdict(
        2,
        "Vieta identities and root bounds",
        ok,
        start.elapsed(),
        Duration::from_secs(5),
        &d,
    );
}

#[test]
fn criterion_3_kernel_envelopes() {
    let (o, dt) = run_experiment(ExperimentName::KernelBounds);
    let (ok, d) = detail(&o, |n| n.contains(':'));
    verdict(3, "kernel envelopes", ok, dt, Duration::from_secs(30), &d);
}

#[test]
fn criterion_4_exponential_decay() {
    let (o, dt) = run_experiment(ExperimentName::ExpDecay);
    let (ok, d) = detail(&o, |_| true);
    let c0 = o.metrics["c0"].as_f64().unwrap();
    let ok = ok && c0 == 0.125;
    verdict(
        4,
        "Lyapunov pair decay",
        ok,
        dt,
        Duration::from_secs(MIN),
        &format!("C0={c0}, {d}"),
    );
}

#[test]
fn criterion_5_decay_envelopes() {
    let (o, dt) = run_experiment(ExperimentName::DecayRates);
    let (ok, d) = detail(&o, |_| true);
    verdict(
        5,
        "decay envelopes by quadrature",
        ok,
        dt,
        Duration::from_secs(5 * MIN),
        &d,
    );
}

#[test]
fn criterion_6_energy_identity() {
    let (o, dt) = run_experiment(ExperimentName::EnergyBalance);
    let (ok, d) = detail(&o, |_| true);
    verdict(
        6,
        "discrete energy identity",
        ok,
        dt,
        Duration::from_secs(5 * MIN),
        &d,
    );
}

#[test]
fn criterion_7_exact_cancellations() {
    let start = Instant::now();
    let g = FrequencyGrid::square(32).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let mut rng = stream_rng(7, k);
        let u = random_solenoidal(&g, 10, &mut rng);
        let theta = random_scalar(&g, 10, &mut rng);
        for (v, mag) in [
            cancellation_i1(&u, &theta).unwrap(),
            cancellation_j1(&u, &theta).unwrap(),
        ] {
            worst = worst.max(v.abs() / mag);
        }
    }
    let ok = worst <= 1e-10;
    let d = format!("100 states, worst relative residual {worst:.2e} (limit 1e-10)");
    verdict(
        7,
        "I1 and J1 cancellations",
        ok,
        start.elapsed(),
        Duration::from_secs(10),
        &d,
    );
}

#[test]
fn criterion_8_small_data_stability() {
    let (o, dt) = run_experiment(ExperimentName::StabilitySweep);
    let (ok, d) = detail(&o, |_| true);
    verdict(
        8,
        "small-data stability",
        ok,
        dt,
        Duration::from_secs(20 * MIN),
        &d,
    );
}

#[test]
fn criterion_9_scheme_order() {
    let start = Instant::now();
    let p = Params::new(1.0, 1.0).unwrap();
    let cfg = SimConfig::new(p, GridSpec::square(32), 0.02, 1.0);
    let spec = InitialSpec {
        family: InitialFamily::Random,
        epsilon: 1.0,
        band: 4,
    };
    let init = initial_state(&cfg.grid.build().unwrap(), &spec, 2, 0).unwrap();
    let order = scheme_order(&cfg, &init).unwrap();
    let ok = order >= 3.8;
    let d = format!("observed order {order:.3} (limit 3.8)");
    verdict(
        9,
        "IF-RK4 self-convergence",
        ok,
        start.elapsed(),
        Duration::from_secs(5 * MIN),
        &d,
    );
}
