//! The canonical experiments, as library functions with explicit inputs and
//! as config-driven drivers that write versioned reports.
//!
//! Seeding: a run has one seed; sub-experiment `k` (a parameter pair, a
//! sweep member, the root sampler) draws from ChaCha8 stream `k` of it, see
//! [`crate::rng::stream_rng`].

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::config::{default_decay_cases, Config, InitialFamily, InitialSpec, SimDefaults};
use crate::diagnostics::{
    apply_cutoff_vector, default_window, energy_functional, fit_decay_rate, lyapunov_ab,
    lyapunov_constants, CutoffFilter, EnergyReport, FitMode, LyapunovReport,
};
use crate::error::{Error, Result};
use crate::kernels::{
    char_roots, count_envelope_violations, fit_envelopes, geomspace, verify_root_bounds,
    EnvelopeLattice, FitOptions, Params,
};
use crate::linear::{max_mode_relative_error, ode_oracle_per_mode, propagate_exact, LinearState};
use crate::nonlinear::{run, GridSpec, SimConfig};
use crate::quadrature::{decay_report, DecayCase, DecayReport, DEFAULT_REL_TOL};
use crate::report::{
    build_id, fmt_f64, write_csv_file, Check, RunSummary, Schema, DECAY_RATES_SCHEMA,
    DIAGNOSTICS_SCHEMA, ENERGY_SCHEMA, ENVELOPE_FIT_SCHEMA, LINEAR_VERIFY_SCHEMA, LYAPUNOV_SCHEMA,
    SWEEP_SCHEMA,
};
use crate::rng::{random_scalar, random_solenoidal, rescale_h2, stream_rng, taylor_green};
use crate::spectral::FrequencyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentName {
    LinearVerify,
    KernelBounds,
    DecayRates,
    ExpDecay,
    StabilitySweep,
    EnergyBalance,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::LinearVerify,
        ExperimentName::KernelBounds,
        ExperimentName::DecayRates,
        ExperimentName::ExpDecay,
        ExperimentName::StabilitySweep,
        ExperimentName::EnergyBalance,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::LinearVerify => "linear-verify",
            ExperimentName::KernelBounds => "kernel-bounds",
            ExperimentName::DecayRates => "decay-rates",
            ExperimentName::ExpDecay => "exp-decay",
            ExperimentName::StabilitySweep => "stability-sweep",
            ExperimentName::EnergyBalance => "energy-balance",
        }
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// One experiment invocation.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub config: Config,
    pub out_dir: PathBuf,
    pub seed: u64,
}

/// Initial state on `grid` from a recipe; random families use stream
/// `stream` of `seed`.
pub fn initial_state(
    grid: &FrequencyGrid,
    spec: &InitialSpec,
    seed: u64,
    stream: u64,
) -> Result<LinearState> {
    let (u, theta) = match spec.family {
        InitialFamily::Random => {
            let mut rng = stream_rng(seed, stream);
            let u = random_solenoidal(grid, spec.band, &mut rng);
            let theta = random_scalar(grid, spec.band, &mut rng);
            (u, theta)
        }
        InitialFamily::TaylorGreen => taylor_green(grid),
    };
    let (u, theta) = rescale_h2(&u, &theta, spec.epsilon)?;
    LinearState::new(u, theta, 0.0)
}

// ---------------------------------------------------------------- linear

/// Dimensionless RK4 step of the oracle. Truncation error over `t` is
/// about `t·‖A‖·z⁴/120` and round-off in the matrix powers about
/// `t·‖A‖/z · 2⁻⁵²`; `2·10⁻³` keeps both below `10⁻⁸` on the verification grid.
pub const ORACLE_Z: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearVerifyRow {
    pub nu: f64,
    pub eta: f64,
    pub t: f64,
    /// Dimensionless oracle step `dt·‖A(ξ)‖_∞`.
    pub oracle_z: f64,
    pub max_rel_error: f64,
}

impl LinearVerifyRow {
    pub fn row(&self) -> Vec<String> {
        [self.nu, self.eta, self.t, self.oracle_z, self.max_rel_error]
            .map(fmt_f64)
            .to_vec()
    }
}

/// Exact propagator against the RK4 oracle for every `(ν, η, t)`, each
/// `(ν, η)` pair with its own random solenoidal state.
pub fn linear_verify(
    grid: &FrequencyGrid,
    nus: &[f64],
    etas: &[f64],
    times: &[f64],
    band: i64,
    seed: u64,
) -> Result<Vec<LinearVerifyRow>> {
    let mut rows = Vec::new();
    let mut stream = 0;
    for &nu in nus {
        for &eta in etas {
            let p = Params::new(nu, eta)?;
            let spec = InitialSpec {
                family: InitialFamily::Random,
                epsilon: 1.0,
                band,
            };
            let s0 = initial_state(grid, &spec, seed, stream)?;
            stream += 1;
            for &t in times {
                let exact = propagate_exact(&s0, t, &p)?;
                let oracle = ode_oracle_per_mode(&s0, t, &p, ORACLE_Z)?;
                rows.push(LinearVerifyRow {
                    nu,
                    eta,
                    t,
                    oracle_z: ORACLE_Z,
                    max_rel_error: max_mode_relative_error(&exact, &oracle, &oracle),
                });
            }
        }
    }
    Ok(rows)
}

// --------------------------------------------------------------- kernels

/// Worst deviations found by [`root_checks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootCheckSummary {
    pub samples: usize,
    /// `max |λ₁ + λ₂ + b| / b`.
    pub vieta_sum: f64,
    /// `max |λ₁λ₂ − c| / c`.
    pub vieta_product: f64,
    pub bound_failures: usize,
}

/// Vieta identities and region root bounds at `samples` random frequencies
/// (log-uniform magnitudes in `[10⁻³, 10³]`, random signs) with random
/// `ν, η` (log-uniform in `[10⁻², 10²]`).
pub fn root_checks(samples: usize, seed: u64, stream: u64) -> Result<RootCheckSummary> {
    let mut rng = stream_rng(seed, stream);
    let mut log_uniform = |lo: f64, hi: f64| -> f64 {
        let u: f64 = rng.gen();
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        sign * (lo.ln() + u * (hi.ln() - lo.ln())).exp()
    };
    let mut out = RootCheckSummary {
        samples,
        vieta_sum: 0.0,
        vieta_product: 0.0,
        bound_failures: 0,
    };
    for _ in 0..samples {
        let (x1, x2) = (log_uniform(1e-3, 1e3), log_uniform(1e-3, 1e3));
        let p = Params::new(log_uniform(1e-2, 1e2).abs(), log_uniform(1e-2, 1e2).abs())?;
        let (l1, l2) = char_roots(x1, x2, &p)?;
        let (b, c) = (p.damping(x1, x2), p.stiffness(x1, x2));
        out.vieta_sum = out.vieta_sum.max((l1 + l2 + b).norm() / b);
        out.vieta_product = out.vieta_product.max((l1 * l2 - c).norm() / c);
        if !verify_root_bounds(x1, x2, &p)? {
            out.bound_failures += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFitRow {
    pub family: String,
    pub c: f64,
    /// `NaN` for families whose envelope has no free rate.
    pub c0: f64,
    pub uses_c0: bool,
    pub max_ratio: f64,
    pub samples: usize,
    pub violations: usize,
    pub validation_samples: usize,
}

impl EnvelopeFitRow {
    pub fn row(&self) -> Vec<String> {
        vec![
            self.family.clone(),
            fmt_f64(self.c),
            fmt_f64(self.c0),
            fmt_f64(self.max_ratio),
            self.samples.to_string(),
            self.violations.to_string(),
            self.validation_samples.to_string(),
        ]
    }
}

/// Fit envelope constants on `lattice` and count violations on its
/// refinement.
pub fn kernel_envelopes(
    lattice: &EnvelopeLattice,
    p: &Params,
    opts: &FitOptions,
) -> Result<Vec<EnvelopeFitRow>> {
    let fits = fit_envelopes(lattice, p, opts)?;
    let fine = lattice.refined();
    let viol = count_envelope_violations(&fine, p, &fits)?;
    let fine_counts = fit_envelopes(
        &fine,
        p,
        &FitOptions {
            c_cap: f64::INFINITY,
            ..opts.clone()
        },
    )?;
    Ok(fits
        .iter()
        .zip(&viol)
        .zip(&fine_counts)
        .map(|((f, v), fc)| EnvelopeFitRow {
            family: f.family.as_str().to_string(),
            c: f.c,
            c0: f.c0,
            uses_c0: f.family.uses_c0(),
            max_ratio: f.max_ratio,
            samples: f.samples,
            violations: v.1,
            validation_samples: fc.samples,
        })
        .collect())
}

// ------------------------------------------------------------- exp decay

/// Outcome of [`exp_decay`].
#[derive(Debug, Clone, Serialize)]
pub struct ExpDecayResult {
    pub reports: Vec<LyapunovReport>,
    pub c0: f64,
    /// `min B/C₀A` over samples with `A > 0`.
    pub min_b_over_c0a: f64,
    /// `max |dA/dt + 2B| / max 2B` with `dA/dt` by central differences of
    /// spacing `h` and `h/2`.
    pub residual: [f64; 2],
    /// `log₂` of the residual ratio.
    pub residual_order: f64,
    /// Fitted exponential rate of `‖φ∗u‖²_{H¹}`.
    pub rate: f64,
    pub rate_r2: f64,
}

/// Lyapunov pair of the filtered exact linear trajectory from `s0`,
/// sampled every `h` up to `horizon`.
pub fn exp_decay(
    s0: &LinearState,
    p: &Params,
    filt: &CutoffFilter,
    lambda: f64,
    h: f64,
    horizon: f64,
) -> Result<ExpDecayResult> {
    let k = lyapunov_constants(p, filt, lambda)?;
    let n = (horizon / h).round() as usize;
    if n < 4 {
        return Err(Error::MeshTooCoarse {
            samples: n,
            required: 4,
        });
    }
    let filtered = LinearState::new(apply_cutoff_vector(&s0.u, filt), s0.theta.clone(), s0.t)?;
    let pair = |t: f64| -> Result<LyapunovReport> {
        lyapunov_ab(&propagate_exact(&filtered, t, p)?, p, filt, lambda)
    };
    let reports: Vec<LyapunovReport> =
        (0..=n).map(|i| pair(i as f64 * h)).collect::<Result<_>>()?;

    let mut min_ratio = f64::INFINITY;
    for r in &reports {
        if r.a > 0.0 {
            min_ratio = min_ratio.min(r.b / (k.c0 * r.a));
        }
    }

    // residual of dA/dt + 2B = 0 at interior samples, two spacings
    let mut residual = [0.0; 2];
    for (slot, hh) in [h, 0.5 * h].into_iter().enumerate() {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for r in &reports[1..n] {
            let (ap, am) = (pair(r.t + hh)?.a, pair(r.t - hh)?.a);
            let da = (ap - am) / (2.0 * hh);
            worst = worst.max((da + 2.0 * r.b).abs());
            scale = scale.max(2.0 * r.b);
        }
        residual[slot] = if scale > 0.0 { worst / scale } else { 0.0 };
    }
    let residual_order = (residual[0] / residual[1]).log2();

    let times: Vec<f64> = reports.iter().map(|r| r.t).collect();
    let h1: Vec<f64> = reports.iter().map(|r| r.h1_sq).collect();
    let fit = fit_decay_rate(&times, &h1, default_window(horizon), FitMode::Exponential)?;
    Ok(ExpDecayResult {
        reports,
        c0: k.c0,
        min_b_over_c0a: min_ratio,
        residual,
        residual_order,
        rate: -fit.slope,
        rate_r2: fit.r2,
    })
}

// ------------------------------------------------------- nonlinear runs

/// Outcome of [`energy_balance`].
#[derive(Debug, Clone)]
pub struct EnergyBalanceResult {
    pub records: Vec<crate::diagnostics::DiagnosticsRecord>,
    pub energy: Vec<EnergyReport>,
    pub max_drift: f64,
    pub e0: f64,
}

/// Run `cfg` from `init` and evaluate the L² identity along the records.
pub fn energy_balance(cfg: &SimConfig, init: &LinearState) -> Result<EnergyBalanceResult> {
    let out = run(cfg, init)?;
    let energy = energy_functional(&out.records, &cfg.params, cfg.delta)?;
    let max_drift = energy.iter().map(|e| e.l2_drift()).fold(0.0, f64::max);
    Ok(EnergyBalanceResult {
        e0: energy.first().map_or(0.0, |e| e.e0),
        records: out.records,
        energy,
        max_drift,
    })
}

/// One member of a stability sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepMember {
    pub epsilon: f64,
    pub stream: u64,
    pub e0: f64,
    /// `max_t E(t)/E(0)`; infinite after a numerical failure.
    pub max_e_ratio: f64,
    /// `δ`-weighted integrand's time integral `∫‖∂₁u₂‖²` at the end.
    pub int_d1u2: f64,
    /// Increment of that integral over the second half of the run divided
    /// by the increment over the first half.
    pub d1u2_growth_ratio: f64,
    pub instability: bool,
}

/// Run one sweep member.
pub fn sweep_member(
    cfg: &SimConfig,
    initial: &InitialSpec,
    epsilon: f64,
    seed: u64,
    stream: u64,
) -> Result<SweepMember> {
    let grid = cfg.grid.build()?;
    let spec = InitialSpec {
        epsilon,
        ..*initial
    };
    let init = initial_state(&grid, &spec, seed, stream)?;
    let failed = |e0| SweepMember {
        epsilon,
        stream,
        e0,
        max_e_ratio: f64::INFINITY,
        int_d1u2: f64::INFINITY,
        d1u2_growth_ratio: f64::INFINITY,
        instability: true,
    };
    let out = match run(cfg, &init) {
        Ok(out) => out,
        Err(e) if e.is_numerical() => return Ok(failed(f64::NAN)),
        Err(e) => return Err(e),
    };
    let energy = energy_functional(&out.records, &cfg.params, cfg.delta)?;
    let e0 = energy[0].e0;
    let max_e_ratio = energy.iter().map(|e| e.e / e0).fold(0.0, f64::max);
    let last = energy.last().expect("records");
    let mid = energy.iter().find(|e| e.t >= 0.5 * last.t).unwrap_or(last);
    let first = mid.int_d1u2;
    let second = last.int_d1u2 - mid.int_d1u2;
    Ok(SweepMember {
        epsilon,
        stream,
        e0,
        max_e_ratio,
        int_d1u2: last.int_d1u2,
        d1u2_growth_ratio: if first > 0.0 { second / first } else { 0.0 },
        instability: out.instability_at.is_some(),
    })
}

/// Sweep verdict for a set of members at one `ε`.
pub fn verdict(members: &[SweepMember], bound: f64) -> &'static str {
    if members
        .iter()
        .any(|m| m.instability || !m.max_e_ratio.is_finite())
    {
        "unstable"
    } else if members.iter().all(|m| m.max_e_ratio <= bound) {
        "bounded"
    } else {
        "exceeds-bound"
    }
}

/// Self-convergence order of the configured scheme from three step sizes
/// `dt, dt/2, dt/4`: `log₂(‖q_dt − q_{dt/2}‖ / ‖q_{dt/2} − q_{dt/4}‖)`.
pub fn scheme_order(cfg: &SimConfig, init: &LinearState) -> Result<f64> {
    let mut finals = Vec::new();
    for k in 0..3 {
        let mut c = cfg.clone();
        c.dt = cfg.dt / f64::from(1u32 << k);
        c.record_every = usize::MAX;
        finals.push(run(&c, init)?.final_state);
    }
    let dist = |a: &LinearState, b: &LinearState| -> Result<f64> {
        Ok((a.u.u1.axpy(-1.0, &b.u.u1)?.l2_sq()
            + a.u.u2.axpy(-1.0, &b.u.u2)?.l2_sq()
            + a.theta.axpy(-1.0, &b.theta)?.l2_sq())
        .sqrt())
    };
    let e1 = dist(&finals[0], &finals[1])?;
    let e2 = dist(&finals[1], &finals[2])?;
    Ok((e1 / e2).log2())
}

// ---------------------------------------------------------------- driver

/// Tables, checks and metrics produced by one experiment.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Schema, Vec<Vec<String>>)>,
    pub checks: Vec<Check>,
    pub e0: Option<f64>,
    pub metrics: serde_json::Map<String, serde_json::Value>,
}

impl Outcome {
    fn metric(&mut self, key: &str, v: impl Serialize) {
        self.metrics.insert(
            key.into(),
            serde_json::to_value(v).expect("metric serializes"),
        );
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One-line summary for the terminal.
    pub fn headline(&self, name: ExperimentName) -> String {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        if failed.is_empty() {
            format!("{}: {} checks passed", name.as_str(), self.checks.len())
        } else {
            format!(
                "{}: {} of {} checks failed ({})",
                name.as_str(),
                failed.len(),
                self.checks.len(),
                failed.join(", ")
            )
        }
    }
}

fn linear_defaults() -> InitialSpec {
    InitialSpec {
        family: InitialFamily::Random,
        epsilon: 1.0,
        band: 8,
    }
}

/// Compute an experiment without touching the file system.
pub fn compute(name: ExperimentName, c: &Config, seed: u64) -> Result<Outcome> {
    let mut o = Outcome::default();
    match name {
        ExperimentName::LinearVerify => {
            let s = &c.linear_verify;
            let grid = GridSpec {
                n1: c.grid.n1.unwrap_or(32),
                n2: c.grid.n2.unwrap_or(32),
                l1: c.grid.l1.unwrap_or(1.0),
                l2: c.grid.l2.unwrap_or(1.0),
            }
            .build()?;
            let grid_vals = vec![0.1, 1.0, 10.0];
            let nus = s.nu.clone().unwrap_or_else(|| grid_vals.clone());
            let etas = s.eta.clone().unwrap_or_else(|| grid_vals.clone());
            let times = s.times.clone().unwrap_or_else(|| grid_vals.clone());
            let tol = s.tolerance.unwrap_or(1e-8);
            let band = c.initial(&linear_defaults())?.band;
            let rows = linear_verify(&grid, &nus, &etas, &times, band, seed)?;
            let worst = rows.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
            o.checks.push(Check::at_most("max_rel_error", worst, tol));
            o.metric("max_rel_error", worst);
            let s0 = initial_state(
                &grid,
                &InitialSpec {
                    band,
                    ..linear_defaults()
                },
                seed,
                0,
            )?;
            o.e0 = Some(s0.u.h2_sq() + s0.theta.h2_sq());
            o.tables.push((
                "linear-verify.csv".into(),
                LINEAR_VERIFY_SCHEMA,
                rows.iter().map(|r| r.row()).collect(),
            ));
        }
        ExperimentName::KernelBounds => {
            let s = &c.kernel_bounds;
            let p = c.params()?;
            let roots = root_checks(s.samples.unwrap_or(10_000), seed, 0)?;
            let tol = s.vieta_tolerance.unwrap_or(1e-12);
            o.checks
                .push(Check::at_most("vieta_sum", roots.vieta_sum, tol));
            o.checks
                .push(Check::at_most("vieta_product", roots.vieta_product, tol));
            o.checks.push(Check::at_most(
                "root_bound_failures",
                roots.bound_failures as f64,
                0.0,
            ));
            o.metric("roots", roots);
            let lattice = EnvelopeLattice::geometric(
                (s.xi_min.unwrap_or(1e-2), s.xi_max.unwrap_or(1e2)),
                s.n_xi.unwrap_or(50),
                (s.t_min.unwrap_or(1e-2), s.t_max.unwrap_or(1e2)),
                s.n_t.unwrap_or(20),
            );
            let c_max = s.c_max.unwrap_or(1e3);
            let c0_min = s.c0_min.unwrap_or(1e-3);
            let opts = FitOptions {
                c_cap: c_max,
                ..FitOptions::default()
            };
            let rows = kernel_envelopes(&lattice, &p, &opts)?;
            for r in &rows {
                o.checks
                    .push(Check::at_most(format!("{}:C", r.family), r.c, c_max));
                if r.uses_c0 {
                    o.checks
                        .push(Check::at_least(format!("{}:c0", r.family), r.c0, c0_min));
                }
                o.checks.push(Check::at_most(
                    format!("{}:violations", r.family),
                    r.violations as f64,
                    0.0,
                ));
            }
            o.metric("envelopes", &rows);
            o.tables.push((
                "kernel-envelopes.csv".into(),
                ENVELOPE_FIT_SCHEMA,
                rows.iter().map(|r| r.row()).collect(),
            ));
        }
        ExperimentName::DecayRates => {
            let s = &c.decay_rates;
            let p = c.params()?;
            let times = geomspace(
                s.t_min.unwrap_or(10.0),
                s.t_max.unwrap_or(1e3),
                s.samples.unwrap_or(16),
            );
            let cases = s.cases.clone().unwrap_or_else(default_decay_cases);
            let slope_max = s.slope_max.unwrap_or(-0.85);
            let rel_tol = s.rel_tol.unwrap_or(DEFAULT_REL_TOL);
            let reports = decay_rates(&cases, &times, &p, rel_tol)?;
            let mut rows = Vec::new();
            for r in &reports {
                let id = &r.case.id;
                o.checks.push(Check::at_most(
                    format!("{id}:slope"),
                    r.slope.slope,
                    slope_max,
                ));
                o.checks.push(Check::at_most(
                    format!("{id}:envelope"),
                    r.validation_ratio,
                    1.0,
                ));
                o.checks.push(Check::at_least(
                    format!("{id}:converged"),
                    r.all_converged() as u8 as f64,
                    1.0,
                ));
                rows.extend(r.rows());
            }
            o.metric("reports", &reports);
            o.tables
                .push(("decay-rates.csv".into(), DECAY_RATES_SCHEMA, rows));
        }
        ExperimentName::ExpDecay => {
            let s = &c.exp_decay;
            let defaults = SimDefaults {
                n: 128,
                dt: 1e-3,
                t_final: 10.0,
                record_every: 1,
                nonlinear: false,
                initial: linear_defaults(),
            };
            let cfg = c.sim_config(&defaults, seed)?;
            let grid = cfg.grid.build()?;
            let init = initial_state(&grid, &c.initial(&defaults.initial)?, seed, 0)?;
            let filt = CutoffFilter::new(cfg.a1, cfg.a2)?;
            let h = s.sample_dt.unwrap_or(0.05);
            let horizon = s.horizon.unwrap_or(cfg.t_final);
            let frac = s.rate_fraction.unwrap_or(0.8);
            let r = exp_decay(&init, &cfg.params, &filt, cfg.lyap_lambda, h, horizon)?;
            o.e0 = Some(init.u.h2_sq() + init.theta.h2_sq());
            o.checks
                .push(Check::at_least("residual_order", r.residual_order, 1.8));
            o.checks
                .push(Check::at_least("min_B_over_C0A", r.min_b_over_c0a, 1.0));
            o.checks.push(Check::at_least("rate", r.rate, frac * r.c0));
            o.metric("c0", r.c0);
            o.metric("residual", r.residual);
            o.metric("residual_order", r.residual_order);
            o.metric("rate", r.rate);
            o.metric("rate_r2", r.rate_r2);
            o.tables.push((
                "lyapunov.csv".into(),
                LYAPUNOV_SCHEMA,
                r.reports.iter().map(|x| x.row()).collect(),
            ));
        }
        ExperimentName::StabilitySweep => {
            let s = &c.stability_sweep;
            let defaults = SimDefaults {
                n: 64,
                dt: 5e-3,
                t_final: 50.0,
                record_every: 10,
                nonlinear: true,
                initial: InitialSpec {
                    family: InitialFamily::Random,
                    epsilon: 1e-2,
                    band: 4,
                },
            };
            let cfg = c.sim_config(&defaults, seed)?;
            let initial = c.initial(&defaults.initial)?;
            let eps = s.epsilons.clone().unwrap_or_else(|| vec![1e-3, 1e-2]);
            let seeds = s.seeds.unwrap_or(5);
            let bound = s.bound.unwrap_or(4.0);
            let mut rows = Vec::new();
            let mut all = Vec::new();
            for &e in &eps {
                let members: Vec<SweepMember> = (0..seeds)
                    .map(|k| sweep_member(&cfg, &initial, e, seed, k))
                    .collect::<Result<_>>()?;
                let worst = members.iter().map(|m| m.max_e_ratio).fold(0.0, f64::max);
                let int_max = members.iter().map(|m| m.int_d1u2).fold(0.0, f64::max);
                let growth = members
                    .iter()
                    .map(|m| m.d1u2_growth_ratio)
                    .fold(0.0, f64::max);
                let v = verdict(&members, bound);
                o.checks
                    .push(Check::at_most(format!("eps={e}:max_e_ratio"), worst, bound));
                o.checks
                    .push(Check::at_most(format!("eps={e}:d1u2_growth"), growth, 1.0));
                rows.push(vec![
                    fmt_f64(e),
                    fmt_f64(cfg.params.nu),
                    fmt_f64(cfg.params.eta),
                    fmt_f64(worst),
                    v.to_string(),
                    seeds.to_string(),
                    fmt_f64(int_max),
                    fmt_f64(growth),
                ]);
                all.extend(members);
            }
            o.e0 = all.first().map(|m| m.e0);
            o.metric("members", &all);
            o.tables
                .push(("stability-sweep.csv".into(), SWEEP_SCHEMA, rows));
        }
        ExperimentName::EnergyBalance => {
            let defaults = SimDefaults {
                n: 128,
                dt: 1e-3,
                t_final: 10.0,
                record_every: 1,
                nonlinear: true,
                initial: InitialSpec {
                    family: InitialFamily::TaylorGreen,
                    epsilon: 1e-2,
                    band: 4,
                },
            };
            let cfg = c.sim_config(&defaults, seed)?;
            let grid = cfg.grid.build()?;
            let init = initial_state(&grid, &c.initial(&defaults.initial)?, seed, 0)?;
            let tol = c.energy_balance.drift_tolerance.unwrap_or(1e-6);
            let r = energy_balance(&cfg, &init)?;
            o.e0 = Some(r.e0);
            o.checks.push(Check::at_most("l2_drift", r.max_drift, tol));
            o.metric("max_drift", r.max_drift);
            let e_max = r.energy.iter().map(|e| e.e).fold(0.0, f64::max);
            o.metric("max_e_ratio", e_max / r.e0);
            o.tables.push((
                "diagnostics.csv".into(),
                DIAGNOSTICS_SCHEMA,
                r.records.iter().map(|x| x.row()).collect(),
            ));
            o.tables.push((
                "energy.csv".into(),
                ENERGY_SCHEMA,
                r.energy.iter().map(|x| x.row()).collect(),
            ));
        }
    }
    Ok(o)
}

/// `decay_report` for every case.
pub fn decay_rates(
    cases: &[DecayCase],
    times: &[f64],
    p: &Params,
    rel_tol: f64,
) -> Result<Vec<DecayReport>> {
    cases
        .iter()
        .map(|c| decay_report(c, times, p, rel_tol))
        .collect()
}

/// Compute an experiment and write its tables and `summary.json` into
/// `spec.out_dir`, named `<experiment>.summary.json`.
pub fn execute(spec: &ExperimentSpec) -> Result<(Outcome, RunSummary)> {
    let start = Instant::now();
    std::fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    let outcome = compute(spec.name, &spec.config, spec.seed)?;
    let mut outputs = Vec::new();
    for (file, schema, rows) in &outcome.tables {
        let path = spec.out_dir.join(file);
        write_csv_file(&path, schema, rows)?;
        outputs.push(file.clone());
    }
    let summary_name = format!("{}.summary.json", spec.name.as_str());
    outputs.push(summary_name.clone());
    let summary = RunSummary {
        experiment: spec.name.as_str().into(),
        build_id: build_id(),
        config_hash: spec.config.hash(spec.seed),
        seed: spec.seed,
        e0: outcome.e0,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        checks: outcome.checks.clone(),
        passed: outcome.passed(),
        outputs,
        metrics: outcome.metrics.clone(),
    };
    summary.write(&spec.out_dir.join(summary_name))?;
    Ok((outcome, summary))
}

/// Where an experiment's reports land by default.
pub fn default_out_dir(name: ExperimentName) -> PathBuf {
    Path::new("out").join(name.as_str())
}
