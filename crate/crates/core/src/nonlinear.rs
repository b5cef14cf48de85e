//! Pseudo-spectral solver for the full perturbation system on the torus.
//!
//! The anisotropic dissipation is diagonal in Fourier space and is handled
//! exactly (integrating factor) or implicitly (Crank–Nicolson). Advection,
//! buoyancy `θe₂` and the stratification term `u₂` are explicit. Pressure
//! never appears: the velocity tendency is Leray-projected.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsRecord, EnergyTracker};
use crate::error::{Error, Result};
use crate::kernels::Params;
use crate::linear::LinearState;
use crate::spectral::{Axis, FrequencyGrid, SpectralField, VectorField};

/// State of the nonlinear solver; same layout as the linear state, but kept
/// dealiased and divergence-free by the stepper.
pub type NonlinearState = LinearState;

/// Advective CFL limit on `dt · max|u| · max|ξ|`.
pub const CFL_LIMIT: f64 = 0.5;

/// Growth factor of `E(t)/E(0)` that stops a run as unstable.
pub const BLOWUP_FACTOR: f64 = 1e3;

/// Time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Lawson integrating-factor RK4: dissipation exact, RK4 on the rest.
    #[default]
    IfRk4,
    /// Crank–Nicolson on the dissipation, Heun on the rest (second order).
    ImexCn,
}

/// Torus size and resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    #[serde(default = "one")]
    pub l1: f64,
    #[serde(default = "one")]
    pub l2: f64,
}

fn one() -> f64 {
    1.0
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        GridSpec {
            n1: n,
            n2: n,
            l1: 1.0,
            l2: 1.0,
        }
    }

    pub fn build(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.n1, self.n2, self.l1, self.l2)
    }
}

/// Everything a nonlinear run needs besides the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: Params,
    pub grid: GridSpec,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    /// Cutoff thresholds of the frequency filter.
    pub a1: f64,
    pub a2: f64,
    /// Weight `δ` of the `∂₁u₂` integral in the energy functional.
    pub delta: f64,
    /// Combination weight `λ` of the Lyapunov pair.
    pub lyap_lambda: f64,
    /// Steps between diagnostics records.
    pub record_every: usize,
    pub seed: u64,
    /// Drop the advection terms (linear limit).
    pub nonlinear: bool,
}

impl SimConfig {
    pub fn new(params: Params, grid: GridSpec, dt: f64, t_final: f64) -> Self {
        SimConfig {
            params,
            grid,
            dt,
            t_final,
            scheme: Scheme::IfRk4,
            a1: 1.0,
            a2: 1.0,
            delta: 0.1 * params.nu.min(params.eta).min(1.0),
            lyap_lambda: 0.5,
            record_every: 1,
            seed: 0,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Params::new(self.params.nu, self.params.eta)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(
                "dt",
                format!("{} must be positive", self.dt),
            ));
        }
        if !(self.t_final >= 0.0) || (self.t_final > 0.0 && self.t_final < self.dt) {
            return Err(Error::invalid("t_final", "need T = 0 or T ≥ dt"));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(self.dt) {
            return Err(Error::invalid(
                "t_final",
                "must be an integer multiple of dt",
            ));
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid("delta", "must be positive"));
        }
        if !(self.lyap_lambda > 0.0) {
            return Err(Error::invalid("lyap_lambda", "must be positive"));
        }
        if !(self.a1 > 0.0 && self.a2 > 0.0) {
            return Err(Error::invalid(
                "a1/a2",
                "cutoff thresholds must be positive",
            ));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be at least 1"));
        }
        self.grid.build()?;
        Ok(())
    }

    /// Number of steps to reach `t_final`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

type Triple = [Vec<Complex64>; 3];

fn to_triple(s: &NonlinearState) -> Triple {
    [
        s.u.u1.coeffs().to_vec(),
        s.u.u2.coeffs().to_vec(),
        s.theta.coeffs().to_vec(),
    ]
}

fn from_triple(grid: &FrequencyGrid, q: Triple, t: f64) -> NonlinearState {
    let [a, b, c] = q;
    let f = |v| SpectralField::from_coeffs(grid, v).expect("grid length");
    LinearState {
        u: VectorField { u1: f(a), u2: f(b) },
        theta: f(c),
        t,
    }
}

/// Physical-space quantities gathered while forming a tendency.
struct Tendency {
    q: Triple,
    max_speed: f64,
}

fn tendency_impl(grid: &FrequencyGrid, q: &Triple, nonlinear: bool) -> Result<Tendency> {
    let n = grid.len();
    let xi = grid.xi_table();
    let keep = grid.resolved_table();
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    // Dealiased products: (ω u₂, −ω u₁) stands for −u·∇u modulo gradients,
    // which the projection removes; the third entry is −u·∇θ.
    let (mut n1, mut n2, mut n3) = (vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut max_speed = 0.0f64;
    if nonlinear {
        let (mut w, mut t1, mut t2) = (vec![zero; n], vec![zero; n], vec![zero; n]);
        for k in 0..n {
            if keep[k] {
                let (a, b) = xi[k];
                w[k] = i * (q[1][k] * a - q[0][k] * b);
                t1[k] = i * (q[2][k] * a);
                t2[k] = i * (q[2][k] * b);
            }
        }
        let (pu1, pu2) = grid.inverse_pair(&q[0], &q[1]);
        let (pw, pt1) = grid.inverse_pair(&w, &t1);
        let (pt2, _) = grid.inverse_pair(&t2, &vec![zero; n]);
        let mut l1 = Vec::with_capacity(n);
        let mut l2 = Vec::with_capacity(n);
        let mut adv = Vec::with_capacity(n);
        for k in 0..n {
            l1.push(pw[k] * pu2[k]);
            l2.push(-pw[k] * pu1[k]);
            adv.push(-(pu1[k] * pt1[k] + pu2[k] * pt2[k]));
            max_speed = max_speed.max(pu1[k] * pu1[k] + pu2[k] * pu2[k]);
        }
        max_speed = max_speed.sqrt();
        (n1, n2) = grid.forward_pair(&l1, &l2);
        n3 = grid.forward_pair(&adv, &vec![0.0; n]).0;
        for k in 0..n {
            if !keep[k] {
                n1[k] = zero;
                n2[k] = zero;
                n3[k] = zero;
            }
        }
    }
    // buoyancy θe₂, stratification −u₂, then projection
    for k in 0..n {
        let (a, b) = xi[k];
        let r2 = a * a + b * b;
        let v1 = n1[k];
        let v2 = n2[k] + q[2][k];
        if r2 == 0.0 {
            n1[k] = zero;
            n2[k] = zero;
        } else {
            let dot = (v1 * a + v2 * b) / r2;
            n1[k] = v1 - dot * a;
            n2[k] = v2 - dot * b;
        }
        n3[k] -= q[1][k];
    }
    let out = [n1, n2, n3];
    if out
        .iter()
        .flatten()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NonFinite {
            what: "tendency",
            t: f64::NAN,
        });
    }
    Ok(Tendency { q: out, max_speed })
}

/// Explicit part of the dynamics, `(P(−u·∇u + θe₂), −u·∇θ − u₂)`, with
/// products formed in physical space and dealiased.
pub fn nonlinear_tendency(s: &NonlinearState) -> Result<(VectorField, SpectralField)> {
    nonlinear_tendency_with(s, true)
}

/// [`nonlinear_tendency`] with the advection terms optionally dropped.
pub fn nonlinear_tendency_with(
    s: &NonlinearState,
    nonlinear: bool,
) -> Result<(VectorField, SpectralField)> {
    let grid = s.grid().clone();
    let t = tendency_impl(&grid, &to_triple(s), nonlinear).map_err(|e| stamp(e, s.t))?;
    let st = from_triple(&grid, t.q, s.t);
    Ok((st.u, st.theta))
}

fn stamp(e: Error, t: f64) -> Error {
    match e {
        Error::NonFinite { what, .. } => Error::NonFinite { what, t },
        other => other,
    }
}

/// Precomputed per-mode factors for one step size.
pub struct Stepper {
    grid: FrequencyGrid,
    scheme: Scheme,
    dt: f64,
    nonlinear: bool,
    max_xi: f64,
    /// IF-RK4: `e^{Lh}` and `e^{Lh/2}`; IMEX: `(1+hL/2)/(1−hL/2)` and `h/(1−hL/2)`.
    fac_a: [Vec<f64>; 2],
    fac_b: [Vec<f64>; 2],
}

impl Stepper {
    pub fn new(grid: &FrequencyGrid, p: &Params, dt: f64, scheme: Scheme, nonlinear: bool) -> Self {
        let n = grid.len();
        let mut la = [vec![0.0; n], vec![0.0; n]];
        let mut lb = [vec![0.0; n], vec![0.0; n]];
        for idx in 0..n {
            let (a, b) = grid.xi(idx);
            // index 0: velocity (−νξ₂²), index 1: temperature (−ηξ₁²)
            for (k, l) in [-p.nu * b * b, -p.eta * a * a].into_iter().enumerate() {
                match scheme {
                    Scheme::IfRk4 => {
                        la[k][idx] = (l * dt).exp();
                        lb[k][idx] = (l * dt / 2.0).exp();
                    }
                    Scheme::ImexCn => {
                        let den = 1.0 - dt * l / 2.0;
                        la[k][idx] = (1.0 + dt * l / 2.0) / den;
                        lb[k][idx] = dt / den;
                    }
                }
            }
        }
        Stepper {
            grid: grid.clone(),
            scheme,
            dt,
            nonlinear,
            max_xi: grid.max_resolved_wavenumber(),
            fac_a: la,
            fac_b: lb,
        }
    }

    pub fn from_config(grid: &FrequencyGrid, cfg: &SimConfig) -> Self {
        Stepper::new(grid, &cfg.params, cfg.dt, cfg.scheme, cfg.nonlinear)
    }

    fn eval(&self, q: &Triple, t: f64) -> Result<Tendency> {
        tendency_impl(&self.grid, q, self.nonlinear).map_err(|e| stamp(e, t))
    }

    fn check_cfl(&self, max_speed: f64, t: f64) -> Result<()> {
        let number = self.dt * max_speed * self.max_xi;
        if number > CFL_LIMIT {
            return Err(Error::Cfl {
                t,
                number,
                limit: CFL_LIMIT,
                suggested_dt: 0.9 * CFL_LIMIT / (max_speed * self.max_xi),
            });
        }
        Ok(())
    }

    /// Advance one step.
    pub fn step(&self, s: &NonlinearState) -> Result<NonlinearState> {
        let q = to_triple(s);
        let k1 = self.eval(&q, s.t)?;
        self.check_cfl(k1.max_speed, s.t)?;
        let n = self.grid.len();
        let h = self.dt;
        let fac = |arr: &[Vec<f64>; 2], comp: usize, i: usize| arr[if comp < 2 { 0 } else { 1 }][i];
        let combine = |f: &dyn Fn(usize, usize) -> Complex64| -> Triple {
            [0, 1, 2].map(|c| (0..n).map(|i| f(c, i)).collect())
        };
        let out = match self.scheme {
            Scheme::IfRk4 => {
                let (e, e2) = (&self.fac_a, &self.fac_b);
                let k1 = k1.q;
                let a = combine(&|c, i| (q[c][i] + k1[c][i] * (h / 2.0)) * fac(e2, c, i));
                let k2 = self.eval(&a, s.t + h / 2.0)?.q;
                let b = combine(&|c, i| q[c][i] * fac(e2, c, i) + k2[c][i] * (h / 2.0));
                let k3 = self.eval(&b, s.t + h / 2.0)?.q;
                let cc = combine(&|c, i| q[c][i] * fac(e, c, i) + k3[c][i] * (h * fac(e2, c, i)));
                let k4 = self.eval(&cc, s.t + h)?.q;
                combine(&|c, i| {
                    let (ef, eh) = (fac(e, c, i), fac(e2, c, i));
                    q[c][i] * ef
                        + (k1[c][i] * ef + (k2[c][i] + k3[c][i]) * (2.0 * eh) + k4[c][i])
                            * (h / 6.0)
                })
            }
            Scheme::ImexCn => {
                let (amp, gain) = (&self.fac_a, &self.fac_b);
                let k1 = k1.q;
                let pred = combine(&|c, i| q[c][i] * fac(amp, c, i) + k1[c][i] * fac(gain, c, i));
                let k2 = self.eval(&pred, s.t + h)?.q;
                combine(&|c, i| {
                    q[c][i] * fac(amp, c, i) + (k1[c][i] + k2[c][i]) * (0.5 * fac(gain, c, i))
                })
            }
        };
        if out
            .iter()
            .flatten()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                what: "state",
                t: s.t + h,
            });
        }
        Ok(from_triple(&self.grid, out, s.t + h))
    }
}

/// One step of the configured scheme.
pub fn step(s: &NonlinearState, cfg: &SimConfig) -> Result<NonlinearState> {
    Stepper::from_config(s.grid(), cfg).step(s)
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: NonlinearState,
    /// Time at which `E(t) > 10³·E(0)` was first observed, if ever.
    pub instability_at: Option<f64>,
    pub steps: usize,
}

/// Advance `init` to `cfg.t_final`, recording diagnostics every
/// `cfg.record_every` steps (and always at the initial and final time).
pub fn run(cfg: &SimConfig, init: &NonlinearState) -> Result<RunOutput> {
    run_with(cfg, init, |_| {})
}

/// [`run`] with an observer called on every recorded state.
pub fn run_with(
    cfg: &SimConfig,
    init: &NonlinearState,
    mut observe: impl FnMut(&NonlinearState),
) -> Result<RunOutput> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    if init.grid() != &grid {
        return Err(Error::GridMismatch("initial state and configuration"));
    }
    let stepper = Stepper::from_config(&grid, cfg);
    let mut tracker = EnergyTracker::new(cfg.params, cfg.delta);
    let mut state = init.clone();
    let first = DiagnosticsRecord::from_state(&state);
    tracker.push(&first)?;
    observe(&state);
    let mut records = vec![first];
    let n = cfg.steps();
    let mut instability_at = None;
    let mut steps = 0;
    for k in 1..=n {
        state = stepper.step(&state)?;
        steps = k;
        if k % cfg.record_every == 0 || k == n {
            let rec = DiagnosticsRecord::from_state(&state);
            let report = tracker.push(&rec)?;
            observe(&state);
            records.push(rec);
            if report.e > BLOWUP_FACTOR * report.e0 {
                instability_at = Some(state.t);
                break;
            }
        }
    }
    Ok(RunOutput {
        records,
        final_state: state,
        instability_at,
        steps,
    })
}

/// Vorticity norms and the residual of the vorticity equation
/// `∂tω + u·∇ω = ν∂₂₂ω + ∂₁θ` evaluated on the solver's own tendency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VorticityRecord {
    pub t: f64,
    pub omega_l2: f64,
    pub grad_omega_l2: f64,
    /// `‖curl(∂t u) − (−u·∇ω + ν∂₂₂ω + ∂₁θ)‖ / ‖curl(∂t u)‖` (0 when both vanish).
    pub residual: f64,
}

pub fn vorticity_diagnostics(s: &NonlinearState, p: &Params) -> Result<VorticityRecord> {
    let omega = s.u.curl();
    let grad = omega.derivative(Axis::X1, 1).l2_sq() + omega.derivative(Axis::X2, 1).l2_sq();
    let (du, _) = nonlinear_tendency(s)?;
    let diss = VectorField {
        u1: s.u.u1.derivative(Axis::X2, 2).scale(p.nu),
        u2: s.u.u2.derivative(Axis::X2, 2).scale(p.nu),
    };
    let full = VectorField {
        u1: du.u1.axpy(1.0, &diss.u1)?,
        u2: du.u2.axpy(1.0, &diss.u2)?,
    };
    let dt_omega = full.curl();
    // u·∇ω formed independently of the Lamb-vector route
    let adv =
        s.u.u1
            .product(&omega.derivative(Axis::X1, 1))?
            .axpy(1.0, &s.u.u2.product(&omega.derivative(Axis::X2, 1))?)?;
    let rhs = adv
        .scale(-1.0)
        .axpy(p.nu, &omega.derivative(Axis::X2, 2))?
        .axpy(1.0, &s.theta.derivative(Axis::X1, 1))?;
    let diff = dt_omega.axpy(-1.0, &rhs)?.l2_norm();
    let scale = dt_omega.l2_norm();
    Ok(VorticityRecord {
        t: s.t,
        omega_l2: omega.l2_norm(),
        grad_omega_l2: grad.sqrt(),
        residual: if scale == 0.0 { diff } else { diff / scale },
    })
}
