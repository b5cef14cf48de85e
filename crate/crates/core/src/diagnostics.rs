//! Functionals quantifying decay and stability: the frequency cutoff, the
//! Lyapunov pair `(A, B)`, per-record norms, the energy functional `E(t)`,
//! the anisotropic triple-product ratio, and decay-rate fits.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Params;
use crate::linear::{mode_matrix, LinearState};
use crate::report::fmt_f64;
use crate::spectral::{Axis, FrequencyGrid, SpectralField, VectorField};

/// Frequency cutoff: keeps a mode iff `|ξ₁| > a₁` and `|ξ₂| > a₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffFilter {
    pub a1: f64,
    pub a2: f64,
}

impl CutoffFilter {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0) {
            return Err(Error::invalid(
                "a1/a2",
                "cutoff thresholds must be positive",
            ));
        }
        Ok(CutoffFilter { a1, a2 })
    }

    #[inline]
    pub fn keeps(&self, xi1: f64, xi2: f64) -> bool {
        xi1.abs() > self.a1 && xi2.abs() > self.a2
    }
}

pub fn apply_cutoff(f: &SpectralField, filt: &CutoffFilter) -> SpectralField {
    f.map_real(|a, b| if filt.keeps(a, b) { 1.0 } else { 0.0 })
}

pub fn apply_cutoff_vector(v: &VectorField, filt: &CutoffFilter) -> VectorField {
    VectorField {
        u1: apply_cutoff(&v.u1, filt),
        u2: apply_cutoff(&v.u2, filt),
    }
}

/// Constants attached to a choice of `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovConstants {
    pub lambda: f64,
    /// Decay constant in `B ≥ C₀ A`.
    pub c0: f64,
    /// Largest admissible `λ`.
    pub lambda_max: f64,
    /// `c` in `A ≥ c (‖∂ₜw‖² + ‖w‖² + ‖∇w‖²)`.
    pub lower: f64,
}

/// `C₀ = ¼ min{νa₂² + ηa₁², λ, ηa₁², νa₂², √(νa₂² + ηa₁²)·√(ηνa₁²a₂²)/√λ}`,
/// after checking `λ ≤ ½(νa₂² + ηa₁²)` and `λ ≤ ½√(νη) a₁a₂`.
pub fn lyapunov_constants(
    p: &Params,
    filt: &CutoffFilter,
    lambda: f64,
) -> Result<LyapunovConstants> {
    let (a1s, a2s) = (filt.a1 * filt.a1, filt.a2 * filt.a2);
    let s = p.nu * a2s + p.eta * a1s;
    let lambda_max = (0.5 * s).min(0.5 * (p.nu * p.eta).sqrt() * filt.a1 * filt.a2);
    if !(lambda > 0.0) || lambda > lambda_max * (1.0 + 1e-14) {
        return Err(Error::invalid(
            "lambda",
            format!("{lambda} outside the admissible range (0, {lambda_max}]"),
        ));
    }
    let cross = s.sqrt() * (p.eta * p.nu * a1s * a2s).sqrt() / lambda.sqrt();
    let c0 = 0.25
        * [s, lambda, p.eta * a1s, p.nu * a2s, cross]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
    let lower = [
        0.5,
        0.5 * p.eta * p.nu * a1s * a2s,
        lambda * p.nu,
        lambda * p.eta,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    Ok(LyapunovConstants {
        lambda,
        c0,
        lambda_max,
        lower,
    })
}

/// Values of the Lyapunov pair at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c0: f64,
    pub lambda: f64,
    pub ratio: f64,
    /// `‖φ∗u‖²_{H¹}`.
    pub h1_sq: f64,
    /// `‖∂ₜ(φ∗u)‖²`.
    pub dt_sq: f64,
    /// True when `∂ₜ` came from the governing equations, false for
    /// central differences.
    pub exact_dt: bool,
}

pub const LYAPUNOV_COLUMNS: [&str; 9] = [
    "t", "A", "B", "C0", "lambda", "ratio", "h1_sq", "dt_sq", "exact_dt",
];

impl LyapunovReport {
    pub fn row(&self) -> Vec<String> {
        vec![
            fmt_f64(self.t),
            fmt_f64(self.a),
            fmt_f64(self.b),
            fmt_f64(self.c0),
            fmt_f64(self.lambda),
            fmt_f64(self.ratio),
            fmt_f64(self.h1_sq),
            fmt_f64(self.dt_sq),
            self.exact_dt.to_string(),
        ]
    }
}

/// `A` and `B` from `w = φ∗u` and `w_t = ∂ₜ(φ∗u)` given mode by mode.
fn ab_from_modes(
    grid: &FrequencyGrid,
    filt: &CutoffFilter,
    p: &Params,
    lambda: f64,
    mut modes: impl FnMut(usize) -> ([Complex64; 2], [Complex64; 2]),
) -> (f64, f64, f64, f64) {
    let (nu, eta) = (p.nu, p.eta);
    let (mut a, mut b, mut h1, mut dts) = (0.0, 0.0, 0.0, 0.0);
    for idx in 0..grid.len() {
        let (x1, x2) = grid.xi(idx);
        if !filt.keeps(x1, x2) {
            continue;
        }
        let (w, wt) = modes(idx);
        let (s1, s2, r2) = (x1 * x1, x2 * x2, x1 * x1 + x2 * x2);
        for k in 0..2 {
            let ww = w[k].norm_sqr();
            let tt = wt[k].norm_sqr();
            let cross = (wt[k] * w[k].conj()).re;
            a += tt
                + (s1 / r2) * ww
                + eta * nu * s1 * s2 * ww
                + lambda * nu * s2 * ww
                + lambda * eta * s1 * ww
                + 2.0 * lambda * cross;
            b += nu * s2 * tt + eta * s1 * tt + lambda * eta * nu * s1 * s2 * ww - lambda * tt
                + lambda * (s1 / r2) * ww;
            h1 += (1.0 + r2) * ww;
            dts += tt;
        }
    }
    let w = grid.cell_weight();
    (a * w, b * w, h1 * w, dts * w)
}

/// Lyapunov pair of the filtered velocity, with `∂ₜ` taken exactly from
/// the linear equations.
pub fn lyapunov_ab(
    s: &LinearState,
    p: &Params,
    filt: &CutoffFilter,
    lambda: f64,
) -> Result<LyapunovReport> {
    let k = lyapunov_constants(p, filt, lambda)?;
    let grid = s.grid().clone();
    let (a, b, h1, dts) = ab_from_modes(&grid, filt, p, lambda, |idx| {
        let (x1, x2) = grid.xi(idx);
        let m = mode_matrix(x1, x2, p);
        let y = s.mode(idx);
        let d = |r: usize| m[(r, 0)] * y[0] + m[(r, 1)] * y[1] + m[(r, 2)] * y[2];
        ([y[0], y[1]], [d(0), d(1)])
    });
    Ok(report(s.t, a, b, h1, dts, &k, true))
}

/// Central-difference fallback for `∂ₜ`, evaluated at the middle state.
pub fn lyapunov_ab_fd(
    prev: &LinearState,
    cur: &LinearState,
    next: &LinearState,
    p: &Params,
    filt: &CutoffFilter,
    lambda: f64,
) -> Result<LyapunovReport> {
    let k = lyapunov_constants(p, filt, lambda)?;
    let (h0, h1) = (cur.t - prev.t, next.t - cur.t);
    if !(h0 > 0.0) || (h0 - h1).abs() > 1e-9 * h0 {
        return Err(Error::NonUniformSpacing { index: 0 });
    }
    let grid = cur.grid().clone();
    let (a, b, hh, dts) = ab_from_modes(&grid, filt, p, lambda, |idx| {
        let (ym, y, yp) = (prev.mode(idx), cur.mode(idx), next.mode(idx));
        let d = |r: usize| (yp[r] - ym[r]) / (2.0 * h0);
        ([y[0], y[1]], [d(0), d(1)])
    });
    Ok(report(cur.t, a, b, hh, dts, &k, false))
}

fn report(
    t: f64,
    a: f64,
    b: f64,
    h1: f64,
    dts: f64,
    k: &LyapunovConstants,
    exact: bool,
) -> LyapunovReport {
    LyapunovReport {
        t,
        a,
        b,
        c0: k.c0,
        lambda: k.lambda,
        ratio: if a == 0.0 { f64::NAN } else { b / a },
        h1_sq: h1,
        dt_sq: dts,
        exact_dt: exact,
    }
}

/// Instantaneous norms recorded by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub u_l2_sq: f64,
    pub theta_l2_sq: f64,
    pub u_h2_sq: f64,
    pub theta_h2_sq: f64,
    /// `‖∂₂u‖²`, `‖∂₁θ‖²`
    pub d2u_l2_sq: f64,
    pub d1theta_l2_sq: f64,
    /// `‖∂₂u‖²_{H²}`, `‖∂₁θ‖²_{H²}`
    pub d2u_h2_sq: f64,
    pub d1theta_h2_sq: f64,
    pub d1u2_l2_sq: f64,
    pub omega_l2: f64,
    pub grad_omega_l2: f64,
    pub div_ratio: f64,
}

pub const RECORD_COLUMNS: [&str; 13] = [
    "t",
    "u_l2_sq",
    "theta_l2_sq",
    "u_h2_sq",
    "theta_h2_sq",
    "d2u_l2_sq",
    "d1theta_l2_sq",
    "d2u_h2_sq",
    "d1theta_h2_sq",
    "d1u2_l2_sq",
    "omega_l2",
    "grad_omega_l2",
    "div_ratio",
];

fn h2w(a: f64, b: f64) -> f64 {
    let r2 = a * a + b * b;
    1.0 + r2 + r2 * r2
}

impl DiagnosticsRecord {
    pub fn from_state(s: &LinearState) -> Self {
        let (u1, u2, th) = (&s.u.u1, &s.u.u2, &s.theta);
        let both = |w: &dyn Fn(f64, f64) -> f64| u1.weighted_sq(w) + u2.weighted_sq(w);
        let omega = s.u.curl();
        DiagnosticsRecord {
            t: s.t,
            u_l2_sq: both(&|_, _| 1.0),
            theta_l2_sq: th.l2_sq(),
            u_h2_sq: both(&h2w),
            theta_h2_sq: th.h2_sq(),
            d2u_l2_sq: both(&|_, b| b * b),
            d1theta_l2_sq: th.weighted_sq(|a, _| a * a),
            d2u_h2_sq: both(&|a, b| b * b * h2w(a, b)),
            d1theta_h2_sq: th.weighted_sq(|a, b| a * a * h2w(a, b)),
            d1u2_l2_sq: u2.weighted_sq(|a, _| a * a),
            omega_l2: omega.l2_norm(),
            grad_omega_l2: omega.weighted_sq(|a, b| a * a + b * b).sqrt(),
            div_ratio: s.u.max_divergence_ratio(),
        }
    }

    pub fn row(&self) -> Vec<String> {
        [
            self.t,
            self.u_l2_sq,
            self.theta_l2_sq,
            self.u_h2_sq,
            self.theta_h2_sq,
            self.d2u_l2_sq,
            self.d1theta_l2_sq,
            self.d2u_h2_sq,
            self.d1theta_h2_sq,
            self.d1u2_l2_sq,
            self.omega_l2,
            self.grad_omega_l2,
            self.div_ratio,
        ]
        .iter()
        .map(|&v| fmt_f64(v))
        .collect()
    }
}

/// Running energy functional at one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub u_h2_sq: f64,
    pub theta_h2_sq: f64,
    /// `∫₀ᵗ ‖∂₂u‖²_{H²}`
    pub int_d2u_h2: f64,
    /// `∫₀ᵗ ‖∂₁θ‖²_{H²}`
    pub int_d1theta_h2: f64,
    /// `∫₀ᵗ ‖∂₁u₂‖²`
    pub int_d1u2: f64,
    /// `E(t)`
    pub e: f64,
    pub e0: f64,
    /// `‖u‖² + ‖θ‖² + 2ν∫‖∂₂u‖² + 2η∫‖∂₁θ‖²`, constant for exact solutions.
    pub l2_balance: f64,
    /// `‖u₀‖² + ‖θ₀‖²`
    pub l2_initial: f64,
}

pub const ENERGY_COLUMNS: [&str; 10] = [
    "t",
    "u_h2_sq",
    "theta_h2_sq",
    "int_d2u_h2",
    "int_d1theta_h2",
    "int_d1u2",
    "E",
    "E0",
    "l2_balance",
    "l2_initial",
];

impl EnergyReport {
    pub fn row(&self) -> Vec<String> {
        [
            self.t,
            self.u_h2_sq,
            self.theta_h2_sq,
            self.int_d2u_h2,
            self.int_d1theta_h2,
            self.int_d1u2,
            self.e,
            self.e0,
            self.l2_balance,
            self.l2_initial,
        ]
        .iter()
        .map(|&v| fmt_f64(v))
        .collect()
    }

    /// `|balance − initial| / initial` (0 for a zero trajectory).
    pub fn l2_drift(&self) -> f64 {
        if self.l2_initial == 0.0 {
            (self.l2_balance - self.l2_initial).abs()
        } else {
            (self.l2_balance - self.l2_initial).abs() / self.l2_initial
        }
    }
}

/// Incremental `E(t)`: running maximum plus trapezoid integrals.
#[derive(Debug, Clone)]
pub struct EnergyTracker {
    p: Params,
    delta: f64,
    last: Option<DiagnosticsRecord>,
    max_h2: f64,
    int_d2u_h2: f64,
    int_d1theta_h2: f64,
    int_d1u2: f64,
    int_d2u_l2: f64,
    int_d1theta_l2: f64,
    e0: f64,
    l2_initial: f64,
}

impl EnergyTracker {
    pub fn new(p: Params, delta: f64) -> Self {
        EnergyTracker {
            p,
            delta,
            last: None,
            max_h2: 0.0,
            int_d2u_h2: 0.0,
            int_d1theta_h2: 0.0,
            int_d1u2: 0.0,
            int_d2u_l2: 0.0,
            int_d1theta_l2: 0.0,
            e0: 0.0,
            l2_initial: 0.0,
        }
    }

    pub fn push(&mut self, r: &DiagnosticsRecord) -> Result<EnergyReport> {
        let h2 = r.u_h2_sq + r.theta_h2_sq;
        match self.last {
            None => {
                self.e0 = h2;
                self.l2_initial = r.u_l2_sq + r.theta_l2_sq;
            }
            Some(prev) => {
                let h = r.t - prev.t;
                if !(h > 0.0) {
                    return Err(Error::NonUniformSpacing { index: 0 });
                }
                let trap = |a: f64, b: f64| 0.5 * h * (a + b);
                self.int_d2u_h2 += trap(prev.d2u_h2_sq, r.d2u_h2_sq);
                self.int_d1theta_h2 += trap(prev.d1theta_h2_sq, r.d1theta_h2_sq);
                self.int_d1u2 += trap(prev.d1u2_l2_sq, r.d1u2_l2_sq);
                self.int_d2u_l2 += trap(prev.d2u_l2_sq, r.d2u_l2_sq);
                self.int_d1theta_l2 += trap(prev.d1theta_l2_sq, r.d1theta_l2_sq);
            }
        }
        self.max_h2 = self.max_h2.max(h2);
        self.last = Some(*r);
        let (nu, eta) = (self.p.nu, self.p.eta);
        Ok(EnergyReport {
            t: r.t,
            u_h2_sq: r.u_h2_sq,
            theta_h2_sq: r.theta_h2_sq,
            int_d2u_h2: self.int_d2u_h2,
            int_d1theta_h2: self.int_d1theta_h2,
            int_d1u2: self.int_d1u2,
            e: self.max_h2
                + 2.0 * nu * self.int_d2u_h2
                + 2.0 * eta * self.int_d1theta_h2
                + self.delta * self.int_d1u2,
            e0: self.e0,
            l2_balance: r.u_l2_sq
                + r.theta_l2_sq
                + 2.0 * nu * self.int_d2u_l2
                + 2.0 * eta * self.int_d1theta_l2,
            l2_initial: self.l2_initial,
        })
    }
}

/// `E(t)` along a uniformly spaced record series.
pub fn energy_functional(
    records: &[DiagnosticsRecord],
    p: &Params,
    delta: f64,
) -> Result<Vec<EnergyReport>> {
    if records.len() > 2 {
        let h = records[1].t - records[0].t;
        for (i, w) in records.windows(2).enumerate() {
            // the final record of a run may close a partial cadence interval
            let last = i + 2 == records.len();
            let hi = w[1].t - w[0].t;
            if (hi - h).abs() > 1e-9 * h && !(last && hi < h) {
                return Err(Error::NonUniformSpacing { index: i });
            }
        }
    }
    let mut tr = EnergyTracker::new(*p, delta);
    records.iter().map(|r| tr.push(r)).collect()
}

/// Default `δ = 0.1·min(ν, η, 1)`.
pub fn default_delta(p: &Params) -> f64 {
    0.1 * p.nu.min(p.eta).min(1.0)
}

/// `∫|fgh| / (‖f‖ ‖g‖^{1/2} ‖∂₂g‖^{1/2} ‖h‖^{1/2} ‖∂₁h‖^{1/2})`, with the
/// integral approximated on the collocation grid.
pub fn triple_product_check(
    f: &SpectralField,
    g: &SpectralField,
    h: &SpectralField,
) -> Result<f64> {
    f.check_grid(g)?;
    f.check_grid(h)?;
    let factors = [
        f.l2_norm(),
        g.l2_norm(),
        g.derivative(Axis::X2, 1).l2_norm(),
        h.l2_norm(),
        h.derivative(Axis::X1, 1).l2_norm(),
    ];
    if factors.contains(&0.0) {
        return Err(Error::Inapplicable(
            "a norm factor on the right-hand side vanishes".into(),
        ));
    }
    let (pf, pg, ph) = (f.to_physical(), g.to_physical(), h.to_physical());
    let lhs: f64 = pf
        .iter()
        .zip(&pg)
        .zip(&ph)
        .map(|((a, b), c)| (a * b * c).abs())
        .sum::<f64>()
        * f.grid().cell_area();
    let rhs = factors[0] * (factors[1] * factors[2] * factors[3] * factors[4]).sqrt();
    Ok(lhs / rhs)
}

/// Regression model for decay fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitMode {
    /// `log v` against `log t`.
    Algebraic,
    /// `log v` against `t`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
}

/// Minimum number of in-window samples for a fit.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Default window: drop `t < 1` and the final 10% of the horizon.
pub fn default_window(horizon: f64) -> (f64, f64) {
    (1.0, 0.9 * horizon)
}

/// Least-squares decay fit over samples with `t` in `window` (inclusive).
pub fn fit_decay_rate(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
    mode: FitMode,
) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::invalid("values", "one value per time"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::NonPositive { index: i, value: v });
        }
        xs.push(match mode {
            FitMode::Algebraic => t.ln(),
            FitMode::Exponential => t,
        });
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            found: n,
            required: MIN_FIT_SAMPLES,
        });
    }
    let nf = n as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / nf, ys.iter().sum::<f64>() / nf);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples {
            found: 1,
            required: 2,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(DecayFit {
        slope,
        intercept,
        r2,
        samples: n,
    })
}

/// `I₁ = ∫(∂₁θ·ω − ∇u₂·∇θ)` and the sum of the magnitudes of its two terms.
pub fn cancellation_i1(u: &VectorField, theta: &SpectralField) -> Result<(f64, f64)> {
    let omega = u.curl();
    let t1 = theta.derivative(Axis::X1, 1).inner(&omega)?;
    let t2 =
        u.u2.derivative(Axis::X1, 1)
            .inner(&theta.derivative(Axis::X1, 1))?
            + u.u2
                .derivative(Axis::X2, 1)
                .inner(&theta.derivative(Axis::X2, 1))?;
    Ok((t1 - t2, t1.abs() + t2.abs()))
}

/// `J₁ = ∫(∇∂₁θ·∇ω − Δu₂ Δθ)` and the sum of the magnitudes of its terms.
pub fn cancellation_j1(u: &VectorField, theta: &SpectralField) -> Result<(f64, f64)> {
    let omega = u.curl();
    let d1t = theta.derivative(Axis::X1, 1);
    let t1 = d1t
        .derivative(Axis::X1, 1)
        .inner(&omega.derivative(Axis::X1, 1))?
        + d1t
            .derivative(Axis::X2, 1)
            .inner(&omega.derivative(Axis::X2, 1))?;
    let t2 = u.u2.laplacian().inner(&theta.laplacian())?;
    Ok((t1 - t2, t1.abs() + t2.abs()))
}

/// Same integrals evaluated from physical samples (grid sums).
pub fn cancellations_physical(u: &VectorField, theta: &SpectralField) -> Result<[(f64, f64); 2]> {
    let grid = u.grid();
    let omega = u.curl();
    let dx = grid.cell_area();
    let phys = |f: &SpectralField| f.to_physical();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * dx;
    let d = |f: &SpectralField, ax: Axis| f.derivative(ax, 1);
    let (x1, x2) = (Axis::X1, Axis::X2);
    let i_a = dot(&phys(&d(theta, x1)), &phys(&omega));
    let i_b = dot(&phys(&d(&u.u2, x1)), &phys(&d(theta, x1)))
        + dot(&phys(&d(&u.u2, x2)), &phys(&d(theta, x2)));
    let d1t = d(theta, x1);
    let j_a = dot(&phys(&d(&d1t, x1)), &phys(&d(&omega, x1)))
        + dot(&phys(&d(&d1t, x2)), &phys(&d(&omega, x2)));
    let j_b = dot(&phys(&u.u2.laplacian()), &phys(&theta.laplacian()));
    Ok([
        (i_a - i_b, i_a.abs() + i_b.abs()),
        (j_a - j_b, j_a.abs() + j_b.abs()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::propagate_exact;
    use crate::rng::{random_scalar, random_solenoidal, stream_rng};

    fn unit() -> Params {
        Params::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn cutoff_examples() {
        let f = CutoffFilter::new(0.5, 0.5).unwrap();
        assert!(f.keeps(1.0, 1.0));
        assert!(!f.keeps(0.3, 7.0));
        let g = FrequencyGrid::square(16).unwrap();
        let x = random_scalar(&g, 5, &mut stream_rng(1, 0));
        let once = apply_cutoff(&x, &CutoffFilter::new(1.0, 2.0).unwrap());
        assert_eq!(
            apply_cutoff(&once, &CutoffFilter::new(1.0, 2.0).unwrap()),
            once
        );
    }

    #[test]
    fn c0_example() {
        let k = lyapunov_constants(&unit(), &CutoffFilter::new(1.0, 1.0).unwrap(), 0.5).unwrap();
        assert_eq!(k.lambda_max, 0.5);
        assert!((k.c0 - 0.125).abs() < 1e-16);
        assert!(lyapunov_constants(&unit(), &CutoffFilter::new(1.0, 1.0).unwrap(), 0.6).is_err());
    }

    #[test]
    fn zero_state_has_zero_pair() {
        let g = FrequencyGrid::square(8).unwrap();
        let r = lyapunov_ab(
            &LinearState::zeros(&g),
            &unit(),
            &CutoffFilter::new(1.0, 1.0).unwrap(),
            0.5,
        )
        .unwrap();
        assert_eq!((r.a, r.b), (0.0, 0.0));
    }

    #[test]
    fn exact_and_differenced_pairs_agree() {
        let g = FrequencyGrid::square(16).unwrap();
        let mut rng = stream_rng(2, 0);
        let s = LinearState::new(
            random_solenoidal(&g, 4, &mut rng),
            random_scalar(&g, 4, &mut rng),
            0.0,
        )
        .unwrap();
        let p = unit();
        let f = CutoffFilter::new(1.0, 1.0).unwrap();
        let h = 1e-4;
        let s1 = propagate_exact(&s, 1.0, &p).unwrap();
        let s0 = propagate_exact(&s, 1.0 - h, &p).unwrap();
        let s2 = propagate_exact(&s, 1.0 + h, &p).unwrap();
        let e = lyapunov_ab(&s1, &p, &f, 0.5).unwrap();
        let d = lyapunov_ab_fd(&s0, &s1, &s2, &p, &f, 0.5).unwrap();
        assert!((e.a - d.a).abs() < 1e-6 * e.a);
        assert!((e.b - d.b).abs() < 1e-6 * e.b);
        assert!(!d.exact_dt && e.exact_dt);
    }

    #[test]
    fn energy_of_single_record() {
        let g = FrequencyGrid::square(8).unwrap();
        let mut rng = stream_rng(4, 0);
        let s = LinearState::new(
            random_solenoidal(&g, 2, &mut rng),
            random_scalar(&g, 2, &mut rng),
            0.0,
        )
        .unwrap();
        let rec = DiagnosticsRecord::from_state(&s);
        let e = energy_functional(&[rec], &unit(), 0.1).unwrap();
        assert_eq!(e[0].e, s.u.h2_sq() + s.theta.h2_sq());
        let z = DiagnosticsRecord::from_state(&LinearState::zeros(&g));
        let mut z1 = z;
        z1.t = 0.5;
        let e = energy_functional(&[z, z1], &unit(), 0.1).unwrap();
        assert!(e.iter().all(|r| r.e == 0.0));
    }

    #[test]
    fn triple_product_examples() {
        let g = FrequencyGrid::square(16).unwrap();
        let c = Complex64::new(1.0, 0.0);
        let m = SpectralField::single_mode(&g, 1, 1, c);
        let r = triple_product_check(&m, &m, &m).unwrap();
        assert!(r.is_finite() && r > 0.0);
        let flat = SpectralField::single_mode(&g, 1, 0, c);
        assert!(matches!(
            triple_product_check(&m, &flat, &m),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn fit_examples() {
        let ts: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let inv: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
        let f = fit_decay_rate(&ts, &inv, (1.0, 50.0), FitMode::Algebraic).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-6);
        let ex: Vec<f64> = ts.iter().map(|t| (-t / 8.0).exp()).collect();
        let f = fit_decay_rate(&ts, &ex, (1.0, 50.0), FitMode::Exponential).unwrap();
        assert!((f.slope + 0.125).abs() < 1e-6);
        assert!(matches!(
            fit_decay_rate(&ts[..5], &inv[..5], (0.0, 10.0), FitMode::Algebraic),
            Err(Error::InsufficientSamples { .. })
        ));
        let mut bad = inv.clone();
        bad[3] = 0.0;
        assert!(matches!(
            fit_decay_rate(&ts, &bad, (1.0, 50.0), FitMode::Algebraic),
            Err(Error::NonPositive { index: 3, .. })
        ));
    }

    #[test]
    fn cancellations_vanish() {
        let g = FrequencyGrid::square(16).unwrap();
        let mut rng = stream_rng(5, 0);
        let u = random_solenoidal(&g, 5, &mut rng);
        let th = random_scalar(&g, 5, &mut rng);
        let (i1, si) = cancellation_i1(&u, &th).unwrap();
        let (j1, sj) = cancellation_j1(&u, &th).unwrap();
        assert!(i1.abs() <= 1e-12 * si && j1.abs() <= 1e-12 * sj);
        let [(pi, psi), (pj, psj)] = cancellations_physical(&u, &th).unwrap();
        assert!(pi.abs() <= 1e-12 * psi && pj.abs() <= 1e-12 * psj);
    }
}
