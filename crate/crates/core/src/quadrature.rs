//! Norms of the linear solution on ℝ² by adaptive quadrature of the exact
//! kernel representation
//!
//! ```text
//! u₁ = K₁u₁₀ + K₂θ₀,   u₂ = K₁u₂₀ + K₃θ₀,   θ = K₄u₂₀ + K₅θ₀,
//! ```
//!
//! against closed-form initial spectra, and the algebraic decay envelopes
//! these norms obey. The torus has a spectral gap and cannot show algebraic
//! decay, which is why this path exists.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{fit_decay_rate, DecayFit, FitMode};
use crate::error::{Error, Result};
use crate::kernels::{kernel_symbols, Params};
use crate::report::fmt_f64;

/// Default relative tolerance of [`norm_by_quadrature`].
pub const DEFAULT_REL_TOL: f64 = 1e-6;

/// Upper bound on subintervals per one-dimensional adaptive integral.
pub const MAX_SEGMENTS: usize = 4000;

/// Number of geometric panels seeded towards each axis.
const GEOMETRIC_PANELS: i32 = 24;

/// Safety factor applied to the fitted envelope constants.
pub const ENVELOPE_MARGIN: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Gaussian,
    Xi1WeightedGaussian,
    Xi1sqWeightedGaussian,
}

impl SpectrumKind {
    /// Power of `ξ₁` in front of the Gaussian.
    pub fn xi1_power(&self) -> i32 {
        match self {
            SpectrumKind::Gaussian => 0,
            SpectrumKind::Xi1WeightedGaussian => 1,
            SpectrumKind::Xi1sqWeightedGaussian => 2,
        }
    }
}

/// `f̂(ξ) = amplitude · ξ₁^k · exp(−|ξ|²/width²)` with `k` fixed by the kind.
///
/// Spectra are taken real. Norms only see moduli, and the kernels are real
/// up to the common factor they share, so phases would not change anything
/// measured here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormSpectrum {
    pub kind: SpectrumKind,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl ClosedFormSpectrum {
    pub fn new(kind: SpectrumKind, width: f64, amplitude: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid("width", format!("{width} must be positive")));
        }
        if !amplitude.is_finite() {
            return Err(Error::invalid("amplitude", "must be finite"));
        }
        Ok(Self {
            kind,
            width,
            amplitude,
        })
    }

    pub fn gaussian() -> Self {
        Self::new(SpectrumKind::Gaussian, 1.0, 1.0).unwrap()
    }

    pub fn xi1_weighted() -> Self {
        Self::new(SpectrumKind::Xi1WeightedGaussian, 1.0, 1.0).unwrap()
    }

    pub fn xi1sq_weighted() -> Self {
        Self::new(SpectrumKind::Xi1sqWeightedGaussian, 1.0, 1.0).unwrap()
    }

    pub fn eval(&self, xi1: f64, xi2: f64) -> f64 {
        let g = (-(xi1 * xi1 + xi2 * xi2) / (self.width * self.width)).exp();
        self.amplitude * xi1.powi(self.kind.xi1_power()) * g
    }

    /// Whether `‖f‖_{Ḣ^{0,−σ}}` is finite in the sense required here
    /// (`ξ₁`-power at least `σ`).
    pub fn supports_sigma(&self, sigma: f64) -> bool {
        sigma <= self.kind.xi1_power() as f64
    }

    /// Whether `‖ |ξ|^r |ξ₁|^{−σ} f̂ ‖_{L²}` converges at the origin.
    pub fn weighted_norm_finite(&self, r: f64, sigma: f64) -> bool {
        // integrand ~ ρ^{2r + 2k − 2σ} ρ dρ near 0 (worst direction)
        let k = self.kind.xi1_power() as f64;
        2.0 * r + 2.0 * (k - sigma) + 2.0 > 0.0 && 2.0 * (k - sigma) + 1.0 > 0.0
    }

    /// Closed-form `‖f̂‖_{L²(ℝ²)}`:
    /// `A² Γ(k+½) a^{−(k+½)} √(π/a)` with `a = 2/w²`.
    pub fn l2_norm(&self) -> f64 {
        let k = self.kind.xi1_power();
        let a = 2.0 / (self.width * self.width);
        let sq = self.amplitude
            * self.amplitude
            * gamma_half(k)
            * a.powf(-(k as f64 + 0.5))
            * (std::f64::consts::PI / a).sqrt();
        sq.sqrt()
    }
}

/// `Γ(k + ½) = (2k)! √π / (4^k k!)`.
fn gamma_half(k: i32) -> f64 {
    let mut g = std::f64::consts::PI.sqrt();
    for j in 0..k {
        g *= j as f64 + 0.5;
    }
    g
}

/// Which solution component a norm refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    U1,
    U2,
    Theta,
}

impl Component {
    pub fn as_str(&self) -> &'static str {
        match self {
            Component::U1 => "u1",
            Component::U2 => "u2",
            Component::Theta => "theta",
        }
    }
}

/// Initial data `(û₁₀, û₂₀, θ̂₀)`; `None` means zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpectra {
    pub u1: Option<ClosedFormSpectrum>,
    pub u2: Option<ClosedFormSpectrum>,
    pub theta: Option<ClosedFormSpectrum>,
}

impl InitialSpectra {
    pub fn theta_only(theta: ClosedFormSpectrum) -> Self {
        Self {
            theta: Some(theta),
            ..Self::default()
        }
    }

    fn all(&self) -> impl Iterator<Item = &ClosedFormSpectrum> {
        [&self.u1, &self.u2, &self.theta]
            .into_iter()
            .filter_map(|s| s.as_ref())
    }

    fn cutoff(&self, s: f64) -> f64 {
        // Gaussian tail beyond Ξ is below ~1e-11 of the t = 0 integral for
        // Ξ² = w² (14 + k + s); kernels are bounded so this also covers t > 0.
        self.all()
            .map(|f| f.width * (14.0 + f.kind.xi1_power() as f64 + s.max(0.0)).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Value of a quadrature together with its reliability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// Estimated relative error of `value`.
    pub rel_error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

// Gauss–Kronrod 7/15 on [−1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod integration over the given breakpoints:
/// always splits the segment with the largest error estimate until the total
/// estimate is below `rel_tol · |total|`.
fn adaptive<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], rel_tol: f64) -> QuadratureResult {
    let mut segs: Vec<(f64, f64, f64, f64)> = breaks
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    let mut evals = 15 * segs.len();
    loop {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if err <= rel_tol * total.abs() || err < f64::MIN_POSITIVE {
            return QuadratureResult {
                value: total,
                rel_error: if total != 0.0 { err / total.abs() } else { 0.0 },
                converged: true,
                evaluations: evals,
            };
        }
        if segs.len() >= MAX_SEGMENTS {
            return QuadratureResult {
                value: total,
                rel_error: err / total.abs(),
                converged: false,
                evaluations: evals,
            };
        }
        let (worst, _) =
            segs.iter().enumerate().fold(
                (0, -1.0),
                |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc },
            );
        let (a, b, _, _) = segs.swap_remove(worst);
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        evals += 30;
        segs.push((a, m, v1, e1));
        segs.push((m, b, v2, e2));
    }
}

/// `0, Ξ·2^{−J}, …, Ξ/2, Ξ`: fine panels where the kernels develop their
/// slow low-frequency structure.
fn geometric_breaks(cutoff: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    for j in (0..=GEOMETRIC_PANELS).rev() {
        b.push(cutoff * 2f64.powi(-j));
    }
    b
}

/// Squared modulus of the component at `ξ`, summed over the four sign
/// reflections of `(ξ₁, ξ₂)`, times `|ξ|^{2s}`. Integrating it over the
/// first quadrant gives the integral over ℝ².
fn reflected_integrand(
    which: Component,
    init: &InitialSpectra,
    s: f64,
    t: f64,
    p: &Params,
    x1: f64,
    x2: f64,
) -> f64 {
    let r2 = x1 * x1 + x2 * x2;
    if r2 == 0.0 {
        return 0.0;
    }
    let ev = match kernel_symbols(x1, x2, t, p) {
        Ok(ev) => ev,
        Err(_) => return f64::NAN,
    };
    let k = ev.k;
    let spec = |f: &Option<ClosedFormSpectrum>, a: f64, b: f64| f.map_or(0.0, |f| f.eval(a, b));
    let mut sum = 0.0;
    for (s1, s2) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
        let (a, b) = (s1 * x1, s2 * x2);
        // only K₂ is odd under a single reflection
        let k2 = k[1] * (s1 * s2);
        let v = match which {
            Component::U1 => k[0] * spec(&init.u1, a, b) + k2 * spec(&init.theta, a, b),
            Component::U2 => k[0] * spec(&init.u2, a, b) + k[2] * spec(&init.theta, a, b),
            Component::Theta => k[3] * spec(&init.u2, a, b) + k[4] * spec(&init.theta, a, b),
        };
        sum += v.norm_sqr();
    }
    if s != 0.0 {
        sum *= r2.powf(s);
    }
    sum
}

/// `‖|ξ|^s ĉ(·, t)‖_{L²(ℝ²)}` for the chosen component `c` by nested
/// adaptive quadrature to relative tolerance `rel_tol` (on the squared norm).
///
/// A result that did not reach the tolerance within [`MAX_SEGMENTS`] is
/// returned with `converged = false` rather than as an error.
pub fn norm_by_quadrature(
    which: Component,
    init: &InitialSpectra,
    s: f64,
    t: f64,
    p: &Params,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("{t} must be positive")));
    }
    if !(s >= 0.0) {
        return Err(Error::invalid("s", format!("{s} must be nonnegative")));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::invalid("rel_tol", "must be positive"));
    }
    let cutoff = init.cutoff(s);
    if cutoff == 0.0 {
        return Ok(QuadratureResult {
            value: 0.0,
            rel_error: 0.0,
            converged: true,
            evaluations: 0,
        });
    }
    let breaks = geometric_breaks(cutoff);
    let inner_tol = 0.1 * rel_tol;
    let mut inner_ok = true;
    let mut evals = 0;
    let outer = adaptive(
        |x1| {
            let r = adaptive(
                |x2| reflected_integrand(which, init, s, t, p, x1, x2),
                &breaks,
                inner_tol,
            );
            inner_ok &= r.converged;
            evals += r.evaluations;
            r.value
        },
        &breaks,
        0.9 * rel_tol,
    );
    if !outer.value.is_finite() {
        return Err(Error::NonFinite {
            what: "quadrature",
            t,
        });
    }
    Ok(QuadratureResult {
        value: outer.value.max(0.0).sqrt(),
        // relative error of a square root is half that of its argument
        rel_error: 0.5 * (outer.rel_error + inner_tol),
        converged: outer.converged && inner_ok,
        evaluations: evals,
    })
}

/// One power term `C t^p` of a decay envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeTerm {
    pub exponent: f64,
    /// Data norms multiplying this power in the bound.
    pub sources: Vec<String>,
    pub constant: f64,
}

/// A decay-envelope check for one component and one `(s, σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayCase {
    pub id: String,
    pub component: Component,
    pub s: f64,
    pub sigma: f64,
    pub init: InitialSpectra,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub case: DecayCase,
    pub times: Vec<f64>,
    pub measured: Vec<f64>,
    pub converged: Vec<bool>,
    pub terms: Vec<EnvelopeTerm>,
    pub envelope: Vec<f64>,
    /// `false` when some active term has a nonnegative exponent.
    pub decay_guaranteed: bool,
    /// Exponent of the term carrying the largest share of the envelope at
    /// the last time.
    pub dominant_exponent: f64,
    /// Log-log fit of the measured norms over the whole window.
    pub slope: DecayFit,
    /// Largest `measured / envelope` over the validation half.
    pub validation_ratio: f64,
}

impl DecayReport {
    pub fn envelope_holds(&self) -> bool {
        self.validation_ratio <= 1.0
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Power terms of the bound for `case.component`, keeping only those whose
/// data factor is nonzero. Each entry is `(exponent, data label, Sobolev
/// order of that data norm, spectrum)`.
fn bound_terms(case: &DecayCase) -> Vec<(f64, String, f64, ClosedFormSpectrum)> {
    let (s, sg) = (case.s, case.sigma);
    let lead = -0.5 * (s + sg);
    let i = &case.init;
    let raw: Vec<(f64, &str, f64, Option<ClosedFormSpectrum>)> = match case.component {
        Component::U1 => vec![
            (lead, "u10", 0.0, i.u1),
            (-0.5 * sg, "u10", s, i.u1),
            (lead + 1.0, "theta0", 0.0, i.theta),
            (-0.5 - 0.5 * sg, "theta0", s - 1.0, i.theta),
        ],
        Component::U2 => vec![
            (lead, "u20", 0.0, i.u2),
            (-0.5 * sg, "u20", s, i.u2),
            (lead + 1.0, "theta0", 0.0, i.theta),
            (-1.0 - 0.5 * sg, "theta0", s, i.theta),
        ],
        Component::Theta => vec![
            (lead + 1.0, "u20", 0.0, i.u2),
            (-0.5 * sg, "u20", s - 2.0, i.u2),
            (lead, "theta0", 0.0, i.theta),
            (-0.5 * sg, "theta0", s, i.theta),
        ],
    };
    raw.into_iter()
        .filter_map(|(e, name, order, f)| {
            f.map(|f| (e, format!("{name}:H^({order},-{sg})"), order, f))
        })
        .collect()
}

/// Check the hypotheses for `case`: `s, σ ≥ 0`, `s + σ ≥ 2`, and every data
/// norm appearing in the bound finite.
pub fn check_hypotheses(case: &DecayCase) -> Result<()> {
    let (s, sg) = (case.s, case.sigma);
    if !(s >= 0.0 && sg >= 0.0) {
        return Err(Error::Hypothesis(format!(
            "s = {s} and sigma = {sg} must be nonnegative"
        )));
    }
    if s + sg < 2.0 {
        return Err(Error::Hypothesis(format!("s + sigma = {} < 2", s + sg)));
    }
    let terms = bound_terms(case);
    if terms.is_empty() {
        return Err(Error::Hypothesis(format!(
            "case `{}`: initial data do not enter {}",
            case.id,
            case.component.as_str()
        )));
    }
    for (_, label, order, f) in &terms {
        if !(f.supports_sigma(sg) && f.weighted_norm_finite(*order, sg)) {
            return Err(Error::Hypothesis(format!(
                "case `{}`: data norm {label} is infinite for {:?}",
                case.id, f.kind
            )));
        }
    }
    Ok(())
}

/// Nonnegative least squares for `min Σᵢ (Σⱼ cⱼ t_i^{pⱼ} / mᵢ − 1)²`,
/// solved exactly by enumerating active sets (there are at most four
/// distinct exponents).
fn fit_constants(times: &[f64], values: &[f64], exps: &[f64]) -> Vec<f64> {
    let n = exps.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let a = DMatrix::from_fn(times.len(), cols.len(), |i, j| {
            times[i].powf(exps[cols[j]]) / values[i]
        });
        let b = DVector::from_element(times.len(), 1.0);
        let Ok(x) = a.clone().svd(true, true).solve(&b, 1e-14) else {
            continue;
        };
        if x.iter().any(|&c| !(c > 0.0)) {
            continue;
        }
        let res = (&a * &x - &b).norm_squared();
        if best.as_ref().is_none_or(|(r, _)| res < *r) {
            let mut c = vec![0.0; n];
            for (j, &col) in cols.iter().enumerate() {
                c[col] = x[j];
            }
            best = Some((res, c));
        }
    }
    best.map(|b| b.1).unwrap_or_else(|| vec![0.0; n])
}

/// Measure the component norm at `times`, fit the envelope constants on the
/// first half of the window, raise them so the envelope dominates the first
/// half with [`ENVELOPE_MARGIN`] to spare, and validate on the second half.
pub fn decay_report(
    case: &DecayCase,
    times: &[f64],
    p: &Params,
    rel_tol: f64,
) -> Result<DecayReport> {
    check_hypotheses(case)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times", "must be strictly increasing"));
    }
    let results: Vec<QuadratureResult> = times
        .par_iter()
        .map(|&t| norm_by_quadrature(case.component, &case.init, case.s, t, p, rel_tol))
        .collect::<Result<_>>()?;
    let measured: Vec<f64> = results.iter().map(|r| r.value).collect();
    if let Some(i) = measured.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::NonPositive {
            index: i,
            value: measured[i],
        });
    }
    let slope = fit_decay_rate(
        times,
        &measured,
        (times[0], times[times.len() - 1]),
        FitMode::Algebraic,
    )?;

    // merge terms sharing an exponent
    let mut terms: Vec<EnvelopeTerm> = Vec::new();
    for (e, label, _, _) in bound_terms(case) {
        match terms.iter_mut().find(|t| t.exponent == e) {
            Some(t) => {
                if !t.sources.contains(&label) {
                    t.sources.push(label)
                }
            }
            None => terms.push(EnvelopeTerm {
                exponent: e,
                sources: vec![label],
                constant: 0.0,
            }),
        }
    }
    let exps: Vec<f64> = terms.iter().map(|t| t.exponent).collect();
    let half = times.len() / 2;
    let mut c = fit_constants(&times[..half], &measured[..half], &exps);
    let env_at =
        |c: &[f64], t: f64| -> f64 { exps.iter().zip(c).map(|(e, c)| c * t.powf(*e)).sum() };
    let lift = (0..half)
        .map(|i| measured[i] / env_at(&c, times[i]))
        .fold(0.0, f64::max);
    for cj in &mut c {
        *cj *= lift * ENVELOPE_MARGIN;
    }
    for (term, cj) in terms.iter_mut().zip(&c) {
        term.constant = *cj;
    }
    let envelope: Vec<f64> = times.iter().map(|&t| env_at(&c, t)).collect();
    let validation_ratio = (half..times.len())
        .map(|i| measured[i] / envelope[i])
        .fold(0.0, f64::max);
    let t_end = times[times.len() - 1];
    let dominant_exponent = terms
        .iter()
        .max_by(|a, b| {
            let va = a.constant * t_end.powf(a.exponent);
            let vb = b.constant * t_end.powf(b.exponent);
            va.total_cmp(&vb)
        })
        .map(|t| t.exponent)
        .unwrap_or(f64::NAN);
    Ok(DecayReport {
        case: case.clone(),
        times: times.to_vec(),
        converged: results.iter().map(|r| r.converged).collect(),
        measured,
        decay_guaranteed: terms.iter().all(|t| t.exponent < 0.0),
        terms,
        envelope,
        dominant_exponent,
        slope,
        validation_ratio,
    })
}

pub const DECAY_COLUMNS: [&str; 7] = [
    "case_id",
    "s",
    "sigma",
    "t",
    "measured_norm",
    "envelope_value",
    "dominant_exponent",
];

impl DecayReport {
    pub fn rows(&self) -> Vec<Vec<String>> {
        (0..self.times.len())
            .map(|i| {
                vec![
                    self.case.id.clone(),
                    fmt_f64(self.case.s),
                    fmt_f64(self.case.sigma),
                    fmt_f64(self.times[i]),
                    fmt_f64(self.measured[i]),
                    fmt_f64(self.envelope[i]),
                    fmt_f64(self.dominant_exponent),
                ]
            })
            .collect()
    }
}

/// Plain CSV dump of several reports (no schema line; see `report` for the
/// versioned form).
pub fn write_decay_csv<W: Write>(out: W, reports: &[DecayReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(DECAY_COLUMNS).map_err(map)?;
    for r in reports {
        for row in r.rows() {
            w.write_record(&row).map_err(map)?;
        }
    }
    w.flush().map_err(|e| Error::io("csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Params {
        Params::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn gauss_kronrod_integrates_polynomials_exactly() {
        let r = adaptive(|x| x.powi(6) - 3.0 * x, &[0.0, 1.0, 2.0], 1e-14);
        assert!((r.value - (128.0 / 7.0 - 6.0)).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn closed_form_l2_norms() {
        // ∫ e^{-2|ξ|²} = π/2, ∫ ξ₁² e^{-2|ξ|²} = π/8, ∫ ξ₁⁴ e^{-2|ξ|²} = 3π/32
        let pi = std::f64::consts::PI;
        assert!((ClosedFormSpectrum::gaussian().l2_norm().powi(2) - pi / 2.0).abs() < 1e-14);
        assert!((ClosedFormSpectrum::xi1_weighted().l2_norm().powi(2) - pi / 8.0).abs() < 1e-14);
        assert!(
            (ClosedFormSpectrum::xi1sq_weighted().l2_norm().powi(2) - 3.0 * pi / 32.0).abs()
                < 1e-14
        );
    }

    #[test]
    fn small_time_matches_initial_norm() {
        for f in [
            ClosedFormSpectrum::gaussian(),
            ClosedFormSpectrum::xi1sq_weighted(),
        ] {
            let init = InitialSpectra::theta_only(f);
            let r = norm_by_quadrature(Component::Theta, &init, 0.0, 1e-9, &p(), 1e-8).unwrap();
            assert!(r.converged);
            assert!((r.value / f.l2_norm() - 1.0).abs() < 1e-4, "{}", r.value);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let r = norm_by_quadrature(
            Component::U2,
            &InitialSpectra::default(),
            0.0,
            1.0,
            &p(),
            1e-6,
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn hypothesis_gate() {
        let mut case = DecayCase {
            id: "x".into(),
            component: Component::Theta,
            s: 0.0,
            sigma: 1.0,
            init: InitialSpectra::theta_only(ClosedFormSpectrum::xi1sq_weighted()),
        };
        assert!(matches!(check_hypotheses(&case), Err(Error::Hypothesis(_))));
        case.sigma = 2.0;
        assert!(check_hypotheses(&case).is_ok());
        // σ beyond the ξ₁-power of the data
        case.init = InitialSpectra::theta_only(ClosedFormSpectrum::gaussian());
        assert!(check_hypotheses(&case).is_err());
    }

    #[test]
    fn u1_with_s2_sigma0_has_no_guaranteed_decay() {
        let case = DecayCase {
            id: "u1".into(),
            component: Component::U1,
            s: 2.0,
            sigma: 0.0,
            init: InitialSpectra {
                u1: Some(ClosedFormSpectrum::gaussian()),
                ..Default::default()
            },
        };
        let terms = bound_terms(&case);
        assert!(terms.iter().any(|t| t.0 == 0.0));
        let times: Vec<f64> = crate::kernels::geomspace(1.0, 10.0, 12);
        let r = decay_report(&case, &times, &p(), 1e-5).unwrap();
        assert!(!r.decay_guaranteed);
    }

    #[test]
    fn nnls_recovers_two_terms() {
        let t: Vec<f64> = crate::kernels::geomspace(1.0, 100.0, 20);
        let v: Vec<f64> = t.iter().map(|t| 2.0 / t + 0.5 / (t * t)).collect();
        let c = fit_constants(&t, &v, &[-1.0, -2.0]);
        assert!((c[0] - 2.0).abs() < 1e-8 && (c[1] - 0.5).abs() < 1e-8);
        // a term the data cannot use is clamped to zero
        let c = fit_constants(&t, &v, &[-1.0, -2.0, 1.0]);
        assert!(c[2] == 0.0 || c[2] < 1e-12);
    }
}
