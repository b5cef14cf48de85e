//! Characteristic roots, wave kernels `G₁, G₂` and solution kernels
//! `K₁…K₅` of the linearized system, together with the frequency-region
//! classification and the root and kernel bounds attached to each region.
//!
//! For a frequency `ξ ≠ 0` write
//!
//! ```text
//! b(ξ) = η ξ₁² + ν ξ₂²,    c(ξ) = ν η ξ₁² ξ₂² + ξ₁² / |ξ|²,
//! ```
//!
//! so that every component of the linear solution satisfies
//! `f'' + b f' + c f = 0` mode by mode, with roots `λ² + bλ + c = 0`.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::fmt_f64;

/// Below this value of `|λ₁ − λ₂|·t` the kernels use the series form of
/// `G₁` around the double root.
pub const DEGENERATE_EPS: f64 = 1e-6;

/// Slack used by the root-bound verifier for equality cases.
pub const ROOT_BOUND_SLACK: f64 = 1e-10;

/// Kinematic viscosity `ν` and thermal diffusivity `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub nu: f64,
    pub eta: f64,
}

impl Params {
    pub fn new(nu: f64, eta: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid("nu", format!("{nu} must be positive")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid("eta", format!("{eta} must be positive")));
        }
        Ok(Params { nu, eta })
    }

    /// `b(ξ) = η ξ₁² + ν ξ₂²`, the damping coefficient.
    #[inline]
    pub fn damping(&self, xi1: f64, xi2: f64) -> f64 {
        self.eta * xi1 * xi1 + self.nu * xi2 * xi2
    }

    /// `c(ξ) = ν η ξ₁² ξ₂² + ξ₁² / |ξ|²`, the restoring coefficient.
    #[inline]
    pub fn stiffness(&self, xi1: f64, xi2: f64) -> f64 {
        let r2 = xi1 * xi1 + xi2 * xi2;
        self.nu * self.eta * xi1 * xi1 * xi2 * xi2 + xi1 * xi1 / r2
    }
}

/// Frequency regions. `S1`/`S2` split on the size of `c` against `b²`,
/// refined by the discriminant sign (`S11`/`S12`) and by `|ξ₁| ≥ |ξ₂|`
/// (`S21`/`S22`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    S11,
    S12,
    S21,
    S22,
    /// `ξ₁ = 0`: the vertical-frequency axis, where `θ` does not decay.
    Axis1,
    /// `ξ = 0`.
    Zero,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::S11 => "S11",
            Region::S12 => "S12",
            Region::S21 => "S21",
            Region::S22 => "S22",
            Region::Axis1 => "AXIS1",
            Region::Zero => "ZERO",
        }
    }

    /// Member of `S1 = S11 ∪ S12`.
    pub fn in_s1(&self) -> bool {
        matches!(self, Region::S11 | Region::S12)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything the kernel layer knows about one `(ξ, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub xi: (f64, f64),
    pub t: f64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub g1: Complex64,
    pub g2: Complex64,
    pub k: [Complex64; 5],
    pub region: Region,
}

impl KernelEval {
    /// The frozen zero mode: identity propagation.
    pub fn zero_mode(t: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        KernelEval {
            xi: (0.0, 0.0),
            t,
            lambda1: zero,
            lambda2: zero,
            g1: zero,
            g2: one,
            k: [one, zero, zero, zero, one],
            region: Region::Zero,
        }
    }

    /// Real parts of `K₁…K₅`.
    pub fn real(&self) -> [f64; 5] {
        self.k.map(|z| z.re)
    }
}

fn check_nonzero(xi1: f64, xi2: f64) -> Result<()> {
    if xi1 == 0.0 && xi2 == 0.0 {
        Err(Error::ZeroFrequency)
    } else {
        Ok(())
    }
}

/// Roots `(λ₁, λ₂)` of `λ² + bλ + c = 0`, with `Re λ₁ ≤ Re λ₂`.
///
/// Real roots take `λ₂ = c / λ₁` so the small root keeps full relative
/// accuracy; a negative discriminant yields the conjugate pair
/// `−b/2 ∓ i √(4c − b²)/2`.
pub fn char_roots(xi1: f64, xi2: f64, p: &Params) -> Result<(Complex64, Complex64)> {
    check_nonzero(xi1, xi2)?;
    let b = p.damping(xi1, xi2);
    let c = p.stiffness(xi1, xi2);
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let l1 = -0.5 * (b + disc.sqrt());
        let l2 = c / l1;
        Ok((Complex64::new(l1, 0.0), Complex64::new(l2, 0.0)))
    } else {
        let w = 0.5 * (-disc).sqrt();
        Ok((Complex64::new(-0.5 * b, -w), Complex64::new(-0.5 * b, w)))
    }
}

/// Wave kernels `(G₁, G₂)` for roots `λ₁, λ₂` at time `t ≥ 0`.
///
/// `G₁ = (e^{λ₁t} − e^{λ₂t}) / (λ₁ − λ₂)`, continued through the double
/// root by `G₁ = t e^{λ̄t} sinh(z)/z` with `z = (λ₁ − λ₂)t/2`;
/// `G₂ = e^{λ₁t} − λ₁ G₁` in both branches.
pub fn g_functions(lambda1: Complex64, lambda2: Complex64, t: f64) -> (Complex64, Complex64) {
    if t == 0.0 {
        return (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    }
    let d = lambda1 - lambda2;
    let e1 = (lambda1 * t).exp();
    let g1 = if d.norm() * t < DEGENERATE_EPS {
        let mean = 0.5 * (lambda1 + lambda2);
        let z2 = 0.25 * d * d * t * t;
        (mean * t).exp() * t * (1.0 + z2 / 6.0 + z2 * z2 / 120.0)
    } else {
        (e1 - (lambda2 * t).exp()) / d
    };
    (g1, e1 - lambda1 * g1)
}

/// Region of a nonzero frequency. Ties go to the first-listed region.
pub fn classify_region(xi1: f64, xi2: f64, p: &Params) -> Result<Region> {
    check_nonzero(xi1, xi2)?;
    let b = p.damping(xi1, xi2);
    let c = p.stiffness(xi1, xi2);
    Ok(if c >= 3.0 / 16.0 * b * b {
        if b * b >= 4.0 * c {
            Region::S11
        } else {
            Region::S12
        }
    } else if xi1.abs() >= xi2.abs() {
        Region::S21
    } else {
        Region::S22
    })
}

/// Roots, wave kernels and solution kernels at `(ξ, t)`.
///
/// `K₁ = G₂ − νξ₂²G₁`, `K₂ = −(ξ₁ξ₂/|ξ|²)G₁`, `K₃ = (ξ₁²/|ξ|²)G₁`,
/// `K₄ = −G₁`, `K₅ = G₂ − ηξ₁²G₁`.
pub fn kernel_symbols(xi1: f64, xi2: f64, t: f64, p: &Params) -> Result<KernelEval> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("{t} must be nonnegative")));
    }
    let (lambda1, lambda2) = char_roots(xi1, xi2, p)?;
    let (g1, g2) = g_functions(lambda1, lambda2, t);
    let r2 = xi1 * xi1 + xi2 * xi2;
    let k = [
        g2 - g1 * (p.nu * xi2 * xi2),
        g1 * (-xi1 * xi2 / r2),
        g1 * (xi1 * xi1 / r2),
        -g1,
        g2 - g1 * (p.eta * xi1 * xi1),
    ];
    let region = if xi1 == 0.0 {
        Region::Axis1
    } else {
        classify_region(xi1, xi2, p)?
    };
    Ok(KernelEval {
        xi: (xi1, xi2),
        t,
        lambda1,
        lambda2,
        g1,
        g2,
        k,
        region,
    })
}

/// Check the region's root bounds on the computed roots:
/// in `S1`, `Re λ₁ ≤ −b/2` and `Re λ₂ ≤ −b/4`;
/// in `S2`, `λ₁ ≤ −3b/4` and `λ₂ ≤ −c/b`.
pub fn verify_root_bounds(xi1: f64, xi2: f64, p: &Params) -> Result<bool> {
    let (l1, l2) = char_roots(xi1, xi2, p)?;
    let b = p.damping(xi1, xi2);
    let c = p.stiffness(xi1, xi2);
    let ok = if classify_region(xi1, xi2, p)?.in_s1() {
        l1.re <= -0.5 * b + ROOT_BOUND_SLACK && l2.re <= -0.25 * b + ROOT_BOUND_SLACK
    } else {
        l1.im == 0.0
            && l2.im == 0.0
            && l1.re <= -0.75 * b + ROOT_BOUND_SLACK
            && l2.re <= -c / b + ROOT_BOUND_SLACK
    };
    Ok(ok && l1.re <= l2.re && l2.re <= 0.0)
}

/// Families of kernel envelopes, one per (region, kernel group) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvelopeFamily {
    /// `|K₁|, |K₅| ≤ C e^{−c₀|ξ|²t}` on `S1`.
    S1Diagonal,
    /// `|K₂|, |K₃|, |K₄| ≤ C t e^{−c₀|ξ|²t}` on `S1`.
    S1Coupling,
    /// `|K₁|, |K₅| ≤ C e^{−3bt/4} + C e^{−(c/b)t}` on `S2`.
    S2Diagonal,
    /// `|K₂| ≤ C (|ξ₁ξ₂|/|ξ|⁴) M(ξ, t)` on `S2`.
    S2K2,
    /// `|K₃| ≤ C (ξ₁²/|ξ|⁴) M(ξ, t)` on `S2`.
    S2K3,
    /// `|K₄| ≤ C (1/|ξ|²) M(ξ, t)` on `S2`.
    S2K4,
}

impl EnvelopeFamily {
    pub const ALL: [EnvelopeFamily; 6] = [
        EnvelopeFamily::S1Diagonal,
        EnvelopeFamily::S1Coupling,
        EnvelopeFamily::S2Diagonal,
        EnvelopeFamily::S2K2,
        EnvelopeFamily::S2K3,
        EnvelopeFamily::S2K4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EnvelopeFamily::S1Diagonal => "S1:K1,K5",
            EnvelopeFamily::S1Coupling => "S1:K2,K3,K4",
            EnvelopeFamily::S2Diagonal => "S2:K1,K5",
            EnvelopeFamily::S2K2 => "S2:K2",
            EnvelopeFamily::S2K3 => "S2:K3",
            EnvelopeFamily::S2K4 => "S2:K4",
        }
    }

    /// Kernel indices (0-based) bounded by this family.
    pub fn kernels(&self) -> &'static [usize] {
        match self {
            EnvelopeFamily::S1Diagonal | EnvelopeFamily::S2Diagonal => &[0, 4],
            EnvelopeFamily::S1Coupling => &[1, 2, 3],
            EnvelopeFamily::S2K2 => &[1],
            EnvelopeFamily::S2K3 => &[2],
            EnvelopeFamily::S2K4 => &[3],
        }
    }

    /// Whether the envelope shape depends on `c₀` (the `S2` diagonal
    /// bound has explicit exponents).
    pub fn uses_c0(&self) -> bool {
        !matches!(self, EnvelopeFamily::S2Diagonal)
    }

    /// Family covering kernel `k` (0-based) in region `region`.
    pub fn for_kernel(region: Region, k: usize) -> Option<EnvelopeFamily> {
        let s1 = match region {
            Region::S11 | Region::S12 => true,
            Region::S21 | Region::S22 => false,
            Region::Axis1 | Region::Zero => return None,
        };
        Some(match (s1, k) {
            (true, 0 | 4) => EnvelopeFamily::S1Diagonal,
            (true, _) => EnvelopeFamily::S1Coupling,
            (false, 0 | 4) => EnvelopeFamily::S2Diagonal,
            (false, 1) => EnvelopeFamily::S2K2,
            (false, 2) => EnvelopeFamily::S2K3,
            (false, _) => EnvelopeFamily::S2K4,
        })
    }

    /// Natural log of the envelope with unit constant, `ln(shape(ξ, t; c₀))`.
    /// Evaluated in log form so large `|ξ|²t` never underflows.
    pub fn ln_shape(&self, xi1: f64, xi2: f64, t: f64, p: &Params, c0: f64) -> f64 {
        let r2 = xi1 * xi1 + xi2 * xi2;
        let b = p.damping(xi1, xi2);
        let c = p.stiffness(xi1, xi2);
        // M(ξ,t)/prefactor: e^{−c₀|ξ|²t} + e^{−c₀(ξ₁²ξ₂²/|ξ|²)t − c₀(ξ₁²/|ξ|⁴)t}
        let two_scale = || {
            let a = -c0 * r2 * t;
            let slow = -c0 * (xi1 * xi1 * xi2 * xi2 / r2) * t - c0 * (xi1 * xi1 / (r2 * r2)) * t;
            log_sum_exp(a, slow)
        };
        match self {
            EnvelopeFamily::S1Diagonal => -c0 * r2 * t,
            EnvelopeFamily::S1Coupling => t.ln() - c0 * r2 * t,
            EnvelopeFamily::S2Diagonal => log_sum_exp(-0.75 * b * t, -(c / b) * t),
            EnvelopeFamily::S2K2 => (xi1.abs() * xi2.abs() / (r2 * r2)).ln() + two_scale(),
            EnvelopeFamily::S2K3 => (xi1 * xi1 / (r2 * r2)).ln() + two_scale(),
            EnvelopeFamily::S2K4 => (1.0 / r2).ln() + two_scale(),
        }
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `|K|` divided by the unit-constant envelope, computed in log space.
/// Zero kernels give zero; a zero envelope with a nonzero kernel gives ∞.
pub fn envelope_ratio(
    family: EnvelopeFamily,
    ev: &KernelEval,
    k: usize,
    p: &Params,
    c0: f64,
) -> f64 {
    let mag = ev.k[k].norm();
    if mag == 0.0 {
        return 0.0;
    }
    let ln_env = family.ln_shape(ev.xi.0, ev.xi.1, ev.t, p, c0);
    (mag.ln() - ln_env).exp()
}

/// Per-kernel outcome of an envelope check at one `(ξ, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCheck {
    pub region: Region,
    /// `|Kᵢ| ≤ C · shape` for each kernel.
    pub holds: [bool; 5],
    /// `|Kᵢ| / shape`, i.e. the smallest admissible `C` at this point.
    pub ratios: [f64; 5],
}

/// Does each `|Kᵢ(ξ,t)|` lie below the region's envelope with constants
/// `(C, c₀)`?
pub fn verify_kernel_envelopes(
    xi1: f64,
    xi2: f64,
    t: f64,
    p: &Params,
    constants: (f64, f64),
) -> Result<EnvelopeCheck> {
    let (big_c, c0) = constants;
    if !(big_c > 0.0 && c0 > 0.0) {
        return Err(Error::invalid("constants", "C and c0 must be positive"));
    }
    let ev = kernel_symbols(xi1, xi2, t, p)?;
    let region = classify_region(xi1, xi2, p)?;
    let mut holds = [true; 5];
    let mut ratios = [0.0; 5];
    for k in 0..5 {
        let family = EnvelopeFamily::for_kernel(region, k).expect("nonzero frequency");
        let r = if t == 0.0 {
            // Envelopes at t = 0 reduce to C (diagonal) or 0 (coupling).
            let mag = ev.k[k].norm();
            match family {
                EnvelopeFamily::S1Coupling => {
                    if mag == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
                _ => envelope_ratio(family, &ev, k, p, c0),
            }
        } else {
            envelope_ratio(family, &ev, k, p, c0)
        };
        ratios[k] = r;
        holds[k] = r <= big_c;
    }
    Ok(EnvelopeCheck {
        region,
        holds,
        ratios,
    })
}

/// Sampling lattice for envelope fits: geometric in `ξ₁`, `ξ₂` and `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeLattice {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub t: Vec<f64>,
}

/// `n` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

impl EnvelopeLattice {
    pub fn geometric(xi_range: (f64, f64), n_xi: usize, t_range: (f64, f64), n_t: usize) -> Self {
        EnvelopeLattice {
            xi1: geomspace(xi_range.0, xi_range.1, n_xi),
            xi2: geomspace(xi_range.0, xi_range.1, n_xi),
            t: geomspace(t_range.0, t_range.1, n_t),
        }
    }

    /// A lattice containing every point of `self` plus the geometric
    /// midpoints between neighbours.
    pub fn refined(&self) -> Self {
        fn refine(v: &[f64]) -> Vec<f64> {
            let mut out = Vec::with_capacity(2 * v.len());
            for w in v.windows(2) {
                out.push(w[0]);
                out.push((w[0] * w[1]).sqrt());
            }
            out.extend(v.last());
            out
        }
        EnvelopeLattice {
            xi1: refine(&self.xi1),
            xi2: refine(&self.xi2),
            t: refine(&self.t),
        }
    }

    pub fn len(&self) -> usize {
        self.xi1.len() * self.xi2.len() * self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fitted envelope constants for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub family: EnvelopeFamily,
    /// Fitted constant `C`.
    pub c: f64,
    /// Fitted rate `c₀` (unused by `S2Diagonal`).
    pub c0: f64,
    /// Largest ratio `|K| / shape` over the fit lattice at the chosen `c₀`.
    pub max_ratio: f64,
    /// Lattice points that fell in the family's region.
    pub samples: usize,
}

/// Options for [`fit_envelopes`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Candidate rates, tried from largest to smallest.
    pub c0_candidates: Vec<f64>,
    /// Largest acceptable constant.
    pub c_cap: f64,
    /// Multiplicative margin between the sampled maximum ratio and `C`.
    pub margin: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            c0_candidates: (0..=14).map(|k| 0.5f64.powi(k)).collect(),
            c_cap: 1e3,
            margin: 1.25,
        }
    }
}

fn lattice_evals(lattice: &EnvelopeLattice, p: &Params) -> Result<Vec<(KernelEval, Region)>> {
    let mut out = Vec::with_capacity(lattice.len());
    for &a in &lattice.xi1 {
        for &b in &lattice.xi2 {
            let region = classify_region(a, b, p)?;
            for &t in &lattice.t {
                out.push((kernel_symbols(a, b, t, p)?, region));
            }
        }
    }
    Ok(out)
}

fn family_max_ratio(
    family: EnvelopeFamily,
    evals: &[(KernelEval, Region)],
    p: &Params,
    c0: f64,
) -> (f64, usize) {
    let mut max = 0.0f64;
    let mut n = 0;
    for (ev, region) in evals {
        for &k in family.kernels() {
            if EnvelopeFamily::for_kernel(*region, k) == Some(family) {
                n += 1;
                max = max.max(envelope_ratio(family, ev, k, p, c0));
            }
        }
    }
    (max, n)
}

/// Fit the smallest `C` for the largest admissible `c₀` of every family.
///
/// For each family, candidate rates are tried from large to small and the
/// first whose maximal sampled ratio (times the margin) is within the cap is
/// kept. A family with no admissible rate reports an infinite `C`.
pub fn fit_envelopes(
    lattice: &EnvelopeLattice,
    p: &Params,
    opts: &FitOptions,
) -> Result<Vec<EnvelopeFit>> {
    let evals = lattice_evals(lattice, p)?;
    let mut fits = Vec::new();
    for family in EnvelopeFamily::ALL {
        let candidates: Vec<f64> = if family.uses_c0() {
            let mut v = opts.c0_candidates.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        } else {
            vec![f64::NAN]
        };
        let mut chosen = None;
        for &c0 in &candidates {
            let (max_ratio, samples) = family_max_ratio(family, &evals, p, c0);
            let c = max_ratio * opts.margin;
            if c <= opts.c_cap || !family.uses_c0() {
                chosen = Some(EnvelopeFit {
                    family,
                    c,
                    c0,
                    max_ratio,
                    samples,
                });
                break;
            }
        }
        fits.push(chosen.unwrap_or(EnvelopeFit {
            family,
            c: f64::INFINITY,
            c0: *candidates.last().unwrap_or(&f64::NAN),
            max_ratio: f64::INFINITY,
            samples: 0,
        }));
    }
    Ok(fits)
}

/// Count lattice points where a fitted envelope is exceeded.
pub fn count_envelope_violations(
    lattice: &EnvelopeLattice,
    p: &Params,
    fits: &[EnvelopeFit],
) -> Result<Vec<(EnvelopeFamily, usize, f64)>> {
    let evals = lattice_evals(lattice, p)?;
    Ok(fits
        .iter()
        .map(|fit| {
            let mut violations = 0;
            let mut worst = 0.0f64;
            for (ev, region) in &evals {
                for &k in fit.family.kernels() {
                    if EnvelopeFamily::for_kernel(*region, k) == Some(fit.family) {
                        let r = envelope_ratio(fit.family, ev, k, p, fit.c0);
                        worst = worst.max(r / fit.c);
                        if r > fit.c {
                            violations += 1;
                        }
                    }
                }
            }
            (fit.family, violations, worst)
        })
        .collect())
}

/// Column header of the kernel table.
pub const KERNEL_TABLE_HEADER: [&str; 13] = [
    "xi1", "xi2", "t", "region", "re_l1", "im_l1", "re_l2", "im_l2", "K1", "K2", "K3", "K4", "K5",
];

/// Write kernel evaluations as CSV (real parts of `K₁…K₅`).
pub fn write_kernel_table<W: Write>(out: W, evals: &[KernelEval]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(KERNEL_TABLE_HEADER).map_err(map)?;
    for ev in evals {
        let k = ev.real();
        let row = [
            fmt_f64(ev.xi.0),
            fmt_f64(ev.xi.1),
            fmt_f64(ev.t),
            ev.region.to_string(),
            fmt_f64(ev.lambda1.re),
            fmt_f64(ev.lambda1.im),
            fmt_f64(ev.lambda2.re),
            fmt_f64(ev.lambda2.im),
            fmt_f64(k[0]),
            fmt_f64(k[1]),
            fmt_f64(k[2]),
            fmt_f64(k[3]),
            fmt_f64(k[4]),
        ];
        w.write_record(&row).map_err(map)?;
    }
    w.flush().map_err(|e| Error::io("kernel table", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Params {
        Params::new(1.0, 1.0).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn roots_examples() {
        let p = unit();
        let s3 = 3f64.sqrt() / 2.0;
        let (l1, l2) = char_roots(1.0, 0.0, &p).unwrap();
        assert!(close(l1, Complex64::new(-0.5, -s3), 1e-15));
        assert!(close(l2, Complex64::new(-0.5, s3), 1e-15));

        let (l1, l2) = char_roots(0.0, 1.0, &p).unwrap();
        assert_eq!(
            (l1, l2),
            (Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0))
        );

        let h = 2f64.sqrt() / 2.0;
        let (l1, l2) = char_roots(1.0, 1.0, &p).unwrap();
        assert!(close(l1, Complex64::new(-1.0, -h), 1e-15));
        assert!(close(l2, Complex64::new(-1.0, h), 1e-15));

        assert!(matches!(
            char_roots(0.0, 0.0, &p),
            Err(Error::ZeroFrequency)
        ));
    }

    #[test]
    fn g_examples() {
        let z = Complex64::new(0.0, 0.0);
        let (g1, g2) = g_functions(Complex64::new(-3.0, 1.0), Complex64::new(-3.0, -1.0), 0.0);
        assert_eq!((g1, g2), (z, Complex64::new(1.0, 0.0)));

        let m1 = Complex64::new(-1.0, 0.0);
        let (g1, g2) = g_functions(m1, m1, 2.0);
        let e2 = (-2f64).exp();
        assert!((g1.re - 2.0 * e2).abs() < 1e-16 && g1.im == 0.0);
        assert!((g2.re - 3.0 * e2).abs() < 1e-16);

        let (g1, g2) = g_functions(Complex64::new(-2.0, 0.0), Complex64::new(-1.0, 0.0), 1.0);
        let (ea, eb) = ((-2f64).exp(), (-1f64).exp());
        assert!((g1.re - (ea - eb) / -1.0).abs() < 1e-15);
        assert!((g2.re - (-2.0 * eb + ea) / -1.0).abs() < 1e-15);
    }

    #[test]
    fn g_branch_seam_is_smooth() {
        for &(mean, t) in &[(-0.7, 1.3), (-2.0, 0.4), (-0.01, 30.0)] {
            for &gap in &[0.5, 0.9, 1.1, 2.0] {
                // |Δλ|·t straddling the degenerate threshold
                let d = gap * DEGENERATE_EPS / t;
                let l1 = Complex64::new(mean - d / 2.0, 0.0);
                let l2 = Complex64::new(mean + d / 2.0, 0.0);
                let (g1, _) = g_functions(l1, l2, t);
                let direct = ((l1 * t).exp() - (l2 * t).exp()) / (l1 - l2);
                let series = (0.5 * (l1 + l2) * t).exp() * t;
                assert!((direct - g1).norm() <= 1e-8 * g1.norm());
                assert!((series - g1).norm() <= 1e-8 * g1.norm());
            }
        }
    }

    #[test]
    fn g2_identity_both_branches() {
        for &(l1, l2, t) in &[
            (Complex64::new(-2.0, 0.0), Complex64::new(-1.0, 0.0), 0.7),
            (Complex64::new(-1.0, -0.3), Complex64::new(-1.0, 0.3), 2.5),
            (
                Complex64::new(-1.0, 0.0),
                Complex64::new(-1.0 + 1e-9, 0.0),
                3.0,
            ),
        ] {
            let (_, g2) = g_functions(l1, l2, t);
            let (g1b, _) = g_functions(l2, l1, t);
            // G₂ is symmetric in the roots: e^{λ₂t} − λ₂G₁ gives the same value
            let alt = (l2 * t).exp() - l2 * g1b;
            assert!((g2 - alt).norm() <= 1e-10 * g2.norm());
        }
    }

    #[test]
    fn kernels_identity_at_zero_time() {
        let p = Params::new(0.3, 2.0).unwrap();
        for &(a, b) in &[(1.0, 0.0), (0.0, 2.0), (3.0, -4.0), (0.01, 50.0)] {
            let ev = kernel_symbols(a, b, 0.0, &p).unwrap();
            let want = [1.0, 0.0, 0.0, 0.0, 1.0];
            for (k, w) in ev.k.iter().zip(want) {
                assert!((k - Complex64::new(w, 0.0)).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn axis_mode_closed_form() {
        let p = unit();
        for &t in &[0.1, 1.0, 5.0] {
            let ev = kernel_symbols(0.0, 1.0, t, &p).unwrap();
            assert_eq!(ev.region, Region::Axis1);
            assert!((ev.k[3].re - ((-t).exp() - 1.0)).abs() < 1e-15);
            assert!((ev.k[4].re - 1.0).abs() < 1e-15);
            assert!((ev.k[0].re - (-t).exp()).abs() < 1e-15);
            assert_eq!(ev.lambda2, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn region_examples() {
        let p = unit();
        assert_eq!(classify_region(1.0, 1.0, &p).unwrap(), Region::S12);
        assert_eq!(classify_region(1.0, 10.0, &p).unwrap(), Region::S22);
        assert_eq!(classify_region(0.0, 1.0, &p).unwrap(), Region::S22);
        assert_eq!(classify_region(10.0, 1.0, &p).unwrap(), Region::S21);
        assert!(classify_region(0.0, 0.0, &p).is_err());
    }

    #[test]
    fn root_bound_examples() {
        let p = unit();
        assert!(verify_root_bounds(1.0, 1.0, &p).unwrap());
        assert!(verify_root_bounds(1.0, 10.0, &p).unwrap());
        let (_, l2) = char_roots(1.0, 10.0, &p).unwrap();
        assert!(l2.re <= -(100.0 + 1.0 / 101.0) / 101.0);
    }

    #[test]
    fn envelope_examples() {
        let p = unit();
        let check = verify_kernel_envelopes(1.0, 1.0, 0.0, &p, (1.0, 0.25)).unwrap();
        assert!(check.holds[0] && check.holds[4]);
        let ts: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.005).collect();
        for &t in &ts {
            let check = verify_kernel_envelopes(1.0, 1.0, t, &p, (1.0, 0.25)).unwrap();
            assert!(check.holds[1], "K2 envelope fails at t = {t}");
        }
    }

    #[test]
    fn kernel_table_has_header_and_rows() {
        let p = unit();
        let evals = vec![
            kernel_symbols(1.0, 1.0, 0.5, &p).unwrap(),
            kernel_symbols(0.0, 2.0, 0.5, &p).unwrap(),
        ];
        let mut buf = Vec::new();
        write_kernel_table(&mut buf, &evals).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("xi1,xi2,t,region"));
        assert!(lines[2].contains("AXIS1"));
    }
}
