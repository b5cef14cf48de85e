//! Fourier representation of real fields on the periodic box
//! `[0, 2π L1) × [0, 2π L2)`.
//!
//! Coefficients are stored as samples of the unitary Fourier transform,
//! `f̂(ξ) = (1/2π) ∫ f(x) e^{-i x·ξ} dx`, taken over one period. With this
//! convention the frequency-cell weight is `1 / (L1 L2)` and the discrete
//! Plancherel identity `∫ |f|² dx = Σ |f̂(ξ)|² / (L1 L2)` is exact, so every
//! norm below is directly comparable with its counterpart on ℝ².
//!
//! Modes are laid out row-major with axis 1 (horizontal, `x₁`) as the slow
//! index. Each axis uses the standard FFT ordering `0, 1, …, n/2 − 1, −n/2,
//! …, −1`, wavenumber `index / L`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Coordinate axis: `X1` is horizontal, `X2` vertical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X1,
    X2,
}

struct FftPlans {
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
}

struct GridInner {
    n1: usize,
    n2: usize,
    l1: f64,
    l2: f64,
    k1: Vec<f64>,
    k2: Vec<f64>,
    // per-position lookup tables
    xi: Vec<(f64, f64)>,
    resolved: Vec<bool>,
    conj: Vec<usize>,
    plans: FftPlans,
}

/// Discrete wavenumber lattice on the periodic box. Cheap to clone; the FFT
/// plans are built once per grid and shared.
#[derive(Clone)]
pub struct FrequencyGrid(Arc<GridInner>);

impl fmt::Debug for FrequencyGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyGrid")
            .field("n1", &self.0.n1)
            .field("n2", &self.0.n2)
            .field("l1", &self.0.l1)
            .field("l2", &self.0.l2)
            .finish()
    }
}

impl PartialEq for FrequencyGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.n1 == other.0.n1
                && self.0.n2 == other.0.n2
                && self.0.l1 == other.0.l1
                && self.0.l2 == other.0.l2)
    }
}

/// Signed FFT index of storage position `i` on an axis with `n` points.
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl FrequencyGrid {
    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        for (name, n) in [("n1", n1), ("n2", n2)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be an even integer >= 4"
                )));
            }
        }
        for (name, l) in [("L1", l1), ("L2", l2)] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        let k1: Vec<f64> = (0..n1).map(|i| signed_index(i, n1) as f64 / l1).collect();
        let k2: Vec<f64> = (0..n2).map(|i| signed_index(i, n2) as f64 / l2).collect();
        let len = n1 * n2;
        let split = |idx: usize| (idx / n2, idx % n2);
        let xi = (0..len)
            .map(|idx| {
                let (a, b) = split(idx);
                (k1[a], k2[b])
            })
            .collect();
        let resolved = (0..len)
            .map(|idx| {
                let (a, b) = split(idx);
                3 * signed_index(a, n1).unsigned_abs() as usize <= n1
                    && 3 * signed_index(b, n2).unsigned_abs() as usize <= n2
            })
            .collect();
        let conj = (0..len)
            .map(|idx| {
                let (a, b) = split(idx);
                ((n1 - a) % n1) * n2 + (n2 - b) % n2
            })
            .collect();
        let mut planner = FftPlanner::new();
        let plans = FftPlans {
            fwd1: planner.plan_fft_forward(n1),
            inv1: planner.plan_fft_inverse(n1),
            fwd2: planner.plan_fft_forward(n2),
            inv2: planner.plan_fft_inverse(n2),
        };
        Ok(FrequencyGrid(Arc::new(GridInner {
            n1,
            n2,
            l1,
            l2,
            k1,
            k2,
            xi,
            resolved,
            conj,
            plans,
        })))
    }

    /// Square `n × n` grid on `[0, 2π)²`.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn n1(&self) -> usize {
        self.0.n1
    }

    pub fn n2(&self) -> usize {
        self.0.n2
    }

    pub fn l1(&self) -> f64 {
        self.0.l1
    }

    pub fn l2(&self) -> f64 {
        self.0.l2
    }

    pub fn len(&self) -> usize {
        self.0.n1 * self.0.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn wavenumbers1(&self) -> &[f64] {
        &self.0.k1
    }

    pub fn wavenumbers2(&self) -> &[f64] {
        &self.0.k2
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.0.n2 + i2
    }

    /// Storage position of the mode with signed indices `(m1, m2)`.
    pub fn index_of(&self, m1: i64, m2: i64) -> usize {
        let n1 = self.0.n1 as i64;
        let n2 = self.0.n2 as i64;
        self.index(m1.rem_euclid(n1) as usize, m2.rem_euclid(n2) as usize)
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.0.n2, idx % self.0.n2)
    }

    /// Signed mode indices of storage position `idx`.
    pub fn mode(&self, idx: usize) -> (i64, i64) {
        let (i1, i2) = self.split(idx);
        (signed_index(i1, self.0.n1), signed_index(i2, self.0.n2))
    }

    #[inline]
    pub fn xi(&self, idx: usize) -> (f64, f64) {
        self.0.xi[idx]
    }

    /// Storage position of the mode at `−ξ`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        self.0.conj[idx]
    }

    /// Frequency-cell weight making discrete Plancherel exact.
    pub fn cell_weight(&self) -> f64 {
        1.0 / (self.0.l1 * self.0.l2)
    }

    /// Physical cell area `Δx₁ Δx₂`.
    pub fn cell_area(&self) -> f64 {
        (2.0 * PI * self.0.l1 / self.0.n1 as f64) * (2.0 * PI * self.0.l2 / self.0.n2 as f64)
    }

    /// Physical sample coordinates of storage position `idx`.
    pub fn x(&self, idx: usize) -> (f64, f64) {
        let (i1, i2) = self.split(idx);
        (
            2.0 * PI * self.0.l1 * i1 as f64 / self.0.n1 as f64,
            2.0 * PI * self.0.l2 * i2 as f64 / self.0.n2 as f64,
        )
    }

    /// True when the mode survives the 2/3 truncation.
    #[inline]
    pub fn is_resolved(&self, idx: usize) -> bool {
        self.0.resolved[idx]
    }

    /// Largest `|ξ|` among modes kept by the 2/3 truncation.
    pub fn max_resolved_wavenumber(&self) -> f64 {
        let m1 = (self.0.n1 / 3) as f64 / self.0.l1;
        let m2 = (self.0.n2 / 3) as f64 / self.0.l2;
        (m1 * m1 + m2 * m2).sqrt()
    }

    fn forward_scale(&self) -> f64 {
        2.0 * PI * self.0.l1 * self.0.l2 / self.len() as f64
    }

    fn inverse_scale(&self) -> f64 {
        1.0 / (2.0 * PI * self.0.l1 * self.0.l2)
    }

    /// Unnormalized in-place 2D DFT of a row-major buffer.
    pub(crate) fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let (n1, n2) = (self.0.n1, self.0.n2);
        debug_assert_eq!(buf.len(), n1 * n2);
        let p = &self.0.plans;
        let (along2, along1) = if inverse {
            (&p.inv2, &p.inv1)
        } else {
            (&p.fwd2, &p.fwd1)
        };
        along2.process(buf);
        let mut tmp = vec![Complex64::new(0.0, 0.0); n1 * n2];
        transpose(buf, &mut tmp, n1, n2);
        along1.process(&mut tmp);
        transpose(&tmp, buf, n2, n1);
    }
}

/// `dst[c·rows + r] = src[r·cols + c]`, in cache-sized tiles.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const TILE: usize = 16;
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Complex Fourier coefficients of a real scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: FrequencyGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &FrequencyGrid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: &FrequencyGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} coefficients for a grid of {} modes",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Samples `f(ξ)` at every lattice frequency.
    pub fn from_fn(grid: &FrequencyGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let coeffs = (0..grid.len())
            .map(|idx| {
                let (a, b) = grid.xi(idx);
                f(a, b)
            })
            .collect();
        SpectralField {
            grid: grid.clone(),
            coeffs,
        }
    }

    /// Field with a single Hermitian pair of modes: amplitude `amp` at
    /// `(m1, m2)` and `conj(amp)` at `(−m1, −m2)`.
    pub fn single_mode(grid: &FrequencyGrid, m1: i64, m2: i64, amp: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        let idx = grid.index_of(m1, m2);
        let cidx = grid.conjugate_index(idx);
        f.coeffs[idx] = amp;
        if cidx != idx {
            f.coeffs[cidx] = amp.conj();
        } else {
            f.coeffs[idx] = Complex64::new(amp.re, 0.0);
        }
        f
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, m1: i64, m2: i64) -> Complex64 {
        self.coeffs[self.grid.index_of(m1, m2)]
    }

    /// Transform of real physical samples laid out like the coefficients.
    pub fn from_physical(grid: &FrequencyGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.fft2(&mut buf, false);
        let s = grid.forward_scale();
        buf.iter_mut().for_each(|c| *c *= s);
        let mut f = SpectralField {
            grid: grid.clone(),
            coeffs: buf,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Physical samples of the field (imaginary round-off discarded).
    pub fn to_physical(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        self.grid.fft2(&mut buf, true);
        let s = self.grid.inverse_scale();
        buf.iter().map(|c| c.re * s).collect()
    }

    /// Enforce exact Hermitian symmetry by averaging each conjugate pair.
    pub fn symmetrize(&mut self) {
        for idx in 0..self.coeffs.len() {
            let cidx = self.grid.conjugate_index(idx);
            if cidx > idx {
                let avg = 0.5 * (self.coeffs[idx] + self.coeffs[cidx].conj());
                self.coeffs[idx] = avg;
                self.coeffs[cidx] = avg.conj();
            } else if cidx == idx {
                self.coeffs[idx].im = 0.0;
            }
        }
    }

    /// Largest violation of `f̂(−ξ) = conj f̂(ξ)`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|idx| {
                (self.coeffs[idx] - self.coeffs[self.grid.conjugate_index(idx)].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Multiply each coefficient by a real symbol `m(ξ₁, ξ₂)`.
    pub fn map_real(&self, m: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (a, b) = self.grid.xi(idx);
                c * m(a, b)
            })
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Multiply each coefficient by a complex symbol.
    pub fn map_complex(&self, m: impl Fn(f64, f64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (a, b) = self.grid.xi(idx);
                c * m(a, b)
            })
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `∂^order` along `axis`: multiplier `(iξ_axis)^order`.
    pub fn derivative(&self, axis: Axis, order: u32) -> Self {
        let i_pow = Complex64::new(0.0, 1.0).powu(order);
        // Clean the unit so that i² etc. are exactly real or imaginary.
        let unit = Complex64::new(i_pow.re.round(), i_pow.im.round());
        let grid = &self.grid;
        let (n, ks) = match axis {
            Axis::X1 => (grid.n1(), grid.wavenumbers1()),
            Axis::X2 => (grid.n2(), grid.wavenumbers2()),
        };
        // Odd derivatives of the unpaired Nyquist mode would break realness.
        let nyquist = ks[n / 2];
        let odd = order % 2 == 1;
        self.map_complex(|a, b| {
            let k = match axis {
                Axis::X1 => a,
                Axis::X2 => b,
            };
            if odd && k == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                unit * k.powi(order as i32)
            }
        })
    }

    /// `Δ⁻¹` with the zero mode mapped to zero.
    pub fn inverse_laplacian(&self) -> Self {
        self.map_real(|a, b| {
            let r2 = a * a + b * b;
            if r2 == 0.0 {
                0.0
            } else {
                -1.0 / r2
            }
        })
    }

    pub fn laplacian(&self) -> Self {
        self.map_real(|a, b| -(a * a + b * b))
    }

    /// Riesz transform `R₁ = ∂₁(−Δ)^{-1/2}`, zero at `ξ = 0`.
    pub fn riesz1(&self) -> Self {
        self.map_complex(|a, b| {
            let r = (a * a + b * b).sqrt();
            if r == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, a / r)
            }
        })
    }

    /// 2/3-rule truncation: zero modes with `|index_i| > n_i / 3`.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        for idx in 0..self.coeffs.len() {
            if !self.grid.is_resolved(idx) {
                self.coeffs[idx] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Result<Self> {
        self.check_grid(other)?;
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * s)
                .collect(),
        })
    }

    pub fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("spectral field"))
        }
    }

    /// Weighted sum `Σ w(ξ) |f̂(ξ)|² · cellweight`.
    pub fn weighted_sq(&self, w: impl Fn(f64, f64) -> f64) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (a, b) = self.grid.xi(idx);
                w(a, b) * c.norm_sqr()
            })
            .sum();
        s * self.grid.cell_weight()
    }

    /// `‖f‖²_{L²}` by Plancherel.
    pub fn l2_sq(&self) -> f64 {
        self.weighted_sq(|_, _| 1.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    /// `‖f‖²_{H²} = ‖f‖² + ‖∇f‖² + ‖Δf‖²`.
    pub fn h2_sq(&self) -> f64 {
        self.weighted_sq(|a, b| {
            let r2 = a * a + b * b;
            1.0 + r2 + r2 * r2
        })
    }

    /// Real `L²` inner product `∫ f g dx`.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.check_grid(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(s * self.grid.cell_weight())
    }

    /// Anisotropic homogeneous norm
    /// `( Σ |ξ|^{2s} |ξ_axis|^{-2σ} |f̂|² · cellweight )^{1/2}`.
    ///
    /// For `σ > 0` every mode on the line `ξ_axis = 0` must be exactly zero.
    pub fn aniso_norm(&self, s: f64, sigma: f64, axis: Axis) -> Result<f64> {
        let mut acc = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let amp2 = c.norm_sqr();
            let (a, b) = self.grid.xi(idx);
            let along = match axis {
                Axis::X1 => a,
                Axis::X2 => b,
            };
            if sigma > 0.0 && along == 0.0 {
                if amp2 != 0.0 {
                    return Err(Error::SingularWeight { xi1: a, xi2: b });
                }
                continue;
            }
            if amp2 == 0.0 {
                continue;
            }
            let r2 = a * a + b * b;
            let radial = if r2 == 0.0 {
                if s > 0.0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                r2.powf(s)
            };
            let axial = if sigma == 0.0 {
                1.0
            } else {
                (along * along).powf(-sigma)
            };
            acc += radial * axial * amp2;
        }
        Ok((acc * self.grid.cell_weight()).sqrt())
    }

    /// Physical-space product, transformed back and dealiased.
    pub fn product(&self, other: &SpectralField) -> Result<Self> {
        self.check_grid(other)?;
        let a = self.to_physical();
        let b = other.to_physical();
        let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mut f = SpectralField::from_physical(&self.grid, &p)?;
        f.dealias_in_place();
        Ok(f)
    }
}

/// Two real fields in one complex inverse FFT: returns physical samples of
/// `a` and `b`. Both inputs must be Hermitian.
pub fn to_physical_pair(a: &SpectralField, b: &SpectralField) -> (Vec<f64>, Vec<f64>) {
    a.grid().inverse_pair(a.coeffs(), b.coeffs())
}

/// Inverse of [`to_physical_pair`]: transforms two real sample arrays with
/// one complex FFT and separates them by Hermitian symmetry.
pub fn from_physical_pair(
    grid: &FrequencyGrid,
    p: &[f64],
    q: &[f64],
) -> (SpectralField, SpectralField) {
    let (fp, fq) = grid.forward_pair(p, q);
    (
        SpectralField {
            grid: grid.clone(),
            coeffs: fp,
        },
        SpectralField {
            grid: grid.clone(),
            coeffs: fq,
        },
    )
}

impl FrequencyGrid {
    pub(crate) fn inverse_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
        self.fft2(&mut buf, true);
        let s = self.inverse_scale();
        buf.iter().map(|z| (z.re * s, z.im * s)).unzip()
    }

    pub(crate) fn forward_pair(&self, p: &[f64], q: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut buf: Vec<Complex64> = p
            .iter()
            .zip(q)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.fft2(&mut buf, false);
        let s = self.forward_scale();
        let (n1, n2) = (self.0.n1, self.0.n2);
        let zero = Complex64::new(0.0, 0.0);
        let mut fp = vec![zero; buf.len()];
        let mut fq = vec![zero; buf.len()];
        // f̂ = (Z(ξ) + conj Z(−ξ))/2, ĝ = (Z(ξ) − conj Z(−ξ))/(2i)
        for i1 in 0..n1 {
            let row = &buf[i1 * n2..(i1 + 1) * n2];
            let crow = &buf[((n1 - i1) % n1) * n2..][..n2];
            let (op, oq) = (&mut fp[i1 * n2..][..n2], &mut fq[i1 * n2..][..n2]);
            let hs = 0.5 * s;
            for j in 0..n2 {
                let z = row[j];
                let zc = crow[if j == 0 { 0 } else { n2 - j }];
                op[j] = Complex64::new((z.re + zc.re) * hs, (z.im - zc.im) * hs);
                oq[j] = Complex64::new((z.im + zc.im) * hs, (zc.re - z.re) * hs);
            }
        }
        (fp, fq)
    }

    pub(crate) fn xi_table(&self) -> &[(f64, f64)] {
        &self.0.xi
    }

    pub(crate) fn resolved_table(&self) -> &[bool] {
        &self.0.resolved
    }
}

/// Velocity field `(u₁, u₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VectorField {
    pub fn new(u1: SpectralField, u2: SpectralField) -> Result<Self> {
        if u1.grid() != u2.grid() {
            return Err(Error::GridMismatch("vector components"));
        }
        Ok(VectorField { u1, u2 })
    }

    pub fn zeros(grid: &FrequencyGrid) -> Self {
        VectorField {
            u1: SpectralField::zeros(grid),
            u2: SpectralField::zeros(grid),
        }
    }

    /// `u = ∇^⊥ψ = (−∂₂ψ, ∂₁ψ)`.
    pub fn from_stream(psi: &SpectralField) -> Self {
        VectorField {
            u1: psi.derivative(Axis::X2, 1).scale(-1.0),
            u2: psi.derivative(Axis::X1, 1),
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.u1.grid()
    }

    pub fn divergence(&self) -> SpectralField {
        let grid = self.grid();
        let i = Complex64::new(0.0, 1.0);
        let coeffs = (0..grid.len())
            .map(|idx| {
                let (a, b) = grid.xi(idx);
                i * (self.u1.coeffs[idx] * a + self.u2.coeffs[idx] * b)
            })
            .collect();
        SpectralField {
            grid: grid.clone(),
            coeffs,
        }
    }

    /// `ω = ∂₁u₂ − ∂₂u₁`.
    pub fn curl(&self) -> SpectralField {
        let grid = self.grid();
        let i = Complex64::new(0.0, 1.0);
        let coeffs = (0..grid.len())
            .map(|idx| {
                let (a, b) = grid.xi(idx);
                i * (self.u2.coeffs[idx] * a - self.u1.coeffs[idx] * b)
            })
            .collect();
        SpectralField {
            grid: grid.clone(),
            coeffs,
        }
    }

    /// Largest mode-wise `|ξ·û|` relative to the largest `|ξ|·|û|` of
    /// the field.
    pub fn max_divergence_ratio(&self) -> f64 {
        let grid = self.grid();
        let (mut div, mut scale) = (0.0f64, 0.0f64);
        for idx in 0..grid.len() {
            let (a, b) = grid.xi(idx);
            let (c1, c2) = (self.u1.coeffs[idx], self.u2.coeffs[idx]);
            div = div.max((c1 * a + c2 * b).norm());
            scale = scale.max((c1.norm_sqr() + c2.norm_sqr()).sqrt() * (a * a + b * b).sqrt());
        }
        if scale == 0.0 {
            0.0
        } else {
            div / scale
        }
    }

    /// Helmholtz–Leray projection `I − ξξᵀ/|ξ|²`, zero at `ξ = 0`.
    pub fn leray_project(&self) -> Self {
        let mut out = self.clone();
        out.leray_project_in_place();
        out
    }

    pub fn leray_project_in_place(&mut self) {
        let grid = self.u1.grid.clone();
        for idx in 0..grid.len() {
            let (a, b) = grid.xi(idx);
            let r2 = a * a + b * b;
            if r2 == 0.0 {
                self.u1.coeffs[idx] = Complex64::new(0.0, 0.0);
                self.u2.coeffs[idx] = Complex64::new(0.0, 0.0);
                continue;
            }
            let dot = (self.u1.coeffs[idx] * a + self.u2.coeffs[idx] * b) / r2;
            self.u1.coeffs[idx] -= dot * a;
            self.u2.coeffs[idx] -= dot * b;
        }
    }

    pub fn dealias(&self) -> Self {
        VectorField {
            u1: self.u1.dealias(),
            u2: self.u2.dealias(),
        }
    }

    pub fn l2_sq(&self) -> f64 {
        self.u1.l2_sq() + self.u2.l2_sq()
    }

    pub fn h2_sq(&self) -> f64 {
        self.u1.h2_sq() + self.u2.h2_sq()
    }

    pub fn scale(&self, s: f64) -> Self {
        VectorField {
            u1: self.u1.scale(s),
            u2: self.u2.scale(s),
        }
    }

    pub fn map_real(&self, m: impl Fn(f64, f64) -> f64 + Copy) -> Self {
        VectorField {
            u1: self.u1.map_real(m),
            u2: self.u2.map_real(m),
        }
    }
}
