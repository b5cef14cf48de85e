//! Linearized dynamics: exact evolution by the kernel multipliers, an
//! independent per-mode RK4 oracle, the Duhamel forcing term, and the
//! second-order wave-equation residual.

use std::io::{Read, Write};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{char_roots, g_functions, kernel_symbols, KernelEval, Params};
use crate::spectral::{FrequencyGrid, SpectralField, VectorField};

/// Velocity and temperature of the linearized system at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearState {
    pub u: VectorField,
    pub theta: SpectralField,
    pub t: f64,
}

impl LinearState {
    pub fn new(u: VectorField, theta: SpectralField, t: f64) -> Result<Self> {
        if u.grid() != theta.grid() {
            return Err(Error::GridMismatch("velocity and temperature"));
        }
        Ok(LinearState { u, theta, t })
    }

    pub fn zeros(grid: &FrequencyGrid) -> Self {
        LinearState {
            u: VectorField::zeros(grid),
            theta: SpectralField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.theta.grid()
    }

    /// `(û₁, û₂, θ̂)` at flat index `idx`.
    pub fn mode(&self, idx: usize) -> [Complex64; 3] {
        [
            self.u.u1.coeffs()[idx],
            self.u.u2.coeffs()[idx],
            self.theta.coeffs()[idx],
        ]
    }

    fn from_modes(grid: &FrequencyGrid, modes: Vec<[Complex64; 3]>, t: f64) -> Self {
        let mut c = [Vec::new(), Vec::new(), Vec::new()];
        for (k, col) in c.iter_mut().enumerate() {
            *col = modes.iter().map(|m| m[k]).collect();
        }
        let [a, b, th] = c;
        let f = |v| SpectralField::from_coeffs(grid, v).expect("length matches grid");
        LinearState {
            u: VectorField { u1: f(a), u2: f(b) },
            theta: f(th),
            t,
        }
    }

    /// `‖u‖² + ‖θ‖²`.
    pub fn l2_sq(&self) -> f64 {
        self.u.l2_sq() + self.theta.l2_sq()
    }
}

fn apply_kernels(ev: &KernelEval, m: [Complex64; 3]) -> [Complex64; 3] {
    let [u1, u2, th] = m;
    let k = &ev.k;
    [
        k[0] * u1 + k[1] * th,
        k[0] * u2 + k[2] * th,
        k[3] * u2 + k[4] * th,
    ]
}

fn map_modes<F>(grid: &FrequencyGrid, width: Option<usize>, f: F) -> Vec<[Complex64; 3]>
where
    F: Fn(usize) -> [Complex64; 3] + Sync + Send,
{
    match width {
        None | Some(1) => (0..grid.len()).map(&f).collect(),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .expect("thread pool");
            pool.install(|| (0..grid.len()).into_par_iter().map(&f).collect())
        }
    }
}

/// Evolve `s0` by `t` with the exact kernels. The zero mode is frozen.
pub fn propagate_exact(s0: &LinearState, t: f64, p: &Params) -> Result<LinearState> {
    propagate_exact_with(s0, t, p, None)
}

/// [`propagate_exact`] with an optional worker count. Every mode is
/// computed independently, so the result does not depend on `width`.
pub fn propagate_exact_with(
    s0: &LinearState,
    t: f64,
    p: &Params,
    width: Option<usize>,
) -> Result<LinearState> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("{t} must be nonnegative")));
    }
    let grid = s0.grid().clone();
    let modes = map_modes(&grid, width, |idx| {
        let (a, b) = grid.xi(idx);
        let m = s0.mode(idx);
        if a == 0.0 && b == 0.0 {
            return m;
        }
        let ev = kernel_symbols(a, b, t, p).expect("nonzero frequency");
        apply_kernels(&ev, m)
    });
    Ok(LinearState::from_modes(&grid, modes, s0.t + t))
}

/// Generator of the per-mode linear ODE `y' = A y`, `y = (û₁, û₂, θ̂)`.
pub fn mode_matrix(xi1: f64, xi2: f64, p: &Params) -> Matrix3<f64> {
    let r2 = xi1 * xi1 + xi2 * xi2;
    if r2 == 0.0 {
        return Matrix3::zeros();
    }
    let nu2 = p.nu * xi2 * xi2;
    Matrix3::new(
        -nu2,
        0.0,
        -xi1 * xi2 / r2,
        0.0,
        -nu2,
        xi1 * xi1 / r2,
        0.0,
        -1.0,
        -p.eta * xi1 * xi1,
    )
}

/// One classical RK4 step of `y' = A y` written as a matrix. For a linear
/// autonomous system the four stages collapse to the degree-4 Taylor
/// polynomial of `e^{hA}`, which is what this builds stage by stage.
fn rk4_step_matrix(a: &Matrix3<f64>, h: f64) -> Matrix3<f64> {
    let id = Matrix3::identity();
    let k1 = a;
    let k2 = a * (id + k1 * (h / 2.0));
    let k3 = a * (id + k2 * (h / 2.0));
    let k4 = a * (id + k3 * h);
    id + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn matrix_power(m: &Matrix3<f64>, mut n: u64) -> Matrix3<f64> {
    let mut acc = Matrix3::identity();
    let mut base = *m;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

/// RK4 propagation matrix over `t` with step `dt` (plus one shorter step
/// for the remainder).
pub fn rk4_propagator(xi1: f64, xi2: f64, p: &Params, t: f64, dt: f64) -> Matrix3<f64> {
    let a = mode_matrix(xi1, xi2, p);
    let n = (t / dt).floor();
    let rem = t - n * dt;
    let mut r = matrix_power(&rk4_step_matrix(&a, dt), n as u64);
    if rem > 1e-14 * dt.max(t) {
        r = rk4_step_matrix(&a, rem) * r;
    }
    r
}

/// Largest stable oracle step on `grid`: `0.5 / max b(ξ)`.
pub fn oracle_dt(grid: &FrequencyGrid, p: &Params) -> f64 {
    0.5 / max_damping(grid, p)
}

fn max_damping(grid: &FrequencyGrid, p: &Params) -> f64 {
    (0..grid.len())
        .map(|i| {
            let (a, b) = grid.xi(i);
            p.damping(a, b)
        })
        .fold(0.0, f64::max)
}

/// Integrate the per-mode ODE with classical RK4 at step `dt`.
///
/// Steps are applied as powers of the one-step matrix, so tiny steps over
/// long horizons stay cheap; the arithmetic is still that of `⌊t/dt⌋`
/// RK4 steps plus a remainder step.
pub fn ode_oracle(s0: &LinearState, t: f64, p: &Params, dt: f64) -> Result<LinearState> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(Error::invalid(
            "dt",
            "dt must be positive and t nonnegative",
        ));
    }
    let grid = s0.grid().clone();
    let stiff = dt * max_damping(&grid, p);
    if stiff > 1.0 {
        return Err(Error::OracleUnstable(stiff));
    }
    let modes = (0..grid.len())
        .map(|idx| {
            let (a, b) = grid.xi(idx);
            let m = s0.mode(idx);
            if a == 0.0 && b == 0.0 {
                return m;
            }
            let r = rk4_propagator(a, b, p, t, dt);
            let re = r * Vector3::new(m[0].re, m[1].re, m[2].re);
            let im = r * Vector3::new(m[0].im, m[1].im, m[2].im);
            [0, 1, 2].map(|k| Complex64::new(re[k], im[k]))
        })
        .collect();
    Ok(LinearState::from_modes(&grid, modes, s0.t + t))
}

/// [`ode_oracle`] with a step chosen per mode: `dt = z / ‖A(ξ)‖_∞`, where
/// `A(ξ)` is the mode matrix, so every mode is integrated at the same
/// dimensionless step `z ≤ 1`. The step never exceeds `t`.
pub fn ode_oracle_per_mode(s0: &LinearState, t: f64, p: &Params, z: f64) -> Result<LinearState> {
    if !(z > 0.0 && z <= 1.0) || !(t >= 0.0) {
        return Err(Error::invalid(
            "z",
            "dimensionless step must lie in (0, 1] and t be nonnegative",
        ));
    }
    let grid = s0.grid().clone();
    let modes = (0..grid.len())
        .map(|idx| {
            let (a, b) = grid.xi(idx);
            let m = s0.mode(idx);
            if (a == 0.0 && b == 0.0) || t == 0.0 {
                return m;
            }
            let norm = mode_matrix(a, b, p).abs().row_sum().max();
            let dt = (z / norm).min(t);
            let r = rk4_propagator(a, b, p, t, dt);
            let re = r * Vector3::new(m[0].re, m[1].re, m[2].re);
            let im = r * Vector3::new(m[0].im, m[1].im, m[2].im);
            [0, 1, 2].map(|k| Complex64::new(re[k], im[k]))
        })
        .collect();
    Ok(LinearState::from_modes(&grid, modes, s0.t + t))
}

/// Largest per-mode discrepancy `|y_a − y_b| / |y_ref|` over modes with a
/// nonzero reference vector.
pub fn max_mode_relative_error(a: &LinearState, b: &LinearState, reference: &LinearState) -> f64 {
    let norm = |m: [Complex64; 3]| m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (0..a.grid().len())
        .filter_map(|idx| {
            let r = norm(reference.mode(idx));
            if r == 0.0 {
                return None;
            }
            let (ma, mb) = (a.mode(idx), b.mode(idx));
            let d = norm([0, 1, 2].map(|k| ma[k] - mb[k]));
            Some(d / r)
        })
        .fold(0.0, f64::max)
}

/// Quadrature weights on `n` uniform samples with spacing `h`: composite
/// Simpson, closed by a 3/8 panel when the interval count is odd.
pub fn simpson_weights(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::MeshTooCoarse {
            samples: n,
            required: 3,
        });
    }
    let mut w = vec![0.0; n];
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals - 3
    };
    for j in (0..simpson_end).step_by(2) {
        w[j] += h / 3.0;
        w[j + 1] += 4.0 * h / 3.0;
        w[j + 2] += h / 3.0;
    }
    if simpson_end < intervals {
        let j = simpson_end;
        for (k, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[j + k] += 3.0 * h / 8.0 * c;
        }
    }
    Ok(w)
}

/// `∫₀ᵗ G₁(t − τ) F(τ) dτ` for one mode, `F` sampled uniformly on `[0, t]`.
pub fn duhamel_scalar(
    lambda1: Complex64,
    lambda2: Complex64,
    samples: &[Complex64],
    t: f64,
) -> Result<Complex64> {
    let n = samples.len();
    let w = simpson_weights(n, if n > 1 { t / (n - 1) as f64 } else { 0.0 })?;
    let h = t / (n - 1) as f64;
    Ok(samples
        .iter()
        .zip(&w)
        .enumerate()
        .map(|(j, (f, wj))| g_functions(lambda1, lambda2, t - j as f64 * h).0 * *f * *wj)
        .sum())
}

/// The Duhamel term `∫₀ᵗ G₁(t − τ) F(τ) dτ`, mode by mode, for a forcing
/// sampled at `τⱼ = j t / (N − 1)`. The zero mode returns zero.
pub fn duhamel_apply(forcing: &[SpectralField], t: f64, p: &Params) -> Result<SpectralField> {
    let n = forcing.len();
    if n < 3 {
        return Err(Error::MeshTooCoarse {
            samples: n,
            required: 3,
        });
    }
    let grid = forcing[0].grid().clone();
    for f in forcing {
        forcing[0].check_grid(f)?;
    }
    let h = t / (n - 1) as f64;
    let w = simpson_weights(n, h)?;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let (a, b) = grid.xi(idx);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let (l1, l2) = char_roots(a, b, p)?;
        *o = forcing
            .iter()
            .zip(&w)
            .enumerate()
            .map(|(j, (f, wj))| g_functions(l1, l2, t - j as f64 * h).0 * f.coeffs()[idx] * *wj)
            .sum();
    }
    SpectralField::from_coeffs(&grid, out)
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::MeshTooCoarse {
            samples: times.len(),
            required: 3,
        });
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::NonUniformSpacing { index: 0 });
    }
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs() * 1e-6) {
            return Err(Error::NonUniformSpacing { index: i });
        }
    }
    Ok(dt)
}

/// Largest L² norm over interior snapshots of `f'' + b f' + c f`, central
/// differences in time, for one scalar component sampled at `times`.
pub fn wave_residual_series(fields: &[&SpectralField], times: &[f64], p: &Params) -> Result<f64> {
    if fields.len() != times.len() {
        return Err(Error::invalid("times", "one time per snapshot"));
    }
    let dt = check_uniform(times)?;
    let grid = fields[0].grid().clone();
    let coef: Vec<(f64, f64)> = (0..grid.len())
        .map(|i| {
            let (a, b) = grid.xi(i);
            if a == 0.0 && b == 0.0 {
                (0.0, 0.0)
            } else {
                (p.damping(a, b), p.stiffness(a, b))
            }
        })
        .collect();
    let mut worst = 0.0f64;
    for j in 1..fields.len() - 1 {
        let (fm, f0, fp) = (
            fields[j - 1].coeffs(),
            fields[j].coeffs(),
            fields[j + 1].coeffs(),
        );
        let r: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                let (b, c) = coef[i];
                (fp[i] - 2.0 * f0[i] + fm[i]) / (dt * dt)
                    + (fp[i] - fm[i]) * (b / (2.0 * dt))
                    + f0[i] * c
            })
            .collect();
        worst = worst.max(SpectralField::from_coeffs(&grid, r)?.l2_norm());
    }
    Ok(worst)
}

/// Wave-equation residual of a state trajectory: every component of the
/// linear solution obeys `f'' + b f' + c f = 0`. Returns the largest
/// interior-snapshot residual norm over `u₁`, `u₂` and `θ` together.
pub fn wave_residual(trajectory: &[LinearState], p: &Params) -> Result<f64> {
    let times: Vec<f64> = trajectory.iter().map(|s| s.t).collect();
    let comps: [fn(&LinearState) -> &SpectralField; 3] = [|s| &s.u.u1, |s| &s.u.u2, |s| &s.theta];
    let mut total = 0.0f64;
    for get in comps {
        let fields: Vec<&SpectralField> = trajectory.iter().map(get).collect();
        let r = wave_residual_series(&fields, &times, p)?;
        total += r * r;
    }
    Ok(total.sqrt())
}

/// Magic bytes of the binary snapshot format.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"BSQSNAP1";

/// Write snapshots as little-endian binary.
///
/// Layout: 8-byte magic `BSQSNAP1`; `u32 n1`, `u32 n2`; `f64 l1`, `f64 l2`;
/// `u32` snapshot count; then per snapshot `f64 t` followed by the fields
/// `u1`, `u2`, `theta`, each as `n1·n2` pairs `(f64 re, f64 im)` in flat
/// index order (`idx = i1·n2 + i2`).
pub fn write_snapshots_binary<W: Write>(mut out: W, states: &[LinearState]) -> Result<()> {
    let io = |e| Error::io("snapshot stream", e);
    let grid = match states.first() {
        Some(s) => s.grid().clone(),
        None => return Err(Error::invalid("states", "nothing to write")),
    };
    out.write_all(SNAPSHOT_MAGIC).map_err(io)?;
    out.write_all(&(grid.n1() as u32).to_le_bytes())
        .map_err(io)?;
    out.write_all(&(grid.n2() as u32).to_le_bytes())
        .map_err(io)?;
    out.write_all(&grid.l1().to_le_bytes()).map_err(io)?;
    out.write_all(&grid.l2().to_le_bytes()).map_err(io)?;
    out.write_all(&(states.len() as u32).to_le_bytes())
        .map_err(io)?;
    for s in states {
        if s.grid() != &grid {
            return Err(Error::GridMismatch("snapshot series"));
        }
        out.write_all(&s.t.to_le_bytes()).map_err(io)?;
        for f in [&s.u.u1, &s.u.u2, &s.theta] {
            for z in f.coeffs() {
                out.write_all(&z.re.to_le_bytes()).map_err(io)?;
                out.write_all(&z.im.to_le_bytes()).map_err(io)?;
            }
        }
    }
    Ok(())
}

/// Read the format written by [`write_snapshots_binary`].
pub fn read_snapshots_binary<R: Read>(mut input: R) -> Result<Vec<LinearState>> {
    let io = |e| Error::io("snapshot stream", e);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Config("not a snapshot file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut u32_ = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut b4).map_err(io)?;
        Ok(u32::from_le_bytes(b4))
    };
    let n1 = u32_(&mut input)? as usize;
    let n2 = u32_(&mut input)? as usize;
    let mut f64_ = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut b8).map_err(io)?;
        Ok(f64::from_le_bytes(b8))
    };
    let l1 = f64_(&mut input)?;
    let l2 = f64_(&mut input)?;
    input.read_exact(&mut b4).map_err(io)?;
    let count = u32::from_le_bytes(b4) as usize;
    let grid = FrequencyGrid::new(n1, n2, l1, l2)?;
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        let t = f64_(&mut input)?;
        let mut fields = Vec::with_capacity(3);
        for _ in 0..3 {
            let mut c = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() {
                let re = f64_(&mut input)?;
                let im = f64_(&mut input)?;
                c.push(Complex64::new(re, im));
            }
            fields.push(SpectralField::from_coeffs(&grid, c)?);
        }
        let theta = fields.pop().expect("three fields");
        let u2 = fields.pop().expect("three fields");
        let u1 = fields.pop().expect("three fields");
        states.push(LinearState::new(VectorField { u1, u2 }, theta, t)?);
    }
    Ok(states)
}

/// Write snapshots as CSV with columns `t,field,m1,m2,re,im`, one row per
/// nonzero coefficient.
pub fn write_snapshots_csv<W: Write>(out: W, states: &[LinearState]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(["t", "field", "m1", "m2", "re", "im"])
        .map_err(map)?;
    for s in states {
        let grid = s.grid();
        for (name, f) in [("u1", &s.u.u1), ("u2", &s.u.u2), ("theta", &s.theta)] {
            for (idx, z) in f.coeffs().iter().enumerate() {
                if *z == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (m1, m2) = grid.mode(idx);
                w.write_record(&[
                    s.t.to_string(),
                    name.to_string(),
                    m1.to_string(),
                    m2.to_string(),
                    z.re.to_string(),
                    z.im.to_string(),
                ])
                .map_err(map)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("snapshot csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit() -> Params {
        Params::new(1.0, 1.0).unwrap()
    }

    fn axis_state(grid: &FrequencyGrid, u2: Complex64, th: Complex64) -> LinearState {
        let z = SpectralField::zeros(grid);
        LinearState::new(
            VectorField::new(z.clone(), SpectralField::single_mode(grid, 0, 1, u2)).unwrap(),
            SpectralField::single_mode(grid, 0, 1, th),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let g = FrequencyGrid::square(8).unwrap();
        let s = axis_state(&g, c(0.3, -0.1), c(1.0, 0.2));
        let out = propagate_exact(&s, 0.0, &unit()).unwrap();
        assert!(max_mode_relative_error(&out, &s, &s) < 1e-14);
    }

    #[test]
    fn axis_temperature_is_frozen() {
        let g = FrequencyGrid::square(8).unwrap();
        let s = axis_state(&g, c(0.0, 0.0), c(1.0, 0.0));
        let out = propagate_exact(&s, 2.5, &unit()).unwrap();
        assert_eq!(out.u.u2.coeff(0, 1), c(0.0, 0.0));
        assert!((out.theta.coeff(0, 1) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn oracle_axis_closed_form() {
        let g = FrequencyGrid::square(8).unwrap();
        let p = unit();
        let s = axis_state(&g, c(1.0, 0.0), c(0.0, 0.0));
        let t = 1.3;
        let out = ode_oracle(&s, t, &p, 1e-3).unwrap();
        assert!((out.u.u2.coeff(0, 1).re - (-t).exp()).abs() < 1e-12);
        assert!((out.theta.coeff(0, 1).re - ((-t).exp() - 1.0)).abs() < 1e-12);
        let s = axis_state(&g, c(0.0, 0.0), c(1.0, 0.0));
        let out = ode_oracle(&s, t, &p, 1e-2).unwrap();
        assert_eq!(out.u.u2.coeff(0, 1), c(0.0, 0.0));
        assert_eq!(out.theta.coeff(0, 1), c(1.0, 0.0));
    }

    #[test]
    fn oracle_rejects_unstable_step() {
        let g = FrequencyGrid::square(16).unwrap();
        let s = LinearState::zeros(&g);
        assert!(matches!(
            ode_oracle(&s, 1.0, &unit(), 0.5),
            Err(Error::OracleUnstable(_))
        ));
    }

    #[test]
    fn rk4_matrix_matches_explicit_stages() {
        let p = Params::new(0.4, 1.7).unwrap();
        let a = mode_matrix(1.0, -2.0, &p);
        let h = 0.05;
        let y0 = Vector3::new(0.3, -1.0, 0.8);
        let mut y = y0;
        for _ in 0..7 {
            let k1 = a * y;
            let k2 = a * (y + k1 * (h / 2.0));
            let k3 = a * (y + k2 * (h / 2.0));
            let k4 = a * (y + k3 * h);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        let z = rk4_propagator(1.0, -2.0, &p, 7.0 * h, h) * y0;
        assert!((y - z).norm() < 1e-14);
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        for n in 3..12 {
            let h = 1.0 / (n - 1) as f64;
            let w = simpson_weights(n, h).unwrap();
            let q: f64 = (0..n).map(|j| w[j] * (j as f64 * h).powi(3)).sum();
            assert!((q - 0.25).abs() < 1e-14, "n = {n}");
        }
        assert!(matches!(
            simpson_weights(2, 1.0),
            Err(Error::MeshTooCoarse { .. })
        ));
    }

    #[test]
    fn duhamel_scalar_closed_form() {
        // ∫₀¹ (e^{-τ} − e^{-2τ}) dτ = 1/2 − e⁻¹ + e⁻²/2
        let exact = 0.5 - (-1f64).exp() + 0.5 * (-2f64).exp();
        let samples = vec![c(1.0, 0.0); 201];
        let got = duhamel_scalar(c(-2.0, 0.0), c(-1.0, 0.0), &samples, 1.0).unwrap();
        assert!((got.re - exact).abs() < 1e-10);
    }

    #[test]
    fn duhamel_zero_forcing() {
        let g = FrequencyGrid::square(8).unwrap();
        let f = vec![SpectralField::zeros(&g); 5];
        let out = duhamel_apply(&f, 1.0, &unit()).unwrap();
        assert!(out.coeffs().iter().all(|z| *z == c(0.0, 0.0)));
        assert!(duhamel_apply(&f[..2], 1.0, &unit()).is_err());
    }

    #[test]
    fn zero_trajectory_has_zero_residual() {
        let g = FrequencyGrid::square(8).unwrap();
        let traj: Vec<LinearState> = (0..4)
            .map(|j| {
                let mut s = LinearState::zeros(&g);
                s.t = j as f64 * 0.1;
                s
            })
            .collect();
        assert_eq!(wave_residual(&traj, &unit()).unwrap(), 0.0);
    }

    #[test]
    fn residual_rejects_nonuniform_mesh() {
        let g = FrequencyGrid::square(8).unwrap();
        let traj: Vec<LinearState> = [0.0, 0.1, 0.25]
            .iter()
            .map(|&t| {
                let mut s = LinearState::zeros(&g);
                s.t = t;
                s
            })
            .collect();
        assert!(matches!(
            wave_residual(&traj, &unit()),
            Err(Error::NonUniformSpacing { .. })
        ));
    }

    #[test]
    fn binary_snapshots_round_trip() {
        let g = FrequencyGrid::new(8, 4, 1.0, 2.0).unwrap();
        let s = axis_state(&g, c(0.5, 0.25), c(-1.0, 3.0));
        let s2 = propagate_exact(&s, 0.4, &unit()).unwrap();
        let mut buf = Vec::new();
        write_snapshots_binary(&mut buf, &[s.clone(), s2.clone()]).unwrap();
        assert_eq!(buf.len(), 8 + 8 + 16 + 4 + 2 * (8 + 3 * 32 * 16));
        let back = read_snapshots_binary(&buf[..]).unwrap();
        assert_eq!(back, vec![s, s2]);
    }
}
