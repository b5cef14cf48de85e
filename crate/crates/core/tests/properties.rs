//! Randomized invariants of the spectral layer, kernels, propagator and
//! diagnostics.

use bsq::diagnostics::{
    apply_cutoff, apply_cutoff_vector, cancellation_i1, cancellation_j1, triple_product_check,
    CutoffFilter,
};
use bsq::kernels::{char_roots, kernel_symbols, verify_root_bounds};
use bsq::linear::{propagate_exact, LinearState};
use bsq::quadrature::{norm_by_quadrature, ClosedFormSpectrum, Component, InitialSpectra};
use bsq::rng::{random_scalar, random_solenoidal, stream_rng};
use bsq::{Axis, FrequencyGrid, Params, SpectralField, VectorField};
use proptest::prelude::*;
use rand::Rng;

fn grid(n: usize) -> FrequencyGrid {
    FrequencyGrid::square(n).unwrap()
}

fn state(g: &FrequencyGrid, band: i64, seed: u64) -> (VectorField, SpectralField) {
    let mut rng = stream_rng(seed, 0);
    let u = random_solenoidal(g, band, &mut rng);
    let theta = random_scalar(g, band, &mut rng);
    (u, theta)
}

fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.axpy(-1.0, b).unwrap().l2_norm() / a.l2_norm().max(f64::MIN_POSITIVE)
}

fn params() -> impl Strategy<Value = Params> {
    (-2.0f64..2.0, -2.0f64..2.0)
        .prop_map(|(a, b)| Params::new(10f64.powf(a), 10f64.powf(b)).unwrap())
}

fn frequency() -> impl Strategy<Value = (f64, f64)> {
    (-3.0f64..3.0, -3.0f64..3.0, any::<bool>(), any::<bool>()).prop_map(|(a, b, s1, s2)| {
        let x1 = 10f64.powf(a) * if s1 { 1.0 } else { -1.0 };
        let x2 = 10f64.powf(b) * if s2 { 1.0 } else { -1.0 };
        (x1, x2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 24, 32])) {
        let g = grid(n);
        let mut rng = stream_rng(seed, 1);
        let samples: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = SpectralField::from_physical(&g, &samples).unwrap();
        let back = f.to_physical();
        let err = samples.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = samples.iter().map(|a| a * a).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-12 * norm, "round trip {}", err / norm);
    }

    #[test]
    fn plancherel(seed in any::<u64>(), band in 1i64..10) {
        let g = grid(32);
        let (_, f) = state(&g, band, seed);
        let phys: f64 = f.to_physical().iter().map(|v| v * v).sum::<f64>() * g.cell_area();
        let spec = f.aniso_norm(0.0, 0.0, Axis::X1).unwrap().powi(2);
        prop_assert!((phys - spec).abs() <= 1e-10 * spec);
    }

    #[test]
    fn leray_is_divergence_free_and_idempotent(seed in any::<u64>()) {
        let g = grid(16);
        let mut rng = stream_rng(seed, 2);
        let u1 = random_scalar(&g, 6, &mut rng);
        let u2 = random_scalar(&g, 6, &mut rng);
        let v = VectorField::new(u1, u2).unwrap();
        let p = v.leray_project();
        prop_assert!(p.max_divergence_ratio() <= 1e-12);
        let pp = p.leray_project();
        prop_assert!(rel_diff(&p.u1, &pp.u1) <= 1e-14);
        prop_assert!(rel_diff(&p.u2, &pp.u2) <= 1e-14);
    }

    #[test]
    fn derivative_commutes_with_dealias(seed in any::<u64>(), order in 1u32..4, x2 in any::<bool>()) {
        let g = grid(24);
        let (_, f) = state(&g, 12, seed);
        let ax = if x2 { Axis::X2 } else { Axis::X1 };
        let a = f.derivative(ax, order).dealias();
        let b = f.dealias().derivative(ax, order);
        prop_assert!(rel_diff(&a, &b) <= 1e-14);
        prop_assert!(rel_diff(&f.dealias(), &f.dealias().dealias()) == 0.0);
    }

    #[test]
    fn vieta_identities(p in params(), (x1, x2) in frequency()) {
        let (l1, l2) = char_roots(x1, x2, &p).unwrap();
        let b = p.damping(x1, x2);
        let c = p.stiffness(x1, x2);
        prop_assert!(((l1 + l2).re + b).abs() <= 1e-12 * b);
        prop_assert!((l1 + l2).im.abs() <= 1e-12 * b);
        prop_assert!(((l1 * l2).re - c).abs() <= 1e-12 * c);
        prop_assert!((l1 * l2).im.abs() <= 1e-12 * c);
        prop_assert!(verify_root_bounds(x1, x2, &p).unwrap());
    }

    #[test]
    fn kernels_are_real_and_identity_at_zero(p in params(), (x1, x2) in frequency(), t in 0.0f64..50.0) {
        let k0 = kernel_symbols(x1, x2, 0.0, &p).unwrap().real();
        let id = [1.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in k0.iter().zip(id) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
        let k = kernel_symbols(x1, x2, t, &p).unwrap();
        for z in k.k {
            prop_assert!(z.im.abs() <= 1e-10 * z.norm().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn cutoff_is_idempotent_and_commutes_with_propagator(
        seed in any::<u64>(), a1 in 0.1f64..2.0, a2 in 0.1f64..2.0, t in 0.0f64..3.0,
    ) {
        let g = grid(16);
        let filt = CutoffFilter::new(a1, a2).unwrap();
        let (u, theta) = state(&g, 6, seed);
        let once = apply_cutoff(&theta, &filt);
        prop_assert!(rel_diff(&once, &apply_cutoff(&once, &filt)) == 0.0);

        let p = Params::new(1.0, 1.0).unwrap();
        let s = LinearState::new(u, theta, 0.0).unwrap();
        let filtered = LinearState::new(
            apply_cutoff_vector(&s.u, &filt),
            apply_cutoff(&s.theta, &filt),
            0.0,
        )
        .unwrap();
        let a = propagate_exact(&filtered, t, &p).unwrap();
        let b = propagate_exact(&s, t, &p).unwrap();
        let b_theta = apply_cutoff(&b.theta, &filt);
        prop_assert!(a.theta.axpy(-1.0, &b_theta).unwrap().l2_norm() <= 1e-13 * b.theta.l2_norm().max(1e-300));
    }

    #[test]
    fn propagator_semigroup_and_solenoidality(seed in any::<u64>(), p in params(), t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
        let g = grid(16);
        let (u, theta) = state(&g, 6, seed);
        let s = LinearState::new(u, theta, 0.0).unwrap();
        let two = propagate_exact(&propagate_exact(&s, t1, &p).unwrap(), t2, &p).unwrap();
        let one = propagate_exact(&s, t1 + t2, &p).unwrap();
        let scale = s.l2_sq().sqrt();
        let err = (two.u.u1.axpy(-1.0, &one.u.u1).unwrap().l2_sq()
            + two.u.u2.axpy(-1.0, &one.u.u2).unwrap().l2_sq()
            + two.theta.axpy(-1.0, &one.theta).unwrap().l2_sq())
        .sqrt();
        prop_assert!(err <= 1e-8 * scale, "semigroup {}", err / scale);
        prop_assert!(one.u.max_divergence_ratio() <= 1e-10);
    }

    #[test]
    fn cancellations_vanish(seed in any::<u64>(), band in 1i64..10) {
        let g = grid(32);
        let (u, theta) = state(&g, band, seed);
        for (v, mag) in [cancellation_i1(&u, &theta).unwrap(), cancellation_j1(&u, &theta).unwrap()] {
            prop_assert!(v.abs() <= 1e-10 * mag);
        }
    }
}

/// Maximum triple-product ratio over `samples` band-limited triples.
fn triple_ratio_max(seed: u64, samples: u64) -> f64 {
    let g = grid(16);
    (0..samples)
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let band = rng.gen_range(1..6);
            let f = random_scalar(&g, band, &mut rng);
            let gg = random_scalar(&g, band, &mut rng);
            let h = random_scalar(&g, band, &mut rng);
            triple_product_check(&f, &gg, &h).unwrap()
        })
        .fold(0.0, f64::max)
}

#[test]
fn triple_product_ratio_is_stable_across_seeds() {
    let maxima: Vec<f64> = (0..4).map(|s| triple_ratio_max(s, 1000)).collect();
    let lo = maxima.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = maxima.iter().cloned().fold(0.0, f64::max);
    assert!(hi.is_finite() && lo > 0.0);
    assert!(hi <= 1.2 * lo, "maxima {maxima:?}");
}

#[test]
fn quadrature_is_self_consistent_under_tolerance_halving() {
    let p = Params::new(1.0, 1.0).unwrap();
    let init = InitialSpectra::theta_only(ClosedFormSpectrum::xi1sq_weighted());
    for which in [Component::U2, Component::Theta] {
        for t in [0.5, 10.0, 300.0] {
            let tol = 1e-6;
            let a = norm_by_quadrature(which, &init, 0.0, t, &p, tol).unwrap();
            let b = norm_by_quadrature(which, &init, 0.0, t, &p, tol / 2.0).unwrap();
            assert!(a.converged && b.converged);
            assert!(
                (a.value - b.value).abs() <= 5.0 * tol * b.value,
                "{which:?} t={t}: {} vs {}",
                a.value,
                b.value
            );
        }
    }
}
