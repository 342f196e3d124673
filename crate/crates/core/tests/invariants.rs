mod common;

use common::*;
use proptest::prelude::*;
use smagflow::rhs::{ForcingMode, ForcingSpec, GradVariant, SmagorinskyParams};
use smagflow::spectral::{Grid, Transform};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn parseval_holds(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 64]), ncomp in 1usize..=4) {
        let f = noise(Grid::square(n).unwrap(), ncomp, seed);
        prop_assert!(parseval_defect(&f) <= 1e-12);
    }

    #[test]
    fn round_trip_is_identity(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 64])) {
        let f = noise(Grid::new(n, 1.0 + (seed % 7) as f64).unwrap(), 2, seed);
        prop_assert!(round_trip_defect(&f) <= 1e-12);
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32])) {
        let v = Transform::new().forward(&noise(Grid::square(n).unwrap(), 2, seed));
        prop_assert!(idempotence_defect(&v) <= 1e-14);
    }

    #[test]
    fn projection_annihilates_divergence(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32])) {
        let v = Transform::new().forward(&noise(Grid::new(n, 3.0).unwrap(), 2, seed));
        prop_assert!(divergence_ratio(&v) <= 1e-12);
    }

    #[test]
    fn bessel_norms_are_monotone(seed in any::<u64>(), s in -2.0f64..4.0, ds in 0.0f64..2.0) {
        let u = smooth_velocity(Grid::square(16).unwrap(), seed, 2.0);
        let s2 = (s + ds).min(4.0);
        prop_assert!(monotonicity_gap(&u, s, s2) >= 0.0);
    }

    #[test]
    fn derivative_sum_stays_in_bracket(seed in any::<u64>(), s in prop::sample::select(vec![1.0f64, 2.0])) {
        let u = smooth_velocity(Grid::square(32).unwrap(), seed, 3.0);
        let (ratio, c1, c2) = variant_bracket(&u, s);
        prop_assert!(c1 <= ratio * (1.0 + 1e-12) && ratio <= c2 * (1.0 + 1e-12), "{c1} {ratio} {c2}");
    }

    #[test]
    fn advection_is_energy_neutral(seed in any::<u64>(), peak in 1.0f64..6.0) {
        let u = smooth_velocity(Grid::square(32).unwrap(), seed, peak);
        prop_assert!(advection_neutrality(&u) <= 1e-10);
    }

    #[test]
    fn random_ic_draws_are_valid(seed in any::<u64>(), amp in 1e-3f64..10.0, peak in 1.0f64..8.0) {
        prop_assert!(random_ic_defect(Grid::square(32).unwrap(), seed, amp, peak) <= 1e-12);
    }

    #[test]
    fn gronwall_is_monotone_in_beta(seed in any::<u64>(), len in 2usize..64) {
        prop_assert!(gronwall_monotonicity(seed, len) >= 0.0);
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn smagorinsky_is_dissipative(
        seed in any::<u64>(),
        c_s in 0.05f64..0.4,
        strain in any::<bool>(),
        pad in prop::sample::select(vec![1.5f64, 2.0]),
    ) {
        let mut p = SmagorinskyParams::new(0.01).with_c_s(c_s);
        p.pad_factor = pad;
        if strain {
            p.grad_variant = GradVariant::StrainRate;
        }
        let u = smooth_velocity(Grid::square(32).unwrap(), seed, 2.0);
        prop_assert!(dissipativity_defect(&u, &p) <= 1e-6);
    }

    #[test]
    fn smagorinsky_is_quadratically_homogeneous(seed in any::<u64>(), lambda in 0.01f64..100.0) {
        let p = SmagorinskyParams::new(0.01);
        let u = smooth_velocity(Grid::square(32).unwrap(), seed, 3.0);
        prop_assert!(homogeneity_defect(&u, &p, lambda) <= 1e-10);
    }

    #[test]
    fn zero_c_s_is_plain_navier_stokes(seed in any::<u64>(), a in -2.0f64..2.0) {
        let g = Grid::square(32).unwrap();
        let u = smooth_velocity(g, seed, 3.0);
        let f = ForcingSpec::single(ForcingMode::shear([1, 2], a)).spectrum(&g).unwrap();
        prop_assert!(plain_ns_defect(&u, &f, 0.05) <= 1e-14);
    }

    #[test]
    fn rhs_is_solenoidal_and_real(seed in any::<u64>(), c_s in 0.0f64..0.3) {
        let g = Grid::square(32).unwrap();
        let u = smooth_velocity(g, seed, 4.0);
        let f = ForcingSpec::single(ForcingMode::shear([0, 1], 1.0)).spectrum(&g).unwrap();
        let (div, herm) = rhs_defects(&u, &f, &SmagorinskyParams::new(0.01).with_c_s(c_s));
        prop_assert!(div <= 1e-12 && herm <= 1e-14, "{div} {herm}");
    }
}

#[test]
fn gradient_matches_finite_differences_at_second_order() {
    for order in gradient_fd_orders() {
        assert!((order - 2.0).abs() <= 0.2, "observed order {order}");
    }
    assert!(gradient_layout_ok());
}
