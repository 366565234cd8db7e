use betacap::capacity::{
    cap_euclid_disk, cap_segment, discretize, disk_delta0, green_kernel, solve_equilibrium,
    CompactSetSpec,
};
use betacap::operator::{beta_for_symbol, cd_delta};
use betacap::symbols::{image_disk, pseudo_hyperbolic, series_norm, sup_norm, Primitive, Symbol};
use betacap::weights::{coef_weights, WeightSpec};
use betacap::{series_pow, PowerSeries};
use num_complex::Complex64;
use proptest::prelude::*;

fn point(max_r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max_r, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn delta_product_identity(a in 1e-4..0.9999f64, frac in 0.0..1.0f64) {
        let b = frac * (1.0 - a);
        let d = cd_delta(a, b);
        prop_assert!((d - disk_delta0(b, a)).abs() <= 1e-12);
        let product = (1.0 + a + b) * (1.0 + a - b) * (1.0 - a + b) * (1.0 - a - b);
        prop_assert!((d - product).abs() <= 1e-12);
    }

    #[test]
    fn automorphisms_preserve_pseudo_distance(z in point(0.99), w in point(0.99), a in point(0.95)) {
        let phi = Primitive::Automorphism(a);
        let lhs = pseudo_hyperbolic(phi.eval(z).unwrap(), phi.eval(w).unwrap());
        prop_assert!((lhs - pseudo_hyperbolic(z, w)).abs() <= 1e-12);
    }

    #[test]
    fn green_kernel_positive_and_symmetric(z in point(0.999), w in point(0.999)) {
        prop_assume!((z - w).norm() > 1e-9);
        let g = green_kernel(z, w);
        prop_assert!(g > 0.0);
        prop_assert!((g - green_kernel(w, z)).abs() <= 1e-12 * g.max(1.0));
    }

    #[test]
    fn disk_capacity_grows_with_radius(b in 0.0..0.5f64, r1 in 0.01..0.45f64, dr in 1e-3..0.05f64) {
        prop_assume!(b + r1 + dr < 0.999);
        prop_assert!(cap_euclid_disk(b, r1 + dr).unwrap().value > cap_euclid_disk(b, r1).unwrap().value);
    }

    #[test]
    fn segment_capacity_grows_with_length(h in 0.01..0.95f64, dh in 1e-3..0.04f64) {
        prop_assert!(cap_segment(h + dh).unwrap().value > cap_segment(h).unwrap().value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_pow_matches_pointwise(
        c in prop::collection::vec(-0.4..0.4f64, 4),
        k in 0u32..12,
        z in point(0.9),
    ) {
        let s = PowerSeries::from_real(&c, 64);
        let p = series_pow(&s, k, 64);
        // degree 3k < 64, so the truncation is exact
        let want = s.eval(z).powu(k);
        prop_assert!((p.eval(z) - want).norm() <= 1e-12 * want.norm().max(1.0));
    }

    #[test]
    fn image_disk_contains_boundary_images(a in point(0.8), r in 0.05..0.95f64, b in point(0.8)) {
        let s = Symbol::new(vec![
            Primitive::Automorphism(b),
            Primitive::Dilation(r),
            Primitive::Automorphism(a),
        ]).unwrap();
        let d = image_disk(&s).unwrap();
        for w in s.boundary_curve(256).unwrap() {
            prop_assert!(((w - d.center).norm() - d.radius).abs() <= 1e-9);
        }
    }

    #[test]
    fn power_norm_bound(
        a in 0.05..0.6f64,
        b in 0.0..0.3f64,
        alpha in 0.0..3.0f64,
    ) {
        // ‖φ^k‖ ≤ ρ^k √(1 + k²ρ⁻²) ‖φ‖ for k ≤ 50
        let s = Symbol::single(Primitive::Affine {
            a: Complex64::new(a, 0.0),
            b: Complex64::new(b, 0.0),
        }).unwrap();
        let order = 512;
        let w = coef_weights(&WeightSpec::alpha(alpha).unwrap(), order).unwrap();
        let rho = sup_norm(&s, 1024);
        let phi = s.taylor(order).unwrap();
        let base = series_norm(&phi, &w).unwrap();
        let mut pk = phi.clone();
        for k in 1..=50u32 {
            let kf = k as f64;
            let rhs = rho.powi(k as i32) * (1.0 + kf * kf / (rho * rho)).sqrt() * base;
            prop_assert!(series_norm(&pk, &w).unwrap() <= rhs * (1.0 + 1e-9), "k={}", k);
            pk = pk.mul_trunc(&phi);
        }
    }

    #[test]
    fn equilibrium_masses_form_probability(c in point(0.4), r in 0.05..0.5f64) {
        prop_assume!(c.norm() + r < 0.95);
        let set = CompactSetSpec::EuclidDisk { center: c, radius: r };
        let sol = solve_equilibrium(&discretize(&set, 64).unwrap()).unwrap();
        prop_assert!(sol.masses.iter().all(|&m| m >= 0.0));
        prop_assert!((sol.masses.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn beta_is_conformally_invariant(a in point(0.5), r in 0.3..0.6f64, b in point(0.5)) {
        // auto(a)∘dil(r)∘auto(b) maps D onto a pseudo-hyperbolic disk of radius r
        let s = Symbol::new(vec![
            Primitive::Automorphism(b),
            Primitive::Dilation(r),
            Primitive::Automorphism(a),
        ]).unwrap();
        prop_assume!(sup_norm(&s, 1024) < 0.97);
        let run = beta_for_symbol(&s, &WeightSpec::hardy(), 256, false).unwrap();
        prop_assert!((run.estimate.beta / r - 1.0).abs() <= 0.01, "beta {} vs r {}", run.estimate.beta, r);
    }
}
