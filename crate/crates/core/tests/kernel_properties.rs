mod common;

use common::gauss;
use proptest::prelude::*;
use stefan_core::kernel::{heat_kernel, neumann, KernelArgs};

proptest! {
    #[test]
    fn kernel_matches_independent_formula(x in -3.0f64..3.0, xi in -3.0f64..3.0, tau in 0.0f64..1.0, dt in 1e-3f64..4.0) {
        let k = heat_kernel(KernelArgs::new(x, xi, tau + dt, tau)).unwrap();
        let want = gauss(x - xi, (tau + dt) - tau);
        prop_assert!((k - want).abs() <= 1e-14 * want.max(1e-300));
    }

    #[test]
    fn kernel_symmetric_and_positive(x in -3.0f64..3.0, xi in -3.0f64..3.0, dt in 1e-3f64..4.0) {
        let a = heat_kernel(KernelArgs::new(x, xi, dt, 0.0)).unwrap();
        let b = heat_kernel(KernelArgs::new(xi, x, dt, 0.0)).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn neumann_is_reflection_sum(x in -2.0f64..2.0, xi in 0.0f64..2.0, dt in 1e-2f64..2.0) {
        let n = neumann(KernelArgs::new(x, xi, dt, 0.0)).unwrap();
        let k1 = heat_kernel(KernelArgs::new(x, xi, dt, 0.0)).unwrap();
        let k2 = heat_kernel(KernelArgs::new(-x, xi, dt, 0.0)).unwrap();
        prop_assert!((n - (k1 + k2)).abs() <= 1e-15 * n.max(1e-300));
        prop_assert_eq!(n, neumann(KernelArgs::new(-x, xi, dt, 0.0)).unwrap());
    }

    #[test]
    fn kernel_depends_only_on_elapsed_time(x in -1.0f64..1.0, xi in -1.0f64..1.0, t in 0.1f64..1.0, shift in 0.0f64..5.0) {
        let a = heat_kernel(KernelArgs::new(x, xi, t, 0.0)).unwrap();
        let b = heat_kernel(KernelArgs::new(x, xi, t + shift, shift)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }
}

#[test]
fn sup_bound_at_coincident_points() {
    for dt in [1e-4, 1e-2, 1.0] {
        let peak = heat_kernel(KernelArgs::new(0.3, 0.3, dt, 0.0)).unwrap();
        assert!((peak - 1.0 / (2.0 * (std::f64::consts::PI * dt).sqrt())).abs() < 1e-12 * peak);
        assert!(heat_kernel(KernelArgs::new(0.3, 0.35, dt, 0.0)).unwrap() < peak);
    }
}
