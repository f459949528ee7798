use approx::assert_relative_eq;
use proptest::prelude::*;

use nlplap::energy::{energy_gradient, nonlocal_energy, nonlocal_form, objective, QuadratureScheme, Region, ScalarField};
use nlplap::kernel::{angular_average, c_n};
use nlplap::{Coefficient, Domain, Grid, Kernel, KernelFamily};

fn family() -> impl Strategy<Value = KernelFamily> {
    prop_oneof![Just(KernelFamily::Constant), Just(KernelFamily::Hat), Just(KernelFamily::TruncatedQuadratic)]
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.5), Just(2.0), Just(3.0), 1.2..4.0f64]
}

fn unit_grid(n: usize, delta: f64) -> (Domain, Grid) {
    let d = Domain::unit(1).unwrap();
    let g = Grid::build(&d, &[n], delta).unwrap();
    (d, g)
}

/// Random nodal values drawn from a seed, one per node.
fn values(len: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn midpoint_is_symmetric(a in 0.5..3.0f64, b in -0.4..0.4f64, x in -0.2..1.2f64, y in -0.2..1.2f64) {
        let d = Domain::unit(1).unwrap();
        let h = Coefficient::parse(&d, &format!("affine:{a},{b}")).unwrap();
        prop_assert_eq!(h.midpoint(&[x], &[y]), h.midpoint(&[y], &[x]));
    }

    #[test]
    fn coefficient_within_bounds_and_zero_outside(v1 in 0.1..5.0f64, v2 in 0.1..5.0f64, cells in 1usize..6, x in -1.0..2.0f64) {
        let d = Domain::unit(1).unwrap();
        let h = Coefficient::checkerboard(&d, v1, v2, cells).unwrap();
        let v = h.eval(&[x]);
        if d.contains_open(&[x]) {
            prop_assert!(v >= h.h_min() && v <= h.h_max());
        } else if !d.contains_closed(&[x]) {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn staircase_stays_below(a in 0.5..2.0f64, b in 0.0..1.5f64, levels in 1usize..12, x in 0.0..1.0f64) {
        let d = Domain::unit(1).unwrap();
        let h = Coefficient::parse(&d, &format!("affine:{a},{b}")).unwrap();
        let s = h.simple_approx(levels).unwrap();
        // affine h is increasing, so the lowest value on each cell is at its left edge
        prop_assert!(s.eval(&[x]) <= h.eval(&[x]) + 1e-12);
        prop_assert!(s.eval(&[x]) >= h.h_min() - 1e-12);
    }

    #[test]
    fn kernel_supported_on_ball(fam in family(), delta in 0.01..0.5f64, p in exponent(), t in 0.0..2.0f64) {
        let k = Kernel::new(fam, delta, p, 1).unwrap();
        let v = k.eval(t * delta);
        prop_assert!(v >= 0.0);
        if t >= 1.0 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn angular_average_is_rotation_invariant(theta in 0.0..std::f64::consts::TAU, p in exponent()) {
        let e = [theta.cos(), theta.sin()];
        let want = c_n(2, p).unwrap();
        assert_relative_eq!(angular_average(p, &e).unwrap(), want, max_relative = 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_properties(fam in family(), p in exponent(), seed in any::<u64>(), lambda in -3.0..3.0f64, shift in -2.0..2.0f64) {
        let (d, g) = unit_grid(60, 0.1);
        let h = Coefficient::parse(&d, "affine:1,0.5").unwrap();
        let bigger = Coefficient::parse(&d, "affine:1.2,0.7").unwrap();
        let k = Kernel::new(fam, 0.1, p, 1).unwrap();
        let q = QuadratureScheme::default();
        let u = ScalarField::from_values(&g, values(g.len(), seed)).unwrap();
        let e = nonlocal_energy(&u, &h, &k, &q, &Region::OmegaDelta).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!(nonlocal_energy(&u, &bigger, &k, &q, &Region::OmegaDelta).unwrap() >= e);
        let scaled = nonlocal_energy(&u.scaled(lambda), &h, &k, &q, &Region::OmegaDelta).unwrap();
        assert_relative_eq!(scaled, lambda.abs().powf(p) * e, max_relative = 1e-11, epsilon = 1e-300);
        let shifted_vals: Vec<f64> = u.values().iter().map(|v| v + shift).collect();
        let shifted = ScalarField::from_values(&g, shifted_vals).unwrap();
        let es = nonlocal_energy(&shifted, &h, &k, &q, &Region::OmegaDelta).unwrap();
        assert_relative_eq!(es, e, max_relative = 1e-9);
        // the form on the diagonal is the energy
        let diag = nonlocal_form(&u, &u, &h, &k, &q).unwrap();
        assert_relative_eq!(diag, e, max_relative = 1e-10);
    }

    #[test]
    fn form_is_linear_in_second_argument(p in exponent(), seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let (d, g) = unit_grid(40, 0.1);
        let h = Coefficient::constant(&d, 1.0).unwrap();
        let k = Kernel::new(KernelFamily::Hat, 0.1, p, 1).unwrap();
        let q = QuadratureScheme::default();
        let u = ScalarField::from_values(&g, values(g.len(), seed)).unwrap();
        let w1 = ScalarField::from_values(&g, values(g.len(), seed ^ 1)).unwrap();
        let w2 = ScalarField::from_values(&g, values(g.len(), seed ^ 2)).unwrap();
        let combo: Vec<f64> = w1.values().iter().zip(w2.values()).map(|(x, y)| a * x + b * y).collect();
        let wc = ScalarField::from_values(&g, combo).unwrap();
        let lhs = nonlocal_form(&u, &wc, &h, &k, &q).unwrap();
        let rhs = a * nonlocal_form(&u, &w1, &h, &k, &q).unwrap() + b * nonlocal_form(&u, &w2, &h, &k, &q).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn gradient_matches_differences(p in prop_oneof![Just(2.0), Just(3.0)], seed in any::<u64>(), node in 0usize..1000) {
        let (d, g) = unit_grid(30, 0.1);
        let h = Coefficient::parse(&d, "affine:1,1").unwrap();
        let k = Kernel::new(KernelFamily::Constant, 0.1, p, 1).unwrap();
        let q = QuadratureScheme::default();
        let u = ScalarField::x0_from_values(&g, values(g.len(), seed)).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]);
        let grad = energy_gradient(&u, &f, &h, &k, &q).unwrap();
        let free = u.free_indices();
        let i = free[node % free.len()];
        let step = 1e-5;
        let mut up = u.clone();
        up.set_free(i, u.value(i) + step);
        let mut down = u.clone();
        down.set_free(i, u.value(i) - step);
        let fd = (objective(&up, &f, &h, &k, &q).unwrap() - objective(&down, &f, &h, &k, &q).unwrap()) / (2.0 * step);
        let scale = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!((grad[i] - fd).abs() <= 1e-6 * scale.max(1e-12), "{} vs {}", grad[i], fd);
    }
}
