//! Property-based invariants of the discretization, the convolution, and the
//! variational functionals.

use choquard::grid::{
    h1_seminorms, l2_inner, l2_norm_sq, make_grid, recenter, spectrum_l2_sq, Field,
};
use choquard::model::{nehari, nonlocal_term, pohozaev, Nonlinearity, ProblemSpec};
use choquard::riesz::cached_kernel;
use choquard::solver::weinstein_quotient;
use proptest::prelude::*;

fn field_2d(values: Vec<f64>) -> Field {
    let grid = make_grid(2, 8, 8.0).unwrap();
    Field::new(grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Parseval consistency: the quadrature norm equals its spectral form
    // under the chosen transform normalization.
    #[test]
    fn parseval_consistency(values in prop::collection::vec(-10.0f64..10.0, 64)) {
        let u = field_2d(values);
        let direct = l2_norm_sq(&u);
        let spectral = spectrum_l2_sq(&u);
        prop_assert!((direct - spectral).abs() <= 1e-12 * direct.abs().max(1e-300));
    }

    // Recentering is a circular shift: an exact isometry of the quadrature
    // norm and the spectral seminorms.
    #[test]
    fn recenter_is_isometric(values in prop::collection::vec(-10.0f64..10.0, 64)) {
        let u = field_2d(values);
        let (moved, _) = recenter(&u);
        // The shift permutes samples; only the summation order changes.
        let (a, b) = (l2_norm_sq(&moved), l2_norm_sq(&u));
        prop_assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-300));
        let a = h1_seminorms(&moved);
        let b = h1_seminorms(&u);
        prop_assert!((a.grad_sq - b.grad_sq).abs() <= 1e-11 * b.grad_sq.max(1e-300));
        prop_assert!((a.mass_sq - b.mass_sq).abs() <= 1e-13 * b.mass_sq.max(1e-300));
    }

    // The convolution operator is linear and self-adjoint, and maps
    // nonnegative fields to nonnegative fields.
    #[test]
    fn convolution_structure(
        f_vals in prop::collection::vec(-2.0f64..2.0, 64),
        g_vals in prop::collection::vec(-2.0f64..2.0, 64),
        a in -3.0f64..3.0,
    ) {
        let f = field_2d(f_vals);
        let g = field_2d(g_vals);
        let kernel = cached_kernel(*f.grid(), 1.0).unwrap();

        let combined = kernel.convolve(&f.axpy(a, &g).unwrap()).unwrap();
        let separate = kernel.convolve(&f).unwrap().axpy(a, &kernel.convolve(&g).unwrap()).unwrap();
        let scale = combined.max_abs().max(1.0);
        for (x, y) in combined.values().iter().zip(separate.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }

        let lhs = l2_inner(&kernel.convolve(&f).unwrap(), &g).unwrap();
        let rhs = l2_inner(&f, &kernel.convolve(&g).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-300));

        let nonneg = f.map(f64::abs);
        let out = kernel.convolve(&nonneg).unwrap();
        prop_assert!(out.values().iter().all(|&v| v >= 0.0));
    }

    // F is even, F' is odd, and F' s = sum_i p_i c_i |s|^{p_i} is positive
    // away from zero for positive coefficients.
    #[test]
    fn nonlinearity_parity(s in -50.0f64..50.0, p in 1.1f64..6.0, c in 0.1f64..10.0) {
        let nl = Nonlinearity::new(vec![(c, p)]).unwrap();
        let (f_pos, fp_pos) = nl.eval(s);
        let (f_neg, fp_neg) = nl.eval(-s);
        prop_assert_eq!(f_pos, f_neg);
        prop_assert_eq!(fp_pos, -fp_neg);
        prop_assert!(f_pos >= 0.0);
        if s != 0.0 {
            prop_assert!(fp_pos * s > 0.0);
        }
    }

    // Scalings: the nonlocal term is 2p-homogeneous, the Nehari functional
    // reduces to quad - p D for single powers, the Pohozaev derivative
    // matches its closed form, and the Weinstein quotient is amplitude
    // invariant.
    #[test]
    fn functional_scalings(
        values in prop::collection::vec(-2.0f64..2.0, 64),
        amp in 0.2f64..4.0,
    ) {
        let u = field_2d(values);
        prop_assume!(!u.is_zero());
        let p = 2.5;
        let alpha = 1.0;
        let spec = ProblemSpec::new(2, alpha, Nonlinearity::power(p).unwrap()).unwrap();

        let d = nonlocal_term(&u, &spec).unwrap();
        prop_assume!(d > 1e-12);
        let d_scaled = nonlocal_term(&u.scale(amp), &spec).unwrap();
        prop_assert!((d_scaled - amp.powf(2.0 * p) * d).abs() <= 1e-9 * d_scaled.abs());

        let quad = h1_seminorms(&u).h1_sq();
        let n_val = nehari(&u, &spec).unwrap();
        prop_assert!((n_val - (quad - p * d)).abs() <= 1e-11 * quad.max(1.0));

        let p_val = pohozaev(&u, &spec).unwrap();
        let closed = h1_seminorms(&u).mass_sq - 0.5 * (2.0 + alpha) * d;
        prop_assert!((p_val - closed).abs() <= 1e-11 * p_val.abs().max(1.0));

        let q = weinstein_quotient(&u, &spec).unwrap();
        let q_scaled = weinstein_quotient(&u.scale(amp), &spec).unwrap();
        prop_assert!((q - q_scaled).abs() <= 1e-9 * q.abs());
    }
}
