use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use proptest::prelude::*;

use coifsolve::benchmarks::{complete_elliptic_k, jacobi_cn, BurgersSeries};
use coifsolve::integrator::{wtim_integrate, OdeSystem, SeedProvider, SolverConfig};
use coifsolve::interval::{approximate, BetaMask, IntervalBasis};
use coifsolve::numeric::{poly_eval, poly_roots, solve, DenseMatrix};
use coifsolve::stability::{boundary_locus, is_stable, CharacteristicPair, StabilityClass, DEFAULT_MARGIN};
use coifsolve::toolkit::Toolkit;

fn tk6() -> &'static Toolkit {
    static T: OnceLock<Toolkit> = OnceLock::new();
    T.get_or_init(|| Toolkit::reference(6, 7).unwrap())
}

fn series() -> &'static BurgersSeries {
    static S: OnceLock<BurgersSeries> = OnceLock::new();
    S.get_or_init(|| BurgersSeries::new(10.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quintics_are_reproduced(coeffs in prop::collection::vec(-2.0f64..2.0, 6), m in 4u32..7, shift in -2i32..2) {
        let tk = tk6();
        let a = shift as f64;
        let basis = IntervalBasis::new(tk.tables.clone(), tk.ops.clone(), m, a, a + 1.0, BetaMask::all_ones(6)).unwrap();
        let f = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let samples: Vec<f64> = basis.nodes().iter().map(|&x| f(x)).collect();
        let ap = approximate(&samples, &basis).unwrap();
        for i in 0..=20 {
            let x = a + i as f64 / 20.0;
            prop_assert!((ap.eval(x).unwrap() - f(x)).abs() < 1e-8 * (1.0 + f(x).abs()));
        }
    }

    #[test]
    fn constructed_roots_are_recovered(roots in prop::collection::vec(-3.0f64..3.0, 1..7)) {
        // Build the ascending coefficients of prod (x - r).
        let mut c = vec![1.0];
        for r in &roots {
            let mut next = vec![0.0; c.len() + 1];
            for (i, v) in c.iter().enumerate() {
                next[i + 1] += v;
                next[i] -= r * v;
            }
            c = next;
        }
        let found = poly_roots(&c).unwrap();
        prop_assert_eq!(found.len(), roots.len());
        let scale: f64 = c.iter().map(|v| v.abs()).sum::<f64>() * 4f64.powi(roots.len() as i32);
        for z in &found {
            prop_assert!(poly_eval(&c, *z).norm() <= 1e-10 * scale);
        }
        for w in found.windows(2) {
            prop_assert!(w[0].re < w[1].re || (w[0].re == w[1].re && w[0].im <= w[1].im));
        }
    }

    #[test]
    fn dominant_systems_solve_to_tight_residual(n in 1usize..12, seed in prop::collection::vec(-1.0f64..1.0, 144), b in prop::collection::vec(-5.0f64..5.0, 12)) {
        let a = DenseMatrix::from_fn(n, n, |i, j| if i == j { n as f64 + 1.0 + seed[i * 12 + j] } else { seed[i * 12 + j] });
        let x = solve(&a, &b[..n]).unwrap();
        let r = a.mul_vec(&x).unwrap();
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = b[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            prop_assert!((r[i] - b[i]).abs() <= 1e-12 * (a.norm_inf() * xn + bn));
        }
    }

    #[test]
    fn stability_is_conjugate_symmetric(re in -2.0f64..1.0, im in -2.0f64..2.0) {
        let pair = CharacteristicPair::new(&tk6().weights);
        let z = Complex64::new(re, im);
        let a = is_stable(z, &pair, DEFAULT_MARGIN).unwrap();
        let b = is_stable(z.conj(), &pair, DEFAULT_MARGIN).unwrap();
        prop_assert!((a.max_modulus - b.max_modulus).abs() < 1e-8);
    }

    #[test]
    fn locus_points_have_a_unit_root(i in 1usize..255) {
        let pair = CharacteristicPair::new(&tk6().weights);
        let locus = boundary_locus(&pair, 256).unwrap();
        let v = is_stable(locus.z[i], &pair, DEFAULT_MARGIN).unwrap();
        prop_assert!(v.roots.iter().any(|r| (r.norm() - 1.0).abs() < 1e-7));
        prop_assert!(v.class != StabilityClass::Stable || v.max_modulus > 1.0 - 1e-7);
    }

    #[test]
    fn cn_is_even_periodic_and_bounded(u in -20.0f64..20.0, k in 0.0f64..0.95) {
        let c = jacobi_cn(u, k).unwrap();
        prop_assert!(c.abs() <= 1.0 + 1e-15);
        prop_assert!((c - jacobi_cn(-u, k).unwrap()).abs() < 1e-13);
        let period = 4.0 * complete_elliptic_k(k).unwrap();
        prop_assert!((c - jacobi_cn(u + period, k).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn burgers_series_starts_from_sine(x in 0.0f64..1.0) {
        prop_assert!((series().eval(x, 0.0).unwrap() - (std::f64::consts::PI * x).sin()).abs() < 1e-12);
    }

    #[test]
    fn decay_is_integrated_accurately(lambda in -1.0f64..-0.05) {
        let sys = OdeSystem::new(1, Arc::new(move |_, y: &[f64]| vec![lambda * y[0]]))
            .unwrap()
            .with_seeds(SeedProvider::Exact(Arc::new(move |y0, n| (0..n).map(|i| vec![y0[0] * lambda.powi(i as i32)]).collect())));
        let traj = wtim_integrate(&sys, &tk6().weights, &[1.0], 0.05, 20, &SolverConfig::default()).unwrap();
        prop_assert!((traj.final_state()[0] - lambda.exp()).abs() < 1e-9);
    }
}
