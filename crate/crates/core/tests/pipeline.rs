use std::sync::OnceLock;

use coifsolve::benchmarks::{make_problem, midpoint_gradient, run_benchmark, ErrorNorm, Overrides};
use coifsolve::integrator::SolverConfig;
use coifsolve::toolkit::Toolkit;

fn tk6() -> &'static Toolkit {
    static T: OnceLock<Toolkit> = OnceLock::new();
    T.get_or_init(|| Toolkit::reference(6, 7).unwrap())
}

fn with(pairs: &[(&str, f64)]) -> Overrides {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn klein_gordon_at_a_stable_step() {
    let b = make_problem("klein_gordon", &with(&[("h", 1.0 / 128.0)])).unwrap();
    let r = run_benchmark(&b, tk6(), b.discretization.h, ErrorNorm::Nodal, &SolverConfig::default(), |_, _, _, _| {}).unwrap();
    assert!(r.failure.is_none());
    assert_eq!(r.errors.len(), 6);
    for (t, e) in &r.errors {
        assert!(*e < 1e-10, "t = {t}: {e}");
    }
    assert_eq!(r.checksums_before, r.checksums_after);
}

#[test]
fn klein_gordon_default_step_reports_partial_run() {
    let b = make_problem("klein_gordon", &Overrides::new()).unwrap();
    let r = run_benchmark(&b, tk6(), b.discretization.h, ErrorNorm::Nodal, &SolverConfig::default(), |_, _, _, _| {}).unwrap();
    assert!(r.failure.is_some());
    assert!(r.error_at(1.0).unwrap() < 1e-10);
}

#[test]
fn shock_steepens_and_stays_bounded_at_a_fine_step() {
    let b = make_problem("burgers_shock", &with(&[("h", 1.0 / 1024.0), ("t_end", 0.5)])).unwrap();
    let mut g = Vec::new();
    let r = run_benchmark(&b, tk6(), b.discretization.h, ErrorNorm::Nodal, &SolverConfig::default(), |_, t, y, s| {
        if t <= 0.25 {
            g.push(midpoint_gradient(s.unwrap(), y, t).unwrap().abs());
        }
    })
    .unwrap();
    assert!(r.failure.is_none());
    assert!(r.max_abs <= 1.0 + 1e-3);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    assert!((g[0] - 2.0 * std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn burgers_a_reconstructed_error() {
    let b = make_problem("burgers_a", &Overrides::new()).unwrap();
    let norm = ErrorNorm::Reconstructed { probes: 64 };
    let r = run_benchmark(&b, tk6(), b.discretization.h, norm, &SolverConfig::default(), |_, _, _, _| {}).unwrap();
    let e = r.error_at(1.0).unwrap();
    assert!(e < 1e-7, "{e}");
}
