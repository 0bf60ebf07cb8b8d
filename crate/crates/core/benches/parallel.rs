use criterion::{criterion_group, criterion_main, Criterion};

use coifsolve::benchmarks::{convergence_study, make_problem, ErrorNorm, Overrides};
use coifsolve::galerkin::AssemblyMethod;
use coifsolve::integrator::SolverConfig;
use coifsolve::stability::{region_grid, CharacteristicPair, DEFAULT_MARGIN};
use coifsolve::toolkit::Toolkit;
use coifsolve::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn stability_grid(c: &mut Criterion) {
    let tk = Toolkit::reference(6, 7).unwrap();
    let pair = CharacteristicPair::new(&tk.weights);
    let mut g = c.benchmark_group("region_grid_81x81");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| region_grid(&pair, (-2.0, 1.0), (-2.0, 2.0), (81, 81), DEFAULT_MARGIN, exec).unwrap())
        });
    }
    g.finish();
}

fn assembly(c: &mut Criterion) {
    let tk = Toolkit::reference(6, 7).unwrap();
    let bench = make_problem("burgers_a", &Overrides::new()).unwrap();
    let mut g = c.benchmark_group("galerkin_assembly_n4");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| coifsolve::benchmarks::discretize(&bench, &tk, AssemblyMethod::default(), exec).unwrap())
        });
    }
    g.finish();
}

fn study(c: &mut Criterion) {
    let tk = Toolkit::reference(6, 7).unwrap();
    let bench = make_problem("duffing", &Overrides::new()).unwrap();
    let hs: Vec<f64> = (4..=8).map(|i| 0.5f64.powi(i)).collect();
    let cfg = SolverConfig::default();
    let mut g = c.benchmark_group("duffing_convergence_study");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| convergence_study(&bench, &tk, &hs, ErrorNorm::Nodal, 2.0, &cfg, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, stability_grid, assembly, study);
criterion_main!(benches);
