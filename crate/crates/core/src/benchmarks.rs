//! Benchmark problems with reference solutions and convergence-study drivers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::galerkin::{
    assemble, reconstruct, semi_discretize, AssemblyMethod, BoundaryConditions, DirichletData, LinearTerm, MatrixChecksums,
    NonlinearTerm, PdeProblem, SemiDiscreteSystem,
};
use crate::integrator::{wtim_integrate_observed, OdeSystem, SeedProvider, SolverConfig};
use crate::numeric::{factorial, fornberg_weights, loglog_slope, DenseMatrix};
use crate::toolkit::Toolkit;

pub mod special;

pub use special::{bessel_i_scaled, complete_elliptic_k, jacobi_cn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkName {
    Oscillator,
    Duffing,
    BurgersA,
    BurgersB,
    BurgersShock,
    KleinGordon,
}

impl BenchmarkName {
    pub const ALL: [BenchmarkName; 6] = [
        BenchmarkName::Oscillator,
        BenchmarkName::Duffing,
        BenchmarkName::BurgersA,
        BenchmarkName::BurgersB,
        BenchmarkName::BurgersShock,
        BenchmarkName::KleinGordon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkName::Oscillator => "oscillator",
            BenchmarkName::Duffing => "duffing",
            BenchmarkName::BurgersA => "burgers_a",
            BenchmarkName::BurgersB => "burgers_b",
            BenchmarkName::BurgersShock => "burgers_shock",
            BenchmarkName::KleinGordon => "klein_gordon",
        }
    }

    pub fn is_pde(self) -> bool {
        !matches!(self, BenchmarkName::Oscillator | BenchmarkName::Duffing)
    }
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::UnknownBenchmark(s.to_string()))
    }
}

/// Default discretization of a benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    #[serde(rename = "N")]
    pub n_coif: usize,
    #[serde(rename = "M1")]
    pub m1: usize,
    /// Spatial level for PDE benchmarks.
    pub level: Option<u32>,
    pub h: f64,
    pub t_end: f64,
    /// Times at which errors are reported.
    pub probe_times: Vec<f64>,
}

/// `u(x, t)`; ODE references ignore `x`.
pub type ReferenceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum BenchmarkKind {
    Ode { system: OdeSystem, y0: Vec<f64> },
    Pde { problem: PdeProblem },
}

#[derive(Clone)]
pub struct Benchmark {
    pub name: BenchmarkName,
    pub parameters: BTreeMap<String, f64>,
    pub reference: Option<ReferenceFn>,
    pub discretization: Discretization,
    pub kind: BenchmarkKind,
}

impl fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("parameters", &self.parameters)
            .field("reference", &self.reference.is_some())
            .field("discretization", &self.discretization)
            .finish()
    }
}

/// Parameter and discretization overrides by key: `xi`, `omega`, `eta`, `re`, `N`, `M1`, `n`,
/// `h`, `t_end`.
pub type Overrides = BTreeMap<String, f64>;

const PARAMETER_KEYS: [&str; 9] = ["xi", "omega", "eta", "re", "N", "M1", "n", "h", "t_end"];

fn take(o: &Overrides, key: &str, default: f64) -> f64 {
    o.get(key).copied().unwrap_or(default)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")))
    }
}

fn as_count(name: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e6 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidSpec(format!("{name} must be a non-negative integer, got {v}")))
    }
}

/// Oscillator seeds `y^(i)(0) = A^i y0`.
fn linear_seeds(a: DenseMatrix) -> SeedProvider {
    SeedProvider::Exact(Arc::new(move |y0, n| {
        let mut out = vec![y0.to_vec()];
        while out.len() < n {
            let next = a.mul_vec(out.last().unwrap()).expect("dimension");
            out.push(next);
        }
        out
    }))
}

/// Duffing seeds from the Taylor recursion `c_{n+2} = -(w^2 c_n + eta (c^3)_n) / ((n+2)(n+1))`.
fn duffing_seeds(omega: f64, eta: f64) -> SeedProvider {
    SeedProvider::Exact(Arc::new(move |y0, n| {
        let len = n + 2;
        let mut c = vec![0.0; len];
        c[0] = y0[0];
        c[1] = y0[1];
        for m in 0..len - 2 {
            // (c^3)_m by two Cauchy products.
            let sq: Vec<f64> = (0..=m).map(|i| (0..=i).map(|a| c[a] * c[i - a]).sum()).collect();
            let cube: f64 = (0..=m).map(|i| sq[i] * c[m - i]).sum();
            c[m + 2] = -(omega * omega * c[m] + eta * cube) / ((m + 2) as f64 * (m + 1) as f64);
        }
        (0..n).map(|i| vec![factorial(i) * c[i], factorial(i + 1) * c[i + 1]]).collect()
    }))
}

pub fn burgers_a_exact(re: f64) -> ReferenceFn {
    Arc::new(move |x, t| {
        let e = (-PI * PI * t / re).exp();
        2.0 * PI / re * e * (PI * x).sin() / (100.0 + e * (PI * x).cos())
    })
}

/// Cole-Hopf series solution of Burgers' equation with `u(x, 0) = sin(pi x)`.
#[derive(Clone, Debug)]
pub struct BurgersSeries {
    pub re: f64,
    /// `a_0, a_1, ...`, scaled so that the sum `a_0 + sum a_n` equals 1 at `x = 0`.
    pub coefficients: Vec<f64>,
}

impl BurgersSeries {
    pub fn new(re: f64) -> Result<Self> {
        let c = re / (2.0 * PI);
        let i = bessel_i_scaled(c)?;
        let mut coefficients = vec![i[0]];
        coefficients.extend(i.iter().skip(1).map(|v| 2.0 * v));
        Ok(Self { re, coefficients })
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        let nu = 1.0 / self.re;
        let mut num = 0.0;
        let mut den = self.coefficients[0];
        let mut converged = false;
        for (n, &a) in self.coefficients.iter().enumerate().skip(1) {
            let nf = n as f64;
            let w = a * (-nf * nf * PI * PI * nu * t).exp();
            num += nf * w * (nf * PI * x).sin();
            den += w * (nf * PI * x).cos();
            // Coefficients decay faster than geometrically once n exceeds the Bessel argument.
            if nf * w < 1e-17 * den.abs() && nf > self.re / (2.0 * PI) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::SeriesNotConverged(format!("Re = {}, t = {t}", self.re)));
        }
        Ok(2.0 * PI * nu * num / den)
    }
}

fn burgers_problem(re: f64, initial: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> PdeProblem {
    PdeProblem {
        fields: 1,
        linear_terms: vec![LinearTerm { target: 0, source: 0, order: 2, coefficient: 1.0 / re }],
        nonlinear_terms: vec![NonlinearTerm {
            target: 0,
            map: Arc::new(|u, _, _| u[0] * u[0]),
            gradient: Some(Arc::new(|u, _, _| vec![2.0 * u[0]])),
            order: 1,
            coefficient: -0.5,
        }],
        forcing: vec![None],
        initial: vec![initial],
        bc: BoundaryConditions::dirichlet(),
        dirichlet: None,
        lifting: None,
    }
}

fn klein_gordon_problem() -> PdeProblem {
    let forcing = Arc::new(|x: f64, t: f64| 6.0 * x * t * (x * x - t * t) + x.powi(6) * t.powi(6));
    let zero: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|_| 0.0);
    PdeProblem {
        fields: 2,
        linear_terms: vec![
            LinearTerm { target: 0, source: 1, order: 0, coefficient: 1.0 },
            LinearTerm { target: 1, source: 0, order: 2, coefficient: 1.0 },
        ],
        nonlinear_terms: vec![NonlinearTerm {
            target: 1,
            map: Arc::new(|u, _, _| u[0] * u[0]),
            gradient: Some(Arc::new(|u, _, _| vec![2.0 * u[0], 0.0])),
            order: 0,
            coefficient: -1.0,
        }],
        forcing: vec![None, Some(forcing)],
        initial: vec![zero.clone(), zero],
        bc: BoundaryConditions::dirichlet(),
        dirichlet: Some(vec![
            DirichletData {
                g0: Arc::new(|_| 0.0),
                g1: Arc::new(|t| t.powi(3)),
                dg0: Arc::new(|_| 0.0),
                dg1: Arc::new(|t| 3.0 * t * t),
            },
            DirichletData {
                g0: Arc::new(|_| 0.0),
                g1: Arc::new(|t| 3.0 * t * t),
                dg0: Arc::new(|_| 0.0),
                dg1: Arc::new(|t| 6.0 * t),
            },
        ]),
        lifting: None,
    }
}

/// Build a benchmark with its defaults, applying `overrides`.
pub fn make_problem(name: &str, overrides: &Overrides) -> Result<Benchmark> {
    let name: BenchmarkName = name.parse()?;
    if let Some(k) = overrides.keys().find(|k| !PARAMETER_KEYS.contains(&k.as_str())) {
        return Err(Error::InvalidSpec(format!("unknown override `{k}`")));
    }
    let mut parameters = BTreeMap::new();
    let disc = |n: f64, level: Option<f64>, h: f64, t_end: f64, probes: Vec<f64>| -> Result<Discretization> {
        Ok(Discretization {
            n_coif: as_count("N", take(overrides, "N", n))?,
            m1: as_count("M1", take(overrides, "M1", 7.0))?,
            level: match level {
                Some(l) => Some(as_count("n", take(overrides, "n", l))? as u32),
                None => None,
            },
            h: positive("h", take(overrides, "h", h))?,
            t_end: positive("t_end", take(overrides, "t_end", t_end))?,
            probe_times: probes,
        })
    };
    let bench = match name {
        BenchmarkName::Oscillator => {
            let xi = positive("xi", take(overrides, "xi", 4.0 * PI * PI))?;
            parameters.insert("xi".into(), xi);
            let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![-xi, 0.0]])?;
            let am = a.clone();
            let system = OdeSystem::linear(2, Arc::new(move |_| am.clone()), Arc::new(|_| vec![0.0, 0.0]))?
                .with_seeds(linear_seeds(a));
            let w = xi.sqrt();
            Benchmark {
                name,
                parameters,
                reference: Some(Arc::new(move |_, t| (w * t).cos())),
                discretization: disc(6.0, None, 1.0 / 16.0, 4.0, vec![4.0])?,
                kind: BenchmarkKind::Ode { system, y0: vec![1.0, 0.0] },
            }
        }
        BenchmarkName::Duffing => {
            let omega = positive("omega", take(overrides, "omega", 1.0))?;
            let eta = take(overrides, "eta", 10.0);
            if !(eta >= 0.0) || !eta.is_finite() {
                return Err(Error::InvalidSpec(format!("eta must be non-negative, got {eta}")));
            }
            parameters.insert("omega".into(), omega);
            parameters.insert("eta".into(), eta);
            let rhs = Arc::new(move |_: f64, y: &[f64]| vec![y[1], -omega * omega * y[0] - eta * y[0].powi(3)]);
            let jac = Arc::new(move |_: f64, y: &[f64]| {
                DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![-omega * omega - 3.0 * eta * y[0] * y[0], 0.0]])
                    .expect("2x2")
            });
            let system = OdeSystem::new(2, rhs)?.with_jacobian(jac).with_seeds(duffing_seeds(omega, eta));
            // x(t) = cn(sqrt(w^2 + eta) t; k), k^2 = eta / (2 (w^2 + eta)).
            let s = omega * omega + eta;
            let k = (eta / (2.0 * s)).sqrt();
            let rate = s.sqrt();
            Benchmark {
                name,
                parameters,
                reference: Some(Arc::new(move |_, t| jacobi_cn(rate * t, k).expect("modulus below 1/sqrt(2)"))),
                discretization: disc(6.0, None, 1.0 / 32.0, 2.0, vec![2.0])?,
                kind: BenchmarkKind::Ode { system, y0: vec![1.0, 0.0] },
            }
        }
        BenchmarkName::BurgersA => {
            let re = positive("re", take(overrides, "re", 200.0))?;
            parameters.insert("re".into(), re);
            let exact = burgers_a_exact(re);
            let e0 = exact.clone();
            Benchmark {
                name,
                parameters,
                reference: Some(exact),
                discretization: disc(6.0, Some(4.0), 1.0 / 64.0, 1.0, vec![1.0])?,
                kind: BenchmarkKind::Pde { problem: burgers_problem(re, Arc::new(move |x| e0(x, 0.0))) },
            }
        }
        BenchmarkName::BurgersB => {
            let re = positive("re", take(overrides, "re", 10.0))?;
            parameters.insert("re".into(), re);
            let series = Arc::new(BurgersSeries::new(re)?);
            Benchmark {
                name,
                parameters,
                reference: Some(Arc::new(move |x, t| series.eval(x, t).unwrap_or(f64::NAN))),
                discretization: disc(6.0, Some(4.0), 1.0 / 256.0, 1.0, vec![1.0])?,
                kind: BenchmarkKind::Pde { problem: burgers_problem(re, Arc::new(|x| (PI * x).sin())) },
            }
        }
        BenchmarkName::BurgersShock => {
            let re = positive("re", take(overrides, "re", 100.0))?;
            parameters.insert("re".into(), re);
            Benchmark {
                name,
                parameters,
                reference: None,
                discretization: disc(6.0, Some(6.0), 1.0 / 256.0, 1.0, vec![0.25, 0.5, 0.75, 1.0])?,
                kind: BenchmarkKind::Pde { problem: burgers_problem(re, Arc::new(|x| (2.0 * PI * x).sin())) },
            }
        }
        BenchmarkName::KleinGordon => Benchmark {
            name,
            parameters,
            reference: Some(Arc::new(|x, t| (x * t).powi(3))),
            discretization: disc(6.0, Some(4.0), 1.0 / 16.0, 5.0, vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0])?,
            kind: BenchmarkKind::Pde { problem: klein_gordon_problem() },
        },
    };
    Ok(bench)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorNorm {
    /// Largest nodal error (first state component for ODEs).
    Nodal,
    /// Largest error of the reconstructed field on a uniform probe grid.
    Reconstructed { probes: usize },
}

/// Result of one benchmark run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub benchmark: BenchmarkName,
    pub h: f64,
    pub steps: usize,
    /// `(t, error)` at each probe time that lies on the step grid.
    pub errors: Vec<(f64, f64)>,
    /// Nodal field-0 values at each probe time.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub nodes: Vec<f64>,
    pub max_abs: f64,
    pub checksums_before: Option<MatrixChecksums>,
    pub checksums_after: Option<MatrixChecksums>,
    pub numeric_seeds: bool,
    pub seed_accuracy_warning: bool,
    /// Set when the integration stopped early.
    pub failure: Option<String>,
}

impl RunReport {
    pub fn max_error(&self) -> Option<f64> {
        self.errors.iter().map(|e| e.1).reduce(f64::max)
    }

    pub fn error_at(&self, t: f64) -> Option<f64> {
        self.errors.iter().find(|e| (e.0 - t).abs() < 1e-9).map(|e| e.1)
    }
}

/// Semi-discrete system of a PDE benchmark.
pub fn discretize(bench: &Benchmark, toolkit: &Toolkit, method: AssemblyMethod, exec: Execution) -> Result<Arc<SemiDiscreteSystem>> {
    let BenchmarkKind::Pde { problem } = &bench.kind else {
        return Err(Error::Precondition(format!("{} is not a PDE benchmark", bench.name)));
    };
    let level = bench.discretization.level.expect("PDE benchmarks carry a level");
    Ok(Arc::new(assemble(problem, toolkit.tables.clone(), toolkit.ops.clone(), level, method, exec)?))
}

/// Exact transformed seeds for the Klein-Gordon benchmark: `v1 = (x^3 - x) t^3`, `v2 = 3 (x^3 - x) t^2`.
fn klein_gordon_seeds(nodes: Vec<f64>) -> SeedProvider {
    SeedProvider::Exact(Arc::new(move |y0, n| {
        let k = nodes.len();
        let mut out = vec![vec![0.0; 2 * k]; n.max(4)];
        out[0] = y0.to_vec();
        for (i, &x) in nodes.iter().enumerate() {
            let q = x * x * x - x;
            out[3][i] = 6.0 * q;
            out[2][k + i] = 6.0 * q;
        }
        out.truncate(n.max(1));
        out
    }))
}

/// Integrate a benchmark with step `h` to `t_end`, observing each step.
///
/// A run that diverges after startup returns the probes reached so far with `failure` set.
pub fn run_benchmark(
    bench: &Benchmark,
    toolkit: &Toolkit,
    h: f64,
    norm: ErrorNorm,
    cfg: &SolverConfig,
    mut observe: impl FnMut(usize, f64, &[f64], Option<&SemiDiscreteSystem>),
) -> Result<RunReport> {
    let t_end = bench.discretization.t_end;
    let steps = (t_end / h).round() as usize;
    if steps == 0 || ((steps as f64) * h - t_end).abs() > 1e-9 * t_end {
        return Err(Error::Precondition(format!("h = {h} does not divide t_end = {t_end}")));
    }
    let probe_steps: BTreeMap<usize, f64> = bench
        .discretization
        .probe_times
        .iter()
        .filter_map(|&t| {
            let j = (t / h).round();
            ((j * h - t).abs() < 1e-9 && j as usize <= steps).then_some((j as usize, t))
        })
        .collect();
    let reference = bench.reference.clone();
    let mut errors = Vec::new();
    let mut snapshots = Vec::new();
    let mut max_abs = 0.0f64;
    let mut started = false;
    let mut probe_failure = None;
    let (sys, ode, y0) = match &bench.kind {
        BenchmarkKind::Ode { system, y0 } => (None, system.clone(), y0.clone()),
        BenchmarkKind::Pde { .. } => {
            let sys = discretize(bench, toolkit, AssemblyMethod::default(), Execution::default())?;
            let mut ode = semi_discretize(&sys)?;
            if bench.name == BenchmarkName::KleinGordon {
                ode = ode.with_seeds(klein_gordon_seeds(sys.nodes.clone()));
            }
            let g = sys.g.clone();
            (Some(sys), ode, g)
        }
    };
    let before = sys.as_ref().map(|s| s.checksums());
    let outcome = wtim_integrate_observed(&ode, &toolkit.weights, &y0, h, steps, cfg, |j, t, y| {
        started = true;
        let probe = probe_steps.get(&j).copied();
        let step: Result<()> = (|| {
            match sys.as_deref() {
                None => {
                    max_abs = max_abs.max(y.iter().fold(0.0, |m, v| m.max(v.abs())));
                    if let Some(tp) = probe {
                        snapshots.push((tp, y.to_vec()));
                        if let Some(r) = &reference {
                            errors.push((tp, (y[0] - r(0.0, tp)).abs()));
                        }
                    }
                }
                Some(sys) => {
                    let nodal = sys.nodal_solution(y, t)?;
                    max_abs = max_abs.max(nodal[0].iter().fold(0.0, |m, v| m.max(v.abs())));
                    if let Some(tp) = probe {
                        if let Some(r) = &reference {
                            let e = match norm {
                                ErrorNorm::Nodal => {
                                    sys.nodes.iter().zip(&nodal[0]).map(|(&x, v)| (v - r(x, tp)).abs()).fold(0.0, f64::max)
                                }
                                ErrorNorm::Reconstructed { probes } => {
                                    let p = probes.max(1);
                                    let mut m = 0.0f64;
                                    for i in 0..=p {
                                        let x = i as f64 / p as f64;
                                        m = m.max((reconstruct(sys, y, 0, x, tp)? - r(x, tp)).abs());
                                    }
                                    m
                                }
                            };
                            errors.push((tp, e));
                        }
                        snapshots.push((tp, nodal[0].clone()));
                    }
                }
            }
            Ok(())
        })();
        if let Err(e) = step {
            probe_failure.get_or_insert(e);
        }
        observe(j, t, y, sys.as_deref());
    });
    if let Some(e) = probe_failure {
        return Err(e);
    }
    let (startup, failure) = match outcome {
        Ok(traj) => (Some(traj.startup), None),
        Err(e) if started => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(RunReport {
        benchmark: bench.name,
        h,
        steps,
        errors,
        snapshots,
        nodes: sys.as_ref().map_or_else(Vec::new, |s| s.nodes.clone()),
        max_abs,
        checksums_before: before,
        checksums_after: sys.as_ref().map(|s| s.checksums()),
        numeric_seeds: startup.as_ref().is_some_and(|s| s.numeric),
        seed_accuracy_warning: startup.as_ref().is_some_and(|s| s.accuracy_warning),
        failure,
    })
}

/// Errors over a list of step sizes and the fitted log-log slope.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorStudy {
    pub benchmark: BenchmarkName,
    pub probe_time: f64,
    pub hs: Vec<f64>,
    /// `None` where the run failed; see `failures`.
    pub errors: Vec<Option<f64>>,
    pub failures: Vec<(f64, String)>,
    /// Slope of log2(error) against log2(h) over the successful runs.
    pub slope: Option<f64>,
}

/// Run `bench` at each step size and report the error at `probe_time`.
pub fn convergence_study(
    bench: &Benchmark,
    toolkit: &Toolkit,
    hs: &[f64],
    norm: ErrorNorm,
    probe_time: f64,
    cfg: &SolverConfig,
    exec: Execution,
) -> Result<ErrorStudy> {
    if hs.len() < 3 {
        return Err(Error::Precondition("a convergence study needs at least 3 step sizes".into()));
    }
    if bench.reference.is_none() {
        return Err(Error::Precondition(format!("{} has no reference solution", bench.name)));
    }
    let mut b = bench.clone();
    b.discretization.t_end = probe_time;
    b.discretization.probe_times = vec![probe_time];
    let runs = exec.map(hs.len(), |i| run_benchmark(&b, toolkit, hs[i], norm, cfg, |_, _, _, _| {}));
    let mut errors = Vec::with_capacity(hs.len());
    let mut failures = Vec::new();
    for (h, r) in hs.iter().zip(runs) {
        match r.and_then(|rep| match rep.failure {
            Some(f) => Err(Error::Precondition(f)),
            None => Ok(rep.error_at(probe_time)),
        }) {
            Ok(Some(e)) => errors.push(Some(e)),
            Ok(None) => {
                failures.push((*h, "probe time is not on the step grid".to_string()));
                errors.push(None);
            }
            Err(e) => {
                failures.push((*h, e.to_string()));
                errors.push(None);
            }
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = hs
        .iter()
        .zip(&errors)
        .filter_map(|(h, e)| e.filter(|v| *v > 0.0 && v.is_finite()).map(|v| (*h, v)))
        .unzip();
    let slope = if xs.len() >= 2 { loglog_slope(&xs, &ys).ok() } else { None };
    Ok(ErrorStudy { benchmark: bench.name, probe_time, hs: hs.to_vec(), errors, failures, slope })
}

/// Largest residual of `u_t + u u_x - u_xx / Re` on a space-time grid, by 8th-order differences.
pub fn burgers_residual(u: &ReferenceFn, re: f64, xs: &[f64], ts: &[f64]) -> f64 {
    let hx = 1e-2;
    let ht = 1e-2;
    let central: Vec<f64> = (-4..=4).map(|i| i as f64).collect();
    let wx = fornberg_weights(0.0, &central, 2);
    let mut worst = 0.0f64;
    for &t in ts {
        // One-sided in t near the initial time.
        let shift = (-4i32).max(-(t / ht).floor() as i32);
        let tn: Vec<f64> = (shift..=shift + 8).map(|i| i as f64).collect();
        let wt = fornberg_weights(0.0, &tn, 1);
        for &x in xs {
            let ux: f64 = central.iter().zip(&wx[1]).map(|(d, w)| w * u(x + d * hx, t)).sum::<f64>() / hx;
            let uxx: f64 = central.iter().zip(&wx[2]).map(|(d, w)| w * u(x + d * hx, t)).sum::<f64>() / (hx * hx);
            let ut: f64 = tn.iter().zip(&wt[1]).map(|(d, w)| w * u(x, t + d * ht)).sum::<f64>() / ht;
            worst = worst.max((ut + u(x, t) * ux - uxx / re).abs());
        }
    }
    worst
}

/// Largest residual of `x'' + w^2 x + eta x^3` for `x(t) = cn(sqrt(w^2 + eta) t; k)`.
pub fn duffing_residual(omega: f64, eta: f64, ts: &[f64]) -> Result<f64> {
    let s = omega * omega + eta;
    let k = (eta / (2.0 * s)).sqrt();
    let x = |t: f64| jacobi_cn(s.sqrt() * t, k);
    let h = 1e-2 / s.sqrt();
    let nodes: Vec<f64> = (-4..=4).map(|i| i as f64).collect();
    let w = fornberg_weights(0.0, &nodes, 2);
    let mut worst = 0.0f64;
    for &t in ts {
        let mut xdd = 0.0;
        for (d, c) in nodes.iter().zip(&w[2]) {
            xdd += c * x(t + d * h)?;
        }
        xdd /= h * h;
        let x0 = x(t)?;
        worst = worst.max((xdd + omega * omega * x0 + eta * x0.powi(3)).abs());
    }
    Ok(worst)
}

/// Gradient `u_x(1/2, t)` of the reconstructed first field.
pub fn midpoint_gradient(sys: &SemiDiscreteSystem, u: &[f64], t: f64) -> Result<f64> {
    let k = sys.nodes_per_field();
    let (a, _) = sys.constrained.node_range();
    let mut g = 0.0;
    for i in 0..k {
        g += u[i] * sys.constrained.eval_derivative(a + i as i64, 1, 0.5, false)?;
    }
    Ok(g + sys.problem.lifting.as_ref().map_or(0.0, |l| l.space_derivative(0, 1, 0.5, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn toolkit() -> &'static Toolkit {
        static T: OnceLock<Toolkit> = OnceLock::new();
        T.get_or_init(|| Toolkit::reference(6, 7).unwrap())
    }

    #[test]
    fn names_and_overrides() {
        assert!(matches!(make_problem("heat", &Overrides::new()), Err(Error::UnknownBenchmark(_))));
        let mut o = Overrides::new();
        o.insert("bogus".into(), 1.0);
        assert!(make_problem("duffing", &o).is_err());
        let mut o = Overrides::new();
        o.insert("re".into(), -1.0);
        assert!(make_problem("burgers_a", &o).is_err());
        for b in BenchmarkName::ALL {
            let bench = make_problem(b.as_str(), &Overrides::new()).unwrap();
            assert_eq!(bench.name, b);
            assert_eq!(bench.name.is_pde(), bench.discretization.level.is_some());
        }
    }

    #[test]
    fn reference_solutions() {
        let osc = make_problem("oscillator", &Overrides::new()).unwrap();
        let r = osc.reference.unwrap();
        assert!((r(0.0, 0.25)).abs() < 1e-15);
        assert!((r(0.0, 1.0) - 1.0).abs() < 1e-14);
        let kg = make_problem("klein_gordon", &Overrides::new()).unwrap();
        assert_eq!((kg.reference.unwrap())(0.5, 2.0), 1.0);
        let a = burgers_a_exact(200.0);
        assert!((a(0.5, 0.0) - 2.0 * PI / (100.0 * 200.0)).abs() < 1e-18);
    }

    #[test]
    fn burgers_references_satisfy_the_equation() {
        let xs: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let ts: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        let a = burgers_a_exact(200.0);
        assert!(burgers_residual(&a, 200.0, &xs, &ts) < 1e-10);
        let series = Arc::new(BurgersSeries::new(10.0).unwrap());
        for &x in &xs {
            assert!((series.eval(x, 0.0).unwrap() - (PI * x).sin()).abs() < 1e-12);
        }
        let s = series.clone();
        let b: ReferenceFn = Arc::new(move |x, t| s.eval(x, t).unwrap());
        let ts: Vec<f64> = (1..=16).map(|i| i as f64 / 16.0).collect();
        let res = burgers_residual(&b, 10.0, &xs, &ts);
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn duffing_seeds_and_reference() {
        let Some(SeedProvider::Exact(f)) = Some(duffing_seeds(1.0, 10.0)) else { unreachable!() };
        let s = f(&[1.0, 0.0], 6);
        assert_eq!(s.len(), 6);
        assert_eq!(s[1], vec![0.0, -11.0]);
        assert_eq!(s[2], vec![-11.0, 0.0]);
        // x''' = -(1 + 3 eta x^2) x' = 0, x'''' = -(1 + 30) x'' = 341
        assert!((s[4][0] - 341.0).abs() < 1e-12);
        let ts: Vec<f64> = (0..20).map(|i| 0.1 + 0.2 * i as f64).collect();
        for eta in [1.0, 10.0, 100.0] {
            assert!(duffing_residual(1.0, eta, &ts).unwrap() < 1e-8 * (1.0 + eta));
        }
    }

    #[test]
    fn oscillator_runs_with_exact_seeds() {
        let b = make_problem("oscillator", &Overrides::new()).unwrap();
        let rep = run_benchmark(&b, toolkit(), 1.0 / 32.0, ErrorNorm::Nodal, &SolverConfig::default(), |_, _, _, _| {}).unwrap();
        assert!(!rep.numeric_seeds);
        let e = rep.error_at(4.0).unwrap();
        assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn study_needs_three_points() {
        let b = make_problem("oscillator", &Overrides::new()).unwrap();
        let r = convergence_study(&b, toolkit(), &[0.1, 0.05], ErrorNorm::Nodal, 1.0, &SolverConfig::default(), Execution::Sequential);
        assert!(r.is_err());
    }
}
