//! Wavelet time-integration method: step weights, startup history and the implicit step.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coiflet::{CoifletSpec, ScalingTables};
use crate::error::{Error, Result};
use crate::interval::BoundaryOperators;
use crate::numeric::{factorial, fornberg_weights, norm_inf, DenseMatrix, Lu};

pub mod reference;

/// Step weights `Gamma_0..Gamma_{alpha2+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureWeights {
    pub spec: CoifletSpec,
    pub gamma: Vec<f64>,
}

impl QuadratureWeights {
    /// `sum_l Gamma_l l^d - 1/(d+1)` for `d = 0..=d_max`.
    pub fn moment_residuals(&self, d_max: usize) -> Vec<f64> {
        (0..=d_max)
            .map(|d| {
                let s: f64 = self
                    .gamma
                    .iter()
                    .enumerate()
                    .map(|(l, g)| g * (l as f64).powi(d as i32))
                    .sum();
                s - 1.0 / (d as f64 + 1.0)
            })
            .collect()
    }

    pub fn alpha2(&self) -> usize {
        self.gamma.len() - 2
    }
}

/// Weights from the cumulative-integral table and the right-boundary stencil.
pub fn gamma_weights(tables: &ScalingTables, ops: &BoundaryOperators) -> QuadratureWeights {
    gamma_weights_impl(tables, ops, None)
}

/// Same weights with the level-`m` scale factors kept explicitly instead of cancelled.
pub fn gamma_weights_at_level(tables: &ScalingTables, ops: &BoundaryOperators, m: u32) -> QuadratureWeights {
    gamma_weights_impl(tables, ops, Some(m))
}

fn gamma_weights_impl(tables: &ScalingTables, ops: &BoundaryOperators, level: Option<u32>) -> QuadratureWeights {
    let spec = ops.spec;
    let m1 = spec.m1 as i64;
    let (a1, a2) = (ops.alpha1, ops.alpha2);
    let integral = |k: i64| tables.integral_at(k);
    let mut gamma = Vec::with_capacity(a2 + 2);
    for l in 0..=a2 + 1 {
        let li = l as i64;
        let mut g = integral(li + m1) - integral(li + m1 - 1);
        if l <= a2 {
            for lp in 1..=a1 {
                let lambda: f64 = (0..spec.n)
                    .map(|i| {
                        let w = match level {
                            None => (lp as f64).powi(i as i32),
                            Some(m) => {
                                let s = 2f64.powi(m as i32);
                                s.powi(i as i32) * (lp as f64 / s).powi(i as i32)
                            }
                        };
                        ops.zeta_b[(i, l)] * w / factorial(i)
                    })
                    .sum();
                let lp = lp as i64;
                g += lambda * (integral(m1 - lp) - integral(m1 - 1 - lp));
            }
        }
        gamma.push(g);
    }
    QuadratureWeights { spec, gamma }
}

pub type RhsFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(f64, &[f64]) -> DenseMatrix + Send + Sync>;
/// Given `y(0)` and a count `n`, returns `y^(i)(0)` for `i = 0..n`.
pub type SeedFn = Arc<dyn Fn(&[f64], usize) -> Vec<Vec<f64>> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(f64) -> DenseMatrix + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Settings of the reference-integration seed fallback.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FallbackConfig {
    /// Sample spacing of the symmetric window; defaults to the step size.
    pub spacing: Option<f64>,
    /// Reference steps per sample spacing.
    pub substeps: usize,
    /// Window half-width in samples.
    pub half_width: usize,
}

impl Default for FallbackConfig {
    fn default() -> Self {
        Self { spacing: None, substeps: 8, half_width: 6 }
    }
}

#[derive(Clone)]
pub enum SeedProvider {
    Exact(SeedFn),
    Numeric(FallbackConfig),
    None,
}

impl std::fmt::Debug for SeedProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedProvider::Exact(_) => write!(f, "Exact"),
            SeedProvider::Numeric(c) => write!(f, "Numeric({c:?})"),
            SeedProvider::None => write!(f, "None"),
        }
    }
}

/// `y' = A(t) y + q(t)`.
#[derive(Clone)]
pub struct LinearForm {
    pub a: MatrixFn,
    pub q: VectorFn,
}

/// First-order system `y' = f(t, y)`.
#[derive(Clone)]
pub struct OdeSystem {
    pub dim: usize,
    pub rhs: RhsFn,
    pub jacobian: Option<JacobianFn>,
    pub seeds: SeedProvider,
    /// Earliest time at which `rhs` may be evaluated.
    pub t_min: f64,
    pub linear: Option<LinearForm>,
}

impl std::fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OdeSystem")
            .field("dim", &self.dim)
            .field("jacobian", &self.jacobian.is_some())
            .field("seeds", &self.seeds)
            .field("t_min", &self.t_min)
            .field("linear", &self.linear.is_some())
            .finish()
    }
}

impl OdeSystem {
    pub fn new(dim: usize, rhs: RhsFn) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("system dimension must be at least 1".into()));
        }
        Ok(Self { dim, rhs, jacobian: None, seeds: SeedProvider::None, t_min: f64::NEG_INFINITY, linear: None })
    }

    /// Linear system; `rhs` and the Jacobian are derived from `A(t)` and `q(t)`.
    pub fn linear(dim: usize, a: MatrixFn, q: VectorFn) -> Result<Self> {
        let (a1, q1, a2) = (a.clone(), q.clone(), a.clone());
        let rhs: RhsFn = Arc::new(move |t, y| {
            let mut v = a1(t).mul_vec(y).expect("linear system dimension");
            v.iter_mut().zip(q1(t)).for_each(|(x, qi)| *x += qi);
            v
        });
        let mut s = Self::new(dim, rhs)?;
        s.jacobian = Some(Arc::new(move |t, _| a2(t)));
        s.linear = Some(LinearForm { a, q });
        Ok(s)
    }

    pub fn with_jacobian(mut self, j: JacobianFn) -> Self {
        self.jacobian = Some(j);
        self
    }

    pub fn with_seeds(mut self, seeds: SeedProvider) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_t_min(mut self, t_min: f64) -> Self {
        self.t_min = t_min;
        self
    }

    pub fn eval(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        if t < self.t_min - 1e-12 {
            return Err(Error::OutsideDomain { t, t_min: self.t_min });
        }
        let v = (self.rhs)(t, y);
        if v.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, found: v.len() });
        }
        Ok(v)
    }

    pub fn jacobian_at(&self, t: f64, y: &[f64]) -> Result<DenseMatrix> {
        if let Some(j) = &self.jacobian {
            let m = j(t, y);
            if m.rows() != self.dim || m.cols() != self.dim {
                return Err(Error::LengthMismatch { expected: self.dim, found: m.rows() });
            }
            return Ok(m);
        }
        let f0 = self.eval(t, y)?;
        let mut jm = DenseMatrix::zeros(self.dim, self.dim);
        let mut z = y.to_vec();
        for c in 0..self.dim {
            let eps = 1e-7 * y[c].abs().max(1.0);
            z[c] = y[c] + eps;
            let f1 = self.eval(t, &z)?;
            for r in 0..self.dim {
                jm[(r, c)] = (f1[r] - f0[r]) / eps;
            }
            z[c] = y[c];
        }
        Ok(jm)
    }
}

/// Startup data: derivative seeds and the back-extrapolated history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartupHistory {
    /// `seeds[i] = y^(i)(0)`, `i = 0..N`.
    pub seeds: Vec<Vec<f64>>,
    /// `history[k-1] = y_{-k}`, `k = 1..=alpha2`.
    pub history: Vec<Vec<f64>>,
    pub numeric: bool,
    /// Estimated worst error of any history state caused by seed error (numeric seeds only).
    pub history_error_estimate: Option<f64>,
    /// True when the history error estimate exceeds `h^N`.
    pub accuracy_warning: bool,
}

fn taylor_history(seeds: &[Vec<f64>], h: f64, count: usize) -> Vec<Vec<f64>> {
    (1..=count)
        .map(|k| {
            let t = -(k as f64) * h;
            let mut y = vec![0.0; seeds[0].len()];
            for (i, s) in seeds.iter().enumerate() {
                let c = t.powi(i as i32) / factorial(i);
                y.iter_mut().zip(s).for_each(|(a, b)| *a += c * b);
            }
            y
        })
        .collect()
}

fn numeric_seeds(system: &OdeSystem, y0: &[f64], n: usize, delta: f64, cfg: &FallbackConfig) -> Result<Vec<Vec<f64>>> {
    let p = cfg.half_width.max(n / 2 + 1);
    let sub = cfg.substeps.max(1);
    let dt = delta / sub as f64;
    let run = |dt: f64| {
        reference::integrate(system, y0, 0.0, dt, p * sub, sub).map_err(|e| match e {
            Error::NonFinite(_) => {
                Error::NonFinite(format!("the seeding run with step {dt:e}"))
            }
            e => e,
        })
    };
    let forward = run(dt)?;
    let backward = run(-dt)?;
    let mut nodes = Vec::with_capacity(2 * p + 1);
    let mut values: Vec<&Vec<f64>> = Vec::with_capacity(2 * p + 1);
    for i in (1..=p).rev() {
        nodes.push(-(i as f64) * delta);
        values.push(&backward[i]);
    }
    nodes.push(0.0);
    values.push(&forward[0]);
    for i in 1..=p {
        nodes.push(i as f64 * delta);
        values.push(&forward[i]);
    }
    let w = fornberg_weights(0.0, &nodes, n - 1);
    let mut seeds = vec![y0.to_vec()];
    for row in w.iter().skip(1) {
        let mut d = vec![0.0; system.dim];
        for (c, v) in row.iter().zip(&values) {
            d.iter_mut().zip(v.iter()).for_each(|(a, b)| *a += c * b);
        }
        seeds.push(d);
    }
    Ok(seeds)
}

/// Derivative seeds and history states `y_{-1}..y_{-alpha2}`.
pub fn startup_history(system: &OdeSystem, y0: &[f64], h: f64, n: usize, alpha2: usize) -> Result<StartupHistory> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Precondition(format!("step size must be positive, got {h}")));
    }
    if y0.len() != system.dim {
        return Err(Error::LengthMismatch { expected: system.dim, found: y0.len() });
    }
    match &system.seeds {
        SeedProvider::Exact(f) => {
            let seeds = f(y0, n);
            if seeds.len() < n || seeds.iter().any(|s| s.len() != system.dim) {
                return Err(Error::MissingSeeds);
            }
            let seeds = seeds[..n].to_vec();
            let history = taylor_history(&seeds, h, alpha2);
            Ok(StartupHistory { seeds, history, numeric: false, history_error_estimate: None, accuracy_warning: false })
        }
        SeedProvider::Numeric(cfg) => {
            let delta = cfg.spacing.unwrap_or(h);
            let seeds = numeric_seeds(system, y0, n, delta, cfg)?;
            let check = numeric_seeds(system, y0, n, delta / 2.0, cfg)?;
            let history = taylor_history(&seeds, h, alpha2);
            let other = taylor_history(&check, h, alpha2);
            let est = history
                .iter()
                .zip(&other)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            Ok(StartupHistory {
                seeds,
                history,
                numeric: true,
                history_error_estimate: Some(est),
                accuracy_warning: est > h.powi(n as i32),
            })
        }
        SeedProvider::None => Err(Error::MissingSeeds),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplicitSolver {
    Newton,
    FixedPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_iterations: usize,
    pub solver: ImplicitSolver,
    /// Use the one-solve linear step when the system carries a linear form.
    pub use_linear_form: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, max_iterations: 50, solver: ImplicitSolver::Newton, use_linear_form: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub iterations: usize,
    pub residual: f64,
}

fn explicit_part(weights: &QuadratureWeights, y_prev: &[f64], f_hist: &[Vec<f64>], h: f64) -> Vec<f64> {
    let mut r = y_prev.to_vec();
    for (l, f) in f_hist.iter().enumerate() {
        let c = h * weights.gamma[l + 1];
        r.iter_mut().zip(f).for_each(|(a, b)| *a += c * b);
    }
    r
}

fn check_history(weights: &QuadratureWeights, dim: usize, y_hist: &[Vec<f64>], f_hist: &[Vec<f64>]) -> Result<()> {
    let need = weights.alpha2() + 1;
    if y_hist.is_empty() || f_hist.len() != need {
        return Err(Error::LengthMismatch { expected: need, found: f_hist.len() });
    }
    if y_hist[0].len() != dim {
        return Err(Error::LengthMismatch { expected: dim, found: y_hist[0].len() });
    }
    Ok(())
}

/// One implicit step. `y_hist[0] = y_{j-1}`, `f_hist[l-1] = f(t_{j-l}, y_{j-l})` for `l = 1..=alpha2+1`.
pub fn wtim_step(
    system: &OdeSystem,
    weights: &QuadratureWeights,
    y_hist: &[Vec<f64>],
    f_hist: &[Vec<f64>],
    t: f64,
    h: f64,
    cfg: &SolverConfig,
    step: usize,
) -> Result<(Vec<f64>, StepDiagnostics)> {
    check_history(weights, system.dim, y_hist, f_hist)?;
    let rhs = explicit_part(weights, &y_hist[0], f_hist, h);
    let g0 = h * weights.gamma[0];
    let mut y = y_hist[0].clone();
    let residual_of = |y: &[f64]| -> Result<Vec<f64>> {
        let f = system.eval(t, y)?;
        Ok(y.iter().zip(&f).zip(&rhs).map(|((yi, fi), ri)| yi - g0 * fi - ri).collect())
    };
    let mut r = residual_of(&y)?;
    let mut res = norm_inf(&r);
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        let tol = cfg.rtol * norm_inf(&y) + cfg.atol;
        if res <= tol {
            return Ok((y, StepDiagnostics { iterations, residual: res }));
        }
        iterations += 1;
        let dy = match cfg.solver {
            ImplicitSolver::Newton => {
                let j = system.jacobian_at(t, &y)?;
                let mut m = DenseMatrix::identity(system.dim);
                for a in 0..system.dim {
                    for b in 0..system.dim {
                        m[(a, b)] -= g0 * j[(a, b)];
                    }
                }
                let lu = Lu::new(&m).map_err(|_| Error::SingularIteration { step })?;
                lu.solve(&r)?
            }
            ImplicitSolver::FixedPoint => r.clone(),
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a - lambda * b).collect();
            let rc = residual_of(&cand)?;
            let rn = norm_inf(&rc);
            if rn.is_finite() && rn < res {
                y = cand;
                r = rc;
                res = rn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // Stagnation at the round-off floor counts as convergence.
            let floor = 64.0 * f64::EPSILON * (norm_inf(&y) + norm_inf(&rhs) + 1e-300);
            if res <= floor.max(tol) * 10.0 {
                return Ok((y, StepDiagnostics { iterations, residual: res }));
            }
            return Err(Error::NewtonDivergence { step, residual: res });
        }
        if !res.is_finite() {
            return Err(Error::NewtonDivergence { step, residual: res });
        }
    }
    let tol = cfg.rtol * norm_inf(&y) + cfg.atol;
    if res <= tol * 10.0 {
        Ok((y, StepDiagnostics { iterations, residual: res }))
    } else {
        Err(Error::NewtonDivergence { step, residual: res })
    }
}

/// One step of the linear variant: a single dense solve with `I - h Gamma_0 A(t_j)`.
pub fn linear_step(
    system: &OdeSystem,
    weights: &QuadratureWeights,
    y_hist: &[Vec<f64>],
    f_hist: &[Vec<f64>],
    t: f64,
    h: f64,
    step: usize,
) -> Result<(Vec<f64>, StepDiagnostics)> {
    let lin = system
        .linear
        .as_ref()
        .ok_or_else(|| Error::Precondition("system has no linear form".into()))?;
    check_history(weights, system.dim, y_hist, f_hist)?;
    let mut rhs = explicit_part(weights, &y_hist[0], f_hist, h);
    let g0 = h * weights.gamma[0];
    let q = (lin.q)(t);
    rhs.iter_mut().zip(&q).for_each(|(a, b)| *a += g0 * b);
    let a = (lin.a)(t);
    let mut m = DenseMatrix::identity(system.dim);
    for i in 0..system.dim {
        for j in 0..system.dim {
            m[(i, j)] -= g0 * a[(i, j)];
        }
    }
    let lu = Lu::new(&m).map_err(|_| Error::SingularIteration { step })?;
    let y = lu.solve(&rhs)?;
    let residual = lin_residual(&m, &y, &rhs);
    Ok((y, StepDiagnostics { iterations: 1, residual }))
}

fn lin_residual(m: &DenseMatrix, y: &[f64], rhs: &[f64]) -> f64 {
    let my = m.mul_vec(y).expect("square");
    my.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Integrated states at `t_j = j h`, `j = 0..=n_steps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub step_diagnostics: Vec<StepDiagnostics>,
    pub startup: StartupHistory,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// State at the node nearest to `t`.
    pub fn state_at(&self, t: f64) -> Option<&[f64]> {
        let j = (t / self.h).round();
        if j < 0.0 || (j * self.h - t).abs() > 1e-9 * t.abs().max(1.0) {
            return None;
        }
        self.states.get(j as usize).map(Vec::as_slice)
    }
}

/// Run startup and `n_steps` implicit steps.
pub fn wtim_integrate(
    system: &OdeSystem,
    weights: &QuadratureWeights,
    y0: &[f64],
    h: f64,
    n_steps: usize,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    wtim_integrate_observed(system, weights, y0, h, n_steps, cfg, |_, _, _| {})
}

/// As [`wtim_integrate`], calling `observe(j, t_j, y_j)` after every accepted step.
pub fn wtim_integrate_observed(
    system: &OdeSystem,
    weights: &QuadratureWeights,
    y0: &[f64],
    h: f64,
    n_steps: usize,
    cfg: &SolverConfig,
    mut observe: impl FnMut(usize, f64, &[f64]),
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::Precondition("at least one step is required".into()));
    }
    let a2 = weights.alpha2();
    let t_first = -((a2 + 1) as f64) * h;
    if t_first < system.t_min - 1e-12 {
        return Err(Error::OutsideDomain { t: t_first, t_min: system.t_min });
    }
    let startup = startup_history(system, y0, h, weights.spec.n, a2)?;
    // Most recent first: y_0, y_{-1}, ..., y_{-alpha2}.
    let mut ring_y: Vec<Vec<f64>> = std::iter::once(y0.to_vec()).chain(startup.history.iter().cloned()).collect();
    let mut ring_f: Vec<Vec<f64>> = ring_y
        .iter()
        .enumerate()
        .map(|(k, y)| system.eval(-(k as f64) * h, y))
        .collect::<Result<_>>()?;
    let mut times = vec![0.0];
    let mut states = vec![y0.to_vec()];
    let mut diags = Vec::with_capacity(n_steps);
    observe(0, 0.0, y0);
    for j in 1..=n_steps {
        let t = j as f64 * h;
        let (y, d) = if cfg.use_linear_form && system.linear.is_some() {
            linear_step(system, weights, &ring_y, &ring_f, t, h, j)?
        } else {
            wtim_step(system, weights, &ring_y, &ring_f, t, h, cfg, j)?
        };
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NewtonDivergence { step: j, residual: f64::INFINITY });
        }
        let f = system.eval(t, &y)?;
        ring_y.pop();
        ring_y.insert(0, y.clone());
        ring_f.pop();
        ring_f.insert(0, f);
        observe(j, t, &y);
        times.push(t);
        states.push(y);
        diags.push(d);
    }
    Ok(Trajectory { h, times, states, step_diagnostics: diags, startup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coiflet::FilterBank;
    use crate::interval::build_boundary_operators;

    fn weights(n: usize) -> (ScalingTables, BoundaryOperators, QuadratureWeights) {
        let bank = FilterBank::reference(n, 7).unwrap();
        let t = ScalingTables::new(&bank, n - 1, 0).unwrap();
        let ops = build_boundary_operators(&t).unwrap();
        let w = gamma_weights(&t, &ops);
        (t, ops, w)
    }

    fn exp_system(lambda: f64) -> OdeSystem {
        OdeSystem::new(1, Arc::new(move |_, y| vec![lambda * y[0]]))
            .unwrap()
            .with_jacobian(Arc::new(move |_, _| DenseMatrix::from_rows(&[vec![lambda]]).unwrap()))
            .with_seeds(SeedProvider::Exact(Arc::new(move |y0, n| {
                (0..n).map(|i| vec![y0[0] * lambda.powi(i as i32)]).collect()
            })))
    }

    #[test]
    fn weight_count_and_moments() {
        let (_, _, w) = weights(6);
        assert_eq!(w.gamma.len(), 11);
        let r = w.moment_residuals(5);
        assert!(r[0].abs() < 1e-12);
        assert!(r.iter().all(|x| x.abs() < 1e-10), "{r:?}");
        let (_, _, w4) = weights(4);
        assert_eq!(w4.gamma.len(), 5);
        assert!(w4.moment_residuals(3).iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn weights_do_not_depend_on_level() {
        let (t, ops, w) = weights(6);
        for m in [0, 3, 7, 10] {
            let wm = gamma_weights_at_level(&t, &ops, m);
            for (a, b) in w.gamma.iter().zip(&wm.gamma) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn exponential_history_is_truncated_series() {
        let s = exp_system(-2.0);
        let st = startup_history(&s, &[1.0], 0.1, 6, 9).unwrap();
        let k = 3.0;
        let z: f64 = -2.0 * -k * 0.1;
        let expect: f64 = (0..6).map(|i| z.powi(i) / factorial(i as usize)).sum();
        assert!((st.history[2][0] - expect).abs() < 1e-15);
        assert!(startup_history(&s, &[1.0], 0.0, 6, 9).is_err());
        let none = OdeSystem::new(1, Arc::new(|_, y: &[f64]| vec![y[0]])).unwrap();
        assert!(matches!(startup_history(&none, &[1.0], 0.1, 6, 9), Err(Error::MissingSeeds)));
    }

    #[test]
    fn trivial_vector_fields() {
        let (_, _, w) = weights(6);
        let zero = OdeSystem::new(2, Arc::new(|_, _| vec![0.0, 0.0])).unwrap();
        let hist = vec![vec![1.0, 2.0]; 10];
        let fh = vec![vec![0.0, 0.0]; 10];
        let (y, _) = wtim_step(&zero, &w, &hist, &fh, 0.1, 0.1, &SolverConfig::default(), 1).unwrap();
        assert_eq!(y, vec![1.0, 2.0]);
        let c = OdeSystem::new(1, Arc::new(|_, _| vec![3.0])).unwrap();
        let fh = vec![vec![3.0]; 10];
        let (y, _) = wtim_step(&c, &w, &[vec![1.0]], &fh, 0.1, 0.1, &SolverConfig::default(), 1).unwrap();
        assert!((y[0] - 1.3).abs() < 1e-13);
        assert!(OdeSystem::new(0, Arc::new(|_, _| vec![])).is_err());
    }

    #[test]
    fn exponential_decay() {
        let (_, _, w) = weights(6);
        let tr = wtim_integrate(&exp_system(-1.0), &w, &[1.0], 0.1, 10, &SolverConfig::default()).unwrap();
        assert!((tr.final_state()[0] - (-1.0f64).exp()).abs() < 1e-8);
        let tr = wtim_integrate(&exp_system(-1.0), &w, &[1.0], 0.05, 20, &SolverConfig::default()).unwrap();
        assert!((tr.final_state()[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn linear_relaxation() {
        let (_, _, w) = weights(6);
        let a: MatrixFn = Arc::new(|_| DenseMatrix::from_rows(&[vec![-1.0]]).unwrap());
        let q: VectorFn = Arc::new(|_| vec![1.0]);
        let s = OdeSystem::linear(1, a, q).unwrap().with_seeds(SeedProvider::Exact(Arc::new(|y0, n| {
            // y = 1 - e^{-t} + y0 e^{-t}: y^(i)(0) = (-1)^(i+1) (1 - y0) for i >= 1
            let mut v = vec![y0.to_vec()];
            for i in 1..n {
                v.push(vec![if i % 2 == 1 { 1.0 } else { -1.0 } * (1.0 - y0[0])]);
            }
            v
        })));
        let tr = wtim_integrate(&s, &w, &[0.0], 1.0 / 32.0, 32, &SolverConfig::default()).unwrap();
        assert!((tr.final_state()[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
        let zero = OdeSystem::linear(1, Arc::new(|_| DenseMatrix::zeros(1, 1)), Arc::new(|_| vec![0.0])).unwrap();
        let (y, _) = linear_step(&zero, &w, &[vec![4.0]], &vec![vec![0.0]; 10], 0.5, 0.5, 1).unwrap();
        assert_eq!(y, vec![4.0]);
    }

    #[test]
    fn negative_time_domain_is_enforced() {
        let (_, _, w) = weights(6);
        let s = exp_system(-1.0).with_t_min(0.0);
        assert!(matches!(
            wtim_integrate(&s, &w, &[1.0], 0.1, 3, &SolverConfig::default()),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn numeric_seeds_track_exact_ones() {
        let s = exp_system(-1.5).with_seeds(SeedProvider::Numeric(FallbackConfig::default()));
        let st = startup_history(&s, &[1.0], 0.05, 6, 9).unwrap();
        for (i, sd) in st.seeds.iter().enumerate() {
            let exact = (-1.5f64).powi(i as i32);
            assert!((sd[0] - exact).abs() < 1e-6 * exact.abs().max(1.0), "i={i}: {} vs {exact}", sd[0]);
        }
        assert!(st.numeric && st.history_error_estimate.unwrap() < 1e-8);
    }

    #[test]
    fn numeric_seeds_report_backward_overflow() {
        let s = OdeSystem::new(1, Arc::new(|_, y: &[f64]| vec![y[0].powi(9)]))
            .unwrap()
            .with_seeds(SeedProvider::Numeric(FallbackConfig::default()));
        let r = startup_history(&s, &[1e40], 0.05, 6, 9);
        assert!(matches!(r, Err(Error::NonFinite(_))), "{r:?}");
    }

    #[test]
    fn fixed_point_solver_handles_mild_problem() {
        let (_, _, w) = weights(6);
        let cfg = SolverConfig { solver: ImplicitSolver::FixedPoint, max_iterations: 200, ..SolverConfig::default() };
        let tr = wtim_integrate(&exp_system(-1.0), &w, &[1.0], 0.05, 20, &cfg).unwrap();
        assert!((tr.final_state()[0] - (-1.0f64).exp()).abs() < 1e-9);
    }
}
