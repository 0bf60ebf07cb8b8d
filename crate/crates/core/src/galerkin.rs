//! Wavelet-Galerkin semi-discretization of nonlinear initial-boundary value problems on `[0, 1]`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coiflet::ScalingTables;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrator::{FallbackConfig, OdeSystem, SeedProvider};
use crate::interval::{BetaMask, BoundaryOperators, IntervalBasis};
use crate::numeric::{DenseMatrix, Lu};

pub mod connection;

pub use connection::{ConnectionCoefficients, ConnectionTable, SegmentIntegrals};

/// `f(x, t)`.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `g(x)`.
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `g(t)`.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Pointwise map of the field values at one node, `N(u, x, t)`.
pub type PointMap = Arc<dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync>;
/// Partial derivatives of a [`PointMap`] with respect to each field.
pub type PointGradient = Arc<dyn Fn(&[f64], f64, f64) -> Vec<f64> + Send + Sync>;

/// `coefficient * d^order/dx^order` acting on `source` and feeding `target`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearTerm {
    pub target: usize,
    pub source: usize,
    pub order: usize,
    pub coefficient: f64,
}

/// `coefficient * d^order/dx^order N(u, x, t)` feeding `target`.
#[derive(Clone)]
pub struct NonlinearTerm {
    pub target: usize,
    pub map: PointMap,
    pub gradient: Option<PointGradient>,
    pub order: usize,
    pub coefficient: f64,
}

impl fmt::Debug for NonlinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearTerm")
            .field("target", &self.target)
            .field("gradient", &self.gradient.is_some())
            .field("order", &self.order)
            .field("coefficient", &self.coefficient)
            .finish()
    }
}

/// Homogeneous derivative-order conditions at each end, shared by all fields.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl BoundaryConditions {
    pub fn dirichlet() -> Self {
        Self { left: vec![0], right: vec![0] }
    }

    pub fn is_dirichlet(&self) -> bool {
        self.left.contains(&0) && self.right.contains(&0)
    }
}

/// Boundary values `u(0, t) = g0(t)`, `u(1, t) = g1(t)` and their time derivatives.
#[derive(Clone)]
pub struct DirichletData {
    pub g0: TimeFn,
    pub g1: TimeFn,
    pub dg0: TimeFn,
    pub dg1: TimeFn,
}

impl DirichletData {
    pub fn homogeneous() -> Self {
        let z: TimeFn = Arc::new(|_| 0.0);
        Self { g0: z.clone(), g1: z.clone(), dg0: z.clone(), dg1: z }
    }
}

impl fmt::Debug for DirichletData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DirichletData")
    }
}

/// Linear-in-x lifting `l(x, t) = (1 - x) g0(t) + x g1(t)` per field.
#[derive(Clone, Debug)]
pub struct Lifting {
    pub data: Vec<DirichletData>,
}

impl Lifting {
    pub fn value(&self, field: usize, x: f64, t: f64) -> f64 {
        let d = &self.data[field];
        (1.0 - x) * (d.g0)(t) + x * (d.g1)(t)
    }

    pub fn time_derivative(&self, field: usize, x: f64, t: f64) -> f64 {
        let d = &self.data[field];
        (1.0 - x) * (d.dg0)(t) + x * (d.dg1)(t)
    }

    /// `d^order/dx^order l` (zero beyond first order).
    pub fn space_derivative(&self, field: usize, order: usize, x: f64, t: f64) -> f64 {
        match order {
            0 => self.value(field, x, t),
            1 => {
                let d = &self.data[field];
                (d.g1)(t) - (d.g0)(t)
            }
            _ => 0.0,
        }
    }
}

#[derive(Clone)]
pub struct PdeProblem {
    pub fields: usize,
    pub linear_terms: Vec<LinearTerm>,
    pub nonlinear_terms: Vec<NonlinearTerm>,
    /// Per-field forcing; `None` means zero.
    pub forcing: Vec<Option<SpaceTimeFn>>,
    pub initial: Vec<SpaceFn>,
    pub bc: BoundaryConditions,
    /// Inhomogeneous Dirichlet data, removed by [`lift_boundary`].
    pub dirichlet: Option<Vec<DirichletData>>,
    /// Lifting already subtracted from the unknowns.
    pub lifting: Option<Lifting>,
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("fields", &self.fields)
            .field("linear_terms", &self.linear_terms)
            .field("nonlinear_terms", &self.nonlinear_terms)
            .field("bc", &self.bc)
            .field("dirichlet", &self.dirichlet.is_some())
            .field("lifting", &self.lifting.is_some())
            .finish()
    }
}

impl PdeProblem {
    pub fn validate(&self) -> Result<()> {
        let f = self.fields;
        if f == 0 {
            return Err(Error::Precondition("problem needs at least one field".into()));
        }
        if self.forcing.len() != f {
            return Err(Error::LengthMismatch { expected: f, found: self.forcing.len() });
        }
        if self.initial.len() != f {
            return Err(Error::LengthMismatch { expected: f, found: self.initial.len() });
        }
        for t in &self.linear_terms {
            if t.target >= f || t.source >= f || t.order > 2 || !t.coefficient.is_finite() {
                return Err(Error::Precondition(format!("invalid linear term {t:?}")));
            }
        }
        let mut seen = vec![false; f];
        for t in &self.nonlinear_terms {
            if t.target >= f || t.order > 2 || !t.coefficient.is_finite() {
                return Err(Error::Precondition(format!("invalid nonlinear term {t:?}")));
            }
            if std::mem::replace(&mut seen[t.target], true) {
                return Err(Error::Precondition(format!("field {} has two nonlinear terms", t.target)));
            }
        }
        if self.bc.left.iter().chain(&self.bc.right).any(|&d| d >= 2) {
            return Err(Error::UnsupportedBc("boundary derivative orders must be 0 or 1".into()));
        }
        if let Some(d) = &self.dirichlet {
            if d.len() != f {
                return Err(Error::LengthMismatch { expected: f, found: d.len() });
            }
        }
        Ok(())
    }
}

/// Replace inhomogeneous Dirichlet data by a lifting, giving a problem with homogeneous conditions.
pub fn lift_boundary(problem: &PdeProblem) -> Result<PdeProblem> {
    problem.validate()?;
    let Some(data) = problem.dirichlet.clone() else {
        return Ok(problem.clone());
    };
    if !problem.bc.is_dirichlet() {
        return Err(Error::UnsupportedBc("boundary data are only supported for Dirichlet conditions at both ends".into()));
    }
    if problem.lifting.is_some() {
        return Err(Error::Precondition("problem is already lifted".into()));
    }
    let lift = Arc::new(Lifting { data });
    let fields = problem.fields;

    let mut forcing = Vec::with_capacity(fields);
    for f in 0..fields {
        let base = problem.forcing[f].clone();
        let terms: Vec<LinearTerm> = problem.linear_terms.iter().copied().filter(|t| t.target == f).collect();
        let l = lift.clone();
        forcing.push(Some(Arc::new(move |x: f64, t: f64| {
            let mut v = base.as_ref().map_or(0.0, |g| g(x, t)) - l.time_derivative(f, x, t);
            for term in &terms {
                v += term.coefficient * l.space_derivative(term.source, term.order, x, t);
            }
            v
        }) as SpaceTimeFn));
    }

    let initial = (0..fields)
        .map(|f| {
            let g = problem.initial[f].clone();
            let l = lift.clone();
            Arc::new(move |x: f64| g(x) - l.value(f, x, 0.0)) as SpaceFn
        })
        .collect();

    let shifted = |l: &Arc<Lifting>, u: &[f64], x: f64, t: f64| -> Vec<f64> {
        u.iter().enumerate().map(|(f, v)| v + l.value(f, x, t)).collect()
    };
    let nonlinear_terms = problem
        .nonlinear_terms
        .iter()
        .map(|term| {
            let (m, l) = (term.map.clone(), lift.clone());
            let map: PointMap = Arc::new(move |u, x, t| m(&shifted(&l, u, x, t), x, t));
            let gradient = term.gradient.clone().map(|g| {
                let l = lift.clone();
                Arc::new(move |u: &[f64], x: f64, t: f64| g(&shifted(&l, u, x, t), x, t)) as PointGradient
            });
            NonlinearTerm { map, gradient, ..term.clone() }
        })
        .collect();

    Ok(PdeProblem {
        fields,
        linear_terms: problem.linear_terms.clone(),
        nonlinear_terms,
        forcing,
        initial,
        bc: problem.bc.clone(),
        dirichlet: None,
        lifting: Some(Lifting { data: lift.data.clone() }),
    })
}

/// Constrained basis (mask zeroed at the bc orders) and free basis on `[0, 1]` at level `n`.
///
/// Levels whose boundary stencils overlap are accepted, as in [`IntervalBasis::new`].
pub fn build_bases(
    tables: Arc<ScalingTables>,
    ops: Arc<BoundaryOperators>,
    n: u32,
    bc: &BoundaryConditions,
) -> Result<(IntervalBasis, IntervalBasis)> {
    let spec = tables.spec();
    let mask = BetaMask::with_zeros(spec.n, &bc.left, &bc.right)?;
    let constrained = IntervalBasis::new(tables.clone(), ops.clone(), n, 0.0, 1.0, mask)?;
    let free = IntervalBasis::new(tables, ops, n, 0.0, 1.0, BetaMask::all_ones(spec.n))?;
    Ok((constrained, free))
}

/// How matrix entries are integrated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AssemblyMethod {
    /// Exact connection coefficients. Boundary members carry large extrapolation weights,
    /// which limits entry accuracy to about 1e-8 relative.
    Connection,
    /// Composite Simpson over translate pairs with `2^refinement` intervals per unit, i.e. the
    /// level-`n + refinement` grid, checked against one level finer. Entry changes are measured
    /// relative to each matrix's largest entry (at least 1).
    Quadrature { refinement: u32, tolerance: f64 },
}

pub const DEFAULT_REFINEMENT: u32 = 15;
pub const DEFAULT_QUADRATURE_TOLERANCE: f64 = 1e-10;

impl Default for AssemblyMethod {
    fn default() -> Self {
        AssemblyMethod::Quadrature { refinement: DEFAULT_REFINEMENT, tolerance: DEFAULT_QUADRATURE_TOLERANCE }
    }
}

/// `int_0^1 T_l^(e1) S_k^(e2) dx` for first-order derivative pairs.
trait Integrator: Sync {
    fn entry(&self, test: &IntervalBasis, l: usize, e1: usize, trial: &IntervalBasis, k: usize, e2: usize) -> Result<f64>;
}

struct ConnectionIntegrator<'a> {
    cc: &'a ConnectionCoefficients,
}

impl Integrator for ConnectionIntegrator<'_> {
    fn entry(&self, test: &IntervalBasis, l: usize, e1: usize, trial: &IntervalBasis, k: usize, e2: usize) -> Result<f64> {
        let n = test.level() as i32;
        let m1 = test.spec().m1 as i64;
        let top = 1i64 << n;
        let mut s = 0.0;
        for &(j, c) in test.coefficients(l) {
            for &(jp, cp) in trial.coefficients(k) {
                let r = jp - j;
                s += c * cp * (self.cc.value(e1, e2, r, top + m1 - j) - self.cc.value(e1, e2, r, m1 - j));
            }
        }
        Ok(s * 2f64.powi(n * (e1 + e2) as i32 - n))
    }
}

/// Translate-pair integrals summed over the unit segments covering `[0, 1]`.
struct SegmentIntegrator<'a> {
    seg: &'a SegmentIntegrals,
}

impl Integrator for SegmentIntegrator<'_> {
    fn entry(&self, test: &IntervalBasis, l: usize, e1: usize, trial: &IntervalBasis, k: usize, e2: usize) -> Result<f64> {
        let n = test.level() as i32;
        let m1 = test.spec().m1 as i64;
        let top = 1i64 << n;
        let mut s = 0.0;
        for &(j, c) in test.coefficients(l) {
            for &(jp, cp) in trial.coefficients(k) {
                s += c * cp * self.seg.range(e1, e2, jp - j, m1 - j, top + m1 - j);
            }
        }
        Ok(s * 2f64.powi(n * (e1 + e2) as i32 - n))
    }
}

/// `M[l][k] = int_0^1 T_l d^order S_k dx`; second order uses integration by parts.
fn operator_matrix(
    integ: &dyn Integrator,
    test: &IntervalBasis,
    trial: &IntervalBasis,
    order: usize,
    exec: Execution,
) -> Result<DenseMatrix> {
    let kk = test.len();
    let (a, _) = test.node_range();
    let rows: Vec<Result<Vec<f64>>> = exec.map(kk, |l| {
        (0..kk)
            .map(|k| match order {
                0 => integ.entry(test, l, 0, trial, k, 0),
                1 => integ.entry(test, l, 0, trial, k, 1),
                2 => {
                    let (gl, gk) = (a + l as i64, a + k as i64);
                    let edge = |x: f64| -> Result<f64> {
                        Ok(test.eval_derivative(gl, 0, x, false)? * trial.eval_derivative(gk, 1, x, false)?)
                    };
                    Ok(edge(1.0)? - edge(0.0)? - integ.entry(test, l, 1, trial, k, 1)?)
                }
                _ => Err(Error::Precondition(format!("derivative order {order} exceeds 2"))),
            })
            .collect()
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    DenseMatrix::from_rows(&rows)
}

/// Matrices of the semi-discrete system `A U' = B U + C V(U) + E F(t)`.
#[derive(Clone, Debug)]
pub struct SemiDiscreteSystem {
    pub n: u32,
    pub fields: usize,
    pub nodes: Vec<f64>,
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
    pub e: DenseMatrix,
    pub g: Vec<f64>,
    /// State indices held fixed by Dirichlet conditions.
    pub pinned: Vec<usize>,
    pub a_inv_b: DenseMatrix,
    pub a_inv_c: DenseMatrix,
    pub a_inv_e: DenseMatrix,
    /// Problem in the (possibly lifted) unknowns.
    pub problem: PdeProblem,
    pub constrained: IntervalBasis,
    pub free: IntervalBasis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixChecksums {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub e: u64,
    pub g: u64,
}

impl SemiDiscreteSystem {
    pub fn nodes_per_field(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.nodes.len() * self.fields
    }

    pub fn checksums(&self) -> MatrixChecksums {
        MatrixChecksums {
            a: self.a.checksum(),
            b: self.b.checksum(),
            c: self.c.checksum(),
            e: self.e.checksum(),
            g: crate::numeric::checksum_slice(&self.g),
        }
    }

    /// Nodal values of each field, with the lifting added back.
    pub fn nodal_solution(&self, u: &[f64], t: f64) -> Result<Vec<Vec<f64>>> {
        let k = self.nodes.len();
        if u.len() != self.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), found: u.len() });
        }
        Ok((0..self.fields)
            .map(|f| {
                self.nodes
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| u[f * k + i] + self.problem.lifting.as_ref().map_or(0.0, |l| l.value(f, x, t)))
                    .collect()
            })
            .collect())
    }
}

fn block_add(dst: &mut DenseMatrix, bi: usize, bj: usize, k: usize, m: &DenseMatrix, scale: f64) {
    for i in 0..k {
        for j in 0..k {
            dst[(bi * k + i, bj * k + j)] += scale * m[(i, j)];
        }
    }
}

/// Assemble the semi-discrete matrices; inhomogeneous Dirichlet data are lifted first.
pub fn assemble(
    problem: &PdeProblem,
    tables: Arc<ScalingTables>,
    ops: Arc<BoundaryOperators>,
    n: u32,
    method: AssemblyMethod,
    exec: Execution,
) -> Result<SemiDiscreteSystem> {
    let problem = lift_boundary(problem)?;
    let (constrained, free) = build_bases(tables.clone(), ops, n, &problem.bc)?;
    let mats = match method {
        AssemblyMethod::Connection => {
            let cc = ConnectionCoefficients::new(&tables)?;
            assemble_blocks(&problem, &ConnectionIntegrator { cc: &cc }, &constrained, &free, exec)?
        }
        AssemblyMethod::Quadrature { refinement, tolerance } => {
            if refinement < 4 {
                return Err(Error::Precondition(format!("quadrature refinement {refinement} must be at least 4")));
            }
            let q = refinement as usize;
            let fine_tables = ScalingTables::new(&tables.bank, 1, q + 1)?;
            let coarse = SegmentIntegrals::new(&fine_tables, q, exec)?;
            let fine = SegmentIntegrals::new(&fine_tables, q + 1, exec)?;
            let m0 = assemble_blocks(&problem, &SegmentIntegrator { seg: &coarse }, &constrained, &free, exec)?;
            let m1 = assemble_blocks(&problem, &SegmentIntegrator { seg: &fine }, &constrained, &free, exec)?;
            // Entry changes relative to each matrix's largest entry.
            let change = m0
                .iter()
                .zip(&m1)
                .map(|(x, y)| x.max_abs_diff(y) / y.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs())))
                .fold(0.0, f64::max);
            if change > tolerance {
                return Err(Error::QuadratureNotConverged { change, tolerance });
            }
            m1
        }
    };
    let [a, b, c, e] = mats;
    finish(problem, n, a, b, c, e, constrained, free)
}

fn assemble_blocks(
    problem: &PdeProblem,
    integ: &dyn Integrator,
    constrained: &IntervalBasis,
    free: &IntervalBasis,
    exec: Execution,
) -> Result<[DenseMatrix; 4]> {
    let k = constrained.len();
    let fields = problem.fields;
    let dim = k * fields;
    let gram = operator_matrix(integ, constrained, constrained, 0, exec)?;
    let mixed = operator_matrix(integ, constrained, free, 0, exec)?;
    let mut a = DenseMatrix::zeros(dim, dim);
    let mut e = DenseMatrix::zeros(dim, dim);
    for f in 0..fields {
        block_add(&mut a, f, f, k, &gram, 1.0);
        block_add(&mut e, f, f, k, &mixed, 1.0);
    }
    let mut cache: Vec<Option<DenseMatrix>> = vec![None; 3];
    let mut b = DenseMatrix::zeros(dim, dim);
    for t in &problem.linear_terms {
        if cache[t.order].is_none() {
            cache[t.order] = Some(operator_matrix(integ, constrained, constrained, t.order, exec)?);
        }
        block_add(&mut b, t.target, t.source, k, cache[t.order].as_ref().unwrap(), t.coefficient);
    }
    let mut c = DenseMatrix::zeros(dim, dim);
    for t in &problem.nonlinear_terms {
        let m = if t.order == 0 { mixed.clone() } else { operator_matrix(integ, constrained, free, t.order, exec)? };
        block_add(&mut c, t.target, t.target, k, &m, t.coefficient);
    }
    Ok([a, b, c, e])
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: PdeProblem,
    n: u32,
    a: DenseMatrix,
    b: DenseMatrix,
    c: DenseMatrix,
    e: DenseMatrix,
    constrained: IntervalBasis,
    free: IntervalBasis,
) -> Result<SemiDiscreteSystem> {
    let nodes = constrained.nodes();
    let k = nodes.len();
    let mut pinned = Vec::new();
    for f in 0..problem.fields {
        if problem.bc.left.contains(&0) {
            pinned.push(f * k);
        }
        if problem.bc.right.contains(&0) {
            pinned.push(f * k + k - 1);
        }
    }
    // Pinned rows become u_i' = 0.
    let mut a_eff = a.clone();
    let (mut b_eff, mut c_eff, mut e_eff) = (b.clone(), c.clone(), e.clone());
    for &i in &pinned {
        for j in 0..a.cols() {
            a_eff[(i, j)] = if i == j { 1.0 } else { 0.0 };
            b_eff[(i, j)] = 0.0;
            c_eff[(i, j)] = 0.0;
            e_eff[(i, j)] = 0.0;
        }
    }
    let lu = Lu::new(&a_eff)?;
    let g = (0..problem.fields)
        .flat_map(|f| {
            let init = problem.initial[f].clone();
            let pin_l = problem.bc.left.contains(&0);
            let pin_r = problem.bc.right.contains(&0);
            nodes
                .iter()
                .enumerate()
                .map(move |(i, &x)| if (i == 0 && pin_l) || (i == k - 1 && pin_r) { 0.0 } else { init(x) })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(SemiDiscreteSystem {
        n,
        fields: problem.fields,
        a_inv_b: lu.solve_matrix(&b_eff)?,
        a_inv_c: lu.solve_matrix(&c_eff)?,
        a_inv_e: lu.solve_matrix(&e_eff)?,
        nodes,
        a,
        b,
        c,
        e,
        g,
        pinned,
        problem,
        constrained,
        free,
    })
}

fn nodal_fields(u: &[f64], fields: usize, k: usize, i: usize) -> Vec<f64> {
    (0..fields).map(|f| u[f * k + i]).collect()
}

/// `U' = A^{-1}B U + A^{-1}C V(U, t) + A^{-1}E F(t)` as an ODE system (initial vector `system.g`).
pub fn semi_discretize(system: &Arc<SemiDiscreteSystem>) -> Result<OdeSystem> {
    let dim = system.dim();
    let s = system.clone();
    let k = s.nodes_per_field();
    let forcing = move |s: &SemiDiscreteSystem, t: f64| -> Vec<f64> {
        let mut f = vec![0.0; dim];
        for (fi, g) in s.problem.forcing.iter().enumerate() {
            if let Some(g) = g {
                for (i, &x) in s.nodes.iter().enumerate() {
                    f[fi * k + i] = g(x, t);
                }
            }
        }
        f
    };
    let has_forcing = s.problem.forcing.iter().any(Option::is_some);
    let seeds = SeedProvider::Numeric(FallbackConfig::default());

    if s.problem.nonlinear_terms.is_empty() {
        let a = s.a_inv_b.clone();
        let s2 = s.clone();
        let q = move |t: f64| {
            if has_forcing {
                s2.a_inv_e.mul_vec(&forcing(&s2, t)).expect("dimension")
            } else {
                vec![0.0; dim]
            }
        };
        return Ok(OdeSystem::linear(dim, Arc::new(move |_| a.clone()), Arc::new(q))?.with_seeds(seeds));
    }

    let s1 = s.clone();
    let rhs = move |t: f64, u: &[f64]| -> Vec<f64> {
        let s = &*s1;
        let mut out = s.a_inv_b.mul_vec(u).expect("dimension");
        let mut v = vec![0.0; dim];
        for term in &s.problem.nonlinear_terms {
            for (i, &x) in s.nodes.iter().enumerate() {
                v[term.target * k + i] = (term.map)(&nodal_fields(u, s.fields, k, i), x, t);
            }
        }
        let cv = s.a_inv_c.mul_vec(&v).expect("dimension");
        out.iter_mut().zip(cv).for_each(|(o, c)| *o += c);
        if has_forcing {
            let ef = s.a_inv_e.mul_vec(&forcing(s, t)).expect("dimension");
            out.iter_mut().zip(ef).for_each(|(o, c)| *o += c);
        }
        out
    };
    let mut ode = OdeSystem::new(dim, Arc::new(rhs))?.with_seeds(seeds);
    if s.problem.nonlinear_terms.iter().all(|t| t.gradient.is_some()) {
        let s2 = s.clone();
        ode = ode.with_jacobian(Arc::new(move |t, u| {
            let s = &*s2;
            let mut j = s.a_inv_b.clone();
            for term in &s.problem.nonlinear_terms {
                let grad = term.gradient.as_ref().expect("checked above");
                for (i, &x) in s.nodes.iter().enumerate() {
                    let g = grad(&nodal_fields(u, s.fields, k, i), x, t);
                    let col = term.target * k + i;
                    for (src, gs) in g.iter().enumerate() {
                        if *gs == 0.0 {
                            continue;
                        }
                        let dst = src * k + i;
                        for r in 0..dim {
                            j[(r, dst)] += s.a_inv_c[(r, col)] * gs;
                        }
                    }
                }
            }
            j
        }));
    }
    Ok(ode)
}

/// `u_field(x, t) = sum_k U_k Phi~_k(x)` plus the lifting.
pub fn reconstruct(system: &SemiDiscreteSystem, u: &[f64], field: usize, x: f64, t: f64) -> Result<f64> {
    if u.len() != system.dim() {
        return Err(Error::LengthMismatch { expected: system.dim(), found: u.len() });
    }
    if field >= system.fields {
        return Err(Error::Precondition(format!("field {field} >= {}", system.fields)));
    }
    let k = system.nodes_per_field();
    let (a, _) = system.constrained.node_range();
    let mut s = 0.0;
    for i in 0..k {
        let c = u[field * k + i];
        if c != 0.0 {
            s += c * system.constrained.eval_derivative(a + i as i64, 0, x, true)?;
        }
    }
    Ok(s + system.problem.lifting.as_ref().map_or(0.0, |l| l.value(field, x, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coiflet::FilterBank;
    use crate::integrator::{gamma_weights, wtim_integrate, SolverConfig};
    use crate::interval::build_boundary_operators;
    use std::sync::OnceLock;

    fn shared() -> (Arc<ScalingTables>, Arc<BoundaryOperators>) {
        static S: OnceLock<(Arc<ScalingTables>, Arc<BoundaryOperators>)> = OnceLock::new();
        S.get_or_init(|| {
            let bank = FilterBank::reference(6, 7).unwrap();
            let t = ScalingTables::new(&bank, 5, 12).unwrap();
            let ops = build_boundary_operators(&t).unwrap();
            (Arc::new(t), Arc::new(ops))
        })
        .clone()
    }

    fn heat(g: SpaceFn) -> PdeProblem {
        PdeProblem {
            fields: 1,
            linear_terms: vec![LinearTerm { target: 0, source: 0, order: 2, coefficient: 1.0 }],
            nonlinear_terms: vec![],
            forcing: vec![None],
            initial: vec![g],
            bc: BoundaryConditions::dirichlet(),
            dirichlet: None,
            lifting: None,
        }
    }

    #[test]
    fn bases_and_resolution() {
        let (t, o) = shared();
        let (c, f) = build_bases(t.clone(), o.clone(), 4, &BoundaryConditions::dirichlet()).unwrap();
        assert_eq!(c.len(), 17);
        for i in 0..=64 {
            let x = i as f64 / 64.0;
            let s: f64 = (0..17).map(|k| f.eval_derivative(k, 0, x, false).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
        assert!(matches!(build_bases(t, o, 2, &BoundaryConditions::dirichlet()), Err(Error::ResolutionTooLow(_))));
    }

    #[test]
    fn gram_matrix_properties() {
        let (t, o) = shared();
        let sys = assemble(&heat(Arc::new(|_| 0.0)), t, o, 4, AssemblyMethod::default(), Execution::Parallel).unwrap();
        assert_eq!(sys.dim(), 17);
        assert!(sys.a.max_abs_diff(&sys.a.transpose()) < 1e-10);
        let sv = crate::numeric::singular_values(&sys.a);
        assert!(*sv.last().unwrap() > 1e-6);
        assert!(crate::numeric::Lu::new(&sys.a).is_ok());
    }

    #[test]
    fn connection_and_quadrature_agree() {
        let (t, o) = shared();
        let p = heat(Arc::new(|_| 0.0));
        let exact = assemble(&p, t.clone(), o.clone(), 4, AssemblyMethod::Connection, Execution::Parallel).unwrap();
        let quad = assemble(&p, t, o, 4, AssemblyMethod::default(), Execution::Parallel).unwrap();
        assert!(exact.a.max_abs_diff(&quad.a) < 1e-7);
        assert!(exact.e.max_abs_diff(&quad.e) < 1e-7);
        let rel = exact.b.max_abs_diff(&quad.b) / exact.b.norm_inf();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn quadrature_check_reports_failure() {
        let (t, o) = shared();
        let r = assemble(&heat(Arc::new(|_| 0.0)), t, o, 4, AssemblyMethod::Quadrature { refinement: 4, tolerance: 1e-12 }, Execution::Sequential);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn galerkin_consistency_on_polynomial() {
        let (t, o) = shared();
        let w = |x: f64| x * (1.0 - x);
        let sys = assemble(&heat(Arc::new(w)), t.clone(), o.clone(), 4, AssemblyMethod::default(), Execution::Parallel).unwrap();
        let u: Vec<f64> = sys.nodes.iter().map(|&x| w(x)).collect();
        let bu = sys.b.mul_vec(&u).unwrap();
        // int w'' Phi~_l = -2 int Phi~_l
        let mass = sys.e.mul_vec(&[1.0; 17]).unwrap();
        for l in 1..16 {
            assert!((bu[l] + 2.0 * mass[l]).abs() < 1e-8, "row {l}");
        }
        // w'' also vanishes at both ends, so the pinned operator reproduces it.
        let w = |x: f64| x - 2.0 * x.powi(3) + x.powi(4);
        let u: Vec<f64> = sys.nodes.iter().map(|&x| w(x)).collect();
        let du = sys.a_inv_b.mul_vec(&u).unwrap();
        for (l, &x) in sys.nodes.iter().enumerate() {
            assert!((du[l] - 12.0 * x * (x - 1.0)).abs() < 1e-7, "row {l}: {}", du[l]);
        }
        assert_eq!(du[0], 0.0);
    }

    #[test]
    fn heat_equation_decay() {
        let (t, o) = shared();
        let pi = std::f64::consts::PI;
        let sys = Arc::new(
            assemble(&heat(Arc::new(move |x| (pi * x).sin())), t.clone(), o.clone(), 4, AssemblyMethod::default(), Execution::Parallel)
                .unwrap(),
        );
        let ode = semi_discretize(&sys).unwrap();
        let w = gamma_weights(&t, &o);
        // The stiffest mode has h lambda = -0.6 here; h = 1/64 would put it far outside the region.
        let traj = wtim_integrate(&ode, &w, &sys.g, 1.0 / 4096.0, 410, &SolverConfig::default()).unwrap();
        let tt = 410.0 / 4096.0;
        let err = sys
            .nodes
            .iter()
            .zip(traj.final_state())
            .map(|(&x, u)| (u - (-pi * pi * tt).exp() * (pi * x).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn zero_problem_stays_zero() {
        let (t, o) = shared();
        let mut p = heat(Arc::new(|_| 0.0));
        p.nonlinear_terms.push(NonlinearTerm {
            target: 0,
            map: Arc::new(|u, _, _| u[0] * u[0]),
            gradient: Some(Arc::new(|u, _, _| vec![2.0 * u[0]])),
            order: 1,
            coefficient: -0.5,
        });
        let sys = Arc::new(assemble(&p, t.clone(), o.clone(), 4, AssemblyMethod::default(), Execution::Parallel).unwrap());
        let ode = semi_discretize(&sys).unwrap().with_seeds(SeedProvider::Exact(Arc::new(|y, n| vec![y.to_vec(); n].into_iter().enumerate().map(|(i, v)| if i == 0 { v } else { vec![0.0; v.len()] }).collect())));
        let traj = wtim_integrate(&ode, &gamma_weights(&t, &o), &sys.g, 0.05, 5, &SolverConfig::default()).unwrap();
        assert!(traj.final_state().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lifting_round_trip() {
        let (t, o) = shared();
        let mut p = heat(Arc::new(|x| x * x));
        p.dirichlet = Some(vec![DirichletData {
            g0: Arc::new(|_| 0.0),
            g1: Arc::new(|t| 1.0 + t),
            dg0: Arc::new(|_| 0.0),
            dg1: Arc::new(|_| 1.0),
        }]);
        let lifted = lift_boundary(&p).unwrap();
        assert!(lifted.dirichlet.is_none());
        let l = lifted.lifting.as_ref().unwrap();
        for i in 0..=16 {
            let x = i as f64 / 16.0;
            let v = (lifted.initial[0])(x);
            assert!((v + l.value(0, x, 0.0) - x * x).abs() < 1e-12);
        }
        // -d/dt l = -x
        assert!(((lifted.forcing[0].as_ref().unwrap())(0.5, 0.2) + 0.5).abs() < 1e-15);
        let sys = assemble(&p, t, o, 4, AssemblyMethod::default(), Execution::Parallel).unwrap();
        let zero = vec![0.0; 17];
        assert!((reconstruct(&sys, &zero, 0, 1.0, 0.5).unwrap() - 1.5).abs() < 1e-12);
        assert!(reconstruct(&sys, &zero, 0, 0.0, 0.5).unwrap().abs() < 1e-12);

        let mut bad = heat(Arc::new(|_| 0.0));
        bad.bc = BoundaryConditions { left: vec![1], right: vec![1] };
        bad.dirichlet = Some(vec![DirichletData::homogeneous()]);
        assert!(matches!(lift_boundary(&bad), Err(Error::UnsupportedBc(_))));
    }

    #[test]
    fn reconstruct_polynomial() {
        let (t, o) = shared();
        let w = |x: f64| x * (1.0 - x) * (1.0 + x * x);
        let sys = assemble(&heat(Arc::new(w)), t, o, 4, AssemblyMethod::default(), Execution::Parallel).unwrap();
        let u: Vec<f64> = sys.nodes.iter().map(|&x| w(x)).collect();
        for (i, &x) in sys.nodes.iter().enumerate() {
            assert!((reconstruct(&sys, &u, 0, x, 0.0).unwrap() - u[i]).abs() < 1e-8);
        }
        assert_eq!(reconstruct(&sys, &[0.0; 17], 0, 0.3, 0.0).unwrap(), 0.0);
    }
}
