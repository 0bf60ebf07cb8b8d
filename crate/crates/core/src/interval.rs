//! Boundary-extended Coiflet approximation on a bounded interval.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coiflet::{CoifletSpec, ScalingTables};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numeric::{factorial, fit_line, DenseMatrix, Lu};

/// Stencils expressing boundary derivatives through interior nodal values.
///
/// `zeta_a[i][k]` weights `f(a + k h)` and `zeta_b[i][k]` weights `f(b - k h)`, so that
/// `f^(i)(a) ~ h^-i sum_k zeta_a[i][k] f(a + k h)` with `h = 2^-m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOperators {
    pub spec: CoifletSpec,
    pub alpha1: usize,
    pub alpha2: usize,
    pub zeta_a: DenseMatrix,
    pub zeta_b: DenseMatrix,
}

pub fn build_boundary_operators(tables: &ScalingTables) -> Result<BoundaryOperators> {
    let spec = tables.spec();
    let n = spec.n;
    if tables.max_derivative + 1 < n {
        return Err(Error::Precondition(format!(
            "tables hold derivatives up to {} but {} are needed",
            tables.max_derivative,
            n - 1
        )));
    }
    let m1 = spec.m1 as i64;
    let a1 = spec.alpha1();
    let a2 = spec.alpha2();
    let phi = |i: usize, k: i64| tables.at_integer(i, k);

    let amat1 = DenseMatrix::from_fn(n, a2 + 1, |i, k| phi(i, k as i64 + m1));
    let bmat1 = DenseMatrix::from_fn(n, n, |i, j| {
        (1..m1)
            .map(|l| (l as f64).powi(j as i32) / factorial(j) * phi(i, m1 - l))
            .sum()
    });
    let amat0 = DenseMatrix::from_fn(n, a1 + 1, |i, k| phi(i, m1 - k as i64));
    let bmat0 = DenseMatrix::from_fn(n, n, |i, j| {
        (1..=a2 as i64)
            .map(|l| (-(l as f64)).powi(j as i32) / factorial(j) * phi(i, m1 + l))
            .sum()
    });
    let solve = |b: &DenseMatrix, a: &DenseMatrix| -> Result<DenseMatrix> {
        let mut lhs = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                lhs[(i, j)] -= b[(i, j)];
            }
        }
        Lu::new(&lhs)?.solve_matrix(a)
    };
    Ok(BoundaryOperators {
        spec,
        alpha1: a1,
        alpha2: a2,
        zeta_a: solve(&bmat0, &amat0)?,
        zeta_b: solve(&bmat1, &amat1)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Per-derivative flags enabling terms of the boundary extension polynomials.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetaMask {
    pub beta_l: Vec<bool>,
    pub beta_r: Vec<bool>,
}

impl BetaMask {
    pub fn all_ones(n: usize) -> Self {
        Self { beta_l: vec![true; n], beta_r: vec![true; n] }
    }

    /// Mask with the listed derivative orders switched off at each end.
    pub fn with_zeros(n: usize, left: &[usize], right: &[usize]) -> Result<Self> {
        let mut m = Self::all_ones(n);
        for &i in left {
            *m.beta_l.get_mut(i).ok_or_else(|| Error::Precondition(format!("mask index {i} >= {n}")))? = false;
        }
        for &i in right {
            *m.beta_r.get_mut(i).ok_or_else(|| Error::Precondition(format!("mask index {i} >= {n}")))? = false;
        }
        Ok(m)
    }
}

/// `T_{L,j}(x)` or `T_{R,j}(x)`: weight of interior node `j` of the stencil on the
/// extension polynomial evaluated at `x`.
pub fn extension_weights(
    ops: &BoundaryOperators,
    mask: &BetaMask,
    m: u32,
    a: f64,
    b: f64,
    side: Side,
    j: usize,
    x: f64,
) -> Result<f64> {
    let n = ops.spec.n;
    let scale = 2f64.powi(m as i32);
    let (zeta, flags, origin, limit) = match side {
        Side::Left => (&ops.zeta_a, &mask.beta_l, a, ops.alpha1),
        Side::Right => (&ops.zeta_b, &mask.beta_r, b, ops.alpha2),
    };
    if j > limit {
        return Err(Error::Precondition(format!("stencil column {j} exceeds {limit}")));
    }
    let mut t = 0.0;
    for i in 0..n {
        if flags[i] {
            t += (scale * (x - origin)).powi(i as i32) * zeta[(i, j)] / factorial(i);
        }
    }
    Ok(t)
}

/// Modified scaling basis on `[a, b]` at level `m`.
#[derive(Clone, Debug)]
pub struct IntervalBasis {
    tables: Arc<ScalingTables>,
    ops: Arc<BoundaryOperators>,
    m: u32,
    a_idx: i64,
    b_idx: i64,
    mask: BetaMask,
    /// Translate coefficients per node: `Phi_k(x) = sum c_j phi(2^m x + M1 - j)`.
    coeffs: Vec<Vec<(i64, f64)>>,
}

fn dyadic_index(x: f64, m: u32) -> Result<i64> {
    let t = x * 2f64.powi(m as i32);
    if (t - t.round()).abs() > 1e-12 * t.abs().max(1.0) {
        return Err(Error::Precondition(format!("2^{m} * {x} is not an integer")));
    }
    Ok(t.round() as i64)
}

impl IntervalBasis {
    pub fn new(
        tables: Arc<ScalingTables>,
        ops: Arc<BoundaryOperators>,
        m: u32,
        a: f64,
        b: f64,
        mask: BetaMask,
    ) -> Result<Self> {
        let spec = tables.spec();
        if ops.spec != spec {
            return Err(Error::Precondition("boundary operators built for a different bank".into()));
        }
        if mask.beta_l.len() != spec.n || mask.beta_r.len() != spec.n {
            return Err(Error::LengthMismatch { expected: spec.n, found: mask.beta_l.len().min(mask.beta_r.len()) });
        }
        let a_idx = dyadic_index(a, m)?;
        let b_idx = dyadic_index(b, m)?;
        // Stencils may overlap. The shorter one must fit inside the interval; the longer one may
        // reach past the far end, where it reads the other side's extension.
        let needed = ops.alpha1.min(ops.alpha2) as i64;
        if b_idx - a_idx < needed {
            return Err(Error::ResolutionTooLow(format!(
                "2^m (b - a) = {} but at least {needed} is required",
                b_idx - a_idx
            )));
        }
        let mut basis = Self { tables, ops, m, a_idx, b_idx, mask, coeffs: Vec::new() };
        basis.coeffs = (a_idx..=b_idx).map(|k| basis.translate_coefficients(k)).collect();
        Ok(basis)
    }

    /// Left-extension weight of sample `a + jj` at node `a - l`.
    fn left_weight(&self, jj: usize, l: i64) -> f64 {
        (0..self.ops.spec.n)
            .filter(|&i| self.mask.beta_l[i])
            .map(|i| self.ops.zeta_a[(i, jj)] * (-(l as f64)).powi(i as i32) / factorial(i))
            .sum()
    }

    /// Right-extension weight of sample `b - jj` at node `b + l`.
    fn right_weight(&self, jj: usize, l: i64) -> f64 {
        (0..self.ops.spec.n)
            .filter(|&i| self.mask.beta_r[i])
            .map(|i| self.ops.zeta_b[(i, jj)] * (l as f64).powi(i as i32) / factorial(i))
            .sum()
    }

    fn translate_coefficients(&self, k: i64) -> Vec<(i64, f64)> {
        let (a1, a2) = (self.ops.alpha1 as i64, self.ops.alpha2 as i64);
        let width = self.b_idx - self.a_idx;
        let mut c: BTreeMap<i64, f64> = BTreeMap::new();
        c.insert(k, 1.0);
        let jl = k - self.a_idx;
        let jr = self.b_idx - k;
        if (0..=a1).contains(&jl) {
            for l in 1..=a2 {
                *c.entry(self.a_idx - l).or_insert(0.0) += self.left_weight(jl as usize, l);
            }
            // A right stencil longer than the interval reads samples below `a` from the left extension.
            for jv in (width + 1)..=a2 {
                let via = self.left_weight(jl as usize, jv - width);
                for l in 1..=a1 {
                    *c.entry(self.b_idx + l).or_insert(0.0) += via * self.right_weight(jv as usize, l);
                }
            }
        }
        if (0..=a2).contains(&jr) {
            for l in 1..=a1 {
                *c.entry(self.b_idx + l).or_insert(0.0) += self.right_weight(jr as usize, l);
            }
            for jv in (width + 1)..=a1 {
                let via = self.right_weight(jr as usize, jv - width);
                for l in 1..=a2 {
                    *c.entry(self.a_idx - l).or_insert(0.0) += via * self.left_weight(jv as usize, l);
                }
            }
        }
        c.into_iter().collect()
    }

    pub fn level(&self) -> u32 {
        self.m
    }

    pub fn spec(&self) -> CoifletSpec {
        self.ops.spec
    }

    pub fn tables(&self) -> &ScalingTables {
        &self.tables
    }

    pub fn operators(&self) -> &BoundaryOperators {
        &self.ops
    }

    pub fn mask(&self) -> &BetaMask {
        &self.mask
    }

    pub fn a(&self) -> f64 {
        self.a_idx as f64 / 2f64.powi(self.m as i32)
    }

    pub fn b(&self) -> f64 {
        self.b_idx as f64 / 2f64.powi(self.m as i32)
    }

    /// Global index range of the nodes, `2^m a ..= 2^m b`.
    pub fn node_range(&self) -> (i64, i64) {
        (self.a_idx, self.b_idx)
    }

    pub fn len(&self) -> usize {
        (self.b_idx - self.a_idx + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = 2f64.powi(-(self.m as i32));
        (self.a_idx..=self.b_idx).map(|k| k as f64 * h).collect()
    }

    /// Translate coefficients of the basis member at local position `local` (0-based).
    pub fn coefficients(&self, local: usize) -> &[(i64, f64)] {
        &self.coeffs[local]
    }

    fn check_node(&self, k: i64) -> Result<usize> {
        if k < self.a_idx || k > self.b_idx {
            return Err(Error::Precondition(format!(
                "node {k} outside {}..={}",
                self.a_idx, self.b_idx
            )));
        }
        Ok((k - self.a_idx) as usize)
    }

    fn check_x(&self, x: f64) -> Result<()> {
        let eps = 1e-12;
        if x < self.a() - eps || x > self.b() + eps {
            return Err(Error::Precondition(format!("x = {x} outside [{}, {}]", self.a(), self.b())));
        }
        Ok(())
    }

    /// `d`-th derivative of `Phi_{m,k}` at `x`, where `k` is the global node index.
    pub fn eval_derivative(&self, k: i64, d: usize, x: f64, interpolate: bool) -> Result<f64> {
        let local = self.check_node(k)?;
        self.check_x(x)?;
        self.eval_coeffs(&self.coeffs[local], d, x, interpolate)
    }

    pub fn basis_eval(&self, k: i64, x: f64) -> Result<f64> {
        self.eval_derivative(k, 0, x, true)
    }

    fn eval_coeffs(&self, coeffs: &[(i64, f64)], d: usize, x: f64, interpolate: bool) -> Result<f64> {
        if d > self.tables.max_derivative {
            return Err(Error::Precondition(format!("derivative {d} not tabulated")));
        }
        let scale = 2f64.powi(self.m as i32);
        let y0 = scale * x + self.ops.spec.m1 as f64;
        let mut s = 0.0;
        for &(j, c) in coeffs {
            s += c * self.tables.eval(d, y0 - j as f64, interpolate)?;
        }
        Ok(s * scale.powi(d as i32))
    }

    /// Samples of `Phi_k^(d)` on the grid `x = i / 2^(m+q)` covering `[a, b]`.
    pub fn sample(&self, k: i64, d: usize, q: usize) -> Result<Vec<f64>> {
        let local = self.check_node(k)?;
        let stride = 1i64 << q;
        let m1 = self.ops.spec.m1 as i64;
        let i0 = self.a_idx * stride;
        let i1 = self.b_idx * stride;
        let mut out = vec![0.0; (i1 - i0 + 1) as usize];
        for &(j, c) in &self.coeffs[local] {
            for (o, i) in out.iter_mut().zip(i0..=i1) {
                *o += c * self.tables.at_dyadic(d, i + (m1 - j) * stride, q)?;
            }
        }
        let f = 2f64.powi((self.m as i32) * d as i32);
        out.iter_mut().for_each(|v| *v *= f);
        Ok(out)
    }
}

/// Evaluator `x -> sum_k f_k Phi_{m,k}(x)`.
#[derive(Clone, Debug)]
pub struct Approximant {
    basis: IntervalBasis,
    values: Vec<f64>,
    merged: Vec<(i64, f64)>,
}

impl Approximant {
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_derivative(0, x)
    }

    pub fn eval_derivative(&self, d: usize, x: f64) -> Result<f64> {
        self.basis.check_x(x)?;
        self.basis.eval_coeffs(&self.merged, d, x, true)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis(&self) -> &IntervalBasis {
        &self.basis
    }
}

/// Build the expansion of nodal samples `f_k = f(k / 2^m)` in the modified basis.
pub fn approximate(samples: &[f64], basis: &IntervalBasis) -> Result<Approximant> {
    if samples.len() != basis.len() {
        return Err(Error::LengthMismatch { expected: basis.len(), found: samples.len() });
    }
    let mut merged: BTreeMap<i64, f64> = BTreeMap::new();
    for (local, fk) in samples.iter().enumerate() {
        for &(j, c) in basis.coefficients(local) {
            *merged.entry(j).or_insert(0.0) += fk * c;
        }
    }
    Ok(Approximant { basis: basis.clone(), values: samples.to_vec(), merged: merged.into_iter().collect() })
}

/// Per-level errors of an approximation study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationStudy {
    pub levels: Vec<u32>,
    pub max_errors: Vec<f64>,
    /// Least-squares slope of `log2(error)` against `m`; `None` when exact.
    pub slope: Option<f64>,
    pub exact: bool,
}

pub const EXACT_THRESHOLD: f64 = 1e-10;

/// Approximate `f` on `[a, b]` for each level and measure the error at the probes.
#[allow(clippy::too_many_arguments)]
pub fn error_study<F, G>(
    tables: Arc<ScalingTables>,
    ops: Arc<BoundaryOperators>,
    a: f64,
    b: f64,
    f: F,
    exact: G,
    levels: &[u32],
    probes: &[f64],
    exec: Execution,
) -> Result<ApproximationStudy>
where
    F: Fn(f64) -> f64 + Sync + Send,
    G: Fn(f64) -> f64 + Sync + Send,
{
    if levels.len() < 3 || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("need at least three ascending levels".into()));
    }
    let n = tables.spec().n;
    let results = exec.map(levels.len(), |i| -> Result<f64> {
        let basis = IntervalBasis::new(tables.clone(), ops.clone(), levels[i], a, b, BetaMask::all_ones(n))?;
        let samples: Vec<f64> = basis.nodes().iter().map(|&x| f(x)).collect();
        let approx = approximate(&samples, &basis)?;
        let mut e: f64 = 0.0;
        for &x in probes {
            e = e.max((approx.eval(x)? - exact(x)).abs());
        }
        Ok(e)
    });
    let max_errors: Vec<f64> = results.into_iter().collect::<Result<_>>()?;
    let is_exact = max_errors.iter().all(|&e| e <= EXACT_THRESHOLD);
    let slope = if is_exact {
        None
    } else {
        let xs: Vec<f64> = levels.iter().map(|&m| m as f64).collect();
        let ys: Vec<f64> = max_errors.iter().map(|e| e.max(f64::MIN_POSITIVE).log2()).collect();
        Some(fit_line(&xs, &ys)?.0)
    };
    Ok(ApproximationStudy { levels: levels.to_vec(), max_errors, slope, exact: is_exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coiflet::FilterBank;

    fn setup(n: usize) -> (Arc<ScalingTables>, Arc<BoundaryOperators>) {
        let bank = FilterBank::reference(n, 7).unwrap();
        let t = ScalingTables::new(&bank, n - 1, 8).unwrap();
        let ops = build_boundary_operators(&t).unwrap();
        (Arc::new(t), Arc::new(ops))
    }

    #[test]
    fn stencil_sizes_and_constant_rows() {
        let (_, ops) = setup(6);
        assert_eq!((ops.alpha1, ops.alpha2), (6, 9));
        assert_eq!(ops.zeta_a.cols(), 7);
        assert_eq!(ops.zeta_b.cols(), 10);
        let sa: f64 = ops.zeta_a.row(0).iter().sum();
        let sb: f64 = ops.zeta_b.row(0).iter().sum();
        assert!((sa - 1.0).abs() < 1e-12 && (sb - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zeta_b_second_derivative_of_cubic() {
        let (_, ops) = setup(6);
        let h = 1.0 / 16.0;
        let s: f64 = (0..=9).map(|k| ops.zeta_b[(2, k)] * (1.0 - k as f64 * h).powi(3)).sum();
        assert!((s / (h * h) - 6.0).abs() < 1e-8 * 6.0);
    }

    #[test]
    fn zeta_polynomial_exactness() {
        let (_, ops) = setup(6);
        let (m, a, b) = (4, 0.25, 1.5);
        let h = 2f64.powi(-m);
        for n in 0..6i32 {
            for i in 0..6usize {
                let exact = |x: f64| {
                    if i as i32 > n {
                        0.0
                    } else {
                        (0..i).fold(1.0, |acc, q| acc * (n - q as i32) as f64) * x.powi(n - i as i32)
                    }
                };
                let sb: f64 = (0..=9).map(|k| ops.zeta_b[(i, k)] * (b - k as f64 * h).powi(n)).sum::<f64>() / h.powi(i as i32);
                let sa: f64 = (0..=6).map(|k| ops.zeta_a[(i, k)] * (a + k as f64 * h).powi(n)).sum::<f64>() / h.powi(i as i32);
                let tol = 1e-8 * exact(b).abs().max(1.0) * 2f64.powi(i as i32 * m);
                assert!((sb - exact(b)).abs() < tol, "b n={n} i={i}: {sb} vs {}", exact(b));
                let tol = 1e-8 * exact(a).abs().max(1.0) * 2f64.powi(i as i32 * m);
                assert!((sa - exact(a)).abs() < tol, "a n={n} i={i}");
            }
        }
    }

    #[test]
    fn extension_weights_examples() {
        let (_, ops) = setup(6);
        let ones = BetaMask::all_ones(6);
        for j in 0..=9 {
            let t = extension_weights(&ops, &ones, 4, 0.0, 1.0, Side::Right, j, 1.0).unwrap();
            assert_eq!(t, ops.zeta_b[(0, j)]);
        }
        let masked = BetaMask::with_zeros(6, &[], &[0]).unwrap();
        let t0 = extension_weights(&ops, &masked, 4, 0.0, 1.0, Side::Right, 3, 1.0).unwrap();
        assert_eq!(t0, 0.0);
        let h = 1.0 / 16.0;
        let x = 1.0 + h;
        let s: f64 = (0..=9)
            .map(|j| (1.0 - j as f64 * h).powi(2) * extension_weights(&ops, &ones, 4, 0.0, 1.0, Side::Right, j, x).unwrap())
            .sum();
        assert!((s - x * x).abs() < 1e-8 * x * x);
        assert!(extension_weights(&ops, &ones, 4, 0.0, 1.0, Side::Left, 7, -h).is_err());
    }

    #[test]
    fn interior_basis_member_hits_table_value() {
        let (t, ops) = setup(6);
        let basis = IntervalBasis::new(t, ops, 4, 0.0, 1.0, BetaMask::all_ones(6)).unwrap();
        let k = 8;
        let x = k as f64 / 16.0;
        let v = basis.basis_eval(k, x).unwrap();
        assert!((v - 1.13897129589829).abs() < 1e-13);
    }

    #[test]
    fn partition_of_unity_and_polynomials() {
        let (t, ops) = setup(6);
        let basis = IntervalBasis::new(t, ops, 4, 0.0, 1.0, BetaMask::all_ones(6)).unwrap();
        for i in 0..=64 {
            let x = i as f64 / 64.0;
            let s: f64 = (0..=16).map(|k| basis.basis_eval(k, x).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-10, "x={x}: {s}");
        }
        let samples: Vec<f64> = basis.nodes().iter().map(|x| x.powi(5)).collect();
        let ap = approximate(&samples, &basis).unwrap();
        for i in 0..=64 {
            let x = i as f64 / 64.0;
            assert!((ap.eval(x).unwrap() - x.powi(5)).abs() < 1e-8 * x.powi(5).max(1e-2));
        }
        assert!(approximate(&samples[..3], &basis).is_err());
    }

    #[test]
    fn dirichlet_mask_reproduces_vanishing_polynomials() {
        let (t, ops) = setup(6);
        let mask = BetaMask::with_zeros(6, &[0], &[0]).unwrap();
        let basis = IntervalBasis::new(t, ops, 4, 0.0, 1.0, mask).unwrap();
        let f = |x: f64| x * (1.0 - x) * (1.0 + x * x);
        let samples: Vec<f64> = basis.nodes().iter().map(|&x| f(x)).collect();
        let ap = approximate(&samples, &basis).unwrap();
        assert!(ap.eval(0.0).unwrap().abs() < 1e-10);
        assert!(ap.eval(1.0).unwrap().abs() < 1e-10);
        assert!((ap.eval(0.3125).unwrap() - f(0.3125)).abs() < 1e-10);
    }

    #[test]
    fn too_coarse_resolution() {
        let (t, ops) = setup(6);
        assert!(matches!(
            IntervalBasis::new(t, ops, 2, 0.0, 1.0, BetaMask::all_ones(6)),
            Err(Error::ResolutionTooLow(_))
        ));
    }

    #[test]
    fn long_stencil_reads_the_far_extension() {
        // 8 intervals: the right stencil (10 samples) reaches one node below the left end.
        let (t, ops) = setup(6);
        let basis = IntervalBasis::new(t, ops, 3, 0.0, 1.0, BetaMask::all_ones(6)).unwrap();
        let f = |x: f64| 1.0 - 2.0 * x + 3.0 * x.powi(3) - x.powi(5);
        let samples: Vec<f64> = basis.nodes().iter().map(|&x| f(x)).collect();
        let ap = approximate(&samples, &basis).unwrap();
        for i in 0..=32 {
            let x = i as f64 / 32.0;
            assert!((ap.eval(x).unwrap() - f(x)).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn sampled_grid_matches_pointwise() {
        let (t, ops) = setup(6);
        let basis = IntervalBasis::new(t, ops, 4, 0.0, 1.0, BetaMask::all_ones(6)).unwrap();
        let s = basis.sample(2, 1, 3).unwrap();
        for (i, v) in s.iter().enumerate().step_by(7) {
            let x = i as f64 / 128.0;
            assert!((v - basis.eval_derivative(2, 1, x, false).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn sine_with_order_four_bank() {
        let (t, ops) = setup(4);
        let probes: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let pi = std::f64::consts::PI;
        let st = error_study(
            t,
            ops,
            0.0,
            1.0,
            |x| (pi * x).sin(),
            |x| (pi * x).sin(),
            &[3, 4, 5, 6],
            &probes,
            Execution::Sequential,
        )
        .unwrap();
        let s = st.slope.unwrap();
        assert!((-4.7..=-3.3).contains(&s), "slope {s}");
    }

    #[test]
    fn quadratic_study_is_exact() {
        let (t, ops) = setup(6);
        let st = error_study(t, ops, 0.0, 1.0, |x| x * x, |x| x * x, &[4, 5, 6], &[0.5, 0.25], Execution::Sequential).unwrap();
        assert!(st.exact && st.slope.is_none());
    }
}
