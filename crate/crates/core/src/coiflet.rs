//! Coiflet filters and exact tables of the scaling function.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial, eigenvector_for, factorial, DenseMatrix, Lu};

/// Approximation order `N` and first moment `M1` of a Coiflet scaling function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoifletSpec {
    pub n: usize,
    pub m1: usize,
}

impl CoifletSpec {
    pub fn new(n: usize, m1: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!("N must be even and >= 2, got {n}")));
        }
        if m1 < 1 || m1 > 3 * n - 2 {
            return Err(Error::InvalidSpec(format!("M1 must lie in 1..={}, got {m1}", 3 * n - 2)));
        }
        Ok(Self { n, m1 })
    }

    /// Number of filter taps, `3N`.
    pub fn len(&self) -> usize {
        3 * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Right end of the support `[0, 3N-1]`.
    pub fn support_end(&self) -> usize {
        3 * self.n - 1
    }

    pub fn alpha1(&self) -> usize {
        self.m1 - 1
    }

    pub fn alpha2(&self) -> usize {
        3 * self.n - 2 - self.m1
    }
}

const SEED_2_3: [f64; 6] = [
    -0.02214054305846309,
    -0.10285945694153692,
    0.5442810861169263,
    1.205718913883074,
    0.47785945694153703,
    -0.10285945694153692,
];

const SEED_4_7: [f64; 12] = [
    -1.019_010_798_215_358e-3,
    -2.5784067122810953e-03,
    7.935_767_225_923_977e-3,
    3.348_882_032_655_586e-2,
    -8.405_296_092_154_523e-2,
    -1.0817121418341687e-01,
    5.897_343_873_912_456e-1,
    1.1493647877137276e+00,
    5.460_420_930_695_257e-1,
    -9.527_918_062_202_193e-2,
    -5.864_027_596_693_468e-2,
    2.3175193477436365e-02,
];

const SEED_6_7: [f64; 18] = [
    -2.392_638_657_284_65e-3,
    -4.932_601_853_975_054e-3,
    2.7140399711418302e-02,
    3.0647555946288953e-02,
    -1.3931023707082485e-01,
    -8.060_653_071_785_42e-2,
    6.459_945_432_931_052e-1,
    1.1162662132576602e+00,
    5.381_890_557_071_317e-1,
    -9.961_543_386_234_771e-2,
    -7.992_313_943_478_198e-2,
    5.1491462932362175e-02,
    1.2388695657062356e-02,
    -1.5831780392556134e-02,
    -2.717_178_600_533_361e-3,
    2.8869486640183484e-03,
    6.304_993_947_072_934e-4,
    -3.0583397359661954e-04,
];

fn embedded_seeds() -> [(CoifletSpec, &'static [f64]); 3] {
    [
        (CoifletSpec { n: 2, m1: 3 }, &SEED_2_3),
        (CoifletSpec { n: 4, m1: 7 }, &SEED_4_7),
        (CoifletSpec { n: 6, m1: 7 }, &SEED_6_7),
    ]
}

/// Low-pass filter `p_0..p_{3N-1}` of a Coiflet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    pub spec: CoifletSpec,
    pub p: Vec<f64>,
    pub residual_norm: f64,
}

/// Maximum residual of each constraint family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// `sum p_k - 2`.
    pub sum: f64,
    /// Orthogonality `sum_i p_i p_{i-2k} - 2 delta_{0k}`.
    pub orthogonality: f64,
    /// Alternating moments `sum_j (-1)^j p_j j^k`.
    pub vanishing_moments: f64,
    /// Relative residual of `sum_j j^{2i-1} p_j = 2 M1^{2i-1}`.
    pub shifted_moments: f64,
}

impl ConstraintResiduals {
    pub fn max(&self) -> f64 {
        self.sum
            .max(self.orthogonality)
            .max(self.vanishing_moments)
            .max(self.shifted_moments)
    }
}

/// Evaluate all constraint families for a candidate filter.
pub fn constraint_residuals(spec: CoifletSpec, p: &[f64]) -> ConstraintResiduals {
    let n = spec.n;
    let l = spec.len();
    let sum = (p.iter().sum::<f64>() - 2.0).abs();
    let mut orth: f64 = 0.0;
    for k in 0..l / 2 {
        let s: f64 = (2 * k..l).map(|i| p[i] * p[i - 2 * k]).sum();
        let target = if k == 0 { 2.0 } else { 0.0 };
        orth = orth.max((s - target).abs());
    }
    let mut van: f64 = 0.0;
    for k in 0..n {
        let s: f64 = (0..l)
            .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * p[j] * (j as f64).powi(k as i32))
            .sum();
        van = van.max(s.abs());
    }
    let mut shifted: f64 = 0.0;
    for i in 1..=n / 2 {
        let e = (2 * i - 1) as i32;
        let target = 2.0 * (spec.m1 as f64).powi(e);
        let s: f64 = (0..l).map(|j| (j as f64).powi(e) * p[j]).sum();
        shifted = shifted.max(((s - target) / target).abs());
    }
    ConstraintResiduals { sum, orthogonality: orth, vanishing_moments: van, shifted_moments: shifted }
}

/// Square Newton system: orthogonality, alternating moments and scaled shifted moments.
///
/// The normalization `sum p = 2` is implied locally by orthogonality and the first
/// alternating moment, and including it makes the Jacobian singular; it is checked afterwards.
fn newton_system(spec: CoifletSpec, p: &[f64]) -> (Vec<f64>, DenseMatrix) {
    let n = spec.n;
    let l = spec.len();
    let mut r = Vec::with_capacity(l);
    let mut jac = DenseMatrix::zeros(l, l);
    let mut row = 0;
    for k in 0..l / 2 {
        let mut s = 0.0;
        for i in 2 * k..l {
            s += p[i] * p[i - 2 * k];
            jac[(row, i)] += p[i - 2 * k];
            jac[(row, i - 2 * k)] += p[i];
        }
        r.push(s - if k == 0 { 2.0 } else { 0.0 });
        row += 1;
    }
    for k in 0..n {
        let mut s = 0.0;
        for (j, pj) in p.iter().enumerate() {
            let c = if j % 2 == 0 { 1.0 } else { -1.0 } * (j as f64).powi(k as i32);
            s += c * pj;
            jac[(row, j)] = c;
        }
        r.push(s);
        row += 1;
    }
    for i in 1..=n / 2 {
        let e = (2 * i - 1) as i32;
        let scale = (spec.m1 as f64).powi(e);
        let mut s = 0.0;
        for (j, pj) in p.iter().enumerate() {
            let c = (j as f64).powi(e) / scale;
            s += c * pj;
            jac[(row, j)] = c;
        }
        r.push(s - 2.0);
        row += 1;
    }
    (r, jac)
}

const NEWTON_CAP: usize = 100;

fn damped_newton(spec: CoifletSpec, guess: &[f64]) -> Result<Vec<f64>> {
    let mut p = guess.to_vec();
    let norm = |r: &[f64]| r.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let (mut r, mut jac) = newton_system(spec, &p);
    let mut res = norm(&r);
    // A guess already solving the system at working precision is kept as is: further
    // float steps only move along round-off.
    if res <= 1e-12 {
        return Ok(p);
    }
    for it in 0..NEWTON_CAP {
        if res < 1e-15 {
            return Ok(p);
        }
        let dp = Lu::new(&jac)?.solve(&r)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-4 {
            let q: Vec<f64> = p.iter().zip(&dp).map(|(a, b)| a - lambda * b).collect();
            let (rq, jq) = newton_system(spec, &q);
            let resq = norm(&rq);
            if resq < res {
                p = q;
                r = rq;
                jac = jq;
                res = resq;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // Round-off floor reached.
            if res <= 1e-12 {
                return Ok(p);
            }
            return Err(Error::NoConvergence { iterations: it, residual: res });
        }
    }
    if res <= 1e-12 {
        Ok(p)
    } else {
        Err(Error::NoConvergence { iterations: NEWTON_CAP, residual: res })
    }
}

/// Solve the Coiflet constraint system by damped Newton.
///
/// Without an explicit guess the embedded reference filters are tried first, then a
/// generic guess concentrated around `M1`.
pub fn solve_filter_coefficients(spec: CoifletSpec, initial_guess: Option<&[f64]>) -> Result<FilterBank> {
    let spec = CoifletSpec::new(spec.n, spec.m1)?;
    let l = spec.len();
    if let Some(g) = initial_guess {
        if g.len() != l {
            return Err(Error::LengthMismatch { expected: l, found: g.len() });
        }
        let p = damped_newton(spec, g)?;
        return validate(spec, p);
    }
    let mut guesses: Vec<Vec<f64>> = Vec::new();
    for (s, seed) in embedded_seeds() {
        if s == spec {
            guesses.push(seed.to_vec());
        }
    }
    for (s, seed) in embedded_seeds() {
        if s.n == spec.n && s != spec {
            guesses.push(seed.to_vec());
        }
    }
    // Hat centred so that sum j p_j = 2 M1.
    let mut hat = vec![0.0; l];
    for (j, v) in hat.iter_mut().enumerate() {
        let d = j as f64 - spec.m1 as f64;
        *v = (1.0 - d.abs() / 2.0).max(0.0);
    }
    let s: f64 = hat.iter().sum();
    hat.iter_mut().for_each(|v| *v *= 2.0 / s);
    guesses.push(hat);
    let mut last_err = None;
    for g in guesses {
        match damped_newton(spec, &g).and_then(|p| validate(spec, p)) {
            Ok(bank) => return Ok(bank),
            Err(e) => last_err = Some(e),
        }
    }
    match last_err {
        Some(Error::NoConvergence { .. }) | Some(Error::Singular { .. }) | None => {
            Err(Error::UnsupportedSpec { n: spec.n, m1: spec.m1 })
        }
        Some(e) => Err(e),
    }
}

fn validate(spec: CoifletSpec, p: Vec<f64>) -> Result<FilterBank> {
    let res = constraint_residuals(spec, &p);
    let residual_norm = res.max();
    if residual_norm > 1e-12 || !residual_norm.is_finite() {
        return Err(Error::NoConvergence { iterations: NEWTON_CAP, residual: residual_norm });
    }
    Ok(FilterBank { spec, p, residual_norm })
}

impl FilterBank {
    /// Bank for one of the built-in reference pairs, re-validated by Newton polishing.
    pub fn reference(n: usize, m1: usize) -> Result<Self> {
        solve_filter_coefficients(CoifletSpec::new(n, m1)?, None)
    }

    pub fn residuals(&self) -> ConstraintResiduals {
        constraint_residuals(self.spec, &self.p)
    }

    /// Refinement matrix `T[i][j] = p_{2i-j}`, `i, j = 1..3N-2`.
    pub fn refinement_matrix(&self) -> DenseMatrix {
        let l = self.spec.len() as isize;
        let n = (l - 2) as usize;
        DenseMatrix::from_fn(n, n, |i, j| {
            let idx = 2 * (i as isize + 1) - (j as isize + 1);
            if (0..l).contains(&idx) {
                self.p[idx as usize]
            } else {
                0.0
            }
        })
    }
}

/// `phi^(d)(k)` for `k = 0..3N-1`.
pub fn integer_values(bank: &FilterBank, d: usize) -> Result<Vec<f64>> {
    let spec = bank.spec;
    let t = bank.refinement_matrix();
    let lambda = 0.5f64.powi(d as i32);
    let v = eigenvector_for(&t, lambda, 1e-11)?;
    let m1 = spec.m1 as f64;
    let s: f64 = v
        .iter()
        .enumerate()
        .map(|(i, vi)| (m1 - (i + 1) as f64).powi(d as i32) * vi)
        .sum();
    let scale = factorial(d) / s;
    let mut out = Vec::with_capacity(spec.len());
    out.push(0.0);
    out.extend(v.iter().map(|x| x * scale));
    out.push(0.0);
    Ok(out)
}

/// `int_0^k phi` for `k = 0..3N-1`.
pub fn integral_integer_values(bank: &FilterBank) -> Result<Vec<f64>> {
    let l = bank.spec.len();
    let n = l - 2;
    let mut a = DenseMatrix::identity(n);
    let mut b = vec![0.0; n];
    for k in 1..=n {
        for (li, pl) in bank.p.iter().enumerate() {
            let x = 2 * k as isize - li as isize;
            if (1..=n as isize).contains(&x) {
                a[(k - 1, x as usize - 1)] -= 0.5 * pl;
            } else if x >= l as isize - 1 {
                b[k - 1] += 0.5 * pl;
            }
        }
    }
    let v = Lu::new(&a)?.solve(&b)?;
    let mut out = Vec::with_capacity(l);
    out.push(0.0);
    out.extend(v);
    out.push(1.0);
    Ok(out)
}

/// Refine values of `phi^(d)` from dyadic level `j` (spacing `2^-j`) to level `j+1`.
pub fn dyadic_refine(values: &[f64], bank: &FilterBank, d: usize) -> Result<Vec<f64>> {
    let span = bank.spec.support_end();
    let n = values.len();
    let step = (n.max(1) - 1) / span;
    if n < 2 || !(n - 1).is_multiple_of(span) || !step.is_power_of_two() {
        return Err(Error::LengthMismatch { expected: span + 1, found: n });
    }
    let factor = 2f64.powi(d as i32);
    let mut out = vec![0.0; 2 * (n - 1) + 1];
    for (k, pk) in bank.p.iter().enumerate() {
        let shift = k * step;
        for (i, o) in out.iter_mut().enumerate().skip(shift) {
            let idx = i - shift;
            if idx >= n {
                break;
            }
            *o += pk * values[idx];
        }
    }
    out.iter_mut().for_each(|v| *v *= factor);
    Ok(out)
}

/// Moments `M_n = int x^n phi` for `n = 0..=n_max`.
pub fn moments(bank: &FilterBank, n_max: usize) -> Vec<f64> {
    let mut m = vec![1.0];
    for n in 1..=n_max {
        let mut s = 0.0;
        for (i, mi) in m.iter().enumerate() {
            let pk: f64 = bank
                .p
                .iter()
                .enumerate()
                .map(|(k, p)| p * (k as f64).powi((n - i) as i32))
                .sum();
            s += binomial(n, i) * mi * pk;
        }
        let c = 0.5f64.powi(n as i32 + 1) / (1.0 - 0.5f64.powi(n as i32));
        m.push(s * c);
    }
    m
}

/// Integer, dyadic and cumulative-integral values of the scaling function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTables {
    pub bank: FilterBank,
    pub max_derivative: usize,
    /// `integer_values[d][k] = phi^(d)(k)`.
    pub integer_values: Vec<Vec<f64>>,
    pub dyadic_level: usize,
    /// `dyadic_values[d][i] = phi^(d)(i / 2^J)`.
    pub dyadic_values: Vec<Vec<f64>>,
    pub integral_values: Vec<f64>,
    pub moments: Vec<f64>,
}

pub const DEFAULT_MAX_DERIVATIVE: usize = 5;
pub const DEFAULT_DYADIC_LEVEL: usize = 12;

impl ScalingTables {
    pub fn new(bank: &FilterBank, max_derivative: usize, dyadic_level: usize) -> Result<Self> {
        let integer: Vec<Vec<f64>> = (0..=max_derivative)
            .map(|d| integer_values(bank, d))
            .collect::<Result<_>>()?;
        let mut dyadic = Vec::with_capacity(integer.len());
        for (d, v) in integer.iter().enumerate() {
            let mut cur = v.clone();
            for _ in 0..dyadic_level {
                cur = dyadic_refine(&cur, bank, d)?;
            }
            dyadic.push(cur);
        }
        Ok(Self {
            bank: bank.clone(),
            max_derivative,
            integer_values: integer,
            dyadic_level,
            dyadic_values: dyadic,
            integral_values: integral_integer_values(bank)?,
            moments: moments(bank, bank.spec.n),
        })
    }

    /// Tables with derivatives up to `max(N-1, 5)` and the default dyadic level.
    pub fn with_defaults(bank: &FilterBank) -> Result<Self> {
        let d = DEFAULT_MAX_DERIVATIVE.max(bank.spec.n - 1);
        Self::new(bank, d, DEFAULT_DYADIC_LEVEL)
    }

    pub fn spec(&self) -> CoifletSpec {
        self.bank.spec
    }

    /// `phi^(d)(k)` for any integer `k`, zero outside the support.
    pub fn at_integer(&self, d: usize, k: i64) -> f64 {
        let end = self.spec().support_end() as i64;
        if (0..=end).contains(&k) {
            self.integer_values[d][k as usize]
        } else {
            0.0
        }
    }

    /// `int_0^k phi` for any integer `k` (0 below the support, 1 above).
    pub fn integral_at(&self, k: i64) -> f64 {
        let end = self.spec().support_end() as i64;
        if k <= 0 {
            0.0
        } else if k >= end {
            1.0
        } else {
            self.integral_values[k as usize]
        }
    }

    /// `phi^(d)(i / 2^q)` for `q <= J`, zero outside the support.
    pub fn at_dyadic(&self, d: usize, i: i64, q: usize) -> Result<f64> {
        if q > self.dyadic_level {
            return Err(Error::ResolutionTooLow(format!(
                "level {q} requested but tables hold level {}",
                self.dyadic_level
            )));
        }
        let stride = 1i64 << (self.dyadic_level - q);
        let idx = i * stride;
        let table = &self.dyadic_values[d];
        if idx < 0 || idx >= table.len() as i64 {
            Ok(0.0)
        } else {
            Ok(table[idx as usize])
        }
    }

    /// `phi^(d)(x)`: exact on the level-J grid, otherwise degree-(N-1) local interpolation
    /// when `interpolate` is set.
    pub fn eval(&self, d: usize, x: f64, interpolate: bool) -> Result<f64> {
        let scale = (1u64 << self.dyadic_level) as f64;
        let t = x * scale;
        let r = t.round();
        if (t - r).abs() < 1e-7 {
            return self.at_dyadic(d, r as i64, self.dyadic_level);
        }
        if !interpolate {
            return Err(Error::ResolutionTooLow(format!("x = {x} is off the level-{} grid", self.dyadic_level)));
        }
        let deg = self.spec().n - 1;
        let start = t.floor() as i64 - (deg as i64) / 2;
        let nodes: Vec<i64> = (start..=start + deg as i64).collect();
        let mut acc = 0.0;
        for (a, &na) in nodes.iter().enumerate() {
            let mut w = 1.0;
            for (b, &nb) in nodes.iter().enumerate() {
                if a != b {
                    w *= (t - nb as f64) / (na - nb) as f64;
                }
            }
            acc += w * self.at_dyadic(d, na, self.dyadic_level)?;
        }
        Ok(acc)
    }

    pub fn to_document(&self) -> FilterDocument {
        FilterDocument {
            n: self.spec().n,
            m1: self.spec().m1,
            p: self.bank.p.clone(),
            residual_norm: self.bank.residual_norm,
            integer_values: self
                .integer_values
                .iter()
                .enumerate()
                .map(|(d, v)| (d.to_string(), v.clone()))
                .collect(),
            integral_values: self.integral_values.clone(),
            moments: self.moments.clone(),
        }
    }
}

/// JSON form of a filter bank and its tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterDocument {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M1")]
    pub m1: usize,
    pub p: Vec<f64>,
    pub residual_norm: f64,
    pub integer_values: BTreeMap<String, Vec<f64>>,
    pub integral_values: Vec<f64>,
    pub moments: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bank6() -> FilterBank {
        FilterBank::reference(6, 7).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(CoifletSpec::new(3, 2).is_err());
        assert!(CoifletSpec::new(6, 17).is_err());
        assert!(CoifletSpec::new(6, 0).is_err());
        let s = CoifletSpec::new(6, 7).unwrap();
        assert_eq!((s.alpha1(), s.alpha2(), s.support_end()), (6, 9, 17));
    }

    #[test]
    fn solved_banks_satisfy_constraints() {
        for (n, m1) in [(4, 7), (6, 7)] {
            let b = FilterBank::reference(n, m1).unwrap();
            assert!(b.residual_norm <= 1e-12, "{n},{m1}: {}", b.residual_norm);
            assert!((b.p.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn newton_from_perturbed_guess() {
        let mut g = SEED_6_7.to_vec();
        for (i, v) in g.iter_mut().enumerate() {
            *v += 1e-4 * ((i as f64) * 0.7).sin();
        }
        let b = solve_filter_coefficients(CoifletSpec::new(6, 7).unwrap(), Some(&g)).unwrap();
        let r = bank6();
        for (a, c) in b.p.iter().zip(&r.p) {
            assert!((a - c).abs() < 1e-12);
        }
        assert!(matches!(
            solve_filter_coefficients(CoifletSpec::new(6, 7).unwrap(), Some(&g[..4])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn table_spot_values() {
        let b = bank6();
        let v0 = integer_values(&b, 0).unwrap();
        assert_relative_eq!(v0[7], 1.13897129589829, max_relative = 1e-12);
        assert_relative_eq!(v0[5], 3.83279869108597e-02, max_relative = 1e-10);
        assert!((v0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!((v0[0], v0[17]), (0.0, 0.0));
        let v1 = integer_values(&b, 1).unwrap();
        assert_relative_eq!(v1[6], 9.30506852076968e-01, max_relative = 1e-10);
        let int = integral_integer_values(&b).unwrap();
        assert_relative_eq!(int[8], 1.051493179855499, max_relative = 1e-10);
        assert_relative_eq!(int[16], 1.000000000000944, max_relative = 1e-12);
        assert_eq!(int[0], 0.0);
    }

    #[test]
    fn normalization_identity() {
        let b = bank6();
        for d in 0..=5 {
            let v = integer_values(&b, d).unwrap();
            let s: f64 = v.iter().enumerate().map(|(j, x)| (7.0 - j as f64).powi(d as i32) * x).sum();
            assert_relative_eq!(s, factorial(d), max_relative = 1e-9);
        }
    }

    #[test]
    fn moments_match_m1_powers() {
        let b = bank6();
        let m = moments(&b, 6);
        assert_eq!(m[0], 1.0);
        assert!((m[1] - 7.0).abs() < 1e-10);
        for (n, mn) in m.iter().enumerate().skip(1) {
            assert_relative_eq!(*mn, 7f64.powi(n as i32), max_relative = 1e-8);
        }
    }

    #[test]
    fn sixth_moment_by_dyadic_quadrature() {
        let b = bank6();
        let t = ScalingTables::new(&b, 0, 12).unwrap();
        let h = 1.0 / 4096.0;
        let samples: Vec<f64> = t.dyadic_values[0]
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64 * h).powi(6) * v)
            .collect();
        let q = crate::numeric::composite_simpson(&samples, h).unwrap();
        assert_relative_eq!(q, 7f64.powi(6), max_relative = 1e-6);
    }

    #[test]
    fn refinement_nesting_and_partition() {
        let b = bank6();
        let v0 = integer_values(&b, 0).unwrap();
        let r1 = dyadic_refine(&v0, &b, 0).unwrap();
        let r2 = dyadic_refine(&r1, &b, 0).unwrap();
        for (i, v) in r1.iter().enumerate() {
            assert!((r2[2 * i] - v).abs() < 1e-12, "{}", r2[2 * i] - v);
        }
        for (i, v) in v0.iter().enumerate() {
            assert!((r1[2 * i] - v).abs() < 1e-12, "{}", r1[2 * i] - v);
        }
        // Partition of unity at level-2 points x in [0, 1).
        for off in 0..4 {
            let s: f64 = (0..18).map(|k| *r2.get(off + 4 * k).unwrap_or(&0.0)).sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
        assert!(dyadic_refine(&v0[..10], &b, 0).is_err());
    }

    #[test]
    fn derivative_integrates_to_difference() {
        let b = bank6();
        let t = ScalingTables::new(&b, 1, 12).unwrap();
        let h = 1.0 / 4096.0;
        for (a, c) in [(2usize, 5usize), (6, 9), (0, 17)] {
            let seg = &t.dyadic_values[1][a * 4096..=c * 4096];
            let q = crate::numeric::composite_simpson(seg, h).unwrap();
            let exact = t.integer_values[0][c] - t.integer_values[0][a];
            assert!((q - exact).abs() < 1e-8, "{a}..{c}: {q} vs {exact}");
        }
    }

    #[test]
    fn interpolated_evaluation_is_close() {
        let b = bank6();
        let t = ScalingTables::new(&b, 0, 10).unwrap();
        let exact = t.eval(0, 7.0, false).unwrap();
        assert_relative_eq!(exact, 1.13897129589829, max_relative = 1e-12);
        let x = 7.0 + 1.0 / 3.0;
        assert!(t.eval(0, x, false).is_err());
        let fine = ScalingTables::new(&b, 0, 14).unwrap();
        let a = t.eval(0, x, true).unwrap();
        let c = fine.eval(0, x, true).unwrap();
        assert!((a - c).abs() < 1e-6);
    }
}
