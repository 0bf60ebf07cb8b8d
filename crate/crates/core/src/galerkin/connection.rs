//! Exact integrals of products of scaling-function translates and their first derivatives.

use crate::coiflet::{moments, ScalingTables};
use crate::error::{Error, Result};
use crate::numeric::{binomial, factorial, least_squares, solve, DenseMatrix};

/// `mu[q][s] = int_0^s y^q phi(y) dy` for integer `s` in `0..=R`.
pub fn partial_moments(tables: &ScalingTables, q_max: usize) -> Result<Vec<Vec<f64>>> {
    let p = &tables.bank.p;
    let r = p.len() - 1;
    let full = moments(&tables.bank, q_max);
    let mut mu: Vec<Vec<f64>> = Vec::with_capacity(q_max + 1);
    for q in 0..=q_max {
        let n = r - 1;
        let mut a = DenseMatrix::identity(n);
        let mut b = vec![0.0; n];
        for s in 1..r {
            for (k, &pk) in p.iter().enumerate() {
                let ss = 2 * s as i64 - k as i64;
                if ss <= 0 {
                    continue;
                }
                let c = 0.5f64.powi(q as i32 + 1) * pk;
                for i in 0..=q {
                    let cf = c * binomial(q, i) * (k as f64).powi((q - i) as i32);
                    if ss >= r as i64 {
                        b[s - 1] += cf * full[i];
                    } else if i == q {
                        a[(s - 1, ss as usize - 1)] -= cf;
                    } else {
                        b[s - 1] += cf * mu[i][ss as usize];
                    }
                }
            }
        }
        let v = solve(&a, &b)?;
        let mut row = Vec::with_capacity(r + 1);
        row.push(0.0);
        row.extend(v);
        row.push(full[q]);
        mu.push(row);
    }
    Ok(mu)
}

/// `I(r, s) = int_{-inf}^s phi^(d1)(y) phi^(d2)(y - r) dy` for integer `r` and `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionTable {
    pub d1: usize,
    pub d2: usize,
    support: i64,
    /// Full integrals, indexed by `r + R`.
    omega: Vec<f64>,
    /// Partial integrals, indexed by `(r + R) * (R + 1) + s`.
    partial: Vec<f64>,
    /// Largest residual of the defining linear systems.
    pub residual: f64,
}

impl ConnectionTable {
    pub fn new(tables: &ScalingTables, d1: usize, d2: usize) -> Result<Self> {
        if d1 > 1 || d2 > 1 || d1 < d2 {
            return Err(Error::Precondition(format!("connection pair ({d1}, {d2}) is not supported")));
        }
        let spec = tables.spec();
        let p = &tables.bank.p;
        let big_r = (p.len() - 1) as i64;
        let ru = big_r as usize;
        let d = d1 + d2;
        let m1 = spec.m1 as f64;
        let scale = 2f64.powi(d as i32 - 1);
        let nr = 2 * ru + 1;

        // Full integrals: two-scale relation plus one normalization row.
        let mut m = DenseMatrix::zeros(nr + 1, nr);
        for r in -big_r..=big_r {
            for (k, &pk) in p.iter().enumerate() {
                for (l, &pl) in p.iter().enumerate() {
                    let rr = 2 * r + l as i64 - k as i64;
                    if rr.abs() <= big_r {
                        m[((r + big_r) as usize, (rr + big_r) as usize)] += scale * pk * pl;
                    }
                }
            }
            m[((r + big_r) as usize, (r + big_r) as usize)] -= 1.0;
            m[(nr, (r + big_r) as usize)] = (m1 + r as f64).powi(d as i32);
        }
        let mut rhs = vec![0.0; nr + 1];
        rhs[nr] = if d1 % 2 == 1 { -factorial(d) } else { factorial(d) };
        let omega = least_squares(&m, &rhs)?;
        let mut residual = lin_residual(&m, &omega, &rhs);

        let lo = |r: i64| r.max(0);
        let hi = |r: i64| big_r.min(big_r + r);
        let mut index = vec![usize::MAX; nr * (ru + 1)];
        let mut unknowns = Vec::new();
        for r in -big_r..=big_r {
            for s in lo(r) + 1..hi(r) {
                index[(r + big_r) as usize * (ru + 1) + s as usize] = unknowns.len();
                unknowns.push((r, s));
            }
        }
        let known = |r: i64, s: i64| -> Option<f64> {
            if r.abs() > big_r || s <= lo(r) {
                Some(0.0)
            } else if s >= hi(r) {
                Some(omega[(r + big_r) as usize])
            } else {
                None
            }
        };
        let slot = |r: i64, s: i64| index[(r + big_r) as usize * (ru + 1) + s as usize];

        let nu = unknowns.len();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        for (i, &(r, s)) in unknowns.iter().enumerate() {
            let mut row = vec![0.0; nu];
            row[i] = 1.0;
            let mut bb = 0.0;
            for (k, &pk) in p.iter().enumerate() {
                for (l, &pl) in p.iter().enumerate() {
                    let rr = 2 * r + l as i64 - k as i64;
                    let ss = 2 * s - k as i64;
                    let c = scale * pk * pl;
                    match known(rr, ss) {
                        Some(v) => bb += c * v,
                        None => row[slot(rr, ss)] -= c,
                    }
                }
            }
            rows.push(row);
            b.push(bb);
        }

        // Polynomial reproduction: sum_r (M1 + r)^q' phi^(d2)(y - r) = D^d2 y^q'.
        let mu = partial_moments(tables, spec.n)?;
        let phi_int = |s: i64| tables.at_integer(0, s);
        for s in 1..big_r {
            for nn in d2..spec.n {
                let coef = factorial(nn) / factorial(nn - d2);
                let q = nn - d2;
                let val = if d1 == 0 {
                    coef * mu[q][s as usize]
                } else {
                    let lower = if q > 0 { q as f64 * mu[q - 1][s as usize] } else { 0.0 };
                    coef * (phi_int(s) * (s as f64).powi(q as i32) - lower)
                };
                let mut row = vec![0.0; nu];
                let mut bb = val;
                for r in -big_r..=big_r {
                    let w = (m1 + r as f64).powi(nn as i32);
                    match known(r, s) {
                        Some(v) => bb -= w * v,
                        None => row[slot(r, s)] += w,
                    }
                }
                let sc = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if sc > 0.0 {
                    row.iter_mut().for_each(|v| *v /= sc);
                    bb /= sc;
                }
                rows.push(row);
                b.push(bb);
            }
        }
        let sys = DenseMatrix::from_rows(&rows)?;
        let sol = least_squares(&sys, &b)?;
        residual = residual.max(lin_residual(&sys, &sol, &b));
        if residual > 1e-10 {
            return Err(Error::NoConvergence { iterations: 1, residual });
        }

        let mut partial = vec![0.0; nr * (ru + 1)];
        for r in -big_r..=big_r {
            for s in 0..=big_r {
                let idx = (r + big_r) as usize * (ru + 1) + s as usize;
                partial[idx] = match known(r, s) {
                    Some(v) => v,
                    None => sol[slot(r, s)],
                };
            }
        }
        Ok(Self { d1, d2, support: big_r, omega, partial, residual })
    }

    /// Full integral `int phi^(d1)(y) phi^(d2)(y - r) dy`.
    pub fn full(&self, r: i64) -> f64 {
        if r.abs() > self.support {
            0.0
        } else {
            self.omega[(r + self.support) as usize]
        }
    }

    pub fn value(&self, r: i64, s: i64) -> f64 {
        let big_r = self.support;
        if r.abs() > big_r || s <= r.max(0) {
            return 0.0;
        }
        if s >= big_r.min(big_r + r) {
            return self.full(r);
        }
        self.partial[(r + big_r) as usize * (big_r as usize + 1) + s as usize]
    }
}

fn lin_residual(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x).expect("matching dimensions");
    ax.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

/// Connection tables for all derivative pairs up to first order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionCoefficients {
    c00: ConnectionTable,
    c10: ConnectionTable,
    c11: ConnectionTable,
}

impl ConnectionCoefficients {
    pub fn new(tables: &ScalingTables) -> Result<Self> {
        Ok(Self {
            c00: ConnectionTable::new(tables, 0, 0)?,
            c10: ConnectionTable::new(tables, 1, 0)?,
            c11: ConnectionTable::new(tables, 1, 1)?,
        })
    }

    /// `int_{-inf}^s phi^(e1)(y) phi^(e2)(y - r) dy` for `e1, e2 <= 1`.
    pub fn value(&self, e1: usize, e2: usize, r: i64, s: i64) -> f64 {
        match (e1, e2) {
            (0, 0) => self.c00.value(r, s),
            (1, 0) => self.c10.value(r, s),
            (0, 1) => self.c10.value(-r, s - r),
            (1, 1) => self.c11.value(r, s),
            _ => panic!("derivative pair ({e1}, {e2}) exceeds first order"),
        }
    }

    pub fn residual(&self) -> f64 {
        self.c00.residual.max(self.c10.residual).max(self.c11.residual)
    }
}

/// Unit-segment integrals `G(r, s) = int_s^{s+1} phi^(e1)(y) phi^(e2)(y - r) dy` by composite
/// Simpson on the level-`level` dyadic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentIntegrals {
    pub level: usize,
    support: i64,
    /// Indexed by pair `e1 * 2 + e2`, then `(r + R) * R + s`.
    segments: [Vec<f64>; 4],
}

impl SegmentIntegrals {
    /// `tables` must hold derivatives up to 1 at dyadic level `>= level`.
    pub fn new(tables: &ScalingTables, level: usize, exec: crate::exec::Execution) -> Result<Self> {
        if tables.max_derivative < 1 {
            return Err(Error::Precondition("segment integrals need first-derivative tables".into()));
        }
        let big_r = tables.spec().support_end() as i64;
        let ru = big_r as usize;
        let per = 1i64 << level;
        let h = 1.0 / per as f64;
        let at = |d: usize, i: i64| tables.at_dyadic(d, i, level);
        // Probe once so resolution errors surface here rather than inside the workers.
        at(0, 0)?;
        let mut segments: [Vec<f64>; 4] = Default::default();
        for (pair, seg) in segments.iter_mut().enumerate() {
            let (e1, e2) = (pair / 2, pair % 2);
            let rows = exec.map(2 * ru + 1, |ri| {
                let r = ri as i64 - big_r;
                (0..ru)
                    .map(|s| {
                        let s = s as i64;
                        if s < r.max(0) || s >= big_r.min(big_r + r) {
                            return 0.0;
                        }
                        let mut acc = 0.0;
                        for i in 0..=per {
                            let w = if i == 0 || i == per { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                            let y = s * per + i;
                            acc += w * at(e1, y).unwrap_or(0.0) * at(e2, y - r * per).unwrap_or(0.0);
                        }
                        acc * h / 3.0
                    })
                    .collect::<Vec<f64>>()
            });
            *seg = rows.into_iter().flatten().collect();
        }
        Ok(Self { level, support: big_r, segments })
    }

    /// `int_lo^hi phi^(e1)(y) phi^(e2)(y - r) dy` for integer bounds.
    pub fn range(&self, e1: usize, e2: usize, r: i64, lo: i64, hi: i64) -> f64 {
        let big_r = self.support;
        if r.abs() > big_r {
            return 0.0;
        }
        let a = lo.max(r.max(0));
        let b = hi.min(big_r.min(big_r + r));
        let seg = &self.segments[e1 * 2 + e2];
        let base = (r + big_r) as usize * big_r as usize;
        (a..b).map(|s| seg[base + s as usize]).sum()
    }

    pub fn max_abs_diff(&self, other: &SegmentIntegrals) -> f64 {
        self.segments
            .iter()
            .zip(&other.segments)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}
