//! Four-stage Gauss–Legendre collocation (order 8), used as a reference integrator.

use std::sync::OnceLock;

use super::OdeSystem;
use crate::error::{Error, Result};
use crate::numeric::{norm_inf, DenseMatrix, Lu};

const STAGES: usize = 4;

struct Tableau {
    c: [f64; STAGES],
    a: [[f64; STAGES]; STAGES],
    b: [f64; STAGES],
}

/// Integral over `[0, x]` of the Lagrange basis polynomial `j` on nodes `c`.
fn lagrange_integral(c: &[f64; STAGES], j: usize, x: f64) -> f64 {
    // Expand prod_{k != j} (t - c_k) / (c_j - c_k) into ascending coefficients.
    let mut poly = vec![1.0];
    let mut denom = 1.0;
    for (k, &ck) in c.iter().enumerate() {
        if k == j {
            continue;
        }
        let mut next = vec![0.0; poly.len() + 1];
        for (i, &p) in poly.iter().enumerate() {
            next[i] -= ck * p;
            next[i + 1] += p;
        }
        poly = next;
        denom *= c[j] - ck;
    }
    poly.iter()
        .enumerate()
        .map(|(i, p)| p * x.powi(i as i32 + 1) / (i as f64 + 1.0))
        .sum::<f64>()
        / denom
}

fn tableau() -> &'static Tableau {
    static T: OnceLock<Tableau> = OnceLock::new();
    T.get_or_init(|| {
        let r = (6.0f64 / 5.0).sqrt();
        let x1 = (3.0 / 7.0 - 2.0 / 7.0 * r).sqrt();
        let x2 = (3.0 / 7.0 + 2.0 / 7.0 * r).sqrt();
        let c = [(1.0 - x2) / 2.0, (1.0 - x1) / 2.0, (1.0 + x1) / 2.0, (1.0 + x2) / 2.0];
        let mut a = [[0.0; STAGES]; STAGES];
        
        for j in 0..STAGES {
            for i in 0..STAGES {
                a[i][j] = lagrange_integral(&c, j, c[i]);
            }
        }
        let (w_in, w_out) = ((18.0 + 30f64.sqrt()) / 72.0, (18.0 - 30f64.sqrt()) / 72.0);
        let b = [w_out, w_in, w_in, w_out];
        Tableau { c, a, b }
    })
}

/// One collocation step of size `dt` (may be negative).
pub fn step(system: &OdeSystem, t: f64, y: &[f64], dt: f64) -> Result<Vec<f64>> {
    let tab = tableau();
    let s = system.dim;
    let f0 = system.eval(t, y)?;
    let mut k: Vec<Vec<f64>> = vec![f0; STAGES];
    let jac = system.jacobian_at(t, y)?;
    let n = STAGES * s;
    let mut m = DenseMatrix::identity(n);
    for i in 0..STAGES {
        for j in 0..STAGES {
            let c = dt * tab.a[i][j];
            for r in 0..s {
                for q in 0..s {
                    m[(i * s + r, j * s + q)] -= c * jac[(r, q)];
                }
            }
        }
    }
    let lu = Lu::new(&m)?;
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let mut res = vec![0.0; n];
        for i in 0..STAGES {
            let mut yi = y.to_vec();
            for (j, kj) in k.iter().enumerate() {
                let c = dt * tab.a[i][j];
                yi.iter_mut().zip(kj).for_each(|(a, b)| *a += c * b);
            }
            let fi = system.eval(t + tab.c[i] * dt, &yi)?;
            for r in 0..s {
                res[i * s + r] = k[i][r] - fi[r];
            }
        }
        let dk = lu.solve(&res)?;
        for i in 0..STAGES {
            for r in 0..s {
                k[i][r] -= dk[i * s + r];
            }
        }
        let scale = k.iter().map(|v| norm_inf(v)).fold(0.0, f64::max).max(1.0);
        let inc = norm_inf(&dk) / scale;
        if !scale.is_finite() || !inc.is_finite() {
            return Err(Error::NonFinite(format!("reference step at t = {t}")));
        }
        if inc < 1e-15 || (inc < 1e-10 && inc >= 0.5 * last) {
            let mut out = y.to_vec();
            for (j, kj) in k.iter().enumerate() {
                let c = dt * tab.b[j];
                out.iter_mut().zip(kj).for_each(|(a, b)| *a += c * b);
            }
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("reference step at t = {t}")));
            }
            return Ok(out);
        }
        last = inc;
    }
    Err(Error::NoConvergence { iterations: 60, residual: last })
}

/// Integrate `steps` steps from `(t0, y0)`, returning the state every `record_every` steps.
pub fn integrate(system: &OdeSystem, y0: &[f64], t0: f64, dt: f64, steps: usize, record_every: usize) -> Result<Vec<Vec<f64>>> {
    let every = record_every.max(1);
    let mut out = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    for i in 0..steps {
        y = step(system, t0 + i as f64 * dt, &y, dt)?;
        if (i + 1) % every == 0 {
            out.push(y.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn weights_sum_to_one_and_integrate_polynomials() {
        let t = tableau();
        assert!((t.b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..STAGES {
            assert!((t.a[i].iter().sum::<f64>() - t.c[i]).abs() < 1e-14);
        }
        for d in 0..8 {
            let s: f64 = t.b.iter().zip(&t.c).map(|(b, c)| b * c.powi(d)).sum();
            assert!((s - 1.0 / (d as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn eighth_order_on_oscillator() {
        let sys = OdeSystem::new(2, Arc::new(|_, y: &[f64]| vec![y[1], -y[0]])).unwrap();
        let err = |n: usize| {
            let dt = 2.0 / n as f64;
            let out = integrate(&sys, &[1.0, 0.0], 0.0, dt, n, n).unwrap();
            (out[1][0] - 2f64.cos()).abs()
        };
        let (e1, e2) = (err(4), err(8));
        let order = (e1 / e2).log2();
        assert!(order > 7.5, "order {order}");
        let back = integrate(&sys, &[1.0, 0.0], 0.0, -0.05, 20, 20).unwrap();
        assert!((back[1][0] - 1f64.cos()).abs() < 1e-13);
    }
}
