//! Special functions used by the reference solutions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn landen(k: f64) -> Result<Vec<(f64, f64)>> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::ModulusOutOfRange(k));
    }
    let mut a = 1.0;
    let mut b = (1.0 - k * k).sqrt();
    let mut c = k;
    let mut seq = vec![(a, c)];
    while c.abs() > 1e-17 * a && seq.len() < 64 {
        let an = 0.5 * (a + b);
        c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        seq.push((a, c));
    }
    Ok(seq)
}

/// Complete elliptic integral of the first kind, `K(k)`, by the arithmetic-geometric mean.
pub fn complete_elliptic_k(k: f64) -> Result<f64> {
    let seq = landen(k)?;
    Ok(PI / (2.0 * seq.last().unwrap().0))
}

/// Jacobi elliptic function `cn(u; k)` by descending Landen transformation.
pub fn jacobi_cn(u: f64, k: f64) -> Result<f64> {
    let seq = landen(k)?;
    let n = seq.len() - 1;
    let mut phi = 2f64.powi(n as i32) * seq[n].0 * u;
    for i in (1..=n).rev() {
        let (a, c) = seq[i];
        phi = 0.5 * (phi + (c / a * phi.sin()).asin());
    }
    Ok(phi.cos())
}

fn miller(c: f64, top: usize) -> Vec<f64> {
    let mut v = vec![0.0; top + 2];
    v[top] = 1.0;
    for n in (1..=top).rev() {
        v[n - 1] = 2.0 * n as f64 / c * v[n] + v[n + 1];
        if v[n - 1] > 1e250 {
            v.iter_mut().for_each(|x| *x *= 1e-250);
        }
    }
    v.truncate(top + 1);
    let norm = v[0] + 2.0 * v[1..].iter().sum::<f64>();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// `e^{-c} I_n(c)` for `n = 0, 1, ...` until the terms fall below `1e-30`, using the normalization
/// `I_0 + 2 sum I_n = e^c`.
pub fn bessel_i_scaled(c: f64) -> Result<Vec<f64>> {
    if !(c > 0.0 && c.is_finite() && c < 1e4) {
        return Err(Error::SeriesNotConverged(format!("Bessel argument {c}")));
    }
    let mut top = (c + 40.0 + 10.0 * c.sqrt()) as usize;
    for _ in 0..8 {
        let a = miller(c, top);
        let b = miller(c, top + 20);
        let last = a.iter().rposition(|&x| x > 1e-30).unwrap_or(0);
        let diff = (0..=last).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
        if diff < 1e-15 && last < top {
            let mut out = b;
            out.truncate(last + 1);
            return Ok(out);
        }
        top *= 2;
    }
    Err(Error::SeriesNotConverged(format!("Bessel recurrence at argument {c}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cn_special_values() {
        assert_eq!(jacobi_cn(0.0, 0.5).unwrap(), 1.0);
        for u in [0.3, 1.0, 2.5] {
            assert!((jacobi_cn(u, 0.0).unwrap() - u.cos()).abs() < 1e-15);
        }
        for k in [0.2, 0.5, 0.7, 0.9] {
            let kk = complete_elliptic_k(k).unwrap();
            assert!(jacobi_cn(kk, k).unwrap().abs() < 1e-14);
            assert!((jacobi_cn(2.0 * kk, k).unwrap() + 1.0).abs() < 1e-14);
        }
        assert!((complete_elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        // K(1/sqrt 2) = Gamma(1/4)^2 / (4 sqrt(pi))
        assert!((complete_elliptic_k(0.5f64.sqrt()).unwrap() - 1.854_074_677_301_372).abs() < 1e-14);
        assert!(matches!(jacobi_cn(1.0, 1.0), Err(Error::ModulusOutOfRange(_))));
        assert!(matches!(complete_elliptic_k(-0.1), Err(Error::ModulusOutOfRange(_))));
    }

    #[test]
    fn bessel_values() {
        let v = bessel_i_scaled(1.0).unwrap();
        let e = 1f64.exp();
        assert!((v[0] * e - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((v[1] * e - 0.565_159_103_992_485).abs() < 1e-15);
        assert!((v[2] * e - 0.135_747_669_767_038_3).abs() < 1e-15);
        let w = bessel_i_scaled(50.0).unwrap();
        assert!((w[0] - 0.056_561_626_647_454_2).abs() < 1e-14);
        assert!(bessel_i_scaled(0.0).is_err());
    }
}
