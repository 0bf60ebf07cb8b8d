//! Stability region of the step formula applied to `y' = lambda y`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrator::QuadratureWeights;
use crate::numeric::{poly_roots_complex, DenseMatrix};

/// `p(mu) = mu^(a+1) - mu^a` and `q(mu) = sum_k Gamma_k mu^(a+1-k)`, ascending coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPair {
    pub p_coeffs: Vec<f64>,
    pub q_coeffs: Vec<f64>,
}

impl CharacteristicPair {
    pub fn new(weights: &QuadratureWeights) -> Self {
        let a2 = weights.alpha2();
        let deg = a2 + 1;
        let mut p = vec![0.0; deg + 1];
        p[deg] = 1.0;
        p[a2] = -1.0;
        let mut q = vec![0.0; deg + 1];
        for (k, g) in weights.gamma.iter().enumerate() {
            q[deg - k] = *g;
        }
        Self { p_coeffs: p, q_coeffs: q }
    }

    pub fn degree(&self) -> usize {
        self.p_coeffs.len() - 1
    }

    pub fn p(&self, mu: Complex64) -> Complex64 {
        crate::numeric::poly_eval(&self.p_coeffs, mu)
    }

    pub fn q(&self, mu: Complex64) -> Complex64 {
        crate::numeric::poly_eval(&self.q_coeffs, mu)
    }

    /// Ascending coefficients of `p(mu) - z q(mu)`.
    pub fn stability_polynomial(&self, z: Complex64) -> Vec<Complex64> {
        self.p_coeffs
            .iter()
            .zip(&self.q_coeffs)
            .map(|(&p, &q)| Complex64::new(p, 0.0) - z * q)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Locus {
    pub theta: Vec<f64>,
    pub z: Vec<Complex64>,
    /// Sample angles dropped because `q(e^{i theta})` vanished.
    pub poles: Vec<f64>,
}

const POLE_EPS: f64 = 1e-14;

/// `z(theta) = p(e^{i theta}) / q(e^{i theta})` on a uniform closed grid of `[0, 2 pi]`.
pub fn boundary_locus(pair: &CharacteristicPair, n_theta: usize) -> Result<Locus> {
    if n_theta < 16 {
        return Err(Error::Precondition(format!("n_theta must be >= 16, got {n_theta}")));
    }
    let mut theta = Vec::with_capacity(n_theta + 1);
    let mut z = Vec::with_capacity(n_theta + 1);
    let mut poles = Vec::new();
    for i in 0..n_theta {
        let t = 2.0 * std::f64::consts::PI * i as f64 / n_theta as f64;
        let mu = Complex64::from_polar(1.0, t);
        let q = pair.q(mu);
        if q.norm() < POLE_EPS {
            poles.push(t);
            continue;
        }
        theta.push(t);
        z.push(if i == 0 { Complex64::new(0.0, 0.0) } else { pair.p(mu) / q });
    }
    if let (Some(&z0), Some(_)) = (z.first(), theta.first()) {
        theta.push(2.0 * std::f64::consts::PI);
        z.push(z0);
    }
    Ok(Locus { theta, z, poles })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityClass {
    Stable,
    Marginal,
    Unstable,
}

impl StabilityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityClass::Stable => "stable",
            StabilityClass::Marginal => "marginal",
            StabilityClass::Unstable => "unstable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub class: StabilityClass,
    pub max_modulus: f64,
    pub roots: Vec<Complex64>,
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        self.class == StabilityClass::Stable
    }
}

pub const DEFAULT_MARGIN: f64 = 1e-9;

/// Root condition for `p(mu) - z q(mu)`.
pub fn is_stable(z: Complex64, pair: &CharacteristicPair, margin: f64) -> Result<StabilityVerdict> {
    let roots = poly_roots_complex(&pair.stability_polynomial(z)).map_err(|e| match e {
        Error::NoConvergence { residual, .. } => Error::RootfindingFailure { residual },
        other => other,
    })?;
    let max_modulus = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let class = if max_modulus < 1.0 - margin {
        StabilityClass::Stable
    } else if max_modulus > 1.0 + margin {
        StabilityClass::Unstable
    } else {
        StabilityClass::Marginal
    };
    Ok(StabilityVerdict { class, max_modulus, roots })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// `class[i][j]` at `re[j] + i im[i]`; `None` where root finding failed.
    pub class: Vec<Vec<Option<StabilityClass>>>,
}

impl StabilityGrid {
    pub fn failures(&self) -> usize {
        self.class.iter().flatten().filter(|c| c.is_none()).count()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Classify every node of a rectangular grid (endpoints included).
pub fn region_grid(
    pair: &CharacteristicPair,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: (usize, usize),
    margin: f64,
    exec: Execution,
) -> Result<StabilityGrid> {
    let (nx, ny) = resolution;
    if nx < 8 || ny < 8 {
        return Err(Error::Precondition("grid resolution must be at least 8 per axis".into()));
    }
    let re = linspace(re_range.0, re_range.1, nx);
    let im = linspace(im_range.0, im_range.1, ny);
    let flat = exec.map(nx * ny, |idx| {
        let (i, j) = (idx / nx, idx % nx);
        is_stable(Complex64::new(re[j], im[i]), pair, margin).ok().map(|v| v.class)
    });
    let class = flat.chunks(nx).map(|c| c.to_vec()).collect();
    Ok(StabilityGrid { re, im, class })
}

/// Winding number of the closed polyline around `z`.
pub fn winding_number(curve: &[Complex64], z: Complex64) -> i32 {
    let mut w = 0;
    for seg in curve.windows(2) {
        let (a, b) = (seg[0] - z, seg[1] - z);
        let cross = a.re * b.im - a.im * b.re;
        if a.im <= 0.0 {
            if b.im > 0.0 && cross > 0.0 {
                w += 1;
            }
        } else if b.im <= 0.0 && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Distance from `z` to the polyline.
pub fn distance_to_curve(curve: &[Complex64], z: Complex64) -> f64 {
    curve
        .windows(2)
        .map(|s| {
            let (a, b) = (s[0], s[1]);
            let ab = b - a;
            let len2 = ab.norm_sqr();
            let t = if len2 == 0.0 { 0.0 } else { (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0) };
            (a + ab * t - z).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Agreement between winding-interior and root-condition classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub compared: usize,
    pub agreeing: usize,
}

impl Agreement {
    pub fn fraction(&self) -> f64 {
        if self.compared == 0 {
            1.0
        } else {
            self.agreeing as f64 / self.compared as f64
        }
    }
}

/// Compare the classifications at all grid points away from the locus by more than `band`.
pub fn winding_agreement(grid: &StabilityGrid, locus: &Locus, band: f64) -> Agreement {
    let mut compared = 0;
    let mut agreeing = 0;
    for (i, row) in grid.class.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let Some(c) = c else { continue };
            if *c == StabilityClass::Marginal {
                continue;
            }
            let z = Complex64::new(grid.re[j], grid.im[i]);
            if distance_to_curve(&locus.z, z) < band {
                continue;
            }
            compared += 1;
            let inside = winding_number(&locus.z, z) != 0;
            if inside == (*c == StabilityClass::Stable) {
                agreeing += 1;
            }
        }
    }
    Agreement { compared, agreeing }
}

/// Largest `s <= s_max` such that every sample of `[-s, 0)` is stable.
pub fn negative_real_segment(pair: &CharacteristicPair, s_max: f64, samples: usize) -> Result<f64> {
    let mut last = 0.0;
    for i in 1..=samples {
        let x = s_max * i as f64 / samples as f64;
        if !is_stable(Complex64::new(-x, 0.0), pair, DEFAULT_MARGIN)?.is_stable() {
            break;
        }
        last = x;
    }
    Ok(last)
}

/// Eigenvalues of a real matrix, used to place `h lambda` against the region.
pub fn eigenvalues(a: &DenseMatrix) -> Vec<Complex64> {
    a.to_nalgebra().complex_eigenvalues().iter().copied().collect()
}
