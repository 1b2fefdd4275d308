//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wassmix::GramSystem;

/// Tabulated quantile-like curves: sorted noisy affine transforms of a
/// common standard shape on `k` nodes.
pub fn random_curves(rng: &mut ChaCha8Rng, count: usize, k: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let loc = rng.random_range(-2.0..2.0);
            let scale = rng.random_range(0.2..2.0);
            let mut v: Vec<f64> = (0..k)
                .map(|i| {
                    let s = (i as f64 + 0.5) / k as f64;
                    loc + scale * (s / (1.0 - s)).ln() + rng.random_range(-0.3..0.3)
                })
                .collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect()
}

/// Gram system of curves `models` against `target` with equal node weights,
/// assembled entry by entry.
pub fn gram_from_curves(models: &[Vec<f64>], target: &[f64]) -> GramSystem {
    let k = target.len() as f64;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / k;
    let j = models.len();
    let s = DMatrix::from_fn(j, j, |r, c| dot(&models[r], &models[c]));
    let sigma = DVector::from_iterator(j, models.iter().map(|m| dot(m, target)));
    GramSystem::new(s, sigma, dot(target, target)).expect("curves give a valid gram system")
}

pub fn random_gram(rng: &mut ChaCha8Rng, j: usize) -> GramSystem {
    let curves = random_curves(rng, j + 1, 40);
    gram_from_curves(&curves[1..], &curves[0])
}

/// Penalized objective in its raw least-squares form
/// `½(wᵀS_G w - 2σᵀw + σ₀²) + λ(α‖w‖₁ + (1-α)/2 ‖w‖²)`.
pub fn raw_objective(gram: &GramSystem, w: &[f64], lambda: f64, alpha: f64) -> f64 {
    let v = DVector::from_column_slice(w);
    let quad = v.dot(&(gram.s_g() * &v)) - 2.0 * gram.sigma_g().dot(&v) + gram.sigma0_sq();
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    let l2: f64 = w.iter().map(|x| x * x).sum();
    0.5 * quad + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2)
}

/// Minimum of the raw objective over the simplex lattice with spacing
/// `1 / steps`, for `J ≤ 3`.
pub fn brute_force_min(gram: &GramSystem, lambda: f64, alpha: f64, steps: usize) -> (f64, Vec<f64>) {
    let j = gram.dim();
    let h = 1.0 / steps as f64;
    let mut best = (f64::INFINITY, vec![]);
    let mut consider = |w: Vec<f64>| {
        let v = raw_objective(gram, &w, lambda, alpha);
        if v < best.0 {
            best = (v, w);
        }
    };
    match j {
        1 => consider(vec![1.0]),
        2 => (0..=steps).for_each(|a| consider(vec![a as f64 * h, 1.0 - a as f64 * h])),
        3 => {
            for a in 0..=steps {
                for b in 0..=(steps - a) {
                    let (x, y) = (a as f64 * h, b as f64 * h);
                    consider(vec![x, y, (1.0 - x - y).max(0.0)]);
                }
            }
        }
        _ => panic!("brute force supports J <= 3"),
    }
    best
}

/// Acklam's rational approximation of the standard normal quantile refined
/// by one Halley step.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2, 1.383577518672690e2, -3.066479806614716e1, 2.506628277459239];
    const B: [f64; 5] = [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    const C: [f64; 6] = [-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838, -2.549732539343734, 4.374664141464968, 2.938163982698783];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let x = if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p > 1.0 - 0.02425 {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Standard normal CDF: Taylor series of erf near zero, continued fraction
/// in the tails.
pub fn normal_cdf(x: f64) -> f64 {
    if x.abs() < 3.0 {
        // Taylor series of erf.
        let z = x / std::f64::consts::SQRT_2;
        let mut term = z;
        let mut sum = z;
        let mut n = 0.0;
        while term.abs() > 1e-17 * sum.abs().max(1e-300) {
            n += 1.0;
            term *= -z * z / n;
            sum += term / (2.0 * n + 1.0);
        }
        0.5 + sum / std::f64::consts::PI.sqrt()
    } else {
        // Continued fraction for the upper tail.
        let t = x.abs();
        let mut f = t;
        for k in (1..=60).rev() {
            f = t + k as f64 / f;
        }
        let tail = (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() / f;
        if x > 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }
}
