//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use subnyquist::rng::seeded;
use subnyquist::SignalVector;

pub fn gaussian_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = seeded(seed);
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_signal(n: usize, seed: u64) -> SignalVector {
    SignalVector::new(gaussian_vector(n, seed)).unwrap()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Least-squares residual on columns `support` via the normal equations
/// (LU on the Gram matrix); `None` when the Gram matrix is singular.
pub fn normal_equation_residual(a: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> Option<f64> {
    let sub = a.select_columns(support);
    let gram = sub.tr_mul(&sub);
    let coef = gram.lu().solve(&sub.tr_mul(y))?;
    Some((y - sub * coef).norm())
}

/// Exhaustive search over all `k`-column supports for the smallest
/// least-squares residual; the first (lexicographic) minimizer wins.
pub fn brute_force_support(a: &DMatrix<f64>, y: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in subsets(a.ncols(), k) {
        if let Some(r) = normal_equation_residual(a, y, &s) {
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, s));
            }
        }
    }
    best.map(|(_, s)| s).unwrap_or_default()
}

/// Central finite-difference gradient of `f` at `x` with step `h·max(1, |x_i|)`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den
}

/// Dense demodulator matrix `S·H·diag(p)` built straight from its definition:
/// output `k` is the causal convolution of `p ⊙ x` with `taps`, read at grid
/// index `(k+1)·m − 1`.
pub fn demodulator_matrix(chips: &[i8], taps: &[f64], m: usize) -> DMatrix<f64> {
    let n = chips.len();
    DMatrix::from_fn(n / m, n, |k, j| {
        let t = (k + 1) * m - 1;
        if j > t || t - j >= taps.len() {
            0.0
        } else {
            taps[t - j] * f64::from(chips[j])
        }
    })
}
