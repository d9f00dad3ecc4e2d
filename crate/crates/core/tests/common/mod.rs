//! Brute-force reference computations shared by the integration tests.
//! Everything here solves the normal equations directly so it shares no
//! code path with the QR-based library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regsel_core::DesignMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `p` standard-normal predictors, `y = 1 + sum_j b_j x_j + noise` with
/// random coefficients.
pub fn random_design(rng: &mut ChaCha8Rng, n: usize, p: usize, noise: f64) -> DesignMatrix {
    let cols: Vec<(String, Vec<f64>)> = (0..p)
        .map(|j| (format!("x{}", j + 1), (0..n).map(|_| normal(rng)).collect()))
        .collect();
    let beta: Vec<f64> = (0..p).map(|_| normal(rng)).collect();
    let y = (0..n)
        .map(|i| 1.0 + (0..p).map(|j| beta[j] * cols[j].1[i]).sum::<f64>() + noise * normal(rng))
        .collect();
    DesignMatrix::from_numeric("y", y, &cols).unwrap()
}

pub fn rows(d: &DesignMatrix) -> Vec<Vec<f64>> {
    (0..d.nrows()).map(|i| d.x().row(i)).collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Least-squares coefficients from `X'X b = X'y`.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        for a in 0..p {
            xty[a] += row[a] * yi;
            for b in 0..p {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    solve(xtx, xty)
}

pub fn predict(row: &[f64], beta: &[f64]) -> f64 {
    row.iter().zip(beta).map(|(a, b)| a * b).sum()
}

pub fn rss(x: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    x.iter().zip(y).map(|(r, yi)| (yi - predict(r, beta)).powi(2)).sum()
}

/// Coefficients and residual variance of the fit without row `i`.
pub fn delete_one(x: &[Vec<f64>], y: &[f64], i: usize) -> (Vec<f64>, f64) {
    let xs: Vec<Vec<f64>> = x.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, r)| r.clone()).collect();
    let ys: Vec<f64> = y.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect();
    let b = normal_equations(&xs, &ys);
    let s2 = rss(&xs, &ys, &b) / (xs.len() - x[0].len()) as f64;
    (b, s2)
}

/// Selection AIC `n ln(RSS/n) + k p` of the intercept plus the given
/// design columns.
pub fn aic_of_columns(d: &DesignMatrix, cols: &[usize], k: f64) -> f64 {
    let x: Vec<Vec<f64>> = (0..d.nrows())
        .map(|i| cols.iter().map(|&c| d.x().get(i, c)).collect())
        .collect();
    let b = normal_equations(&x, d.y());
    let n = d.nrows() as f64;
    n * (rss(&x, d.y(), &b) / n).ln() + k * cols.len() as f64
}

/// AIC of a term set (intercept always included).
pub fn aic_of_terms(d: &DesignMatrix, terms: &[usize], k: f64) -> f64 {
    let mut cols = vec![0];
    let mut sorted = terms.to_vec();
    sorted.sort_unstable();
    for t in sorted {
        cols.extend_from_slice(&d.terms()[t].columns);
    }
    aic_of_columns(d, &cols, k)
}

/// `1 / (1 - R_j^2)` from regressing `target` on an intercept and `others`.
pub fn vif_by_regression(target: &[f64], others: &[Vec<f64>]) -> f64 {
    let n = target.len();
    let x: Vec<Vec<f64>> = (0..n)
        .map(|i| std::iter::once(1.0).chain(others.iter().map(|c| c[i])).collect())
        .collect();
    let b = normal_equations(&x, target);
    let mean = target.iter().sum::<f64>() / n as f64;
    let tss: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
    tss / rss(&x, target, &b)
}

/// Sort-and-interpolate quantile written out independently of the library.
pub fn type7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p * (v.len() as f64 - 1.0);
    let below = pos.floor();
    let i = below as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[i] * (1.0 - (pos - below)) + v[i + 1] * (pos - below)
}
