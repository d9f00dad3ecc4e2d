//! Delimited plot data: histograms, residual plots and QQ pairs.

use std::fmt::Write as _;

use regsel_core::diagnostics::{studentized, StudentizedKind};
use regsel_core::FittedModel;
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` ascending edges; bins are half-open except the last.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins, `ceil(log2 n) + 1` of them (Sturges). Non-finite values
/// are ignored.
pub fn sturges_histogram(values: &[f64]) -> Histogram {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Histogram {
            edges: Vec::new(),
            counts: Vec::new(),
        };
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Histogram {
            edges: vec![lo, hi],
            counts: vec![finite.len()],
        };
    }
    let bins = (finite.len() as f64).log2().ceil() as usize + 1;
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0; bins];
    for v in finite {
        let b = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram { edges, counts }
}

impl Histogram {
    pub fn render_tsv(&self) -> String {
        let mut out = String::from("bin_low\tbin_high\tcount\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{c}", self.edges[i], self.edges[i + 1]);
        }
        out
    }
}

/// Standard normal quantiles at `(i - 0.5) / n`, `i = 1..=n`.
pub fn normal_scores(n: usize) -> Vec<f64> {
    let z = Normal::standard();
    (1..=n)
        .map(|i| z.inverse_cdf((i as f64 - 0.5) / n as f64))
        .collect()
}

pub struct ResidualPlots {
    /// row, fitted, residual, studentized
    pub points: String,
    /// probability, theoretical, sample
    pub qq: String,
    pub histogram: String,
}

pub fn residual_diagnostics(model: &FittedModel) -> ResidualPlots {
    let n = model.n();
    let stud = studentized(model, StudentizedKind::Internal).unwrap_or_else(|_| vec![0.0; n]);
    let mut points = String::from("row\tfitted\tresidual\tstudentized\n");
    for i in 0..n {
        let _ = writeln!(
            points,
            "{}\t{}\t{}\t{}",
            i + 1,
            model.fitted()[i],
            model.residuals()[i],
            stud[i]
        );
    }
    let mut sorted = stud.clone();
    sorted.sort_by(f64::total_cmp);
    let mut qq = String::from("probability\ttheoretical\tsample\n");
    for (i, (z, s)) in normal_scores(n).iter().zip(&sorted).enumerate() {
        let _ = writeln!(qq, "{}\t{z}\t{s}", (i as f64 + 0.5) / n as f64);
    }
    ResidualPlots {
        points,
        qq,
        histogram: sturges_histogram(&stud).render_tsv(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    use regsel_core::{fit_ols, DesignMatrix};

    #[test]
    fn histogram_counts_every_value() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64).sqrt()).collect();
        let h = sturges_histogram(&v);
        assert_eq!(h.counts.len(), 8);
        assert_eq!(h.counts.iter().sum::<usize>(), 100);
        assert_eq!(h.edges.len(), 9);
        assert_eq!(*h.edges.last().unwrap(), 99f64.sqrt());
        let flat = sturges_histogram(&[2.0; 5]);
        assert_eq!(flat.counts, vec![5]);
    }

    #[test]
    fn normal_scores_are_symmetric() {
        let z = normal_scores(11);
        for i in 0..11 {
            assert!((z[i] + z[10 - i]).abs() < 1e-12);
        }
        assert_eq!(z[5], 0.0);
    }

    #[test]
    fn standard_normal_sample_tracks_theoretical_quantiles() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 2000;
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        v.sort_by(f64::total_cmp);
        let z = normal_scores(n);
        // Kolmogorov bound at the 1% level, expressed on the CDF scale
        let phi = Normal::standard();
        let ks = v
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = phi.cdf(*x);
                (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / (n as f64).sqrt(), "{ks}");
        assert!((v[n / 2] - z[n / 2]).abs() < 0.1);
    }

    #[test]
    fn zero_residual_model_gives_zero_ordinates() {
        let d = DesignMatrix::from_numeric("y", vec![1.0, 3.0, 5.0, 7.0], &[("x", vec![0.0, 1.0, 2.0, 3.0])])
            .unwrap();
        let p = residual_diagnostics(&fit_ols(&d).unwrap());
        for line in p.qq.lines().skip(1) {
            assert_eq!(line.rsplit('\t').next().unwrap(), "0");
        }
    }
}
