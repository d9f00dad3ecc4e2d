//! Repeated random-split cross-validation of candidate models.

mod split;
mod summary;

pub use split::{replication_rng, test_rows, train_rows, train_size};
pub use summary::{boxplot_stats, five_number_summary, BoxplotStats, FiveNumberSummary};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{PivotedQr, DEFAULT_RANK_TOL};

pub const DEFAULT_SEED: u64 = 20883271;
pub const DEFAULT_REPLICATIONS: usize = 8000;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateModel {
    pub name: String,
    /// Term indices into the design; the intercept is always included.
    pub terms: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub replications: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub models: Vec<CandidateModel>,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

impl CvConfig {
    pub fn new(models: Vec<CandidateModel>) -> CvConfig {
        CvConfig {
            replications: DEFAULT_REPLICATIONS,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            seed: DEFAULT_SEED,
            models,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub model_names: Vec<String>,
    /// `mspe[m][r]`: model `m`, replication `r`.
    pub mspe: Vec<Vec<f64>>,
    pub rmspe: Vec<Vec<f64>>,
    pub mspe_summary: Vec<FiveNumberSummary>,
    pub rmspe_summary: Vec<FiveNumberSummary>,
    pub n_train: usize,
    pub n_test: usize,
    /// Training fits that aliased at least one column.
    pub rank_deficient_fits: usize,
    /// (replication, model, column) triples where an indicator column was
    /// all zero in training but nonzero among the held-out rows.
    pub unseen_level_events: usize,
}

struct RepOutcome {
    mspe: Vec<f64>,
    rank_deficient: usize,
    unseen: usize,
}

fn run_replication(
    models: &[(DesignMatrix, Vec<bool>)],
    n: usize,
    n_train: usize,
    seed: u64,
    rep: usize,
) -> RepOutcome {
    let train = train_rows(n, n_train, seed, rep as u64);
    let test = test_rows(n, &train);
    let mut out = RepOutcome {
        mspe: Vec::with_capacity(models.len()),
        rank_deficient: 0,
        unseen: 0,
    };
    for (design, indicator) in models {
        let x = design.x();
        let y = design.y();
        let xt = x.select_rows(&train);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let qr = PivotedQr::with_tolerance(xt, DEFAULT_RANK_TOL);
        let ls = qr.solve(&yt);
        if ls.rank < x.ncols() {
            out.rank_deficient += 1;
            for (j, coef) in ls.coefficients.iter().enumerate() {
                if coef.is_none()
                    && indicator[j]
                    && train.iter().all(|&i| x.get(i, j) == 0.0)
                    && test.iter().any(|&i| x.get(i, j) != 0.0)
                {
                    out.unseen += 1;
                }
            }
        }
        // aliased coefficients contribute nothing, so an unseen level is
        // predicted at the reference level
        let mut sse = 0.0;
        for &i in &test {
            let mut pred = 0.0;
            for (j, coef) in ls.coefficients.iter().enumerate() {
                if let Some(b) = coef {
                    pred += x.get(i, j) * b;
                }
            }
            sse += (y[i] - pred).powi(2);
        }
        out.mspe.push(sse / test.len() as f64);
    }
    out
}

pub fn mc_cross_validate(design: &DesignMatrix, config: &CvConfig) -> Result<CvResult> {
    if config.replications == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {} outside (0, 1)",
            config.train_fraction
        )));
    }
    if config.models.is_empty() {
        return Err(Error::InvalidParameter("no candidate models".into()));
    }
    let n = design.nrows();
    let n_train = train_size(n, config.train_fraction);
    let nterms = design.terms().len();
    let models: Vec<(DesignMatrix, Vec<bool>)> = config
        .models
        .iter()
        .map(|m| {
            if let Some(&t) = m.terms.iter().find(|&&t| t >= nterms) {
                return Err(Error::InvalidParameter(format!(
                    "model `{}` names term index {t} out of range",
                    m.name
                )));
            }
            let sub = design.select_terms(&m.terms);
            let mut indicator = vec![false; sub.ncols()];
            for g in sub.terms() {
                if g.kind != crate::dataset::TermKind::Numeric {
                    for &c in &g.columns {
                        indicator[c] = true;
                    }
                }
            }
            Ok((sub, indicator))
        })
        .collect::<Result<_>>()?;
    let widest = models.iter().map(|(d, _)| d.ncols()).max().unwrap_or(1);
    if n_train < widest + 1 || n_train >= n {
        return Err(Error::InsufficientData {
            what: "cross-validation training split",
            required: widest + 1,
            available: n_train.min(n.saturating_sub(1)),
        });
    }

    let work = |rep: usize| run_replication(&models, n, n_train, config.seed, rep);
    let outcomes: Vec<RepOutcome> = if config.workers == 1 {
        (0..config.replications).map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?;
        pool.install(|| (0..config.replications).into_par_iter().map(work).collect())
    };

    let k = models.len();
    let mut mspe = vec![Vec::with_capacity(config.replications); k];
    let mut rank_deficient_fits = 0;
    let mut unseen_level_events = 0;
    for o in outcomes {
        for (m, v) in o.mspe.into_iter().enumerate() {
            mspe[m].push(v);
        }
        rank_deficient_fits += o.rank_deficient;
        unseen_level_events += o.unseen;
    }
    if rank_deficient_fits > 0 {
        log::info!("cross-validation: {rank_deficient_fits} rank-deficient training fits");
    }
    let rmspe: Vec<Vec<f64>> = mspe
        .iter()
        .map(|v| v.iter().map(|x| x.sqrt()).collect())
        .collect();
    Ok(CvResult {
        model_names: config.models.iter().map(|m| m.name.clone()).collect(),
        mspe_summary: mspe.iter().map(|v| five_number_summary(v)).collect::<Result<_>>()?,
        rmspe_summary: rmspe.iter().map(|v| five_number_summary(v)).collect::<Result<_>>()?,
        mspe,
        rmspe,
        n_train,
        n_test: n - n_train,
        rank_deficient_fits,
        unseen_level_events,
    })
}

impl CvResult {
    /// One row per replication (1-based), one column per model.
    pub fn render_dump(&self) -> String {
        let mut out = String::from("replication");
        for name in &self.model_names {
            let _ = write!(out, "\tmspe_{name}");
        }
        out.push('\n');
        let reps = self.mspe.first().map_or(0, Vec::len);
        for r in 0..reps {
            let _ = write!(out, "{}", r + 1);
            for m in &self.mspe {
                let _ = write!(out, "\t{}", m[r]);
            }
            out.push('\n');
        }
        out
    }

    /// MSPE and root-MSPE summary tables, one column per model.
    pub fn render_summary_tables(&self) -> String {
        let mut out = String::new();
        for (prefix, sums) in [("MSPE", &self.mspe_summary), ("RMSPE", &self.rmspe_summary)] {
            out.push_str("statistic");
            for name in &self.model_names {
                let _ = write!(out, "\t{prefix}_{name}");
            }
            out.push('\n');
            let rows: [(&str, fn(&FiveNumberSummary) -> f64); 7] = [
                ("Min.", |s| s.min),
                ("1st Qu.", |s| s.q1),
                ("Median", |s| s.median),
                ("Mean", |s| s.mean),
                ("3rd Qu.", |s| s.q3),
                ("Max.", |s| s.max),
                ("IQR", |s| s.iqr),
            ];
            for (label, get) in rows {
                out.push_str(label);
                for s in sums.iter() {
                    let _ = write!(out, "\t{}", get(s));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

fn render_boxplot(b: &BoxplotStats) -> String {
    let s = &b.summary;
    let mut out = String::from("statistic\treplication\tvalue\n");
    for (label, v) in [
        ("min", s.min),
        ("q1", s.q1),
        ("median", s.median),
        ("mean", s.mean),
        ("q3", s.q3),
        ("max", s.max),
        ("iqr", s.iqr),
        ("lower_fence", b.lower_fence),
        ("upper_fence", b.upper_fence),
        ("whisker_low", b.whisker_low),
        ("whisker_high", b.whisker_high),
    ] {
        let _ = writeln!(out, "{label}\tNA\t{v}");
    }
    for (i, v) in &b.outliers {
        let _ = writeln!(out, "outlier\t{}\t{v}", i + 1);
    }
    out
}

/// Writes `boxplot_<model>_mspe.tsv` and `boxplot_<model>_rmspe.tsv` into
/// `dir` and returns the paths written.
pub fn emit_mspe_boxplot_data(result: &CvResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (m, name) in result.model_names.iter().enumerate() {
        for (kind, values) in [("mspe", &result.mspe[m]), ("rmspe", &result.rmspe[m])] {
            let path = dir.join(format!("boxplot_{name}_{kind}.tsv"));
            let text = render_boxplot(&boxplot_stats(values)?);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}
