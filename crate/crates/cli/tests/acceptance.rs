//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::*;
use rand_chacha::ChaCha8Rng;
use regsel::config::RunConfig;
use regsel::pipeline::run_pipeline;
use regsel_core::crossval::{five_number_summary, mc_cross_validate, CandidateModel, CvConfig};
use regsel_core::dataset::{encode_design, Column};
use regsel_core::diagnostics::{
    added_variable_data, cooks_distance, dffits, press_residuals, vif, vif_prune,
};
use regsel_core::linmodel::{adjusted_r_squared, aic_full_value};
use regsel_core::selection::{step_select, Direction, MoveKind, Scope, SelectionTrace, DEFAULT_TOL_AIC};
use regsel_core::{fit_ols, DesignMatrix, FittedModel, RawTable};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn trace_error(m: &FittedModel) -> f64 {
    let tr: f64 = m.leverage().iter().sum();
    (tr - m.rank() as f64).abs() / m.rank() as f64
}

// 1
fn adjusted_r2_identity() -> Outcome {
    let v = adjusted_r_squared(0.2827, 1276, 67).map_err(|e| e.to_string())?;
    ensure((v - 0.2435).abs() < 1e-4, || format!("got {v}"))?;
    Ok(format!("{v:.6}"))
}

// 2
fn aic_convention() -> Outcome {
    let rss = 442.2f64.powi(2) * 1209.0;
    let v = aic_full_value(1276, rss, 67);
    ensure((v - 19234.33).abs() <= 1.0, || format!("got {v}"))?;
    Ok(format!("{v:.4}"))
}

// 3
fn iqr_reproduction() -> Outcome {
    let v = [141521.0, 194558.0, 207840.0, 222450.0, 292560.0];
    let s = five_number_summary(&v).map_err(|e| e.to_string())?;
    ensure(s.q1 == 194558.0 && s.q3 == 222450.0, || format!("quartiles {} {}", s.q1, s.q3))?;
    ensure(s.iqr == 27892.0, || format!("iqr {}", s.iqr))?;
    Ok(format!("IQR {}", s.iqr))
}

// 4
fn press_oracle() -> Outcome {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = random_design(&mut r, 60, 6, 1.0);
        let m = fit_ols(&d).map_err(|e| e.to_string())?;
        let press = press_residuals(&m).map_err(|e| e.to_string())?;
        let x = rows(&d);
        let loo: Vec<f64> = (0..d.nrows())
            .map(|i| d.y()[i] - predict(&x[i], &delete_one(&x, d.y(), i).0))
            .collect();
        worst = worst.max(max_abs_diff(&press, &loo));
    }
    ensure(worst < 1e-8, || format!("max diff {worst:e}"))?;
    Ok(format!("max diff {worst:.1e}"))
}

// 5
fn cook_dffits_oracle() -> Outcome {
    let mut r = rng(102);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = random_design(&mut r, 40, 4, 1.0);
        let m = fit_ols(&d).map_err(|e| e.to_string())?;
        let cook = cooks_distance(&m).map_err(|e| e.to_string())?;
        let dff = dffits(&m).map_err(|e| e.to_string())?;
        let x = rows(&d);
        let beta: Vec<f64> = m.coefficients_or_zero();
        let p = d.ncols() as f64;
        let s2 = m.rss() / (d.nrows() as f64 - p);
        for i in 0..d.nrows() {
            let (b, s2_del) = delete_one(&x, d.y(), i);
            let shift: f64 = x.iter().map(|row| (predict(row, &beta) - predict(row, &b)).powi(2)).sum();
            worst = worst.max((cook[i] - shift / (p * s2)).abs());
            let h = m.leverage()[i];
            let want = (predict(&x[i], &beta) - predict(&x[i], &b)) / (s2_del * h).sqrt();
            worst = worst.max((dff[i] - want).abs());
        }
    }
    ensure(worst < 1e-8, || format!("refit diff {worst:e}"))?;
    let d = DesignMatrix::from_numeric("y", vec![0.0, 1.0, 1.0], &[("x", vec![0.0, 1.0, 2.0])])
        .map_err(|e| e.to_string())?;
    let hand = cooks_distance(&fit_ols(&d).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let hdiff = max_abs_diff(&hand, &[2.5, 0.25, 2.5]);
    ensure(hdiff < 1e-12, || format!("hand values {hand:?}"))?;
    Ok(format!("refit diff {worst:.1e}, hand diff {hdiff:.1e}"))
}

fn centred_unit(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let c: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    c.iter().map(|x| x / norm).collect()
}

// 6
fn vif_oracle() -> Outcome {
    let mut r = rng(103);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let n = 50 + trial;
        let mut cols: Vec<Vec<f64>> = (0..6).map(|_| (0..n).map(|_| normal(&mut r)).collect()).collect();
        for i in 0..n {
            cols[3][i] += 0.9 * cols[0][i] - 0.6 * cols[1][i];
            cols[5][i] = cols[4][i] + 0.05 * cols[5][i];
        }
        let named: Vec<(String, Vec<f64>)> =
            cols.iter().enumerate().map(|(j, c)| (format!("v{j}"), c.clone())).collect();
        let y: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
        let d = DesignMatrix::from_numeric("y", y, &named).map_err(|e| e.to_string())?;
        let rep = vif(&d, true).map_err(|e| e.to_string())?;
        for (j, e) in rep.values.iter().enumerate() {
            let others: Vec<Vec<f64>> = (0..6).filter(|&k| k != j).map(|k| cols[k].clone()).collect();
            let want = vif_by_regression(&cols[j], &others);
            worst = worst.max(((e.vif - want) / want).abs());
        }
        let (pruned, prep) = vif_prune(&d, 10.0).map_err(|e| e.to_string())?;
        let kept: Vec<usize> = pruned
            .terms()
            .iter()
            .map(|t| t.name[1..].parse::<usize>().unwrap())
            .collect();
        for &j in &kept {
            let others: Vec<Vec<f64>> = kept.iter().filter(|&&k| k != j).map(|&k| cols[k].clone()).collect();
            let v = vif_by_regression(&cols[j], &others);
            ensure(v <= 10.0, || format!("survivor v{j} has VIF {v}"))?;
        }
        ensure(!prep.trail.is_empty(), || "nothing pruned from a near-duplicate pair".into())?;
    }
    ensure(worst < 1e-10, || format!("relative diff {worst:e}"))?;

    let mut r = rng(104);
    let a = centred_unit(&(0..40).map(|_| normal(&mut r)).collect::<Vec<_>>());
    let b = centred_unit(&(0..40).map(|_| normal(&mut r)).collect::<Vec<_>>());
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let orth = centred_unit(&b.iter().zip(&a).map(|(y, x)| y - dot * x).collect::<Vec<_>>());
    let s = (1.0f64 - 0.81).sqrt();
    let b: Vec<f64> = a.iter().zip(&orth).map(|(x, o)| 0.9 * x + s * o).collect();
    let y = a.iter().map(|v| 2.0 * v).collect();
    let d = DesignMatrix::from_numeric("y", y, &[("a", a), ("b", b)]).map_err(|e| e.to_string())?;
    let pair = vif(&d, true).map_err(|e| e.to_string())?;
    for e in &pair.values {
        ensure((e.vif - 5.2632).abs() <= 1e-4, || format!("pair VIF {}", e.vif))?;
    }
    Ok(format!("relative diff {worst:.1e}, pair VIF {:.4}", pair.values[0].vif))
}

// 7
fn leverage_trace() -> Outcome {
    let mut r = rng(105);
    let mut models = Vec::new();
    for (n, p) in [(60, 6), (40, 4), (50, 6), (100, 8), (1300, 70)] {
        models.push(fit_ols(&random_design(&mut r, n, p, 1.0)).map_err(|e| e.to_string())?);
    }
    // rank-deficient: duplicated column
    let x: Vec<f64> = (0..30).map(|_| normal(&mut r)).collect();
    let z: Vec<f64> = (0..30).map(|_| normal(&mut r)).collect();
    let y: Vec<f64> = (0..30).map(|_| normal(&mut r)).collect();
    let d = DesignMatrix::from_numeric("y", y, &[("x", x.clone()), ("x2", x), ("z", z)])
        .map_err(|e| e.to_string())?;
    models.push(fit_ols(&d).map_err(|e| e.to_string())?);
    for inst in 0..20 {
        let d = selection_instance(&mut r, 100, 8, inst % 2 == 1);
        for mode in Direction::ALL {
            let t = step_select(&d, &Scope::full(&d), mode, None).map_err(|e| e.to_string())?;
            models.push(t.final_model);
        }
    }
    let worst = models.iter().map(trace_error).fold(0.0, f64::max);
    ensure(worst < 1e-10, || format!("relative trace error {worst:e}"))?;
    Ok(format!("{} models, worst {worst:.1e}", models.len()))
}

fn selection_instance(r: &mut ChaCha8Rng, n: usize, p: usize, with_factor: bool) -> DesignMatrix {
    let xs: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| normal(r)).collect()).collect();
    let levels = ["lo", "mid", "hi"];
    let g: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % 3).collect();
    let y: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let f = if with_factor { 0.4 * g[i] as f64 } else { 0.0 };
            Some(2.0 + 1.5 * xs[0][i] - 0.8 * xs[2][i] + 0.2 * xs[4][i] + f + normal(r))
        })
        .collect();
    let mut cols = vec![Column::response("y", y)];
    let numeric = if with_factor { p - 1 } else { p };
    for (j, x) in xs.iter().take(numeric).enumerate() {
        cols.push(Column::numeric(format!("x{}", j + 1), x.iter().map(|&v| Some(v)).collect()));
    }
    if with_factor {
        let labels: Vec<Option<&str>> = g.iter().map(|&k| Some(levels[k])).collect();
        cols.push(Column::factor("grp", &labels));
    }
    encode_design(&RawTable::new(cols).unwrap()).unwrap()
}

fn legal(d: &DesignMatrix, current: &BTreeSet<usize>, mode: Direction) -> Vec<(usize, MoveKind)> {
    (0..d.terms().len())
        .filter_map(|t| match (current.contains(&t), mode) {
            (false, Direction::Backward) | (true, Direction::Forward) => None,
            (false, _) => Some((t, MoveKind::Add)),
            (true, _) => Some((t, MoveKind::Remove)),
        })
        .collect()
}

fn applied(current: &BTreeSet<usize>, t: usize, kind: MoveKind) -> BTreeSet<usize> {
    let mut next = current.clone();
    match kind {
        MoveKind::Add => next.insert(t),
        MoveKind::Remove => next.remove(&t),
    };
    next
}

fn set_aic(d: &DesignMatrix, s: &BTreeSet<usize>) -> f64 {
    aic_of_terms(d, &s.iter().copied().collect::<Vec<_>>(), 2.0)
}

fn replay(d: &DesignMatrix, trace: &SelectionTrace) -> Result<usize, String> {
    const SLACK: f64 = 1e-8;
    let mut current: BTreeSet<usize> = trace.start_terms.iter().copied().collect();
    let mut aic = set_aic(d, &current);
    for mv in &trace.moves {
        let best = legal(d, &current, trace.mode)
            .into_iter()
            .map(|(t, k)| set_aic(d, &applied(&current, t, k)))
            .fold(f64::INFINITY, f64::min);
        let next = applied(&current, mv.term_index, mv.kind);
        let chosen = set_aic(d, &next);
        ensure(chosen <= best + SLACK, || format!("{}: step {} not argmin", trace.mode, mv.step))?;
        ensure(chosen < aic, || format!("{}: step {} does not improve", trace.mode, mv.step))?;
        current = next;
        aic = chosen;
    }
    ensure(current.iter().copied().eq(trace.final_terms.iter().copied()), || {
        format!("{}: final terms differ from replay", trace.mode)
    })?;
    for (t, k) in legal(d, &current, trace.mode) {
        let v = set_aic(d, &applied(&current, t, k));
        ensure(v >= aic - DEFAULT_TOL_AIC - SLACK, || {
            format!("{}: improving move on term {t} left at termination", trace.mode)
        })?;
    }
    Ok(trace.moves.len())
}

// 8
fn greedy_step_oracle() -> Outcome {
    let mut r = rng(106);
    let mut moves = 0;
    for inst in 0..20 {
        let d = selection_instance(&mut r, 100, 8, inst % 2 == 1);
        for mode in Direction::ALL {
            let t = step_select(&d, &Scope::full(&d), mode, None).map_err(|e| e.to_string())?;
            moves += replay(&d, &t)?;
        }
        let t = step_select(&d, &Scope::full(&d), Direction::Both, Some(&[])).map_err(|e| e.to_string())?;
        moves += replay(&d, &t)?;
    }
    Ok(format!("{moves} moves checked"))
}

// 9
fn best_subset_bound() -> Outcome {
    let mut r = rng(107);
    let mut gap = f64::INFINITY;
    for inst in 0..10 {
        let d = selection_instance(&mut r, 100, 8, inst % 2 == 1);
        let p = d.terms().len();
        let best = (0u32..1 << p)
            .map(|mask| {
                let terms: Vec<usize> = (0..p).filter(|&t| mask >> t & 1 == 1).collect();
                aic_of_terms(&d, &terms, 2.0)
            })
            .fold(f64::INFINITY, f64::min);
        for mode in Direction::ALL {
            let t = step_select(&d, &Scope::full(&d), mode, None).map_err(|e| e.to_string())?;
            ensure(t.final_aic >= best - 1e-8, || format!("{mode}: {} < {best}", t.final_aic))?;
            gap = gap.min(t.final_aic - best);
        }
    }
    Ok(format!("smallest gap {gap:.2e}"))
}

// 10
fn added_variable_identity() -> Outcome {
    let mut r = rng(108);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = random_design(&mut r, 50, 6, 1.0);
        let m = fit_ols(&d).map_err(|e| e.to_string())?;
        for t in d.terms() {
            let av = added_variable_data(&m, &t.name).map_err(|e| e.to_string())?;
            let beta = m.coefficients()[t.columns[0]].ok_or("aliased")?;
            worst = worst.max((av.slope - beta).abs());
        }
    }
    ensure(worst < 1e-10, || format!("max diff {worst:e}"))?;
    Ok(format!("max diff {worst:.1e}"))
}

fn cv_config(models: Vec<CandidateModel>, reps: usize, workers: usize) -> CvConfig {
    CvConfig {
        replications: reps,
        workers,
        ..CvConfig::new(models)
    }
}

fn pinned_noise_design(seed: u64, n: usize, p: usize, sigma: f64) -> DesignMatrix {
    let mut r = rng(seed);
    let base = random_design(&mut r, n, p, 0.0);
    let e: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let mean = e.iter().sum::<f64>() / n as f64;
    let sd = (e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let y = base.y().iter().zip(&e).map(|(y, v)| y + sigma * (v - mean) / sd).collect();
    base.with_response("y", y).unwrap()
}

// 11
fn cv_determinism_and_scale() -> Outcome {
    let mut r = rng(109);
    let d = random_design(&mut r, 150, 6, 1.0);
    let models = || {
        vec![
            CandidateModel { name: "full".into(), terms: (0..6).collect() },
            CandidateModel { name: "small".into(), terms: vec![0, 1] },
        ]
    };
    let bits = |workers| -> Result<Vec<Vec<u64>>, String> {
        let res = mc_cross_validate(&d, &cv_config(models(), 500, workers)).map_err(|e| e.to_string())?;
        Ok(res.mspe.iter().map(|v| v.iter().map(|x| x.to_bits()).collect()).collect())
    };
    let base = bits(1)?;
    for w in [1, 4, 8] {
        ensure(bits(w)? == base, || format!("MSPE differs with {w} workers"))?;
    }

    let quiet = random_design(&mut r, 100, 5, 0.0);
    let res = mc_cross_validate(&quiet, &cv_config(models_for(&quiet), 300, 1)).map_err(|e| e.to_string())?;
    let scale = quiet.y().iter().map(|v| v * v).sum::<f64>() / quiet.nrows() as f64;
    let worst = res.mspe[0].iter().copied().fold(0.0, f64::max);
    ensure(worst <= 1e-16 * scale, || format!("noiseless MSPE {worst:e}"))?;

    let sigma = 2.0;
    let mut ratios = Vec::new();
    for seed in [53, 54, 55] {
        let d = pinned_noise_design(seed, 300, 5, sigma);
        let res = mc_cross_validate(&d, &cv_config(models_for(&d), 8000, 0)).map_err(|e| e.to_string())?;
        let expected = sigma * sigma * (1.0 + d.ncols() as f64 / res.n_train as f64);
        let ratio = res.mspe_summary[0].mean / expected;
        ensure((ratio - 1.0).abs() < 0.05, || format!("mean MSPE ratio {ratio}"))?;
        ratios.push(format!("{ratio:.3}"));
    }

    let big = random_design(&mut r, 1300, 70, 50.0);
    let models = vec![
        CandidateModel { name: "full".into(), terms: (0..70).collect() },
        CandidateModel { name: "half".into(), terms: (0..35).collect() },
        CandidateModel { name: "few".into(), terms: (0..10).collect() },
    ];
    let start = Instant::now();
    let res = mc_cross_validate(&big, &cv_config(models, 8000, 0)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(res.mspe.iter().all(|v| v.len() == 8000), || "short MSPE vector".into())?;
    ensure(elapsed < Duration::from_secs(600), || format!("large case took {elapsed:?}"))?;
    Ok(format!(
        "bitwise equal over 1/4/8 workers, noiseless max {worst:.1e}, mean ratios [{}], 8000 reps n=1300 p=70 in {:.1}s",
        ratios.join(", "),
        elapsed.as_secs_f64()
    ))
}

fn models_for(d: &DesignMatrix) -> Vec<CandidateModel> {
    vec![CandidateModel {
        name: "full".into(),
        terms: (0..d.terms().len()).collect(),
    }]
}

// 12
fn factor_encoding() -> Outcome {
    let n = 30;
    let labels: Vec<Option<String>> = (0..n).map(|i| Some(((i % 6) + 1).to_string())).collect();
    let table = RawTable::new(vec![
        Column::response("e3_bw", (0..n).map(|i| Some(3000.0 + i as f64)).collect()),
        Column::factor("h_cohort", &labels),
    ])
    .map_err(|e| e.to_string())?;
    let d = encode_design(&table).map_err(|e| e.to_string())?;
    let names = d.column_names()[1..].join(",");
    ensure(names == "h_cohort2,h_cohort3,h_cohort4,h_cohort5,h_cohort6", || names.clone())?;
    Ok(names)
}

fn bundled_config(out: &Path) -> Result<RunConfig, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic/regsel.conf");
    let mut cfg = RunConfig::from_file(&path).map_err(|e| e.to_string())?;
    cfg.out = out.to_path_buf();
    Ok(cfg)
}

// 13
fn end_to_end() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = bundled_config(a.path())?;
    ensure(
        cfg.na_ratio == 0.01
            && cfg.vstar == 10.0
            && cfg.k == 2.0
            && cfg.replications == 8000
            && cfg.train_fraction == 0.8
            && !cfg.exclude_rows.is_empty()
            && cfg.log_response
            && cfg.modes.len() == 3,
        || "bundled config is not the default parameterization".into(),
    )?;
    let start = Instant::now();
    let first = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let second = run_pipeline(&bundled_config(b.path())?).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(first.files == second.files, || "file lists differ".into())?;
    let required = [
        "prep/audit.log",
        "prune/vif_hist_before.tsv",
        "prune/vif_hist_after.tsv",
        "select/all_rows/forward.trace.tsv",
        "select/excluded_rows/both.trace.tsv",
        "diagnose/all_rows/comparison.tsv",
        "diagnose/comparison_side_by_side.tsv",
        "diagnose/all_rows/influence_forward.tsv",
        "diagnose/excluded_rows/influence_backward.tsv",
        "diagnose/chosen/identity/qq.tsv",
        "diagnose/chosen/log/residuals.tsv",
        "diagnose/chosen/added_variable.tsv",
        "cv/all_rows/mspe.tsv",
        "cv/excluded_rows/summary.tsv",
        "report/final_model.txt",
        "manifest.tsv",
    ];
    for f in required {
        ensure(first.files.iter().any(|p| p == Path::new(f)), || format!("missing {f}"))?;
    }
    for f in &first.files {
        let x = std::fs::read(a.path().join(f)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.path().join(f)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{} differs between runs", f.display()))?;
    }
    ensure(elapsed < Duration::from_secs(900), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} files byte-identical across two runs, {:.1}s",
        first.files.len(),
        elapsed.as_secs_f64()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("adjusted R-squared identity", adjusted_r2_identity),
        ("AIC convention", aic_convention),
        ("IQR reproduction", iqr_reproduction),
        ("PRESS equals leave-one-out error", press_oracle),
        ("Cook's distance and DFFITS refit oracles", cook_dffits_oracle),
        ("VIF oracle and pruning bound", vif_oracle),
        ("leverage trace equals rank", leverage_trace),
        ("greedy step is per-step argmin", greedy_step_oracle),
        ("greedy never beats best subset", best_subset_bound),
        ("added-variable slope equals coefficient", added_variable_identity),
        ("cross-validation determinism and scale", cv_determinism_and_scale),
        ("factor encoding", factor_encoding),
        ("end-to-end bundle reproducibility", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_owned()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
