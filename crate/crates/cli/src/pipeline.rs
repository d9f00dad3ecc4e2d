//! Stage runner. Every stage reads its inputs from the previous stage's
//! checkpoint files under the output directory, so any stage can be rerun
//! on its own once its predecessors have run.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use regsel_core::crossval::{emit_mspe_boxplot_data, mc_cross_validate, CandidateModel, CvConfig};
use regsel_core::dataset::{
    coerce_to_factor, drop_incomplete_rows, drop_sparse_columns, encode_design, load_table,
    load_table_with, merge_by_id, write_schema, write_table, LoadOptions, RawTable, Schema,
};
use regsel_core::diagnostics::{added_variable_data, influence_flags, vif, vif_prune, VifReport};
use regsel_core::linmodel::{
    fit_ols, refit_log_response, render_coefficients_tsv, render_summary, FittedModel,
};
use regsel_core::selection::{
    compare_models, render_side_by_side, run_selection, ComparisonTable, Direction,
    SelectionConfig, SelectionOptions, SelectionTrace,
};
use regsel_core::DesignMatrix;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, StepwiseStart};
use crate::plotdata::{residual_diagnostics, sturges_histogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Prep,
    Prune,
    Select,
    Diagnose,
    Cv,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Prep,
        Stage::Prune,
        Stage::Select,
        Stage::Diagnose,
        Stage::Cv,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Prep => "prep",
            Stage::Prune => "prune",
            Stage::Select => "select",
            Stage::Diagnose => "diagnose",
            Stage::Cv => "cv",
            Stage::Report => "report",
        }
    }

    fn hint(self) -> &'static str {
        match self {
            Stage::Prep => "check the table paths, the schema roles, `na_ratio` and `factors`",
            Stage::Prune => "check `vstar` and that numeric predictors survive preparation",
            Stage::Select => "check `modes`, `k` and `exclude_rows` (1-based rows of the cleaned data)",
            Stage::Diagnose => "check `top_m`, `chosen_model` and that the response is positive when `log_response` is on",
            Stage::Cv => "check `replications`, `train_fraction` and `workers`",
            Stage::Report => "rerun the earlier stages",
        }
    }
}

#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}\n  hint: {}",
            self.stage.name(),
            self.message,
            self.stage.hint()
        )
    }
}

impl std::error::Error for PipelineError {}

type StageResult<T> = Result<T, PipelineError>;

trait Tag<T> {
    fn at(self, stage: Stage) -> StageResult<T>;
}

impl<T, E: fmt::Display> Tag<T> for Result<T, E> {
    fn at(self, stage: Stage) -> StageResult<T> {
        self.map_err(|e| PipelineError {
            stage,
            message: e.to_string(),
        })
    }
}

fn fail<T>(stage: Stage, message: impl Into<String>) -> StageResult<T> {
    Err(PipelineError {
        stage,
        message: message.into(),
    })
}

/// Files written by a full run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    stage: Stage,
}

impl Ctx<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.cfg.out.join(rel)
    }

    fn write(&self, rel: &str, body: impl AsRef<[u8]>) -> StageResult<()> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| format!("cannot create {}: {e}", parent.display()))
                .at(self.stage)?;
        }
        std::fs::write(&p, body)
            .map_err(|e| format!("cannot write {}: {e}", p.display()))
            .at(self.stage)
    }

    fn read(&self, rel: &str) -> StageResult<String> {
        let p = self.path(rel);
        std::fs::read_to_string(&p)
            .map_err(|e| {
                let producer = rel.split('/').next().unwrap_or(rel);
                format!("missing checkpoint {} ({e}); run `regsel {producer}` first", p.display())
            })
            .at(self.stage)
    }

    fn exists(&self, rel: &str) -> bool {
        self.path(rel).exists()
    }
}

fn lines(text: &str) -> Vec<String> {
    text.lines().filter(|l| !l.is_empty()).map(String::from).collect()
}

// ---------------------------------------------------------------- prep

fn prepare(cfg: &RunConfig) -> regsel_core::Result<RawTable> {
    let schema = Schema::from_file(&cfg.schema)?;
    // one schema may describe several files
    let opts = LoadOptions {
        reject_unknown_schema_names: cfg.tables.len() == 1,
        ..LoadOptions::default()
    };
    let mut merged: Option<RawTable> = None;
    for path in &cfg.tables {
        let mut t = load_table_with(path, &schema, &opts)?;
        if t.predictor_count() > 0 {
            t = drop_sparse_columns(&t, cfg.na_ratio)?;
        }
        merged = Some(match merged {
            None => t,
            Some(m) => merge_by_id(&m, &t)?,
        });
    }
    let table = merged.ok_or(regsel_core::Error::NoDataRows)?;
    let table = drop_incomplete_rows(&table)?;
    coerce_to_factor(&table, &cfg.factors, cfg.max_levels)
}

pub fn run_prep(cfg: &RunConfig) -> StageResult<()> {
    let cx = Ctx { cfg, stage: Stage::Prep };
    let table = prepare(cfg).at(cx.stage)?;
    let mut buf = Vec::new();
    write_table(&table, b'\t', &mut buf).at(cx.stage)?;
    cx.write("prep/clean.tsv", buf)?;
    cx.write("prep/clean.schema", write_schema(&table).render())?;
    let mut audit = String::new();
    for e in table.audit() {
        let _ = writeln!(audit, "{e}");
    }
    let _ = writeln!(audit, "rows\t{}", table.nrows());
    let _ = writeln!(audit, "predictors\t{}", table.predictor_count());
    cx.write("prep/audit.log", audit)?;
    log::info!("prep: {} rows, {} predictors", table.nrows(), table.predictor_count());
    Ok(())
}

fn load_prepared(cx: &Ctx) -> StageResult<DesignMatrix> {
    let schema = Schema::parse(&cx.read("prep/clean.schema")?).at(cx.stage)?;
    let data = cx.path("prep/clean.tsv");
    if !data.exists() {
        return fail(cx.stage, "missing checkpoint prep/clean.tsv; run `regsel prep` first");
    }
    let table = load_table(&data, &schema).at(cx.stage)?;
    encode_design(&table).at(cx.stage)
}

// ---------------------------------------------------------------- prune

fn render_vif(r: &VifReport) -> String {
    let mut out = String::from("term\tvif\n");
    for e in &r.values {
        let _ = writeln!(out, "{}\t{}", e.name, e.vif);
    }
    out
}

pub fn run_prune(cfg: &RunConfig) -> StageResult<()> {
    let cx = Ctx { cfg, stage: Stage::Prune };
    let design = load_prepared(&cx)?;
    let before = vif(&design, true).ok();
    let (pruned, report) = vif_prune(&design, cfg.vstar).at(cx.stage)?;
    if let Some(b) = &before {
        cx.write("prune/vif_before.tsv", render_vif(b))?;
        let v: Vec<f64> = b.values.iter().map(|e| e.vif).collect();
        cx.write("prune/vif_hist_before.tsv", sturges_histogram(&v).render_tsv())?;
    }
    cx.write("prune/vif_after.tsv", render_vif(&report))?;
    let v: Vec<f64> = report.values.iter().map(|e| e.vif).collect();
    cx.write("prune/vif_hist_after.tsv", sturges_histogram(&v).render_tsv())?;
    let mut trail = String::from("step\tterm\tvif\n");
    for (i, r) in report.trail.iter().enumerate() {
        let _ = writeln!(trail, "{}\t{}\t{}", i + 1, r.name, r.vif);
    }
    cx.write("prune/trail.tsv", trail)?;
    let mut terms = String::new();
    for t in pruned.terms() {
        let _ = writeln!(terms, "{}", t.name);
    }
    cx.write("prune/terms.txt", terms)?;
    log::info!(
        "prune: {} removed, {} terms kept",
        report.trail.len(),
        pruned.terms().len()
    );
    Ok(())
}

fn select_named(cx: &Ctx, design: &DesignMatrix, names: &[String]) -> StageResult<Vec<usize>> {
    names
        .iter()
        .map(|n| design.term_index(n))
        .collect::<Option<Vec<_>>>()
        .map_or_else(
            || fail(cx.stage, "checkpoint names a term absent from the prepared data; rerun `prune`"),
            Ok,
        )
}

fn load_pruned(cx: &Ctx) -> StageResult<DesignMatrix> {
    let design = load_prepared(cx)?;
    let names = lines(&cx.read("prune/terms.txt")?);
    let keep = select_named(cx, &design, &names)?;
    Ok(design.select_terms(&keep))
}

// ---------------------------------------------------------------- select

/// Data variants analysed: all rows, and all rows minus the excluded ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowSet {
    All,
    Excluded,
}

impl RowSet {
    fn dir(self) -> &'static str {
        match self {
            RowSet::All => "all_rows",
            RowSet::Excluded => "excluded_rows",
        }
    }
}

fn row_sets(cfg: &RunConfig) -> Vec<RowSet> {
    if cfg.exclude_rows.is_empty() {
        vec![RowSet::All]
    } else {
        vec![RowSet::All, RowSet::Excluded]
    }
}

fn restrict(cx: &Ctx, design: &DesignMatrix, set: RowSet) -> StageResult<DesignMatrix> {
    match set {
        RowSet::All => Ok(design.clone()),
        RowSet::Excluded => {
            let n = design.nrows();
            if let Some(&r) = cx.cfg.exclude_rows.iter().find(|&&r| r > n) {
                return fail(cx.stage, format!("excluded row {r} exceeds the {n} prepared rows"));
            }
            let keep: Vec<usize> = (0..n).filter(|i| !cx.cfg.exclude_rows.contains(&(i + 1))).collect();
            Ok(design.select_rows(&keep))
        }
    }
}

fn selection_config(cfg: &RunConfig) -> SelectionConfig {
    SelectionConfig {
        modes: cfg.modes.clone(),
        k: cfg.k,
        stepwise_from_lower: cfg.stepwise_start == StepwiseStart::Intercept,
        options: SelectionOptions::default(),
    }
}

fn write_trace(cx: &Ctx, set: RowSet, t: &SelectionTrace) -> StageResult<()> {
    let base = format!("select/{}/{}", set.dir(), t.mode);
    cx.write(&format!("{base}.trace.tsv"), t.render_tsv())?;
    cx.write(&format!("{base}.formula.txt"), format!("{}\n", t.formula()))?;
    let mut terms = String::new();
    for name in t.final_term_names() {
        let _ = writeln!(terms, "{name}");
    }
    cx.write(&format!("{base}.terms.txt"), terms)?;
    let mut skipped = String::from("step\tdirection\tterm\treason\n");
    for s in &t.skipped {
        let _ = writeln!(skipped, "{}\t{}\t{}\t{}", s.step, s.kind.as_str(), s.term, s.reason);
    }
    cx.write(&format!("{base}.skipped.tsv"), skipped)
}

pub fn run_select(cfg: &RunConfig) -> StageResult<()> {
    let cx = Ctx { cfg, stage: Stage::Select };
    let design = load_pruned(&cx)?;
    let scfg = selection_config(cfg);
    for set in row_sets(cfg) {
        let data = restrict(&cx, &design, set)?;
        let traces = run_selection(&scfg, &data).at(cx.stage)?;
        for t in &traces {
            log::info!("select {}: {} -> {} moves", set.dir(), t.mode, t.moves.len());
            write_trace(&cx, set, t)?;
        }
    }
    Ok(())
}

fn load_selected(cx: &Ctx, design: &DesignMatrix, set: RowSet, mode: Direction) -> StageResult<Vec<usize>> {
    let names = lines(&cx.read(&format!("select/{}/{mode}.terms.txt", set.dir()))?);
    select_named(cx, design, &names)
}

// ---------------------------------------------------------------- diagnose

/// Per-row table plus the two cutoffs drawn on the leverage-vs-Cook's plot.
fn write_influence(cx: &Ctx, base: &str, model: &FittedModel) -> StageResult<()> {
    let r = influence_flags(model, cx.cfg.top_m.min(model.n())).at(cx.stage)?;
    let mut out = String::from("row_id\tleverage\tcooks_d\thigh_leverage\ttop_influence\n");
    let ids = model.design().row_ids();
    for i in 0..model.n() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            ids[i],
            r.leverage[i],
            r.cooks_d[i],
            u8::from(r.high_leverage[i]),
            u8::from(r.top_influence[i])
        );
    }
    cx.write(&format!("{base}.tsv"), out)?;
    let cut = format!(
        "statistic\tvalue\nleverage_cutoff\t{}\ncook_threshold\t{}\n",
        r.leverage_cutoff(),
        r.cook_threshold
    );
    cx.write(&format!("{base}.cutoffs.tsv"), cut)
}

fn comparison(cx: &Ctx, models: &[(Direction, FittedModel)]) -> StageResult<ComparisonTable> {
    let named: Vec<(&str, &FittedModel)> = models.iter().map(|(d, m)| (d.as_str(), m)).collect();
    compare_models(&named).at(cx.stage)
}

fn write_residual_plots(cx: &Ctx, dir: &str, model: &FittedModel) -> StageResult<()> {
    let p = residual_diagnostics(model);
    cx.write(&format!("{dir}/residuals.tsv"), p.points)?;
    cx.write(&format!("{dir}/qq.tsv"), p.qq)?;
    cx.write(&format!("{dir}/studentized_hist.tsv"), p.histogram)
}

/// The chosen model and, when configured, its log-response refit.
fn chosen_models(cx: &Ctx, design: &DesignMatrix) -> StageResult<Option<(FittedModel, Option<FittedModel>)>> {
    let mode = cx.cfg.chosen_model;
    if !cx.cfg.modes.contains(&mode) {
        return Ok(None);
    }
    let terms = load_selected(cx, design, RowSet::All, mode)?;
    let model = fit_ols(&design.select_terms(&terms)).at(cx.stage)?;
    let log = if cx.cfg.log_response {
        Some(refit_log_response(&model).at(cx.stage)?)
    } else {
        None
    };
    Ok(Some((model, log)))
}

pub fn run_diagnose(cfg: &RunConfig) -> StageResult<()> {
    let cx = Ctx { cfg, stage: Stage::Diagnose };
    let design = load_pruned(&cx)?;

    let full = fit_ols(&design).at(cx.stage)?;
    write_influence(&cx, "diagnose/full_model/influence", &full)?;

    let mut tables = Vec::new();
    for set in row_sets(cfg) {
        if cfg.modes.is_empty() {
            break;
        }
        let data = restrict(&cx, &design, set)?;
        let mut models = Vec::new();
        for &mode in &cfg.modes {
            let terms = load_selected(&cx, &data, set, mode)?;
            let m = fit_ols(&data.select_terms(&terms)).at(cx.stage)?;
            write_influence(&cx, &format!("diagnose/{}/influence_{mode}", set.dir()), &m)?;
            models.push((mode, m));
        }
        let table = comparison(&cx, &models)?;
        cx.write(&format!("diagnose/{}/comparison.tsv", set.dir()), table.render_tsv())?;
        cx.write(&format!("diagnose/{}/comparison.txt", set.dir()), table.render_text())?;
        tables.push(table);
    }
    if let [all, excl] = &tables[..] {
        let both = render_side_by_side(all, "all", excl, "excluded");
        cx.write("diagnose/comparison_side_by_side.tsv", both.render_tsv())?;
        cx.write("diagnose/comparison_side_by_side.txt", both.render_text())?;
    }

    if let Some((model, log)) = chosen_models(&cx, &design)? {
        write_residual_plots(&cx, "diagnose/chosen/identity", &model)?;
        if let Some(l) = &log {
            write_residual_plots(&cx, "diagnose/chosen/log", l)?;
        }
        let last = log.as_ref().unwrap_or(&model);
        let mut points = String::from("term\trow\tx_partial\ty_partial\n");
        let mut slopes = String::from("term\tslope\tcoefficient\n");
        for t in last.design().terms() {
            let j = t.columns[0];
            if t.columns.len() != 1 || last.coefficients()[j].is_none() {
                continue;
            }
            let av = added_variable_data(last, &t.name).at(cx.stage)?;
            for (i, (x, y)) in av.x_partial.iter().zip(&av.y_partial).enumerate() {
                let _ = writeln!(points, "{}\t{}\t{x}\t{y}", t.name, i + 1);
            }
            let _ = writeln!(slopes, "{}\t{}\t{}", t.name, av.slope, last.coefficients()[j].unwrap());
        }
        cx.write("diagnose/chosen/added_variable.tsv", points)?;
        cx.write("diagnose/chosen/added_variable_slopes.tsv", slopes)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- cv

pub fn run_cv(cfg: &RunConfig) -> StageResult<()> {
    let cx = Ctx { cfg, stage: Stage::Cv };
    if cfg.modes.is_empty() {
        return Ok(());
    }
    let design = load_pruned(&cx)?;
    for set in row_sets(cfg) {
        let data = restrict(&cx, &design, set)?;
        let models = cfg
            .modes
            .iter()
            .map(|&mode| {
                Ok(CandidateModel {
                    name: mode.as_str().to_owned(),
                    terms: load_selected(&cx, &data, set, mode)?,
                })
            })
            .collect::<StageResult<Vec<_>>>()?;
        let cv = CvConfig {
            replications: cfg.replications,
            train_fraction: cfg.train_fraction,
            seed: cfg.seed,
            models,
            workers: cfg.workers,
        };
        let result = mc_cross_validate(&data, &cv).at(cx.stage)?;
        let dir = format!("cv/{}", set.dir());
        cx.write(&format!("{dir}/mspe.tsv"), result.render_dump())?;
        cx.write(&format!("{dir}/summary.tsv"), result.render_summary_tables())?;
        emit_mspe_boxplot_data(&result, &cx.path(&dir)).at(cx.stage)?;
        let audit = format!(
            "replications\t{}\ntrain_rows\t{}\ntest_rows\t{}\nseed\t{}\nrank_deficient_fits\t{}\nunseen_level_events\t{}\n",
            cfg.replications,
            result.n_train,
            result.n_test,
            cfg.seed,
            result.rank_deficient_fits,
            result.unseen_level_events
        );
        cx.write(&format!("{dir}/audit.log"), audit)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- report

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            out.push(p.strip_prefix(root).unwrap_or(&p).to_owned());
        }
    }
    Ok(())
}

pub const MANIFEST: &str = "manifest.tsv";

pub fn run_report(cfg: &RunConfig) -> StageResult<ReportBundle> {
    let cx = Ctx { cfg, stage: Stage::Report };
    let design = load_pruned(&cx)?;
    if let Some((model, log)) = chosen_models(&cx, &design)? {
        let last = log.as_ref().unwrap_or(&model);
        let mut text = render_summary(&model);
        if let Some(l) = &log {
            text.push_str("\n\n");
            text.push_str(&render_summary(l));
        }
        cx.write("report/final_model.txt", text)?;
        cx.write("report/coefficients.tsv", render_coefficients_tsv(last))?;
    }
    if !cx.exists("prep/audit.log") {
        return fail(cx.stage, "no preparation output found");
    }

    let mut files = Vec::new();
    collect_files(&cfg.out, &cfg.out, &mut files).at(cx.stage)?;
    files.retain(|f| f != Path::new(MANIFEST));
    let mut manifest = String::from("file\tbytes\tsha256\n");
    for f in &files {
        let bytes = std::fs::read(cfg.out.join(f)).at(cx.stage)?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let _ = writeln!(manifest, "{}\t{}\t{hex}", f.display(), bytes.len());
    }
    cx.write(MANIFEST, manifest)?;
    files.push(PathBuf::from(MANIFEST));
    Ok(ReportBundle {
        out_dir: cfg.out.clone(),
        files,
    })
}

pub fn run_stage(cfg: &RunConfig, stage: Stage) -> StageResult<()> {
    match stage {
        Stage::Prep => run_prep(cfg),
        Stage::Prune => run_prune(cfg),
        Stage::Select => run_select(cfg),
        Stage::Diagnose => run_diagnose(cfg),
        Stage::Cv => run_cv(cfg),
        Stage::Report => run_report(cfg).map(|_| ()),
    }
}

/// Runs every stage in order.
pub fn run_pipeline(cfg: &RunConfig) -> StageResult<ReportBundle> {
    for stage in &Stage::ALL[..5] {
        run_stage(cfg, *stage)?;
    }
    run_report(cfg)
}
