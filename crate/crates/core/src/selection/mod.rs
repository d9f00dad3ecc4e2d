//! Greedy AIC search over term groups and cross-model comparison.

mod compare;

pub use compare::{compare_models, render_side_by_side, ComparisonColumn, ComparisonTable};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{PivotedQr, DEFAULT_RANK_TOL};
use crate::linmodel::{
    aic_selection_value, fit_ols_with, rss_floor, total_sum_of_squares, FitOptions, FittedModel,
    DEFAULT_AIC_PENALTY,
};

/// Minimum AIC decrease for a move to be applied.
pub const DEFAULT_TOL_AIC: f64 = 1e-9;

/// Bounds of the search, as term indices into the design.
#[derive(Debug, Clone, PartialEq)]
pub struct Scope {
    lower: Vec<usize>,
    upper: Vec<usize>,
    k: f64,
}

impl Scope {
    /// Intercept-only lower model, every term in the upper model, `k = 2`.
    pub fn full(design: &DesignMatrix) -> Scope {
        Scope {
            lower: Vec::new(),
            upper: (0..design.terms().len()).collect(),
            k: DEFAULT_AIC_PENALTY,
        }
    }

    pub fn new(design: &DesignMatrix, lower: &[usize], upper: &[usize], k: f64) -> Result<Scope> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("penalty k = {k} must be positive")));
        }
        let nterms = design.terms().len();
        let lower: BTreeSet<usize> = lower.iter().copied().collect();
        let upper: BTreeSet<usize> = upper.iter().copied().collect();
        if let Some(&t) = upper.iter().find(|&&t| t >= nterms) {
            return Err(Error::InvalidParameter(format!("term index {t} out of range")));
        }
        if !lower.is_subset(&upper) {
            return Err(Error::InvalidParameter(
                "lower scope is not contained in the upper scope".into(),
            ));
        }
        Ok(Scope {
            lower: lower.into_iter().collect(),
            upper: upper.into_iter().collect(),
            k,
        })
    }

    pub fn with_penalty(mut self, k: f64) -> Result<Scope> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("penalty k = {k} must be positive")));
        }
        self.k = k;
        Ok(self)
    }

    pub fn lower(&self) -> &[usize] {
        &self.lower
    }

    pub fn upper(&self) -> &[usize] {
        &self.upper
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Backward,
    Both,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Forward, Direction::Backward, Direction::Both];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::Both => "both",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Direction> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            "both" | "stepwise" => Ok(Direction::Both),
            other => Err(Error::InvalidParameter(format!("unknown selection mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Add,
    Remove,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Add => "add",
            MoveKind::Remove => "remove",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    /// 1-based step number.
    pub step: usize,
    pub kind: MoveKind,
    pub term: String,
    pub term_index: usize,
    pub aic_before: f64,
    pub aic_after: f64,
}

/// A candidate whose fit could not be scored; it is left out of that step.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedMove {
    pub step: usize,
    pub kind: MoveKind,
    pub term: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOptions {
    pub tol_aic: f64,
    pub rank_tol: f64,
    /// Score the candidates of a step on the rayon pool.
    pub parallel: bool,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            tol_aic: DEFAULT_TOL_AIC,
            rank_tol: DEFAULT_RANK_TOL,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionTrace {
    pub mode: Direction,
    pub start_terms: Vec<usize>,
    pub start_aic: f64,
    pub moves: Vec<Move>,
    pub skipped: Vec<SkippedMove>,
    pub final_terms: Vec<usize>,
    pub final_aic: f64,
    pub final_model: FittedModel,
}

impl SelectionTrace {
    pub fn formula(&self) -> String {
        self.final_model.formula()
    }

    pub fn final_term_names(&self) -> Vec<String> {
        self.final_model
            .design()
            .terms()
            .iter()
            .map(|t| t.name.clone())
            .collect()
    }

    /// Tab-delimited move list with a header row.
    pub fn render_tsv(&self) -> String {
        let mut out = String::from("step\tdirection\tterm\taic_before\taic_after\n");
        for m in &self.moves {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                m.step,
                m.kind.as_str(),
                m.term,
                m.aic_before,
                m.aic_after
            ));
        }
        out
    }
}

/// Selection AIC of the sub-model made of the intercept and `terms`, or a
/// reason the candidate cannot be scored.
fn score(design: &DesignMatrix, terms: &[usize], k: f64, rank_tol: f64, tss: f64) -> Result<f64> {
    let cols = design.columns_for_terms(terms);
    let x = design.x().select_columns(&cols);
    let qr = PivotedQr::with_tolerance(x, rank_tol);
    let ls = qr.solve(design.y());
    let floor = rss_floor(tss);
    if ls.rss <= floor {
        return Err(Error::AicUndefined { rss: ls.rss, floor });
    }
    Ok(aic_selection_value(design.nrows(), ls.rss, ls.rank, k))
}

/// Selection AIC of an arbitrary term set, as used by the search.
pub fn selection_aic(design: &DesignMatrix, terms: &[usize], k: f64) -> Result<f64> {
    let tss = total_sum_of_squares(design.y());
    score(design, terms, k, DEFAULT_RANK_TOL, tss)
}

pub fn step_select(
    design: &DesignMatrix,
    scope: &Scope,
    mode: Direction,
    start: Option<&[usize]>,
) -> Result<SelectionTrace> {
    step_select_with(design, scope, mode, start, SelectionOptions::default())
}

/// Greedy search. Each step scores every legal single-term move and applies
/// the best one when it lowers the AIC by more than `tol_aic`; ties go to the
/// term earliest in design order.
pub fn step_select_with(
    design: &DesignMatrix,
    scope: &Scope,
    mode: Direction,
    start: Option<&[usize]>,
    opts: SelectionOptions,
) -> Result<SelectionTrace> {
    let upper: BTreeSet<usize> = scope.upper.iter().copied().collect();
    let lower: BTreeSet<usize> = scope.lower.iter().copied().collect();
    let mut current: BTreeSet<usize> = match (start, mode) {
        (Some(s), _) => s.iter().copied().collect(),
        (None, Direction::Forward) => lower.clone(),
        (None, _) => upper.clone(),
    };
    if !current.is_subset(&upper) || !lower.is_subset(&current) {
        return Err(Error::InvalidParameter(
            "start model lies outside the search scope".into(),
        ));
    }
    let tss = total_sum_of_squares(design.y());
    let terms_vec = |s: &BTreeSet<usize>| s.iter().copied().collect::<Vec<_>>();
    let start_terms = terms_vec(&current);
    let start_aic = score(design, &start_terms, scope.k, opts.rank_tol, tss)?;
    let mut aic = start_aic;
    let mut moves = Vec::new();
    let mut skipped = Vec::new();

    for step in 1.. {
        let mut candidates: Vec<(usize, MoveKind)> = Vec::new();
        for t in 0..design.terms().len() {
            let inside = current.contains(&t);
            if !inside && upper.contains(&t) && mode != Direction::Backward {
                candidates.push((t, MoveKind::Add));
            } else if inside && !lower.contains(&t) && mode != Direction::Forward {
                candidates.push((t, MoveKind::Remove));
            }
        }
        if candidates.is_empty() {
            break;
        }
        let eval = |&(t, kind): &(usize, MoveKind)| {
            let mut next = current.clone();
            match kind {
                MoveKind::Add => next.insert(t),
                MoveKind::Remove => next.remove(&t),
            };
            score(design, &terms_vec(&next), scope.k, opts.rank_tol, tss)
        };
        let scores: Vec<Result<f64>> = if opts.parallel {
            candidates.par_iter().map(eval).collect()
        } else {
            candidates.iter().map(eval).collect()
        };

        let mut best: Option<(usize, f64)> = None;
        for (c, s) in scores.into_iter().enumerate() {
            match s {
                Ok(v) => {
                    if best.is_none_or(|(_, b)| v < b) {
                        best = Some((c, v));
                    }
                }
                Err(e) => {
                    let (t, kind) = candidates[c];
                    log::warn!(
                        "{mode} step {step}: skipping {} {}: {e}",
                        kind.as_str(),
                        design.terms()[t].name
                    );
                    skipped.push(SkippedMove {
                        step,
                        kind,
                        term: design.terms()[t].name.clone(),
                        reason: e.to_string(),
                    });
                }
            }
        }
        let Some((c, value)) = best else { break };
        if value >= aic - opts.tol_aic {
            break;
        }
        let (t, kind) = candidates[c];
        match kind {
            MoveKind::Add => current.insert(t),
            MoveKind::Remove => current.remove(&t),
        };
        moves.push(Move {
            step,
            kind,
            term: design.terms()[t].name.clone(),
            term_index: t,
            aic_before: aic,
            aic_after: value,
        });
        aic = value;
    }

    let final_terms = terms_vec(&current);
    let final_model = fit_ols_with(
        &design.select_terms(&final_terms),
        FitOptions {
            rank_tol: opts.rank_tol,
            strict: false,
        },
    )?;
    Ok(SelectionTrace {
        mode,
        start_terms,
        start_aic,
        moves,
        skipped,
        final_terms,
        final_aic: aic,
        final_model,
    })
}

/// Which searches to run and how.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub modes: Vec<Direction>,
    pub k: f64,
    /// Start the both-direction search from the lower model instead of the upper one.
    pub stepwise_from_lower: bool,
    pub options: SelectionOptions,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            modes: Direction::ALL.to_vec(),
            k: DEFAULT_AIC_PENALTY,
            stepwise_from_lower: false,
            options: SelectionOptions::default(),
        }
    }
}

/// Runs every configured mode over the full scope of `design`.
pub fn run_selection(config: &SelectionConfig, design: &DesignMatrix) -> Result<Vec<SelectionTrace>> {
    let scope = Scope::full(design).with_penalty(config.k)?;
    config
        .modes
        .iter()
        .map(|&mode| {
            let start = (mode == Direction::Both && config.stepwise_from_lower)
                .then_some(scope.lower());
            step_select_with(design, &scope, mode, start, config.options)
        })
        .collect()
}

/// Drops the given 0-based rows and reruns every configured search.
pub fn refit_excluding_rows(
    config: &SelectionConfig,
    design: &DesignMatrix,
    excluded: &[usize],
) -> Result<Vec<SelectionTrace>> {
    let n = design.nrows();
    if let Some(&index) = excluded.iter().find(|&&i| i >= n) {
        return Err(Error::RowOutOfRange { index, n });
    }
    let drop: BTreeSet<usize> = excluded.iter().copied().collect();
    let keep: Vec<usize> = (0..n).filter(|i| !drop.contains(i)).collect();
    if keep.len() <= design.ncols() {
        return Err(Error::InsufficientData {
            what: "refit after row exclusion",
            required: design.ncols() + 1,
            available: keep.len(),
        });
    }
    run_selection(config, &design.select_rows(&keep))
}
