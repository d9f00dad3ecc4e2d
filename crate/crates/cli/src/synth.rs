//! Generator for a synthetic exposome-style study: two predictor tables, a
//! response table, a shared schema and a run config, with known structure
//! (sparse columns, collinear groups, three true signals, one gross outlier).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const DEFAULT_SYNTH_SEED: u64 = 515;

const N_IDS: usize = 515;
/// Ids present in the response table (the last few predictor rows have no outcome).
const N_RESPONSE: usize = 512;
const OUTLIER_ID: usize = 333;
const SPARSE: [(&str, usize); 2] = [("exp07", 40), ("cov12", 16)];
const FACTORS: [&str; 5] = ["h_cohort", "h_edumc", "dic0_a", "dic0_b", "dic0_c"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub files: Vec<PathBuf>,
    pub config: PathBuf,
    /// 1-based row of the planted outlier after row omission.
    pub outlier_row: usize,
    /// Rows expected to survive missing-value omission.
    pub complete_rows: usize,
    pub signals: Vec<&'static str>,
}

struct Gen(ChaCha8Rng);

impl Gen {
    fn z(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }
}

fn fmt4(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    (r + 0.0).to_string()
}

struct Table {
    header: Vec<String>,
    cells: Vec<Vec<String>>,
}

impl Table {
    fn render(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for row in &self.cells {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

pub fn generate(dir: &Path, seed: u64) -> std::io::Result<SynthSummary> {
    std::fs::create_dir_all(dir)?;
    let mut g = Gen(ChaCha8Rng::seed_from_u64(seed));
    let n = N_IDS;

    // exposures: 25 columns with two collinear groups
    let mut exp: Vec<Vec<f64>> = (0..25).map(|_| (0..n).map(|_| g.z()).collect()).collect();
    for i in 0..n {
        exp[1][i] = exp[0][i] + 0.08 * g.z();
        exp[13][i] = 0.6 * exp[11][i] + 0.6 * exp[12][i] + 0.1 * g.z();
    }
    for (j, col) in exp.iter_mut().enumerate() {
        let scale = 1.0 + (j % 4) as f64 * 0.5;
        let shift = (j % 5) as f64;
        col.iter_mut().for_each(|v| *v = shift + scale * *v);
    }
    // covariates: 15 columns, one collinear pair
    let mut cov: Vec<Vec<f64>> = (0..15).map(|_| (0..n).map(|_| g.z()).collect()).collect();
    for i in 0..n {
        cov[4][i] = cov[3][i] + 0.08 * g.z();
    }
    let cohort: Vec<usize> = (0..n).map(|_| 1 + g.below(6)).collect();
    let edu: Vec<usize> = (0..n).map(|_| 1 + g.below(3)).collect();
    let sex: Vec<&str> = (0..n).map(|_| if g.below(2) == 0 { "female" } else { "male" }).collect();
    let dic: Vec<Vec<usize>> = (0..3).map(|_| (0..n).map(|_| g.below(2)).collect()).collect();

    let outlier = OUTLIER_ID - 1;
    cov[2][outlier] = 14.0;
    let signals = vec!["cov01", "exp03", "exp10"];
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mut v = 3400.0 + 120.0 * cov[0][i] + 90.0 * (exp[2][i] - 2.0) / 2.0
                - 70.0 * (exp[9][i] - 4.0) / 1.5
                + 300.0 * g.z();
            if i == outlier {
                v += 2500.0;
            }
            v
        })
        .collect();

    // missing cells: the sparse columns, then one stray cell in each of
    // 13 distinct rows so those rows are lost to omission
    let mut exp_cells: Vec<Vec<String>> = (0..n)
        .map(|i| exp.iter().map(|c| fmt4(c[i])).collect())
        .collect();
    let mut cov_cells: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let mut r: Vec<String> = cov.iter().map(|c| fmt4(c[i])).collect();
            r.push(cohort[i].to_string());
            r.push(edu[i].to_string());
            r.push(sex[i].to_owned());
            r.extend(dic.iter().map(|d| d[i].to_string()));
            r
        })
        .collect();
    for (name, count) in SPARSE {
        let (cells, col) = if name.starts_with("exp") {
            (&mut exp_cells, name[3..].parse::<usize>().unwrap() - 1)
        } else {
            (&mut cov_cells, name[3..].parse::<usize>().unwrap() - 1)
        };
        let mut placed = 0;
        while placed < count {
            let i = g.below(n);
            if cells[i][col] != "NA" {
                cells[i][col] = "NA".into();
                placed += 1;
            }
        }
    }
    let sparse_cols = [6usize, 11];
    let mut lost = Vec::new();
    while lost.len() < 13 {
        let i = g.below(N_RESPONSE);
        if i == outlier || lost.contains(&i) {
            continue;
        }
        let k = lost.len();
        if k % 2 == 0 {
            let col = (k * 3) % 25;
            let col = if col == sparse_cols[0] { col + 1 } else { col };
            exp_cells[i][col] = "NA".into();
        } else {
            let col = (k * 5) % 15;
            let col = if col == sparse_cols[1] { col + 1 } else { col };
            cov_cells[i][col] = String::new();
        }
        lost.push(i);
    }
    lost.sort_unstable();

    let id = |i: usize| (i + 1).to_string();
    let exposures = Table {
        header: std::iter::once("ID".to_owned())
            .chain((1..=25).map(|j| format!("exp{j:02}")))
            .collect(),
        cells: (0..n)
            .map(|i| std::iter::once(id(i)).chain(exp_cells[i].iter().cloned()).collect())
            .collect(),
    };
    let mut cov_header: Vec<String> = std::iter::once("ID".to_owned())
        .chain((1..=15).map(|j| format!("cov{j:02}")))
        .collect();
    cov_header.extend(["h_cohort", "h_edumc", "e3_sex", "dic0_a", "dic0_b", "dic0_c"].map(String::from));
    // covariate rows are stored in reverse id order; the merge restores order
    let covariates = Table {
        header: cov_header,
        cells: (0..n)
            .rev()
            .map(|i| std::iter::once(id(i)).chain(cov_cells[i].iter().cloned()).collect())
            .collect(),
    };
    let mut outcome_rows: Vec<Vec<String>> =
        (0..N_RESPONSE).map(|i| vec![id(i), format!("{:.1}", y[i])]).collect();
    // an outcome with no predictor record
    outcome_rows.push(vec!["900".into(), "3333.0".into()]);
    let outcome = Table {
        header: vec!["ID".into(), "e3_bw".into()],
        cells: outcome_rows,
    };

    let complete: Vec<usize> = (0..N_RESPONSE).filter(|i| lost.binary_search(i).is_err()).collect();
    let outlier_row = complete.iter().position(|&i| i == outlier).unwrap() + 1;

    let schema = "ID\tid\ne3_bw\tresponse\ne3_sex\tfactor\n*\tnumeric\n";
    let mut config = String::new();
    let _ = writeln!(config, "tables = exposome.tsv, covariates.tsv, outcome.tsv");
    let _ = writeln!(config, "schema = study.schema");
    let _ = writeln!(config, "na_ratio = 0.01");
    let _ = writeln!(config, "factors = {}", FACTORS.join(", "));
    let _ = writeln!(config, "vstar = 10");
    let _ = writeln!(config, "modes = forward, backward, both");
    let _ = writeln!(config, "k = 2");
    let _ = writeln!(config, "exclude_rows = {outlier_row}");
    let _ = writeln!(config, "replications = 8000");
    let _ = writeln!(config, "train_fraction = 0.8");
    let _ = writeln!(config, "seed = 20883271");
    let _ = writeln!(config, "top_m = 15");
    let _ = writeln!(config, "log_response = true");
    let _ = writeln!(config, "chosen_model = forward");
    let _ = writeln!(config, "out = out");

    let mut files = Vec::new();
    for (name, body) in [
        ("exposome.tsv", exposures.render()),
        ("covariates.tsv", covariates.render()),
        ("outcome.tsv", outcome.render()),
        ("study.schema", schema.to_owned()),
        ("regsel.conf", config),
    ] {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        files.push(p);
    }
    Ok(SynthSummary {
        config: dir.join("regsel.conf"),
        files,
        outlier_row,
        complete_rows: complete.len(),
        signals,
    })
}
