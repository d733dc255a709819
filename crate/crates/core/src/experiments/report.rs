use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pipeline::Hygiene;
use crate::error::{OrdError, Result};
use crate::learners::LearnerKind;
use crate::metrics::paired_t_test;
use crate::oracle_toy::OracleScore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub macro_acc: Option<f64>,
    pub minority_acc: Option<f64>,
    pub majority_acc: Option<f64>,
    pub f1: f64,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mode: String,
    pub classifier: LearnerKind,
    pub seed: u64,
    pub metrics: CellMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub mode: String,
    pub seed: u64,
    pub n_label0: usize,
    pub n_label1: usize,
    pub n_overlap: Option<usize>,
    pub n_train: usize,
    pub degenerate: bool,
    pub hygiene_clean: bool,
    pub oracle: Option<OracleScore>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub cells: Vec<Cell>,
    pub synthesis: Vec<SynthesisRecord>,
    pub hygiene: Vec<(String, u64, Hygiene)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n - 1); absent for a single value.
    pub sd: Option<f64>,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
    Some(Summary { mean, sd, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Macro,
    Minority,
    Majority,
    F1,
    Auc,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Macro, Metric::Minority, Metric::Majority, Metric::F1, Metric::Auc];

    pub fn get(self, m: &CellMetrics) -> Option<f64> {
        match self {
            Metric::Macro => m.macro_acc,
            Metric::Minority => m.minority_acc,
            Metric::Majority => m.majority_acc,
            Metric::F1 => Some(m.f1),
            Metric::Auc => m.auc,
        }
    }
}

pub const AVG_OF_FOUR: &str = "avg_of_4";

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mode: String,
    /// Classifier name or [`AVG_OF_FOUR`].
    pub group: String,
    /// Indexed like [`Metric::ALL`].
    pub metrics: Vec<Option<Summary>>,
}

impl Aggregate {
    pub fn metric(&self, m: Metric) -> Option<Summary> {
        self.metrics[Metric::ALL.iter().position(|x| *x == m).expect("known metric")]
    }
}

fn first_seen<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = vec![];
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

/// Per-seed series of a group's metric. The avg-of-4 value for a seed is the
/// mean over the four classifiers and exists only when all four are present.
pub fn series(cells: &[Cell], mode: &str, group: &str, metric: Metric) -> Vec<(u64, f64)> {
    let of_mode: Vec<&Cell> = cells.iter().filter(|c| c.mode == mode).collect();
    if group == AVG_OF_FOUR {
        let seeds = first_seen(of_mode.iter().map(|c| c.seed));
        return seeds
            .into_iter()
            .filter_map(|s| {
                let vals: Vec<f64> = LearnerKind::AVG_OF_FOUR
                    .iter()
                    .filter_map(|k| {
                        of_mode
                            .iter()
                            .find(|c| c.seed == s && c.classifier == *k)
                            .and_then(|c| metric.get(&c.metrics))
                    })
                    .collect();
                (vals.len() == 4).then(|| (s, vals.iter().sum::<f64>() / 4.0))
            })
            .collect();
    }
    of_mode
        .iter()
        .filter(|c| c.classifier.name() == group)
        .filter_map(|c| metric.get(&c.metrics).map(|v| (c.seed, v)))
        .collect()
}

pub fn aggregates(cells: &[Cell]) -> Vec<Aggregate> {
    let mut out = vec![];
    for mode in first_seen(cells.iter().map(|c| c.mode.clone())) {
        let mut groups: Vec<String> = first_seen(cells.iter().filter(|c| c.mode == mode).map(|c| c.classifier.name().to_string()));
        groups.push(AVG_OF_FOUR.to_string());
        for g in groups {
            let metrics: Vec<Option<Summary>> = Metric::ALL
                .iter()
                .map(|&m| summarize(&series(cells, &mode, &g, m).iter().map(|x| x.1).collect::<Vec<_>>()))
                .collect();
            if g == AVG_OF_FOUR && metrics.iter().all(Option::is_none) {
                continue;
            }
            out.push(Aggregate {
                mode: mode.clone(),
                group: g,
                metrics,
            });
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(s: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|e| OrdError::Cell {
        row,
        column: column.to_string(),
        message: e.to_string(),
    })
}

pub const CELL_COLUMNS: [&str; 8] = ["mode", "classifier", "seed", "macro_acc", "minority_acc", "majority_acc", "f1", "auc"];

pub fn write_cells_csv(cells: &[Cell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(CELL_COLUMNS)?;
    for c in cells {
        let m = &c.metrics;
        w.write_record([
            c.mode.clone(),
            c.classifier.name().to_string(),
            c.seed.to_string(),
            opt(m.macro_acc),
            opt(m.minority_acc),
            opt(m.majority_acc),
            m.f1.to_string(),
            opt(m.auc),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| OrdError::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

pub fn read_cells_csv(text: &str) -> Result<Vec<Cell>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CELL_COLUMNS {
        return Err(OrdError::Schema(format!("cells.csv header must be {}", CELL_COLUMNS.join(","))));
    }
    let mut cells = vec![];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let classifier = rec[1].parse::<LearnerKind>().map_err(|e| OrdError::Cell {
            row: i,
            column: "classifier".into(),
            message: e.to_string(),
        })?;
        let seed = rec[2].parse::<u64>().map_err(|e| OrdError::Cell {
            row: i,
            column: "seed".into(),
            message: e.to_string(),
        })?;
        cells.push(Cell {
            mode: rec[0].to_string(),
            classifier,
            seed,
            metrics: CellMetrics {
                macro_acc: parse_opt(&rec[3], i, "macro_acc")?,
                minority_acc: parse_opt(&rec[4], i, "minority_acc")?,
                majority_acc: parse_opt(&rec[5], i, "majority_acc")?,
                f1: parse_opt(&rec[6], i, "f1")?.ok_or_else(|| OrdError::Cell {
                    row: i,
                    column: "f1".into(),
                    message: "missing".into(),
                })?,
                auc: parse_opt(&rec[7], i, "auc")?,
            },
        });
    }
    Ok(cells)
}

pub const SYNTHESIS_COLUMNS: [&str; 14] = [
    "mode",
    "seed",
    "n_label0",
    "n_label1",
    "n_overlap",
    "n_train",
    "degenerate",
    "hygiene_clean",
    "oracle_minority_acc",
    "oracle_majority_acc",
    "oracle_weighted_avg",
    "oracle_macro_avg",
    "oracle_n_minority",
    "warnings",
];

pub fn write_synthesis_csv(records: &[SynthesisRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(SYNTHESIS_COLUMNS)?;
    for s in records {
        let o = s.oracle;
        w.write_record([
            s.mode.clone(),
            s.seed.to_string(),
            s.n_label0.to_string(),
            s.n_label1.to_string(),
            s.n_overlap.map(|v| v.to_string()).unwrap_or_default(),
            s.n_train.to_string(),
            s.degenerate.to_string(),
            s.hygiene_clean.to_string(),
            opt(o.and_then(|o| o.minority_acc)),
            opt(o.and_then(|o| o.majority_acc)),
            opt(o.and_then(|o| o.weighted_avg)),
            opt(o.and_then(|o| o.macro_avg)),
            o.map(|o| format!("{}/{}", o.n_minority, o.n_majority)).unwrap_or_default(),
            s.warnings.join(" | "),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| OrdError::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

pub fn read_synthesis_csv(text: &str) -> Result<Vec<SynthesisRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SYNTHESIS_COLUMNS {
        return Err(OrdError::Schema("unexpected synthesis.csv header".into()));
    }
    let bad = |row: usize, column: &str, message: String| OrdError::Cell {
        row,
        column: column.to_string(),
        message,
    };
    let mut out = vec![];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let int = |k: usize| rec[k].parse::<usize>().map_err(|e| bad(i, SYNTHESIS_COLUMNS[k], e.to_string()));
        let flag = |k: usize| rec[k].parse::<bool>().map_err(|e| bad(i, SYNTHESIS_COLUMNS[k], e.to_string()));
        let oracle = if rec[12].is_empty() {
            None
        } else {
            let (a, b) = rec[12].split_once('/').ok_or_else(|| bad(i, "oracle_n_minority", "expected a/b".into()))?;
            Some(OracleScore {
                minority_acc: parse_opt(&rec[8], i, "oracle_minority_acc")?,
                majority_acc: parse_opt(&rec[9], i, "oracle_majority_acc")?,
                weighted_avg: parse_opt(&rec[10], i, "oracle_weighted_avg")?,
                macro_avg: parse_opt(&rec[11], i, "oracle_macro_avg")?,
                n_minority: a.parse().map_err(|_| bad(i, "oracle_n_minority", "bad count".into()))?,
                n_majority: b.parse().map_err(|_| bad(i, "oracle_n_minority", "bad count".into()))?,
            })
        };
        out.push(SynthesisRecord {
            mode: rec[0].to_string(),
            seed: rec[1].parse().map_err(|_| bad(i, "seed", "bad seed".into()))?,
            n_label0: int(2)?,
            n_label1: int(3)?,
            n_overlap: if rec[4].is_empty() { None } else { Some(int(4)?) },
            n_train: int(5)?,
            degenerate: flag(6)?,
            hygiene_clean: flag(7)?,
            oracle,
            warnings: if rec[13].is_empty() {
                vec![]
            } else {
                rec[13].split(" | ").map(str::to_string).collect()
            },
        });
    }
    Ok(out)
}

fn pct(s: Option<Summary>) -> String {
    match s {
        None => "n/a".into(),
        Some(Summary { mean, sd: Some(sd), .. }) => format!("{:.2} ± {:.2}", 100.0 * mean, 100.0 * sd),
        Some(Summary { mean, sd: None, .. }) => format!("{:.2}", 100.0 * mean),
    }
}

fn pct1(v: Option<f64>) -> String {
    v.map(|x| format!("{:.2}", 100.0 * x)).unwrap_or_else(|| "n/a".into())
}

fn group_label(g: &str) -> String {
    if g == AVG_OF_FOUR {
        return "Avg of 4".into();
    }
    g.parse::<LearnerKind>().map(|k| k.display_name().to_string()).unwrap_or_else(|_| g.to_string())
}

/// Markdown view of cells and synthesis records; a pure function of both.
pub fn render_markdown(cells: &[Cell], synthesis: &[SynthesisRecord]) -> String {
    let aggs = aggregates(cells);
    let modes = first_seen(cells.iter().map(|c| c.mode.clone()));
    let mut md = String::from("# Efficacy report\n\n");
    let find = |mode: &str, g: &str| aggs.iter().find(|a| a.mode == mode && a.group == g);

    md.push_str("## Macro accuracy (%)\n\n| Mode | GBDT (XGBoost stand-in) | Avg of 4 |\n|---|---|---|\n");
    for m in &modes {
        let gb = find(m, LearnerKind::Gbdt.name()).and_then(|a| a.metric(Metric::Macro));
        let av = find(m, AVG_OF_FOUR).and_then(|a| a.metric(Metric::Macro));
        let _ = writeln!(md, "| {m} | {} | {} |", pct(gb), pct(av));
    }

    md.push_str("\n## Per-classifier metrics (%)\n\n| Mode | Classifier | Macro | Minority | Majority | F1 | AUC | Seeds |\n|---|---|---|---|---|---|---|---|\n");
    for a in &aggs {
        let n = a.metrics.iter().flatten().map(|s| s.n).max().unwrap_or(0);
        let _ = write!(md, "| {} | {} |", a.mode, group_label(&a.group));
        for m in Metric::ALL {
            let _ = write!(md, " {} |", pct(a.metric(m)));
        }
        let _ = writeln!(md, " {n} |");
    }

    if modes.len() >= 2 {
        let mut rows = String::new();
        let base = &modes[0];
        for other in &modes[1..] {
            let groups = first_seen(aggs.iter().filter(|a| &a.mode == base).map(|a| a.group.clone()));
            for g in groups {
                let a = series(cells, base, &g, Metric::Macro);
                let b = series(cells, other, &g, Metric::Macro);
                let paired: Vec<(f64, f64)> = a
                    .iter()
                    .filter_map(|(s, x)| b.iter().find(|(t, _)| t == s).map(|(_, y)| (*x, *y)))
                    .collect();
                if paired.len() < 2 {
                    continue;
                }
                let (xa, xb): (Vec<f64>, Vec<f64>) = paired.into_iter().unzip();
                if let Ok(t) = paired_t_test(&xa, &xb) {
                    let diff = xa.iter().zip(&xb).map(|(p, q)| p - q).sum::<f64>() / xa.len() as f64;
                    let _ = writeln!(
                        rows,
                        "| {} | {base} - {other} | {:.2} | {:.3} | {} | {:.3e} |",
                        group_label(&g),
                        100.0 * diff,
                        t.t,
                        t.df,
                        t.two_sided_p
                    );
                }
            }
        }
        if !rows.is_empty() {
            md.push_str("\n## Paired t-tests on macro accuracy\n\n| Classifier | Modes | Mean diff (points) | t | df | p (two-sided) |\n|---|---|---|---|---|---|\n");
            md.push_str(&rows);
        }
    }

    if !synthesis.is_empty() {
        md.push_str("\n## Training sets\n\n| Mode | Seed | Synthetic label 0 | Synthetic label 1 | Overlap rows | Train rows | Oracle minority | Oracle majority | Oracle weighted | Oracle macro | Hygiene | Notes |\n|---|---|---|---|---|---|---|---|---|---|---|---|\n");
        for s in synthesis {
            let o = s.oracle;
            let mut notes = s.warnings.join("; ");
            if s.degenerate && notes.is_empty() {
                notes = "single-class training set".into();
            }
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                s.mode,
                s.seed,
                s.n_label0,
                s.n_label1,
                s.n_overlap.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                s.n_train,
                pct1(o.and_then(|o| o.minority_acc)),
                pct1(o.and_then(|o| o.majority_acc)),
                pct1(o.and_then(|o| o.weighted_avg)),
                pct1(o.and_then(|o| o.macro_avg)),
                if s.hygiene_clean { "clean" } else { "LEAK" },
                notes
            );
        }
    }
    md
}

/// Writes `cells.csv`, `synthesis.csv` (when present) and `report.md` under `dir`.
pub fn emit_report(r: &EvalReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    if r.cells.is_empty() {
        return Err(OrdError::invalid("report has no cells"));
    }
    fs::create_dir_all(dir).map_err(|e| OrdError::io(dir, e))?;
    let write = |name: &str, text: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| OrdError::io(&p, e))
    };
    write("cells.csv", write_cells_csv(&r.cells)?)?;
    if !r.synthesis.is_empty() {
        write("synthesis.csv", write_synthesis_csv(&r.synthesis)?)?;
    }
    write("report.md", render_markdown(&r.cells, &r.synthesis))
}

/// Rebuilds `report.md` from the CSV files in `dir`.
pub fn rebuild_report(dir: impl AsRef<Path>) -> Result<String> {
    let dir = dir.as_ref();
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|e| OrdError::io(&p, e))
    };
    let cells = read_cells_csv(&read("cells.csv")?)?;
    let synthesis = if dir.join("synthesis.csv").exists() {
        read_synthesis_csv(&read("synthesis.csv")?)?
    } else {
        vec![]
    };
    Ok(render_markdown(&cells, &synthesis))
}
