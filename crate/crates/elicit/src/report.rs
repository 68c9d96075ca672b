//! Table emitters over summary and overlap files.
//!
//! Every table is sorted by (model, language, task type) and numbers are
//! printed with a fixed number of decimals, so output bytes depend only on
//! the input files.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{OverlapFile, SummaryFile};
use elicit_core::ConditionSummary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum TableKind {
    Validity,
    Fidelity,
    Diversity,
    Efficiency,
    FullSummary,
    Overlap,
}

impl TableKind {
    pub const ALL: [TableKind; 6] = [
        TableKind::Validity,
        TableKind::Fidelity,
        TableKind::Diversity,
        TableKind::Efficiency,
        TableKind::FullSummary,
        TableKind::Overlap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TableKind::Validity => "validity",
            TableKind::Fidelity => "fidelity",
            TableKind::Diversity => "diversity",
            TableKind::Efficiency => "efficiency",
            TableKind::FullSummary => "full_summary",
            TableKind::Overlap => "overlap",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Latex,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Latex => "tex",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("the overlap table needs overlap results; run `evaluate` with `--reference`")]
    MissingOverlap,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Int(usize),
    Num(f64, usize),
    Missing,
}

impl Cell {
    fn plain(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Num(v, d) => format!("{v:.d$}"),
            Cell::Missing => String::new(),
        }
    }

    fn is_text(&self) -> bool {
        matches!(self, Cell::Text(_))
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Text(s) => s.clone().into(),
            Cell::Int(n) => (*n).into(),
            Cell::Num(..) => self.plain().parse::<f64>().map_or(serde_json::Value::Null, Into::into),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Column {
    pub id: &'static str,
    pub header: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub kind: TableKind,
    pub lid_backend: String,
    pub quality_formula: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

const fn col(id: &'static str, header: &'static str) -> Column {
    Column { id, header }
}

const MODEL: Column = col("model", "Model");
const LANGUAGE: Column = col("language", "Language");
const TASK: Column = col("task_type", "Task");

type Getter = fn(&ConditionSummary) -> Cell;

fn pct(v: f64) -> Cell {
    Cell::Num(v, 1)
}

fn ratio(v: f64) -> Cell {
    Cell::Num(v, 3)
}

fn summary_columns(kind: TableKind) -> Vec<(Column, Getter)> {
    let model: (Column, Getter) = (MODEL, |s| Cell::Text(s.model_id.clone()));
    let language: (Column, Getter) = (LANGUAGE, |s| Cell::Text(s.language.clone()));
    let task: (Column, Getter) = (TASK, |s| Cell::Text(s.task_type.to_string()));
    let n: (Column, Getter) = (col("n_outputs", "N"), |s| Cell::Int(s.n_outputs));
    let valid: (Column, Getter) = (col("valid_pct", "Valid (%)"), |s| pct(s.valid_pct));
    let words: (Column, Getter) = (col("avg_words", "Avg. words"), |s| Cell::Num(s.avg_words, 1));
    let fidelity: (Column, Getter) = (col("doc_fidelity_pct", "Doc. fidelity (%)"), |s| {
        pct(s.doc_fidelity_pct)
    });
    let conf: (Column, Getter) = (col("avg_lang_conf", "LangConf"), |s| ratio(s.avg_lang_conf));
    let cs: (Column, Getter) = (col("avg_code_switch", "CS"), |s| ratio(s.avg_code_switch));
    let quality: (Column, Getter) = (col("avg_quality", "Quality"), |s| ratio(s.avg_quality));
    let ttr: (Column, Getter) = (col("avg_ttr", "TTR"), |s| ratio(s.avg_ttr));
    let hapax: (Column, Getter) = (col("avg_hapax", "Hapax"), |s| ratio(s.avg_hapax));
    let vocab: (Column, Getter) = (col("avg_vocab", "Vocab"), |s| Cell::Num(s.avg_vocab, 1));
    let usable: (Column, Getter) = (col("usable_words_per_call", "Words/call"), |s| {
        Cell::Num(s.usable_words_per_call, 1)
    });
    let presence: (Column, Getter) = (col("diacritic_presence_pct", "Diacritics (%)"), |s| {
        s.diacritic_presence_pct.map_or(Cell::Missing, pct)
    });
    let dia_ratio: (Column, Getter) = (col("avg_diacritic_ratio", "Diacritic ratio"), |s| {
        s.avg_diacritic_ratio.map_or(Cell::Missing, |v| Cell::Num(v, 4))
    });
    match kind {
        TableKind::Validity => vec![model, language, task, n, valid, words],
        TableKind::Fidelity => vec![model, language, task, fidelity, conf, cs, quality],
        TableKind::Diversity => vec![model, language, task, ttr, hapax, vocab, presence, dia_ratio],
        TableKind::Efficiency => vec![model, task, language, valid, fidelity, words, usable],
        TableKind::FullSummary => vec![
            model, language, task, n, valid, words, fidelity, ttr, hapax, vocab, cs, conf,
            quality, usable, presence, dia_ratio,
        ],
        TableKind::Overlap => unreachable!("overlap rows do not come from summaries"),
    }
}

pub fn build_table(
    kind: TableKind,
    summary: &SummaryFile,
    overlap: Option<&OverlapFile>,
) -> Result<Table, ReportError> {
    let (columns, rows) = if kind == TableKind::Overlap {
        let overlap = overlap.ok_or(ReportError::MissingOverlap)?;
        let columns = vec![
            LANGUAGE,
            col("reference", "Reference"),
            col("key", "Group"),
            col("cosine", "Cosine"),
            col("memorization_suspect", "Suspect"),
        ];
        let mut languages: Vec<_> = overlap.languages.iter().collect();
        languages.sort_by(|a, b| a.language.cmp(&b.language));
        let rows = languages
            .into_iter()
            .flat_map(|l| {
                l.results.iter().map(move |r| {
                    vec![
                        Cell::Text(l.language.clone()),
                        Cell::Text(l.reference.clone()),
                        Cell::Text(r.key.clone()),
                        Cell::Num(r.cosine, 4),
                        Cell::Text(if r.memorization_suspect { "yes" } else { "no" }.into()),
                    ]
                })
            })
            .collect();
        (columns, rows)
    } else {
        let spec = summary_columns(kind);
        let mut conditions: Vec<&ConditionSummary> = summary.conditions.iter().collect();
        conditions.sort_by_key(|s| s.key());
        let rows = conditions
            .into_iter()
            .map(|s| spec.iter().map(|(_, get)| get(s)).collect())
            .collect();
        (spec.into_iter().map(|(c, _)| c).collect(), rows)
    };
    Ok(Table {
        kind,
        lid_backend: summary.lid_backend.clone(),
        quality_formula: summary.quality_formula.clone(),
        columns,
        rows,
    })
}

pub fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => render_csv(table),
        Format::Latex => render_latex(table),
        Format::Json => render_json(table),
    }
}

/// Column-aligned text for terminals.
pub fn render_plain(table: &Table) -> String {
    let cells: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|c| match c {
                    Cell::Missing => "-".to_string(),
                    other => other.plain(),
                })
                .collect()
        })
        .collect();
    let widths: Vec<usize> = table
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            cells
                .iter()
                .map(|r| r[i].chars().count())
                .chain([c.header.chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let numeric: Vec<bool> = (0..table.columns.len())
        .map(|i| table.rows.first().is_some_and(|r| !r[i].is_text()))
        .collect();
    let line = |values: Vec<&str>| {
        let parts: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if numeric[i] {
                    format!("{v:>w$}", w = widths[i])
                } else {
                    format!("{v:<w$}", w = widths[i])
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(table.columns.iter().map(|c| c.header).collect());
    for row in &cells {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn render_csv(table: &Table) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(table.columns.iter().map(|c| c.id))
        .expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::plain))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

fn latex_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\textbackslash{}"),
            '&' | '%' | '$' | '#' | '_' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            '~' => out.push_str("\\textasciitilde{}"),
            '^' => out.push_str("\\textasciicircum{}"),
            _ => out.push(c),
        }
    }
    out
}

fn render_latex(table: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "% {} table", table.kind.as_str());
    let _ = writeln!(out, "% LID backend: {}", table.lid_backend);
    let _ = writeln!(out, "% {}", table.quality_formula);
    let align: String = table
        .columns
        .iter()
        .enumerate()
        .map(|(i, _)| match table.rows.first().map(|r| r[i].is_text()) {
            Some(false) => 'r',
            _ => 'l',
        })
        .collect();
    let _ = writeln!(out, "\\begin{{tabular}}{{{align}}}");
    out.push_str("\\hline\n");
    let headers: Vec<String> = table.columns.iter().map(|c| latex_escape(c.header)).collect();
    let _ = writeln!(out, "{} \\\\", headers.join(" & "));
    out.push_str("\\hline\n");
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Missing => "--".to_string(),
                other => latex_escape(&other.plain()),
            })
            .collect();
        let _ = writeln!(out, "{} \\\\", cells.join(" & "));
    }
    out.push_str("\\hline\n\\end{tabular}\n");
    out
}

fn render_json(table: &Table) -> String {
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, serde_json::Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, cell)| (c.id.to_string(), cell.json()))
                .collect();
            obj.into()
        })
        .collect();
    let doc = serde_json::json!({
        "table": table.kind.as_str(),
        "lid_backend": table.lid_backend,
        "quality_formula": table.quality_formula,
        "columns": table.columns.iter().map(|c| c.id).collect::<Vec<_>>(),
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable table");
    s.push('\n');
    s
}
