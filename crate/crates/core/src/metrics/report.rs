//! Model-by-metric tables in CSV or aligned text, plus the published
//! reference rows for side-by-side display.

use serde::{Deserialize, Serialize};

use super::{DstEval, LatencyReport, RougeScores, Scalar, SelectionEval};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    /// (row label, one cell per column)
    pub rows: Vec<(String, Vec<String>)>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            title: title.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, label: impl Into<String>, cells: Vec<String>) {
        self.rows.push((label.into(), cells));
    }

    /// Adds a column, filling missing cells with "".
    pub fn push_column(&mut self, name: impl Into<String>, cells: &[(String, String)]) {
        self.columns.push(name.into());
        for (label, row) in &mut self.rows {
            let cell = cells.iter().find(|(l, _)| l == label).map_or(String::new(), |(_, v)| v.clone());
            row.push(cell);
        }
    }

    pub fn cell(&self, row: &str, column: &str) -> Option<&str> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows
            .iter()
            .find(|(l, _)| l == row)
            .and_then(|(_, cells)| cells.get(c))
            .map(String::as_str)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (label, cells) in &self.rows {
            let mut rec = vec![label.clone()];
            rec.extend(cells.iter().cloned());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_pretty(&self) -> String {
        let label_w = self.rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                self.rows
                    .iter()
                    .filter_map(|(_, cells)| cells.get(i))
                    .map(|s| s.chars().count())
                    .chain([c.chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = format!("{}\n", self.title);
        let mut line = format!("{:label_w$}", "");
        for (c, w) in self.columns.iter().zip(&widths) {
            line.push_str(&format!("  {c:>w$}"));
        }
        out.push_str(line.trim_end());
        out.push('\n');
        for (label, cells) in &self.rows {
            let mut line = format!("{label:label_w$}");
            for (i, w) in widths.iter().enumerate() {
                let cell = cells.get(i).map_or("", String::as_str);
                line.push_str(&format!("  {cell:>w$}"));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

fn fmt3<T: Scalar>(v: T) -> String {
    format!("{:.3}", v.to_f64())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceTables {
    pub selection: Table,
    pub extraction: Table,
    pub dst: Table,
}

/// Published values, for display next to local runs. Not recomputed.
pub fn reference_tables() -> ReferenceTables {
    #[derive(Deserialize)]
    struct Raw {
        title: String,
        columns: Vec<String>,
        rows: Vec<(String, Vec<String>)>,
    }
    #[derive(Deserialize)]
    struct All {
        selection: Raw,
        extraction: Raw,
        dst: Raw,
    }
    let all: All = serde_json::from_str(include_str!("../../../../fixtures/reference_tables.json"))
        .expect("bundled reference tables parse");
    let conv = |r: Raw| Table {
        title: r.title,
        columns: r.columns,
        rows: r.rows,
    };
    ReferenceTables {
        selection: conv(all.selection),
        extraction: conv(all.extraction),
        dst: conv(all.dst),
    }
}

pub fn selection_column<T: Scalar>(eval: &SelectionEval<T>, latency: Option<&LatencyReport>) -> Vec<(String, String)> {
    let mut cells = vec![
        ("Precision".to_string(), fmt3(eval.macro_avg.precision)),
        ("Recall".to_string(), fmt3(eval.macro_avg.recall)),
        ("F1 Score".to_string(), fmt3(eval.macro_avg.f1)),
    ];
    if let Some(l) = latency {
        cells.push(("Response time".into(), format!("{:.3}", l.p50 / 1000.0)));
    }
    cells
}

/// Selection scores with micro and macro rows labelled.
pub fn selection_table<T: Scalar>(model: &str, eval: &SelectionEval<T>) -> Table {
    let mut t = Table::new("Entity selection", vec![format!("{model} (micro)"), format!("{model} (macro)")]);
    for (label, micro, macro_) in [
        ("Precision", eval.micro.precision, eval.macro_avg.precision),
        ("Recall", eval.micro.recall, eval.macro_avg.recall),
        ("F1 Score", eval.micro.f1, eval.macro_avg.f1),
    ] {
        t.push_row(label, vec![fmt3(micro), fmt3(macro_)]);
    }
    t
}

/// Mean Rouge over a set of extraction examples.
pub fn extraction_table<T: Scalar>(model: &str, scores: &[RougeScores<T>], latency: Option<&LatencyReport>) -> Table {
    let n = T::from_count(scores.len().max(1));
    let r1 = scores.iter().fold(T::zero(), |a, s| a + s.rouge1.f1) / n;
    let rl = scores.iter().fold(T::zero(), |a, s| a + s.rouge_l.f1) / n;
    let mut t = Table::new("Entity extraction", vec![model.to_string()]);
    t.push_row("Rouge1", vec![fmt3(r1)]);
    t.push_row("RougeL", vec![fmt3(rl)]);
    if let Some(l) = latency {
        t.push_row("Response time", vec![format!("{:.3}", l.p50 / 1000.0)]);
    }
    t
}

/// JGA/AGA in percent, one row per model.
pub fn dst_table<T: Scalar>(rows: &[(&str, &DstEval<T>)]) -> Table {
    let mut t = Table::new("Dialogue state tracking", vec!["JGA".into(), "AGA".into()]);
    for (model, e) in rows {
        let aga = e.aga.map_or("n/a".to_string(), |a| format!("{:.2}", a.to_f64() * 100.0));
        t.push_row(*model, vec![format!("{:.2}", e.jga.to_f64() * 100.0), aga]);
    }
    t
}

/// `bucket_ms,count` lines.
pub fn histogram_csv(report: &LatencyReport, bucket_ms: f64) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bucket_ms", "count"]).expect("in-memory write");
    for (b, n) in report.histogram(bucket_ms) {
        w.write_record([b.to_string(), n.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
