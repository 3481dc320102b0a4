//! Output bundles: tables as CSV or JSON lines, text reports and gnuplot scripts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{Map, Number, Value};
use spillover::envelope::ConcaveEnvelope;
use spillover::numfmt::sig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    JsonLines,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Num(x as f64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Num(x as f64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => sig(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // Same 12 digits as the CSV form.
            Cell::Num(x) => sig(*x).parse::<f64>().ok().and_then(Number::from_f64).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Two-column `key,value` table.
    pub fn records(records: &[(String, f64)]) -> Self {
        let mut t = Table::new(["key", "value"]);
        for (k, v) in records {
            t.push(vec![k.as_str().into(), (*v).into()]);
        }
        t
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::text))?;
                }
                Ok(String::from_utf8(w.into_inner()?)?)
            }
            Format::JsonLines => {
                let mut out = String::new();
                for r in &self.rows {
                    let obj: Map<String, Value> = self.header.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                    out.push_str(&serde_json::to_string(&obj)?);
                    out.push('\n');
                }
                Ok(out)
            }
        }
    }
}

/// Directory receiving one command's files.
pub struct Bundle {
    dir: PathBuf,
    format: Format,
    written: Vec<PathBuf>,
}

impl Bundle {
    pub fn create(root: &Path, name: &str, format: Format) -> Result<Self> {
        let dir = root.join(name);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, format, written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_text(&mut self, file: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(file);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes `stem` with the bundle's table extension.
    pub fn write_table(&mut self, stem: &str, table: &Table) -> Result<PathBuf> {
        let file = format!("{stem}.{}", self.format.extension());
        let text = table.render(self.format)?;
        self.write_text(&file, &text)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// `p_<label>…, v, cav` for every sample of an envelope, labels over its face.
pub fn envelope_table(env: &ConcaveEnvelope, labels: &[String]) -> Result<Table> {
    let face_labels: Vec<String> = env.face().iter().map(|&k| format!("p_{}", labels[k])).collect();
    let mut t = Table::new(face_labels.iter().cloned().chain(["v".to_string(), "cav".to_string()]));
    for (p, v, c) in env.export_rows()? {
        let mut row: Vec<Cell> = p.into_iter().map(Cell::from).collect();
        row.push(v.into());
        row.push(c.into());
        t.push(row);
    }
    Ok(t)
}

/// Gnuplot script drawing `v` and `Cav(v)` from a table written by
/// [`envelope_table`]: a curve over the first weight on a 2-state face, a
/// point cloud over the first two weights otherwise.
pub fn gnuplot_envelope(data_file: &str, title: &str, face_len: usize, format: Format) -> String {
    let mut s = String::new();
    s.push_str(&format!("# {title}\n"));
    if format == Format::JsonLines {
        s.push_str("# reads the CSV form of the data; rerun with --format csv\n");
    }
    s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
    s.push_str(&format!("set title '{title}'\n"));
    let v = face_len + 1;
    let cav = face_len + 2;
    if face_len == 2 {
        s.push_str("set xlabel 'p'\n");
        s.push_str(&format!(
            "plot '{data_file}' using 1:{v} with lines title 'v', '' using 1:{cav} with lines title 'Cav v'\n"
        ));
    } else {
        s.push_str(&format!(
            "splot '{data_file}' using 1:2:{v} with points title 'v', '' using 1:2:{cav} with points title 'Cav v'\n"
        ));
    }
    s
}
