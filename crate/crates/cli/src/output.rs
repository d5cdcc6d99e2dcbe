//! File and table output. Sampled fields go to CSV (header row, `x` first,
//! 17 significant digits) or JSON (a `meta` block plus the same columns);
//! both read back bit-exactly.

use std::io::Write;
use std::path::Path;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl From<&soliton_core::Grid> for GridMeta {
    fn from(g: &soliton_core::Grid) -> Self {
        GridMeta { x_min: g.x_min(), x_max: g.x_max(), n_points: g.n_points() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub gammas: Vec<f64>,
    pub norm_constants: Vec<f64>,
    pub alphas: Vec<f64>,
    pub kind: String,
    #[serde(default)]
    pub m: Option<usize>,
    pub t: f64,
    pub grid: GridMeta,
}

/// Named columns of equal length sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub meta: Option<Meta>,
    pub columns: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl Frame {
    pub fn new(meta: Option<Meta>) -> Self {
        Frame { meta, columns: Vec::new(), data: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.columns.push(name.into());
        self.data.push(values);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().position(|c| c == name).map(|i| self.data[i].as_slice())
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<(), CliError> {
        let file = std::fs::File::create(path).map_err(CliError::io(format!("cannot create {}", path.display())))?;
        let mut w = std::io::BufWriter::new(file);
        match format {
            Format::Csv => self.write_csv(&mut w),
            Format::Json => serde_json::to_writer(&mut w, self).map_err(std::io::Error::from),
        }
        .and_then(|_| w.flush())
        .map_err(CliError::io(format!("cannot write {}", path.display())))
    }

    fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        let rows = self.data.first().map_or(0, Vec::len);
        let mut line = String::new();
        for i in 0..rows {
            line.clear();
            for (j, col) in self.data.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:.16e}", col[i]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(format!("cannot read {}", path.display())))?;
        let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| bad(e.to_string())),
            _ => Frame::parse_csv(&text).map_err(bad),
        }
    }

    pub fn parse_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut data = vec![Vec::new(); columns.len()];
        for (n, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                return Err(format!("line {}: expected {} fields, found {}", n + 2, columns.len(), cells.len()));
            }
            for (col, cell) in data.iter_mut().zip(cells) {
                col.push(cell.parse().map_err(|e| format!("line {}: {e}", n + 2))?);
            }
        }
        Ok(Frame { meta: None, columns, data })
    }
}

/// One cell of a report table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Num(v) => s.serialize_f64(*v),
            Cell::Text(v) => s.serialize_str(v),
            Cell::Bool(v) => s.serialize_bool(*v),
            Cell::Empty => s.serialize_none(),
        }
    }
}

/// Rows of mixed cells under a fixed header, printed to stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

struct Row<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for r in &self.rows {
            seq.serialize_element(&Row(&self.header, r))?;
        }
        seq.end()
    }
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format, w: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(w, "{}", self.header.join(","))?;
                for r in &self.rows {
                    writeln!(w, "{}", r.iter().map(Cell::csv).collect::<Vec<_>>().join(","))?;
                }
                Ok(())
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, self)?;
                writeln!(w)
            }
        }
    }
}
