//! Tabular output. Numbers are written as `{:.8e}` (nine significant digits,
//! '.' decimal point, independent of locale); lines end in LF.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Whitespace-separated columns with the header as a `#` comment.
    pub fn write_gnuplot<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.header.join(" "))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Text(s) if s.contains(char::is_whitespace) => format!("\"{s}\""),
                    other => other.render(),
                })
                .collect();
            writeln!(out, "{}", cells.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// CSV to `out` and, when requested, the gnuplot copy to `gnuplot`.
pub fn emit<W: Write>(table: &Table, out: W, gnuplot: Option<&Path>) -> Result<()> {
    table.write_csv(out)?;
    if let Some(path) = gnuplot {
        let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        table.write_gnuplot(BufWriter::new(file))?;
    }
    Ok(())
}

/// Flat `key = value` lines.
pub fn write_pairs<W: Write>(mut out: W, pairs: &[(&str, Cell)]) -> Result<()> {
    for (k, v) in pairs {
        writeln!(out, "{k} = {}", v.render())?;
    }
    Ok(())
}
