use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Reports that can also be flattened into CSV rows.
pub trait Tabular {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

/// Full double precision: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn state_columns(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

pub struct Sink {
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Sink {
    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout().lock()),
        })
    }

    pub fn emit<R: Serialize + Tabular>(&self, report: &R) -> anyhow::Result<()> {
        let mut w = self.writer()?;
        match self.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, report)?;
                writeln!(w)?;
            }
            Format::Csv => {
                let mut c = csv::Writer::from_writer(&mut w);
                c.write_record(report.header())?;
                for row in report.rows() {
                    c.write_record(row)?;
                }
                c.flush()?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
