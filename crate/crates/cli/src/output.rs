//! CSV/JSON output. JSON mirrors the CSV rows as an array of objects.
//!
//! Columns whose name starts with `timing_` hold wall-clock measurements and
//! are the only part of the output that varies between identical runs.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn open(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_rows<T: Serialize>(w: &mut dyn Write, format: Format, rows: &[T]) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut *w);
            for row in rows {
                csv.serialize(row)?;
            }
            csv.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}
