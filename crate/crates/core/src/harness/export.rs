use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(invalid_input(format!("unknown output format '{other}', expected csv or json"))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let record = e.position().map_or(0, |p| p.record() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            record,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes rows as CSV with a header, or as a JSON array. Floats are written
/// in shortest round-trip form in both formats.
pub fn write_records<T: Serialize>(path: &Path, records: &[T], format: OutputFormat) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(file);
            for r in records {
                w.serialize(r).map_err(csv_error)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut file = file;
            serde_json::to_writer_pretty(&mut file, records).map_err(|e| invalid_input(e.to_string()))?;
            file.write_all(b"\n")?;
            file.flush()?;
        }
    }
    Ok(())
}

pub fn read_records<T: DeserializeOwned>(path: &Path, format: OutputFormat) -> Result<Vec<T>> {
    let file = BufReader::new(File::open(path)?);
    match format {
        OutputFormat::Csv => csv::Reader::from_reader(file)
            .deserialize()
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(csv_error),
        OutputFormat::Json => serde_json::from_reader(file).map_err(|e| Error::Parse {
            record: e.line(),
            message: e.to_string(),
        }),
    }
}

/// Writes `records` to `dir/<stem>.<ext>` and returns the path.
pub fn export_results<T: Serialize>(dir: &Path, stem: &str, records: &[T], format: OutputFormat) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    write_records(&path, records, format)?;
    Ok(path)
}
