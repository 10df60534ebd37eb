use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use omlad::dataio::{read_csv_from, CsvSchema, LabeledSeries};

use crate::CliError;

/// Opens a path, or stdin for `-`.
pub fn open_input(path: &str) -> Result<Box<dyn Read>, CliError> {
    if path == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    let file = File::open(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    Ok(Box::new(BufReader::new(file)))
}

/// Creates a file, or stdout for `-` or no path.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(Box::new(BufWriter::new(File::create(p)?))),
        _ => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

pub fn writes_stdout(path: Option<&Path>) -> bool {
    path.is_none_or(|p| p.as_os_str() == "-")
}

pub fn read_series(path: &str, schema: &CsvSchema) -> Result<LabeledSeries, CliError> {
    let mut series = read_csv_from(open_input(path)?, schema)?;
    if path != "-" {
        let p = Path::new(path);
        series.meta.name = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        series.meta.source = path.to_string();
    }
    Ok(series)
}

/// Column-name flags shared by the commands that read CSV.
#[derive(Debug, Clone, clap::Args)]
pub struct SchemaArgs {
    /// Name of the time column.
    #[arg(long = "time-col", default_value = "time")]
    pub time_col: String,
    /// Name of the value column.
    #[arg(long = "value-col", default_value = "value")]
    pub value_col: String,
    /// Name of the optional 0/1 label column.
    #[arg(long = "label-col", default_value = "label")]
    pub label_col: String,
}

impl SchemaArgs {
    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            time: self.time_col.clone(),
            value: self.value_col.clone(),
            label: Some(self.label_col.clone()),
        }
    }
}
