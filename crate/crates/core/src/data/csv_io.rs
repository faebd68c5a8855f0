use std::path::Path;

use crate::cloud::LabeledPointCloud;
use crate::error::{invalid, Error, Result};

use super::{Normalize, RawDataset};

/// Location of the label column in a CSV file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    /// Requires a header row.
    Name(String),
    Last,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub has_header: bool,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            label_column: LabelColumn::Last,
            has_header: false,
            delimiter: b',',
        }
    }
}

/// Read features and raw labels. All non-label columns must be numeric.
pub fn read_csv(path: &Path, options: &CsvOptions) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .delimiter(options.delimiter)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e))?;

    let named = match &options.label_column {
        LabelColumn::Name(name) => {
            if !options.has_header {
                return Err(invalid("label_column", "a column name needs a header row"));
            }
            let headers = reader.headers().map_err(|e| csv_error(path, 0, e))?;
            Some(
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| invalid("label_column", format!("no column named `{name}`")))?,
            )
        }
        _ => None,
    };

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, row, e))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let width = record.len();
        let col = match (&options.label_column, named) {
            (_, Some(c)) => c,
            (LabelColumn::Index(c), _) => *c,
            _ => width.saturating_sub(1),
        };
        if col >= width {
            return Err(malformed(path, row, format!("label column {col} out of range for {width} fields")));
        }
        let mut p = Vec::with_capacity(width - 1);
        for (j, field) in record.iter().enumerate() {
            if j == col {
                continue;
            }
            let x: f64 = field
                .parse()
                .map_err(|_| malformed(path, row, format!("field {j} is not a number: `{field}`")))?;
            p.push(x);
        }
        points.push(p);
        labels.push(record[col].to_string());
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("CSV file"));
    }
    Ok(RawDataset { points, labels })
}

/// Load a CSV file into a uniform-mass cloud plus the class-name table.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<(LabeledPointCloud, Vec<String>)> {
    read_csv(path, options)?.into_cloud(None, None, 0, Normalize::None)
}

fn malformed(path: &Path, record: usize, reason: String) -> Error {
    Error::MalformedRecord {
        path: path.to_path_buf(),
        record,
        reason,
    }
}

fn csv_error(path: &Path, record: usize, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => malformed(path, record, format!("{other:?}")),
    }
}
