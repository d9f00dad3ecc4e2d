use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use super::{Column, ColumnData, ColumnRole, FactorColumn, RawTable, Schema};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Field delimiter; `None` picks tab for `.tsv`/`.tab` files, comma otherwise.
    pub delimiter: Option<u8>,
    /// Reject schema entries naming columns absent from the file.
    pub reject_unknown_schema_names: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: None,
            reject_unknown_schema_names: true,
        }
    }
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == "NA"
}

fn delimiter_for(path: &Path, opts: &LoadOptions) -> u8 {
    opts.delimiter.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => b'\t',
            _ => b',',
        }
    })
}

pub fn load_table(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable> {
    load_table_with(path, schema, &LoadOptions::default())
}

pub fn load_table_with(
    path: impl AsRef<Path>,
    schema: &Schema,
    opts: &LoadOptions,
) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path, opts))
        .has_headers(true)
        .from_reader(std::io::BufReader::new(file));
    let parse_err = |e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };

    let headers: Vec<String> = reader
        .headers()
        .map_err(parse_err)?
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let h = h.trim();
            if i == 0 {
                h.trim_start_matches('\u{feff}').to_owned()
            } else {
                h.to_owned()
            }
        })
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: "missing header row".into(),
        });
    }
    let mut seen = BTreeSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    if opts.reject_unknown_schema_names {
        schema.check_known(&headers)?;
    }
    let roles: Vec<(ColumnRole, bool)> = headers
        .iter()
        .map(|h| schema.lookup(h).ok_or_else(|| Error::UnlistedColumn(h.clone())))
        .collect::<Result<_>>()?;

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(parse_err)?;
        for (j, field) in record.iter().enumerate() {
            let f = field.trim();
            cells[j].push(if is_missing_token(f) {
                None
            } else {
                Some(f.to_owned())
            });
        }
    }
    let nrows = cells[0].len();
    if nrows == 0 {
        return Err(Error::NoDataRows);
    }

    let mut columns = Vec::with_capacity(headers.len());
    for ((name, (role, lenient)), raw) in headers.into_iter().zip(roles).zip(cells) {
        let data = match role {
            ColumnRole::Id => {
                if let Some(row) = raw.iter().position(Option::is_none) {
                    return Err(Error::MissingId { row: row + 1 });
                }
                ColumnData::Text(raw)
            }
            ColumnRole::Exclude => ColumnData::Text(raw),
            ColumnRole::Factor => ColumnData::Factor(FactorColumn::from_labels(&raw)),
            ColumnRole::Numeric | ColumnRole::Response => {
                let mut values = Vec::with_capacity(raw.len());
                for (row, cell) in raw.iter().enumerate() {
                    let v = match cell {
                        None => None,
                        Some(tok) => match tok.parse::<f64>() {
                            Ok(v) if v.is_finite() => Some(v),
                            _ if lenient => None,
                            _ => {
                                return Err(Error::InvalidNumber {
                                    row: row + 1,
                                    column: name,
                                    token: tok.clone(),
                                })
                            }
                        },
                    };
                    values.push(v);
                }
                ColumnData::Numeric(values)
            }
        };
        columns.push(Column { name, role, data });
    }
    RawTable::new(columns)
}

/// Writes the table as delimited text with a header row; missing cells are
/// written as `NA`. Numbers use the shortest representation that parses
/// back to the same value.
pub fn write_table<W: Write>(table: &RawTable, delimiter: u8, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    let wrap = |e: csv::Error| Error::Parse {
        path: "<output>".into(),
        message: e.to_string(),
    };
    w.write_record(table.columns().iter().map(|c| c.name.as_str()))
        .map_err(wrap)?;
    for i in 0..table.nrows() {
        let row: Vec<String> = table
            .columns()
            .iter()
            .map(|c| c.data.render(i).unwrap_or_else(|| "NA".to_owned()))
            .collect();
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Schema sidecar describing `table` exactly.
pub fn write_schema(table: &RawTable) -> Schema {
    table
        .columns()
        .iter()
        .fold(Schema::new(), |s, c| s.with(&c.name, c.role))
}
