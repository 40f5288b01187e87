//! CSV ingestion.
//!
//! Accepted layouts, detected from the header:
//!
//! - long: `region_id,year,<value>` with `<value>` one of `emissions`, `gdp`
//!   or `value`;
//! - wide: `region_id,<year>,<year>,...`;
//! - combined long: `region_id,year,emissions,gdp`.
//!
//! Every layout may carry an optional `dev_class` column, passed through
//! untouched. Line numbers in errors are 1-based and count the header.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use emission_dynamics::panel::{Field, RegionYearObservation};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}:{line}: {message}", file.display())]
    Schema { file: PathBuf, line: u64, message: String },
    #[error("{}:{line}: cannot parse {column} value {value:?}", file.display())]
    Parse {
        file: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("{}:{line}: {field} must be positive, got {value}", file.display())]
    NonPositiveValue {
        file: PathBuf,
        line: u64,
        field: Field,
        value: f64,
    },
    #[error("{}:{line}: duplicate record for region {region_id}, year {year}", file.display())]
    DuplicateRecord {
        file: PathBuf,
        line: u64,
        region_id: String,
        year: i32,
    },
    #[error("region {region_id}, year {year} is in {} but missing from {}", present.display(), missing.display())]
    Join {
        region_id: String,
        year: i32,
        present: PathBuf,
        missing: PathBuf,
    },
    #[error("{}: {source}", file.display())]
    Read { file: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, PartialEq)]
struct Cell {
    value: f64,
    dev_class: Option<String>,
}

type Table = BTreeMap<(String, i32), Cell>;

fn schema(file: &Path, line: u64, message: impl Into<String>) -> IngestError {
    IngestError::Schema {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn reader(file: &Path) -> Result<csv::Reader<std::fs::File>, IngestError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(file)
        .map_err(|source| IngestError::Read {
            file: file.to_path_buf(),
            source,
        })
}

fn read_error(file: &Path, e: csv::Error) -> IngestError {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => schema(
            file,
            pos.as_ref().map_or(0, |p| p.line()),
            format!("expected {expected_len} fields, found {len}"),
        ),
        _ => IngestError::Read {
            file: file.to_path_buf(),
            source: e,
        },
    }
}

fn parse_value(file: &Path, line: u64, column: &str, raw: &str, field: Field) -> Result<f64, IngestError> {
    let value: f64 = raw.parse().map_err(|_| IngestError::Parse {
        file: file.to_path_buf(),
        line,
        column: column.to_string(),
        value: raw.to_string(),
    })?;
    if !value.is_finite() {
        return Err(IngestError::Parse {
            file: file.to_path_buf(),
            line,
            column: column.to_string(),
            value: raw.to_string(),
        });
    }
    if value <= 0.0 {
        return Err(IngestError::NonPositiveValue {
            file: file.to_path_buf(),
            line,
            field,
            value,
        });
    }
    Ok(value)
}

fn parse_year(file: &Path, line: u64, raw: &str) -> Result<i32, IngestError> {
    raw.parse().map_err(|_| IngestError::Parse {
        file: file.to_path_buf(),
        line,
        column: "year".into(),
        value: raw.to_string(),
    })
}

fn insert(table: &mut Table, file: &Path, line: u64, region: &str, year: i32, cell: Cell) -> Result<(), IngestError> {
    if region.is_empty() {
        return Err(schema(file, line, "empty region_id"));
    }
    if table.insert((region.to_string(), year), cell).is_some() {
        return Err(IngestError::DuplicateRecord {
            file: file.to_path_buf(),
            line,
            region_id: region.to_string(),
            year,
        });
    }
    Ok(())
}

fn dev_class_of(record: &csv::StringRecord, column: Option<usize>) -> Option<String> {
    column
        .and_then(|c| record.get(c))
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

/// Reads one variable from a long or wide file.
fn read_single(file: &Path, field: Field) -> Result<Table, IngestError> {
    let mut rdr = reader(file)?;
    let header = rdr.headers().map_err(|e| read_error(file, e))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let position = |name: &str| names.iter().position(|h| *h == name);
    let region_col = position("region_id").ok_or_else(|| schema(file, 1, "missing column region_id"))?;
    let class_col = position("dev_class");
    let field_name = field.to_string();

    let mut table = Table::new();
    if let Some(year_col) = position("year") {
        let value_col = position(&field_name)
            .or_else(|| position("value"))
            .ok_or_else(|| schema(file, 1, format!("missing value column ({field_name} or value)")))?;
        if let Some(extra) = (0..names.len()).find(|c| ![region_col, year_col, value_col].contains(c) && Some(*c) != class_col) {
            return Err(schema(
                file,
                1,
                format!("unexpected column {:?}; expected region_id,year,{field_name}[,dev_class]", names[extra]),
            ));
        }
        for record in rdr.records() {
            let record = record.map_err(|e| read_error(file, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let year = parse_year(file, line, &record[year_col])?;
            let value = parse_value(file, line, &field_name, &record[value_col], field)?;
            let cell = Cell {
                value,
                dev_class: dev_class_of(&record, class_col),
            };
            insert(&mut table, file, line, &record[region_col], year, cell)?;
        }
    } else {
        let mut year_cols = Vec::new();
        for (c, name) in names.iter().enumerate() {
            if c == region_col || Some(c) == class_col {
                continue;
            }
            let year: i32 = name.parse().map_err(|_| {
                schema(
                    file,
                    1,
                    format!("column {name:?} is neither a year nor region_id/dev_class (long files need a year column)"),
                )
            })?;
            year_cols.push((c, year));
        }
        if year_cols.is_empty() {
            return Err(schema(file, 1, "no year columns"));
        }
        for record in rdr.records() {
            let record = record.map_err(|e| read_error(file, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let class = dev_class_of(&record, class_col);
            for &(c, year) in &year_cols {
                let value = parse_value(file, line, &year.to_string(), &record[c], field)?;
                let cell = Cell {
                    value,
                    dev_class: class.clone(),
                };
                insert(&mut table, file, line, &record[region_col], year, cell)?;
            }
        }
    }
    Ok(table)
}

/// Reads a combined long file with both variables.
pub fn read_combined(file: &Path) -> Result<Vec<RegionYearObservation>, IngestError> {
    let mut rdr = reader(file)?;
    let header = rdr.headers().map_err(|e| read_error(file, e))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let position = |name: &str| names.iter().position(|h| *h == name);
    let mut cols = [0usize; 4];
    for (slot, name) in cols.iter_mut().zip(["region_id", "year", "emissions", "gdp"]) {
        *slot = position(name).ok_or_else(|| schema(file, 1, format!("missing column {name}")))?;
    }
    let class_col = position("dev_class");
    if let Some(extra) = (0..names.len()).find(|c| !cols.contains(c) && Some(*c) != class_col) {
        return Err(schema(
            file,
            1,
            format!("unexpected column {:?}; expected region_id,year,emissions,gdp[,dev_class]", names[extra]),
        ));
    }
    let mut seen = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| read_error(file, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let region = record[cols[0]].to_string();
        let year = parse_year(file, line, &record[cols[1]])?;
        let emissions = parse_value(file, line, "emissions", &record[cols[2]], Field::Emissions)?;
        let gdp = parse_value(file, line, "gdp", &record[cols[3]], Field::Gdp)?;
        if region.is_empty() {
            return Err(schema(file, line, "empty region_id"));
        }
        let obs = RegionYearObservation {
            region_id: region.clone(),
            year,
            emissions,
            gdp,
            dev_class: dev_class_of(&record, class_col),
        };
        if seen.insert((region.clone(), year), obs).is_some() {
            return Err(IngestError::DuplicateRecord {
                file: file.to_path_buf(),
                line,
                region_id: region,
                year,
            });
        }
    }
    Ok(seen.into_values().collect())
}

/// Reads and joins separate emissions and GDP files on `(region_id, year)`.
/// Observations come back sorted by region, then year.
pub fn read_pair(emissions: &Path, gdp: &Path) -> Result<Vec<RegionYearObservation>, IngestError> {
    let e = read_single(emissions, Field::Emissions)?;
    let g = read_single(gdp, Field::Gdp)?;
    let join = |key: &(String, i32), present: &Path, missing: &Path| IngestError::Join {
        region_id: key.0.clone(),
        year: key.1,
        present: present.to_path_buf(),
        missing: missing.to_path_buf(),
    };
    if let Some(key) = e.keys().find(|k| !g.contains_key(*k)) {
        return Err(join(key, emissions, gdp));
    }
    if let Some(key) = g.keys().find(|k| !e.contains_key(*k)) {
        return Err(join(key, gdp, emissions));
    }
    Ok(e.into_iter()
        .map(|((region_id, year), cell)| {
            let other = &g[&(region_id.clone(), year)];
            RegionYearObservation {
                dev_class: cell.dev_class.or_else(|| other.dev_class.clone()),
                region_id,
                year,
                emissions: cell.value,
                gdp: other.value,
            }
        })
        .collect())
}
