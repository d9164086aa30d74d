use std::path::Path;

use locuskit::sequence::Sequence;
use locuskit::{Dataset, PointSet};

use crate::error::{CliError, CliResult};
use crate::fmt::fmt_g;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvSchema {
    FeaturesOnly,
    /// Last column is a real target.
    FeaturesTarget,
    /// Last column is a non-negative integer class label.
    FeaturesLabel,
    /// First column is the time stamp, the rest are token features.
    Sequence,
}

#[derive(Debug)]
pub enum Ingested {
    Dataset(Dataset),
    Sequence(Sequence),
}

impl Ingested {
    pub fn into_dataset(self) -> Dataset {
        match self {
            Ingested::Dataset(d) => d,
            Ingested::Sequence(_) => unreachable!("schema asked for a dataset"),
        }
    }

    pub fn into_sequence(self) -> Sequence {
        match self {
            Ingested::Sequence(s) => s,
            Ingested::Dataset(_) => unreachable!("schema asked for a sequence"),
        }
    }
}

/// Header and numeric rows of a CSV file.
pub fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::validation(format!("cannot open {}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("{}: bad header: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(CliError::validation(format!("{}: missing header row", path.display())));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CliError::Parse { row, column: String::new(), message: e.to_string() })?;
        let mut vals = Vec::with_capacity(header.len());
        for (cell, name) in rec.iter().zip(&header) {
            let v: f64 = cell.parse().map_err(|_| CliError::Parse {
                row,
                column: name.clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::Parse { row, column: name.clone(), message: format!("{cell:?} is not finite") });
            }
            vals.push(v);
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(CliError::validation(format!("{}: no data rows", path.display())));
    }
    Ok((header, rows))
}

fn schema_error(path: &Path, msg: &str) -> CliError {
    CliError::validation(format!("{}: {msg}", path.display()))
}

pub fn ingest_csv(path: &Path, schema: CsvSchema) -> CliResult<Ingested> {
    let (header, rows) = read_table(path)?;
    let width = header.len();
    let min = match schema {
        CsvSchema::FeaturesOnly => 1,
        _ => 2,
    };
    if width < min {
        return Err(schema_error(path, &format!("need at least {min} columns, found {width}")));
    }
    let columns = |range: std::ops::Range<usize>| -> CliResult<PointSet> {
        let data = rows.iter().flat_map(|r| r[range.clone()].iter().copied()).collect();
        Ok(PointSet::new(range.len(), data)?)
    };
    Ok(match schema {
        CsvSchema::FeaturesOnly => Ingested::Dataset(Dataset::unsupervised(columns(0..width)?)?),
        CsvSchema::FeaturesTarget => {
            let y = rows.iter().map(|r| r[width - 1]).collect();
            Ingested::Dataset(Dataset::regression(columns(0..width - 1)?, y)?)
        }
        CsvSchema::FeaturesLabel => {
            let mut labels = Vec::with_capacity(rows.len());
            for (i, r) in rows.iter().enumerate() {
                let v = r[width - 1];
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(CliError::Parse {
                        row: i + 1,
                        column: header[width - 1].clone(),
                        message: format!("label {v} is not a non-negative integer"),
                    });
                }
                labels.push(v as usize);
            }
            Ingested::Dataset(Dataset::classification(columns(0..width - 1)?, labels)?)
        }
        CsvSchema::Sequence => {
            let times: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(schema_error(path, "time stamps must increase strictly"));
            }
            Ingested::Sequence(Sequence::new(columns(1..width)?, Some(times))?)
        }
    })
}

/// Numeric cell for data files: 17 significant digits, round-trips exactly.
pub fn cell(v: f64) -> String {
    fmt_g(v, 17)
}

/// RFC 4180 text with a header row.
pub fn to_csv(header: &[String], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_round_trip() {
        for v in [0.1, -1e-300, 123456789.123, 2.0f64.sqrt()] {
            assert_eq!(cell(v).parse::<f64>().unwrap(), v);
        }
    }

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn features_only_shape() {
        let f = file("a,b\n1,2\n3,4\n5,6\n");
        let d = ingest_csv(f.path(), CsvSchema::FeaturesOnly).unwrap().into_dataset();
        assert_eq!((d.len(), d.x.dim()), (3, 2));
    }

    #[test]
    fn features_target_splits_last_column() {
        let f = file("x,y\n1,2\n3,4\n");
        let d = ingest_csv(f.path(), CsvSchema::FeaturesTarget).unwrap().into_dataset();
        assert_eq!(d.x.dim(), 1);
        assert_eq!(d.real_targets().unwrap().column(0), vec![2.0, 4.0]);
    }

    #[test]
    fn parse_error_names_the_row() {
        let mut text = String::from("x,y\n");
        for i in 1..=6 {
            text.push_str(&format!("{i},{i}\n"));
        }
        text.push_str("7,seven\n");
        let f = file(&text);
        match ingest_csv(f.path(), CsvSchema::FeaturesOnly) {
            Err(CliError::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (7, "y")),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn written_table_reads_back() {
        let rows: Vec<Vec<f64>> = vec![vec![0.1, -2.5e-7], vec![1.0 / 3.0, 1e300]];
        let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|v| cell(*v)).collect()).collect();
        let f = file(std::str::from_utf8(&to_csv(&["a".into(), "b".into()], &cells).unwrap()).unwrap());
        let (_, back) = read_table(f.path()).unwrap();
        for (a, b) in rows.iter().flatten().zip(back.iter().flatten()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
