use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::RawSeries;

/// Whether the first column holds timestamps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DateColumn {
    /// Treated as a date column when its header is `date`/`time`/`timestamp`
    /// or its first value is not numeric.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CsvSchema {
    pub date_column: DateColumn,
    /// Restrict to these channel names, in this order.
    pub channels: Option<Vec<String>>,
}

fn is_date_header(h: &str) -> bool {
    matches!(
        h.trim().to_ascii_lowercase().as_str(),
        "date" | "time" | "timestamp" | "datetime"
    )
}

/// Reads a headered CSV with an optional leading date column; every other
/// column is a numeric channel. Empty or NaN cells are ingestion errors and
/// unparsable cells are parse errors, both naming the zero-based data row.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RawSeries> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(String::from)
        .collect();
    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec.map_err(csv_err)?);
    }
    if headers.is_empty() {
        return Err(Error::EmptyData("CSV header"));
    }

    let has_date = match schema.date_column {
        DateColumn::Present => true,
        DateColumn::Absent => false,
        DateColumn::Auto => {
            is_date_header(&headers[0])
                || records
                    .first()
                    .and_then(|r| r.get(0))
                    .is_some_and(|v| !v.is_empty() && v.parse::<f64>().is_err())
        }
    };
    let first = usize::from(has_date);
    let available: Vec<(usize, &String)> = headers.iter().enumerate().skip(first).collect();
    let selected: Vec<(usize, String)> = match &schema.channels {
        None => available.iter().map(|(i, h)| (*i, (*h).clone())).collect(),
        Some(names) => names
            .iter()
            .map(|n| {
                available
                    .iter()
                    .find(|(_, h)| *h == n)
                    .map(|(i, h)| (*i, (*h).clone()))
                    .ok_or_else(|| Error::InvalidConfig(format!("CSV has no column `{n}`")))
            })
            .collect::<Result<_>>()?,
    };
    if selected.is_empty() {
        return Err(Error::EmptyData("CSV without numeric channels"));
    }

    let mut values = Matrix::zeros(records.len(), selected.len());
    let mut timestamps = has_date.then(|| Vec::with_capacity(records.len()));
    for (row, rec) in records.iter().enumerate() {
        if let Some(ts) = timestamps.as_mut() {
            ts.push(rec.get(0).unwrap_or_default().to_string());
        }
        for (c, (col, _)) in selected.iter().enumerate() {
            let cell = rec.get(*col).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Ingestion {
                    row,
                    message: format!("missing value in column `{}`", headers[*col]),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: *col,
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingestion {
                    row,
                    message: format!("non-finite value `{cell}` in column `{}`", headers[*col]),
                });
            }
            values[(row, c)] = v;
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(RawSeries {
        name,
        channel_names: selected.into_iter().map(|(_, h)| h).collect(),
        values,
        timestamps,
    })
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn toy_two_channels() {
        let mut text = String::from("date,a,b\n");
        for i in 0..10 {
            text.push_str(&format!("2020-01-01 {i:02}:00,{},{}\n", i, 0.5 * i as f64));
        }
        let f = write(&text);
        let s = load_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(s.values.shape(), (10, 2));
        assert_eq!(s.values[(7, 0)], 7.0);
        assert_eq!(s.values[(7, 1)], 3.5);
        assert_eq!(s.channel_names, vec!["a", "b"]);
        assert_eq!(s.timestamps.as_ref().unwrap()[3], "2020-01-01 03:00");
    }

    #[test]
    fn nan_names_row() {
        let f = write("date,a\nx,1\ny,NaN\nz,3\n");
        match load_csv(f.path(), &CsvSchema::default()) {
            Err(Error::Ingestion { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
        let f = write("a,b\n1,2\n3,\n");
        assert!(matches!(
            load_csv(f.path(), &CsvSchema::default()),
            Err(Error::Ingestion { row: 1, .. })
        ));
    }

    #[test]
    fn non_numeric_is_parse_error() {
        let f = write("a,b\n1,2\n3,oops\n");
        assert!(matches!(
            load_csv(f.path(), &CsvSchema::default()),
            Err(Error::Parse {
                row: 1,
                column: 1,
                ..
            })
        ));
    }

    #[test]
    fn ett_style_header() {
        let f = write(
            "date,HUFL,HULL,MUFL,MULL,LUFL,LULL,OT\n\
             2016-07-01 00:00:00,5.827,2.009,1.599,0.462,4.203,1.340,30.531\n",
        );
        let s = load_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(s.channels(), 7);
        let only = CsvSchema {
            channels: Some(vec!["OT".into()]),
            ..CsvSchema::default()
        };
        assert_eq!(load_csv(f.path(), &only).unwrap().values[(0, 0)], 30.531);
    }
}
