//! Header-checked CSV reading shared by the ingest paths.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use csv::StringRecord;

use crate::{Error, Result};

pub(crate) struct Table<R> {
    path: PathBuf,
    reader: csv::Reader<R>,
    columns: Vec<usize>,
}

pub(crate) fn open(path: &Path, required: &[&str]) -> Result<Table<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Table::new(file, path, required)
}

impl<R: Read> Table<R> {
    pub(crate) fn new(source: R, label: &Path, required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        let headers = reader.headers().map_err(|e| Error::csv(label, e))?.clone();
        let columns = required
            .iter()
            .map(|&name| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::Schema {
                        path: label.to_path_buf(),
                        column: name.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Table {
            path: label.to_path_buf(),
            reader,
            columns,
        })
    }

    /// Iterate rows as `Row`s whose fields are addressed by the position of
    /// the column in the `required` list.
    pub(crate) fn rows(&mut self) -> impl Iterator<Item = Result<Row<'_>>> + '_ {
        let path = &self.path;
        let columns = &self.columns;
        self.reader.records().map(move |rec| {
            let record = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Error::row(path, line, e.to_string())
            })?;
            Ok(Row {
                path,
                columns,
                record,
            })
        })
    }
}

pub(crate) struct Row<'a> {
    path: &'a Path,
    columns: &'a [usize],
    record: StringRecord,
}

impl Row<'_> {
    pub(crate) fn line(&self) -> u64 {
        self.record.position().map(|p| p.line()).unwrap_or(0)
    }

    pub(crate) fn raw(&self, col: usize) -> &str {
        self.record.get(self.columns[col]).unwrap_or("")
    }

    pub(crate) fn get<T: FromStr>(&self, col: usize, name: &str) -> Result<T> {
        let raw = self.raw(col);
        raw.parse()
            .map_err(|_| self.error(format!("cannot parse `{raw}` in column `{name}`")))
    }

    /// Empty field parses as `None`.
    pub(crate) fn get_opt<T: FromStr>(&self, col: usize, name: &str) -> Result<Option<T>> {
        if self.raw(col).is_empty() {
            Ok(None)
        } else {
            self.get(col, name).map(Some)
        }
    }

    pub(crate) fn error(&self, reason: impl Into<String>) -> Error {
        Error::row(self.path, self.line(), reason)
    }
}

pub(crate) fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

pub(crate) fn write_record<W: std::io::Write, I, T>(
    w: &mut csv::Writer<W>,
    path: &Path,
    record: I,
) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(record).map_err(|e| Error::csv(path, e))
}

pub(crate) fn finish<W: std::io::Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Accepts RFC 3339 (`2020-06-01T00:00:00Z`) or a naive timestamp taken as UTC.
pub(crate) fn parse_utc(raw: &str) -> Option<chrono::DateTime<chrono::Utc>> {
    if let Ok(t) = chrono::DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&chrono::Utc));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|fmt| chrono::NaiveDateTime::parse_from_str(raw, fmt).ok())
        .map(|t| t.and_utc())
}
