//! CSV ingestion and lossless text output. Every float written by this crate
//! carries 17 significant digits, so values round-trip bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::grassmann::{PointCloud, Projector, StiefelFrame};
use crate::objectives::ProjectionSummary;

/// `v` with 17 significant digits in exponent form, `null` if non-finite.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with full-precision floats.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Numeric table with an optional header row. Rows must be rectangular.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text, path)
}

pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(idx + 1, |p| p.line() as usize),
            column: None,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
        if rows.is_empty() && width.is_none() && parsed.iter().any(std::result::Result::is_err) {
            // header row
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                column: None,
                message: format!("ragged row: {} fields, expected {expected}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(expected);
        for (col, (cell, value)) in record.iter().zip(parsed).enumerate() {
            match value {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        column: Some(col + 1),
                        message: format!("non-numeric cell `{cell}`"),
                    })
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads an `m x d` point cloud from CSV.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    PointCloud::new(read_matrix_csv(path)?)
}

pub fn matrix_to_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn write_frame_csv(frame: &StiefelFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_csv(&frame.to_rows())).map_err(|e| Error::io(path, e))
}

pub fn read_frame_csv(path: impl AsRef<Path>) -> Result<StiefelFrame> {
    StiefelFrame::from_rows(read_matrix_csv(path)?)
}

pub fn write_projector_csv(p: &Projector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_csv(&p.to_rows())).map_err(|e| Error::io(path, e))
}

pub fn read_projector_csv(path: impl AsRef<Path>) -> Result<Projector> {
    Projector::from_rows(&read_matrix_csv(path)?)
}

/// `index,tvar,M,V` table, one row per candidate.
pub fn scan_to_csv(rows: &[(usize, ProjectionSummary)]) -> String {
    let mut out = String::from("index,tvar,M,V\n");
    for (idx, s) in rows {
        let _ = writeln!(
            out,
            "{idx},{},{},{}",
            format_f64(s.tvar_projected),
            format_f64(s.mean_rel_dist),
            format_f64(s.var_rel_dist)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::haar_sample;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Vec<Vec<f64>>> {
        parse_matrix_csv(text, Path::new("mem.csv"))
    }

    #[test]
    fn header_is_optional() {
        assert_eq!(parse("a,b\n1,2\n3,4\n").unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(parse("1,2\n3,4\n").unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn zeros_give_zero_variance() {
        let rows = parse("0,0\n0,0\n0,0\n").unwrap();
        let x = PointCloud::new(rows).unwrap();
        assert_eq!((x.len(), x.dim()), (3, 2));
        assert_eq!(crate::objectives::total_variance(&x), 0.0);
    }

    #[test]
    fn ragged_and_non_numeric_rows_name_their_line() {
        match parse("1,2\n3,4\n5\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse("x,y\n1,2\n3,abc\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, Some(2))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn frame_csv_round_trip() {
        let q = haar_sample(3, 7, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        write_frame_csv(&q, &path).unwrap();
        assert_eq!(read_frame_csv(&path).unwrap(), q);
    }

    #[test]
    fn frame_json_shape() {
        let q = StiefelFrame::from_rows(vec![vec![0.0, 1.0]]).unwrap();
        let text = to_json_string(&q).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["k"], 1);
        assert_eq!(v["d"], 2);
        assert_eq!(v["rows"][0][1].as_f64(), Some(1.0));
        assert!(text.contains("1.0000000000000000e0"));
    }

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let text = format_f64(v);
            prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), v.to_bits());
            let json = to_json_string(&vec![v]).unwrap();
            let back: Vec<f64> = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back[0].to_bits(), v.to_bits());
        }
    }
}
