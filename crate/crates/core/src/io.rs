//! CSV ingestion and JSON/CSV emission.
//!
//! Every float is written with 17 significant digits so that values survive
//! a write/read round trip bit for bit. Non-finite values are rejected.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::stats::DataMatrix;

pub const SCHEMA_VERSION: u32 = 1;

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    /// Zero-based position.
    Index(usize),
}

impl FromStr for ResponseColumn {
    type Err = std::convert::Infallible;

    /// Non-negative integers are positions, anything else a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Self::Index(i),
            Err(_) => Self::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ResponseColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Name(n) => write!(f, "{n}"),
            Self::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Formats a finite float with 17 significant digits.
pub fn format_f64(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("cannot emit non-finite value {x}")));
    }
    Ok(format!("{x:.16e}"))
}

fn parse_cell(cell: &str, row: usize, column: usize) -> Result<f64> {
    let t = cell.trim();
    let bad = |message: String| Error::CsvCell { row, column, message };
    if t.is_empty() {
        return Err(bad("missing value".into()));
    }
    let v: f64 = t.parse().map_err(|_| bad(format!("non-numeric cell {t:?}")))?;
    if !v.is_finite() {
        return Err(bad(format!("non-finite cell {t:?}")));
    }
    Ok(v)
}

/// Parses a rectangular numeric CSV. Rows and columns in errors are
/// 1-based and count the header line when there is one.
pub fn parse_csv<R: Read>(reader: R, response: &ResponseColumn, header: bool) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut names: Option<Vec<String>> = None;
    let first_data_row = if header { 2 } else { 1 };
    if header {
        let rec = records
            .next()
            .ok_or_else(|| Error::Degenerate { what: "empty csv".into() })??;
        names = Some(rec.iter().map(|s| s.trim().to_string()).collect());
    }
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut width = names.as_ref().map(|n| n.len());
    for (k, rec) in records.enumerate() {
        let rec = rec?;
        let row = first_data_row + k;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::CsvCell {
                row,
                column: rec.len().min(w) + 1,
                message: format!("ragged row: expected {w} fields, found {}", rec.len()),
            });
        }
        values.push(
            rec.iter()
                .enumerate()
                .map(|(c, cell)| parse_cell(cell, row, c + 1))
                .collect::<Result<_>>()?,
        );
    }
    let width = width.unwrap_or(0);
    if values.is_empty() {
        return Err(Error::Degenerate { what: "csv has no data rows".into() });
    }
    if width < 2 {
        return Err(Error::Degenerate {
            what: "csv needs a response and at least one covariate".into(),
        });
    }
    let y_col = match response {
        ResponseColumn::Index(i) if *i < width => *i,
        ResponseColumn::Index(i) => {
            return Err(Error::Dimension(format!("response column {i} out of range for {width} columns")))
        }
        ResponseColumn::Name(n) => names
            .as_ref()
            .and_then(|h| h.iter().position(|h| h == n))
            .ok_or_else(|| Error::Dimension(format!("response column {n:?} not found in header")))?,
    };
    let n = values.len();
    let p = width - 1;
    let mut x = Array2::zeros((n, p));
    let mut y = Array1::zeros(n);
    for (i, row) in values.iter().enumerate() {
        let mut c = 0;
        for (j, v) in row.iter().enumerate() {
            if j == y_col {
                y[i] = *v;
            } else {
                x[[i, c]] = *v;
                c += 1;
            }
        }
    }
    let col_names: Vec<String> = match names {
        Some(h) => h.into_iter().enumerate().filter(|(j, _)| *j != y_col).map(|(_, s)| s).collect(),
        None => (1..=p).map(|j| format!("x{j}")).collect(),
    };
    DataMatrix::new(x, y)?.with_names(col_names)
}

pub fn ingest_csv(path: impl AsRef<Path>, response: &ResponseColumn, header: bool) -> Result<DataMatrix> {
    parse_csv(File::open(path)?, response, header)
}

/// Writes a header and float rows as CSV.
pub fn write_float_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_f64).collect::<Result<_>>()?;
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a design with the response as the last column, named `y`.
pub fn write_data_csv<W: Write>(out: W, d: &DataMatrix) -> Result<()> {
    let names: Vec<String> = (0..d.p()).map(|j| d.column_name(j)).collect();
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    header.push("y");
    let rows = (0..d.n()).map(|i| {
        let mut r = d.x().row(i).to_vec();
        r.push(d.y()[i]);
        r
    });
    write_float_csv(out, &header, rows)
}

/// serde_json formatter that writes floats with 17 significant digits and
/// refuses NaN and infinities.
#[derive(Debug, Default)]
pub struct PreciseFormatter {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident),*) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
                self.pretty.$name(w)
            }
        )*
    };
    (first: $($name:ident),*) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
                self.pretty.$name(w, first)
            }
        )*
    };
}

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("non-finite value {value} in JSON output")));
        }
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate!(begin_array, end_array, begin_object, end_object, end_array_value, end_object_value, begin_object_value);
    delegate!(first: begin_array_value, begin_object_key);
}

/// Walks a serializable value and fails on the first NaN or infinity.
/// serde_json would otherwise write them as `null`.
mod finite {
    use serde::ser::{self, Serialize};
    use std::fmt;

    #[derive(Debug)]
    pub struct NonFinite(pub String);

    impl fmt::Display for NonFinite {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str(&self.0)
        }
    }

    impl std::error::Error for NonFinite {}

    impl ser::Error for NonFinite {
        fn custom<T: fmt::Display>(msg: T) -> Self {
            NonFinite(msg.to_string())
        }
    }

    type R = Result<(), NonFinite>;

    pub struct Check;

    macro_rules! ok {
        ($($name:ident: $t:ty),*) => {
            $(fn $name(self, _: $t) -> R { Ok(()) })*
        };
    }

    impl ser::Serializer for Check {
        type Ok = ();
        type Error = NonFinite;
        type SerializeSeq = Check;
        type SerializeTuple = Check;
        type SerializeTupleStruct = Check;
        type SerializeTupleVariant = Check;
        type SerializeMap = Check;
        type SerializeStruct = Check;
        type SerializeStructVariant = Check;

        ok!(serialize_bool: bool, serialize_i8: i8, serialize_i16: i16, serialize_i32: i32, serialize_i64: i64,
            serialize_u8: u8, serialize_u16: u16, serialize_u32: u32, serialize_u64: u64, serialize_char: char,
            serialize_str: &str, serialize_bytes: &[u8], serialize_unit_struct: &'static str);

        fn serialize_f32(self, v: f32) -> R {
            self.serialize_f64(v as f64)
        }
        fn serialize_f64(self, v: f64) -> R {
            if v.is_finite() {
                Ok(())
            } else {
                Err(NonFinite(format!("non-finite value {v} in JSON output")))
            }
        }
        fn serialize_none(self) -> R {
            Ok(())
        }
        fn serialize_some<T: ?Sized + Serialize>(self, v: &T) -> R {
            v.serialize(Check)
        }
        fn serialize_unit(self) -> R {
            Ok(())
        }
        fn serialize_unit_variant(self, _: &'static str, _: u32, _: &'static str) -> R {
            Ok(())
        }
        fn serialize_newtype_struct<T: ?Sized + Serialize>(self, _: &'static str, v: &T) -> R {
            v.serialize(Check)
        }
        fn serialize_newtype_variant<T: ?Sized + Serialize>(self, _: &'static str, _: u32, _: &'static str, v: &T) -> R {
            v.serialize(Check)
        }
        fn serialize_seq(self, _: Option<usize>) -> Result<Check, NonFinite> {
            Ok(Check)
        }
        fn serialize_tuple(self, _: usize) -> Result<Check, NonFinite> {
            Ok(Check)
        }
        fn serialize_tuple_struct(self, _: &'static str, _: usize) -> Result<Check, NonFinite> {
            Ok(Check)
        }
        fn serialize_tuple_variant(self, _: &'static str, _: u32, _: &'static str, _: usize) -> Result<Check, NonFinite> {
            Ok(Check)
        }
        fn serialize_map(self, _: Option<usize>) -> Result<Check, NonFinite> {
            Ok(Check)
        }
        fn serialize_struct(self, _: &'static str, _: usize) -> Result<Check, NonFinite> {
            Ok(Check)
        }
        fn serialize_struct_variant(self, _: &'static str, _: u32, _: &'static str, _: usize) -> Result<Check, NonFinite> {
            Ok(Check)
        }
    }

    macro_rules! compound {
        ($($tr:ident :: $m:ident),*) => {
            $(impl ser::$tr for Check {
                type Ok = ();
                type Error = NonFinite;
                fn $m<T: ?Sized + Serialize>(&mut self, v: &T) -> R {
                    v.serialize(Check)
                }
                fn end(self) -> R {
                    Ok(())
                }
            })*
        };
    }

    compound!(SerializeSeq::serialize_element, SerializeTuple::serialize_element,
        SerializeTupleStruct::serialize_field, SerializeTupleVariant::serialize_field);

    impl ser::SerializeMap for Check {
        type Ok = ();
        type Error = NonFinite;
        fn serialize_key<T: ?Sized + Serialize>(&mut self, k: &T) -> R {
            k.serialize(Check)
        }
        fn serialize_value<T: ?Sized + Serialize>(&mut self, v: &T) -> R {
            v.serialize(Check)
        }
        fn end(self) -> R {
            Ok(())
        }
    }

    impl ser::SerializeStruct for Check {
        type Ok = ();
        type Error = NonFinite;
        fn serialize_field<T: ?Sized + Serialize>(&mut self, _: &'static str, v: &T) -> R {
            v.serialize(Check)
        }
        fn end(self) -> R {
            Ok(())
        }
    }

    impl ser::SerializeStructVariant for Check {
        type Ok = ();
        type Error = NonFinite;
        fn serialize_field<T: ?Sized + Serialize>(&mut self, _: &'static str, v: &T) -> R {
            v.serialize(Check)
        }
        fn end(self) -> R {
            Ok(())
        }
    }
}

/// Pretty JSON with 17-digit floats; non-finite values are an error.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    value.serialize(finite::Check).map_err(|e| Error::Domain(e.0))?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// A payload tagged with the schema version and a document kind.
#[derive(Debug, Serialize)]
pub struct Document<'a, T: Serialize> {
    pub schema_version: u32,
    pub kind: &'a str,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn document<'a, T: Serialize>(kind: &'a str, body: &'a T) -> Document<'a, T> {
    Document {
        schema_version: SCHEMA_VERSION,
        kind,
        body,
    }
}

/// Writes to `path`, or to `stdout` when `path` is `None`.
pub fn emit(path: Option<&Path>, stdout: &mut dyn Write, contents: &str) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            f.write_all(contents.as_bytes())?;
            f.flush()?;
        }
        None => stdout.write_all(contents.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn header_and_response_by_name() {
        let csv = "a,b,y\n1,2,3\n4,5,6\n7,8,10\n";
        let d = parse_csv(csv.as_bytes(), &"y".parse().unwrap(), true).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.column_names().unwrap(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.y().to_vec(), vec![3.0, 6.0, 10.0]);
        assert_eq!(d.x().row(2).to_vec(), vec![7.0, 8.0]);
    }

    #[test]
    fn response_by_index_and_synthesized_names() {
        let csv = "3,1,2\n6,4,5\n";
        let d = parse_csv(csv.as_bytes(), &ResponseColumn::Index(0), false).unwrap();
        assert_eq!(d.column_names().unwrap(), &["x1".to_string(), "x2".to_string()]);
        assert_eq!(d.y().to_vec(), vec![3.0, 6.0]);
    }

    #[test]
    fn bad_cells_are_located() {
        let na = "a,b,y\n1,2,3\n4,NA,6\n";
        match parse_csv(na.as_bytes(), &"y".parse().unwrap(), true) {
            Err(Error::CsvCell { row, column, .. }) => assert_eq!((row, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let empty = "1,,3\n";
        assert!(matches!(
            parse_csv(empty.as_bytes(), &ResponseColumn::Index(2), false),
            Err(Error::CsvCell { row: 1, column: 2, .. })
        ));
        let ragged = "a,b,y\n1,2,3\n4,5\n";
        assert!(matches!(
            parse_csv(ragged.as_bytes(), &"y".parse().unwrap(), true),
            Err(Error::CsvCell { row: 3, .. })
        ));
        let missing = "a,b,y\n1,2,3\n";
        assert!(matches!(parse_csv(missing.as_bytes(), &"z".parse().unwrap(), true), Err(Error::Dimension(_))));
    }

    #[test]
    fn json_floats_and_non_finite() {
        let s = to_json_string(&vec![0.1f64, 1.0 / 3.0]).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
        assert!(s.contains("3.3333333333333331e-1"));
        assert!(to_json_string(&vec![f64::NAN]).is_err());
        assert!(to_json_string(&vec![f64::INFINITY]).is_err());
        assert!(format_f64(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn document_carries_schema_version() {
        let body = serde_json::json!({"x": 1});
        let s = to_json_string(&document("demo", &body)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["kind"], "demo");
        assert_eq!(v["x"], 1);
    }

    #[test]
    fn data_round_trip_small() {
        let d = DataMatrix::new(array![[1e-300, -2.5], [3.0, 1e300]], array![0.1, -0.2]).unwrap();
        let mut buf = Vec::new();
        write_data_csv(&mut buf, &d).unwrap();
        let back = parse_csv(buf.as_slice(), &"y".parse().unwrap(), true).unwrap();
        assert_eq!(back.x(), d.x());
        assert_eq!(back.y(), d.y());
    }

    proptest! {
        #[test]
        fn float_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = format_f64(v).unwrap();
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }

        #[test]
        fn csv_round_trip(rows in proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, 3), 1..20)) {
            let n = rows.len();
            let x = Array2::from_shape_fn((n, 2), |(i, j)| rows[i][j]);
            let y = Array1::from_shape_fn(n, |i| rows[i][2]);
            let d = DataMatrix::new(x, y).unwrap();
            let mut buf = Vec::new();
            write_data_csv(&mut buf, &d).unwrap();
            let back = parse_csv(buf.as_slice(), &ResponseColumn::Index(2), true).unwrap();
            for (a, b) in back.x().iter().zip(d.x().iter()) {
                prop_assert!((a - b).abs() <= 1e-15 * b.abs());
            }
            for (a, b) in back.y().iter().zip(d.y().iter()) {
                prop_assert!((a - b).abs() <= 1e-15 * b.abs());
            }
        }
    }
}
