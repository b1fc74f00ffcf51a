use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::data::{Dataset, FeatureSample};
use crate::error::{Error, Result};
use crate::symlin::Matrix;

const MAGIC: &[u8; 5] = b"SPDF1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    F64Bin,
}

impl FromStr for FeatureFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FeatureFormat::Csv),
            "f64bin" => Ok(FeatureFormat::F64Bin),
            _ => Err(Error::Config(format!("unknown feature format `{s}` (expected csv or f64bin)"))),
        }
    }
}

impl FeatureFormat {
    /// Guesses the format from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("f64bin") => FeatureFormat::F64Bin,
            _ => FeatureFormat::Csv,
        }
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub fn save_features(path: &Path, dataset: &Dataset, format: FeatureFormat) -> Result<()> {
    let bytes = match format {
        FeatureFormat::Csv => encode_csv(dataset).into_bytes(),
        FeatureFormat::F64Bin => encode_bin(dataset)?,
    };
    write_atomic(path, &bytes)
}

pub fn load_features(path: &Path, format: FeatureFormat) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    match format {
        FeatureFormat::Csv => {
            let text = String::from_utf8(bytes)
                .map_err(|e| parse_err("byte 0", format!("file is not UTF-8: {e}")))?;
            decode_csv(&text)
        }
        FeatureFormat::F64Bin => decode_bin(&bytes),
    }
}

fn parse_err(location: impl Into<String>, detail: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), detail: detail.into() }
}

pub fn encode_csv(dataset: &Dataset) -> String {
    let mut out = format!("{},{},{}\n", dataset.d, dataset.n, dataset.classes);
    for s in &dataset.samples {
        write!(out, "{}", s.label).expect("writing to a string");
        for v in s.x.as_slice() {
            // `{:?}` prints the shortest round-tripping representation
            write!(out, ",{v:?}").expect("writing to a string");
        }
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err("line 1", "empty file"))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|f| f.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err("line 1", format!("header must be `d,N,C`: {e}")))?;
    let [d, n, c] = dims[..] else {
        return Err(parse_err("line 1", format!("header must have three fields, found {}", dims.len())));
    };
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let loc = format!("line {}", idx + 1);
        let mut fields = line.split(',');
        let label = fields
            .next()
            .and_then(|f| f.trim().parse::<usize>().ok())
            .ok_or_else(|| parse_err(&loc, "missing or invalid label"))?;
        let values = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(&loc, format!("invalid value: {e}")))?;
        if values.len() != d * n {
            return Err(parse_err(&loc, format!("expected {} values, found {}", d * n, values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(parse_err(&loc, format!("non-finite value {v}")));
        }
        if label >= c {
            return Err(parse_err(&loc, format!("label {label} out of range for {c} classes")));
        }
        samples.push(FeatureSample { x: Matrix::new(d, n, values)?, label });
    }
    Dataset::new(samples, d, n, c)
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Config(format!("{what} {v} does not fit the binary format")))
}

pub fn encode_bin(dataset: &Dataset) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(21 + dataset.len() * (4 + 8 * dataset.d * dataset.n));
    out.extend_from_slice(MAGIC);
    for (v, what) in [(dataset.d, "d"), (dataset.n, "N"), (dataset.classes, "C"), (dataset.len(), "count")] {
        out.extend_from_slice(&to_u32(v, what)?.to_le_bytes());
    }
    for s in &dataset.samples {
        out.extend_from_slice(&to_u32(s.label, "label")?.to_le_bytes());
        for v in s.x.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, len: usize, what: &str) -> Result<&[u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(parse_err(
                format!("byte {}", self.pos),
                format!("truncated file while reading {what} ({} bytes left, {len} needed)", self.bytes.len() - self.pos),
            ));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("four bytes")) as usize)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("eight bytes")))
    }
}

pub fn decode_bin(bytes: &[u8]) -> Result<Dataset> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(5, "magic")? != MAGIC {
        return Err(parse_err("byte 0", "missing SPDF1 magic"));
    }
    let (d, n, c, count) = (cur.u32("d")?, cur.u32("N")?, cur.u32("C")?, cur.u32("count")?);
    let mut samples = Vec::with_capacity(count.min(1 << 20));
    for i in 0..count {
        let offset = cur.pos;
        let label = cur.u32("label")?;
        if label >= c {
            return Err(parse_err(format!("byte {offset}"), format!("sample {i} label {label} out of range")));
        }
        let mut values = Vec::with_capacity(d * n);
        for _ in 0..d * n {
            let v = cur.f64("value")?;
            if !v.is_finite() {
                return Err(parse_err(format!("byte {}", cur.pos - 8), format!("non-finite value {v}")));
            }
            values.push(v);
        }
        samples.push(FeatureSample { x: Matrix::new(d, n, values)?, label });
    }
    if cur.pos != bytes.len() {
        return Err(parse_err(format!("byte {}", cur.pos), "trailing bytes after the last sample"));
    }
    Dataset::new(samples, d, n, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcp::data::synth_dataset;

    #[test]
    fn round_trips_in_both_formats() {
        let ds = synth_dataset(3, 3, 4, 2, 1.0, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [("a.csv", FeatureFormat::Csv), ("a.bin", FeatureFormat::F64Bin)] {
            let path = dir.path().join(name);
            save_features(&path, &ds, fmt).unwrap();
            assert_eq!(load_features(&path, fmt).unwrap(), ds);
            assert_eq!(FeatureFormat::from_path(&path), fmt);
        }
    }

    #[test]
    fn truncated_binary_fails_closed() {
        let ds = synth_dataset(2, 2, 3, 2, 1.0, 2).unwrap();
        let bytes = encode_bin(&ds).unwrap();
        let err = decode_bin(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = decode_csv("2,2,2\n0,1,2,3,4\n1,1,2,3\n").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert_eq!(location, "line 3"),
            other => panic!("unexpected {other}"),
        }
        assert!(decode_csv("2,2\n").is_err());
        assert!(decode_csv("1,2,2\n0,1,NaN\n").is_err());
        assert!(decode_csv("1,2,2\n5,1,2\n").is_err());
    }

    #[test]
    fn bad_magic_rejected() {
        assert!(matches!(decode_bin(b"NOPE!\0\0\0\0"), Err(Error::Parse { .. })));
    }
}
