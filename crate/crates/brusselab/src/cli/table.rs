//! Result tables and their CSV serialization.
//!
//! Files are RFC-4180-style CSV preceded by `#`-prefixed metadata lines
//! that record the full effective configuration, the seed, a config hash,
//! and the build version — enough to re-run the experiment exactly. Floats
//! carry 17 significant digits so every value round-trips to the identical
//! double.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::CliError;

/// One table cell; integers and floats serialize differently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{}", fmt_g17(*v)),
        }
    }
}

/// 17-significant-digit decimal/scientific formatting; round-trip exact.
///
/// Decimal for exponents in `[-4, 17)` (e.g. `0.1` prints as
/// `0.10000000000000001`), `{:.16e}` scientific outside that range.
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        sci
    }
}

/// Rectangular numeric table plus the metadata preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Emitted as `# key = value` lines before the header.
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: Vec<&'static str>, metadata: Vec<(String, String)>) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
            metadata,
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "ragged table row");
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Write atomically: temp file in the target directory, then rename.
    pub fn write_csv(&self, path: &Path) -> Result<PathBuf, CliError> {
        let io_err = |source: std::io::Error| CliError::Io {
            path: path.to_path_buf(),
            source: source.to_string(),
        };
        let tmp = path.with_extension("csv.tmp");
        {
            let mut f = fs::File::create(&tmp).map_err(io_err)?;
            f.write_all(self.render().as_bytes()).map_err(io_err)?;
            f.sync_all().map_err(io_err)?;
        }
        fs::rename(&tmp, path).map_err(io_err)?;
        Ok(path.to_path_buf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_matches_17_digit_contract() {
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(0.0), "0");
        assert_eq!(fmt_g17(1.0), "1.0000000000000000");
        assert_eq!(fmt_g17(-0.5), "-0.50000000000000000");
        assert!(fmt_g17(2.5e-7).contains('e'));
        assert!(fmt_g17(1e20).contains('e'));
    }

    #[test]
    fn fmt_round_trips_exactly() {
        let probes = [
            0.1,
            0.005,
            2.0 / 3.0,
            674.4921875,
            std::f64::consts::PI,
            -1.8,
            5e-5,
            1.2345678901234567e18,
            f64::MIN_POSITIVE,
        ];
        for &v in &probes {
            let back: f64 = fmt_g17(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} printed as {}", fmt_g17(v));
        }
    }

    #[test]
    fn empty_table_is_metadata_and_header_only() {
        let t = ResultTable::new(
            vec!["a", "b"],
            vec![("seed".into(), "42".into())],
        );
        let text = t.render();
        assert_eq!(text, "# seed = 42\na,b\n");
    }

    #[test]
    fn write_is_atomic_and_readable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = ResultTable::new(vec!["x", "n"], vec![("seed".into(), "7".into())]);
        t.push_row(vec![Cell::Float(0.1), Cell::Int(3)]);
        t.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# seed = 7\n"));
        assert!(text.contains("0.10000000000000001,3\n"));
        assert!(!dir.path().join("t.csv.tmp").exists());
    }
}
