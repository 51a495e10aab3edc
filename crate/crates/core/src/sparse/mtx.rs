//! Matrix Market exchange format.
//!
//! Reading supports `matrix coordinate {real|integer|pattern}
//! {general|symmetric}` (sparse) and `matrix array real general` (dense).
//! Writers emit 1-based indices with values in shortest round-trip form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{CscMatrix, DenseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Lines<R> {
    inner: R,
    line_no: usize,
    buf: String,
    name: std::path::PathBuf,
}

impl<R: BufRead> Lines<R> {
    fn new(inner: R, name: &Path) -> Self {
        Lines {
            inner,
            line_no: 0,
            buf: String::new(),
            name: name.to_path_buf(),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.name.clone(),
            line: self.line_no,
            msg: msg.into(),
        }
    }

    fn next_raw(&mut self) -> Result<Option<String>> {
        self.buf.clear();
        let read = self
            .inner
            .read_line(&mut self.buf)
            .map_err(|e| Error::io(&self.name, e))?;
        if read == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        Ok(Some(self.buf.trim().to_string()))
    }

    /// Next line that is neither blank nor a `%` comment.
    fn next_data(&mut self) -> Result<Option<String>> {
        loop {
            match self.next_raw()? {
                None => return Ok(None),
                Some(l) if l.is_empty() || l.starts_with('%') => continue,
                Some(l) => return Ok(Some(l)),
            }
        }
    }
}

fn parse_num<T: std::str::FromStr, R: BufRead>(lines: &Lines<R>, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| lines.err(format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| lines.err(format!("cannot parse {what} from {tok:?}")))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Reads a sparse coordinate file into canonical CSC: entries sorted,
/// duplicates summed, symmetric storage expanded, pattern entries set to
/// 1.0. Empty rows and columns are kept.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CscMatrix> {
    let path = path.as_ref();
    parse_matrix_market(open(path)?, path)
}

pub fn parse_matrix_market<R: BufRead>(reader: R, name: &Path) -> Result<CscMatrix> {
    let mut lines = Lines::new(reader, name);
    let header = match lines.next_raw()? {
        Some(h) => h.to_ascii_lowercase(),
        None => return Err(lines.err("empty file")),
    };
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(lines.err(format!("malformed header {header:?}")));
    }
    if tokens[2] != "coordinate" {
        return Err(lines.err(format!("expected coordinate format, found {:?}", tokens[2])));
    }
    let field = match tokens[3] {
        "real" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(lines.err(format!("unsupported field {other:?}"))),
    };
    let symmetry = match tokens[4] {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(lines.err(format!("unsupported symmetry {other:?}"))),
    };

    let size = lines.next_data()?.ok_or_else(|| lines.err("missing size line"))?;
    let mut it = size.split_whitespace();
    let m: usize = parse_num(&lines, it.next(), "row count")?;
    let n: usize = parse_num(&lines, it.next(), "column count")?;
    let nnz: usize = parse_num(&lines, it.next(), "entry count")?;
    if it.next().is_some() {
        return Err(lines.err("trailing tokens on size line"));
    }
    if symmetry == Symmetry::Symmetric && m != n {
        return Err(lines.err("symmetric matrix must be square"));
    }

    let mut triplets = Vec::with_capacity(if symmetry == Symmetry::Symmetric { 2 * nnz } else { nnz });
    for _ in 0..nnz {
        let line = lines
            .next_data()?
            .ok_or_else(|| lines.err(format!("expected {nnz} entries, file ended early")))?;
        let mut it = line.split_whitespace();
        let i: usize = parse_num(&lines, it.next(), "row index")?;
        let j: usize = parse_num(&lines, it.next(), "column index")?;
        if i == 0 || i > m || j == 0 || j > n {
            return Err(lines.err(format!("entry ({i}, {j}) outside declared {m}x{n}")));
        }
        let v = match field {
            Field::Pattern => 1.0,
            Field::Real => parse_num::<f64, _>(&lines, it.next(), "value")?,
            Field::Integer => parse_num::<i64, _>(&lines, it.next(), "integer value")? as f64,
        };
        if !v.is_finite() {
            return Err(lines.err("non-finite value"));
        }
        if it.next().is_some() {
            return Err(lines.err("trailing tokens on entry line"));
        }
        triplets.push((i - 1, j - 1, v));
        if symmetry == Symmetry::Symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    if lines.next_data()?.is_some() {
        return Err(lines.err(format!("more than the declared {nnz} entries")));
    }
    CscMatrix::from_triplets(m, n, &triplets)
}

/// Writes `%%MatrixMarket matrix coordinate real general`, entries in
/// column-major order.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &CscMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_coordinate(&mut w, a).map_err(|e| Error::io(path, e))
}

pub fn write_coordinate<W: Write>(w: &mut W, a: &CscMatrix) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    w.flush()
}

/// Writes a dense matrix in `array real general` (column-major) form.
pub fn write_dense_matrix_market(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_array(&mut w, a).map_err(|e| Error::io(path, e))
}

pub fn write_array<W: Write>(w: &mut W, a: &DenseMatrix) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for v in a.values() {
        writeln!(w, "{v:e}")?;
    }
    w.flush()
}

pub fn read_dense_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let mut lines = Lines::new(open(path)?, path);
    let header = match lines.next_raw()? {
        Some(h) => h.to_ascii_lowercase(),
        None => return Err(lines.err("empty file")),
    };
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens != ["%%matrixmarket", "matrix", "array", "real", "general"] {
        return Err(lines.err(format!("expected a real general array header, found {header:?}")));
    }
    let size = lines.next_data()?.ok_or_else(|| lines.err("missing size line"))?;
    let mut it = size.split_whitespace();
    let m: usize = parse_num(&lines, it.next(), "row count")?;
    let n: usize = parse_num(&lines, it.next(), "column count")?;
    let mut values = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        let line = lines.next_data()?.ok_or_else(|| lines.err("file ended early"))?;
        values.push(parse_num(&lines, Some(line.as_str()), "value")?);
    }
    Ok(DenseMatrix::from_col_major(m, n, values))
}
