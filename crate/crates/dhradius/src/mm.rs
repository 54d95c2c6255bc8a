//! Matrix Market reader and writer.
//!
//! Both `array` and `coordinate` layouts are read, with `real`, `integer`,
//! `complex` and `pattern` fields and the `general`, `symmetric`,
//! `skew-symmetric` and `hermitian` qualifiers. Array files become dense
//! matrices, coordinate files sparse ones.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use dhradius_core::linalg::{CMat, CscMatrix, C64};
use dhradius_core::Matrix;

#[derive(Debug, thiserror::Error)]
pub enum MmError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Complex,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

impl Symmetry {
    /// Value stored at `(j, i)` when `(i, j)` holds `v`.
    fn mirror(self, v: C64) -> C64 {
        match self {
            Symmetry::General | Symmetry::Symmetric => v,
            Symmetry::SkewSymmetric => -v,
            Symmetry::Hermitian => v.conj(),
        }
    }
}

struct Header {
    layout: Layout,
    field: Field,
    symmetry: Symmetry,
}

fn parse_header(line: &str) -> Result<Header, String> {
    let words: Vec<String> = line.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" {
        return Err("expected `%%MatrixMarket matrix <layout> <field> <symmetry>`".into());
    }
    if words[1] != "matrix" {
        return Err(format!("unsupported object `{}`", words[1]));
    }
    let layout = match words[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        w => return Err(format!("unknown layout `{w}`")),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        "pattern" => Field::Pattern,
        w => return Err(format!("unknown field `{w}`")),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        w => return Err(format!("unknown symmetry `{w}`")),
    };
    if layout == Layout::Array && field == Field::Pattern {
        return Err("pattern field requires coordinate layout".into());
    }
    if symmetry == Symmetry::Hermitian && field != Field::Complex {
        return Err("hermitian qualifier requires complex field".into());
    }
    Ok(Header {
        layout,
        field,
        symmetry,
    })
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T, String> {
    let tok = tok.ok_or_else(|| format!("missing {what}"))?;
    tok.parse().map_err(|_| format!("cannot parse {what} `{tok}`"))
}

fn parse_value<'a>(field: Field, toks: &mut impl Iterator<Item = &'a str>) -> Result<C64, String> {
    match field {
        Field::Pattern => Ok(C64::new(1.0, 0.0)),
        Field::Real | Field::Integer => Ok(C64::new(parse_num(toks.next(), "value")?, 0.0)),
        Field::Complex => {
            let re = parse_num(toks.next(), "real part")?;
            let im = parse_num(toks.next(), "imaginary part")?;
            Ok(C64::new(re, im))
        }
    }
}

/// Parses Matrix Market text; `path` only labels errors.
pub fn parse_matrix_market<R: Read>(reader: R, path: &Path) -> Result<Matrix, MmError> {
    let err = |line: usize, msg: String| MmError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = Vec::new();
    for (i, l) in BufReader::new(reader).lines().enumerate() {
        let l = l.map_err(|source| MmError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        lines.push((i + 1, l));
    }
    let (no, first) = lines.first().ok_or_else(|| err(1, "empty file".into()))?;
    let header = parse_header(first).map_err(|m| err(*no, m))?;
    // data lines: comments and blanks skipped
    let mut data = lines[1..].iter().filter_map(|(no, l)| {
        let t = l.trim();
        (!t.is_empty() && !t.starts_with('%')).then_some((*no, t))
    });

    let (size_no, size_line) = data.next().ok_or_else(|| err(no + 1, "missing size line".into()))?;
    let mut toks = size_line.split_whitespace();
    let rows: usize = parse_num(toks.next(), "row count").map_err(|m| err(size_no, m))?;
    let cols: usize = parse_num(toks.next(), "column count").map_err(|m| err(size_no, m))?;
    let nnz: usize = match header.layout {
        Layout::Coordinate => parse_num(toks.next(), "entry count").map_err(|m| err(size_no, m))?,
        Layout::Array => 0,
    };
    if toks.next().is_some() {
        return Err(err(size_no, "trailing tokens on size line".into()));
    }
    if header.symmetry != Symmetry::General && rows != cols {
        return Err(err(
            size_no,
            format!("{rows}×{cols} matrix cannot be {:?}", header.symmetry),
        ));
    }

    let mut last = size_no;
    match header.layout {
        Layout::Array => {
            let mut a = CMat::zeros(rows, cols);
            // column-major; symmetric variants store the lower triangle
            let positions: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| {
                    let start = match header.symmetry {
                        Symmetry::General => 0,
                        Symmetry::SkewSymmetric => j + 1,
                        _ => j,
                    };
                    (start..rows).map(move |i| (i, j))
                })
                .collect();
            for &(i, j) in &positions {
                let (no, line) = data
                    .next()
                    .ok_or_else(|| err(last + 1, format!("expected {} values, file ended", positions.len())))?;
                last = no;
                let mut toks = line.split_whitespace();
                let v = parse_value(header.field, &mut toks).map_err(|m| err(no, m))?;
                if toks.next().is_some() {
                    return Err(err(no, "trailing tokens after value".into()));
                }
                if i == j && header.symmetry == Symmetry::Hermitian && v.im != 0.0 {
                    return Err(err(no, "hermitian diagonal entry with nonzero imaginary part".into()));
                }
                a[(i, j)] = v;
                if i != j && header.symmetry != Symmetry::General {
                    a[(j, i)] = header.symmetry.mirror(v);
                }
            }
            if let Some(extra) = data.next() {
                return Err(err(extra.0, "more values than the size line allows".into()));
            }
            Ok(Matrix::Dense(a))
        }
        Layout::Coordinate => {
            let mut triplets = Vec::with_capacity(nnz * if header.symmetry == Symmetry::General { 1 } else { 2 });
            for k in 0..nnz {
                let (no, line) = data
                    .next()
                    .ok_or_else(|| err(last + 1, format!("expected {nnz} entries, found {k}")))?;
                last = no;
                let mut toks = line.split_whitespace();
                let i: usize = parse_num(toks.next(), "row index").map_err(|m| err(no, m))?;
                let j: usize = parse_num(toks.next(), "column index").map_err(|m| err(no, m))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(err(no, format!("index ({i}, {j}) outside {rows}×{cols}")));
                }
                let v = parse_value(header.field, &mut toks).map_err(|m| err(no, m))?;
                if toks.next().is_some() {
                    return Err(err(no, "trailing tokens after entry".into()));
                }
                let (i, j) = (i - 1, j - 1);
                match header.symmetry {
                    Symmetry::General => {}
                    _ if i < j => return Err(err(no, format!("entry ({}, {}) above the diagonal", i + 1, j + 1))),
                    Symmetry::SkewSymmetric if i == j => {
                        return Err(err(no, "skew-symmetric file with a diagonal entry".into()));
                    }
                    Symmetry::Hermitian if i == j && v.im != 0.0 => {
                        return Err(err(no, "hermitian diagonal entry with nonzero imaginary part".into()));
                    }
                    _ => {}
                }
                triplets.push((i, j, v));
                if i != j && header.symmetry != Symmetry::General {
                    triplets.push((j, i, header.symmetry.mirror(v)));
                }
            }
            if let Some(extra) = data.next() {
                return Err(err(extra.0, "more entries than the size line announces".into()));
            }
            Ok(Matrix::Sparse(CscMatrix::from_triplets(rows, cols, triplets)))
        }
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<Matrix, MmError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| MmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix_market(file, path)
}

fn push_value(out: &mut String, v: C64, complex: bool) {
    // `{:?}` prints the shortest representation that parses back exactly
    if complex {
        let _ = write!(out, "{:?} {:?}", v.re, v.im);
    } else {
        let _ = write!(out, "{:?}", v.re);
    }
}

/// Matrix Market text of `m`: `array` for dense, `coordinate` for sparse
/// storage; `real` when every imaginary part is zero, `complex` otherwise.
pub fn format_matrix_market(m: &Matrix) -> String {
    let complex = !m.is_real();
    let field = if complex { "complex" } else { "real" };
    let mut out = String::new();
    match m {
        Matrix::Dense(a) => {
            let _ = writeln!(out, "%%MatrixMarket matrix array {field} general");
            let _ = writeln!(out, "{} {}", a.nrows(), a.ncols());
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    push_value(&mut out, a[(i, j)], complex);
                    out.push('\n');
                }
            }
        }
        Matrix::Sparse(s) => {
            let _ = writeln!(out, "%%MatrixMarket matrix coordinate {field} general");
            let _ = writeln!(out, "{} {} {}", s.nrows(), s.ncols(), s.nnz());
            for (i, j, v) in s.triplets() {
                let _ = write!(out, "{} {} ", i + 1, j + 1);
                push_value(&mut out, v, complex);
                out.push('\n');
            }
        }
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &Matrix) -> Result<(), MmError> {
    let path = path.as_ref();
    fs::write(path, format_matrix_market(m)).map_err(|source| MmError::Io {
        path: path.to_path_buf(),
        source,
    })
}
