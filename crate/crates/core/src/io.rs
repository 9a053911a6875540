//! File formats.
//!
//! * Bi-adjacency: Matrix Market `coordinate pattern general` (1-based) or a
//!   tab-separated edge list `row<TAB>col` (1-based, optional `# n_r n_c`
//!   header line).
//! * Dense matrices: CSV, one row per line, `%.17g`.
//! * Column labels: one 1-based integer per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{BiAdjacency, ColumnLabels};

pub const MM_HEADER: &str = "%%MatrixMarket matrix coordinate pattern general";

/// Format like C's `printf("%.{precision}g", v)`.
pub fn fmt_g(v: f64, precision: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let p = precision.max(1);
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    // exponent after rounding to p significant digits
    let sci = format!("{:.*e}", p - 1, v);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_matrix_market<W: Write>(a: &BiAdjacency, mut w: W) -> Result<()> {
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j) in a.edges() {
        writeln!(w, "{} {}", i + 1, j + 1)?;
    }
    Ok(())
}

/// Read a coordinate Matrix Market file. Pattern, integer and real fields are
/// accepted; entries with a nonzero value become edges.
pub fn read_matrix_market<R: Read>(r: R) -> Result<BiAdjacency> {
    let mut lines = BufReader::new(r).lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("not a Matrix Market header: {header}"),
        });
    }
    if fields[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            msg: "only coordinate format is supported".into(),
        });
    }
    let pattern = match fields[3].as_str() {
        "pattern" => true,
        "integer" | "real" => false,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported field '{other}'"),
            })
        }
    };
    if fields[4] != "general" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported symmetry '{}'", fields[4]),
        });
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let parse = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad integer '{s}'"),
            })
        };
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "size line needs 3 integers".into(),
                    });
                }
                size = Some((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?));
            }
            Some((nr, nc, _)) => {
                if parts.len() < 2 || (!pattern && parts.len() < 3) {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "truncated entry".into(),
                    });
                }
                let (i, j) = (parse(parts[0])?, parse(parts[1])?);
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("entry ({i},{j}) out of bounds"),
                    });
                }
                let keep = pattern
                    || parts[2].parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad value '{}'", parts[2]),
                    })? != 0.0;
                if keep {
                    edges.push((i - 1, j - 1));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    if !pattern && edges.len() > nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("more entries than the declared {nnz}"),
        });
    }
    BiAdjacency::from_edges(nr, nc, &edges)
}

pub fn write_edge_list<W: Write>(a: &BiAdjacency, mut w: W) -> Result<()> {
    writeln!(w, "# {}\t{}", a.nrows(), a.ncols())?;
    for (i, j) in a.edges() {
        writeln!(w, "{}\t{}", i + 1, j + 1)?;
    }
    Ok(())
}

/// Read a 1-based edge list. Without a `# n_r n_c` header the shape is the
/// largest index seen.
pub fn read_edge_list<R: Read>(r: R) -> Result<BiAdjacency> {
    let mut shape: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad integer '{s}'"),
            })
        };
        if let Some(rest) = t.strip_prefix('#') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if shape.is_none() && edges.is_empty() && parts.len() == 2 {
                if let (Ok(a), Ok(b)) = (parts[0].parse(), parts[1].parse()) {
                    shape = Some((a, b));
                }
            }
            continue;
        }
        let parts: Vec<&str> = t.split('\t').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: "expected row<TAB>col".into(),
            });
        }
        let (i, j) = (parse(parts[0])?, parse(parts[1])?);
        if i == 0 || j == 0 {
            return Err(Error::Parse {
                line: lineno,
                msg: "indices are 1-based".into(),
            });
        }
        edges.push((i - 1, j - 1));
    }
    let (nr, nc) = shape.unwrap_or_else(|| {
        edges
            .iter()
            .fold((0, 0), |(r, c), (i, j)| (r.max(i + 1), c.max(j + 1)))
    });
    BiAdjacency::from_edges(nr, nc, &edges)
}

pub fn write_csv<W: Write>(m: &DMatrix<f64>, mut w: W) -> Result<()> {
    for i in 0..m.nrows() {
        let line: Vec<String> = m.row(i).iter().map(|v| fmt_g(*v, 17)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad number '{s}'"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {} fields", first.len()),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_labels<W: Write>(labels: &ColumnLabels, mut w: W) -> Result<()> {
    for l in labels.labels() {
        writeln!(w, "{}", l + 1)?;
    }
    Ok(())
}

/// Read 1-based labels. `k` defaults to the largest label.
pub fn read_labels<R: Read>(r: R, k: Option<usize>) -> Result<ColumnLabels> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse::<usize>().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("bad label '{t}'"),
        })?);
    }
    let k = k.unwrap_or_else(|| out.iter().copied().max().unwrap_or(1));
    ColumnLabels::from_one_based(&out, k)
}

/// Adjacency-like input chosen by file extension.
#[derive(Debug, Clone)]
pub enum MatrixFile {
    Sparse(BiAdjacency),
    Dense(DMatrix<f64>),
}

pub fn read_matrix_file(path: &Path) -> Result<MatrixFile> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let f = File::open(path)?;
    match ext.as_str() {
        "mtx" => Ok(MatrixFile::Sparse(read_matrix_market(f)?)),
        "tsv" => Ok(MatrixFile::Sparse(read_edge_list(f)?)),
        "csv" => Ok(MatrixFile::Dense(read_csv(f)?)),
        _ => Err(Error::Parameter(format!(
            "cannot infer matrix format of {}; use .mtx, .tsv or .csv",
            path.display()
        ))),
    }
}

/// Write an adjacency matrix as `.mtx` or `.tsv` according to the extension.
pub fn write_adjacency_file(a: &BiAdjacency, path: &Path) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let mut w = BufWriter::new(File::create(path)?);
    match ext.as_str() {
        "mtx" => write_matrix_market(a, &mut w)?,
        "tsv" => write_edge_list(a, &mut w)?,
        _ => {
            return Err(Error::Parameter(format!(
                "adjacency output {} must end in .mtx or .tsv",
                path.display()
            )))
        }
    }
    w.flush()?;
    Ok(())
}
