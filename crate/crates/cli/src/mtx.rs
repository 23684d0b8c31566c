//! MatrixMarket reading (array and coordinate) and writing (array, full precision).

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::CliError;
use crate::fsutil::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn bad(what: impl Into<String>) -> CliError {
    CliError::Format(what.into())
}

/// Parses a real (or integer) general/symmetric MatrixMarket document.
pub fn parse(text: &str) -> Result<DMatrix<f64>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty MatrixMarket file"))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(bad(format!("bad MatrixMarket header '{header}'")));
    }
    let coordinate = match fields[2].as_str() {
        "array" => false,
        "coordinate" => true,
        other => return Err(bad(format!("unsupported format '{other}'"))),
    };
    if fields[3] != "real" && fields[3] != "integer" && fields[3] != "double" {
        return Err(bad(format!("unsupported field '{}'", fields[3])));
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(bad(format!("unsupported symmetry '{other}'"))),
    };
    let mut data = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size_line = data.next().ok_or_else(|| bad("missing size line"))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad(format!("bad size line '{size_line}'"))))
        .collect::<Result<_, _>>()?;
    let number = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number '{s}'")));

    if coordinate {
        let &[rows, cols, nnz] = sizes.as_slice() else {
            return Err(bad(format!("bad size line '{size_line}'")));
        };
        let mut m = DMatrix::zeros(rows, cols);
        let mut count = 0;
        for line in data {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad(format!("bad entry '{line}'")));
            }
            let i: usize = parts[0].parse().map_err(|_| bad(format!("bad index in '{line}'")))?;
            let j: usize = parts[1].parse().map_err(|_| bad(format!("bad index in '{line}'")))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(bad(format!("index out of range in '{line}'")));
            }
            let v = number(parts[2])?;
            m[(i - 1, j - 1)] += v;
            match symmetry {
                Symmetry::Symmetric if i != j => m[(j - 1, i - 1)] += v,
                Symmetry::SkewSymmetric if i != j => m[(j - 1, i - 1)] -= v,
                _ => {}
            }
            count += 1;
        }
        if count != nnz {
            return Err(bad(format!("expected {nnz} entries, found {count}")));
        }
        Ok(m)
    } else {
        let &[rows, cols] = sizes.as_slice() else {
            return Err(bad(format!("bad size line '{size_line}'")));
        };
        let values: Vec<f64> = data.flat_map(str::split_whitespace).map(number).collect::<Result<_, _>>()?;
        let mut m = DMatrix::zeros(rows, cols);
        match symmetry {
            Symmetry::General => {
                if values.len() != rows * cols {
                    return Err(bad(format!("expected {} values, found {}", rows * cols, values.len())));
                }
                m.copy_from_slice(&values);
            }
            Symmetry::Symmetric | Symmetry::SkewSymmetric => {
                // lower triangle (strict for skew), column by column
                let skew = symmetry == Symmetry::SkewSymmetric;
                let mut it = values.into_iter();
                for j in 0..cols {
                    for i in (if skew { j + 1 } else { j })..rows {
                        let v = it.next().ok_or_else(|| bad("too few values"))?;
                        m[(i, j)] = v;
                        m[(j, i)] = if skew { -v } else { v };
                    }
                }
                if it.next().is_some() {
                    return Err(bad("too many values"));
                }
            }
        }
        Ok(m)
    }
}

/// Dense array format with 17 significant digits.
pub fn format(m: &DMatrix<f64>) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for v in m.iter() {
        out.push_str(&format!("{v:.16e}\n"));
    }
    out
}

pub fn read(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text).map_err(|e| match e {
        CliError::Format(msg) => CliError::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    write_atomic(path, format(m).as_bytes())
}
