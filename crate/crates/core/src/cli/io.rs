use crate::{Error, PointSet, Result};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
}

/// Reads one point per line, comma or whitespace delimited. A first line
/// that does not parse as numbers is taken as a header and skipped.
pub fn parse_points<R: Read>(reader: R) -> Result<PointSet> {
    let reader = BufReader::new(reader);
    let mut dim = 0usize;
    let mut coords = Vec::new();
    let mut first = true;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields(&line).map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("not a number: {e}"),
                })
            }
        };
        first = false;
        if let Some(x) = row.iter().find(|x| !x.is_finite()) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-finite value {x}"),
            });
        }
        if dim == 0 {
            dim = row.len();
        } else if row.len() != dim {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {dim} values, found {}", row.len()),
            });
        }
        coords.extend(row);
    }
    if coords.is_empty() {
        return Err(Error::invalid("input holds no points"));
    }
    PointSet::new(dim, coords)
}

pub fn read_points(path: &Path) -> Result<PointSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_points(file)
}

/// Space-separated rows; values print in their shortest exact form.
pub fn format_points(points: &PointSet) -> String {
    let mut s = String::with_capacity(points.len() * points.dim() * 20);
    for p in points.iter() {
        for (k, x) in p.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x}");
        }
        s.push('\n');
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
