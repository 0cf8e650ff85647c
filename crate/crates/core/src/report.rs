//! File formats: RFC-4180 CSV rows, mask files, and field dumps.
//!
//! Mask file grammar (shared by field dumps):
//!
//! ```text
//! nx ny h origin_x origin_y      <- single whitespace-separated header line
//! 0 1 1 0 ...                    <- ny rows of nx 0/1 flags, row j = 0 first
//! ```
//!
//! A masked field dump appends one value per line for every inside node in
//! row-major order. Radial dumps use the header `radial dim n rho` followed
//! by one value per interior node.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{MaskedGrid, RadialGrid, Shape};

/// Shortest round-trip decimal rendering; deterministic for identical bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Quote a CSV field per RFC 4180 when it contains a comma, quote or newline.
pub fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn csv_row(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_escape(f))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_mask_file(path: &Path, shape: &Shape) -> Result<()> {
    let Shape::Mask {
        nx,
        ny,
        h,
        origin,
        inside,
    } = shape
    else {
        return Err(Error::invalid("shape", "only rasterized shapes can be written"));
    };
    let mut out = String::new();
    writeln!(out, "{nx} {ny} {} {} {}", fmt_f64(*h), fmt_f64(origin[0]), fmt_f64(origin[1]))
        .expect("string write");
    for j in 0..*ny {
        let row: Vec<&str> = (0..*nx)
            .map(|i| if inside[j * nx + i] { "1" } else { "0" })
            .collect();
        writeln!(out, "{}", row.join(" ")).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_mask_file(path: &Path) -> Result<Shape> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::Config(format!("{}: empty mask file", path.display())));
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(Error::Config(format!(
            "{}: header must be `nx ny h ox oy`",
            path.display()
        )));
    }
    let nx: usize = fields[0]
        .parse()
        .map_err(|_| Error::Config(format!("{}: bad nx", path.display())))?;
    let ny: usize = fields[1]
        .parse()
        .map_err(|_| Error::Config(format!("{}: bad ny", path.display())))?;
    let h: f64 = fields[2]
        .parse()
        .map_err(|_| Error::Config(format!("{}: bad h", path.display())))?;
    let ox: f64 = fields[3]
        .parse()
        .map_err(|_| Error::Config(format!("{}: bad origin", path.display())))?;
    let oy: f64 = fields[4]
        .parse()
        .map_err(|_| Error::Config(format!("{}: bad origin", path.display())))?;
    let mut inside = vec![false; nx * ny];
    for j in 0..ny {
        let Some((line_no, row)) = lines.next() else {
            return Err(Error::Config(format!(
                "{}: expected {ny} mask rows, got {j}",
                path.display()
            )));
        };
        let flags: Vec<&str> = row.split_whitespace().collect();
        if flags.len() != nx {
            return Err(Error::Config(format!(
                "{}: line {}: expected {nx} flags, got {}",
                path.display(),
                line_no + 1,
                flags.len()
            )));
        }
        for (i, flag) in flags.iter().enumerate() {
            inside[j * nx + i] = match *flag {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Config(format!(
                        "{}: line {}: mask flags must be 0 or 1, got `{other}`",
                        path.display(),
                        line_no + 1
                    )))
                }
            };
        }
    }
    Ok(Shape::Mask {
        nx,
        ny,
        h,
        origin: [ox, oy],
        inside,
    })
}

/// Mask header + rows, then one value per inside node in row-major order.
pub fn write_masked_field(path: &Path, grid: &MaskedGrid, u: &[f64]) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: u.len(),
        });
    }
    let mut out = String::new();
    let origin = grid.origin();
    writeln!(
        out,
        "{} {} {} {} {}",
        grid.nx(),
        grid.ny(),
        fmt_f64(grid.spacing()),
        fmt_f64(origin[0]),
        fmt_f64(origin[1])
    )
    .expect("string write");
    for j in 0..grid.ny() {
        let row: Vec<&str> = (0..grid.nx())
            .map(|i| if grid.node_at(i, j).is_some() { "1" } else { "0" })
            .collect();
        writeln!(out, "{}", row.join(" ")).expect("string write");
    }
    for v in u {
        writeln!(out, "{}", fmt_f64(*v)).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// `radial dim n rho` header, then one value per interior node.
pub fn write_radial_field(path: &Path, grid: &RadialGrid, u: &[f64]) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: u.len(),
        });
    }
    let mut out = String::new();
    writeln!(
        out,
        "radial {} {} {}",
        grid.dim(),
        grid.len() + 1,
        fmt_f64(grid.rho())
    )
    .expect("string write");
    for v in u {
        writeln!(out, "{}", fmt_f64(*v)).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, Shape};

    #[test]
    fn csv_escaping() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn mask_file_roundtrip() {
        let dom = Domain::new(
            Shape::Annulus {
                center: [0.0, 0.0],
                rho: 1.0,
                gamma: 2.0,
            },
            0.1,
            2,
        )
        .unwrap();
        let grid = dom.grid(0.25).unwrap();
        let shape = Shape::Mask {
            nx: grid.nx(),
            ny: grid.ny(),
            h: grid.spacing(),
            origin: grid.origin(),
            inside: grid.mask().to_vec(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annulus.mask");
        write_mask_file(&path, &shape).unwrap();
        let loaded = read_mask_file(&path).unwrap();
        assert_eq!(shape, loaded);
    }

    #[test]
    fn masked_field_dump_contains_header_and_values() {
        let dom = Domain::new(
            Shape::Ball {
                center: [0.0, 0.0],
                rho: 1.0,
            },
            0.1,
            1,
        )
        .unwrap();
        let grid = dom.grid(0.5).unwrap();
        let u: Vec<f64> = (0..grid.len()).map(|k| k as f64).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.field");
        write_masked_field(&path, &grid, &u).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + grid.ny() + grid.len());
        assert!(lines[0].starts_with(&format!("{} {}", grid.nx(), grid.ny())));
    }
}
