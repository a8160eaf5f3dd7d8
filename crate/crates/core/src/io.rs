//! Output formatting shared by the CSV and JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::mesh::{Mesh, ScalarField};
use crate::Result;

/// 17 significant digits, scientific notation; round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `node,x[,y],value` table for a nodal field.
pub fn field_csv(mesh: &Mesh, field: &ScalarField, value_name: &str) -> String {
    let mut out = if mesh.dim() == 1 {
        format!("node,x,{value_name}\n")
    } else {
        format!("node,x,y,{value_name}\n")
    };
    for (i, (p, v)) in mesh.nodes().iter().zip(field.values()).enumerate() {
        if mesh.dim() == 1 {
            let _ = writeln!(out, "{i},{},{}", fmt_f64(p[0]), fmt_f64(*v));
        } else {
            let _ = writeln!(out, "{i},{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*v));
        }
    }
    out
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, std::f64::consts::PI, 1e-300, -2.5e17, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.25), "2.5000000000000000e-1");
    }
}
