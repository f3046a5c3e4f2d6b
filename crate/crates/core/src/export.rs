//! CSV and legacy VTK writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::operators::FieldSampleGrid;
use crate::verify::CheckReport;
use crate::Result;

/// Columns `x,y,z,vx,vy,vz,inside`, one row per node in grid order.
pub fn write_grid_csv(grid: &FieldSampleGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z", "vx", "vy", "vz", "inside"])?;
    for ((p, v), inside) in grid.points().zip(&grid.values).zip(&grid.inside) {
        w.write_record([
            fmt(p.x),
            fmt(p.y),
            fmt(p.z),
            fmt(v.x),
            fmt(v.y),
            fmt(v.z),
            u8::from(*inside).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// ASCII `STRUCTURED_POINTS` file with a `VECTORS` attribute and the inside mask.
pub fn write_grid_vtk(grid: &FieldSampleGrid, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let [nx, ny, nz] = grid.spec.counts;
    let o = grid.spec.origin;
    let [hx, hy, hz] = grid.spec.spacing;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "vector potential Rg")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {nx} {ny} {nz}")?;
    writeln!(w, "ORIGIN {} {} {}", fmt(o.x), fmt(o.y), fmt(o.z))?;
    writeln!(w, "SPACING {} {} {}", fmt(hx), fmt(hy), fmt(hz))?;
    writeln!(w, "POINT_DATA {}", grid.spec.len())?;
    writeln!(w, "VECTORS v double")?;
    for v in &grid.values {
        writeln!(w, "{} {} {}", fmt(v.x), fmt(v.y), fmt(v.z))?;
    }
    writeln!(w, "SCALARS inside int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for inside in &grid.inside {
        writeln!(w, "{}", u8::from(*inside))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `test,point,component,value,reference,abs_err,rel_err,pass`; the point is
/// written as `x;y;z`.
pub fn write_report_csv(reports: &[&CheckReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["test", "point", "component", "value", "reference", "abs_err", "rel_err", "pass"])?;
    for report in reports {
        for row in &report.rows {
            w.write_record([
                format!("{}/{}", report.name, row.test),
                format!("{};{};{}", fmt(row.point.x), fmt(row.point.y), fmt(row.point.z)),
                row.component.clone(),
                fmt(row.value),
                fmt(row.reference),
                fmt(row.abs_err),
                fmt(row.rel_err),
                row.pass.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that round-trips.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}
