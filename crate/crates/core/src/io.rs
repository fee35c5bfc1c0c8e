//! CSV and binary writers for experiment artifacts.
//!
//! All float formatting is deterministic, so identical inputs produce
//! identical bytes. Callers that promise byte-stable output must zero
//! the wall time column, since it is the one input that varies between
//! otherwise identical runs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::grid::CubeGrid;
use crate::quadrature::SurfaceQuadrature;
use crate::surface::Vec3;

/// One resolution of a convergence study.
#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub experiment: String,
    pub h: f64,
    pub delta: f64,
    pub p: u32,
    pub q: f64,
    pub kappa0: f64,
    pub n_targets: usize,
    pub err_max: f64,
    pub err_l2: f64,
    /// Observed orders against the previous row; empty on the first.
    pub order_max: Option<f64>,
    pub order_l2: Option<f64>,
    pub seed: u64,
    pub wall_time_s: f64,
}

fn fmt_order(o: Option<f64>) -> String {
    o.map(|v| format!("{v:.2}")).unwrap_or_default()
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "experiment,h,delta,p,q,kappa0,n_targets,err_max,err_l2,order_max,order_l2,seed,wall_time_s"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6e},{},{},{},{},{:.6e},{:.6e},{},{},{},{:.3}",
            r.experiment,
            r.h,
            r.delta,
            r.p,
            r.q,
            r.kappa0,
            r.n_targets,
            r.err_max,
            r.err_l2,
            fmt_order(r.order_max),
            fmt_order(r.order_l2),
            r.seed,
            r.wall_time_s
        )?;
    }
    w.flush()
}

/// One evaluation target with its computed and exact values. Scalar
/// quantities carry one component, velocities three.
#[derive(Clone, Debug)]
pub struct TargetRow {
    pub point: Vec3,
    /// Signed distance to the surface when the target was classified
    /// near it.
    pub b: Option<f64>,
    pub computed: Vec<f64>,
    pub exact: Option<Vec<f64>>,
    pub abs_error: f64,
}

pub fn write_targets_csv(path: &Path, rows: &[TargetRow]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let width = rows.first().map(|r| r.computed.len()).unwrap_or(1);
    let cols = |stem: &str| -> String {
        if width == 1 {
            stem.to_string()
        } else {
            (0..width)
                .map(|i| format!("{stem}_{i}"))
                .collect::<Vec<_>>()
                .join(",")
        }
    };
    writeln!(
        w,
        "x,y,z,b,{},{},abs_error",
        cols("computed"),
        cols("exact")
    )?;
    let empty = ",".repeat(width.saturating_sub(1));
    for r in rows {
        let b = r.b.map(|v| format!("{v:.6e}")).unwrap_or_default();
        let computed = r
            .computed
            .iter()
            .map(|v| format!("{v:.12e}"))
            .collect::<Vec<_>>()
            .join(",");
        let exact = match &r.exact {
            Some(e) => e
                .iter()
                .map(|v| format!("{v:.12e}"))
                .collect::<Vec<_>>()
                .join(","),
            None => empty.clone(),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{:.6e}",
            r.point.x, r.point.y, r.point.z, b, computed, exact, r.abs_error
        )?;
    }
    w.flush()
}

/// Quadrature nodes with normals and weights, one node per row.
pub fn write_nodes_csv(path: &Path, quad: &SurfaceQuadrature) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,z,nx,ny,nz,w")?;
    for j in 0..quad.len() {
        let x = quad.nodes[j];
        let n = quad.normals[j];
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            x.x, x.y, x.z, n.x, n.y, n.z, quad.weights[j]
        )?;
    }
    w.flush()
}

/// Grid scalar field as flat binary: three u64 dims, h, the origin, then
/// the values in node order, all little endian.
pub fn write_grid_binary(
    path: &Path,
    grid: &CubeGrid,
    origin: Vec3,
    values: &[f64],
) -> std::io::Result<()> {
    assert_eq!(values.len(), grid.len());
    let mut w = BufWriter::new(File::create(path)?);
    let d = grid.points_per_axis() as u64;
    for dim in [d, d, d] {
        w.write_all(&dim.to_le_bytes())?;
    }
    w.write_all(&grid.h.to_le_bytes())?;
    for c in [origin.x, origin.y, origin.z] {
        w.write_all(&c.to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

/// One horizontal plane of a grid field, for plotting.
pub fn write_grid_slice_csv(
    path: &Path,
    grid: &CubeGrid,
    values: &[f64],
    k: usize,
) -> std::io::Result<()> {
    assert_eq!(values.len(), grid.len());
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,value")?;
    for i in 0..grid.points_per_axis() {
        for j in 0..grid.points_per_axis() {
            let p = grid.point(i, j, k);
            writeln!(w, "{},{},{:.12e}", p.x, p.y, values[grid.idx(i, j, k)])?;
        }
    }
    w.flush()
}

/// Interface velocities of a two-surface solve, one node per row.
pub fn write_interface_csv(
    path: &Path,
    nodes: [&[Vec3]; 2],
    velocity: &[Vec<Vec3>; 2],
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "surface,x,y,z,u1,u2,u3")?;
    for b in 0..2 {
        for j in 0..nodes[b].len() {
            let x = nodes[b][j];
            let u = velocity[b][j];
            writeln!(
                w,
                "{},{},{},{},{:.12e},{:.12e},{:.12e}",
                b + 1,
                x.x,
                x.y,
                x.z,
                u.x,
                u.y,
                u.z
            )?;
        }
    }
    w.flush()
}

/// Relative GMRES residual per iteration.
pub fn write_residuals_csv(path: &Path, residuals: &[f64]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iteration,residual")?;
    for (i, r) in residuals.iter().enumerate() {
        writeln!(w, "{},{:.6e}", i + 1, r)?;
    }
    w.flush()
}
