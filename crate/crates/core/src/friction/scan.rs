use alloc::vec::Vec;

use super::model::JunctionModel;
use super::tensor::{friction_tensor, EnergyGrid, FrictionDiagnostics};
use crate::error::Result;

/// One row of a friction scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub x: f64,
    pub y: f64,
    pub b: f64,
    pub gamma: [[f64; 2]; 2],
    pub diagnostics: FrictionDiagnostics,
}

impl ScanRow {
    pub fn symmetric_xy(&self) -> f64 {
        0.5 * (self.gamma[0][1] + self.gamma[1][0])
    }

    pub fn antisymmetric_xy(&self) -> f64 {
        0.5 * (self.gamma[0][1] - self.gamma[1][0])
    }

    /// `(x, y, B, γxx, γxy, γyx, γyy, γˢxy, γᴬxy)`.
    pub fn values(&self) -> [f64; 9] {
        let g = &self.gamma;
        [self.x, self.y, self.b, g[0][0], g[0][1], g[1][0], g[1][1], self.symmetric_xy(), self.antisymmetric_xy()]
    }
}

/// Scan points in emission order: `B` outermost, then `x`, then `y`.
pub fn scan_points(x_grid: &[f64], y_grid: &[f64], b_list: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::with_capacity(x_grid.len() * y_grid.len() * b_list.len());
    for &b in b_list {
        for &x in x_grid {
            for &y in y_grid {
                pts.push((x, y, b));
            }
        }
    }
    pts
}

/// Friction at one scan point; `m.b` is replaced by `b`.
pub fn scan_row(m: &JunctionModel, x: f64, y: f64, b: f64, grid: &EnergyGrid) -> Result<ScanRow> {
    let t = friction_tensor(&m.with_b(b), x, y, grid)?;
    Ok(ScanRow { x, y, b, gamma: t.gamma, diagnostics: t.diagnostics })
}

/// Sequential scan over [`scan_points`]. Points are independent, so callers
/// may evaluate [`scan_row`] concurrently and keep this order.
pub fn friction_scan(
    m: &JunctionModel,
    x_grid: &[f64],
    y_grid: &[f64],
    b_list: &[f64],
    grid: &EnergyGrid,
) -> Result<Vec<ScanRow>> {
    scan_points(x_grid, y_grid, b_list).into_iter().map(|(x, y, b)| scan_row(m, x, y, b, grid)).collect()
}
