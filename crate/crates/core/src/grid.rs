//! Uniform node-indexed mesh over `[-Lx, Lx] x [-Ly, Ly] x [0, Zw]`.

use crate::error::{PbdmError, Result};

/// Relative tolerance used when checking that an extent is an integer
/// multiple of its mesh size.
const DIVISIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum YBoundary {
    /// Copy-type zero-flux rows at `j = 0` and `j = Ny`.
    NoFlux,
    /// `y = -Ly` and `y = Ly` are identified; row `Ny` mirrors row `0`.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Half-widths of the spatial box and the internal-state maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extents {
    pub lx: f64,
    pub ly: f64,
    pub zw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSizes {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub zw: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dt: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub y_boundary: YBoundary,
}

fn cell_count(axis: &'static str, extent: f64, h: f64) -> Result<usize> {
    if !(extent.is_finite() && extent > 0.0) {
        return Err(PbdmError::Grid {
            axis,
            reason: format!("extent {extent} must be positive"),
        });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(PbdmError::Grid {
            axis,
            reason: format!("mesh size {h} must be positive"),
        });
    }
    let n = (extent / h).round();
    if (n * h - extent).abs() > DIVISIBILITY_TOL * extent {
        return Err(PbdmError::Grid {
            axis,
            reason: format!("{extent}/{h} is not integral"),
        });
    }
    if n < 2.0 {
        return Err(PbdmError::Grid {
            axis,
            reason: format!("needs at least 2 cells, got {n}"),
        });
    }
    Ok(n as usize)
}

/// Builds a grid, rejecting extents that are not integer multiples of the
/// mesh sizes.
pub fn make_grid(extents: Extents, mesh: MeshSizes, y_boundary: YBoundary) -> Result<GridSpec> {
    let nx = cell_count("x", 2.0 * extents.lx, mesh.dx)?;
    let ny = cell_count("y", 2.0 * extents.ly, mesh.dy)?;
    let nz = cell_count("z", extents.zw, mesh.dz)?;
    if y_boundary == YBoundary::Periodic && ny < 3 {
        return Err(PbdmError::Grid {
            axis: "y",
            reason: "periodic y needs at least 3 cells".into(),
        });
    }
    if !(mesh.dt.is_finite() && mesh.dt > 0.0) {
        return Err(PbdmError::Grid {
            axis: "t",
            reason: format!("time step {} must be positive", mesh.dt),
        });
    }
    Ok(GridSpec {
        lx: extents.lx,
        ly: extents.ly,
        zw: extents.zw,
        dx: mesh.dx,
        dy: mesh.dy,
        dz: mesh.dz,
        dt: mesh.dt,
        nx,
        ny,
        nz,
        y_boundary,
    })
}

impl GridSpec {
    pub fn extents(&self) -> Extents {
        Extents {
            lx: self.lx,
            ly: self.ly,
            zw: self.zw,
        }
    }

    pub fn mesh(&self) -> MeshSizes {
        MeshSizes {
            dx: self.dx,
            dy: self.dy,
            dz: self.dz,
            dt: self.dt,
        }
    }

    /// Same geometry with a different time step.
    pub fn with_dt(&self, dt: f64) -> Result<GridSpec> {
        make_grid(self.extents(), MeshSizes { dt, ..self.mesh() }, self.y_boundary)
    }

    /// `x_i`; the end nodes are exactly `-Lx` and `Lx`.
    pub fn x(&self, i: usize) -> f64 {
        let t = i as f64 / self.nx as f64;
        -self.lx * (1.0 - t) + self.lx * t
    }

    pub fn y(&self, j: usize) -> f64 {
        let t = j as f64 / self.ny as f64;
        -self.ly * (1.0 - t) + self.ly * t
    }

    /// `z_k = k dz`.
    pub fn z(&self, k: usize) -> f64 {
        k as f64 * self.dz
    }

    /// Number of nodes per x line (`Nx + 1`).
    pub fn nx1(&self) -> usize {
        self.nx + 1
    }

    pub fn ny1(&self) -> usize {
        self.ny + 1
    }

    pub fn nz1(&self) -> usize {
        self.nz + 1
    }

    pub fn columns(&self) -> usize {
        self.nx1() * self.ny1()
    }

    /// Rows `j` that carry independent unknowns. Under no-flux these are
    /// the interior rows; under periodic y every row except the mirrored
    /// `j = Ny`.
    pub fn owned_rows(&self) -> std::ops::Range<usize> {
        match self.y_boundary {
            YBoundary::NoFlux => 1..self.ny,
            YBoundary::Periodic => 0..self.ny,
        }
    }

    /// Interior columns `i = 1..Nx-1`; `x` always uses copy-type no-flux.
    pub fn owned_cols(&self) -> std::ops::Range<usize> {
        1..self.nx
    }

    /// Lower/upper y neighbour of row `j`, following the y boundary rule.
    /// Out-of-range neighbours are clamped under no-flux.
    pub fn y_neighbors(&self, j: usize) -> (usize, usize) {
        match self.y_boundary {
            YBoundary::NoFlux => (j.saturating_sub(1), (j + 1).min(self.ny)),
            YBoundary::Periodic => {
                let below = if j == 0 { self.ny - 1 } else { j - 1 };
                let above = if j + 1 >= self.ny { 0 } else { j + 1 };
                (below, above)
            }
        }
    }

    pub fn x_neighbors(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(1), (i + 1).min(self.nx))
    }

    /// Largest stable explicit step for the diffusion substeps.
    pub fn diffusion_step_limit(&self) -> f64 {
        0.25 * (self.dx * self.dx).min(self.dy * self.dy)
    }

    pub fn extent_of(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => 2.0 * self.lx,
            Axis::Y => 2.0 * self.ly,
            Axis::Z => self.zw,
        }
    }
}
