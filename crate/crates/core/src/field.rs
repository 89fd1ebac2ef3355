//! Node-indexed field storage.
//!
//! 2D fields are stored with `j` fastest (`idx = i * (Ny+1) + j`). The 3D
//! internal-state field keeps each z column contiguous
//! (`idx = (i * (Ny+1) + j) * (Nz+1) + k`) and holds density per unit z.

use crate::error::{PbdmError, Result};
use crate::grid::{GridSpec, YBoundary};
use crate::par::{self, Exec};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    nx1: usize,
    ny1: usize,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &GridSpec, v: f64) -> Self {
        Self {
            nx1: grid.nx1(),
            ny1: grid.ny1(),
            values: vec![v; grid.columns()],
        }
    }

    /// Evaluates `f(x_i, y_j)` at every node.
    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.columns());
        for i in 0..grid.nx1() {
            let x = grid.x(i);
            for j in 0..grid.ny1() {
                values.push(f(x, grid.y(j)));
            }
        }
        Self {
            nx1: grid.nx1(),
            ny1: grid.ny1(),
            values,
        }
    }

    pub fn from_vec(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.columns() {
            return Err(PbdmError::Shape(format!(
                "expected {} values, got {}",
                grid.columns(),
                values.len()
            )));
        }
        Ok(Self {
            nx1: grid.nx1(),
            ny1: grid.ny1(),
            values,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx1, self.ny1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny1 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ny1 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.idx(i, j);
        self.values[idx] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn matches(&self, grid: &GridSpec) -> bool {
        self.nx1 == grid.nx1() && self.ny1 == grid.ny1()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sum over the nodes that carry independent unknowns (see
    /// [`GridSpec::owned_rows`]).
    pub fn owned_sum(&self, grid: &GridSpec) -> f64 {
        let mut total = 0.0;
        for i in grid.owned_cols() {
            for j in grid.owned_rows() {
                total += self.get(i, j);
            }
        }
        total
    }

    /// Applies the copy-type boundary rows (and the periodic mirror row in y).
    pub fn apply_boundary(&mut self, grid: &GridSpec) {
        let (nx, ny) = (grid.nx, grid.ny);
        for j in 0..=ny {
            let v = self.get(1, j);
            self.set(0, j, v);
            let v = self.get(nx - 1, j);
            self.set(nx, j, v);
        }
        for i in 0..=nx {
            match grid.y_boundary {
                YBoundary::NoFlux => {
                    let v = self.get(i, 1);
                    self.set(i, 0, v);
                    let v = self.get(i, ny - 1);
                    self.set(i, ny, v);
                }
                YBoundary::Periodic => {
                    let v = self.get(i, 0);
                    self.set(i, ny, v);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InternalField3D {
    nx1: usize,
    ny1: usize,
    nz1: usize,
    values: Vec<f64>,
}

impl InternalField3D {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            nx1: grid.nx1(),
            ny1: grid.ny1(),
            nz1: grid.nz1(),
            values: vec![0.0; grid.columns() * grid.nz1()],
        }
    }

    /// Evaluates `f(x_i, y_j, z_k)` at every node.
    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(f64, f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        let mut idx = 0;
        for i in 0..grid.nx1() {
            let x = grid.x(i);
            for j in 0..grid.ny1() {
                let y = grid.y(j);
                for k in 0..grid.nz1() {
                    out.values[idx] = f(x, y, grid.z(k));
                    idx += 1;
                }
            }
        }
        out
    }

    pub fn from_vec(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        let expected = grid.columns() * grid.nz1();
        if values.len() != expected {
            return Err(PbdmError::Shape(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            nx1: grid.nx1(),
            ny1: grid.ny1(),
            nz1: grid.nz1(),
            values,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.nx1, self.ny1, self.nz1)
    }

    pub fn matches(&self, grid: &GridSpec) -> bool {
        self.shape() == (grid.nx1(), grid.ny1(), grid.nz1())
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny1 + j) * self.nz1 + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.idx(i, j, k);
        self.values[idx] = v;
    }

    pub fn column(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.ny1 + j) * self.nz1;
        &self.values[start..start + self.nz1]
    }

    pub fn column_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let start = (i * self.ny1 + j) * self.nz1;
        &mut self.values[start..start + self.nz1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sum of all node values over owned columns (no dz weight).
    pub fn owned_sum(&self, grid: &GridSpec) -> f64 {
        let mut total = 0.0;
        for i in grid.owned_cols() {
            for j in grid.owned_rows() {
                total += self.column(i, j).iter().sum::<f64>();
            }
        }
        total
    }

    /// Copy-type boundary columns (and periodic mirror row), as for
    /// [`ScalarField2D::apply_boundary`].
    pub fn apply_boundary(&mut self, grid: &GridSpec) {
        let (nx, ny, nz1) = (grid.nx, grid.ny, self.nz1);
        let mut copy_col = |dst: (usize, usize), src: (usize, usize)| {
            let s = self.idx(src.0, src.1, 0);
            let d = self.idx(dst.0, dst.1, 0);
            self.values.copy_within(s..s + nz1, d);
        };
        for j in 0..=ny {
            copy_col((0, j), (1, j));
            copy_col((nx, j), (nx - 1, j));
        }
        for i in 0..=nx {
            match grid.y_boundary {
                YBoundary::NoFlux => {
                    copy_col((i, 0), (i, 1));
                    copy_col((i, ny), (i, ny - 1));
                }
                YBoundary::Periodic => copy_col((i, ny), (i, 0)),
            }
        }
    }
}

/// `varrho_{i,j} = sum_{k=0}^{Nz} rho_{i,j,k} dz`.
pub fn total_density(rho: &InternalField3D, grid: &GridSpec) -> ScalarField2D {
    total_density_with(rho, grid, Exec::default())
}

pub fn total_density_with(rho: &InternalField3D, grid: &GridSpec, exec: Exec) -> ScalarField2D {
    let mut out = ScalarField2D::zeros(grid);
    let nz1 = rho.nz1;
    let dz = grid.dz;
    let src = rho.as_slice();
    par::for_each_chunk(
        exec,
        out.as_mut_slice(),
        1,
        || (),
        |_, c, v| {
            let col = &src[c * nz1..(c + 1) * nz1];
            v[0] = col.iter().sum::<f64>() * dz;
        },
    );
    out
}

/// Full model state at time level `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub step: u64,
    pub rho: InternalField3D,
    pub h: ScalarField2D,
    pub n: ScalarField2D,
}

impl SimState {
    pub fn new(rho: InternalField3D, h: ScalarField2D, n: ScalarField2D) -> Self {
        Self {
            time: 0.0,
            step: 0,
            rho,
            h,
            n,
        }
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        if !self.rho.matches(grid) || !self.h.matches(grid) || !self.n.matches(grid) {
            return Err(PbdmError::Shape("state does not match grid".into()));
        }
        Ok(())
    }

    pub fn apply_boundary(&mut self, grid: &GridSpec) {
        self.rho.apply_boundary(grid);
        self.h.apply_boundary(grid);
        self.n.apply_boundary(grid);
    }
}
