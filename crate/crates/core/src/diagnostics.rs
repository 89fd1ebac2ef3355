//! Error norms, deviation functions and convergence probes.

use crate::error::{PbdmError, Result};
use crate::field::{InternalField3D, ScalarField2D};
use crate::grid::GridSpec;
use crate::model::{chez_level, round_to_grid};
use crate::params::ModelParams;

/// `sqrt(sum (a - b)^2 / sum b^2)` over all nodes.
pub fn relative_error_slices(num: &[f64], reference: &[f64]) -> Result<f64> {
    if num.len() != reference.len() {
        return Err(PbdmError::Shape(format!(
            "comparing {} values against {}",
            num.len(),
            reference.len()
        )));
    }
    let (mut diff, mut norm) = (0.0, 0.0);
    for (a, b) in num.iter().zip(reference) {
        diff += (a - b) * (a - b);
        norm += b * b;
    }
    if norm == 0.0 {
        return Err(PbdmError::Undefined("reference field has zero norm".into()));
    }
    Ok((diff / norm).sqrt())
}

pub fn relative_error(num: &InternalField3D, reference: &InternalField3D) -> Result<f64> {
    if num.shape() != reference.shape() {
        return Err(PbdmError::Shape(format!(
            "field shapes {:?} and {:?} differ",
            num.shape(),
            reference.shape()
        )));
    }
    relative_error_slices(num.as_slice(), reference.as_slice())
}

fn ratio(fine: usize, coarse: usize, axis: &str) -> Result<usize> {
    if coarse == 0 || !fine.is_multiple_of(coarse) {
        return Err(PbdmError::Shape(format!(
            "{axis}: {fine} fine cells do not nest {coarse} coarse cells"
        )));
    }
    Ok(fine / coarse)
}

/// Samples a fine-grid field at the nodes shared with a nested coarse grid.
pub fn restrict(fine: &InternalField3D, fine_grid: &GridSpec, coarse_grid: &GridSpec) -> Result<InternalField3D> {
    if !fine.matches(fine_grid) {
        return Err(PbdmError::Shape("fine field does not match its grid".into()));
    }
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !same(fine_grid.lx, coarse_grid.lx) || !same(fine_grid.ly, coarse_grid.ly) || !same(fine_grid.zw, coarse_grid.zw)
    {
        return Err(PbdmError::Shape("grids cover different domains".into()));
    }
    let rx = ratio(fine_grid.nx, coarse_grid.nx, "x")?;
    let ry = ratio(fine_grid.ny, coarse_grid.ny, "y")?;
    let rz = ratio(fine_grid.nz, coarse_grid.nz, "z")?;
    let mut out = Vec::with_capacity(coarse_grid.columns() * coarse_grid.nz1());
    for i in 0..coarse_grid.nx1() {
        for j in 0..coarse_grid.ny1() {
            let col = fine.column(i * rx, j * ry);
            out.extend((0..coarse_grid.nz1()).map(|k| col[k * rz]));
        }
    }
    InternalField3D::from_vec(coarse_grid, out)
}

/// Homogeneous steady state of the kinetic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteadyProfile {
    /// All cells at the CheZ level of `h`: total density `varrho`.
    Delta {
        varrho: f64,
        h: f64,
    },
    /// `rho(z)` constant.
    Continuous {
        rho: f64,
    },
    Zero,
}

impl SteadyProfile {
    pub fn total_density(&self, grid: &GridSpec) -> f64 {
        match *self {
            SteadyProfile::Delta { varrho, .. } => varrho,
            SteadyProfile::Continuous { rho } => rho * grid.dz * grid.nz1() as f64,
            SteadyProfile::Zero => 0.0,
        }
    }

    /// The profile on the grid; deltas sit at the snapped level with
    /// density `varrho / dz`.
    pub fn discretize(&self, grid: &GridSpec, params: &ModelParams) -> InternalField3D {
        let mut rho = InternalField3D::zeros(grid);
        match *self {
            SteadyProfile::Delta { varrho, h } => {
                let k = round_to_grid(chez_level(h, params), grid.dz).index.min(grid.nz);
                for i in 0..grid.nx1() {
                    for j in 0..grid.ny1() {
                        rho.set(i, j, k, varrho / grid.dz);
                    }
                }
            }
            SteadyProfile::Continuous { rho: v } => rho.as_mut_slice().fill(v),
            SteadyProfile::Zero => {}
        }
        rho
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `max |rho - rho_bar| / max |rho0 - rho_bar|` over all nodes.
pub fn deviation_pbdm(rho: &InternalField3D, steady: &InternalField3D, rho0: &InternalField3D) -> Result<f64> {
    if rho.shape() != steady.shape() || rho0.shape() != steady.shape() {
        return Err(PbdmError::Shape("deviation fields differ in shape".into()));
    }
    let den = max_abs_diff(rho0.as_slice(), steady.as_slice());
    if den == 0.0 {
        return Err(PbdmError::Undefined("initial data equals the steady state".into()));
    }
    Ok(max_abs_diff(rho.as_slice(), steady.as_slice()) / den)
}

/// Limit-model counterpart of [`deviation_pbdm`] against a constant state.
pub fn deviation_adm(varrho: &ScalarField2D, varrho_bar: f64, varrho0: &ScalarField2D) -> Result<f64> {
    if varrho.shape() != varrho0.shape() {
        return Err(PbdmError::Shape("deviation fields differ in shape".into()));
    }
    let dev = |f: &ScalarField2D| f.as_slice().iter().map(|v| (v - varrho_bar).abs()).fold(0.0, f64::max);
    let den = dev(varrho0);
    if den == 0.0 {
        return Err(PbdmError::Undefined("initial data equals the steady state".into()));
    }
    Ok(dev(varrho) / den)
}

/// Time series of a deviation function.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeviationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DeviationSeries {
    pub fn push(&mut self, t: f64, v: f64) {
        self.times.push(t);
        self.values.push(v);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        Some((*self.times.last()?, *self.values.last()?))
    }
}

/// `log2(e_coarse / e_fine)` for meshes differing by a factor of two.
pub fn convergence_order(e_fine: f64, e_coarse: f64) -> Result<f64> {
    if !(e_fine > 0.0 && e_coarse > 0.0) {
        return Err(PbdmError::Domain(format!(
            "errors must be positive, got {e_fine} and {e_coarse}"
        )));
    }
    Ok((e_coarse / e_fine).log2())
}

/// Pairwise orders of errors listed from the finest mesh to the coarsest.
pub fn convergence_orders(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(PbdmError::Domain("need at least two errors".into()));
    }
    errors.windows(2).map(|w| convergence_order(w[0], w[1])).collect()
}

/// Index of the largest entry (first on ties) and its share of the sum.
pub fn concentration_profile(column: &[f64]) -> Result<(usize, f64)> {
    let total: f64 = column.iter().sum();
    if !(total > 0.0) {
        return Err(PbdmError::Undefined("column has no mass".into()));
    }
    let mut peak = 0;
    for (k, &v) in column.iter().enumerate() {
        if v > column[peak] {
            peak = k;
        }
    }
    Ok((peak, column[peak] / total))
}
