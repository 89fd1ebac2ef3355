//! Explicit conservative scheme for the anisotropic diffusion limit
//! `varrho_t = Laplace(D(L(h)) varrho) + r n varrho`, coupled to the same
//! ADI updates for `h` and `n` as the kinetic solver.

use crate::adi::{adi_update_h, adi_update_n};
use crate::error::{PbdmError, Result};
use crate::field::ScalarField2D;
use crate::grid::GridSpec;
use crate::model::{chez_level, motility, round_to_grid};
use crate::par::{self, Exec};
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmState {
    pub time: f64,
    pub step: u64,
    pub varrho: ScalarField2D,
    pub h: ScalarField2D,
    pub n: ScalarField2D,
}

impl AdmState {
    pub fn new(varrho: ScalarField2D, h: ScalarField2D, n: ScalarField2D) -> Self {
        Self {
            time: 0.0,
            step: 0,
            varrho,
            h,
            n,
        }
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        if !self.varrho.matches(grid) || !self.h.matches(grid) || !self.n.matches(grid) {
            return Err(PbdmError::Shape("limit state does not match grid".into()));
        }
        Ok(())
    }
}

/// `D` at the CheZ level of `h`, snapped to the nearest z node.
pub fn snapped_motility(h: f64, grid: &GridSpec, params: &ModelParams) -> Result<f64> {
    let level = round_to_grid(chez_level(h, params), grid.dz).level;
    motility(level.min(grid.zw), params)
}

pub fn snapped_d(h: &ScalarField2D, grid: &GridSpec, params: &ModelParams) -> Result<ScalarField2D> {
    let values = h
        .as_slice()
        .iter()
        .map(|&v| snapped_motility(v, grid, params))
        .collect::<Result<Vec<_>>>()?;
    ScalarField2D::from_vec(grid, values)
}

/// Largest admissible step `0.25 min(dx, dy)^2 / max(1, max D)`.
pub fn adm_step_limit(grid: &GridSpec, params: &ModelParams) -> f64 {
    grid.diffusion_step_limit() / params.max_motility().max(1.0)
}

pub fn step_adm(state: &AdmState, grid: &GridSpec, params: &ModelParams, exec: Exec) -> Result<AdmState> {
    let limit = adm_step_limit(grid, params);
    if grid.dt > limit * (1.0 + 1e-12) {
        return Err(PbdmError::Config(format!(
            "dt = {} exceeds the limit-scheme restriction {limit}",
            grid.dt
        )));
    }
    state.check(grid)?;
    if !state.varrho.is_finite() {
        return Err(PbdmError::NonFinite("total density"));
    }
    let h = adi_update_h(&state.h, &state.varrho, grid, params, exec)?;
    let n = adi_update_n(&state.n, &state.varrho, grid, params, exec)?;
    let d = snapped_d(&h, grid, params)?;
    let varrho = limit_density_step(&state.varrho, &d, &n, grid, params, exec);
    if !varrho.is_finite() {
        return Err(PbdmError::NonFinite("total density after step"));
    }
    Ok(AdmState {
        time: state.time + grid.dt,
        step: state.step + 1,
        varrho,
        h,
        n,
    })
}

/// Face-averaged diffusion plus the upwind flux of the motility gradient.
fn limit_density_step(
    varrho: &ScalarField2D,
    d: &ScalarField2D,
    n: &ScalarField2D,
    grid: &GridSpec,
    params: &ModelParams,
    exec: Exec,
) -> ScalarField2D {
    let ny1 = grid.ny1();
    let (dx, dy, dt) = (grid.dx, grid.dy, grid.dt);
    let owned_rows = grid.owned_rows();
    let q = varrho.as_slice();
    let dv = d.as_slice();
    let nv = n.as_slice();

    // Upwind flux between node a and its forward neighbour b.
    let flux = |a: usize, b: usize, h: f64| {
        let diff = dv[b] - dv[a];
        (diff.max(0.0) * q[b] - (-diff).max(0.0) * q[a]) / h
    };
    // Face-averaged three-point term along one axis.
    let faces = |lo: usize, c: usize, hi: usize, h: f64| {
        let dl = 0.5 * (dv[lo] + dv[c]);
        let dr = 0.5 * (dv[hi] + dv[c]);
        (dl * q[lo] - (dl + dr) * q[c] + dr * q[hi]) / (h * h)
    };

    let mut out = ScalarField2D::zeros(grid);
    par::for_each_chunk(
        exec,
        out.as_mut_slice(),
        ny1,
        || (),
        |_, i, row| {
            if i == 0 || i == grid.nx {
                return;
            }
            for j in owned_rows.clone() {
                let (jb, jt) = grid.y_neighbors(j);
                let c = i * ny1 + j;
                let (l, r) = (c - ny1, c + ny1);
                let (b, t) = (i * ny1 + jb, i * ny1 + jt);
                let ax = faces(l, c, r, dx);
                let ay = faces(b, c, t, dy);
                let fx = (flux(c, r, dx) - flux(l, c, dx)) / dx;
                let fy = (flux(c, t, dy) - flux(b, c, dy)) / dy;
                row[j] = q[c] + dt * (ax + ay + fx + fy + params.r * nv[c] * q[c]);
            }
        },
    );
    out.apply_boundary(grid);
    out
}
