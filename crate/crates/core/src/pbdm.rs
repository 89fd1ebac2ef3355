//! One time step of the asymptotic-preserving splitting scheme for the
//! kinetic model: ADI for `h` and `n`, five-branch implicit upwind
//! advection in `z`, then the branch-mixing diffusion-growth stencil.

use crate::adi::{adi_update_h, adi_update_n};
use crate::error::{PbdmError, Result};
use crate::field::{total_density_with, InternalField3D, ScalarField2D, SimState};
use crate::grid::GridSpec;
use crate::linalg::{solve_z_advection_into, ZLineScratch};
use crate::model::{chez_level, motility, round_to_grid, volume_growth_rate, DriftEval};
use crate::par::{self, Exec};
use crate::params::ModelParams;

/// Which neighbour's AHL value steers a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `i - 1`
    Left,
    /// `i + 1`
    Right,
    /// the column itself
    Own,
    /// `j - 1`
    Below,
    /// `j + 1`
    Above,
}

impl Branch {
    pub const ALL: [Branch; 5] = [Branch::Left, Branch::Right, Branch::Own, Branch::Below, Branch::Above];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Column whose AHL value this branch uses, clamped (or wrapped in a
    /// periodic y direction) at the domain edge.
    #[inline]
    pub fn source(self, grid: &GridSpec, i: usize, j: usize) -> (usize, usize) {
        match self {
            Branch::Left => (grid.x_neighbors(i).0, j),
            Branch::Right => (grid.x_neighbors(i).1, j),
            Branch::Own => (i, j),
            Branch::Below => (i, grid.y_neighbors(j).0),
            Branch::Above => (i, grid.y_neighbors(j).1),
        }
    }
}

const NB: usize = 5;

/// The five advected copies of `rho`, stored per column as
/// `[branch][k]` so one column's branches are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    ny1: usize,
    nz1: usize,
    values: Vec<f64>,
}

impl BranchSet {
    fn zeros(grid: &GridSpec) -> Self {
        Self {
            ny1: grid.ny1(),
            nz1: grid.nz1(),
            values: vec![0.0; grid.columns() * NB * grid.nz1()],
        }
    }

    #[inline]
    pub fn column(&self, b: Branch, i: usize, j: usize) -> &[f64] {
        let start = ((i * self.ny1 + j) * NB + b.index()) * self.nz1;
        &self.values[start..start + self.nz1]
    }

    /// Copies one branch out as a full 3D field.
    pub fn to_field(&self, b: Branch, grid: &GridSpec) -> InternalField3D {
        let mut out = Vec::with_capacity(grid.columns() * self.nz1);
        for c in 0..grid.columns() {
            let start = (c * NB + b.index()) * self.nz1;
            out.extend_from_slice(&self.values[start..start + self.nz1]);
        }
        InternalField3D::from_vec(grid, out).expect("branch set matches grid")
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Default)]
struct AdvectScratch {
    drift: Vec<DriftEval>,
    line: ZLineScratch,
}

/// Implicit upwind z-advection of every column toward the snapped CheZ
/// level of each branch's neighbour AHL value.
///
/// `n_next` only enters through `k_V = r n` and is taken at the advected
/// column for all branches.
pub fn z_advection_branches(
    rho: &InternalField3D,
    h_next: &ScalarField2D,
    n_next: &ScalarField2D,
    grid: &GridSpec,
    params: &ModelParams,
    exec: Exec,
) -> Result<BranchSet> {
    if !rho.matches(grid) || !h_next.matches(grid) || !n_next.matches(grid) {
        return Err(PbdmError::Shape("advection inputs do not match grid".into()));
    }
    let nz1 = grid.nz1();
    let ny1 = grid.ny1();
    let lambda = params.kappa * grid.dt / grid.dz;
    let mut out = BranchSet::zeros(grid);
    let rho_v = rho.as_slice();
    let h_v = h_next.as_slice();
    let n_v = n_next.as_slice();

    par::try_for_each_chunk(exec, &mut out.values, NB * nz1, AdvectScratch::default, |s, c, col| {
        let (i, j) = (c / ny1, c % ny1);
        let input = &rho_v[c * nz1..(c + 1) * nz1];
        let kv = volume_growth_rate(params, n_v[c]);
        let mut targets = [usize::MAX; NB];
        for b in Branch::ALL {
            let (si, sj) = b.source(grid, i, j);
            let target = round_to_grid(chez_level(h_v[si * ny1 + sj], params), grid.dz)
                .index
                .min(grid.nz);
            targets[b.index()] = target;
            let (done, rest) = col.split_at_mut(b.index() * nz1);
            let dst = &mut rest[..nz1];
            if let Some(prev) = targets[..b.index()].iter().position(|&t| t == target) {
                dst.copy_from_slice(&done[prev * nz1..(prev + 1) * nz1]);
                continue;
            }
            s.drift.clear();
            s.drift
                .extend((0..nz1).map(|k| DriftEval::new(kv * (grid.z(target) - grid.z(k)))));
            solve_z_advection_into(input, &s.drift, lambda, dst, &mut s.line)?;
        }
        Ok(())
    })?;
    Ok(out)
}

/// Explicit diffusion-growth substep mixing the branches with the
/// upwind indicator weights, followed by the boundary copies.
pub fn diffusion_growth_step(
    branches: &BranchSet,
    h_next: &ScalarField2D,
    n_next: &ScalarField2D,
    grid: &GridSpec,
    params: &ModelParams,
    exec: Exec,
) -> Result<InternalField3D> {
    if !branches.is_finite() {
        return Err(PbdmError::NonFinite("branch densities"));
    }
    let nz1 = grid.nz1();
    let ny1 = grid.ny1();
    let motilities = (0..nz1)
        .map(|k| motility(grid.z(k), params))
        .collect::<Result<Vec<_>>>()?;
    let ix2 = 1.0 / (grid.dx * grid.dx);
    let iy2 = 1.0 / (grid.dy * grid.dy);
    let h = h_next.as_slice();
    let dt = grid.dt;
    let owned_rows = grid.owned_rows();

    let mut rho = InternalField3D::zeros(grid);
    par::for_each_chunk(
        exec,
        rho.as_mut_slice(),
        nz1,
        || (),
        |_, c, out| {
            let (i, j) = (c / ny1, c % ny1);
            if i == 0 || i == grid.nx || !owned_rows.contains(&j) {
                return;
            }
            let (jb, jt) = grid.y_neighbors(j);
            let hc = h[c];
            let hl = h[(i - 1) * ny1 + j];
            let hr = h[(i + 1) * ny1 + j];
            let hb = h[i * ny1 + jb];
            let ht = h[i * ny1 + jt];
            let ind = |cond: bool| if cond { 1.0 } else { 0.0 };
            let (w1, w2) = (ind(hl <= hc), ind(hb <= hc));
            let (w3r, w3t) = (ind(hc <= hr), ind(hc <= ht));
            let (w3l, w3b) = (ind(hl > hc), ind(hb > hc));
            let (w4, w5) = (ind(hc > hr), ind(hc > ht));

            let own = |b| branches.column(b, i, j);
            let (l, r, o, bo, t) = (
                own(Branch::Left),
                own(Branch::Right),
                own(Branch::Own),
                own(Branch::Below),
                own(Branch::Above),
            );
            let (lm_r, lm_o) = (
                branches.column(Branch::Right, i - 1, j),
                branches.column(Branch::Own, i - 1, j),
            );
            let (bm_t, bm_o) = (
                branches.column(Branch::Above, i, jb),
                branches.column(Branch::Own, i, jb),
            );
            let (rp_o, rp_l) = (
                branches.column(Branch::Own, i + 1, j),
                branches.column(Branch::Left, i + 1, j),
            );
            let (tp_o, tp_b) = (
                branches.column(Branch::Own, i, jt),
                branches.column(Branch::Below, i, jt),
            );
            let growth = params.r * n_next.as_slice()[c];

            for k in 0..nz1 {
                let a1 = 0.5 * (lm_r[k] + lm_o[k]) * ix2 - (lm_r[k] - lm_o[k]) * w1 * ix2;
                let a2 = 0.5 * (bm_t[k] + bm_o[k]) * iy2 - (bm_t[k] - bm_o[k]) * w2 * iy2;
                let a3 = -0.5 * (l[k] + 2.0 * o[k] + r[k]) * ix2 - 0.5 * (bo[k] + 2.0 * o[k] + t[k]) * iy2
                    + (r[k] - o[k]) * w3r * ix2
                    + (t[k] - o[k]) * w3t * iy2
                    - (o[k] - l[k]) * w3l * ix2
                    - (o[k] - bo[k]) * w3b * iy2;
                let a4 = 0.5 * (rp_o[k] + rp_l[k]) * ix2 + (rp_o[k] - rp_l[k]) * w4 * ix2;
                let a5 = 0.5 * (tp_o[k] + tp_b[k]) * iy2 + (tp_o[k] - tp_b[k]) * w5 * iy2;
                out[k] = o[k] + dt * (motilities[k] * (a1 + a2 + a3 + a4 + a5) + growth * o[k]);
            }
        },
    );
    rho.apply_boundary(grid);
    Ok(rho)
}

/// Advances the full state by one step; the input is never modified.
pub fn step_pbdm(state: &SimState, grid: &GridSpec, params: &ModelParams, exec: Exec) -> Result<SimState> {
    state.check(grid)?;
    if !state.rho.is_finite() {
        return Err(PbdmError::NonFinite("cell density"));
    }
    let varrho = total_density_with(&state.rho, grid, exec);
    let h = adi_update_h(&state.h, &varrho, grid, params, exec)?;
    let n = adi_update_n(&state.n, &varrho, grid, params, exec)?;
    let branches = z_advection_branches(&state.rho, &h, &n, grid, params, exec)?;
    let rho = diffusion_growth_step(&branches, &h, &n, grid, params, exec)?;
    if !rho.is_finite() {
        return Err(PbdmError::NonFinite("cell density after step"));
    }
    Ok(SimState {
        time: state.time + grid.dt,
        step: state.step + 1,
        rho,
        h,
        n,
    })
}

/// Rejects time steps above `0.25 min(dx, dy)^2`.
pub fn check_step_restriction(grid: &GridSpec) -> Result<()> {
    let limit = grid.diffusion_step_limit();
    if grid.dt > limit * (1.0 + 1e-12) {
        return Err(PbdmError::Config(format!(
            "dt = {} exceeds the explicit diffusion limit {limit}",
            grid.dt
        )));
    }
    Ok(())
}

/// Discrete delta in z: all of `varrho` sits at the node nearest to
/// `level(x, y)`, stored as density `varrho / dz`.
pub fn delta_density(varrho: &ScalarField2D, level: &ScalarField2D, grid: &GridSpec) -> Result<InternalField3D> {
    if !varrho.matches(grid) || !level.matches(grid) {
        return Err(PbdmError::Shape("delta data does not match grid".into()));
    }
    let mut rho = InternalField3D::zeros(grid);
    for i in 0..grid.nx1() {
        for j in 0..grid.ny1() {
            let lv = level.get(i, j);
            if !(lv >= 0.0 && lv <= grid.zw * (1.0 + 1e-12)) {
                return Err(PbdmError::Domain(format!("CheZ level {lv} outside [0, {}]", grid.zw)));
            }
            let k = round_to_grid(lv, grid.dz).index.min(grid.nz);
            rho.set(i, j, k, varrho.get(i, j) / grid.dz);
        }
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Extents, MeshSizes, YBoundary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(yb: YBoundary) -> GridSpec {
        make_grid(
            Extents {
                lx: 0.3,
                ly: 0.25,
                zw: 1.23,
            },
            MeshSizes {
                dx: 0.05,
                dy: 0.05,
                dz: 0.03,
                dt: 2.5e-4,
            },
            yb,
        )
        .unwrap()
    }

    fn random_rho(g: &GridSpec, rng: &mut ChaCha8Rng) -> InternalField3D {
        let mut rho = InternalField3D::from_fn(g, |_, _, _| rng.gen_range(0.0..1.0));
        rho.apply_boundary(g);
        rho
    }

    fn random_h(g: &GridSpec, rng: &mut ChaCha8Rng) -> ScalarField2D {
        let mut h = ScalarField2D::from_fn(g, |_, _| rng.gen_range(0.0..0.5));
        h.apply_boundary(g);
        h
    }

    #[test]
    fn branch_sources_clamp_and_wrap() {
        let g = grid(YBoundary::NoFlux);
        assert_eq!(Branch::Left.source(&g, 0, 3), (0, 3));
        assert_eq!(Branch::Right.source(&g, g.nx, 3), (g.nx, 3));
        assert_eq!(Branch::Below.source(&g, 2, 0), (2, 0));
        let g = grid(YBoundary::Periodic);
        assert_eq!(Branch::Below.source(&g, 2, 0), (2, g.ny - 1));
        assert_eq!(Branch::Above.source(&g, 2, g.ny - 1), (2, 0));
    }

    #[test]
    fn zero_lambda_leaves_branches_equal_to_input() {
        let g = grid(YBoundary::NoFlux);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_rho(&g, &mut rng);
        let h = random_h(&g, &mut rng);
        let n = ScalarField2D::constant(&g, 1.0);
        let p = ModelParams::biological().with_kappa(0.0);
        let set = z_advection_branches(&rho, &h, &n, &g, &p, Exec::Sequential).unwrap();
        for b in Branch::ALL {
            assert_eq!(set.to_field(b, &g), rho);
        }
    }

    #[test]
    fn uniform_h_gives_identical_branches() {
        let g = grid(YBoundary::Periodic);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_rho(&g, &mut rng);
        let h = ScalarField2D::constant(&g, 0.2);
        let n = ScalarField2D::constant(&g, 1.0);
        let p = ModelParams::biological().with_kappa(16.0);
        let set = z_advection_branches(&rho, &h, &n, &g, &p, Exec::Sequential).unwrap();
        let own = set.to_field(Branch::Own, &g);
        for b in Branch::ALL {
            assert_eq!(set.to_field(b, &g), own);
        }
    }

    #[test]
    fn branches_conserve_column_sums() {
        let g = grid(YBoundary::NoFlux);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_rho(&g, &mut rng);
        let h = random_h(&g, &mut rng);
        let n = ScalarField2D::constant(&g, 1.0);
        let p = ModelParams::biological().with_kappa(64.0);
        let set = z_advection_branches(&rho, &h, &n, &g, &p, Exec::Sequential).unwrap();
        for i in 0..g.nx1() {
            for j in 0..g.ny1() {
                let before: f64 = rho.column(i, j).iter().sum();
                for b in Branch::ALL {
                    let after: f64 = set.column(b, i, j).iter().sum();
                    assert!((after - before).abs() <= 1e-12 * before);
                    assert!(set.column(b, i, j).iter().all(|&v| v >= 0.0));
                }
            }
        }
    }

    #[test]
    fn large_kappa_concentrates_each_branch() {
        let g = make_grid(
            Extents {
                lx: 0.2,
                ly: 0.2,
                zw: 1.23,
            },
            MeshSizes {
                dx: 0.05,
                dy: 0.05,
                dz: 0.03,
                dt: 2.5e-5,
            },
            YBoundary::NoFlux,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_rho(&g, &mut rng);
        let h = random_h(&g, &mut rng);
        let n = ScalarField2D::constant(&g, 1.0);
        let p = ModelParams::biological().with_kappa(1e8);
        let set = z_advection_branches(&rho, &h, &n, &g, &p, Exec::Sequential).unwrap();
        for i in 0..g.nx1() {
            for j in 0..g.ny1() {
                for b in Branch::ALL {
                    let (si, sj) = b.source(&g, i, j);
                    let k = round_to_grid(chez_level(h.get(si, sj), &p), g.dz).index;
                    let col = set.column(b, i, j);
                    let total: f64 = col.iter().sum();
                    let lambda = p.kappa * g.dt / g.dz;
                    let harmonic: f64 = (1..g.nz1()).map(|m| 1.0 / m as f64).sum();
                    assert!(col[k] / total >= 1.0 - harmonic / (lambda * p.r * g.dz));
                }
            }
        }
    }

    /// Direct five-point update `rho + dt D(z_k) Laplace(rho) + dt r n rho`.
    fn five_point(rho: &InternalField3D, n: &ScalarField2D, g: &GridSpec, p: &ModelParams) -> InternalField3D {
        let mut out = InternalField3D::zeros(g);
        for i in 1..g.nx {
            for j in g.owned_rows() {
                let (jb, jt) = g.y_neighbors(j);
                for k in 0..g.nz1() {
                    let c = rho.get(i, j, k);
                    let lap = (rho.get(i - 1, j, k) - 2.0 * c + rho.get(i + 1, j, k)) / (g.dx * g.dx)
                        + (rho.get(i, jb, k) - 2.0 * c + rho.get(i, jt, k)) / (g.dy * g.dy);
                    let d = motility(g.z(k), p).unwrap();
                    out.set(i, j, k, c + g.dt * (d * lap + p.r * n.get(i, j) * c));
                }
            }
        }
        out.apply_boundary(g);
        out
    }

    #[test]
    fn equal_branches_reduce_to_five_point_scheme() {
        for yb in [YBoundary::NoFlux, YBoundary::Periodic] {
            let g = grid(yb);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let rho = random_rho(&g, &mut rng);
            let h = random_h(&g, &mut rng);
            let n = ScalarField2D::from_fn(&g, |_, _| rng.gen_range(0.0..1.0));
            let p = ModelParams::biological().with_kappa(0.0);
            let set = z_advection_branches(&rho, &h, &n, &g, &p, Exec::Sequential).unwrap();
            let got = diffusion_growth_step(&set, &h, &n, &g, &p, Exec::Sequential).unwrap();
            let want = five_point(&rho, &n, &g, &p);
            let scale = want.max();
            for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
                assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn uniform_state_only_grows() {
        let g = grid(YBoundary::NoFlux);
        let rho = InternalField3D::from_fn(&g, |_, _, z| 1.0 + z);
        let h = ScalarField2D::constant(&g, 0.1);
        let n = ScalarField2D::constant(&g, 0.8);
        let p = ModelParams::biological().with_kappa(8.0);
        let set = z_advection_branches(&rho, &h, &n, &g, &p, Exec::Sequential).unwrap();
        let got = diffusion_growth_step(&set, &h, &n, &g, &p, Exec::Sequential).unwrap();
        let own = set.to_field(Branch::Own, &g);
        for (a, o) in got.as_slice().iter().zip(own.as_slice()) {
            let want = (1.0 + g.dt * p.r * 0.8) * o;
            assert!((a - want).abs() <= 1e-13 * want.abs().max(1.0));
        }
    }

    #[test]
    fn stencil_conserves_mass_without_growth() {
        for yb in [YBoundary::NoFlux, YBoundary::Periodic] {
            let g = grid(yb);
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            let rho = random_rho(&g, &mut rng);
            let h = random_h(&g, &mut rng);
            let n = ScalarField2D::zeros(&g);
            let p = ModelParams::biological().with_kappa(32.0);
            let set = z_advection_branches(&rho, &h, &n, &g, &p, Exec::Sequential).unwrap();
            let got = diffusion_growth_step(&set, &h, &n, &g, &p, Exec::Sequential).unwrap();
            let before = rho.owned_sum(&g);
            let after = got.owned_sum(&g);
            assert!((after - before).abs() <= 1e-10 * before, "{yb:?}: {before} -> {after}");
        }
    }

    #[test]
    fn empty_state_is_a_fixed_point() {
        let g = grid(YBoundary::NoFlux);
        let state = SimState::new(
            InternalField3D::zeros(&g),
            ScalarField2D::zeros(&g),
            ScalarField2D::constant(&g, 1.0),
        );
        let next = step_pbdm(&state, &g, &ModelParams::biological(), Exec::Sequential).unwrap();
        assert_eq!(next.rho, state.rho);
        assert_eq!(next.h, state.h);
        assert_eq!(next.n, state.n);
        assert_eq!(next.step, 1);
        assert!((next.time - g.dt).abs() < 1e-18);
    }

    #[test]
    fn sequential_and_parallel_steps_agree_bitwise() {
        let g = grid(YBoundary::Periodic);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let state = SimState::new(
            random_rho(&g, &mut rng),
            random_h(&g, &mut rng),
            ScalarField2D::constant(&g, 1.0),
        );
        let p = ModelParams::biological().with_kappa(16.0);
        let a = step_pbdm(&state, &g, &p, Exec::Sequential).unwrap();
        let b = step_pbdm(&state, &g, &p, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn delta_density_preserves_total() {
        let g = grid(YBoundary::NoFlux);
        let varrho = ScalarField2D::from_fn(&g, |x, y| 1.0 + x * y);
        let level = ScalarField2D::constant(&g, 0.615);
        let rho = delta_density(&varrho, &level, &g).unwrap();
        assert_eq!(rho.get(2, 2, 21), varrho.get(2, 2) / g.dz);
        let back = crate::field::total_density(&rho, &g);
        for (a, b) in back.as_slice().iter().zip(varrho.as_slice()) {
            assert!((a - b).abs() <= 1e-14 * b.abs());
        }
    }

    #[test]
    fn step_restriction() {
        let g = grid(YBoundary::NoFlux);
        assert!(check_step_restriction(&g).is_ok());
        let g = g.with_dt(0.25 * 0.05 * 0.05).unwrap();
        assert!(check_step_restriction(&g).is_ok());
        let g = g.with_dt(0.26 * 0.05 * 0.05).unwrap();
        assert!(matches!(check_step_restriction(&g), Err(PbdmError::Config(_))));
    }
}
