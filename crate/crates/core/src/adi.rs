//! Alternating-direction implicit updates for the AHL and nutrient fields.
//!
//! Both fields obey `u_t = D (u_xx + u_yy) - c u + s`. Each step takes two
//! half steps of length `dt/2`:
//!
//! 1. implicit in x, explicit `delta_yy` of the old field;
//! 2. implicit in y, reusing `delta_xx` of the intermediate field.
//!
//! The decay coefficient `c` is always treated implicitly. Boundary rows are
//! copies of their neighbours (or periodic in y). Each line is solved for
//! the increment over the half step, so constant states are reproduced
//! exactly.

use crate::error::{PbdmError, Result};
use crate::field::ScalarField2D;
use crate::grid::{GridSpec, YBoundary};
use crate::linalg::{cyclic_thomas_in_place, thomas_in_place, CyclicScratch};
use crate::par::{self, Exec};
use crate::params::ModelParams;

/// Reaction part of an ADI-advanced field, evaluated pointwise.
#[derive(Debug, Clone, Copy)]
pub enum Kinetics<'a> {
    /// `+ alpha varrho - beta u`.
    Produced {
        alpha: f64,
        beta: f64,
        density: &'a ScalarField2D,
    },
    /// `- gamma varrho u`.
    Consumed { gamma: f64, density: &'a ScalarField2D },
}

impl Kinetics<'_> {
    /// `(decay, source)` at flat index `idx`.
    #[inline]
    fn at(&self, idx: usize) -> (f64, f64) {
        match *self {
            Kinetics::Produced { alpha, beta, density } => (beta, alpha * density.as_slice()[idx]),
            Kinetics::Consumed { gamma, density } => (gamma * density.as_slice()[idx], 0.0),
        }
    }

    fn density(&self) -> &ScalarField2D {
        match self {
            Kinetics::Produced { density, .. } | Kinetics::Consumed { density, .. } => density,
        }
    }
}

#[derive(Default)]
struct LineScratch {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    cp: Vec<f64>,
    cyclic: CyclicScratch,
}

impl LineScratch {
    fn reset(&mut self) {
        self.sub.clear();
        self.diag.clear();
        self.sup.clear();
        self.rhs.clear();
    }

    /// Copy row `u_0 = u_1` written for the increment.
    fn push_first_copy_row(&mut self, rhs: f64) {
        self.diag.push(1.0);
        self.sup.push(-1.0);
        self.rhs.push(rhs);
    }

    /// Copy row `u_N = u_{N-1}` written for the increment.
    fn push_last_copy_row(&mut self, rhs: f64) {
        self.sub.push(-1.0);
        self.diag.push(1.0);
        self.rhs.push(rhs);
    }
}

/// AHL update with production `alpha varrho` and decay `beta h`.
pub fn adi_update_h(
    h: &ScalarField2D,
    varrho: &ScalarField2D,
    grid: &GridSpec,
    params: &ModelParams,
    exec: Exec,
) -> Result<ScalarField2D> {
    let kinetics = Kinetics::Produced {
        alpha: params.alpha,
        beta: params.beta,
        density: varrho,
    };
    adi_step(h, params.dh, kinetics, grid, exec)
}

/// Nutrient update with implicit consumption `gamma varrho n`.
pub fn adi_update_n(
    n: &ScalarField2D,
    varrho: &ScalarField2D,
    grid: &GridSpec,
    params: &ModelParams,
    exec: Exec,
) -> Result<ScalarField2D> {
    let kinetics = Kinetics::Consumed {
        gamma: params.gamma,
        density: varrho,
    };
    adi_step(n, params.dn, kinetics, grid, exec)
}

/// One full ADI step of `u_t = diff Laplace(u) + kinetics`.
pub fn adi_step(
    u: &ScalarField2D,
    diff: f64,
    kinetics: Kinetics<'_>,
    grid: &GridSpec,
    exec: Exec,
) -> Result<ScalarField2D> {
    if !u.matches(grid) || !kinetics.density().matches(grid) {
        return Err(PbdmError::Shape("ADI field does not match grid".into()));
    }
    if !u.is_finite() {
        return Err(PbdmError::NonFinite("ADI input field"));
    }
    if !kinetics.density().is_finite() {
        return Err(PbdmError::NonFinite("ADI density source"));
    }
    let half = 0.5 * grid.dt;
    let star = x_half_step(u, diff, half, &kinetics, grid, exec)?;
    y_half_step(&star, diff, half, &kinetics, grid, exec)
}

fn x_half_step(
    u: &ScalarField2D,
    diff: f64,
    half: f64,
    kinetics: &Kinetics<'_>,
    grid: &GridSpec,
    exec: Exec,
) -> Result<ScalarField2D> {
    let (nx1, ny1) = (grid.nx1(), grid.ny1());
    let ax = half * diff / (grid.dx * grid.dx);
    let ay = half * diff / (grid.dy * grid.dy);
    let owned = grid.owned_rows();
    let src = u.as_slice();

    // Lines are solved into a j-major buffer so each x line is contiguous.
    let mut lines = vec![0.0; nx1 * ny1];
    par::try_for_each_chunk(exec, &mut lines, nx1, LineScratch::default, |s, j, out| {
        if !owned.contains(&j) {
            return Ok(());
        }
        let (jb, jt) = grid.y_neighbors(j);
        let at = |i: usize| src[i * ny1 + j];
        s.reset();
        s.push_first_copy_row(at(1) - at(0));
        for i in 1..grid.nx {
            let idx = i * ny1 + j;
            let (c, f) = kinetics.at(idx);
            let lap_x = at(i - 1) - 2.0 * at(i) + at(i + 1);
            let lap_y = src[i * ny1 + jb] - 2.0 * src[idx] + src[i * ny1 + jt];
            s.sub.push(-ax);
            s.diag.push(1.0 + half * c + 2.0 * ax);
            s.sup.push(-ax);
            s.rhs.push(ax * lap_x + ay * lap_y + half * (f - c * src[idx]));
        }
        s.push_last_copy_row(at(grid.nx - 1) - at(grid.nx));
        thomas_in_place(&s.sub, &s.diag, &s.sup, &mut s.rhs, &mut s.cp)?;
        for (i, (o, d)) in out.iter_mut().zip(&s.rhs).enumerate() {
            *o = at(i) + d;
        }
        Ok(())
    })?;

    let mut star = ScalarField2D::zeros(grid);
    let dst = star.as_mut_slice();
    for j in owned {
        for i in 0..nx1 {
            dst[i * ny1 + j] = lines[j * nx1 + i];
        }
    }
    star.apply_boundary(grid);
    Ok(star)
}

fn y_half_step(
    star: &ScalarField2D,
    diff: f64,
    half: f64,
    kinetics: &Kinetics<'_>,
    grid: &GridSpec,
    exec: Exec,
) -> Result<ScalarField2D> {
    let ny1 = grid.ny1();
    let ax = half * diff / (grid.dx * grid.dx);
    let ay = half * diff / (grid.dy * grid.dy);
    let src = star.as_slice();
    let periodic = grid.y_boundary == YBoundary::Periodic;

    let mut next = ScalarField2D::zeros(grid);
    par::try_for_each_chunk(exec, next.as_mut_slice(), ny1, LineScratch::default, |s, i, out| {
        if i == 0 || i == grid.nx {
            return Ok(());
        }
        s.reset();
        let line = &src[i * ny1..(i + 1) * ny1];
        let row = |j: usize| {
            let idx = i * ny1 + j;
            let (c, f) = kinetics.at(idx);
            let lap_x = src[idx - ny1] - 2.0 * src[idx] + src[idx + ny1];
            let (jb, jt) = grid.y_neighbors(j);
            let lap_y = line[jb] - 2.0 * line[j] + line[jt];
            (
                1.0 + half * c + 2.0 * ay,
                ax * lap_x + ay * lap_y + half * (f - c * src[idx]),
            )
        };
        if periodic {
            for j in 0..grid.ny {
                let (d, r) = row(j);
                if j > 0 {
                    s.sub.push(-ay);
                }
                if j + 1 < grid.ny {
                    s.sup.push(-ay);
                }
                s.diag.push(d);
                s.rhs.push(r);
            }
            cyclic_thomas_in_place(&s.sub, &s.diag, &s.sup, -ay, -ay, &mut s.rhs, &mut s.cyclic)?;
            for j in 0..grid.ny {
                out[j] = line[j] + s.rhs[j];
            }
            out[grid.ny] = out[0];
        } else {
            s.push_first_copy_row(line[1] - line[0]);
            for j in 1..grid.ny {
                let (d, r) = row(j);
                s.sub.push(-ay);
                s.diag.push(d);
                s.sup.push(-ay);
                s.rhs.push(r);
            }
            s.push_last_copy_row(line[grid.ny - 1] - line[grid.ny]);
            thomas_in_place(&s.sub, &s.diag, &s.sup, &mut s.rhs, &mut s.cp)?;
            for (o, (u, d)) in out.iter_mut().zip(line.iter().zip(&s.rhs)) {
                *o = u + d;
            }
        }
        Ok(())
    })?;
    next.apply_boundary(grid);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Extents, MeshSizes};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(yb: YBoundary) -> GridSpec {
        make_grid(
            Extents {
                lx: 0.5,
                ly: 0.3,
                zw: 1.23,
            },
            MeshSizes {
                dx: 0.05,
                dy: 0.05,
                dz: 0.03,
                dt: 1e-3,
            },
            yb,
        )
        .unwrap()
    }

    fn random_field(g: &GridSpec, seed: u64) -> ScalarField2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = ScalarField2D::from_fn(g, |_, _| rng.gen_range(0.0..2.0));
        f.apply_boundary(g);
        f
    }

    #[test]
    fn uniform_production_matches_scalar_algebra() {
        let g = grid(YBoundary::NoFlux);
        let p = ModelParams::biological();
        let (hbar, pm) = (0.4, 0.7);
        let h = ScalarField2D::constant(&g, hbar);
        let varrho = ScalarField2D::constant(&g, pm);
        let out = adi_update_h(&h, &varrho, &g, &p, Exec::Sequential).unwrap();
        let half = g.dt / 2.0;
        let star = (hbar + half * p.alpha * pm) / (1.0 + half * p.beta);
        let expect = (star + half * p.alpha * pm) / (1.0 + half * p.beta);
        for v in out.as_slice() {
            assert!((v - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn pure_decay() {
        let g = grid(YBoundary::Periodic);
        let p = ModelParams::biological();
        let h = ScalarField2D::constant(&g, 0.3);
        let out = adi_update_h(&h, &ScalarField2D::zeros(&g), &g, &p, Exec::Sequential).unwrap();
        let expect = 0.3 / (1.0 + g.dt / 2.0 * p.beta).powi(2);
        for v in out.as_slice() {
            assert!((v - expect).abs() < 1e-14 && *v < 0.3);
        }
    }

    #[test]
    fn uniform_consumption() {
        let g = grid(YBoundary::NoFlux);
        let p = ModelParams::biological();
        let n = ScalarField2D::constant(&g, 1.0);
        let varrho = ScalarField2D::constant(&g, 0.5);
        let out = adi_update_n(&n, &varrho, &g, &p, Exec::Sequential).unwrap();
        let f = 1.0 + g.dt / 2.0 * p.gamma * 0.5;
        for v in out.as_slice() {
            assert!((v - 1.0 / (f * f)).abs() < 1e-14);
        }
    }

    #[test]
    fn nutrient_without_cells_is_unchanged() {
        for yb in [YBoundary::NoFlux, YBoundary::Periodic] {
            let g = grid(yb);
            let p = ModelParams::biological();
            let n = ScalarField2D::constant(&g, 1.0);
            let out = adi_update_n(&n, &ScalarField2D::zeros(&g), &g, &p, Exec::Sequential).unwrap();
            assert_eq!(out, n);
        }
    }

    #[test]
    fn heat_equation_conserves_owned_mass() {
        for yb in [YBoundary::NoFlux, YBoundary::Periodic] {
            let g = grid(yb);
            let mut p = ModelParams::biological();
            p.alpha = 0.0;
            p.beta = 0.0;
            let mut h = random_field(&g, 5);
            let before = h.owned_sum(&g);
            for _ in 0..20 {
                h = adi_update_h(&h, &ScalarField2D::zeros(&g), &g, &p, Exec::Sequential).unwrap();
            }
            let after = h.owned_sum(&g);
            assert!((after - before).abs() <= 1e-10 * before, "{yb:?}: {before} -> {after}");
        }
    }

    #[test]
    fn nonnegative_nutrient_stays_nonnegative() {
        let g = grid(YBoundary::NoFlux);
        let p = ModelParams::biological();
        let n = random_field(&g, 9);
        let varrho = random_field(&g, 10);
        let out = adi_update_n(&n, &varrho, &g, &p, Exec::Sequential).unwrap();
        assert!(out.min() >= 0.0);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let g = grid(YBoundary::Periodic);
        let p = ModelParams::biological();
        let h = random_field(&g, 1);
        let varrho = random_field(&g, 2);
        let a = adi_update_h(&h, &varrho, &g, &p, Exec::Sequential).unwrap();
        let b = adi_update_h(&h, &varrho, &g, &p, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let g = grid(YBoundary::NoFlux);
        let mut h = ScalarField2D::zeros(&g);
        h.set(3, 3, f64::NAN);
        let r = adi_update_h(
            &h,
            &ScalarField2D::zeros(&g),
            &g,
            &ModelParams::biological(),
            Exec::Sequential,
        );
        assert!(matches!(r, Err(PbdmError::NonFinite(_))));
    }
}
