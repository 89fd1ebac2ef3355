//! Initial-state recipes and their reference steady states.

use std::f64::consts::PI;

use pbdm_core::adm::AdmState;
use pbdm_core::diagnostics::SteadyProfile;
use pbdm_core::field::total_density;
use pbdm_core::model::{chez_level, round_to_grid};
use pbdm_core::{GridSpec, InternalField3D, ModelParams, ScalarField2D, SimState, YBoundary};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Colony near the threshold with a smooth bump: all cells at `L(h0)`.
    CosineColony,
    /// Delta at `L(h0/2)` plus a z-sine perturbation; `h = h0/2 + P`.
    DeltaHalf,
    /// Delta at `L(h0)` plus a z-sine perturbation; `h = h0 + P`.
    DeltaThreshold,
    /// Small absolute-value data over a nutrient background of 0.5.
    NutrientOnly,
    /// `rho = h0 / (2 Zw)` plus perturbation; `h, n` as in `DeltaHalf`.
    ContinuousHalf,
    /// `rho = h0 / Zw` plus perturbation; `h, n` as in `DeltaThreshold`.
    ContinuousThreshold,
    /// Two crossed anisotropic Gaussians at `z = Zw`.
    GaussCross,
    /// Indicator of the cross with arms of half-length 5.
    CrossShort,
    /// Indicator of the cross with arms of half-length 10.
    CrossLong,
    /// Gaussians centred on the periodic y edges.
    TwoRings,
}

impl Recipe {
    pub const ALL: [Recipe; 10] = [
        Recipe::CosineColony,
        Recipe::DeltaHalf,
        Recipe::DeltaThreshold,
        Recipe::NutrientOnly,
        Recipe::ContinuousHalf,
        Recipe::ContinuousThreshold,
        Recipe::GaussCross,
        Recipe::CrossShort,
        Recipe::CrossLong,
        Recipe::TwoRings,
    ];

    pub fn check_grid(self, grid: &GridSpec) -> CliResult<()> {
        if self == Recipe::TwoRings && grid.y_boundary != YBoundary::Periodic {
            return Err(CliError::Config("two_rings needs a periodic y boundary".into()));
        }
        Ok(())
    }

    /// The homogeneous state the perturbation is measured against.
    pub fn steady(self, p: &ModelParams) -> Option<SteadyProfile> {
        let h0 = p.h0;
        match self {
            Recipe::DeltaHalf => Some(SteadyProfile::Delta {
                varrho: h0 / 2.0,
                h: h0 / 2.0,
            }),
            Recipe::DeltaThreshold => Some(SteadyProfile::Delta { varrho: h0, h: h0 }),
            Recipe::NutrientOnly => Some(SteadyProfile::Zero),
            Recipe::ContinuousHalf => Some(SteadyProfile::Continuous { rho: h0 / (2.0 * p.zw) }),
            Recipe::ContinuousThreshold => Some(SteadyProfile::Continuous { rho: h0 / p.zw }),
            _ => None,
        }
    }

    /// Steady total density for the limit model.
    pub fn steady_total(self, p: &ModelParams) -> Option<f64> {
        match self.steady(p)? {
            SteadyProfile::Delta { varrho, .. } => Some(varrho),
            SteadyProfile::Continuous { rho } => Some(rho * p.zw),
            SteadyProfile::Zero => Some(0.0),
        }
    }
}

/// `cos(6 pi x / Lx) cos(8 pi y / Ly)`
fn wave(grid: &GridSpec, x: f64, y: f64) -> f64 {
    (6.0 * PI * x / grid.lx).cos() * (8.0 * PI * y / grid.ly).cos()
}

fn in_box(x: f64, y: f64, hx: f64, hy: f64) -> bool {
    let eps = 1e-9;
    x.abs() <= hx + eps && y.abs() <= hy + eps
}

fn cross(x: f64, y: f64, arm: f64) -> bool {
    in_box(x, y, arm, 1.0) || in_box(x, y, 1.0, arm)
}

/// Total density placed on the top level `z = Zw`.
fn top_density(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> InternalField3D {
    let mut rho = InternalField3D::zeros(grid);
    for i in 0..grid.nx1() {
        for j in 0..grid.ny1() {
            rho.set(i, j, grid.nz, f(grid.x(i), grid.y(j)) / grid.dz);
        }
    }
    rho
}

fn delta_plus_wave(grid: &GridSpec, p: &ModelParams, weight: f64, amp: f64) -> InternalField3D {
    let k = round_to_grid(chez_level(weight, p), grid.dz).index.min(grid.nz);
    let mut rho = InternalField3D::from_fn(grid, |x, y, z| amp * wave(grid, x, y) * (2.0 * PI * z / grid.zw).sin());
    for i in 0..grid.nx1() {
        for j in 0..grid.ny1() {
            let v = rho.get(i, j, k) + weight / grid.dz;
            rho.set(i, j, k, v);
        }
    }
    rho
}

pub fn build_kinetic(recipe: Recipe, amp: f64, grid: &GridSpec, p: &ModelParams) -> CliResult<SimState> {
    recipe.check_grid(grid)?;
    if !amp.is_finite() {
        return Err(CliError::Config(format!("amplitude {amp} is not finite")));
    }
    let h0 = p.h0;
    let zw = grid.zw;
    let sine = |z: f64| (2.0 * PI * z / zw).sin();
    let zeros = || ScalarField2D::zeros(grid);
    let ones = || ScalarField2D::constant(grid, 1.0);
    let (rho, h, n) = match recipe {
        Recipe::CosineColony => {
            let bump = |x: f64, y: f64| h0 + amp * ((2.0 * PI * x).cos() + (2.0 * PI * y).cos());
            let k = round_to_grid(chez_level(h0, p), grid.dz).index.min(grid.nz);
            let mut rho = InternalField3D::zeros(grid);
            for i in 0..grid.nx1() {
                for j in 0..grid.ny1() {
                    rho.set(i, j, k, bump(grid.x(i), grid.y(j)) / grid.dz);
                }
            }
            (rho, ScalarField2D::from_fn(grid, bump), zeros())
        }
        Recipe::DeltaHalf | Recipe::DeltaThreshold => {
            let w = if recipe == Recipe::DeltaHalf { h0 / 2.0 } else { h0 };
            let h = ScalarField2D::from_fn(grid, |x, y| w + amp * wave(grid, x, y));
            (delta_plus_wave(grid, p, w, amp), h, zeros())
        }
        Recipe::ContinuousHalf | Recipe::ContinuousThreshold => {
            let w = if recipe == Recipe::ContinuousHalf { h0 / 2.0 } else { h0 };
            let rho = InternalField3D::from_fn(grid, |x, y, z| w / zw + amp * wave(grid, x, y) * sine(z));
            let h = ScalarField2D::from_fn(grid, |x, y| w + amp * wave(grid, x, y));
            (rho, h, zeros())
        }
        Recipe::NutrientOnly => {
            let rho = InternalField3D::from_fn(grid, |x, y, z| (amp * wave(grid, x, y) * sine(z)).abs());
            let h = ScalarField2D::from_fn(grid, |x, y| (amp * wave(grid, x, y)).abs());
            let n = ScalarField2D::from_fn(grid, |x, y| 0.5 + amp * wave(grid, x, y));
            (rho, h, n)
        }
        Recipe::GaussCross => {
            let rho = top_density(grid, |x, y| {
                if !in_box(x, y, 10.0, 10.0) {
                    return 0.0;
                }
                let a = (-0.5 * (x * x / 16.0 + y * y)).exp();
                let b = (-0.5 * (x * x + y * y / 16.0)).exp();
                amp / (8.0 * PI) * (a + b)
            });
            (rho, zeros(), ones())
        }
        Recipe::CrossShort | Recipe::CrossLong => {
            let arm = if recipe == Recipe::CrossShort { 5.0 } else { 10.0 };
            let rho = top_density(grid, |x, y| if cross(x, y, arm) { amp / (2.0 * PI) } else { 0.0 });
            (rho, zeros(), ones())
        }
        Recipe::TwoRings => {
            let ly = grid.ly;
            let rho = top_density(grid, |x, y| {
                let c = if y >= 0.0 { ly } else { -ly };
                amp / (8.0 * PI) * (-0.125 * (x * x + (y - c) * (y - c))).exp()
            });
            (rho, zeros(), ones())
        }
    };
    let mut state = SimState::new(rho, h, n);
    state.apply_boundary(grid);
    Ok(state)
}

/// The limit-model state with the same total density, AHL and nutrient.
pub fn build_limit(recipe: Recipe, amp: f64, grid: &GridSpec, p: &ModelParams) -> CliResult<AdmState> {
    let s = build_kinetic(recipe, amp, grid, p)?;
    Ok(AdmState::new(total_density(&s.rho, grid), s.h, s.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pbdm_core::grid::{make_grid, Extents, MeshSizes};

    fn case_grid() -> GridSpec {
        make_grid(
            Extents {
                lx: 0.5,
                ly: 0.5,
                zw: 1.23,
            },
            MeshSizes {
                dx: 0.02,
                dy: 0.02,
                dz: 0.03,
                dt: 1e-4,
            },
            YBoundary::NoFlux,
        )
        .unwrap()
    }

    #[test]
    fn delta_half_matches_the_recipe_fields() {
        let g = case_grid();
        let p = ModelParams::stability_study();
        let s = build_kinetic(Recipe::DeltaHalf, 0.02, &g, &p).unwrap();
        let k = round_to_grid(chez_level(2.5, &p), g.dz).index;
        assert_eq!(k, g.nz);
        for (i, j) in [(3, 7), (25, 25), (40, 11)] {
            let (x, y) = (g.x(i), g.y(j));
            let w = (6.0 * PI * x / 0.5).cos() * (8.0 * PI * y / 0.5).cos();
            assert!((s.h.get(i, j) - (2.5 + 0.02 * w)).abs() < 1e-14);
            assert_eq!(s.n.get(i, j), 0.0);
            let top = 2.5 / g.dz + 0.02 * w * (2.0 * PI * g.z(k) / 1.23).sin();
            assert!((s.rho.get(i, j, k) - top).abs() < 1e-12);
            let mid = 0.02 * w * (2.0 * PI * g.z(10) / 1.23).sin();
            assert!((s.rho.get(i, j, 10) - mid).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_amplitude_is_the_steady_state() {
        let g = case_grid();
        let p = ModelParams::stability_study();
        for r in [
            Recipe::DeltaHalf,
            Recipe::DeltaThreshold,
            Recipe::ContinuousHalf,
            Recipe::NutrientOnly,
        ] {
            let s = build_kinetic(r, 0.0, &g, &p).unwrap();
            let bar = r.steady(&p).unwrap().discretize(&g, &p);
            assert_eq!(s.rho, bar, "{r:?}");
        }
    }

    #[test]
    fn short_cross_mass() {
        let g = make_grid(
            Extents {
                lx: 6.0,
                ly: 6.0,
                zw: 1.23,
            },
            MeshSizes {
                dx: 0.02,
                dy: 0.02,
                dz: 0.03,
                dt: 1e-4,
            },
            YBoundary::NoFlux,
        )
        .unwrap();
        let p = ModelParams::patterns();
        let s = build_kinetic(Recipe::CrossShort, 1.0, &g, &p).unwrap();
        let varrho = total_density(&s.rho, &g);
        let mass = varrho.owned_sum(&g) * g.dx * g.dy;
        let want = 36.0 / (2.0 * PI);
        assert!((mass - want).abs() < 0.02 * want, "{mass} vs {want}");
        assert!(s.rho.column(150, 150)[..g.nz].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_rings_needs_periodic_y() {
        let g = case_grid();
        let p = ModelParams::patterns();
        assert!(matches!(
            build_kinetic(Recipe::TwoRings, 1.0, &g, &p),
            Err(CliError::Config(_))
        ));
    }
}
