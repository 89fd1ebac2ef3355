//! Experiment configuration: a flat TOML document with one section per
//! concern.

use std::path::Path;

use pbdm_core::grid::{make_grid, Extents, MeshSizes};
use pbdm_core::{DiffusionProfile, GridSpec, KvMode, ModelParams, YBoundary};
use serde::{Deserialize, Serialize};

use crate::recipes::Recipe;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Pbdm,
    Adm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// One trajectory per kappa in `run.kappas` (or `params.kappa`).
    Trajectory,
    /// Kinetic runs over `run.kappas` plus one limit run; writes the gap table.
    KappaGap,
    /// Mesh-refinement study against a fine reference run.
    Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KvTag {
    ConstantR,
    RTimesN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileTag {
    Linear,
    Power30,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub lx: f64,
    pub ly: f64,
    pub zw: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dt: f64,
    pub periodic_y: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub r: f64,
    pub kappa: f64,
    pub dh: f64,
    pub dn: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub h0: f64,
    pub mu: f64,
    pub kv_mode: KvTag,
    pub profile: ProfileTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub recipe: Recipe,
    /// Perturbation amplitude; zero gives the exact steady state.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub t_end: f64,
    /// Steps between snapshots and deviation samples.
    pub cadence: u64,
    #[serde(default)]
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Write binary field dumps at every snapshot.
    #[serde(default = "yes")]
    pub dumps: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceBlock {
    pub ref_dx: f64,
    pub ref_dz: f64,
    /// Coarse dx values run at the reference dz.
    pub dxs: Vec<f64>,
    /// Coarse dz values run at the reference dx.
    pub dzs: Vec<f64>,
    /// `dt = dt_factor * dx^2`.
    pub dt_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: Experiment,
    pub model: Model,
    pub grid: GridBlock,
    pub params: ParamsBlock,
    pub initial: InitialBlock,
    pub run: RunBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceBlock>,
}

impl From<KvTag> for KvMode {
    fn from(t: KvTag) -> Self {
        match t {
            KvTag::ConstantR => KvMode::ConstantR,
            KvTag::RTimesN => KvMode::RTimesN,
        }
    }
}

impl From<ProfileTag> for DiffusionProfile {
    fn from(t: ProfileTag) -> Self {
        match t {
            ProfileTag::Linear => DiffusionProfile::Linear,
            ProfileTag::Power30 => DiffusionProfile::Power30,
        }
    }
}

impl ParamsBlock {
    pub fn from_params(p: &ModelParams) -> Self {
        Self {
            r: p.r,
            kappa: p.kappa,
            dh: p.dh,
            dn: p.dn,
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            h0: p.h0,
            mu: p.mu,
            kv_mode: match p.kv_mode {
                KvMode::ConstantR => KvTag::ConstantR,
                KvMode::RTimesN => KvTag::RTimesN,
            },
            profile: match p.profile {
                DiffusionProfile::Linear => ProfileTag::Linear,
                DiffusionProfile::Power30 => ProfileTag::Power30,
            },
        }
    }

    pub fn to_params(&self, zw: f64) -> ModelParams {
        ModelParams {
            r: self.r,
            kappa: self.kappa,
            dh: self.dh,
            dn: self.dn,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            h0: self.h0,
            mu: self.mu,
            zw,
            kv_mode: self.kv_mode.into(),
            profile: self.profile.into(),
        }
    }
}

impl GridBlock {
    pub fn to_grid(&self) -> CliResult<GridSpec> {
        let yb = if self.periodic_y {
            YBoundary::Periodic
        } else {
            YBoundary::NoFlux
        };
        Ok(make_grid(
            Extents {
                lx: self.lx,
                ly: self.ly,
                zw: self.zw,
            },
            MeshSizes {
                dx: self.dx,
                dy: self.dy,
                dz: self.dz,
                dt: self.dt,
            },
            yb,
        )?)
    }
}

impl ExperimentConfig {
    pub fn grid(&self) -> CliResult<GridSpec> {
        self.grid.to_grid()
    }

    pub fn params(&self) -> ModelParams {
        self.params.to_params(self.grid.zw)
    }

    /// Kappa values to run; falls back to `params.kappa`.
    pub fn kappas(&self) -> Vec<f64> {
        if self.run.kappas.is_empty() {
            vec![self.params.kappa]
        } else {
            self.run.kappas.clone()
        }
    }

    /// Number of steps to reach `t_end` at the grid's `dt`.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn steps_for(&self, dt: f64) -> CliResult<u64> {
        let t = self.run.t_end;
        let steps = (t / dt).round();
        if !(steps >= 1.0) || (steps * dt - t).abs() > 1e-9 * t {
            return Err(CliError::Config(format!(
                "t_end = {t} is not a whole number of steps of {dt}"
            )));
        }
        Ok(steps as u64)
    }

    pub fn validate(&self) -> CliResult<()> {
        let grid = self.grid()?;
        self.params().validate()?;
        if !(self.run.t_end > 0.0 && self.run.t_end.is_finite()) {
            return Err(CliError::Config(format!("t_end = {} must be positive", self.run.t_end)));
        }
        let steps = self.steps_for(grid.dt)?;
        if self.run.cadence == 0 || steps % self.run.cadence != 0 {
            return Err(CliError::Config(format!(
                "cadence {} does not divide the {steps} steps",
                self.run.cadence
            )));
        }
        if self.run.kappas.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(CliError::Config("kappa list entries must be positive".into()));
        }
        self.initial.recipe.check_grid(&grid)?;
        match self.experiment {
            Experiment::KappaGap if self.run.kappas.is_empty() => {
                return Err(CliError::Config("a kappa sweep needs run.kappas".into()));
            }
            Experiment::Convergence => {
                let c = self
                    .convergence
                    .as_ref()
                    .ok_or_else(|| CliError::Config("convergence study needs a [convergence] section".into()))?;
                if c.dxs.is_empty() && c.dzs.is_empty() {
                    return Err(CliError::Config("convergence study has no coarse meshes".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }
}
