//! Named experiment presets at native (full-size) or desk scale.

use pbdm_core::{KvMode, ModelParams};

use crate::config::{
    ConvergenceBlock, Experiment, ExperimentConfig, GridBlock, InitialBlock, Model, ParamsBlock, RunBlock,
};
use crate::recipes::Recipe;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Native,
    Desk,
}

pub const NAMES: [&str; 14] = [
    "fig1",
    "fig2",
    "fig3",
    "caseA1_half",
    "caseA1_h0",
    "caseA2",
    "caseB1_delta_half",
    "caseB1_delta_h0",
    "caseB1_cont_half",
    "caseB1_cont_h0",
    "caseB2",
    "limit_stability",
    "patterns_cross",
    "two_rings",
];

const ZW: f64 = 1.23;

fn square(l: f64, dx: f64, dz: f64, dt: f64) -> GridBlock {
    GridBlock {
        lx: l,
        ly: l,
        zw: ZW,
        dx,
        dy: dx,
        dz,
        dt,
        periodic_y: false,
    }
}

fn run(t_end: f64, cadence: u64, kappas: &[f64]) -> RunBlock {
    RunBlock {
        t_end,
        cadence,
        kappas: kappas.to_vec(),
        seed: 0,
        dumps: true,
    }
}

fn base(name: &str, experiment: Experiment, model: Model, grid: GridBlock, p: ModelParams) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        experiment,
        model,
        grid,
        params: ParamsBlock::from_params(&p),
        initial: InitialBlock {
            recipe: Recipe::CosineColony,
            amplitude: 0.01,
        },
        run: run(1.0, 100, &[]),
        convergence: None,
    }
}

/// The perturbed-steady-state studies share one parameter set and grid.
fn case(name: &str, recipe: Recipe, kv: KvMode, scale: Scale) -> ExperimentConfig {
    let p = ModelParams::stability_study().with_kv_mode(kv);
    let (grid, r) = match scale {
        Scale::Native if name == "caseA1_h0" => (square(20.0, 0.1, 0.03, 0.0025), run(15.0, 100, &[1.0, 8.0])),
        Scale::Native => (square(0.5, 0.01, 0.03, 2.5e-5), run(15.0, 1000, &[1.0, 8.0])),
        Scale::Desk => (square(0.5, 0.02, 0.03, 1e-4), run(2.0, 100, &[1.0, 8.0])),
    };
    let mut c = base(name, Experiment::Trajectory, Model::Pbdm, grid, p);
    c.initial = InitialBlock {
        recipe,
        amplitude: 0.02,
    };
    c.run = r;
    c
}

fn pattern(name: &str, recipe: Recipe, scale: Scale) -> ExperimentConfig {
    let p = ModelParams::patterns();
    let two = recipe == Recipe::TwoRings;
    let (lx, ly, t) = match (scale, two) {
        (Scale::Native, false) => (60.0, 60.0, 20.0),
        (Scale::Native, true) => (60.0, 20.0, 20.0),
        (Scale::Desk, false) => (15.0, 15.0, 5.0),
        (Scale::Desk, true) => (15.0, 5.0, 5.0),
    };
    let grid = GridBlock {
        lx,
        ly,
        zw: ZW,
        dx: 0.1,
        dy: 0.1,
        dz: 0.03,
        dt: 0.0025,
        periodic_y: two,
    };
    let mut c = base(name, Experiment::Trajectory, Model::Pbdm, grid, p);
    c.initial = InitialBlock { recipe, amplitude: 1.0 };
    c.run = run(t, 100, &[1.0]);
    c
}

pub fn preset(name: &str, scale: Scale) -> CliResult<ExperimentConfig> {
    let kappas = [8.0, 16.0, 32.0, 64.0];
    let bio = ModelParams::biological();
    let cfg = match (name, scale) {
        ("fig1" | "fig2", Scale::Desk) => {
            let mut c = base(
                name,
                Experiment::KappaGap,
                Model::Pbdm,
                square(1.0, 0.05, 0.03, 2.5e-4),
                bio,
            );
            c.run = run(1.0, 100, &kappas);
            c
        }
        ("fig1" | "fig2", Scale::Native) => {
            let dz = if name == "fig1" { 0.00375 } else { 0.03 };
            let mut c = base(
                name,
                Experiment::KappaGap,
                Model::Pbdm,
                square(2.0, 0.01, dz, 2.5e-5),
                bio,
            );
            c.run = run(3.0, 1000, &kappas);
            c
        }
        ("fig3", Scale::Native) => {
            let mut c = base(
                name,
                Experiment::Convergence,
                Model::Pbdm,
                square(2.0, 0.01, 0.00375, 2.5e-5),
                bio,
            );
            c.run = run(3.0, 1000, &kappas);
            c.run.dumps = false;
            c.convergence = Some(ConvergenceBlock {
                ref_dx: 0.01,
                ref_dz: 0.00375,
                dxs: vec![0.02, 0.04, 0.08],
                dzs: vec![0.0075, 0.015, 0.03],
                dt_factor: 0.25,
            });
            c
        }
        ("fig3", Scale::Desk) => {
            let dt = 0.25 * 0.0125 * 0.0125;
            let mut c = base(
                name,
                Experiment::Convergence,
                Model::Pbdm,
                square(1.0, 0.0125, 0.0075, dt),
                bio,
            );
            c.run = run(0.05, 10, &[8.0, 64.0]);
            c.run.dumps = false;
            c.convergence = Some(ConvergenceBlock {
                ref_dx: 0.0125,
                ref_dz: 0.0075,
                dxs: vec![0.025, 0.05, 0.1],
                dzs: vec![0.015, 0.03, 0.06],
                dt_factor: 0.25,
            });
            c
        }
        ("caseA1_half", s) => case(name, Recipe::DeltaHalf, KvMode::ConstantR, s),
        ("caseA1_h0", s) => case(name, Recipe::DeltaThreshold, KvMode::ConstantR, s),
        ("caseA2", s) => case(name, Recipe::NutrientOnly, KvMode::ConstantR, s),
        ("caseB1_delta_half", s) => case(name, Recipe::DeltaHalf, KvMode::RTimesN, s),
        ("caseB1_delta_h0", s) => case(name, Recipe::DeltaThreshold, KvMode::RTimesN, s),
        ("caseB1_cont_half", s) => case(name, Recipe::ContinuousHalf, KvMode::RTimesN, s),
        ("caseB1_cont_h0", s) => case(name, Recipe::ContinuousThreshold, KvMode::RTimesN, s),
        ("caseB2", s) => case(name, Recipe::NutrientOnly, KvMode::RTimesN, s),
        ("limit_stability", s) => {
            let mut c = case(name, Recipe::DeltaHalf, KvMode::ConstantR, s);
            c.model = Model::Adm;
            c.run.kappas.clear();
            c
        }
        ("patterns_cross", s) => pattern(name, Recipe::CrossShort, s),
        ("two_rings", s) => pattern(name, Recipe::TwoRings, s),
        _ => return Err(CliError::UnknownPreset(name.to_string())),
    };
    Ok(cfg)
}
