//! Run loops for single trajectories, kappa sweeps, refinement studies and
//! stability tables, plus the artifact-writing driver around them.

use std::path::{Path, PathBuf};

use pbdm_core::adm::{step_adm, AdmState};
use pbdm_core::diagnostics::{
    convergence_order, deviation_adm, deviation_pbdm, relative_error, relative_error_slices, restrict, DeviationSeries,
};
use pbdm_core::field::total_density_with;
use pbdm_core::grid::MeshSizes;
use pbdm_core::pbdm::{check_step_restriction, step_pbdm};
use pbdm_core::stability::{sweep_stability, Case, SteadyState, ZSample};
use pbdm_core::{Exec, GridSpec, InternalField3D, ModelParams, PbdmError, SimState};

use crate::config::{Experiment, ExperimentConfig, Model};
use crate::output::{self, DumpWriter, ErrorRow, Manifest, StabilityRow};
use crate::recipes::{build_kinetic, build_limit};
use crate::{fld, CliError, CliResult};

/// Called with every state whose step is a positive multiple of the cadence.
pub type Snapshot<'a, S> = &'a mut dyn FnMut(&S) -> CliResult<()>;

#[derive(Debug, Clone)]
pub struct Outcome<S> {
    pub state: S,
    /// Present when the recipe defines a steady state to measure against.
    pub deviation: Option<DeviationSeries>,
}

fn step_err(step: u64) -> impl FnOnce(PbdmError) -> CliError {
    move |source| CliError::Step { step, source }
}

/// Advances the kinetic model from the configured recipe to `t_end`.
pub fn kinetic_run(
    cfg: &ExperimentConfig,
    grid: &GridSpec,
    kappa: f64,
    exec: Exec,
    snapshot: Snapshot<'_, SimState>,
) -> CliResult<Outcome<SimState>> {
    check_step_restriction(grid)?;
    let p = cfg.params().with_kappa(kappa);
    let steps = cfg.steps_for(grid.dt)?;
    let every = cfg.run.cadence.max(1);
    let mut state = build_kinetic(cfg.initial.recipe, cfg.initial.amplitude, grid, &p)?;
    let rho0 = state.rho.clone();
    let steady = cfg.initial.recipe.steady(&p).map(|s| s.discretize(grid, &p));
    let sample = |s: &SimState, series: &mut Option<DeviationSeries>, bar: &Option<InternalField3D>| {
        if let (Some(series), Some(bar)) = (series.as_mut(), bar) {
            series.push(s.step as f64 * grid.dt, deviation_pbdm(&s.rho, bar, &rho0)?);
        }
        Ok::<_, CliError>(())
    };
    let mut series = match &steady {
        Some(bar) if deviation_pbdm(&rho0, bar, &rho0).is_ok() => Some(DeviationSeries::default()),
        _ => None,
    };
    sample(&state, &mut series, &steady)?;
    for _ in 0..steps {
        state = step_pbdm(&state, grid, &p, exec).map_err(step_err(state.step + 1))?;
        if state.step % every == 0 {
            sample(&state, &mut series, &steady)?;
            snapshot(&state)?;
        }
    }
    Ok(Outcome {
        state,
        deviation: series,
    })
}

/// Advances the limit model from the configured recipe to `t_end`.
pub fn limit_run(
    cfg: &ExperimentConfig,
    grid: &GridSpec,
    exec: Exec,
    snapshot: Snapshot<'_, AdmState>,
) -> CliResult<Outcome<AdmState>> {
    let p = cfg.params();
    let steps = cfg.steps_for(grid.dt)?;
    let every = cfg.run.cadence.max(1);
    let mut state = build_limit(cfg.initial.recipe, cfg.initial.amplitude, grid, &p)?;
    let v0 = state.varrho.clone();
    let bar = cfg.initial.recipe.steady_total(&p);
    let mut series = match bar {
        Some(b) if deviation_adm(&v0, b, &v0).is_ok() => Some(DeviationSeries::default()),
        _ => None,
    };
    let sample = |s: &AdmState, series: &mut Option<DeviationSeries>| {
        if let (Some(series), Some(b)) = (series.as_mut(), bar) {
            series.push(s.step as f64 * grid.dt, deviation_adm(&s.varrho, b, &v0)?);
        }
        Ok::<_, CliError>(())
    };
    sample(&state, &mut series)?;
    for _ in 0..steps {
        state = step_adm(&state, grid, &p, exec).map_err(step_err(state.step + 1))?;
        if state.step % every == 0 {
            sample(&state, &mut series)?;
            snapshot(&state)?;
        }
    }
    Ok(Outcome {
        state,
        deviation: series,
    })
}

/// Relative L2 gap between the kinetic total density at each kappa and the
/// limit model, both at `t_end`.
pub fn kappa_gaps(
    cfg: &ExperimentConfig,
    exec: Exec,
    kinetic_snapshot: &mut dyn FnMut(f64, &SimState) -> CliResult<()>,
    limit_snapshot: Snapshot<'_, AdmState>,
) -> CliResult<Vec<(f64, f64)>> {
    let grid = cfg.grid()?;
    let limit = limit_run(cfg, &grid, exec, limit_snapshot)?.state;
    let mut rows = Vec::new();
    for kappa in cfg.kappas() {
        let out = kinetic_run(cfg, &grid, kappa, exec, &mut |s| kinetic_snapshot(kappa, s))?;
        let varrho = total_density_with(&out.state.rho, &grid, exec);
        rows.push((
            kappa,
            relative_error_slices(varrho.as_slice(), limit.varrho.as_slice())?,
        ));
    }
    Ok(rows)
}

fn coarse_grid(reference: &GridSpec, dx: f64, dz: f64, dt: f64) -> CliResult<GridSpec> {
    let yb = reference.y_boundary;
    Ok(pbdm_core::grid::make_grid(
        reference.extents(),
        MeshSizes { dx, dy: dx, dz, dt },
        yb,
    )?)
}

/// Errors of coarse kinetic runs against a fine reference, restricted to
/// the shared nodes. Meshes that cannot be built keep a note and no error.
pub fn convergence_study(cfg: &ExperimentConfig, exec: Exec) -> CliResult<Vec<ErrorRow>> {
    let conv = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| CliError::Config("no [convergence] section".into()))?;
    let base = cfg.grid()?;
    let fine_dt = conv.dt_factor * conv.ref_dx * conv.ref_dx;
    let ref_grid = coarse_grid(&base, conv.ref_dx, conv.ref_dz, fine_dt)?;
    let mut rows = Vec::new();
    for kappa in cfg.kappas() {
        let reference = kinetic_run(cfg, &ref_grid, kappa, exec, &mut |_| Ok(()))?.state.rho;
        for (axis, meshes) in [("dx", &conv.dxs), ("dz", &conv.dzs)] {
            let mut prev: Option<f64> = None;
            for &m in meshes.iter() {
                let (dx, dz) = if axis == "dx" {
                    (m, conv.ref_dz)
                } else {
                    (conv.ref_dx, m)
                };
                let attempt = || -> CliResult<f64> {
                    let g = coarse_grid(&base, dx, dz, conv.dt_factor * dx * dx)?;
                    let coarse = kinetic_run(cfg, &g, kappa, exec, &mut |_| Ok(()))?.state.rho;
                    Ok(relative_error(&coarse, &restrict(&reference, &ref_grid, &g)?)?)
                };
                let (error, note) = match attempt() {
                    Ok(e) => (Some(e), None),
                    Err(e @ (CliError::Config(_) | CliError::Core(_))) => (None, Some(e.to_string())),
                    Err(e) => return Err(e),
                };
                let order = match (prev, error) {
                    (Some(f), Some(c)) => convergence_order(f, c).ok(),
                    _ => None,
                };
                prev = error;
                rows.push(ErrorRow {
                    kappa,
                    axis,
                    mesh: m,
                    error,
                    order,
                    note,
                });
            }
        }
    }
    Ok(rows)
}

/// Default homogeneous state analysed for each case.
pub fn default_steady(case: Case, p: &ModelParams) -> SteadyState {
    match case {
        Case::A1 | Case::B1 | Case::AdmHOffThreshold => SteadyState::colonized(p.h0 / 2.0, p),
        Case::A2 | Case::B2 | Case::AdmN => SteadyState::empty(0.5),
        Case::AdmHThreshold => SteadyState::colonized(p.h0 * p.beta / p.alpha, p),
    }
}

/// Eigenvalue table over `K = kmax i / points`, `i = 1..=points`, with the
/// z-dependent families at their worst level on a `dz` grid.
pub fn stability_table(case: Case, kmax: f64, points: usize, p: &ModelParams, dz: f64) -> CliResult<Vec<StabilityRow>> {
    if !(kmax > 0.0 && kmax.is_finite()) || points == 0 {
        return Err(CliError::Config(format!(
            "need kmax > 0 and points > 0, got {kmax}, {points}"
        )));
    }
    let ks: Vec<f64> = (1..=points).map(|i| kmax * i as f64 / points as f64).collect();
    let sweep = sweep_stability(case, &ks, p, default_steady(case, p), 1.0, ZSample::WorstOnGrid { dz })?;
    let mut rows = Vec::new();
    for row in sweep {
        for e in &row.report.eigenvalues {
            rows.push(StabilityRow {
                case: case.name().to_string(),
                k: row.k,
                family: e.family.clone(),
                re: e.value.re,
                im: e.value.im,
                class: row.report.class.as_str().to_string(),
            });
        }
    }
    Ok(rows)
}

fn kappa_dir(out: &Path, kappa: f64) -> PathBuf {
    out.join(format!("kappa_{kappa}"))
}

fn kinetic_dumps<'w>(writer: Option<&'w DumpWriter>, dir: PathBuf) -> impl FnMut(&SimState) -> CliResult<()> + 'w {
    move |s: &SimState| {
        let Some(w) = writer else { return Ok(()) };
        let (a, b, c) = s.rho.shape();
        w.push(
            dir.join(format!("rho_{}.fld", s.step)),
            vec![a, b, c],
            s.rho.as_slice().to_vec(),
        )?;
        w.push(
            dir.join(format!("h_{}.fld", s.step)),
            vec![a, b],
            s.h.as_slice().to_vec(),
        )?;
        w.push(
            dir.join(format!("n_{}.fld", s.step)),
            vec![a, b],
            s.n.as_slice().to_vec(),
        )
    }
}

fn limit_dumps<'w>(writer: Option<&'w DumpWriter>, dir: PathBuf) -> impl FnMut(&AdmState) -> CliResult<()> + 'w {
    move |s: &AdmState| {
        let Some(w) = writer else { return Ok(()) };
        let (a, b) = s.varrho.shape();
        w.push(
            dir.join(format!("varrho_{}.fld", s.step)),
            vec![a, b],
            s.varrho.as_slice().to_vec(),
        )?;
        w.push(
            dir.join(format!("h_{}.fld", s.step)),
            vec![a, b],
            s.h.as_slice().to_vec(),
        )?;
        w.push(
            dir.join(format!("n_{}.fld", s.step)),
            vec![a, b],
            s.n.as_slice().to_vec(),
        )
    }
}

fn write_deviation(dir: &Path, series: &Option<DeviationSeries>, files: &mut Vec<PathBuf>) -> CliResult<()> {
    if let Some(s) = series {
        let path = dir.join("deviation.csv");
        output::write_text(&path, &output::deviation_csv(s))?;
        files.push(path);
    }
    Ok(())
}

fn run_body(
    cfg: &ExperimentConfig,
    out: &Path,
    exec: Exec,
    writer: Option<&DumpWriter>,
    manifest: &mut Manifest,
) -> CliResult<()> {
    let grid = cfg.grid()?;
    let files = &mut manifest.files;
    match (cfg.experiment, cfg.model) {
        (Experiment::Trajectory, Model::Adm) => {
            let o = limit_run(cfg, &grid, exec, &mut limit_dumps(writer, out.to_path_buf()))?;
            write_deviation(out, &o.deviation, files)?;
            let path = out.join("varrho_final.csv");
            fld::write_csv_2d(&path, &o.state.varrho, &grid)?;
            files.push(path);
        }
        (Experiment::Trajectory, Model::Pbdm) => {
            let kappas = cfg.kappas();
            for &kappa in &kappas {
                let dir = if kappas.len() == 1 {
                    out.to_path_buf()
                } else {
                    kappa_dir(out, kappa)
                };
                output::create_dir(&dir)?;
                let o = kinetic_run(cfg, &grid, kappa, exec, &mut kinetic_dumps(writer, dir.clone()))?;
                write_deviation(&dir, &o.deviation, files)?;
                let path = dir.join("varrho_final.csv");
                fld::write_csv_2d(&path, &total_density_with(&o.state.rho, &grid, exec), &grid)?;
                files.push(path);
            }
        }
        (Experiment::KappaGap, _) => {
            let adm_dir = out.join("adm");
            output::create_dir(&adm_dir)?;
            for &k in &cfg.kappas() {
                output::create_dir(&kappa_dir(out, k))?;
            }
            let mut kin = |kappa: f64, s: &SimState| kinetic_dumps(writer, kappa_dir(out, kappa))(s);
            let rows = kappa_gaps(cfg, exec, &mut kin, &mut limit_dumps(writer, adm_dir))?;
            let path = out.join("gap.csv");
            output::write_text(&path, &output::gap_csv(&rows))?;
            files.push(path);
        }
        (Experiment::Convergence, _) => {
            let rows = convergence_study(cfg, exec)?;
            for r in &rows {
                if let Some(n) = &r.note {
                    manifest
                        .notes
                        .push(format!("kappa {} {} = {} skipped: {n}", r.kappa, r.axis, r.mesh));
                }
            }
            let path = out.join("errors.csv");
            output::write_text(&path, &output::errors_csv(&rows))?;
            manifest.files.push(path);
        }
    }
    Ok(())
}

/// Runs an experiment into `out`: resolved config, dumps at the cadence,
/// CSV tables and a manifest. On failure the manifest carries
/// `status = failed` and partial outputs stay on disk.
pub fn run(cfg: &ExperimentConfig, out: &Path, exec: Exec) -> CliResult<Manifest> {
    cfg.validate()?;
    output::create_dir(out)?;
    output::write_text(&out.join("config.toml"), &cfg.to_toml()?)?;
    let mut manifest = Manifest {
        name: cfg.name.clone(),
        status: "running".into(),
        ..Default::default()
    };
    output::write_text(&out.join("manifest.txt"), &manifest.render(out))?;
    let writer = cfg.run.dumps.then(DumpWriter::spawn);
    let mut result = run_body(cfg, out, exec, writer.as_ref(), &mut manifest);
    match writer.map(DumpWriter::finish).transpose() {
        Ok(w) => manifest.files.extend(w.unwrap_or_default()),
        Err(e) if result.is_ok() => result = Err(e),
        Err(_) => {}
    }
    match &result {
        Ok(()) => manifest.status = "complete".into(),
        Err(e) => {
            manifest.status = "failed".into();
            manifest.failed_step = e.failed_step();
            manifest.error = Some(e.to_string());
        }
    }
    output::write_text(&out.join("manifest.txt"), &manifest.render(out))?;
    result.map(|_| manifest)
}

/// Loads the rho dump of a run directory with the highest step, or a dump file directly.
pub fn latest_dump(path: &Path) -> CliResult<fld::Dump> {
    if path.is_file() {
        return fld::read(path);
    }
    let entries = std::fs::read_dir(path).map_err(|e| CliError::io(path, e))?;
    let mut best: Option<(u64, PathBuf)> = None;
    for entry in entries {
        let p = entry.map_err(|e| CliError::io(path, e))?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let step = name
            .strip_suffix(".fld")
            .and_then(|s| s.strip_prefix("rho_").or_else(|| s.strip_prefix("varrho_")))
            .and_then(|s| s.parse::<u64>().ok());
        if let Some(step) = step {
            if best.as_ref().is_none_or(|(b, _)| step > *b) {
                best = Some((step, p));
            }
        }
    }
    let (_, p) = best.ok_or_else(|| CliError::Format(format!("no density dumps in {}", path.display())))?;
    fld::read(&p)
}

/// Relative error of `a` against `b`; `b` may be finer if its node counts
/// nest those of `a` (sizes minus one divide).
pub fn compare_dumps(a: &fld::Dump, b: &fld::Dump) -> CliResult<f64> {
    if a.dims.len() != b.dims.len() {
        return Err(CliError::Format(format!(
            "ranks {} and {} differ",
            a.dims.len(),
            b.dims.len()
        )));
    }
    let mut ratios = Vec::new();
    for (&ca, &fb) in a.dims.iter().zip(&b.dims) {
        let (ca, fb) = (ca.saturating_sub(1), fb.saturating_sub(1));
        if ca == 0 || fb % ca != 0 {
            return Err(CliError::Format(format!(
                "dims {:?} do not nest in {:?}",
                a.dims, b.dims
            )));
        }
        ratios.push(fb / ca);
    }
    let mut sampled = Vec::with_capacity(a.values.len());
    let mut idx = vec![0usize; a.dims.len()];
    for _ in 0..a.values.len() {
        let mut flat = 0;
        for (d, &i) in idx.iter().enumerate() {
            flat = flat * b.dims[d] + i * ratios[d];
        }
        sampled.push(b.values[flat]);
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < a.dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(relative_error_slices(&a.values, &sampled)?)
}
