//! Campaign plumbing: resolves a [`CampaignSpec`] from flags, config file,
//! and environment, runs the requested campaign on a worker pool, and writes
//! deterministic reports (CSV rows in trial order, JSON summary).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use gqm::config::Config;
use gqm::hilbert::{random_hermitian, random_state, HermitianOperator, StateVector};
use gqm::pointwise::{energy_density, map_differential, verify_identity};
use gqm::surface::{
    energy_identity_integral, harmonic_relax, perturb, rational_curve_sample, total_energy,
    total_symplectic_area, Grid,
};
use gqm::uncertainty::rs_check;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Robertson-Schrodinger inequality over random triples
    RsVerify,
    /// Pointwise energy identity over random triples
    PointIdentity,
    /// Integrated energy identity over a refinement ladder
    SurfaceIdentity,
    /// Projected gradient descent toward the symplectic floor
    Relax,
    /// Symplectic-area spread under boundary-fixed perturbations
    Invariance,
}

impl Mode {
    fn needs_state_space(self) -> bool {
        matches!(self, Mode::RsVerify | Mode::PointIdentity)
    }
}

/// JSON config file; every field optional, explicit flags win.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSpec {
    mode: Option<Mode>,
    dim: Option<usize>,
    trials: Option<u64>,
    seed: Option<u64>,
    hbar: Option<f64>,
    grid_n: Option<Vec<usize>>,
    grid_radius: Option<f64>,
    degree: Option<u32>,
    amplitude: Option<f64>,
    steps: Option<usize>,
    step_size: Option<f64>,
    output_path: Option<PathBuf>,
    tol_eq: Option<f64>,
    same_operator: Option<bool>,
}

/// Fully resolved campaign parameters, embedded into every summary.
#[derive(Serialize)]
pub struct CampaignSpec {
    pub mode: Mode,
    pub dim: usize,
    pub trials: u64,
    pub seed: u64,
    pub hbar: f64,
    pub grid_n: Vec<usize>,
    pub grid_radius: f64,
    pub degree: u32,
    pub amplitude: f64,
    pub steps: usize,
    pub step_size: f64,
    pub output_path: Option<PathBuf>,
    pub tol_eq: f64,
    pub same_operator: bool,
}

impl CampaignSpec {
    /// Merge precedence per knob: `GQM_TOL_EQ` env var (tolerance only),
    /// then explicit flags, then the config file, then built-in defaults.
    #[allow(clippy::too_many_arguments)]
    pub fn resolve(
        mode: Option<Mode>,
        dim: Option<usize>,
        trials: Option<u64>,
        seed: Option<u64>,
        hbar: Option<f64>,
        grid_n: Option<Vec<usize>>,
        grid_radius: Option<f64>,
        degree: Option<u32>,
        amplitude: Option<f64>,
        steps: Option<usize>,
        step_size: Option<f64>,
        out: Option<PathBuf>,
        config: Option<&Path>,
        same_operator: bool,
    ) -> Result<Self> {
        let file = match config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                serde_json::from_str::<FileSpec>(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))?
            }
            None => FileSpec::default(),
        };
        let env_tol = match std::env::var("GQM_TOL_EQ") {
            Ok(text) => Some(
                text.trim()
                    .parse::<f64>()
                    .context("GQM_TOL_EQ must be a floating-point number")?,
            ),
            Err(std::env::VarError::NotPresent) => None,
            Err(err) => return Err(err).context("reading GQM_TOL_EQ"),
        };
        let mode = mode
            .or(file.mode)
            .context("no mode given; pass --mode or set it in the config file")?;
        let spec = CampaignSpec {
            mode,
            dim: dim.or(file.dim).unwrap_or(2),
            trials: trials.or(file.trials).unwrap_or(match mode {
                Mode::Invariance => 20,
                _ => 1000,
            }),
            seed: seed.or(file.seed).unwrap_or(0),
            hbar: hbar.or(file.hbar).unwrap_or(1.0),
            grid_n: grid_n.or(file.grid_n).unwrap_or_else(|| match mode {
                Mode::SurfaceIdentity => vec![33, 65, 129],
                _ => vec![65],
            }),
            grid_radius: grid_radius.or(file.grid_radius).unwrap_or(4.0),
            degree: degree.or(file.degree).unwrap_or(1),
            amplitude: amplitude.or(file.amplitude).unwrap_or(0.05),
            steps: steps.or(file.steps).unwrap_or(500),
            step_size: step_size.or(file.step_size).unwrap_or(0.1),
            output_path: out.or(file.output_path),
            tol_eq: env_tol.or(file.tol_eq).unwrap_or(Config::default().tol_eq),
            same_operator: same_operator || file.same_operator.unwrap_or(false),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            bail!("trials must be at least 1");
        }
        if self.mode.needs_state_space() && self.dim < 2 {
            bail!("dim must be at least 2 for state-space campaigns");
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            bail!("hbar must be positive and finite, got {}", self.hbar);
        }
        if !(self.tol_eq > 0.0 && self.tol_eq.is_finite()) {
            bail!("tol_eq must be positive and finite, got {}", self.tol_eq);
        }
        if self.grid_n.is_empty() {
            bail!("grid-n needs at least one resolution");
        }
        if self.grid_n.iter().any(|&n| n < 3) {
            bail!("grid resolutions must be at least 3 nodes per axis");
        }
        if self.mode == Mode::SurfaceIdentity && self.grid_n.windows(2).any(|w| w[1] <= w[0]) {
            bail!("surface-identity refinement levels must be strictly increasing");
        }
        if !(self.grid_radius > 0.0 && self.grid_radius.is_finite()) {
            bail!("grid-radius must be positive and finite");
        }
        if self.degree < 1 {
            bail!("degree must be at least 1");
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            bail!("amplitude must be nonnegative and finite");
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            bail!("step-size must be nonnegative and finite");
        }
        Ok(())
    }

    fn library_config(&self) -> Config {
        Config {
            hbar: self.hbar,
            tol_eq: self.tol_eq,
            ..Config::default()
        }
    }

    fn first_grid(&self) -> Result<Grid> {
        Ok(Grid::disk(self.grid_radius, self.grid_n[0])?)
    }
}

#[derive(PartialEq, Eq, Debug)]
pub enum Outcome {
    Pass,
    Violation,
}

pub fn run(spec: &CampaignSpec) -> Result<Outcome> {
    let cfg = spec.library_config();
    cfg.validate()?;
    let reporter = Reporter::new(spec.output_path.as_deref())?;
    let result = match spec.mode {
        Mode::RsVerify => run_rs_verify(spec, &cfg, &reporter),
        Mode::PointIdentity => run_point_identity(spec, &cfg, &reporter),
        Mode::SurfaceIdentity => run_surface_identity(spec, &cfg, &reporter),
        Mode::Relax => run_relax(spec, &cfg, &reporter),
        Mode::Invariance => run_invariance(spec, &cfg, &reporter),
    };
    // leave a summary behind even when a trial errors out mid-campaign,
    // so the report directory always says what happened
    if let Err(err) = &result {
        let _ = reporter.emit_summary(&json!({
            "spec": spec,
            "error": format!("{err:#}"),
            "violation": serde_json::Value::Null,
        }));
    }
    result
}

/// Writes reports into a directory, or to stdout when no directory is set.
struct Reporter {
    dir: Option<PathBuf>,
}

impl Reporter {
    fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(dir) = dir {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating report directory {}", dir.display()))?;
        }
        Ok(Reporter {
            dir: dir.map(Path::to_path_buf),
        })
    }

    fn emit(&self, name: &str, content: &str) -> Result<()> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                fs::write(&path, content)
                    .with_context(|| format!("writing report {}", path.display()))?;
            }
            None => print!("# {name}\n{content}"),
        }
        Ok(())
    }

    fn emit_rows<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<()> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in rows {
            writer.serialize(row)?;
        }
        let bytes = writer.into_inner().context("flushing csv buffer")?;
        self.emit(name, &String::from_utf8(bytes).context("csv output")?)
    }

    fn emit_summary(&self, summary: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(summary)?;
        text.push('\n');
        self.emit("summary.json", &text)
    }
}

/// Deterministic per-trial seed stream: decorrelates neighbouring trial
/// indices while keeping the whole campaign a pure function of the base seed.
fn trial_seed(base: u64, k: u64) -> u64 {
    base ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17)
}

fn trial_triple(
    spec: &CampaignSpec,
    k: u64,
) -> Result<(HermitianOperator, HermitianOperator, StateVector)> {
    let s = trial_seed(spec.seed, k);
    let a = random_hermitian(spec.dim, s.wrapping_mul(3).wrapping_add(1))?;
    let b = if spec.same_operator {
        a.clone()
    } else {
        random_hermitian(spec.dim, s.wrapping_mul(3).wrapping_add(2))?
    };
    let psi = random_state(spec.dim, s.wrapping_mul(3))?;
    Ok((a, b, psi))
}

fn finish(
    reporter: &Reporter,
    summary: serde_json::Value,
    violation: Option<serde_json::Value>,
) -> Result<Outcome> {
    let mut summary = summary;
    summary["violation"] = violation.clone().unwrap_or(serde_json::Value::Null);
    reporter.emit_summary(&summary)?;
    match violation {
        Some(v) => {
            eprintln!("violation: {v}");
            Ok(Outcome::Violation)
        }
        None => Ok(Outcome::Pass),
    }
}

#[derive(Serialize)]
struct RsRow {
    trial: u64,
    lhs_operator: f64,
    rhs_operator: f64,
    lhs_geometric: f64,
    rhs_geometric: f64,
    slack_operator: f64,
    slack_geometric: f64,
    form_gap: f64,
    saturated: bool,
}

fn run_rs_verify(spec: &CampaignSpec, cfg: &Config, reporter: &Reporter) -> Result<Outcome> {
    let rows = (0..spec.trials)
        .into_par_iter()
        .map(|k| {
            let (a, b, psi) = trial_triple(spec, k)?;
            let report = rs_check(&a, &b, &psi, cfg)?;
            Ok(RsRow {
                trial: k,
                lhs_operator: report.lhs_operator,
                rhs_operator: report.rhs_operator,
                lhs_geometric: report.lhs_geometric,
                rhs_geometric: report.rhs_geometric,
                slack_operator: report.slack_operator(),
                slack_geometric: report.slack_geometric(),
                form_gap: report.form_gap(cfg.hbar),
                saturated: report.saturated,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    reporter.emit_rows("trials.csv", &rows)?;

    let tol = spec.tol_eq;
    let violator = rows
        .iter()
        .find(|r| r.slack_operator < -tol || r.slack_geometric < -tol || r.form_gap > tol);
    let min_op = rows
        .iter()
        .map(|r| r.slack_operator)
        .fold(f64::INFINITY, f64::min);
    let min_geo = rows
        .iter()
        .map(|r| r.slack_geometric)
        .fold(f64::INFINITY, f64::min);
    let max_gap = rows.iter().map(|r| r.form_gap).fold(0.0, f64::max);
    let saturated = rows.iter().filter(|r| r.saturated).count();
    let summary = json!({
        "spec": spec,
        "min_slack_operator": min_op,
        "min_slack_geometric": min_geo,
        "max_form_gap": max_gap,
        "saturation_count": saturated,
    });
    finish(reporter, summary, violator.map(|r| json!(r)))
}

#[derive(Serialize)]
struct IdentityRow {
    trial: u64,
    energy_coeff: f64,
    symplectic_coeff: f64,
    dbar_norm_sq: f64,
    residual: f64,
    energy_density: Option<f64>,
    degenerate: bool,
}

fn run_point_identity(spec: &CampaignSpec, cfg: &Config, reporter: &Reporter) -> Result<Outcome> {
    let rows = (0..spec.trials)
        .into_par_iter()
        .map(|k| {
            let (a, b, psi) = trial_triple(spec, k)?;
            let report = verify_identity(&a, &b, &psi, cfg)?;
            let differential = map_differential(&a, &b, &psi, cfg)?;
            Ok(IdentityRow {
                trial: k,
                energy_coeff: report.energy_coeff,
                symplectic_coeff: report.symplectic_coeff,
                dbar_norm_sq: report.dbar_norm_sq,
                residual: report.residual(),
                energy_density: energy_density(&differential, cfg)?,
                degenerate: report.degenerate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    reporter.emit_rows("trials.csv", &rows)?;

    let tol = spec.tol_eq;
    let violator = rows.iter().find(|r| {
        if r.degenerate {
            return false;
        }
        let density_off = r.energy_density.map_or(true, |d| (d - 1.0).abs() > tol);
        r.residual.abs() > tol * (1.0 + r.energy_coeff.abs()) || density_off
    });
    let max_residual = rows
        .iter()
        .filter(|r| !r.degenerate)
        .map(|r| r.residual.abs())
        .fold(0.0, f64::max);
    let degenerate = rows.iter().filter(|r| r.degenerate).count();
    let summary = json!({
        "spec": spec,
        "max_identity_residual": max_residual,
        "degenerate_count": degenerate,
    });
    finish(reporter, summary, violator.map(|r| json!(r)))
}

#[derive(Serialize)]
struct LevelRow {
    n_s: usize,
    n_t: usize,
    energy: f64,
    area: f64,
    symplectic: f64,
    dbar: f64,
}

fn run_surface_identity(spec: &CampaignSpec, cfg: &Config, reporter: &Reporter) -> Result<Outcome> {
    let levels = spec
        .grid_n
        .par_iter()
        .map(|&n| {
            let grid = Grid::disk(spec.grid_radius, n)?;
            let map = rational_curve_sample(spec.degree, grid, 1)?;
            let b = energy_identity_integral(&map, cfg)?;
            Ok((
                LevelRow {
                    n_s: n,
                    n_t: n,
                    energy: b.energy,
                    area: b.area,
                    symplectic: b.symplectic,
                    dbar: b.dbar,
                },
                b.identity_residual(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<&LevelRow> = levels.iter().map(|(row, _)| row).collect();
    reporter.emit_rows("levels.csv", &rows)?;

    // the identity residual must stay nonnegative up to roundoff and
    // shrink under refinement
    let mut violation = None;
    for (row, residual) in &levels {
        if *residual < -spec.tol_eq * (1.0 + row.energy.abs()) {
            violation = Some(json!({"level": row, "residual": residual}));
            break;
        }
    }
    if violation.is_none() {
        for pair in levels.windows(2) {
            let (coarse, fine) = (&pair[0], &pair[1]);
            if fine.1.abs() >= coarse.1.abs() {
                violation = Some(json!({
                    "level": fine.0,
                    "residual": fine.1,
                    "coarser_residual": coarse.1,
                }));
                break;
            }
        }
    }
    let residuals: Vec<f64> = levels.iter().map(|(_, r)| *r).collect();
    let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    let summary = json!({
        "spec": spec,
        "residuals": residuals,
        "refinement_ratios": ratios,
    });
    finish(reporter, summary, violation)
}

#[derive(Serialize)]
struct TraceRow {
    step: usize,
    energy: f64,
}

fn run_relax(spec: &CampaignSpec, cfg: &Config, reporter: &Reporter) -> Result<Outcome> {
    let base = rational_curve_sample(spec.degree, spec.first_grid()?, 1)?;
    let start = if spec.amplitude > 0.0 {
        perturb(&base, spec.amplitude, spec.seed)?
    } else {
        base
    };
    let outcome = harmonic_relax(&start, spec.steps, spec.step_size, cfg)?;
    let rows: Vec<TraceRow> = outcome
        .energy_trace
        .iter()
        .enumerate()
        .map(|(step, &energy)| TraceRow { step, energy })
        .collect();
    reporter.emit_rows("trace.csv", &rows)?;

    let violation = rows.windows(2).find(|w| w[1].energy > w[0].energy).map(
        |w| json!({"step": w[1].step, "energy_before": w[0].energy, "energy_after": w[1].energy}),
    );
    let floor = total_symplectic_area(&outcome.map, cfg)?;
    let final_energy = *outcome.energy_trace.last().unwrap_or(&f64::NAN);
    let summary = json!({
        "spec": spec,
        "initial_energy": outcome.energy_trace.first(),
        "final_energy": final_energy,
        "accepted_steps": outcome.energy_trace.len().saturating_sub(1),
        "symplectic_floor": floor,
        "excess_over_floor": final_energy - floor,
    });
    finish(reporter, summary, violation)
}

#[derive(Serialize)]
struct SpreadRow {
    seed: u64,
    symplectic: f64,
    energy: f64,
    drift: f64,
}

/// Closed-form symplectic area of the degree-d rational curve over a disk
/// of the given radius (polar integration of the pulled-back area form).
fn disk_area_oracle(hbar: f64, degree: u32, radius: f64) -> f64 {
    let d = degree as f64;
    let r2d = radius.powf(2.0 * d);
    2.0 * std::f64::consts::PI * hbar * d * r2d / (1.0 + r2d)
}

fn run_invariance(spec: &CampaignSpec, cfg: &Config, reporter: &Reporter) -> Result<Outcome> {
    let base = rational_curve_sample(spec.degree, spec.first_grid()?, 1)?;
    let base_symplectic = total_symplectic_area(&base, cfg)?;
    let base_energy = total_energy(&base, cfg)?;
    let oracle = disk_area_oracle(cfg.hbar, spec.degree, spec.grid_radius);
    // quadrature residual of the base grid: area changes smaller than this
    // are indistinguishable from discretisation error
    let threshold = (base_symplectic - oracle)
        .abs()
        .max(spec.tol_eq * (1.0 + base_symplectic.abs()));

    let rows = (0..spec.trials)
        .into_par_iter()
        .map(|k| {
            let seed = spec.seed.wrapping_add(k);
            let bumped = perturb(&base, spec.amplitude, seed)?;
            let symplectic = total_symplectic_area(&bumped, cfg)?;
            let energy = total_energy(&bumped, cfg)?;
            Ok(SpreadRow {
                seed,
                symplectic,
                energy,
                drift: symplectic - base_symplectic,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    reporter.emit_rows("trials.csv", &rows)?;

    let violator = rows
        .iter()
        .find(|r| r.drift.abs() >= threshold || r.energy <= base_energy);
    let max_drift = rows.iter().map(|r| r.drift.abs()).fold(0.0, f64::max);
    let summary = json!({
        "spec": spec,
        "base_symplectic": base_symplectic,
        "base_energy": base_energy,
        "oracle": oracle,
        "threshold": threshold,
        "max_drift": max_drift,
    });
    finish(reporter, summary, violator.map(|r| json!(r)))
}
