//! Command-line frontend: figures, tables and run manifests.
//!
//! Exit statuses: 0 success, 1 I/O failure, 2 usage or config error,
//! 3 numeric failure, 4 truncated hunt.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::dimension::{
    box_dimension, build_branch_system, julia_raster, julia_window, pressure_dimension, similarity_raster, BranchSystem,
    DimensionEstimate,
};
use crate::error::Error;
use crate::families::{Complex, FamilyInstance, FamilyKind};
use crate::hunt::{run_hunt, HuntBudget, HuntReport};
use crate::omega::{omega_disks, omega_membership, OmegaSpec};
use crate::potential::escape_time;
use crate::slice::{
    attracting_cycle, auto_windows, b_seed_for, classify, find_anchor, label_components, render_slice, solve_slice,
    Classification, FailureCause, RenderSettings, SliceCell, SliceRaster, SliceSpec, Window,
};
use config::Config;
use output::{csv_bytes, json_bytes, num, write_atomic, write_outputs, Image, RunManifest, CSV_VERSION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::UndefinedInput(_) | Error::Pole(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

pub const EXIT_TRUNCATED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cubiclab", version, about = "Cubic slices, multiplier domains and dimension estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// key=value configuration file with [sections]
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// worker threads (speed only; outputs do not depend on it)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// recorded in the manifest; no command samples randomly
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// override one config key, `section.key=value`
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// escape-time image of one Julia set
    RenderJulia,
    /// raster of a parameter slice, optionally with nested zooms
    RenderSlice,
    /// Ω_{p,q} membership image and disk table
    Omega,
    /// dimension estimates for a family member or a synthetic IFS
    Dim,
    /// finite-depth nested-disk search
    Hunt,
    /// solve and classify one slice point
    SolveSlice,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::RenderJulia => "render-julia",
            Command::RenderSlice => "render-slice",
            Command::Omega => "omega",
            Command::Dim => "dim",
            Command::Hunt => "hunt",
            Command::SolveSlice => "solve-slice",
        }
    }

    fn section(self) -> &'static str {
        match self {
            Command::RenderJulia => "julia",
            Command::RenderSlice => "slice",
            Command::Omega => "omega",
            Command::Dim => "dim",
            Command::Hunt => "hunt",
            Command::SolveSlice => "solve",
        }
    }
}

/// What a command produced, before anything touches the disk.
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: serde_json::Value,
    pub palette: BTreeMap<String, String>,
    pub truncated: bool,
}

/// Parses `args` (program name first), runs the command, returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("cubiclab {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        let (lhs, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects section.key=value, got `{o}`")))?;
        let (section, key) = lhs
            .trim()
            .split_once('.')
            .ok_or_else(|| CliError::Usage(format!("--set expects section.key=value, got `{o}`")))?;
        cfg.set(section, key, value.trim())?;
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = load_config(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // a second build in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    let outcome = execute(cli.command, &cfg)?;
    let outputs = write_outputs(&cli.out, &outcome.files)?;
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.echo(cli.command.section()),
        seed: cli.seed,
        threads: cli.threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        tolerances: tolerances(),
        palette: outcome.palette,
        csv_version: CSV_VERSION,
        summary: outcome.summary,
        outputs,
    };
    write_atomic(&cli.out.join("manifest.json"), &json_bytes(&manifest)?)?;
    Ok(if outcome.truncated { EXIT_TRUNCATED } else { 0 })
}

/// Runs a command without writing anything.
pub fn execute(command: Command, cfg: &Config) -> Result<Outcome, CliError> {
    match command {
        Command::RenderJulia => cmd_render_julia(cfg),
        Command::RenderSlice => cmd_render_slice(cfg),
        Command::Omega => cmd_omega(cfg),
        Command::Dim => cmd_dim(cfg),
        Command::Hunt => cmd_hunt(cfg),
        Command::SolveSlice => cmd_solve_slice(cfg),
    }
}

pub fn tolerances() -> BTreeMap<String, f64> {
    use crate::{omega, potential, slice};
    [
        ("potential.series_tol", potential::DEFAULT_TOL),
        ("potential.max_depth", f64::from(potential::DEFAULT_MAX_DEPTH)),
        ("slice.residual", slice::SLICE_RESIDUAL_TOL),
        ("slice.cycle", slice::CYCLE_TOL),
        ("slice.near_return", slice::NEAR_RETURN),
        ("slice.cycle_max_period", f64::from(slice::CYCLE_MAX_PERIOD)),
        ("slice.parabolic", slice::PARABOLIC_TOL),
        ("slice.max_condition", slice::MAX_CONDITION),
        ("omega.reconstruction", omega::RECONSTRUCTION_TOL),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn instance_from(cfg: &Config, section: &str) -> Result<FamilyInstance, CliError> {
    let kind = cfg.family(section)?;
    let degree = cfg.u32(section, "degree")?;
    Ok(FamilyInstance::new(kind, degree, cfg.complex(section, "a")?, cfg.complex(section, "b")?)?)
}

fn slice_spec_from(cfg: &Config, section: &str) -> Result<SliceSpec, CliError> {
    let kind = if section == "hunt" { FamilyKind::Cubic } else { cfg.family(section)? };
    let degree = if section == "hunt" { 3 } else { cfg.u32(section, "degree")? };
    Ok(SliceSpec::new(cfg.complex(section, "zeta")?, kind, degree)?)
}

fn positive(cfg: &Config, section: &str, key: &str) -> Result<usize, CliError> {
    let n = cfg.usize(section, key)?;
    if n == 0 {
        return Err(CliError::Usage(format!("`{section}.{key}` must be positive")));
    }
    Ok(n)
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Escape shading: light for fast escape, darkening with the escape count.
pub fn escape_shade(k: u32, _max: u32) -> [u8; 3] {
    let u = 1.0 / (1.0 + f64::from(k) / 4.0);
    [(40.0 + 215.0 * u * u) as u8, (60.0 + 195.0 * u) as u8, (110.0 + 145.0 * u.sqrt()) as u8]
}

const BOUNDED: [u8; 3] = [0, 0, 0];
const UNRESOLVED: [u8; 3] = [200, 40, 200];
const SOLVER_FAILURE: [u8; 3] = [230, 20, 20];
const NOT_IN_SLICE: [u8; 3] = [255, 255, 255];
const UNREACHED: [u8; 3] = [128, 128, 128];
const OMEGA_PLUS: [u8; 3] = [30, 90, 200];
const OMEGA_MINUS: [u8; 3] = [220, 120, 30];
const OMEGA_OUT: [u8; 3] = [255, 255, 255];

fn slice_palette() -> BTreeMap<String, String> {
    [
        ("escaped", "escape shade: light = early escape of the co-critical orbit".to_string()),
        ("attracting", hex(BOUNDED)),
        ("unresolved", hex(UNRESOLVED)),
        ("solver_failure", hex(SOLVER_FAILURE)),
        ("not_in_slice", hex(NOT_IN_SLICE)),
        ("unreached", hex(UNREACHED)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub fn slice_image(raster: &SliceRaster, classify_iter: u32) -> Image {
    let mut img = Image::new(raster.width, raster.height);
    for (px, cell) in img.pixels.iter_mut().zip(&raster.cells) {
        *px = match cell {
            SliceCell::Solved(p) => match p.classification {
                Some(Classification::CoCriticalEscapes { escape_iteration }) => escape_shade(escape_iteration, classify_iter),
                Some(Classification::BoundedWithAttractor { .. }) => BOUNDED,
                Some(Classification::BoundedUnresolved) => UNRESOLVED,
                None => SOLVER_FAILURE,
            },
            SliceCell::Failed(FailureCause::NotInSlice) => NOT_IN_SLICE,
            SliceCell::Failed(FailureCause::Unreached) => UNREACHED,
            SliceCell::Failed(_) => SOLVER_FAILURE,
        };
    }
    img
}

fn cmd_render_julia(cfg: &Config) -> Result<Outcome, CliError> {
    let f = instance_from(cfg, "julia")?;
    let res = positive(cfg, "julia", "resolution")?;
    let depth = cfg.u32("julia", "depth")?;
    let window = match cfg.opt_f64("julia", "half_width")? {
        Some(hw) => Window::new(cfg.complex("julia", "center")?, hw)?,
        None => {
            let w = julia_window(&f);
            Window::new(cfg.complex("julia", "center")?, w.half_width)?
        }
    };
    let pixels: Vec<[u8; 3]> = (0..res * res)
        .into_par_iter()
        .map(|i| {
            let z = window.pixel_center(i / res, i % res, res, res);
            match escape_time(&f, z, depth) {
                Some(k) => escape_shade(k, depth),
                None => BOUNDED,
            }
        })
        .collect();
    let bounded = pixels.iter().filter(|&&p| p == BOUNDED).count();
    let img = Image { width: res, height: res, pixels };
    let mut palette = BTreeMap::new();
    palette.insert("bounded".into(), hex(BOUNDED));
    palette.insert("escaped".into(), "escape shade: light = early escape".into());
    Ok(Outcome {
        files: vec![("julia.ppm".into(), img.to_ppm())],
        summary: json!({
            "window": window,
            "bounded_pixels": bounded,
            "pixel_area": window.pixel_size(res).powi(2),
        }),
        palette,
        truncated: false,
    })
}

/// Mask consistency of a zoom against its parent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ZoomCheck {
    /// parent cells set in the downsampled child mask
    pub checked: usize,
    /// of those, cells with no bounded parent pixel within one pixel
    pub violations: usize,
}

/// Downsamples the child's bounded mask onto the parent grid (a cell is set
/// when at least half of the child pixels landing in it are bounded) and checks
/// it against the parent's bounded mask dilated by one pixel.
pub fn zoom_check(parent: &SliceRaster, child: &SliceRaster) -> ZoomCheck {
    let (pw, ph) = (parent.width, parent.height);
    let pmask = parent.bounded_mask();
    let mut bounded = vec![0usize; pw * ph];
    let mut total = vec![0usize; pw * ph];
    for (i, cell) in child.cells.iter().enumerate() {
        let z = child.window.pixel_center(i / child.width, i % child.width, child.width, child.height);
        if let Some((r, c)) = parent.window.pixel_of(z, pw, ph) {
            total[r * pw + c] += 1;
            bounded[r * pw + c] += usize::from(cell.is_bounded());
        }
    }
    let mut out = ZoomCheck::default();
    for idx in 0..pw * ph {
        if total[idx] == 0 || 2 * bounded[idx] < total[idx] {
            continue;
        }
        out.checked += 1;
        let (r, c) = (idx / pw, idx % pw);
        let hit = (r.saturating_sub(1)..=(r + 1).min(ph - 1))
            .any(|rr| (c.saturating_sub(1)..=(c + 1).min(pw - 1)).any(|cc| pmask[rr * pw + cc]));
        if !hit {
            out.violations += 1;
        }
    }
    out
}

fn raster_summary(raster: &SliceRaster) -> serde_json::Value {
    let counts = raster.counts();
    let (_, components) = label_components(&raster.bounded_mask(), raster.width, raster.height);
    let bounded = counts.attracting + counts.unresolved;
    json!({
        "window": raster.window,
        "width": raster.width,
        "height": raster.height,
        "counts": counts,
        "bounded_pixels": bounded,
        "bounded_fraction_of_solved": if counts.solved == 0 { 0.0 } else { bounded as f64 / counts.solved as f64 },
        "bounded_components": components,
    })
}

fn cmd_render_slice(cfg: &Config) -> Result<Outcome, CliError> {
    let spec = slice_spec_from(cfg, "slice")?;
    let res = positive(cfg, "slice", "resolution")?;
    let iter = cfg.u32("slice", "classify_iter")?;
    let anchor = find_anchor(&spec)?;
    let center = cfg.opt_complex("slice", "center")?;
    let half_width = cfg.opt_f64("slice", "half_width")?;
    let window = match (center, half_width) {
        (Some(c), Some(hw)) => Window::new(c, hw)?,
        _ => {
            let (leaf, bounded) = auto_windows(&spec, &anchor, positive(cfg, "slice", "prescan")?, iter)?;
            let base = match cfg.raw("slice", "view") {
                "leaf" => leaf,
                "bounded" => bounded.unwrap_or(leaf),
                v => return Err(CliError::Usage(format!("config: `slice.view` = `{v}` is not bounded or leaf"))),
            };
            Window::new(center.unwrap_or(base.center()), half_width.unwrap_or(base.half_width))?
        }
    };
    let settings = RenderSettings { width: res, height: res, classify_iter: iter };
    let zooms = cfg.usize("slice", "zooms")?;
    let factor = cfg.f64("slice", "zoom_factor")?;
    if zooms > 0 && !(factor > 1.0) {
        return Err(CliError::Usage("`slice.zoom_factor` must exceed 1".into()));
    }
    let zoom_center = cfg.opt_complex("slice", "zoom_center")?.unwrap_or(window.center());

    let mut files = Vec::new();
    let mut summaries = Vec::new();
    let mut parent: Option<SliceRaster> = None;
    for level in 0..=zooms {
        let w = if level == 0 {
            window
        } else {
            Window::new(zoom_center, window.half_width / factor.powi(level as i32))?
        };
        let raster = render_slice(&spec, &w, &settings, &anchor)?;
        let mut s = raster_summary(&raster);
        if let Some(p) = &parent {
            s["zoom_check"] = json!(zoom_check(p, &raster));
        }
        let name = if level == 0 { "slice.ppm".to_string() } else { format!("slice_zoom{level}.ppm") };
        files.push((name, slice_image(&raster, iter).to_ppm()));
        summaries.push(s);
        parent = Some(raster);
    }
    Ok(Outcome {
        files,
        summary: json!({ "anchor": [anchor.a.re, anchor.a.im, anchor.b.re, anchor.b.im], "images": summaries }),
        palette: slice_palette(),
        truncated: false,
    })
}

pub const OMEGA_COLUMNS: [&str; 7] = ["sign1", "a1", "center_re", "center_im", "radius", "real_lo", "real_hi"];

fn cmd_omega(cfg: &Config) -> Result<Outcome, CliError> {
    let spec = OmegaSpec::new(
        cfg.i64("omega", "p")?,
        cfg.i64("omega", "q")?,
        cfg.i64("omega", "n1")?,
        cfg.i64("omega", "n2")?,
        cfg.f64("omega", "beta_im_bound")?,
    )?
    .synchronized(cfg.bool("omega", "synchronized")?);
    let count = positive(cfg, "omega", "count")?;
    let res = positive(cfg, "omega", "resolution")?;
    let disks = omega_disks(&spec, count)?;
    let center = spec.center();
    let hw = match cfg.opt_f64("omega", "half_width")? {
        Some(h) => h,
        None => 1.1 * disks.iter().map(|d| (d.center() - center).norm() + d.radius).fold(0.0, f64::max),
    };
    let window = Window::new(Complex::new(center, 0.0), hw)?;
    let pixels = (0..res * res)
        .into_par_iter()
        .map(|i| {
            let z = window.pixel_center(i / res, i % res, res, res);
            match omega_membership(&spec, z) {
                Ok(Some(w)) if w.sign1 > 0 => OMEGA_PLUS,
                Ok(Some(_)) => OMEGA_MINUS,
                _ => OMEGA_OUT,
            }
        })
        .collect();
    let img = Image { width: res, height: res, pixels };
    let rows: Vec<Vec<String>> = disks
        .iter()
        .map(|d| {
            vec![
                d.sign1.to_string(),
                d.a1.to_string(),
                num(d.center[0]),
                num(d.center[1]),
                num(d.radius),
                num(d.real_intersection[0]),
                num(d.real_intersection[1]),
            ]
        })
        .collect();
    let mut palette = BTreeMap::new();
    palette.insert("member_sign_plus".into(), hex(OMEGA_PLUS));
    palette.insert("member_sign_minus".into(), hex(OMEGA_MINUS));
    palette.insert("outside".into(), hex(OMEGA_OUT));
    Ok(Outcome {
        files: vec![("omega.ppm".into(), img.to_ppm()), ("omega_disks.csv".into(), csv_bytes(&OMEGA_COLUMNS, &rows)?)],
        summary: json!({ "window": window, "disks": disks.len(), "csv_columns": OMEGA_COLUMNS }),
        palette,
        truncated: false,
    })
}

pub const DIM_COLUMNS: [&str; 7] = ["method", "value", "uncertainty", "fit_residual", "resolution", "depth", "branch_count"];

fn dim_row(e: &DimensionEstimate) -> Vec<String> {
    vec![
        e.method.name().to_string(),
        num(e.value),
        num(e.uncertainty),
        e.fit_residual.map(num).unwrap_or_default(),
        e.settings.resolution.to_string(),
        e.settings.depth.to_string(),
        e.settings.branch_count.to_string(),
    ]
}

fn cmd_dim(cfg: &Config) -> Result<Outcome, CliError> {
    let method = cfg.raw("dim", "method");
    let (want_box, want_pressure) = match method {
        "box" => (true, false),
        "pressure" => (false, true),
        "both" => (true, true),
        v => return Err(CliError::Usage(format!("config: `dim.method` = `{v}` is not box, pressure or both"))),
    };
    let res = positive(cfg, "dim", "resolution")?;
    let depth = cfg.u32("dim", "depth")?;
    let refinement = cfg.u32("dim", "refinement")?;
    let mut estimates = Vec::new();
    match cfg.raw("dim", "target") {
        "family" => {
            let f = instance_from(cfg, "dim")?;
            if want_box {
                estimates.push(box_dimension(&julia_raster(&f, &julia_window(&f), res, depth)?)?);
            }
            if want_pressure {
                estimates.push(pressure_dimension(&build_branch_system(&f)?, refinement)?);
            }
        }
        "ifs" => {
            let sys = BranchSystem::synthetic(positive(cfg, "dim", "ifs_branches")?, cfg.f64("dim", "ifs_ratio")?)?;
            if want_box {
                estimates.push(box_dimension(&similarity_raster(&sys, res)?)?);
            }
            if want_pressure {
                estimates.push(pressure_dimension(&sys, refinement)?);
            }
        }
        v => return Err(CliError::Usage(format!("config: `dim.target` = `{v}` is not family or ifs"))),
    }
    let mut rows: Vec<Vec<String>> = estimates.iter().map(dim_row).collect();
    let gap = (estimates.len() == 2).then(|| (estimates[0].value - estimates[1].value).abs());
    if let Some(g) = gap {
        let mut row = vec![String::new(); DIM_COLUMNS.len()];
        row[0] = "gap".into();
        row[1] = num(g);
        rows.push(row);
    }
    Ok(Outcome {
        files: vec![("dim.csv".into(), csv_bytes(&DIM_COLUMNS, &rows)?)],
        summary: json!({ "estimates": estimates, "gap": gap, "csv_columns": DIM_COLUMNS }),
        palette: BTreeMap::new(),
        truncated: false,
    })
}

/// Structural checks attached to a serialized hunt report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HuntChecks {
    pub nested: Vec<bool>,
    pub omega_membership: Vec<bool>,
    pub disjoint_from_used: Vec<bool>,
    pub final_in_every_disk: bool,
    pub box_not_below_first: Vec<bool>,
    pub completed: bool,
}

pub fn hunt_checks(report: &HuntReport) -> HuntChecks {
    let nested = {
        let mut outer = report.initial_disk;
        report
            .stages
            .iter()
            .map(|s| {
                let ok = s.neighbourhood.nested_in(&outer);
                outer = s.neighbourhood;
                ok
            })
            .collect()
    };
    let omega_membership = report
        .stages
        .iter()
        .map(|s| {
            let spec = OmegaSpec { p: s.p, q: s.q, ..report.omega };
            matches!(omega_membership(&spec, Complex::new(s.alpha, 0.0)), Ok(Some(_)))
        })
        .collect();
    let disjoint_from_used = report.stages.iter().map(|s| s.distance_to_used.is_none_or(|d| d > 0.0)).collect();
    let final_in_every_disk = report
        .final_parameter
        .is_some_and(|p| report.stages.iter().all(|s| s.neighbourhood.contains(p.a())));
    let first = report.stages.first().and_then(|s| s.box_dimension.as_ref()).map(|e| e.value);
    let box_not_below_first = report
        .stages
        .iter()
        .map(|s| match (first, &s.box_dimension) {
            (Some(f), Some(e)) => e.value >= f - 0.1,
            _ => false,
        })
        .collect();
    HuntChecks { nested, omega_membership, disjoint_from_used, final_in_every_disk, box_not_below_first, completed: report.completed() }
}

fn cmd_hunt(cfg: &Config) -> Result<Outcome, CliError> {
    let spec = slice_spec_from(cfg, "hunt")?;
    let depth = cfg.usize("hunt", "depth")?;
    if !(1..=5).contains(&depth) {
        return Err(CliError::Usage(format!("config: `hunt.depth` = {depth} is outside 1..=5")));
    }
    let schedule = cfg.schedule("hunt", "schedule")?;
    let (p, q) = schedule[0];
    let omega = OmegaSpec::new(p, q, cfg.i64("hunt", "n1")?, cfg.i64("hunt", "n2")?, cfg.f64("hunt", "beta_im_bound")?)?;
    let budget = HuntBudget {
        raster: cfg.usize("hunt", "raster")?,
        max_raster: cfg.usize("hunt", "max_raster")?,
        classify_iter: cfg.u32("hunt", "classify_iter")?,
        closeness: cfg.f64("hunt", "closeness")?,
        dim_resolution: cfg.usize("hunt", "dim_resolution")?,
        dim_depth: cfg.u32("hunt", "dim_depth")?,
        schedule,
    };
    budget.validate()?;
    let image_res = positive(cfg, "hunt", "image_resolution")?;
    let anchor = find_anchor(&spec)?;
    let window = match (cfg.opt_complex("hunt", "center")?, cfg.opt_f64("hunt", "half_width")?) {
        (Some(c), Some(hw)) => Window::new(c, hw)?,
        (c, hw) => {
            let (_, bounded) = auto_windows(&spec, &anchor, positive(cfg, "hunt", "prescan")?, budget.classify_iter)?;
            let base = bounded.ok_or_else(|| CliError::Numeric("pre-scan found no bounded component".into()))?;
            Window::new(c.unwrap_or(base.center()), hw.unwrap_or(base.half_width))?
        }
    };
    let report = run_hunt(&spec, &omega, depth, &budget, &window, &anchor)?;
    let checks = hunt_checks(&report);

    let settings = RenderSettings { width: image_res, height: image_res, classify_iter: budget.classify_iter };
    let mut files = Vec::new();
    let mut seed = anchor;
    for s in &report.stages {
        let w = Window::new(s.neighbourhood.center(), s.neighbourhood.radius)?;
        // each stage image is seeded from its own tuned parameter
        seed = crate::slice::SlicePoint { a: s.tuned.a(), b: s.tuned.b(), residual: s.tuned.residual, ..seed };
        let raster = render_slice(&spec, &w, &settings, &seed)?;
        files.push((format!("stage{}.ppm", s.index), slice_image(&raster, budget.classify_iter).to_ppm()));
    }
    let table: Vec<_> = report
        .stages
        .iter()
        .map(|s| json!({
            "stage": s.index,
            "box": s.box_dimension.as_ref().map(|e| e.value),
            "pressure": s.pressure_dimension.as_ref().map(|e| e.value),
        }))
        .collect();
    let doc = json!({ "report": report, "checks": checks, "dimension_table": table });
    files.insert(0, ("hunt_report.json".into(), json_bytes(&doc)?));
    Ok(Outcome {
        files,
        summary: json!({
            "completed": checks.completed,
            "stages": report.stages.len(),
            "truncated": report.truncated,
        }),
        palette: slice_palette(),
        truncated: !checks.completed,
    })
}

fn cmd_solve_slice(cfg: &Config) -> Result<Outcome, CliError> {
    let spec = slice_spec_from(cfg, "solve")?;
    let a = cfg.complex("solve", "a")?;
    let seed = cfg.opt_complex("solve", "b_seed")?.unwrap_or_else(|| b_seed_for(&spec, a));
    let iter = cfg.u32("solve", "classify_iter")?;
    let point = solve_slice(&spec, a, seed)?;
    let class = classify(&spec, &point, iter)?;
    let cycle = attracting_cycle(&spec, &point, iter).map(|c| {
        json!({
            "period": c.period,
            "representative": [c.representative.re, c.representative.im],
            "multiplier": [c.multiplier.re, c.multiplier.im],
        })
    });
    let doc = json!({
        "a": [point.a.re, point.a.im],
        "b": [point.b.re, point.b.im],
        "b_seed": [seed.re, seed.im],
        "residual": point.residual,
        "log_zeta": [point.log_zeta.re, point.log_zeta.im],
        "classification": class,
        "attracting_cycle": cycle,
    });
    Ok(Outcome {
        files: vec![("solve.json".into(), json_bytes(&doc)?)],
        summary: doc,
        palette: BTreeMap::new(),
        truncated: false,
    })
}

/// Reads back the manifest of a finished run.
pub fn read_manifest(dir: &Path) -> Option<serde_json::Value> {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).ok()?).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Config {
        Config::parse(text).unwrap()
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::TuneFailed("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(Error::NotHyperbolicCantor("x".into())).exit_code(), 3);
    }

    #[test]
    fn julia_disk_pixel_count() {
        let out = execute(Command::RenderJulia, &cfg("[julia]\nresolution = 256\n")).unwrap();
        let bounded = out.summary["bounded_pixels"].as_u64().unwrap() as f64;
        let area = out.summary["pixel_area"].as_f64().unwrap();
        let expect = std::f64::consts::PI / area;
        assert!((bounded - expect).abs() <= 0.01 * expect, "{bounded} vs {expect}");
    }

    #[test]
    fn zero_resolution_is_usage_error() {
        let err = execute(Command::RenderJulia, &cfg("[julia]\nresolution = 0\n")).err().unwrap();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn small_zeta_is_usage_error() {
        let err = execute(Command::RenderSlice, &cfg("[slice]\nzeta = 0.5\n")).err().unwrap();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn pressure_on_connected_julia_set_is_numeric() {
        let err = execute(Command::Dim, &cfg("[dim]\na = 0\nb = 0.1\nmethod = pressure\n")).err().unwrap();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("hyperbolic"), "{err}");
    }

    #[test]
    fn synthetic_pressure_row() {
        let out = execute(Command::Dim, &cfg("[dim]\ntarget = ifs\nmethod = pressure\n")).unwrap();
        let text = String::from_utf8(out.files[0].1.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), DIM_COLUMNS.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        let v: f64 = row[1].parse().unwrap();
        assert!((v - 2f64.ln() / 3f64.ln()).abs() <= 1e-4, "{v}");
    }

    #[test]
    fn omega_csv_radii_positive() {
        let out = execute(Command::Omega, &cfg("[omega]\nresolution = 64\n")).unwrap();
        let text = String::from_utf8(out.files[1].1.clone()).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 24);
        for r in rows {
            let radius: f64 = r.split(',').nth(4).unwrap().parse().unwrap();
            assert!(radius > 0.0);
        }
    }

    #[test]
    fn hunt_depth_zero_is_usage_error() {
        let err = execute(Command::Hunt, &cfg("[hunt]\ndepth = 0\n")).err().unwrap();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn solve_slice_default_point() {
        let out = execute(Command::SolveSlice, &Config::default()).unwrap();
        assert!(out.summary["residual"].as_f64().unwrap() <= 1e-8);
    }
}
