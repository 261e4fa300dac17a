//! Finite-depth nested-disk search: alternate parabolic roots, multiplier
//! tuning into `Ω_{p,q}`, shrinking neighbourhoods, and new bounded components.

use serde::{Deserialize, Serialize};

use crate::dimension::{box_dimension, build_branch_system, julia_raster, julia_window, pressure_dimension, DimensionEstimate};
use crate::error::{Error, Result};
use crate::families::{Complex, FamilyInstance};
use crate::omega::{omega_membership, pick_target_alpha, OmegaSpec, OmegaWitness};
use crate::potential::escape_radius;
use crate::slice::{
    classify, find_parabolic_root_in, label_components, render_slice, tune_multiplier, Classification, CycleRecord,
    RenderSettings, SliceRaster, SlicePoint, SliceSpec, Window,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuntBudget {
    /// side of the first search raster
    pub raster: usize,
    /// largest search raster tried before a stage gives up
    pub max_raster: usize,
    pub classify_iter: u32,
    /// closeness of the first target `α` to `p/q`; stage `n` uses `closeness / 4^(n-1)`
    pub closeness: f64,
    pub dim_resolution: usize,
    pub dim_depth: u32,
    /// `(p, q)` per stage; the last entry repeats
    pub schedule: Vec<(i64, i64)>,
}

impl Default for HuntBudget {
    fn default() -> Self {
        HuntBudget {
            raster: 128,
            max_raster: 512,
            classify_iter: 500,
            closeness: 0.1,
            dim_resolution: 512,
            dim_depth: 300,
            schedule: vec![(0, 1)],
        }
    }
}

impl HuntBudget {
    pub fn validate(&self) -> Result<()> {
        if self.raster < 8 || self.max_raster < self.raster {
            return Err(Error::Domain(format!("bad raster budget {} .. {}", self.raster, self.max_raster)));
        }
        if !(self.closeness > 0.0) || !self.closeness.is_finite() {
            return Err(Error::Domain(format!("closeness must be positive, got {}", self.closeness)));
        }
        if self.schedule.is_empty() || self.schedule.iter().any(|&(_, q)| q < 1) {
            return Err(Error::Domain("schedule needs at least one p/q with q >= 1".into()));
        }
        if self.dim_resolution < 64 {
            return Err(Error::Domain("dimension raster must be at least 64".into()));
        }
        Ok(())
    }

    fn pq(&self, stage: usize) -> (i64, i64) {
        self.schedule[stage.min(self.schedule.len() - 1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex, radius: f64) -> Self {
        Disk { center: [center.re, center.im], radius }
    }

    pub fn center(&self) -> Complex {
        Complex::new(self.center[0], self.center[1])
    }

    pub fn contains(&self, z: Complex) -> bool {
        (z - self.center()).norm() < self.radius
    }

    /// `|c - c_outer| + r < r_outer`
    pub fn nested_in(&self, outer: &Disk) -> bool {
        (self.center() - outer.center()).norm() + self.radius < outer.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub residual: f64,
}

impl ParamRecord {
    fn of(p: &SlicePoint) -> Self {
        ParamRecord { a: [p.a.re, p.a.im], b: [p.b.re, p.b.im], residual: p.residual }
    }

    pub fn a(&self) -> Complex {
        Complex::new(self.a[0], self.a[1])
    }

    pub fn b(&self) -> Complex {
        Complex::new(self.b[0], self.b[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleInfo {
    pub period: u32,
    pub representative: [f64; 2],
    pub multiplier: [f64; 2],
}

impl CycleInfo {
    fn of(c: &CycleRecord) -> Self {
        CycleInfo {
            period: c.period,
            representative: [c.representative.re, c.representative.im],
            multiplier: [c.multiplier.re, c.multiplier.im],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CantorVerdict {
    CertifiedCantor,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuntStage {
    pub index: usize,
    pub p: i64,
    pub q: i64,
    pub period: u32,
    pub component_pixels: usize,
    pub parabolic: ParamRecord,
    pub parabolic_cycle: CycleInfo,
    /// distance from the parabolic parameter to the nearest earlier copy
    pub distance_to_used: Option<f64>,
    pub alpha: f64,
    pub witness: OmegaWitness,
    pub tuned: ParamRecord,
    pub tuned_cycle: CycleInfo,
    pub tuned_classification: Classification,
    pub neighbourhood: Disk,
    pub nested: bool,
    pub box_dimension: Option<DimensionEstimate>,
    pub pressure_dimension: Option<DimensionEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuntReport {
    pub zeta: [f64; 2],
    pub omega: OmegaSpec,
    pub depth: usize,
    pub budget: HuntBudget,
    pub initial_window: Window,
    pub initial_disk: Disk,
    pub stages: Vec<HuntStage>,
    pub final_parameter: Option<ParamRecord>,
    pub final_certificate: Option<CantorVerdict>,
    /// why the loop stopped early, if it did
    pub truncated: Option<String>,
}

impl HuntReport {
    pub fn completed(&self) -> bool {
        self.truncated.is_none() && self.stages.len() == self.depth
    }

    /// Every stage disk sits strictly inside the previous one.
    pub fn nesting_holds(&self) -> bool {
        let mut outer = self.initial_disk;
        for s in &self.stages {
            if !s.neighbourhood.nested_in(&outer) {
                return false;
            }
            outer = s.neighbourhood;
        }
        true
    }
}

/// Certifies a Cantor Julia set when every critical orbit leaves the escape
/// disk within `depth` steps.
pub fn cantor_certificate(spec: &SliceSpec, point: &SlicePoint, depth: u32) -> CantorVerdict {
    match point.instance(spec) {
        Ok(f) => certify(&f, depth),
        Err(_) => CantorVerdict::NotCertified,
    }
}

pub fn certify(f: &FamilyInstance, depth: u32) -> CantorVerdict {
    let radius = escape_radius(f);
    let data = f.critical_data();
    let all = data.critical_points.iter().all(|cp| {
        let mut w = cp.point;
        for _ in 0..=depth {
            if w.norm() > radius {
                return true;
            }
            w = f.eval_raw(w);
        }
        false
    });
    if all {
        CantorVerdict::CertifiedCantor
    } else {
        CantorVerdict::NotCertified
    }
}

/// Pixel centres of an earlier copy with the size of the pixels they came from.
struct UsedCopy {
    points: Vec<Complex>,
    pixel: f64,
}

impl UsedCopy {
    fn distance(&self, z: Complex) -> f64 {
        self.points.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
    }
}

struct Component {
    mask: Vec<bool>,
    pixels: usize,
    period: u32,
}

/// Bounded components of `raster` inside `disk` that have attracting pixels
/// and stay clear of `used` (2 pixels, or one pixel of the coarser raster).
fn new_components(raster: &SliceRaster, disk: &Disk, used: &[UsedCopy]) -> Vec<Component> {
    let (w, h) = (raster.width, raster.height);
    let s = raster.window.pixel_size(w);
    let centre = |i: usize| raster.window.pixel_center(i / w, i % w, w, h);
    let mask: Vec<bool> = (0..w * h).map(|i| raster.cells[i].is_bounded() && disk.contains(centre(i))).collect();
    let (labels, count) = label_components(&mask, w, h);
    let mut out = Vec::new();
    for label in 1..=count {
        let members: Vec<usize> = (0..w * h).filter(|&i| labels[i] == label).collect();
        let clear = members.iter().all(|&i| {
            let z = centre(i);
            used.iter().all(|u| u.distance(z) > (2.0 * s).max(u.pixel))
        });
        if !clear {
            continue;
        }
        let mut periods: Vec<u32> = members
            .iter()
            .filter_map(|&i| raster.cells[i].classification().and_then(|c| c.attractor_period()))
            .collect();
        if periods.is_empty() {
            continue;
        }
        periods.sort_unstable();
        // most frequent period, smallest on ties
        let mut best = (0usize, periods[0]);
        let mut k = 0;
        while k < periods.len() {
            let j = periods[k..].iter().take_while(|&&p| p == periods[k]).count();
            if j > best.0 {
                best = (j, periods[k]);
            }
            k += j;
        }
        let mut m = vec![false; w * h];
        for &i in &members {
            m[i] = true;
        }
        out.push(Component { mask: m, pixels: members.len(), period: best.1 });
    }
    // largest first, then first in raster order
    out.sort_by_key(|c| std::cmp::Reverse(c.pixels));
    out
}

fn component_points(raster: &SliceRaster, mask: &[bool]) -> Vec<Complex> {
    let (w, h) = (raster.width, raster.height);
    (0..w * h).filter(|&i| mask[i]).map(|i| raster.window.pixel_center(i / w, i % w, w, h)).collect()
}

fn stage_dimensions(spec: &SliceSpec, p: &SlicePoint, budget: &HuntBudget) -> (Option<DimensionEstimate>, Option<DimensionEstimate>) {
    let Ok(f) = p.instance(spec) else { return (None, None) };
    let win = julia_window(&f);
    let boxd = julia_raster(&f, &win, budget.dim_resolution, budget.dim_depth)
        .ok()
        .and_then(|r| box_dimension(&r).ok());
    let pressure = build_branch_system(&f).ok().and_then(|s| pressure_dimension(&s, 4).ok());
    (boxd, pressure)
}

/// Search window for the next component: the square around a disk.
fn disk_window(d: &Disk) -> Result<Window> {
    Window::new(d.center(), d.radius)
}

/// Runs up to `depth` stages starting from the bounded structure in `window`.
pub fn run_hunt(
    spec: &SliceSpec,
    omega: &OmegaSpec,
    depth: usize,
    budget: &HuntBudget,
    window: &Window,
    anchor: &SlicePoint,
) -> Result<HuntReport> {
    if !(1..=5).contains(&depth) {
        return Err(Error::Domain(format!("hunt depth must be in 1..=5, got {depth}")));
    }
    budget.validate()?;
    omega.validate()?;
    let initial_disk = Disk::new(window.center(), window.half_width);
    let mut report = HuntReport {
        zeta: [spec.zeta().re, spec.zeta().im],
        omega: *omega,
        depth,
        budget: budget.clone(),
        initial_window: *window,
        initial_disk,
        stages: Vec::new(),
        final_parameter: None,
        final_certificate: None,
        truncated: None,
    };

    let settings = |n: usize| RenderSettings { width: n, height: n, classify_iter: budget.classify_iter };
    let mut used: Vec<UsedCopy> = Vec::new();
    let mut outer = initial_disk;
    let mut anchor = *anchor;

    // the component for the first stage: the largest attracting one in the window
    let mut current: Option<(SliceRaster, Component)> = None;
    let mut n = budget.raster;
    while current.is_none() && n <= budget.max_raster {
        let raster = render_slice(spec, window, &settings(n), &anchor)?;
        current = new_components(&raster, &initial_disk, &[]).into_iter().next().map(|c| (raster, c));
        n *= 2;
    }

    for stage in 0..depth {
        let Some((raster, comp)) = current.take() else {
            report.truncated = Some(format!("stage {}: no new bounded component with an attracting cycle", stage + 1));
            break;
        };
        let (p, q) = budget.pq(stage);
        let root = match find_parabolic_root_in(spec, &raster, Some(&comp.mask), p, q, comp.period, budget.classify_iter) {
            Ok(r) => r,
            Err(e) => {
                report.truncated = Some(format!("stage {}: parabolic root: {e}", stage + 1));
                break;
            }
        };
        let distance_to_used = (!used.is_empty())
            .then(|| used.iter().map(|u| u.distance(root.0.a)).fold(f64::INFINITY, f64::min));

        let closeness = budget.closeness / 4f64.powi(stage as i32);
        let target_spec = OmegaSpec { p, q, ..*omega };
        let alpha = match pick_target_alpha(&target_spec, closeness) {
            Ok(a) => a,
            Err(e) => {
                report.truncated = Some(format!("stage {}: target alpha: {e}", stage + 1));
                break;
            }
        };
        let witness = match omega_membership(&target_spec, Complex::new(alpha, 0.0))? {
            Some(w) => w,
            None => {
                report.truncated = Some(format!("stage {}: alpha {alpha} has no Ω witness", stage + 1));
                break;
            }
        };
        let tuned = match tune_multiplier(spec, &root, Complex::new(alpha, 0.0)) {
            Ok(t) => t,
            Err(e) => {
                report.truncated = Some(format!("stage {}: {e}", stage + 1));
                break;
            }
        };
        let c_n = tuned.0.a;
        let gap = outer.radius - (c_n - outer.center()).norm();
        if !(gap > 0.0) {
            report.truncated = Some(format!("stage {}: tuned parameter left the previous neighbourhood", stage + 1));
            break;
        }
        let disk = Disk::new(c_n, gap / 2.0);
        let nested = disk.nested_in(&outer);
        let classification = classify(spec, &tuned.0, budget.classify_iter)?;
        let (boxd, pressure) = stage_dimensions(spec, &tuned.0, budget);

        used.push(UsedCopy { points: component_points(&raster, &comp.mask), pixel: raster.window.pixel_size(raster.width) });
        used.push(UsedCopy { points: vec![root.0.a, c_n], pixel: 0.0 });

        report.stages.push(HuntStage {
            index: stage + 1,
            p,
            q,
            period: comp.period,
            component_pixels: comp.pixels,
            parabolic: ParamRecord::of(&root.0),
            parabolic_cycle: CycleInfo::of(&root.1),
            distance_to_used,
            alpha,
            witness,
            tuned: ParamRecord::of(&tuned.0),
            tuned_cycle: CycleInfo::of(&tuned.1),
            tuned_classification: classification,
            neighbourhood: disk,
            nested,
            box_dimension: boxd,
            pressure_dimension: pressure,
        });
        report.final_parameter = Some(ParamRecord::of(&tuned.0));
        report.final_certificate = Some(cantor_certificate(spec, &tuned.0, 1000));
        outer = disk;
        anchor = tuned.0;

        if stage + 1 == depth {
            break;
        }
        // look for a new copy inside the disk, refining the raster if needed
        let search = disk_window(&disk)?;
        let mut n = budget.raster;
        while current.is_none() && n <= budget.max_raster {
            let raster = render_slice(spec, &search, &settings(n), &anchor)?;
            // the copy just tuned also shows up around the tuned parameter
            let s = raster.window.pixel_size(raster.width);
            let mut local = vec![UsedCopy { points: vec![c_n, root.0.a], pixel: 3.0 * s }];
            let (w, h) = (raster.width, raster.height);
            let mask: Vec<bool> = raster.cells.iter().map(|c| c.is_bounded()).collect();
            let (labels, _) = label_components(&mask, w, h);
            let near: Vec<u32> = (0..w * h)
                .filter(|&i| labels[i] != 0 && (raster.window.pixel_center(i / w, i % w, w, h) - c_n).norm() <= 3.0 * s)
                .map(|i| labels[i])
                .collect();
            let pts: Vec<Complex> = (0..w * h)
                .filter(|&i| near.contains(&labels[i]))
                .map(|i| raster.window.pixel_center(i / w, i % w, w, h))
                .collect();
            local.push(UsedCopy { points: pts, pixel: 0.0 });
            let blocked: Vec<UsedCopy> = used
                .iter()
                .map(|u| UsedCopy { points: u.points.clone(), pixel: u.pixel })
                .chain(local)
                .collect();
            current = new_components(&raster, &disk, &blocked).into_iter().next().map(|c| (raster, c));
            n *= 2;
        }
    }
    Ok(report)
}
