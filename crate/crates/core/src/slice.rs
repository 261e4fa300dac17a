//! Parameter slices `L+(ζ)`: solving, classifying, rasterizing, and locating
//! indifferent cycles.
//!
//! The slice is coordinatized locally by `a`; for each `a` the second
//! parameter `b` is found by Newton iteration on `b ↦ ζ(a, b) - ζ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{is_finite, Complex, FamilyInstance, FamilyKind};
use crate::potential::{self, escape_radius};

pub const SLICE_RESIDUAL_TOL: f64 = 1e-8;
pub const NEWTON_MAX_STEPS: usize = 50;
pub const CYCLE_MAX_PERIOD: u32 = 64;
pub const NEAR_RETURN: f64 = 1e-3;
pub const CYCLE_TOL: f64 = 1e-9;

/// Which slice: the target Böttcher position and the family it lives in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSpec {
    zeta: Complex,
    pub kind: FamilyKind,
    pub degree: u32,
}

impl SliceSpec {
    pub fn new(zeta: Complex, kind: FamilyKind, degree: u32) -> Result<Self> {
        if !is_finite(zeta) || !(zeta.norm() > 1.0) {
            return Err(Error::Domain(format!("slice needs |ζ| > 1, got {zeta}")));
        }
        let degree = if kind == FamilyKind::Cubic { 3 } else { degree };
        // validates the degree
        FamilyInstance::new(kind, degree, Complex::new(1.0, 0.0), Complex::new(1.0, 0.0))?;
        Ok(SliceSpec { zeta, kind, degree })
    }

    pub fn cubic(zeta: Complex) -> Result<Self> {
        Self::new(zeta, FamilyKind::Cubic, 3)
    }

    pub fn zeta(&self) -> Complex {
        self.zeta
    }

    pub fn instance(&self, a: Complex, b: Complex) -> Result<FamilyInstance> {
        FamilyInstance::new(self.kind, self.degree, a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Classification {
    /// The passive critical orbit leaves the escape disk after this many steps.
    CoCriticalEscapes { escape_iteration: u32 },
    BoundedWithAttractor { period: u32, multiplier: [f64; 2] },
    BoundedUnresolved,
}

impl Classification {
    pub fn is_bounded(&self) -> bool {
        !matches!(self, Classification::CoCriticalEscapes { .. })
    }

    pub fn attractor_period(&self) -> Option<u32> {
        match self {
            Classification::BoundedWithAttractor { period, .. } => Some(*period),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicePoint {
    pub a: Complex,
    pub b: Complex,
    /// `|ζ(a, b) - ζ|`
    pub residual: f64,
    /// `log ζ(a, b)` on the branch used; lets nearby solves skip the path continuation.
    pub log_zeta: Complex,
    pub classification: Option<Classification>,
}

impl SlicePoint {
    pub fn instance(&self, spec: &SliceSpec) -> Result<FamilyInstance> {
        spec.instance(self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub period: u32,
    pub representative: Complex,
    pub multiplier: Complex,
}

fn eval_log_zeta(spec: &SliceSpec, a: Complex, b: Complex, reference: Option<Complex>) -> Result<Complex> {
    let f = spec.instance(a, b)?;
    potential::log_zeta_near(&f, reference)
}

/// Solves `ζ(a, b) = spec.zeta` for `b` starting from `b_seed`.
pub fn solve_slice(spec: &SliceSpec, a: Complex, b_seed: Complex) -> Result<SlicePoint> {
    solve_slice_with(spec, a, b_seed, None, true)
}

pub(crate) fn solve_slice_with(
    spec: &SliceSpec,
    a: Complex,
    b_seed: Complex,
    reference: Option<Complex>,
    confirm: bool,
) -> Result<SlicePoint> {
    let target = spec.zeta;
    let mut b = b_seed;
    let mut lz = eval_log_zeta(spec, a, b, reference)
        .map_err(|e| Error::SolverFailure(format!("seed b = {b} is not admissible: {e}")))?;
    let mut res = (lz.exp() - target).norm();
    for _ in 0..NEWTON_MAX_STEPS {
        if res <= 1e-13 * target.norm() {
            break;
        }
        let h = 1e-6 * (1.0 + b.norm());
        let zp = eval_log_zeta(spec, a, b + h, Some(lz)).map(|l| l.exp());
        let zm = eval_log_zeta(spec, a, b - h, Some(lz)).map(|l| l.exp());
        let (zp, zm) = match (zp, zm) {
            (Ok(p), Ok(m)) => (p, m),
            _ => return Err(Error::SolverFailure(format!("derivative undefined near b = {b}"))),
        };
        let deriv = (zp - zm) / (2.0 * h);
        if !(deriv.norm() > 0.0) || !is_finite(deriv) {
            return Err(Error::SolverFailure("vanishing derivative".into()));
        }
        let full = -(lz.exp() - target) / deriv;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = b + full * t;
            if let Ok(l) = eval_log_zeta(spec, a, cand, Some(lz)) {
                let r = (l.exp() - target).norm();
                if r < res {
                    b = cand;
                    lz = l;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if (full * t).norm() <= 1e-15 * (1.0 + b.norm()) {
            break;
        }
    }
    if !(res <= SLICE_RESIDUAL_TOL) {
        return Err(Error::SolverFailure(format!("residual {res:.3e} after Newton at a = {a}")));
    }
    if !confirm {
        return Ok(SlicePoint { a, b, residual: res, log_zeta: lz, classification: None });
    }
    // confirm branch and slice membership with the full continuation
    let f = spec.instance(a, b)?;
    let full = potential::log_zeta_of(&f)?;
    let res_full = (full.exp() - target).norm();
    if !(res_full <= SLICE_RESIDUAL_TOL) {
        return Err(Error::SolverFailure(format!(
            "converged on another branch (full-path residual {res_full:.3e})"
        )));
    }
    Ok(SlicePoint { a, b, residual: res_full, log_zeta: full, classification: None })
}

/// Follows the slice from a solved point to `a_target` along a straight
/// segment in `a`, halving the step when Newton fails.
pub fn continue_slice(spec: &SliceSpec, start: &SlicePoint, a_target: Complex) -> Result<SlicePoint> {
    let total = (a_target - start.a).norm();
    let p = continue_slice_with(spec, start, a_target, 1e-9 * (1.0 + total))?;
    if p.a == start.a {
        return Ok(p);
    }
    // the final point gets the full branch check
    solve_slice_with(spec, p.a, p.b, None, true)
}

pub(crate) fn continue_slice_with(
    spec: &SliceSpec,
    start: &SlicePoint,
    a_target: Complex,
    min_step: f64,
) -> Result<SlicePoint> {
    let mut cur = *start;
    let mut prev: Option<SlicePoint> = None;
    let total = (a_target - start.a).norm();
    if total == 0.0 {
        return Ok(cur);
    }
    let mut step = total.min(0.05 * (1.0 + cur.a.norm()));
    while (a_target - cur.a).norm() > 0.0 {
        let remaining = a_target - cur.a;
        let len = remaining.norm();
        let a_next = if len <= step { a_target } else { cur.a + remaining * (step / len) };
        // secant predictor for b
        let seed = match prev {
            Some(p) if (cur.a - p.a).norm() > 0.0 => cur.b + (cur.b - p.b) * ((a_next - cur.a) / (cur.a - p.a)),
            _ => cur.b,
        };
        let attempt = solve_slice_with(spec, a_next, seed, Some(cur.log_zeta), false)
            .or_else(|_| solve_slice_with(spec, a_next, cur.b, Some(cur.log_zeta), false));
        match attempt {
            Ok(p) => {
                prev = Some(cur);
                cur = p;
                step *= 1.5;
            }
            Err(e) => {
                step *= 0.5;
                if step < min_step {
                    return Err(Error::SolverFailure(format!("continuation stalled near a = {}: {e}", cur.a)));
                }
            }
        }
    }
    Ok(cur)
}

/// Iterates `z` forward, checking the escape disk.
fn orbit_escape(f: &FamilyInstance, z: Complex, max_iter: u32) -> (Option<u32>, Complex) {
    let r2 = escape_radius(f).powi(2);
    let mut w = z;
    for n in 0..=max_iter {
        if w.norm_sqr() > r2 || !is_finite(w) {
            return (Some(n), w);
        }
        if n < max_iter {
            w = f.eval_raw(w);
        }
    }
    (None, w)
}

/// Newton-polishes a cycle of the given period near `z`.
pub fn polish_cycle(f: &FamilyInstance, z: Complex, period: u32) -> Option<CycleRecord> {
    let mut x = z;
    for _ in 0..60 {
        let (fx, dfx) = f.iterate_with_deriv(x, period)?;
        let g = fx - x;
        if g.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
        let dg = dfx - 1.0;
        if dg.norm() == 0.0 {
            return None;
        }
        let step = g / dg;
        x -= step;
        if !is_finite(x) {
            return None;
        }
        if step.norm() <= 1e-16 * (1.0 + x.norm()) {
            break;
        }
    }
    let (fx, dfx) = f.iterate_with_deriv(x, period)?;
    ((fx - x).norm() <= CYCLE_TOL * (1.0 + x.norm())).then_some(CycleRecord {
        period,
        representative: x,
        multiplier: dfx,
    })
}

/// Scans the tail of a bounded orbit for the smallest near-return period.
pub fn detect_cycle(f: &FamilyInstance, z: Complex) -> Option<CycleRecord> {
    let mut w = z;
    for p in 1..=CYCLE_MAX_PERIOD {
        w = f.eval_raw(w);
        if (w - z).norm() < NEAR_RETURN {
            if let Some(c) = polish_cycle(f, z, p) {
                // reject polished cycles whose true period is a proper divisor
                let minimal = (1..p).filter(|q| p % q == 0).all(|q| {
                    f.iterate_with_deriv(c.representative, q)
                        .map(|(v, _)| (v - c.representative).norm() > CYCLE_TOL * (1.0 + v.norm()))
                        .unwrap_or(true)
                });
                if minimal {
                    return Some(c);
                }
            }
        }
    }
    None
}

/// Classifies a slice parameter by the fate of the passive critical orbit.
pub fn classify_instance(f: &FamilyInstance, max_iter: u32) -> Classification {
    let (_, passive) = f.critical_orbit_starts();
    let (escape, tail) = orbit_escape(f, passive, max_iter);
    if let Some(n) = escape {
        return Classification::CoCriticalEscapes { escape_iteration: n };
    }
    match detect_cycle(f, tail) {
        Some(c) if c.multiplier.norm() < 1.0 => Classification::BoundedWithAttractor {
            period: c.period,
            multiplier: [c.multiplier.re, c.multiplier.im],
        },
        _ => Classification::BoundedUnresolved,
    }
}

pub fn classify(spec: &SliceSpec, point: &SlicePoint, max_iter: u32) -> Result<Classification> {
    let f = point.instance(spec)?;
    Ok(classify_instance(&f, max_iter))
}


/// Picks a starting `b` for a given `a`: the critical value of the active
/// point sits near `ζ^d` in the Böttcher chart.
pub fn b_seed_for(spec: &SliceSpec, a: Complex) -> Complex {
    let d = spec.degree as i32;
    match spec.kind {
        FamilyKind::McMullen => spec.zeta - a * 2.0,
        _ => {
            let f0 = spec.instance(a, Complex::new(0.0, 0.0)).expect("validated spec");
            spec.zeta.powi(d) - f0.eval_raw(a)
        }
    }
}

/// Finds some point of the slice by trying seeds along rays in `a`.
pub fn find_anchor(spec: &SliceSpec) -> Result<SlicePoint> {
    for &r in &[0.5, 0.25, 1.0, 0.75, 1.25, 0.1, 1.5, 2.0] {
        for k in 0..24 {
            let a = Complex::from_polar(r, PI - 2.0 * PI * f64::from(k) / 24.0);
            let seed = b_seed_for(spec, a);
            if let Ok(p) = solve_slice(spec, a, seed) {
                return Ok(p);
            }
        }
    }
    Err(Error::NotFound(format!("no slice point found for ζ = {}", spec.zeta)))
}

/// Square-pixel window in the `a`-plane; `half_width` is along the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: [f64; 2],
    pub half_width: f64,
}

impl Window {
    pub fn new(center: Complex, half_width: f64) -> Result<Self> {
        if !is_finite(center) || !(half_width >= 0.0) || !half_width.is_finite() {
            return Err(Error::Domain(format!("bad window center {center} half-width {half_width}")));
        }
        Ok(Window { center: [center.re, center.im], half_width })
    }

    pub fn center(&self) -> Complex {
        Complex::new(self.center[0], self.center[1])
    }

    /// Raster dimensions actually used: a zero-width window collapses to one pixel.
    pub fn dims(&self, width: usize, height: usize) -> (usize, usize) {
        if self.half_width == 0.0 {
            (1, 1)
        } else {
            (width, height)
        }
    }

    pub fn pixel_size(&self, width: usize) -> f64 {
        2.0 * self.half_width / width as f64
    }

    /// Centre of pixel `(row, col)`; row 0 is the top edge.
    pub fn pixel_center(&self, row: usize, col: usize, width: usize, height: usize) -> Complex {
        let s = self.pixel_size(width);
        Complex::new(
            self.center[0] - self.half_width + (col as f64 + 0.5) * s,
            self.center[1] + (height as f64 / 2.0 - row as f64 - 0.5) * s,
        )
    }

    /// Pixel containing `z`, if inside.
    pub fn pixel_of(&self, z: Complex, width: usize, height: usize) -> Option<(usize, usize)> {
        if self.half_width == 0.0 {
            return Some((0, 0));
        }
        let s = self.pixel_size(width);
        let col = ((z.re - (self.center[0] - self.half_width)) / s).floor();
        let row = ((self.center[1] + height as f64 * s / 2.0 - z.im) / s).floor();
        (col >= 0.0 && row >= 0.0 && (col as usize) < width && (row as usize) < height)
            .then_some((row as usize, col as usize))
    }
}

/// Why a raster cell holds no solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum FailureCause {
    /// no solved neighbour ever reached the cell
    Unreached = 1,
    SolverFailure = 2,
    /// the solve landed where `h(passive) >= h(active)`
    NotInSlice = 3,
    BranchAmbiguity = 4,
    Domain = 5,
}

impl FailureCause {
    pub fn of(e: &Error) -> Self {
        match e {
            Error::NotInSlice { .. } => FailureCause::NotInSlice,
            Error::BranchAmbiguity(_) => FailureCause::BranchAmbiguity,
            Error::Domain(_) | Error::Pole(_) => FailureCause::Domain,
            _ => FailureCause::SolverFailure,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceCell {
    Solved(SlicePoint),
    Failed(FailureCause),
}

impl SliceCell {
    pub fn point(&self) -> Option<&SlicePoint> {
        match self {
            SliceCell::Solved(p) => Some(p),
            SliceCell::Failed(_) => None,
        }
    }

    pub fn classification(&self) -> Option<Classification> {
        self.point().and_then(|p| p.classification)
    }

    pub fn is_bounded(&self) -> bool {
        self.classification().is_some_and(|c| c.is_bounded())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceRaster {
    pub width: usize,
    pub height: usize,
    pub window: Window,
    /// row-major, row 0 on top
    pub cells: Vec<SliceCell>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceCounts {
    pub solved: usize,
    pub escaped: usize,
    pub attracting: usize,
    pub unresolved: usize,
    pub failed: usize,
}

impl SliceRaster {
    pub fn cell(&self, row: usize, col: usize) -> &SliceCell {
        &self.cells[row * self.width + col]
    }

    pub fn counts(&self) -> SliceCounts {
        let mut c = SliceCounts::default();
        for cell in &self.cells {
            match cell.classification() {
                None => c.failed += 1,
                Some(k) => {
                    c.solved += 1;
                    match k {
                        Classification::CoCriticalEscapes { .. } => c.escaped += 1,
                        Classification::BoundedWithAttractor { .. } => c.attracting += 1,
                        Classification::BoundedUnresolved => c.unresolved += 1,
                    }
                }
            }
        }
        c
    }

    pub fn bounded_mask(&self) -> Vec<bool> {
        self.cells.iter().map(SliceCell::is_bounded).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSettings {
    pub width: usize,
    pub height: usize,
    pub classify_iter: u32,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings { width: 256, height: 256, classify_iter: 500 }
    }
}

fn solve_from_neighbour(spec: &SliceSpec, nb: &SlicePoint, a: Complex, pixel: f64, classify_iter: u32) -> SliceCell {
    let direct = solve_slice_with(spec, a, nb.b, Some(nb.log_zeta), false);
    let res = match direct {
        Ok(p) => Ok(p),
        Err(_) => continue_slice_with(spec, nb, a, pixel / 64.0),
    };
    match res {
        Ok(mut p) => match classify(spec, &p, classify_iter) {
            Ok(c) => {
                p.classification = Some(c);
                SliceCell::Solved(p)
            }
            Err(e) => SliceCell::Failed(FailureCause::of(&e)),
        },
        Err(e) => {
            // distinguish cells that sit outside the slice near the neighbour's b
            let outside = spec
                .instance(a, nb.b)
                .map(|f| matches!(potential::check_slice_preconditions(&f), Err(Error::NotInSlice { .. })))
                .unwrap_or(false);
            SliceCell::Failed(if outside { FailureCause::NotInSlice } else { FailureCause::of(&e) })
        }
    }
}

/// Rasterizes `L+(ζ)` over `window`, seeded from the solved point `anchor`.
///
/// The anchor pixel is reached by continuation from `anchor`, then the anchor
/// column sequentially, then every row outward from that column in parallel.
/// Remaining cells are retried from solved 4-neighbours in synchronous passes.
/// Each cell depends only on cells fixed by earlier phases, so the result does
/// not depend on thread scheduling.
pub fn render_slice(spec: &SliceSpec, window: &Window, settings: &RenderSettings, anchor: &SlicePoint) -> Result<SliceRaster> {
    if settings.width == 0 || settings.height == 0 {
        return Err(Error::Domain("raster dimensions must be positive".into()));
    }
    let (w, h) = window.dims(settings.width, settings.height);
    let pixel = if window.half_width == 0.0 { 1e-3 } else { window.pixel_size(w) };
    let iter = settings.classify_iter;
    let mut cells = vec![SliceCell::Failed(FailureCause::Unreached); w * h];

    let (ar, ac) = window
        .pixel_of(anchor.a, w, h)
        .unwrap_or_else(|| nearest_pixel(window, anchor.a, w, h));
    let a0 = window.pixel_center(ar, ac, w, h);
    cells[ar * w + ac] = match continue_slice_with(spec, anchor, a0, 1e-9) {
        Ok(p) => solve_from_neighbour(spec, &p, a0, pixel, iter),
        Err(e) => SliceCell::Failed(FailureCause::of(&e)),
    };

    // anchor column
    for dir in [-1i64, 1] {
        let mut r = ar as i64 + dir;
        while r >= 0 && (r as usize) < h {
            let prev = (r - dir) as usize;
            if let SliceCell::Solved(nb) = cells[prev * w + ac] {
                let a = window.pixel_center(r as usize, ac, w, h);
                cells[r as usize * w + ac] = solve_from_neighbour(spec, &nb, a, pixel, iter);
            }
            r += dir;
        }
    }

    // rows outward from the anchor column
    let column: Vec<SliceCell> = (0..h).map(|r| cells[r * w + ac]).collect();
    let rows: Vec<Vec<SliceCell>> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut row = vec![SliceCell::Failed(FailureCause::Unreached); w];
            row[ac] = column[r];
            for dir in [-1i64, 1] {
                let mut c = ac as i64 + dir;
                while c >= 0 && (c as usize) < w {
                    let prev = (c - dir) as usize;
                    if let SliceCell::Solved(nb) = row[prev] {
                        let a = window.pixel_center(r, c as usize, w, h);
                        row[c as usize] = solve_from_neighbour(spec, &nb, a, pixel, iter);
                    } else {
                        break;
                    }
                    c += dir;
                }
            }
            row
        })
        .collect();
    for (r, row) in rows.into_iter().enumerate() {
        cells[r * w..(r + 1) * w].copy_from_slice(&row);
    }

    // synchronous repair passes from solved neighbours
    let mut tried = vec![0u8; w * h];
    loop {
        let mut jobs: Vec<(usize, u8, SlicePoint)> = Vec::new();
        for idx in 0..w * h {
            if cells[idx].point().is_some() {
                continue;
            }
            let (r, c) = (idx / w, idx % w);
            let nbrs = [
                (r > 0).then(|| idx - w),
                (c > 0).then(|| idx - 1),
                (c + 1 < w).then(|| idx + 1),
                (r + 1 < h).then(|| idx + w),
            ];
            for (bit, nb) in nbrs.iter().enumerate() {
                let mask = 1u8 << bit;
                if let Some(n) = nb {
                    if tried[idx] & mask == 0 {
                        if let SliceCell::Solved(p) = cells[*n] {
                            jobs.push((idx, mask, p));
                            break;
                        }
                    }
                }
            }
        }
        if jobs.is_empty() {
            break;
        }
        let results: Vec<SliceCell> = jobs
            .par_iter()
            .map(|(idx, _, nb)| {
                let a = window.pixel_center(idx / w, idx % w, w, h);
                solve_from_neighbour(spec, nb, a, pixel, iter)
            })
            .collect();
        for ((idx, mask, _), cell) in jobs.iter().zip(results) {
            tried[*idx] |= mask;
            match cell {
                SliceCell::Solved(_) => cells[*idx] = cell,
                SliceCell::Failed(cause) => {
                    if let SliceCell::Failed(old) = cells[*idx] {
                        // keep the most informative cause
                        if old == FailureCause::Unreached || cause == FailureCause::NotInSlice {
                            cells[*idx] = SliceCell::Failed(cause);
                        }
                    }
                }
            }
        }
    }

    Ok(SliceRaster { width: w, height: h, window: *window, cells })
}

fn nearest_pixel(window: &Window, z: Complex, w: usize, h: usize) -> (usize, usize) {
    let s = window.pixel_size(w).max(f64::MIN_POSITIVE);
    let col = ((z.re - (window.center[0] - window.half_width)) / s).floor();
    let row = ((window.center[1] + h as f64 * s / 2.0 - z.im) / s).floor();
    (row.clamp(0.0, (h - 1) as f64) as usize, col.clamp(0.0, (w - 1) as f64) as usize)
}

/// `e^{2πiα}`
pub fn rotation(alpha: Complex) -> Complex {
    (Complex::new(0.0, 2.0 * PI) * alpha).exp()
}

pub const PARABOLIC_TOL: f64 = 1e-9;
pub const MAX_CONDITION: f64 = 1e12;

/// 2-norm condition number of a complex 2×2 matrix.
fn condition_2x2(m: [[Complex; 2]; 2]) -> f64 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let fro2: f64 = m.iter().flatten().map(|x| x.norm_sqr()).sum();
    let d2 = det.norm_sqr();
    if d2 == 0.0 {
        return f64::INFINITY;
    }
    // σ1² + σ2² = fro², σ1 σ2 = |det|
    let disc = (fro2 * fro2 - 4.0 * d2).max(0.0).sqrt();
    let s1 = ((fro2 + disc) / 2.0).sqrt();
    let s2 = det.norm() / s1;
    s1 / s2
}

/// `(f^p(z) - z, (f^p)'(z) - μ)` together with the slice point used for `b(a)`.
fn cycle_residual(f: &FamilyInstance, z: Complex, period: u32, mu: Complex) -> Result<(Complex, Complex)> {
    let (fz, dfz) = f
        .iterate_with_deriv(z, period)
        .ok_or_else(|| Error::SolverFailure("cycle orbit left the finite plane".into()))?;
    Ok((fz - z, dfz - mu))
}

struct CycleNewton<'a> {
    spec: &'a SliceSpec,
    period: u32,
}

impl CycleNewton<'_> {
    fn slice_at(&self, near: &SlicePoint, a: Complex) -> Result<SlicePoint> {
        solve_slice_with(self.spec, a, near.b, Some(near.log_zeta), false)
            .or_else(|_| continue_slice_with(self.spec, near, a, 1e-12))
    }

    /// Newton on `(a, z)` for target multiplier `mu`, starting at `(point, z)`.
    fn solve(&self, point: &SlicePoint, z0: Complex, mu: Complex) -> Result<(SlicePoint, Complex)> {
        let mut pt = *point;
        let mut z = z0;
        let mut f = pt.instance(self.spec)?;
        let mut r = cycle_residual(&f, z, self.period, mu)?;
        for _ in 0..60 {
            let rn = r.0.norm().max(r.1.norm());
            if rn < 1e-3 * PARABOLIC_TOL {
                break;
            }
            let hz = 1e-6 * (1.0 + z.norm());
            let rzp = cycle_residual(&f, z + hz, self.period, mu)?;
            let rzm = cycle_residual(&f, z - hz, self.period, mu)?;
            let ha = 1e-6 * (1.0 + pt.a.norm());
            let pp = self.slice_at(&pt, pt.a + ha)?;
            let pm = self.slice_at(&pt, pt.a - ha)?;
            let rap = cycle_residual(&pp.instance(self.spec)?, z, self.period, mu)?;
            let ram = cycle_residual(&pm.instance(self.spec)?, z, self.period, mu)?;
            let jac = [
                [(rap.0 - ram.0) / (2.0 * ha), (rzp.0 - rzm.0) / (2.0 * hz)],
                [(rap.1 - ram.1) / (2.0 * ha), (rzp.1 - rzm.1) / (2.0 * hz)],
            ];
            let cond = condition_2x2(jac);
            if !(cond <= MAX_CONDITION) {
                return Err(Error::IllConditioned(cond));
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            let da = (r.0 * jac[1][1] - r.1 * jac[0][1]) / det;
            let dz = (jac[0][0] * r.1 - jac[1][0] * r.0) / det;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let a_new = pt.a - da * t;
                let z_new = z - dz * t;
                if let Ok(p_new) = self.slice_at(&pt, a_new) {
                    if let Ok(f_new) = p_new.instance(self.spec) {
                        if let Ok(r_new) = cycle_residual(&f_new, z_new, self.period, mu) {
                            if r_new.0.norm().max(r_new.1.norm()) < rn {
                                pt = p_new;
                                z = z_new;
                                f = f_new;
                                r = r_new;
                                accepted = true;
                                break;
                            }
                        }
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if r.0.norm() < PARABOLIC_TOL && r.1.norm() < PARABOLIC_TOL {
            let pt = solve_slice_with(self.spec, pt.a, pt.b, Some(pt.log_zeta), true)?;
            Ok((pt, z))
        } else {
            Err(Error::NotFound(format!(
                "cycle system residual ({:.3e}, {:.3e}) above tolerance",
                r.0.norm(),
                r.1.norm()
            )))
        }
    }
}

fn cycle_record(spec: &SliceSpec, p: &SlicePoint, z: Complex, period: u32) -> Result<CycleRecord> {
    let f = p.instance(spec)?;
    let (_, m) = f
        .iterate_with_deriv(z, period)
        .ok_or_else(|| Error::SolverFailure("cycle orbit left the finite plane".into()))?;
    Ok(CycleRecord { period, representative: z, multiplier: m })
}

/// Attracting cycle of `point` reached by its passive critical orbit.
pub fn attracting_cycle(spec: &SliceSpec, point: &SlicePoint, max_iter: u32) -> Option<CycleRecord> {
    let f = point.instance(spec).ok()?;
    let (_, passive) = f.critical_orbit_starts();
    let (escape, tail) = orbit_escape(&f, passive, max_iter);
    if escape.is_some() {
        return None;
    }
    detect_cycle(&f, tail).filter(|c| c.multiplier.norm() < 1.0)
}

/// Moves from an attracting parameter to the boundary point of its hyperbolic
/// component where the cycle multiplier is `e^{2πi p/q}`.
pub fn find_parabolic_root_from(
    spec: &SliceSpec,
    seed: &SlicePoint,
    cycle: &CycleRecord,
    p: i64,
    q: i64,
) -> Result<(SlicePoint, CycleRecord)> {
    if q < 1 {
        return Err(Error::Domain(format!("q must be positive, got {q}")));
    }
    let target = rotation(Complex::new(p as f64 / q as f64, 0.0));
    let newton = CycleNewton { spec, period: cycle.period };
    let m0 = cycle.multiplier;
    let mut t: f64 = 0.0;
    let mut dt: f64 = 0.25;
    let mut pt = *seed;
    let mut z = cycle.representative;
    while t < 1.0 {
        let t_next = (t + dt).min(1.0);
        let mu = m0 + (target - m0) * t_next;
        match newton.solve(&pt, z, mu) {
            Ok((p_new, z_new)) => {
                pt = p_new;
                z = z_new;
                t = t_next;
                dt = (dt * 1.5).min(0.5);
            }
            Err(Error::IllConditioned(c)) if t_next >= 1.0 && dt < 1e-6 => return Err(Error::IllConditioned(c)),
            Err(e) => {
                dt *= 0.5;
                if dt < 1e-8 {
                    return Err(match e {
                        Error::IllConditioned(_) => e,
                        _ => Error::NotFound(format!("multiplier path stalled at t = {t:.6}: {e}")),
                    });
                }
            }
        }
    }
    let rec = cycle_record(spec, &pt, z, cycle.period)?;
    Ok((pt, rec))
}

/// Searches `raster` for attracting pixels of `period` and continues the one
/// with the smallest multiplier to the `p/q` root of its component.
pub fn find_parabolic_root(
    spec: &SliceSpec,
    raster: &SliceRaster,
    p: i64,
    q: i64,
    period: u32,
    classify_iter: u32,
) -> Result<(SlicePoint, CycleRecord)> {
    find_parabolic_root_in(spec, raster, None, p, q, period, classify_iter)
}

/// As [`find_parabolic_root`], restricted to the cells where `mask` is set.
pub fn find_parabolic_root_in(
    spec: &SliceSpec,
    raster: &SliceRaster,
    mask: Option<&[bool]>,
    p: i64,
    q: i64,
    period: u32,
    classify_iter: u32,
) -> Result<(SlicePoint, CycleRecord)> {
    let mut seeds: Vec<(f64, usize)> = raster
        .cells
        .iter()
        .enumerate()
        .filter(|(i, _)| mask.is_none_or(|m| m[*i]))
        .filter_map(|(i, c)| match c.classification() {
            Some(Classification::BoundedWithAttractor { period: pp, multiplier }) if pp == period => {
                Some((multiplier[0].hypot(multiplier[1]), i))
            }
            _ => None,
        })
        .collect();
    if seeds.is_empty() {
        return Err(Error::NotFound(format!("no attracting pixel of period {period} in region")));
    }
    seeds.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut last = Error::NotFound("no seed converged".into());
    for &(_, idx) in seeds.iter().take(4) {
        let pt = raster.cells[idx].point().expect("classified cells are solved");
        let Some(cycle) = attracting_cycle(spec, pt, classify_iter) else { continue };
        if cycle.period != period {
            continue;
        }
        match find_parabolic_root_from(spec, pt, &cycle, p, q) {
            Ok(r) => return Ok(r),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Continues a parabolic parameter in the rotation number from its own
/// `p/q` to `alpha`, keeping the cycle multiplier at `e^{2πiα}`.
pub fn tune_multiplier(
    spec: &SliceSpec,
    seed: &(SlicePoint, CycleRecord),
    alpha: Complex,
) -> Result<(SlicePoint, CycleRecord)> {
    if !is_finite(alpha) {
        return Err(Error::Domain(format!("alpha must be finite, got {alpha}")));
    }
    let (pt0, cyc0) = seed;
    // rotation number of the seed nearest to alpha
    let base = cyc0.multiplier.arg() / (2.0 * PI);
    let alpha0 = base + (alpha.re - base).round();
    if (alpha - alpha0).norm() > 0.2 {
        return Err(Error::Domain(format!("alpha {alpha} is more than 0.2 from the seed rotation number {alpha0:.6}")));
    }
    let newton = CycleNewton { spec, period: cyc0.period };
    let start = Complex::new(alpha0, 0.0);
    let mut pt = *pt0;
    let mut z = cyc0.representative;
    if (rotation(alpha) - cyc0.multiplier).norm() <= PARABOLIC_TOL {
        let rec = cycle_record(spec, &pt, z, cyc0.period)?;
        if (rec.multiplier - rotation(alpha)).norm() <= PARABOLIC_TOL {
            return Ok((pt, rec));
        }
    }
    let mut t: f64 = 0.0;
    let mut dt: f64 = 0.1;
    while t < 1.0 {
        let t_next = (t + dt).min(1.0);
        let mu = rotation(start + (alpha - start) * t_next);
        match newton.solve(&pt, z, mu) {
            Ok((p_new, z_new)) => {
                pt = p_new;
                z = z_new;
                t = t_next;
                dt = (dt * 2.0).min(0.5);
            }
            Err(e) => {
                dt *= 0.5;
                if dt * (alpha - start).norm() < 1e-8 || dt < 1e-8 {
                    return Err(Error::TuneFailed(format!("continuation in alpha stalled at t = {t:.6}: {e}")));
                }
            }
        }
    }
    let rec = cycle_record(spec, &pt, z, cyc0.period)?;
    if (rec.multiplier - rotation(alpha)).norm() > PARABOLIC_TOL {
        return Err(Error::TuneFailed(format!(
            "multiplier error {:.3e} after continuation",
            (rec.multiplier - rotation(alpha)).norm()
        )));
    }
    Ok((pt, rec))
}

/// 8-connected components of `mask`; returns per-cell labels (0 = background)
/// and the component count. Labels follow row-major order of first cells.
pub fn label_components(mask: &[bool], width: usize, height: usize) -> (Vec<u32>, u32) {
    let mut labels = vec![0u32; mask.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (r, c) = ((idx / width) as i64, (idx % width) as i64);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= height as i64 || cc >= width as i64 {
                        continue;
                    }
                    let n = rr as usize * width + cc as usize;
                    if mask[n] && labels[n] == 0 {
                        labels[n] = next;
                        stack.push(n);
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Smallest window (padded by `pad`) around the cells where `select` holds.
pub fn frame_cells(raster: &SliceRaster, select: impl Fn(usize) -> bool, pad: f64) -> Option<Window> {
    let (w, h) = (raster.width, raster.height);
    let mut lo = Complex::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Complex::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut any = false;
    for idx in (0..w * h).filter(|&i| select(i)) {
        let z = raster.window.pixel_center(idx / w, idx % w, w, h);
        lo = Complex::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex::new(hi.re.max(z.re), hi.im.max(z.im));
        any = true;
    }
    if !any {
        return None;
    }
    let s = raster.window.pixel_size(w);
    let half = ((hi.re - lo.re).max(hi.im - lo.im) / 2.0 + s) * pad;
    Window::new((lo + hi) / 2.0, half).ok()
}

/// Windows found by a coarse pre-scan around `anchor`: one enclosing the
/// whole reachable slice, and one framing the largest bounded component.
pub fn auto_windows(spec: &SliceSpec, anchor: &SlicePoint, prescan: usize, classify_iter: u32) -> Result<(Window, Option<Window>)> {
    let scan = Window::new(anchor.a, 2.0 * anchor.a.norm() + 1.0)?;
    let settings = RenderSettings { width: prescan, height: prescan, classify_iter };
    let raster = render_slice(spec, &scan, &settings, anchor)?;
    let leaf = frame_cells(&raster, |i| raster.cells[i].point().is_some(), 1.05)
        .ok_or_else(|| Error::NotFound("pre-scan solved no pixels".into()))?;
    let raster = render_slice(spec, &leaf, &settings, anchor)?;
    let mask = raster.bounded_mask();
    let (labels, count) = label_components(&mask, raster.width, raster.height);
    let mut sizes = vec![0usize; count as usize + 1];
    for &l in &labels {
        sizes[l as usize] += 1;
    }
    let best = (1..=count as usize).max_by(|&x, &y| sizes[x].cmp(&sizes[y]).then(y.cmp(&x)));
    let bounded = best.and_then(|b| frame_cells(&raster, |i| labels[i] as usize == b, 2.0));
    Ok((leaf, bounded))
}
