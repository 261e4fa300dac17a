//! Hausdorff dimension estimates: box counting on membership rasters, and the
//! root of the pressure equation for conformal repellers.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{is_finite, Complex, FamilyInstance, FamilyKind};
use crate::potential::{escape_radius, potential_value};
use crate::slice::Window;

/// Bailout for the distance estimate; large enough that `log|F|` dominates.
const DISTANCE_BAILOUT: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RasterKind {
    /// orbit of the pixel centre bounded through the depth
    Filled,
    /// pixel within about one pixel of the Julia set (escape band proxy)
    JuliaBand,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipRaster {
    pub resolution: usize,
    pub window: Window,
    pub depth: u32,
    pub kind: RasterKind,
    /// row-major, row 0 on top
    pub bits: Vec<bool>,
}

impl MembershipRaster {
    pub fn from_bits(resolution: usize, window: Window, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != resolution * resolution || resolution == 0 {
            return Err(Error::Domain(format!("expected {0}x{0} bits, got {1}", resolution, bits.len())));
        }
        Ok(MembershipRaster { resolution, window, depth: 0, kind: RasterKind::Filled, bits })
    }

    pub fn occupied(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn area_fraction(&self) -> f64 {
        self.occupied() as f64 / self.bits.len() as f64
    }
}

/// Escape data for one point: `None` if bounded through `depth`, otherwise the
/// distance estimate `|F| log|F| / (2|F'|)` (zero-safe).
fn escape_distance(f: &FamilyInstance, z: Complex, depth: u32, radius: f64) -> Option<f64> {
    let mut w = z;
    let mut dw = Complex::new(1.0, 0.0);
    let mut escaped_at = None;
    for k in 0..depth {
        let m = w.norm();
        if escaped_at.is_none() && m > radius {
            escaped_at = Some(k);
        }
        if m > DISTANCE_BAILOUT || !is_finite(w) {
            break;
        }
        let (fw, dfw) = f.eval_with_deriv(w);
        w = fw;
        dw *= dfw;
    }
    if escaped_at.is_none() && w.norm() <= radius && is_finite(w) {
        return None;
    }
    let m = w.norm();
    if !m.is_finite() || !is_finite(dw) {
        return Some(f64::INFINITY);
    }
    if m <= 1.0 {
        return Some(f64::INFINITY);
    }
    Some(0.5 * m * m.ln() / dw.norm())
}

fn bounded_through(f: &FamilyInstance, z: Complex, depth: u32, radius: f64) -> bool {
    let r2 = radius * radius;
    let mut w = z;
    for _ in 0..depth {
        if w.norm_sqr() > r2 || !is_finite(w) {
            return false;
        }
        w = f.eval_raw(w);
    }
    w.norm_sqr() <= r2 && is_finite(w)
}

/// Filled-set proxy: pixel centres whose orbit stays in the escape disk.
pub fn filled_raster(f: &FamilyInstance, window: &Window, resolution: usize, depth: u32) -> Result<MembershipRaster> {
    if resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    let radius = escape_radius(f);
    let n = resolution;
    let bits: Vec<bool> = (0..n)
        .into_par_iter()
        .flat_map_iter(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| bounded_through(f, window.pixel_center(r, c, n, n), depth, radius))
        .collect();
    Ok(MembershipRaster { resolution: n, window: *window, depth, kind: RasterKind::Filled, bits })
}

/// Julia-set proxy: escaping pixels whose distance estimate is below half the
/// pixel diagonal, plus bounded pixels next to an escaping pixel outside that band.
pub fn julia_raster(f: &FamilyInstance, window: &Window, resolution: usize, depth: u32) -> Result<MembershipRaster> {
    if resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    let radius = escape_radius(f);
    let n = resolution;
    // half the pixel diagonal: the estimate is a lower bound on the true distance
    let half_pixel = std::f64::consts::FRAC_1_SQRT_2 * window.pixel_size(n);
    let dist: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .flat_map_iter(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| escape_distance(f, window.pixel_center(r, c, n, n), depth, radius))
        .collect();
    let bits: Vec<bool> = (0..n * n)
        .into_par_iter()
        .map(|idx| match dist[idx] {
            Some(d) => d < half_pixel,
            None => {
                let (r, c) = ((idx / n) as i64, (idx % n) as i64);
                let mut edge = false;
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (rr, cc) = (r + dr, c + dc);
                        if rr >= 0 && cc >= 0 && rr < n as i64 && cc < n as i64 {
                            edge |= dist[rr as usize * n + cc as usize].is_some_and(|d| d >= half_pixel);
                        }
                    }
                }
                edge
            }
        })
        .collect();
    Ok(MembershipRaster { resolution: n, window: *window, depth, kind: RasterKind::JuliaBand, bits })
}

/// A square window around the filled Julia set: the preimage of the escape
/// disk, sampled on its boundary circle, padded by 5%.
pub fn julia_window(f: &FamilyInstance) -> Window {
    let radius = escape_radius(f);
    let mut extent: f64 = 0.0;
    for k in 0..64 {
        let y = Complex::from_polar(radius, 2.0 * PI * f64::from(k) / 64.0);
        for z in preimages(f, y) {
            extent = extent.max(z.norm());
        }
    }
    if !(extent > 0.0) || !extent.is_finite() {
        extent = radius;
    }
    Window::new(Complex::new(0.0, 0.0), 1.05 * extent.min(radius)).expect("finite window")
}

/// Attractor of a similarity system: the images of the base centre under all
/// words long enough that each piece is smaller than half a pixel.
pub fn similarity_raster(system: &BranchSystem, resolution: usize) -> Result<MembershipRaster> {
    let (ratio, _) = system
        .similarity_data()
        .ok_or_else(|| Error::Domain("attractor raster needs a similarity system".into()))?;
    let window = Window::new(system.center, 1.05 * system.radius)?;
    let pixel = window.pixel_size(resolution);
    let depth = ((0.5 * pixel / system.radius).ln() / ratio.ln()).ceil().max(1.0) as u32;
    let m = system.branch_count();
    if (m as f64).powi(depth as i32) > (1u64 << 24) as f64 {
        return Err(Error::Domain(format!("{m}^{depth} attractor pieces is too many")));
    }
    let mut points = vec![system.center];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(points.len() * m);
        for &p in &points {
            for i in 0..m {
                next.push(system.apply(i, p)?.0);
            }
        }
        points = next;
    }
    let mut bits = vec![false; resolution * resolution];
    for p in points {
        if let Some((row, col)) = window.pixel_of(p, resolution, resolution) {
            bits[row * resolution + col] = true;
        }
    }
    let mut raster = MembershipRaster::from_bits(resolution, window, bits)?;
    raster.depth = depth;
    raster.kind = RasterKind::JuliaBand;
    Ok(raster)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    BoxCount,
    Pressure,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BoxCount => "box",
            Method::Pressure => "pressure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSettings {
    /// box sides in pixels (box counting)
    pub scales: Vec<u32>,
    pub resolution: usize,
    /// refinement depth (pressure) or orbit depth (raster)
    pub depth: u32,
    pub branch_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub method: Method,
    pub value: f64,
    pub uncertainty: f64,
    /// RMS residual of the log-log fit (box counting only)
    pub fit_residual: Option<f64>,
    pub settings: DimensionSettings,
}

impl DimensionEstimate {
    fn new(method: Method, value: f64, uncertainty: f64, fit_residual: Option<f64>, settings: DimensionSettings) -> Self {
        let value = value.clamp(0.0, 2.0);
        let uncertainty = uncertainty.abs().min(value);
        DimensionEstimate { method, value, uncertainty, fit_residual, settings }
    }
}

/// Occupied boxes of side `s` pixels.
pub fn box_count(raster: &MembershipRaster, s: usize) -> usize {
    let n = raster.resolution;
    let m = n.div_ceil(s);
    let mut occ = vec![false; m * m];
    for (idx, &b) in raster.bits.iter().enumerate() {
        if b {
            let (r, c) = (idx / n, idx % n);
            occ[(r / s) * m + c / s] = true;
        }
    }
    occ.iter().filter(|&&b| b).count()
}

/// Dyadic box sides from 2 pixels up to a sixteenth of the raster.
pub fn default_scales(resolution: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut s = 2usize;
    while s * 16 <= resolution {
        out.push(s as u32);
        s *= 2;
    }
    out
}

/// Least-squares slope of `log N(ε)` against `log(1/ε)`.
pub fn box_dimension(raster: &MembershipRaster) -> Result<DimensionEstimate> {
    box_dimension_with(raster, &default_scales(raster.resolution))
}

pub fn box_dimension_with(raster: &MembershipRaster, scales: &[u32]) -> Result<DimensionEstimate> {
    if raster.occupied() == 0 {
        return Err(Error::NoEstimate("raster is empty".into()));
    }
    if scales.len() < 5 {
        return Err(Error::NoEstimate(format!("{} scales given, need at least 5", scales.len())));
    }
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .map(|&s| {
            let eps = s as f64 / raster.resolution as f64;
            ((1.0 / eps).ln(), (box_count(raster, s as usize) as f64).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    let rms = (ss_res / n).sqrt();
    Ok(DimensionEstimate::new(
        Method::BoxCount,
        slope,
        stderr,
        Some(rms),
        DimensionSettings { scales: scales.to_vec(), resolution: raster.resolution, depth: raster.depth, branch_count: 0 },
    ))
}

/// Occupied-area fractions of rasters of one window at increasing resolution.
pub fn area_decay_diagnostic(rasters: &[MembershipRaster]) -> Vec<f64> {
    rasters.iter().map(MembershipRaster::area_fraction).collect()
}

/// True when each fraction is at most 1% (relative) above its predecessor.
pub fn is_non_increasing(fractions: &[f64]) -> bool {
    fractions.windows(2).all(|w| w[1] <= w[0] * 1.01)
}

/// Roots of the monic polynomial with ascending coefficients `c` (Durand–Kerner).
pub fn polynomial_roots(c: &[Complex]) -> Vec<Complex> {
    let d = c.len() - 1;
    let lead = c[d];
    let eval = |z: Complex| c.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &k| acc * z + k) / lead;
    let bound = 1.0 + c[..d].iter().map(|k| (k / lead).norm()).fold(0.0, f64::max);
    let mut roots: Vec<Complex> = (0..d)
        .map(|k| Complex::from_polar(bound, 0.4 + 2.0 * PI * k as f64 / d as f64))
        .collect();
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for i in 0..d {
            let mut den = Complex::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * bound {
            break;
        }
    }
    // polish each root with Newton on the polynomial itself
    for r in roots.iter_mut() {
        for _ in 0..5 {
            let (mut p, mut dp) = (c[d], Complex::new(0.0, 0.0));
            for &k in c[..d].iter().rev() {
                dp = dp * *r + p;
                p = p * *r + k;
            }
            if dp.norm() == 0.0 {
                break;
            }
            *r -= p / dp;
        }
    }
    roots
}

/// All preimages of `y` under `f`.
pub fn preimages(f: &FamilyInstance, y: Complex) -> Vec<Complex> {
    match f.kind() {
        FamilyKind::McMullen => {
            // z^{2n} + (b - y) z^n + a² = 0
            let n = f.degree();
            let p = f.b() - y;
            let a2 = f.a() * f.a();
            let disc = (p * p - a2 * 4.0).sqrt();
            let mut out = Vec::with_capacity(2 * n as usize);
            for u in [(-p + disc) / 2.0, (-p - disc) / 2.0] {
                let root = u.powf(1.0 / f64::from(n));
                for k in 0..n {
                    out.push(root * Complex::from_polar(1.0, 2.0 * PI * f64::from(k) / f64::from(n)));
                }
            }
            out
        }
        _ => {
            let mut c = f.coefficients().to_vec();
            c[0] += f.b() - y;
            polynomial_roots(&c)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Branches {
    /// `g_i(z) = c_i + ratio · (z - center)`
    Similarity { centers: Vec<Complex>, ratio: f64 },
    /// inverse branches of `f`, labelled by the preimages of the disk centre
    Inverse { f: FamilyInstance, roots: Vec<Complex> },
}

/// Contractions of a base disk into itself with pairwise disjoint images.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSystem {
    pub center: Complex,
    pub radius: f64,
    branches: Branches,
    /// `transitions[i][j]`: branch `j` may follow branch `i` (full shift here)
    pub transitions: Vec<Vec<bool>>,
}

const MARGIN: f64 = 1e-3;

impl BranchSystem {
    pub fn branch_count(&self) -> usize {
        match &self.branches {
            Branches::Similarity { centers, .. } => centers.len(),
            Branches::Inverse { roots, .. } => roots.len(),
        }
    }

    /// `(g_i(y), g_i'(y))`
    pub fn apply(&self, i: usize, y: Complex) -> Result<(Complex, Complex)> {
        match &self.branches {
            Branches::Similarity { centers, ratio } => {
                Ok((centers[i] + (y - self.center) * *ratio, Complex::new(*ratio, 0.0)))
            }
            Branches::Inverse { f, roots } => {
                let z = continue_preimage(f, self.center, roots[i], y, self.radius)?;
                let (_, df) = f.eval_with_deriv(z);
                Ok((z, df.inv()))
            }
        }
    }

    fn check_geometry(&self) -> Result<()> {
        let samples = 256;
        let d = self.branch_count();
        let mut curves: Vec<Vec<Complex>> = vec![Vec::with_capacity(samples); d];
        for k in 0..samples {
            let y = self.center + Complex::from_polar(self.radius, 2.0 * PI * k as f64 / samples as f64);
            for (i, curve) in curves.iter_mut().enumerate() {
                let (z, _) = self.apply(i, y)?;
                if (z - self.center).norm() > self.radius * (1.0 - MARGIN) {
                    return Err(Error::NotHyperbolicCantor(format!(
                        "branch {i} image reaches the base disk boundary"
                    )));
                }
                curve.push(z);
            }
        }
        let inner = |i: usize| -> Complex {
            self.apply(i, self.center).map(|p| p.0).unwrap_or(self.center)
        };
        for i in 0..d {
            for j in i + 1..d {
                let gap = curves[i]
                    .iter()
                    .flat_map(|a| curves[j].iter().map(move |b| (a - b).norm()))
                    .fold(f64::INFINITY, f64::min);
                if gap < MARGIN * self.radius {
                    return Err(Error::NotHyperbolicCantor(format!("branch images {i} and {j} overlap")));
                }
                // one image inside another would put the inner branch point inside the other curve
                if winding(&curves[i], inner(j)) != 0 || winding(&curves[j], inner(i)) != 0 {
                    return Err(Error::NotHyperbolicCantor(format!("branch images {i} and {j} are nested")));
                }
            }
        }
        Ok(())
    }

    /// Synthetic IFS of `m` similarities of ratio `ratio` on the unit disk,
    /// centred on a circle of radius `1 - ratio - 0.01`.
    pub fn synthetic(m: usize, ratio: f64) -> Result<Self> {
        if m < 2 || !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Domain(format!("synthetic IFS needs m >= 2 and 0 < ratio < 1, got {m}, {ratio}")));
        }
        let rc = 1.0 - ratio - 0.01;
        let centers = (0..m)
            .map(|k| Complex::from_polar(rc, 2.0 * PI * k as f64 / m as f64))
            .collect();
        let sys = BranchSystem {
            center: Complex::new(0.0, 0.0),
            radius: 1.0,
            branches: Branches::Similarity { centers, ratio },
            transitions: vec![vec![true; m]; m],
        };
        sys.check_geometry().map_err(|e| Error::Domain(format!("synthetic IFS is not disjoint: {e}")))?;
        Ok(sys)
    }

    /// The `m` similarity ratios `r` and centres of a synthetic system, if any.
    pub fn similarity_data(&self) -> Option<(f64, &[Complex])> {
        match &self.branches {
            Branches::Similarity { centers, ratio } => Some((*ratio, centers)),
            _ => None,
        }
    }
}

fn winding(curve: &[Complex], p: Complex) -> i64 {
    let mut total = 0.0;
    for k in 0..curve.len() {
        let a = curve[k] - p;
        let b = curve[(k + 1) % curve.len()] - p;
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

/// Newton continuation of a preimage from `(y0, z0)` to `y`.
fn continue_preimage(f: &FamilyInstance, y0: Complex, z0: Complex, y: Complex, radius: f64) -> Result<Complex> {
    let steps = ((8.0 * (y - y0).norm() / radius).ceil() as usize).max(1);
    let mut z = z0;
    for k in 1..=steps {
        let target = y0 + (y - y0) * (k as f64 / steps as f64);
        let mut converged = false;
        for _ in 0..50 {
            let (fz, dfz) = f.eval_with_deriv(z);
            if dfz.norm() == 0.0 || !is_finite(fz) {
                break;
            }
            let step = (fz - target) / dfz;
            z -= step;
            if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                converged = true;
                break;
            }
        }
        if !converged || !is_finite(z) {
            return Err(Error::NotHyperbolicCantor(format!("inverse branch continuation failed at {target}")));
        }
    }
    Ok(z)
}

/// Inverse branches of `f` over a disk centred at 0.
///
/// The radius starts at the escape radius and shrinks by 10% until every
/// critical value lies outside, the preimage of the disk lies inside, and
/// following each branch around the boundary returns to itself.
pub fn build_branch_system(f: &FamilyInstance) -> Result<BranchSystem> {
    let data = f.critical_data();
    for v in &data.critical_values {
        if !(potential_value(f, *v) > 0.0) {
            return Err(Error::NotHyperbolicCantor(format!("critical value {v} does not escape")));
        }
    }
    let center = Complex::new(0.0, 0.0);
    let vmin = data.critical_values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let mut radius = escape_radius(f);
    let mut last = Error::NotHyperbolicCantor("no admissible base disk".into());
    for _ in 0..60 {
        if radius < vmin * (1.0 - MARGIN) {
            match try_system(f, center, radius) {
                Ok(sys) => return Ok(sys),
                Err(e) => last = e,
            }
        }
        radius *= 0.9;
    }
    Err(last)
}

fn try_system(f: &FamilyInstance, center: Complex, radius: f64) -> Result<BranchSystem> {
    let roots = preimages(f, center);
    let d = roots.len();
    // monodromy: each branch followed once around the boundary returns to itself
    let samples = 256;
    for (i, &r0) in roots.iter().enumerate() {
        let start = continue_preimage(f, center, r0, center + radius, radius)?;
        let mut z = start;
        for k in 1..=samples {
            let y0 = center + Complex::from_polar(radius, 2.0 * PI * (k - 1) as f64 / samples as f64);
            let y1 = center + Complex::from_polar(radius, 2.0 * PI * k as f64 / samples as f64);
            z = continue_preimage(f, y0, z, y1, radius)?;
        }
        if (z - start).norm() > 1e-8 * (1.0 + start.norm()) {
            return Err(Error::NotHyperbolicCantor(format!("branch {i} is not single valued on the base disk")));
        }
    }
    let sys = BranchSystem {
        center,
        radius,
        branches: Branches::Inverse { f: f.clone(), roots },
        transitions: vec![vec![true; d]; d],
    };
    sys.check_geometry()?;
    Ok(sys)
}

/// Fixed point of `g_w` and `|g_w'|` there, for the word `w` (applied right to left).
fn word_fixed_point(sys: &BranchSystem, word: &[usize]) -> Result<(Complex, f64)> {
    let mut x = sys.center;
    for _ in 0..200 {
        let mut y = x;
        for &i in word.iter().rev() {
            y = sys.apply(i, y)?.0;
        }
        let done = (y - x).norm() <= 1e-15 * (1.0 + y.norm());
        x = y;
        if done {
            break;
        }
    }
    let mut y = x;
    let mut deriv = 1.0;
    for &i in word.iter().rev() {
        let (z, dz) = sys.apply(i, y)?;
        deriv *= dz.norm();
        y = z;
    }
    Ok((x, deriv))
}

/// Transfer matrix data at depth `k`: for each cylinder `w` of length `k`, the
/// derivative magnitudes `|g_i'(x_w)|` for each branch `i`.
struct PressureData {
    d: usize,
    k: u32,
    /// `log |g_i'(x_w)|`, indexed `[w * d + i]`
    log_derivs: Vec<f64>,
}

fn word_of(mut index: usize, d: usize, k: u32) -> Vec<usize> {
    let mut w = vec![0; k as usize];
    for slot in w.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    w
}

fn pressure_data(sys: &BranchSystem, k: u32) -> Result<PressureData> {
    let d = sys.branch_count();
    let count = d.checked_pow(k).filter(|&c| c <= 1 << 20).ok_or_else(|| {
        Error::Domain(format!("depth {k} with {d} branches is too many cylinders"))
    })?;
    let rows: Vec<Result<Vec<f64>>> = (0..count)
        .into_par_iter()
        .map(|idx| {
            let word = word_of(idx, d, k);
            let (x, _) = word_fixed_point(sys, &word)?;
            (0..d).map(|i| sys.apply(i, x).map(|(_, dz)| dz.norm().ln())).collect()
        })
        .collect();
    let mut log_derivs = Vec::with_capacity(count * d);
    for r in rows {
        log_derivs.extend(r?);
    }
    Ok(PressureData { d, k, log_derivs })
}

/// Spectral radius of `A(s)`, where `(A φ)(w) = Σ_i |g_i'(x_w)|^s φ(i w')`
/// and `w'` drops the last symbol of `w`.
fn spectral_radius(data: &PressureData, s: f64) -> Result<f64> {
    let (d, k) = (data.d, data.k);
    let count = d.pow(k);
    let shift = count / d;
    let weights: Vec<f64> = data.log_derivs.iter().map(|l| (s * l).exp()).collect();
    let mut v = vec![1.0; count];
    let mut next = vec![0.0; count];
    let mut lambda = 0.0;
    for it in 0..20_000 {
        for w in 0..count {
            let tail = w / d;
            let mut acc = 0.0;
            for i in 0..d {
                acc += weights[w * d + i] * v[i * shift + tail];
            }
            next[w] = acc;
        }
        let norm = next.iter().cloned().fold(0.0, f64::max);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::IncreaseDepth(format!("power iteration degenerated at s = {s}")));
        }
        for (a, b) in v.iter_mut().zip(&next) {
            *a = b / norm;
        }
        if it > 2 && (norm - lambda).abs() <= 1e-10 * norm {
            // check the ratio is uniform, not just the max entry
            return Ok(norm);
        }
        lambda = norm;
    }
    Err(Error::IncreaseDepth(format!("power iteration did not settle at s = {s}")))
}

/// Root of `ρ(A(s)) = 1` on `[0, 2]` at one depth.
fn bowen_root(data: &PressureData) -> Result<f64> {
    let r0 = spectral_radius(data, 0.0)?;
    let r2 = spectral_radius(data, 2.0)?;
    if !(r0 > 1.0) {
        return Err(Error::NotHyperbolicCantor(format!("ρ(A(0)) = {r0} is not above 1")));
    }
    if !(r2 < 1.0) {
        return Err(Error::NotHyperbolicCantor(format!("ρ(A(2)) = {r2} is not below 1: not hyperbolic enough")));
    }
    let (mut lo, mut hi) = (0.0, 2.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if spectral_radius(data, mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ρ(A(s))` at depth `k`, exposed for monotonicity checks.
pub fn pressure_spectral_radius(system: &BranchSystem, depth: u32, s: f64) -> Result<f64> {
    let data = pressure_data(system, depth)?;
    spectral_radius(&data, s)
}

/// Bowen root at one refinement depth.
pub fn bowen_root_at(system: &BranchSystem, depth: u32) -> Result<f64> {
    if depth == 0 {
        return Err(Error::Domain("refinement depth must be >= 1".into()));
    }
    bowen_root(&pressure_data(system, depth)?)
}

/// Dimension of the limit set from the pressure equation; the uncertainty is
/// the change from the previous depth.
pub fn pressure_dimension(system: &BranchSystem, refinement_depth: u32) -> Result<DimensionEstimate> {
    if refinement_depth < 2 {
        return Err(Error::Domain("refinement depth must be >= 2".into()));
    }
    let s_k = bowen_root_at(system, refinement_depth)?;
    let s_prev = bowen_root_at(system, refinement_depth - 1)?;
    Ok(DimensionEstimate::new(
        Method::Pressure,
        s_k,
        (s_k - s_prev).abs(),
        None,
        DimensionSettings {
            scales: Vec::new(),
            resolution: 0,
            depth: refinement_depth,
            branch_count: system.branch_count(),
        },
    ))
}

/// Both critical orbits of `f` leave the escape disk within `depth` steps.
pub fn all_critical_escape(f: &FamilyInstance, depth: u32) -> bool {
    let radius = escape_radius(f);
    f.critical_data().critical_values.iter().all(|&v| !bounded_through(f, v, depth, radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn square_raster(n: usize) -> MembershipRaster {
        let bits = (0..n * n)
            .map(|i| {
                let (r, col) = (i / n, i % n);
                r >= n / 4 && r < 3 * n / 4 && col >= n / 4 && col < 3 * n / 4
            })
            .collect();
        MembershipRaster::from_bits(n, Window::new(c(0.0, 0.0), 1.0).unwrap(), bits).unwrap()
    }

    #[test]
    fn square_has_dimension_two() {
        let e = box_dimension(&square_raster(512)).unwrap();
        assert!((e.value - 2.0).abs() <= 0.02, "{e:?}");
        assert!(e.fit_residual.unwrap() <= 0.02);
    }

    #[test]
    fn circle_has_dimension_one() {
        let f = FamilyInstance::cubic(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        let win = Window::new(c(0.0, 0.0), 1.25).unwrap();
        let r = julia_raster(&f, &win, 1024, 200).unwrap();
        let e = box_dimension(&r).unwrap();
        assert!((e.value - 1.0).abs() <= 0.05, "{e:?}");
    }

    #[test]
    fn empty_raster_has_no_estimate() {
        let r = MembershipRaster::from_bits(64, Window::new(c(0.0, 0.0), 1.0).unwrap(), vec![false; 64 * 64]).unwrap();
        assert!(matches!(box_dimension(&r), Err(Error::NoEstimate(_))));
    }

    #[test]
    fn synthetic_ifs_matches_similarity_dimension() {
        let sys = BranchSystem::synthetic(2, 1.0 / 3.0).unwrap();
        let e = pressure_dimension(&sys, 4).unwrap();
        assert!((e.value - 2f64.ln() / 3f64.ln()).abs() <= 1e-4, "{e:?}");
        let sys = BranchSystem::synthetic(3, 0.2).unwrap();
        let e = pressure_dimension(&sys, 3).unwrap();
        assert!((e.value - 3f64.ln() / 5f64.ln()).abs() <= 1e-4, "{e:?}");
    }

    #[test]
    fn durand_kerner_roots() {
        // (z-1)(z+2)(z-3i)
        let roots = polynomial_roots(&[c(0.0, 6.0), c(-2.0, -3.0), c(1.0, -3.0), c(1.0, 0.0)]);
        for t in [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 3.0)] {
            assert!(roots.iter().any(|r| (r - t).norm() < 1e-12));
        }
    }

    #[test]
    fn cubic_branch_system() {
        let f = FamilyInstance::cubic(c(0.0, 0.0), c(10.0, 0.0)).unwrap();
        let sys = build_branch_system(&f).unwrap();
        assert_eq!(sys.branch_count(), 3);
        assert!(sys.radius < 10.0);
        let bounded = FamilyInstance::cubic(c(0.0, 0.0), c(0.1, 0.0)).unwrap();
        assert!(matches!(build_branch_system(&bounded), Err(Error::NotHyperbolicCantor(_))));
    }

    #[test]
    fn mcmullen_branch_system() {
        let f = FamilyInstance::mcmullen(2, c(0.01, 0.0), c(6.0, 0.0)).unwrap();
        let sys = build_branch_system(&f).unwrap();
        assert_eq!(sys.branch_count(), 4);
        let e = pressure_dimension(&sys, 3).unwrap();
        assert!(e.value > 0.0 && e.value < 2.0);
    }

    #[test]
    fn spectral_radius_decreases_in_s() {
        let f = FamilyInstance::cubic(c(0.0, 0.0), c(10.0, 0.0)).unwrap();
        let sys = build_branch_system(&f).unwrap();
        let vals: Vec<f64> = (0..10)
            .map(|k| pressure_spectral_radius(&sys, 3, 0.2 * f64::from(k)).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn filled_raster_is_monotone_in_depth() {
        let f = FamilyInstance::cubic(c(0.3, 0.1), c(0.2, 0.0)).unwrap();
        let win = Window::new(c(0.0, 0.0), 2.0).unwrap();
        let lo = filled_raster(&f, &win, 64, 5).unwrap();
        let hi = filled_raster(&f, &win, 64, 50).unwrap();
        assert!(lo.bits.iter().zip(&hi.bits).all(|(a, b)| *a || !*b));
    }
}
