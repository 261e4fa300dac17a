//! Escape data, the potential (Green's function) and the Böttcher coordinate.
//!
//! The potential is the limit of `d^-k log|f^k(z)|`. The Böttcher coordinate
//! is evaluated by a telescoping series once the orbit is deep in the
//! tangent-to-identity regime (`|w| >= 4R`); shallower points are reached by
//! analytic continuation of `log φ` along a path of increasing potential,
//! starting far out where the principal branch is correct.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::families::{is_finite, Complex, FamilyInstance, FamilyKind};

/// Orbits beyond this modulus are not iterated further; the tail of the
/// potential is `d·log|w|` per step and contributes nothing new.
pub const OVERFLOW_GUARD: f64 = 1e150;

/// Default convergence tolerance for potentials computed internally.
pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_DEPTH: u32 = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialRecord {
    pub value: f64,
    pub escaped: bool,
    pub iterations_used: u32,
    pub final_modulus: f64,
    /// McMullen only: the orbit fell into the disk around the pole, where the
    /// potential is deliberately left undefined (reported as 0).
    pub inner_captured: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoettcherRecord {
    pub value: Complex,
    pub log_value: Complex,
    pub residual: f64,
}

/// A radius beyond which every orbit escapes monotonically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeRegion {
    pub radius: f64,
}

impl EscapeRegion {
    /// For the polynomial families `R = max(1 + d|a|^2 + |a| + |b| + 2, 2 + Σ|c_k|)`:
    /// when `|z| >= 2 + Σ_{k<d}|c_k|` we get
    /// `|f(z)| >= |z|^(d-1) (|z| - Σ|c_k|) >= 2|z|`, and the first term is the
    /// documented crude bound (it already dominates for the cubic, where
    /// `Σ|c_k| = 3|a|^2 + |b|`).
    ///
    /// For McMullen `R = 2 + |b| + 2|a|`: then `|a|^2/|z|^n <= 1/4` and
    /// `|f(z)| >= |z|^2 - 1/4 - |b| > |z| + 1`.
    pub fn of(f: &FamilyInstance) -> Self {
        let (a, b) = (f.a().norm(), f.b().norm());
        let radius = match f.kind() {
            FamilyKind::McMullen => 2.0 + b + 2.0 * a,
            _ => {
                let d = f64::from(f.degree());
                let crude = 1.0 + d * a * a + a + b + 2.0;
                let coeffs = f.coefficients();
                let sum: f64 = coeffs[..coeffs.len() - 1].iter().map(|c| c.norm()).sum();
                crude.max(2.0 + sum)
            }
        };
        EscapeRegion { radius }
    }

    pub fn contains_escape(&self, z: Complex) -> bool {
        z.norm() > self.radius
    }
}

pub fn escape_radius(f: &FamilyInstance) -> f64 {
    EscapeRegion::of(f).radius
}

/// McMullen orbits entering `|z| < ρ` are treated as captured by the pole disk.
pub fn inner_capture_radius(f: &FamilyInstance) -> f64 {
    match f.kind() {
        FamilyKind::McMullen => {
            let r = escape_radius(f);
            let n = f64::from(f.degree());
            (f.a().norm_sqr() / r).powf(1.0 / n) / 2.0
        }
        _ => 0.0,
    }
}

/// The potential `h(z)`.
pub fn potential(f: &FamilyInstance, z: Complex, tol: f64, max_depth: u32) -> Result<PotentialRecord> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !is_finite(z) {
        return Err(Error::Domain(format!("point must be finite, got {z}")));
    }
    Ok(potential_unchecked(f, z, tol, max_depth, escape_radius(f), inner_capture_radius(f)))
}

pub(crate) fn potential_unchecked(
    f: &FamilyInstance,
    z: Complex,
    tol: f64,
    max_depth: u32,
    radius: f64,
    rho: f64,
) -> PotentialRecord {
    let d = f64::from(f.degree());
    let mut w = z;
    let mut scale = 1.0;
    let mut prev: Option<f64> = None;
    let mut k = 0u32;
    loop {
        let m = w.norm();
        if m < rho || (rho > 0.0 && m == 0.0) {
            return PotentialRecord { value: 0.0, escaped: false, iterations_used: k, final_modulus: m, inner_captured: true };
        }
        if m > radius {
            let est = m.ln() * scale;
            let done = matches!(prev, Some(p) if (est - p).abs() < tol);
            if done || m > OVERFLOW_GUARD || k >= max_depth {
                return PotentialRecord { value: est, escaped: true, iterations_used: k, final_modulus: m, inner_captured: false };
            }
            prev = Some(est);
        } else if k >= max_depth {
            return PotentialRecord { value: 0.0, escaped: false, iterations_used: k, final_modulus: m, inner_captured: false };
        }
        w = f.eval_raw(w);
        scale /= d;
        k += 1;
    }
}

/// Convenience wrapper with the internal default tolerance and depth.
pub fn potential_value(f: &FamilyInstance, z: Complex) -> f64 {
    potential_unchecked(f, z, DEFAULT_TOL, DEFAULT_MAX_DEPTH, escape_radius(f), inner_capture_radius(f)).value
}

/// First iteration count at which the orbit leaves the escape disk.
pub fn escape_time(f: &FamilyInstance, z: Complex, max_iter: u32) -> Option<u32> {
    let radius = escape_radius(f);
    let rho = inner_capture_radius(f);
    let r2 = radius * radius;
    let rho2 = rho * rho;
    let mut w = z;
    for n in 0..=max_iter {
        let m2 = w.norm_sqr();
        if m2 > r2 {
            return Some(n);
        }
        if f.kind() == FamilyKind::McMullen && m2 < rho2 {
            // captured by the pole disk: lands outside the escape disk next step
            return Some(n + 1);
        }
        w = f.eval_raw(w);
    }
    None
}

/// Potentials of the two critical orbits, `(active, passive)`.
///
/// For the polynomial families these are `h(a)` and `h(-(d-2)a)`; for McMullen
/// the critical values `v+` and `v-` are reported at the level of the critical
/// points (divided by `n`), so the comparison `passive < active` reads the same.
pub fn critical_potentials(f: &FamilyInstance) -> (f64, f64) {
    let (s1, s2) = f.critical_orbit_starts();
    let (h1, h2) = (potential_value(f, s1), potential_value(f, s2));
    match f.kind() {
        FamilyKind::McMullen => {
            let n = f64::from(f.degree());
            (h1 / n, h2 / n)
        }
        _ => (h1, h2),
    }
}

/// `log φ(w)` by the telescoping series; valid when `|w| >= 4R`.
fn log_phi_series(f: &FamilyInstance, w: Complex, tol: f64) -> Complex {
    let d = f64::from(f.degree());
    let mut acc = w.ln();
    let mut wj = w;
    let mut scale = 1.0 / d;
    for _ in 0..200 {
        let ratio = f.ratio_to_leading(wj);
        let term = ratio.ln() * scale;
        acc += term;
        if term.norm() < tol * 1e-3 || wj.norm() > OVERFLOW_GUARD {
            break;
        }
        wj = f.eval_raw(wj);
        scale /= d;
    }
    acc
}

struct RegimeData {
    /// iterations needed to reach the series regime
    depth: u32,
    /// `f^depth(z)`
    image: Complex,
    /// `(f^depth)'(z) / f^depth(z)`, the gradient of `log f^depth`
    log_deriv: Complex,
}

fn to_regime(f: &FamilyInstance, z: Complex, regime: f64, rho: f64, max_depth: u32) -> Option<RegimeData> {
    let mut w = z;
    let mut dw = Complex::new(1.0, 0.0);
    for k in 0..=max_depth {
        let m = w.norm();
        if m >= regime {
            return Some(RegimeData { depth: k, image: w, log_deriv: dw / w });
        }
        if f.kind() == FamilyKind::McMullen && m < rho {
            return None;
        }
        let (fw, dfw) = f.eval_with_deriv(w);
        dw *= dfw;
        w = fw;
        if !is_finite(w) || !is_finite(dw) {
            return None;
        }
    }
    None
}

/// Candidate `d^-k (L + 2πi m)` closest to `reference` in imaginary part;
/// returns the candidate and the scaled distance `d^k |Im(candidate - reference)|`.
fn nearest_branch(l: Complex, depth: u32, degree: u32, reference: Complex) -> (Complex, f64) {
    let dk = f64::from(degree).powi(depth as i32);
    let m = ((reference.im * dk - l.im) / (2.0 * PI)).round();
    let cand = Complex::new(l.re, l.im + 2.0 * PI * m) / dk;
    (cand, (cand.im - reference.im).abs() * dk)
}

const PATH_STEP: f64 = 0.25;
const MAX_PATH_POINTS: usize = 200_000;

/// `log φ(z)` for an escaping `z`, continued along an ascending path of the
/// potential from the series regime back to `z`.
///
/// The path follows the gradient of `h` (an approximate external ray), so it
/// stays in the region above `h(z)` where `φ` is univalent and the
/// continuation is single valued.
pub(crate) fn log_boettcher_continued(f: &FamilyInstance, z: Complex, tol: f64) -> Result<Complex> {
    let radius = escape_radius(f);
    let regime = 4.0 * radius;
    let rho = inner_capture_radius(f);
    let degree = f.degree();
    let max_depth = 4000;

    let mut path: Vec<(Complex, RegimeData)> = Vec::new();
    let mut zc = z;
    loop {
        let data = to_regime(f, zc, regime, rho, max_depth)
            .ok_or_else(|| Error::BranchAmbiguity(format!("orbit of {zc} does not reach the series regime")))?;
        let done = data.depth == 0;
        let g = data.log_deriv;
        path.push((zc, data));
        if done {
            break;
        }
        if path.len() > MAX_PATH_POINTS {
            return Err(Error::BranchAmbiguity("ascending path too long".into()));
        }
        let gn = g.norm();
        if !(gn > 0.0) || !gn.is_finite() {
            return Err(Error::BranchAmbiguity(format!("degenerate gradient at {zc}")));
        }
        // conj(F'/F) points up the gradient of log|F|; the step raises log|F| by ~PATH_STEP
        let step = g.conj() / (gn * gn) * PATH_STEP;
        zc += step;
        if f.kind() == FamilyKind::McMullen && zc.norm() < 2.0 * rho {
            return Err(Error::BranchAmbiguity("ascending path enters the pole disk".into()));
        }
    }

    let (_, last) = path.last().expect("non-empty path");
    let mut lam = log_phi_series(f, last.image, tol);
    let tie = PI / f64::from(degree);
    for (_, data) in path.iter().rev().skip(1) {
        let l = log_phi_series(f, data.image, tol);
        let (cand, dist) = nearest_branch(l, data.depth, degree, lam);
        if dist > tie {
            return Err(Error::BranchAmbiguity(format!(
                "branch jump {dist:.3} exceeds π/{degree} while continuing log φ"
            )));
        }
        lam = cand;
    }
    Ok(lam)
}

/// Re-evaluates `log φ(z)` choosing the branch nearest `reference`; `None` when
/// the reference is too far away to make the choice unambiguous.
pub(crate) fn log_boettcher_near(f: &FamilyInstance, z: Complex, reference: Complex, tol: f64) -> Option<Complex> {
    let radius = escape_radius(f);
    let data = to_regime(f, z, 4.0 * radius, inner_capture_radius(f), 4000)?;
    let l = log_phi_series(f, data.image, tol);
    let (cand, dist) = nearest_branch(l, data.depth, f.degree(), reference);
    (dist < 0.5 * PI / f64::from(f.degree())).then_some(cand)
}

fn critical_level(f: &FamilyInstance) -> f64 {
    let (h1, h2) = critical_potentials(f);
    h1.max(h2)
}

/// The Böttcher coordinate `φ(z)` and its conjugacy residual.
///
/// Requires `h(z)` above every critical potential, the region where `φ` extends.
pub fn boettcher(f: &FamilyInstance, z: Complex, tol: f64) -> Result<BoettcherRecord> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let hz = potential(f, z, DEFAULT_TOL, DEFAULT_MAX_DEPTH)?;
    if !hz.escaped {
        return Err(Error::Domain(format!("{z} does not escape")));
    }
    let level = critical_level(f);
    if !(hz.value > level) {
        return Err(Error::Domain(format!(
            "h({z}) = {:.6e} is not above the critical level {level:.6e}",
            hz.value
        )));
    }
    let lam = log_boettcher_continued(f, z, tol)?;
    let fz = f.eval(z)?;
    let lam_f = log_boettcher_continued(f, fz, tol)?;
    let d = f64::from(f.degree());
    let residual = ((lam_f - lam * d).exp() - 1.0).norm();
    Ok(BoettcherRecord { value: lam.exp(), log_value: lam, residual })
}

/// The point whose Böttcher position defines the slice: the co-critical point
/// for polynomials, the critical value `v+` for McMullen.
pub fn slice_anchor_point(f: &FamilyInstance) -> Complex {
    match f.kind() {
        FamilyKind::McMullen => f.critical_orbit_starts().0,
        _ => f.cocritical_point().expect("polynomial families have a co-critical point"),
    }
}

pub(crate) fn check_slice_preconditions(f: &FamilyInstance) -> Result<(f64, f64)> {
    if f.is_polynomial() && f.a() == Complex::new(0.0, 0.0) {
        return Err(Error::Domain("a = 0: critical points collide".into()));
    }
    let (active, passive) = critical_potentials(f);
    if !(active > 0.0) || !(passive < active) {
        return Err(Error::NotInSlice { active, passive });
    }
    Ok((active, passive))
}

/// `log ζ` where `ζ = lim_{z→co-critical} φ(z)` (polynomials) or `φ(v+)` (McMullen).
pub fn log_zeta_of(f: &FamilyInstance) -> Result<Complex> {
    check_slice_preconditions(f)?;
    log_boettcher_continued(f, slice_anchor_point(f), DEFAULT_TOL)
}

/// The slice invariant `ζ` of `f`.
pub fn zeta_of(f: &FamilyInstance) -> Result<Complex> {
    log_zeta_of(f).map(|l| l.exp())
}

/// `log ζ` chosen by continuity from a nearby parameter's value, falling back
/// to the full path continuation when the reference is not close enough.
pub(crate) fn log_zeta_near(f: &FamilyInstance, reference: Option<Complex>) -> Result<Complex> {
    check_slice_preconditions(f)?;
    let anchor = slice_anchor_point(f);
    if let Some(r) = reference {
        if let Some(l) = log_boettcher_near(f, anchor, r, DEFAULT_TOL) {
            return Ok(l);
        }
    }
    log_boettcher_continued(f, anchor, DEFAULT_TOL)
}
