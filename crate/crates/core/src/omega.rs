//! The multiplier domain `Ω_{p,q}`: rotation numbers `α` with
//! `qα = p ± 1/(a1 ± 1/(a2 + β))`, `a1 ≥ N1`, `a2 ≥ N2`, `0 ≤ Re β < 1`,
//! `|Im β| ≤ b`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{is_finite, Complex};

/// Relative tolerance for reconstructing `α` from a witness.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;
/// Boundary samples per traced disk.
pub const BOUNDARY_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaSpec {
    pub p: i64,
    pub q: i64,
    pub n1: i64,
    pub n2: i64,
    /// bound on `|Im β|`
    pub beta_im_bound: f64,
    /// restrict to witnesses whose two signs agree
    pub synchronized: bool,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

impl OmegaSpec {
    pub fn new(p: i64, q: i64, n1: i64, n2: i64, beta_im_bound: f64) -> Result<Self> {
        let s = OmegaSpec { p, q, n1, n2, beta_im_bound, synchronized: false };
        s.validate()?;
        Ok(s)
    }

    pub fn with_defaults(p: i64, q: i64) -> Result<Self> {
        Self::new(p, q, 10, 10, 1.0)
    }

    pub fn synchronized(mut self, on: bool) -> Self {
        self.synchronized = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 1 {
            return Err(Error::Domain(format!("q must be >= 1, got {}", self.q)));
        }
        if gcd(self.p, self.q) != 1 {
            return Err(Error::Domain(format!("gcd({}, {}) != 1", self.p, self.q)));
        }
        if self.n1 < 1 || self.n2 < 1 {
            return Err(Error::Domain(format!("N1, N2 must be >= 1, got {}, {}", self.n1, self.n2)));
        }
        if !(self.beta_im_bound > 0.0) || !self.beta_im_bound.is_finite() {
            return Err(Error::Domain(format!("beta bound must be positive, got {}", self.beta_im_bound)));
        }
        Ok(())
    }

    pub fn center(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// `α = (p + s1/(a1 + s2/(a2 + β)))/q`
    pub fn alpha_of(&self, sign1: i8, a1: i64, sign2: i8, w: Complex) -> Complex {
        let inner = Complex::new(a1 as f64, 0.0) + f64::from(sign2) / w;
        (Complex::new(self.p as f64, 0.0) + f64::from(sign1) / inner) / self.q as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaWitness {
    pub sign1: i8,
    pub sign2: i8,
    pub a1: i64,
    pub a2: i64,
    pub beta: [f64; 2],
}

impl OmegaWitness {
    pub fn beta(&self) -> Complex {
        Complex::new(self.beta[0], self.beta[1])
    }

    pub fn reconstruct(&self, spec: &OmegaSpec) -> Complex {
        spec.alpha_of(self.sign1, self.a1, self.sign2, Complex::new(self.a2 as f64, 0.0) + self.beta())
    }

    /// Checks the bounds on the integers and `β`, and the sign coupling.
    pub fn is_admissible(&self, spec: &OmegaSpec) -> bool {
        let b = self.beta();
        self.sign1.abs() == 1
            && self.sign2.abs() == 1
            && (!spec.synchronized || self.sign1 == self.sign2)
            && self.a1 >= spec.n1
            && self.a2 >= spec.n2
            && b.re >= 0.0
            && b.re < 1.0
            && b.im.abs() <= spec.beta_im_bound
    }
}

fn reconstructs(spec: &OmegaSpec, w: &OmegaWitness, alpha: Complex) -> bool {
    (w.reconstruct(spec) - alpha).norm() <= RECONSTRUCTION_TOL * alpha.norm().max(1.0)
}

fn candidates(spec: &OmegaSpec, alpha: Complex, only: Option<(i8, i64)>) -> Result<Option<OmegaWitness>> {
    spec.validate()?;
    if !is_finite(alpha) {
        return Err(Error::UndefinedInput(format!("alpha = {alpha} is not finite")));
    }
    let d = alpha * spec.q as f64 - spec.p as f64;
    if d.norm() == 0.0 {
        return Err(Error::UndefinedInput("alpha = p/q has no continued-fraction witness".into()));
    }
    let u = d.inv();
    for sign1 in [1i8, -1] {
        let t = u * f64::from(sign1);
        let lo = (t.re.floor() as i64 - 1).max(spec.n1);
        let hi = t.re.ceil() as i64 + 1;
        for a1 in lo..=hi {
            if only.is_some_and(|(s, a)| s != sign1 || a != a1) {
                continue;
            }
            let r = t - a1 as f64;
            if r.norm() == 0.0 {
                continue;
            }
            for sign2 in [1i8, -1] {
                if spec.synchronized && sign2 != sign1 {
                    continue;
                }
                let w = f64::from(sign2) / r;
                if !is_finite(w) {
                    continue;
                }
                let base = w.re.floor() as i64;
                for a2 in (base - 1).max(spec.n2)..=(base + 1).max(spec.n2) {
                    let beta = w - a2 as f64;
                    let wit = OmegaWitness { sign1, sign2, a1, a2, beta: [beta.re, beta.im] };
                    if wit.is_admissible(spec) && reconstructs(spec, &wit, alpha) {
                        return Ok(Some(wit));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// A witness for `alpha ∈ Ω_{p,q}`, or `None` if the inversion finds none.
pub fn omega_membership(spec: &OmegaSpec, alpha: Complex) -> Result<Option<OmegaWitness>> {
    candidates(spec, alpha, None)
}

/// Membership restricted to the disk labelled `(sign1, a1)`.
pub fn disk_membership(spec: &OmegaSpec, sign1: i8, a1: i64, alpha: Complex) -> Result<Option<OmegaWitness>> {
    candidates(spec, alpha, Some((sign1, a1)))
}

/// One component of `Ω_{p,q}`: the image of the admissible `a2 + β` half-strip
/// for a fixed `(sign1, a1)`, both inner signs merged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaDisk {
    pub sign1: i8,
    pub a1: i64,
    pub center: [f64; 2],
    pub radius: f64,
    /// closed real interval `[lo, hi]`
    pub real_intersection: [f64; 2],
}

impl OmegaDisk {
    pub fn center(&self) -> Complex {
        Complex::new(self.center[0], self.center[1])
    }

    /// `p/q + sign1/(q a1)`, the image of `a2 + β = ∞`
    pub fn nominal_point(&self, spec: &OmegaSpec) -> f64 {
        (spec.p as f64 + f64::from(self.sign1) / self.a1 as f64) / spec.q as f64
    }
}

/// Boundary of `{Re w ≥ N2, |Im w| ≤ b}`: the vertical edge and the two rays.
fn strip_boundary(n2: f64, b: f64, samples: usize) -> Vec<Complex> {
    let per = samples / 3;
    let mut out = Vec::with_capacity(3 * per);
    for k in 0..per {
        let s = k as f64 / (per - 1) as f64;
        out.push(Complex::new(n2, -b + 2.0 * b * s));
    }
    for sign in [1.0, -1.0] {
        for k in 0..per {
            let tau = k as f64 / per as f64;
            out.push(Complex::new(n2 + tau / (1.0 - tau), sign * b));
        }
    }
    out
}

fn trace_disk(spec: &OmegaSpec, sign1: i8, a1: i64) -> Result<OmegaDisk> {
    let boundary = strip_boundary(spec.n2 as f64, spec.beta_im_bound, BOUNDARY_SAMPLES);
    let mut pts: Vec<Complex> = Vec::with_capacity(2 * boundary.len() + 1);
    for sign2 in [1i8, -1] {
        if spec.synchronized && sign2 != sign1 {
            continue;
        }
        pts.extend(boundary.iter().map(|&w| spec.alpha_of(sign1, a1, sign2, w)));
    }
    let nominal = (spec.p as f64 + f64::from(sign1) / a1 as f64) / spec.q as f64;
    pts.push(Complex::new(nominal, 0.0));
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for z in &pts {
        lo = Complex::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let center = (lo + hi) / 2.0;
    let radius = pts.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);

    // real intersection: bisect from inner members to outer non-members
    let n2 = spec.n2 as f64;
    let mut ends = Vec::new();
    for side in [1.0, -1.0] {
        // t = a1 + side·x with x from 1/(2 N2) (inside) to 2/N2 (outside)
        let alpha_at = |x: f64| (spec.p as f64 + f64::from(sign1) / (a1 as f64 + side * x)) / spec.q as f64;
        let inside = |x: f64| -> Result<bool> {
            Ok(disk_membership(spec, sign1, a1, Complex::new(alpha_at(x), 0.0))?.is_some())
        };
        let (mut xin, mut xout) = (0.5 / n2, 2.0 / n2);
        if !inside(xin)? {
            // synchronized signs keep only one half of the real segment
            continue;
        }
        if inside(xout)? {
            return Err(Error::Domain(format!("disk ({sign1}, {a1}) does not close on the real axis")));
        }
        for _ in 0..80 {
            let mid = 0.5 * (xin + xout);
            if inside(mid)? {
                xin = mid;
            } else {
                xout = mid;
            }
        }
        ends.push(alpha_at(xin));
    }
    if ends.is_empty() {
        return Err(Error::Domain(format!("disk ({sign1}, {a1}) has no real points")));
    }
    if ends.len() == 1 {
        ends.push(nominal);
    }
    let real = [ends.iter().cloned().fold(f64::INFINITY, f64::min), ends.iter().cloned().fold(f64::NEG_INFINITY, f64::max)];
    Ok(OmegaDisk { sign1, a1, center: [center.re, center.im], radius, real_intersection: real })
}

/// The disks labelled `(±, a1)` for `a1 = N1 .. N1+count-1`, ordered by `a1`
/// and then `+` before `-`.
pub fn omega_disks(spec: &OmegaSpec, count: usize) -> Result<Vec<OmegaDisk>> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::Domain("count must be >= 1".into()));
    }
    let last = i64::try_from(count)
        .ok()
        .and_then(|c| spec.n1.checked_add(c - 1))
        .filter(|&l| (l as f64) < 1e12)
        .ok_or_else(|| Error::Domain(format!("a1 range N1 + {count} overflows")))?;
    let labels: Vec<(i8, i64)> = (spec.n1..=last).flat_map(|a1| [(1i8, a1), (-1i8, a1)]).collect();
    labels.par_iter().map(|&(s, a1)| trace_disk(spec, s, a1)).collect()
}

/// A real `α ∈ Ω_{p,q}` with `|α - p/q| < closeness`: the midpoint of the real
/// segment of the first `+` disk close enough to `p/q`.
pub fn pick_target_alpha(spec: &OmegaSpec, closeness: f64) -> Result<f64> {
    spec.validate()?;
    if !(closeness > 0.0) || !closeness.is_finite() {
        return Err(Error::Domain(format!("closeness must be positive, got {closeness}")));
    }
    let start = ((1.0 / (spec.q as f64 * closeness)).floor() as i64).max(spec.n1);
    for a1 in start..start.saturating_add(10_000) {
        let disk = trace_disk(spec, 1, a1)?;
        let mid = 0.5 * (disk.real_intersection[0] + disk.real_intersection[1]);
        let far = disk
            .real_intersection
            .iter()
            .map(|x| (x - spec.center()).abs())
            .fold(0.0, f64::max);
        if far < closeness && omega_membership(spec, Complex::new(mid, 0.0))?.is_some() {
            return Ok(mid);
        }
    }
    Err(Error::NotFound(format!("no Ω disk within {closeness} of p/q")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn direct_substitution_witness() {
        let spec = OmegaSpec::new(1, 3, 4, 5, 1.0).unwrap();
        let alpha = (1.0 + 1.0 / (4.0 + 1.0 / 5.0)) / 3.0;
        let w = omega_membership(&spec, c(alpha, 0.0)).unwrap().unwrap();
        assert_eq!((w.sign1, w.a1, w.sign2, w.a2), (1, 4, 1, 5));
        assert!(w.beta().norm() < 1e-9);
    }

    #[test]
    fn singular_alpha_is_undefined() {
        let spec = OmegaSpec::new(1, 2, 3, 3, 1.0).unwrap();
        assert!(matches!(omega_membership(&spec, c(0.5, 0.0)), Err(Error::UndefinedInput(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(OmegaSpec::new(2, 4, 3, 3, 1.0).is_err());
        assert!(OmegaSpec::new(0, 0, 3, 3, 1.0).is_err());
        assert!(OmegaSpec::new(0, 1, 0, 3, 1.0).is_err());
        assert!(OmegaSpec::new(0, 1, 3, 3, 0.0).is_err());
    }

    #[test]
    fn synchronized_signs_restrict() {
        let spec = OmegaSpec::new(0, 1, 3, 3, 1.0).unwrap();
        let alpha = spec.alpha_of(1, 4, -1, c(3.5, 0.2));
        assert!(omega_membership(&spec, alpha).unwrap().is_some());
        assert!(omega_membership(&spec.synchronized(true), alpha).unwrap().is_none());
    }

    #[test]
    fn disks_for_figure_layout() {
        let spec = OmegaSpec::new(0, 1, 3, 3, 1.0).unwrap();
        let disks = omega_disks(&spec, 6).unwrap();
        assert_eq!(disks.len(), 12);
        for d in &disks {
            let nominal = d.nominal_point(&spec);
            assert!((d.center() - nominal).norm() <= d.radius);
            assert!(d.real_intersection[0] < nominal && nominal < d.real_intersection[1]);
            assert!(d.radius > 0.0);
            // endpoints approach ±1/a1 scale labels
            assert!((nominal - f64::from(d.sign1) / d.a1 as f64).abs() < 1e-15);
        }
        let plus: Vec<_> = disks.iter().filter(|d| d.sign1 == 1).collect();
        for pair in plus.windows(2) {
            assert!(pair[1].radius < pair[0].radius);
        }
    }

    #[test]
    fn pick_target_is_member_and_close() {
        let spec = OmegaSpec::new(0, 1, 10, 10, 1.0).unwrap();
        for closeness in [0.1, 1e-3, 1e-6] {
            let a = pick_target_alpha(&spec, closeness).unwrap();
            assert!(a.abs() < closeness);
            assert!(omega_membership(&spec, c(a, 0.0)).unwrap().is_some());
            assert_eq!(a, pick_target_alpha(&spec, closeness).unwrap());
        }
    }

    #[test]
    fn strip_seam_is_stable() {
        let spec = OmegaSpec::new(0, 1, 5, 5, 1.0).unwrap();
        let eps = 1e-9;
        let left = spec.alpha_of(1, 7, 1, c(6.0 + 1.0 - eps, 0.3));
        let right = spec.alpha_of(1, 7, 1, c(7.0, 0.3));
        assert!(omega_membership(&spec, left).unwrap().is_some());
        assert!(omega_membership(&spec, right).unwrap().is_some());
        assert!((left - right).norm() < 1e-9);
    }
}
