//! The three map families and their critical data.
//!
//! * `Cubic`: `z^3 - 3a^2 z + b`, critical points `±a`, co-critical point `-2a`.
//! * `MonicCenteredDegreeD`: `d ∫_0^z (w-a)^(d-2) (w+(d-2)a) dw + b`, critical
//!   points `a` (local degree `d-1`) and `-(d-2)a` (local degree 2).
//! * `McMullen`: `z^n + a^2/z^n + b`, critical values `b ± 2a`.
//!
//! The cubic is the degree-3 member of the second family and shares its
//! coefficient expansion, so both evaluate through the same Horner path.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    Cubic,
    MonicCenteredDegreeD,
    McMullen,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Cubic => "cubic",
            FamilyKind::MonicCenteredDegreeD => "degree-d",
            FamilyKind::McMullen => "mcmullen",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cubic" => Some(FamilyKind::Cubic),
            "degree-d" | "q" => Some(FamilyKind::MonicCenteredDegreeD),
            "mcmullen" => Some(FamilyKind::McMullen),
            _ => None,
        }
    }
}

/// One concrete map of one of the families.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyInstance {
    kind: FamilyKind,
    a: Complex,
    b: Complex,
    degree: u32,
    /// Ascending coefficients `c_0..c_d` of the polynomial families (with `c_0 = b`).
    /// Empty for McMullen.
    coeffs: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub point: Complex,
    pub local_degree: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalData {
    pub critical_points: Vec<CriticalPoint>,
    pub critical_values: Vec<Complex>,
    /// The other preimage of the marked critical value (`-2a` for the cubic).
    pub cocritical_point: Option<Complex>,
}

pub(crate) fn is_finite(z: Complex) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn check_finite(name: &str, z: Complex) -> Result<()> {
    if is_finite(z) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {z}")))
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Coefficients (ascending powers) of `d ∫_0^z (w-a)^(d-2) (w+(d-2)a) dw`.
///
/// The constant term is zero; adding `b` gives the map.
pub fn expand_q_coefficients(degree: u32, a: Complex) -> Result<Vec<Complex>> {
    if degree < 3 {
        return Err(Error::Domain(format!("degree must be >= 3, got {degree}")));
    }
    check_finite("a", a)?;
    let m = degree - 2;
    let neg_a = -a;

    // (w - a)^m, ascending: C(m,k) (-a)^(m-k) w^k
    let mut pow = vec![Complex::new(1.0, 0.0); (m + 1) as usize];
    for j in 1..=m as usize {
        pow[j] = pow[j - 1] * neg_a;
    }
    let base: Vec<Complex> = (0..=m)
        .map(|k| pow[(m - k) as usize] * binomial(m, k))
        .collect();

    // times (w + (d-2)a)
    let shift = a * f64::from(m);
    let mut integrand = vec![Complex::new(0.0, 0.0); (m + 2) as usize];
    for (k, &c) in base.iter().enumerate() {
        integrand[k] += c * shift;
        integrand[k + 1] += c;
    }

    let d = f64::from(degree);
    let mut out = vec![Complex::new(0.0, 0.0); (degree + 1) as usize];
    for (k, &c) in integrand.iter().enumerate() {
        out[k + 1] = c * (d / (k as f64 + 1.0));
    }
    Ok(out)
}

impl FamilyInstance {
    pub fn cubic(a: Complex, b: Complex) -> Result<Self> {
        check_finite("a", a)?;
        check_finite("b", b)?;
        let mut coeffs = expand_q_coefficients(3, a)?;
        coeffs[0] = b;
        Ok(FamilyInstance { kind: FamilyKind::Cubic, a, b, degree: 3, coeffs })
    }

    pub fn degree_d(degree: u32, a: Complex, b: Complex) -> Result<Self> {
        check_finite("a", a)?;
        check_finite("b", b)?;
        if a == Complex::new(0.0, 0.0) {
            return Err(Error::Domain("degree-d family requires a != 0".into()));
        }
        let mut coeffs = expand_q_coefficients(degree, a)?;
        coeffs[0] = b;
        Ok(FamilyInstance { kind: FamilyKind::MonicCenteredDegreeD, a, b, degree, coeffs })
    }

    pub fn mcmullen(n: u32, a: Complex, b: Complex) -> Result<Self> {
        check_finite("a", a)?;
        check_finite("b", b)?;
        if n < 2 {
            return Err(Error::Domain(format!("McMullen exponent must be >= 2, got {n}")));
        }
        let zero = Complex::new(0.0, 0.0);
        if a == zero || b == zero {
            return Err(Error::Domain("McMullen family requires a != 0 and b != 0".into()));
        }
        Ok(FamilyInstance { kind: FamilyKind::McMullen, a, b, degree: n, coeffs: Vec::new() })
    }

    /// Builds a member of `kind` with the given parameters (degree is ignored for `Cubic`).
    pub fn new(kind: FamilyKind, degree: u32, a: Complex, b: Complex) -> Result<Self> {
        match kind {
            FamilyKind::Cubic => Self::cubic(a, b),
            FamilyKind::MonicCenteredDegreeD => Self::degree_d(degree, a, b),
            FamilyKind::McMullen => Self::mcmullen(degree, a, b),
        }
    }

    /// Same family and degree, new parameters.
    pub fn with_params(&self, a: Complex, b: Complex) -> Result<Self> {
        Self::new(self.kind, self.degree, a, b)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn a(&self) -> Complex {
        self.a
    }

    pub fn b(&self) -> Complex {
        self.b
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn is_polynomial(&self) -> bool {
        self.kind != FamilyKind::McMullen
    }

    /// Evaluates the map. McMullen maps have a pole at the origin.
    pub fn eval(&self, z: Complex) -> Result<Complex> {
        self.check_pole(z)?;
        Ok(self.eval_raw(z))
    }

    pub fn eval_deriv(&self, z: Complex) -> Result<Complex> {
        self.check_pole(z)?;
        Ok(self.eval_with_deriv(z).1)
    }

    fn check_pole(&self, z: Complex) -> Result<()> {
        if self.kind == FamilyKind::McMullen && z == Complex::new(0.0, 0.0) {
            return Err(Error::Pole("McMullen map evaluated at z = 0".into()));
        }
        Ok(())
    }

    /// Unchecked evaluation for hot loops; callers handle the McMullen pole.
    #[inline]
    pub(crate) fn eval_raw(&self, z: Complex) -> Complex {
        match self.kind {
            FamilyKind::McMullen => {
                let zn = z.powu(self.degree);
                zn + self.a * self.a / zn + self.b
            }
            _ => {
                let mut p = self.coeffs[self.coeffs.len() - 1];
                for c in self.coeffs.iter().rev().skip(1) {
                    p = p * z + c;
                }
                p
            }
        }
    }

    /// `(f(z), f'(z))`.
    #[inline]
    pub(crate) fn eval_with_deriv(&self, z: Complex) -> (Complex, Complex) {
        match self.kind {
            FamilyKind::McMullen => {
                let n = self.degree;
                let zn1 = z.powu(n - 1);
                let zn = zn1 * z;
                let a2 = self.a * self.a;
                let q = a2 / zn;
                let nf = f64::from(n);
                (zn + q + self.b, (zn1 - q / z) * nf)
            }
            _ => {
                let mut p = self.coeffs[self.coeffs.len() - 1];
                let mut dp = Complex::new(0.0, 0.0);
                for c in self.coeffs.iter().rev().skip(1) {
                    dp = dp * z + p;
                    p = p * z + c;
                }
                (p, dp)
            }
        }
    }

    /// `f(w) / w^d` evaluated in inverse powers of `w`, so it stays finite for huge `w`.
    pub(crate) fn ratio_to_leading(&self, w: Complex) -> Complex {
        let u = w.inv();
        match self.kind {
            FamilyKind::McMullen => {
                let un = u.powu(self.degree);
                Complex::new(1.0, 0.0) + self.a * self.a * un * un + self.b * un
            }
            _ => {
                // 1 + sum_{k<d} c_k u^(d-k)  =  1 + u*(c_{d-1} + u*(c_{d-2} + ... + u*c_0))
                let d = self.degree as usize;
                let mut acc = Complex::new(0.0, 0.0);
                for k in 0..d {
                    acc = acc * u + self.coeffs[k];
                }
                // acc = sum_k c_k u^(d-1-k); one more factor of u
                Complex::new(1.0, 0.0) + acc * u
            }
        }
    }

    /// The critical point whose orbit the slice constraint tracks, and the
    /// "passive" one whose boundedness the slice classifies.
    ///
    /// For the polynomial families these are `a` and `-(d-2)a`; for McMullen the
    /// representatives `a^(1/n)` (value `v+`) and `a^(1/n) e^(iπ/n)` (value `v-`).
    pub fn marked_critical_points(&self) -> (Complex, Complex) {
        match self.kind {
            FamilyKind::McMullen => {
                let root = self.principal_root();
                let half_turn = Complex::from_polar(1.0, PI / f64::from(self.degree));
                (root, root * half_turn)
            }
            _ => (self.a, -(self.a * f64::from(self.degree - 2))),
        }
    }

    /// Starting points of the two critical orbits: the critical values for
    /// McMullen (the orbit through the pole-free value), the critical points
    /// themselves for polynomials.
    pub fn critical_orbit_starts(&self) -> (Complex, Complex) {
        match self.kind {
            FamilyKind::McMullen => (self.b + self.a * 2.0, self.b - self.a * 2.0),
            _ => self.marked_critical_points(),
        }
    }

    fn principal_root(&self) -> Complex {
        self.a.powf(1.0 / f64::from(self.degree))
    }

    /// Co-critical point of the polynomial families: the simple root of `f(z) - f(a)`.
    pub fn cocritical_point(&self) -> Option<Complex> {
        match self.kind {
            FamilyKind::McMullen => None,
            _ => Some(-(self.a * f64::from(self.degree - 1))),
        }
    }

    pub fn critical_data(&self) -> CriticalData {
        match self.kind {
            FamilyKind::McMullen => {
                let n = self.degree;
                let root = self.principal_root();
                let step = PI / f64::from(n);
                // even multiples of π/n solve z^n = a, odd ones z^n = -a
                let mut plus = Vec::with_capacity(n as usize);
                let mut minus = Vec::with_capacity(n as usize);
                for j in 0..2 * n {
                    let c = root * Complex::from_polar(1.0, step * f64::from(j));
                    let cp = CriticalPoint { point: c, local_degree: 2 };
                    if j % 2 == 0 {
                        plus.push(cp);
                    } else {
                        minus.push(cp);
                    }
                }
                plus.extend(minus);
                let (vp, vm) = self.critical_orbit_starts();
                CriticalData { critical_points: plus, critical_values: vec![vp, vm], cocritical_point: None }
            }
            _ => {
                let (c1, c2) = self.marked_critical_points();
                let d = self.degree;
                CriticalData {
                    critical_points: vec![
                        CriticalPoint { point: c1, local_degree: d - 1 },
                        CriticalPoint { point: c2, local_degree: 2 },
                    ],
                    critical_values: vec![self.eval_raw(c1), self.eval_raw(c2)],
                    cocritical_point: self.cocritical_point(),
                }
            }
        }
    }

    /// `(f^n(z), (f^n)'(z))`, or `None` if the orbit hits the McMullen pole.
    pub fn iterate_with_deriv(&self, z: Complex, n: u32) -> Option<(Complex, Complex)> {
        let mut w = z;
        let mut dw = Complex::new(1.0, 0.0);
        for _ in 0..n {
            if self.kind == FamilyKind::McMullen && w == Complex::new(0.0, 0.0) {
                return None;
            }
            let (fw, dfw) = self.eval_with_deriv(w);
            dw *= dfw;
            w = fw;
        }
        Some((w, dw))
    }
}
