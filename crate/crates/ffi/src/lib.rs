//! C ABI for `cubiclab`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` and released
//! by the matching `*_free`. Every fallible call returns a [`CubiclabStatus`];
//! results are written through out-pointers only on `CUBICLAB_STATUS_OK`. The
//! text of the most recent failure on the calling thread is available from
//! [`cubiclab_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cubiclab::dimension::{box_dimension, build_branch_system, julia_raster, julia_window, pressure_dimension};
use cubiclab::omega::{omega_membership, OmegaSpec};
use cubiclab::potential::{boettcher, potential, zeta_of};
use cubiclab::slice::{b_seed_for, solve_slice, SliceSpec};
use cubiclab::{Complex, Error, FamilyInstance, FamilyKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubiclabStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Pole = 3,
    NotInSlice = 4,
    BranchAmbiguity = 5,
    SolverFailure = 6,
    IllConditioned = 7,
    NotFound = 8,
    TuneFailed = 9,
    NotHyperbolicCantor = 10,
    IncreaseDepth = 11,
    NoEstimate = 12,
    UndefinedInput = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubiclabFamilyKind {
    Cubic = 0,
    DegreeD = 1,
    McMullen = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubiclabComplex {
    pub re: f64,
    pub im: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubiclabPotential {
    pub value: f64,
    pub escaped: bool,
    pub iterations_used: u32,
    pub final_modulus: f64,
    pub inner_captured: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubiclabSlicePoint {
    pub a: CubiclabComplex,
    pub b: CubiclabComplex,
    pub residual: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubiclabOmegaWitness {
    pub sign1: i8,
    pub sign2: i8,
    pub a1: i64,
    pub a2: i64,
    pub beta: CubiclabComplex,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubiclabEstimate {
    pub value: f64,
    pub uncertainty: f64,
    /// NaN when the method has no fit
    pub fit_residual: f64,
}

/// A member of one of the families.
pub struct CubiclabFamily(FamilyInstance);

/// A parameter slice `ζ(a, b) = ζ₀`.
pub struct CubiclabSlice(SliceSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> CubiclabStatus {
    match e {
        Error::Domain(_) => CubiclabStatus::Domain,
        Error::Pole(_) => CubiclabStatus::Pole,
        Error::NotInSlice { .. } => CubiclabStatus::NotInSlice,
        Error::BranchAmbiguity(_) => CubiclabStatus::BranchAmbiguity,
        Error::SolverFailure(_) => CubiclabStatus::SolverFailure,
        Error::IllConditioned(_) => CubiclabStatus::IllConditioned,
        Error::NotFound(_) => CubiclabStatus::NotFound,
        Error::TuneFailed(_) => CubiclabStatus::TuneFailed,
        Error::NotHyperbolicCantor(_) => CubiclabStatus::NotHyperbolicCantor,
        Error::IncreaseDepth(_) => CubiclabStatus::IncreaseDepth,
        Error::NoEstimate(_) => CubiclabStatus::NoEstimate,
        Error::UndefinedInput(_) => CubiclabStatus::UndefinedInput,
    }
}

/// Runs `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), CubiclabStatus>) -> CubiclabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CubiclabStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_last_error("internal panic");
            CubiclabStatus::Panic
        }
    }
}

fn fail(e: Error) -> CubiclabStatus {
    set_last_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> CubiclabStatus {
    set_last_error(&format!("{what} is null"));
    CubiclabStatus::NullPointer
}

fn c(z: CubiclabComplex) -> Complex {
    Complex::new(z.re, z.im)
}

fn cc(z: Complex) -> CubiclabComplex {
    CubiclabComplex { re: z.re, im: z.im }
}

fn kind_of(k: CubiclabFamilyKind) -> FamilyKind {
    match k {
        CubiclabFamilyKind::Cubic => FamilyKind::Cubic,
        CubiclabFamilyKind::DegreeD => FamilyKind::MonicCenteredDegreeD,
        CubiclabFamilyKind::McMullen => FamilyKind::McMullen,
    }
}

/// # Safety
/// `out` must be null or point to a `T`-sized writable location.
unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), CubiclabStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: checked non-null; validity is the caller's contract.
    unsafe { out.write(value) };
    Ok(())
}

/// # Safety
/// `p` must be null or a live handle from the matching constructor.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, CubiclabStatus> {
    // SAFETY: caller contract.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cubiclab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failing call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cubiclab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a family member. `degree` is ignored for the cubic family and is
/// the exponent `n` for McMullen maps.
///
/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_family_new(
    kind: CubiclabFamilyKind,
    degree: u32,
    a: CubiclabComplex,
    b: CubiclabComplex,
    out: *mut *mut CubiclabFamily,
) -> CubiclabStatus {
    guard(|| {
        let f = FamilyInstance::new(kind_of(kind), degree, c(a), c(b)).map_err(fail)?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null.
        unsafe { write(out, Box::into_raw(Box::new(CubiclabFamily(f))), "out") }
    })
}

/// # Safety
/// `f` must be null or a handle from [`cubiclab_family_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_family_free(f: *mut CubiclabFamily) {
    if !f.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(f) });
    }
}

/// # Safety
/// `f` must be a live family handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_family_eval(
    f: *const CubiclabFamily,
    z: CubiclabComplex,
    out: *mut CubiclabComplex,
) -> CubiclabStatus {
    guard(|| {
        let f = unsafe { deref(f, "family") }?;
        let w = f.0.eval(c(z)).map_err(fail)?;
        unsafe { write(out, cc(w), "out") }
    })
}

/// Green's function of the basin of infinity at `z`.
///
/// # Safety
/// `f` must be a live family handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_potential(
    f: *const CubiclabFamily,
    z: CubiclabComplex,
    tol: f64,
    max_depth: u32,
    out: *mut CubiclabPotential,
) -> CubiclabStatus {
    guard(|| {
        let f = unsafe { deref(f, "family") }?;
        let r = potential(&f.0, c(z), tol, max_depth).map_err(fail)?;
        let rec = CubiclabPotential {
            value: r.value,
            escaped: r.escaped,
            iterations_used: r.iterations_used,
            final_modulus: r.final_modulus,
            inner_captured: r.inner_captured,
        };
        unsafe { write(out, rec, "out") }
    })
}

/// Böttcher coordinate at `z`; `residual` receives the conjugacy defect.
///
/// # Safety
/// `f` must be a live family handle; `out` and `residual` writable.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_boettcher(
    f: *const CubiclabFamily,
    z: CubiclabComplex,
    tol: f64,
    out: *mut CubiclabComplex,
    residual: *mut f64,
) -> CubiclabStatus {
    guard(|| {
        let f = unsafe { deref(f, "family") }?;
        if residual.is_null() {
            return Err(null("residual"));
        }
        let r = boettcher(&f.0, c(z), tol).map_err(fail)?;
        unsafe { write(out, cc(r.value), "out") }?;
        unsafe { write(residual, r.residual, "residual") }
    })
}

/// Slice coordinate `ζ` of a member whose co-critical point escapes faster.
///
/// # Safety
/// `f` must be a live family handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_zeta_of(f: *const CubiclabFamily, out: *mut CubiclabComplex) -> CubiclabStatus {
    guard(|| {
        let f = unsafe { deref(f, "family") }?;
        let z = zeta_of(&f.0).map_err(fail)?;
        unsafe { write(out, cc(z), "out") }
    })
}

/// Box-counting dimension of the Julia set on a `resolution`² raster.
///
/// # Safety
/// `f` must be a live family handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_box_dimension(
    f: *const CubiclabFamily,
    resolution: u32,
    depth: u32,
    out: *mut CubiclabEstimate,
) -> CubiclabStatus {
    guard(|| {
        let f = unsafe { deref(f, "family") }?;
        let raster = julia_raster(&f.0, &julia_window(&f.0), resolution as usize, depth).map_err(fail)?;
        let e = box_dimension(&raster).map_err(fail)?;
        let est = CubiclabEstimate { value: e.value, uncertainty: e.uncertainty, fit_residual: e.fit_residual.unwrap_or(f64::NAN) };
        unsafe { write(out, est, "out") }
    })
}

/// Hausdorff dimension of a Cantor Julia set from the pressure equation.
///
/// # Safety
/// `f` must be a live family handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_pressure_dimension(
    f: *const CubiclabFamily,
    refinement_depth: u32,
    out: *mut CubiclabEstimate,
) -> CubiclabStatus {
    guard(|| {
        let f = unsafe { deref(f, "family") }?;
        let system = build_branch_system(&f.0).map_err(fail)?;
        let e = pressure_dimension(&system, refinement_depth).map_err(fail)?;
        let est = CubiclabEstimate { value: e.value, uncertainty: e.uncertainty, fit_residual: f64::NAN };
        unsafe { write(out, est, "out") }
    })
}

/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_slice_new(
    zeta: CubiclabComplex,
    kind: CubiclabFamilyKind,
    degree: u32,
    out: *mut *mut CubiclabSlice,
) -> CubiclabStatus {
    guard(|| {
        let s = SliceSpec::new(c(zeta), kind_of(kind), degree).map_err(fail)?;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { write(out, Box::into_raw(Box::new(CubiclabSlice(s))), "out") }
    })
}

/// # Safety
/// `s` must be null or a handle from [`cubiclab_slice_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_slice_free(s: *mut CubiclabSlice) {
    if !s.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Solves for `b` on the slice at parameter `a`. A null `b_seed` uses the
/// built-in seed.
///
/// # Safety
/// `s` must be a live slice handle, `b_seed` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_slice_solve(
    s: *const CubiclabSlice,
    a: CubiclabComplex,
    b_seed: *const CubiclabComplex,
    out: *mut CubiclabSlicePoint,
) -> CubiclabStatus {
    guard(|| {
        let s = unsafe { deref(s, "slice") }?;
        // SAFETY: caller contract.
        let seed = match unsafe { b_seed.as_ref() } {
            Some(z) => c(*z),
            None => b_seed_for(&s.0, c(a)),
        };
        let p = solve_slice(&s.0, c(a), seed).map_err(fail)?;
        unsafe { write(out, CubiclabSlicePoint { a: cc(p.a), b: cc(p.b), residual: p.residual }, "out") }
    })
}

/// Tests `alpha ∈ Ω_{p,q}`. `found` receives whether it is a member; `out`
/// receives the witness when it is.
///
/// # Safety
/// `found` and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cubiclab_omega_membership(
    p: i64,
    q: i64,
    n1: i64,
    n2: i64,
    beta_im_bound: f64,
    alpha: CubiclabComplex,
    found: *mut bool,
    out: *mut CubiclabOmegaWitness,
) -> CubiclabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = OmegaSpec::new(p, q, n1, n2, beta_im_bound).map_err(fail)?;
        let hit = omega_membership(&spec, c(alpha)).map_err(fail)?;
        if let Some(w) = hit {
            let wit = CubiclabOmegaWitness { sign1: w.sign1, sign2: w.sign2, a1: w.a1, a2: w.a2, beta: cc(w.beta()) };
            unsafe { write(out, wit, "out") }?;
        }
        unsafe { write(found, hit.is_some(), "found") }
    })
}
