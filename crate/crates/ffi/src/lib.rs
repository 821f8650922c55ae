//! C ABI over `cgl-core`.
//!
//! All objects are opaque handles created by `cgl_*_new`/`build`/`load`
//! functions and released with the matching `cgl_*_free`. Every fallible
//! function returns a [`CglStatus`]; on failure a human-readable message is
//! available from [`cgl_last_error`] on the same thread. Panics never cross
//! the boundary and are reported as `CGL_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use cgl_core::dynamics::{EquationParams, Model, ResonantTables};
use cgl_core::experiments::compare_actions;
use cgl_core::integrators::{integrate_effective, integrate_full, DiagnosticsConfig, StepControl, Trajectory};
use cgl_core::resonance::{build_resonance_table_with_budget, load_table, save_table, ResonanceTable, DEFAULT_TUPLE_BUDGET};
use cgl_core::spectral::{FourierField, Lattice};
use cgl_core::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CglStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    LatticeMismatch = 3,
    Resource = 4,
    NumericalAbort = 5,
    Io = 6,
    Internal = 7,
}

/// A complex amplitude, layout-compatible with C99 `double _Complex`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CglComplex {
    pub re: f64,
    pub im: f64,
}

/// Equation parameters; see `cgl_core::dynamics::EquationParams`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CglParams {
    pub epsilon: f64,
    pub mu: f64,
    pub b: f64,
    pub c: f64,
    pub m: u32,
    pub p: u32,
    pub q: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CglStepControl {
    pub cfl_fraction: f64,
    pub dtau_max: f64,
    pub checkpoint_dt: f64,
    pub self_check: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CglDivisorStats {
    /// False when every divisor vanishes (gap is infinite).
    pub has_gap: bool,
    pub gap: u64,
    pub max_freq: u64,
}

pub struct CglLattice(Arc<Lattice>);
pub struct CglField(FourierField);
pub struct CglTable(Arc<ResonanceTable>);
pub struct CglTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> CglStatus {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) | Error::GridTooSmall { .. } => CglStatus::InvalidArgument,
        Error::LatticeMismatch { .. } => CglStatus::LatticeMismatch,
        Error::Resource { .. } => CglStatus::Resource,
        Error::NumericalAbort { .. } | Error::StepUnderflow(_) => CglStatus::NumericalAbort,
        Error::TableFile { .. } | Error::Io(_) | Error::Json(_) => CglStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CglStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CglStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            CglStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            CglStatus::Internal
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

impl From<&CglParams> for EquationParams {
    fn from(p: &CglParams) -> Self {
        EquationParams {
            epsilon: p.epsilon,
            mu: p.mu,
            b: p.b,
            c: p.c,
            m: p.m,
            p: p.p,
            q: p.q,
        }
    }
}

fn params_from(p: &CglParams) -> Result<EquationParams, Fail> {
    let params = EquationParams::from(p);
    params.validate()?;
    Ok(params)
}

/// Message describing the last failure on this thread; empty after success.
/// The pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn cgl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cgl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default parameters: `epsilon = 0.1`, `c = 1`, `m = p = q = 1`, others zero.
#[no_mangle]
pub extern "C" fn cgl_params_default() -> CglParams {
    CglParams {
        epsilon: 0.1,
        mu: 0.0,
        b: 0.0,
        c: 1.0,
        m: 1,
        p: 1,
        q: 1,
    }
}

/// Default step control with 64 checkpoints over `horizon`.
#[no_mangle]
pub extern "C" fn cgl_step_control_default(horizon: f64) -> CglStepControl {
    let c = StepControl::for_horizon(horizon);
    CglStepControl {
        cfl_fraction: c.cfl_fraction,
        dtau_max: c.dtau_max,
        checkpoint_dt: c.checkpoint_dt,
        self_check: c.self_check,
    }
}

// ---- lattice ----

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_lattice_new(dim: usize, cutoff: usize, out: *mut *mut CglLattice) -> CglStatus {
    guard(|| {
        let l = Lattice::new(dim, cutoff)?;
        write_out(out, boxed(CglLattice(Arc::new(l))), "out")
    })
}

/// # Safety
/// `lattice` must be null or a handle from `cgl_lattice_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cgl_lattice_free(lattice: *mut CglLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `lattice` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgl_lattice_len(lattice: *const CglLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.0.len())
}

/// `lambda = |k|^2` of the mode at `index`.
///
/// # Safety
/// `lattice` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_lattice_lambda(lattice: *const CglLattice, index: usize, out: *mut i64) -> CglStatus {
    guard(|| {
        let l = &as_ref(lattice, "lattice")?.0;
        let lam = *l
            .lambda()
            .get(index)
            .ok_or_else(|| Error::InvalidArgument(format!("mode index {index} out of range")))?;
        write_out(out, lam, "out")
    })
}

/// Index of the mode with coordinates `coords[0..dim]`.
///
/// # Safety
/// `coords` must point to `dim` readable integers; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_lattice_index_of(
    lattice: *const CglLattice,
    coords: *const i32,
    dim: usize,
    out: *mut usize,
) -> CglStatus {
    guard(|| {
        let l = &as_ref(lattice, "lattice")?.0;
        if coords.is_null() {
            return Err(Fail::Null("coords"));
        }
        let c = std::slice::from_raw_parts(coords, dim);
        if dim != l.dim() {
            return Err(Error::InvalidArgument(format!("expected {} coordinates, got {dim}", l.dim())).into());
        }
        let idx = l
            .index_of(c)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {c:?} outside the box")))?;
        write_out(out, idx, "out")
    })
}

// ---- fields ----

/// Creates a field from `len` amplitudes in lattice order (`len` must equal
/// the lattice size).
///
/// # Safety
/// `amps` must point to `len` readable values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_field_new(
    lattice: *const CglLattice,
    amps: *const CglComplex,
    len: usize,
    out: *mut *mut CglField,
) -> CglStatus {
    guard(|| {
        let l = &as_ref(lattice, "lattice")?.0;
        if amps.is_null() {
            return Err(Fail::Null("amps"));
        }
        let a = std::slice::from_raw_parts(amps, len)
            .iter()
            .map(|c| Complex64::new(c.re, c.im))
            .collect();
        let f = FourierField::from_amps(l.clone(), a)?;
        write_out(out, boxed(CglField(f)), "out")
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgl_field_free(field: *mut CglField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of amplitudes, or 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgl_field_len(field: *const CglField) -> usize {
    field.as_ref().map_or(0, |f| f.0.amps().len())
}

/// Copies the amplitudes into `out[0..len]`; `len` must equal the field size.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_field_amps(field: *const CglField, out: *mut CglComplex, len: usize) -> CglStatus {
    guard(|| {
        let f = &as_ref(field, "field")?.0;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        if len != f.amps().len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len}, field has {}", f.amps().len())).into());
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, a) in dst.iter_mut().zip(f.amps()) {
            *d = CglComplex { re: a.re, im: a.im };
        }
        Ok(())
    })
}

/// `|v|_s`.
///
/// # Safety
/// `field` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_field_h_norm(field: *const CglField, s: f64, out: *mut f64) -> CglStatus {
    guard(|| write_out(out, as_ref(field, "field")?.0.h_norm(s), "out"))
}

/// Actions `|v_k|^2 / 2` into `out[0..len]`.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_field_actions(field: *const CglField, out: *mut f64, len: usize) -> CglStatus {
    guard(|| {
        let f = &as_ref(field, "field")?.0;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let actions = f.actions();
        if len != actions.values().len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len}, field has {}", actions.values().len())).into());
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(actions.values());
        Ok(())
    })
}

// ---- resonance tables ----

/// Builds the resonant table of degree `n`; `budget = 0` selects the default.
///
/// # Safety
/// `lattice` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_table_build(
    lattice: *const CglLattice,
    n: usize,
    budget: u64,
    out: *mut *mut CglTable,
) -> CglStatus {
    guard(|| {
        let l = &as_ref(lattice, "lattice")?.0;
        let budget = if budget == 0 { DEFAULT_TUPLE_BUDGET } else { budget };
        let t = build_resonance_table_with_budget(l, n, budget)?;
        write_out(out, boxed(CglTable(Arc::new(t))), "out")
    })
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, Fail> {
    if path.is_null() {
        return Err(Fail::Null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
    Ok(Path::new(s))
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_table_load(path: *const c_char, out: *mut *mut CglTable) -> CglStatus {
    guard(|| {
        let t = load_table(path_arg(path)?)?;
        write_out(out, boxed(CglTable(Arc::new(t))), "out")
    })
}

/// # Safety
/// `table` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cgl_table_save(table: *const CglTable, path: *const c_char) -> CglStatus {
    guard(|| {
        let t = &as_ref(table, "table")?.0;
        save_table(t, path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgl_table_free(table: *mut CglTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Total number of resonant tuples, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgl_table_total(table: *const CglTable) -> u64 {
    table.as_ref().map_or(0, |t| t.0.total())
}

/// Number of resonant tuples for the mode at `target`.
///
/// # Safety
/// `table` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_table_count(table: *const CglTable, target: usize, out: *mut u64) -> CglStatus {
    guard(|| {
        let t = &as_ref(table, "table")?.0;
        if target >= t.targets() {
            return Err(Error::InvalidArgument(format!("target {target} out of range")).into());
        }
        write_out(out, t.count(target) as u64, "out")
    })
}

/// # Safety
/// `table` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_table_divisor(table: *const CglTable, out: *mut CglDivisorStats) -> CglStatus {
    guard(|| {
        let d = as_ref(table, "table")?.0.divisor();
        write_out(
            out,
            CglDivisorStats {
                has_gap: d.gap.is_some(),
                gap: d.gap.unwrap_or(0),
                max_freq: d.max_freq,
            },
            "out",
        )
    })
}

// ---- vector fields ----

/// Full nonlinearity `P(v)` by dealiased collocation.
///
/// # Safety
/// `field` and `params` must be valid; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_nonlinearity(
    field: *const CglField,
    params: *const CglParams,
    out: *mut *mut CglField,
) -> CglStatus {
    guard(|| {
        let f = &as_ref(field, "field")?.0;
        let params = params_from(as_ref(params, "params")?)?;
        let p = cgl_core::dynamics::nonlinearity_p(f, &params)?;
        write_out(out, boxed(CglField(p)), "out")
    })
}

unsafe fn tables_arg(p: *const CglTable, q: *const CglTable) -> Result<ResonantTables, Fail> {
    Ok(ResonantTables::new(
        as_ref(p, "table_p")?.0.clone(),
        as_ref(q, "table_q")?.0.clone(),
    ))
}

/// Resonant field `R(v) = b R(v, p) + ic R(v, q)` from degree-`p` and degree-`q` tables.
///
/// # Safety
/// All handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_resonant_field(
    field: *const CglField,
    table_p: *const CglTable,
    table_q: *const CglTable,
    params: *const CglParams,
    out: *mut *mut CglField,
) -> CglStatus {
    guard(|| {
        let f = &as_ref(field, "field")?.0;
        let params = params_from(as_ref(params, "params")?)?;
        let r = cgl_core::dynamics::resonant_r_table(f, &tables_arg(table_p, table_q)?, &params)?;
        write_out(out, boxed(CglField(r)), "out")
    })
}

// ---- integration ----

fn control_from(c: &CglStepControl) -> StepControl {
    StepControl {
        cfl_fraction: c.cfl_fraction,
        dtau_max: c.dtau_max,
        checkpoint_dt: c.checkpoint_dt,
        self_check: c.self_check,
    }
}

unsafe fn model_arg(
    field: &FourierField,
    params: *const CglParams,
    table_p: *const CglTable,
    table_q: *const CglTable,
    tables_required: bool,
) -> Result<Model, Fail> {
    let params = params_from(as_ref(params, "params")?)?;
    let model = Model::new(field.lattice().clone(), params)?;
    if table_p.is_null() && table_q.is_null() && !tables_required {
        return Ok(model);
    }
    Ok(model.with_tables(tables_arg(table_p, table_q)?)?)
}

/// Integrates the full system. Tables are optional (pass null for both); when
/// given, `H_res` is recorded at checkpoints. On a numerical abort `*out`
/// receives the trajectory up to the last good checkpoint and the status is
/// `CGL_STATUS_NUMERICAL_ABORT`.
///
/// # Safety
/// All non-null pointers must be valid; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_integrate_full(
    datum: *const CglField,
    params: *const CglParams,
    control: *const CglStepControl,
    horizon: f64,
    table_p: *const CglTable,
    table_q: *const CglTable,
    out: *mut *mut CglTrajectory,
) -> CglStatus {
    integrate(datum, params, control, horizon, table_p, table_q, out, false)
}

/// Integrates the effective system; both tables are required.
///
/// # Safety
/// All pointers must be valid; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_integrate_effective(
    datum: *const CglField,
    params: *const CglParams,
    control: *const CglStepControl,
    horizon: f64,
    table_p: *const CglTable,
    table_q: *const CglTable,
    out: *mut *mut CglTrajectory,
) -> CglStatus {
    integrate(datum, params, control, horizon, table_p, table_q, out, true)
}

#[allow(clippy::too_many_arguments)]
unsafe fn integrate(
    datum: *const CglField,
    params: *const CglParams,
    control: *const CglStepControl,
    horizon: f64,
    table_p: *const CglTable,
    table_q: *const CglTable,
    out: *mut *mut CglTrajectory,
    effective: bool,
) -> CglStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        out.write(ptr::null_mut());
        let v0 = &as_ref(datum, "datum")?.0;
        let control = control_from(as_ref(control, "control")?);
        let model = model_arg(v0, params, table_p, table_q, effective)?;
        let diag = DiagnosticsConfig::default();
        let result = if effective {
            integrate_effective(v0, horizon, &model, &control, &diag)
        } else {
            integrate_full(v0, horizon, &model, &control, &diag)
        };
        match result {
            Ok(t) => {
                out.write(boxed(CglTrajectory(t)));
                Ok(())
            }
            Err(Error::NumericalAbort { tau, reason, partial }) => {
                if let Some(p) = partial {
                    out.write(boxed(CglTrajectory(*p)));
                }
                Err(Error::NumericalAbort {
                    tau,
                    reason,
                    partial: None,
                }
                .into())
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgl_trajectory_free(traj: *mut CglTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of checkpoints (including the initial datum), or 0 for null.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cgl_trajectory_len(traj: *const CglTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.checkpoints.len())
}

/// Slow time of checkpoint `index`.
///
/// # Safety
/// `traj` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_trajectory_tau(traj: *const CglTrajectory, index: usize, out: *mut f64) -> CglStatus {
    guard(|| {
        let t = &as_ref(traj, "trajectory")?.0;
        let cp = t
            .checkpoints
            .get(index)
            .ok_or_else(|| Error::InvalidArgument(format!("checkpoint {index} out of range")))?;
        write_out(out, cp.tau, "out")
    })
}

/// New field handle holding the state at checkpoint `index`.
///
/// # Safety
/// `traj` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_trajectory_field(
    traj: *const CglTrajectory,
    index: usize,
    out: *mut *mut CglField,
) -> CglStatus {
    guard(|| {
        let t = &as_ref(traj, "trajectory")?.0;
        let cp = t
            .checkpoints
            .get(index)
            .ok_or_else(|| Error::InvalidArgument(format!("checkpoint {index} out of range")))?;
        write_out(out, boxed(CglField(cp.field.clone())), "out")
    })
}

/// `sup_tau |I(v(tau)) - I(a(tau))|~_{s1}` over aligned checkpoints.
///
/// # Safety
/// Both handles must be live; `out_sup` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cgl_compare_actions(
    full: *const CglTrajectory,
    effective: *const CglTrajectory,
    s1: f64,
    out_sup: *mut f64,
) -> CglStatus {
    guard(|| {
        let r = compare_actions(&as_ref(full, "full")?.0, &as_ref(effective, "effective")?.0, s1)?;
        write_out(out_sup, r.sup, "out_sup")
    })
}
