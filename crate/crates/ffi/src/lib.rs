//! C ABI over `scprop`.
//!
//! Every entry point returns an [`ScpStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`scp_last_error_message`]. Models and eigen-solutions are opaque handles
//! that must be released with their `_destroy` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use scprop::asymptotics::{spa_integrate, SpaInput};
use scprop::complextraj::{propagator, SolveOptions};
use scprop::ivr::{mixed_packet, Method};
use scprop::ode::OdeOptions;
use scprop::quad::UniformGrid;
use scprop::quantum::{build_basis, diagonalize, BasisSpec, EigenSolution};
use scprop::spectral::{quantize, QuantizationRule};
use scprop::{CoherentParams, ComplexLabel, HamiltonianModel, PhasePoint, SymbolKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ComputeError = 3,
    Panic = 4,
    BufferTooSmall = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScpMethod {
    SmoothedIvr = 0,
    HermanKluk = 1,
    Heller = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScpSymbol {
    Weyl = 0,
    Smoothed = 1,
    Antismoothed = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScpRule {
    SmoothedPlusI = 0,
    AntismoothedMinusI = 1,
    WeylWkb = 2,
}

impl From<ScpMethod> for Method {
    fn from(m: ScpMethod) -> Self {
        match m {
            ScpMethod::SmoothedIvr => Method::SmoothedIvr,
            ScpMethod::HermanKluk => Method::HermanKluk,
            ScpMethod::Heller => Method::Heller,
        }
    }
}

impl From<ScpSymbol> for SymbolKind {
    fn from(s: ScpSymbol) -> Self {
        match s {
            ScpSymbol::Weyl => SymbolKind::Weyl,
            ScpSymbol::Smoothed => SymbolKind::Smoothed,
            ScpSymbol::Antismoothed => SymbolKind::Antismoothed,
        }
    }
}

impl From<ScpRule> for QuantizationRule {
    fn from(r: ScpRule) -> Self {
        match r {
            ScpRule::SmoothedPlusI => QuantizationRule::SmoothedPlusI,
            ScpRule::AntismoothedMinusI => QuantizationRule::AntismoothedMinusI,
            ScpRule::WeylWkb => QuantizationRule::WeylWkb,
        }
    }
}

/// Opaque Hamiltonian with its coherent-state widths.
pub struct ScpModel(HamiltonianModel);

/// Opaque result of a sine-basis diagonalization.
pub struct ScpEigen(EigenSolution);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(ScpStatus, String);

impl From<scprop::Error> for Failure {
    fn from(e: scprop::Error) -> Self {
        let status = match e {
            scprop::Error::InvalidParams(_) => ScpStatus::InvalidArgument,
            _ => ScpStatus::ComputeError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ScpStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(ScpStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status plus the thread's
/// last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ScpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ScpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            ScpStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn model_ref<'a>(model: *const ScpModel) -> Result<&'a HamiltonianModel, Failure> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

fn params(b: f64, hbar: f64) -> Result<CoherentParams, Failure> {
    Ok(CoherentParams::new(b, hbar)?)
}

unsafe fn emit_model(out: *mut *mut ScpModel, model: HamiltonianModel) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(ScpModel(model))))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scp_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Length in bytes (without NUL) of the calling thread's last error message.
#[no_mangle]
pub extern "C" fn scp_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message (NUL-terminated, truncated to fit) into
/// `buf`. Returns the number of bytes written excluding the NUL.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn scp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let n = msg.len().min(len - 1);
        ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// H = p²/2m + mω²q²/2.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scp_model_harmonic(mass: f64, omega: f64, b: f64, hbar: f64, out: *mut *mut ScpModel) -> ScpStatus {
    guard(|| emit_model(out, HamiltonianModel::harmonic(mass, omega, params(b, hbar)?)?))
}

/// H = p²/2m + Σ coeffs[k] q^k.
///
/// # Safety
/// `coeffs` must point to `n` doubles (or be null with `n == 0`); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn scp_model_polynomial(
    mass: f64,
    coeffs: *const f64,
    n: usize,
    b: f64,
    hbar: f64,
    out: *mut *mut ScpModel,
) -> ScpStatus {
    guard(|| {
        let c = if n == 0 {
            Vec::new()
        } else if coeffs.is_null() {
            return Err(null("coeffs"));
        } else {
            std::slice::from_raw_parts(coeffs, n).to_vec()
        };
        emit_model(out, HamiltonianModel::polynomial(mass, c, params(b, hbar)?)?)
    })
}

/// H = p²/2m + V0 [e^{α(q−A)} + e^{−α(q+A)}].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scp_model_barrier(
    v0: f64,
    alpha: f64,
    a: f64,
    mass: f64,
    b: f64,
    hbar: f64,
    out: *mut *mut ScpModel,
) -> ScpStatus {
    guard(|| emit_model(out, HamiltonianModel::barrier(v0, alpha, a, mass, params(b, hbar)?)?))
}

/// # Safety
/// `model` must come from a `scp_model_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn scp_model_destroy(model: *mut ScpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Evaluates ⟨x|K(t)|z′⟩ for the chosen method, z′ labelled by (q0, p0),
/// at the `n` points `xs`.
///
/// # Safety
/// `xs`, `out_re`, `out_im` must be valid for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn scp_mixed_packet(
    model: *const ScpModel,
    method: ScpMethod,
    q0: f64,
    p0: f64,
    t: f64,
    xs: *const f64,
    n: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> ScpStatus {
    guard(|| {
        let model = model_ref(model)?;
        if n > 0 && (xs.is_null() || out_re.is_null() || out_im.is_null()) {
            return Err(null("xs or output buffer"));
        }
        if !(t >= 0.0) {
            return Err(invalid(format!("t must be non-negative, got {t}")));
        }
        let probe = UniformGrid { start: 0.0, step: 1.0, n: 2 };
        let pk = mixed_packet(model, method.into(), PhasePoint::new(q0, p0), t, &probe, &OdeOptions::default())?;
        for k in 0..n {
            let v = pk.at(*xs.add(k));
            *out_re.add(k) = v.re;
            *out_im.add(k) = v.im;
        }
        Ok(())
    })
}

/// Semiclassical ⟨z″|e^{−iĤt/ħ}|z′⟩ from the principal complex trajectory.
///
/// # Safety
/// `out_re` and `out_im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn scp_coherent_propagator(
    model: *const ScpModel,
    symbol: ScpSymbol,
    z1_re: f64,
    z1_im: f64,
    z2_re: f64,
    z2_im: f64,
    t: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> ScpStatus {
    guard(|| {
        let model = model_ref(model)?;
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output pointer"));
        }
        let z1 = ComplexLabel::new(scprop::Complex64::new(z1_re, z1_im));
        let z2 = ComplexLabel::new(scprop::Complex64::new(z2_re, z2_im));
        let k = propagator(model, symbol.into(), z1, z2, t, &SolveOptions::default())?;
        *out_re = k.re;
        *out_im = k.im;
        Ok(())
    })
}

/// Energy of level m under the given quantization rule.
///
/// # Safety
/// `out_energy` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scp_quantize(model: *const ScpModel, rule: ScpRule, m: usize, out_energy: *mut f64) -> ScpStatus {
    guard(|| {
        let model = model_ref(model)?;
        let level = quantize(model, rule.into(), m..m + 1)?;
        write_out(out_energy, level[0].energy)
    })
}

/// Diagonalizes the Weyl Hamiltonian in a sine basis of `size` functions.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn scp_eigen_solve(model: *const ScpModel, size: usize, out: *mut *mut ScpEigen) -> ScpStatus {
    guard(|| {
        let model = model_ref(model)?;
        let basis = build_basis(model, BasisSpec::Size(size), None)?;
        let sol = diagonalize(model, &basis)?;
        write_out(out, Box::into_raw(Box::new(ScpEigen(sol))))
    })
}

/// Number of levels, and how many of the lowest are converged.
///
/// # Safety
/// `eigen` must be a live handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn scp_eigen_count(eigen: *const ScpEigen, out_total: *mut usize, out_trusted: *mut usize) -> ScpStatus {
    guard(|| {
        let e = eigen.as_ref().ok_or_else(|| null("eigen"))?;
        if !out_total.is_null() {
            *out_total = e.0.energies.len();
        }
        if !out_trusted.is_null() {
            *out_trusted = e.0.trusted;
        }
        Ok(())
    })
}

/// Copies the lowest `len` energies (ascending) into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn scp_eigen_energies(eigen: *const ScpEigen, buf: *mut f64, len: usize) -> ScpStatus {
    guard(|| {
        let e = eigen.as_ref().ok_or_else(|| null("eigen"))?;
        if len > e.0.energies.len() {
            return Err(Failure(
                ScpStatus::BufferTooSmall,
                format!("requested {len} energies but only {} exist", e.0.energies.len()),
            ));
        }
        if len > 0 && buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(e.0.energies.as_ptr(), buf, len);
        Ok(())
    })
}

/// # Safety
/// `eigen` must come from `scp_eigen_solve` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn scp_eigen_destroy(eigen: *mut ScpEigen) {
    if !eigen.is_null() {
        drop(Box::from_raw(eigen));
    }
}

/// Stationary-phase value of ∫g e^{if/ħ}dx from derivatives at the stationary
/// point: `f` holds f..f⁗ (5 values), `g` holds g, g′, g″. `out` receives
/// [Re A0, Im A0, R, Re A, Im A] with A = A0(1 + iħR).
///
/// # Safety
/// `f` must hold 5 doubles, `g` 3, `out` 5.
#[no_mangle]
pub unsafe extern "C" fn scp_spa(f: *const f64, g: *const f64, hbar: f64, out: *mut f64) -> ScpStatus {
    guard(|| {
        if f.is_null() || g.is_null() || out.is_null() {
            return Err(null("f, g or out"));
        }
        let mut input = SpaInput { f: [0.0; 5], g: [0.0; 3] };
        input.f.copy_from_slice(std::slice::from_raw_parts(f, 5));
        input.g.copy_from_slice(std::slice::from_raw_parts(g, 3));
        let r = spa_integrate(&input, hbar)?;
        let vals = [r.a0.re, r.a0.im, r.r, r.corrected.re, r.corrected.im];
        ptr::copy_nonoverlapping(vals.as_ptr(), out, 5);
        Ok(())
    })
}
