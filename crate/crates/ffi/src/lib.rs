//! C ABI over `polar-aed`.
//!
//! Every fallible function returns a [`PaStatus`]; on failure the message is
//! available from [`pa_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polar_aed::bch::{concat_bler, ConcatSpec};
use polar_aed::perm::{sample_ensemble, SamplingPolicy};
use polar_aed::polar::puf_code_1024;
use polar_aed::{AeDecoder, Architecture, CodeSpec, EnsembleSpec, Error, PlanOptions};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    Io = 4,
    Parse = 5,
    Panic = 6,
}

/// Polar code handle.
pub struct PaCode(CodeSpec);

/// Ensemble decoder handle; not safe for concurrent use.
pub struct PaDecoder(AeDecoder);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PaStatus {
    match e {
        Error::LengthMismatch { .. } => PaStatus::LengthMismatch,
        Error::Io(_) => PaStatus::Io,
        Error::Parse(_) => PaStatus::Parse,
        _ => PaStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (PaStatus, String)>) -> PaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PaStatus::Panic
        }
    }
}

fn lib(e: Error) -> (PaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PaStatus, String) {
    (PaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (PaStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(
    p: *mut T,
    len: usize,
    what: &str,
) -> Result<&'a mut [T], (PaStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, (PaStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| (PaStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 if there is none.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn pa_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Code from partial-order generators. `profile` may be null with
/// `profile_len` 0 for the trivial profile.
///
/// # Safety
/// Pointers must be valid for their lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pa_code_from_generators(
    n: usize,
    generators: *const usize,
    generators_len: usize,
    profile: *const usize,
    profile_len: usize,
    out: *mut *mut PaCode,
) -> PaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let gens = slice(generators, generators_len, "generators")?;
        let prof = slice(profile, profile_len, "profile")?;
        let code = CodeSpec::from_generators(n, gens, prof).map_err(lib)?;
        *out = Box::into_raw(Box::new(PaCode(code)));
        Ok(())
    })
}

/// The (1024, 78) code with generators {255, 505} and profile [3, 7].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pa_code_puf_1024(out: *mut *mut PaCode) -> PaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(PaCode(puf_code_1024())));
        Ok(())
    })
}

/// Loads a code spec file.
///
/// # Safety
/// `file` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pa_code_load(file: *const c_char, out: *mut *mut PaCode) -> PaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let code = CodeSpec::load(path(file)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(PaCode(code)));
        Ok(())
    })
}

/// # Safety
/// `code` must come from a `pa_code_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pa_code_free(code: *mut PaCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Block length N, or 0 for a null handle.
///
/// # Safety
/// `code` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pa_code_length(code: *const PaCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.len())
}

/// Dimension K, or 0 for a null handle.
///
/// # Safety
/// `code` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pa_code_dimension(code: *const PaCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.k())
}

/// Encodes `K` message bits (one per byte) into `N` codeword bits.
///
/// # Safety
/// `message` must hold `message_len` bytes and `codeword` `codeword_len`.
#[no_mangle]
pub unsafe extern "C" fn pa_code_encode(
    code: *const PaCode,
    message: *const u8,
    message_len: usize,
    codeword: *mut u8,
    codeword_len: usize,
) -> PaStatus {
    guard(|| {
        let code = &code.as_ref().ok_or_else(|| null("code"))?.0;
        let m = slice(message, message_len, "message")?;
        let out = slice_mut(codeword, codeword_len, "codeword")?;
        if out.len() != code.len() {
            return Err(lib(Error::LengthMismatch {
                expected: code.len(),
                found: out.len(),
            }));
        }
        out.copy_from_slice(&code.encode(m).map_err(lib)?);
        Ok(())
    })
}

/// Extracts the `K` information bits of a codeword.
///
/// # Safety
/// Buffers must be valid for their lengths.
#[no_mangle]
pub unsafe extern "C" fn pa_code_extract(
    code: *const PaCode,
    codeword: *const u8,
    codeword_len: usize,
    message: *mut u8,
    message_len: usize,
) -> PaStatus {
    guard(|| {
        let code = &code.as_ref().ok_or_else(|| null("code"))?.0;
        let c = slice(codeword, codeword_len, "codeword")?;
        let out = slice_mut(message, message_len, "message")?;
        if out.len() != code.k() {
            return Err(lib(Error::LengthMismatch {
                expected: code.k(),
                found: out.len(),
            }));
        }
        out.copy_from_slice(&code.extract_message(c).map_err(lib)?);
        Ok(())
    })
}

fn plan(q_max: u32) -> PlanOptions {
    PlanOptions::binary((q_max > 0).then_some(q_max))
}

unsafe fn new_decoder(
    code: *const PaCode,
    q_max: u32,
    out: *mut *mut PaDecoder,
    ensemble: impl FnOnce(&CodeSpec) -> polar_aed::Result<EnsembleSpec>,
) -> PaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let code = &code.as_ref().ok_or_else(|| null("code"))?.0;
        let spec = ensemble(code).map_err(lib)?;
        let dec = AeDecoder::new(code, &spec, plan(q_max)).map_err(lib)?;
        *out = Box::into_raw(Box::new(PaDecoder(dec)));
        Ok(())
    })
}

/// Decoder for binary channel inputs. `ensemble_file` may be null for plain
/// SC decoding; `q_max` 0 means unbounded precision.
///
/// # Safety
/// `code` must be live; `ensemble_file` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pa_decoder_new(
    code: *const PaCode,
    ensemble_file: *const c_char,
    q_max: u32,
    out: *mut *mut PaDecoder,
) -> PaStatus {
    if ensemble_file.is_null() {
        return new_decoder(code, q_max, out, |_| Ok(EnsembleSpec::identity()));
    }
    let file = match path(ensemble_file) {
        Ok(p) => p.to_path_buf(),
        Err((status, msg)) => {
            set_error(msg);
            return status;
        }
    };
    new_decoder(code, q_max, out, |_| EnsembleSpec::load(&file))
}

/// Decoder with a randomly sampled ensemble. `architecture`: 0 independent,
/// 1 cascaded, 2 recursive.
///
/// # Safety
/// `code` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pa_decoder_new_sampled(
    code: *const PaCode,
    architecture: u32,
    size: usize,
    seed: u64,
    q_max: u32,
    out: *mut *mut PaDecoder,
) -> PaStatus {
    let arch = match architecture {
        0 => Architecture::Independent,
        1 => Architecture::Cascaded,
        2 => Architecture::Recursive,
        other => {
            set_error(format!("unknown architecture {other}"));
            return PaStatus::InvalidArgument;
        }
    };
    new_decoder(code, q_max, out, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_ensemble(c, arch, size, SamplingPolicy::for_code(c), &mut rng)
    })
}

/// # Safety
/// `decoder` must come from a `pa_decoder_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn pa_decoder_free(decoder: *mut PaDecoder) {
    if !decoder.is_null() {
        drop(Box::from_raw(decoder));
    }
}

/// Ensemble size M, or 0 for a null handle.
///
/// # Safety
/// `decoder` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn pa_decoder_ensemble_size(decoder: *const PaDecoder) -> usize {
    decoder.as_ref().map_or(0, |d| d.0.ensemble_size())
}

/// Decodes `N` integer LLRs (positive favours bit 0) into a codeword.
/// `winner` may be null.
///
/// # Safety
/// Buffers must be valid for their lengths; `decoder` must be live.
#[no_mangle]
pub unsafe extern "C" fn pa_decoder_decode(
    decoder: *mut PaDecoder,
    llr: *const i32,
    llr_len: usize,
    codeword: *mut u8,
    codeword_len: usize,
    winner: *mut usize,
) -> PaStatus {
    guard(|| {
        let dec = &mut decoder.as_mut().ok_or_else(|| null("decoder"))?.0;
        let l = slice(llr, llr_len, "llr")?;
        let out = slice_mut(codeword, codeword_len, "codeword")?;
        let w = dec.decode_into(l, out, None).map_err(lib)?;
        if !winner.is_null() {
            *winner = w;
        }
        Ok(())
    })
}

/// Decodes a received hard-decision word (one bit per byte).
///
/// # Safety
/// Buffers must be valid for their lengths; `decoder` must be live.
#[no_mangle]
pub unsafe extern "C" fn pa_decoder_decode_hard(
    decoder: *mut PaDecoder,
    received: *const u8,
    received_len: usize,
    codeword: *mut u8,
    codeword_len: usize,
    winner: *mut usize,
) -> PaStatus {
    let bits = match guard_slice(received, received_len) {
        Ok(b) => b,
        Err(s) => return s,
    };
    let llr: Vec<i32> = bits.iter().map(|&b| polar_aed::sc::bit_to_llr(b)).collect();
    pa_decoder_decode(
        decoder,
        llr.as_ptr(),
        llr.len(),
        codeword,
        codeword_len,
        winner,
    )
}

unsafe fn guard_slice<'a>(p: *const u8, len: usize) -> Result<&'a [u8], PaStatus> {
    slice(p, len, "received").map_err(|(s, m)| {
        set_error(m);
        s
    })
}

/// Analytic BLER of BCH(1023, 318) with `repetition`-fold inner code.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pa_bch_concat_bler(
    epsilon: f64,
    repetition: usize,
    out: *mut f64,
) -> PaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = ConcatSpec::bch_1023_318(repetition).map_err(lib)?;
        *out = concat_bler(epsilon, &spec).map_err(lib)?;
        Ok(())
    })
}
