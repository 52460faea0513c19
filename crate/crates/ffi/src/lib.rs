//! C ABI for embedding a registry in non-Rust programs.
//!
//! Every function returns a [`VrStatus`]. On failure a human-readable message
//! is available from [`vr_last_error`] on the same thread until the next call.
//! Strings handed out by the library must be released with [`vr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vocab_registry::cli::DataDirLock;
use vocab_registry::kos::Format;
use vocab_registry::model::{AgentId, AgentKind, Contact};
use vocab_registry::registry::{ImportRequest, Registry, RegistryConfig};
use vocab_registry::RegistryError;

/// Opaque registry handle. Holds the data directory lock until freed.
pub struct VrRegistry {
    registry: Registry,
    _lock: DataDirLock,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    NotFound = 3,
    Conflict = 4,
    InvalidInput = 5,
    ValidationFailed = 6,
    ParseFailed = 7,
    Forbidden = 8,
    Locked = 9,
    Io = 10,
    Corrupt = 11,
    Internal = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrFormat {
    Triples = 0,
    Csv = 1,
    Structured = 2,
}

impl From<VrFormat> for Format {
    fn from(f: VrFormat) -> Format {
        match f {
            VrFormat::Triples => Format::Triples,
            VrFormat::Csv => Format::Csv,
            VrFormat::Structured => Format::Structured,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &RegistryError) -> VrStatus {
    use RegistryError::*;
    match e {
        UnknownAgent(_) | UnknownScheme(_) | UnknownConcept(_) | UnknownVersion(_) | UnknownToken => VrStatus::NotFound,
        TokenTaken(_) | DuplicateUri(_) | VersionConflict { .. } | TokenUsed | TokenExpired | AlreadyDeprecated(_) => VrStatus::Conflict,
        ValidationFailed(_) | SuccessionInvalid(_) => VrStatus::ValidationFailed,
        ParseFailed(_) | NoScheme | MultipleSchemes | BadHeader | BadRow(..) | UnknownFormat(_) => VrStatus::ParseFailed,
        NotOwner | NotMaintainer(_) | Unauthorized => VrStatus::Forbidden,
        Locked => VrStatus::Locked,
        Io(_) => VrStatus::Io,
        CorruptRecord { .. } => VrStatus::Corrupt,
        _ => VrStatus::InvalidInput,
    }
}

struct Failure(VrStatus, String);

impl From<RegistryError> for Failure {
    fn from(e: RegistryError) -> Failure {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any error or panic for `vr_last_error`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            VrStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(VrStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(VrStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(reg: *const VrRegistry) -> Result<&'a Registry, Failure> {
    reg.as_ref().map(|h| &h.registry).ok_or(Failure(VrStatus::NullArgument, "registry handle is null".into()))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure(VrStatus::NullArgument, format!("{what} is null")));
    }
    Ok(())
}

fn owned(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| Failure(VrStatus::Internal, "string contains NUL".into()))
}

/// Opens the registry stored in `data_dir`, creating it if needed.
/// `base_uri` may be null to keep the default minting base.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vr_registry_open(data_dir: *const c_char, base_uri: *const c_char, out: *mut *mut VrRegistry) -> VrStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let dir = text(data_dir, "data_dir")?;
        let mut cfg = RegistryConfig::new(dir);
        if !base_uri.is_null() {
            cfg.base_uri = text(base_uri, "base_uri")?.to_string();
            cfg.public_url = cfg.base_uri.clone();
        }
        let lock = DataDirLock::acquire(Path::new(dir))?;
        let registry = Registry::open(cfg)?;
        *out = Box::into_raw(Box::new(VrRegistry { registry, _lock: lock }));
        Ok(())
    })
}

/// Closes a handle and releases the data directory. Null is ignored.
///
/// # Safety
/// `reg` must come from `vr_registry_open` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vr_registry_free(reg: *mut VrRegistry) {
    if !reg.is_null() {
        drop(Box::from_raw(reg));
    }
}

/// Registers an organization agent with one email contact. Writes the new
/// agent id and its API token, both to be freed with `vr_string_free`.
///
/// # Safety
/// Pointers must be valid as described for `vr_registry_open`.
#[no_mangle]
pub unsafe extern "C" fn vr_register_agent(
    reg: *const VrRegistry,
    name: *const c_char,
    email: *const c_char,
    out_agent_id: *mut *mut c_char,
    out_api_token: *mut *mut c_char,
) -> VrStatus {
    guard(|| {
        let r = handle(reg)?;
        out_ptr(out_agent_id, "out_agent_id")?;
        out_ptr(out_api_token, "out_api_token")?;
        let contacts = vec![Contact::new("email", text(email, "email")?)];
        let (agent, token) = r.register_agent(text(name, "name")?, AgentKind::Organization, contacts)?;
        let id = owned(agent.id.to_string())?;
        let token = owned(token).inspect_err(|_| drop(CString::from_raw(id)))?;
        *out_agent_id = id;
        *out_api_token = token;
        Ok(())
    })
}

/// Imports `len` bytes of `payload` as a new hosted scheme named `token`,
/// owned by `owner`. Writes the head version of the new scheme.
///
/// # Safety
/// `payload` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn vr_import(
    reg: *const VrRegistry,
    owner: *const c_char,
    token: *const c_char,
    format: VrFormat,
    payload: *const u8,
    len: usize,
    out_version: *mut u64,
) -> VrStatus {
    guard(|| {
        let r = handle(reg)?;
        out_ptr(out_version, "out_version")?;
        if payload.is_null() && len > 0 {
            return Err(Failure(VrStatus::NullArgument, "payload is null".into()));
        }
        let bytes = if len == 0 { &[][..] } else { std::slice::from_raw_parts(payload, len) };
        let req = ImportRequest {
            token: text(token, "token")?.to_string(),
            owner: AgentId::from(text(owner, "owner")?),
            format: format.into(),
            title: None,
            description: None,
            strategy: None,
        };
        r.import(&req, bytes)?;
        *out_version = r.head_version(&req.token)?;
        Ok(())
    })
}

/// Exports a scheme at `version`, or at its head when `version` is 0.
/// Writes the document and the version it reflects.
///
/// # Safety
/// Pointers must be valid as described for `vr_registry_open`.
#[no_mangle]
pub unsafe extern "C" fn vr_export(
    reg: *const VrRegistry,
    token: *const c_char,
    version: u64,
    format: VrFormat,
    out_text: *mut *mut c_char,
    out_version: *mut u64,
) -> VrStatus {
    guard(|| {
        let r = handle(reg)?;
        out_ptr(out_text, "out_text")?;
        out_ptr(out_version, "out_version")?;
        let (body, _, v) = r.export(text(token, "token")?, (version != 0).then_some(version), format.into())?;
        *out_text = owned(body)?;
        *out_version = v;
        Ok(())
    })
}

/// Writes the head version of a hosted scheme.
///
/// # Safety
/// Pointers must be valid as described for `vr_registry_open`.
#[no_mangle]
pub unsafe extern "C" fn vr_head_version(reg: *const VrRegistry, token: *const c_char, out_version: *mut u64) -> VrStatus {
    guard(|| {
        let r = handle(reg)?;
        out_ptr(out_version, "out_version")?;
        *out_version = r.head_version(text(token, "token")?)?;
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn vr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
