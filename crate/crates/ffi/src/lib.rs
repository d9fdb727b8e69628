//! C ABI over `posce-core`.
//!
//! Every entry point returns a [`PosceStatus`]. On failure a human-readable
//! message is kept per thread and can be read with [`posce_last_error`].
//! Models and tables are opaque handles created by `*_load` / `*_unbuilt`
//! and released with the matching `*_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use posce_core::cli::{attribute, PayoffChoice};
use posce_core::corpus::{tokenize, Polarity, Sentence};
use posce_core::posce::{lookup_profile, EstimatorConfig, PosceTable as CoreTable, Window};
use posce_core::shapley::{shapley_exact, shapley_permutation, Coalition, CoalitionGame, ShapleyValues};
use posce_core::textmodel::Model;
use posce_core::{Error, ErrorClass};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Numeric = 6,
    BufferTooSmall = 7,
    Callback = 8,
    Panic = 9,
}

/// Loaded classifier checkpoint.
pub struct PosceModel(Model);

/// PosCE profile table.
pub struct PosceTable(CoreTable);

/// Payoff callback for the Shapley entry points. Receives the coalition as a
/// bitmask (bit i set means player i is present) and writes its payoff to
/// `out_payoff`. A non-zero return aborts the computation.
pub type PosceGameCallback =
    Option<unsafe extern "C" fn(coalition: u64, user_data: *mut c_void, out_payoff: *mut f64) -> i32>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

struct Failure(PosceStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.class() {
            ErrorClass::Io => PosceStatus::Io,
            ErrorClass::Parse => PosceStatus::Parse,
            ErrorClass::Numeric => PosceStatus::Numeric,
            ErrorClass::Usage | ErrorClass::Validation => PosceStatus::Validation,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: PosceStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PosceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PosceStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PosceStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(PosceStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(PosceStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(PosceStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return fail(PosceStatus::NullPointer, format!("{what} is null"));
    }
    if len < need {
        return fail(
            PosceStatus::BufferTooSmall,
            format!("{what} holds {len} values but {need} are needed"),
        );
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn posce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or "" after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn posce_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn posce_model_load(path: *const c_char, out: *mut *mut PosceModel) -> PosceStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return fail(PosceStatus::NullPointer, "out is null");
        }
        let (model, _) = Model::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(PosceModel(model)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn posce_model_free(model: *mut PosceModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Longest input the model accepts; also the width of its table rows.
#[no_mangle]
pub unsafe extern "C" fn posce_model_max_len(model: *const PosceModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.max_len)
}

#[no_mangle]
pub unsafe extern "C" fn posce_table_load(path: *const c_char, out: *mut *mut PosceTable) -> PosceStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return fail(PosceStatus::NullPointer, "out is null");
        }
        let (table, _) = CoreTable::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(PosceTable(table)));
        Ok(())
    })
}

/// A table whose rows are all uniform.
#[no_mangle]
pub unsafe extern "C" fn posce_table_unbuilt(max_len: usize, out: *mut *mut PosceTable) -> PosceStatus {
    guard(|| {
        if out.is_null() {
            return fail(PosceStatus::NullPointer, "out is null");
        }
        if max_len == 0 {
            return fail(PosceStatus::Validation, "max_len must be positive");
        }
        *out = Box::into_raw(Box::new(PosceTable(CoreTable::unbuilt(max_len))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn posce_table_free(table: *mut PosceTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Writes the profile for an aspect at position `t` in a sentence of `len`
/// tokens into `out[0..len]`.
#[no_mangle]
pub unsafe extern "C" fn posce_table_lookup(
    table: *const PosceTable,
    t: usize,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> PosceStatus {
    guard(|| {
        let table = &ref_arg(table, "table")?.0;
        if len == 0 || t >= len {
            return fail(
                PosceStatus::Validation,
                format!("aspect position {t} outside length {len}"),
            );
        }
        let dst = out_slice(out, out_len, len, "out")?;
        dst.copy_from_slice(&lookup_profile(table, t, len));
        Ok(())
    })
}

fn window_for(model: &Model, text: &str, from: usize, to: usize) -> Result<(Window, Vec<usize>), Failure> {
    let sentence = Sentence::new("ffi", tokenize(text), from, to, Polarity::Positive)?;
    let window = Window::new(&sentence, model.max_len);
    let ids = model.embeddings.ids(&window.tokens);
    Ok((window, ids))
}

/// Class probabilities (positive, neutral, negative) for the aspect spanning
/// tokens `[aspect_from, aspect_to)` of `text`. `table` may be null, in which
/// case a uniform profile is used.
#[no_mangle]
pub unsafe extern "C" fn posce_predict(
    model: *const PosceModel,
    table: *const PosceTable,
    text: *const c_char,
    aspect_from: usize,
    aspect_to: usize,
    out_probs: *mut f64,
) -> PosceStatus {
    guard(|| {
        let model = &ref_arg(model, "model")?.0;
        let text = str_arg(text, "text")?;
        let (window, ids) = window_for(model, text, aspect_from, aspect_to)?;
        let t = window.aspect_position();
        let profile = match table.as_ref() {
            Some(tb) => lookup_profile(&tb.0, t, window.len()),
            None => vec![1.0 / window.len() as f64; window.len()],
        };
        let probs = model.predict(&ids, &profile, t)?;
        out_slice(out_probs, 3, 3, "out_probs")?.copy_from_slice(&probs);
        Ok(())
    })
}

/// Shapley contribution of every token toward `payoff_class` (0, 1, 2, or -1
/// for the predicted class). Values are written for the tokens kept after
/// truncation to the model's input length; their count goes to `out_count`.
/// Sentences with at most 12 context words are solved exactly, longer ones
/// with `samples` seeded permutations.
#[no_mangle]
pub unsafe extern "C" fn posce_attribute(
    model: *const PosceModel,
    table: *const PosceTable,
    text: *const c_char,
    aspect_from: usize,
    aspect_to: usize,
    payoff_class: i32,
    samples: usize,
    seed: u64,
    out_values: *mut f64,
    out_len: usize,
    out_count: *mut usize,
) -> PosceStatus {
    guard(|| {
        let model = &ref_arg(model, "model")?.0;
        let text = str_arg(text, "text")?;
        let choice = match payoff_class {
            -1 => PayoffChoice::Predicted,
            c @ 0..=2 => PayoffChoice::Class(c as usize),
            c => {
                return fail(
                    PosceStatus::Validation,
                    format!("payoff class {c} (expected -1, 0, 1 or 2)"),
                )
            }
        };
        if out_count.is_null() {
            return fail(PosceStatus::NullPointer, "out_count is null");
        }
        let unbuilt;
        let table = match table.as_ref() {
            Some(tb) => &tb.0,
            None => {
                unbuilt = CoreTable::unbuilt(model.max_len);
                &unbuilt
            }
        };
        let est = EstimatorConfig::Auto {
            exact_max_players: 12,
            samples,
            seed,
        };
        let report = attribute(model, table, text, aspect_from, aspect_to, choice, None, &est)?;
        *out_count = report.rows.len();
        let dst = out_slice(out_values, out_len, report.rows.len(), "out_values")?;
        for (d, r) in dst.iter_mut().zip(&report.rows) {
            *d = r.raw;
        }
        Ok(())
    })
}

struct CallbackGame {
    players: usize,
    callback: unsafe extern "C" fn(u64, *mut c_void, *mut f64) -> i32,
    user_data: *mut c_void,
}

impl CoalitionGame for CallbackGame {
    fn player_count(&self) -> usize {
        self.players
    }

    fn payoff(&self, coalition: Coalition) -> posce_core::Result<f64> {
        let mut v = f64::NAN;
        let rc = unsafe { (self.callback)(coalition.bits(), self.user_data, &mut v) };
        if rc != 0 {
            return Err(Error::Validation {
                what: "payoff callback",
                reason: format!("returned {rc} for coalition {coalition:?}"),
            });
        }
        Ok(v)
    }
}

unsafe fn run_game(
    players: usize,
    callback: PosceGameCallback,
    user_data: *mut c_void,
    out_values: *mut f64,
    out_len: usize,
    solve: impl FnOnce(&CallbackGame) -> posce_core::Result<ShapleyValues>,
) -> PosceStatus {
    guard(|| {
        let Some(callback) = callback else {
            return fail(PosceStatus::NullPointer, "callback is null");
        };
        let dst = out_slice(out_values, out_len, players, "out_values")?;
        let game = CallbackGame {
            players,
            callback,
            user_data,
        };
        match solve(&game) {
            Ok(sv) => {
                dst.copy_from_slice(&sv.values);
                Ok(())
            }
            Err(
                e @ Error::Validation {
                    what: "payoff callback",
                    ..
                },
            ) => fail(PosceStatus::Callback, e.to_string()),
            Err(e) => Err(e.into()),
        }
    })
}

/// Exact Shapley values of a `players`-player game (at most 20 players).
#[no_mangle]
pub unsafe extern "C" fn posce_shapley_exact(
    players: usize,
    callback: PosceGameCallback,
    user_data: *mut c_void,
    out_values: *mut f64,
    out_len: usize,
) -> PosceStatus {
    run_game(players, callback, user_data, out_values, out_len, shapley_exact)
}

/// Permutation-sampling estimate (at most 64 players). Deterministic for a
/// given seed.
#[no_mangle]
pub unsafe extern "C" fn posce_shapley_permutation(
    players: usize,
    samples: usize,
    seed: u64,
    callback: PosceGameCallback,
    user_data: *mut c_void,
    out_values: *mut f64,
    out_len: usize,
) -> PosceStatus {
    run_game(players, callback, user_data, out_values, out_len, |g| {
        shapley_permutation(g, samples, seed)
    })
}
