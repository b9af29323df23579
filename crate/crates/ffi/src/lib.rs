//! C ABI for the solver: opaque handles, integer status codes, and
//! canonical game/strategy documents as the exchange format.
//!
//! Conventions:
//! - Every function that can fail returns a [`BwStatus`]; on failure a
//!   human-readable message is available from `bw_last_error_message`
//!   until the next failing call on the same thread.
//! - `bw_game_parse` and friends allocate handles that must be released
//!   with the matching `*_free`.
//! - Strings returned as `*mut c_char` are owned by the caller and must
//!   be released with `bw_string_free`; `bw_version` and
//!   `bw_last_error_message` return borrowed pointers that must not be
//!   freed.
//! - Players are encoded as 0 (player I) and 1 (player II).

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use blackwell::catalog;
use blackwell::finite::{backward_induction, best_response, expected_payoff};
use blackwell::format::{parse_game, parse_strategy, serialize_game, serialize_strategy};
use blackwell::game::{BehavioralStrategy, GameKind, GameSpec, Player};
use blackwell::limit::{finite_truncation, gdelta_value_bracket, open_value_bracket};
use blackwell::sim::simulate;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BwStatus {
    Ok = 0,
    NullPointer = 1,
    Utf8Error = 2,
    ParseError = 3,
    DomainError = 4,
    BufferTooSmall = 5,
    UnknownName = 6,
    Panic = 7,
}

/// Opaque game handle.
pub struct BwGame {
    spec: GameSpec,
}

/// Opaque strategy handle, bound to the alphabets it was parsed with.
pub struct BwStrategy {
    strategy: BehavioralStrategy,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

fn guard<F: FnOnce() -> BwStatus>(f: F) -> BwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            BwStatus::Panic
        }
    }
}

/// # Safety
/// `text` must be a valid NUL-terminated string.
unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, BwStatus> {
    if text.is_null() {
        set_error("null string pointer");
        return Err(BwStatus::NullPointer);
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        BwStatus::Utf8Error
    })
}

fn player_of(code: c_int) -> Result<Player, BwStatus> {
    match code {
        0 => Ok(Player::I),
        1 => Ok(Player::II),
        other => {
            set_error(format!("unknown player code {other}; use 0 (I) or 1 (II)"));
            Err(BwStatus::UnknownName)
        }
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn bw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failure on this thread, or NULL. Borrowed pointer:
/// valid until the next failing call; do not free.
#[no_mangle]
pub extern "C" fn bw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by a `bw_*` call that hands
/// ownership to the caller, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a game document.
///
/// # Safety
/// `text` must be NUL-terminated; `out_game` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bw_game_parse(
    text: *const c_char,
    out_game: *mut *mut BwGame,
) -> BwStatus {
    guard(|| {
        if out_game.is_null() {
            set_error("null output pointer");
            return BwStatus::NullPointer;
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_game(text) {
            Ok(spec) => {
                *out_game = Box::into_raw(Box::new(BwGame { spec }));
                BwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                BwStatus::ParseError
            }
        }
    })
}

/// Build one of the built-in example games (`sps`, `stopgame`,
/// `inf-ones`, `fin-ones`).
///
/// # Safety
/// `name` must be NUL-terminated; `out_game` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bw_game_example(
    name: *const c_char,
    out_game: *mut *mut BwGame,
) -> BwStatus {
    guard(|| {
        if out_game.is_null() {
            set_error("null output pointer");
            return BwStatus::NullPointer;
        }
        let name = match read_str(name) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match catalog::example_document(name).and_then(|doc| parse_game(&doc).ok()) {
            Some(spec) => {
                *out_game = Box::into_raw(Box::new(BwGame { spec }));
                BwStatus::Ok
            }
            None => {
                set_error(format!(
                    "unknown example '{name}'; available: {}",
                    catalog::EXAMPLE_NAMES.join(", ")
                ));
                BwStatus::UnknownName
            }
        }
    })
}

/// Release a game handle.
///
/// # Safety
/// `game` must come from `bw_game_parse`/`bw_game_example` and must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bw_game_free(game: *mut BwGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Kind of the game: 0 matrix, 1 finite, 2 generalized-open, 3 open-set,
/// 4 gdelta, 5 union; -1 for a null handle.
///
/// # Safety
/// `game` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn bw_game_kind(game: *const BwGame) -> c_int {
    let Some(game) = game.as_ref() else {
        return -1;
    };
    match game.spec.kind {
        GameKind::Matrix => 0,
        GameKind::Finite(_) => 1,
        GameKind::GeneralizedOpen => 2,
        GameKind::OpenSet => 3,
        GameKind::GDelta => 4,
        GameKind::UnionOfOpen => 5,
    }
}

/// Number of moves the given player chooses from.
///
/// # Safety
/// `game` must be a live handle; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bw_game_moves_len(
    game: *const BwGame,
    player: c_int,
    out_len: *mut usize,
) -> BwStatus {
    guard(|| {
        let (Some(game), false) = (game.as_ref(), out_len.is_null()) else {
            set_error("null pointer");
            return BwStatus::NullPointer;
        };
        let player = match player_of(player) {
            Ok(p) => p,
            Err(status) => return status,
        };
        *out_len = game.spec.alphabets.move_count(player);
        BwStatus::Ok
    })
}

/// Canonical document of the game; free with `bw_string_free`.
///
/// # Safety
/// `game` must be a live handle; `out_text` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bw_game_serialize(
    game: *const BwGame,
    out_text: *mut *mut c_char,
) -> BwStatus {
    guard(|| {
        let (Some(game), false) = (game.as_ref(), out_text.is_null()) else {
            set_error("null pointer");
            return BwStatus::NullPointer;
        };
        match CString::new(serialize_game(&game.spec)) {
            Ok(s) => {
                *out_text = s.into_raw();
                BwStatus::Ok
            }
            Err(_) => {
                set_error("document contains an interior NUL");
                BwStatus::DomainError
            }
        }
    })
}

/// Parse a strategy document against the game's alphabets.
///
/// # Safety
/// Pointers must be valid as in `bw_game_parse`.
#[no_mangle]
pub unsafe extern "C" fn bw_strategy_parse(
    game: *const BwGame,
    text: *const c_char,
    out_strategy: *mut *mut BwStrategy,
) -> BwStatus {
    guard(|| {
        let (Some(game), false) = (game.as_ref(), out_strategy.is_null()) else {
            set_error("null pointer");
            return BwStatus::NullPointer;
        };
        let text = match read_str(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_strategy(text, &game.spec.alphabets) {
            Ok(strategy) => {
                *out_strategy = Box::into_raw(Box::new(BwStrategy { strategy }));
                BwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                BwStatus::ParseError
            }
        }
    })
}

/// The uniform strategy for a player.
///
/// # Safety
/// `out_strategy` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bw_strategy_uniform(
    player: c_int,
    out_strategy: *mut *mut BwStrategy,
) -> BwStatus {
    guard(|| {
        if out_strategy.is_null() {
            set_error("null output pointer");
            return BwStatus::NullPointer;
        }
        let player = match player_of(player) {
            Ok(p) => p,
            Err(status) => return status,
        };
        *out_strategy = Box::into_raw(Box::new(BwStrategy {
            strategy: BehavioralStrategy::uniform(player),
        }));
        BwStatus::Ok
    })
}

/// Release a strategy handle.
///
/// # Safety
/// `strategy` must come from a `bw_strategy_*` call and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn bw_strategy_free(strategy: *mut BwStrategy) {
    if !strategy.is_null() {
        drop(Box::from_raw(strategy));
    }
}

/// Solve a matrix or finite game; writes the value.
///
/// # Safety
/// `game` must be a live handle; `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bw_solve(game: *const BwGame, out_value: *mut f64) -> BwStatus {
    guard(|| {
        let (Some(game), false) = (game.as_ref(), out_value.is_null()) else {
            set_error("null pointer");
            return BwStatus::NullPointer;
        };
        match backward_induction(&game.spec) {
            Ok(report) => {
                *out_value = report.value;
                BwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                BwStatus::DomainError
            }
        }
    })
}

/// Solve and return one player's optimal strategy as a canonical
/// document; free with `bw_string_free`.
///
/// # Safety
/// `game` must be a live handle; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bw_solve_strategy(
    game: *const BwGame,
    player: c_int,
    out_value: *mut f64,
    out_doc: *mut *mut c_char,
) -> BwStatus {
    guard(|| {
        let (Some(game), false, false) = (game.as_ref(), out_value.is_null(), out_doc.is_null())
        else {
            set_error("null pointer");
            return BwStatus::NullPointer;
        };
        let player = match player_of(player) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match backward_induction(&game.spec) {
            Ok(report) => {
                let strategy = match player {
                    Player::I => &report.strategy_i,
                    Player::II => &report.strategy_ii,
                };
                let doc = serialize_strategy(strategy, &game.spec.alphabets);
                match CString::new(doc) {
                    Ok(s) => {
                        *out_value = report.value;
                        *out_doc = s.into_raw();
                        BwStatus::Ok
                    }
                    Err(_) => {
                        set_error("document contains an interior NUL");
                        BwStatus::DomainError
                    }
                }
            }
            Err(e) => {
                set_error(e.to_string());
                BwStatus::DomainError
            }
        }
    })
}

/// Per-depth value bounds. `out_lower` and `out_upper` must hold
/// `depth + 1` entries each; `k_max` only matters for recurrence
/// objectives.
///
/// # Safety
/// `game` must be a live handle; the output buffers must hold `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bw_bracket(
    game: *const BwGame,
    depth: usize,
    k_max: usize,
    tol: f64,
    out_lower: *mut f64,
    out_upper: *mut f64,
    len: usize,
) -> BwStatus {
    guard(|| {
        let (Some(game), false, false) = (game.as_ref(), out_lower.is_null(), out_upper.is_null())
        else {
            set_error("null pointer");
            return BwStatus::NullPointer;
        };
        if len < depth + 1 {
            set_error(format!("buffers hold {len} entries, need {}", depth + 1));
            return BwStatus::BufferTooSmall;
        }
        let trace = match game.spec.kind {
            GameKind::GDelta => gdelta_value_bracket(&game.spec, k_max.max(1), depth, tol, false),
            _ => open_value_bracket(&game.spec, depth, tol),
        };
        match trace {
            Ok(trace) => {
                for (i, bracket) in trace.brackets.iter().enumerate().take(depth + 1) {
                    *out_lower.add(i) = bracket.lower;
                    *out_upper.add(i) = bracket.upper;
                }
                BwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                BwStatus::DomainError
            }
        }
    })
}

fn evaluation_target(spec: &GameSpec, depth: usize) -> Result<GameSpec, String> {
    match spec.kind {
        GameKind::Matrix | GameKind::Finite(_) => Ok(spec.clone()),
        GameKind::GeneralizedOpen | GameKind::OpenSet | GameKind::UnionOfOpen => {
            finite_truncation(spec, depth).map_err(|e| e.to_string())
        }
        GameKind::GDelta => Err("recurrence objectives have no finite payoff truncation".into()),
    }
}

/// Expected payoff of a strategy pair; sup-payoff games use the depth
/// truncation.
///
/// # Safety
/// Handles must be live; `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bw_expected_payoff(
    game: *const BwGame,
    sigma: *const BwStrategy,
    tau: *const BwStrategy,
    depth: usize,
    out_value: *mut f64,
) -> BwStatus {
    guard(|| {
        let (Some(game), Some(sigma), Some(tau), false) = (
            game.as_ref(),
            sigma.as_ref(),
            tau.as_ref(),
            out_value.is_null(),
        ) else {
            set_error("null pointer");
            return BwStatus::NullPointer;
        };
        let target = match evaluation_target(&game.spec, depth) {
            Ok(t) => t,
            Err(e) => {
                set_error(e);
                return BwStatus::DomainError;
            }
        };
        match expected_payoff(&target, &sigma.strategy, &tau.strategy) {
            Ok(v) => {
                *out_value = v;
                BwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                BwStatus::DomainError
            }
        }
    })
}

/// Value of the best pure counterstrategy against `fixed`, and the
/// response as a canonical document (optional: pass NULL to skip).
///
/// # Safety
/// Handles must be live; `out_value` must be valid; `out_doc` may be
/// NULL.
#[no_mangle]
pub unsafe extern "C" fn bw_best_response(
    game: *const BwGame,
    fixed: *const BwStrategy,
    depth: usize,
    out_value: *mut f64,
    out_doc: *mut *mut c_char,
) -> BwStatus {
    guard(|| {
        let (Some(game), Some(fixed), false) = (game.as_ref(), fixed.as_ref(), out_value.is_null())
        else {
            set_error("null pointer");
            return BwStatus::NullPointer;
        };
        let target = match evaluation_target(&game.spec, depth) {
            Ok(t) => t,
            Err(e) => {
                set_error(e);
                return BwStatus::DomainError;
            }
        };
        match best_response(&target, &fixed.strategy) {
            Ok(br) => {
                if !out_doc.is_null() {
                    let doc = serialize_strategy(&br.strategy, &game.spec.alphabets);
                    match CString::new(doc) {
                        Ok(s) => *out_doc = s.into_raw(),
                        Err(_) => {
                            set_error("document contains an interior NUL");
                            return BwStatus::DomainError;
                        }
                    }
                }
                *out_value = br.value;
                BwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                BwStatus::DomainError
            }
        }
    })
}

/// Seeded Monte Carlo estimate; writes the sample mean and its standard
/// error.
///
/// # Safety
/// Handles must be live; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bw_simulate(
    game: *const BwGame,
    sigma: *const BwStrategy,
    tau: *const BwStrategy,
    rollouts: usize,
    depth: usize,
    seed: u64,
    out_mean: *mut f64,
    out_std_error: *mut f64,
) -> BwStatus {
    guard(|| {
        let (Some(game), Some(sigma), Some(tau), false, false) = (
            game.as_ref(),
            sigma.as_ref(),
            tau.as_ref(),
            out_mean.is_null(),
            out_std_error.is_null(),
        ) else {
            set_error("null pointer");
            return BwStatus::NullPointer;
        };
        match simulate(
            &game.spec,
            &sigma.strategy,
            &tau.strategy,
            rollouts,
            depth,
            seed,
        ) {
            Ok(report) => {
                *out_mean = report.mean;
                *out_std_error = report.std_error;
                BwStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                BwStatus::DomainError
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstring(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn example(name: &str) -> *mut BwGame {
        let mut game: *mut BwGame = std::ptr::null_mut();
        let status = unsafe { bw_game_example(cstring(name).as_ptr(), &mut game) };
        assert_eq!(status, BwStatus::Ok);
        game
    }

    #[test]
    fn version_is_a_c_string() {
        let v = unsafe { CStr::from_ptr(bw_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }

    #[test]
    fn parse_solve_and_free() {
        let doc = catalog::example_document("sps").unwrap();
        let mut game: *mut BwGame = std::ptr::null_mut();
        let status = unsafe { bw_game_parse(cstring(&doc).as_ptr(), &mut game) };
        assert_eq!(status, BwStatus::Ok);
        assert_eq!(unsafe { bw_game_kind(game) }, 0);

        let mut value = f64::NAN;
        assert_eq!(unsafe { bw_solve(game, &mut value) }, BwStatus::Ok);
        assert!(value.abs() < 1e-9);

        let mut doc_out: *mut c_char = std::ptr::null_mut();
        assert_eq!(
            unsafe { bw_solve_strategy(game, 0, &mut value, &mut doc_out) },
            BwStatus::Ok
        );
        let text = unsafe { CStr::from_ptr(doc_out) }
            .to_str()
            .unwrap()
            .to_string();
        assert!(text.contains("1/3"));
        unsafe { bw_string_free(doc_out) };
        unsafe { bw_game_free(game) };
    }

    #[test]
    fn parse_errors_set_a_message() {
        let mut game: *mut BwGame = std::ptr::null_mut();
        let status = unsafe { bw_game_parse(cstring("game \"x\"\n").as_ptr(), &mut game) };
        assert_eq!(status, BwStatus::ParseError);
        let message = unsafe { CStr::from_ptr(bw_last_error_message()) };
        assert!(message.to_str().unwrap().contains("line"));
    }

    #[test]
    fn bracket_fills_buffers() {
        let game = example("stopgame");
        let mut lower = vec![f64::NAN; 11];
        let mut upper = vec![f64::NAN; 11];
        let status = unsafe {
            bw_bracket(
                game,
                10,
                8,
                1e-6,
                lower.as_mut_ptr(),
                upper.as_mut_ptr(),
                lower.len(),
            )
        };
        assert_eq!(status, BwStatus::Ok);
        assert!((lower[10] - 0.9).abs() < 1e-9);
        assert_eq!(upper[10], 1.0);

        let status =
            unsafe { bw_bracket(game, 10, 8, 1e-6, lower.as_mut_ptr(), upper.as_mut_ptr(), 5) };
        assert_eq!(status, BwStatus::BufferTooSmall);
        unsafe { bw_game_free(game) };
    }

    #[test]
    fn evaluate_and_simulate_agree_for_uniform_play() {
        let game = example("sps");
        let mut sigma: *mut BwStrategy = std::ptr::null_mut();
        let mut tau: *mut BwStrategy = std::ptr::null_mut();
        assert_eq!(unsafe { bw_strategy_uniform(0, &mut sigma) }, BwStatus::Ok);
        assert_eq!(unsafe { bw_strategy_uniform(1, &mut tau) }, BwStatus::Ok);

        let mut exact = f64::NAN;
        assert_eq!(
            unsafe { bw_expected_payoff(game, sigma, tau, 1, &mut exact) },
            BwStatus::Ok
        );
        assert!(exact.abs() < 1e-12);

        let (mut mean, mut se) = (f64::NAN, f64::NAN);
        assert_eq!(
            unsafe { bw_simulate(game, sigma, tau, 20000, 1, 9, &mut mean, &mut se) },
            BwStatus::Ok
        );
        assert!((mean - exact).abs() <= 4.0 * se + 1e-9);

        unsafe { bw_strategy_free(sigma) };
        unsafe { bw_strategy_free(tau) };
        unsafe { bw_game_free(game) };
    }

    #[test]
    fn best_response_against_a_pure_strategy() {
        let game = example("sps");
        let doc = cstring("strategy I \"stone\"\nat e play {stone: 1}\n");
        let mut fixed: *mut BwStrategy = std::ptr::null_mut();
        assert_eq!(
            unsafe { bw_strategy_parse(game, doc.as_ptr(), &mut fixed) },
            BwStatus::Ok
        );
        let mut value = f64::NAN;
        let mut response: *mut c_char = std::ptr::null_mut();
        assert_eq!(
            unsafe { bw_best_response(game, fixed, 1, &mut value, &mut response) },
            BwStatus::Ok
        );
        assert!((value + 1.0).abs() < 1e-12);
        let text = unsafe { CStr::from_ptr(response) }.to_str().unwrap();
        assert!(text.contains("paper: 1"));
        unsafe { bw_string_free(response) };
        unsafe { bw_strategy_free(fixed) };
        unsafe { bw_game_free(game) };
    }

    #[test]
    fn null_handles_are_rejected() {
        let mut value = f64::NAN;
        assert_eq!(
            unsafe { bw_solve(std::ptr::null(), &mut value) },
            BwStatus::NullPointer
        );
        assert_eq!(unsafe { bw_game_kind(std::ptr::null()) }, -1);
    }

    #[test]
    fn round_trip_through_serialize() {
        let game = example("inf-ones");
        let mut text: *mut c_char = std::ptr::null_mut();
        assert_eq!(unsafe { bw_game_serialize(game, &mut text) }, BwStatus::Ok);
        let doc = unsafe { CStr::from_ptr(text) }
            .to_str()
            .unwrap()
            .to_string();
        unsafe { bw_string_free(text) };

        let mut back: *mut BwGame = std::ptr::null_mut();
        assert_eq!(
            unsafe { bw_game_parse(cstring(&doc).as_ptr(), &mut back) },
            BwStatus::Ok
        );
        assert_eq!(unsafe { bw_game_kind(back) }, 4);
        unsafe { bw_game_free(back) };
        unsafe { bw_game_free(game) };
    }
}
