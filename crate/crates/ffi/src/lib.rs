//! C ABI over the game engine.
//!
//! Games are opaque `ColosseumGame` handles. Every fallible call returns a
//! `ColosseumStatus`; on anything but `COLOSSEUM_STATUS_OK` a message is
//! available from `colosseum_last_error` on the same thread. Strings handed
//! out by the library are NUL-terminated UTF-8 JSON (or text) and must be
//! released with `colosseum_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use colosseum::{EnvConfig, GameError, GameState, JointAction, PlayerId};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColosseumStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    InvalidConfig = 4,
    IllegalAction = 5,
    Terminal = 6,
    NotTerminal = 7,
    UnknownPlayer = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// A game in progress. Only ever used behind a pointer.
pub struct ColosseumGame {
    state: GameState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(ColosseumStatus, String);

impl From<GameError> for Failure {
    fn from(e: GameError) -> Self {
        let status = match &e {
            GameError::InvalidConfig(_) => ColosseumStatus::InvalidConfig,
            GameError::Terminal => ColosseumStatus::Terminal,
            GameError::NotTerminal => ColosseumStatus::NotTerminal,
            GameError::UnknownPlayer(_) => ColosseumStatus::UnknownPlayer,
            GameError::NotToAct(_) | GameError::MissingAction(_) | GameError::IllegalAction { .. } | GameError::BadAction(_) => {
                ColosseumStatus::IllegalAction
            }
            GameError::Format(_) => ColosseumStatus::InvalidJson,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(ColosseumStatus::InvalidJson, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ColosseumStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ColosseumStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ColosseumStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ColosseumStatus::NullArgument, format!("`{what}` is NULL"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(ColosseumStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

unsafe fn game_ref<'a>(game: *const ColosseumGame) -> Result<&'a ColosseumGame, Failure> {
    game.as_ref().ok_or_else(|| null("game"))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|e| Failure(ColosseumStatus::Panic, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn write_game(out: *mut *mut ColosseumGame, state: GameState) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(ColosseumGame { state }));
    Ok(())
}

/// Message describing the last failure on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn colosseum_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn colosseum_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn colosseum_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Starts a game from an environment config such as
/// `{"env":"kuhn","players":3,"seed":7}`. Unspecified environment
/// parameters take their defaults.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out` a valid
/// pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_new(config_json: *const c_char, out: *mut *mut ColosseumGame) -> ColosseumStatus {
    guard(|| {
        let text = read_str(config_json, "config_json")?;
        let value: serde_json::Value = serde_json::from_str(text)?;
        let config = config_from_value(value)?;
        write_game(out, GameState::new(&config)?)
    })
}

fn config_from_value(value: serde_json::Value) -> Result<EnvConfig, Failure> {
    let field = |k: &str| value.get(k).cloned();
    let env = field("env").and_then(|v| v.as_str().map(str::to_owned));
    let players = field("players").and_then(|v| v.as_u64());
    let seed = field("seed").and_then(|v| v.as_u64()).unwrap_or(0);
    let (Some(env), Some(players)) = (env, players) else {
        return Err(Failure(ColosseumStatus::InvalidConfig, "config needs `env` and `players`".into()));
    };
    // Start from the defaults and overlay whatever the caller gave.
    let mut merged = serde_json::to_value(EnvConfig::default_for(&env, players as usize, seed)?)?;
    if let (Some(m), Some(given)) = (merged.as_object_mut(), value.as_object()) {
        for (k, v) in given {
            m.insert(k.clone(), v.clone());
        }
    }
    Ok(serde_json::from_value(merged)?)
}

/// Restores a game saved with `colosseum_game_to_json`.
///
/// # Safety
/// As for `colosseum_game_new`.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_from_json(state_json: *const c_char, out: *mut *mut ColosseumGame) -> ColosseumStatus {
    guard(|| {
        let text = read_str(state_json, "state_json")?;
        write_game(out, GameState::from_json(text)?)
    })
}

/// # Safety
/// `game` must be NULL or a handle from this library that is not used again.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_free(game: *mut ColosseumGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Number of seats, or 0 for a NULL handle.
///
/// # Safety
/// `game` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_num_players(game: *const ColosseumGame) -> usize {
    game.as_ref().map_or(0, |g| g.state.num_players())
}

/// # Safety
/// `game` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_is_terminal(game: *const ColosseumGame) -> bool {
    game.as_ref().is_some_and(|g| g.state.is_terminal())
}

/// Players expected to act now, as a JSON array of seat indices.
///
/// # Safety
/// `game` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_current_players(game: *const ColosseumGame, out: *mut *mut c_char) -> ColosseumStatus {
    guard(|| {
        let players = game_ref(game)?.state.current_players()?;
        write_string(out, serde_json::to_string(&players)?)
    })
}

/// Legal actions of `player` as a JSON array of action strings.
///
/// # Safety
/// `game` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_legal_actions(game: *const ColosseumGame, player: usize, out: *mut *mut c_char) -> ColosseumStatus {
    guard(|| {
        let legal = game_ref(game)?.state.legal_actions(PlayerId(player))?;
        write_string(out, serde_json::to_string(&legal)?)
    })
}

/// What `player` is allowed to see, as JSON.
///
/// # Safety
/// `game` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_observe(game: *const ColosseumGame, player: usize, out: *mut *mut c_char) -> ColosseumStatus {
    guard(|| {
        let obs = game_ref(game)?.state.observe(PlayerId(player))?;
        write_string(out, serde_json::to_string(&obs)?)
    })
}

/// Applies a joint action such as `{"0":"forward","1":"left"}`.
///
/// On success the handle holds the next state and, if `rewards` is not
/// NULL, the step rewards are written to `rewards[0..num_players]`. On
/// failure the handle is unchanged.
///
/// # Safety
/// `game` must be a live handle, `actions_json` a valid string, and
/// `rewards` NULL or writable for `rewards_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_step(
    game: *mut ColosseumGame,
    actions_json: *const c_char,
    rewards: *mut f64,
    rewards_len: usize,
) -> ColosseumStatus {
    guard(|| {
        let g = game.as_mut().ok_or_else(|| null("game"))?;
        let joint: JointAction = serde_json::from_str(read_str(actions_json, "actions_json")?)?;
        let n = g.state.num_players();
        if !rewards.is_null() && rewards_len < n {
            return Err(Failure(
                ColosseumStatus::BufferTooSmall,
                format!("rewards buffer holds {rewards_len}, need {n}"),
            ));
        }
        let result = g.state.step(&joint)?;
        if !rewards.is_null() {
            std::slice::from_raw_parts_mut(rewards, n).copy_from_slice(&result.rewards);
        }
        g.state = result.next_state;
        Ok(())
    })
}

/// Final ranks and total rewards as `{"ranks":[..],"total_reward":[..]}`.
///
/// # Safety
/// `game` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_rankings(game: *const ColosseumGame, out: *mut *mut c_char) -> ColosseumStatus {
    guard(|| {
        let record = game_ref(game)?.state.rankings()?;
        write_string(out, serde_json::to_string(&record)?)
    })
}

/// ASCII picture of the state.
///
/// # Safety
/// `game` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_render(game: *const ColosseumGame, out: *mut *mut c_char) -> ColosseumStatus {
    guard(|| write_string(out, game_ref(game)?.state.render()))
}

/// Full state, hidden information included.
///
/// # Safety
/// `game` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn colosseum_game_to_json(game: *const ColosseumGame, out: *mut *mut c_char) -> ColosseumStatus {
    guard(|| write_string(out, game_ref(game)?.state.to_json()))
}
