//! The uniform n-player environment contract.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::envs::blokus::{Blokus, BlokusObservation, Placement};
use crate::envs::kuhn::{Kuhn, KuhnAction, KuhnObservation};
use crate::envs::matrix::{MatrixGame, MatrixObservation, RpsConfig};
use crate::envs::tictactoe::{TicTacToe, TttObservation};
use crate::envs::tron::{Tron, TronMode, TronObservation, TronView, Turn};
use crate::error::GameError;
use crate::ranking::apply_tie_rounding;

/// Seat index of a player, stable for the whole match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PlayerId(pub usize);

// Accepts `3` and `"3"`: map keys arrive as strings, and buffered content
// (internally tagged enums) does not coerce them back.
impl<'de> Deserialize<'de> for PlayerId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = PlayerId;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a seat index")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<PlayerId, E> {
                usize::try_from(v).map(PlayerId).map_err(E::custom)
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<PlayerId, E> {
                usize::try_from(v).map(PlayerId).map_err(E::custom)
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<PlayerId, E> {
                v.parse().map(PlayerId).map_err(|_| E::custom(format!("`{v}` is not a seat index")))
            }
        }
        d.deserialize_any(V)
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One player's move in any environment.
///
/// Actions travel as short text tokens: `"r,c"` for a tic-tac-toe cell,
/// `forward`/`left`/`right` in Tron, `piece:orientation:row:col` or `pass`
/// in Blokus, a bare index in normal-form games and
/// `check`/`bet`/`call`/`fold` in Kuhn poker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Cell { row: usize, col: usize },
    Turn(Turn),
    Place(Placement),
    Pass,
    Index(usize),
    Kuhn(KuhnAction),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Cell { row, col } => write!(f, "{row},{col}"),
            Action::Turn(t) => write!(f, "{t}"),
            Action::Place(p) => write!(f, "{p}"),
            Action::Pass => f.write_str("pass"),
            Action::Index(i) => write!(f, "{i}"),
            Action::Kuhn(a) => write!(f, "{a}"),
        }
    }
}

impl FromStr for Action {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || GameError::BadAction(s.to_string());
        if let Ok(t) = s.parse::<Turn>() {
            return Ok(Action::Turn(t));
        }
        if let Ok(k) = s.parse::<KuhnAction>() {
            return Ok(Action::Kuhn(k));
        }
        if s == "pass" {
            return Ok(Action::Pass);
        }
        if s.contains(':') {
            return s.parse::<Placement>().map(Action::Place);
        }
        if let Some((r, c)) = s.split_once(',') {
            let row = r.trim().parse().map_err(|_| bad())?;
            let col = c.trim().parse().map_err(|_| bad())?;
            return Ok(Action::Cell { row, col });
        }
        s.parse::<usize>().map(Action::Index).map_err(|_| bad())
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Actions for one step, keyed by the acting players.
pub type JointAction = BTreeMap<PlayerId, Action>;

/// Environment selection and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "lowercase")]
pub enum EnvSpec {
    Tictactoe {
        rows: usize,
        cols: usize,
    },
    Tron {
        rows: usize,
        cols: usize,
        #[serde(default)]
        mode: TronMode,
        #[serde(default)]
        view: TronView,
    },
    Blokus,
    Matrix {
        shape: Vec<usize>,
        #[serde(default)]
        zero_sum: bool,
    },
    Rps {
        win: f64,
        lose: f64,
        tie: f64,
    },
    Kuhn,
}

impl EnvSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Tictactoe { .. } => "tictactoe",
            EnvSpec::Tron { .. } => "tron",
            EnvSpec::Blokus => "blokus",
            EnvSpec::Matrix { .. } => "matrix",
            EnvSpec::Rps { .. } => "rps",
            EnvSpec::Kuhn => "kuhn",
        }
    }
}

/// Everything needed to create a match deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    #[serde(flatten)]
    pub spec: EnvSpec,
    pub players: usize,
    #[serde(default)]
    pub seed: u64,
}

pub const ENV_NAMES: [&str; 6] = ["tictactoe", "tron", "blokus", "matrix", "rps", "kuhn"];

impl EnvConfig {
    pub fn new(spec: EnvSpec, players: usize, seed: u64) -> Self {
        EnvConfig {
            spec,
            players,
            seed,
        }
    }

    /// Default parameters for an environment name: 5×5 tic-tac-toe for three
    /// players and 6×6 for four, a 15×15 simultaneous Tron arena, 3-action
    /// random matrices, RPS paying +1/−1/0.
    pub fn default_for(env: &str, players: usize, seed: u64) -> Result<Self, GameError> {
        let spec = match env {
            "tictactoe" => {
                let side = if players <= 2 { 3 } else { players + 2 };
                EnvSpec::Tictactoe {
                    rows: side,
                    cols: side,
                }
            }
            "tron" => EnvSpec::Tron {
                rows: 15,
                cols: 15,
                mode: TronMode::Simultaneous,
                view: TronView::Full,
            },
            "blokus" => EnvSpec::Blokus,
            "matrix" => EnvSpec::Matrix {
                shape: vec![3; players],
                zero_sum: false,
            },
            "rps" => EnvSpec::Rps {
                win: 1.0,
                lose: -1.0,
                tie: 0.0,
            },
            "kuhn" => EnvSpec::Kuhn,
            other => {
                return Err(GameError::InvalidConfig(format!(
                    "unknown environment `{other}` (expected one of {})",
                    ENV_NAMES.join(", ")
                )))
            }
        };
        Ok(EnvConfig::new(spec, players, seed))
    }

    /// The configuration with the seed removed, safe to show to players:
    /// the seed determines hidden information such as dealt cards.
    pub fn public_view(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("seed");
        }
        value
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EnvConfig {
            seed,
            ..self.clone()
        }
    }
}

/// What one player is shown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "lowercase")]
pub enum Observation {
    Tictactoe(TttObservation),
    Tron(TronObservation),
    Blokus(BlokusObservation),
    Matrix(MatrixObservation),
    Kuhn(KuhnObservation),
}

/// The outcome of one environment transition.
#[derive(Debug, Clone)]
pub struct Transition<S> {
    pub state: S,
    /// One entry per player; zero for players that did not act.
    pub rewards: Vec<f64>,
}

/// Rules of one environment as a pure transition system.
///
/// Implementors never mutate `self`; every transition produces a new value.
pub trait Environment: Clone + fmt::Debug + Send + Sync + Serialize {
    fn num_players(&self) -> usize;
    fn is_terminal(&self) -> bool;
    /// Players that must act on the next step, in ascending order. Empty once
    /// the game is over.
    fn acting_players(&self) -> Vec<PlayerId>;
    fn legal_actions(&self, player: PlayerId) -> Result<Vec<Action>, GameError>;
    /// Applies a joint action. The caller has already checked that the keys
    /// are exactly [`acting_players`](Self::acting_players); legality of each
    /// action is checked here.
    fn apply(&self, actions: &JointAction) -> Result<Transition<Self>, GameError>;
    fn observe(&self, player: PlayerId) -> Observation;
    fn eliminated(&self) -> BTreeSet<PlayerId>;
    /// Players grouped into tie blocks, best block first. Only defined for
    /// terminal states.
    fn finishing_order(&self) -> Result<Vec<Vec<PlayerId>>, GameError>;
    fn render(&self) -> String;
    /// Removes a player from play immediately, where the rules allow it.
    fn forfeit(&self, _player: PlayerId) -> Option<Transition<Self>> {
        None
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "env", content = "state", rename_all = "lowercase")]
enum EnvState {
    Tictactoe(TicTacToe),
    Tron(Tron),
    Blokus(Blokus),
    Matrix(MatrixGame),
    Kuhn(Kuhn),
}

macro_rules! dispatch {
    ($value:expr, $env:ident => $body:expr) => {
        match $value {
            EnvState::Tictactoe($env) => $body,
            EnvState::Tron($env) => $body,
            EnvState::Blokus($env) => $body,
            EnvState::Matrix($env) => $body,
            EnvState::Kuhn($env) => $body,
        }
    };
}

const STATE_FORMAT_VERSION: u32 = 1;

/// Authoritative state of one match of any environment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameState {
    config: EnvConfig,
    env: EnvState,
    totals: Vec<f64>,
    steps: u64,
}

/// Result of [`GameState::step`].
#[derive(Debug, Clone)]
pub struct StepResult {
    pub next_state: GameState,
    pub rewards: Vec<f64>,
    pub terminal: bool,
    pub eliminated: BTreeSet<PlayerId>,
}

/// Final ranks (1 = best, ties share the worst rank of their block) and
/// cumulative rewards, indexed by seat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub ranks: Vec<usize>,
    pub total_reward: Vec<f64>,
}

impl GameState {
    pub fn new(config: &EnvConfig) -> Result<Self, GameError> {
        let env = match &config.spec {
            EnvSpec::Tictactoe { rows, cols } => {
                EnvState::Tictactoe(TicTacToe::new(*rows, *cols, config.players)?)
            }
            EnvSpec::Tron {
                rows,
                cols,
                mode,
                view,
            } => EnvState::Tron(Tron::new(*rows, *cols, config.players, *mode, *view)?),
            EnvSpec::Blokus => EnvState::Blokus(Blokus::new(config.players)?),
            EnvSpec::Matrix { shape, zero_sum } => {
                if shape.len() != config.players {
                    return Err(GameError::InvalidConfig(format!(
                        "matrix shape has {} action axes but {} players",
                        shape.len(),
                        config.players
                    )));
                }
                EnvState::Matrix(MatrixGame::random(shape, config.seed, *zero_sum)?)
            }
            EnvSpec::Rps { win, lose, tie } => {
                let rps = RpsConfig::new(config.players, *win, *lose, *tie)?;
                EnvState::Matrix(MatrixGame::rps(&rps))
            }
            EnvSpec::Kuhn => EnvState::Kuhn(Kuhn::deal(config.players, config.seed)?),
        };
        Ok(Self::from_parts(config.clone(), env))
    }

    fn from_parts(config: EnvConfig, env: EnvState) -> Self {
        let n = dispatch!(&env, e => e.num_players());
        GameState {
            config,
            env,
            totals: vec![0.0; n],
            steps: 0,
        }
    }

    /// Wraps an already-built Kuhn state, e.g. a hand-picked deal.
    pub fn from_kuhn(config: EnvConfig, kuhn: Kuhn) -> Self {
        Self::from_parts(config, EnvState::Kuhn(kuhn))
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn num_players(&self) -> usize {
        dispatch!(&self.env, e => e.num_players())
    }

    pub fn is_terminal(&self) -> bool {
        dispatch!(&self.env, e => e.is_terminal())
    }

    /// Number of steps applied so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn total_rewards(&self) -> &[f64] {
        &self.totals
    }

    fn check_player(&self, player: PlayerId) -> Result<(), GameError> {
        if player.0 >= self.num_players() {
            Err(GameError::UnknownPlayer(player))
        } else {
            Ok(())
        }
    }

    /// The players that act on the next step: one id in sequential games,
    /// every remaining player in simultaneous ones.
    pub fn current_players(&self) -> Result<Vec<PlayerId>, GameError> {
        if self.is_terminal() {
            return Err(GameError::Terminal);
        }
        Ok(dispatch!(&self.env, e => e.acting_players()))
    }

    pub fn legal_actions(&self, player: PlayerId) -> Result<Vec<Action>, GameError> {
        self.check_player(player)?;
        if self.is_terminal() {
            return Err(GameError::Terminal);
        }
        if !self.current_players()?.contains(&player) {
            return Err(GameError::NotToAct(player));
        }
        dispatch!(&self.env, e => e.legal_actions(player))
    }

    pub fn step(&self, actions: &JointAction) -> Result<StepResult, GameError> {
        let acting = self.current_players()?;
        for p in actions.keys() {
            self.check_player(*p)?;
            if !acting.contains(p) {
                return Err(GameError::NotToAct(*p));
            }
        }
        if let Some(p) = acting.iter().find(|p| !actions.contains_key(p)) {
            return Err(GameError::MissingAction(*p));
        }
        let t = dispatch!(&self.env, e => e.apply(actions).map(into_env))?;
        Ok(self.advance(t))
    }

    /// Eliminates `player` at once where the environment supports it (Tron);
    /// returns `None` otherwise.
    pub fn forfeit(&self, player: PlayerId) -> Option<StepResult> {
        if self.is_terminal() || self.check_player(player).is_err() {
            return None;
        }
        let t: Option<Transition<EnvState>> =
            dispatch!(&self.env, e => e.forfeit(player).map(into_env));
        t.map(|t| self.advance(t))
    }

    fn advance(&self, t: Transition<EnvState>) -> StepResult {
        let mut next = GameState {
            config: self.config.clone(),
            env: t.state,
            totals: self.totals.clone(),
            steps: self.steps + 1,
        };
        for (total, r) in next.totals.iter_mut().zip(&t.rewards) {
            *total += r;
        }
        let terminal = next.is_terminal();
        let eliminated = dispatch!(&next.env, e => e.eliminated());
        StepResult {
            next_state: next,
            rewards: t.rewards,
            terminal,
            eliminated,
        }
    }

    pub fn observe(&self, player: PlayerId) -> Result<Observation, GameError> {
        self.check_player(player)?;
        Ok(dispatch!(&self.env, e => e.observe(player)))
    }

    pub fn eliminated(&self) -> BTreeSet<PlayerId> {
        dispatch!(&self.env, e => e.eliminated())
    }

    pub fn finishing_order(&self) -> Result<Vec<Vec<PlayerId>>, GameError> {
        if !self.is_terminal() {
            return Err(GameError::NotTerminal);
        }
        dispatch!(&self.env, e => e.finishing_order())
    }

    pub fn rankings(&self) -> Result<RankRecord, GameError> {
        let order = self.finishing_order()?;
        let ranks = apply_tie_rounding(&order, self.num_players())?;
        Ok(RankRecord {
            ranks,
            total_reward: self.totals.clone(),
        })
    }

    /// Human-readable board.
    pub fn render(&self) -> String {
        dispatch!(&self.env, e => e.render())
    }

    /// Canonical text encoding of the full state.
    pub fn to_json(&self) -> String {
        let value = serde_json::json!({ "v": STATE_FORMAT_VERSION, "game": self });
        value.to_string()
    }

    pub fn from_json(text: &str) -> Result<Self, GameError> {
        #[derive(Deserialize)]
        struct Tagged {
            v: u32,
            game: GameState,
        }
        let tagged: Tagged =
            serde_json::from_str(text).map_err(|e| GameError::Format(e.to_string()))?;
        if tagged.v != STATE_FORMAT_VERSION {
            return Err(GameError::Format(format!(
                "unsupported state format version {}",
                tagged.v
            )));
        }
        Ok(tagged.game)
    }

    pub fn as_tron(&self) -> Option<&Tron> {
        match &self.env {
            EnvState::Tron(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_tictactoe(&self) -> Option<&TicTacToe> {
        match &self.env {
            EnvState::Tictactoe(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_blokus(&self) -> Option<&Blokus> {
        match &self.env {
            EnvState::Blokus(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_kuhn(&self) -> Option<&Kuhn> {
        match &self.env {
            EnvState::Kuhn(k) => Some(k),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&MatrixGame> {
        match &self.env {
            EnvState::Matrix(m) => Some(m),
            _ => None,
        }
    }
}

trait IntoEnvState {
    fn into_env_state(self) -> EnvState;
}

impl IntoEnvState for TicTacToe {
    fn into_env_state(self) -> EnvState {
        EnvState::Tictactoe(self)
    }
}
impl IntoEnvState for Tron {
    fn into_env_state(self) -> EnvState {
        EnvState::Tron(self)
    }
}
impl IntoEnvState for Blokus {
    fn into_env_state(self) -> EnvState {
        EnvState::Blokus(self)
    }
}
impl IntoEnvState for MatrixGame {
    fn into_env_state(self) -> EnvState {
        EnvState::Matrix(self)
    }
}
impl IntoEnvState for Kuhn {
    fn into_env_state(self) -> EnvState {
        EnvState::Kuhn(self)
    }
}

fn into_env<S: IntoEnvState>(t: Transition<S>) -> Transition<EnvState> {
    Transition {
        state: t.state.into_env_state(),
        rewards: t.rewards,
    }
}
