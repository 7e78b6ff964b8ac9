//! Colosseum: n-player general-sum game environments with a uniform
//! step/observe contract, baseline agents and opponent-pool schedulers,
//! tournament evaluation with ranked pairs aggregation, and a TCP match
//! server that seats remote agents into matches.
//!
//! Every environment is a pure transition function over an explicit state
//! value. [`GameState`] wraps any of them behind one interface:
//!
//! ```
//! use colosseum::{Action, EnvConfig, GameState, PlayerId};
//! use std::collections::BTreeMap;
//!
//! let config = EnvConfig::default_for("tictactoe", 3, 7).unwrap();
//! let state = GameState::new(&config).unwrap();
//! assert_eq!(state.current_players().unwrap(), vec![PlayerId(0)]);
//! let mut joint = BTreeMap::new();
//! joint.insert(PlayerId(0), Action::Cell { row: 2, col: 2 });
//! let result = state.step(&joint).unwrap();
//! assert!(!result.terminal);
//! ```

pub mod agents;
pub mod envs;
mod error;
mod game;
pub mod ranking;
pub mod rng;
pub mod server;
pub mod tournament;
pub mod transcript;

pub use error::GameError;
pub use game::{
    Action, EnvConfig, EnvSpec, Environment, GameState, JointAction, Observation, PlayerId,
    RankRecord, StepResult, Transition,
};
