use thiserror::Error;

use crate::game::PlayerId;

/// Errors raised by environments and the [`GameState`](crate::GameState) contract.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("the game is already over")]
    Terminal,
    #[error("the game is not over yet")]
    NotTerminal,
    #[error("player {0} does not exist")]
    UnknownPlayer(PlayerId),
    #[error("player {0} is not allowed to act now")]
    NotToAct(PlayerId),
    #[error("no action supplied for player {0}")]
    MissingAction(PlayerId),
    #[error("illegal action `{action}` from player {player}: {reason}")]
    IllegalAction {
        player: PlayerId,
        action: String,
        reason: String,
    },
    #[error("cannot parse action `{0}`")]
    BadAction(String),
    #[error("{0}")]
    Format(String),
}

impl GameError {
    pub(crate) fn illegal(player: PlayerId, action: impl ToString, reason: impl Into<String>) -> Self {
        GameError::IllegalAction {
            player,
            action: action.to_string(),
            reason: reason.into(),
        }
    }

    /// The player responsible for the error, when there is one.
    pub fn offending_player(&self) -> Option<PlayerId> {
        match self {
            GameError::UnknownPlayer(p)
            | GameError::NotToAct(p)
            | GameError::MissingAction(p)
            | GameError::IllegalAction { player: p, .. } => Some(*p),
            _ => None,
        }
    }
}
