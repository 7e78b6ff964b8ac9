//! Wire messages: one JSON object per line, tagged by `"type"`.

use serde::{Deserialize, Serialize};

use crate::game::{Action, Observation};

pub const PROTOCOL_VERSION: u32 = 1;

/// Longest line a client may send.
pub const MAX_LINE: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Hello { v: u32 },
    Login { name: String },
    Queue { env: String },
    Action { turn: u64, value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        v: u32,
        server: String,
    },
    MatchAssigned {
        match_id: u64,
        seat: usize,
        env: String,
        /// Public part of the environment configuration; never the seed.
        config: serde_json::Value,
    },
    Observation {
        turn: u64,
        obs: Observation,
        /// Empty unless this seat must act on `turn`.
        legal: Vec<Action>,
        /// Reward from the previous step.
        reward: f64,
        terminal: bool,
    },
    Result {
        match_id: u64,
        ranks: Vec<usize>,
        total_reward: Vec<f64>,
        /// Actions the server chose for this seat.
        substituted: u32,
    },
    Error {
        code: ErrorCode,
        detail: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadMessage,
    VersionMismatch,
    NotLoggedIn,
    UnknownEnv,
    AlreadyQueued,
    NotInMatch,
    StaleTurn,
    IllegalAction,
    UnexpectedMessage,
    /// The server played a random legal action for this seat.
    Substituted,
    MatchAborted,
    ServerShutdown,
}

impl ClientMessage {
    pub fn decode(line: &str) -> Result<Self, String> {
        if line.len() > MAX_LINE {
            return Err(format!("line longer than {MAX_LINE} bytes"));
        }
        serde_json::from_str(line.trim_end_matches(['\r', '\n'])).map_err(|e| e.to_string())
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("messages encode") + "\n"
    }
}

impl ServerMessage {
    pub fn decode(line: &str) -> Result<Self, String> {
        serde_json::from_str(line.trim_end_matches(['\r', '\n'])).map_err(|e| e.to_string())
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("messages encode") + "\n"
    }

    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        ServerMessage::Error {
            code,
            detail: detail.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_messages_round_trip() {
        let all = [
            ClientMessage::Hello { v: 1 },
            ClientMessage::Login { name: "bob".into() },
            ClientMessage::Queue { env: "kuhn".into() },
            ClientMessage::Action { turn: 3, value: "bet".into() },
        ];
        for m in all {
            assert_eq!(ClientMessage::decode(&m.encode()).unwrap(), m);
        }
        assert_eq!(
            ClientMessage::Action { turn: 3, value: "bet".into() }.encode(),
            "{\"type\":\"action\",\"turn\":3,\"value\":\"bet\"}\n"
        );
    }

    #[test]
    fn malformed_messages_are_rejected() {
        for bad in ["", "{}", "{\"type\":\"dance\"}", "{\"type\":\"login\"}", "[1]", "{\"type\":\"queue\",\"env\":\"x\",\"extra\":1}"] {
            assert!(ClientMessage::decode(bad).is_err(), "{bad}");
        }
        assert!(ClientMessage::decode(&"x".repeat(MAX_LINE + 1)).is_err());
    }

    #[test]
    fn error_codes_are_snake_case() {
        let m = ServerMessage::error(ErrorCode::StaleTurn, "late");
        assert_eq!(m.encode(), "{\"type\":\"error\",\"code\":\"stale_turn\",\"detail\":\"late\"}\n");
        assert_eq!(ServerMessage::decode(&m.encode()).unwrap(), m);
    }
}
