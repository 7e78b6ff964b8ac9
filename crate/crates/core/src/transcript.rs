//! Match transcripts: one JSON object per line, replayable offline.
//!
//! ```text
//! {"type":"header","v":1,"match_id":3,"config":{...},"agents":["random",...]}
//! {"type":"turn","turn":0,"actions":{"0":"forward","1":"left"},"substituted":[1]}
//! {"type":"forfeit","turn":4,"seat":1}
//! {"type":"result","ranks":[1,2],"total_reward":[11.0,-1.0]}
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::game::{Action, EnvConfig, GameState, JointAction, PlayerId, RankRecord};

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Entry {
    Header {
        v: u32,
        match_id: u64,
        config: EnvConfig,
        agents: Vec<String>,
        /// Starting state, present only when it is not the one `config`
        /// deals.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial: Option<serde_json::Value>,
    },
    Turn {
        turn: u64,
        actions: BTreeMap<PlayerId, Action>,
        /// Seats whose action was chosen by the server.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        substituted: Vec<PlayerId>,
    },
    Forfeit {
        turn: u64,
        seat: PlayerId,
    },
    Result {
        ranks: Vec<usize>,
        total_reward: Vec<f64>,
    },
    Aborted {
        reason: String,
    },
}

/// Error with the 1-based line it was found on.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for TranscriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for TranscriptError {}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub entries: Vec<Entry>,
}

impl Transcript {
    pub fn start(match_id: u64, initial: &GameState, agents: Vec<String>) -> Self {
        let config = initial.config().clone();
        let dealt = GameState::new(&config).map(|s| s.to_json()).ok();
        let initial = (dealt.as_deref() != Some(initial.to_json().as_str()))
            .then(|| serde_json::from_str(&initial.to_json()).expect("state encodes as JSON"));
        Transcript {
            entries: vec![Entry::Header {
                v: TRANSCRIPT_VERSION,
                match_id,
                config,
                agents,
                initial,
            }],
        }
    }

    pub fn push(&mut self, entry: Entry) {
        self.entries.push(entry);
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entries encode") + "\n")
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, TranscriptError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: Entry = serde_json::from_str(line).map_err(|e| TranscriptError {
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(Transcript { entries })
    }

    /// The recorded result, if the match finished.
    pub fn recorded(&self) -> Option<RankRecord> {
        self.entries.iter().rev().find_map(|e| match e {
            Entry::Result { ranks, total_reward } => Some(RankRecord {
                ranks: ranks.clone(),
                total_reward: total_reward.clone(),
            }),
            _ => None,
        })
    }

    /// Re-simulates the match, calling `frame` with every state from the
    /// start, and checks the result against the recorded one. Errors carry
    /// the line (counting non-blank lines) of the offending entry.
    pub fn replay(&self, mut frame: impl FnMut(&GameState)) -> Result<RankRecord, TranscriptError> {
        let at = |line: usize, message: String| TranscriptError { line: line + 1, message };
        let mut iter = self.entries.iter().enumerate();
        let mut state = match iter.next() {
            Some((_, Entry::Header { v, config, initial, .. })) => {
                if *v != TRANSCRIPT_VERSION {
                    return Err(at(0, format!("unsupported transcript version {v}")));
                }
                match initial {
                    Some(s) => GameState::from_json(&s.to_string()).map_err(|e| at(0, e.to_string()))?,
                    None => GameState::new(config).map_err(|e| at(0, e.to_string()))?,
                }
            }
            _ => return Err(at(0, "transcript does not start with a header".into())),
        };
        frame(&state);
        let mut recorded = None;
        for (i, entry) in iter {
            if recorded.is_some() {
                return Err(at(i, "entry after the result".into()));
            }
            match entry {
                Entry::Header { .. } => return Err(at(i, "second header".into())),
                Entry::Turn { actions, .. } => {
                    let joint: JointAction = actions.clone();
                    state = state.step(&joint).map_err(|e| at(i, e.to_string()))?.next_state;
                    frame(&state);
                }
                Entry::Forfeit { seat, .. } => {
                    state = state
                        .forfeit(*seat)
                        .ok_or_else(|| at(i, format!("seat {seat} cannot forfeit here")))?
                        .next_state;
                    frame(&state);
                }
                Entry::Result { ranks, total_reward } => {
                    recorded = Some((
                        i,
                        RankRecord {
                            ranks: ranks.clone(),
                            total_reward: total_reward.clone(),
                        },
                    ))
                }
                Entry::Aborted { reason } => return Err(at(i, format!("match was aborted: {reason}"))),
            }
        }
        let end = self.entries.len();
        let (line, recorded) = recorded.ok_or_else(|| at(end, "transcript has no result".into()))?;
        let record = state.rankings().map_err(|e| at(line, e.to_string()))?;
        if record != recorded {
            return Err(at(line, format!("replayed result {record:?} differs from recorded {recorded:?}")));
        }
        Ok(record)
    }
}
