//! One-shot normal-form games: random payoff tensors and rock-paper-scissors.
//!
//! A tensor of shape `(S_1, ..., S_P, P)` stores one payoff vector per joint
//! action. Everyone acts once, simultaneously, and the game ends.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::game::{Action, Environment, JointAction, Observation, PlayerId, Transition};
use crate::ranking::blocks_by_score;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffTensor {
    /// Action counts per player.
    shape: Vec<usize>,
    /// Row-major over the action axes, then the player axis.
    entries: Vec<f64>,
    zero_sum: bool,
    seed: u64,
}

impl PayoffTensor {
    /// Builds a tensor from payoff vectors listed in row-major joint-action order.
    pub fn from_entries(shape: Vec<usize>, entries: Vec<f64>, zero_sum: bool, seed: u64) -> Result<Self, GameError> {
        if shape.len() < 2 || shape.contains(&0) {
            return Err(GameError::InvalidConfig(format!(
                "payoff shape needs at least two players with at least one action each, got {shape:?}"
            )));
        }
        let expected = shape.iter().product::<usize>() * shape.len();
        if entries.len() != expected {
            return Err(GameError::InvalidConfig(format!(
                "payoff tensor needs {expected} entries, got {}",
                entries.len()
            )));
        }
        Ok(PayoffTensor {
            shape,
            entries,
            zero_sum,
            seed,
        })
    }

    /// Entries i.i.d. uniform on [0, 1) from the seeded stream; with
    /// `zero_sum` every payoff vector is then mean-centred.
    pub fn random(shape: &[usize], seed: u64, zero_sum: bool) -> Result<Self, GameError> {
        let count = shape.iter().product::<usize>() * shape.len();
        let mut rng = substream(seed, "payoff", 0);
        let entries = (0..count).map(|_| rng.gen::<f64>()).collect();
        let tensor = Self::from_entries(shape.to_vec(), entries, false, seed)?;
        Ok(if zero_sum { tensor.project_zero_sum() } else { tensor })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn players(&self) -> usize {
        self.shape.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn joint_actions(&self) -> usize {
        self.shape.iter().product()
    }

    fn offset(&self, actions: &[usize]) -> Option<usize> {
        if actions.len() != self.shape.len() {
            return None;
        }
        let mut idx = 0;
        for (a, s) in actions.iter().zip(&self.shape) {
            if a >= s {
                return None;
            }
            idx = idx * s + a;
        }
        Some(idx * self.players())
    }

    /// Payoff vector of a joint action.
    pub fn payoffs(&self, actions: &[usize]) -> Option<&[f64]> {
        let o = self.offset(actions)?;
        Some(&self.entries[o..o + self.players()])
    }

    /// Joint action of a flat index, row-major.
    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.shape.len()];
        for (slot, s) in out.iter_mut().zip(&self.shape).rev() {
            *slot = index % s;
            index /= s;
        }
        out
    }

    /// Subtracts each payoff vector's mean so every joint action sums to zero.
    pub fn project_zero_sum(&self) -> Self {
        let p = self.players();
        let mut entries = self.entries.clone();
        for chunk in entries.chunks_mut(p) {
            let mean = chunk.iter().sum::<f64>() / p as f64;
            for v in chunk.iter_mut() {
                *v -= mean;
            }
        }
        PayoffTensor {
            shape: self.shape.clone(),
            entries,
            zero_sum: true,
            seed: self.seed,
        }
    }

    /// Text form: a header with shape, seed and the zero-sum flag, then one
    /// value per line in row-major order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# payoff-tensor v1\n");
        let dims: Vec<String> = self.shape.iter().map(|s| s.to_string()).collect();
        out.push_str(&format!("shape {}\n", dims.join(" ")));
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("zero_sum {}\n", self.zero_sum));
        for v in &self.entries {
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GameError> {
        let err = |line: usize, msg: &str| GameError::Format(format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "# payoff-tensor v1" => {}
            _ => return Err(err(1, "missing payoff-tensor header")),
        }
        let mut field = |name: &str| -> Result<(usize, String), GameError> {
            let (i, l) = lines.next().ok_or_else(|| err(0, "truncated header"))?;
            let rest = l
                .strip_prefix(name)
                .ok_or_else(|| err(i + 1, &format!("expected `{name}`")))?;
            Ok((i + 1, rest.trim().to_string()))
        };
        let (ln, shape_text) = field("shape")?;
        let shape = shape_text
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| err(ln, "bad shape"))?;
        let (ln, seed_text) = field("seed")?;
        let seed = seed_text.parse().map_err(|_| err(ln, "bad seed"))?;
        let (ln, zs_text) = field("zero_sum")?;
        let zero_sum = zs_text.parse().map_err(|_| err(ln, "bad zero_sum flag"))?;
        let entries = lines
            .map(|(i, l)| l.trim().parse::<f64>().map_err(|_| err(i + 1, "bad value")))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_entries(shape, entries, zero_sum, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rps {
    Rock,
    Paper,
    Scissors,
}

impl Rps {
    pub const ALL: [Rps; 3] = [Rps::Rock, Rps::Paper, Rps::Scissors];

    pub fn index(self) -> usize {
        self as usize
    }

    fn beats(self, other: Rps) -> bool {
        matches!(
            (self, other),
            (Rps::Paper, Rps::Rock) | (Rps::Scissors, Rps::Paper) | (Rps::Rock, Rps::Scissors)
        )
    }
}

impl FromStr for Rps {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "R" | "r" | "rock" => Ok(Rps::Rock),
            "P" | "p" | "paper" => Ok(Rps::Paper),
            "S" | "s" | "scissors" => Ok(Rps::Scissors),
            _ => Err(GameError::BadAction(s.to_string())),
        }
    }
}

impl fmt::Display for Rps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rps::Rock => "R",
            Rps::Paper => "P",
            Rps::Scissors => "S",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpsConfig {
    pub players: usize,
    pub win: f64,
    pub lose: f64,
    pub tie: f64,
}

impl RpsConfig {
    pub fn new(players: usize, win: f64, lose: f64, tie: f64) -> Result<Self, GameError> {
        if !(2..=3).contains(&players) {
            return Err(GameError::InvalidConfig(format!(
                "rock-paper-scissors is defined for 2 or 3 players, got {players}"
            )));
        }
        Ok(RpsConfig { players, win, lose, tie })
    }
}

/// Payoffs of one round. With three players the holder of the only action
/// nobody else chose wins; all-same and all-different are ties. Two players
/// use the usual cycle.
pub fn rps_outcome(actions: &[Rps], cfg: &RpsConfig) -> Result<Vec<f64>, GameError> {
    if actions.len() != cfg.players {
        return Err(GameError::InvalidConfig(format!(
            "expected {} actions, got {}",
            cfg.players,
            actions.len()
        )));
    }
    let mut out = vec![cfg.tie; actions.len()];
    if actions.len() == 2 {
        if actions[0].beats(actions[1]) {
            out = vec![cfg.win, cfg.lose];
        } else if actions[1].beats(actions[0]) {
            out = vec![cfg.lose, cfg.win];
        }
        return Ok(out);
    }
    let unique: Vec<usize> = (0..actions.len())
        .filter(|i| actions.iter().filter(|a| **a == actions[*i]).count() == 1)
        .collect();
    if let [winner] = unique.as_slice() {
        for (i, v) in out.iter_mut().enumerate() {
            *v = if i == *winner { cfg.win } else { cfg.lose };
        }
    }
    Ok(out)
}

/// RPS as a payoff tensor over action indices R=0, P=1, S=2.
pub fn rps_tensor(cfg: &RpsConfig) -> PayoffTensor {
    let shape = vec![3; cfg.players];
    let joint: usize = shape.iter().product();
    let mut entries = Vec::with_capacity(joint * cfg.players);
    let probe = PayoffTensor {
        shape: shape.clone(),
        entries: Vec::new(),
        zero_sum: false,
        seed: 0,
    };
    for j in 0..joint {
        let actions: Vec<Rps> = probe.unravel(j).into_iter().map(|i| Rps::ALL[i]).collect();
        entries.extend(rps_outcome(&actions, cfg).expect("length matches"));
    }
    let zero_sum = entries.chunks(cfg.players).all(|c| c.iter().sum::<f64>().abs() < 1e-12);
    PayoffTensor {
        shape,
        entries,
        zero_sum,
        seed: 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixObservation {
    pub me: usize,
    pub shape: Vec<usize>,
    /// The whole tensor, row-major with the player axis last.
    pub payoffs: Vec<f64>,
    /// Joint action played, once the game is over.
    pub played: Option<Vec<usize>>,
}

/// A one-shot game over a shared payoff tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGame {
    tensor: Arc<PayoffTensor>,
    played: Option<Vec<usize>>,
}

impl MatrixGame {
    pub fn new(tensor: PayoffTensor) -> Self {
        MatrixGame {
            tensor: Arc::new(tensor),
            played: None,
        }
    }

    pub fn random(shape: &[usize], seed: u64, zero_sum: bool) -> Result<Self, GameError> {
        Ok(Self::new(PayoffTensor::random(shape, seed, zero_sum)?))
    }

    pub fn rps(cfg: &RpsConfig) -> Self {
        Self::new(rps_tensor(cfg))
    }

    pub fn tensor(&self) -> &PayoffTensor {
        &self.tensor
    }

    /// Plays the joint action; payoffs are looked up in the tensor.
    pub fn play(&self, actions: &[usize]) -> Result<Transition<Self>, GameError> {
        if self.played.is_some() {
            return Err(GameError::Terminal);
        }
        for (p, (a, s)) in actions.iter().zip(self.tensor.shape()).enumerate() {
            if a >= s {
                return Err(GameError::illegal(
                    PlayerId(p),
                    a,
                    format!("action index must be below {s}"),
                ));
            }
        }
        let rewards = self
            .tensor
            .payoffs(actions)
            .ok_or_else(|| GameError::InvalidConfig("joint action has the wrong length".into()))?
            .to_vec();
        Ok(Transition {
            state: MatrixGame {
                tensor: Arc::clone(&self.tensor),
                played: Some(actions.to_vec()),
            },
            rewards,
        })
    }
}

impl Environment for MatrixGame {
    fn num_players(&self) -> usize {
        self.tensor.players()
    }

    fn is_terminal(&self) -> bool {
        self.played.is_some()
    }

    fn acting_players(&self) -> Vec<PlayerId> {
        if self.played.is_some() {
            Vec::new()
        } else {
            (0..self.num_players()).map(PlayerId).collect()
        }
    }

    fn legal_actions(&self, player: PlayerId) -> Result<Vec<Action>, GameError> {
        if self.played.is_some() {
            return Err(GameError::Terminal);
        }
        let s = *self.tensor.shape().get(player.0).ok_or(GameError::UnknownPlayer(player))?;
        Ok((0..s).map(Action::Index).collect())
    }

    fn apply(&self, actions: &JointAction) -> Result<Transition<Self>, GameError> {
        let joint = actions
            .iter()
            .map(|(p, a)| match a {
                Action::Index(i) => Ok(*i),
                other => Err(GameError::illegal(*p, other, "expected an action index")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.play(&joint)
    }

    fn observe(&self, player: PlayerId) -> Observation {
        Observation::Matrix(MatrixObservation {
            me: player.0,
            shape: self.tensor.shape().to_vec(),
            payoffs: self.tensor.entries().to_vec(),
            played: self.played.clone(),
        })
    }

    fn eliminated(&self) -> BTreeSet<PlayerId> {
        BTreeSet::new()
    }

    fn finishing_order(&self) -> Result<Vec<Vec<PlayerId>>, GameError> {
        let played = self.played.as_ref().ok_or(GameError::NotTerminal)?;
        Ok(blocks_by_score(self.tensor.payoffs(played).expect("validated on play")))
    }

    fn render(&self) -> String {
        match &self.played {
            Some(p) => format!("played {:?} -> {:?}\n", p, self.tensor.payoffs(p).unwrap()),
            None => format!("normal-form game {:?}\n", self.tensor.shape()),
        }
    }
}
