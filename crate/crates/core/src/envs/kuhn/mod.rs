//! N-player Kuhn poker.
//!
//! N + 1 cards labelled `0..=N`, one dealt to each player and one burned.
//! Everyone antes one chip. Seat 0 opens; until somebody bets, players check
//! or bet in seat order. After a bet each other player responds once (call or
//! fold), starting left of the bettor and wrapping around. The highest card
//! among the players still in takes the pot.

pub mod analysis;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::game::{Action, Environment, JointAction, Observation, PlayerId, Transition};
use crate::ranking::blocks_by_score;
use crate::rng::substream;

pub const ANTE: u32 = 1;
pub const BET: u32 = 1;
/// Largest table the environment accepts; histories must fit a 64-bit key.
pub const MAX_PLAYERS: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KuhnAction {
    Check,
    Bet,
    Call,
    Fold,
}

impl KuhnAction {
    pub fn letter(self) -> char {
        match self {
            KuhnAction::Check => 'k',
            KuhnAction::Bet => 'b',
            KuhnAction::Call => 'c',
            KuhnAction::Fold => 'f',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'k' => Some(KuhnAction::Check),
            'b' => Some(KuhnAction::Bet),
            'c' => Some(KuhnAction::Call),
            'f' => Some(KuhnAction::Fold),
            _ => None,
        }
    }
}

impl fmt::Display for KuhnAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KuhnAction::Check => "check",
            KuhnAction::Bet => "bet",
            KuhnAction::Call => "call",
            KuhnAction::Fold => "fold",
        })
    }
}

impl FromStr for KuhnAction {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "check" => Ok(KuhnAction::Check),
            "bet" => Ok(KuhnAction::Bet),
            "call" => Ok(KuhnAction::Call),
            "fold" => Ok(KuhnAction::Fold),
            _ => Err(GameError::BadAction(s.to_string())),
        }
    }
}

/// Parses a history written with the letters `k`, `b`, `c`, `f`. `-` and the
/// empty string both mean no actions yet.
pub fn parse_history(s: &str) -> Result<Vec<KuhnAction>, GameError> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.chars()
        .map(|c| KuhnAction::from_letter(c).ok_or_else(|| GameError::Format(format!("bad history letter {c:?}"))))
        .collect()
}

pub fn history_letters(history: &[KuhnAction]) -> String {
    history.iter().map(|a| a.letter()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kuhn {
    players: usize,
    cards: Vec<u8>,
    burned: u8,
    history: Vec<KuhnAction>,
    contributed: Vec<u32>,
    folded: Vec<bool>,
    bettor: Option<usize>,
    to_act: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KuhnObservation {
    pub me: usize,
    pub card: u8,
    /// Betting so far in letters, e.g. `"kb"`.
    pub history: String,
    pub pot: u32,
    pub contributed: Vec<u32>,
    pub folded: Vec<bool>,
    pub to_act: Option<usize>,
}

impl Kuhn {
    /// Shuffles the deck with the `deal` substream of `seed`.
    pub fn deal(players: usize, seed: u64) -> Result<Self, GameError> {
        check_players(players)?;
        let mut deck: Vec<u8> = (0..=players as u8).collect();
        deck.shuffle(&mut substream(seed, "deal", 0));
        Self::with_cards(&deck[..players])
    }

    /// A fresh hand with the given cards; the missing card is burned.
    pub fn with_cards(cards: &[u8]) -> Result<Self, GameError> {
        let players = cards.len();
        check_players(players)?;
        let mut seen = vec![false; players + 1];
        for &c in cards {
            let slot = seen
                .get_mut(c as usize)
                .ok_or_else(|| GameError::InvalidConfig(format!("card {c} is not in a {}-card deck", players + 1)))?;
            if *slot {
                return Err(GameError::InvalidConfig(format!("card {c} dealt twice")));
            }
            *slot = true;
        }
        let burned = seen.iter().position(|s| !s).unwrap() as u8;
        Ok(Kuhn {
            players,
            cards: cards.to_vec(),
            burned,
            history: Vec::with_capacity(2 * players),
            contributed: vec![ANTE; players],
            folded: vec![false; players],
            bettor: None,
            to_act: Some(0),
        })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn cards(&self) -> &[u8] {
        &self.cards
    }

    pub fn burned(&self) -> u8 {
        self.burned
    }

    pub fn history(&self) -> &[KuhnAction] {
        &self.history
    }

    pub fn pot(&self) -> u32 {
        self.contributed.iter().sum()
    }

    pub fn contributed(&self) -> &[u32] {
        &self.contributed
    }

    pub fn folded(&self) -> &[bool] {
        &self.folded
    }

    pub fn bettor(&self) -> Option<usize> {
        self.bettor
    }

    pub fn to_act(&self) -> Option<usize> {
        self.to_act
    }

    pub fn legal(&self) -> Vec<KuhnAction> {
        match (self.to_act, self.bettor) {
            (None, _) => Vec::new(),
            (Some(_), None) => vec![KuhnAction::Check, KuhnAction::Bet],
            (Some(_), Some(_)) => vec![KuhnAction::Call, KuhnAction::Fold],
        }
    }

    /// Applies one action in place. Used directly by fast simulators;
    /// [`Environment::apply`] wraps it.
    pub fn act(&mut self, player: PlayerId, action: KuhnAction) -> Result<(), GameError> {
        let Some(seat) = self.to_act else {
            return Err(GameError::Terminal);
        };
        if player.0 != seat {
            return Err(GameError::NotToAct(player));
        }
        match (self.bettor, action) {
            (None, KuhnAction::Check) => {}
            (None, KuhnAction::Bet) => {
                self.bettor = Some(seat);
                self.contributed[seat] += BET;
            }
            (Some(_), KuhnAction::Call) => self.contributed[seat] += BET,
            (Some(_), KuhnAction::Fold) => self.folded[seat] = true,
            (None, _) => return Err(GameError::illegal(player, action, "no outstanding bet")),
            (Some(_), _) => return Err(GameError::illegal(player, action, "must call or fold a bet")),
        }
        self.history.push(action);
        self.to_act = match self.bettor {
            None if self.history.len() == self.players => None,
            None => Some(seat + 1),
            Some(b) => {
                let bet_at = self.history.iter().position(|a| *a == KuhnAction::Bet).unwrap();
                let responded = self.history.len() - bet_at - 1;
                if responded == self.players - 1 {
                    None
                } else {
                    Some((b + 1 + responded) % self.players)
                }
            }
        };
        Ok(())
    }

    /// Net chip change per player once the hand is over.
    pub fn net(&self) -> Option<Vec<i64>> {
        if self.to_act.is_some() {
            return None;
        }
        let winner = (0..self.players)
            .filter(|p| !self.folded[*p])
            .max_by_key(|p| self.cards[*p])
            .expect("someone is always left in");
        let pot = i64::from(self.pot());
        Some(
            (0..self.players)
                .map(|p| {
                    let won = if p == winner { pot } else { 0 };
                    won - i64::from(self.contributed[p])
                })
                .collect(),
        )
    }
}

fn check_players(players: usize) -> Result<(), GameError> {
    if (2..=MAX_PLAYERS).contains(&players) {
        Ok(())
    } else {
        Err(GameError::InvalidConfig(format!(
            "kuhn poker needs 2..={MAX_PLAYERS} players, got {players}"
        )))
    }
}

impl Environment for Kuhn {
    fn num_players(&self) -> usize {
        self.players
    }

    fn is_terminal(&self) -> bool {
        self.to_act.is_none()
    }

    fn acting_players(&self) -> Vec<PlayerId> {
        self.to_act.map(PlayerId).into_iter().collect()
    }

    fn legal_actions(&self, player: PlayerId) -> Result<Vec<Action>, GameError> {
        match self.to_act {
            None => Err(GameError::Terminal),
            Some(s) if s != player.0 => Err(GameError::NotToAct(player)),
            Some(_) => Ok(self.legal().into_iter().map(Action::Kuhn).collect()),
        }
    }

    fn apply(&self, actions: &JointAction) -> Result<Transition<Self>, GameError> {
        let seat = self.to_act.ok_or(GameError::Terminal)?;
        let (player, action) = actions.iter().next().ok_or(GameError::MissingAction(PlayerId(seat)))?;
        let Action::Kuhn(a) = action else {
            return Err(GameError::illegal(*player, action, "expected check, bet, call or fold"));
        };
        let mut next = self.clone();
        next.act(*player, *a)?;
        let rewards = match next.net() {
            Some(net) => net.into_iter().map(|v| v as f64).collect(),
            None => vec![0.0; self.players],
        };
        Ok(Transition { state: next, rewards })
    }

    fn observe(&self, player: PlayerId) -> Observation {
        Observation::Kuhn(KuhnObservation {
            me: player.0,
            card: self.cards.get(player.0).copied().unwrap_or(0),
            history: history_letters(&self.history),
            pot: self.pot(),
            contributed: self.contributed.clone(),
            folded: self.folded.clone(),
            to_act: self.to_act,
        })
    }

    fn eliminated(&self) -> BTreeSet<PlayerId> {
        (0..self.players).filter(|p| self.folded[*p]).map(PlayerId).collect()
    }

    fn finishing_order(&self) -> Result<Vec<Vec<PlayerId>>, GameError> {
        let net = self.net().ok_or(GameError::NotTerminal)?;
        let scores: Vec<f64> = net.iter().map(|v| *v as f64).collect();
        Ok(blocks_by_score(&scores))
    }

    fn render(&self) -> String {
        let cards: Vec<String> = self.cards.iter().enumerate().map(|(p, c)| format!("{p}:{c}")).collect();
        format!(
            "cards {} | burned {}\nhistory {}\npot {}\n",
            cards.join(" "),
            self.burned,
            if self.history.is_empty() { "-".to_string() } else { history_letters(&self.history) },
            self.pot()
        )
    }
}
