//! Exact evaluation of Kuhn strategy profiles.
//!
//! Expected values and best responses are computed by enumerating every
//! ordered deal and every betting line. The chip accounting here is derived
//! from the history alone and does not go through [`Kuhn`], so the two can
//! be checked against each other. Every routine is generic over [`Scalar`]:
//! `f64` for speed, [`BigRational`] when results must be exact.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Debug, Write as _};
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use super::{history_letters, parse_history, Kuhn, KuhnAction};
use crate::error::GameError;
use crate::game::PlayerId;
use crate::rng::substream;

/// Largest table the exact oracle enumerates; the environment itself goes
/// higher.
pub const MAX_EXACT_PLAYERS: usize = 10;

pub trait Scalar: Clone + Debug + PartialOrd + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    /// Converts a stored probability. Exact for [`BigRational`].
    fn from_prob(p: f64) -> Self;
    fn ratio(num: i64, den: i64) -> Self;
}

impl Scalar for f64 {
    fn from_prob(p: f64) -> Self {
        p
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for BigRational {
    fn from_prob(p: f64) -> Self {
        BigRational::from_float(p).expect("probabilities are finite")
    }

    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// A decision point as seen by the player to act.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InfoSet {
    pub player: usize,
    pub card: u8,
    /// Letters `k`/`b`/`c`/`f`.
    pub history: String,
}

impl fmt::Display for InfoSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = if self.history.is_empty() { "-" } else { &self.history };
        write!(f, "{},{},{}", self.player, self.card, h)
    }
}

/// The two actions available after `history`: check/bet before any bet,
/// call/fold after one.
pub fn actions_after(history: &[KuhnAction]) -> [KuhnAction; 2] {
    if history.contains(&KuhnAction::Bet) {
        [KuhnAction::Call, KuhnAction::Fold]
    } else {
        [KuhnAction::Check, KuhnAction::Bet]
    }
}

/// Seat to act after `history`, or `None` when the hand is over.
pub fn actor(players: usize, history: &[KuhnAction]) -> Option<usize> {
    match history.iter().position(|a| *a == KuhnAction::Bet) {
        None => (history.len() < players).then_some(history.len()),
        Some(bettor) => {
            let answered = history.len() - bettor - 1;
            (answered < players - 1).then(|| (bettor + 1 + answered) % players)
        }
    }
}

/// Net chips per seat at the end of a hand.
pub fn payoff(cards: &[u8], history: &[KuhnAction]) -> Vec<i64> {
    let n = cards.len();
    let mut paid = vec![1i64; n];
    let mut out = vec![false; n];
    for (i, a) in history.iter().enumerate() {
        let seat = actor(n, &history[..i]).expect("history continues past the end of the hand");
        match a {
            KuhnAction::Bet | KuhnAction::Call => paid[seat] += 1,
            KuhnAction::Fold => out[seat] = true,
            KuhnAction::Check => {}
        }
    }
    let winner = (0..n).filter(|s| !out[*s]).max_by_key(|s| cards[*s]).unwrap();
    let pot: i64 = paid.iter().sum();
    (0..n).map(|s| if s == winner { pot - paid[s] } else { -paid[s] }).collect()
}

/// Every history at which somebody still has to act, with that seat.
pub fn decision_points(players: usize) -> Vec<(Vec<KuhnAction>, usize)> {
    fn walk(players: usize, h: &mut Vec<KuhnAction>, out: &mut Vec<(Vec<KuhnAction>, usize)>) {
        if let Some(seat) = actor(players, h) {
            out.push((h.clone(), seat));
            for a in actions_after(h) {
                h.push(a);
                walk(players, h, out);
                h.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(players, &mut Vec::new(), &mut out);
    out
}

pub fn information_sets(players: usize) -> Vec<InfoSet> {
    let mut out = Vec::new();
    for (h, seat) in decision_points(players) {
        for card in 0..=players as u8 {
            out.push(InfoSet {
                player: seat,
                card,
                history: history_letters(&h),
            });
        }
    }
    out.sort();
    out
}

/// All ordered deals of `players` cards from `0..=players`.
pub fn deals(players: usize) -> Vec<Vec<u8>> {
    fn rec(players: usize, cur: &mut Vec<u8>, used: &mut [bool], out: &mut Vec<Vec<u8>>) {
        if cur.len() == players {
            out.push(cur.clone());
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                cur.push(c as u8);
                rec(players, cur, used, out);
                cur.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(players, &mut Vec::new(), &mut vec![false; players + 1], &mut out);
    out
}

/// History key used for fast lookups: a leading 1 followed by two bits per
/// action.
fn push_code(code: u64, a: KuhnAction) -> u64 {
    (code << 2)
        | match a {
            KuhnAction::Check => 0,
            KuhnAction::Bet => 1,
            KuhnAction::Call => 2,
            KuhnAction::Fold => 3,
        }
}

/// Behaviour strategies for every seat: at each information set, the
/// probabilities of the two actions from [`actions_after`].
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    players: usize,
    table: BTreeMap<InfoSet, [f64; 2]>,
}

/// Lookup table keyed by history code, then card.
struct Compiled {
    table: HashMap<u64, Vec<[f64; 2]>>,
}

impl Compiled {
    fn probs(&self, code: u64, card: u8) -> [f64; 2] {
        self.table[&code][card as usize]
    }
}

impl StrategyProfile {
    /// Builds a profile from a function over information sets.
    pub fn from_fn(players: usize, mut f: impl FnMut(&InfoSet) -> [f64; 2]) -> Result<Self, GameError> {
        if !(2..=MAX_EXACT_PLAYERS).contains(&players) {
            return Err(GameError::InvalidConfig(format!(
                "strategy profiles cover 2..={MAX_EXACT_PLAYERS} players"
            )));
        }
        let table = information_sets(players).into_iter().map(|i| {
            let p = f(&i);
            (i, p)
        });
        let profile = StrategyProfile {
            players,
            table: table.collect(),
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn uniform(players: usize) -> Result<Self, GameError> {
        Self::from_fn(players, |_| [0.5, 0.5])
    }

    /// Independent uniform draws at every information set.
    pub fn random(players: usize, rng: &mut impl Rng) -> Result<Self, GameError> {
        Self::from_fn(players, |_| {
            let p: f64 = rng.gen();
            [p, 1.0 - p]
        })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn get(&self, info: &InfoSet) -> Option<[f64; 2]> {
        self.table.get(info).copied()
    }

    pub fn set(&mut self, info: InfoSet, probs: [f64; 2]) -> Result<(), GameError> {
        check_dist(&info, probs)?;
        if !self.table.contains_key(&info) {
            return Err(GameError::InvalidConfig(format!("{info} is not an information set")));
        }
        self.table.insert(info, probs);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InfoSet, &[f64; 2])> {
        self.table.iter()
    }

    /// Every reachable information set present, each a distribution.
    pub fn validate(&self) -> Result<(), GameError> {
        for info in information_sets(self.players) {
            let p = self
                .table
                .get(&info)
                .ok_or_else(|| GameError::InvalidConfig(format!("profile has no entry for {info}")))?;
            check_dist(&info, *p)?;
        }
        if self.table.len() != information_sets(self.players).len() {
            return Err(GameError::InvalidConfig("profile has entries for unreachable histories".into()));
        }
        Ok(())
    }

    /// One line per information set: `player,card,history -> k:p,b:p`.
    /// The empty history is written `-`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (info, p) in &self.table {
            let [a, b] = actions_after(&parse_history(&info.history).unwrap());
            let _ = writeln!(out, "{info} -> {}:{},{}:{}", a.letter(), p[0], b.letter(), p[1]);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GameError> {
        let bad = |line: &str| GameError::Format(format!("bad profile line {line:?}"));
        let mut table = BTreeMap::new();
        let mut players = 0;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, dist) = line
                .split_once("->")
                .or_else(|| line.split_once('→'))
                .ok_or_else(|| bad(line))?;
            let mut parts = key.trim().splitn(3, ',');
            let player: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(line))?;
            let card: u8 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(line))?;
            let history = parse_history(parts.next().ok_or_else(|| bad(line))?)?;
            let expected = actions_after(&history);
            let mut probs = [0.0; 2];
            let mut seen = [false; 2];
            for item in dist.trim().split(',') {
                let (letter, p) = item.trim().split_once(':').ok_or_else(|| bad(line))?;
                let action = letter
                    .chars()
                    .next()
                    .and_then(KuhnAction::from_letter)
                    .filter(|_| letter.len() == 1)
                    .ok_or_else(|| bad(line))?;
                let slot = expected.iter().position(|a| *a == action).ok_or_else(|| bad(line))?;
                probs[slot] = p.trim().parse().map_err(|_| bad(line))?;
                seen[slot] = true;
            }
            if !seen.iter().all(|s| *s) {
                return Err(bad(line));
            }
            players = players.max(player + 1);
            table.insert(
                InfoSet {
                    player,
                    card,
                    history: history_letters(&history),
                },
                probs,
            );
        }
        // The deck size fixes the player count even when seats are absent.
        let max_card = table.keys().map(|i| i.card as usize).max().unwrap_or(0);
        let profile = StrategyProfile {
            players: players.max(max_card),
            table,
        };
        profile.validate()?;
        Ok(profile)
    }

    fn compile(&self) -> Compiled {
        let mut table: HashMap<u64, Vec<[f64; 2]>> = HashMap::new();
        for (info, p) in &self.table {
            let code = parse_history(&info.history)
                .unwrap()
                .into_iter()
                .fold(1, push_code);
            let row = table.entry(code).or_insert_with(|| vec![[0.0; 2]; self.players + 1]);
            row[info.card as usize] = *p;
        }
        Compiled { table }
    }
}

fn check_dist(info: &InfoSet, p: [f64; 2]) -> Result<(), GameError> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) || (p[0] + p[1] - 1.0).abs() > 1e-12 {
        return Err(GameError::InvalidConfig(format!("{info}: {p:?} is not a distribution")));
    }
    Ok(())
}

fn deal_weight<S: Scalar>(players: usize) -> S {
    let count: i64 = (1..=players as i64 + 1).product();
    S::ratio(1, count)
}

/// Exact expectation of every seat's net chips under `profile`.
pub fn expected_values_in<S: Scalar>(profile: &StrategyProfile) -> Vec<S> {
    fn walk<S: Scalar>(c: &Compiled, cards: &[u8], h: &mut Vec<KuhnAction>, code: u64, reach: S, out: &mut [S]) {
        let Some(seat) = actor(cards.len(), h) else {
            for (o, v) in out.iter_mut().zip(payoff(cards, h)) {
                *o = o.clone() + reach.clone() * S::ratio(v, 1);
            }
            return;
        };
        let probs = c.probs(code, cards[seat]);
        for (a, p) in actions_after(h).into_iter().zip(probs) {
            if p == 0.0 {
                continue;
            }
            h.push(a);
            walk(c, cards, h, push_code(code, a), reach.clone() * S::from_prob(p), out);
            h.pop();
        }
    }
    let n = profile.players;
    let c = profile.compile();
    let mut out = vec![S::zero(); n];
    for cards in deals(n) {
        walk(&c, &cards, &mut Vec::new(), 1, S::one(), &mut out);
    }
    let w = deal_weight::<S>(n);
    out.into_iter().map(|v| v * w.clone()).collect()
}

pub fn expected_values(profile: &StrategyProfile) -> Vec<f64> {
    expected_values_in(profile)
}

pub fn expected_values_exact(profile: &StrategyProfile) -> Vec<BigRational> {
    expected_values_in(profile)
}

#[derive(Debug, Clone)]
pub struct BestResponse<S> {
    pub value: S,
    /// The maximizing action at each of the player's information sets. Ties
    /// (including unreachable sets) go to the first action.
    pub choices: BTreeMap<InfoSet, KuhnAction>,
}

/// Backward induction over `player`'s information sets with every other
/// seat fixed to `profile`.
pub fn best_response_in<S: Scalar>(profile: &StrategyProfile, player: usize) -> BestResponse<S> {
    struct Ctx<'a> {
        compiled: &'a Compiled,
        me: usize,
        card: u8,
        deals: Vec<Vec<u8>>,
        choices: BTreeMap<InfoSet, KuhnAction>,
    }

    fn walk<S: Scalar>(ctx: &mut Ctx<'_>, h: &mut Vec<KuhnAction>, code: u64, weights: &[S]) -> S {
        let n = ctx.deals[0].len();
        let Some(seat) = actor(n, h) else {
            let mut total = S::zero();
            for (cards, w) in ctx.deals.iter().zip(weights) {
                total = total + w.clone() * S::ratio(payoff(cards, h)[ctx.me], 1);
            }
            return total;
        };
        let options = actions_after(h);
        if seat == ctx.me {
            let mut best: Option<(S, KuhnAction)> = None;
            for a in options {
                h.push(a);
                let v = walk(ctx, h, push_code(code, a), weights);
                h.pop();
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, a));
                }
            }
            let (v, a) = best.unwrap();
            ctx.choices.insert(
                InfoSet {
                    player: ctx.me,
                    card: ctx.card,
                    history: history_letters(h),
                },
                a,
            );
            return v;
        }
        let mut total = S::zero();
        for (i, a) in options.into_iter().enumerate() {
            let next: Vec<S> = ctx
                .deals
                .iter()
                .zip(weights)
                .map(|(cards, w)| w.clone() * S::from_prob(ctx.compiled.probs(code, cards[seat])[i]))
                .collect();
            h.push(a);
            total = total + walk(ctx, h, push_code(code, a), &next);
            h.pop();
        }
        total
    }

    let n = profile.players;
    let compiled = profile.compile();
    let all = deals(n);
    let w = deal_weight::<S>(n);
    let mut value = S::zero();
    let mut choices = BTreeMap::new();
    for card in 0..=n as u8 {
        let mut ctx = Ctx {
            compiled: &compiled,
            me: player,
            card,
            deals: all.iter().filter(|d| d[player] == card).cloned().collect(),
            choices: BTreeMap::new(),
        };
        let weights = vec![w.clone(); ctx.deals.len()];
        value = value + walk(&mut ctx, &mut Vec::new(), 1, &weights);
        choices.append(&mut ctx.choices);
    }
    BestResponse { value, choices }
}

pub fn best_response_value(profile: &StrategyProfile, player: usize) -> f64 {
    best_response_in::<f64>(profile, player).value
}

pub fn best_response_value_exact(profile: &StrategyProfile, player: usize) -> BigRational {
    best_response_in::<BigRational>(profile, player).value
}

/// A three-player equilibrium from the known parameterised family. Nobody
/// opens the betting except the third seat, which bluffs its lowest card
/// half the time and always bets its highest. Calls are made with the top
/// card, and with the second card half the time when the caller is the
/// last to act after a fold.
pub fn three_player_equilibrium() -> StrategyProfile {
    const CHECK: [f64; 2] = [1.0, 0.0];
    const BET: [f64; 2] = [0.0, 1.0];
    const MIX: [f64; 2] = [0.5, 0.5];
    let call_top = |card: u8| if card == 3 { [1.0, 0.0] } else { [0.0, 1.0] };
    let call_high = |card: u8| match card {
        3 => [1.0, 0.0],
        2 => MIX,
        _ => [0.0, 1.0],
    };
    StrategyProfile::from_fn(3, |i| match (i.player, i.history.as_str()) {
        (0, "") | (1, "k") => CHECK,
        (2, "kk") => match i.card {
            0 => MIX,
            3 => BET,
            _ => CHECK,
        },
        (0, "kbf") | (1, "kkbf") | (2, "bf") => call_high(i.card),
        (0, "kbc" | "kkb") | (1, "b" | "kkbc") | (2, "kb" | "bc") => call_top(i.card),
        _ => unreachable!("no such information set {i}"),
    })
    .expect("equilibrium table is complete")
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub games: u64,
    pub mean: Vec<f64>,
    /// Standard error of each mean.
    pub std_err: Vec<f64>,
}

/// Plays `games` hands through the environment rules with actions sampled
/// from `profile`.
pub fn simulate(profile: &StrategyProfile, games: u64, seed: u64) -> Result<Simulation, GameError> {
    let n = profile.players;
    let compiled = profile.compile();
    let mut rng = substream(seed, "kuhn-mc", 0);
    let mut deck: Vec<u8> = (0..=n as u8).collect();
    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    for _ in 0..games {
        rand::seq::SliceRandom::shuffle(deck.as_mut_slice(), &mut rng);
        let mut hand = Kuhn::with_cards(&deck[..n])?;
        let mut code = 1u64;
        while let Some(seat) = hand.to_act() {
            let [a, b] = actions_after(hand.history());
            let p = compiled.probs(code, hand.cards()[seat]);
            let pick = if rng.gen::<f64>() < p[0] { a } else { b };
            hand.act(PlayerId(seat), pick)?;
            code = push_code(code, pick);
        }
        for (i, v) in hand.net().unwrap().into_iter().enumerate() {
            let v = v as f64;
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    let g = games as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / g).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| ((sq / g - m * m).max(0.0) * g / (g - 1.0) / g).sqrt())
        .collect();
    Ok(Simulation { games, mean, std_err })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::ratio(n, d)
    }

    #[test]
    fn tree_shape() {
        // Two players: "", "k", "b", "kb".
        assert_eq!(decision_points(2).len(), 4);
        assert_eq!(information_sets(2).len(), 12);
        assert_eq!(decision_points(3).len(), 12);
        assert_eq!(deals(3).len(), 24);
        assert_eq!(deals(4).len(), 120);
    }

    #[test]
    fn payoff_examples() {
        let h = parse_history("kk").unwrap();
        assert_eq!(payoff(&[2, 1], &h), vec![1, -1]);
        let h = parse_history("bff").unwrap();
        assert_eq!(payoff(&[0, 2, 3], &h), vec![2, -1, -1]);
    }

    #[test]
    fn always_check_two_players_is_even() {
        let p = StrategyProfile::from_fn(2, |_| [1.0, 0.0]).unwrap();
        let v = expected_values_exact(&p);
        assert_eq!(v, vec![q(0, 1), q(0, 1)]);
    }

    #[test]
    fn uniform_values_sum_to_zero() {
        for n in 2..=4 {
            let v = expected_values_exact(&StrategyProfile::uniform(n).unwrap());
            assert!(v.iter().fold(BigRational::zero(), |a, b| a + b).is_zero());
        }
    }

    #[test]
    fn bet_everything_against_a_folder() {
        // Seat 1 checks when it can and always folds to a bet.
        let folder = StrategyProfile::from_fn(2, |i| if i.history.contains('b') { [0.0, 1.0] } else { [1.0, 0.0] }).unwrap();
        let br = best_response_in::<BigRational>(&folder, 0);
        let always_bet = StrategyProfile::from_fn(2, |i| match i.player {
            0 => [0.0, 1.0],
            _ => folder.get(i).unwrap(),
        })
        .unwrap();
        assert_eq!(br.value, expected_values_exact(&always_bet)[0]);
        assert_eq!(br.value, q(1, 1));
    }

    #[test]
    fn best_response_dominates() {
        let mut rng = substream(5, "test", 0);
        for n in 2..=4 {
            let p = StrategyProfile::random(n, &mut rng).unwrap();
            let ev = expected_values(&p);
            for seat in 0..n {
                assert!(best_response_value(&p, seat) >= ev[seat] - 1e-12);
            }
        }
    }

    #[test]
    fn equilibrium_values() {
        let p = three_player_equilibrium();
        let v = expected_values_exact(&p);
        assert_eq!(v, vec![q(-1, 48), q(-1, 48), q(1, 24)]);
        for seat in 0..3 {
            assert_eq!(best_response_value_exact(&p, seat), v[seat]);
        }
    }

    #[test]
    fn text_round_trip() {
        let p = three_player_equilibrium();
        let text = p.to_text();
        assert!(text.contains("2,0,kk -> k:0.5,b:0.5"));
        assert!(text.contains("0,1,- -> k:1,b:0"));
        assert_eq!(StrategyProfile::from_text(&text).unwrap(), p);
        let missing: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(StrategyProfile::from_text(&missing).is_err());
        assert!(StrategyProfile::from_text(&text.replace("k:1,b:0", "k:0.7,b:0")).is_err());
    }

    #[test]
    fn simulation_is_close() {
        let p = three_player_equilibrium();
        let sim = simulate(&p, 20_000, 3).unwrap();
        let ev = expected_values(&p);
        for s in 0..3 {
            assert!((sim.mean[s] - ev[s]).abs() < 5.0 * sim.std_err[s]);
        }
    }
}
