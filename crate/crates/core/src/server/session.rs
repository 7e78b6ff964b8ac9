//! Running one match over a set of seats.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;

use super::protocol::{ClientMessage, ErrorCode, ServerMessage};
use crate::agents::Policy;
use crate::game::{Action, GameState, JointAction, Observation, PlayerId, RankRecord};
use crate::rng::{substream, StreamRng};
use crate::transcript::{Entry, Transcript};

/// What a seat produced while the server waited on it.
#[derive(Debug, Clone, PartialEq)]
pub enum SeatEvent {
    Message(ClientMessage),
    Timeout,
    Disconnected,
}

/// One participant as seen by the match driver.
pub trait Seat: Send {
    fn name(&self) -> String;
    /// Delivers a message; `false` once the participant is gone.
    fn send(&mut self, msg: &ServerMessage) -> bool;
    fn recv_until(&mut self, deadline: Instant) -> SeatEvent;
}

/// A server-side agent. It answers each observation that asks it to act.
pub struct BotSeat {
    policy: Arc<dyn Policy>,
    rng: StreamRng,
    pending: Option<(u64, Action)>,
}

impl BotSeat {
    pub fn new(policy: Arc<dyn Policy>, rng: StreamRng) -> Self {
        BotSeat {
            policy,
            rng,
            pending: None,
        }
    }
}

impl Seat for BotSeat {
    fn name(&self) -> String {
        format!("bot:{}", self.policy.name())
    }

    fn send(&mut self, msg: &ServerMessage) -> bool {
        if let ServerMessage::Observation { turn, obs, legal, .. } = msg {
            self.pending = (!legal.is_empty()).then(|| (*turn, self.policy.act(obs, legal, &mut self.rng)));
        }
        true
    }

    fn recv_until(&mut self, _deadline: Instant) -> SeatEvent {
        match self.pending.take() {
            Some((turn, action)) => SeatEvent::Message(ClientMessage::Action {
                turn,
                value: action.to_string(),
            }),
            None => SeatEvent::Timeout,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchOptions {
    pub action_timeout: Duration,
    /// Consecutive substitutions after which a seat forfeits.
    pub forfeit_after: u32,
    /// Seeds the substitution stream.
    pub seed: u64,
    pub shutdown: Option<Arc<AtomicBool>>,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            action_timeout: Duration::from_secs(30),
            forfeit_after: 3,
            seed: 0,
            shutdown: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatchEnd {
    Finished(RankRecord),
    Aborted(String),
}

#[derive(Debug, Clone)]
pub struct MatchReport {
    pub match_id: u64,
    pub agents: Vec<String>,
    pub end: MatchEnd,
    pub transcript: Transcript,
    /// Server-chosen actions per seat.
    pub substitutions: Vec<u32>,
    pub forfeited: Vec<PlayerId>,
    pub turns: u64,
}

enum Wait {
    Acted(Action),
    NoAction,
    Gone,
}

fn await_action(seat: &mut dyn Seat, turn: u64, legal: &[Action], deadline: Instant) -> Wait {
    loop {
        match seat.recv_until(deadline) {
            SeatEvent::Message(ClientMessage::Action { turn: t, value }) => {
                if t != turn {
                    seat.send(&ServerMessage::error(
                        ErrorCode::StaleTurn,
                        format!("action for turn {t} arrived during turn {turn}"),
                    ));
                    continue;
                }
                match value.parse::<Action>() {
                    Ok(a) if legal.contains(&a) => return Wait::Acted(a),
                    _ => {
                        seat.send(&ServerMessage::error(ErrorCode::IllegalAction, format!("`{value}` is not legal now")));
                    }
                }
            }
            SeatEvent::Message(other) => {
                seat.send(&ServerMessage::error(ErrorCode::UnexpectedMessage, format!("{other:?} during a match")));
            }
            SeatEvent::Timeout => return Wait::NoAction,
            SeatEvent::Disconnected => return Wait::Gone,
        }
    }
}

/// Plays `initial` to the end over `seats` (seat `i` plays player `i`).
///
/// Each turn every connected seat receives its own observation, with legal
/// actions only if it must act. Acting seats that miss the deadline,
/// disconnect, or only send unusable actions get a uniformly random legal
/// action; after `forfeit_after` of those in a row the seat forfeits (is
/// eliminated where the game allows it, otherwise plays randomly to the
/// end without being waited on).
pub fn drive_match(match_id: u64, env: &str, initial: GameState, seats: &mut [Box<dyn Seat>], opts: &MatchOptions) -> MatchReport {
    let n = initial.num_players();
    assert_eq!(seats.len(), n, "one seat per player");
    let agents: Vec<String> = seats.iter().map(|s| s.name()).collect();
    let mut transcript = Transcript::start(match_id, &initial, agents.clone());
    let mut report = MatchReport {
        match_id,
        agents,
        end: MatchEnd::Aborted(String::new()),
        transcript: Transcript::default(),
        substitutions: vec![0; n],
        forfeited: Vec::new(),
        turns: 0,
    };
    let mut gone = vec![false; n];
    let mut autoplay = vec![false; n];
    let mut streak = vec![0u32; n];
    let mut last_reward = vec![0.0; n];
    let mut sub_rng = substream(opts.seed, "substitute", match_id);

    let config = initial.config().public_view();
    for (i, seat) in seats.iter_mut().enumerate() {
        gone[i] = !seat.send(&ServerMessage::MatchAssigned {
            match_id,
            seat: i,
            env: env.to_string(),
            config: config.clone(),
        });
    }

    let abort = |seats: &mut [Box<dyn Seat>], gone: &[bool], code: ErrorCode, reason: String, mut transcript: Transcript, mut report: MatchReport| {
        for (i, seat) in seats.iter_mut().enumerate() {
            if !gone[i] {
                seat.send(&ServerMessage::error(code, reason.clone()));
            }
        }
        transcript.push(Entry::Aborted { reason: reason.clone() });
        report.end = MatchEnd::Aborted(reason);
        report.transcript = transcript;
        report
    };

    let mut state = initial;
    let mut turn = 0u64;
    while !state.is_terminal() {
        if opts.shutdown.as_ref().is_some_and(|f| f.load(Ordering::SeqCst)) {
            report.turns = turn;
            return abort(seats, &gone, ErrorCode::ServerShutdown, "server shutting down".into(), transcript, report);
        }
        let acting = state.current_players().expect("not terminal");
        let mut legal_sets: Vec<Vec<Action>> = vec![Vec::new(); n];
        for p in &acting {
            legal_sets[p.0] = state.legal_actions(*p).expect("acting player has actions");
        }
        for (i, seat) in seats.iter_mut().enumerate() {
            if gone[i] {
                continue;
            }
            let obs: Observation = state.observe(PlayerId(i)).expect("seat exists");
            let msg = ServerMessage::Observation {
                turn,
                obs,
                legal: legal_sets[i].clone(),
                reward: last_reward[i],
                terminal: false,
            };
            if !seat.send(&msg) {
                gone[i] = true;
            }
        }
        let deadline = Instant::now() + opts.action_timeout;
        let mut joint = JointAction::new();
        let mut substituted = Vec::new();
        for p in &acting {
            let legal = &legal_sets[p.0];
            let got = if gone[p.0] || autoplay[p.0] {
                Wait::NoAction
            } else {
                await_action(seats[p.0].as_mut(), turn, legal, deadline)
            };
            let action = match got {
                Wait::Acted(a) => {
                    streak[p.0] = 0;
                    a
                }
                Wait::NoAction | Wait::Gone => {
                    if matches!(got, Wait::Gone) {
                        gone[p.0] = true;
                    }
                    let a = *legal.choose(&mut sub_rng).expect("legal actions are never empty");
                    streak[p.0] += 1;
                    report.substitutions[p.0] += 1;
                    substituted.push(*p);
                    log::info!("match {match_id}: turn {turn}: substituted `{a}` for seat {}", p.0);
                    if !gone[p.0] && !autoplay[p.0] {
                        seats[p.0].send(&ServerMessage::error(
                            ErrorCode::Substituted,
                            format!("turn {turn}: no usable action in time, played `{a}`"),
                        ));
                    }
                    a
                }
            };
            joint.insert(*p, action);
        }
        let step = match state.step(&joint) {
            Ok(s) => s,
            Err(e) => {
                report.turns = turn;
                return abort(seats, &gone, ErrorCode::MatchAborted, format!("step failed: {e}"), transcript, report);
            }
        };
        transcript.push(Entry::Turn {
            turn,
            actions: joint,
            substituted: substituted.clone(),
        });
        last_reward = step.rewards;
        state = step.next_state;
        for p in substituted {
            if streak[p.0] >= opts.forfeit_after && !autoplay[p.0] {
                autoplay[p.0] = true;
                log::info!("match {match_id}: seat {} forfeits", p.0);
                if let Some(f) = state.forfeit(p) {
                    transcript.push(Entry::Forfeit { turn, seat: p });
                    for (acc, r) in last_reward.iter_mut().zip(&f.rewards) {
                        *acc += r;
                    }
                    state = f.next_state;
                    report.forfeited.push(p);
                }
            }
        }
        turn += 1;
    }

    let record = state.rankings().expect("terminal state ranks");
    for (i, seat) in seats.iter_mut().enumerate() {
        if gone[i] {
            continue;
        }
        seat.send(&ServerMessage::Observation {
            turn,
            obs: state.observe(PlayerId(i)).expect("seat exists"),
            legal: Vec::new(),
            reward: last_reward[i],
            terminal: true,
        });
        seat.send(&ServerMessage::Result {
            match_id,
            ranks: record.ranks.clone(),
            total_reward: record.total_reward.clone(),
            substituted: report.substitutions[i],
        });
    }
    transcript.push(Entry::Result {
        ranks: record.ranks.clone(),
        total_reward: record.total_reward.clone(),
    });
    report.turns = turn;
    report.end = MatchEnd::Finished(record);
    report.transcript = transcript;
    report
}
