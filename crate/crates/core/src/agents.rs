//! Baseline agents and self-play opponent pools.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::envs::tron::Turn;
use crate::error::GameError;
use crate::game::{Action, Observation};
use crate::rng::StreamRng;

/// Something that picks an action from what one seat can see.
pub trait Policy: Send + Sync {
    /// Identity, e.g. `scripted:eps=0.25`.
    fn name(&self) -> String;
    /// Must return a member of `legal`, which is never empty.
    fn act(&self, obs: &Observation, legal: &[Action], rng: &mut StreamRng) -> Action;
}

/// Uniform over legal actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(&self, _obs: &Observation, legal: &[Action], rng: &mut StreamRng) -> Action {
        *legal.choose(rng).expect("no legal actions")
    }
}

/// The hand-written Tron driver: forward while clear, otherwise a clear side
/// at random, with an `epsilon` chance of a uniformly random turn instead.
/// Outside Tron it plays uniformly at random.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedTron {
    pub epsilon: f64,
}

impl ScriptedTron {
    pub fn new(epsilon: f64) -> Result<Self, GameError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(GameError::InvalidConfig(format!("epsilon {epsilon} is not a probability")));
        }
        Ok(ScriptedTron { epsilon })
    }

    /// The turn rule on its own, given which of forward/left/right are open.
    pub fn choose(&self, clear: [bool; 3], rng: &mut StreamRng) -> Turn {
        if rng.gen::<f64>() < self.epsilon {
            return *Turn::ALL.choose(rng).unwrap();
        }
        if clear[0] {
            return Turn::Forward;
        }
        let sides: Vec<Turn> = [Turn::Left, Turn::Right]
            .into_iter()
            .zip([clear[1], clear[2]])
            .filter_map(|(t, ok)| ok.then_some(t))
            .collect();
        sides.choose(rng).copied().unwrap_or(Turn::Forward)
    }
}

impl Policy for ScriptedTron {
    fn name(&self) -> String {
        format!("scripted:eps={}", self.epsilon)
    }

    fn act(&self, obs: &Observation, legal: &[Action], rng: &mut StreamRng) -> Action {
        match obs {
            Observation::Tron(t) => {
                let a = Action::Turn(self.choose(t.clearance(), rng));
                if legal.contains(&a) {
                    a
                } else {
                    RandomPolicy.act(obs, legal, rng)
                }
            }
            _ => RandomPolicy.act(obs, legal, rng),
        }
    }
}

/// A locally playable agent, addressed by name: `random` or
/// `scripted:eps=<p>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentSpec {
    Random,
    Scripted { epsilon: f64 },
}

impl AgentSpec {
    pub fn build(&self) -> Arc<dyn Policy> {
        match *self {
            AgentSpec::Random => Arc::new(RandomPolicy),
            AgentSpec::Scripted { epsilon } => Arc::new(ScriptedTron { epsilon }),
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::Random => f.write_str("random"),
            AgentSpec::Scripted { epsilon } => write!(f, "scripted:eps={epsilon}"),
        }
    }
}

impl FromStr for AgentSpec {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "random" {
            return Ok(AgentSpec::Random);
        }
        if let Some(eps) = s.strip_prefix("scripted:eps=") {
            let epsilon: f64 = eps
                .parse()
                .map_err(|_| GameError::InvalidConfig(format!("bad epsilon in {s:?}")))?;
            ScriptedTron::new(epsilon)?;
            return Ok(AgentSpec::Scripted { epsilon });
        }
        if let Some(ExperimentLabel::Scripted { epsilon }) = ExperimentLabel::parse(s) {
            return Ok(AgentSpec::Scripted { epsilon });
        }
        Err(GameError::InvalidConfig(format!("unknown agent {s:?}")))
    }
}

/// Settings of an opponent pool. Plain self play is `k = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolConfig {
    pub k: usize,
    pub latest_prob: f64,
    pub win_threshold: f64,
    /// Games in the running win rate.
    pub window: usize,
}

impl PoolConfig {
    pub fn new(k: usize, win_threshold: f64) -> Self {
        PoolConfig {
            k,
            latest_prob: 0.8,
            win_threshold,
            window: 100,
        }
    }

    fn validate(&self) -> Result<(), GameError> {
        if self.k == 0 || self.window == 0 {
            return Err(GameError::InvalidConfig("pool size and window must be positive".into()));
        }
        for p in [self.latest_prob, self.win_threshold] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GameError::InvalidConfig(format!("{p} is not a probability")));
            }
        }
        Ok(())
    }
}

/// A frozen policy version.
pub struct Snapshot {
    pub version: u64,
    pub policy: Arc<dyn Policy>,
    /// Games the pool had recorded when this version was added.
    pub created_at: u64,
}

impl fmt::Debug for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Snapshot")
            .field("version", &self.version)
            .field("policy", &self.policy.name())
            .field("created_at", &self.created_at)
            .finish()
    }
}

/// The last `k` versions of a learner, oldest first. The snapshot list is
/// copy-on-write: readers holding [`OpponentPool::view`] keep a consistent
/// version while the scheduler updates the pool.
#[derive(Debug)]
pub struct OpponentPool {
    config: PoolConfig,
    snapshots: Arc<Vec<Arc<Snapshot>>>,
    results: VecDeque<bool>,
    games: u64,
    next_version: u64,
}

impl OpponentPool {
    pub fn new(config: PoolConfig, initial: Arc<dyn Policy>) -> Result<Self, GameError> {
        config.validate()?;
        let mut pool = OpponentPool {
            config,
            snapshots: Arc::new(Vec::new()),
            results: VecDeque::with_capacity(config.window),
            games: 0,
            next_version: 0,
        };
        pool.push(initial);
        Ok(pool)
    }

    pub fn config(&self) -> &PoolConfig {
        &self.config
    }

    pub fn view(&self) -> Arc<Vec<Arc<Snapshot>>> {
        Arc::clone(&self.snapshots)
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn latest(&self) -> &Arc<Snapshot> {
        self.snapshots.last().expect("pool is never empty")
    }

    fn push(&mut self, policy: Arc<dyn Policy>) {
        let mut list: Vec<Arc<Snapshot>> = self.snapshots.as_ref().clone();
        list.push(Arc::new(Snapshot {
            version: self.next_version,
            policy,
            created_at: self.games,
        }));
        self.next_version += 1;
        while list.len() > self.config.k {
            list.remove(0);
        }
        self.snapshots = Arc::new(list);
    }

    /// Records one finished game of the learner against the pool; `won`
    /// means an outright first place.
    pub fn record_result(&mut self, won: bool) {
        if self.results.len() == self.config.window {
            self.results.pop_front();
        }
        self.results.push_back(won);
        self.games += 1;
    }

    /// Win rate over the window, once the window is full.
    pub fn current_winrate(&self) -> Option<f64> {
        (self.results.len() >= self.config.window)
            .then(|| self.results.iter().filter(|w| **w).count() as f64 / self.results.len() as f64)
    }

    /// Freezes `learner` into the pool when the win rate has reached the
    /// threshold, evicting the oldest version beyond `k`.
    pub fn maybe_update(&mut self, learner: Arc<dyn Policy>) -> bool {
        match self.current_winrate() {
            Some(w) if w >= self.config.win_threshold => {
                self.push(learner);
                self.results.clear();
                true
            }
            _ => false,
        }
    }

    /// Opponents for `seats` seats: each independently the latest version
    /// with probability `latest_prob`, else uniform over the older ones.
    pub fn sample_opponents(&self, seats: usize, rng: &mut StreamRng) -> Vec<Arc<Snapshot>> {
        sample_from(&self.snapshots, self.config.latest_prob, seats, rng)
    }

    /// One line per snapshot: `version,policy,created_at`.
    pub fn manifest(&self) -> String {
        self.snapshots
            .iter()
            .map(|s| format!("{},{},{}\n", s.version, s.policy.name(), s.created_at))
            .collect()
    }
}

/// Sampling rule shared by pools and consistent views of them.
pub fn sample_from(
    snapshots: &[Arc<Snapshot>],
    latest_prob: f64,
    seats: usize,
    rng: &mut StreamRng,
) -> Vec<Arc<Snapshot>> {
    let (latest, older) = snapshots.split_last().expect("pool is never empty");
    (0..seats)
        .map(|_| {
            if older.is_empty() || rng.gen::<f64>() < latest_prob {
                Arc::clone(latest)
            } else {
                Arc::clone(older.choose(rng).unwrap())
            }
        })
        .collect()
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub version: u64,
    pub policy: String,
    pub created_at: u64,
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, GameError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || GameError::Format(format!("manifest line {}: {line:?}", i + 1));
            let mut parts = line.split(',');
            let version = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
            let policy = parts.next().ok_or_else(bad)?.trim().to_string();
            let created_at = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() {
                return Err(bad());
            }
            Ok(ManifestEntry {
                version,
                policy,
                created_at,
            })
        })
        .collect()
}

/// The named agent variants of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExperimentLabel {
    Scripted { epsilon: f64 },
    Pool(PoolConfig),
}

/// Labels in grid order, with ASCII spellings accepted as aliases.
pub const EXPERIMENT_LABELS: [&str; 9] = ["Sα", "Sβ", "Sγ", "SPα", "SPβ", "FSPα", "FSPβ", "FSPγ", "FSPδ"];

impl ExperimentLabel {
    pub fn parse(label: &str) -> Option<Self> {
        let ascii = label
            .replace('α', "alpha")
            .replace('β', "beta")
            .replace('γ', "gamma")
            .replace('δ', "delta");
        let (family, greek) = ascii.split_at(ascii.find(|c: char| c.is_lowercase())?);
        let low_high = |g: &str| match g {
            "alpha" => Some(0.5),
            "beta" => Some(0.8),
            _ => None,
        };
        Some(match (family, greek) {
            ("S", "alpha") => ExperimentLabel::Scripted { epsilon: 0.05 },
            ("S", "beta") => ExperimentLabel::Scripted { epsilon: 0.25 },
            ("S", "gamma") => ExperimentLabel::Scripted { epsilon: 1.0 },
            ("SP", g) => ExperimentLabel::Pool(PoolConfig::new(1, low_high(g)?)),
            ("FSP", "alpha" | "beta") => ExperimentLabel::Pool(PoolConfig::new(4, low_high(greek)?)),
            ("FSP", "gamma") => ExperimentLabel::Pool(PoolConfig::new(16, 0.5)),
            ("FSP", "delta") => ExperimentLabel::Pool(PoolConfig::new(16, 0.8)),
            _ => return None,
        })
    }
}
