//! Evaluation tournaments: random seatings, rank tables and ranked pairs.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::Policy;
use crate::error::GameError;
use crate::game::{EnvConfig, GameState, JointAction, RankRecord};
use crate::rng::{derive_seed, substream, StreamRng};
use crate::transcript::{Entry, Transcript};

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error("invalid tournament: {0}")]
    Config(String),
    #[error("game {game}: {source}")]
    Match { game: u64, source: GameError },
}

/// A uniformly random `seats`-subset of `0..roster`, in random seat order.
pub fn sample_seating(roster: usize, seats: usize, rng: &mut StreamRng) -> Result<Vec<usize>, TournamentError> {
    if seats == 0 || roster < seats {
        return Err(TournamentError::Config(format!(
            "cannot seat {seats} players from a roster of {roster}"
        )));
    }
    Ok(index::sample(rng, roster, seats).into_vec())
}

/// One finished game: who sat where and how each seat did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game: u64,
    /// Roster index per seat.
    pub seating: Vec<usize>,
    pub ranks: Vec<usize>,
    pub total_reward: Vec<f64>,
}

impl GameRecord {
    pub fn new(game: u64, seating: Vec<usize>, record: RankRecord) -> Self {
        GameRecord {
            game,
            seating,
            ranks: record.ranks,
            total_reward: record.total_reward,
        }
    }
}

/// Head-to-head counts. `wins[a][b]` counts games with both present where
/// `a` ranked strictly better than `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseTable {
    pub wins: Vec<Vec<u64>>,
    pub meetings: Vec<Vec<u64>>,
}

impl PairwiseTable {
    pub fn new(agents: usize) -> Self {
        PairwiseTable {
            wins: vec![vec![0; agents]; agents],
            meetings: vec![vec![0; agents]; agents],
        }
    }

    pub fn agents(&self) -> usize {
        self.wins.len()
    }

    pub fn record(&mut self, seating: &[usize], ranks: &[usize]) {
        for i in 0..seating.len() {
            for j in i + 1..seating.len() {
                let (a, b) = (seating[i], seating[j]);
                if a == b {
                    continue;
                }
                self.meetings[a][b] += 1;
                self.meetings[b][a] += 1;
                match ranks[i].cmp(&ranks[j]) {
                    Ordering::Less => self.wins[a][b] += 1,
                    Ordering::Greater => self.wins[b][a] += 1,
                    Ordering::Equal => {}
                }
            }
        }
    }

    pub fn from_records(agents: usize, records: &[GameRecord]) -> Self {
        let mut t = PairwiseTable::new(agents);
        for r in records {
            t.record(&r.seating, &r.ranks);
        }
        t
    }

    /// Unordered meetings in total.
    pub fn total_meetings(&self) -> u64 {
        let n = self.agents();
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).map(|(a, b)| self.meetings[a][b]).sum()
    }
}

/// Finishes per rank for one agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionRow {
    pub agent: usize,
    /// `counts[r]` = finishes at rank `r + 1`.
    pub counts: Vec<u64>,
}

/// Rank counts for every roster agent (absent agents keep an all-zero row),
/// most first places first, then by roster index.
pub fn ranking_distribution(agents: usize, seats: usize, records: &[GameRecord]) -> Vec<DistributionRow> {
    let mut rows: Vec<DistributionRow> = (0..agents)
        .map(|agent| DistributionRow {
            agent,
            counts: vec![0; seats],
        })
        .collect();
    for r in records {
        for (agent, rank) in r.seating.iter().zip(&r.ranks) {
            rows[*agent].counts[rank - 1] += 1;
        }
    }
    rows.sort_by(|x, y| y.counts[0].cmp(&x.counts[0]).then(x.agent.cmp(&y.agent)));
    rows
}

/// Output of [`ranked_pairs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedPairs {
    /// Best first.
    pub order: Vec<usize>,
    /// Edges `winner -> loser` in the order they were locked.
    pub locked: Vec<(usize, usize)>,
    /// Edges dropped because they would have closed a cycle.
    pub skipped: Vec<(usize, usize)>,
}

/// Pairwise victories in the order they are considered: win fraction
/// descending, then more meetings, then roster index. Only fractions above
/// one half count; pairs that never met contribute nothing.
pub fn pairwise_victories(table: &PairwiseTable) -> Vec<(usize, usize)> {
    let n = table.agents();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let m = table.meetings[a][b];
            if a != b && m > 0 && 2 * table.wins[a][b] > m {
                edges.push((a, b));
            }
        }
    }
    let frac = |(a, b): (usize, usize)| (u128::from(table.wins[a][b]), u128::from(table.meetings[a][b]));
    edges.sort_by(|x, y| {
        let ((wx, mx), (wy, my)) = (frac(*x), frac(*y));
        (wy * mx)
            .cmp(&(wx * my))
            .then(my.cmp(&mx))
            .then(x.cmp(y))
    });
    edges
}

fn reaches(adj: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(&adj[v]);
        }
    }
    false
}

/// Locks victories strongest first, skipping any that would close a cycle,
/// and reads off a topological order of the locked graph. Among agents that
/// are free to go next, more first places (`first_places[agent]`) wins,
/// then the lower roster index.
pub fn ranked_pairs(table: &PairwiseTable, first_places: &[u64]) -> RankedPairs {
    let n = table.agents();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut locked = Vec::new();
    let mut skipped = Vec::new();
    for (a, b) in pairwise_victories(table) {
        if reaches(&adj, b, a) {
            skipped.push((a, b));
        } else {
            adj[a].push(b);
            locked.push((a, b));
            debug_assert!(!reaches(&adj, b, a));
        }
    }
    let mut indegree = vec![0usize; n];
    for &(_, b) in &locked {
        indegree[b] += 1;
    }
    let priority = |a: usize| (std::cmp::Reverse(first_places.get(a).copied().unwrap_or(0)), a);
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    for _ in 0..n {
        let next = (0..n)
            .filter(|v| !done[*v] && indegree[*v] == 0)
            .min_by_key(|v| priority(*v))
            .expect("locked graph is acyclic");
        done[next] = true;
        order.push(next);
        for &b in &adj[next] {
            indegree[b] -= 1;
        }
    }
    RankedPairs { order, locked, skipped }
}

/// Writes an ordering as `{a, b, c}`.
pub fn brace_list<S: AsRef<str>>(labels: &[S], order: &[usize]) -> String {
    let names: Vec<&str> = order.iter().map(|i| labels[*i].as_ref()).collect();
    format!("{{{}}}", names.join(", "))
}

/// A locally played match.
#[derive(Debug, Clone)]
pub struct LocalMatch {
    pub record: RankRecord,
    pub transcript: Transcript,
}

/// Plays one match between in-process policies. Seat `i`'s draws come from
/// the `agent`/`i` substream of `seed`.
pub fn play_local(config: &EnvConfig, agents: &[Arc<dyn Policy>], match_id: u64, seed: u64) -> Result<LocalMatch, GameError> {
    let mut state = GameState::new(config)?;
    if agents.len() != state.num_players() {
        return Err(GameError::InvalidConfig(format!(
            "{} agents for {} seats",
            agents.len(),
            state.num_players()
        )));
    }
    let mut rngs: Vec<StreamRng> = (0..agents.len()).map(|i| substream(seed, "agent", i as u64)).collect();
    let mut transcript = Transcript::start(match_id, &state, agents.iter().map(|a| a.name()).collect());
    let mut turn = 0;
    while !state.is_terminal() {
        let mut joint = JointAction::new();
        for p in state.current_players()? {
            let obs = state.observe(p)?;
            let legal = state.legal_actions(p)?;
            let action = agents[p.0].act(&obs, &legal, &mut rngs[p.0]);
            joint.insert(p, action);
        }
        state = state.step(&joint)?.next_state;
        transcript.push(Entry::Turn {
            turn,
            actions: joint,
            substituted: Vec::new(),
        });
        turn += 1;
    }
    let record = state.rankings()?;
    transcript.push(Entry::Result {
        ranks: record.ranks.clone(),
        total_reward: record.total_reward.clone(),
    });
    Ok(LocalMatch { record, transcript })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentConfig {
    /// Environment name, played with [`EnvConfig::default_for`].
    pub env: String,
    pub roster: Vec<String>,
    pub games: u64,
    pub seats: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub jobs: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone)]
pub struct TournamentResult {
    pub records: Vec<GameRecord>,
    pub table: PairwiseTable,
    /// Per game, when transcripts were kept.
    pub transcripts: Vec<Transcript>,
}

impl TournamentResult {
    pub fn distribution(&self, seats: usize) -> Vec<DistributionRow> {
        ranking_distribution(self.table.agents(), seats, &self.records)
    }

    pub fn ranked_pairs(&self) -> RankedPairs {
        ranked_pairs(&self.table, &first_places(self.table.agents(), &self.records))
    }
}

pub fn first_places(agents: usize, records: &[GameRecord]) -> Vec<u64> {
    let mut out = vec![0; agents];
    for r in records {
        for (a, rank) in r.seating.iter().zip(&r.ranks) {
            if *rank == 1 {
                out[*a] += 1;
            }
        }
    }
    out
}

/// All seatings of a tournament, drawn up front from the `matchmaking`
/// substream so they do not depend on how games are scheduled.
pub fn seatings(roster: usize, seats: usize, games: u64, seed: u64) -> Result<Vec<Vec<usize>>, TournamentError> {
    let mut rng = substream(seed, "matchmaking", 0);
    (0..games).map(|_| sample_seating(roster, seats, &mut rng)).collect()
}

/// Plays `games` games with `runner(game, seating, game_seed)` on `jobs`
/// threads. Results are gathered in game order, so the output does not
/// depend on `jobs`.
pub fn run_tournament<F>(roster: usize, seats: usize, games: u64, seed: u64, jobs: usize, runner: F) -> Result<TournamentResult, TournamentError>
where
    F: Fn(u64, &[usize], u64) -> Result<LocalMatch, GameError> + Sync,
{
    let plan = seatings(roster, seats, games, seed)?;
    let results: Vec<Mutex<Option<Result<LocalMatch, GameError>>>> = (0..plan.len()).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, AtomicOrdering::Relaxed);
        if i >= plan.len() {
            break;
        }
        let game = i as u64;
        let outcome = runner(game, &plan[i], derive_seed(seed, "game", game));
        *results[i].lock().unwrap() = Some(outcome);
    };
    std::thread::scope(|s| {
        for _ in 1..jobs.max(1) {
            s.spawn(work);
        }
        work();
    });
    let mut records = Vec::with_capacity(plan.len());
    let mut transcripts = Vec::with_capacity(plan.len());
    let mut table = PairwiseTable::new(roster);
    for (i, (slot, seating)) in results.into_iter().zip(plan).enumerate() {
        let game = i as u64;
        let m = slot
            .into_inner()
            .unwrap()
            .expect("every game ran")
            .map_err(|source| TournamentError::Match { game, source })?;
        table.record(&seating, &m.record.ranks);
        records.push(GameRecord::new(game, seating, m.record));
        transcripts.push(m.transcript);
    }
    Ok(TournamentResult {
        records,
        table,
        transcripts,
    })
}

/// Runs a local tournament between named agents.
pub fn run_local_tournament(config: &TournamentConfig, agents: &[Arc<dyn Policy>]) -> Result<TournamentResult, TournamentError> {
    if agents.len() != config.roster.len() {
        return Err(TournamentError::Config("one policy per roster entry is required".into()));
    }
    EnvConfig::default_for(&config.env, config.seats, 0).map_err(|e| TournamentError::Config(e.to_string()))?;
    run_tournament(config.roster.len(), config.seats, config.games, config.seed, config.jobs, |game, seating, game_seed| {
        let env = EnvConfig::default_for(&config.env, config.seats, game_seed)?;
        let seated: Vec<Arc<dyn Policy>> = seating.iter().map(|a| Arc::clone(&agents[*a])).collect();
        play_local(&env, &seated, game, game_seed)
    })
}

/// Display names for a roster; repeated names get `#2`, `#3`, ... suffixes.
pub fn roster_labels<S: AsRef<str>>(roster: &[S]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    roster
        .iter()
        .map(|name| {
            let name = name.as_ref();
            let n = seen.entry(name).or_insert(0);
            *n += 1;
            if *n == 1 {
                name.to_string()
            } else {
                format!("{name}#{n}")
            }
        })
        .collect()
}

pub const RECORDS_FILE: &str = "records.jsonl";
pub const DISTRIBUTION_FILE: &str = "ranking_distribution.csv";
pub const PLOT_FILE: &str = "ranking_plot.dat";
pub const RANKED_PAIRS_FILE: &str = "ranked_pairs.txt";
pub const PAIRWISE_FILE: &str = "pairwise.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RecordLine {
    game: u64,
    agents: Vec<String>,
    seating: Vec<usize>,
    ranks: Vec<usize>,
    total_reward: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterLine {
    roster: Vec<String>,
}

/// A `{"roster":[...]}` line followed by one line per game.
pub fn records_to_jsonl(labels: &[String], records: &[GameRecord]) -> String {
    let mut out = serde_json::to_string(&RosterLine { roster: labels.to_vec() }).unwrap() + "\n";
    for r in records {
        let line = RecordLine {
            game: r.game,
            agents: r.seating.iter().map(|a| labels[*a].clone()).collect(),
            seating: r.seating.clone(),
            ranks: r.ranks.clone(),
            total_reward: r.total_reward.clone(),
        };
        out.push_str(&(serde_json::to_string(&line).unwrap() + "\n"));
    }
    out
}

/// Reads a records file back into roster labels and records. Without a
/// roster line the roster is rebuilt from the labels seen, in roster-index
/// order.
pub fn parse_records(text: &str) -> Result<(Vec<String>, Vec<GameRecord>), GameError> {
    let mut roster: Option<Vec<String>> = None;
    let mut labels: BTreeMap<usize, String> = BTreeMap::new();
    let mut records = Vec::new();
    for (n, (i, line)) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).enumerate() {
        let bad = |m: String| GameError::Format(format!("records line {}: {m}", i + 1));
        if n == 0 {
            if let Ok(r) = serde_json::from_str::<RosterLine>(line) {
                roster = Some(r.roster);
                continue;
            }
        }
        let r: RecordLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if r.agents.len() != r.seating.len() || r.ranks.len() != r.seating.len() {
            return Err(bad("field lengths differ".into()));
        }
        for (idx, name) in r.seating.iter().zip(&r.agents) {
            let known = match &roster {
                Some(names) => names.get(*idx).ok_or_else(|| bad(format!("agent {idx} is not on the roster")))?,
                None => labels.entry(*idx).or_insert_with(|| name.clone()),
            };
            if known != name {
                return Err(bad(format!("agent {idx} has two names")));
            }
        }
        records.push(GameRecord {
            game: r.game,
            seating: r.seating,
            ranks: r.ranks,
            total_reward: r.total_reward,
        });
    }
    let names = roster.unwrap_or_else(|| {
        let count = labels.keys().next_back().map_or(0, |k| k + 1);
        (0..count)
            .map(|i| labels.get(&i).cloned().unwrap_or_else(|| format!("agent{i}")))
            .collect()
    });
    Ok((names, records))
}

pub fn distribution_csv(labels: &[String], rows: &[DistributionRow]) -> String {
    let seats = rows.first().map_or(0, |r| r.counts.len());
    let mut out = String::from("agent");
    for r in 1..=seats {
        let _ = write!(out, ",rank{r}");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&labels[row.agent]);
        for c in &row.counts {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

/// Parses [`distribution_csv`] output into `(label, counts)` rows.
pub fn parse_distribution_csv(text: &str) -> Result<Vec<(String, Vec<u64>)>, GameError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| GameError::Format("empty distribution table".into()))?;
    let width = header.split(',').count();
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || GameError::Format(format!("distribution line {}: {line:?}", i + 2));
            // Labels never contain commas; counts are the trailing fields.
            let fields: Vec<&str> = line.rsplitn(width, ',').collect();
            if fields.len() != width {
                return Err(bad());
            }
            let label = fields[width - 1].to_string();
            let counts = fields[..width - 1]
                .iter()
                .rev()
                .map(|f| f.parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            Ok((label, counts))
        })
        .collect()
}

/// Whitespace-separated rank counts per agent for a stacked bar chart, in
/// the same order as the distribution table.
pub fn plot_data(labels: &[String], rows: &[DistributionRow]) -> String {
    let seats = rows.first().map_or(0, |r| r.counts.len());
    let mut out = String::from("# agent");
    for r in 1..=seats {
        let _ = write!(out, " rank{r}");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&labels[row.agent].replace(' ', "_"));
        for c in &row.counts {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
    }
    out
}

pub fn pairwise_csv(labels: &[String], table: &PairwiseTable) -> String {
    let mut out = String::from("winner,loser,wins,meetings\n");
    for a in 0..table.agents() {
        for b in 0..table.agents() {
            if a != b && table.meetings[a][b] > 0 {
                let _ = writeln!(out, "{},{},{},{}", labels[a], labels[b], table.wins[a][b], table.meetings[a][b]);
            }
        }
    }
    out
}

/// Writes every report for `records` into `dir` and returns the ranked
/// pairs ordering in brace-list form.
pub fn write_reports(dir: &Path, labels: &[String], seats: usize, records: &[GameRecord]) -> io::Result<String> {
    fs::create_dir_all(dir)?;
    let table = PairwiseTable::from_records(labels.len(), records);
    let rows = ranking_distribution(labels.len(), seats, records);
    let order = ranked_pairs(&table, &first_places(labels.len(), records)).order;
    let braces = brace_list(labels, &order);
    fs::write(dir.join(RECORDS_FILE), records_to_jsonl(labels, records))?;
    fs::write(dir.join(DISTRIBUTION_FILE), distribution_csv(labels, &rows))?;
    fs::write(dir.join(PLOT_FILE), plot_data(labels, &rows))?;
    fs::write(dir.join(PAIRWISE_FILE), pairwise_csv(labels, &table))?;
    fs::write(dir.join(RANKED_PAIRS_FILE), format!("{braces}\n"))?;
    Ok(braces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentSpec, RandomPolicy};

    fn table(n: usize, results: &[(usize, usize, u64, u64)]) -> PairwiseTable {
        let mut t = PairwiseTable::new(n);
        for &(a, b, w, m) in results {
            t.wins[a][b] = w;
            t.wins[b][a] = m - w;
            t.meetings[a][b] = m;
            t.meetings[b][a] = m;
        }
        t
    }

    #[test]
    fn seating_basics() {
        let mut rng = substream(1, "t", 0);
        let mut s = sample_seating(4, 4, &mut rng).unwrap();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3]);
        assert!(sample_seating(3, 4, &mut rng).is_err());
        assert_eq!(seatings(12, 4, 20, 9).unwrap(), seatings(12, 4, 20, 9).unwrap());
    }

    #[test]
    fn ranked_pairs_examples() {
        assert_eq!(ranked_pairs(&PairwiseTable::new(1), &[0]).order, vec![0]);
        assert_eq!(ranked_pairs(&table(2, &[(1, 0, 60, 100)]), &[0, 0]).order, vec![1, 0]);
        let cycle = table(3, &[(0, 1, 90, 100), (1, 2, 80, 100), (2, 0, 60, 100)]);
        let rp = ranked_pairs(&cycle, &[0, 0, 0]);
        assert_eq!(rp.locked, vec![(0, 1), (1, 2)]);
        assert_eq!(rp.skipped, vec![(2, 0)]);
        assert_eq!(rp.order, vec![0, 1, 2]);
    }

    #[test]
    fn unmet_pairs_fall_back_to_first_places() {
        let t = table(3, &[(0, 1, 50, 100)]);
        assert_eq!(ranked_pairs(&t, &[5, 1, 9]).order, vec![2, 0, 1]);
    }

    #[test]
    fn equal_margins_prefer_more_meetings() {
        let t = table(3, &[(0, 1, 6, 10), (2, 0, 60, 100), (1, 2, 60, 100)]);
        // 2>0 and 1>2 (both 0.6 over 100 games) lock before 0>1 (0.6 over 10).
        let rp = ranked_pairs(&t, &[0, 0, 0]);
        assert_eq!(rp.locked, vec![(1, 2), (2, 0)]);
        assert_eq!(rp.order, vec![1, 2, 0]);
    }

    #[test]
    fn distribution_order_and_zero_rows() {
        let mut records = Vec::new();
        for g in 0..10 {
            let b_wins = g < 6;
            records.push(GameRecord {
                game: g,
                seating: vec![0, 1],
                ranks: if b_wins { vec![2, 1] } else { vec![1, 2] },
                total_reward: vec![0.0, 0.0],
            });
        }
        let rows = ranking_distribution(3, 2, &records);
        assert_eq!(rows[0], DistributionRow { agent: 1, counts: vec![6, 4] });
        assert_eq!(rows[1], DistributionRow { agent: 0, counts: vec![4, 6] });
        assert_eq!(rows[2], DistributionRow { agent: 2, counts: vec![0, 0] });
        let single = ranking_distribution(4, 4, &[GameRecord { game: 0, seating: vec![0, 1, 2, 3], ranks: vec![1, 2, 3, 4], total_reward: vec![0.0; 4] }]);
        assert_eq!(single[0].counts, vec![1, 0, 0, 0]);
    }

    #[test]
    fn meetings_identity() {
        let agents: Vec<Arc<dyn Policy>> = (0..6).map(|_| Arc::new(RandomPolicy) as Arc<dyn Policy>).collect();
        let config = TournamentConfig {
            env: "tictactoe".into(),
            roster: vec!["random".into(); 6],
            games: 30,
            seats: 3,
            seed: 4,
            jobs: 1,
        };
        let result = run_local_tournament(&config, &agents).unwrap();
        assert_eq!(result.table.total_meetings(), 30 * 3);
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(result.table.meetings[a][b], result.table.meetings[b][a]);
                assert!(result.table.wins[a][b] + result.table.wins[b][a] <= result.table.meetings[a][b]);
            }
        }
    }

    #[test]
    fn jobs_do_not_change_results() {
        let roster = ["scripted:eps=0.05", "random", "scripted:eps=1", "random"];
        let agents: Vec<Arc<dyn Policy>> = roster.iter().map(|s| s.parse::<AgentSpec>().unwrap().build()).collect();
        let mut config = TournamentConfig {
            env: "tron".into(),
            roster: roster.iter().map(|s| s.to_string()).collect(),
            games: 12,
            seats: 4,
            seed: 77,
            jobs: 1,
        };
        let one = run_local_tournament(&config, &agents).unwrap();
        config.jobs = 3;
        let three = run_local_tournament(&config, &agents).unwrap();
        assert_eq!(one.records, three.records);
        assert_eq!(one.transcripts, three.transcripts);
    }

    #[test]
    fn zero_games() {
        let agents: Vec<Arc<dyn Policy>> = vec![Arc::new(RandomPolicy), Arc::new(RandomPolicy)];
        let config = TournamentConfig {
            env: "kuhn".into(),
            roster: vec!["random".into(), "random".into()],
            games: 0,
            seats: 2,
            seed: 1,
            jobs: 1,
        };
        let r = run_local_tournament(&config, &agents).unwrap();
        assert!(r.records.is_empty());
        let dir = tempfile::tempdir().unwrap();
        let labels = roster_labels(&config.roster);
        assert_eq!(labels, vec!["random", "random#2"]);
        let braces = write_reports(dir.path(), &labels, 2, &r.records).unwrap();
        assert_eq!(braces, "{random, random#2}");
        let csv = fs::read_to_string(dir.path().join(DISTRIBUTION_FILE)).unwrap();
        assert_eq!(parse_distribution_csv(&csv).unwrap().len(), 2);
    }

    #[test]
    fn reports_round_trip() {
        let records = vec![
            GameRecord { game: 0, seating: vec![2, 0], ranks: vec![1, 2], total_reward: vec![1.0, -1.0] },
            GameRecord { game: 1, seating: vec![1, 2], ranks: vec![2, 2], total_reward: vec![0.5, 0.25] },
        ];
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let (back_labels, back) = parse_records(&records_to_jsonl(&labels, &records)).unwrap();
        assert_eq!(back, records);
        assert_eq!(back_labels, labels);
        let rows = ranking_distribution(3, 2, &records);
        let parsed = parse_distribution_csv(&distribution_csv(&labels, &rows)).unwrap();
        let expect: Vec<(String, Vec<u64>)> = rows.iter().map(|r| (labels[r.agent].clone(), r.counts.clone())).collect();
        assert_eq!(parsed, expect);
        assert!(parse_records("{\"game\":1}").is_err());

        // Agents that never played survive through the roster line.
        let four: Vec<String> = ["a", "b", "c", "idle"].iter().map(|s| s.to_string()).collect();
        assert_eq!(parse_records(&records_to_jsonl(&four, &records)).unwrap().0, four);
        assert_eq!(parse_records(&records_to_jsonl(&four, &[])).unwrap(), (four.clone(), vec![]));
        // Files without a roster line still load.
        let bare: String = records_to_jsonl(&labels, &records).lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert_eq!(parse_records(&bare).unwrap(), (labels, records.clone()));
        let wrong = records_to_jsonl(&["a".to_string(), "z".to_string(), "c".to_string()], &[]) + records_to_jsonl(&four, &records).lines().nth(2).unwrap();
        assert!(parse_records(&wrong).is_err());
    }
}
