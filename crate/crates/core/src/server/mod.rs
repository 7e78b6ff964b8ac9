//! TCP match server.
//!
//! Clients connect, receive `hello`, send `login` and `queue`, and are seated
//! into a match once enough agents wait for the same environment. Each match
//! runs on its own thread; each connection has a reader thread that handles
//! lobby messages and forwards in-match actions.

pub mod protocol;
pub mod session;

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::agents::AgentSpec;
use crate::game::{EnvConfig, GameState};
use crate::rng::{derive_seed, substream, StreamRng};
use crate::tournament::{sample_seating, GameRecord};
use crate::transcript::Entry;
use protocol::{ClientMessage, ErrorCode, ServerMessage, MAX_LINE, PROTOCOL_VERSION};
use session::{drive_match, BotSeat, MatchEnd, MatchOptions, MatchReport, Seat, SeatEvent};

pub const ADDR_ENV: &str = "COLOSSEUM_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:7878";

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub addr: String,
    /// Queue name to environment template; seeds are replaced per match.
    pub menu: BTreeMap<String, EnvConfig>,
    pub action_timeout: Duration,
    pub max_matches: usize,
    pub forfeit_after: u32,
    pub seed: u64,
    /// Server-side agents that fill seats when remote agents are short.
    pub bots: Vec<AgentSpec>,
    pub transcript_dir: Option<PathBuf>,
    pub records_path: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            addr: DEFAULT_ADDR.into(),
            menu: BTreeMap::new(),
            action_timeout: Duration::from_secs(30),
            max_matches: 16,
            forfeit_after: 3,
            seed: 0,
            bots: Vec::new(),
            transcript_dir: None,
            records_path: None,
        }
    }
}

impl ServerConfig {
    /// A menu with the default configuration of each named environment.
    pub fn menu_for(envs: &[(&str, usize)]) -> Result<BTreeMap<String, EnvConfig>, crate::GameError> {
        envs.iter()
            .map(|(name, players)| Ok((name.to_string(), EnvConfig::default_for(name, *players, 0)?)))
            .collect()
    }
}

/// A finished match as it enters the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub match_id: u64,
    pub env: String,
    pub agents: Vec<String>,
    pub ranks: Vec<usize>,
    pub total_reward: Vec<f64>,
    pub substitutions: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct ServerStats {
    pub completed: Vec<MatchSummary>,
    /// Match id and reason.
    pub aborted: Vec<(u64, String)>,
    /// Most matches ever running at once.
    pub peak_running: usize,
    /// Interrupted transcripts found and closed at startup.
    pub recovered: Vec<PathBuf>,
}

impl ServerStats {
    /// Completed matches as tournament records over the agent names seen,
    /// in order of first appearance.
    pub fn tournament_records(&self) -> (Vec<String>, Vec<GameRecord>) {
        let mut labels: Vec<String> = Vec::new();
        let mut records = Vec::new();
        for (g, m) in self.completed.iter().enumerate() {
            let seating = m
                .agents
                .iter()
                .map(|a| match labels.iter().position(|l| l == a) {
                    Some(i) => i,
                    None => {
                        labels.push(a.clone());
                        labels.len() - 1
                    }
                })
                .collect();
            records.push(GameRecord {
                game: g as u64,
                seating,
                ranks: m.ranks.clone(),
                total_reward: m.total_reward.clone(),
            });
        }
        (labels, records)
    }
}

const IDLE: u8 = 0;
const QUEUED: u8 = 1;
const PLAYING: u8 = 2;

type Writer = Arc<Mutex<TcpStream>>;

fn write_msg(writer: &Writer, msg: &ServerMessage) -> bool {
    let line = msg.encode();
    let mut w = writer.lock().unwrap();
    w.write_all(line.as_bytes()).and_then(|_| w.flush()).is_ok()
}

/// A seat backed by a client connection.
struct RemoteSeat {
    name: String,
    writer: Writer,
    inbox: Receiver<ClientMessage>,
    phase: Arc<AtomicU8>,
}

impl Seat for RemoteSeat {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn send(&mut self, msg: &ServerMessage) -> bool {
        write_msg(&self.writer, msg)
    }

    fn recv_until(&mut self, deadline: Instant) -> SeatEvent {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.inbox.recv_timeout(wait) {
            Ok(m) => SeatEvent::Message(m),
            Err(RecvTimeoutError::Timeout) => SeatEvent::Timeout,
            Err(RecvTimeoutError::Disconnected) => SeatEvent::Disconnected,
        }
    }
}

impl Drop for RemoteSeat {
    fn drop(&mut self) {
        self.phase.store(IDLE, Ordering::SeqCst);
    }
}

struct Waiting {
    conn: u64,
    seat: RemoteSeat,
}

#[derive(Default)]
struct Lobby {
    queues: BTreeMap<String, Vec<Waiting>>,
    running: usize,
    rounds: u64,
}

struct Shared {
    config: ServerConfig,
    lobby: Mutex<Lobby>,
    shutdown: Arc<AtomicBool>,
    next_match: AtomicU64,
    stats: Mutex<ServerStats>,
    connections: Mutex<BTreeMap<u64, TcpStream>>,
    matches: Mutex<Vec<JoinHandle<()>>>,
    records_lock: Mutex<()>,
}

/// A running server.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    acceptor: Option<JoinHandle<()>>,
}

/// Binds and starts serving in background threads.
pub fn start(config: ServerConfig) -> io::Result<ServerHandle> {
    if config.action_timeout.is_zero() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "action timeout must be positive"));
    }
    if config.max_matches == 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "max matches must be positive"));
    }
    for (name, env) in &config.menu {
        GameState::new(env).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, format!("menu entry {name}: {e}")))?;
    }
    let mut stats = ServerStats::default();
    if let Some(dir) = &config.transcript_dir {
        fs::create_dir_all(dir)?;
        stats.recovered = close_interrupted(dir)?;
    }
    let listener = TcpListener::bind(&config.addr)?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared {
        config,
        lobby: Mutex::new(Lobby::default()),
        shutdown: Arc::new(AtomicBool::new(false)),
        next_match: AtomicU64::new(0),
        stats: Mutex::new(stats),
        connections: Mutex::new(BTreeMap::new()),
        matches: Mutex::new(Vec::new()),
        records_lock: Mutex::new(()),
    });
    let acceptor = {
        let shared = Arc::clone(&shared);
        thread::spawn(move || accept_loop(listener, shared))
    };
    log::info!("listening on {addr}");
    Ok(ServerHandle {
        addr,
        shared,
        acceptor: Some(acceptor),
    })
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stats(&self) -> ServerStats {
        self.shared.stats.lock().unwrap().clone()
    }

    /// Matches currently running.
    pub fn running(&self) -> usize {
        self.shared.lobby.lock().unwrap().running
    }

    /// Stops accepting, aborts running matches (no records are written for
    /// them) and waits for match threads to finish.
    pub fn shutdown(mut self) -> ServerStats {
        self.stop();
        self.stats()
    }

    fn stop(&mut self) {
        if self.shared.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        let _ = TcpStream::connect(self.addr);
        if let Some(a) = self.acceptor.take() {
            let _ = a.join();
        }
        for conn in self.shared.connections.lock().unwrap().values() {
            let _ = conn.shutdown(Shutdown::Both);
        }
        self.shared.lobby.lock().unwrap().queues.clear();
        loop {
            let handles: Vec<JoinHandle<()>> = std::mem::take(&mut *self.shared.matches.lock().unwrap());
            if handles.is_empty() {
                break;
            }
            for h in handles {
                let _ = h.join();
            }
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>) {
    let mut next_conn = 0u64;
    for stream in listener.incoming() {
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = stream else { continue };
        let conn = next_conn;
        next_conn += 1;
        if let Ok(clone) = stream.try_clone() {
            shared.connections.lock().unwrap().insert(conn, clone);
        }
        let shared = Arc::clone(&shared);
        thread::spawn(move || {
            let _ = handle_connection(&shared, conn, stream);
            if let Some(s) = shared.connections.lock().unwrap().remove(&conn) {
                let _ = s.shutdown(Shutdown::Both);
            }
        });
    }
}

fn handle_connection(shared: &Arc<Shared>, conn: u64, stream: TcpStream) -> io::Result<()> {
    let _ = stream.set_nodelay(true);
    let writer: Writer = Arc::new(Mutex::new(stream.try_clone()?));
    let phase = Arc::new(AtomicU8::new(IDLE));
    let mut name: Option<String> = None;
    let mut to_match: Option<Sender<ClientMessage>> = None;
    write_msg(
        &writer,
        &ServerMessage::Hello {
            v: PROTOCOL_VERSION,
            server: format!("colosseum {}", env!("CARGO_PKG_VERSION")),
        },
    );
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    let result = loop {
        line.clear();
        let read = (&mut reader).take(MAX_LINE as u64 + 1).read_line(&mut line);
        match read {
            Ok(0) | Err(_) => break Ok(()),
            Ok(_) => {}
        }
        if line.trim().is_empty() {
            continue;
        }
        let msg = match ClientMessage::decode(&line) {
            Ok(m) => m,
            Err(e) => {
                write_msg(&writer, &ServerMessage::error(ErrorCode::BadMessage, e));
                break Ok(());
            }
        };
        let reply = |code, detail: String| write_msg(&writer, &ServerMessage::error(code, detail));
        match msg {
            ClientMessage::Hello { v } => {
                if v != PROTOCOL_VERSION {
                    reply(
                        ErrorCode::VersionMismatch,
                        format!("server speaks protocol v{PROTOCOL_VERSION}, client sent v{v}"),
                    );
                    break Ok(());
                }
            }
            ClientMessage::Login { name: n } => {
                if n.trim().is_empty() || n.len() > 64 {
                    reply(ErrorCode::BadMessage, "name must be 1 to 64 characters".into());
                    break Ok(());
                }
                name = Some(n);
            }
            ClientMessage::Queue { env } => {
                let Some(n) = &name else {
                    reply(ErrorCode::NotLoggedIn, "log in before queueing".into());
                    continue;
                };
                if !shared.config.menu.contains_key(&env) {
                    let menu: Vec<&String> = shared.config.menu.keys().collect();
                    reply(ErrorCode::UnknownEnv, format!("`{env}` is not served; choose from {menu:?}"));
                    continue;
                }
                if phase.compare_exchange(IDLE, QUEUED, Ordering::SeqCst, Ordering::SeqCst).is_err() {
                    reply(ErrorCode::AlreadyQueued, "already queued or playing".into());
                    continue;
                }
                let (tx, rx) = mpsc::channel();
                to_match = Some(tx);
                let seat = RemoteSeat {
                    name: n.clone(),
                    writer: Arc::clone(&writer),
                    inbox: rx,
                    phase: Arc::clone(&phase),
                };
                shared
                    .lobby
                    .lock()
                    .unwrap()
                    .queues
                    .entry(env.clone())
                    .or_default()
                    .push(Waiting { conn, seat });
                matchmake(shared, &env);
            }
            action @ ClientMessage::Action { .. } => {
                let delivered = phase.load(Ordering::SeqCst) != IDLE
                    && to_match.as_ref().is_some_and(|tx| tx.send(action).is_ok());
                if !delivered {
                    reply(ErrorCode::NotInMatch, "no match in progress".into());
                }
            }
        }
    };
    // Leaving the queue; a running match sees the dropped sender as a
    // disconnect.
    for q in shared.lobby.lock().unwrap().queues.values_mut() {
        q.retain(|w| w.conn != conn);
    }
    drop(to_match);
    let _ = stream.shutdown(Shutdown::Both);
    result
}

/// Who fills a seat: the `i`-th queued agent or the `i`-th configured bot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeatPick {
    Queued(usize),
    Bot(usize),
}

/// Seats one match. With at least `seats` agents queued, a uniform sample
/// without replacement of them in random seat order; otherwise every queued
/// agent plus uniformly chosen distinct bots, shuffled. `None` when even the
/// bots cannot fill the table or nobody is queued.
pub fn choose_seats(queued: usize, seats: usize, bots: usize, rng: &mut StreamRng) -> Option<Vec<SeatPick>> {
    if queued == 0 || queued + bots < seats {
        return None;
    }
    if queued >= seats {
        let picks = sample_seating(queued, seats, rng).ok()?;
        return Some(picks.into_iter().map(SeatPick::Queued).collect());
    }
    let mut all: Vec<SeatPick> = (0..queued).map(SeatPick::Queued).collect();
    let fill = sample_seating(bots, seats - queued, rng).ok()?;
    all.extend(fill.into_iter().map(SeatPick::Bot));
    all.shuffle(rng);
    Some(all)
}

enum Participant {
    Remote(Waiting),
    Bot(AgentSpec),
}

/// Starts as many matches for `env` as the queue and capacity allow.
fn matchmake(shared: &Arc<Shared>, env: &str) {
    if shared.shutdown.load(Ordering::SeqCst) {
        return;
    }
    let template = &shared.config.menu[env];
    let seats = template.players;
    let bots = &shared.config.bots;
    let mut lobby = shared.lobby.lock().unwrap();
    loop {
        if lobby.running >= shared.config.max_matches {
            return;
        }
        let queued = lobby.queues.get(env).map_or(0, Vec::len);
        if queued == 0 || queued + bots.len() < seats {
            return;
        }
        let round = lobby.rounds;
        lobby.rounds += 1;
        let mut rng = substream(shared.config.seed, "matchmaking", round);
        let queue = lobby.queues.get_mut(env).unwrap();
        let picks = choose_seats(queued, seats, bots.len(), &mut rng).expect("checked above");
        let mut taken: BTreeMap<usize, Waiting> = BTreeMap::new();
        let mut from_queue: Vec<usize> = picks
            .iter()
            .filter_map(|p| match p {
                SeatPick::Queued(i) => Some(*i),
                SeatPick::Bot(_) => None,
            })
            .collect();
        from_queue.sort_unstable_by(|a, b| b.cmp(a));
        for i in from_queue {
            taken.insert(i, queue.remove(i));
        }
        let mut chosen: Vec<Participant> = picks
            .into_iter()
            .map(|p| match p {
                SeatPick::Queued(i) => Participant::Remote(taken.remove(&i).unwrap()),
                SeatPick::Bot(b) => Participant::Bot(bots[b]),
            })
            .collect();
        lobby.running += 1;
        let running = lobby.running;
        let match_id = shared.next_match.fetch_add(1, Ordering::SeqCst);
        {
            let mut stats = shared.stats.lock().unwrap();
            stats.peak_running = stats.peak_running.max(running);
        }
        let seats: Vec<Box<dyn Seat>> = chosen
            .drain(..)
            .enumerate()
            .map(|(i, p)| -> Box<dyn Seat> {
                match p {
                    Participant::Remote(w) => {
                        w.seat.phase.store(PLAYING, Ordering::SeqCst);
                        Box::new(w.seat)
                    }
                    Participant::Bot(spec) => Box::new(BotSeat::new(
                        spec.build(),
                        substream(shared.config.seed, "bot", match_id * 64 + i as u64),
                    )),
                }
            })
            .collect();
        let handle = {
            let shared = Arc::clone(shared);
            let env = env.to_string();
            thread::spawn(move || run_match(shared, match_id, env, seats))
        };
        shared.matches.lock().unwrap().push(handle);
    }
}

fn transcript_path(dir: &Path, match_id: u64, suffix: &str) -> PathBuf {
    dir.join(format!("match-{match_id:06}{suffix}"))
}

fn run_match(shared: Arc<Shared>, match_id: u64, env: String, mut seats: Vec<Box<dyn Seat>>) {
    let config = shared.config.menu[&env].with_seed(derive_seed(shared.config.seed, "env", match_id));
    let state = GameState::new(&config).expect("menu entries were validated");
    let partial = shared.config.transcript_dir.as_ref().map(|d| transcript_path(d, match_id, ".jsonl.partial"));
    if let Some(p) = &partial {
        let header = crate::transcript::Transcript::start(match_id, &state, seats.iter().map(|s| s.name()).collect());
        let _ = fs::write(p, header.to_jsonl());
    }
    let opts = MatchOptions {
        action_timeout: shared.config.action_timeout,
        forfeit_after: shared.config.forfeit_after,
        seed: shared.config.seed,
        shutdown: Some(Arc::clone(&shared.shutdown)),
    };
    let report = drive_match(match_id, &env, state, &mut seats, &opts);
    drop(seats);
    finish_match(&shared, &env, &report, partial.as_deref());
    shared.lobby.lock().unwrap().running -= 1;
    let envs: Vec<String> = shared.config.menu.keys().cloned().collect();
    for e in envs {
        matchmake(&shared, &e);
    }
}

fn finish_match(shared: &Shared, env: &str, report: &MatchReport, partial: Option<&Path>) {
    let dir = shared.config.transcript_dir.as_deref();
    match &report.end {
        MatchEnd::Finished(record) => {
            if let (Some(dir), Some(partial)) = (dir, partial) {
                let done = transcript_path(dir, report.match_id, ".jsonl");
                if fs::write(partial, report.transcript.to_jsonl()).and_then(|_| fs::rename(partial, &done)).is_err() {
                    log::warn!("could not write transcript for match {}", report.match_id);
                }
            }
            let summary = MatchSummary {
                match_id: report.match_id,
                env: env.to_string(),
                agents: report.agents.clone(),
                ranks: record.ranks.clone(),
                total_reward: record.total_reward.clone(),
                substitutions: report.substitutions.clone(),
            };
            if let Some(path) = &shared.config.records_path {
                let _guard = shared.records_lock.lock().unwrap();
                let line = serde_json::to_string(&summary).unwrap() + "\n";
                let written = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .and_then(|mut f| f.write_all(line.as_bytes()));
                if written.is_err() {
                    log::warn!("could not append match {} to {}", report.match_id, path.display());
                }
            }
            log::info!("match {} finished: ranks {:?}", report.match_id, record.ranks);
            shared.stats.lock().unwrap().completed.push(summary);
        }
        MatchEnd::Aborted(reason) => {
            if let (Some(dir), Some(partial)) = (dir, partial) {
                let aborted = transcript_path(dir, report.match_id, ".aborted.jsonl");
                let _ = fs::write(partial, report.transcript.to_jsonl()).and_then(|_| fs::rename(partial, aborted));
            }
            log::warn!("match {} aborted: {reason}", report.match_id);
            shared.stats.lock().unwrap().aborted.push((report.match_id, reason.clone()));
        }
    }
}

/// Marks transcripts left behind by a previous run as aborted; they are
/// never resumed.
fn close_interrupted(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut closed = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for path in entries {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_suffix(".jsonl.partial") else { continue };
        let mut text = fs::read_to_string(&path)?;
        if !text.is_empty() && !text.ends_with('\n') {
            text.push('\n');
        }
        let line = serde_json::to_string(&Entry::Aborted {
            reason: "server restarted".into(),
        })
        .unwrap();
        text.push_str(&line);
        text.push('\n');
        let target = dir.join(format!("{stem}.aborted.jsonl"));
        fs::write(&path, text)?;
        fs::rename(&path, &target)?;
        log::warn!("closed interrupted transcript {}", target.display());
        closed.push(target);
    }
    Ok(closed)
}

/// The listen address: the explicit one, else `COLOSSEUM_ADDR`, else the
/// default.
pub fn resolve_addr(explicit: Option<&str>) -> String {
    explicit
        .map(str::to_string)
        .or_else(|| std::env::var(ADDR_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| DEFAULT_ADDR.to_string())
}
