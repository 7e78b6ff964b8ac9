use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use colosseum::agents::{AgentSpec, Policy};
use colosseum::envs::matrix::PayoffTensor;
use colosseum::server::{self, MatchSummary, ServerConfig};
use colosseum::tournament::{self, GameRecord, TournamentConfig};
use colosseum::transcript::Transcript;
use colosseum::EnvConfig;

#[derive(Parser)]
#[command(name = "colosseum", version, about = "N-player game environments, tournaments and a match server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one local match and print the result.
    Play(PlayArgs),
    /// Run a seeded tournament between local agents and write reports.
    Tournament(TournamentArgs),
    /// Serve matches to remote agents over TCP.
    Serve(ServeArgs),
    /// Re-simulate a transcript and check its recorded result.
    Replay(ReplayArgs),
    /// Write a random payoff tensor.
    GenMatrix(GenMatrixArgs),
    /// Rebuild reports from a records file.
    Report(ReportArgs),
}

#[derive(Args)]
struct PlayArgs {
    #[arg(long)]
    env: String,
    #[arg(long)]
    players: usize,
    /// Comma-separated agents, one per seat; defaults to `random` everywhere.
    #[arg(long, value_delimiter = ',')]
    agents: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print every state.
    #[arg(long)]
    render: bool,
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct TournamentArgs {
    /// JSON file with any of: env, roster, games, seats, seed, jobs.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long, value_delimiter = ',')]
    roster: Option<Vec<String>>,
    #[arg(long)]
    games: Option<u64>,
    #[arg(long)]
    seats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "tournament-out")]
    out: PathBuf,
    /// Also write one transcript per game under OUT/transcripts.
    #[arg(long)]
    transcripts: bool,
}

#[derive(Args)]
struct ServeArgs {
    /// JSON file with any of the flags below (snake_case keys).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = server::ADDR_ENV)]
    addr: Option<String>,
    /// Menu entries as `env:players`, e.g. `tron:4,kuhn:3`.
    #[arg(long = "env", value_delimiter = ',')]
    envs: Option<Vec<String>>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    max_matches: Option<usize>,
    /// Server-side agents that fill empty seats.
    #[arg(long, value_delimiter = ',')]
    bots: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    transcripts: Option<PathBuf>,
    #[arg(long)]
    records: Option<PathBuf>,
    /// Stop after this many completed matches.
    #[arg(long)]
    max_games: Option<usize>,
    /// Write tournament reports for the completed matches here on exit.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    path: PathBuf,
    #[arg(long)]
    render: bool,
}

#[derive(Args)]
struct GenMatrixArgs {
    /// Actions per player, e.g. `3,3,3`.
    #[arg(long, value_delimiter = ',', required = true)]
    shape: Vec<usize>,
    #[arg(long)]
    zero_sum: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A tournament records.jsonl or a server records file.
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TournamentFile {
    env: Option<String>,
    roster: Option<Vec<String>>,
    games: Option<u64>,
    seats: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ServeFile {
    addr: Option<String>,
    envs: Option<Vec<String>>,
    timeout_ms: Option<u64>,
    max_matches: Option<usize>,
    bots: Option<Vec<String>>,
    seed: Option<u64>,
    transcripts: Option<PathBuf>,
    records: Option<PathBuf>,
    max_games: Option<usize>,
    out: Option<PathBuf>,
}

fn read_json<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn parse_agents(names: &[String]) -> Result<Vec<Arc<dyn Policy>>> {
    names
        .iter()
        .map(|n| Ok(n.parse::<AgentSpec>().map_err(|e| anyhow!("{e}"))?.build()))
        .collect()
}

fn play(args: PlayArgs) -> Result<()> {
    let config = EnvConfig::default_for(&args.env, args.players, args.seed)?;
    let names = if args.agents.is_empty() {
        vec!["random".to_string(); args.players]
    } else {
        args.agents
    };
    let agents = parse_agents(&names)?;
    let m = tournament::play_local(&config, &agents, 0, args.seed)?;
    if args.render {
        m.transcript.replay(|s| println!("{}", s.render()))?;
    }
    if let Some(path) = &args.transcript {
        fs::write(path, m.transcript.to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{}", serde_json::to_string(&m.record)?);
    Ok(())
}

fn run_tournament(args: TournamentArgs) -> Result<()> {
    let file: TournamentFile = read_json(args.config.as_deref())?;
    let roster = args.roster.or(file.roster).ok_or_else(|| anyhow!("--roster is required"))?;
    let config = TournamentConfig {
        env: args.env.or(file.env).unwrap_or_else(|| "tron".into()),
        seats: args.seats.or(file.seats).unwrap_or(4),
        games: args.games.or(file.games).unwrap_or(25_000),
        seed: args.seed.or(file.seed).unwrap_or(0),
        jobs: args.jobs.or(file.jobs).unwrap_or(1),
        roster,
    };
    let agents = parse_agents(&config.roster)?;
    let result = tournament::run_local_tournament(&config, &agents)?;
    let labels = tournament::roster_labels(&config.roster);
    let braces = tournament::write_reports(&args.out, &labels, config.seats, &result.records)?;
    if args.transcripts {
        let dir = args.out.join("transcripts");
        fs::create_dir_all(&dir)?;
        for (i, t) in result.transcripts.iter().enumerate() {
            fs::write(dir.join(format!("game-{i:06}.jsonl")), t.to_jsonl())?;
        }
    }
    println!("{braces}");
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let file: ServeFile = read_json(args.config.as_deref())?;
    let entries = args.envs.or(file.envs).unwrap_or_else(|| vec!["tron:4".into(), "kuhn:3".into()]);
    let mut menu = BTreeMap::new();
    for e in &entries {
        let (name, players) = e.split_once(':').ok_or_else(|| anyhow!("menu entry `{e}` is not env:players"))?;
        let players: usize = players.parse().with_context(|| format!("menu entry `{e}`"))?;
        menu.insert(name.to_string(), EnvConfig::default_for(name, players, 0)?);
    }
    let bots = args
        .bots
        .or(file.bots)
        .unwrap_or_default()
        .iter()
        .map(|b| b.parse::<AgentSpec>().map_err(|e| anyhow!("{e}")))
        .collect::<Result<Vec<_>>>()?;
    let config = ServerConfig {
        addr: server::resolve_addr(args.addr.or(file.addr).as_deref()),
        menu,
        action_timeout: Duration::from_millis(args.timeout_ms.or(file.timeout_ms).unwrap_or(30_000)),
        max_matches: args.max_matches.or(file.max_matches).unwrap_or(16),
        forfeit_after: 3,
        seed: args.seed.or(file.seed).unwrap_or(0),
        bots,
        transcript_dir: args.transcripts.or(file.transcripts),
        records_path: args.records.or(file.records),
    };
    let max_games = args.max_games.or(file.max_games);
    let out = args.out.or(file.out);
    let handle = server::start(config)?;
    println!("listening on {}", handle.local_addr());
    loop {
        std::thread::sleep(Duration::from_millis(100));
        if max_games.is_some_and(|n| handle.stats().completed.len() >= n) {
            break;
        }
    }
    let stats = handle.shutdown();
    if let Some(out) = out {
        let (labels, records) = stats.tournament_records();
        let seats = records.iter().map(|r| r.ranks.len()).max().unwrap_or(0);
        println!("{}", tournament::write_reports(&out, &labels, seats, &records)?);
    }
    Ok(())
}

fn replay(args: ReplayArgs) -> Result<()> {
    let text = fs::read_to_string(&args.path).with_context(|| format!("reading {}", args.path.display()))?;
    let transcript = Transcript::parse(&text).with_context(|| format!("{}", args.path.display()))?;
    let mut frame = 0;
    let record = transcript
        .replay(|s| {
            if args.render {
                println!("-- {frame}");
                print!("{}", s.render());
            }
            frame += 1;
        })
        .with_context(|| format!("{}", args.path.display()))?;
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}

fn gen_matrix(args: GenMatrixArgs) -> Result<()> {
    let tensor = PayoffTensor::random(&args.shape, args.seed, args.zero_sum)?;
    match &args.out {
        Some(p) => fs::write(p, tensor.to_text()).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{}", tensor.to_text()),
    }
    Ok(())
}

/// Server records are converted to tournament records over the agent names
/// they mention.
fn load_records(text: &str) -> Result<(Vec<String>, Vec<GameRecord>)> {
    if let Ok(parsed) = tournament::parse_records(text) {
        return Ok(parsed);
    }
    let mut stats = server::ServerStats::default();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let m: MatchSummary = serde_json::from_str(line).with_context(|| format!("records line {}", i + 1))?;
        stats.completed.push(m);
    }
    Ok(stats.tournament_records())
}

fn report(args: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.records).with_context(|| format!("reading {}", args.records.display()))?;
    let (labels, records) = load_records(&text)?;
    let seats = records.iter().map(|r| r.ranks.len()).max().unwrap_or(0);
    if records.iter().any(|r| r.ranks.len() != seats) {
        bail!("records mix games of different sizes");
    }
    println!("{}", tournament::write_reports(&args.out, &labels, seats, &records)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Play(a) => play(a),
        Command::Tournament(a) => run_tournament(a),
        Command::Serve(a) => serve(a),
        Command::Replay(a) => replay(a),
        Command::GenMatrix(a) => gen_matrix(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
