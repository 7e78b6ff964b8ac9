mod common;

use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use colosseum::agents::AgentSpec;
use colosseum::envs::kuhn::Kuhn;
use colosseum::rng::substream;
use colosseum::server::protocol::{ClientMessage, ServerMessage};
use colosseum::server::session::{drive_match, MatchEnd, MatchOptions, Seat, SeatEvent};
use colosseum::server::{self, choose_seats, SeatPick, ServerConfig, ServerHandle};
use colosseum::transcript::{Entry, Transcript};
use colosseum::{EnvConfig, GameState};
use common::Client;
use serde_json::{json, Value};

fn serve(menu: &[(&str, usize)], tweak: impl FnOnce(&mut ServerConfig)) -> ServerHandle {
    let mut config = ServerConfig {
        addr: "127.0.0.1:0".into(),
        menu: ServerConfig::menu_for(menu).unwrap(),
        action_timeout: Duration::from_secs(20),
        ..ServerConfig::default()
    };
    tweak(&mut config);
    server::start(config).unwrap()
}

fn wait_for(what: &str, limit: Duration, mut done: impl FnMut() -> bool) {
    let start = Instant::now();
    while !done() {
        assert!(start.elapsed() < limit, "timed out waiting for {what}");
        thread::sleep(Duration::from_millis(10));
    }
}

fn transcripts(dir: &Path, suffix: &str) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_str().unwrap();
            name.starts_with("match-") && name.ends_with(suffix)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn four_clients_finish_a_tron_match_that_replays() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.jsonl");
    let srv = serve(&[("tron", 4)], |c| {
        c.transcript_dir = Some(dir.path().to_path_buf());
        c.records_path = Some(records.clone());
    });
    let addr = srv.local_addr();
    let players: Vec<_> = (0..4)
        .map(|i| {
            thread::spawn(move || {
                let mut c = Client::join(addr, &format!("p{i}"), "tron");
                let assigned = c.recv_type("match_assigned");
                let result = c.play(|_, legal| legal[i % legal.len()].clone());
                (assigned, result)
            })
        })
        .collect();
    let outcomes: Vec<(Value, Value)> = players.into_iter().map(|h| h.join().unwrap()).collect();
    let mut seats: Vec<u64> = outcomes.iter().map(|(a, _)| a["seat"].as_u64().unwrap()).collect();
    seats.sort();
    assert_eq!(seats, vec![0, 1, 2, 3]);
    for (a, r) in &outcomes {
        assert_eq!(a["env"], "tron");
        assert!(a["config"].get("seed").is_none(), "seed leaked: {a}");
        assert_eq!(r, &outcomes[0].1);
    }
    let stats = srv.shutdown();
    assert_eq!(stats.completed.len(), 1);
    let summary = &stats.completed[0];
    assert_eq!(json!(summary.ranks), outcomes[0].1["ranks"]);

    let done = transcripts(dir.path(), ".jsonl");
    assert_eq!(done.len(), 1, "{done:?}");
    let t = Transcript::parse(&fs::read_to_string(&done[0]).unwrap()).unwrap();
    let record = t.replay(|_| {}).unwrap();
    assert_eq!(record.ranks, summary.ranks);
    assert_eq!(record.total_reward, summary.total_reward);
    assert_eq!(fs::read_to_string(&records).unwrap().lines().count(), 1);
}

#[test]
fn silent_seat_is_substituted_and_the_match_ends() {
    let dir = tempfile::tempdir().unwrap();
    let srv = serve(&[("tron", 4)], |c| {
        c.action_timeout = Duration::from_millis(150);
        c.transcript_dir = Some(dir.path().to_path_buf());
    });
    let addr = srv.local_addr();
    let silent = thread::spawn(move || {
        let mut c = Client::join(addr, "silent", "tron");
        let seat = c.recv_type("match_assigned")["seat"].as_u64().unwrap();
        let mut substituted = 0u32;
        let result = loop {
            let m = c.recv().expect("stream ended");
            if m["type"] == "error" && m["code"] == "substituted" {
                substituted += 1;
            }
            if m["type"] == "result" {
                break m;
            }
        };
        (seat, substituted, result)
    });
    let others: Vec<_> = (0..3)
        .map(|i| {
            thread::spawn(move || {
                let mut c = Client::join(addr, &format!("bot{i}"), "tron");
                c.play_first()
            })
        })
        .collect();
    for h in others {
        h.join().unwrap();
    }
    let (seat, substituted, result) = silent.join().unwrap();
    assert!(substituted >= 1);
    assert_eq!(result["substituted"], substituted);
    let stats = srv.shutdown();
    assert_eq!(stats.completed.len(), 1);
    assert_eq!(stats.completed[0].substitutions[seat as usize], substituted);

    let text = fs::read_to_string(&transcripts(dir.path(), ".jsonl")[0]).unwrap();
    let t = Transcript::parse(&text).unwrap();
    let logged = t
        .entries
        .iter()
        .filter(|e| matches!(e, Entry::Turn { substituted, .. } if substituted.iter().any(|p| p.0 == seat as usize)))
        .count();
    assert_eq!(logged as u32, substituted);
    assert!(t.replay(|_| {}).is_ok());
}

/// Records the exact bytes a seat would put on the wire and plays a fixed
/// script of actions.
struct Recorder {
    bytes: Arc<Mutex<Vec<String>>>,
    script: Vec<&'static str>,
    pending: Option<u64>,
}

impl Seat for Recorder {
    fn name(&self) -> String {
        "recorder".into()
    }
    fn send(&mut self, msg: &ServerMessage) -> bool {
        self.bytes.lock().unwrap().push(msg.encode());
        if let ServerMessage::Observation { turn, legal, .. } = msg {
            self.pending = (!legal.is_empty()).then_some(*turn);
        }
        true
    }
    fn recv_until(&mut self, _deadline: Instant) -> SeatEvent {
        match self.pending.take() {
            Some(turn) => SeatEvent::Message(ClientMessage::Action {
                turn,
                value: self.script.remove(0).into(),
            }),
            None => SeatEvent::Timeout,
        }
    }
}

fn kuhn_stream(cards: &[u8], scripts: [Vec<&'static str>; 3]) -> (Vec<String>, MatchEnd) {
    let config = EnvConfig::default_for("kuhn", 3, 0).unwrap();
    let state = GameState::from_kuhn(config, Kuhn::with_cards(cards).unwrap());
    let streams: Vec<Arc<Mutex<Vec<String>>>> = (0..3).map(|_| Arc::default()).collect();
    let mut seats: Vec<Box<dyn Seat>> = scripts
        .into_iter()
        .zip(&streams)
        .map(|(script, bytes)| -> Box<dyn Seat> {
            Box::new(Recorder {
                bytes: Arc::clone(bytes),
                script,
                pending: None,
            })
        })
        .collect();
    let report = drive_match(0, "kuhn", state, &mut seats, &MatchOptions::default());
    let seat0 = streams[0].lock().unwrap().clone();
    (seat0, report.end)
}

#[test]
fn kuhn_wire_stream_does_not_depend_on_opponent_cards() {
    // Seat 0 bets, both opponents fold: nothing about their cards may reach
    // seat 0, so its byte stream must be identical across the two deals.
    let fold = || [vec!["bet"], vec!["fold"], vec!["fold"]];
    let (a, end_a) = kuhn_stream(&[1, 2, 3], fold());
    let (b, end_b) = kuhn_stream(&[1, 3, 0], fold());
    assert_eq!(a, b);
    assert_eq!(end_a, end_b);

    // In a check-down the result differs, but nothing before it may.
    let checks = || [vec!["check"], vec!["check"], vec!["check"]];
    let (a, end_a) = kuhn_stream(&[0, 1, 2], checks());
    let (b, end_b) = kuhn_stream(&[0, 2, 1], checks());
    assert_ne!(end_a, end_b);
    let before_result = |s: &[String]| s.iter().take_while(|l| !l.contains(r#""type":"result""#)).cloned().collect::<Vec<_>>();
    assert_eq!(before_result(&a), before_result(&b));
    assert!(a.iter().all(|l| !l.contains("cards") && !l.contains("burned")));
}

#[test]
fn kuhn_clients_only_ever_see_their_own_card() {
    let srv = serve(&[("kuhn", 3)], |c| c.bots = vec![AgentSpec::Random, AgentSpec::Random]);
    let addr = srv.local_addr();
    for _ in 0..3 {
        let mut c = Client::join(addr, "solo", "kuhn");
        let seat = c.recv_type("match_assigned")["seat"].as_u64().unwrap();
        let result = c.play(|_, legal| legal.last().unwrap().clone());
        let ranks = result["ranks"].as_array().unwrap();
        assert_eq!(ranks.len(), 3);
        let total: f64 = result["total_reward"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
        assert_eq!(total, 0.0);
        let mut card = None;
        for line in &c.log {
            let m: Value = serde_json::from_str(line).unwrap();
            if m["type"] == "observation" {
                assert_eq!(m["obs"]["me"], seat);
                // One card per observation, and it never changes.
                let this = m["obs"]["card"].clone();
                assert!(card.is_none() || card.as_ref() == Some(&this));
                card = Some(this);
                assert!(m["obs"].get("cards").is_none());
            }
        }
        c.close();
    }
    assert_eq!(srv.shutdown().completed.len(), 3);
}

#[test]
fn stale_turn_is_rejected_and_not_applied() {
    let dir = tempfile::tempdir().unwrap();
    let srv = serve(&[("tron", 2)], |c| {
        c.bots = vec![AgentSpec::Scripted { epsilon: 0.0 }];
        c.transcript_dir = Some(dir.path().to_path_buf());
    });
    let mut c = Client::join(srv.local_addr(), "late", "tron");
    let seat = c.recv_type("match_assigned")["seat"].as_u64().unwrap() as usize;
    let first = c.recv_type("observation");
    assert_eq!(first["turn"], 0);
    c.act(&json!(0), "forward");
    let second = c.recv_type("observation");
    assert_eq!(second["turn"], 1);
    // A delayed duplicate of the turn-0 action, with a different value.
    c.act(&json!(0), "left");
    let err = c.recv_type("error");
    assert_eq!(err["code"], "stale_turn");
    c.act(&json!(1), "forward");
    let result = c.play_first();
    assert_eq!(result["substituted"], 0);
    let stats = srv.shutdown();
    assert_eq!(stats.completed.len(), 1);
    let t = Transcript::parse(&fs::read_to_string(&transcripts(dir.path(), ".jsonl")[0]).unwrap()).unwrap();
    let turn1 = t
        .entries
        .iter()
        .find_map(|e| match e {
            Entry::Turn { turn: 1, actions, substituted } => Some((actions.clone(), substituted.clone())),
            _ => None,
        })
        .unwrap();
    assert_eq!(turn1.0[&colosseum::PlayerId(seat)].to_string(), "forward");
    assert!(turn1.1.is_empty());
}

#[test]
fn protocol_errors_are_typed() {
    let srv = serve(&[("tictactoe", 2)], |_| {});
    let addr = srv.local_addr();

    let mut c = Client::connect(addr);
    c.send(&json!({"type":"queue","env":"tictactoe"}));
    assert_eq!(c.recv_type("error")["code"], "not_logged_in");
    c.send(&json!({"type":"login","name":"x"}));
    c.send(&json!({"type":"queue","env":"chess"}));
    assert_eq!(c.recv_type("error")["code"], "unknown_env");
    c.send(&json!({"type":"action","turn":0,"value":"0,0"}));
    assert_eq!(c.recv_type("error")["code"], "not_in_match");
    c.send(&json!({"type":"queue","env":"tictactoe"}));
    c.send(&json!({"type":"queue","env":"tictactoe"}));
    assert_eq!(c.recv_type("error")["code"], "already_queued");
    c.send_raw("{not json");
    assert_eq!(c.recv_type("error")["code"], "bad_message");
    assert!(c.recv().is_none(), "malformed input disconnects");

    let mut v = Client::connect(addr);
    v.send(&json!({"type":"hello","v":99}));
    assert_eq!(v.recv_type("error")["code"], "version_mismatch");
    assert!(v.recv().is_none());

    let mut u = Client::connect(addr);
    u.send(&json!({"type":"login","name":"y","extra":1}));
    assert_eq!(u.recv_type("error")["code"], "bad_message");
}

#[test]
fn illegal_actions_are_answered_and_the_turn_waits() {
    let srv = serve(&[("tictactoe", 2)], |_| {});
    let addr = srv.local_addr();
    let a = thread::spawn(move || {
        let mut c = Client::join(addr, "a", "tictactoe");
        c.play_first()
    });
    let mut b = Client::join(addr, "b", "tictactoe");
    let mut illegal_seen = false;
    let result = loop {
        let m = b.recv().unwrap();
        match m["type"].as_str().unwrap() {
            "observation" if !m["legal"].as_array().unwrap().is_empty() => {
                if !illegal_seen {
                    b.act(&m["turn"], "9,9");
                    assert_eq!(b.recv_type("error")["code"], "illegal_action");
                    illegal_seen = true;
                }
                let first = m["legal"][0].as_str().unwrap().to_string();
                b.act(&m["turn"], &first);
            }
            "result" => break m,
            _ => {}
        }
    };
    assert_eq!(result, a.join().unwrap());
    assert_eq!(result["substituted"], 0);
    srv.shutdown();
}

#[test]
fn five_queued_for_four_seats_leaves_one_waiting() {
    let srv = serve(&[("tron", 4)], |_| {});
    let addr = srv.local_addr();
    let mut clients: Vec<Client> = (0..5).map(|i| Client::join(addr, &format!("c{i}"), "tron")).collect();
    wait_for("a match to start", Duration::from_secs(10), || srv.running() == 1);
    let stats_before = srv.stats();
    assert_eq!(stats_before.peak_running, 1);
    // Play out the four seated clients; the fifth never hears back.
    let seated: Vec<usize> = {
        let mut v = Vec::new();
        for (i, c) in clients.iter_mut().enumerate() {
            c.reader_timeout(Duration::from_millis(300));
            if let Some(m) = c.recv() {
                assert_eq!(m["type"], "match_assigned");
                v.push(i);
            }
            c.reader_timeout(Duration::from_secs(60));
        }
        v
    };
    assert_eq!(seated.len(), 4);
    let handles: Vec<_> = clients
        .into_iter()
        .enumerate()
        .map(|(i, mut c)| {
            let seated = seated.contains(&i);
            thread::spawn(move || {
                if seated {
                    c.play_first();
                }
                (i, c)
            })
        })
        .collect();
    let clients: Vec<(usize, Client)> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    wait_for("the match to finish", Duration::from_secs(10), || srv.stats().completed.len() == 1);
    assert_eq!(srv.running(), 0);
    let waiting = clients.iter().find(|(i, _)| !seated.contains(i)).unwrap();
    assert!(waiting.1.log.iter().all(|l| !l.contains("match_assigned")));
    srv.shutdown();
}

#[test]
fn capacity_bounds_running_matches() {
    let srv = serve(&[("tictactoe", 2)], |c| {
        c.max_matches = 2;
        c.action_timeout = Duration::from_secs(20);
    });
    let addr = srv.local_addr();
    let handles: Vec<_> = (0..12)
        .map(|i| {
            thread::spawn(move || {
                let mut c = Client::join(addr, &format!("c{i}"), "tictactoe");
                // Slow enough that matches overlap.
                c.play(|_, legal| {
                    thread::sleep(Duration::from_millis(5));
                    legal[0].clone()
                })
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let stats = srv.shutdown();
    assert_eq!(stats.completed.len(), 6);
    assert!(stats.peak_running <= 2, "peak {}", stats.peak_running);
    assert!(stats.peak_running >= 1);
}

#[test]
fn shutdown_aborts_in_flight_matches_without_records() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.jsonl");
    let srv = serve(&[("tron", 2)], |c| {
        c.transcript_dir = Some(dir.path().to_path_buf());
        c.records_path = Some(records.clone());
        c.action_timeout = Duration::from_secs(30);
    });
    let addr = srv.local_addr();
    let mut a = Client::join(addr, "a", "tron");
    let mut b = Client::join(addr, "b", "tron");
    a.recv_type("observation");
    b.recv_type("observation");
    // Nobody acts; the match is stuck waiting when the server stops.
    let started = Instant::now();
    let stats = srv.shutdown();
    assert!(started.elapsed() < Duration::from_secs(10));
    assert!(stats.completed.is_empty());
    assert_eq!(stats.aborted.len(), 1);
    assert!(!records.exists() || fs::read_to_string(&records).unwrap().is_empty());
    assert!(transcripts(dir.path(), ".partial").is_empty());
    let aborted = transcripts(dir.path(), ".aborted.jsonl");
    assert_eq!(aborted.len(), 1);
    let t = Transcript::parse(&fs::read_to_string(&aborted[0]).unwrap()).unwrap();
    assert!(t.recorded().is_none());
    assert!(t.replay(|_| {}).unwrap_err().message.contains("aborted"));
}

#[test]
fn restart_closes_interrupted_matches_and_never_resumes_them() {
    let live = tempfile::tempdir().unwrap();
    let crashed = tempfile::tempdir().unwrap();
    let srv = serve(&[("tron", 2)], |c| c.transcript_dir = Some(live.path().to_path_buf()));
    let addr = srv.local_addr();
    let mut a = Client::join(addr, "a", "tron");
    let mut b = Client::join(addr, "b", "tron");
    a.recv_type("observation");
    b.recv_type("observation");
    // What a crash at this moment leaves on disk.
    let partial = transcripts(live.path(), ".jsonl.partial");
    assert_eq!(partial.len(), 1);
    fs::copy(&partial[0], crashed.path().join(partial[0].file_name().unwrap())).unwrap();
    drop(srv);

    let records = crashed.path().join("records.jsonl");
    let restarted = serve(&[("tron", 2)], |c| {
        c.transcript_dir = Some(crashed.path().to_path_buf());
        c.records_path = Some(records.clone());
    });
    let stats = restarted.shutdown();
    assert_eq!(stats.recovered.len(), 1);
    assert!(stats.completed.is_empty());
    assert!(transcripts(crashed.path(), ".partial").is_empty());
    let t = Transcript::parse(&fs::read_to_string(&stats.recovered[0]).unwrap()).unwrap();
    assert!(matches!(t.entries.last(), Some(Entry::Aborted { .. })));
    assert!(t.recorded().is_none());
    assert!(!records.exists());
}

#[test]
fn bots_fill_missing_seats() {
    let srv = serve(&[("tron", 4)], |c| {
        c.bots = vec![AgentSpec::Random, AgentSpec::Scripted { epsilon: 0.1 }, AgentSpec::Scripted { epsilon: 0.5 }];
    });
    let mut c = Client::join(srv.local_addr(), "human", "tron");
    c.play_first();
    let stats = srv.shutdown();
    let agents = &stats.completed[0].agents;
    assert_eq!(agents.iter().filter(|a| a.as_str() == "human").count(), 1);
    assert_eq!(agents.iter().filter(|a| a.starts_with("bot:")).count(), 3);
}

/// Each of 12 queued agents should be seated in a third of the rounds.
#[test]
fn matchmaking_is_uniform_over_the_queue() {
    let rounds = 10_000u64;
    let mut seen = [0u64; 12];
    let mut at_seat = [[0u64; 4]; 12];
    for r in 0..rounds {
        let picks = choose_seats(12, 4, 0, &mut substream(99, "matchmaking", r)).unwrap();
        assert_eq!(picks.len(), 4);
        for (seat, p) in picks.iter().enumerate() {
            let SeatPick::Queued(i) = *p else { panic!("no bots configured") };
            seen[i] += 1;
            at_seat[i][seat] += 1;
        }
        let mut ids: Vec<_> = picks.iter().collect();
        ids.dedup();
        assert_eq!(ids.len(), 4);
    }
    let p = 1.0 / 3.0;
    let sd = (rounds as f64 * p * (1.0 - p)).sqrt();
    for (i, &n) in seen.iter().enumerate() {
        assert!((n as f64 - rounds as f64 * p).abs() <= 3.0 * sd, "agent {i}: {n}");
    }
    let q = 1.0 / 12.0;
    let sd_seat = (rounds as f64 * q * (1.0 - q)).sqrt();
    for row in at_seat {
        for n in row {
            // Six sigma: 48 cells, a looser bound keeps chance failures out.
            assert!((n as f64 - rounds as f64 * q).abs() <= 6.0 * sd_seat, "{n}");
        }
    }

    // Short queue: everyone queued plays, bots are drawn uniformly.
    let mut bot_seen = [0u64; 6];
    for r in 0..rounds {
        let picks = choose_seats(2, 4, 6, &mut substream(5, "matchmaking", r)).unwrap();
        assert_eq!(picks.iter().filter(|p| matches!(p, SeatPick::Queued(_))).count(), 2);
        for p in picks {
            if let SeatPick::Bot(b) = p {
                bot_seen[b] += 1;
            }
        }
    }
    let p = 2.0 / 6.0;
    let sd = (rounds as f64 * p * (1.0 - p)).sqrt();
    for n in bot_seen {
        assert!((n as f64 - rounds as f64 * p).abs() <= 3.0 * sd, "{n}");
    }
    assert!(choose_seats(0, 4, 10, &mut substream(0, "m", 0)).is_none());
    assert!(choose_seats(2, 4, 1, &mut substream(0, "m", 0)).is_none());
}
