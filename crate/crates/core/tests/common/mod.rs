//! A minimal blocking protocol client for integration tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use serde_json::{json, Value};

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    /// Every line received, verbatim.
    pub log: Vec<String>,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> Client {
        let stream = TcpStream::connect(addr).expect("connect");
        stream.set_read_timeout(Some(Duration::from_secs(60))).unwrap();
        let writer = stream.try_clone().unwrap();
        let mut c = Client {
            reader: BufReader::new(stream),
            writer,
            log: Vec::new(),
        };
        let hello = c.recv().expect("hello");
        assert_eq!(hello["type"], "hello");
        c
    }

    /// Connects, logs in and queues.
    pub fn join(addr: SocketAddr, name: &str, env: &str) -> Client {
        let mut c = Client::connect(addr);
        c.send(&json!({"type":"hello","v":1}));
        c.send(&json!({"type":"login","name":name}));
        c.send(&json!({"type":"queue","env":env}));
        c
    }

    pub fn send(&mut self, msg: &Value) {
        self.send_raw(&msg.to_string());
    }

    pub fn send_raw(&mut self, line: &str) {
        // A peer that already hung up is fine; the caller reads the outcome.
        let _ = self.writer.write_all(format!("{line}\n").as_bytes());
    }

    /// Next message, or `None` at end of stream.
    pub fn recv(&mut self) -> Option<Value> {
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) | Err(_) => None,
            Ok(_) => {
                let v = serde_json::from_str(line.trim_end()).unwrap_or_else(|e| panic!("bad server line {line:?}: {e}"));
                self.log.push(line);
                Some(v)
            }
        }
    }

    pub fn recv_type(&mut self, ty: &str) -> Value {
        loop {
            let m = self.recv().unwrap_or_else(|| panic!("stream ended waiting for {ty}"));
            if m["type"] == ty {
                return m;
            }
        }
    }

    pub fn act(&mut self, turn: &Value, value: &str) {
        self.send(&json!({"type":"action","turn":turn,"value":value}));
    }

    /// Answers every request with `choose(obs, legal)` until the result.
    pub fn play(&mut self, mut choose: impl FnMut(&Value, &[String]) -> String) -> Value {
        loop {
            let m = self.recv().expect("stream ended before the result");
            match m["type"].as_str().unwrap() {
                "observation" => {
                    let legal: Vec<String> = serde_json::from_value(m["legal"].clone()).unwrap();
                    if !legal.is_empty() {
                        let a = choose(&m["obs"], &legal);
                        self.act(&m["turn"], &a);
                    }
                }
                "result" => return m,
                _ => {}
            }
        }
    }

    /// Plays the first legal action every time.
    pub fn play_first(&mut self) -> Value {
        self.play(|_, legal| legal[0].clone())
    }

    pub fn reader_timeout(&mut self, t: Duration) {
        self.reader.get_ref().set_read_timeout(Some(t)).unwrap();
    }

    pub fn close(self) {
        let _ = self.writer.shutdown(std::net::Shutdown::Both);
    }
}
