//! Tron light cycles on a walled rows×cols arena.
//!
//! Every move leaves a trail wall behind. A player crashes when it drives into
//! the arena wall, any trail, another head, or the cell another player enters
//! on the same step. Surviving a move pays +1, crashing −1, and the last player
//! standing, if alone, collects +10 on the final step. Dead players' trails
//! stay on the board.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::GameError;
use crate::game::{Action, Environment, JointAction, Observation, PlayerId, Transition};

pub const MAX_PLAYERS: usize = 10;
pub const SURVIVE_REWARD: f64 = 1.0;
pub const CRASH_REWARD: f64 = -1.0;
pub const WINNER_BONUS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Forward,
    Left,
    Right,
}

impl Turn {
    pub const ALL: [Turn; 3] = [Turn::Forward, Turn::Left, Turn::Right];
}

impl fmt::Display for Turn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Turn::Forward => "forward",
            Turn::Left => "left",
            Turn::Right => "right",
        })
    }
}

impl FromStr for Turn {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Turn::Forward),
            "left" => Ok(Turn::Left),
            "right" => Ok(Turn::Right),
            _ => Err(GameError::BadAction(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    /// (row, col) unit step.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Heading::North => (-1, 0),
            Heading::East => (0, 1),
            Heading::South => (1, 0),
            Heading::West => (0, -1),
        }
    }

    pub fn turned(self, turn: Turn) -> Heading {
        use Heading::*;
        match (turn, self) {
            (Turn::Forward, h) => h,
            (Turn::Left, North) => West,
            (Turn::Left, West) => South,
            (Turn::Left, South) => East,
            (Turn::Left, East) => North,
            (Turn::Right, North) => East,
            (Turn::Right, East) => South,
            (Turn::Right, South) => West,
            (Turn::Right, West) => North,
        }
    }
}

/// Whether all living players move at once or one at a time in seat order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TronMode {
    #[default]
    Simultaneous,
    Sequential,
}

/// What a player observes: the whole arena, or an egocentric square window
/// of side `2 * radius + 1` rotated so the player's heading points up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TronView {
    #[default]
    Full,
    Window(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Open,
    Wall,
    Trail(u8),
    Head(u8),
}

impl Cell {
    pub fn to_char(self) -> char {
        match self {
            Cell::Open => '.',
            Cell::Wall => '#',
            Cell::Trail(p) => (b'a' + p) as char,
            Cell::Head(p) => (b'0' + p) as char,
        }
    }

    pub fn from_char(c: char) -> Option<Cell> {
        match c {
            '.' => Some(Cell::Open),
            '#' => Some(Cell::Wall),
            'a'..='j' => Some(Cell::Trail(c as u8 - b'a')),
            '0'..='9' => Some(Cell::Head(c as u8 - b'0')),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TronPlayer {
    pub row: usize,
    pub col: usize,
    pub heading: Heading,
    pub alive: bool,
    pub crash_step: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tron {
    rows: usize,
    cols: usize,
    mode: TronMode,
    view: TronView,
    #[serde(serialize_with = "ser_arena", deserialize_with = "de_arena")]
    arena: Vec<Vec<Cell>>,
    players: Vec<TronPlayer>,
    step_count: u64,
    next_seat: usize,
}

fn ser_arena<S: Serializer>(arena: &[Vec<Cell>], s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<String> = arena.iter().map(|r| r.iter().map(|c| c.to_char()).collect()).collect();
    rows.serialize(s)
}

fn de_arena<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Cell>>, D::Error> {
    let rows = Vec::<String>::deserialize(d)?;
    rows.iter()
        .map(|r| {
            r.chars()
                .map(|c| Cell::from_char(c).ok_or_else(|| serde::de::Error::custom(format!("bad arena cell {c:?}"))))
                .collect()
        })
        .collect()
}

/// Head position and heading of one player as shown in the full view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TronPlayerView {
    pub row: usize,
    pub col: usize,
    pub heading: Heading,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TronObservation {
    pub me: usize,
    pub alive: bool,
    /// Rows of arena characters: `.` open, `#` wall, `0`-`9` heads,
    /// `a`-`j` trails by owner.
    pub grid: Vec<String>,
    /// True when `grid` is an egocentric window with the heading pointing up.
    pub egocentric: bool,
    /// Every player's head; empty for windowed views.
    pub players: Vec<TronPlayerView>,
}

impl TronObservation {
    /// Whether the cells reached by forward, left and right are open.
    pub fn clearance(&self) -> [bool; 3] {
        let open = |r: isize, c: isize| -> bool {
            r >= 0
                && c >= 0
                && self
                    .grid
                    .get(r as usize)
                    .and_then(|row| row.as_bytes().get(c as usize))
                    .is_some_and(|b| *b == b'.')
        };
        if self.egocentric {
            let w = (self.grid.len() / 2) as isize;
            [open(w - 1, w), open(w, w - 1), open(w, w + 1)]
        } else {
            let me = &self.players[self.me];
            Turn::ALL.map(|t| {
                let (dr, dc) = me.heading.turned(t).delta();
                open(me.row as isize + dr, me.col as isize + dc)
            })
        }
    }
}

/// Start cells equally spaced by angle on a circle of radius
/// `min(rows, cols) / 3` around the arena centre, each heading toward the
/// centre. Seat 0 sits straight above the centre.
pub fn spawn_positions(rows: usize, cols: usize, players: usize) -> Result<Vec<(usize, usize, Heading)>, GameError> {
    if players == 0 {
        return Err(GameError::InvalidConfig("tron needs at least one player".into()));
    }
    if players > MAX_PLAYERS {
        return Err(GameError::InvalidConfig(format!("tron supports at most {MAX_PLAYERS} players")));
    }
    let too_small = || {
        GameError::InvalidConfig(format!("a {rows}x{cols} arena cannot hold {players} players"))
    };
    if rows < 3 || cols < 3 {
        return Err(too_small());
    }
    let radius = rows.min(cols) as f64 / 3.0;
    let (cr, cc) = ((rows - 1) as f64 / 2.0, (cols - 1) as f64 / 2.0);
    let mut out = Vec::with_capacity(players);
    for i in 0..players {
        let angle = 2.0 * PI * i as f64 / players as f64;
        let r = (cr - radius * angle.cos()).round();
        let c = (cc + radius * angle.sin()).round();
        if r < 1.0 || c < 1.0 || r > (rows - 2) as f64 || c > (cols - 2) as f64 {
            return Err(too_small());
        }
        let (r, c) = (r as usize, c as usize);
        if out.iter().any(|(pr, pc, _)| (*pr, *pc) == (r, c)) {
            return Err(too_small());
        }
        let (dr, dc) = (cr - r as f64, cc - c as f64);
        let heading = if dr.abs() >= dc.abs() {
            if dr >= 0.0 {
                Heading::South
            } else {
                Heading::North
            }
        } else if dc > 0.0 {
            Heading::East
        } else {
            Heading::West
        };
        out.push((r, c, heading));
    }
    Ok(out)
}

impl Tron {
    pub fn new(rows: usize, cols: usize, players: usize, mode: TronMode, view: TronView) -> Result<Self, GameError> {
        let spawns = spawn_positions(rows, cols, players)?;
        let mut arena = vec![vec![Cell::Open; cols]; rows];
        for (r, row) in arena.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                if r == 0 || c == 0 || r + 1 == rows || c + 1 == cols {
                    *cell = Cell::Wall;
                }
            }
        }
        let players = spawns
            .into_iter()
            .enumerate()
            .map(|(i, (row, col, heading))| {
                arena[row][col] = Cell::Head(i as u8);
                TronPlayer {
                    row,
                    col,
                    heading,
                    alive: true,
                    crash_step: None,
                }
            })
            .collect();
        Ok(Tron {
            rows,
            cols,
            mode,
            view,
            arena,
            players,
            step_count: 0,
            next_seat: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mode(&self) -> TronMode {
        self.mode
    }

    pub fn players(&self) -> &[TronPlayer] {
        &self.players
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.arena[row][col]
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn alive_count(&self) -> usize {
        self.players.iter().filter(|p| p.alive).count()
    }

    pub fn open_cells(&self) -> usize {
        self.arena.iter().flatten().filter(|c| **c == Cell::Open).count()
    }

    /// Returns a copy with one cell overwritten, for building test positions.
    pub fn with_cell(&self, row: usize, col: usize, cell: Cell) -> Self {
        let mut t = self.clone();
        t.arena[row][col] = cell;
        t
    }

    /// Returns a copy with player `p` moved and turned, for building test positions.
    pub fn with_player_at(&self, p: usize, row: usize, col: usize, heading: Heading) -> Self {
        let mut t = self.clone();
        let old = &t.players[p];
        t.arena[old.row][old.col] = Cell::Open;
        t.players[p].row = row;
        t.players[p].col = col;
        t.players[p].heading = heading;
        t.arena[row][col] = Cell::Head(p as u8);
        t
    }

    fn terminal(&self) -> bool {
        let alive = self.alive_count();
        if self.players.len() >= 2 {
            alive <= 1
        } else {
            alive == 0
        }
    }

    fn target(&self, p: usize, turn: Turn) -> (Heading, usize, usize) {
        let me = &self.players[p];
        let heading = me.heading.turned(turn);
        let (dr, dc) = heading.delta();
        // Heads are always interior, so one step stays on the grid.
        let row = (me.row as isize + dr) as usize;
        let col = (me.col as isize + dc) as usize;
        (heading, row, col)
    }

    fn next_alive_after(&self, seat: usize) -> usize {
        let n = self.players.len();
        (1..=n).map(|k| (seat + k) % n).find(|s| self.players[*s].alive).unwrap_or(seat)
    }

    /// Applies one move per acting player.
    pub fn advance(&self, moves: &BTreeMap<PlayerId, Turn>) -> Result<Transition<Self>, GameError> {
        if self.terminal() {
            return Err(GameError::Terminal);
        }
        for p in moves.keys() {
            match self.players.get(p.0) {
                None => return Err(GameError::UnknownPlayer(*p)),
                Some(pl) if !pl.alive => return Err(GameError::NotToAct(*p)),
                _ => {}
            }
        }
        let targets: BTreeMap<usize, (Heading, usize, usize)> =
            moves.iter().map(|(p, t)| (p.0, self.target(p.0, *t))).collect();
        let mut next = self.clone();
        let mut rewards = vec![0.0; self.players.len()];
        let mut dead = BTreeSet::new();
        for (p, (_, r, c)) in &targets {
            let blocked = self.arena[*r][*c] != Cell::Open;
            let contested = targets.iter().any(|(q, (_, qr, qc))| q != p && (qr, qc) == (r, c));
            if blocked || contested {
                dead.insert(*p);
            }
        }
        for (p, (heading, r, c)) in &targets {
            let pl = &mut next.players[*p];
            next.arena[pl.row][pl.col] = Cell::Trail(*p as u8);
            if dead.contains(p) {
                pl.alive = false;
                pl.crash_step = Some(self.step_count);
                rewards[*p] = CRASH_REWARD;
            } else {
                pl.row = *r;
                pl.col = *c;
                pl.heading = *heading;
                next.arena[*r][*c] = Cell::Head(*p as u8);
                rewards[*p] = SURVIVE_REWARD;
            }
        }
        next.step_count += 1;
        if next.mode == TronMode::Sequential {
            if let Some((p, _)) = moves.iter().next() {
                next.next_seat = next.next_alive_after(p.0);
            }
        }
        next.award_bonus(&mut rewards);
        Ok(Transition { state: next, rewards })
    }

    fn award_bonus(&self, rewards: &mut [f64]) {
        if self.players.len() >= 2 && self.alive_count() == 1 {
            let winner = self.players.iter().position(|p| p.alive).unwrap();
            rewards[winner] += WINNER_BONUS;
        }
    }

    fn render_rows(&self) -> Vec<String> {
        self.arena.iter().map(|r| r.iter().map(|c| c.to_char()).collect()).collect()
    }

    fn window(&self, p: usize, radius: usize) -> Vec<String> {
        let me = &self.players[p];
        let (fr, fc) = me.heading.delta();
        let (rr, rc) = me.heading.turned(Turn::Right).delta();
        let w = radius as isize;
        (-w..=w)
            .map(|u| {
                (-w..=w)
                    .map(|v| {
                        // Up in the window is forward, right is right.
                        let row = me.row as isize - u * fr + v * rr;
                        let col = me.col as isize - u * fc + v * rc;
                        if row < 0 || col < 0 || row as usize >= self.rows || col as usize >= self.cols {
                            '#'
                        } else {
                            self.arena[row as usize][col as usize].to_char()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Observation for `p` in the given view mode.
    pub fn observe_as(&self, p: PlayerId, view: TronView) -> TronObservation {
        let alive = self.players[p.0].alive;
        match view {
            TronView::Full => TronObservation {
                me: p.0,
                alive,
                grid: self.render_rows(),
                egocentric: false,
                players: self
                    .players
                    .iter()
                    .map(|pl| TronPlayerView {
                        row: pl.row,
                        col: pl.col,
                        heading: pl.heading,
                        alive: pl.alive,
                    })
                    .collect(),
            },
            TronView::Window(radius) => TronObservation {
                me: p.0,
                alive,
                grid: self.window(p.0, radius),
                egocentric: true,
                players: Vec::new(),
            },
        }
    }
}

impl Environment for Tron {
    fn num_players(&self) -> usize {
        self.players.len()
    }

    fn is_terminal(&self) -> bool {
        self.terminal()
    }

    fn acting_players(&self) -> Vec<PlayerId> {
        if self.terminal() {
            return Vec::new();
        }
        match self.mode {
            TronMode::Simultaneous => (0..self.players.len())
                .filter(|p| self.players[*p].alive)
                .map(PlayerId)
                .collect(),
            TronMode::Sequential => {
                let seat = if self.players[self.next_seat].alive {
                    self.next_seat
                } else {
                    self.next_alive_after(self.next_seat)
                };
                vec![PlayerId(seat)]
            }
        }
    }

    fn legal_actions(&self, player: PlayerId) -> Result<Vec<Action>, GameError> {
        if self.terminal() {
            return Err(GameError::Terminal);
        }
        if !self.acting_players().contains(&player) {
            return Err(GameError::NotToAct(player));
        }
        Ok(Turn::ALL.iter().map(|t| Action::Turn(*t)).collect())
    }

    fn apply(&self, actions: &JointAction) -> Result<Transition<Self>, GameError> {
        let moves = actions
            .iter()
            .map(|(p, a)| match a {
                Action::Turn(t) => Ok((*p, *t)),
                other => Err(GameError::illegal(*p, other, "expected forward, left or right")),
            })
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        self.advance(&moves)
    }

    fn observe(&self, player: PlayerId) -> Observation {
        Observation::Tron(self.observe_as(player, self.view))
    }

    fn eliminated(&self) -> BTreeSet<PlayerId> {
        (0..self.players.len())
            .filter(|p| !self.players[*p].alive)
            .map(PlayerId)
            .collect()
    }

    /// Survivors first, then crashed players by descending crash step.
    fn finishing_order(&self) -> Result<Vec<Vec<PlayerId>>, GameError> {
        if !self.terminal() {
            return Err(GameError::NotTerminal);
        }
        let mut keyed: Vec<(u64, usize)> = self
            .players
            .iter()
            .enumerate()
            .map(|(i, p)| (p.crash_step.map_or(u64::MAX, |s| s), i))
            .collect();
        keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut blocks: Vec<Vec<PlayerId>> = Vec::new();
        let mut last = None;
        for (key, i) in keyed {
            if last == Some(key) {
                blocks.last_mut().unwrap().push(PlayerId(i));
            } else {
                blocks.push(vec![PlayerId(i)]);
            }
            last = Some(key);
        }
        Ok(blocks)
    }

    fn render(&self) -> String {
        let mut s = self.render_rows().join("\n");
        s.push('\n');
        s
    }

    fn forfeit(&self, player: PlayerId) -> Option<Transition<Self>> {
        let pl = self.players.get(player.0)?;
        if !pl.alive || self.terminal() {
            return None;
        }
        let mut next = self.clone();
        let mut rewards = vec![0.0; self.players.len()];
        let pl = &mut next.players[player.0];
        pl.alive = false;
        pl.crash_step = Some(self.step_count);
        next.arena[pl.row][pl.col] = Cell::Trail(player.0 as u8);
        rewards[player.0] = CRASH_REWARD;
        next.step_count += 1;
        if next.mode == TronMode::Sequential && next.next_seat == player.0 {
            next.next_seat = next.next_alive_after(player.0);
        }
        next.award_bonus(&mut rewards);
        Some(Transition { state: next, rewards })
    }
}
