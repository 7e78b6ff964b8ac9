//! Blokus on the standard 20×20 board for two to four players.
//!
//! Each player owns one copy of the 21 free polyominoes of one to five cells.
//! A player's first piece must cover their start corner; every later piece
//! must touch one of their own pieces at a corner and never along an edge.
//! A placement pays its cell count. A player without any legal placement must
//! pass (reward 0); the game ends once every player has passed in a row.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::game::{Action, Environment, JointAction, Observation, PlayerId, Transition};
use crate::ranking::blocks_by_score;

pub const SIZE: usize = 20;
const FULL_ROW: u32 = (1 << SIZE) - 1;

/// Start corners for seats 0-3, clockwise from the top left.
pub const START_CORNERS: [(usize, usize); 4] = [(0, 0), (0, SIZE - 1), (SIZE - 1, SIZE - 1), (SIZE - 1, 0)];

/// Piece names and base shapes. Pieces up to four cells carry their size in
/// the name; pentominoes use the usual letters.
const PIECE_SHAPES: [(&str, &[(u8, u8)]); 21] = [
    ("I1", &[(0, 0)]),
    ("I2", &[(0, 0), (0, 1)]),
    ("I3", &[(0, 0), (0, 1), (0, 2)]),
    ("V3", &[(0, 0), (1, 0), (1, 1)]),
    ("I4", &[(0, 0), (0, 1), (0, 2), (0, 3)]),
    ("L4", &[(0, 0), (1, 0), (2, 0), (2, 1)]),
    ("T4", &[(0, 0), (0, 1), (0, 2), (1, 1)]),
    ("O4", &[(0, 0), (0, 1), (1, 0), (1, 1)]),
    ("Z4", &[(0, 0), (0, 1), (1, 1), (1, 2)]),
    ("F", &[(0, 1), (0, 2), (1, 0), (1, 1), (2, 1)]),
    ("I", &[(0, 0), (0, 1), (0, 2), (0, 3), (0, 4)]),
    ("L", &[(0, 0), (1, 0), (2, 0), (3, 0), (3, 1)]),
    ("N", &[(0, 0), (0, 1), (1, 1), (1, 2), (1, 3)]),
    ("P", &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 0)]),
    ("T", &[(0, 0), (0, 1), (0, 2), (1, 1), (2, 1)]),
    ("U", &[(0, 0), (0, 2), (1, 0), (1, 1), (1, 2)]),
    ("V", &[(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]),
    ("W", &[(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)]),
    ("X", &[(0, 1), (1, 0), (1, 1), (1, 2), (2, 1)]),
    ("Y", &[(0, 1), (1, 0), (1, 1), (2, 1), (3, 1)]),
    ("Z", &[(0, 0), (0, 1), (1, 1), (2, 1), (2, 2)]),
];

pub const PIECE_COUNT: usize = PIECE_SHAPES.len();
const ALL_PIECES: u32 = (1 << PIECE_COUNT) - 1;

/// One distinct rotation/reflection of a piece, normalized to the origin.
#[derive(Debug, Clone)]
pub struct Orientation {
    pub cells: Vec<(u8, u8)>,
    pub height: usize,
    pub width: usize,
    row_masks: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub name: &'static str,
    pub size: usize,
    pub orientations: Vec<Orientation>,
}

/// The 21 free polyominoes with their distinct orientations.
#[derive(Debug)]
pub struct PieceSet {
    pub pieces: Vec<Piece>,
}

fn normalize(cells: &[(i32, i32)]) -> Vec<(u8, u8)> {
    let min_r = cells.iter().map(|c| c.0).min().unwrap();
    let min_c = cells.iter().map(|c| c.1).min().unwrap();
    let mut out: Vec<(u8, u8)> = cells.iter().map(|(r, c)| ((r - min_r) as u8, (c - min_c) as u8)).collect();
    out.sort();
    out
}

fn orientations_of(base: &[(u8, u8)]) -> Vec<Orientation> {
    let mut seen: Vec<Vec<(u8, u8)>> = Vec::new();
    for flip in [false, true] {
        let mut cur: Vec<(i32, i32)> = base
            .iter()
            .map(|(r, c)| (*r as i32, if flip { -(*c as i32) } else { *c as i32 }))
            .collect();
        for _ in 0..4 {
            let n = normalize(&cur);
            if !seen.contains(&n) {
                seen.push(n);
            }
            cur = cur.iter().map(|(r, c)| (*c, -*r)).collect();
        }
    }
    seen.into_iter()
        .map(|cells| {
            let height = cells.iter().map(|c| c.0 as usize).max().unwrap() + 1;
            let width = cells.iter().map(|c| c.1 as usize).max().unwrap() + 1;
            let mut row_masks = vec![0u32; height];
            for (r, c) in &cells {
                row_masks[*r as usize] |= 1 << c;
            }
            Orientation {
                cells,
                height,
                width,
                row_masks,
            }
        })
        .collect()
}

pub fn piece_set() -> &'static PieceSet {
    static SET: OnceLock<PieceSet> = OnceLock::new();
    SET.get_or_init(|| PieceSet {
        pieces: PIECE_SHAPES
            .iter()
            .map(|(name, cells)| Piece {
                name,
                size: cells.len(),
                orientations: orientations_of(cells),
            })
            .collect(),
    })
}

pub fn piece_index(name: &str) -> Option<usize> {
    PIECE_SHAPES.iter().position(|(n, _)| *n == name)
}

/// A piece, one of its orientations, and the board cell of the
/// orientation's top-left bounding-box corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    pub piece: u8,
    pub orientation: u8,
    pub row: u8,
    pub col: u8,
}

impl Placement {
    pub fn new(piece: usize, orientation: usize, row: usize, col: usize) -> Self {
        Placement {
            piece: piece as u8,
            orientation: orientation as u8,
            row: row as u8,
            col: col as u8,
        }
    }

    pub fn size(&self) -> usize {
        piece_set().pieces[self.piece as usize].size
    }

    /// Board cells covered, or `None` when the piece/orientation is unknown.
    pub fn cells(&self) -> Option<Vec<(usize, usize)>> {
        let o = piece_set()
            .pieces
            .get(self.piece as usize)?
            .orientations
            .get(self.orientation as usize)?;
        Some(
            o.cells
                .iter()
                .map(|(r, c)| (self.row as usize + *r as usize, self.col as usize + *c as usize))
                .collect(),
        )
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = PIECE_SHAPES.get(self.piece as usize).map_or("?", |p| p.0);
        write!(f, "{}:{}:{}:{}", name, self.orientation, self.row, self.col)
    }
}

impl FromStr for Placement {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GameError::BadAction(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let [name, o, r, c] = parts.as_slice() else {
            return Err(bad());
        };
        let piece = piece_index(name).ok_or_else(bad)?;
        let orientation: u8 = o.parse().map_err(|_| bad())?;
        let row: u8 = r.parse().map_err(|_| bad())?;
        let col: u8 = c.parse().map_err(|_| bad())?;
        Ok(Placement {
            piece: piece as u8,
            orientation,
            row,
            col,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blokus {
    players: usize,
    /// Per player, one bit per column for each row.
    own: Vec<[u32; SIZE]>,
    /// Per player, bit i set while piece i is still in hand.
    remaining: Vec<u32>,
    control: Vec<u32>,
    passed: Vec<bool>,
    to_move: usize,
    consecutive_passes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlokusObservation {
    pub me: usize,
    pub to_move: usize,
    /// 20 rows of `.` or the owning seat digit.
    pub board: Vec<String>,
    /// Piece names still in hand, per player.
    pub remaining: Vec<Vec<String>>,
    pub control: Vec<u32>,
}

/// Masks derived from one player's cells, used by placement checks.
struct Masks {
    occupied: [u32; SIZE],
    /// Empty cells sharing an edge with the player's cells.
    edge: [u32; SIZE],
    /// Cells a new piece may touch: the start corner before the first move,
    /// otherwise diagonal neighbours of the player's cells.
    contact: [u32; SIZE],
}

impl Blokus {
    pub fn new(players: usize) -> Result<Self, GameError> {
        if !(2..=4).contains(&players) {
            return Err(GameError::InvalidConfig(format!("blokus supports 2 to 4 players, got {players}")));
        }
        Ok(Blokus {
            players,
            own: vec![[0; SIZE]; players],
            remaining: vec![ALL_PIECES; players],
            control: vec![0; players],
            passed: vec![false; players],
            to_move: 0,
            consecutive_passes: 0,
        })
    }

    pub fn to_move(&self) -> PlayerId {
        PlayerId(self.to_move)
    }

    pub fn control(&self) -> &[u32] {
        &self.control
    }

    pub fn passed(&self) -> &[bool] {
        &self.passed
    }

    /// Owner of a board cell.
    pub fn owner(&self, row: usize, col: usize) -> Option<usize> {
        (0..self.players).find(|p| self.own[*p][row] >> col & 1 == 1)
    }

    pub fn has_piece(&self, player: PlayerId, piece: usize) -> bool {
        self.remaining[player.0] >> piece & 1 == 1
    }

    pub fn remaining_pieces(&self, player: PlayerId) -> Vec<usize> {
        (0..PIECE_COUNT).filter(|i| self.has_piece(player, *i)).collect()
    }

    fn has_started(&self, p: usize) -> bool {
        self.remaining[p] != ALL_PIECES
    }

    fn masks(&self, p: usize) -> Masks {
        let mut occupied = [0u32; SIZE];
        for own in &self.own {
            for r in 0..SIZE {
                occupied[r] |= own[r];
            }
        }
        let own = &self.own[p];
        let mut edge = [0u32; SIZE];
        let mut contact = [0u32; SIZE];
        for r in 0..SIZE {
            let above = if r > 0 { own[r - 1] } else { 0 };
            let below = if r + 1 < SIZE { own[r + 1] } else { 0 };
            edge[r] = (own[r] << 1 | own[r] >> 1 | above | below) & FULL_ROW;
            contact[r] = (above << 1 | above >> 1 | below << 1 | below >> 1) & FULL_ROW & !edge[r] & !occupied[r];
        }
        if !self.has_started(p) {
            contact = [0; SIZE];
            let (r, c) = START_CORNERS[p];
            if occupied[r] >> c & 1 == 0 {
                contact[r] = 1 << c;
            }
        }
        Masks {
            occupied,
            edge,
            contact,
        }
    }

    fn fits(o: &Orientation, row: usize, col: usize, m: &Masks) -> bool {
        if row + o.height > SIZE || col + o.width > SIZE {
            return false;
        }
        let mut touches = false;
        for (i, mask) in o.row_masks.iter().enumerate() {
            let shifted = mask << col;
            let r = row + i;
            if shifted & (m.occupied[r] | m.edge[r]) != 0 {
                return false;
            }
            touches |= shifted & m.contact[r] != 0;
        }
        touches
    }

    /// Checks a placement against the rules for the player to move.
    pub fn check_placement(&self, player: PlayerId, placement: &Placement) -> Result<(), GameError> {
        let piece = placement.piece as usize;
        let o = piece_set()
            .pieces
            .get(piece)
            .and_then(|p| p.orientations.get(placement.orientation as usize))
            .ok_or_else(|| GameError::illegal(player, placement, "unknown piece or orientation"))?;
        if !self.has_piece(player, piece) {
            return Err(GameError::illegal(player, placement, "piece already placed"));
        }
        if !Self::fits(o, placement.row as usize, placement.col as usize, &self.masks(player.0)) {
            return Err(GameError::illegal(player, placement, "placement breaks the contact rules"));
        }
        Ok(())
    }

    /// Every legal placement for `player`, ordered by piece, orientation,
    /// row and column.
    pub fn enumerate_placements(&self, player: PlayerId) -> Vec<Placement> {
        let mut out = Vec::new();
        self.scan(player.0, |pl| {
            out.push(pl);
            true
        });
        out
    }

    pub fn has_any_placement(&self, player: PlayerId) -> bool {
        let mut found = false;
        self.scan(player.0, |_| {
            found = true;
            false
        });
        found
    }

    /// Visits legal placements until `visit` returns false. Only anchors that
    /// put some piece cell on a contact cell are examined.
    fn scan(&self, p: usize, mut visit: impl FnMut(Placement) -> bool) {
        let m = self.masks(p);
        let contacts: Vec<(usize, usize)> = (0..SIZE)
            .flat_map(|r| (0..SIZE).filter(move |c| m.contact[r] >> c & 1 == 1).map(move |c| (r, c)))
            .collect();
        if contacts.is_empty() {
            return;
        }
        for (pi, piece) in piece_set().pieces.iter().enumerate() {
            if self.remaining[p] >> pi & 1 == 0 {
                continue;
            }
            for (oi, o) in piece.orientations.iter().enumerate() {
                let mut anchors = [0u32; SIZE];
                for (cr, cc) in &contacts {
                    for (dr, dc) in &o.cells {
                        let (dr, dc) = (*dr as usize, *dc as usize);
                        if *cr >= dr && *cc >= dc {
                            anchors[cr - dr] |= 1 << (cc - dc);
                        }
                    }
                }
                for (r, bits) in anchors.iter().enumerate() {
                    let mut bits = *bits;
                    while bits != 0 {
                        let c = bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        if Self::fits(o, r, c, &m) && !visit(Placement::new(pi, oi, r, c)) {
                            return;
                        }
                    }
                }
            }
        }
    }

    fn next_seat(&self) -> usize {
        (self.to_move + 1) % self.players
    }

    /// Places a piece for the player to move.
    pub fn place(&self, player: PlayerId, placement: &Placement) -> Result<Transition<Self>, GameError> {
        self.check_turn(player)?;
        self.check_placement(player, placement)?;
        let mut next = self.clone();
        for (r, c) in placement.cells().expect("checked above") {
            next.own[player.0][r] |= 1 << c;
        }
        let size = placement.size();
        next.remaining[player.0] &= !(1 << placement.piece);
        next.control[player.0] += size as u32;
        next.passed[player.0] = false;
        next.consecutive_passes = 0;
        next.to_move = self.next_seat();
        let mut rewards = vec![0.0; self.players];
        rewards[player.0] = size as f64;
        Ok(Transition { state: next, rewards })
    }

    /// Passes; legal only when no placement exists.
    pub fn pass(&self, player: PlayerId) -> Result<Transition<Self>, GameError> {
        self.check_turn(player)?;
        if self.has_any_placement(player) {
            return Err(GameError::illegal(player, "pass", "a legal placement exists"));
        }
        let mut next = self.clone();
        next.passed[player.0] = true;
        next.consecutive_passes += 1;
        next.to_move = self.next_seat();
        Ok(Transition {
            state: next,
            rewards: vec![0.0; self.players],
        })
    }

    fn check_turn(&self, player: PlayerId) -> Result<(), GameError> {
        if self.is_terminal() {
            return Err(GameError::Terminal);
        }
        if player.0 != self.to_move {
            return Err(GameError::NotToAct(player));
        }
        Ok(())
    }

    fn board_rows(&self) -> Vec<String> {
        (0..SIZE)
            .map(|r| {
                (0..SIZE)
                    .map(|c| match self.owner(r, c) {
                        Some(p) => (b'0' + p as u8) as char,
                        None => '.',
                    })
                    .collect()
            })
            .collect()
    }
}

impl Environment for Blokus {
    fn num_players(&self) -> usize {
        self.players
    }

    fn is_terminal(&self) -> bool {
        self.consecutive_passes >= self.players
    }

    fn acting_players(&self) -> Vec<PlayerId> {
        if self.is_terminal() {
            Vec::new()
        } else {
            vec![PlayerId(self.to_move)]
        }
    }

    fn legal_actions(&self, player: PlayerId) -> Result<Vec<Action>, GameError> {
        self.check_turn(player)?;
        let placements = self.enumerate_placements(player);
        if placements.is_empty() {
            Ok(vec![Action::Pass])
        } else {
            Ok(placements.into_iter().map(Action::Place).collect())
        }
    }

    fn apply(&self, actions: &JointAction) -> Result<Transition<Self>, GameError> {
        let (player, action) = actions.iter().next().ok_or(GameError::MissingAction(self.to_move()))?;
        match action {
            Action::Place(p) => self.place(*player, p),
            Action::Pass => self.pass(*player),
            other => Err(GameError::illegal(*player, other, "expected a placement or pass")),
        }
    }

    fn observe(&self, player: PlayerId) -> Observation {
        Observation::Blokus(BlokusObservation {
            me: player.0,
            to_move: self.to_move,
            board: self.board_rows(),
            remaining: (0..self.players)
                .map(|p| {
                    self.remaining_pieces(PlayerId(p))
                        .into_iter()
                        .map(|i| PIECE_SHAPES[i].0.to_string())
                        .collect()
                })
                .collect(),
            control: self.control.clone(),
        })
    }

    fn eliminated(&self) -> BTreeSet<PlayerId> {
        BTreeSet::new()
    }

    fn finishing_order(&self) -> Result<Vec<Vec<PlayerId>>, GameError> {
        if !self.is_terminal() {
            return Err(GameError::NotTerminal);
        }
        let scores: Vec<f64> = self.control.iter().map(|c| *c as f64).collect();
        Ok(blocks_by_score(&scores))
    }

    fn render(&self) -> String {
        let mut s = self.board_rows().join("\n");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::apply_tie_rounding;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use std::collections::HashSet;

    #[test]
    fn piece_set_inventory() {
        let set = piece_set();
        assert_eq!(set.pieces.len(), 21);
        let mut sizes = [0usize; 6];
        for p in &set.pieces {
            sizes[p.size] += 1;
        }
        assert_eq!(sizes, [0, 1, 1, 2, 5, 12]);
        assert_eq!(set.pieces.iter().map(|p| p.size).sum::<usize>(), 89);
        assert_eq!(set.pieces.iter().map(|p| p.orientations.len()).sum::<usize>(), 91);
    }

    #[test]
    fn placement_tokens() {
        let p: Placement = "F:3:10:5".parse().unwrap();
        assert_eq!(p, Placement::new(piece_index("F").unwrap(), 3, 10, 5));
        assert!("Q:0:0:0".parse::<Placement>().is_err());
        assert!("F:0:0".parse::<Placement>().is_err());
    }

    /// Independent oracle: rebuild orientations and test every anchor cell by cell.
    fn oracle_placements(b: &Blokus, p: usize) -> HashSet<(usize, Vec<(usize, usize)>)> {
        let owner = |r: i32, c: i32| -> Option<usize> {
            if r < 0 || c < 0 || r >= SIZE as i32 || c >= SIZE as i32 {
                None
            } else {
                b.owner(r as usize, c as usize)
            }
        };
        let started = (0..SIZE).any(|r| (0..SIZE).any(|c| b.owner(r, c) == Some(p)));
        let mut out = HashSet::new();
        for (pi, (_, base)) in PIECE_SHAPES.iter().enumerate() {
            if !b.has_piece(PlayerId(p), pi) {
                continue;
            }
            let mut shapes: HashSet<Vec<(i32, i32)>> = HashSet::new();
            for mirror in [1, -1] {
                for rot in 0..4 {
                    let mut cells: Vec<(i32, i32)> = base
                        .iter()
                        .map(|(r, c)| {
                            let (mut r, mut c) = (*r as i32, *c as i32 * mirror);
                            for _ in 0..rot {
                                (r, c) = (-c, r);
                            }
                            (r, c)
                        })
                        .collect();
                    let mr = cells.iter().map(|x| x.0).min().unwrap();
                    let mc = cells.iter().map(|x| x.1).min().unwrap();
                    for x in cells.iter_mut() {
                        *x = (x.0 - mr, x.1 - mc);
                    }
                    cells.sort();
                    shapes.insert(cells);
                }
            }
            for shape in shapes {
                for ar in 0..SIZE as i32 {
                    for ac in 0..SIZE as i32 {
                        let cells: Vec<(i32, i32)> = shape.iter().map(|(r, c)| (r + ar, c + ac)).collect();
                        let in_bounds_empty = cells
                            .iter()
                            .all(|(r, c)| *r < SIZE as i32 && *c < SIZE as i32 && owner(*r, *c).is_none());
                        if !in_bounds_empty {
                            continue;
                        }
                        let edge = cells.iter().any(|(r, c)| {
                            [(0, 1), (0, -1), (1, 0), (-1, 0)].iter().any(|(dr, dc)| owner(r + dr, c + dc) == Some(p))
                        });
                        let diag = cells.iter().any(|(r, c)| {
                            [(1, 1), (1, -1), (-1, 1), (-1, -1)].iter().any(|(dr, dc)| owner(r + dr, c + dc) == Some(p))
                        });
                        let corner = START_CORNERS[p];
                        let ok = if started {
                            !edge && diag
                        } else {
                            cells.contains(&(corner.0 as i32, corner.1 as i32))
                        };
                        if ok {
                            let mut set: Vec<(usize, usize)> = cells.iter().map(|(r, c)| (*r as usize, *c as usize)).collect();
                            set.sort();
                            out.insert((pi, set));
                        }
                    }
                }
            }
        }
        out
    }

    fn engine_set(b: &Blokus, p: usize) -> HashSet<(usize, Vec<(usize, usize)>)> {
        b.enumerate_placements(PlayerId(p))
            .into_iter()
            .map(|pl| {
                let mut cells = pl.cells().unwrap();
                cells.sort();
                (pl.piece as usize, cells)
            })
            .collect()
    }

    #[test]
    fn first_move_counts() {
        let b = Blokus::new(4).unwrap();
        let all = b.enumerate_placements(PlayerId(0));
        assert_eq!(all.len(), 58);
        let mono = piece_index("I1").unwrap() as u8;
        assert_eq!(all.iter().filter(|p| p.piece == mono).count(), 1);
        assert_eq!(engine_set(&b, 0), oracle_placements(&b, 0));
    }

    #[test]
    fn random_midgame_states_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..6 {
            let mut b = Blokus::new(4).unwrap();
            for _ in 0..rand::Rng::gen_range(&mut rng, 4..50) {
                if b.is_terminal() {
                    break;
                }
                let p = b.to_move;
                let engine = engine_set(&b, p);
                assert_eq!(engine, oracle_placements(&b, p));
                let legal = b.legal_actions(PlayerId(p)).unwrap();
                let a = *legal.choose(&mut rng).unwrap();
                let mut j = JointAction::new();
                j.insert(PlayerId(p), a);
                b = b.apply(&j).unwrap().state;
            }
        }
    }

    #[test]
    fn rewards_are_piece_sizes() {
        let b = Blokus::new(4).unwrap();
        let pent = b
            .enumerate_placements(PlayerId(0))
            .into_iter()
            .find(|p| p.size() == 5)
            .unwrap();
        let t = b.place(PlayerId(0), &pent).unwrap();
        assert_eq!(t.rewards, vec![5.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.state.control()[0], 5);
        let dom = t
            .state
            .enumerate_placements(PlayerId(1))
            .into_iter()
            .find(|p| p.size() == 2)
            .unwrap();
        let t = t.state.place(PlayerId(1), &dom).unwrap();
        assert_eq!(t.rewards[1], 2.0);
        assert!(!t.state.has_piece(PlayerId(1), dom.piece as usize));
    }

    #[test]
    fn pass_only_without_moves() {
        let b = Blokus::new(2).unwrap();
        assert!(b.pass(PlayerId(0)).is_err());
        // Fill the board around seat 0's corner with seat 1's cells.
        let mut stuck = b.clone();
        stuck.own[1][0] = 0b1;
        stuck.own[1][1] = 0b11;
        assert!(stuck.enumerate_placements(PlayerId(0)).is_empty());
        assert_eq!(stuck.legal_actions(PlayerId(0)).unwrap(), vec![Action::Pass]);
        let t = stuck.pass(PlayerId(0)).unwrap();
        assert_eq!(t.rewards, vec![0.0, 0.0]);
        assert!(t.state.passed()[0]);
    }

    #[test]
    fn illegal_placements_rejected() {
        let b = Blokus::new(4).unwrap();
        // Not covering the start corner.
        assert!(b.place(PlayerId(0), &Placement::new(0, 0, 5, 5)).is_err());
        assert!(b.place(PlayerId(0), &Placement::new(0, 3, 0, 0)).is_err());
        assert!(b.place(PlayerId(1), &Placement::new(0, 0, 0, 19)).is_err());
        let t = b.place(PlayerId(0), &Placement::new(0, 0, 0, 0)).unwrap();
        // Edge contact with own piece.
        let b2 = t.state.place(PlayerId(1), &Placement::new(0, 0, 0, 19)).unwrap().state;
        let b3 = b2.place(PlayerId(2), &Placement::new(0, 0, 19, 19)).unwrap().state;
        let b4 = b3.place(PlayerId(3), &Placement::new(0, 0, 19, 0)).unwrap().state;
        assert!(b4.place(PlayerId(0), &Placement::new(1, 0, 0, 1)).is_err());
        assert!(b4.place(PlayerId(0), &Placement::new(1, 0, 1, 1)).is_ok());
        // Already used piece.
        assert!(b4.place(PlayerId(0), &Placement::new(0, 0, 1, 1)).is_err());
    }

    #[test]
    fn final_ranking_ties() {
        let mut b = Blokus::new(4).unwrap();
        b.control = vec![30, 30, 25, 20];
        b.consecutive_passes = 4;
        let ranks = apply_tie_rounding(&b.finishing_order().unwrap(), 4).unwrap();
        assert_eq!(ranks, vec![2, 2, 3, 4]);
    }
}
