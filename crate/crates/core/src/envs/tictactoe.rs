//! n-player tic-tac-toe on a rows×cols board.
//!
//! Players take turns in seat order. The first to own three cells in a row,
//! horizontally, vertically or diagonally, wins (+1) and everyone else loses
//! (−1). A full board without a line is a draw: reward 0 for all and every
//! seat tied.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::game::{Action, Environment, JointAction, Observation, PlayerId, Transition};

/// Symbol alphabet, one per seat.
pub const SYMBOLS: &[u8] = b"XOYZABCDEFGHIJKLMNPQRSTUVW";

const DIRECTIONS: [(isize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicTacToe {
    rows: usize,
    cols: usize,
    players: usize,
    cells: Vec<Option<u8>>,
    to_move: usize,
    winner: Option<usize>,
    over: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TttObservation {
    pub me: usize,
    pub to_move: usize,
    /// One string per row; `.` for empty, otherwise the owner's symbol.
    pub board: Vec<String>,
}

impl TicTacToe {
    pub fn new(rows: usize, cols: usize, players: usize) -> Result<Self, GameError> {
        if rows < 3 || cols < 3 {
            return Err(GameError::InvalidConfig(format!(
                "tic-tac-toe board must be at least 3x3, got {rows}x{cols}"
            )));
        }
        if players < 2 || players > SYMBOLS.len() {
            return Err(GameError::InvalidConfig(format!(
                "tic-tac-toe supports 2..={} players, got {players}",
                SYMBOLS.len()
            )));
        }
        Ok(TicTacToe {
            rows,
            cols,
            players,
            cells: vec![None; rows * cols],
            to_move: 0,
            winner: None,
            over: false,
        })
    }

    /// Builds a board from rows of symbols (`.` empty). The side to move is
    /// the seat after the one that has placed most recently, assuming seat
    /// order play from seat 0.
    pub fn from_rows(rows: &[&str], players: usize) -> Result<Self, GameError> {
        let mut game = TicTacToe::new(rows.len(), rows.first().map_or(0, |r| r.len()), players)?;
        let mut placed = 0;
        for (r, line) in rows.iter().enumerate() {
            if line.len() != game.cols {
                return Err(GameError::Format("ragged board".into()));
            }
            for (c, ch) in line.bytes().enumerate() {
                if ch == b'.' {
                    continue;
                }
                let owner = SYMBOLS[..players]
                    .iter()
                    .position(|s| *s == ch)
                    .ok_or_else(|| GameError::Format(format!("unknown symbol {}", ch as char)))?;
                game.cells[r * game.cols + c] = Some(owner as u8);
                placed += 1;
            }
        }
        game.to_move = placed % players;
        game.winner = (0..players).find(|p| game.has_three_in_row(PlayerId(*p)));
        game.over = game.winner.is_some() || game.cells.iter().all(Option::is_some);
        Ok(game)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[Option<u8>] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<u8> {
        self.cells[row * self.cols + col]
    }

    pub fn to_move(&self) -> PlayerId {
        PlayerId(self.to_move)
    }

    pub fn winner(&self) -> Option<PlayerId> {
        self.winner.map(PlayerId)
    }

    /// True iff `player` owns three consecutive cells in one of the eight
    /// compass directions.
    pub fn has_three_in_row(&self, player: PlayerId) -> bool {
        let me = Some(player.0 as u8);
        (0..self.rows).any(|r| {
            (0..self.cols).any(|c| {
                self.cell(r, c) == me
                    && DIRECTIONS.iter().any(|(dr, dc)| {
                        (1..3).all(|k| {
                            let rr = r as isize + dr * k;
                            let cc = c as isize + dc * k;
                            rr >= 0
                                && cc >= 0
                                && (rr as usize) < self.rows
                                && (cc as usize) < self.cols
                                && self.cell(rr as usize, cc as usize) == me
                        })
                    })
            })
        })
    }

    /// Places the mover's symbol at `(row, col)`.
    pub fn place(&self, player: PlayerId, row: usize, col: usize) -> Result<Transition<Self>, GameError> {
        let action = Action::Cell { row, col };
        if self.over {
            return Err(GameError::Terminal);
        }
        if player.0 != self.to_move {
            return Err(GameError::NotToAct(player));
        }
        if row >= self.rows || col >= self.cols {
            return Err(GameError::illegal(player, action, "cell is off the board"));
        }
        if self.cell(row, col).is_some() {
            return Err(GameError::illegal(player, action, "cell is occupied"));
        }
        let mut next = self.clone();
        next.cells[row * self.cols + col] = Some(player.0 as u8);
        let mut rewards = vec![0.0; self.players];
        if next.has_three_in_row(player) {
            next.winner = Some(player.0);
            next.over = true;
            for (p, r) in rewards.iter_mut().enumerate() {
                *r = if p == player.0 { 1.0 } else { -1.0 };
            }
        } else if next.cells.iter().all(Option::is_some) {
            next.over = true;
        } else {
            next.to_move = (self.to_move + 1) % self.players;
        }
        Ok(Transition { state: next, rewards })
    }

    fn board_rows(&self) -> Vec<String> {
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| match self.cell(r, c) {
                        Some(p) => SYMBOLS[p as usize] as char,
                        None => '.',
                    })
                    .collect()
            })
            .collect()
    }
}

impl Environment for TicTacToe {
    fn num_players(&self) -> usize {
        self.players
    }

    fn is_terminal(&self) -> bool {
        self.over
    }

    fn acting_players(&self) -> Vec<PlayerId> {
        if self.over {
            Vec::new()
        } else {
            vec![PlayerId(self.to_move)]
        }
    }

    fn legal_actions(&self, player: PlayerId) -> Result<Vec<Action>, GameError> {
        if self.over {
            return Err(GameError::Terminal);
        }
        if player.0 != self.to_move {
            return Err(GameError::NotToAct(player));
        }
        Ok((0..self.rows * self.cols)
            .filter(|i| self.cells[*i].is_none())
            .map(|i| Action::Cell {
                row: i / self.cols,
                col: i % self.cols,
            })
            .collect())
    }

    fn apply(&self, actions: &JointAction) -> Result<Transition<Self>, GameError> {
        let (player, action) = actions.iter().next().ok_or(GameError::MissingAction(self.to_move()))?;
        match action {
            Action::Cell { row, col } => self.place(*player, *row, *col),
            other => Err(GameError::illegal(*player, other, "expected a board cell")),
        }
    }

    fn observe(&self, player: PlayerId) -> Observation {
        Observation::Tictactoe(TttObservation {
            me: player.0,
            to_move: self.to_move,
            board: self.board_rows(),
        })
    }

    fn eliminated(&self) -> BTreeSet<PlayerId> {
        BTreeSet::new()
    }

    fn finishing_order(&self) -> Result<Vec<Vec<PlayerId>>, GameError> {
        if !self.over {
            return Err(GameError::NotTerminal);
        }
        let all: Vec<PlayerId> = (0..self.players).map(PlayerId).collect();
        Ok(match self.winner {
            Some(w) => vec![
                vec![PlayerId(w)],
                all.into_iter().filter(|p| p.0 != w).collect(),
            ],
            None => vec![all],
        })
    }

    fn render(&self) -> String {
        let mut out = self.board_rows().join("\n");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::apply_tie_rounding;
    use proptest::prelude::*;

    /// Independent scan: every cell, all eight directions.
    fn oracle_three(cells: &[Option<u8>], rows: usize, cols: usize, p: u8) -> bool {
        let dirs = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
        for r in 0..rows as i64 {
            for c in 0..cols as i64 {
                for (dr, dc) in dirs {
                    let run = (0..3).all(|k| {
                        let (rr, cc) = (r + dr * k, c + dc * k);
                        rr >= 0 && cc >= 0 && rr < rows as i64 && cc < cols as i64
                            && cells[(rr as usize) * cols + cc as usize] == Some(p)
                    });
                    if run {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn empty_board_has_no_line() {
        let g = TicTacToe::new(5, 5, 3).unwrap();
        assert!((0..3).all(|p| !g.has_three_in_row(PlayerId(p))));
    }

    #[test]
    fn diagonal_line() {
        let g = TicTacToe::from_rows(&["XO.", "OX.", "..X"], 2).unwrap();
        assert!(g.has_three_in_row(PlayerId(0)));
        let g = TicTacToe::from_rows(&["..X", ".X.", "X.."], 2).unwrap();
        assert!(g.has_three_in_row(PlayerId(0)));
    }

    proptest! {
        #[test]
        fn line_detection_matches_oracle(
            rows in 3usize..7, cols in 3usize..7,
            fill in proptest::collection::vec(0u8..4, 49),
        ) {
            let mut g = TicTacToe::new(rows, cols, 3).unwrap();
            for i in 0..rows * cols {
                g.cells[i] = if fill[i] == 3 { None } else { Some(fill[i]) };
            }
            for p in 0..3u8 {
                prop_assert_eq!(g.has_three_in_row(PlayerId(p as usize)), oracle_three(&g.cells, rows, cols, p));
            }
        }
    }

    #[test]
    fn regular_move_rewards_zero() {
        let g = TicTacToe::new(5, 5, 3).unwrap();
        let t = g.place(PlayerId(0), 2, 2).unwrap();
        assert_eq!(t.rewards, vec![0.0, 0.0, 0.0]);
        assert!(!t.state.is_terminal());
        assert_eq!(t.state.to_move(), PlayerId(1));
    }

    #[test]
    fn winning_move_three_players() {
        // X to move (3 placed each would be 9; here X,O,Y have 2 each).
        let g = TicTacToe::from_rows(&["XX...", "OO...", "YY...", ".....", "....."], 3).unwrap();
        assert_eq!(g.to_move(), PlayerId(0));
        let t = g.place(PlayerId(0), 0, 2).unwrap();
        assert_eq!(t.rewards, vec![1.0, -1.0, -1.0]);
        assert!(t.state.is_terminal());
        let ranks = apply_tie_rounding(&t.state.finishing_order().unwrap(), 3).unwrap();
        assert_eq!(ranks, vec![1, 3, 3]);
        assert_eq!(t.rewards.iter().sum::<f64>(), 2.0 - 3.0);
    }

    #[test]
    fn second_player_win_ranks() {
        let g = TicTacToe::from_rows(&["XOY..", "XOY..", ".....", ".....", "....."], 3).unwrap();
        let t = g.place(PlayerId(0), 3, 3).unwrap();
        let t = t.state.place(PlayerId(1), 2, 1).unwrap();
        assert_eq!(t.state.winner(), Some(PlayerId(1)));
        let ranks = apply_tie_rounding(&t.state.finishing_order().unwrap(), 3).unwrap();
        assert_eq!(ranks, vec![3, 1, 3]);
    }

    #[test]
    fn full_board_draw() {
        // 3x3, two players, last cell at (2,2) completes no line.
        let g = TicTacToe::from_rows(&["XOX", "XOO", "OX."], 2).unwrap();
        assert_eq!(g.to_move(), PlayerId(0));
        let t = g.place(PlayerId(0), 2, 2).unwrap();
        assert!(t.state.is_terminal());
        assert_eq!(t.rewards, vec![0.0, 0.0]);
        assert_eq!(t.state.finishing_order().unwrap().len(), 1);
        assert_eq!(apply_tie_rounding(&t.state.finishing_order().unwrap(), 2).unwrap(), vec![2, 2]);
    }

    #[test]
    fn move_errors() {
        let g = TicTacToe::new(3, 3, 3).unwrap();
        assert!(g.place(PlayerId(1), 0, 0).is_err());
        assert!(g.place(PlayerId(0), 3, 0).is_err());
        let t = g.place(PlayerId(0), 0, 0).unwrap();
        assert!(matches!(
            t.state.place(PlayerId(1), 0, 0),
            Err(GameError::IllegalAction { .. })
        ));
    }

    // ---- brute force over the 3-player 3x3 game ----

    const LINES: [[usize; 3]; 8] = [
        [0, 1, 2], [3, 4, 5], [6, 7, 8], [0, 3, 6], [1, 4, 7], [2, 5, 8], [0, 4, 8], [2, 4, 6],
    ];

    fn oracle_leaves(board: &mut [u8; 9], mover: u8, wins: &mut u64, draws: &mut u64) {
        for i in 0..9 {
            if board[i] != 0 {
                continue;
            }
            board[i] = mover + 1;
            if LINES.iter().any(|l| l.iter().all(|c| board[*c] == mover + 1)) {
                *wins += 1;
            } else if board.iter().all(|c| *c != 0) {
                *draws += 1;
            } else {
                oracle_leaves(board, (mover + 1) % 3, wins, draws);
            }
            board[i] = 0;
        }
    }

    fn engine_leaves(g: &TicTacToe, wins: &mut u64, draws: &mut u64) {
        for a in g.legal_actions(g.to_move()).unwrap() {
            let Action::Cell { row, col } = a else { unreachable!() };
            let t = g.place(g.to_move(), row, col).unwrap();
            if t.state.is_terminal() {
                let order = t.state.finishing_order().unwrap();
                match t.state.winner() {
                    Some(_) => {
                        assert_eq!(order[0].len(), 1);
                        *wins += 1
                    }
                    None => {
                        assert_eq!(order.len(), 1);
                        *draws += 1
                    }
                }
            } else {
                engine_leaves(&t.state, wins, draws);
            }
        }
    }

    #[test]
    fn exhaustive_three_player_tree_matches_enumerator() {
        let (mut w1, mut d1, mut w2, mut d2) = (0, 0, 0, 0);
        oracle_leaves(&mut [0; 9], 0, &mut w1, &mut d1);
        engine_leaves(&TicTacToe::new(3, 3, 3).unwrap(), &mut w2, &mut d2);
        assert_eq!((w1, d1), (w2, d2));
        assert!(w1 > 0 && d1 > 0);
    }

    /// Whether `target` can win against every continuation by the others.
    fn forces_win(g: &TicTacToe, target: usize) -> bool {
        if g.over {
            return g.winner == Some(target);
        }
        let mover = g.to_move;
        let mut children = g.legal_actions(PlayerId(mover)).unwrap().into_iter().map(|a| {
            let Action::Cell { row, col } = a else { unreachable!() };
            g.place(PlayerId(mover), row, col).unwrap().state
        });
        if mover == target {
            children.any(|c| forces_win(&c, target))
        } else {
            children.all(|c| forces_win(&c, target))
        }
    }

    /// Whether `target` wins along some continuation.
    fn can_win(g: &TicTacToe, target: usize) -> bool {
        if g.over {
            return g.winner == Some(target);
        }
        g.legal_actions(g.to_move()).unwrap().into_iter().any(|a| {
            let Action::Cell { row, col } = a else { unreachable!() };
            can_win(&g.place(g.to_move(), row, col).unwrap().state, target)
        })
    }

    fn find_king_maker(g: &TicTacToe, depth: usize) -> Option<TicTacToe> {
        if g.over {
            return None;
        }
        let mover = g.to_move;
        if !can_win(g, mover) {
            let mut decided = BTreeSet::new();
            for a in g.legal_actions(PlayerId(mover)).unwrap() {
                let Action::Cell { row, col } = a else { unreachable!() };
                let child = g.place(PlayerId(mover), row, col).unwrap().state;
                for opp in (0..3).filter(|o| *o != mover) {
                    if forces_win(&child, opp) {
                        decided.insert(opp);
                    }
                }
            }
            if decided.len() == 2 {
                return Some(g.clone());
            }
        }
        if depth == 0 {
            return None;
        }
        for a in g.legal_actions(PlayerId(mover)).unwrap() {
            let Action::Cell { row, col } = a else { unreachable!() };
            let child = g.place(PlayerId(mover), row, col).unwrap().state;
            if let Some(found) = find_king_maker(&child, depth - 1) {
                return Some(found);
            }
        }
        None
    }

    #[test]
    fn king_maker_state_is_reachable() {
        let found = find_king_maker(&TicTacToe::new(4, 4, 3).unwrap(), 16);
        assert!(found.is_some(), "no king-maker state found on 4x4 with 3 players");
        // The classic board is too small for one.
        assert!(find_king_maker(&TicTacToe::new(3, 3, 3).unwrap(), 9).is_none());
    }
}
