//! Environment implementations.

pub mod blokus;
pub mod kuhn;
pub mod matrix;
pub mod tictactoe;
pub mod tron;
