//! Tie rounding for finishing orders.
//!
//! Tied players share the worst position their block spans: with blocks
//! `[{A}, {B, C}, {D}]` the ranks are `A=1, B=C=3, D=4`.

use crate::error::GameError;
use crate::game::PlayerId;

/// Converts tie blocks (best block first) into per-seat ranks for a game of
/// `players` seats. Every seat must appear in exactly one block.
pub fn apply_tie_rounding(blocks: &[Vec<PlayerId>], players: usize) -> Result<Vec<usize>, GameError> {
    if blocks.iter().all(|b| b.is_empty()) {
        return Err(GameError::Format("empty finishing order".into()));
    }
    let mut ranks = vec![0usize; players];
    let mut placed = 0usize;
    for block in blocks.iter().filter(|b| !b.is_empty()) {
        placed += block.len();
        for p in block {
            let slot = ranks
                .get_mut(p.0)
                .ok_or(GameError::UnknownPlayer(*p))?;
            if *slot != 0 {
                return Err(GameError::Format(format!("player {p} appears twice in finishing order")));
            }
            *slot = placed;
        }
    }
    if placed != players {
        return Err(GameError::Format(format!(
            "finishing order covers {placed} of {players} players"
        )));
    }
    Ok(ranks)
}

/// Groups players by a score, highest score first, exact ties sharing a block.
pub(crate) fn blocks_by_score(scores: &[f64]) -> Vec<Vec<PlayerId>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b)));
    let mut blocks: Vec<Vec<PlayerId>> = Vec::new();
    let mut last: Option<f64> = None;
    for i in order {
        match last {
            Some(v) if v == scores[i] => blocks.last_mut().unwrap().push(PlayerId(i)),
            _ => blocks.push(vec![PlayerId(i)]),
        }
        last = Some(scores[i]);
    }
    blocks
}
