//! Native clique embedding for Pegasus: L-shaped chains.
//!
//! Logical node `t` owns a column `x_t` and a row `y_t`. Its chain runs down
//! column `x_t` from row `y0` to row `y_t`, then along row `y_t` from column
//! `x_t` to column `xl`. With columns and rows both increasing in `t`, the
//! horizontal part of `s < t` crosses the vertical part of `t` at
//! `(x_t, y_s)`, which is an internal coupler.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{embed_heuristic_with, is_valid_embedding, Embedding, HeuristicParams};
use crate::error::{Error, Result};
use crate::seed;
use crate::topology::{
    clique, HardwareGraph, PegasusCoord, TopologyTag, PEGASUS_HORIZONTAL_OFFSETS as HOFF,
    PEGASUS_VERTICAL_OFFSETS as VOFF,
};

/// Validated candidates tried before falling back to the heuristic.
const MAX_CANDIDATES: usize = 400;

/// Logical nodes the heuristic may add on top of a maximal construction.
const MAX_COMPLETION: usize = 8;

#[derive(Debug, Clone, Copy)]
struct Frame {
    m: usize,
    y0: usize,
    xl: usize,
}

impl Frame {
    fn line_end(&self) -> usize {
        12 * (self.m - 1)
    }

    fn column_ok(&self, x: usize) -> bool {
        x <= self.xl && VOFF[x % 12] <= self.y0
    }

    fn row_ok(&self, y: usize) -> bool {
        y >= self.y0 && self.xl < self.line_end() + HOFF[y % 12]
    }

    fn pair_ok(&self, x: usize, y: usize) -> bool {
        x >= HOFF[y % 12] && y < self.line_end() + VOFF[x % 12]
    }

    /// Monotone greedy matching of usable columns to usable rows.
    fn pairs(&self) -> Vec<(usize, usize)> {
        let fabric = 2..12 * self.m - 2;
        let cols: Vec<usize> = fabric.clone().filter(|&x| self.column_ok(x)).collect();
        let rows: Vec<usize> = fabric.filter(|&y| self.row_ok(y)).collect();
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < cols.len() && j < rows.len() {
            let (x, y) = (cols[i], rows[j]);
            if self.pair_ok(x, y) {
                out.push((x, y));
                j += 1;
            }
            i += 1;
        }
        out
    }

    fn chain_len(&self, (x, y): (usize, usize)) -> usize {
        let (v, h) = (VOFF[x % 12], HOFF[y % 12]);
        ((y - v) / 12 - (self.y0 - v) / 12 + 1) + ((self.xl - h) / 12 - (x - h) / 12 + 1)
    }

    fn chain(&self, (x, y): (usize, usize)) -> Vec<usize> {
        let (v, h) = (VOFF[x % 12], HOFF[y % 12]);
        let vertical = ((self.y0 - v) / 12..=(y - v) / 12).map(|z| PegasusCoord::new(0, x / 12, x % 12, z));
        let horizontal = ((x - h) / 12..=(self.xl - h) / 12).map(|z| PegasusCoord::new(1, y / 12, y % 12, z));
        vertical.chain(horizontal).map(|c| c.to_linear(self.m)).collect()
    }
}

fn fabric_frames(m: usize) -> impl Iterator<Item = Frame> {
    (2..12 * m - 2).flat_map(move |y0| (2..12 * m - 2).map(move |xl| Frame { m, y0, xl }))
}

/// Largest clique the L construction fits on a full Pegasus fabric.
pub fn clique_capacity(m: usize) -> usize {
    fabric_frames(m).map(|f| f.pairs().len()).max().unwrap_or(0)
}

/// Embeds `K_k` into `hw`. Pegasus graphs use the L construction, with the
/// heuristic embedder placing a few extra nodes past its capacity; other
/// graphs go straight to the heuristic.
pub fn embed_clique(k: usize, hw: &HardwareGraph, seed: u64) -> Result<Embedding> {
    if k == 0 {
        return Err(Error::Param("clique size must be at least 1".into()));
    }
    if k > hw.num_nodes() {
        return Err(Error::EmbeddingTooLarge(format!("K_{k} on {} qubits", hw.num_nodes())));
    }
    let source = clique(k)?;
    let mut rng = seed::rng(seed);
    if k == 1 {
        let nodes: Vec<usize> = hw.nodes().collect();
        return Ok(Embedding::new(vec![vec![*nodes.choose(&mut rng).expect("non-empty")]]));
    }
    let m = match hw.tag() {
        TopologyTag::Pegasus { m } => m,
        TopologyTag::Clique { .. } if hw.nodes().take(k).count() == k => {
            let e = Embedding::new(hw.nodes().take(k).map(|q| vec![q]).collect());
            if is_valid_embedding(&source, hw, &e) {
                return Ok(e);
            }
            return embed_heuristic_with(&source, hw, &HeuristicParams::default(), &BTreeMap::new(), seed);
        }
        _ => return embed_heuristic_with(&source, hw, &HeuristicParams::default(), &BTreeMap::new(), seed),
    };

    // (cost, tie-break, frame, first pair index) for every frame that fits k.
    let mut candidates = Vec::new();
    let mut largest: Option<(usize, Frame)> = None;
    for frame in fabric_frames(m) {
        let pairs = frame.pairs();
        if largest.is_none_or(|(n, _)| pairs.len() > n) {
            largest = Some((pairs.len(), frame));
        }
        if pairs.len() < k {
            continue;
        }
        let lens: Vec<usize> = pairs.iter().map(|&p| frame.chain_len(p)).collect();
        let mut window: usize = lens[..k].iter().sum();
        let mut best = (window, 0);
        for s in 1..=pairs.len() - k {
            window = window + lens[s + k - 1] - lens[s - 1];
            if window < best.0 {
                best = (window, s);
            }
        }
        candidates.push((best.0, rng.random::<u64>(), frame, best.1));
    }
    candidates.sort_unstable_by_key(|c| (c.0, c.1));
    for &(_, _, frame, start) in candidates.iter().take(MAX_CANDIDATES) {
        let pairs = frame.pairs();
        let chains: Vec<Vec<usize>> = pairs[start..start + k].iter().map(|&p| frame.chain(p)).collect();
        if chains.iter().flatten().any(|&q| !hw.has_node(q)) {
            continue;
        }
        let e = Embedding::new(chains);
        if is_valid_embedding(&source, hw, &e) {
            return Ok(e);
        }
    }

    // Too big (or too damaged) for the construction alone: keep the largest
    // frame that is intact and let the heuristic place the rest.
    let (cap, frame) = largest.expect("fabric is non-empty");
    let base = cap.min(k);
    if k - base > MAX_COMPLETION {
        return Err(Error::EmbeddingTooLarge(format!(
            "K_{k} exceeds the native clique capacity {cap} of P{m}"
        )));
    }
    let pairs = frame.pairs();
    let fixed: BTreeMap<usize, Vec<usize>> = pairs[..base]
        .iter()
        .enumerate()
        .map(|(t, &p)| (t, frame.chain(p)))
        .collect();
    if fixed.values().flatten().any(|&q| !hw.has_node(q)) {
        return embed_heuristic_with(&source, hw, &HeuristicParams::default(), &BTreeMap::new(), seed);
    }
    embed_heuristic_with(&source, hw, &HeuristicParams::default(), &fixed, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::validate_embedding;
    use crate::topology::pegasus;

    #[test]
    fn single_node() {
        let e = embed_clique(1, &pegasus(2).unwrap(), 3).unwrap();
        assert_eq!(e.num_chains(), 1);
        assert_eq!(e.chain(0).len(), 1);
    }

    #[test]
    fn small_cliques_on_p4() {
        let hw = pegasus(4).unwrap();
        for k in [2, 5, 12, 20] {
            let e = embed_clique(k, &hw, k as u64).unwrap();
            assert!(validate_embedding(&clique(k).unwrap(), &hw, &e).is_empty(), "K_{k}");
        }
    }

    #[test]
    fn capacity_grows_with_m() {
        assert!(clique_capacity(3) < clique_capacity(4));
        assert!(clique_capacity(4) >= 20);
    }

    #[test]
    fn frame_chain_lengths_match() {
        let f = Frame { m: 6, y0: 12, xl: 40 };
        for p in f.pairs() {
            assert_eq!(f.chain(p).len(), f.chain_len(p));
        }
    }
}
