use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};

use super::graph_model;
use crate::error::{Error, Result};
use crate::model::Bqm;
use crate::seed;
use crate::topology::HardwareGraph;

/// Frustrated triangle patterns: an odd number of antiferromagnetic bonds.
pub const TILE_PATTERNS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TileParams {
    /// Stop after this many tiles; `None` tiles greedily until no free
    /// triangle remains.
    pub max_tiles: Option<usize>,
}

/// Edge-disjoint triangle tiles, found greedily in a seeded node order.
pub fn tile_triangles(g: &HardwareGraph, max_tiles: Option<usize>, seed: u64) -> Vec<[usize; 3]> {
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = g.nodes().collect();
    order.shuffle(&mut rng);
    let limit = max_tiles.unwrap_or(usize::MAX);
    let mut used = BTreeSet::new();
    let mut tiles = Vec::new();
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    for &i in &order {
        for &j in g.neighbors(i) {
            if tiles.len() >= limit {
                return tiles;
            }
            if used.contains(&key(i, j)) {
                continue;
            }
            let third = g
                .neighbors(j)
                .iter()
                .copied()
                .find(|&k| k != i && g.has_edge(i, k) && !used.contains(&key(i, k)) && !used.contains(&key(j, k)));
            if let Some(k) = third {
                used.insert(key(i, j));
                used.insert(key(j, k));
                used.insert(key(i, k));
                tiles.push([i, j, k]);
            }
        }
    }
    tiles
}

/// Frustrated tiles. Every node of `g` becomes a variable; only tile edges
/// carry couplings.
pub fn gen_tile(g: &HardwareGraph, params: &TileParams, seed: u64) -> Result<Bqm> {
    if g.num_nodes() == 0 {
        return Err(Error::Graph("empty graph".into()));
    }
    let tiles = tile_triangles(g, params.max_tiles, seed::derive(seed, &[0]));
    if tiles.is_empty() && params.max_tiles != Some(0) {
        return Err(Error::Graph("graph has no triangle to tile".into()));
    }
    let mut rng = seed::rng(seed::derive(seed, &[1]));
    let (mut model, index) = graph_model(g);
    for [a, b, c] in tiles {
        let p = TILE_PATTERNS.choose(&mut rng).expect("non-empty");
        model.set_interaction(index[a], index[b], p[0])?;
        model.set_interaction(index[b], index[c], p[1])?;
        model.set_interaction(index[a], index[c], p[2])?;
    }
    Ok(model)
}
