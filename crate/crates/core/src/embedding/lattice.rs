//! Cubic lattices on Pegasus with two-qubit chains.
//!
//! Site `(i, j)` of layer `l` is the vertical qubit `(0, i + a, k, j)`
//! joined to the horizontal qubit `(1, j + b, k', i)`, where
//! `(k, k', a, b) = LATTICE_LAYERS[l]`. Neighbors in `i` share a horizontal
//! line and neighbors in `j` share a vertical line, so both are external
//! couplers; consecutive layers are joined by internal or odd couplers.

use rand::seq::SliceRandom;

use super::{is_valid_embedding, Embedding};
use crate::error::{Error, Result};
use crate::seed;
use crate::topology::{lattice3d, lattice_index, HardwareGraph, PegasusCoord, TopologyTag};

/// `(k, k', a, b)` per layer, in stacking order.
pub const LATTICE_LAYERS: [(usize, usize, usize, usize); 12] = [
    (0, 0, 1, 1),
    (1, 1, 1, 1),
    (2, 2, 1, 0),
    (3, 3, 1, 0),
    (4, 10, 1, 0),
    (5, 8, 1, 1),
    (6, 9, 1, 1),
    (7, 11, 1, 0),
    (10, 4, 0, 1),
    (8, 5, 0, 1),
    (9, 6, 0, 0),
    (11, 7, 0, 0),
];

/// Placements checked before giving up on a damaged graph.
const MAX_PLACEMENTS: usize = 256;

fn site_chain(m: usize, i: usize, j: usize, layer: usize) -> Vec<usize> {
    let (k, kp, a, b) = LATTICE_LAYERS[layer];
    vec![
        PegasusCoord::new(0, i + a, k, j).to_linear(m),
        PegasusCoord::new(1, j + b, kp, i).to_linear(m),
    ]
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Embeds the `x * y * z` lattice. The seed picks the axis assignment and
/// the translation; other placements are tried if qubits are missing.
pub fn embed_lattice3d(x: usize, y: usize, z: usize, hw: &HardwareGraph, seed: u64) -> Result<Embedding> {
    let dims = [x, y, z];
    let source = lattice3d(x, y, z)?;
    let TopologyTag::Pegasus { m } = hw.tag() else {
        return Err(Error::Param("lattice embedding needs a Pegasus graph".into()));
    };
    let side = m - 1;
    let mut placements = Vec::new();
    for perm in PERMUTATIONS {
        let (ni, nj, nl) = (dims[perm[0]], dims[perm[1]], dims[perm[2]]);
        if ni > side || nj > side || nl > LATTICE_LAYERS.len() {
            continue;
        }
        for i0 in 0..=side - ni {
            for j0 in 0..=side - nj {
                for l0 in 0..=LATTICE_LAYERS.len() - nl {
                    placements.push((perm, i0, j0, l0));
                }
            }
        }
    }
    if placements.is_empty() {
        return Err(Error::EmbeddingTooLarge(format!(
            "{x}x{y}x{z} lattice needs two sides <= {side} and one <= {} on P{m}",
            LATTICE_LAYERS.len()
        )));
    }
    placements.shuffle(&mut seed::rng(seed));
    for &(perm, i0, j0, l0) in placements.iter().take(MAX_PLACEMENTS) {
        let mut chains = vec![Vec::new(); x * y * z];
        for cx in 0..x {
            for cy in 0..y {
                for cz in 0..z {
                    let c = [cx, cy, cz];
                    let chain = site_chain(m, i0 + c[perm[0]], j0 + c[perm[1]], l0 + c[perm[2]]);
                    chains[lattice_index((x, y, z), cx, cy, cz)] = chain;
                }
            }
        }
        if chains.iter().flatten().any(|&q| !hw.has_node(q)) {
            continue;
        }
        let e = Embedding::new(chains);
        if is_valid_embedding(&source, hw, &e) {
            return Ok(e);
        }
    }
    Err(Error::EmbeddingNotFound(placements.len().min(MAX_PLACEMENTS)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::validate_embedding;
    use crate::topology::pegasus;

    #[test]
    fn full_stack_on_p4() {
        let hw = pegasus(4).unwrap();
        let e = embed_lattice3d(3, 3, 12, &hw, 0).unwrap();
        assert!(validate_embedding(&lattice3d(3, 3, 12).unwrap(), &hw, &e).is_empty());
        assert_eq!(e.max_chain_length(), 2);
        assert_eq!(e.mean_chain_length(), 2.0);
    }

    #[test]
    fn every_seed_places_validly() {
        let hw = pegasus(5).unwrap();
        for seed in 0..10 {
            let e = embed_lattice3d(2, 3, 4, &hw, seed).unwrap();
            assert!(validate_embedding(&lattice3d(2, 3, 4).unwrap(), &hw, &e).is_empty());
        }
    }

    #[test]
    fn too_large() {
        let hw = pegasus(3).unwrap();
        assert!(matches!(
            embed_lattice3d(3, 3, 3, &hw, 0),
            Err(Error::EmbeddingTooLarge(_))
        ));
    }
}
