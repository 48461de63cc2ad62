use rand::seq::IndexedRandom;

use super::graph_model;
use crate::error::{Error, Result};
use crate::model::Bqm;
use crate::seed;
use crate::topology::HardwareGraph;

pub const SPIN_VALUES: [f64; 2] = [-1.0, 1.0];

/// `{±1/7, ±2/7, …, ±7/7}`.
pub fn nat7_values() -> Vec<f64> {
    (1..=7).flat_map(|k| [-(k as f64) / 7.0, k as f64 / 7.0]).collect()
}

/// Zero fields, each coupler drawn uniformly from `values`.
pub fn gen_spin_glass(g: &HardwareGraph, values: &[f64], seed: u64) -> Result<Bqm> {
    if values.is_empty() {
        return Err(Error::Param("value set is empty".into()));
    }
    if g.num_nodes() == 0 {
        return Err(Error::Graph("empty graph".into()));
    }
    let mut rng = seed::rng(seed);
    let (mut model, index) = graph_model(g);
    for (a, b) in g.edges() {
        let w = *values.choose(&mut rng).expect("non-empty");
        model.set_interaction(index[a], index[b], w)?;
    }
    Ok(model)
}
