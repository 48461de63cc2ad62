use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Bqm, Vartype};
use crate::seed;
use crate::topology::HardwareGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FclParams {
    /// Loops per node.
    pub alpha: f64,
    /// Bound on `|J_ij|`.
    pub ruggedness: f64,
    /// Attempts allowed per loop before giving up.
    pub max_retries: usize,
}

impl Default for FclParams {
    fn default() -> Self {
        FclParams {
            alpha: 0.2,
            ruggedness: 3.0,
            max_retries: 1000,
        }
    }
}

/// One planted loop. `nodes[0]` is the node the walk revisited; the cycle
/// closes from the last node back to it. Edge `t` joins `nodes[t]` and
/// `nodes[(t + 1) % len]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FclLoop {
    pub nodes: Vec<usize>,
    pub plus_edge: usize,
}

impl FclLoop {
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.nodes.len();
        (0..n).map(move |t| {
            let (a, b) = (self.nodes[t], self.nodes[(t + 1) % n]);
            (a.min(b), a.max(b))
        })
    }

    /// Coupler contributions of this loop.
    pub fn weights(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.edges()
            .enumerate()
            .map(|(t, e)| (e, if t == self.plus_edge { 1.0 } else { -1.0 }))
    }
}

#[derive(Debug, Clone)]
pub struct FclInstance {
    pub model: Bqm,
    pub loops: Vec<FclLoop>,
}

/// Sums loop contributions per coupler, keyed by graph node pairs.
pub fn fcl_couplings(loops: &[FclLoop]) -> BTreeMap<(usize, usize), f64> {
    let mut acc = BTreeMap::new();
    for l in loops {
        for (e, w) in l.weights() {
            *acc.entry(e).or_insert(0.0) += w;
        }
    }
    acc
}

fn random_cycle(g: &HardwareGraph, starts: &[usize], rng: &mut impl Rng) -> Option<Vec<usize>> {
    let start = *starts.choose(rng)?;
    let mut path = vec![start];
    let mut pos = HashMap::from([(start, 0usize)]);
    let mut prev = usize::MAX;
    loop {
        let cur = *path.last().expect("non-empty");
        let options: Vec<usize> = g.neighbors(cur).iter().copied().filter(|&q| q != prev).collect();
        let next = *options.choose(rng)?;
        if let Some(&at) = pos.get(&next) {
            return Some(path.split_off(at));
        }
        pos.insert(next, path.len());
        path.push(next);
        prev = cur;
    }
}

/// Frustrated cluster loops on `g`. The model keeps only nonzero couplers
/// and the nodes they touch.
pub fn gen_fcl(g: &HardwareGraph, params: &FclParams, seed: u64) -> Result<FclInstance> {
    if !(params.alpha > 0.0) || params.ruggedness < 1.0 {
        return Err(Error::Param("FCL needs alpha > 0 and R >= 1".into()));
    }
    let starts: Vec<usize> = g.nodes().filter(|&q| g.degree(q) >= 2).collect();
    if starts.len() < 3 {
        return Err(Error::Graph("graph too small to host a loop".into()));
    }
    let count = (params.alpha * g.num_nodes() as f64).ceil() as usize;
    let mut rng = seed::rng(seed);
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut loops = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = false;
        for _ in 0..params.max_retries {
            let Some(nodes) = random_cycle(g, &starts, &mut rng) else {
                continue;
            };
            let candidate = FclLoop {
                plus_edge: rng.random_range(0..nodes.len()),
                nodes,
            };
            let fits = candidate
                .weights()
                .all(|(e, w)| (acc.get(&e).copied().unwrap_or(0.0) + w).abs() <= params.ruggedness);
            if fits {
                for (e, w) in candidate.weights() {
                    *acc.entry(e).or_insert(0.0) += w;
                }
                loops.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::RetryCap(params.max_retries));
        }
    }
    acc.retain(|_, w| *w != 0.0);
    let nodes: BTreeSet<usize> = acc.keys().flat_map(|&(a, b)| [a, b]).collect();
    let index: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut model = Bqm::new(Vartype::Spin, nodes.len());
    model.set_ids(nodes.iter().map(|&q| q as u64).collect())?;
    for (&(a, b), &w) in &acc {
        model.set_interaction(index[&a], index[&b], w)?;
    }
    Ok(FclInstance { model, loops })
}
