//! Chain growth by weighted shortest paths with overlap penalties.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{is_valid_embedding, Embedding};
use crate::error::{Error, Result};
use crate::seed;
use crate::topology::HardwareGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicParams {
    /// Independent restarts.
    pub max_tries: usize,
    /// Rip-up and reroute passes per restart.
    pub passes: usize,
    /// Cost multiplier per extra chain sharing a qubit.
    pub overlap_penalty: f64,
    /// Extra cost of a free qubit whose neighbors are all in use; keeps
    /// room for later routes.
    pub crowding: f64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            max_tries: 10,
            passes: 40,
            overlap_penalty: 8.0,
            crowding: 0.5,
        }
    }
}

/// Embeds `source` (nodes `0..n`) into `hw`.
pub fn embed_heuristic(source: &HardwareGraph, hw: &HardwareGraph, seed: u64, max_tries: usize) -> Result<Embedding> {
    let params = HeuristicParams {
        max_tries,
        ..HeuristicParams::default()
    };
    embed_heuristic_with(source, hw, &params, &BTreeMap::new(), seed)
}

/// Like [`embed_heuristic`], keeping the chains in `fixed` untouched.
pub fn embed_heuristic_with(
    source: &HardwareGraph,
    hw: &HardwareGraph,
    params: &HeuristicParams,
    fixed: &BTreeMap<usize, Vec<usize>>,
    seed: u64,
) -> Result<Embedding> {
    if source.num_nodes() + source.num_edges() > hw.num_nodes() + hw.num_edges() {
        return Err(Error::EmbeddingTooLarge(format!(
            "{} nodes and {} edges exceed {} qubits and {} couplers",
            source.num_nodes(),
            source.num_edges(),
            hw.num_nodes(),
            hw.num_edges()
        )));
    }
    let mut rng = seed::rng(seed);
    for _ in 0..params.max_tries {
        let mut state = State::new(source, hw, fixed, params.crowding);
        if state.run(params, &mut rng) {
            let e = Embedding::new(state.chains);
            if is_valid_embedding(source, hw, &e) {
                return Ok(e);
            }
        }
    }
    Err(Error::EmbeddingNotFound(params.max_tries))
}

/// Reusable single-source-set Dijkstra buffers. Entries are valid only when
/// their stamp matches the current generation.
struct Search {
    dist: Vec<f64>,
    parent: Vec<usize>,
    stamp: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Reverse<(u64, usize)>>,
}

const NO_PARENT: usize = usize::MAX;

impl Search {
    fn new(cap: usize) -> Self {
        Search {
            dist: vec![f64::INFINITY; cap],
            parent: vec![NO_PARENT; cap],
            stamp: vec![0; cap],
            generation: 0,
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self, sources: &[usize]) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.heap.clear();
        for &s in sources {
            self.set(s, 0.0, NO_PARENT);
            self.heap.push(Reverse((0f64.to_bits(), s)));
        }
    }

    fn dist(&self, q: usize) -> f64 {
        if self.stamp[q] == self.generation {
            self.dist[q]
        } else {
            f64::INFINITY
        }
    }

    fn parent(&self, q: usize) -> usize {
        if self.stamp[q] == self.generation {
            self.parent[q]
        } else {
            NO_PARENT
        }
    }

    fn set(&mut self, q: usize, d: f64, p: usize) {
        self.stamp[q] = self.generation;
        self.dist[q] = d;
        self.parent[q] = p;
    }

    /// Smallest tentative distance still queued, skipping stale entries.
    fn frontier(&mut self) -> f64 {
        while let Some(&Reverse((bits, q))) = self.heap.peek() {
            let d = f64::from_bits(bits);
            if d > self.dist(q) {
                self.heap.pop();
            } else {
                return d;
            }
        }
        f64::INFINITY
    }

    /// Settles the closest queued node; weights are paid on entry.
    fn settle(&mut self, hw: &HardwareGraph, weights: &[f64]) -> Option<usize> {
        if self.frontier().is_infinite() {
            return None;
        }
        let Reverse((bits, q)) = self.heap.pop()?;
        let d = f64::from_bits(bits);
        for &p in hw.neighbors(q) {
            let nd = d + weights[p];
            if nd < self.dist(p) {
                self.set(p, nd, q);
                self.heap.push(Reverse((nd.to_bits(), p)));
            }
        }
        Some(q)
    }
}

struct State<'a> {
    source: &'a HardwareGraph,
    hw: &'a HardwareGraph,
    chains: Vec<Vec<usize>>,
    usage: Vec<u32>,
    blocked: Vec<bool>,
    is_fixed: Vec<bool>,
    searches: Vec<Search>,
    weights: Vec<f64>,
    reached: Vec<u32>,
    mark: Vec<u32>,
    round: u32,
    penalty: f64,
    history: Vec<f64>,
    crowd: Vec<u32>,
    crowding: f64,
    hard: bool,
}

impl<'a> State<'a> {
    fn new(
        source: &'a HardwareGraph,
        hw: &'a HardwareGraph,
        fixed: &BTreeMap<usize, Vec<usize>>,
        crowding: f64,
    ) -> Self {
        let n = source.capacity();
        let cap = hw.capacity();
        let mut chains = vec![Vec::new(); n];
        let mut blocked = vec![false; cap];
        let mut is_fixed = vec![false; n];
        for (&v, chain) in fixed {
            chains[v] = chain.clone();
            is_fixed[v] = true;
            for &q in chain {
                blocked[q] = true;
            }
        }
        for (q, b) in blocked.iter_mut().enumerate() {
            if !hw.has_node(q) {
                *b = true;
            }
        }
        State {
            source,
            hw,
            chains,
            usage: vec![0; cap],
            blocked,
            is_fixed,
            searches: Vec::new(),
            weights: vec![1.0; cap],
            reached: vec![0; cap],
            mark: vec![0; cap],
            round: 0,
            penalty: 1.0,
            history: vec![0.0; cap],
            crowd: vec![0; cap],
            hard: false,
            crowding,
        }
    }

    fn free_nodes(&self) -> Vec<usize> {
        self.source.nodes().filter(|&v| !self.is_fixed[v]).collect()
    }

    /// Breadth-first order from random roots, so most nodes are placed next
    /// to an already placed neighbor.
    fn initial_order(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut free = self.free_nodes();
        free.shuffle(rng);
        let mut seen = vec![false; self.source.capacity()];
        let mut order = Vec::with_capacity(free.len());
        for &root in &free {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut nbrs: Vec<usize> = self
                    .source
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|&u| !seen[u] && !self.is_fixed[u])
                    .collect();
                nbrs.shuffle(rng);
                for u in nbrs {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        order
    }

    fn run(&mut self, params: &HeuristicParams, rng: &mut ChaCha8Rng) -> bool {
        let mut order = self.initial_order(rng);
        self.set_penalty(params.overlap_penalty);
        for &v in &order {
            if !self.place(v, rng) {
                return false;
            }
        }
        for _ in 0..params.passes {
            if self.overlap_free() {
                self.shorten(params.passes, rng);
                return true;
            }
            // Qubits that stay contended get dearer for everyone.
            for q in 0..self.usage.len() {
                if self.usage[q] > 1 {
                    self.history[q] += 1.0;
                }
            }
            self.set_penalty(params.overlap_penalty);
            order.shuffle(rng);
            for &v in &order {
                self.remove(v);
                if !self.place(v, rng) {
                    return false;
                }
            }
        }
        if self.overlap_free() {
            self.shorten(params.passes, rng);
            return true;
        }
        false
    }

    /// Re-routes chains, longest first, through free qubits only, keeping
    /// any route that is no longer than the old one.
    fn shorten(&mut self, passes: usize, rng: &mut ChaCha8Rng) {
        self.hard = true;
        for q in 0..self.weights.len() {
            self.refresh(q);
        }
        for _ in 0..passes {
            let mut order = self.free_nodes();
            order.shuffle(rng);
            order.sort_by_key(|&v| Reverse(self.chains[v].len()));
            let mut improved = false;
            for v in order {
                if self.chains[v].len() <= 1 {
                    continue;
                }
                let old = std::mem::take(&mut self.chains[v]);
                for &q in &old {
                    self.bump(q, -1);
                }
                let placed: Vec<usize> = self
                    .source
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|&u| !self.chains[u].is_empty())
                    .collect();
                let fresh = if placed.is_empty() {
                    None
                } else {
                    self.grow(&placed, rng)
                };
                let chain = match fresh {
                    Some(c) if c.len() <= old.len() => {
                        improved |= c.len() < old.len();
                        c
                    }
                    _ => old,
                };
                for &q in &chain {
                    self.bump(q, 1);
                }
                self.chains[v] = chain;
            }
            if !improved {
                break;
            }
        }
    }

    fn overlap_free(&self) -> bool {
        self.usage.iter().all(|&u| u <= 1)
    }

    fn set_penalty(&mut self, penalty: f64) {
        self.penalty = penalty;
        for q in 0..self.weights.len() {
            self.refresh(q);
        }
    }

    fn refresh(&mut self, q: usize) {
        self.weights[q] = if self.blocked[q] {
            f64::INFINITY
        } else {
            if self.hard {
                return self.weights[q] = if self.usage[q] > 0 { f64::INFINITY } else { 1.0 };
            }
            let deg = self.hw.degree(q).max(1) as f64;
            let crowd = 1.0 + self.crowding * self.crowd[q] as f64 / deg;
            crowd * (1.0 + self.history[q]) * self.penalty.powi(self.usage[q] as i32)
        };
    }

    fn bump(&mut self, q: usize, delta: i32) {
        let before = self.usage[q];
        self.usage[q] = (before as i32 + delta) as u32;
        let after = self.usage[q];
        if (before == 0) != (after == 0) {
            for &p in self.hw.neighbors(q) {
                if after == 0 {
                    self.crowd[p] -= 1;
                } else {
                    self.crowd[p] += 1;
                }
                self.refresh(p);
            }
        }
        self.refresh(q);
    }

    fn remove(&mut self, v: usize) {
        let chain = std::mem::take(&mut self.chains[v]);
        for &q in &chain {
            self.bump(q, -1);
        }
    }

    fn place(&mut self, v: usize, rng: &mut ChaCha8Rng) -> bool {
        let placed: Vec<usize> = self
            .source
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| !self.chains[u].is_empty())
            .collect();
        let chain = if placed.is_empty() {
            let open: Vec<usize> = self.hw.nodes().filter(|&q| !self.blocked[q]).collect();
            let Some(least) = open.iter().map(|&q| self.usage[q]).min() else {
                return false;
            };
            let best: Vec<usize> = open.into_iter().filter(|&q| self.usage[q] == least).collect();
            vec![*best.choose(rng).expect("non-empty")]
        } else {
            match self.grow(&placed, rng) {
                Some(c) => c,
                None => return false,
            }
        };
        for &q in &chain {
            self.bump(q, 1);
        }
        self.chains[v] = chain;
        true
    }

    /// Root minimizing total distance to the placed neighbors, joined to
    /// each of them by its shortest path. The searches advance in lockstep
    /// and stop once no unsettled node can beat the best root: the total
    /// cost of a root is at least its distance from any one neighbor.
    fn grow(&mut self, placed: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
        let cap = self.hw.capacity();
        while self.searches.len() < placed.len() {
            self.searches.push(Search::new(cap));
        }
        self.round = self.round.wrapping_add(1);
        if self.round == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.round = 1;
        }
        let round = self.round;
        // mark == round: qubit lies in a neighbor chain
        for &u in placed {
            for &q in &self.chains[u] {
                self.mark[q] = round;
            }
        }
        for (s, &u) in placed.iter().enumerate() {
            self.searches[s].reset(&self.chains[u]);
        }
        let k = placed.len();
        let extra = (k - 1) as f64;
        let mut best = f64::INFINITY;
        let mut roots: Vec<usize> = Vec::new();
        let mut touched: Vec<usize> = Vec::new();
        loop {
            let mut pick = None;
            let mut lowest = f64::INFINITY;
            for s in 0..k {
                let f = self.searches[s].frontier();
                if f < lowest {
                    lowest = f;
                    pick = Some(s);
                }
            }
            let Some(s) = pick else { break };
            if lowest > best + 1e-9 {
                break;
            }
            let Some(q) = self.searches[s].settle(self.hw, &self.weights) else {
                break;
            };
            if self.mark[q] == round || self.blocked[q] {
                continue;
            }
            if self.reached[q] == 0 {
                touched.push(q);
            }
            self.reached[q] += 1;
            if self.reached[q] as usize == k {
                let total: f64 = (0..k).map(|t| self.searches[t].dist(q)).sum::<f64>() - extra * self.weights[q];
                if total < best - 1e-9 {
                    best = total;
                    roots.clear();
                    roots.push(q);
                } else if (total - best).abs() <= 1e-9 {
                    roots.push(q);
                }
            }
        }
        for q in touched {
            self.reached[q] = 0;
        }

        let root = *roots.choose(rng)?;
        let mut chain = vec![root];
        for search in &self.searches[..k] {
            let mut q = search.parent(root);
            while q != NO_PARENT && search.parent(q) != NO_PARENT {
                chain.push(q);
                q = search.parent(q);
            }
        }
        chain.sort_unstable();
        chain.dedup();
        Some(chain)
    }
}

/// A random simple graph with `n` nodes and about `n * degree / 2` edges,
/// for fuzzing.
pub fn random_graph(n: usize, degree: f64, seed: u64) -> HardwareGraph {
    let mut rng = seed::rng(seed);
    let p = (degree / (n.max(2) - 1) as f64).min(1.0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    HardwareGraph::from_edges(crate::topology::TopologyTag::Imported, 0..n, edges).expect("simple graph")
}
