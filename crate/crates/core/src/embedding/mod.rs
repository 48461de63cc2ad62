//! Minor embedding: chains of qubits standing in for logical variables.

mod clique;
mod heuristic;
mod lattice;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use clique::{clique_capacity, embed_clique};
pub use heuristic::{embed_heuristic, embed_heuristic_with, random_graph, HeuristicParams};
pub use lattice::{embed_lattice3d, LATTICE_LAYERS};

use crate::error::{Error, Result};
use crate::model::{Assignment, Bqm, Vartype};
use crate::seed;
use crate::topology::HardwareGraph;

/// Chains indexed by logical variable, each a sorted list of qubit ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    chains: Vec<Vec<usize>>,
    chain_strength: Option<f64>,
}

impl Embedding {
    pub fn new(chains: Vec<Vec<usize>>) -> Self {
        let chains = chains
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        Embedding {
            chains,
            chain_strength: None,
        }
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn chain(&self, v: usize) -> &[usize] {
        &self.chains[v]
    }

    pub fn num_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn chain_strength(&self) -> Option<f64> {
        self.chain_strength
    }

    pub fn set_chain_strength(&mut self, x: f64) {
        self.chain_strength = Some(x);
    }

    pub fn with_chain_strength(mut self, x: f64) -> Self {
        self.chain_strength = Some(x);
        self
    }

    /// Sorted union of all chains: the physical variable order.
    pub fn qubits(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.chains.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn num_qubits(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    /// `q / n`.
    pub fn mean_chain_length(&self) -> f64 {
        if self.chains.is_empty() {
            0.0
        } else {
            self.num_qubits() as f64 / self.chains.len() as f64
        }
    }

    pub fn max_chain_length(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_json_string(&self) -> String {
        let file = EmbeddingFile {
            chain_strength: self.chain_strength,
            chains: self.chains.iter().cloned().enumerate().collect(),
        };
        serde_json::to_string(&file).expect("embedding always serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Embedding> {
        let file: EmbeddingFile = serde_json::from_str(text)?;
        let n = file.chains.iter().map(|(v, _)| v + 1).max().unwrap_or(0);
        let mut chains = vec![None; n];
        for (v, chain) in file.chains {
            if chains[v].replace(chain).is_some() {
                return Err(Error::InvalidEmbedding(format!("logical node {v} listed twice")));
            }
        }
        let chains = chains
            .into_iter()
            .enumerate()
            .map(|(v, c)| c.ok_or_else(|| Error::InvalidEmbedding(format!("no chain for logical node {v}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut e = Embedding::new(chains);
        e.chain_strength = file.chain_strength;
        Ok(e)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Embedding> {
        Embedding::from_json_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct EmbeddingFile {
    chain_strength: Option<f64>,
    chains: Vec<(usize, Vec<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ChainCount { expected: usize, got: usize },
    EmptyChain(usize),
    MissingQubit { var: usize, qubit: usize },
    Overlap { qubit: usize, first: usize, second: usize },
    Disconnected { var: usize },
    MissingCoupler { a: usize, b: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ChainCount { expected, got } => {
                write!(f, "expected {expected} chains, got {got}")
            }
            Violation::EmptyChain(v) => write!(f, "chain {v} is empty"),
            Violation::MissingQubit { var, qubit } => {
                write!(f, "chain {var} uses absent qubit {qubit}")
            }
            Violation::Overlap { qubit, first, second } => {
                write!(f, "qubit {qubit} shared by chains {first} and {second}")
            }
            Violation::Disconnected { var } => write!(f, "chain {var} is not connected"),
            Violation::MissingCoupler { a, b } => {
                write!(f, "no coupler between chains {a} and {b}")
            }
        }
    }
}

/// Checks the embedding of `source` (nodes `0..n`) into `hw`. An empty list
/// means the embedding is valid.
pub fn validate_embedding(source: &HardwareGraph, hw: &HardwareGraph, e: &Embedding) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = source.capacity();
    if e.num_chains() != n {
        out.push(Violation::ChainCount {
            expected: n,
            got: e.num_chains(),
        });
        return out;
    }
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (v, chain) in e.chains().iter().enumerate() {
        if !source.has_node(v) {
            continue;
        }
        if chain.is_empty() {
            out.push(Violation::EmptyChain(v));
            continue;
        }
        let mut usable = true;
        for &q in chain {
            if !hw.has_node(q) {
                out.push(Violation::MissingQubit { var: v, qubit: q });
                usable = false;
            }
            if let Some(first) = owner.insert(q, v) {
                out.push(Violation::Overlap {
                    qubit: q,
                    first,
                    second: v,
                });
            }
        }
        if usable && !hw.is_connected_subset(&chain.iter().copied().collect()) {
            out.push(Violation::Disconnected { var: v });
        }
    }
    let mut covered = BTreeSet::new();
    for (q, &a) in &owner {
        if !hw.has_node(*q) {
            continue;
        }
        for p in hw.neighbors(*q) {
            if let Some(&b) = owner.get(p) {
                if a < b {
                    covered.insert((a, b));
                }
            }
        }
    }
    for (a, b) in source.edges() {
        if !covered.contains(&(a, b)) {
            out.push(Violation::MissingCoupler { a, b });
        }
    }
    out
}

pub fn is_valid_embedding(source: &HardwareGraph, hw: &HardwareGraph, e: &Embedding) -> bool {
    validate_embedding(source, hw, e).is_empty()
}

fn ensure_valid(source: &HardwareGraph, hw: &HardwareGraph, e: &Embedding) -> Result<()> {
    match validate_embedding(source, hw, e).first() {
        None => Ok(()),
        Some(v) => Err(Error::InvalidEmbedding(v.to_string())),
    }
}

/// `1.5 * sqrt(mean_i sum_j J_ij^2)` on the spin form of `model`, falling
/// back to the largest field (or 1) when there are no couplings.
pub fn default_chain_strength(model: &Bqm) -> f64 {
    let spin;
    let m = if model.vartype() == Vartype::Spin {
        model
    } else {
        spin = model.to_vartype(Vartype::Spin);
        &spin
    };
    let n = m.num_variables();
    let mut row = vec![0.0; n];
    for (i, j, w) in m.quadratic() {
        row[i] += w * w;
        row[j] += w * w;
    }
    let mean = if n == 0 {
        0.0
    } else {
        row.iter().sum::<f64>() / n as f64
    };
    let x = 1.5 * mean.sqrt();
    if x > 0.0 {
        return x;
    }
    let hmax = m.linear().iter().fold(0.0f64, |a, h| a.max(h.abs()));
    if hmax > 0.0 {
        hmax
    } else {
        1.0
    }
}

/// Physical model for `model` under `e`. Fields are split evenly across a
/// chain, each logical coupling is divided evenly over the couplers joining
/// the two chains, and chain couplers get `-(multiplier * x)` in spin form.
/// `x` is the embedding's chain strength, or the default for `model`.
/// Physical variables are the sorted qubits, recorded in the id table.
pub fn apply_embedding(model: &Bqm, e: &Embedding, hw: &HardwareGraph, multiplier: f64) -> Result<Bqm> {
    let source = crate::topology::model_graph(model);
    ensure_valid(&source, hw, e)?;
    let x = multiplier * e.chain_strength.unwrap_or_else(|| default_chain_strength(model));
    let qubits = e.qubits();
    let index: HashMap<usize, usize> = qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut owner = HashMap::new();
    for (v, chain) in e.chains().iter().enumerate() {
        for &q in chain {
            owner.insert(q, v);
        }
    }
    let mut phys = Bqm::new(model.vartype(), qubits.len());
    phys.set_offset(model.offset());
    for (v, chain) in e.chains().iter().enumerate() {
        let share = model.linear()[v] / chain.len() as f64;
        for &q in chain {
            phys.add_linear(index[&q], share)?;
        }
    }
    let mut between: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    let mut inside: Vec<(usize, usize)> = Vec::new();
    for &q in &qubits {
        for &p in hw.neighbors(q) {
            if p <= q {
                continue;
            }
            let (Some(&a), Some(&b)) = (owner.get(&q), owner.get(&p)) else {
                continue;
            };
            if a == b {
                inside.push((q, p));
            } else {
                between.entry((a.min(b), a.max(b))).or_default().push((q, p));
            }
        }
    }
    for (a, b, w) in model.quadratic() {
        let couplers = &between[&(a, b)];
        let share = w / couplers.len() as f64;
        for &(q, p) in couplers {
            phys.add_interaction(index[&q], index[&p], share)?;
        }
    }
    for (q, p) in inside {
        let (i, j) = (index[&q], index[&p]);
        match model.vartype() {
            Vartype::Spin => phys.add_interaction(i, j, -x)?,
            // -x s_i s_j with s = 2b - 1
            Vartype::Binary => {
                phys.add_interaction(i, j, -4.0 * x)?;
                phys.add_linear(i, 2.0 * x)?;
                phys.add_linear(j, 2.0 * x)?;
                phys.set_offset(phys.offset() - x);
            }
        }
    }
    phys.set_ids(qubits.iter().map(|&q| q as u64).collect())?;
    phys.set_label(model.label().to_string());
    Ok(phys)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChainBreakReport {
    pub broken: Vec<bool>,
    pub num_broken: usize,
}

/// Majority vote per chain. `sample` is indexed like the physical model
/// (sorted qubits of `e`); ties are settled by a coin seeded with `seed`.
pub fn unembed(sample: &Assignment, e: &Embedding, seed: u64) -> Result<(Assignment, ChainBreakReport)> {
    let qubits = e.qubits();
    if sample.len() != qubits.len() {
        return Err(Error::AssignmentLength {
            expected: qubits.len(),
            got: sample.len(),
        });
    }
    let index: HashMap<usize, usize> = qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut rng = seed::rng(seed);
    let mut report = ChainBreakReport {
        broken: vec![false; e.num_chains()],
        num_broken: 0,
    };
    let values = sample.values();
    let mut out = Vec::with_capacity(e.num_chains());
    for (v, chain) in e.chains().iter().enumerate() {
        let first = values[index[&chain[0]]];
        let mut same = 0usize;
        let mut other = None;
        for &q in chain {
            let s = values[index[&q]];
            if s == first {
                same += 1;
            } else {
                other = Some(s);
            }
        }
        let value = match other {
            None => first,
            Some(o) => {
                report.broken[v] = true;
                report.num_broken += 1;
                let diff = chain.len() - same;
                match same.cmp(&diff) {
                    std::cmp::Ordering::Greater => first,
                    std::cmp::Ordering::Less => o,
                    std::cmp::Ordering::Equal => {
                        if rng.random::<bool>() {
                            first.max(o)
                        } else {
                            first.min(o)
                        }
                    }
                }
            }
        };
        out.push(value);
    }
    Ok((Assignment::new(out), report))
}

/// Energy of the chain couplers alone for an unbroken physical sample:
/// `-(multiplier * x)` per intra-chain coupler.
pub fn chain_energy(e: &Embedding, hw: &HardwareGraph, x: f64) -> f64 {
    let couplers: usize = e
        .chains()
        .iter()
        .map(|c| {
            let set: BTreeSet<usize> = c.iter().copied().collect();
            c.iter()
                .map(|&q| hw.neighbors(q).iter().filter(|&&p| p > q && set.contains(&p)).count())
                .sum::<usize>()
        })
        .sum();
    -(couplers as f64) * x
}

/// Lifts a logical assignment to the physical qubits of `e`.
pub fn embed_assignment(logical: &Assignment, e: &Embedding) -> Assignment {
    let qubits = e.qubits();
    let index: HashMap<usize, usize> = qubits.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut out = vec![0i8; qubits.len()];
    for (v, chain) in e.chains().iter().enumerate() {
        for &q in chain {
            out[index[&q]] = logical.values()[v];
        }
    }
    Assignment::new(out)
}
