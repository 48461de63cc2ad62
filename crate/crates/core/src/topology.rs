//! Hardware and application graphs.
//!
//! Pegasus qubits use the `(u, w, k, z)` coordinate scheme: `u` is the
//! orientation (0 vertical, 1 horizontal), `w` the major cell offset, `k`
//! the track within the cell and `z` the segment along the line. A qubit
//! occupies the fine position `12 w + k` across its orientation and spans
//! twelve fine positions along it, starting at `12 z + offset[k]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Track offsets of vertical qubits.
pub const PEGASUS_VERTICAL_OFFSETS: [usize; 12] = [2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6];
/// Track offsets of horizontal qubits.
pub const PEGASUS_HORIZONTAL_OFFSETS: [usize; 12] = [6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10];

const DREG_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TopologyTag {
    Pegasus { m: usize },
    Lattice3d { x: usize, y: usize, z: usize },
    Clique { k: usize },
    Dreg { n: usize, d: usize },
    Imported,
}

impl fmt::Display for TopologyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyTag::Pegasus { m } => write!(f, "pegasus {m}"),
            TopologyTag::Lattice3d { x, y, z } => write!(f, "lattice3d {x} {y} {z}"),
            TopologyTag::Clique { k } => write!(f, "clique {k}"),
            TopologyTag::Dreg { n, d } => write!(f, "dreg {n} {d}"),
            TopologyTag::Imported => f.write_str("imported"),
        }
    }
}

impl TopologyTag {
    fn parse(text: &str) -> Option<TopologyTag> {
        let parts: Vec<&str> = text.split_whitespace().collect();
        let num = |i: usize| parts.get(i).and_then(|s| s.parse::<usize>().ok());
        match parts.first().copied()? {
            "pegasus" => Some(TopologyTag::Pegasus { m: num(1)? }),
            "lattice3d" => Some(TopologyTag::Lattice3d {
                x: num(1)?,
                y: num(2)?,
                z: num(3)?,
            }),
            "clique" => Some(TopologyTag::Clique { k: num(1)? }),
            "dreg" => Some(TopologyTag::Dreg { n: num(1)?, d: num(2)? }),
            "imported" => Some(TopologyTag::Imported),
            _ => None,
        }
    }
}

/// Simple undirected graph with sparse integer node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareGraph {
    tag: TopologyTag,
    present: Vec<bool>,
    adj: Vec<Vec<usize>>,
    num_nodes: usize,
    num_edges: usize,
    disabled_nodes: BTreeSet<usize>,
    disabled_edges: BTreeSet<(usize, usize)>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl HardwareGraph {
    /// Builds a graph from explicit nodes and edges; edge endpoints must be
    /// listed nodes.
    pub fn from_edges(
        tag: TopologyTag,
        nodes: impl IntoIterator<Item = usize>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let nodes: BTreeSet<usize> = nodes.into_iter().collect();
        let capacity = nodes.iter().next_back().map_or(0, |&m| m + 1);
        let mut present = vec![false; capacity];
        for &q in &nodes {
            present[q] = true;
        }
        let mut edge_set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::Graph(format!("self-loop on node {i}")));
            }
            for q in [i, j] {
                if !present.get(q).copied().unwrap_or(false) {
                    return Err(Error::Graph(format!("edge ({i}, {j}) references missing node {q}")));
                }
            }
            edge_set.insert(ordered(i, j));
        }
        let mut adj = vec![Vec::new(); capacity];
        for &(i, j) in &edge_set {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(HardwareGraph {
            tag,
            present,
            adj,
            num_nodes: nodes.len(),
            num_edges: edge_set.len(),
            disabled_nodes: BTreeSet::new(),
            disabled_edges: BTreeSet::new(),
        })
    }

    pub fn tag(&self) -> TopologyTag {
        self.tag
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// One past the largest node id.
    pub fn capacity(&self) -> usize {
        self.present.len()
    }

    pub fn has_node(&self, q: usize) -> bool {
        self.present.get(q).copied().unwrap_or(false)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.has_node(i) && self.adj[i].binary_search(&j).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.present.iter().enumerate().filter(|(_, &p)| p).map(|(q, _)| q)
    }

    /// Edges `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        self.adj.get(q).map_or(&[], |v| v.as_slice())
    }

    pub fn degree(&self, q: usize) -> usize {
        self.neighbors(q).len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn disabled_nodes(&self) -> &BTreeSet<usize> {
        &self.disabled_nodes
    }

    pub fn disabled_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.disabled_edges
    }

    /// Removes nodes (with their incident edges) and edges.
    pub fn apply_yield(&self, nodes: &BTreeSet<usize>, edges: &BTreeSet<(usize, usize)>) -> Result<HardwareGraph> {
        if let Some(&q) = nodes.iter().find(|&&q| !self.has_node(q)) {
            return Err(Error::UnknownId { kind: "node", id: q });
        }
        let edges: BTreeSet<(usize, usize)> = edges.iter().map(|&(i, j)| ordered(i, j)).collect();
        if let Some(&(i, _)) = edges.iter().find(|&&(i, j)| !self.has_edge(i, j)) {
            return Err(Error::UnknownId { kind: "edge", id: i });
        }
        let mut out = HardwareGraph::from_edges(
            self.tag,
            self.nodes().filter(|q| !nodes.contains(q)),
            self.edges()
                .filter(|&(i, j)| !nodes.contains(&i) && !nodes.contains(&j) && !edges.contains(&(i, j))),
        )?;
        out.disabled_nodes = self.disabled_nodes.union(nodes).copied().collect();
        out.disabled_edges = self.disabled_edges.union(&edges).copied().collect();
        Ok(out)
    }

    /// Disables each node with probability `1 - node_yield`, then disables
    /// edges so the expected surviving edge count is `edge_yield` times the
    /// original.
    pub fn random_yield(&self, node_yield: f64, edge_yield: f64, seed: u64) -> Result<HardwareGraph> {
        for p in [node_yield, edge_yield] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Param(format!("yield {p} outside [0, 1]")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dead_nodes: BTreeSet<usize> = self.nodes().filter(|_| rng.random::<f64>() >= node_yield).collect();
        let surviving: Vec<(usize, usize)> = self
            .edges()
            .filter(|(i, j)| !dead_nodes.contains(i) && !dead_nodes.contains(j))
            .collect();
        let keep = if surviving.is_empty() {
            1.0
        } else {
            (edge_yield * self.num_edges as f64 / surviving.len() as f64).min(1.0)
        };
        let dead_edges: BTreeSet<(usize, usize)> =
            surviving.into_iter().filter(|_| rng.random::<f64>() >= keep).collect();
        self.apply_yield(&dead_nodes, &dead_edges)
    }

    /// Connected components reachable inside `subset`.
    pub fn is_connected_subset(&self, subset: &BTreeSet<usize>) -> bool {
        let Some(&start) = subset.iter().next() else {
            return false;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(q) = stack.pop() {
            for &r in self.neighbors(q) {
                if subset.contains(&r) && seen.insert(r) {
                    stack.push(r);
                }
            }
        }
        seen.len() == subset.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#topology {}\n{} {}\n", self.tag, self.num_nodes, self.num_edges);
        for (i, j) in self.edges() {
            out.push_str(&format!("{i} {j}\n"));
        }
        let isolated: Vec<usize> = self.nodes().filter(|&q| self.degree(q) == 0).collect();
        if !isolated.is_empty() {
            out.push_str("#nodes\n");
            for q in isolated {
                out.push_str(&format!("{q}\n"));
            }
        }
        if !self.disabled_nodes.is_empty() {
            out.push_str("#disabled nodes\n");
            for q in &self.disabled_nodes {
                out.push_str(&format!("{q}\n"));
            }
        }
        if !self.disabled_edges.is_empty() {
            out.push_str("#disabled edges\n");
            for (i, j) in &self.disabled_edges {
                out.push_str(&format!("{i} {j}\n"));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<HardwareGraph> {
        #[derive(PartialEq)]
        enum Section {
            Edges,
            Nodes,
            DisabledNodes,
            DisabledEdges,
        }
        let mut tag = TopologyTag::Imported;
        let mut header: Option<(usize, usize)> = None;
        let mut section = Section::Edges;
        let mut nodes = BTreeSet::new();
        let mut edges = Vec::new();
        let mut disabled_nodes = BTreeSet::new();
        let mut disabled_edges = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = |what: &str| Error::Graph(format!("line {}: {what}: `{line}`", lineno + 1));
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(t) = rest.strip_prefix("topology") {
                    tag = TopologyTag::parse(t).ok_or_else(|| bad("unknown topology tag"))?;
                } else if rest == "nodes" {
                    section = Section::Nodes;
                } else if rest == "disabled nodes" || rest == "disabled" {
                    section = Section::DisabledNodes;
                } else if rest == "disabled edges" {
                    section = Section::DisabledEdges;
                }
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("expected integers"))?;
            if header.is_none() {
                match nums[..] {
                    [q, c] => header = Some((q, c)),
                    _ => return Err(bad("expected `q c` header")),
                }
                continue;
            }
            match (&section, &nums[..]) {
                (Section::Edges, &[i, j]) => {
                    nodes.insert(i);
                    nodes.insert(j);
                    edges.push((i, j));
                }
                (Section::Nodes, &[q]) => {
                    nodes.insert(q);
                }
                (Section::DisabledNodes, &[q]) => {
                    disabled_nodes.insert(q);
                }
                (Section::DisabledEdges, &[i, j]) => {
                    disabled_edges.insert(ordered(i, j));
                }
                _ => return Err(bad("unexpected field count")),
            }
        }
        let (q, c) = header.ok_or_else(|| Error::Graph("missing `q c` header".into()))?;
        let mut g = HardwareGraph::from_edges(tag, nodes, edges)?;
        if g.num_nodes != q || g.num_edges != c {
            return Err(Error::Graph(format!(
                "header declares {q} nodes and {c} edges, body has {} and {}",
                g.num_nodes, g.num_edges
            )));
        }
        g.disabled_nodes = disabled_nodes;
        g.disabled_edges = disabled_edges;
        Ok(g)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<HardwareGraph> {
        HardwareGraph::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Pegasus qubit coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PegasusCoord {
    pub u: usize,
    pub w: usize,
    pub k: usize,
    pub z: usize,
}

impl PegasusCoord {
    pub fn new(u: usize, w: usize, k: usize, z: usize) -> Self {
        PegasusCoord { u, w, k, z }
    }

    pub fn to_linear(self, m: usize) -> usize {
        let m1 = m - 1;
        ((self.u * m + self.w) * 12 + self.k) * m1 + self.z
    }

    pub fn from_linear(q: usize, m: usize) -> Self {
        let m1 = m - 1;
        let z = q % m1;
        let rest = q / m1;
        let k = rest % 12;
        let rest = rest / 12;
        PegasusCoord {
            u: rest / m,
            w: rest % m,
            k,
            z,
        }
    }

    /// Fine position across the qubit's orientation.
    pub fn position(self) -> usize {
        12 * self.w + self.k
    }

    /// Half-open fine range covered along the qubit's orientation.
    pub fn span(self) -> (usize, usize) {
        let off = if self.u == 0 {
            PEGASUS_VERTICAL_OFFSETS[self.k]
        } else {
            PEGASUS_HORIZONTAL_OFFSETS[self.k]
        };
        (12 * self.z + off, 12 * self.z + off + 12)
    }

    /// Whether the coordinate belongs to the Pegasus fabric of size `m`.
    pub fn in_fabric(self, m: usize) -> bool {
        if self.u > 1 || self.w >= m || self.k >= 12 || self.z + 1 >= m {
            return false;
        }
        let crossing = if self.u == 0 {
            &PEGASUS_HORIZONTAL_OFFSETS
        } else {
            &PEGASUS_VERTICAL_OFFSETS
        };
        let lo = *crossing.iter().min().unwrap();
        let hi = 12 * (m - 1) + *crossing.iter().max().unwrap();
        (lo..hi).contains(&self.position())
    }

    /// The orthogonal qubit at fine position `along` on line `across`, if
    /// that line has a segment covering `along`.
    pub(crate) fn segment_at(u: usize, across: usize, along: usize, m: usize) -> Option<PegasusCoord> {
        let (w, k) = (across / 12, across % 12);
        let off = if u == 0 {
            PEGASUS_VERTICAL_OFFSETS[k]
        } else {
            PEGASUS_HORIZONTAL_OFFSETS[k]
        };
        if along < off {
            return None;
        }
        let c = PegasusCoord {
            u,
            w,
            k,
            z: (along - off) / 12,
        };
        c.in_fabric(m).then_some(c)
    }
}

/// The Pegasus graph `P_m` restricted to its fabric.
pub fn pegasus(m: usize) -> Result<HardwareGraph> {
    if m < 2 {
        return Err(Error::Param(format!("pegasus size m = {m} must be at least 2")));
    }
    let m1 = m - 1;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for u in 0..2 {
        for w in 0..m {
            for k in 0..12 {
                for z in 0..m1 {
                    let c = PegasusCoord::new(u, w, k, z);
                    if !c.in_fabric(m) {
                        continue;
                    }
                    let q = c.to_linear(m);
                    nodes.push(q);
                    // external coupler to the next segment on the line
                    let next = PegasusCoord::new(u, w, k, z + 1);
                    if next.in_fabric(m) {
                        edges.push((q, next.to_linear(m)));
                    }
                    // odd coupler to the paired track
                    if k % 2 == 0 {
                        let odd = PegasusCoord::new(u, w, k + 1, z);
                        if odd.in_fabric(m) {
                            edges.push((q, odd.to_linear(m)));
                        }
                    }
                    // internal couplers to every crossing horizontal qubit
                    if u == 0 {
                        let (lo, hi) = c.span();
                        for row in lo..hi.min(12 * m) {
                            if let Some(h) = PegasusCoord::segment_at(1, row, c.position(), m) {
                                edges.push((q, h.to_linear(m)));
                            }
                        }
                    }
                }
            }
        }
    }
    HardwareGraph::from_edges(TopologyTag::Pegasus { m }, nodes, edges)
}

/// Whether two Pegasus qubits are joined by a coupler in the full fabric.
pub fn pegasus_coupled(a: PegasusCoord, b: PegasusCoord, m: usize) -> bool {
    if !a.in_fabric(m) || !b.in_fabric(m) || a == b {
        return false;
    }
    if a.u != b.u {
        let (v, h) = if a.u == 0 { (a, b) } else { (b, a) };
        let (vlo, vhi) = v.span();
        let (hlo, hhi) = h.span();
        return (vlo..vhi).contains(&h.position()) && (hlo..hhi).contains(&v.position());
    }
    if a.w == b.w && a.k == b.k {
        return a.z.abs_diff(b.z) == 1;
    }
    a.w == b.w && a.z == b.z && a.k / 2 == b.k / 2
}

/// Node id of lattice site `(x, y, z)` in an `X x Y x Z` lattice.
pub fn lattice_index(dims: (usize, usize, usize), x: usize, y: usize, z: usize) -> usize {
    x + dims.0 * (y + dims.1 * z)
}

pub fn lattice_coord(dims: (usize, usize, usize), id: usize) -> (usize, usize, usize) {
    (id % dims.0, (id / dims.0) % dims.1, id / (dims.0 * dims.1))
}

/// Simple cubic lattice with open boundaries.
pub fn lattice3d(x: usize, y: usize, z: usize) -> Result<HardwareGraph> {
    if x < 2 || y < 2 || z < 2 {
        return Err(Error::Param(format!(
            "lattice dimensions {x}x{y}x{z} must all be at least 2"
        )));
    }
    let dims = (x, y, z);
    let mut edges = Vec::new();
    for c in 0..z {
        for b in 0..y {
            for a in 0..x {
                let id = lattice_index(dims, a, b, c);
                if a + 1 < x {
                    edges.push((id, lattice_index(dims, a + 1, b, c)));
                }
                if b + 1 < y {
                    edges.push((id, lattice_index(dims, a, b + 1, c)));
                }
                if c + 1 < z {
                    edges.push((id, lattice_index(dims, a, b, c + 1)));
                }
            }
        }
    }
    HardwareGraph::from_edges(TopologyTag::Lattice3d { x, y, z }, 0..x * y * z, edges)
}

pub fn clique(k: usize) -> Result<HardwareGraph> {
    if k < 1 {
        return Err(Error::Param("clique size must be at least 1".into()));
    }
    let edges = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j)));
    HardwareGraph::from_edges(TopologyTag::Clique { k }, 0..k, edges)
}

/// Random `d`-regular simple graph by stub pairing with rejection.
pub fn dreg(n: usize, d: usize, seed: u64) -> Result<HardwareGraph> {
    if d >= n || !(n * d).is_multiple_of(2) {
        return Err(Error::Param(format!("no simple {d}-regular graph on {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, d)).collect();
    'attempt: for _ in 0..DREG_RETRIES {
        stubs.shuffle(&mut rng);
        let mut edges = BTreeSet::new();
        for pair in stubs.chunks_exact(2) {
            let (i, j) = ordered(pair[0], pair[1]);
            if i == j || !edges.insert((i, j)) {
                continue 'attempt;
            }
        }
        return HardwareGraph::from_edges(TopologyTag::Dreg { n, d }, 0..n, edges);
    }
    Err(Error::RetryCap(DREG_RETRIES))
}

/// The interaction graph of a model: variables `0..n`, one edge per coupling.
pub fn model_graph(model: &crate::model::Bqm) -> HardwareGraph {
    HardwareGraph::from_edges(
        TopologyTag::Imported,
        0..model.num_variables(),
        model.quadratic().map(|(i, j, _)| (i, j)),
    )
    .expect("model couplings reference existing variables")
}

/// Degree histogram, for reporting.
pub fn degree_histogram(g: &HardwareGraph) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for q in g.nodes() {
        *hist.entry(g.degree(q)).or_insert(0) += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pegasus_rejects_small_m() {
        assert!(pegasus(1).is_err());
    }

    #[test]
    fn pegasus_coordinates_round_trip() {
        let m = 5;
        for q in 0..24 * m * (m - 1) {
            assert_eq!(PegasusCoord::from_linear(q, m).to_linear(m), q);
        }
    }

    #[test]
    fn pegasus_coupler_predicate_matches_graph() {
        let m = 3;
        let g = pegasus(m).unwrap();
        let nodes: Vec<usize> = g.nodes().collect();
        for &a in &nodes {
            for &b in &nodes {
                let expect = g.has_edge(a, b);
                let got = pegasus_coupled(PegasusCoord::from_linear(a, m), PegasusCoord::from_linear(b, m), m);
                assert_eq!(expect, got, "{a} {b}");
            }
        }
    }

    #[test]
    fn unit_cube() {
        let g = lattice3d(2, 2, 2).unwrap();
        assert_eq!((g.num_nodes(), g.num_edges()), (8, 12));
        assert!(lattice3d(1, 4, 4).is_err());
    }

    #[test]
    fn clique_of_one() {
        let g = clique(1).unwrap();
        assert_eq!((g.num_nodes(), g.num_edges()), (1, 0));
    }

    #[test]
    fn dreg_rejects_odd_stub_count() {
        assert!(dreg(5, 3, 0).is_err());
        assert!(dreg(4, 4, 0).is_err());
    }

    #[test]
    fn disabling_a_node_drops_its_edges() {
        let g = pegasus(3).unwrap();
        let q = g.nodes().max_by_key(|&q| g.degree(q)).unwrap();
        let d = g.degree(q);
        let h = g.apply_yield(&[q].into(), &BTreeSet::new()).unwrap();
        assert_eq!(h.num_edges(), g.num_edges() - d);
        assert_eq!(h.num_nodes(), g.num_nodes() - 1);
    }

    #[test]
    fn yield_rejects_unknown_ids() {
        let g = clique(3).unwrap();
        assert!(g.apply_yield(&[7].into(), &BTreeSet::new()).is_err());
        assert!(g.apply_yield(&BTreeSet::new(), &[(0, 5)].into()).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let g = pegasus(2).unwrap();
        let h = g
            .apply_yield(&[g.nodes().next().unwrap()].into(), &BTreeSet::new())
            .unwrap();
        let back = HardwareGraph::from_text(&h.to_text()).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn text_format_header_mismatch() {
        assert!(HardwareGraph::from_text("3 1\n0 1\n").is_err());
        assert!(HardwareGraph::from_text("2 1\n0 x\n").is_err());
    }
}
