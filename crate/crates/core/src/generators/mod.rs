//! Instance generators for the benchmark input classes.

mod bpsp;
mod cbfm;
mod cdma;
mod fcl;
mod import;
mod spin_glass;
mod tile;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bpsp::{bpsp_from_sequence, gen_bpsp, paint_changes, BpspInstance};
pub use cbfm::{gen_cbfm, CbfmParams};
pub use cdma::{cdma_from_parts, gen_cdma, CdmaInstance, CdmaParams};
pub use fcl::{fcl_couplings, gen_fcl, FclInstance, FclLoop, FclParams};
pub use import::{edge_list_to_bqm, import_instance};
pub use spin_glass::{gen_spin_glass, nat7_values, SPIN_VALUES};
pub use tile::{gen_tile, tile_triangles, TileParams, TILE_PATTERNS};

use crate::error::{Error, Result};
use crate::model::Bqm;
use crate::seed;
use crate::topology::{self, HardwareGraph};

/// How instances of a class reach the hardware graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    /// Generated directly on the hardware graph.
    Native,
    /// Cubic lattices with the two-qubit-chain construction.
    Lattice,
    Heuristic,
    Clique,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InstanceClass {
    #[serde(rename = "NAT1")]
    Nat1,
    #[serde(rename = "NAT7")]
    Nat7,
    #[serde(rename = "CBFM")]
    Cbfm,
    #[serde(rename = "TILE")]
    Tile,
    #[serde(rename = "FCL")]
    Fcl,
    #[serde(rename = "3DLAT")]
    Lat3d,
    #[serde(rename = "DREG03")]
    Dreg03,
    #[serde(rename = "SK")]
    Sk,
    #[serde(rename = "CDMA")]
    Cdma,
    #[serde(rename = "BPSP")]
    Bpsp,
    #[serde(rename = "IMPORT")]
    Import,
}

impl InstanceClass {
    pub const ALL: [InstanceClass; 11] = [
        InstanceClass::Nat1,
        InstanceClass::Nat7,
        InstanceClass::Cbfm,
        InstanceClass::Tile,
        InstanceClass::Fcl,
        InstanceClass::Lat3d,
        InstanceClass::Dreg03,
        InstanceClass::Sk,
        InstanceClass::Cdma,
        InstanceClass::Bpsp,
        InstanceClass::Import,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceClass::Nat1 => "NAT1",
            InstanceClass::Nat7 => "NAT7",
            InstanceClass::Cbfm => "CBFM",
            InstanceClass::Tile => "TILE",
            InstanceClass::Fcl => "FCL",
            InstanceClass::Lat3d => "3DLAT",
            InstanceClass::Dreg03 => "DREG03",
            InstanceClass::Sk => "SK",
            InstanceClass::Cdma => "CDMA",
            InstanceClass::Bpsp => "BPSP",
            InstanceClass::Import => "IMPORT",
        }
    }

    pub fn embedding_kind(self) -> EmbeddingKind {
        match self {
            InstanceClass::Nat1
            | InstanceClass::Nat7
            | InstanceClass::Cbfm
            | InstanceClass::Tile
            | InstanceClass::Fcl => EmbeddingKind::Native,
            InstanceClass::Lat3d => EmbeddingKind::Lattice,
            InstanceClass::Dreg03 | InstanceClass::Bpsp | InstanceClass::Import => EmbeddingKind::Heuristic,
            InstanceClass::Sk | InstanceClass::Cdma => EmbeddingKind::Clique,
        }
    }

    pub fn is_native(self) -> bool {
        self.embedding_kind() == EmbeddingKind::Native
    }
}

impl fmt::Display for InstanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        let alias = match upper.as_str() {
            "LAT3D" | "LATTICE3D" => "3DLAT",
            other => other,
        };
        InstanceClass::ALL
            .into_iter()
            .find(|c| c.name() == alias)
            .ok_or_else(|| Error::Param(format!("unknown instance class `{s}`")))
    }
}

/// Everything needed to regenerate one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub class: InstanceClass,
    /// Class-specific size: Pegasus `m` for native classes, the side (or
    /// `XxYxZ` dimensions) for 3DLAT, node count for DREG03/SK/CDMA and the
    /// car count for BPSP.
    pub size: Vec<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl InstanceSpec {
    pub fn new(class: InstanceClass, size: Vec<usize>, seed: u64) -> Self {
        InstanceSpec {
            class,
            size,
            seed,
            path: None,
        }
    }

    /// Parses `"6"` or `"4x5x6"` style size strings.
    pub fn parse_size(text: &str) -> Result<Vec<usize>> {
        text.split(['x', 'X', ','])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Param(format!("bad size `{text}`")))
            })
            .collect()
    }

    fn primary_size(&self) -> Result<usize> {
        self.size
            .first()
            .copied()
            .ok_or_else(|| Error::Param(format!("{} needs a size", self.class)))
    }

    pub fn lattice_dims(&self) -> Result<(usize, usize, usize)> {
        match self.size[..] {
            [l] => Ok((l, l, l)),
            [x, y, z] => Ok((x, y, z)),
            _ => Err(Error::Param("3DLAT size must be `L` or `XxYxZ`".into())),
        }
    }
}

/// Generates the logical model for `spec`. Native classes are built on
/// `hardware` when given, otherwise on a full Pegasus graph of size `m`.
pub fn generate(spec: &InstanceSpec, hardware: Option<&HardwareGraph>) -> Result<Bqm> {
    let graph_seed = seed::derive(spec.seed, &[0]);
    let weight_seed = seed::derive(spec.seed, &[1]);
    let native_graph = || -> Result<HardwareGraph> {
        match hardware {
            Some(hw) => Ok(hw.clone()),
            None => topology::pegasus(spec.primary_size()?),
        }
    };
    let mut model = match spec.class {
        InstanceClass::Nat1 => gen_spin_glass(&native_graph()?, &SPIN_VALUES, weight_seed)?,
        InstanceClass::Nat7 => gen_spin_glass(&native_graph()?, &nat7_values(), weight_seed)?,
        InstanceClass::Cbfm => gen_cbfm(&native_graph()?, &CbfmParams::default(), weight_seed)?,
        InstanceClass::Tile => gen_tile(&native_graph()?, &TileParams::default(), weight_seed)?,
        InstanceClass::Fcl => gen_fcl(&native_graph()?, &FclParams::default(), weight_seed)?.model,
        InstanceClass::Lat3d => {
            let (x, y, z) = spec.lattice_dims()?;
            gen_spin_glass(&topology::lattice3d(x, y, z)?, &SPIN_VALUES, weight_seed)?
        }
        InstanceClass::Dreg03 => gen_spin_glass(
            &topology::dreg(spec.primary_size()?, 3, graph_seed)?,
            &SPIN_VALUES,
            weight_seed,
        )?,
        InstanceClass::Sk => gen_spin_glass(&topology::clique(spec.primary_size()?)?, &SPIN_VALUES, weight_seed)?,
        InstanceClass::Cdma => gen_cdma(&CdmaParams::new(spec.primary_size()?), weight_seed)?.model,
        InstanceClass::Bpsp => gen_bpsp(spec.primary_size()?, weight_seed)?.model,
        InstanceClass::Import => {
            let path = spec
                .path
                .as_ref()
                .ok_or_else(|| Error::Param("IMPORT instances need a path".into()))?;
            import_instance(path)?
        }
    };
    if model.label().is_empty() {
        let size: Vec<String> = spec.size.iter().map(usize::to_string).collect();
        model.set_label(format!("{}-{}-{}", spec.class, size.join("x"), spec.seed));
    }
    Ok(model)
}

/// A model on the nodes of `g`, with the node ids as its id table.
pub(crate) fn graph_model(g: &HardwareGraph) -> (Bqm, Vec<usize>) {
    let nodes: Vec<usize> = g.nodes().collect();
    let mut index = vec![usize::MAX; g.capacity()];
    for (i, &q) in nodes.iter().enumerate() {
        index[q] = i;
    }
    let mut model = Bqm::new(crate::model::Vartype::Spin, nodes.len());
    model
        .set_ids(nodes.iter().map(|&q| q as u64).collect())
        .expect("graph nodes are ascending");
    (model, index)
}
