//! Benchmark instances in both spaces: the logical model and, for classes
//! that need one, its embedding on the hardware graph.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embedding::{apply_embedding, embed_clique, embed_heuristic, embed_lattice3d, Embedding};
use crate::error::{Error, Result};
use crate::generators::{generate, EmbeddingKind, InstanceClass, InstanceSpec};
use crate::model::Bqm;
use crate::topology::{model_graph, pegasus, HardwareGraph};

/// A Pegasus graph with optional random yield loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    pub pegasus: usize,
    pub node_yield: f64,
    pub edge_yield: f64,
    pub seed: u64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        HardwareConfig {
            pegasus: 16,
            node_yield: 1.0,
            edge_yield: 1.0,
            seed: 0,
        }
    }
}

impl HardwareConfig {
    pub fn build(&self) -> Result<HardwareGraph> {
        let g = pegasus(self.pegasus)?;
        if self.node_yield >= 1.0 && self.edge_yield >= 1.0 {
            Ok(g)
        } else {
            g.random_yield(self.node_yield, self.edge_yield, self.seed)
        }
    }

    fn with_size(&self, m: usize) -> HardwareConfig {
        HardwareConfig {
            pegasus: m,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Embedded {
    pub embedding: Embedding,
    pub hw: Arc<HardwareGraph>,
    /// The embedded model at unit chain-strength multiplier.
    pub physical: Bqm,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    /// Class label used to group instances; the class name unless renamed.
    pub label: String,
    pub spec: InstanceSpec,
    pub index: usize,
    pub logical: Bqm,
    /// `None` for classes generated directly on the hardware graph.
    pub embedded: Option<Embedded>,
}

impl Instance {
    pub fn class(&self) -> InstanceClass {
        self.spec.class
    }

    /// Renames the class label, e.g. to tell two imported sources apart.
    pub fn relabel(mut self, label: &str) -> Self {
        self.id = format!("{label}-{}", self.index);
        self.label = label.to_string();
        self
    }

    /// The model an annealer is programmed with.
    pub fn physical(&self) -> &Bqm {
        self.embedded.as_ref().map_or(&self.logical, |e| &e.physical)
    }

    pub fn summary(&self) -> InstanceSummary {
        let e = self.embedded.as_ref();
        InstanceSummary {
            id: self.id.clone(),
            label: self.label.clone(),
            class: self.class(),
            index: self.index,
            seed: self.spec.seed,
            size: self.spec.size.clone(),
            n: self.logical.num_variables(),
            m: self.logical.num_interactions(),
            q: self.physical().num_variables(),
            c: self.physical().num_interactions(),
            mean_chain_length: e.map(|e| e.embedding.mean_chain_length()),
            max_chain_length: e.map(|e| e.embedding.max_chain_length()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub id: String,
    pub label: String,
    pub class: InstanceClass,
    pub index: usize,
    pub seed: u64,
    pub size: Vec<usize>,
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub c: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_chain_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_chain_length: Option<usize>,
}

/// Embeds `logical` with the method its class calls for.
pub fn embed_for_class(
    spec: &InstanceSpec,
    logical: &Bqm,
    hw: &HardwareGraph,
    seed: u64,
    tries: usize,
) -> Result<Option<Embedding>> {
    let e = match spec.class.embedding_kind() {
        EmbeddingKind::Native => return Ok(None),
        EmbeddingKind::Lattice => {
            let (x, y, z) = spec.lattice_dims()?;
            embed_lattice3d(x, y, z, hw, seed)?
        }
        EmbeddingKind::Clique => embed_clique(logical.num_variables(), hw, seed)?,
        EmbeddingKind::Heuristic => embed_heuristic(&model_graph(logical), hw, seed, tries)?,
    };
    Ok(Some(e))
}

/// Generates instance `index` of `spec` and embeds it on `hw` if needed.
/// Native classes use a Pegasus graph of their own size with the yield
/// settings of `hw_config`.
pub fn build_instance(
    spec: InstanceSpec,
    index: usize,
    hw: &Arc<HardwareGraph>,
    hw_config: &HardwareConfig,
    embed_tries: usize,
) -> Result<Instance> {
    let id = format!("{}-{}", spec.class, index);
    let logical = if spec.class.is_native() {
        let m = *spec
            .size
            .first()
            .ok_or_else(|| Error::Param(format!("{} needs a Pegasus size", spec.class)))?;
        let graph = if m == hw_config.pegasus {
            hw.as_ref().clone()
        } else {
            hw_config.with_size(m).build()?
        };
        generate(&spec, Some(&graph))?
    } else {
        generate(&spec, None)?
    };
    let embedding = embed_for_class(&spec, &logical, hw, spec.seed, embed_tries)?;
    let embedded = match embedding {
        None => None,
        Some(e) => {
            let physical = apply_embedding(&logical, &e, hw, 1.0)?;
            let x = crate::embedding::default_chain_strength(&logical);
            Some(Embedded {
                embedding: e.with_chain_strength(x),
                hw: Arc::clone(hw),
                physical,
            })
        }
    };
    Ok(Instance {
        id,
        label: spec.class.name().to_string(),
        spec,
        index,
        logical,
        embedded,
    })
}
