use rand::Rng;

use super::graph_model;
use crate::error::{Error, Result};
use crate::model::Bqm;
use crate::seed;
use crate::topology::HardwareGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbfmParams {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_field: f64,
}

impl Default for CbfmParams {
    fn default() -> Self {
        CbfmParams {
            p_plus: 0.10,
            p_minus: 0.625,
            p_field: 0.10,
        }
    }
}

impl CbfmParams {
    fn validate(&self) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.p_plus) || !unit(self.p_minus) || !unit(self.p_field) {
            return Err(Error::Param("CBFM probabilities must lie in [0, 1]".into()));
        }
        if self.p_plus + self.p_minus > 1.0 {
            return Err(Error::Param("CBFM coupler probabilities sum above 1".into()));
        }
        Ok(())
    }
}

/// Corrupted biased ferromagnet. Every coupler of `g` is stored, including
/// the zero ones.
pub fn gen_cbfm(g: &HardwareGraph, params: &CbfmParams, seed: u64) -> Result<Bqm> {
    params.validate()?;
    if g.num_nodes() == 0 {
        return Err(Error::Graph("empty graph".into()));
    }
    let mut rng = seed::rng(seed);
    let (mut model, index) = graph_model(g);
    for (a, b) in g.edges() {
        let u: f64 = rng.random();
        let w = if u < params.p_minus {
            -1.0
        } else if u < params.p_minus + params.p_plus {
            1.0
        } else {
            0.0
        };
        model.set_interaction(index[a], index[b], w)?;
    }
    for i in 0..model.num_variables() {
        if rng.random::<f64>() < params.p_field {
            model.set_linear(i, 1.0)?;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::pegasus;

    #[test]
    fn degenerate_parameters() {
        let g = pegasus(3).unwrap();
        let ferro = CbfmParams {
            p_plus: 0.0,
            p_minus: 1.0,
            p_field: 0.0,
        };
        let m = gen_cbfm(&g, &ferro, 1).unwrap();
        assert!(m.quadratic().all(|(_, _, w)| w == -1.0));
        assert!(m.linear().iter().all(|&h| h == 0.0));
        let zero = CbfmParams {
            p_plus: 0.0,
            p_minus: 0.0,
            p_field: 0.0,
        };
        let m = gen_cbfm(&g, &zero, 1).unwrap();
        assert!(m.quadratic().all(|(_, _, w)| w == 0.0));
    }

    #[test]
    fn rejects_bad_probabilities() {
        let g = pegasus(2).unwrap();
        let bad = CbfmParams {
            p_plus: 0.6,
            p_minus: 0.6,
            p_field: 0.0,
        };
        assert!(gen_cbfm(&g, &bad, 0).is_err());
        let bad = CbfmParams {
            p_field: 1.5,
            ..CbfmParams::default()
        };
        assert!(gen_cbfm(&g, &bad, 0).is_err());
    }
}
