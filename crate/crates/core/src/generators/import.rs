use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Bqm, Vartype};
use crate::seed;

/// Reads a model in BQM JSON form.
pub fn import_instance(path: impl AsRef<Path>) -> Result<Bqm> {
    Bqm::read_json(path)
}

/// Converts a social-network edge list to a spin model. Each line holds
/// `u v` or `u v sign`; `#` starts a comment. A signed edge gets
/// `J = -sign` (friendly ties are ferromagnetic), an unsigned edge a
/// random ±1. Node ids are kept in the model's id table.
pub fn edge_list_to_bqm(text: &str, seed: u64) -> Result<Bqm> {
    let bad = |line: usize, msg: &str| Error::Parse {
        path: "<edge list>".into(),
        msg: format!("line {line}: {msg}"),
    };
    let mut rng = seed::rng(seed);
    let mut edges: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split([' ', '\t', ',']).filter(|f| !f.is_empty()).collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(bad(no + 1, "expected `u v [sign]`"));
        }
        let node = |f: &str| f.parse::<u64>().map_err(|_| bad(no + 1, &format!("bad node id `{f}`")));
        let (u, v) = (node(fields[0])?, node(fields[1])?);
        if u == v {
            return Err(bad(no + 1, "self-loop"));
        }
        let w = match fields.get(2) {
            Some(s) => {
                let sign: f64 = s.parse().map_err(|_| bad(no + 1, &format!("bad sign `{s}`")))?;
                if sign == 0.0 {
                    return Err(bad(no + 1, "sign must be nonzero"));
                }
                -sign.signum()
            }
            None => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        edges.insert((u.min(v), u.max(v)), w);
    }
    if edges.is_empty() {
        return Err(bad(0, "no edges"));
    }
    let ids: BTreeSet<u64> = edges.keys().flat_map(|&(a, b)| [a, b]).collect();
    let ids: Vec<u64> = ids.into_iter().collect();
    let index = |id: u64| ids.binary_search(&id).expect("collected above");
    let mut model = Bqm::new(Vartype::Spin, ids.len());
    for (&(a, b), &w) in &edges {
        model.set_interaction(index(a), index(b), w)?;
    }
    model.set_ids(ids)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_spin_glass, SPIN_VALUES};
    use crate::topology::pegasus;

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = gen_spin_glass(&pegasus(3).unwrap(), &SPIN_VALUES, 8).unwrap();
        m.write_json(&path).unwrap();
        let back = import_instance(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json_string(), m.to_json_string());
    }

    #[test]
    fn missing_vartype_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"offset": 0.0, "linear": [], "quadratic": []}"#).unwrap();
        let err = import_instance(&path).unwrap_err().to_string();
        assert!(err.contains("vartype"), "{err}");
    }

    #[test]
    fn even_dense_file_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        let m = gen_spin_glass(&crate::topology::clique(6).unwrap(), &[0.25, -0.5], 1).unwrap();
        m.write_json(&path).unwrap();
        assert_eq!(import_instance(&path).unwrap().num_variables(), 6);
    }

    #[test]
    fn signed_edges() {
        let m = edge_list_to_bqm("# soc\n10 20 1\n20 30 -1\n30 10\n", 0).unwrap();
        assert_eq!(m.ids(), Some(&[10, 20, 30][..]));
        assert_eq!(m.interaction(0, 1), Some(-1.0));
        assert_eq!(m.interaction(1, 2), Some(1.0));
        assert!(m.interaction(0, 2).unwrap().abs() == 1.0);
        assert!(edge_list_to_bqm("1 1\n", 0).is_err());
        assert!(edge_list_to_bqm("1 x\n", 0).unwrap_err().to_string().contains("line 1"));
    }
}
