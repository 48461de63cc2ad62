//! Binary quadratic models over spin or binary variables.
//!
//! Variables are dense indices `0..n`. Models read from files with sparse
//! labels keep the original labels in an id table so they are written back
//! unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vartype {
    Spin,
    Binary,
}

impl Vartype {
    /// The two admissible values, low first.
    pub fn domain(self) -> [i8; 2] {
        match self {
            Vartype::Spin => [-1, 1],
            Vartype::Binary => [0, 1],
        }
    }

    pub fn contains(self, value: i8) -> bool {
        self.domain().contains(&value)
    }
}

impl fmt::Display for Vartype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vartype::Spin => f.write_str("spin"),
            Vartype::Binary => f.write_str("binary"),
        }
    }
}

/// Values for every variable of a model, indexed by variable id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<i8>);

impl Assignment {
    pub fn new(values: Vec<i8>) -> Self {
        Assignment(values)
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn into_values(self) -> Vec<i8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, var: usize) -> Option<i8> {
        self.0.get(var).copied()
    }

    /// Negates the spins listed in `mask`.
    pub fn flipped(&self, mask: &BTreeSet<usize>) -> Assignment {
        let mut values = self.0.clone();
        for &i in mask {
            if let Some(v) = values.get_mut(i) {
                *v = -*v;
            }
        }
        Assignment(values)
    }

    /// Maps spin values to binary values (`x = 2b - 1`) or back.
    pub fn to_vartype(&self, from: Vartype, to: Vartype) -> Assignment {
        match (from, to) {
            (Vartype::Spin, Vartype::Binary) => Assignment(self.0.iter().map(|&x| (x + 1) / 2).collect()),
            (Vartype::Binary, Vartype::Spin) => Assignment(self.0.iter().map(|&b| 2 * b - 1).collect()),
            _ => self.clone(),
        }
    }
}

impl From<Vec<i8>> for Assignment {
    fn from(values: Vec<i8>) -> Self {
        Assignment(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BqmFile", try_from = "BqmFile")]
pub struct Bqm {
    vartype: Vartype,
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    label: String,
    ids: Option<Vec<u64>>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl Bqm {
    /// An all-zero model on `num_variables` variables.
    pub fn new(vartype: Vartype, num_variables: usize) -> Self {
        Bqm {
            vartype,
            linear: vec![0.0; num_variables],
            quadratic: BTreeMap::new(),
            offset: 0.0,
            label: String::new(),
            ids: None,
        }
    }

    /// Builds a model, summing repeated interactions on the same pair.
    pub fn from_terms<I>(vartype: Vartype, linear: Vec<f64>, quadratic: I, offset: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut bqm = Bqm::new(vartype, linear.len());
        bqm.linear = linear;
        bqm.offset = offset;
        for (i, j, w) in quadratic {
            bqm.add_interaction(i, j, w)?;
        }
        Ok(bqm)
    }

    pub fn vartype(&self) -> Vartype {
        self.vartype
    }

    pub fn num_variables(&self) -> usize {
        self.linear.len()
    }

    pub fn num_interactions(&self) -> usize {
        self.quadratic.len()
    }

    /// Nodes plus edges: the number of weights needed to specify the model.
    pub fn input_size(&self) -> usize {
        self.num_variables() + self.num_interactions()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.quadratic.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn interaction(&self, i: usize, j: usize) -> Option<f64> {
        self.quadratic.get(&ordered(i, j)).copied()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    /// External labels of the variables, when they are not simply `0..n`.
    pub fn ids(&self) -> Option<&[u64]> {
        self.ids.as_deref()
    }

    pub fn set_ids(&mut self, ids: Vec<u64>) -> Result<()> {
        if ids.len() != self.num_variables() {
            return Err(Error::InvalidModel(format!(
                "id table has {} entries for {} variables",
                ids.len(),
                self.num_variables()
            )));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidModel("id table must be strictly ascending".into()));
        }
        let dense = ids.iter().enumerate().all(|(i, &id)| id == i as u64);
        self.ids = if dense { None } else { Some(ids) };
        Ok(())
    }

    /// External label of variable `i`.
    pub fn id_of(&self, i: usize) -> u64 {
        self.ids.as_ref().map_or(i as u64, |ids| ids[i])
    }

    pub fn set_linear(&mut self, i: usize, value: f64) -> Result<()> {
        let slot = self.linear.get_mut(i).ok_or(Error::UnknownVariable(i))?;
        *slot = value;
        Ok(())
    }

    pub fn add_linear(&mut self, i: usize, value: f64) -> Result<()> {
        let slot = self.linear.get_mut(i).ok_or(Error::UnknownVariable(i))?;
        *slot += value;
        Ok(())
    }

    pub fn add_interaction(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_pair(i, j)?;
        *self.quadratic.entry(ordered(i, j)).or_insert(0.0) += value;
        Ok(())
    }

    pub fn set_interaction(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_pair(i, j)?;
        self.quadratic.insert(ordered(i, j), value);
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        let n = self.num_variables();
        if i >= n {
            return Err(Error::UnknownVariable(i));
        }
        if j >= n {
            return Err(Error::UnknownVariable(j));
        }
        Ok(())
    }

    /// Neighbor lists `(j, J_ij)` for every variable, ascending in `j`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_variables()];
        for (&(i, j), &w) in &self.quadratic {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }
        adj
    }

    /// Zero fields and every coupling equal to +1 or -1.
    pub fn is_spin_glass(&self) -> bool {
        self.vartype == Vartype::Spin
            && self.linear.iter().all(|&h| h == 0.0)
            && self.quadratic.values().all(|&w| w == 1.0 || w == -1.0)
    }

    /// Every weight and the offset are integers, so energies are exact.
    pub fn is_integral(&self) -> bool {
        self.offset.fract() == 0.0
            && self.linear.iter().all(|h| h.fract() == 0.0)
            && self.quadratic.values().all(|w| w.fract() == 0.0)
    }

    fn check_assignment(&self, a: &Assignment) -> Result<()> {
        let n = self.num_variables();
        if a.len() < n {
            return Err(Error::MissingVariable(a.len()));
        }
        if a.len() > n {
            return Err(Error::AssignmentLength {
                expected: n,
                got: a.len(),
            });
        }
        if let Some((var, &value)) = a.values().iter().enumerate().find(|(_, &v)| !self.vartype.contains(v)) {
            return Err(Error::VartypeMismatch {
                var,
                value,
                vartype: self.vartype,
            });
        }
        Ok(())
    }

    /// Energy of a checked assignment: linear terms, then couplings in
    /// ascending pair order, then the offset.
    pub fn energy(&self, a: &Assignment) -> Result<f64> {
        self.check_assignment(a)?;
        Ok(self.energy_unchecked(a.values()))
    }

    /// Energy without domain checks. `values` must cover every variable.
    pub fn energy_unchecked(&self, values: &[i8]) -> f64 {
        let mut e = 0.0;
        for (h, &x) in self.linear.iter().zip(values) {
            e += h * f64::from(x);
        }
        for (&(i, j), &w) in &self.quadratic {
            e += w * f64::from(values[i]) * f64::from(values[j]);
        }
        e + self.offset
    }

    /// Same energy spectrum over the other variable type, related by
    /// `x = 2b - 1`.
    pub fn to_vartype(&self, target: Vartype) -> Bqm {
        if target == self.vartype {
            return self.clone();
        }
        let n = self.num_variables();
        let mut out = Bqm::new(target, n);
        out.label = self.label.clone();
        out.ids = self.ids.clone();
        match target {
            Vartype::Binary => {
                // h x + J x_i x_j  with x = 2b - 1
                let mut offset = self.offset - self.linear.iter().sum::<f64>();
                for i in 0..n {
                    out.linear[i] = 2.0 * self.linear[i];
                }
                for (&(i, j), &w) in &self.quadratic {
                    out.quadratic.insert((i, j), 4.0 * w);
                    out.linear[i] -= 2.0 * w;
                    out.linear[j] -= 2.0 * w;
                    offset += w;
                }
                out.offset = offset;
            }
            Vartype::Spin => {
                // a b + Q b_i b_j  with b = (x + 1) / 2
                let mut offset = self.offset + self.linear.iter().sum::<f64>() / 2.0;
                for i in 0..n {
                    out.linear[i] = self.linear[i] / 2.0;
                }
                for (&(i, j), &w) in &self.quadratic {
                    out.quadratic.insert((i, j), w / 4.0);
                    out.linear[i] += w / 4.0;
                    out.linear[j] += w / 4.0;
                    offset += w / 4.0;
                }
                out.offset = offset;
            }
        }
        out
    }

    /// Gauge-flips the variables in `mask`. Samples of the returned model
    /// map back to the original by negating the same spins.
    pub fn spin_reversal(&self, mask: &BTreeSet<usize>) -> Result<(Bqm, BTreeSet<usize>)> {
        if self.vartype != Vartype::Spin {
            return Err(Error::NotSpin);
        }
        if let Some(&bad) = mask.iter().find(|&&i| i >= self.num_variables()) {
            return Err(Error::UnknownVariable(bad));
        }
        let mut out = self.clone();
        for &i in mask {
            out.linear[i] = -out.linear[i];
        }
        for (&(i, j), w) in out.quadratic.iter_mut() {
            if mask.contains(&i) != mask.contains(&j) {
                *w = -*w;
            }
        }
        Ok((out, mask.clone()))
    }

    /// Multiplies every weight and the offset by `factor`.
    pub fn scaled(&self, factor: f64) -> Bqm {
        let mut out = self.clone();
        out.offset *= factor;
        out.linear.iter_mut().for_each(|h| *h *= factor);
        out.quadratic.values_mut().for_each(|w| *w *= factor);
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&BqmFile::from(self)).expect("finite weights always serialize")
    }

    pub fn from_json_str(text: &str) -> std::result::Result<Bqm, String> {
        let file: BqmFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        file.into_bqm()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Bqm> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Bqm::from_json_str(&text).map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            msg,
        })
    }
}

/// Energy of assignment `a` under `model`.
pub fn energy(model: &Bqm, a: &Assignment) -> Result<f64> {
    model.energy(a)
}

pub fn convert(model: &Bqm, target: Vartype) -> Bqm {
    model.to_vartype(target)
}

pub fn apply_srt(model: &Bqm, mask: &BTreeSet<usize>) -> Result<(Bqm, BTreeSet<usize>)> {
    model.spin_reversal(mask)
}

/// On-disk interchange form of a model.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BqmFile {
    vartype: Vartype,
    offset: f64,
    linear: Vec<(u64, f64)>,
    quadratic: Vec<(u64, u64, f64)>,
    #[serde(default)]
    label: String,
}

impl From<&Bqm> for BqmFile {
    fn from(bqm: &Bqm) -> Self {
        BqmFile {
            vartype: bqm.vartype,
            offset: bqm.offset,
            linear: bqm.linear.iter().enumerate().map(|(i, &h)| (bqm.id_of(i), h)).collect(),
            quadratic: bqm
                .quadratic
                .iter()
                .map(|(&(i, j), &w)| (bqm.id_of(i), bqm.id_of(j), w))
                .collect(),
            label: bqm.label.clone(),
        }
    }
}

impl From<Bqm> for BqmFile {
    fn from(bqm: Bqm) -> Self {
        BqmFile::from(&bqm)
    }
}

impl TryFrom<BqmFile> for Bqm {
    type Error = String;

    fn try_from(file: BqmFile) -> std::result::Result<Bqm, String> {
        file.into_bqm()
    }
}

impl BqmFile {
    fn into_bqm(self) -> std::result::Result<Bqm, String> {
        let ids: Vec<u64> = self.linear.iter().map(|&(id, _)| id).collect();
        if let Some(pos) = ids.windows(2).position(|w| w[0] >= w[1]) {
            return Err(format!(
                "field `linear`: entry {} has id {} not above the previous id {}",
                pos + 1,
                ids[pos + 1],
                ids[pos]
            ));
        }
        let mut bqm = Bqm::new(self.vartype, ids.len());
        bqm.linear = self.linear.iter().map(|&(_, h)| h).collect();
        bqm.offset = self.offset;
        bqm.label = self.label;
        let index = |id: u64, entry: usize| {
            ids.binary_search(&id)
                .map_err(|_| format!("field `quadratic`: entry {entry} references id {id} absent from `linear`"))
        };
        let mut prev: Option<(u64, u64)> = None;
        for (entry, &(a, b, w)) in self.quadratic.iter().enumerate() {
            if a >= b {
                return Err(format!(
                    "field `quadratic`: entry {entry} must satisfy i < j, got ({a}, {b})"
                ));
            }
            if prev.is_some_and(|p| p >= (a, b)) {
                return Err(format!(
                    "field `quadratic`: entry {entry} ({a}, {b}) is out of order or duplicated"
                ));
            }
            prev = Some((a, b));
            let (i, j) = (index(a, entry)?, index(b, entry)?);
            bqm.quadratic.insert((i, j), w);
        }
        bqm.set_ids(ids).map_err(|e| e.to_string())?;
        Ok(bqm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_spin_ferro() -> Bqm {
        Bqm::from_terms(Vartype::Spin, vec![0.0, 0.0], [(0, 1, -1.0)], 0.0).unwrap()
    }

    #[test]
    fn satisfied_ferromagnetic_bond() {
        let m = two_spin_ferro();
        assert_eq!(m.energy(&vec![1, 1].into()).unwrap(), -1.0);
    }

    #[test]
    fn single_field_term() {
        let m = Bqm::from_terms(Vartype::Spin, vec![1.0], [], 0.0).unwrap();
        assert_eq!(m.energy(&vec![-1].into()).unwrap(), -1.0);
    }

    #[test]
    fn missing_variable_is_named() {
        let m = Bqm::new(Vartype::Spin, 3);
        match m.energy(&vec![1].into()) {
            Err(Error::MissingVariable(1)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vartype_mismatch_detected() {
        let m = Bqm::new(Vartype::Binary, 2);
        assert!(matches!(
            m.energy(&vec![1, -1].into()),
            Err(Error::VartypeMismatch { var: 1, value: -1, .. })
        ));
    }

    #[test]
    fn self_loops_rejected() {
        let mut m = Bqm::new(Vartype::Spin, 2);
        assert!(matches!(m.add_interaction(1, 1, 1.0), Err(Error::SelfLoop(1))));
        assert!(matches!(m.add_interaction(0, 5, 1.0), Err(Error::UnknownVariable(5))));
    }

    #[test]
    fn pairs_are_stored_once() {
        let mut m = Bqm::new(Vartype::Spin, 2);
        m.add_interaction(1, 0, 1.0).unwrap();
        m.add_interaction(0, 1, 2.0).unwrap();
        assert_eq!(m.num_interactions(), 1);
        assert_eq!(m.interaction(1, 0), Some(3.0));
    }

    #[test]
    fn spin_to_binary_single_field() {
        let m = Bqm::from_terms(Vartype::Spin, vec![1.0], [], 0.0).unwrap();
        let b = m.to_vartype(Vartype::Binary);
        assert_eq!(b.energy(&vec![1].into()).unwrap(), 1.0);
    }

    #[test]
    fn binary_to_spin_single_term() {
        let m = Bqm::from_terms(Vartype::Binary, vec![1.0], [], 0.0).unwrap();
        let s = m.to_vartype(Vartype::Spin);
        assert_eq!(s.energy(&vec![-1].into()).unwrap(), 0.0);
    }

    #[test]
    fn empty_srt_is_identity() {
        let m = two_spin_ferro();
        let (t, mask) = m.spin_reversal(&BTreeSet::new()).unwrap();
        assert_eq!(t, m);
        assert!(mask.is_empty());
    }

    #[test]
    fn srt_on_ferromagnetic_pair() {
        let m = two_spin_ferro();
        let mask: BTreeSet<usize> = [0].into();
        let (t, _) = m.spin_reversal(&mask).unwrap();
        assert_eq!(t.interaction(0, 1), Some(1.0));
        let on_transformed: Assignment = vec![-1, 1].into();
        assert_eq!(t.energy(&on_transformed).unwrap(), -1.0);
        assert_eq!(m.energy(&on_transformed.flipped(&mask)).unwrap(), -1.0);
    }

    #[test]
    fn srt_rejects_binary() {
        let m = Bqm::new(Vartype::Binary, 2);
        assert!(matches!(m.spin_reversal(&BTreeSet::new()), Err(Error::NotSpin)));
    }

    #[test]
    fn json_round_trip_with_sparse_ids() {
        let text =
            r#"{"vartype":"spin","offset":0.5,"linear":[[3,1.0],[10,-0.25]],"quadratic":[[3,10,-1.0]],"label":"x"}"#;
        let m = Bqm::from_json_str(text).unwrap();
        assert_eq!(m.num_variables(), 2);
        assert_eq!(m.ids(), Some(&[3u64, 10][..]));
        assert_eq!(m.interaction(0, 1), Some(-1.0));
        assert_eq!(m.to_json_string(), text);
    }

    #[test]
    fn json_missing_vartype_names_field() {
        let err = Bqm::from_json_str(r#"{"offset":0,"linear":[],"quadratic":[]}"#).unwrap_err();
        assert!(err.contains("vartype"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn json_rejects_unordered_pairs() {
        let err = Bqm::from_json_str(r#"{"vartype":"spin","offset":0,"linear":[[0,0],[1,0]],"quadratic":[[1,0,1.0]]}"#)
            .unwrap_err();
        assert!(err.contains("i < j"), "{err}");
    }
}
