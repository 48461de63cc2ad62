//! Compressed spin form shared by the classical samplers.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Bqm, Vartype};

/// A model in spin form with CSR adjacency. Binary models are converted
/// first; energies are preserved by the conversion.
#[derive(Debug, Clone)]
pub struct SpinProblem {
    h: Vec<f64>,
    start: Vec<usize>,
    nbr: Vec<usize>,
    weight: Vec<f64>,
    offset: f64,
    source: Vartype,
}

impl SpinProblem {
    pub fn new(model: &Bqm) -> Self {
        let spin = model.to_vartype(Vartype::Spin);
        let n = spin.num_variables();
        let adj = spin.adjacency();
        let mut start = Vec::with_capacity(n + 1);
        let mut nbr = Vec::with_capacity(2 * spin.num_interactions());
        let mut weight = Vec::with_capacity(2 * spin.num_interactions());
        start.push(0);
        for list in &adj {
            for &(j, w) in list {
                nbr.push(j);
                weight.push(w);
            }
            start.push(nbr.len());
        }
        SpinProblem {
            h: spin.linear().to_vec(),
            start,
            nbr,
            weight,
            offset: spin.offset(),
            source: model.vartype(),
        }
    }

    pub fn num_variables(&self) -> usize {
        self.h.len()
    }

    /// Stored half-edges; twice the interaction count.
    pub fn num_half_edges(&self) -> usize {
        self.nbr.len()
    }

    pub fn source_vartype(&self) -> Vartype {
        self.source
    }

    pub fn degree(&self, i: usize) -> usize {
        self.start[i + 1] - self.start[i]
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[i]..self.start[i + 1];
        self.nbr[r.clone()].iter().copied().zip(self.weight[r].iter().copied())
    }

    pub fn energy(&self, x: &[i8]) -> f64 {
        let mut e = self.offset;
        for i in 0..self.h.len() {
            let xi = f64::from(x[i]);
            e += self.h[i] * xi;
            for (j, w) in self.neighbors(i) {
                if j > i {
                    e += w * xi * f64::from(x[j]);
                }
            }
        }
        e
    }

    /// `f_i = h_i + sum_j J_ij x_j`; flipping `i` changes the energy by
    /// `-2 x_i f_i`.
    pub fn local_fields(&self, x: &[i8]) -> Vec<f64> {
        (0..self.h.len())
            .map(|i| self.h[i] + self.neighbors(i).map(|(j, w)| w * f64::from(x[j])).sum::<f64>())
            .collect()
    }

    #[inline]
    pub fn flip(&self, i: usize, x: &mut [i8], fields: &mut [f64]) {
        x[i] = -x[i];
        let d = 2.0 * f64::from(x[i]);
        for (j, w) in self.neighbors(i) {
            fields[j] += w * d;
        }
    }

    pub fn random_state(&self, rng: &mut ChaCha8Rng) -> Vec<i8> {
        (0..self.h.len())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect()
    }

    /// Converts a spin state back to the vartype of the source model.
    pub fn to_source(&self, x: &[i8]) -> Vec<i8> {
        match self.source {
            Vartype::Spin => x.to_vec(),
            Vartype::Binary => x.iter().map(|&v| (v + 1) / 2).collect(),
        }
    }

    /// Largest and smallest nonzero single-flip energy changes, used to
    /// bracket annealing temperatures.
    pub fn delta_energy_range(&self) -> Option<(f64, f64)> {
        let mut max = 0.0f64;
        let mut min = f64::INFINITY;
        for i in 0..self.h.len() {
            let mut total = self.h[i].abs();
            if self.h[i] != 0.0 {
                min = min.min(2.0 * self.h[i].abs());
            }
            for (_, w) in self.neighbors(i) {
                total += w.abs();
                if w != 0.0 {
                    min = min.min(2.0 * w.abs());
                }
            }
            max = max.max(2.0 * total);
        }
        (max > 0.0).then_some((max, min))
    }

    /// Default `(beta_hot, beta_cold)`: a worst uphill move is accepted
    /// half the time at the start and the smallest one 1% of the time at
    /// the end.
    pub fn default_beta_range(&self) -> (f64, f64) {
        match self.delta_energy_range() {
            Some((max, min)) => ((2.0f64).ln() / max, (100.0f64).ln() / min),
            None => (0.1, 1.0),
        }
    }

    /// One Metropolis sweep in index order at inverse temperature `beta`.
    /// Returns the energy change.
    ///
    /// Zero-change flips are taken with probability one half. Detailed
    /// balance still holds, and domain walls no longer march in step with
    /// the scan order.
    pub fn metropolis_sweep(&self, beta: f64, x: &mut [i8], fields: &mut [f64], rng: &mut ChaCha8Rng) -> f64 {
        let mut delta = 0.0;
        for i in 0..self.h.len() {
            let de = -2.0 * f64::from(x[i]) * fields[i];
            let accept = if de < 0.0 {
                true
            } else if de == 0.0 {
                rng.random::<bool>()
            } else {
                rng.random::<f64>() < (-beta * de).exp()
            };
            if accept {
                self.flip(i, x, fields);
                delta += de;
            }
        }
        delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn sample_model() -> Bqm {
        Bqm::from_terms(
            Vartype::Spin,
            vec![0.5, -1.0, 0.0, 2.0],
            vec![(0, 1, -1.0), (1, 2, 0.25), (0, 3, 1.5), (2, 3, -0.75)],
            3.0,
        )
        .unwrap()
    }

    #[test]
    fn energy_matches_model() {
        let model = sample_model();
        let p = SpinProblem::new(&model);
        let mut rng = seed::rng(1);
        for _ in 0..20 {
            let x = p.random_state(&mut rng);
            assert!((p.energy(&x) - model.energy_unchecked(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn flips_track_energy() {
        let p = SpinProblem::new(&sample_model());
        let mut rng = seed::rng(2);
        let mut x = p.random_state(&mut rng);
        let mut f = p.local_fields(&x);
        let mut e = p.energy(&x);
        for step in 0..50 {
            let i = step % 4;
            e += -2.0 * f64::from(x[i]) * f[i];
            p.flip(i, &mut x, &mut f);
            assert!((e - p.energy(&x)).abs() < 1e-12);
        }
        assert_eq!(f, p.local_fields(&x));
    }

    #[test]
    fn binary_source_round_trips() {
        let model = sample_model().to_vartype(Vartype::Binary);
        let p = SpinProblem::new(&model);
        let x = vec![1, -1, -1, 1];
        let b = p.to_source(&x);
        assert_eq!(b, vec![1, 0, 0, 1]);
        assert!((p.energy(&x) - model.energy_unchecked(&b)).abs() < 1e-12);
    }

    #[test]
    fn beta_range_brackets() {
        let p = SpinProblem::new(&sample_model());
        let (hot, cold) = p.default_beta_range();
        assert!(hot < cold);
        let (max, min) = p.delta_energy_range().unwrap();
        assert_eq!(max, 2.0 * (2.0 + 1.5 + 0.75));
        assert_eq!(min, 0.5);
    }
}
