use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::{Bqm, Vartype};
use crate::seed;

#[derive(Debug, Clone)]
pub struct BpspInstance {
    pub model: Bqm,
    /// Car ids in line order; each car appears exactly twice.
    pub sequence: Vec<usize>,
}

/// Number of adjacent color changes when spin `colors[car]` gives the color
/// of each car's first occurrence and the second occurrence is flipped.
pub fn paint_changes(sequence: &[usize], colors: &[i8]) -> usize {
    let painted = painted_sequence(sequence, colors);
    painted.windows(2).filter(|w| w[0] != w[1]).count()
}

fn painted_sequence(sequence: &[usize], colors: &[i8]) -> Vec<i8> {
    let mut seen = vec![false; colors.len()];
    sequence
        .iter()
        .map(|&car| {
            let first = !std::mem::replace(&mut seen[car], true);
            if first {
                colors[car]
            } else {
                -colors[car]
            }
        })
        .collect()
}

/// Ising model whose energy is twice the number of paint changes.
pub fn bpsp_from_sequence(sequence: &[usize]) -> Result<Bqm> {
    let cars = sequence.iter().max().map_or(0, |&c| c + 1);
    let mut count = vec![0usize; cars];
    for &c in sequence {
        count[c] += 1;
    }
    if cars < 2 || count.iter().any(|&k| k != 2) {
        return Err(Error::Param(
            "every car must appear exactly twice, with at least 2 cars".into(),
        ));
    }
    let ones = vec![1i8; cars];
    let sign = painted_sequence(sequence, &ones);
    let mut model = Bqm::new(Vartype::Spin, cars);
    let mut offset = 0.0;
    for p in 0..sequence.len() - 1 {
        let (a, b) = (sequence[p], sequence[p + 1]);
        if a == b {
            offset += 2.0;
        } else {
            model.add_interaction(a, b, -f64::from(sign[p] * sign[p + 1]))?;
            offset += 1.0;
        }
    }
    model.set_offset(offset);
    Ok(model)
}

pub fn gen_bpsp(cars: usize, seed: u64) -> Result<BpspInstance> {
    if cars < 2 {
        return Err(Error::Param("BPSP needs at least 2 cars".into()));
    }
    let mut sequence: Vec<usize> = (0..cars).flat_map(|c| [c, c]).collect();
    sequence.shuffle(&mut seed::rng(seed));
    let model = bpsp_from_sequence(&sequence)?;
    Ok(BpspInstance { model, sequence })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(sequence: &[usize], cars: usize) -> (usize, f64) {
        let model = bpsp_from_sequence(sequence).unwrap();
        let mut best = (usize::MAX, f64::INFINITY);
        for bits in 0..1u32 << cars {
            let x: Vec<i8> = (0..cars).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
            let changes = paint_changes(sequence, &x);
            let e = model.energy_unchecked(&x);
            assert_eq!(e, 2.0 * changes as f64);
            best = (best.0.min(changes), best.1.min(e));
        }
        best
    }

    #[test]
    fn small_sequences() {
        assert_eq!(brute(&[0, 1, 0, 1], 2), (1, 2.0));
        assert_eq!(brute(&[0, 0, 1, 1], 2), (2, 4.0));
    }

    #[test]
    fn random_sequences_match_brute_force() {
        for seed in 0..20 {
            let cars = 2 + (seed as usize % 9);
            let inst = gen_bpsp(cars, seed).unwrap();
            let (changes, e) = brute(&inst.sequence, cars);
            assert_eq!(e, 2.0 * changes as f64);
        }
    }

    #[test]
    fn each_car_twice() {
        let inst = gen_bpsp(50, 7).unwrap();
        let mut count = [0; 50];
        for &c in &inst.sequence {
            count[c] += 1;
        }
        assert!(count.iter().all(|&k| k == 2));
        assert!(gen_bpsp(1, 0).is_err());
    }
}
