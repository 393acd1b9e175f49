//! Representatives of cyclic/reversal classes of atom orderings.
//!
//! The trace Tr[H(r₁,r₂)⋯H(r_j,r₁)] is unchanged by cyclic rotation of the
//! labels and, for symmetric H obeying H(a,b) = Hᵀ(b,a), by reversal.
//! Summing over one ordering per class therefore reproduces the full
//! permutation sum divided by the class size (2 − δ_{2j}) j.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest order for which representatives are enumerated.
pub const MAX_ORDER: usize = 8;

/// One canonical ordering per class; orderings are zero-based labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermClassRep {
    pub j: usize,
    pub representatives: Vec<Vec<usize>>,
}

impl PermClassRep {
    /// Number of permutations in each class.
    pub fn class_size(&self) -> usize {
        class_size(self.j)
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Representatives as permutations of 1..=j.
    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.representatives
            .iter()
            .map(|p| p.iter().map(|i| i + 1).collect())
            .collect()
    }
}

/// (2 − δ_{2j}) j.
pub fn class_size(j: usize) -> usize {
    if j == 2 {
        2
    } else {
        2 * j
    }
}

/// Lexicographically smallest ordering among all rotations and reversals.
pub fn canonical(order: &[usize]) -> Vec<usize> {
    let j = order.len();
    let mut best = order.to_vec();
    let mut candidate = vec![0; j];
    for shift in 0..j {
        for k in 0..j {
            candidate[k] = order[(shift + k) % j];
        }
        if candidate < best {
            best.clone_from(&candidate);
        }
        for k in 0..j {
            candidate[k] = order[(shift + j - k) % j];
        }
        if candidate < best {
            best.clone_from(&candidate);
        }
    }
    best
}

/// All permutations of 0..j in lexicographic order.
pub fn all_permutations(j: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..j).collect();
    let mut out = vec![current.clone()];
    // standard next-permutation step
    loop {
        let Some(i) = (1..j).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let pivot = i - 1;
        let swap = (pivot + 1..j).rev().find(|&k| current[k] > current[pivot]).unwrap();
        current.swap(pivot, swap);
        current[pivot + 1..].reverse();
        out.push(current.clone());
    }
}

/// Canonical representatives of the orbits of S_j under rotation and
/// reversal, for 2 ≤ j ≤ 8.
pub fn perm_class_reps(j: usize) -> Result<PermClassRep> {
    if !(2..=MAX_ORDER).contains(&j) {
        return Err(Error::UnsupportedOrder(j));
    }
    // canonical members start with label 0, so only those need checking
    let representatives = all_permutations(j)
        .into_iter()
        .take_while(|p| p[0] == 0)
        .filter(|p| canonical(p) == *p)
        .collect();
    Ok(PermClassRep { j, representatives })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn factorial(n: usize) -> usize {
        (1..=n).product()
    }

    #[test]
    fn representative_counts() {
        assert_eq!(perm_class_reps(2).unwrap().len(), 1);
        assert_eq!(perm_class_reps(3).unwrap().len(), 1);
        assert_eq!(perm_class_reps(4).unwrap().len(), 3);
        for j in 3..=MAX_ORDER {
            assert_eq!(perm_class_reps(j).unwrap().len(), factorial(j - 1) / 2);
        }
    }

    #[test]
    fn unsupported_orders() {
        assert_eq!(perm_class_reps(1), Err(Error::UnsupportedOrder(1)));
        assert_eq!(perm_class_reps(9), Err(Error::UnsupportedOrder(9)));
    }

    #[test]
    fn orbits_partition_the_symmetric_group() {
        for j in 2..=6 {
            let reps = perm_class_reps(j).unwrap();
            let rep_set: BTreeSet<_> = reps.representatives.iter().cloned().collect();
            assert_eq!(rep_set.len(), reps.len());
            let mut hit = BTreeSet::new();
            for p in all_permutations(j) {
                let c = canonical(&p);
                assert!(rep_set.contains(&c));
                hit.insert(c);
            }
            assert_eq!(hit.len(), reps.len());
            assert_eq!(reps.len() * reps.class_size(), factorial(j));
        }
    }

    #[test]
    fn known_four_atom_classes() {
        let reps = perm_class_reps(4).unwrap();
        assert_eq!(
            reps.one_based(),
            vec![vec![1, 2, 3, 4], vec![1, 2, 4, 3], vec![1, 3, 2, 4]]
        );
    }
}
