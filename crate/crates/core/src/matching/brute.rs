use crate::error::{param, Result};
use crate::model::PlantedInstance;
use crate::scalar::Scalar;

use super::{assignment_weight, MatchingResult};

pub const BRUTE_FORCE_MAX_N: usize = 10;

/// Exhaustive minimum over all `n!` permutations, visited in lexicographic
/// order so ties resolve to the lexicographically smallest permutation.
pub fn brute_force_min_matching<T: Scalar>(instance: &PlantedInstance<T>) -> Result<MatchingResult<T>> {
    let n = instance.n();
    if n > BRUTE_FORCE_MAX_N {
        return param(format!("brute force refuses n = {n} > {BRUTE_FORCE_MAX_N}"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_weight = assignment_weight(instance, &perm);
    while next_permutation(&mut perm) {
        let w = assignment_weight(instance, &perm);
        if w < best_weight {
            best_weight = w;
            best.copy_from_slice(&perm);
        }
    }
    Ok(MatchingResult::from_assignment(instance, best))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn lexicographic_enumeration_counts() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
    }

    #[test]
    fn two_by_two() {
        let i = PlantedInstance::from_weights(2, 1.0, 0, vec![1.0, 3.0, 4.0, 2.0]).unwrap();
        let r = brute_force_min_matching(&i).unwrap();
        assert_eq!(r.weight, 3.0);
    }

    #[test]
    fn all_equal_ties_break_to_identity() {
        let w = 0.25;
        let i = PlantedInstance::from_weights(3, 1.0, 0, vec![w; 9]).unwrap();
        let r = brute_force_min_matching(&i).unwrap();
        assert_eq!(r.assignment, vec![0, 1, 2]);
        assert_eq!(r.weight, 3.0 * w);
    }

    #[test]
    fn refuses_large_n() {
        let i = PlantedInstance::<f64>::generate(11, 1.0, 0).unwrap();
        assert!(matches!(brute_force_min_matching(&i), Err(Error::Parameter(_))));
    }
}
