//! Minimum-weight perfect matchings on planted instances.

mod brute;
mod lap;

pub use brute::{brute_force_min_matching, BRUTE_FORCE_MAX_N};
pub use lap::{solve_dense, LapSolution};

use crate::model::PlantedInstance;
use crate::scalar::{compensated_sum, Scalar};

/// A vertex of `K_{n,n}`: left `i` or right `j'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Left(usize),
    Right(usize),
}

/// One component of `M* △ M_min`: an even cycle alternating between
/// matching edges `(i, σ(i)')` and planted edges `(σ(i)', σ(i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingCycle<T> {
    /// `[L(i), R(σ(i)), L(σ(i)), R(σ²(i)), ...]`, closing back to `L(i)` through `R(i)`.
    pub vertices: Vec<Vertex>,
    pub planted_weight: T,
    pub unplanted_weight: T,
}

impl<T: Scalar> AlternatingCycle<T> {
    /// Number of planted edges on the cycle (half its length).
    pub fn len_half(&self) -> usize {
        self.vertices.len() / 2
    }

    /// Augmenting: the planted side outweighs the matching side.
    pub fn is_augmenting(&self) -> bool {
        self.planted_weight > self.unplanted_weight
    }
}

/// Dual potentials certifying optimality: `u_i + v_j <= w_ij`, tight on the matching.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials<T> {
    pub row: Vec<T>,
    pub col: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult<T> {
    /// Left `i` is matched to right `assignment[i]'`.
    pub assignment: Vec<usize>,
    pub weight: T,
    /// `|M ∩ M*|`, the number of fixed points of `assignment`.
    pub overlap_count: usize,
    pub cycles: Vec<AlternatingCycle<T>>,
    pub duals: Option<DualPotentials<T>>,
}

impl<T: Scalar> MatchingResult<T> {
    /// Build the result for an arbitrary permutation of the right side.
    pub fn from_assignment(instance: &PlantedInstance<T>, assignment: Vec<usize>) -> Self {
        debug_assert!(is_permutation(&assignment));
        let weight = assignment_weight(instance, &assignment);
        let overlap_count = assignment.iter().enumerate().filter(|(i, &j)| *i == j).count();
        let cycles = decompose_symmetric_difference(instance, &assignment);
        Self {
            assignment,
            weight,
            overlap_count,
            cycles,
            duals: None,
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// `|M* △ M|` counted in edges: twice the number of mismatched vertices.
    pub fn sym_diff_size(&self) -> usize {
        2 * (self.n() - self.overlap_count)
    }
}

/// Exact minimum-weight perfect matching by shortest augmenting paths.
pub fn solve_min_matching<T: Scalar>(instance: &PlantedInstance<T>) -> MatchingResult<T> {
    let sol = solve_dense(instance.n(), instance.weights());
    let mut result = MatchingResult::from_assignment(instance, sol.row_to_col);
    result.duals = Some(DualPotentials {
        row: sol.row_potential,
        col: sol.col_potential,
    });
    result
}

/// Fraction of planted edges recovered.
pub fn overlap<T>(result: &MatchingResult<T>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    result.overlap_count as f64 / n as f64
}

/// Total weight of a permutation, summed in row order with compensation.
pub fn assignment_weight<T: Scalar>(instance: &PlantedInstance<T>, assignment: &[usize]) -> T {
    compensated_sum(assignment.iter().enumerate().map(|(i, &j)| instance.weight(i, j)))
}

pub fn is_permutation(assignment: &[usize]) -> bool {
    let mut seen = vec![false; assignment.len()];
    for &j in assignment {
        if j >= seen.len() || seen[j] {
            return false;
        }
        seen[j] = true;
    }
    true
}

/// Split `M* △ M` into alternating cycles by following `σ` and the identity in turn.
pub fn decompose_symmetric_difference<T: Scalar>(
    instance: &PlantedInstance<T>,
    assignment: &[usize],
) -> Vec<AlternatingCycle<T>> {
    let n = assignment.len();
    let mut visited = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if visited[start] || assignment[start] == start {
            visited[start] = true;
            continue;
        }
        let mut vertices = Vec::new();
        let mut planted = Vec::new();
        let mut unplanted = Vec::new();
        let mut i = start;
        loop {
            visited[i] = true;
            let j = assignment[i];
            vertices.push(Vertex::Left(i));
            vertices.push(Vertex::Right(j));
            unplanted.push(instance.weight(i, j));
            planted.push(instance.weight(j, j));
            i = j;
            if i == start {
                break;
            }
        }
        cycles.push(AlternatingCycle {
            vertices,
            planted_weight: compensated_sum(planted),
            unplanted_weight: compensated_sum(unplanted),
        });
    }
    cycles
}

/// Largest violation of dual feasibility or complementary slackness, relative
/// to the largest weight. Zero up to rounding for an optimal solution.
pub fn certificate_violation<T: Scalar>(instance: &PlantedInstance<T>, result: &MatchingResult<T>) -> Option<T> {
    let duals = result.duals.as_ref()?;
    let n = instance.n();
    let scale = instance.weights().iter().fold(T::zero(), |m, w| m.max(*w));
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..n {
            let slack = instance.weight(i, j) - duals.row[i] - duals.col[j];
            worst = worst.max(-slack);
            if result.assignment[i] == j {
                worst = worst.max(slack.abs());
            }
        }
    }
    Some(worst / scale)
}
