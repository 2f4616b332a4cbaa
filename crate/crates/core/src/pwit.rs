//! Truncated planted Poisson weighted infinite tree and its message passing.
//!
//! Every vertex has a planted child with label 0 and weight `exp(λ)`, unless
//! its own parent edge is planted, and `arity` un-planted children labelled
//! `1..=arity` whose weights are the first arrivals of a rate-1 Poisson
//! process. Vertices exist down to depth `H`; the planted partners of depth
//! `H` vertices sit at depth `H + 1`.
//!
//! For a vertex `v` with parent `p`, `down[v]` is the message `X(p, v)`
//! computed from the subtree of `v`, and `up[v]` is `X(v, p)` computed from
//! the rest of the tree. Both obey
//!
//! ```text
//! X(u, v) = min over neighbours w ≠ u of v of (ℓ(v, w) - X(v, w))
//! ```
//!
//! except on the seeded boundary, where `down` is drawn from `X₀` on planted
//! edges and `Y₀` on un-planted ones.

use rand::Rng;
use rayon::prelude::*;

use crate::dist::{Law, MessageKind, SampledDistribution, TabulatedCdf};
use crate::error::{param, Error, Result};
use crate::ode::Profile;
use crate::rde::RdePool;
use crate::rng::{self, domain};
use crate::scalar::Scalar;
use crate::stats::MeanStderr;

/// Largest tree, in vertices, that `build_tree` will allocate.
pub const NODE_CAP: usize = 1 << 24;

pub const DEFAULT_DEPTH: usize = 8;
pub const DEFAULT_ARITY: usize = 12;

/// Label of a planted child.
pub const PLANTED_LABEL: u8 = 0;

/// Half-width of the grid on which ODE message laws are tabulated.
const TABULATION_HALF_WIDTH: f64 = 40.0;

/// Vertices of one depth, stored as parallel arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Level {
    /// Index of the parent on the previous level.
    pub parent: Vec<u32>,
    pub label: Vec<u8>,
    /// Weight of the edge to the parent.
    pub weight: Vec<f64>,
    pub planted: Vec<bool>,
    /// Children of vertex `v` are `first_child[v]..first_child[v + 1]` on the next level.
    pub first_child: Vec<u32>,
    pub down: Vec<f64>,
    pub up: Vec<f64>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        self.first_child[v] as usize..self.first_child[v + 1] as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwitTree {
    pub lambda: f64,
    pub depth: usize,
    pub arity: usize,
    /// `levels[d]` holds depth `d`; the root is `levels[0][0]`.
    pub levels: Vec<Level>,
    propagated: bool,
}

/// Number of vertices of the truncated tree, planted partners at depth `H + 1` included.
pub fn node_count(depth: usize, arity: usize) -> u128 {
    let b = arity as u128;
    // Vertices whose parent edge is un-planted (the root counts as one) and planted.
    let (mut a, mut p) = (1u128, 0u128);
    let mut total = 1u128;
    for _ in 0..depth {
        let next = (b.saturating_mul(a.saturating_add(p)), a);
        a = next.0;
        p = next.1;
        total = total.saturating_add(a).saturating_add(p);
    }
    total.saturating_add(a)
}

fn check_shape(lambda: f64, depth: usize, arity: usize, cap: usize) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return param(format!("lambda must be positive and finite, got {lambda}"));
    }
    if depth < 1 {
        return param("depth must be at least 1");
    }
    if !(1..u8::MAX as usize).contains(&arity) {
        return param(format!("arity must lie in 1..{}, got {arity}", u8::MAX));
    }
    let nodes = node_count(depth, arity);
    if nodes > cap as u128 {
        return Err(Error::TreeTooLarge {
            depth,
            arity,
            nodes,
            cap,
        });
    }
    Ok(())
}

/// Draw the edge weights of a truncated planted PWIT.
pub fn build_tree<R: Rng + ?Sized>(lambda: f64, depth: usize, arity: usize, rng: &mut R) -> Result<PwitTree> {
    build_tree_with_cap(lambda, depth, arity, NODE_CAP, rng)
}

pub fn build_tree_with_cap<R: Rng + ?Sized>(
    lambda: f64,
    depth: usize,
    arity: usize,
    cap: usize,
    rng: &mut R,
) -> Result<PwitTree> {
    check_shape(lambda, depth, arity, cap)?;
    let mut levels = Vec::with_capacity(depth + 2);
    levels.push(Level {
        parent: vec![u32::MAX],
        label: vec![PLANTED_LABEL],
        weight: vec![f64::NAN],
        planted: vec![false],
        ..Level::default()
    });
    for d in 0..=depth {
        let cur = &levels[d];
        let mut next = Level::default();
        let mut first_child = Vec::with_capacity(cur.len() + 1);
        for v in 0..cur.len() {
            first_child.push(next.len() as u32);
            if !cur.planted[v] {
                next.parent.push(v as u32);
                next.label.push(PLANTED_LABEL);
                next.weight.push(rng::exponential(rng, lambda));
                next.planted.push(true);
            }
            if d < depth {
                let mut zeta = 0.0;
                for j in 1..=arity {
                    zeta += rng::exponential(rng, 1.0);
                    next.parent.push(v as u32);
                    next.label.push(j as u8);
                    next.weight.push(zeta);
                    next.planted.push(false);
                }
            }
        }
        first_child.push(next.len() as u32);
        levels[d].first_child = first_child;
        levels.push(next);
    }
    let last = levels.last_mut().expect("levels");
    last.first_child = vec![0; last.len() + 1];
    for level in levels.iter_mut() {
        level.down = vec![f64::NAN; level.len()];
        level.up = vec![f64::NAN; level.len()];
    }
    Ok(PwitTree {
        lambda,
        depth,
        arity,
        levels,
        propagated: false,
    })
}

impl PwitTree {
    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Level::len).sum()
    }

    pub fn is_propagated(&self) -> bool {
        self.propagated
    }

    /// Labels from the root down to vertex `v` of level `d`.
    pub fn label_path(&self, d: usize, v: usize) -> Vec<u8> {
        let mut path = Vec::with_capacity(d);
        let mut v = v;
        for level in (1..=d).rev() {
            path.push(self.levels[level].label[v]);
            v = self.levels[level].parent[v] as usize;
        }
        path.reverse();
        path
    }

    /// All neighbours of vertex `v` at level `d` with their scores `ℓ(v, w) - X(v, w)`.
    fn scores(&self, d: usize, v: usize) -> Vec<(Neighbor, f64)> {
        let mut out = Vec::new();
        if d > 0 {
            let l = &self.levels[d];
            out.push((Neighbor::Parent, l.weight[v] - l.up[v]));
        }
        if d + 1 < self.levels.len() {
            let next = &self.levels[d + 1];
            for c in self.levels[d].children(v) {
                out.push((Neighbor::Child(c), next.weight[c] - next.down[c]));
            }
        }
        out
    }
}

/// Seed the boundary, then sweep up to the root and back down.
pub fn propagate_messages<X: Law, Y: Law, R: Rng + ?Sized>(
    tree: &mut PwitTree,
    boundary_x: &X,
    boundary_y: &Y,
    rng: &mut R,
) -> Result<()> {
    let h = tree.depth;
    for d in h..=h + 1 {
        let level = &mut tree.levels[d];
        for v in 0..level.label.len() {
            level.down[v] = if level.planted[v] {
                boundary_x.sample(rng)
            } else {
                boundary_y.sample(rng)
            };
        }
    }
    propagate_seeded(tree)
}

/// Both sweeps, given `down` on depths `H` and `H + 1`.
pub fn propagate_seeded(tree: &mut PwitTree) -> Result<()> {
    let h = tree.depth;
    for d in h..=h + 1 {
        if let Some(v) = tree.levels[d].down.iter().position(|x| !x.is_finite()) {
            return Err(Error::Contract(format!(
                "boundary message at depth {d}, vertex {v} is not seeded with a finite value"
            )));
        }
    }
    for d in (1..h).rev() {
        let (upper, lower) = tree.levels.split_at_mut(d + 1);
        let cur = &mut upper[d];
        let next = &lower[0];
        let first_child = &cur.first_child;
        cur.down.par_iter_mut().enumerate().for_each(|(v, out)| {
            let mut best = f64::INFINITY;
            for c in first_child[v] as usize..first_child[v + 1] as usize {
                best = best.min(next.weight[c] - next.down[c]);
            }
            *out = best;
        });
    }
    for d in 0..=h {
        let (upper, lower) = tree.levels.split_at_mut(d + 1);
        let cur = &upper[d];
        let next = &mut lower[0];
        let up_next: Vec<f64> = (0..next.len())
            .into_par_iter()
            .with_min_len(1024)
            .map(|c| {
                let v = next.parent[c] as usize;
                let mut best = if d > 0 {
                    cur.weight[v] - cur.up[v]
                } else {
                    f64::INFINITY
                };
                for s in cur.children(v) {
                    if s != c {
                        best = best.min(next.weight[s] - next.down[s]);
                    }
                }
                best
            })
            .collect();
        next.up = up_next;
    }
    tree.propagated = true;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuditReport {
    /// Directed edges whose message is computed rather than seeded.
    pub checked: usize,
    /// Edges where the stored message differs from the recursion by more than one ulp.
    pub violations: usize,
    pub max_ulps: u64,
}

fn ulps_apart(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    if !(a.is_finite() && b.is_finite()) {
        return u64::MAX;
    }
    let key = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

/// Recompute every interior message from its definition with a plain loop.
pub fn audit_recursion(tree: &PwitTree) -> AuditReport {
    let mut report = AuditReport::default();
    let mut record = |stored: f64, fresh: f64| {
        let u = ulps_apart(stored, fresh);
        report.checked += 1;
        report.max_ulps = report.max_ulps.max(u);
        if u > 1 {
            report.violations += 1;
        }
    };
    for d in 0..tree.levels.len() {
        for v in 0..tree.levels[d].len() {
            let l = &tree.levels[d];
            if d >= 1 && d < tree.depth {
                let fresh = tree
                    .scores(d, v)
                    .into_iter()
                    .filter(|(n, _)| *n != Neighbor::Parent)
                    .map(|(_, s)| s)
                    .fold(f64::INFINITY, f64::min);
                record(l.down[v], fresh);
            }
            if d >= 1 {
                let p = l.parent[v] as usize;
                let fresh = tree
                    .scores(d - 1, p)
                    .into_iter()
                    .filter(|(n, _)| *n != Neighbor::Child(v))
                    .map(|(_, s)| s)
                    .fold(f64::INFINITY, f64::min);
                record(l.up[v], fresh);
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Parent,
    /// Index on the next level.
    Child(usize),
}

/// Edge indicators `ℓ(e) < X(→e) + X(←e)`, indexed like the child endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Marking {
    pub marked: Vec<Vec<bool>>,
    /// Level-1 indices of the marked root edges.
    pub root_marked: Vec<usize>,
}

impl Marking {
    /// Anything other than exactly one marked root edge.
    pub fn is_degenerate(&self) -> bool {
        self.root_marked.len() != 1
    }

    pub fn root_planted_marked(&self) -> bool {
        self.marked[1][0]
    }

    pub fn root_partner(&self) -> Option<usize> {
        match self.root_marked.as_slice() {
            [c] => Some(*c),
            _ => None,
        }
    }
}

pub fn extract_matching(tree: &PwitTree) -> Result<Marking> {
    if !tree.propagated {
        return Err(Error::Contract("messages have not been propagated".into()));
    }
    let marked: Vec<Vec<bool>> = tree
        .levels
        .iter()
        .enumerate()
        .map(|(d, l)| {
            if d == 0 {
                return vec![false];
            }
            (0..l.len()).map(|v| l.weight[v] < l.down[v] + l.up[v]).collect()
        })
        .collect();
    let root_marked = (0..tree.levels[1].len()).filter(|&c| marked[1][c]).collect();
    Ok(Marking { marked, root_marked })
}

/// Neighbour minimising `ℓ(v, w) - X(v, w)`; the first one on ties.
pub fn argmin_partner(tree: &PwitTree, d: usize, v: usize) -> Option<Neighbor> {
    let mut best: Option<(Neighbor, f64)> = None;
    for (n, s) in tree.scores(d, v) {
        if best.map_or(true, |(_, b)| s < b) {
            best = Some((n, s));
        }
    }
    best.map(|(n, _)| n)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchingAudit {
    pub vertices: usize,
    /// Vertices whose marked edges are not exactly the argmin edge.
    pub disagreements: usize,
}

/// Compare the indicator rule with the argmin rule on every vertex above depth `H`.
pub fn audit_matching(tree: &PwitTree, marking: &Marking) -> MatchingAudit {
    let mut audit = MatchingAudit::default();
    for d in 0..tree.depth {
        for v in 0..tree.levels[d].len() {
            let mut marked = Vec::new();
            if d > 0 && marking.marked[d][v] {
                marked.push(Neighbor::Parent);
            }
            for c in tree.levels[d].children(v) {
                if marking.marked[d + 1][c] {
                    marked.push(Neighbor::Child(c));
                }
            }
            audit.vertices += 1;
            let arg = argmin_partner(tree, d, v);
            if marked.len() != 1 || Some(marked[0]) != arg {
                audit.disagreements += 1;
            }
        }
    }
    audit
}

/// Message laws used to seed the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary<X, Y> {
    pub x: X,
    pub y: Y,
}

impl Boundary<TabulatedCdf, TabulatedCdf> {
    /// Inverse-CDF sampling from `F` and `1 - (1 - F) W`.
    pub fn from_profile<T: Scalar>(profile: &Profile<T>) -> Self {
        Self {
            x: TabulatedCdf::from_profile(profile, MessageKind::X, TABULATION_HALF_WIDTH),
            y: TabulatedCdf::from_profile(profile, MessageKind::Y, TABULATION_HALF_WIDTH),
        }
    }
}

impl Boundary<SampledDistribution, SampledDistribution> {
    /// Resampling from population-dynamics pools.
    pub fn from_pool(pool: &RdePool) -> Self {
        Self {
            x: pool.x_distribution(),
            y: pool.y_distribution(),
        }
    }
}

/// Root quantities of one simulated tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootTrial {
    pub planted_marked: bool,
    pub root_marked: usize,
    pub argmin_agrees: bool,
    /// Weight and downward message of the root's planted edge.
    pub planted_weight: f64,
    pub planted_down: f64,
}

impl RootTrial {
    pub fn is_degenerate(&self) -> bool {
        self.root_marked != 1
    }
}

/// One tree per trial, each on its own RNG stream.
pub fn run_trials<X: Law, Y: Law>(
    lambda: f64,
    depth: usize,
    arity: usize,
    trials: usize,
    boundary: &Boundary<X, Y>,
    seed: u64,
) -> Result<Vec<RootTrial>> {
    check_shape(lambda, depth, arity, NODE_CAP)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, domain::PWIT + t as u64);
            let mut tree = build_tree(lambda, depth, arity, &mut r)?;
            propagate_messages(&mut tree, &boundary.x, &boundary.y, &mut r)?;
            let marking = extract_matching(&tree)?;
            let arg = argmin_partner(&tree, 0, 0);
            let l1 = &tree.levels[1];
            Ok(RootTrial {
                planted_marked: marking.root_planted_marked(),
                root_marked: marking.root_marked.len(),
                argmin_agrees: marking.root_partner().map(Neighbor::Child) == arg,
                planted_weight: l1.weight[0],
                planted_down: l1.down[0],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootStats {
    /// Fraction of non-degenerate trials whose planted root edge is marked.
    pub p_root_planted: f64,
    pub stderr: f64,
    pub trials: usize,
    pub degenerate: usize,
    pub argmin_disagreements: usize,
}

impl RootStats {
    pub fn from_trials(trials: &[RootTrial]) -> Self {
        let good: Vec<&RootTrial> = trials.iter().filter(|t| !t.is_degenerate()).collect();
        let hits = good.iter().filter(|t| t.planted_marked).count();
        let p = MeanStderr::proportion(hits, good.len());
        Self {
            p_root_planted: p.mean,
            stderr: p.stderr,
            trials: trials.len(),
            degenerate: trials.len() - good.len(),
            argmin_disagreements: trials.iter().filter(|t| !t.argmin_agrees).count(),
        }
    }

    pub fn degenerate_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.degenerate as f64 / self.trials as f64
        }
    }
}

/// Monte Carlo estimate of the probability that the root keeps its planted partner.
pub fn estimate_root_overlap<X: Law, Y: Law>(
    lambda: f64,
    depth: usize,
    arity: usize,
    trials: usize,
    boundary: &Boundary<X, Y>,
    seed: u64,
) -> Result<RootStats> {
    if !(lambda > 0.0 && lambda < 4.0) {
        return param(format!("lambda must lie in (0, 4), got {lambda}"));
    }
    if trials == 0 {
        return param("at least one trial is required");
    }
    let runs = run_trials(lambda, depth, arity, trials, boundary, seed)?;
    Ok(RootStats::from_trials(&runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    /// A point mass, so messages are predictable.
    struct Constant(f64);

    impl Law for Constant {
        fn cdf(&self, x: f64) -> f64 {
            if x >= self.0 {
                1.0
            } else {
                0.0
            }
        }

        fn quantile(&self, _u: f64) -> f64 {
            self.0
        }
    }

    fn logistic() -> SampledDistribution {
        let mut r = stream(11, 0);
        SampledDistribution::new(
            (0..5000)
                .map(|_| {
                    let u = rng::open_unit(&mut r);
                    (u / (1.0 - u)).ln()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn depth_one_structure() {
        let tree = build_tree(1.0, 1, 2, &mut stream(1, 0)).unwrap();
        let l1 = &tree.levels[1];
        assert_eq!(l1.label, vec![0, 1, 2]);
        assert_eq!(l1.planted, vec![true, false, false]);
        assert!(l1.weight[1] < l1.weight[2]);
        let l2 = &tree.levels[2];
        assert_eq!(l2.len(), 2);
        assert!(l2.planted.iter().all(|&p| p));
        assert_eq!(l2.parent, vec![1, 2]);
        assert!(l1.children(0).is_empty());
        assert_eq!(tree.node_count() as u128, node_count(1, 2));
    }

    #[test]
    fn labels_never_repeat_zero() {
        let tree = build_tree(1.0, 4, 3, &mut stream(2, 0)).unwrap();
        assert_eq!(tree.node_count() as u128, node_count(4, 3));
        for d in 1..tree.levels.len() {
            for v in 0..tree.levels[d].len() {
                let path = tree.label_path(d, v);
                assert_eq!(path.len(), d);
                assert!(path.windows(2).all(|w| !(w[0] == 0 && w[1] == 0)), "{path:?}");
                assert_eq!(tree.levels[d].planted[v], path[d - 1] == 0);
            }
        }
    }

    #[test]
    fn size_guard() {
        let err = build_tree(1.0, 8, 12, &mut stream(0, 0)).unwrap_err();
        assert!(matches!(err, Error::TreeTooLarge { depth: 8, arity: 12, .. }));
        assert!(node_count(8, 12) > 500_000_000);
        assert!(build_tree(1.0, 0, 2, &mut stream(0, 0)).is_err());
        assert!(build_tree(1.0, 2, 0, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn single_level_up_messages_are_sibling_minima() {
        let mut tree = build_tree(1.0, 1, 4, &mut stream(5, 0)).unwrap();
        propagate_messages(&mut tree, &logistic(), &logistic(), &mut stream(6, 0)).unwrap();
        let l1 = &tree.levels[1];
        for c in 0..l1.len() {
            let mut m = f64::INFINITY;
            for s in 0..l1.len() {
                if s != c {
                    m = m.min(l1.weight[s] - l1.down[s]);
                }
            }
            assert_eq!(l1.up[c], m);
        }
    }

    #[test]
    fn audits_pass_exactly() {
        for s in 0..5 {
            let mut r = stream(s, 1);
            let mut tree = build_tree(1.5, 4, 5, &mut r).unwrap();
            propagate_messages(&mut tree, &logistic(), &logistic(), &mut r).unwrap();
            let report = audit_recursion(&tree);
            assert!(report.checked > 1000);
            assert_eq!(report.violations, 0);
            assert_eq!(report.max_ulps, 0);
            let marking = extract_matching(&tree).unwrap();
            assert!(!marking.is_degenerate());
            assert_eq!(audit_matching(&tree, &marking).disagreements, 0);
        }
    }

    #[test]
    fn indicator_edge_cases() {
        let mut tree = build_tree(1.0, 1, 2, &mut stream(7, 0)).unwrap();
        tree.levels[1].weight[1] = 0.0;
        tree.levels[1].weight[2] = 1e9;
        propagate_messages(&mut tree, &Constant(1.0), &Constant(1.0), &mut stream(7, 1)).unwrap();
        let marking = extract_matching(&tree).unwrap();
        assert!(marking.marked[1][1]);
        assert!(!marking.marked[1][2]);
        assert_eq!(marking.root_partner(), Some(1));
    }

    #[test]
    fn unseeded_boundary_is_a_contract_error() {
        let mut tree = build_tree(1.0, 2, 2, &mut stream(8, 0)).unwrap();
        assert!(matches!(propagate_seeded(&mut tree), Err(Error::Contract(_))));
        assert!(matches!(extract_matching(&tree), Err(Error::Contract(_))));
    }

    #[test]
    fn first_arrival_has_unit_mean() {
        let n = 4000;
        let mean = (0..n)
            .map(|s| build_tree(1.0, 1, 1, &mut stream(s, 3)).unwrap().levels[1].weight[1])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn trials_are_reproducible() {
        let b = Boundary {
            x: logistic(),
            y: logistic(),
        };
        let a = estimate_root_overlap(1.0, 2, 4, 50, &b, 9).unwrap();
        let c = estimate_root_overlap(1.0, 2, 4, 50, &b, 9).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.trials, 50);
        assert!((0.0..=1.0).contains(&a.p_root_planted));
        assert!(estimate_root_overlap(4.0, 2, 4, 50, &b, 9).is_err());
    }
}
