//! Repeated finite-`n` experiments: generate, match, summarise.

use rayon::prelude::*;

use crate::error::{param, Result};
use crate::matching::solve_min_matching;
use crate::model::PlantedInstance;
use crate::rng::derive_seed;
use crate::stats::MeanStderr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub overlap: f64,
    /// `w(M_min) / n`.
    pub weight_per_n: f64,
    /// `|M* △ M_min|` in edges.
    pub sym_diff: usize,
    pub n_cycles: usize,
}

/// Seed of instance `trial` under a master seed.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, trial as u64)
}

pub fn run_trial(n: usize, lambda: f64, seed: u64, trial: usize) -> Result<TrialOutcome> {
    let inst = PlantedInstance::<f64>::generate(n, lambda, trial_seed(seed, trial))?;
    let m = solve_min_matching(&inst);
    Ok(TrialOutcome {
        trial,
        overlap: m.overlap_count as f64 / n as f64,
        weight_per_n: m.weight / n as f64,
        sym_diff: m.sym_diff_size(),
        n_cycles: m.cycles.len(),
    })
}

/// Trials in parallel, returned in trial order.
pub fn run_trials(n: usize, lambda: f64, trials: usize, seed: u64) -> Result<Vec<TrialOutcome>> {
    if n < 2 {
        return param(format!("n must be at least 2, got {n}"));
    }
    if trials < 1 {
        return param("at least one trial is required");
    }
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(n, lambda, seed, t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub overlap: MeanStderr,
    pub weight_per_n: MeanStderr,
    pub sym_diff: MeanStderr,
    pub n_cycles: MeanStderr,
}

impl Summary {
    pub fn of(outcomes: &[TrialOutcome]) -> Self {
        let col = |f: &dyn Fn(&TrialOutcome) -> f64| MeanStderr::of(&outcomes.iter().map(f).collect::<Vec<_>>());
        Self {
            overlap: col(&|o| o.overlap),
            weight_per_n: col(&|o| o.weight_per_n),
            sym_diff: col(&|o| o.sym_diff as f64),
            n_cycles: col(&|o| o.n_cycles as f64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trials_are_ordered_and_reproducible() {
        let a = run_trials(30, 2.0, 6, 5).unwrap();
        let b = run_trials(30, 2.0, 6, 5).unwrap();
        assert_eq!(a, b);
        for (i, o) in a.iter().enumerate() {
            assert_eq!(o.trial, i);
            assert_eq!(o.sym_diff, 2 * (30 - (o.overlap * 30.0).round() as usize));
            assert!(o.n_cycles <= o.sym_diff / 4);
        }
        assert_ne!(a[0], a[1]);
        assert!(run_trials(1, 2.0, 1, 0).is_err());
    }
}
