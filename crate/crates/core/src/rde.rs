//! Population dynamics for the recursive distributional equations
//!
//! ```text
//! X ≐ min_i (ζ_i - Y_i)        ζ_i arrivals of a rate-1 Poisson process
//! Y ≐ min(η - X, X')           η ~ exp(λ)
//! ```
//!
//! Each pool is replaced synchronously from the previous one. Indices are
//! processed in fixed chunks, each with its own RNG stream, so results do
//! not depend on the number of threads.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::dist::SampledDistribution;
use crate::error::{param, Error, Result};
use crate::rng::{self, domain, StreamRng};
use crate::stats::{ks_two_sample_sorted, quantile_sorted};

pub const MIN_POOL_SIZE: usize = 10_000;

/// Indices per RNG stream.
const CHUNK: usize = 4096;

/// Lag, in iterations, of the convergence comparison.
pub const CONVERGENCE_LAG: usize = 10;

/// Consecutive passing comparisons required.
pub const CONVERGENCE_STREAK: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RdePool {
    pub lambda: f64,
    pub x_samples: Vec<f64>,
    pub y_samples: Vec<f64>,
    pub iteration: usize,
}

impl RdePool {
    pub fn from_samples(lambda: f64, x_samples: Vec<f64>, y_samples: Vec<f64>) -> Result<Self> {
        check_rate(lambda)?;
        if x_samples.is_empty() || y_samples.len() != x_samples.len() {
            return param(format!(
                "pools must be non-empty and of equal size, got {} and {}",
                x_samples.len(),
                y_samples.len()
            ));
        }
        Ok(Self {
            lambda,
            x_samples,
            y_samples,
            iteration: 0,
        })
    }

    /// Logistic `X` pool and the `Y` pool it induces.
    pub fn initial<R: Rng + ?Sized>(lambda: f64, pool_size: usize, rng: &mut R) -> Result<Self> {
        check_rate(lambda)?;
        if pool_size < MIN_POOL_SIZE {
            return param(format!("pool size must be at least {MIN_POOL_SIZE}, got {pool_size}"));
        }
        let seed = rng.next_u64();
        let x_samples = chunked(pool_size, seed, |r, _| {
            let u = rng::open_unit(r);
            (u / (1.0 - u)).ln()
        });
        let seed = rng.next_u64();
        let y_samples = chunked(pool_size, seed, |r, _| draw_y(lambda, &x_samples, r));
        Ok(Self {
            lambda,
            x_samples,
            y_samples,
            iteration: 0,
        })
    }

    pub fn pool_size(&self) -> usize {
        self.x_samples.len()
    }

    pub fn x_distribution(&self) -> SampledDistribution {
        SampledDistribution::new(self.x_samples.clone()).expect("non-empty pool")
    }

    pub fn y_distribution(&self) -> SampledDistribution {
        SampledDistribution::new(self.y_samples.clone()).expect("non-empty pool")
    }

    /// One sample per line after a `# rde lambda=<v> iter=<k> kind=<X|Y>` header.
    pub fn write_dump<W: Write>(&self, kind: char, mut out: W) -> Result<()> {
        let samples = match kind {
            'X' => &self.x_samples,
            'Y' => &self.y_samples,
            _ => return param(format!("pool kind must be X or Y, got {kind}")),
        };
        writeln!(out, "# rde lambda={} iter={} kind={kind}", self.lambda, self.iteration)?;
        for s in samples {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }
}

fn check_rate(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return param(format!("lambda must be positive and finite, got {lambda}"));
    }
    Ok(())
}

fn chunked(n: usize, seed: u64, f: impl Fn(&mut StreamRng, usize) -> f64 + Sync) -> Vec<f64> {
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut r = rng::stream(seed, domain::RDE + c as u64);
        for (j, slot) in chunk.iter_mut().enumerate() {
            *slot = f(&mut r, c * CHUNK + j);
        }
    });
    out
}

fn draw_y<R: Rng + ?Sized>(lambda: f64, xs: &[f64], r: &mut R) -> f64 {
    let eta = rng::exponential(r, lambda);
    let a = xs[r.gen_range(0..xs.len())];
    let b = xs[r.gen_range(0..xs.len())];
    (eta - a).min(b)
}

/// Arrivals beyond this cannot beat the running minimum except with
/// negligible probability, given the exponential upper tail of `Y`.
pub fn arrival_cutoff(y_samples: &[f64]) -> f64 {
    let mut sorted = y_samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.9999) + 30.0
}

fn draw_x<R: Rng + ?Sized>(ys: &[f64], y_max: f64, z_cut: f64, r: &mut R) -> f64 {
    let mut best = f64::INFINITY;
    let mut zeta = 0.0;
    loop {
        zeta += rng::exponential(r, 1.0);
        // No later arrival can improve on the minimum once zeta - max(Y) reaches it.
        if zeta - y_max >= best || (zeta > z_cut && best.is_finite()) {
            return best;
        }
        let y = ys[r.gen_range(0..ys.len())];
        best = best.min(zeta - y);
    }
}

/// One synchronous population-dynamics update.
pub fn rde_step<R: Rng + ?Sized>(pool: &RdePool, rng: &mut R) -> Result<RdePool> {
    let m = pool.x_samples.len();
    if m == 0 || pool.y_samples.len() != m {
        return param("empty or mismatched pool");
    }
    let ys = &pool.y_samples;
    let xs = &pool.x_samples;
    let y_max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z_cut = arrival_cutoff(ys);
    let lambda = pool.lambda;
    let seed = rng.next_u64();
    let mut x_new = vec![0.0; m];
    let mut y_new = vec![0.0; m];
    x_new
        .par_chunks_mut(CHUNK)
        .zip(y_new.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(c, (xc, yc))| {
            let mut r = rng::stream(seed, domain::RDE + c as u64);
            for (x, y) in xc.iter_mut().zip(yc.iter_mut()) {
                *x = draw_x(ys, y_max, z_cut, &mut r);
                *y = draw_y(lambda, xs, &mut r);
            }
        });
    Ok(RdePool {
        lambda,
        x_samples: x_new,
        y_samples: y_new,
        iteration: pool.iteration + 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdeRun {
    pub pool: RdePool,
    /// KS distance between the `X` pools of consecutive iterations.
    pub trace: Vec<f64>,
    /// KS distance between the `X` pools at iterations `k` and `k - 10`, from `k = 10` on.
    pub lag_trace: Vec<f64>,
    /// First iteration completing the required streak below `target`.
    pub converged_at: Option<usize>,
    pub target: f64,
}

/// Iterate `rde_step` from the logistic start.
pub fn solve_rde(lambda: f64, pool_size: usize, iters: usize, seed: u64) -> Result<RdeRun> {
    if !(lambda > 0.0 && lambda < 4.0) {
        return if lambda >= 4.0 {
            Err(Error::NoSolution { lambda })
        } else {
            param(format!("lambda must lie in (0, 4), got {lambda}"))
        };
    }
    let mut master = rng::stream(seed, domain::RDE);
    let mut pool = RdePool::initial(lambda, pool_size, &mut master)?;
    let target = 5.0 / (pool_size as f64).sqrt();
    let sorted = |p: &RdePool| {
        let mut v = p.x_samples.clone();
        v.sort_by(f64::total_cmp);
        v
    };
    let mut history: VecDeque<Vec<f64>> = VecDeque::with_capacity(CONVERGENCE_LAG + 1);
    history.push_back(sorted(&pool));
    let mut trace = Vec::with_capacity(iters);
    let mut lag_trace = Vec::new();
    let mut streak = 0;
    let mut converged_at = None;
    for k in 1..=iters {
        pool = rde_step(&pool, &mut master)?;
        let now = sorted(&pool);
        trace.push(ks_two_sample_sorted(&now, history.back().expect("history")));
        history.push_back(now);
        if history.len() > CONVERGENCE_LAG + 1 {
            history.pop_front();
        }
        if history.len() == CONVERGENCE_LAG + 1 {
            let d = ks_two_sample_sorted(history.back().expect("history"), &history[0]);
            lag_trace.push(d);
            streak = if d < target { streak + 1 } else { 0 };
            if streak >= CONVERGENCE_STREAK && converged_at.is_none() {
                converged_at = Some(k);
            }
        }
    }
    if converged_at.is_none() {
        return Err(Error::Convergence {
            iterations: iters,
            last_ks: lag_trace.last().copied().unwrap_or(f64::NAN),
            target,
        });
    }
    Ok(RdeRun {
        pool,
        trace,
        lag_trace,
        converged_at,
        target,
    })
}

/// Monte Carlo estimate of `P[η < X + X']` with its standard error.
pub fn estimate_alpha_from_samples<R: Rng + ?Sized>(
    x_pool: &SampledDistribution,
    lambda: f64,
    draws: usize,
    rng: &mut R,
) -> (f64, f64) {
    let mut hits = 0usize;
    for _ in 0..draws {
        let eta = rng::exponential(rng, lambda);
        let s = x_pool.resample(rng) + x_pool.resample(rng);
        if eta < s {
            hits += 1;
        }
    }
    let p = hits as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}
