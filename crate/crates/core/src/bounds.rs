//! Closed-form bounds: the Erlang comparison bound and the first-moment bound
//! on the expected symmetric difference in the almost-perfect regime.

use rand::Rng;

use crate::error::{param, Result};
use crate::rng;
use crate::stats::MeanStderr;

/// Terms below this are dropped from the series.
const SERIES_CUTOFF: f64 = 1e-16;

/// `X₁` and `X₂` are sums of `t` independent exponentials with rates `lambda1 > lambda2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangBoundQuery {
    pub t: u32,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ErlangBoundQuery {
    pub fn new(t: u32, lambda1: f64, lambda2: f64) -> Result<Self> {
        let q = Self { t, lambda1, lambda2 };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if self.t < 1 {
            return param("t must be at least 1");
        }
        if !(self.lambda2 > 0.0 && self.lambda1 > self.lambda2 && self.lambda1.is_finite()) {
            return param(format!(
                "rates must satisfy lambda1 > lambda2 > 0, got {} and {}",
                self.lambda1, self.lambda2
            ));
        }
        Ok(())
    }
}

/// `(4 λ₁ λ₂ / (λ₁ + λ₂)²)^t`, an upper bound on `P[X₁ > X₂]`.
pub fn erlang_exceed_bound(q: ErlangBoundQuery) -> Result<f64> {
    q.validate()?;
    let s = q.lambda1 + q.lambda2;
    Ok((4.0 * q.lambda1 * q.lambda2 / (s * s)).powi(q.t as i32))
}

/// Monte Carlo estimate of `P[X₁ > X₂]`.
pub fn erlang_exceed_mc<R: Rng + ?Sized>(q: ErlangBoundQuery, draws: usize, rng: &mut R) -> Result<MeanStderr> {
    q.validate()?;
    let erlang = |r: &mut R, rate: f64| (0..q.t).map(|_| rng::exponential(r, rate)).sum::<f64>();
    let hits = (0..draws)
        .filter(|_| {
            let x1 = erlang(rng, q.lambda1);
            let x2 = erlang(rng, q.lambda2);
            x1 > x2
        })
        .count();
    Ok(MeanStderr::proportion(hits, draws))
}

/// `2 √e Σ_{t=1}^{n} (4/λ)^t e^{-t²/(2n)}`, bounding `E|M* △ M_min|` for `λ ≥ 4`.
pub fn sym_diff_expectation_bound(lambda: f64, n: u64) -> Result<f64> {
    if !(lambda >= 4.0 && lambda.is_finite()) {
        return param(format!("the first-moment bound needs lambda >= 4, got {lambda}"));
    }
    if n < 1 {
        return param("n must be at least 1");
    }
    let r = 4.0 / lambda;
    let two_n = 2.0 * n as f64;
    let mut sum = 0.0;
    let mut geometric = 1.0;
    for t in 1..=n {
        geometric *= r;
        let tf = t as f64;
        let term = geometric * (-tf * tf / two_n).exp();
        sum += term;
        if term < SERIES_CUTOFF {
            break;
        }
    }
    Ok(2.0 * 0.5f64.exp() * sum)
}

/// `max(0, 1 - 2 ln(4/λ))`, a loose lower bound on the overlap for `λ < 4`.
pub fn overlap_lower_bound_small_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 4.0) {
        return param(format!("lambda must lie in (0, 4], got {lambda}"));
    }
    Ok((1.0 - 2.0 * (4.0 / lambda).ln()).max(0.0))
}
