//! One-dimensional distributions used as message laws: empirical pools and
//! CDFs tabulated from the ODE solution.

use rand::Rng;

use crate::error::{param, Result};
use crate::ode::Profile;
use crate::rng::open_unit;
use crate::scalar::Scalar;
use crate::stats::quantile_sorted;

/// A law on the real line that can be evaluated and sampled.
pub trait Law: Sync {
    fn cdf(&self, x: f64) -> f64;

    /// Generalised inverse of the CDF on `(0, 1)`.
    fn quantile(&self, u: f64) -> f64;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(open_unit(rng))
    }
}

/// Sorted samples with a linearly interpolated inverse empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDistribution {
    sorted: Vec<f64>,
}

impl SampledDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return param("empty sample");
        }
        if samples.iter().any(|x| x.is_nan()) {
            return param("sample contains NaN");
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Uniform draw from the stored samples, i.e. resampling with replacement.
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sorted[rng.gen_range(0..self.sorted.len())]
    }

    /// Empirical survival function `P[X > x]`.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }
}

impl Law for SampledDistribution {
    fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    fn quantile(&self, u: f64) -> f64 {
        quantile_sorted(&self.sorted, u)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.resample(rng)
    }
}

/// Which message law to tabulate from an ODE profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    /// `F`, the law of messages on planted edges.
    X,
    /// `1 - (1 - F) W`, the law of messages on un-planted edges.
    Y,
}

/// A continuous CDF on a uniform grid with exponential tails beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    x0: f64,
    h: f64,
    cdf: Vec<f64>,
    /// Decay rates of the lower and upper tails.
    lower_rate: f64,
    upper_rate: f64,
}

impl TabulatedCdf {
    /// Tabulate on `[-half_width, half_width]` at the profile's grid step.
    pub fn from_profile<T: Scalar>(profile: &Profile<T>, kind: MessageKind, half_width: f64) -> Self {
        let h = profile.grid_step().to_f64_lossy();
        let m = (half_width / h).ceil() as i64;
        let mut cdf: Vec<f64> = (-m..=m)
            .map(|k| {
                let p = profile.at_index(k);
                let (f, w) = (p.f.to_f64_lossy(), p.w.to_f64_lossy());
                match kind {
                    MessageKind::X => f,
                    MessageKind::Y => 1.0 - (1.0 - f) * w,
                }
            })
            .collect();
        // Rounding can wiggle the last digits; a CDF may not decrease.
        for i in 1..cdf.len() {
            if cdf[i] < cdf[i - 1] {
                cdf[i] = cdf[i - 1];
            }
        }
        Self::from_grid(-(m as f64) * h, h, cdf)
    }

    /// Wrap nondecreasing CDF values at `x0 + i h`.
    pub fn from_grid(x0: f64, h: f64, cdf: Vec<f64>) -> Self {
        let n = cdf.len();
        assert!(n >= 2, "need at least two grid points");
        let rate = |a: f64, b: f64| {
            if a > 0.0 && b > a {
                ((b / a).ln() / h).max(1e-3)
            } else {
                1.0
            }
        };
        let lower_rate = rate(cdf[0], cdf[1]);
        let upper_rate = rate(1.0 - cdf[n - 1], 1.0 - cdf[n - 2]);
        Self {
            x0,
            h,
            cdf,
            lower_rate,
            upper_rate,
        }
    }

    fn x_at(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn support(&self) -> (f64, f64) {
        (self.x0, self.x_at(self.cdf.len() - 1))
    }
}

impl Law for TabulatedCdf {
    fn cdf(&self, x: f64) -> f64 {
        let n = self.cdf.len();
        let s = (x - self.x0) / self.h;
        if s <= 0.0 {
            return self.cdf[0] * (self.lower_rate * (x - self.x0)).exp();
        }
        if s >= (n - 1) as f64 {
            let top = self.x_at(n - 1);
            return 1.0 - (1.0 - self.cdf[n - 1]) * (-self.upper_rate * (x - top)).exp();
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    fn quantile(&self, u: f64) -> f64 {
        let n = self.cdf.len();
        if u <= self.cdf[0] {
            return self.x0 + (u / self.cdf[0]).ln() / self.lower_rate;
        }
        if u > self.cdf[n - 1] {
            let top = self.x_at(n - 1);
            return top + ((1.0 - self.cdf[n - 1]) / (1.0 - u)).ln() / self.upper_rate;
        }
        // First grid value >= u; the segment below it contains u.
        let j = self.cdf.partition_point(|&c| c < u);
        let (a, b) = (self.cdf[j - 1], self.cdf[j]);
        let t = if b > a { (u - a) / (b - a) } else { 0.0 };
        self.x_at(j - 1) + t * self.h
    }
}
