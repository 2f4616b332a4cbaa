//! The planted bipartite model on `K_{n,n}`.
//!
//! Left vertex `i` and right vertex `j'` are joined by an edge of weight
//! `weights[i * n + j]`. The planted matching is always the identity
//! `{(i, i')}`; the model is invariant under relabelling the right side, so
//! nothing is lost by fixing it, and overlaps become fixed-point counts.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::rng::{self, domain};
use crate::scalar::Scalar;

/// Largest supported side size.
pub const MAX_SIDE: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance<T> {
    n: usize,
    lambda: T,
    seed: u64,
    weights: Vec<T>,
}

impl<T: Scalar> PlantedInstance<T> {
    /// Sample an instance: planted weights ~ exp(lambda), the rest ~ exp(1/n).
    ///
    /// Row `i` is drawn from its own RNG stream, one word per cell, so every
    /// weight is a pure function of `(seed, i, j)`.
    pub fn generate(n: usize, lambda: T, seed: u64) -> Result<Self> {
        validate(n, lambda)?;
        let lam = lambda.to_f64_lossy();
        let unplanted_rate = 1.0 / n as f64;
        let mut weights = vec![T::zero(); n * n];
        weights.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let mut r = rng::stream(seed, domain::INSTANCE_ROW + i as u64);
            for (j, w) in row.iter_mut().enumerate() {
                let rate = if i == j { lam } else { unplanted_rate };
                *w = T::lit(rng::exponential(&mut r, rate));
            }
        });
        Ok(Self {
            n,
            lambda,
            seed,
            weights,
        })
    }

    /// Wrap an explicit row-major weight matrix.
    pub fn from_weights(n: usize, lambda: T, seed: u64, weights: Vec<T>) -> Result<Self> {
        validate(n, lambda)?;
        if weights.len() != n * n {
            return param(format!("expected {} weights, got {}", n * n, weights.len()));
        }
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w > T::zero())) {
            return param(format!("weights must be strictly positive and finite, found {bad}"));
        }
        Ok(Self {
            n,
            lambda,
            seed,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Row-major weights.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, left: usize, right: usize) -> T {
        self.weights[left * self.n + right]
    }

    pub fn row(&self, left: usize) -> &[T] {
        &self.weights[left * self.n..(left + 1) * self.n]
    }

    /// Total weight of the planted matching.
    pub fn planted_weight(&self) -> T {
        crate::scalar::compensated_sum((0..self.n).map(|i| self.weight(i, i)))
    }

    /// Serialise: header `n,lambda,seed`, then `n` rows of 17-significant-digit weights.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},{},{}", self.n, self.lambda, self.seed)?;
        let mut line = String::new();
        for i in 0..self.n {
            line.clear();
            for (j, w) in self.row(i).iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                write!(line, "{w:.16e}").expect("write to String");
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty instance file".into()))??;
        let fields: Vec<&str> = header.trim_end().split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let n: usize = parse_field(fields[0], "n")?;
        let lambda: f64 = parse_field(fields[1], "lambda")?;
        let seed: u64 = parse_field(fields[2], "seed")?;
        let mut weights = Vec::with_capacity(n.saturating_mul(n).min(1 << 26));
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {i}")))??;
            let before = weights.len();
            for tok in line.trim_end().split(',') {
                let w: f64 = parse_field(tok, "weight")?;
                weights.push(T::lit(w));
            }
            if weights.len() - before != n {
                return Err(Error::Parse(format!("row {i} has {} entries", weights.len() - before)));
            }
        }
        Self::from_weights(n, T::lit(lambda), seed, weights)
    }
}

fn parse_field<V: std::str::FromStr>(tok: &str, what: &str) -> Result<V> {
    tok.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse {what} from `{tok}`")))
}

fn validate<T: Scalar>(n: usize, lambda: T) -> Result<()> {
    if n == 0 || n > MAX_SIDE {
        return param(format!("n must be in 1..={MAX_SIDE}, got {n}"));
    }
    if !(lambda.is_finite() && lambda > T::zero()) {
        return param(format!("lambda must be positive and finite, got {lambda}"));
    }
    Ok(())
}
