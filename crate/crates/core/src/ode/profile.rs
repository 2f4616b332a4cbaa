//! `(F, G, V, W)` on the whole line from the reconstructed half-line grid.
//!
//! Negative arguments use `F(-x) = G(x)` and `V(-x) = W(x)`. Beyond `x_T`
//! the saddle asymptotics take over: `1 - U` and `1 - V` decay like
//! `e^{-(x - x_T)}` and `W = V e^{-λx}`.

use crate::scalar::Scalar;

use super::{Reconstruction, TrajectoryPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullLineValues<T> {
    pub f: T,
    pub g: T,
    pub v: T,
    pub w: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    lambda: T,
    h: T,
    grid: Vec<FullLineValues<T>>,
    x_t: T,
    u_t: T,
    v_t: T,
}

impl<T: Scalar> Profile<T> {
    pub fn new(rec: &Reconstruction<T>) -> Self {
        Self::from_points(rec.lambda, rec.grid_step, &rec.points)
    }

    pub fn from_points(lambda: T, h: T, points: &[TrajectoryPoint<T>]) -> Self {
        let last = *points.last().expect("non-empty trajectory");
        let grid = points
            .iter()
            .map(|p| FullLineValues {
                f: p.f,
                g: p.g,
                v: p.v,
                w: p.w,
            })
            .collect();
        Self {
            lambda,
            h,
            grid,
            x_t: last.x,
            u_t: T::one() - last.u,
            v_t: T::one() - last.v,
        }
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn grid_step(&self) -> T {
        self.h
    }

    /// Index of `x_T` on the grid.
    pub fn last_index(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn x_t(&self) -> T {
        self.x_t
    }

    fn half_line(&self, k: usize) -> FullLineValues<T> {
        if let Some(v) = self.grid.get(k) {
            return *v;
        }
        let x = T::from_usize(k).expect("index") * self.h;
        let decay = (self.x_t - x).exp();
        let u = T::one() - self.u_t * decay;
        let v = T::one() - self.v_t * decay;
        let w = v * (-self.lambda * x).exp();
        FullLineValues {
            f: u * v,
            g: (T::one() - u) * w,
            v,
            w,
        }
    }

    /// Values at grid point `k h` for any integer `k`.
    pub fn at_index(&self, k: i64) -> FullLineValues<T> {
        if k >= 0 {
            self.half_line(k as usize)
        } else {
            let p = self.half_line(k.unsigned_abs() as usize);
            FullLineValues {
                f: p.g,
                g: p.f,
                v: p.w,
                w: p.v,
            }
        }
    }

    /// Linear interpolation between grid points.
    pub fn at(&self, x: T) -> FullLineValues<T> {
        let s = x / self.h;
        let k = s.floor();
        let t = s - k;
        let k = k.to_i64().expect("argument in range");
        let a = self.at_index(k);
        if t == T::zero() {
            return a;
        }
        let b = self.at_index(k + 1);
        let lerp = |p: T, q: T| p + t * (q - p);
        FullLineValues {
            f: lerp(a.f, b.f),
            g: lerp(a.g, b.g),
            v: lerp(a.v, b.v),
            w: lerp(a.w, b.w),
        }
    }

    /// CDF of the message `X`.
    pub fn cdf_x(&self, x: T) -> T {
        self.at(x).f
    }

    /// CDF of the message `Y`, `1 - (1 - F) W`.
    pub fn cdf_y(&self, x: T) -> T {
        let p = self.at(x);
        T::one() - (T::one() - p.f) * p.w
    }
}
