//! Composite Simpson quadratures for `α`, `β_p` and `β_u` on the grid.

use crate::scalar::Scalar;

use super::profile::FullLineValues;
use super::{OdeOptions, Profile, Reconstruction};

/// Composite Simpson over indices `lo, lo + stride, ..., hi`; the interval
/// count must be even.
fn simpson<T: Scalar>(lo: i64, hi: i64, stride: i64, h: T, f: impl Fn(i64) -> T) -> T {
    let n = (hi - lo) / stride;
    debug_assert!(n % 2 == 0 && lo + n * stride == hi);
    if n == 0 {
        return T::zero();
    }
    let (two, four) = (T::lit(2.0), T::lit(4.0));
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let c = if i % 2 == 1 { four } else { two };
        acc = acc + c * f(lo + i * stride);
    }
    acc * h * T::from_i64(stride).expect("stride") / T::lit(3.0)
}

fn round_up(n: i64, m: i64) -> i64 {
    (n + m - 1) / m * m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate<T> {
    pub alpha: T,
    /// Contribution of `[x_T, ∞)` to `1 - α`.
    pub tail: T,
    /// Difference against the same rule at twice the step.
    pub delta: T,
    pub tail_warning: bool,
}

/// `α = 1 - 2 ∫_0^∞ (1 - F)(1 - G) V W dx`.
pub fn compute_alpha<T: Scalar>(rec: &Reconstruction<T>, opts: &OdeOptions) -> AlphaEstimate<T> {
    alpha_from_profile(&rec.profile(), opts)
}

pub(crate) fn alpha_from_profile<T: Scalar>(p: &Profile<T>, opts: &OdeOptions) -> AlphaEstimate<T> {
    let h = p.grid_step();
    let one = T::one();
    let integrand = |k: i64| {
        let q = p.at_index(k);
        (one - q.f) * (one - q.g) * q.v * q.w
    };
    let k4 = (p.last_index() as i64) / 4 * 4;
    let span = round_up((opts.window / opts.grid_step).ceil() as i64, 4);
    let n = k4 + span;
    let fine = simpson(0, n, 1, h, integrand);
    let coarse = simpson(0, n, 2, h, integrand);
    let tail = simpson(k4, n, 1, h, integrand);
    let two = T::lit(2.0);
    AlphaEstimate {
        alpha: one - two * fine,
        tail: two * tail,
        delta: two * (fine - coarse).abs(),
        tail_warning: tail > T::lit(1e-6) * fine,
    }
}

/// `(β_p, β_u)` by nested Simpson on the grid over `|x| <= window`.
pub fn compute_weight<T: Scalar>(rec: &Reconstruction<T>, opts: &OdeOptions) -> (T, T) {
    weight_from_profile(&rec.profile(), opts)
}

pub(crate) fn weight_from_profile<T: Scalar>(p: &Profile<T>, opts: &OdeOptions) -> (T, T) {
    let h = p.grid_step();
    let lambda = p.lambda();
    let one = T::one();
    let m = round_up((opts.window / opts.grid_step).ceil() as i64, 2);

    // Inner arguments t - x stay inside [-m, 2m].
    let offset = m;
    let table: Vec<FullLineValues<T>> = (-m..=2 * m).map(|k| p.at_index(k)).collect();
    let at = |k: i64| table[(k + offset) as usize];
    let t = |j: i64| T::from_i64(j).expect("index") * h;
    let planted_kernel: Vec<T> = (0..=2 * m)
        .map(|j| {
            let tj = t(j);
            lambda * tj * (-lambda * tj).exp()
        })
        .collect();

    let inner = |k: i64, kernel: &dyn Fn(i64, FullLineValues<T>) -> T| {
        let top = round_up(m + k.max(0), 2);
        simpson(0, top, 1, h, |j| kernel(j, at(j - k)))
    };

    let beta_p = simpson(-m, m, 1, h, |k| {
        let q = at(k);
        let outer = (one - q.f) * (one - q.g) * q.v;
        if outer == T::zero() {
            return T::zero();
        }
        outer * inner(k, &|j, r| planted_kernel[j as usize] * (one - r.f))
    });

    let beta_u = simpson(-m, m, 1, h, |k| {
        let q = at(k);
        let outer = (one - q.f) * ((one - q.g) * q.v * q.w - lambda * (q.g - q.w));
        if outer == T::zero() {
            return T::zero();
        }
        outer * inner(k, &|j, r| t(j) * (one - r.f) * r.w)
    });

    (beta_p, beta_u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let h = 0.5;
        let v = simpson(-4, 8, 1, h, |k| {
            let x = k as f64 * h;
            x * x * x - 2.0 * x + 1.0
        });
        // ∫_{-2}^{4} x³ - 2x + 1 dx = (256 - 16)/4 - (16 - 4) + 6
        assert!((v - 54.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_stride_two() {
        let h = 0.01;
        let f = |k: i64| (-(k as f64) * h).exp();
        let a = simpson(0, 400, 1, h, f);
        let b = simpson(0, 400, 2, h, f);
        let exact = 1.0 - (-4.0f64).exp();
        assert!((a - exact).abs() < 1e-10);
        assert!((b - exact).abs() < 1e-9);
    }
}
