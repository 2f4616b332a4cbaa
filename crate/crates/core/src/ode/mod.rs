//! The reduced ODE system
//!
//! ```text
//! U' = -λ U (1 - U) + (1 - U V) (1 - (1 - U) W)
//! V' =  λ V (1 - U)
//! W' = -λ W U
//! ```
//!
//! with `U(0) = 1/2`, `V(0) = W(0) = ε`. For `0 < λ < 4` exactly one `ε₀`
//! sends the trajectory into the saddle `(1, 1, 0)`; below it `U` reaches 1
//! first, above it `V` does. `F = U V` is then the CDF of the fixed-point
//! message `X` and `G = (1 - U) W = F(-x)`.

mod dopri;
mod profile;
mod quad;

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::scalar::Scalar;

use dopri::{Dopri5, State};

pub use profile::{FullLineValues, Profile};
pub use quad::{compute_alpha, compute_weight, AlphaEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub x: T,
    pub u: T,
    pub v: T,
    pub w: T,
    /// `U V`
    pub f: T,
    /// `(1 - U) W`
    pub g: T,
}

impl<T: Scalar> TrajectoryPoint<T> {
    pub fn new(x: T, u: T, v: T, w: T) -> Self {
        Self {
            x,
            u,
            v,
            w,
            f: u * v,
            g: (T::one() - u) * w,
        }
    }

    fn from_state(x: T, s: &State<T>) -> Self {
        Self::new(x, s[0], s[1], s[2])
    }

    pub fn initial(epsilon: T) -> Self {
        Self::new(T::zero(), T::lit(0.5), epsilon, epsilon)
    }

    /// `F W + G V - V W`, zero on every exact trajectory.
    pub fn conservation_residual(&self) -> T {
        self.f * self.w + self.g * self.v - self.v * self.w
    }

    /// Distance to the saddle in the `(U, V)` directions.
    pub fn saddle_distance_uv(&self) -> T {
        (T::one() - self.u).max(T::one() - self.v)
    }

    pub fn saddle_distance(&self) -> T {
        self.saddle_distance_uv().max(self.w)
    }

    pub fn to_f64(&self) -> TrajectoryPoint<f64> {
        TrajectoryPoint {
            x: self.x.to_f64_lossy(),
            u: self.u.to_f64_lossy(),
            v: self.v.to_f64_lossy(),
            w: self.w.to_f64_lossy(),
            f: self.f.to_f64_lossy(),
            g: self.g.to_f64_lossy(),
        }
    }
}

/// Where a trajectory started at `ε` ends up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasinClass<T> {
    /// `V` reached 1 first (`ε > ε₀`).
    EscapedV { x_hit: T },
    /// `U` reached 1 first (`ε < ε₀`).
    EscapedU { x_hit: T },
    /// Neither happened on `[0, x_max]`.
    Undetermined { x_max: T, final_point: TrajectoryPoint<T> },
}

impl<T> BasinClass<T> {
    pub fn is_escaped_u(&self) -> bool {
        matches!(self, BasinClass::EscapedU { .. })
    }

    pub fn is_escaped_v(&self) -> bool {
        matches!(self, BasinClass::EscapedV { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Spacing of the reconstructed trajectory and of all quadratures.
    pub grid_step: f64,
    pub x_max_cap: f64,
    /// Stop reconstructing once `max(1 - U, 1 - V, W)` falls below this.
    pub saddle_tol: f64,
    /// Largest extrapolated unstable error, relative to the distance to the
    /// saddle, that a kept trajectory point may carry.
    pub restart_ratio: f64,
    pub max_restarts: usize,
    /// Largest acceptable distance to the saddle at the end of the trajectory.
    pub precision_floor: f64,
    /// Half-width of the quadrature window in `x`.
    pub window: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            grid_step: 0.01,
            x_max_cap: 1e4,
            saddle_tol: 1e-10,
            restart_ratio: 1e-6,
            max_restarts: 40,
            precision_floor: 1e-2,
            window: 40.0,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rtol = tol;
        self.atol = tol;
        self
    }

    pub fn with_grid_step(mut self, h: f64) -> Self {
        self.grid_step = h;
        self
    }

    fn tolerances<T: Scalar>(&self) -> (T, T) {
        let floor = 16.0 * T::epsilon().to_f64_lossy();
        (T::lit(self.rtol.max(floor)), T::lit(self.atol.max(floor)))
    }
}

/// Right-hand side of the reduced system.
pub fn rhs<T: Scalar>(point: &TrajectoryPoint<T>, lambda: T) -> (T, T, T) {
    let d = rhs_state(&[point.u, point.v, point.w], lambda);
    (d[0], d[1], d[2])
}

fn rhs_state<T: Scalar>(s: &State<T>, lambda: T) -> State<T> {
    let one = T::one();
    let [u, v, w] = *s;
    [
        -lambda * u * (one - u) + (one - u * v) * (one - (one - u) * w),
        lambda * v * (one - u),
        -lambda * w * u,
    ]
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return param(format!("lambda must be positive and finite, got {lambda}"));
    }
    if lambda >= T::lit(4.0) {
        return Err(Error::NoSolution {
            lambda: lambda.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Time at which `U` reaches 1 when `V = W = 0`, where `U' = λU² - λU + 1`.
fn escape_time_at_zero<T: Scalar>(lambda: T) -> T {
    let b = T::one() - lambda / T::lit(4.0);
    (T::lit(0.5) * (lambda / b).sqrt()).atan() / (lambda * b).sqrt()
}

pub fn integrate_classify<T: Scalar>(lambda: T, epsilon: T, x_max: T) -> Result<BasinClass<T>> {
    integrate_classify_with(lambda, epsilon, x_max, &OdeOptions::default())
}

/// Integrate from `(1/2, ε, ε)` until `U` or `V` first reaches 1, or `x_max`.
pub fn integrate_classify_with<T: Scalar>(lambda: T, epsilon: T, x_max: T, opts: &OdeOptions) -> Result<BasinClass<T>> {
    check_lambda(lambda)?;
    if !(epsilon >= T::zero() && epsilon <= T::one()) {
        return param(format!("epsilon must lie in [0, 1], got {epsilon}"));
    }
    if !(x_max > T::zero()) {
        return param(format!("x_max must be positive, got {x_max}"));
    }
    if epsilon == T::zero() {
        return Ok(BasinClass::EscapedU {
            x_hit: escape_time_at_zero(lambda),
        });
    }
    if epsilon == T::one() {
        return Ok(BasinClass::EscapedV { x_hit: T::zero() });
    }
    classify_state(lambda, T::zero(), [T::lit(0.5), epsilon, epsilon], x_max, opts)
}

/// Classification of the trajectory through `state` at `x0`.
fn classify_state<T: Scalar>(lambda: T, x0: T, state: State<T>, x_max: T, opts: &OdeOptions) -> Result<BasinClass<T>> {
    let (rtol, atol) = opts.tolerances::<T>();
    let mut stepper = Dopri5::new(move |s: &State<T>| rhs_state(s, lambda), x0, state, rtol, atol);
    let one = T::one();
    if state[0] >= one || state[1] >= one {
        return Ok(if state[1] >= one {
            BasinClass::EscapedV { x_hit: x0 }
        } else {
            BasinClass::EscapedU { x_hit: x0 }
        });
    }
    while stepper.x < x_max {
        let remaining = x_max - stepper.x;
        let (h, trial) = stepper.propose(remaining)?;
        let hit_u = trial.y[0] >= one;
        let hit_v = trial.y[1] >= one;
        if hit_u || hit_v {
            let xu = hit_u.then(|| locate_crossing(&stepper, h, 0));
            let xv = hit_v.then(|| locate_crossing(&stepper, h, 1));
            let x0 = stepper.x;
            return Ok(match (xu, xv) {
                (Some(a), Some(b)) if b <= a => BasinClass::EscapedV { x_hit: x0 + b },
                (Some(a), _) => BasinClass::EscapedU { x_hit: x0 + a },
                (None, Some(b)) => BasinClass::EscapedV { x_hit: x0 + b },
                (None, None) => unreachable!(),
            });
        }
        if h >= remaining {
            stepper.x = x_max;
            stepper.y = trial.y;
        } else {
            stepper.commit(h, trial);
        }
    }
    Ok(BasinClass::Undetermined {
        x_max,
        final_point: TrajectoryPoint::from_state(stepper.x, &stepper.y),
    })
}

/// Smallest sub-step after which component `i` is at least 1, by re-stepping bisection.
fn locate_crossing<T: Scalar, F: Fn(&State<T>) -> State<T>>(stepper: &Dopri5<T, F>, h: T, i: usize) -> T {
    let (mut lo, mut hi) = (T::zero(), h);
    let tol = T::lit(1e-13) * T::one().max(stepper.x.abs());
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if stepper.trial(mid).y[i] >= T::one() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn classify_with_retry<T: Scalar>(lambda: T, epsilon: T, opts: &OdeOptions) -> Result<BasinClass<T>> {
    let cap = T::lit(opts.x_max_cap);
    let mut x_max = (T::lit(50.0) / lambda + T::lit(50.0)).min(cap);
    loop {
        let class = integrate_classify_with(lambda, epsilon, x_max, opts)?;
        if !matches!(class, BasinClass::Undetermined { .. }) || x_max >= cap {
            return Ok(class);
        }
        x_max = (x_max * T::lit(2.0)).min(cap);
    }
}

/// Classify every `ε` of a grid, in parallel.
pub fn scan_basins<T: Scalar>(lambda: T, epsilons: &[T], opts: &OdeOptions) -> Result<Vec<BasinClass<T>>> {
    epsilons.par_iter().map(|&e| classify_with_retry(lambda, e, opts)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shooting<T> {
    pub epsilon0: T,
    /// Largest probe known to escape through `U`.
    pub lo: T,
    /// Smallest probe known to escape through `V`.
    pub hi: T,
    pub bracket_width: T,
    pub probes: usize,
}

pub fn find_epsilon0<T: Scalar>(lambda: T) -> Result<Shooting<T>> {
    find_epsilon0_with(lambda, &OdeOptions::default())
}

/// Bisection on `ε` between the two escape basins.
pub fn find_epsilon0_with<T: Scalar>(lambda: T, opts: &OdeOptions) -> Result<Shooting<T>> {
    check_lambda(lambda)?;
    let (mut lo, mut hi) = (T::zero(), T::one());
    let a = classify_with_retry(lambda, lo, opts)?;
    let b = classify_with_retry(lambda, hi, opts)?;
    if !(a.is_escaped_u() && b.is_escaped_v()) {
        return Err(Error::Internal(format!("bracket ends classify as {a:?} and {b:?}")));
    }
    let two = T::lit(2.0);
    let rel = T::lit(4.0) * T::epsilon();
    let mut probes = 2;
    loop {
        let mid = lo + (hi - lo) / two;
        if hi - lo <= rel * mid || mid <= lo || mid >= hi {
            break;
        }
        probes += 1;
        match classify_with_retry(lambda, mid, opts)? {
            BasinClass::EscapedU { .. } => lo = mid,
            BasinClass::EscapedV { .. } => hi = mid,
            BasinClass::Undetermined { x_max, .. } => {
                return Err(Error::Internal(format!(
                    "epsilon = {mid} undetermined up to x = {x_max}"
                )))
            }
        }
    }
    Ok(Shooting {
        epsilon0: lo + (hi - lo) / two,
        lo,
        hi,
        bracket_width: hi - lo,
        probes,
    })
}

/// Why the reconstructed trajectory ends where it does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Reached the saddle tolerance.
    Converged,
    /// Re-shooting stopped bringing the trajectory closer to the saddle.
    Exhausted,
    /// The integrator failed.
    IntegratorFailure,
    /// Hit the `x` cap.
    Cap,
}

/// `ε₀` trajectory on a uniform grid `[0, x_T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction<T> {
    pub lambda: T,
    pub epsilon0: T,
    pub grid_step: T,
    pub points: Vec<TrajectoryPoint<T>>,
    pub stop: StopReason,
    /// Number of re-shooting stages after the initial shot.
    pub restarts: usize,
}

impl<T: Scalar> Reconstruction<T> {
    pub fn x_t(&self) -> T {
        self.points.last().map_or(T::zero(), |p| p.x)
    }

    pub fn profile(&self) -> Profile<T> {
        Profile::new(self)
    }
}

enum Leg<T> {
    Converged(Vec<TrajectoryPoint<T>>),
    /// Left the saddle neighbourhood; escape happened after the last point.
    Escaped(Vec<TrajectoryPoint<T>>),
    Failed(Vec<TrajectoryPoint<T>>),
    Cap(Vec<TrajectoryPoint<T>>),
}

/// Grid points `k0 + 1, k0 + 2, ...` of the trajectory through `state` at `k0 h`.
fn grid_leg<T: Scalar>(lambda: T, k0: usize, state: State<T>, opts: &OdeOptions) -> Leg<T> {
    let (rtol, atol) = opts.tolerances::<T>();
    let h = T::lit(opts.grid_step);
    let at = |k: usize| T::from_usize(k).expect("grid index") * h;
    let mut s = Dopri5::new(move |y: &State<T>| rhs_state(y, lambda), at(k0), state, rtol, atol);
    let cap = (opts.x_max_cap / opts.grid_step) as usize;
    let mut points = Vec::new();
    let mut min_uv = T::infinity();
    for k in k0 + 1..=cap {
        let x = at(k);
        if s.advance_to(x).is_err() {
            return Leg::Failed(points);
        }
        let p = TrajectoryPoint::from_state(x, &s.y);
        let d_uv = p.saddle_distance_uv();
        if p.u >= T::one() || p.v >= T::one() || d_uv > T::lit(2.0) * min_uv {
            return Leg::Escaped(points);
        }
        min_uv = min_uv.min(d_uv);
        points.push(p);
        if p.saddle_distance() < T::lit(opts.saddle_tol).max(T::lit(100.0) * T::epsilon()) {
            return Leg::Converged(points);
        }
    }
    Leg::Cap(points)
}

/// Index into `points` of the last point whose unstable error, extrapolated
/// back from an escape at the final point, is below `ratio` of its distance.
fn trusted_prefix<T: Scalar>(lambda: T, points: &[TrajectoryPoint<T>], ratio: T) -> usize {
    let Some(last) = points.last() else { return 0 };
    let d_e = last.saddle_distance_uv();
    points
        .iter()
        .rposition(|p| d_e * (-lambda * (last.x - p.x)).exp() <= ratio * p.saddle_distance_uv())
        .unwrap_or(0)
}

/// Shift `U` at a grid point so that the trajectory through it stays on the
/// stable manifold of the saddle, by bisection between the two escapes.
fn reshoot<T: Scalar>(lambda: T, p: &TrajectoryPoint<T>, opts: &OdeOptions) -> Result<Option<State<T>>> {
    let d = p.saddle_distance_uv();
    let horizon = p.x + T::lit(50.0) / lambda + T::lit(50.0);
    let probe = |du: T| classify_state(lambda, p.x, [p.u + du, p.v, p.w], horizon, opts);
    let mut a = T::lit(1e-4) * d;
    let (mut lo, mut hi) = loop {
        let (below, above) = (probe(-a)?, probe(a)?);
        if below.is_escaped_v() && above.is_escaped_u() {
            break (-a, a);
        }
        a = a * T::lit(10.0);
        if a > d {
            return Ok(None);
        }
    };
    let two = T::lit(2.0);
    loop {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi || p.u + lo == p.u + hi {
            break;
        }
        match probe(mid)? {
            BasinClass::EscapedU { .. } => hi = mid,
            BasinClass::EscapedV { .. } => lo = mid,
            BasinClass::Undetermined { .. } => break,
        }
    }
    Ok(Some([p.u + (lo + (hi - lo) / two), p.v, p.w]))
}

/// Follow the `ε₀` trajectory along the grid towards the saddle.
///
/// Double precision and the integrator tolerance leave a small component
/// along the unstable direction, which eventually throws the trajectory off
/// the saddle. Each time that happens the trajectory is cut where the
/// extrapolated error is still negligible and re-shot from there with a
/// bisected correction to `U`; this repeats until the saddle tolerance is
/// met or a stage no longer gets closer.
pub fn reconstruct_solution<T: Scalar>(
    lambda: T,
    epsilon0: T,
    opts: &OdeOptions,
) -> Result<Reconstruction<T>> {
    check_lambda(lambda)?;
    if !(epsilon0 > T::zero() && epsilon0 < T::one()) {
        return param(format!("epsilon0 must lie in (0, 1), got {epsilon0}"));
    }
    // Narrower types cannot resolve the default ratio.
    let ratio = T::lit(opts.restart_ratio).max(T::epsilon().sqrt());
    let mut points = vec![TrajectoryPoint::initial(epsilon0)];
    let mut state = [T::lit(0.5), epsilon0, epsilon0];
    let mut restarts = 0;
    let stop = loop {
        let k0 = points.len() - 1;
        let (leg, escaped) = match grid_leg(lambda, k0, state, opts) {
            Leg::Converged(l) => {
                points.extend(l);
                break StopReason::Converged;
            }
            Leg::Cap(l) => {
                points.extend(l);
                break StopReason::Cap;
            }
            Leg::Failed(l) => (l, false),
            Leg::Escaped(l) => (l, true),
        };
        let before = points.last().expect("initial point").saddle_distance_uv();
        let keep = if escaped { trusted_prefix(lambda, &leg, ratio) } else { leg.len() };
        points.extend_from_slice(&leg[..keep]);
        let last = *points.last().expect("initial point");
        if !escaped {
            break StopReason::IntegratorFailure;
        }
        if keep == 0 || last.saddle_distance_uv() >= before || restarts >= opts.max_restarts {
            break StopReason::Exhausted;
        }
        match reshoot(lambda, &last, opts)? {
            Some(s) => state = s,
            None => break StopReason::Exhausted,
        }
        restarts += 1;
    };
    let last = *points.last().expect("initial point");
    let distance = last.saddle_distance_uv();
    if distance > T::lit(opts.precision_floor) {
        return Err(Error::Precision {
            x_reached: last.x.to_f64_lossy(),
            distance: distance.to_f64_lossy(),
        });
    }
    Ok(Reconstruction {
        lambda,
        epsilon0,
        grid_step: T::lit(opts.grid_step),
        points,
        stop,
        restarts,
    })
}

/// Grid samples of an arbitrary trajectory up to `x_end` or the first escape.
pub fn sample_trajectory<T: Scalar>(
    lambda: T,
    epsilon: T,
    x_end: T,
    opts: &OdeOptions,
) -> Result<Vec<TrajectoryPoint<T>>> {
    check_lambda(lambda)?;
    if !(epsilon >= T::zero() && epsilon <= T::one()) {
        return param(format!("epsilon must lie in [0, 1], got {epsilon}"));
    }
    let (rtol, atol) = opts.tolerances::<T>();
    let h = T::lit(opts.grid_step);
    let mut s = Dopri5::new(
        move |y: &State<T>| rhs_state(y, lambda),
        T::zero(),
        [T::lit(0.5), epsilon, epsilon],
        rtol,
        atol,
    );
    let mut points = vec![TrajectoryPoint::initial(epsilon)];
    let mut k = 1usize;
    loop {
        let x = T::from_usize(k).expect("grid index") * h;
        if x > x_end || s.advance_to(x).is_err() {
            break;
        }
        let p = TrajectoryPoint::from_state(x, &s.y);
        if p.u >= T::one() || p.v >= T::one() {
            break;
        }
        points.push(p);
        k += 1;
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics<T> {
    pub bisection_width: T,
    pub probes: usize,
    pub x_t: T,
    pub stop: StopReason,
    pub restarts: usize,
    /// Contribution of `[x_T, ∞)` to `1 - α`.
    pub tail_estimate: T,
    /// `|α_h - α_2h|`.
    pub quadrature_delta: T,
    /// The tail exceeded `1e-6` of the integral.
    pub tail_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution<T> {
    pub lambda: T,
    pub epsilon0: T,
    pub grid_step: T,
    pub trajectory: Vec<TrajectoryPoint<T>>,
    pub alpha: T,
    pub beta_p: T,
    pub beta_u: T,
    pub diagnostics: Diagnostics<T>,
}

impl<T: Scalar> OdeSolution<T> {
    /// `β_p + β_u`, the limiting matching weight per vertex.
    pub fn weight(&self) -> T {
        self.beta_p + self.beta_u
    }

    pub fn reconstruction(&self) -> Reconstruction<T> {
        Reconstruction {
            lambda: self.lambda,
            epsilon0: self.epsilon0,
            grid_step: self.grid_step,
            points: self.trajectory.clone(),
            stop: self.diagnostics.stop,
            restarts: self.diagnostics.restarts,
        }
    }

    pub fn profile(&self) -> Profile<T> {
        Profile::from_points(self.lambda, self.grid_step, &self.trajectory)
    }
}

pub fn solve<T: Scalar>(lambda: T) -> Result<OdeSolution<T>> {
    solve_with(lambda, &OdeOptions::default())
}

/// Shoot for `ε₀`, reconstruct, and evaluate `α`, `β_p` and `β_u`.
pub fn solve_with<T: Scalar>(lambda: T, opts: &OdeOptions) -> Result<OdeSolution<T>> {
    let shot = find_epsilon0_with(lambda, opts)?;
    let rec = reconstruct_solution(lambda, shot.epsilon0, opts)?;
    let a = compute_alpha(&rec, opts);
    let (beta_p, beta_u) = compute_weight(&rec, opts);
    Ok(OdeSolution {
        lambda,
        epsilon0: shot.epsilon0,
        grid_step: rec.grid_step,
        diagnostics: Diagnostics {
            bisection_width: shot.bracket_width,
            probes: shot.probes,
            x_t: rec.x_t(),
            stop: rec.stop,
            restarts: rec.restarts,
            tail_estimate: a.tail,
            quadrature_delta: a.delta,
            tail_warning: a.tail_warning,
        },
        trajectory: rec.points,
        alpha: a.alpha,
        beta_p,
        beta_u,
    })
}
