//! Dormand–Prince 5(4) with FSAL and a standard step-size controller.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) type State<T> = [T; 3];

// The system is autonomous, so the stage abscissae never appear.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order weights minus the embedded fourth-order ones.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Scalar>(y: &State<T>, h: T, terms: &[(f64, &State<T>)]) -> State<T> {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + T::lit(*c) * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

pub(crate) struct Trial<T> {
    pub y: State<T>,
    pub k7: State<T>,
    pub err: T,
}

pub(crate) struct Dopri5<T, F> {
    f: F,
    pub x: T,
    pub y: State<T>,
    k1: State<T>,
    h: T,
    rtol: T,
    atol: T,
    pub accepted: usize,
    pub rejected: usize,
}

impl<T: Scalar, F: Fn(&State<T>) -> State<T>> Dopri5<T, F> {
    pub fn new(f: F, x: T, y: State<T>, rtol: T, atol: T) -> Self {
        let k1 = f(&y);
        Self {
            f,
            x,
            y,
            k1,
            h: T::lit(1e-3),
            rtol,
            atol,
            accepted: 0,
            rejected: 0,
        }
    }

    /// One step of size `h` from the current state without committing it.
    pub fn trial(&self, h: T) -> Trial<T> {
        let (y, k1) = (&self.y, &self.k1);
        let f = &self.f;
        let k2 = f(&axpy(y, h, &[(A21, k1)]));
        let k3 = f(&axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(&y_new);
        let mut sq = T::zero();
        for i in 0..3 {
            let e = h
                * (T::lit(E1) * k1[i]
                    + T::lit(E3) * k3[i]
                    + T::lit(E4) * k4[i]
                    + T::lit(E5) * k5[i]
                    + T::lit(E6) * k6[i]
                    + T::lit(E7) * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            sq = sq + (e / sc) * (e / sc);
        }
        let err = (sq / T::lit(3.0)).sqrt();
        Trial { y: y_new, k7, err }
    }

    pub fn commit(&mut self, h: T, trial: Trial<T>) {
        self.x = self.x + h;
        self.y = trial.y;
        self.k1 = trial.k7;
    }

    fn failure(&self, reason: &str) -> Error {
        Error::NumericalFailure {
            x: self.x.to_f64_lossy(),
            state: self.y.map(|v| v.to_f64_lossy()),
            reason: reason.to_string(),
        }
    }

    /// Take one accepted step no longer than `h_max`; returns the step
    /// size and the committed-to-be trial, leaving the stepper unchanged.
    pub fn propose(&mut self, h_max: T) -> Result<(T, Trial<T>)> {
        let h_min = T::lit(1e-14) * T::one().max(self.x.abs());
        let mut h = self.h.min(h_max);
        loop {
            let trial = self.trial(h);
            let finite = trial.err.is_finite() && trial.y.iter().all(|v| v.is_finite());
            if finite && trial.err <= T::one() {
                let fac = if trial.err == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * trial.err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
                };
                let next = h * fac;
                // A step shortened to hit a target says nothing against the old proposal.
                self.h = if h < self.h { next.max(self.h) } else { next };
                self.accepted += 1;
                return Ok((h, trial));
            }
            self.rejected += 1;
            let fac = if finite {
                (T::lit(0.9) * trial.err.powf(T::lit(-0.2))).max(T::lit(0.2))
            } else {
                T::lit(0.25)
            };
            h = h * fac;
            if h < h_min {
                return Err(self.failure("step size underflow"));
            }
        }
    }

    /// Advance exactly to `x_target`.
    pub fn advance_to(&mut self, x_target: T) -> Result<()> {
        while self.x < x_target {
            let remaining = x_target - self.x;
            let (h, trial) = self.propose(remaining)?;
            if h >= remaining {
                self.x = x_target;
                self.y = trial.y;
                self.k1 = trial.k7;
            } else {
                self.commit(h, trial);
            }
        }
        Ok(())
    }
}
