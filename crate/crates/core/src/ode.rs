//! Dormand-Prince 5(4) with PI step-size control.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Real;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// What the per-step hook asks the integrator to do next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    Stop,
}

/// Adaptive integrator state, carried across calls so that consecutive
/// record intervals reuse the step size.
#[derive(Clone, Debug)]
pub struct Dopri5<T: Real> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_steps: usize,
    /// Current step proposal; zero means "pick one".
    pub h: T,
    err_prev: T,
    pub accepted: usize,
    pub rejected: usize,
}

impl<T: Real> Dopri5<T> {
    pub fn new(rel_tol: T, abs_tol: T, max_steps: usize) -> Self {
        Self {
            rel_tol,
            abs_tol,
            max_steps,
            h: T::zero(),
            err_prev: T::of(1e-4),
            accepted: 0,
            rejected: 0,
        }
    }

    fn err_norm(&self, y: &DVector<T>, y_new: &DVector<T>, err: &DVector<T>) -> T {
        let n = y.len().max(1);
        let mut acc = T::zero();
        for i in 0..y.len() {
            let sc = self.abs_tol + self.rel_tol * y[i].abs().max(y_new[i].abs());
            acc += (err[i] / sc).powi(2);
        }
        (acc / T::of(n as f64)).sqrt()
    }

    fn initial_step<F>(&self, f: &mut F, t: T, y: &DVector<T>, f0: &DVector<T>) -> Result<T>
    where
        F: FnMut(T, &DVector<T>) -> Result<DVector<T>>,
    {
        let scale = |v: &DVector<T>| {
            let mut acc = T::zero();
            for i in 0..v.len() {
                let sc = self.abs_tol + self.rel_tol * y[i].abs();
                acc += (v[i] / sc).powi(2);
            }
            (acc / T::of(v.len().max(1) as f64)).sqrt()
        };
        let d0 = scale(y);
        let d1 = scale(f0);
        let h0 = if d0 < T::of(1e-5) || d1 < T::of(1e-5) {
            T::of(1e-6)
        } else {
            T::of(0.01) * d0 / d1
        };
        let y1 = y + f0 * h0;
        let f1 = f(t + h0, &y1)?;
        let d2 = scale(&(f1 - f0)) / h0;
        let h1 = if d1.max(d2) <= T::of(1e-15) {
            (h0 * T::of(1e-3)).max(T::of(1e-6))
        } else {
            (T::of(0.01) / d1.max(d2)).powf(T::of(0.2))
        };
        Ok((h0 * T::of(100.0)).min(h1))
    }

    /// Advances `(t, y)` to exactly `t_end`. After each accepted step the
    /// hook may modify `y` (projections) or request a stop.
    pub fn advance<F, G>(
        &mut self,
        mut f: F,
        t: &mut T,
        y: &mut DVector<T>,
        t_end: T,
        mut after_step: G,
    ) -> Result<StepControl>
    where
        F: FnMut(T, &DVector<T>) -> Result<DVector<T>>,
        G: FnMut(T, &mut DVector<T>) -> Result<StepControl>,
    {
        if *t >= t_end {
            return Ok(StepControl::Continue);
        }
        let mut k0 = f(*t, y)?;
        if self.h <= T::zero() {
            self.h = self.initial_step(&mut f, *t, y, &k0)?;
        }
        let beta = T::of(0.04);
        let alpha = T::of(0.2) - beta * T::of(0.75);
        let mut last_rejected = false;
        loop {
            if self.accepted + self.rejected >= self.max_steps {
                return Err(Error::StepFailure { t: t.to_f64_lossy() });
            }
            let remaining = t_end - *t;
            let landing = self.h >= remaining;
            let h = if landing { remaining } else { self.h };
            let h_min = T::machine_eps() * T::of(16.0) * t.abs().max(T::one());
            if h < h_min && !landing {
                return Err(Error::StepFailure { t: t.to_f64_lossy() });
            }
            let mut k: Vec<DVector<T>> = Vec::with_capacity(7);
            k.push(k0.clone());
            let mut y_new = y.clone();
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in k.iter().enumerate() {
                    let a = A[s][j];
                    if a != 0.0 {
                        ys.axpy(h * T::of(a), kj, T::one());
                    }
                }
                if s == 6 {
                    y_new = ys.clone();
                }
                k.push(f(*t + h * T::of(C[s]), &ys)?);
            }
            let mut err = DVector::zeros(y.len());
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    err.axpy(h * T::of(E[j]), kj, T::one());
                }
            }
            let en = self.err_norm(y, &y_new, &err);
            if !en.is_finite() {
                self.rejected += 1;
                self.h = h * T::of(0.2);
                last_rejected = true;
                continue;
            }
            if en <= T::one() {
                self.accepted += 1;
                let en_c = en.max(T::of(1e-10));
                let mut fac = T::of(0.9) * en_c.powf(-alpha) * self.err_prev.powf(beta);
                fac = fac.max(T::of(0.2)).min(if last_rejected { T::one() } else { T::of(10.0) });
                self.err_prev = en_c.max(T::of(1e-4));
                // a step clipped to land on t_end keeps the larger proposal
                self.h = if landing { self.h.max(h * fac) } else { h * fac };
                *t = if landing { t_end } else { *t + h };
                *y = y_new;
                last_rejected = false;
                let control = after_step(*t, y)?;
                if control == StepControl::Stop || landing {
                    return Ok(control);
                }
                k0 = f(*t, y)?;
            } else {
                self.rejected += 1;
                let fac = (T::of(0.9) * en.powf(-T::of(0.2))).max(T::of(0.2));
                self.h = h * fac;
                last_rejected = true;
            }
        }
    }
}
