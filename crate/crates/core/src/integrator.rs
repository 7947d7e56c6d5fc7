//! Adaptive Dormand–Prince 5(4) integration with dense output and threshold
//! events.
//!
//! Step control is proportional-integral on the max-norm of the embedded error
//! scaled by `atol_i + rtol·|y_i|`, so every accepted step satisfies the local
//! error bound componentwise. Each accepted step keeps the coefficients of the
//! pair's quartic continuous extension, which is what event location and
//! resampling evaluate.
//!
//! Exact solutions of the models stay nonnegative. A component that dips
//! below `-10·atol_i` aborts the integration; smaller undershoots are stored as
//! computed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VectorField;

/// Event locations are refined to this width in days.
pub const EVENT_TIME_TOL: f64 = 1e-6;
/// Smallest step size before the solver gives up.
pub const MIN_STEP: f64 = 1e-12;
/// Undershoot multiple of `atol` that is treated as a hard error.
pub const POSITIVITY_SLACK: f64 = 10.0;

const MAX_STEPS: usize = 50_000_000;

const A21: f64 = 0.2;
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rtol: f64,
    /// One entry per state component.
    pub atol: Vec<f64>,
    /// Initial step in days; chosen automatically when absent.
    #[serde(default)]
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub t_max: f64,
}

impl SolverConfig {
    /// Defaults for the three-compartment model (T, I, V).
    pub fn three_component(t_max: f64) -> Self {
        SolverConfig {
            rtol: 1e-8,
            atol: vec![1e-12, 1e-12, 1e-13],
            h_init: None,
            h_max: 1.0,
            t_max,
        }
    }

    /// Defaults for the latent model (T, I, L, V).
    pub fn latent(t_max: f64) -> Self {
        SolverConfig {
            rtol: 1e-8,
            atol: vec![1e-12, 1e-12, 1e-12, 1e-13],
            h_init: None,
            h_max: 1.0,
            t_max,
        }
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(1e-12..=1e-2).contains(&self.rtol) {
            return Err(Error::param("solver.rtol", format!("must lie in [1e-12, 1e-2], got {}", self.rtol)));
        }
        if self.atol.len() != dim {
            return Err(Error::param(
                "solver.atol",
                format!("expected {dim} entries, got {}", self.atol.len()),
            ));
        }
        if self.atol.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::param("solver.atol", "every entry must be finite and > 0"));
        }
        if !(self.h_max.is_finite() && self.h_max > 0.0) {
            return Err(Error::param("solver.h_max", "must be finite and > 0"));
        }
        if let Some(h) = self.h_init {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::param("solver.h_init", "must be finite and > 0"));
            }
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::param("solver.t_max", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Downward,
    Upward,
}

/// Crossing of `y[component]` through `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub component: usize,
    pub threshold: f64,
    pub direction: Direction,
}

impl EventSpec {
    pub fn downward(component: usize, threshold: f64) -> Self {
        EventSpec {
            component,
            threshold,
            direction: Direction::Downward,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.component >= dim {
            return Err(Error::param("event.component", format!("{} out of range", self.component)));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::param("event.threshold", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Whether a value sits on the far side of the threshold.
    fn reached(&self, value: f64) -> bool {
        match self.direction {
            Direction::Downward => value <= self.threshold,
            Direction::Upward => value >= self.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub spec: EventSpec,
}

/// One accepted step and its continuous extension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep<const D: usize> {
    pub t0: f64,
    pub h: f64,
    coeffs: [[f64; D]; 5],
}

impl<const D: usize> DenseStep<D> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; D] {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| {
            r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
        })
    }

    fn eval_component(&self, t: f64, i: usize) -> f64 {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
    }
}

/// Solution of an initial-value problem on `[0, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    /// Strictly increasing; first entry 0.
    pub times: Vec<f64>,
    pub states: Vec<[f64; D]>,
    pub steps: Vec<DenseStep<D>>,
    pub events: Vec<EventRecord>,
    pub t_max: f64,
    pub atol: Vec<f64>,
    pub rejected_steps: usize,
}

impl<const D: usize> Trajectory<D> {
    pub fn initial(&self) -> [f64; D] {
        self.states[0]
    }

    pub fn last(&self) -> [f64; D] {
        *self.states.last().expect("trajectory has at least one state")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one time")
    }

    /// Dense-output value at `t`, clamped to the covered interval.
    pub fn eval(&self, t: f64) -> [f64; D] {
        if self.steps.is_empty() || t <= 0.0 {
            return self.initial();
        }
        if t >= self.t_end() {
            return self.last();
        }
        let idx = self.steps.partition_point(|s| s.t1() < t);
        self.steps[idx.min(self.steps.len() - 1)].eval(t)
    }

    pub fn sample(&self, times: &[f64]) -> Vec<[f64; D]> {
        times.iter().map(|&t| self.eval(t)).collect()
    }

    /// Smallest stored value of each component.
    pub fn component_minima(&self) -> [f64; D] {
        let mut m = [f64::INFINITY; D];
        for s in &self.states {
            for i in 0..D {
                m[i] = m[i].min(s[i]);
            }
        }
        m
    }

    /// Largest undershoot below zero measured in units of the component's atol.
    pub fn worst_undershoot(&self) -> f64 {
        let minima = self.component_minima();
        (0..D)
            .map(|i| (-minima[i]).max(0.0) / self.atol[i])
            .fold(0.0, f64::max)
    }
}

/// Integrates `rhs` from `y0` over `[0, cfg.t_max]`, recording every crossing
/// of the given events.
pub fn integrate<const D: usize, F: VectorField<D> + ?Sized>(
    rhs: &F,
    y0: [f64; D],
    cfg: &SolverConfig,
    events: &[EventSpec],
) -> Result<Trajectory<D>> {
    cfg.validate(D)?;
    for ev in events {
        ev.validate(D)?;
    }
    if y0.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidState(format!(
            "initial state must be finite and nonnegative, got {y0:?}"
        )));
    }

    let atol: [f64; D] = std::array::from_fn(|i| cfg.atol[i]);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![y0],
        steps: Vec::new(),
        events: Vec::new(),
        t_max: cfg.t_max,
        atol: cfg.atol.clone(),
        rejected_steps: 0,
    };
    for ev in events {
        if ev.reached(y0[ev.component]) {
            traj.events.push(EventRecord { time: 0.0, spec: *ev });
        }
    }
    if cfg.t_max == 0.0 {
        return Ok(traj);
    }

    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = rhs.eval(&y)?;
    let mut h = match cfg.h_init {
        Some(h) => h,
        None => initial_step(rhs, &y, &k1, cfg, &atol)?,
    }
    .min(cfg.h_max);
    let mut err_old = 1e-4f64;
    let mut last_rejected = false;
    let expo = 0.2 - BETA * 0.75;

    while t < cfg.t_max {
        if traj.steps.len() >= MAX_STEPS {
            return Err(Error::Numeric(format!("exceeded {MAX_STEPS} steps at t = {t}")));
        }
        let remaining = cfg.t_max - t;
        let last_step = h >= remaining;
        if last_step {
            h = remaining;
        }
        if h < MIN_STEP && !last_step {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        let stage = |y: &[f64; D], ks: &[(&[f64; D], f64)]| -> [f64; D] {
            std::array::from_fn(|i| y[i] + h * ks.iter().map(|(k, a)| a * k[i]).sum::<f64>())
        };
        let k2 = rhs.eval(&stage(&y, &[(&k1, A21)]))?;
        let k3 = rhs.eval(&stage(&y, &[(&k1, A31), (&k2, A32)]))?;
        let k4 = rhs.eval(&stage(&y, &[(&k1, A41), (&k2, A42), (&k3, A43)]))?;
        let k5 = rhs.eval(&stage(&y, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]))?;
        let k6 = rhs.eval(&stage(
            &y,
            &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)],
        ))?;
        let y_new = stage(&y, &[(&k1, B1), (&k3, B3), (&k4, B4), (&k5, B5), (&k6, B6)]);
        let k7 = rhs.eval(&y_new)?;

        let mut err = 0.0f64;
        for i in 0..D {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol[i] + cfg.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }

        let fac_err = err.powf(expo);
        if err <= 1.0 {
            for i in 0..D {
                let limit = -POSITIVITY_SLACK * atol[i];
                if y_new[i] < limit {
                    return Err(Error::PositivityViolation {
                        t: t + h,
                        component: i,
                        value: y_new[i],
                        limit,
                    });
                }
            }

            let dense = dense_step(t, h, &y, &y_new, [&k1, &k3, &k4, &k5, &k6, &k7]);
            for ev in events {
                if !ev.reached(y[ev.component]) && ev.reached(y_new[ev.component]) {
                    traj.events.push(EventRecord {
                        time: locate(&dense, ev),
                        spec: *ev,
                    });
                }
            }

            t = if last_step { cfg.t_max } else { t + h };
            y = y_new;
            k1 = k7;
            traj.times.push(t);
            traj.states.push(y);
            traj.steps.push(dense);

            let mut fac = fac_err / err_old.powf(BETA) / SAFETY;
            fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);
            last_rejected = false;
            h = h_new.min(cfg.h_max);
        } else {
            traj.rejected_steps += 1;
            last_rejected = true;
            let fac = (fac_err / SAFETY).min(1.0 / FAC_MIN);
            h /= if fac.is_finite() { fac } else { 1.0 / FAC_MIN };
            if h < MIN_STEP {
                return Err(Error::StepSizeUnderflow { t, h });
            }
        }
    }
    Ok(traj)
}

fn dense_step<const D: usize>(
    t0: f64,
    h: f64,
    y0: &[f64; D],
    y1: &[f64; D],
    [k1, k3, k4, k5, k6, k7]: [&[f64; D]; 6],
) -> DenseStep<D> {
    let mut coeffs = [[0.0; D]; 5];
    for i in 0..D {
        let diff = y1[i] - y0[i];
        let bspl = h * k1[i] - diff;
        coeffs[0][i] = y0[i];
        coeffs[1][i] = diff;
        coeffs[2][i] = bspl;
        coeffs[3][i] = diff - h * k7[i] - bspl;
        coeffs[4][i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    DenseStep { t0, h, coeffs }
}

/// Bisection on the interpolant for the first time the event condition holds.
fn locate<const D: usize>(step: &DenseStep<D>, ev: &EventSpec) -> f64 {
    let mut lo = step.t0;
    let mut hi = step.t1();
    while hi - lo > EVENT_TIME_TOL {
        let mid = 0.5 * (lo + hi);
        if ev.reached(step.eval_component(mid, ev.component)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Hairer–Nørsett–Wanner starting step heuristic.
fn initial_step<const D: usize, F: VectorField<D> + ?Sized>(
    rhs: &F,
    y0: &[f64; D],
    f0: &[f64; D],
    cfg: &SolverConfig,
    atol: &[f64; D],
) -> Result<f64> {
    let sc: [f64; D] = std::array::from_fn(|i| atol[i] + cfg.rtol * y0[i].abs());
    let norm = |v: &[f64; D]| {
        (v.iter().zip(&sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / D as f64).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(cfg.h_max).min(cfg.t_max);
    let y1: [f64; D] = std::array::from_fn(|i| y0[i] + h0 * f0[i]);
    let f1 = rhs.eval(&y1)?;
    let diff: [f64; D] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(cfg.h_max).max(MIN_STEP))
}

/// Earliest time at which the event condition holds, or `None` if it never
/// does on the stored horizon. Returns 0 when the initial state already
/// satisfies it.
pub fn first_crossing<const D: usize>(traj: &Trajectory<D>, ev: &EventSpec) -> Option<f64> {
    if ev.component >= D {
        return None;
    }
    if ev.reached(traj.initial()[ev.component]) {
        return Some(0.0);
    }
    for (i, step) in traj.steps.iter().enumerate() {
        let start = traj.states[i][ev.component];
        let end = traj.states[i + 1][ev.component];
        if !ev.reached(start) && ev.reached(end) {
            return Some(locate(step, ev));
        }
    }
    None
}
