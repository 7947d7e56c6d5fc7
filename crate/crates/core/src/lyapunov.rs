//! Lyapunov functions of the latent model and their derivatives along
//! trajectories, used to check global stability numerically.
//!
//! Both functions are Volterra-type sums with weights `(1-p)d_L + α` on the
//! healthy cells, `d_L + α` on infected cells and virus (virus divided by the
//! burst size) and `α` on latent cells. Therapy enters through the scaled
//! `k` and `N`.
//!
//! The endemic rate is evaluated in its AM–GM form, where every bracket is
//! nonpositive for positive states. The healthy-cell bracket carries the
//! weight `(1-p)d_L + α`; that is what makes the closed form equal to ∇U·f.

use serde::{Deserialize, Serialize};

use crate::analysis::{self, EquilibriumKind};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::model::{rhs_4cm, Efficacy, LatentParams, State4};

/// Smallest component value accepted where logarithms are taken.
pub const LOG_FLOOR: f64 = 1e-300;

/// `x - 1 - ln x`, accurate near `x = 1`.
pub fn log_gap(x: f64) -> f64 {
    let y = x - 1.0;
    if y.abs() < 1e-2 {
        // y²/2 - y³/3 + y⁴/4 - ...
        let mut sum = 0.0;
        let mut term = y;
        for k in 2..=12 {
            term *= -y;
            sum -= term / k as f64;
        }
        sum
    } else {
        y - x.ln()
    }
}

struct Weights {
    healthy: f64,
    infected: f64,
    latent: f64,
    burst: f64,
}

fn weights(lp: &LatentParams, eff: &Efficacy) -> Result<Weights> {
    let burst = lp.core.n * (1.0 - eff.pi);
    if burst <= 0.0 {
        return Err(Error::Domain("burst size is zero under full protease inhibition".into()));
    }
    Ok(Weights {
        healthy: (1.0 - lp.p) * lp.d_l + lp.alpha,
        infected: lp.latent_exit(),
        latent: lp.alpha,
        burst,
    })
}

fn check_healthy(s: &State4) -> Result<()> {
    if !(s.healthy > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("healthy cells must be > 0, got {}", s.healthy)));
    }
    Ok(())
}

/// Lyapunov function for the infection-free steady state.
pub fn u_noninfective(lp: &LatentParams, eff: &Efficacy, s: &State4) -> Result<f64> {
    check_healthy(s)?;
    let w = weights(lp, eff)?;
    let t0 = lp.core.healthy_steady_state();
    Ok(w.healthy * t0 * log_gap(s.healthy / t0)
        + w.infected * (s.infected + s.virus / w.burst)
        + w.latent * s.latent)
}

/// Closed-form time derivative of [`u_noninfective`] along the flow.
pub fn u_noninfective_rate(lp: &LatentParams, eff: &Efficacy, s: &State4) -> Result<f64> {
    check_healthy(s)?;
    let w = weights(lp, eff)?;
    let c = &lp.core;
    let rl = analysis::r_l(lp, eff);
    let deficit = c.lambda - c.d_t * s.healthy;
    Ok(-w.healthy / (c.d_t * s.healthy) * deficit * deficit
        + w.infected * c.d_v / w.burst * (rl - 1.0) * s.virus)
}

/// Gradient of [`u_noninfective`] with respect to (T, I, L, V).
pub fn u_noninfective_gradient(lp: &LatentParams, eff: &Efficacy, s: &State4) -> Result<[f64; 4]> {
    check_healthy(s)?;
    let w = weights(lp, eff)?;
    let t0 = lp.core.healthy_steady_state();
    Ok([
        w.healthy * (1.0 - t0 / s.healthy),
        w.infected,
        w.latent,
        w.infected / w.burst,
    ])
}

fn endemic_reference(lp: &LatentParams, eff: &Efficacy, s: &State4) -> Result<(State4, f64)> {
    let rl = analysis::r_l(lp, eff);
    let star = analysis::endemic_state_4cm(lp, eff).ok_or(Error::EndemicAbsent { r: rl })?;
    if star.latent <= 0.0 {
        return Err(Error::Domain("latent steady state is zero (p = 0)".into()));
    }
    if !s.is_finite() || s.to_array().iter().any(|&x| x < LOG_FLOOR) {
        return Err(Error::Domain(format!(
            "all components must exceed {LOG_FLOOR:e}, got {s:?}"
        )));
    }
    Ok((star, rl))
}

/// Lyapunov function for the endemic steady state. Requires `R_L > 1` and a
/// strictly positive state.
pub fn u_endemic(lp: &LatentParams, eff: &Efficacy, s: &State4) -> Result<f64> {
    let (star, _) = endemic_reference(lp, eff, s)?;
    let w = weights(lp, eff)?;
    let g = |x: f64, xs: f64| xs * log_gap(x / xs);
    Ok(w.healthy * g(s.healthy, star.healthy)
        + w.infected * (g(s.infected, star.infected) + g(s.virus, star.virus) / w.burst)
        + w.latent * g(s.latent, star.latent))
}

/// Closed-form time derivative of [`u_endemic`], written as a sum of
/// arithmetic-minus-geometric-mean brackets.
pub fn u_endemic_rate(lp: &LatentParams, eff: &Efficacy, s: &State4) -> Result<f64> {
    let (star, rl) = endemic_reference(lp, eff, s)?;
    let w = weights(lp, eff)?;
    let c = &lp.core;
    let exit = lp.latent_exit();
    let p = lp.p;

    let tr = star.healthy / s.healthy;
    let tvi = (s.healthy * s.virus * star.infected) / (star.healthy * star.virus * s.infected);
    let iv = (s.infected * star.virus) / (star.infected * s.virus);
    let tvl = (s.healthy * s.virus * star.latent) / (star.healthy * star.virus * s.latent);
    let li = (s.latent * star.infected) / (star.latent * s.infected);

    // L*/p without dividing by p
    let latent_over_p = c.lambda * (rl - 1.0) / (rl * exit);
    let healthy_term = w.healthy * c.d_t * star.healthy * (2.0 - 1.0 / tr - tr);
    let reservoir_term = exit
        * latent_over_p
        * ((1.0 - p) * exit * (3.0 - tr - tvi - iv) + lp.alpha * p * (4.0 - tr - tvl - li - iv));
    Ok(healthy_term + reservoir_term)
}

/// Gradient of [`u_endemic`] with respect to (T, I, L, V).
pub fn u_endemic_gradient(lp: &LatentParams, eff: &Efficacy, s: &State4) -> Result<[f64; 4]> {
    let (star, _) = endemic_reference(lp, eff, s)?;
    let w = weights(lp, eff)?;
    Ok([
        w.healthy * (1.0 - star.healthy / s.healthy),
        w.infected * (1.0 - star.infected / s.infected),
        w.latent * (1.0 - star.latent / s.latent),
        w.infected / w.burst * (1.0 - star.virus / s.virus),
    ])
}

/// `U`, its closed-form rate and `∇U·f` for the chosen reference equilibrium.
pub fn evaluate(
    lp: &LatentParams,
    eff: &Efficacy,
    which: EquilibriumKind,
    s: &State4,
) -> Result<(f64, f64, f64)> {
    let (u, rate, grad) = match which {
        EquilibriumKind::NonInfective => (
            u_noninfective(lp, eff, s)?,
            u_noninfective_rate(lp, eff, s)?,
            u_noninfective_gradient(lp, eff, s)?,
        ),
        EquilibriumKind::Endemic => (
            u_endemic(lp, eff, s)?,
            u_endemic_rate(lp, eff, s)?,
            u_endemic_gradient(lp, eff, s)?,
        ),
    };
    let f = rhs_4cm(lp, eff, s)?.to_array();
    let chain = grad.iter().zip(f).map(|(g, fi)| g * fi).sum();
    Ok((u, rate, chain))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub t: f64,
    pub u: f64,
    pub du_dt_analytic: f64,
    pub du_dt_chainrule: f64,
    /// Difference quotient of `U` between neighbouring samples.
    pub du_dt_fd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentReport {
    pub which: EquilibriumKind,
    pub samples: Vec<LyapunovSample>,
    pub max_rate_analytic: f64,
    pub max_rate_fd: f64,
    pub max_u: f64,
    /// Allowed positive rate, `1e-6 · max|U|` per day.
    pub tolerance: f64,
    /// Samples on the boundary of the positive orthant where `U` is undefined.
    pub skipped: usize,
    pub passed: bool,
}

/// Relative slack on the descent check.
pub const DESCENT_TOL: f64 = 1e-6;

/// Evaluates `U` at every stored trajectory state and checks that it does not
/// increase, by both the closed-form rate and finite differences.
pub fn verify_descent(
    lp: &LatentParams,
    eff: &Efficacy,
    traj: &Trajectory<4>,
    which: EquilibriumKind,
) -> Result<DescentReport> {
    if which == EquilibriumKind::Endemic {
        let rl = analysis::r_l(lp, eff);
        if !analysis::above_threshold(rl) {
            return Err(Error::EndemicAbsent { r: rl });
        }
    }

    let mut pts: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(traj.times.len());
    let mut skipped = 0;
    for (&t, y) in traj.times.iter().zip(&traj.states) {
        let s = State4::from_array(*y);
        let on_boundary = match which {
            EquilibriumKind::NonInfective => s.healthy <= 0.0,
            EquilibriumKind::Endemic => y.iter().any(|&x| x < LOG_FLOOR),
        };
        if on_boundary {
            skipped += 1;
            continue;
        }
        let (u, rate, chain) = evaluate(lp, eff, which, &s)?;
        pts.push((t, u, rate, chain));
    }

    let n = pts.len();
    let samples: Vec<LyapunovSample> = (0..n)
        .map(|i| {
            let (t, u, rate, chain) = pts[i];
            let fd = if n < 2 {
                0.0
            } else {
                let (a, b) = if i == 0 {
                    (0, 1)
                } else if i == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (i - 1, i + 1)
                };
                (pts[b].1 - pts[a].1) / (pts[b].0 - pts[a].0)
            };
            LyapunovSample {
                t,
                u,
                du_dt_analytic: rate,
                du_dt_chainrule: chain,
                du_dt_fd: fd,
            }
        })
        .collect();

    let max_u = samples.iter().map(|s| s.u.abs()).fold(0.0, f64::max);
    let max_rate_analytic = samples
        .iter()
        .map(|s| s.du_dt_analytic)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_rate_fd = samples
        .iter()
        .map(|s| s.du_dt_fd)
        .fold(f64::NEG_INFINITY, f64::max);
    let tolerance = DESCENT_TOL * max_u;
    let passed = samples.is_empty()
        || (max_rate_analytic <= tolerance && max_rate_fd <= tolerance);
    Ok(DescentReport {
        which,
        samples,
        max_rate_analytic,
        max_rate_fd,
        max_u,
        tolerance,
        skipped,
        passed,
    })
}
