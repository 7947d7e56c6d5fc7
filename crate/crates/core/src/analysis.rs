//! Closed-form reproduction numbers, steady states and viral-setpoint
//! sensitivities for both models, with and without therapy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoreParams, Efficacy, LatentParams, State3, State4};

/// `|R - 1|` at or below this is treated as the bifurcation point itself.
pub const BIFURCATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    NonInfective,
    Endemic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium3 {
    pub kind: EquilibriumKind,
    pub state: State3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium4 {
    pub kind: EquilibriumKind,
    pub state: State4,
}

/// Partial derivatives of the treated endemic viral load with respect to the
/// two drug efficacies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetpointSensitivity {
    pub dv_d_eps_rt: f64,
    pub dv_d_eps_pi: f64,
}

/// Whether `r` lies strictly above 1, beyond the bifurcation tolerance.
pub fn above_threshold(r: f64) -> bool {
    r > 1.0 + BIFURCATION_TOL
}

pub fn at_threshold(r: f64) -> bool {
    (r - 1.0).abs() <= BIFURCATION_TOL
}

/// Basic reproduction number of the three-compartment model, `kN(1-ε)λ / (d_T d_V)`.
pub fn r0(core: &CoreParams, eff: &Efficacy) -> f64 {
    core.k * core.n * (1.0 - eff.combined()) * core.lambda / (core.d_t * core.d_v)
}

/// Ratio of the latent-model reproduction number to the three-compartment one.
pub fn q_ratio(lp: &LatentParams) -> f64 {
    ((1.0 - lp.p) * lp.d_l + lp.alpha) / (lp.d_l + lp.alpha)
}

/// The same ratio written as `1 - p d_L / (d_L + α)`.
pub fn q_ratio_deficit_form(lp: &LatentParams) -> f64 {
    1.0 - lp.p * lp.d_l / (lp.d_l + lp.alpha)
}

/// Basic reproduction number of the latent model.
pub fn r_l(lp: &LatentParams, eff: &Efficacy) -> f64 {
    q_ratio(lp) * r0(&lp.core, eff)
}

/// Steady states of the three-compartment model. The infection-free state is
/// always first; the endemic state follows only when `R0 > 1`.
pub fn equilibria_3cm(core: &CoreParams, eff: &Efficacy) -> Vec<Equilibrium3> {
    let t0 = core.healthy_steady_state();
    let mut out = vec![Equilibrium3 {
        kind: EquilibriumKind::NonInfective,
        state: State3::new(t0, 0.0, 0.0),
    }];
    let r = r0(core, eff);
    if above_threshold(r) {
        let e = core.effective(eff);
        out.push(Equilibrium3 {
            kind: EquilibriumKind::Endemic,
            state: State3::new(
                core.lambda / (core.d_t * r),
                core.d_t * core.d_v * (r - 1.0) / (e.k * e.n * core.d_i),
                core.d_t * (r - 1.0) / e.k,
            ),
        });
    }
    out
}

/// Steady states of the latent model; endemic state present only when `R_L > 1`.
pub fn equilibria_4cm(lp: &LatentParams, eff: &Efficacy) -> Vec<Equilibrium4> {
    let c = &lp.core;
    let mut out = vec![Equilibrium4 {
        kind: EquilibriumKind::NonInfective,
        state: State4::new(c.healthy_steady_state(), 0.0, 0.0, 0.0),
    }];
    if let Some(state) = endemic_state_4cm(lp, eff) {
        out.push(Equilibrium4 {
            kind: EquilibriumKind::Endemic,
            state,
        });
    }
    out
}

/// Smallest combined efficacy that brings an untreated reproduction number
/// `r` down to 1; zero when `r <= 1` already.
pub fn critical_efficacy(r: f64) -> f64 {
    if r > 1.0 {
        1.0 - 1.0 / r
    } else {
        0.0
    }
}

/// The endemic steady state of the latent model, if it exists.
pub fn endemic_state_4cm(lp: &LatentParams, eff: &Efficacy) -> Option<State4> {
    let c = &lp.core;
    let r = r_l(lp, eff);
    if !above_threshold(r) {
        return None;
    }
    let e = c.effective(eff);
    Some(State4::new(
        c.lambda / (c.d_t * r),
        c.d_t * c.d_v * (r - 1.0) / (e.k * e.n * c.d_i),
        lp.p * c.lambda * (r - 1.0) / (r * lp.latent_exit()),
        c.d_t * (r - 1.0) / e.k,
    ))
}

/// Treated endemic viral load written in terms of the untreated `R_L`:
/// `(d_T R_L / k)(1 - ε_PI) - d_T / (k (1 - ε_RT))`.
pub fn setpoint_viral_load(lp: &LatentParams, eff: &Efficacy) -> Result<f64> {
    if eff.rt >= 1.0 {
        return Err(Error::Singular);
    }
    let c = &lp.core;
    let rl = r_l(lp, &Efficacy::NONE);
    Ok(c.d_t * rl / c.k * (1.0 - eff.pi) - c.d_t / (c.k * (1.0 - eff.rt)))
}

pub fn setpoint_sensitivity(lp: &LatentParams, eff: &Efficacy) -> Result<SetpointSensitivity> {
    if eff.rt >= 1.0 {
        return Err(Error::Singular);
    }
    let c = &lp.core;
    let rl = r_l(lp, &Efficacy::NONE);
    let one_minus = 1.0 - eff.rt;
    Ok(SetpointSensitivity {
        dv_d_eps_rt: -c.d_t / (c.k * one_minus * one_minus),
        dv_d_eps_pi: -c.d_t * rl / c.k,
    })
}
