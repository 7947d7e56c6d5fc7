//! Time needed under protease-inhibitor therapy for the viral load to fall
//! below `10⁻ⁿ` copies/ml, as a function of the treated reproduction number.
//!
//! `P_n(r)` uses the three-compartment model, `Q_n(r)` the latent model. The
//! therapy efficacy is chosen so that the treated reproduction number of the
//! respective model equals `r`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::error::{Error, Result};
use crate::integrator::{first_crossing, integrate, EventSpec, SolverConfig};
use crate::model::{CoreParams, Efficacy, LatentModel, LatentParams, State3, State4, ThreeCompartment};

/// Horizon after which a metric is reported as infinite.
pub const DEFAULT_T_MAX: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    ThreeComponent,
    Latent,
}

impl Model {
    pub fn dim(self) -> usize {
        match self {
            Model::ThreeComponent => 3,
            Model::Latent => 4,
        }
    }

    /// Solver defaults for this model.
    pub fn solver(self, t_max: f64) -> SolverConfig {
        match self {
            Model::ThreeComponent => SolverConfig::three_component(t_max),
            Model::Latent => SolverConfig::latent(t_max),
        }
    }

    /// Reproduction number without therapy.
    pub fn untreated_ratio(self, lp: &LatentParams) -> f64 {
        match self {
            Model::ThreeComponent => analysis::r0(&lp.core, &Efficacy::NONE),
            Model::Latent => analysis::r_l(lp, &Efficacy::NONE),
        }
    }

    pub fn treated_ratio(self, lp: &LatentParams, eff: &Efficacy) -> f64 {
        match self {
            Model::ThreeComponent => analysis::r0(&lp.core, eff),
            Model::Latent => analysis::r_l(lp, eff),
        }
    }
}

/// `P` for the three-compartment model, `Q` for the latent model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    P,
    Q,
}

impl Metric {
    pub fn model(self) -> Model {
        match self {
            Metric::P => Model::ThreeComponent,
            Metric::Q => Model::Latent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Days until the first crossing; `None` when it does not happen before `t_max`.
    pub time: Option<f64>,
    pub epsilon_used: f64,
    pub r_achieved: f64,
    /// Largest dip below zero over the run, in units of the component's `atol`.
    pub worst_undershoot: f64,
}

impl ThresholdResult {
    pub fn is_infinite(&self) -> bool {
        self.time.is_none()
    }

    /// Time in days with `f64::INFINITY` standing for no crossing.
    pub fn days(&self) -> f64 {
        self.time.unwrap_or(f64::INFINITY)
    }
}

/// Protease-inhibitor efficacy `ε = 1 - r/R` that brings the model's
/// reproduction number down to `r`.
pub fn efficacy_for_ratio(model: Model, lp: &LatentParams, r: f64) -> Result<f64> {
    let untreated = model.untreated_ratio(lp);
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("target ratio must be > 0, got {r}")));
    }
    if r > untreated {
        return Err(Error::Domain(format!(
            "target ratio {r} exceeds the untreated value {untreated}"
        )));
    }
    Ok(1.0 - r / untreated)
}

fn threshold_event(n: u32, component: usize) -> Result<EventSpec> {
    if n == 0 {
        return Err(Error::param("n", "must be a positive integer"));
    }
    Ok(EventSpec::downward(component, 10f64.powi(-(n as i32))))
}

/// `P_n(r)` for the three-compartment model.
pub fn p_n(core: &CoreParams, init: &State3, n: u32, r: f64, solver: &SolverConfig) -> Result<ThresholdResult> {
    core.validate()?;
    solver.validate(3)?;
    let lp = LatentParams {
        core: *core,
        p: 0.0,
        alpha: 0.0,
        d_l: 1.0,
    };
    let eps = efficacy_for_ratio(Model::ThreeComponent, &lp, r)?;
    let eff = Efficacy::protease_only(eps)?;
    let ev = threshold_event(n, 2)?;
    let model = ThreeCompartment {
        params: *core,
        efficacy: eff,
    };
    let traj = integrate(&model, init.to_array(), solver, &[ev])?;
    Ok(ThresholdResult {
        time: first_crossing(&traj, &ev),
        epsilon_used: eps,
        r_achieved: analysis::r0(core, &eff),
        worst_undershoot: traj.worst_undershoot(),
    })
}

/// `Q_n(r)` for the latent model.
pub fn q_n(lp: &LatentParams, init: &State4, n: u32, r: f64, solver: &SolverConfig) -> Result<ThresholdResult> {
    lp.validate()?;
    solver.validate(4)?;
    let eps = efficacy_for_ratio(Model::Latent, lp, r)?;
    let eff = Efficacy::protease_only(eps)?;
    let ev = threshold_event(n, 3)?;
    let model = LatentModel {
        params: *lp,
        efficacy: eff,
    };
    let traj = integrate(&model, init.to_array(), solver, &[ev])?;
    Ok(ThresholdResult {
        time: first_crossing(&traj, &ev),
        epsilon_used: eps,
        r_achieved: analysis::r_l(lp, &eff),
        worst_undershoot: traj.worst_undershoot(),
    })
}

/// Evaluates the metric for the given model at one ratio.
pub fn evaluate(
    metric: Metric,
    n: u32,
    r: f64,
    lp: &LatentParams,
    init: &State4,
    solver: &SolverConfig,
) -> Result<ThresholdResult> {
    match metric {
        Metric::P => p_n(&lp.core, &init.without_latent(), n, r, solver),
        Metric::Q => q_n(lp, init, n, r, solver),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub outcome: std::result::Result<ThresholdResult, String>,
}

/// Evaluates the metric at every grid point, in parallel, keeping grid order.
/// A failing point is recorded and does not stop the others. `jobs` bounds
/// the number of worker threads; `None` uses all available cores.
pub fn sweep(
    metric: Metric,
    n: u32,
    grid: &[f64],
    lp: &LatentParams,
    init: &State4,
    solver: &SolverConfig,
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>> {
    solver.validate(metric.model().dim())?;
    let run = || {
        grid.par_iter()
            .map(|&r| SweepRow {
                r,
                outcome: evaluate(metric, n, r, lp, init, solver).map_err(|e| e.to_string()),
            })
            .collect()
    };
    match jobs {
        None => Ok(run()),
        Some(0) => Err(Error::param("jobs", "must be at least 1")),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(run))
        }
    }
}
