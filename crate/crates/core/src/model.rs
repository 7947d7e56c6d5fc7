//! Parameter and state types and the vector fields of the three-compartment
//! (healthy, infected, virus) and latent four-compartment models.
//!
//! Antiretroviral therapy is folded into both fields through [`Efficacy`]:
//! reverse-transcriptase inhibition scales the infectivity `k` by `1 - rt`,
//! protease inhibition scales the burst size `N` by `1 - pi`. With zero
//! efficacy the untreated models are recovered exactly.
//!
//! The latent compartment is cleared at rate `d_l * L`; the steady states and
//! Lyapunov functions depend on that form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate constants shared by both models (per-ml densities, days).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreParams {
    /// Recruitment of healthy CD4+ T-cells, cells ml⁻¹ day⁻¹.
    pub lambda: f64,
    /// Death rate of healthy cells, day⁻¹.
    pub d_t: f64,
    /// Death rate of productively infected cells, day⁻¹.
    pub d_i: f64,
    /// Virion clearance rate, day⁻¹.
    pub d_v: f64,
    /// Infection rate, ml day⁻¹.
    pub k: f64,
    /// Burst size, virions per infected cell.
    pub n: f64,
}

impl CoreParams {
    pub const fn table1() -> Self {
        CoreParams {
            lambda: 1.0e4,
            d_t: 0.01,
            d_i: 1.0,
            d_v: 23.0,
            k: 2.4e-8,
            n: 2000.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("lambda", self.lambda),
            ("d_t", self.d_t),
            ("d_i", self.d_i),
            ("d_v", self.d_v),
            ("k", self.k),
            ("n", self.n),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if self.n < 1.0 {
            return Err(Error::param("n", format!("burst size must be >= 1, got {}", self.n)));
        }
        Ok(())
    }

    /// Healthy-cell density of the infection-free steady state, `lambda / d_t`.
    pub fn healthy_steady_state(&self) -> f64 {
        self.lambda / self.d_t
    }

    /// Copy with `k` and `N` replaced by their therapy-scaled values.
    ///
    /// The result may have `k = 0` or `N < 1` and is not re-validated.
    pub fn effective(&self, eff: &Efficacy) -> CoreParams {
        CoreParams {
            k: self.k * (1.0 - eff.rt),
            n: self.n * (1.0 - eff.pi),
            ..*self
        }
    }
}

impl Default for CoreParams {
    fn default() -> Self {
        Self::table1()
    }
}

/// Parameters of the latent-infection model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentParams {
    pub core: CoreParams,
    /// Fraction of infections that produce a latently infected cell.
    pub p: f64,
    /// Activation rate of latent cells, day⁻¹.
    pub alpha: f64,
    /// Death rate of latent cells, day⁻¹.
    pub d_l: f64,
}

impl LatentParams {
    pub const fn table1() -> Self {
        LatentParams {
            core: CoreParams::table1(),
            p: 0.1,
            alpha: 0.01,
            d_l: 4.0e-3,
        }
    }

    /// `p = 0` is accepted: the model then reduces to the three-compartment one.
    pub fn validate(&self) -> Result<()> {
        self.core.validate()?;
        if !(self.p.is_finite() && (0.0..1.0).contains(&self.p)) {
            return Err(Error::param("p", format!("must lie in [0, 1), got {}", self.p)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::param("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if !(self.d_l.is_finite() && self.d_l >= 0.0) {
            return Err(Error::param("d_l", format!("must be >= 0, got {}", self.d_l)));
        }
        if self.alpha + self.d_l <= 0.0 {
            return Err(Error::param("alpha", "alpha + d_l must be > 0"));
        }
        Ok(())
    }

    pub fn effective(&self, eff: &Efficacy) -> LatentParams {
        LatentParams {
            core: self.core.effective(eff),
            ..*self
        }
    }

    /// Total exit rate from the latent pool, `alpha + d_l`.
    pub fn latent_exit(&self) -> f64 {
        self.alpha + self.d_l
    }
}

impl Default for LatentParams {
    fn default() -> Self {
        Self::table1()
    }
}

/// Drug efficacies of reverse-transcriptase (`rt`) and protease (`pi`) inhibitors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Efficacy {
    pub rt: f64,
    pub pi: f64,
}

impl Efficacy {
    pub const NONE: Efficacy = Efficacy { rt: 0.0, pi: 0.0 };

    pub fn new(rt: f64, pi: f64) -> Result<Self> {
        let eff = Efficacy { rt, pi };
        eff.validate()?;
        Ok(eff)
    }

    pub fn protease_only(pi: f64) -> Result<Self> {
        Self::new(0.0, pi)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("efficacy.rt", self.rt), ("efficacy.pi", self.pi)] {
            if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {value}")));
            }
        }
        Ok(())
    }

    /// Combined efficacy `rt + pi - rt * pi`, i.e. `1 - (1 - rt)(1 - pi)`.
    pub fn combined(&self) -> f64 {
        self.rt + self.pi - self.rt * self.pi
    }
}

/// Three-compartment state: healthy cells, infected cells, free virus.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State3 {
    pub healthy: f64,
    pub infected: f64,
    pub virus: f64,
}

/// Latent-model state: healthy, productively infected, latent, free virus.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State4 {
    pub healthy: f64,
    pub infected: f64,
    pub latent: f64,
    pub virus: f64,
}

impl State3 {
    pub const fn new(healthy: f64, infected: f64, virus: f64) -> Self {
        State3 {
            healthy,
            infected,
            virus,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.healthy, self.infected, self.virus]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        State3::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

impl State4 {
    pub const fn new(healthy: f64, infected: f64, latent: f64, virus: f64) -> Self {
        State4 {
            healthy,
            infected,
            latent,
            virus,
        }
    }

    /// Initial populations used throughout: 4×10⁵ healthy cells, 10⁵ virions.
    pub const fn default_initials() -> Self {
        State4::new(4.0e5, 0.0, 0.0, 1.0e5)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.healthy, self.infected, self.latent, self.virus]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        State4::new(a[0], a[1], a[2], a[3])
    }

    /// Drops the latent component.
    pub fn without_latent(self) -> State3 {
        State3::new(self.healthy, self.infected, self.virus)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Combined efficacy of an [`Efficacy`] pair.
pub fn combined_efficacy(eff: &Efficacy) -> f64 {
    eff.combined()
}

/// Therapy-scaled copy of the core parameters.
pub fn effective_params(core: &CoreParams, eff: &Efficacy) -> CoreParams {
    core.effective(eff)
}

/// Time derivative of the three-compartment model under therapy.
pub fn rhs_3cm(core: &CoreParams, eff: &Efficacy, s: &State3) -> Result<State3> {
    if !s.is_finite() {
        return Err(Error::InvalidState(format!("non-finite state {s:?}")));
    }
    let k = core.k * (1.0 - eff.rt);
    let n = core.n * (1.0 - eff.pi);
    let infection = k * s.healthy * s.virus;
    Ok(State3 {
        healthy: core.lambda - core.d_t * s.healthy - infection,
        infected: infection - core.d_i * s.infected,
        virus: n * core.d_i * s.infected - core.d_v * s.virus,
    })
}

/// Time derivative of the latent four-compartment model under therapy.
pub fn rhs_4cm(lp: &LatentParams, eff: &Efficacy, s: &State4) -> Result<State4> {
    if !s.is_finite() {
        return Err(Error::InvalidState(format!("non-finite state {s:?}")));
    }
    let c = &lp.core;
    let k = c.k * (1.0 - eff.rt);
    let n = c.n * (1.0 - eff.pi);
    let infection = k * s.healthy * s.virus;
    Ok(State4 {
        healthy: c.lambda - c.d_t * s.healthy - infection,
        infected: (1.0 - lp.p) * infection + lp.alpha * s.latent - c.d_i * s.infected,
        latent: lp.p * infection - (lp.alpha + lp.d_l) * s.latent,
        virus: n * c.d_i * s.infected - c.d_v * s.virus,
    })
}

/// A vector field on `R^D`, evaluated by the integrator.
pub trait VectorField<const D: usize> {
    fn eval(&self, y: &[f64; D]) -> Result<[f64; D]>;
}

/// Three-compartment model with fixed therapy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeCompartment {
    pub params: CoreParams,
    pub efficacy: Efficacy,
}

/// Latent-infection model with fixed therapy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentModel {
    pub params: LatentParams,
    pub efficacy: Efficacy,
}

impl VectorField<3> for ThreeCompartment {
    fn eval(&self, y: &[f64; 3]) -> Result<[f64; 3]> {
        rhs_3cm(&self.params, &self.efficacy, &State3::from_array(*y)).map(State3::to_array)
    }
}

impl VectorField<4> for LatentModel {
    fn eval(&self, y: &[f64; 4]) -> Result<[f64; 4]> {
        rhs_4cm(&self.params, &self.efficacy, &State4::from_array(*y)).map(State4::to_array)
    }
}

impl<const D: usize, F> VectorField<D> for F
where
    F: Fn(&[f64; D]) -> [f64; D],
{
    fn eval(&self, y: &[f64; D]) -> Result<[f64; D]> {
        Ok(self(y))
    }
}
