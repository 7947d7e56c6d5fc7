//! Scenario configuration, named presets, run reports and CSV/JSON output.
//!
//! A scenario is one JSON document with the fields `model`, `params`,
//! `efficacy`, `initials`, `solver` and `output`. Layers are applied in order:
//! a scenario preset, an optional config file, then `key=value` overrides with
//! dotted keys. `params` and `initials` may also be given as preset names.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analysis::{self, EquilibriumKind};
use crate::eigen::EigenSpectrum;
use crate::error::{Error, Result};
use crate::integrator::{integrate, EventRecord, EventSpec, SolverConfig, Trajectory};
use crate::lyapunov::{self, DescentReport};
use crate::model::{
    CoreParams, Efficacy, LatentModel, LatentParams, State3, State4, ThreeCompartment,
};
use crate::stability::{self, StabilityReport, Verdict};
use crate::thresholds::{Model, SweepRow};

/// Default number of output samples for trajectories.
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    pub lambda: f64,
    #[serde(rename = "d_T")]
    pub d_t: f64,
    #[serde(rename = "d_I")]
    pub d_i: f64,
    #[serde(rename = "d_V")]
    pub d_v: f64,
    pub k: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub p: f64,
    pub alpha: f64,
    #[serde(rename = "d_L")]
    pub d_l: f64,
}

impl ParamSet {
    pub fn latent(&self) -> LatentParams {
        LatentParams {
            core: CoreParams {
                lambda: self.lambda,
                d_t: self.d_t,
                d_i: self.d_i,
                d_v: self.d_v,
                k: self.k,
                n: self.n,
            },
            p: self.p,
            alpha: self.alpha,
            d_l: self.d_l,
        }
    }
}

impl From<LatentParams> for ParamSet {
    fn from(lp: LatentParams) -> Self {
        let c = lp.core;
        ParamSet {
            lambda: c.lambda,
            d_t: c.d_t,
            d_i: c.d_i,
            d_v: c.d_v,
            k: c.k,
            n: c.n,
            p: lp.p,
            alpha: lp.alpha,
            d_l: lp.d_l,
        }
    }
}

/// Population values keyed `T`, `I`, `L`, `V`. `L` is absent for the
/// three-compartment model.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Populations {
    pub T: f64,
    pub I: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub L: Option<f64>,
    pub V: f64,
}

impl Populations {
    pub fn state4(&self) -> State4 {
        State4::new(self.T, self.I, self.L.unwrap_or(0.0), self.V)
    }

    pub fn from_slice(y: &[f64]) -> Self {
        match *y {
            [t, i, v] => Populations { T: t, I: i, L: None, V: v },
            [t, i, l, v] => Populations { T: t, I: i, L: Some(l), V: v },
            _ => panic!("state of dimension {}", y.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub rtol: f64,
    /// Per-component absolute tolerances; model defaults when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub t_max: f64,
}

impl SolverSpec {
    pub fn config(&self, model: Model) -> Result<SolverConfig> {
        self.config_with_horizon(model, self.t_max)
    }

    pub fn config_with_horizon(&self, model: Model, t_max: f64) -> Result<SolverConfig> {
        let mut cfg = model.solver(t_max);
        cfg.rtol = self.rtol;
        cfg.h_init = self.h_init;
        cfg.h_max = self.h_max;
        if let Some(atol) = &self.atol {
            cfg.atol = atol.clone();
        }
        cfg.validate(model.dim())?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// `t = 0` followed by geometrically spaced times up to the horizon.
    Log,
    Linear,
    /// Every accepted integrator step.
    Steps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
    /// Crossings to locate; their times are added to the sample grid.
    #[serde(default)]
    pub events: Vec<EventSpec>,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            samples: DEFAULT_SAMPLES,
            spacing: Spacing::Log,
            events: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: Model,
    pub params: ParamSet,
    pub efficacy: Efficacy,
    pub initials: Populations,
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Scenario {
    pub fn latent_params(&self) -> LatentParams {
        self.params.latent()
    }

    pub fn validate(&self) -> Result<()> {
        self.latent_params().validate()?;
        self.efficacy.validate()?;
        let s = self.initials.state4();
        if !s.is_finite() || s.to_array().iter().any(|&x| x < 0.0) {
            return Err(Error::param("initials", "populations must be finite and >= 0"));
        }
        if self.model == Model::ThreeComponent && self.initials.L.is_some_and(|l| l != 0.0) {
            return Err(Error::param("initials.L", "the three-compartment model has no latent pool"));
        }
        self.solver.config(self.model)?;
        for ev in &self.output.events {
            if ev.component >= self.model.dim() {
                return Err(Error::param("output.events", format!("component {} out of range", ev.component)));
            }
        }
        Ok(())
    }
}

pub struct Preset {
    pub name: &'static str,
    /// Which part of a scenario the preset fills.
    pub kind: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "table1", kind: "scenario, params", description: "reference parameters, latent model, 600 days, no therapy" },
    Preset { name: "wide-reservoir", kind: "params", description: "reference parameters with d_L = 0.24, alpha = 3e-3" },
    Preset { name: "init-default", kind: "initials", description: "T = 4e5, I = 0, L = 0, V = 1e5" },
    Preset { name: "three-compartment", kind: "scenario", description: "three-compartment model, 400 days, no therapy" },
    Preset { name: "latent", kind: "scenario", description: "latent model, 600 days, no therapy" },
    Preset { name: "near-threshold", kind: "scenario", description: "latent model, 6000 days, protease efficacy 0.519" },
    Preset { name: "near-threshold-3c", kind: "scenario", description: "three-compartment model, 6000 days, protease efficacy 0.519" },
];

fn params_preset(name: &str) -> Option<Value> {
    let mut p = ParamSet::from(LatentParams::table1());
    match name {
        "table1" => {}
        "wide-reservoir" => {
            p.d_l = 0.24;
            p.alpha = 3e-3;
        }
        _ => return None,
    }
    Some(serde_json::to_value(p).expect("params serialize"))
}

fn initials_preset(name: &str) -> Option<Value> {
    match name {
        "init-default" => Some(json!({"T": 4.0e5, "I": 0.0, "L": 0.0, "V": 1.0e5})),
        _ => None,
    }
}

/// Full scenario document for a named preset.
pub fn scenario_preset(name: &str) -> Result<Value> {
    let (model, t_max, pi) = match name {
        "table1" | "latent" => ("latent", 600.0, 0.0),
        "three-compartment" => ("three_component", 400.0, 0.0),
        "near-threshold" => ("latent", 6000.0, 0.519),
        "near-threshold-3c" => ("three_component", 6000.0, 0.519),
        _ => {
            return Err(Error::Config(format!(
                "unknown scenario preset `{name}` (try `presets list`)"
            )))
        }
    };
    let mut initials = initials_preset("init-default").expect("built-in preset");
    if model == "three_component" {
        initials.as_object_mut().expect("object").remove("L");
    }
    Ok(json!({
        "model": model,
        "params": params_preset("table1"),
        "efficacy": {"rt": 0.0, "pi": pi},
        "initials": initials,
        "solver": {"rtol": 1e-8, "h_max": 1.0, "t_max": t_max},
        "output": {"samples": DEFAULT_SAMPLES, "spacing": "log", "events": []},
    }))
}

/// Replaces preset names under `params` and `initials` by their values.
fn resolve_names(doc: &mut Value) -> Result<()> {
    let Some(obj) = doc.as_object_mut() else {
        return Ok(());
    };
    for (field, lookup) in [
        ("params", params_preset as fn(&str) -> Option<Value>),
        ("initials", initials_preset),
    ] {
        if let Some(Value::String(name)) = obj.get(field) {
            let v = lookup(name).ok_or_else(|| {
                Error::Config(format!("`{field}`: unknown preset `{name}`"))
            })?;
            obj.insert(field.to_string(), v);
        }
    }
    Ok(())
}

/// Recursive object merge; non-object values in `layer` replace those in `base`.
pub fn deep_merge(base: &mut Value, layer: Value) {
    match (base, layer) {
        (Value::Object(b), Value::Object(l)) => {
            for (k, v) in l {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Turns `a.b.c=value` into `{"a": {"b": {"c": value}}}`. The value is read
/// as JSON when possible and as a plain string otherwise.
pub fn parse_override(arg: &str) -> Result<Value> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{arg}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override `{arg}` has an empty key")));
    }
    let mut value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    for part in key.rsplit('.') {
        let mut m = Map::new();
        m.insert(part.to_string(), value);
        value = Value::Object(m);
    }
    Ok(value)
}

fn parse_config_text(text: &str, origin: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        Error::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
    })
}

/// Builds and validates a scenario from a preset, a config document and
/// overrides.
pub fn build_scenario(preset: Option<&str>, config: Option<(&str, &str)>, overrides: &[String]) -> Result<Scenario> {
    let mut doc = scenario_preset(preset.unwrap_or("table1"))?;
    if let Some((origin, text)) = config {
        let mut layer = parse_config_text(text, origin)?;
        if !layer.is_object() {
            return Err(Error::Config(format!("{origin}: top level must be a JSON object")));
        }
        resolve_names(&mut layer)?;
        deep_merge(&mut doc, layer);
    }
    for o in overrides {
        let mut layer = parse_override(o)?;
        resolve_names(&mut layer)?;
        deep_merge(&mut doc, layer);
    }
    if doc.get("model").and_then(Value::as_str) == Some("three_component") {
        if let Some(init) = doc.get_mut("initials").and_then(Value::as_object_mut) {
            if init.get("L").and_then(Value::as_f64) == Some(0.0) {
                init.remove("L");
            }
        }
    }
    let scenario: Scenario = serde_path_to_error::deserialize(&doc).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("field `{path}`: {}", e.into_inner()))
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// [`build_scenario`] reading the config document from a file.
pub fn load_scenario(preset: Option<&str>, config: Option<&Path>, overrides: &[String]) -> Result<Scenario> {
    match config {
        None => build_scenario(preset, None, overrides),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            build_scenario(preset, Some((&path.display().to_string(), &text)), overrides)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproductionNumbers {
    pub r0: f64,
    /// Serialized as `q · r0`.
    pub r_l: f64,
    pub q: f64,
    pub one_minus_q: f64,
    pub r0_treated: f64,
    pub r_l_treated: f64,
    /// Combined efficacy at which each model crosses 1.
    pub critical_efficacy_three_component: f64,
    pub critical_efficacy_latent: f64,
    /// `p = 0`, where the latent model collapses onto the three-compartment one.
    pub degenerate: bool,
}

impl ReproductionNumbers {
    pub fn compute(lp: &LatentParams, eff: &Efficacy) -> Self {
        let q = analysis::q_ratio(lp);
        let r0 = analysis::r0(&lp.core, &Efficacy::NONE);
        let r0_treated = analysis::r0(&lp.core, eff);
        ReproductionNumbers {
            r0,
            r_l: q * r0,
            q,
            one_minus_q: 1.0 - q,
            r0_treated,
            r_l_treated: q * r0_treated,
            critical_efficacy_three_component: analysis::critical_efficacy(r0),
            critical_efficacy_latent: analysis::critical_efficacy(q * r0),
            degenerate: lp.p == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumEntry {
    pub kind: EquilibriumKind,
    pub state: Populations,
    pub verdict: Verdict,
    pub max_real_part: f64,
    /// Routh–Hurwitz data; latent model only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routh_hurwitz: Option<StabilityReport>,
    pub spectrum: EigenSpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoint {
    pub viral_load: f64,
    pub dv_d_eps_rt: f64,
    pub dv_d_eps_pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub t_end: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub final_state: Populations,
    pub component_minima: Vec<f64>,
    /// Largest dip below zero in units of the component's `atol`.
    pub worst_undershoot: f64,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub combined_efficacy: f64,
    pub reproduction: ReproductionNumbers,
    pub equilibria: Vec<EquilibriumEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setpoint: Option<Setpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSummary>,
}

fn three_component_entry(core: &CoreParams, eff: &Efficacy, kind: EquilibriumKind, s: State3) -> Result<EquilibriumEntry> {
    let spectrum = stability::jacobian_3cm(core, eff, &s).spectrum()?;
    let max_re = spectrum.max_real_part();
    let verdict = if analysis::at_threshold(analysis::r0(core, eff)) {
        Verdict::Marginal
    } else if max_re < 0.0 {
        Verdict::LocallyStable
    } else {
        Verdict::Unstable
    };
    Ok(EquilibriumEntry {
        kind,
        state: Populations::from_slice(&s.to_array()),
        verdict,
        max_real_part: max_re,
        routh_hurwitz: None,
        spectrum,
    })
}

/// Reproduction numbers, equilibria and their stability for a scenario.
pub fn analyze(sc: &Scenario) -> Result<RunReport> {
    let lp = sc.latent_params();
    let eff = sc.efficacy;
    let mut equilibria = Vec::new();
    match sc.model {
        Model::ThreeComponent => {
            for e in analysis::equilibria_3cm(&lp.core, &eff) {
                equilibria.push(three_component_entry(&lp.core, &eff, e.kind, e.state)?);
            }
        }
        Model::Latent => {
            for e in analysis::equilibria_4cm(&lp, &eff) {
                let mut rh = stability::classify_equilibrium(&lp, &eff, e.kind)?;
                let spectrum = rh.spectrum.take().expect("spectrum is always attached");
                equilibria.push(EquilibriumEntry {
                    kind: e.kind,
                    state: Populations::from_slice(&e.state.to_array()),
                    verdict: rh.verdict,
                    max_real_part: spectrum.max_real_part(),
                    routh_hurwitz: Some(rh),
                    spectrum,
                });
            }
        }
    }
    let setpoint = match (
        analysis::setpoint_viral_load(&lp, &eff),
        analysis::setpoint_sensitivity(&lp, &eff),
    ) {
        (Ok(v), Ok(s)) => Some(Setpoint {
            viral_load: v,
            dv_d_eps_rt: s.dv_d_eps_rt,
            dv_d_eps_pi: s.dv_d_eps_pi,
        }),
        _ => None,
    };
    Ok(RunReport {
        scenario: sc.clone(),
        combined_efficacy: eff.combined(),
        reproduction: ReproductionNumbers::compute(&lp, &eff),
        equilibria,
        setpoint,
        simulation: None,
    })
}

/// Sampled trajectory ready for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub summary: SimulationSummary,
}

/// Output times over `[0, t_max]` for the given spacing, merged with `extra`.
pub fn sample_times(t_max: f64, samples: usize, spacing: Spacing, steps: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut ts = vec![0.0];
    if t_max > 0.0 {
        match spacing {
            Spacing::Steps => ts.extend(steps.iter().copied().filter(|&t| t > 0.0)),
            _ if samples < 2 => ts.push(t_max),
            Spacing::Linear => ts.extend((1..samples).map(|i| t_max * i as f64 / (samples - 1) as f64)),
            Spacing::Log => {
                let lo = (t_max * 1e-6).ln();
                let hi = t_max.ln();
                let m = samples - 1;
                ts.extend((0..m).map(|i| {
                    if i + 1 == m {
                        t_max
                    } else {
                        (lo + (hi - lo) * i as f64 / (m - 1).max(1) as f64).exp()
                    }
                }));
            }
        }
    }
    ts.extend(extra.iter().copied().filter(|t| (0.0..=t_max).contains(t)));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn sample<const D: usize>(traj: &Trajectory<D>, out: &OutputSpec) -> (Vec<Vec<f64>>, SimulationSummary) {
    let event_times: Vec<f64> = traj.events.iter().map(|e| e.time).collect();
    let times = sample_times(traj.t_max, out.samples, out.spacing, &traj.times, &event_times);
    let rows = times
        .iter()
        .map(|&t| {
            let mut row = vec![t];
            row.extend_from_slice(&traj.eval(t));
            row
        })
        .collect();
    let summary = SimulationSummary {
        t_end: traj.t_end(),
        accepted_steps: traj.steps.len(),
        rejected_steps: traj.rejected_steps,
        final_state: Populations::from_slice(&traj.last()),
        component_minima: traj.component_minima().to_vec(),
        worst_undershoot: traj.worst_undershoot(),
        events: traj.events.clone(),
    };
    (rows, summary)
}

/// Integrates the scenario's model.
pub fn simulate(sc: &Scenario) -> Result<SampledTrajectory> {
    let lp = sc.latent_params();
    let cfg = sc.solver.config(sc.model)?;
    let s0 = sc.initials.state4();
    match sc.model {
        Model::ThreeComponent => {
            let model = ThreeCompartment {
                params: lp.core,
                efficacy: sc.efficacy,
            };
            let traj = integrate(&model, s0.without_latent().to_array(), &cfg, &sc.output.events)?;
            let (rows, summary) = sample(&traj, &sc.output);
            Ok(SampledTrajectory {
                header: vec!["t", "T", "I", "V"],
                rows,
                summary,
            })
        }
        Model::Latent => {
            let traj = integrate_latent(sc)?;
            let (rows, summary) = sample(&traj, &sc.output);
            Ok(SampledTrajectory {
                header: vec!["t", "T", "I", "L", "V"],
                rows,
                summary,
            })
        }
    }
}

fn integrate_latent(sc: &Scenario) -> Result<Trajectory<4>> {
    let cfg = sc.solver.config(Model::Latent)?;
    let model = LatentModel {
        params: sc.latent_params(),
        efficacy: sc.efficacy,
    };
    integrate(&model, sc.initials.state4().to_array(), &cfg, &sc.output.events)
}

/// Integrates the latent model and checks descent of the chosen Lyapunov function.
pub fn lyapunov_check(sc: &Scenario, which: EquilibriumKind) -> Result<DescentReport> {
    if sc.model != Model::Latent {
        return Err(Error::Config("Lyapunov checks need `model` = \"latent\"".into()));
    }
    let lp = sc.latent_params();
    if which == EquilibriumKind::Endemic {
        let rl = analysis::r_l(&lp, &sc.efficacy);
        if !analysis::above_threshold(rl) {
            return Err(Error::EndemicAbsent { r: rl });
        }
    }
    let traj = integrate_latent(sc)?;
    lyapunov::verify_descent(&lp, &sc.efficacy, &traj, which)
}

/// Shortest round-trip decimal form, `inf` for infinities.
pub fn fmt_num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn numeric_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(t: &SampledTrajectory) -> String {
    numeric_csv(&t.header, &t.rows)
}

/// `r,epsilon,time_days`, plus an `error` column when any point failed.
pub fn threshold_csv(rows: &[SweepRow]) -> String {
    let with_errors = rows.iter().any(|r| r.outcome.is_err());
    let mut out = String::from("r,epsilon,time_days");
    if with_errors {
        out.push_str(",error");
    }
    out.push('\n');
    for row in rows {
        match &row.outcome {
            Ok(res) => {
                let _ = write!(out, "{},{},{}", fmt_num(row.r), fmt_num(res.epsilon_used), fmt_num(res.days()));
                if with_errors {
                    out.push(',');
                }
            }
            Err(msg) => {
                let _ = write!(out, "{},,,{}", fmt_num(row.r), csv_field(msg));
            }
        }
        out.push('\n');
    }
    out
}

pub fn lyapunov_csv(rep: &DescentReport) -> String {
    let rows: Vec<Vec<f64>> = rep
        .samples
        .iter()
        .map(|s| vec![s.t, s.u, s.du_dt_analytic, s.du_dt_fd])
        .collect();
    numeric_csv(&["t", "U", "dUdt_analytic", "dUdt_fd"], &rows)
}

/// Compact verdict document written next to the Lyapunov CSV.
pub fn lyapunov_verdict(rep: &DescentReport) -> Value {
    json!({
        "which": rep.which,
        "verdict": if rep.passed { "pass" } else { "fail" },
        "max_rate_analytic": rep.max_rate_analytic,
        "max_rate_fd": rep.max_rate_fd,
        "max_u": rep.max_u,
        "tolerance": rep.tolerance,
        "samples": rep.samples.len(),
        "skipped": rep.skipped,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::ThresholdResult;

    fn table1() -> Scenario {
        build_scenario(None, None, &[]).unwrap()
    }

    #[test]
    fn table1_preset_matches_reference_values() {
        let sc = table1();
        let lp = sc.latent_params();
        assert_eq!(lp, LatentParams::table1());
        assert_eq!(sc.initials.state4(), State4::default_initials());
        assert_eq!(sc.model, Model::Latent);
        assert_eq!(sc.efficacy, Efficacy::NONE);
    }

    #[test]
    fn all_listed_presets_resolve() {
        for p in PRESETS {
            if p.kind.contains("scenario") {
                build_scenario(Some(p.name), None, &[]).unwrap();
            }
            if p.kind.contains("params") {
                build_scenario(None, None, &[format!("params={}", p.name)]).unwrap();
            }
            if p.kind.contains("initials") {
                build_scenario(None, None, &[format!("initials={}", p.name)]).unwrap();
            }
        }
    }

    #[test]
    fn overrides_apply_in_order() {
        let sc = build_scenario(
            Some("near-threshold"),
            Some(("cfg", r#"{"params": "wide-reservoir", "efficacy": {"pi": 0.2}}"#)),
            &["efficacy.pi=0.3".into(), "params.p=0".into(), "model=three_component".into()],
        )
        .unwrap();
        assert_eq!(sc.efficacy.pi, 0.3);
        assert_eq!(sc.params.p, 0.0);
        assert_eq!(sc.params.d_l, 0.24);
        assert_eq!(sc.solver.t_max, 6000.0);
        assert_eq!(sc.model, Model::ThreeComponent);
        assert_eq!(sc.initials.L, None);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let msg = |r: Result<Scenario>| r.unwrap_err().to_string();
        let m = msg(build_scenario(None, Some(("cfg.json", "{\n  \"model\": \"latent\",\n  oops\n}")), &[]));
        assert!(m.contains("cfg.json:3:"), "{m}");
        let m = msg(build_scenario(None, None, &["params.d_T=\"x\"".into()]));
        assert!(m.contains("params.d_T"), "{m}");
        let m = msg(build_scenario(None, None, &["params.bogus=1".into()]));
        assert!(m.contains("bogus"), "{m}");
        let m = msg(build_scenario(None, None, &["params.p=1.5".into()]));
        assert!(m.contains("`p`"), "{m}");
        let m = msg(build_scenario(None, None, &["params=nope".into()]));
        assert!(m.contains("nope"), "{m}");
        assert!(build_scenario(Some("nope"), None, &[]).is_err());
        assert!(build_scenario(None, None, &["novalue".into()]).is_err());
        assert!(build_scenario(None, None, &["solver.atol=[1e-12]".into()]).is_err());
        assert!(build_scenario(None, None, &["initials.V=-1".into()]).is_err());
    }

    #[test]
    fn analyze_table1() {
        let rep = analyze(&table1()).unwrap();
        let r = rep.reproduction;
        assert!((r.r0 - 2.087).abs() < 2.087e-3);
        assert!((r.r_l - 2.027).abs() < 2.027e-3);
        assert!((r.q - 0.9714).abs() < 1e-4);
        assert_eq!(r.r_l, r.q * r.r0);
        assert_eq!(rep.equilibria.len(), 2);
        assert_eq!(rep.equilibria[0].verdict, Verdict::Unstable);
        assert_eq!(rep.equilibria[1].verdict, Verdict::LocallyStable);
        assert!(!r.degenerate);
    }

    #[test]
    fn analyze_treated_and_degenerate() {
        let sc = build_scenario(Some("near-threshold"), None, &[]).unwrap();
        let rep = analyze(&sc).unwrap();
        assert!((rep.reproduction.r0_treated - 1.003).abs() < 2e-3);
        assert!((rep.reproduction.r_l_treated - 0.974).abs() < 2e-3);
        assert_eq!(rep.equilibria.len(), 1);
        assert_eq!(rep.equilibria[0].verdict, Verdict::LocallyStable);

        let sc = build_scenario(None, None, &["params.p=0".into()]).unwrap();
        let r = analyze(&sc).unwrap().reproduction;
        assert!(r.degenerate);
        assert_eq!(r.r_l, r.r0);

        let sc = build_scenario(Some("three-compartment"), None, &[]).unwrap();
        let rep = analyze(&sc).unwrap();
        assert_eq!(rep.equilibria.len(), 2);
        assert!(rep.equilibria[1].routh_hurwitz.is_none());
        assert_eq!(rep.equilibria[1].verdict, Verdict::LocallyStable);
    }

    #[test]
    fn report_round_trips_exactly() {
        let mut rep = analyze(&table1()).unwrap();
        let sc = build_scenario(None, None, &["solver.t_max=5".into()]).unwrap();
        rep.simulation = Some(simulate(&sc).unwrap().summary);
        let text = to_json(&rep).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn sample_grid() {
        let ts = sample_times(600.0, 1000, Spacing::Log, &[], &[3.5]);
        assert_eq!(ts.len(), 1001);
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 600.0);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert!(ts.contains(&3.5));
        assert_eq!(sample_times(0.0, 1000, Spacing::Log, &[], &[]), vec![0.0]);
        assert_eq!(sample_times(10.0, 3, Spacing::Linear, &[], &[]), vec![0.0, 5.0, 10.0]);
    }

    #[test]
    fn zero_horizon_gives_initial_row() {
        let sc = build_scenario(None, None, &["solver.t_max=0".into()]).unwrap();
        let t = simulate(&sc).unwrap();
        assert_eq!(t.rows, vec![vec![0.0, 4e5, 0.0, 0.0, 1e5]]);
        assert_eq!(trajectory_csv(&t), "t,T,I,L,V\n0.0,400000.0,0.0,0.0,100000.0\n");
    }

    #[test]
    fn event_times_are_sampled() {
        let sc = build_scenario(
            None,
            None,
            &[
                "solver.t_max=50".into(),
                r#"output.events=[{"component":3,"threshold":1000.0,"direction":"downward"}]"#.into(),
            ],
        )
        .unwrap();
        let t = simulate(&sc).unwrap();
        let ev = t.summary.events[0].time;
        let row = t.rows.iter().find(|r| r[0] == ev).unwrap();
        assert!((row[4] - 1000.0).abs() < 1e-3);
        assert_eq!(t.header, vec!["t", "T", "I", "L", "V"]);
    }

    #[test]
    fn threshold_table_format() {
        let ok = |r: f64, time: Option<f64>| SweepRow {
            r,
            outcome: Ok(ThresholdResult {
                time,
                epsilon_used: 0.5,
                r_achieved: r,
                worst_undershoot: 0.0,
            }),
        };
        assert_eq!(threshold_csv(&[]), "r,epsilon,time_days\n");
        assert_eq!(
            threshold_csv(&[ok(2.0, None), ok(0.6, Some(26.25))]),
            "r,epsilon,time_days\n2.0,0.5,inf\n0.6,0.5,26.25\n"
        );
        let bad = SweepRow {
            r: -1.0,
            outcome: Err("domain error: x, y".into()),
        };
        assert_eq!(
            threshold_csv(&[ok(0.6, Some(1.0)), bad]),
            "r,epsilon,time_days,error\n0.6,0.5,1.0,\n-1.0,,,\"domain error: x, y\"\n"
        );
    }

    #[test]
    fn lyapunov_requires_latent_and_endemic_state() {
        let sc = build_scenario(Some("three-compartment"), None, &[]).unwrap();
        assert!(matches!(lyapunov_check(&sc, EquilibriumKind::NonInfective), Err(Error::Config(_))));
        let sc = build_scenario(Some("near-threshold"), None, &[]).unwrap();
        assert!(matches!(
            lyapunov_check(&sc, EquilibriumKind::Endemic),
            Err(Error::EndemicAbsent { .. })
        ));
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(1e-300), "1e-300");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
    }
}
