//! Experiment configuration, read from TOML.

use std::path::PathBuf;

use graphon_turing::continuation::{Controls, FitOptions};
use graphon_turing::graphon::GraphonModel;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graphon: GraphonModel,
    /// Graph sizes; more than one makes a sweep.
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub graphs: Graphs,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching: Option<MatchingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonance: Option<ResonanceConfig>,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub concentration: ConcentrationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Graphs {
    #[serde(default = "yes")]
    pub deterministic: bool,
    #[serde(default = "yes")]
    pub random: bool,
}

impl Default for Graphs {
    fn default() -> Self {
        Graphs {
            deterministic: true,
            random: true,
        }
    }
}

fn yes() -> bool {
    true
}

/// Random graphs use seeds `base, base + 1, ..., base + count - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default = "one_u64")]
    pub base: u64,
    #[serde(default = "one_usize")]
    pub count: usize,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { base: 1, count: 1 }
    }
}

fn one_u64() -> u64 {
    1
}

fn one_usize() -> usize {
    1
}

impl Seeds {
    pub fn list(&self) -> Vec<u64> {
        (0..self.count).map(|t| graphon_turing::spectral::trial_seed(self.base, t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KappaRule {
    /// The `index`-th largest Laplacian eigenvalue, counted from 1.
    Index(usize),
    /// A fixed value of `κ`.
    Value(f64),
    /// The largest eigenvalue within `radius·N` of `center·N`.
    LargestNear { center: f64, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub r: f64,
    pub b: f64,
    pub kappa: KappaRule,
    /// `profile.csv` holds the branch point closest to this `ε`.
    #[serde(default = "profile_epsilon")]
    pub profile_epsilon: f64,
}

fn profile_epsilon() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingConfig {
    #[serde(default = "one_usize")]
    pub k_star: usize,
    #[serde(default = "match_delta")]
    pub delta: f64,
    #[serde(default = "match_gamma")]
    pub gamma: f64,
    /// Window, in units of `N`, for the eigenvalue standing in for `N λ_{2k*}`.
    #[serde(default = "match_delta")]
    pub l3_radius: f64,
}

fn match_delta() -> f64 {
    0.03
}

fn match_gamma() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    #[serde(default = "one_usize")]
    pub k1: usize,
    /// `ε` at which the two-mode profile is reported.
    #[serde(default = "reference_epsilon")]
    pub reference_epsilon: f64,
}

fn reference_epsilon() -> f64 {
    1e-3
}

/// Overrides of [`Controls::for_size`] and [`FitOptions::for_size`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ds_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ds_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ds_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent_decades: Option<f64>,
}

impl ContinuationConfig {
    pub fn controls(&self, n: usize) -> Controls {
        let d = Controls::for_size(n);
        Controls {
            ds_init: self.ds_init.unwrap_or(d.ds_init),
            ds_min: self.ds_min.unwrap_or(d.ds_min),
            ds_max: self.ds_max.unwrap_or(d.ds_max),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            newton_max_iter: self.newton_max_iter.unwrap_or(d.newton_max_iter),
            amplitude_cap: self.amplitude_cap.unwrap_or(d.amplitude_cap),
            epsilon_min: self.epsilon_min.unwrap_or(d.epsilon_min),
            epsilon_max: self.epsilon_max.unwrap_or(d.epsilon_max),
            tol: self.tol.unwrap_or(d.tol),
            h0: self.h0.unwrap_or(d.h0),
        }
    }

    pub fn fit_options(&self, n: usize, linear_norm: f64) -> FitOptions {
        let d = FitOptions::for_size(n, linear_norm);
        FitOptions {
            window: self.fit_window.unwrap_or(d.window),
            exponent_decades: self.exponent_decades.unwrap_or(d.exponent_decades),
            ..d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    #[serde(default = "concentration_gamma")]
    pub gamma: f64,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        ConcentrationConfig {
            gamma: concentration_gamma(),
        }
    }
}

fn concentration_gamma() -> f64 {
    0.25
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.graphon.validate().map_err(|e| invalid(e.to_string()))?;
        if self.sizes.is_empty() {
            return Err(invalid("sizes must not be empty"));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 2) {
            return Err(invalid(format!("graph size {n} is below 2")));
        }
        if !self.graphs.deterministic && !self.graphs.random {
            return Err(invalid("graphs selects neither deterministic nor random graphs"));
        }
        if self.seeds.count == 0 {
            return Err(invalid("seeds.count must be positive"));
        }
        let n_min = *self.sizes.iter().min().unwrap_or(&0);
        if let Some(m) = &self.model {
            if !m.r.is_finite() || !(m.b > 0.0 && m.b.is_finite()) || !m.profile_epsilon.is_finite() {
                return Err(invalid("model needs finite r, b > 0 and a finite profile_epsilon"));
            }
            match m.kappa {
                KappaRule::Index(i) if i == 0 || i > n_min => {
                    return Err(invalid(format!("kappa index {i} outside 1..={n_min}")));
                }
                KappaRule::Value(v) if !v.is_finite() => return Err(invalid("kappa value must be finite")),
                KappaRule::LargestNear { center, radius } if !center.is_finite() || !(radius > 0.0) => {
                    return Err(invalid("largest_near needs a finite center and a positive radius"));
                }
                _ => {}
            }
        }
        if let Some(m) = &self.matching {
            if !self.graphon.is_ring() {
                return Err(invalid("matching applies to ring graphons only"));
            }
            if m.k_star == 0 || !(m.delta > 0.0) || !(m.gamma > 0.0 && m.gamma < 0.5) || !(m.l3_radius > 0.0) {
                return Err(invalid("matching needs k_star ≥ 1, delta > 0, 0 < gamma < 1/2 and l3_radius > 0"));
            }
        }
        if let Some(r) = &self.resonance {
            if r.k1 == 0 || !r.reference_epsilon.is_finite() {
                return Err(invalid("resonance needs k1 ≥ 1 and a finite reference_epsilon"));
            }
        }
        for &n in &self.sizes {
            self.continuation.controls(n).validate().map_err(|e| invalid(e.to_string()))?;
        }
        if let Some(d) = self.continuation.exponent_decades {
            if !(d > 0.0) {
                return Err(invalid("exponent_decades must be positive"));
            }
        }
        if let Some(w) = self.continuation.fit_window {
            if !(w > 0.0) {
                return Err(invalid("fit_window must be positive"));
            }
        }
        if !(self.concentration.gamma > 0.0 && self.concentration.gamma.is_finite()) {
            return Err(invalid("concentration.gamma must be positive"));
        }
        Ok(())
    }
}

/// Built-in configuration used when `--config` is not given.
pub fn canned(command: &str) -> Option<&'static str> {
    Some(match command {
        "spectrum" => include_str!("../configs/spectrum.toml"),
        "bifurcate" => include_str!("../configs/bifurcate.toml"),
        "resonance" => include_str!("../configs/resonance.toml"),
        "bipartite" => include_str!("../configs/bipartite.toml"),
        "concentration" => include_str!("../configs/concentration.toml"),
        _ => return None,
    })
}
