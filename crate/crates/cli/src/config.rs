//! JSON experiment configs. The schema is documented in the README; every
//! object rejects unknown keys so typos surface as errors naming the key.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use bayesaf_core::simulate::{synthetic_impulse_response, Scenario};
use bayesaf_core::tune::{log_grid, Knob, TuneSpec, DEFAULT_TAIL_FRAC, DEFAULT_TOL_DB};
use bayesaf_core::{FilterConfig, NoiseModel, Variant};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::ir::read_ir;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub algorithms: Vec<AlgorithmConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "M", default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub ir_file: Option<PathBuf>,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    pub a: f64,
    #[serde(default = "one")]
    pub v_u: f64,
    pub snr_db: f64,
    pub beta_star: f64,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub base_seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Envelope decay constant in taps; defaults to `M / 4`.
    #[serde(default)]
    pub decay: Option<f64>,
    #[serde(default = "default_ir_seed")]
    pub seed: u64,
    /// Norm of the generated response.
    #[serde(default = "one")]
    pub gain: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    #[serde(default)]
    pub label: Option<String>,
    pub variant: String,
    pub beta: f64,
    #[serde(rename = "I", default)]
    pub refine: usize,
    #[serde(default)]
    pub v0: Option<V0Config>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub reg: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub tune: Option<TuneConfig>,
}

/// A number, or `"h_energy"` for `|h|^2`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum V0Config {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    #[serde(default)]
    pub param: Option<String>,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<RangeConfig>,
    pub target_db: f64,
    #[serde(default = "default_tol")]
    pub tol_db: f64,
    #[serde(default = "default_tail")]
    pub tail_frac: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

fn one() -> f64 {
    1.0
}

fn default_ir_seed() -> u64 {
    1
}

fn default_tol() -> f64 {
    DEFAULT_TOL_DB
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_FRAC
}

/// A config checked and turned into core types.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenario: Scenario,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Algorithm {
    pub label: String,
    /// Knob already set unless `tune` is present.
    pub config: FilterConfig,
    pub tune: Option<TuneSpec>,
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scale: f64,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            seed: None,
            scale: 1.0,
        }
    }
}

pub fn scaled(n: usize, scale: f64) -> usize {
    ((n as f64 * scale).round() as usize).max(1)
}

pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Relative `ir_file` paths resolve against `base_dir`.
pub fn resolve(cfg: &ExperimentConfig, base_dir: &Path, ov: Overrides) -> CliResult<Experiment> {
    if !(ov.scale > 0.0 && ov.scale.is_finite()) {
        return Err(CliError::Usage("--scale must be a positive number".into()));
    }
    let sc = &cfg.scenario;
    let h = match (&sc.ir_file, &sc.synth) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "scenario: give either ir_file or synth, not both",
            ))
        }
        (None, None) => {
            return Err(CliError::config(
                "scenario: one of ir_file or synth is required",
            ))
        }
        (Some(file), None) => {
            if ov.scale != 1.0 {
                return Err(CliError::config(
                    "scenario: --scale cannot resize an impulse response read from ir_file",
                ));
            }
            let path = if file.is_absolute() {
                file.clone()
            } else {
                base_dir.join(file)
            };
            let h = read_ir(&path)?;
            if let Some(m) = sc.m {
                if m != h.len() {
                    return Err(CliError::config(format!(
                        "scenario.M = {m} but ir_file holds {} coefficients",
                        h.len()
                    )));
                }
            }
            h
        }
        (None, Some(synth)) => {
            let m =
                sc.m.ok_or_else(|| CliError::config("scenario.M is required with synth"))?;
            if m == 0 {
                return Err(CliError::config("scenario.M must be at least 1"));
            }
            let m = scaled(m, ov.scale);
            let decay = synth.decay.map(|d| d * ov.scale).unwrap_or(m as f64 / 4.0);
            if !(synth.gain > 0.0 && synth.gain.is_finite()) {
                return Err(CliError::config("scenario.synth.gain must be positive"));
            }
            synthetic_impulse_response(m, decay, synth.seed)
                .map_err(|e| CliError::config(format!("scenario.synth: {e}")))?
                .into_iter()
                .map(|v| v * synth.gain)
                .collect()
        }
    };
    if sc.t == 0 || sc.n == 0 {
        return Err(CliError::config(
            "scenario.T and scenario.N must be at least 1",
        ));
    }
    let scenario = Scenario {
        h,
        a: sc.a,
        v_u: sc.v_u,
        snr_db: sc.snr_db,
        beta_star: sc.beta_star,
        horizon: scaled(sc.t, ov.scale),
        realizations: scaled(sc.n, ov.scale),
    };
    scenario
        .validate()
        .map_err(|e| CliError::config(format!("scenario: {e}")))?;

    if cfg.algorithms.is_empty() {
        return Err(CliError::config("algorithms: list is empty"));
    }
    let mut seen = HashSet::new();
    let algorithms = cfg
        .algorithms
        .iter()
        .enumerate()
        .map(|(i, a)| resolve_algorithm(a, i, &scenario))
        .collect::<CliResult<Vec<_>>>()?;
    for a in &algorithms {
        if !seen.insert(a.label.clone()) {
            return Err(CliError::config(format!(
                "algorithms: duplicate label {:?}",
                a.label
            )));
        }
    }
    Ok(Experiment {
        scenario,
        base_seed: ov.seed.unwrap_or(sc.base_seed),
        algorithms,
        output: cfg.output.clone(),
    })
}

fn resolve_algorithm(
    a: &AlgorithmConfig,
    index: usize,
    scenario: &Scenario,
) -> CliResult<Algorithm> {
    let at = |msg: String| CliError::config(format!("algorithms[{index}]: {msg}"));
    let variant: Variant = a.variant.parse().map_err(|_| {
        at(format!(
            "variant: unknown {:?} (expected SG, fKF, sKF, vKF or KF)",
            a.variant
        ))
    })?;
    let label = a
        .label
        .clone()
        .unwrap_or_else(|| variant.name().to_string());
    if label.is_empty() || label.contains([',', '\n', '"']) {
        return Err(at(format!(
            "label: {label:?} is not usable as a CSV column"
        )));
    }
    let noise: NoiseModel = scenario
        .assumed_noise(a.beta)
        .map_err(|e| at(format!("beta: {e}")))?;
    let knob = Knob::for_variant(variant);
    let given: Vec<(Knob, f64)> = [
        (Knob::Mu, a.mu),
        (Knob::Reg, a.reg),
        (Knob::Epsilon, a.epsilon),
    ]
    .into_iter()
    .filter_map(|(k, v)| v.map(|v| (k, v)))
    .collect();
    if let Some((k, _)) = given.iter().find(|(k, _)| *k != knob) {
        return Err(at(format!(
            "{k}: not a parameter of {variant} (use {knob})"
        )));
    }
    let value = given.first().map(|&(_, v)| v);
    let tune = match &a.tune {
        Some(t) => Some(resolve_tune(t, knob).map_err(|m| at(format!("tune: {m}")))?),
        None => None,
    };
    let value = match (value, &tune) {
        (Some(v), None) => v,
        (None, Some(spec)) => spec.grid[0],
        (Some(_), Some(_)) => return Err(at(format!("give either {knob} or tune, not both"))),
        (None, None) => {
            return Err(at(format!(
                "{knob} is required for {variant} (or a tune block)"
            )))
        }
    };
    let mut config = FilterConfig::for_variant(variant, noise, value).with_refine(a.refine);
    match &a.v0 {
        None => {}
        Some(V0Config::Value(v)) => config = config.with_v0(*v),
        Some(V0Config::Named(name)) if name == "h_energy" => {
            config = config.with_v0(scenario.h.iter().map(|v| v * v).sum())
        }
        Some(V0Config::Named(name)) => {
            return Err(at(format!(
                "v0: expected a number or \"h_energy\", got {name:?}"
            )))
        }
    }
    config.validate().map_err(|e| at(e.to_string()))?;
    Ok(Algorithm {
        label,
        config,
        tune,
    })
}

fn resolve_tune(t: &TuneConfig, knob: Knob) -> Result<TuneSpec, String> {
    if let Some(p) = &t.param {
        let p: Knob = p.parse().map_err(|_| format!("param: unknown {p:?}"))?;
        if p != knob {
            return Err(format!(
                "param: {p} does not match the variant (expected {knob})"
            ));
        }
    }
    let grid = match (&t.grid, &t.range) {
        (Some(g), None) => g.clone(),
        (None, Some(r)) => log_grid(r.lo, r.hi, r.points).map_err(|e| format!("range: {e}"))?,
        _ => return Err("give exactly one of grid or range".into()),
    };
    let mut grid = grid;
    grid.sort_by(f64::total_cmp);
    let spec = TuneSpec {
        knob,
        grid,
        target_db: t.target_db,
        tol_db: t.tol_db,
        tail_frac: t.tail_frac,
    };
    spec.validate().map_err(|e| e.to_string())?;
    if spec.grid.iter().any(|&v| v <= 0.0 && knob != Knob::Epsilon) {
        return Err(format!("grid: {knob} values must be positive"));
    }
    Ok(spec)
}
