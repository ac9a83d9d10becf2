//! Declarative experiment configuration.
//!
//! A config is a JSON document; command-line flags are applied on top of it
//! as JSON edits before deserialization, so unknown keys are rejected either
//! way. [`ExperimentConfig::resolve`] fills every preset-dependent default,
//! and the resolved config is what gets echoed as `effective_config.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ctmc_trunc_core::presets::{
    ChainN0, ChainZ, Hypercube, Preset, RateSequence, Reshuffle, SiteExponent, ThreeState, TrapChain,
};
use ctmc_trunc_core::WindowKind;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::network::LoadedNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateConfig {
    Constant { c: f64 },
    Geometric { q: f64 },
    Quadratic { q: f64 },
}

impl From<RateConfig> for RateSequence {
    fn from(r: RateConfig) -> Self {
        match r {
            RateConfig::Constant { c } => RateSequence::Constant(c),
            RateConfig::Geometric { q } => RateSequence::Geometric(q),
            RateConfig::Quadratic { q } => RateSequence::Quadratic(q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentConfig {
    Constant { c: f64 },
    Linear,
    Quadratic,
    Exponential,
}

impl From<ExponentConfig> for SiteExponent {
    fn from(c: ExponentConfig) -> Self {
        match c {
            ExponentConfig::Constant { c } => SiteExponent::Constant(c),
            ExponentConfig::Linear => SiteExponent::Linear,
            ExponentConfig::Quadratic => SiteExponent::Quadratic,
            ExponentConfig::Exponential => SiteExponent::Exponential,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn geometric_09() -> RateConfig {
    RateConfig::Geometric { q: 0.9 }
}

/// A named network with its parameters. Omitted parameters take the
/// defaults listed by `list-presets`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PresetConfig {
    ChainN0 {
        #[serde(default = "ChainDefaults::x")]
        x: f64,
        #[serde(default = "geometric_09")]
        lambda: RateConfig,
    },
    ChainZ {
        #[serde(default = "ChainDefaults::x")]
        x: f64,
        #[serde(default = "ChainDefaults::y")]
        y: f64,
        #[serde(default = "geometric_09")]
        lambda: RateConfig,
        #[serde(default = "geometric_09")]
        mu: RateConfig,
    },
    Hypercube {
        #[serde(default = "HypercubeDefaults::n_sites")]
        n_sites: u32,
        #[serde(default = "HypercubeDefaults::q")]
        q: f64,
        #[serde(default = "HypercubeDefaults::c")]
        c: ExponentConfig,
    },
    Reshuffle {
        #[serde(default = "ReshuffleDefaults::q")]
        q: f64,
        #[serde(default = "one")]
        a: f64,
    },
    TrapChain {
        #[serde(default = "TrapDefaults::p")]
        p: f64,
        #[serde(default = "HypercubeDefaults::q_trap")]
        q: f64,
    },
    ThreeState {
        #[serde(default = "one")]
        g12: f64,
        #[serde(default = "one")]
        g21: f64,
        #[serde(default = "one")]
        g13: f64,
        #[serde(default = "one")]
        g32: f64,
    },
    /// A finite network read from an edge-list file.
    EdgeList { path: PathBuf },
}

struct ChainDefaults;
impl ChainDefaults {
    fn x() -> f64 {
        0.2
    }
    fn y() -> f64 {
        0.2
    }
}
struct HypercubeDefaults;
impl HypercubeDefaults {
    fn n_sites() -> u32 {
        16
    }
    fn q() -> f64 {
        0.5
    }
    fn q_trap() -> f64 {
        0.9
    }
    fn c() -> ExponentConfig {
        ExponentConfig::Linear
    }
}
struct ReshuffleDefaults;
impl ReshuffleDefaults {
    fn q() -> f64 {
        0.8
    }
}
struct TrapDefaults;
impl TrapDefaults {
    fn p() -> f64 {
        0.75
    }
}

pub const PRESETS: [&str; 7] = [
    "chain_n0",
    "chain_z",
    "hypercube",
    "reshuffle",
    "trap_chain",
    "three_state",
    "edge_list",
];

impl PresetConfig {
    /// The preset `name` with every parameter at its default.
    pub fn default_for(name: &str) -> Result<PresetConfig> {
        if name == "edge_list" {
            return Err(CliError::Config("edge_list needs a `path` parameter".into()));
        }
        serde_json::from_value(serde_json::json!({ "name": name }))
            .map_err(|_| CliError::Config(format!("unknown preset `{name}`; see list-presets")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            PresetConfig::ChainN0 { .. } => "chain_n0",
            PresetConfig::ChainZ { .. } => "chain_z",
            PresetConfig::Hypercube { .. } => "hypercube",
            PresetConfig::Reshuffle { .. } => "reshuffle",
            PresetConfig::TrapChain { .. } => "trap_chain",
            PresetConfig::ThreeState { .. } => "three_state",
            PresetConfig::EdgeList { .. } => "edge_list",
        }
    }

    pub fn build(&self, base: &Path) -> Result<LoadedNetwork> {
        let preset = match *self {
            PresetConfig::ChainN0 { x, lambda } => Preset::ChainN0(ChainN0::new(x, lambda.into())?),
            PresetConfig::ChainZ { x, y, lambda, mu } => Preset::ChainZ(ChainZ::new(x, y, lambda.into(), mu.into())?),
            PresetConfig::Hypercube { n_sites, q, c } => Preset::Hypercube(Hypercube::new(n_sites, q, c.into())?),
            PresetConfig::Reshuffle { q, a } => Preset::Reshuffle(Reshuffle::new(q, a)?),
            PresetConfig::TrapChain { p, q } => Preset::TrapChain(TrapChain::new(p, q)?),
            PresetConfig::ThreeState { g12, g21, g13, g32 } => Preset::ThreeState(ThreeState::new(g12, g21, g13, g32)?),
            PresetConfig::EdgeList { ref path } => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                return LoadedNetwork::from_edge_list(&path);
            }
        };
        Ok(LoadedNetwork::Preset(preset))
    }
}

impl Default for PresetConfig {
    fn default() -> Self {
        PresetConfig::ThreeState {
            g12: 1.0,
            g21: 1.0,
            g13: 1.0,
            g32: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    /// A label list such as `1,2` or `<kind>:<n>` such as `balls:10`.
    pub window: Option<String>,
    #[serde(default = "EvolveConfig::times")]
    pub times: Vec<f64>,
    #[serde(default = "EvolveConfig::tol")]
    pub tol: f64,
    /// `subnetwork`, `sharp` or `condense`.
    #[serde(default = "EvolveConfig::scheme")]
    pub scheme: String,
    /// Outer window for the condense scheme.
    pub horizon: Option<String>,
    /// Label of the initial point mass.
    pub initial: Option<String>,
}

impl EvolveConfig {
    fn times() -> Vec<f64> {
        vec![0.0, 1.0, 10.0]
    }
    fn tol() -> f64 {
        1e-12
    }
    fn scheme() -> String {
        "subnetwork".into()
    }
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            window: None,
            times: Self::times(),
            tol: Self::tol(),
            scheme: Self::scheme(),
            horizon: None,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    /// `kernel`, `detailed-balance` or `in-tree`.
    #[serde(default = "StationaryConfig::method")]
    pub method: String,
    pub window: Option<String>,
    /// Largest accepted `‖Γ P*‖₁`.
    #[serde(default = "StationaryConfig::residual_tol")]
    pub residual_tol: f64,
}

impl StationaryConfig {
    fn method() -> String {
        "kernel".into()
    }
    fn residual_tol() -> f64 {
        1e-9
    }
}

impl Default for StationaryConfig {
    fn default() -> Self {
        StationaryConfig {
            method: Self::method(),
            window: None,
            residual_tol: Self::residual_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakConfig {
    #[serde(default = "LeakConfig::n")]
    pub n: u64,
    #[serde(default = "LeakConfig::horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "LeakConfig::threshold")]
    pub threshold: f64,
    pub start: Option<String>,
}

impl LeakConfig {
    fn n() -> u64 {
        4000
    }
    fn horizon() -> f64 {
        1e3
    }
    fn threshold() -> f64 {
        0.01
    }
}

impl Default for LeakConfig {
    fn default() -> Self {
        LeakConfig {
            n: Self::n(),
            horizon: Self::horizon(),
            seed: 0,
            threshold: Self::threshold(),
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `balls`, `shifted_balls` or `prefixes`.
    pub sequence: Option<String>,
    #[serde(default = "SweepSection::n_min")]
    pub n_min: u64,
    #[serde(default = "SweepSection::n_max")]
    pub n_max: u64,
    #[serde(default = "SweepSection::step")]
    pub step: u64,
    #[serde(default = "SweepSection::t_grid")]
    pub t_grid: Vec<f64>,
    pub initial: Option<String>,
    #[serde(default = "EvolveConfig::tol")]
    pub evolve_tol: f64,
    #[serde(default = "SweepSection::spectral")]
    pub spectral: bool,
    #[serde(default = "SweepSection::cauchy_k")]
    pub cauchy_k: usize,
    #[serde(default = "SweepSection::cauchy_burn_in")]
    pub cauchy_burn_in: usize,
    #[serde(default = "SweepSection::cauchy_tol")]
    pub cauchy_tol: f64,
    #[serde(default = "SweepSection::agreement_tol")]
    pub agreement_tol: f64,
    #[serde(default)]
    pub leak: Option<LeakConfig>,
}

impl SweepSection {
    fn n_min() -> u64 {
        1
    }
    fn n_max() -> u64 {
        10
    }
    fn step() -> u64 {
        1
    }
    fn t_grid() -> Vec<f64> {
        vec![0.1, 1.0, 10.0]
    }
    fn spectral() -> bool {
        true
    }
    fn cauchy_k() -> usize {
        5
    }
    fn cauchy_burn_in() -> usize {
        3
    }
    fn cauchy_tol() -> f64 {
        1e-6
    }
    fn agreement_tol() -> f64 {
        1e-6
    }

    pub fn sizes(&self) -> Result<Vec<u64>> {
        if self.step == 0 || self.n_max < self.n_min + self.step {
            return Err(CliError::Config(
                "sweep needs step ≥ 1 and at least two windows between n_min and n_max".into(),
            ));
        }
        Ok((self.n_min..=self.n_max).step_by(self.step as usize).collect())
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("all sweep fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "SimulateConfig::n")]
    pub n: u64,
    #[serde(default = "SimulateConfig::horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    pub start: Option<String>,
    /// `return`, `absorption` or `occupation` (one long trajectory;
    /// `horizon` is its length).
    #[serde(default = "SimulateConfig::mode")]
    pub mode: String,
    /// Write every event of every trajectory to `events.bin`.
    #[serde(default)]
    pub event_log: bool,
}

impl SimulateConfig {
    fn n() -> u64 {
        10_000
    }
    fn horizon() -> f64 {
        1e6
    }
    fn mode() -> String {
        "return".into()
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            n: Self::n(),
            horizon: Self::horizon(),
            seed: 0,
            start: None,
            mode: Self::mode(),
            event_log: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub window: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDbConfig {
    pub window: Option<String>,
    /// Root of the candidate path products.
    pub root: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Program version that wrote this config; informational on input.
    #[serde(default)]
    pub version: Option<String>,
    #[serde(default)]
    pub preset: PresetConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub stationary: StationaryConfig,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub check_db: CheckDbConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default = "ExperimentConfig::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Turn inconclusive verdicts and failed statistical checks into errors.
    #[serde(default)]
    pub strict: bool,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }

    pub fn from_value(v: Value) -> Result<ExperimentConfig> {
        serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Fills every default that depends on the network.
    pub fn resolve(&mut self, net: &LoadedNetwork) -> Result<()> {
        self.version = Some(crate::VERSION.to_string());
        let window = default_window(net);
        let root = net.root().to_string();
        self.evolve.window.get_or_insert_with(|| window.clone());
        self.evolve.initial.get_or_insert_with(|| root.clone());
        if self.evolve.scheme == "condense" && self.evolve.horizon.is_none() {
            return Err(CliError::Config("the condense scheme needs evolve.horizon".into()));
        }
        self.stationary.window.get_or_insert_with(|| window.clone());
        self.check_db.window.get_or_insert_with(|| window.clone());
        self.check_db.root.get_or_insert_with(|| root.clone());
        self.spectrum.window.get_or_insert_with(|| window.clone());
        self.sweep
            .sequence
            .get_or_insert_with(|| window_kind_name(net.default_window_kind()).to_string());
        self.sweep.initial.get_or_insert_with(|| root.clone());
        if let Some(leak) = &mut self.sweep.leak {
            leak.start.get_or_insert_with(|| root.clone());
        }
        self.simulate.start.get_or_insert_with(|| root.clone());
        Ok(())
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_value(Value::Object(Default::default())).expect("all fields have defaults")
    }
}

fn default_window(net: &LoadedNetwork) -> String {
    match net {
        LoadedNetwork::Custom(n) => n.states().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","),
        LoadedNetwork::Preset(Preset::ThreeState(_)) => "1,2,3".into(),
        LoadedNetwork::Preset(Preset::Hypercube(h)) => format!("balls:{}", h.n_sites.min(8)),
        LoadedNetwork::Preset(p) => format!("{}:10", window_kind_name(p.default_window_kind())),
    }
}

pub fn window_kind_name(kind: WindowKind) -> &'static str {
    match kind {
        WindowKind::Balls => "balls",
        WindowKind::ShiftedBalls => "shifted_balls",
        WindowKind::Prefixes => "prefixes",
    }
}

pub fn parse_window_kind(s: &str) -> Result<WindowKind> {
    match s {
        "balls" => Ok(WindowKind::Balls),
        "shifted_balls" => Ok(WindowKind::ShiftedBalls),
        "prefixes" => Ok(WindowKind::Prefixes),
        _ => Err(CliError::Config(format!(
            "unknown window kind `{s}`; expected balls, shifted_balls or prefixes"
        ))),
    }
}

/// Sets `path` (dot-separated) inside a JSON object, creating objects on
/// the way. Values parse as JSON when possible and as strings otherwise.
pub fn set_path(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_value(root, path, value)
}

pub fn set_value(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                return Err(CliError::Config(format!("`{path}`: `{part}` is not inside an object")));
            }
        }
        let map = cur.as_object_mut().expect("checked above");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Default parameters of every named preset, for `list-presets`.
pub fn preset_defaults() -> BTreeMap<&'static str, Value> {
    PRESETS
        .iter()
        .filter_map(|&name| {
            let cfg = PresetConfig::default_for(name).ok()?;
            Some((name, serde_json::to_value(cfg).ok()?))
        })
        .collect()
}
