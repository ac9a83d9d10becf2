use std::path::Path;

use ctmc_trunc_core::presets::Preset;
use ctmc_trunc_core::{EdgeListNetwork, FiniteSubset, LabelKind, Network, StateLabel, WindowKind};

use crate::error::Result;

/// A preset or a network read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedNetwork {
    Preset(Preset),
    Custom(EdgeListNetwork),
}

impl LoadedNetwork {
    pub fn from_edge_list(path: &Path) -> Result<LoadedNetwork> {
        Ok(LoadedNetwork::Custom(crate::io::read_edge_list(path)?))
    }

    pub fn root(&self) -> StateLabel {
        match self {
            LoadedNetwork::Preset(p) => p.root(),
            LoadedNetwork::Custom(n) => n.states()[0],
        }
    }

    pub fn default_window_kind(&self) -> WindowKind {
        match self {
            LoadedNetwork::Preset(p) => p.default_window_kind(),
            LoadedNetwork::Custom(_) => WindowKind::Prefixes,
        }
    }

    pub fn as_preset(&self) -> Option<&Preset> {
        match self {
            LoadedNetwork::Preset(p) => Some(p),
            LoadedNetwork::Custom(_) => None,
        }
    }

    /// Parses a window as `<kind>:<n>` or as a comma-separated label list.
    pub fn parse_window(&self, spec: &str) -> Result<FiniteSubset> {
        let spec = spec.trim();
        if let Some((kind, n)) = spec.split_once(':') {
            if let Ok(kind) = crate::config::parse_window_kind(kind) {
                let n = n
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| crate::CliError::Config(format!("bad window size in `{spec}`")))?;
                return Ok(self.window(kind, n)?);
            }
        }
        let labels = spec
            .split(',')
            .map(|s| self.parse_label(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(FiniteSubset::new(labels)?)
    }

    /// Parses a label; bare integers are read in this network's label kind.
    pub fn parse_label(&self, s: &str) -> Result<StateLabel> {
        let s = s.trim();
        if let (LabelKind::Int, Ok(z)) = (self.label_kind(), s.parse::<i64>()) {
            return Ok(StateLabel::Int(z));
        }
        let l: StateLabel = s.parse()?;
        if l.kind() != self.label_kind() {
            return Err(crate::CliError::Config(format!(
                "label `{s}` is {:?} but the network uses {:?} labels",
                l.kind(),
                self.label_kind()
            )));
        }
        Ok(l)
    }
}

impl Network for LoadedNetwork {
    fn name(&self) -> &str {
        match self {
            LoadedNetwork::Preset(p) => p.name(),
            LoadedNetwork::Custom(n) => n.name(),
        }
    }

    fn label_kind(&self) -> LabelKind {
        match self {
            LoadedNetwork::Preset(p) => p.label_kind(),
            LoadedNetwork::Custom(n) => n.label_kind(),
        }
    }

    fn push_out_edges(&self, state: StateLabel, out: &mut Vec<(StateLabel, f64)>) {
        match self {
            LoadedNetwork::Preset(p) => p.push_out_edges(state, out),
            LoadedNetwork::Custom(n) => n.push_out_edges(state, out),
        }
    }

    fn window(&self, kind: WindowKind, n: u64) -> ctmc_trunc_core::Result<FiniteSubset> {
        match self {
            LoadedNetwork::Preset(p) => p.window(kind, n),
            LoadedNetwork::Custom(c) => c.window(kind, n),
        }
    }
}
