//! JSON run configuration. Every key is optional at parse time; each
//! subcommand asks for the keys it needs, and errors name the key.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ambiguity::{validate_ambiguity_set, AmbiguitySet, RawAmbiguitySet};
use crate::counterexamples::ParametricFamily;
use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::lattice_dp::{DpOptions, PathEvent, Scale, Side, DEFAULT_STATE_BUDGET};
use crate::lln::Source;
use crate::oracle::DEFAULT_ENUMERATION_BUDGET;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub step: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub states: Option<u64>,
    pub enumeration: Option<u64>,
}

/// Kernel policy driving a simulation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    /// The maximizing policy extracted from the robust recursion.
    #[default]
    Robust,
    /// Always the generator with this index.
    Constant(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: Option<LatticeConfig>,
    pub generators: Option<Vec<Vec<(f64, f64)>>>,
    pub family: Option<ParametricFamily>,
    pub function: Option<TestFunction>,
    pub scale: Option<Scale>,
    pub side: Option<Side>,
    pub horizons: Option<Vec<u64>>,
    pub event: Option<PathEvent>,
    pub threshold: Option<f64>,
    pub alpha: Option<f64>,
    pub c: Option<f64>,
    pub eps: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub ms: Option<Vec<u64>>,
    pub policy: Option<PolicyConfig>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub budgets: Option<Budgets>,
    pub out: Option<PathBuf>,
}

/// Prefixes an error message with the config key it concerns, keeping its kind.
pub fn keyed(key: &str, e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{key}: {m}")),
        Error::UnboundedFunction(m) => Error::UnboundedFunction(format!("{key}: {m}")),
        Error::UnsupportedEvent(m) => Error::UnsupportedEvent(format!("{key}: {m}")),
        other if other.is_budget() => other,
        other => Error::InvalidArgument(format!("{key}: {other}")),
    }
}

fn missing(key: &str) -> Error {
    Error::InvalidArgument(format!("{key}: required by this subcommand"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn set(&self) -> Result<AmbiguitySet> {
        let generators = self.generators.clone().ok_or_else(|| missing("generators"))?;
        let step = self.lattice.map_or(1.0, |l| l.step);
        validate_ambiguity_set(&RawAmbiguitySet { step, generators }).map_err(|e| match e {
            Error::InvalidArgument(m) if self.lattice.is_some() && m.contains("step") => {
                Error::InvalidArgument(format!("lattice.step: {m}"))
            }
            other => keyed("generators", other),
        })
    }

    pub fn family(&self) -> Result<ParametricFamily> {
        let fam = self.family.ok_or_else(|| missing("family"))?;
        fam.validate().map_err(|e| keyed("family.truncation", e))?;
        Ok(fam)
    }

    /// The finite set if `generators` is given, else the family.
    pub fn source(&self) -> Result<Source> {
        match (&self.generators, &self.family) {
            (Some(_), Some(_)) => Err(Error::InvalidArgument(
                "generators: give either generators or family, not both".into(),
            )),
            (Some(_), None) => Ok(Source::Set(self.set()?)),
            (None, Some(_)) => Ok(Source::Family(self.family()?)),
            (None, None) => Err(missing("generators")),
        }
    }

    pub fn function(&self) -> Result<TestFunction> {
        let f = self.function.clone().ok_or_else(|| missing("function"))?;
        f.validate().map_err(|e| keyed("function", e))?;
        Ok(f)
    }

    pub fn event(&self) -> Result<PathEvent> {
        self.event.ok_or_else(|| missing("event"))
    }

    pub fn horizons(&self) -> Result<Vec<u64>> {
        let h = self.horizons.clone().ok_or_else(|| missing("horizons"))?;
        if h.is_empty() || h.contains(&0) {
            return Err(Error::InvalidArgument(
                "horizons: must be a non-empty list of positive integers".into(),
            ));
        }
        Ok(h)
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        let v = match key {
            "alpha" => self.alpha,
            "c" => self.c,
            "eps" => self.eps,
            "threshold" => self.threshold,
            _ => None,
        };
        let v = v.ok_or_else(|| missing(key))?;
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{key}: must be finite")));
        }
        Ok(v)
    }

    pub fn dp_options(&self) -> DpOptions {
        DpOptions {
            scale: self.scale.unwrap_or_default(),
            state_budget: self.state_budget(),
        }
    }

    pub fn state_budget(&self) -> u64 {
        self.budgets.and_then(|b| b.states).unwrap_or(DEFAULT_STATE_BUDGET)
    }

    pub fn enumeration_budget(&self) -> u64 {
        self.budgets
            .and_then(|b| b.enumeration)
            .unwrap_or(DEFAULT_ENUMERATION_BUDGET)
    }
}
