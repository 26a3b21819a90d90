//! Reference formants and published run results.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::ExperimentError;
use crate::geometry::Termination;
use crate::solver::SolverKind;

const OPEN_END_REFERENCES: &str = include_str!("../../data/references/open_end.toml");
const RADIATION_REFERENCES: &str = include_str!("../../data/references/radiation.toml");
const EXPECTED: &str = include_str!("../../data/references/expected.toml");

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
struct Triple {
    f1: f64,
    f2: f64,
    f3: f64,
}

/// Reference F1-F3 per vowel label.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReferenceTable {
    pub formants: BTreeMap<String, [f64; 3]>,
}

impl ReferenceTable {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let raw: BTreeMap<String, Triple> =
            toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(Self {
            formants: raw.into_iter().map(|(k, t)| (k, [t.f1, t.f2, t.f3])).collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::parse(&text)
    }

    /// Shipped table for the given termination.
    pub fn builtin(termination: &Termination) -> Self {
        let text = match termination {
            Termination::OpenEnd => OPEN_END_REFERENCES,
            Termination::Radiation(_) => RADIATION_REFERENCES,
        };
        Self::parse(text).expect("shipped reference table parses")
    }

    pub fn get(&self, vowel: &str) -> Option<[f64; 3]> {
        self.formants.get(vowel).copied()
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct ExpectedRun {
    pub vowel: String,
    pub resolution: String,
    pub solver: String,
    pub formants: [f64; 3],
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct ExpectedDomain {
    pub vowel: String,
    pub resolution: String,
    pub size: [usize; 2],
}

/// Published results that `--check` compares against.
#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct ExpectedTable {
    pub tolerance_hz: f64,
    #[serde(default)]
    pub open: Vec<ExpectedRun>,
    #[serde(default)]
    pub radiation: Vec<ExpectedRun>,
    #[serde(default)]
    pub domain: Vec<ExpectedDomain>,
}

impl ExpectedTable {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn builtin() -> Self {
        Self::parse(EXPECTED).expect("shipped expectation table parses")
    }

    pub fn formants(
        &self,
        termination: &Termination,
        vowel: &str,
        resolution: &str,
        solver: SolverKind,
    ) -> Option<[f64; 3]> {
        let rows = match termination {
            Termination::OpenEnd => &self.open,
            Termination::Radiation(_) => &self.radiation,
        };
        rows.iter()
            .find(|r| r.vowel == vowel && r.resolution == resolution && r.solver == solver.label())
            .map(|r| r.formants)
    }

    pub fn domain(&self, vowel: &str, resolution: &str) -> Option<(usize, usize)> {
        self.domain
            .iter()
            .find(|r| r.vowel == vowel && r.resolution == resolution)
            .map(|r| (r.size[0], r.size[1]))
    }
}
