//! Settings shared by the config file and the command line.
//!
//! Both sources deserialize into [`FileConfig`]; command-line values win
//! field by field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{parse_solver, AreaSource, ExperimentError, ExperimentPlan, ReferenceTable};
use crate::analysis::Normalization;
use crate::geometry::{RadiationLayout, Termination};
use crate::solver::PhysicalConstants;

/// Every setting optional, keys spelled like the command-line flags.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub vowel: Option<Vec<String>>,
    pub area_file: Option<PathBuf>,
    pub area_dir: Option<PathBuf>,
    pub resolution: Option<Vec<String>>,
    pub solver: Option<Vec<String>>,
    pub mode: Option<String>,
    pub duration_ms: Option<f64>,
    pub baffle_diameter_m: Option<f64>,
    pub pml_layers: Option<usize>,
    pub mu: Option<f64>,
    pub rho: Option<f64>,
    pub c: Option<f64>,
    pub out: Option<PathBuf>,
    pub check: Option<bool>,
    pub workers: Option<usize>,
    pub audio_rate: Option<u32>,
    pub snapshot_every: Option<usize>,
    pub references: Option<PathBuf>,
    pub normalize: Option<bool>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::parse(&text)
    }

    /// Field-wise `self` if set, else `base`.
    pub fn over(self, base: FileConfig) -> FileConfig {
        FileConfig {
            vowel: self.vowel.or(base.vowel),
            area_file: self.area_file.or(base.area_file),
            area_dir: self.area_dir.or(base.area_dir),
            resolution: self.resolution.or(base.resolution),
            solver: self.solver.or(base.solver),
            mode: self.mode.or(base.mode),
            duration_ms: self.duration_ms.or(base.duration_ms),
            baffle_diameter_m: self.baffle_diameter_m.or(base.baffle_diameter_m),
            pml_layers: self.pml_layers.or(base.pml_layers),
            mu: self.mu.or(base.mu),
            rho: self.rho.or(base.rho),
            c: self.c.or(base.c),
            out: self.out.or(base.out),
            check: self.check.or(base.check),
            workers: self.workers.or(base.workers),
            audio_rate: self.audio_rate.or(base.audio_rate),
            snapshot_every: self.snapshot_every.or(base.snapshot_every),
            references: self.references.or(base.references),
            normalize: self.normalize.or(base.normalize),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    A,
    B,
    C,
    Simulate,
}

/// Fully resolved settings with defaults applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub plan: ExperimentPlan,
    pub check: bool,
}

/// Default location of the vowel area functions, relative to the working
/// directory.
pub const DEFAULT_AREA_DIR: &str = "data/area_functions";

impl Settings {
    pub fn resolve(cfg: FileConfig, step: StepKind) -> Result<Self, ExperimentError> {
        let vowels = match (&cfg.vowel, step) {
            (Some(v), _) => v.clone(),
            (None, StepKind::A | StepKind::B) => vec!["a".into(), "i".into(), "u".into()],
            (None, StepKind::C) => ["a", "e", "i", "o", "u"].map(String::from).to_vec(),
            (None, StepKind::Simulate) => match &cfg.area_file {
                Some(p) => vec![p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "tract".into())],
                None => return Err(ExperimentError::Config("simulate needs --vowel or --area-file".into())),
            },
        };
        let areas = match &cfg.area_file {
            Some(file) => {
                if vowels.len() != 1 {
                    return Err(ExperimentError::Config("--area-file takes exactly one vowel".into()));
                }
                AreaSource::Files(BTreeMap::from([(vowels[0].clone(), file.clone())]))
            }
            None => AreaSource::Directory(cfg.area_dir.clone().unwrap_or_else(|| DEFAULT_AREA_DIR.into())),
        };
        let mut plan = ExperimentPlan::new(vowels, areas);

        let default_res = match step {
            StepKind::B => vec!["low".into(), "mid".into(), "high".into()],
            _ => vec!["low".into()],
        };
        plan.resolutions = cfg
            .resolution
            .clone()
            .unwrap_or(default_res)
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?;
        if let Some(solvers) = &cfg.solver {
            plan.solver_kinds = solvers.iter().map(|s| parse_solver(s)).collect::<Result<_, _>>()?;
        }

        let mut layout = RadiationLayout::default();
        if let Some(d) = cfg.baffle_diameter_m {
            if !(d > 0.0) {
                return Err(ExperimentError::Parameter(format!("baffle diameter must be positive, got {d}")));
            }
            layout.baffle_diameter = d;
        }
        if let Some(n) = cfg.pml_layers {
            layout.pml_layers = n;
        }
        let default_mode = if step == StepKind::C { "radiation" } else { "open" };
        plan.termination = match cfg.mode.as_deref().unwrap_or(default_mode) {
            "open" => Termination::OpenEnd,
            "radiation" => Termination::Radiation(layout),
            other => return Err(ExperimentError::Parameter(format!("unknown mode '{other}' (open or radiation)"))),
        };

        let d = PhysicalConstants::default();
        plan.constants = PhysicalConstants {
            rho: cfg.rho.unwrap_or(d.rho),
            c: cfg.c.unwrap_or(d.c),
            mu: cfg.mu.unwrap_or(d.mu),
        };
        let ms = cfg.duration_ms.unwrap_or(50.0);
        if !(ms > 0.0) {
            return Err(ExperimentError::Parameter(format!("duration must be positive, got {ms} ms")));
        }
        plan.duration = ms * 1e-3;
        plan.output_dir = cfg.out.clone();
        plan.workers = cfg.workers.unwrap_or(0);
        plan.audio_rate = cfg.audio_rate;
        plan.snapshot_every = cfg.snapshot_every.filter(|&k| k > 0);
        if let Some(path) = &cfg.references {
            plan.references = Some(ReferenceTable::load(path)?);
        }
        if cfg.normalize.unwrap_or(false) {
            plan.normalization = Normalization::ExcitationNormalized;
        }
        Ok(Self {
            plan,
            check: cfg.check.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Resolution;
    use crate::solver::SolverKind;

    #[test]
    fn file_keys_mirror_flags() {
        let cfg = FileConfig::parse(
            r#"
vowel = ["a", "o"]
resolution = ["low", "0.5"]
solver = ["2d"]
mode = "radiation"
duration-ms = 30
baffle-diameter-m = 0.3
pml-layers = 8
mu = 0.01
rho = 1.2
c = 343
workers = 2
check = true
"#,
        )
        .unwrap();
        let s = Settings::resolve(cfg, StepKind::C).unwrap();
        assert_eq!(s.plan.vowels, vec!["a", "o"]);
        assert_eq!(s.plan.resolutions[1], Resolution::Custom(0.5e-3));
        assert_eq!(s.plan.solver_kinds, vec![SolverKind::TwoD]);
        match s.plan.termination {
            Termination::Radiation(l) => {
                assert_eq!(l.baffle_diameter, 0.3);
                assert_eq!(l.pml_layers, 8);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(s.plan.constants, PhysicalConstants { rho: 1.2, c: 343.0, mu: 0.01 });
        assert!((s.plan.duration - 0.03).abs() < 1e-15);
        assert_eq!(s.plan.workers, 2);
        assert!(s.check);
    }

    #[test]
    fn flags_override_file() {
        let file = FileConfig::parse("mu = 0.01\nrho = 1.2\nvowel = [\"a\"]\n").unwrap();
        let flags = FileConfig {
            mu: Some(0.02),
            ..Default::default()
        };
        let s = Settings::resolve(flags.over(file), StepKind::A).unwrap();
        assert_eq!(s.plan.constants.mu, 0.02);
        assert_eq!(s.plan.constants.rho, 1.2);
        assert_eq!(s.plan.vowels, vec!["a"]);
    }

    #[test]
    fn defaults_per_step() {
        let a = Settings::resolve(FileConfig::default(), StepKind::A).unwrap();
        assert_eq!(a.plan.vowels, vec!["a", "i", "u"]);
        assert_eq!(a.plan.termination, Termination::OpenEnd);
        assert_eq!(a.plan.constants, PhysicalConstants::default());
        assert_eq!(a.plan.duration, 0.05);
        let b = Settings::resolve(FileConfig::default(), StepKind::B).unwrap();
        assert_eq!(b.plan.resolutions, vec![Resolution::Low, Resolution::Mid, Resolution::High]);
        let c = Settings::resolve(FileConfig::default(), StepKind::C).unwrap();
        assert_eq!(c.plan.vowels.len(), 5);
        assert_eq!(c.plan.termination, Termination::Radiation(RadiationLayout::default()));
    }

    #[test]
    fn unknown_keys_and_values_are_rejected() {
        assert!(FileConfig::parse("speed = 3\n").is_err());
        let bad = FileConfig {
            mode: Some("closed".into()),
            ..Default::default()
        };
        assert!(Settings::resolve(bad, StepKind::A).is_err());
        assert!(Settings::resolve(FileConfig::default(), StepKind::Simulate).is_err());
    }

    #[test]
    fn area_file_names_the_run() {
        let cfg = FileConfig {
            area_file: Some("shapes/schwa.csv".into()),
            ..Default::default()
        };
        let s = Settings::resolve(cfg, StepKind::Simulate).unwrap();
        assert_eq!(s.plan.vowels, vec!["schwa"]);
        assert_eq!(s.plan.areas.path("schwa").unwrap(), PathBuf::from("shapes/schwa.csv"));
    }
}
