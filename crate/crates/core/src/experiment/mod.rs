//! Batch experiments: vowels x resolutions x solver kinds, run through
//! geometry, solver and analysis, with optional artefacts on disk.

mod config;
mod output;
mod references;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{
    extract_formants, positional_error, transfer_function, AnalysisError, FormantSet, Normalization,
    TransferFunction, FORMANT_BAND,
};
use crate::excitation::{band_pass_kernel, make_band_passed_pulse, ExcitationError, ExcitationSignal};
use crate::geometry::{
    build_geometry, load_area_function, AreaFormat, AreaFunction, GeometryError, RadiationLayout, Termination,
};
use crate::solver::{PhysicalConstants, PressureTrace, Simulation, SimulationConfig, SolverError, SolverKind};

pub use config::{FileConfig, Settings, StepKind};
pub use output::{export_audio, formant_report, read_snapshot, resample, write_snapshot, SNAPSHOT_MAGIC};
pub use references::{ExpectedDomain, ExpectedRun, ExpectedTable, ReferenceTable};

/// Excitation band, Hz.
pub const EXCITATION_BAND: (f64, f64) = (2.0, 20_000.0);

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    AreaFile {
        path: PathBuf,
        #[source]
        source: GeometryError,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Excitation(#[from] ExcitationError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("audio export failed: {0}")]
    Audio(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Grid spacing presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Resolution {
    /// 0.74 mm
    Low,
    /// 0.28 mm
    Mid,
    /// 0.18 mm
    High,
    /// Any spacing, in meters.
    Custom(f64),
}

impl Resolution {
    pub fn ds(self) -> f64 {
        match self {
            Resolution::Low => 0.74e-3,
            Resolution::Mid => 0.28e-3,
            Resolution::High => 0.18e-3,
            Resolution::Custom(ds) => ds,
        }
    }

    pub fn label(self) -> String {
        match self {
            Resolution::Low => "low".into(),
            Resolution::Mid => "mid".into(),
            Resolution::High => "high".into(),
            Resolution::Custom(ds) => format!("{}mm", ds * 1e3),
        }
    }
}

impl FromStr for Resolution {
    type Err = ExperimentError;

    /// `low`, `mid`, `high`, or a spacing in millimetres (`0.5`, `0.5mm`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(Resolution::Low),
            "mid" => Ok(Resolution::Mid),
            "high" => Ok(Resolution::High),
            other => {
                let mm: f64 = other
                    .trim_end_matches("mm")
                    .trim()
                    .parse()
                    .map_err(|_| ExperimentError::Parameter(format!("unknown resolution '{s}'")))?;
                if !(mm > 0.0) || !mm.is_finite() {
                    return Err(ExperimentError::Parameter(format!("resolution must be positive, got {s}")));
                }
                Ok(Resolution::Custom(mm * 1e-3))
            }
        }
    }
}

pub fn parse_solver(s: &str) -> Result<SolverKind, ExperimentError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "2d" => Ok(SolverKind::TwoD),
        "2.5d" | "25d" => Ok(SolverKind::TwoPointFiveD),
        _ => Err(ExperimentError::Parameter(format!("unknown solver '{s}' (2d or 2.5d)"))),
    }
}

/// Where vowel area functions come from.
#[derive(Clone, Debug, PartialEq)]
pub enum AreaSource {
    /// `<dir>/<vowel>.csv`
    Directory(PathBuf),
    /// Explicit file per vowel.
    Files(BTreeMap<String, PathBuf>),
}

impl AreaSource {
    pub fn path(&self, vowel: &str) -> Option<PathBuf> {
        match self {
            AreaSource::Directory(dir) => Some(dir.join(format!("{vowel}.csv"))),
            AreaSource::Files(map) => map.get(vowel).cloned(),
        }
    }

    pub fn load(&self, vowel: &str) -> Result<AreaFunction, ExperimentError> {
        let path = self
            .path(vowel)
            .ok_or_else(|| ExperimentError::Parameter(format!("no area function configured for '{vowel}'")))?;
        load_area_file(&path, vowel)
    }
}

/// Reads an area-function CSV (with a units header).
pub fn load_area_file(path: &Path, name: &str) -> Result<AreaFunction, ExperimentError> {
    let file = std::fs::File::open(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut af = load_area_function(file, AreaFormat::Csv).map_err(|source| ExperimentError::AreaFile {
        path: path.to_path_buf(),
        source,
    })?;
    af.set_name(name);
    Ok(af)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub vowels: Vec<String>,
    pub areas: AreaSource,
    pub resolutions: Vec<Resolution>,
    pub solver_kinds: Vec<SolverKind>,
    pub termination: Termination,
    /// Simulated time, s.
    pub duration: f64,
    pub constants: PhysicalConstants,
    pub output_dir: Option<PathBuf>,
    /// Parallel runs; 0 uses every core.
    pub workers: usize,
    /// Write a WAV file at this rate next to each trace.
    pub audio_rate: Option<u32>,
    /// Dump the pressure field every this many steps.
    pub snapshot_every: Option<usize>,
    /// Overrides the shipped reference formants.
    pub references: Option<ReferenceTable>,
    pub normalization: Normalization,
}

impl ExperimentPlan {
    pub fn new(vowels: Vec<String>, areas: AreaSource) -> Self {
        Self {
            vowels,
            areas,
            resolutions: vec![Resolution::Low],
            solver_kinds: vec![SolverKind::TwoPointFiveD],
            termination: Termination::OpenEnd,
            duration: 0.05,
            constants: PhysicalConstants::default(),
            output_dir: None,
            workers: 0,
            audio_rate: None,
            snapshot_every: None,
            references: None,
            normalization: Normalization::RawSpectrum,
        }
    }

    /// Runs in plan order: vowel, then resolution, then solver kind.
    pub fn entries(&self) -> Vec<RunEntry> {
        let mut out = Vec::new();
        for v in &self.vowels {
            for &r in &self.resolutions {
                for &s in &self.solver_kinds {
                    out.push(RunEntry {
                        vowel: v.clone(),
                        resolution: r,
                        solver: s,
                        termination: self.termination,
                    });
                }
            }
        }
        out
    }

    fn reference_table(&self) -> ReferenceTable {
        self.references
            .clone()
            .unwrap_or_else(|| ReferenceTable::builtin(&self.termination))
    }

    pub fn simulation_config(&self, entry: &RunEntry) -> SimulationConfig {
        let mut cfg = SimulationConfig::new(entry.resolution.ds(), entry.termination, entry.solver)
            .with_constants(self.constants);
        cfg.duration = self.duration;
        cfg
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunEntry {
    pub vowel: String,
    pub resolution: Resolution,
    pub solver: SolverKind,
    pub termination: Termination,
}

impl RunEntry {
    /// File stem for this run's artefacts.
    pub fn stem(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.vowel,
            self.termination.label(),
            self.resolution.label(),
            self.solver.label()
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub entry: RunEntry,
    /// `(width, height)` in cells.
    pub domain_size: (usize, usize),
    pub steps: usize,
    /// Seconds spent in the time loop.
    pub wall_clock: f64,
    pub formants: Option<FormantSet>,
    pub reference: Option<[f64; 3]>,
    /// Signed positional errors against `reference`, percent.
    pub errors: Option<[f64; 3]>,
    pub analysis_error: Option<String>,
}

/// Everything a single run produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub trace: PressureTrace,
    pub transfer: Option<TransferFunction>,
}

/// The excitation used for every run: the band-passed pulse spanning the
/// whole trace. Runs shorter than the filter kernel get the leading part of
/// the full pulse.
pub fn standard_excitation(sample_rate: f64, steps: usize) -> Result<ExcitationSignal, ExcitationError> {
    let taps = band_pass_kernel(sample_rate, EXCITATION_BAND)?.len();
    let mut signal = make_band_passed_pulse(sample_rate, steps.max(taps), EXCITATION_BAND, 1.0)?;
    signal.samples.truncate(steps);
    Ok(signal)
}

/// Transfer function, formants and errors for a finished trace.
pub fn analyse_trace(
    trace: &PressureTrace,
    normalization: Normalization,
    reference: Option<[f64; 3]>,
) -> (Option<TransferFunction>, Option<FormantSet>, Option<[f64; 3]>, Option<String>) {
    let excitation = match normalization {
        Normalization::RawSpectrum => ExcitationSignal::zeros(trace.sample_rate, 0),
        Normalization::ExcitationNormalized => match standard_excitation(trace.sample_rate, trace.samples.len()) {
            Ok(e) => e,
            Err(e) => return (None, None, None, Some(e.to_string())),
        },
    };
    let tf = match transfer_function(trace, &excitation, normalization) {
        Ok(tf) => tf,
        Err(e) => return (None, None, None, Some(e.to_string())),
    };
    let fs = match extract_formants(&tf, 3, FORMANT_BAND) {
        Ok(fs) => fs,
        Err(e) => return (Some(tf), None, None, Some(e.to_string())),
    };
    let errors = reference.and_then(|r| {
        let e: Result<Vec<f64>, _> = fs.frequencies.iter().zip(r).map(|(m, r)| positional_error(*m, r)).collect();
        e.ok().map(|v| [v[0], v[1], v[2]])
    });
    (Some(tf), Some(fs), errors, None)
}

/// Builds, runs and analyses one entry, writing artefacts when the plan has
/// an output directory.
pub fn run_entry(plan: &ExperimentPlan, entry: &RunEntry, af: &AreaFunction) -> Result<RunOutput, ExperimentError> {
    let cfg = plan.simulation_config(entry);
    let sim = Simulation::new(af, cfg.clone())?;
    let excitation = standard_excitation(cfg.sample_rate(), cfg.steps())?;
    let domain_size = (sim.geometry().width, sim.geometry().height);

    let snap_dir = plan.output_dir.as_ref().filter(|_| plan.snapshot_every.is_some());
    if let Some(dir) = snap_dir {
        std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    }
    let every = plan.snapshot_every.unwrap_or(0).max(1);
    let mut snap_err = None;
    let start = Instant::now();
    let trace = sim.run_observed(&excitation, |n, grid| {
        if let Some(dir) = snap_dir {
            if (n + 1) % every == 0 && snap_err.is_none() {
                let path = dir.join(format!("{}.snap{:06}.bin", entry.stem(), n + 1));
                snap_err = write_snapshot(grid, n + 1, &path).err();
            }
        }
    })?;
    let wall_clock = start.elapsed().as_secs_f64();
    if let Some(e) = snap_err {
        return Err(e);
    }

    let reference = plan.reference_table().get(&entry.vowel);
    let (transfer, formants, errors, analysis_error) = analyse_trace(&trace, plan.normalization, reference);
    let report = RunReport {
        entry: entry.clone(),
        domain_size,
        steps: trace.samples.len(),
        wall_clock,
        formants,
        reference,
        errors,
        analysis_error,
    };
    if let Some(dir) = &plan.output_dir {
        write_artifacts(dir, &report, &trace, transfer.as_ref(), plan.audio_rate)?;
    }
    Ok(RunOutput {
        report,
        trace,
        transfer,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, text).map_err(|e| ExperimentError::io(path, e))
}

fn write_artifacts(
    dir: &Path,
    report: &RunReport,
    trace: &PressureTrace,
    transfer: Option<&TransferFunction>,
    audio_rate: Option<u32>,
) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let stem = report.entry.stem();
    write_text(&dir.join(format!("{stem}.trace.txt")), &trace.to_text())?;
    if let Some(tf) = transfer {
        write_text(&dir.join(format!("{stem}.spectrum.txt")), &tf.to_text())?;
    }
    write_text(&dir.join(format!("{stem}.formants.toml")), &formant_report(report))?;
    if let Some(rate) = audio_rate {
        export_audio(trace, rate, &dir.join(format!("{stem}.wav")))?;
    }
    Ok(())
}

/// Reports of a whole plan, in plan order.
#[derive(Debug, Default)]
pub struct StepOutcome {
    pub reports: Vec<RunReport>,
    /// Vowels skipped because their area file is absent.
    pub missing: Vec<(String, PathBuf)>,
    /// Runs that failed outright.
    pub failures: Vec<(RunEntry, String)>,
}

impl StepOutcome {
    /// No missing inputs, failed runs or failed analyses.
    pub fn success(&self) -> bool {
        self.missing.is_empty()
            && self.failures.is_empty()
            && self.reports.iter().all(|r| r.analysis_error.is_none())
    }
}

/// Runs every entry of the plan, up to `plan.workers` at a time.
pub fn run_plan(plan: &ExperimentPlan) -> Result<StepOutcome, ExperimentError> {
    let mut outcome = StepOutcome::default();
    let mut areas = BTreeMap::new();
    for v in &plan.vowels {
        let path = plan.areas.path(v);
        match path {
            Some(p) if p.is_file() => {
                areas.insert(v.clone(), load_area_file(&p, v)?);
            }
            Some(p) => outcome.missing.push((v.clone(), p)),
            None => outcome.missing.push((v.clone(), PathBuf::new())),
        }
    }
    let entries: Vec<RunEntry> = plan.entries().into_iter().filter(|e| areas.contains_key(&e.vowel)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let results: Vec<Result<RunOutput, ExperimentError>> =
        pool.install(|| entries.par_iter().map(|e| run_entry(plan, e, &areas[&e.vowel])).collect());
    for (entry, result) in entries.into_iter().zip(results) {
        match result {
            Ok(out) => outcome.reports.push(out.report),
            Err(e) => outcome.failures.push((entry, e.to_string())),
        }
    }
    Ok(outcome)
}

/// Open-end runs with both solver kinds.
pub fn run_step_a(plan: &ExperimentPlan) -> Result<StepOutcome, ExperimentError> {
    let mut plan = plan.clone();
    plan.termination = Termination::OpenEnd;
    plan.solver_kinds = vec![SolverKind::TwoD, SolverKind::TwoPointFiveD];
    run_plan(&plan)
}

/// Same runs as step A; the interesting output is the run-time table.
pub fn run_step_b(plan: &ExperimentPlan) -> Result<StepOutcome, ExperimentError> {
    run_step_a(plan)
}

/// Radiation runs with the 2.5D solver.
pub fn run_step_c(plan: &ExperimentPlan) -> Result<StepOutcome, ExperimentError> {
    let mut plan = plan.clone();
    if !plan.termination.is_radiation() {
        plan.termination = Termination::Radiation(RadiationLayout::default());
    }
    plan.solver_kinds = vec![SolverKind::TwoPointFiveD];
    run_plan(&plan)
}

/// Formant table, one row per report.
pub fn formant_table(reports: &[RunReport]) -> String {
    let mut out = String::from("vowel\tmode\tresolution\tsolver\tf1\tf2\tf3\terr1\terr2\terr3\n");
    for r in reports {
        let e = &r.entry;
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}",
            e.vowel,
            e.termination.label(),
            e.resolution.label(),
            e.solver.label()
        );
        match &r.formants {
            Some(fs) => {
                for f in &fs.frequencies {
                    let _ = write!(out, "\t{f:.0}");
                }
            }
            None => out.push_str("\t-\t-\t-"),
        }
        match &r.errors {
            Some(errs) => {
                for v in errs {
                    let _ = write!(out, "\t{v:.2}");
                }
            }
            None => out.push_str("\t-\t-\t-"),
        }
        out.push('\n');
    }
    out
}

/// Domain size and time-loop duration, one row per report.
pub fn runtime_table(reports: &[RunReport]) -> String {
    let mut out = String::from("vowel\tresolution\tsolver\tdomain\tsteps\tseconds\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}x{}\t{}\t{:.3}",
            r.entry.vowel,
            r.entry.resolution.label(),
            r.entry.solver.label(),
            r.domain_size.0,
            r.domain_size.1,
            r.steps,
            r.wall_clock
        );
    }
    out
}

/// One comparison against a published value.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

/// Compares formants (and, for `check_domains`, open-end domain sizes)
/// against the expectation table. Runs without a published counterpart are
/// not checked.
pub fn check_reports(reports: &[RunReport], expected: &ExpectedTable, check_domains: bool) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for r in reports {
        let e = &r.entry;
        let res = e.resolution.label();
        let label = e.stem();
        if let Some(want) = expected.formants(&e.termination, &e.vowel, &res, e.solver) {
            let (passed, detail) = match &r.formants {
                Some(fs) => {
                    let ok = fs
                        .frequencies
                        .iter()
                        .zip(want)
                        .all(|(f, w)| (f - w).abs() <= expected.tolerance_hz);
                    (
                        ok,
                        format!(
                            "got {:?} Hz, expected {:?} Hz +/- {} Hz",
                            fs.frequencies.iter().map(|f| f.round()).collect::<Vec<_>>(),
                            want,
                            expected.tolerance_hz
                        ),
                    )
                }
                None => (false, r.analysis_error.clone().unwrap_or_default()),
            };
            out.push(CheckResult {
                label: label.clone(),
                passed,
                detail,
            });
        }
        if check_domains && !e.termination.is_radiation() {
            if let Some(want) = expected.domain(&e.vowel, &res) {
                out.push(CheckResult {
                    label: format!("{label} domain"),
                    passed: r.domain_size == want,
                    detail: format!(
                        "got {}x{}, expected {}x{}",
                        r.domain_size.0, r.domain_size.1, want.0, want.1
                    ),
                });
            }
        }
    }
    out
}

/// Domain size for a vowel without running the solver.
pub fn domain_size_for(af: &AreaFunction, resolution: Resolution, termination: Termination) -> Result<(usize, usize), ExperimentError> {
    let geo = build_geometry(af, resolution.ds(), termination)?;
    Ok((geo.width, geo.height))
}
