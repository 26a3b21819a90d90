use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use tract25d::analysis::Normalization;
use tract25d::experiment::{
    analyse_trace, check_reports, formant_table, runtime_table, run_plan, run_step_a, run_step_b, run_step_c,
    ExpectedTable, FileConfig, ReferenceTable, Settings, StepKind, StepOutcome,
};
use tract25d::geometry::{RadiationLayout, Termination};
use tract25d::solver::PressureTrace;

#[derive(Parser)]
#[command(name = "tract25d", version, about = "FDTD vocal-tract simulations in 2D and 2.5D")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Open-end transfer functions with both solvers.
    StepA(Common),
    /// Domain sizes and run times across resolutions.
    StepB(Common),
    /// Radiation through a baffle into a free field.
    StepC(Common),
    /// A single configuration.
    Simulate(Common),
    /// Formants of a recorded trace file.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Config file (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Vowel labels, comma separated.
    #[arg(long, value_delimiter = ',')]
    vowel: Option<Vec<String>>,
    /// Area-function CSV for a single vowel.
    #[arg(long)]
    area_file: Option<PathBuf>,
    /// Directory holding `<vowel>.csv` area functions.
    #[arg(long)]
    area_dir: Option<PathBuf>,
    /// low, mid, high or a spacing in mm; comma separated.
    #[arg(long, value_delimiter = ',')]
    resolution: Option<Vec<String>>,
    /// 2d or 2.5d; comma separated.
    #[arg(long, value_delimiter = ',')]
    solver: Option<Vec<String>>,
    /// open or radiation.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    duration_ms: Option<f64>,
    #[arg(long)]
    baffle_diameter_m: Option<f64>,
    #[arg(long)]
    pml_layers: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Output directory for traces, spectra and reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare formants with the published values; nonzero exit on mismatch.
    #[arg(long)]
    check: bool,
    /// Parallel runs (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Also write WAV audio at this rate.
    #[arg(long)]
    audio_rate: Option<u32>,
    /// Dump the pressure field every N steps.
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Reference formant table (TOML) for the error columns.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Divide by the excitation spectrum before peak picking.
    #[arg(long)]
    normalize: bool,
}

impl Common {
    fn file_config(&self) -> Result<FileConfig> {
        let flags = FileConfig {
            vowel: self.vowel.clone(),
            area_file: self.area_file.clone(),
            area_dir: self.area_dir.clone(),
            resolution: self.resolution.clone(),
            solver: self.solver.clone(),
            mode: self.mode.clone(),
            duration_ms: self.duration_ms,
            baffle_diameter_m: self.baffle_diameter_m,
            pml_layers: self.pml_layers,
            mu: self.mu,
            rho: self.rho,
            c: self.c,
            out: self.out.clone(),
            check: self.check.then_some(true),
            workers: self.workers,
            audio_rate: self.audio_rate,
            snapshot_every: self.snapshot_every,
            references: self.references.clone(),
            normalize: self.normalize.then_some(true),
        };
        let file = match &self.config {
            Some(p) => FileConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => FileConfig::default(),
        };
        Ok(flags.over(file))
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Trace file written by a previous run.
    trace: PathBuf,
    /// Vowel label, for the error columns.
    #[arg(long)]
    vowel: Option<String>,
    /// open or radiation, selects the reference table.
    #[arg(long, default_value = "open")]
    mode: String,
    /// Reference formant table (TOML).
    #[arg(long)]
    references: Option<PathBuf>,
    #[arg(long)]
    normalize: bool,
    /// Write the spectrum here.
    #[arg(long)]
    spectrum: Option<PathBuf>,
}

fn print_outcome(outcome: &StepOutcome, step: StepKind) {
    for (vowel, path) in &outcome.missing {
        eprintln!("missing area function for /{vowel}/: {}", path.display());
    }
    for (entry, err) in &outcome.failures {
        eprintln!("{} failed: {err}", entry.stem());
    }
    for r in &outcome.reports {
        if let Some(e) = &r.analysis_error {
            eprintln!("{}: {e}", r.entry.stem());
        }
    }
    print!("{}", formant_table(&outcome.reports));
    if step == StepKind::B {
        println!();
        print!("{}", runtime_table(&outcome.reports));
    }
}

fn run_step(step: StepKind, args: &Common) -> Result<bool> {
    let cfg = args.file_config()?;
    let settings = Settings::resolve(cfg, step)?;
    let outcome = match step {
        StepKind::A => run_step_a(&settings.plan)?,
        StepKind::B => run_step_b(&settings.plan)?,
        StepKind::C => run_step_c(&settings.plan)?,
        StepKind::Simulate => run_plan(&settings.plan)?,
    };
    print_outcome(&outcome, step);
    if let Some(dir) = &settings.plan.output_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("formants.tsv"), formant_table(&outcome.reports))?;
        std::fs::write(dir.join("runtime.tsv"), runtime_table(&outcome.reports))?;
    }
    let mut ok = outcome.success();
    if settings.check {
        let results = check_reports(&outcome.reports, &ExpectedTable::builtin(), step == StepKind::B);
        for r in &results {
            println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.label, r.detail);
        }
        ok &= results.iter().all(|r| r.passed);
    }
    Ok(ok)
}

fn analyze(args: &AnalyzeArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.trace).with_context(|| format!("reading {}", args.trace.display()))?;
    let trace = PressureTrace::from_text(&text)?;
    let termination = match args.mode.as_str() {
        "open" => Termination::OpenEnd,
        "radiation" => Termination::Radiation(RadiationLayout::default()),
        other => anyhow::bail!("unknown mode '{other}'"),
    };
    let table = match &args.references {
        Some(p) => ReferenceTable::load(p)?,
        None => ReferenceTable::builtin(&termination),
    };
    let reference = args.vowel.as_deref().and_then(|v| table.get(v));
    let norm = if args.normalize {
        Normalization::ExcitationNormalized
    } else {
        Normalization::RawSpectrum
    };
    let (tf, fs, errors, err) = analyse_trace(&trace, norm, reference);
    if let (Some(path), Some(tf)) = (&args.spectrum, &tf) {
        std::fs::write(path, tf.to_text())?;
    }
    if let Some(v) = &args.vowel {
        println!("vowel = \"{v}\"");
    }
    println!("mode = \"{}\"", termination.label());
    if let Some(fs) = &fs {
        for (k, f) in fs.frequencies.iter().enumerate() {
            println!("f{} = {:.1}", k + 1, f);
        }
    }
    if let Some(errs) = errors {
        for (k, e) in errs.iter().enumerate() {
            println!("err{} = {:.2}", k + 1, e);
        }
    }
    if let Some(e) = &err {
        eprintln!("{e}");
    }
    Ok(err.is_none())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::StepA(a) => run_step(StepKind::A, a),
        Command::StepB(a) => run_step(StepKind::B, a),
        Command::StepC(a) => run_step(StepKind::C, a),
        Command::Simulate(a) => run_step(StepKind::Simulate, a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
