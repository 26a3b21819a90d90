//! End-to-end runs through the library pipeline and the command-line tool.

use std::path::Path;
use std::process::Command;

use tract25d::analysis::Normalization;
use tract25d::experiment::{analyse_trace, read_snapshot, run_plan, AreaSource, ExperimentPlan};
use tract25d::geometry::{AreaFunction, Termination};
use tract25d::solver::{PressureTrace, SolverKind};

fn write_uniform(dir: &Path, name: &str) {
    let af = AreaFunction::uniform(name, 0.175, 0.02).unwrap();
    std::fs::write(dir.join(format!("{name}.csv")), af.to_csv()).unwrap();
}

fn tool() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tract25d"))
}

fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{report}"))
        .parse()
        .unwrap()
}

#[test]
fn plan_writes_artefacts_that_reanalyse_to_the_same_formants() {
    let dir = tempfile::tempdir().unwrap();
    write_uniform(dir.path(), "tube");
    let mut plan = ExperimentPlan::new(vec!["tube".into()], AreaSource::Directory(dir.path().into()));
    plan.solver_kinds = vec![SolverKind::TwoD, SolverKind::TwoPointFiveD];
    plan.output_dir = Some(dir.path().join("out"));
    plan.audio_rate = Some(16_000);
    let outcome = run_plan(&plan).unwrap();
    assert!(outcome.success());
    assert_eq!(outcome.reports.len(), 2);
    assert_eq!(outcome.reports[0].entry.solver, SolverKind::TwoD);

    let out = dir.path().join("out");
    for r in &outcome.reports {
        let stem = r.entry.stem();
        let report = std::fs::read_to_string(out.join(format!("{stem}.formants.toml"))).unwrap();
        let fs = r.formants.as_ref().unwrap();
        for (k, f) in fs.frequencies.iter().enumerate() {
            assert!((value(&report, &format!("f{}", k + 1)) - f).abs() < 0.05);
        }
        let text = std::fs::read_to_string(out.join(format!("{stem}.trace.txt"))).unwrap();
        let trace = PressureTrace::from_text(&text).unwrap();
        assert_eq!(trace.samples.len(), r.steps);
        let (_, again, _, err) = analyse_trace(&trace, Normalization::RawSpectrum, None);
        assert!(err.is_none());
        assert_eq!(again.unwrap().frequencies, fs.frequencies);
        assert!(out.join(format!("{stem}.spectrum.txt")).is_file());
        let wav = hound::WavReader::open(out.join(format!("{stem}.wav"))).unwrap();
        assert_eq!(wav.spec().sample_rate, 16_000);
        assert_eq!(wav.len(), 800);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_uniform(dir.path(), "tube");
    let mut plan = ExperimentPlan::new(vec!["tube".into()], AreaSource::Directory(dir.path().into()));
    plan.duration = 0.01;
    plan.termination = Termination::Radiation(Default::default());
    plan.output_dir = Some(dir.path().join("first"));
    run_plan(&plan).unwrap();
    plan.output_dir = Some(dir.path().join("second"));
    plan.workers = 1;
    run_plan(&plan).unwrap();
    let name = "tube_radiation_low_2.5d.trace.txt";
    let a = std::fs::read(dir.path().join("first").join(name)).unwrap();
    let b = std::fs::read(dir.path().join("second").join(name)).unwrap();
    assert!(a == b);
}

#[test]
fn snapshots_cover_the_domain() {
    let dir = tempfile::tempdir().unwrap();
    write_uniform(dir.path(), "tube");
    let mut plan = ExperimentPlan::new(vec!["tube".into()], AreaSource::Directory(dir.path().into()));
    plan.duration = 0.001;
    plan.output_dir = Some(dir.path().join("out"));
    plan.snapshot_every = Some(200);
    let outcome = run_plan(&plan).unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    let (w, h) = outcome.reports[0].domain_size;
    let mut snaps: Vec<_> = std::fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    snaps.sort();
    assert_eq!(snaps.len(), outcome.reports[0].steps / 200);
    let (sw, sh, step, values) = read_snapshot(&snaps[0]).unwrap();
    assert_eq!((sw, sh, step), (w, h, 200));
    assert_eq!(values.len(), w * h);
    assert!(values.iter().any(|v| *v != 0.0));
}

#[test]
fn cli_simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    write_uniform(dir.path(), "tube");
    let out = dir.path().join("out");
    let run = tool()
        .args(["simulate", "--area-file"])
        .arg(dir.path().join("tube.csv"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let table = String::from_utf8(run.stdout).unwrap();
    assert!(table.contains("tube"), "{table}");
    assert!(out.join("formants.tsv").is_file());

    let analyzed = tool()
        .arg("analyze")
        .arg(out.join("tube_open_low_2.5d.trace.txt"))
        .output()
        .unwrap();
    assert!(analyzed.status.success());
    let report = String::from_utf8(analyzed.stdout).unwrap();
    for (k, want) in [500.0, 1500.0, 2500.0].iter().enumerate() {
        let f = value(&report, &format!("f{}", k + 1));
        assert!((f - want).abs() < 0.05 * want, "{report}");
    }
}

#[test]
fn cli_config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    write_uniform(dir.path(), "tube");
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "duration-ms = 100\nsolver = [\"2d\"]\n").unwrap();
    let out = dir.path().join("out");
    let run = tool()
        .args(["simulate", "--duration-ms", "30", "--area-file"])
        .arg(dir.path().join("tube.csv"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(out.join("tube_open_low_2d.trace.txt")).unwrap();
    let trace = PressureTrace::from_text(&text).unwrap();
    assert!((trace.duration() - 0.03).abs() < 2.0 / trace.sample_rate);
}

#[test]
fn cli_reports_missing_area_functions() {
    let dir = tempfile::tempdir().unwrap();
    let run = tool().args(["step-a", "--area-dir"]).arg(dir.path()).output().unwrap();
    assert!(!run.status.success());
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("a.csv") && err.contains("u.csv"), "{err}");
}

#[test]
fn cli_rejects_bad_values() {
    for args in [
        vec!["simulate", "--vowel", "a", "--mode", "closed"],
        vec!["simulate", "--vowel", "a", "--resolution", "fine"],
        vec!["simulate", "--vowel", "a", "--duration-ms", "-1"],
    ] {
        let run = tool().args(&args).output().unwrap();
        assert!(!run.status.success(), "{args:?}");
    }
}
