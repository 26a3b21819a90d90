use std::sync::Arc;

use approx::assert_relative_eq;

use super::*;
use crate::geometry::{
    build_geometry, free_field_domain, CellKind, RadiationLayout, TubePlacement,
};

const LOW: f64 = 0.74e-3;

fn open_config(ds: f64) -> SimulationConfig {
    SimulationConfig::new(ds, Termination::OpenEnd, SolverKind::TwoPointFiveD)
}

fn uniform_tube() -> AreaFunction {
    AreaFunction::uniform("uniform", 0.175, 0.02).unwrap()
}

/// Air box of `w` x `h` cells surrounded by one ring of wall cells.
fn closed_box(w: usize, h: usize, ds: f64) -> GridGeometry {
    let (bw, bh) = (w + 2, h + 2);
    let kind: Vec<CellKind> = (0..bw * bh)
        .map(|c| {
            let (i, j) = (c % bw, c / bw);
            if i == 0 || j == 0 || i + 1 == bw || j + 1 == bh {
                CellKind::Wall
            } else {
                CellKind::Air
            }
        })
        .collect();
    let beta = kind.iter().map(|k| k.beta()).collect();
    GridGeometry {
        width: bw,
        height: bh,
        ds,
        kind,
        beta,
        depth_bar: vec![1.0; bw * bh],
        depth_x: vec![1.0; (bw + 1) * bh],
        depth_y: vec![1.0; bw * (bh + 1)],
        tube_mask: vec![true; bw * bh],
        tube: TubePlacement {
            glottis_col: 1,
            air_rows: vec![(1, h); w],
            axis_row: bh / 2,
        },
        termination: Termination::OpenEnd,
    }
}

fn grid_for(geo: GridGeometry, config: &SimulationConfig) -> YeeGrid {
    YeeGrid::new(Arc::new(geo), config).unwrap()
}

fn gaussian(grid: &mut YeeGrid, centre: (f64, f64), width: f64, amp: f64) {
    let w = grid.geometry().width;
    let kinds = grid.geometry().kind.clone();
    for (c, p) in grid.p.iter_mut().enumerate() {
        if kinds[c] != CellKind::Air {
            continue;
        }
        let x = (c % w) as f64 + 0.5 - centre.0;
        let y = (c / w) as f64 + 0.5 - centre.1;
        *p = amp * (-(x * x + y * y) / (2.0 * width * width)).exp();
    }
}

#[test]
fn cfl_examples() {
    assert_relative_eq!(cfl_timestep(0.74e-3, 350.0), 1.4951e-6, max_relative = 1e-4);
    assert_relative_eq!(cfl_timestep(0.18e-3, 350.0), 3.6365e-7, max_relative = 1e-4);
    assert_relative_eq!(cfl_timestep(0.37e-3, 350.0), cfl_timestep(0.74e-3, 350.0) / 2.0);
}

#[test]
fn trace_length_is_duration_over_dt() {
    let cfg = open_config(LOW);
    let expected = (0.05 / cfl_timestep(LOW, 350.0)).floor() as usize;
    assert_eq!(cfg.steps(), expected);
    assert!((cfg.sample_rate() - 668_884.0).abs() < 1.0);
}

#[test]
fn refuses_dt_above_cfl() {
    let mut cfg = open_config(LOW);
    cfg.dt *= 1.05;
    assert!(matches!(cfg.validate(), Err(SolverError::Cfl { .. })));
    let sig = ExcitationSignal::zeros(cfg.sample_rate(), 10);
    assert!(matches!(
        run_simulation(&uniform_tube(), &cfg, &sig),
        Err(SolverError::Cfl { .. })
    ));
}

#[test]
fn rejects_invalid_constants() {
    let cfg = open_config(LOW).with_constants(PhysicalConstants { rho: 1.14, c: 350.0, mu: 1.0 });
    assert!(matches!(cfg.validate(), Err(SolverError::Domain(_))));
    let cfg = open_config(LOW).with_constants(PhysicalConstants { rho: -1.0, c: 350.0, mu: 0.1 });
    assert!(cfg.validate().is_err());
}

#[test]
fn zero_velocity_keeps_pressure() {
    let cfg = open_config(LOW);
    let mut grid = grid_for(closed_box(6, 5, LOW), &cfg);
    gaussian(&mut grid, (4.0, 3.5), 1.5, 10.0);
    let before = grid.p.clone();
    grid.step_pressure();
    assert_eq!(before, grid.p);
}

#[test]
fn single_stencil_pressure() {
    let cfg = open_config(LOW);
    let dt = cfg.dt;
    let mut grid = grid_for(closed_box(5, 5, LOW), &cfg);
    let w = grid.geometry().width;
    let (i, j) = (3, 3);
    // unit difference between the east and west faces of one cell
    grid.vx[j * (w + 1) + i + 1] = 1.0;
    grid.step_pressure();
    let oracle = -(1.14 * 350.0 * 350.0 * dt / 0.74e-3) * 1.0;
    assert_relative_eq!(grid.p[j * w + i], oracle, max_relative = 1e-12);
    assert!((grid.p[j * w + i] + 282.17).abs() < 0.05);
    // the neighbour to the east sees the opposite divergence
    assert_relative_eq!(grid.p[j * w + i + 1], -oracle, max_relative = 1e-12);
}

#[test]
fn single_stencil_velocity() {
    let cfg = open_config(LOW);
    let dt = cfg.dt;
    let mut grid = grid_for(closed_box(5, 5, LOW), &cfg);
    let w = grid.geometry().width;
    let j = 3;
    // pressure ramp of 1000 Pa/m along x
    for i in 0..w {
        grid.p[j * w + i] = 1000.0 * i as f64 * LOW;
    }
    grid.step_velocity();
    let dv = grid.vx[j * (w + 1) + 3];
    let oracle = -dt * 1000.0 / 1.14;
    assert_relative_eq!(dv, oracle, max_relative = 1e-9);
    assert!((dv + 1.3115e-3).abs() < 1e-7);
}

#[test]
fn wall_points_take_prescribed_velocity_exactly() {
    let cfg = open_config(LOW);
    let mut grid = grid_for(closed_box(8, 6, LOW), &cfg);
    gaussian(&mut grid, (3.0, 3.0), 1.5, 100.0);
    let z = grid.wall_impedance();
    let w = grid.geometry().width;
    for _ in 0..5 {
        grid.step(0.0);
        // west wall: air cell (1, j), face (1, j), wall on the negative side
        for j in 1..7 {
            let face = j * (w + 1) + 1;
            assert_eq!(grid.vx[face], -grid.p[j * w + 1] / z);
        }
        // east wall: air cell (8, j), face (9, j)
        for j in 1..7 {
            let face = j * (w + 1) + 9;
            assert_eq!(grid.vx[face], grid.p[j * w + 8] / z);
        }
        // south wall: face row 1
        for i in 1..9 {
            assert_eq!(grid.vy[w + i], -grid.p[w + i] / z);
        }
    }
}

#[test]
fn constant_depth_matches_2d() {
    let af = uniform_tube();
    let geo = build_geometry(&af, LOW, Termination::OpenEnd).unwrap();
    let flat = geo.clone().with_unit_depth();
    let mut deep = geo;
    for d in deep.depth_bar.iter_mut().chain(&mut deep.depth_x).chain(&mut deep.depth_y) {
        *d = 0.02;
    }
    let mut cfg = open_config(LOW);
    cfg.duration = 2000.0 * cfg.dt;
    let sig = crate::excitation::make_band_passed_pulse(cfg.sample_rate(), 17_000, (2.0, 20_000.0), 1.0)
        .unwrap();
    let a = Simulation::from_geometry(flat, cfg.clone()).unwrap().run(&sig).unwrap();
    let b = Simulation::from_geometry(deep, cfg).unwrap().run(&sig).unwrap();
    assert_eq!(a.samples.len(), 2000);
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{x} vs {y}");
    }
}

#[test]
fn open_end_stays_at_zero() {
    let af = uniform_tube();
    let mut cfg = open_config(LOW);
    cfg.duration = 400.0 * cfg.dt;
    let sim = Simulation::new(&af, cfg).unwrap();
    let open: Vec<usize> = (0..sim.geometry().cell_count())
        .filter(|&c| sim.geometry().kind[c] == CellKind::OpenEnd)
        .collect();
    assert!(!open.is_empty());
    let sig = ExcitationSignal::impulse(sim.config().sample_rate(), 400, 1.0);
    sim.run_observed(&sig, |_, g| {
        for &c in &open {
            assert_eq!(g.p[c], 0.0);
        }
    })
    .unwrap();
}

#[test]
fn zero_excitation_gives_zero_trace() {
    let mut cfg = open_config(LOW);
    cfg.duration = 300.0 * cfg.dt;
    let sig = ExcitationSignal::zeros(cfg.sample_rate(), 0);
    let trace = run_simulation(&uniform_tube(), &cfg, &sig).unwrap();
    assert_eq!(trace.samples.len(), 300);
    assert!(trace.samples.iter().all(|&v| v == 0.0));
}

#[test]
fn probe_sits_three_millimetres_inside() {
    let sim = Simulation::new(&uniform_tube(), open_config(LOW)).unwrap();
    let m = sim.geometry().tube.mouth_col();
    assert_eq!(sim.probe_cell(), (m - 5, sim.geometry().tube.axis_row));
}

#[test]
fn excitation_span_options() {
    let geo = Arc::new(build_geometry(&uniform_tube(), LOW, Termination::OpenEnd).unwrap());
    let mut cfg = open_config(LOW);
    let mut full = YeeGrid::new(Arc::clone(&geo), &cfg).unwrap();
    cfg.excitation_span = ExcitationSpan::CentreCell;
    let mut centre = YeeGrid::new(geo, &cfg).unwrap();
    full.inject(1.0);
    centre.inject(1.0);
    let count = |g: &YeeGrid| g.vx.iter().chain(&g.vy).filter(|&&v| v == 1.0).count();
    assert_eq!(count(&full), 2 * 27);
    assert_eq!(count(&centre), 2);
}

#[test]
fn closed_box_loses_energy_slowly() {
    let cfg = open_config(LOW);
    let mut grid = grid_for(closed_box(40, 30, LOW), &cfg);
    gaussian(&mut grid, (15.0, 12.0), 3.0, 1.0);
    let e0 = grid.energy();
    let mut prev = e0;
    // about 2 % of the energy is lost per wall reflection
    for _ in 0..1000 {
        grid.step(0.0);
        let e = grid.energy();
        assert!(e <= prev * (1.0 + 1e-12), "energy grew: {prev} -> {e}");
        prev = e;
    }
    assert!(prev > 0.2 * e0, "energy collapsed to {prev} of {e0}");
    assert!(prev < e0);
}

#[test]
fn lossless_interior_conserves_energy() {
    let cfg = open_config(LOW).with_constants(PhysicalConstants { rho: 1.14, c: 350.0, mu: 1e-9 });
    let mut grid = grid_for(closed_box(30, 20, LOW), &cfg);
    gaussian(&mut grid, (12.0, 9.0), 2.5, 1.0);
    let e0 = grid.energy();
    for _ in 0..1000 {
        grid.step(0.0);
    }
    assert_relative_eq!(grid.energy(), e0, max_relative = 1e-6);
}

#[test]
fn step_pml_needs_layers() {
    let mut grid = grid_for(closed_box(4, 4, LOW), &open_config(LOW));
    assert!(matches!(grid.step_pml(), Err(SolverError::Mode(_))));
    assert!(!grid.has_absorbing_layers());
}

#[test]
fn zero_conductivity_layers_match_interior() {
    let layout = RadiationLayout::default();
    let lined = free_field_domain(40, 36, LOW, &layout);
    let mut plain = lined.clone();
    plain.kind.iter_mut().for_each(|k| *k = CellKind::Air);
    let mut cfg = SimulationConfig::new(LOW, Termination::Radiation(layout), SolverKind::TwoD);
    cfg.pml = PmlProfile::off();
    let mut a = grid_for(lined, &cfg);
    let mut b = grid_for(plain, &cfg);
    assert!(a.has_absorbing_layers());
    gaussian(&mut a, (14.0, 20.0), 2.0, 1.0);
    gaussian(&mut b, (14.0, 20.0), 2.0, 1.0);
    // absorbing cells start from the split parts of zero, so seed the pulse in the interior only
    for (c, k) in a.geometry().kind.clone().iter().enumerate() {
        if *k == CellKind::AbsorbingLayer {
            a.p[c] = 0.0;
            b.p[c] = 0.0;
        }
    }
    for _ in 0..300 {
        a.step(0.0);
        b.step(0.0);
    }
    let scale = b.p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (x, y) in a.p.iter().zip(&b.p) {
        assert!((x - y).abs() <= 1e-10 * scale);
    }
}

#[test]
fn trace_text_round_trip() {
    let trace = PressureTrace {
        samples: vec![0.0, -1.5e-7, 1.234_567_890_123_456_7, 1e-300, -42.0],
        sample_rate: 668_884.634_518_2,
        probe_cell: (231, 14),
    };
    let back = PressureTrace::from_text(&trace.to_text()).unwrap();
    assert_eq!(back, trace);
}

#[test]
fn trace_text_errors_name_the_line() {
    let err = PressureTrace::from_text("# sample_rate_hz: 100\n0 1\n0.01 x\n").unwrap_err();
    assert!(matches!(err, SolverError::Parse { line: 3, .. }), "{err}");
    assert!(PressureTrace::from_text("0 1\n").is_err());
}
