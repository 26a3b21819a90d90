//! Staggered-grid time marching.
//!
//! Each step updates pressure from the velocity divergence,
//!
//! ```text
//! p' = (D p - rho c^2 dt div(D_x vx, D_y vy)) / D
//! ```
//!
//! adds the excitation velocity at the source cells, prescribes the wall
//! velocity `p / Z_n` on air/wall velocity points, and finally updates the
//! velocity with the boundary-aware momentum equation
//!
//! ```text
//! v' = (beta v - beta^2 dt grad(p') / rho + dt (1 - beta) v_b) / (beta + dt (1 - beta))
//! ```
//!
//! With every depth equal to one the same kernel is the plain 2D scheme.

mod boundary;
mod grid;
mod pml;

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::excitation::ExcitationSignal;
use crate::geometry::{build_geometry, AreaFunction, GeometryError, GridGeometry, Termination};

pub use boundary::{absorption_from_admittance, wall_impedance, wall_velocity};
pub use grid::YeeGrid;
pub use pml::PmlProfile;

/// Non-finite values are searched for every this many steps.
pub const FINITE_CHECK_INTERVAL: usize = 64;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("CFL condition violated: dt = {dt:e} s exceeds ds / (sqrt(2) c) = {limit:e} s")]
    Cfl { dt: f64, limit: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical setup error: {0}")]
    Setup(String),
    #[error("mode error: {0}")]
    Mode(String),
    #[error("simulation became unstable: non-finite field at step {step}")]
    Unstable { step: usize },
    #[error("probe position is outside the domain")]
    Probe,
    #[error("trace line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    /// Air density, kg/m³.
    pub rho: f64,
    /// Speed of sound, m/s.
    pub c: f64,
    /// Boundary admittance coefficient in (0, 1).
    pub mu: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            rho: 1.14,
            c: 350.0,
            mu: 0.005,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.rho > 0.0) || !(self.c > 0.0) {
            return Err(SolverError::Domain(format!(
                "rho and c must be positive (rho = {}, c = {})",
                self.rho, self.c
            )));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(SolverError::Domain(format!(
                "boundary admittance must lie in (0, 1), got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// All depths set to one.
    TwoD,
    /// Depths sampled from the area function.
    TwoPointFiveD,
}

impl SolverKind {
    pub fn label(self) -> &'static str {
        match self {
            SolverKind::TwoD => "2d",
            SolverKind::TwoPointFiveD => "2.5d",
        }
    }
}

/// Which excitation cells receive the source velocity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExcitationSpan {
    /// Every air cell of the glottal-end column.
    FullColumn,
    /// Only the cell on the tube axis.
    CentreCell,
}

/// Largest stable time step of the 2D scheme, `ds / (sqrt(2) c)`.
pub fn cfl_timestep(ds: f64, c: f64) -> f64 {
    ds / (std::f64::consts::SQRT_2 * c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub constants: PhysicalConstants,
    /// Grid spacing, m.
    pub ds: f64,
    /// Time step, s.
    pub dt: f64,
    /// Simulated time, s.
    pub duration: f64,
    pub termination: Termination,
    /// Microphone position relative to the mouth plane along the axis, m;
    /// negative is inside the tube.
    pub probe_offset: f64,
    pub solver_kind: SolverKind,
    pub excitation_span: ExcitationSpan,
    pub pml: PmlProfile,
}

impl SimulationConfig {
    /// 50 ms at the CFL limit, microphone 3 mm inside the mouth (open end)
    /// or 3 mm outside it (radiation).
    pub fn new(ds: f64, termination: Termination, solver_kind: SolverKind) -> Self {
        let constants = PhysicalConstants::default();
        let probe_offset = if termination.is_radiation() { 3e-3 } else { -3e-3 };
        Self {
            constants,
            ds,
            dt: cfl_timestep(ds, constants.c),
            duration: 0.05,
            termination,
            probe_offset,
            solver_kind,
            excitation_span: ExcitationSpan::FullColumn,
            pml: PmlProfile::default(),
        }
    }

    /// Replaces the constants and re-derives `dt` at the CFL limit.
    pub fn with_constants(mut self, constants: PhysicalConstants) -> Self {
        self.constants = constants;
        self.dt = cfl_timestep(self.ds, constants.c);
        self
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    /// Number of steps (and trace samples), `floor(duration / dt)`.
    pub fn steps(&self) -> usize {
        // guard against 0.05 / dt landing a hair below an integer
        (self.duration / self.dt * (1.0 + 1e-12)).floor() as usize
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.constants.validate()?;
        if !(self.ds > 0.0) || !self.ds.is_finite() {
            return Err(SolverError::Config(format!("ds must be positive, got {}", self.ds)));
        }
        if !(self.duration > 0.0) {
            return Err(SolverError::Config(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.dt > 0.0) {
            return Err(SolverError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        let limit = cfl_timestep(self.ds, self.constants.c);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(SolverError::Cfl { dt: self.dt, limit });
        }
        Ok(())
    }
}

/// Pressure recorded at the probe cell, one sample per step.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureTrace {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub probe_cell: (usize, usize),
}

impl PressureTrace {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Two columns, time in seconds and pressure in pascals, after a
    /// `# sample_rate_hz:` and `# probe_cell:` header. Values are written in
    /// shortest round-trip form, so [`PressureTrace::from_text`] restores the
    /// samples exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 40 + 64);
        let _ = writeln!(out, "# sample_rate_hz: {}", self.sample_rate);
        let _ = writeln!(out, "# probe_cell: {} {}", self.probe_cell.0, self.probe_cell.1);
        let _ = writeln!(out, "# time_s pressure_pa");
        for (n, p) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{} {}", n as f64 / self.sample_rate, p);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SolverError> {
        let mut sample_rate = None;
        let mut probe_cell = (0, 0);
        let mut samples = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let err = |reason: &str| SolverError::Parse {
                line,
                reason: reason.to_string(),
            };
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("sample_rate_hz:") {
                    let rate: f64 = v.trim().parse().map_err(|_| err("bad sample rate"))?;
                    if !(rate > 0.0) {
                        return Err(err("sample rate must be positive"));
                    }
                    sample_rate = Some(rate);
                } else if let Some(v) = comment.strip_prefix("probe_cell:") {
                    let mut it = v.split_whitespace().map(|t| t.parse::<usize>());
                    match (it.next(), it.next()) {
                        (Some(Ok(i)), Some(Ok(j))) => probe_cell = (i, j),
                        _ => return Err(err("bad probe cell")),
                    }
                }
                continue;
            }
            let mut cols = trimmed.split_whitespace();
            let (_, p) = (cols.next(), cols.next());
            let p = p.ok_or_else(|| err("expected two columns"))?;
            samples.push(p.parse::<f64>().map_err(|_| err("bad pressure value"))?);
        }
        let sample_rate = sample_rate.ok_or(SolverError::Parse {
            line: 1,
            reason: "missing '# sample_rate_hz:' header".into(),
        })?;
        Ok(Self {
            samples,
            sample_rate,
            probe_cell,
        })
    }
}

/// A geometry plus configuration, ready to run.
pub struct Simulation {
    geometry: Arc<GridGeometry>,
    config: SimulationConfig,
    probe: (usize, usize),
}

impl Simulation {
    /// Builds the geometry for `af` and validates the configuration. Refuses
    /// configurations that violate the CFL bound.
    pub fn new(af: &AreaFunction, config: SimulationConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let geo = build_geometry(af, config.ds, config.termination)?;
        let geo = match config.solver_kind {
            SolverKind::TwoD => geo.with_unit_depth(),
            SolverKind::TwoPointFiveD => geo,
        };
        Self::from_geometry(geo, config)
    }

    pub fn from_geometry(geometry: GridGeometry, config: SimulationConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let probe = geometry.probe_cell(config.probe_offset).ok_or(SolverError::Probe)?;
        if probe.1 >= geometry.height {
            return Err(SolverError::Probe);
        }
        Ok(Self {
            geometry: Arc::new(geometry),
            config,
            probe,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn probe_cell(&self) -> (usize, usize) {
        self.probe
    }

    pub fn grid(&self) -> Result<YeeGrid, SolverError> {
        YeeGrid::new(Arc::clone(&self.geometry), &self.config)
    }

    pub fn run(&self, excitation: &ExcitationSignal) -> Result<PressureTrace, SolverError> {
        self.run_observed(excitation, |_, _| {})
    }

    /// Runs the time loop, calling `observe(step, grid)` after every step.
    /// Excitation samples past the end of the signal are zero.
    pub fn run_observed<F>(
        &self,
        excitation: &ExcitationSignal,
        mut observe: F,
    ) -> Result<PressureTrace, SolverError>
    where
        F: FnMut(usize, &YeeGrid),
    {
        let steps = self.config.steps();
        let mut grid = self.grid()?;
        let probe = self.geometry.idx(self.probe.0, self.probe.1);
        let mut samples = Vec::with_capacity(steps);
        for n in 0..steps {
            let v_e = excitation.samples.get(n).copied().unwrap_or(0.0);
            grid.step(v_e);
            samples.push(grid.p[probe]);
            if (n + 1) % FINITE_CHECK_INTERVAL == 0 && !grid.all_finite() {
                return Err(SolverError::Unstable { step: n });
            }
            observe(n, &grid);
        }
        if !grid.all_finite() {
            return Err(SolverError::Unstable { step: steps.saturating_sub(1) });
        }
        Ok(PressureTrace {
            samples,
            sample_rate: self.config.sample_rate(),
            probe_cell: self.probe,
        })
    }
}

/// Geometry construction, time marching and probe recording in one call.
pub fn run_simulation(
    af: &AreaFunction,
    config: &SimulationConfig,
    excitation: &ExcitationSignal,
) -> Result<PressureTrace, SolverError> {
    Simulation::new(af, config.clone())?.run(excitation)
}

#[cfg(test)]
mod tests;
