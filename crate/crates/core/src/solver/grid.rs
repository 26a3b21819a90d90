use std::sync::Arc;

use super::pml::{band_depth, damping, PmlCell, PmlFace, PmlState};
use super::{wall_impedance, ExcitationSpan, SimulationConfig, SolverError};
use crate::geometry::{CellKind, GridGeometry, Termination};

/// Velocity point between an air cell and a wall: its value is prescribed
/// from the air-cell pressure every step.
#[derive(Clone, Copy, Debug)]
struct WallFace {
    face: usize,
    air: usize,
    /// +1 when the wall lies on the positive side of the face.
    sign: f64,
}

/// Velocity point with a fractional boundary coefficient.
#[derive(Clone, Copy, Debug)]
struct BlendFace {
    face: usize,
    beta: f64,
    low: usize,
    high: usize,
    /// Cell supplying the wall pressure, and the normal sign towards the wall.
    air: usize,
    sign: f64,
}

/// Field state on the staggered grid plus the per-point coefficients the
/// update needs.
///
/// `vx` has one more column than `p` and `vy` one more row. Solid cells keep
/// zero pressure; velocity points on the outer domain edge are rigid.
pub struct YeeGrid {
    geometry: Arc<GridGeometry>,
    pub p: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,

    rho: f64,
    c: f64,
    dt: f64,
    z_n: f64,
    /// `rho c^2 dt / ds` on updated cells, 0 elsewhere.
    kp: Vec<f64>,
    /// Face depth over cell depth for the east/west/north/south faces.
    r_east: Vec<f64>,
    r_west: Vec<f64>,
    r_north: Vec<f64>,
    r_south: Vec<f64>,
    /// `dt / (rho ds)` on free velocity points, 0 elsewhere.
    kvx: Vec<f64>,
    kvy: Vec<f64>,
    vx_walls: Vec<WallFace>,
    vy_walls: Vec<WallFace>,
    vx_blend: Vec<BlendFace>,
    vy_blend: Vec<BlendFace>,
    dirichlet: Vec<usize>,
    /// `(vx face, vy face)` pairs receiving the excitation velocity.
    sources: Vec<(usize, usize)>,
    pml: Option<PmlState>,
}

impl YeeGrid {
    pub fn new(geometry: Arc<GridGeometry>, config: &SimulationConfig) -> Result<Self, SolverError> {
        config.validate()?;
        if (geometry.ds - config.ds).abs() > 1e-12 * config.ds {
            return Err(SolverError::Setup(format!(
                "geometry ds {} differs from configured ds {}",
                geometry.ds, config.ds
            )));
        }
        let geo = geometry.as_ref();
        let (w, h) = (geo.width, geo.height);
        let ds = geo.ds;
        let rho = config.constants.rho;
        let c = config.constants.c;
        let dt = config.dt;
        let z_n = wall_impedance(&config.constants)?;
        let kp_air = rho * c * c * dt / ds;
        let kv_air = dt / (rho * ds);

        let n_cells = w * h;
        let mut kp = vec![0.0; n_cells];
        let mut r_east = vec![0.0; n_cells];
        let mut r_west = vec![0.0; n_cells];
        let mut r_north = vec![0.0; n_cells];
        let mut r_south = vec![0.0; n_cells];
        let mut dirichlet = Vec::new();
        let mut pml = PmlState::default();
        let absorbing = geo.kind.contains(&CellKind::AbsorbingLayer);
        let layers = match geo.termination {
            Termination::Radiation(layout) => layout.pml_layers,
            Termination::OpenEnd => 0,
        };
        let sigma_max = config.pml.sigma_max(c, layers as f64 * ds);

        for j in 0..h {
            for i in 0..w {
                let cidx = j * w + i;
                let kind = geo.kind[cidx];
                if kind.is_solid() {
                    continue;
                }
                let d = geo.depth_bar[cidx];
                if !(d > 0.0) || !d.is_finite() {
                    return Err(SolverError::Setup(format!(
                        "nonpositive depth {d} at cell ({i}, {j})"
                    )));
                }
                r_east[cidx] = geo.depth_x[j * (w + 1) + i + 1] / d;
                r_west[cidx] = geo.depth_x[j * (w + 1) + i] / d;
                r_north[cidx] = geo.depth_y[(j + 1) * w + i] / d;
                r_south[cidx] = geo.depth_y[j * w + i] / d;
                match kind {
                    CellKind::OpenEnd => dirichlet.push(cidx),
                    CellKind::AbsorbingLayer => {
                        let sx = config.pml.sigma(sigma_max, band_depth(i as f64 + 0.5, w, layers));
                        let sy = config.pml.sigma(sigma_max, band_depth(j as f64 + 0.5, h, layers));
                        let (ax, bx) = damping(sx, dt);
                        let (ay, by) = damping(sy, dt);
                        pml.cells.push(PmlCell {
                            cell: cidx,
                            ax,
                            bx,
                            ay,
                            by,
                            px: 0.0,
                            py: 0.0,
                        });
                    }
                    _ => kp[cidx] = kp_air,
                }
            }
        }

        let beta = &geo.beta;
        let face_kind = |a: usize, b: usize| -> FaceKind {
            let (ba, bb) = (beta[a], beta[b]);
            let bf = ba.min(bb);
            if bf >= 1.0 {
                FaceKind::Free
            } else if ba <= 0.0 && bb <= 0.0 {
                FaceKind::Sealed
            } else if bf <= 0.0 {
                // exactly one side is solid
                if ba <= 0.0 {
                    FaceKind::Wall { air: b, sign: -1.0 }
                } else {
                    FaceKind::Wall { air: a, sign: 1.0 }
                }
            } else if ba < bb {
                FaceKind::Blend { beta: bf, air: b, sign: -1.0 }
            } else {
                FaceKind::Blend { beta: bf, air: a, sign: 1.0 }
            }
        };

        let mut kvx = vec![0.0; (w + 1) * h];
        let mut kvy = vec![0.0; w * (h + 1)];
        let mut vx_walls = Vec::new();
        let mut vy_walls = Vec::new();
        let mut vx_blend = Vec::new();
        let mut vy_blend = Vec::new();
        let is_pml = |cidx: usize| geo.kind[cidx] == CellKind::AbsorbingLayer;

        for j in 0..h {
            for i in 1..w {
                let face = j * (w + 1) + i;
                let (a, b) = (j * w + i - 1, j * w + i);
                match face_kind(a, b) {
                    FaceKind::Free => {
                        let sx = config.pml.sigma(sigma_max, band_depth(i as f64, w, layers));
                        if (is_pml(a) || is_pml(b)) && layers > 0 {
                            let (fa, fb) = damping(sx, dt);
                            pml.vx_faces.push(PmlFace { face, a: fa, b: fb });
                        } else {
                            kvx[face] = kv_air;
                        }
                    }
                    FaceKind::Sealed => {}
                    FaceKind::Wall { air, sign } => vx_walls.push(WallFace { face, air, sign }),
                    FaceKind::Blend { beta, air, sign } => vx_blend.push(BlendFace {
                        face,
                        beta,
                        low: a,
                        high: b,
                        air,
                        sign,
                    }),
                }
            }
        }
        for j in 1..h {
            for i in 0..w {
                let face = j * w + i;
                let (a, b) = ((j - 1) * w + i, j * w + i);
                match face_kind(a, b) {
                    FaceKind::Free => {
                        let sy = config.pml.sigma(sigma_max, band_depth(j as f64, h, layers));
                        if (is_pml(a) || is_pml(b)) && layers > 0 {
                            let (fa, fb) = damping(sy, dt);
                            pml.vy_faces.push(PmlFace { face, a: fa, b: fb });
                        } else {
                            kvy[face] = kv_air;
                        }
                    }
                    FaceKind::Sealed => {}
                    FaceKind::Wall { air, sign } => vy_walls.push(WallFace { face, air, sign }),
                    FaceKind::Blend { beta, air, sign } => vy_blend.push(BlendFace {
                        face,
                        beta,
                        low: a,
                        high: b,
                        air,
                        sign,
                    }),
                }
            }
        }

        let excitation: Vec<(usize, usize)> = (0..h)
            .flat_map(|j| (0..w).map(move |i| (i, j)))
            .filter(|&(i, j)| geo.kind[j * w + i] == CellKind::Excitation)
            .collect();
        let excitation = match config.excitation_span {
            ExcitationSpan::FullColumn => excitation,
            ExcitationSpan::CentreCell => {
                let mid = geo.tube.axis_row;
                excitation
                    .iter()
                    .copied()
                    .min_by_key(|&(_, j)| j.abs_diff(mid))
                    .into_iter()
                    .collect()
            }
        };
        let sources = excitation
            .into_iter()
            .map(|(i, j)| (j * (w + 1) + i + 1, (j + 1) * w + i))
            .collect();

        Ok(Self {
            p: vec![0.0; n_cells],
            vx: vec![0.0; (w + 1) * h],
            vy: vec![0.0; w * (h + 1)],
            rho,
            c,
            dt,
            z_n,
            kp,
            r_east,
            r_west,
            r_north,
            r_south,
            kvx,
            kvy,
            vx_walls,
            vy_walls,
            vx_blend,
            vy_blend,
            dirichlet,
            sources,
            pml: absorbing.then_some(pml),
            geometry,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn wall_impedance(&self) -> f64 {
        self.z_n
    }

    pub fn has_absorbing_layers(&self) -> bool {
        self.pml.is_some()
    }

    /// Pressure update on every non-solid, non-absorbing cell; open-end cells
    /// are held at zero.
    pub fn step_pressure(&mut self) {
        let w = self.geometry.width;
        let h = self.geometry.height;
        let w1 = w + 1;
        for j in 0..h {
            let row = j * w;
            let vx_row = &self.vx[j * w1..(j + 1) * w1];
            let vy_lo = &self.vy[j * w..(j + 1) * w];
            let vy_hi = &self.vy[(j + 1) * w..(j + 2) * w];
            let p = &mut self.p[row..row + w];
            let kp = &self.kp[row..row + w];
            let re = &self.r_east[row..row + w];
            let rw = &self.r_west[row..row + w];
            let rn = &self.r_north[row..row + w];
            let rs = &self.r_south[row..row + w];
            for i in 0..w {
                let div = re[i] * vx_row[i + 1] - rw[i] * vx_row[i] + rn[i] * vy_hi[i]
                    - rs[i] * vy_lo[i];
                p[i] -= kp[i] * div;
            }
        }
        for &c in &self.dirichlet {
            self.p[c] = 0.0;
        }
    }

    /// Split-field pressure update inside the absorbing layers.
    pub fn step_pml_pressure(&mut self) -> Result<(), SolverError> {
        let w = self.geometry.width;
        let kp = self.rho * self.c * self.c * self.dt / self.geometry.ds;
        let pml = self.pml.as_mut().ok_or_else(no_layers)?;
        for cell in &mut pml.cells {
            let c = cell.cell;
            let (i, j) = (c % w, c / w);
            let dx = self.r_east[c] * self.vx[j * (w + 1) + i + 1] - self.r_west[c] * self.vx[j * (w + 1) + i];
            let dy = self.r_north[c] * self.vy[(j + 1) * w + i] - self.r_south[c] * self.vy[j * w + i];
            cell.px = cell.ax * cell.px - cell.bx * kp * dx;
            cell.py = cell.ay * cell.py - cell.by * kp * dy;
            self.p[c] = cell.px + cell.py;
        }
        Ok(())
    }

    /// Adds the excitation velocity to the velocity points of the source cells.
    pub fn inject(&mut self, v_e: f64) {
        if v_e == 0.0 {
            return;
        }
        for &(fx, fy) in &self.sources {
            self.vx[fx] += v_e;
            self.vy[fy] += v_e;
        }
    }

    /// Velocity update: free points follow the momentum equation, wall points
    /// take the wall velocity `p / Z` of the air cell in front of them.
    pub fn step_velocity(&mut self) {
        let w = self.geometry.width;
        let h = self.geometry.height;
        let w1 = w + 1;
        for j in 0..h {
            let p = &self.p[j * w..(j + 1) * w];
            let vx = &mut self.vx[j * w1..(j + 1) * w1];
            let k = &self.kvx[j * w1..(j + 1) * w1];
            for i in 1..w {
                vx[i] -= k[i] * (p[i] - p[i - 1]);
            }
        }
        for j in 1..h {
            let (lo, hi) = self.p.split_at(j * w);
            let p_lo = &lo[(j - 1) * w..];
            let p_hi = &hi[..w];
            let vy = &mut self.vy[j * w..(j + 1) * w];
            let k = &self.kvy[j * w..(j + 1) * w];
            for i in 0..w {
                vy[i] -= k[i] * (p_hi[i] - p_lo[i]);
            }
        }
        let z = self.z_n;
        for f in &self.vx_walls {
            self.vx[f.face] = f.sign * self.p[f.air] / z;
        }
        for f in &self.vy_walls {
            self.vy[f.face] = f.sign * self.p[f.air] / z;
        }
        let (dt, rho, ds) = (self.dt, self.rho, self.geometry.ds);
        let blend = |v: f64, f: &BlendFace, p: &[f64]| {
            let grad = (p[f.high] - p[f.low]) / ds;
            let vb = f.sign * p[f.air] / z;
            let b = f.beta;
            (b * v - b * b * dt * grad / rho + dt * (1.0 - b) * vb) / (b + dt * (1.0 - b))
        };
        for f in &self.vx_blend {
            self.vx[f.face] = blend(self.vx[f.face], f, &self.p);
        }
        for f in &self.vy_blend {
            self.vy[f.face] = blend(self.vy[f.face], f, &self.p);
        }
    }

    /// Damped velocity update inside the absorbing layers.
    pub fn step_pml_velocity(&mut self) -> Result<(), SolverError> {
        let w = self.geometry.width;
        let kv = self.dt / (self.rho * self.geometry.ds);
        let pml = self.pml.as_ref().ok_or_else(no_layers)?;
        for f in &pml.vx_faces {
            let (i, j) = (f.face % (w + 1), f.face / (w + 1));
            let grad = self.p[j * w + i] - self.p[j * w + i - 1];
            self.vx[f.face] = f.a * self.vx[f.face] - f.b * kv * grad;
        }
        for f in &pml.vy_faces {
            let grad = self.p[f.face] - self.p[f.face - w];
            self.vy[f.face] = f.a * self.vy[f.face] - f.b * kv * grad;
        }
        Ok(())
    }

    /// Both absorbing-layer phases, for callers driving the phases by hand.
    /// Fails on grids without absorbing layers.
    pub fn step_pml(&mut self) -> Result<(), SolverError> {
        if !self.geometry.termination.is_radiation() && self.pml.is_none() {
            return Err(SolverError::Mode(
                "absorbing layers are only present in radiation mode".into(),
            ));
        }
        self.step_pml_pressure()?;
        self.step_pml_velocity()
    }

    /// One full time step in the order pressure, excitation, wall velocity,
    /// particle velocity.
    pub fn step(&mut self, v_e: f64) {
        self.step_pressure();
        if self.pml.is_some() {
            let _ = self.step_pml_pressure();
        }
        self.inject(v_e);
        self.step_velocity();
        if self.pml.is_some() {
            let _ = self.step_pml_velocity();
        }
    }

    pub fn all_finite(&self) -> bool {
        self.p.iter().chain(&self.vx).chain(&self.vy).all(|v| v.is_finite())
    }

    /// Discrete acoustic energy that the lossless interior update conserves
    /// exactly: depth-weighted potential and kinetic terms plus the
    /// leapfrog cross term `-dt/2 <p, div(D v)>`. Wall and absorbing
    /// points are excluded, so losses through them show up as a decrease.
    pub fn energy(&self) -> f64 {
        let geo = self.geometry.as_ref();
        let (w, h) = (geo.width, geo.height);
        let ds = geo.ds;
        let rc2 = self.rho * self.c * self.c;
        let mut potential = 0.0;
        let mut cross = 0.0;
        for j in 0..h {
            for i in 0..w {
                let c = j * w + i;
                if self.kp[c] == 0.0 {
                    continue;
                }
                let p = self.p[c];
                potential += geo.depth_bar[c] * p * p / (2.0 * rc2);
                let fx = |face: usize| if self.kvx[face] > 0.0 { geo.depth_x[face] * self.vx[face] } else { 0.0 };
                let fy = |face: usize| if self.kvy[face] > 0.0 { geo.depth_y[face] * self.vy[face] } else { 0.0 };
                let div = (fx(j * (w + 1) + i + 1) - fx(j * (w + 1) + i) + fy((j + 1) * w + i)
                    - fy(j * w + i))
                    / ds;
                cross += p * div;
            }
        }
        let mut kinetic = 0.0;
        for (f, &k) in self.kvx.iter().enumerate() {
            if k > 0.0 {
                kinetic += geo.depth_x[f] * self.vx[f] * self.vx[f];
            }
        }
        for (f, &k) in self.kvy.iter().enumerate() {
            if k > 0.0 {
                kinetic += geo.depth_y[f] * self.vy[f] * self.vy[f];
            }
        }
        ds * ds * (potential + 0.5 * self.rho * kinetic - 0.5 * self.dt * cross)
    }

    /// `sum p^2 / (2 rho c^2) + rho |v|^2 / 2` over air cells and free
    /// velocity points, without the leapfrog correction.
    pub fn naive_energy(&self) -> f64 {
        let geo = self.geometry.as_ref();
        let rc2 = self.rho * self.c * self.c;
        let pot: f64 = self
            .p
            .iter()
            .zip(&self.kp)
            .filter(|(_, k)| **k > 0.0)
            .map(|(p, _)| p * p / (2.0 * rc2))
            .sum();
        let kin: f64 = self
            .vx
            .iter()
            .zip(&self.kvx)
            .chain(self.vy.iter().zip(&self.kvy))
            .filter(|(_, k)| **k > 0.0)
            .map(|(v, _)| 0.5 * self.rho * v * v)
            .sum();
        geo.ds * geo.ds * (pot + kin)
    }
}

enum FaceKind {
    Free,
    Sealed,
    Wall { air: usize, sign: f64 },
    Blend { beta: f64, air: usize, sign: f64 },
}

fn no_layers() -> SolverError {
    SolverError::Mode("grid has no absorbing layers".into())
}
