//! Rasterisation of area functions into the simulation domain.
//!
//! The tube axis runs along +x (glottis on the left, lips on the right) and
//! is centred vertically. Pressure lives at cell centres, `vx` on the
//! vertical cell faces and `vy` on the horizontal ones:
//!
//! ```text
//!   vx index (i, j): face between cells (i-1, j) and (i, j), i in 0..=width
//!   vy index (i, j): face between cells (i, j-1) and (i, j), j in 0..=height
//! ```

mod area;
mod radiation;
mod raster;

use thiserror::Error;

pub use area::{area_to_diameter, load_area_function, AreaFormat, AreaFunction, AreaUnits, Section};
pub use radiation::{add_radiation_domain, free_field_domain, RadiationLayout};
pub use raster::{compute_domain_size, rasterize_tube, sample_depths, OPEN_END_MARGIN};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("no sections")]
    Empty,
    #[error("section {index}: {reason}")]
    InvalidSection { index: usize, reason: String },
    #[error("section {index}: negative area {area}")]
    NegativeArea { index: usize, area: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the tube is terminated at the lips.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    /// Pressure pinned to zero one cell past the last tube column.
    OpenEnd,
    /// Tube opens through a circular baffle into a free field lined with
    /// absorbing layers.
    Radiation(RadiationLayout),
}

impl Termination {
    pub fn is_radiation(&self) -> bool {
        matches!(self, Termination::Radiation(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::OpenEnd => "open",
            Termination::Radiation(_) => "radiation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Air,
    Wall,
    Excitation,
    OpenEnd,
    Baffle,
    AbsorbingLayer,
}

impl CellKind {
    /// Boundary coefficient at rest: 1 for cells carrying pressure, 0 for
    /// rigid/lossy walls.
    pub fn beta(self) -> f64 {
        if self.is_solid() {
            0.0
        } else {
            1.0
        }
    }

    pub fn is_solid(self) -> bool {
        matches!(self, CellKind::Wall | CellKind::Baffle)
    }

    pub fn symbol(self) -> char {
        match self {
            CellKind::Air => '.',
            CellKind::Wall => '#',
            CellKind::Excitation => 'E',
            CellKind::OpenEnd => 'O',
            CellKind::Baffle => 'B',
            CellKind::AbsorbingLayer => 'P',
        }
    }
}

/// Where the tube sits inside the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TubePlacement {
    /// Column of the first tube cell (the excitation column).
    pub glottis_col: usize,
    /// Per tube column: first air row and number of air rows.
    pub air_rows: Vec<(usize, usize)>,
    /// Row the probe is placed on: the centre of the mouth opening.
    pub axis_row: usize,
}

impl TubePlacement {
    pub fn columns(&self) -> usize {
        self.air_rows.len()
    }

    /// Column index one past the last tube column; its left face is the
    /// mouth plane.
    pub fn mouth_col(&self) -> usize {
        self.glottis_col + self.air_rows.len()
    }

    pub fn mouth_rows(&self) -> (usize, usize) {
        self.air_rows.last().copied().unwrap_or((self.axis_row, 0))
    }
}

/// The rasterised simulation domain. Immutable once built.
#[derive(Clone, Debug)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub ds: f64,
    pub kind: Vec<CellKind>,
    pub beta: Vec<f64>,
    /// Depth at pressure cells, `width * height`.
    pub depth_bar: Vec<f64>,
    /// Depth at `vx` faces, `(width + 1) * height`.
    pub depth_x: Vec<f64>,
    /// Depth at `vy` faces, `width * (height + 1)`.
    pub depth_y: Vec<f64>,
    /// Cells that belong to the tube (air, excitation, lining walls, open end).
    pub tube_mask: Vec<bool>,
    pub tube: TubePlacement,
    pub termination: Termination,
}

impl GridGeometry {
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    pub fn kind_at(&self, i: usize, j: usize) -> CellKind {
        self.kind[self.idx(i, j)]
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    /// x coordinate of the mouth plane, meters from the left domain edge.
    pub fn mouth_x(&self) -> f64 {
        self.tube.mouth_col() as f64 * self.ds
    }

    /// Cell containing the point `offset` meters from the mouth plane along
    /// the tube axis (negative = inside the tube).
    pub fn probe_cell(&self, offset: f64) -> Option<(usize, usize)> {
        let x = self.mouth_x() + offset;
        if x < 0.0 {
            return None;
        }
        // nudge so points sitting exactly on a face resolve to the cell behind it
        let i = ((x / self.ds) - 1e-9).floor().max(0.0) as usize;
        (i < self.width).then_some((i, self.tube.axis_row))
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.kind.iter().filter(|&&k| k == kind).count()
    }

    /// Cell-kind map, one text line per grid row, top row first.
    pub fn debug_dump(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for j in (0..self.height).rev() {
            for i in 0..self.width {
                out.push(self.kind_at(i, j).symbol());
            }
            out.push('\n');
        }
        out
    }

    /// Replaces every depth by 1, which turns the 2.5D update into the plain
    /// 2D one.
    pub fn with_unit_depth(mut self) -> Self {
        self.depth_bar.iter_mut().for_each(|d| *d = 1.0);
        self.depth_x.iter_mut().for_each(|d| *d = 1.0);
        self.depth_y.iter_mut().for_each(|d| *d = 1.0);
        self
    }

    pub(crate) fn refresh_beta(&mut self) {
        self.beta = self.kind.iter().map(|k| k.beta()).collect();
    }
}

/// Builds the complete geometry for a tube: rasterisation, optional
/// radiation domain and depth maps.
pub fn build_geometry(
    af: &AreaFunction,
    ds: f64,
    termination: Termination,
) -> Result<GridGeometry, GeometryError> {
    let geo = rasterize_tube(af, ds, termination)?;
    let geo = match termination {
        Termination::OpenEnd => geo,
        Termination::Radiation(layout) => add_radiation_domain(&geo, &layout)?,
    };
    Ok(sample_depths(af, geo))
}
