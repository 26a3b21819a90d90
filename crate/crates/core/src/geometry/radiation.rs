//! Free-field domain around the tube: circular baffle plus absorbing layers.

use super::{CellKind, GeometryError, GridGeometry, Termination, TubePlacement};

/// Ring cells satisfy `inner <= r - R < outer`, in cells.
const RING_INNER: f64 = -0.5;
const RING_OUTER: f64 = 1.5;

/// Baffle and absorbing-layer dimensions for the radiation termination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiationLayout {
    /// Baffle diameter in meters.
    pub baffle_diameter: f64,
    /// Absorbing layers on each domain edge.
    pub pml_layers: usize,
    /// Free-field cells between the baffle and the absorbing layers.
    pub free_field_margin: usize,
}

impl Default for RadiationLayout {
    fn default() -> Self {
        Self {
            baffle_diameter: 0.20,
            pml_layers: 6,
            free_field_margin: 8,
        }
    }
}

fn baffle_radius_cells(layout: &RadiationLayout, ds: f64) -> f64 {
    layout.baffle_diameter / (2.0 * ds)
}

fn half_side(layout: &RadiationLayout, ds: f64) -> usize {
    (baffle_radius_cells(layout, ds) + RING_OUTER).ceil() as usize
        + layout.free_field_margin
        + layout.pml_layers
}

/// Side length (cells) of the square radiation domain.
pub(crate) fn domain_side(layout: &RadiationLayout, ds: f64) -> usize {
    2 * half_side(layout, ds)
}

/// Embeds a tube rasterised in radiation mode into a square free-field domain.
///
/// The baffle circle is centred on the mouth axis and shifted along it so the
/// circle passes through the lip edges of the exit cross-section; the ring is
/// left open across the mouth aperture. Everything inside the baffle that is
/// not tube is air. `pml_layers` rings of absorbing cells line the four edges.
pub fn add_radiation_domain(
    geo: &GridGeometry,
    layout: &RadiationLayout,
) -> Result<GridGeometry, GeometryError> {
    if !geo.termination.is_radiation() {
        return Err(GeometryError::Geometry(
            "tube must be rasterised in radiation mode".into(),
        ));
    }
    if !(layout.baffle_diameter > 0.0) {
        return Err(GeometryError::Geometry("baffle diameter must be positive".into()));
    }
    let ds = geo.ds;
    let radius = baffle_radius_cells(layout, ds);
    let half = half_side(layout, ds);
    let side = 2 * half;
    let centre = half as f64;

    let (mouth_start, mouth_len) = geo.tube.mouth_rows();
    let half_mouth = mouth_len as f64 / 2.0;
    let columns = geo.tube.columns();
    if radius <= half_mouth + 1.0 || 2.0 * radius < columns as f64 {
        return Err(GeometryError::Geometry(format!(
            "baffle diameter {} m cannot hold a {:.4} m tube",
            layout.baffle_diameter,
            columns as f64 * ds
        )));
    }

    let mouth_x = centre + (radius * radius - half_mouth * half_mouth).sqrt();
    let glottis_col = (mouth_x - columns as f64).round();
    let mouth_centre = mouth_start as f64 + half_mouth;
    let shift_y = (centre - mouth_centre).round();
    let shift_x = glottis_col - geo.tube.glottis_col as f64;
    if shift_x < 0.0 || shift_y < 0.0 {
        return Err(GeometryError::Geometry("tube does not fit inside the domain".into()));
    }
    let (dx, dy) = (shift_x as usize, shift_y as usize);
    let tube = TubePlacement {
        glottis_col: geo.tube.glottis_col + dx,
        air_rows: geo.tube.air_rows.iter().map(|&(s, n)| (s + dy, n)).collect(),
        axis_row: geo.tube.axis_row + dy,
    };
    let mouth_col = tube.mouth_col();
    let (ap_start, ap_len) = tube.mouth_rows();

    let mut kind = vec![CellKind::Air; side * side];
    let mut tube_mask = vec![false; side * side];
    let dist = |i: usize, j: usize| {
        let x = i as f64 + 0.5 - centre;
        let y = j as f64 + 0.5 - centre;
        (x * x + y * y).sqrt()
    };

    for j in 0..geo.height {
        for i in 0..geo.width {
            let src = j * geo.width + i;
            if !geo.tube_mask[src] {
                continue;
            }
            let (ni, nj) = (i + dx, j + dy);
            if ni >= side || nj >= side {
                return Err(GeometryError::Geometry("tube does not fit inside the domain".into()));
            }
            // the lips may touch the ring; everything behind them must clear it
            let limit = if ni + 2 >= mouth_col {
                radius + RING_OUTER
            } else {
                radius + RING_INNER
            };
            if dist(ni, nj) > limit {
                return Err(GeometryError::Geometry(format!(
                    "baffle diameter {} m is too small for the tube contour",
                    layout.baffle_diameter
                )));
            }
            let dst = nj * side + ni;
            kind[dst] = geo.kind[src];
            tube_mask[dst] = true;
        }
    }

    for j in 0..side {
        for i in 0..side {
            let c = j * side + i;
            if tube_mask[c] {
                continue;
            }
            let aperture = i + 2 >= mouth_col && j >= ap_start && j < ap_start + ap_len;
            let r = dist(i, j) - radius;
            if !aperture && (RING_INNER..RING_OUTER).contains(&r) {
                kind[c] = CellKind::Baffle;
            }
        }
    }

    let layers = layout.pml_layers;
    for j in 0..side {
        for i in 0..side {
            let edge = i < layers || j < layers || i >= side - layers || j >= side - layers;
            let c = j * side + i;
            if edge && kind[c] == CellKind::Air && !tube_mask[c] {
                kind[c] = CellKind::AbsorbingLayer;
            }
        }
    }

    let mut out = GridGeometry {
        width: side,
        height: side,
        ds,
        beta: Vec::new(),
        depth_bar: vec![1.0; side * side],
        depth_x: vec![1.0; (side + 1) * side],
        depth_y: vec![1.0; side * (side + 1)],
        kind,
        tube_mask,
        tube,
        termination: Termination::Radiation(*layout),
    };
    out.refresh_beta();
    Ok(out)
}

/// Rectangular free-field domain with no tube: air lined with `pml_layers`
/// absorbing rings on every edge, unit depth everywhere. The tube placement
/// is empty and its axis row is the middle row.
pub fn free_field_domain(width: usize, height: usize, ds: f64, layout: &RadiationLayout) -> GridGeometry {
    let layers = layout.pml_layers;
    let kind = (0..width * height)
        .map(|c| {
            let (i, j) = (c % width, c / width);
            if i < layers || j < layers || i + layers >= width || j + layers >= height {
                CellKind::AbsorbingLayer
            } else {
                CellKind::Air
            }
        })
        .collect();
    let mut out = GridGeometry {
        width,
        height,
        ds,
        beta: Vec::new(),
        depth_bar: vec![1.0; width * height],
        depth_x: vec![1.0; (width + 1) * height],
        depth_y: vec![1.0; width * (height + 1)],
        kind,
        tube_mask: vec![false; width * height],
        tube: TubePlacement {
            glottis_col: 0,
            air_rows: Vec::new(),
            axis_row: height / 2,
        },
        termination: Termination::Radiation(*layout),
    };
    out.refresh_beta();
    out
}
