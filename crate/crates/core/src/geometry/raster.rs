use super::radiation;
use super::{AreaFunction, CellKind, GeometryError, GridGeometry, Termination, TubePlacement};

/// Cells of padding around the tube in open-end mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Margin {
    /// Wall columns behind the glottis.
    pub glottis: usize,
    /// Columns after the Dirichlet column.
    pub lips: usize,
    /// Wall rows above and below the widest section.
    pub vertical: usize,
}

/// Open-end padding: one closing wall column at the glottis, the Dirichlet
/// column at the lips and one wall row on each side of the widest section.
pub const OPEN_END_MARGIN: Margin = Margin {
    glottis: 1,
    lips: 0,
    vertical: 1,
};

/// Air rows per tube column: `round(d / ds)`, at least one where the area is
/// nonzero.
pub(crate) fn column_heights(af: &AreaFunction, ds: f64) -> Result<Vec<usize>, GeometryError> {
    if !(ds > 0.0) || !ds.is_finite() {
        return Err(GeometryError::Resolution(format!("ds must be positive, got {ds}")));
    }
    let columns = (af.total_length() / ds).round() as usize;
    if columns == 0 {
        return Err(GeometryError::Resolution(format!(
            "ds = {ds} m is coarser than the {} m tube",
            af.total_length()
        )));
    }
    (0..columns)
        .map(|k| {
            let x = (k as f64 + 0.5) * ds;
            let area = af.area_at(x);
            if area <= 0.0 {
                return Err(GeometryError::Resolution(format!(
                    "tube column {k} (x = {x:.5} m) has zero area and closes the tract"
                )));
            }
            Ok(((af.diameter_at(x) / ds).round() as usize).max(1))
        })
        .collect()
}

/// Smallest domain holding the tube plus its padding, as `(width, height)`.
pub fn compute_domain_size(
    af: &AreaFunction,
    ds: f64,
    termination: Termination,
) -> Result<(usize, usize), GeometryError> {
    let heights = column_heights(af, ds)?;
    match termination {
        Termination::OpenEnd => {
            let m = OPEN_END_MARGIN;
            let tallest = heights.iter().copied().max().unwrap_or(0);
            Ok((m.glottis + heights.len() + 1 + m.lips, tallest + 2 * m.vertical))
        }
        Termination::Radiation(layout) => {
            let side = radiation::domain_side(&layout, ds);
            Ok((side, side))
        }
    }
}

/// Lays the tube out horizontally, centred vertically.
///
/// In open-end mode every non-tube cell is wall and the column after the
/// lips is the Dirichlet column. In radiation mode the tube is only lined by
/// a one-cell wall and the exit is left open; [`super::add_radiation_domain`]
/// then embeds it in the free field. Depths are left at 1 until
/// [`sample_depths`] runs.
pub fn rasterize_tube(
    af: &AreaFunction,
    ds: f64,
    termination: Termination,
) -> Result<GridGeometry, GeometryError> {
    let heights = column_heights(af, ds)?;
    let tallest = heights.iter().copied().max().unwrap_or(0);
    let m = OPEN_END_MARGIN;
    let glottis_col = m.glottis;
    let columns = heights.len();
    let width = m.glottis + columns + 1 + m.lips;
    let height = tallest + 2 * m.vertical;

    let air_rows: Vec<(usize, usize)> = heights
        .iter()
        .map(|&h| (m.vertical + (tallest - h) / 2, h))
        .collect();
    let (mouth_start, mouth_len) = air_rows[columns - 1];
    let tube = TubePlacement {
        glottis_col,
        axis_row: mouth_start + mouth_len / 2,
        air_rows,
    };

    let radiation = termination.is_radiation();
    let background = if radiation { CellKind::Air } else { CellKind::Wall };
    let mut kind = vec![background; width * height];
    let mut tube_mask = vec![!radiation; width * height];
    let idx = |i: usize, j: usize| j * width + i;

    for (k, &(start, len)) in tube.air_rows.iter().enumerate() {
        let i = glottis_col + k;
        let cell = if k == 0 { CellKind::Excitation } else { CellKind::Air };
        for j in start..start + len {
            kind[idx(i, j)] = cell;
            tube_mask[idx(i, j)] = true;
        }
    }

    let mouth_col = glottis_col + columns;
    if radiation {
        // Line the contour: every exterior cell sharing a face with tube air
        // becomes wall, except straight ahead of the exit.
        let is_tube_air = |kind: &[CellKind], i: usize, j: usize| {
            matches!(kind[idx(i, j)], CellKind::Air | CellKind::Excitation) && tube_mask[idx(i, j)]
        };
        let mut lining = Vec::new();
        for j in 0..height {
            for i in 0..width {
                if tube_mask[idx(i, j)] {
                    continue;
                }
                let exit = i == mouth_col && j >= mouth_start && j < mouth_start + mouth_len;
                if exit {
                    continue;
                }
                let touches = (i > 0 && is_tube_air(&kind, i - 1, j))
                    || (i + 1 < width && is_tube_air(&kind, i + 1, j))
                    || (j > 0 && is_tube_air(&kind, i, j - 1))
                    || (j + 1 < height && is_tube_air(&kind, i, j + 1));
                if touches {
                    lining.push(idx(i, j));
                }
            }
        }
        for c in lining {
            kind[c] = CellKind::Wall;
            tube_mask[c] = true;
        }
    } else {
        for j in mouth_start..mouth_start + mouth_len {
            kind[idx(mouth_col, j)] = CellKind::OpenEnd;
        }
    }

    let mut geo = GridGeometry {
        width,
        height,
        ds,
        beta: Vec::new(),
        depth_bar: vec![1.0; width * height],
        depth_x: vec![1.0; (width + 1) * height],
        depth_y: vec![1.0; width * (height + 1)],
        kind,
        tube_mask,
        tube,
        termination,
    };
    geo.refresh_beta();
    Ok(geo)
}

/// Fills the depth maps from the area function.
///
/// Tube cells take the diameter of the section under their centre (the glottis
/// and lip padding is clamped to the end sections); free-field cells take the
/// mouth-exit diameter. Face depths are the smaller of the two adjacent
/// cells, or the single adjacent cell on the domain edge. No face is deeper
/// than either cell it joins, which keeps the depth-weighted update stable
/// at the plain 2D time-step bound.
pub fn sample_depths(af: &AreaFunction, mut geo: GridGeometry) -> GridGeometry {
    let (w, h) = (geo.width, geo.height);
    let ds = geo.ds;
    let g = geo.tube.glottis_col as f64;
    let mouth = af.mouth_diameter();

    let column_depth: Vec<f64> = (0..w)
        .map(|i| af.diameter_at((i as f64 - g + 0.5) * ds))
        .collect();
    for j in 0..h {
        for (i, &d) in column_depth.iter().enumerate() {
            let c = j * w + i;
            geo.depth_bar[c] = if geo.tube_mask[c] { d } else { mouth };
        }
    }

    let bar = &geo.depth_bar;
    for j in 0..h {
        for i in 0..=w {
            let d = match (i, i == w) {
                (0, _) => bar[j * w],
                (_, true) => bar[j * w + w - 1],
                _ => bar[j * w + i - 1].min(bar[j * w + i]),
            };
            geo.depth_x[j * (w + 1) + i] = d;
        }
    }
    for j in 0..=h {
        for i in 0..w {
            let d = if j == 0 {
                bar[i]
            } else if j == h {
                bar[(h - 1) * w + i]
            } else {
                bar[(j - 1) * w + i].min(bar[j * w + i])
            };
            geo.depth_y[j * w + i] = d;
        }
    }
    geo
}
