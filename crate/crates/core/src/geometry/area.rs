//! Tube area functions and the plain-text format they are stored in.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read};

use super::GeometryError;

/// One cylindrical segment of the tube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Section {
    /// Axial length in meters.
    pub length: f64,
    /// Cross-sectional area in square meters.
    pub area: f64,
}

/// A tube described as consecutive sections, ordered from the glottis to the lips.
#[derive(Clone, Debug, PartialEq)]
pub struct AreaFunction {
    name: String,
    sections: Vec<Section>,
}

/// Length units accepted in area-function files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AreaUnits {
    /// Lengths in cm, areas in cm².
    Centimeters,
    /// Lengths in m, areas in m².
    Meters,
}

impl AreaUnits {
    fn length_scale(self) -> f64 {
        match self {
            AreaUnits::Centimeters => 1e-2,
            AreaUnits::Meters => 1.0,
        }
    }
}

/// How an area-function byte stream is laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AreaFormat {
    /// `axial_length,area` rows preceded by a mandatory `# units: cm` or
    /// `# units: m` header line.
    Csv,
    /// Header-less `axial_length,area` rows already in SI units.
    BareSi,
}

impl AreaFunction {
    pub fn new(name: impl Into<String>, sections: Vec<Section>) -> Result<Self, GeometryError> {
        if sections.is_empty() {
            return Err(GeometryError::Empty);
        }
        for (index, s) in sections.iter().enumerate() {
            if !s.length.is_finite() || s.length <= 0.0 {
                return Err(GeometryError::InvalidSection {
                    index,
                    reason: format!("axial length must be positive, got {}", s.length),
                });
            }
            if !s.area.is_finite() {
                return Err(GeometryError::InvalidSection {
                    index,
                    reason: "area is not finite".into(),
                });
            }
            if s.area < 0.0 {
                return Err(GeometryError::NegativeArea { index, area: s.area });
            }
        }
        Ok(Self {
            name: name.into(),
            sections,
        })
    }

    /// A uniform cylinder of the given length and diameter.
    pub fn uniform(name: impl Into<String>, length: f64, diameter: f64) -> Result<Self, GeometryError> {
        let area = PI * diameter * diameter / 4.0;
        Self::new(name, vec![Section { length, area }])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn total_length(&self) -> f64 {
        self.sections.iter().map(|s| s.length).sum()
    }

    /// Area of the section containing the axial position `x` (meters from the
    /// glottis). Positions outside the tube are clamped to the end sections.
    pub fn area_at(&self, x: f64) -> f64 {
        let mut start = 0.0;
        for s in &self.sections {
            let end = start + s.length;
            if x < end {
                return s.area;
            }
            start = end;
        }
        self.sections[self.sections.len() - 1].area
    }

    pub fn diameter_at(&self, x: f64) -> f64 {
        diameter_of(self.area_at(x))
    }

    /// Largest diameter over all sections.
    pub fn max_diameter(&self) -> f64 {
        self.sections
            .iter()
            .map(|s| diameter_of(s.area))
            .fold(0.0, f64::max)
    }

    pub fn mouth_diameter(&self) -> f64 {
        diameter_of(self.sections[self.sections.len() - 1].area)
    }

    /// Writes the area function as a `# units: m` CSV file.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# units: m\n");
        for s in &self.sections {
            out.push_str(&format!("{},{}\n", s.length, s.area));
        }
        out
    }
}

// Area validity is enforced by `AreaFunction::new`, so the internal helper
// skips the check.
fn diameter_of(area: f64) -> f64 {
    2.0 * (area / PI).sqrt()
}

/// Diameter of a circle with the given area. The same value is used as the
/// 2D contour height and as the local tube depth.
pub fn area_to_diameter(area: f64) -> Result<f64, GeometryError> {
    if !(area >= 0.0) {
        return Err(GeometryError::Domain(format!(
            "area must be non-negative, got {area}"
        )));
    }
    Ok(diameter_of(area))
}

/// Parses an area function. Blank lines and `#` comments are ignored; the
/// units header is recognised anywhere before the first data row.
pub fn load_area_function<R: Read>(
    source: R,
    format: AreaFormat,
) -> Result<AreaFunction, GeometryError> {
    let reader = BufReader::new(source);
    let mut units = match format {
        AreaFormat::Csv => None,
        AreaFormat::BareSi => Some(AreaUnits::Meters),
    };
    let mut sections = Vec::new();

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(u) = parse_units_header(comment) {
                if !sections.is_empty() {
                    return Err(GeometryError::Parse {
                        line: line_no,
                        reason: "units header must precede the data rows".into(),
                    });
                }
                units = Some(u.map_err(|reason| GeometryError::Parse {
                    line: line_no,
                    reason,
                })?);
            }
            continue;
        }
        let Some(u) = units else {
            return Err(GeometryError::Parse {
                line: line_no,
                reason: "missing '# units: cm' or '# units: m' header".into(),
            });
        };
        let mut cols = trimmed.split(',').map(str::trim);
        let (Some(len), Some(area), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(GeometryError::Parse {
                line: line_no,
                reason: format!("expected two comma-separated columns, got '{trimmed}'"),
            });
        };
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| GeometryError::Parse {
                line: line_no,
                reason: format!("'{s}': {e}"),
            })
        };
        let scale = u.length_scale();
        sections.push(Section {
            length: parse(len)? * scale,
            area: parse(area)? * scale * scale,
        });
    }

    AreaFunction::new("", sections)
}

fn parse_units_header(comment: &str) -> Option<Result<AreaUnits, String>> {
    let (key, value) = comment.split_once(':')?;
    if !key.trim().eq_ignore_ascii_case("units") {
        return None;
    }
    Some(match value.trim().to_ascii_lowercase().as_str() {
        "cm" => Ok(AreaUnits::Centimeters),
        "m" => Ok(AreaUnits::Meters),
        other => Err(format!("unknown units '{other}'")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bare_rows_map_directly() {
        let af = load_area_function("0.00525,0.00045\n0.00525,0.000305".as_bytes(), AreaFormat::BareSi)
            .unwrap();
        assert_eq!(af.sections().len(), 2);
        assert_relative_eq!(af.total_length(), 0.0105, max_relative = 1e-12);
        assert_eq!(af.sections()[1].area, 0.000305);
    }

    #[test]
    fn centimeter_header_converts_to_si() {
        let text = "# units: cm\n0.5,2.0\n0.5,1.0\n";
        let af = load_area_function(text.as_bytes(), AreaFormat::Csv).unwrap();
        assert_relative_eq!(af.sections()[0].length, 0.005, max_relative = 1e-12);
        assert_relative_eq!(af.sections()[0].area, 2.0e-4, max_relative = 1e-12);
    }

    #[test]
    fn empty_input_is_rejected() {
        let err = load_area_function("# units: m\n".as_bytes(), AreaFormat::Csv).unwrap_err();
        assert!(matches!(err, GeometryError::Empty));
        assert_eq!(err.to_string(), "no sections");
        let err = load_area_function("".as_bytes(), AreaFormat::BareSi).unwrap_err();
        assert!(matches!(err, GeometryError::Empty));
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let text = "# units: m\n0.01,0.0001\n0.01;0.0002\n";
        match load_area_function(text.as_bytes(), AreaFormat::Csv) {
            Err(GeometryError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "# units: m\n0.01,abc\n";
        match load_area_function(text.as_bytes(), AreaFormat::Csv) {
            Err(GeometryError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn header_is_mandatory_for_csv() {
        let err = load_area_function("0.01,0.0001\n".as_bytes(), AreaFormat::Csv).unwrap_err();
        assert!(matches!(err, GeometryError::Parse { line: 1, .. }));
    }

    #[test]
    fn negative_area_is_a_validation_error() {
        let err = load_area_function("# units: m\n0.01,-0.0001\n".as_bytes(), AreaFormat::Csv)
            .unwrap_err();
        assert!(matches!(err, GeometryError::NegativeArea { index: 0, .. }));
    }

    #[test]
    fn diameters() {
        assert_relative_eq!(area_to_diameter(PI * 1e-4).unwrap(), 0.02, max_relative = 1e-12);
        assert_eq!(area_to_diameter(0.0).unwrap(), 0.0);
        // 2 * sqrt(4e-4 / pi), evaluated independently: 0.02256758334...
        assert_relative_eq!(area_to_diameter(4e-4).unwrap(), 0.022_567_583_34, max_relative = 1e-9);
        assert!(area_to_diameter(-1e-6).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let af = AreaFunction::new(
            "x",
            vec![
                Section { length: 0.004, area: 1.5e-4 },
                Section { length: 0.006, area: 3.0e-4 },
            ],
        )
        .unwrap();
        let back = load_area_function(af.to_csv().as_bytes(), AreaFormat::Csv).unwrap();
        assert_eq!(back.sections(), af.sections());
    }

    #[test]
    fn area_lookup_by_position() {
        let af = AreaFunction::new(
            "",
            vec![
                Section { length: 0.01, area: 1.0 },
                Section { length: 0.01, area: 2.0 },
            ],
        )
        .unwrap();
        assert_eq!(af.area_at(0.005), 1.0);
        assert_eq!(af.area_at(0.015), 2.0);
        assert_eq!(af.area_at(-1.0), 1.0);
        assert_eq!(af.area_at(1.0), 2.0);
    }
}
