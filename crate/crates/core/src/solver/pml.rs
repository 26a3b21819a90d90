//! Split-field absorbing layers.
//!
//! Inside a layer the pressure is carried as `px + py`; each part is damped
//! by the conductivity of its own axis, and each velocity component by the
//! conductivity along its direction. The conductivity grows polynomially
//! from zero at the inner edge of the layer to `sigma_max` at the domain
//! edge.

/// Grading of the absorbing layers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmlProfile {
    /// Polynomial order of the conductivity profile.
    pub order: f64,
    /// Conductivity at the outer edge, expressed through the theoretical
    /// normal-incidence reflection of the continuous layer.
    pub design_reflection: f64,
}

impl Default for PmlProfile {
    fn default() -> Self {
        Self {
            order: 2.0,
            design_reflection: 1e-4,
        }
    }
}

impl PmlProfile {
    /// A profile with zero conductivity everywhere.
    pub fn off() -> Self {
        Self {
            order: 2.0,
            design_reflection: 1.0,
        }
    }

    /// `sigma_max = -(m + 1) c ln(R) / (2 L)` for a layer of thickness `L`.
    pub fn sigma_max(&self, c: f64, thickness: f64) -> f64 {
        if thickness <= 0.0 {
            return 0.0;
        }
        -(self.order + 1.0) * c * self.design_reflection.ln() / (2.0 * thickness)
    }

    /// Conductivity at normalised depth `d` in `[0, 1]` into the layer.
    pub fn sigma(&self, sigma_max: f64, d: f64) -> f64 {
        if d <= 0.0 {
            0.0
        } else {
            sigma_max * d.min(1.0).powf(self.order)
        }
    }
}

/// Normalised depth into the absorbing band for a point at `pos` (in cells,
/// measured from the left/bottom domain edge) on an axis of `n` cells.
pub(crate) fn band_depth(pos: f64, n: usize, layers: usize) -> f64 {
    if layers == 0 {
        return 0.0;
    }
    let l = layers as f64;
    let from_low = l - pos;
    let from_high = pos - (n as f64 - l);
    from_low.max(from_high).max(0.0) / l
}

/// Damping pair `(a, b)` of the semi-implicit update
/// `u' = a u - b * rhs` for conductivity `sigma`.
pub(crate) fn damping(sigma: f64, dt: f64) -> (f64, f64) {
    let h = 0.5 * sigma * dt;
    ((1.0 - h) / (1.0 + h), 1.0 / (1.0 + h))
}

#[derive(Clone, Debug)]
pub(crate) struct PmlCell {
    pub cell: usize,
    pub ax: f64,
    pub bx: f64,
    pub ay: f64,
    pub by: f64,
    pub px: f64,
    pub py: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct PmlFace {
    pub face: usize,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct PmlState {
    pub cells: Vec<PmlCell>,
    pub vx_faces: Vec<PmlFace>,
    pub vy_faces: Vec<PmlFace>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_profile_is_zero_inside_and_one_at_edge() {
        let n = 40;
        assert_eq!(band_depth(20.0, n, 6), 0.0);
        assert_eq!(band_depth(6.0, n, 6), 0.0);
        assert_eq!(band_depth(0.0, n, 6), 1.0);
        assert_eq!(band_depth(40.0, n, 6), 1.0);
        assert!((band_depth(3.0, n, 6) - 0.5).abs() < 1e-15);
        assert!((band_depth(37.0, n, 6) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn off_profile_has_no_conductivity() {
        let p = PmlProfile::off();
        assert_eq!(p.sigma_max(350.0, 0.01), 0.0);
        assert_eq!(damping(0.0, 1e-6), (1.0, 1.0));
    }

    #[test]
    fn quadratic_growth() {
        let p = PmlProfile::default();
        let smax = p.sigma_max(350.0, 6.0 * 0.74e-3);
        assert!(smax > 0.0);
        assert!((p.sigma(smax, 0.5) - smax / 4.0).abs() < 1e-9 * smax);
        assert_eq!(p.sigma(smax, 1.0), smax);
    }
}
