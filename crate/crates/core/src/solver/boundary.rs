//! Locally reacting wall model.

use super::{PhysicalConstants, SolverError};

/// Normal-incidence absorption coefficient for a boundary admittance `mu`,
/// using the normalised-admittance convention `alpha = 1 - ((1-mu)/(1+mu))^2`.
pub fn absorption_from_admittance(mu: f64) -> Result<f64, SolverError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(SolverError::Domain(format!(
            "boundary admittance must lie in (0, 1), got {mu}"
        )));
    }
    let r = (1.0 - mu) / (1.0 + mu);
    Ok(1.0 - r * r)
}

/// Normal acoustic impedance of the walls, `rho c (1 + sqrt(1-a)) / (1 - sqrt(1-a))`.
///
/// With the admittance mapping above this is algebraically `rho c / mu`.
pub fn wall_impedance(constants: &PhysicalConstants) -> Result<f64, SolverError> {
    let alpha = absorption_from_admittance(constants.mu)?;
    let root = (1.0 - alpha).sqrt();
    Ok(constants.rho * constants.c * (1.0 + root) / (1.0 - root))
}

/// Velocity into the wall driven by the pressure `p_w` of the air cell in
/// front of it; `normal` points from the air cell into the wall.
pub fn wall_velocity(p_w: f64, z_n: f64, normal: [f64; 2]) -> [f64; 2] {
    let v = p_w / z_n;
    [v * normal[0], v * normal[1]]
}
