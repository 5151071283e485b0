//! Low-precision sun direction and cylindrical Earth shadow.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::{PhysicalConstants, OBLIQUITY};

/// Sun on a uniform circular path in the ecliptic, seen from Earth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunModel {
    /// Ecliptic longitude of the sun at `t = 0` [rad]. Zero puts the sun on +X.
    pub longitude_at_epoch: f64,
    /// Angular rate along the ecliptic [rad/s].
    pub rate: f64,
    /// Ecliptic obliquity [rad].
    pub obliquity: f64,
}

impl SunModel {
    pub fn new(constants: &PhysicalConstants, longitude_at_epoch: f64) -> Self {
        Self {
            longitude_at_epoch,
            rate: constants.sun_rate,
            obliquity: OBLIQUITY,
        }
    }

    /// Unit vector from Earth towards the sun in the inertial equatorial frame.
    pub fn direction(&self, t: f64) -> Vector3<f64> {
        let lon = self.longitude_at_epoch + self.rate * t;
        let (sl, cl) = lon.sin_cos();
        let (se, ce) = self.obliquity.sin_cos();
        Vector3::new(cl, sl * ce, sl * se)
    }
}

impl Default for SunModel {
    fn default() -> Self {
        Self::new(&PhysicalConstants::default(), 0.0)
    }
}

/// Sun direction `t` seconds after epoch with the default model.
pub fn sun_direction(t: f64) -> Vector3<f64> {
    SunModel::default().direction(t)
}

/// True iff `position` sits inside the cylindrical umbra behind the Earth.
pub fn is_eclipsed(position: &Vector3<f64>, sun_dir: &Vector3<f64>, r_earth: f64) -> bool {
    let along = position.dot(sun_dir);
    if along >= 0.0 {
        return false;
    }
    (position - along * sun_dir).norm() < r_earth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{R_EARTH, SIDEREAL_YEAR_S};
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;

    #[test]
    fn epoch_direction_is_plus_x() {
        assert_relative_eq!(sun_direction(0.0), Vector3::x(), epsilon = 1e-15);
    }

    #[test]
    fn quarter_year_is_perpendicular_in_ecliptic() {
        let s = sun_direction(SIDEREAL_YEAR_S / 4.0);
        assert!(s.dot(&Vector3::x()).abs() < 1e-12);
        let pole = Vector3::new(0.0, -OBLIQUITY.sin(), OBLIQUITY.cos());
        assert!(s.dot(&pole).abs() < 1e-12);
    }

    #[test]
    fn unit_norm() {
        for k in 0..1000 {
            let t = k as f64 * 37_123.7;
            assert_relative_eq!(sun_direction(t).norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn shadow_geometry() {
        let s = Vector3::x();
        assert!(is_eclipsed(&Vector3::new(-7000.0, 0.0, 0.0), &s, R_EARTH));
        assert!(!is_eclipsed(&Vector3::new(7000.0, 0.0, 0.0), &s, R_EARTH));
        assert!(!is_eclipsed(&Vector3::new(0.0, 7000.0, 0.0), &s, R_EARTH));
        assert!(!is_eclipsed(&Vector3::new(0.0, 0.0, 42000.0), &s, R_EARTH));
        // behind the Earth but outside the cylinder
        assert!(!is_eclipsed(&Vector3::new(-42000.0, 7000.0, 0.0), &s, R_EARTH));
    }

    #[test]
    fn shadow_is_rotation_invariant() {
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let s = sun_direction(1.0e6);
        for k in 0..360 {
            let ang = (k as f64).to_radians();
            let p = Vector3::new(8000.0 * ang.cos(), 8000.0 * ang.sin(), 1500.0);
            assert_eq!(
                is_eclipsed(&p, &s, R_EARTH),
                is_eclipsed(&(rot * p), &(rot * s), R_EARTH),
                "angle {k}"
            );
        }
    }
}
