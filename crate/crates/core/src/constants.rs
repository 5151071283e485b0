use serde::{Deserialize, Serialize};

use crate::error::{QlawError, Result};

/// Earth gravitational parameter [km^3/s^2].
pub const MU_EARTH: f64 = 398_600.441_8;
/// Earth equatorial radius [km].
pub const R_EARTH: f64 = 6378.137;
/// Earth oblateness coefficient.
pub const J2_EARTH: f64 = 1.082_63e-3;
/// Standard gravity [km/s^2].
pub const G0: f64 = 9.806_65e-3;
/// Astronomical unit [km].
pub const AU: f64 = 149_597_870.7;
/// Sun gravitational parameter [km^3/s^2].
pub const MU_SUN: f64 = 1.327_124_400_18e11;
/// Sidereal year [s].
pub const SIDEREAL_YEAR_S: f64 = 365.256_363 * 86_400.0;
/// Mean obliquity of the ecliptic [rad] (23.44 deg).
pub const OBLIQUITY: f64 = 23.44 * std::f64::consts::PI / 180.0;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Physical constants used by the dynamics and the sun model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Gravitational parameter [km^3/s^2].
    pub mu: f64,
    /// Equatorial radius [km].
    pub r_earth: f64,
    pub j2: f64,
    /// Standard gravity [km/s^2].
    pub g0: f64,
    /// Astronomical unit [km].
    pub au: f64,
    /// Mean angular rate of the sun along the ecliptic [rad/s].
    pub sun_rate: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            mu: MU_EARTH,
            r_earth: R_EARTH,
            j2: J2_EARTH,
            g0: G0,
            au: AU,
            sun_rate: 2.0 * std::f64::consts::PI / SIDEREAL_YEAR_S,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu", self.mu),
            ("r_earth", self.r_earth),
            ("j2", self.j2),
            ("g0", self.g0),
            ("au", self.au),
            ("sun_rate", self.sun_rate),
        ];
        for (key, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(QlawError::config(key, format!("must be > 0, got {value}")));
            }
        }
        Ok(())
    }
}
