//! Gauss variational equations, environmental perturbations and mass flow.

use nalgebra::{SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::constants::{PhysicalConstants, MU_SUN};
use crate::elements::{coe_to_cartesian, OrbitalElements, ECC_FLOOR, INC_FLOOR};
use crate::error::{QlawError, Result};
use crate::sun::{is_eclipsed, SunModel};

/// 5x3 Gauss matrix mapping an RTN acceleration to `d(a, e, i, raan, argp)/dt`.
pub type GaussMatrix = SMatrix<f64, 5, 3>;
pub type Vector5 = SVector<f64, 5>;

/// Acceleration in the radial / tangential / normal frame [km/s^2].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RtnAcceleration {
    pub r: f64,
    pub t: f64,
    pub n: f64,
}

impl RtnAcceleration {
    pub const ZERO: Self = Self { r: 0.0, t: 0.0, n: 0.0 };

    pub fn new(r: f64, t: f64, n: f64) -> Self {
        Self { r, t, n }
    }

    /// Scales a unit direction by an acceleration magnitude.
    pub fn from_direction(dir: &Vector3<f64>, magnitude: f64) -> Self {
        Self::new(dir.x * magnitude, dir.y * magnitude, dir.z * magnitude)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.r, self.t, self.n)
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }
}

impl std::ops::Add for RtnAcceleration {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.r + o.r, self.t + o.t, self.n + o.n)
    }
}

/// Propulsion parameters; mass is the current wet mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacecraftParams {
    pub mass_kg: f64,
    pub thrust_n: f64,
    pub isp_s: f64,
}

impl SpacecraftParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass_kg.is_finite() && self.mass_kg > 0.0) {
            return Err(QlawError::config("spacecraft.mass_kg", "must be > 0"));
        }
        if !(self.thrust_n.is_finite() && self.thrust_n >= 0.0) {
            return Err(QlawError::config("spacecraft.thrust_N", "must be >= 0"));
        }
        if !(self.isp_s.is_finite() && self.isp_s > 0.0) {
            return Err(QlawError::config("spacecraft.isp_s", "must be > 0"));
        }
        Ok(())
    }

    /// Thrust acceleration magnitude [km/s^2] at the given mass.
    pub fn accel(&self, mass_kg: f64) -> f64 {
        self.thrust_n / mass_kg * 1e-3
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbationToggles {
    pub j2: bool,
    /// Point-mass sun; not validated.
    pub third_body: bool,
    /// Cannonball radiation pressure; not validated.
    pub srp: bool,
}

/// Element rates: `dZ/dt` for the slow elements and `dtheta/dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRates {
    pub slow: Vector5,
    pub theta: f64,
}

// negated comparisons so that NaN elements are rejected too
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_nonsingular(el: &OrbitalElements) -> Result<()> {
    // floors are applied by `OrbitalElements::clamped`; allow for rounding at the floor
    if !(el.e >= ECC_FLOOR * (1.0 - 1e-9)) || el.e >= 1.0 {
        return Err(QlawError::SingularElements(format!("e = {:e}", el.e)));
    }
    if !(el.i.sin() >= INC_FLOOR.sin() * (1.0 - 1e-9)) {
        return Err(QlawError::SingularElements(format!("sin i = {:e}", el.i.sin())));
    }
    if !(el.a > 0.0) {
        return Err(QlawError::SingularElements(format!("a = {}", el.a)));
    }
    Ok(())
}

/// Gauss matrix `Phi(Z)` at the element set's current true anomaly.
///
/// Row order `(a, e, i, raan, argp)`, columns `(f_r, f_t, f_n)`.
pub fn gauss_matrix(el: &OrbitalElements, mu: f64) -> Result<GaussMatrix> {
    check_nonsingular(el)?;
    Ok(gauss_matrix_at(el, el.theta, mu))
}

/// Same as [`gauss_matrix`] at an arbitrary true anomaly, without the
/// singularity check (callers pass already-checked elements).
pub(crate) fn gauss_matrix_at(el: &OrbitalElements, theta: f64, mu: f64) -> GaussMatrix {
    let OrbitalElements { a, e, i, argp, .. } = *el;
    let p = el.p();
    let h = (mu * p).sqrt();
    let (st, ct) = theta.sin_cos();
    let r = p / (1.0 + e * ct);
    let (su, cu) = (theta + argp).sin_cos();
    let (si, ci) = i.sin_cos();
    let eh = e * h;
    let two_a2_h = 2.0 * a * a / h;

    GaussMatrix::new(
        two_a2_h * e * st,
        two_a2_h * p / r,
        0.0,
        p * st / h,
        ((p + r) * ct + r * e) / h,
        0.0,
        0.0,
        0.0,
        r * cu / h,
        0.0,
        0.0,
        r * su / (h * si),
        -p * ct / eh,
        (p + r) * st / eh,
        -r * su * ci / (h * si),
    )
}

/// Right-hand side of the Gauss variational equations.
pub fn state_rates(el: &OrbitalElements, u: &RtnAcceleration, mu: f64) -> Result<StateRates> {
    let phi = gauss_matrix(el, mu)?;
    Ok(rates_with_matrix(el, &phi, u, mu))
}

pub(crate) fn rates_with_matrix(el: &OrbitalElements, phi: &GaussMatrix, u: &RtnAcceleration, mu: f64) -> StateRates {
    let p = el.p();
    let h = (mu * p).sqrt();
    let (st, ct) = el.theta.sin_cos();
    let r = p / (1.0 + el.e * ct);
    let eh = el.e * h;
    let theta = h / (r * r) + p * ct / eh * u.r - (p + r) * st / eh * u.t;
    StateRates {
        slow: phi * u.as_vector(),
        theta,
    }
}

/// J2 oblateness acceleration resolved in RTN.
pub fn j2_accel_rtn(el: &OrbitalElements, constants: &PhysicalConstants) -> RtnAcceleration {
    let r = el.radius();
    let k = 1.5 * constants.mu * constants.j2 * constants.r_earth.powi(2) / r.powi(4);
    let (su, cu) = el.arg_latitude().sin_cos();
    let (si, ci) = el.i.sin_cos();
    RtnAcceleration::new(
        -k * (1.0 - 3.0 * si * si * su * su),
        -k * si * si * 2.0 * su * cu,
        -k * 2.0 * si * ci * su,
    )
}

fn inertial_to_rtn(el: &OrbitalElements, mu: f64, accel: &Vector3<f64>) -> RtnAcceleration {
    let frame = coe_to_cartesian(el, mu).rtn_to_inertial();
    let rtn = frame.transpose() * accel;
    RtnAcceleration::new(rtn.x, rtn.y, rtn.z)
}

/// Point-mass solar gravity (direct plus indirect term). Stub model.
pub fn third_body_accel_rtn(
    el: &OrbitalElements,
    t: f64,
    constants: &PhysicalConstants,
    sun: &SunModel,
) -> RtnAcceleration {
    let r_sat = coe_to_cartesian(el, constants.mu).position;
    let r_sun = sun.direction(t) * constants.au;
    let rel = r_sun - r_sat;
    let accel = MU_SUN * (rel / rel.norm().powi(3) - r_sun / r_sun.norm().powi(3));
    inertial_to_rtn(el, constants.mu, &accel)
}

/// Solar pressure at 1 AU [N/m^2].
const SOLAR_PRESSURE: f64 = 4.56e-6;
/// Fixed reflectivity coefficient of the cannonball stub.
pub const SRP_CR: f64 = 1.5;
/// Fixed area-to-mass ratio of the cannonball stub [m^2/kg].
pub const SRP_AREA_TO_MASS: f64 = 0.01;

/// Cannonball radiation pressure, zero in shadow. Stub model.
pub fn srp_accel_rtn(el: &OrbitalElements, t: f64, constants: &PhysicalConstants, sun: &SunModel) -> RtnAcceleration {
    let pos = coe_to_cartesian(el, constants.mu).position;
    let s = sun.direction(t);
    if is_eclipsed(&pos, &s, constants.r_earth) {
        return RtnAcceleration::ZERO;
    }
    let accel = -SOLAR_PRESSURE * SRP_CR * SRP_AREA_TO_MASS * 1e-3 * s;
    inertial_to_rtn(el, constants.mu, &accel)
}

/// Sum of the enabled environmental accelerations.
pub fn perturbation_accel(
    el: &OrbitalElements,
    t: f64,
    toggles: &PerturbationToggles,
    constants: &PhysicalConstants,
    sun: &SunModel,
) -> RtnAcceleration {
    let mut total = RtnAcceleration::ZERO;
    if toggles.j2 {
        total = total + j2_accel_rtn(el, constants);
    }
    if toggles.third_body {
        total = total + third_body_accel_rtn(el, t, constants, sun);
    }
    if toggles.srp {
        total = total + srp_accel_rtn(el, t, constants, sun);
    }
    total
}

/// Propellant mass flow [kg/s]; negative while thrusting.
pub fn mass_rate(sc: &SpacecraftParams, thrust_on: bool, g0_km_s2: f64) -> f64 {
    if thrust_on {
        -sc.thrust_n / (sc.isp_s * g0_km_s2 * 1e3)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{G0, MU_EARTH};
    use crate::elements::{cartesian_to_coe, wrap_pi, CartesianState};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn case_a() -> OrbitalElements {
        OrbitalElements::new(7000.0, 0.01, 0.05_f64.to_radians(), 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn unforced_rates() {
        let el = OrbitalElements::new(9000.0, 0.2, 0.5, 1.0, 2.0, 0.7).unwrap();
        let rates = state_rates(&el, &RtnAcceleration::ZERO, MU_EARTH).unwrap();
        assert_eq!(rates.slow, Vector5::zeros());
        let r = el.radius();
        assert_relative_eq!(rates.theta, el.h(MU_EARTH) / (r * r), max_relative = 1e-15);
    }

    #[test]
    fn no_radial_a_change_at_periapsis() {
        let phi = gauss_matrix(&case_a(), MU_EARTH).unwrap();
        assert_eq!(phi[(0, 0)], 0.0);
    }

    #[test]
    fn tangential_raises_a_at_periapsis() {
        let el = case_a();
        let f = 1.0 / 300.0 * 1e-3;
        let rates = state_rates(&el, &RtnAcceleration::new(0.0, f, 0.0), MU_EARTH).unwrap();
        let expected = 2.0 * el.a * el.a / el.h(MU_EARTH) * el.p() / el.radius() * f;
        assert_relative_eq!(rates.slow[0], expected, max_relative = 1e-14);
        assert!(rates.slow[0] > 0.0);
    }

    #[test]
    fn normal_thrust_at_quarter_latitude() {
        let el = OrbitalElements::new(9000.0, 0.1, 0.6, 0.0, 0.5, FRAC_PI_2 - 0.5).unwrap();
        let f = 1e-6;
        let rates = state_rates(&el, &RtnAcceleration::new(0.0, 0.0, f), MU_EARTH).unwrap();
        assert!(rates.slow[2].abs() < 1e-20);
        // raan rate is maximal over argument of latitude
        let best = (0..3600)
            .map(|k| {
                let th = k as f64 / 3600.0 * 2.0 * PI;
                let el2 = el.with_theta(th);
                let r = el2.radius();
                r * (th + el.argp).sin() / (el2.h(MU_EARTH) * el.i.sin()) * f
            })
            .fold(f64::MIN, f64::max);
        let r = el.radius();
        let at_quarter = r / (el.h(MU_EARTH) * el.i.sin()) * f;
        assert_relative_eq!(rates.slow[3], at_quarter, max_relative = 1e-14);
        // largest at u = pi/2 only for e = 0; here compare to within the radius variation
        assert!(rates.slow[3] > 0.0 && rates.slow[3] <= best * (1.0 + 1e-12));
    }

    #[test]
    fn singular_elements_rejected() {
        let mut el = case_a();
        el.e = 0.0;
        assert!(matches!(
            gauss_matrix(&el, MU_EARTH),
            Err(QlawError::SingularElements(_))
        ));
        let mut el = case_a();
        el.i = 0.0;
        assert!(gauss_matrix(&el, MU_EARTH).is_err());
    }

    /// Cartesian impulse oracle: a small RTN velocity kick converted back to
    /// elements reproduces the Gauss matrix columns.
    #[test]
    fn gauss_matrix_matches_impulse_jacobian() {
        let states = [
            OrbitalElements::new(9000.0, 0.3, 0.5, 0.4, 1.1, 0.9).unwrap(),
            OrbitalElements::new(24363.9, 0.73, 0.497, 0.0, 3.1, 2.5).unwrap(),
            OrbitalElements::new(7000.0, 0.05, 1.2, 5.0, 4.0, 4.4).unwrap(),
        ];
        for el in states {
            let phi = gauss_matrix(&el, MU_EARTH).unwrap();
            let base = coe_to_cartesian(&el, MU_EARTH);
            let frame = base.rtn_to_inertial();
            let dv = 1e-6;
            for col in 0..3 {
                let kick = frame.column(col) * dv;
                let plus =
                    cartesian_to_coe(&CartesianState::new(base.position, base.velocity + kick), MU_EARTH).unwrap();
                let minus =
                    cartesian_to_coe(&CartesianState::new(base.position, base.velocity - kick), MU_EARTH).unwrap();
                let diffs = [
                    plus.a - minus.a,
                    plus.e - minus.e,
                    plus.i - minus.i,
                    wrap_pi(plus.raan - minus.raan),
                    wrap_pi(plus.argp - minus.argp),
                ];
                for row in 0..5 {
                    let fd = diffs[row] / (2.0 * dv);
                    let scale = phi.row(row).abs().max();
                    assert!(
                        (fd - phi[(row, col)]).abs() <= 1e-6 * scale,
                        "row {row} col {col}: fd {fd} vs {}",
                        phi[(row, col)]
                    );
                }
            }
        }
    }

    #[test]
    fn j2_vanishes_without_oblateness() {
        let c = PhysicalConstants {
            j2: 0.0,
            ..Default::default()
        };
        let acc = j2_accel_rtn(&case_a(), &c);
        assert_eq!(acc.norm(), 0.0);
    }

    #[test]
    fn j2_normal_component_small_when_equatorial() {
        let c = PhysicalConstants::default();
        let el = OrbitalElements::new(7000.0, 0.01, INC_FLOOR, 0.0, 0.3, 1.0).unwrap();
        let acc = j2_accel_rtn(&el, &c);
        assert!(acc.n.abs() < 1e-3 * acc.r.abs());
    }

    #[test]
    fn j2_scales_inverse_fourth_power() {
        let c = PhysicalConstants::default();
        let el1 = OrbitalElements::new(7000.0, 0.0, 0.9, 0.0, 0.3, 1.0).unwrap();
        let el2 = OrbitalElements { a: 14000.0, ..el1 };
        let ratio = j2_accel_rtn(&el1, &c).norm() / j2_accel_rtn(&el2, &c).norm();
        assert_relative_eq!(ratio, 16.0, max_relative = 1e-12);
    }

    #[test]
    fn j2_matches_cartesian_gradient() {
        // standard inertial J2 acceleration, resolved in RTN
        let c = PhysicalConstants::default();
        let el = OrbitalElements::new(8000.0, 0.1, 0.8, 0.5, 1.2, 2.2).unwrap();
        let s = coe_to_cartesian(&el, c.mu);
        let (x, y, z) = (s.position.x, s.position.y, s.position.z);
        let r = s.position.norm();
        let k = 1.5 * c.j2 * c.mu * c.r_earth.powi(2) / r.powi(5);
        let zr2 = 5.0 * z * z / (r * r);
        let inertial = Vector3::new(-k * x * (1.0 - zr2), -k * y * (1.0 - zr2), -k * z * (3.0 - zr2));
        let rtn = s.rtn_to_inertial().transpose() * inertial;
        let ours = j2_accel_rtn(&el, &c).as_vector();
        assert_relative_eq!(ours, rtn, max_relative = 1e-10);
    }

    #[test]
    fn case_c_mass_flow() {
        let sc = SpacecraftParams {
            mass_kg: 1200.0,
            thrust_n: 0.312,
            isp_s: 1800.0,
        };
        assert_relative_eq!(
            mass_rate(&sc, true, G0),
            -0.312 / (1800.0 * 9.80665),
            max_relative = 1e-14
        );
        assert_eq!(mass_rate(&sc, false, G0), 0.0);
    }

    #[test]
    fn stubs_are_small_and_finite() {
        let c = PhysicalConstants::default();
        let sun = SunModel::default();
        let el = OrbitalElements::new(42164.0, 0.01, 0.1, 0.0, 0.0, 1.0).unwrap();
        let tb = third_body_accel_rtn(&el, 0.0, &c, &sun);
        let srp = srp_accel_rtn(&el, 0.0, &c, &sun);
        assert!(tb.norm().is_finite() && tb.norm() < 1e-8);
        assert!(srp.norm().is_finite() && srp.norm() < 1e-9);
    }
}
