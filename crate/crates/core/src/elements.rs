//! Classical orbital elements, Cartesian conversion and element targets.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{QlawError, Result};

/// Smallest eccentricity carried by the propagated state.
pub const ECC_FLOOR: f64 = 1e-4;
/// Smallest inclination (and distance from pi) carried by the propagated state [rad].
pub const INC_FLOOR: f64 = 1e-4;

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_two_pi(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let w = wrap_two_pi(angle);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// The five slow elements, in the order used by every gradient and Gauss row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    A,
    E,
    I,
    Raan,
    Argp,
}

impl Element {
    pub const ALL: [Element; 5] = [Element::A, Element::E, Element::I, Element::Raan, Element::Argp];

    pub const fn index(self) -> usize {
        match self {
            Element::A => 0,
            Element::E => 1,
            Element::I => 2,
            Element::Raan => 3,
            Element::Argp => 4,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Element::A => "a",
            Element::E => "e",
            Element::I => "i",
            Element::Raan => "raan",
            Element::Argp => "argp",
        }
    }

    pub const fn is_angle(self) -> bool {
        matches!(self, Element::Raan | Element::Argp)
    }
}

/// Signed distance `d(z, z_T)` between an osculating element and its target.
///
/// Plain difference for `a`, `e`, `i`; wrapped into `[-pi, pi]` for the node and
/// perigee angles. The wrap is odd, so `d(x, y) == -d(y, x)` holds exactly.
pub fn angular_distance(which: Element, value: f64, target: f64) -> f64 {
    let d = value - target;
    if which.is_angle() {
        d - TAU * (d / TAU).round()
    } else {
        d
    }
}

/// Osculating classical elements. Distances in km, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub theta: f64,
}

impl OrbitalElements {
    /// Builds a validated element set; angles are wrapped into `[0, 2pi)`.
    pub fn new(a: f64, e: f64, i: f64, raan: f64, argp: f64, theta: f64) -> Result<Self> {
        let el = Self {
            a,
            e,
            i,
            raan: wrap_two_pi(raan),
            argp: wrap_two_pi(argp),
            theta: wrap_two_pi(theta),
        };
        el.validate()?;
        Ok(el)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.e, self.i, self.raan, self.argp, self.theta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(QlawError::InvalidElements(format!("non-finite value in {self:?}")));
        }
        if self.a <= 0.0 {
            return Err(QlawError::InvalidElements(format!("a = {} must be > 0", self.a)));
        }
        if !(0.0..1.0).contains(&self.e) {
            return Err(QlawError::InvalidElements(format!(
                "e = {} outside the elliptic range [0, 1)",
                self.e
            )));
        }
        if !(0.0..=PI).contains(&self.i) {
            return Err(QlawError::InvalidElements(format!("i = {} outside [0, pi]", self.i)));
        }
        Ok(())
    }

    /// Slow elements `(a, e, i, raan, argp)`.
    pub fn slow(&self) -> [f64; 5] {
        [self.a, self.e, self.i, self.raan, self.argp]
    }

    pub fn get(&self, which: Element) -> f64 {
        self.slow()[which.index()]
    }

    pub fn with(mut self, which: Element, value: f64) -> Self {
        match which {
            Element::A => self.a = value,
            Element::E => self.e = value,
            Element::I => self.i = value,
            Element::Raan => self.raan = value,
            Element::Argp => self.argp = value,
        }
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// Copy with `e` and `i` pushed off the singular boundaries and angles wrapped.
    pub fn clamped(&self) -> Self {
        Self {
            a: self.a,
            e: self.e.max(ECC_FLOOR),
            i: self.i.clamp(INC_FLOOR, PI - INC_FLOOR),
            raan: wrap_two_pi(self.raan),
            argp: wrap_two_pi(self.argp),
            theta: wrap_two_pi(self.theta),
        }
    }

    /// Semi-latus rectum [km].
    pub fn p(&self) -> f64 {
        self.a * (1.0 - self.e * self.e)
    }

    /// Specific angular momentum [km^2/s].
    pub fn h(&self, mu: f64) -> f64 {
        (mu * self.p()).sqrt()
    }

    /// Orbital radius at the current true anomaly [km].
    pub fn radius(&self) -> f64 {
        self.p() / (1.0 + self.e * self.theta.cos())
    }

    pub fn periapsis(&self) -> f64 {
        self.a * (1.0 - self.e)
    }

    pub fn apoapsis(&self) -> f64 {
        self.a * (1.0 + self.e)
    }

    pub fn period(&self, mu: f64) -> f64 {
        TAU * (self.a.powi(3) / mu).sqrt()
    }

    pub fn mean_motion(&self, mu: f64) -> f64 {
        (mu / self.a.powi(3)).sqrt()
    }

    /// Argument of latitude `argp + theta`.
    pub fn arg_latitude(&self) -> f64 {
        self.argp + self.theta
    }
}

/// Inertial position [km] and velocity [km/s].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl CartesianState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self { position, velocity }
    }

    pub fn specific_energy(&self, mu: f64) -> f64 {
        0.5 * self.velocity.norm_squared() - mu / self.position.norm()
    }

    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.position.cross(&self.velocity)
    }

    /// Columns are the radial, tangential and normal unit vectors.
    pub fn rtn_to_inertial(&self) -> Matrix3<f64> {
        let r_hat = self.position.normalize();
        let n_hat = self.angular_momentum().normalize();
        let t_hat = n_hat.cross(&r_hat);
        Matrix3::from_columns(&[r_hat, t_hat, n_hat])
    }
}

/// Perifocal-to-inertial rotation R3(-raan) R1(-i) R3(-argp).
fn perifocal_to_inertial(raan: f64, i: f64, argp: f64) -> Matrix3<f64> {
    let (so, co) = raan.sin_cos();
    let (si, ci) = i.sin_cos();
    let (sw, cw) = argp.sin_cos();
    Matrix3::new(
        co * cw - so * sw * ci,
        -co * sw - so * cw * ci,
        so * si,
        so * cw + co * sw * ci,
        -so * sw + co * cw * ci,
        -co * si,
        sw * si,
        cw * si,
        ci,
    )
}

pub fn coe_to_cartesian(el: &OrbitalElements, mu: f64) -> CartesianState {
    let p = el.p();
    let (st, ct) = el.theta.sin_cos();
    let r = p / (1.0 + el.e * ct);
    let vs = (mu / p).sqrt();
    let r_pf = Vector3::new(r * ct, r * st, 0.0);
    let v_pf = Vector3::new(-vs * st, vs * (el.e + ct), 0.0);
    let rot = perifocal_to_inertial(el.raan, el.i, el.argp);
    CartesianState::new(rot * r_pf, rot * v_pf)
}

/// Representability floor below which `e` or `sin i` is treated as degenerate.
const DEGENERATE_FLOOR: f64 = 1e-12;

pub fn cartesian_to_coe(state: &CartesianState, mu: f64) -> Result<OrbitalElements> {
    let r_vec = state.position;
    let v_vec = state.velocity;
    let r = r_vec.norm();
    if !(r.is_finite() && r > 0.0) || v_vec.iter().any(|v| !v.is_finite()) {
        return Err(QlawError::DegenerateOrbit("non-finite or zero position".into()));
    }
    let h_vec = r_vec.cross(&v_vec);
    let h = h_vec.norm();
    if h <= DEGENERATE_FLOOR * r * v_vec.norm().max(f64::MIN_POSITIVE) {
        return Err(QlawError::DegenerateOrbit("rectilinear trajectory (h = 0)".into()));
    }
    let energy = state.specific_energy(mu);
    if energy >= 0.0 {
        return Err(QlawError::DegenerateOrbit(format!(
            "non-elliptic trajectory (energy = {energy})"
        )));
    }
    let a = -mu / (2.0 * energy);

    let e_vec = ((v_vec.norm_squared() - mu / r) * r_vec - r_vec.dot(&v_vec) * v_vec) / mu;
    let e = e_vec.norm();

    let h_xy = h_vec.x.hypot(h_vec.y);
    let i = h_xy.atan2(h_vec.z);
    if e < DEGENERATE_FLOOR || h_xy < DEGENERATE_FLOOR * h {
        return Err(QlawError::DegenerateOrbit(format!(
            "e = {e:e}, sin i = {:e} below representability floor",
            h_xy / h
        )));
    }

    let raan = h_vec.x.atan2(-h_vec.y);
    let h_hat = h_vec / h;
    let node = Vector3::new(raan.cos(), raan.sin(), 0.0);
    let q_hat = h_hat.cross(&node);
    let argp = e_vec.dot(&q_hat).atan2(e_vec.dot(&node));
    let arg_lat = r_vec.dot(&q_hat).atan2(r_vec.dot(&node));

    Ok(OrbitalElements {
        a,
        e,
        i,
        raan: wrap_two_pi(raan),
        argp: wrap_two_pi(argp),
        theta: wrap_two_pi(arg_lat - argp),
    })
}

/// Target values for the slow elements; `None` marks an element as free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub values: [Option<f64>; 5],
    pub tolerances: [f64; 5],
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            values: [None; 5],
            tolerances: [
                10.0,
                1e-3,
                0.01_f64.to_radians(),
                0.01_f64.to_radians(),
                0.01_f64.to_radians(),
            ],
        }
    }
}

impl TargetSpec {
    pub fn with_target(mut self, which: Element, value: f64) -> Self {
        self.values[which.index()] = Some(value);
        self
    }

    pub fn with_tolerance(mut self, which: Element, tol: f64) -> Self {
        self.tolerances[which.index()] = tol;
        self
    }

    pub fn target(&self, which: Element) -> Option<f64> {
        self.values[which.index()]
    }

    pub fn tolerance(&self, which: Element) -> f64 {
        self.tolerances[which.index()]
    }

    pub fn is_targeted(&self, which: Element) -> bool {
        self.target(which).is_some()
    }

    /// Targeted elements with their target values.
    pub fn targeted(&self) -> impl Iterator<Item = (Element, f64)> + '_ {
        Element::ALL.into_iter().filter_map(|z| self.target(z).map(|t| (z, t)))
    }

    /// Signed distance for a targeted element, `None` when free.
    pub fn distance(&self, el: &OrbitalElements, which: Element) -> Option<f64> {
        self.target(which).map(|t| angular_distance(which, el.get(which), t))
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.iter().all(Option::is_none) {
            return Err(QlawError::config("target", "at least one element must be targeted"));
        }
        for z in Element::ALL {
            let tol = self.tolerance(z);
            if !(tol.is_finite() && tol > 0.0) {
                return Err(QlawError::config(
                    format!("target.tolerances.{}", z.name()),
                    format!("must be > 0, got {tol}"),
                ));
            }
            if let Some(v) = self.target(z) {
                if !v.is_finite() {
                    return Err(QlawError::config(format!("target.{}", z.name()), "must be finite"));
                }
            }
        }
        if matches!(self.target(Element::A), Some(a) if a <= 0.0) {
            return Err(QlawError::config("target.a", "must be > 0"));
        }
        if matches!(self.target(Element::E), Some(e) if !(0.0..1.0).contains(&e)) {
            return Err(QlawError::config("target.e", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::MU_EARTH;
    use approx::assert_relative_eq;

    #[test]
    fn circular_equatorial_at_node() {
        let el = OrbitalElements::new(7000.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let s = coe_to_cartesian(&el, MU_EARTH);
        assert_relative_eq!(s.position, Vector3::new(7000.0, 0.0, 0.0), epsilon = 1e-9);
        assert_relative_eq!(
            s.velocity,
            Vector3::new(0.0, (MU_EARTH / 7000.0).sqrt(), 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn apoapsis_radius() {
        let el = OrbitalElements::new(12000.0, 0.4, 0.7, 1.0, 2.0, PI).unwrap();
        let s = coe_to_cartesian(&el, MU_EARTH);
        assert_relative_eq!(s.position.norm(), 12000.0 * 1.4, max_relative = 1e-14);
    }

    #[test]
    fn gto_perigee_radius() {
        let el = OrbitalElements::new(24363.9, 0.73, 28.5_f64.to_radians(), 0.0, 178_f64.to_radians(), 0.0).unwrap();
        let s = coe_to_cartesian(&el, MU_EARTH);
        assert_relative_eq!(s.position.norm(), 24363.9 * (1.0 - 0.73), max_relative = 1e-13);
        assert_relative_eq!(
            s.angular_momentum().norm(),
            (MU_EARTH * el.p()).sqrt(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn round_trip_case_a() {
        let el = OrbitalElements::new(7000.0, 0.01, 0.05_f64.to_radians(), 0.3, 0.4, 1.0).unwrap();
        let back = cartesian_to_coe(&coe_to_cartesian(&el, MU_EARTH), MU_EARTH).unwrap();
        assert_relative_eq!(back.a, el.a, max_relative = 1e-9);
        assert_relative_eq!(back.e, el.e, max_relative = 1e-9);
        assert_relative_eq!(back.i, el.i, max_relative = 1e-9);
        for (x, y) in [(back.raan, el.raan), (back.argp, el.argp), (back.theta, el.theta)] {
            assert!(wrap_pi(x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rectilinear_is_degenerate() {
        let s = CartesianState::new(Vector3::new(7000.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0));
        assert!(matches!(
            cartesian_to_coe(&s, MU_EARTH),
            Err(QlawError::DegenerateOrbit(_))
        ));
    }

    #[test]
    fn distances() {
        assert_eq!(angular_distance(Element::A, 42000.0, 42000.0), 0.0);
        assert_relative_eq!(angular_distance(Element::Argp, 0.1, TAU - 0.1), 0.2, epsilon = 1e-12);
        assert_relative_eq!(
            angular_distance(Element::I, 28.5_f64.to_radians(), 0.01_f64.to_radians()),
            28.49_f64.to_radians(),
            epsilon = 1e-14
        );
        assert_eq!(
            angular_distance(Element::Raan, 0.0, PI),
            -angular_distance(Element::Raan, PI, 0.0)
        );
    }

    #[test]
    fn elements_reject_out_of_range() {
        assert!(OrbitalElements::new(-1.0, 0.1, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(OrbitalElements::new(7000.0, 1.0, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(OrbitalElements::new(7000.0, 0.1, 4.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn empty_target_rejected() {
        assert!(TargetSpec::default().validate().is_err());
        let t = TargetSpec::default().with_target(Element::A, 42000.0);
        assert!(t.validate().is_ok());
        assert!(t.with_tolerance(Element::E, 0.0).validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn elliptic() -> impl Strategy<Value = OrbitalElements> {
            (
                6600.0..60000.0f64,
                1e-4..0.95f64,
                1e-4..(PI - 1e-4),
                0.0..TAU,
                0.0..TAU,
                0.0..TAU,
            )
                .prop_map(|(a, e, i, o, w, t)| OrbitalElements::new(a, e, i, o, w, t).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(512))]

            #[test]
            fn energy_matches_semi_major_axis(el in elliptic()) {
                let s = coe_to_cartesian(&el, MU_EARTH);
                let expected = -MU_EARTH / (2.0 * el.a);
                prop_assert!(((s.specific_energy(MU_EARTH) - expected) / expected).abs() < 1e-10);
            }

            #[test]
            fn distance_antisymmetric(x in -10.0..10.0f64, y in -10.0..10.0f64, k in 0usize..5) {
                let z = Element::ALL[k];
                prop_assert_eq!(angular_distance(z, x, y), -angular_distance(z, y, x));
            }
        }
    }
}
