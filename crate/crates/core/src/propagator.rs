//! Fixed-step RK4 integration of the closed-loop element dynamics.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::constants::{PhysicalConstants, SECONDS_PER_DAY};
use crate::dynamics::{
    gauss_matrix, mass_rate, perturbation_accel, rates_with_matrix, PerturbationToggles, RtnAcceleration,
    SpacecraftParams,
};
use crate::elements::{coe_to_cartesian, OrbitalElements, TargetSpec};
use crate::error::{QlawError, Result};
use crate::guidance::{Controller, ControllerConfig, GuidanceCommand};
use crate::sun::{is_eclipsed, SunModel};

/// Integrated state `(a, e, i, raan, argp, theta, mass)`.
pub type StateVector = SVector<f64, 7>;

/// Periapsis radius below which a run is aborted, above the Earth radius [km].
pub const CRASH_ALTITUDE_KM: f64 = 100.0;
/// Runs stop once the mass drops below this fraction of the initial mass.
pub const MASS_FLOOR_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    /// Fixed step [s].
    pub step_s: f64,
    /// Record one trajectory row every this many steps.
    pub record_every: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            step_s: 60.0,
            record_every: 10,
        }
    }
}

/// Everything needed to simulate one transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub initial: OrbitalElements,
    pub initial_mass_kg: f64,
    pub target: TargetSpec,
    pub spacecraft: SpacecraftParams,
    pub controller: ControllerConfig,
    pub perturbations: PerturbationToggles,
    /// Time offset of `t = 0` from the sun-model epoch [s].
    pub epoch_s: f64,
    pub integrator: IntegratorSettings,
    pub max_days: f64,
    pub constants: PhysicalConstants,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.initial.validate()?;
        self.spacecraft.validate()?;
        self.constants.validate()?;
        self.controller.validate()?;
        self.target.validate()?;
        if !(self.initial_mass_kg.is_finite() && self.initial_mass_kg > 0.0) {
            return Err(QlawError::config("spacecraft.mass_kg", "must be > 0"));
        }
        if !(self.max_days.is_finite() && self.max_days > 0.0) {
            return Err(QlawError::config(
                "dynamics.max_days",
                format!("must be > 0, got {}", self.max_days),
            ));
        }
        if !(self.integrator.step_s.is_finite() && self.integrator.step_s > 0.0) {
            return Err(QlawError::config(
                "integrator.step_s",
                format!("must be > 0, got {}", self.integrator.step_s),
            ));
        }
        if self.integrator.record_every == 0 {
            return Err(QlawError::config("integrator.record_every", "must be >= 1"));
        }
        if !self.epoch_s.is_finite() {
            return Err(QlawError::config("dynamics.epoch_s", "must be finite"));
        }
        Ok(())
    }

    pub fn controller(&self) -> Result<Controller> {
        Controller::new(self.controller, self.target, &self.initial, self.constants.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Converged,
    MaxDuration,
    PeriapsisViolation,
    MassDepleted,
    NumericFault,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminationReason::Converged => "converged",
            TerminationReason::MaxDuration => "max_duration",
            TerminationReason::PeriapsisViolation => "periapsis_violation",
            TerminationReason::MassDepleted => "mass_depleted",
            TerminationReason::NumericFault => "numeric_fault",
        }
    }
}

/// One recorded sample. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub theta: f64,
    pub mass: f64,
    pub thrust_on: bool,
    pub alpha: f64,
    pub beta: f64,
    pub v: f64,
    pub vdot: f64,
    pub eta_r: f64,
    pub eclipse: bool,
    pub rp: f64,
}

impl TrajectoryRow {
    pub fn elements(&self) -> OrbitalElements {
        OrbitalElements {
            a: self.a,
            e: self.e,
            i: self.i,
            raan: self.raan,
            argp: self.argp,
            theta: self.theta,
        }
    }
}

pub type Trajectory = Vec<TrajectoryRow>;

/// Outcome of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub converged: bool,
    pub termination: TerminationReason,
    pub transfer_days: f64,
    pub propellant_kg: f64,
    pub revolutions: f64,
    pub min_periapsis_km: f64,
    pub max_sma_km: f64,
    pub thrust_on_days: f64,
    pub steps: u64,
    pub final_elements: OrbitalElements,
    pub final_mass_kg: f64,
    /// Largest Lyapunov rate commanded while thrusting.
    pub max_thrust_vdot: f64,
    /// Largest relative growth of V across one thrusting step.
    pub max_thrust_v_growth: f64,
    /// Final Lyapunov value.
    pub final_v: f64,
}

/// Classical fourth-order Runge-Kutta step of `dy/dt = f(t, y)`.
///
/// A non-finite stage or result is reported as an integration fault.
pub fn integrate_step<const N: usize>(
    y: &SVector<f64, N>,
    t: f64,
    h: f64,
    mut f: impl FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
) -> Result<SVector<f64, N>> {
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &(y + 0.5 * h * k1))?;
    let k3 = f(t + 0.5 * h, &(y + 0.5 * h * k2))?;
    let k4 = f(t + h, &(y + h * k3))?;
    let next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(QlawError::IntegrationFault(format!(
            "non-finite state after step at t = {t} s"
        )))
    }
}

pub fn to_state(el: &OrbitalElements, mass: f64) -> StateVector {
    StateVector::from([el.a, el.e, el.i, el.raan, el.argp, el.theta, mass])
}

/// Elements of a state vector, with angles left unwrapped.
pub fn elements_of(y: &StateVector) -> OrbitalElements {
    OrbitalElements {
        a: y[0],
        e: y[1],
        i: y[2],
        raan: y[3],
        argp: y[4],
        theta: y[5],
    }
}

/// Time derivative of the state under a total RTN perturbing acceleration
/// (thrust plus environment) and a mass flow rate.
pub fn state_derivative(y: &StateVector, accel: &RtnAcceleration, mdot: f64, mu: f64) -> Result<StateVector> {
    let el = elements_of(y).clamped();
    if !(el.a > 0.0 && el.e < 1.0) {
        return Err(QlawError::IntegrationFault(format!(
            "non-elliptic state a = {}, e = {}",
            el.a, el.e
        )));
    }
    let phi = gauss_matrix(&el, mu)?;
    let rates = rates_with_matrix(&el, &phi, accel, mu);
    let s = rates.slow;
    Ok(StateVector::from([s[0], s[1], s[2], s[3], s[4], rates.theta, mdot]))
}

struct Monitors {
    min_rp: f64,
    max_a: f64,
    thrust_on_s: f64,
    revolutions: f64,
    max_thrust_vdot: f64,
    max_thrust_v_growth: f64,
}

/// Runs the closed loop until convergence, timeout or a failure event.
///
/// Guidance is evaluated at the start of every step and held across it; the
/// thrust magnitude follows the instantaneous mass. Errors are returned only
/// for invalid scenarios; numerical trouble ends the run with
/// [`TerminationReason::NumericFault`].
pub fn propagate(scn: &Scenario) -> Result<(Trajectory, RunSummary)> {
    scn.validate()?;
    let ctl = scn.controller()?;
    let sun = SunModel::new(&scn.constants, 0.0);
    let mu = scn.constants.mu;
    let h = scn.integrator.step_s;
    let t_max = scn.max_days * SECONDS_PER_DAY;
    let r_crash = scn.constants.r_earth + CRASH_ALTITUDE_KM;
    let m0 = scn.initial_mass_kg;

    let mut y = to_state(&scn.initial.clamped(), m0);
    let mut t = 0.0;
    let mut steps: u64 = 0;
    let mut traj = Trajectory::new();
    let mut mon = Monitors {
        min_rp: scn.initial.periapsis(),
        max_a: scn.initial.a,
        thrust_on_s: 0.0,
        revolutions: 0.0,
        max_thrust_vdot: f64::NEG_INFINITY,
        max_thrust_v_growth: f64::NEG_INFINITY,
    };
    // V at the start of the previous step, if that step was thrusting
    let mut prev_thrust_v: Option<f64> = None;

    let termination = loop {
        let el = elements_of(&y).clamped();
        let mass = y[6];
        let f = scn.spacecraft.accel(mass);
        let position = coe_to_cartesian(&el, mu).position;
        let eclipsed = is_eclipsed(&position, &sun.direction(t + scn.epoch_s), scn.constants.r_earth);
        let cmd = match ctl.step(&el, f, eclipsed) {
            Ok(c) => c,
            Err(err) => {
                log::warn!("guidance failed at t = {t} s: {err}");
                break TerminationReason::NumericFault;
            }
        };

        if let Some(v_prev) = prev_thrust_v.take() {
            if v_prev > 0.0 {
                mon.max_thrust_v_growth = mon.max_thrust_v_growth.max((cmd.v - v_prev) / v_prev);
            }
        }
        let record = steps % scn.integrator.record_every as u64 == 0;
        if record {
            traj.push(row(t, &el, mass, &cmd));
        }

        if cmd.converged {
            break TerminationReason::Converged;
        }
        if t >= t_max - 1e-9 * h {
            break TerminationReason::MaxDuration;
        }
        if mass <= MASS_FLOOR_FRACTION * m0 {
            break TerminationReason::MassDepleted;
        }

        if cmd.thrust_on {
            mon.max_thrust_vdot = mon.max_thrust_vdot.max(cmd.vdot);
            mon.thrust_on_s += h;
            prev_thrust_v = Some(cmd.v);
        }

        let step = integrate_step(&y, t, h, |tau, yy| {
            let el = elements_of(yy).clamped();
            let mut accel = perturbation_accel(&el, tau + scn.epoch_s, &scn.perturbations, &scn.constants, &sun);
            if cmd.thrust_on {
                accel = accel + RtnAcceleration::from_direction(&cmd.direction, scn.spacecraft.accel(yy[6]));
            }
            let mdot = mass_rate(&scn.spacecraft, cmd.thrust_on, scn.constants.g0);
            state_derivative(yy, &accel, mdot, mu)
        });
        let next = match step {
            Ok(n) => n,
            Err(err) => {
                log::warn!("integration failed at t = {t} s: {err}");
                break TerminationReason::NumericFault;
            }
        };
        mon.revolutions += (next[5] - y[5]) / TAU;
        y = to_state(&elements_of(&next).clamped(), next[6]);
        t = (steps + 1) as f64 * h;
        steps += 1;

        let el = elements_of(&y);
        if el.e >= 1.0 {
            break TerminationReason::NumericFault;
        }
        mon.min_rp = mon.min_rp.min(el.periapsis());
        mon.max_a = mon.max_a.max(el.a);
        if el.periapsis() < r_crash {
            break TerminationReason::PeriapsisViolation;
        }
    };

    let final_el = elements_of(&y).clamped();
    let final_mass = y[6];
    let final_cmd = ctl.step(&final_el, scn.spacecraft.accel(final_mass), false).ok();
    if traj.last().map_or(true, |r| r.t < t) {
        if let Some(cmd) = final_cmd.as_ref() {
            traj.push(row(t, &final_el, final_mass, cmd));
        }
    }
    let summary = RunSummary {
        converged: termination == TerminationReason::Converged,
        termination,
        transfer_days: t / SECONDS_PER_DAY,
        propellant_kg: m0 - final_mass,
        revolutions: mon.revolutions,
        min_periapsis_km: mon.min_rp,
        max_sma_km: mon.max_a,
        thrust_on_days: mon.thrust_on_s / SECONDS_PER_DAY,
        steps,
        final_elements: final_el,
        final_mass_kg: final_mass,
        max_thrust_vdot: mon.max_thrust_vdot,
        max_thrust_v_growth: mon.max_thrust_v_growth,
        final_v: final_cmd.map_or(f64::NAN, |c| c.v),
    };
    log::info!(
        "{}: {} after {:.2} days, propellant {:.2} kg",
        scn.name,
        termination.name(),
        summary.transfer_days,
        summary.propellant_kg
    );
    Ok((traj, summary))
}

fn row(t: f64, el: &OrbitalElements, mass: f64, cmd: &GuidanceCommand) -> TrajectoryRow {
    TrajectoryRow {
        t,
        a: el.a,
        e: el.e,
        i: el.i,
        raan: el.raan,
        argp: el.argp,
        theta: el.theta,
        mass,
        thrust_on: cmd.thrust_on,
        alpha: cmd.alpha,
        beta: cmd.beta,
        v: cmd.v,
        vdot: cmd.vdot,
        eta_r: cmd.eta_r,
        eclipse: cmd.eclipsed,
        rp: el.periapsis(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::MU_EARTH;
    use crate::elements::Element;

    fn kepler_rhs(mu: f64) -> impl FnMut(f64, &StateVector) -> Result<StateVector> {
        move |_, y| state_derivative(y, &RtnAcceleration::ZERO, 0.0, mu)
    }

    fn one_orbit_error(el: &OrbitalElements, steps: usize) -> f64 {
        let period = el.period(MU_EARTH);
        let h = period / steps as f64;
        let mut y = to_state(el, 100.0);
        let mut rhs = kepler_rhs(MU_EARTH);
        for k in 0..steps {
            y = integrate_step(&y, k as f64 * h, h, &mut rhs).unwrap();
        }
        (y[5] - el.theta - TAU).abs()
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let el = OrbitalElements::new(24363.9, 0.73, 0.5, 0.0, 0.0, 0.0).unwrap();
        let coarse = one_orbit_error(&el, 400);
        let fine = one_orbit_error(&el, 800);
        let ratio = coarse / fine;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn full_period_advances_anomaly_by_two_pi() {
        let el = OrbitalElements::new(7000.0, 0.01, 0.5, 0.0, 0.0, 0.3).unwrap();
        assert!(one_orbit_error(&el, 2000) < 1e-9);
    }

    #[test]
    fn frozen_system_stays_put() {
        let y = StateVector::from([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let next = integrate_step(&y, 0.0, 10.0, |_, _| Ok(StateVector::zeros())).unwrap();
        assert_eq!(next, y);
    }

    #[test]
    fn non_finite_is_fault() {
        let y = StateVector::zeros();
        let r = integrate_step(&y, 0.0, 1.0, |_, _| Ok(StateVector::repeat(f64::NAN)));
        assert!(matches!(r, Err(QlawError::IntegrationFault(_))));
    }

    #[test]
    fn exponential_decay_accuracy() {
        let y = SVector::<f64, 1>::new(1.0);
        let mut v = y;
        for k in 0..100 {
            v = integrate_step(&v, k as f64 * 0.01, 0.01, |_, x| Ok(-x)).unwrap();
        }
        assert!((v[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    pub(crate) fn test_scenario() -> Scenario {
        Scenario {
            name: "test".into(),
            initial: OrbitalElements::new(7000.0, 0.01, 0.05_f64.to_radians(), 0.0, 0.0, 0.0).unwrap(),
            initial_mass_kg: 300.0,
            target: TargetSpec::default()
                .with_target(Element::A, 7100.0)
                .with_target(Element::E, 0.01),
            spacecraft: SpacecraftParams {
                mass_kg: 300.0,
                thrust_n: 1.0,
                isp_s: 3100.0,
            },
            controller: ControllerConfig::default(),
            perturbations: PerturbationToggles::default(),
            epoch_s: 0.0,
            integrator: IntegratorSettings::default(),
            max_days: 30.0,
            constants: PhysicalConstants::default(),
        }
    }

    #[test]
    fn short_raise_converges() {
        let (traj, s) = propagate(&test_scenario()).unwrap();
        assert!(s.converged, "{s:?}");
        assert!((s.final_elements.a - 7100.0).abs() <= 10.0);
        assert!(s.propellant_kg > 0.0 && s.propellant_kg < 300.0);
        assert!(traj.windows(2).all(|w| w[1].t > w[0].t && w[1].mass <= w[0].mass));
        assert!(s.max_thrust_vdot <= 1e-15);
        // mass flow while thrusting: T / (Isp g0)
        let mdot = 1.0 / (3100.0 * 9.80665);
        let expected = mdot * s.thrust_on_days * SECONDS_PER_DAY;
        assert!((s.propellant_kg - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn zero_thrust_conserves_elements() {
        let mut scn = test_scenario();
        scn.spacecraft.thrust_n = 1e-30;
        scn.max_days = 10.0 * scn.initial.period(MU_EARTH) / SECONDS_PER_DAY;
        scn.integrator.step_s = 10.0;
        let (_, s) = propagate(&scn).unwrap();
        assert_eq!(s.termination, TerminationReason::MaxDuration);
        let f = s.final_elements;
        let i0 = scn.initial;
        for (x, y) in [(f.a, i0.a), (f.e, i0.e), (f.i, i0.i)] {
            assert!((x - y).abs() <= 1e-9 * y.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn timeout_reported() {
        let mut scn = test_scenario();
        scn.target = TargetSpec::default().with_target(Element::A, 42000.0);
        scn.max_days = 1.0;
        let (traj, s) = propagate(&scn).unwrap();
        assert_eq!(s.termination, TerminationReason::MaxDuration);
        assert!(!s.converged);
        assert!((s.transfer_days - 1.0).abs() < 1e-9);
        assert_eq!(traj.last().unwrap().t, SECONDS_PER_DAY);
    }

    #[test]
    fn low_periapsis_aborts() {
        let mut scn = test_scenario();
        scn.initial = OrbitalElements::new(6600.0, 0.02, 0.5, 0.0, 0.0, 0.0).unwrap();
        scn.target = TargetSpec::default().with_target(Element::E, 0.3);
        scn.controller.coast.eclipse_coast = false;
        let (_, s) = propagate(&scn).unwrap();
        assert_eq!(s.termination, TerminationReason::PeriapsisViolation);
    }

    #[test]
    fn invalid_scenario_rejected() {
        let mut scn = test_scenario();
        scn.max_days = 0.0;
        assert!(propagate(&scn).is_err());
        let mut scn = test_scenario();
        scn.integrator.step_s = -1.0;
        assert!(propagate(&scn).is_err());
    }

    #[test]
    fn deterministic() {
        let a = propagate(&test_scenario()).unwrap();
        let b = propagate(&test_scenario()).unwrap();
        assert_eq!(a, b);
    }
}
