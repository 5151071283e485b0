//! Closed-loop guidance: law selection, thrust direction, effectivity and
//! eclipse coasting, convergence detection.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::classic::{q_eval, thrust_direction, ClassicConfig, LyapunovEval};
use crate::dynamics::{gauss_matrix, gauss_matrix_at, GaussMatrix, Vector5};
use crate::elements::{Element, OrbitalElements, TargetSpec};
use crate::error::{QlawError, Result};
use crate::modified::{v_tilde_eval, ModifiedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    Classic,
    Modified,
}

impl LawKind {
    pub fn name(self) -> &'static str {
        match self {
            LawKind::Classic => "classic",
            LawKind::Modified => "modified",
        }
    }
}

impl std::str::FromStr for LawKind {
    type Err = QlawError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(LawKind::Classic),
            "modified" => Ok(LawKind::Modified),
            other => Err(QlawError::config(
                "controller.law",
                format!("expected \"classic\" or \"modified\", got {other:?}"),
            )),
        }
    }
}

/// When to switch the thruster off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoastPolicy {
    /// Coast while the relative effectivity is below this value.
    pub eta_threshold: f64,
    /// True-anomaly samples used to find the best and worst thrust locations.
    pub n_theta: usize,
    /// Coast while inside the Earth's shadow.
    pub eclipse_coast: bool,
}

impl Default for CoastPolicy {
    fn default() -> Self {
        Self {
            eta_threshold: 0.0,
            n_theta: 100,
            eclipse_coast: true,
        }
    }
}

impl CoastPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eta_threshold) {
            return Err(QlawError::config(
                "controller.eta_threshold",
                format!("must lie in [0, 1), got {}", self.eta_threshold),
            ));
        }
        if self.n_theta < 16 {
            return Err(QlawError::config(
                "controller.n_theta",
                format!("must be >= 16, got {}", self.n_theta),
            ));
        }
        Ok(())
    }
}

/// Law selector plus the configuration of both laws and the coasting policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub law: LawKind,
    pub classic: ClassicConfig,
    pub modified: ModifiedConfig,
    pub coast: CoastPolicy,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            law: LawKind::Modified,
            classic: ClassicConfig::default(),
            modified: ModifiedConfig::default(),
            coast: CoastPolicy::default(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        match self.law {
            LawKind::Classic => self.classic.validate()?,
            LawKind::Modified => self.modified.validate()?,
        }
        self.coast.validate()
    }
}

/// Output of one guidance evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceCommand {
    pub thrust_on: bool,
    /// Unit RTN thrust direction; zero when no direction is defined.
    pub direction: Vector3<f64>,
    /// In-plane angle `atan2(u_r, u_t)` [rad].
    pub alpha: f64,
    /// Out-of-plane angle `asin(u_n)` [rad].
    pub beta: f64,
    /// Relative effectivity at the current anomaly.
    pub eta_r: f64,
    /// Lyapunov value.
    pub v: f64,
    /// Lyapunov rate due to thrust along `direction` at full acceleration,
    /// reported whether or not the thruster fires.
    pub vdot: f64,
    pub eclipsed: bool,
    pub converged: bool,
    /// The gradient is orthogonal to every reachable rate; no descent exists.
    pub stationary: bool,
}

/// Best (most negative) and worst thrust-induced Lyapunov rates over the
/// osculating orbit, holding the elements and gradient fixed.
///
/// Samples `n_theta` uniform anomalies plus the current one, so the current
/// rate always lies within the returned bounds.
pub fn vdot_extrema(el: &OrbitalElements, grad: &Vector5, f: f64, n_theta: usize, mu: f64) -> (f64, f64) {
    let rate = |theta: f64| -f * (gauss_matrix_at(el, theta, mu).transpose() * grad).norm();
    let current = rate(el.theta);
    (0..n_theta)
        .map(|k| rate(TAU * k as f64 / n_theta as f64))
        .fold((current, current), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Relative effectivity `(vdot - worst) / (best - worst)`, clamped to `[0, 1]`.
/// A flat orbit (`best == worst`) counts as fully effective.
pub fn effectivity(vdot: f64, best: f64, worst: f64) -> f64 {
    let span = best - worst;
    if span == 0.0 || !span.is_finite() {
        return 1.0;
    }
    ((vdot - worst) / span).clamp(0.0, 1.0)
}

/// True iff every targeted element lies within its tolerance.
pub fn check_convergence(el: &OrbitalElements, target: &TargetSpec) -> bool {
    Element::ALL.iter().all(|&z| match target.distance(el, z) {
        Some(d) => d.abs() <= target.tolerance(z),
        None => true,
    })
}

/// Spacecraft state seen by the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacecraftState {
    pub elements: OrbitalElements,
    pub mass_kg: f64,
    pub t: f64,
}

/// A configured controller for one transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub config: ControllerConfig,
    pub target: TargetSpec,
    /// Overshoot threshold of the modified law [km].
    pub a_star: f64,
    pub mu: f64,
}

impl Controller {
    /// The modified law's `a*` is `zeta a_T`; when `a` is free, the initial
    /// semi-major axis stands in for `a_T`.
    pub fn new(config: ControllerConfig, target: TargetSpec, initial: &OrbitalElements, mu: f64) -> Result<Self> {
        config.validate()?;
        target.validate()?;
        if target.targeted().next().is_none() {
            return Err(QlawError::config("target", "at least one element must be targeted"));
        }
        let a_ref = target.target(Element::A).unwrap_or(initial.a);
        Ok(Self {
            a_star: config.modified.a_star(a_ref),
            config,
            target,
            mu,
        })
    }

    /// Lyapunov value and gradient for thrust acceleration `f` [km/s^2].
    pub fn lyapunov(&self, el: &OrbitalElements, f: f64) -> LyapunovEval {
        match self.config.law {
            LawKind::Classic => q_eval(el, &self.target, &self.config.classic, f, self.mu),
            LawKind::Modified => v_tilde_eval(el, &self.target, f, self.mu, &self.config.modified, self.a_star).into(),
        }
    }

    pub fn converged(&self, el: &OrbitalElements) -> bool {
        check_convergence(el, &self.target)
    }

    /// Guidance for the current state. `f` is the available thrust acceleration.
    /// Elements are pushed off the `e = 0` / `i = 0` singularities first.
    pub fn step(&self, el: &OrbitalElements, f: f64, eclipsed: bool) -> Result<GuidanceCommand> {
        let el = el.clamped();
        let phi = gauss_matrix(&el, self.mu)?;
        let eval = self.lyapunov(&el, f);
        Ok(self.command(&el, &phi, &eval, f, eclipsed))
    }

    fn command(
        &self,
        el: &OrbitalElements,
        phi: &GaussMatrix,
        eval: &LyapunovEval,
        f: f64,
        eclipsed: bool,
    ) -> GuidanceCommand {
        let converged = self.converged(el);
        let coast = &self.config.coast;
        let mut cmd = GuidanceCommand {
            thrust_on: false,
            direction: Vector3::zeros(),
            alpha: 0.0,
            beta: 0.0,
            eta_r: 0.0,
            v: eval.value,
            vdot: 0.0,
            eclipsed,
            converged,
            stationary: false,
        };
        let direction = match thrust_direction(&eval.gradient, phi) {
            Ok(u) => u,
            Err(_) => {
                if !converged {
                    log::debug!("stationary point of the Lyapunov function at {el:?}");
                }
                cmd.stationary = true;
                cmd.eta_r = 1.0;
                return cmd;
            }
        };
        let vdot = f * (eval.gradient.transpose() * phi * direction)[0];
        let (best, worst) = vdot_extrema(el, &eval.gradient, f, coast.n_theta, self.mu);
        cmd.direction = direction;
        cmd.alpha = direction.x.atan2(direction.y);
        cmd.beta = direction.z.clamp(-1.0, 1.0).asin();
        cmd.vdot = vdot;
        cmd.eta_r = effectivity(vdot, best, worst);
        cmd.thrust_on = !(converged || (eclipsed && coast.eclipse_coast) || cmd.eta_r < coast.eta_threshold);
        cmd
    }
}

/// Thrust direction of the modified law (same contract as the classical one).
pub fn modified_thrust_direction(gradient: &Vector5, phi: &GaussMatrix) -> Result<Vector3<f64>> {
    thrust_direction(gradient, phi)
}

/// One-shot guidance evaluation for a spacecraft state.
pub fn guidance_step(
    state: &SpacecraftState,
    controller: &Controller,
    thrust_accel: f64,
    eclipsed: bool,
) -> Result<GuidanceCommand> {
    let _ = state.mass_kg;
    controller.step(&state.elements, thrust_accel, eclipsed)
}
