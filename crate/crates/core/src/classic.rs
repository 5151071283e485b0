//! Classical Q-law: best-case element rates, the Q function with its scaling
//! and periapsis penalty, a finite-difference gradient and the steering law.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::R_EARTH;
use crate::dynamics::{GaussMatrix, Vector5};
use crate::elements::{Element, OrbitalElements, TargetSpec};
use crate::error::{QlawError, Result};

/// Per-element gains `W_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub e: f64,
    #[serde(default = "one")]
    pub i: f64,
    #[serde(default = "one")]
    pub raan: f64,
    #[serde(default = "one")]
    pub argp: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Weights {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

impl Weights {
    pub fn uniform(w: f64) -> Self {
        Self {
            a: w,
            e: w,
            i: w,
            raan: w,
            argp: w,
        }
    }

    pub fn get(&self, which: Element) -> f64 {
        match which {
            Element::A => self.a,
            Element::E => self.e,
            Element::I => self.i,
            Element::Raan => self.raan,
            Element::Argp => self.argp,
        }
    }

    pub fn set(&mut self, which: Element, w: f64) {
        match which {
            Element::A => self.a = w,
            Element::E => self.e = w,
            Element::I => self.i = w,
            Element::Raan => self.raan = w,
            Element::Argp => self.argp = w,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            a: self.a * k,
            e: self.e * k,
            i: self.i * k,
            raan: self.raan * k,
            argp: self.argp * k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for z in Element::ALL {
            let w = self.get(z);
            if !(w.is_finite() && w >= 0.0) {
                return Err(QlawError::config(
                    format!("controller.weights.{}", z.name()),
                    format!("must be >= 0, got {w}"),
                ));
            }
        }
        Ok(())
    }
}

/// Classical Q-law configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicConfig {
    pub weights: Weights,
    /// Penalty weight `W_p`.
    pub w_p: f64,
    /// Multiplies Q by `(1 + W_p P)` when set.
    pub penalty: bool,
    /// Scaling-function hyperparameters.
    pub m: f64,
    pub n: f64,
    pub r_exp: f64,
    /// Penalty steepness.
    pub k: f64,
    /// Minimum periapsis radius [km].
    pub rp_min: f64,
    /// Blend between in-plane and out-of-plane best argp rates.
    pub b: f64,
}

impl Default for ClassicConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            w_p: 1.0,
            penalty: true,
            m: 3.0,
            n: 4.0,
            r_exp: 2.0,
            k: 100.0,
            rp_min: R_EARTH + 200.0,
            b: 0.01,
        }
    }
}

impl ClassicConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        let checks = [
            ("w_p", self.w_p),
            ("m", self.m),
            ("n", self.n),
            ("k", self.k),
            ("rp_min_km", self.rp_min),
            ("b", self.b),
        ];
        for (key, v) in checks {
            if !(v.is_finite() && v >= 0.0) {
                return Err(QlawError::config(
                    format!("controller.hyperparameters.{key}"),
                    format!("must be >= 0, got {v}"),
                ));
            }
        }
        if !self.r_exp.is_finite() || self.r_exp == 0.0 {
            return Err(QlawError::config("controller.hyperparameters.r", "must be nonzero"));
        }
        if self.m == 0.0 {
            return Err(QlawError::config("controller.hyperparameters.m", "must be nonzero"));
        }
        Ok(())
    }
}

/// Value and gradient of a Lyapunov candidate over `(a, e, i, raan, argp)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEval {
    pub value: f64,
    pub gradient: Vector5,
    /// Weighted contribution of each element to the value.
    pub contributions: [f64; 5],
}

/// Maximizes a smooth periodic function of the true anomaly: uniform grid,
/// then golden-section refinement around the best sample.
pub(crate) fn maximize_over_anomaly(g: impl Fn(f64) -> f64, samples: usize) -> f64 {
    let step = std::f64::consts::TAU / samples as f64;
    let (mut best_x, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..samples {
        let x = k as f64 * step;
        let v = g(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_x - step, best_x + step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = g(x1);
        }
    }
    best.max(f1).max(f2)
}

const ANOMALY_SAMPLES: usize = 256;

/// Best-case rate `z_xx` of one element over true anomaly and thrust direction
/// for an acceleration magnitude `f` [km/s^2].
pub fn max_rate(which: Element, el: &OrbitalElements, f: f64, b: f64, mu: f64) -> f64 {
    let OrbitalElements { a, e, i, argp, .. } = *el;
    let p = el.p();
    let h = (mu * p).sqrt();
    match which {
        Element::A => 2.0 * f * (a.powi(3) * (1.0 + e) / (mu * (1.0 - e))).sqrt(),
        Element::E => 2.0 * f * (p / mu).sqrt(),
        Element::I => {
            let (sw, cw) = argp.sin_cos();
            f * (p / mu).sqrt() / ((1.0 - e * e * sw * sw).sqrt() - e * cw.abs())
        }
        Element::Raan => {
            let si = i.sin();
            maximize_over_anomaly(
                |th| {
                    let r = p / (1.0 + e * th.cos());
                    (r * (th + argp).sin()).abs() / (h * si)
                },
                ANOMALY_SAMPLES,
            ) * f
        }
        Element::Argp => {
            let in_plane = maximize_over_anomaly(
                |th| {
                    let (st, ct) = th.sin_cos();
                    let r = p / (1.0 + e * ct);
                    (p * ct).hypot((p + r) * st) / (e * h)
                },
                ANOMALY_SAMPLES,
            );
            let (si, ci) = i.sin_cos();
            let out_of_plane = maximize_over_anomaly(
                |th| {
                    let r = p / (1.0 + e * th.cos());
                    (r * (th + argp).sin() * ci).abs() / (h * si)
                },
                ANOMALY_SAMPLES,
            );
            f * (in_plane + b * out_of_plane) / (1.0 + b)
        }
    }
}

/// Semi-major-axis scaling `S_a`.
pub fn scaling_a(a: f64, a_target: f64, cfg: &ClassicConfig) -> f64 {
    (1.0 + ((a - a_target) / (cfg.m * a_target)).powf(cfg.n)).powf(1.0 / cfg.r_exp)
}

/// Periapsis penalty `P = exp(k (1 - r_p / r_p,min))`.
pub fn penalty(el: &OrbitalElements, cfg: &ClassicConfig) -> f64 {
    (cfg.k * (1.0 - el.periapsis() / cfg.rp_min)).exp()
}

/// Weighted per-element terms of Q (without the penalty factor).
fn q_terms(el: &OrbitalElements, target: &TargetSpec, cfg: &ClassicConfig, f: f64, mu: f64) -> [f64; 5] {
    let mut terms = [0.0; 5];
    for (z, z_t) in target.targeted() {
        let w = cfg.weights.get(z);
        if w == 0.0 {
            continue;
        }
        let d = crate::elements::angular_distance(z, el.get(z), z_t);
        let s = if z == Element::A {
            scaling_a(el.a, z_t, cfg)
        } else {
            1.0
        };
        let rate = max_rate(z, el, f, cfg.b, mu);
        terms[z.index()] = w * s * (d / rate).powi(2);
    }
    terms
}

fn penalty_factor(el: &OrbitalElements, cfg: &ClassicConfig) -> f64 {
    if cfg.penalty {
        1.0 + cfg.w_p * penalty(el, cfg)
    } else {
        1.0
    }
}

/// Q for the current elements and thrust acceleration `f` [km/s^2].
pub fn q_value(el: &OrbitalElements, target: &TargetSpec, cfg: &ClassicConfig, f: f64, mu: f64) -> f64 {
    penalty_factor(el, cfg) * q_terms(el, target, cfg, f, mu).iter().sum::<f64>()
}

/// Finite-difference steps per element.
fn fd_steps(target: &TargetSpec, el: &OrbitalElements) -> [f64; 5] {
    let a_ref = target.target(Element::A).unwrap_or(el.a);
    [1e-6 * a_ref, 1e-7, 1e-7, 1e-7, 1e-7]
}

/// Central-difference gradient of Q, differentiating through `z_xx`, `S` and `P`.
pub fn q_gradient(el: &OrbitalElements, target: &TargetSpec, cfg: &ClassicConfig, f: f64, mu: f64) -> Vector5 {
    let steps = fd_steps(target, el);
    let mut grad = Vector5::zeros();
    for z in Element::ALL {
        let h = steps[z.index()];
        let x = el.get(z);
        let plus = q_value(&el.with(z, x + h), target, cfg, f, mu);
        let minus = q_value(&el.with(z, x - h), target, cfg, f, mu);
        grad[z.index()] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Value, gradient and per-element contributions of Q.
pub fn q_eval(el: &OrbitalElements, target: &TargetSpec, cfg: &ClassicConfig, f: f64, mu: f64) -> LyapunovEval {
    let factor = penalty_factor(el, cfg);
    let terms = q_terms(el, target, cfg, f, mu);
    LyapunovEval {
        value: factor * terms.iter().sum::<f64>(),
        gradient: q_gradient(el, target, cfg, f, mu),
        contributions: terms.map(|t| factor * t),
    }
}

/// Unit RTN direction minimizing `grad^T Phi u`: `-Phi^T grad / |Phi^T grad|`.
pub fn thrust_direction(grad: &Vector5, phi: &GaussMatrix) -> Result<Vector3<f64>> {
    let w = phi.transpose() * grad;
    let norm = w.norm();
    let floor = 1e-14 * grad.norm() * phi.norm();
    if !norm.is_finite() || norm == 0.0 || norm <= floor {
        return Err(QlawError::NullDirection(norm));
    }
    Ok(-w / norm)
}
