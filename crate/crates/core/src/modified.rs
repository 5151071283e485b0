//! Modified Q-law with Lyapunov-stable element terms.
//!
//! Each targeted element `z in {a, e, i}` contributes `V_z = K_z (z - z_T)^2`,
//! where `K_z = 1 / z_xx^2` uses a deliberately under-estimated best-case rate:
//!
//! * the semi-major-axis dependence of every `K_z` is frozen above
//!   `a* = zeta a_T`, which caps the sacrificial growth of `a`;
//! * the eccentricity dependence of `K_e` and `K_i` is frozen above `1 - delta_e`;
//! * the `a`-term loses its eccentricity gradient once `r_p <= r_p,min`, so the
//!   law never trades periapsis height for semi-major axis;
//! * `K_i` replaces `sqrt(1 - e^2 sin^2 w)` by its first-order expansion, an
//!   upper bound, and its eccentricity derivative is dropped.
//!
//! All gradients are analytic. Indicator functions take their inactive branch
//! on the (measure-zero) switch surfaces.

use serde::{Deserialize, Serialize};

use crate::classic::{LyapunovEval, Weights};
use crate::constants::R_EARTH;
use crate::dynamics::Vector5;
use crate::elements::{Element, OrbitalElements, TargetSpec};
use crate::error::{QlawError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedConfig {
    /// Only the `a`, `e`, `i` entries are used.
    pub weights: Weights,
    /// Overshoot factor; `a* = zeta a_T`.
    pub zeta: f64,
    /// Eccentricity guard.
    pub delta_e: f64,
    /// Minimum periapsis radius [km].
    pub rp_min: f64,
    /// Optional classical penalty factor `(1 + W_p P)`.
    pub penalty: bool,
    pub w_p: f64,
    pub k: f64,
}

impl Default for ModifiedConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            zeta: 2.0,
            delta_e: 0.05,
            rp_min: R_EARTH + 200.0,
            penalty: false,
            w_p: 1.0,
            k: 100.0,
        }
    }
}

impl ModifiedConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.zeta > 1.0 && self.zeta < 3.0) {
            return Err(QlawError::config(
                "controller.hyperparameters.zeta",
                format!("must lie in (1, 3), got {}", self.zeta),
            ));
        }
        if !(self.delta_e > 0.0 && self.delta_e < 1.0) {
            return Err(QlawError::config(
                "controller.hyperparameters.delta_e",
                format!("must lie in (0, 1), got {}", self.delta_e),
            ));
        }
        if !(self.rp_min.is_finite() && self.rp_min > R_EARTH) {
            return Err(QlawError::config(
                "controller.hyperparameters.rp_min_km",
                format!("must exceed the Earth radius, got {}", self.rp_min),
            ));
        }
        if !(self.w_p >= 0.0 && self.k >= 0.0) {
            return Err(QlawError::config("controller.hyperparameters.w_p", "must be >= 0"));
        }
        Ok(())
    }

    /// Overshoot threshold for a reference semi-major axis.
    pub fn a_star(&self, a_ref: f64) -> f64 {
        self.zeta * a_ref
    }
}

/// A state-dependent coefficient `K_z` and its partials.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KTilde {
    pub value: f64,
    pub d_a: f64,
    pub d_e: f64,
    pub d_argp: f64,
}

/// One Lyapunov term `V_z` and its partials.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermGradient {
    pub value: f64,
    pub d_a: f64,
    pub d_e: f64,
    pub d_i: f64,
    pub d_argp: f64,
}

impl TermGradient {
    fn as_vector(&self) -> Vector5 {
        Vector5::new(self.d_a, self.d_e, self.d_i, 0.0, self.d_argp)
    }
}

fn indicator(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

/// `c = mu / f^2` for a thrust acceleration `f` [km/s^2].
pub fn c_factor(mu: f64, f: f64) -> f64 {
    mu / (f * f)
}

/// `K_a = c (1 - e) / (4 min(a, a*)^3 (1 + e))`.
pub fn k_a_tilde(el: &OrbitalElements, c: f64, a_star: f64) -> KTilde {
    let OrbitalElements { a, e, .. } = *el;
    let a_c = a.min(a_star);
    let a_c3 = a_c.powi(3);
    let value = c / (4.0 * a_c3) * (1.0 - e) / (1.0 + e);
    KTilde {
        value,
        d_a: -3.0 * value / a * indicator(a < a_star),
        d_e: -c / (2.0 * a_c3 * (1.0 + e).powi(2)),
        d_argp: 0.0,
    }
}

/// `V_a = K_a (a - a_T)^2`; the `e` partial is gated by `r_p > r_p,min`.
pub fn v_a_gradient(el: &OrbitalElements, a_target: f64, c: f64, a_star: f64, rp_min: f64) -> TermGradient {
    let k = k_a_tilde(el, c, a_star);
    let d = el.a - a_target;
    TermGradient {
        value: k.value * d * d,
        d_a: 2.0 * k.value * d + d * d * k.d_a,
        d_e: d * d * k.d_e * indicator(el.periapsis() > rp_min),
        d_i: 0.0,
        d_argp: 0.0,
    }
}

/// `K_e = c / (4 min(a, a*) (1 - min(e, 1 - delta_e)^2))`.
pub fn k_e_tilde(el: &OrbitalElements, c: f64, a_star: f64, delta_e: f64) -> KTilde {
    let OrbitalElements { a, e, .. } = *el;
    let e_max = 1.0 - delta_e;
    let e_c = e.min(e_max);
    let a_c = a.min(a_star);
    let value = c / (4.0 * a_c * (1.0 - e_c * e_c));
    KTilde {
        value,
        d_a: -value / a * indicator(a < a_star),
        d_e: 2.0 * value * e / (1.0 - e * e) * indicator(e < e_max),
        d_argp: 0.0,
    }
}

/// `V_e = K_e (e - e_T)^2`.
pub fn v_e_gradient(el: &OrbitalElements, e_target: f64, c: f64, a_star: f64, delta_e: f64) -> TermGradient {
    let k = k_e_tilde(el, c, a_star, delta_e);
    let d = el.e - e_target;
    TermGradient {
        value: k.value * d * d,
        d_a: d * d * k.d_a,
        d_e: d * d * k.d_e + 2.0 * k.value * d,
        d_i: 0.0,
        d_argp: 0.0,
    }
}

/// First-order inclination-rate factor `1 - e^2 sin^2(w) / 2 - e |cos w|` and its
/// derivative in `w`.
pub fn f_i_approx(e: f64, argp: f64) -> (f64, f64) {
    let (sw, cw) = argp.sin_cos();
    let sign = if cw > 0.0 {
        1.0
    } else if cw < 0.0 {
        -1.0
    } else {
        0.0
    };
    let value = 1.0 - 0.5 * e * e * sw * sw - e * cw.abs();
    let d_argp = -e * e * sw * cw + e * sign * sw;
    (value, d_argp)
}

/// Exact factor `sqrt(1 - e^2 sin^2 w) - e |cos w|` of the best inclination rate.
pub fn f_i_exact(e: f64, argp: f64) -> f64 {
    let (sw, cw) = argp.sin_cos();
    (1.0 - e * e * sw * sw).sqrt() - e * cw.abs()
}

/// `K_i = c F_i(e_c, w)^2 / (min(a, a*) (1 - e_c^2))` with `e_c = min(e, 1 - delta_e)`.
/// The eccentricity partial is forced to zero.
pub fn k_i_tilde(el: &OrbitalElements, c: f64, a_star: f64, delta_e: f64) -> KTilde {
    let OrbitalElements { a, e, argp, .. } = *el;
    let e_c = e.min(1.0 - delta_e);
    let a_c = a.min(a_star);
    let base = c / (a_c * (1.0 - e_c * e_c));
    let (fi, dfi) = f_i_approx(e_c, argp);
    let value = base * fi * fi;
    KTilde {
        value,
        d_a: -value / a * indicator(a < a_star),
        d_e: 0.0,
        d_argp: base * 2.0 * fi * dfi,
    }
}

/// `V_i = K_i (i - i_T)^2`.
pub fn v_i_gradient(el: &OrbitalElements, i_target: f64, c: f64, a_star: f64, delta_e: f64) -> TermGradient {
    let k = k_i_tilde(el, c, a_star, delta_e);
    let d = el.i - i_target;
    TermGradient {
        value: k.value * d * d,
        d_a: d * d * k.d_a,
        d_e: 0.0,
        d_i: 2.0 * k.value * d,
        d_argp: d * d * k.d_argp,
    }
}

/// Value, gradient and per-term breakdown of the modified Lyapunov function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedEval {
    pub value: f64,
    pub gradient: Vector5,
    /// Unweighted `V_a`, `V_e`, `V_i` (zero when the element is free).
    pub terms: [f64; 3],
    /// `K_a`, `K_e`, `K_i`.
    pub coefficients: [f64; 3],
}

impl From<ModifiedEval> for LyapunovEval {
    fn from(m: ModifiedEval) -> Self {
        let scale = if m.terms.iter().sum::<f64>() > 0.0 {
            m.value / m.terms.iter().sum::<f64>()
        } else {
            0.0
        };
        LyapunovEval {
            value: m.value,
            gradient: m.gradient,
            contributions: [m.terms[0] * scale, m.terms[1] * scale, m.terms[2] * scale, 0.0, 0.0],
        }
    }
}

/// Evaluates `V = sum_z W_z K_z (z - z_T)^2` over the targeted `a`, `e`, `i`.
///
/// `a_star` is the overshoot threshold (`zeta a_T`); RAAN and argp targets are
/// ignored by this law.
pub fn v_tilde_eval(
    el: &OrbitalElements,
    target: &TargetSpec,
    f: f64,
    mu: f64,
    cfg: &ModifiedConfig,
    a_star: f64,
) -> ModifiedEval {
    let c = c_factor(mu, f);
    let w = &cfg.weights;
    let mut terms = [0.0; 3];
    let mut coefficients = [
        k_a_tilde(el, c, a_star).value,
        k_e_tilde(el, c, a_star, cfg.delta_e).value,
        k_i_tilde(el, c, a_star, cfg.delta_e).value,
    ];
    let mut value = 0.0;
    let mut grad = Vector5::zeros();

    if let Some(a_t) = target.target(Element::A) {
        let t = v_a_gradient(el, a_t, c, a_star, cfg.rp_min);
        terms[0] = t.value;
        value += w.a * t.value;
        grad += w.a * t.as_vector();
    }
    if let Some(e_t) = target.target(Element::E) {
        let t = v_e_gradient(el, e_t, c, a_star, cfg.delta_e);
        terms[1] = t.value;
        value += w.e * t.value;
        grad += w.e * t.as_vector();
    }
    if let Some(i_t) = target.target(Element::I) {
        let t = v_i_gradient(el, i_t, c, a_star, cfg.delta_e);
        terms[2] = t.value;
        value += w.i * t.value;
        grad += w.i * t.as_vector();
    }

    if cfg.penalty {
        let p = (cfg.k * (1.0 - el.periapsis() / cfg.rp_min)).exp();
        let factor = 1.0 + cfg.w_p * p;
        // dP/da = -k (1 - e) P / rp_min, dP/de = k a P / rp_min
        let dp_da = -cfg.k * (1.0 - el.e) / cfg.rp_min * p;
        let dp_de = cfg.k * el.a / cfg.rp_min * p;
        grad *= factor;
        grad[0] += cfg.w_p * dp_da * value;
        grad[1] += cfg.w_p * dp_de * value;
        value *= factor;
        for c in coefficients.iter_mut() {
            *c *= factor;
        }
    }

    ModifiedEval {
        value,
        gradient: grad,
        terms,
        coefficients,
    }
}
