//! Self-contained numerical checks of the guidance building blocks against
//! independent oracles: finite differences, brute-force search, Cartesian
//! two-body integration and grid sweeps.

use nalgebra::{Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use crate::classic::{max_rate, q_eval, thrust_direction, ClassicConfig};
use crate::constants::{MU_EARTH, R_EARTH};
use crate::dynamics::{gauss_matrix, gauss_matrix_at, RtnAcceleration, Vector5};
use crate::elements::{
    cartesian_to_coe, coe_to_cartesian, wrap_pi, CartesianState, Element, OrbitalElements, TargetSpec,
};
use crate::modified::{
    c_factor, f_i_approx, f_i_exact, v_a_gradient, v_e_gradient, v_i_gradient, v_tilde_eval, ModifiedConfig,
    TermGradient,
};
use crate::propagator::{integrate_step, state_derivative, to_state, StateVector};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_s: f64,
}

impl CheckReport {
    fn new(name: &str, passed: bool, detail: String, start: Instant) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
            elapsed_s: start.elapsed().as_secs_f64(),
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    // uniform on the sphere: uniform z and longitude
    let z: f64 = rng.random_range(-1.0..=1.0);
    let lon: f64 = rng.random_range(0.0..TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(s * lon.cos(), s * lon.sin(), z)
}

fn random_elements(rng: &mut ChaCha8Rng, a_range: (f64, f64), e_max: f64) -> OrbitalElements {
    loop {
        let el = OrbitalElements {
            a: rng.random_range(a_range.0..a_range.1),
            e: rng.random_range(0.001..e_max),
            i: rng.random_range(0.01..PI - 0.01),
            raan: rng.random_range(0.0..TAU),
            argp: rng.random_range(0.0..TAU),
            theta: rng.random_range(0.0..TAU),
        };
        if el.periapsis() > R_EARTH {
            return el;
        }
    }
}

fn five_point(g: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (g(x - 2.0 * h) - 8.0 * g(x - h) + 8.0 * g(x + h) - g(x + 2.0 * h)) / (12.0 * h)
}

/// Relative error with an absolute floor for partials that vanish or nearly
/// vanish, where difference roundoff dominates. The relative error is
/// returned only when the relative tolerance is the binding one.
fn partial_error(analytic: f64, fd: f64, floor: f64) -> (bool, Option<f64>) {
    let scale = analytic.abs().max(fd.abs());
    let err = (analytic - fd).abs();
    let pass = err <= 1e-7 * scale + floor;
    let rel = (1e-7 * scale >= floor).then(|| err / scale);
    (pass, rel)
}

type TermFn<'a> = Box<dyn Fn(&OrbitalElements) -> TermGradient + 'a>;

/// Analytic partials of every modified-law term, and of the assembled
/// gradient, against five-point central differences at `n_states` random
/// states away from the switch surfaces `a = a*`, `e = 1 - delta_e`,
/// `cos w = 0` and `r_p = r_p,min`.
///
/// The eccentricity partial of the inclination term is zero by construction
/// and is therefore excluded; the assembled eccentricity entry is compared
/// with the derivative of the `a` and `e` terms only.
pub fn gradient_check(n_states: usize, seed: u64) -> CheckReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut floored = 0;
    let mut failures = 0;
    let mut checked = 0;
    let mut compared = 0;
    while checked < n_states {
        let el = random_elements(&mut rng, (6800.0, 100_000.0), 0.94);
        let cfg = ModifiedConfig {
            zeta: rng.random_range(1.05..2.95),
            delta_e: rng.random_range(0.02..0.2),
            ..Default::default()
        };
        let a_t = rng.random_range(7000.0..45_000.0);
        let e_t = rng.random_range(0.0..0.5);
        let i_t = rng.random_range(0.0..PI);
        let f = rng.random_range(1e-7..1e-5);
        let a_star = cfg.a_star(a_t);
        let near = |x: f64, s: f64, tol: f64| (x - s).abs() < tol * s.abs().max(1.0);
        if near(el.a, a_star, 1e-3)
            || (el.e - (1.0 - cfg.delta_e)).abs() < 1e-3
            || el.argp.cos().abs() < 1e-3
            || el.periapsis() <= cfg.rp_min * (1.0 + 1e-3)
        {
            continue;
        }
        checked += 1;
        let c = c_factor(MU_EARTH, f);
        let steps = [
            (Element::A, 1e-4 * el.a),
            (Element::E, 1e-5),
            (Element::I, 1e-5),
            (Element::Argp, 1e-5),
        ];

        let terms: [(&str, TermFn); 3] = [
            (
                "a",
                Box::new(|s: &OrbitalElements| v_a_gradient(s, a_t, c, a_star, cfg.rp_min)),
            ),
            (
                "e",
                Box::new(|s: &OrbitalElements| v_e_gradient(s, e_t, c, a_star, cfg.delta_e)),
            ),
            (
                "i",
                Box::new(|s: &OrbitalElements| v_i_gradient(s, i_t, c, a_star, cfg.delta_e)),
            ),
        ];
        for (name, term) in terms.iter() {
            let g = term(&el);
            for &(z, h) in &steps {
                if *name == "i" && z == Element::E {
                    continue;
                }
                let analytic = match z {
                    Element::A => g.d_a,
                    Element::E => g.d_e,
                    Element::I => g.d_i,
                    _ => g.d_argp,
                };
                let fd = five_point(|x| term(&el.with(z, x)).value, el.get(z), h);
                let floor = 1e-9 * g.value / if z == Element::A { el.a } else { 1.0 };
                let (ok, rel) = partial_error(analytic, fd, floor);
                compared += 1;
                match rel {
                    Some(r) => worst = worst.max(r),
                    None => floored += 1,
                }
                if !ok {
                    failures += 1;
                }
            }
        }

        let target = TargetSpec::default()
            .with_target(Element::A, a_t)
            .with_target(Element::E, e_t)
            .with_target(Element::I, i_t);
        let w = cfg.weights;
        let full = v_tilde_eval(&el, &target, f, MU_EARTH, &cfg, a_star);
        let total = |s: &OrbitalElements, with_i: bool| {
            let v = v_tilde_eval(s, &target, f, MU_EARTH, &cfg, a_star);
            if with_i {
                v.value
            } else {
                v.value - w.i * v.terms[2]
            }
        };
        for &(z, h) in &steps {
            let fd = five_point(|x| total(&el.with(z, x), z != Element::E), el.get(z), h);
            let floor = 1e-9 * full.value / if z == Element::A { el.a } else { 1.0 };
            let (ok, rel) = partial_error(full.gradient[z.index()], fd, floor);
            compared += 1;
            match rel {
                Some(r) => worst = worst.max(r),
                None => floored += 1,
            }
            if !ok {
                failures += 1;
            }
        }
        if full.gradient[Element::Raan.index()] != 0.0 {
            failures += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = failures == 0 && elapsed < 10.0;
    CheckReport::new(
        "gradient",
        passed,
        format!(
            "{compared} partials at {checked} states, {failures} failures, max rel err {worst:.2e} \
             ({floored} zero or near-zero partials held to the absolute floor), {elapsed:.2} s"
        ),
        start,
    )
}

/// The optimal direction attains a Lyapunov rate no larger than any of
/// `n_dirs` random unit directions, for both laws at `n_states` random states.
/// The slack is relative to the optimal rate.
pub fn direction_optimality_check(n_states: usize, n_dirs: usize, seed: u64) -> CheckReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut worst_margin = f64::INFINITY;
    let classic = ClassicConfig::default();
    let modified = ModifiedConfig::default();
    let f = 1e-6;
    for k in 0..n_states {
        let el = random_elements(&mut rng, (6800.0, 80_000.0), 0.9);
        let target = TargetSpec::default()
            .with_target(Element::A, rng.random_range(7000.0..45_000.0))
            .with_target(Element::E, rng.random_range(0.0..0.5))
            .with_target(Element::I, rng.random_range(0.0..PI));
        let grad: Vector5 = if k % 2 == 0 {
            v_tilde_eval(
                &el,
                &target,
                f,
                MU_EARTH,
                &modified,
                modified.a_star(target.target(Element::A).unwrap()),
            )
            .gradient
        } else {
            q_eval(&el, &target, &classic, f, MU_EARTH).gradient
        };
        let phi = gauss_matrix(&el, MU_EARTH).expect("sampled elements are nonsingular");
        let Ok(u_star) = thrust_direction(&grad, &phi) else {
            continue;
        };
        let w = phi.transpose() * grad;
        let best = f * w.dot(&u_star);
        let slack = 1e-12 * best.abs();
        for _ in 0..n_dirs {
            let u = random_unit(&mut rng);
            let vdot = f * w.dot(&u);
            let margin = vdot - best;
            worst_margin = worst_margin.min(margin / best.abs());
            if best > vdot + slack {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    CheckReport::new(
        "direction_optimality",
        violations == 0 && elapsed < 60.0,
        format!(
            "{n_states} states x {n_dirs} directions, {violations} violations, min relative margin {worst_margin:.2e}, {elapsed:.2} s"
        ),
        start,
    )
}

/// Brute-force maximum of `|dz/dt|` over anomaly and thrust direction:
/// a `n_theta x n_alpha x n_beta` grid followed by a shrinking compass search.
pub fn brute_force_max_rate(which: Element, el: &OrbitalElements, f: f64, mu: f64) -> f64 {
    let (n_theta, n_alpha, n_beta) = (360, 32, 17);
    let row = |theta: f64| {
        let phi = gauss_matrix_at(el, theta, mu);
        Vector3::new(
            phi[(which.index(), 0)],
            phi[(which.index(), 1)],
            phi[(which.index(), 2)],
        )
    };
    let dir = |alpha: f64, beta: f64| Vector3::new(alpha.sin() * beta.cos(), alpha.cos() * beta.cos(), beta.sin());
    let rate = |t: f64, a: f64, b: f64| f * row(t).dot(&dir(a, b)).abs();

    let mut best = (0.0, 0.0, 0.0, f64::NEG_INFINITY);
    let dirs: Vec<(f64, f64, Vector3<f64>)> = (0..n_alpha)
        .flat_map(|ia| {
            (0..n_beta).map(move |ib| {
                let a = TAU * ia as f64 / n_alpha as f64;
                let b = -PI / 2.0 + PI * ib as f64 / (n_beta - 1) as f64;
                (a, b, dir(a, b))
            })
        })
        .collect();
    for it in 0..n_theta {
        let t = TAU * it as f64 / n_theta as f64;
        let r = row(t);
        for (a, b, u) in &dirs {
            let v = f * r.dot(u).abs();
            if v > best.3 {
                best = (t, *a, *b, v);
            }
        }
    }
    let (mut t, mut a, mut b, mut v) = best;
    let mut step = [TAU / n_theta as f64, TAU / n_alpha as f64, PI / (n_beta - 1) as f64];
    while step.iter().any(|s| *s > 1e-9) {
        let mut improved = false;
        for d in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut cand = [t, a, b];
                cand[d] += sign * step[d];
                let cv = rate(cand[0], cand[1], cand[2]);
                if cv > v {
                    (t, a, b, v) = (cand[0], cand[1], cand[2], cv);
                    improved = true;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    v
}

/// Analytic best-case rates of `a`, `e` and `i` against brute-force search.
pub fn max_rate_check(n_states: usize, seed: u64) -> CheckReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = 1e-6;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..n_states {
        let el = random_elements(&mut rng, (6800.0, 80_000.0), 0.9);
        for z in [Element::A, Element::E, Element::I] {
            let analytic = max_rate(z, &el, f, 0.0, MU_EARTH);
            let brute = brute_force_max_rate(z, &el, f, MU_EARTH);
            let rel = (analytic - brute).abs() / analytic;
            worst = worst.max(rel);
            if rel > 5e-3 {
                failures += 1;
            }
        }
    }
    CheckReport::new(
        "max_rate",
        failures == 0,
        format!(
            "{} rates, {failures} beyond 0.5%, max rel err {worst:.2e}",
            3 * n_states
        ),
        start,
    )
}

fn cartesian_rk4(state: &CartesianState, accel_rtn: &RtnAcceleration, h: f64, mu: f64) -> CartesianState {
    let y = Vector6::new(
        state.position.x,
        state.position.y,
        state.position.z,
        state.velocity.x,
        state.velocity.y,
        state.velocity.z,
    );
    let rhs = |_: f64, y: &Vector6<f64>| {
        let r = Vector3::new(y[0], y[1], y[2]);
        let v = Vector3::new(y[3], y[4], y[5]);
        let frame = CartesianState::new(r, v).rtn_to_inertial();
        let a = -mu * r / r.norm().powi(3) + frame * accel_rtn.as_vector();
        Ok(Vector6::new(v.x, v.y, v.z, a.x, a.y, a.z))
    };
    let next = integrate_step(&y, 0.0, h, rhs).expect("two-body state stays finite");
    CartesianState::new(
        Vector3::new(next[0], next[1], next[2]),
        Vector3::new(next[3], next[4], next[5]),
    )
}

/// Largest element discrepancy: relative for `a`, `e`, `i`; absolute [rad]
/// for RAAN, argp and argument of latitude.
fn element_discrepancy(x: &OrbitalElements, y: &OrbitalElements) -> f64 {
    [
        (x.a - y.a).abs() / y.a,
        (x.e - y.e).abs() / y.e,
        (x.i - y.i).abs() / y.i,
        wrap_pi(x.raan - y.raan).abs(),
        wrap_pi(x.argp - y.argp).abs(),
        wrap_pi(x.arg_latitude() - y.arg_latitude()).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Gauss propagation against Cartesian two-body propagation under the same
/// piecewise-constant RTN thrust (10 orbits), and unforced element
/// conservation.
pub fn dynamics_cross_check() -> CheckReport {
    let start = Instant::now();
    let mu = MU_EARTH;
    let f = 1e-6;
    let cases = [
        OrbitalElements::new(7000.0, 0.01, 28.5_f64.to_radians(), 0.3, 0.5, 0.0).unwrap(),
        OrbitalElements::new(24363.9, 0.73, 28.5_f64.to_radians(), 0.0, 178_f64.to_radians(), 0.0).unwrap(),
        OrbitalElements::new(12000.0, 0.2, 1.1, 2.0, 4.0, 1.0).unwrap(),
    ];
    let steps_per_orbit = 4000;
    let segments_per_orbit = 8;
    let schedule = [
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.6, 0.8, 0.0),
        Vector3::new(0.0, 0.6, 0.8),
        Vector3::new(-0.48, 0.6, -0.64),
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 0.0, -1.0),
        Vector3::new(0.0, -1.0, 0.0),
    ];
    let mut forced_worst: f64 = 0.0;
    let mut unforced_worst: f64 = 0.0;
    for el in &cases {
        let h = el.period(mu) / steps_per_orbit as f64;
        let per_segment = steps_per_orbit / segments_per_orbit;
        let mut y = to_state(el, 1.0);
        let mut cart = coe_to_cartesian(el, mu);
        for k in 0..10 * steps_per_orbit {
            let u = RtnAcceleration::from_direction(&schedule[(k / per_segment) % schedule.len()], f);
            y = integrate_step(&y, k as f64 * h, h, |_, s: &StateVector| {
                state_derivative(s, &u, 0.0, mu)
            })
            .expect("forced gauss propagation stays finite");
            cart = cartesian_rk4(&cart, &u, h, mu);
        }
        let gauss_el = crate::propagator::elements_of(&y);
        let cart_el = cartesian_to_coe(&cart, mu).expect("orbit stays elliptic");
        forced_worst = forced_worst.max(element_discrepancy(&gauss_el, &cart_el));

        let mut y = to_state(el, 1.0);
        for k in 0..10 * steps_per_orbit {
            y = integrate_step(&y, k as f64 * h, h, |_, s: &StateVector| {
                state_derivative(s, &RtnAcceleration::ZERO, 0.0, mu)
            })
            .expect("unforced propagation stays finite");
        }
        let end = crate::propagator::elements_of(&y);
        let drift = [
            (end.a - el.a).abs() / el.a,
            (end.e - el.e).abs() / el.e,
            (end.i - el.i).abs() / el.i,
            (end.raan - el.raan).abs(),
            (end.argp - el.argp).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
            / 10.0;
        unforced_worst = unforced_worst.max(drift);
    }
    CheckReport::new(
        "dynamics_cross_check",
        forced_worst <= 1e-6 && unforced_worst <= 1e-9,
        format!("forced max element error {forced_worst:.2e} after 10 orbits, unforced drift {unforced_worst:.2e} per orbit"),
        start,
    )
}

/// The first-order inclination factor never falls below the exact factor on
/// a 360 x 100 grid of argp and `e in [0, 0.99]`.
pub fn fi_bound_check() -> CheckReport {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    for ie in 0..100 {
        let e = 0.99 * ie as f64 / 99.0;
        for iw in 0..360 {
            let w = (iw as f64).to_radians();
            worst = worst.min(f_i_approx(e, w).0 - f_i_exact(e, w));
        }
    }
    CheckReport::new(
        "fi_bound",
        worst >= 0.0,
        format!("min(approx - exact) = {worst:.3e} over 36000 grid points"),
        start,
    )
}

/// All checks at their full sizes.
pub fn run_all(seed: u64) -> Vec<CheckReport> {
    vec![
        gradient_check(1000, seed),
        direction_optimality_check(10_000, 1000, seed),
        max_rate_check(1000, seed),
        dynamics_cross_check(),
        fi_bound_check(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_gradient_check_passes() {
        let r = gradient_check(100, 1);
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn small_direction_check_passes() {
        let r = direction_optimality_check(100, 100, 2);
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn brute_force_matches_circular_closed_form() {
        let el = OrbitalElements::new(7000.0, 0.001, 0.5, 0.0, 0.0, 0.0).unwrap();
        let brute = brute_force_max_rate(Element::A, &el, 1e-6, MU_EARTH);
        let exact = max_rate(Element::A, &el, 1e-6, 0.0, MU_EARTH);
        assert!((brute - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn small_max_rate_check_passes() {
        let r = max_rate_check(20, 3);
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn fi_bound_passes() {
        assert!(fi_bound_check().passed);
    }

    #[test]
    fn random_units_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert!((random_unit(&mut rng).norm() - 1.0).abs() < 1e-14);
        }
    }
}
