use std::f64::consts::PI;

use qlaw::classic::max_rate;
use qlaw::constants::{PhysicalConstants, J2_EARTH, MU_EARTH, R_EARTH};
use qlaw::dynamics::j2_accel_rtn;
use qlaw::elements::{Element, OrbitalElements};
use qlaw::propagator::{elements_of, integrate_step, state_derivative, to_state, StateVector};
use qlaw::validate::brute_force_max_rate;

#[test]
fn j2_nodal_regression_matches_secular_rate() {
    let el = OrbitalElements::new(7000.0, 0.01, 51.6_f64.to_radians(), 0.4, 0.8, 0.0).unwrap();
    let constants = PhysicalConstants::default();
    let period = el.period(MU_EARTH);
    let steps = 4000;
    let h = period / steps as f64;
    let mut y = to_state(&el, 100.0);
    for k in 0..steps {
        y = integrate_step(&y, k as f64 * h, h, |_, s: &StateVector| {
            let accel = j2_accel_rtn(&elements_of(s), &constants);
            state_derivative(s, &accel, 0.0, MU_EARTH)
        })
        .unwrap();
    }
    let end = elements_of(&y);
    let measured = (end.raan - el.raan) / period;
    let p = el.p();
    let secular = -1.5 * J2_EARTH * (MU_EARTH / el.a.powi(3)).sqrt() * (R_EARTH / p).powi(2) * el.i.cos();
    let rel = (measured - secular).abs() / secular.abs();
    assert!(
        rel < 0.01,
        "measured {measured:e} rad/s vs secular {secular:e} rad/s ({rel:.4})"
    );
}

#[test]
fn case_a_best_rates_match_grid_search() {
    let el = OrbitalElements::new(7000.0, 0.01, 0.05_f64.to_radians(), 0.0, 0.0, 0.0).unwrap();
    let f = 1.0 / 300.0 * 1e-3;
    for z in [Element::A, Element::E, Element::I] {
        let analytic = max_rate(z, &el, f, 0.0, MU_EARTH);
        let brute = brute_force_max_rate(z, &el, f, MU_EARTH);
        assert!(
            (analytic - brute).abs() / analytic < 5e-3,
            "{z:?}: {analytic:e} vs {brute:e}"
        );
    }
}

#[test]
fn inclination_rate_closed_form_at_gto() {
    // 24363.9 km, e = 0.73, argp = 178 deg: best plane change happens at apoapsis
    let el = OrbitalElements::new(24363.9, 0.73, 28.5_f64.to_radians(), 0.0, 178_f64.to_radians(), 0.0).unwrap();
    let f = 0.312e-3 / 1200.0;
    let brute = brute_force_max_rate(Element::I, &el, f, MU_EARTH);
    let h = el.h(MU_EARTH);
    let r_apo = el.apoapsis();
    let near_apoapsis = f * r_apo * (PI + 178_f64.to_radians()).cos().abs() / h;
    assert!(brute >= near_apoapsis * (1.0 - 1e-9));
    assert!((max_rate(Element::I, &el, f, 0.0, MU_EARTH) - brute).abs() / brute < 5e-3);
}
