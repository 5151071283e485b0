//! JSON scenario files and the built-in Case A/B/C presets.
//!
//! Angles are in degrees in files and radians internally. Optional keys take
//! documented defaults; [`ScenarioFile::resolved`] fills every default in, so
//! a resolved file re-parsed yields an identical [`Scenario`].

use serde::{Deserialize, Serialize};

use crate::classic::{ClassicConfig, Weights};
use crate::constants::{PhysicalConstants, R_EARTH};
use crate::dynamics::{PerturbationToggles, SpacecraftParams};
use crate::elements::{Element, OrbitalElements, TargetSpec};
use crate::error::{QlawError, Result};
use crate::guidance::{CoastPolicy, ControllerConfig, LawKind};
use crate::modified::ModifiedConfig;
use crate::propagator::{IntegratorSettings, Scenario};

const CASE_A: &str = include_str!("../presets/caseA.json");
const CASE_B: &str = include_str!("../presets/caseB.json");
const CASE_C: &str = include_str!("../presets/caseC.json");

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 3] = ["caseA", "caseB", "caseC"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacecraftSection {
    pub mass_kg: f64,
    #[serde(rename = "thrust_N")]
    pub thrust_n: f64,
    pub isp_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialOrbitSection {
    pub a_km: f64,
    pub e: f64,
    pub i_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raan_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argp_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
}

/// Per-element values; used for targets and tolerances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementValues {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raan_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argp_deg: Option<f64>,
}

impl ElementValues {
    fn get(&self, which: Element) -> Option<f64> {
        match which {
            Element::A => self.a_km,
            Element::E => self.e,
            Element::I => self.i_deg,
            Element::Raan => self.raan_deg,
            Element::Argp => self.argp_deg,
        }
    }

    fn slot(&mut self, which: Element) -> &mut Option<f64> {
        match which {
            Element::A => &mut self.a_km,
            Element::E => &mut self.e,
            Element::I => &mut self.i_deg,
            Element::Raan => &mut self.raan_deg,
            Element::Argp => &mut self.argp_deg,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    /// Omitted elements are free.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raan_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argp_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ElementValues>,
}

impl TargetSection {
    pub fn values(&self) -> ElementValues {
        ElementValues {
            a_km: self.a_km,
            e: self.e,
            i_deg: self.i_deg,
            raan_deg: self.raan_deg,
            argp_deg: self.argp_deg,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rp_min_km: Option<f64>,
    /// Defaults to on for the classical law and off for the modified law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<LawKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Weights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<Hyperparameters>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eclipse_coast: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j2: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub third_body: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srp: Option<bool>,
    /// Offset of `t = 0` from the sun-model epoch (sun on +X) [s].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_days: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

/// On-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub spacecraft: SpacecraftSection,
    pub initial_orbit: InitialOrbitSection,
    pub target: TargetSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
}

/// Inclination, RAAN and argp are written in degrees.
fn in_degrees(z: Element) -> bool {
    !matches!(z, Element::A | Element::E)
}

/// Default run length [days].
pub const DEFAULT_MAX_DAYS: f64 = 365.0;

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QlawError::ScenarioFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    pub fn law(&self) -> LawKind {
        self.controller.law.unwrap_or(LawKind::Modified)
    }

    /// Copy with every optional key set to the value actually used.
    pub fn resolved(&self) -> Self {
        let law = self.law();
        let classic = ClassicConfig::default();
        let modified = ModifiedConfig::default();
        let coast = CoastPolicy::default();
        let integ = IntegratorSettings::default();
        let default_tol = TargetSpec::default();

        let mut tolerances = self.target.tolerances.clone().unwrap_or_default();
        for z in Element::ALL {
            let slot = tolerances.slot(z);
            if slot.is_none() {
                let t = default_tol.tolerance(z);
                *slot = Some(if in_degrees(z) { t.to_degrees() } else { t });
            }
        }

        let hp = self.controller.hyperparameters.clone().unwrap_or_default();
        let default_penalty = match law {
            LawKind::Classic => classic.penalty,
            LawKind::Modified => modified.penalty,
        };
        let hyperparameters = Hyperparameters {
            zeta: hp.zeta.or(Some(modified.zeta)),
            delta_e: hp.delta_e.or(Some(modified.delta_e)),
            rp_min_km: hp.rp_min_km.or(Some(classic.rp_min)),
            penalty: hp.penalty.or(Some(default_penalty)),
            w_p: hp.w_p.or(Some(classic.w_p)),
            k: hp.k.or(Some(classic.k)),
            m: hp.m.or(Some(classic.m)),
            n: hp.n.or(Some(classic.n)),
            r: hp.r.or(Some(classic.r_exp)),
            b: hp.b.or(Some(classic.b)),
        };

        Self {
            name: Some(self.name.clone().unwrap_or_else(|| "scenario".into())),
            spacecraft: self.spacecraft.clone(),
            initial_orbit: InitialOrbitSection {
                raan_deg: self.initial_orbit.raan_deg.or(Some(0.0)),
                argp_deg: self.initial_orbit.argp_deg.or(Some(0.0)),
                theta_deg: self.initial_orbit.theta_deg.or(Some(0.0)),
                ..self.initial_orbit.clone()
            },
            target: TargetSection {
                tolerances: Some(tolerances),
                ..self.target.clone()
            },
            controller: ControllerSection {
                law: Some(law),
                weights: Some(self.controller.weights.unwrap_or_default()),
                hyperparameters: Some(hyperparameters),
                eta_threshold: self.controller.eta_threshold.or(Some(coast.eta_threshold)),
                n_theta: self.controller.n_theta.or(Some(coast.n_theta)),
                eclipse_coast: self.controller.eclipse_coast.or(Some(coast.eclipse_coast)),
            },
            dynamics: DynamicsSection {
                j2: self.dynamics.j2.or(Some(false)),
                third_body: self.dynamics.third_body.or(Some(false)),
                srp: self.dynamics.srp.or(Some(false)),
                epoch_s: self.dynamics.epoch_s.or(Some(0.0)),
                max_days: self.dynamics.max_days.or(Some(DEFAULT_MAX_DAYS)),
            },
            integrator: IntegratorSection {
                step_s: self.integrator.step_s.or(Some(integ.step_s)),
                record_every: self.integrator.record_every.or(Some(integ.record_every)),
            },
        }
    }

    /// Builds and validates the internal scenario.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let r = self.resolved();
        let c = &r.controller;
        let hp = c.hyperparameters.clone().unwrap_or_default();
        let weights = c.weights.unwrap_or_default();
        let rp_min = hp.rp_min_km.unwrap_or(R_EARTH + 200.0);
        let penalty = hp.penalty.unwrap_or(false);

        let classic = ClassicConfig {
            weights,
            w_p: hp.w_p.unwrap_or_default(),
            penalty,
            m: hp.m.unwrap_or_default(),
            n: hp.n.unwrap_or_default(),
            r_exp: hp.r.unwrap_or_default(),
            k: hp.k.unwrap_or_default(),
            rp_min,
            b: hp.b.unwrap_or_default(),
        };
        let modified = ModifiedConfig {
            weights,
            zeta: hp.zeta.unwrap_or_default(),
            delta_e: hp.delta_e.unwrap_or_default(),
            rp_min,
            penalty,
            w_p: classic.w_p,
            k: classic.k,
        };
        let controller = ControllerConfig {
            law: c.law.unwrap_or(LawKind::Modified),
            classic,
            modified,
            coast: CoastPolicy {
                eta_threshold: c.eta_threshold.unwrap_or_default(),
                n_theta: c.n_theta.unwrap_or_default(),
                eclipse_coast: c.eclipse_coast.unwrap_or_default(),
            },
        };

        let io = &r.initial_orbit;
        let initial = OrbitalElements::new(
            io.a_km,
            io.e,
            io.i_deg.to_radians(),
            io.raan_deg.unwrap_or_default().to_radians(),
            io.argp_deg.unwrap_or_default().to_radians(),
            io.theta_deg.unwrap_or_default().to_radians(),
        )
        .map_err(|e| QlawError::config("initial_orbit", e.to_string()))?;

        let tol = r.target.tolerances.clone().unwrap_or_default();
        let mut target = TargetSpec::default();
        for z in Element::ALL {
            let to_internal = |v: f64| if in_degrees(z) { v.to_radians() } else { v };
            if let Some(v) = r.target.values().get(z) {
                target = target.with_target(z, to_internal(v));
            }
            if let Some(v) = tol.get(z) {
                target = target.with_tolerance(z, to_internal(v));
            }
        }
        target
            .validate()
            .map_err(|e| QlawError::config("target", e.to_string()))?;

        let d = &r.dynamics;
        let scn = Scenario {
            name: r.name.clone().unwrap_or_default(),
            initial,
            initial_mass_kg: r.spacecraft.mass_kg,
            target,
            spacecraft: SpacecraftParams {
                mass_kg: r.spacecraft.mass_kg,
                thrust_n: r.spacecraft.thrust_n,
                isp_s: r.spacecraft.isp_s,
            },
            controller,
            perturbations: PerturbationToggles {
                j2: d.j2.unwrap_or_default(),
                third_body: d.third_body.unwrap_or_default(),
                srp: d.srp.unwrap_or_default(),
            },
            epoch_s: d.epoch_s.unwrap_or_default(),
            integrator: IntegratorSettings {
                step_s: r.integrator.step_s.unwrap_or_default(),
                record_every: r.integrator.record_every.unwrap_or_default(),
            },
            max_days: d.max_days.unwrap_or_default(),
            constants: PhysicalConstants::default(),
        };
        scn.validate()?;
        Ok(scn)
    }

    pub fn set_law(&mut self, law: LawKind) {
        self.controller.law = Some(law);
    }

    pub fn set_eta_threshold(&mut self, eta: f64) {
        self.controller.eta_threshold = Some(eta);
    }

    /// Sets the `a`, `e`, `i` weights, keeping the RAAN and argp weights.
    pub fn set_weights(&mut self, a: f64, e: f64, i: f64) {
        let w = self.controller.weights.unwrap_or_default();
        self.controller.weights = Some(Weights { a, e, i, ..w });
    }

    pub fn set_zeta(&mut self, zeta: f64) {
        let mut hp = self.controller.hyperparameters.clone().unwrap_or_default();
        hp.zeta = Some(zeta);
        self.controller.hyperparameters = Some(hp);
    }

    pub fn set_step_s(&mut self, step: f64) {
        self.integrator.step_s = Some(step);
    }

    pub fn set_max_days(&mut self, days: f64) {
        self.dynamics.max_days = Some(days);
    }
}

/// Built-in scenario by name (`caseA`, `caseB`, `caseC`).
pub fn preset(name: &str) -> Option<ScenarioFile> {
    let text = match name {
        "caseA" => CASE_A,
        "caseB" => CASE_B,
        "caseC" => CASE_C,
        _ => return None,
    };
    Some(ScenarioFile::from_json(text).expect("presets are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let f = preset(name).unwrap();
            f.to_scenario().unwrap();
        }
        assert!(preset("caseD").is_none());
    }

    #[test]
    fn preset_values() {
        let a = preset("caseA").unwrap().to_scenario().unwrap();
        assert_eq!((a.initial.a, a.initial.e), (7000.0, 0.01));
        assert_eq!(a.target.target(Element::A), Some(42000.0));
        assert_eq!(a.target.target(Element::E), Some(0.01));
        assert!(!a.target.is_targeted(Element::I));
        assert_eq!(
            (a.spacecraft.mass_kg, a.spacecraft.thrust_n, a.spacecraft.isp_s),
            (300.0, 1.0, 3100.0)
        );
        assert_eq!(a.max_days, 365.0);

        let b = preset("caseB").unwrap().to_scenario().unwrap();
        assert_eq!(b.target.target(Element::I), Some(FRAC_PI_2));
        assert_eq!(b.target.target(Element::A), Some(10000.0));
        assert_eq!(b.max_days, 730.0);

        let c = preset("caseC").unwrap().to_scenario().unwrap();
        assert_eq!((c.initial.a, c.initial.e), (24363.9, 0.73));
        assert_eq!(c.initial.i, 28.5_f64.to_radians());
        assert_eq!(c.initial.argp, 178_f64.to_radians());
        assert_eq!(c.target.target(Element::A), Some(42164.0));
        assert_eq!(
            (c.spacecraft.mass_kg, c.spacecraft.thrust_n, c.spacecraft.isp_s),
            (1200.0, 0.312, 1800.0)
        );
        assert!(c.perturbations.j2);
        assert!(c.controller.coast.eclipse_coast);
        assert!(!c.controller.classic.penalty);
    }

    #[test]
    fn resolved_round_trip_is_exact() {
        for name in PRESET_NAMES {
            let f = preset(name).unwrap();
            let r = f.resolved();
            let back = ScenarioFile::from_json(&r.to_json()).unwrap();
            assert_eq!(back, r);
            assert_eq!(back.resolved(), r);
            assert_eq!(back.to_scenario().unwrap(), f.to_scenario().unwrap());
        }
    }

    #[test]
    fn penalty_default_depends_on_law() {
        let mut f = preset("caseA").unwrap();
        f.set_law(LawKind::Classic);
        assert!(f.to_scenario().unwrap().controller.classic.penalty);
        f.set_law(LawKind::Modified);
        assert!(!f.to_scenario().unwrap().controller.modified.penalty);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&preset("caseA").unwrap().to_json()).unwrap();
        v["controller"]["bogus"] = serde_json::json!(1);
        assert!(ScenarioFile::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&preset("caseA").unwrap().to_json()).unwrap();
        v["target"]["tolerances"]["q"] = serde_json::json!(1);
        assert!(ScenarioFile::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&preset("caseA").unwrap().to_json()).unwrap();
        v["target"]["inclination"] = serde_json::json!(1);
        assert!(ScenarioFile::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn minimal_file_takes_defaults() {
        let text = r#"{
            "spacecraft": {"mass_kg": 100, "thrust_N": 0.1, "isp_s": 2000},
            "initial_orbit": {"a_km": 8000, "e": 0.1, "i_deg": 10},
            "target": {"a_km": 9000}
        }"#;
        let s = ScenarioFile::from_json(text).unwrap().to_scenario().unwrap();
        assert_eq!(s.initial.theta, 0.0);
        assert_eq!(s.max_days, DEFAULT_MAX_DAYS);
        assert_eq!(s.integrator.step_s, 60.0);
        assert_eq!(s.controller.law, LawKind::Modified);
        assert_eq!(s.target.tolerance(Element::A), 10.0);
        assert!(!s.target.is_targeted(Element::E));
    }

    #[test]
    fn validation_names_key() {
        let mut f = preset("caseA").unwrap();
        f.set_zeta(5.0);
        let err = f.to_scenario().unwrap_err().to_string();
        assert!(err.contains("zeta"), "{err}");
        let mut f = preset("caseA").unwrap();
        f.set_eta_threshold(1.5);
        assert!(f.to_scenario().unwrap_err().to_string().contains("eta_threshold"));
        let mut f = preset("caseA").unwrap();
        f.set_step_s(0.0);
        assert!(f.to_scenario().unwrap_err().to_string().contains("step_s"));
    }

    #[test]
    fn overrides_apply() {
        let mut f = preset("caseC").unwrap();
        f.set_weights(2.0, 3.0, 4.0);
        f.set_eta_threshold(0.3);
        f.set_max_days(10.0);
        let s = f.to_scenario().unwrap();
        assert_eq!(s.controller.modified.weights.e, 3.0);
        assert_eq!(s.controller.classic.weights.i, 4.0);
        assert_eq!(s.controller.coast.eta_threshold, 0.3);
        assert_eq!(s.max_days, 10.0);
    }
}
