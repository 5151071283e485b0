//! Particle-swarm tuning of controller weights (and optionally `zeta`) for
//! minimum transfer time, and Pareto sweeps over the effectivity threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::classic::Weights;
use crate::elements::Element;
use crate::error::{QlawError, Result};
use crate::propagator::{propagate, RunSummary, Scenario};

/// Penalty per unit of normalized residual distance for non-converged runs [days].
pub const RESIDUAL_PENALTY_DAYS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TunedParam {
    WeightA,
    WeightE,
    WeightI,
    Zeta,
}

impl TunedParam {
    pub fn name(self) -> &'static str {
        match self {
            TunedParam::WeightA => "w_a",
            TunedParam::WeightE => "w_e",
            TunedParam::WeightI => "w_i",
            TunedParam::Zeta => "zeta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub param: TunedParam,
    pub lower: f64,
    pub upper: f64,
    pub scale: Scale,
}

impl ParamRange {
    /// Maps a unit-cube coordinate to a parameter value.
    pub fn from_unit(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self.scale {
            Scale::Linear => self.lower + x * (self.upper - self.lower),
            Scale::Log => self.lower * (self.upper / self.lower).powf(x),
        }
    }

    pub fn to_unit(&self, v: f64) -> f64 {
        let x = match self.scale {
            Scale::Linear => (v - self.lower) / (self.upper - self.lower),
            Scale::Log => (v / self.lower).ln() / (self.upper / self.lower).ln(),
        };
        x.clamp(0.0, 1.0)
    }
}

/// Box-bounded search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<ParamRange>,
}

impl SearchSpace {
    /// Log-scaled `[0.01, 10]` weights for each targeted element among `a`, `e`, `i`.
    pub fn weights_for(scn: &Scenario) -> Self {
        let pairs = [
            (Element::A, TunedParam::WeightA),
            (Element::E, TunedParam::WeightE),
            (Element::I, TunedParam::WeightI),
        ];
        let params = pairs
            .iter()
            .filter(|(z, _)| scn.target.is_targeted(*z))
            .map(|&(_, param)| ParamRange {
                param,
                lower: 0.01,
                upper: 10.0,
                scale: Scale::Log,
            })
            .collect();
        Self { params }
    }

    /// Adds `zeta` in `(1.05, 2.95)`.
    pub fn with_zeta(mut self) -> Self {
        self.params.push(ParamRange {
            param: TunedParam::Zeta,
            lower: 1.05,
            upper: 2.95,
            scale: Scale::Linear,
        });
        self
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(QlawError::config("search_space", "no parameters to tune"));
        }
        for p in &self.params {
            let ok = p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper;
            let ok =
                ok && match p.param {
                    TunedParam::Zeta => p.lower > 1.0 && p.upper < 3.0,
                    _ => p.lower >= 0.0,
                } && (p.scale == Scale::Linear || p.lower > 0.0);
            if !ok {
                return Err(QlawError::config(
                    format!("search_space.{}", p.param.name()),
                    format!("invalid bounds [{}, {}]", p.lower, p.upper),
                ));
            }
        }
        Ok(())
    }

    /// Parameter values of a unit-cube point.
    pub fn decode(&self, x: &[f64]) -> Vec<(TunedParam, f64)> {
        self.params
            .iter()
            .zip(x)
            .map(|(p, &xi)| (p.param, p.from_unit(xi)))
            .collect()
    }

    /// Copy of `scn` with the decoded parameters applied to both laws.
    pub fn apply(&self, scn: &Scenario, x: &[f64]) -> Scenario {
        let mut out = scn.clone();
        for (param, v) in self.decode(x) {
            let c = &mut out.controller;
            match param {
                TunedParam::WeightA => (c.classic.weights.a, c.modified.weights.a) = (v, v),
                TunedParam::WeightE => (c.classic.weights.e, c.modified.weights.e) = (v, v),
                TunedParam::WeightI => (c.classic.weights.i, c.modified.weights.i) = (v, v),
                TunedParam::Zeta => c.modified.zeta = v,
            }
        }
        out
    }

    /// Unit-weight incumbent, keeping the scenario's `zeta`.
    fn incumbent(&self, scn: &Scenario) -> Vec<f64> {
        self.params
            .iter()
            .map(|p| match p.param {
                TunedParam::Zeta => p.to_unit(scn.controller.modified.zeta),
                _ => p.to_unit(1.0),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub swarm: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
    /// Velocity limit per coordinate, in unit-cube lengths.
    pub v_max: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            swarm: 24,
            iterations: 40,
            inertia: 0.7,
            c1: 1.5,
            c2: 1.5,
            v_max: 0.5,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.swarm == 0 || self.iterations == 0 {
            return Err(QlawError::config("pso", "swarm size and iteration count must be >= 1"));
        }
        let coeffs = [self.inertia, self.c1, self.c2, self.v_max];
        if coeffs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) || self.v_max == 0.0 {
            return Err(QlawError::config(
                "pso",
                "coefficients must be finite and >= 0, v_max > 0",
            ));
        }
        Ok(())
    }
}

/// Normalized distance to the target: `|da| / a_T`, `|de|`, angles over pi.
pub fn residual_distance(summary: &RunSummary, scn: &Scenario) -> f64 {
    scn.target
        .targeted()
        .map(|(z, value)| {
            let d = scn.target.distance(&summary.final_elements, z).unwrap_or(0.0);
            let norm = match z {
                Element::A => value.abs().max(1.0),
                Element::E => 1.0,
                _ => PI,
            };
            (d / norm).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Transfer time [days], or `max_days + 100 * residual` when not converged.
pub fn objective(summary: &RunSummary, scn: &Scenario) -> f64 {
    if summary.converged {
        summary.transfer_days
    } else {
        scn.max_days + RESIDUAL_PENALTY_DAYS * residual_distance(summary, scn)
    }
}

/// Runs one scenario without keeping the trajectory.
pub fn evaluate(scn: &Scenario) -> Result<(f64, RunSummary)> {
    let mut quiet = scn.clone();
    quiet.integrator.record_every = usize::MAX;
    let (_, summary) = propagate(&quiet)?;
    Ok((objective(&summary, scn), summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneLogEntry {
    pub iteration: usize,
    pub best_objective: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_params: Vec<(TunedParam, f64)>,
    pub best_weights: Weights,
    pub best_zeta: f64,
    pub best_objective: f64,
    pub best_summary: RunSummary,
    /// Objective of the unit-weight incumbent.
    pub incumbent_objective: f64,
    pub evaluations: usize,
    pub log: Vec<TuneLogEntry>,
}

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best_f: f64,
}

/// Global-best particle swarm over `space`, minimizing [`objective`].
///
/// Particle 0 starts on the unit-weight incumbent. Positions stay inside the
/// unit cube (clamped, with the offending velocity component zeroed), so no
/// run is ever evaluated out of bounds. Evaluations within an iteration run in
/// parallel; all random draws are serial, so a seed fixes the result.
pub fn pso_optimize(scn: &Scenario, space: &SearchSpace, pso: &PsoParams, seed: u64) -> Result<TuneResult> {
    scn.validate()?;
    space.validate()?;
    pso.validate()?;
    let dim = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut swarm: Vec<Particle> = (0..pso.swarm)
        .map(|k| {
            let x: Vec<f64> = if k == 0 {
                space.incumbent(scn)
            } else {
                (0..dim).map(|_| rng.random::<f64>()).collect()
            };
            let v = (0..dim).map(|_| rng.random_range(-pso.v_max..pso.v_max)).collect();
            Particle {
                best_x: x.clone(),
                x,
                v,
                best_f: f64::INFINITY,
            }
        })
        .collect();

    let mut best: Option<(Vec<f64>, f64, RunSummary)> = None;
    let mut any_converged = false;
    let mut incumbent_objective = f64::NAN;
    let mut evaluations = 0;
    let mut log = Vec::with_capacity(pso.iterations);

    for iteration in 0..pso.iterations {
        let results: Vec<Result<(f64, RunSummary)>> =
            swarm.par_iter().map(|p| evaluate(&space.apply(scn, &p.x))).collect();
        evaluations += results.len();
        for (k, (p, r)) in swarm.iter_mut().zip(results).enumerate() {
            let (f, summary) = r?;
            if iteration == 0 && k == 0 {
                incumbent_objective = f;
            }
            any_converged |= summary.converged;
            if f < p.best_f {
                p.best_f = f;
                p.best_x.clone_from(&p.x);
            }
            if best.as_ref().map_or(true, |(_, bf, _)| f < *bf) {
                best = Some((p.x.clone(), f, summary));
            }
        }
        let (gx, gf, _) = best.as_ref().expect("swarm is non-empty");
        log.push(TuneLogEntry {
            iteration,
            best_objective: *gf,
            evaluations,
        });
        log::info!("pso iteration {iteration}: best objective {gf:.3}");

        if iteration + 1 == pso.iterations {
            break;
        }
        let gx = gx.clone();
        for p in swarm.iter_mut() {
            #[allow(clippy::needless_range_loop)]
            for d in 0..dim {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let v = pso.inertia * p.v[d] + pso.c1 * r1 * (p.best_x[d] - p.x[d]) + pso.c2 * r2 * (gx[d] - p.x[d]);
                p.v[d] = v.clamp(-pso.v_max, pso.v_max);
                let x = p.x[d] + p.v[d];
                if !(0.0..=1.0).contains(&x) {
                    p.v[d] = 0.0;
                }
                p.x[d] = x.clamp(0.0, 1.0);
            }
        }
    }

    if !any_converged {
        return Err(QlawError::AllParticlesDiverged { evaluations });
    }
    let (bx, best_objective, best_summary) = best.expect("swarm is non-empty");
    let tuned = space.apply(scn, &bx);
    Ok(TuneResult {
        best_params: space.decode(&bx),
        best_weights: match scn.controller.law {
            crate::guidance::LawKind::Classic => tuned.controller.classic.weights,
            crate::guidance::LawKind::Modified => tuned.controller.modified.weights,
        },
        best_zeta: tuned.controller.modified.zeta,
        best_objective,
        best_summary,
        incumbent_objective,
        evaluations,
        log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub eta_threshold: f64,
    pub transfer_days: f64,
    pub propellant_kg: f64,
    pub weights: Weights,
    pub zeta: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoSweep {
    /// One point per threshold, in input order.
    pub points: Vec<ParetoPoint>,
    /// Converged, non-dominated points sorted by transfer time.
    pub front: Vec<ParetoPoint>,
}

/// Converged points not dominated in (time, propellant).
pub fn non_dominated(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let dominates = |p: &ParetoPoint, q: &ParetoPoint| {
        p.transfer_days <= q.transfer_days
            && p.propellant_kg <= q.propellant_kg
            && (p.transfer_days < q.transfer_days || p.propellant_kg < q.propellant_kg)
    };
    let converged: Vec<&ParetoPoint> = points.iter().filter(|p| p.converged).collect();
    let mut front: Vec<ParetoPoint> = converged
        .iter()
        .filter(|q| !converged.iter().any(|p| dominates(p, q)))
        .map(|q| (*q).clone())
        .collect();
    front.sort_by(|a, b| a.transfer_days.total_cmp(&b.transfer_days));
    front.dedup();
    front
}

/// Tunes the scenario once per effectivity threshold. Failures at a threshold
/// yield a non-converged point rather than an error.
pub fn pareto_sweep(
    scn: &Scenario,
    thresholds: &[f64],
    space: &SearchSpace,
    pso: &PsoParams,
    seed: u64,
) -> Result<ParetoSweep> {
    if thresholds.is_empty() {
        return Err(QlawError::config("thresholds", "at least one threshold is required"));
    }
    if thresholds.iter().any(|t| !(0.0..1.0).contains(t)) || thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(QlawError::config("thresholds", "must lie in [0, 1) in ascending order"));
    }
    let mut points = Vec::with_capacity(thresholds.len());
    for &eta in thresholds {
        let mut s = scn.clone();
        s.controller.coast.eta_threshold = eta;
        let point = match pso_optimize(&s, space, pso, seed) {
            Ok(r) => ParetoPoint {
                eta_threshold: eta,
                transfer_days: r.best_summary.transfer_days,
                propellant_kg: r.best_summary.propellant_kg,
                weights: r.best_weights,
                zeta: r.best_zeta,
                converged: r.best_summary.converged,
            },
            Err(err) => {
                log::warn!("threshold {eta}: {err}");
                ParetoPoint {
                    eta_threshold: eta,
                    transfer_days: f64::NAN,
                    propellant_kg: f64::NAN,
                    weights: s.controller.modified.weights,
                    zeta: s.controller.modified.zeta,
                    converged: false,
                }
            }
        };
        points.push(point);
    }
    let front = non_dominated(&points);
    Ok(ParetoSweep { points, front })
}
