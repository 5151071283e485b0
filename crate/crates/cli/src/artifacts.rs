//! Trajectory CSV, summary JSON and report plots.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use qlaw::constants::{MU_EARTH, R_EARTH};
use qlaw::elements::{coe_to_cartesian, OrbitalElements};
use qlaw::propagator::{RunSummary, TrajectoryRow};
use qlaw::scenario_file::ScenarioFile;

use crate::plot::{render, Panel, Series, PALETTE};

/// Column list shown in `--help`; order matches [`CsvRow`].
pub const CSV_COLUMNS: &str = "t_s, a_km, e, i_deg, raan_deg, argp_deg, theta_deg, mass_kg, thrust_on (0/1), \
alpha_deg, beta_deg, v, vdot (1/s), eta_r, eclipse (0/1), rp_km";

/// One trajectory sample as written to `trajectory.csv`; angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub t_s: f64,
    pub a_km: f64,
    pub e: f64,
    pub i_deg: f64,
    pub raan_deg: f64,
    pub argp_deg: f64,
    pub theta_deg: f64,
    pub mass_kg: f64,
    pub thrust_on: u8,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub v: f64,
    pub vdot: f64,
    pub eta_r: f64,
    pub eclipse: u8,
    pub rp_km: f64,
}

impl From<&TrajectoryRow> for CsvRow {
    fn from(r: &TrajectoryRow) -> Self {
        Self {
            t_s: r.t,
            a_km: r.a,
            e: r.e,
            i_deg: r.i.to_degrees(),
            raan_deg: r.raan.to_degrees(),
            argp_deg: r.argp.to_degrees(),
            theta_deg: r.theta.to_degrees(),
            mass_kg: r.mass,
            thrust_on: r.thrust_on as u8,
            alpha_deg: r.alpha.to_degrees(),
            beta_deg: r.beta.to_degrees(),
            v: r.v,
            vdot: r.vdot,
            eta_r: r.eta_r,
            eclipse: r.eclipse as u8,
            rp_km: r.rp,
        }
    }
}

impl CsvRow {
    fn elements(&self) -> OrbitalElements {
        OrbitalElements {
            a: self.a_km,
            e: self.e,
            i: self.i_deg.to_radians(),
            raan: self.raan_deg.to_radians(),
            argp: self.argp_deg.to_radians(),
            theta: self.theta_deg.to_radians(),
        }
    }
}

pub fn write_trajectory(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    for r in rows {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()
        .with_context(|| format!("malformed trajectory file {}", path.display()))?;
    Ok(rows)
}

/// `summary.json`: run outcome plus the fully resolved scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryFile {
    pub summary: RunSummary,
    pub recorded_samples: usize,
    pub scenario: ScenarioFile,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn series(rows: &[CsvRow], color: usize, label: &str, y: impl Fn(&CsvRow) -> f64) -> Series {
    Series::new(
        label,
        PALETTE[color],
        rows.iter().map(|r| (r.t_s / 86_400.0, y(r))).collect(),
    )
}

/// Writes the report plots into `dir/plots/` and returns their paths.
pub fn write_plots(dir: &Path, rows: &[CsvRow]) -> Result<Vec<std::path::PathBuf>> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).with_context(|| format!("cannot create {}", plots.display()))?;
    let day = "time [days]";

    let elements = render(&[
        Panel::new("Semi-major axis", day, "a [km]", vec![series(rows, 0, "a", |r| r.a_km)]),
        Panel::new("Eccentricity", day, "e", vec![series(rows, 1, "e", |r| r.e)]),
        Panel::new("Inclination", day, "i [deg]", vec![series(rows, 2, "i", |r| r.i_deg)]),
        Panel::new(
            "Node and perigee",
            day,
            "[deg]",
            vec![
                series(rows, 3, "RAAN", |r| r.raan_deg),
                series(rows, 4, "argp", |r| r.argp_deg),
            ],
        ),
    ]);
    let lyapunov = render(&[
        Panel::new("Lyapunov function", day, "V", vec![series(rows, 0, "V", |r| r.v)]),
        Panel::new(
            "Lyapunov rate",
            day,
            "dV/dt [1/s]",
            vec![series(rows, 1, "dV/dt", |r| r.vdot)],
        ),
    ]);
    let effectivity = render(&[
        Panel::new(
            "Relative effectivity",
            day,
            "eta_r",
            vec![series(rows, 0, "eta_r", |r| r.eta_r)],
        ),
        Panel::new(
            "Thrust and eclipse",
            day,
            "flag",
            vec![
                series(rows, 1, "thrust on", |r| r.thrust_on as f64),
                series(rows, 2, "eclipse", |r| r.eclipse as f64 * 0.5),
            ],
        ),
    ]);
    let mut projection = Panel::new(
        "Trajectory projected in equatorial plane",
        "x / R_e",
        "y / R_e",
        vec![Series::new(
            "orbit",
            PALETTE[0],
            rows.iter()
                .map(|r| {
                    let p = coe_to_cartesian(&r.elements(), MU_EARTH).position;
                    (p.x / R_EARTH, p.y / R_EARTH)
                })
                .collect(),
        )],
    );
    projection.equal_axes = true;
    let equatorial = render(&[projection]);

    let mut written = Vec::new();
    for (name, svg) in [
        ("elements.svg", elements),
        ("lyapunov.svg", lyapunov),
        ("effectivity.svg", effectivity),
        ("equatorial.svg", equatorial),
    ] {
        let path = plots.join(name);
        fs::write(&path, svg).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
