//! Formula-versus-oracle checks for a scene.
//!
//! Pipeline values come from the scene sampled at the requested resolution; oracle values come
//! from a finely resampled copy of the same scene, so coarse sampling shows up as error.

use crate::geometry::{BoundingSpec, Configuration, Tolerances, Vec2};
use crate::integrals::{boundary_volume, region_volume_weyl, steiner_total_neighborhood, BoundaryMode, IntegralError};
use crate::invariants::{compute_invariants, InvariantError};
use crate::linking::{link_configuration, LinkingError, Target};
use crate::medial::{compute_all_axes, MedialError, MedialParams};
use crate::medial::MedialGraph;
use crate::oracles::{
    compare_with_ridge, distance_transform_ridge, monte_carlo_area, raster_linking_volumes, window, OracleError,
    RidgeDomain,
};
use crate::scene::{Scene, SceneError};
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Medial(#[from] MedialError),
    #[error(transparent)]
    Linking(#[from] LinkingError),
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorKind {
    Relative,
    /// In raster cells.
    Cells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub formula: f64,
    pub oracle: f64,
    pub error: f64,
    pub kind: ErrorKind,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub reference_n: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub skipped: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<28} {:>14} {:>14} {:>11} {:>9}  result\n", "check", "formula", "oracle", "error", "tol");
        for c in &self.checks {
            let unit = if c.kind == ErrorKind::Cells { " cells" } else { "" };
            let _ = writeln!(
                s,
                "{:<28} {:>14.6} {:>14.6} {:>11.3e} {:>9.1e}  {}{unit}",
                c.name,
                c.formula,
                c.oracle,
                c.error,
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            );
        }
        for k in &self.skipped {
            let _ = writeln!(s, "skipped: {k}");
        }
        s
    }
}

pub const WEYL_TOL: f64 = 0.01;
pub const BOUNDARY_TOL: f64 = 0.005;
pub const STEINER_TOL: f64 = 0.015;
pub const CLOSENESS_TOL: f64 = 0.02;
pub const HAUSDORFF_CELLS: f64 = 2.0;
const MC_SAMPLES: usize = 400_000;

fn relative(name: String, formula: f64, oracle: f64, tolerance: f64) -> Check {
    let error = if oracle == 0.0 { formula.abs() } else { (formula - oracle).abs() / oracle.abs() };
    Check { name, formula, oracle, error, kind: ErrorKind::Relative, tolerance, pass: error <= tolerance }
}

/// Compared point counts in the value columns, distance in cells as the error.
fn ridge_check(name: String, axis: &MedialGraph, ridge: &[Vec2], cell: f64, min_angle: f64) -> Check {
    let cmp = compare_with_ridge(axis, ridge, cell, min_angle);
    let h = cmp.hausdorff() / cell;
    Check {
        name,
        formula: cmp.compared_axis as f64,
        oracle: cmp.compared_ridge as f64,
        error: h,
        kind: ErrorKind::Cells,
        tolerance: HAUSDORFF_CELLS,
        pass: h <= HAUSDORFF_CELLS,
    }
}

/// Samples per region in the oracle copy of the scene.
pub fn reference_samples(n: usize) -> usize {
    (4 * n).clamp(1024, 4096)
}

pub fn validate(scene: &Scene, n: usize, seed: u64) -> Result<ValidationReport, ValidateError> {
    let config = scene.build(n)?;
    let reference_n = reference_samples(n);
    let reference = scene.build(reference_n)?;
    let mut checks = Vec::new();
    let mut skipped = Vec::new();

    let axes = compute_all_axes(&config, &MedialParams::for_config(&config))?;
    for (k, axis) in axes.iter().enumerate() {
        let id = axis.owner;
        let fine = reference.region(id).expect("same regions");
        let (lo, hi) = fine.bbox();
        let mc = monte_carlo_area(|p| fine.contains(&p), lo, hi, MC_SAMPLES, seed.wrapping_add(k as u64));
        let mut c = relative(format!("weyl area [{id}]"), region_volume_weyl(axis), mc.value, WEYL_TOL);
        // The Monte Carlo error bar widens the tolerance.
        c.pass = (c.formula - c.oracle).abs() <= WEYL_TOL * mc.value + mc.error;
        checks.push(c);
        checks.push(relative(
            format!("boundary length [{id}]"),
            boundary_volume(axis, BoundaryMode::Complete),
            fine.polyline_length(),
            BOUNDARY_TOL,
        ));
    }

    // The ridge oracle sees kinks whose contacts subtend twice the pruning angle.
    let min_angle = 2.0 * Tolerances::for_config(&config).theta_min;
    for axis in &axes {
        let id = axis.owner;
        let (lo, hi) = reference.region(id).expect("same regions").bbox();
        let cell = (hi - lo).norm() / 400.0;
        let ridge = distance_transform_ridge(&reference, RidgeDomain::Interior(id), cell, min_angle)?;
        checks.push(ridge_check(format!("medial vs ridge [{id}]"), axis, &ridge, cell, min_angle));
    }

    for curve in &config.regions {
        let id = curve.region_id;
        if curve.samples.iter().any(|s| s.curvature < 0.0) {
            skipped.push(format!("steiner [{id}]: region is not convex"));
            continue;
        }
        let tau = 0.05 * config.diameter();
        let alone = Configuration::new(vec![curve.clone()], &BoundingSpec::TruncatedThreshold { tau })
            .map_err(SceneError::from)?;
        let (_, s) = link_configuration(&alone)?;
        let fine = reference.region(id).expect("same regions");
        checks.push(relative(
            format!("steiner tau={tau:.3} [{id}]"),
            steiner_total_neighborhood(&s, id)?,
            fine.polyline_length() * tau + std::f64::consts::PI * tau * tau,
            STEINER_TOL,
        ));
    }

    let (lo, hi) = window(&reference);
    let cell = (hi - lo).norm() / 400.0;
    let smallest = reference.regions.iter().map(|c| (c.bbox().1 - c.bbox().0).norm()).fold(f64::INFINITY, f64::min);
    let fine_cell = cell.min(smallest / 200.0);
    if config.bounding.is_bounded() && config.regions.len() > 1 {
        let (structure, _, report) = compute_invariants(&config)?;
        let oracle = raster_linking_volumes(&reference, fine_cell)?;
        for c in &report.c_dir {
            if c.value > 0.0 {
                let target = Target::Region(c.to);
                let mut check = relative(
                    format!("closeness {}->{}", c.from, c.to),
                    c.value,
                    oracle.closeness(c.from, target),
                    CLOSENESS_TOL,
                );
                // Cells cut by bucket edges widen the tolerance.
                check.pass = (check.formula - check.oracle).abs()
                    <= CLOSENESS_TOL * check.oracle + oracle.closeness_error(c.from, target);
                checks.push(check);
            }
        }
        let ridge = distance_transform_ridge(&reference, RidgeDomain::Exterior, cell, min_angle)?;
        checks.push(ridge_check("linking axis vs ridge".into(), &structure.m0, &ridge, cell, min_angle));
    } else {
        skipped.push("closeness and linking axis: needs two regions and a bounded mode".into());
    }

    Ok(ValidationReport { n, reference_n, seed, checks, skipped })
}
