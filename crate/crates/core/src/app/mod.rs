//! Scans over `t`, jump detection in `t ↦ |K|(t)`, and report output.

mod config;
mod emit;
mod jumps;

use serde::Serialize;

use crate::curvature::{totals, CurvatureTotals};
use crate::expr::ScalarField;
use crate::levelset::{critical_points, critical_values, extract_level, CellRule};
use crate::par;

pub use config::{parse_config, ConfigError};
pub use emit::{emit, profile_csv, profile_svg, report_json, EmitError, OutputFormat};
pub use jumps::{
    continuity_check, detect_jumps, semicontinuity_check, sphere_volume, ContinuityCheck, Jump, JumpKind,
    JumpParams, JumpReport, RawStep, SemicontinuityCheck, StepTrack,
};

/// Distance below which a level counts as sitting on a critical value.
pub const CRITICAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AppError {
    #[error("invalid scan: {0}")]
    BadScan(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub radius: f64,
    pub cell: CellRule,
    /// Inner balls, as fractions of `radius`, on which every level is also
    /// integrated. Steps caused by curvature crossing `∂B_R` move when the
    /// ball shrinks; genuine jumps stay put.
    pub inner: Vec<f64>,
    /// Seeds per axis for the critical point search; 0 picks a default.
    pub critical_seeds: usize,
}

impl ScanConfig {
    pub fn new(t_min: f64, t_max: f64, n_t: usize, radius: f64, cell: CellRule) -> Self {
        ScanConfig {
            t_min,
            t_max,
            n_t,
            radius,
            cell,
            inner: vec![std::f64::consts::FRAC_1_SQRT_2, 0.5],
            critical_seeds: 0,
        }
    }

    fn validate(&self) -> Result<(), AppError> {
        let bad = |m: &str| Err(AppError::BadScan(m.to_string()));
        if self.n_t < 2 {
            return bad("n_t must be at least 2");
        }
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min < self.t_max) {
            return bad("need finite t_min < t_max");
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad("radius must be positive");
        }
        if self.inner.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return bad("inner radius fractions must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let step = (self.t_max - self.t_min) / (self.n_t - 1) as f64;
        (0..self.n_t)
            .map(|i| if i + 1 == self.n_t { self.t_max } else { self.t_min + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelFailure {
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureProfile {
    pub function: String,
    pub arity: usize,
    pub radius: f64,
    pub cell: CellRule,
    pub grid: Vec<f64>,
    pub totals: Vec<CurvatureTotals>,
    pub inner_radii: Vec<f64>,
    /// `inner[i][k]`: level `grid[i]` integrated over `B_{inner_radii[k]}`.
    pub inner: Vec<Vec<CurvatureTotals>>,
    /// Critical values of `f` inside `B_R` within the scanned range.
    pub critical_values: Vec<f64>,
    /// Grid values that sit on a critical value or whose extraction met
    /// vanishing gradients or failed projections.
    pub critical_values_detected: Vec<f64>,
    pub failures: Vec<LevelFailure>,
}

impl CurvatureProfile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.totals.iter().map(|t| t.k_abs).collect()
    }

    pub fn signed_values(&self) -> Vec<f64> {
        self.totals.iter().map(|t| t.k_total).collect()
    }

    /// Grid strictly increasing and one totals record per grid value.
    pub fn is_valid(&self) -> bool {
        self.grid.windows(2).all(|w| w[0] < w[1])
            && self.totals.len() == self.grid.len()
            && self.inner.len() == self.grid.len()
    }

    /// Radii in use, the scan radius first.
    pub fn radii(&self) -> Vec<f64> {
        std::iter::once(self.radius).chain(self.inner_radii.iter().copied()).collect()
    }

    pub fn near_critical(&self, t: f64) -> bool {
        self.critical_values.iter().any(|c| (t - c).abs() <= CRITICAL_EPS)
    }
}

/// One level integrated over every radius of a scan.
#[derive(Debug, Clone)]
pub(crate) struct LevelSample {
    /// Scan radius first, then the inner radii.
    pub totals: Vec<CurvatureTotals>,
    pub flagged: bool,
    pub empty: bool,
    pub error: Option<String>,
}

fn failed_totals(t: f64, radius: f64, arity: usize) -> CurvatureTotals {
    let mut tot = CurvatureTotals::empty(t, radius, arity);
    tot.k_total = f64::NAN;
    tot.k_abs = f64::NAN;
    tot.k_lambda.fill(f64::NAN);
    tot.k_abs_lambda.fill(f64::NAN);
    tot.lk.fill((f64::NAN, f64::NAN));
    tot
}

pub(crate) fn sample_level(field: &ScalarField, t: f64, radius: f64, cell: CellRule, inner: &[f64]) -> LevelSample {
    let arity = field.arity();
    match extract_level(field, t, radius, cell.cell_for(t)) {
        Ok(mesh) => {
            let mut all = vec![totals(&mesh)];
            all.extend(inner.iter().map(|&r| totals(&mesh.restricted(r))));
            LevelSample {
                totals: all,
                flagged: mesh.stats.singular > 0 || mesh.stats.diverged > 0,
                empty: mesh.is_empty(),
                error: None,
            }
        }
        Err(e) => LevelSample {
            totals: std::iter::once(radius)
                .chain(inner.iter().copied())
                .map(|r| failed_totals(t, r, arity))
                .collect(),
            flagged: true,
            empty: true,
            error: Some(e.to_string()),
        },
    }
}

/// Totals at every grid value of `cfg`, levels evaluated concurrently.
pub fn scan(field: &ScalarField, cfg: &ScanConfig) -> Result<CurvatureProfile, AppError> {
    cfg.validate()?;
    let arity = field.arity();
    let seeds = match cfg.critical_seeds {
        0 if arity == 2 => 24,
        0 => 10,
        s => s,
    };
    let critical: Vec<f64> = critical_values(&critical_points(field, cfg.radius, seeds), CRITICAL_EPS)
        .into_iter()
        .filter(|c| *c >= cfg.t_min - CRITICAL_EPS && *c <= cfg.t_max + CRITICAL_EPS)
        .collect();
    let grid = cfg.grid();
    let inner_radii: Vec<f64> = cfg.inner.iter().map(|f| f * cfg.radius).collect();
    let samples = par::map(&grid, |&t| sample_level(field, t, cfg.radius, cfg.cell, &inner_radii));
    let mut profile = CurvatureProfile {
        function: field.source_text().to_string(),
        arity,
        radius: cfg.radius,
        cell: cfg.cell,
        grid: grid.clone(),
        totals: Vec::with_capacity(grid.len()),
        inner_radii,
        inner: Vec::with_capacity(grid.len()),
        critical_values: critical,
        critical_values_detected: Vec::new(),
        failures: Vec::new(),
    };
    for (t, s) in grid.iter().zip(samples) {
        if s.flagged || profile.near_critical(*t) {
            profile.critical_values_detected.push(*t);
        }
        if let Some(message) = s.error {
            profile.failures.push(LevelFailure { t: *t, message });
        }
        let mut it = s.totals.into_iter();
        profile.totals.push(it.next().expect("scan radius totals"));
        profile.inner.push(it.collect());
    }
    Ok(profile)
}
