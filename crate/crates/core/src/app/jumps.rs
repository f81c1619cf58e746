//! Discontinuities of `t ↦ |K|(t)`.
//!
//! Candidate steps are grid cells where `|K|` changes by more than the jump
//! threshold, found separately on the scan ball and on each inner ball, and
//! narrowed by bisection. A step that is a truncation artifact (curvature
//! crossing the ball boundary) sits at a location that depends on the radius;
//! fitting a geometric sequence to its locations over the nested balls
//! (Aitken's Δ²) predicts where it goes as the ball grows without bound.
//! Steps that meet at the same limit form one jump, whose one-sided limits
//! are the plateaus beyond the outermost of its steps.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use super::{sample_level, CurvatureProfile, LevelSample, CRITICAL_EPS};
use crate::expr::ScalarField;
use crate::oracle::{Directions, Sampling};
use crate::sphimage::{escape_diagnostic, EscapeParams};
use crate::{par, Vec3};

/// Area of the unit sphere `S^{n−1}`.
pub fn sphere_volume(arity: usize) -> f64 {
    if arity == 2 {
        2.0 * std::f64::consts::PI
    } else {
        4.0 * std::f64::consts::PI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpParams {
    /// Bisection levels spent on each candidate step.
    pub refine_budget: usize,
    /// Overrides the default jump threshold.
    pub threshold: Option<f64>,
    /// Slab half-width for the escape diagnostic; default a quarter of the
    /// scanned range.
    pub escape_epsilon: Option<f64>,
    pub escape_directions: usize,
    pub escape_seed: u64,
}

impl Default for JumpParams {
    fn default() -> Self {
        JumpParams { refine_budget: 7, threshold: None, escape_epsilon: None, escape_directions: 4, escape_seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpKind {
    CriticalValue,
    RegularBifurcation,
    Unresolved,
}

impl JumpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JumpKind::CriticalValue => "critical-value",
            JumpKind::RegularBifurcation => "regular-bifurcation",
            JumpKind::Unresolved => "unresolved",
        }
    }
}

/// A bracketed step of `|K|` on one ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawStep {
    pub radius_index: usize,
    pub radius: f64,
    pub lo: f64,
    pub hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    /// Values at the ends of the grid cell the step was found in. These are
    /// plateau values even when the bracket ends inside the transition.
    pub cell_v_lo: f64,
    pub cell_v_hi: f64,
    /// False when a level inside the bracket failed to extract.
    pub converged: bool,
}

impl RawStep {
    pub fn location(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn rise(&self) -> f64 {
        self.v_hi - self.v_lo
    }

    fn cell_rise(&self) -> f64 {
        self.cell_v_hi - self.cell_v_lo
    }
}

/// One step followed across the nested balls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTrack {
    /// The step on the scan ball.
    pub step: RawStep,
    /// Bracket midpoints per ball, scan ball first; `None` where no
    /// matching step was found.
    pub locations: Vec<Option<f64>>,
    /// Predicted location as the ball grows.
    pub limit: f64,
    pub uncertainty: f64,
    pub stationary: bool,
    /// The locations formed a convergent geometric sequence.
    pub extrapolated: bool,
}

impl StepTrack {
    fn resolved(&self) -> bool {
        self.stationary || self.extrapolated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeSummary {
    pub direction: Vec3,
    pub epsilon: f64,
    pub directions_tried: usize,
    pub components: usize,
    pub one_sided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jump {
    pub c: f64,
    pub c_uncertainty: f64,
    pub left_limit: f64,
    pub right_limit: f64,
    pub value_at_c: Option<f64>,
    pub kind: JumpKind,
    pub k_left: f64,
    pub k_right: f64,
    pub k_at_c: Option<f64>,
    pub k_continuous: bool,
    pub tracks: Vec<StepTrack>,
    pub escape: Option<EscapeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpReport {
    pub threshold: f64,
    pub refine_budget: usize,
    pub jumps: Vec<Jump>,
    pub k_continuous_at: Vec<bool>,
    pub raw_steps: Vec<RawStep>,
    /// Predicted locations outside the scanned range.
    pub out_of_range: Vec<f64>,
    /// Locations where the level is empty and `f` has no critical value.
    pub unattained: Vec<f64>,
    /// Step groups whose limits and value all agree within the threshold.
    pub dismissed: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Key(f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Sampler<'a> {
    field: &'a ScalarField,
    profile: &'a CurvatureProfile,
    cache: BTreeMap<Key, LevelSample>,
}

impl<'a> Sampler<'a> {
    fn new(field: &'a ScalarField, profile: &'a CurvatureProfile) -> Self {
        let mut cache = BTreeMap::new();
        for (i, &t) in profile.grid.iter().enumerate() {
            let mut totals = vec![profile.totals[i].clone()];
            totals.extend(profile.inner[i].iter().cloned());
            let empty = profile.totals[i].n_components == 0;
            cache.insert(Key(t), LevelSample { totals, flagged: false, empty, error: None });
        }
        Sampler { field, profile, cache }
    }

    fn get(&mut self, t: f64) -> &LevelSample {
        let (field, p) = (self.field, self.profile);
        self.cache.entry(Key(t)).or_insert_with(|| sample_level(field, t, p.radius, p.cell, &p.inner_radii))
    }

    /// `(t, value)` of usable samples at or beyond `anchor` on one side,
    /// nearest first.
    fn side(&self, anchor: f64, left: bool, radius_index: usize, signed: bool) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self
            .cache
            .iter()
            .filter(|(k, _)| if left { k.0 <= anchor } else { k.0 >= anchor })
            .filter(|(k, _)| !self.profile.near_critical(k.0))
            .map(|(k, s)| {
                let tot = &s.totals[radius_index];
                (k.0, if signed { tot.k_total } else { tot.k_abs })
            })
            .filter(|(_, v)| v.is_finite())
            .collect();
        out.sort_by(|a, b| (a.0 - anchor).abs().total_cmp(&(b.0 - anchor).abs()));
        out
    }
}

/// Extrapolates the nearest three samples to `at` by Neville's scheme.
/// Samples further than `tol` from the nearest one belong to another plateau
/// and are left out; an extrapolant that leaves the plateau falls back to the
/// nearest sample.
fn extrapolate(samples: &[(f64, f64)], at: f64, tol: f64) -> Option<f64> {
    let first = *samples.first()?;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(3);
    for &(t, v) in samples {
        if (v - first.1).abs() > tol {
            break;
        }
        if pts.iter().all(|p| p.0 != t) {
            pts.push((t, v));
        }
        if pts.len() == 3 {
            break;
        }
    }
    let mut p: Vec<f64> = pts.iter().map(|q| q.1).collect();
    for m in 1..pts.len() {
        for i in 0..pts.len() - m {
            let (ti, tj) = (pts[i].0, pts[i + m].0);
            p[i] = ((at - tj) * p[i] + (ti - at) * p[i + 1]) / (ti - tj);
        }
    }
    let v = p[0];
    Some(if v.is_finite() && (v - first.1).abs() <= tol { v } else { first.1 })
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Default threshold: five times the median successive change of `|K|`,
/// but never below 5% of the sphere area so that a flat profile does not turn
/// mesh noise into jumps.
pub fn default_threshold(profile: &CurvatureProfile) -> f64 {
    let v = profile.abs_values();
    let diffs: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).filter(|d| d.is_finite()).collect();
    (5.0 * median(diffs)).max(0.05 * sphere_volume(profile.arity))
}

fn admissible(profile: &CurvatureProfile, mut t: f64, lo: f64, hi: f64) -> f64 {
    let mut nudge = 4.0 * CRITICAL_EPS;
    while profile.near_critical(t) && t + nudge < hi && t - nudge > lo {
        t += nudge;
        nudge *= 2.0;
    }
    t
}

/// Bisects the bracket `[lo, hi]` of a step on ball `k`, following the
/// larger half of the change.
#[allow(clippy::too_many_arguments)]
fn refine(
    field: &ScalarField,
    profile: &CurvatureProfile,
    k: usize,
    cell: (f64, f64, f64, f64),
    budget: usize,
) -> (RawStep, Vec<(f64, LevelSample)>) {
    let (mut lo, mut hi, mut v_lo, mut v_hi) = cell;
    let (cell_v_lo, cell_v_hi) = (v_lo, v_hi);
    let radii = profile.radii();
    let mut samples = Vec::new();
    let mut converged = true;
    for _ in 0..budget {
        let m = admissible(profile, 0.5 * (lo + hi), lo, hi);
        let s = sample_level(field, m, profile.radius, profile.cell, &profile.inner_radii);
        let vm = s.totals[k].k_abs;
        samples.push((m, s));
        if !vm.is_finite() {
            converged = false;
            break;
        }
        if (vm - v_lo).abs() >= (v_hi - vm).abs() {
            hi = m;
            v_hi = vm;
        } else {
            lo = m;
            v_lo = vm;
        }
    }
    (RawStep { radius_index: k, radius: radii[k], lo, hi, v_lo, v_hi, cell_v_lo, cell_v_hi, converged }, samples)
}

/// `x₂ − (x₂ − x₁)²/((x₂ − x₁) − (x₁ − x₀))` when the differences shrink
/// with a common sign.
fn aitken(x: [f64; 3]) -> Option<f64> {
    let (d1, d2) = (x[1] - x[0], x[2] - x[1]);
    if d1 * d2 <= 0.0 || d2.abs() >= d1.abs() {
        return None;
    }
    Some(x[2] - d2 * d2 / (d2 - d1))
}

fn track(step: &RawStep, per_ball: &[Vec<RawStep>], used: &mut [Vec<bool>], tau: f64) -> StepTrack {
    let mut locations = vec![Some(step.location())];
    let mut widths = vec![step.hi - step.lo];
    for (k, steps) in per_ball.iter().enumerate().skip(1) {
        let best = steps
            .iter()
            .enumerate()
            .filter(|(j, s)| !used[k][*j] && s.cell_rise().signum() == step.cell_rise().signum())
            .map(|(j, s)| {
                let cost = (s.cell_v_lo - step.cell_v_lo).abs() + (s.cell_v_hi - step.cell_v_hi).abs();
                (j, s, cost)
            })
            .filter(|(_, _, cost)| *cost <= tau.max(0.25 * step.cell_rise().abs()))
            .min_by(|a, b| {
                a.2.total_cmp(&b.2)
                    .then((a.1.location() - step.location()).abs().total_cmp(&(b.1.location() - step.location()).abs()))
            });
        match best {
            Some((j, s, _)) => {
                used[k][j] = true;
                locations.push(Some(s.location()));
                widths.push(s.hi - s.lo);
            }
            None => locations.push(None),
        }
    }
    let w = widths.iter().copied().fold(0.0, f64::max);
    let c0 = step.location();
    let mut out = StepTrack {
        step: step.clone(),
        locations: locations.clone(),
        limit: c0,
        uncertainty: w,
        stationary: false,
        extrapolated: false,
    };
    let Some(found) = locations.iter().copied().collect::<Option<Vec<f64>>>() else { return out };
    if found.iter().all(|l| (l - c0).abs() <= 2.0 * w + 1e-12) {
        out.stationary = true;
        return out;
    }
    if found.len() < 3 {
        return out;
    }
    // Smallest ball first, so the sequence runs toward the growing radius.
    let n = found.len();
    let seq = [found[n - 1], found[n - 2], found[0]];
    let Some(limit) = aitken(seq) else { return out };
    let mut spread: f64 = 0.0;
    for mask in 0..8u32 {
        let mut p = seq;
        for (i, x) in p.iter_mut().enumerate() {
            *x += if mask >> i & 1 == 1 { 0.5 * w } else { -0.5 * w };
        }
        match aitken(p) {
            Some(l) => spread = spread.max((l - limit).abs()),
            None => return out,
        }
    }
    out.limit = limit;
    out.uncertainty = spread + w;
    out.extrapolated = true;
    out
}

fn escape_search(
    field: &ScalarField,
    profile: &CurvatureProfile,
    c: f64,
    params: &JumpParams,
) -> Option<EscapeSummary> {
    let width = profile.grid.last()? - profile.grid.first()?;
    let epsilon = params.escape_epsilon.unwrap_or(0.25 * width);
    let ep = EscapeParams {
        epsilon,
        radius: profile.radius,
        cell: profile.cell.cell_for(c.abs() + 0.5 * epsilon),
        max_steps: 5000,
    };
    let mut last = None;
    let dirs = Directions::new(profile.arity, Sampling::LowDiscrepancy { seed: params.escape_seed });
    for (i, u) in dirs.take(params.escape_directions.max(1)).enumerate() {
        let r = escape_diagnostic(field, c, &u, &ep);
        let summary = EscapeSummary {
            direction: r.direction,
            epsilon,
            directions_tried: i + 1,
            components: r.components.len(),
            one_sided: r.has_one_sided_escape(),
        };
        if summary.one_sided {
            return Some(summary);
        }
        last = Some(summary);
    }
    last
}

pub fn detect_jumps(field: &ScalarField, profile: &CurvatureProfile, params: &JumpParams) -> JumpReport {
    let tau = params.threshold.unwrap_or_else(|| default_threshold(profile));
    let mut report = JumpReport {
        threshold: tau,
        refine_budget: params.refine_budget,
        jumps: Vec::new(),
        k_continuous_at: Vec::new(),
        raw_steps: Vec::new(),
        out_of_range: Vec::new(),
        unattained: Vec::new(),
        dismissed: Vec::new(),
    };
    if profile.len() < 2 || !profile.is_valid() {
        return report;
    }
    let balls = 1 + profile.inner_radii.len();
    let mut cells = Vec::new();
    for k in 0..balls {
        let v: Vec<f64> =
            (0..profile.len()).map(|i| if k == 0 { profile.totals[i].k_abs } else { profile.inner[i][k - 1].k_abs }).collect();
        for i in 0..v.len() - 1 {
            if v[i].is_finite() && v[i + 1].is_finite() && (v[i + 1] - v[i]).abs() > tau {
                cells.push((k, (profile.grid[i], profile.grid[i + 1], v[i], v[i + 1])));
            }
        }
    }
    let refined = par::map(&cells, |&(k, cell)| refine(field, profile, k, cell, params.refine_budget));
    let mut sampler = Sampler::new(field, profile);
    let mut per_ball: Vec<Vec<RawStep>> = vec![Vec::new(); balls];
    for (step, samples) in refined {
        for (t, s) in samples {
            sampler.cache.entry(Key(t)).or_insert(s);
        }
        // A change that spreads out under bisection is steep, not a jump.
        if step.converged && step.rise().abs() <= tau {
            continue;
        }
        report.raw_steps.push(step.clone());
        per_ball[step.radius_index].push(step);
    }
    let mut used: Vec<Vec<bool>> = per_ball.iter().map(|s| vec![false; s.len()]).collect();
    let mut tracks: Vec<StepTrack> = per_ball[0].iter().map(|s| track(s, &per_ball, &mut used, tau)).collect();
    tracks.sort_by(|a, b| a.limit.total_cmp(&b.limit));

    let dt = (profile.grid[profile.len() - 1] - profile.grid[0]) / (profile.len() - 1) as f64;
    let mut groups: Vec<Vec<StepTrack>> = Vec::new();
    for t in tracks {
        match groups.last_mut() {
            Some(g) if t.limit - g.last().expect("non-empty group").limit <= dt => g.push(t),
            _ => groups.push(vec![t]),
        }
    }

    let mut critical: Vec<f64> = profile.critical_values.clone();
    critical.extend(profile.critical_values_detected.iter().copied());
    let (t_min, t_max) = (profile.grid[0], profile.grid[profile.len() - 1]);
    let volume = sphere_volume(profile.arity);
    let k_tol = 0.05 * volume;
    for group in groups {
        let fixed: Vec<f64> = group.iter().filter(|t| t.stationary).map(|t| t.limit).collect();
        let limits: Vec<f64> = group.iter().map(|t| t.limit).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mut c = if fixed.is_empty() { mean(&limits) } else { mean(&fixed) };
        let spread = limits.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - limits.iter().copied().fold(f64::INFINITY, f64::min);
        let unc = group.iter().map(|t| t.uncertainty).fold(0.0, f64::max) + 0.5 * spread;
        let snap = critical
            .iter()
            .copied()
            .filter(|cv| (cv - c).abs() <= 2.0 * unc + CRITICAL_EPS)
            .min_by(|a, b| (a - c).abs().total_cmp(&(b - c).abs()));
        if let Some(cv) = snap {
            c = cv;
        }
        if c < t_min - unc || c > t_max + unc {
            report.out_of_range.push(c);
            continue;
        }
        let at_c = sampler.get(c);
        let value_at_c = at_c.totals[0].k_abs;
        let k_at_c = at_c.totals[0].k_total;
        if snap.is_none() && at_c.empty {
            report.unattained.push(c);
            continue;
        }
        // Beyond the outermost step on each side the plateau is the limit
        // the steps carry into `c` as the ball grows.
        let left_anchor =
            group.iter().filter(|t| t.step.location() <= c + unc).map(|t| t.step.lo).fold(c, f64::min);
        let right_anchor =
            group.iter().filter(|t| t.step.location() >= c - unc).map(|t| t.step.hi).fold(c, f64::max);
        let limit = |anchor: f64, left: bool, signed: bool| {
            extrapolate(&sampler.side(anchor, left, 0, signed), anchor, 0.5 * tau).unwrap_or(f64::NAN)
        };
        let (left_limit, right_limit) = (limit(left_anchor, true, false), limit(right_anchor, false, false));
        let (k_left, k_right) = (limit(left_anchor, true, true), limit(right_anchor, false, true));
        let value = value_at_c.is_finite().then_some(value_at_c);
        let gap = [
            (left_limit - right_limit).abs(),
            value.map_or(0.0, |v| (v - left_limit).abs()),
            value.map_or(0.0, |v| (v - right_limit).abs()),
        ];
        if gap.iter().all(|g| *g <= tau) {
            report.dismissed.push(c);
            continue;
        }
        let k_value = k_at_c.is_finite().then_some(k_at_c);
        let k_continuous = (k_left - k_right).abs() <= k_tol
            && k_value.is_none_or(|k| (k - k_left).abs() <= k_tol && (k - k_right).abs() <= k_tol);
        let (kind, escape) = if snap.is_some() {
            (JumpKind::CriticalValue, None)
        } else {
            let e = escape_search(field, profile, c, params);
            let kind = if e.as_ref().is_some_and(|e| e.one_sided) {
                JumpKind::RegularBifurcation
            } else {
                JumpKind::Unresolved
            };
            (kind, e)
        };
        let kind = if kind == JumpKind::CriticalValue || group.iter().any(|t| t.resolved()) || escape.is_some() {
            kind
        } else {
            JumpKind::Unresolved
        };
        report.k_continuous_at.push(k_continuous);
        report.jumps.push(Jump {
            c,
            c_uncertainty: unc,
            left_limit,
            right_limit,
            value_at_c: value,
            kind,
            k_left,
            k_right,
            k_at_c: k_value,
            k_continuous,
            tracks: group,
            escape,
        });
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemicontinuityCheck {
    pub checked: usize,
    /// `(t, value, left limit, right limit)` of every failure.
    pub violations: Vec<(f64, f64, f64, f64)>,
}

impl SemicontinuityCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Grid cells holding a step of `|K|` on the scan ball.
fn break_cells(profile: &CurvatureProfile, report: &JumpReport) -> Vec<bool> {
    let mut breaks = vec![false; profile.len().saturating_sub(1)];
    for s in report.raw_steps.iter().filter(|s| s.radius_index == 0) {
        if let Some(i) = profile.grid.windows(2).position(|w| w[0] <= s.lo && s.hi <= w[1]) {
            breaks[i] = true;
        }
    }
    breaks
}

/// One-sided limits at grid point `i` from its neighbours on the same piece;
/// a point with no neighbour on a side is its own limit there.
fn grid_limits(v: &[f64], breaks: &[bool], i: usize) -> (f64, f64) {
    let ok = |j: usize| v[j].is_finite();
    let left = if i >= 1 && !breaks[i - 1] && ok(i - 1) {
        if i >= 2 && !breaks[i - 2] && ok(i - 2) { 2.0 * v[i - 1] - v[i - 2] } else { v[i - 1] }
    } else {
        v[i]
    };
    let n = v.len();
    let right = if i + 1 < n && !breaks[i] && ok(i + 1) {
        if i + 2 < n && !breaks[i + 1] && ok(i + 2) { 2.0 * v[i + 1] - v[i + 2] } else { v[i + 1] }
    } else {
        v[i]
    };
    (left, right)
}

/// `|K|(t) ≤ min(|K|(t⁻), |K|(t⁺))` within `rel_tol` (plus a small absolute
/// slack for mesh noise) at every grid value and every reported jump.
pub fn semicontinuity_check(profile: &CurvatureProfile, report: &JumpReport, rel_tol: f64) -> SemicontinuityCheck {
    let abs_tol = 2e-3 * sphere_volume(profile.arity);
    let v = profile.abs_values();
    let breaks = break_cells(profile, report);
    let mut out = SemicontinuityCheck { checked: 0, violations: Vec::new() };
    let mut test = |t: f64, value: f64, l: f64, r: f64| {
        out.checked += 1;
        if value > (1.0 + rel_tol) * l.min(r) + abs_tol {
            out.violations.push((t, value, l, r));
        }
    };
    for i in 0..v.len() {
        if !v[i].is_finite() {
            continue;
        }
        let (l, r) = grid_limits(&v, &breaks, i);
        test(profile.grid[i], v[i], l, r);
    }
    for j in &report.jumps {
        if let Some(value) = j.value_at_c {
            test(j.c, value, j.left_limit, j.right_limit);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityCheck {
    pub checked: usize,
    /// `(t, K, left limit, right limit)` of every failure.
    pub violations: Vec<(f64, f64, f64, f64)>,
}

/// Where `|K|` is continuous, `K` must be too: at grid values away from
/// every step the one-sided limits of `K` agree with `K(t)` within twice
/// the jump threshold.
pub fn continuity_check(profile: &CurvatureProfile, report: &JumpReport) -> ContinuityCheck {
    let k = profile.signed_values();
    let breaks = break_cells(profile, report);
    let tol = 2.0 * report.threshold;
    let mut out = ContinuityCheck { checked: 0, violations: Vec::new() };
    for i in 0..k.len() {
        let near_break = (i >= 1 && breaks[i - 1]) || (i < breaks.len() && breaks[i]);
        if !k[i].is_finite() || near_break {
            continue;
        }
        out.checked += 1;
        let (l, r) = grid_limits(&k, &breaks, i);
        if (l - k[i]).abs() > tol || (r - k[i]).abs() > tol {
            out.violations.push((profile.grid[i], k[i], l, r));
        }
    }
    out
}
