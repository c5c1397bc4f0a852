//! Projection of a joint action onto the feasible set over a finite grid.

use reinsim_core::action::ActionProfile;
use reinsim_core::norms::{FeasibilitySet, Snapshot};
use reinsim_core::state::GlobalState;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProjectionError {
    #[error("projection grid is empty")]
    EmptyGrid,
    #[error("no grid point is feasible")]
    Infeasible,
}

/// Per-component weights of the distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionWeights {
    pub rate: f64,
    pub share: f64,
    pub accept: f64,
    pub capital: f64,
    pub capacity: f64,
}

impl Default for ProjectionWeights {
    fn default() -> Self {
        ProjectionWeights {
            rate: 1.0,
            share: 1.0,
            accept: 1.0,
            capital: 1.0,
            capacity: 1.0,
        }
    }
}

fn components(a: &ActionProfile) -> [f64; 5] {
    let (rate, share, accept) = a.pricing.map_or((0.0, 0.0, 0.0), |p| {
        (p.rate_on_line, p.share, f64::from(u8::from(p.accept)))
    });
    [
        rate,
        share,
        accept,
        a.capital.map_or(0.0, |c| c.allocated_capital.as_f64()),
        a.portfolio.map_or(0.0, |p| p.capacity_granted.as_f64()),
    ]
}

/// Squared weighted distance with each component scaled by the grid's
/// extent in that component. Components the grid does not vary are ignored.
fn distance(a: &[f64; 5], b: &[f64; 5], extent: &[f64; 5], w: &[f64; 5]) -> f64 {
    (0..5)
        .filter(|&i| extent[i] > 0.0)
        .map(|i| {
            let d = (a[i] - b[i]) / extent[i];
            w[i] * d * d
        })
        .sum()
}

/// `a` itself if `feasible(a)`, else the nearest feasible grid point; the
/// earliest in grid order wins ties.
pub fn project_with(
    feasible: impl Fn(&ActionProfile) -> bool,
    a: &ActionProfile,
    grid: &[ActionProfile],
    w: &ProjectionWeights,
) -> Result<ActionProfile, ProjectionError> {
    if grid.is_empty() {
        return Err(ProjectionError::EmptyGrid);
    }
    if feasible(a) {
        return Ok(a.clone());
    }
    let pts: Vec<[f64; 5]> = grid.iter().map(components).collect();
    let mut extent = [0.0; 5];
    for (i, e) in extent.iter_mut().enumerate() {
        let lo = pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
        *e = hi - lo;
    }
    let wv = [w.rate, w.share, w.accept, w.capital, w.capacity];
    let target = components(a);
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in grid.iter().enumerate() {
        if !feasible(g) {
            continue;
        }
        let d = distance(&target, &pts[i], &extent, &wv);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| grid[i].clone())
        .ok_or(ProjectionError::Infeasible)
}

/// Projection against the norms in `state` given the trajectory so far.
pub fn project_to_feasible(
    state: &GlobalState,
    a: &ActionProfile,
    f: &FeasibilitySet,
    history: &[Snapshot],
    grid: &[ActionProfile],
    w: &ProjectionWeights,
) -> Result<ActionProfile, ProjectionError> {
    let ok = |x: &ActionProfile| {
        f.check_snapshot(&Snapshot::capture(state, x), history)
            .is_ok_and(|r| r.feasible)
    };
    project_with(ok, a, grid, w)
}

/// A base policy's actions replayed with and without projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedRun {
    pub base: Vec<ActionProfile>,
    pub projected: Vec<ActionProfile>,
    /// Whether every base step was feasible along the base trajectory.
    pub base_feasible: bool,
    /// Infeasible pairs visited by the projected trajectory.
    pub infeasible_visited: usize,
}

pub fn run_projected(
    state: &GlobalState,
    f: &FeasibilitySet,
    grid: &[ActionProfile],
    w: &ProjectionWeights,
    base: &[ActionProfile],
) -> Result<ProjectedRun, ProjectionError> {
    let mut base_hist = Vec::with_capacity(base.len());
    let mut base_feasible = true;
    for a in base {
        let snap = Snapshot::capture(state, a);
        base_feasible &= f
            .check_snapshot(&snap, &base_hist)
            .is_ok_and(|r| r.feasible);
        base_hist.push(snap);
    }
    let mut hist = Vec::with_capacity(base.len());
    let mut projected = Vec::with_capacity(base.len());
    let mut infeasible_visited = 0;
    for a in base {
        let p = project_to_feasible(state, a, f, &hist, grid, w)?;
        let snap = Snapshot::capture(state, &p);
        if !f.check_snapshot(&snap, &hist).is_ok_and(|r| r.feasible) {
            infeasible_visited += 1;
        }
        hist.push(snap);
        projected.push(p);
    }
    Ok(ProjectedRun {
        base: base.to_vec(),
        projected,
        base_feasible,
        infeasible_visited,
    })
}
