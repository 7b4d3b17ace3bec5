//! Fault-on stability region on the `(δ, Δω)` phase plane.
//!
//! The boundary is the stable manifold of the UEPs, traced by integrating
//! the swing equation backward in time from seeds next to each UEP. Grid
//! classification simulates every cell forward and is the reference for
//! damped models, where the traced manifold spirals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::index::{equilibria, Equilibria};
use crate::model::RelativeSwingModel;
use crate::sim::{energy, integrate_until, LosThresholds, SyncState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSettings {
    /// Seed offset from the UEP along the eigenvector (rad).
    pub epsilon: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Branches stop once `|Δω|` exceeds this (pu).
    pub omega_cap: f64,
}

impl Default for TraceSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            dt: 1e-3,
            t_max: 100.0,
            omega_cap: 1.0,
        }
    }
}

impl TraceSettings {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("epsilon", self.epsilon)?;
        ensure_positive("dt", self.dt)?;
        ensure_positive("t_max", self.t_max)?;
        ensure_positive("omega_cap", self.omega_cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBranch {
    /// UEP the branch emanates from.
    pub uep: f64,
    /// Side of the UEP the seed was placed on (+1 or −1).
    pub side: f64,
    pub points: Vec<SyncState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub branches: Vec<BoundaryBranch>,
    pub equilibria: Equilibria,
    pub model: RelativeSwingModel,
}

/// Eigenvalue of the linearization at `uep` whose eigenvector is the
/// forward-time stable direction, i.e. the boundary tangent.
pub fn stable_eigenvalue(model: &RelativeSwingModel, uep: f64) -> f64 {
    let two_h = 2.0 * model.sync_inertia;
    let a = model.sync_damping / two_h;
    let b = model.reference_angular_velocity * (-model.sync_power_max * uep.cos() / two_h);
    // μ² + a μ − b = 0
    0.5 * (-a - (a * a + 4.0 * b).sqrt())
}

/// Traces the four boundary branches (two per UEP) in reverse time.
pub fn trace_boundary(model: &RelativeSwingModel, settings: &TraceSettings) -> Result<RegionBoundary> {
    model.validate()?;
    settings.validate()?;
    let eq = equilibria(model)?.ok_or(Error::NoEquilibrium)?;
    let reversed = reversed(model);
    let limit = 4.0 * std::f64::consts::PI;

    let mut branches = Vec::with_capacity(4);
    for uep in [eq.uep_forward, eq.uep_backward] {
        let mu = stable_eigenvalue(model, uep);
        for side in [1.0, -1.0] {
            let seed = SyncState::new(
                uep + side * settings.epsilon,
                side * settings.epsilon * mu / model.reference_angular_velocity,
            );
            let mut points = Vec::new();
            integrate_until(&reversed, seed, settings.dt, settings.t_max, |_, s| {
                points.push(*s);
                (s.delta - eq.sep).abs() > limit || s.omega.abs() > settings.omega_cap
            })?;
            branches.push(BoundaryBranch { uep, side, points });
        }
    }
    Ok(RegionBoundary {
        branches,
        equilibria: eq,
        model: *model,
    })
}

/// Model whose forward dynamics are the reverse-time dynamics of `model`.
fn reversed(model: &RelativeSwingModel) -> RelativeSwingModel {
    RelativeSwingModel {
        sync_inertia: -model.sync_inertia,
        reference_angular_velocity: -model.reference_angular_velocity,
        ..*model
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBand {
    pub delta: f64,
    pub omega: f64,
}

impl Default for ConvergenceBand {
    fn default() -> Self {
        Self {
            delta: 0.05,
            omega: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub delta_range: (f64, f64),
    pub omega_range: (f64, f64),
    pub n_delta: usize,
    pub n_omega: usize,
    pub t_max: f64,
    pub dt: f64,
    pub band: ConvergenceBand,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_delta < 2 || self.n_omega < 2 {
            return Err(Error::param(
                "grid size",
                self.n_delta.min(self.n_omega) as f64,
                "needs at least 2 points per axis",
            ));
        }
        for (name, (lo, hi)) in [("delta_range", self.delta_range), ("omega_range", self.omega_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::param(name, hi - lo, "must be a finite increasing interval"));
            }
        }
        ensure_positive("t_max", self.t_max)?;
        ensure_positive("dt", self.dt)?;
        ensure_positive("band.delta", self.band.delta)?;
        ensure_positive("band.omega", self.band.omega)
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        let step = (range.1 - range.0) / (n - 1) as f64;
        (0..n).map(|i| range.0 + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionLabel {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub delta_axis: Vec<f64>,
    pub omega_axis: Vec<f64>,
    /// `labels[i][j]` is the cell at `(delta_axis[i], omega_axis[j])`.
    pub labels: Vec<Vec<RegionLabel>>,
    pub area_estimate: f64,
}

impl RegionGrid {
    pub fn stable_count(&self) -> usize {
        self.labels
            .iter()
            .flatten()
            .filter(|&&l| l == RegionLabel::Stable)
            .count()
    }

    pub fn cell_area(&self) -> f64 {
        let dd = self.delta_axis[1] - self.delta_axis[0];
        let dw = self.omega_axis[1] - self.omega_axis[0];
        dd * dw
    }
}

/// Labels one initial condition by simulating the fixed model forward.
pub fn classify_point(
    model: &RelativeSwingModel,
    eq: &Equilibria,
    initial: SyncState,
    t_max: f64,
    dt: f64,
    band: &ConvergenceBand,
) -> Result<RegionLabel> {
    let thresholds = LosThresholds {
        forward: eq.uep_forward,
        backward: eq.uep_backward,
    };
    let trap = TrapLevel::new(model, eq, band);
    let mut lost = false;
    let mut trapped = false;
    let (_, last) = integrate_until(model, initial, dt, t_max, |_, s| {
        lost = thresholds.crossed(s);
        trapped = !lost && trap.contains(model, s);
        lost || trapped
    })?;
    Ok(if trapped
        || (!lost
            && !thresholds.crossed(&last)
            && (last.delta - eq.sep).abs() < band.delta
            && last.omega.abs() < band.omega)
    {
        RegionLabel::Stable
    } else {
        RegionLabel::Unstable
    })
}

/// Energy sublevel set around the SEP that lies inside the convergence band.
/// With positive damping `V` cannot increase, so a state inside it stays in
/// the band for good.
struct TrapLevel {
    enabled: bool,
    sep: f64,
    half_width: f64,
    level: f64,
}

impl TrapLevel {
    fn new(model: &RelativeSwingModel, eq: &Equilibria, band: &ConvergenceBand) -> Self {
        let at = |delta: f64, omega: f64| energy(model, &SyncState::new(delta, omega));
        let v_sep = at(eq.sep, 0.0);
        let half_width = band
            .delta
            .min(eq.uep_forward - eq.sep)
            .min(eq.sep - eq.uep_backward);
        let level = (model.sync_inertia * band.omega * band.omega)
            .min(at(eq.sep - half_width, 0.0) - v_sep)
            .min(at(eq.sep + half_width, 0.0) - v_sep);
        Self {
            enabled: model.sync_damping > 0.0 && level > 0.0,
            sep: eq.sep,
            half_width,
            level: v_sep + 0.5 * level,
        }
    }

    fn contains(&self, model: &RelativeSwingModel, s: &SyncState) -> bool {
        self.enabled && (s.delta - self.sep).abs() < self.half_width && energy(model, s) < self.level
    }
}

/// Classifies every grid cell as an initial condition of the fixed model.
pub fn classify_grid(model: &RelativeSwingModel, spec: &GridSpec) -> Result<RegionGrid> {
    model.validate()?;
    spec.validate()?;
    let eq = equilibria(model)?.ok_or(Error::NoEquilibrium)?;
    let delta_axis = GridSpec::axis(spec.delta_range, spec.n_delta);
    let omega_axis = GridSpec::axis(spec.omega_range, spec.n_omega);

    let labels = delta_axis
        .par_iter()
        .map(|&delta| {
            omega_axis
                .iter()
                .map(|&omega| {
                    classify_point(model, &eq, SyncState::new(delta, omega), spec.t_max, spec.dt, &spec.band)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut grid = RegionGrid {
        delta_axis,
        omega_axis,
        labels,
        area_estimate: 0.0,
    };
    grid.area_estimate = grid.cell_area() * grid.stable_count() as f64;
    Ok(grid)
}
