//! Equal-area analysis of the first swing after a disturbance.
//!
//! Areas are closed-form integrals of `P_syn,ref − P_syn,max sin δ`. The
//! kinetic energy they correspond to is `H_vg Ω_ref Δω²`, so an area of
//! `S` at the fault-on equilibrium angle means `Δω = sqrt(S / (H_vg Ω_ref))`.
//! Damping is not part of the criterion.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::index::{equilibria, Equilibria};
use crate::model::RelativeSwingModel;

/// Area difference below which a case is reported as [`Classification::Critical`] (pu·rad).
pub const CRITICAL_AREA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Stable,
    Unstable,
    /// Acceleration and deceleration areas agree within [`CRITICAL_AREA_TOLERANCE`].
    Critical,
    /// No stable equilibrium exists for the model.
    NoSep,
}

impl Classification {
    pub fn is_stable(self) -> bool {
        self == Classification::Stable
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Stable => "Stable",
            Classification::Unstable => "Unstable",
            Classification::Critical => "Critical",
            Classification::NoSep => "NoSep",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Direction the angle moves in after the disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwingDirection {
    Forward,
    Backward,
    /// The initial angle already is the equilibrium.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EacResult {
    /// Acceleration area between the initial angle and the equilibrium (pu·rad).
    pub accel_area: f64,
    /// Deceleration area available between the equilibrium and the UEP (pu·rad).
    pub decel_area: f64,
    /// Fault-on stable equilibrium angle.
    pub delta_s: Option<f64>,
    /// Unstable equilibrium in the swing direction.
    pub delta_u: Option<f64>,
    /// Extreme angle of the first swing, present iff stable.
    pub delta_max: Option<f64>,
    pub classification: Classification,
    pub direction: SwingDirection,
}

/// `∫ (P_syn,ref − P_syn,max sin δ) dδ` over `[from, to]`.
pub fn acceleration_area(model: &RelativeSwingModel, from: f64, to: f64) -> f64 {
    model.sync_power_reference * (to - from) + model.sync_power_max * (to.cos() - from.cos())
}

/// `∫ (P_syn,max sin δ − P_syn,ref) dδ` over `[from, to]`.
pub fn deceleration_area(model: &RelativeSwingModel, from: f64, to: f64) -> f64 {
    -acceleration_area(model, from, to)
}

/// First-swing classification of `model` started at rest from angle `delta_0`.
///
/// When `delta_0` lies above the fault-on equilibrium the swing runs
/// backward; it is analysed on the mirrored model and mapped back.
pub fn classify_first_swing(model: &RelativeSwingModel, delta_0: f64) -> Result<EacResult> {
    let Some(eq) = equilibria(model)? else {
        return Ok(EacResult {
            accel_area: 0.0,
            decel_area: 0.0,
            delta_s: None,
            delta_u: None,
            delta_max: None,
            classification: Classification::NoSep,
            direction: SwingDirection::None,
        });
    };

    if delta_0 == eq.sep {
        return Ok(EacResult {
            accel_area: 0.0,
            decel_area: deceleration_area(model, eq.sep, eq.uep_forward),
            delta_s: Some(eq.sep),
            delta_u: Some(eq.uep_forward),
            delta_max: Some(eq.sep),
            classification: Classification::Stable,
            direction: SwingDirection::None,
        });
    }

    if delta_0 < eq.sep {
        return Ok(forward_swing(model, &eq, delta_0));
    }

    let mirrored = model.mirrored();
    let mirrored_eq = Equilibria {
        sep: -eq.sep,
        uep_forward: -eq.uep_backward,
        uep_backward: -eq.uep_forward,
    };
    let result = forward_swing(&mirrored, &mirrored_eq, -delta_0);
    Ok(EacResult {
        delta_s: result.delta_s.map(|d| -d),
        delta_u: result.delta_u.map(|d| -d),
        delta_max: result.delta_max.map(|d| -d),
        direction: SwingDirection::Backward,
        ..result
    })
}

fn forward_swing(model: &RelativeSwingModel, eq: &Equilibria, delta_0: f64) -> EacResult {
    let mut result = EacResult {
        accel_area: 0.0,
        decel_area: 0.0,
        delta_s: Some(eq.sep),
        delta_u: Some(eq.uep_forward),
        delta_max: None,
        classification: Classification::Unstable,
        direction: SwingDirection::Forward,
    };
    // Already beyond the opposite UEP: the angle slides away at once.
    if delta_0 <= eq.uep_backward {
        result.direction = SwingDirection::Backward;
        result.delta_u = Some(eq.uep_backward);
        return result;
    }

    result.accel_area = acceleration_area(model, delta_0, eq.sep);
    result.decel_area = deceleration_area(model, eq.sep, eq.uep_forward);
    let margin = result.decel_area - result.accel_area;
    if margin.abs() < CRITICAL_AREA_TOLERANCE {
        result.classification = Classification::Critical;
    } else if margin > 0.0 {
        result.classification = Classification::Stable;
        result.delta_max = Some(max_swing_angle(model, eq, result.accel_area));
    }
    result
}

/// Angle where the deceleration area from the SEP equals `target`.
fn max_swing_angle(model: &RelativeSwingModel, eq: &Equilibria, target: f64) -> f64 {
    let (mut lo, mut hi) = (eq.sep, eq.uep_forward);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deceleration_area(model, eq.sep, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
