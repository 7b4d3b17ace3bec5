//! Equilibria, the stability level index λ and the inertia-matching
//! sensitivities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::model::{
    load_power, net_power, reduce_with_omega, LoadParams, RelativeSwingModel, SgParams, VsgParams,
};

/// Equilibrium angles of a model with a stable equilibrium point.
///
/// `sep` lies in (−π/2, π/2); the forward and backward unstable points are
/// `π − sep` and `−π − sep`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibria {
    pub sep: f64,
    pub uep_forward: f64,
    pub uep_backward: f64,
}

impl Equilibria {
    fn from_sep(sep: f64) -> Self {
        Self {
            sep,
            uep_forward: PI - sep,
            uep_backward: -PI - sep,
        }
    }
}

/// `|P_syn,ref| < P_syn,max`.
pub fn sep_exists(model: &RelativeSwingModel) -> bool {
    model.sync_power_reference.abs() < model.sync_power_max
}

/// Equilibria of `model`, or `None` when no stable equilibrium exists.
pub fn equilibria(model: &RelativeSwingModel) -> Result<Option<Equilibria>> {
    if model.sync_power_max == 0.0 && model.sync_power_reference == 0.0 {
        return Err(Error::DegenerateModel(
            "zero synchronizing and reference power: every angle is an equilibrium",
        ));
    }
    if !sep_exists(model) {
        return Ok(None);
    }
    let sep = (model.sync_power_reference / model.sync_power_max).asin();
    Ok(Some(Equilibria::from_sep(sep)))
}

/// Stability level index `λ = 1 − |P_syn,ref| / P_syn,max`.
pub fn stability_index(model: &RelativeSwingModel) -> Result<f64> {
    if model.sync_power_max <= 0.0 {
        return Err(Error::DegenerateModel("stability index needs P_syn,max > 0"));
    }
    Ok(1.0 - model.sync_power_reference.abs() / model.sync_power_max)
}

/// Short-circuit ratio `1 / (X_g + X_v)`.
pub fn scr(vsg: &VsgParams, sg: &SgParams) -> Result<f64> {
    let x = vsg.line_reactance + sg.line_reactance;
    if x <= 0.0 {
        return Err(Error::SingularNetwork("X_g + X_v must be positive"));
    }
    Ok(1.0 / x)
}

/// λ expressed through the short-circuit ratio.
pub fn lambda_from_scr(
    scr: f64,
    virtual_reactance: f64,
    sync_power_reference: f64,
    vsg_voltage: f64,
    sg_voltage: f64,
) -> Result<f64> {
    ensure_positive("scr", scr)?;
    let voltage_product = vsg_voltage * sg_voltage;
    if voltage_product == 0.0 {
        return Err(Error::DegenerateModel("E_v·E_g is zero"));
    }
    Ok(1.0 - (1.0 / scr + virtual_reactance) * sync_power_reference.abs() / voltage_product)
}

/// Machine-level quantities that determine λ as a function of the two inertias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingInputs {
    pub power_reference: f64,
    pub net_power: f64,
    pub vsg_voltage: f64,
    pub sg_voltage: f64,
    pub total_reactance: f64,
}

impl MatchingInputs {
    /// Fault-on inputs taken from machine parameters (the SG voltage in `sg`
    /// is used for both the load power and the synchronizing power).
    pub fn from_params(vsg: &VsgParams, sg: &SgParams, load: &LoadParams) -> Self {
        Self {
            power_reference: vsg.power_reference,
            net_power: net_power(sg.mechanical_power, load_power(sg.voltage, load)),
            vsg_voltage: vsg.internal_voltage,
            sg_voltage: sg.voltage,
            total_reactance: crate::model::total_reactance(vsg, sg),
        }
    }

    fn sync_power_max(&self) -> f64 {
        self.sg_voltage * self.vsg_voltage / self.total_reactance
    }

    /// Inertia ratio `H_v/H_g` at which `P_syn,ref` vanishes.
    pub fn matched_ratio(&self) -> f64 {
        self.power_reference / self.net_power
    }

    /// λ written directly in terms of the machine inertias.
    pub fn lambda(&self, vsg_inertia: f64, sg_inertia: f64) -> f64 {
        let h_total = vsg_inertia + sg_inertia;
        let reference = (sg_inertia * self.power_reference - vsg_inertia * self.net_power) / h_total;
        1.0 - reference.abs() / self.sync_power_max()
    }

    /// λ as a function of the ratio `r = H_v/H_g` alone.
    pub fn lambda_of_ratio(&self, ratio: f64) -> f64 {
        self.lambda(ratio, 1.0)
    }
}

/// Open interval of inertia ratios `H_v/H_g` for which an SEP exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioInterval {
    pub lower: f64,
    pub upper: f64,
    /// Set when `P_net ≤ 0`, where the severe/shallow fault branching does
    /// not apply and the interval comes from the existence condition alone.
    pub degenerate_branching: bool,
}

impl RatioInterval {
    pub fn contains(&self, ratio: f64) -> bool {
        ratio > self.lower && ratio < self.upper
    }

    pub fn is_empty(&self) -> bool {
        self.lower >= self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower == 0.0 && self.upper == f64::INFINITY
    }
}

/// Admissible range of `H_v/H_g` for SEP existence.
///
/// Existence is `|P_vref − r·P_net| < P_max·(1 + r)` with `P_max = E_g E_v / X_sum`.
/// Both sides are affine in `r`, so the solution set on `r > 0` is an open
/// interval. For a severe fault (`P_net > P_max`) the upper end is
/// `(E_g E_v + P_vref X_sum) / (P_net X_sum − E_g E_v)`.
pub fn sep_ratio_bounds(inputs: &MatchingInputs) -> Result<RatioInterval> {
    ensure_positive("total_reactance", inputs.total_reactance)?;
    ensure_non_negative("vsg_voltage", inputs.vsg_voltage)?;
    ensure_non_negative("sg_voltage", inputs.sg_voltage)?;

    let p_max = inputs.sync_power_max();
    let (p_ref, p_net) = (inputs.power_reference, inputs.net_power);
    let degenerate_branching = p_net <= 0.0;
    if degenerate_branching {
        log::warn!("P_net = {p_net} ≤ 0: ratio bounds from the existence condition only");
    }

    let mut interval = RatioInterval {
        lower: 0.0,
        upper: f64::INFINITY,
        degenerate_branching,
    };
    // a + b·r < 0 for each half of the absolute-value inequality.
    for (a, b) in [(p_ref - p_max, -(p_net + p_max)), (-(p_ref + p_max), p_net - p_max)] {
        if b > 0.0 {
            interval.upper = interval.upper.min(-a / b);
        } else if b < 0.0 {
            interval.lower = interval.lower.max(-a / b);
        } else if a >= 0.0 {
            interval.upper = 0.0;
        }
    }
    Ok(interval)
}

/// ∂λ/∂(H_v/H_g) at fixed `H_g`.
///
/// Positive below the matched ratio and negative above it (for `P_vref + P_net > 0`).
/// At the matched ratio λ has a kink and [`Error::NonDifferentiable`] is returned.
pub fn dlambda_dratio(inputs: &MatchingInputs, vsg_inertia: f64, sg_inertia: f64) -> Result<f64> {
    ensure_positive("vsg_inertia", vsg_inertia)?;
    ensure_positive("sg_inertia", sg_inertia)?;
    let offset = sg_inertia * inputs.power_reference - vsg_inertia * inputs.net_power;
    if offset == 0.0 {
        return Err(Error::NonDifferentiable(
            "inertia ratio equals P_vref/P_net",
        ));
    }
    let h_total = vsg_inertia + sg_inertia;
    let slope = sg_inertia * sg_inertia * (inputs.power_reference + inputs.net_power)
        / (inputs.sync_power_max() * h_total * h_total);
    Ok(slope * offset.signum())
}

/// Capacity-proportional description of the VSG relative to the SG.
///
/// `X_v S_v = a X_g S_g`, `X_i S_v = b X_g S_g`, `H_v / S_v = c H_g / S_g`,
/// `η = S_v / S_g`, and both machines run at power factor `cos φ`, so
/// `P_vref = cos φ · S_v` and `P_m = cos φ · S_g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenetrationModel {
    pub line_drop_ratio: f64,
    pub virtual_drop_ratio: f64,
    pub inertia_level_ratio: f64,
    pub capacity_ratio: f64,
    pub power_factor: f64,
    /// VSG internal voltage `E_v` (pu).
    pub vsg_voltage: f64,
}

impl PenetrationModel {
    pub fn new(a: f64, b: f64, c: f64, eta: f64, power_factor: f64, vsg_voltage: f64) -> Result<Self> {
        let pm = Self {
            line_drop_ratio: a,
            virtual_drop_ratio: b,
            inertia_level_ratio: c,
            capacity_ratio: eta,
            power_factor,
            vsg_voltage,
        };
        pm.validate()?;
        Ok(pm)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("a", self.line_drop_ratio)?;
        ensure_non_negative("b", self.virtual_drop_ratio)?;
        ensure_positive("c", self.inertia_level_ratio)?;
        ensure_positive("eta", self.capacity_ratio)?;
        ensure_positive("vsg_voltage", self.vsg_voltage)?;
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return Err(Error::param("power_factor", self.power_factor, "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn with_capacity_ratio(self, eta: f64) -> Self {
        Self {
            capacity_ratio: eta,
            ..self
        }
    }

    /// Recovers `(a, b, c, η)` from explicit machine parameters.
    pub fn from_params(vsg: &VsgParams, sg: &SgParams, power_factor: f64) -> Result<Self> {
        let scale = sg.line_reactance * sg.rated_power;
        Self::new(
            vsg.line_reactance * vsg.rated_power / scale,
            vsg.virtual_reactance * vsg.rated_power / scale,
            (vsg.inertia / vsg.rated_power) / (sg.inertia / sg.rated_power),
            vsg.rated_power / sg.rated_power,
            power_factor,
            vsg.internal_voltage,
        )
    }

    /// Inertia–voltage-strength threshold `1/(a+b)`.
    pub fn strength_threshold(&self) -> f64 {
        1.0 / (self.line_drop_ratio + self.virtual_drop_ratio)
    }

    /// Builds the machine pair. The SG's mechanical power is set to
    /// `cos φ · S_g` and the VSG damping keeps the SG's damping/inertia ratio.
    pub fn machines(&self, sg: &SgParams) -> (VsgParams, SgParams) {
        let s_v = self.capacity_ratio * sg.rated_power;
        let scale = sg.line_reactance * sg.rated_power / s_v;
        let inertia = self.inertia_level_ratio * sg.inertia * s_v / sg.rated_power;
        let vsg = VsgParams {
            inertia,
            damping: sg.damping / sg.inertia * inertia,
            power_reference: self.power_factor * s_v,
            internal_voltage: self.vsg_voltage,
            line_reactance: self.line_drop_ratio * scale,
            virtual_reactance: self.virtual_drop_ratio * scale,
            rated_power: s_v,
        };
        let sg = SgParams {
            mechanical_power: self.power_factor * sg.rated_power,
            ..*sg
        };
        (vsg, sg)
    }
}

/// ∂λ/∂η for the capacity-proportional VSG.
///
/// `sg.voltage` is the (fault-on) SG voltage and `load_power` the matching
/// load consumption. Positive iff `c > 1/(a+b)`.
pub fn dlambda_deta(pm: &PenetrationModel, sg: &SgParams, load_power: f64) -> Result<f64> {
    pm.validate()?;
    sg.validate()?;
    let c = pm.inertia_level_ratio;
    let ab = pm.line_drop_ratio + pm.virtual_drop_ratio;
    let denom_root = c * pm.capacity_ratio + 1.0;
    let voltage_product = sg.voltage * pm.vsg_voltage;
    if voltage_product == 0.0 {
        return Err(Error::DegenerateModel("E_v·E_g is zero"));
    }
    let shared = ((1.0 - c) * pm.power_factor * sg.rated_power + c * load_power).abs();
    Ok(-sg.line_reactance * shared * (1.0 - c * ab) / (voltage_product * denom_root * denom_root))
}

/// λ of the fault-on model built from `pm` at SG voltage `fault_voltage`.
pub fn lambda_of_eta(
    pm: &PenetrationModel,
    sg: &SgParams,
    load: &LoadParams,
    fault_voltage: f64,
) -> Result<f64> {
    pm.validate()?;
    let (vsg, sg) = pm.machines(&sg.with_voltage(fault_voltage));
    // λ does not depend on Ω_ref.
    let model = reduce_with_omega(&vsg, &sg, load, 1.0)?;
    stability_index(&model)
}
