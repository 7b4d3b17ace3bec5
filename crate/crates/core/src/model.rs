//! Machine parameters, per-unit conversion and the reduction of the
//! VSG/SG pair to a single relative swing equation.
//!
//! All quantities are stored on the system base. Inertias are in seconds,
//! angles in radians and frequency deviations in per-unit of the nominal
//! frequency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

/// Relative tolerance used by [`reduce`] when checking the damping/inertia ratios.
pub const DAMPING_RATIO_TOLERANCE: f64 = 1e-9;

/// Rated quantities that define the per-unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseQuantities {
    /// Rated line voltage (V).
    pub rated_voltage: f64,
    /// Rated power (W).
    pub rated_power: f64,
    /// Rated frequency (Hz).
    pub rated_frequency: f64,
}

impl BaseQuantities {
    pub fn new(rated_voltage: f64, rated_power: f64, rated_frequency: f64) -> Result<Self> {
        let base = Self {
            rated_voltage,
            rated_power,
            rated_frequency,
        };
        base.validate()?;
        Ok(base)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("rated_voltage", self.rated_voltage)?;
        ensure_positive("rated_power", self.rated_power)?;
        ensure_positive("rated_frequency", self.rated_frequency)
    }

    /// Reference electrical angular velocity, `2π f_n` (rad/s).
    pub fn reference_angular_velocity(&self) -> f64 {
        2.0 * PI * self.rated_frequency
    }

    /// Base impedance `U_n² / S_n` (Ω).
    pub fn impedance(&self) -> f64 {
        self.rated_voltage * self.rated_voltage / self.rated_power
    }
}

/// Converts an inductance in henries to a per-unit reactance on `base`.
pub fn reactance_from_inductance(inductance: f64, base: &BaseQuantities) -> Result<f64> {
    ensure_non_negative("inductance", inductance)?;
    base.validate()?;
    Ok(base.reference_angular_velocity() * inductance / base.impedance())
}

/// Outer-loop parameters of the virtual synchronous generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsgParams {
    /// Virtual inertia `H_v` (s).
    pub inertia: f64,
    /// Virtual damping `D_v` (pu).
    pub damping: f64,
    /// Active power reference `P_vref` (pu).
    pub power_reference: f64,
    /// Virtual internal voltage `E_v` (pu).
    pub internal_voltage: f64,
    /// Line reactance `X_v` (pu).
    pub line_reactance: f64,
    /// Virtual reactance `X_i` (pu).
    pub virtual_reactance: f64,
    /// Rated power `S_v` (pu of system base).
    pub rated_power: f64,
}

impl VsgParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("vsg.inertia", self.inertia)?;
        ensure_non_negative("vsg.damping", self.damping)?;
        ensure_finite("vsg.power_reference", self.power_reference)?;
        ensure_positive("vsg.internal_voltage", self.internal_voltage)?;
        ensure_positive("vsg.line_reactance", self.line_reactance)?;
        ensure_non_negative("vsg.virtual_reactance", self.virtual_reactance)?;
        ensure_positive("vsg.rated_power", self.rated_power)
    }
}

/// Second-order model of the synchronous generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgParams {
    /// Rotor inertia `H_g` (s).
    pub inertia: f64,
    /// Damping `D_g` (pu).
    pub damping: f64,
    /// Mechanical power `P_m` (pu).
    pub mechanical_power: f64,
    /// Terminal voltage `E_g` (pu).
    pub voltage: f64,
    /// Line reactance `X_g` (pu).
    pub line_reactance: f64,
    /// Rated power `S_g` (pu of system base).
    pub rated_power: f64,
}

impl SgParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("sg.inertia", self.inertia)?;
        ensure_non_negative("sg.damping", self.damping)?;
        ensure_finite("sg.mechanical_power", self.mechanical_power)?;
        ensure_non_negative("sg.voltage", self.voltage)?;
        ensure_positive("sg.line_reactance", self.line_reactance)?;
        ensure_positive("sg.rated_power", self.rated_power)
    }

    pub fn with_voltage(self, voltage: f64) -> Self {
        Self { voltage, ..self }
    }
}

/// Purely resistive load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadParams {
    /// Load resistance `R_L` (pu).
    pub resistance: f64,
}

impl LoadParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("load.resistance", self.resistance)
    }
}

/// Power drawn by the resistive load at SG voltage `voltage`.
pub fn load_power(voltage: f64, load: &LoadParams) -> f64 {
    voltage * voltage / load.resistance
}

/// Net input power of the SG after serving the load.
pub fn net_power(mechanical_power: f64, load_power: f64) -> f64 {
    mechanical_power - load_power
}

/// Total reactance between the VSG internal voltage and the SG voltage.
pub fn total_reactance(vsg: &VsgParams, sg: &SgParams) -> f64 {
    vsg.virtual_reactance + vsg.line_reactance + sg.line_reactance
}

/// True when `D_v/H_v` and `D_g/H_g` agree to within `tolerance` (relative to
/// `D_g/H_g`). The relative swing equation is exact only in that case.
pub fn check_damping_ratio(vsg: &VsgParams, sg: &SgParams, tolerance: f64) -> bool {
    let vsg_ratio = vsg.damping / vsg.inertia;
    let sg_ratio = sg.damping / sg.inertia;
    (vsg_ratio - sg_ratio).abs() <= tolerance * sg_ratio.abs()
}

/// Coefficients of the relative swing equation
///
/// ```text
/// dδ/dt   = Ω_ref Δω
/// 2H dΔω/dt = P_syn,ref − P_syn,max sin δ − D Δω
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeSwingModel {
    /// Synchronization inertia `H_vg` (s).
    pub sync_inertia: f64,
    /// Synchronization damping `D_vg` (pu).
    pub sync_damping: f64,
    /// Reference synchronization power `P_syn,ref` (pu).
    pub sync_power_reference: f64,
    /// Maximum output synchronization power `P_syn,max` (pu).
    pub sync_power_max: f64,
    /// Ω_ref (rad/s).
    pub reference_angular_velocity: f64,
}

impl RelativeSwingModel {
    pub fn new(
        sync_inertia: f64,
        sync_damping: f64,
        sync_power_reference: f64,
        sync_power_max: f64,
        reference_angular_velocity: f64,
    ) -> Result<Self> {
        let model = Self {
            sync_inertia,
            sync_damping,
            sync_power_reference,
            sync_power_max,
            reference_angular_velocity,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("sync_inertia", self.sync_inertia)?;
        ensure_non_negative("sync_damping", self.sync_damping)?;
        ensure_finite("sync_power_reference", self.sync_power_reference)?;
        ensure_non_negative("sync_power_max", self.sync_power_max)?;
        ensure_positive("reference_angular_velocity", self.reference_angular_velocity)
    }

    /// Same model with the damping removed.
    pub fn undamped(self) -> Self {
        Self {
            sync_damping: 0.0,
            ..self
        }
    }

    /// Point reflection `δ → −δ`, used to map backward swings onto forward ones.
    pub fn mirrored(self) -> Self {
        Self {
            sync_power_reference: -self.sync_power_reference,
            ..self
        }
    }
}

/// Reduces the two-machine system to its relative swing equation.
///
/// The SG voltage in `sg` is the one in force for the stage being modelled;
/// the load power is recomputed from it. A mismatch between the two
/// damping/inertia ratios is reported through `log::warn!` but the
/// coefficients are still returned.
pub fn reduce(
    vsg: &VsgParams,
    sg: &SgParams,
    load: &LoadParams,
    base: &BaseQuantities,
) -> Result<RelativeSwingModel> {
    base.validate()?;
    reduce_with_omega(vsg, sg, load, base.reference_angular_velocity())
}

pub(crate) fn reduce_with_omega(
    vsg: &VsgParams,
    sg: &SgParams,
    load: &LoadParams,
    reference_angular_velocity: f64,
) -> Result<RelativeSwingModel> {
    vsg.validate()?;
    sg.validate()?;
    load.validate()?;

    if !check_damping_ratio(vsg, sg, DAMPING_RATIO_TOLERANCE) {
        log::warn!(
            "damping/inertia ratios differ (VSG {:.6}, SG {:.6}); relative swing model is approximate",
            vsg.damping / vsg.inertia,
            sg.damping / sg.inertia
        );
    }

    let x_sum = total_reactance(vsg, sg);
    if x_sum <= 0.0 {
        return Err(Error::SingularNetwork("total reactance is zero"));
    }

    let (h_v, h_g) = (vsg.inertia, sg.inertia);
    let h_total = h_v + h_g;
    let p_net = net_power(sg.mechanical_power, load_power(sg.voltage, load));

    RelativeSwingModel::new(
        h_v * h_g / h_total,
        h_g * vsg.damping / h_total,
        (h_g * vsg.power_reference - h_v * p_net) / h_total,
        sg.voltage * vsg.internal_voltage / x_sum,
        reference_angular_velocity,
    )
}

/// Parameters of the two-machine test system used throughout the examples:
/// 95.22 V, 1 kW, 50 Hz base, `H_g = 40 s`, `D_g = 20 pu`, 1 kW mechanical
/// power and load, line inductances of 2.9 mH (SG) and 9.2 mH (VSG), a
/// 1.45 mH virtual inductance and a 0.3 pu VSG reference.
pub mod table1 {
    use super::*;

    pub const FAULT_VOLTAGE: f64 = 0.2;
    pub const SG_INDUCTANCE: f64 = 2.9e-3;
    pub const VSG_INDUCTANCE: f64 = 9.2e-3;
    pub const VIRTUAL_INDUCTANCE: f64 = 1.45e-3;

    pub fn base() -> BaseQuantities {
        BaseQuantities {
            rated_voltage: 95.22,
            rated_power: 1000.0,
            rated_frequency: 50.0,
        }
    }

    fn x(inductance: f64) -> f64 {
        reactance_from_inductance(inductance, &base()).expect("valid constant")
    }

    /// VSG with inertia `h_v` and damping `0.5·h_v` (same ratio as the SG).
    pub fn vsg(h_v: f64) -> VsgParams {
        VsgParams {
            inertia: h_v,
            damping: 0.5 * h_v,
            power_reference: 0.3,
            internal_voltage: 1.0,
            line_reactance: x(VSG_INDUCTANCE),
            virtual_reactance: x(VIRTUAL_INDUCTANCE),
            rated_power: 1.0,
        }
    }

    /// SG at pre-fault voltage.
    pub fn sg() -> SgParams {
        SgParams {
            inertia: 40.0,
            damping: 20.0,
            mechanical_power: 1.0,
            voltage: 1.0,
            line_reactance: x(SG_INDUCTANCE),
            rated_power: 1.0,
        }
    }

    pub fn load() -> LoadParams {
        LoadParams { resistance: 1.0 }
    }

    /// Fault-on relative model for VSG inertia `h_v`.
    pub fn fault_model(h_v: f64) -> RelativeSwingModel {
        reduce(&vsg(h_v), &sg().with_voltage(FAULT_VOLTAGE), &load(), &base())
            .expect("valid parameters")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reactance_conversion() {
        let base = table1::base();
        // 2π·50·L / (95.22²/1000)
        assert_relative_eq!(
            reactance_from_inductance(2.9e-3, &base).unwrap(),
            0.100_482_750_9,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            reactance_from_inductance(9.2e-3, &base).unwrap(),
            0.318_772_865_0,
            max_relative = 1e-9
        );
        assert_eq!(reactance_from_inductance(0.0, &base).unwrap(), 0.0);
        assert!(matches!(
            reactance_from_inductance(-1e-3, &base),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn load_and_net_power() {
        let load = LoadParams { resistance: 1.0 };
        assert_eq!(load_power(1.0, &load), 1.0);
        assert_eq!(load_power(0.0, &load), 0.0);
        assert_relative_eq!(load_power(0.2, &load), 0.04, max_relative = 1e-15);
        assert_relative_eq!(net_power(1.0, 0.04), 0.96, max_relative = 1e-15);
        assert_eq!(net_power(1.0, 1.0), 0.0);
    }

    #[test]
    fn total_reactance_sums() {
        let mut vsg = table1::vsg(20.0);
        let sg = table1::sg();
        assert_relative_eq!(total_reactance(&vsg, &sg), 0.469_497, epsilon = 1e-6);
        vsg.virtual_reactance = 0.1333;
        assert_relative_eq!(total_reactance(&vsg, &sg), 0.552_556, epsilon = 1e-6);
        vsg.virtual_reactance = 0.0;
        assert_eq!(
            total_reactance(&vsg, &sg),
            vsg.line_reactance + sg.line_reactance
        );
    }

    #[test]
    fn damping_ratio_check() {
        let mut vsg = table1::vsg(20.0);
        let mut sg = table1::sg();
        vsg.damping = 10.0;
        sg.damping = 20.0;
        assert!(check_damping_ratio(&vsg, &sg, 0.0));
        vsg.damping = 5.0;
        assert!(!check_damping_ratio(&vsg, &sg, 0.0));
        vsg.inertia = 3.7;
        vsg.damping = 0.5 * 3.7;
        assert!(check_damping_ratio(&vsg, &sg, 1e-12));
    }

    #[test]
    fn reduction_coefficients() {
        let model = table1::fault_model(20.0);
        assert_relative_eq!(model.sync_inertia, 40.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(model.sync_damping, 40.0 * 10.0 / 60.0, max_relative = 1e-12);
        assert_relative_eq!(model.sync_power_reference, -0.12, max_relative = 1e-12);
        assert_relative_eq!(model.sync_power_max, 0.425_988, epsilon = 1e-6);
        assert_relative_eq!(model.reference_angular_velocity, 100.0 * PI);
    }

    #[test]
    fn reduction_rejects_bad_inputs() {
        let mut vsg = table1::vsg(20.0);
        vsg.inertia = -1.0;
        let err = reduce(&vsg, &table1::sg(), &table1::load(), &table1::base());
        assert!(matches!(err, Err(Error::InvalidParameter { name: "vsg.inertia", .. })));

        let load = LoadParams { resistance: 0.0 };
        assert!(reduce(&table1::vsg(20.0), &table1::sg(), &load, &table1::base()).is_err());
    }

    #[test]
    fn mismatched_damping_still_reduces() {
        let mut vsg = table1::vsg(20.0);
        vsg.damping = 40.0;
        let model = reduce(&vsg, &table1::sg(), &table1::load(), &table1::base()).unwrap();
        assert_relative_eq!(model.sync_damping, 40.0 * 40.0 / 60.0, max_relative = 1e-12);
    }
}
