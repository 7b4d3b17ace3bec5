//! Coordinated stabilization: inertia matching plus a virtual reactance
//! that respects both the VSG current limit and the inertia–strength match.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::index::{equilibria, stability_index};
use crate::model::{load_power, net_power, reduce_with_omega, LoadParams, SgParams, VsgParams};
use crate::sim::current_magnitude;

/// Iteration cap for the `X_i ↔ δ_u` fixed point.
pub const MAX_FIXED_POINT_ITERATIONS: usize = 100;

const FIXED_POINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignInput {
    /// SG at its pre-fault voltage.
    pub sg: SgParams,
    /// VSG before the design is applied.
    pub vsg: VsgParams,
    pub load: LoadParams,
    /// SG voltage during the fault `E_gf` (pu).
    pub fault_voltage: f64,
    /// VSG current limit `I_lim` (pu).
    pub current_limit: f64,
}

impl DesignInput {
    pub fn validate(&self) -> Result<()> {
        self.sg.validate()?;
        self.vsg.validate()?;
        self.load.validate()?;
        ensure_positive("current_limit", self.current_limit)?;
        ensure_non_negative("fault_voltage", self.fault_voltage)?;
        if self.fault_voltage > self.sg.voltage {
            return Err(Error::param(
                "fault_voltage",
                self.fault_voltage,
                "exceeds the pre-fault SG voltage",
            ));
        }
        Ok(())
    }

    pub fn faulted_sg(&self) -> SgParams {
        self.sg.with_voltage(self.fault_voltage)
    }

    /// `P_m − E_gf²/R_L`.
    pub fn faulted_net_power(&self) -> f64 {
        net_power(self.sg.mechanical_power, load_power(self.fault_voltage, &self.load))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingConstraint {
    InertiaStrengthMatch,
    CurrentLimit,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignOutput {
    pub vsg_inertia: f64,
    pub vsg_damping: f64,
    pub virtual_reactance: f64,
    pub binding_constraint: BindingConstraint,
    pub predicted_max_current: f64,
    pub predicted_lambda: f64,
}

impl DesignOutput {
    /// `vsg` with the designed inertia, damping and virtual reactance.
    pub fn apply(&self, vsg: &VsgParams) -> VsgParams {
        VsgParams {
            inertia: self.vsg_inertia,
            damping: self.vsg_damping,
            virtual_reactance: self.virtual_reactance,
            ..*vsg
        }
    }
}

/// Inertia that cancels the synchronizing power reference: `H_v = (P_vref/P_net)·H_g`.
pub fn match_inertia(power_reference: f64, net_power: f64, sg_inertia: f64) -> Result<f64> {
    if !(net_power > 0.0) {
        return Err(Error::DesignInfeasible(format!(
            "net SG power {net_power} must be positive for inertia matching"
        )));
    }
    if !(power_reference > 0.0) {
        return Err(Error::DesignInfeasible(format!(
            "VSG power reference {power_reference} must be positive for inertia matching"
        )));
    }
    ensure_positive("sg.inertia", sg_inertia)?;
    Ok(power_reference / net_power * sg_inertia)
}

/// Damping that keeps `D_v/H_v = D_g/H_g`.
pub fn matched_damping(vsg_inertia: f64, sg: &SgParams) -> f64 {
    sg.damping / sg.inertia * vsg_inertia
}

/// Current magnitude with the angle at the UEP.
pub fn max_fault_current(vsg_voltage: f64, sg_voltage: f64, uep: f64, total_reactance: f64) -> Result<f64> {
    if !(total_reactance > 0.0) {
        return Err(Error::SingularNetwork("total reactance is zero"));
    }
    Ok(current_magnitude(vsg_voltage, sg_voltage, total_reactance, uep))
}

/// Smallest `X_i ≥ 0` that keeps the UEP current within `current_limit`, for a fixed `uep`.
pub fn min_impedance_for_limit(
    vsg_voltage: f64,
    sg_voltage: f64,
    uep: f64,
    current_limit: f64,
    vsg_line_reactance: f64,
    sg_line_reactance: f64,
) -> Result<f64> {
    ensure_positive("current_limit", current_limit)?;
    let drop = current_magnitude(vsg_voltage, sg_voltage, 1.0, uep);
    Ok((drop / current_limit - vsg_line_reactance - sg_line_reactance).max(0.0))
}

/// Current-limit impedance with the UEP recomputed for each candidate `X_i`.
pub fn self_consistent_limit_impedance(
    vsg: &VsgParams,
    faulted_sg: &SgParams,
    load: &LoadParams,
    current_limit: f64,
) -> Result<f64> {
    let mut x_i = 0.0;
    for _ in 0..MAX_FIXED_POINT_ITERATIONS {
        let candidate = VsgParams {
            virtual_reactance: x_i,
            ..*vsg
        };
        let model = reduce_with_omega(&candidate, faulted_sg, load, 1.0)?;
        let uep = equilibria(&model)?
            .map(|eq| eq.uep_forward)
            .ok_or_else(|| {
                Error::DesignInfeasible(format!("no fault-on equilibrium at X_i = {x_i}"))
            })?;
        let next = min_impedance_for_limit(
            vsg.internal_voltage,
            faulted_sg.voltage,
            uep,
            current_limit,
            vsg.line_reactance,
            faulted_sg.line_reactance,
        )?;
        if (next - x_i).abs() <= FIXED_POINT_TOLERANCE * (1.0 + next) {
            return Ok(next);
        }
        x_i = next;
    }
    Err(Error::DesignInfeasible(format!(
        "current-limit impedance did not converge in {MAX_FIXED_POINT_ITERATIONS} iterations"
    )))
}

/// `(H_g/H_v)·X_g − X_v`; negative when the VSG line alone is already too strong.
pub fn matched_impedance(
    sg_inertia: f64,
    vsg_inertia: f64,
    sg_line_reactance: f64,
    vsg_line_reactance: f64,
) -> Result<f64> {
    ensure_positive("vsg.inertia", vsg_inertia)?;
    Ok(sg_inertia / vsg_inertia * sg_line_reactance - vsg_line_reactance)
}

/// Virtual reactance for inertia `vsg_inertia`: the largest of the matched
/// value, the current-limit value and zero.
pub fn set_virtual_impedance(input: &DesignInput, vsg_inertia: f64) -> Result<(f64, BindingConstraint)> {
    input.validate()?;
    let vsg = VsgParams {
        inertia: vsg_inertia,
        damping: matched_damping(vsg_inertia, &input.sg),
        ..input.vsg
    };
    let matched = matched_impedance(
        input.sg.inertia,
        vsg_inertia,
        input.sg.line_reactance,
        vsg.line_reactance,
    )?;
    let limit = self_consistent_limit_impedance(&vsg, &input.faulted_sg(), &input.load, input.current_limit)?;
    Ok(if matched <= 0.0 && limit <= 0.0 {
        (0.0, BindingConstraint::None)
    } else if matched >= limit {
        (matched, BindingConstraint::InertiaStrengthMatch)
    } else {
        (limit, BindingConstraint::CurrentLimit)
    })
}

/// Full design against the faulted operating point.
pub fn design(input: &DesignInput) -> Result<DesignOutput> {
    input.validate()?;
    let vsg_inertia = match_inertia(input.vsg.power_reference, input.faulted_net_power(), input.sg.inertia)?;
    let (virtual_reactance, binding_constraint) = set_virtual_impedance(input, vsg_inertia)?;
    let mut output = DesignOutput {
        vsg_inertia,
        vsg_damping: matched_damping(vsg_inertia, &input.sg),
        virtual_reactance,
        binding_constraint,
        predicted_max_current: 0.0,
        predicted_lambda: 0.0,
    };

    let vsg = output.apply(&input.vsg);
    let sg = input.faulted_sg();
    let model = reduce_with_omega(&vsg, &sg, &input.load, 1.0)?;
    output.predicted_lambda = stability_index(&model)?;
    let uep = equilibria(&model)?.map_or(PI, |eq| eq.uep_forward);
    output.predicted_max_current = max_fault_current(
        vsg.internal_voltage,
        sg.voltage,
        uep,
        crate::model::total_reactance(&vsg, &sg),
    )?;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::table1;
    use approx::assert_relative_eq;

    fn input(fault_voltage: f64) -> DesignInput {
        DesignInput {
            sg: table1::sg(),
            vsg: table1::vsg(70.0),
            load: table1::load(),
            fault_voltage,
            current_limit: 1.8,
        }
    }

    #[test]
    fn inertia_matching_values() {
        assert_relative_eq!(match_inertia(0.3, 0.96, 40.0).unwrap(), 12.5, max_relative = 1e-15);
        assert_eq!(match_inertia(0.5, 0.5, 40.0).unwrap(), 40.0);
        assert!(matches!(match_inertia(0.3, 0.0, 40.0), Err(Error::DesignInfeasible(_))));
        assert!(matches!(match_inertia(0.0, 0.5, 40.0), Err(Error::DesignInfeasible(_))));
        assert_eq!(matched_damping(12.5, &table1::sg()), 6.25);
    }

    #[test]
    fn fault_current_values() {
        assert_relative_eq!(max_fault_current(1.0, 0.2, PI, 0.5).unwrap(), 2.4, max_relative = 1e-15);
        assert_eq!(max_fault_current(1.0, 1.0, 0.0, 0.5).unwrap(), 0.0);
        assert!(max_fault_current(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn limit_impedance_values() {
        assert_eq!(min_impedance_for_limit(1.0, 0.9, 0.5, 1.8, 0.3, 0.1).unwrap(), 0.0);
        let x = min_impedance_for_limit(1.0, 0.2, PI, 1.8, 0.3, 0.1).unwrap();
        assert_relative_eq!(x, 1.2 / 1.8 - 0.4, max_relative = 1e-14);
        assert!(min_impedance_for_limit(1.0, 0.2, PI, 0.0, 0.3, 0.1).is_err());
    }

    #[test]
    fn matched_impedance_values() {
        assert_eq!(matched_impedance(40.0, 40.0, 0.2, 0.2).unwrap(), 0.0);
        let x = matched_impedance(40.0, 12.5, 0.1005, 0.3188).unwrap();
        assert_relative_eq!(x, 0.0028, epsilon = 1e-12);
        assert!(matched_impedance(40.0, 0.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn fixed_point_meets_limit_with_mismatched_inertia() {
        let inp = input(0.2);
        let vsg = VsgParams {
            inertia: 20.0,
            damping: 10.0,
            ..inp.vsg
        };
        let sg = inp.faulted_sg();
        let x_i = self_consistent_limit_impedance(&vsg, &sg, &inp.load, 1.8).unwrap();
        assert!(x_i > 0.0);
        let vsg = VsgParams {
            virtual_reactance: x_i,
            ..vsg
        };
        let model = reduce_with_omega(&vsg, &sg, &inp.load, 1.0).unwrap();
        let uep = equilibria(&model).unwrap().unwrap().uep_forward;
        let i = max_fault_current(1.0, 0.2, uep, crate::model::total_reactance(&vsg, &sg)).unwrap();
        assert!((i - 1.8).abs() < 1e-6);
    }

    #[test]
    fn table1_severe_fault_design() {
        let out = design(&input(0.2)).unwrap();
        assert_relative_eq!(out.vsg_inertia, 12.5, max_relative = 1e-14);
        assert_relative_eq!(out.vsg_damping, 6.25, max_relative = 1e-14);
        assert_eq!(out.predicted_lambda, 1.0);
        assert_eq!(out.binding_constraint, BindingConstraint::CurrentLimit);
        assert!(out.predicted_max_current <= 1.8 + 1e-9);
        assert!(out.virtual_reactance >= 0.0);
    }

    #[test]
    fn design_is_idempotent() {
        let first = design(&input(0.2)).unwrap();
        let mut again = input(0.2);
        again.vsg = first.apply(&again.vsg);
        let second = design(&again).unwrap();
        assert!((first.vsg_inertia - second.vsg_inertia).abs() < 1e-9);
        assert!((first.virtual_reactance - second.virtual_reactance).abs() < 1e-9);
    }

    #[test]
    fn clamp_when_nothing_is_needed() {
        let mut inp = input(0.2);
        inp.current_limit = 100.0;
        // VSG line already weaker than the matched value
        inp.vsg.line_reactance = 1.0;
        let (x, binding) = set_virtual_impedance(&inp, 12.5).unwrap();
        assert_eq!(x, 0.0);
        assert_eq!(binding, BindingConstraint::None);
    }

    #[test]
    fn matched_binding_with_loose_limit() {
        let mut inp = input(0.2);
        inp.current_limit = 100.0;
        let (x, binding) = set_virtual_impedance(&inp, 12.5).unwrap();
        assert_eq!(binding, BindingConstraint::InertiaStrengthMatch);
        assert!(x > 0.0);
    }

    #[test]
    fn invalid_inputs() {
        let mut inp = input(1.2);
        assert!(design(&inp).is_err());
        inp.fault_voltage = 0.2;
        inp.current_limit = 0.0;
        assert!(design(&inp).is_err());
    }
}
