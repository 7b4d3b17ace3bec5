//! Scenario documents: TOML with unit-suffixed keys.

use serde::Deserialize;
use syncstab_core::model::reactance_from_inductance;
use syncstab_core::region::{ConvergenceBand, GridSpec};
use syncstab_core::sim::{FaultScenario, StageParams};
use syncstab_core::{BaseQuantities, LoadParams, SgParams, VsgParams};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDocument {
    pub base: RawBase,
    pub vsg: RawVsg,
    pub sg: RawSg,
    pub load: RawLoad,
    pub scenario: RawScenario,
    pub sim: RawSim,
    pub region: Option<RawRegion>,
    pub design: Option<RawDesign>,
    pub penetration: Option<RawPenetration>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBase {
    pub rated_voltage_v: f64,
    pub rated_power_w: f64,
    pub rated_frequency_hz: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVsg {
    pub inertia_s: f64,
    pub damping_pu: f64,
    pub power_reference_pu: f64,
    pub internal_voltage_pu: f64,
    pub line_inductance_h: Option<f64>,
    pub line_reactance_pu: Option<f64>,
    pub rated_power_pu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSg {
    pub inertia_s: f64,
    pub damping_pu: f64,
    pub mechanical_power_pu: f64,
    pub voltage_pu: f64,
    pub line_inductance_h: Option<f64>,
    pub line_reactance_pu: Option<f64>,
    pub rated_power_pu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLoad {
    pub resistance_pu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStage {
    pub grid_voltage_pu: f64,
    pub virtual_inductance_h: Option<f64>,
    pub virtual_reactance_pu: Option<f64>,
    pub power_reference_pu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub t_fault_s: f64,
    pub t_clear_s: Option<f64>,
    pub prefault: RawStage,
    pub faulted: RawStage,
    pub postfault: Option<RawStage>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSim {
    pub dt_s: f64,
    pub t_end_s: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRegion {
    pub delta_min_rad: f64,
    pub delta_max_rad: f64,
    pub omega_min_pu: f64,
    pub omega_max_pu: f64,
    pub n_delta: usize,
    pub n_omega: usize,
    pub t_max_s: f64,
    pub dt_s: f64,
    pub band_delta_rad: Option<f64>,
    pub band_omega_pu: Option<f64>,
    pub trace_epsilon_rad: Option<f64>,
    pub trace_t_max_s: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDesign {
    pub current_limit_pu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPenetration {
    pub power_factor: f64,
}

/// Validated document with every quantity in system per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDocument {
    pub base: BaseQuantities,
    /// VSG with the fault-on virtual reactance.
    pub vsg: VsgParams,
    /// SG at its pre-fault voltage.
    pub sg: SgParams,
    pub load: LoadParams,
    pub scenario: FaultScenario,
    pub dt: f64,
    pub region: Option<RegionSettings>,
    pub current_limit: Option<f64>,
    pub power_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSettings {
    pub grid: GridSpec,
    pub trace_epsilon: f64,
    pub trace_t_max: f64,
}

fn exclusive(
    section: &str,
    henries_key: &str,
    henries: Option<f64>,
    pu_key: &str,
    pu: Option<f64>,
    base: &BaseQuantities,
) -> Result<f64, CliError> {
    match (henries, pu) {
        (Some(_), Some(_)) => Err(CliError::Parse(format!(
            "{section}: `{henries_key}` and `{pu_key}` are mutually exclusive"
        ))),
        (None, None) => Err(CliError::Parse(format!(
            "{section}: one of `{henries_key}` or `{pu_key}` is required"
        ))),
        (Some(l), None) => Ok(reactance_from_inductance(l, base)?),
        (None, Some(x)) => Ok(x),
    }
}

fn stage(section: &str, raw: &RawStage, base: &BaseQuantities) -> Result<StageParams, CliError> {
    Ok(StageParams {
        grid_voltage: raw.grid_voltage_pu,
        virtual_reactance: exclusive(
            section,
            "virtual_inductance_h",
            raw.virtual_inductance_h,
            "virtual_reactance_pu",
            raw.virtual_reactance_pu,
            base,
        )?,
        power_reference: raw.power_reference_pu,
    })
}

/// Parses and validates a scenario document.
///
/// Schema violations map to [`CliError::Parse`], out-of-domain values to
/// [`CliError::Invariant`].
pub fn parse_scenario(text: &str) -> Result<ScenarioDocument, CliError> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let base = BaseQuantities::new(
        raw.base.rated_voltage_v,
        raw.base.rated_power_w,
        raw.base.rated_frequency_hz,
    )?;

    let prefault = stage("scenario.prefault", &raw.scenario.prefault, &base)?;
    let faulted = stage("scenario.faulted", &raw.scenario.faulted, &base)?;
    let postfault = raw
        .scenario
        .postfault
        .as_ref()
        .map(|s| stage("scenario.postfault", s, &base))
        .transpose()?;

    let vsg = VsgParams {
        inertia: raw.vsg.inertia_s,
        damping: raw.vsg.damping_pu,
        power_reference: raw.vsg.power_reference_pu,
        internal_voltage: raw.vsg.internal_voltage_pu,
        line_reactance: exclusive(
            "vsg",
            "line_inductance_h",
            raw.vsg.line_inductance_h,
            "line_reactance_pu",
            raw.vsg.line_reactance_pu,
            &base,
        )?,
        virtual_reactance: faulted.virtual_reactance,
        rated_power: raw.vsg.rated_power_pu,
    };
    let sg = SgParams {
        inertia: raw.sg.inertia_s,
        damping: raw.sg.damping_pu,
        mechanical_power: raw.sg.mechanical_power_pu,
        voltage: raw.sg.voltage_pu,
        line_reactance: exclusive(
            "sg",
            "line_inductance_h",
            raw.sg.line_inductance_h,
            "line_reactance_pu",
            raw.sg.line_reactance_pu,
            &base,
        )?,
        rated_power: raw.sg.rated_power_pu,
    };
    let load = LoadParams {
        resistance: raw.load.resistance_pu,
    };
    let scenario = FaultScenario {
        t_end: raw.sim.t_end_s,
        t_fault: raw.scenario.t_fault_s,
        t_clear: raw.scenario.t_clear_s,
        prefault,
        faulted,
        postfault,
    };

    let region = raw.region.map(|r| {
        let band = ConvergenceBand::default();
        RegionSettings {
            grid: GridSpec {
                delta_range: (r.delta_min_rad, r.delta_max_rad),
                omega_range: (r.omega_min_pu, r.omega_max_pu),
                n_delta: r.n_delta,
                n_omega: r.n_omega,
                t_max: r.t_max_s,
                dt: r.dt_s,
                band: ConvergenceBand {
                    delta: r.band_delta_rad.unwrap_or(band.delta),
                    omega: r.band_omega_pu.unwrap_or(band.omega),
                },
            },
            trace_epsilon: r.trace_epsilon_rad.unwrap_or(1e-4),
            trace_t_max: r.trace_t_max_s.unwrap_or(100.0),
        }
    });

    let doc = ScenarioDocument {
        base,
        vsg,
        sg,
        load,
        scenario,
        dt: raw.sim.dt_s,
        region,
        current_limit: raw.design.map(|d| d.current_limit_pu),
        power_factor: raw.penetration.map(|p| p.power_factor),
    };
    doc.validate()?;
    Ok(doc)
}

impl ScenarioDocument {
    pub fn validate(&self) -> Result<(), CliError> {
        self.base.validate()?;
        self.vsg.validate()?;
        self.sg.validate()?;
        self.load.validate()?;
        self.scenario.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt < self.scenario.t_end) {
            return Err(CliError::Invariant(format!("sim.dt_s = {} must lie in (0, t_end)", self.dt)));
        }
        if let Some(r) = &self.region {
            r.grid.validate()?;
            if !(r.trace_epsilon > 0.0 && r.trace_t_max > 0.0) {
                return Err(CliError::Invariant("region trace settings must be positive".into()));
            }
        }
        if let Some(i) = self.current_limit {
            if !(i.is_finite() && i > 0.0) {
                return Err(CliError::Invariant(format!("design.current_limit_pu = {i} must be > 0")));
            }
        }
        if let Some(pf) = self.power_factor {
            if !(pf > 0.0 && pf <= 1.0) {
                return Err(CliError::Invariant(format!("penetration.power_factor = {pf} must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    /// Sets the VSG inertia, scaling the damping to keep `D_v/H_v`.
    pub fn with_vsg_inertia(mut self, inertia: f64) -> Self {
        self.vsg.damping *= inertia / self.vsg.inertia;
        self.vsg.inertia = inertia;
        self
    }

    /// Sets the fault-on virtual reactance.
    pub fn with_fault_virtual_reactance(mut self, x_i: f64) -> Self {
        self.scenario.faulted.virtual_reactance = x_i;
        self.vsg.virtual_reactance = x_i;
        self
    }

    pub fn with_fault_voltage(mut self, voltage: f64) -> Self {
        self.scenario.faulted.grid_voltage = voltage;
        self
    }
}
