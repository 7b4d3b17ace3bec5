use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use syncstab_core::controller::{design, DesignInput};
use syncstab_core::eac::classify_first_swing;
use syncstab_core::index::{
    equilibria, lambda_from_scr, scr, stability_index, MatchingInputs, PenetrationModel,
};
use syncstab_core::region::{classify_grid, trace_boundary, ConvergenceBand, GridSpec, TraceSettings};
use syncstab_core::sim::{simulate_full, simulate_reduced, Stage, Trajectory};
use syncstab_core::{reduce, RelativeSwingModel};

use crate::document::{RegionSettings, ScenarioDocument};
use crate::error::CliError;
use crate::output::{boundary_csv, grid_csv, sweep_csv, trajectory_csv, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Hv,
    Eta,
    FaultVoltage,
    Xi,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Reduce,
    Index { reduced: Option<PathBuf> },
    Eac,
    Simulate { full: bool },
    Region,
    Design { verify: bool },
    Sweep { axis: Axis, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub hv: Option<f64>,
    pub xi: Option<f64>,
    pub fault_voltage: Option<f64>,
    pub dt: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, mut doc: ScenarioDocument) -> Result<ScenarioDocument, CliError> {
        if let Some(h) = self.hv {
            if !(h.is_finite() && h > 0.0) {
                return Err(CliError::Invariant(format!("--hv {h} must be > 0")));
            }
            doc = doc.with_vsg_inertia(h);
        }
        if let Some(x) = self.xi {
            doc = doc.with_fault_virtual_reactance(x);
        }
        if let Some(v) = self.fault_voltage {
            doc = doc.with_fault_voltage(v);
        }
        if let Some(dt) = self.dt {
            doc.dt = dt;
        }
        doc.validate()?;
        Ok(doc)
    }
}

/// Result of one command: the JSON summary, named output files and an
/// optional failure that still lets the outputs be written.
#[derive(Debug)]
pub struct Report {
    pub summary: Value,
    pub files: Vec<(String, String)>,
    pub failure: Option<CliError>,
}

impl Report {
    fn ok(summary: Value) -> Self {
        Self {
            summary,
            files: Vec::new(),
            failure: None,
        }
    }
}

/// Per-stage relative models, as printed by `reduce` and accepted back by `index --reduced`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedStages {
    pub stages: BTreeMap<String, RelativeSwingModel>,
}

fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::PreFault => "prefault",
        Stage::FaultOn => "faulted",
        Stage::PostFault => "postfault",
    }
}

fn stages(doc: &ScenarioDocument) -> Vec<Stage> {
    let mut out = vec![Stage::PreFault, Stage::FaultOn];
    if doc.scenario.t_clear.is_some() {
        out.push(Stage::PostFault);
    }
    out
}

fn stage_model(doc: &ScenarioDocument, stage: Stage) -> Result<RelativeSwingModel, CliError> {
    let (vsg, sg) = doc.scenario.stage_params(stage).apply(&doc.vsg, &doc.sg);
    Ok(reduce(&vsg, &sg, &doc.load, &doc.base)?)
}

fn prefault_angle(doc: &ScenarioDocument) -> Result<f64, CliError> {
    let model = stage_model(doc, Stage::PreFault)?;
    Ok(equilibria(&model)?
        .ok_or_else(|| CliError::Unstable("no pre-fault equilibrium".into()))?
        .sep)
}

fn simulate(doc: &ScenarioDocument, full: bool) -> Result<Trajectory, CliError> {
    let run = if full { simulate_full } else { simulate_reduced };
    Ok(run(&doc.vsg, &doc.sg, &doc.load, &doc.base, &doc.scenario, doc.dt)?)
}

fn trajectory_summary(tr: &Trajectory) -> Value {
    json!({
        "los": tr.los_time.is_some(),
        "los_time_s": tr.los_time,
        "ssi": tr.ssi,
        "delta_max_rad": tr.delta_max(),
        "max_current_pu": tr.max_current(),
        "final_state": tr.final_state(),
        "samples": tr.len(),
    })
}

pub fn run(command: &Command, doc: &ScenarioDocument) -> Result<Report, CliError> {
    match command {
        Command::Reduce => reduce_cmd(doc),
        Command::Index { reduced } => index_cmd(doc, reduced.as_ref()),
        Command::Eac => eac_cmd(doc),
        Command::Simulate { full } => simulate_cmd(doc, *full),
        Command::Region => region_cmd(doc),
        Command::Design { verify } => design_cmd(doc, *verify),
        Command::Sweep { axis, values } => sweep_cmd(doc, *axis, values),
    }
}

fn reduce_cmd(doc: &ScenarioDocument) -> Result<Report, CliError> {
    let mut out = ReducedStages {
        stages: BTreeMap::new(),
    };
    for stage in stages(doc) {
        out.stages.insert(stage_name(stage).into(), stage_model(doc, stage)?);
    }
    Ok(Report::ok(serde_json::to_value(out)?))
}

fn index_cmd(doc: &ScenarioDocument, reduced: Option<&PathBuf>) -> Result<Report, CliError> {
    let overrides = match reduced {
        Some(path) => {
            let parsed: ReducedStages = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            for model in parsed.stages.values() {
                model.validate()?;
            }
            parsed.stages
        }
        None => BTreeMap::new(),
    };
    let mut rows = serde_json::Map::new();
    for stage in stages(doc) {
        let name = stage_name(stage);
        let model = match overrides.get(name) {
            Some(m) => *m,
            None => stage_model(doc, stage)?,
        };
        let (vsg, sg) = doc.scenario.stage_params(stage).apply(&doc.vsg, &doc.sg);
        let strength = scr(&vsg, &sg)?;
        let lambda = stability_index(&model)?;
        rows.insert(
            name.into(),
            json!({
                "lambda": lambda,
                "sep_exists": lambda > 0.0,
                "equilibria": equilibria(&model)?,
                "scr": strength,
                "lambda_scr_form": lambda_from_scr(strength, vsg.virtual_reactance, model.sync_power_reference, vsg.internal_voltage, sg.voltage)?,
                "lambda_inertia_form": MatchingInputs::from_params(&vsg, &sg, &doc.load).lambda(vsg.inertia, sg.inertia),
                "matched_inertia_ratio": MatchingInputs::from_params(&vsg, &sg, &doc.load).matched_ratio(),
            }),
        );
    }
    Ok(Report::ok(Value::Object(rows)))
}

fn eac_cmd(doc: &ScenarioDocument) -> Result<Report, CliError> {
    let delta_0 = prefault_angle(doc)?;
    let model = stage_model(doc, Stage::FaultOn)?;
    let result = classify_first_swing(&model, delta_0)?;
    Ok(Report::ok(json!({
        "delta_0_rad": delta_0,
        "lambda": stability_index(&model)?,
        "result": result,
        "classification": result.classification.as_str(),
    })))
}

fn simulate_cmd(doc: &ScenarioDocument, full: bool) -> Result<Report, CliError> {
    let tr = simulate(doc, full)?;
    let mut report = Report::ok(json!({
        "model": if full { "full" } else { "reduced" },
        "trajectory": trajectory_summary(&tr),
    }));
    report.files.push(("trajectory.csv".into(), trajectory_csv(&tr)?));
    Ok(report)
}

fn default_region() -> RegionSettings {
    RegionSettings {
        grid: GridSpec {
            delta_range: (-3.5, 3.5),
            omega_range: (-0.03, 0.03),
            n_delta: 41,
            n_omega: 41,
            t_max: 100.0,
            dt: 1e-3,
            band: ConvergenceBand::default(),
        },
        trace_epsilon: 1e-4,
        trace_t_max: 100.0,
    }
}

fn region_cmd(doc: &ScenarioDocument) -> Result<Report, CliError> {
    let settings = doc.region.unwrap_or_else(default_region);
    let model = stage_model(doc, Stage::FaultOn)?;
    let boundary = trace_boundary(
        &model,
        &TraceSettings {
            epsilon: settings.trace_epsilon,
            t_max: settings.trace_t_max,
            ..TraceSettings::default()
        },
    )?;
    let grid = classify_grid(&model, &settings.grid)?;
    let mut report = Report::ok(json!({
        "equilibria": boundary.equilibria,
        "lambda": stability_index(&model)?,
        "branch_points": boundary.branches.iter().map(|b| b.points.len()).collect::<Vec<_>>(),
        "stable_cells": grid.stable_count(),
        "cells": grid.delta_axis.len() * grid.omega_axis.len(),
        "area_estimate": grid.area_estimate,
    }));
    report.files.push(("boundary.csv".into(), boundary_csv(&boundary)?));
    report.files.push(("grid.csv".into(), grid_csv(&grid)?));
    Ok(report)
}

fn design_cmd(doc: &ScenarioDocument, verify: bool) -> Result<Report, CliError> {
    let current_limit = doc
        .current_limit
        .ok_or_else(|| CliError::Parse("`design.current_limit_pu` is required for the design command".into()))?;
    let input = DesignInput {
        sg: doc.sg,
        vsg: doc.vsg,
        load: doc.load,
        fault_voltage: doc.scenario.faulted.grid_voltage,
        current_limit,
    };
    let output = design(&input)?;
    let mut designed = doc.clone().with_fault_virtual_reactance(output.virtual_reactance);
    designed.vsg = output.apply(&designed.vsg);

    let before = simulate(doc, false)?;
    let after = simulate(&designed, false)?;
    let mut report = Report::ok(json!({
        "design": output,
        "binding_constraint": format!("{:?}", output.binding_constraint),
        "before": trajectory_summary(&before),
        "after": trajectory_summary(&after),
    }));
    report.files.push(("before.csv".into(), trajectory_csv(&before)?));
    report.files.push(("after.csv".into(), trajectory_csv(&after)?));
    if verify && after.los_time.is_some() {
        report.failure = Some(CliError::Unstable("designed system loses synchronism".into()));
    }
    Ok(report)
}

fn sweep_variant(doc: &ScenarioDocument, axis: Axis, value: f64) -> Result<ScenarioDocument, CliError> {
    let variant = match axis {
        Axis::Hv => Overrides {
            hv: Some(value),
            ..Overrides::default()
        }
        .apply(doc.clone())?,
        Axis::Xi => doc.clone().with_fault_virtual_reactance(value),
        Axis::FaultVoltage => doc.clone().with_fault_voltage(value),
        Axis::Eta => {
            let pf = doc
                .power_factor
                .ok_or_else(|| CliError::Parse("`penetration.power_factor` is required for --axis eta".into()))?;
            let pm = PenetrationModel::from_params(&doc.vsg, &doc.sg, pf)?.with_capacity_ratio(value);
            pm.validate()?;
            let (vsg, sg) = pm.machines(&doc.sg);
            let mut d = doc.clone();
            d.vsg = vsg;
            d.sg = sg;
            d.scenario.faulted.virtual_reactance = vsg.virtual_reactance;
            for stage in [&mut d.scenario.prefault, &mut d.scenario.faulted] {
                stage.power_reference = vsg.power_reference;
            }
            if let Some(post) = d.scenario.postfault.as_mut() {
                post.power_reference = vsg.power_reference;
            }
            d
        }
    };
    variant.validate()?;
    Ok(variant)
}

fn sweep_row(doc: &ScenarioDocument, axis: Axis, value: f64) -> Result<SweepRow, CliError> {
    let variant = sweep_variant(doc, axis, value)?;
    let model = stage_model(&variant, Stage::FaultOn)?;
    let eac = classify_first_swing(&model, prefault_angle(&variant)?)?;
    let tr = simulate(&variant, false)?;
    Ok(SweepRow {
        value,
        lambda: stability_index(&model)?,
        eac: eac.classification.as_str(),
        classification: if tr.los_time.is_some() { "Unstable" } else { "Stable" },
        los_time: tr.los_time,
        ssi: tr.ssi,
    })
}

fn sweep_cmd(doc: &ScenarioDocument, axis: Axis, values: &[f64]) -> Result<Report, CliError> {
    if values.is_empty() {
        return Err(CliError::Parse("--values needs at least one value".into()));
    }
    let rows = values
        .par_iter()
        .map(|&v| sweep_row(doc, axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = Report::ok(json!({
        "axis": format!("{axis:?}"),
        "rows": rows,
    }));
    report.files.push(("sweep.csv".into(), sweep_csv(&rows)?));
    Ok(report)
}
