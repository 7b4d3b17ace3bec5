//! CSV writers. Rows end in `\n` and floats use the shortest round-trip form.

use serde::Serialize;
use syncstab_core::region::{RegionBoundary, RegionGrid, RegionLabel};
use syncstab_core::Trajectory;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub lambda: f64,
    pub eac: &'static str,
    pub classification: &'static str,
    pub los_time: Option<f64>,
    pub ssi: f64,
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

pub fn trajectory_csv(tr: &Trajectory) -> Result<String, CliError> {
    let mut w = writer();
    w.write_record(["t_s", "delta_vg_rad", "domega_vg_pu", "p_syn_pu", "i_v_pu"])?;
    for k in 0..tr.len() {
        let s = tr.states[k];
        w.write_record([
            tr.times[k].to_string(),
            s.delta.to_string(),
            s.omega.to_string(),
            tr.sync_power[k].to_string(),
            tr.current_mag[k].to_string(),
        ])?;
    }
    finish(w)
}

pub fn boundary_csv(b: &RegionBoundary) -> Result<String, CliError> {
    let mut w = writer();
    w.write_record(["branch", "uep_rad", "side", "delta_rad", "domega_pu"])?;
    for (i, br) in b.branches.iter().enumerate() {
        for p in &br.points {
            w.write_record([
                i.to_string(),
                br.uep.to_string(),
                br.side.to_string(),
                p.delta.to_string(),
                p.omega.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn grid_csv(g: &RegionGrid) -> Result<String, CliError> {
    let mut w = writer();
    w.write_record(["delta_rad", "domega_pu", "stable"])?;
    for (i, d) in g.delta_axis.iter().enumerate() {
        for (j, o) in g.omega_axis.iter().enumerate() {
            let stable = g.labels[i][j] == RegionLabel::Stable;
            w.write_record([d.to_string(), o.to_string(), u8::from(stable).to_string()])?;
        }
    }
    finish(w)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, CliError> {
    let mut w = writer();
    w.write_record(["value", "lambda", "eac", "classification", "los_time_s", "ssi"])?;
    for r in rows {
        w.write_record([
            r.value.to_string(),
            r.lambda.to_string(),
            r.eac.to_string(),
            r.classification.to_string(),
            r.los_time.map(|t| t.to_string()).unwrap_or_default(),
            r.ssi.to_string(),
        ])?;
    }
    finish(w)
}
