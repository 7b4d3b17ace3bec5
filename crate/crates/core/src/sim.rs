//! Fixed-step time-domain simulation of the reduced (2-state) and full
//! (4-state) two-machine models under a staged fault.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::index::equilibria;
use crate::model::{
    load_power, reduce, total_reactance, BaseQuantities, LoadParams, RelativeSwingModel, SgParams,
    VsgParams,
};

/// Default integration step (s).
pub const DEFAULT_DT: f64 = 1e-4;

/// Synchronization angle δ_vg (rad) and frequency difference Δω_vg (pu).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SyncState {
    pub delta: f64,
    pub omega: f64,
}

impl SyncState {
    pub fn new(delta: f64, omega: f64) -> Self {
        Self { delta, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.delta.is_finite() && self.omega.is_finite()
    }
}

/// Right-hand side of the relative swing equation.
pub fn derivative(model: &RelativeSwingModel, s: &SyncState) -> SyncState {
    SyncState {
        delta: model.reference_angular_velocity * s.omega,
        omega: (model.sync_power_reference
            - model.sync_power_max * s.delta.sin()
            - model.sync_damping * s.omega)
            / (2.0 * model.sync_inertia),
    }
}

fn rk4<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], dt: f64) -> [f64; N] {
    let shifted = |base: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        std::array::from_fn(|i| base[i] + h * k[i])
    };
    let k1 = f(y);
    let k2 = f(&shifted(y, &k1, 0.5 * dt));
    let k3 = f(&shifted(y, &k2, 0.5 * dt));
    let k4 = f(&shifted(y, &k3, dt));
    std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn reduced_rhs(model: &RelativeSwingModel) -> impl Fn(&[f64; 2]) -> [f64; 2] + '_ {
    move |y| {
        let d = derivative(model, &SyncState::new(y[0], y[1]));
        [d.delta, d.omega]
    }
}

/// One classical fourth-order Runge–Kutta step.
pub fn step_rk4(model: &RelativeSwingModel, s: &SyncState, dt: f64) -> Result<SyncState> {
    ensure_positive("dt", dt)?;
    let y = rk4(reduced_rhs(model), &[s.delta, s.omega], dt);
    let next = SyncState::new(y[0], y[1]);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Diverged { time: dt })
    }
}

/// Integrates `model` from `state` until `t_max` or until `stop` returns true.
/// Returns the time reached and the final state.
pub fn integrate_until(
    model: &RelativeSwingModel,
    state: SyncState,
    dt: f64,
    t_max: f64,
    mut stop: impl FnMut(f64, &SyncState) -> bool,
) -> Result<(f64, SyncState)> {
    ensure_positive("dt", dt)?;
    let steps = (t_max / dt).round() as usize;
    let rhs = reduced_rhs(model);
    let mut y = [state.delta, state.omega];
    for k in 0..steps {
        let t = k as f64 * dt;
        if stop(t, &SyncState::new(y[0], y[1])) {
            return Ok((t, SyncState::new(y[0], y[1])));
        }
        y = rk4(&rhs, &y, dt);
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Diverged { time: t + dt });
        }
    }
    Ok((steps as f64 * dt, SyncState::new(y[0], y[1])))
}

/// Lyapunov function `H Δω² − (P_syn,ref δ + P_syn,max cos δ)/Ω_ref`.
///
/// Constant along undamped trajectories; decreases at rate `D Δω²` otherwise.
pub fn energy(model: &RelativeSwingModel, s: &SyncState) -> f64 {
    model.sync_inertia * s.omega * s.omega
        - (model.sync_power_reference * s.delta + model.sync_power_max * s.delta.cos())
            / model.reference_angular_velocity
}

/// VSG current magnitude `|E_v e^{jδ} − E_g| / X_sum` (pu).
pub fn current_magnitude(vsg_voltage: f64, sg_voltage: f64, total_reactance: f64, delta: f64) -> f64 {
    let squared = vsg_voltage * vsg_voltage + sg_voltage * sg_voltage
        - 2.0 * vsg_voltage * sg_voltage * delta.cos();
    squared.max(0.0).sqrt() / total_reactance
}

/// Current magnitudes along `states` for fixed stage voltages and reactance.
pub fn current_trace(
    states: &[SyncState],
    vsg_voltage: f64,
    sg_voltage: f64,
    total_reactance: f64,
) -> Result<Vec<f64>> {
    if total_reactance <= 0.0 {
        return Err(Error::SingularNetwork("total reactance is zero"));
    }
    Ok(states
        .iter()
        .map(|s| current_magnitude(vsg_voltage, sg_voltage, total_reactance, s.delta))
        .collect())
}

/// Quantities overridden by each stage of a fault scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    /// SG voltage `E_g` (pu).
    pub grid_voltage: f64,
    /// VSG virtual reactance `X_i` (pu).
    pub virtual_reactance: f64,
    /// VSG power reference `P_vref` (pu).
    pub power_reference: f64,
}

impl StageParams {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("stage.grid_voltage", self.grid_voltage)?;
        ensure_non_negative("stage.virtual_reactance", self.virtual_reactance)?;
        ensure_finite("stage.power_reference", self.power_reference)
    }

    pub fn apply(&self, vsg: &VsgParams, sg: &SgParams) -> (VsgParams, SgParams) {
        (
            VsgParams {
                virtual_reactance: self.virtual_reactance,
                power_reference: self.power_reference,
                ..*vsg
            },
            sg.with_voltage(self.grid_voltage),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    PreFault,
    FaultOn,
    PostFault,
}

/// Pre-fault / fault-on / optional post-fault stage sequence.
///
/// The system starts at the pre-fault equilibrium. When `t_clear` is set
/// without explicit `postfault` overrides the pre-fault values are restored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultScenario {
    pub t_end: f64,
    pub t_fault: f64,
    pub t_clear: Option<f64>,
    pub prefault: StageParams,
    pub faulted: StageParams,
    pub postfault: Option<StageParams>,
}

impl FaultScenario {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("t_end", self.t_end)?;
        ensure_non_negative("t_fault", self.t_fault)?;
        if self.t_fault >= self.t_end {
            return Err(Error::param("t_fault", self.t_fault, "must be < t_end"));
        }
        if let Some(t_clear) = self.t_clear {
            if !(t_clear > self.t_fault && t_clear <= self.t_end) {
                return Err(Error::param("t_clear", t_clear, "must lie in (t_fault, t_end]"));
            }
        }
        self.prefault.validate()?;
        self.faulted.validate()?;
        if let Some(post) = &self.postfault {
            post.validate()?;
        }
        Ok(())
    }

    pub fn stage_params(&self, stage: Stage) -> &StageParams {
        match stage {
            Stage::PreFault => &self.prefault,
            Stage::FaultOn => &self.faulted,
            Stage::PostFault => self.postfault.as_ref().unwrap_or(&self.prefault),
        }
    }
}

/// Angles beyond which the synchronization is declared lost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosThresholds {
    pub forward: f64,
    pub backward: f64,
}

impl LosThresholds {
    /// UEPs of `model`; `±π` when the model has no stable equilibrium.
    pub fn for_model(model: &RelativeSwingModel) -> Self {
        match equilibria(model) {
            Ok(Some(eq)) => Self {
                forward: eq.uep_forward,
                backward: eq.uep_backward,
            },
            _ => Self {
                forward: PI,
                backward: -PI,
            },
        }
    }

    pub fn crossed(&self, s: &SyncState) -> bool {
        (s.delta > self.forward && s.omega > 0.0) || (s.delta < self.backward && s.omega < 0.0)
    }
}

/// Sampled simulation result. Samples are uniformly spaced from `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SyncState>,
    /// Output synchronization power `P_syn,max sin δ` (pu).
    pub sync_power: Vec<f64>,
    /// VSG current magnitude (pu).
    pub current_mag: Vec<f64>,
    pub los_time: Option<f64>,
    pub ssi: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest (signed) synchronization angle.
    pub fn delta_max(&self) -> f64 {
        self.states.iter().map(|s| s.delta).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_current(&self) -> f64 {
        self.current_mag.iter().copied().fold(0.0, f64::max)
    }

    pub fn final_state(&self) -> Option<SyncState> {
        self.states.last().copied()
    }
}

/// First sample time at which `trajectory` passes a UEP of `model` while
/// moving away from the SEP.
pub fn detect_los(trajectory: &Trajectory, model: &RelativeSwingModel) -> Option<f64> {
    let thresholds = LosThresholds::for_model(model);
    trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .find(|(_, s)| thresholds.crossed(s))
        .map(|(&t, _)| t)
}

/// Synchronization stability index `(2π − δ_max) / (2π + δ_max)`.
pub fn ssi_from_max(delta_max: f64) -> f64 {
    (2.0 * PI - delta_max) / (2.0 * PI + delta_max)
}

pub fn ssi(trajectory: &Trajectory) -> f64 {
    ssi_from_max(trajectory.delta_max())
}

/// Stage-resolved parameters.
#[derive(Debug, Clone, Copy)]
struct StageContext {
    model: RelativeSwingModel,
    vsg: VsgParams,
    sg: SgParams,
    load_power: f64,
    total_reactance: f64,
    thresholds: LosThresholds,
}

impl StageContext {
    fn new(
        vsg: &VsgParams,
        sg: &SgParams,
        load: &LoadParams,
        base: &BaseQuantities,
        params: &StageParams,
    ) -> Result<Self> {
        let (vsg, sg) = params.apply(vsg, sg);
        let model = reduce(&vsg, &sg, load, base)?;
        Ok(Self {
            model,
            vsg,
            sg,
            load_power: load_power(sg.voltage, load),
            total_reactance: total_reactance(&vsg, &sg),
            thresholds: LosThresholds::for_model(&model),
        })
    }
}

struct Schedule {
    contexts: [StageContext; 3],
    fault_step: usize,
    clear_step: Option<usize>,
    steps: usize,
}

impl Schedule {
    fn new(
        vsg: &VsgParams,
        sg: &SgParams,
        load: &LoadParams,
        base: &BaseQuantities,
        scenario: &FaultScenario,
        dt: f64,
    ) -> Result<Self> {
        ensure_positive("dt", dt)?;
        scenario.validate()?;
        let ctx = |stage| StageContext::new(vsg, sg, load, base, scenario.stage_params(stage));
        Ok(Self {
            contexts: [ctx(Stage::PreFault)?, ctx(Stage::FaultOn)?, ctx(Stage::PostFault)?],
            fault_step: (scenario.t_fault / dt).round() as usize,
            clear_step: scenario.t_clear.map(|t| (t / dt).round() as usize),
            steps: (scenario.t_end / dt).round() as usize,
        })
    }

    /// Context in force from sample `k` to `k + 1`.
    fn at(&self, k: usize) -> &StageContext {
        if k < self.fault_step {
            &self.contexts[0]
        } else if self.clear_step.is_some_and(|c| k >= c) {
            &self.contexts[2]
        } else {
            &self.contexts[1]
        }
    }

    fn initial_angle(&self) -> Result<f64> {
        let eq = equilibria(&self.contexts[0].model)?.ok_or(Error::NoEquilibrium)?;
        Ok(eq.sep)
    }

    fn run<const N: usize>(
        &self,
        dt: f64,
        initial: [f64; N],
        rhs: impl Fn(&StageContext, &[f64; N]) -> [f64; N],
        relative: impl Fn(&[f64; N]) -> SyncState,
    ) -> Result<Trajectory> {
        let n = self.steps + 1;
        let mut traj = Trajectory {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            sync_power: Vec::with_capacity(n),
            current_mag: Vec::with_capacity(n),
            los_time: None,
            ssi: 0.0,
        };
        let mut y = initial;
        for k in 0..n {
            let t = k as f64 * dt;
            let ctx = self.at(k);
            let s = relative(&y);
            if !s.is_finite() {
                return Err(Error::Diverged { time: t });
            }
            if traj.los_time.is_none() && ctx.thresholds.crossed(&s) {
                traj.los_time = Some(t);
            }
            traj.times.push(t);
            traj.states.push(s);
            traj.sync_power.push(ctx.model.sync_power_max * s.delta.sin());
            traj.current_mag.push(current_magnitude(
                ctx.vsg.internal_voltage,
                ctx.sg.voltage,
                ctx.total_reactance,
                s.delta,
            ));
            if k < self.steps {
                y = rk4(|y| rhs(ctx, y), &y, dt);
            }
        }
        traj.ssi = ssi(&traj);
        Ok(traj)
    }
}

/// Simulates the relative swing equation through the scenario stages.
pub fn simulate_reduced(
    vsg: &VsgParams,
    sg: &SgParams,
    load: &LoadParams,
    base: &BaseQuantities,
    scenario: &FaultScenario,
    dt: f64,
) -> Result<Trajectory> {
    let schedule = Schedule::new(vsg, sg, load, base, scenario, dt)?;
    let delta_0 = schedule.initial_angle()?;
    schedule.run(
        dt,
        [delta_0, 0.0],
        |ctx, y| reduced_rhs(&ctx.model)(y),
        |y| SyncState::new(y[0], y[1]),
    )
}

/// Simulates both machines individually (`θ_v, Δω_v, θ_g, Δω_g`) and
/// returns the relative trajectory.
pub fn simulate_full(
    vsg: &VsgParams,
    sg: &SgParams,
    load: &LoadParams,
    base: &BaseQuantities,
    scenario: &FaultScenario,
    dt: f64,
) -> Result<Trajectory> {
    let schedule = Schedule::new(vsg, sg, load, base, scenario, dt)?;
    let delta_0 = schedule.initial_angle()?;
    let omega_ref = base.reference_angular_velocity();
    schedule.run(
        dt,
        [delta_0, 0.0, 0.0, 0.0],
        |ctx, y| {
            let (v, g) = (&ctx.vsg, &ctx.sg);
            let p_v = v.internal_voltage * g.voltage * (y[0] - y[2]).sin() / ctx.total_reactance;
            let p_g = ctx.load_power - p_v;
            [
                omega_ref * y[1],
                (v.power_reference - p_v - v.damping * y[1]) / (2.0 * v.inertia),
                omega_ref * y[3],
                (g.mechanical_power - p_g - g.damping * y[3]) / (2.0 * g.inertia),
            ]
        },
        |y| SyncState::new(y[0] - y[2], y[1] - y[3]),
    )
}
