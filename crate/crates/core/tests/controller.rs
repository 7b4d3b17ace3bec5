use syncstab_core::controller::{
    design, max_fault_current, set_virtual_impedance, BindingConstraint, DesignInput,
};
use syncstab_core::index::equilibria;
use syncstab_core::model::{reduce, table1, total_reactance, VsgParams};
use syncstab_core::sim::{current_magnitude, integrate_until, simulate_reduced, FaultScenario, StageParams, SyncState};

fn input(fault_voltage: f64, current_limit: f64) -> DesignInput {
    DesignInput {
        sg: table1::sg(),
        vsg: table1::vsg(70.0),
        load: table1::load(),
        fault_voltage,
        current_limit,
    }
}

fn scenario(fault_voltage: f64, virtual_reactance: f64) -> FaultScenario {
    FaultScenario {
        t_end: 10.0,
        t_fault: 0.5,
        t_clear: None,
        prefault: StageParams {
            grid_voltage: 1.0,
            virtual_reactance: 0.0,
            power_reference: 0.3,
        },
        faulted: StageParams {
            grid_voltage: fault_voltage,
            virtual_reactance,
            power_reference: 0.3,
        },
        postfault: None,
    }
}

fn simulate(vsg: &VsgParams, fault_voltage: f64) -> syncstab_core::Trajectory {
    simulate_reduced(
        vsg,
        &table1::sg(),
        &table1::load(),
        &table1::base(),
        &scenario(fault_voltage, vsg.virtual_reactance),
        1e-4,
    )
    .unwrap()
}

#[test]
fn designed_system_rides_through_severe_fault() {
    let inp = input(0.2, 1.8);
    let out = design(&inp).unwrap();
    let vsg = out.apply(&inp.vsg);
    let tr = simulate(&vsg, 0.2);
    assert_eq!(tr.los_time, None);
    assert!(tr.max_current() <= 1.8);

    let model = reduce(&vsg, &table1::sg().with_voltage(0.2), &table1::load(), &table1::base()).unwrap();
    assert!(model.sync_power_reference.abs() < 1e-16);
    assert_eq!(equilibria(&model).unwrap().unwrap().sep, 0.0);
}

#[test]
fn undesigned_large_inertia_slips() {
    let vsg = table1::vsg(70.0);
    assert!(simulate(&vsg, 0.2).los_time.is_some());
}

#[test]
fn predicted_current_bounds_near_critical_swing() {
    let model = table1::fault_model(20.0).undamped();
    let eq = equilibria(&model).unwrap().unwrap();
    let vsg = table1::vsg(20.0);
    let sg = table1::sg().with_voltage(0.2);
    let x_sum = total_reactance(&vsg, &sg);
    let predicted = max_fault_current(1.0, 0.2, eq.uep_forward, x_sum).unwrap();
    // released at rest just short of the controlling (backward) UEP
    let mut peak = 0.0f64;
    integrate_until(&model, SyncState::new(eq.uep_backward + 0.05, 0.0), 1e-3, 30.0, |_, s| {
        peak = peak.max(current_magnitude(1.0, 0.2, x_sum, s.delta));
        false
    })
    .unwrap();
    assert!(peak <= predicted);
    assert!(peak >= 0.98 * predicted, "{peak} vs {predicted}");
}

#[test]
fn binding_constraint_depends_on_limit() {
    let tight = set_virtual_impedance(&input(0.2, 1.8), 12.5).unwrap();
    assert_eq!(tight.1, BindingConstraint::CurrentLimit);
    let loose = set_virtual_impedance(&input(0.2, 10.0), 12.5).unwrap();
    assert_eq!(loose.1, BindingConstraint::InertiaStrengthMatch);
    assert!(tight.0 > loose.0);
}

#[test]
fn designed_current_stays_within_limit_across_fault_depths() {
    for i in 1..=9 {
        let e_gf = i as f64 / 10.0;
        let inp = input(e_gf, 1.8);
        let out = design(&inp).unwrap();
        assert_eq!(out.predicted_lambda, 1.0);
        assert!(out.predicted_max_current <= 1.8 + 1e-9);
        let tr = simulate(&out.apply(&inp.vsg), e_gf);
        assert_eq!(tr.los_time, None, "E_gf {e_gf}");
        assert!(tr.max_current() <= 1.02 * 1.8, "E_gf {e_gf}: {}", tr.max_current());
    }
}
