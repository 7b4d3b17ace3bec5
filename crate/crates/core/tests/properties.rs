use std::f64::consts::PI;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use syncstab_core::eac::{acceleration_area, classify_first_swing, Classification};
use syncstab_core::index::{
    equilibria, lambda_from_scr, scr, sep_exists, sep_ratio_bounds, stability_index, MatchingInputs,
    PenetrationModel,
};
use syncstab_core::controller::matched_impedance;
use syncstab_core::model::{
    load_power, net_power, reactance_from_inductance, reduce, table1, LoadParams, RelativeSwingModel,
    SgParams, VsgParams,
};
use syncstab_core::sim::{energy, integrate_until, SyncState};

fn runner(seed: u8, cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

#[derive(Debug, Clone, Copy)]
struct System {
    vsg: VsgParams,
    sg: SgParams,
    load: LoadParams,
}

fn system() -> impl Strategy<Value = System> {
    (
        (1.0..100.0f64, 1.0..100.0f64, 0.0..1.0f64, 0.05..1.5f64),
        (0.8..1.2f64, 0.02..0.5f64, 0.0..0.5f64),
        (0.1..2.0f64, 0.05..1.2f64, 0.02..0.5f64, 0.5..5.0f64),
    )
        .prop_map(|((h_v, h_g, ratio, p_vref), (e_v, x_v, x_i), (p_m, e_g, x_g, r_l))| System {
            vsg: VsgParams {
                inertia: h_v,
                damping: ratio * h_v,
                power_reference: p_vref,
                internal_voltage: e_v,
                line_reactance: x_v,
                virtual_reactance: x_i,
                rated_power: 1.0,
            },
            sg: SgParams {
                inertia: h_g,
                damping: ratio * h_g,
                mechanical_power: p_m,
                voltage: e_g,
                line_reactance: x_g,
                rated_power: 1.0,
            },
            load: LoadParams { resistance: r_l },
        })
}

fn swing_model() -> impl Strategy<Value = RelativeSwingModel> {
    (1.0..30.0f64, 0.0..10.0f64, -0.5..0.5f64, 0.1..2.0f64)
        .prop_map(|(h, d, p_ref, p_max)| RelativeSwingModel::new(h, d, p_ref, p_max, 100.0 * PI).unwrap())
}

fn reduce_sys(s: &System) -> RelativeSwingModel {
    reduce(&s.vsg, &s.sg, &s.load, &table1::base()).unwrap()
}

#[test]
fn synchronous_inertia_below_both_machines() {
    runner(1, 256)
        .run(&system(), |s| {
            let m = reduce_sys(&s);
            prop_assert!(m.sync_inertia > 0.0);
            prop_assert!(m.sync_inertia < s.vsg.inertia.min(s.sg.inertia));
            Ok(())
        })
        .unwrap();
}

#[test]
fn swapping_machine_roles_negates_reference() {
    runner(2, 256)
        .run(&system(), |s| {
            let p_net = net_power(s.sg.mechanical_power, load_power(s.sg.voltage, &s.load));
            let vsg = VsgParams {
                inertia: s.sg.inertia,
                damping: 0.0,
                power_reference: p_net,
                ..s.vsg
            };
            let sg = SgParams {
                inertia: s.vsg.inertia,
                damping: 0.0,
                mechanical_power: s.vsg.power_reference + load_power(s.sg.voltage, &s.load),
                ..s.sg
            };
            let swapped = reduce(&vsg, &sg, &s.load, &table1::base()).unwrap();
            let m = reduce_sys(&s);
            let scale = s.vsg.power_reference.abs() + p_net.abs();
            prop_assert!((swapped.sync_power_reference + m.sync_power_reference).abs() <= 1e-12 * scale);
            prop_assert!((swapped.sync_inertia - m.sync_inertia).abs() <= 1e-12 * m.sync_inertia);
            Ok(())
        })
        .unwrap();
}

#[test]
fn matched_ratio_cancels_reference() {
    runner(3, 256)
        .run(&system(), |s| {
            let p_net = net_power(s.sg.mechanical_power, load_power(s.sg.voltage, &s.load));
            prop_assume!(p_net > 0.01);
            let h_v = s.vsg.power_reference / p_net * s.sg.inertia;
            let vsg = VsgParams {
                inertia: h_v,
                damping: s.sg.damping / s.sg.inertia * h_v,
                ..s.vsg
            };
            let m = reduce(&vsg, &s.sg, &s.load, &table1::base()).unwrap();
            let scale = (s.sg.inertia * s.vsg.power_reference) / (h_v + s.sg.inertia);
            prop_assert!(m.sync_power_reference.abs() <= 4.0 * f64::EPSILON * scale);
            Ok(())
        })
        .unwrap();
}

#[test]
fn peak_power_monotone_in_reactances_and_voltages() {
    runner(4, 256)
        .run(&(system(), 1.01..2.0f64), |(s, k)| {
            let base = reduce_sys(&s).sync_power_max;
            let with = |vsg: VsgParams, sg: SgParams| {
                reduce(&vsg, &sg, &s.load, &table1::base()).unwrap().sync_power_max
            };
            let weaker_virtual = VsgParams { virtual_reactance: s.vsg.virtual_reactance * k + 0.01, ..s.vsg };
            let weaker_vsg_line = VsgParams { line_reactance: s.vsg.line_reactance * k, ..s.vsg };
            let weaker_sg_line = SgParams { line_reactance: s.sg.line_reactance * k, ..s.sg };
            let stronger_vsg = VsgParams { internal_voltage: s.vsg.internal_voltage * k, ..s.vsg };
            prop_assert!(with(weaker_virtual, s.sg) < base);
            prop_assert!(with(weaker_vsg_line, s.sg) < base);
            prop_assert!(with(s.vsg, weaker_sg_line) < base);
            prop_assert!(with(s.vsg, s.sg.with_voltage(s.sg.voltage * k)) > base);
            prop_assert!(with(stronger_vsg, s.sg) > base);
            Ok(())
        })
        .unwrap();
}

#[test]
fn reactance_linear_in_inductance() {
    runner(5, 256)
        .run(&(1e-5..1e-1f64, 0.1..10.0f64), |(l, k)| {
            let base = table1::base();
            let x = reactance_from_inductance(l, &base).unwrap();
            let xk = reactance_from_inductance(k * l, &base).unwrap();
            prop_assert!((xk - k * x).abs() <= 1e-13 * xk);
            Ok(())
        })
        .unwrap();
}

#[test]
fn sep_exists_iff_positive_index() {
    runner(6, 512)
        .run(&swing_model(), |m| {
            prop_assert_eq!(sep_exists(&m), stability_index(&m).unwrap() > 0.0);
            prop_assert_eq!(equilibria(&m).unwrap().is_some(), sep_exists(&m));
            Ok(())
        })
        .unwrap();
}

#[test]
fn equilibria_solve_power_balance() {
    runner(7, 512)
        .run(&swing_model(), |m| {
            if let Some(eq) = equilibria(&m).unwrap() {
                for d in [eq.sep, eq.uep_forward, eq.uep_backward] {
                    prop_assert!((m.sync_power_reference - m.sync_power_max * d.sin()).abs() < 1e-10);
                }
                prop_assert!(eq.sep.abs() < PI / 2.0);
                prop_assert!((eq.uep_forward - (PI - eq.sep)).abs() < 1e-15);
                prop_assert!((eq.uep_backward - (-PI - eq.sep)).abs() < 1e-15);
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn ratio_bounds_match_brute_force_scan() {
    runner(8, 256)
        .run(&system(), |s| {
            let inputs = MatchingInputs::from_params(&s.vsg, &s.sg, &s.load);
            let interval = sep_ratio_bounds(&inputs).unwrap();
            for i in 0..50 {
                let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 49.0);
                let near_edge = [interval.lower, interval.upper]
                    .iter()
                    .any(|&e| e.is_finite() && (r - e).abs() <= 1e-9 * e.max(1.0));
                if near_edge {
                    continue;
                }
                let vsg = VsgParams {
                    inertia: r * s.sg.inertia,
                    damping: s.sg.damping / s.sg.inertia * r * s.sg.inertia,
                    ..s.vsg
                };
                let m = reduce(&vsg, &s.sg, &s.load, &table1::base()).unwrap();
                prop_assert_eq!(sep_exists(&m), interval.contains(r), "ratio {}", r);
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn index_forms_agree() {
    runner(9, 512)
        .run(&system(), |s| {
            let m = reduce_sys(&s);
            let direct = stability_index(&m).unwrap();
            let via_scr = lambda_from_scr(
                scr(&s.vsg, &s.sg).unwrap(),
                s.vsg.virtual_reactance,
                m.sync_power_reference,
                s.vsg.internal_voltage,
                s.sg.voltage,
            )
            .unwrap();
            let via_inertia = MatchingInputs::from_params(&s.vsg, &s.sg, &s.load).lambda(s.vsg.inertia, s.sg.inertia);
            let scale = direct.abs().max(1e-300);
            prop_assert!((direct - via_scr).abs() <= 1e-12 * scale);
            prop_assert!((direct - via_inertia).abs() <= 1e-12 * scale);
            Ok(())
        })
        .unwrap();
}

#[test]
fn kinetic_energy_at_equilibrium_equals_acceleration_area() {
    let strategy = (1.0..30.0f64, 0.05..0.3f64, 0.35..1.0f64, 0.05..1.0f64);
    runner(10, 48)
        .run(&strategy, |(h, p_ref, p_max, back)| {
            let m = RelativeSwingModel::new(h, 0.0, p_ref, p_max, 100.0 * PI).unwrap();
            let sep = equilibria(&m).unwrap().unwrap().sep;
            let delta_0 = sep - back;
            let mut prev = SyncState::new(delta_0, 0.0);
            let mut crossing = None;
            integrate_until(&m, prev, 1e-4, 30.0, |_, s| {
                if prev.delta < sep && s.delta >= sep {
                    let w = (sep - prev.delta) / (s.delta - prev.delta);
                    crossing = Some(prev.omega + w * (s.omega - prev.omega));
                    return true;
                }
                prev = *s;
                false
            })
            .unwrap();
            let omega = crossing.expect("reaches the equilibrium");
            let kinetic = h * m.reference_angular_velocity * omega * omega;
            let area = acceleration_area(&m, delta_0, sep);
            prop_assert!((kinetic - area).abs() <= 1e-4 * area, "{} vs {}", kinetic, area);
            Ok(())
        })
        .unwrap();
}

#[test]
fn larger_reference_never_stabilizes() {
    let strategy = (0.0..0.5f64, 0.0..0.5f64, 0.3..1.0f64, -1.5..0.0f64);
    runner(11, 512)
        .run(&strategy, |(p1, extra, p_max, delta_0)| {
            let classify = |p: f64| {
                let m = RelativeSwingModel::new(10.0, 0.0, p, p_max, 100.0 * PI).unwrap();
                classify_first_swing(&m, delta_0).unwrap().classification
            };
            let (small, large) = (classify(p1), classify(p1 + extra));
            prop_assert!(!(small != Classification::Stable && large == Classification::Stable));
            Ok(())
        })
        .unwrap();
}

#[test]
fn undamped_energy_is_conserved() {
    runner(12, 24)
        .run(&(swing_model(), -0.5..0.5f64, -0.01..0.01f64), |(m, offset, omega)| {
            let m = m.undamped();
            let start = SyncState::new(equilibria(&m).unwrap().map_or(0.0, |e| e.sep) + offset, omega);
            let v0 = energy(&m, &start);
            let mut worst = 0.0f64;
            integrate_until(&m, start, 1e-4, 2.0, |_, s| {
                worst = worst.max((energy(&m, s) - v0).abs());
                false
            })
            .unwrap();
            prop_assert!(worst / v0.abs() / 2.0 <= 1e-8);
            Ok(())
        })
        .unwrap();
}

#[test]
fn damped_energy_never_increases() {
    runner(13, 24)
        .run(&(swing_model(), -0.5..0.5f64, -0.01..0.01f64), |(m, offset, omega)| {
            prop_assume!(m.sync_damping > 0.0);
            let start = SyncState::new(equilibria(&m).unwrap().map_or(0.0, |e| e.sep) + offset, omega);
            let mut last = energy(&m, &start);
            let mut ok = true;
            integrate_until(&m, start, 1e-4, 2.0, |_, s| {
                let v = energy(&m, s);
                ok &= v <= last;
                last = v;
                false
            })
            .unwrap();
            prop_assert!(ok);
            Ok(())
        })
        .unwrap();
}

#[test]
fn matched_impedance_sits_on_strength_threshold() {
    runner(14, 256)
        .run(&system(), |s| {
            let x_i = matched_impedance(s.sg.inertia, s.vsg.inertia, s.sg.line_reactance, s.vsg.line_reactance).unwrap();
            prop_assume!(x_i >= 0.0);
            let vsg = VsgParams {
                virtual_reactance: x_i,
                rated_power: 0.7,
                ..s.vsg
            };
            let pm = PenetrationModel::from_params(&vsg, &s.sg, 0.9).unwrap();
            let product = pm.inertia_level_ratio * (pm.line_drop_ratio + pm.virtual_drop_ratio);
            prop_assert!((product - 1.0).abs() <= 1e-12);
            Ok(())
        })
        .unwrap();
}
