use piezoleg_core::dynamics::{self, ContactInput, SimConfig, Simulator, SweepPlan};
use piezoleg_core::gait::{GaitName, GaitProgram, Leg};
use piezoleg_core::{metrics, presets, Error, RobotSpec};
use proptest::prelude::*;

fn jr() -> RobotSpec<f64> {
    presets::hamr_jr()
}

fn short() -> SimConfig<f64> {
    SimConfig { settle_s: 0.05, measure_cycles: Some(4), ..SimConfig::default() }
}

#[test]
fn passive_robot_settles() {
    let idle = GaitProgram::new(GaitName::Trot, 10.0, 0.0).unwrap();
    let cfg = SimConfig { initial_height_mm: Some(0.3), duration_s: 0.6, settle_s: 0.3, ..SimConfig::default() };
    let s = metrics::summarize(&dynamics::simulate(&jr(), &idle, &cfg).unwrap()).unwrap();
    assert!(s.mean_speed_mm_s.abs() < 0.01, "{}", s.mean_speed_mm_s);
}

#[test]
fn trot_at_160_hz_runs_hundreds_of_mm_per_second() {
    let p = GaitProgram::new(GaitName::Trot, 160.0, 200.0).unwrap();
    let s = metrics::summarize(&dynamics::simulate(&jr(), &p, &presets::experiment_config()).unwrap()).unwrap();
    assert!((100.0..1000.0).contains(&s.mean_speed_mm_s), "{}", s.mean_speed_mm_s);
    assert!(s.aerial_fraction > 0.0);
}

#[test]
fn oversized_timestep_is_rejected() {
    let p = GaitProgram::new(GaitName::Trot, 100.0, 200.0).unwrap();
    let cfg = SimConfig { timestep_s: Some(1e-4), ..short() };
    assert!(matches!(dynamics::simulate(&jr(), &p, &cfg), Err(Error::Domain(_))));
}

#[test]
fn trajectory_sampling_is_uniform_and_increasing() {
    let p = GaitProgram::new(GaitName::Bound, 50.0, 200.0).unwrap();
    let t = dynamics::simulate(&jr(), &p, &short()).unwrap();
    let period = t.sample_period_s();
    let ratio = period / t.timestep_s;
    assert!((ratio - ratio.round()).abs() < 1e-9 && ratio >= 1.0);
    assert!(t.samples.windows(2).all(|w| w[1].t_s > w[0].t_s));
}

#[test]
fn sweep_counts_and_orders_runs() {
    let plan = SweepPlan::new(vec![GaitName::Trot, GaitName::Pronk], vec![20.0, 40.0, 60.0], 200.0, 2);
    let runs = dynamics::sweep(&jr(), 0.25, &plan, &short(), 2).unwrap();
    assert_eq!(runs.len(), 12);
    let order: Vec<(GaitName, f64, usize)> = runs.iter().map(|r| (r.gait, r.frequency_hz, r.repetition)).collect();
    let mut expected = Vec::new();
    for g in [GaitName::Trot, GaitName::Pronk] {
        for f in [20.0, 40.0, 60.0] {
            for rep in 0..2 {
                expected.push((g, f, rep));
            }
        }
    }
    assert_eq!(order, expected);
    assert!(runs.iter().enumerate().all(|(i, r)| r.run_id == i));

    let serial = dynamics::sweep(&jr(), 0.25, &plan, &short(), 1).unwrap();
    assert_eq!(runs, serial);
}

#[test]
fn sweep_rejects_empty_lists() {
    let plan = SweepPlan::new(vec![GaitName::Trot], vec![], 200.0, 1);
    assert!(matches!(dynamics::sweep(&jr(), 0.25, &plan, &short(), 1), Err(Error::Empty(_))));
    let plan = SweepPlan::new(vec![], vec![10.0], 200.0, 1);
    assert!(dynamics::sweep(&jr(), 0.25, &plan, &short(), 1).is_err());
}

#[test]
fn eleven_frequencies_five_reps_two_gaits() {
    let plan = SweepPlan::new(vec![GaitName::Trot, GaitName::Pronk], presets::SWEEP_FREQUENCIES_HZ.to_vec(), 200.0, 5);
    assert_eq!(plan.runs(), 110);
}

#[test]
fn normal_forces_and_penetration_stay_bounded() {
    let robot = jr();
    let g = 9.81;
    let leg = &robot.legs[0];
    let drive_at_foot = robot.actuator.blocked_force_mn * 1e-3 / leg.lift.transmission_ratio;
    let max_force = robot.total_mass_g() * 1e-3 * g + drive_at_foot;
    let k_min = leg.vertical_stiffness.k_at_highest_n_m * robot.contact.serial_compliance;
    let bound = max_force / k_min;
    for (gait, f) in [(GaitName::Trot, 160.0), (GaitName::Pronk, 200.0), (GaitName::Trot, 5.0)] {
        let p = GaitProgram::new(gait, f, 200.0).unwrap();
        let mut sim = Simulator::new(&robot, &p, &short()).unwrap();
        for _ in 0..20_000 {
            sim.step().unwrap();
            let c = sim.last_contact();
            for i in 0..4 {
                assert!(c.normal_n[i] >= 0.0);
                assert!(c.penetration_m[i] <= bound, "{} > {bound}", c.penetration_m[i]);
            }
        }
    }
}

#[test]
fn lowest_natural_frequency_is_body_bounce() {
    let robot = jr();
    let trot = dynamics::lowest_natural_frequency_hz(&robot, GaitName::Trot);
    let pronk = dynamics::lowest_natural_frequency_hz(&robot, GaitName::Pronk);
    // two or four legs at the soft end of the curve carrying the body
    let k = 34.52 * robot.contact.serial_compliance;
    let oracle = |n: f64| (n * k / 0.32e-3).sqrt() / std::f64::consts::TAU;
    assert!((trot - oracle(2.0)).abs() < 1e-9);
    assert!((pronk - oracle(4.0)).abs() < 1e-9);
    assert!(pronk < 237.3);
}

fn advance_ratio(gait: GaitName, f: f64) -> f64 {
    let robot = jr().with_friction(presets::HIGH_FRICTION);
    let cfg = SimConfig { settle_s: 0.25, measure_cycles: Some(8), measure_max_s: Some(2.0), ..SimConfig::default() };
    let t = dynamics::simulate(&robot, &GaitProgram::new(gait, f, 200.0).unwrap(), &cfg).unwrap();
    let s = metrics::summarize(&t).unwrap();
    s.stride_length_mm / dynamics::quasi_static_stride_mm(&robot, gait, 200.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn contact_force_stays_in_cone(
        pen in -1e-4f64..2e-4,
        rate in -0.5f64..0.5,
        x in -1e-3f64..1e-3,
        vx in -0.5f64..0.5,
        anchor in proptest::option::of(-1e-3f64..1e-3),
        mu in 0.05f64..3.0,
        k in 10.0f64..100.0,
        damping in 0.0f64..0.05,
    ) {
        let c = ContactInput {
            penetration_m: pen,
            penetration_rate_m_s: rate,
            normal_stiffness_n_m: k,
            normal_damping_n_s_m: damping,
            tangential_stiffness_n_m: k,
            tangential_damping_n_s_m: damping,
            x_m: x,
            vx_m_s: vx,
            mu,
        };
        let f = dynamics::foot_contact_force(&c, anchor);
        prop_assert!(f.normal_n >= 0.0);
        prop_assert!(f.tangential_n.abs() <= mu * f.normal_n * (1.0 + 1e-12) + 1e-18);
        if pen <= 0.0 {
            prop_assert_eq!((f.normal_n, f.tangential_n, f.slipping), (0.0, 0.0, false));
        }
    }

    #[test]
    fn passive_energy_does_not_rise(h in 0.05f64..1.0, gait in prop_oneof![Just(GaitName::Trot), Just(GaitName::Pronk)]) {
        let idle = GaitProgram::new(gait, 10.0, 0.0).unwrap();
        let cfg = SimConfig { initial_height_mm: Some(h), duration_s: 0.1, settle_s: 0.0, ..SimConfig::default() };
        let mut sim = Simulator::new(&jr(), &idle, &cfg).unwrap();
        let mut e0 = sim.energy();
        for k in 1..=10_000 {
            sim.step().unwrap();
            if k % 1000 == 0 {
                let e = sim.energy();
                prop_assert!(e <= e0 + 1e-3 * e0.abs(), "{e} after {e0}");
                e0 = e;
            }
        }
    }

    #[test]
    fn identical_inputs_give_identical_trajectories(f in 5.0f64..280.0, pronk in any::<bool>()) {
        let gait = if pronk { GaitName::Pronk } else { GaitName::Trot };
        let p = GaitProgram::new(gait, f, 200.0).unwrap();
        let cfg = SimConfig { settle_s: 0.0, measure_cycles: Some(2), ..SimConfig::default() };
        let a = dynamics::simulate(&jr(), &p, &cfg).unwrap();
        let b = dynamics::simulate(&jr(), &p, &cfg).unwrap();
        prop_assert!(a == b);
    }

    #[test]
    fn sub_resonant_advance_is_kinematically_bounded(u in 0.05f64..1.0, pronk in any::<bool>()) {
        let gait = if pronk { GaitName::Pronk } else { GaitName::Trot };
        let f = u * dynamics::lowest_natural_frequency_hz(&jr(), gait) / 4.0;
        let ratio = advance_ratio(gait, f);
        prop_assert!(ratio <= 1.1, "{gait} at {f:.2} Hz: {ratio:.3}");
    }
}

#[test]
fn every_leg_touches_down_in_a_slow_trot() {
    let p = GaitProgram::new(GaitName::Trot, 5.0, 200.0).unwrap();
    let t = dynamics::simulate(&jr(), &p, &short()).unwrap();
    for leg in Leg::ALL {
        assert!(t.samples.iter().any(|s| s.feet[leg.index()].contact), "{leg:?}");
    }
}
