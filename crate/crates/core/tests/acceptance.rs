//! Acceptance criteria 1–11. Each test prints one `PASS`/`FAIL` line to the
//! terminal (bypassing the harness capture) and then asserts.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use piezoleg_core::dynamics::{self, SimConfig, Simulator, SweepPlan, SweepRun};
use piezoleg_core::gait::{GaitName, GaitProgram};
use piezoleg_core::metrics::{self, SweepPoint};
use piezoleg_core::scaling::{self, AllometricTransform, Quantity, StiffnessComposition};
use piezoleg_core::transmission;
use piezoleg_core::{io, presets, sensing, RobotSpec};

struct Outcome {
    checks: Vec<(String, bool)>,
}

impl Outcome {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn finish(self, id: u32, title: &str, started: Instant, budget: Duration) {
        let elapsed = started.elapsed();
        let mut checks = self.checks;
        checks.push((format!("runtime {:.2} s < {} s", elapsed.as_secs_f64(), budget.as_secs()), elapsed < budget));
        let pass = checks.iter().all(|(_, ok)| *ok);
        let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(s, _)| s.as_str()).collect();
        let summary = if pass {
            checks.iter().map(|(s, _)| s.as_str()).collect::<Vec<_>>().join("; ")
        } else {
            format!("failed: {}", failed.join("; "))
        };
        let line = format!("criterion {id:>2} {} — {title}: {summary}\n", if pass { "PASS" } else { "FAIL" });
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(line.as_bytes());
        let _ = out.flush();
        assert!(pass, "{line}");
    }
}

fn round_sig(x: f64, sig: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(sig - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn jr() -> RobotSpec<f64> {
    presets::hamr_jr()
}

#[test]
fn criterion_01_scaling_factors() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let rows = scaling::scaling_report(
        &presets::hamr_vi::<f64>(),
        &AllometricTransform::half(),
        None,
        StiffnessComposition::FactorSum,
    )
    .unwrap();
    let factor = |q: Quantity| rows.iter().find(|r| r.quantity == q).unwrap().factor_theoretical;
    // hand-derived: mass ∝ l·w·t, stiffness 2² + ½, resonance sqrt(k/m), speed δ·f
    let resonance = (4.5f64 / 0.25).sqrt();
    let expected = [
        (Quantity::BodyLength, 0.5, 0.5),
        (Quantity::BodyMass, 0.25, 0.25),
        (Quantity::TotalStiffness, 4.5, 4.5),
        (Quantity::LiftResonance, resonance, 4.24),
        (Quantity::SwingResonance, resonance, 4.24),
        (Quantity::StrideLength, 0.25, 0.25),
        (Quantity::Speed, 0.25 * resonance, 1.06),
        (Quantity::SpeedBl, 0.25 * resonance / 0.5, 2.12),
    ];
    for (q, oracle, table) in expected {
        let f = factor(q);
        o.check(
            format!("{q} {:.4}", f),
            round_sig(f, 4) == round_sig(oracle, 4) && round_sig(f, 3) == round_sig(table, 3),
        );
    }
    o.finish(1, "scaling factors", t0, Duration::from_secs(1));
}

#[test]
fn criterion_02_resonance_prediction() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let r = scaling::resonance_factor(4.5f64, 0.25).unwrap();
    let lift = 81.3 * r;
    let swing = 103.0 * r;
    o.check(format!("lift {lift:.1} Hz (344.9, ≈345)"), (lift - 344.9).abs() < 0.05 && (lift - 345.0).abs() <= 1.0);
    o.check(format!("swing {swing:.1} Hz (437.0, ≈437)"), (swing - 437.0).abs() < 0.05 && (swing - 437.0).abs() <= 1.0);
    o.finish(2, "resonance prediction", t0, Duration::from_secs(1));
}

#[test]
fn criterion_03_vertical_stiffness_curve() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let curve = jr().legs[0].vertical_stiffness;
    let lo = transmission::vertical_leg_stiffness(&curve, curve.leg_height_min_mm).unwrap();
    let hi = transmission::vertical_leg_stiffness(&curve, curve.leg_height_max_mm).unwrap();
    o.check(format!("lowest-height {lo} N/m"), lo == 72.11);
    o.check(format!("highest-height {hi} N/m"), hi == 34.52);
    let n = 200;
    let samples: Vec<f64> = (0..=n)
        .map(|i| {
            let h = curve.leg_height_min_mm + (curve.leg_height_max_mm - curve.leg_height_min_mm) * i as f64 / n as f64;
            transmission::vertical_leg_stiffness(&curve, h).unwrap()
        })
        .collect();
    o.check("monotone decreasing", samples.windows(2).all(|w| w[1] < w[0]));
    o.check(format!("ratio {:.3} > 2", lo / hi), lo / hi > 2.0);
    o.finish(3, "vertical stiffness curve", t0, Duration::from_secs(1));
}

#[test]
fn criterion_04_frequency_response() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let leg = jr().legs[0].clone();
    for (m, f_target, q_target) in [
        (leg.lift, presets::JR_LIFT_RESONANCE_HZ, presets::JR_LIFT_Q),
        (leg.swing, presets::JR_SWING_RESONANCE_HZ, presets::JR_SWING_Q),
    ] {
        let name = m.dof.name();
        let fn_model = transmission::natural_frequency(&m);
        let resp = transmission::frequency_response(&m, 20.0, 500.0, 481, 40.0).unwrap();
        let fit = transmission::fit_second_order(&resp).unwrap();
        o.check(format!("{name} model f_n {fn_model:.2} Hz"), (fn_model - f_target).abs() <= 1.0);
        o.check(format!("{name} model Q {:.2}", m.quality_factor), (m.quality_factor - q_target).abs() < 1e-12);
        o.check(
            format!("{name} fit f_n {:.2} Hz", fit.natural_frequency_hz),
            (fit.natural_frequency_hz / fn_model - 1.0).abs() <= 0.005,
        );
        o.check(format!("{name} fit Q {:.3}", fit.quality_factor), (fit.quality_factor / q_target - 1.0).abs() <= 0.005);
    }
    o.finish(4, "frequency response", t0, Duration::from_secs(5));
}

fn quasi_static_advance(gait: GaitName) -> (f64, f64) {
    let robot = jr().with_friction(presets::HIGH_FRICTION);
    let cfg = SimConfig { settle_s: 1.0, measure_cycles: Some(3), ..SimConfig::default() };
    let traj = dynamics::simulate(&robot, &GaitProgram::new(gait, 1.0, 200.0).unwrap(), &cfg).unwrap();
    let s = metrics::summarize(&traj).unwrap();
    (s.stride_length_mm, dynamics::quasi_static_stride_mm(&robot, gait, 200.0).unwrap())
}

#[test]
fn criterion_05_quasi_static_stride() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let (pronk, pronk_qs) = quasi_static_advance(GaitName::Pronk);
    let (trot, trot_qs) = quasi_static_advance(GaitName::Trot);
    o.check(format!("pronk {pronk:.4} mm/cycle (kinematic {pronk_qs:.2})"), (pronk / 1.04 - 1.0).abs() <= 0.05);
    o.check(format!("trot {trot:.4} mm/cycle (kinematic {trot_qs:.2})"), (trot / 2.08 - 1.0).abs() <= 0.05);
    o.finish(5, "quasi-static stride", t0, Duration::from_secs(30));
}

struct SweepResult {
    points: Vec<SweepPoint<f64>>,
    elapsed: Duration,
}

fn sweep() -> &'static SweepResult {
    static CELL: OnceLock<SweepResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let t0 = Instant::now();
        let plan = SweepPlan::new(
            vec![GaitName::Trot, GaitName::Pronk],
            presets::SWEEP_FREQUENCIES_HZ.to_vec(),
            200.0,
            5,
        );
        let runs: Vec<SweepRun<f64>> = dynamics::sweep(&jr(), 0.25, &plan, &presets::experiment_config(), 0).unwrap();
        assert!(runs.iter().all(|r| r.outcome.is_ok()), "a sweep run diverged");
        let points = metrics::aggregate_sweep(&runs);
        SweepResult { points, elapsed: t0.elapsed() }
    })
}

fn curve(gait: GaitName) -> Vec<SweepPoint<f64>> {
    sweep().points.iter().filter(|p| p.gait == gait).copied().collect()
}

fn peak(points: &[SweepPoint<f64>]) -> SweepPoint<f64> {
    *points.iter().max_by(|a, b| a.mean_speed_mm_s.total_cmp(&b.mean_speed_mm_s)).unwrap()
}

#[test]
fn criterion_06_speed_frequency_sweep() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let trot = curve(GaitName::Trot);
    let pronk = curve(GaitName::Pronk);
    let speeds = |c: &[SweepPoint<f64>]| c.iter().map(|p| format!("{:.0}@{}", p.mean_speed_mm_s, p.frequency_hz)).collect::<Vec<_>>().join(",");
    let rising: Vec<f64> = trot.iter().filter(|p| p.frequency_hz <= 120.0).map(|p| p.mean_speed_mm_s).collect();
    o.check(format!("trot rising over 1–120 Hz [{}]", speeds(&trot)), rising.windows(2).all(|w| w[1] > w[0]));

    let tp = peak(&trot);
    o.check(format!("trot peak at {} Hz", tp.frequency_hz), (120.0..=240.0).contains(&tp.frequency_hz));
    o.check(format!("trot peak {:.1} mm/s", tp.mean_speed_mm_s), (150.0..=400.0).contains(&tp.mean_speed_mm_s));
    o.check(format!("trot stride at peak {:.3} mm > 2.08", tp.stride_length_mm), tp.stride_length_mm > 2.08);

    let pp = peak(&pronk);
    o.check(format!("pronk peak at {} Hz [{}]", pp.frequency_hz, speeds(&pronk)), (160.0..=280.0).contains(&pp.frequency_hz));
    o.check(format!("pronk peak {:.1} mm/s", pp.mean_speed_mm_s), (200.0..=400.0).contains(&pp.mean_speed_mm_s));
    o.check(format!("pronk stride at peak {:.3} mm > 1.04", pp.stride_length_mm), pp.stride_length_mm > 1.04);
    o.check(format!("sweep {:.1} s < 600 s", sweep().elapsed.as_secs_f64()), sweep().elapsed < Duration::from_secs(600));
    o.finish(6, "speed-frequency sweep", t0, Duration::from_secs(600));
}

#[test]
fn criterion_07_cost_of_transport() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    // hand oracle: 10 µA × 200 V × 8 channels / (0.32 g · 9.81 · 100 mm/s)
    let oracle = 8.0 * 10e-6 * 200.0 / (0.32e-3 * 9.81 * 0.1);
    let cot: f64 = metrics::cost_of_transport_from_power(8.0 * 10e-6 * 200.0, 0.32, 9.81, 100.0).unwrap();
    o.check(format!("oracle case {cot:.3} (hand {oracle:.3})"), (cot / 50.97 - 1.0).abs() <= 0.001 && (cot / oracle - 1.0).abs() < 1e-12);

    for gait in [GaitName::Trot, GaitName::Pronk] {
        let c = curve(gait);
        let cot_at = |f: f64| c.iter().find(|p| p.frequency_hz == f).and_then(|p| p.cot).unwrap_or(f64::INFINITY);
        let mid: Vec<&SweepPoint<f64>> = c.iter().filter(|p| p.frequency_hz > 1.0 && p.frequency_hz < 280.0).collect();
        let min = mid.iter().filter_map(|p| p.cot.map(|v| (v, p.frequency_hz))).min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
        o.check(format!("{gait} CoT(1 Hz) {:.0} > 100", cot_at(1.0)), cot_at(1.0) > 100.0);
        o.check(format!("{gait} CoT(280 Hz) {:.0} > mid-band minimum", cot_at(280.0)), cot_at(280.0) > min.0);
        if gait == GaitName::Trot {
            o.check(format!("{gait} mid-band minimum {:.1} at {} Hz in [25, 100]", min.0, min.1), (25.0..=100.0).contains(&min.0));
        } else {
            o.check(format!("{gait} mid-band minimum {:.1} at {} Hz", min.0, min.1), min.0.is_finite());
        }
    }
    o.finish(7, "cost of transport", t0, Duration::from_secs(600));
}

#[test]
fn criterion_08_relative_leg_stiffness() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let j = metrics::leg_stiffness_report(&jr(), 9.81);
    let v = metrics::leg_stiffness_report(&presets::hamr_vi::<f64>(), 9.81);
    o.check(format!("hamr-jr k_rel {:.2}", j.k_rel), (j.k_rel / 63.0 - 1.0).abs() <= 0.1);
    o.check(format!("hamr-vi k_rel {:.2}", v.k_rel), (v.k_rel / 11.0 - 1.0).abs() <= 0.1);
    o.finish(8, "relative leg stiffness", t0, Duration::from_secs(1));
}

#[test]
fn criterion_09_payload() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let robot = jr();
    let m = robot.body.body_mass_g;
    let payloads: Vec<f64> = (0..=4).map(|k| k as f64 * m).collect();
    let program = GaitProgram::new(GaitName::Trot, 10.0, 200.0).unwrap();
    let runs = metrics::payload_sweep(&robot, &program, &presets::experiment_config(), &payloads).unwrap();
    let v: Vec<f64> = runs.iter().map(|r| r.outcome.as_ref().unwrap().mean_speed_mm_s).collect();
    let listed = v.iter().map(|s| format!("{s:.2}")).collect::<Vec<_>>().join(", ");
    o.check(format!("1× body mass {:.2} vs unloaded {:.2} mm/s", v[1], v[0]), (v[1] / v[0] - 1.0).abs() <= 0.2);
    o.check(format!("strictly decreasing from 2× [{listed}]"), v[2..].windows(2).all(|w| w[1] < w[0]) && v[2] < v[1]);
    o.finish(9, "payload", t0, Duration::from_secs(60));
}

#[test]
fn criterion_10_sensing_round_trip() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let robot = jr();
    let cfg = presets::experiment_config();
    let program = GaitProgram::new(GaitName::Trot, 160.0, 200.0).unwrap();
    let traj = dynamics::simulate(&robot, &program, &cfg).unwrap();
    let rec = sensing::reconstruct_feet(&traj, &robot.electrical, sensing::default_corner_hz(160.0), cfg.settle_s).unwrap();
    o.check(format!("worst NRMSE {:.2}% ≤ 5%", 100.0 * rec.worst_nrmse()), rec.worst_nrmse() <= 0.05);
    let start = traj.index_at(cfg.settle_s);
    let irms: Vec<f64> = (0..8).map(|c| sensing::rms(&traj.sense_record(c).current_a[start..])).collect();
    let (lo, hi) = irms.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    o.check(format!("RMS current {:.1}–{:.1} µA in [10, 100]", lo * 1e6, hi * 1e6), lo >= 10e-6 && hi <= 100e-6);
    o.finish(10, "sensing round trip", t0, Duration::from_secs(60));
}

#[test]
fn criterion_11_numerical_hygiene() {
    let t0 = Instant::now();
    let mut o = Outcome::new();
    let robot = jr();

    // passive drop from 0.5 mm
    let idle = GaitProgram::new(GaitName::Pronk, 10.0, 0.0).unwrap();
    let cfg = SimConfig { initial_height_mm: Some(0.5), duration_s: 0.2, settle_s: 0.0, ..SimConfig::default() };
    let mut sim = Simulator::new(&robot, &idle, &cfg).unwrap();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut e0 = sim.energy();
    for k in 1..=20_000 {
        sim.step().unwrap();
        if k % 1000 == 0 {
            let e = sim.energy();
            worst = worst.max((e - e0) / e0.abs());
            e0 = e;
        }
    }
    o.check(format!("passive energy max rise {:.2e} per 1000 steps", worst.max(0.0)), worst <= 1e-3);

    // timestep halving at quasi-static and near-peak operating points
    for (gait, f) in [(GaitName::Trot, 10.0), (GaitName::Pronk, 1.0), (GaitName::Trot, 160.0), (GaitName::Pronk, 200.0)] {
        let program = GaitProgram::new(gait, f, 200.0).unwrap();
        let base = presets::experiment_config();
        let dt = base.timestep_for(f);
        let speed = |dt: f64| {
            let cfg = SimConfig { timestep_s: Some(dt), ..base };
            metrics::summarize(&dynamics::simulate(&robot, &program, &cfg).unwrap()).unwrap().mean_speed_mm_s
        };
        let (a, b) = (speed(dt), speed(dt / 2.0));
        o.check(format!("{gait} {f} Hz dt-halving change {:.3}%", 100.0 * (b / a - 1.0).abs()), (b / a - 1.0).abs() < 0.01);
    }

    // bit-identical reruns
    let program = GaitProgram::new(GaitName::Trot, 160.0, 200.0).unwrap();
    let cfg = presets::experiment_config();
    let a = dynamics::simulate(&robot, &program, &cfg).unwrap();
    let b = dynamics::simulate(&robot, &program, &cfg).unwrap();
    let bits = |t: &dynamics::Trajectory<f64>| {
        t.samples.iter().flat_map(|s| [s.body.x_mm.to_bits(), s.body.z_mm.to_bits(), s.body.pitch_rad.to_bits()]).collect::<Vec<_>>()
    };
    o.check("trajectory rerun bit-identical", bits(&a) == bits(&b) && a == b);
    let plan = SweepPlan::new(vec![GaitName::Trot, GaitName::Pronk], vec![40.0, 160.0], 200.0, 2);
    let csv = || {
        let runs = dynamics::sweep(&robot, 0.25, &plan, &cfg, 0).unwrap();
        let mut buf = Vec::new();
        io::write_sweep(&mut buf, &runs).unwrap();
        buf
    };
    o.check("sweep CSV rerun byte-identical", csv() == csv());
    o.finish(11, "numerical hygiene", t0, Duration::from_secs(120));
}
