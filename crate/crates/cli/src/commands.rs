//! Subcommands. Each writes its CSVs into the output directory in a fixed order
//! and lists them on stdout.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use piezoleg_core::dynamics::{self, SweepPlan, Trajectory};
use piezoleg_core::gait::{self, CHANNELS};
use piezoleg_core::metrics::{self, SweepPoint};
use piezoleg_core::scaling::{self, AllometricTransform};
use piezoleg_core::{io, presets, sensing, transmission, Error, GaitName, RobotSpec};

use crate::config::{self, ExperimentConfig};
use crate::plot::{Chart, Series};
use crate::CliError;

pub struct Context {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    pub plots: bool,
    pub preset: Option<String>,
    pub parallel: usize,
}

impl Context {
    pub fn load(config: Option<&Path>, out: Option<PathBuf>, plots: bool, preset: Option<String>, parallel: Option<usize>) -> Result<Self, CliError> {
        let cfg = match config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                ExperimentConfig::parse(&text, &path.display().to_string())?
            }
            None => ExperimentConfig::default(),
        };
        let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
        let plots = plots || cfg.output.plots;
        Ok(Self { cfg, out_dir, plots, preset, parallel: parallel.unwrap_or(0) })
    }

    fn robot(&self, fallback: &str) -> Result<RobotSpec<f64>, CliError> {
        self.cfg.robot(self.preset.as_deref(), fallback)
    }

    fn path(&self, name: &str) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        Ok(path)
    }

    fn csv(&self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> Result<(), Error>) -> Result<(), CliError> {
        let path = self.path(name)?;
        let io_err = |e: String| CliError::Io(format!("{}: {e}", path.display()));
        let file = File::create(&path).map_err(|e| io_err(e.to_string()))?;
        let mut w = BufWriter::new(file);
        write(&mut w).map_err(|e| io_err(e.to_string()))?;
        w.flush().map_err(|e| io_err(e.to_string()))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn svg(&self, name: &str, chart: Chart) -> Result<(), CliError> {
        if !self.plots {
            return Ok(());
        }
        let path = self.path(name)?;
        fs::write(&path, chart.render()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

pub fn preset_list() -> Result<(), CliError> {
    for name in presets::PRESET_NAMES {
        println!("{name}");
    }
    Ok(())
}

/// The preset as a config fragment that can be pasted into `[robot]`.
pub fn preset_show(name: &str) -> Result<(), CliError> {
    let spec: RobotSpec<f64> = presets::preset(name).map_err(|e| CliError::Config(e.to_string()))?;
    print!("{}", config::robot_fragment(&spec)?);
    Ok(())
}

pub fn scale(ctx: &Context) -> Result<(), CliError> {
    let base = ctx.robot("hamr-vi")?;
    let t = ctx.cfg.transform()?;
    // measured ratios only describe the half-size robot built from the large one
    let measured = (base.name == "hamr-vi" && t == AllometricTransform::half()).then(presets::table_measured);
    let rows = scaling::scaling_report(&base, &t, measured.as_ref(), ctx.cfg.transform.stiffness_composition)?;
    ctx.csv("scaling_report.csv", |w| io::write_scaling_report(w, &rows))
}

pub fn characterize(ctx: &Context) -> Result<(), CliError> {
    let robot = ctx.robot("hamr-jr")?;
    let c = &ctx.cfg.characterize;
    let leg = &robot.legs[0];
    let curve = leg.vertical_stiffness;
    ctx.csv("stiffness_curve.csv", |w| io::write_stiffness_curve(w, &curve, c.stiffness_samples))?;
    let lift = transmission::frequency_response(&leg.lift, c.f_lo_hz, c.f_hi_hz, c.points, c.drive_voltage_v)?;
    let swing = transmission::frequency_response(&leg.swing, c.f_lo_hz, c.f_hi_hz, c.points, c.drive_voltage_v)?;
    ctx.csv("frequency_response_lift.csv", |w| io::write_frequency_response(w, &lift))?;
    ctx.csv("frequency_response_swing.csv", |w| io::write_frequency_response(w, &swing))?;
    for (name, r) in [("lift", &lift), ("swing", &swing)] {
        if let Some((f, a)) = r.peak() {
            println!("{name} peak: {f} Hz, {a} mm");
        }
    }
    let n = c.stiffness_samples.max(2);
    let span = curve.leg_height_max_mm - curve.leg_height_min_mm;
    let k: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let z = curve.leg_height_min_mm + span * i as f64 / (n - 1) as f64;
            (z, curve.at_clamped(z))
        })
        .collect();
    ctx.svg(
        "stiffness_curve.svg",
        Chart { title: format!("{} vertical leg stiffness", robot.name), x_label: "leg height (mm)", y_label: "stiffness (N/m)", series: vec![Series::new("k_v", k)] },
    )?;
    ctx.svg(
        "frequency_response.svg",
        Chart {
            title: format!("{} transmission response at {} V", robot.name, c.drive_voltage_v),
            x_label: "frequency (Hz)",
            y_label: "amplitude p-p (mm)",
            series: vec![Series::new("lift", lift.points.clone()), Series::new("swing", swing.points.clone())],
        },
    )
}

fn body_chart(traj: &Trajectory<f64>, title: &str) -> Chart<'static> {
    let x = traj.samples.iter().map(|s| (s.t_s, s.body.x_mm)).collect();
    let z = traj.samples.iter().map(|s| (s.t_s, s.body.z_mm)).collect();
    Chart {
        title: title.to_string(),
        x_label: "time (s)",
        y_label: "position (mm)",
        series: vec![Series::new("x", x), Series::new("z", z)],
    }
}

fn simulate_configured(ctx: &Context, robot: &RobotSpec<f64>) -> Result<Trajectory<f64>, CliError> {
    let program = ctx.cfg.program(robot.actuator.rated_voltage_v)?;
    let sim = ctx.cfg.sim()?;
    Ok(dynamics::simulate(robot, &program, &sim)?)
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let robot = ctx.robot("hamr-jr")?;
    let traj = simulate_configured(ctx, &robot)?;
    let summary = metrics::summarize(&traj)?;
    ctx.csv("trajectory.csv", |w| io::write_trajectory(w, &traj))?;
    ctx.csv("summary.csv", |w| io::write_summaries(w, std::slice::from_ref(&summary)))?;
    println!("{} {} Hz: {} mm/s, stride {} mm", summary.gait, summary.frequency_hz, summary.mean_speed_mm_s, summary.stride_length_mm);
    ctx.svg("trajectory.svg", body_chart(&traj, &format!("{} {} at {} Hz", robot.name, summary.gait, summary.frequency_hz)))
}

fn by_gait(points: &[SweepPoint<f64>], value: impl Fn(&SweepPoint<f64>) -> Option<f64>) -> Vec<Series> {
    let mut gaits: Vec<GaitName> = Vec::new();
    for p in points {
        if !gaits.contains(&p.gait) {
            gaits.push(p.gait);
        }
    }
    gaits
        .into_iter()
        .map(|g| Series::new(g.as_str(), points.iter().filter(|p| p.gait == g).filter_map(|p| Some((p.frequency_hz, value(p)?))).collect()))
        .collect()
}

pub fn sweep(ctx: &Context) -> Result<(), CliError> {
    let robot = ctx.robot("hamr-jr")?;
    let s = &ctx.cfg.sweep;
    ctx.cfg.check_sweep()?;
    let voltage = s.voltage_v.unwrap_or(ctx.cfg.gait.voltage_v);
    // validates the voltage and phase lead shared by every run
    for &g in &s.gaits {
        ctx.cfg.program_for(g, s.frequencies_hz[0], voltage, robot.actuator.rated_voltage_v)?;
    }
    let sim = ctx.cfg.sim()?;
    let plan = SweepPlan { seed: s.seed, height_jitter_mm: s.height_jitter_mm, ..SweepPlan::new(s.gaits.clone(), s.frequencies_hz.clone(), voltage, s.repetitions) };
    let runs = dynamics::sweep(&robot, ctx.cfg.gait.lift_swing_phase_lead, &plan, &sim, ctx.parallel)?;
    let points = metrics::aggregate_sweep(&runs);
    ctx.csv("sweep.csv", |w| io::write_sweep(w, &runs))?;
    ctx.csv("sweep_summary.csv", |w| io::write_sweep_points(w, &points))?;
    let failed = runs.iter().filter(|r| r.outcome.is_err()).count();
    println!("{} runs, {failed} failed", runs.len());
    ctx.svg(
        "sweep_speed.svg",
        Chart { title: format!("{} speed", robot.name), x_label: "frequency (Hz)", y_label: "speed (mm/s)", series: by_gait(&points, |p| Some(p.mean_speed_mm_s)) },
    )?;
    ctx.svg(
        "sweep_cot.svg",
        Chart { title: format!("{} cost of transport", robot.name), x_label: "frequency (Hz)", y_label: "CoT", series: by_gait(&points, |p| p.cot) },
    )
}

pub fn payload(ctx: &Context) -> Result<(), CliError> {
    let robot = ctx.robot("hamr-jr")?;
    let p = &ctx.cfg.payload;
    let payloads = ctx.cfg.payloads_g(&robot)?;
    let program = ctx.cfg.program_for(p.gait, p.frequency_hz, ctx.cfg.gait.voltage_v, robot.actuator.rated_voltage_v)?;
    let sim = ctx.cfg.sim()?;
    let runs = metrics::payload_sweep(&robot, &program, &sim, &payloads)?;
    ctx.csv("payload.csv", |w| io::write_payload(w, &runs))?;
    let ok = |f: fn(&metrics::RunSummary<f64>) -> Option<f64>| -> Vec<(f64, f64)> {
        runs.iter().filter_map(|r| Some((r.payload_g, f(r.outcome.as_ref().ok()?)?))).collect()
    };
    ctx.svg(
        "payload_speed.svg",
        Chart { title: format!("{} speed with payload", robot.name), x_label: "payload (g)", y_label: "speed (mm/s)", series: vec![Series::new("speed", ok(|s| Some(s.mean_speed_mm_s)))] },
    )?;
    ctx.svg(
        "payload_cot.svg",
        Chart { title: format!("{} cost of transport with payload", robot.name), x_label: "payload (g)", y_label: "CoT", series: vec![Series::new("cot", ok(|s| s.cot))] },
    )
}

pub fn sense(ctx: &Context) -> Result<(), CliError> {
    let robot = ctx.robot("hamr-jr")?;
    let traj = simulate_configured(ctx, &robot)?;
    let settle = ctx.cfg.sim()?.settle_s;
    let f = ctx.cfg.gait.frequency_hz;
    let corner = ctx.cfg.sense.corner_hz.unwrap_or_else(|| sensing::default_corner_hz(f));
    if !(corner > 0.0) {
        return Err(CliError::Config(format!("[sense] corner_hz: must be positive, got {corner}")));
    }
    let r = sensing::reconstruct_feet(&traj, &robot.electrical, corner, settle)?;
    let mut rms_current = Vec::with_capacity(CHANNELS);
    for c in 0..CHANNELS {
        let rec = traj.sense_record(c);
        rms_current.push(sensing::rms(&rec.current_a[r.first_sample..]));
        ctx.csv(&format!("sense/{}.csv", gait::channel_label(c)), |w| io::write_sense_record(w, &rec))?;
    }
    let first = &traj.samples[r.first_sample];
    ctx.csv("foot_estimates.csv", |w| io::write_foot_estimates(w, first.t_s, traj.sample_period_s(), &r.truth_mm, &r.estimate_mm))?;
    ctx.csv("sense_summary.csv", |w| io::write_sense_summary(w, &r.nrmse, &rms_current))?;
    println!("worst NRMSE {:.4}", r.worst_nrmse());
    let dt = traj.sample_period_s();
    let series = |name: &str, xs: &[f64]| Series::new(name, xs.iter().enumerate().map(|(i, &x)| (first.t_s + dt * i as f64, x)).collect());
    ctx.svg(
        "foot_estimate.svg",
        Chart {
            title: format!("{} foot offset from current", gait::channel_label(0)),
            x_label: "time (s)",
            y_label: "foot offset (mm)",
            series: vec![series("simulated", &r.truth_mm[0]), series("estimated", &r.estimate_mm[0])],
        },
    )
}

pub fn report(ctx: &Context) -> Result<(), CliError> {
    let mut robots: Vec<RobotSpec<f64>> = match (&ctx.preset, &ctx.cfg.robot.preset, &ctx.cfg.robot.spec) {
        (None, None, None) => presets::PRESET_NAMES.iter().map(|n| ctx.cfg.robot(Some(n), n)).collect::<Result<_, _>>()?,
        _ => vec![ctx.robot("hamr-jr")?],
    };
    robots.sort_by(|a, b| a.name.cmp(&b.name));
    let g = ctx.cfg.sim()?.gravity_m_s2;
    let rows: Vec<_> = robots.iter().map(|r| (r, metrics::leg_stiffness_report(r, g))).collect();
    ctx.csv("leg_stiffness_report.csv", |w| io::write_leg_stiffness_report(w, &rows))
}
