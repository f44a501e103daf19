//! CSV serialization. Every header names its units; numbers use Rust's shortest
//! round-trip formatting, so identical data always produces identical bytes.

use std::io::Write;

use crate::dynamics::{SweepRun, Trajectory};
use crate::error::Error;
use crate::gait::{self, Leg, CHANNELS};
use crate::metrics::{LegStiffnessReport, PayloadRun, RunSummary, SweepPoint};
use crate::num::Scalar;
use crate::robot::RobotSpec;
use crate::scaling::ScalingRow;
use crate::sensing::SenseRecord;
use crate::transmission::{FrequencyResponse, VerticalStiffnessCurve};

fn num<T: Scalar>(x: T) -> String {
    format!("{x}")
}

fn opt<T: Scalar>(x: Option<T>) -> String {
    x.map(num).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_scaling_report<T: Scalar, W: Write>(w: W, rows: &[ScalingRow<T>]) -> Result<(), Error> {
    let mut out = writer(w);
    out.write_record(["quantity", "base", "scaled", "factor_theoretical", "factor_experimental"])?;
    for r in rows {
        out.write_record([r.quantity.label().to_string(), opt(r.base), opt(r.scaled), num(r.factor_theoretical), opt(r.factor_experimental)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_frequency_response<T: Scalar, W: Write>(w: W, r: &FrequencyResponse<T>) -> Result<(), Error> {
    let mut out = writer(w);
    out.write_record(["frequency_hz", "p2p_mm"])?;
    for &(f, a) in &r.points {
        out.write_record([num(f), num(a)])?;
    }
    out.flush()?;
    Ok(())
}

/// `n` evenly spaced samples of the vertical stiffness over its characterised range.
pub fn write_stiffness_curve<T: Scalar, W: Write>(w: W, curve: &VerticalStiffnessCurve<T>, n: usize) -> Result<(), Error> {
    if n < 2 {
        return Err(Error::domain("need at least two stiffness samples"));
    }
    let mut out = writer(w);
    out.write_record(["leg_height_mm", "vertical_stiffness_n_m"])?;
    let span = curve.leg_height_max_mm - curve.leg_height_min_mm;
    for i in 0..n {
        let z = if i == n - 1 {
            curve.leg_height_max_mm
        } else {
            curve.leg_height_min_mm + span * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)
        };
        out.write_record([num(z), num(curve.at_clamped(z))])?;
    }
    out.flush()?;
    Ok(())
}

pub fn trajectory_header() -> Vec<String> {
    let mut h: Vec<String> = ["t_s", "x_mm", "z_mm", "pitch_rad"].iter().map(|s| s.to_string()).collect();
    for leg in Leg::ALL {
        let l = leg.label();
        h.extend([format!("{l}_foot_x_mm"), format!("{l}_foot_z_mm"), format!("{l}_contact"), format!("{l}_slip")]);
    }
    for c in 0..CHANNELS {
        let name = gait::channel_label(c);
        h.extend([format!("{name}_v_volts"), format!("{name}_i_amps")]);
    }
    h
}

pub fn write_trajectory<T: Scalar, W: Write>(w: W, traj: &Trajectory<T>) -> Result<(), Error> {
    let mut out = writer(w);
    out.write_record(trajectory_header())?;
    let mut row = Vec::with_capacity(4 + 4 * 4 + 2 * CHANNELS);
    for s in &traj.samples {
        row.clear();
        row.extend([num(s.t_s), num(s.body.x_mm), num(s.body.z_mm), num(s.body.pitch_rad)]);
        for f in &s.feet {
            row.extend([num(f.x_mm), num(f.z_mm), flag(f.contact).to_string(), flag(f.slip).to_string()]);
        }
        for a in &s.actuators {
            row.extend([num(a.voltage_v), num(a.current_a)]);
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 9] = ["gait", "freq_hz", "voltage_v", "speed_mm_s", "speed_bl_s", "stride_mm", "cot", "aerial_frac", "slip_frac"];

fn summary_fields<T: Scalar>(s: &RunSummary<T>) -> [String; 9] {
    [
        s.gait.to_string(),
        num(s.frequency_hz),
        num(s.voltage_v),
        num(s.mean_speed_mm_s),
        num(s.speed_bl_s),
        num(s.stride_length_mm),
        opt(s.cot),
        num(s.aerial_fraction),
        num(s.slip_fraction),
    ]
}

pub fn write_summaries<T: Scalar, W: Write>(w: W, rows: &[RunSummary<T>]) -> Result<(), Error> {
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for s in rows {
        out.write_record(summary_fields(s))?;
    }
    out.flush()?;
    Ok(())
}

fn status(e: &Error) -> String {
    match e {
        Error::Divergence { .. } => "diverged".into(),
        _ => "error".into(),
    }
}

/// Sweep rows: run id and repetition, then the summary columns and a status.
/// Failed runs keep their identifying columns and leave the metrics empty.
pub fn write_sweep<T: Scalar, W: Write>(w: W, runs: &[SweepRun<T>]) -> Result<(), Error> {
    let mut out = writer(w);
    let mut header = vec!["run_id", "repetition"];
    header.extend(SUMMARY_HEADER);
    header.extend(["status", "message"]);
    out.write_record(&header)?;
    for r in runs {
        let mut row = vec![r.run_id.to_string(), r.repetition.to_string()];
        match &r.outcome {
            Ok(s) => {
                row.extend(summary_fields(s));
                row.extend(["ok".to_string(), String::new()]);
            }
            Err(e) => {
                row.extend([r.gait.to_string(), num(r.frequency_hz)]);
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.extend([status(e), e.to_string()]);
            }
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_payload<T: Scalar, W: Write>(w: W, runs: &[PayloadRun<T>]) -> Result<(), Error> {
    let mut out = writer(w);
    let mut header = vec!["payload_g"];
    header.extend(SUMMARY_HEADER);
    header.extend(["status", "message"]);
    out.write_record(&header)?;
    for r in runs {
        let mut row = vec![num(r.payload_g)];
        match &r.outcome {
            Ok(s) => {
                row.extend(summary_fields(s));
                row.extend(["ok".to_string(), String::new()]);
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.extend([status(e), e.to_string()]);
            }
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sense_record<T: Scalar, W: Write>(w: W, rec: &SenseRecord<T>) -> Result<(), Error> {
    rec.validate()?;
    let mut out = writer(w);
    out.write_record(["t_s", "v_volts", "i_amps"])?;
    for (i, (v, c)) in rec.voltage_v.iter().zip(&rec.current_a).enumerate() {
        out.write_record([num(rec.time(i)), num(*v), num(*c)])?;
    }
    out.flush()?;
    Ok(())
}

/// Estimated against true foot offsets, one (truth, estimate) pair per channel.
pub fn write_foot_estimates<T: Scalar, W: Write>(w: W, t0_s: T, dt_s: T, truth: &[Vec<T>], estimate: &[Vec<T>]) -> Result<(), Error> {
    if truth.len() != estimate.len() || truth.iter().zip(estimate).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::Mismatch("truth and estimate series differ in shape".into()));
    }
    let n = truth.first().map_or(0, Vec::len);
    if truth.iter().any(|t| t.len() != n) {
        return Err(Error::Mismatch("channels differ in length".into()));
    }
    let mut out = writer(w);
    let mut header = vec!["t_s".to_string()];
    for c in 0..truth.len() {
        let name = gait::channel_label(c);
        header.extend([format!("{name}_foot_mm"), format!("{name}_foot_est_mm")]);
    }
    out.write_record(&header)?;
    for i in 0..n {
        let mut row = vec![num(t0_s + dt_s * T::from_usize_lossy(i))];
        for c in 0..truth.len() {
            row.extend([num(truth[c][i]), num(estimate[c][i])]);
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Averaged sweep conditions.
pub fn write_sweep_points<T: Scalar, W: Write>(w: W, points: &[SweepPoint<T>]) -> Result<(), Error> {
    let mut out = writer(w);
    out.write_record(["gait", "frequency_hz", "runs", "failed", "mean_speed_mm_s", "speed_std_mm_s", "stride_length_mm", "cot"])?;
    for p in points {
        out.write_record([
            p.gait.as_str().to_string(),
            num(p.frequency_hz),
            p.runs.to_string(),
            p.failed.to_string(),
            num(p.mean_speed_mm_s),
            num(p.speed_std_mm_s),
            num(p.stride_length_mm),
            opt(p.cot),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Relative leg stiffness next to each robot's reference figures.
pub fn write_leg_stiffness_report<T: Scalar, W: Write>(w: W, robots: &[(&RobotSpec<T>, LegStiffnessReport<T>)]) -> Result<(), Error> {
    let mut out = writer(w);
    out.write_record([
        "robot",
        "body_length_mm",
        "mass_g",
        "vertical_stiffness_n_m",
        "leg_length_mm",
        "k_rel",
        "stride_frequency_hz",
        "stride_length_mm",
        "speed_mm_s",
        "min_cot",
    ])?;
    for (robot, r) in robots {
        let rf = &robot.reference;
        out.write_record([
            robot.name.clone(),
            num(robot.body.body_length_mm),
            num(r.mass_g),
            num(r.vertical_stiffness_n_m),
            num(r.leg_length_mm),
            num(r.k_rel),
            opt(rf.stride_frequency_hz),
            opt(rf.stride_length_mm),
            opt(rf.speed_mm_s),
            opt(rf.min_cot),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-channel reconstruction error and RMS drive current.
pub fn write_sense_summary<T: Scalar, W: Write>(w: W, nrmse: &[T], rms_current_a: &[T]) -> Result<(), Error> {
    if nrmse.len() != rms_current_a.len() {
        return Err(Error::Mismatch(format!("{} error values vs {} currents", nrmse.len(), rms_current_a.len())));
    }
    let mut out = writer(w);
    out.write_record(["channel", "nrmse", "rms_current_a"])?;
    for (c, (e, i)) in nrmse.iter().zip(rms_current_a).enumerate() {
        out.write_record([gait::channel_label(c), num(*e), num(*i)])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::GaitName;

    #[test]
    fn summary_csv_has_fixed_columns() {
        let s = RunSummary {
            gait: GaitName::Pronk,
            frequency_hz: 10.0,
            voltage_v: 200.0,
            mean_speed_mm_s: 12.5,
            speed_bl_s: 0.5,
            stride_length_mm: 1.25,
            cot: None,
            aerial_fraction: 0.0,
            slip_fraction: 0.25,
        };
        let mut buf = Vec::new();
        write_summaries(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "gait,freq_hz,voltage_v,speed_mm_s,speed_bl_s,stride_mm,cot,aerial_frac,slip_frac\npronk,10,200,12.5,0.5,1.25,,0,0.25\n"
        );
    }

    #[test]
    fn trajectory_header_layout() {
        let h = trajectory_header();
        assert_eq!(h.len(), 4 + 16 + 16);
        assert_eq!(h[4], "fl_foot_x_mm");
        assert!(h.iter().any(|c| c == "rr_swing_i_amps"));
    }

    #[test]
    fn stiffness_curve_hits_endpoints() {
        let c = VerticalStiffnessCurve { leg_height_min_mm: 0.0, leg_height_max_mm: 1.04, k_at_lowest_n_m: 72.11, k_at_highest_n_m: 34.52, shape_exponent: 1.0 };
        let mut buf = Vec::new();
        write_stiffness_curve(&mut buf, &c, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[1], "0,72.11");
        assert_eq!(lines[5], "1.04,34.52");
    }
}
