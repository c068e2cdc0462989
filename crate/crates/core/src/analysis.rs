//! Frequency, amplitude, and decay extraction from recorded trajectories.
//!
//! Collision times arrive at random, so the workhorse is a Lomb–Scargle
//! periodogram for unevenly sampled data, cross-checkable against a
//! resample-then-transform estimate. Amplitude tracking uses windowed
//! oscillation ranges, and melting curves compare those amplitudes across
//! temperatures against a zero-temperature reference run.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::record::{same_except_temperature, TrajectoryRecord};

/// Minimum number of post-transient samples a periodogram needs.
pub const MIN_PERIODOGRAM_POINTS: usize = 16;

/// Minimum number of samples per amplitude window.
pub const MIN_WINDOW_POINTS: usize = 4;

/// How a [`Periodogram`]'s power values were estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LombScargle,
    ResampleFft,
}

/// Spectral power over a grid of angular frequencies.
#[derive(Debug, Clone, Serialize)]
pub struct Periodogram {
    /// Angular frequencies, strictly increasing.
    pub frequencies: Vec<f64>,
    /// Nonnegative spectral power, same length as `frequencies`.
    pub power: Vec<f64>,
    pub method: Method,
}

/// Windowed oscillation amplitude along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeSeries {
    pub window_centers: Vec<f64>,
    /// Half the max−min range per window — the amplitude of a pure
    /// sinusoid filling the window.
    pub peak_to_peak: Vec<f64>,
}

/// One row of a melting curve: the oscillation amplitude at probe time `t`
/// for inverse temperature `beta`, relative to the zero-temperature
/// reference.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeltingPoint {
    pub beta: f64,
    pub t: f64,
    pub ratio: f64,
}

/// Default angular-frequency grid: `n_points` points spanning
/// (0, π/median-sampling-interval], a Nyquist-like bound for unevenly
/// sampled data.
pub fn angular_frequency_grid(times: &[f64], n_points: usize) -> Result<Vec<f64>> {
    if times.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "frequency grid needs at least 2 sample times, got {}",
            times.len()
        )));
    }
    if n_points == 0 {
        return Err(Error::InvalidValue("frequency grid needs at least one point".into()));
    }
    let mut intervals: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    if intervals.iter().any(|dt| !(*dt > 0.0)) {
        return Err(Error::InvalidValue("sample times must be strictly increasing".into()));
    }
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = intervals[intervals.len() / 2];
    let top = std::f64::consts::PI / median;
    Ok((1..=n_points).map(|k| top * k as f64 / n_points as f64).collect())
}

/// Number of grid points in [`angular_frequency_grid`]'s default grid.
pub const DEFAULT_GRID_POINTS: usize = 512;

fn post_transient<'a>(
    record: &'a TrajectoryRecord,
    observable: &str,
    transient_fraction: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(Error::InvalidValue(format!(
            "transient fraction must lie in [0, 1), got {transient_fraction}"
        )));
    }
    let series: &'a [f64] = record
        .series(observable)
        .ok_or_else(|| Error::UnknownObservable(observable.to_string()))?;
    let t_final = record.final_time();
    let cutoff = transient_fraction * t_final;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (&t, &v) in record.times.iter().zip(series) {
        if t >= cutoff {
            times.push(t);
            values.push(v);
        }
    }
    Ok((times, values))
}

fn lomb_scargle_power(times: &[f64], values: &[f64], omega: f64) -> f64 {
    // Classic phase-shifted form: the shift makes the estimate independent
    // of the time origin.
    let (mut s2, mut c2) = (0.0, 0.0);
    for &t in times {
        s2 += (2.0 * omega * t).sin();
        c2 += (2.0 * omega * t).cos();
    }
    let tau = s2.atan2(c2) / (2.0 * omega);
    let (mut yc, mut ys, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in times.iter().zip(values) {
        let phase = omega * (t - tau);
        let (sin, cos) = phase.sin_cos();
        yc += y * cos;
        ys += y * sin;
        cc += cos * cos;
        ss += sin * sin;
    }
    let mut power = 0.0;
    if cc > 1e-12 {
        power += yc * yc / cc;
    }
    if ss > 1e-12 {
        power += ys * ys / ss;
    }
    0.5 * power
}

fn validated_grid(freq_grid: &[f64]) -> Result<()> {
    if freq_grid.is_empty() {
        return Err(Error::InvalidValue("frequency grid is empty".into()));
    }
    if freq_grid[0] <= 0.0 || freq_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidValue(
            "frequency grid must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Lomb–Scargle periodogram of one recorded observable over an angular
/// frequency grid. The first `transient_fraction` of the recorded time span
/// is discarded and the remaining series is mean-subtracted, so a constant
/// series has vanishing power everywhere.
pub fn periodogram(
    record: &TrajectoryRecord,
    observable: &str,
    transient_fraction: f64,
    freq_grid: &[f64],
) -> Result<Periodogram> {
    validated_grid(freq_grid)?;
    let (times, mut values) = post_transient(record, observable, transient_fraction)?;
    if times.len() < MIN_PERIODOGRAM_POINTS {
        return Err(Error::InsufficientData(format!(
            "periodogram needs at least {MIN_PERIODOGRAM_POINTS} post-transient points, got {}",
            times.len()
        )));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in &mut values {
        *v -= mean;
    }
    let power: Vec<f64> = freq_grid
        .iter()
        .map(|&omega| lomb_scargle_power(&times, &values, omega))
        .collect();
    Ok(Periodogram { frequencies: freq_grid.to_vec(), power, method: Method::LombScargle })
}

/// Independent spectral estimate: linearly resample the post-transient
/// series onto a uniform grid of equal length, then evaluate the discrete
/// transform power on the same frequency grid. Used to cross-check the
/// Lomb–Scargle peak location.
pub fn periodogram_resampled(
    record: &TrajectoryRecord,
    observable: &str,
    transient_fraction: f64,
    freq_grid: &[f64],
) -> Result<Periodogram> {
    validated_grid(freq_grid)?;
    let (times, mut values) = post_transient(record, observable, transient_fraction)?;
    if times.len() < MIN_PERIODOGRAM_POINTS {
        return Err(Error::InsufficientData(format!(
            "periodogram needs at least {MIN_PERIODOGRAM_POINTS} post-transient points, got {}",
            times.len()
        )));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in &mut values {
        *v -= mean;
    }
    let n = times.len();
    let t0 = times[0];
    let span = times[n - 1] - t0;
    let dt = span / (n - 1) as f64;
    // Linear interpolation onto the uniform grid.
    let mut uniform = Vec::with_capacity(n);
    let mut src = 0;
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        while src + 2 < times.len() && times[src + 1] < t {
            src += 1;
        }
        let (ta, tb) = (times[src], times[src + 1]);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        uniform.push(values[src] * (1.0 - w) + values[src + 1] * w);
    }
    let power: Vec<f64> = freq_grid
        .iter()
        .map(|&omega| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, &y) in uniform.iter().enumerate() {
                let phase = omega * k as f64 * dt;
                re += y * phase.cos();
                im += y * phase.sin();
            }
            (re * re + im * im) / n as f64
        })
        .collect();
    Ok(Periodogram { frequencies: freq_grid.to_vec(), power, method: Method::ResampleFft })
}

/// Peak of a periodogram with 3-point parabolic interpolation around the
/// argmax. Errors on a flat spectrum, where no peak is meaningful.
pub fn dominant_frequency(p: &Periodogram) -> Result<(f64, f64)> {
    if p.frequencies.is_empty() {
        return Err(Error::InsufficientData("empty periodogram".into()));
    }
    let (mut best, mut best_power) = (0, f64::NEG_INFINITY);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, &pw) in p.power.iter().enumerate() {
        if pw > best_power {
            best = k;
            best_power = pw;
        }
        lo = lo.min(pw);
        hi = hi.max(pw);
    }
    if hi <= 1e-14 * (1.0 + lo.abs()) || (hi - lo) <= 1e-14 * (1.0 + hi.abs()) {
        return Err(Error::Numerical("flat spectrum — no dominant frequency".into()));
    }
    if best == 0 || best + 1 == p.power.len() {
        return Ok((p.frequencies[best], best_power));
    }
    let (pm, p0, pp) = (p.power[best - 1], p.power[best], p.power[best + 1]);
    let denom = pm - 2.0 * p0 + pp;
    let delta = if denom.abs() > 1e-300 { (0.5 * (pm - pp) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let step = 0.5 * (p.frequencies[best + 1] - p.frequencies[best - 1]);
    Ok((p.frequencies[best] + delta * step, best_power))
}

/// Windowed oscillation amplitude over the whole recorded series: the
/// record is cut into consecutive windows of the given duration and each
/// reports half its max−min range at its center time. No transient is
/// discarded — melting probes need the early windows too.
pub fn amplitude_envelope(
    record: &TrajectoryRecord,
    observable: &str,
    window: f64,
) -> Result<AmplitudeSeries> {
    if !(window > 0.0) {
        return Err(Error::InvalidValue(format!("window must be positive, got {window}")));
    }
    let series = record
        .series(observable)
        .ok_or_else(|| Error::UnknownObservable(observable.to_string()))?;
    if record.times.is_empty() {
        return Err(Error::InsufficientData("empty record".into()));
    }
    let t0 = record.times[0];
    let t_final = record.final_time();
    if window > t_final - t0 {
        return Err(Error::InvalidValue(format!(
            "window {window} exceeds the recorded span {}",
            t_final - t0
        )));
    }
    let n_windows = ((t_final - t0) / window).floor() as usize;
    let mut centers = Vec::with_capacity(n_windows);
    let mut amplitudes = Vec::with_capacity(n_windows);
    let mut idx = 0;
    for k in 0..n_windows {
        let start = t0 + k as f64 * window;
        let end = start + window;
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut count = 0;
        while idx < record.times.len() && record.times[idx] < end {
            if record.times[idx] >= start {
                min = min.min(series[idx]);
                max = max.max(series[idx]);
                count += 1;
            }
            idx += 1;
        }
        if count < MIN_WINDOW_POINTS {
            return Err(Error::InsufficientData(format!(
                "window [{start}, {end}) holds {count} samples; need {MIN_WINDOW_POINTS} — \
                 widen the window"
            )));
        }
        centers.push(start + window / 2.0);
        amplitudes.push((max - min) / 2.0);
    }
    Ok(AmplitudeSeries { window_centers: centers, peak_to_peak: amplitudes })
}

fn window_amplitude(
    record: &TrajectoryRecord,
    observable: &str,
    center: f64,
    window: f64,
) -> Result<f64> {
    let series = record
        .series(observable)
        .ok_or_else(|| Error::UnknownObservable(observable.to_string()))?;
    let (start, end) = (center - window / 2.0, center + window / 2.0);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut count = 0;
    for (&t, &v) in record.times.iter().zip(series) {
        if t >= start && t < end {
            min = min.min(v);
            max = max.max(v);
            count += 1;
        }
    }
    if count < MIN_WINDOW_POINTS {
        return Err(Error::InsufficientData(format!(
            "probe window around t = {center} holds {count} samples; need {MIN_WINDOW_POINTS}"
        )));
    }
    Ok((max - min) / 2.0)
}

/// Oscillation amplitude at each probe time for each finite-temperature
/// record, relative to the zero-temperature reference, as windowed ranges
/// of the given duration centered on the probes. All records must share
/// their configuration except the bath temperature.
pub fn melting_curve(
    records: &[&TrajectoryRecord],
    reference: &TrajectoryRecord,
    observable: &str,
    probe_times: &[f64],
    window: f64,
) -> Result<Vec<MeltingPoint>> {
    if !(window > 0.0) {
        return Err(Error::InvalidValue(format!("window must be positive, got {window}")));
    }
    if probe_times.is_empty() {
        return Err(Error::InsufficientData("no probe times given".into()));
    }
    let mut curve = Vec::with_capacity(records.len() * probe_times.len());
    for record in records {
        if !same_except_temperature(&record.config, &reference.config) {
            return Err(Error::ConfigMismatch(
                "melting records must match the reference except in temperature".into(),
            ));
        }
        let beta = record
            .config
            .bath
            .as_ref()
            .map(|b| b.beta)
            .or(record.config.damping.as_ref().map(|d| d.n_bar))
            .ok_or_else(|| {
                Error::ConfigMismatch("record carries no temperature parameter".into())
            })?;
        for &t in probe_times {
            let warm = window_amplitude(record, observable, t, window)?;
            let cold = window_amplitude(reference, observable, t, window)?;
            if cold <= 0.0 {
                return Err(Error::Numerical(format!(
                    "reference amplitude vanishes at t = {t}; ratio undefined"
                )));
            }
            curve.push(MeltingPoint { beta, t, ratio: warm / cold });
        }
    }
    Ok(curve)
}
