//! Oculomotor event detection: dispersion-threshold fixations (I-DT) and
//! velocity-threshold saccades (I-VT), plus the per-trial metric summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{GazeSample, SignalConfig, TrialWindow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub start_t: f64,
    pub end_t: f64,
    /// Mean position, normalized screen coordinates.
    pub centroid: (f64, f64),
    /// end_t - start_t, milliseconds.
    pub duration: f64,
    /// max dx + max dy over the window, degrees of visual angle.
    pub dispersion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saccade {
    pub start_t: f64,
    pub end_t: f64,
    /// Angular distance between run endpoints, degrees.
    pub amplitude: f64,
    pub duration: f64,
    /// Max angular velocity inside the run, degrees/s.
    pub peak_velocity: f64,
    /// (peak velocity - onset velocity) / rise time, degrees/s^2; zero when
    /// the peak sits on the onset sample.
    pub mean_acceleration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventConfig {
    pub dispersion_threshold_deg: f64,
    pub min_fixation_ms: f64,
    pub velocity_threshold_deg_s: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            dispersion_threshold_deg: 1.0,
            min_fixation_ms: 100.0,
            velocity_threshold_deg_s: 30.0,
        }
    }
}

impl EventConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dispersion_threshold_deg", self.dispersion_threshold_deg),
            ("min_fixation_ms", self.min_fixation_ms),
            ("velocity_threshold_deg_s", self.velocity_threshold_deg_s),
        ] {
            if v <= 0.0 {
                return Err(Error::OutOfRange {
                    what: name,
                    value: v,
                    expected: "> 0",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventSequence {
    pub fixations: Vec<Fixation>,
    pub saccades: Vec<Saccade>,
}

/// Both detectors over one cleaned trial.
pub fn detect_events(trial: &TrialWindow, ev: &EventConfig, sig: &SignalConfig) -> EventSequence {
    EventSequence {
        fixations: detect_fixations(trial, ev, sig),
        saccades: detect_saccades(trial, ev, sig),
    }
}

/// Small-angle conversion from a normalized screen point to degrees of
/// visual angle, origin at screen center. Linear in each coordinate, so
/// dispersion thresholds scale exactly with coordinate scaling.
pub fn to_visual_angle(p: (f64, f64), cfg: &SignalConfig) -> (f64, f64) {
    let screen_height_cm = cfg.screen_width_cm * cfg.screen_height_px / cfg.screen_width_px;
    let dx_cm = (p.0 - 0.5) * cfg.screen_width_cm;
    let dy_cm = (p.1 - 0.5) * screen_height_cm;
    let k = 180.0 / std::f64::consts::PI / cfg.viewing_distance_cm;
    (dx_cm * k, dy_cm * k)
}

fn angle_positions(samples: &[GazeSample], cfg: &SignalConfig) -> Vec<(f64, f64)> {
    samples
        .iter()
        .map(|s| to_visual_angle((s.x, s.y), cfg))
        .collect()
}

/// Dispersion of a window in degrees: max dx + max dy.
fn dispersion(angles: &[(f64, f64)]) -> f64 {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for &(x, y) in angles {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    (max_x - min_x) + (max_y - min_y)
}

/// I-DT: slide a window covering at least `min_fixation_ms`; if its
/// dispersion is under threshold, grow it right as far as possible and
/// emit a fixation, otherwise advance one sample.
pub fn detect_fixations(trial: &TrialWindow, ev: &EventConfig, sig: &SignalConfig) -> Vec<Fixation> {
    let samples = &trial.samples;
    let n = samples.len();
    if n < 2 {
        return Vec::new();
    }
    let angles = angle_positions(samples, sig);
    let mut fixations = Vec::new();
    let mut start = 0usize;

    while start < n {
        // Smallest window whose time span reaches the minimum duration.
        let mut end = start;
        while end + 1 < n && samples[end].t - samples[start].t < ev.min_fixation_ms {
            end += 1;
        }
        if samples[end].t - samples[start].t < ev.min_fixation_ms {
            break; // tail too short for any further fixation
        }
        if dispersion(&angles[start..=end]) <= ev.dispersion_threshold_deg {
            while end + 1 < n
                && dispersion(&angles[start..=end + 1]) <= ev.dispersion_threshold_deg
            {
                end += 1;
            }
            let window = &samples[start..=end];
            let len = window.len() as f64;
            let cx = window.iter().map(|s| s.x).sum::<f64>() / len;
            let cy = window.iter().map(|s| s.y).sum::<f64>() / len;
            fixations.push(Fixation {
                start_t: samples[start].t,
                end_t: samples[end].t,
                centroid: (cx, cy),
                duration: samples[end].t - samples[start].t,
                dispersion: dispersion(&angles[start..=end]),
            });
            start = end + 1;
        } else {
            start += 1;
        }
    }
    fixations
}

/// Per-sample angular velocity in degrees/s: central differences, with
/// forward/backward differences at the endpoints.
pub fn angular_velocities(trial: &TrialWindow, sig: &SignalConfig) -> Vec<f64> {
    let samples = &trial.samples;
    let n = samples.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let angles = angle_positions(samples, sig);
    let dist = |a: (f64, f64), b: (f64, f64)| ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    (0..n)
        .map(|k| {
            let (i, j) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            let dt_s = (samples[j].t - samples[i].t) / 1000.0;
            if dt_s > 0.0 {
                dist(angles[i], angles[j]) / dt_s
            } else {
                0.0
            }
        })
        .collect()
}

/// I-VT: maximal runs of samples whose angular velocity exceeds the
/// threshold become saccades.
pub fn detect_saccades(trial: &TrialWindow, ev: &EventConfig, sig: &SignalConfig) -> Vec<Saccade> {
    let samples = &trial.samples;
    let n = samples.len();
    if n < 2 {
        return Vec::new();
    }
    let angles = angle_positions(samples, sig);
    let vel = angular_velocities(trial, sig);
    let dist = |a: (f64, f64), b: (f64, f64)| ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();

    let mut saccades = Vec::new();
    let mut k = 0usize;
    while k < n {
        if vel[k] > ev.velocity_threshold_deg_s {
            let run_start = k;
            while k < n && vel[k] > ev.velocity_threshold_deg_s {
                k += 1;
            }
            let run_end = k - 1;
            let onset_v = vel[run_start];
            let (peak_idx, peak_v) = (run_start..=run_end)
                .map(|i| (i, vel[i]))
                .fold((run_start, f64::NEG_INFINITY), |acc, cur| {
                    if cur.1 > acc.1 {
                        cur
                    } else {
                        acc
                    }
                });
            let rise_s = (samples[peak_idx].t - samples[run_start].t) / 1000.0;
            let mean_acceleration = if rise_s > 0.0 {
                (peak_v - onset_v) / rise_s
            } else {
                0.0
            };
            saccades.push(Saccade {
                start_t: samples[run_start].t,
                end_t: samples[run_end].t,
                amplitude: dist(angles[run_start], angles[run_end]),
                duration: (samples[run_end].t - samples[run_start].t).max(
                    // A one-sample run still spans one sample interval.
                    if run_start > 0 {
                        samples[run_start].t - samples[run_start - 1].t
                    } else if run_end + 1 < n {
                        samples[run_end + 1].t - samples[run_end].t
                    } else {
                        0.0
                    },
                ),
                peak_velocity: peak_v,
                mean_acceleration,
            });
        } else {
            k += 1;
        }
    }
    saccades
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FixationStats {
    pub dur_mean: f64,
    pub dur_median: f64,
    pub dur_var: f64,
    pub disp_mean: f64,
    pub disp_median: f64,
    pub disp_var: f64,
    /// True when there were no fixations and all fields are zero.
    pub empty: bool,
}

fn mean(vs: &[f64]) -> f64 {
    vs.iter().sum::<f64>() / vs.len() as f64
}

/// Population variance; zero for singletons.
fn pop_var(vs: &[f64]) -> f64 {
    let m = mean(vs);
    vs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vs.len() as f64
}

fn median(vs: &[f64]) -> f64 {
    let mut sorted = vs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn fixation_stats(fixations: &[Fixation]) -> FixationStats {
    if fixations.is_empty() {
        return FixationStats {
            empty: true,
            ..Default::default()
        };
    }
    let durs: Vec<f64> = fixations.iter().map(|f| f.duration).collect();
    let disps: Vec<f64> = fixations.iter().map(|f| f.dispersion).collect();
    FixationStats {
        dur_mean: mean(&durs),
        dur_median: median(&durs),
        dur_var: pop_var(&durs),
        disp_mean: mean(&disps),
        disp_median: median(&disps),
        disp_var: pop_var(&disps),
        empty: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupilStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub var: f64,
}

/// Statistics of the (baseline-corrected) pupil over valid samples.
pub fn pupil_stats(trial: &TrialWindow) -> Result<PupilStats> {
    let vals: Vec<f64> = trial
        .samples
        .iter()
        .filter(|s| s.valid)
        .map(|s| s.pupil)
        .collect();
    if vals.is_empty() {
        return Err(Error::NoValidSamples(format!(
            "trial `{}`",
            trial.trial_id
        )));
    }
    Ok(PupilStats {
        mean: mean(&vals),
        min: vals.iter().cloned().fold(f64::INFINITY, f64::min),
        max: vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        var: pop_var(&vals),
    })
}
