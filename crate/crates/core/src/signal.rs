//! Raw gaze-stream cleaning: blink/loss filtering, coordinate
//! normalization, and neutral-trial pupil baseline correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One eye-tracker sample. Coordinates are raw device pixels on input and
/// normalized [0,1]^2 after [`normalize_gaze`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    /// Milliseconds since trial onset.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Pupil diameter in millimeters (baseline-corrected values may be negative).
    pub pupil: f64,
    /// Tracker validity flag.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusEmotion {
    Anger,
    Disgust,
    Fear,
    Happy,
    Neutral,
    Sad,
}

impl StimulusEmotion {
    pub const ALL: [StimulusEmotion; 6] = [
        StimulusEmotion::Anger,
        StimulusEmotion::Disgust,
        StimulusEmotion::Fear,
        StimulusEmotion::Happy,
        StimulusEmotion::Neutral,
        StimulusEmotion::Sad,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StimulusEmotion::Anger => "anger",
            StimulusEmotion::Disgust => "disgust",
            StimulusEmotion::Fear => "fear",
            StimulusEmotion::Happy => "happy",
            StimulusEmotion::Neutral => "neutral",
            StimulusEmotion::Sad => "sad",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "anger" | "angry" => Ok(StimulusEmotion::Anger),
            "disgust" => Ok(StimulusEmotion::Disgust),
            "fear" => Ok(StimulusEmotion::Fear),
            "happy" => Ok(StimulusEmotion::Happy),
            "neutral" => Ok(StimulusEmotion::Neutral),
            "sad" => Ok(StimulusEmotion::Sad),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }

    /// Index in the documented one-hot order.
    pub fn index(&self) -> usize {
        match self {
            StimulusEmotion::Anger => 0,
            StimulusEmotion::Disgust => 1,
            StimulusEmotion::Fear => 2,
            StimulusEmotion::Happy => 3,
            StimulusEmotion::Neutral => 4,
            StimulusEmotion::Sad => 5,
        }
    }
}

/// One stimulus presentation: a window of the session stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialWindow {
    pub trial_id: String,
    pub stimulus_emotion: StimulusEmotion,
    /// Session-time window in milliseconds.
    pub start_t: f64,
    pub end_t: f64,
    /// Samples sorted by `t` (trial-relative milliseconds).
    pub samples: Vec<GazeSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentReading {
    /// Ambient illuminance in lux.
    pub lux: f64,
    /// Room temperature in degrees Celsius.
    pub temp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecording {
    pub participant_id: String,
    pub trials: Vec<TrialWindow>,
    pub environment: EnvironmentReading,
    /// Nominal tracker rate in Hz.
    pub sample_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalConfig {
    /// Padding removed around each blink/loss run, milliseconds per side.
    pub blink_pad_ms: f64,
    /// Trials losing more than this fraction of samples are dropped by the pipeline.
    pub max_loss_fraction: f64,
    pub screen_width_px: f64,
    pub screen_height_px: f64,
    pub screen_width_cm: f64,
    pub viewing_distance_cm: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            blink_pad_ms: 100.0,
            max_loss_fraction: 0.30,
            screen_width_px: 1920.0,
            screen_height_px: 1080.0,
            screen_width_cm: 53.1,
            viewing_distance_cm: 65.0,
        }
    }
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blink_pad_ms < 0.0 {
            return Err(Error::OutOfRange {
                what: "blink_pad_ms",
                value: self.blink_pad_ms,
                expected: ">= 0",
            });
        }
        if !(self.max_loss_fraction > 0.0 && self.max_loss_fraction < 1.0) {
            return Err(Error::OutOfRange {
                what: "max_loss_fraction",
                value: self.max_loss_fraction,
                expected: "in (0, 1)",
            });
        }
        for (name, v) in [
            ("screen_width_px", self.screen_width_px),
            ("screen_height_px", self.screen_height_px),
            ("screen_width_cm", self.screen_width_cm),
            ("viewing_distance_cm", self.viewing_distance_cm),
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

fn is_blink(s: &GazeSample) -> bool {
    !s.valid || s.pupil <= 0.0
}

/// Removes blink/tracking-loss runs plus `blink_pad_ms` of neighbors on
/// each side. Returns the cleaned trial and the removed fraction.
pub fn filter_quality(trial: &TrialWindow, cfg: &SignalConfig) -> Result<(TrialWindow, f64)> {
    if trial.samples.is_empty() {
        return Err(Error::NoSamples {
            trial_id: trial.trial_id.clone(),
        });
    }
    let n = trial.samples.len();
    let mut drop = vec![false; n];

    let mut i = 0;
    while i < n {
        if is_blink(&trial.samples[i]) {
            let run_start = i;
            while i < n && is_blink(&trial.samples[i]) {
                i += 1;
            }
            let run_end = i - 1;
            let lo = trial.samples[run_start].t - cfg.blink_pad_ms;
            let hi = trial.samples[run_end].t + cfg.blink_pad_ms;
            for (j, s) in trial.samples.iter().enumerate() {
                if s.t >= lo && s.t <= hi {
                    drop[j] = true;
                }
            }
        } else {
            i += 1;
        }
    }

    let kept: Vec<GazeSample> = trial
        .samples
        .iter()
        .zip(&drop)
        .filter(|(_, d)| !**d)
        .map(|(s, _)| *s)
        .collect();
    let removed = n - kept.len();
    let loss_fraction = removed as f64 / n as f64;

    if kept.is_empty() {
        return Err(Error::EmptyTrial {
            trial_id: trial.trial_id.clone(),
        });
    }

    Ok((
        TrialWindow {
            samples: kept,
            ..trial.clone()
        },
        loss_fraction,
    ))
}

/// Divides raw pixel coordinates by the screen dimensions. Samples that
/// land outside [0,1]^2 are clamped and flagged invalid.
pub fn normalize_gaze(trial: &TrialWindow, cfg: &SignalConfig) -> Result<TrialWindow> {
    if cfg.screen_width_px <= 0.0 || cfg.screen_height_px <= 0.0 {
        return Err(Error::ZeroScreenDimension);
    }
    let samples = trial
        .samples
        .iter()
        .map(|s| {
            let x = s.x / cfg.screen_width_px;
            let y = s.y / cfg.screen_height_px;
            let off_screen = !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y);
            GazeSample {
                x: x.clamp(0.0, 1.0),
                y: y.clamp(0.0, 1.0),
                valid: s.valid && !off_screen,
                ..*s
            }
        })
        .collect();
    Ok(TrialWindow {
        samples,
        ..trial.clone()
    })
}

/// Mean pupil diameter over all valid samples of the participant's
/// neutral trials.
pub fn pupil_baseline(session: &SessionRecording) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for trial in &session.trials {
        if trial.stimulus_emotion != StimulusEmotion::Neutral {
            continue;
        }
        for s in &trial.samples {
            if s.valid && s.pupil > 0.0 {
                sum += s.pupil;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::NoNeutralTrials {
            participant_id: session.participant_id.clone(),
        });
    }
    Ok(sum / count as f64)
}

/// Fallback when no neutral trial survives filtering: mean over all
/// valid samples of the whole session.
pub fn pupil_baseline_fallback(session: &SessionRecording) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for trial in &session.trials {
        for s in &trial.samples {
            if s.valid && s.pupil > 0.0 {
                sum += s.pupil;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::NoValidSamples(format!(
            "session `{}`",
            session.participant_id
        )));
    }
    Ok(sum / count as f64)
}

/// Subtracts the baseline from every valid sample's pupil diameter.
pub fn correct_pupil(trial: &TrialWindow, baseline: f64) -> TrialWindow {
    let samples = trial
        .samples
        .iter()
        .map(|s| {
            if s.valid {
                GazeSample {
                    pupil: s.pupil - baseline,
                    ..*s
                }
            } else {
                *s
            }
        })
        .collect();
    TrialWindow {
        samples,
        ..trial.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(t: f64, valid: bool) -> GazeSample {
        GazeSample {
            t,
            x: 100.0,
            y: 100.0,
            pupil: if valid { 3.0 } else { 0.0 },
            valid,
        }
    }

    fn trial(samples: Vec<GazeSample>) -> TrialWindow {
        TrialWindow {
            trial_id: "t0".into(),
            stimulus_emotion: StimulusEmotion::Neutral,
            start_t: 0.0,
            end_t: samples.last().map(|s| s.t).unwrap_or(0.0),
            samples,
        }
    }

    #[test]
    fn all_valid_is_identity() {
        let t = trial((0..50).map(|k| sample(k as f64 * 10.0, true)).collect());
        let (out, loss) = filter_quality(&t, &SignalConfig::default()).unwrap();
        assert_eq!(out, t);
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn blink_run_with_pad_removes_35_samples() {
        // dt 6.6 ms (~151.5 Hz): 100 ms pad covers exactly 15 samples per
        // side (15*6.6 = 99 <= 100 < 16*6.6), so 5 + 2*15 = 35 go.
        let dt = 6.6;
        let mut samples: Vec<GazeSample> = (0..200).map(|k| sample(k as f64 * dt, true)).collect();
        for s in samples.iter_mut().skip(100).take(5) {
            s.valid = false;
            s.pupil = 0.0;
        }
        let t = trial(samples);
        let (out, loss) = filter_quality(&t, &SignalConfig::default()).unwrap();
        assert_eq!(t.samples.len() - out.samples.len(), 35);
        assert!((loss - 35.0 / 200.0).abs() < 1e-12);
    }

    #[test]
    fn pad_boundary_is_inclusive() {
        // dt 10 ms exactly representable: the samples at exactly +-100 ms
        // from the run are removed too.
        let mut samples: Vec<GazeSample> = (0..41).map(|k| sample(k as f64 * 10.0, true)).collect();
        samples[20].valid = false;
        let t = trial(samples);
        let (out, _) = filter_quality(&t, &SignalConfig::default()).unwrap();
        // run at t=200, pad [100, 300]: samples 10..=30 removed -> 21 gone.
        assert_eq!(out.samples.len(), 41 - 21);
        assert!(out.samples.iter().all(|s| s.t < 100.0 || s.t > 300.0));
    }

    #[test]
    fn over_threshold_loss_is_reported() {
        let mut samples: Vec<GazeSample> = (0..10).map(|k| sample(k as f64 * 500.0, true)).collect();
        for s in samples.iter_mut().take(4) {
            s.valid = false;
        }
        let t = trial(samples);
        let cfg = SignalConfig::default();
        let (_, loss) = filter_quality(&t, &cfg).unwrap();
        assert!((loss - 0.40).abs() < 1e-12);
        // The pipeline drops the trial when loss exceeds the configured cap.
        assert!(loss > cfg.max_loss_fraction);
    }

    #[test]
    fn all_invalid_errors() {
        let t = trial((0..5).map(|k| sample(k as f64, false)).collect());
        assert!(matches!(
            filter_quality(&t, &SignalConfig::default()),
            Err(Error::EmptyTrial { .. })
        ));
    }

    #[test]
    fn normalize_midpoint_and_origin() {
        let mut t = trial(vec![sample(0.0, true), sample(10.0, true)]);
        t.samples[0].x = 960.0;
        t.samples[0].y = 540.0;
        t.samples[1].x = 0.0;
        t.samples[1].y = 0.0;
        let out = normalize_gaze(&t, &SignalConfig::default()).unwrap();
        assert_eq!((out.samples[0].x, out.samples[0].y), (0.5, 0.5));
        assert_eq!((out.samples[1].x, out.samples[1].y), (0.0, 0.0));
        assert!(out.samples[0].valid && out.samples[1].valid);
    }

    #[test]
    fn normalize_clamps_and_flags_off_screen() {
        let mut t = trial(vec![sample(0.0, true)]);
        t.samples[0].x = 2000.0;
        t.samples[0].y = 540.0;
        let out = normalize_gaze(&t, &SignalConfig::default()).unwrap();
        assert_eq!(out.samples[0].x, 1.0);
        assert!(!out.samples[0].valid);
    }

    fn session(trials: Vec<TrialWindow>) -> SessionRecording {
        SessionRecording {
            participant_id: "p0".into(),
            trials,
            environment: EnvironmentReading { lux: 300.0, temp: 22.0 },
            sample_rate: 150.0,
        }
    }

    #[test]
    fn baseline_is_mean_over_neutral_trials() {
        let mut t1 = trial((0..4).map(|k| sample(k as f64, true)).collect());
        for s in &mut t1.samples {
            s.pupil = 2.0;
        }
        let mut t2 = trial((0..4).map(|k| sample(k as f64, true)).collect());
        for s in &mut t2.samples {
            s.pupil = 4.0;
        }
        t2.trial_id = "t1".into();
        assert_eq!(pupil_baseline(&session(vec![t1, t2])).unwrap(), 3.0);
    }

    #[test]
    fn no_neutral_trials_falls_back_to_session_mean() {
        let mut t = trial((0..4).map(|k| sample(k as f64, true)).collect());
        t.stimulus_emotion = StimulusEmotion::Happy;
        for (i, s) in t.samples.iter_mut().enumerate() {
            s.pupil = 2.0 + i as f64; // 2,3,4,5 -> mean 3.5
        }
        let sess = session(vec![t]);
        assert!(matches!(
            pupil_baseline(&sess),
            Err(Error::NoNeutralTrials { .. })
        ));
        assert_eq!(pupil_baseline_fallback(&sess).unwrap(), 3.5);
    }

    #[test]
    fn correct_pupil_subtracts_baseline() {
        let mut t = trial(vec![sample(0.0, true)]);
        t.samples[0].pupil = 3.5;
        let out = correct_pupil(&t, 3.0);
        assert!((out.samples[0].pupil - 0.5).abs() < 1e-15);
        let same = correct_pupil(&correct_pupil(&t, 3.0), 0.0);
        assert_eq!(out, same);
    }

    #[test]
    fn mean_corrected_neutral_pupil_is_zero() {
        let mut t = trial((0..100).map(|k| sample(k as f64, true)).collect());
        for (i, s) in t.samples.iter_mut().enumerate() {
            s.pupil = 3.0 + (i as f64 * 0.01);
        }
        let sess = session(vec![t]);
        let b = pupil_baseline(&sess).unwrap();
        let corrected = correct_pupil(&sess.trials[0], b);
        let mean: f64 = corrected.samples.iter().map(|s| s.pupil).sum::<f64>()
            / corrected.samples.len() as f64;
        assert!(mean.abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn filter_is_idempotent(flags in proptest::collection::vec(any::<bool>(), 1..120)) {
            let samples: Vec<GazeSample> =
                flags.iter().enumerate().map(|(k, &v)| sample(k as f64 * 6.6, v)).collect();
            let t = trial(samples);
            let cfg = SignalConfig::default();
            if let Ok((once, _)) = filter_quality(&t, &cfg) {
                let (twice, loss2) = filter_quality(&once, &cfg).unwrap();
                prop_assert_eq!(once.samples, twice.samples);
                prop_assert_eq!(loss2, 0.0);
            }
        }

        #[test]
        fn normalize_preserves_count_and_time(
            coords in proptest::collection::vec((-10.0f64..2200.0, -10.0f64..1200.0), 1..80)
        ) {
            let samples: Vec<GazeSample> = coords
                .iter()
                .enumerate()
                .map(|(k, &(x, y))| GazeSample { t: k as f64, x, y, pupil: 3.0, valid: true })
                .collect();
            let t = trial(samples);
            let out = normalize_gaze(&t, &SignalConfig::default()).unwrap();
            prop_assert_eq!(out.samples.len(), t.samples.len());
            for (a, b) in out.samples.iter().zip(&t.samples) {
                prop_assert_eq!(a.t, b.t);
                prop_assert!((0.0..=1.0).contains(&a.x) && (0.0..=1.0).contains(&a.y));
            }
        }

        #[test]
        fn correction_preserves_variance(
            pupils in proptest::collection::vec(2.0f64..6.0, 2..100),
            baseline in -1.0f64..5.0,
        ) {
            let samples: Vec<GazeSample> = pupils
                .iter()
                .enumerate()
                .map(|(k, &p)| GazeSample { t: k as f64, x: 0.5, y: 0.5, pupil: p, valid: true })
                .collect();
            let t = trial(samples);
            let out = correct_pupil(&t, baseline);
            let var = |vs: &[f64]| {
                let m = vs.iter().sum::<f64>() / vs.len() as f64;
                vs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vs.len() as f64
            };
            let raw: Vec<f64> = t.samples.iter().map(|s| s.pupil).collect();
            let cor: Vec<f64> = out.samples.iter().map(|s| s.pupil).collect();
            prop_assert!((var(&raw) - var(&cor)).abs() < 1e-12);
        }
    }
}
