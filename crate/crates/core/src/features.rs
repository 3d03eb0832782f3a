//! Per-trial model inputs: the 15-step x 12-channel temporal sequence,
//! static vectors, and train-set-fitted scalers.

use serde::{Deserialize, Serialize};

use crate::dataset::ClassBin;
use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use crate::signal::StimulusEmotion;

pub const SEQ_STEPS: usize = 15;
pub const SEQ_CHANNELS: usize = 12;

/// Fixed channel order of the temporal sequence.
pub const CHANNEL_NAMES: [&str; SEQ_CHANNELS] = [
    "prop_eyes",
    "prop_eyebrows",
    "prop_nose",
    "prop_mouth",
    "prop_outside",
    "pupil_corrected",
    "fix_duration",
    "fix_dispersion",
    "sacc_amplitude",
    "sacc_duration",
    "sacc_peak_velocity",
    "sacc_acceleration",
];

/// The resampled trial time series, `SEQ_STEPS x SEQ_CHANNELS`, row-major
/// in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSequence {
    pub values: [[f64; SEQ_CHANNELS]; SEQ_STEPS],
}

impl TrialSequence {
    pub fn zeros() -> Self {
        Self {
            values: [[0.0; SEQ_CHANNELS]; SEQ_STEPS],
        }
    }

    pub fn channel(&self, c: usize) -> [f64; SEQ_STEPS] {
        let mut out = [0.0; SEQ_STEPS];
        for (k, row) in self.values.iter().enumerate() {
            out[k] = row[c];
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.values {
            for (c, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::OutOfRange {
                        what: "sequence entry",
                        value: *v,
                        expected: "finite",
                    });
                }
                if c < 5 && !(0.0..=1.0).contains(v) {
                    return Err(Error::OutOfRange {
                        what: "proportion channel",
                        value: *v,
                        expected: "in [0, 1]",
                    });
                }
            }
        }
        Ok(())
    }
}

/// One input channel for resampling.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSeries<F> {
    /// Sampled signal: linear interpolation between bracketing points,
    /// constant extrapolation past the ends.
    Continuous(Vec<(F, F)>),
    /// Event-valued step function: the active interval's value at the
    /// query time, zero when no interval covers it.
    Stepwise(Vec<(F, F, F)>),
    /// Windowed mean over (t, value) points inside one inter-step
    /// interval centered on the query time; zero for empty windows.
    Windowed(Vec<(F, F)>),
}

/// Resamples one channel at `n_steps` equally spaced query times spanning
/// `[span.0, span.1]`.
pub fn interpolate_channel<F: Real>(
    series: &ChannelSeries<F>,
    span: (F, F),
    n_steps: usize,
) -> Result<Vec<F>> {
    if let ChannelSeries::Continuous(points) = series {
        if points.is_empty() {
            return Err(Error::EmptyChannel("continuous".into()));
        }
    }
    let step = if n_steps > 1 {
        (span.1 - span.0) / F::from_usize(n_steps - 1).unwrap()
    } else {
        F::zero()
    };
    let mut out = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let t = span.0 + step * F::from_usize(k).unwrap();
        let v = match series {
            ChannelSeries::Continuous(points) => interp_linear(points, t),
            ChannelSeries::Stepwise(intervals) => intervals
                .iter()
                .find(|(s, e, _)| t >= *s && t <= *e)
                .map(|(_, _, v)| *v)
                .unwrap_or_else(F::zero),
            ChannelSeries::Windowed(points) => {
                let half = step / real::<F>(2.0);
                let (lo, hi) = (t - half, t + half);
                let mut sum = F::zero();
                let mut n = 0usize;
                for &(pt, pv) in points {
                    if pt >= lo && pt <= hi {
                        sum += pv;
                        n += 1;
                    }
                }
                if n > 0 {
                    sum / F::from_usize(n).unwrap()
                } else {
                    F::zero()
                }
            }
        };
        out.push(v);
    }
    Ok(out)
}

fn interp_linear<F: Real>(points: &[(F, F)], t: F) -> F {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    // Points are time-sorted; find the bracketing pair.
    let mut lo = 0usize;
    let mut hi = points.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if points[mid].0 <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (t0, v0) = points[lo];
    let (t1, v1) = points[hi];
    if t1 == t0 {
        return v0;
    }
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Builds the full trial sequence from the 12 channel series, in the
/// documented channel order.
pub fn interpolate_sequence(
    channels: &[ChannelSeries<f64>; SEQ_CHANNELS],
    span: (f64, f64),
) -> Result<TrialSequence> {
    let mut seq = TrialSequence::zeros();
    for (c, series) in channels.iter().enumerate() {
        let vals = interpolate_channel(series, span, SEQ_STEPS)?;
        for (k, v) in vals.into_iter().enumerate() {
            seq.values[k][c] = v;
        }
    }
    Ok(seq)
}

/// Big Five trait scores; raw inventory scores live in [0, 50], scaled
/// profiles in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PersonalityProfile {
    pub openness: f64,
    pub conscientiousness: f64,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub neuroticism: f64,
}

impl PersonalityProfile {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.openness,
            self.conscientiousness,
            self.extraversion,
            self.agreeableness,
            self.neuroticism,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            openness: a[0],
            conscientiousness: a[1],
            extraversion: a[2],
            agreeableness: a[3],
            neuroticism: a[4],
        }
    }
}

/// Raw 0-50 trait scores divided by 50.
pub fn scale_personality(raw: &PersonalityProfile) -> Result<PersonalityProfile> {
    for v in raw.as_array() {
        if !(0.0..=50.0).contains(&v) {
            return Err(Error::OutOfRange {
                what: "personality score",
                value: v,
                expected: "in [0, 50]",
            });
        }
    }
    Ok(PersonalityProfile::from_array(raw.as_array().map(|v| v / 50.0)))
}

/// Indicator over (Anger, Disgust, Fear, Happy, Neutral, Sad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusOneHot(pub [f64; 6]);

impl StimulusOneHot {
    pub fn from_emotion(e: StimulusEmotion) -> Self {
        let mut v = [0.0; 6];
        v[e.index()] = 1.0;
        Self(v)
    }

    pub fn argmax(&self) -> StimulusEmotion {
        let idx = self
            .0
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        StimulusEmotion::ALL[idx]
    }
}

/// One-hot encodes an emotion name; unknown names are rejected.
pub fn one_hot_stimulus(name: &str) -> Result<StimulusOneHot> {
    Ok(StimulusOneHot::from_emotion(StimulusEmotion::parse(name)?))
}

/// Binned targets for one trial: perceived/felt x valence/arousal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub perceived_valence: ClassBin,
    pub perceived_arousal: ClassBin,
    pub felt_valence: ClassBin,
    pub felt_arousal: ClassBin,
}

/// The four trainable target labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetLabel {
    PerceivedValence,
    PerceivedArousal,
    FeltValence,
    FeltArousal,
}

impl TargetLabel {
    pub const ALL: [TargetLabel; 4] = [
        TargetLabel::PerceivedValence,
        TargetLabel::PerceivedArousal,
        TargetLabel::FeltValence,
        TargetLabel::FeltArousal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TargetLabel::PerceivedValence => "perceived_valence",
            TargetLabel::PerceivedArousal => "perceived_arousal",
            TargetLabel::FeltValence => "felt_valence",
            TargetLabel::FeltArousal => "felt_arousal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perceived_valence" | "perceived-valence" => Ok(TargetLabel::PerceivedValence),
            "perceived_arousal" | "perceived-arousal" => Ok(TargetLabel::PerceivedArousal),
            "felt_valence" | "felt-valence" => Ok(TargetLabel::FeltValence),
            "felt_arousal" | "felt-arousal" => Ok(TargetLabel::FeltArousal),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

impl LabelSet {
    pub fn get(&self, target: TargetLabel) -> ClassBin {
        match target {
            TargetLabel::PerceivedValence => self.perceived_valence,
            TargetLabel::PerceivedArousal => self.perceived_arousal,
            TargetLabel::FeltValence => self.felt_valence,
            TargetLabel::FeltArousal => self.felt_arousal,
        }
    }
}

/// One trial's full model input: sequence + personality(5) + stimulus
/// one-hot(6) + environment(2), plus the four labels when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub participant_id: String,
    pub trial_id: String,
    pub sequence: TrialSequence,
    /// Scaled to [0, 1].
    pub personality: PersonalityProfile,
    pub stimulus: StimulusOneHot,
    /// (lux, temp), raw on extraction, scaled after `apply_scalers`.
    pub environment: (f64, f64),
    pub labels: Option<LabelSet>,
}

/// How one channel is rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ChannelScaler {
    /// Proportions and indicators pass through untouched.
    None,
    MinMax { min: f64, max: f64 },
    Standard { mean: f64, std: f64 },
    /// Degenerate (constant) channel: flagged and passed through.
    Constant { value: f64 },
}

impl ChannelScaler {
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            ChannelScaler::None | ChannelScaler::Constant { .. } => v,
            ChannelScaler::MinMax { min, max } => (v - min) / (max - min),
            ChannelScaler::Standard { mean, std } => (v - mean) / std,
        }
    }
}

/// Fitted statistics for every scaled channel. Sequence channels use the
/// fixed method map: proportions pass through, the corrected pupil is
/// standardized, and the skewed event-metric channels are min-max scaled.
/// Environment channels are standardized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub sequence: [ChannelScaler; SEQ_CHANNELS],
    pub environment: [ChannelScaler; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    None,
    MinMax,
    Standard,
}

fn channel_method(c: usize) -> Method {
    match c {
        0..=4 => Method::None,      // ROI proportions
        5 => Method::Standard,      // corrected pupil
        _ => Method::MinMax,        // event metrics (skewed, non-negative)
    }
}

fn fit_one(values: &[f64], method: Method) -> ChannelScaler {
    match method {
        Method::None => ChannelScaler::None,
        Method::MinMax => {
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max > min {
                ChannelScaler::MinMax { min, max }
            } else {
                ChannelScaler::Constant { value: min }
            }
        }
        Method::Standard => {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if std > 0.0 {
                ChannelScaler::Standard { mean, std }
            } else {
                ChannelScaler::Constant { value: mean }
            }
        }
    }
}

/// Fits scaler statistics from TRAINING records only.
pub fn fit_scalers(train: &[FeatureRecord]) -> Result<ScalerParams> {
    if train.len() < 2 {
        return Err(Error::Schema {
            path: "<train set>".into(),
            row: None,
            msg: format!("need at least 2 training records, got {}", train.len()),
        });
    }
    let mut sequence = [ChannelScaler::None; SEQ_CHANNELS];
    for (c, slot) in sequence.iter_mut().enumerate() {
        let method = channel_method(c);
        if method == Method::None {
            continue;
        }
        let values: Vec<f64> = train
            .iter()
            .flat_map(|r| r.sequence.values.iter().map(move |row| row[c]))
            .collect();
        *slot = fit_one(&values, method);
    }
    let lux: Vec<f64> = train.iter().map(|r| r.environment.0).collect();
    let temp: Vec<f64> = train.iter().map(|r| r.environment.1).collect();
    Ok(ScalerParams {
        sequence,
        environment: [fit_one(&lux, Method::Standard), fit_one(&temp, Method::Standard)],
    })
}

/// Applies fitted statistics; affine and non-clamping, so values outside
/// the training range stay outside [0, 1].
pub fn apply_scalers(record: &FeatureRecord, params: &ScalerParams) -> FeatureRecord {
    let mut out = record.clone();
    for row in &mut out.sequence.values {
        for (c, v) in row.iter_mut().enumerate() {
            *v = params.sequence[c].apply(*v);
        }
    }
    out.environment = (
        params.environment[0].apply(record.environment.0),
        params.environment[1].apply(record.environment.1),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_channel_resamples_constant() {
        let series = ChannelSeries::Continuous(vec![(0.0, 3.5), (1000.0, 3.5)]);
        let vals = interpolate_channel(&series, (0.0, 1000.0), SEQ_STEPS).unwrap();
        assert!(vals.iter().all(|v| *v == 3.5));

        let single = ChannelSeries::Continuous(vec![(400.0, 2.0)]);
        let vals = interpolate_channel(&single, (0.0, 1000.0), SEQ_STEPS).unwrap();
        assert!(vals.iter().all(|v| *v == 2.0));
    }

    #[test]
    fn linear_ramp_hits_k_over_14() {
        let series = ChannelSeries::Continuous(vec![(0.0, 0.0), (1400.0, 1.0)]);
        let vals = interpolate_channel(&series, (0.0, 1400.0), SEQ_STEPS).unwrap();
        for (k, v) in vals.iter().enumerate() {
            assert!((v - k as f64 / 14.0).abs() < 1e-12, "step {k}: {v}");
        }
    }

    #[test]
    fn step_channel_follows_active_event() {
        // One fixation covering the first third of a 1500 ms trial.
        let d = 500.0;
        let series = ChannelSeries::Stepwise(vec![(0.0, 500.0, d)]);
        let vals = interpolate_channel(&series, (0.0, 1500.0), SEQ_STEPS).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let t = 1500.0 * k as f64 / 14.0;
            if t <= 500.0 {
                assert_eq!(*v, d, "step {k}");
            } else {
                assert_eq!(*v, 0.0, "step {k}");
            }
        }
    }

    #[test]
    fn empty_continuous_channel_errors() {
        let series: ChannelSeries<f64> = ChannelSeries::Continuous(vec![]);
        assert!(interpolate_channel(&series, (0.0, 1.0), SEQ_STEPS).is_err());
    }

    #[test]
    fn windowed_channel_averages_in_window() {
        // Indicator points every 10 ms; value 1 in [0, 700), 0 after.
        let points: Vec<(f64, f64)> = (0..140)
            .map(|k| (k as f64 * 10.0, if (k as f64 * 10.0) < 700.0 { 1.0 } else { 0.0 }))
            .collect();
        let series = ChannelSeries::Windowed(points);
        let vals = interpolate_channel(&series, (0.0, 1400.0), SEQ_STEPS).unwrap();
        assert_eq!(vals[0], 1.0);
        assert_eq!(vals[14], 0.0);
        for v in vals {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn interpolation_works_in_f32() {
        let series: ChannelSeries<f32> = ChannelSeries::Continuous(vec![(0.0, 0.0), (14.0, 14.0)]);
        let vals = interpolate_channel(&series, (0.0f32, 14.0), SEQ_STEPS).unwrap();
        assert!((vals[7] - 7.0).abs() < 1e-5);
    }

    #[test]
    fn personality_scaling() {
        let raw = PersonalityProfile::from_array([25.0, 0.0, 50.0, 10.0, 40.0]);
        let s = scale_personality(&raw).unwrap();
        assert_eq!(s.as_array(), [0.5, 0.0, 1.0, 0.2, 0.8]);
        let bad = PersonalityProfile::from_array([51.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(scale_personality(&bad).is_err());
    }

    #[test]
    fn one_hot_order_and_rejection() {
        assert_eq!(
            one_hot_stimulus("happy").unwrap().0,
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0]
        );
        assert_eq!(
            one_hot_stimulus("anger").unwrap().0,
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert!(matches!(
            one_hot_stimulus("joyful"),
            Err(Error::UnknownLabel(_))
        ));
    }

    fn record_with(seq_fill: impl Fn(usize, usize) -> f64, env: (f64, f64)) -> FeatureRecord {
        let mut seq = TrialSequence::zeros();
        for k in 0..SEQ_STEPS {
            for c in 0..SEQ_CHANNELS {
                seq.values[k][c] = seq_fill(k, c);
            }
        }
        FeatureRecord {
            participant_id: "p".into(),
            trial_id: "t".into(),
            sequence: seq,
            personality: PersonalityProfile::default(),
            stimulus: StimulusOneHot::from_emotion(StimulusEmotion::Happy),
            environment: env,
            labels: None,
        }
    }

    #[test]
    fn minmax_midpoint_maps_to_half() {
        let a = record_with(|_, _| 2.0, (100.0, 20.0));
        let b = record_with(|_, _| 4.0, (300.0, 24.0));
        let params = fit_scalers(&[a.clone(), b]).unwrap();
        match params.sequence[8] {
            ChannelScaler::MinMax { min, max } => {
                assert_eq!((min, max), (2.0, 4.0));
            }
            other => panic!("expected MinMax, got {other:?}"),
        }
        let mid = record_with(|_, _| 3.0, (200.0, 22.0));
        let scaled = apply_scalers(&mid, &params);
        assert_eq!(scaled.sequence.values[0][8], 0.5);
        // Training endpoints map to 0 and 1.
        let at_min = apply_scalers(&a, &params);
        assert_eq!(at_min.sequence.values[0][8], 0.0);
    }

    #[test]
    fn standardized_pupil_has_zero_mean_unit_std_after_round_trip() {
        let train: Vec<FeatureRecord> = (0..8)
            .map(|i| record_with(|k, c| if c == 5 { i as f64 + k as f64 * 0.1 } else { 0.0 }, (i as f64, 20.0)))
            .collect();
        let params = fit_scalers(&train).unwrap();
        let scaled: Vec<FeatureRecord> = train.iter().map(|r| apply_scalers(r, &params)).collect();
        let vals: Vec<f64> = scaled
            .iter()
            .flat_map(|r| r.sequence.values.iter().map(|row| row[5]))
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-9, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn already_standard_channel_maps_to_itself() {
        // Pupil channel holding exactly {-1, 1}: mean 0, std 1, so the
        // standardizer is the identity.
        let a = record_with(|_, c| if c == 5 { -1.0 } else { 0.0 }, (0.0, 20.0));
        let b = record_with(|_, c| if c == 5 { 1.0 } else { 0.0 }, (1.0, 20.0));
        let params = fit_scalers(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(
            params.sequence[5],
            ChannelScaler::Standard { mean: 0.0, std: 1.0 }
        );
        assert_eq!(apply_scalers(&a, &params).sequence.values[0][5], -1.0);
        assert_eq!(apply_scalers(&b, &params).sequence.values[0][5], 1.0);
    }

    #[test]
    fn constant_channel_passes_through() {
        let train: Vec<FeatureRecord> = (0..4)
            .map(|_| record_with(|_, c| if c == 8 { 7.0 } else { 0.0 }, (5.0, 20.0)))
            .collect();
        let params = fit_scalers(&train).unwrap();
        assert!(matches!(params.sequence[8], ChannelScaler::Constant { value } if value == 7.0));
        let scaled = apply_scalers(&train[0], &params);
        assert_eq!(scaled.sequence.values[0][8], 7.0);
        // Constant environment channel (temp) also passes through.
        assert!(matches!(params.environment[1], ChannelScaler::Constant { .. }));
        assert_eq!(scaled.environment.1, 20.0);
    }

    #[test]
    fn out_of_range_test_values_are_not_clamped() {
        let a = record_with(|_, _| 2.0, (0.0, 20.0));
        let b = record_with(|_, _| 4.0, (10.0, 30.0));
        let params = fit_scalers(&[a, b]).unwrap();
        let outside = record_with(|_, _| 6.0, (5.0, 25.0));
        let scaled = apply_scalers(&outside, &params);
        assert_eq!(scaled.sequence.values[0][8], 2.0); // (6-2)/(4-2)
    }

    #[test]
    fn scalers_ignore_non_training_records() {
        let train: Vec<FeatureRecord> = (0..5)
            .map(|i| record_with(|_, _| i as f64, (i as f64, 20.0 + i as f64)))
            .collect();
        let params = fit_scalers(&train).unwrap();
        // "Fitting" again with extra validation records appended changes
        // nothing when only the same train slice is passed.
        let params2 = fit_scalers(&train).unwrap();
        assert_eq!(params, params2);
    }

    proptest! {
        #[test]
        fn affine_channels_reproduce_exactly(
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
            dur in 100.0f64..5000.0,
        ) {
            // Channel value affine in time: v(t) = a + b * t / dur.
            let points: Vec<(f64, f64)> = (0..50)
                .map(|k| {
                    let t = dur * k as f64 / 49.0;
                    (t, a + b * t / dur)
                })
                .collect();
            let series = ChannelSeries::Continuous(points);
            let vals = interpolate_channel(&series, (0.0, dur), SEQ_STEPS).unwrap();
            for (k, v) in vals.iter().enumerate() {
                let t = dur * k as f64 / 14.0;
                let expect = a + b * t / dur;
                prop_assert!((v - expect).abs() < 1e-9, "step {}: {} vs {}", k, v, expect);
            }
        }

        #[test]
        fn one_hot_round_trips(idx in 0usize..6) {
            let e = StimulusEmotion::ALL[idx];
            let oh = StimulusOneHot::from_emotion(e);
            prop_assert_eq!(oh.argmax(), e);
            prop_assert_eq!(oh.0.iter().sum::<f64>(), 1.0);
        }
    }
}
