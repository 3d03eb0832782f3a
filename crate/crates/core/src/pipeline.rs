//! Per-trial feature extraction: chains cleaning, event detection,
//! region labeling, and sequence resampling into [`FeatureRecord`]s.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{bin_rating, EmotionRating};
use crate::error::{Error, Result};
use crate::events::{detect_events, EventConfig};
use crate::features::{
    interpolate_sequence, scale_personality, ChannelSeries, FeatureRecord, LabelSet,
    PersonalityProfile, StimulusOneHot, SEQ_CHANNELS,
};
use crate::roi::{build_regions, label_samples, LandmarkFrame, RegionLabel, RegionPolygon};
use crate::signal::{
    correct_pupil, filter_quality, normalize_gaze, pupil_baseline, pupil_baseline_fallback,
    SessionRecording, SignalConfig, StimulusEmotion, TrialWindow,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub signal: SignalConfig,
    pub events: EventConfig,
    /// When set, ROI proportions count fixation centroids instead of raw
    /// gaze samples.
    pub proportions_from_fixations: bool,
}

/// One quality-filter drop, for the per-trial drop log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedTrial {
    pub participant_id: String,
    pub trial_id: String,
    pub reason: String,
}

/// Landmark clips keyed by stimulus emotion (trials carry no clip id, so
/// clips are matched through the emotion they portray).
pub type LandmarkMap = BTreeMap<StimulusEmotion, Vec<LandmarkFrame>>;

/// Ratings keyed by (participant_id, trial_id).
pub type RatingMap = BTreeMap<(String, String), EmotionRating>;

fn labels_from_rating(r: &EmotionRating) -> Result<LabelSet> {
    Ok(LabelSet {
        perceived_valence: bin_rating(r.perceived_valence)?,
        perceived_arousal: bin_rating(r.perceived_arousal)?,
        felt_valence: bin_rating(r.felt_valence)?,
        felt_arousal: bin_rating(r.felt_arousal)?,
    })
}

/// Builds the 15x12 sequence for one cleaned, corrected trial.
fn build_sequence(
    trial: &TrialWindow,
    regions_per_frame: &[Vec<RegionPolygon>],
    frames: &[LandmarkFrame],
    cfg: &PipelineConfig,
) -> Result<crate::features::TrialSequence> {
    let duration = trial.end_t - trial.start_t;
    let span = (0.0, duration);

    let events = detect_events(trial, &cfg.events, &cfg.signal);
    let (fixations, saccades) = (&events.fixations, &events.saccades);

    // Per-sample region indicators.
    let labeled = if cfg.proportions_from_fixations {
        fixations
            .iter()
            .map(|f| {
                let mid = (f.start_t + f.end_t) / 2.0;
                let fi = crate::roi::nearest_frame(frames, mid);
                (
                    mid,
                    crate::roi::label_point(
                        crate::geom::Point::new(f.centroid.0, f.centroid.1),
                        &regions_per_frame[fi],
                    ),
                )
            })
            .collect::<Vec<_>>()
    } else {
        label_samples(trial, frames, regions_per_frame)
    };
    if labeled.is_empty() {
        return Err(Error::NoValidSamples(format!("trial `{}`", trial.trial_id)));
    }
    let indicator = |region: RegionLabel| -> ChannelSeries<f64> {
        ChannelSeries::Windowed(
            labeled
                .iter()
                .map(|(t, l)| (*t, if *l == region { 1.0 } else { 0.0 }))
                .collect(),
        )
    };

    let pupil_points: Vec<(f64, f64)> = trial
        .samples
        .iter()
        .filter(|s| s.valid)
        .map(|s| (s.t, s.pupil))
        .collect();
    if pupil_points.is_empty() {
        return Err(Error::NoValidSamples(format!("trial `{}`", trial.trial_id)));
    }

    let fix_channel = |metric: fn(&crate::events::Fixation) -> f64| -> ChannelSeries<f64> {
        ChannelSeries::Stepwise(
            fixations
                .iter()
                .map(|f| (f.start_t, f.end_t, metric(f)))
                .collect(),
        )
    };
    let sacc_channel = |metric: fn(&crate::events::Saccade) -> f64| -> ChannelSeries<f64> {
        ChannelSeries::Stepwise(
            saccades
                .iter()
                .map(|s| (s.start_t, s.end_t, metric(s)))
                .collect(),
        )
    };

    let channels: [ChannelSeries<f64>; SEQ_CHANNELS] = [
        indicator(RegionLabel::Eyes),
        indicator(RegionLabel::Eyebrows),
        indicator(RegionLabel::Nose),
        indicator(RegionLabel::Mouth),
        indicator(RegionLabel::Outside),
        ChannelSeries::Continuous(pupil_points),
        fix_channel(|f| f.duration),
        fix_channel(|f| f.dispersion),
        sacc_channel(|s| s.amplitude),
        sacc_channel(|s| s.duration),
        sacc_channel(|s| s.peak_velocity),
        sacc_channel(|s| s.mean_acceleration),
    ];
    interpolate_sequence(&channels, span)
}

/// Runs the full extraction for one session. Returns the feature records
/// of surviving trials and the drop log.
pub fn extract_session_features(
    session: &SessionRecording,
    personality_raw: &PersonalityProfile,
    landmarks: &LandmarkMap,
    ratings: &RatingMap,
    cfg: &PipelineConfig,
) -> Result<(Vec<FeatureRecord>, Vec<DroppedTrial>)> {
    cfg.signal.validate()?;
    cfg.events.validate()?;
    let personality = scale_personality(personality_raw)?;

    let mut dropped = Vec::new();
    let mut cleaned: Vec<TrialWindow> = Vec::new();
    for trial in &session.trials {
        let (filtered, loss) = match filter_quality(trial, &cfg.signal) {
            Ok(x) => x,
            Err(e) => {
                dropped.push(DroppedTrial {
                    participant_id: session.participant_id.clone(),
                    trial_id: trial.trial_id.clone(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if loss > cfg.signal.max_loss_fraction {
            dropped.push(DroppedTrial {
                participant_id: session.participant_id.clone(),
                trial_id: trial.trial_id.clone(),
                reason: format!(
                    "loss fraction {loss:.3} exceeds {:.3}",
                    cfg.signal.max_loss_fraction
                ),
            });
            continue;
        }
        cleaned.push(normalize_gaze(&filtered, &cfg.signal)?);
    }

    if cleaned.is_empty() {
        return Ok((Vec::new(), dropped));
    }

    // Baseline over the cleaned session; fall back to the session-wide
    // mean when no neutral trial survived filtering.
    let cleaned_session = SessionRecording {
        trials: cleaned.clone(),
        ..session.clone()
    };
    let baseline = match pupil_baseline(&cleaned_session) {
        Ok(b) => b,
        Err(Error::NoNeutralTrials { .. }) => pupil_baseline_fallback(&cleaned_session)?,
        Err(e) => return Err(e),
    };

    let mut records = Vec::new();
    for trial in &cleaned {
        let corrected = correct_pupil(trial, baseline);
        let frames = landmarks.get(&trial.stimulus_emotion).ok_or_else(|| {
            Error::Schema {
                path: "<landmarks>".into(),
                row: None,
                msg: format!(
                    "no landmark clip for stimulus `{}`",
                    trial.stimulus_emotion.name()
                ),
            }
        })?;
        let regions_per_frame: Vec<Vec<RegionPolygon>> = frames
            .iter()
            .map(|f| build_regions(f, crate::roi::DEFAULT_REGION_MARGIN))
            .collect::<Result<_>>()?;
        let sequence = match build_sequence(&corrected, &regions_per_frame, frames, cfg) {
            Ok(s) => s,
            Err(e) => {
                dropped.push(DroppedTrial {
                    participant_id: session.participant_id.clone(),
                    trial_id: trial.trial_id.clone(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let labels = ratings
            .get(&(session.participant_id.clone(), trial.trial_id.clone()))
            .map(labels_from_rating)
            .transpose()?;
        records.push(FeatureRecord {
            participant_id: session.participant_id.clone(),
            trial_id: trial.trial_id.clone(),
            sequence,
            personality,
            stimulus: StimulusOneHot::from_emotion(trial.stimulus_emotion),
            environment: (session.environment.lux, session.environment.temp),
            labels,
        });
    }
    Ok((records, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_generate, SynthConfig};

    fn landmark_map(
        clips: &[(StimulusEmotion, Vec<LandmarkFrame>)],
    ) -> LandmarkMap {
        clips.iter().cloned().collect()
    }

    fn rating_map(rows: &[crate::synth::RatingRow]) -> RatingMap {
        rows.iter()
            .map(|r| {
                (
                    (r.participant_id.clone(), r.trial_id.clone()),
                    r.rating,
                )
            })
            .collect()
    }

    #[test]
    fn synthetic_session_extracts_records_with_labels() {
        let cfg = SynthConfig {
            n_participants: 1,
            trials_per_participant: 12,
            seed: 2,
            ..Default::default()
        };
        let out = synth_generate(&cfg);
        let pcfg = PipelineConfig::default();
        let (records, dropped) = extract_session_features(
            &out.sessions[0],
            &out.profiles[0],
            &landmark_map(&out.landmarks),
            &rating_map(&out.ratings),
            &pcfg,
        )
        .unwrap();
        assert_eq!(records.len() + dropped.len(), 12);
        assert!(!records.is_empty());
        for r in &records {
            r.sequence.validate().unwrap();
            assert!(r.labels.is_some());
            // Personality scaled into [0,1].
            for v in r.personality.as_array() {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn proportions_in_sequence_reflect_dwell_pattern() {
        let cfg = SynthConfig {
            n_participants: 1,
            trials_per_participant: 12,
            seed: 4,
            gaze_noise: 0.002,
            ..Default::default()
        };
        let out = synth_generate(&cfg);
        let pcfg = PipelineConfig::default();
        let (records, _) = extract_session_features(
            &out.sessions[0],
            &out.profiles[0],
            &landmark_map(&out.landmarks),
            &rating_map(&out.ratings),
            &pcfg,
        )
        .unwrap();
        // Happy trials: the mouth channel mean across steps dominates the
        // eyebrows channel mean.
        let happy: Vec<_> = records
            .iter()
            .filter(|r| r.stimulus.argmax() == StimulusEmotion::Happy)
            .collect();
        assert!(!happy.is_empty());
        for r in happy {
            let mouth: f64 = r.sequence.channel(3).iter().sum();
            let brows: f64 = r.sequence.channel(1).iter().sum();
            assert!(mouth > brows, "mouth {mouth} vs brows {brows}");
        }
    }

    #[test]
    fn missing_landmarks_is_a_schema_error() {
        let cfg = SynthConfig {
            n_participants: 1,
            trials_per_participant: 6,
            seed: 5,
            ..Default::default()
        };
        let out = synth_generate(&cfg);
        let empty: LandmarkMap = BTreeMap::new();
        let err = extract_session_features(
            &out.sessions[0],
            &out.profiles[0],
            &empty,
            &rating_map(&out.ratings),
            &PipelineConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
    }
}
