//! Cross-module pipeline flows: baseline fallback, quality-filter drops,
//! and the per-fixation proportion variant, end to end on synthetic data.

use gaze_affect::pipeline::{extract_session_features, LandmarkMap, PipelineConfig, RatingMap};
use gaze_affect::signal::{SessionRecording, StimulusEmotion};
use gaze_affect::synth::{synth_generate, SynthConfig, SynthOutput};

fn maps(out: &SynthOutput) -> (LandmarkMap, RatingMap) {
    let landmarks: LandmarkMap = out.landmarks.iter().cloned().collect();
    let ratings = gaze_affect::io::ratings_to_map(&out.ratings);
    (landmarks, ratings)
}

#[test]
fn session_without_neutral_trials_uses_fallback_baseline() {
    let out = synth_generate(&SynthConfig {
        n_participants: 1,
        trials_per_participant: 12,
        seed: 31,
        ..Default::default()
    });
    let (landmarks, ratings) = maps(&out);
    // Remove every neutral trial so the neutral-mean baseline errors and
    // the session-wide fallback path runs.
    let session = SessionRecording {
        trials: out.sessions[0]
            .trials
            .iter()
            .filter(|t| t.stimulus_emotion != StimulusEmotion::Neutral)
            .cloned()
            .collect(),
        ..out.sessions[0].clone()
    };
    assert!(session.trials.len() < 12);
    let (records, _) = extract_session_features(
        &session,
        &out.profiles[0],
        &landmarks,
        &ratings,
        &PipelineConfig::default(),
    )
    .unwrap();
    assert_eq!(records.len(), session.trials.len());
    // Corrected pupil is session-centered: its grand mean sits near zero.
    let mean: f64 = records
        .iter()
        .flat_map(|r| r.sequence.values.iter().map(|row| row[5]))
        .sum::<f64>()
        / (records.len() * 15) as f64;
    assert!(mean.abs() < 0.3, "grand corrected-pupil mean {mean}");
}

#[test]
fn lossy_trials_are_dropped_with_reasons() {
    let out = synth_generate(&SynthConfig {
        n_participants: 1,
        trials_per_participant: 8,
        seed: 32,
        ..Default::default()
    });
    let (landmarks, ratings) = maps(&out);
    // Invalidate 40% of one trial's samples: over the 30% cap.
    let mut session = out.sessions[0].clone();
    let n = session.trials[0].samples.len();
    for s in session.trials[0].samples.iter_mut().take(n * 2 / 5) {
        s.valid = false;
        s.pupil = 0.0;
    }
    let (records, dropped) = extract_session_features(
        &session,
        &out.profiles[0],
        &landmarks,
        &ratings,
        &PipelineConfig::default(),
    )
    .unwrap();
    assert_eq!(records.len(), 7);
    assert_eq!(dropped.len(), 1);
    assert_eq!(dropped[0].trial_id, session.trials[0].trial_id);
    assert!(dropped[0].reason.contains("loss fraction"), "{}", dropped[0].reason);
}

#[test]
fn per_fixation_proportions_also_sum_to_one() {
    let out = synth_generate(&SynthConfig {
        n_participants: 1,
        trials_per_participant: 8,
        seed: 33,
        gaze_noise: 0.002,
        ..Default::default()
    });
    let (landmarks, ratings) = maps(&out);
    let cfg = PipelineConfig {
        proportions_from_fixations: true,
        ..Default::default()
    };
    let (records, _) = extract_session_features(
        &out.sessions[0],
        &out.profiles[0],
        &landmarks,
        &ratings,
        &cfg,
    )
    .unwrap();
    assert!(!records.is_empty());
    for r in &records {
        r.sequence.validate().unwrap();
        // Proportion channels remain bounded under the fixation variant.
        for step in &r.sequence.values {
            let s: f64 = step[..5].iter().sum();
            assert!((0.0..=1.0 + 1e-9).contains(&s));
        }
    }
}

#[test]
fn feature_records_compose_with_split_weights_and_agreement() {
    use gaze_affect::dataset::{agreement, bin_rating, class_weights, stratified_split, SplitSpec};
    let out = synth_generate(&SynthConfig {
        n_participants: 8,
        trials_per_participant: 18,
        seed: 34,
        ..Default::default()
    });
    let (landmarks, ratings) = maps(&out);
    let mut records = Vec::new();
    for (s, p) in out.sessions.iter().zip(&out.profiles) {
        let (mut r, _) =
            extract_session_features(s, p, &landmarks, &ratings, &PipelineConfig::default())
                .unwrap();
        records.append(&mut r);
    }
    let labels: Vec<_> = records
        .iter()
        .map(|r| r.labels.unwrap().perceived_valence)
        .collect();
    let split = stratified_split(&labels, &SplitSpec { seed: 1, ..Default::default() }).unwrap();
    assert_eq!(
        split.train.len() + split.val.len() + split.test.len(),
        records.len()
    );
    let train_labels: Vec<_> = split.train.iter().map(|&i| labels[i]).collect();
    let w = class_weights(&train_labels).unwrap();
    assert!(w.0.iter().all(|v| *v > 0.0));

    // Agreement groups by clip across the 8 raters.
    let mut groups: std::collections::BTreeMap<String, Vec<_>> = Default::default();
    for r in &out.ratings {
        groups
            .entry(r.trial_id.clone())
            .or_default()
            .push(bin_rating(r.rating.perceived_valence).unwrap());
    }
    let groups: Vec<Vec<_>> = groups.into_values().collect();
    let a = agreement(&groups).unwrap();
    assert!((100.0 / 3.0..=100.0).contains(&a), "agreement {a}");
}
