//! Synthetic session generator: a stand-in corpus with planted,
//! configurable couplings between stimulus, personality, and labels, so
//! the pipeline's ability to exploit each modality can be tested.
//!
//! The generative model:
//! - each stimulus emotion has a fixed base (valence, arousal); ratings
//!   blend toward it with `stimulus_coupling` and get relabeled uniformly
//!   with probability `label_noise`;
//! - felt ratings additionally shift with planted traits (high
//!   neuroticism lowers felt valence, high extraversion raises felt
//!   arousal), scaled by `personality_coupling`;
//! - gaze traces are cluster-jump processes whose region dwell pattern
//!   depends on the stimulus emotion; pupil diameter is elevated for
//!   high-arousal stimuli; blinks and jitter provide realistic dirt.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::EmotionRating;
use crate::features::PersonalityProfile;
use crate::geom::centroid;
use crate::rng::gaussian;
use crate::roi::{build_regions, canonical_landmarks, LandmarkFrame, RegionLabel, RegionPolygon};
use crate::signal::{
    EnvironmentReading, GazeSample, SessionRecording, StimulusEmotion, TrialWindow,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_participants: usize,
    pub trials_per_participant: usize,
    pub seed: u64,
    /// How strongly planted traits shift the felt labels, in [0, 1].
    pub personality_coupling: f64,
    /// How strongly the stimulus base drives ratings, in [0, 1].
    pub stimulus_coupling: f64,
    /// Spatial jitter of gaze samples, normalized screen units.
    pub gaze_noise: f64,
    /// Probability of replacing a rating with a uniform draw.
    pub label_noise: f64,
    pub sample_rate: f64,
    /// Device geometry the gaze CSV is written in (raw pixel units).
    pub screen_width_px: f64,
    pub screen_height_px: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_participants: 73,
            trials_per_participant: 84,
            seed: 0,
            personality_coupling: 0.7,
            stimulus_coupling: 0.9,
            gaze_noise: 0.01,
            label_noise: 0.1,
            sample_rate: 150.0,
            screen_width_px: 1920.0,
            screen_height_px: 1080.0,
        }
    }
}

/// One ratings-file row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub participant_id: String,
    pub trial_id: String,
    pub rating: EmotionRating,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub sessions: Vec<SessionRecording>,
    /// Raw 0-50 trait scores per participant, aligned with `sessions`.
    pub profiles: Vec<PersonalityProfile>,
    /// One landmark frame list per stimulus emotion clip.
    pub landmarks: Vec<(StimulusEmotion, Vec<LandmarkFrame>)>,
    pub ratings: Vec<RatingRow>,
}

/// Fixed base (valence, arousal) per stimulus emotion on the 9-point
/// scale; the monotone map the couplings blend toward.
pub fn emotion_base(e: StimulusEmotion) -> (f64, f64) {
    match e {
        StimulusEmotion::Anger => (2.0, 7.0),
        StimulusEmotion::Disgust => (2.0, 6.0),
        StimulusEmotion::Fear => (2.0, 8.0),
        StimulusEmotion::Happy => (8.0, 7.0),
        StimulusEmotion::Neutral => (5.0, 3.0),
        StimulusEmotion::Sad => (2.0, 3.0),
    }
}

/// Region dwell distribution per stimulus emotion in
/// (Eyes, Eyebrows, Nose, Mouth, Outside) order.
fn dwell_distribution(e: StimulusEmotion) -> [f64; 5] {
    match e {
        StimulusEmotion::Anger => [0.45, 0.20, 0.10, 0.15, 0.10],
        StimulusEmotion::Disgust => [0.15, 0.05, 0.35, 0.30, 0.15],
        StimulusEmotion::Fear => [0.50, 0.15, 0.10, 0.15, 0.10],
        StimulusEmotion::Happy => [0.20, 0.05, 0.10, 0.55, 0.10],
        StimulusEmotion::Neutral => [0.30, 0.10, 0.30, 0.15, 0.15],
        StimulusEmotion::Sad => [0.35, 0.10, 0.15, 0.20, 0.20],
    }
}

/// Deterministic felt-rating formula (before label noise): the stimulus
/// base shifted by the planted trait couplings.
pub fn felt_deterministic(
    e: StimulusEmotion,
    traits_scaled: &PersonalityProfile,
    stimulus_coupling: f64,
    personality_coupling: f64,
) -> (u8, u8) {
    let (bv, ba) = emotion_base(e);
    let v = 5.0 + stimulus_coupling * (bv - 5.0)
        - 4.0 * personality_coupling * (traits_scaled.neuroticism - 0.5);
    let a = 5.0 + stimulus_coupling * (ba - 5.0)
        + 4.0 * personality_coupling * (traits_scaled.extraversion - 0.5);
    (
        v.round().clamp(1.0, 9.0) as u8,
        a.round().clamp(1.0, 9.0) as u8,
    )
}

/// Deterministic perceived-rating formula (before label noise).
pub fn perceived_deterministic(e: StimulusEmotion, stimulus_coupling: f64) -> (u8, u8) {
    let (bv, ba) = emotion_base(e);
    let v = 5.0 + stimulus_coupling * (bv - 5.0);
    let a = 5.0 + stimulus_coupling * (ba - 5.0);
    (
        v.round().clamp(1.0, 9.0) as u8,
        a.round().clamp(1.0, 9.0) as u8,
    )
}

fn maybe_relabel(r: u8, noise: f64, rng: &mut ChaCha8Rng) -> u8 {
    // Both draws always happen so the stream position does not depend
    // on the noise setting.
    let coin = rng.random::<f64>();
    let uniform = rng.random_range(1..=9u8);
    if coin < noise {
        uniform
    } else {
        r
    }
}

fn sample_region(dist: &[f64; 5], rng: &mut ChaCha8Rng) -> RegionLabel {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return RegionLabel::ALL[i];
        }
    }
    RegionLabel::Outside
}

/// A gaze target inside the given region (or in the off-face margin for
/// Outside).
fn region_target(
    label: RegionLabel,
    regions: &[RegionPolygon],
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    if label == RegionLabel::Outside {
        // Left margin strip: safely outside every face hull.
        return (
            0.02 + rng.random::<f64>() * 0.06,
            0.05 + rng.random::<f64>() * 0.90,
        );
    }
    let region = regions.iter().find(|r| r.label == label).unwrap();
    let c = centroid(&region.vertices);
    // Stay near the centroid; tiny jitter keeps us inside the hull.
    (
        c.x + (rng.random::<f64>() - 0.5) * 0.01,
        c.y + (rng.random::<f64>() - 0.5) * 0.008,
    )
}

/// Duration of a stimulus clip in ms, fixed per clip index (the same
/// clip always has the same length, for every participant).
fn clip_duration_ms(clip: usize, seed: u64) -> f64 {
    let mut rng = crate::rng::stream(seed, &format!("synth-clip-{clip}"));
    2000.0 + rng.random::<f64>() * 2000.0
}

/// Generates the full synthetic corpus. Deterministic given the seed.
pub fn synth_generate(cfg: &SynthConfig) -> SynthOutput {
    let mut rng = crate::rng::stream(cfg.seed, "synth");
    let template = canonical_landmarks();
    let regions = build_regions(&template, crate::roi::DEFAULT_REGION_MARGIN)
        .expect("canonical template is non-degenerate");

    // One landmark clip per stimulus emotion: a static face sampled at
    // three times so nearest-frame matching has something to do.
    let landmarks: Vec<(StimulusEmotion, Vec<LandmarkFrame>)> = StimulusEmotion::ALL
        .iter()
        .map(|&e| {
            let frames = [0.0, 1500.0, 3000.0]
                .iter()
                .map(|&t| LandmarkFrame {
                    t,
                    points: template.points.clone(),
                })
                .collect();
            (e, frames)
        })
        .collect();

    let dt = 1000.0 / cfg.sample_rate;
    let mut sessions = Vec::with_capacity(cfg.n_participants);
    let mut profiles = Vec::with_capacity(cfg.n_participants);
    let mut ratings = Vec::new();

    for p in 0..cfg.n_participants {
        let participant_id = format!("p{p:03}");
        let raw_traits =
            PersonalityProfile::from_array(std::array::from_fn(|_| rng.random::<f64>() * 50.0));
        let scaled =
            PersonalityProfile::from_array(raw_traits.as_array().map(|v| v / 50.0));
        let environment = EnvironmentReading {
            lux: 200.0 + rng.random::<f64>() * 300.0,
            temp: 20.0 + rng.random::<f64>() * 5.0,
        };
        let pupil_base = 3.0 + (rng.random::<f64>() - 0.5) * 0.6;

        let mut trials = Vec::with_capacity(cfg.trials_per_participant);
        let mut session_t = 0.0;
        for clip in 0..cfg.trials_per_participant {
            let emotion = StimulusEmotion::ALL[clip % 6];
            let duration = clip_duration_ms(clip, cfg.seed);
            let trial_id = format!("clip{clip:03}");

            // Ratings.
            let (pv, pa) = perceived_deterministic(emotion, cfg.stimulus_coupling);
            let (fv, fa) = felt_deterministic(
                emotion,
                &scaled,
                cfg.stimulus_coupling,
                cfg.personality_coupling,
            );
            let rating = EmotionRating {
                perceived_valence: maybe_relabel(pv, cfg.label_noise, &mut rng),
                perceived_arousal: maybe_relabel(pa, cfg.label_noise, &mut rng),
                felt_valence: maybe_relabel(fv, cfg.label_noise, &mut rng),
                felt_arousal: maybe_relabel(fa, cfg.label_noise, &mut rng),
            };
            ratings.push(RatingRow {
                participant_id: participant_id.clone(),
                trial_id: trial_id.clone(),
                rating,
            });

            // Gaze trace: dwell on region targets, jump between them.
            let (_, base_arousal) = emotion_base(emotion);
            let pupil_trial = pupil_base + 0.05 * (base_arousal - 5.0);
            let dist = dwell_distribution(emotion);
            let mut samples: Vec<GazeSample> = Vec::new();
            let mut t = 0.0;
            let mut current = region_target(sample_region(&dist, &mut rng), &regions, &mut rng);
            let mut dwell_left = 150.0 + rng.random::<f64>() * 250.0;
            while t <= duration {
                if dwell_left <= 0.0 {
                    current = region_target(sample_region(&dist, &mut rng), &regions, &mut rng);
                    dwell_left = 150.0 + rng.random::<f64>() * 250.0;
                }
                let x = (current.0 + cfg.gaze_noise * gaussian(&mut rng)).clamp(0.0, 1.0);
                let y = (current.1 + cfg.gaze_noise * gaussian(&mut rng)).clamp(0.0, 1.0);
                let pupil = pupil_trial + 0.01 * gaussian(&mut rng);
                samples.push(GazeSample {
                    t,
                    // Stored in raw device pixels, like a real recording.
                    x: x * cfg.screen_width_px,
                    y: y * cfg.screen_height_px,
                    pupil,
                    valid: true,
                });
                t += dt;
                dwell_left -= dt;
            }
            // Blinks: 0-2 short invalid runs.
            let n_blinks = rng.random_range(0..=2);
            for _ in 0..n_blinks {
                let blink_start = rng.random::<f64>() * (duration - 200.0).max(1.0);
                let blink_len = 60.0 + rng.random::<f64>() * 90.0;
                for s in samples.iter_mut() {
                    if s.t >= blink_start && s.t <= blink_start + blink_len {
                        s.valid = false;
                        s.pupil = 0.0;
                    }
                }
            }

            trials.push(TrialWindow {
                trial_id,
                stimulus_emotion: emotion,
                start_t: session_t,
                end_t: session_t + duration,
                samples,
            });
            session_t += duration + 1000.0;
        }

        sessions.push(SessionRecording {
            participant_id,
            trials,
            environment,
            sample_rate: cfg.sample_rate,
        });
        profiles.push(raw_traits);
    }

    SynthOutput {
        sessions,
        profiles,
        landmarks,
        ratings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::bin_rating;

    #[test]
    fn default_scale_matches_study() {
        let cfg = SynthConfig::default();
        assert_eq!(cfg.n_participants, 73);
        assert_eq!(cfg.trials_per_participant, 84);
        assert_eq!(cfg.sample_rate, 150.0);
    }

    #[test]
    fn same_seed_is_identical() {
        let cfg = SynthConfig {
            n_participants: 2,
            trials_per_participant: 6,
            ..Default::default()
        };
        let a = synth_generate(&cfg);
        let b = synth_generate(&cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let cfg = SynthConfig {
            n_participants: 1,
            trials_per_participant: 6,
            seed: 1,
            ..Default::default()
        };
        let cfg2 = SynthConfig { seed: 2, ..cfg };
        assert_ne!(synth_generate(&cfg), synth_generate(&cfg2));
    }

    #[test]
    fn zero_personality_coupling_gives_independence() {
        // Chi-square independence of felt-valence bin vs neuroticism
        // tercile on ~5000 trials; statistic under the 1% critical value
        // for df = 4 means p > 0.01.
        let cfg = SynthConfig {
            n_participants: 60,
            trials_per_participant: 84,
            seed: 5,
            personality_coupling: 0.0,
            stimulus_coupling: 0.9,
            label_noise: 0.1,
            ..Default::default()
        };
        let out = synth_generate(&cfg);
        let mut table = [[0usize; 3]; 3];
        let mut i = 0;
        for (s, prof) in out.sessions.iter().zip(&out.profiles) {
            let n_scaled = prof.neuroticism / 50.0;
            let n_bin = if n_scaled < 1.0 / 3.0 {
                0
            } else if n_scaled < 2.0 / 3.0 {
                1
            } else {
                2
            };
            for _ in &s.trials {
                let felt = bin_rating(out.ratings[i].rating.felt_valence).unwrap();
                table[n_bin][felt.index()] += 1;
                i += 1;
            }
        }
        let total: usize = table.iter().flatten().sum();
        assert!(total >= 5000, "need ~5000 trials, got {total}");
        let mut chi2 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                let row: usize = table[r].iter().sum();
                let col: usize = table.iter().map(|x| x[c]).sum();
                let expected = row as f64 * col as f64 / total as f64;
                if expected > 0.0 {
                    let d = table[r][c] as f64 - expected;
                    chi2 += d * d / expected;
                }
            }
        }
        // Critical value chi2(0.99, df=4).
        assert!(chi2 < 13.277, "chi2 {chi2}, table {table:?}");
    }

    #[test]
    fn full_coupling_no_noise_is_deterministic_in_stimulus_and_traits() {
        let cfg = SynthConfig {
            n_participants: 5,
            trials_per_participant: 12,
            seed: 9,
            personality_coupling: 1.0,
            stimulus_coupling: 1.0,
            label_noise: 0.0,
            ..Default::default()
        };
        let out = synth_generate(&cfg);
        let mut i = 0;
        for (s, prof) in out.sessions.iter().zip(&out.profiles) {
            let scaled = PersonalityProfile::from_array(prof.as_array().map(|v| v / 50.0));
            for trial in &s.trials {
                let (fv, fa) = felt_deterministic(trial.stimulus_emotion, &scaled, 1.0, 1.0);
                assert_eq!(out.ratings[i].rating.felt_valence, fv);
                assert_eq!(out.ratings[i].rating.felt_arousal, fa);
                i += 1;
            }
        }
    }

    #[test]
    fn dwell_distributions_are_proper() {
        for e in StimulusEmotion::ALL {
            let d = dwell_distribution(e);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pupil_tracks_stimulus_arousal() {
        let cfg = SynthConfig {
            n_participants: 4,
            trials_per_participant: 24,
            seed: 3,
            gaze_noise: 0.0,
            ..Default::default()
        };
        let out = synth_generate(&cfg);
        // Mean valid pupil of Fear (arousal 8) trials exceeds Sad (3).
        let mean_pupil = |e: StimulusEmotion| {
            let (mut sum, mut n) = (0.0, 0usize);
            for s in &out.sessions {
                for t in &s.trials {
                    if t.stimulus_emotion == e {
                        for smp in t.samples.iter().filter(|s| s.valid) {
                            sum += smp.pupil;
                            n += 1;
                        }
                    }
                }
            }
            sum / n as f64
        };
        assert!(mean_pupil(StimulusEmotion::Fear) > mean_pupil(StimulusEmotion::Sad));
    }

    #[test]
    fn gaze_dwell_pattern_reflects_stimulus() {
        // Happy trials must put notably more gaze in the mouth region
        // than Fear trials do; this is the signal the eye branch learns.
        let cfg = SynthConfig {
            n_participants: 3,
            trials_per_participant: 24,
            seed: 8,
            // Unit screen: emitted pixels are already normalized.
            screen_width_px: 1.0,
            screen_height_px: 1.0,
            ..Default::default()
        };
        let out = synth_generate(&cfg);
        let template = canonical_landmarks();
        let regions = build_regions(&template, crate::roi::DEFAULT_REGION_MARGIN).unwrap();
        let frames = vec![template];
        let per_frame = vec![regions];
        let mouth_share = |e: StimulusEmotion| {
            let (mut acc, mut n) = (0.0, 0usize);
            for s in &out.sessions {
                for t in &s.trials {
                    if t.stimulus_emotion == e {
                        let p =
                            crate::roi::region_proportions(t, &frames, &per_frame).unwrap();
                        acc += p[RegionLabel::Mouth.index()];
                        n += 1;
                    }
                }
            }
            acc / n as f64
        };
        assert!(mouth_share(StimulusEmotion::Happy) > mouth_share(StimulusEmotion::Fear) + 0.2);
    }
}
