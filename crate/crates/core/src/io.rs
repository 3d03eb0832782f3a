//! File formats: gaze CSV, session JSON sidecar, landmark JSON, ratings
//! CSV, feature dump CSV, checkpoint JSON, results CSV, report JSON.
//! Every writer is deterministic, so identical inputs and seeds produce
//! byte-identical artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassBin, EmotionRating};
use crate::error::{Error, Result};
use crate::eval::ConfusionMatrix;
use crate::features::{
    FeatureRecord, LabelSet, PersonalityProfile, StimulusOneHot, TrialSequence, CHANNEL_NAMES,
    SEQ_CHANNELS, SEQ_STEPS,
};
use crate::geom::Point;
use crate::net::{Checkpoint, FusedModel, ModelConfig, ResultsRow, TrainConfig};
use crate::pipeline::{LandmarkMap, RatingMap};
use crate::roi::{LandmarkFrame, LANDMARK_COUNT};
use crate::signal::{
    EnvironmentReading, GazeSample, SessionRecording, StimulusEmotion, TrialWindow,
};
use crate::synth::RatingRow;
use crate::tensor::Tensor;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path, source: serde_json::Error) -> Error {
    Error::Json {
        path: path.display().to_string(),
        source,
    }
}

fn schema_err(path: &Path, row: Option<usize>, msg: impl Into<String>) -> Error {
    Error::Schema {
        path: path.display().to_string(),
        row,
        msg: msg.into(),
    }
}

/// FNV-1a 64 hex digest, used for checkpoint provenance.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h = (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

// ---------------------------------------------------------------------------
// Session JSON sidecar + gaze CSV
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrialMeta {
    trial_id: String,
    stimulus_emotion: StimulusEmotion,
    start_t: f64,
    end_t: f64,
}

/// The session sidecar. Carries the participant's raw BFI trait scores
/// alongside the trial windows, since they are per-session inputs with no
/// other home in the file layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionFile {
    participant_id: String,
    sample_rate: f64,
    environment: EnvironmentReading,
    personality: PersonalityProfile,
    trials: Vec<TrialMeta>,
}

/// Writes `<id>.json` and `<id>.csv` into `dir`.
pub fn save_session(
    dir: &Path,
    session: &SessionRecording,
    personality_raw: &PersonalityProfile,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let sidecar = SessionFile {
        participant_id: session.participant_id.clone(),
        sample_rate: session.sample_rate,
        environment: session.environment,
        personality: *personality_raw,
        trials: session
            .trials
            .iter()
            .map(|t| TrialMeta {
                trial_id: t.trial_id.clone(),
                stimulus_emotion: t.stimulus_emotion,
                start_t: t.start_t,
                end_t: t.end_t,
            })
            .collect(),
    };
    let json_path = dir.join(format!("{}.json", session.participant_id));
    let body = serde_json::to_string_pretty(&sidecar).map_err(|e| json_err(&json_path, e))?;
    fs::write(&json_path, body).map_err(|e| io_err(&json_path, e))?;

    let csv_path = dir.join(format!("{}.csv", session.participant_id));
    let mut out = String::from("t_ms,x,y,pupil_mm,valid\n");
    for trial in &session.trials {
        for s in &trial.samples {
            // Rows are in session time.
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                trial.start_t + s.t,
                s.x,
                s.y,
                s.pupil,
                if s.valid { 1 } else { 0 }
            ));
        }
    }
    fs::write(&csv_path, out).map_err(|e| io_err(&csv_path, e))?;
    Ok(())
}

const GAZE_HEADER: [&str; 5] = ["t_ms", "x", "y", "pupil_mm", "valid"];

fn parse_f64(path: &Path, row: usize, field: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| schema_err(path, Some(row), format!("bad {field} value `{v}`")))
}

fn parse_bool(path: &Path, row: usize, v: &str) -> Result<bool> {
    match v {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(schema_err(
            path,
            Some(row),
            format!("bad valid flag `{other}`"),
        )),
    }
}

/// Loads one session (sidecar + gaze CSV) and segments the stream into
/// trial windows with trial-relative timestamps.
pub fn load_session(json_path: &Path) -> Result<(SessionRecording, PersonalityProfile)> {
    let body = fs::read_to_string(json_path).map_err(|e| io_err(json_path, e))?;
    let sidecar: SessionFile =
        serde_json::from_str(&body).map_err(|e| json_err(json_path, e))?;
    if sidecar.sample_rate <= 0.0 {
        return Err(schema_err(json_path, None, "sample_rate must be positive"));
    }
    let csv_path = json_path.with_extension("csv");
    let text = fs::read_to_string(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| schema_err(&csv_path, Some(1), "empty file"))?
        .1;
    let cols: Vec<&str> = header.split(',').collect();
    for want in GAZE_HEADER {
        if !cols.contains(&want) {
            return Err(schema_err(
                &csv_path,
                Some(1),
                format!("missing column `{want}`"),
            ));
        }
    }
    let idx_of = |name: &str| cols.iter().position(|c| *c == name).unwrap();
    let (it, ix, iy, ip, iv) = (
        idx_of("t_ms"),
        idx_of("x"),
        idx_of("y"),
        idx_of("pupil_mm"),
        idx_of("valid"),
    );

    let mut rows: Vec<(f64, GazeSample)> = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let row = lineno + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(schema_err(
                &csv_path,
                Some(row),
                format!("expected {} fields, found {}", cols.len(), fields.len()),
            ));
        }
        let t = parse_f64(&csv_path, row, "t_ms", fields[it])?;
        if t < last_t {
            return Err(schema_err(&csv_path, Some(row), "rows not sorted by t_ms"));
        }
        last_t = t;
        rows.push((
            t,
            GazeSample {
                t: 0.0, // rebased below
                x: parse_f64(&csv_path, row, "x", fields[ix])?,
                y: parse_f64(&csv_path, row, "y", fields[iy])?,
                pupil: parse_f64(&csv_path, row, "pupil_mm", fields[ip])?,
                valid: parse_bool(&csv_path, row, fields[iv])?,
            },
        ));
    }

    // Trials must not overlap in session time.
    let mut windows: Vec<(f64, f64, &str)> = sidecar
        .trials
        .iter()
        .map(|m| (m.start_t, m.end_t, m.trial_id.as_str()))
        .collect();
    windows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pair in windows.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(schema_err(
                json_path,
                None,
                format!("trials `{}` and `{}` overlap", pair[0].2, pair[1].2),
            ));
        }
    }

    let trials = sidecar
        .trials
        .iter()
        .map(|m| {
            if m.start_t >= m.end_t {
                return Err(schema_err(
                    json_path,
                    None,
                    format!("trial `{}` has start_t >= end_t", m.trial_id),
                ));
            }
            let samples: Vec<GazeSample> = rows
                .iter()
                .filter(|(t, _)| *t >= m.start_t && *t <= m.end_t)
                .map(|(t, s)| GazeSample {
                    t: t - m.start_t,
                    ..*s
                })
                .collect();
            Ok(TrialWindow {
                trial_id: m.trial_id.clone(),
                stimulus_emotion: m.stimulus_emotion,
                start_t: m.start_t,
                end_t: m.end_t,
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok((
        SessionRecording {
            participant_id: sidecar.participant_id,
            trials,
            environment: sidecar.environment,
            sample_rate: sidecar.sample_rate,
        },
        sidecar.personality,
    ))
}

/// Loads every `*.json` session in a directory, sorted by file name.
pub fn load_sessions(dir: &Path) -> Result<Vec<(SessionRecording, PersonalityProfile)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_session(p)).collect()
}

// ---------------------------------------------------------------------------
// Landmark JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LandmarkFrameFile {
    t_ms: f64,
    points: Vec<[f64; 2]>,
}

pub fn save_landmarks(dir: &Path, emotion: StimulusEmotion, frames: &[LandmarkFrame]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(format!("{}.json", emotion.name()));
    let body: Vec<LandmarkFrameFile> = frames
        .iter()
        .map(|f| LandmarkFrameFile {
            t_ms: f.t,
            points: f.points.iter().map(|p| [p.x, p.y]).collect(),
        })
        .collect();
    let text = serde_json::to_string_pretty(&body).map_err(|e| json_err(&path, e))?;
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(())
}

pub fn load_landmark_file(path: &Path) -> Result<Vec<LandmarkFrame>> {
    let body = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let frames: Vec<LandmarkFrameFile> =
        serde_json::from_str(&body).map_err(|e| json_err(path, e))?;
    frames
        .into_iter()
        .map(|f| {
            if f.points.len() != LANDMARK_COUNT {
                return Err(schema_err(
                    path,
                    None,
                    format!("frame needs {LANDMARK_COUNT} points, got {}", f.points.len()),
                ));
            }
            Ok(LandmarkFrame {
                t: f.t_ms,
                points: f.points.iter().map(|p| Point::new(p[0], p[1])).collect(),
            })
        })
        .collect()
}

/// Loads `<emotion>.json` clips from a directory into the emotion-keyed map.
pub fn load_landmarks(dir: &Path) -> Result<LandmarkMap> {
    let mut map = BTreeMap::new();
    for e in StimulusEmotion::ALL {
        let path = dir.join(format!("{}.json", e.name()));
        if path.exists() {
            map.insert(e, load_landmark_file(&path)?);
        }
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// Ratings CSV
// ---------------------------------------------------------------------------

pub fn save_ratings(path: &Path, rows: &[RatingRow]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let mut out = String::from(
        "participant_id,trial_id,perceived_valence,perceived_arousal,felt_valence,felt_arousal\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.participant_id,
            r.trial_id,
            r.rating.perceived_valence,
            r.rating.perceived_arousal,
            r.rating.felt_valence,
            r.rating.felt_arousal
        ));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn load_ratings(path: &Path) -> Result<Vec<RatingRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    for want in [
        "participant_id",
        "trial_id",
        "perceived_valence",
        "perceived_arousal",
        "felt_valence",
        "felt_arousal",
    ] {
        if !headers.iter().any(|h| h == want) {
            return Err(schema_err(path, Some(1), format!("missing column `{want}`")));
        }
    }
    let idx = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        let get_u8 = |name: &str| -> Result<u8> {
            record[idx(name)]
                .parse::<u8>()
                .map_err(|_| schema_err(path, Some(row), format!("bad {name} value")))
        };
        let rating = EmotionRating {
            perceived_valence: get_u8("perceived_valence")?,
            perceived_arousal: get_u8("perceived_arousal")?,
            felt_valence: get_u8("felt_valence")?,
            felt_arousal: get_u8("felt_arousal")?,
        };
        rating
            .validate()
            .map_err(|e| schema_err(path, Some(row), e.to_string()))?;
        rows.push(RatingRow {
            participant_id: record[idx("participant_id")].to_string(),
            trial_id: record[idx("trial_id")].to_string(),
            rating,
        });
    }
    Ok(rows)
}

pub fn ratings_to_map(rows: &[RatingRow]) -> RatingMap {
    rows.iter()
        .map(|r| ((r.participant_id.clone(), r.trial_id.clone()), r.rating))
        .collect()
}

// ---------------------------------------------------------------------------
// Feature dump CSV
// ---------------------------------------------------------------------------

/// Column names after the two id columns: 180 sequence entries
/// (step-major), 5 personality, 6 one-hot, 2 environment, 4 labels.
pub fn feature_columns() -> Vec<String> {
    let mut cols = Vec::with_capacity(197);
    for step in 0..SEQ_STEPS {
        for ch in CHANNEL_NAMES {
            cols.push(format!("s{step:02}_{ch}"));
        }
    }
    for p in [
        "openness",
        "conscientiousness",
        "extraversion",
        "agreeableness",
        "neuroticism",
    ] {
        cols.push(p.to_string());
    }
    for e in StimulusEmotion::ALL {
        cols.push(format!("stim_{}", e.name()));
    }
    cols.push("lux".into());
    cols.push("temp".into());
    for l in [
        "perceived_valence",
        "perceived_arousal",
        "felt_valence",
        "felt_arousal",
    ] {
        cols.push(l.to_string());
    }
    cols
}

pub fn save_features(path: &Path, records: &[FeatureRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let mut out = String::from("participant_id,trial_id,");
    out.push_str(&feature_columns().join(","));
    out.push('\n');
    for r in records {
        out.push_str(&r.participant_id);
        out.push(',');
        out.push_str(&r.trial_id);
        for step in 0..SEQ_STEPS {
            for c in 0..SEQ_CHANNELS {
                out.push_str(&format!(",{}", r.sequence.values[step][c]));
            }
        }
        for v in r.personality.as_array() {
            out.push_str(&format!(",{v}"));
        }
        for v in r.stimulus.0 {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}", r.environment.0));
        out.push_str(&format!(",{}", r.environment.1));
        match &r.labels {
            Some(l) => {
                for b in [
                    l.perceived_valence,
                    l.perceived_arousal,
                    l.felt_valence,
                    l.felt_arousal,
                ] {
                    out.push_str(&format!(",{}", b.index()));
                }
            }
            None => out.push_str(",,,,"),
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut expected = vec!["participant_id".to_string(), "trial_id".to_string()];
    expected.extend(feature_columns());
    for want in &expected {
        if !headers.iter().any(|h| h == want) {
            return Err(schema_err(path, Some(1), format!("missing column `{want}`")));
        }
    }
    if headers.len() != expected.len() {
        return Err(schema_err(
            path,
            Some(1),
            format!("expected {} columns, found {}", expected.len(), headers.len()),
        ));
    }

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        if rec.len() != expected.len() {
            return Err(schema_err(
                path,
                Some(row),
                format!("expected {} fields, found {}", expected.len(), rec.len()),
            ));
        }
        let fval = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| schema_err(path, Some(row), format!("bad number in `{}`", expected[k])))
        };
        let mut k = 2;
        let mut seq = TrialSequence::zeros();
        for step in 0..SEQ_STEPS {
            for c in 0..SEQ_CHANNELS {
                seq.values[step][c] = fval(k)?;
                k += 1;
            }
        }
        let mut pers = [0.0; 5];
        for p in &mut pers {
            *p = fval(k)?;
            k += 1;
        }
        let mut onehot = [0.0; 6];
        for o in &mut onehot {
            *o = fval(k)?;
            k += 1;
        }
        let lux = fval(k)?;
        let temp = fval(k + 1)?;
        k += 2;
        let labels = if rec[k].is_empty() {
            None
        } else {
            let mut bins = [ClassBin::Low; 4];
            for b in &mut bins {
                let v: usize = rec[k].parse().map_err(|_| {
                    schema_err(path, Some(row), format!("bad label in `{}`", expected[k]))
                })?;
                if v > 2 {
                    return Err(schema_err(path, Some(row), "label index out of range"));
                }
                *b = ClassBin::from_index(v);
                k += 1;
            }
            Some(LabelSet {
                perceived_valence: bins[0],
                perceived_arousal: bins[1],
                felt_valence: bins[2],
                felt_arousal: bins[3],
            })
        };
        records.push(FeatureRecord {
            participant_id: rec[0].to_string(),
            trial_id: rec[1].to_string(),
            sequence: seq,
            personality: PersonalityProfile::from_array(pers),
            stimulus: StimulusOneHot(onehot),
            environment: (lux, temp),
            labels,
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Checkpoint JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorBlob {
    name: String,
    shape: Vec<usize>,
    /// Little-endian 64-bit floats, base64.
    data_b64: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointFile {
    model_config: ModelConfig,
    train_config: TrainConfig,
    scalers: crate::features::ScalerParams,
    history: Vec<crate::net::EpochRecord>,
    best_epoch: usize,
    params: Vec<TensorBlob>,
}

fn encode_tensor(name: &str, t: &Tensor<f64>) -> TensorBlob {
    let mut bytes = Vec::with_capacity(t.data.len() * 8);
    for v in &t.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    TensorBlob {
        name: name.to_string(),
        shape: t.shape.clone(),
        data_b64: BASE64.encode(bytes),
    }
}

fn decode_tensor(path: &Path, blob: &TensorBlob) -> Result<Tensor<f64>> {
    let bytes = BASE64
        .decode(&blob.data_b64)
        .map_err(|e| schema_err(path, None, format!("bad base64 in `{}`: {e}", blob.name)))?;
    if bytes.len() % 8 != 0 {
        return Err(schema_err(path, None, "tensor byte length not a multiple of 8"));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let expect: usize = blob.shape.iter().product();
    if expect != data.len() {
        return Err(schema_err(
            path,
            None,
            format!(
                "tensor `{}`: shape {:?} wants {expect} values, found {}",
                blob.name,
                blob.shape,
                data.len()
            ),
        ));
    }
    Ok(Tensor::from_vec(&blob.shape, data))
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let file = CheckpointFile {
        model_config: ckpt.model.config,
        train_config: ckpt.train_config,
        scalers: ckpt.scalers.clone(),
        history: ckpt.history.clone(),
        best_epoch: ckpt.best_epoch,
        params: ckpt
            .model
            .tensors()
            .iter()
            .map(|(n, t)| encode_tensor(n, t))
            .collect(),
    };
    let body = serde_json::to_string_pretty(&file).map_err(|e| json_err(path, e))?;
    fs::write(path, body).map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let body = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: CheckpointFile = serde_json::from_str(&body).map_err(|e| json_err(path, e))?;
    let mut rng = crate::rng::stream(0, "checkpoint-load-unused");
    let mut model: FusedModel<f64> = FusedModel::init(file.model_config, &mut rng);
    for (name, tensor) in model.tensors_mut() {
        let blob = file
            .params
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| schema_err(path, None, format!("missing parameter `{name}`")))?;
        let decoded = decode_tensor(path, blob)?;
        if decoded.shape != tensor.shape {
            return Err(Error::ShapeMismatch {
                expected: format!("{name} {:?}", tensor.shape),
                found: format!("{:?}", decoded.shape),
            });
        }
        *tensor = decoded;
    }
    Ok(Checkpoint {
        model,
        train_config: file.train_config,
        scalers: file.scalers,
        history: file.history,
        best_epoch: file.best_epoch,
    })
}

// ---------------------------------------------------------------------------
// Results CSV + report JSON
// ---------------------------------------------------------------------------

pub fn save_results(path: &Path, rows: &[ResultsRow]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let mut out = String::from("label,f1_low,f1_medium,f1_high,macro_f1,learning_rate,dropout\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.label, r.f1_low, r.f1_medium, r.f1_high, r.macro_f1, r.learning_rate, r.dropout
        ));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Full evaluation report for one checkpoint on one split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub target_label: String,
    pub split: String,
    pub n_examples: usize,
    pub confusion: ConfusionMatrix,
    pub per_class_f1: [f64; 3],
    pub macro_f1: f64,
    /// Mean modal rater share per clip, percent, per rating label.
    pub agreement: BTreeMap<String, f64>,
    pub checkpoint_hash: String,
    pub model_config: ModelConfig,
}

pub fn save_report(path: &Path, report: &EvalReport) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let body = serde_json::to_string_pretty(report).map_err(|e| json_err(path, e))?;
    fs::write(path, body).map_err(|e| io_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_generate, SynthConfig};
    use tempfile::tempdir;

    fn small_synth() -> crate::synth::SynthOutput {
        synth_generate(&SynthConfig {
            n_participants: 2,
            trials_per_participant: 6,
            seed: 11,
            ..Default::default()
        })
    }

    #[test]
    fn session_round_trips() {
        let out = small_synth();
        let dir = tempdir().unwrap();
        save_session(dir.path(), &out.sessions[0], &out.profiles[0]).unwrap();
        let (loaded, profile) = load_session(
            &dir.path()
                .join(format!("{}.json", out.sessions[0].participant_id)),
        )
        .unwrap();
        assert_eq!(profile, out.profiles[0]);
        assert_eq!(loaded.trials.len(), out.sessions[0].trials.len());
        for (a, b) in loaded.trials.iter().zip(&out.sessions[0].trials) {
            assert_eq!(a.trial_id, b.trial_id);
            assert_eq!(a.samples.len(), b.samples.len());
            for (sa, sb) in a.samples.iter().zip(&b.samples) {
                // Timestamps rebase through session time and back.
                assert!((sa.t - sb.t).abs() < 1e-9);
                assert_eq!(sa.x, sb.x);
                assert_eq!(sa.pupil, sb.pupil);
                assert_eq!(sa.valid, sb.valid);
            }
        }
    }

    #[test]
    fn gaze_csv_missing_column_names_it() {
        let dir = tempdir().unwrap();
        let json = dir.path().join("p.json");
        fs::write(
            &json,
            serde_json::to_string(&SessionFile {
                participant_id: "p".into(),
                sample_rate: 150.0,
                environment: EnvironmentReading { lux: 1.0, temp: 1.0 },
                personality: PersonalityProfile::default(),
                trials: vec![],
            })
            .unwrap(),
        )
        .unwrap();
        fs::write(dir.path().join("p.csv"), "t_ms,x,y,valid\n").unwrap();
        let err = load_session(&json).unwrap_err();
        assert!(err.to_string().contains("pupil_mm"), "{err}");
    }

    #[test]
    fn overlapping_trials_are_rejected() {
        let dir = tempdir().unwrap();
        let json = dir.path().join("p.json");
        let sidecar = SessionFile {
            participant_id: "p".into(),
            sample_rate: 150.0,
            environment: EnvironmentReading { lux: 1.0, temp: 1.0 },
            personality: PersonalityProfile::default(),
            trials: vec![
                TrialMeta {
                    trial_id: "a".into(),
                    stimulus_emotion: StimulusEmotion::Happy,
                    start_t: 0.0,
                    end_t: 2000.0,
                },
                TrialMeta {
                    trial_id: "b".into(),
                    stimulus_emotion: StimulusEmotion::Sad,
                    start_t: 1500.0,
                    end_t: 3500.0,
                },
            ],
        };
        fs::write(&json, serde_json::to_string(&sidecar).unwrap()).unwrap();
        fs::write(dir.path().join("p.csv"), "t_ms,x,y,pupil_mm,valid\n").unwrap();
        let err = load_session(&json).unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
    }

    #[test]
    fn landmarks_round_trip() {
        let out = small_synth();
        let dir = tempdir().unwrap();
        for (e, frames) in &out.landmarks {
            save_landmarks(dir.path(), *e, frames).unwrap();
        }
        let map = load_landmarks(dir.path()).unwrap();
        assert_eq!(map.len(), 6);
        let anger = &map[&StimulusEmotion::Anger];
        assert_eq!(anger.len(), 3);
        assert_eq!(anger[0].points.len(), LANDMARK_COUNT);
    }

    #[test]
    fn ratings_round_trip_and_validation() {
        let out = small_synth();
        let dir = tempdir().unwrap();
        let path = dir.path().join("ratings.csv");
        save_ratings(&path, &out.ratings).unwrap();
        let loaded = load_ratings(&path).unwrap();
        assert_eq!(loaded, out.ratings);

        fs::write(
            &path,
            "participant_id,trial_id,perceived_valence,perceived_arousal,felt_valence,felt_arousal\np,c,0,5,5,5\n",
        )
        .unwrap();
        let err = load_ratings(&path).unwrap_err();
        assert!(matches!(err, Error::Schema { row: Some(2), .. }), "{err}");
    }

    #[test]
    fn features_round_trip() {
        use crate::pipeline::{extract_session_features, PipelineConfig};
        let out = small_synth();
        let landmarks: LandmarkMap = out.landmarks.iter().cloned().collect();
        let ratings = ratings_to_map(&out.ratings);
        let (records, _) = extract_session_features(
            &out.sessions[0],
            &out.profiles[0],
            &landmarks,
            &ratings,
            &PipelineConfig::default(),
        )
        .unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("features.csv");
        save_features(&path, &records).unwrap();
        let loaded = load_features(&path).unwrap();
        assert_eq!(loaded.len(), records.len());
        for (a, b) in loaded.iter().zip(&records) {
            assert_eq!(a.participant_id, b.participant_id);
            assert_eq!(a.labels, b.labels);
            // Float columns survive the shortest-round-trip formatting.
            assert_eq!(a.sequence, b.sequence);
            assert_eq!(a.environment, b.environment);
        }
    }

    #[test]
    fn feature_header_has_197_data_columns() {
        assert_eq!(feature_columns().len(), 197);
    }

    #[test]
    fn checkpoint_round_trips_bitwise() {
        use crate::features::{ChannelScaler, ScalerParams, SEQ_CHANNELS};
        let mut rng = crate::rng::stream(19, "ckpt-test");
        let model: FusedModel<f64> = FusedModel::init(
            crate::net::ModelConfig {
                lstm_hidden: 4,
                ..Default::default()
            },
            &mut rng,
        );
        let ckpt = Checkpoint {
            model,
            train_config: TrainConfig::default(),
            scalers: ScalerParams {
                sequence: [ChannelScaler::None; SEQ_CHANNELS],
                environment: [
                    ChannelScaler::Standard { mean: 1.0, std: 2.0 },
                    ChannelScaler::Constant { value: 21.5 },
                ],
            },
            history: vec![crate::net::EpochRecord {
                epoch: 1,
                train_loss: 0.5,
                val_macro_f1: 0.4,
            }],
            best_epoch: 1,
        };
        let dir = tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        save_checkpoint(&path, &ckpt).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, ckpt);
        // Bitwise equality of parameters.
        for ((_, a), (_, b)) in loaded.model.tensors().iter().zip(ckpt.model.tensors()) {
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn results_csv_shape() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("results.csv");
        save_results(
            &path,
            &[ResultsRow {
                label: "felt_arousal".into(),
                f1_low: 0.58,
                f1_medium: 0.58,
                f1_high: 0.40,
                macro_f1: 0.52,
                learning_rate: 0.0002,
                dropout: 0.2,
            }],
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("label,f1_low,f1_medium,f1_high,macro_f1,learning_rate,dropout\n"));
        assert!(text.contains("felt_arousal,0.58,0.58,0.4,0.52,0.0002,0.2"));
    }
}
