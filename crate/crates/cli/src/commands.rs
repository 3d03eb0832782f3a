//! The five pipeline stages. Each one reads and writes files only, so
//! stages are independently runnable and resumable.

use std::collections::BTreeMap;
use std::path::Path;

use gaze_affect::baseline::{svm_predict, svm_train, SvmFeatureLayout};
use gaze_affect::dataset::{agreement, bin_rating, stratified_split, ClassBin, Split};
use gaze_affect::error::{Error, Result};
use gaze_affect::eval::{confusion, macro_f1, per_class_f1};
use gaze_affect::features::{FeatureRecord, TargetLabel};
use gaze_affect::io;
use gaze_affect::net::{grid_search, predict, train, Checkpoint, ResultsRow};
use gaze_affect::pipeline::extract_session_features;
use gaze_affect::synth::synth_generate;

use crate::manifest::{feature_set, PipelineManifest};

/// `synth`: writes the synthetic corpus in the exact input formats the
/// rest of the pipeline consumes.
pub fn cmd_synth(manifest: &PipelineManifest) -> Result<()> {
    let cfg = manifest.effective_synth();
    let out = synth_generate(&cfg);
    for (session, profile) in out.sessions.iter().zip(&out.profiles) {
        io::save_session(&manifest.paths.sessions, session, profile)?;
    }
    for (emotion, frames) in &out.landmarks {
        io::save_landmarks(&manifest.paths.landmarks, *emotion, frames)?;
    }
    io::save_ratings(&manifest.paths.ratings, &out.ratings)?;
    println!(
        "synth: {} participants x {} trials -> {}, {}, {}",
        cfg.n_participants,
        cfg.trials_per_participant,
        manifest.paths.sessions.display(),
        manifest.paths.landmarks.display(),
        manifest.paths.ratings.display()
    );
    Ok(())
}

/// `features`: signal -> events -> regions -> sequence per trial, dumped
/// as one CSV row per surviving trial.
pub fn cmd_features(manifest: &PipelineManifest) -> Result<()> {
    let sessions = io::load_sessions(&manifest.paths.sessions)?;
    let landmarks = io::load_landmarks(&manifest.paths.landmarks)?;
    let ratings = io::ratings_to_map(&io::load_ratings(&manifest.paths.ratings)?);

    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for (session, profile) in &sessions {
        let (mut recs, mut drops) = extract_session_features(
            session,
            profile,
            &landmarks,
            &ratings,
            &manifest.pipeline,
        )?;
        records.append(&mut recs);
        dropped.append(&mut drops);
    }
    let path = manifest.features_path();
    io::save_features(&path, &records)?;
    for d in &dropped {
        println!(
            "dropped {}/{}: {}",
            d.participant_id, d.trial_id, d.reason
        );
    }
    println!(
        "features: {} trials kept, {} dropped -> {}",
        records.len(),
        dropped.len(),
        path.display()
    );
    Ok(())
}

fn split_records(
    records: &[FeatureRecord],
    target: TargetLabel,
    manifest: &PipelineManifest,
) -> Result<(Split, Vec<ClassBin>)> {
    let labels: Vec<ClassBin> = records
        .iter()
        .map(|r| {
            r.labels
                .map(|l| l.get(target))
                .ok_or_else(|| Error::MissingLabels(r.trial_id.clone()))
        })
        .collect::<Result<_>>()?;
    let split = stratified_split(&labels, &manifest.effective_split())?;
    Ok((split, labels))
}

fn gather(records: &[FeatureRecord], idx: &[usize]) -> Vec<FeatureRecord> {
    idx.iter().map(|&i| records[i].clone()).collect()
}

fn test_metrics(
    ckpt: &Checkpoint,
    records: &[FeatureRecord],
    labels: &[ClassBin],
    idx: &[usize],
) -> Result<(ResultsRow, usize)> {
    let truth: Vec<ClassBin> = idx.iter().map(|&i| labels[i]).collect();
    let preds: Vec<ClassBin> = idx
        .iter()
        .map(|&i| predict(ckpt, &records[i]).map(|(b, _)| b))
        .collect::<Result<_>>()?;
    let cm = confusion(&truth, &preds)?;
    let per = per_class_f1(&cm);
    Ok((
        ResultsRow {
            label: ckpt.train_config.target_label.name().to_string(),
            f1_low: per.f1[0],
            f1_medium: per.f1[1],
            f1_high: per.f1[2],
            macro_f1: macro_f1(&cm),
            learning_rate: ckpt.train_config.learning_rate,
            dropout: ckpt.model.config.dropout_rate,
        },
        truth.len(),
    ))
}

/// `train`: split, scale, train one model for the target label, evaluate
/// on the held-out test split, write checkpoint + results row. The SVM
/// baseline trains alongside and lands in the same results table.
pub fn cmd_train(
    manifest: &PipelineManifest,
    target: TargetLabel,
    feature_set_name: &str,
) -> Result<()> {
    let records = io::load_features(&manifest.features_path())?;
    let model_cfg = feature_set(feature_set_name, &manifest.model)?;
    let mut train_cfg = manifest.effective_train();
    train_cfg.target_label = target;

    let (split, labels) = split_records(&records, target, manifest)?;
    let train_set = gather(&records, &split.train);
    let val_set = gather(&records, &split.val);

    let ckpt = train(&train_set, &val_set, &model_cfg, &train_cfg)?;
    let ckpt_path = manifest
        .paths
        .out
        .join(format!("checkpoint_{}_{}.json", target.name(), feature_set_name));
    io::save_checkpoint(&ckpt_path, &ckpt)?;

    let (row, n_test) = test_metrics(&ckpt, &records, &labels, &split.test)?;
    let results_path = manifest
        .paths
        .out
        .join(format!("results_{}_{}.csv", target.name(), feature_set_name));
    io::save_results(&results_path, std::slice::from_ref(&row))?;
    println!(
        "train[{}/{}]: best epoch {} (val F1 {:.3}), test macro F1 {:.3} on {} trials -> {}",
        target.name(),
        feature_set_name,
        ckpt.best_epoch,
        ckpt.history[ckpt.best_epoch - 1].val_macro_f1,
        row.macro_f1,
        n_test,
        ckpt_path.display()
    );
    Ok(())
}

/// `svm`: the non-temporal baseline on stimulus one-hot (optionally plus
/// personality), same results-table schema.
pub fn cmd_svm(
    manifest: &PipelineManifest,
    target: TargetLabel,
    with_personality: bool,
    reg_strength: f64,
) -> Result<()> {
    let records = io::load_features(&manifest.features_path())?;
    let (split, labels) = split_records(&records, target, manifest)?;
    let layout = if with_personality {
        SvmFeatureLayout::StimulusPersonality
    } else {
        SvmFeatureLayout::Stimulus
    };
    let train_set = gather(&records, &split.train);
    let train_labels: Vec<ClassBin> = split.train.iter().map(|&i| labels[i]).collect();
    let model = svm_train::<f64>(
        &train_set,
        &train_labels,
        layout,
        reg_strength,
        500,
        manifest.svm_seed(),
    )?;
    let truth: Vec<ClassBin> = split.test.iter().map(|&i| labels[i]).collect();
    let preds: Vec<ClassBin> = split
        .test
        .iter()
        .map(|&i| svm_predict(&model, &records[i]))
        .collect::<Result<_>>()?;
    let cm = confusion(&truth, &preds)?;
    let per = per_class_f1(&cm);
    let row = ResultsRow {
        label: target.name().to_string(),
        f1_low: per.f1[0],
        f1_medium: per.f1[1],
        f1_high: per.f1[2],
        macro_f1: macro_f1(&cm),
        learning_rate: f64::NAN,
        dropout: f64::NAN,
    };
    let name = if with_personality {
        "svm_stimulus_personality"
    } else {
        "svm_stimulus"
    };
    let path = manifest
        .paths
        .out
        .join(format!("results_{}_{}.csv", target.name(), name));
    io::save_results(&path, std::slice::from_ref(&row))?;
    println!(
        "svm[{}/{}]: test macro F1 {:.3} -> {}",
        target.name(),
        name,
        row.macro_f1,
        path.display()
    );
    Ok(())
}

/// `gridsearch`: one model per grid cell, table sorted by validation
/// macro F1 descending.
pub fn cmd_gridsearch(manifest: &PipelineManifest, target: TargetLabel) -> Result<()> {
    let records = io::load_features(&manifest.features_path())?;
    let mut train_cfg = manifest.effective_train();
    train_cfg.target_label = target;
    let (split, _) = split_records(&records, target, manifest)?;
    let train_set = gather(&records, &split.train);
    let val_set = gather(&records, &split.val);

    let outcome = grid_search(&train_set, &val_set, &manifest.model, &train_cfg, &manifest.grid)?;
    let mut rows = outcome.rows.clone();
    rows.sort_by(|a, b| {
        b.macro_f1
            .partial_cmp(&a.macro_f1)
            .unwrap()
            .then(a.learning_rate.partial_cmp(&b.learning_rate).unwrap())
            .then(a.dropout.partial_cmp(&b.dropout).unwrap())
    });
    let path = manifest
        .paths
        .out
        .join(format!("gridsearch_{}.csv", target.name()));
    io::save_results(&path, &rows)?;
    for (lr, dr, wd, msg) in &outcome.failures {
        println!("cell (lr {lr}, dropout {dr}, wd {wd}) failed: {msg}");
    }
    println!(
        "gridsearch[{}]: {} cells ok, {} failed; best val macro F1 {:.3} at lr {} dropout {} -> {}",
        target.name(),
        outcome.rows.len(),
        outcome.failures.len(),
        outcome.best_macro_f1,
        outcome.best_train.learning_rate,
        outcome.best_model.dropout_rate,
        path.display()
    );
    Ok(())
}

/// `eval`: full report for a checkpoint on one split, including the
/// rater-agreement statistics.
pub fn cmd_eval(
    manifest: &PipelineManifest,
    checkpoint_path: &Path,
    split_name: &str,
) -> Result<()> {
    let records = io::load_features(&manifest.features_path())?;
    let ckpt = io::load_checkpoint(checkpoint_path)?;
    let target = ckpt.train_config.target_label;
    let (split, labels) = split_records(&records, target, manifest)?;
    let idx: Vec<usize> = match split_name {
        "train" => split.train.clone(),
        "val" => split.val.clone(),
        "test" => split.test.clone(),
        "all" => (0..records.len()).collect(),
        other => return Err(Error::UnknownLabel(format!("split `{other}`"))),
    };

    let truth: Vec<ClassBin> = idx.iter().map(|&i| labels[i]).collect();
    let preds: Vec<ClassBin> = idx
        .iter()
        .map(|&i| predict(&ckpt, &records[i]).map(|(b, _)| b))
        .collect::<Result<_>>()?;
    let cm = confusion(&truth, &preds)?;
    let per = per_class_f1(&cm);

    // Agreement per rating label over the ratings file, grouped by clip.
    let ratings = io::load_ratings(&manifest.paths.ratings)?;
    let mut agreement_stats = BTreeMap::new();
    for label in TargetLabel::ALL {
        let mut groups: BTreeMap<String, Vec<ClassBin>> = BTreeMap::new();
        for r in &ratings {
            let v = match label {
                TargetLabel::PerceivedValence => r.rating.perceived_valence,
                TargetLabel::PerceivedArousal => r.rating.perceived_arousal,
                TargetLabel::FeltValence => r.rating.felt_valence,
                TargetLabel::FeltArousal => r.rating.felt_arousal,
            };
            groups
                .entry(r.trial_id.clone())
                .or_default()
                .push(bin_rating(v)?);
        }
        let groups: Vec<Vec<ClassBin>> = groups.into_values().collect();
        agreement_stats.insert(label.name().to_string(), agreement(&groups)?);
    }

    let ckpt_bytes = std::fs::read(checkpoint_path).map_err(|e| Error::Io {
        path: checkpoint_path.display().to_string(),
        source: e,
    })?;
    let report = io::EvalReport {
        target_label: target.name().to_string(),
        split: split_name.to_string(),
        n_examples: idx.len(),
        confusion: cm,
        per_class_f1: per.f1,
        macro_f1: macro_f1(&cm),
        agreement: agreement_stats,
        checkpoint_hash: io::fnv1a_hex(&ckpt_bytes),
        model_config: ckpt.model.config,
    };
    let path = manifest
        .paths
        .out
        .join(format!("report_{}_{}.json", target.name(), split_name));
    io::save_report(&path, &report)?;
    println!(
        "eval[{}/{}]: macro F1 {:.3} on {} trials -> {}",
        target.name(),
        split_name,
        report.macro_f1,
        report.n_examples,
        path.display()
    );
    Ok(())
}
