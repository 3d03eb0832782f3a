//! Label binning, stratified splitting, class weighting, and the
//! rater-agreement statistic.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::PersonalityProfile;
use crate::rng::gaussian;

/// One trial's self-reported ratings, each on the 9-point scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmotionRating {
    pub perceived_valence: u8,
    pub perceived_arousal: u8,
    pub felt_valence: u8,
    pub felt_arousal: u8,
}

impl EmotionRating {
    pub fn validate(&self) -> Result<()> {
        for v in [
            self.perceived_valence,
            self.perceived_arousal,
            self.felt_valence,
            self.felt_arousal,
        ] {
            if !(1..=9).contains(&v) {
                return Err(Error::OutOfRange {
                    what: "rating",
                    value: v as f64,
                    expected: "in 1..=9",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassBin {
    Low,
    Medium,
    High,
}

impl ClassBin {
    pub const ALL: [ClassBin; 3] = [ClassBin::Low, ClassBin::Medium, ClassBin::High];

    pub fn index(&self) -> usize {
        match self {
            ClassBin::Low => 0,
            ClassBin::Medium => 1,
            ClassBin::High => 2,
        }
    }

    pub fn from_index(i: usize) -> ClassBin {
        ClassBin::ALL[i]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassBin::Low => "low",
            ClassBin::Medium => "medium",
            ClassBin::High => "high",
        }
    }
}

/// 1-3 low, 4-6 medium, 7-9 high.
pub fn bin_rating(r: u8) -> Result<ClassBin> {
    match r {
        1..=3 => Ok(ClassBin::Low),
        4..=6 => Ok(ClassBin::Medium),
        7..=9 => Ok(ClassBin::High),
        other => Err(Error::OutOfRange {
            what: "rating",
            value: other as f64,
            expected: "in 1..=9",
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    /// When true, whole participants go to one split (stricter evaluation
    /// than the default per-trial split).
    pub subject_independent: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.64,
            val_fraction: 0.16,
            test_fraction: 0.20,
            seed: 0,
            subject_independent: false,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let sum = self.train_fraction + self.val_fraction + self.test_fraction;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange {
                what: "split fractions",
                value: sum,
                expected: "summing to 1",
            });
        }
        Ok(())
    }
}

/// Index partition produced by [`stratified_split`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder integer allocation of `n` items to the three
/// fractions; exact (counts sum to n) and deterministic.
fn allocate(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let ideal: [f64; 3] = fractions.map(|f| f * n as f64);
    let mut counts: [usize; 3] = ideal.map(|x| x.floor() as usize);
    let mut leftover = n - counts.iter().sum::<usize>();
    // Hand remainders out largest-first; ties go to the earlier split.
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for i in order {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

/// Splits record indices into train/val/test, stratifying on the given
/// per-record class labels. Per-class counts hit the target fractions
/// within one record; deterministic given the seed.
pub fn stratified_split(labels: &[ClassBin], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut by_class: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    for (c, group) in by_class.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::EmptyClass(ClassBin::from_index(c)));
        }
    }
    let mut rng = crate::rng::stream(spec.seed, "split");
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for group in &mut by_class {
        group.shuffle(&mut rng);
        let [n_train, n_val, _] = allocate(
            group.len(),
            [spec.train_fraction, spec.val_fraction, spec.test_fraction],
        );
        split.train.extend(&group[..n_train]);
        split.val.extend(&group[n_train..n_train + n_val]);
        split.test.extend(&group[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Subject-independent variant: allocates whole participants to splits
/// (no stratification guarantee; labels follow their participants).
pub fn subject_split(participants: &[&str], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut unique: Vec<&str> = Vec::new();
    for p in participants {
        if !unique.contains(p) {
            unique.push(p);
        }
    }
    let mut rng = crate::rng::stream(spec.seed, "subject-split");
    unique.shuffle(&mut rng);
    let [n_train, n_val, _] = allocate(
        unique.len(),
        [spec.train_fraction, spec.val_fraction, spec.test_fraction],
    );
    let in_set = |p: &str, set: &[&str]| set.contains(&p);
    let train_p = &unique[..n_train];
    let val_p = &unique[n_train..n_train + n_val];
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (i, p) in participants.iter().enumerate() {
        if in_set(p, train_p) {
            split.train.push(i);
        } else if in_set(p, val_p) {
            split.val.push(i);
        } else {
            split.test.push(i);
        }
    }
    Ok(split)
}

/// Per-class loss weights, mean-normalized inverse frequency:
/// w_c = N / (3 * n_c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(pub [f64; 3]);

pub fn class_weights(train_labels: &[ClassBin]) -> Result<ClassWeights> {
    let mut counts = [0usize; 3];
    for l in train_labels {
        counts[l.index()] += 1;
    }
    for (c, n) in counts.iter().enumerate() {
        if *n == 0 {
            return Err(Error::EmptyClass(ClassBin::from_index(c)));
        }
    }
    let n_total = train_labels.len() as f64;
    Ok(ClassWeights(
        counts.map(|n_c| n_total / (3.0 * n_c as f64)),
    ))
}

impl ClassWeights {
    pub fn get(&self, bin: ClassBin) -> f64 {
        self.0[bin.index()]
    }
}

/// Mean modal share of raters per stimulus clip, as a percentage.
/// `groups` holds one bin list per clip (one entry per rater).
pub fn agreement(groups: &[Vec<ClassBin>]) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::EmptyGroup("no clips".into()));
    }
    let mut sum_share = 0.0;
    for (i, raters) in groups.iter().enumerate() {
        if raters.is_empty() {
            return Err(Error::EmptyGroup(format!("clip {i}")));
        }
        let mut counts = [0usize; 3];
        for r in raters {
            counts[r.index()] += 1;
        }
        let modal = *counts.iter().max().unwrap();
        sum_share += modal as f64 / raters.len() as f64;
    }
    Ok(sum_share / groups.len() as f64 * 100.0)
}

/// Adds N(0, sigma^2) to each scaled trait and clamps to [0, 1]; applied
/// to training copies only, as a regularizer.
pub fn perturb_traits<R: Rng>(
    profile: &PersonalityProfile,
    sigma: f64,
    rng: &mut R,
) -> PersonalityProfile {
    if sigma == 0.0 {
        return *profile;
    }
    PersonalityProfile::from_array(
        profile
            .as_array()
            .map(|v| (v + sigma * gaussian(rng)).clamp(0.0, 1.0)),
    )
}
