//! Face regions from precomputed 68-point landmarks: convex-hull
//! segmentation and gaze-to-region labeling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::signal::TrialWindow;

pub const LANDMARK_COUNT: usize = 68;

/// Canonical 68-point landmark index groups.
pub const EYEBROW_RANGE: std::ops::Range<usize> = 17..27;
pub const NOSE_RANGE: std::ops::Range<usize> = 27..36;
pub const EYE_RANGE: std::ops::Range<usize> = 36..48;
pub const MOUTH_RANGE: std::ops::Range<usize> = 48..68;

/// One landmark frame in normalized stimulus coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    /// Milliseconds since clip onset.
    pub t: f64,
    pub points: Vec<Point<f64>>,
}

impl LandmarkFrame {
    pub fn validate(&self) -> Result<()> {
        if self.points.len() != LANDMARK_COUNT {
            return Err(Error::DegenerateGeometry(format!(
                "landmark frame needs {LANDMARK_COUNT} points, got {}",
                self.points.len()
            )));
        }
        if self.points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::DegenerateGeometry(
                "non-finite landmark coordinate".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    Eyes,
    Eyebrows,
    Nose,
    Mouth,
    Outside,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 5] = [
        RegionLabel::Eyes,
        RegionLabel::Eyebrows,
        RegionLabel::Nose,
        RegionLabel::Mouth,
        RegionLabel::Outside,
    ];

    /// Position in the proportion vector (Eyes, Eyebrows, Nose, Mouth, Outside).
    pub fn index(&self) -> usize {
        match self {
            RegionLabel::Eyes => 0,
            RegionLabel::Eyebrows => 1,
            RegionLabel::Nose => 2,
            RegionLabel::Mouth => 3,
            RegionLabel::Outside => 4,
        }
    }
}

/// Convex face region, vertices CCW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPolygon {
    pub label: RegionLabel,
    pub vertices: Vec<Point<f64>>,
}

/// Overlap priority: smaller, more specific regions beat the nose hull.
const PRIORITY: [RegionLabel; 4] = [
    RegionLabel::Eyes,
    RegionLabel::Eyebrows,
    RegionLabel::Mouth,
    RegionLabel::Nose,
];

/// Minimal convex polygon over a point set, CCW, starting at the
/// lowest-y/lowest-x vertex.
pub fn convex_hull(points: &[Point<f64>]) -> Result<Vec<Point<f64>>> {
    geom::convex_hull(points)
}

/// Fraction of the face width each region hull is inflated by.
pub const DEFAULT_REGION_MARGIN: f64 = 0.02;

/// Builds the four face-region polygons from one landmark frame.
/// Each hull is inflated by `margin` (a fraction of the face width)
/// radially from its centroid.
pub fn build_regions(frame: &LandmarkFrame, margin: f64) -> Result<Vec<RegionPolygon>> {
    frame.validate()?;
    let face_width = {
        let min_x = frame.points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let max_x = frame.points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        max_x - min_x
    };
    if face_width <= 0.0 {
        return Err(Error::DegenerateGeometry("zero face width".into()));
    }
    let inflate_by = margin * face_width;

    let groups = [
        (RegionLabel::Eyebrows, EYEBROW_RANGE),
        (RegionLabel::Eyes, EYE_RANGE),
        (RegionLabel::Nose, NOSE_RANGE),
        (RegionLabel::Mouth, MOUTH_RANGE),
    ];
    let mut regions = Vec::with_capacity(4);
    for (label, range) in groups {
        let pts = &frame.points[range];
        let hull = geom::convex_hull(pts)?;
        let vertices = if inflate_by > 0.0 {
            let c = geom::centroid(&hull);
            let pushed: Vec<Point<f64>> = hull
                .iter()
                .map(|v| {
                    let d = v.distance(&c);
                    if d == 0.0 {
                        *v
                    } else {
                        Point::new(
                            c.x + (v.x - c.x) * (1.0 + inflate_by / d),
                            c.y + (v.y - c.y) * (1.0 + inflate_by / d),
                        )
                    }
                })
                .collect();
            // Radial pushing can bend an eccentric hull; re-hull to keep
            // the convexity invariant.
            geom::convex_hull(&pushed)?
        } else {
            hull
        };
        regions.push(RegionPolygon { label, vertices });
    }
    Ok(regions)
}

/// Region label for one normalized point; multi-hits resolve by
/// Eyes > Eyebrows > Mouth > Nose, no hit is Outside.
pub fn label_point(p: Point<f64>, regions: &[RegionPolygon]) -> RegionLabel {
    for want in PRIORITY {
        if let Some(region) = regions.iter().find(|r| r.label == want) {
            if geom::point_in_convex(p, &region.vertices) {
                return region.label;
            }
        }
    }
    RegionLabel::Outside
}

/// Nearest-in-time frame index for a trial-relative timestamp; ties break
/// to the earlier frame.
pub fn nearest_frame(frames: &[LandmarkFrame], t: f64) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, f) in frames.iter().enumerate() {
        let d = (f.t - t).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Per-sample region labels for a trial (valid samples only), matching
/// each sample to its nearest-in-time landmark frame.
pub fn label_samples(
    trial: &TrialWindow,
    frames: &[LandmarkFrame],
    regions_per_frame: &[Vec<RegionPolygon>],
) -> Vec<(f64, RegionLabel)> {
    trial
        .samples
        .iter()
        .filter(|s| s.valid)
        .map(|s| {
            let fi = nearest_frame(frames, s.t);
            (s.t, label_point(Point::new(s.x, s.y), &regions_per_frame[fi]))
        })
        .collect()
}

/// Fraction of valid gaze samples per region, in
/// (Eyes, Eyebrows, Nose, Mouth, Outside) order. Sums to 1.
pub fn region_proportions(
    trial: &TrialWindow,
    frames: &[LandmarkFrame],
    regions_per_frame: &[Vec<RegionPolygon>],
) -> Result<[f64; 5]> {
    let labels = label_samples(trial, frames, regions_per_frame);
    if labels.is_empty() {
        return Err(Error::NoValidSamples(format!(
            "trial `{}`",
            trial.trial_id
        )));
    }
    let mut counts = [0usize; 5];
    for (_, l) in &labels {
        counts[l.index()] += 1;
    }
    let total = labels.len() as f64;
    Ok(counts.map(|c| c as f64 / total))
}

/// Per-fixation variant: the share of fixation centroids per region.
pub fn region_proportions_fixations(
    fixation_centroids: &[(f64, (f64, f64))],
    frames: &[LandmarkFrame],
    regions_per_frame: &[Vec<RegionPolygon>],
) -> Result<[f64; 5]> {
    if fixation_centroids.is_empty() {
        return Err(Error::NoValidSamples("no fixations".into()));
    }
    let mut counts = [0usize; 5];
    for &(t, (x, y)) in fixation_centroids {
        let fi = nearest_frame(frames, t);
        let l = label_point(Point::new(x, y), &regions_per_frame[fi]);
        counts[l.index()] += 1;
    }
    let total = fixation_centroids.len() as f64;
    Ok(counts.map(|c| c as f64 / total))
}

/// Frontal-face landmark template in normalized [0,1]^2 stimulus
/// coordinates, laid out on the canonical 68-point scheme: jaw 0-16,
/// eyebrows 17-26, nose 27-35, eyes 36-47, mouth 48-67. Used by the
/// synthetic generator and as a test fixture.
pub fn canonical_landmarks() -> LandmarkFrame {
    let mut pts = Vec::with_capacity(LANDMARK_COUNT);
    // Jaw line 0-16: ellipse arc from left temple around the chin.
    for i in 0..17 {
        let a = std::f64::consts::PI * (i as f64 / 16.0);
        pts.push(Point::new(0.5 - 0.28 * a.cos(), 0.45 + 0.38 * a.sin()));
    }
    // Eyebrows 17-26: two arcs above the eyes.
    for i in 0..5 {
        let x = 0.28 + 0.035 * i as f64;
        pts.push(Point::new(x, 0.33 - 0.02 * (1.0 - (i as f64 - 2.0).abs() / 2.0)));
    }
    for i in 0..5 {
        let x = 0.58 + 0.035 * i as f64;
        pts.push(Point::new(x, 0.33 - 0.02 * (1.0 - (i as f64 - 2.0).abs() / 2.0)));
    }
    // Nose 27-35: bridge 27-30 plus base 31-35.
    for i in 0..4 {
        pts.push(Point::new(0.5, 0.38 + 0.045 * i as f64));
    }
    for i in 0..5 {
        pts.push(Point::new(0.455 + 0.0225 * i as f64, 0.545));
    }
    // Eyes 36-47: left 36-41, right 42-47, small hexagons.
    let eye = |cx: f64, cy: f64, pts: &mut Vec<Point<f64>>| {
        let w = 0.055;
        let h = 0.022;
        pts.push(Point::new(cx - w, cy));
        pts.push(Point::new(cx - w / 2.5, cy - h));
        pts.push(Point::new(cx + w / 2.5, cy - h));
        pts.push(Point::new(cx + w, cy));
        pts.push(Point::new(cx + w / 2.5, cy + h));
        pts.push(Point::new(cx - w / 2.5, cy + h));
    };
    eye(0.355, 0.40, &mut pts);
    eye(0.645, 0.40, &mut pts);
    // Mouth 48-67: outer ring 48-59 (12 pts), inner ring 60-67 (8 pts).
    let mouth_c = (0.5, 0.68);
    for i in 0..12 {
        let a = std::f64::consts::TAU * (i as f64 / 12.0);
        pts.push(Point::new(
            mouth_c.0 + 0.085 * a.cos(),
            mouth_c.1 + 0.040 * a.sin(),
        ));
    }
    for i in 0..8 {
        let a = std::f64::consts::TAU * (i as f64 / 8.0);
        pts.push(Point::new(
            mouth_c.0 + 0.050 * a.cos(),
            mouth_c.1 + 0.020 * a.sin(),
        ));
    }
    debug_assert_eq!(pts.len(), LANDMARK_COUNT);
    LandmarkFrame { t: 0.0, points: pts }
}
