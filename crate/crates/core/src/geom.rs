//! 2-D computational geometry: convex hulls and point-in-polygon tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<F> {
    pub x: F,
    pub y: F,
}

impl<F: Real> Point<F> {
    pub fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> F {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Twice the signed area of triangle (a, b, c); positive for a CCW turn.
#[inline]
pub fn cross<F: Real>(a: Point<F>, b: Point<F>, c: Point<F>) -> F {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, starting at
/// the lowest-y (then lowest-x) vertex. Collinear points on hull edges are
/// dropped, so the result is the minimal vertex set.
pub fn convex_hull<F: Real>(points: &[Point<F>]) -> Result<Vec<Point<F>>> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "convex hull needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut pts: Vec<Point<F>> = points.to_vec();
    pts.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap()
            .then(a.y.partial_cmp(&b.y).unwrap())
    });
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);

    if pts.len() < 3 {
        return Err(Error::DegenerateGeometry(
            "fewer than 3 distinct points".into(),
        ));
    }

    let mut lower: Vec<Point<F>> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2
            && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= F::zero()
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point<F>> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= F::zero()
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);

    if lower.len() < 3 {
        return Err(Error::DegenerateGeometry("all points collinear".into()));
    }

    // Rotate so the lowest-y (ties: lowest-x) vertex comes first.
    let start = lower
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.y.partial_cmp(&b.y)
                .unwrap()
                .then(a.x.partial_cmp(&b.x).unwrap())
        })
        .map(|(i, _)| i)
        .unwrap();
    lower.rotate_left(start);
    Ok(lower)
}

/// Point-in-convex-polygon test; boundary points count as inside.
/// Vertices must be in CCW order.
pub fn point_in_convex<F: Real>(p: Point<F>, vertices: &[Point<F>]) -> bool {
    if vertices.len() < 3 {
        return false;
    }
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        if cross(a, b, p) < F::zero() {
            return false;
        }
    }
    true
}

/// Winding-number containment test for arbitrary simple polygons.
/// Independent of `point_in_convex`; kept for oracle-style cross-checks.
pub fn point_in_polygon_winding<F: Real>(p: Point<F>, vertices: &[Point<F>]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    // Boundary counts as inside to match point_in_convex.
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if cross(a, b, p) == F::zero()
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
        {
            return true;
        }
    }
    let mut winding = 0i32;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && cross(a, b, p) > F::zero() {
                winding += 1;
            }
        } else if b.y <= p.y && cross(a, b, p) < F::zero() {
            winding -= 1;
        }
    }
    winding != 0
}

pub fn centroid<F: Real>(points: &[Point<F>]) -> Point<F> {
    let n = F::from_usize(points.len()).unwrap();
    let mut cx = F::zero();
    let mut cy = F::zero();
    for p in points {
        cx += p.x;
        cy += p.y;
    }
    Point::new(cx / n, cy / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::new(x, y)
    }

    #[test]
    fn square_plus_center_keeps_corners() {
        let pts = vec![p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.), p(0.5, 0.5)];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.len(), 4);
        assert_eq!(hull[0], p(0., 0.));
        // CCW from lowest-y/lowest-x corner.
        assert_eq!(hull[1], p(1., 0.));
        assert_eq!(hull[2], p(1., 1.));
        assert_eq!(hull[3], p(0., 1.));
    }

    #[test]
    fn triangle_is_its_own_hull() {
        let pts = vec![p(0., 0.), p(2., 1.), p(1., 3.)];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.len(), 3);
    }

    #[test]
    fn collinear_points_error() {
        let pts = vec![p(0., 0.), p(1., 1.), p(2., 2.), p(3., 3.)];
        assert!(matches!(
            convex_hull(&pts),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn hull_works_in_f32_too() {
        let pts: Vec<Point<f32>> = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 1.0),
            Point::new(0.5, 0.25),
        ];
        assert_eq!(convex_hull(&pts).unwrap().len(), 3);
    }

    /// O(n*h) half-plane containment oracle: every input point must lie
    /// on the inner side of every hull edge.
    fn contains_all_half_plane(hull: &[Point<f64>], pts: &[Point<f64>]) -> bool {
        pts.iter().all(|&q| {
            (0..hull.len()).all(|i| {
                let a = hull[i];
                let b = hull[(i + 1) % hull.len()];
                cross(a, b, q) >= -1e-9
            })
        })
    }

    proptest! {
        #[test]
        fn hull_contains_all_inputs(
            pts in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..60)
        ) {
            let pts: Vec<Point<f64>> = pts.into_iter().map(|(x, y)| p(x, y)).collect();
            if let Ok(hull) = convex_hull(&pts) {
                prop_assert!(contains_all_half_plane(&hull, &pts));
                // Strict convexity: every consecutive triple turns left.
                for i in 0..hull.len() {
                    let a = hull[i];
                    let b = hull[(i + 1) % hull.len()];
                    let c = hull[(i + 2) % hull.len()];
                    prop_assert!(cross(a, b, c) > 0.0);
                }
            }
        }

        #[test]
        fn hull_is_permutation_invariant(
            pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4..30),
            rot in 0usize..30,
        ) {
            let pts: Vec<Point<f64>> = pts.into_iter().map(|(x, y)| p(x, y)).collect();
            let mut shuffled = pts.clone();
            let n = shuffled.len();
            shuffled.rotate_left(rot % n);
            let a = convex_hull(&pts);
            let b = convex_hull(&shuffled);
            match (a, b) {
                (Ok(ha), Ok(hb)) => prop_assert_eq!(ha, hb),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "one ordering errored, the other did not"),
            }
        }

        #[test]
        fn convex_test_agrees_with_winding(
            pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 5..40),
            q in (-12.0f64..12.0, -12.0f64..12.0),
        ) {
            let pts: Vec<Point<f64>> = pts.into_iter().map(|(x, y)| p(x, y)).collect();
            if let Ok(hull) = convex_hull(&pts) {
                let q = p(q.0, q.1);
                // Skip near-boundary queries; the two tests may disagree
                // within rounding there.
                let near_edge = (0..hull.len()).any(|i| {
                    let a = hull[i];
                    let b = hull[(i + 1) % hull.len()];
                    cross(a, b, q).abs() < 1e-9
                });
                if !near_edge {
                    prop_assert_eq!(point_in_convex(q, &hull), point_in_polygon_winding(q, &hull));
                }
            }
        }
    }
}
