//! Facial distance of a 2-D polytope.
//!
//! For the generating point set `A` with hull `K = conv(A)`, the facial
//! distance is the minimum over proper faces `F` (hull vertices and hull
//! edges) of the distance between `F` and `conv(A \ F)`. Face enumeration in
//! general dimension needs the full facet structure, so this is implemented
//! for k = 2 only; that is enough to validate the away-step rate constant.

use super::PolytopeModel;
use crate::error::{Error, Result};

const ON_FACE_TOL: f64 = 1e-9;

type Point = [f64; 2];

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2;
    let t = t.clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    false
}

fn segment_segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Andrew monotone chain; returns hull points counter-clockwise with
/// collinear middle points removed. A fully collinear set collapses to its
/// two extreme points.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup_by(|a, b| dist(*a, *b) <= 1e-12);
    let n = sorted.len();
    if n <= 2 {
        return sorted;
    }
    let turn_tol = 1e-15;
    let mut lower: Vec<Point> = Vec::new();
    for &p in &sorted {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= turn_tol {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in sorted.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= turn_tol {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 2 {
        return vec![sorted[0], sorted[n - 1]];
    }
    lower
}

/// A proper face of the 2-D hull: a vertex or an edge.
enum Face {
    Vertex(Point),
    Edge(Point, Point),
}

impl Face {
    fn contains(&self, p: Point) -> bool {
        match self {
            Face::Vertex(v) => dist(*v, p) <= ON_FACE_TOL,
            Face::Edge(a, b) => point_segment_distance(p, *a, *b) <= ON_FACE_TOL,
        }
    }

    fn distance_to_convex(&self, hull: &[Point]) -> f64 {
        match self {
            Face::Vertex(v) => point_to_convex_distance(*v, hull),
            Face::Edge(a, b) => segment_to_convex_distance(*a, *b, hull),
        }
    }
}

fn point_in_convex(p: Point, hull: &[Point]) -> bool {
    if hull.len() < 3 {
        return false;
    }
    let n = hull.len();
    (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= -1e-12)
}

fn point_to_convex_distance(p: Point, hull: &[Point]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => dist(p, hull[0]),
        2 => point_segment_distance(p, hull[0], hull[1]),
        n => {
            if point_in_convex(p, hull) {
                return 0.0;
            }
            (0..n)
                .map(|i| point_segment_distance(p, hull[i], hull[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

fn segment_to_convex_distance(a: Point, b: Point, hull: &[Point]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => point_segment_distance(hull[0], a, b),
        2 => segment_segment_distance(a, b, hull[0], hull[1]),
        n => {
            if point_in_convex(a, hull) || point_in_convex(b, hull) {
                return 0.0;
            }
            (0..n)
                .map(|i| segment_segment_distance(a, b, hull[i], hull[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Exact facial distance C(K) of a 2-D polytope model.
///
/// Errors for k != 2 (documented limitation) and for models without at
/// least two distinct vertices, where no proper face pair exists.
pub fn facial_distance_2d(model: &PolytopeModel) -> Result<f64> {
    if model.k != 2 {
        return Err(Error::Unsupported(format!(
            "facial distance is implemented for k = 2 only (got k = {})",
            model.k
        )));
    }
    let points: Vec<Point> = model
        .vertices
        .iter()
        .map(|v| [v.phi.0[0], v.phi.0[1]])
        .collect();
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "facial distance needs at least two distinct vertices".into(),
        ));
    }

    let hull = convex_hull(&points);
    let mut faces: Vec<Face> = hull.iter().map(|&v| Face::Vertex(v)).collect();
    if hull.len() >= 3 {
        // Proper edges exist only when the hull is a genuine polygon; for a
        // two-point hull the full segment is the polytope itself.
        let n = hull.len();
        for i in 0..n {
            faces.push(Face::Edge(hull[i], hull[(i + 1) % n]));
        }
    }

    let mut c_k = f64::INFINITY;
    for face in &faces {
        let complement: Vec<Point> = points
            .iter()
            .copied()
            .filter(|p| !face.contains(*p))
            .collect();
        if complement.is_empty() {
            continue;
        }
        let comp_hull = convex_hull(&complement);
        c_k = c_k.min(face.distance_to_convex(&comp_hull));
    }
    if !c_k.is_finite() {
        return Err(Error::Numerical("no valid face pair found".into()));
    }
    Ok(c_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::FeatureVector;
    use crate::polytope::PolytopeVertex;
    use rand::Rng;

    fn model_from(points: &[[f64; 2]]) -> PolytopeModel {
        let vertices = points
            .iter()
            .map(|p| PolytopeVertex {
                phi: FeatureVector(p.to_vec()),
                policies: vec![],
            })
            .collect();
        let mut diameter = 0.0f64;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                diameter = diameter.max(dist(points[i], points[j]));
            }
        }
        PolytopeModel {
            vertices,
            k: 2,
            gamma: 0.5,
            diameter,
            facial_distance: None,
        }
    }

    #[test]
    fn unit_square_matches_sampling_oracle() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let model = model_from(&square);
        let c = facial_distance_2d(&model).unwrap();

        // Sampling oracle: random points on each face vs random points in
        // the complement's hull.
        let mut rng = crate::rng::root(12);
        let points: Vec<Point> = square.to_vec();
        let hull = convex_hull(&points);
        let mut sampled_min = f64::INFINITY;
        let n = hull.len();
        let mut face_sets: Vec<Vec<Point>> = hull.iter().map(|&v| vec![v]).collect();
        for i in 0..n {
            face_sets.push(vec![hull[i], hull[(i + 1) % n]]);
        }
        for face in &face_sets {
            let face_obj = if face.len() == 1 {
                Face::Vertex(face[0])
            } else {
                Face::Edge(face[0], face[1])
            };
            let complement: Vec<Point> = points
                .iter()
                .copied()
                .filter(|p| !face_obj.contains(*p))
                .collect();
            if complement.is_empty() {
                continue;
            }
            for _ in 0..10_000 {
                // Random point on the face.
                let u = if face.len() == 2 { rng.random::<f64>() } else { 0.0 };
                let fp = if face.len() == 2 {
                    [
                        face[0][0] + u * (face[1][0] - face[0][0]),
                        face[0][1] + u * (face[1][1] - face[0][1]),
                    ]
                } else {
                    face[0]
                };
                // Random convex combination of the complement.
                let mut weights: Vec<f64> =
                    (0..complement.len()).map(|_| rng.random::<f64>() + 1e-6).collect();
                let total: f64 = weights.iter().sum();
                for w in weights.iter_mut() {
                    *w /= total;
                }
                let mut cp = [0.0, 0.0];
                for (p, w) in complement.iter().zip(&weights) {
                    cp[0] += w * p[0];
                    cp[1] += w * p[1];
                }
                sampled_min = sampled_min.min(dist(fp, cp));
            }
        }
        // The sampled minimum can only overshoot the true distance.
        assert!(sampled_min >= c - 1e-12);
        assert!(sampled_min - c <= 1e-3, "sampled {sampled_min} vs exact {c}");
        // Hand value: the corner-to-opposite-diagonal distance 1/sqrt(2).
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-12);
    }

    #[test]
    fn two_point_polytope_distance_is_vertex_gap() {
        let model = model_from(&[[0.0, 0.0], [3.0, 4.0]]);
        let c = facial_distance_2d(&model).unwrap();
        assert!((c - 5.0).abs() <= 1e-12);
    }

    #[test]
    fn single_vertex_has_no_face_pair() {
        let model = model_from(&[[1.0, 1.0]]);
        assert!(facial_distance_2d(&model).is_err());
    }

    #[test]
    fn wrong_dimension_is_unsupported() {
        let mut model = model_from(&[[0.0, 0.0], [1.0, 0.0]]);
        model.k = 3;
        assert!(matches!(
            facial_distance_2d(&model),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn facial_distance_never_exceeds_diameter() {
        for seed in 0..20 {
            let mut rng = crate::rng::root(3000 + seed);
            let n = rng.random_range(2..8);
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| [4.0 * rng.random::<f64>(), 4.0 * rng.random::<f64>()])
                .collect();
            // Skip nearly-duplicate point sets; the model contract dedups.
            let mut ok = true;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    if dist(pts[i], pts[j]) < 1e-6 {
                        ok = false;
                    }
                }
            }
            if !ok {
                continue;
            }
            let model = model_from(&pts);
            let c = facial_distance_2d(&model).unwrap();
            assert!(c <= model.diameter + 1e-12, "C(K)={c} > diameter {}", model.diameter);
            assert!(c > 0.0);
        }
    }

    #[test]
    fn collinear_point_on_edge_reduces_facial_distance() {
        // Unit square plus the midpoint of the bottom edge: the vertex face
        // (0,0) now sees a complement point at distance 0.5.
        let model = model_from(&[[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let c = facial_distance_2d(&model).unwrap();
        assert!((c - 0.5).abs() <= 1e-9, "got {c}");
    }
}
