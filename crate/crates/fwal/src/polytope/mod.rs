//! Brute-force polytope oracle for tiny MDPs.
//!
//! Enumerates the feature expectations of every deterministic policy, builds
//! the (deduplicated) vertex list of the feature-expectations polytope, and
//! supports exact Euclidean projection, hull membership and — for k = 2 —
//! the facial distance that governs the away-step linear rate.

mod facial;
mod minnorm;

pub use facial::facial_distance_2d;
pub use minnorm::min_norm_point;

use crate::error::{Error, Result};
use crate::mdp::{feature_expectations_exact_det, DeterministicPolicy, FeatureVector, MdpSpec};
use crate::oracle::enumerate_policies;
use serde::{Deserialize, Serialize};

/// Two candidate vertices closer than this (sup-norm) are merged; distinct
/// policies can share feature expectations and duplicates break the hull
/// routines.
pub const VERTEX_DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeVertex {
    pub phi: FeatureVector,
    /// Deterministic policies whose feature expectations landed on this
    /// vertex (within the dedup tolerance).
    pub policies: Vec<DeterministicPolicy>,
}

/// Explicit model of the feature-expectations polytope of a tiny MDP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeModel {
    pub vertices: Vec<PolytopeVertex>,
    pub k: usize,
    pub gamma: f64,
    /// Maximum pairwise distance between vertices.
    pub diameter: f64,
    /// Facial distance C(K); present only once computed (k = 2 only).
    pub facial_distance: Option<f64>,
}

impl PolytopeModel {
    pub fn vertex_points(&self) -> Vec<FeatureVector> {
        self.vertices.iter().map(|v| v.phi.clone()).collect()
    }

    /// `sqrt(k)/(1-gamma)`, the a-priori bound on the diameter.
    pub fn diameter_bound(&self) -> f64 {
        (self.k as f64).sqrt() / (1.0 - self.gamma)
    }

    /// Computes and caches the facial distance (k = 2 only).
    pub fn compute_facial_distance(&mut self) -> Result<f64> {
        let c = facial_distance_2d(self)?;
        self.facial_distance = Some(c);
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Enumerates all deterministic policies (guarded at 10^6) and collects the
/// deduplicated vertex list with policy back-references.
pub fn enumerate_polytope(mdp: &MdpSpec) -> Result<PolytopeModel> {
    let policies = enumerate_policies(mdp)?;
    let mut vertices: Vec<PolytopeVertex> = Vec::new();
    for policy in policies {
        let phi = feature_expectations_exact_det(mdp, &policy)?;
        match vertices
            .iter_mut()
            .find(|v| v.phi.sub(&phi).norm_inf() <= VERTEX_DEDUP_TOL)
        {
            Some(v) => v.policies.push(policy),
            None => vertices.push(PolytopeVertex {
                phi,
                policies: vec![policy],
            }),
        }
    }
    let mut diameter = 0.0f64;
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            diameter = diameter.max(vertices[i].phi.distance(&vertices[j].phi));
        }
    }
    Ok(PolytopeModel {
        k: mdp.feature_dim(),
        gamma: mdp.discount,
        vertices,
        diameter,
        facial_distance: None,
    })
}

/// Euclidean projection of `point` onto the hull of the model's vertices.
///
/// Returns the projection together with a distribution over vertices that
/// reproduces it.
pub fn project_onto_hull(
    model: &PolytopeModel,
    point: &FeatureVector,
) -> Result<(FeatureVector, Vec<f64>)> {
    if model.vertices.is_empty() {
        return Err(Error::InvalidArgument("empty polytope model".into()));
    }
    if point.len() != model.k {
        return Err(Error::InvalidArgument("point dimension mismatch".into()));
    }
    let points = model.vertex_points();
    min_norm_point(&points, point)
}

/// Distance-based membership: `member` iff the projection residual is at
/// most `tol`.
pub fn hull_membership(
    model: &PolytopeModel,
    point: &FeatureVector,
    tol: f64,
) -> Result<(bool, f64)> {
    let (projection, _) = project_onto_hull(model, point)?;
    let distance = projection.distance(point);
    Ok((distance <= tol, distance))
}

/// Away-step linear-rate constant `rho = sigma C(K)^2 / (8 beta D^2)`.
pub fn linear_rate_constant(c_k: f64, diameter: f64) -> f64 {
    c_k * c_k / (8.0 * diameter * diameter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_hull_point, random_tiny_mdp};
    use crate::mdp::MdpSpec;
    use crate::rng;

    /// One state, three identical actions: a single vertex after dedup.
    fn degenerate_mdp() -> MdpSpec {
        MdpSpec::new(
            1,
            3,
            0.5,
            vec![vec![vec![1.0]]; 3],
            vec![1.0],
            vec![vec![1.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn identical_actions_collapse_to_one_vertex() {
        let model = enumerate_polytope(&degenerate_mdp()).unwrap();
        assert_eq!(model.vertices.len(), 1);
        assert_eq!(model.vertices[0].policies.len(), 3);
        assert_eq!(model.diameter, 0.0);
    }

    #[test]
    fn two_state_two_action_vertices_recompute() {
        let mdp = random_tiny_mdp(42, 2, 2, 2, 0.8);
        let model = enumerate_polytope(&mdp).unwrap();
        assert!(model.vertices.len() <= 4);
        for v in &model.vertices {
            for p in &v.policies {
                let phi = feature_expectations_exact_det(&mdp, p).unwrap();
                assert!(phi.sub(&v.phi).norm_inf() <= VERTEX_DEDUP_TOL);
            }
        }
        assert!(model.diameter <= model.diameter_bound() + 1e-9);
    }

    #[test]
    fn projection_of_inner_point_is_identity() {
        let mdp = random_tiny_mdp(7, 4, 3, 2, 0.9);
        let model = enumerate_polytope(&mdp).unwrap();
        let mut rng = rng::root(3);
        let inner = random_hull_point(&model.vertex_points(), &mut rng);
        let (proj, coeffs) = project_onto_hull(&model, &inner).unwrap();
        assert!(proj.distance(&inner) <= 1e-9, "moved by {}", proj.distance(&inner));
        let total: f64 = coeffs.iter().sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn segment_projection_hand_case() {
        let model = PolytopeModel {
            vertices: vec![
                PolytopeVertex {
                    phi: FeatureVector(vec![0.0, 0.0]),
                    policies: vec![],
                },
                PolytopeVertex {
                    phi: FeatureVector(vec![1.0, 0.0]),
                    policies: vec![],
                },
            ],
            k: 2,
            gamma: 0.5,
            diameter: 1.0,
            facial_distance: None,
        };
        let (proj, coeffs) = project_onto_hull(&model, &FeatureVector(vec![0.5, 1.0])).unwrap();
        assert!((proj.0[0] - 0.5).abs() <= 1e-10);
        assert!(proj.0[1].abs() <= 1e-10);
        assert!((coeffs[0] - 0.5).abs() <= 1e-9);
        assert!((coeffs[1] - 0.5).abs() <= 1e-9);

        let (member, dist) = hull_membership(&model, &FeatureVector(vec![0.5, 1.0]), 1e-7).unwrap();
        assert!(!member);
        assert!((dist - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn projection_onto_constructed_facet() {
        // Unit-square-like hull; the point sits above the top edge by 0.1.
        let vertices = [
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
        ]
        .iter()
        .map(|p| PolytopeVertex {
            phi: FeatureVector(p.to_vec()),
            policies: vec![],
        })
        .collect();
        let model = PolytopeModel {
            vertices,
            k: 2,
            gamma: 0.5,
            diameter: 2f64.sqrt(),
            facial_distance: None,
        };
        let point = FeatureVector(vec![0.3, 1.1]);
        let (proj, _) = project_onto_hull(&model, &point).unwrap();
        assert!((proj.0[0] - 0.3).abs() <= 1e-9);
        assert!((proj.0[1] - 1.0).abs() <= 1e-9);
        let (member, dist) = hull_membership(&model, &point, 1e-7).unwrap();
        assert!(!member);
        assert!((dist - 0.1).abs() <= 1e-8);

        // Vertices themselves are members at distance 0.
        let (member, dist) = hull_membership(&model, &FeatureVector(vec![1.0, 1.0]), 1e-7).unwrap();
        assert!(member);
        assert!(dist <= 1e-9);
    }

    #[test]
    fn projection_is_idempotent_and_kkt_certified() {
        for seed in 0..10 {
            let mdp = random_tiny_mdp(600 + seed, 4, 3, 2, 0.9);
            let model = enumerate_polytope(&mdp).unwrap();
            let mut rng = rng::root(700 + seed);
            // An outside point: hull point plus a random offset.
            let mut outside = random_hull_point(&model.vertex_points(), &mut rng);
            for v in outside.0.iter_mut() {
                *v += 3.0 * (rand::Rng::random::<f64>(&mut rng) - 0.2);
            }
            let (proj, coeffs) = project_onto_hull(&model, &outside).unwrap();
            // KKT: the residual direction cannot be improved by any vertex.
            let residual = outside.sub(&proj);
            for v in &model.vertices {
                let slack = residual.dot(&v.phi.sub(&proj));
                assert!(slack <= 1e-7, "KKT violated by {slack}");
            }
            // Coefficients reproduce the projection.
            let mut rebuilt = FeatureVector::zeros(model.k);
            for (v, c) in model.vertices.iter().zip(&coeffs) {
                rebuilt = rebuilt.add_scaled(*c, &v.phi);
            }
            assert!(rebuilt.distance(&proj) <= 1e-8);
            // Idempotence.
            let (proj2, _) = project_onto_hull(&model, &proj).unwrap();
            assert!(proj2.distance(&proj) <= 1e-9);
        }
    }

    #[test]
    fn membership_of_vertex_mixtures() {
        let mdp = random_tiny_mdp(13, 3, 2, 2, 0.9);
        let model = enumerate_polytope(&mdp).unwrap();
        if model.vertices.len() >= 2 {
            let mid = model.vertices[0]
                .phi
                .scale(0.5)
                .add_scaled(0.5, &model.vertices[1].phi);
            let (member, dist) = hull_membership(&model, &mid, 1e-7).unwrap();
            assert!(member, "midpoint at distance {dist}");
        }
    }
}
