//! Wolfe-style active-set solver for the min-norm point in a convex hull,
//! used for exact Euclidean projection without an external QP solver.
//!
//! Works over the translated point set `u_i = v_i - p`: the minimum-norm
//! point of `conv(u)` plus `p` is the projection of `p` onto `conv(v)`.

use crate::error::{Error, Result};
use crate::mdp::FeatureVector;
use nalgebra::{DMatrix, DVector};

const MAX_MAJOR_ITERS: usize = 10_000;
const COEFF_ZERO: f64 = 1e-12;

/// Affine minimizer over the corral: minimize `mu^T G mu` s.t. `sum mu = 1`
/// via the bordered KKT system. Returns `None` when the corral has become
/// affinely dependent beyond what LU tolerates.
fn affine_minimizer(gram: &DMatrix<f64>, corral: &[usize]) -> Option<Vec<f64>> {
    let m = corral.len();
    let mut system = DMatrix::<f64>::zeros(m + 1, m + 1);
    for (i, &pi) in corral.iter().enumerate() {
        system[(0, i + 1)] = 1.0;
        system[(i + 1, 0)] = 1.0;
        for (j, &pj) in corral.iter().enumerate() {
            system[(i + 1, j + 1)] = gram[(pi, pj)];
        }
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[0] = 1.0;
    let solution = system.lu().solve(&rhs)?;
    Some(solution.iter().skip(1).copied().collect())
}

/// Minimum-distance point from `target` to `conv(points)`.
///
/// Returns the projection and a distribution over `points` reproducing it.
/// Stops at a KKT gap below `1e-12 * max(1, scale^2)`, far inside the 1e-9
/// contract of the callers.
pub fn min_norm_point(
    points: &[FeatureVector],
    target: &FeatureVector,
) -> Result<(FeatureVector, Vec<f64>)> {
    let m = points.len();
    let k = target.len();
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    let translated: Vec<FeatureVector> = points.iter().map(|v| v.sub(target)).collect();

    // Gram matrix of the translated points.
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let g = translated[i].dot(&translated[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let scale = (0..m).map(|i| gram[(i, i)]).fold(1.0f64, f64::max);
    let gap_tol = 1e-12 * scale;

    // Start from the single nearest point.
    let start = (0..m)
        .min_by(|&a, &b| gram[(a, a)].partial_cmp(&gram[(b, b)]).unwrap())
        .unwrap();
    let mut corral = vec![start];
    let mut lambda = vec![1.0f64];
    let mut x = translated[start].clone();

    for _ in 0..MAX_MAJOR_ITERS {
        // Linear minimization over all points.
        let mut best = 0;
        let mut best_dot = f64::INFINITY;
        for (i, u) in translated.iter().enumerate() {
            let d = u.dot(&x);
            if d < best_dot {
                best_dot = d;
                best = i;
            }
        }
        let gap = x.dot(&x) - best_dot;
        if gap <= gap_tol || corral.contains(&best) {
            break;
        }
        corral.push(best);
        lambda.push(0.0);

        // Minor cycle: pull the iterate to the affine minimizer of the
        // corral, dropping points whose coefficient hits zero.
        loop {
            let Some(mu) = affine_minimizer(&gram, &corral) else {
                // Degenerate corral: drop the newest point and stop refining.
                corral.pop();
                lambda.pop();
                break;
            };
            if mu.iter().all(|c| *c > COEFF_ZERO) {
                lambda = mu;
                break;
            }
            // Step from lambda toward mu until the first coefficient hits 0.
            let mut theta = 1.0f64;
            for (l, u) in lambda.iter().zip(&mu) {
                if *u <= COEFF_ZERO && *l > *u {
                    theta = theta.min(*l / (*l - *u));
                }
            }
            for (l, u) in lambda.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * *u;
            }
            let keep: Vec<bool> = lambda.iter().map(|l| *l > COEFF_ZERO).collect();
            if keep.iter().all(|k| *k) {
                // Numerical guard: force out the smallest coefficient.
                let drop = lambda
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                corral.remove(drop);
                lambda.remove(drop);
            } else {
                let mut idx = 0;
                corral.retain(|_| {
                    let k = keep[idx];
                    idx += 1;
                    k
                });
                let mut idx = 0;
                lambda.retain(|_| {
                    let k = keep[idx];
                    idx += 1;
                    k
                });
            }
            let total: f64 = lambda.iter().sum();
            for l in lambda.iter_mut() {
                *l /= total;
            }
        }

        // Rebuild the iterate from the corral.
        x = FeatureVector::zeros(k);
        for (&i, &l) in corral.iter().zip(&lambda) {
            x = x.add_scaled(l, &translated[i]);
        }
    }

    // Expand to a full-length distribution, clamping float dust.
    let mut coeffs = vec![0.0; m];
    for (&i, &l) in corral.iter().zip(&lambda) {
        coeffs[i] = l.max(0.0);
    }
    let total: f64 = coeffs.iter().sum();
    for c in coeffs.iter_mut() {
        *c /= total;
    }
    let mut projection = FeatureVector::zeros(k);
    for (v, c) in points.iter().zip(&coeffs) {
        if *c > 0.0 {
            projection = projection.add_scaled(*c, v);
        }
    }
    Ok((projection, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector(values.to_vec())
    }

    #[test]
    fn single_point_hull() {
        let (proj, coeffs) = min_norm_point(&[fv(&[2.0, 1.0])], &fv(&[0.0, 0.0])).unwrap();
        assert_eq!(proj.0, vec![2.0, 1.0]);
        assert_eq!(coeffs, vec![1.0]);
    }

    #[test]
    fn triangle_interior_target() {
        let pts = [fv(&[0.0, 0.0]), fv(&[2.0, 0.0]), fv(&[0.0, 2.0])];
        let target = fv(&[0.5, 0.5]);
        let (proj, _) = min_norm_point(&pts, &target).unwrap();
        assert!(proj.distance(&target) <= 1e-10);
    }

    #[test]
    fn far_corner_projects_to_vertex() {
        let pts = [fv(&[0.0, 0.0]), fv(&[1.0, 0.0]), fv(&[0.0, 1.0])];
        let (proj, coeffs) = min_norm_point(&pts, &fv(&[3.0, -1.0])).unwrap();
        assert!(proj.distance(&fv(&[1.0, 0.0])) <= 1e-10);
        assert!((coeffs[1] - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn many_random_points_kkt_holds() {
        use rand::Rng;
        let mut rng = crate::rng::root(99);
        for _ in 0..20 {
            let pts: Vec<FeatureVector> = (0..12)
                .map(|_| fv(&[rng.random::<f64>() * 4.0, rng.random::<f64>() * 4.0, rng.random()]))
                .collect();
            let target = fv(&[5.0 * rng.random::<f64>(), -2.0 * rng.random::<f64>(), 0.5]);
            let (proj, coeffs) = min_norm_point(&pts, &target).unwrap();
            let residual = target.sub(&proj);
            for p in &pts {
                assert!(residual.dot(&p.sub(&proj)) <= 1e-8);
            }
            assert!((coeffs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}
