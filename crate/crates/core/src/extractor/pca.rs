//! Principal-component projection of representations by power iteration.

use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Representation;
use crate::error::{Error, Result};
use crate::rng;

const ITERATIONS: usize = 200;
const START_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// One `k`-dim point per input representation.
    pub points: Vec<Vec<f64>>,
    /// Unit-norm principal axes, largest variance first.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalue of each component.
    pub explained_variance: Vec<f64>,
}

/// Projects centered representations onto the top `k` eigenvectors of their
/// sample covariance. Each component's largest-magnitude loading is positive.
pub fn pca_project(reprs: &[Representation], k: usize) -> Result<PcaResult> {
    let n = reprs.len();
    let d = reprs.first().map_or(0, |r| r.dim());
    if !(1..=3).contains(&k) || k > d {
        return Err(Error::InvalidConfig(format!(
            "pca needs 1 <= k <= 3 and k <= d = {d}, got k = {k}"
        )));
    }
    if n < k + 1 {
        return Err(Error::InvalidConfig(format!(
            "pca with k = {k} needs at least {} points, got {n}",
            k + 1
        )));
    }
    if reprs.iter().any(|r| r.dim() != d) {
        return Err(Error::ShapeMismatch("representations differ in dimension".into()));
    }

    let data = Array2::from_shape_fn((n, d), |(i, j)| reprs[i][j]);
    let mean = data.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &data - &mean;
    let mut cov = centered.t().dot(&centered) / (n - 1) as f64;

    let mut rng = rng::seeded(START_SEED);
    let mut components = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for _ in 0..k {
        let mut v: Array1<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        v /= v.dot(&v).sqrt();
        for _ in 0..ITERATIONS {
            let w = cov.dot(&v);
            let norm = w.dot(&w).sqrt();
            if norm < 1e-300 {
                break;
            }
            v = w / norm;
        }
        let lambda = v.dot(&cov.dot(&v)).max(0.0);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            v.mapv_inplace(|x| -x);
        }
        // deflate
        let outer = v
            .view()
            .insert_axis(Axis(1))
            .dot(&v.view().insert_axis(Axis(0)));
        cov.scaled_add(-lambda, &outer);
        components.push(v);
        explained.push(lambda);
    }

    let points = centered
        .rows()
        .into_iter()
        .map(|row| components.iter().map(|c| row.dot(c)).collect())
        .collect();
    Ok(PcaResult {
        points,
        components: components.into_iter().map(|c| c.to_vec()).collect(),
        explained_variance: explained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reprs(rows: &[&[f64]]) -> Vec<Representation> {
        rows.iter().map(|r| Representation(r.to_vec())).collect()
    }

    #[test]
    fn collinear_points_keep_their_spacing() {
        let dir = [0.6, -0.8, 0.0];
        let ts = [-2.0, -0.5, 1.0, 4.0];
        let pts: Vec<Representation> = ts
            .iter()
            .map(|t| Representation(dir.iter().map(|d| 1.0 + t * d).collect()))
            .collect();
        let out = pca_project(&pts, 1).unwrap();
        let mean_t = ts.iter().sum::<f64>() / ts.len() as f64;
        let sign = out.points[0][0].signum() * (ts[0] - mean_t).signum();
        for (p, t) in out.points.iter().zip(ts) {
            assert!((p[0] - sign * (t - mean_t)).abs() < 1e-9);
        }
        // largest loading positive
        assert!(out.components[0][1] > 0.0);
    }

    #[test]
    fn duplicate_points_project_to_zero() {
        let pts = reprs(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]);
        let out = pca_project(&pts, 2).unwrap();
        assert!(out.points.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(out.explained_variance, vec![0.0, 0.0]);
    }

    #[test]
    fn too_few_points() {
        let pts = reprs(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(pca_project(&pts, 2).is_err());
        assert!(pca_project(&pts, 1).is_ok());
    }
}
