//! Empirical objectives of a projection `p` on a dataset `x`:
//! projected total variance `tvar(px)` (variance preservation) and the mean
//! `M(p,x)` / uncorrected variance `V(p,x)` of the `d/k`-scaled squared
//! relative distortions (relative-distance preservation), plus the
//! Johnson–Lindenstrauss dimension bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{sq_dist, PointCloud, Projector, SubspaceProjection};

/// Squared pairwise distances at or below this are treated as coincident.
pub const DISTINCT_FLOOR: f64 = 1e-24;

/// `(tvar(px), M(p,x), V(p,x))` for one projector on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSummary {
    #[serde(rename = "tvar")]
    pub tvar_projected: f64,
    #[serde(rename = "M")]
    pub mean_rel_dist: f64,
    #[serde(rename = "V")]
    pub var_rel_dist: f64,
}

/// Total sample variance `1/(m-1) sum ||x_i - x̄||^2`.
pub fn total_variance(x: &PointCloud) -> f64 {
    let mean = x.mean();
    let ss: f64 = x.points().map(|p| sq_dist(p, &mean)).sum();
    ss / (x.len() - 1) as f64
}

/// Total sample variance through pairwise distances,
/// `1/(m(m-1)) sum_{i<j} ||x_i - x_j||^2`.
pub fn total_variance_pairwise(x: &PointCloud) -> f64 {
    let m = x.len() as f64;
    x.pair_sq_distances().iter().sum::<f64>() / (m * (m - 1.0))
}

/// `tvar(px)` through pairwise distances; needs no distinctness.
pub fn projected_total_variance(x: &PointCloud, p: &impl SubspaceProjection) -> Result<f64> {
    check_dim(x, p)?;
    let m = x.len() as f64;
    let full = x.pair_sq_distances();
    Ok(p.pair_sq_norms(x, &full).iter().sum::<f64>() / (m * (m - 1.0)))
}

fn check_dim(x: &PointCloud, p: &impl SubspaceProjection) -> Result<()> {
    if x.dim() != p.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: p.ambient_dim(),
        });
    }
    Ok(())
}

/// A dataset with validated pairwise-distinct points and cached pair
/// distances, for evaluating many projections against one cloud.
#[derive(Debug, Clone)]
pub struct PairGeometry {
    cloud: PointCloud,
    sq_dists: Vec<f64>,
    inv_sq_dists: Vec<f64>,
}

impl PairGeometry {
    pub fn new(cloud: &PointCloud) -> Result<Self> {
        Self::with_floor(cloud, DISTINCT_FLOOR)
    }

    pub fn with_floor(cloud: &PointCloud, floor: f64) -> Result<Self> {
        let sq_dists = cloud.pair_sq_distances();
        if let Some(pos) = sq_dists.iter().position(|&s| !(s > floor)) {
            let (i, j) = pair_at(cloud.len(), pos);
            return Err(Error::CoincidentPoints {
                i,
                j,
                sq_dist: sq_dists[pos],
            });
        }
        let inv_sq_dists = sq_dists.iter().map(|s| 1.0 / s).collect();
        Ok(Self {
            cloud: cloud.clone(),
            sq_dists,
            inv_sq_dists,
        })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn pair_count(&self) -> usize {
        self.sq_dists.len()
    }

    pub fn sq_dists(&self) -> &[f64] {
        &self.sq_dists
    }

    /// `tvar(x)` via the pairwise form.
    pub fn total_variance(&self) -> f64 {
        let m = self.cloud.len() as f64;
        self.sq_dists.iter().sum::<f64>() / (m * (m - 1.0))
    }

    /// `(d/k) ||p(x_i - x_j)||^2 / ||x_i - x_j||^2` for every pair `i < j`.
    pub fn relative_distortions(&self, p: &impl SubspaceProjection) -> Result<Vec<f64>> {
        check_dim(&self.cloud, p)?;
        let scale = p.ambient_dim() as f64 / p.rank() as f64;
        let projected = p.pair_sq_norms(&self.cloud, &self.sq_dists);
        Ok(projected
            .iter()
            .zip(&self.inv_sq_dists)
            .map(|(pn, inv)| scale * pn * inv)
            .collect())
    }

    pub fn summarize(&self, p: &impl SubspaceProjection) -> Result<ProjectionSummary> {
        check_dim(&self.cloud, p)?;
        let scale = p.ambient_dim() as f64 / p.rank() as f64;
        let projected = p.pair_sq_norms(&self.cloud, &self.sq_dists);
        let n = projected.len() as f64;
        let m = self.cloud.len() as f64;
        let (mut sum_abs, mut sum_rel, mut sum_rel2) = (0.0, 0.0, 0.0);
        for (pn, inv) in projected.iter().zip(&self.inv_sq_dists) {
            let r = scale * pn * inv;
            sum_abs += pn;
            sum_rel += r;
            sum_rel2 += r * r;
        }
        let mean = sum_rel / n;
        Ok(ProjectionSummary {
            tvar_projected: sum_abs / (m * (m - 1.0)),
            mean_rel_dist: mean,
            var_rel_dist: (sum_rel2 / n - mean * mean).max(0.0),
        })
    }

    /// True iff every relative distortion lies in `[1 - eps, 1 + eps]`.
    pub fn jl_satisfied(&self, p: &impl SubspaceProjection, epsilon: f64) -> Result<bool> {
        check_epsilon(epsilon)?;
        Ok(self
            .relative_distortions(p)?
            .iter()
            .all(|r| (1.0 - epsilon..=1.0 + epsilon).contains(r)))
    }
}

/// Maps a lexicographic pair position back to `(i, j)`.
pub(crate) fn pair_at(m: usize, mut pos: usize) -> (usize, usize) {
    for i in 0..m {
        let row = m - 1 - i;
        if pos < row {
            return (i, i + 1 + pos);
        }
        pos -= row;
    }
    unreachable!("pair position out of range")
}

pub fn summarize(x: &PointCloud, p: &Projector) -> Result<ProjectionSummary> {
    PairGeometry::new(x)?.summarize(p)
}

pub fn relative_distortions(x: &PointCloud, p: &Projector) -> Result<Vec<f64>> {
    PairGeometry::new(x)?.relative_distortions(p)
}

pub fn jl_satisfied(x: &PointCloud, p: &Projector, epsilon: f64) -> Result<bool> {
    PairGeometry::new(x)?.jl_satisfied(p, epsilon)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    Ok(())
}

fn jl_denominator(epsilon: f64) -> f64 {
    epsilon * epsilon / 2.0 - epsilon.powi(3) / 3.0
}

/// Smallest `k` with `4 ln(m) / (eps^2/2 - eps^3/3) <= k`.
pub fn jl_min_dimension(m: usize, epsilon: f64) -> Result<usize> {
    jl_bound(m, epsilon, 4.0)
}

/// Smallest `k` with `(2 + tau) 2 ln(m) / (eps^2/2 - eps^3/3) <= k`, the
/// dimension at which a Haar-random projector is a `(1 ± eps)` embedding with
/// probability at least [`jl_success_probability`].
pub fn jl_min_dimension_tau(m: usize, epsilon: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
    }
    jl_bound(m, epsilon, (2.0 + tau) * 2.0)
}

fn jl_bound(m: usize, epsilon: f64, constant: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    if m < 2 {
        return Err(Error::TooFewPoints(m));
    }
    Ok((constant * (m as f64).ln() / jl_denominator(epsilon)).ceil() as usize)
}

/// `1 - m^-tau + m^-(tau+1)`.
pub fn jl_success_probability(m: usize, tau: f64) -> f64 {
    let m = m as f64;
    1.0 - m.powf(-tau) + m.powf(-(tau + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JlParams {
    pub epsilon: f64,
    pub tau: f64,
    pub m: usize,
    pub k_min: usize,
}

impl JlParams {
    pub fn new(m: usize, epsilon: f64, tau: f64) -> Result<Self> {
        Ok(Self {
            epsilon,
            tau,
            m,
            k_min: jl_min_dimension_tau(m, epsilon, tau)?,
        })
    }

    pub fn success_probability(&self) -> f64 {
        jl_success_probability(self.m, self.tau)
    }
}

/// Distortion level `eps + 2 rho sqrt((1+eps) d/k) + (d/k) rho^2` achieved
/// by some member of a projector set with covering radius `rho`.
pub fn gjl_delta(epsilon: f64, rho: f64, k: usize, d: usize) -> f64 {
    let ratio = d as f64 / k as f64;
    epsilon + 2.0 * rho * ((1.0 + epsilon) * ratio).sqrt() + ratio * rho * rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{frame_to_projector, haar_sample};

    fn cloud(points: &[&[f64]]) -> PointCloud {
        PointCloud::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn diag10() -> Projector {
        Projector::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap()
    }

    #[test]
    fn total_variance_examples() {
        let x = cloud(&[&[0.0, 0.0], &[2.0, 0.0]]);
        assert_eq!(total_variance(&x), 2.0);
        assert_eq!(total_variance_pairwise(&x), 2.0);
        let same = cloud(&[&[1.5, -2.0], &[1.5, -2.0], &[1.5, -2.0]]);
        assert_eq!(total_variance(&same), 0.0);
    }

    #[test]
    fn summarize_identity() {
        let x = PointCloud::gaussian(12, 5, 4).unwrap();
        let s = summarize(&x, &Projector::identity(5).unwrap()).unwrap();
        assert!((s.tvar_projected - total_variance(&x)).abs() < 1e-12 * total_variance(&x));
        assert!((s.mean_rel_dist - 1.0).abs() < 1e-10);
        assert!(s.var_rel_dist.abs() < 1e-10);
    }

    #[test]
    fn summarize_three_points_by_hand() {
        // pairs (2,0)->ratio 1, (1,-1)->1/2, (-1,-1)->1/2; scaled by d/k = 2
        let x = cloud(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]]);
        let s = summarize(&x, &diag10()).unwrap();
        let rel = [2.0, 1.0, 1.0];
        let mean = rel.iter().sum::<f64>() / 3.0;
        let var = rel.iter().map(|r| r * r).sum::<f64>() / 3.0 - mean * mean;
        assert!((s.tvar_projected - (4.0 + 1.0 + 1.0) / 6.0).abs() < 1e-15);
        assert!((s.mean_rel_dist - mean).abs() < 1e-15);
        assert!((s.var_rel_dist - var).abs() < 1e-15);
        assert!((s.mean_rel_dist - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.var_rel_dist - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn coincident_points_rejected() {
        let x = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0]]);
        match summarize(&x, &diag10()) {
            Err(Error::CoincidentPoints { i, j, .. }) => assert_eq!((i, j), (0, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distortion_examples() {
        let x = PointCloud::gaussian(6, 3, 2).unwrap();
        let all = relative_distortions(&x, &Projector::identity(3).unwrap()).unwrap();
        assert_eq!(all.len(), 15);
        assert!(all.iter().all(|r| (r - 1.0).abs() < 1e-12));

        let x = cloud(&[&[0.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(relative_distortions(&x, &diag10()).unwrap(), vec![1.0]);
        let x = cloud(&[&[0.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(relative_distortions(&x, &diag10()).unwrap(), vec![0.0]);
        assert!(!jl_satisfied(&x, &diag10(), 0.5).unwrap());
        assert!(jl_satisfied(&x, &Projector::identity(2).unwrap(), 0.01).unwrap());
        assert!(jl_satisfied(&x, &diag10(), 1.5).is_err());
    }

    #[test]
    fn distortion_pair_order_is_lexicographic() {
        let x = cloud(&[&[0.0], &[1.0], &[3.0], &[6.0]]);
        assert_eq!(x.pair_sq_distances(), vec![1.0, 9.0, 36.0, 4.0, 25.0, 9.0]);
        for pos in 0..6 {
            let (i, j) = pair_at(4, pos);
            assert_eq!(sq_dist(x.point(i), x.point(j)), x.pair_sq_distances()[pos]);
        }
    }

    #[test]
    fn jl_dimension_examples() {
        // 4 ln 100 / (0.125 - 0.041666..) = 221.05...
        assert_eq!(jl_min_dimension(100, 0.5).unwrap(), 222);
        assert!(jl_min_dimension(100, 0.999_999).unwrap() > 0);
        let small = jl_min_dimension(2, 0.99).unwrap();
        assert_eq!(
            small,
            (4.0 * 2f64.ln() / (0.99f64.powi(2) / 2.0 - 0.99f64.powi(3) / 3.0)).ceil() as usize
        );
        let mut last = usize::MAX;
        for e in [0.1, 0.2, 0.4, 0.6, 0.8, 0.99] {
            let k = jl_min_dimension(2, e).unwrap();
            assert!(k <= last);
            last = k;
        }
        assert!(matches!(jl_min_dimension(10, 1.0), Err(Error::EpsilonOutOfRange(_))));
        assert!(matches!(jl_min_dimension(10, 0.0), Err(Error::EpsilonOutOfRange(_))));
        // (2 + 1) * 2 ln 50 / (1/8 - 1/24)
        assert_eq!(jl_min_dimension_tau(50, 0.5, 1.0).unwrap(), 282);
        let params = JlParams::new(50, 0.5, 1.0).unwrap();
        assert!((params.success_probability() - (1.0 - 1.0 / 50.0 + 1.0 / 2500.0)).abs() < 1e-15);
    }

    #[test]
    fn gjl_delta_examples() {
        assert_eq!(gjl_delta(0.3, 0.0, 2, 5), 0.3);
        let expected = 0.5 + 0.2 * 1.5f64.sqrt() + 0.01;
        assert!((gjl_delta(0.5, 0.1, 4, 4) - expected).abs() < 1e-15);
        let mut last = 0.0;
        for i in 0..20 {
            let v = gjl_delta(0.5, i as f64 * 0.05, 2, 7);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn projected_tvar_needs_no_distinct_points() {
        let x = cloud(&[&[0.0, 0.0], &[2.0, 2.0], &[0.0, 0.0]]);
        let t = projected_total_variance(&x, &diag10()).unwrap();
        assert!((t - total_variance(&project_x(&x))).abs() < 1e-15);
    }

    fn project_x(x: &PointCloud) -> PointCloud {
        let rows = x.points().map(|p| vec![p[0], 0.0]).collect();
        PointCloud::new(rows).unwrap()
    }

    #[test]
    fn frame_and_projector_summaries_agree() {
        let x = PointCloud::gaussian(9, 6, 21).unwrap();
        let q = haar_sample(2, 6, 5).unwrap();
        let g = PairGeometry::new(&x).unwrap();
        let a = g.summarize(&q).unwrap();
        let b = g.summarize(&frame_to_projector(&q)).unwrap();
        assert!((a.tvar_projected - b.tvar_projected).abs() < 1e-12);
        assert!((a.mean_rel_dist - b.mean_rel_dist).abs() < 1e-12);
        assert!((a.var_rel_dist - b.var_rel_dist).abs() < 1e-12);
    }
}
