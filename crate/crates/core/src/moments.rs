//! Exact moments of `tvar(Px)` and `M(P,x)` for a projector `P` drawn from the
//! orthogonally invariant measure on `G(k,d)` (or any cubature measure of
//! strength 2).
//!
//! Everything reduces to the difference vectors `y_a = x_i - x_j` (`a` runs
//! over the `N = m(m-1)/2` pairs) and three double sums
//!
//! ```text
//! S_yy = sum_{a,b} <y_a, y_b>^2
//! S_yu = sum_{a,b} <y_a, y_b>^2 / ||y_b||^2
//! S_uu = sum_{a,b} <y_a, y_b>^2 / (||y_a||^2 ||y_b||^2)
//! ```
//!
//! combined with `a_kd = 2d(d-k) / (k(d-1)(d+2))`:
//!
//! ```text
//! Var tvar = k^2/(4d^2) (a_kd/N^2 S_yy - a_kd/d (mean ||y||^2)^2)
//! Cov      = k/(2d)     (a_kd/N^2 S_yu - a_kd/d  mean ||y||^2)
//! Var M    =             a_kd/N^2 S_uu - a_kd/d
//! E V      =             a_kd (1 - S_uu/N^2)
//! ```
//!
//! The double sums are evaluated either pair-by-pair from the Gram matrix of
//! the difference vectors (`O(N^2 d)`) or through the `d x d` scatter matrices
//! `A = sum y yᵀ`, `B = sum y yᵀ/||y||^2`, using `S_yy = tr(AA)`,
//! `S_yu = tr(AB)`, `S_uu = tr(BB)` (`O(N d^2)`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{dot, sq_norm, HaarSubspace, PointCloud, SeedStream, SubspaceProjection};
use crate::objectives::{PairGeometry, ProjectionSummary};

/// Variances below this are treated as zero.
pub const VARIANCE_FLOOR: f64 = 1e-14;

/// `a_kd = 2d(d-k) / (k(d-1)(d+2))`.
pub fn a_kd(k: usize, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::UnsupportedAmbientDimension(d));
    }
    if k == 0 || k > d {
        return Err(Error::InvalidDimension { k, d });
    }
    let (k, d) = (k as f64, d as f64);
    Ok(2.0 * d * (d - k) / (k * (d - 1.0) * (d + 2.0)))
}

/// Upper bound `a_kd` on `E V(P,x)`; tends to `2/k` as `d` grows.
pub fn expected_v_bound(k: usize, d: usize) -> Result<f64> {
    a_kd(k, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormMoments {
    pub e_tvar: f64,
    #[serde(rename = "e_M")]
    pub e_m: f64,
    #[serde(rename = "e_V")]
    pub e_v: f64,
    pub var_tvar: f64,
    #[serde(rename = "var_M")]
    pub var_m: f64,
    #[serde(rename = "cov_M_tvar")]
    pub cov_m_tvar: f64,
    /// `None` when either variance is below the degeneracy floor.
    #[serde(rename = "corr_M_tvar")]
    pub corr_m_tvar: Option<f64>,
    pub a_kd: f64,
}

/// How the pair-pair double sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumRoute {
    /// Literal double loop over the Gram matrix of difference vectors.
    Gram,
    /// Traces of `d x d` scatter matrices.
    Scatter,
    /// Whichever is cheaper for the data shape.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOptions {
    pub route: SumRoute,
    pub variance_floor: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            route: SumRoute::Auto,
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSums {
    pub n_pairs: usize,
    pub mean_sq_norm: f64,
    pub s_yy: f64,
    pub s_yu: f64,
    pub s_uu: f64,
}

fn difference_vectors(x: &PointCloud) -> Vec<f64> {
    let (m, d) = (x.len(), x.dim());
    let mut out = Vec::with_capacity(m * (m - 1) / 2 * d);
    for i in 0..m {
        for j in i + 1..m {
            out.extend(x.point(i).iter().zip(x.point(j)).map(|(a, b)| a - b));
        }
    }
    out
}

/// Double sums over the difference vectors of a distinct-point cloud.
pub fn pair_sums(geometry: &PairGeometry, route: SumRoute) -> PairSums {
    let x = geometry.cloud();
    let d = x.dim();
    let n = geometry.pair_count();
    let diffs = difference_vectors(x);
    let inv: Vec<f64> = geometry.sq_dists().iter().map(|s| 1.0 / s).collect();
    let mean_sq_norm = geometry.sq_dists().iter().sum::<f64>() / n as f64;

    let use_gram = match route {
        SumRoute::Gram => true,
        SumRoute::Scatter => false,
        SumRoute::Auto => n <= d * d,
    };
    let (s_yy, s_yu, s_uu) = if use_gram {
        let (mut s_yy, mut s_yu, mut s_uu) = (0.0, 0.0, 0.0);
        for a in 0..n {
            let ya = &diffs[a * d..(a + 1) * d];
            let g2 = geometry.sq_dists()[a].powi(2);
            s_yy += g2;
            s_yu += g2 * inv[a];
            s_uu += g2 * inv[a] * inv[a];
            for b in a + 1..n {
                let g = dot(ya, &diffs[b * d..(b + 1) * d]);
                let g2 = g * g;
                s_yy += 2.0 * g2;
                s_yu += g2 * (inv[a] + inv[b]);
                s_uu += 2.0 * g2 * inv[a] * inv[b];
            }
        }
        (s_yy, s_yu, s_uu)
    } else {
        let mut a_mat = vec![0.0; d * d];
        let mut b_mat = vec![0.0; d * d];
        for (y, w) in diffs.chunks_exact(d).zip(&inv) {
            for r in 0..d {
                for c in r..d {
                    let v = y[r] * y[c];
                    a_mat[r * d + c] += v;
                    b_mat[r * d + c] += v * w;
                }
            }
        }
        let (mut s_yy, mut s_yu, mut s_uu) = (0.0, 0.0, 0.0);
        for r in 0..d {
            for c in r..d {
                let w = if r == c { 1.0 } else { 2.0 };
                let (av, bv) = (a_mat[r * d + c], b_mat[r * d + c]);
                s_yy += w * av * av;
                s_yu += w * av * bv;
                s_uu += w * bv * bv;
            }
        }
        (s_yy, s_yu, s_uu)
    };
    PairSums {
        n_pairs: n,
        mean_sq_norm,
        s_yy,
        s_yu,
        s_uu,
    }
}

pub fn closed_form_moments(x: &PointCloud, k: usize) -> Result<ClosedFormMoments> {
    closed_form_moments_with(x, k, MomentOptions::default())
}

pub fn closed_form_moments_with(x: &PointCloud, k: usize, opts: MomentOptions) -> Result<ClosedFormMoments> {
    let d = x.dim();
    let a = a_kd(k, d)?;
    let geometry = PairGeometry::new(x)?;
    let sums = pair_sums(&geometry, opts.route);
    Ok(moments_from_sums(&sums, k, d, a, opts.variance_floor))
}

fn moments_from_sums(s: &PairSums, k: usize, d: usize, a: f64, floor: f64) -> ClosedFormMoments {
    let (kf, df) = (k as f64, d as f64);
    let n2 = (s.n_pairs as f64).powi(2);
    // mean ||y||^2 = 2 tvar(x)
    let e_tvar = kf / df * s.mean_sq_norm / 2.0;
    let var_tvar = kf * kf / (4.0 * df * df) * (a / n2 * s.s_yy - a / df * s.mean_sq_norm.powi(2));
    let cov = kf / (2.0 * df) * (a / n2 * s.s_yu - a / df * s.mean_sq_norm);
    let var_m = a / n2 * s.s_uu - a / df;
    let e_v = a * (1.0 - s.s_uu / n2);
    let var_tvar = var_tvar.max(0.0);
    let var_m = var_m.max(0.0);
    let corr = (var_tvar > floor && var_m > floor).then(|| (cov / (var_m * var_tvar).sqrt()).clamp(-1.0, 1.0));
    ClosedFormMoments {
        e_tvar,
        e_m: 1.0,
        e_v: e_v.max(0.0),
        var_tvar,
        var_m,
        cov_m_tvar: cov,
        corr_m_tvar: corr,
        a_kd: a,
    }
}

/// Lower bound on `Corr(M(P,x), tvar(Px))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBound {
    pub value: f64,
    /// Whether `d >= m(m-1)/2`, under which the bound is guaranteed.
    pub hypothesis_holds: bool,
}

/// `min ||x_i-x_j||^2 / max ||x_i-x_j||^2 - (m(m-1)/(2d)) max/min`.
pub fn correlation_lower_bound(x: &PointCloud) -> Result<CorrelationBound> {
    let geometry = PairGeometry::new(x)?;
    let sq = geometry.sq_dists();
    let min = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sq.iter().copied().fold(0.0, f64::max);
    let n = geometry.pair_count();
    let d = x.dim();
    Ok(CorrelationBound {
        value: min / max - n as f64 / d as f64 * (max / min),
        hypothesis_holds: d >= n,
    })
}

/// Population least-squares line `tvar(Px) ≈ slope M(P,x) + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsqFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn lsq_fit(x: &PointCloud, k: usize) -> Result<LsqFit> {
    lsq_from_moments(&closed_form_moments(x, k)?, VARIANCE_FLOOR)
}

pub fn lsq_from_moments(m: &ClosedFormMoments, floor: f64) -> Result<LsqFit> {
    if !(m.var_m > floor) {
        return Err(Error::UndefinedFit(m.var_m));
    }
    let slope = m.cov_m_tvar / m.var_m;
    Ok(LsqFit {
        slope,
        intercept: m.e_tvar - slope,
    })
}

/// Monte Carlo estimate against its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentIdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

impl MomentIdentityReport {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            rel_err: (lhs - rhs).abs() / rhs.abs().max(1e-300),
        }
    }
}

/// `E ||Py||^2 = (k/d) ||y||^2`.
pub fn expected_sq_norm(y: &[f64], k: usize) -> f64 {
    k as f64 / y.len() as f64 * sq_norm(y)
}

/// `E ||Py||^2 ||Pz||^2 = (alpha1 ||y||^2 ||z||^2 + alpha2 <y,z>^2) / q` with
/// `q = (d-1)d(d+2)`, `alpha1 = (d+1)k^2 - 2k`, `alpha2 = 2k(d-k)`.
pub fn expected_sq_norm_product(y: &[f64], z: &[f64], k: usize) -> f64 {
    let (kf, d) = (k as f64, y.len() as f64);
    let q = (d - 1.0) * d * (d + 2.0);
    let alpha1 = (d + 1.0) * kf * kf - 2.0 * kf;
    let alpha2 = 2.0 * kf * (d - kf);
    (alpha1 * sq_norm(y) * sq_norm(z) + alpha2 * dot(y, z).powi(2)) / q
}

fn check_identity_inputs(y: &[f64], z: &[f64], k: usize) -> Result<()> {
    let d = y.len();
    if z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: z.len(),
        });
    }
    if d < 2 {
        return Err(Error::UnsupportedAmbientDimension(d));
    }
    if k == 0 || k > d {
        return Err(Error::InvalidDimension { k, d });
    }
    if sq_norm(y) == 0.0 || sq_norm(z) == 0.0 {
        return Err(Error::InvalidParameter("y and z must be nonzero".into()));
    }
    Ok(())
}

/// Monte Carlo check of the first and second moment identities for one
/// `(y, z)` pair over `n_samples` Haar projectors.
pub fn verify_moment_identities(
    y: &[f64],
    z: &[f64],
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<(MomentIdentityReport, MomentIdentityReport)> {
    Ok(verify_moment_identities_batch(&[(y.to_vec(), z.to_vec())], k, n_samples, seed)?[0])
}

/// As [`verify_moment_identities`] for several pairs sharing one stream of
/// projector draws.
pub fn verify_moment_identities_batch(
    pairs: &[(Vec<f64>, Vec<f64>)],
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<(MomentIdentityReport, MomentIdentityReport)>> {
    let Some((y0, _)) = pairs.first() else {
        return Ok(Vec::new());
    };
    let d = y0.len();
    for (y, z) in pairs {
        if y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: y.len(),
            });
        }
        check_identity_inputs(y, z, k)?;
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let stream = SeedStream::new(seed);
    let mut first = vec![0.0; pairs.len()];
    let mut second = vec![0.0; pairs.len()];
    for l in 0..n_samples {
        let p = HaarSubspace::sample(k, d, &mut stream.rng(l as u64))?;
        for (idx, (y, z)) in pairs.iter().enumerate() {
            let py = p.projected_sq_norm(y);
            let pz = p.projected_sq_norm(z);
            first[idx] += py;
            second[idx] += py * pz;
        }
    }
    let n = n_samples as f64;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(idx, (y, z))| {
            (
                MomentIdentityReport::new(first[idx] / n, expected_sq_norm(y, k)),
                MomentIdentityReport::new(second[idx] / n, expected_sq_norm_product(y, z, k)),
            )
        })
        .collect())
}

/// Summaries of `n` Haar-random rank-`k` projections, draw `l` seeded by
/// stream `l` of `seed`.
pub fn haar_summaries(geometry: &PairGeometry, k: usize, n: usize, seed: u64) -> Result<Vec<ProjectionSummary>> {
    let d = geometry.cloud().dim();
    let stream = SeedStream::new(seed);
    (0..n)
        .map(|l| geometry.summarize(&HaarSubspace::sample(k, d, &mut stream.rng(l as u64))?))
        .collect()
}
