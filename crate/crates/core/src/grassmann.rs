//! Orthogonal projectors on `R^d`, their Stiefel-frame factors, and the
//! operations that build them: Haar sampling on the Grassmannian `G(k,d)` and
//! PCA.
//!
//! A rank-`k` projector `p` is stored densely as a symmetric `d x d` matrix. A
//! frame `q` is a `k x d` matrix with orthonormal rows and `p = q^T q`; frames
//! are the compact form used for serialization and for fast Monte Carlo since
//! `||q v|| = ||p v||`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on `||q q^T - I_k||_F` for a valid frame.
pub const FRAME_TOLERANCE: f64 = 1e-10;
/// Default bound on `||p^2 - p||_F` and `|tr(p) - k|` for a valid projector.
pub const PROJECTOR_TOLERANCE: f64 = 1e-9;

fn check_dims(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::InvalidDimension { k, d });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `m` sample vectors in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    m: usize,
    d: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.len();
        if m < 2 {
            return Err(Error::TooFewPoints(m));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::InvalidParameter("points must have dimension >= 1".into()));
        }
        let mut data = Vec::with_capacity(m * d);
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Ok(Self { m, d, data })
    }

    pub fn from_flat(m: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if m < 2 {
            return Err(Error::TooFewPoints(m));
        }
        if d == 0 || data.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                found: data.len(),
            });
        }
        Ok(Self { m, d, data })
    }

    /// Standard-normal cloud, deterministic in `seed`.
    pub fn gaussian(m: usize, d: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Self::from_flat(m, d, data)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for p in self.points() {
            for (acc, v) in mean.iter_mut().zip(p) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.m as f64;
        mean.iter_mut().for_each(|v| *v *= inv);
        mean
    }

    /// Cloud with every point multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m: self.m,
            d: self.d,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Cloud `{a x_i}` for a `d' x d` matrix `a`.
    pub fn linear_map(&self, a: &DMatrix<f64>) -> Result<Self> {
        if a.ncols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: a.ncols(),
            });
        }
        let out_d = a.nrows();
        let mut data = Vec::with_capacity(self.m * out_d);
        for p in self.points() {
            for r in 0..out_d {
                data.push((0..self.d).map(|c| a[(r, c)] * p[c]).sum());
            }
        }
        Self::from_flat(self.m, out_d, data)
    }

    /// Drops exact duplicate points, keeping first occurrences in order.
    pub fn dedup(&self) -> Result<Self> {
        let mut kept: Vec<&[f64]> = Vec::with_capacity(self.m);
        for p in self.points() {
            if !kept.contains(&p) {
                kept.push(p);
            }
        }
        Self::new(kept.into_iter().map(<[f64]>::to_vec).collect())
    }

    /// Squared distances `||x_i - x_j||^2` for `i < j`, `i` ascending then `j`.
    pub fn pair_sq_distances(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.m * (self.m - 1) / 2);
        for i in 0..self.m {
            for j in i + 1..self.m {
                out.push(sq_dist(self.point(i), self.point(j)));
            }
        }
        out
    }
}

/// `k x d` matrix with orthonormal rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameRepr", into = "FrameRepr")]
pub struct StiefelFrame {
    k: usize,
    d: usize,
    rows: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    k: usize,
    d: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<FrameRepr> for StiefelFrame {
    type Error = Error;

    fn try_from(r: FrameRepr) -> Result<Self> {
        if r.rows.len() != r.k {
            return Err(Error::DimensionMismatch {
                expected: r.k,
                found: r.rows.len(),
            });
        }
        if let Some(bad) = r.rows.iter().find(|row| row.len() != r.d) {
            return Err(Error::DimensionMismatch {
                expected: r.d,
                found: bad.len(),
            });
        }
        StiefelFrame::new(r.rows.concat(), r.k, r.d)
    }
}

impl From<StiefelFrame> for FrameRepr {
    fn from(f: StiefelFrame) -> Self {
        FrameRepr {
            k: f.k,
            d: f.d,
            rows: f.to_rows(),
        }
    }
}

impl StiefelFrame {
    /// Validates orthonormality against [`FRAME_TOLERANCE`].
    pub fn new(rows: Vec<f64>, k: usize, d: usize) -> Result<Self> {
        Self::with_tolerance(rows, k, d, FRAME_TOLERANCE)
    }

    pub fn with_tolerance(rows: Vec<f64>, k: usize, d: usize, tol: f64) -> Result<Self> {
        check_dims(k, d)?;
        if rows.len() != k * d {
            return Err(Error::DimensionMismatch {
                expected: k * d,
                found: rows.len(),
            });
        }
        let frame = Self { k, d, rows };
        let deviation = frame.orthonormality_deviation();
        if !(deviation <= tol) {
            return Err(Error::NotOrthonormal {
                deviation,
                tolerance: tol,
            });
        }
        Ok(frame)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        FrameRepr { k, d, rows }.try_into()
    }

    /// Rows `e_0, ..., e_{k-1}` of the identity.
    pub fn coordinate(k: usize, d: usize) -> Result<Self> {
        check_dims(k, d)?;
        let mut rows = vec![0.0; k * d];
        for i in 0..k {
            rows[i * d + i] = 1.0;
        }
        Ok(Self { k, d, rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.rows
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.chunks_exact(self.d).map(<[f64]>::to_vec).collect()
    }

    /// `||q q^T - I_k||_F`.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.k {
            for j in 0..self.k {
                let target = if i == j { 1.0 } else { 0.0 };
                let e = dot(self.row(i), self.row(j)) - target;
                acc += e * e;
            }
        }
        acc.sqrt()
    }

    /// Reduced coordinates `q x` (length `k`).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        self.project_into(x, &mut out);
        out
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.rows.chunks_exact(self.d)) {
            *o = dot(row, x);
        }
    }

    /// Reduced coordinates of every point, row-major `m x k`.
    pub fn project_cloud(&self, cloud: &PointCloud) -> Vec<f64> {
        let mut out = vec![0.0; cloud.len() * self.k];
        for (p, o) in cloud.points().zip(out.chunks_exact_mut(self.k)) {
            self.project_into(p, o);
        }
        out
    }
}

/// Rank-`k` orthogonal projector on `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProjectorRepr", into = "ProjectorRepr")]
pub struct Projector {
    k: usize,
    matrix: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProjectorRepr {
    k: usize,
    d: usize,
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<ProjectorRepr> for Projector {
    type Error = Error;

    fn try_from(r: ProjectorRepr) -> Result<Self> {
        if r.matrix.len() != r.d || r.matrix.iter().any(|row| row.len() != r.d) {
            return Err(Error::ShapeMismatch(format!("projector matrix must be {0}x{0}", r.d)));
        }
        let p = Projector::from_rows(&r.matrix)?;
        if p.k != r.k {
            return Err(Error::NotProjector(format!(
                "declared rank {} but trace gives {}",
                r.k, p.k
            )));
        }
        Ok(p)
    }
}

impl From<Projector> for ProjectorRepr {
    fn from(p: Projector) -> Self {
        ProjectorRepr {
            k: p.k,
            d: p.dim(),
            matrix: p.to_rows(),
        }
    }
}

impl Projector {
    /// Validates symmetry (exact), idempotence and integral trace.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(matrix, PROJECTOR_TOLERANCE)
    }

    pub fn with_tolerance(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::NotProjector(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix != matrix.transpose() {
            return Err(Error::NotProjector("matrix is not symmetric".into()));
        }
        let idem = (&matrix * &matrix - &matrix).norm();
        if !(idem <= tol) {
            return Err(Error::NotProjector(format!("||p^2 - p||_F = {idem:e}")));
        }
        let trace = matrix.trace();
        let k = trace.round();
        if !((trace - k).abs() <= tol) || k < 1.0 {
            return Err(Error::NotProjector(format!("trace {trace} is not a positive integer")));
        }
        Ok(Self { k: k as usize, matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        let matrix = DMatrix::from_fn(d, rows.first().map_or(0, Vec::len), |i, j| rows[i][j]);
        Self::new(matrix)
    }

    pub fn identity(d: usize) -> Result<Self> {
        check_dims(d, d)?;
        Ok(Self {
            k: d,
            matrix: DMatrix::identity(d, d),
        })
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }

    /// `p x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        // symmetric, so column j doubles as row j
        (0..d).map(|i| dot(self.matrix.column(i).as_slice(), x)).collect()
    }

    /// Orthonormal basis of the range, as a frame.
    pub fn to_frame(&self) -> Result<StiefelFrame> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let d = self.dim();
        let mut rows = Vec::with_capacity(self.k * d);
        for &idx in &order[..self.k] {
            let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
            fix_sign(&mut v);
            rows.extend(v);
        }
        StiefelFrame::with_tolerance(rows, self.k, d, 1e3 * FRAME_TOLERANCE)
    }
}

/// `p = q^T q`, symmetrized exactly.
pub fn frame_to_projector(q: &StiefelFrame) -> Projector {
    let d = q.d;
    let mut matrix = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v: f64 = (0..q.k).map(|r| q.rows[r * d + i] * q.rows[r * d + j]).sum();
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    Projector { k: q.k, matrix }
}

/// `||p1 - p2||_F`.
pub fn frobenius_distance(p1: &Projector, p2: &Projector) -> Result<f64> {
    if p1.dim() != p2.dim() {
        return Err(Error::DimensionMismatch {
            expected: p1.dim(),
            found: p2.dim(),
        });
    }
    Ok((&p1.matrix - &p2.matrix).norm())
}

/// Affine projection `{x̄ + p(x_i - x̄)}`.
pub fn project_affine(x: &PointCloud, p: &Projector) -> Result<PointCloud> {
    if x.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: p.dim(),
        });
    }
    let mean = x.mean();
    let mut data = Vec::with_capacity(x.as_flat().len());
    let mut centered = vec![0.0; x.dim()];
    for point in x.points() {
        for ((c, v), mu) in centered.iter_mut().zip(point).zip(&mean) {
            *c = v - mu;
        }
        data.extend(p.apply(&centered).iter().zip(&mean).map(|(v, mu)| v + mu));
    }
    PointCloud::from_flat(x.len(), x.dim(), data)
}

/// Anything that projects `R^d` orthogonally onto a rank-`k` subspace.
pub trait SubspaceProjection {
    fn ambient_dim(&self) -> usize;
    fn rank(&self) -> usize;
    /// `||P v||^2`.
    fn projected_sq_norm(&self, v: &[f64]) -> f64;
    /// `||P(x_i - x_j)||^2` for all pairs in [`PointCloud::pair_sq_distances`]
    /// order; `pair_sq_dists` are the unprojected squared distances.
    fn pair_sq_norms(&self, cloud: &PointCloud, pair_sq_dists: &[f64]) -> Vec<f64>;
}

fn reduced_pair_sq_norms(coords: &[f64], m: usize, r: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        let a = &coords[i * r..(i + 1) * r];
        for j in i + 1..m {
            out.push(sq_dist(a, &coords[j * r..(j + 1) * r]));
        }
    }
    out
}

impl SubspaceProjection for StiefelFrame {
    fn ambient_dim(&self) -> usize {
        self.d
    }

    fn rank(&self) -> usize {
        self.k
    }

    fn projected_sq_norm(&self, v: &[f64]) -> f64 {
        self.rows.chunks_exact(self.d).map(|row| dot(row, v).powi(2)).sum()
    }

    fn pair_sq_norms(&self, cloud: &PointCloud, _: &[f64]) -> Vec<f64> {
        reduced_pair_sq_norms(&self.project_cloud(cloud), cloud.len(), self.k)
    }
}

impl SubspaceProjection for Projector {
    fn ambient_dim(&self) -> usize {
        self.dim()
    }

    fn rank(&self) -> usize {
        self.k
    }

    fn projected_sq_norm(&self, v: &[f64]) -> f64 {
        sq_norm(&self.apply(v))
    }

    fn pair_sq_norms(&self, cloud: &PointCloud, _: &[f64]) -> Vec<f64> {
        let coords: Vec<f64> = cloud.points().flat_map(|p| self.apply(p)).collect();
        reduced_pair_sq_norms(&coords, cloud.len(), self.dim())
    }
}

/// Haar-random subspace of rank `k`, represented by whichever of the frame or
/// its orthogonal complement has fewer rows.
#[derive(Debug, Clone)]
pub enum HaarSubspace {
    Direct(StiefelFrame),
    /// Frame of the complement; the subspace has rank `d - frame.k()`.
    Complement(StiefelFrame),
}

impl HaarSubspace {
    /// Draws from the orthogonally invariant measure on `G(k,d)`. When
    /// `k > d/2` a rank-`(d-k)` frame is drawn and complemented, which is
    /// equal in distribution and cheaper.
    pub fn sample<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<Self> {
        check_dims(k, d)?;
        if 2 * k > d && k < d {
            Ok(Self::Complement(gaussian_frame(d - k, d, rng)))
        } else {
            Ok(Self::Direct(gaussian_frame(k, d, rng)))
        }
    }
}

impl SubspaceProjection for HaarSubspace {
    fn ambient_dim(&self) -> usize {
        match self {
            Self::Direct(f) | Self::Complement(f) => f.d,
        }
    }

    fn rank(&self) -> usize {
        match self {
            Self::Direct(f) => f.k,
            Self::Complement(f) => f.d - f.k,
        }
    }

    fn projected_sq_norm(&self, v: &[f64]) -> f64 {
        match self {
            Self::Direct(f) => f.projected_sq_norm(v),
            Self::Complement(f) => (sq_norm(v) - f.projected_sq_norm(v)).max(0.0),
        }
    }

    fn pair_sq_norms(&self, cloud: &PointCloud, pair_sq_dists: &[f64]) -> Vec<f64> {
        match self {
            Self::Direct(f) => f.pair_sq_norms(cloud, pair_sq_dists),
            Self::Complement(f) => f
                .pair_sq_norms(cloud, pair_sq_dists)
                .into_iter()
                .zip(pair_sq_dists)
                .map(|(c, full)| (full - c).max(0.0))
                .collect(),
        }
    }
}

/// Deterministic family of independent RNG streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedStream {
    pub seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// RNG for draw number `index`; independent of how many other draws exist.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Orthonormalizes the rows of a `k x d` standard Gaussian matrix (Gram–Schmidt,
/// two passes). The triangular factor has a positive diagonal by construction.
fn gaussian_frame<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> StiefelFrame {
    let mut rows = vec![0.0; k * d];
    let mut i = 0;
    while i < k {
        let (done, rest) = rows.split_at_mut(i * d);
        let v = &mut rest[..d];
        v.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        let initial = sq_norm(v).sqrt();
        for _ in 0..2 {
            for q in done.chunks_exact(d) {
                let c = dot(v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = sq_norm(v).sqrt();
        // measure-zero event; redraw the row
        if !(norm > 1e-10 * initial) {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        i += 1;
    }
    StiefelFrame { k, d, rows }
}

/// Frame whose projector `q^T q` is distributed by the orthogonally invariant
/// measure on `G(k,d)`; bitwise deterministic in `seed`.
pub fn haar_sample(k: usize, d: usize, seed: u64) -> Result<StiefelFrame> {
    haar_frame(k, d, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn haar_frame<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<StiefelFrame> {
    check_dims(k, d)?;
    Ok(gaussian_frame(k, d, rng))
}

/// Flips `v` so its first nonzero component is positive.
fn fix_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| **x != 0.0) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Result of [`pca_projector`].
#[derive(Debug, Clone)]
pub struct PcaProjector {
    pub projector: Projector,
    /// Top-`k` eigenvectors as rows, sign-normalized.
    pub frame: StiefelFrame,
    /// All covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// False when the `k`-th and `(k+1)`-th eigenvalues tie, so the
    /// maximizing subspace is not unique.
    pub subspace_unique: bool,
}

/// Projector onto the top-`k` principal subspace of the sample covariance.
pub fn pca_projector(x: &PointCloud, k: usize) -> Result<PcaProjector> {
    let d = x.dim();
    check_dims(k, d)?;
    let mean = x.mean();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for p in x.points() {
        for ((c, v), mu) in centered.iter_mut().zip(p).zip(&mean) {
            *c = v - mu;
        }
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    let scale = 1.0 / (x.len() - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] * scale;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    if !(cov.trace() > 0.0) {
        return Err(Error::DegenerateData("total variance is zero".into()));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let mut rows = Vec::with_capacity(k * d);
    for &idx in &order[..k] {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let n = sq_norm(&v).sqrt();
        v.iter_mut().for_each(|c| *c /= n);
        fix_sign(&mut v);
        rows.extend(v);
    }
    let frame = StiefelFrame::with_tolerance(rows, k, d, 1e3 * FRAME_TOLERANCE)?;
    let gap_tol = 1e-10 * eigenvalues[0].abs();
    let subspace_unique = k == d || eigenvalues[k - 1] - eigenvalues[k] > gap_tol;
    Ok(PcaProjector {
        projector: frame_to_projector(&frame),
        frame,
        eigenvalues,
        subspace_unique,
    })
}
