//! Augmented target losses: a base loss on outputs plus a penalty on the
//! (optionally projected) difference of stacked target features,
//!
//! `L = base(y, ŷ) + α (1/m) Σ_i ‖p (T(y_i) - T(ŷ_i))‖_F²`
//!
//! where `T(y)` is the `d x t` matrix whose row `j` is `T_j(y)` and `p` is a
//! rank-`k` orthogonal projector on `R^d` acting on every column.

pub mod transforms;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{frame_to_projector, haar_frame, pca_projector, PointCloud, Projector, SeedStream};

pub use transforms::{FeatureTransform, ImageShape, TransformSpec};

/// Probabilities below this are clamped inside the cross-entropy logarithm.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// `m` outputs or targets of length `s`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    m: usize,
    s: usize,
    data: Vec<f64>,
}

impl Batch {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let s = rows.first().map_or(0, Vec::len);
        if m == 0 || s == 0 {
            return Err(Error::ShapeMismatch("batch must be nonempty".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != s) {
            return Err(Error::ShapeMismatch(format!(
                "batch row {bad} has length {}, expected {s}",
                rows[bad].len()
            )));
        }
        Ok(Self {
            m,
            s,
            data: rows.concat(),
        })
    }

    pub fn from_flat(m: usize, s: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || s == 0 || data.len() != m * s {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot fill a {m}x{s} batch",
                data.len()
            )));
        }
        Ok(Self { m, s, data })
    }

    pub fn zeros(m: usize, s: usize) -> Self {
        Self {
            m,
            s,
            data: vec![0.0; m * s],
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.s
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.s..(i + 1) * self.s]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.s..(i + 1) * self.s]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.s)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// An ordered list of transforms sharing one input dimension.
#[derive(Debug, Default)]
pub struct FeatureStack {
    transforms: Vec<Box<dyn FeatureTransform>>,
}

impl FeatureStack {
    pub fn new(transforms: Vec<Box<dyn FeatureTransform>>) -> Result<Self> {
        if let Some(first) = transforms.first() {
            let s = first.input_dim();
            if let Some(t) = transforms.iter().find(|t| t.input_dim() != s) {
                return Err(Error::ShapeMismatch(format!(
                    "transform `{}` takes length {}, stack takes {s}",
                    t.name(),
                    t.input_dim()
                )));
            }
        }
        Ok(Self { transforms })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Number of transforms `d`.
    pub fn depth(&self) -> usize {
        self.transforms.len()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.transforms.first().map(|t| t.input_dim())
    }

    /// The shared output length `t`, if all transforms agree.
    pub fn common_output_dim(&self) -> Option<usize> {
        let t = self.transforms.first()?.output_dim();
        self.transforms.iter().all(|x| x.output_dim() == t).then_some(t)
    }

    pub fn transforms(&self) -> &[Box<dyn FeatureTransform>] {
        &self.transforms
    }

    /// `T_j(y)` for every `j`.
    pub fn features(&self, y: &[f64]) -> Vec<Vec<f64>> {
        self.transforms.iter().map(|t| t.forward(y)).collect()
    }

    /// The `d x t` matrix with rows `T_j(y)`.
    pub fn stack(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let t = self
            .common_output_dim()
            .ok_or_else(|| Error::ShapeMismatch("transforms have differing output lengths".into()))?;
        let rows = self.features(y);
        Ok(DMatrix::from_fn(self.depth(), t, |j, c| rows[j][c]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseLoss {
    /// `(1/m) Σ ‖y_i - ŷ_i‖²`.
    #[default]
    Mse,
    /// `-(1/m) Σ_i Σ_c y_ic ln ŷ_ic` on probability vectors.
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FeatureLoss {
    #[default]
    #[serde(rename = "mse-frobenius")]
    MseFrobenius,
}

/// Weight of the feature term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Uniform(f64),
    /// One weight per transform; only with [`ProjectorPolicy::Identity`].
    PerTransform(Vec<f64>),
}

impl Default for Alpha {
    fn default() -> Self {
        Alpha::Uniform(1.0)
    }
}

impl Alpha {
    fn weight(&self, j: usize) -> f64 {
        match self {
            Alpha::Uniform(a) => *a,
            Alpha::PerTransform(a) => a[j],
        }
    }

    fn is_active(&self) -> bool {
        match self {
            Alpha::Uniform(a) => *a > 0.0,
            Alpha::PerTransform(a) => a.iter().any(|&v| v > 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectorPolicy {
    #[default]
    Identity,
    Fixed {
        projector: Projector,
    },
    /// A fresh Haar projector of rank `k` per loss evaluation, drawn from
    /// the stream seeded by `seed`.
    ResamplePerCall {
        k: usize,
        seed: u64,
    },
    /// Top-`k` principal subspace of the columns of `T(y_i)` over the batch.
    PcaOnTargets {
        k: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AtLossSpec {
    #[serde(default)]
    pub base_loss: BaseLoss,
    #[serde(default)]
    pub feature_loss: FeatureLoss,
    #[serde(default)]
    pub alpha: Alpha,
    #[serde(default)]
    pub projector_policy: ProjectorPolicy,
    /// Transforms for [`AtLossSpec::build_stack`].
    #[serde(default)]
    pub stack: Vec<TransformSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_shape: Option<ImageShape>,
}

impl AtLossSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build_stack(&self, target_dim: usize) -> Result<FeatureStack> {
        let transforms = self
            .stack
            .iter()
            .map(|t| t.build(target_dim, self.image_shape))
            .collect::<Result<Vec<_>>>()?;
        FeatureStack::new(transforms)
    }
}

/// Draw counter for [`ProjectorPolicy::ResamplePerCall`]. Each training loop
/// owns its own handle.
#[derive(Debug, Clone)]
pub struct ProjectorDraws {
    stream: SeedStream,
    next: u64,
}

impl ProjectorDraws {
    pub fn new(seed: u64) -> Self {
        Self {
            stream: SeedStream::new(seed),
            next: 0,
        }
    }

    pub fn draws_made(&self) -> u64 {
        self.next
    }

    fn next_rng(&mut self) -> rand_chacha::ChaCha8Rng {
        let rng = self.stream.rng(self.next);
        self.next += 1;
        rng
    }
}

/// Projector fixed for one loss/gradient evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedProjector {
    Identity,
    Matrix(Projector),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub base: f64,
    /// Already multiplied by α.
    pub feature: f64,
}

impl LossTerms {
    pub fn value(&self) -> f64 {
        self.base + self.feature
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub terms: LossTerms,
    pub gradient: Batch,
    pub projector: ResolvedProjector,
}

/// A validated spec bound to its feature stack.
#[derive(Debug)]
pub struct AtLoss {
    spec: AtLossSpec,
    stack: FeatureStack,
}

impl AtLoss {
    pub fn new(spec: AtLossSpec, stack: FeatureStack) -> Result<Self> {
        let depth = stack.depth();
        match &spec.alpha {
            Alpha::Uniform(a) => {
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(Error::InvalidSpec(format!("alpha = {a} must be a nonnegative number")));
                }
            }
            Alpha::PerTransform(a) => {
                if a.len() != depth {
                    return Err(Error::InvalidSpec(format!(
                        "{} weights for {depth} transforms",
                        a.len()
                    )));
                }
                if a.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidSpec("per-transform weights must be nonnegative".into()));
                }
                if spec.projector_policy != ProjectorPolicy::Identity {
                    return Err(Error::InvalidSpec(
                        "per-transform weights require the identity projector policy".into(),
                    ));
                }
            }
        }
        if depth == 0 && spec.alpha.is_active() {
            return Err(Error::InvalidSpec(
                "feature weight is positive but the stack is empty".into(),
            ));
        }
        let rank = match &spec.projector_policy {
            ProjectorPolicy::Identity => None,
            ProjectorPolicy::Fixed { projector } => {
                if projector.dim() != depth {
                    return Err(Error::DimensionMismatch {
                        expected: depth,
                        found: projector.dim(),
                    });
                }
                Some(projector.rank())
            }
            ProjectorPolicy::ResamplePerCall { k, .. } | ProjectorPolicy::PcaOnTargets { k } => Some(*k),
        };
        if let Some(k) = rank {
            if k == 0 || k > depth {
                return Err(Error::InvalidDimension { k, d: depth });
            }
            if stack.common_output_dim().is_none() {
                return Err(Error::ShapeMismatch(
                    "projected feature losses need a common transform output length".into(),
                ));
            }
        }
        Ok(Self { spec, stack })
    }

    pub fn spec(&self) -> &AtLossSpec {
        &self.spec
    }

    pub fn stack(&self) -> &FeatureStack {
        &self.stack
    }

    /// A fresh draw handle when the policy resamples.
    pub fn draws(&self) -> Option<ProjectorDraws> {
        match self.spec.projector_policy {
            ProjectorPolicy::ResamplePerCall { seed, .. } => Some(ProjectorDraws::new(seed)),
            _ => None,
        }
    }

    fn check_batches(&self, y: &Batch, yhat: &Batch) -> Result<()> {
        if y.len() != yhat.len() || y.dim() != yhat.dim() {
            return Err(Error::ShapeMismatch(format!(
                "targets are {}x{}, outputs are {}x{}",
                y.len(),
                y.dim(),
                yhat.len(),
                yhat.dim()
            )));
        }
        if let Some(s) = self.stack.input_dim() {
            if s != y.dim() {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    found: y.dim(),
                });
            }
        }
        Ok(())
    }

    /// Fixes the projector for one evaluation. Resampling consumes one draw.
    pub fn resolve(&self, y: &Batch, draws: Option<&mut ProjectorDraws>) -> Result<ResolvedProjector> {
        let depth = self.stack.depth();
        Ok(match &self.spec.projector_policy {
            ProjectorPolicy::Identity => ResolvedProjector::Identity,
            ProjectorPolicy::Fixed { projector } => ResolvedProjector::Matrix(projector.clone()),
            ProjectorPolicy::ResamplePerCall { k, .. } => {
                let draws = draws
                    .ok_or_else(|| Error::InvalidSpec("resampling policy needs a projector draw handle".into()))?;
                let frame = haar_frame(*k, depth, &mut draws.next_rng())?;
                ResolvedProjector::Matrix(frame_to_projector(&frame))
            }
            ProjectorPolicy::PcaOnTargets { k } => {
                if y.len() < 2 {
                    return Err(Error::TooFewPoints(y.len()));
                }
                let mut columns = Vec::new();
                for target in y.rows() {
                    let t = self.stack.stack(target)?;
                    columns.extend(t.column_iter().map(|c| c.iter().copied().collect::<Vec<f64>>()));
                }
                let cloud = PointCloud::new(columns)?;
                ResolvedProjector::Matrix(pca_projector(&cloud, *k)?.projector)
            }
        })
    }

    /// Per-sample feature differences `T(ŷ_i) - T(y_i)` mapped through `p`
    /// (rows indexed by transform).
    fn projected_differences(&self, y: &[f64], yhat: &[f64], p: &ResolvedProjector) -> Result<Vec<Vec<f64>>> {
        let diffs: Vec<Vec<f64>> = self
            .stack
            .transforms
            .iter()
            .map(|t| t.forward(yhat).iter().zip(t.forward(y)).map(|(a, b)| a - b).collect())
            .collect();
        match p {
            ResolvedProjector::Identity => Ok(diffs),
            ResolvedProjector::Matrix(p) => {
                let t = diffs.first().map_or(0, Vec::len);
                let d = DMatrix::from_fn(diffs.len(), t, |j, c| diffs[j][c]);
                let pd = p.matrix() * d;
                Ok(pd.row_iter().map(|r| r.iter().copied().collect()).collect())
            }
        }
    }

    fn base_value(&self, y: &Batch, yhat: &Batch) -> f64 {
        let m = y.len() as f64;
        let total: f64 = match self.spec.base_loss {
            BaseLoss::Mse => y
                .as_flat()
                .iter()
                .zip(yhat.as_flat())
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
            BaseLoss::CrossEntropy => -y
                .as_flat()
                .iter()
                .zip(yhat.as_flat())
                .map(|(t, p)| {
                    if *t == 0.0 {
                        0.0
                    } else {
                        t * p.max(PROBABILITY_FLOOR).ln()
                    }
                })
                .sum::<f64>(),
        };
        total / m
    }

    pub fn terms(&self, y: &Batch, yhat: &Batch, p: &ResolvedProjector) -> Result<LossTerms> {
        self.check_batches(y, yhat)?;
        let base = self.base_value(y, yhat);
        let mut feature = 0.0;
        if self.stack.depth() > 0 {
            for (yi, yhi) in y.rows().zip(yhat.rows()) {
                let pd = self.projected_differences(yi, yhi, p)?;
                for (j, row) in pd.iter().enumerate() {
                    feature += self.spec.alpha.weight(j) * row.iter().map(|v| v * v).sum::<f64>();
                }
            }
            feature /= y.len() as f64;
        }
        Ok(LossTerms { base, feature })
    }

    /// Loss value with the projector resolved for this call.
    pub fn loss(
        &self,
        y: &Batch,
        yhat: &Batch,
        draws: Option<&mut ProjectorDraws>,
    ) -> Result<(f64, ResolvedProjector)> {
        let p = self.resolve(y, draws)?;
        Ok((self.terms(y, yhat, &p)?.value(), p))
    }

    /// Gradient with respect to `ŷ` under the projector of the paired
    /// [`AtLoss::loss`] call.
    pub fn loss_gradient(&self, y: &Batch, yhat: &Batch, p: &ResolvedProjector) -> Result<Batch> {
        self.check_batches(y, yhat)?;
        let m = y.len() as f64;
        let mut grad = Batch::zeros(y.len(), y.dim());
        match self.spec.base_loss {
            BaseLoss::Mse => {
                for ((g, a), b) in grad.data.iter_mut().zip(y.as_flat()).zip(yhat.as_flat()) {
                    *g = 2.0 * (b - a) / m;
                }
            }
            BaseLoss::CrossEntropy => {
                for ((g, t), p) in grad.data.iter_mut().zip(y.as_flat()).zip(yhat.as_flat()) {
                    *g = if *p > PROBABILITY_FLOOR { -t / (m * p) } else { 0.0 };
                }
            }
        }
        if self.stack.depth() == 0 {
            return Ok(grad);
        }
        for i in 0..y.len() {
            let (yi, yhi) = (y.row(i), yhat.row(i));
            let pd = self.projected_differences(yi, yhi, p)?;
            let gi = grad.row_mut(i);
            for (j, (t, row)) in self.stack.transforms.iter().zip(&pd).enumerate() {
                let scale = 2.0 * self.spec.alpha.weight(j) / m;
                if scale == 0.0 {
                    continue;
                }
                let cot: Vec<f64> = row.iter().map(|v| scale * v).collect();
                let back = t.adjoint(yhi, &cot)?;
                gi.iter_mut().zip(&back).for_each(|(g, b)| *g += b);
            }
        }
        Ok(grad)
    }

    /// Value and gradient sharing one resolved projector.
    pub fn evaluate(&self, y: &Batch, yhat: &Batch, draws: Option<&mut ProjectorDraws>) -> Result<Evaluation> {
        let projector = self.resolve(y, draws)?;
        let terms = self.terms(y, yhat, &projector)?;
        let gradient = self.loss_gradient(y, yhat, &projector)?;
        Ok(Evaluation {
            value: terms.value(),
            terms,
            gradient,
            projector,
        })
    }
}

/// `(1/m) Σ_i Σ_j α_j ‖T_j(y_i) - T_j(ŷ_i)‖²`, one MSE per weighted transform.
pub fn weighted_transform_loss(terms: &[(f64, &dyn FeatureTransform)], y: &Batch, yhat: &Batch) -> Result<f64> {
    if y.len() != yhat.len() || y.dim() != yhat.dim() {
        return Err(Error::ShapeMismatch("targets and outputs differ in shape".into()));
    }
    let mut total = 0.0;
    for (yi, yhi) in y.rows().zip(yhat.rows()) {
        for (alpha, t) in terms {
            let sq: f64 = t
                .forward(yi)
                .iter()
                .zip(t.forward(yhi))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            total += alpha * sq;
        }
    }
    Ok(total / y.len() as f64)
}
