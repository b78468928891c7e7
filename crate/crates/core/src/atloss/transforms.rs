//! Feature transforms `T_j : R^s -> R^t` applied to outputs and targets,
//! each with its transpose-Jacobian (adjoint) action for gradient assembly.
//!
//! Image transforms read the flat target vector as a row-major
//! `height x width` image, extend it by half-sample symmetric reflection and
//! return an image of the same size.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait FeatureTransform: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn forward(&self, y: &[f64]) -> Vec<f64>;

    /// `J_T(y)^T cotangent`.
    fn adjoint(&self, y: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        let _ = (y, cotangent);
        Err(Error::MissingAdjoint(self.name().to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
}

impl ImageShape {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Half-sample symmetric index: `... 1 0 | 0 1 ... n-1 | n-1 n-2 ...`.
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = i.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

#[derive(Debug, Clone)]
pub struct Identity {
    dim: usize,
}

impl Identity {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl FeatureTransform for Identity {
    fn name(&self) -> &str {
        "identity"
    }
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn output_dim(&self) -> usize {
        self.dim
    }
    fn forward(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
    fn adjoint(&self, _: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        Ok(cotangent.to_vec())
    }
}

/// `y -> A y` for a `t x s` matrix.
#[derive(Debug, Clone)]
pub struct Linear {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
}

impl Linear {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch(
                "linear transform needs a nonempty rectangular matrix".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            matrix: matrix.concat(),
        })
    }
}

impl FeatureTransform for Linear {
    fn name(&self) -> &str {
        "linear"
    }
    fn input_dim(&self) -> usize {
        self.cols
    }
    fn output_dim(&self) -> usize {
        self.rows
    }
    fn forward(&self, y: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }
    fn adjoint(&self, _: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.cols];
        for (row, c) in self.matrix.chunks_exact(self.cols).zip(cotangent) {
            out.iter_mut().zip(row).for_each(|(o, a)| *o += a * c);
        }
        Ok(out)
    }
}

/// Same-size 2-D convolution with reflective boundary.
#[derive(Debug, Clone)]
pub struct Convolution2d {
    name: String,
    shape: ImageShape,
    kernel: Vec<f64>,
    kh: usize,
    kw: usize,
}

impl Convolution2d {
    pub fn new(name: &str, shape: ImageShape, kernel: Vec<Vec<f64>>) -> Result<Self> {
        let kh = kernel.len();
        let kw = kernel.first().map_or(0, Vec::len);
        if kh.is_multiple_of(2) || kw.is_multiple_of(2) || kernel.iter().any(|r| r.len() != kw) {
            return Err(Error::ShapeMismatch("kernel must be rectangular with odd sides".into()));
        }
        if shape.is_empty() {
            return Err(Error::ShapeMismatch("image shape must be nonempty".into()));
        }
        Ok(Self {
            name: name.to_string(),
            shape,
            kernel: kernel.concat(),
            kh,
            kw,
        })
    }

    pub fn kernel(&self) -> Vec<Vec<f64>> {
        self.kernel.chunks_exact(self.kw).map(<[f64]>::to_vec).collect()
    }

    /// Calls `f(out_index, in_index, weight)` for every tap.
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, f64)) {
        let ImageShape { height, width } = self.shape;
        let (ch, cw) = ((self.kh / 2) as isize, (self.kw / 2) as isize);
        for i in 0..height {
            for j in 0..width {
                for a in 0..self.kh {
                    let r = reflect(i as isize + ch - a as isize, height);
                    for b in 0..self.kw {
                        let w = self.kernel[a * self.kw + b];
                        if w != 0.0 {
                            let c = reflect(j as isize + cw - b as isize, width);
                            f(i * width + j, r * width + c, w);
                        }
                    }
                }
            }
        }
    }
}

impl FeatureTransform for Convolution2d {
    fn name(&self) -> &str {
        &self.name
    }
    fn input_dim(&self) -> usize {
        self.shape.len()
    }
    fn output_dim(&self) -> usize {
        self.shape.len()
    }
    fn forward(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.shape.len()];
        self.for_each_tap(|o, i, w| out[o] += w * y[i]);
        out
    }
    fn adjoint(&self, _: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.shape.len()];
        self.for_each_tap(|o, i, w| out[i] += w * cotangent[o]);
        Ok(out)
    }
}

/// Horizontal-derivative Prewitt kernel.
pub fn prewitt(shape: ImageShape) -> Result<Convolution2d> {
    let row = vec![-1.0, 0.0, 1.0];
    Convolution2d::new("prewitt", shape, vec![row.clone(), row.clone(), row])
}

/// Laplacian-of-Gaussian kernel of radius `ceil(3 sigma)`, shifted to zero
/// sum so constants map to zero.
pub fn log_filter(shape: ImageShape, sigma: f64) -> Result<Convolution2d> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be positive")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let s2 = sigma * sigma;
    let mut kernel: Vec<Vec<f64>> = (-radius..=radius)
        .map(|y| {
            (-radius..=radius)
                .map(|x| {
                    let r2 = (x * x + y * y) as f64;
                    -1.0 / (std::f64::consts::PI * s2 * s2) * (1.0 - r2 / (2.0 * s2)) * (-r2 / (2.0 * s2)).exp()
                })
                .collect()
        })
        .collect();
    let n = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let mean = kernel.iter().flatten().sum::<f64>() / n;
    kernel.iter_mut().flatten().for_each(|v| *v -= mean);
    Convolution2d::new("log", shape, kernel)
}

/// `1 - exp(-D^2 / (2 c^2))` applied on the DFT grid of the reflect-padded
/// image, `D` the wrapped frequency distance in samples.
pub struct GaussianHighpass {
    name: String,
    shape: ImageShape,
    cutoff: f64,
    pad: (usize, usize),
    padded: ImageShape,
    response: Vec<f64>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for GaussianHighpass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianHighpass")
            .field("name", &self.name)
            .field("shape", &self.shape)
            .field("cutoff", &self.cutoff)
            .field("padded", &self.padded)
            .finish()
    }
}

impl GaussianHighpass {
    pub fn new(shape: ImageShape, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff = {cutoff} must be positive")));
        }
        if shape.is_empty() {
            return Err(Error::ShapeMismatch("image shape must be nonempty".into()));
        }
        let pad = (shape.height / 2, shape.width / 2);
        let padded = ImageShape::new(shape.height + 2 * pad.0, shape.width + 2 * pad.1);
        let lowpass = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|u| {
                    let f = u.min(n - u) as f64;
                    (-f * f / (2.0 * cutoff * cutoff)).exp()
                })
                .collect()
        };
        let (gr, gc) = (lowpass(padded.height), lowpass(padded.width));
        let response = gr.iter().flat_map(|a| gc.iter().map(move |b| 1.0 - a * b)).collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            name: format!("gauss_highpass({cutoff})"),
            shape,
            cutoff,
            pad,
            padded,
            response,
            row_fwd: planner.plan_fft_forward(padded.width),
            row_inv: planner.plan_fft_inverse(padded.width),
            col_fwd: planner.plan_fft_forward(padded.height),
            col_inv: planner.plan_fft_inverse(padded.height),
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn pad_index(&self, r: usize, c: usize) -> usize {
        let sr = reflect(r as isize - self.pad.0 as isize, self.shape.height);
        let sc = reflect(c as isize - self.pad.1 as isize, self.shape.width);
        sr * self.shape.width + sc
    }

    /// Circular filtering of a padded image; self-adjoint since the response
    /// is real and even.
    fn filter(&self, grid: &mut [f64]) {
        let ImageShape { height, width } = self.padded;
        let mut buf: Vec<Complex64> = grid.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, &self.row_fwd, &self.col_fwd);
        buf.iter_mut().zip(&self.response).for_each(|(z, h)| *z *= h);
        self.fft2(&mut buf, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (height * width) as f64;
        grid.iter_mut().zip(&buf).for_each(|(g, z)| *g = z.re * scale);
    }

    fn fft2(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let ImageShape { height, width } = self.padded;
        for row in buf.chunks_exact_mut(width) {
            rows.process(row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); height];
        for c in 0..width {
            for r in 0..height {
                column[r] = buf[r * width + c];
            }
            cols.process(&mut column);
            for r in 0..height {
                buf[r * width + c] = column[r];
            }
        }
    }
}

impl FeatureTransform for GaussianHighpass {
    fn name(&self) -> &str {
        &self.name
    }
    fn input_dim(&self) -> usize {
        self.shape.len()
    }
    fn output_dim(&self) -> usize {
        self.shape.len()
    }
    fn forward(&self, y: &[f64]) -> Vec<f64> {
        let ImageShape { height, width } = self.padded;
        let mut grid: Vec<f64> = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| y[self.pad_index(r, c)])
            .collect();
        self.filter(&mut grid);
        let mut out = Vec::with_capacity(self.shape.len());
        for r in 0..self.shape.height {
            let start = (r + self.pad.0) * width + self.pad.1;
            out.extend_from_slice(&grid[start..start + self.shape.width]);
        }
        out
    }
    fn adjoint(&self, _: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        let ImageShape { height, width } = self.padded;
        let mut grid = vec![0.0; height * width];
        for r in 0..self.shape.height {
            let start = (r + self.pad.0) * width + self.pad.1;
            grid[start..start + self.shape.width]
                .copy_from_slice(&cotangent[r * self.shape.width..(r + 1) * self.shape.width]);
        }
        self.filter(&mut grid);
        let mut out = vec![0.0; self.shape.len()];
        for r in 0..height {
            for c in 0..width {
                out[self.pad_index(r, c)] += grid[r * width + c];
            }
        }
        Ok(out)
    }
}

/// Serializable transform description. Unit variants are the named presets
/// `prewitt`, `log`, `gauss40`, `gauss100`, `identity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformSpec {
    Prewitt,
    Log,
    Gauss40,
    Gauss100,
    Identity,
    LogFilter { sigma: f64 },
    GaussHighpass { cutoff: f64 },
    Linear(Vec<Vec<f64>>),
}

/// Default LoG width for the `log` preset.
pub const LOG_SIGMA: f64 = 1.0;

impl TransformSpec {
    fn needs_shape(&self) -> bool {
        !matches!(self, TransformSpec::Identity | TransformSpec::Linear(_))
    }

    fn label(&self) -> &'static str {
        match self {
            TransformSpec::Prewitt => "prewitt",
            TransformSpec::Log | TransformSpec::LogFilter { .. } => "log",
            TransformSpec::Gauss40 => "gauss40",
            TransformSpec::Gauss100 => "gauss100",
            TransformSpec::GaussHighpass { .. } => "gauss_highpass",
            TransformSpec::Identity => "identity",
            TransformSpec::Linear(_) => "linear",
        }
    }

    /// Builds the transform for targets of length `input_dim`.
    pub fn build(&self, input_dim: usize, shape: Option<ImageShape>) -> Result<Box<dyn FeatureTransform>> {
        let shape = if self.needs_shape() {
            let shape = shape.ok_or_else(|| Error::MissingShape(self.label().to_string()))?;
            if shape.len() != input_dim {
                return Err(Error::ShapeMismatch(format!(
                    "image {}x{} does not match target length {input_dim}",
                    shape.height, shape.width
                )));
            }
            Some(shape)
        } else {
            None
        };
        let t: Box<dyn FeatureTransform> = match self {
            TransformSpec::Prewitt => Box::new(prewitt(shape.unwrap())?),
            TransformSpec::Log => Box::new(log_filter(shape.unwrap(), LOG_SIGMA)?),
            TransformSpec::LogFilter { sigma } => Box::new(log_filter(shape.unwrap(), *sigma)?),
            TransformSpec::Gauss40 => Box::new(GaussianHighpass::new(shape.unwrap(), 40.0)?),
            TransformSpec::Gauss100 => Box::new(GaussianHighpass::new(shape.unwrap(), 100.0)?),
            TransformSpec::GaussHighpass { cutoff } => Box::new(GaussianHighpass::new(shape.unwrap(), *cutoff)?),
            TransformSpec::Identity => Box::new(Identity::new(input_dim)),
            TransformSpec::Linear(m) => {
                let lin = Linear::new(m.clone())?;
                if lin.input_dim() != input_dim {
                    return Err(Error::ShapeMismatch(format!(
                        "linear transform expects length {}, targets have {input_dim}",
                        lin.input_dim()
                    )));
                }
                Box::new(lin)
            }
        };
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn all_image_transforms(shape: ImageShape) -> Vec<Box<dyn FeatureTransform>> {
        [
            TransformSpec::Prewitt,
            TransformSpec::Log,
            TransformSpec::GaussHighpass { cutoff: 2.0 },
            TransformSpec::Gauss40,
        ]
        .iter()
        .map(|s| s.build(shape.len(), Some(shape)).unwrap())
        .collect()
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-4..8).map(|i| reflect(i, 3)).collect();
        assert_eq!(got, vec![2, 2, 1, 0, 0, 1, 2, 2, 1, 0, 0, 1]);
        assert_eq!(reflect(-1, 1), 0);
    }

    #[test]
    fn constants_are_killed_by_edge_filters() {
        let shape = ImageShape::new(6, 7);
        let y = vec![3.5; shape.len()];
        for t in [
            Box::new(prewitt(shape).unwrap()) as Box<dyn FeatureTransform>,
            Box::new(log_filter(shape, 1.0).unwrap()),
            Box::new(GaussianHighpass::new(shape, 3.0).unwrap()),
        ] {
            assert!(t.forward(&y).iter().all(|v| v.abs() < 1e-12), "{}", t.name());
        }
    }

    #[test]
    fn prewitt_responds_to_horizontal_ramp() {
        let shape = ImageShape::new(5, 5);
        let y: Vec<f64> = (0..25).map(|i| (i % 5) as f64).collect();
        let out = prewitt(shape).unwrap().forward(&y);
        // interior: 3 rows x (x+1 - (x-1)) = 6, flipped by convolution
        assert_eq!(out[2 * 5 + 2].abs(), 6.0);
    }

    #[test]
    fn linear_row_vector_is_inner_product() {
        let v = vec![0.5, -1.0, 2.0];
        let t = Linear::new(vec![v.clone()]).unwrap();
        let y = [1.0, 2.0, 3.0];
        assert_eq!(t.forward(&y), vec![dot(&v, &y)]);
    }

    #[test]
    fn adjoints_satisfy_inner_product_identity() {
        let shape = ImageShape::new(5, 8);
        for (n, t) in all_image_transforms(shape).into_iter().enumerate() {
            let x = random(shape.len(), 2 * n as u64);
            let c = random(shape.len(), 2 * n as u64 + 1);
            let lhs = dot(&t.forward(&x), &c);
            let rhs = dot(&x, &t.adjoint(&x, &c).unwrap());
            assert!(
                (lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()),
                "{}: {lhs} vs {rhs}",
                t.name()
            );
        }
        let lin = Linear::new(vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![0.0, 4.0]]).unwrap();
        let (x, c) = (random(2, 9), random(3, 10));
        assert!((dot(&lin.forward(&x), &c) - dot(&x, &lin.adjoint(&x, &c).unwrap())).abs() < 1e-14);
    }

    #[test]
    fn log_adjoint_is_flipped_kernel_correlation() {
        let shape = ImageShape::new(7, 7);
        let t = log_filter(shape, 1.0).unwrap();
        let flipped: Vec<Vec<f64>> = t
            .kernel()
            .into_iter()
            .rev()
            .map(|r| r.into_iter().rev().collect())
            .collect();
        let corr = Convolution2d::new("flip", shape, flipped).unwrap();
        let c = random(shape.len(), 3);
        // convolution with the flipped kernel is correlation with the kernel;
        // the kernel is symmetric so both agree with the adjoint
        let a = t.adjoint(&c, &c).unwrap();
        let b = corr.forward(&c);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-6 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let shape = ImageShape::new(4, 6);
        for t in all_image_transforms(shape) {
            let y = random(shape.len(), 4);
            let c = random(shape.len(), 5);
            let adj = t.adjoint(&y, &c).unwrap();
            let h = 1e-6;
            for idx in [0, 7, 23] {
                let mut plus = y.clone();
                let mut minus = y.clone();
                plus[idx] += h;
                minus[idx] -= h;
                let fd = (dot(&t.forward(&plus), &c) - dot(&t.forward(&minus), &c)) / (2.0 * h);
                assert!((fd - adj[idx]).abs() <= 1e-6 * (1.0 + adj[idx].abs()), "{}", t.name());
            }
        }
    }

    #[test]
    fn image_presets_need_shape() {
        for s in [
            TransformSpec::Prewitt,
            TransformSpec::Log,
            TransformSpec::Gauss40,
            TransformSpec::Gauss100,
        ] {
            assert_eq!(s.build(16, None).unwrap_err().kind(), "missing-shape");
        }
        assert!(TransformSpec::Prewitt.build(15, Some(ImageShape::new(4, 4))).is_err());
        assert!(TransformSpec::Identity.build(16, None).is_ok());
    }

    #[test]
    fn preset_json_names() {
        let specs: Vec<TransformSpec> =
            serde_json::from_str(r#"["prewitt","log","gauss40","gauss100","identity",{"linear":[[1.0,1.0]]}]"#)
                .unwrap();
        assert_eq!(specs[3], TransformSpec::Gauss100);
        assert_eq!(specs[5], TransformSpec::Linear(vec![vec![1.0, 1.0]]));
    }

    #[derive(Debug)]
    struct ForwardOnly;

    impl FeatureTransform for ForwardOnly {
        fn name(&self) -> &str {
            "forward-only"
        }
        fn input_dim(&self) -> usize {
            1
        }
        fn output_dim(&self) -> usize {
            1
        }
        fn forward(&self, y: &[f64]) -> Vec<f64> {
            vec![y[0].abs()]
        }
    }

    #[test]
    fn default_adjoint_reports_missing() {
        assert_eq!(
            ForwardOnly.adjoint(&[1.0], &[1.0]).unwrap_err().kind(),
            "missing-adjoint"
        );
    }
}
