//! Finite projector sets standing in for the whole Grassmannian: file I/O,
//! covering-radius estimation and cubature-strength testing.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{frame_to_projector, haar_frame, sq_norm, SeedStream, StiefelFrame, SubspaceProjection};
use crate::io::to_json_string;
use crate::moments::{expected_sq_norm, expected_sq_norm_product};

/// Default pass threshold of [`cubature_strength_test`] for exact designs.
pub const CUBATURE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignSource {
    File,
    HaarSample,
    Synthetic,
}

/// Nonempty list of frames sharing `(k, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    frames: Vec<StiefelFrame>,
    source: DesignSource,
}

impl CandidateSet {
    pub fn new(frames: Vec<StiefelFrame>, source: DesignSource) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySet)?;
        let (k, d) = (first.k(), first.d());
        for (index, f) in frames.iter().enumerate() {
            if f.k() != k || f.d() != d {
                return Err(Error::InvalidFrame {
                    index,
                    source: Box::new(Error::ShapeMismatch(format!(
                        "frame is {}x{}, set is {k}x{d}",
                        f.k(),
                        f.d()
                    ))),
                });
            }
        }
        Ok(Self { frames, source })
    }

    /// `n` Haar draws; frame `l` uses stream `l` of `seed`.
    pub fn haar(k: usize, d: usize, n: usize, seed: u64) -> Result<Self> {
        let stream = SeedStream::new(seed);
        let frames = (0..n)
            .map(|l| haar_frame(k, d, &mut stream.rng(l as u64)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames, DesignSource::HaarSample)
    }

    /// Projectors onto the `n` lines at angles `j pi / n` in `R^2`; a 2-design
    /// on `G(1,2)` for `n >= 3`.
    pub fn equiangular_lines(n: usize) -> Result<Self> {
        let frames = (0..n)
            .map(|j| {
                let t = j as f64 * std::f64::consts::PI / n as f64;
                StiefelFrame::from_rows(vec![vec![t.cos(), t.sin()]])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames, DesignSource::Synthetic)
    }

    pub fn frames(&self) -> &[StiefelFrame] {
        &self.frames
    }

    pub fn source(&self) -> DesignSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn k(&self) -> usize {
        self.frames[0].k()
    }

    pub fn d(&self) -> usize {
        self.frames[0].d()
    }

    /// Copy extended by `other`'s frames.
    pub fn union(&self, other: &CandidateSet) -> Result<Self> {
        let mut frames = self.frames.clone();
        frames.extend(other.frames.iter().cloned());
        Self::new(frames, self.source)
    }

    fn projector_entries(&self) -> Vec<Vec<f64>> {
        self.frames
            .iter()
            .map(|f| frame_to_projector(f).matrix().as_slice().to_vec())
            .collect()
    }
}

#[derive(Deserialize)]
struct RawFrame {
    k: usize,
    d: usize,
    rows: Vec<Vec<f64>>,
}

/// Reads a JSON array of `{"k", "d", "rows"}` frame objects.
pub fn load_design(path: impl AsRef<Path>) -> Result<CandidateSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_design(&text)
}

pub fn parse_design(text: &str) -> Result<CandidateSet> {
    let raw: Vec<RawFrame> = serde_json::from_str(text)?;
    let frames = raw
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            let wrap = |source| Error::InvalidFrame {
                index,
                source: Box::new(source),
            };
            if r.rows.len() != r.k || r.rows.iter().any(|row| row.len() != r.d) {
                return Err(wrap(Error::ShapeMismatch(format!(
                    "declared {}x{} does not match rows",
                    r.k, r.d
                ))));
            }
            StiefelFrame::from_rows(r.rows).map_err(wrap)
        })
        .collect::<Result<Vec<_>>>()?;
    CandidateSet::new(frames, DesignSource::File)
}

pub fn save_design(set: &CandidateSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, design_to_json(set)?).map_err(|e| Error::io(path, e))
}

pub fn design_to_json(set: &CandidateSet) -> Result<String> {
    to_json_string(&set.frames)
}

fn min_distance(probe: &[f64], entries: &[Vec<f64>]) -> f64 {
    entries
        .iter()
        .map(|e| probe.iter().zip(e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Monte Carlo lower estimate of the covering radius
/// `sup_p min_l ||p - p_l||_F`: the largest distance-to-set over `n_probe`
/// Haar probes. Probe `l` uses stream `l` of `seed`, so estimates are
/// nondecreasing in `n_probe`.
pub fn covering_radius_estimate(set: &CandidateSet, n_probe: usize, seed: u64) -> Result<f64> {
    let stream = SeedStream::new(seed);
    let (k, d) = (set.k(), set.d());
    let entries = set.projector_entries();
    let mut best: f64 = 0.0;
    for l in 0..n_probe {
        let probe = frame_to_projector(&haar_frame(k, d, &mut stream.rng(l as u64))?);
        best = best.max(min_distance(probe.matrix().as_slice(), &entries));
    }
    Ok(best)
}

/// Largest distance-to-set over an explicit list of probe frames.
pub fn covering_radius_over(set: &CandidateSet, probes: &[StiefelFrame]) -> Result<f64> {
    let entries = set.projector_entries();
    let mut best: f64 = 0.0;
    for probe in probes {
        if probe.d() != set.d() || probe.k() != set.k() {
            return Err(Error::DimensionMismatch {
                expected: set.d(),
                found: probe.d(),
            });
        }
        best = best.max(min_distance(frame_to_projector(probe).matrix().as_slice(), &entries));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubatureReport {
    pub strength: u8,
    pub passed: bool,
    /// Largest relative deviation of a set average from its closed form.
    pub max_deviation: f64,
}

/// Tests whether averaging over the set reproduces the Haar moments of
/// `||Py||^2` (strength 1) and additionally of `||Py||^2 ||Pz||^2`
/// (strength 2), for `trial_vectors` random pairs `(y, z)`.
pub fn cubature_strength_test(
    set: &CandidateSet,
    strength: u8,
    trial_vectors: usize,
    seed: u64,
    tolerance: f64,
) -> Result<CubatureReport> {
    if !(1..=2).contains(&strength) {
        return Err(Error::InvalidParameter(format!("strength {strength} not in {{1, 2}}")));
    }
    let (k, d) = (set.k(), set.d());
    if strength == 2 && d < 2 {
        return Err(Error::UnsupportedAmbientDimension(d));
    }
    let stream = SeedStream::new(seed);
    let n = set.len() as f64;
    let mut max_deviation: f64 = 0.0;
    for t in 0..trial_vectors {
        let mut rng = stream.rng(t as u64);
        let mut draw = || -> Vec<f64> { (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect() };
        let (y, z) = (draw(), draw());
        if sq_norm(&y) == 0.0 || sq_norm(&z) == 0.0 {
            continue;
        }
        let (mut first, mut second) = (0.0, 0.0);
        for f in &set.frames {
            let py = f.projected_sq_norm(&y);
            first += py;
            second += py * f.projected_sq_norm(&z);
        }
        let e1 = expected_sq_norm(&y, k);
        max_deviation = max_deviation.max((first / n - e1).abs() / e1);
        if strength == 2 {
            let e2 = expected_sq_norm_product(&y, &z, k);
            max_deviation = max_deviation.max((second / n - e2).abs() / e2);
        }
    }
    Ok(CubatureReport {
        strength,
        passed: max_deviation <= tolerance,
        max_deviation,
    })
}
