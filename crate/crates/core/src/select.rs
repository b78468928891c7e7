//! Heuristic projector choices over a finite candidate set, trading variance
//! preservation (`tvar`) against relative-distance preservation (`M ≈ 1`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::designs::CandidateSet;
use crate::error::{Error, Result};
use crate::grassmann::PointCloud;
use crate::objectives::{PairGeometry, ProjectionSummary};
use crate::stats::percentile;

/// Selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Closest to the expected values `M = 1`, `tvar = (k/d) tvar(x)`.
    Cross,
    /// `M ≈ 1`, maximal `tvar`.
    Diamond,
    /// `M ≈ 1`, minimal `tvar`.
    Square,
    /// `tvar ≈ tvar` of the diamond choice, maximal `M`.
    Circle,
    /// Minimal `tvar`.
    Star,
    /// Maximal `tvar` (PCA within the set).
    PcaStar,
}

impl Rule {
    pub const ALL: [Rule; 6] = [
        Rule::Cross,
        Rule::Diamond,
        Rule::Square,
        Rule::Circle,
        Rule::Star,
        Rule::PcaStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Cross => "cross",
            Rule::Diamond => "diamond",
            Rule::Square => "square",
            Rule::Circle => "circle",
            Rule::Star => "star",
            Rule::PcaStar => "pca_star",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown rule `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    /// Absolute band `|M - 1| <= m_tol`; `None` uses the
    /// `m_percentile`-quantile of `|M - 1|` over the set.
    pub m_tol: Option<f64>,
    pub m_percentile: f64,
    /// Relative band on `tvar` around the diamond choice, for [`Rule::Circle`].
    pub tvar_rel_tol: f64,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            m_tol: None,
            m_percentile: 0.1,
            tvar_rel_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen_index: usize,
    pub label: Rule,
    pub summary: ProjectionSummary,
}

/// Summary of every candidate, in set order.
pub fn pareto_scan(x: &PointCloud, set: &CandidateSet) -> Result<Vec<(usize, ProjectionSummary)>> {
    let geometry = PairGeometry::new(x)?;
    set.frames()
        .iter()
        .enumerate()
        .map(|(i, f)| Ok((i, geometry.summarize(f)?)))
        .collect()
}

pub fn select(x: &PointCloud, set: &CandidateSet, rule: Rule, opts: &SelectOptions) -> Result<SelectionResult> {
    let scan: Vec<ProjectionSummary> = pareto_scan(x, set)?.into_iter().map(|(_, s)| s).collect();
    let tvar_x = PairGeometry::new(x)?.total_variance();
    let ratio = set.k() as f64 / set.d() as f64;
    select_from_scan(&scan, ratio * tvar_x, tvar_x, rule, opts)
}

/// First index attaining the extreme of `key` among `candidates`.
fn arg_extreme(candidates: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64, maximize: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let v = key(i);
        let better = match best {
            None => true,
            Some((_, b)) => {
                if maximize {
                    v > b
                } else {
                    v < b
                }
            }
        };
        if better {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Applies `rule` to precomputed summaries; `expected_tvar = (k/d) tvar(x)`.
pub fn select_from_scan(
    scan: &[ProjectionSummary],
    expected_tvar: f64,
    tvar_x: f64,
    rule: Rule,
    opts: &SelectOptions,
) -> Result<SelectionResult> {
    if scan.is_empty() {
        return Err(Error::EmptySet);
    }
    let tvar = |i: usize| scan[i].tvar_projected;
    let m = |i: usize| scan[i].mean_rel_dist;
    let m_band = || -> Result<Vec<usize>> {
        let tol = match opts.m_tol {
            Some(t) => t,
            None => {
                let dev: Vec<f64> = scan.iter().map(|s| (s.mean_rel_dist - 1.0).abs()).collect();
                percentile(&dev, opts.m_percentile)
            }
        };
        let band: Vec<usize> = (0..scan.len()).filter(|&i| (m(i) - 1.0).abs() <= tol).collect();
        if band.is_empty() {
            return Err(Error::BandEmpty(format!("|M - 1| <= {tol:e}")));
        }
        Ok(band)
    };
    let all = 0..scan.len();
    let chosen = match rule {
        Rule::Cross => arg_extreme(
            all,
            |i| (m(i) - 1.0).powi(2) + ((tvar(i) - expected_tvar) / tvar_x).powi(2),
            false,
        ),
        Rule::Diamond => arg_extreme(m_band()?.into_iter(), tvar, true),
        Rule::Square => arg_extreme(m_band()?.into_iter(), tvar, false),
        Rule::Circle => {
            let diamond = arg_extreme(m_band()?.into_iter(), tvar, true).expect("band is nonempty");
            let target = tvar(diamond);
            let tol = opts.tvar_rel_tol * target.abs();
            let band = (0..scan.len()).filter(|&i| (tvar(i) - target).abs() <= tol);
            arg_extreme(band, m, true)
        }
        Rule::Star => arg_extreme(all, tvar, false),
        Rule::PcaStar => arg_extreme(all, tvar, true),
    }
    .expect("candidate range is nonempty");
    Ok(SelectionResult {
        chosen_index: chosen,
        label: rule,
        summary: scan[chosen],
    })
}
