use std::fs;
use std::path::Path;

use serde::Serialize;

use orthoproj::atloss::AtLoss;
use orthoproj::designs::{covering_radius_estimate, cubature_strength_test, load_design, save_design};
use orthoproj::io::{ingest_csv, matrix_to_csv, read_matrix_csv, scan_to_csv, to_json_string, write_frame_csv};
use orthoproj::moments::{closed_form_moments, lsq_fit, ClosedFormMoments, LsqFit};
use orthoproj::objectives::{jl_min_dimension, jl_min_dimension_tau, jl_success_probability};
use orthoproj::select::{pareto_scan, select, SelectOptions};
use orthoproj::{
    AtLossSpec, Batch, CandidateSet, HaarSubspace, PairGeometry, PointCloud, Rule, SeedStream, StiefelFrame,
};

use crate::args::{AtlossCommand, CandidateArgs, Command, DataArgs, DesignCommand, EmpiricalArgs, OutArgs};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn emit(out: &OutArgs, text: &str) -> Result<()> {
    match &out.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| orthoproj::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn emit_json<T: Serialize>(out: &OutArgs, value: &T) -> Result<()> {
    emit(out, &to_json_string(value)?)
}

fn load_cloud(args: &DataArgs) -> Result<PointCloud> {
    let cloud = ingest_csv(&args.data)?;
    Ok(if args.dedup { cloud.dedup()? } else { cloud })
}

fn load_candidates(args: &CandidateArgs, k: usize, d: usize) -> Result<CandidateSet> {
    let set = match (&args.source.design, args.source.sample) {
        (Some(path), _) => load_design(path)?,
        (None, Some(n)) => {
            let seed = args
                .seed
                .ok_or_else(|| CliError::Usage("--sample needs --seed".into()))?;
            CandidateSet::haar(k, d, n, seed)?
        }
        (None, None) => return Err(CliError::Usage("pass --design or --sample".into())),
    };
    if set.k() != k || set.d() != d {
        return Err(CliError::Usage(format!(
            "design holds {}x{} frames, expected {k}x{d}",
            set.k(),
            set.d()
        )));
    }
    Ok(set)
}

#[derive(Serialize)]
struct MomentsReport {
    m: usize,
    d: usize,
    k: usize,
    tvar: f64,
    moments: ClosedFormMoments,
    lsq: Option<LsqFit>,
}

#[derive(Serialize)]
struct SelectReport {
    rule: Rule,
    chosen_index: usize,
    tvar: f64,
    #[serde(rename = "M")]
    mean_rel_dist: f64,
    #[serde(rename = "V")]
    var_rel_dist: f64,
    frame: StiefelFrame,
}

#[derive(Serialize)]
struct JlReport {
    m: usize,
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    k_min: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    success_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical: Option<EmpiricalJl>,
}

#[derive(Serialize)]
struct EmpiricalJl {
    k: usize,
    d: usize,
    samples: usize,
    seed: u64,
    fraction: f64,
}

#[derive(Serialize)]
struct RadiusReport {
    probes: usize,
    seed: u64,
    covering_radius: f64,
}

#[derive(Serialize)]
struct LossReport {
    value: f64,
    base: f64,
    feature: f64,
    gradient_norm: f64,
}

pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Moments { data, k, out } => {
            let x = load_cloud(&data)?;
            let moments = closed_form_moments(&x, k)?;
            let report = MomentsReport {
                m: x.len(),
                d: x.dim(),
                k,
                tvar: orthoproj::total_variance(&x),
                moments,
                lsq: lsq_fit(&x, k).ok(),
            };
            emit_json(&out, &report)?;
        }
        Command::Scan {
            data,
            k,
            candidates,
            out,
        } => {
            let x = load_cloud(&data)?;
            let set = load_candidates(&candidates, k, x.dim())?;
            emit(&out, &scan_to_csv(&pareto_scan(&x, &set)?))?;
        }
        Command::Select {
            data,
            k,
            candidates,
            rule,
            m_tol,
            frame_out,
            out,
        } => {
            let x = load_cloud(&data)?;
            let set = load_candidates(&candidates, k, x.dim())?;
            let rule: Rule = rule.parse()?;
            let opts = SelectOptions {
                m_tol,
                ..Default::default()
            };
            let chosen = select(&x, &set, rule, &opts)?;
            let frame = set.frames()[chosen.chosen_index].clone();
            if let Some(path) = &frame_out {
                write_frame_csv(&frame, path)?;
            }
            emit_json(
                &out,
                &SelectReport {
                    rule,
                    chosen_index: chosen.chosen_index,
                    tvar: chosen.summary.tvar_projected,
                    mean_rel_dist: chosen.summary.mean_rel_dist,
                    var_rel_dist: chosen.summary.var_rel_dist,
                    frame,
                },
            )?;
        }
        Command::Sample { k, d, n, seed, out } => {
            let set = CandidateSet::haar(k, d, n, seed)?;
            match &out.out {
                Some(path) => save_design(&set, path)?,
                None => print!("{}", orthoproj::designs::design_to_json(&set)?),
            }
        }
        Command::Design { action } => return run_design(action),
        Command::JlCheck {
            m,
            epsilon,
            tau,
            empirical,
            out,
        } => {
            let k_min = match tau {
                Some(t) => jl_min_dimension_tau(m, epsilon, t)?,
                None => jl_min_dimension(m, epsilon)?,
            };
            let report = JlReport {
                m,
                epsilon,
                tau,
                k_min,
                success_probability: tau.map(|t| jl_success_probability(m, t)),
                empirical: empirical_jl(&empirical, epsilon)?,
            };
            emit_json(&out, &report)?;
        }
        Command::Atloss {
            action:
                AtlossCommand::Eval {
                    spec,
                    y,
                    yhat,
                    gradient_out,
                    out,
                },
        } => {
            let text = fs::read_to_string(&spec).map_err(|e| orthoproj::Error::Io {
                path: spec.clone(),
                source: e,
            })?;
            let spec = AtLossSpec::from_json(&text)?;
            let y = Batch::new(read_matrix_csv(&y)?)?;
            let yhat = Batch::new(read_matrix_csv(&yhat)?)?;
            let stack = spec.build_stack(y.dim())?;
            let loss = AtLoss::new(spec, stack)?;
            let mut draws = loss.draws();
            let ev = loss.evaluate(&y, &yhat, draws.as_mut())?;
            if let Some(path) = &gradient_out {
                write_file(path, &matrix_to_csv(&ev.gradient.to_rows()))?;
            }
            emit_json(
                &out,
                &LossReport {
                    value: ev.value,
                    base: ev.terms.base,
                    feature: ev.terms.feature,
                    gradient_norm: ev.gradient.norm(),
                },
            )?;
        }
    }
    Ok(0)
}

fn run_design(action: DesignCommand) -> Result<i32> {
    match action {
        DesignCommand::Validate {
            design,
            strength,
            trials,
            seed,
            tolerance,
            out,
        } => {
            let set = load_design(&design)?;
            let report = cubature_strength_test(&set, strength, trials, seed, tolerance)?;
            emit_json(&out, &report)?;
            Ok(if report.passed { 0 } else { 1 })
        }
        DesignCommand::Radius {
            design,
            probes,
            seed,
            out,
        } => {
            let set = load_design(&design)?;
            let covering_radius = covering_radius_estimate(&set, probes, seed)?;
            emit_json(
                &out,
                &RadiusReport {
                    probes,
                    seed,
                    covering_radius,
                },
            )?;
            Ok(0)
        }
    }
}

fn empirical_jl(args: &EmpiricalArgs, epsilon: f64) -> Result<Option<EmpiricalJl>> {
    let Some(path) = &args.data else {
        return Ok(None);
    };
    let (Some(k), Some(samples), Some(seed)) = (args.k, args.samples, args.seed) else {
        return Err(CliError::Usage("--data needs --k, --samples and --seed".into()));
    };
    let x = ingest_csv(path)?;
    let g = PairGeometry::new(&x)?;
    let d = x.dim();
    let stream = SeedStream::new(seed);
    let mut hits = 0usize;
    for l in 0..samples {
        let p = HaarSubspace::sample(k, d, &mut stream.rng(l as u64))?;
        if g.jl_satisfied(&p, epsilon)? {
            hits += 1;
        }
    }
    Ok(Some(EmpiricalJl {
        k,
        d,
        samples,
        seed,
        fraction: hits as f64 / samples.max(1) as f64,
    }))
}
