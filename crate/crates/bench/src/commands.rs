//! The three subcommands, separated from argument parsing and printing.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use spdflow_core::actions::Congruence;
use spdflow_core::error::Error;
use spdflow_core::integrators::{
    integrate, integrate_partial, reference_trajectory, rk4_direction, Rkmk4, Trajectory,
};
use spdflow_core::manifold::{step_bounds, Regime, StepBounds};
use spdflow_core::matcore::{expm, Mat, SpdMat};
use spdflow_core::models::{linear_model, linspace, make_case_study, sinusoidal_model, Case, CovarianceModel};
use spdflow_core::random::{random_mat, random_spd, rng, TestRng};

use crate::config::{ExperimentConfig, IntegratorId};
use crate::report::{fmt_num, trajectory_csv, ErrorReport};
use crate::BenchError;

pub struct RunOutput {
    pub dim: usize,
    pub reference: Trajectory,
    pub trajectories: Vec<(String, Trajectory)>,
    pub report: ErrorReport,
}

type IntegratorResult = (String, Trajectory, Option<(usize, String)>);

fn run_one(
    id: IntegratorId,
    cfg: &ExperimentConfig,
    model: &dyn CovarianceModel,
    p0: &SpdMat,
    grid: &[f64],
) -> Result<IntegratorResult, BenchError> {
    let stepper = id.stepper(cfg.action);
    let (tr, err) = integrate_partial(stepper.as_ref(), model, p0, grid)?;
    let failure = err.map(|e| match e {
        Error::StepFailed { index, source } => (index, source.to_string()),
        other => (tr.len() - 1, other.to_string()),
    });
    Ok((id.name().to_string(), tr, failure))
}

/// Integrates every configured scheme and compares it with the refined
/// reference. Integrator failures are recorded, not propagated.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, BenchError> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let p0 = cfg.initial_covariance(model.dim())?;
    let grid = cfg.grid_points();
    let reference = reference_trajectory(model.as_ref(), &p0, &grid, cfg.refine)?;

    let results: Vec<IntegratorResult> = if cfg.parallel {
        cfg.integrators
            .par_iter()
            .map(|&id| run_one(id, cfg, model.as_ref(), &p0, &grid))
            .collect::<Result<_, _>>()?
    } else {
        cfg.integrators
            .iter()
            .map(|&id| run_one(id, cfg, model.as_ref(), &p0, &grid))
            .collect::<Result<_, _>>()?
    };

    let mut report = ErrorReport::default();
    let mut trajectories = Vec::with_capacity(results.len());
    for (name, tr, failure) in results {
        report.add(&name, &grid, &tr, &reference, failure);
        trajectories.push((name, tr));
    }
    Ok(RunOutput {
        dim: model.dim(),
        reference,
        trajectories,
        report,
    })
}

/// Writes `<integrator>.csv`, `reference.csv` and `errors.csv`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    let mut write = |name: String, contents: String| -> Result<(), BenchError> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        files.push(path);
        Ok(())
    };
    for (name, tr) in &out.trajectories {
        write(format!("{name}.csv"), trajectory_csv(tr, out.dim))?;
    }
    write("reference.csv".into(), trajectory_csv(&out.reference, out.dim))?;
    write("errors.csv".into(), out.report.to_csv())?;
    Ok(files)
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunOutput, BenchError> {
    let out = run_experiment(cfg)?;
    if let Some(dir) = &cfg.out {
        write_outputs(&out, dir)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Euler,
    /// Effective direction of one full RK4 step of the grid size.
    Rk4,
}

impl FromStr for Field {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "euler" => Ok(Field::Euler),
            "rk4" => Ok(Field::Rk4),
            other => Err(BenchError::Config(format!("unknown field '{other}'"))),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Euler => "euler",
            Field::Rk4 => "rk4",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub field: Field,
    pub bounds: StepBounds,
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let regime = match self.bounds.regime {
            Regime::AllSafe => "all_safe",
            Regime::Bounded => "bounded",
        };
        write!(
            f,
            "field={} rho_stay={} rho_leave={} regime={regime}",
            self.field,
            fmt_num(self.bounds.rho_stay),
            fmt_num(self.bounds.rho_leave)
        )
    }
}

/// Step-size bounds at the initial point of the configured problem.
pub fn cmd_bounds(cfg: &ExperimentConfig, field: Field) -> Result<BoundsReport, BenchError> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let p0 = cfg.initial_covariance(model.dim())?;
    let t0 = cfg.grid.t0;
    let direction = match field {
        Field::Euler => model.tangent(p0.as_sym(), t0)?,
        Field::Rk4 => rk4_direction(model.as_ref(), t0, p0.as_sym(), cfg.step())?,
    };
    Ok(BoundsReport {
        field,
        bounds: step_bounds(&p0, &direction)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceModel {
    /// Constant random generator; compared with the closed-form flow.
    Frozen,
    /// `A + sin(t) C` with random non-commuting `A`, `C`.
    Sinusoidal,
    Case1,
    Case2,
}

impl FromStr for ConvergenceModel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "frozen" => Ok(ConvergenceModel::Frozen),
            "sinusoidal" => Ok(ConvergenceModel::Sinusoidal),
            "case1" => Ok(ConvergenceModel::Case1),
            "case2" => Ok(ConvergenceModel::Case2),
            other => Err(BenchError::Config(format!("unknown convergence model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    /// Error at roundoff level for every step size.
    Exact,
    Fitted(f64),
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::Exact => f.write_str("exact"),
            Slope::Fitted(s) => write!(f, "{s:.3}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub integrator: String,
    pub errors: Vec<f64>,
    pub slope: Slope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub hs: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn slope(&self, integrator: &str) -> Option<Slope> {
        self.rows.iter().find(|r| r.integrator == integrator).map(|r| r.slope)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,integrator,error\n");
        for row in &self.rows {
            for (h, e) in self.hs.iter().zip(&row.errors) {
                out.push_str(&format!("{},{},{}\n", fmt_num(*h), row.integrator, fmt_num(*e)));
            }
        }
        out
    }
}

/// Errors at or below this, relative to the solution norm, count as exact.
pub const EXACT_TOL: f64 = 1e-10;

/// Reference step is the smallest requested step divided by this.
pub const SELF_REFERENCE_FACTOR: usize = 64;

struct Problem {
    model: Box<dyn CovarianceModel>,
    p0: SpdMat,
    t0: f64,
    t1: f64,
    /// Closed-form endpoint, when one exists.
    exact: Option<Mat>,
}

fn sinusoidal_generators(r: &mut TestRng) -> (Mat, Mat) {
    (random_mat(r, 3, 0.8), random_mat(r, 3, 0.8))
}

/// `(A, C)` of the `sinusoidal` convergence model for a seed.
pub fn sinusoidal_problem_generators(seed: u64) -> (Mat, Mat) {
    sinusoidal_generators(&mut rng(seed))
}

fn problem(id: ConvergenceModel, seed: u64) -> Result<Problem, BenchError> {
    let mut r = rng(seed);
    Ok(match id {
        ConvergenceModel::Frozen => {
            let a = random_mat(&mut r, 3, 1.0);
            let p0 = random_spd(&mut r, 3, 0.5, 2.0);
            let e = expm(&a)?;
            let exact = &e * p0.as_mat() * e.transpose();
            Problem {
                model: Box::new(linear_model(a)?),
                p0,
                t0: 0.0,
                t1: 1.0,
                exact: Some(exact),
            }
        }
        ConvergenceModel::Sinusoidal => {
            let (a, c) = sinusoidal_generators(&mut r);
            let p0 = random_spd(&mut r, 3, 0.5, 2.0);
            Problem {
                model: Box::new(sinusoidal_model(a, c)?),
                p0,
                t0: 0.0,
                t1: 1.0,
                exact: None,
            }
        }
        ConvergenceModel::Case1 | ConvergenceModel::Case2 => {
            let case = if id == ConvergenceModel::Case1 { Case::One } else { Case::Two };
            let params = make_case_study(case);
            Problem {
                model: Box::new(params.model()),
                p0: params.p0.clone(),
                t0: params.t0,
                t1: params.t1,
                exact: None,
            }
        }
    })
}

fn intervals_for(h: f64, span: f64) -> Result<usize, BenchError> {
    let n = span / h;
    let rounded = n.round();
    if !(h > 0.0) || rounded < 1.0 || (n - rounded).abs() > 1e-9 * rounded {
        return Err(BenchError::Config(format!("step {h} does not divide the horizon {span}")));
    }
    Ok(rounded as usize)
}

fn check_ladder(hs: &[f64]) -> Result<(), BenchError> {
    if hs.len() < 4 {
        return Err(BenchError::Config(format!("need at least 4 step sizes, got {}", hs.len())));
    }
    let mut sorted = hs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted != hs || !hs.windows(2).all(|w| ((w[0] / w[1]) - 2.0).abs() < 1e-9) {
        return Err(BenchError::Config("step sizes must form a descending halving ladder".into()));
    }
    Ok(())
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn fitted_slope(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

pub fn cmd_convergence(id: ConvergenceModel, hs: &[f64], seed: u64) -> Result<ConvergenceReport, BenchError> {
    check_ladder(hs)?;
    let prob = problem(id, seed)?;
    let span = prob.t1 - prob.t0;
    let steps: Vec<usize> = hs.iter().map(|&h| intervals_for(h, span)).collect::<Result<_, _>>()?;
    let endpoint = |stepper: &dyn spdflow_core::integrators::Stepper, n: usize| -> Result<Mat, BenchError> {
        let grid = linspace(prob.t0, prob.t1, n + 1);
        Ok(integrate(stepper, prob.model.as_ref(), &prob.p0, &grid)?.last().as_mat().clone())
    };
    let reference = match &prob.exact {
        Some(m) => m.clone(),
        None => {
            let finest = *steps.iter().max().expect("non-empty ladder");
            endpoint(&Rkmk4::new(Congruence), finest * SELF_REFERENCE_FACTOR)?
        }
    };
    let scale = reference.norm().max(1.0);
    let mut rows = Vec::new();
    for id in IntegratorId::ALL {
        let stepper = id.stepper(Default::default());
        let errors: Vec<f64> = steps
            .iter()
            .map(|&n| Ok((endpoint(stepper.as_ref(), n)? - &reference).norm()))
            .collect::<Result<_, BenchError>>()?;
        let slope = if errors.iter().all(|&e| e <= EXACT_TOL * scale) {
            Slope::Exact
        } else {
            Slope::Fitted(fitted_slope(hs, &errors))
        };
        rows.push(ConvergenceRow {
            integrator: id.name().to_string(),
            errors,
            slope,
        });
    }
    Ok(ConvergenceReport { hs: hs.to_vec(), rows })
}
