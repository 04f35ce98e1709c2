//! Experiment configuration: JSON files and builtin presets.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use spdflow_core::actions::{Congruence, Siegel};
use spdflow_core::integrators::{Euler, LieEuler, RiemannianRk4, Rk4, Rkmk4, Stepper, DEFAULT_REFINE};
use spdflow_core::matcore::{Mat, SpdMat, SymMat, Tolerances, PD_TOL, SYM_TOL};
use spdflow_core::models::{
    gbm_model_at, linear_model, linspace, make_case_study_with, ou_model, riccati_model,
    sinusoidal_model, Case, CovarianceModel, Pairing,
};
use spdflow_core::random::{random_mat, random_spd, rng};

use crate::BenchError;

/// Row-major dense matrix as nested JSON arrays.
pub type MatrixRows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Linear { a: MatrixRows },
    Sinusoidal { a: MatrixRows, c: MatrixRows },
    /// `A + sin(t) C` with seeded random `A`, `C` of entries in `[-scale, scale]`.
    SinusoidalRandom { n: usize, scale: f64 },
    Ou { a: MatrixRows, b: MatrixRows },
    Gbm { a: MatrixRows, b: MatrixRows },
    Riccati { a: MatrixRows, b: MatrixRows, q: MatrixRows, r: MatrixRows },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorId {
    Euler,
    Rk4,
    RiemannianRk4,
    LieEuler,
    Rkmk4,
}

impl IntegratorId {
    pub const ALL: [IntegratorId; 5] = [
        IntegratorId::Euler,
        IntegratorId::Rk4,
        IntegratorId::RiemannianRk4,
        IntegratorId::LieEuler,
        IntegratorId::Rkmk4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntegratorId::Euler => "euler",
            IntegratorId::Rk4 => "rk4",
            IntegratorId::RiemannianRk4 => "riemannian_rk4",
            IntegratorId::LieEuler => "lie_euler",
            IntegratorId::Rkmk4 => "rkmk4",
        }
    }

    pub fn stepper(self, action: ActionId) -> Box<dyn Stepper> {
        match (self, action) {
            (IntegratorId::Euler, _) => Box::new(Euler),
            (IntegratorId::Rk4, _) => Box::new(Rk4),
            (IntegratorId::RiemannianRk4, _) => Box::new(RiemannianRk4),
            (IntegratorId::LieEuler, ActionId::Congruence) => Box::new(LieEuler::new(Congruence)),
            (IntegratorId::LieEuler, ActionId::Siegel) => Box::new(LieEuler::new(Siegel)),
            (IntegratorId::Rkmk4, ActionId::Congruence) => Box::new(Rkmk4::new(Congruence)),
            (IntegratorId::Rkmk4, ActionId::Siegel) => Box::new(Rkmk4::new(Siegel)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionId {
    #[default]
    Congruence,
    Siegel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t0: f64,
    pub t1: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_sym_tol")]
    pub sym_tol: f64,
    #[serde(default = "default_pd_tol")]
    pub pd_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            sym_tol: SYM_TOL,
            pd_tol: PD_TOL,
        }
    }
}

fn default_sym_tol() -> f64 {
    SYM_TOL
}

fn default_pd_tol() -> f64 {
    PD_TOL
}

fn default_refine() -> usize {
    DEFAULT_REFINE
}

fn default_integrators() -> Vec<IntegratorId> {
    IntegratorId::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Initial covariance; drawn from `seed` when absent.
    #[serde(default)]
    pub p0: Option<MatrixRows>,
    #[serde(default = "default_integrators")]
    pub integrators: Vec<IntegratorId>,
    pub grid: GridConfig,
    #[serde(default = "default_refine")]
    pub refine: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    /// Initial mean for GBM models; zero when absent.
    #[serde(default)]
    pub m0: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub action: ActionId,
    #[serde(default)]
    pub parallel: bool,
}

fn rows(m: &Mat) -> MatrixRows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn to_mat(rows: &MatrixRows, what: &str) -> Result<Mat, BenchError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(BenchError::Config(format!("{what} must be a non-empty square matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BenchError::Config(format!("{what} has non-finite entries")));
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

/// Rectangular matrix, for the Riccati input matrix `B` (`n × m`).
fn to_rect(rows: &MatrixRows, what: &str) -> Result<Mat, BenchError> {
    let m = rows.first().map_or(0, Vec::len);
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(BenchError::Config(format!("{what} must be a non-empty rectangular matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BenchError::Config(format!("{what} has non-finite entries")));
    }
    Ok(Mat::from_fn(rows.len(), m, |i, j| rows[i][j]))
}

fn config_err(what: &str) -> impl Fn(spdflow_core::Error) -> BenchError + '_ {
    move |e| BenchError::Config(format!("{what}: {e}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Builtin `case1` / `case2`.
    pub fn preset(name: &str) -> Result<Self, BenchError> {
        let case = match name {
            "case1" => Case::One,
            "case2" => Case::Two,
            other => return Err(BenchError::Config(format!("unknown preset '{other}'"))),
        };
        Ok(Self::case_study(case, Pairing::Ascending))
    }

    pub fn case_study(case: Case, pairing: Pairing) -> Self {
        let params = make_case_study_with(case, pairing);
        ExperimentConfig {
            model: ModelConfig::Gbm {
                a: rows(&params.a),
                b: rows(&params.b),
            },
            p0: Some(rows(params.p0.as_mat())),
            integrators: default_integrators(),
            grid: GridConfig {
                t0: params.t0,
                t1: params.t1,
                points: params.points,
            },
            refine: DEFAULT_REFINE,
            out: None,
            tolerances: ToleranceConfig::default(),
            m0: Some(params.m0.iter().copied().collect()),
            seed: 0,
            action: ActionId::Congruence,
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let g = &self.grid;
        if g.points < 2 {
            return Err(BenchError::Config(format!("grid.points must be >= 2, got {}", g.points)));
        }
        if !(g.t0.is_finite() && g.t1.is_finite() && g.t1 > g.t0) {
            return Err(BenchError::Config("grid requires finite t1 > t0".into()));
        }
        if self.refine < 2 {
            return Err(BenchError::Config(format!("refine must be >= 2, got {}", self.refine)));
        }
        if self.integrators.is_empty() {
            return Err(BenchError::Config("integrators list is empty".into()));
        }
        if !(self.tolerances.sym_tol >= 0.0 && self.tolerances.pd_tol >= 0.0) {
            return Err(BenchError::Config("tolerances must be >= 0".into()));
        }
        if self.m0.is_some() && !matches!(self.model, ModelConfig::Gbm { .. }) {
            return Err(BenchError::Config("m0 applies only to gbm models".into()));
        }
        let model = self.build_model()?;
        self.initial_covariance(model.dim())?;
        Ok(())
    }

    pub fn grid_points(&self) -> Vec<f64> {
        linspace(self.grid.t0, self.grid.t1, self.grid.points)
    }

    pub fn step(&self) -> f64 {
        (self.grid.t1 - self.grid.t0) / (self.grid.points - 1) as f64
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            sym_tol: self.tolerances.sym_tol,
            pd_tol: self.tolerances.pd_tol,
        }
    }

    pub fn build_model(&self) -> Result<Box<dyn CovarianceModel>, BenchError> {
        Ok(match &self.model {
            ModelConfig::Linear { a } => {
                Box::new(linear_model(to_mat(a, "a")?).map_err(config_err("linear model"))?)
            }
            ModelConfig::Sinusoidal { a, c } => Box::new(
                sinusoidal_model(to_mat(a, "a")?, to_mat(c, "c")?).map_err(config_err("sinusoidal model"))?,
            ),
            ModelConfig::SinusoidalRandom { n, scale } => {
                if *n == 0 || !(scale.is_finite() && *scale > 0.0) {
                    return Err(BenchError::Config("sinusoidal_random needs n >= 1 and scale > 0".into()));
                }
                let mut r = rng(self.seed);
                let a = random_mat(&mut r, *n, *scale);
                let c = random_mat(&mut r, *n, *scale);
                Box::new(sinusoidal_model(a, c).map_err(config_err("sinusoidal model"))?)
            }
            ModelConfig::Ou { a, b } => {
                Box::new(ou_model(to_mat(a, "a")?, to_mat(b, "b")?).map_err(config_err("ou model"))?)
            }
            ModelConfig::Gbm { a, b } => {
                let a = to_mat(a, "a")?;
                let n = a.nrows();
                let m0 = match &self.m0 {
                    Some(v) if v.len() == n => DVector::from_column_slice(v),
                    Some(v) => {
                        return Err(BenchError::Config(format!("m0 has length {}, expected {n}", v.len())))
                    }
                    None => DVector::zeros(n),
                };
                Box::new(
                    gbm_model_at(a, to_mat(b, "b")?, m0, self.grid.t0).map_err(config_err("gbm model"))?,
                )
            }
            ModelConfig::Riccati { a, b, q, r } => {
                let q = SymMat::new_with_tol(to_mat(q, "q")?, self.tolerances.sym_tol)
                    .map_err(config_err("q"))?;
                let r = SpdMat::new_with_tol(to_mat(r, "r")?, &self.tolerances()).map_err(config_err("r"))?;
                Box::new(riccati_model(to_mat(a, "a")?, to_rect(b, "b")?, q, r).map_err(config_err("riccati model"))?)
            }
        })
    }

    pub fn initial_covariance(&self, n: usize) -> Result<SpdMat, BenchError> {
        let p0 = match &self.p0 {
            Some(rows) => SpdMat::new_with_tol(to_mat(rows, "p0")?, &self.tolerances()).map_err(config_err("p0"))?,
            None => random_spd(&mut rng(self.seed.wrapping_add(1)), n, 0.5, 2.0),
        };
        if p0.dim() != n {
            return Err(BenchError::Config(format!("p0 is {0}x{0}, model is {n}x{n}", p0.dim())));
        }
        Ok(p0)
    }
}
