//! Fixed-step integrators for covariance ODEs.
//!
//! Euclidean schemes ([`Euler`], [`Rk4`]) step in the ambient space of
//! symmetric matrices and may leave the SPD cone. [`RiemannianRk4`] maps the
//! Euclidean RK4 increment back with the affine-invariant exponential.
//! [`LieEuler`] and [`Rkmk4`] step in the Lie algebra of a group acting on
//! the cone, so every iterate is SPD by construction.

use crate::actions::{AlgebraElem, HomogeneousAction};
use crate::error::{Error, Result};
use crate::manifold::affine_exp;
use crate::matcore::{dexpinv, is_spd, Mat, SpdMat, SymMat, DEXPINV_DEFAULT_ORDER};
use crate::models::CovarianceModel;

pub trait Stepper: Send + Sync {
    fn name(&self) -> &str;

    /// Classical order of accuracy.
    fn order(&self) -> u32;

    fn step(&self, model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<SymMat>;
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("step size must be positive and finite, got {h}")))
    }
}

fn as_spd(p: &SymMat) -> Result<SpdMat> {
    SpdMat::from_sym(p.clone())
}

fn model_err(e: Error) -> Error {
    match e {
        Error::ModelEvalFailure(_) => e,
        other => Error::ModelEvalFailure(other.to_string()),
    }
}

/// `P + h F(P, t)`.
pub fn euler_step(model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<SymMat> {
    check_step(h)?;
    let f = model.tangent(p, t).map_err(model_err)?;
    Ok(p.axpy(h, &f))
}

/// The four stage slopes of classical RK4.
fn rk4_slopes(model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<[SymMat; 4]> {
    let f = |q: &SymMat, s: f64| model.tangent(q, s).map_err(model_err);
    let k1 = f(p, t)?;
    let k2 = f(&p.axpy(0.5 * h, &k1), t + 0.5 * h)?;
    let k3 = f(&p.axpy(0.5 * h, &k2), t + 0.5 * h)?;
    let k4 = f(&p.axpy(h, &k3), t + h)?;
    Ok([k1, k2, k3, k4])
}

/// Effective direction `T` of one RK4 step, `P_next = P + h T`.
pub fn rk4_direction(model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<SymMat> {
    check_step(h)?;
    let [k1, k2, k3, k4] = rk4_slopes(model, t, p, h)?;
    Ok(k1
        .scale(1.0 / 6.0)
        .axpy(1.0 / 3.0, &k2)
        .axpy(1.0 / 3.0, &k3)
        .axpy(1.0 / 6.0, &k4))
}

pub fn rk4_step(model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<SymMat> {
    let dir = rk4_direction(model, t, p, h)?;
    Ok(p.axpy(h, &dir))
}

/// Euclidean RK4 increment pulled back onto the cone with the
/// affine-invariant exponential at `P`.
pub fn riemannian_rk4_step(model: &dyn CovarianceModel, t: f64, p: &SpdMat, h: f64) -> Result<SpdMat> {
    let dir = rk4_direction(model, t, p.as_sym(), h)?;
    affine_exp(p, &dir.scale(h))
}

fn lie_pieces<'a, A: HomogeneousAction>(
    action: &'a A,
    model: &'a dyn CovarianceModel,
    p: &'a SpdMat,
) -> (
    impl Fn(&SpdMat, f64) -> Result<Mat> + 'a,
    impl Fn(&Mat) -> Result<SpdMat> + 'a,
) {
    let xi = move |q: &SpdMat, s: f64| -> Result<Mat> {
        Ok(action.xi(model, q, s).map_err(model_err)?.to_matrix())
    };
    let flow = move |k: &Mat| -> Result<SpdMat> {
        let g = action.exp(&A::Algebra::from_matrix(k)?)?;
        action.act(&g, p)
    };
    (xi, flow)
}

/// `act(exp(h ξ(P, t)), P)`: exact flow of the frozen generator.
pub fn lie_euler_step<A: HomogeneousAction>(
    action: &A,
    model: &dyn CovarianceModel,
    t: f64,
    p: &SpdMat,
    h: f64,
) -> Result<SpdMat> {
    check_step(h)?;
    let (xi, flow) = lie_pieces(action, model, p);
    flow(&(xi(p, t)? * h))
}

pub fn rkmk4_step<A: HomogeneousAction>(
    action: &A,
    model: &dyn CovarianceModel,
    t: f64,
    p: &SpdMat,
    h: f64,
) -> Result<SpdMat> {
    rkmk4_step_with_order(action, model, t, p, h, DEXPINV_DEFAULT_ORDER)
}

/// Runge-Kutta-Munthe-Kaas with the classical RK4 tableau.
///
/// The fourth stage is evaluated at `t + h`.
pub fn rkmk4_step_with_order<A: HomogeneousAction>(
    action: &A,
    model: &dyn CovarianceModel,
    t: f64,
    p: &SpdMat,
    h: f64,
    dexpinv_order: usize,
) -> Result<SpdMat> {
    check_step(h)?;
    let (xi, flow) = lie_pieces(action, model, p);

    let a1 = xi(p, t)? * h;
    let k1 = a1;

    let half_k1 = &k1 * 0.5;
    let a2 = xi(&flow(&half_k1)?, t + 0.5 * h)? * h;
    let k2 = dexpinv(&half_k1, &a2, dexpinv_order)?;

    let half_k2 = &k2 * 0.5;
    let a3 = xi(&flow(&half_k2)?, t + 0.5 * h)? * h;
    let k3 = dexpinv(&half_k2, &a3, dexpinv_order)?;

    let a4 = xi(&flow(&k3)?, t + h)? * h;
    let k4 = dexpinv(&k3, &a4, dexpinv_order)?;

    let theta = k1 / 6.0 + k2 / 3.0 + k3 / 3.0 + k4 / 6.0;
    flow(&theta)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euler;

impl Stepper for Euler {
    fn name(&self) -> &str {
        "euler"
    }

    fn order(&self) -> u32 {
        1
    }

    fn step(&self, model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<SymMat> {
        euler_step(model, t, p, h)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Rk4;

impl Stepper for Rk4 {
    fn name(&self) -> &str {
        "rk4"
    }

    fn order(&self) -> u32 {
        4
    }

    fn step(&self, model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<SymMat> {
        rk4_step(model, t, p, h)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RiemannianRk4;

impl Stepper for RiemannianRk4 {
    fn name(&self) -> &str {
        "riemannian_rk4"
    }

    fn order(&self) -> u32 {
        4
    }

    fn step(&self, model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<SymMat> {
        Ok(riemannian_rk4_step(model, t, &as_spd(p)?, h)?.into_sym())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LieEuler<A> {
    pub action: A,
}

impl<A: HomogeneousAction> LieEuler<A> {
    pub fn new(action: A) -> Self {
        LieEuler { action }
    }
}

impl<A: HomogeneousAction> Stepper for LieEuler<A> {
    fn name(&self) -> &str {
        "lie_euler"
    }

    fn order(&self) -> u32 {
        1
    }

    fn step(&self, model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<SymMat> {
        Ok(lie_euler_step(&self.action, model, t, &as_spd(p)?, h)?.into_sym())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Rkmk4<A> {
    pub action: A,
    pub dexpinv_order: usize,
}

impl<A: HomogeneousAction> Rkmk4<A> {
    pub fn new(action: A) -> Self {
        Rkmk4 {
            action,
            dexpinv_order: DEXPINV_DEFAULT_ORDER,
        }
    }
}

impl<A: HomogeneousAction> Stepper for Rkmk4<A> {
    fn name(&self) -> &str {
        "rkmk4"
    }

    fn order(&self) -> u32 {
        4
    }

    fn step(&self, model: &dyn CovarianceModel, t: f64, p: &SymMat, h: f64) -> Result<SymMat> {
        Ok(rkmk4_step_with_order(&self.action, model, t, &as_spd(p)?, h, self.dexpinv_order)?.into_sym())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDiagnostics {
    pub min_eig: f64,
    pub spd: bool,
}

impl PointDiagnostics {
    pub fn of(p: &SymMat) -> Self {
        let check = is_spd(p, 0.0);
        PointDiagnostics {
            min_eig: check.min_eig,
            spd: check.spd,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<SymMat>,
    pub diagnostics: Vec<PointDiagnostics>,
}

impl Trajectory {
    fn start(t0: f64, p0: &SpdMat, capacity: usize) -> Self {
        let mut tr = Trajectory {
            times: Vec::with_capacity(capacity),
            points: Vec::with_capacity(capacity),
            diagnostics: Vec::with_capacity(capacity),
        };
        tr.push(t0, p0.as_sym().clone());
        tr
    }

    fn push(&mut self, t: f64, p: SymMat) {
        self.diagnostics.push(PointDiagnostics::of(&p));
        self.times.push(t);
        self.points.push(p);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &SymMat {
        self.points.last().expect("trajectory holds at least the initial point")
    }

    pub fn all_spd(&self) -> bool {
        self.diagnostics.iter().all(|d| d.spd)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("time grid is empty".into()));
    }
    if !grid.iter().all(|t| t.is_finite()) || !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidInput("time grid must be finite and strictly ascending".into()));
    }
    Ok(())
}

/// Steps over consecutive grid intervals.
///
/// An iterate that leaves the SPD cone is recorded and flagged, not treated
/// as an error; Euclidean schemes keep stepping from it. Stepper errors are
/// returned with the index of the failing interval.
pub fn integrate(
    stepper: &dyn Stepper,
    model: &dyn CovarianceModel,
    p0: &SpdMat,
    grid: &[f64],
) -> Result<Trajectory> {
    match integrate_partial(stepper, model, p0, grid)? {
        (tr, None) => Ok(tr),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`integrate`], but a stepper error stops the run and is returned
/// alongside the trajectory computed so far.
pub fn integrate_partial(
    stepper: &dyn Stepper,
    model: &dyn CovarianceModel,
    p0: &SpdMat,
    grid: &[f64],
) -> Result<(Trajectory, Option<Error>)> {
    check_grid(grid)?;
    let mut tr = Trajectory::start(grid[0], p0, grid.len());
    let mut p = p0.as_sym().clone();
    for (index, w) in grid.windows(2).enumerate() {
        let (t, t_next) = (w[0], w[1]);
        match stepper.step(model, t, &p, t_next - t) {
            Ok(next) => p = next,
            Err(e) => {
                let err = Error::StepFailed {
                    index,
                    source: Box::new(e),
                };
                return Ok((tr, Some(err)));
            }
        }
        tr.push(t_next, p.clone());
    }
    Ok((tr, None))
}

pub const DEFAULT_REFINE: usize = 512;

/// Classical RK4 with every grid interval split into `refine` sub-steps,
/// sampled back on the grid. Fails if any sub-iterate leaves the cone.
pub fn reference_trajectory(
    model: &dyn CovarianceModel,
    p0: &SpdMat,
    grid: &[f64],
    refine: usize,
) -> Result<Trajectory> {
    check_grid(grid)?;
    if refine < 2 {
        return Err(Error::InvalidInput(format!("refine must be >= 2, got {refine}")));
    }
    let mut tr = Trajectory::start(grid[0], p0, grid.len());
    let mut p = p0.as_sym().clone();
    for (interval, w) in grid.windows(2).enumerate() {
        let h = (w[1] - w[0]) / refine as f64;
        for sub_step in 0..refine {
            let t = w[0] + h * sub_step as f64;
            p = rk4_step(model, t, &p, h).map_err(|e| Error::StepFailed {
                index: interval,
                source: Box::new(e),
            })?;
            let check = is_spd(&p, 0.0);
            if !check.spd {
                return Err(Error::ReferenceLeftManifold {
                    interval,
                    sub_step,
                    min_eig: check.min_eig,
                });
            }
        }
        tr.push(w[1], p.clone());
    }
    Ok(tr)
}
