//! Concrete ODEs on the SPD cone written as `dP/dt = ξ(P,t) P + P ξ(P,t)ᵀ`.
//!
//! Each model provides the generator `ξ` (for the Lie group integrators) and
//! the right-hand side in its usual closed form (for the Euclidean schemes
//! and as the consistency target). The two must agree:
//! `tangent(P, t) = ξ(P,t) P + P ξ(P,t)ᵀ`.

use nalgebra::DVector;

use crate::actions::SpAlgebraElem;
use crate::error::{Error, Result};
use crate::matcore::{expm, sym_eig, Mat, SpdMat, SymMat};

pub trait CovarianceModel: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    /// Generator in `gl(n)`.
    fn xi(&self, p: &SpdMat, t: f64) -> Result<Mat>;

    /// Right-hand side of the covariance ODE. Defined for any symmetric
    /// `P`, so Euclidean schemes can keep stepping after leaving the cone.
    fn tangent(&self, p: &SymMat, t: f64) -> Result<SymMat>;

    /// Coefficients `(A, B, C)` writing the ODE as
    /// `dP/dt = AP + PAᵀ + B − PCP`. Any model can use `(ξ, 0, 0)`.
    fn siegel_coeffs(&self, p: &SpdMat, t: f64) -> Result<SpAlgebraElem> {
        Ok(SpAlgebraElem::from_gl(&self.xi(p, t)?))
    }

    /// Auxiliary mean vector, for models that carry one.
    fn mean(&self, _t: f64) -> Option<DVector<f64>> {
        None
    }
}

fn check_square(m: &Mat, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::dims(
            format!("{what} {n}x{n}"),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn check_state(p: &Mat, n: usize) -> Result<()> {
    check_square(p, n, "state")
}

/// `X P⁻¹` for symmetric `X`, via a Cholesky solve.
fn right_solve(x: &Mat, p: &SpdMat) -> Result<Mat> {
    p.solve(&x.transpose())
        .map(|y| y.transpose())
        .map_err(|e| Error::ModelEvalFailure(format!("P not invertible: {e}")))
}

fn congruence_rhs(xi: &Mat, p: &Mat) -> Result<SymMat> {
    let xp = xi * p;
    SymMat::from_symmetrized(&(&xp + xp.transpose()))
}

/// `dP/dt = AP + PAᵀ`, constant generator `ξ ≡ A`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    a: Mat,
}

pub fn linear_model(a: Mat) -> Result<LinearModel> {
    check_square(&a, a.nrows(), "A")?;
    Ok(LinearModel { a })
}

impl CovarianceModel for LinearModel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn name(&self) -> &str {
        "linear"
    }

    fn xi(&self, p: &SpdMat, _t: f64) -> Result<Mat> {
        check_state(p, self.dim())?;
        Ok(self.a.clone())
    }

    fn tangent(&self, p: &SymMat, _t: f64) -> Result<SymMat> {
        check_state(p, self.dim())?;
        congruence_rhs(&self.a, p)
    }
}

/// Time-varying linear generator `ξ(t) = A + sin(t) C`.
///
/// Used for order studies: when `[A, C] ≠ 0` the frozen-coefficient flow
/// is no longer exact.
#[derive(Debug, Clone)]
pub struct SinusoidalModel {
    a: Mat,
    c: Mat,
}

pub fn sinusoidal_model(a: Mat, c: Mat) -> Result<SinusoidalModel> {
    check_square(&a, a.nrows(), "A")?;
    check_square(&c, a.nrows(), "C")?;
    Ok(SinusoidalModel { a, c })
}

impl SinusoidalModel {
    fn generator(&self, t: f64) -> Mat {
        &self.a + &self.c * t.sin()
    }
}

impl CovarianceModel for SinusoidalModel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn name(&self) -> &str {
        "sinusoidal"
    }

    fn xi(&self, p: &SpdMat, t: f64) -> Result<Mat> {
        check_state(p, self.dim())?;
        Ok(self.generator(t))
    }

    fn tangent(&self, p: &SymMat, t: f64) -> Result<SymMat> {
        check_state(p, self.dim())?;
        congruence_rhs(&self.generator(t), p)
    }
}

/// Covariance of the Ornstein-Uhlenbeck process `dX = AX dt + B dW`:
/// `dP/dt = AP + PAᵀ + BBᵀ`, with `ξ = A + ½ BBᵀ P⁻¹`.
#[derive(Debug, Clone)]
pub struct OuModel {
    a: Mat,
    bbt: SymMat,
}

pub fn ou_model(a: Mat, b: Mat) -> Result<OuModel> {
    let n = a.nrows();
    check_square(&a, n, "A")?;
    if b.nrows() != n {
        return Err(Error::dims(format!("B with {n} rows"), format!("{} rows", b.nrows())));
    }
    let bbt = SymMat::from_symmetrized(&(&b * b.transpose()))?;
    Ok(OuModel { a, bbt })
}

impl CovarianceModel for OuModel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn name(&self) -> &str {
        "ou"
    }

    fn xi(&self, p: &SpdMat, _t: f64) -> Result<Mat> {
        check_state(p, self.dim())?;
        Ok(&self.a + right_solve(&self.bbt, p)? * 0.5)
    }

    fn tangent(&self, p: &SymMat, _t: f64) -> Result<SymMat> {
        check_state(p, self.dim())?;
        let ap = &self.a * p.as_mat();
        SymMat::from_symmetrized(&(&ap + ap.transpose() + self.bbt.as_mat()))
    }

    fn siegel_coeffs(&self, p: &SpdMat, _t: f64) -> Result<SpAlgebraElem> {
        check_state(p, self.dim())?;
        SpAlgebraElem::new(self.a.clone(), self.bbt.clone(), SymMat::zeros(self.dim()))
    }
}

/// Multivariate geometric Brownian motion `dX = (A + ½B²) X dt + B X dW`
/// with a scalar Brownian driver.
///
/// With `θ = A + ½B²` the mean solves `dm/dt = θ m` (integrated exactly)
/// and the covariance solves `dP/dt = θP + Pθᵀ + B(P + mmᵀ)Bᵀ`, generated
/// by `ξ = θ + ½ B(P + mmᵀ)Bᵀ P⁻¹`.
#[derive(Debug, Clone)]
pub struct GbmModel {
    a: Mat,
    b: Mat,
    theta: Mat,
    m0: DVector<f64>,
    t0: f64,
}

pub fn gbm_model(a: Mat, b: Mat, m0: DVector<f64>) -> Result<GbmModel> {
    gbm_model_at(a, b, m0, 0.0)
}

/// GBM model whose mean equals `m0` at time `t0`.
pub fn gbm_model_at(a: Mat, b: Mat, m0: DVector<f64>, t0: f64) -> Result<GbmModel> {
    let n = a.nrows();
    check_square(&a, n, "A")?;
    check_square(&b, n, "B")?;
    if m0.len() != n {
        return Err(Error::dims(format!("m0 of length {n}"), format!("length {}", m0.len())));
    }
    let theta = &a + &b * &b * 0.5;
    Ok(GbmModel { a, b, theta, m0, t0 })
}

impl GbmModel {
    pub fn theta(&self) -> &Mat {
        &self.theta
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    fn mean_at(&self, t: f64) -> Result<DVector<f64>> {
        if self.m0.iter().all(|&v| v == 0.0) {
            return Ok(self.m0.clone());
        }
        Ok(expm(&(&self.theta * (t - self.t0)))? * &self.m0)
    }

    /// `B (P + mmᵀ) Bᵀ`.
    fn diffusion(&self, p: &Mat, t: f64) -> Result<Mat> {
        let m = self.mean_at(t)?;
        let second_moment = p + &m * m.transpose();
        Ok(&self.b * second_moment * self.b.transpose())
    }
}

impl CovarianceModel for GbmModel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn name(&self) -> &str {
        "gbm"
    }

    fn xi(&self, p: &SpdMat, t: f64) -> Result<Mat> {
        check_state(p, self.dim())?;
        let d = crate::matcore::symmetrize(&self.diffusion(p, t)?);
        Ok(&self.theta + right_solve(&d, p)? * 0.5)
    }

    fn tangent(&self, p: &SymMat, t: f64) -> Result<SymMat> {
        check_state(p, self.dim())?;
        let tp = &self.theta * p.as_mat();
        SymMat::from_symmetrized(&(&tp + tp.transpose() + self.diffusion(p, t)?))
    }

    fn mean(&self, t: f64) -> Option<DVector<f64>> {
        self.mean_at(t).ok()
    }
}

/// Riccati equation of finite-horizon LQR, in the sign convention
/// `dP/dt = −(AP + PAᵀ − P B R⁻¹ Bᵀ P + Q)`.
///
/// `ξ = −A + ½ P G − ½ Q P⁻¹` with `G = B R⁻¹ Bᵀ`; in the fractional-linear
/// form the coefficients are `(−A, −Q, −G)`.
#[derive(Debug, Clone)]
pub struct RiccatiModel {
    a: Mat,
    q: SymMat,
    g: SymMat,
}

pub fn riccati_model(a: Mat, b: Mat, q: SymMat, r: SpdMat) -> Result<RiccatiModel> {
    let n = a.nrows();
    check_square(&a, n, "A")?;
    check_square(&q, n, "Q")?;
    if b.nrows() != n || b.ncols() != r.dim() {
        return Err(Error::dims(
            format!("B {}x{}", n, r.dim()),
            format!("{}x{}", b.nrows(), b.ncols()),
        ));
    }
    let r_inv_bt = r.solve(&b.transpose())?;
    let g = SymMat::from_symmetrized(&(&b * r_inv_bt))?;
    Ok(RiccatiModel { a, q, g })
}

impl RiccatiModel {
    /// `B R⁻¹ Bᵀ`.
    pub fn gain(&self) -> &SymMat {
        &self.g
    }
}

impl CovarianceModel for RiccatiModel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn name(&self) -> &str {
        "riccati"
    }

    fn xi(&self, p: &SpdMat, _t: f64) -> Result<Mat> {
        check_state(p, self.dim())?;
        let pg = p.as_mat() * self.g.as_mat();
        Ok(-&self.a + pg * 0.5 - right_solve(&self.q, p)? * 0.5)
    }

    fn tangent(&self, p: &SymMat, _t: f64) -> Result<SymMat> {
        check_state(p, self.dim())?;
        let ap = &self.a * p.as_mat();
        let pgp = p.as_mat() * self.g.as_mat() * p.as_mat();
        SymMat::from_symmetrized(&(-(&ap + ap.transpose() - pgp + self.q.as_mat())))
    }

    fn siegel_coeffs(&self, p: &SpdMat, _t: f64) -> Result<SpAlgebraElem> {
        check_state(p, self.dim())?;
        SpAlgebraElem::new(-&self.a, self.q.scale(-1.0), self.g.scale(-1.0))
    }
}

// ---------------------------------------------------------------------------
// Case study: two-dimensional GBM

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    One,
    Two,
}

/// How the replacement eigenvalues are matched to the eigenvectors of `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// First replacement eigenvalue goes with the eigenvector of the
    /// smallest eigenvalue of `B`.
    #[default]
    Ascending,
    Swapped,
}

#[derive(Debug, Clone)]
pub struct CaseStudyParams {
    pub case: Case,
    pub a: Mat,
    pub b: Mat,
    pub p0: SpdMat,
    pub m0: DVector<f64>,
    pub t0: f64,
    pub t1: f64,
    pub points: usize,
}

pub const CASE_B: [f64; 4] = [-0.4, 0.1, 0.1, -0.2];
pub const CASE_P0: [f64; 4] = [0.3383, -0.0716, -0.0716, 0.0743];
pub const CASE_ONE_EIGS: [f64; 2] = [-10.0, -2.0];
pub const CASE_TWO_EIGS: [f64; 2] = [-4.0, -8.0];

/// Eigenvectors of a symmetric matrix as columns ordered by ascending
/// eigenvalue, each signed so its largest-magnitude entry is positive.
pub fn canonical_eigenvectors(s: &SymMat) -> Result<(DVector<f64>, Mat)> {
    let eig = sym_eig(s)?;
    let mut q = eig.vectors;
    for j in 0..q.ncols() {
        let col = q.column(j);
        let pivot = col.iter().copied().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok((eig.values, q))
}

pub fn make_case_study(case: Case) -> CaseStudyParams {
    make_case_study_with(case, Pairing::Ascending)
}

pub fn make_case_study_with(case: Case, pairing: Pairing) -> CaseStudyParams {
    let b = Mat::from_row_slice(2, 2, &CASE_B);
    let (_, o) = canonical_eigenvectors(&SymMat::new(b.clone()).expect("symmetric B"))
        .expect("2x2 symmetric eigenproblem");
    let mut eigs = match case {
        Case::One => CASE_ONE_EIGS,
        Case::Two => CASE_TWO_EIGS,
    };
    if pairing == Pairing::Swapped {
        eigs.swap(0, 1);
    }
    let d = Mat::from_diagonal(&DVector::from_column_slice(&eigs));
    let a = crate::matcore::symmetrize(&(&o * d * o.transpose()));
    let (t1, points) = match case {
        Case::One => (2.0, 30),
        Case::Two => (1.5, 11),
    };
    CaseStudyParams {
        case,
        a,
        b,
        p0: SpdMat::new(Mat::from_row_slice(2, 2, &CASE_P0)).expect("SPD initial covariance"),
        m0: DVector::zeros(2),
        t0: 0.0,
        t1,
        points,
    }
}

impl CaseStudyParams {
    pub fn model(&self) -> GbmModel {
        gbm_model_at(self.a.clone(), self.b.clone(), self.m0.clone(), self.t0)
            .expect("case study dimensions are consistent")
    }

    pub fn grid(&self) -> Vec<f64> {
        linspace(self.t0, self.t1, self.points)
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / (self.points - 1) as f64
    }
}

/// `points` evenly spaced values from `t0` to `t1` inclusive.
pub fn linspace(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![t0],
        _ => {
            let h = (t1 - t0) / (points - 1) as f64;
            (0..points)
                .map(|i| if i == points - 1 { t1 } else { t0 + h * i as f64 })
                .collect()
        }
    }
}
