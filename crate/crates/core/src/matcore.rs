//! Dense real matrix kernels.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. Symmetric and SPD
//! matrices are carried in the [`SymMat`] / [`SpdMat`] newtypes, which are
//! validated on construction and always stored exactly symmetric.

use std::ops::Deref;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Default relative symmetry tolerance.
pub const SYM_TOL: f64 = 1e-10;

/// Default positive-definiteness floor, scaled by `max(1, trace/n)`.
///
/// Zero means "Cholesky succeeds with strictly positive pivots". Covariance
/// flows decaying towards zero legitimately reach condition numbers around
/// 1e13, so a nonzero absolute floor would reject valid iterates.
pub const PD_TOL: f64 = 0.0;

const EIG_MAX_ITER: usize = 10_000;

const EXPM_PRESCALE_NORM: f64 = 64.0;

/// Tolerances used when validating symmetric and SPD matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub sym_tol: f64,
    pub pd_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sym_tol: SYM_TOL,
            pd_tol: PD_TOL,
        }
    }
}

pub fn frobenius(m: &Mat) -> f64 {
    m.norm()
}

/// `(M + Mᵀ) / 2`, exactly symmetric.
pub fn symmetrize(m: &Mat) -> Mat {
    let n = m.nrows();
    let mut out = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn ensure_square(m: &Mat) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::dims(
            "non-empty square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m.nrows())
}

fn ensure_finite(m: &Mat, context: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            context,
            norm: m.norm(),
        })
    }
}

fn ensure_same_dim(a: &Mat, b: &Mat) -> Result<usize> {
    let n = ensure_square(a)?;
    ensure_square(b)?;
    if a.shape() != b.shape() {
        return Err(Error::dims(
            format!("{}x{}", a.nrows(), a.ncols()),
            format!("{}x{}", b.nrows(), b.ncols()),
        ));
    }
    Ok(n)
}

fn max_asymmetry(m: &Mat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat(Mat);

impl SymMat {
    pub fn new(m: Mat) -> Result<Self> {
        Self::new_with_tol(m, SYM_TOL)
    }

    pub fn new_with_tol(m: Mat, sym_tol: f64) -> Result<Self> {
        ensure_square(&m)?;
        ensure_finite(&m, "symmetric matrix")?;
        let asymmetry = max_asymmetry(&m);
        if asymmetry > sym_tol * m.norm().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(SymMat(symmetrize(&m)))
    }

    /// Symmetric part of an arbitrary square matrix.
    pub fn from_symmetrized(m: &Mat) -> Result<Self> {
        ensure_square(m)?;
        ensure_finite(m, "symmetric matrix")?;
        Ok(SymMat(symmetrize(m)))
    }

    pub fn zeros(n: usize) -> Self {
        SymMat(Mat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMat(Mat::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMat(Mat::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn scale(&self, s: f64) -> SymMat {
        SymMat(&self.0 * s)
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        SymMat(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        SymMat(&self.0 - &other.0)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SymMat) -> SymMat {
        SymMat(&self.0 + &other.0 * s)
    }
}

impl Deref for SymMat {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0
    }
}

/// Symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMat(SymMat);

impl SpdMat {
    pub fn new(m: Mat) -> Result<Self> {
        Self::from_sym(SymMat::new(m)?)
    }

    pub fn new_with_tol(m: Mat, tol: &Tolerances) -> Result<Self> {
        Self::from_sym_with_tol(SymMat::new_with_tol(m, tol.sym_tol)?, tol.pd_tol)
    }

    pub fn from_sym(s: SymMat) -> Result<Self> {
        Self::from_sym_with_tol(s, PD_TOL)
    }

    /// Checks that a Cholesky factorization exists with every pivot, and
    /// every eigenvalue, above `pd_tol * max(1, trace/n)`.
    pub fn from_sym_with_tol(s: SymMat, pd_tol: f64) -> Result<Self> {
        let floor = pd_floor(&s, pd_tol);
        match Cholesky::new(s.0.clone()) {
            Some(chol) => {
                let l = chol.l_dirty();
                let min_pivot = (0..s.dim())
                    .map(|i| l[(i, i)] * l[(i, i)])
                    .fold(f64::INFINITY, f64::min);
                if !(min_pivot > floor && min_pivot.is_finite()) {
                    return Err(Error::NotSpd { min_eig: min_pivot });
                }
                // Near 1/eps conditioning the two tests can disagree; an
                // SpdMat must always pass is_spd.
                let check = is_spd(&s, floor);
                if check.spd {
                    Ok(SpdMat(s))
                } else {
                    Err(Error::NotSpd { min_eig: check.min_eig })
                }
            }
            None => {
                let min_eig = is_spd(&s, 0.0).min_eig;
                Err(Error::NotSpd { min_eig })
            }
        }
    }

    pub fn identity(n: usize) -> Self {
        SpdMat(SymMat::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::from_sym(SymMat::from_diagonal(d))
    }

    pub fn as_sym(&self) -> &SymMat {
        &self.0
    }

    pub fn as_mat(&self) -> &Mat {
        self.0.as_mat()
    }

    pub fn into_sym(self) -> SymMat {
        self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0 .0
    }

    /// Lower Cholesky factor.
    pub fn cholesky_factor(&self) -> Result<Mat> {
        Cholesky::new(self.0 .0.clone())
            .map(|c| c.unpack())
            .ok_or(Error::NotSpd {
                min_eig: f64::NAN,
            })
    }

    /// Solves `P X = B`.
    pub fn solve(&self, b: &Mat) -> Result<Mat> {
        if b.nrows() != self.dim() {
            return Err(Error::dims(
                format!("{} rows", self.dim()),
                format!("{} rows", b.nrows()),
            ));
        }
        let chol = Cholesky::new(self.0 .0.clone()).ok_or(Error::Singular("SPD solve"))?;
        let x = chol.solve(b);
        ensure_finite(&x, "SPD solve")?;
        Ok(x)
    }
}

impl Deref for SpdMat {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0 .0
    }
}

impl From<SpdMat> for SymMat {
    fn from(p: SpdMat) -> SymMat {
        p.0
    }
}

fn pd_floor(s: &SymMat, pd_tol: f64) -> f64 {
    let n = s.dim() as f64;
    pd_tol * (s.trace() / n).max(1.0)
}

/// Eigendecomposition `S = Q diag(values) Qᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenSym {
    pub values: DVector<f64>,
    pub vectors: Mat,
}

impl EigenSym {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn reconstruct(&self) -> Mat {
        self.map(|x| x)
    }

    /// Spectral calculus: `Q diag(f(λ)) Qᵀ`, re-symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        let q = &self.vectors;
        let mut scaled = q.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fj = f(lambda);
            scaled.column_mut(j).scale_mut(fj);
        }
        symmetrize(&(scaled * q.transpose()))
    }
}

pub fn sym_eig(s: &SymMat) -> Result<EigenSym> {
    ensure_finite(s, "sym_eig input")?;
    let eig = SymmetricEigen::try_new(s.as_mat().clone(), f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure {
            iterations: EIG_MAX_ITER,
        })?;
    let n = s.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenSym { values, vectors })
}

/// Matrix exponential.
///
/// Exactly symmetric input goes through spectral calculus; everything else
/// through scaling and squaring with a Padé approximant.
pub fn expm(m: &Mat) -> Result<Mat> {
    ensure_square(m)?;
    ensure_finite(m, "expm input")?;
    let overflow = || Error::NonFinite {
        context: "expm overflow",
        norm: m.norm(),
    };
    if max_asymmetry(m) == 0.0 {
        let eig = sym_eig(&SymMat(m.clone()))?;
        let out = eig.map(f64::exp);
        return if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(overflow())
        };
    }
    // nalgebra's backward-error estimate overflows for large non-normal
    // inputs and then never finishes squaring, so scale down first.
    // Bounds every induced norm and cannot overflow for finite entries.
    let norm = m.amax() * m.nrows() as f64;
    let squarings = if norm > EXPM_PRESCALE_NORM {
        (norm / EXPM_PRESCALE_NORM).log2().ceil() as i32
    } else {
        0
    };
    let mut out = (m * 2f64.powi(-squarings)).exp();
    for _ in 0..squarings {
        if !out.iter().all(|v| v.is_finite()) {
            break;
        }
        out = &out * &out;
    }
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(overflow())
    }
}

/// Exponential of a symmetric matrix, always SPD.
pub fn expm_sym(s: &SymMat) -> Result<SpdMat> {
    let eig = sym_eig(s)?;
    if eig.max() > 700.0 {
        return Err(Error::NonFinite {
            context: "expm overflow",
            norm: s.norm(),
        });
    }
    SpdMat::from_sym(SymMat(eig.map(f64::exp)))
}

fn spd_eig(p: &SpdMat) -> Result<EigenSym> {
    let eig = sym_eig(p.as_sym())?;
    if eig.min() <= pd_floor(p.as_sym(), PD_TOL) {
        return Err(Error::NotSpd { min_eig: eig.min() });
    }
    Ok(eig)
}

pub fn sqrtm_spd(p: &SpdMat) -> Result<SpdMat> {
    let eig = spd_eig(p)?;
    SpdMat::from_sym(SymMat(eig.map(f64::sqrt)))
}

pub fn invsqrtm_spd(p: &SpdMat) -> Result<SpdMat> {
    let eig = spd_eig(p)?;
    SpdMat::from_sym(SymMat(eig.map(|x| 1.0 / x.sqrt())))
}

pub fn logm_spd(p: &SpdMat) -> Result<SymMat> {
    let eig = spd_eig(p)?;
    Ok(SymMat(eig.map(f64::ln)))
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &Mat, b: &Mat) -> Result<Mat> {
    ensure_same_dim(a, b)?;
    Ok(a * b - b * a)
}

fn commutator_unchecked(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub const DEXPINV_DEFAULT_ORDER: usize = 4;

/// Truncated inverse of the derivative of the matrix exponential,
/// `A − ½[θ,A] + 1/12 [θ,[θ,A]] − 1/720 [θ,[θ,[θ,[θ,A]]]]`.
///
/// This is the left-trivialized series: if `Y' = A(t) Y` and `Y = exp(θ) Y₀`
/// then `θ' = dexpinv(θ, A)`. `order` selects the highest power of `ad_θ`
/// kept (1, 2 or 4; the cubic Bernoulli coefficient is zero).
pub fn dexpinv(theta: &Mat, a: &Mat, order: usize) -> Result<Mat> {
    ensure_same_dim(theta, a)?;
    if !matches!(order, 1 | 2 | 4) {
        return Err(Error::UnsupportedOrder(order));
    }
    let c1 = commutator_unchecked(theta, a);
    let mut out = a - &c1 * 0.5;
    if order >= 2 {
        let c2 = commutator_unchecked(theta, &c1);
        out += &c2 * (1.0 / 12.0);
        if order >= 4 {
            let c4 = commutator_unchecked(theta, &commutator_unchecked(theta, &c2));
            out -= c4 * (1.0 / 720.0);
        }
    }
    Ok(out)
}

/// Result of a manifold membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdCheck {
    pub spd: bool,
    pub min_eig: f64,
}

/// True iff the minimum eigenvalue exceeds `tol`. Never fails: a matrix the
/// eigensolver cannot handle is reported as not SPD with a NaN minimum.
pub fn is_spd(s: &SymMat, tol: f64) -> SpdCheck {
    match sym_eig(s) {
        Ok(eig) => SpdCheck {
            spd: eig.min() > tol,
            min_eig: eig.min(),
        },
        Err(_) => SpdCheck {
            spd: false,
            min_eig: f64::NAN,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_mat, random_spd, random_sym, rng};

    fn close(a: &Mat, b: &Mat, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn eig_of_diagonal_is_sorted() {
        let s = SymMat::from_diagonal(&[3.0, 1.0, 2.0]);
        let eig = sym_eig(&s).unwrap();
        assert_eq!(eig.values.as_slice(), &[1.0, 2.0, 3.0]);
        // columns are a permutation of the identity
        for j in 0..3 {
            let col = eig.vectors.column(j);
            assert!((col.norm() - 1.0).abs() < 1e-14);
            assert_eq!(col.iter().filter(|v| v.abs() > 0.5).count(), 1);
        }
        assert!(close(&eig.reconstruct(), &s, 1e-14));
    }

    #[test]
    fn eig_of_identity() {
        let eig = sym_eig(&SymMat::identity(4)).unwrap();
        assert!(eig.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let q = &eig.vectors;
        assert!(close(&(q.transpose() * q), &Mat::identity(4, 4), 1e-12));
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut r = rng(11);
        for n in 1..=6 {
            let s = random_sym(&mut r, n, 2.0);
            let eig = sym_eig(&s).unwrap();
            let q = &eig.vectors;
            assert!((q.transpose() * q - Mat::identity(n, n)).norm() <= 1e-9 * n as f64);
            assert!((eig.reconstruct() - s.as_mat()).norm() <= 1e-9 * s.norm().max(1e-300));
            for w in eig.values.as_slice().windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn eig_rejects_non_finite() {
        let mut m = Mat::identity(2, 2);
        m[(0, 0)] = f64::NAN;
        assert!(matches!(
            SymMat::new(m.clone()),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn expm_zero_and_diagonal() {
        assert_eq!(expm(&Mat::zeros(3, 3)).unwrap(), Mat::identity(3, 3));
        let d = Mat::from_diagonal(&DVector::from_vec(vec![0.3, -1.2]));
        let e = expm(&d).unwrap();
        assert!((e[(0, 0)] - 0.3_f64.exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - (-1.2_f64).exp()).abs() < 1e-15);
        assert_eq!(e[(0, 1)], 0.0);
    }

    fn taylor_exp(m: &Mat, terms: usize) -> Mat {
        let n = m.nrows();
        let mut sum = Mat::identity(n, n);
        let mut term = Mat::identity(n, n);
        for k in 1..terms {
            term = &term * m / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_series() {
        let mut r = rng(5);
        for _ in 0..20 {
            let mut m = random_mat(&mut r, 4, 1.0);
            let norm = m.norm();
            if norm > 1.0 {
                m /= norm;
            }
            let e = expm(&m).unwrap();
            assert!(close(&e, &taylor_exp(&m, 30), 1e-12));
        }
    }

    #[test]
    fn expm_of_symmetric_is_spd() {
        let mut r = rng(6);
        for _ in 0..20 {
            let s = random_sym(&mut r, 4, 3.0);
            let e = expm(s.as_mat()).unwrap();
            assert!(is_spd(&SymMat::new(e).unwrap(), 0.0).spd);
        }
    }

    #[test]
    fn expm_overflow_is_reported() {
        let m = Mat::from_row_slice(2, 2, &[1e4, 1.0, 0.0, 1.0]);
        match expm(&m) {
            Err(Error::NonFinite { norm, .. }) => assert!(norm > 1e3),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn spd_functions() {
        assert_eq!(
            sqrtm_spd(&SpdMat::identity(3)).unwrap().as_mat(),
            &Mat::identity(3, 3)
        );
        let p = SpdMat::from_diagonal(&[4.0, 9.0]).unwrap();
        let s = sqrtm_spd(&p).unwrap();
        assert!(close(
            s.as_mat(),
            &Mat::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])),
            1e-14
        ));

        let mut r = rng(7);
        for _ in 0..20 {
            let p = random_spd(&mut r, 3, 1e-2, 1e2);
            let s = sqrtm_spd(&p).unwrap();
            assert!((s.as_mat() * s.as_mat() - p.as_mat()).norm() <= 1e-9 * p.norm());
            let is = invsqrtm_spd(&p).unwrap();
            assert!(close(&(s.as_mat() * is.as_mat()), &Mat::identity(3, 3), 1e-9));
            let l = logm_spd(&p).unwrap();
            assert!((expm(l.as_mat()).unwrap() - p.as_mat()).norm() <= 1e-9 * p.norm());
        }
    }

    #[test]
    fn exp_log_round_trip_ill_conditioned() {
        let mut r = rng(8);
        for _ in 0..20 {
            let p = random_spd(&mut r, 4, 1e-3, 1e3);
            let l = logm_spd(&p).unwrap();
            assert!((expm(l.as_mat()).unwrap() - p.as_mat()).norm() <= 1e-8 * p.norm());
        }
    }

    #[test]
    fn spd_rejects_indefinite() {
        let s = SymMat::from_diagonal(&[1.0, -1e-3]);
        assert!(matches!(SpdMat::from_sym(s), Err(Error::NotSpd { .. })));
    }

    #[test]
    fn commutator_examples() {
        let mut r = rng(9);
        let a = random_mat(&mut r, 3, 1.0);
        assert_eq!(commutator(&a, &a).unwrap(), Mat::zeros(3, 3));
        let d1 = Mat::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let d2 = Mat::from_diagonal(&DVector::from_vec(vec![3.0, 4.0]));
        assert_eq!(commutator(&d1, &d2).unwrap(), Mat::zeros(2, 2));
        let e = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let f = Mat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(
            commutator(&e, &f).unwrap(),
            Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
        );
        assert!(matches!(
            commutator(&Mat::zeros(2, 2), &Mat::zeros(3, 3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn dexpinv_trivial_cases() {
        let mut r = rng(10);
        let a = random_mat(&mut r, 3, 1.0);
        assert_eq!(dexpinv(&Mat::zeros(3, 3), &a, 4).unwrap(), a);
        let d = Mat::from_diagonal(&DVector::from_vec(vec![0.1, 0.2, 0.3]));
        let da = Mat::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 0.5]));
        assert_eq!(dexpinv(&d, &da, 4).unwrap(), da);
        assert!(matches!(
            dexpinv(&d, &da, 3),
            Err(Error::UnsupportedOrder(3))
        ));
    }

    #[test]
    fn expm_large_non_normal_terminates() {
        let theta = 1000.0;
        let rot = Mat::from_row_slice(2, 2, &[0.0, theta, -theta, 0.0]);
        let e = expm(&rot).unwrap();
        let exact = Mat::from_row_slice(2, 2, &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()]);
        assert!((e - exact).norm() < 1e-9);
        let wild = Mat::from_row_slice(3, 3, &[1e3, 1e14, 0.0, -1e12, -1e3, 1e9, 0.0, 1e13, 5.0]);
        let _ = expm(&wild);
        let huge = Mat::from_row_slice(2, 2, &[1e200, 1e200, -1e200, 0.0]);
        assert!(expm(&huge).is_err());
        let nil = Mat::from_row_slice(2, 2, &[0.0, 1e15, 0.0, 0.0]);
        let e = expm(&nil).unwrap();
        assert_eq!(e[(0, 1)], 1e15);
        assert_eq!(e[(1, 0)], 0.0);
    }

    /// Left-trivialized derivative of exp at `theta` applied to `v`, from the
    /// block exponential `exp([[θ, V], [0, θ]])`.
    fn dexp_oracle(theta: &Mat, v: &Mat) -> Mat {
        let n = theta.nrows();
        let mut big = Mat::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n)).copy_from(theta);
        big.view_mut((0, n), (n, n)).copy_from(v);
        big.view_mut((n, n), (n, n)).copy_from(theta);
        let e = big.exp();
        let upper = e.view((0, n), (n, n)).into_owned();
        upper * (-theta).exp()
    }

    #[test]
    fn dexpinv_residual_slopes() {
        let mut r = rng(11);
        let theta0 = random_mat(&mut r, 3, 1.0);
        let a = random_mat(&mut r, 3, 1.0);
        let residual = |s: f64, order: usize| {
            let theta = &theta0 * s;
            let b = dexpinv(&theta, &a, order).unwrap();
            (dexp_oracle(&theta, &b) - &a).norm()
        };
        for (order, expected) in [(1, 2.0), (2, 4.0), (4, 6.0)] {
            let slope = (residual(0.2, order) / residual(0.1, order)).log2();
            assert!((slope - expected).abs() < 0.3, "order {order}: slope {slope}");
        }
    }

    #[test]
    fn is_spd_diagnostics() {
        let c = is_spd(&SymMat::identity(3), 0.0);
        assert!(c.spd);
        assert!((c.min_eig - 1.0).abs() < 1e-15);
        let c = is_spd(&SymMat::from_diagonal(&[1.0, -1e-3]), 0.0);
        assert!(!c.spd);
        assert!((c.min_eig + 1e-3).abs() < 1e-15);
        // P = diag(1,2), T = diag(-1,1): P + ρT leaves exactly at ρ = 1.
        let p = SymMat::from_diagonal(&[1.0, 2.0]);
        let t = SymMat::from_diagonal(&[-1.0, 1.0]);
        assert!(!is_spd(&p.axpy(1.0 + 1e-9, &t), 0.0).spd);
        assert!(is_spd(&p.axpy(1.0 - 1e-9, &t), 0.0).spd);
    }
}
