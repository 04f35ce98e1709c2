//! Transitive Lie group actions on the SPD cone.
//!
//! Two actions are provided behind [`HomogeneousAction`]:
//!
//! * [`Congruence`]: `GL(n)` acting by `(M, P) ↦ M P Mᵀ`, with algebra action
//!   `A ↦ AP + PAᵀ`.
//! * [`Siegel`]: the symplectic group `Sp(2n)` acting by the fractional-linear
//!   map `(M, P) ↦ (AP + B)(CP + D)⁻¹`, with algebra action
//!   `(A, B, C) ↦ AP + PAᵀ + B − PCP`. This is the action whose generators
//!   cover the matrix Riccati equations.
//!
//! The imaginary-part map on the Siegel upper half-space, `P ↦ Im((A·iP + B)(C·iP + D)⁻¹)`,
//! is available as [`siegel_half_space_act`] for diagnostics. It is not
//! used as an action: dropping the real part breaks the composition law,
//! and its derivative only sees the `A` block.

use nalgebra::{DMatrix, LU};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matcore::{expm, symmetrize, Mat, SpdMat, SymMat};
use crate::models::CovarianceModel;

/// Relative pivot magnitude below which a matrix is treated as singular.
pub const DET_TOL: f64 = 1e-14;

/// Residual allowed in `MᵀJM = J`.
pub const SYMPLECTIC_TOL: f64 = 1e-8;

/// A Lie algebra element that can be carried as a square matrix.
///
/// Integrators form linear combinations and commutators in matrix form;
/// both operations stay inside the algebra.
pub trait AlgebraElem: Clone + Sized {
    fn to_matrix(&self) -> Mat;
    fn from_matrix(m: &Mat) -> Result<Self>;
}

/// A transitive action of a matrix Lie group on the SPD cone.
pub trait HomogeneousAction: Send + Sync {
    type Group: Clone;
    type Algebra: AlgebraElem;

    fn name(&self) -> &'static str;

    fn act(&self, g: &Self::Group, p: &SpdMat) -> Result<SpdMat>;

    /// Infinitesimal action `d/ds act(exp(s a), P)` at `s = 0`.
    fn algebra_act(&self, a: &Self::Algebra, p: &SpdMat) -> Result<SymMat>;

    fn exp(&self, a: &Self::Algebra) -> Result<Self::Group>;

    fn identity(&self, n: usize) -> Self::Group;

    /// Group product `g1 · g2`.
    fn compose(&self, g1: &Self::Group, g2: &Self::Group) -> Self::Group;

    /// The model's generator at `(P, t)` expressed in this action's algebra.
    fn xi(&self, model: &dyn CovarianceModel, p: &SpdMat, t: f64) -> Result<Self::Algebra>;
}

fn check_square_dim(m: &Mat, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::dims(
            format!("{what} {n}x{n}"),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn lu_min_pivot_ratio(m: &Mat) -> f64 {
    let lu = LU::new(m.clone());
    let u = lu.u();
    let max = m.amax().max(f64::MIN_POSITIVE);
    (0..m.nrows())
        .map(|i| u[(i, i)].abs())
        .fold(f64::INFINITY, f64::min)
        / max
}

// ---------------------------------------------------------------------------
// GL(n) by congruence

/// Invertible `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GlElem(Mat);

impl GlElem {
    pub fn new(m: Mat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::dims(
                "square matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "GL element",
                norm: m.norm(),
            });
        }
        if !(lu_min_pivot_ratio(&m) > DET_TOL) {
            return Err(Error::Singular("GL element"));
        }
        Ok(GlElem(m))
    }

    pub fn identity(n: usize) -> Self {
        GlElem(Mat::identity(n, n))
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Element of `gl(n)`: any square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GlAlgebraElem(pub Mat);

impl AlgebraElem for GlAlgebraElem {
    fn to_matrix(&self) -> Mat {
        self.0.clone()
    }

    fn from_matrix(m: &Mat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::dims(
                "square matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        Ok(GlAlgebraElem(m.clone()))
    }
}

/// `M P Mᵀ`, formed as the Gram matrix `(M L)(M L)ᵀ` of the Cholesky factor
/// `L` of `P` so that it stays positive definite in floating point.
pub fn congruence_act(m: &GlElem, p: &SpdMat) -> Result<SpdMat> {
    check_square_dim(m.as_mat(), p.dim(), "GL element")?;
    let g = m.as_mat() * p.cholesky_factor()?;
    SpdMat::from_sym(SymMat::from_symmetrized(&(&g * g.transpose()))?)
}

/// `AP + PAᵀ`.
pub fn congruence_algebra(a: &GlAlgebraElem, p: &SpdMat) -> Result<SymMat> {
    check_square_dim(&a.0, p.dim(), "gl element")?;
    let ap = &a.0 * p.as_mat();
    SymMat::from_symmetrized(&(&ap + ap.transpose()))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Congruence;

impl HomogeneousAction for Congruence {
    type Group = GlElem;
    type Algebra = GlAlgebraElem;

    fn name(&self) -> &'static str {
        "congruence"
    }

    fn act(&self, g: &GlElem, p: &SpdMat) -> Result<SpdMat> {
        congruence_act(g, p)
    }

    fn algebra_act(&self, a: &GlAlgebraElem, p: &SpdMat) -> Result<SymMat> {
        congruence_algebra(a, p)
    }

    fn exp(&self, a: &GlAlgebraElem) -> Result<GlElem> {
        // exp of a finite matrix is always invertible
        Ok(GlElem(expm(&a.0)?))
    }

    fn identity(&self, n: usize) -> GlElem {
        GlElem::identity(n)
    }

    fn compose(&self, g1: &GlElem, g2: &GlElem) -> GlElem {
        GlElem(&g1.0 * &g2.0)
    }

    fn xi(&self, model: &dyn CovarianceModel, p: &SpdMat, t: f64) -> Result<GlAlgebraElem> {
        Ok(GlAlgebraElem(model.xi(p, t)?))
    }
}

// ---------------------------------------------------------------------------
// Sp(2n) by fractional-linear maps

/// The standard skew form `[[0, I], [−I, 0]]`.
pub fn symplectic_form(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `‖MᵀJM − J‖_F`.
pub fn symplectic_residual(m: &Mat) -> f64 {
    let j = symplectic_form(m.nrows() / 2);
    (m.transpose() * &j * m - j).norm()
}

/// Symplectic `2n × 2n` matrix `[[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpElem(Mat);

impl SpElem {
    pub fn new(m: Mat) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
            return Err(Error::dims(
                "2n x 2n matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        let residual = symplectic_residual(&m);
        if !(residual <= SYMPLECTIC_TOL) {
            return Err(Error::NotSymplectic { residual });
        }
        Ok(SpElem(m))
    }

    pub fn identity(n: usize) -> Self {
        SpElem(Mat::identity(2 * n, 2 * n))
    }

    /// `[[A, 0], [0, A⁻ᵀ]]`, the image of `GL(n)` in `Sp(2n)`.
    pub fn from_gl(a: &GlElem) -> Result<Self> {
        let n = a.dim();
        let inv_t = a
            .as_mat()
            .clone()
            .try_inverse()
            .ok_or(Error::Singular("GL element"))?
            .transpose();
        let mut m = Mat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(a.as_mat());
        m.view_mut((n, n), (n, n)).copy_from(&inv_t);
        SpElem::new(m)
    }

    pub fn half_dim(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    fn block(&self, r: usize, c: usize) -> Mat {
        let n = self.half_dim();
        self.0.view((r * n, c * n), (n, n)).into_owned()
    }

    pub fn a(&self) -> Mat {
        self.block(0, 0)
    }

    pub fn b(&self) -> Mat {
        self.block(0, 1)
    }

    pub fn c(&self) -> Mat {
        self.block(1, 0)
    }

    pub fn d(&self) -> Mat {
        self.block(1, 1)
    }
}

/// Element `[[A, B], [C, −Aᵀ]]` of `sp(2n)` with `B`, `C` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SpAlgebraElem {
    pub a: Mat,
    pub b: SymMat,
    pub c: SymMat,
}

impl SpAlgebraElem {
    pub fn new(a: Mat, b: SymMat, c: SymMat) -> Result<Self> {
        let n = a.nrows();
        check_square_dim(&a, n, "A block")?;
        check_square_dim(b.as_mat(), n, "B block")?;
        check_square_dim(c.as_mat(), n, "C block")?;
        Ok(SpAlgebraElem { a, b, c })
    }

    /// Generator of the congruence flow: `(A, 0, 0)`.
    pub fn from_gl(a: &Mat) -> Self {
        let n = a.nrows();
        SpAlgebraElem {
            a: a.clone(),
            b: SymMat::zeros(n),
            c: SymMat::zeros(n),
        }
    }

    pub fn half_dim(&self) -> usize {
        self.a.nrows()
    }
}

impl AlgebraElem for SpAlgebraElem {
    fn to_matrix(&self) -> Mat {
        let n = self.half_dim();
        let mut m = Mat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m.view_mut((0, n), (n, n)).copy_from(self.b.as_mat());
        m.view_mut((n, 0), (n, n)).copy_from(self.c.as_mat());
        m.view_mut((n, n), (n, n)).copy_from(&(-self.a.transpose()));
        m
    }

    /// Reads the `A`, `B`, `C` blocks; the symmetric blocks are
    /// re-symmetrized to absorb roundoff from commutators.
    fn from_matrix(m: &Mat) -> Result<Self> {
        if m.nrows() != m.ncols() || !m.nrows().is_multiple_of(2) {
            return Err(Error::dims(
                "2n x 2n matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        let n = m.nrows() / 2;
        Ok(SpAlgebraElem {
            a: m.view((0, 0), (n, n)).into_owned(),
            b: SymMat::from_symmetrized(&m.view((0, n), (n, n)).into_owned())?,
            c: SymMat::from_symmetrized(&m.view((n, 0), (n, n)).into_owned())?,
        })
    }
}

fn check_sp_dims(half: usize, p: &SpdMat) -> Result<()> {
    if half != p.dim() {
        return Err(Error::dims(
            format!("{}x{}", 2 * p.dim(), 2 * p.dim()),
            format!("{}x{}", 2 * half, 2 * half),
        ));
    }
    Ok(())
}

/// `(AP + B)(CP + D)⁻¹`, re-symmetrized.
pub fn siegel_act(m: &SpElem, p: &SpdMat) -> Result<SpdMat> {
    check_sp_dims(m.half_dim(), p)?;
    let num = m.a() * p.as_mat() + m.b();
    let den = m.c() * p.as_mat() + m.d();
    if !(lu_min_pivot_ratio(&den) > DET_TOL) {
        return Err(Error::Singular("CP + D"));
    }
    // W = N D⁻¹  ⇔  Dᵀ Wᵀ = Nᵀ
    let wt = LU::new(den.transpose())
        .solve(&num.transpose())
        .ok_or(Error::Singular("CP + D"))?;
    SpdMat::from_sym(SymMat::from_symmetrized(&wt.transpose())?)
}

/// `AP + PAᵀ + B − PCP`.
pub fn siegel_algebra(a: &SpAlgebraElem, p: &SpdMat) -> Result<SymMat> {
    check_sp_dims(a.half_dim(), p)?;
    let ap = &a.a * p.as_mat();
    let pcp = p.as_mat() * a.c.as_mat() * p.as_mat();
    SymMat::from_symmetrized(&(&ap + ap.transpose() + a.b.as_mat() - pcp))
}

/// Action on the Siegel upper half-space evaluated at `Z = iP`.
///
/// Returns `(Im W, Re W)` for `W = (A·iP + B)(C·iP + D)⁻¹`, computed from
/// the equivalent real `2n × 2n` system
/// `[X Y] [[D, CP], [−CP, D]] = [B, AP]`.
pub fn siegel_half_space_act(m: &SpElem, p: &SpdMat) -> Result<(SymMat, Mat)> {
    check_sp_dims(m.half_dim(), p)?;
    let n = p.dim();
    let (a, b, c, d) = (m.a(), m.b(), m.c(), m.d());
    let cp = &c * p.as_mat();
    let ap = &a * p.as_mat();
    let mut k = Mat::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&d);
    k.view_mut((0, n), (n, n)).copy_from(&cp);
    k.view_mut((n, 0), (n, n)).copy_from(&(-&cp));
    k.view_mut((n, n), (n, n)).copy_from(&d);
    let mut rhs = Mat::zeros(n, 2 * n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&b);
    rhs.view_mut((0, n), (n, n)).copy_from(&ap);
    // [X Y] K = rhs  ⇔  Kᵀ [X Y]ᵀ = rhsᵀ
    let sol = LU::new(k.transpose())
        .solve(&rhs.transpose())
        .ok_or(Error::Singular("C·iP + D"))?
        .transpose();
    let re = sol.view((0, 0), (n, n)).into_owned();
    let im = sol.view((0, n), (n, n)).into_owned();
    Ok((SymMat::from_symmetrized(&im)?, re))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Siegel;

impl HomogeneousAction for Siegel {
    type Group = SpElem;
    type Algebra = SpAlgebraElem;

    fn name(&self) -> &'static str {
        "siegel"
    }

    fn act(&self, g: &SpElem, p: &SpdMat) -> Result<SpdMat> {
        siegel_act(g, p)
    }

    fn algebra_act(&self, a: &SpAlgebraElem, p: &SpdMat) -> Result<SymMat> {
        siegel_algebra(a, p)
    }

    fn exp(&self, a: &SpAlgebraElem) -> Result<SpElem> {
        SpElem::new(expm(&a.to_matrix())?)
    }

    fn identity(&self, n: usize) -> SpElem {
        SpElem::identity(n)
    }

    fn compose(&self, g1: &SpElem, g2: &SpElem) -> SpElem {
        SpElem(&g1.0 * &g2.0)
    }

    fn xi(&self, model: &dyn CovarianceModel, p: &SpdMat, t: f64) -> Result<SpAlgebraElem> {
        model.siegel_coeffs(p, t)
    }
}

/// Random `sp(2n)` element with Frobenius norm at most `scale`.
pub fn random_sp_algebra(rng: &mut impl Rng, n: usize, scale: f64) -> SpAlgebraElem {
    let mut entry = || rng.random_range(-1.0..=1.0);
    let a = DMatrix::from_fn(n, n, |_, _| entry());
    let b = symmetrize(&DMatrix::from_fn(n, n, |_, _| entry()));
    let c = symmetrize(&DMatrix::from_fn(n, n, |_, _| entry()));
    let raw = SpAlgebraElem {
        a,
        b: SymMat::from_symmetrized(&b).expect("finite"),
        c: SymMat::from_symmetrized(&c).expect("finite"),
    };
    let norm = raw.to_matrix().norm();
    let target = scale * rng.random_range(0.0..=1.0);
    let s = if norm > 0.0 { target / norm } else { 0.0 };
    SpAlgebraElem {
        a: raw.a * s,
        b: raw.b.scale(s),
        c: raw.c.scale(s),
    }
}

/// `exp` of a random `sp(2n)` element of norm at most `scale`.
pub fn random_symplectic(seed: u64, n: usize, scale: f64) -> Result<SpElem> {
    if !(scale > 0.0) {
        return Err(Error::InvalidInput(format!("scale must be > 0, got {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_sp_algebra(&mut rng, n, scale);
    Siegel.exp(&a)
}
