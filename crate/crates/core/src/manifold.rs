//! Geometry of the SPD cone: step-size admissibility bounds for additive
//! updates `P + ρT`, and the affine-invariant distance / exponential map.

use crate::error::{Error, Result};
use crate::matcore::{is_spd, sym_eig, Mat, SpdMat, SymMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `T` is positive semidefinite: every `ρ ≥ 0` keeps `P + ρT` SPD.
    AllSafe,
    Bounded,
}

/// Sufficient step-size bounds for the additive update `P + ρT`.
///
/// For `ρ < rho_stay` the update is guaranteed SPD; for `ρ ≥ rho_leave` it is
/// guaranteed not to be. Steps in between may go either way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBounds {
    pub rho_stay: f64,
    pub rho_leave: f64,
    pub regime: Regime,
}

impl StepBounds {
    fn all_safe() -> Self {
        StepBounds {
            rho_stay: f64::INFINITY,
            rho_leave: f64::INFINITY,
            regime: Regime::AllSafe,
        }
    }
}

fn check_dims(p: &SpdMat, t: &SymMat) -> Result<()> {
    if p.dim() != t.dim() {
        return Err(Error::dims(
            format!("{}x{}", p.dim(), p.dim()),
            format!("{}x{}", t.dim(), t.dim()),
        ));
    }
    Ok(())
}

/// Weyl-inequality bounds on `ρ` for `P + ρT`.
///
/// With `λ` the ascending eigenvalues of `P` and `ν` those of `T`:
/// `rho_stay = −λ₁/ν₁` and `rho_leave = min −λ_j/ν_i` over the
/// anti-diagonal pairs `i + j = n + 1` with `ν_i < 0`. Pairs with `ν_i = 0`
/// carry no finite bound and are skipped.
pub fn step_bounds(p: &SpdMat, t: &SymMat) -> Result<StepBounds> {
    check_dims(p, t)?;
    let lambda = sym_eig(p.as_sym())?.values;
    let nu = sym_eig(t)?.values;
    let n = lambda.len();
    if nu[0] >= 0.0 {
        return Ok(StepBounds::all_safe());
    }
    let rho_stay = -lambda[0] / nu[0];
    let rho_leave = (0..n)
        .filter(|&i| nu[i] < 0.0)
        .map(|i| -lambda[n - 1 - i] / nu[i])
        .fold(f64::INFINITY, f64::min);
    Ok(StepBounds {
        rho_stay,
        rho_leave,
        regime: Regime::Bounded,
    })
}

/// Direct test: is the smallest eigenvalue of `P + ρT` positive?
pub fn spd_after_step(p: &SpdMat, t: &SymMat, rho: f64) -> Result<bool> {
    check_dims(p, t)?;
    if !(rho >= 0.0) {
        return Err(Error::InvalidInput(format!("step size must be >= 0, got {rho}")));
    }
    Ok(is_spd(&p.as_sym().axpy(rho, t), 0.0).spd)
}

/// `L⁻¹ M L⁻ᵀ` for the Cholesky factor `L` of `p`.
fn whiten(p: &SpdMat, m: &Mat) -> Result<Mat> {
    let l = p.cholesky_factor()?;
    let y = l
        .solve_lower_triangular(m)
        .ok_or(Error::Singular("Cholesky factor"))?;
    let w = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::Singular("Cholesky factor"))?;
    Ok(w)
}

/// Affine-invariant distance `‖log(P₁^{-1/2} P₂ P₁^{-1/2})‖_F`.
///
/// Evaluated through the Cholesky factor of `P₁`; the whitened matrix has
/// the same spectrum as `P₁^{-1/2} P₂ P₁^{-1/2}`.
pub fn affine_distance(p1: &SpdMat, p2: &SpdMat) -> Result<f64> {
    if p1.dim() != p2.dim() {
        return Err(Error::dims(
            format!("{}x{}", p1.dim(), p1.dim()),
            format!("{}x{}", p2.dim(), p2.dim()),
        ));
    }
    let w = SymMat::from_symmetrized(&whiten(p1, p2)?)?;
    let eig = sym_eig(&w)?;
    if eig.min() <= 0.0 {
        return Err(Error::NotSpd { min_eig: eig.min() });
    }
    Ok(eig.values.iter().map(|v| v.ln().powi(2)).sum::<f64>().sqrt())
}

/// Riemannian exponential `P^{1/2} exp(P^{-1/2} Σ P^{-1/2}) P^{1/2}`.
///
/// Computed as `G Gᵀ` with `G = L Q exp(D/2)`, where `L` is the Cholesky
/// factor of `P` and `Q D Qᵀ` the spectral decomposition of `L⁻¹ Σ L⁻ᵀ`,
/// so the result is a Gram matrix even for badly conditioned `P`.
pub fn affine_exp(p: &SpdMat, sigma: &SymMat) -> Result<SpdMat> {
    check_dims(p, sigma)?;
    let w = SymMat::from_symmetrized(&whiten(p, sigma)?)?;
    let eig = sym_eig(&w)?;
    if eig.max() > 700.0 {
        return Err(Error::NonFinite {
            context: "affine_exp overflow",
            norm: w.norm(),
        });
    }
    let l = p.cholesky_factor()?;
    let mut half = eig.vectors.clone();
    for (j, &mu) in eig.values.iter().enumerate() {
        half.column_mut(j).scale_mut((0.5 * mu).exp());
    }
    let g = l * half;
    SpdMat::from_sym(SymMat::from_symmetrized(&(&g * g.transpose()))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::expm;
    use crate::random::{random_mat, random_spd, random_sym, random_sym_with_spectrum, rng};
    use rand::Rng;

    #[test]
    fn psd_direction_is_all_safe() {
        let b = step_bounds(&SpdMat::identity(3), &SymMat::identity(3)).unwrap();
        assert_eq!(b.regime, Regime::AllSafe);
        assert!(b.rho_stay.is_infinite() && b.rho_leave.is_infinite());
    }

    #[test]
    fn diagonal_pair_bounds() {
        let p = SpdMat::from_diagonal(&[1.0, 2.0]).unwrap();
        let t = SymMat::from_diagonal(&[-1.0, 1.0]);
        let b = step_bounds(&p, &t).unwrap();
        assert_eq!(b.regime, Regime::Bounded);
        assert_eq!(b.rho_stay, 1.0);
        assert_eq!(b.rho_leave, 2.0);
        assert!(spd_after_step(&p, &t, 0.0).unwrap());
        assert!(spd_after_step(&p, &t, 0.5).unwrap());
        assert!(!spd_after_step(&p, &t, 1.5).unwrap());
    }

    #[test]
    fn zero_eigenvalues_are_excluded() {
        // ν = (-1, 0): only the pair (1, n) contributes.
        let p = SpdMat::from_diagonal(&[1.0, 3.0]).unwrap();
        let t = SymMat::from_diagonal(&[-1.0, 0.0]);
        let b = step_bounds(&p, &t).unwrap();
        assert_eq!(b.rho_leave, 3.0);
        assert_eq!(b.rho_stay, 1.0);
    }

    #[test]
    fn negative_step_rejected() {
        let p = SpdMat::identity(2);
        assert!(spd_after_step(&p, &SymMat::identity(2), -1.0).is_err());
    }

    #[test]
    fn bounds_are_sound_on_random_pairs() {
        let mut r = rng(21);
        for _ in 0..200 {
            let n = r.random_range(2..=6);
            let p = random_spd(&mut r, n, 0.1, 10.0);
            let eigs: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
            let mut eigs = eigs;
            eigs[0] = -eigs[0].abs() - 0.1;
            let t = random_sym_with_spectrum(&mut r, &eigs);
            let b = step_bounds(&p, &t).unwrap();
            assert!(b.rho_stay > 0.0 && b.rho_stay <= b.rho_leave);
            assert!(spd_after_step(&p, &t, 0.999 * b.rho_stay).unwrap());
            assert!(!spd_after_step(&p, &t, b.rho_leave).unwrap());
            assert!(!spd_after_step(&p, &t, 2.0 * b.rho_leave).unwrap());
        }
    }

    #[test]
    fn distance_examples() {
        let mut r = rng(22);
        let p = random_spd(&mut r, 3, 0.1, 10.0);
        assert!(affine_distance(&p, &p).unwrap() < 1e-12);
        let e = SpdMat::from_diagonal(&[std::f64::consts::E, 1.0]).unwrap();
        let d = affine_distance(&SpdMat::identity(2), &e).unwrap();
        assert!((d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distance_is_congruence_invariant_and_symmetric() {
        let mut r = rng(23);
        for _ in 0..50 {
            let p = random_spd(&mut r, 3, 0.1, 10.0);
            let q = random_spd(&mut r, 3, 0.1, 10.0);
            let m = random_mat(&mut r, 3, 1.0) + Mat::identity(3, 3) * 2.0;
            let mp = SpdMat::new(&m * p.as_mat() * m.transpose()).unwrap();
            let mq = SpdMat::new(&m * q.as_mat() * m.transpose()).unwrap();
            let d = affine_distance(&p, &q).unwrap();
            assert!((affine_distance(&mp, &mq).unwrap() - d).abs() < 1e-8);
            assert!((affine_distance(&q, &p).unwrap() - d).abs() < 1e-9);
        }
    }

    #[test]
    fn exp_examples() {
        let mut r = rng(24);
        let p = random_spd(&mut r, 3, 0.1, 10.0);
        let e = affine_exp(&p, &SymMat::zeros(3)).unwrap();
        assert!((e.as_mat() - p.as_mat()).norm() < 1e-12);
        let s = random_sym(&mut r, 3, 1.0);
        let e = affine_exp(&SpdMat::identity(3), &s).unwrap();
        assert!((e.as_mat() - expm(s.as_mat()).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn exp_and_distance_are_compatible() {
        let mut r = rng(25);
        for _ in 0..10 {
            let p = random_spd(&mut r, 3, 0.2, 5.0);
            let sigma = random_sym(&mut r, 3, 1.0);
            let ip = crate::matcore::invsqrtm_spd(&p).unwrap();
            let speed = (ip.as_mat() * sigma.as_mat() * ip.as_mat()).norm();
            // The geodesic has constant speed, so d(P, exp_P(tΣ)) = t‖·‖.
            for t in [1e-1, 1e-2, 1e-3] {
                let q = affine_exp(&p, &sigma.scale(t)).unwrap();
                let ratio = affine_distance(&p, &q).unwrap() / t;
                assert!((ratio - speed).abs() < 1e-7 * speed.max(1.0));
            }
        }
    }

    #[test]
    fn exp_lands_on_manifold_for_ill_conditioned_base() {
        // Condition numbers of the result stay below ~1e13.
        let mut r = rng(26);
        for _ in 0..50 {
            let p = random_spd(&mut r, 4, 1e-6, 1.0);
            let sigma = random_sym(&mut r, 4, 1e-6);
            let q = affine_exp(&p, &sigma).unwrap();
            assert!(is_spd(q.as_sym(), 0.0).spd);
        }
    }

    #[test]
    fn triangle_inequality() {
        let mut r = rng(27);
        for _ in 0..100 {
            let a = random_spd(&mut r, 3, 0.01, 100.0);
            let b = random_spd(&mut r, 3, 0.01, 100.0);
            let c = random_spd(&mut r, 3, 0.01, 100.0);
            let ab = affine_distance(&a, &b).unwrap();
            let bc = affine_distance(&b, &c).unwrap();
            let ac = affine_distance(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-9);
        }
    }
}
