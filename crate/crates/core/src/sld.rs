//! Symmetric logarithmic derivative: the Hermitian `L` solving
//! `(L rho + rho L)/2 = d rho`.
//!
//! Two constructions are provided. [`sld_eigen`] works pairwise in the
//! eigenbasis of `rho` and handles rank-deficient states. [`sld_integral`]
//! evaluates `2 int_0^inf exp(-rho t) d rho exp(-rho t) dt` as a sum of
//! projector sandwiches weighted by the Laplace kernel; it needs a full-rank
//! state and exists mainly to cross-check the first. The off-support block
//! of `L` (both indices in the kernel of `rho`) is left at zero; no
//! expectation value in `rho` depends on it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DensityMatrix, FamilyKind, ParamPoint, StateFamily};
use crate::numat::{self, hermitian_part, max_abs, CMatrix, EigenSystem};

/// Pair sums `rho_n + rho_m` at or below this are dropped.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Trace tolerance for derivative inputs.
pub const DERIVATIVE_TRACE_TOL: f64 = 1e-8;
/// Smallest eigenvalue accepted by [`sld_integral`].
pub const FULL_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SldOperator {
    op: CMatrix,
    support_rank: usize,
    rank_tol: f64,
}

impl SldOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.op
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn into_matrix(self) -> CMatrix {
        self.op
    }
}

fn check_derivative(rho: &DensityMatrix, drho: &CMatrix) -> Result<CMatrix> {
    numat::check_same_dim(drho, rho.dim())?;
    let d = numat::hermitize(drho)?;
    let tr = numat::trace(&d).re;
    if tr.abs() > DERIVATIVE_TRACE_TOL {
        return Err(Error::InvalidArgument(format!(
            "state derivative must be traceless, trace is {tr:.3e}"
        )));
    }
    Ok(d)
}

fn support_rank(eig: &EigenSystem, rank_tol: f64) -> usize {
    eig.values.iter().filter(|&&v| v > rank_tol).count()
}

/// SLD from the pairwise eigenbasis formula
/// `L = 2 sum_{nm} <psi_m|d rho|psi_n> / (rho_n + rho_m) |psi_m><psi_n|`,
/// keeping only pairs with `rho_n + rho_m > rank_tol`.
pub fn sld_eigen(rho: &DensityMatrix, drho: &CMatrix, rank_tol: f64) -> Result<SldOperator> {
    let drho = check_derivative(rho, drho)?;
    let eig = rho.eigen();
    let d = rho.dim();
    let top = eig.values[d - 1];
    if 2.0 * top <= rank_tol {
        return Err(Error::DegenerateSupport { rank_tol });
    }
    let mut in_basis = eig.to_eigenbasis(&drho);
    for m in 0..d {
        for n in 0..d {
            let s = eig.values[m] + eig.values[n];
            in_basis[(m, n)] = if s > rank_tol {
                in_basis[(m, n)] * (2.0 / s)
            } else {
                numat::ZERO
            };
        }
    }
    Ok(SldOperator {
        op: hermitian_part(&eig.from_eigenbasis(&in_basis)),
        support_rank: support_rank(eig, rank_tol),
        rank_tol,
    })
}

/// `int_0^inf exp(-a t) dt` for `a > 0`.
fn laplace_kernel(a: f64) -> f64 {
    1.0 / a
}

/// SLD from the integral representation. Requires a full-rank state.
pub fn sld_integral(rho: &DensityMatrix, drho: &CMatrix) -> Result<SldOperator> {
    let drho = check_derivative(rho, drho)?;
    let eig = rho.eigen();
    let min = eig.values[0];
    if min <= FULL_RANK_TOL {
        return Err(Error::SingularState {
            min_eigenvalue: min,
        });
    }
    let d = rho.dim();
    let psi: Vec<_> = (0..d).map(|k| eig.vector(k)).collect();
    // exp(-rho t) = sum_n exp(-rho_n t) P_n, so the integrand splits into
    // P_n d rho P_m exp(-(rho_n + rho_m) t).
    let drho_psi: Vec<_> = psi.iter().map(|v| &drho * v).collect();
    let mut l = CMatrix::zeros(d, d);
    for n in 0..d {
        for m in 0..d {
            let sandwich: Complex64 = psi[n].dotc(&drho_psi[m]);
            let weight = 2.0 * laplace_kernel(eig.values[n] + eig.values[m]);
            l += numat::outer(&psi[n], &psi[m]) * (sandwich * weight);
        }
    }
    Ok(SldOperator {
        op: hermitian_part(&l),
        support_rank: d,
        rank_tol: FULL_RANK_TOL,
    })
}

/// Max-entry norm of `(L rho + rho L)/2 - d rho` with the kernel-kernel block
/// of `rho` removed.
pub fn lyapunov_residual(l: &SldOperator, rho: &DensityMatrix, drho: &CMatrix) -> f64 {
    let rho_m = rho.matrix();
    let r = numat::anticommutator(l.matrix(), rho_m).scale(0.5) - drho;
    let eig = rho.eigen();
    let d = rho.dim();
    let mut kernel = CMatrix::zeros(d, d);
    for k in 0..d {
        if eig.values[k] <= l.rank_tol() {
            kernel += numat::projector(&eig.vector(k));
        }
    }
    let projected = &r - &kernel * &r * &kernel;
    max_abs(&projected)
}

/// SLD of a unitary family through `L_lambda = U L_0 U^dag`, where `L_0`
/// only needs the spectrum of `rho_0` and the generator in its eigenbasis.
pub fn sld_unitary(fam: &StateFamily, p: &ParamPoint) -> Result<SldOperator> {
    let (generator, base) = match fam.kind() {
        FamilyKind::Unitary { generator, base } => (generator, base),
        _ => return Err(fam.kind_mismatch("unitary")),
    };
    let lambda = match p.values() {
        [l] => *l,
        v => {
            return Err(Error::InvalidArgument(format!(
                "unitary families take one parameter, got {}",
                v.len()
            )))
        }
    };
    let rank_tol = DEFAULT_RANK_TOL;
    let eig = numat::eigh(base)?;
    let g = eig.to_eigenbasis(generator);
    let d = eig.dim();
    let mut l0 = CMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let (ra, rb) = (eig.values[a], eig.values[b]);
            let s = ra + rb;
            if a != b && s > rank_tol {
                l0[(a, b)] = g[(a, b)] * Complex64::new(0.0, 2.0 * (ra - rb) / s);
            }
        }
    }
    let l0 = eig.from_eigenbasis(&l0);
    let u = fam.unitary_at(lambda)?;
    Ok(SldOperator {
        op: hermitian_part(&(&u * l0 * u.adjoint())),
        support_rank: support_rank(&eig, rank_tol),
        rank_tol,
    })
}

/// State, derivative along `mu`, and eigenbasis SLD at `p`.
#[derive(Debug, Clone)]
pub struct SldSolution {
    pub rho: DensityMatrix,
    pub drho: CMatrix,
    pub sld: SldOperator,
}

pub fn solve(fam: &StateFamily, p: &ParamPoint, mu: usize) -> Result<SldSolution> {
    let rho = fam.evaluate(p)?;
    let drho = fam.derivative(p, mu)?;
    let sld = sld_eigen(&rho, &drho, DEFAULT_RANK_TOL)?;
    Ok(SldSolution { rho, drho, sld })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::model::validate_state;
    use crate::numat::{from_rows, real_diag};
    use std::f64::consts::FRAC_PI_4;

    fn pt(x: f64) -> ParamPoint {
        ParamPoint::scalar(x).unwrap()
    }

    #[test]
    fn diagonal_family_sld() {
        // 2L rho_ii = 2 d rho_ii  =>  L = diag(1/x, -1/(1-x))
        let s = solve(&catalog::diagonal_qubit(), &pt(0.25), 0).unwrap();
        assert!(max_abs(&(s.sld.matrix() - real_diag(&[4.0, -4.0 / 3.0]))) < 1e-9);
        assert!(lyapunov_residual(&s.sld, &s.rho, &s.drho) <= 1e-10);
    }

    #[test]
    fn rotation_path_sld() {
        // pure state: L = 2 d rho = 2 [[-sin 2x, cos 2x], [cos 2x, sin 2x]] at pi/4
        let s = solve(&catalog::rotation_path(), &pt(FRAC_PI_4), 0).unwrap();
        assert!(max_abs(&(s.sld.matrix() - real_diag(&[-2.0, 2.0]))) < 1e-9);
        assert_eq!(s.sld.support_rank(), 1);
    }

    #[test]
    fn zero_derivative_gives_zero_sld() {
        let rho = validate_state(&real_diag(&[0.3, 0.7])).unwrap();
        let zero = CMatrix::zeros(2, 2);
        assert_eq!(max_abs(sld_eigen(&rho, &zero, DEFAULT_RANK_TOL).unwrap().matrix()), 0.0);
        assert_eq!(max_abs(sld_integral(&rho, &zero).unwrap().matrix()), 0.0);
    }

    #[test]
    fn integral_route_on_maximally_mixed() {
        let rho = validate_state(&catalog::maximally_mixed_qubit()).unwrap();
        let drho = real_diag(&[0.25, -0.25]);
        let l = sld_integral(&rho, &drho).unwrap();
        assert!(max_abs(&(l.matrix() - real_diag(&[0.5, -0.5]))) < 1e-14);
    }

    #[test]
    fn integral_route_on_diagonal_family() {
        let s = solve(&catalog::diagonal_qubit(), &pt(0.25), 0).unwrap();
        let l = sld_integral(&s.rho, &s.drho).unwrap();
        assert!(max_abs(&(l.matrix() - real_diag(&[4.0, -4.0 / 3.0]))) < 1e-9);
    }

    #[test]
    fn integral_route_rejects_singular() {
        let s = solve(&catalog::rotation_path(), &pt(0.3), 0).unwrap();
        assert!(matches!(
            sld_integral(&s.rho, &s.drho),
            Err(Error::SingularState { .. })
        ));
    }

    #[test]
    fn residual_of_zero_operator() {
        let rho = validate_state(&real_diag(&[0.25, 0.75])).unwrap();
        let zero = sld_eigen(&rho, &CMatrix::zeros(2, 2), DEFAULT_RANK_TOL).unwrap();
        let drho = real_diag(&[1.0, -1.0]);
        assert!((lyapunov_residual(&zero, &rho, &drho) - 1.0).abs() < 1e-15);
        assert_eq!(lyapunov_residual(&zero, &rho, &CMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn unitary_pure_gives_sigma_y() {
        let l = sld_unitary(&catalog::phase_plus(), &pt(0.0)).unwrap();
        let sigma_y = from_rows(&[&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 1.0), (0.0, 0.0)]]);
        assert!(max_abs(&(l.matrix() - sigma_y)) < 1e-14);
    }

    #[test]
    fn unitary_commuting_generator() {
        let fam = catalog::unitary(real_diag(&[1.0, -1.0]), real_diag(&[0.75, 0.25])).unwrap();
        let l = sld_unitary(&fam, &pt(0.4)).unwrap();
        assert!(max_abs(l.matrix()) < 1e-15);
    }

    #[test]
    fn unitary_mixed_offdiagonal() {
        let l = sld_unitary(&catalog::unitary_mixed(), &pt(0.0)).unwrap();
        let m = l.matrix();
        assert!((m[(0, 1)].norm() - 0.5).abs() < 1e-14);
        assert!(m[(0, 0)].norm() < 1e-15 && m[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn unitary_route_rejects_other_kinds() {
        assert!(matches!(
            sld_unitary(&catalog::diagonal_qubit(), &pt(0.2)),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn rejects_traceful_derivative() {
        let rho = validate_state(&real_diag(&[0.5, 0.5])).unwrap();
        assert!(sld_eigen(&rho, &real_diag(&[1.0, 0.0]), DEFAULT_RANK_TOL).is_err());
    }
}
