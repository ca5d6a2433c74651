//! Quantum Fisher information matrix, matrix Cramer-Rao bound and
//! reparametrization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::{expr_central, ParamPoint, StateFamily};
use crate::numat;
use crate::sld::{self, SldSolution};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const PSD_SLACK: f64 = 1e-8;
pub const MAX_CONDITION: f64 = 1e12;

/// Attached to every matrix bound.
pub const ATTAINABILITY_NOTE: &str =
    "the matrix bound may not be achievable: SLDs of different parameters need not commute";

#[derive(Debug, Clone, PartialEq)]
pub struct QfiMatrix {
    h: DMatrix<f64>,
}

impl QfiMatrix {
    /// Checks symmetry and positivity; eigenvalues in `[-PSD_SLACK, 0)` are
    /// clamped.
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n || n == 0 {
            return Err(Error::NotSquare {
                rows: h.nrows(),
                cols: h.ncols(),
            });
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = (&h - h.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
            });
        }
        let sym = (&h + h.transpose()) * 0.5;
        let (values, vectors) = numat::eigh_real(&sym);
        let min = values[0];
        if min < -PSD_SLACK {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        if min < 0.0 {
            let clamped = DVector::from_iterator(n, values.iter().map(|v| v.max(0.0)));
            let rebuilt = &vectors * DMatrix::from_diagonal(&clamped) * vectors.transpose();
            return Ok(Self {
                h: (&rebuilt + rebuilt.transpose()) * 0.5,
            });
        }
        Ok(Self { h: sym })
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// `H^{-1}`, refusing matrices with condition number at or above
    /// [`MAX_CONDITION`].
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let (values, vectors) = numat::eigh_real(&self.h);
        let (min, max) = (values[0], values[values.len() - 1].max(-values[0]));
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if !(condition < MAX_CONDITION) {
            return Err(Error::SingularFisher {
                condition,
                null_direction: vectors.column(0).iter().copied().collect(),
            });
        }
        let inv_vals = DVector::from_iterator(values.len(), values.iter().map(|v| 1.0 / v));
        let inv = &vectors * DMatrix::from_diagonal(&inv_vals) * vectors.transpose();
        Ok((&inv + inv.transpose()) * 0.5)
    }
}

/// `H_{mu nu} = Re Tr[rho (L_mu L_nu + L_nu L_mu)/2]`, with one SLD per
/// parameter solved once and reused across the row and column.
pub fn qfi_matrix(fam: &StateFamily, p: &ParamPoint) -> Result<QfiMatrix> {
    let n = fam.nparams();
    let sols = (0..n)
        .map(|mu| sld::solve(fam, p, mu))
        .collect::<Result<Vec<SldSolution>>>()?;
    let rho = &sols[0].rho;
    let mut h = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let la = sols[a].sld.matrix();
            let lb = sols[b].sld.matrix();
            let sym = numat::anticommutator(la, lb).scale(0.5);
            let v = rho.expect(&sym);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    QfiMatrix::new(h)
}

/// `Tr[d_nu rho L_mu]`, the unsymmetrized form, used for cross-checks.
pub fn qfi_matrix_derivative_form(fam: &StateFamily, p: &ParamPoint) -> Result<DMatrix<f64>> {
    let n = fam.nparams();
    let sols = (0..n)
        .map(|mu| sld::solve(fam, p, mu))
        .collect::<Result<Vec<SldSolution>>>()?;
    Ok(DMatrix::from_fn(n, n, |a, b| {
        numat::trace_product(&sols[b].drho, sols[a].sld.matrix()).re
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrbBounds {
    /// `(H^{-1})_{mu mu} / M`.
    pub per_parameter: Vec<f64>,
    /// `H^{-1} / M`.
    pub covariance: DMatrix<f64>,
    pub note: &'static str,
}

pub fn crb_bounds(h: &QfiMatrix, m: u64) -> Result<CrbBounds> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "number of measurements must be positive".into(),
        ));
    }
    let covariance = h.inverse()? / m as f64;
    Ok(CrbBounds {
        per_parameter: covariance.diagonal().iter().copied().collect(),
        covariance,
        note: ATTAINABILITY_NOTE,
    })
}

/// Jacobian `B_{mu nu} = d lambda_nu / d lambda~_mu` of a change of
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparam {
    b: DMatrix<f64>,
}

impl Reparam {
    pub fn from_matrix(b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() != b.ncols() {
            return Err(Error::NotSquare {
                rows: b.nrows(),
                cols: b.ncols(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { b })
    }

    /// Builds `B` by central differences of `lambda_nu(lambda~)`, given as one
    /// expression per old coordinate in the variables `x1..xN` of the new
    /// ones, at the new-coordinate point `at`.
    pub fn from_map(old_coords: &[Expr], at: &[f64], step: f64) -> Result<Self> {
        let n = old_coords.len();
        if at.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: at.len(),
            });
        }
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        let mut b = DMatrix::zeros(n, n);
        for (nu, e) in old_coords.iter().enumerate() {
            if e.max_var() > n {
                return Err(Error::InvalidArgument(format!(
                    "coordinate map references x{} but has {n} coordinates",
                    e.max_var()
                )));
            }
            for mu in 0..n {
                b[(mu, nu)] = expr_central(e, at, mu, step)?;
            }
        }
        Self::from_matrix(b)
    }

    /// Old-coordinate point `lambda(lambda~)` for a map given as expressions.
    pub fn map_point(old_coords: &[Expr], at: &[f64]) -> Result<Vec<f64>> {
        old_coords
            .iter()
            .map(|e| Ok(e.eval(at)?))
            .collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .b
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("reparametrization is not invertible".into()))?;
        Self::from_matrix(inv)
    }
}

/// `H~ = B H B^T`.
pub fn reparametrize(h: &QfiMatrix, b: &Reparam) -> Result<QfiMatrix> {
    if b.matrix().nrows() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: h.n(),
            got: b.matrix().nrows(),
        });
    }
    let t = b.matrix() * h.matrix() * b.matrix().transpose();
    QfiMatrix::new((&t + t.transpose()) * 0.5)
}

/// Bound on the variance of the quantity mapped to the first new coordinate:
/// `(H~^{-1})_{11} / M`.
pub fn first_coordinate_bound(h_tilde: &QfiMatrix, m: u64) -> Result<f64> {
    Ok(crb_bounds(h_tilde, m)?.per_parameter[0])
}
