//! Parametric state families `lambda -> rho_lambda` and their derivatives.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::numat::{
    self, check_same_dim, hermitian_part, hermitize, max_abs, CMatrix, CVector, EigenSystem,
    MAX_DIM,
};

/// Trace, positivity and Hermiticity tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance for Kraus completeness and for weight/norm normalization.
pub const NORMALIZATION_TOL: f64 = 1e-8;
pub const DEFAULT_STEP: f64 = 1e-5;

/// A validated state: Hermitian, unit trace, positive semidefinite. Keeps the
/// eigen-decomposition it was validated with.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    rho: CMatrix,
    eig: EigenSystem,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eig.values.iter().filter(|&&v| v > tol).count()
    }

    /// `|Tr[rho A]|` is real for Hermitian `A`; this returns the real part.
    pub fn expect(&self, a: &CMatrix) -> f64 {
        numat::trace_product(&self.rho, a).re
    }
}

/// Checks a candidate state and returns a symmetrized copy with round-off
/// negative eigenvalues clamped to zero.
pub fn validate_state(rho: &CMatrix) -> Result<DensityMatrix> {
    let d = numat::check_square(rho)?;
    if d == 0 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    let sym = hermitize(rho)?;
    let trace = numat::trace(&sym).re;
    if (trace - 1.0).abs() > STATE_TOL {
        return Err(Error::Trace { trace });
    }
    let mut eig = numat::eigh(&sym)?;
    let min = eig.values[0];
    if min < -STATE_TOL {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    if min >= 0.0 {
        return Ok(DensityMatrix { rho: sym, eig });
    }
    for v in eig.values.iter_mut() {
        *v = v.max(0.0);
    }
    let rho = hermitian_part(&eig.reconstruct());
    Ok(DensityMatrix { rho, eig })
}

/// Complex scalar given by a pair of real expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexExpr {
    pub re: Expr,
    pub im: Expr,
}

impl ComplexExpr {
    pub fn new(re: Expr, im: Expr) -> Self {
        Self { re, im }
    }

    pub fn constant(z: Complex64) -> Self {
        Self::new(Expr::Num(z.re), Expr::Num(z.im))
    }

    pub fn real(re: Expr) -> Self {
        Self::new(re, Expr::Num(0.0))
    }

    pub fn max_var(&self) -> usize {
        self.re.max_var().max(self.im.max_var())
    }

    pub fn eval(&self, vars: &[f64]) -> Result<Complex64> {
        Ok(Complex64::new(self.re.eval(vars)?, self.im.eval(vars)?))
    }

    fn central(&self, vars: &[f64], mu: usize, h: f64) -> Result<Complex64> {
        if self.max_var() == 0 {
            return Ok(numat::ZERO);
        }
        let (plus, minus, width) = shifted(vars, mu, h);
        Ok((self.eval(&plus)? - self.eval(&minus)?) / width)
    }
}

/// Stencil points and their exact separation, which can differ from `2h`
/// once `x +- h` is rounded.
fn shifted(vars: &[f64], mu: usize, h: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let mut plus = vars.to_vec();
    let mut minus = vars.to_vec();
    plus[mu] += h;
    minus[mu] -= h;
    let width = plus[mu] - minus[mu];
    (plus, minus, width)
}

/// Central-difference derivative of a real expression along parameter `mu`.
pub fn expr_central(e: &Expr, vars: &[f64], mu: usize, h: f64) -> Result<f64> {
    if e.is_constant() {
        return Ok(0.0);
    }
    let (plus, minus, width) = shifted(vars, mu, h);
    Ok((e.eval(&plus)? - e.eval(&minus)?) / width)
}

/// Square matrix of complex expressions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMatrix {
    dim: usize,
    entries: Vec<ComplexExpr>,
}

impl ExprMatrix {
    pub fn new(dim: usize, entries: Vec<ComplexExpr>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn constant(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let entries = (0..dim * dim)
            .map(|k| ComplexExpr::constant(m[(k / dim, k % dim)]))
            .collect();
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_var(&self) -> usize {
        self.entries.iter().map(ComplexExpr::max_var).max().unwrap_or(0)
    }

    pub fn eval(&self, vars: &[f64]) -> Result<CMatrix> {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (k, e) in self.entries.iter().enumerate() {
            m[(k / self.dim, k % self.dim)] = e.eval(vars)?;
        }
        Ok(m)
    }

    pub fn central(&self, vars: &[f64], mu: usize, h: f64) -> Result<CMatrix> {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (k, e) in self.entries.iter().enumerate() {
            m[(k / self.dim, k % self.dim)] = e.central(vars, mu, h)?;
        }
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub enum FamilyKind {
    /// `exp(-i lambda G) rho0 exp(i lambda G)`, single parameter.
    Unitary { generator: CMatrix, base: CMatrix },
    /// `sum_k M_k(lambda) rho0 M_k(lambda)^dag`.
    Kraus {
        operators: Vec<ExprMatrix>,
        base: CMatrix,
    },
    /// `sum_k w_k(lambda) rho_k` with fixed states.
    Mixture { components: Vec<(Expr, CMatrix)> },
    /// `|psi(lambda)><psi(lambda)|`.
    PurePath { vector: Vec<ComplexExpr> },
    /// `diag(p_1(lambda), ..., p_d(lambda))`.
    Diagonal { probabilities: Vec<Expr> },
    /// Every entry given directly.
    Expression { matrix: ExprMatrix },
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Unitary { .. } => "unitary",
            FamilyKind::Kraus { .. } => "kraus",
            FamilyKind::Mixture { .. } => "mixture",
            FamilyKind::PurePath { .. } => "pure_path",
            FamilyKind::Diagonal { .. } => "diagonal",
            FamilyKind::Expression { .. } => "expression",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    /// Structural rules per kind; expression entries are differenced centrally.
    Analytic,
    /// Central difference of the evaluated family.
    CentralDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint(Vec<f64>);

impl ParamPoint {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "parameter values must be finite".into(),
            ));
        }
        Ok(Self(lambda))
    }

    pub fn scalar(lambda: f64) -> Result<Self> {
        Self::new(vec![lambda])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shifted(&self, mu: usize, by: f64) -> Self {
        let mut v = self.0.clone();
        v[mu] += by;
        Self(v)
    }
}

/// A quantum statistical model. Immutable once built.
#[derive(Debug, Clone)]
pub struct StateFamily {
    dim: usize,
    nparams: usize,
    kind: FamilyKind,
    mode: DerivativeMode,
    step: f64,
    generator_eig: Option<EigenSystem>,
}

impl StateFamily {
    pub fn new(dim: usize, nparams: usize, kind: FamilyKind) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if nparams == 0 {
            return Err(Error::InvalidArgument("family needs at least one parameter".into()));
        }
        let check_vars = |max_var: usize| -> Result<()> {
            if max_var > nparams {
                return Err(Error::InvalidArgument(format!(
                    "expression references x{max_var} but the family has {nparams} parameter(s)"
                )));
            }
            Ok(())
        };
        let mut generator_eig = None;
        let mut kind = kind;
        match &mut kind {
            FamilyKind::Unitary { generator, base } => {
                if nparams != 1 {
                    return Err(Error::InvalidArgument(
                        "unitary families take exactly one parameter".into(),
                    ));
                }
                check_same_dim(generator, dim)?;
                *generator = hermitize(generator)?;
                *base = validate_state(base)?.into_matrix();
                check_same_dim(base, dim)?;
                generator_eig = Some(numat::eigh(generator)?);
            }
            FamilyKind::Kraus { operators, base } => {
                if operators.is_empty() {
                    return Err(Error::InvalidArgument("Kraus family needs operators".into()));
                }
                for m in operators.iter() {
                    if m.dim() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: m.dim(),
                        });
                    }
                    check_vars(m.max_var())?;
                }
                *base = validate_state(base)?.into_matrix();
                check_same_dim(base, dim)?;
            }
            FamilyKind::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidArgument("mixture needs components".into()));
                }
                for (w, state) in components.iter_mut() {
                    check_vars(w.max_var())?;
                    *state = validate_state(state)?.into_matrix();
                    check_same_dim(state, dim)?;
                }
            }
            FamilyKind::PurePath { vector } => {
                if vector.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: vector.len(),
                    });
                }
                check_vars(vector.iter().map(ComplexExpr::max_var).max().unwrap_or(0))?;
            }
            FamilyKind::Diagonal { probabilities } => {
                if probabilities.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: probabilities.len(),
                    });
                }
                check_vars(probabilities.iter().map(Expr::max_var).max().unwrap_or(0))?;
            }
            FamilyKind::Expression { matrix } => {
                if matrix.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: matrix.dim(),
                    });
                }
                check_vars(matrix.max_var())?;
            }
        }
        Ok(Self {
            dim,
            nparams,
            kind,
            mode: DerivativeMode::Analytic,
            step: DEFAULT_STEP,
            generator_eig,
        })
    }

    pub fn with_derivative(mut self, mode: DerivativeMode, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "finite-difference step must be positive, got {step}"
            )));
        }
        self.mode = mode;
        self.step = step;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nparams(&self) -> usize {
        self.nparams
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn require_single(&self) -> Result<()> {
        if self.nparams != 1 {
            return Err(Error::InvalidArgument(format!(
                "operation needs a single-parameter family, this one has {}",
                self.nparams
            )));
        }
        Ok(())
    }

    fn check_point(&self, p: &ParamPoint) -> Result<()> {
        if p.len() != self.nparams {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameter value(s), got {}",
                self.nparams,
                p.len()
            )));
        }
        Ok(())
    }

    fn check_mu(&self, mu: usize) -> Result<()> {
        if mu >= self.nparams {
            return Err(Error::InvalidArgument(format!(
                "parameter index {mu} out of range for {} parameter(s)",
                self.nparams
            )));
        }
        Ok(())
    }

    /// `U_lambda = exp(-i lambda G)` for unitary families.
    pub fn unitary_at(&self, lambda: f64) -> Result<CMatrix> {
        match &self.generator_eig {
            Some(eig) => Ok(numat::unitary_exp_from(eig, lambda)),
            None => Err(self.kind_mismatch("unitary")),
        }
    }

    pub(crate) fn kind_mismatch(&self, expected: &'static str) -> Error {
        Error::KindMismatch {
            expected,
            got: self.kind.name(),
        }
    }

    pub fn evaluate(&self, p: &ParamPoint) -> Result<DensityMatrix> {
        self.check_point(p)?;
        validate_state(&self.raw_state(p.values())?)
    }

    /// Unvalidated state at `lambda`, with normalization of weights, norms
    /// and Kraus completeness enforced.
    fn raw_state(&self, lambda: &[f64]) -> Result<CMatrix> {
        match &self.kind {
            FamilyKind::Unitary { base, .. } => {
                let u = self.unitary_at(lambda[0])?;
                Ok(&u * base * u.adjoint())
            }
            FamilyKind::Kraus { operators, base } => {
                let ms = operators
                    .iter()
                    .map(|m| m.eval(lambda))
                    .collect::<Result<Vec<_>>>()?;
                check_kraus_completeness(&ms)?;
                Ok(ms
                    .iter()
                    .fold(CMatrix::zeros(self.dim, self.dim), |acc, m| {
                        acc + m * base * m.adjoint()
                    }))
            }
            FamilyKind::Mixture { components } => {
                let w = components
                    .iter()
                    .map(|(w, _)| w.eval(lambda))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let total = normalized_sum(&w, "mixture weights")?;
                Ok(components
                    .iter()
                    .zip(&w)
                    .fold(CMatrix::zeros(self.dim, self.dim), |acc, ((_, s), &wk)| {
                        acc + s.scale(wk / total)
                    }))
            }
            FamilyKind::PurePath { vector } => {
                let psi = normalized_vector(vector, lambda)?;
                Ok(numat::projector(&psi))
            }
            FamilyKind::Diagonal { probabilities } => {
                let p = probabilities
                    .iter()
                    .map(|e| e.eval(lambda))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let total = normalized_sum(&p, "diagonal probabilities")?;
                let p: Vec<f64> = p.iter().map(|x| x / total).collect();
                Ok(numat::real_diag(&p))
            }
            FamilyKind::Expression { matrix } => matrix.eval(lambda),
        }
    }

    /// Normalized state vector of a pure-path family.
    pub fn pure_vector(&self, p: &ParamPoint) -> Result<CVector> {
        self.check_point(p)?;
        match &self.kind {
            FamilyKind::PurePath { vector } => normalized_vector(vector, p.values()),
            _ => Err(self.kind_mismatch("pure_path")),
        }
    }

    /// Central-difference derivative of the normalized pure-path vector.
    pub fn pure_vector_derivative(&self, p: &ParamPoint, mu: usize) -> Result<CVector> {
        self.check_mu(mu)?;
        let plus = self.pure_vector(&p.shifted(mu, self.step))?;
        let minus = self.pure_vector(&p.shifted(mu, -self.step))?;
        Ok((plus - minus).unscale(2.0 * self.step))
    }

    /// `d rho / d lambda_mu`, Hermitian.
    pub fn derivative(&self, p: &ParamPoint, mu: usize) -> Result<CMatrix> {
        self.check_point(p)?;
        self.check_mu(mu)?;
        let raw = match self.mode {
            DerivativeMode::CentralDifference => self.central_derivative(p, mu)?,
            DerivativeMode::Analytic => self.analytic_derivative(p.values(), mu)?,
        };
        Ok(hermitian_part(&raw))
    }

    fn central_derivative(&self, p: &ParamPoint, mu: usize) -> Result<CMatrix> {
        let h = self.step;
        let (up, down) = (p.shifted(mu, h), p.shifted(mu, -h));
        let width = up.values()[mu] - down.values()[mu];
        let plus = self.evaluate(&up)?;
        let minus = self.evaluate(&down)?;
        Ok((plus.matrix() - minus.matrix()).unscale(width))
    }

    fn analytic_derivative(&self, lambda: &[f64], mu: usize) -> Result<CMatrix> {
        let h = self.step;
        let d = self.dim;
        match &self.kind {
            FamilyKind::Unitary { generator, base } => {
                // d/dl (U rho0 U^dag) = -i U [G, rho0] U^dag
                let u = self.unitary_at(lambda[0])?;
                let c = numat::commutator(generator, base);
                Ok((&u * c * u.adjoint()) * Complex64::new(0.0, -1.0))
            }
            FamilyKind::Kraus { operators, base } => {
                let mut acc = CMatrix::zeros(d, d);
                for m in operators {
                    let mv = m.eval(lambda)?;
                    let dm = m.central(lambda, mu, h)?;
                    let half = &dm * base * mv.adjoint();
                    acc += &half + half.adjoint();
                }
                Ok(acc)
            }
            FamilyKind::Mixture { components } => {
                let (w, dw) = values_and_slopes(components.iter().map(|(w, _)| w), lambda, mu, h)?;
                let scale = normalized_slopes(&w, &dw, "mixture weights")?;
                Ok(components
                    .iter()
                    .zip(scale)
                    .fold(CMatrix::zeros(d, d), |acc, ((_, s), c)| acc + s.scale(c)))
            }
            FamilyKind::PurePath { vector } => {
                // psi/|psi| differentiated with the quotient rule
                let raw: CVector = CVector::from_iterator(
                    d,
                    vector.iter().map(|e| e.eval(lambda)).collect::<Result<Vec<_>>>()?,
                );
                let draw: CVector = CVector::from_iterator(
                    d,
                    vector
                        .iter()
                        .map(|e| e.central(lambda, mu, h))
                        .collect::<Result<Vec<_>>>()?,
                );
                let psi = normalized_vector(vector, lambda)?;
                let norm = raw.norm();
                let radial = raw.dotc(&draw).re / (norm * norm);
                let dpsi = (draw - raw.scale(radial)).unscale(norm);
                let half = numat::outer(&dpsi, &psi);
                Ok(&half + half.adjoint())
            }
            FamilyKind::Diagonal { probabilities } => {
                let (p, dp) = values_and_slopes(probabilities.iter(), lambda, mu, h)?;
                Ok(numat::real_diag(&normalized_slopes(&p, &dp, "diagonal probabilities")?))
            }
            FamilyKind::Expression { matrix } => matrix.central(lambda, mu, h),
        }
    }
}

fn values_and_slopes<'a>(
    exprs: impl Iterator<Item = &'a Expr>,
    lambda: &[f64],
    mu: usize,
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut values = Vec::new();
    let mut slopes = Vec::new();
    for e in exprs {
        values.push(e.eval(lambda)?);
        slopes.push(expr_central(e, lambda, mu, h)?);
    }
    Ok((values, slopes))
}

/// Derivatives of `w_k / sum(w)`.
fn normalized_slopes(w: &[f64], dw: &[f64], what: &'static str) -> Result<Vec<f64>> {
    let total = normalized_sum(w, what)?;
    let dtotal: f64 = dw.iter().sum();
    Ok(w.iter()
        .zip(dw)
        .map(|(&wk, &dwk)| dwk / total - wk * dtotal / (total * total))
        .collect())
}

fn normalized_sum(w: &[f64], what: &'static str) -> Result<f64> {
    let total: f64 = w.iter().sum();
    let deviation = (total - 1.0).abs();
    if deviation > NORMALIZATION_TOL {
        return Err(Error::Normalization { what, deviation });
    }
    Ok(total)
}

fn normalized_vector(vector: &[ComplexExpr], lambda: &[f64]) -> Result<CVector> {
    let v = CVector::from_iterator(
        vector.len(),
        vector
            .iter()
            .map(|e| e.eval(lambda))
            .collect::<Result<Vec<_>>>()?,
    );
    let norm = v.norm();
    let deviation = (norm - 1.0).abs();
    if deviation > NORMALIZATION_TOL {
        return Err(Error::Normalization {
            what: "state vector norm",
            deviation,
        });
    }
    Ok(v.unscale(norm))
}

pub fn check_kraus_completeness(ms: &[CMatrix]) -> Result<()> {
    let d = ms[0].nrows();
    let sum = ms
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, m| acc + m.adjoint() * m);
    let deviation = max_abs(&(sum - numat::identity(d)));
    if deviation > NORMALIZATION_TOL {
        return Err(Error::KrausIncomplete { deviation });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::numat::{from_rows, real_diag};
    use approx::assert_abs_diff_eq;

    fn pt(x: f64) -> ParamPoint {
        ParamPoint::scalar(x).unwrap()
    }

    #[test]
    fn validate_accepts_maximally_mixed() {
        assert!(validate_state(&real_diag(&[0.5, 0.5])).is_ok());
    }

    #[test]
    fn validate_rejects_bad_trace() {
        assert!(matches!(
            validate_state(&real_diag(&[0.5, 0.4])),
            Err(Error::Trace { .. })
        ));
    }

    #[test]
    fn validate_rejects_negative() {
        assert!(matches!(
            validate_state(&real_diag(&[1.2, -0.2])),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn validate_rejects_non_hermitian() {
        let m = from_rows(&[&[(0.5, 0.0), (0.1, 0.0)], &[(0.0, 0.0), (0.5, 0.0)]]);
        assert!(matches!(validate_state(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn validate_clamps_roundoff_negatives() {
        let rho = validate_state(&real_diag(&[1.0 + 1e-11, -1e-11])).unwrap();
        assert!(rho.eigen().values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn unitary_at_zero_is_base() {
        let fam = catalog::phase_plus();
        let rho = fam.evaluate(&pt(0.0)).unwrap();
        let plus = from_rows(&[&[(0.5, 0.0), (0.5, 0.0)], &[(0.5, 0.0), (0.5, 0.0)]]);
        assert_eq!(rho.matrix(), &plus);
    }

    #[test]
    fn diagonal_substitution() {
        let rho = catalog::diagonal_qubit().evaluate(&pt(0.25)).unwrap();
        assert!(max_abs(&(rho.matrix() - real_diag(&[0.25, 0.75]))) < 1e-15);
    }

    #[test]
    fn amplitude_damping_half() {
        // M0 |1><1| M0^dag = (1-x)|1><1|, M1 |1><1| M1^dag = x |0><0|
        let rho = catalog::amplitude_damping().evaluate(&pt(0.5)).unwrap();
        assert!(max_abs(&(rho.matrix() - real_diag(&[0.5, 0.5]))) < 1e-15);
    }

    #[test]
    fn constant_family_has_zero_derivative() {
        let d = catalog::constant_qubit().derivative(&pt(0.3), 0).unwrap();
        assert_eq!(max_abs(&d), 0.0);
    }

    #[test]
    fn diagonal_derivative() {
        for x in [0.1, 0.25, 0.8] {
            let d = catalog::diagonal_qubit().derivative(&pt(x), 0).unwrap();
            assert!(max_abs(&(d - real_diag(&[1.0, -1.0]))) < 1e-9);
        }
    }

    #[test]
    fn unitary_derivative_at_zero() {
        // -i[G, rho0] with G = sz/2, rho0 = |+><+|
        let d = catalog::phase_plus().derivative(&pt(0.0), 0).unwrap();
        let expected = from_rows(&[&[(0.0, 0.0), (0.0, -0.5)], &[(0.0, 0.5), (0.0, 0.0)]]);
        assert!(max_abs(&(d - expected)) < 1e-15);
    }

    #[test]
    fn kraus_incomplete_rejected() {
        let bad = catalog::kraus_from_strings(
            2,
            &[&[&["1", "0"], &["0", "sqrt(1-x)"]], &[&["0", "x"], &["0", "0"]]],
            &real_diag(&[0.0, 1.0]),
        )
        .unwrap();
        assert!(matches!(
            bad.evaluate(&pt(0.5)),
            Err(Error::KrausIncomplete { .. })
        ));
    }

    #[test]
    fn pure_path_norm_checked() {
        let fam = catalog::pure_path_from_strings(&["x", "0"]).unwrap();
        assert!(matches!(
            fam.evaluate(&pt(0.5)),
            Err(Error::Normalization { .. })
        ));
        // within tolerance: renormalized
        let rho = fam.evaluate(&pt(1.0 + 5e-9)).unwrap();
        assert_abs_diff_eq!(numat::trace(rho.matrix()).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_weights_checked() {
        let fam = catalog::diagonal_from_strings(&["x", "x"]).unwrap();
        assert!(matches!(
            fam.evaluate(&pt(0.25)),
            Err(Error::Normalization { .. })
        ));
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(catalog::diagonal_qubit()
            .with_derivative(DerivativeMode::CentralDifference, 0.0)
            .is_err());
    }

    #[test]
    fn wrong_arity_rejected() {
        let fam = catalog::diagonal_qubit();
        assert!(fam.evaluate(&ParamPoint::new(vec![0.1, 0.2]).unwrap()).is_err());
        assert!(fam.derivative(&pt(0.1), 1).is_err());
    }

    #[test]
    fn variable_out_of_range_rejected() {
        assert!(catalog::diagonal_from_strings(&["x2", "1-x2"]).is_err());
    }
}
