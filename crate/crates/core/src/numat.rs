//! Dense complex matrix kernel.
//!
//! Everything downstream works with `d x d` complex matrices, `d <= 64`.
//! Storage and arithmetic are nalgebra's. Hermitian eigendecompositions go
//! through faer: nalgebra's complex `SymmetricEigen` leaves reconstruction
//! residuals up to ~1e-7 on random 40 x 40 Hermitian matrices, faer stays
//! near 1e-14. Eigenvalues come out ascending and the input is checked and
//! symmetrized first.

use faer::complex_native::c64;
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest dimension accepted anywhere in the crate.
pub const MAX_DIM: usize = 64;

/// Absolute Hermiticity tolerance (max entry of `A - A^dag`).
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues in `[-EIGEN_CLAMP, 0)` are treated as exact zeros.
pub const EIGEN_CLAMP: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigen-decomposition of a Hermitian matrix. Values ascend; column `k` of
/// `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    /// `V diag(f(values)) V^dag`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = self.dim();
        let mut scaled = self.vectors.clone();
        for k in 0..d {
            let fk = f(self.values[k]);
            scaled.column_mut(k).scale_mut(fk);
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    /// Express `a` in the eigenbasis: `V^dag A V`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * a * &self.vectors
    }

    /// Inverse of [`to_eigenbasis`](Self::to_eigenbasis).
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &self.vectors * a * self.vectors.adjoint()
    }

    /// Smallest distance between consecutive eigenvalues (infinite for d = 1).
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub fn check_same_dim(a: &CMatrix, expected: usize) -> Result<()> {
    let d = check_square(a)?;
    if d != expected {
        return Err(Error::DimensionMismatch { expected, got: d });
    }
    Ok(())
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_asymmetry(a: &CMatrix) -> f64 {
    let d = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Checks Hermiticity within [`HERMITIAN_TOL`] and returns `(A + A^dag)/2`.
pub fn hermitize(a: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asym = max_asymmetry(a);
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            max_asymmetry: asym,
        });
    }
    Ok(hermitian_part(a))
}

/// `(A + A^dag)/2` without any check.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn eigh(a: &CMatrix) -> Result<EigenSystem> {
    let sym = hermitize(a)?;
    let d = sym.nrows();
    if d == 0 {
        return Ok(EigenSystem {
            values: Vec::new(),
            vectors: sym,
        });
    }
    let m = Mat::<c64>::from_fn(d, d, |i, j| {
        let z = sym[(i, j)];
        c64::new(z.re, z.im)
    });
    let raw = m.selfadjoint_eigendecomposition(Side::Lower);
    let (u, s) = (raw.u(), raw.s().column_vector());
    let values = (0..d).map(|k| s.read(k).re).collect();
    let vectors = CMatrix::from_fn(d, d, |i, j| {
        let z = u.read(i, j);
        Complex64::new(z.re, z.im)
    });
    Ok(EigenSystem { values, vectors })
}

/// Real symmetric eigendecomposition, eigenvalues ascending. The caller
/// guarantees symmetry; only the lower triangle is read.
pub fn eigh_real(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = a.nrows();
    let m = Mat::<f64>::from_fn(d, d, |i, j| a[(i, j)]);
    let raw = m.selfadjoint_eigendecomposition(Side::Lower);
    let (u, s) = (raw.u(), raw.s().column_vector());
    let values = (0..d).map(|k| s.read(k)).collect();
    (values, DMatrix::from_fn(d, d, |i, j| u.read(i, j)))
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    let m = Mat::<c64>::from_fn(a.nrows(), a.ncols(), |i, j| {
        let z = a[(i, j)];
        c64::new(z.re, z.im)
    });
    m.singular_values().iter().sum()
}

/// Applies a real scalar function to a Hermitian matrix through its
/// spectrum. `f` signals "undefined" by returning a non-finite value.
pub fn mat_func(a: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let eig = eigh(a)?;
    for &v in &eig.values {
        if !f(v).is_finite() {
            return Err(Error::FunctionDomain { eigenvalue: v });
        }
    }
    Ok(eig.map(f))
}

/// Clamps round-off negatives in `[-EIGEN_CLAMP, 0)` to zero; anything more
/// negative is reported as NaN so callers can raise a domain error.
pub fn clamp_eigenvalue(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else if x >= -EIGEN_CLAMP {
        0.0
    } else {
        f64::NAN
    }
}

/// Principal square root of a PSD matrix.
pub fn sqrtm_psd(a: &CMatrix) -> Result<CMatrix> {
    mat_func(a, |x| clamp_eigenvalue(x).sqrt())
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let d = a.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    let d = values.len();
    let mut m = CMatrix::zeros(d, d);
    for (k, &v) in values.iter().enumerate() {
        m[(k, k)] = Complex64::new(v, 0.0);
    }
    m
}

/// Builds a matrix from row-major `(re, im)` pairs.
pub fn from_rows(rows: &[&[(f64, f64)]]) -> CMatrix {
    let d = rows.len();
    CMatrix::from_fn(d, rows.first().map_or(0, |r| r.len()), |i, j| {
        let (re, im) = rows[i][j];
        Complex64::new(re, im)
    })
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn projector(v: &CVector) -> CMatrix {
    outer(v, v)
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let eig = eigh(h)?;
    Ok(unitary_exp_from(&eig, t))
}

pub fn unitary_exp_from(eig: &EigenSystem, t: f64) -> CMatrix {
    let d = eig.dim();
    let mut scaled = eig.vectors.clone();
    for k in 0..d {
        let phase = Complex64::from_polar(1.0, -t * eig.values[k]);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    &scaled * eig.vectors.adjoint()
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random unitary: Gram-Schmidt on a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let mut m = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    for j in 0..d {
        for k in 0..j {
            let proj = m.column(k).dotc(&m.column(j));
            let col_k = m.column(k).into_owned();
            m.column_mut(j).axpy(-proj, &col_k, ONE);
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
    m
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    hermitian_part(&g)
}

/// Random full-rank density matrix `G G^dag / Tr`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let m = &g * g.adjoint();
    let t = trace(&m).re;
    hermitian_part(&m.unscale(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> CMatrix {
        from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]])
    }

    #[test]
    fn identity_spectrum() {
        let e = eigh(&identity(3)).unwrap();
        for v in &e.values {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs(&(gram - identity(3))) < 1e-12);
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let e = eigh(&real_diag(&[0.75, 0.25])).unwrap();
        assert_abs_diff_eq!(e.values[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(e.values[1], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(e.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pauli_x_eigenvectors() {
        let e = eigh(&pauli_x()).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        // (|0> - |1>)/sqrt 2 up to phase
        let v = e.vector(0);
        let minus = CVector::from_vec(vec![ONE, -ONE]).unscale(2f64.sqrt());
        assert_abs_diff_eq!(minus.dotc(&v).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(0.5, 0.0), (0.0, 0.0)]]);
        match eigh(&a) {
            Err(Error::NotHermitian { max_asymmetry }) => {
                assert_abs_diff_eq!(max_asymmetry, 0.5, epsilon = 1e-15)
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_of_diagonal() {
        let r = sqrtm_psd(&real_diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs(&(r - real_diag(&[2.0, 3.0]))) < 1e-12);
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        let r = sqrtm_psd(&real_diag(&[1.0, -1e-6]));
        assert!(matches!(r, Err(Error::FunctionDomain { .. })));
        // round-off negatives are clamped
        assert!(sqrtm_psd(&real_diag(&[1.0, -1e-13])).is_ok());
    }

    #[test]
    fn mat_func_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(7, &mut rng);
        let b = mat_func(&a, |x| x).unwrap();
        assert!(max_abs(&(b - a)) < 1e-12);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_unitary(9, &mut rng);
        assert!(max_abs(&(u.adjoint() * &u - identity(9))) < 1e-12);
    }

    #[test]
    fn eigh_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(12, &mut rng);
        let e1 = eigh(&a).unwrap();
        let e2 = eigh(&a).unwrap();
        assert_eq!(e1.values, e2.values);
        assert_eq!(e1.vectors, e2.vectors);
    }

    #[test]
    fn unitary_exp_matches_phase() {
        let g = real_diag(&[0.5, -0.5]);
        let u = unitary_exp(&g, 0.3).unwrap();
        assert_abs_diff_eq!((u[(0, 0)] - Complex64::from_polar(1.0, -0.15)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((u[(1, 1)] - Complex64::from_polar(1.0, 0.15)).norm(), 0.0, epsilon = 1e-14);
    }
}
