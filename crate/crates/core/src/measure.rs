//! POVMs, Born-rule probabilities, classical Fisher information, the optimal
//! (SLD-eigenprojector) measurement and the optimal unbiased estimator.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{DensityMatrix, ParamPoint, StateFamily};
use crate::numat::{self, max_abs, CMatrix};
use crate::qfi::qfi_scalar;
use crate::sld;

pub const POVM_PSD_TOL: f64 = 1e-10;
pub const POVM_SUM_TOL: f64 = 1e-8;
/// Outcomes with probability at or below this are left out of Fisher sums.
pub const PROB_FLOOR: f64 = 1e-12;
/// SLD eigenvalues closer than this share one projector.
pub const EIGEN_MERGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<CMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        if labels.len() != elements.len() {
            return Err(Error::InvalidPovm(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        let d = numat::check_square(&elements[0])?;
        let mut sum = CMatrix::zeros(d, d);
        let mut checked = Vec::with_capacity(elements.len());
        for (k, e) in elements.into_iter().enumerate() {
            numat::check_same_dim(&e, d)?;
            let e = numat::hermitize(&e)?;
            let min = numat::eigh(&e)?.values[0];
            if min < -POVM_PSD_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {k} has eigenvalue {min:.3e}"
                )));
            }
            sum += &e;
            checked.push(e);
        }
        let deviation = max_abs(&(sum - numat::identity(d)));
        if deviation > POVM_SUM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {deviation:.3e}"
            )));
        }
        Ok(Self {
            elements: checked,
            labels,
        })
    }

    /// Elements without labels; outcomes are numbered.
    pub fn unlabeled(elements: Vec<CMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).map(|k| k.to_string()).collect();
        Self::new(elements, labels)
    }

    /// Projective measurement in the computational basis.
    pub fn computational(d: usize) -> Self {
        let elements = (0..d)
            .map(|k| {
                let mut p = CMatrix::zeros(d, d);
                p[(k, k)] = numat::ONE;
                p
            })
            .collect();
        Self::unlabeled(elements).expect("computational basis is a POVM")
    }

    /// The single-outcome measurement `{I}`.
    pub fn trivial(d: usize) -> Self {
        Self::unlabeled(vec![numat::identity(d)]).expect("identity is a POVM")
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// `p_x = Tr[Pi_x rho]`.
pub fn born_probs(rho: &DensityMatrix, povm: &Povm) -> Result<Vec<f64>> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: povm.dim(),
        });
    }
    povm.elements()
        .iter()
        .map(|e| {
            let p = rho.expect(e);
            if p >= 0.0 {
                Ok(p)
            } else if p >= -PROB_FLOOR {
                Ok(0.0)
            } else {
                Err(Error::InvalidPovm(format!("negative probability {p:.3e}")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalFisher {
    pub value: f64,
    /// Outcomes left out because `p_x <= PROB_FLOOR`.
    pub skipped: Vec<usize>,
    /// Whether any skipped outcome had a non-zero probability slope, i.e. the
    /// point sits on a boundary of the support.
    pub boundary: bool,
}

/// `F = sum_x (Tr[d rho Pi_x])^2 / Tr[rho Pi_x]` for a given state and
/// derivative.
pub fn fisher_from_state(rho: &DensityMatrix, drho: &CMatrix, povm: &Povm) -> Result<ClassicalFisher> {
    let probs = born_probs(rho, povm)?;
    let mut value = 0.0;
    let mut skipped = Vec::new();
    let mut boundary = false;
    for (x, (e, &p)) in povm.elements().iter().zip(&probs).enumerate() {
        let dp = numat::trace_product(drho, e).re;
        if p <= PROB_FLOOR {
            skipped.push(x);
            boundary |= dp.abs() > PROB_FLOOR;
            continue;
        }
        value += dp * dp / p;
    }
    if skipped.len() == probs.len() {
        return Err(Error::NoOutcomes);
    }
    Ok(ClassicalFisher {
        value,
        skipped,
        boundary,
    })
}

pub fn classical_fisher(fam: &StateFamily, povm: &Povm, p: &ParamPoint) -> Result<ClassicalFisher> {
    fam.require_single()?;
    classical_fisher_param(fam, povm, p, 0)
}

/// Diagonal entry `F_{mu mu}` of the classical Fisher matrix.
pub fn classical_fisher_param(
    fam: &StateFamily,
    povm: &Povm,
    p: &ParamPoint,
    mu: usize,
) -> Result<ClassicalFisher> {
    let rho = fam.evaluate(p)?;
    let drho = fam.derivative(p, mu)?;
    fisher_from_state(&rho, &drho, povm)
}

/// Full classical Fisher matrix `F_{mu nu} = sum_x dp_mu dp_nu / p`.
pub fn classical_fisher_matrix(fam: &StateFamily, povm: &Povm, p: &ParamPoint) -> Result<DMatrix<f64>> {
    let rho = fam.evaluate(p)?;
    let probs = born_probs(&rho, povm)?;
    let n = fam.nparams();
    let slopes = (0..n)
        .map(|mu| {
            let drho = fam.derivative(p, mu)?;
            Ok(povm
                .elements()
                .iter()
                .map(|e| numat::trace_product(&drho, e).re)
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(n, n, |a, b| {
        probs
            .iter()
            .enumerate()
            .filter(|(_, &px)| px > PROB_FLOOR)
            .map(|(x, &px)| slopes[a][x] * slopes[b][x] / px)
            .sum()
    }))
}

/// Eigenprojectors of a Hermitian operator, merging eigenvalues closer than
/// [`EIGEN_MERGE_TOL`]. Labels carry the eigenvalue.
pub fn eigenprojectors(op: &CMatrix) -> Result<Povm> {
    let eig = numat::eigh(op)?;
    let d = eig.dim();
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eig.values[end] - eig.values[end - 1] <= EIGEN_MERGE_TOL {
            end += 1;
        }
        let mut proj = CMatrix::zeros(d, d);
        for k in start..end {
            proj += numat::projector(&eig.vector(k));
        }
        let mean = eig.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        elements.push(proj);
        labels.push(format!("{mean:.12e}"));
        start = end;
    }
    Povm::new(elements, labels)
}

/// Projectors onto the eigenspaces of the SLD, which attain `F = H`.
pub fn optimal_povm(fam: &StateFamily, p: &ParamPoint) -> Result<Povm> {
    fam.require_single()?;
    optimal_povm_param(fam, p, 0)
}

pub fn optimal_povm_param(fam: &StateFamily, p: &ParamPoint, mu: usize) -> Result<Povm> {
    let sol = sld::solve(fam, p, mu)?;
    eigenprojectors(sol.sld.matrix())
}

#[derive(Debug, Clone)]
pub struct EstimatorOp {
    op: CMatrix,
    at_lambda: f64,
    qfi: f64,
}

impl EstimatorOp {
    pub fn matrix(&self) -> &CMatrix {
        &self.op
    }

    pub fn at_lambda(&self) -> f64 {
        self.at_lambda
    }

    pub fn qfi(&self) -> f64 {
        self.qfi
    }
}

/// Below this QFI the optimal estimator is undefined.
pub const MIN_INFORMATION: f64 = 1e-12;

/// `O = lambda I + L / H`: unbiased at `lambda` with variance `1/H`.
pub fn optimal_estimator(fam: &StateFamily, p: &ParamPoint) -> Result<EstimatorOp> {
    fam.require_single()?;
    let sol = sld::solve(fam, p, 0)?;
    let h = qfi_scalar(fam, p)?.h;
    if h <= MIN_INFORMATION {
        return Err(Error::NoInformation(h));
    }
    let lambda = p.values()[0];
    let op = numat::identity(fam.dim()).scale(lambda) + sol.sld.matrix().unscale(h);
    Ok(EstimatorOp {
        op,
        at_lambda: lambda,
        qfi: h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomPovmKind {
    /// Rank-one projectors of a Haar-random basis.
    Projective,
    /// A Haar-random basis grouped into `bins` coarse-grained projectors.
    Binned { bins: usize },
    /// `count` random rank-one effects `S^{-1/2} a a^dag S^{-1/2}`.
    RankOne { count: usize },
}

/// Seeded random POVM.
pub fn random_povm(d: usize, kind: RandomPovmKind, seed: u64) -> Result<Povm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        RandomPovmKind::Projective => {
            let u = numat::random_unitary(d, &mut rng);
            let elements = (0..d)
                .map(|k| numat::projector(&u.column(k).into_owned()))
                .collect();
            Povm::unlabeled(elements)
        }
        RandomPovmKind::Binned { bins } => {
            if bins == 0 || bins > d {
                return Err(Error::InvalidArgument(format!(
                    "bins must be in 1..={d}, got {bins}"
                )));
            }
            let u = numat::random_unitary(d, &mut rng);
            let mut order: Vec<usize> = (0..d).collect();
            order.shuffle(&mut rng);
            let mut elements = vec![CMatrix::zeros(d, d); bins];
            // the first `bins` columns seed one bin each so none is empty
            for (slot, &k) in order.iter().enumerate() {
                let bin = if slot < bins {
                    slot
                } else {
                    rand::Rng::gen_range(&mut rng, 0..bins)
                };
                elements[bin] += numat::projector(&u.column(k).into_owned());
            }
            Povm::unlabeled(elements)
        }
        RandomPovmKind::RankOne { count } => {
            if count < d {
                return Err(Error::InvalidArgument(format!(
                    "need at least {d} rank-one effects, got {count}"
                )));
            }
            let raw: Vec<CMatrix> = (0..count)
                .map(|_| {
                    let v = numat::CVector::from_fn(d, |_, _| numat::complex_gaussian(&mut rng));
                    numat::projector(&v)
                })
                .collect();
            let total = raw.iter().fold(CMatrix::zeros(d, d), |acc, a| acc + a);
            let inv_sqrt = numat::mat_func(&total, |x| if x > 0.0 { x.sqrt().recip() } else { f64::NAN })?;
            let elements = raw
                .iter()
                .map(|a| numat::hermitian_part(&(&inv_sqrt * a * &inv_sqrt)))
                .collect();
            Povm::unlabeled(elements)
        }
    }
}
