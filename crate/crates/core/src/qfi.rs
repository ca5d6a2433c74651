//! Scalar quantum Fisher information and the quantities derived from it:
//! classical/quantum split, pure and unitary shortcuts, signal-to-noise
//! figures and the Van Trees bound.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::measure::{self, Povm};
use crate::model::{expr_central, DensityMatrix, FamilyKind, ParamPoint, StateFamily};
use crate::numat::{self, CMatrix, CVector};
use crate::quad;
use crate::sld::{self, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiMethod {
    Generic,
    Pure,
    Unitary,
    Decomposed,
}

impl QfiMethod {
    pub fn name(self) -> &'static str {
        match self {
            QfiMethod::Generic => "generic",
            QfiMethod::Pure => "pure",
            QfiMethod::Unitary => "unitary",
            QfiMethod::Decomposed => "decomposed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiReport {
    pub h: f64,
    /// Fisher information of the eigenvalue distribution (decomposed only).
    pub classical_part: Option<f64>,
    /// Contribution from the motion of the eigenvectors (decomposed only).
    pub quantum_part: Option<f64>,
    pub method: QfiMethod,
}

impl QfiReport {
    fn plain(h: f64, method: QfiMethod) -> Self {
        Self {
            h,
            classical_part: None,
            quantum_part: None,
            method,
        }
    }
}

/// `2 sum_{nm} |<psi_m|d rho|psi_n>|^2 / (rho_n + rho_m)` over admitted pairs.
pub fn qfi_from_state(rho: &DensityMatrix, drho: &CMatrix, rank_tol: f64) -> f64 {
    let eig = rho.eigen();
    let dm = eig.to_eigenbasis(drho);
    let d = rho.dim();
    let mut h = 0.0;
    for m in 0..d {
        for n in 0..d {
            let s = eig.values[m] + eig.values[n];
            if s > rank_tol {
                h += 2.0 * dm[(m, n)].norm_sqr() / s;
            }
        }
    }
    h
}

pub fn qfi_scalar(fam: &StateFamily, p: &ParamPoint) -> Result<QfiReport> {
    fam.require_single()?;
    let rho = fam.evaluate(p)?;
    let drho = fam.derivative(p, 0)?;
    Ok(QfiReport::plain(
        qfi_from_state(&rho, &drho, DEFAULT_RANK_TOL),
        QfiMethod::Generic,
    ))
}

/// The QFI evaluated three ways: the pairwise kernel sum, `Tr[rho L^2]`, and
/// `Tr[d rho L]`.
#[derive(Debug, Clone, Copy)]
pub struct QfiForms {
    pub kernel_sum: f64,
    pub rho_l_squared: f64,
    pub drho_l: f64,
    /// Kernel form of `2 int_0^inf Tr[d rho e^{-rho t} d rho e^{-rho t}] dt`.
    pub basis_independent: f64,
}

pub fn qfi_forms(fam: &StateFamily, p: &ParamPoint, mu: usize) -> Result<QfiForms> {
    let sol = sld::solve(fam, p, mu)?;
    let l = sol.sld.matrix();
    Ok(QfiForms {
        kernel_sum: qfi_from_state(&sol.rho, &sol.drho, DEFAULT_RANK_TOL),
        rho_l_squared: numat::trace_product(sol.rho.matrix(), &(l * l)).re,
        drho_l: numat::trace_product(&sol.drho, l).re,
        basis_independent: qfi_basis_independent(&sol.rho, &sol.drho, DEFAULT_RANK_TOL),
    })
}

/// `2 sum_{nm} Tr[d rho P_n d rho P_m] / (rho_n + rho_m)`, with `P_n` the
/// spectral projectors of `rho`; the time integral of the exponentials is
/// done in closed form.
pub fn qfi_basis_independent(rho: &DensityMatrix, drho: &CMatrix, rank_tol: f64) -> f64 {
    let eig = rho.eigen();
    let d = rho.dim();
    let projected: Vec<CMatrix> = (0..d)
        .map(|k| drho * numat::projector(&eig.vector(k)))
        .collect();
    let mut h = 0.0;
    for n in 0..d {
        for m in 0..d {
            let s = eig.values[n] + eig.values[m];
            if s > rank_tol {
                h += 2.0 * numat::trace_product(&projected[n], &projected[m]).re / s;
            }
        }
    }
    h
}

/// Canonical weight `(rho_n - rho_m)^2 / (rho_n + rho_m)` of the quantum part.
pub fn sigma(rho_n: f64, rho_m: f64) -> f64 {
    let s = rho_n + rho_m;
    if s > DEFAULT_RANK_TOL {
        (rho_n - rho_m).powi(2) / s
    } else {
        0.0
    }
}

/// Eigenvalues and eigenvectors of `rho_lambda` with their central-difference
/// derivatives. Eigenvectors at `lambda +- h` are phase-aligned to the ones
/// at `lambda` before differencing.
#[derive(Debug, Clone)]
pub struct SpectralMotion {
    pub values: Vec<f64>,
    pub dvalues: Vec<f64>,
    pub vectors: Vec<CVector>,
    pub dvectors: Vec<CVector>,
}

/// Minimum eigenvalue gap required by [`spectral_motion`].
pub const SPECTRAL_GAP_TOL: f64 = 1e-8;

pub fn spectral_motion(fam: &StateFamily, p: &ParamPoint) -> Result<SpectralMotion> {
    fam.require_single()?;
    let rho = fam.evaluate(p)?;
    let eig = rho.eigen();
    let gap = eig.min_gap();
    if gap <= SPECTRAL_GAP_TOL {
        return Err(Error::DegenerateSpectrum { gap });
    }
    let h = fam.step();
    let (up, down) = (p.shifted(0, h), p.shifted(0, -h));
    let width = up.values()[0] - down.values()[0];
    let plus = fam.evaluate(&up)?;
    let minus = fam.evaluate(&down)?;
    let d = rho.dim();
    let plus_map = match_spectrum(&eig.values, &plus.eigen().values)?;
    let minus_map = match_spectrum(&eig.values, &minus.eigen().values)?;
    let mut dvalues = Vec::with_capacity(d);
    let mut vectors = Vec::with_capacity(d);
    let mut dvectors = Vec::with_capacity(d);
    for k in 0..d {
        let v = eig.vector(k);
        let vp = aligned(&v, plus.eigen().vector(plus_map[k]));
        let vm = aligned(&v, minus.eigen().vector(minus_map[k]));
        dvalues.push(
            (plus.eigen().values[plus_map[k]] - minus.eigen().values[minus_map[k]]) / width,
        );
        dvectors.push((vp - vm).unscale(width));
        vectors.push(v);
    }
    Ok(SpectralMotion {
        values: eig.values.clone(),
        dvalues,
        vectors,
        dvectors,
    })
}

/// For each reference eigenvalue, the index of the nearest shifted one.
fn match_spectrum(reference: &[f64], shifted: &[f64]) -> Result<Vec<usize>> {
    let mut map = Vec::with_capacity(reference.len());
    let mut used = vec![false; shifted.len()];
    for &r in reference {
        let (best, _) = shifted
            .iter()
            .enumerate()
            .map(|(j, &s)| (j, (s - r).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty spectrum");
        if used[best] {
            return Err(Error::DegenerateSpectrum {
                gap: (shifted[best] - r).abs(),
            });
        }
        used[best] = true;
        map.push(best);
    }
    Ok(map)
}

fn aligned(reference: &CVector, v: CVector) -> CVector {
    let overlap = v.dotc(reference);
    let norm = overlap.norm();
    if norm == 0.0 {
        return v;
    }
    v * (overlap / norm)
}

/// Splits the QFI into the Fisher information of the eigenvalues and the
/// contribution of the rotating eigenbasis. Requires a non-degenerate
/// spectrum.
pub fn qfi_decomposed(fam: &StateFamily, p: &ParamPoint) -> Result<QfiReport> {
    let motion = spectral_motion(fam, p)?;
    let d = motion.values.len();
    let mut classical = 0.0;
    for k in 0..d {
        if motion.values[k] > DEFAULT_RANK_TOL {
            classical += motion.dvalues[k].powi(2) / motion.values[k];
        }
    }
    let mut quantum = 0.0;
    for n in 0..d {
        for m in 0..d {
            if n != m {
                let overlap = motion.vectors[m].dotc(&motion.dvectors[n]);
                quantum += 2.0 * sigma(motion.values[n], motion.values[m]) * overlap.norm_sqr();
            }
        }
    }
    let direct = qfi_scalar(fam, p)?.h;
    let total = classical + quantum;
    if (total - direct).abs() > 1e-6 * direct.max(1.0) {
        return Err(Error::DecompositionMismatch {
            decomposed: total,
            direct,
        });
    }
    Ok(QfiReport {
        h: total,
        classical_part: Some(classical),
        quantum_part: Some(quantum),
        method: QfiMethod::Decomposed,
    })
}

/// `4 [<d psi|d psi> + <d psi|psi>^2]` for pure-path families.
pub fn qfi_pure(fam: &StateFamily, p: &ParamPoint) -> Result<QfiReport> {
    fam.require_single()?;
    let psi = fam.pure_vector(p)?;
    let dpsi = fam.pure_vector_derivative(p, 0)?;
    let overlap = psi.dotc(&dpsi);
    let h = 4.0 * (dpsi.dotc(&dpsi) + overlap * overlap).re;
    Ok(QfiReport::plain(h, QfiMethod::Pure))
}

fn unitary_parts(fam: &StateFamily) -> Result<(&CMatrix, &CMatrix)> {
    match fam.kind() {
        FamilyKind::Unitary { generator, base } => Ok((generator, base)),
        _ => Err(fam.kind_mismatch("unitary")),
    }
}

/// QFI of a unitary family, which does not depend on the parameter. Pure
/// inputs use `4 Var(G)`; mixed inputs use `2 sum_{n != m} sigma_nm |G_nm|^2`
/// in the eigenbasis of `rho_0`.
pub fn qfi_unitary(fam: &StateFamily) -> Result<QfiReport> {
    let (g, base) = unitary_parts(fam)?;
    let eig = numat::eigh(base)?;
    let d = eig.dim();
    let rank = eig.values.iter().filter(|&&v| v > DEFAULT_RANK_TOL).count();
    let h = if rank == 1 {
        let psi = eig.vector(d - 1);
        let g_psi = g * &psi;
        let mean = psi.dotc(&g_psi).re;
        let second = g_psi.dotc(&g_psi).re;
        4.0 * (second - mean * mean)
    } else {
        let gt = eig.to_eigenbasis(g);
        let mut h = 0.0;
        for n in 0..d {
            for m in 0..d {
                if n != m {
                    h += 2.0 * sigma(eig.values[n], eig.values[m]) * gt[(n, m)].norm_sqr();
                }
            }
        }
        h
    };
    Ok(QfiReport::plain(h, QfiMethod::Unitary))
}

/// Variance-plus-correction form of the unitary QFI for mixed inputs:
/// `4 Tr[dG^2 rho0] + 4 sum_n rho_n <n| <G>^2 - 2 G K_n G |n>` with
/// `K_n = sum_m rho_m / (rho_n + rho_m) |m><m|`.
///
/// Expanding both terms in the eigenbasis of `rho0` gives
/// `sum_{nm} |G_nm|^2 [4 rho_n - 8 rho_n rho_m / (rho_n + rho_m)]`, whose
/// symmetrization is `2 (rho_n - rho_m)^2 / (rho_n + rho_m)`, so this agrees
/// with [`qfi_unitary`] whenever every pair sum is positive.
pub fn qfi_unitary_fluctuation_form(fam: &StateFamily) -> Result<f64> {
    let (g, base) = unitary_parts(fam)?;
    let eig = numat::eigh(base)?;
    let d = eig.dim();
    let gt = eig.to_eigenbasis(g);
    let mean: f64 = (0..d).map(|n| eig.values[n] * gt[(n, n)].re).sum();
    let g2 = &gt * &gt;
    let variance: f64 = (0..d).map(|n| eig.values[n] * g2[(n, n)].re).sum::<f64>() - mean * mean;
    let mut correction = 0.0;
    for n in 0..d {
        let mut gkg = 0.0;
        for m in 0..d {
            let s = eig.values[n] + eig.values[m];
            if s > DEFAULT_RANK_TOL {
                gkg += eig.values[m] / s * gt[(n, m)].norm_sqr();
            }
        }
        correction += eig.values[n] * (mean * mean - 2.0 * gkg);
    }
    Ok(4.0 * variance + 4.0 * correction)
}

/// Number of repetitions needed for a given relative error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementCount {
    Finite(u64),
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimability {
    /// Quantum signal-to-noise ratio `lambda^2 H`.
    pub q: f64,
}

impl Estimability {
    /// `M_delta = 9 / (delta^2 Q)`, rounded up, for a 3-sigma interval of
    /// relative half-width `delta`.
    pub fn measurements(&self, delta: f64) -> Result<MeasurementCount> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "relative error must be positive, got {delta}"
            )));
        }
        if self.q <= 0.0 {
            return Ok(MeasurementCount::Unbounded);
        }
        let exact = 9.0 / (delta * delta * self.q);
        let nearest = exact.round();
        // values within round-off of an integer are not bumped up
        let m = if (exact - nearest).abs() <= 1e-9 * exact {
            nearest
        } else {
            exact.ceil()
        };
        if m >= u64::MAX as f64 {
            return Ok(MeasurementCount::Unbounded);
        }
        Ok(MeasurementCount::Finite(m.max(1.0) as u64))
    }
}

pub fn estimability(lambda: f64, h: f64) -> Result<Estimability> {
    if !(h >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need finite lambda and H >= 0, got lambda = {lambda}, H = {h}"
        )));
    }
    Ok(Estimability {
        q: lambda * lambda * h,
    })
}

/// Tolerance for the prior normalization check.
pub const PRIOR_NORM_TOL: f64 = 1e-6;

/// Prior density on a finite interval.
#[derive(Debug, Clone)]
pub struct Prior {
    density: Expr,
    lo: f64,
    hi: f64,
    step: f64,
}

impl Prior {
    pub fn new(density: Expr, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidPrior(format!("bad support [{lo}, {hi}]")));
        }
        if density.max_var() > 1 {
            return Err(Error::InvalidPrior(
                "density may only depend on x (x1)".into(),
            ));
        }
        let prior = Self {
            density,
            lo,
            hi,
            step: 1e-5 * (hi - lo).max(1e-3),
        };
        let mass = quad::integrate(
            |x| {
                let z = prior.density(x)?;
                if z < 0.0 {
                    return Err(Error::InvalidPrior(format!("density negative ({z:.3e}) at {x}")));
                }
                Ok(z)
            },
            lo,
            hi,
            quad::DEFAULT_ABS_TOL,
        )?;
        if (mass.value - 1.0).abs() > PRIOR_NORM_TOL {
            return Err(Error::InvalidPrior(format!(
                "density integrates to {} on [{lo}, {hi}]",
                mass.value
            )));
        }
        Ok(prior)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.density.eval(&[x])?)
    }

    /// `z (d log z)^2 = (dz)^2 / z`.
    fn fisher_integrand(&self, x: f64) -> Result<f64> {
        let z = self.density(x)?;
        let dz = expr_central(&self.density, &[x], 0, self.step)?;
        if z < 0.0 {
            return Err(Error::InvalidPrior(format!("density negative ({z:.3e}) at {x}")));
        }
        if z == 0.0 {
            if dz == 0.0 {
                return Ok(0.0);
            }
            return Err(Error::Quadrature(format!(
                "prior vanishes at {x} with non-zero slope; its Fisher information diverges"
            )));
        }
        Ok(dz * dz / z)
    }

    /// `int z (d log z)^2`.
    pub fn fisher_information(&self) -> Result<f64> {
        Ok(quad::integrate(|x| self.fisher_integrand(x), self.lo, self.hi, quad::DEFAULT_ABS_TOL)?.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanTrees {
    /// `M int z F + int z (d log z)^2` with `F` from the supplied POVM, or
    /// `F = H` when none is given.
    pub z_f: f64,
    /// Same with `F` replaced by the QFI.
    pub z_h: f64,
    pub prior_information: f64,
    pub mean_fisher: f64,
    pub mean_qfi: f64,
    /// `1 / Z_H`.
    pub bound: f64,
}

/// Bayesian (Van Trees) bound for `m` repetitions. The averaged Fisher term
/// carries the factor `m`; the prior term does not.
pub fn van_trees(fam: &StateFamily, prior: &Prior, m: u64, povm: Option<&Povm>) -> Result<VanTrees> {
    fam.require_single()?;
    if m == 0 {
        return Err(Error::InvalidArgument("number of measurements must be positive".into()));
    }
    let (lo, hi) = prior.support();
    let weighted = |f: &dyn Fn(&ParamPoint) -> Result<f64>| {
        quad::integrate(
            |x| {
                let z = prior.density(x)?;
                if z == 0.0 {
                    return Ok(0.0);
                }
                Ok(z * f(&ParamPoint::scalar(x)?)?)
            },
            lo,
            hi,
            quad::DEFAULT_ABS_TOL,
        )
        .map(|q| q.value)
    };
    let mean_qfi = weighted(&|p| Ok(qfi_scalar(fam, p)?.h))?;
    let mean_fisher = match povm {
        Some(povm) => weighted(&|p| Ok(measure::classical_fisher(fam, povm, p)?.value))?,
        None => mean_qfi,
    };
    let prior_information = prior.fisher_information()?;
    let mf = m as f64;
    let z_h = mf * mean_qfi + prior_information;
    let z_f = mf * mean_fisher + prior_information;
    if !(z_h > 0.0) {
        return Err(Error::NoInformation(z_h));
    }
    Ok(VanTrees {
        z_f,
        z_h,
        prior_information,
        mean_fisher,
        mean_qfi,
        bound: 1.0 / z_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::expr::parse;
    use std::f64::consts::FRAC_PI_4;

    fn pt(x: f64) -> ParamPoint {
        ParamPoint::scalar(x).unwrap()
    }

    #[test]
    fn diagonal_qfi() {
        let r = qfi_scalar(&catalog::diagonal_qubit(), &pt(0.25)).unwrap();
        assert!((r.h - 16.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn constant_qfi() {
        assert_eq!(qfi_scalar(&catalog::constant_qubit(), &pt(0.25)).unwrap().h, 0.0);
    }

    #[test]
    fn phase_plus_qfi() {
        let r = qfi_scalar(&catalog::phase_plus(), &pt(0.4)).unwrap();
        assert!((r.h - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decomposed_diagonal() {
        let r = qfi_decomposed(&catalog::diagonal_qubit(), &pt(0.25)).unwrap();
        assert!((r.classical_part.unwrap() - 16.0 / 3.0).abs() < 1e-7);
        assert!(r.quantum_part.unwrap().abs() < 1e-9);
    }

    #[test]
    fn decomposed_rotation_path() {
        let r = qfi_decomposed(&catalog::rotation_path(), &pt(0.6)).unwrap();
        assert!(r.classical_part.unwrap().abs() < 1e-9);
        assert!((r.quantum_part.unwrap() - 4.0).abs() < 1e-7);
    }

    #[test]
    fn decomposed_constant() {
        let r = qfi_decomposed(&catalog::constant_qubit(), &pt(0.6)).unwrap();
        assert_eq!(r.classical_part, Some(0.0));
        assert_eq!(r.quantum_part, Some(0.0));
    }

    #[test]
    fn decomposed_rejects_degenerate() {
        assert!(matches!(
            qfi_decomposed(&catalog::amplitude_damping(), &pt(0.5)),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn pure_rotation() {
        for x in [0.2, FRAC_PI_4, 1.3] {
            let r = qfi_pure(&catalog::rotation_path(), &pt(x)).unwrap();
            assert!((r.h - 4.0).abs() < 1e-8);
        }
    }

    #[test]
    fn pure_constant() {
        let fam = catalog::pure_path_from_strings(&["0.6", "0.8"]).unwrap();
        assert_eq!(qfi_pure(&fam, &pt(0.3)).unwrap().h, 0.0);
    }

    #[test]
    fn pure_phase_path_matches_unitary() {
        let pure = qfi_pure(&catalog::phase_path(), &pt(0.9)).unwrap().h;
        let unitary = qfi_unitary(&catalog::phase_plus()).unwrap().h;
        assert!((pure - 1.0).abs() < 1e-8);
        assert!((unitary - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_eigenstate_has_zero_qfi() {
        let fam = catalog::unitary(numat::real_diag(&[0.5, -0.5]), numat::real_diag(&[1.0, 0.0])).unwrap();
        assert!(qfi_unitary(&fam).unwrap().h.abs() < 1e-15);
    }

    #[test]
    fn unitary_mixed_qfi() {
        assert!((qfi_unitary(&catalog::unitary_mixed()).unwrap().h - 0.25).abs() < 1e-12);
    }

    #[test]
    fn estimability_values() {
        let e = estimability(0.25, 16.0 / 3.0).unwrap();
        assert!((e.q - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.measurements(0.1).unwrap(), MeasurementCount::Finite(2700));
        let zero = estimability(0.0, 5.0).unwrap();
        assert_eq!(zero.q, 0.0);
        assert_eq!(zero.measurements(0.1).unwrap(), MeasurementCount::Unbounded);
        assert!(e.measurements(0.0).is_err());
        assert!(estimability(0.3, -1.0).is_err());
    }

    #[test]
    fn prior_must_be_normalized() {
        assert!(matches!(
            Prior::new(parse("2").unwrap(), 0.0, 1.0),
            Err(Error::InvalidPrior(_))
        ));
        assert!(Prior::new(parse("1").unwrap(), 0.0, 1.0).is_ok());
    }

    #[test]
    fn van_trees_constant_family() {
        // linear density, strictly positive on its support
        let z = parse("x/0.375").unwrap();
        let prior = Prior::new(z, 0.5, 1.0).unwrap();
        let vt = van_trees(&catalog::constant_qubit(), &prior, 10, None).unwrap();
        // int (1/0.375)^2 / (x/0.375) = (1/0.375) ln 2
        let expected = std::f64::consts::LN_2 / 0.375;
        assert!((vt.z_h - expected).abs() < 1e-7);
        assert_eq!(vt.mean_qfi, 0.0);
    }
}
