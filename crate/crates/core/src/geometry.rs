//! Uhlmann fidelity, Bures distance, and a finite-difference check that the
//! Bures metric equals a quarter of the QFI.

use crate::error::{Error, Result};
use crate::model::{DensityMatrix, ParamPoint, StateFamily};
use crate::numat;
use crate::qfi::qfi_scalar;
use crate::sld::DEFAULT_RANK_TOL;

/// Floor of the relative-error denominator.
pub const REL_ERR_FLOOR: f64 = 1e-12;

/// `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, evaluated as the squared trace
/// norm of `sqrt(rho) sqrt(sigma)`. The eigenvalue route takes square roots of
/// round-off in the null space, which costs ~1e-8 for pure states.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let a = rho.eigen().map(|v| v.max(0.0).sqrt());
    let b = sigma.eigen().map(|v| v.max(0.0).sqrt());
    let t = numat::trace_norm(&(a * b));
    Ok(t * t)
}

/// `2 (1 - sqrt F)`, floored at zero.
pub fn bures_distance_sq(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((2.0 * (1.0 - f.sqrt())).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuresReport {
    /// Fidelity between `rho_lambda` and `rho_{lambda + step}`.
    pub fidelity: f64,
    pub bures_sq: f64,
    /// Richardson-refined `D_B^2 / step^2`.
    pub metric_fd: f64,
    /// Unrefined one-sided quotients at `step` and `step / 2`.
    pub metric_step: f64,
    pub metric_half_step: f64,
    pub qfi_quarter: f64,
    pub rel_err: f64,
    pub warnings: Vec<String>,
}

pub const MIN_STEP: f64 = 1e-6;
pub const MAX_STEP: f64 = 1e-2;

pub fn bures_metric_check(fam: &StateFamily, p: &ParamPoint, step: f64) -> Result<BuresReport> {
    fam.require_single()?;
    if !(MIN_STEP..=MAX_STEP).contains(&step) {
        return Err(Error::InvalidArgument(format!(
            "step must lie in [{MIN_STEP:e}, {MAX_STEP:e}], got {step}"
        )));
    }
    let rho = fam.evaluate(p)?;
    let far = fam.evaluate(&p.shifted(0, step))?;
    let near = fam.evaluate(&p.shifted(0, 0.5 * step))?;

    let fid = fidelity(&rho, &far)?;
    let bures_sq = (2.0 * (1.0 - fid.sqrt())).max(0.0);
    let metric_step = bures_sq / (step * step);
    let metric_half_step = bures_distance_sq(&rho, &near)? / (0.25 * step * step);
    // the one-sided quotient is g + c step + O(step^2)
    let metric_fd = 2.0 * metric_half_step - metric_step;

    let qfi_quarter = qfi_scalar(fam, p)?.h / 4.0;
    let rel_err = (metric_fd - qfi_quarter).abs() / qfi_quarter.max(REL_ERR_FLOOR);

    let mut warnings = Vec::new();
    let ranks = [&rho, &near, &far].map(|r| r.rank(DEFAULT_RANK_TOL));
    if ranks.iter().any(|&r| r != ranks[0]) {
        warnings.push(format!(
            "rank changes across the difference stencil ({} -> {} -> {}); the metric/QFI identity may fail at a support boundary",
            ranks[0], ranks[1], ranks[2]
        ));
    }
    Ok(BuresReport {
        fidelity: fid,
        bures_sq,
        metric_fd,
        metric_step,
        metric_half_step,
        qfi_quarter,
        rel_err,
        warnings,
    })
}
