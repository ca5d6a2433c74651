//! Monte-Carlo measurement simulation and maximum-likelihood estimation.
//!
//! Repetition `r` of an experiment with seed `s` draws from
//! `ChaCha20Rng::seed_from_u64(s)` switched to stream `r` (rand_chacha 0.3),
//! so each repetition is reproducible on its own and independent of thread
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{born_probs, classical_fisher, Povm, PROB_FLOOR};
use crate::model::{ParamPoint, StateFamily, NORMALIZATION_TOL};
use crate::qfi::qfi_scalar;

pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.3), stream = repetition index";
pub const GRID_POINTS: usize = 256;
pub const GOLDEN_TOL: f64 = 1e-8;

/// Generator for repetition `rep` of a run seeded with `seed`.
pub fn substream(seed: u64, rep: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Multinomial counts via sequential conditional binomials.
pub fn sample_outcomes<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    if probs.is_empty() {
        return Err(Error::NoOutcomes);
    }
    if let Some(&p) = probs.iter().find(|&&p| !p.is_finite() || p < -PROB_FLOOR) {
        return Err(Error::InvalidArgument(format!("invalid outcome probability {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization {
            what: "outcome probabilities",
            deviation: total - 1.0,
        });
    }
    let mut counts = vec![0; probs.len()];
    let mut left = shots;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let last = probs.len() - 1;
    for (k, &p) in probs[..last].iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0);
        let cond = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, cond)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(rng);
        counts[k] = draw;
        left -= draw;
        mass -= p;
    }
    counts[last] += left;
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlEstimate {
    pub lambda: f64,
    pub log_likelihood: f64,
    /// The maximum sits on an end of the search interval.
    pub boundary: bool,
}

fn log_likelihood(probs: &[f64], counts: &[u64]) -> f64 {
    let mut ll = 0.0;
    for (&p, &n) in probs.iter().zip(counts) {
        if n == 0 {
            continue;
        }
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll += n as f64 * p.ln();
    }
    ll
}

/// Likelihood search over a fixed interval; the coarse grid probabilities are
/// computed once and shared by every call to [`MlSearch::estimate`].
pub struct MlSearch<'a> {
    fam: &'a StateFamily,
    povm: &'a Povm,
    lo: f64,
    hi: f64,
    grid: Vec<f64>,
    grid_probs: Vec<Vec<f64>>,
}

impl<'a> MlSearch<'a> {
    pub fn new(fam: &'a StateFamily, povm: &'a Povm, lo: f64, hi: f64) -> Result<Self> {
        fam.require_single()?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "search interval [{lo}, {hi}] is empty"
            )));
        }
        if povm.dim() != fam.dim() {
            return Err(Error::DimensionMismatch {
                expected: fam.dim(),
                got: povm.dim(),
            });
        }
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..GRID_POINTS)
            .map(|k| if k == GRID_POINTS - 1 { hi } else { lo + k as f64 * step })
            .collect();
        let grid_probs = grid
            .iter()
            .map(|&x| probs_at(fam, povm, x))
            .collect::<Result<_>>()?;
        Ok(Self {
            fam,
            povm,
            lo,
            hi,
            grid,
            grid_probs,
        })
    }

    fn ll(&self, x: f64, counts: &[u64]) -> Result<f64> {
        Ok(log_likelihood(&probs_at(self.fam, self.povm, x)?, counts))
    }

    pub fn estimate(&self, counts: &[u64]) -> Result<MlEstimate> {
        if counts.len() != self.povm.len() {
            return Err(Error::DimensionMismatch {
                expected: self.povm.len(),
                got: counts.len(),
            });
        }
        let (best, best_ll) = self
            .grid_probs
            .iter()
            .map(|p| log_likelihood(p, counts))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        if best_ll == f64::NEG_INFINITY {
            return Err(Error::LikelihoodUndefined);
        }
        let a = self.grid[best.saturating_sub(1)];
        let b = self.grid[(best + 1).min(GRID_POINTS - 1)];
        let (mut x, mut ll) = self.golden(a, b, counts)?;
        if best_ll > ll {
            x = self.grid[best];
            ll = best_ll;
        }
        let mut boundary = false;
        for edge in [self.lo, self.hi] {
            if (x - edge).abs() <= 2.0 * GOLDEN_TOL {
                let edge_ll = self.ll(edge, counts)?;
                if edge_ll >= ll {
                    x = edge;
                    ll = edge_ll;
                }
                boundary = true;
            }
        }
        Ok(MlEstimate {
            lambda: x,
            log_likelihood: ll,
            boundary,
        })
    }

    fn golden(&self, mut a: f64, mut b: f64, counts: &[u64]) -> Result<(f64, f64)> {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.ll(c, counts)?;
        let mut fd = self.ll(d, counts)?;
        while b - a > GOLDEN_TOL {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.ll(c, counts)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.ll(d, counts)?;
            }
        }
        let x = 0.5 * (a + b);
        Ok((x, self.ll(x, counts)?))
    }
}

fn probs_at(fam: &StateFamily, povm: &Povm, x: f64) -> Result<Vec<f64>> {
    born_probs(&fam.evaluate(&ParamPoint::scalar(x)?)?, povm)
}

pub fn ml_estimate(fam: &StateFamily, povm: &Povm, counts: &[u64], lo: f64, hi: f64) -> Result<MlEstimate> {
    MlSearch::new(fam, povm, lo, hi)?.estimate(counts)
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub family: StateFamily,
    pub true_lambda: f64,
    pub povm: Povm,
    pub shots: u64,
    pub reps: usize,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        self.family.require_single()?;
        if self.shots == 0 || self.reps == 0 {
            return Err(Error::InvalidArgument(
                "shots and repetitions must both be at least 1".into(),
            ));
        }
        if !(self.lo < self.true_lambda && self.true_lambda < self.hi) {
            return Err(Error::InvalidArgument(format!(
                "true value {} is not inside ({}, {})",
                self.true_lambda, self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub estimates: Vec<f64>,
    pub boundary_hits: usize,
    pub mean: f64,
    /// Reported, not corrected.
    pub bias: f64,
    /// Sample variance with the `R - 1` denominator; zero when `R = 1`.
    pub empirical_var: f64,
    pub fisher: f64,
    pub qfi: f64,
    /// `1 / (M F)`; infinite when the POVM carries no information.
    pub crb_classical: f64,
    /// `1 / (M H)`.
    pub crb_quantum: f64,
    /// `empirical_var / crb_classical`.
    pub ratio_to_crb: f64,
    /// `empirical_var / crb_quantum`.
    pub ratio_to_quantum_crb: f64,
}

pub fn crb_experiment(exp: &Experiment) -> Result<ExperimentReport> {
    exp.validate()?;
    let p = ParamPoint::scalar(exp.true_lambda)?;
    let probs = born_probs(&exp.family.evaluate(&p)?, &exp.povm)?;
    let search = MlSearch::new(&exp.family, &exp.povm, exp.lo, exp.hi)?;

    let runs: Vec<MlEstimate> = (0..exp.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(exp.seed, rep as u64);
            let counts = sample_outcomes(&probs, exp.shots, &mut rng)?;
            search.estimate(&counts)
        })
        .collect::<Result<_>>()?;

    let r = runs.len() as f64;
    let estimates: Vec<f64> = runs.iter().map(|e| e.lambda).collect();
    let boundary_hits = runs.iter().filter(|e| e.boundary).count();
    let mean = estimates.iter().sum::<f64>() / r;
    let empirical_var = if runs.len() > 1 {
        estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0)
    } else {
        0.0
    };

    let fisher = classical_fisher(&exp.family, &exp.povm, &p)?.value;
    let qfi = qfi_scalar(&exp.family, &p)?.h;
    let m = exp.shots as f64;
    let crb_classical = if fisher > 0.0 { 1.0 / (m * fisher) } else { f64::INFINITY };
    let crb_quantum = if qfi > 0.0 { 1.0 / (m * qfi) } else { f64::INFINITY };
    Ok(ExperimentReport {
        boundary_hits,
        mean,
        bias: mean - exp.true_lambda,
        empirical_var,
        fisher,
        qfi,
        crb_classical,
        crb_quantum,
        ratio_to_crb: empirical_var / crb_classical,
        ratio_to_quantum_crb: empirical_var / crb_quantum,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::measure::optimal_povm;

    #[test]
    fn certain_outcome() {
        let mut rng = substream(1, 0);
        assert_eq!(sample_outcomes(&[1.0, 0.0], 100, &mut rng).unwrap(), vec![100, 0]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let probs = [0.2, 0.3, 0.5];
        let a = sample_outcomes(&probs, 1000, &mut substream(42, 3)).unwrap();
        let b = sample_outcomes(&probs, 1000, &mut substream(42, 3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().sum::<u64>(), 1000);
        let c = sample_outcomes(&probs, 1000, &mut substream(42, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fair_coin_within_five_sigma() {
        let counts = sample_outcomes(&[0.5, 0.5], 1_000_000, &mut substream(7, 0)).unwrap();
        assert!((counts[0] as f64 - 500_000.0).abs() <= 2500.0);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut rng = substream(0, 0);
        assert!(sample_outcomes(&[0.5, 0.6], 10, &mut rng).is_err());
        assert!(sample_outcomes(&[1.1, -0.1], 10, &mut rng).is_err());
    }

    #[test]
    fn ml_is_the_frequency() {
        let fam = catalog::diagonal_qubit();
        let povm = Povm::computational(2);
        let est = ml_estimate(&fam, &povm, &[250, 750], 0.0, 1.0).unwrap();
        assert!((est.lambda - 0.25).abs() < 1e-7);
        assert!(!est.boundary);
    }

    #[test]
    fn ml_degenerate_sample_hits_edge() {
        let fam = catalog::diagonal_qubit();
        let povm = Povm::computational(2);
        let est = ml_estimate(&fam, &povm, &[1000, 0], 0.0, 1.0).unwrap();
        assert_eq!(est.lambda, 1.0);
        assert!(est.boundary);
    }

    #[test]
    fn ml_undefined_likelihood() {
        // outcome 1 has probability zero everywhere
        let fam = catalog::diagonal_from_strings(&["1", "0*x"]).unwrap();
        let povm = Povm::computational(2);
        assert!(matches!(
            ml_estimate(&fam, &povm, &[3, 2], 0.2, 0.4),
            Err(Error::LikelihoodUndefined)
        ));
    }

    #[test]
    fn ml_self_consistent_on_rotation() {
        let fam = catalog::rotation_path();
        let star = 0.4;
        let povm = optimal_povm(&fam, &ParamPoint::scalar(star).unwrap()).unwrap();
        let probs = probs_at(&fam, &povm, star).unwrap();
        let counts: Vec<u64> = probs.iter().map(|p| (p * 1e9).round() as u64).collect();
        let est = ml_estimate(&fam, &povm, &counts, 0.1, 1.2).unwrap();
        assert!((est.lambda - star).abs() < 1e-6, "{est:?}");
    }

    fn diagonal_experiment(povm: Povm, shots: u64) -> Experiment {
        Experiment {
            family: catalog::diagonal_qubit(),
            true_lambda: 0.25,
            povm,
            shots,
            reps: 200,
            seed: 2024,
            lo: 0.0,
            hi: 1.0,
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let exp = diagonal_experiment(Povm::computational(2), 200);
        let a = crb_experiment(&exp).unwrap();
        let b = crb_experiment(&exp).unwrap();
        assert_eq!(a, b);
        assert!((a.crb_quantum - 0.1875 / 200.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_true_value_outside_interval() {
        let mut exp = diagonal_experiment(Povm::computational(2), 10);
        exp.true_lambda = 1.0;
        assert!(crb_experiment(&exp).is_err());
    }
}
