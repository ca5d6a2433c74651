#![allow(dead_code)]

use qmetro::catalog;
use qmetro::expr::parse;
use qmetro::numat::{self, CMatrix};
use qmetro::{FamilyKind, ParamPoint, StateFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pt(x: f64) -> ParamPoint {
    ParamPoint::scalar(x).unwrap()
}

/// Single-parameter reference families with an interval of valid, interior
/// parameter values.
pub fn scalar_families() -> Vec<(&'static str, StateFamily, (f64, f64))> {
    vec![
        ("diagonal", catalog::diagonal_qubit(), (0.05, 0.95)),
        ("rotation", catalog::rotation_path(), (0.0, 1.5)),
        ("phase_plus", catalog::phase_plus(), (0.0, 6.0)),
        ("unitary_mixed", catalog::unitary_mixed(), (0.0, 6.0)),
        ("amplitude_damping", catalog::amplitude_damping(), (0.1, 0.9)),
        ("mixture", catalog::mixture_qubit(), (0.05, 0.95)),
        ("bloch_expression", catalog::bloch_expression(), (0.0, 6.0)),
        ("phase_path", catalog::phase_path(), (0.0, 6.0)),
    ]
}

pub fn within(range: (f64, f64), u: f64) -> f64 {
    range.0 + (range.1 - range.0) * u
}

/// `exp(-i x G) rho0 exp(i x G)` with random `G` and a random full-rank `rho0`.
pub fn random_unitary_family(d: usize, seed: u64) -> StateFamily {
    let mut r = rng(seed);
    let g = numat::random_hermitian(d, &mut r);
    let base = numat::random_density(d, &mut r);
    catalog::unitary(g, base).unwrap()
}

/// Same, with a random pure `rho0`; also returns the base vector.
pub fn random_pure_unitary_family(d: usize, seed: u64) -> (StateFamily, CMatrix, numat::CVector) {
    let mut r = rng(seed);
    let g = numat::random_hermitian(d, &mut r);
    let mut v = numat::CVector::from_fn(d, |_, _| numat::complex_gaussian(&mut r));
    v.normalize_mut();
    let fam = catalog::unitary(g.clone(), numat::projector(&v)).unwrap();
    (fam, g, v)
}

/// `x rho_1 + (1 - x) rho_2` with random full-rank states.
pub fn random_mixture_family(d: usize, seed: u64) -> StateFamily {
    let mut r = rng(seed);
    let components = vec![
        (parse("x").unwrap(), numat::random_density(d, &mut r)),
        (parse("1-x").unwrap(), numat::random_density(d, &mut r)),
    ];
    StateFamily::new(d, 1, FamilyKind::Mixture { components }).unwrap()
}

/// `x1 rho_1 + x2 rho_2 + (1 - x1 - x2) rho_3`.
pub fn random_two_param_mixture(d: usize, seed: u64) -> StateFamily {
    let mut r = rng(seed);
    let components = vec![
        (parse("x1").unwrap(), numat::random_density(d, &mut r)),
        (parse("x2").unwrap(), numat::random_density(d, &mut r)),
        (parse("1-x1-x2").unwrap(), numat::random_density(d, &mut r)),
    ];
    StateFamily::new(d, 2, FamilyKind::Mixture { components }).unwrap()
}

/// `erf` by its Maclaurin series; fine for |x| below about 4.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x * x / n as f64;
        let next = term / (2 * n + 1) as f64;
        sum += next;
        if next.abs() < 1e-18 {
            break;
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

/// Gaussian (mean, sd) truncated to [lo, hi], as density text plus its normalization.
pub fn truncated_gaussian(mean: f64, sd: f64, lo: f64, hi: f64) -> (String, f64) {
    let s2 = std::f64::consts::SQRT_2;
    let mass = 0.5 * (erf_series((hi - mean) / (sd * s2)) - erf_series((lo - mean) / (sd * s2)));
    let c = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt() * mass);
    (format!("{c:.17e} * exp(-(x - {mean})^2 / {:.17e})", 2.0 * sd * sd), c)
}

/// Composite Simpson rule on `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Van Trees information of the diagonal family under the truncated Gaussian
/// prior, from closed-form integrands on a fixed grid.
pub fn van_trees_oracle(mean: f64, sd: f64, lo: f64, hi: f64, m: f64) -> f64 {
    let (_, c) = truncated_gaussian(mean, sd, lo, hi);
    let z = |x: f64| c * (-(x - mean).powi(2) / (2.0 * sd * sd)).exp();
    let fisher = simpson(|x| z(x) / (x * (1.0 - x)), lo, hi, 10_000);
    let prior = simpson(|x| z(x) * ((x - mean) / (sd * sd)).powi(2), lo, hi, 10_000);
    m * fisher + prior
}
