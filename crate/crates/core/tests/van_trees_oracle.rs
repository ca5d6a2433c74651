mod common;

use common::*;
use qmetro::catalog;
use qmetro::expr::parse;
use qmetro::measure::{random_povm, Povm, RandomPovmKind};
use qmetro::qfi::{van_trees, Prior};

const MEAN: f64 = 0.25;
const SD: f64 = 0.05;
const LO: f64 = 0.05;
const HI: f64 = 0.45;

fn prior() -> Prior {
    let (text, _) = truncated_gaussian(MEAN, SD, LO, HI);
    Prior::new(parse(&text).unwrap(), LO, HI).unwrap()
}

#[test]
fn erf_series_reference_values() {
    assert!((erf_series(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
    assert!((erf_series(4.0 / std::f64::consts::SQRT_2) - 0.999_936_657_516_333_7).abs() < 1e-13);
}

#[test]
fn matches_simpson_oracle() {
    let fam = catalog::diagonal_qubit();
    let prior = prior();
    for m in [1u64, 10, 100] {
        let vt = van_trees(&fam, &prior, m, None).unwrap();
        let oracle = van_trees_oracle(MEAN, SD, LO, HI, m as f64);
        let rel = (vt.z_h - oracle).abs() / oracle;
        assert!(rel < 1e-4, "M={m}: {} vs {oracle} ({rel:e})", vt.z_h);
        assert!((vt.bound * vt.z_h - 1.0).abs() < 1e-15);
    }
}

#[test]
fn bound_decreases_with_measurements() {
    let fam = catalog::diagonal_qubit();
    let prior = prior();
    let bounds: Vec<f64> = [1u64, 10, 100]
        .iter()
        .map(|&m| van_trees(&fam, &prior, m, None).unwrap().bound)
        .collect();
    assert!(bounds.windows(2).all(|w| w[1] < w[0]), "{bounds:?}");
}

#[test]
fn any_povm_gives_less_information() {
    let prior = prior();
    for fam in [catalog::diagonal_qubit(), catalog::rotation_path()] {
        let mut povms = vec![Povm::computational(2)];
        povms.extend((0..5).map(|s| random_povm(2, RandomPovmKind::RankOne { count: 3 }, s).unwrap()));
        for povm in &povms {
            let vt = van_trees(&fam, &prior, 10, Some(povm)).unwrap();
            assert!(vt.z_f <= vt.z_h * (1.0 + 1e-8), "{} > {}", vt.z_f, vt.z_h);
            assert!(vt.mean_fisher <= vt.mean_qfi * (1.0 + 1e-8));
        }
    }
}
