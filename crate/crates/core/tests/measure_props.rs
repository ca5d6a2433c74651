mod common;

use common::*;
use proptest::prelude::*;
use qmetro::measure::{classical_fisher, optimal_estimator, optimal_povm, random_povm, RandomPovmKind};
use qmetro::numat::trace_product;
use qmetro::qfi::qfi_scalar;
use qmetro::sld;

fn kind(d: usize, pick: usize) -> RandomPovmKind {
    match pick % 3 {
        0 => RandomPovmKind::Projective,
        1 => RandomPovmKind::Binned { bins: 1 + pick % d },
        _ => RandomPovmKind::RankOne { count: d + pick % 4 },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn no_povm_beats_the_qfi(u in 0.0f64..1.0, which in 0usize..8, seed in any::<u64>(), pick in 0usize..12) {
        let (name, fam, range) = scalar_families().swap_remove(which);
        let p = pt(within(range, u));
        let povm = random_povm(fam.dim(), kind(fam.dim(), pick), seed).unwrap();
        let h = qfi_scalar(&fam, &p).unwrap().h;
        if let Ok(f) = classical_fisher(&fam, &povm, &p) {
            prop_assert!(f.value <= h * (1.0 + 1e-8) + 1e-12, "{name}: F = {} > H = {h}", f.value);
        }
    }

    #[test]
    fn random_states_obey_the_chain(seed in any::<u64>(), d in 2usize..5, u in 0.05f64..0.95, pick in 0usize..12) {
        let fam = random_mixture_family(d, seed);
        let p = pt(u);
        let povm = random_povm(d, kind(d, pick), seed.wrapping_add(1)).unwrap();
        let h = qfi_scalar(&fam, &p).unwrap().h;
        let f = classical_fisher(&fam, &povm, &p).unwrap().value;
        prop_assert!(f <= h * (1.0 + 1e-8));
    }

    #[test]
    fn sld_eigenprojectors_are_optimal(u in 0.0f64..1.0, which in 0usize..8) {
        let (name, fam, range) = scalar_families().swap_remove(which);
        let p = pt(within(range, u));
        let h = qfi_scalar(&fam, &p).unwrap().h;
        prop_assume!(h > 1e-6);
        let povm = optimal_povm(&fam, &p).unwrap();
        let f = classical_fisher(&fam, &povm, &p).unwrap().value;
        prop_assert!((f - h).abs() <= 1e-6 * h, "{name}: F = {f}, H = {h}");

        // equality condition: Tr[rho Pi L] is real
        let sol = sld::solve(&fam, &p, 0).unwrap();
        for e in povm.elements() {
            let z = trace_product(&(sol.rho.matrix() * e), sol.sld.matrix());
            prop_assert!(z.im.abs() <= 1e-8, "{name}");
        }
    }

    #[test]
    fn estimator_moments(u in 0.0f64..1.0, which in 0usize..8) {
        let (name, fam, range) = scalar_families().swap_remove(which);
        let lambda = within(range, u);
        let p = pt(lambda);
        let h = qfi_scalar(&fam, &p).unwrap().h;
        prop_assume!(h > 1e-6);
        let est = optimal_estimator(&fam, &p).unwrap();
        let rho = fam.evaluate(&p).unwrap();
        let o = est.matrix();
        let mean = rho.expect(o);
        let var = rho.expect(&(o * o)) - mean * mean;
        prop_assert!((mean - lambda).abs() <= 1e-8, "{name}");
        prop_assert!((var * h - 1.0).abs() <= 1e-6, "{name}");
    }
}
