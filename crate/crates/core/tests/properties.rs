use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::TAU;

use strata_lab::determinant::{determinant_poly, verify_inversive_symmetry};
use strata_lab::green::{green_annulus, truncation_terms};
use strata_lab::model::CocycleParams;
use strata_lab::model::{diophantine_check, Frequency, Potential};
use strata_lab::numeric::fmt12;
use strata_lab::spectral::{dirichlet_eigenvalues, sturm_count, IdsSampler};
use strata_lab::zeros::inventory_for;

fn exhaustive_satisfied(freq: &Frequency, c: f64, a: f64, n_max: u64) -> bool {
    (2..=n_max).all(|n| {
        let nf = n as f64;
        freq.torus_dist(n) >= c / (nf * nf.ln().powf(a))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn diophantine_scan_matches_exhaustive(alpha in 0.01f64..0.99, c in 0.001f64..0.5, a in 1.1f64..3.0) {
        let freq = Frequency::new(alpha).unwrap();
        prop_assume!(!freq.is_rational());
        let r = diophantine_check(&freq, c, a, 20_000).unwrap();
        prop_assert_eq!(r.satisfied, exhaustive_satisfied(&freq, c, a, 20_000));
    }

    #[test]
    fn ids_is_monotone(mut es in prop::collection::vec(-5.0f64..5.0, 2..12), lambda in 0.2f64..3.0) {
        let s = IdsSampler::new(&Potential::amo(lambda), &Frequency::golden(), 200, 4).unwrap();
        es.sort_by(f64::total_cmp);
        let v: Vec<f64> = es.iter().map(|&e| s.ids(e).value).collect();
        prop_assert!(v.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn sturm_count_agrees_with_spectrum(theta in 0.0f64..1.0, e in -5.0f64..5.0, n in 1usize..60) {
        let p = Potential::amo(1.5);
        let g = Frequency::golden();
        let s = dirichlet_eigenvalues(&p, &g, theta, n).unwrap();
        let diag: Vec<f64> = (0..n).map(|j| p.eval_phase(theta + g.frac_multiple(j as i64))).collect();
        let below = s.eigenvalues.iter().filter(|&&x| x < e - 1e-9).count();
        let at_most = s.eigenvalues.iter().filter(|&&x| x < e + 1e-9).count();
        let c = sturm_count(&diag, e);
        prop_assert!(below <= c && c <= at_most);
    }

    #[test]
    fn zero_count_monotone_in_eps(e in -6.0f64..6.0, n in 2usize..80) {
        let params = CocycleParams::new(Potential::amo(2.0), Frequency::golden(), e, 0.0, n).unwrap();
        let inv = inventory_for(&params, false).unwrap();
        let counts: Vec<usize> = (0..8).map(|j| inv.count_annulus(0.02 * j as f64).unwrap().count).collect();
        prop_assert!(counts.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(*counts.last().unwrap() <= 2 * n);
    }

    #[test]
    fn determinant_is_self_inversive(e in -6.0f64..6.0, n in 1usize..150, lambda in 0.1f64..4.0) {
        let d = determinant_poly(&Potential::amo(lambda), &Frequency::golden(), e, n).unwrap();
        prop_assert!(verify_inversive_symmetry(&d) < 1e-12);
    }

    #[test]
    fn green_is_symmetric_and_nonpositive(
        lz in -0.3f64..0.3, az in 0.0f64..TAU, lw in -0.3f64..0.3, aw in 0.0f64..TAU,
    ) {
        let r = (TAU * 0.05).exp();
        let k = truncation_terms(r);
        let z = Complex64::from_polar(lz.exp(), az);
        let w = Complex64::from_polar(lw.exp(), aw);
        prop_assume!((z - w).norm() > 1e-6);
        let g1 = green_annulus(z, w, r, k).unwrap();
        let g2 = green_annulus(w, z, r, k).unwrap();
        prop_assert!((g1 - g2).abs() <= 1e-12);
        prop_assert!(g1 <= 1e-12);
    }

    #[test]
    fn fmt12_keeps_twelve_digits(x in prop::num::f64::NORMAL) {
        let y: f64 = fmt12(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 5e-12 * x.abs());
    }
}
