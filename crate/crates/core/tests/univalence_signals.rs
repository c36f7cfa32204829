//! Cross-checks between independent univalence signals on small families.

use gft_core::ball::{extremal_fk, extremal_order, ExtremalParams};
use gft_core::grunsky::{coefficient_bound_check, grunsky_form_norm, grunsky_matrix};
use gft_core::univalence::{numeric_univalence, Overall};
use gft_core::{RunConfig, TruncatedSeries, Verdict};

const N: usize = 12;

fn long(f: TruncatedSeries, len: usize) -> TruncatedSeries {
    if f.order() < len {
        f.resized(len)
    } else {
        f
    }
}

fn maps() -> Vec<(String, TruncatedSeries)> {
    let mut v = vec![
        ("identity".to_owned(), TruncatedSeries::identity(2 * N + 1)),
        ("z + z^2/2".to_owned(), TruncatedSeries::from_real(&[0.0, 1.0, 0.5]).unwrap()),
        ("z + z^2".to_owned(), TruncatedSeries::from_real(&[0.0, 1.0, 1.0]).unwrap()),
        ("z + z^3/3".to_owned(), TruncatedSeries::from_real(&[0.0, 1.0, 0.0, 1.0 / 3.0]).unwrap()),
        ("z + 0.6 z^3".to_owned(), TruncatedSeries::from_real(&[0.0, 1.0, 0.0, 0.6]).unwrap()),
    ];
    for k in [0.2, 0.5, 0.8] {
        let f = extremal_fk(ExtremalParams::with_angle(k, 1.0).unwrap(), extremal_order(k, 4000));
        v.push((format!("fk({k})"), f));
    }
    v.into_iter().map(|(n, f)| (n, long(f, 2 * N + 1))).collect()
}

#[test]
fn boundary_test_agrees_with_grunsky_inequalities() {
    let cfg = RunConfig::default();
    for (name, f) in maps() {
        let geometric = numeric_univalence(&f, &cfg.ladder, cfg.curve_points).unwrap();
        let g = grunsky_matrix(&f, N).unwrap();
        let norm = grunsky_form_norm(&g).unwrap();
        let bound = coefficient_bound_check(&g).verdict;
        match geometric {
            Verdict::Pass => {
                assert!(norm <= 1.0 + 1e-9, "{name}: univalent but form norm {norm}");
                assert_eq!(bound, Verdict::Pass, "{name}");
            }
            Verdict::Fail => assert!(norm > 1.0, "{name}: not univalent but form norm {norm}"),
            Verdict::Indeterminate => panic!("{name}: indeterminate"),
        }
    }
}

#[test]
fn certificates_never_certify_refuted_signals() {
    let cfg = RunConfig::default();
    for (name, f) in maps() {
        let c = gft_core::univalence::biunivalence_certificates(&f, &cfg).unwrap();
        if c.overall == Overall::Certified {
            assert!(c.a2_modulus <= 4.0 / 3.0, "{name}");
            assert_eq!(c.numeric_univalence, Verdict::Pass, "{name}");
        }
    }
}
