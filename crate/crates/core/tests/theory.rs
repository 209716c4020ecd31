//! Closed forms and eigenvalue bounds on small dense instances.

use paradiag_core::dense::{build_dense, check_spectrum, structural_identities, verify_instance};
use paradiag_core::{b2_inv_symbol, b_symbol, choose_alpha};

#[test]
fn structural_identities_hold_up_to_n64() {
    for n in [1usize, 2, 3, 5, 8, 16, 33, 64] {
        let alpha = choose_alpha(1.0 / n as f64, 1e-2, 1.0).unwrap();
        let set = build_dense(n, 1, 1e-2, alpha, None).unwrap();
        for c in structural_identities(&set).unwrap() {
            assert!(c.passed, "N={n} {}: {:e}", c.name, c.max_deviation);
        }
    }
}

#[test]
fn structural_identities_with_space() {
    let set = build_dense(6, 3, 0.5, 0.05, None).unwrap();
    let checks = structural_identities(&set).unwrap();
    assert_eq!(checks.len(), 8);
    assert!(checks.iter().all(|c| c.passed));
}

#[test]
fn symbols_alternate() {
    let s = b2_inv_symbol(6).unwrap();
    assert_eq!(s.coeffs(), &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
    let q = b_symbol(5).unwrap();
    assert_eq!(q.coeffs(), &[1.0, -2.0, 2.0, -2.0, 2.0]);
}

#[test]
fn spectral_bounds_on_subgrid() {
    // the full grid runs in the acceptance suite
    for n in [2usize, 4, 8] {
        for m in [1usize, 3] {
            for gamma in [1e-6, 1.0] {
                for rec in verify_instance(n, m, gamma).unwrap() {
                    assert!(
                        rec.passed,
                        "N={n} m={m} γ={gamma} {}: [{}, {}]",
                        rec.check, rec.min, rec.max
                    );
                }
            }
        }
    }
}

#[test]
fn msc_bound_at_large_gamma() {
    let set = build_dense(16, 3, 10.0, 0.01, None).unwrap();
    let rep = check_spectrum(&set.p, &set.k, 0.5, 1.0).unwrap();
    assert!(rep.passed(), "[{}, {}]", rep.min, rep.max);
}

#[test]
fn spectrum_checker_flags_violations() {
    let set = build_dense(4, 1, 1.0, 0.1, None).unwrap();
    let rep = check_spectrum(&set.k, &set.p, 1.0, 1.0).unwrap();
    assert!(rep.violations > 0);
    assert!(check_spectrum(&set.k, &set.b, 0.0, 1.0).is_err());
}
