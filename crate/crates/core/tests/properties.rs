use floquet_dirac::asymptotics::predict;
use floquet_dirac::linalg::det;
use floquet_dirac::monodromy::{integrate, symplectic_defect, IntegratorOptions};
use floquet_dirac::potential::{normal_form, Potential};
use floquet_dirac::spectrum::{gap_sum_check, scan_bands};
use floquet_dirac::tolerances::REAL_GRID_STEP;
use floquet_dirac::trig::TrigPoly;
use floquet_dirac::C64;
use proptest::prelude::*;

fn opts() -> IntegratorOptions {
    IntegratorOptions::default()
}

/// Symmetric v with degree-1 entries; `coeffs` supplies (re, im) pairs.
fn potential_from(n: usize, coeffs: &[(f64, f64)]) -> Potential {
    let mut it = coeffs.iter().cycle();
    let mut entries = vec![TrigPoly::zero(); n * n];
    for j in 0..n {
        for k in j..n {
            let terms: Vec<(i64, C64)> = (-1..=1)
                .map(|m| {
                    let &(re, im) = it.next().unwrap();
                    (m, C64::new(re, im))
                })
                .collect();
            let e = TrigPoly::from_terms(&terms);
            entries[j * n + k] = e.clone();
            entries[k * n + j] = e;
        }
    }
    Potential::new(n, entries).unwrap()
}

fn potentials() -> impl Strategy<Value = Potential> {
    (1usize..=2, prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9))
        .prop_map(|(n, c)| potential_from(n, &c))
}

fn points() -> impl Strategy<Value = C64> {
    (-12.0f64..12.0, -2.0f64..2.0).prop_map(|(re, im)| C64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monodromy_is_symplectic_with_unit_determinant(p in potentials(), z in points()) {
        let m = integrate(&p, z, &opts()).unwrap();
        let scale = (2.0 * z.im.abs()).exp();
        prop_assert!(symplectic_defect(&m.psi) <= 1e-8 * scale);
        prop_assert!((det(&m.psi).unwrap() - 1.0).norm() <= 1e-8 * scale);
    }

    #[test]
    fn trace_is_conjugate_symmetric(p in potentials(), z in points()) {
        let up = integrate(&p, z, &opts()).unwrap().psi.trace();
        let down = integrate(&p, z.conj(), &opts()).unwrap().psi.trace();
        prop_assert!((up - down.conj()).norm() <= 1e-9 * (1.0 + up.norm()));
    }

    #[test]
    fn normal_form_keeps_the_monodromy_trace(p in potentials(), z in points()) {
        let q = normal_form(&p).unwrap().potential;
        let a = integrate(&p, z, &opts()).unwrap().psi.trace();
        let b = integrate(&q, z, &opts()).unwrap().psi.trace();
        prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
    }

    #[test]
    fn predicted_zeta_is_real(p in potentials(), n in 1i64..8) {
        let pr = predict(&p, n).unwrap();
        prop_assert!(pr.zeta_imag <= 1e-10, "{}", pr.zeta_imag);
        prop_assert!(pr.nu.windows(2).all(|w| w[0] <= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn bands_and_gaps_interleave(p in potentials(), lo in -4.0f64..0.0) {
        let r = scan_bands(&p, (lo, lo + 4.0), REAL_GRID_STEP, &opts()).unwrap();
        for b in &r.bands {
            prop_assert!(b.lo <= b.hi);
        }
        for w in r.bands.windows(2) {
            prop_assert!(w[0].hi < w[1].lo);
            prop_assert!(r.gaps.iter().any(|g| (g.lower.z - w[0].hi).abs() < 1e-12 && (g.upper.z - w[1].lo).abs() < 1e-12));
        }
        for g in &r.gaps {
            prop_assert!(g.width() > 0.0);
            prop_assert!(!r.bands.iter().any(|b| b.lo < g.upper.z && g.lower.z < b.hi));
        }
        prop_assert!(gap_sum_check(&r, &p).pass);
    }
}
