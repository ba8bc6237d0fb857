use super::*;
use crate::monodromy::traces;

fn opts() -> IntegratorOptions {
    IntegratorOptions::default()
}

fn cfg(a: f64, taus: &[f64], n_max: usize) -> CaseStudyConfig {
    CaseStudyConfig {
        a,
        tau_values: taus.to_vec(),
        nu: 0.05,
        n_max,
    }
}

#[test]
fn closed_forms_for_a_one() {
    let r = UnperturbedReference::new(1.0).unwrap();
    assert!((r.resonance(1) - 3.2211701).abs() < 1e-7);
    let anti = r.eigenvalues(EigenKind::Antiperiodic, 0.0, 4.0);
    assert_eq!(anti.len(), 2);
    assert!((anti[0].0 - PI).abs() < 1e-15 && anti[0].1 == 2);
    assert!((anti[1].0 - 3.2969083).abs() < 1e-7 && anti[1].1 == 2);
    let per = r.eigenvalues(EigenKind::Periodic, -1.5, 1.5);
    assert_eq!(per, vec![(-1.0, 1), (0.0, 2), (1.0, 1)]);
    // resonances are not eigenvalues
    for (z, _) in r.eigenvalues(EigenKind::Periodic, 0.5, 20.0) {
        assert!(r.rho(C64::new(z, 0.0)).norm() > 1e-10);
    }
    assert!(r.rho(C64::new(r.resonance(3), 0.0)).norm() < 1e-24);
}

#[test]
fn numeric_pipeline_reproduces_the_unperturbed_traces() {
    let r = UnperturbedReference::new(1.0).unwrap();
    let p = Potential::example_4x4(1.0, 0.0, 0.05).unwrap();
    for z in [C64::new(0.3, 0.0), C64::new(4.1, 0.7), C64::new(-2.0, -1.5), C64::new(0.9, 0.0)] {
        let t = traces(&p, z, &opts()).unwrap();
        let scale = (2.0 * z.im.abs()).exp();
        assert!((t.t1 - r.trace(1, z)).norm() < 1e-8 * scale, "{z}");
        assert!((t.t2 - r.trace(2, z)).norm() < 1e-8 * scale, "{z}");
    }
}

#[test]
fn unperturbed_eigenvalues_match_closed_forms() {
    let r = UnperturbedReference::new(1.0).unwrap();
    let p = Potential::example_4x4(1.0, 0.0, 0.05).unwrap();
    for kind in [EigenKind::Periodic, EigenKind::Antiperiodic] {
        let list = find_eigenvalues(&p, kind, (0, 3), &opts()).unwrap();
        let got: Vec<(f64, usize)> = list.roots.iter().map(|c| (c.z, c.multiplicity)).collect();
        let want = r.eigenvalues(kind, -0.5 * PI, 3.5 * PI);
        assert_eq!(got.len(), want.len(), "{got:?} {want:?}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g.0 - w.0).abs() < 1e-8 && g.1 == w.1, "{g:?} {w:?}");
        }
    }
}

#[test]
fn config_errors_name_the_field() {
    let field = |c: CaseStudyConfig| match c.validate() {
        Err(Error::Config { field, .. }) => field,
        other => panic!("{other:?}"),
    };
    assert_eq!(field(cfg(2.0 * PI, &[0.0], 2)), "a");
    assert_eq!(field(cfg(7.0, &[0.01], 2)), "tau_values");
    assert_eq!(field(cfg(7.0, &[0.0, 0.5], 2)), "tau_values");
    assert_eq!(field(cfg(7.0, &[0.0], 0)), "n_max");
    let mut c = cfg(7.0, &[0.0], 2);
    c.nu = 0.5;
    assert_eq!(field(c), "nu");
    assert!(cfg(7.0, &[0.0, 0.02], 3).validate().is_ok());
}

#[test]
fn bifurcation_below_and_above_a_over_two_pi() {
    let records = bifurcation_sweep(&cfg(7.0, &[0.0, 0.01, 0.02], 2), &opts()).unwrap();
    assert_eq!(records.len(), 2);
    let first = &records[0];
    assert!(first.flags.iter().all(|f| !f.is_failure()), "{:?}", first.flags);
    assert_eq!(first.by_tau[0].classification, Classification::Closed);
    assert!(first.by_tau[1..].iter().all(|t| t.classification == Classification::ComplexPair));
    let im: Vec<f64> = first.by_tau[1..].iter().map(|t| t.pair.unwrap().1.im).collect();
    assert!(im[0] > 0.0 && im[1] > im[0]);
    assert!(first.r_estimate.unwrap() < 0.0);

    let second = &records[1];
    assert!(second.flags.iter().all(|f| !f.is_failure()), "{:?}", second.flags);
    for t in &second.by_tau[1..] {
        assert_eq!(t.classification, Classification::RealGap);
        assert_eq!(t.gap_confirmed, Some(true));
    }
    assert!(second.r_estimate.unwrap() > 0.0);
}

#[test]
fn eigenvalue_displacement_shrinks_with_tau() {
    let table = eigenvalue_stability(&cfg(1.0, &[0.0, 0.025, 0.05], 2), &opts()).unwrap();
    assert!(table.unmatched.is_empty(), "{:?}", table.unmatched);
    let d: Vec<f64> = table.per_tau.iter().map(|t| t.max_displacement).collect();
    assert!(d[0] < 1e-8, "{d:?}");
    assert!(table.monotone());
    let ratio = d[2] / d[1];
    assert!(ratio > 1.5 && ratio < 6.0, "{d:?}");
}
