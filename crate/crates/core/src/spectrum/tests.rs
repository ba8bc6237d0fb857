use super::*;
use crate::trig::TrigPoly;
use std::f64::consts::PI;

fn opts() -> IntegratorOptions {
    IntegratorOptions::default()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn tiles(r: &SpectralReport) -> bool {
    let mut pieces: Vec<(f64, f64)> = r.bands.iter().map(|b| (b.lo, b.hi)).collect();
    pieces.extend(r.gaps.iter().map(|g| (g.lower.z, g.upper.z)));
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    pieces.first().map(|p| p.0) == Some(r.window.0)
        && pieces.last().map(|p| p.1) == Some(r.window.1)
        && pieces.windows(2).all(|w| w[0].1 == w[1].0)
}

#[test]
fn free_operator_is_one_band_with_closed_gaps() {
    let r = scan_bands(&Potential::zero(2), (-5.0, 5.0), REAL_GRID_STEP, &opts()).unwrap();
    assert_eq!(r.bands.len(), 1);
    assert!(r.gaps.is_empty());
    assert!(tiles(&r));
    let at: Vec<f64> = r.closed_gaps.iter().map(|g| g.z).collect();
    assert_eq!(at.len(), 3, "{at:?}");
    for (z, want) in at.iter().zip([-PI, 0.0, PI]) {
        assert!((z - want).abs() < 1e-8);
    }
    assert!(r.closed_gaps.iter().all(|g| g.labels[0].multiplicity == 4));
    assert!(r.roots.resonance_degenerate);
}

#[test]
fn scalar_constant_has_the_gap_minus_one_one() {
    let p = Potential::diagonal(&[1.0]).unwrap();
    let r = scan_bands(&p, (-4.0, 4.0), REAL_GRID_STEP, &opts()).unwrap();
    assert_eq!(r.gaps.len(), 1);
    assert!(tiles(&r));
    let g = &r.gaps[0];
    assert!((g.lower.z + 1.0).abs() < 1e-9 && (g.upper.z - 1.0).abs() < 1e-9, "{g:?}");
    assert_eq!(g.lower.labels[0].kind, EndpointKind::Periodic);
    assert!(tiles(&r));
    assert!(r.flags.is_empty(), "{:?}", r.flags);
    let check = gap_sum_check(&r, &p);
    assert!((check.lhs - 4.0).abs() < 1e-8 && check.rhs == 8.0 && check.pass);
}

#[test]
fn unperturbed_example_has_no_gaps_and_mixed_multiplicity() {
    let p = Potential::example_4x4(1.0, 0.0, 0.05).unwrap();
    let r = scan_bands(&p, (0.5, 7.0), REAL_GRID_STEP, &opts()).unwrap();
    assert!(r.gaps.is_empty());
    assert!(r.segments_with(1).count() > 0 && r.segments_with(2).count() > 0);
    // closed gaps at π, 2π (cos z touches ±1) and at the double resonances
    let r1 = PI + 1.0 / (4.0 * PI);
    assert!(r
        .closed_gaps
        .iter()
        .any(|g| (g.z - r1).abs() < 1e-7 && g.labels.iter().any(|l| l.kind == EndpointKind::Resonance)));
}

#[test]
fn narrow_resonance_gap_between_grid_nodes_is_found() {
    let p = Potential::example_4x4(7.0, 0.005, 0.05).unwrap();
    let r = scan_bands(&p, (8.0, 8.5), REAL_GRID_STEP, &opts()).unwrap();
    assert_eq!(r.gaps.len(), 1, "{:?}", r.gaps);
    let g = &r.gaps[0];
    assert!(g.width() < r.grid_step);
    for e in [&g.lower, &g.upper] {
        assert!(e.labels.iter().any(|l| l.kind == EndpointKind::Resonance), "{e:?}");
    }
    assert!(tiles(&r));
}

#[test]
fn free_eigenvalues_sit_at_pi_n_with_full_multiplicity() {
    let list = find_eigenvalues(&Potential::zero(2), EigenKind::Periodic, (-2, 2), &opts()).unwrap();
    let got: Vec<(i64, usize)> = list.roots.iter().map(|r| (r.n, r.multiplicity)).collect();
    assert_eq!(got, vec![(-2, 4), (0, 4), (2, 4)]);
    for r in &list.roots {
        assert!((r.z - PI * r.n as f64).abs() < 1e-8);
    }
}

#[test]
fn unperturbed_example_eigenvalues() {
    let p = Potential::example_4x4(1.0, 0.0, 0.05).unwrap();
    let anti = find_eigenvalues(&p, EigenKind::Antiperiodic, (1, 1), &opts()).unwrap();
    let got: Vec<(f64, usize)> = anti.roots.iter().map(|r| (r.z, r.multiplicity)).collect();
    assert_eq!(got.len(), 2, "{got:?}");
    assert!((got[0].0 - PI).abs() < 1e-8 && got[0].1 == 2);
    assert!((got[1].0 - (PI * PI + 1.0).sqrt()).abs() < 1e-8 && got[1].1 == 2);

    let per = find_eigenvalues(&p, EigenKind::Periodic, (0, 0), &opts()).unwrap();
    let got: Vec<(f64, usize)> = per.roots.iter().map(|r| (r.z, r.multiplicity)).collect();
    assert_eq!(got.len(), 3, "{got:?}");
    assert!((got[0].0 + 1.0).abs() < 1e-9 && got[0].1 == 1);
    assert!(got[1].0.abs() < 1e-8 && got[1].1 == 2);
    assert!((got[2].0 - 1.0).abs() < 1e-9 && got[2].1 == 1);
    assert_eq!(per.cell_counts, vec![(0, 4)]);
}

#[test]
fn double_resonance_of_the_unperturbed_example() {
    let p = Potential::example_4x4(1.0, 0.0, 0.05).unwrap();
    let r1 = PI + 1.0 / (4.0 * PI);
    let list = find_resonances(&p, ResonanceTarget::Disk(Disk::new(c(r1, 0.0), 0.3)), &opts()).unwrap();
    assert_eq!(list.real_roots.len(), 1);
    assert_eq!(list.real_roots[0].multiplicity, 2);
    assert!((list.real_roots[0].z.re - r1).abs() < 1e-7);
    assert!(list.flags.is_empty());
}

#[test]
fn perturbed_resonances_split_by_cell() {
    let p = Potential::example_4x4(7.0, 0.02, 0.05).unwrap();
    let r = |n: f64| PI * n + 49.0 / (4.0 * PI * n);
    let first = find_resonances(&p, ResonanceTarget::Disk(Disk::new(c(r(1.0), 0.0), 0.3)), &opts()).unwrap();
    assert_eq!(first.complex_roots.len(), 2);
    assert!(first.real_roots.is_empty());
    assert!((first.complex_roots[0].z - first.complex_roots[1].z.conj()).norm() < 1e-7);
    let second = find_resonances(&p, ResonanceTarget::Disk(Disk::new(c(r(2.0), 0.0), 0.3)), &opts()).unwrap();
    assert_eq!(second.real_roots.len(), 2);
    assert!(second.real_roots[0].z.re < r(2.0) && r(2.0) < second.real_roots[1].z.re);
}

#[test]
fn free_discriminant_is_reported_degenerate() {
    let list = find_resonances(&Potential::zero(2), ResonanceTarget::Window(0.0, 3.0), &opts()).unwrap();
    assert!(list.degenerate && list.count() == 0);
    assert_eq!(list.flags.len(), 1);
}

#[test]
fn bad_arguments_are_rejected() {
    let p = Potential::zero(1);
    assert!(scan_bands(&p, (1.0, 0.0), REAL_GRID_STEP, &opts()).is_err());
    assert!(scan_bands(&p, (0.0, 1.0), 0.1, &opts()).is_err());
    assert!(find_eigenvalues(&p, EigenKind::Periodic, (3, 1), &opts()).is_err());
}

#[test]
fn narrow_gap_edges_are_labelled_despite_flat_lyapunov_branch() {
    // the third gap of cos 2πt has width 1.6e-3 and a flat Δ at its edges
    let p = Potential::scalar(TrigPoly::cosine(1.0, 1)).unwrap();
    let r = scan_bands(&p, (8.0, 11.0), REAL_GRID_STEP, &IntegratorOptions::default()).unwrap();
    assert!(r.flags.iter().all(|f| !f.is_failure()), "{:?}", r.flags);
    assert_eq!(r.gaps.len(), 1);
    assert!(tiles(&r));
    let g = &r.gaps[0];
    assert!(g.width() > 1e-3 && g.width() < 2e-3);
    for e in [&g.lower, &g.upper] {
        assert_eq!(e.labels[0].kind, EndpointKind::Antiperiodic);
        assert_eq!(e.z, e.labels[0].root);
    }
}
