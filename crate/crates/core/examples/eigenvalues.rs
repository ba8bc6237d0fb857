//! Periodic and antiperiodic eigenvalues cell by cell, compared with the
//! closed forms of the unperturbed 4×4 example.

use floquet_dirac::casestudy::UnperturbedReference;
use floquet_dirac::monodromy::IntegratorOptions;
use floquet_dirac::potential::Potential;
use floquet_dirac::spectrum::{find_eigenvalues, EigenKind};
use std::f64::consts::PI;

fn main() -> floquet_dirac::Result<()> {
    let a = 1.0;
    let p = Potential::example_4x4(a, 0.0, 0.05)?;
    let reference = UnperturbedReference::new(a)?;
    for kind in [EigenKind::Periodic, EigenKind::Antiperiodic] {
        let list = find_eigenvalues(&p, kind, (0, 4), &IntegratorOptions::default())?;
        let want = reference.eigenvalues(kind, -0.5 * PI, 4.5 * PI);
        println!("{}:", kind.name());
        for (root, (w, m)) in list.roots.iter().zip(&want) {
            println!(
                "  cell {:>2}: {:.10} ×{}  (closed form {:.10} ×{m})",
                root.n, root.z, root.multiplicity, w
            );
        }
    }
    Ok(())
}
