//! Monodromy matrix of a small potential, checked against the truncated
//! perturbation series and the symplectic structure.

use floquet_dirac::linalg::det;
use floquet_dirac::monodromy::{integrate, series_psi, symplectic_defect, IntegratorOptions};
use floquet_dirac::potential::Potential;
use floquet_dirac::trig::TrigPoly;
use floquet_dirac::C64;

fn main() -> floquet_dirac::Result<()> {
    let p = Potential::scalar(TrigPoly::cosine(0.15, 1))?;
    let z = C64::new(2.5, 0.4);
    let m = integrate(&p, z, &IntegratorOptions::default())?;
    println!("z = {z}: {} accepted steps, {} rejected", m.steps, m.rejected);
    println!("det ψ = {:.3e}", det(&m.psi)?);
    println!("symplectic defect = {:.3e}", symplectic_defect(&m.psi));
    let s = series_psi(&p, z, 6)?;
    println!(
        "series of order 6: |ψ − sum| = {:.3e}, remainder bound {:.3e}",
        m.psi.max_abs_diff(&s.sum),
        s.remainder_bound
    );
    Ok(())
}
