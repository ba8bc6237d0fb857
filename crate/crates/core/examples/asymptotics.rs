//! Large-n predictions for eigenvalues and resonances, and their residuals
//! against the numerics.

use floquet_dirac::asymptotics::{predict, validate, Family};
use floquet_dirac::monodromy::IntegratorOptions;
use floquet_dirac::potential::Potential;

fn main() -> floquet_dirac::Result<()> {
    let p = Potential::diagonal(&[1.0, 2.0])?;
    let pr = predict(&p, 5)?;
    println!("n = 5 ({}): ν = {:?}, ζ = {:?}", pr.kind.name(), pr.nu, pr.zeta);
    println!("predicted eigenvalues {:?}", pr.eigenvalues);
    for r in &pr.resonances {
        println!("resonance pair {:?}: center {:.8}, split {:.8} / {:.8}", r.alpha, r.center, r.minus, r.plus);
    }

    let table = validate(&p, (3, 10), &IntegratorOptions::default())?;
    for fam in [Family::Eigenvalue, Family::ResonanceCenter, Family::Resonance] {
        let (first, last) = table.thirds(fam);
        println!("{:<16} residual·n²: first third {first:.3e}, last third {last:.3e}", fam.name());
    }
    Ok(())
}
