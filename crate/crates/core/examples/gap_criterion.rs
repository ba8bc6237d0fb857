//! Whether infinitely many gaps may open, from the second moments and the
//! Fourier coefficients of v'.

use floquet_dirac::asymptotics::gap_criterion;
use floquet_dirac::potential::Potential;

fn main() -> floquet_dirac::Result<()> {
    for (name, p) in [
        ("diag(1, 2)", Potential::diagonal(&[1.0, 2.0])?),
        ("diag(1, √2, 2)", Potential::diagonal(&[1.0, 2f64.sqrt(), 2.0])?),
        ("4×4 example", Potential::example_4x4(7.0, 0.02, 0.05)?),
    ] {
        match gap_criterion(&p) {
            Ok(g) => println!("{name}: ν = {:.4?} → {}", g.nu, g.verdict.name()),
            Err(e) => println!("{name}: {e}"),
        }
    }
    Ok(())
}
