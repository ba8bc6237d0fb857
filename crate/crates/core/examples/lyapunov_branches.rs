//! Branches Δ_j of the Lyapunov function along a real segment, with
//! multiplier pairing and the discriminant ρ.

use floquet_dirac::lyapunov::sample;
use floquet_dirac::monodromy::IntegratorOptions;
use floquet_dirac::potential::Potential;
use floquet_dirac::C64;

fn main() -> floquet_dirac::Result<()> {
    let p = Potential::example_4x4(1.0, 0.2, 0.1)?;
    let opts = IntegratorOptions::default();
    println!("{:>6} {:>24} {:>24} {:>12}", "z", "Δ_1", "Δ_2", "|ρ|");
    for k in 0..=12 {
        let z = C64::new(0.5 * k as f64, 0.0);
        let s = sample(&p, z, &opts)?;
        println!(
            "{:>6.2} {:>24.8} {:>24.8} {:>12.3e}{}",
            z.re,
            s.deltas[0],
            s.deltas[1],
            s.rho.norm(),
            if s.pairing_ok { "" } else { "  pairing failed" }
        );
    }
    Ok(())
}
