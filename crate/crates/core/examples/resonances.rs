//! Real and complex zeros of the discriminant ρ, on a real window and in a
//! disk, labelled by the predicted resonance families.

use floquet_dirac::asymptotics::label_resonances;
use floquet_dirac::monodromy::IntegratorOptions;
use floquet_dirac::potential::Potential;
use floquet_dirac::roots::Disk;
use floquet_dirac::spectrum::{find_resonances, ResonanceTarget};
use floquet_dirac::C64;

fn main() -> floquet_dirac::Result<()> {
    let opts = IntegratorOptions::default();
    let p = Potential::example_4x4(1.0, 0.1, 0.1)?;
    let list = find_resonances(&p, ResonanceTarget::Window(0.5, 13.0), &opts)?;
    for r in &list.real_roots {
        println!("real resonance {:.10} ×{}", r.z.re, r.multiplicity);
    }

    // a = 7 puts the first resonance cell below a/2π: ρ has a complex pair
    let p = Potential::example_4x4(7.0, 0.02, 0.05)?;
    let mut list = find_resonances(&p, ResonanceTarget::Disk(Disk::new(C64::new(7.0, 0.0), 0.3)), &opts)?;
    label_resonances(&p, &mut list)?;
    for r in &list.complex_roots {
        println!("complex resonance {:.8} ×{}", r.z, r.multiplicity);
    }
    for l in &list.pairing {
        println!("{:.8} belongs to cell {} pair {:?}", l.root, l.n, l.alpha);
    }
    Ok(())
}
