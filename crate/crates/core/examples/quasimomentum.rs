//! Quasimomentum k = p + iq continued along a real segment crossing a gap.

use floquet_dirac::asymptotics::quasimomentum;
use floquet_dirac::monodromy::IntegratorOptions;
use floquet_dirac::potential::Potential;
use floquet_dirac::trig::TrigPoly;
use floquet_dirac::C64;

fn main() -> floquet_dirac::Result<()> {
    let p = Potential::scalar(TrigPoly::cosine(1.0, 1))?;
    let contour: Vec<C64> = (0..=40).map(|i| C64::new(2.6 + 0.02 * i as f64, 0.0)).collect();
    for s in quasimomentum(&p, &contour, &IntegratorOptions::default())? {
        println!("z = {:.3}  p = {:.6}  q = {:.6}{}", s.z.re, s.p, s.q, if s.flagged { "  *" } else { "" });
    }
    Ok(())
}
