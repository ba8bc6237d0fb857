//! Band/gap decomposition on a window, with the gap-sum and Lyapunov
//! exponent inequalities.

use floquet_dirac::asymptotics::exponent_check;
use floquet_dirac::monodromy::IntegratorOptions;
use floquet_dirac::potential::Potential;
use floquet_dirac::spectrum::{gap_sum_check, scan_bands};
use floquet_dirac::tolerances::REAL_GRID_STEP;
use floquet_dirac::trig::TrigPoly;

fn main() -> floquet_dirac::Result<()> {
    let p = Potential::scalar(TrigPoly::cosine(1.0, 1))?;
    let r = scan_bands(&p, (-2.0, 12.0), REAL_GRID_STEP, &IntegratorOptions::default())?;
    for b in &r.bands {
        println!("band [{:.8}, {:.8}]", b.lo, b.hi);
    }
    for g in &r.gaps {
        println!(
            "gap  ({:.8}, {:.8}) width {:.3e}, ends {} / {}",
            g.lower.z,
            g.upper.z,
            g.width(),
            g.lower.labels.first().map_or("?", |l| l.kind.name()),
            g.upper.labels.first().map_or("?", |l| l.kind.name())
        );
    }
    let gs = gap_sum_check(&r, &p);
    println!("Σ|g|² = {:.4} ≤ 4‖V‖²/N = {:.4}: {}", gs.lhs, gs.rhs, gs.pass);
    let ex = exponent_check(&r, &p);
    println!("exponent inequalities hold: {} (max q² off-band {:.4})", ex.pass, ex.max_q2_partial);
    Ok(())
}
