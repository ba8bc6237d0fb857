//! Trace invariants from the large-|z| behaviour of k(iy), fitted and
//! compared with their closed forms.

use floquet_dirac::asymptotics::trace_check;
use floquet_dirac::monodromy::IntegratorOptions;
use floquet_dirac::potential::Potential;

fn main() -> floquet_dirac::Result<()> {
    let p = Potential::example_4x4(1.0, 0.0, 0.05)?;
    let r = trace_check(&p, &[20.0, 25.0, 30.0, 35.0, 40.0], &IntegratorOptions::default())?;
    println!("Q0 = {:.8}, Q1 = {:.8}, Q2 = {:.8}", r.q0, r.q1, r.q2);
    if let Some((q0, q1, q2)) = r.fitted {
        println!("fit: {q0:.8}, {q1:.8}, {q2:.8} (condition {:.2e})", r.fit_condition);
    }
    for s in &r.samples {
        println!("y = {:>4}: k − iy = {:.3e}, det L defect {:.3e}", s.y, s.shift, s.detl_defect);
    }
    Ok(())
}
