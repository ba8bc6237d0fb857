//! Real-gap versus complex-pair bifurcation of the 4×4 example as τ grows.

use floquet_dirac::casestudy::{bifurcation_sweep, CaseStudyConfig};
use floquet_dirac::monodromy::IntegratorOptions;

fn main() -> floquet_dirac::Result<()> {
    let cfg = CaseStudyConfig {
        a: 7.0,
        tau_values: vec![0.0, 0.01, 0.02],
        nu: 0.05,
        n_max: 2,
    };
    cfg.validate()?;
    for rec in bifurcation_sweep(&cfg, &IntegratorOptions::default())? {
        println!("cell n = {} (r⁰ = {:.6})", rec.n, rec.r0);
        for t in &rec.by_tau {
            match t.pair {
                Some((lo, hi)) => println!("  τ = {:<5} {:<13} {:.8} {:.8}", t.tau, t.classification.name(), lo, hi),
                None => println!("  τ = {:<5} {}", t.tau, t.classification.name()),
            }
        }
        if let Some(r) = rec.r_estimate {
            println!("  sign estimate {r:+.4e}");
        }
    }
    Ok(())
}
