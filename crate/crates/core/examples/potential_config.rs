//! Round trip of a potential through its TOML description.

use floquet_dirac::potential::PotentialSpec;

fn main() -> floquet_dirac::Result<()> {
    let text = r#"
[potential]
n = 2
[[potential.entries]]
row = 1
col = 1
terms = [[0, 1.0, 0.0]]
[[potential.entries]]
row = 1
col = 2
terms = [[-1, 0.25, 0.0], [1, 0.25, 0.0]]
[[potential.entries]]
row = 2
col = 1
terms = [[-1, 0.25, 0.0], [1, 0.25, 0.0]]
"#;
    let p = PotentialSpec::from_toml(text)?.build()?;
    println!("N = {}, degree {}, sup norm {:.4}", p.n(), p.degree(), p.sup_norm());
    println!("Q0 = {:.6}", p.moments().q0());
    let back = PotentialSpec::from_potential(&p).to_toml()?;
    print!("{back}");
    assert_eq!(PotentialSpec::from_toml(&back)?.build()?, p);
    Ok(())
}
