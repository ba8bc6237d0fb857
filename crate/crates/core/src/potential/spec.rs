//! Key-value description of a potential.
//!
//! ```toml
//! [potential]
//! n = 2
//! [[potential.entries]]
//! row = 1
//! col = 2
//! terms = [[-1, 0.5, 0.0], [1, 0.5, 0.0]]   # (m, re, im) of e^{i2πmt}
//! ```
//!
//! or a builtin:
//!
//! ```toml
//! [potential.builtin]
//! name = "example_4x4"
//! a = 7.0
//! tau = 0.02
//! nu = 0.05
//! ```
//!
//! Entries use 1-based indices; entries not listed are zero, so an
//! off-diagonal entry must be listed together with its mirror.

use super::Potential;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::trig::TrigPoly;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<BuiltinSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<EntrySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum BuiltinSpec {
    #[serde(rename = "zero")]
    Zero { n: usize },
    /// Constant v with real part `re` and optional imaginary part `im`.
    #[serde(rename = "constant")]
    Constant {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
    #[serde(rename = "diagonal")]
    Diagonal { values: Vec<f64> },
    #[serde(rename = "example_4x4")]
    Example4x4 { a: f64, tau: f64, nu: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<(i64, f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    potential: PotentialSpec,
}

impl PotentialSpec {
    pub fn builtin(b: BuiltinSpec) -> Self {
        PotentialSpec {
            builtin: Some(b),
            n: None,
            entries: Vec::new(),
        }
    }

    /// Coefficient table of an existing potential.
    pub fn from_potential(p: &Potential) -> Self {
        let n = p.n();
        let mut entries = Vec::new();
        for j in 0..n {
            for k in 0..n {
                let terms: Vec<(i64, f64, f64)> =
                    p.entry(j, k).terms().map(|(m, c)| (m, c.re, c.im)).collect();
                if !terms.is_empty() {
                    entries.push(EntrySpec {
                        row: j + 1,
                        col: k + 1,
                        terms,
                    });
                }
            }
        }
        PotentialSpec {
            builtin: None,
            n: Some(n),
            entries,
        }
    }

    pub fn build(&self) -> Result<Potential> {
        match (&self.builtin, self.n) {
            (Some(_), Some(_)) => Err(Error::config(
                "potential.n",
                "give either a builtin or an entry table, not both",
            )),
            (Some(b), None) => {
                if !self.entries.is_empty() {
                    return Err(Error::config(
                        "potential.entries",
                        "entries cannot be combined with a builtin",
                    ));
                }
                build_builtin(b)
            }
            (None, Some(n)) => self.build_entries(n),
            (None, None) => Err(Error::config(
                "potential",
                "missing both `builtin` and `n`",
            )),
        }
    }

    fn build_entries(&self, n: usize) -> Result<Potential> {
        if n == 0 {
            return Err(Error::config("potential.n", "must be at least 1"));
        }
        let mut terms: Vec<Vec<(i64, C64)>> = vec![Vec::new(); n * n];
        let mut seen = vec![false; n * n];
        for (idx, e) in self.entries.iter().enumerate() {
            if e.row == 0 || e.col == 0 || e.row > n || e.col > n {
                return Err(Error::config(
                    format!("potential.entries[{idx}]"),
                    format!("index ({}, {}) outside 1..={n}", e.row, e.col),
                ));
            }
            let slot = (e.row - 1) * n + (e.col - 1);
            if seen[slot] {
                return Err(Error::config(
                    format!("potential.entries[{idx}]"),
                    format!("entry ({}, {}) listed twice", e.row, e.col),
                ));
            }
            seen[slot] = true;
            for &(m, re, im) in &e.terms {
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::InvalidPotential(format!(
                        "entry ({}, {}) has a non-finite coefficient at m = {m}",
                        e.row, e.col
                    )));
                }
                terms[slot].push((m, C64::new(re, im)));
            }
        }
        let entries = terms.iter().map(|t| TrigPoly::from_terms(t)).collect();
        Potential::new(n, entries)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&SpecFile {
            potential: self.clone(),
        })
        .map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SpecFile =
            toml::from_str(text).map_err(|e| Error::config("potential", e.to_string()))?;
        Ok(file.potential)
    }
}

fn build_builtin(b: &BuiltinSpec) -> Result<Potential> {
    match b {
        BuiltinSpec::Zero { n } => {
            if *n == 0 {
                return Err(Error::config("potential.builtin.n", "must be at least 1"));
            }
            Ok(Potential::zero(*n))
        }
        BuiltinSpec::Constant { re, im } => {
            let n = re.len();
            if n == 0 || re.iter().any(|r| r.len() != n) {
                return Err(Error::config("potential.builtin.re", "must be a square matrix"));
            }
            if let Some(im) = im {
                if im.len() != n || im.iter().any(|r| r.len() != n) {
                    return Err(Error::config(
                        "potential.builtin.im",
                        "must match the shape of `re`",
                    ));
                }
            }
            let v0 = CMatrix::from_fn(n, n, |j, k| {
                C64::new(re[j][k], im.as_ref().map_or(0.0, |m| m[j][k]))
            });
            Potential::constant(&v0)
        }
        BuiltinSpec::Diagonal { values } => {
            if values.is_empty() {
                return Err(Error::config("potential.builtin.values", "must not be empty"));
            }
            Potential::diagonal(values)
        }
        BuiltinSpec::Example4x4 { a, tau, nu } => {
            if !(*nu > 0.0) {
                return Err(Error::config("potential.builtin.nu", "must be positive"));
            }
            Potential::example_4x4(*a, *tau, *nu)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parses() {
        let text = "[potential.builtin]\nname = \"example_4x4\"\na = 7.0\ntau = 0.02\nnu = 0.05\n";
        let spec = PotentialSpec::from_toml(text).unwrap();
        assert_eq!(
            spec.builtin,
            Some(BuiltinSpec::Example4x4 {
                a: 7.0,
                tau: 0.02,
                nu: 0.05
            })
        );
        let p = spec.build().unwrap();
        assert_eq!(p.n(), 2);
    }

    #[test]
    fn entry_table_round_trips_bit_exactly() {
        let p = Potential::example_4x4(7.0, 0.037, 0.05).unwrap();
        let text = PotentialSpec::from_potential(&p).to_toml().unwrap();
        let back = PotentialSpec::from_toml(&text).unwrap().build().unwrap();
        for (a, b) in p.entries().iter().zip(back.entries()) {
            let ta: Vec<_> = a.terms().map(|(m, c)| (m, c.re.to_bits(), c.im.to_bits())).collect();
            let tb: Vec<_> = b.terms().map(|(m, c)| (m, c.re.to_bits(), c.im.to_bits())).collect();
            assert_eq!(ta, tb);
        }
    }

    #[test]
    fn asymmetric_table_names_the_pair() {
        let text = "[potential]\nn = 2\n[[potential.entries]]\nrow = 1\ncol = 2\nterms = [[0, 1.0, 0.0]]\n";
        let err = PotentialSpec::from_toml(text).unwrap().build().unwrap_err();
        assert!(matches!(err, Error::Asymmetric { row: 1, col: 2 }), "{err}");
    }

    #[test]
    fn out_of_range_index_names_the_field() {
        let text = "[potential]\nn = 1\n[[potential.entries]]\nrow = 2\ncol = 1\nterms = []\n";
        match PotentialSpec::from_toml(text).unwrap().build() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "potential.entries[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_builtin_is_a_config_error() {
        let text = "[potential.builtin]\nname = \"square_well\"\n";
        assert!(matches!(PotentialSpec::from_toml(text), Err(Error::Config { .. })));
    }
}
