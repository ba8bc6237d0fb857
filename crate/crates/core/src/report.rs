//! JSON and CSV renderings of analysis results. Every JSON document carries
//! `schema_version`; rows are emitted in index order so output bytes depend
//! only on the inputs.

use crate::asymptotics::{ExponentCheck, GapCriterion, Prediction, TraceReport, ValidationTable};
use crate::casestudy::{BifurcationRecord, CaseStudyConfig, StabilityTable};
use crate::error::Result;
use crate::flags::{Flag, Severity};
use crate::linalg::C64;
use crate::roots::Root;
use crate::spectrum::{
    Endpoint, EndpointLabel, EigenvalueList, GapSumCheck, ResonanceList, ResonanceTarget, SpectralReport,
};
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn flags(list: &[Flag]) -> Value {
    json!(list)
}

fn label(l: &EndpointLabel) -> Value {
    json!({
        "kind": l.kind.name(),
        "root": l.root,
        "multiplicity": l.multiplicity,
        "residual": l.residual,
    })
}

fn endpoint(e: &Endpoint) -> Value {
    json!({
        "z": e.z,
        "bisected": e.bisected,
        "window_edge": e.window_edge,
        "labels": e.labels.iter().map(label).collect::<Vec<_>>(),
    })
}

fn root(r: &Root) -> Value {
    json!({
        "z": complex(r.z),
        "multiplicity": r.multiplicity,
        "residual": r.residual,
    })
}

pub fn bands(r: &SpectralReport, gap_sum: &GapSumCheck, exponent: &ExponentCheck) -> Value {
    json!({
        "window": [r.window.0, r.window.1],
        "grid_step": r.grid_step,
        "n": r.n,
        "bands": r.bands.iter().map(|b| json!([b.lo, b.hi])).collect::<Vec<_>>(),
        "gaps": r.gaps.iter().map(|g| json!({
            "lower": endpoint(&g.lower),
            "upper": endpoint(&g.upper),
            "width": g.width(),
        })).collect::<Vec<_>>(),
        "closed_gaps": r.closed_gaps.iter().map(|g| json!({
            "z": g.z,
            "labels": g.labels.iter().map(label).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "multiplicity_profile": r.profile.iter().map(|s| json!({
            "lo": s.lo, "hi": s.hi, "count": s.count,
        })).collect::<Vec<_>>(),
        "roots": {
            "periodic": r.roots.periodic.iter().map(root).collect::<Vec<_>>(),
            "antiperiodic": r.roots.antiperiodic.iter().map(root).collect::<Vec<_>>(),
            "resonance": r.roots.resonance.iter().map(root).collect::<Vec<_>>(),
            "resonance_complex": r.roots.resonance_complex.iter().map(root).collect::<Vec<_>>(),
            "resonance_degenerate": r.roots.resonance_degenerate,
        },
        "gap_sum": {
            "sum_of_squared_widths": gap_sum.lhs,
            "bound": gap_sum.rhs,
            "pass": gap_sum.pass,
        },
        "exponent": {
            "q0": exponent.q0,
            "max_q_full_bands": exponent.max_q_full,
            "max_q2_partial": exponent.max_q2_partial,
            "min_q": exponent.min_q,
            "full_nodes": exponent.full_nodes,
            "partial_nodes": exponent.partial_nodes,
            "pass": exponent.pass,
        },
        "evaluations": r.evaluations,
    })
}

/// `z, re Δ_1, im Δ_1, …, re ρ, im ρ, in_band` per grid node.
pub fn bands_samples_csv(r: &SpectralReport) -> Result<String> {
    let mut header = vec!["z".to_string()];
    for j in 1..=r.n {
        header.push(format!("re_delta_{j}"));
        header.push(format!("im_delta_{j}"));
    }
    header.extend(["re_rho", "im_rho", "in_band"].map(String::from));
    let rows = r.nodes.iter().map(|node| {
        let mut row = vec![node.z.to_string()];
        for d in &node.deltas {
            row.push(d.re.to_string());
            row.push(d.im.to_string());
        }
        row.push(node.rho.re.to_string());
        row.push(node.rho.im.to_string());
        row.push(node.in_band.to_string());
        row
    });
    table(header, rows)
}

pub fn eigenvalues(lists: &[EigenvalueList]) -> Value {
    json!(lists
        .iter()
        .map(|l| json!({
            "kind": l.kind.name(),
            "n_range": [l.n_range.0, l.n_range.1],
            "roots": l.roots.iter().map(|r| json!({
                "n": r.n, "z": r.z, "multiplicity": r.multiplicity, "residual": r.residual,
            })).collect::<Vec<_>>(),
            "cell_counts": l.cell_counts.iter().map(|c| json!([c.0, c.1])).collect::<Vec<_>>(),
            "complex_roots": l.complex_roots.iter().map(root).collect::<Vec<_>>(),
            "evaluations": l.evaluations,
        }))
        .collect::<Vec<_>>())
}

pub fn eigenvalues_csv(lists: &[EigenvalueList]) -> Result<String> {
    let header = ["kind", "n", "z", "multiplicity", "residual"].map(String::from).to_vec();
    let rows = lists.iter().flat_map(|l| {
        l.roots.iter().map(move |r| {
            vec![
                l.kind.name().to_string(),
                r.n.to_string(),
                r.z.to_string(),
                r.multiplicity.to_string(),
                r.residual.to_string(),
            ]
        })
    });
    table(header, rows)
}

pub fn resonances(l: &ResonanceList) -> Value {
    let target = match l.target {
        ResonanceTarget::Window(a, b) => json!({ "window": [a, b] }),
        ResonanceTarget::Disk(d) => json!({ "disk": [d.center.re, d.center.im, d.radius] }),
    };
    json!({
        "target": target,
        "real_roots": l.real_roots.iter().map(root).collect::<Vec<_>>(),
        "complex_roots": l.complex_roots.iter().map(root).collect::<Vec<_>>(),
        "winding": l.winding.map(|(d, w)| json!({ "radius": d.radius, "count": w })),
        "degenerate": l.degenerate,
        "labels": l.pairing.iter().map(|p| json!({
            "z": complex(p.root), "n": p.n, "alpha": [p.alpha.0, p.alpha.1],
        })).collect::<Vec<_>>(),
        "count": l.count(),
        "evaluations": l.evaluations,
    })
}

pub fn resonances_csv(l: &ResonanceList) -> Result<String> {
    let header = ["re", "im", "multiplicity", "residual"].map(String::from).to_vec();
    let rows = l.real_roots.iter().chain(&l.complex_roots).map(|r| {
        vec![
            r.z.re.to_string(),
            r.z.im.to_string(),
            r.multiplicity.to_string(),
            r.residual.to_string(),
        ]
    });
    table(header, rows)
}

pub fn prediction(p: &Prediction) -> Value {
    json!({
        "n": p.n,
        "kind": p.kind.name(),
        "nu": p.nu,
        "zeta": p.zeta,
        "zeta_max_imag": p.zeta_imag,
        "eigenvalues": p.eigenvalues,
        "resonances": p.resonances.iter().map(|r| json!({
            "alpha": [r.alpha.0, r.alpha.1],
            "center": r.center,
            "vhat_abs": r.vhat_abs,
            "minus": r.minus,
            "plus": r.plus,
        })).collect::<Vec<_>>(),
        "centers_omitted": p.centers_omitted,
        "split_omitted": p.split_omitted,
    })
}

pub fn validation(t: &ValidationTable) -> Value {
    use crate::asymptotics::Family;
    let families = [Family::Eigenvalue, Family::ResonanceCenter, Family::Resonance];
    json!({
        "summary": families.iter().map(|f| {
            let (first, last) = t.thirds(*f);
            json!({
                "family": f.name(),
                "max_scaled_residual": t.max_scaled(*f),
                "first_third_max": first,
                "last_third_max": last,
            })
        }).collect::<Vec<_>>(),
        "unmatched": t.unmatched.iter().map(|u| json!({
            "n": u.n, "family": u.family.name(), "value": complex(u.value), "numeric": u.numeric,
        })).collect::<Vec<_>>(),
        "rows": t.rows.len(),
    })
}

/// Column order: n, family, predicted, numeric, residual, residual·n², then
/// the entry pair for resonance rows.
pub fn validation_csv(t: &ValidationTable) -> Result<String> {
    let header = [
        "n",
        "family",
        "predicted_re",
        "predicted_im",
        "numeric_re",
        "numeric_im",
        "residual",
        "residual_n2",
        "alpha",
    ]
    .map(String::from)
    .to_vec();
    let rows = t.rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            r.family.name().to_string(),
            r.predicted.re.to_string(),
            r.predicted.im.to_string(),
            r.numeric.re.to_string(),
            r.numeric.im.to_string(),
            r.residual.to_string(),
            r.scaled.to_string(),
            r.alpha.map(|a| format!("{}-{}", a.0, a.1)).unwrap_or_default(),
        ]
    });
    table(header, rows)
}

pub fn gap_criterion(g: &std::result::Result<GapCriterion, String>) -> Value {
    match g {
        Ok(g) => json!({
            "verdict": g.verdict.name(),
            "nu": g.nu,
            "anti_diagonal_sums": g.sums,
            "nondegeneracy": g.nondegeneracy.iter().map(|d| json!({
                "alpha": [d.alpha.0, d.alpha.1],
                "satisfied": d.satisfied(),
                "nonzero_n": d.nonzero,
                "coefficients": d.coefficients.iter().map(|c| json!({
                    "n": c.0, "abs": c.1, "ratio": c.2,
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }),
        Err(reason) => json!({ "refused": reason }),
    }
}

pub fn traces(r: &TraceReport) -> Value {
    json!({
        "q0": r.q0,
        "q1": r.q1,
        "q2": r.q2,
        "fitted": r.fitted.map(|f| json!({ "q0": f.0, "q1": f.1, "q2": f.2 })),
        "fit_condition": r.fit_condition,
        "detl_defect": r.detl_defect(),
    })
}

pub fn traces_csv(r: &TraceReport) -> Result<String> {
    let header = [
        "y",
        "re_k",
        "im_k",
        "re_shift",
        "im_shift",
        "re_log_det_l",
        "im_log_det_l",
        "re_predicted",
        "im_predicted",
        "detl_defect",
    ]
    .map(String::from)
    .to_vec();
    let rows = r.samples.iter().map(|s| {
        [
            s.y,
            s.k.re,
            s.k.im,
            s.shift.re,
            s.shift.im,
            s.log_det_l.re,
            s.log_det_l.im,
            s.predicted.re,
            s.predicted.im,
            s.detl_defect,
        ]
        .iter()
        .map(f64::to_string)
        .collect()
    });
    table(header, rows)
}

pub fn casestudy(cfg: &CaseStudyConfig, records: &[BifurcationRecord], stability: &StabilityTable) -> Value {
    json!({
        "a": cfg.a,
        "nu": cfg.nu,
        "tau_values": cfg.tau_values,
        "n_max": cfg.n_max,
        "bifurcation": records.iter().map(|r| json!({
            "n": r.n,
            "r0": r.r0,
            "kappa": r.kappa,
            "slope": r.slope,
            "r_estimate": r.r_estimate,
            "by_tau": r.by_tau.iter().map(|t| json!({
                "tau": t.tau,
                "minus": t.pair.map(|p| complex(p.0)),
                "plus": t.pair.map(|p| complex(p.1)),
                "winding": t.winding,
                "classification": t.classification.name(),
                "gap_confirmed": t.gap_confirmed,
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "stability": {
            "per_tau": stability.per_tau.iter().map(|t| json!({
                "tau": t.tau,
                "max_displacement": t.max_displacement,
                "eigenvalue_count_in_disk": t.disk_count,
                "resonance_count_in_disk": t.resonance_count,
            })).collect::<Vec<_>>(),
            "monotone": stability.monotone(),
            "unmatched": stability.unmatched.iter().map(|u| json!({
                "tau": u.0, "kind": u.1.name(), "z": u.2, "numeric": u.3,
            })).collect::<Vec<_>>(),
        },
    })
}

/// Columns: a, nu, n, tau, re_minus, im_minus, re_plus, im_plus,
/// classification, slope.
pub fn bifurcation_csv(cfg: &CaseStudyConfig, records: &[BifurcationRecord]) -> Result<String> {
    let header = [
        "a",
        "nu",
        "n",
        "tau",
        "re_minus",
        "im_minus",
        "re_plus",
        "im_plus",
        "classification",
        "slope",
    ]
    .map(String::from)
    .to_vec();
    let rows = records.iter().flat_map(|r| {
        r.by_tau.iter().map(move |t| {
            let (m, p) = t
                .pair
                .unwrap_or((C64::new(f64::NAN, f64::NAN), C64::new(f64::NAN, f64::NAN)));
            vec![
                cfg.a.to_string(),
                cfg.nu.to_string(),
                r.n.to_string(),
                t.tau.to_string(),
                m.re.to_string(),
                m.im.to_string(),
                p.re.to_string(),
                p.im.to_string(),
                t.classification.name().to_string(),
                r.slope.map(|s| s.to_string()).unwrap_or_default(),
            ]
        })
    });
    table(header, rows)
}

/// Complex root trajectories for plotting: one row per (n, τ, branch).
pub fn trajectories_csv(records: &[BifurcationRecord]) -> Result<String> {
    let header = ["n", "tau", "branch", "re", "im"].map(String::from).to_vec();
    let rows = records.iter().flat_map(|r| {
        r.by_tau.iter().filter_map(|t| t.pair.map(|p| (t.tau, p))).flat_map(move |(tau, (m, p))| {
            [("minus", m), ("plus", p)].map(|(name, z)| {
                vec![r.n.to_string(), tau.to_string(), name.to_string(), z.re.to_string(), z.im.to_string()]
            })
        })
    });
    table(header, rows)
}

pub fn stability_csv(t: &StabilityTable) -> Result<String> {
    let header = ["tau", "kind", "reference", "numeric", "displacement"].map(String::from).to_vec();
    let rows = t.rows.iter().map(|r| {
        vec![
            r.tau.to_string(),
            r.kind.name().to_string(),
            r.reference.to_string(),
            r.numeric.to_string(),
            r.displacement.to_string(),
        ]
    });
    table(header, rows)
}

fn table(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    Failed,
    Error,
    ConfigError,
}

/// Written after every run, successful or not.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub status: RunStatus,
    pub exit_code: i32,
    pub failures: Vec<Flag>,
    pub notices: Vec<Flag>,
    pub error: Option<String>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, flags: &[Flag], error: Option<String>, files: Vec<String>) -> Self {
        let failures: Vec<Flag> = flags.iter().filter(|f| f.severity == Severity::Failure).cloned().collect();
        let notices: Vec<Flag> = flags.iter().filter(|f| f.severity == Severity::Notice).cloned().collect();
        let (status, exit_code) = if error.is_some() {
            (RunStatus::Error, 3)
        } else if failures.is_empty() {
            (RunStatus::Ok, 0)
        } else {
            (RunStatus::Failed, 1)
        };
        Manifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            status,
            exit_code,
            failures,
            notices,
            error,
            files,
        }
    }

    /// The run never started because the configuration was rejected.
    pub fn config_error(command: &str, message: String) -> Self {
        Manifest {
            status: RunStatus::ConfigError,
            exit_code: 2,
            ..Manifest::new(command, &[], Some(message), vec!["manifest.json".to_string()])
        }
    }
}
