//! Command-line front end. Exit status: 0 clean, 1 when a failure flag was
//! raised, 2 on a configuration error, 3 when an analysis step errored.

use crate::asymptotics::{exponent_check, gap_criterion, label_resonances, predict, trace_check, validate};
use crate::casestudy::{bifurcation_sweep, eigenvalue_stability, CaseStudyConfig};
use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::linalg::C64;
use crate::monodromy::IntegratorOptions;
use crate::potential::{Potential, PotentialSpec};
use crate::report::{self, Manifest, SCHEMA_VERSION};
use crate::roots::Disk;
use crate::spectrum::{find_eigenvalues, find_resonances, gap_sum_check, scan_bands, EigenKind, ResonanceTarget};
use crate::tolerances::{DEFAULT_RTOL, REAL_GRID_STEP};
use clap::Parser;
use serde::Deserialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const DEFAULT_OUT: &str = "out";

#[derive(Parser, Debug)]
#[command(name = "floquet-dirac", version, about = "Floquet spectra of periodic matrix Dirac operators")]
pub struct Args {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// bands | eigenvalues | resonances | asymptotics | traces | casestudy
    #[arg(long)]
    pub command: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long = "n-range", num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub n_range: Option<Vec<i64>>,
    #[arg(long, num_args = 3, value_names = ["RE", "IM", "RAD"], allow_negative_numbers = true)]
    pub disk: Option<Vec<f64>>,
}

/// Contents of the `--config` file. Command-line flags override it.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub out: Option<PathBuf>,
    pub rtol: Option<f64>,
    pub jobs: Option<usize>,
    pub window: Option<(f64, f64)>,
    pub n_range: Option<(i64, i64)>,
    pub disk: Option<(f64, f64, f64)>,
    /// periodic | antiperiodic | both
    pub kind: Option<String>,
    pub grid_step: Option<f64>,
    pub heights: Option<Vec<f64>>,
    pub potential: Option<PotentialSpec>,
    pub casestudy: Option<CaseStudySection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudySection {
    pub a: f64,
    pub tau_values: Vec<f64>,
    pub nu: f64,
    pub n_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Bands,
    Eigenvalues,
    Resonances,
    Asymptotics,
    Traces,
    CaseStudy,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "bands" => Command::Bands,
            "eigenvalues" => Command::Eigenvalues,
            "resonances" => Command::Resonances,
            "asymptotics" => Command::Asymptotics,
            "traces" => Command::Traces,
            "casestudy" => Command::CaseStudy,
            other => {
                return Err(Error::config(
                    "command",
                    format!("unknown command `{other}`; expected bands, eigenvalues, resonances, asymptotics, traces or casestudy"),
                ))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Eigenvalues => "eigenvalues",
            Command::Resonances => "resonances",
            Command::Asymptotics => "asymptotics",
            Command::Traces => "traces",
            Command::CaseStudy => "casestudy",
        }
    }
}

/// The preset used by `casestudy` when the config has no section for it.
pub fn casestudy_preset() -> CaseStudyConfig {
    CaseStudyConfig {
        a: 7.0,
        tau_values: vec![0.0, 0.01, 0.02, 0.04],
        nu: 0.05,
        n_max: 3,
    }
}

/// A fully validated run.
#[derive(Clone, Debug)]
pub struct Run {
    pub command: Command,
    pub out: PathBuf,
    pub opts: IntegratorOptions,
    pub jobs: Option<usize>,
    pub window: Option<(f64, f64)>,
    pub n_range: Option<(i64, i64)>,
    pub disk: Option<Disk>,
    pub kinds: Vec<EigenKind>,
    pub grid_step: f64,
    pub heights: Vec<f64>,
    pub potential: Option<Potential>,
    pub casestudy: CaseStudyConfig,
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| {
        // the key on the offending line, else a backticked name in the message
        let from_line = e.span().and_then(|s| {
            let start = text[..s.start].rfind('\n').map_or(0, |i| i + 1);
            let line = text[start..].lines().next().unwrap_or("");
            line.split_once('=').map(|(k, _)| k.trim().to_string())
        });
        let field = from_line
            .filter(|k| !k.is_empty())
            .or_else(|| e.message().split('`').nth(1).map(str::to_string))
            .unwrap_or_else(|| "config".to_string());
        Error::config(field, format!("{}: {}", path.display(), e.to_string().trim()))
    })
}

impl Run {
    pub fn resolve(args: &Args) -> Result<Self> {
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => RunConfig::default(),
        };
        let name = args
            .command
            .clone()
            .or(file.command.clone())
            .ok_or_else(|| Error::config("command", "no command given"))?;
        let command = Command::parse(&name)?;
        let rtol = args.rtol.or(file.rtol).unwrap_or(DEFAULT_RTOL);
        let opts = IntegratorOptions::with_rtol(rtol)?;
        let jobs = args.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        let window = match &args.window {
            Some(w) => Some((w[0], w[1])),
            None => file.window,
        };
        if let Some((a, b)) = window {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::config("window", format!("[{a}, {b}] is not an increasing finite interval")));
            }
        }
        let n_range = match &args.n_range {
            Some(n) => Some((n[0], n[1])),
            None => file.n_range,
        };
        if let Some((a, b)) = n_range {
            if a > b {
                return Err(Error::config("n_range", format!("{a} > {b}")));
            }
        }
        let disk = match (&args.disk, file.disk) {
            (Some(d), _) => Some((d[0], d[1], d[2])),
            (None, d) => d,
        };
        let disk = match disk {
            Some((re, im, r)) => {
                if !(re.is_finite() && im.is_finite() && r.is_finite() && r > 0.0) {
                    return Err(Error::config("disk", format!("({re}, {im}, {r}) needs a finite center and positive radius")));
                }
                Some(Disk::new(C64::new(re, im), r))
            }
            None => None,
        };
        let kinds = match file.kind.as_deref().unwrap_or("both") {
            "periodic" => vec![EigenKind::Periodic],
            "antiperiodic" => vec![EigenKind::Antiperiodic],
            "both" => vec![EigenKind::Periodic, EigenKind::Antiperiodic],
            other => return Err(Error::config("kind", format!("`{other}` is not periodic, antiperiodic or both"))),
        };
        let grid_step = file.grid_step.unwrap_or(REAL_GRID_STEP);
        if !(grid_step > 0.0 && grid_step <= REAL_GRID_STEP) {
            return Err(Error::config("grid_step", format!("{grid_step} must lie in (0, π/200]")));
        }
        let heights = file.heights.clone().unwrap_or_else(|| vec![20.0, 25.0, 30.0, 35.0, 40.0]);
        if heights.len() < 4 || heights.iter().any(|y| !(10.0..=50.0).contains(y)) {
            return Err(Error::config("heights", "need at least 4 values in [10, 50]"));
        }
        let potential = match &file.potential {
            Some(spec) => Some(spec.build().map_err(|e| match e {
                Error::Config { .. } => e,
                other => Error::config("potential", other.to_string()),
            })?),
            None => None,
        };
        let casestudy = match &file.casestudy {
            Some(s) => CaseStudyConfig {
                a: s.a,
                tau_values: s.tau_values.clone(),
                nu: s.nu,
                n_max: s.n_max,
            },
            None => casestudy_preset(),
        };
        let run = Run {
            command,
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            opts,
            jobs,
            window,
            n_range,
            disk,
            kinds,
            grid_step,
            heights,
            potential,
            casestudy,
        };
        run.check_requirements()?;
        Ok(run)
    }

    fn check_requirements(&self) -> Result<()> {
        if self.command != Command::CaseStudy && self.potential.is_none() {
            return Err(Error::config("potential", format!("`{}` needs a [potential] section", self.command.name())));
        }
        match self.command {
            Command::Bands if self.window.is_none() => Err(Error::config("window", "bands needs a window")),
            Command::Eigenvalues if self.n_range.is_none() => {
                Err(Error::config("n_range", "eigenvalues needs an n range"))
            }
            Command::Resonances if self.window.is_none() && self.disk.is_none() => {
                Err(Error::config("window", "resonances needs a window or a disk"))
            }
            Command::Asymptotics => match self.n_range {
                Some((a, b)) if a >= 2 && b <= 60 => Ok(()),
                Some((a, b)) => Err(Error::config("n_range", format!("[{a}, {b}] must lie in [2, 60]"))),
                None => Err(Error::config("n_range", "asymptotics needs an n range")),
            },
            Command::CaseStudy => self.casestudy.validate(),
            _ => Ok(()),
        }
    }

    fn potential(&self) -> &Potential {
        self.potential.as_ref().expect("checked in resolve")
    }
}

/// Documents and tables produced by one command.
pub struct Output {
    pub report: Value,
    pub tables: Vec<(String, String)>,
    pub summary: String,
    pub flags: Vec<Flag>,
}

pub fn execute(run: &Run) -> Result<Output> {
    match run.jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::config("jobs", e.to_string()))?
            .install(|| dispatch(run)),
        None => dispatch(run),
    }
}

fn dispatch(run: &Run) -> Result<Output> {
    let opts = &run.opts;
    let mut summary = String::new();
    let mut tables = Vec::new();
    let mut flags = Vec::new();
    let body = match run.command {
        Command::Bands => {
            let p = run.potential();
            let r = scan_bands(p, run.window.expect("checked"), run.grid_step, opts)?;
            let gs = gap_sum_check(&r, p);
            let ex = exponent_check(&r, p);
            flags.extend(r.flags.iter().cloned());
            if !gs.pass {
                flags.push(Flag::failure("bands", format!("Σ|g|² = {} exceeds {}", gs.lhs, gs.rhs)));
            }
            if !ex.pass {
                flags.push(Flag::failure("bands", format!("Lyapunov exponent bounds violated: {ex:?}")));
            }
            let _ = writeln!(summary, "bands: {}  gaps: {}  closed gaps: {}", r.bands.len(), r.gaps.len(), r.closed_gaps.len());
            for g in &r.gaps {
                let _ = writeln!(summary, "  gap ({:.10}, {:.10}) width {:.3e}", g.lower.z, g.upper.z, g.width());
            }
            tables.push(("samples.csv".to_string(), report::bands_samples_csv(&r)?));
            report::bands(&r, &gs, &ex)
        }
        Command::Eigenvalues => {
            let p = run.potential();
            let lists = run
                .kinds
                .iter()
                .map(|k| find_eigenvalues(p, *k, run.n_range.expect("checked"), opts))
                .collect::<Result<Vec<_>>>()?;
            for l in &lists {
                flags.extend(l.flags.iter().cloned());
                let count: usize = l.roots.iter().map(|r| r.multiplicity).sum();
                let _ = writeln!(summary, "{}: {} roots with multiplicity", l.kind.name(), count);
            }
            tables.push(("eigenvalues.csv".to_string(), report::eigenvalues_csv(&lists)?));
            report::eigenvalues(&lists)
        }
        Command::Resonances => {
            let p = run.potential();
            let target = match (run.disk, run.window) {
                (Some(d), _) => ResonanceTarget::Disk(d),
                (None, Some((a, b))) => ResonanceTarget::Window(a, b),
                _ => unreachable!("checked in resolve"),
            };
            let mut list = find_resonances(p, target, opts)?;
            label_resonances(p, &mut list)?;
            flags.extend(list.flags.iter().cloned());
            let _ = writeln!(
                summary,
                "resonances: {} real, {} complex{}",
                list.real_roots.len(),
                list.complex_roots.len(),
                if list.degenerate { " (discriminant vanishes identically)" } else { "" }
            );
            tables.push(("resonances.csv".to_string(), report::resonances_csv(&list)?));
            report::resonances(&list)
        }
        Command::Asymptotics => {
            let p = run.potential();
            let range = run.n_range.expect("checked");
            let table = validate(p, range, opts)?;
            flags.extend(table.flags.iter().cloned());
            let predictions = (range.0..=range.1).map(|n| predict(p, n)).collect::<Result<Vec<_>>>()?;
            for pr in predictions.iter().filter(|pr| pr.zeta_imag > 1e-10) {
                flags.push(Flag::failure(
                    "asymptotics",
                    format!("n = {}: ζ has imaginary part {:.3e}", pr.n, pr.zeta_imag),
                ));
            }
            let criterion = gap_criterion(p).map_err(|e| e.to_string());
            for f in [crate::asymptotics::Family::Eigenvalue, crate::asymptotics::Family::ResonanceCenter] {
                let _ = writeln!(summary, "{}: max residual·n² = {:.6e}", f.name(), table.max_scaled(f));
            }
            tables.push(("residuals.csv".to_string(), report::validation_csv(&table)?));
            json!({
                "validation": report::validation(&table),
                "predictions": predictions.iter().map(report::prediction).collect::<Vec<_>>(),
                "gap_criterion": report::gap_criterion(&criterion),
            })
        }
        Command::Traces => {
            let p = run.potential();
            let r = trace_check(p, &run.heights, opts)?;
            flags.extend(r.flags.iter().cloned());
            let _ = writeln!(
                summary,
                "Q0 = {:.10}  fitted = {}  detL defect = {:.3e}",
                r.q0,
                r.fitted_q0().map(|q| format!("{q:.10}")).unwrap_or_else(|| "-".into()),
                r.detl_defect()
            );
            tables.push(("traces.csv".to_string(), report::traces_csv(&r)?));
            report::traces(&r)
        }
        Command::CaseStudy => {
            let cfg = &run.casestudy;
            let records = bifurcation_sweep(cfg, opts)?;
            let stability = eigenvalue_stability(cfg, opts)?;
            for r in &records {
                flags.extend(r.flags.iter().cloned());
                let classes: Vec<&str> = r.by_tau.iter().map(|t| t.classification.name()).collect();
                let _ = writeln!(summary, "n = {}: r0 = {:.10}  {}", r.n, r.r0, classes.join(" "));
            }
            flags.extend(stability.flags.iter().cloned());
            tables.push(("bifurcation.csv".to_string(), report::bifurcation_csv(cfg, &records)?));
            tables.push(("trajectories.csv".to_string(), report::trajectories_csv(&records)?));
            tables.push(("stability.csv".to_string(), report::stability_csv(&stability)?));
            report::casestudy(cfg, &records, &stability)
        }
    };
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": run.command.name(),
        "rtol": run.opts.rtol,
        "result": body,
        "flags": report::flags(&flags),
    });
    Ok(Output {
        report,
        tables,
        summary,
        flags,
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Runs a resolved command and writes its artifacts; returns the exit code.
pub fn run(run: &Run) -> Result<i32> {
    std::fs::create_dir_all(&run.out).map_err(|source| Error::Io {
        path: run.out.display().to_string(),
        source,
    })?;
    let manifest = match execute(run) {
        Ok(out) => {
            let mut files = vec!["report.json".to_string(), "summary.txt".to_string()];
            write(&run.out, "report.json", &pretty(&out.report))?;
            write(&run.out, "summary.txt", &out.summary)?;
            for (name, text) in &out.tables {
                write(&run.out, name, text)?;
                files.push(name.clone());
            }
            files.push("manifest.json".to_string());
            Manifest::new(run.command.name(), &out.flags, None, files)
        }
        Err(e) => Manifest::new(run.command.name(), &[], Some(e.to_string()), vec!["manifest.json".to_string()]),
    };
    write(&run.out, "manifest.json", &pretty(&serde_json::to_value(&manifest).map_err(|e| Error::Serialize(e.to_string()))?))?;
    if let Some(err) = &manifest.error {
        eprintln!("error: {err}");
    }
    for f in &manifest.failures {
        eprintln!("failure [{}]: {}", f.source, f.message);
    }
    Ok(manifest.exit_code)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Best effort: the output directory and command come from the flags, else
/// from whatever the rejected file still carries.
fn config_error_manifest(args: &Args, e: &Error) {
    let file: Option<toml::Value> = args
        .config
        .as_ref()
        .and_then(|p| std::fs::read_to_string(p).ok())
        .and_then(|text| toml::from_str(&text).ok());
    let key = |k: &str| file.as_ref()?.get(k)?.as_str().map(str::to_string);
    let out = args.out.clone().or_else(|| key("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let command = args.command.clone().or_else(|| key("command")).unwrap_or_else(|| "unknown".to_string());
    let manifest = Manifest::config_error(&command, e.to_string());
    let Ok(value) = serde_json::to_value(&manifest) else { return };
    if std::fs::create_dir_all(&out).is_ok() {
        let _ = write(&out, "manifest.json", &pretty(&value));
    }
}

/// Entry point shared by the binary and the tests.
pub fn main_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let resolved = match Run::resolve(&args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            config_error_manifest(&args, &e);
            return 2;
        }
    };
    match run(&resolved) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            3
        }
    }
}
