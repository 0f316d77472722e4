use clap::{Parser, Subcommand};
use heatlab_core::asymptotics::{fit_expansion, fit_ladder, sample_aggregate, FitOptions};
use heatlab_core::charnum::{euler_prediction, predicted_derived_top, predicted_subleading, rr_index};
use heatlab_core::config::{Config, CutoffPolicy, Ladder};
use heatlab_core::geometry::GeometrySpec;
use heatlab_core::heat::{aggregate, graded_trace, AggregateKind};
use heatlab_core::spectra::{product_spectrum, ComplexKind, SpectrumPolicy};
use heatlab_core::verify::{emit_report, run_suite_with, CheckId, ReportFormat};
use heatlab_core::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "heatlab", version, about = "Heat-trace identities on model geometries")]
struct Cli {
    /// JSON run configuration (defaults apply to omitted fields).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Graded spectrum below a cutoff as CSV.
    Spectrum {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        complex: ComplexKind,
        /// Comma-separated gradings (default: all).
        #[arg(long, value_delimiter = ',')]
        degree: Vec<usize>,
        #[arg(long)]
        cutoff: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregated heat trace on a t-ladder as CSV.
    Trace {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        complex: ComplexKind,
        #[arg(long, default_value = "super")]
        aggregate: AggregateKind,
        #[arg(long = "t-ladder")]
        t_ladder: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fitted expansion coefficients as JSON.
    Coeffs {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        complex: ComplexKind,
        #[arg(long, default_value = "super")]
        aggregate: AggregateKind,
        /// Comma-separated orders n (default: 0, 2, …, m+2).
        #[arg(long, value_delimiter = ',')]
        orders: Vec<usize>,
        #[arg(long = "t-ladder")]
        t_ladder: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact characteristic-number prediction as JSON.
    Predict {
        #[arg(long)]
        geometry: PathBuf,
        /// euler, index, derived-top or subleading.
        #[arg(long)]
        identity: String,
        /// Complex for derived-top (default: dolbeault when legal).
        #[arg(long)]
        complex: Option<ComplexKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the check catalogue; exit code 0 iff every check passes.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Geometry files replacing the default batteries (repeatable).
        #[arg(long)]
        geometry: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn geometry(path: &Path) -> Result<GeometrySpec, String> {
    GeometrySpec::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record(&r).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

fn core(e: Error) -> String {
    e.to_string()
}

fn run(cli: Cli) -> Result<bool, String> {
    let cfg = match &cli.config {
        Some(p) => Config::from_json(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
        None => Config::default(),
    };
    let digits = cfg.precision_digits as usize;
    match cli.command {
        Command::Spectrum {
            geometry: g,
            complex,
            degree,
            cutoff,
            out,
        } => {
            let spec = geometry(&g)?;
            let policy = SpectrumPolicy {
                cutoff: cutoff.map_or(cfg.cutoff, |lambda| CutoffPolicy::Fixed { lambda }),
                t_min: cfg.ladder.t_min(),
            };
            let sp = product_spectrum(&spec, complex, &policy).map_err(core)?;
            let gradings: Vec<usize> = if degree.is_empty() {
                (0..sp.gradings.len()).collect()
            } else {
                degree
            };
            let mut rows = Vec::new();
            for p in gradings {
                if p >= sp.gradings.len() {
                    return Err(format!("grading {p} out of range 0..{}", sp.gradings.len()));
                }
                for line in sp.lines(p) {
                    rows.push(vec![
                        p.to_string(),
                        line.eigenvalue.to_sci_string(digits),
                        line.multiplicity.to_string(),
                    ]);
                }
            }
            emit(&out, &csv_text(&["grading", "eigenvalue", "multiplicity"], rows)?)?;
        }
        Command::Trace {
            geometry: g,
            complex,
            aggregate: agg,
            t_ladder,
            out,
        } => {
            let spec = geometry(&g)?;
            let ladder = match t_ladder {
                Some(s) => Ladder::parse(&s).map_err(core)?,
                None => cfg.ladder,
            };
            let policy = SpectrumPolicy {
                cutoff: cfg.cutoff,
                t_min: ladder.t_min(),
            };
            let sp = product_spectrum(&spec, complex, &policy).map_err(core)?;
            let mut rows = Vec::new();
            for t in ladder.points() {
                let a = aggregate(&graded_trace(&sp, t).map_err(core)?, agg);
                rows.push(vec![
                    format!("{t:e}"),
                    a.value.to_sci_string(digits),
                    format!("{:e}", a.error_bound),
                ]);
            }
            emit(&out, &csv_text(&["t", "value", "error_bound"], rows)?)?;
        }
        Command::Coeffs {
            geometry: g,
            complex,
            aggregate: agg,
            orders,
            t_ladder,
            out,
        } => {
            let spec = geometry(&g)?;
            let m = spec.dim();
            let odd = orders.iter().any(|n| n % 2 == 1);
            let n_max = match orders.iter().max() {
                Some(&n) if odd => n,
                Some(&n) => n + n % 2,
                None => (m + cfg.n_max_offset) / 2 * 2,
            };
            let ladder = match t_ladder {
                Some(s) => Ladder::parse(&s).map_err(core)?,
                None => fit_ladder(&spec, complex, &cfg, odd),
            };
            let samples = sample_aggregate(&spec, complex, agg, &ladder, &cfg).map_err(core)?;
            let mut fit = fit_expansion(&samples, m, n_max, &FitOptions::from_config(&cfg, odd)).map_err(core)?;
            fit.ladder = Some(ladder);
            if !orders.is_empty() {
                let keep: Vec<usize> = (0..fit.orders.len()).filter(|&i| orders.contains(&fit.orders[i])).collect();
                fit.coefficients = keep.iter().map(|&i| fit.coefficients[i]).collect();
                fit.uncertainty = keep.iter().map(|&i| fit.uncertainty[i]).collect();
                fit.orders = keep.iter().map(|&i| fit.orders[i]).collect();
            }
            let text = serde_json::to_string_pretty(&fit.to_value()).map_err(|e| e.to_string())?;
            emit(&out, &(text + "\n"))?;
        }
        Command::Predict {
            geometry: g,
            identity,
            complex,
            out,
        } => {
            let spec = geometry(&g)?;
            let p = match identity.as_str() {
                "euler" => euler_prediction(&spec),
                "index" => rr_index(&spec).map_err(core)?,
                "derived-top" => {
                    let kind = complex.unwrap_or(if spec.is_dolbeault_legal() {
                        ComplexKind::Dolbeault
                    } else {
                        ComplexKind::DeRham
                    });
                    predicted_derived_top(&spec, kind).map_err(core)?
                }
                "subleading" => predicted_subleading(&spec).map_err(core)?,
                other => return Err(format!("unknown identity `{other}`")),
            };
            let text = serde_json::to_string_pretty(&p.to_value()).map_err(|e| e.to_string())?;
            emit(&out, &(text + "\n"))?;
        }
        Command::Verify {
            suite,
            geometry: files,
            out,
            csv,
        } => {
            let ids = CheckId::parse_suite(&suite).map_err(core)?;
            let specs = files.iter().map(|f| geometry(f)).collect::<Result<Vec<_>, _>>()?;
            let geometries = (!specs.is_empty()).then_some(specs.as_slice());
            let results = run_suite_with(&ids, geometries, &cfg, |r| {
                eprintln!(
                    "{:<4} {:<22} {:<40} err={:.2e} tol={:.0e} ({:.2}s)",
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.id,
                    r.geometry,
                    r.abs_error,
                    r.tolerance,
                    r.wall_time_s
                );
                for d in r.diagnostics.iter().filter(|_| !r.passed()) {
                    eprintln!("     {d}");
                }
            })
            .map_err(core)?;
            let failed = results.iter().filter(|r| !r.passed()).count();
            eprintln!("{} checks, {} failed", results.len(), failed);
            emit(&out, &(emit_report(&results, ReportFormat::Json).map_err(core)? + "\n"))?;
            if let Some(p) = csv {
                let text = emit_report(&results, ReportFormat::Csv).map_err(core)?;
                std::fs::write(&p, text).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
            }
            return Ok(failed == 0);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
