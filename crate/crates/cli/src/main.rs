use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use carleman_core::basis::{count_sym, count_tensor, MonomialBasis};
use carleman_core::integrate::{solve_reference, uniform_grid, DEFAULT_REFERENCE_TOL};
use carleman_core::report::{SweepReport, DEFAULT_TOLERANCES};
use carleman_core::sweep::{
    run_cell, run_sweep, summary_rows, write_sweep, LoadedSystem, Method, SweepConfig, SweepOverrides,
    SystemSource,
};
use carleman_core::{assemble_lifted, io, shift_operator, CarlemanError, ClosureMode, LiftStructure};

#[derive(Parser)]
#[command(name = "carleman", version, about = "Shift-and-lift Carleman linearization for polynomial ODEs")]
struct Cli {
    /// Output root directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// List a monomial basis and its sizes.
    Basis {
        #[arg(long)]
        n: u32,
        #[arg(long = "Q")]
        q: u32,
        #[arg(long)]
        counts_only: bool,
    },
    /// Assemble the lifted operator at one center.
    Assemble {
        #[command(flatten)]
        system: SystemArgs,
        /// Expansion center; defaults to the demo initial state or zero.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        center: Option<Vec<f64>>,
        #[arg(long = "Q")]
        q: u32,
        #[arg(long, default_value = "drop")]
        mode: ClosureMode,
    },
    /// Integrate one system with one method.
    Run {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        n_eval: usize,
        #[arg(long = "Q")]
        q: Option<u32>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t_span: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x_init: Option<Vec<f64>>,
        #[arg(long, default_value = "drop")]
        mode: ClosureMode,
        /// Reference tolerances for the error report.
        #[arg(long, default_value_t = DEFAULT_REFERENCE_TOL)]
        ref_rtol: f64,
        #[arg(long, default_value_t = DEFAULT_REFERENCE_TOL)]
        ref_atol: f64,
        /// Skip the reference solve and report.json.
        #[arg(long)]
        no_ref: bool,
    },
    /// Refinement sweep over lift degrees and grid sizes.
    Sweep {
        /// JSON config; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "system")]
        demo: Option<String>,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        degz: Option<Vec<u32>>,
        #[arg(long, value_delimiter = ',')]
        n_eval: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t_span: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x_init: Option<Vec<f64>>,
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(long)]
        atol: Option<f64>,
        #[arg(long)]
        mode: Option<ClosureMode>,
        /// Grid sizes `lo,hi` used for the slope fit.
        #[arg(long, value_delimiter = ',')]
        slope_window: Option<Vec<usize>>,
    },
    /// Tables and plots from a sweep directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, value_delimiter = ',')]
        tol: Option<Vec<f64>>,
        /// Also write error_vs_steps.svg into the run directory.
        #[arg(long)]
        svg: bool,
    },
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long, conflicts_with = "system", required_unless_present = "system")]
    demo: Option<String>,
    /// System definition JSON.
    #[arg(long)]
    system: Option<PathBuf>,
}

impl SystemArgs {
    fn source(&self) -> SystemSource {
        match (&self.demo, &self.system) {
            (Some(d), _) => SystemSource::Demo(d.clone()),
            (None, Some(p)) => SystemSource::Path(p.clone()),
            (None, None) => unreachable!("clap requires one of --demo/--system"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Jacobian,
    Lifted,
    Reference,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<CarlemanError> for Failure {
    fn from(e: CarlemanError) -> Self {
        Failure {
            code: if e.is_numerical() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Basis { n, q, counts_only } => cmd_basis(cli, *n, *q, *counts_only),
        Command::Assemble {
            system,
            center,
            q,
            mode,
        } => cmd_assemble(cli, system, center.clone(), *q, *mode),
        Command::Run {
            system,
            method,
            n_eval,
            q,
            t_span,
            x_init,
            mode,
            ref_rtol,
            ref_atol,
            no_ref,
        } => {
            let method = match (method, q) {
                (MethodArg::Jacobian, _) => Method::Jacobian,
                (MethodArg::Reference, _) => Method::Reference,
                (MethodArg::Lifted, Some(q)) => Method::Lifted { q: *q },
                (MethodArg::Lifted, None) => return Err(usage("--method lifted requires --Q")),
            };
            let reference = (!no_ref).then_some((*ref_rtol, *ref_atol));
            cmd_run(cli, system, method, *n_eval, t_span.as_deref(), x_init.clone(), *mode, reference)
        }
        Command::Sweep {
            config,
            demo,
            system,
            degz,
            n_eval,
            t_span,
            x_init,
            rtol,
            atol,
            mode,
            slope_window,
        } => {
            let from_file = match config {
                Some(p) => SweepOverrides::from_path(p)?,
                None => SweepOverrides::default(),
            };
            let flags = SweepOverrides {
                system: demo
                    .clone()
                    .map(SystemSource::Demo)
                    .or_else(|| system.clone().map(SystemSource::Path)),
                deg_z: degz.clone(),
                n_eval: n_eval.clone(),
                t_span: t_span.as_deref().map(pair).transpose()?,
                x_init: x_init.clone(),
                rtol: *rtol,
                atol: *atol,
                mode: *mode,
                output_dir: None,
                workers: cli.workers,
                slope_window: slope_window
                    .as_deref()
                    .map(|w| match w {
                        [lo, hi] => Ok((*lo, *hi)),
                        _ => Err(usage("--slope-window takes two values")),
                    })
                    .transpose()?,
            };
            cmd_sweep(cli, from_file.layered(flags))
        }
        Command::Report { run_dir, tol, svg } => cmd_report(cli, run_dir, tol.as_deref(), *svg),
    }
}

fn pair(v: &[f64]) -> Result<(f64, f64), Failure> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(usage("--t-span takes two values, e.g. 0,20")),
    }
}

fn out_root(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("runs"))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn cmd_basis(cli: &Cli, n: u32, q: u32, counts_only: bool) -> CmdResult {
    let sym = count_sym(n, q)?;
    // The tensor convention is only defined for n > 1.
    let tensor = if n > 1 { Some(count_tensor(n, q)?) } else { None };
    let basis = if counts_only {
        None
    } else {
        Some(MonomialBasis::generate(n as usize, q)?)
    };
    let tensor_text = tensor.map(|t| t.to_string()).unwrap_or_else(|| "n/a".into());

    match cli.format {
        Format::Json => print_json(&json!({
            "n": n,
            "Q": q,
            "count_sym": sym,
            "count_tensor": tensor,
            "members": basis.as_ref().map(|b| b.members().iter().map(|m| m.powers().to_vec()).collect::<Vec<_>>()),
        })),
        Format::Csv => {
            if let Some(b) = &basis {
                println!("index,degree,exponents");
                for (k, m) in b.members().iter().enumerate() {
                    println!("{k},{},\"{m}\"", m.degree());
                }
            } else {
                println!("count_sym,count_tensor");
                println!("{sym},{tensor_text}");
            }
        }
        Format::Text => {
            if let Some(b) = &basis {
                println!("{:>6}  {:>6}  exponents", "index", "degree");
                for (k, m) in b.members().iter().enumerate() {
                    println!("{k:>6}  {:>6}  {m}", m.degree());
                }
            }
            println!("sym {sym}");
            println!("tensor {tensor_text}");
        }
    }
    Ok(())
}

fn cmd_assemble(
    cli: &Cli,
    system: &SystemArgs,
    center: Option<Vec<f64>>,
    q: u32,
    mode: ClosureMode,
) -> CmdResult {
    let loaded = system.source().load()?;
    let op = &loaded.op;
    let center = center
        .or_else(|| loaded.x_init.clone())
        .unwrap_or_else(|| vec![0.0; op.n()]);
    let structure = LiftStructure::build(op.n(), op.degree(), q)?;
    let sys = assemble_lifted(&shift_operator(op, &center)?, &structure, mode)?;

    let dir = out_root(cli).join(&loaded.label).join(format!("assemble_Q{q}"));
    std::fs::create_dir_all(&dir).map_err(CarlemanError::from)?;
    io::save_matrix_market(&sys.a_zz, dir.join("a_zz.mtx"))?;
    io::save_vector(&sys.b_z, dir.join("b_z.csv"))?;
    io::write_json(&sys.stats, dir.join("stats.json"))?;

    let s = &sys.stats;
    match cli.format {
        Format::Json => print_json(&json!({
            "dir": dir,
            "dim": sys.dim(),
            "nnz": sys.a_zz.nnz(),
            "stats": s,
        })),
        Format::Csv => {
            println!("dim,nnz,t_shift,t_lift,u_ours,dropped,t_offset,emitted");
            println!(
                "{},{},{},{},{},{},{},{}",
                sys.dim(),
                sys.a_zz.nnz(),
                s.t_shift,
                s.t_lift,
                s.u_ours,
                s.dropped,
                s.t_offset,
                s.emitted
            );
        }
        Format::Text => {
            println!("wrote {}", dir.display());
            println!("dim {}  nnz {}", sys.dim(), sys.a_zz.nnz());
            println!(
                "t_shift {}  t_lift {}  u_ours {}  dropped {}  t_offset {}  emitted {}",
                s.t_shift, s.t_lift, s.u_ours, s.dropped, s.t_offset, s.emitted
            );
        }
    }
    Ok(())
}

fn problem(
    loaded: &LoadedSystem,
    t_span: Option<(f64, f64)>,
    x_init: Option<Vec<f64>>,
) -> Result<((f64, f64), Vec<f64>), Failure> {
    let t_span = t_span
        .or(loaded.t_span)
        .ok_or_else(|| usage("--t-span is required for file-defined systems"))?;
    let x_init = x_init
        .or_else(|| loaded.x_init.clone())
        .ok_or_else(|| usage("--x-init is required for file-defined systems"))?;
    Ok((t_span, x_init))
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    cli: &Cli,
    system: &SystemArgs,
    method: Method,
    n_eval: usize,
    t_span: Option<&[f64]>,
    x_init: Option<Vec<f64>>,
    mode: ClosureMode,
    reference: Option<(f64, f64)>,
) -> CmdResult {
    let loaded = system.source().load()?;
    let (t_span, x_init) = problem(&loaded, t_span.map(pair).transpose()?, x_init)?;
    if n_eval < 2 {
        return Err(usage("--n-eval must be at least 2"));
    }
    let reference = match (method, reference) {
        (Method::Reference, _) | (_, None) => None,
        (_, Some((rtol, atol))) => {
            let grid = uniform_grid(t_span.0, t_span.1, n_eval - 1);
            Some(solve_reference(&loaded.op, &x_init, t_span, rtol, atol, &grid)?)
        }
    };
    let cell = run_cell(&loaded.op, &x_init, t_span, method, n_eval, mode, reference.as_ref())?;

    let dir = out_root(cli).join(&loaded.label).join(method.cell_dir(n_eval));
    std::fs::create_dir_all(&dir).map_err(CarlemanError::from)?;
    io::save_trajectory(&cell.trajectory, dir.join("trajectory.csv"))?;
    if let Some(r) = &cell.report {
        io::write_json(r, dir.join("report.json"))?;
    }
    if let Some(sys) = &cell.final_system {
        io::save_matrix_market(&sys.a_zz, dir.join("final_a_zz.mtx"))?;
        io::save_vector(&sys.b_z, dir.join("final_b_z.csv"))?;
    }

    let final_state = cell.trajectory.states.last().cloned().unwrap_or_default();
    match cli.format {
        Format::Json => print_json(&json!({
            "dir": dir,
            "final_state": final_state,
            "report": cell.report,
        })),
        Format::Csv => {
            println!("method,degZ,n_eval,dt,max_error,frob_error");
            let (e, f) = cell
                .report
                .as_ref()
                .map(|r| (r.max_error.to_string(), r.frob_error.to_string()))
                .unwrap_or_default();
            println!(
                "{},{},{},{},{e},{f}",
                method.name(),
                method.deg_z(),
                n_eval,
                (t_span.1 - t_span.0) / (n_eval - 1) as f64
            );
        }
        Format::Text => {
            println!("wrote {}", dir.display());
            println!("final state {final_state:?}");
            if let Some(r) = &cell.report {
                println!("dt {}  max_error {:.6e}  frob_error {:.6e}", r.dt, r.max_error, r.frob_error);
            }
        }
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli, overrides: SweepOverrides) -> CmdResult {
    let (mut cfg, loaded) = SweepConfig::resolve(overrides)?;
    if let Some(root) = &cli.out {
        cfg.output_dir = root.join(&loaded.label);
    }
    let result = run_sweep(&cfg, &loaded)?;
    write_sweep(&result, &cfg.output_dir)?;

    let failed: Vec<String> = result
        .cells
        .iter()
        .filter_map(|c| {
            c.outcome
                .as_ref()
                .err()
                .map(|e| format!("{} N={}: {e}", c.method, c.n_eval))
        })
        .collect();
    for f in &failed {
        eprintln!("warning: cell failed: {f}");
    }

    match cli.format {
        Format::Json => print_json(&json!({
            "dir": cfg.output_dir,
            "cells": result.cells.len(),
            "failed": failed.len(),
            "slopes": result.slopes,
        })),
        Format::Csv => {
            let summary = std::fs::read_to_string(cfg.output_dir.join("summary.csv"))
                .map_err(CarlemanError::from)?;
            print!("{summary}");
        }
        Format::Text => {
            println!("wrote {}", cfg.output_dir.display());
            println!("{:>12} {:>8} {:>12}", "method", "n_eval", "max_error");
            for row in summary_rows(&result) {
                println!("{:>12} {:>8} {:>12}", row.label(), row.n_eval, row.max_error);
            }
            for (m, s) in &result.slopes {
                let s = s.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
                println!("slope {m} {s}");
            }
        }
    }
    Ok(())
}

fn cmd_report(cli: &Cli, run_dir: &Path, tol: Option<&[f64]>, svg: bool) -> CmdResult {
    let tolerances = tol.unwrap_or(&DEFAULT_TOLERANCES);
    let report = SweepReport::from_run_dir(run_dir, tolerances)?;
    if svg {
        let path = run_dir.join("error_vs_steps.svg");
        std::fs::write(&path, report.render_svg()).map_err(CarlemanError::from)?;
        eprintln!("wrote {}", path.display());
    }
    match cli.format {
        Format::Json => print_json(&serde_json::to_value(&report).map_err(CarlemanError::from)?),
        Format::Csv => print!("{}", report.render_csv()),
        Format::Text => print!("{}", report.render_text()),
    }
    Ok(())
}
