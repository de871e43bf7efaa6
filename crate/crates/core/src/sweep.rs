//! Refinement sweeps: Jacobian and lifted solvers against a shared reference
//! over a list of grid sizes, with persisted results.
//!
//! Output layout under the run directory:
//!
//! ```text
//! <method>_Q<q>_N<n>/trajectory.csv
//! <method>_Q<q>_N<n>/report.json
//! <method>_Q<q>_N<n>/final_a_zz.mtx, final_b_z.csv   (lifted only)
//! summary.csv
//! slopes.json
//! config.json
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{ClosureMode, LiftedAffineSystem};
use crate::demos::{self, DemoProblem};
use crate::error::{CarlemanError, Result};
use crate::integrate::{
    solve_jacobian_euler, solve_reference, uniform_grid, LiftedEulerSolver, Trajectory,
    DEFAULT_REFERENCE_TOL,
};
use crate::io;
use crate::metrics::{convergence_slope, max_error, ErrorReport};
use crate::operator::{PolynomialOperator, SystemDefinition};

/// Stored trajectories are thinned to at most this many samples.
pub const MAX_STORED_SAMPLES: usize = 2001;

pub const DEMO1_DEGZ: [u32; 3] = [3, 4, 5];
pub const DEMO1_N_EVAL: [usize; 2] = [101, 201];
pub const DEMO2_DEGZ: [u32; 3] = [2, 3, 4];
pub const DEMO2_N_EVAL: [usize; 10] = [11, 21, 51, 101, 201, 501, 1001, 2001, 5001, 10001];
/// Grid sizes used for the convergence-slope fit by default.
pub const DEFAULT_SLOPE_WINDOW: (usize, usize) = (101, 2001);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemSource {
    Demo(String),
    Path(PathBuf),
}

/// Integration method for one cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Jacobian,
    Lifted { q: u32 },
    Reference,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Jacobian => "jacobian",
            Method::Lifted { .. } => "lifted",
            Method::Reference => "reference",
        }
    }

    /// Lifted truncation degree; the Jacobian baseline is the degree-1 lift.
    pub fn deg_z(&self) -> u32 {
        match self {
            Method::Lifted { q } => *q,
            Method::Jacobian | Method::Reference => 1,
        }
    }

    /// `jacobian`, `lifted_Q3`, ...
    pub fn label(&self) -> String {
        match self {
            Method::Lifted { q } => format!("lifted_Q{q}"),
            other => other.name().to_string(),
        }
    }

    pub fn cell_dir(&self, n_eval: usize) -> String {
        format!("{}_Q{}_N{}", self.name(), self.deg_z(), n_eval)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A fully resolved sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub system: SystemSource,
    #[serde(rename = "degZ_list")]
    pub deg_z: Vec<u32>,
    #[serde(rename = "n_eval_list")]
    pub n_eval: Vec<usize>,
    pub t_span: (f64, f64),
    pub x_init: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub mode: ClosureMode,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub slope_window: (usize, usize),
}

/// Partial configuration; later layers override earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOverrides {
    pub system: Option<SystemSource>,
    #[serde(rename = "degZ_list")]
    pub deg_z: Option<Vec<u32>>,
    #[serde(rename = "n_eval_list")]
    pub n_eval: Option<Vec<usize>>,
    pub t_span: Option<(f64, f64)>,
    pub x_init: Option<Vec<f64>>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub mode: Option<ClosureMode>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub slope_window: Option<(usize, usize)>,
}

impl SweepOverrides {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Fields set in `top` win.
    pub fn layered(self, top: SweepOverrides) -> SweepOverrides {
        SweepOverrides {
            system: top.system.or(self.system),
            deg_z: top.deg_z.or(self.deg_z),
            n_eval: top.n_eval.or(self.n_eval),
            t_span: top.t_span.or(self.t_span),
            x_init: top.x_init.or(self.x_init),
            rtol: top.rtol.or(self.rtol),
            atol: top.atol.or(self.atol),
            mode: top.mode.or(self.mode),
            output_dir: top.output_dir.or(self.output_dir),
            workers: top.workers.or(self.workers),
            slope_window: top.slope_window.or(self.slope_window),
        }
    }
}

/// Operator plus problem defaults resolved from a [`SystemSource`].
#[derive(Clone, Debug)]
pub struct LoadedSystem {
    pub label: String,
    pub op: PolynomialOperator,
    pub x_init: Option<Vec<f64>>,
    pub t_span: Option<(f64, f64)>,
}

impl SystemSource {
    pub fn load(&self) -> Result<LoadedSystem> {
        match self {
            SystemSource::Demo(name) => {
                let DemoProblem {
                    name,
                    op,
                    x_init,
                    t_span,
                } = demos::demo(name)?;
                Ok(LoadedSystem {
                    label: name.to_string(),
                    op,
                    x_init: Some(x_init),
                    t_span: Some(t_span),
                })
            }
            SystemSource::Path(path) => {
                let op = SystemDefinition::from_path(path)?.to_operator()?;
                let label = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "system".into());
                Ok(LoadedSystem {
                    label,
                    op,
                    x_init: None,
                    t_span: None,
                })
            }
        }
    }
}

impl SweepConfig {
    /// Resolve against built-in defaults: flags over config file over demo.
    pub fn resolve(o: SweepOverrides) -> Result<(Self, LoadedSystem)> {
        let system = o
            .system
            .ok_or_else(|| CarlemanError::InvalidConfig("no system given".into()))?;
        let loaded = system.load()?;
        let (default_degz, default_neval): (&[u32], &[usize]) = match &system {
            SystemSource::Demo(name) if name == "demo1" => (&DEMO1_DEGZ, &DEMO1_N_EVAL),
            _ => (&DEMO2_DEGZ, &DEMO2_N_EVAL),
        };
        let t_span = o.t_span.or(loaded.t_span).ok_or_else(|| {
            CarlemanError::InvalidConfig("t_span is required for file-defined systems".into())
        })?;
        let x_init = o.x_init.or_else(|| loaded.x_init.clone()).ok_or_else(|| {
            CarlemanError::InvalidConfig("x_init is required for file-defined systems".into())
        })?;
        let cfg = SweepConfig {
            deg_z: o.deg_z.unwrap_or_else(|| default_degz.to_vec()),
            n_eval: o.n_eval.unwrap_or_else(|| default_neval.to_vec()),
            t_span,
            x_init,
            rtol: o.rtol.unwrap_or(DEFAULT_REFERENCE_TOL),
            atol: o.atol.unwrap_or(DEFAULT_REFERENCE_TOL),
            mode: o.mode.unwrap_or_default(),
            output_dir: o
                .output_dir
                .unwrap_or_else(|| PathBuf::from("runs").join(&loaded.label)),
            workers: o.workers.unwrap_or(0),
            slope_window: o.slope_window.unwrap_or(DEFAULT_SLOPE_WINDOW),
            system,
        };
        cfg.validate(&loaded.op)?;
        Ok((cfg, loaded))
    }

    pub fn validate(&self, op: &PolynomialOperator) -> Result<()> {
        if let Some(q) = self.deg_z.iter().find(|&&q| q < op.degree()) {
            return Err(CarlemanError::InvalidConfig(format!(
                "degZ {q} is below the system degree P = {}",
                op.degree()
            )));
        }
        if self.n_eval.iter().any(|&n| n < 2) {
            return Err(CarlemanError::InvalidConfig("n_eval entries must be >= 2".into()));
        }
        if self.x_init.len() != op.n() {
            return Err(CarlemanError::DimensionMismatch {
                expected: op.n(),
                found: self.x_init.len(),
            });
        }
        if !(self.t_span.1 > self.t_span.0) {
            return Err(CarlemanError::InvalidConfig("t_span must be increasing".into()));
        }
        Ok(())
    }

    pub fn methods(&self) -> Vec<Method> {
        std::iter::once(Method::Jacobian)
            .chain(self.deg_z.iter().map(|&q| Method::Lifted { q }))
            .collect()
    }
}

/// Everything one `(method, n_eval)` run produces.
#[derive(Clone, Debug)]
pub struct CellOutput {
    pub trajectory: Trajectory,
    pub report: Option<ErrorReport>,
    pub final_system: Option<LiftedAffineSystem>,
}

/// Solve one cell on the `n_eval`-node grid. With a reference the error
/// report is filled in.
pub fn run_cell(
    op: &PolynomialOperator,
    x_init: &[f64],
    t_span: (f64, f64),
    method: Method,
    n_eval: usize,
    mode: ClosureMode,
    reference: Option<&Trajectory>,
) -> Result<CellOutput> {
    if n_eval < 2 {
        return Err(CarlemanError::InvalidConfig("n_eval must be >= 2".into()));
    }
    let n_steps = n_eval - 1;
    let (trajectory, final_system) = match method {
        Method::Jacobian => (solve_jacobian_euler(op, x_init, t_span, n_steps)?, None),
        Method::Lifted { q } => {
            let sol = LiftedEulerSolver::new(op, q, mode)?.run(x_init, t_span, n_steps)?;
            (sol.trajectory, Some(sol.final_system))
        }
        Method::Reference => {
            let tol = DEFAULT_REFERENCE_TOL;
            let grid = uniform_grid(t_span.0, t_span.1, n_steps);
            (solve_reference(op, x_init, t_span, tol, tol, &grid)?, None)
        }
    };
    let report = reference.map(|r| max_error(&trajectory, r)).transpose()?;
    Ok(CellOutput {
        trajectory,
        report,
        final_system,
    })
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub method: Method,
    pub n_eval: usize,
    pub outcome: std::result::Result<CellOutput, String>,
}

impl CellResult {
    pub fn report(&self) -> Option<&ErrorReport> {
        self.outcome.as_ref().ok().and_then(|c| c.report.as_ref())
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub label: String,
    pub config: SweepConfig,
    /// Sorted by method, then grid size.
    pub cells: Vec<CellResult>,
    /// Log–log slope of `E` vs `Δt` per method label inside the slope window.
    pub slopes: BTreeMap<String, Option<f64>>,
}

impl SweepResult {
    pub fn cell(&self, method: Method, n_eval: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.n_eval == n_eval)
    }

    pub fn error(&self, method: Method, n_eval: usize) -> Option<f64> {
        self.cell(method, n_eval)?.report().map(|r| r.max_error)
    }

    pub fn reports(&self, method: Method) -> Vec<ErrorReport> {
        self.cells
            .iter()
            .filter(|c| c.method == method)
            .filter_map(|c| c.report().cloned())
            .collect()
    }
}

/// Run every cell of the sweep. Cell failures are recorded, not raised.
pub fn run_sweep(cfg: &SweepConfig, loaded: &LoadedSystem) -> Result<SweepResult> {
    cfg.validate(&loaded.op)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CarlemanError::InvalidConfig(format!("thread pool: {e}")))?;
    let op = &loaded.op;

    let mut grids = cfg.n_eval.clone();
    grids.sort_unstable();
    grids.dedup();

    let cells = pool.install(|| {
        let references: Vec<std::result::Result<Trajectory, String>> = grids
            .par_iter()
            .map(|&n_eval| {
                let grid = uniform_grid(cfg.t_span.0, cfg.t_span.1, n_eval - 1);
                solve_reference(op, &cfg.x_init, cfg.t_span, cfg.rtol, cfg.atol, &grid)
                    .map_err(|e| format!("reference: {e}"))
            })
            .collect();

        let mut methods = cfg.methods();
        methods.sort();
        methods.dedup();
        let jobs: Vec<(Method, usize, usize)> = methods
            .iter()
            .flat_map(|&m| grids.iter().enumerate().map(move |(g, &n)| (m, g, n)))
            .collect();

        jobs.par_iter()
            .map(|&(method, g, n_eval)| {
                let outcome = match &references[g] {
                    Ok(r) => run_cell(op, &cfg.x_init, cfg.t_span, method, n_eval, cfg.mode, Some(r))
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                };
                CellResult {
                    method,
                    n_eval,
                    outcome,
                }
            })
            .collect::<Vec<_>>()
    });

    let (lo, hi) = cfg.slope_window;
    let mut slopes = BTreeMap::new();
    for method in cfg.methods() {
        let pts: Vec<(f64, f64)> = cells
            .iter()
            .filter(|c| c.method == method && (lo..=hi).contains(&c.n_eval))
            .filter_map(|c| c.report().map(|r| (r.dt, r.max_error)))
            .collect();
        slopes.insert(method.label(), convergence_slope(&pts));
    }

    Ok(SweepResult {
        label: loaded.label.clone(),
        config: cfg.clone(),
        cells,
        slopes,
    })
}

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    #[serde(rename = "degZ")]
    pub deg_z: u32,
    pub n_eval: usize,
    pub dt: f64,
    /// `FAILED` on disk when the cell did not complete.
    pub max_error: String,
    pub frob_error: String,
}

impl SummaryRow {
    pub fn max_error(&self) -> Option<f64> {
        self.max_error.parse().ok()
    }

    pub fn frob_error(&self) -> Option<f64> {
        self.frob_error.parse().ok()
    }

    /// `jacobian` or `lifted_Q<degZ>`.
    pub fn label(&self) -> String {
        if self.method == "lifted" {
            format!("lifted_Q{}", self.deg_z)
        } else {
            self.method.clone()
        }
    }
}

pub fn summary_rows(result: &SweepResult) -> Vec<SummaryRow> {
    let (t0, t1) = result.config.t_span;
    result
        .cells
        .iter()
        .map(|c| {
            let (max_error, frob_error) = match c.report() {
                Some(r) => (r.max_error.to_string(), r.frob_error.to_string()),
                None => ("FAILED".to_string(), "FAILED".to_string()),
            };
            SummaryRow {
                method: c.method.name().to_string(),
                deg_z: c.method.deg_z(),
                n_eval: c.n_eval,
                dt: (t1 - t0) / (c.n_eval - 1) as f64,
                max_error,
                frob_error,
            }
        })
        .collect()
}

pub fn write_summary<W: std::io::Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<SummaryRow>, _>>()?;
    Ok(rows)
}

#[derive(Serialize)]
struct SlopesFile<'a> {
    window: (usize, usize),
    slopes: &'a BTreeMap<String, Option<f64>>,
}

#[derive(Serialize)]
struct ConfigFile<'a> {
    label: &'a str,
    config: &'a SweepConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

/// Persist a sweep under `dir`.
pub fn write_sweep(result: &SweepResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for cell in &result.cells {
        let Ok(out) = &cell.outcome else { continue };
        let cell_dir = dir.join(cell.method.cell_dir(cell.n_eval));
        std::fs::create_dir_all(&cell_dir)?;
        io::save_trajectory(&out.trajectory.thinned(MAX_STORED_SAMPLES), cell_dir.join("trajectory.csv"))?;
        if let Some(report) = &out.report {
            io::write_json(report, cell_dir.join("report.json"))?;
        }
        if let Some(sys) = &out.final_system {
            io::save_matrix_market(&sys.a_zz, cell_dir.join("final_a_zz.mtx"))?;
            io::save_vector(&sys.b_z, cell_dir.join("final_b_z.csv"))?;
        }
    }

    let file = std::fs::File::create(dir.join("summary.csv"))?;
    write_summary(&summary_rows(result), std::io::BufWriter::new(file))?;
    io::write_json(
        &SlopesFile {
            window: result.config.slope_window,
            slopes: &result.slopes,
        },
        dir.join("slopes.json"),
    )?;
    let note = matches!(&result.config.system, SystemSource::Demo(n) if n == "demo1")
        .then_some("demo1 rates, coupling, initial state and time span are library defaults");
    io::write_json(
        &ConfigFile {
            label: &result.label,
            config: &result.config,
            note,
        },
        dir.join("config.json"),
    )?;
    Ok(())
}
