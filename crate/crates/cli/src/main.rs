mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use emaclaurin::analysis::{
    convergence_report, riemann_sum, write_report_csv, AnalysisError, ConvergenceConfig,
    RiemannOptions, DEFAULT_POINT_BUDGET,
};
use emaclaurin::expansion::{expand, BumpProfile, ExpandOptions, ExpansionError, PouOptions};
use emaclaurin::functions::{parse_expression, AffinePullback, FunctionError, SmoothFunction};
use emaclaurin::geometry::{parse_polytope, random_unimodular, DelzantPolytope};
use emaclaurin::quadrature::{QuadratureConfig, QuadratureError};

#[derive(Debug, Parser)]
#[command(
    name = "emaclaurin",
    version,
    about = "Euler-MacLaurin expansions of lattice Riemann sums"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Debug, Args, Clone)]
struct GlobalOpts {
    /// Worker threads for enumeration and quadrature (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed of the random unimodular map applied by --unimodular.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Replace the polytope by its image under a random unimodular map and
    /// the function by its pullback; results are invariant.
    #[arg(long, global = true)]
    unimodular: bool,
    /// Absolute quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    abs_tol: f64,
    /// Relative quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel_tol: f64,
    /// Maximum bisection depth per quadrature coordinate.
    #[arg(long, global = true, default_value_t = 20)]
    max_subdivisions: usize,
    /// Gauss-Legendre points per subinterval.
    #[arg(long, global = true, default_value_t = 10)]
    quad_order: usize,
    /// Lattice-point budget of the enumeration oracle.
    #[arg(long, global = true, default_value_t = DEFAULT_POINT_BUDGET)]
    budget: u64,
    /// Partition-of-unity margin for 3-D polytopes (default: a quarter of
    /// the smallest vertex-to-facet gap).
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Transition profile of the partition of unity.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Standard)]
    profile: Profile,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Profile {
    Standard,
    Steep,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Brute-force Riemann sum S_N.
    Sum {
        polytope: PathBuf,
        #[arg(long = "f")]
        f: String,
        #[arg(long = "N")]
        n: u64,
        /// Sum polynomials in floating point instead of rationals.
        #[arg(long)]
        float: bool,
    },
    /// Coefficients T_0..T_Q with the per-face breakdown.
    Expand {
        polytope: PathBuf,
        #[arg(long = "f")]
        f: String,
        #[arg(long = "Q")]
        q: usize,
        /// Write `face,q,value` records to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Remainders R_N = |S_N - P_N| and their fitted log-log slope.
    Converge {
        polytope: PathBuf,
        #[arg(long = "f")]
        f: String,
        #[arg(long = "Q")]
        q: usize,
        #[arg(long = "N-list", value_delimiter = ',', num_args = 1.., required = true)]
        n_list: Vec<u64>,
        /// Write the report CSV to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Smallest N values left out of the slope fit.
        #[arg(long, default_value_t = 1)]
        exclude_smallest: usize,
        /// Required ratio between the largest and smallest N.
        #[arg(long, default_value_t = 10.0)]
        min_span: f64,
    },
    /// Check that a polytope file describes a Delzant polytope.
    Validate { polytope: PathBuf },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Polytope {
        path: PathBuf,
        source: emaclaurin::geometry::GeometryError,
    },
    #[error("invalid option: {0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] emaclaurin::Error),
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Lib(e.into())
    }
}

impl From<ExpansionError> for CliError {
    fn from(e: ExpansionError) -> Self {
        CliError::Lib(e.into())
    }
}

impl From<FunctionError> for CliError {
    fn from(e: FunctionError) -> Self {
        CliError::Lib(e.into())
    }
}

fn function_code(e: &FunctionError) -> u8 {
    match e {
        FunctionError::Domain(_) => 4,
        _ => 2,
    }
}

fn quadrature_code(e: &QuadratureError) -> u8 {
    match e {
        QuadratureError::Function(f) => function_code(f),
        QuadratureError::Unbounded | QuadratureError::UnknownFace(_) => 2,
        QuadratureError::ToleranceNotReached { .. } => 4,
    }
}

fn expansion_code(e: &ExpansionError) -> u8 {
    match e {
        ExpansionError::Quadrature(q) => quadrature_code(q),
        ExpansionError::Function(f) => function_code(f),
        ExpansionError::PartitionFailure { .. } => 4,
        _ => 2,
    }
}

impl CliError {
    /// 2 input error, 3 resource budget, 4 numerical failure.
    fn exit_code(&self) -> u8 {
        use emaclaurin::Error as E;
        match self {
            CliError::Io { .. } | CliError::Polytope { .. } | CliError::Usage(_) => 2,
            CliError::Lib(E::Geometry(_)) => 2,
            CliError::Lib(E::Function(f)) => function_code(f),
            CliError::Lib(E::Quadrature(q)) => quadrature_code(q),
            CliError::Lib(E::Expansion(x)) => expansion_code(x),
            CliError::Lib(E::Analysis(a)) => match a {
                AnalysisError::TooManyPoints { .. } => 3,
                AnalysisError::Expansion(x) => expansion_code(x),
                AnalysisError::Function(f) => function_code(f),
                AnalysisError::Io(_) | AnalysisError::Csv(_) | AnalysisError::InvalidInput(_) => 2,
            },
        }
    }
}

struct Problem {
    polytope: DelzantPolytope,
    f: Arc<dyn SmoothFunction>,
}

fn load_polytope(path: &Path) -> Result<DelzantPolytope, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_polytope(&text).map_err(|source| CliError::Polytope {
        path: path.to_owned(),
        source,
    })
}

fn load_problem(path: &Path, expr: &str, g: &GlobalOpts) -> Result<Problem, CliError> {
    let polytope = load_polytope(path)?;
    let f: Arc<dyn SmoothFunction> = Arc::new(parse_expression(expr, polytope.dim())?);
    if !g.unimodular {
        return Ok(Problem { polytope, f });
    }
    let map = random_unimodular(polytope.dim(), 3, 3, g.seed);
    Ok(Problem {
        polytope: polytope.transformed(&map),
        f: Arc::new(AffinePullback::new(f, map)),
    })
}

impl GlobalOpts {
    fn quadrature(&self) -> Result<QuadratureConfig, CliError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(CliError::Usage("tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 || self.quad_order == 0 {
            return Err(CliError::Usage(
                "--max-subdivisions and --quad-order must be positive".into(),
            ));
        }
        Ok(QuadratureConfig::new(
            self.abs_tol,
            self.rel_tol,
            self.max_subdivisions,
            self.quad_order,
        ))
    }

    fn expand_options(&self) -> Result<ExpandOptions, CliError> {
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(CliError::Usage("--delta must be positive".into()));
            }
        }
        Ok(ExpandOptions {
            quadrature: self.quadrature()?,
            pou: PouOptions {
                delta: self.delta,
                profile: match self.profile {
                    Profile::Standard => BumpProfile::Standard,
                    Profile::Steep => BumpProfile::Steep,
                },
            },
        })
    }

    fn riemann(&self) -> RiemannOptions {
        RiemannOptions {
            budget: self.budget,
            ..RiemannOptions::default()
        }
    }

    fn header_fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("threads", self.threads.to_string()),
            ("seed", self.seed.to_string()),
            ("unimodular", self.unimodular.to_string()),
            ("abs_tol", format!("{:e}", self.abs_tol)),
            ("rel_tol", format!("{:e}", self.rel_tol)),
            ("max_subdivisions", self.max_subdivisions.to_string()),
            ("quad_order", self.quad_order.to_string()),
            ("budget", self.budget.to_string()),
            ("delta", self.delta.map_or("auto".into(), |d| d.to_string())),
            ("profile", format!("{:?}", self.profile).to_lowercase()),
        ]
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if g.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(g.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    }
    let mut header = vec![];
    match &cli.command {
        Command::Sum {
            polytope,
            f,
            n,
            float,
        } => {
            let prob = load_problem(polytope, f, g)?;
            header.extend([
                ("command", "sum".to_string()),
                ("polytope", polytope.display().to_string()),
                ("f", f.clone()),
                ("N", n.to_string()),
                ("float", float.to_string()),
            ]);
            header.extend(g.header_fields());
            render::header(&header);
            let opts = RiemannOptions {
                exact: !float,
                ..g.riemann()
            };
            let s = riemann_sum(&(&prob.polytope).into(), &*prob.f, *n, &opts)?;
            render::sum(&s);
        }
        Command::Expand {
            polytope,
            f,
            q,
            csv,
        } => {
            let prob = load_problem(polytope, f, g)?;
            header.extend([
                ("command", "expand".to_string()),
                ("polytope", polytope.display().to_string()),
                ("f", f.clone()),
                ("Q", q.to_string()),
            ]);
            header.extend(g.header_fields());
            render::header(&header);
            let r = expand(&prob.polytope, &*prob.f, *q, &g.expand_options()?)?;
            render::expansion(&r);
            if let Some(path) = csv {
                let mut text = String::from("face,q,value\n");
                for b in &r.breakdown {
                    for (k, c) in b.per_order.iter().enumerate() {
                        text.push_str(&format!("\"{}\",{k},{c}\n", b.label.replace('"', "\"\"")));
                    }
                }
                for (k, c) in r.coefficients.iter().enumerate() {
                    text.push_str(&format!("total,{k},{c}\n"));
                }
                fs::write(path, text).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
            }
        }
        Command::Converge {
            polytope,
            f,
            q,
            n_list,
            csv,
            exclude_smallest,
            min_span,
        } => {
            let prob = load_problem(polytope, f, g)?;
            header.extend([
                ("command", "converge".to_string()),
                ("polytope", polytope.display().to_string()),
                ("f", f.clone()),
                ("Q", q.to_string()),
                (
                    "N_list",
                    n_list
                        .iter()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(","),
                ),
                ("exclude_smallest", exclude_smallest.to_string()),
                ("min_span", min_span.to_string()),
            ]);
            header.extend(g.header_fields());
            render::header(&header);
            let cfg = ConvergenceConfig {
                expand: g.expand_options()?,
                riemann: g.riemann(),
                exclude_smallest: *exclude_smallest,
                min_span: *min_span,
                ..ConvergenceConfig::default()
            };
            let report = convergence_report(&(&prob.polytope).into(), &*prob.f, *q, n_list, &cfg)?;
            render::convergence(&report);
            if let Some(path) = csv {
                let file = fs::File::create(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                write_report_csv(&report, file)?;
            }
        }
        Command::Validate { polytope } => {
            header.extend([
                ("command", "validate".to_string()),
                ("polytope", polytope.display().to_string()),
            ]);
            render::header(&header);
            let p = load_polytope(polytope)?;
            render::validation(&p);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
