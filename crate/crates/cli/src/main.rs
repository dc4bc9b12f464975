use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use siegel_core::complex::{build_complex, realize_polytope};
use siegel_core::config::{
    admissibility, gale_dual, gale_transform, gale_transform_with_dim, AmbientPoint,
    Configuration,
};
use siegel_core::corpus;
use siegel_core::json::format_real;
use siegel_core::leaf::{minimize, retract_with, xap_residual, SolverSettings};
use siegel_core::mac::{
    default_schedule, escape_check, parse_schedule, project_plimit, sweep, CombinatorialProjector,
};
use siegel_core::rational::RationalMatrix;
use siegel_core::suite::run_suite;
use siegel_core::verify::{
    jacobian_rank, rigidity_check, sample_cube_face, sample_orthant, Stratum, DEFAULT_FD_STEP,
    DEFAULT_RIGIDITY_TOL,
};

#[derive(Parser)]
#[command(name = "siegel", version, about = "Siegel leaves, X_A(p) retractions and moment-angle projections")]
struct Cli {
    /// RNG seed for sampled checks.
    #[arg(long, global = true, env = "SIEGEL_SEED", default_value_t = 0)]
    seed: u64,
    /// Coordinates with modulus at or below this are treated as zero.
    #[arg(long, global = true)]
    zero_threshold: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Combinatorial,
    Plimit,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Siegel condition, weak hyperbolicity and centering, with certificates.
    Admissible { config: PathBuf },
    /// Gale dual of a configuration, or the Gale transform of `{"V": ...}`.
    Gale {
        input: PathBuf,
        /// Target dimension when transforming V.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// The complex K_A, optionally with its polytope realization.
    Complex {
        config: PathBuf,
        #[arg(long)]
        realize: bool,
    },
    /// Minimizer T_p of ||F(z, T)||_p on the leaf of each point.
    Minimize {
        config: PathBuf,
        #[arg(long)]
        point: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Retraction f_p / ||f_p||_p onto X_A(p).
    Retract {
        config: PathBuf,
        #[arg(long)]
        point: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Projection onto the moment-angle complex along leaves.
    Project {
        config: PathBuf,
        #[arg(long)]
        point: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Combinatorial)]
        method: Method,
        /// Exponents for the p-limit method, e.g. 2:1024:x2.
        #[arg(long)]
        p_schedule: Option<String>,
    },
    /// Warm-started minimizers along a schedule of exponents.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        point: PathBuf,
        #[arg(long, default_value = "2:1024:x2")]
        p_schedule: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        out: Format,
    },
    /// Whether the retraction leaves C(target) along the schedule.
    Escape {
        config: PathBuf,
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value = "2:1024:x2")]
        p_schedule: String,
    },
    /// Round trip X_A(2) -> X_A'(2) -> X_A(2) through the moment-angle complexes.
    Rigidity {
        config: PathBuf,
        other: PathBuf,
        /// 1-based images of 1..m, comma separated.
        #[arg(long, value_delimiter = ',')]
        perm: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_RIGIDITY_TOL)]
        tol: f64,
    },
    /// Finite-difference Jacobian rank of the retraction on a corner stratum.
    Jacobian {
        config: PathBuf,
        /// `orthant` or `face:1,3` (1-based).
        #[arg(long)]
        stratum: String,
        /// Real point on the stratum; sampled when absent.
        #[arg(long)]
        point: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        h: f64,
    },
    /// Runs a bundled invariant suite; exits 1 if any check fails.
    Verify { suite: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<serde_json::Error>()
                .and_then(|j| j.io_error_kind())
                .is_some_and(|k| k == io::ErrorKind::BrokenPipe)
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_config(path: &Path) -> Result<Configuration> {
    serde_json::from_str(&read(path)?).with_context(|| format!("parsing configuration {}", path.display()))
}

/// One JSON document, or one per nonempty line.
fn read_points(path: &Path, threshold: Option<f64>) -> Result<Vec<AmbientPoint>> {
    let text = read(path)?;
    let points: Vec<AmbientPoint> = match serde_json::from_str(&text) {
        Ok(p) => vec![p],
        Err(_) => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(k, l)| {
                serde_json::from_str(l).with_context(|| format!("parsing point on line {} of {}", k + 1, path.display()))
            })
            .collect::<Result<_>>()?,
    };
    Ok(match threshold {
        Some(t) => points
            .into_iter()
            .map(|p| AmbientPoint::with_threshold(p.coords().to_vec(), t))
            .collect(),
        None => points,
    })
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn emit_all<T: Serialize>(values: &[T]) -> Result<()> {
    values.iter().try_for_each(emit)
}

fn parse_stratum(spec: &str, m: usize) -> Result<Stratum> {
    if spec == "orthant" {
        return Ok(Stratum::Orthant);
    }
    let Some(list) = spec.strip_prefix("face:") else {
        bail!("stratum must be `orthant` or `face:i,j,...`");
    };
    let face = list
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            let i: usize = s.trim().parse().with_context(|| format!("bad face index {s:?}"))?;
            if i == 0 || i > m {
                bail!("face index {i} outside 1..={m}");
            }
            Ok(i - 1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Stratum::CubeFace(face))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let settings = SolverSettings::default();
    let thr = cli.zero_threshold;
    match &cli.command {
        Command::Admissible { config } => emit(&admissibility(&read_config(config)?))?,
        Command::Gale { input, dim } => {
            let doc: Value = serde_json::from_str(&read(input)?)?;
            if let Some(v) = doc.get("V") {
                let v: RationalMatrix = serde_json::from_value(v.clone())?;
                let a = match dim {
                    Some(d) => gale_transform_with_dim(&v, *d)?,
                    None => gale_transform(&v)?,
                };
                emit(&a)?;
            } else {
                let a: Configuration = serde_json::from_value(doc)?;
                emit(&json!({ "V": gale_dual(&a)? }))?;
            }
        }
        Command::Complex { config, realize } => {
            let a = read_config(config)?;
            if *realize {
                emit(&realize_polytope(&a)?)?;
            } else {
                emit(&build_complex(&a)?)?;
            }
        }
        Command::Minimize { config, point, p } => {
            let a = read_config(config)?;
            let out = read_points(point, thr)?
                .iter()
                .map(|z| minimize(&a, z, *p, &settings))
                .collect::<Result<Vec<_>, _>>()?;
            emit_all(&out)?;
        }
        Command::Retract { config, point, p } => {
            let a = read_config(config)?;
            for z in read_points(point, thr)? {
                let x = retract_with(&a, &z, *p, &settings)?;
                let (moment, norm) = xap_residual(&a, &x, *p)?;
                emit(&json!({
                    "x": x,
                    "moment_residual": raw(moment),
                    "norm_residual": raw(norm),
                }))?;
            }
        }
        Command::Project {
            config,
            point,
            method,
            p_schedule,
        } => {
            let a = read_config(config)?;
            let points = read_points(point, thr)?;
            match method {
                Method::Combinatorial => {
                    let proj = CombinatorialProjector::new(&a)?;
                    for z in &points {
                        emit(&proj.project(z)?)?;
                    }
                }
                Method::Plimit => {
                    let schedule = match p_schedule {
                        Some(s) => parse_schedule(s)?,
                        None => default_schedule(),
                    };
                    for z in &points {
                        emit(&project_plimit(&a, z, &schedule, &settings)?)?;
                    }
                }
            }
        }
        Command::Sweep {
            config,
            point,
            p_schedule,
            out,
        } => {
            let a = read_config(config)?;
            let schedule = parse_schedule(p_schedule)?;
            let points = read_points(point, thr)?;
            match out {
                Format::Json => {
                    for z in &points {
                        emit(&sweep(&a, z, &schedule, &settings)?)?;
                    }
                }
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(io::stdout().lock());
                    let mut header = vec!["point".to_string(), "p".to_string()];
                    header.extend((1..=a.d()).map(|k| format!("T{k}")));
                    header.extend(["norm_p", "x_inf", "residual"].map(String::from));
                    w.write_record(&header)?;
                    for (k, z) in points.iter().enumerate() {
                        for s in sweep(&a, z, &schedule, &settings)? {
                            let mut row = vec![(k + 1).to_string(), format_real(s.p)];
                            row.extend(s.t.iter().map(|&t| format_real(t)));
                            row.extend([s.norm_p, s.x_inf, s.residual].map(format_real));
                            w.write_record(&row)?;
                        }
                    }
                    w.flush()?;
                }
            }
        }
        Command::Escape {
            config,
            point,
            target,
            p_schedule,
        } => {
            let a = read_config(config)?;
            let schedule = parse_schedule(p_schedule)?;
            let targets = read_points(target, thr)?;
            for z in read_points(point, thr)? {
                for t in &targets {
                    emit(&escape_check(&a, &z, t, &schedule, &settings)?)?;
                }
            }
        }
        Command::Rigidity {
            config,
            other,
            perm,
            samples,
            tol,
        } => {
            let a = read_config(config)?;
            let b = read_config(other)?;
            if perm.contains(&0) {
                bail!("--perm is 1-based");
            }
            let perm: Vec<usize> = perm.iter().map(|i| i - 1).collect();
            let report = rigidity_check(&a, &b, &perm, *samples, &mut corpus::rng(cli.seed), *tol)?;
            emit(&report)?;
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Jacobian {
            config,
            stratum,
            point,
            samples,
            h,
        } => {
            let a = read_config(config)?;
            let stratum = parse_stratum(stratum, a.m())?;
            let points: Vec<Vec<f64>> = match point {
                Some(path) => read_points(path, thr)?
                    .iter()
                    .map(|z| z.coords().iter().map(|c| c.re).collect())
                    .collect(),
                None => {
                    let mut rng = corpus::rng(cli.seed);
                    (0..*samples)
                        .map(|_| match &stratum {
                            Stratum::CubeFace(f) => Ok(sample_cube_face(&mut rng, a.m(), f)),
                            Stratum::Orthant => sample_orthant(&mut rng, &a),
                        })
                        .collect::<Result<_, _>>()?
                }
            };
            let certs = points
                .iter()
                .map(|x| jacobian_rank(&a, &stratum, x, *h))
                .collect::<Result<Vec<_>, _>>()?;
            emit_all(&certs)?;
        }
        Command::Verify { suite } => {
            let report = run_suite(suite, cli.seed)?;
            emit(&report)?;
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn raw(x: f64) -> Value {
    serde_json::from_str(&format_real(x)).expect("formatted float parses")
}
