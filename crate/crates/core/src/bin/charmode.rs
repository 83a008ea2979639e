use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use charmode::config::{Backend, RunConfig};
use charmode::driver;
use charmode::fmm::{Kernel, MlfmaOptions, PointCase};
use charmode::mesh::{load_mesh, MeshFormat};
use charmode::Error;

#[derive(Parser)]
#[command(name = "charmode", version, about = "Characteristic modes of PEC surfaces (MLFMA + IRA)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plane-wave decomposition error of the translator kernels between two points.
    PointTest {
        #[arg(long, default_value_t = 0.1)]
        a_min: f64,
        #[arg(long, default_value_t = 4.0)]
        a_max: f64,
        #[arg(long, default_value_t = 30)]
        points: usize,
        #[arg(long, default_value_t = 3.0)]
        d0: f64,
        /// Comma-separated: helmholtz, cos, sin.
        #[arg(long, value_delimiter = ',', default_value = "helmholtz,cos,sin")]
        kernels: Vec<String>,
        /// Comma-separated: case1, case2.
        #[arg(long, value_delimiter = ',', default_value = "case1,case2")]
        cases: Vec<String>,
        #[arg(long, short, default_value = "point_test.csv")]
        out: PathBuf,
    },
    /// Dense-vs-MLFMA relative errors of the Z, R and X matvecs.
    MatvecCheck {
        config: PathBuf,
        #[arg(long)]
        d0: Option<f64>,
        #[arg(long, default_value_t = 5)]
        vectors: usize,
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Characteristic modes at one frequency.
    Solve {
        config: PathBuf,
        /// Overrides the configured backend (dense-qz, mlfma-ira).
        #[arg(long)]
        backend: Option<String>,
        /// Overrides the configured frequency (Hz).
        #[arg(long)]
        freq: Option<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Frequency sweep with mode tracking.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Mesh and octree statistics.
    MeshStats {
        mesh: PathBuf,
        #[arg(long)]
        format: Option<String>,
        /// Frequency (Hz) for electrical sizes and the octree.
        #[arg(long, default_value_t = 300e6)]
        freq: f64,
        #[arg(long, default_value_t = 0.25)]
        target_box: f64,
    },
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InnerNotConverged { .. } | Error::Numerical(_) | Error::Overflow(_) => 3,
        _ => 2,
    }
}

fn load_config(path: &PathBuf, backend: Option<String>, out: Option<PathBuf>) -> charmode::Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(b) = backend {
        cfg.backend = b.parse::<Backend>()?;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    if let Some(note) = &cfg.note {
        log::warn!("{note}");
    }
    Ok(cfg)
}

fn run(cli: Cli) -> charmode::Result<()> {
    match cli.command {
        Command::PointTest { a_min, a_max, points, d0, kernels, cases, out } => {
            let kernels: Vec<Kernel> =
                kernels.iter().filter(|s| !s.is_empty()).map(|s| s.parse()).collect::<charmode::Result<_>>()?;
            let cases: Vec<PointCase> =
                cases.iter().filter(|s| !s.is_empty()).map(|s| s.parse()).collect::<charmode::Result<_>>()?;
            let a = driver::log_range(a_min, a_max, points)?;
            let rows = driver::point_test(&a, d0, &kernels, &cases)?;
            driver::write_point_csv(&rows, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::MatvecCheck { config, d0, vectors, threshold, seed } => {
            let cfg = load_config(&config, None, None)?;
            let (mesh, basis) = driver::load_problem(&cfg)?;
            let mut opts: MlfmaOptions = cfg.mlfma.clone();
            if let Some(d) = d0 {
                opts.d0 = d;
            }
            let rows = driver::matvec_check(&mesh, &basis, cfg.frequency.single()?, &opts, vectors, seed, cfg.dense_cap)?;
            println!("operator,vector,relative_error");
            for r in &rows {
                println!("{},{},{:.3e}", r.operator, r.vector, r.relative_error);
            }
            let worst = rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
            if worst > threshold {
                return Err(Error::Numerical(format!("matvec error {worst:.3e} exceeds {threshold:e}")));
            }
        }
        Command::Solve { config, backend, freq, out } => {
            let cfg = load_config(&config, backend, out)?;
            let f = match freq {
                Some(f) => f,
                None => cfg.frequency.single()?,
            };
            let run = driver::run_solve(&cfg, f)?;
            println!("mode,lambda,modal_significance,realness");
            for (i, m) in run.solution.modes.iter().enumerate() {
                println!("{},{:+.6},{:.4},{:.1e}", i + 1, m.lambda, m.modal_significance(), m.realness);
            }
            println!("results in {}", cfg.output_dir.display());
        }
        Command::Sweep { config, backend, out } => {
            let cfg = load_config(&config, backend, out)?;
            let res = driver::run_sweep(&cfg)?;
            println!("{} curves, minimum tracking correlation {:.3}", res.curves.len(), res.min_confidence());
            println!("results in {}", cfg.output_dir.display());
        }
        Command::MeshStats { mesh, format, freq, target_box } => {
            let format = match format {
                Some(f) => f.parse()?,
                None => MeshFormat::from_path(&mesh).ok_or_else(|| usage("cannot infer mesh format; pass --format"))?,
            };
            let m = load_mesh(&mesh, format)?;
            let report = driver::mesh_report(&m, freq, target_box)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
