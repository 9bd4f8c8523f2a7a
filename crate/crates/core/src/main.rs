use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use convradon::experiments::{
    quarter_turn_index, run_example1, run_example2, run_example3, ExampleId, ExperimentConfig,
};
use convradon::io::{write_matrix_market, write_report, RdkFile};
use convradon::operators::{
    adjoint_gap, assemble_sparse_with_cap, backproject, forward, DEFAULT_ENTRY_CAP,
};
use convradon::{Error, Geometry, Image, Sinogram, WeightFunction, WeightKind};

const ADJOINT_TOLERANCE: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "convradon",
    version,
    about = "Ray-driven and pixel-driven Radon transform discretizations"
)]
struct Cli {
    /// Worker threads for the projectors (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GeometryArgs {
    #[arg(long)]
    nx: usize,
    #[arg(long)]
    ns: usize,
    #[arg(long)]
    nphi: usize,
    /// ray or pixel
    #[arg(long)]
    weight: WeightKind,
    /// Angles are π·(q + offset)/n_phi.
    #[arg(long, default_value_t = 0.0)]
    angle_offset: f64,
}

impl GeometryArgs {
    fn geometry(&self) -> Result<Geometry, Failure> {
        Ok(Geometry::uniform(
            self.nx,
            self.ns,
            self.nphi,
            self.angle_offset,
        )?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Forward-project an image file into a sinogram file.
    Forward {
        #[command(flatten)]
        geom: GeometryArgs,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Backproject a sinogram file into an image file.
    Backproject {
        #[command(flatten)]
        geom: GeometryArgs,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one of the backprojection examples and write its report.
    Example {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        example: u8,
        #[command(flatten)]
        geom: GeometryArgs,
        /// Angle index for example 2 (default: the angle at π/4).
        #[arg(long)]
        qhat: Option<usize>,
        #[arg(long, default_value_t = 0.9)]
        mask_radius: f64,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Export the system matrix in Matrix Market format.
    Matrix {
        #[command(flatten)]
        geom: GeometryArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENTRY_CAP)]
        max_entries: u64,
    },
    /// Check the adjoint identity on seeded random pairs.
    AdjointCheck {
        #[command(flatten)]
        geom: GeometryArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit code plus diagnostic.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ResourceLimit { .. } => 4,
            _ => 2,
        };
        Failure::new(code, e.to_string())
    }
}

fn output_failure(e: Error) -> Failure {
    match e {
        Error::Io { .. } => Failure::new(3, e.to_string()),
        other => other.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Forward { geom, input, out } => {
            let g = geom.geometry()?;
            let w = WeightFunction::for_geometry(geom.weight, &g);
            let f = RdkFile::read(&input)?.into_image(&g)?;
            let sino = forward(&g, &w, &f)?;
            RdkFile::from_sinogram(&sino)
                .write(&out)
                .map_err(output_failure)?;
        }
        Command::Backproject { geom, input, out } => {
            let g = geom.geometry()?;
            let w = WeightFunction::for_geometry(geom.weight, &g);
            let sino = RdkFile::read(&input)?.into_sinogram(&g)?;
            let b = backproject(&g, &w, &sino)?;
            RdkFile::from_image(&b)
                .write(&out)
                .map_err(output_failure)?;
        }
        Command::Example {
            example,
            geom,
            qhat,
            mask_radius,
            outdir,
        } => {
            let id = match example {
                1 => ExampleId::One,
                2 => ExampleId::Two,
                _ => ExampleId::Three,
            };
            let cfg = ExperimentConfig {
                mask_radius,
                ..ExperimentConfig::new(id, geom.weight, geom.nx, geom.ns, geom.nphi)
                    .with_offset(geom.angle_offset)
            };
            let report = match id {
                ExampleId::One => run_example1(&cfg)?,
                ExampleId::Two => {
                    let q = match qhat {
                        Some(q) => q,
                        None => quarter_turn_index(&cfg)?,
                    };
                    run_example2(&cfg, q)?
                }
                _ => run_example3(&cfg)?,
            };
            write_report(&outdir, &report).map_err(output_failure)?;
            println!("rel_error {:.16e}", report.rel_error.value);
        }
        Command::Matrix {
            geom,
            out,
            max_entries,
        } => {
            let g = geom.geometry()?;
            let w = WeightFunction::for_geometry(geom.weight, &g);
            let a = assemble_sparse_with_cap(&g, &w, max_entries)?;
            let comment = format!(
                "n_x={} n_s={} n_phi={} weight={} angle_offset={}",
                geom.nx,
                geom.ns,
                geom.nphi,
                geom.weight.name(),
                geom.angle_offset
            );
            write_mtx(&out, &a, &comment)?;
        }
        Command::AdjointCheck { geom, trials, seed } => {
            let g = geom.geometry()?;
            let w = WeightFunction::for_geometry(geom.weight, &g);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                let f: Vec<f64> = (0..g.image.len())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let s: Vec<f64> = (0..g.angles.len() * g.detector.n())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let f = Image::from_values(g.image, f)?;
                let s = Sinogram::from_values(g.angles.clone(), g.detector, s)?;
                worst = worst.max(adjoint_gap(&g, &w, &f, &s)?.value);
            }
            println!("max adjoint gap {worst:.16e} over {trials} trials");
            if worst > ADJOINT_TOLERANCE {
                return Ok(5);
            }
        }
    }
    Ok(0)
}

fn write_mtx(path: &Path, a: &convradon::SparseOperator, comment: &str) -> Result<(), Failure> {
    let fail = |e: std::io::Error| Failure::new(3, format!("{}: {e}", path.display()));
    let file = File::create(path).map_err(fail)?;
    let mut out = BufWriter::new(file);
    write_matrix_market(&mut out, a, comment).map_err(fail)?;
    std::io::Write::flush(&mut out).map_err(fail)
}
