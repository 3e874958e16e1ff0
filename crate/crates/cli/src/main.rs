//! `cdg`: solve the surface biharmonic model problems from the command line.

mod config;
mod plot;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use cdg_core::assembly::HMode;
use cdg_core::exec::{configure_threads, Execution};
use cdg_core::problems::{LoadSource, ProblemKind};
use cdg_core::study::{convergence, run_level, MeshKind, StudyConfig};
use cdg_core::verify::geometry_rates;
use cdg_core::CdgError;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{parse_levels, Levels, RunConfig};

#[derive(Parser)]
#[command(name = "cdg", version, about = "c/dG interior penalty solver for the surface biharmonic equation")]
struct Cli {
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on one mesh level and print the errors.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Mesh level.
        #[arg(long)]
        level: Option<u32>,
        /// Write the mesh as OFF.
        #[arg(long, value_name = "PATH")]
        off: Option<PathBuf>,
        /// Write the system matrix as `i j value` triplets (0-based).
        #[arg(long, value_name = "PATH")]
        dump_matrix: Option<PathBuf>,
        /// Write `x,y,z,u` for every degree of freedom.
        #[arg(long, value_name = "PATH")]
        solution: Option<PathBuf>,
    },
    /// Solve on a sequence of levels and tabulate orders of convergence.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Levels, e.g. `2..5`, `2-5` or `2,3,4`.
        #[arg(long)]
        levels: Option<String>,
        /// Write a log-log plot of both errors.
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Measure how well the facet surface approximates the exact one.
    Geomcheck {
        #[command(flatten)]
        run: RunArgs,
        /// Levels, e.g. `1..4`.
        #[arg(long)]
        levels: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Sphere,
    Torus,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshArg {
    Structured,
    Perturbed,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoadArg {
    Paper,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum HModeArg {
    Global,
    PerEdge,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be positive".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be non-negative".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Args)]
struct RunArgs {
    /// JSON file with the same field names as the flags.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    problem: Option<ProblemArg>,
    /// Penalty parameter [default: 10].
    #[arg(long, value_parser = positive, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Mesh family [default: structured].
    #[arg(long, value_enum)]
    mesh: Option<MeshArg>,
    /// Seed of the vertex perturbation [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Perturbation amplitude relative to the local edge length [default: 0.2].
    #[arg(long, value_parser = non_negative, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    /// Right-hand side [default: oracle].
    #[arg(long, value_enum)]
    load_source: Option<LoadArg>,
    /// Length in the penalty weight [default: global].
    #[arg(long, value_enum)]
    h_mode: Option<HModeArg>,
    /// Output file (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Bad arguments discovered after parsing; reported like clap's usage errors.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl RunArgs {
    fn resolve(&self, levels: Option<&str>, level: Option<u32>) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path).map_err(|e| usage(format!("{e:#}")))?,
            None => RunConfig::default(),
        };
        if let Some(p) = self.problem {
            c.problem = match p {
                ProblemArg::Sphere => ProblemKind::Sphere,
                ProblemArg::Torus => ProblemKind::Torus,
            };
        }
        if let Some(b) = self.beta {
            c.beta = b;
        }
        if let Some(m) = self.mesh {
            c.mesh = match m {
                MeshArg::Structured => MeshKind::Structured,
                MeshArg::Perturbed => MeshKind::Perturbed,
            };
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(a) = self.amplitude {
            c.amplitude = a;
        }
        if let Some(l) = self.load_source {
            c.load_source = match l {
                LoadArg::Paper => LoadSource::Paper,
                LoadArg::Oracle => LoadSource::Oracle,
            };
        }
        if let Some(h) = self.h_mode {
            c.h_mode = match h {
                HModeArg::Global => HMode::GlobalH,
                HModeArg::PerEdge => HMode::PerEdge,
            };
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        if let Some(l) = levels {
            c.levels = Some(Levels::List(parse_levels(l).map_err(|e| usage(format!("--levels: {e:#}")))?));
        }
        if let Some(l) = level {
            c.level = Some(l);
        }
        if !(c.beta > 0.0 && c.beta.is_finite()) {
            return Err(usage(format!("beta must be positive, got {}", c.beta)));
        }
        if !(c.amplitude >= 0.0 && c.amplitude.is_finite()) {
            return Err(usage(format!("amplitude must be non-negative, got {}", c.amplitude)));
        }
        Ok(c)
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn study_config(c: &RunConfig, exec: Execution) -> StudyConfig {
    StudyConfig { exec, ..c.study() }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Solve { run, level, off, dump_matrix, solution } => {
            let c = run.resolve(None, level)?;
            let level = c.single_level().map_err(|e| usage(e.to_string()))?;
            let result = run_level(&study_config(&c, exec), level)?;
            if let Some(p) = off {
                let mut w = create(&p)?;
                result.space.mesh.write_off(&mut w)?;
                w.flush()?;
            }
            if let Some(p) = dump_matrix {
                let mut w = create(&p)?;
                result.system.matrix.write_coo(&mut w)?;
                w.flush()?;
            }
            if let Some(p) = solution {
                let mut w = create(&p)?;
                writeln!(w, "x,y,z,u")?;
                for (x, u) in result.space.dof_points().iter().zip(&result.solution.u) {
                    writeln!(w, "{:.12e},{:.12e},{:.12e},{:.12e}", x.x, x.y, x.z, u)?;
                }
                w.flush()?;
            }
            let r = result.result;
            let mut w = output(c.out.as_deref())?;
            writeln!(w, "level,h,ndof,l2_error,energy_error,residual,constraint")?;
            writeln!(
                w,
                "{},{:.10e},{},{:.10e},{:.10e},{:.3e},{:.3e}",
                r.level, r.h, r.ndof, r.l2_error, r.energy_error, r.residual, r.constraint
            )?;
            w.flush()?;
        }
        Command::Convergence { run, levels, svg } => {
            let c = run.resolve(levels.as_deref(), None)?;
            let levels = c.level_list().map_err(|e| usage(e.to_string()))?;
            if levels.len() < 2 {
                return Err(usage("convergence needs at least two levels"));
            }
            let report = convergence(&study_config(&c, exec), &levels)?;
            let mut w = output(c.out.as_deref())?;
            report.write_csv(&mut w)?;
            w.flush()?;
            eprintln!(
                "fitted order: L2 {:.3}, energy {:.3}",
                report.slope_l2()?,
                report.slope_energy()?
            );
            if let Some(p) = svg {
                let series = [
                    plot::Series {
                        label: "L2",
                        color: "#1f77b4",
                        points: report.rows.iter().map(|r| (r.h, r.l2_error)).collect(),
                    },
                    plot::Series {
                        label: "energy",
                        color: "#d62728",
                        points: report.rows.iter().map(|r| (r.h, r.energy_error)).collect(),
                    },
                ];
                let title = format!("{} ({})", c.problem, if c.mesh == MeshKind::Perturbed { "perturbed" } else { "structured" });
                std::fs::write(&p, plot::loglog_svg(&title, &series)).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Geomcheck { run, levels } => {
            let c = run.resolve(levels.as_deref(), None)?;
            let levels = c.level_list().map_err(|e| usage(e.to_string()))?;
            let sc = study_config(&c, exec);
            let meshes = levels.iter().map(|&l| sc.mesh(l)).collect::<cdg_core::Result<Vec<_>>>()?;
            let rates = geometry_rates(&meshes, exec)?;
            let mut w = output(c.out.as_deref())?;
            writeln!(w, "h,max_d,max_n_diff,max_one_ndot,max_mu,max_conormal")?;
            for r in &rates.rows {
                writeln!(
                    w,
                    "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                    r.h, r.max_d, r.max_n_diff, r.max_one_ndot, r.max_mu, r.max_conormal
                )?;
            }
            match rates.slopes {
                Some(s) => writeln!(w, "slope,{:.6},{:.6},{:.6},{:.6},{:.6}", s[0], s[1], s[2], s[3], s[4])?,
                None => eprintln!("warning: a single level gives no slopes"),
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(t) = std::env::var("CDG_THREADS") {
        match t.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = configure_threads(n) {
                    eprintln!("warning: CDG_THREADS ignored: {e}");
                }
            }
            _ => {
                eprintln!("error: CDG_THREADS must be a positive integer, got '{t}'");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(u) = e.downcast_ref::<UsageError>() {
                eprintln!("error: {u}");
                return ExitCode::from(2);
            }
            match e.chain().find_map(|c| c.downcast_ref::<CdgError>()) {
                // the message already leads with the variant name
                Some(err) => eprintln!("error: {err}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}
