//! Single-level solves and convergence sweeps over a mesh family.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, load_vector, solve, HMode, Solution, SparseSystem};
use crate::error::{CdgError, Result};
use crate::exec::Execution;
use crate::femspace::P2Space;
use crate::mesh::{generate_mesh, perturb_vertices, TriangleMesh};
use crate::problems::{LoadSource, ModelProblem, ProblemKind};
use crate::verify::{energy_error, eoc, fitted_slope, interpolant_energy_error, l2_quotient_error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshKind {
    #[default]
    Structured,
    Perturbed,
}

/// Everything that determines a run except the mesh level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub problem: ProblemKind,
    pub load_source: LoadSource,
    pub beta: f64,
    pub h_mode: HMode,
    pub mesh: MeshKind,
    pub amplitude: f64,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl StudyConfig {
    pub fn new(problem: ProblemKind) -> Self {
        StudyConfig {
            problem,
            load_source: LoadSource::Oracle,
            beta: 10.0,
            h_mode: HMode::GlobalH,
            mesh: MeshKind::Structured,
            amplitude: 0.2,
            seed: 0,
            exec: Execution::Parallel,
        }
    }

    pub fn model_problem(&self) -> ModelProblem {
        ModelProblem::new(self.problem, self.load_source)
    }

    pub fn mesh(&self, level: u32) -> Result<TriangleMesh> {
        let mesh = generate_mesh(self.model_problem().surface, level)?;
        match self.mesh {
            MeshKind::Structured => Ok(mesh),
            MeshKind::Perturbed => perturb_vertices(&mesh, self.amplitude, self.seed),
        }
    }
}

/// Errors and diagnostics of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: u32,
    pub h: f64,
    pub ndof: usize,
    pub l2_error: f64,
    pub energy_error: f64,
    /// `|||pi u - u_h|||_h`, the discrete part of the energy error.
    pub interpolant_energy_error: f64,
    pub residual: f64,
    pub constraint: f64,
}

/// A solved level with the intermediate objects kept for inspection.
#[derive(Debug, Clone)]
pub struct LevelRun {
    pub result: LevelResult,
    pub space: P2Space,
    pub system: SparseSystem,
    pub solution: Solution,
}

/// Mesh, assemble, solve and measure errors on one level.
pub fn run_level(config: &StudyConfig, level: u32) -> Result<LevelRun> {
    let problem = config.model_problem();
    let exec = config.exec;
    let space = P2Space::with_execution(config.mesh(level)?, exec)?;
    let system = assemble(&space, config.beta, config.h_mode, exec)?;
    let load = load_vector(&space, &|x| problem.load(x), exec)?;
    let solution = solve(&system, &load.b)?;
    let exact = |x: &crate::geometry::Vec3| problem.exact(x);
    let l2 = l2_quotient_error(&space, &solution.u, &exact, exec)?;
    let energy = energy_error(&space, &solution.u, &|x: &crate::geometry::Vec3| problem.laplace_beltrami(x), exec)?;
    let discrete = interpolant_energy_error(&space, &solution.u, &exact, exec)?;
    let result = LevelResult {
        level,
        h: space.h,
        ndof: space.ndof(),
        l2_error: l2,
        energy_error: energy,
        interpolant_energy_error: discrete,
        residual: solution.residual,
        constraint: solution.constraint,
    };
    Ok(LevelRun { result, space, system, solution })
}

/// One row of a convergence table; orders are `None` on the first row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h: f64,
    pub ndof: usize,
    pub l2_error: f64,
    pub energy_error: f64,
    pub eoc_l2: Option<f64>,
    pub eoc_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub rows: Vec<ConvergenceRow>,
}

pub const CSV_HEADER: &str = "level,h,ndof,l2_error,energy_error,eoc_l2,eoc_energy";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"))
}

impl ConvergenceReport {
    pub fn from_results(config: StudyConfig, results: &[LevelResult]) -> Result<Self> {
        let hs: Vec<f64> = results.iter().map(|r| r.h).collect();
        let l2: Vec<f64> = results.iter().map(|r| r.l2_error).collect();
        let en: Vec<f64> = results.iter().map(|r| r.energy_error).collect();
        let (eoc_l2, eoc_en) = if results.len() >= 2 { (eoc(&l2, &hs)?, eoc(&en, &hs)?) } else { (vec![], vec![]) };
        let rows = results
            .iter()
            .enumerate()
            .map(|(i, r)| ConvergenceRow {
                level: r.level,
                h: r.h,
                ndof: r.ndof,
                l2_error: r.l2_error,
                energy_error: r.energy_error,
                eoc_l2: i.checked_sub(1).map(|j| eoc_l2[j]),
                eoc_energy: i.checked_sub(1).map(|j| eoc_en[j]),
            })
            .collect();
        Ok(ConvergenceReport { config, rows })
    }

    fn column(&self, f: fn(&ConvergenceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    /// Least-squares order of the L2 quotient error.
    pub fn slope_l2(&self) -> Result<f64> {
        fitted_slope(&self.column(|r| r.l2_error), &self.column(|r| r.h))
    }

    /// Least-squares order of the energy error.
    pub fn slope_energy(&self) -> Result<f64> {
        fitted_slope(&self.column(|r| r.energy_error), &self.column(|r| r.h))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.10e},{},{:.10e},{:.10e},{},{}",
                r.level,
                r.h,
                r.ndof,
                r.l2_error,
                r.energy_error,
                fmt_opt(r.eoc_l2),
                fmt_opt(r.eoc_energy)
            )?;
        }
        Ok(())
    }
}

/// Runs every level in order and tabulates errors and orders.
pub fn convergence(config: &StudyConfig, levels: &[u32]) -> Result<ConvergenceReport> {
    if levels.len() < 2 {
        return Err(CdgError::InvalidInput("a convergence study needs at least two levels".into()));
    }
    let results = levels
        .iter()
        .map(|&l| run_level(config, l).map(|run| run.result))
        .collect::<Result<Vec<_>>>()?;
    ConvergenceReport::from_results(*config, &results)
}
