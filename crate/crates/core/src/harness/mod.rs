//! Experiment drivers: convergence tables, rate curves, first-moment
//! comparison and stability runs, with CSV output.

pub mod config;

use std::io::Write;

use rayon::prelude::*;

pub use config::{ExperimentConfig, Grading, Mode, NormRule, ProblemId};

use crate::error::{Error, Result};
use crate::fem1d::{evaluate, first_moment, interpolate, l2_error_with, l2_norm, SpatialMesh};
use crate::problems::{
    application_problem, manufactured_problem, random_initial_problem, reference_first_moment,
    ProblemSpec,
};
use crate::quadrature::GaussLegendre;
use crate::stepper::{solve, TemporalMesh, Trajectory};

/// `‖v_h - f‖` with the given norm quadrature.
pub fn l2_error_by_rule(
    mesh: &SpatialMesh,
    v: &[f64],
    f: &dyn Fn(f64) -> f64,
    rule: NormRule,
) -> f64 {
    match rule {
        NormRule::Elementwise { points } => l2_error_with(mesh, v, f, &GaussLegendre::new(points)),
        NormRule::Global { points } => GaussLegendre::new(points)
            .integrate(mesh.x_left(), mesh.x_right(), |x| {
                let d = evaluate(mesh, v, x) - f(x);
                d * d
            })
            .sqrt(),
    }
}

/// `E_{N,h} = max_{0<=n<=N} ‖U^n_h - u(t_n)‖`, including `n = 0`.
pub fn error_enh(traj: &Trajectory, exact: &dyn Fn(f64, f64) -> f64, rule: NormRule) -> f64 {
    traj.states
        .iter()
        .zip(traj.times())
        .map(|(u, &t)| l2_error_by_rule(&traj.spatial, u, &|x| exact(x, t), rule))
        .fold(0.0, f64::max)
}

/// Observed order `log2(coarse / fine)` between two successive refinements.
pub fn rate(coarse: f64, fine: f64) -> Result<f64> {
    if !(coarse > 0.0 && fine > 0.0) {
        return Err(Error::domain(format!(
            "convergence rate needs positive errors, got {coarse} and {fine}"
        )));
    }
    Ok((coarse / fine).log2())
}

/// Trajectory made of nodal interpolants of the exact solution.
pub fn exact_trajectory(
    problem: &ProblemSpec,
    smesh: &SpatialMesh,
    tmesh: &TemporalMesh,
) -> Result<Trajectory> {
    let exact = problem.exact.as_ref().ok_or_else(|| {
        Error::invalid(format!("problem '{}' has no exact solution", problem.name))
    })?;
    let states = tmesh
        .times()
        .iter()
        .map(|&t| interpolate(smesh, &|x| exact(x, t)))
        .collect();
    Ok(Trajectory {
        spatial: smesh.clone(),
        temporal: tmesh.clone(),
        states,
    })
}

/// Builds the configured problem for one α (and seed, for random data).
pub fn build_problem(cfg: &ExperimentConfig, alpha: f64, seed: u64) -> Result<ProblemSpec> {
    match cfg.problem {
        ProblemId::Manufactured => {
            let p = manufactured_problem(alpha)?;
            Ok(match cfg.final_time {
                Some(t) if t != p.final_time => {
                    return Err(Error::Config(format!(
                        "the manufactured problem is posed on (0, 1), not (0, {t})"
                    )))
                }
                _ => p,
            })
        }
        ProblemId::Application => application_problem(
            alpha,
            cfg.sigma,
            cfg.half_width,
            cfg.final_time.unwrap_or(10.0),
        ),
        ProblemId::Random => {
            random_initial_problem(alpha, seed, cfg.half_width, cfg.final_time.unwrap_or(40.0))
        }
        ProblemId::Decay => Ok(manufactured_problem(alpha)?
            .without_forcing()
            .with_final_time(cfg.final_time.unwrap_or(1.0))),
    }
}

fn meshes(
    problem: &ProblemSpec,
    elements: usize,
    steps: usize,
    gamma: f64,
) -> Result<(SpatialMesh, TemporalMesh)> {
    Ok((
        SpatialMesh::new(problem.x_left, problem.length, elements)?,
        TemporalMesh::new(steps, problem.final_time, gamma)?,
    ))
}

/// One entry of a refinement column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub gamma: f64,
    pub steps: usize,
    pub elements: usize,
    pub error: Option<f64>,
    /// Present from the second row of a column on, when both errors exist.
    pub rate: Option<f64>,
    pub failure: Option<String>,
}

/// `E_{N,h}` for one manufactured-solution run.
pub fn convergence_cell(
    alpha: f64,
    gamma: f64,
    steps: usize,
    elements: usize,
    norm: NormRule,
) -> Result<f64> {
    let problem = manufactured_problem(alpha)?;
    let (smesh, tmesh) = meshes(&problem, elements, steps, gamma)?;
    let traj = solve(&problem, &smesh, &tmesh)?;
    let exact = problem
        .exact
        .as_ref()
        .expect("manufactured problem has an exact solution");
    Ok(error_enh(&traj, exact.as_ref(), norm))
}

/// Refinement sweeps of the manufactured problem.
///
/// In [`Mode::Time`] each `(α, γ, P)` column sweeps the `N` list; in
/// [`Mode::Space`] each `(α, γ, N)` column sweeps the `P` list. A failed run
/// is recorded in its row and the sweep continues.
pub fn run_table(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    if cfg.problem != ProblemId::Manufactured {
        return Err(Error::Config(
            "convergence tables need the manufactured problem".into(),
        ));
    }
    let mut columns: Vec<Vec<(f64, f64, usize, usize)>> = Vec::new();
    for &alpha in &cfg.alphas {
        for gamma in cfg.gammas_for(alpha) {
            match cfg.mode {
                Mode::Time => {
                    for &p in &cfg.elements {
                        columns.push(cfg.steps.iter().map(|&n| (alpha, gamma, n, p)).collect());
                    }
                }
                Mode::Space => {
                    for &n in &cfg.steps {
                        columns.push(cfg.elements.iter().map(|&p| (alpha, gamma, n, p)).collect());
                    }
                }
                _ => {
                    return Err(Error::Config(
                        "run_table needs mode 'time' or 'space'".into(),
                    ))
                }
            }
        }
    }
    let cells: Vec<(f64, f64, usize, usize)> = columns.iter().flatten().copied().collect();
    let results: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(a, g, n, p)| convergence_cell(a, g, n, p, cfg.norm))
        .collect();

    let mut rows = Vec::with_capacity(cells.len());
    let mut results = results.into_iter();
    for column in &columns {
        let mut prev: Option<f64> = None;
        for &(alpha, gamma, steps, elements) in column {
            let res = results.next().expect("one result per cell");
            let (error, failure) = match res {
                Ok(e) => (Some(e), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let r = match (prev, error) {
                (Some(c), Some(f)) => rate(c, f).ok(),
                _ => None,
            };
            rows.push(ConvergenceRow {
                alpha,
                gamma,
                steps,
                elements,
                error,
                rate: r,
                failure,
            });
            prev = error;
        }
    }
    Ok(rows)
}

/// `r_t(α)` from the two finest step counts with uniform steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub alpha: f64,
    pub coarse_steps: usize,
    pub fine_steps: usize,
    pub elements: usize,
    pub coarse_error: f64,
    pub fine_error: f64,
    pub rate: f64,
    /// `min(2α, 1)`, the rate known for the homogeneous fractional diffusion equation.
    pub reference: f64,
}

pub fn run_rate_curve(alpha_grid: &[f64], cfg: &ExperimentConfig) -> Result<Vec<RatePoint>> {
    cfg.validate()?;
    if cfg.grading != Grading::Explicit || cfg.gammas.iter().any(|&g| g != 1.0) {
        return Err(Error::Config(
            "the rate curve uses uniform time steps (gamma = 1)".into(),
        ));
    }
    if alpha_grid.is_empty() {
        return Err(Error::Config("empty alpha grid".into()));
    }
    let mut steps = cfg.steps.clone();
    steps.sort_unstable();
    steps.dedup();
    if steps.len() < 2 {
        return Err(Error::Config(
            "the rate curve needs at least two step counts".into(),
        ));
    }
    let (coarse_steps, fine_steps) = (steps[steps.len() - 2], steps[steps.len() - 1]);
    let elements = cfg.elements[0];
    let cells: Vec<(f64, usize)> = alpha_grid
        .iter()
        .flat_map(|&a| [(a, coarse_steps), (a, fine_steps)])
        .collect();
    let errors = cells
        .par_iter()
        .map(|&(a, n)| convergence_cell(a, 1.0, n, elements, cfg.norm))
        .collect::<Result<Vec<f64>>>()?;
    alpha_grid
        .iter()
        .zip(errors.chunks(2))
        .map(|(&alpha, e)| {
            Ok(RatePoint {
                alpha,
                coarse_steps,
                fine_steps,
                elements,
                coarse_error: e[0],
                fine_error: e[1],
                rate: rate(e[0], e[1])?,
                reference: (2.0 * alpha).min(1.0),
            })
        })
        .collect()
}

/// Numerical against reference first moment at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub t: f64,
    pub numerical: f64,
    pub reference: Option<f64>,
    pub failure: Option<String>,
}

impl MomentRow {
    pub fn error(&self) -> Option<f64> {
        self.reference.map(|r| self.numerical - r)
    }
}

/// First moments of the application problem, using the first α, `N`, `P`
/// and grading exponent of the configuration.
pub fn run_moment(cfg: &ExperimentConfig) -> Result<Vec<MomentRow>> {
    cfg.validate()?;
    if cfg.problem != ProblemId::Application {
        return Err(Error::Config(
            "moment runs need the application problem".into(),
        ));
    }
    let alpha = cfg.alphas[0];
    let gamma = cfg.gammas_for(alpha)[0];
    let problem = build_problem(cfg, alpha, 0)?;
    let (smesh, tmesh) = meshes(&problem, cfg.elements[0], cfg.steps[0], gamma)?;
    let traj = solve(&problem, &smesh, &tmesh)?;
    let rows = traj
        .states
        .par_iter()
        .zip(traj.times().par_iter())
        .map(|(u, &t)| {
            let numerical = first_moment(&smesh, u);
            match reference_first_moment(alpha, t) {
                Ok(r) => MomentRow {
                    t,
                    numerical,
                    reference: Some(r),
                    failure: None,
                },
                Err(e) => MomentRow {
                    t,
                    numerical,
                    reference: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(rows)
}

/// `‖U^n‖` along one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub alpha: f64,
    pub seed: u64,
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    /// `‖U^n‖ / ‖U^0‖`.
    pub ratio: f64,
}

/// Norm histories for every `(α, seed)` with the first `N`, `P` and grading.
pub fn run_stability(cfg: &ExperimentConfig) -> Result<Vec<StabilityRow>> {
    cfg.validate()?;
    let seeds: Vec<u64> = if cfg.problem == ProblemId::Random {
        cfg.seeds.clone()
    } else {
        vec![0]
    };
    let cells: Vec<(f64, u64)> = cfg
        .alphas
        .iter()
        .flat_map(|&a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    let runs = cells
        .par_iter()
        .map(|&(alpha, seed)| -> Result<Vec<StabilityRow>> {
            let problem = build_problem(cfg, alpha, seed)?;
            let gamma = cfg.gammas_for(alpha)[0];
            let (smesh, tmesh) = meshes(&problem, cfg.elements[0], cfg.steps[0], gamma)?;
            let traj = solve(&problem, &smesh, &tmesh)?;
            let norm0 = l2_norm(&smesh, &traj.states[0]);
            Ok(traj
                .states
                .iter()
                .zip(traj.times())
                .enumerate()
                .map(|(step, (u, &t))| {
                    let norm = l2_norm(&smesh, u);
                    StabilityRow {
                        alpha,
                        seed,
                        step,
                        t,
                        norm,
                        ratio: norm / norm0,
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(runs.into_iter().flatten().collect())
}

/// Rows that can be written as CSV.
pub trait CsvRecord {
    fn header() -> &'static str;
    fn record(&self) -> String;
}

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(full).unwrap_or_default()
}

fn quoted(s: &Option<String>) -> String {
    s.as_ref()
        .map(|m| format!("\"{}\"", m.replace('"', "'")))
        .unwrap_or_default()
}

impl CsvRecord for ConvergenceRow {
    fn header() -> &'static str {
        "alpha,gamma,N,P,E_Nh,rate,failure"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            full(self.alpha),
            full(self.gamma),
            self.steps,
            self.elements,
            opt(self.error),
            opt(self.rate),
            quoted(&self.failure)
        )
    }
}

impl CsvRecord for RatePoint {
    fn header() -> &'static str {
        "alpha,N_coarse,N_fine,P,E_coarse,E_fine,r_t,min_2alpha_1"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            full(self.alpha),
            self.coarse_steps,
            self.fine_steps,
            self.elements,
            full(self.coarse_error),
            full(self.fine_error),
            full(self.rate),
            full(self.reference)
        )
    }
}

impl CsvRecord for MomentRow {
    fn header() -> &'static str {
        "t,moment_num,moment_ref,error,failure"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{}",
            full(self.t),
            full(self.numerical),
            opt(self.reference),
            opt(self.error()),
            quoted(&self.failure)
        )
    }
}

impl CsvRecord for StabilityRow {
    fn header() -> &'static str {
        "alpha,seed,n,t,l2_norm,ratio"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            full(self.alpha),
            self.seed,
            self.step,
            full(self.t),
            full(self.norm),
            full(self.ratio)
        )
    }
}

pub fn write_csv<W: Write, R: CsvRecord>(mut w: W, rows: &[R]) -> std::io::Result<()> {
    writeln!(w, "{}", R::header())?;
    for r in rows {
        writeln!(w, "{}", r.record())?;
    }
    Ok(())
}

pub fn to_csv<R: CsvRecord>(rows: &[R]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Convergence rows rendered with three significant digits.
pub fn format_table(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("   alpha  gamma      N      P      E_Nh   rate\n");
    for r in rows {
        let e = r
            .error
            .map(|e| format!("{e:.2e}"))
            .unwrap_or_else(|| "failed".into());
        let rt = r.rate.map(|x| format!("{x:.3}")).unwrap_or_default();
        out.push_str(&format!(
            "{:8.4} {:6.3} {:6} {:6} {:>9} {:>6}\n",
            r.alpha, r.gamma, r.steps, r.elements, e, rt
        ));
    }
    out
}
