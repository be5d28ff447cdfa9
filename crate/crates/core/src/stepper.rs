//! Graded time meshes and the implicit fractional time-marching scheme.
//!
//! At step `n` the fully discrete scheme solves
//!
//! ```text
//! (M + ω_nn B^n) U^n = M U^{n-1} + G^n - Σ_{j<n} (ω_nj - ω_{n-1,j}) B^n U^j
//! ```
//!
//! where `M` is the mass matrix, `B^n` the convection-diffusion operator at
//! `t_n` and `G^n` the source integrated over `(t_{n-1}, t_n)`.

use crate::error::{Error, Result};
use crate::fem1d::{
    assemble_mass, interpolate, load_vector_with, project_load_with, thomas_solve,
    ConvectionDiffusion, NodalVector, SpatialMesh, TriDiagMatrix,
};
use crate::fracops::{ConvolutionWeights, WeightGenerator, WeightRule};
use crate::problems::{InitialData, ProblemSpec, SourceIntegralFn};
use crate::quadrature::GaussLegendre;

/// Time levels `t_n = (n/N)^γ T`, `n = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMesh {
    gamma: f64,
    final_time: f64,
    times: Vec<f64>,
}

impl TemporalMesh {
    pub fn new(steps: usize, final_time: f64, gamma: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("need at least one time step"));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::invalid(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "grading exponent must be >= 1, got {gamma}"
            )));
        }
        let nf = steps as f64;
        let mut times: Vec<f64> = (0..=steps)
            .map(|n| {
                let s = n as f64 / nf;
                if gamma == 1.0 {
                    s * final_time
                } else {
                    s.powf(gamma) * final_time
                }
            })
            .collect();
        times[steps] = final_time;
        Ok(Self {
            gamma,
            final_time,
            times,
        })
    }

    pub fn uniform(steps: usize, final_time: f64) -> Result<Self> {
        Self::new(steps, final_time, 1.0)
    }

    pub fn num_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn is_uniform(&self) -> bool {
        self.gamma == 1.0
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `t_n - t_m` for `m <= n`, from the grid formula rather than by
    /// subtracting stored levels, so short spans late in the run keep full
    /// relative precision.
    pub fn span(&self, m: usize, n: usize) -> f64 {
        debug_assert!(m <= n && n <= self.num_steps());
        if m == n {
            return 0.0;
        }
        let nf = self.num_steps() as f64;
        if self.is_uniform() {
            return (n - m) as f64 / nf * self.final_time;
        }
        let r = (n - m) as f64 / n as f64;
        self.final_time * (n as f64 / nf).powf(self.gamma) * -(self.gamma * (-r).ln_1p()).exp_m1()
    }

    /// `k_n = t_n - t_{n-1}` for `n = 1..N`.
    pub fn step_sizes(&self) -> Vec<f64> {
        (1..=self.num_steps())
            .map(|n| self.span(n - 1, n))
            .collect()
    }

    /// `k = max_n k_n`.
    pub fn max_step(&self) -> f64 {
        self.step_sizes().into_iter().fold(0.0, f64::max)
    }
}

/// Nodal solution values at every time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub spatial: SpatialMesh,
    pub temporal: TemporalMesh,
    pub states: Vec<NodalVector>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        self.temporal.times()
    }

    pub fn last(&self) -> &NodalVector {
        self.states.last().expect("trajectory always holds U^0")
    }
}

/// How `G^n = ∫_{I_n} (g, φ_p) dt` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadRule {
    /// Tensor Gauss rule: `time_points` on each step, `space_points` on each element.
    Gauss {
        time_points: usize,
        space_points: usize,
    },
    /// The problem's closed-form time integral, then `space_points` Gauss
    /// on each element. Falls back to [`LoadRule::default`] in time when the
    /// problem has no closed form.
    ClosedForm { space_points: usize },
}

impl Default for LoadRule {
    /// 10 Gauss points in time keep the `O(k^α)` error of the first step,
    /// where `g ~ t^{α-1}`, well below the scheme's own error.
    fn default() -> Self {
        LoadRule::Gauss {
            time_points: 10,
            space_points: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolverOptions {
    pub weights: WeightRule,
    pub load: LoadRule,
}

enum LoadEvaluator<'p> {
    Gauss {
        time: GaussLegendre,
        space: GaussLegendre,
        problem: &'p ProblemSpec,
    },
    ClosedForm {
        space: GaussLegendre,
        integral: &'p SourceIntegralFn,
    },
}

impl<'p> LoadEvaluator<'p> {
    fn new(problem: &'p ProblemSpec, rule: LoadRule) -> Result<Self> {
        let check = |n: usize, what: &str| {
            if n == 0 {
                Err(Error::invalid(format!(
                    "{what} quadrature needs at least one point"
                )))
            } else {
                Ok(GaussLegendre::new(n))
            }
        };
        Ok(match (rule, &problem.source_time_integral) {
            (LoadRule::ClosedForm { space_points }, Some(integral)) => LoadEvaluator::ClosedForm {
                space: check(space_points, "space")?,
                integral,
            },
            (LoadRule::ClosedForm { space_points }, None) => LoadEvaluator::Gauss {
                time: GaussLegendre::new(10),
                space: check(space_points, "space")?,
                problem,
            },
            (
                LoadRule::Gauss {
                    time_points,
                    space_points,
                },
                _,
            ) => LoadEvaluator::Gauss {
                time: check(time_points, "time")?,
                space: check(space_points, "space")?,
                problem,
            },
        })
    }

    fn load(&self, mesh: &SpatialMesh, t0: f64, t1: f64) -> NodalVector {
        match self {
            LoadEvaluator::Gauss {
                time,
                space,
                problem,
            } => load_vector_with(mesh, problem.source.as_ref(), (t0, t1), time, space),
            LoadEvaluator::ClosedForm { space, integral } => {
                project_load_with(mesh, &|x| integral(x, t0, t1), space)
            }
        }
    }
}

/// `Σ_j c_j U^j`, accumulated node by node with Neumaier compensation.
pub fn history_sum(coeffs: &[f64], history: &[NodalVector], dofs: usize) -> Vec<f64> {
    let mut sum = vec![0.0; dofs];
    let mut carry = vec![0.0; dofs];
    for (&c, u) in coeffs.iter().zip(history) {
        for ((s, k), &x) in sum.iter_mut().zip(carry.iter_mut()).zip(u.iter()) {
            let term = c * x;
            let t = *s + term;
            *k += if s.abs() >= term.abs() {
                (*s - t) + term
            } else {
                (term - t) + *s
            };
            *s = t;
        }
    }
    sum.iter_mut().zip(&carry).for_each(|(s, k)| *s += k);
    sum
}

/// One step of the scheme.
///
/// `history` holds `U^0..U^{n-1}`; `weights` must be row `n`.
pub fn step(
    history: &[NodalVector],
    mass: &TriDiagMatrix,
    b: &TriDiagMatrix,
    weights: &ConvolutionWeights,
    load: &[f64],
) -> Result<NodalVector> {
    let n = weights.n();
    if history.len() != n {
        return Err(Error::invalid(format!(
            "step {n} needs {n} previous levels, got {}",
            history.len()
        )));
    }
    let dofs = mass.dim();
    let diffs = weights.difference_row();
    let past = history_sum(&diffs, &history[1..], dofs);
    let mut rhs = mass.matvec(&history[n - 1]);
    let b_past = b.matvec(&past);
    for ((r, g), bp) in rhs.iter_mut().zip(load).zip(&b_past) {
        *r += g - bp;
    }
    let system = mass.add_scaled(weights.diagonal(), b);
    thomas_solve(&system, &rhs)
}

/// Marches the problem from `U^0` to `U^N` with default options.
pub fn solve(
    problem: &ProblemSpec,
    smesh: &SpatialMesh,
    tmesh: &TemporalMesh,
) -> Result<Trajectory> {
    solve_with(problem, smesh, tmesh, SolverOptions::default())
}

/// Initial nodal values `U^0`.
pub fn initial_state(problem: &ProblemSpec, smesh: &SpatialMesh) -> NodalVector {
    match &problem.initial {
        InitialData::Function(f) => interpolate(smesh, f.as_ref()),
        InitialData::RandomNodal { seed } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            NodalVector((0..smesh.dofs()).map(|_| rng.gen::<f64>()).collect())
        }
    }
}

pub fn solve_with(
    problem: &ProblemSpec,
    smesh: &SpatialMesh,
    tmesh: &TemporalMesh,
    options: SolverOptions,
) -> Result<Trajectory> {
    if (smesh.x_left() - problem.x_left).abs() > 1e-12 * problem.length.max(1.0)
        || (smesh.length() - problem.length).abs() > 1e-12 * problem.length
    {
        return Err(Error::invalid(
            "spatial mesh does not cover the problem domain",
        ));
    }
    if (tmesh.final_time() - problem.final_time).abs() > 1e-12 * problem.final_time {
        return Err(Error::invalid(
            "temporal mesh does not end at the problem's final time",
        ));
    }
    let mass = assemble_mass(smesh);
    let operator = ConvectionDiffusion::new(smesh);
    let generator = WeightGenerator::new(tmesh, problem.alpha, options.weights)?;
    let loads = LoadEvaluator::new(problem, options.load)?;
    let times = tmesh.times();
    let steps = tmesh.num_steps();

    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial_state(problem, smesh));
    let mut prev_row = Vec::new();
    let mut row = Vec::with_capacity(steps);
    for n in 1..=steps {
        let (t0, t1) = (times[n - 1], times[n]);
        let b = operator.assemble(problem.forcing.as_ref(), t1);
        let load = loads.load(smesh, t0, t1);
        generator.fill_row(n, &mut row);
        let weights = ConvolutionWeights::from_rows(n, std::mem::take(&mut row), prev_row);
        let next = step(&states, &mass, &b, &weights, &load).map_err(|e| Error::Step {
            step: n,
            source: Box::new(e),
        })?;
        states.push(next);
        (prev_row, _) = weights.into_rows();
    }
    Ok(Trajectory {
        spatial: smesh.clone(),
        temporal: tmesh.clone(),
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_and_graded_meshes() {
        let m = TemporalMesh::new(4, 1.0, 1.0).unwrap();
        assert_eq!(m.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = TemporalMesh::new(4, 1.0, 2.0).unwrap();
        assert_eq!(g.times(), &[0.0, 1.0 / 16.0, 0.25, 9.0 / 16.0, 1.0]);
        assert!(TemporalMesh::new(4, 1.0, 0.9).is_err());
        assert!(TemporalMesh::new(0, 1.0, 1.0).is_err());
        assert!(TemporalMesh::new(4, 0.0, 1.0).is_err());
    }

    #[test]
    fn graded_steps_increase_to_about_gamma_t_over_n() {
        let (n, gamma) = (200, 2.0);
        let m = TemporalMesh::new(n, 1.0, gamma).unwrap();
        let k = m.step_sizes();
        assert!((k[0] - 1.0 / (n * n) as f64).abs() < 1e-18);
        assert!(k.windows(2).all(|w| w[1] > w[0]));
        assert!((m.max_step() - gamma / n as f64).abs() < gamma / (n * n) as f64);
    }

    #[test]
    fn spans_agree_with_stored_levels() {
        for gamma in [1.0, 1.6, 2.0] {
            let m = TemporalMesh::new(50, 2.5, gamma).unwrap();
            let t = m.times();
            for (a, b) in [(0, 50), (0, 1), (49, 50), (10, 37)] {
                assert!((m.span(a, b) - (t[b] - t[a])).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn history_sum_matches_plain_sum() {
        let hist: Vec<NodalVector> = (0..5)
            .map(|j| NodalVector(vec![j as f64, 1.0, -2.0]))
            .collect();
        let c = [0.5, -1.0, 0.25, 2.0, 1.0];
        let s = history_sum(&c, &hist, 3);
        assert_eq!(s, vec![0.0 * 0.5 - 1.0 + 0.5 + 6.0 + 4.0, 2.75, -5.5]);
    }
}
