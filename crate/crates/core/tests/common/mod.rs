#![allow(dead_code)]

use fracfp::fem1d::{assemble_b, assemble_mass, load_vector_with, SpatialMesh};
use fracfp::fracops::omega;
use fracfp::quadrature::GaussLegendre;
use fracfp::{ProblemSpec, TemporalMesh};
use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

/// `exp(x²) erfc(x)` for `x >= 0`; continued fraction once `erfc` underflows.
pub fn erfcx(x: f64) -> f64 {
    assert!(x >= 0.0);
    if x < 5.0 {
        return (x * x).exp() * erfc(x);
    }
    // erfc(x) e^{x²} √π = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
    let mut f = x;
    for k in (1..=60).rev() {
        f = x + (k as f64 / 2.0) / f;
    }
    1.0 / (f * std::f64::consts::PI.sqrt())
}

/// `E_{1/2}(z) = exp(z²) erfc(-z)` for `z <= 0`.
pub fn ml_half(z: f64) -> f64 {
    erfcx(-z)
}

/// `ω_nj` straight from the kernel, without cancellation control.
pub fn naive_weight(alpha: f64, t: &[f64], n: usize, j: usize) -> f64 {
    omega(1.0 + alpha, t[n] - t[j - 1]).unwrap() - omega(1.0 + alpha, t[n] - t[j]).unwrap()
}

fn dense(m: &fracfp::TriDiagMatrix) -> DMatrix<f64> {
    let d = m.dim();
    DMatrix::from_fn(d, d, |i, j| m.get(i, j))
}

/// All levels `U^1..U^N` at once from the block lower-triangular system
///
/// `M(U^n - U^{n-1}) + B^n (Σ_{j<=n} ω_nj U^j - Σ_{j<n} ω_{n-1,j} U^j) = G^n`.
pub fn dense_block_solution(
    problem: &ProblemSpec,
    smesh: &SpatialMesh,
    tmesh: &TemporalMesh,
    u0: &[f64],
) -> Vec<Vec<f64>> {
    let d = smesh.dofs();
    let n_steps = tmesh.num_steps();
    let t = tmesh.times();
    let alpha = problem.alpha;
    let mass = dense(&assemble_mass(smesh));
    let (tg, sg) = (GaussLegendre::new(10), GaussLegendre::new(3));
    let mut a = DMatrix::<f64>::zeros(n_steps * d, n_steps * d);
    let mut rhs = DVector::<f64>::zeros(n_steps * d);
    for n in 1..=n_steps {
        let r = (n - 1) * d;
        let b = dense(&assemble_b(smesh, problem.forcing.as_ref(), t[n]));
        let g = load_vector_with(smesh, problem.source.as_ref(), (t[n - 1], t[n]), &tg, &sg);
        for j in 1..=n {
            let mut w = naive_weight(alpha, t, n, j);
            if j < n {
                w -= naive_weight(alpha, t, n - 1, j);
            }
            let mut blk = &b * w;
            if j == n {
                blk += &mass;
            }
            if j == n - 1 {
                blk -= &mass;
            }
            a.view_mut((r, (j - 1) * d), (d, d)).copy_from(&blk);
        }
        let mut gn = DVector::from_column_slice(&g);
        if n == 1 {
            gn += &mass * DVector::from_column_slice(u0);
        }
        rhs.rows_mut(r, d).copy_from(&gn);
    }
    let sol = a.lu().solve(&rhs).expect("block system is nonsingular");
    (0..n_steps)
        .map(|n| sol.rows(n * d, d).iter().copied().collect())
        .collect()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let den = b
        .iter()
        .map(|y| y.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    num / den
}
