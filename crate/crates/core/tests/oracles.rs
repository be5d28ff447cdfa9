mod common;

use std::sync::Arc;

use fracfp::fem1d::{
    assemble_b, assemble_mass, integral, interpolate, l2_norm, load_vector_with, thomas_solve,
    SpatialMesh,
};
use fracfp::fracops::{omega, weights_row};
use fracfp::harness::{self, exact_trajectory, rate, NormRule};
use fracfp::problems::{application_problem, manufactured_problem, random_initial_problem};
use fracfp::quadrature::{adaptive_gauss, GaussLegendre};
use fracfp::stepper::{initial_state, solve, step};
use fracfp::{NodalVector, TemporalMesh};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn marching_equals_dense_block_system() {
    for &(alpha, gamma, n, p) in &[
        (0.5, 1.0, 16, 8),
        (0.3, 2.0, 12, 5),
        (0.8, 1.6, 16, 8),
        (0.625, 1.0, 1, 2),
    ] {
        let problem = manufactured_problem(alpha).unwrap();
        let smesh = SpatialMesh::new(0.0, std::f64::consts::PI, p).unwrap();
        let tmesh = TemporalMesh::new(n, 1.0, gamma).unwrap();
        let traj = solve(&problem, &smesh, &tmesh).unwrap();
        let oracle = common::dense_block_solution(&problem, &smesh, &tmesh, &traj.states[0]);
        for (k, (u, o)) in traj.states[1..].iter().zip(&oracle).enumerate() {
            let d = common::rel_diff(u, o);
            assert!(d < 1e-11, "α={alpha} γ={gamma} level {}: {d:e}", k + 1);
        }
    }
}

#[test]
fn one_step_with_constant_source_matches_dense_solve() {
    let (alpha, p) = (0.5, 3);
    let mut problem = manufactured_problem(alpha).unwrap().without_forcing();
    problem.source = Arc::new(|_, _| 1.0);
    problem.source_time_integral = None;
    problem.initial = fracfp::problems::InitialData::Function(Arc::new(|_| 0.0));
    let smesh = SpatialMesh::new(0.0, std::f64::consts::PI, p).unwrap();
    let tmesh = TemporalMesh::uniform(1, 1.0).unwrap();
    let u1 = &solve(&problem, &smesh, &tmesh).unwrap().states[1];

    // P = 3 on (0, π): two interior nodes, h = π/3
    let h = std::f64::consts::PI / 3.0;
    let m = DMatrix::from_row_slice(2, 2, &[4.0 * h / 6.0, h / 6.0, h / 6.0, 4.0 * h / 6.0]);
    let a = DMatrix::from_row_slice(2, 2, &[2.0 / h, -1.0 / h, -1.0 / h, 2.0 / h]);
    let w = omega(1.0 + alpha, 1.0).unwrap();
    let g = DVector::from_column_slice(&[h, h]);
    let x = (m + a * w).lu().solve(&g).unwrap();
    for (u, o) in u1.iter().zip(x.iter()) {
        assert!((u - o).abs() < 1e-12 * o.abs(), "{u} vs {o}");
    }
}

#[test]
fn step_rejects_wrong_history_length() {
    let smesh = SpatialMesh::new(0.0, 1.0, 4).unwrap();
    let tmesh = TemporalMesh::uniform(4, 1.0).unwrap();
    let w = weights_row(&tmesh, 0.5, 2).unwrap();
    let mass = assemble_mass(&smesh);
    let b = assemble_b(&smesh, &|_, _| 0.0, 0.5);
    let hist = vec![NodalVector::zeros(3)];
    assert!(step(&hist, &mass, &b, &w, &[0.0; 3]).is_err());
}

/// `∂_t^{1-α} v = ω_α(t) v(0) + ∫_0^t ω_α(t-s) v'(s) ds` for the time factor
/// `v = 1 + ω_{1+α}`, whose derivative is `ω_α`; both end singularities
/// are removed by power substitutions.
fn rl_derivative_of_time_factor(alpha: f64, t: f64) -> f64 {
    let c = 1.0 / (alpha * statrs::function::gamma::gamma(alpha).powi(2));
    let half = (t / 2.0).powf(alpha);
    // s = u^{1/α} on [0, t/2]; t - s = u^{1/α} on [t/2, t]: both give
    // ω_α(t-s) ω_α(s) ds = c (t - u^{1/α})^{α-1} du
    let f = |u: f64| (t - u.powf(1.0 / alpha)).powf(alpha - 1.0);
    let q = adaptive_gauss(f, 0.0, half, &[], 1e-14).unwrap().value;
    omega(alpha, t).unwrap() + 2.0 * c * q
}

#[test]
fn manufactured_source_has_small_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let alpha = rng.gen_range(0.1..0.95);
        let x = rng.gen_range(0.0..std::f64::consts::PI);
        let t = rng.gen_range(0.01..1.0);
        let p = manufactured_problem(alpha).unwrap();
        let d = rl_derivative_of_time_factor(alpha, t);
        let u_t = omega(alpha, t).unwrap() * x.sin();
        let f = x + t.sin();
        // -∂(u_xx) + (F ∂u)_x with u = v(t) sin x
        let oracle = u_t + d * x.sin() + d * (x.sin() + f * x.cos());
        let g = (p.source)(x, t);
        assert!(
            (g - oracle).abs() <= 1e-8 * oracle.abs().max(1.0),
            "α={alpha} x={x} t={t}: {g} vs {oracle}"
        );
    }
}

#[test]
fn application_mass_is_conserved() {
    let p = application_problem(0.75, 0.5, 9.0, 10.0).unwrap();
    let smesh = SpatialMesh::new(-9.0, 18.0, 162).unwrap();
    let tmesh = TemporalMesh::new(100, 10.0, 1.0 / 0.75).unwrap();
    let traj = solve(&p, &smesh, &tmesh).unwrap();
    let m0 = integral(&smesh, &traj.states[0]);
    for u in &traj.states {
        assert!((integral(&smesh, u) - m0).abs() <= 1e-3);
    }
}

#[test]
fn solves_are_deterministic() {
    let p = random_initial_problem(0.6, 7, 9.0, 4.0).unwrap();
    let smesh = SpatialMesh::new(-9.0, 18.0, 60).unwrap();
    let tmesh = TemporalMesh::new(30, 4.0, 1.5).unwrap();
    let a = solve(&p, &smesh, &tmesh).unwrap();
    let b = solve(&p, &smesh, &tmesh).unwrap();
    for (u, v) in a.states.iter().zip(&b.states) {
        assert!(u
            .iter()
            .zip(v.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let other = random_initial_problem(0.6, 8, 9.0, 4.0).unwrap();
    let u0 = initial_state(&other, &smesh);
    assert_ne!(u0.0, a.states[0].0);
    assert!(u0.iter().all(|&v| (0.0..1.0).contains(&v)));
}

#[test]
fn small_decay_runs_do_not_grow() {
    for &alpha in &[0.25, 0.5, 0.75] {
        let p = manufactured_problem(alpha).unwrap().without_forcing();
        let smesh = SpatialMesh::new(0.0, std::f64::consts::PI, 32).unwrap();
        let tmesh = TemporalMesh::uniform(50, 1.0).unwrap();
        let traj = solve(&p, &smesh, &tmesh).unwrap();
        let norms: Vec<f64> = traj.states.iter().map(|u| l2_norm(&smesh, u)).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)));
    }
}

fn exact_data_rates(rule: NormRule, elements: &[usize]) -> Vec<f64> {
    let p = manufactured_problem(0.625).unwrap();
    let exact = p.exact.clone().unwrap();
    let tmesh = TemporalMesh::new(20, 1.0, 1.6).unwrap();
    let errs: Vec<f64> = elements
        .iter()
        .map(|&n| {
            let smesh = SpatialMesh::new(0.0, std::f64::consts::PI, n).unwrap();
            let traj = exact_trajectory(&p, &smesh, &tmesh).unwrap();
            harness::error_enh(&traj, exact.as_ref(), rule)
        })
        .collect();
    errs.windows(2).map(|w| rate(w[0], w[1]).unwrap()).collect()
}

#[test]
fn exact_data_gives_interpolation_rates() {
    for r in exact_data_rates(NormRule::Elementwise { points: 3 }, &[8, 16, 32, 64, 128]) {
        assert!((r - 2.0).abs() < 0.02, "{r}");
    }
    // One global rule samples the kinks of the interpolant unevenly, so its
    // rates scatter around 2 as in the published spatial table (and drop
    // to about 1.5 from P = 4 to 8, as there too).
    for r in exact_data_rates(NormRule::default(), &[8, 16, 32, 64]) {
        assert!((r - 2.0).abs() < 0.3, "{r}");
    }
}

#[test]
fn harness_rates_are_plain_log_ratios() {
    let cfg = harness::ExperimentConfig {
        steps: vec![4, 8, 16],
        elements: vec![16],
        ..Default::default()
    };
    let rows = harness::run_table(&cfg).unwrap();
    assert!(rows[0].rate.is_none());
    for w in rows.windows(2) {
        let hand = (w[0].error.unwrap() / w[1].error.unwrap()).log2();
        assert!((w[1].rate.unwrap() - hand).abs() <= 1e-12);
    }
}

#[test]
fn csv_output_is_byte_stable() {
    let cfg = harness::ExperimentConfig {
        alphas: vec![0.4, 0.7],
        gammas: vec![1.0, 2.0],
        steps: vec![4, 8],
        elements: vec![8],
        ..Default::default()
    };
    let a = harness::to_csv(&harness::run_table(&cfg).unwrap());
    let b = harness::to_csv(&harness::run_table(&cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 1 + 8);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# sweep\nproblem = manufactured\nmode = space\nalpha = 0.5\ngrading = inverse-alpha\nnum-steps = 100\nnum-elements = 4, 8\n").unwrap();
    let cfg = harness::ExperimentConfig::from_file(&path).unwrap();
    assert_eq!(cfg.mode, harness::Mode::Space);
    assert_eq!(cfg.gammas_for(0.5), vec![2.0]);
    assert_eq!(cfg.elements, vec![4, 8]);
}

#[test]
fn load_rule_integrates_polynomial_sources_exactly() {
    let smesh = SpatialMesh::new(0.0, 1.0, 4).unwrap();
    let g = |x: f64, t: f64| x * t * t;
    let v = load_vector_with(
        &smesh,
        &g,
        (0.0, 1.0),
        &GaussLegendre::new(2),
        &GaussLegendre::new(2),
    );
    // ∫_0^1 t² dt · ∫ x φ_p dx = (1/3) · h x_p
    for (p, val) in v.iter().enumerate() {
        let xp = 0.25 * (p + 1) as f64;
        assert!((val - 0.25 * xp / 3.0).abs() < 1e-15);
    }
}

#[test]
fn thomas_reports_breakdown() {
    let a = fracfp::TriDiagMatrix::new(vec![1.0], vec![1.0, 1.0], vec![1.0]).unwrap();
    assert!(matches!(
        thomas_solve(&a, &[1.0, 2.0]),
        Err(fracfp::Error::PivotBreakdown { .. })
    ));
}

#[test]
fn interpolant_vanishes_on_boundary() {
    let smesh = SpatialMesh::new(-1.0, 2.0, 10).unwrap();
    let v = interpolate(&smesh, &|x: f64| x.cos());
    assert_eq!(v.len(), 9);
}
