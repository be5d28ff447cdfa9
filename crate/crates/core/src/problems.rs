//! Concrete problem instances.
//!
//! Every problem is an instance of
//! `u_t - ∂_t^{1-α} u_xx + (F ∂_t^{1-α} u)_x = g` on an interval with
//! homogeneous Dirichlet conditions and unit diffusivity and friction.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fracops::{check_alpha, kernel_increment, mittag_leffler, omega, rgamma};
use crate::quadrature::adaptive_gauss;

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `(x, t0, t1) -> ∫_{t0}^{t1} g(x, t) dt`.
pub type SourceIntegralFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum InitialData {
    Function(SpaceFn),
    /// Interior nodal values drawn uniformly from `[0, 1)` by a seeded generator
    /// when the data is placed on a mesh.
    RandomNodal {
        seed: u64,
    },
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Function(_) => f.write_str("Function(..)"),
            InitialData::RandomNodal { seed } => write!(f, "RandomNodal {{ seed: {seed} }}"),
        }
    }
}

/// A time-fractional Fokker–Planck problem on `(x_left, x_left + length) × (0, final_time)`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub alpha: f64,
    pub x_left: f64,
    pub length: f64,
    pub final_time: f64,
    /// Driving force `F(x, t)`.
    pub forcing: SpaceTimeFn,
    /// Source term `g(x, t)`.
    pub source: SpaceTimeFn,
    /// Closed-form time integral of the source, when one is known.
    pub source_time_integral: Option<SourceIntegralFn>,
    pub initial: InitialData,
    pub exact: Option<SpaceTimeFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("x_left", &self.x_left)
            .field("length", &self.length)
            .field("final_time", &self.final_time)
            .field("initial", &self.initial)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn x_right(&self) -> f64 {
        self.x_left + self.length
    }

    /// Generalized diffusivity; fixed to one.
    pub fn kappa(&self) -> f64 {
        1.0
    }

    /// Generalized friction constant; fixed to one.
    pub fn mu(&self) -> f64 {
        1.0
    }

    /// Same problem with `F ≡ 0` and `g ≡ 0`.
    pub fn without_forcing(mut self) -> Self {
        self.forcing = Arc::new(|_, _| 0.0);
        self.source = Arc::new(|_, _| 0.0);
        self.source_time_integral = Some(Arc::new(|_, _, _| 0.0));
        self.exact = None;
        self
    }

    pub fn with_final_time(mut self, final_time: f64) -> Self {
        self.final_time = final_time;
        self
    }
}

/// `∫_a^b ω_β(t) dt`.
fn kernel_integral(beta: f64, a: f64, b: f64) -> f64 {
    kernel_increment(beta, rgamma(1.0 + beta), b, b - a)
}

/// `Γ(β) ∫_0^t s^{β-1} sin s ds` expanded in powers of `t`.
fn sine_moment_antiderivative(beta: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut coeff = 1.0; // (-1)^k / (2k+1)!
    for k in 0..200 {
        let p = beta + (2 * k + 1) as f64;
        let term = coeff * t.powf(p) / p;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        let kk = (2 * k + 2) as f64;
        coeff *= -1.0 / (kk * (kk + 1.0));
    }
    sum
}

/// `∫_a^b sin(t) ω_β(t) dt`.
fn sine_kernel_integral(beta: f64, a: f64, b: f64) -> f64 {
    (sine_moment_antiderivative(beta, b) - sine_moment_antiderivative(beta, a)) * rgamma(beta)
}

/// Verification problem on `(0, π)`, `T = 1`, with `F = x + sin t` and the
/// source chosen so that `u = [1 + ω_{1+α}(t)] sin x`.
///
/// From `∂_t^{1-α} 1 = ω_α` and `∂_t^{1-α} ω_{1+α} = ω_{2α}`:
/// `g = ω_α sin x + (ω_α + ω_{2α}) [2 sin x + (x + sin t) cos x]`.
pub fn manufactured_problem(alpha: f64) -> Result<ProblemSpec> {
    check_alpha(alpha)?;
    let rg_a = rgamma(alpha);
    let rg_2a = rgamma(2.0 * alpha);
    let rg_1pa = rgamma(1.0 + alpha);
    let source = move |x: f64, t: f64| {
        let w_a = t.powf(alpha - 1.0) * rg_a;
        let w_2a = t.powf(2.0 * alpha - 1.0) * rg_2a;
        let (s, c) = x.sin_cos();
        w_a * s + (w_a + w_2a) * (2.0 * s + (x + t.sin()) * c)
    };
    let integral = move |x: f64, a: f64, b: f64| {
        let i_a = kernel_integral(alpha, a, b);
        let i_2a = kernel_integral(2.0 * alpha, a, b);
        let s_a = sine_kernel_integral(alpha, a, b);
        let s_2a = sine_kernel_integral(2.0 * alpha, a, b);
        let (s, c) = x.sin_cos();
        i_a * s + (i_a + i_2a) * (2.0 * s + x * c) + (s_a + s_2a) * c
    };
    Ok(ProblemSpec {
        name: "manufactured".into(),
        alpha,
        x_left: 0.0,
        length: PI,
        final_time: 1.0,
        forcing: Arc::new(|x, t: f64| x + t.sin()),
        source: Arc::new(source),
        source_time_integral: Some(Arc::new(integral)),
        initial: InitialData::Function(Arc::new(f64::sin)),
        exact: Some(Arc::new(move |x: f64, t: f64| {
            (1.0 + t.powf(alpha) * rg_1pa) * x.sin()
        })),
    })
}

fn gaussian_density(sigma: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    move |x: f64| norm * (-0.5 * (x / sigma).powi(2)).exp()
}

const TAIL_LIMIT: f64 = 1e-12;

fn check_domain(l: f64, t: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid(format!(
            "half-width L must be positive, got {l}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "final time must be positive, got {t}"
        )));
    }
    Ok(())
}

/// Homogeneous problem on `(-L, L)` with `F = -x + sin t` and a centred
/// normal density of standard deviation `sigma` as initial data.
pub fn application_problem(alpha: f64, sigma: f64, l: f64, t: f64) -> Result<ProblemSpec> {
    check_alpha(alpha)?;
    check_domain(l, t)?;
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let u0 = gaussian_density(sigma);
    if u0(l) > TAIL_LIMIT {
        return Err(Error::invalid(format!(
            "initial density {:.3e} at x = ±{l} is not negligible; enlarge L",
            u0(l)
        )));
    }
    Ok(ProblemSpec {
        name: "application".into(),
        alpha,
        x_left: -l,
        length: 2.0 * l,
        final_time: t,
        forcing: Arc::new(|x, t: f64| -x + t.sin()),
        source: Arc::new(|_, _| 0.0),
        source_time_integral: Some(Arc::new(|_, _, _| 0.0)),
        initial: InitialData::Function(Arc::new(u0)),
        exact: None,
    })
}

/// The application problem with pseudorandom nodal initial data.
pub fn random_initial_problem(alpha: f64, seed: u64, l: f64, t: f64) -> Result<ProblemSpec> {
    check_alpha(alpha)?;
    check_domain(l, t)?;
    Ok(ProblemSpec {
        name: "random".into(),
        alpha,
        x_left: -l,
        length: 2.0 * l,
        final_time: t,
        forcing: Arc::new(|x, t: f64| -x + t.sin()),
        source: Arc::new(|_, _| 0.0),
        source_time_integral: Some(Arc::new(|_, _, _| 0.0)),
        initial: InitialData::RandomNodal { seed },
        exact: None,
    })
}

const MOMENT_TOL: f64 = 1e-9;

/// First moment `x̄(t)` of the application problem on the whole line,
///
/// `x̄(t) = ∫_0^t E_α(-(t-s)^α) ω_α(s) sin s ds`,
///
/// the solution of `x̄' + ∂_t^{1-α} x̄ = ω_α(t) sin t`, `x̄(0) = 0`.
/// The weak singularities at both ends are removed by `s = u^{1/α}` on
/// `[0, t/2]` and `t - s = v^{1/α}` on `[t/2, t]`.
pub fn reference_first_moment(alpha: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "time must be non-negative, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let inv = 1.0 / alpha;
    let half = 0.5 * t;
    let upper = half.powf(alpha);
    // Breakpoints every half period of the sine.
    let breaks: Vec<f64> = (1..)
        .map(|j| j as f64 * 0.5 * PI)
        .take_while(|&s| s < half)
        .map(|s| s.powf(alpha))
        .collect();
    let kernel = |y: f64| mittag_leffler(alpha, -y.powf(alpha));
    let rg_1pa = 1.0 / gamma(1.0 + alpha);

    let mut failure = None;
    let mut record = |r: Result<f64>| match r {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let near_origin = adaptive_gauss(
        |u| {
            let s = u.powf(inv);
            record(kernel(t - s)) * s.sin() * rg_1pa
        },
        0.0,
        upper,
        &breaks,
        MOMENT_TOL,
    )?;
    let near_t = adaptive_gauss(
        |v| {
            if v == 0.0 {
                return 0.0;
            }
            let y = v.powf(inv);
            let s = t - y;
            // ω_α(s) ds = ω_α(s) · y / (α v) dv
            record(kernel(y)) * s.powf(alpha - 1.0) * rgamma(alpha) * s.sin() * inv * y / v
        },
        0.0,
        upper,
        &breaks,
        MOMENT_TOL,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(near_origin.value + near_t.value)
}

/// `ω_α(t) sin x`, the time derivative of the manufactured solution.
pub fn manufactured_time_derivative(alpha: f64, x: f64, t: f64) -> Result<f64> {
    Ok(omega(alpha, t)? * x.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    #[test]
    fn manufactured_initial_data_and_boundaries() {
        let p = manufactured_problem(0.625).unwrap();
        let u = p.exact.as_ref().unwrap();
        for x in [0.1, 1.0, 2.5] {
            assert_eq!(u(x, 0.0), x.sin());
        }
        for t in [0.0, 0.3, 1.0] {
            assert!(u(0.0, t).abs() < 1e-15);
            assert!(u(PI, t).abs() < 1e-14);
        }
        assert!(manufactured_problem(1.0).is_err());
    }

    #[test]
    fn manufactured_source_blows_up_at_origin() {
        let p = manufactured_problem(0.5).unwrap();
        let g = &p.source;
        assert!(g(PI / 2.0, 1e-10) > 1e4);
        // g(π/2, t) = ω_α + 2(ω_α + ω_2α) near t = 0.
        let t = 1e-6;
        let expected = omega(0.5, t).unwrap() * 3.0 + 2.0 * omega(1.0, t).unwrap();
        let got = g(PI / 2.0, t);
        assert!(((got - expected) / expected).abs() < 1e-5);
    }

    #[test]
    fn closed_form_time_integral_matches_quadrature() {
        let alpha = 0.3;
        let p = manufactured_problem(alpha).unwrap();
        let g = p.source.clone();
        let gi = p.source_time_integral.clone().unwrap();
        for &(a, b) in &[(0.0, 0.01), (0.01, 0.03), (0.5, 0.55), (0.0, 1.0)] {
            for x in [0.3, 1.7, 3.0] {
                // t = a + (b - a) w^{1/α} style grading removes the endpoint singularity at 0.
                let m = 1.0 / alpha;
                let q = adaptive_gauss(
                    |w: f64| {
                        let t = a + (b - a) * w.powf(m);
                        if t == 0.0 {
                            return 0.0;
                        }
                        g(x, t) * (b - a) * m * w.powf(m - 1.0)
                    },
                    0.0,
                    1.0,
                    &[],
                    1e-12,
                )
                .unwrap();
                let got = gi(x, a, b);
                assert!(
                    (got - q.value).abs() < 1e-10 * q.value.abs().max(1.0),
                    "{a} {b} {x}: {got} vs {}",
                    q.value
                );
            }
        }
    }

    #[test]
    fn application_problem_checks_tail() {
        let p = application_problem(0.75, 0.5, 9.0, 10.0).unwrap();
        assert_eq!((p.x_left, p.x_right()), (-9.0, 9.0));
        let f = &p.forcing;
        let dfdx = (f(1.0, 2.0) - f(0.0, 2.0)) / 1.0;
        assert!((dfdx + 1.0).abs() < 1e-15);
        assert!(application_problem(0.75, 0.5, 2.0, 10.0).is_err());
        assert!(application_problem(0.75, -0.5, 9.0, 10.0).is_err());

        let InitialData::Function(u0) = &p.initial else {
            panic!("expected a density")
        };
        let rule = GaussLegendre::new(20);
        let mass: f64 = (0..36)
            .map(|i| {
                let a = -9.0 + 0.5 * i as f64;
                rule.integrate(a, a + 0.5, |x| u0(x))
            })
            .sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_problem_keeps_seed() {
        let p = random_initial_problem(0.75, 42, 9.0, 40.0).unwrap();
        assert!(matches!(p.initial, InitialData::RandomNodal { seed: 42 }));
    }

    #[test]
    fn reference_moment_exponential_case() {
        assert_eq!(reference_first_moment(0.75, 0.0).unwrap(), 0.0);
        for t in [0.5f64, 3.0, 10.0] {
            let exact = 0.5 * (t.sin() - t.cos() + (-t).exp());
            let got = reference_first_moment(1.0, t).unwrap();
            assert!((got - exact).abs() < 1e-8, "t={t}: {got} vs {exact}");
        }
    }
}
