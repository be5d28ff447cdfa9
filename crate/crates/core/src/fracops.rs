//! Fractional kernels, convolution weights and the Mittag-Leffler function.
//!
//! The Riemann–Liouville integral of order β is convolution with
//! `ω_β(t) = t^(β-1) / Γ(β)`. Integrating the kernel exactly over the
//! subintervals of a time mesh gives the weights `ω_nj` that carry the
//! memory of the time-stepping scheme.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gauss;
use crate::stepper::TemporalMesh;

/// Subdiffusion exponent together with a generic kernel order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    alpha: f64,
    beta: f64,
}

impl KernelParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!(
                "kernel order must be positive, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "alpha must lie strictly inside (0, 1), got {alpha}"
        )))
    }
}

/// Reciprocal gamma function, exactly zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if x == x.floor() {
        if x <= 0.0 {
            return 0.0;
        }
        if x <= 20.0 {
            let factorial: f64 = (1..x as u32).map(f64::from).product();
            return 1.0 / factorial;
        }
    }
    {
        1.0 / gamma(x)
    }
}

/// The fractional kernel `ω_β(t) = t^(β-1) / Γ(β)`.
pub fn omega(beta: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::domain(format!(
            "kernel order must be positive, got {beta}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!(
            "kernel evaluated at negative time {t}"
        )));
    }
    if t == 0.0 {
        return if beta < 1.0 {
            Err(Error::domain(format!("ω_{beta} is singular at t = 0")))
        } else if beta == 1.0 {
            Ok(1.0)
        } else {
            Ok(0.0)
        };
    }
    Ok(t.powf(beta - 1.0) * rgamma(beta))
}

/// `a_m = (m+1)^α - m^α`, evaluated without cancellation for large `m`.
pub fn a_seq(alpha: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let m1 = (m + 1) as f64;
    // (m+1)^α [1 - (1 - 1/(m+1))^α]
    -m1.powf(alpha) * (alpha * (-1.0 / m1).ln_1p()).exp_m1()
}

/// `ω_{1+α}(b) - ω_{1+α}(b - len)` for `0 <= len <= b`, without cancellation.
/// `rgamma_1pa` is `1/Γ(1+α)`.
pub(crate) fn kernel_increment(alpha: f64, rgamma_1pa: f64, b: f64, len: f64) -> f64 {
    if len >= b {
        return b.powf(alpha) * rgamma_1pa;
    }
    -b.powf(alpha) * (alpha * (-len / b).ln_1p()).exp_m1() * rgamma_1pa
}

/// Row `n` of the convolution weights, together with row `n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionWeights {
    n: usize,
    row: Vec<f64>,
    prev_row: Vec<f64>,
}

impl ConvolutionWeights {
    pub(crate) fn from_rows(n: usize, row: Vec<f64>, prev_row: Vec<f64>) -> Self {
        debug_assert_eq!(row.len(), n);
        debug_assert_eq!(prev_row.len(), n - 1);
        Self { n, row, prev_row }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Returns `(row, prev_row)`.
    pub fn into_rows(self) -> (Vec<f64>, Vec<f64>) {
        (self.row, self.prev_row)
    }

    /// `ω_n1, …, ω_nn`.
    pub fn row(&self) -> &[f64] {
        &self.row
    }

    /// `ω_{n-1,1}, …, ω_{n-1,n-1}`; empty when `n = 1`.
    pub fn prev_row(&self) -> &[f64] {
        &self.prev_row
    }

    /// `ω_nn`, the weight multiplying the unknown level.
    pub fn diagonal(&self) -> f64 {
        self.row[self.n - 1]
    }

    /// `ω_nj - ω_{n-1,j}` for `j = 1..n-1`.
    pub fn difference_row(&self) -> Vec<f64> {
        self.row
            .iter()
            .zip(&self.prev_row)
            .map(|(a, b)| a - b)
            .collect()
    }
}

/// How a [`WeightGenerator`] evaluates the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightRule {
    /// Uniform meshes use `ω_{α+1}(k) a_{n-j}`, graded meshes the integral form.
    #[default]
    Auto,
    /// Always integrate the kernel over each subinterval.
    IntegralDifference,
    /// `ω_{α+1}(k) a_{n-j}`; only valid on uniform meshes.
    UniformShortcut,
}

/// Produces successive weight rows for one mesh.
#[derive(Debug, Clone)]
pub struct WeightGenerator<'m> {
    mesh: &'m TemporalMesh,
    alpha: f64,
    rgamma_1pa: f64,
    uniform: Option<(f64, Vec<f64>)>,
}

impl<'m> WeightGenerator<'m> {
    pub fn new(mesh: &'m TemporalMesh, alpha: f64, rule: WeightRule) -> Result<Self> {
        check_alpha(alpha)?;
        let use_uniform = match rule {
            WeightRule::Auto => mesh.is_uniform(),
            WeightRule::IntegralDifference => false,
            WeightRule::UniformShortcut => {
                if !mesh.is_uniform() {
                    return Err(Error::invalid(
                        "uniform weight shortcut requested on a graded mesh",
                    ));
                }
                true
            }
        };
        let rgamma_1pa = rgamma(1.0 + alpha);
        let uniform = use_uniform.then(|| {
            let k = mesh.final_time() / mesh.num_steps() as f64;
            let scale = k.powf(alpha) * rgamma_1pa;
            let a = (0..mesh.num_steps() as u64)
                .map(|m| a_seq(alpha, m))
                .collect();
            (scale, a)
        });
        Ok(Self {
            mesh,
            alpha,
            rgamma_1pa,
            uniform,
        })
    }

    /// Fills `out` with `ω_n1..ω_nn`.
    pub fn fill_row(&self, n: usize, out: &mut Vec<f64>) {
        out.clear();
        if n == 0 {
            return;
        }
        match &self.uniform {
            Some((scale, a)) => out.extend((1..=n).map(|j| scale * a[n - j])),
            None => {
                let mesh = self.mesh;
                out.extend((1..=n).map(|j| {
                    kernel_increment(
                        self.alpha,
                        self.rgamma_1pa,
                        mesh.span(j - 1, n),
                        mesh.span(j - 1, j),
                    )
                }));
            }
        }
    }

    pub fn row(&self, n: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(n);
        self.fill_row(n, &mut v);
        v
    }

    pub fn weights(&self, n: usize) -> ConvolutionWeights {
        ConvolutionWeights::from_rows(n, self.row(n), self.row(n - 1))
    }
}

/// The weights `ω_nj` and `ω_{n-1,j}` for step `n` of `mesh`.
pub fn weights_row(mesh: &TemporalMesh, alpha: f64, n: usize) -> Result<ConvolutionWeights> {
    if n == 0 || n > mesh.num_steps() {
        return Err(Error::invalid(format!(
            "step index {n} outside 1..={}",
            mesh.num_steps()
        )));
    }
    Ok(WeightGenerator::new(mesh, alpha, WeightRule::Auto)?.weights(n))
}

/// Left and right sides of the discrete convolution positivity inequality:
/// `Σ_n (AU)^n U^n` with `(AU)^n = Σ_{j<=n} a_{n-j} U^j`, and `½ Σ_n (U^n)²`.
pub fn conv_quadratic_form(alpha: f64, u: &[f64]) -> (f64, f64) {
    let a: Vec<f64> = (0..u.len() as u64).map(|m| a_seq(alpha, m)).collect();
    let lhs = u
        .iter()
        .enumerate()
        .map(|(n, &un)| {
            let au: f64 = (0..=n).map(|j| a[n - j] * u[j]).sum();
            au * un
        })
        .sum();
    let rhs = 0.5 * u.iter().map(|x| x * x).sum::<f64>();
    (lhs, rhs)
}

/// Neumaier's compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

const ML_SERIES_MIN: f64 = -1.0;
const ML_Z_MAX: f64 = 2.0;

/// The one-parameter Mittag-Leffler function `E_β(z) = Σ z^n / Γ(1 + nβ)`
/// for `0 < β <= 1` and real `z <= 2`.
///
/// Near the origin the power series is summed directly. On the negative
/// axis beyond `z = -1` the algebraic asymptotic expansion is used when its
/// smallest term is negligible, and otherwise the Laplace-type integral
/// `E_β(-x) = sin(βπ)/(βπ) ∫_0^∞ exp(-(xu)^{1/β}) / (u² + 2u cos βπ + 1) du`.
pub fn mittag_leffler(beta: f64, z: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::domain(format!(
            "Mittag-Leffler order must lie in (0, 1], got {beta}"
        )));
    }
    if !z.is_finite() || z > ML_Z_MAX {
        return Err(Error::domain(format!(
            "Mittag-Leffler argument {z} outside (-inf, {ML_Z_MAX}]"
        )));
    }
    if beta == 1.0 {
        return Ok(z.exp());
    }
    if z >= ML_SERIES_MIN {
        let v = ml_series(beta, z);
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!("E_{beta}({z}) overflows")))
        };
    }
    if let Some(v) = ml_asymptotic(beta, z) {
        return Ok(v);
    }
    ml_integral(beta, -z)
}

fn ml_series(beta: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    let mut acc = CompensatedSum::default();
    acc.add(1.0);
    let ln_abs = z.abs().ln();
    let negative = z < 0.0;
    let mut prev_mag = f64::INFINITY;
    for n in 1..10_000u32 {
        let nf = n as f64;
        let mag = (nf * ln_abs - ln_gamma(1.0 + nf * beta)).exp();
        let term = if negative && n % 2 == 1 { -mag } else { mag };
        acc.add(term);
        let decreasing = mag <= prev_mag;
        prev_mag = mag;
        if decreasing && mag <= 1e-17 * acc.value().abs() {
            break;
        }
    }
    acc.value()
}

/// Optimally truncated expansion `-Σ_{k>=1} z^{-k} / Γ(1 - kβ)`; `None` when
/// the smallest term is not negligible.
fn ml_asymptotic(beta: f64, z: f64) -> Option<f64> {
    let mut acc = CompensatedSum::default();
    let mut last_mag = f64::INFINITY;
    let inv = 1.0 / z;
    let mut power = 1.0;
    for k in 1..2_000u32 {
        power *= inv;
        let rg = rgamma(1.0 - k as f64 * beta);
        if rg == 0.0 {
            continue;
        }
        let term = -power * rg;
        let mag = term.abs();
        if mag > last_mag {
            return None;
        }
        acc.add(term);
        last_mag = mag;
        let sum = acc.value().abs();
        if sum > 0.0 && mag <= 1e-16 * sum {
            return Some(acc.value());
        }
    }
    None
}

fn ml_integral(beta: f64, x: f64) -> Result<f64> {
    let theta = beta * PI;
    let (s, c) = theta.sin_cos();
    // Substituting v = xu: the integrand becomes exp(-v^{1/β}) / (v² + 2vx cos θ + x²) · x.
    let upper = 45f64.powf(beta);
    let integrand = |v: f64| (-(v.powf(1.0 / beta))).exp() * x / (v * v + 2.0 * v * x * c + x * x);
    let peak = -x * c;
    let mut breaks = Vec::new();
    if peak > 0.0 && peak < upper {
        let width = x * s;
        breaks.extend([peak - 4.0 * width, peak, peak + 4.0 * width]);
    }
    let scale = s / theta;
    let q = adaptive_gauss(integrand, 0.0, upper, &breaks, 1e-15 / scale)?;
    Ok(scale * q.value)
}
