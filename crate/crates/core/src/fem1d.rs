//! Continuous piecewise-linear finite elements on a uniform 1-D mesh with
//! homogeneous Dirichlet conditions at both ends.
//!
//! Boundary degrees of freedom are eliminated, so every operator acts on the
//! `P - 1` interior nodal values and stays tridiagonal.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Uniform partition of `(x_left, x_left + length)` into `P` subintervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMesh {
    x_left: f64,
    length: f64,
    elements: usize,
    h: f64,
}

impl SpatialMesh {
    pub fn new(x_left: f64, length: f64, elements: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite() && x_left.is_finite()) {
            return Err(Error::invalid(format!(
                "mesh length must be positive, got {length}"
            )));
        }
        if elements < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 subintervals for an interior node, got {elements}"
            )));
        }
        Ok(Self {
            x_left,
            length,
            elements,
            h: length / elements as f64,
        })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_left + self.length
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of subintervals `P`.
    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior degrees of freedom, `P - 1`.
    pub fn dofs(&self) -> usize {
        self.elements - 1
    }

    /// Coordinate of node `p`, `0 <= p <= P`.
    #[inline]
    pub fn node(&self, p: usize) -> f64 {
        if p == self.elements {
            self.x_right()
        } else {
            self.x_left + p as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.elements).map(|p| self.node(p)).collect()
    }

    /// Value of an FE function at node `p`, counting the zero boundary values.
    #[inline]
    fn nodal(&self, v: &[f64], p: usize) -> f64 {
        if p == 0 || p == self.elements {
            0.0
        } else {
            v[p - 1]
        }
    }
}

/// Tridiagonal matrix acting on interior nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiagMatrix {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TriDiagMatrix {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::invalid(format!(
                "inconsistent tridiagonal bands: sub {}, diag {}, sup {}",
                sub.len(),
                n,
                sup.len()
            )));
        }
        Ok(Self { sub, diag, sup })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Entry `(row, col)`; zero outside the three bands.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        if row == col {
            self.diag[row]
        } else if row == col + 1 {
            self.sub[col]
        } else if col == row + 1 {
            self.sup[row]
        } else {
            0.0
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.sup[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &TriDiagMatrix) -> TriDiagMatrix {
        let comb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + c * y).collect();
        TriDiagMatrix {
            sub: comb(&self.sub, &other.sub),
            diag: comb(&self.diag, &other.diag),
            sup: comb(&self.sup, &other.sup),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.sub[i - 1].abs();
                }
                if i + 1 < self.dim() {
                    s += self.sup[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Coefficients of an FE function at the interior nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodalVector(pub Vec<f64>);

impl NodalVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for NodalVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for NodalVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for NodalVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Exact hat-function mass matrix, rows `(h/6, 2h/3, h/6)`.
pub fn assemble_mass(mesh: &SpatialMesh) -> TriDiagMatrix {
    let n = mesh.dofs();
    let h = mesh.h();
    TriDiagMatrix {
        sub: vec![h / 6.0; n - 1],
        diag: vec![2.0 * h / 3.0; n],
        sup: vec![h / 6.0; n - 1],
    }
}

/// Exact stiffness matrix `(φ_q', φ_p')`, rows `(-1/h, 2/h, -1/h)`.
pub fn assemble_stiffness(mesh: &SpatialMesh) -> TriDiagMatrix {
    let n = mesh.dofs();
    let h = mesh.h();
    TriDiagMatrix {
        sub: vec![-1.0 / h; n - 1],
        diag: vec![2.0 / h; n],
        sup: vec![-1.0 / h; n - 1],
    }
}

/// Assembles `B_pq = (φ_q', φ_p') - (F(·, t) φ_q, φ_p')` for a sequence of
/// times, reusing the stiffness part and the element quadrature points.
#[derive(Debug, Clone)]
pub struct ConvectionDiffusion {
    stiffness: TriDiagMatrix,
    h: f64,
    /// Per element Gauss point: (x, w·φ_left(x), w·φ_right(x)).
    points: Vec<[(f64, f64, f64); 2]>,
}

impl ConvectionDiffusion {
    pub fn new(mesh: &SpatialMesh) -> Self {
        let rule = GaussLegendre::new(2);
        let h = mesh.h();
        let points = (0..mesh.elements())
            .map(|e| {
                let (a, b) = (mesh.node(e), mesh.node(e + 1));
                let mut pts = [(0.0, 0.0, 0.0); 2];
                for (slot, (x, w)) in pts.iter_mut().zip(rule.mapped(a, b)) {
                    let right = (x - a) / h;
                    *slot = (x, w * (1.0 - right), w * right);
                }
                pts
            })
            .collect();
        Self {
            stiffness: assemble_stiffness(mesh),
            h,
            points,
        }
    }

    pub fn stiffness(&self) -> &TriDiagMatrix {
        &self.stiffness
    }

    pub fn assemble<F: Fn(f64, f64) -> f64 + ?Sized>(&self, forcing: &F, t: f64) -> TriDiagMatrix {
        let mut b = self.stiffness.clone();
        let n = b.dim();
        let inv_h = 1.0 / self.h;
        for (e, pts) in self.points.iter().enumerate() {
            // ∫_e F φ_left and ∫_e F φ_right
            let (mut il, mut ir) = (0.0, 0.0);
            for &(x, wl, wr) in pts {
                let f = forcing(x, t);
                il += f * wl;
                ir += f * wr;
            }
            // Element e spans nodes e (left, φ' = -1/h) and e+1 (right, φ' = 1/h).
            let left = e.checked_sub(1).filter(|&i| i < n);
            let right = (e < n).then_some(e);
            if let Some(l) = left {
                b.diag[l] += il * inv_h;
                if right.is_some() {
                    b.sup[l] += ir * inv_h;
                }
            }
            if let Some(r) = right {
                b.diag[r] -= ir * inv_h;
                if let Some(l) = left {
                    b.sub[l] -= il * inv_h;
                }
            }
        }
        b
    }
}

/// `B^n` at time `t`, convection part by 2-point Gauss on each element.
pub fn assemble_b<F: Fn(f64, f64) -> f64 + ?Sized>(
    mesh: &SpatialMesh,
    forcing: &F,
    t: f64,
) -> TriDiagMatrix {
    ConvectionDiffusion::new(mesh).assemble(forcing, t)
}

/// `(f, φ_p)` for every interior node, by 2-point Gauss on each element.
pub fn project_load<F: Fn(f64) -> f64 + ?Sized>(mesh: &SpatialMesh, f: &F) -> NodalVector {
    project_load_with(mesh, f, &GaussLegendre::new(2))
}

/// `(f, φ_p)` for every interior node using `rule` on each element.
pub fn project_load_with<F: Fn(f64) -> f64 + ?Sized>(
    mesh: &SpatialMesh,
    f: &F,
    rule: &GaussLegendre,
) -> NodalVector {
    let n = mesh.dofs();
    let h = mesh.h();
    let mut out = vec![0.0; n];
    for e in 0..mesh.elements() {
        let a = mesh.node(e);
        let (mut il, mut ir) = (0.0, 0.0);
        for (x, w) in rule.mapped(a, mesh.node(e + 1)) {
            let right = (x - a) / h;
            let fx = f(x);
            il += w * fx * (1.0 - right);
            ir += w * fx * right;
        }
        if e >= 1 {
            out[e - 1] += il;
        }
        if e < n {
            out[e] += ir;
        }
    }
    NodalVector(out)
}

/// `G_p = ∫_{t0}^{t1} (g(·, t), φ_p) dt` by 2-point Gauss in time and space.
pub fn load_vector<G: Fn(f64, f64) -> f64 + ?Sized>(
    mesh: &SpatialMesh,
    g: &G,
    interval: (f64, f64),
) -> NodalVector {
    let rule = GaussLegendre::new(2);
    load_vector_with(mesh, g, interval, &rule, &rule)
}

/// Space-time load with separate Gauss rules in time and on each element.
pub fn load_vector_with<G: Fn(f64, f64) -> f64 + ?Sized>(
    mesh: &SpatialMesh,
    g: &G,
    interval: (f64, f64),
    time_rule: &GaussLegendre,
    space_rule: &GaussLegendre,
) -> NodalVector {
    let mut out = NodalVector::zeros(mesh.dofs());
    for (t, w) in time_rule.mapped(interval.0, interval.1) {
        let slice = project_load_with(mesh, &|x| g(x, t), space_rule);
        for (o, s) in out.iter_mut().zip(slice.iter()) {
            *o += w * s;
        }
    }
    out
}

/// Nodal interpolant; for piecewise-linear elements in 1-D this is also the
/// Ritz projection.
pub fn interpolate<F: Fn(f64) -> f64 + ?Sized>(mesh: &SpatialMesh, f: &F) -> NodalVector {
    NodalVector((1..mesh.elements()).map(|p| f(mesh.node(p))).collect())
}

fn l2_by_elements<F: Fn(usize, f64) -> f64>(mesh: &SpatialMesh, integrand: F) -> f64 {
    l2_by_elements_with(mesh, integrand, &GaussLegendre::new(3))
}

fn l2_by_elements_with<F: Fn(usize, f64) -> f64>(
    mesh: &SpatialMesh,
    integrand: F,
    rule: &GaussLegendre,
) -> f64 {
    let mut total = 0.0;
    for e in 0..mesh.elements() {
        total += rule.integrate(mesh.node(e), mesh.node(e + 1), |x| {
            let v = integrand(e, x);
            v * v
        });
    }
    total.sqrt()
}

/// Value of the FE function `v` at `x` inside element `e`.
#[inline]
fn fe_value(mesh: &SpatialMesh, v: &[f64], e: usize, x: f64) -> f64 {
    let right = (x - mesh.node(e)) / mesh.h();
    mesh.nodal(v, e) * (1.0 - right) + mesh.nodal(v, e + 1) * right
}

/// Value of the FE function `v` at any `x` in the mesh interval.
pub fn evaluate(mesh: &SpatialMesh, v: &[f64], x: f64) -> f64 {
    let pos = ((x - mesh.x_left()) / mesh.h()).floor();
    let e = (pos.max(0.0) as usize).min(mesh.elements() - 1);
    fe_value(mesh, v, e, x)
}

/// `‖v_h - f‖` by 3-point Gauss on each element.
pub fn l2_error<F: Fn(f64) -> f64 + ?Sized>(mesh: &SpatialMesh, v: &[f64], f: &F) -> f64 {
    assert_eq!(v.len(), mesh.dofs());
    l2_by_elements(mesh, |e, x| fe_value(mesh, v, e, x) - f(x))
}

/// `‖v_h - f‖` using `rule` on each element.
pub fn l2_error_with<F: Fn(f64) -> f64 + ?Sized>(
    mesh: &SpatialMesh,
    v: &[f64],
    f: &F,
    rule: &GaussLegendre,
) -> f64 {
    assert_eq!(v.len(), mesh.dofs());
    l2_by_elements_with(mesh, |e, x| fe_value(mesh, v, e, x) - f(x), rule)
}

/// `‖v_h‖` of an FE function.
pub fn l2_norm(mesh: &SpatialMesh, v: &[f64]) -> f64 {
    assert_eq!(v.len(), mesh.dofs());
    l2_by_elements(mesh, |e, x| fe_value(mesh, v, e, x))
}

/// `‖f‖` of a continuous function over the mesh interval.
pub fn l2_norm_fn<F: Fn(f64) -> f64 + ?Sized>(mesh: &SpatialMesh, f: &F) -> f64 {
    l2_by_elements(mesh, |_, x| f(x))
}

/// `∫ x U_h(x) dx`, exact elementwise.
pub fn first_moment(mesh: &SpatialMesh, u: &[f64]) -> f64 {
    assert_eq!(u.len(), mesh.dofs());
    let h = mesh.h();
    (0..mesh.elements())
        .map(|e| {
            let (a, b) = (mesh.node(e), mesh.node(e + 1));
            h * (mesh.nodal(u, e) * (2.0 * a + b) + mesh.nodal(u, e + 1) * (a + 2.0 * b)) / 6.0
        })
        .sum()
}

/// `∫ U_h(x) dx`.
pub fn integral(mesh: &SpatialMesh, u: &[f64]) -> f64 {
    assert_eq!(u.len(), mesh.dofs());
    mesh.h() * u.iter().sum::<f64>()
}

/// Solves `A x = b` by Thomas elimination without pivoting.
pub fn thomas_solve(a: &TriDiagMatrix, b: &[f64]) -> Result<NodalVector> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::invalid(format!(
            "right-hand side has length {} but matrix has dimension {n}",
            b.len()
        )));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let scale = a.norm_inf();
    let tiny = f64::EPSILON * scale;
    let mut pivot = a.diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = a.diag[i] - a.sub[i - 1] * c[i - 1];
        }
        if !pivot.is_finite() || pivot.abs() <= tiny {
            return Err(Error::PivotBreakdown { row: i });
        }
        if i + 1 < n {
            c[i] = a.sup[i] / pivot;
        }
        let prev = if i > 0 { a.sub[i - 1] * d[i - 1] } else { 0.0 };
        d[i] = (b[i] - prev) / pivot;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(NodalVector(d))
}
