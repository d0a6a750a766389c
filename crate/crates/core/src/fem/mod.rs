//! Bilinear (Q1) finite elements on uniform rectangular grids.
//!
//! Periodic axes are handled by node identification in [`LabeledGrid`]; every
//! element carries one phase and one conductivity tensor, so coefficients are
//! never averaged across an interface.

mod solver;
mod sparse;

pub use solver::{solve_spsd, SolveOptions, SolveStats, DEFAULT_TOL};
pub use sparse::{SparseOperator, TripletBuilder};

use crate::error::TensorError;
use crate::geometry::{InterfaceLabel, LabeledGrid, Phase};

/// Nodal values of a Q1 function; one value per distinct grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &LabeledGrid) -> Self {
        Self { values: vec![0.0; grid.num_nodes()] }
    }

    pub fn from_fn(grid: &LabeledGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self { values: (0..grid.num_nodes()).map(|p| {
            let (x, y) = grid.node_coords(p);
            f(x, y)
        }).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl From<Vec<f64>> for Field {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

/// Symmetric 2x2 matrix `[[m11, m12], [m12, m22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { m11: 1.0, m12: 0.0, m22: 1.0 };
    pub const ZERO: Sym2 = Sym2 { m11: 0.0, m12: 0.0, m22: 0.0 };

    pub fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Self { m11, m12, m22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self { m11: a, m12: 0.0, m22: b }
    }

    pub fn scaled(self, s: f64) -> Self {
        Self { m11: s * self.m11, m12: s * self.m12, m22: s * self.m22 }
    }

    pub fn plus(self, o: Sym2) -> Self {
        Self { m11: self.m11 + o.m11, m12: self.m12 + o.m12, m22: self.m22 + o.m22 }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m12 * v[0] + self.m22 * v[1]]
    }

    /// Entry `(p, q)` with zero-based indices.
    pub fn get(&self, p: usize, q: usize) -> f64 {
        match (p, q) {
            (0, 0) => self.m11,
            (1, 1) => self.m22,
            _ => self.m12,
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.m11 + self.m22);
        let half_diff = 0.5 * (self.m11 - self.m22);
        let r = half_diff.hypot(self.m12);
        [mean - r, mean + r]
    }

    pub fn to_matrix(self) -> [[f64; 2]; 2] {
        [[self.m11, self.m12], [self.m12, self.m22]]
    }
}

/// Per-element conductivity with recorded ellipticity bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    per_element: Option<Vec<Sym2>>,
    constant: Sym2,
    alpha: f64,
    beta: f64,
}

impl CoefficientTensor {
    /// Uniform tensor; requires strictly positive eigenvalues.
    pub fn constant(m: Sym2) -> Result<Self, TensorError> {
        Self::build(None, m, false)
    }

    /// One tensor per element (row-major, same order as the grid elements).
    pub fn per_element(grid: &LabeledGrid, values: Vec<Sym2>) -> Result<Self, TensorError> {
        if values.len() != grid.num_elements() {
            return Err(TensorError::Length { expected: grid.num_elements(), got: values.len() });
        }
        Self::build(Some(values), Sym2::ZERO, false)
    }

    /// Uniform tensor that may be singular, as produced by homogenization of
    /// phases that are not connected in every direction.
    pub fn semidefinite(m: Sym2) -> Result<Self, TensorError> {
        Self::build(None, m, true)
    }

    /// Two vertical strips split at `x = 1/2` of the grid with scalar conductivities.
    pub fn laminate_x(grid: &LabeledGrid, left: f64, right: f64) -> Result<Self, TensorError> {
        let half = grid.nx / 2;
        let values = (0..grid.num_elements())
            .map(|e| {
                let c = if e % grid.nx < half { left } else { right };
                Sym2::diag(c, c)
            })
            .collect();
        Self::per_element(grid, values)
    }

    fn build(per_element: Option<Vec<Sym2>>, constant: Sym2, allow_singular: bool) -> Result<Self, TensorError> {
        let all: Vec<Sym2> = match &per_element {
            Some(v) => v.clone(),
            None => vec![constant],
        };
        let mut alpha = f64::INFINITY;
        let mut beta: f64 = 0.0;
        for m in &all {
            let [lo, hi] = m.eigenvalues();
            alpha = alpha.min(lo);
            beta = beta.max(hi);
        }
        let ok = if allow_singular { alpha >= -1e-10 } else { alpha > 0.0 };
        if !ok || !alpha.is_finite() || !beta.is_finite() {
            return Err(TensorError::NotElliptic {
                min: alpha,
                max: beta,
                floor: if allow_singular { -1e-10 } else { 0.0 },
            });
        }
        Ok(Self { per_element, constant, alpha, beta })
    }

    pub fn at(&self, element: usize) -> Sym2 {
        match &self.per_element {
            Some(v) => v[element],
            None => self.constant,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_constant(&self) -> bool {
        self.per_element.is_none()
    }
}

/// Region of integration.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Phases(Vec<Phase>),
    Interface(InterfaceLabel),
}

impl Region {
    pub fn all() -> Self {
        Region::Phases(Phase::ALL.to_vec())
    }
}

const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Q1 shape values on the unit reference square, node order as in
/// [`LabeledGrid::element_nodes`].
pub(crate) fn shape(xi: f64, eta: f64) -> [f64; 4] {
    [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), xi * eta, (1.0 - xi) * eta]
}

/// Physical gradients of the Q1 shape functions on an `hx x hy` element.
pub(crate) fn shape_grad(xi: f64, eta: f64, hx: f64, hy: f64) -> [[f64; 2]; 4] {
    [
        [-(1.0 - eta) / hx, -(1.0 - xi) / hy],
        [(1.0 - eta) / hx, -xi / hy],
        [eta / hx, xi / hy],
        [-eta / hx, (1.0 - xi) / hy],
    ]
}

/// Tensor 2x2 Gauss points on the reference square with weight 1/4 each.
pub(crate) fn gauss_points() -> impl Iterator<Item = (f64, f64)> {
    GAUSS.into_iter().flat_map(|eta| GAUSS.into_iter().map(move |xi| (xi, eta)))
}

fn element_stiffness(m: Sym2, hx: f64, hy: f64) -> [[f64; 4]; 4] {
    let mut k = [[0.0; 4]; 4];
    let w = 0.25 * hx * hy;
    for (xi, eta) in gauss_points() {
        let g = shape_grad(xi, eta, hx, hy);
        for a in 0..4 {
            let mg = m.apply(g[a]);
            for b in a..4 {
                k[a][b] += w * (mg[0] * g[b][0] + mg[1] * g[b][1]);
            }
        }
    }
    for a in 0..4 {
        for b in 0..a {
            k[a][b] = k[b][a];
        }
    }
    k
}

fn element_mass(hx: f64, hy: f64) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    let w = 0.25 * hx * hy;
    for (xi, eta) in gauss_points() {
        let n = shape(xi, eta);
        for a in 0..4 {
            for b in a..4 {
                m[a][b] += w * n[a] * n[b];
            }
        }
    }
    for a in 0..4 {
        for b in 0..a {
            m[a][b] = m[b][a];
        }
    }
    m
}

fn assemble_elementwise(
    grid: &LabeledGrid,
    phases: &[Phase],
    mut local: impl FnMut(usize) -> [[f64; 4]; 4],
) -> SparseOperator {
    let mut b = TripletBuilder::new(grid.num_nodes());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !phases.contains(&grid.phase(i, j)) {
                continue;
            }
            let e = j * grid.nx + i;
            let k = local(e);
            let nodes = grid.element_nodes(i, j);
            for a in 0..4 {
                for c in 0..4 {
                    b.add(nodes[a], nodes[c], k[a][c]);
                }
            }
        }
    }
    b.build()
}

/// `A_pq = sum over elements in `phases` of  int M grad(phi_p) . grad(phi_q)`.
pub fn assemble_stiffness(grid: &LabeledGrid, m: &CoefficientTensor, phases: &[Phase]) -> SparseOperator {
    let mut cache: Option<(Sym2, [[f64; 4]; 4])> = None;
    assemble_elementwise(grid, phases, |e| {
        let me = m.at(e);
        match cache {
            Some((c, k)) if c == me => k,
            _ => {
                let k = element_stiffness(me, grid.hx, grid.hy);
                cache = Some((me, k));
                k
            }
        }
    })
}

/// Consistent Q1 mass matrix restricted to `phases`.
pub fn assemble_mass(grid: &LabeledGrid, phases: &[Phase]) -> SparseOperator {
    let k = element_mass(grid.hx, grid.hy);
    assemble_elementwise(grid, phases, |_| k)
}

/// Edge-wise 1D mass matrix `int_Gamma phi_p phi_q` over edges carrying `label`.
pub fn assemble_interface_mass(grid: &LabeledGrid, label: InterfaceLabel) -> SparseOperator {
    let mut b = TripletBuilder::new(grid.num_nodes());
    for e in grid.edges_with(label) {
        let ([p, q], h) = grid.edge_nodes(e);
        let d = h / 3.0;
        let o = h / 6.0;
        b.add(p, p, d);
        b.add(p, q, o);
        b.add(q, p, o);
        b.add(q, q, d);
    }
    b.build()
}

/// Exact integral of the Q1 interpolant of `field` over a region.
pub fn integrate(grid: &LabeledGrid, field: &Field, region: &Region) -> f64 {
    match region {
        Region::Phases(phases) => {
            let w = 0.25 * grid.hx * grid.hy;
            let mut acc = 0.0;
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    if phases.contains(&grid.phase(i, j)) {
                        let s: f64 = grid.element_nodes(i, j).iter().map(|&p| field.values[p]).sum();
                        acc += w * s;
                    }
                }
            }
            acc
        }
        Region::Interface(label) => grid
            .edges_with(*label)
            .map(|e| {
                let ([p, q], h) = grid.edge_nodes(e);
                0.5 * h * (field.values[p] + field.values[q])
            })
            .sum(),
    }
}

/// Nodal quadrature weights `int_phase phi_p`, i.e. row sums of the phase mass matrix.
pub fn lumped_weights(grid: &LabeledGrid, phases: &[Phase]) -> Vec<f64> {
    let mut w = vec![0.0; grid.num_nodes()];
    let q = 0.25 * grid.hx * grid.hy;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if phases.contains(&grid.phase(i, j)) {
                for p in grid.element_nodes(i, j) {
                    w[p] += q;
                }
            }
        }
    }
    w
}
