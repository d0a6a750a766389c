//! Periodic corrector problems on the reference cell and the homogenized
//! conductivity tensors built from them.
//!
//! For a phase `P` and direction `e_q`, the corrector `chi^q` is the
//! `P`-periodic, zero-mean solution of
//!
//! ```text
//! int_P M grad(chi^q) . grad(phi) = - int_P (M e_q) . grad(phi)   for all phi,
//! ```
//!
//! whose natural boundary condition on the phase interfaces is the flux
//! condition `M grad(chi^q) . n = -(M e_q) . n`. The effective tensor is
//! available in divergence form (average of `M (e_q + grad chi^q)`) and in
//! energy form (average of `(e_p + grad chi^p) . M (e_q + grad chi^q)`); the
//! two agree whenever the correctors solve their discrete problems.

use crate::error::SolveError;
use crate::fem::{
    assemble_stiffness, gauss_points, lumped_weights, shape_grad, solve_spsd, CoefficientTensor, Field,
    SolveOptions, Sym2,
};
use crate::geometry::{LabeledGrid, Phase};

/// Tolerance used for corrector solves unless overridden.
pub const CELL_TOL: f64 = 1e-12;

/// The two correctors of one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSet {
    pub phase: Phase,
    pub chi: [Field; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorFormula {
    DivergenceForm,
    EnergyForm,
}

impl TensorFormula {
    pub fn name(self) -> &'static str {
        match self {
            TensorFormula::DivergenceForm => "divergence",
            TensorFormula::EnergyForm => "energy",
        }
    }
}

/// Homogenized 2x2 conductivity with the formula and phase it came from.
///
/// `entries` is stored as a full matrix so that the divergence form keeps any
/// asymmetry it produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTensor {
    pub entries: [[f64; 2]; 2],
    pub formula: TensorFormula,
    pub phase: Phase,
}

impl EffectiveTensor {
    /// Symmetric part.
    pub fn sym(&self) -> Sym2 {
        let e = self.entries;
        Sym2::new(e[0][0], 0.5 * (e[0][1] + e[1][0]), e[1][1])
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        self.sym().eigenvalues()
    }
}

/// Element gradient of a nodal field at a reference point.
fn grad_at(grid: &LabeledGrid, field: &Field, i: usize, j: usize, xi: f64, eta: f64) -> [f64; 2] {
    let nodes = grid.element_nodes(i, j);
    let g = shape_grad(xi, eta, grid.hx, grid.hy);
    let mut out = [0.0; 2];
    for a in 0..4 {
        let v = field.values[nodes[a]];
        out[0] += v * g[a][0];
        out[1] += v * g[a][1];
    }
    out
}

fn corrector_rhs(grid: &LabeledGrid, m: &CoefficientTensor, phase: Phase, q: usize) -> Field {
    let mut b = vec![0.0; grid.num_nodes()];
    let w = 0.25 * grid.hx * grid.hy;
    let mut unit = [0.0; 2];
    unit[q] = 1.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.phase(i, j) != phase {
                continue;
            }
            let flux = m.at(j * grid.nx + i).apply(unit);
            let nodes = grid.element_nodes(i, j);
            for (xi, eta) in gauss_points() {
                let g = shape_grad(xi, eta, grid.hx, grid.hy);
                for a in 0..4 {
                    b[nodes[a]] -= w * (flux[0] * g[a][0] + flux[1] * g[a][1]);
                }
            }
        }
    }
    Field::from(b)
}

/// Solves the corrector for direction `q` (0 or 1) on `phase`.
pub fn solve_corrector(
    grid: &LabeledGrid,
    m: &CoefficientTensor,
    phase: Phase,
    q: usize,
    tol: f64,
) -> Result<Field, SolveError> {
    assert!(q < 2, "direction index must be 0 or 1");
    let a = assemble_stiffness(grid, m, &[phase]);
    solve_with(grid, m, &a, phase, q, tol)
}

fn solve_with(
    grid: &LabeledGrid,
    m: &CoefficientTensor,
    a: &crate::fem::SparseOperator,
    phase: Phase,
    q: usize,
    tol: f64,
) -> Result<Field, SolveError> {
    let b = corrector_rhs(grid, m, phase, q);
    // Element contributions cancel exactly in exact arithmetic when the flux is
    // divergence-free; what is left is roundoff with no usable mean.
    let roundoff = 1e-13 * m.beta() * grid.hx.max(grid.hy);
    if b.max_abs() <= roundoff {
        return Ok(Field::from(vec![0.0; grid.num_nodes()]));
    }
    let opts = SolveOptions {
        tol: Some(tol),
        max_iter: None,
        mean_zero: Some(lumped_weights(grid, &[phase])),
        subspace: Some(grid.phase_node_mask(&[phase])),
    };
    solve_spsd(a, &b, &opts).map(|(x, _)| x)
}

/// Both correctors of `phase`, sharing one stiffness assembly.
pub fn solve_correctors(
    grid: &LabeledGrid,
    m: &CoefficientTensor,
    phase: Phase,
    tol: f64,
) -> Result<CorrectorSet, SolveError> {
    let a = assemble_stiffness(grid, m, &[phase]);
    let chi0 = solve_with(grid, m, &a, phase, 0, tol)?;
    let chi1 = solve_with(grid, m, &a, phase, 1, tol)?;
    Ok(CorrectorSet { phase, chi: [chi0, chi1] })
}

/// Discrete weak residual `A chi^q - b^q` restricted to the phase, as a max-norm.
pub fn corrector_residual(grid: &LabeledGrid, m: &CoefficientTensor, phase: Phase, q: usize, chi: &Field) -> f64 {
    let a = assemble_stiffness(grid, m, &[phase]);
    let b = corrector_rhs(grid, m, phase, q);
    let mask = grid.phase_node_mask(&[phase]);
    a.apply(&chi.values)
        .iter()
        .zip(&b.values)
        .zip(&mask)
        .filter(|(_, &on)| on)
        .fold(0.0, |acc, ((l, r), _)| acc.max((l - r).abs()))
}

/// Homogenized tensor of `phase` from solved correctors.
pub fn effective_tensor(
    grid: &LabeledGrid,
    m: &CoefficientTensor,
    correctors: &CorrectorSet,
    formula: TensorFormula,
) -> EffectiveTensor {
    let phase = correctors.phase;
    let w = 0.25 * grid.hx * grid.hy / grid.domain_area();
    let mut t = [[0.0; 2]; 2];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.phase(i, j) != phase {
                continue;
            }
            let me = m.at(j * grid.nx + i);
            for (xi, eta) in gauss_points() {
                let g = [
                    grad_at(grid, &correctors.chi[0], i, j, xi, eta),
                    grad_at(grid, &correctors.chi[1], i, j, xi, eta),
                ];
                match formula {
                    TensorFormula::DivergenceForm => {
                        for (p, row) in t.iter_mut().enumerate() {
                            for (q, entry) in row.iter_mut().enumerate() {
                                let mut v = me.get(p, q);
                                for l in 0..2 {
                                    v += me.get(p, l) * g[q][l];
                                }
                                *entry += w * v;
                            }
                        }
                    }
                    TensorFormula::EnergyForm => {
                        let cols = [[1.0 + g[0][0], g[0][1]], [g[1][0], 1.0 + g[1][1]]];
                        for p in 0..2 {
                            for q in p..2 {
                                let mq = me.apply(cols[q]);
                                t[p][q] += w * (cols[p][0] * mq[0] + cols[p][1] * mq[1]);
                            }
                        }
                    }
                }
            }
        }
    }
    if formula == TensorFormula::EnergyForm {
        t[1][0] = t[0][1];
    }
    EffectiveTensor { entries: t, formula, phase }
}

/// Consistency report for a pair of tensors computed by the two formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorReport {
    pub phase: Phase,
    pub symmetry_defect: f64,
    pub cross_defect: f64,
    pub eigenvalues: [f64; 2],
    pub passed: bool,
}

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const CROSS_FORMULA_TOL: f64 = 1e-8;
pub const EIGEN_FLOOR: f64 = -1e-10;

pub fn validate_tensor(t: &EffectiveTensor, t_alt: &EffectiveTensor) -> TensorReport {
    let mut sym = 0.0f64;
    let mut cross = 0.0f64;
    for p in 0..2 {
        for q in 0..2 {
            sym = sym.max((t.entries[p][q] - t.entries[q][p]).abs());
            sym = sym.max((t_alt.entries[p][q] - t_alt.entries[q][p]).abs());
            cross = cross.max((t.entries[p][q] - t_alt.entries[p][q]).abs());
        }
    }
    let eigenvalues = t.eigenvalues();
    let passed = sym <= SYMMETRY_TOL && cross <= CROSS_FORMULA_TOL && eigenvalues[0] >= EIGEN_FLOOR;
    TensorReport { phase: t.phase, symmetry_defect: sym, cross_defect: cross, eigenvalues, passed }
}

/// Full homogenization result for one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHomogenization {
    pub correctors: CorrectorSet,
    pub divergence: EffectiveTensor,
    pub energy: EffectiveTensor,
    pub report: TensorReport,
}

/// Correctors, both tensor formulas, and the consistency report for `phase`.
pub fn homogenize_phase(
    grid: &LabeledGrid,
    m: &CoefficientTensor,
    phase: Phase,
    tol: f64,
) -> Result<PhaseHomogenization, SolveError> {
    let correctors = solve_correctors(grid, m, phase, tol)?;
    let divergence = effective_tensor(grid, m, &correctors, TensorFormula::DivergenceForm);
    let energy = effective_tensor(grid, m, &correctors, TensorFormula::EnergyForm);
    let report = validate_tensor(&divergence, &energy);
    Ok(PhaseHomogenization { correctors, divergence, energy, report })
}
