//! Time stepping of the microscopic tridomain system on an eps-tiled grid.
//!
//! Conduction is quasi-static inside each phase; the membranes and gap
//! junctions carry the dynamics. Potentials are stored on all grid nodes and
//! masked to their phase, so a node on a membrane holds one value per adjacent
//! phase. Transmembrane and gap potentials are traces of the potentials and
//! live on the interface nodes.

use crate::coupled::{CoupledInputs, CoupledSystem};
use crate::error::{GeometryError, StepError, TensorError};
use crate::fem::{
    assemble_interface_mass, assemble_stiffness, lumped_weights, CoefficientTensor, Field, SparseOperator, Sym2,
    DEFAULT_TOL,
};
use crate::geometry::{tile_microstructure, CellGeometrySpec, InterfaceLabel, LabeledGrid, Phase};
use crate::ionic::{eval_ionic, step_gating, IonicParams};
use crate::macro_solver::num_steps;
use crate::scenario::{InitialData, Source};

#[derive(Debug, Clone, PartialEq)]
pub struct MicroState {
    pub t: f64,
    pub u_i1: Field,
    pub u_i2: Field,
    pub u_e: Field,
    /// Traces on the membranes of the first and second intracellular phase.
    pub v1: Field,
    pub v2: Field,
    /// Trace on the gap junctions.
    pub s: Field,
    pub w1: Field,
    pub w2: Field,
}

/// Node masks of the phases and interfaces of a tiled grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroMasks {
    pub phase: [Vec<bool>; 3],
    pub membrane: [Vec<bool>; 2],
    pub gap: Vec<bool>,
}

impl MicroMasks {
    pub fn new(grid: &LabeledGrid) -> Self {
        Self {
            phase: [
                grid.phase_node_mask(&[Phase::I1]),
                grid.phase_node_mask(&[Phase::I2]),
                grid.phase_node_mask(&[Phase::E]),
            ],
            membrane: [grid.interface_node_mask(InterfaceLabel::G1), grid.interface_node_mask(InterfaceLabel::G2)],
            gap: grid.interface_node_mask(InterfaceLabel::G12),
        }
    }
}

fn sample(grid: &LabeledGrid, mask: &[bool], f: impl Fn(f64, f64) -> f64) -> Field {
    Field::from(
        (0..grid.num_nodes())
            .map(|p| {
                if mask[p] {
                    let (x, y) = grid.node_coords(p);
                    f(x, y)
                } else {
                    0.0
                }
            })
            .collect::<Vec<_>>(),
    )
}

fn masked_diff(a: &Field, b: &Field, mask: &[bool]) -> Field {
    Field::from(
        a.values
            .iter()
            .zip(&b.values)
            .zip(mask)
            .map(|((x, y), &on)| if on { x - y } else { 0.0 })
            .collect::<Vec<_>>(),
    )
}

impl MicroState {
    pub fn zeros(grid: &LabeledGrid) -> Self {
        let z = Field::zeros(grid);
        Self {
            t: 0.0,
            u_i1: z.clone(),
            u_i2: z.clone(),
            u_e: z.clone(),
            v1: z.clone(),
            v2: z.clone(),
            s: z.clone(),
            w1: z.clone(),
            w2: z,
        }
    }

    /// Traces sampled from the macroscopic initial data; the gap potential
    /// starts at `v1 - v2` evaluated on the gap junction. With `u_e = 0` as
    /// gauge, `u_ik = v_k` on phase `k`, so the traces are consistent.
    pub fn from_initial(grid: &LabeledGrid, init: &InitialData) -> Self {
        let masks = MicroMasks::new(grid);
        let [m1, m2] = &masks.membrane;
        Self {
            u_i1: sample(grid, &masks.phase[0], |x, y| init.v1.eval(x, y)),
            u_i2: sample(grid, &masks.phase[1], |x, y| init.v2.eval(x, y)),
            v1: sample(grid, m1, |x, y| init.v1.eval(x, y)),
            v2: sample(grid, m2, |x, y| init.v2.eval(x, y)),
            s: sample(grid, &masks.gap, |x, y| init.v1.eval(x, y) - init.v2.eval(x, y)),
            w1: sample(grid, m1, |x, y| init.w1.eval(x, y)),
            w2: sample(grid, m2, |x, y| init.w2.eval(x, y)),
            ..Self::zeros(grid)
        }
    }

    /// Largest deviation of the stored traces from the traces of the potentials.
    pub fn trace_defect(&self, masks: &MicroMasks) -> f64 {
        let checks = [
            (&self.v1, masked_diff(&self.u_i1, &self.u_e, &masks.membrane[0])),
            (&self.v2, masked_diff(&self.u_i2, &self.u_e, &masks.membrane[1])),
            (&self.s, masked_diff(&self.u_i1, &self.u_i2, &masks.gap)),
        ];
        checks
            .iter()
            .flat_map(|(stored, derived)| stored.values.iter().zip(&derived.values).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroProblem {
    pub spec: CellGeometrySpec,
    pub grid: LabeledGrid,
    pub eps: f64,
    pub n_per_cell: usize,
    pub m_i: Sym2,
    pub m_e: Sym2,
    pub ionic: IonicParams,
    pub sources: [Source; 2],
    pub dt: f64,
    pub t_end: f64,
    pub tol: f64,
}

impl MicroProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: CellGeometrySpec,
        eps: f64,
        n_per_cell: usize,
        m_i: Sym2,
        m_e: Sym2,
        ionic: IonicParams,
        dt: f64,
        t_end: f64,
    ) -> Result<Self, GeometryError> {
        let grid = tile_microstructure(&spec, eps, n_per_cell)?;
        Ok(Self {
            spec,
            grid,
            eps,
            n_per_cell,
            m_i,
            m_e,
            ionic,
            sources: [Source::off(), Source::off()],
            dt,
            t_end,
            tol: DEFAULT_TOL,
        })
    }

    pub fn num_steps(&self) -> usize {
        num_steps(self.dt, self.t_end)
    }
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroDiagnostics {
    pub t: f64,
    /// `(eps/2)(|v1|^2 + |v2|^2) + (eps/4)|s|^2`, the quantity the implicit
    /// scheme dissipates.
    pub energy: f64,
    /// `|sqrt(eps) f|` over the interface of `f`, for `v1, v2, s, w1, w2`.
    pub scaled_norms: [f64; 5],
    /// Energy seminorms `sqrt(a(u, u))` of `u_i1, u_i2, u_e`.
    pub h1: [f64; 3],
    pub mean_ue: f64,
    pub trace_defect: f64,
    pub max_s: f64,
    pub max_v1: f64,
    pub max_v2: f64,
}

impl MicroDiagnostics {
    /// `sum_k |sqrt(eps) v_k|^2 + |sqrt(eps) s|^2`.
    pub fn scaled_energy(&self) -> f64 {
        self.scaled_norms[..3].iter().map(|n| n * n).sum()
    }
}

/// Assembled operators of one micro problem, reused across steps.
pub struct MicroSolver {
    prob: MicroProblem,
    masks: MicroMasks,
    stiffness: [SparseOperator; 3],
    membrane: [SparseOperator; 2],
    gap: SparseOperator,
    weights: Vec<f64>,
    system: CoupledSystem,
}

impl MicroSolver {
    pub fn new(prob: &MicroProblem) -> Result<Self, TensorError> {
        let grid = &prob.grid;
        let m_i = CoefficientTensor::constant(prob.m_i)?;
        let m_e = CoefficientTensor::constant(prob.m_e)?;
        let stiffness = [
            assemble_stiffness(grid, &m_i, &[Phase::I1]),
            assemble_stiffness(grid, &m_i, &[Phase::I2]),
            assemble_stiffness(grid, &m_e, &[Phase::E]),
        ];
        let membrane = [
            assemble_interface_mass(grid, InterfaceLabel::G1),
            assemble_interface_mass(grid, InterfaceLabel::G2),
        ];
        let gap = assemble_interface_mass(grid, InterfaceLabel::G12);
        let weights = lumped_weights(grid, &[Phase::E]);
        let masks = MicroMasks::new(grid);
        let system = CoupledSystem::new(CoupledInputs {
            stiffness: [&stiffness[0], &stiffness[1], &stiffness[2]],
            membrane: [&membrane[0], &membrane[1]],
            gap: &gap,
            cap: [prob.eps, prob.eps],
            gap_cap: 0.5 * prob.eps,
            g_gap: prob.ionic.g_gap,
            dt: prob.dt,
            masks: [&masks.phase[0], &masks.phase[1], &masks.phase[2]],
            ue_weights: &weights,
            tol: prob.tol,
        });
        Ok(Self { prob: prob.clone(), masks, stiffness, membrane, gap, weights, system })
    }

    pub fn problem(&self) -> &MicroProblem {
        &self.prob
    }

    pub fn masks(&self) -> &MicroMasks {
        &self.masks
    }

    pub fn step(&self, state: &MicroState, step: usize) -> Result<MicroState, StepError> {
        let p = &self.prob;
        let t_next = state.t + p.dt;
        let v = [&state.v1, &state.v2];
        let w_old = [&state.w1, &state.w2];
        let mut w_new = [Vec::new(), Vec::new()];
        let mut forcing = [Vec::new(), Vec::new()];
        for k in 0..2 {
            let mask = &self.masks.membrane[k];
            w_new[k] = (0..v[k].len())
                .map(|i| if mask[i] { step_gating(w_old[k].values[i], v[k].values[i], p.dt, &p.ionic) } else { 0.0 })
                .collect();
            forcing[k] = (0..v[k].len())
                .map(|i| {
                    if !mask[i] {
                        return 0.0;
                    }
                    let (x, y) = p.grid.node_coords(i);
                    eval_ionic(v[k].values[i], w_new[k][i], &p.ionic).0 - p.sources[k].eval(t_next, x, y)
                })
                .collect();
        }
        let ([u1, u2, ue], _) = self
            .system
            .solve([&v[0].values, &v[1].values], &state.s.values, [&forcing[0], &forcing[1]])
            .map_err(|source| StepError { step, t: t_next, source })?;
        let (u_i1, u_i2, u_e) = (Field::from(u1), Field::from(u2), Field::from(ue));
        let [w1, w2] = w_new;
        Ok(MicroState {
            t: t_next,
            v1: masked_diff(&u_i1, &u_e, &self.masks.membrane[0]),
            v2: masked_diff(&u_i2, &u_e, &self.masks.membrane[1]),
            s: masked_diff(&u_i1, &u_i2, &self.masks.gap),
            u_i1,
            u_i2,
            u_e,
            w1: w1.into(),
            w2: w2.into(),
        })
    }

    pub fn diagnostics(&self, state: &MicroState) -> MicroDiagnostics {
        let eps = self.prob.eps;
        let sq = |op: &SparseOperator, f: &Field| op.bilinear(&f.values, &f.values);
        let (n1, n2, ns) = (sq(&self.membrane[0], &state.v1), sq(&self.membrane[1], &state.v2), sq(&self.gap, &state.s));
        let scaled_norms = [
            (eps * n1).sqrt(),
            (eps * n2).sqrt(),
            (eps * ns).sqrt(),
            (eps * sq(&self.membrane[0], &state.w1)).sqrt(),
            (eps * sq(&self.membrane[1], &state.w2)).sqrt(),
        ];
        let h1 = [
            sq(&self.stiffness[0], &state.u_i1).max(0.0).sqrt(),
            sq(&self.stiffness[1], &state.u_i2).max(0.0).sqrt(),
            sq(&self.stiffness[2], &state.u_e).max(0.0).sqrt(),
        ];
        MicroDiagnostics {
            t: state.t,
            energy: 0.5 * eps * (n1 + n2) + 0.25 * eps * ns,
            scaled_norms,
            h1,
            mean_ue: state.u_e.values.iter().zip(&self.weights).map(|(u, w)| u * w).sum(),
            trace_defect: state.trace_defect(&self.masks),
            max_s: state.s.max_abs(),
            max_v1: state.v1.max_abs(),
            max_v2: state.v2.max_abs(),
        }
    }
}

/// One step with freshly assembled operators. Prefer [`MicroSolver`] in loops.
pub fn step_micro(state: &MicroState, prob: &MicroProblem) -> Result<MicroState, StepError> {
    let solver = MicroSolver::new(prob).expect("micro tensors must be elliptic");
    solver.step(state, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroRun {
    pub final_state: MicroState,
    pub diagnostics: Vec<MicroDiagnostics>,
}

/// Runs to `t_end`, calling `observe` on the initial state and after each step.
pub fn run_micro(
    prob: &MicroProblem,
    init: MicroState,
    mut observe: impl FnMut(usize, &MicroState, &MicroDiagnostics),
) -> Result<MicroRun, crate::error::RunError> {
    let solver = MicroSolver::new(prob)?;
    let mut state = init;
    let mut diagnostics = Vec::with_capacity(prob.num_steps() + 1);
    let d = solver.diagnostics(&state);
    observe(0, &state, &d);
    diagnostics.push(d);
    for step in 1..=prob.num_steps() {
        state = solver.step(&state, step)?;
        let d = solver.diagnostics(&state);
        observe(step, &state, &d);
        diagnostics.push(d);
    }
    Ok(MicroRun { final_state: state, diagnostics })
}
