//! Time stepping of the homogenized tridomain system on a macroscopic grid.
//!
//! Each step updates the gating variables exactly with the transmembrane
//! potential frozen, evaluates the ionic currents explicitly, and solves one
//! symmetric system for `(u_i1, u_i2, u_e)` with implicit capacity, diffusion
//! and gap-junction terms. The extracellular potential is normalized to zero
//! mean by a common shift of all three potentials.

use crate::coupled::{CoupledInputs, CoupledSystem};
use crate::error::{StepError, TensorError};
use crate::fem::{
    assemble_mass, assemble_stiffness, lumped_weights, CoefficientTensor, Field, SparseOperator, Sym2, DEFAULT_TOL,
};
use crate::geometry::{GeometricMeasures, LabeledGrid, Phase};
use crate::ionic::{eval_ionic, step_gating, IonicParams};
use crate::scenario::{InitialData, Source};

#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub t: f64,
    pub u_i1: Field,
    pub u_i2: Field,
    pub u_e: Field,
    pub w1: Field,
    pub w2: Field,
}

fn diff(a: &Field, b: &Field) -> Field {
    Field::from(a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect::<Vec<_>>())
}

impl MacroState {
    pub fn zeros(grid: &LabeledGrid) -> Self {
        let z = Field::zeros(grid);
        Self { t: 0.0, u_i1: z.clone(), u_i2: z.clone(), u_e: z.clone(), w1: z.clone(), w2: z }
    }

    /// Samples the initial data with `u_e = 0` as gauge, so `u_ik = v_k`.
    pub fn from_initial(grid: &LabeledGrid, init: &InitialData) -> Self {
        let f = |p: &crate::scenario::Profile| Field::from_fn(grid, |x, y| p.eval(x, y));
        Self { t: 0.0, u_i1: f(&init.v1), u_i2: f(&init.v2), u_e: Field::zeros(grid), w1: f(&init.w1), w2: f(&init.w2) }
    }

    pub fn v1(&self) -> Field {
        diff(&self.u_i1, &self.u_e)
    }

    pub fn v2(&self) -> Field {
        diff(&self.u_i2, &self.u_e)
    }

    pub fn s(&self) -> Field {
        diff(&self.u_i1, &self.u_i2)
    }

    /// Adds `c` to all three potentials.
    pub fn shifted(&self, c: f64) -> Self {
        let add = |f: &Field| Field::from(f.values.iter().map(|v| v + c).collect::<Vec<_>>());
        Self { u_i1: add(&self.u_i1), u_i2: add(&self.u_i2), u_e: add(&self.u_e), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroProblem {
    pub grid: LabeledGrid,
    /// Conductivities of the two intracellular media and the extracellular one.
    pub tensors: [Sym2; 3],
    pub mu: [f64; 2],
    pub mu_g: f64,
    pub ionic: IonicParams,
    pub sources: [Source; 2],
    pub dt: f64,
    pub t_end: f64,
    /// Isotropic diffusion added to every tensor.
    pub delta: f64,
    pub tol: f64,
}

impl MacroProblem {
    /// Problem on an `n x n` grid of the unit square with the capacity ratios
    /// taken from `measures`.
    pub fn new(n: usize, tensors: [Sym2; 3], measures: &GeometricMeasures, ionic: IonicParams, dt: f64, t_end: f64) -> Self {
        Self {
            grid: LabeledGrid::macro_grid(n),
            tensors,
            mu: [measures.mu_1, measures.mu_2],
            mu_g: measures.mu_g,
            ionic,
            sources: [Source::off(), Source::off()],
            dt,
            t_end,
            delta: 0.0,
            tol: DEFAULT_TOL,
        }
    }

    pub fn num_steps(&self) -> usize {
        num_steps(self.dt, self.t_end)
    }
}

pub(crate) fn num_steps(dt: f64, t_end: f64) -> usize {
    let n = (t_end / dt).round();
    assert!(
        dt > 0.0 && (n * dt - t_end).abs() <= 1e-9 * t_end.max(1.0),
        "dt = {dt} must divide t_end = {t_end}"
    );
    n as usize
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroDiagnostics {
    pub t: f64,
    pub energy: f64,
    pub mean_ue: f64,
    pub max_s: f64,
    pub max_v1: f64,
    pub max_v2: f64,
    pub ionic_norm: [f64; 2],
}

/// Assembled operators of one macro problem, reused across steps.
pub struct MacroSolver {
    prob: MacroProblem,
    mass: SparseOperator,
    weights: Vec<f64>,
    system: CoupledSystem,
}

impl MacroSolver {
    pub fn new(prob: &MacroProblem) -> Result<Self, TensorError> {
        let grid = &prob.grid;
        let reg = Sym2::diag(prob.delta, prob.delta);
        let mut stiff = Vec::with_capacity(3);
        for m in prob.tensors {
            let tensor = CoefficientTensor::semidefinite(m.plus(reg))?;
            stiff.push(assemble_stiffness(grid, &tensor, &Phase::ALL));
        }
        let mass = assemble_mass(grid, &Phase::ALL);
        let weights = lumped_weights(grid, &Phase::ALL);
        let all = vec![true; grid.num_nodes()];
        let system = CoupledSystem::new(CoupledInputs {
            stiffness: [&stiff[0], &stiff[1], &stiff[2]],
            membrane: [&mass, &mass],
            gap: &mass,
            cap: prob.mu,
            gap_cap: prob.mu_g,
            g_gap: prob.ionic.g_gap,
            dt: prob.dt,
            masks: [&all, &all, &all],
            ue_weights: &weights,
            tol: prob.tol,
        });
        Ok(Self { prob: prob.clone(), mass, weights, system })
    }

    pub fn problem(&self) -> &MacroProblem {
        &self.prob
    }

    /// Step operator for inspection.
    pub fn operator(&self) -> &SparseOperator {
        self.system.matrix()
    }

    /// Advances `state` by one step; `step` labels errors.
    pub fn step(&self, state: &MacroState, step: usize) -> Result<MacroState, StepError> {
        let p = &self.prob;
        let t_next = state.t + p.dt;
        let v = [state.v1(), state.v2()];
        let s = state.s();
        let w_old = [&state.w1, &state.w2];
        let mut w_new = [Vec::new(), Vec::new()];
        let mut forcing = [Vec::new(), Vec::new()];
        for k in 0..2 {
            w_new[k] = v[k].values.iter().zip(&w_old[k].values).map(|(&vk, &wk)| step_gating(wk, vk, p.dt, &p.ionic)).collect();
            forcing[k] = (0..v[k].len())
                .map(|i| {
                    let (x, y) = p.grid.node_coords(i);
                    eval_ionic(v[k].values[i], w_new[k][i], &p.ionic).0 - p.sources[k].eval(t_next, x, y)
                })
                .collect();
        }
        let ([u1, u2, ue], _) = self
            .system
            .solve([&v[0].values, &v[1].values], &s.values, [&forcing[0], &forcing[1]])
            .map_err(|source| StepError { step, t: t_next, source })?;
        let [w1, w2] = w_new;
        Ok(MacroState { t: t_next, u_i1: u1.into(), u_i2: u2.into(), u_e: ue.into(), w1: w1.into(), w2: w2.into() })
    }

    pub fn diagnostics(&self, state: &MacroState) -> MacroDiagnostics {
        let p = &self.prob;
        let (v1, v2, s) = (state.v1(), state.v2(), state.s());
        let energy = 0.5 * p.mu[0] * self.mass.bilinear(&v1.values, &v1.values)
            + 0.5 * p.mu[1] * self.mass.bilinear(&v2.values, &v2.values)
            + 0.5 * p.mu_g * self.mass.bilinear(&s.values, &s.values);
        let mean_ue = state.u_e.values.iter().zip(&self.weights).map(|(u, w)| u * w).sum();
        let ionic = |v: &Field, w: &Field| {
            let i: Vec<f64> = v.values.iter().zip(&w.values).map(|(&a, &b)| eval_ionic(a, b, &p.ionic).0).collect();
            self.mass.bilinear(&i, &i).sqrt()
        };
        MacroDiagnostics {
            t: state.t,
            energy,
            mean_ue,
            max_s: s.max_abs(),
            max_v1: v1.max_abs(),
            max_v2: v2.max_abs(),
            ionic_norm: [ionic(&v1, &state.w1), ionic(&v2, &state.w2)],
        }
    }
}

/// One step with freshly assembled operators. Prefer [`MacroSolver`] in loops.
pub fn step_macro(state: &MacroState, prob: &MacroProblem) -> Result<MacroState, StepError> {
    let solver = MacroSolver::new(prob).expect("macro tensors must be symmetric positive semi-definite");
    solver.step(state, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroRun {
    pub final_state: MacroState,
    pub diagnostics: Vec<MacroDiagnostics>,
}

/// Runs to `t_end`, calling `observe` on the initial state and after each step.
pub fn run_macro(
    prob: &MacroProblem,
    init: MacroState,
    mut observe: impl FnMut(usize, &MacroState, &MacroDiagnostics),
) -> Result<MacroRun, crate::error::RunError> {
    let solver = MacroSolver::new(prob)?;
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
    Ok(MacroRun { final_state: state, diagnostics })
}
