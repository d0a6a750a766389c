//! Monolithic implicit step for the three coupled potentials, shared by the
//! micro and macro solvers.
//!
//! With unknowns `(u1, u2, ue)`, transmembrane potentials `v_k = u_k - ue`
//! and gap potential `s = u1 - u2`, one step solves
//!
//! ```text
//! sum_k cap_k/dt (v_k, psi_k)_k + (gcap/dt + gcap g) (s, Psi)_g + sum_j a_j(u_j, phi_j)
//!     = sum_k (cap_k/dt v_k^n - cap_k f_k, psi_k)_k + gcap/dt (s^n, Psi)_g
//! ```
//!
//! for all `phi`, with `psi_k = phi_k - phi_e`, `Psi = phi_1 - phi_2`, and
//! `f_k = I_ion - I_app`. The operator is symmetric positive semi-definite
//! with the constants `(c, c, c)` in its kernel.

use crate::error::SolveError;
use crate::fem::{solve_spsd, Field, SolveOptions, SolveStats, SparseOperator, TripletBuilder};

pub(crate) struct CoupledSystem {
    n: usize,
    matrix: SparseOperator,
    membrane: [SparseOperator; 2],
    gap: SparseOperator,
    cap: [f64; 2],
    gap_cap: f64,
    dt: f64,
    opts: SolveOptions,
}

pub(crate) struct CoupledInputs<'a> {
    pub stiffness: [&'a SparseOperator; 3],
    pub membrane: [&'a SparseOperator; 2],
    pub gap: &'a SparseOperator,
    pub cap: [f64; 2],
    pub gap_cap: f64,
    pub g_gap: f64,
    pub dt: f64,
    /// Active nodes of each potential.
    pub masks: [&'a [bool]; 3],
    /// Quadrature weights of the extracellular mean.
    pub ue_weights: &'a [f64],
    pub tol: f64,
}

impl CoupledSystem {
    pub fn new(inp: CoupledInputs<'_>) -> Self {
        let n = inp.stiffness[0].dim();
        let c = [inp.cap[0] / inp.dt, inp.cap[1] / inp.dt];
        let cg = inp.gap_cap / inp.dt + inp.gap_cap * inp.g_gap;
        let (o1, o2, oe) = (0, n, 2 * n);
        let mut b = TripletBuilder::new(3 * n);
        b.add_block(inp.stiffness[0], o1, o1, 1.0);
        b.add_block(inp.membrane[0], o1, o1, c[0]);
        b.add_block(inp.gap, o1, o1, cg);
        b.add_block(inp.stiffness[1], o2, o2, 1.0);
        b.add_block(inp.membrane[1], o2, o2, c[1]);
        b.add_block(inp.gap, o2, o2, cg);
        b.add_block(inp.stiffness[2], oe, oe, 1.0);
        b.add_block(inp.membrane[0], oe, oe, c[0]);
        b.add_block(inp.membrane[1], oe, oe, c[1]);
        b.add_block(inp.gap, o1, o2, -cg);
        b.add_block(inp.gap, o2, o1, -cg);
        b.add_block(inp.membrane[0], o1, oe, -c[0]);
        b.add_block(inp.membrane[0], oe, o1, -c[0]);
        b.add_block(inp.membrane[1], o2, oe, -c[1]);
        b.add_block(inp.membrane[1], oe, o2, -c[1]);
        let matrix = b.build();

        let mut mask = Vec::with_capacity(3 * n);
        for m in inp.masks {
            mask.extend_from_slice(m);
        }
        let mut weights = vec![0.0; 3 * n];
        weights[oe..].copy_from_slice(inp.ue_weights);
        let opts = SolveOptions { tol: Some(inp.tol), max_iter: None, mean_zero: Some(weights), subspace: Some(mask) };
        Self {
            n,
            matrix,
            membrane: [inp.membrane[0].clone(), inp.membrane[1].clone()],
            gap: inp.gap.clone(),
            cap: inp.cap,
            gap_cap: inp.gap_cap,
            dt: inp.dt,
            opts,
        }
    }

    pub fn matrix(&self) -> &SparseOperator {
        &self.matrix
    }

    /// Solves for `(u1, u2, ue)` given the previous traces and the explicit
    /// forcing `f_k = I_ion - I_app` at the nodes.
    pub fn solve(&self, v: [&[f64]; 2], s: &[f64], forcing: [&[f64]; 2]) -> Result<([Vec<f64>; 3], SolveStats), SolveError> {
        let n = self.n;
        let mut rhs = vec![0.0; 3 * n];
        for k in 0..2 {
            let nodal: Vec<f64> = v[k]
                .iter()
                .zip(forcing[k])
                .map(|(vk, fk)| self.cap[k] * (vk / self.dt - fk))
                .collect();
            let r = self.membrane[k].apply(&nodal);
            for p in 0..n {
                rhs[k * n + p] += r[p];
                rhs[2 * n + p] -= r[p];
            }
        }
        let g = self.gap.apply(s);
        let scale = self.gap_cap / self.dt;
        for p in 0..n {
            rhs[p] += scale * g[p];
            rhs[n + p] -= scale * g[p];
        }
        let (x, stats) = solve_spsd(&self.matrix, &Field::from(rhs), &self.opts)?;
        let mut x = x.values;
        let ue = x.split_off(2 * n);
        let u2 = x.split_off(n);
        Ok(([x, u2, ue], stats))
    }
}
