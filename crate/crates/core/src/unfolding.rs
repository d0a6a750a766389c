//! Discrete periodic unfolding.
//!
//! A field on the eps-tiled grid is cut into its cells and each piece is
//! re-indexed onto the nodes of the reference cell `Y = [0, 1]^2`. Because the
//! tiled grid is made of exact copies of the reference grid, unfolding is pure
//! re-indexing and its algebraic identities hold to roundoff. The unfolded
//! representation also carries the micro/macro error metric: macroscopic
//! fields enter as functions of `x` only and are compared with the unfolded
//! microscopic field over `Omega x Y` (or `Omega x Gamma`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cell_problems::CorrectorSet;
use crate::error::UnfoldError;
use crate::fem::{
    assemble_interface_mass, assemble_mass, gauss_points, shape, shape_grad, Field, Region, SparseOperator,
};
use crate::geometry::{
    cells_per_axis, tile_microstructure, AxisBoundary, CellGeometrySpec, InterfaceLabel, LabeledGrid, Phase,
};
use crate::macro_solver::MacroState;
use crate::micro_solver::MicroState;

/// Cell structure of a tiled grid and the non-periodic reference grid its
/// cells are copies of.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTiling {
    pub eps: f64,
    pub n_cells: usize,
    pub n_per_cell: usize,
    pub reference: LabeledGrid,
}

impl CellTiling {
    pub fn new(tiled: &LabeledGrid, eps: f64) -> Result<Self, UnfoldError> {
        let n_cells = cells_per_axis(eps)?;
        if tiled.nx != tiled.ny || !tiled.nx.is_multiple_of(n_cells) || tiled.nx < n_cells {
            return Err(UnfoldError::Tiling { n: tiled.nx, n_per_cell: tiled.nx / n_cells.max(1) });
        }
        let n = tiled.nx / n_cells;
        let labels: Vec<Phase> = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| tiled.phase(i, j)).collect();
        let reference = LabeledGrid::with_phases(n, n, 1.0 / n as f64, 1.0 / n as f64, labels, [AxisBoundary::ZeroFlux; 2]);
        Ok(Self { eps, n_cells, n_per_cell: n, reference })
    }

    pub fn num_cells(&self) -> usize {
        self.n_cells * self.n_cells
    }

    pub fn ref_nodes(&self) -> usize {
        (self.n_per_cell + 1) * (self.n_per_cell + 1)
    }

    /// Tiled node index of local node `(a, b)` in cell `h`.
    pub fn tiled_node(&self, tiled: &LabeledGrid, h: usize, a: usize, b: usize) -> usize {
        let (ci, cj) = (h % self.n_cells, h / self.n_cells);
        tiled.node(ci * self.n_per_cell + a, cj * self.n_per_cell + b)
    }

    /// Lower-left corner of cell `h`.
    pub fn origin(&self, h: usize) -> (f64, f64) {
        ((h % self.n_cells) as f64 * self.eps, (h / self.n_cells) as f64 * self.eps)
    }

    fn support(&self, region: &Region) -> Vec<bool> {
        match region {
            Region::Phases(p) => self.reference.phase_node_mask(p),
            Region::Interface(l) => self.reference.interface_node_mask(*l),
        }
    }

    /// Mass matrix of the region on the reference cell.
    pub fn reference_mass(&self, region: &Region) -> SparseOperator {
        match region {
            Region::Phases(p) => assemble_mass(&self.reference, p),
            Region::Interface(l) => assemble_interface_mass(&self.reference, *l),
        }
    }
}

/// Values indexed by (cell, reference node), zero outside the region.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedField {
    pub eps: f64,
    pub n_cells: usize,
    pub n_per_cell: usize,
    pub region: Region,
    /// Reference nodes belonging to the region.
    pub support: Vec<bool>,
    /// Row `h` holds cell `h`; cells are numbered row-major.
    pub values: Vec<f64>,
}

impl UnfoldedField {
    pub fn ref_nodes(&self) -> usize {
        (self.n_per_cell + 1) * (self.n_per_cell + 1)
    }

    pub fn cell(&self, h: usize) -> &[f64] {
        let m = self.ref_nodes();
        &self.values[h * m..(h + 1) * m]
    }

    pub fn num_cells(&self) -> usize {
        self.n_cells * self.n_cells
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "unfolded fields of different shape");
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(), ..self.clone() }
    }

    /// `integral over Omega x Y` of the squared field (or `Omega x Gamma`).
    pub fn norm_sq(&self, tiling: &CellTiling) -> f64 {
        let mass = tiling.reference_mass(&self.region);
        let cell_area = self.eps * self.eps;
        (0..self.num_cells()).map(|h| cell_area * mass.bilinear(self.cell(h), self.cell(h))).sum()
    }

    /// Average over the region of the reference cell, per macro cell.
    pub fn cell_averages(&self, tiling: &CellTiling) -> Vec<f64> {
        let mass = tiling.reference_mass(&self.region);
        let ones: Vec<f64> = self.support.iter().map(|&on| if on { 1.0 } else { 0.0 }).collect();
        let measure = mass.bilinear(&ones, &ones);
        (0..self.num_cells()).map(|h| mass.bilinear(self.cell(h), &ones) / measure).collect()
    }
}

fn unfold(tiled: &LabeledGrid, field: &Field, region: Region, eps: f64) -> Result<UnfoldedField, UnfoldError> {
    if field.len() != tiled.num_nodes() {
        return Err(UnfoldError::Resolution { expected: tiled.num_nodes(), got: field.len() });
    }
    let tiling = CellTiling::new(tiled, eps)?;
    let support = tiling.support(&region);
    let n1 = tiling.n_per_cell + 1;
    let mut values = vec![0.0; tiling.num_cells() * tiling.ref_nodes()];
    for h in 0..tiling.num_cells() {
        for b in 0..n1 {
            for a in 0..n1 {
                let r = b * n1 + a;
                if support[r] {
                    values[h * n1 * n1 + r] = field.values[tiling.tiled_node(tiled, h, a, b)];
                }
            }
        }
    }
    Ok(UnfoldedField { eps, n_cells: tiling.n_cells, n_per_cell: tiling.n_per_cell, region, support, values })
}

/// Unfolds a field living on `phases` of the tiled grid.
pub fn unfold_volume(tiled: &LabeledGrid, field: &Field, phases: &[Phase], eps: f64) -> Result<UnfoldedField, UnfoldError> {
    unfold(tiled, field, Region::Phases(phases.to_vec()), eps)
}

/// Unfolds a trace living on the interfaces labeled `label`.
pub fn unfold_boundary(
    tiled: &LabeledGrid,
    trace: &Field,
    label: InterfaceLabel,
    eps: f64,
) -> Result<UnfoldedField, UnfoldError> {
    unfold(tiled, trace, Region::Interface(label), eps)
}

/// Maximum defect of each identity checked by [`verify_identities`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub eps: f64,
    pub resolution: usize,
    pub seed: u64,
    pub defects: Vec<(&'static str, f64)>,
}

pub const IDENTITY_TOL: f64 = 1e-12;

impl IdentityReport {
    pub fn max_defect(&self) -> f64 {
        self.defects.iter().map(|d| d.1).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_defect() <= IDENTITY_TOL
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Element-center gradients of every reference element of every cell, in
/// reference coordinates, and of the tiled field in physical coordinates.
fn gradient_rule_defect(tiled: &LabeledGrid, u: &Field, tiling: &CellTiling) -> Result<f64, UnfoldError> {
    let tu = unfold_volume(tiled, u, &Phase::ALL, tiling.eps)?;
    let n = tiling.n_per_cell;
    let n1 = n + 1;
    let g_ref = shape_grad(0.5, 0.5, tiling.reference.hx, tiling.reference.hy);
    let g_x = shape_grad(0.5, 0.5, tiled.hx, tiled.hy);
    let mut defect = 0.0f64;
    for h in 0..tiling.num_cells() {
        let cell = tu.cell(h);
        let (ci, cj) = (h % tiling.n_cells, h / tiling.n_cells);
        for j in 0..n {
            for i in 0..n {
                let local = [j * n1 + i, j * n1 + i + 1, (j + 1) * n1 + i + 1, (j + 1) * n1 + i];
                let global = tiled.element_nodes(ci * n + i, cj * n + j);
                for d in 0..2 {
                    let lhs: f64 = (0..4).map(|a| cell[local[a]] * g_ref[a][d]).sum();
                    let rhs: f64 = tiling.eps * (0..4).map(|a| u.values[global[a]] * g_x[a][d]).sum::<f64>();
                    defect = defect.max(rel(lhs, rhs));
                }
            }
        }
    }
    Ok(defect)
}

/// Checks linearity, the product rule, the volume and boundary norm
/// identities and the gradient rule on random fields over a Band tiling.
pub fn verify_identities(eps: f64, resolution: usize, seed: u64) -> Result<IdentityReport, UnfoldError> {
    let spec = CellGeometrySpec::band(0.25, 0.75);
    let tiled = tile_microstructure(&spec, eps, resolution)?;
    let tiling = CellTiling::new(&tiled, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = || Field::from((0..tiled.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
    let (u, w) = (random(), random());
    let combo = Field::from(u.values.iter().zip(&w.values).map(|(a, b)| 2.0 * a - 3.0 * b).collect::<Vec<_>>());
    let product = Field::from(u.values.iter().zip(&w.values).map(|(a, b)| a * b).collect::<Vec<_>>());

    let mut defects = Vec::new();
    let mut linearity = 0.0f64;
    let mut product_rule = 0.0f64;
    let mut volume_norm = 0.0f64;
    let mut boundary_norm = 0.0f64;
    let regions: Vec<Region> = Phase::ALL
        .iter()
        .map(|p| Region::Phases(vec![*p]))
        .chain(InterfaceLabel::ALL.iter().map(|l| Region::Interface(*l)))
        .collect();
    for region in regions {
        let tu = unfold(&tiled, &u, region.clone(), eps)?;
        let tw = unfold(&tiled, &w, region.clone(), eps)?;
        let lin = tu.zip_with(&tw, |a, b| 2.0 * a - 3.0 * b);
        linearity = linearity.max(max_diff(&unfold(&tiled, &combo, region.clone(), eps)?.values, &lin.values));
        let prod = tu.zip_with(&tw, |a, b| a * b);
        product_rule = product_rule.max(max_diff(&unfold(&tiled, &product, region.clone(), eps)?.values, &prod.values));

        // direct summation on the tiled grid
        let direct = match &region {
            Region::Phases(p) => assemble_mass(&tiled, p).bilinear(&u.values, &u.values),
            Region::Interface(l) => eps * assemble_interface_mass(&tiled, *l).bilinear(&u.values, &u.values),
        };
        let unfolded = tu.norm_sq(&tiling);
        match region {
            Region::Phases(_) => volume_norm = volume_norm.max(rel(unfolded, direct)),
            Region::Interface(_) => boundary_norm = boundary_norm.max(rel(unfolded, direct)),
        }
    }
    defects.push(("linearity", linearity));
    defects.push(("product", product_rule));
    defects.push(("volume-norm", volume_norm));
    defects.push(("boundary-norm", boundary_norm));
    defects.push(("gradient", gradient_rule_defect(&tiled, &u, &tiling)?));
    Ok(IdentityReport { eps, resolution, seed, defects })
}

/// Unfolded errors between a micro and a macro state at a common time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub eps: f64,
    pub t: f64,
    pub e_v1: f64,
    pub e_v2: f64,
    pub e_s: f64,
    pub e_ui1: f64,
    pub e_ui2: f64,
    pub e_ue: f64,
}

/// Bilinear interpolation of a field on a non-periodic grid of the unit square.
fn locate(grid: &LabeledGrid, x: f64, y: f64) -> ((usize, usize), (f64, f64)) {
    let fx = (x / grid.hx).clamp(0.0, grid.nx as f64);
    let fy = (y / grid.hy).clamp(0.0, grid.ny as f64);
    let i = (fx.floor() as usize).min(grid.nx - 1);
    let j = (fy.floor() as usize).min(grid.ny - 1);
    ((i, j), (fx - i as f64, fy - j as f64))
}

pub fn interpolate(grid: &LabeledGrid, field: &Field, x: f64, y: f64) -> f64 {
    let ((i, j), (xi, eta)) = locate(grid, x, y);
    let nodes = grid.element_nodes(i, j);
    shape(xi, eta).iter().zip(nodes).map(|(s, p)| s * field.values[p]).sum()
}

pub fn interpolate_grad(grid: &LabeledGrid, field: &Field, x: f64, y: f64) -> [f64; 2] {
    let ((i, j), (xi, eta)) = locate(grid, x, y);
    let nodes = grid.element_nodes(i, j);
    let g = shape_grad(xi, eta, grid.hx, grid.hy);
    let mut out = [0.0; 2];
    for a in 0..4 {
        out[0] += g[a][0] * field.values[nodes[a]];
        out[1] += g[a][1] * field.values[nodes[a]];
    }
    out
}

/// Quadrature points and weights covering cell `h`: 2x2 Gauss points in each
/// of its micro elements.
fn cell_points(tiling: &CellTiling, h: usize) -> Vec<(f64, f64, f64)> {
    let (x0, y0) = tiling.origin(h);
    let n = tiling.n_per_cell;
    let hx = tiling.eps / n as f64;
    let w = 0.25 * hx * hx;
    let mut pts = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            for (xi, eta) in gauss_points() {
                pts.push((x0 + (i as f64 + xi) * hx, y0 + (j as f64 + eta) * hx, w));
            }
        }
    }
    pts
}

/// `|| T(micro) - macro ||` over `Omega x region`, the macro field taken
/// constant in `y`.
fn unfolded_error(tiling: &CellTiling, micro: &UnfoldedField, macro_grid: &LabeledGrid, macro_field: &Field) -> f64 {
    let mass = tiling.reference_mass(&micro.region);
    let mut total = 0.0;
    let mut diff = vec![0.0; micro.ref_nodes()];
    for h in 0..micro.num_cells() {
        let cell = micro.cell(h);
        for (x, y, w) in cell_points(tiling, h) {
            let b = interpolate(macro_grid, macro_field, x, y);
            for (r, d) in diff.iter_mut().enumerate() {
                *d = if micro.support[r] { cell[r] - b } else { 0.0 };
            }
            total += w * mass.bilinear(&diff, &diff);
        }
    }
    total.max(0.0).sqrt()
}

fn check_time(micro: f64, macro_t: f64) -> Result<(), UnfoldError> {
    if (micro - macro_t).abs() > 1e-9 * macro_t.abs().max(1.0) {
        return Err(UnfoldError::TimeMismatch { micro, macro_t });
    }
    Ok(())
}

/// Unfolded errors of traces and potentials.
pub fn micro_macro_error(
    tiled: &LabeledGrid,
    micro: &MicroState,
    eps: f64,
    macro_grid: &LabeledGrid,
    macro_state: &MacroState,
) -> Result<ErrorRecord, UnfoldError> {
    check_time(micro.t, macro_state.t)?;
    let tiling = CellTiling::new(tiled, eps)?;
    let e = |field: &Field, region: Region, target: &Field| -> Result<f64, UnfoldError> {
        let t = unfold(tiled, field, region, eps)?;
        Ok(unfolded_error(&tiling, &t, macro_grid, target))
    };
    Ok(ErrorRecord {
        eps,
        t: micro.t,
        e_v1: e(&micro.v1, Region::Interface(InterfaceLabel::G1), &macro_state.v1())?,
        e_v2: e(&micro.v2, Region::Interface(InterfaceLabel::G2), &macro_state.v2())?,
        e_s: e(&micro.s, Region::Interface(InterfaceLabel::G12), &macro_state.s())?,
        e_ui1: e(&micro.u_i1, Region::Phases(vec![Phase::I1]), &macro_state.u_i1)?,
        e_ui2: e(&micro.u_i2, Region::Phases(vec![Phase::I2]), &macro_state.u_i2)?,
        e_ue: e(&micro.u_e, Region::Phases(vec![Phase::E]), &macro_state.u_e)?,
    })
}

/// Gradient errors of the three potentials, plain and with the two-scale
/// corrector `sum_q d_q u(x) grad chi^q(y)` added to the macro gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientErrors {
    pub eps: f64,
    pub t: f64,
    pub plain: [f64; 3],
    pub corrected: [f64; 3],
}

/// `cell` is the periodic reference cell the correctors were solved on; it
/// must have the tiling's resolution.
pub fn gradient_errors(
    tiled: &LabeledGrid,
    micro: &MicroState,
    eps: f64,
    macro_grid: &LabeledGrid,
    macro_state: &MacroState,
    cell: &LabeledGrid,
    correctors: [&CorrectorSet; 3],
) -> Result<GradientErrors, UnfoldError> {
    check_time(micro.t, macro_state.t)?;
    let tiling = CellTiling::new(tiled, eps)?;
    let n = tiling.n_per_cell;
    if cell.nx != n || cell.ny != n {
        return Err(UnfoldError::Tiling { n: cell.nx, n_per_cell: n });
    }
    let fields = [(&micro.u_i1, &macro_state.u_i1), (&micro.u_i2, &macro_state.u_i2), (&micro.u_e, &macro_state.u_e)];
    let phases = [Phase::I1, Phase::I2, Phase::E];
    let mut plain = [0.0; 3];
    let mut corrected = [0.0; 3];
    let gauss: Vec<(f64, f64)> = gauss_points().collect();
    let y_weight = 0.25 * cell.hx * cell.hy;
    for k in 0..3 {
        let (micro_u, macro_u) = fields[k];
        let chi = &correctors[k].chi;
        let (mut ep, mut ec) = (0.0, 0.0);
        for h in 0..tiling.num_cells() {
            let xs = cell_points(&tiling, h);
            let grads: Vec<[f64; 2]> = xs.iter().map(|&(x, y, _)| interpolate_grad(macro_grid, macro_u, x, y)).collect();
            let (ci, cj) = (h % tiling.n_cells, h / tiling.n_cells);
            for j in 0..n {
                for i in 0..n {
                    if cell.phase(i, j) != phases[k] {
                        continue;
                    }
                    let tiled_nodes = tiled.element_nodes(ci * n + i, cj * n + j);
                    let cell_nodes = cell.element_nodes(i, j);
                    for &(xi, eta) in &gauss {
                        let gx = shape_grad(xi, eta, tiled.hx, tiled.hy);
                        let gy = shape_grad(xi, eta, cell.hx, cell.hy);
                        let mut du = [0.0; 2];
                        let mut dchi = [[0.0; 2]; 2];
                        for a in 0..4 {
                            for d in 0..2 {
                                du[d] += gx[a][d] * micro_u.values[tiled_nodes[a]];
                                dchi[0][d] += gy[a][d] * chi[0].values[cell_nodes[a]];
                                dchi[1][d] += gy[a][d] * chi[1].values[cell_nodes[a]];
                            }
                        }
                        for (&(_, _, wx), g) in xs.iter().zip(&grads) {
                            let w = wx * y_weight;
                            let mut sp = 0.0;
                            let mut sc = 0.0;
                            for d in 0..2 {
                                let r = du[d] - g[d];
                                sp += r * r;
                                let c = r - g[0] * dchi[0][d] - g[1] * dchi[1][d];
                                sc += c * c;
                            }
                            ep += w * sp;
                            ec += w * sc;
                        }
                    }
                }
            }
        }
        plain[k] = ep.sqrt();
        corrected[k] = ec.sqrt();
    }
    Ok(GradientErrors { eps, t: micro.t, plain, corrected })
}
