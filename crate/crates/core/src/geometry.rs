//! Periodic reference cell with two intracellular phases and one extracellular
//! phase, and the labeled rectangular grids built from it.
//!
//! All interfaces are axis-aligned and must fall on grid lines, so areas and
//! lengths computed from element/edge counts are exact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Material phase of a grid element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    /// First intracellular medium.
    I1,
    /// Second intracellular medium.
    I2,
    /// Extracellular medium.
    E,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::I1, Phase::I2, Phase::E];

    pub fn index(self) -> usize {
        match self {
            Phase::I1 => 0,
            Phase::I2 => 1,
            Phase::E => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::I1 => "I1",
            Phase::I2 => "I2",
            Phase::E => "E",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Interface family separating two phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InterfaceLabel {
    /// Membrane between `I1` and `E`.
    G1,
    /// Membrane between `I2` and `E`.
    G2,
    /// Gap junction between `I1` and `I2`.
    G12,
}

impl InterfaceLabel {
    pub const ALL: [InterfaceLabel; 3] = [InterfaceLabel::G1, InterfaceLabel::G2, InterfaceLabel::G12];

    /// Label of the interface between two distinct phases, `None` for equal phases.
    pub fn between(a: Phase, b: Phase) -> Option<Self> {
        use Phase::*;
        match (a, b) {
            (I1, E) | (E, I1) => Some(InterfaceLabel::G1),
            (I2, E) | (E, I2) => Some(InterfaceLabel::G2),
            (I1, I2) | (I2, I1) => Some(InterfaceLabel::G12),
            _ => None,
        }
    }

    /// The two phases on either side, intracellular side first.
    pub fn sides(self) -> (Phase, Phase) {
        match self {
            InterfaceLabel::G1 => (Phase::I1, Phase::E),
            InterfaceLabel::G2 => (Phase::I2, Phase::E),
            InterfaceLabel::G12 => (Phase::I1, Phase::I2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InterfaceLabel::G1 => "G1",
            InterfaceLabel::G2 => "G2",
            InterfaceLabel::G12 => "G12",
        }
    }
}

impl fmt::Display for InterfaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Arrangement of the phases inside the reference cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Two stacked intracellular half-bands between extracellular strips.
    Band,
    /// The whole cell is extracellular; no interfaces.
    FullCell,
    /// Whole cell as one phase, split at `x = 1/2` into two vertical strips
    /// that differ only through their conductivity.
    LaminateX,
    /// The two half-bands cut to `[island_lo, island_hi]` in `x`, so the
    /// intracellular pair is an island surrounded by a connected
    /// extracellular phase.
    Island,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::Band => "band",
            Layout::FullCell => "full_cell",
            Layout::LaminateX => "laminate_x",
            Layout::Island => "island",
        }
    }
}

/// Description of the reference cell `Y = [0,1]^2`.
///
/// For [`Layout::Band`] the second intracellular phase occupies
/// `[0,1] x [band_lo, mid]` and the first `[0,1] x [mid, band_hi]`
/// with `mid = (band_lo + band_hi) / 2`; the rest is extracellular.
/// [`Layout::Island`] restricts both half-bands to `x` in
/// `[island_lo, island_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometrySpec {
    pub layout: Layout,
    pub band_lo: f64,
    pub band_hi: f64,
    pub island_lo: f64,
    pub island_hi: f64,
}

impl CellGeometrySpec {
    pub fn band(band_lo: f64, band_hi: f64) -> Self {
        Self { layout: Layout::Band, band_lo, band_hi, island_lo: 0.0, island_hi: 1.0 }
    }

    pub fn full_cell() -> Self {
        Self { layout: Layout::FullCell, ..Self::band(0.25, 0.75) }
    }

    pub fn laminate_x() -> Self {
        Self { layout: Layout::LaminateX, ..Self::band(0.25, 0.75) }
    }

    pub fn island(band_lo: f64, band_hi: f64, island_lo: f64, island_hi: f64) -> Self {
        Self { layout: Layout::Island, band_lo, band_hi, island_lo, island_hi }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.band_lo + self.band_hi)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let banded = matches!(self.layout, Layout::Band | Layout::Island);
        if banded && !(0.0 < self.band_lo && self.band_lo < self.band_hi && self.band_hi < 1.0) {
            return Err(GeometryError::InvalidBand { lo: self.band_lo, hi: self.band_hi });
        }
        if self.layout == Layout::Island
            && !(0.0 < self.island_lo && self.island_lo < self.island_hi && self.island_hi < 1.0)
        {
            return Err(GeometryError::InvalidIsland { lo: self.island_lo, hi: self.island_hi });
        }
        Ok(())
    }

    /// Checks that every feature of the layout lies on a grid line of an
    /// `n x n` subdivision of the cell.
    pub fn check_alignment(&self, n: usize) -> Result<(), GeometryError> {
        self.validate()?;
        let features: Vec<(&'static str, f64)> = match self.layout {
            Layout::Band => vec![
                ("band_lo", self.band_lo),
                ("band_hi", self.band_hi),
                ("mid", self.mid()),
            ],
            Layout::FullCell => vec![],
            Layout::LaminateX => vec![("laminate_split", 0.5)],
            Layout::Island => vec![
                ("band_lo", self.band_lo),
                ("band_hi", self.band_hi),
                ("mid", self.mid()),
                ("island_lo", self.island_lo),
                ("island_hi", self.island_hi),
            ],
        };
        for (name, value) in features {
            let scaled = value * n as f64;
            if (scaled - scaled.round()).abs() > 1e-9 {
                return Err(GeometryError::Misaligned { name, value, n, scaled });
            }
        }
        Ok(())
    }

    /// Phase of reference element `(i, j)` on an `n x n` subdivision.
    fn phase_at(&self, i: usize, j: usize, n: usize) -> Phase {
        match self.layout {
            Layout::FullCell | Layout::LaminateX => Phase::E,
            Layout::Island => {
                let lo = (self.island_lo * n as f64).round() as usize;
                let hi = (self.island_hi * n as f64).round() as usize;
                if i >= lo && i < hi {
                    Self { layout: Layout::Band, ..*self }.phase_at(i, j, n)
                } else {
                    Phase::E
                }
            }
            Layout::Band => {
                let lo = (self.band_lo * n as f64).round() as usize;
                let mid = (self.mid() * n as f64).round() as usize;
                let hi = (self.band_hi * n as f64).round() as usize;
                if j >= lo && j < mid {
                    Phase::I2
                } else if j >= mid && j < hi {
                    Phase::I1
                } else {
                    Phase::E
                }
            }
        }
    }
}

/// Boundary treatment along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisBoundary {
    /// Opposite faces identified; one node per identified pair.
    Periodic,
    /// Exterior boundary with zero normal flux.
    ZeroFlux,
}

/// Orientation of a grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeDir {
    /// Edge along x between nodes `(i, j)` and `(i + 1, j)`.
    Horizontal,
    /// Edge along y between nodes `(i, j)` and `(i, j + 1)`.
    Vertical,
}

/// Grid edge identified by its lower-left node in unwrapped coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId {
    pub dir: EdgeDir,
    pub i: usize,
    pub j: usize,
}

/// Uniform rectangular grid with per-element phase labels and per-edge
/// interface labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGrid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// Row-major element labels, index `j * nx + i`.
    pub element_phase: Vec<Phase>,
    pub interface_edges: Vec<(EdgeId, InterfaceLabel)>,
    pub boundary: [AxisBoundary; 2],
}

impl LabeledGrid {
    /// Grid with all elements in one phase over `[0, lx] x [0, ly]`.
    pub fn uniform(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        boundary: [AxisBoundary; 2],
        phase: Phase,
    ) -> Self {
        Self {
            nx,
            ny,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
            element_phase: vec![phase; nx * ny],
            interface_edges: Vec::new(),
            boundary,
        }
    }

    /// Non-periodic unit-square grid used by the homogenized solver.
    pub fn macro_grid(n: usize) -> Self {
        Self::uniform(n, n, 1.0, 1.0, [AxisBoundary::ZeroFlux; 2], Phase::E)
    }

    /// Grid from explicit element labels; interface edges are detected from
    /// neighbouring labels (across periodic seams where applicable).
    pub fn with_phases(
        nx: usize,
        ny: usize,
        hx: f64,
        hy: f64,
        element_phase: Vec<Phase>,
        boundary: [AxisBoundary; 2],
    ) -> Self {
        assert_eq!(element_phase.len(), nx * ny, "one label per element");
        let mut grid = Self { nx, ny, hx, hy, element_phase, interface_edges: Vec::new(), boundary };
        grid.interface_edges = grid.detect_interfaces();
        grid
    }

    fn detect_interfaces(&self) -> Vec<(EdgeId, InterfaceLabel)> {
        let mut edges = Vec::new();
        let px = self.boundary[0] == AxisBoundary::Periodic;
        let py = self.boundary[1] == AxisBoundary::Periodic;
        // horizontal edges on grid line j separate rows j-1 and j
        let j_start = if py { 0 } else { 1 };
        for j in j_start..self.ny {
            let below = if j == 0 { self.ny - 1 } else { j - 1 };
            for i in 0..self.nx {
                let a = self.phase(i, below);
                let b = self.phase(i, j);
                if let Some(label) = InterfaceLabel::between(a, b) {
                    edges.push((EdgeId { dir: EdgeDir::Horizontal, i, j }, label));
                }
            }
        }
        let i_start = if px { 0 } else { 1 };
        for j in 0..self.ny {
            for i in i_start..self.nx {
                let left = if i == 0 { self.nx - 1 } else { i - 1 };
                let a = self.phase(left, j);
                let b = self.phase(i, j);
                if let Some(label) = InterfaceLabel::between(a, b) {
                    edges.push((EdgeId { dir: EdgeDir::Vertical, i, j }, label));
                }
            }
        }
        edges
    }

    pub fn phase(&self, i: usize, j: usize) -> Phase {
        self.element_phase[j * self.nx + i]
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.boundary[axis] == AxisBoundary::Periodic
    }

    /// Distinct node count along each axis after periodic identification.
    pub fn node_dims(&self) -> (usize, usize) {
        let nnx = if self.is_periodic(0) { self.nx } else { self.nx + 1 };
        let nny = if self.is_periodic(1) { self.ny } else { self.ny + 1 };
        (nnx, nny)
    }

    pub fn num_nodes(&self) -> usize {
        let (a, b) = self.node_dims();
        a * b
    }

    /// Node index of unwrapped grid point `(i, j)`, `0 <= i <= nx`, `0 <= j <= ny`.
    pub fn node(&self, i: usize, j: usize) -> usize {
        let (nnx, _) = self.node_dims();
        let ii = if self.is_periodic(0) { i % self.nx } else { i };
        let jj = if self.is_periodic(1) { j % self.ny } else { j };
        jj * nnx + ii
    }

    /// Coordinates of node index `p` (the representative in `[0, nx*hx)` for periodic axes).
    pub fn node_coords(&self, p: usize) -> (f64, f64) {
        let (nnx, _) = self.node_dims();
        ((p % nnx) as f64 * self.hx, (p / nnx) as f64 * self.hy)
    }

    /// The four node indices of element `(i, j)` in counter-clockwise order
    /// starting at the lower-left corner.
    pub fn element_nodes(&self, i: usize, j: usize) -> [usize; 4] {
        [self.node(i, j), self.node(i + 1, j), self.node(i + 1, j + 1), self.node(i, j + 1)]
    }

    /// End nodes and length of an edge.
    pub fn edge_nodes(&self, edge: EdgeId) -> ([usize; 2], f64) {
        match edge.dir {
            EdgeDir::Horizontal => ([self.node(edge.i, edge.j), self.node(edge.i + 1, edge.j)], self.hx),
            EdgeDir::Vertical => ([self.node(edge.i, edge.j), self.node(edge.i, edge.j + 1)], self.hy),
        }
    }

    pub fn edges_with(&self, label: InterfaceLabel) -> impl Iterator<Item = EdgeId> + '_ {
        self.interface_edges.iter().filter(move |(_, l)| *l == label).map(|(e, _)| *e)
    }

    /// Per-node flag: node belongs to the closure of some element in `phases`.
    pub fn phase_node_mask(&self, phases: &[Phase]) -> Vec<bool> {
        let mut mask = vec![false; self.num_nodes()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                if phases.contains(&self.phase(i, j)) {
                    for p in self.element_nodes(i, j) {
                        mask[p] = true;
                    }
                }
            }
        }
        mask
    }

    /// Per-node flag: node lies on an edge carrying `label`.
    pub fn interface_node_mask(&self, label: InterfaceLabel) -> Vec<bool> {
        let mut mask = vec![false; self.num_nodes()];
        for e in self.edges_with(label) {
            let (nodes, _) = self.edge_nodes(e);
            for p in nodes {
                mask[p] = true;
            }
        }
        mask
    }

    pub fn domain_area(&self) -> f64 {
        self.nx as f64 * self.hx * self.ny as f64 * self.hy
    }
}

/// Areas, interface lengths and the capacity ratios entering the
/// homogenized equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricMeasures {
    pub vol_i1: f64,
    pub vol_i2: f64,
    pub vol_e: f64,
    pub len_g1: f64,
    pub len_g2: f64,
    pub len_g12: f64,
    /// `|G1| / |Y|`
    pub mu_1: f64,
    /// `|G2| / |Y|`
    pub mu_2: f64,
    /// `|G12| / (2 |Y|)`
    pub mu_g: f64,
}

impl GeometricMeasures {
    pub fn volume(&self, phase: Phase) -> f64 {
        match phase {
            Phase::I1 => self.vol_i1,
            Phase::I2 => self.vol_i2,
            Phase::E => self.vol_e,
        }
    }
}

/// Labeled `n x n` grid of the periodic reference cell.
pub fn build_reference_cell(spec: &CellGeometrySpec, n: usize) -> Result<LabeledGrid, GeometryError> {
    if n < 4 {
        return Err(GeometryError::TooCoarse { n });
    }
    spec.check_alignment(n)?;
    let h = 1.0 / n as f64;
    let phases = (0..n * n).map(|idx| spec.phase_at(idx % n, idx / n, n)).collect();
    Ok(LabeledGrid::with_phases(n, n, h, h, phases, [AxisBoundary::Periodic; 2]))
}

/// Number of cells per axis for a period `eps = 1/N`, rejecting non-integer reciprocals.
pub fn cells_per_axis(eps: f64) -> Result<usize, GeometryError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(GeometryError::BadPeriod { eps });
    }
    let inv = 1.0 / eps;
    let n = inv.round();
    if (inv - n).abs() > 1e-9 * inv {
        return Err(GeometryError::BadPeriod { eps });
    }
    Ok(n as usize)
}

/// Tiles the unit square with `1/eps` copies of the reference cell per axis,
/// each resolved by `n_per_cell` elements per axis. The exterior boundary is
/// zero-flux.
pub fn tile_microstructure(
    spec: &CellGeometrySpec,
    eps: f64,
    n_per_cell: usize,
) -> Result<LabeledGrid, GeometryError> {
    let cells = cells_per_axis(eps)?;
    let reference = build_reference_cell(spec, n_per_cell)?;
    let n = cells * n_per_cell;
    let h = 1.0 / n as f64;
    let phases = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx % n, idx / n);
            reference.phase(i % n_per_cell, j % n_per_cell)
        })
        .collect();
    Ok(LabeledGrid::with_phases(n, n, h, h, phases, [AxisBoundary::ZeroFlux; 2]))
}

/// Exact areas and lengths of a reference-cell grid.
pub fn measures(grid: &LabeledGrid) -> GeometricMeasures {
    let cell = grid.hx * grid.hy;
    let mut counts = [0usize; 3];
    for p in &grid.element_phase {
        counts[p.index()] += 1;
    }
    let mut lens = [0.0; 3];
    for (e, l) in &grid.interface_edges {
        let (_, len) = grid.edge_nodes(*e);
        let k = match l {
            InterfaceLabel::G1 => 0,
            InterfaceLabel::G2 => 1,
            InterfaceLabel::G12 => 2,
        };
        lens[k] += len;
    }
    let area = grid.domain_area();
    GeometricMeasures {
        vol_i1: counts[0] as f64 * cell,
        vol_i2: counts[1] as f64 * cell,
        vol_e: counts[2] as f64 * cell,
        len_g1: lens[0],
        len_g2: lens[1],
        len_g12: lens[2],
        mu_1: lens[0] / area,
        mu_2: lens[1] / area,
        mu_g: lens[2] / (2.0 * area),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_reference_rows_and_gap_edges() {
        let g = build_reference_cell(&CellGeometrySpec::band(0.25, 0.75), 8).unwrap();
        for j in 0..8 {
            let expected = match j {
                2 | 3 => Phase::I2,
                4 | 5 => Phase::I1,
                _ => Phase::E,
            };
            for i in 0..8 {
                assert_eq!(g.phase(i, j), expected, "row {j}");
            }
        }
        let gap: Vec<_> = g.edges_with(InterfaceLabel::G12).collect();
        assert_eq!(gap.len(), 8);
        assert!(gap.iter().all(|e| e.dir == EdgeDir::Horizontal && e.j == 4));
        assert_eq!(g.edges_with(InterfaceLabel::G1).count(), 8);
        assert_eq!(g.edges_with(InterfaceLabel::G2).count(), 8);
        assert_eq!(g.boundary, [AxisBoundary::Periodic; 2]);
    }

    #[test]
    fn full_cell_has_no_interfaces() {
        let g = build_reference_cell(&CellGeometrySpec::full_cell(), 4).unwrap();
        assert_eq!(g.element_phase, vec![Phase::E; 16]);
        assert!(g.interface_edges.is_empty());
    }

    #[test]
    fn misaligned_band_names_coordinate() {
        let err = build_reference_cell(&CellGeometrySpec::band(0.3, 0.7), 8).unwrap_err();
        match err {
            GeometryError::Misaligned { name, scaled, .. } => {
                assert_eq!(name, "band_lo");
                assert!((scaled - 2.4).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            build_reference_cell(&CellGeometrySpec::band(0.25, 0.75), 2),
            Err(GeometryError::TooCoarse { .. })
        ));
    }

    #[test]
    fn tiling_counts() {
        let spec = CellGeometrySpec::band(0.25, 0.75);
        let g = tile_microstructure(&spec, 0.5, 8).unwrap();
        assert_eq!((g.nx, g.ny), (16, 16));
        let gap_len: f64 = g.edges_with(InterfaceLabel::G12).map(|e| g.edge_nodes(e).1).sum();
        assert!((gap_len - 2.0).abs() < 1e-12);
        assert_eq!(g.boundary, [AxisBoundary::ZeroFlux; 2]);

        let g = tile_microstructure(&spec, 0.25, 4).unwrap();
        let m = measures(&g);
        assert!((m.vol_i1 - 0.25).abs() < 1e-12);

        assert!(matches!(tile_microstructure(&spec, 0.3, 8), Err(GeometryError::BadPeriod { .. })));
    }

    #[test]
    fn band_measures() {
        let spec = CellGeometrySpec::band(0.25, 0.75);
        let m8 = measures(&build_reference_cell(&spec, 8).unwrap());
        assert_eq!(m8.vol_i1, 0.25);
        assert_eq!(m8.len_g1, 1.0);
        assert_eq!(m8.mu_1, 1.0);
        assert_eq!(m8.mu_g, 0.5);
        let m32 = measures(&build_reference_cell(&spec, 32).unwrap());
        assert_eq!(m8, m32);
        let full = measures(&build_reference_cell(&CellGeometrySpec::full_cell(), 8).unwrap());
        assert_eq!((full.mu_1, full.mu_2, full.mu_g), (0.0, 0.0, 0.0));
    }

    #[test]
    fn island_measures_and_validation() {
        let spec = CellGeometrySpec::island(0.25, 0.75, 0.25, 0.75);
        let m = measures(&build_reference_cell(&spec, 16).unwrap());
        assert_eq!((m.vol_i1, m.vol_i2, m.vol_e), (0.125, 0.125, 0.75));
        assert_eq!((m.len_g1, m.len_g2, m.len_g12), (1.0, 1.0, 0.5));
        assert_eq!(m.mu_g, 0.25);
        let bad = CellGeometrySpec::island(0.25, 0.75, 0.6, 0.4);
        assert!(matches!(bad.validate(), Err(GeometryError::InvalidIsland { .. })));
        let off = CellGeometrySpec::island(0.25, 0.75, 0.3, 0.75);
        assert!(matches!(build_reference_cell(&off, 8), Err(GeometryError::Misaligned { .. })));
    }

    #[test]
    fn tiled_window_matches_reference() {
        let spec = CellGeometrySpec::band(0.125, 0.625);
        let n = 8;
        let r = build_reference_cell(&spec, n).unwrap();
        let t = tile_microstructure(&spec, 0.25, n).unwrap();
        for (cx, cy) in [(0, 0), (1, 2), (3, 3)] {
            for j in 0..n {
                for i in 0..n {
                    assert_eq!(t.phase(cx * n + i, cy * n + j), r.phase(i, j));
                }
            }
        }
    }

    #[test]
    fn interface_edges_separate_distinct_phases() {
        let spec = CellGeometrySpec::band(0.25, 0.75);
        for g in [build_reference_cell(&spec, 16).unwrap(), tile_microstructure(&spec, 0.25, 8).unwrap()] {
            let mut seen = std::collections::HashSet::new();
            for (e, l) in &g.interface_edges {
                assert!(seen.insert(*e), "edge labeled twice");
                let (a, b) = match e.dir {
                    EdgeDir::Horizontal => {
                        let below = if e.j == 0 { g.ny - 1 } else { e.j - 1 };
                        (g.phase(e.i, below), g.phase(e.i, e.j))
                    }
                    EdgeDir::Vertical => {
                        let left = if e.i == 0 { g.nx - 1 } else { e.i - 1 };
                        (g.phase(left, e.j), g.phase(e.i, e.j))
                    }
                };
                assert_ne!(a, b);
                assert_eq!(InterfaceLabel::between(a, b), Some(*l));
            }
        }
    }
}
