//! Compressed-row sparse operator and a triplet builder.

/// Accumulates `(row, col, value)` contributions; duplicates are summed in
/// insertion order when converted, so symmetric element contributions give
/// bit-identical `(p, q)` and `(q, p)` entries.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Adds `scale * block` with its rows and columns shifted by the offsets.
    pub fn add_block(&mut self, block: &SparseOperator, row_offset: usize, col_offset: usize, scale: f64) {
        if scale == 0.0 {
            return;
        }
        for r in 0..block.dim() {
            for k in block.row_ptr[r]..block.row_ptr[r + 1] {
                self.add(r + row_offset, block.col_idx[k] + col_offset, scale * block.values[k]);
            }
        }
    }

    pub fn build(mut self) -> SparseOperator {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { n: self.n, row_ptr, col_idx, values }
    }
}

/// Square sparse matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn zero(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    /// `y = A x`
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.entry(r, r)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// True when every stored entry equals its transpose bit for bit.
    pub fn is_exactly_symmetric(&self) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| self.entry(c, r) == v))
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (r, xr) in x.iter().enumerate().take(self.n) {
            if *xr == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.values[k] * y[self.col_idx[k]];
            }
            acc += xr * row;
        }
        acc
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }
}
