use crate::error::{invalid_param, RelaxError, Result};
use crate::scalar::Scalar;

/// Uniform grid on `[a, b]` with `n_cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    a: T,
    b: T,
    n_cells: usize,
}

impl<T: Scalar> Grid1D<T> {
    pub fn new(a: T, b: T, n_cells: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid_param(
                "domain",
                format!("require a < b, got [{a}, {b}]"),
            ));
        }
        if n_cells < 2 {
            return Err(invalid_param("n_cells", "need at least two cells"));
        }
        Ok(Self { a, b, n_cells })
    }

    /// Grid whose spacing is `dx`; `(b - a) / dx` must be (close to) an integer.
    pub fn with_spacing(a: T, b: T, dx: T) -> Result<Self> {
        if !(dx > T::zero()) {
            return Err(invalid_param("dx", "must be positive"));
        }
        let ratio = ((b - a) / dx).as_f64();
        let n = ratio.round();
        if (ratio - n).abs() > 1e-6 * n.max(1.0) {
            return Err(invalid_param(
                "dx",
                format!("domain length is not a multiple of dx ({ratio} cells)"),
            ));
        }
        Self::new(a, b, n as usize)
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> T {
        (self.b - self.a) / T::from_usize_lossy(self.n_cells)
    }

    pub fn node(&self, i: usize) -> T {
        if i == self.n_cells {
            self.b
        } else {
            self.a + self.dx() * T::from_usize_lossy(i)
        }
    }

    pub fn cell_center(&self, j: usize) -> T {
        self.a + self.dx() * (T::from_usize_lossy(j) + T::lit(0.5))
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    pub fn cell_centers(&self) -> Vec<T> {
        (0..self.n_cells).map(|j| self.cell_center(j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Staggering {
    /// One value per node (`u`).
    Nodes,
    /// One value per cell (`d`, `b`, `u_x`).
    Cells,
}

/// Values attached to the nodes or the cells of a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction1D<T> {
    kind: Staggering,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction1D<T> {
    pub fn nodes(grid: &Grid1D<T>, values: Vec<T>) -> Result<Self> {
        Self::checked(Staggering::Nodes, grid.n_nodes(), values)
    }

    pub fn cells(grid: &Grid1D<T>, values: Vec<T>) -> Result<Self> {
        Self::checked(Staggering::Cells, grid.n_cells(), values)
    }

    pub fn zero_nodes(grid: &Grid1D<T>) -> Self {
        Self {
            kind: Staggering::Nodes,
            values: vec![T::zero(); grid.n_nodes()],
        }
    }

    pub fn zero_cells(grid: &Grid1D<T>) -> Self {
        Self {
            kind: Staggering::Cells,
            values: vec![T::zero(); grid.n_cells()],
        }
    }

    /// Samples `f` at nodes.
    pub fn from_fn_nodes(grid: &Grid1D<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::nodes(grid, grid.nodes().into_iter().map(f).collect())
    }

    fn checked(kind: Staggering, len: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != len {
            return Err(RelaxError::InvalidInput(format!(
                "{kind:?} function needs {len} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RelaxError::InvalidInput(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self { kind, values })
    }

    pub(crate) fn from_raw(kind: Staggering, values: Vec<T>) -> Self {
        Self { kind, values }
    }

    pub fn kind(&self) -> Staggering {
        self.kind
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Forward difference `(u_{j+1} - u_j)/Δx` of a node function, one value per cell.
    pub fn forward_difference(&self, grid: &Grid1D<T>) -> Result<Self> {
        if self.kind != Staggering::Nodes {
            return Err(RelaxError::InvalidInput(
                "forward difference needs a node function".into(),
            ));
        }
        Ok(Self::from_raw(
            Staggering::Cells,
            forward_difference(&self.values, grid.dx()),
        ))
    }
}

pub(crate) fn forward_difference<T: Scalar>(u: &[T], dx: T) -> Vec<T> {
    u.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
}
