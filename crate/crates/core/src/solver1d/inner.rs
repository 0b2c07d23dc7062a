use crate::error::{invalid_param, RelaxError, Result};
use crate::prox::ShrinkTable;
use crate::scalar::Scalar;

use super::grid::{forward_difference, Grid1D, GridFunction1D, Staggering};
use super::potential::PotentialV;
use super::{BoundaryCondition, InnerSolve, SolverConfig};

/// Warm-started split Bregman variables `(u, d, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanState<T> {
    pub u: GridFunction1D<T>,
    pub d: GridFunction1D<T>,
    pub b: GridFunction1D<T>,
}

impl<T: Scalar> BregmanState<T> {
    /// `u` given, `d = u_x`, `b = 0`.
    pub fn from_u(grid: &Grid1D<T>, u: GridFunction1D<T>) -> Result<Self> {
        let d = u.forward_difference(grid)?;
        Ok(Self {
            u,
            d,
            b: GridFunction1D::zero_cells(grid),
        })
    }

    pub fn zeros(grid: &Grid1D<T>) -> Self {
        Self {
            u: GridFunction1D::zero_nodes(grid),
            d: GridFunction1D::zero_cells(grid),
            b: GridFunction1D::zero_cells(grid),
        }
    }

    pub(crate) fn check(&self, grid: &Grid1D<T>) -> Result<()> {
        let ok = self.u.kind() == Staggering::Nodes
            && self.u.len() == grid.n_nodes()
            && self.d.kind() == Staggering::Cells
            && self.d.len() == grid.n_cells()
            && self.b.kind() == Staggering::Cells
            && self.b.len() == grid.n_cells();
        if ok {
            Ok(())
        } else {
            Err(RelaxError::InvalidInput("state does not match grid".into()))
        }
    }
}

/// Trapezoid weight of node `i`: free end nodes own half a cell.
#[inline]
fn node_weight<T: Scalar>(i: usize, n: usize) -> T {
    if i == 0 || i == n {
        T::lit(0.5)
    } else {
        T::one()
    }
}

fn free_range(bc: &BoundaryCondition<impl Scalar>, n: usize) -> (usize, usize) {
    match bc {
        BoundaryCondition::Dirichlet { .. } => (1, n - 1),
        BoundaryCondition::Natural => (0, n),
    }
}

pub(crate) fn apply_dirichlet<T: Scalar>(u: &mut [T], bc: &BoundaryCondition<T>) {
    if let BoundaryCondition::Dirichlet { left, right } = *bc {
        let n = u.len() - 1;
        u[0] = left;
        u[n] = right;
    }
}

/// Diagonal and right-hand side of the u-subproblem at node `i`, excluding
/// the coupling to `u_{i±1}`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn local_terms<T: Scalar>(
    i: usize,
    n: usize,
    d: &[T],
    b: &[T],
    un: &[T],
    v: &PotentialV<T>,
    cfg: &SolverConfig<T>,
    dx: T,
) -> (T, T) {
    let w: T = node_weight(i, n);
    let g1 = cfg.gamma / dx;
    let g2 = g1 / dx;
    let mut diag = w * (cfg.h.recip() + v.implicit_coefficient());
    let mut rhs = w * (un[i] / cfg.h + v.explicit_rhs(i, un[i]));
    if i > 0 {
        diag = diag + g2;
        rhs = rhs + g1 * (d[i - 1] - b[i - 1]);
    }
    if i < n {
        diag = diag + g2;
        rhs = rhs - g1 * (d[i] - b[i]);
    }
    (diag, rhs)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn gs_sweeps_in_place<T: Scalar>(
    u: &mut [T],
    d: &[T],
    b: &[T],
    un: &[T],
    v: &PotentialV<T>,
    cfg: &SolverConfig<T>,
    dx: T,
    iteration: usize,
) -> Result<()> {
    let n = u.len() - 1;
    let g2 = cfg.gamma / (dx * dx);
    let (lo, hi) = free_range(&cfg.bc, n);
    for _ in 0..cfg.gs_sweeps {
        for i in lo..=hi {
            let (diag, mut rhs) = local_terms(i, n, d, b, un, v, cfg, dx);
            if i > 0 {
                rhs = rhs + g2 * u[i - 1];
            }
            if i < n {
                rhs = rhs + g2 * u[i + 1];
            }
            let x = rhs / diag;
            if !x.is_finite() {
                return Err(RelaxError::Divergence {
                    what: "u",
                    index: i,
                    iteration,
                });
            }
            u[i] = x;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn exact_in_place<T: Scalar>(
    u: &mut [T],
    d: &[T],
    b: &[T],
    un: &[T],
    v: &PotentialV<T>,
    cfg: &SolverConfig<T>,
    dx: T,
) -> Result<()> {
    let n = u.len() - 1;
    let g2 = cfg.gamma / (dx * dx);
    let (lo, hi) = free_range(&cfg.bc, n);
    let m = hi + 1 - lo;
    // Thomas algorithm on the free nodes; off-diagonals are all -g2.
    let mut cprime = vec![T::zero(); m];
    let mut rhs = vec![T::zero(); m];
    let mut prev_c = T::zero();
    let mut prev_r = T::zero();
    for (k, i) in (lo..=hi).enumerate() {
        let (diag, mut r) = local_terms(i, n, d, b, un, v, cfg, dx);
        if i > 0 && i - 1 < lo {
            r = r + g2 * u[i - 1];
        }
        if i < n && i + 1 > hi {
            r = r + g2 * u[i + 1];
        }
        let lower = if k == 0 { T::zero() } else { -g2 };
        let upper = if k + 1 == m { T::zero() } else { -g2 };
        let denom = diag - lower * prev_c;
        if !(denom.abs() > T::min_positive_value()) {
            return Err(RelaxError::Singular(format!("zero pivot at node {i}")));
        }
        cprime[k] = upper / denom;
        rhs[k] = (r - lower * prev_r) / denom;
        prev_c = cprime[k];
        prev_r = rhs[k];
    }
    for k in (0..m).rev() {
        let next = if k + 1 < m { rhs[k + 1] } else { T::zero() };
        rhs[k] = rhs[k] - cprime[k] * next;
    }
    for (k, i) in (lo..=hi).enumerate() {
        if !rhs[k].is_finite() {
            return Err(RelaxError::Singular(format!(
                "non-finite solution at node {i}"
            )));
        }
        u[i] = rhs[k];
    }
    Ok(())
}

fn check_inputs<T: Scalar>(
    u: &GridFunction1D<T>,
    d: &GridFunction1D<T>,
    b: &GridFunction1D<T>,
    un: &GridFunction1D<T>,
    v: &PotentialV<T>,
    grid: &Grid1D<T>,
) -> Result<()> {
    let nodes_ok =
        |f: &GridFunction1D<T>| f.kind() == Staggering::Nodes && f.len() == grid.n_nodes();
    let cells_ok =
        |f: &GridFunction1D<T>| f.kind() == Staggering::Cells && f.len() == grid.n_cells();
    if nodes_ok(u) && nodes_ok(un) && cells_ok(d) && cells_ok(b) && v.n_nodes() == grid.n_nodes() {
        Ok(())
    } else {
        Err(RelaxError::InvalidInput("inputs do not match grid".into()))
    }
}

/// `cfg.gs_sweeps` forward Gauss-Seidel sweeps on the u-subproblem.
pub fn gauss_seidel_u_step<T: Scalar>(
    u: &GridFunction1D<T>,
    d: &GridFunction1D<T>,
    b: &GridFunction1D<T>,
    u_prev: &GridFunction1D<T>,
    v: &PotentialV<T>,
    cfg: &SolverConfig<T>,
    grid: &Grid1D<T>,
) -> Result<GridFunction1D<T>> {
    cfg.validate()?;
    check_inputs(u, d, b, u_prev, v, grid)?;
    let mut out = u.values().to_vec();
    apply_dirichlet(&mut out, &cfg.bc);
    gs_sweeps_in_place(
        &mut out,
        d.values(),
        b.values(),
        u_prev.values(),
        v,
        cfg,
        grid.dx(),
        0,
    )?;
    Ok(GridFunction1D::from_raw(Staggering::Nodes, out))
}

/// Exact minimizer of the u-subproblem by a tridiagonal solve.
pub fn exact_u_step<T: Scalar>(
    u: &GridFunction1D<T>,
    d: &GridFunction1D<T>,
    b: &GridFunction1D<T>,
    u_prev: &GridFunction1D<T>,
    v: &PotentialV<T>,
    cfg: &SolverConfig<T>,
    grid: &Grid1D<T>,
) -> Result<GridFunction1D<T>> {
    cfg.validate()?;
    check_inputs(u, d, b, u_prev, v, grid)?;
    let mut out = u.values().to_vec();
    apply_dirichlet(&mut out, &cfg.bc);
    exact_in_place(
        &mut out,
        d.values(),
        b.values(),
        u_prev.values(),
        v,
        cfg,
        grid.dx(),
    )?;
    Ok(GridFunction1D::from_raw(Staggering::Nodes, out))
}

fn shrink_step<T: Scalar>(u: &[T], d: &mut [T], b: &[T], table: &ShrinkTable<T>, gamma: T, dx: T) {
    for j in 0..d.len() {
        let ux = (u[j + 1] - u[j]) / dx;
        d[j] = table.shrink(ux + b[j], gamma);
    }
}

/// `cfg.k_inner` rounds of {u-step, d-step, b-update}, in place.
pub(crate) fn bregman_inner_in_place<T: Scalar>(
    u_prev: &[T],
    state: &mut BregmanState<T>,
    v: &PotentialV<T>,
    table: &ShrinkTable<T>,
    cfg: &SolverConfig<T>,
    dx: T,
    iteration: usize,
) -> Result<()> {
    let BregmanState { u, d, b } = state;
    let (u, d, b) = (u.values_mut(), d.values_mut(), b.values_mut());
    for _ in 0..cfg.k_inner {
        match cfg.inner {
            InnerSolve::GaussSeidel => {
                gs_sweeps_in_place(u, d, b, u_prev, v, cfg, dx, iteration)?;
                shrink_step(u, d, b, table, cfg.gamma, dx);
            }
            InnerSolve::Exact => {
                exact_in_place(u, d, b, u_prev, v, cfg, dx)?;
                shrink_step(u, d, b, table, cfg.gamma, dx);
            }
            InnerSolve::Joint { max_alternations } => {
                // block coordinate descent on (u, d) for fixed b
                let scale = T::one() + u.iter().fold(T::zero(), |m, x| m.max(x.abs()));
                let tiny = T::epsilon() * T::lit(16.0) * scale;
                for _ in 0..max_alternations {
                    let before: Vec<T> = u.to_vec();
                    exact_in_place(u, d, b, u_prev, v, cfg, dx)?;
                    shrink_step(u, d, b, table, cfg.gamma, dx);
                    let change = u
                        .iter()
                        .zip(&before)
                        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
                    if change <= tiny {
                        break;
                    }
                }
            }
        }
        for j in 0..b.len() {
            let ux = (u[j + 1] - u[j]) / dx;
            b[j] = b[j] + ux - d[j];
            if !b[j].is_finite() {
                return Err(RelaxError::Divergence {
                    what: "b",
                    index: j,
                    iteration,
                });
            }
        }
    }
    Ok(())
}

/// Runs the inner split Bregman loop from the given warm start and returns
/// the updated state.
pub fn bregman_inner<T: Scalar>(
    u_prev: &GridFunction1D<T>,
    state: &BregmanState<T>,
    v: &PotentialV<T>,
    table: &ShrinkTable<T>,
    cfg: &SolverConfig<T>,
    grid: &Grid1D<T>,
) -> Result<BregmanState<T>> {
    cfg.validate()?;
    state.check(grid)?;
    check_inputs(&state.u, &state.d, &state.b, u_prev, v, grid)?;
    let mut next = state.clone();
    apply_dirichlet(next.u.values_mut(), &cfg.bc);
    bregman_inner_in_place(u_prev.values(), &mut next, v, table, cfg, grid.dx(), 0)?;
    Ok(next)
}

/// `Σ_j (d_j - u_x,j)²`, unweighted.
pub fn constraint_error<T: Scalar>(u: &[T], d: &[T], dx: T) -> T {
    forward_difference(u, dx)
        .into_iter()
        .zip(d)
        .map(|(ux, dj)| (*dj - ux).powi(2))
        .sum()
}

pub(crate) fn check_k(k: usize, sweeps: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid_param("K", "need at least one inner iteration"));
    }
    if sweeps == 0 {
        return Err(invalid_param("gs_sweeps", "need at least one sweep"));
    }
    Ok(())
}
