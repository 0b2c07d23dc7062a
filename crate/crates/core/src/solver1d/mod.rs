//! Split Bregman with convexity splitting for one-dimensional relaxed problems
//! `∫ W̄(u_x) + V(x, u) dx`.
//!
//! `u` lives on the nodes of a uniform grid and `d`, `b` on its cells, with
//! `u_x` the forward difference. Each outer iteration is one implicit
//! gradient-flow step of size `h`; the Rayleigh functional of that step is
//! minimized approximately by `K` inner split Bregman rounds.

mod grid;
mod inner;
mod potential;

use std::io::Write;

use serde::Serialize;

pub use grid::{Grid1D, GridFunction1D, Staggering};
pub use inner::{bregman_inner, constraint_error, exact_u_step, gauss_seidel_u_step, BregmanState};
pub use potential::{PotentialForm, PotentialV};

use crate::envelope::PiecewiseLinearEnvelope;
use crate::error::{invalid_param, RelaxError, Result};
use crate::prox::ShrinkTable;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryCondition<T> {
    Dirichlet { left: T, right: T },
    Natural,
}

/// How each inner u/d update is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InnerSolve {
    /// `gs_sweeps` Gauss-Seidel sweeps, then one shrink.
    GaussSeidel,
    /// Exact tridiagonal u-solve, then one shrink.
    Exact,
    /// Alternate exact u-solves and shrinks until `u` stops moving, which
    /// minimizes the augmented functional jointly in `(u, d)`.
    Joint { max_alternations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig<T> {
    pub gamma: T,
    pub h: T,
    pub k_inner: usize,
    pub gs_sweeps: usize,
    pub tol: T,
    pub max_outer: usize,
    pub bc: BoundaryCondition<T>,
    pub inner: InnerSolve,
    /// When set, also require `max_i |U_n - U_{n-1}|/h ≤ step_tol` before
    /// stopping. Needed whenever the prox can act as the identity on the whole
    /// grid, which makes the constraint error vanish long before the flow is
    /// stationary.
    pub step_tol: Option<T>,
}

impl<T: Scalar> SolverConfig<T> {
    /// Defaults for spacing `dx`: `γ = h = max(dx, 0.01)`, `K = 5`, ten
    /// sweeps, `tol = 1e-12`, `step_tol = 1e-8`, at most 50 000 outer
    /// iterations.
    pub fn for_spacing(dx: T, bc: BoundaryCondition<T>) -> Self {
        let step = dx.max(T::lit(0.01));
        Self {
            gamma: step,
            h: step,
            k_inner: 5,
            gs_sweeps: 10,
            tol: T::lit(1e-12),
            max_outer: 50_000,
            bc,
            inner: InnerSolve::GaussSeidel,
            step_tol: Some(T::lit(1e-8)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, x: T| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(invalid_param(name, format!("must be positive, got {x}")))
            }
        };
        positive("gamma", self.gamma)?;
        positive("h", self.h)?;
        positive("tol", self.tol)?;
        inner::check_k(self.k_inner, self.gs_sweeps)?;
        if let Some(s) = self.step_tol {
            positive("step_tol", s)?;
        }
        if let BoundaryCondition::Dirichlet { left, right } = self.bc {
            if !left.is_finite() || !right.is_finite() {
                return Err(invalid_param("bc", "boundary values must be finite"));
            }
        }
        if let InnerSolve::Joint {
            max_alternations: 0,
        } = self.inner
        {
            return Err(invalid_param(
                "inner",
                "joint solve needs at least one alternation",
            ));
        }
        Ok(())
    }
}

/// Envelope, potential and optional initial guess of a 1D problem.
#[derive(Debug, Clone)]
pub struct Problem1D<T> {
    pub envelope: PiecewiseLinearEnvelope<T>,
    pub table: ShrinkTable<T>,
    pub potential: PotentialV<T>,
    pub initial: Option<GridFunction1D<T>>,
}

impl<T: Scalar> Problem1D<T> {
    pub fn new(envelope: PiecewiseLinearEnvelope<T>, potential: PotentialV<T>) -> Self {
        let table = ShrinkTable::from_envelope(&envelope);
        Self {
            envelope,
            table,
            potential,
            initial: None,
        }
    }

    pub fn with_initial_guess(mut self, u0: GridFunction1D<T>) -> Self {
        self.initial = Some(u0);
        self
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub u: GridFunction1D<T>,
    pub d: GridFunction1D<T>,
    pub b: GridFunction1D<T>,
    pub energy_history: Vec<T>,
    pub constraint_history: Vec<T>,
    pub outer_iterations: usize,
    pub final_energy: T,
    pub converged: bool,
}

impl<T: Scalar> SolveReport<T> {
    /// Cell gradients `u_x` of the final iterate.
    pub fn ux(&self, grid: &Grid1D<T>) -> Vec<T> {
        grid::forward_difference(self.u.values(), grid.dx())
    }

    /// Writes `x,u,ux,d,b`, one row per node. The cell columns of row `i`
    /// refer to the cell right of node `i` and are empty on the last row.
    pub fn write_solution_csv<W: Write>(&self, grid: &Grid1D<T>, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "u", "ux", "d", "b"])?;
        let ux = self.ux(grid);
        for i in 0..grid.n_nodes() {
            let cell = |v: &[T]| v.get(i).map(|x| x.as_f64().to_string()).unwrap_or_default();
            w.write_record([
                grid.node(i).as_f64().to_string(),
                self.u.values()[i].as_f64().to_string(),
                cell(&ux),
                cell(self.d.values()),
                cell(self.b.values()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `n,energy,constraint_error`, one row per outer iteration.
    pub fn write_diagnostics_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "energy", "constraint_error"])?;
        for (n, (e, c)) in self
            .energy_history
            .iter()
            .zip(&self.constraint_history)
            .enumerate()
        {
            w.write_record([
                (n + 1).to_string(),
                e.as_f64().to_string(),
                c.as_f64().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Outer gradient-flow loop. Stops once `‖D_n - ∂ₓU_n‖² ≤ tol` or after
/// `max_outer` iterations; the latter is reported with `converged = false`.
pub fn solve<T: Scalar>(
    problem: &Problem1D<T>,
    cfg: &SolverConfig<T>,
    grid: &Grid1D<T>,
) -> Result<SolveReport<T>> {
    cfg.validate()?;
    if problem.potential.n_nodes() != grid.n_nodes() {
        return Err(RelaxError::InvalidInput(
            "potential does not match grid".into(),
        ));
    }
    let mut state = match &problem.initial {
        Some(u0) => {
            if u0.kind() != Staggering::Nodes || u0.len() != grid.n_nodes() {
                return Err(RelaxError::InvalidInput(
                    "initial guess does not match grid".into(),
                ));
            }
            let mut st = BregmanState::zeros(grid);
            st.u = u0.clone();
            st
        }
        None => BregmanState::zeros(grid),
    };
    inner::apply_dirichlet(state.u.values_mut(), &cfg.bc);

    let dx = grid.dx();
    let mut energy_history = Vec::new();
    let mut constraint_history = Vec::new();
    let mut converged = false;
    let mut u_prev = state.u.values().to_vec();
    for n in 1..=cfg.max_outer {
        inner::bregman_inner_in_place(
            &u_prev,
            &mut state,
            &problem.potential,
            &problem.table,
            cfg,
            dx,
            n,
        )?;
        let step = state
            .u
            .values()
            .iter()
            .zip(&u_prev)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
            / cfg.h;
        u_prev.copy_from_slice(state.u.values());
        let err = constraint_error(state.u.values(), state.d.values(), dx);
        energy_history.push(compute_energy(
            &state.u,
            &problem.envelope,
            &problem.potential,
            grid,
        )?);
        constraint_history.push(err);
        if err <= cfg.tol && cfg.step_tol.is_none_or(|s| step <= s) {
            converged = true;
            break;
        }
    }
    let final_energy = *energy_history.last().unwrap_or(&T::nan());
    Ok(SolveReport {
        outer_iterations: energy_history.len(),
        u: state.u,
        d: state.d,
        b: state.b,
        energy_history,
        constraint_history,
        final_energy,
        converged,
    })
}

/// Relaxed energy of a node function.
///
/// Both terms use the trapezoid rule: the envelope term on the cell values
/// `W̄(u_x)` with half weight on the two end cells, the potential on the nodes.
/// Gradients that leave the envelope domain by at most
/// [`DOMAIN_SLACK`](crate::envelope::DOMAIN_SLACK) of its width are snapped
/// back; further out the envelope is `+∞`.
pub fn compute_energy<T: Scalar>(
    u: &GridFunction1D<T>,
    envelope: &PiecewiseLinearEnvelope<T>,
    v: &PotentialV<T>,
    grid: &Grid1D<T>,
) -> Result<T> {
    compute_energy_with(
        u,
        |d| envelope.eval(envelope.snap_to_domain(d).unwrap_or(d)),
        v,
        grid,
    )
}

/// Same quadrature as [`compute_energy`] with an arbitrary integrand `w(u_x)`.
pub fn compute_energy_with<T: Scalar>(
    u: &GridFunction1D<T>,
    w: impl Fn(T) -> T,
    v: &PotentialV<T>,
    grid: &Grid1D<T>,
) -> Result<T> {
    if u.kind() != Staggering::Nodes || u.len() != grid.n_nodes() || v.n_nodes() != grid.n_nodes() {
        return Err(RelaxError::InvalidInput(
            "energy needs node values on the grid".into(),
        ));
    }
    let dx = grid.dx();
    let half = T::lit(0.5);
    let vals = u.values();
    let ux = grid::forward_difference(vals, dx);
    let last_cell = ux.len() - 1;
    let wsum: T = ux
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            if j == 0 || j == last_cell {
                half * w(d)
            } else {
                w(d)
            }
        })
        .sum();
    let n = vals.len() - 1;
    let vsum: T = vals
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == 0 || i == n {
                half * v.value(i, x)
            } else {
                v.value(i, x)
            }
        })
        .sum();
    Ok((wsum + vsum) * dx)
}
