//! Split Bregman with convexity splitting on `[-1, 1]²` for
//! `∫ (|∇u| - 1)₊ + ¼(1 - u²)²` with `u = xy` on the boundary.
//!
//! `u` lives on the `(n+1)²` nodes. On each cell `(i, j)`, `i, j < n`, the
//! vertical difference `(u_{i,j+1} - u_{i,j})/Δ` is paired with the horizontal
//! difference of the lower row `j` and, separately, of the upper row `j + 1`.
//! The discrete energy averages the two pairings. This keeps it exactly
//! invariant under `u ↦ -u(x, -y)`, which swaps them, while the interior
//! u-update keeps the single-stencil form with an averaged divergence.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid_param, RelaxError, Result};
use crate::prox::shrink2d_unchecked;
use crate::scalar::Scalar;

/// Uniform `(n+1) × (n+1)` node grid on `[-1, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid2D {
    n: usize,
}

impl Grid2D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(invalid_param("n", format!("need n >= 4, got {n}")));
        }
        Ok(Self { n })
    }

    /// Grid with spacing `delta`; `2/delta` must be an integer.
    pub fn with_spacing(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(invalid_param("delta", "must be positive"));
        }
        let r = 2.0 / delta;
        let n = r.round();
        if (r - n).abs() > 1e-6 * n.max(1.0) {
            return Err(invalid_param(
                "delta",
                format!("2/delta = {r} is not an integer"),
            ));
        }
        Self::new(n as usize)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta<T: Scalar>(&self) -> T {
        T::lit(2.0) / T::from_usize_lossy(self.n)
    }

    pub fn coord<T: Scalar>(&self, i: usize) -> T {
        if i == self.n {
            T::one()
        } else {
            -T::one() + self.delta::<T>() * T::from_usize_lossy(i)
        }
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n || j == self.n
    }
}

/// Node values, row-major in `j` (the `y` index).
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D<T> {
    pub values: Vec<T>,
}

/// Cell-based vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Scalar> Field2D<T> {
    pub fn from_fn(grid: &Grid2D, f: impl Fn(T, T) -> T) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                values.push(f(grid.coord(i), grid.coord(j)));
            }
        }
        Self { values }
    }

    pub fn at(&self, grid: &Grid2D, i: usize, j: usize) -> T {
        self.values[grid.node(i, j)]
    }

    /// Cell gradients for both pairings.
    pub fn gradient(&self, grid: &Grid2D) -> Stencils<T> {
        let n = grid.n();
        let inv = grid.delta::<T>().recip();
        let mut g = Stencils::zeros(grid);
        for j in 0..n {
            for i in 0..n {
                let c = grid.cell(i, j);
                let u = self.values[grid.node(i, j)];
                let up = self.values[grid.node(i, j + 1)];
                let dy = (up - u) * inv;
                g.lower.x[c] = (self.values[grid.node(i + 1, j)] - u) * inv;
                g.upper.x[c] = (self.values[grid.node(i + 1, j + 1)] - up) * inv;
                g.lower.y[c] = dy;
                g.upper.y[c] = dy;
            }
        }
        g
    }

    /// The reflected field `-u(x, -y)`.
    pub fn reflect(&self, grid: &Grid2D) -> Self {
        let n = grid.n();
        let mut values = self.values.clone();
        for j in 0..=n {
            for i in 0..=n {
                values[grid.node(i, j)] = -self.values[grid.node(i, n - j)];
            }
        }
        Self { values }
    }
}

impl<T: Scalar> VectorField2D<T> {
    pub fn zeros(grid: &Grid2D) -> Self {
        let m = grid.n() * grid.n();
        Self {
            x: vec![T::zero(); m],
            y: vec![T::zero(); m],
        }
    }
}

/// One vector field per pairing: `lower` uses the horizontal difference of
/// row `j`, `upper` that of row `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencils<T> {
    pub lower: VectorField2D<T>,
    pub upper: VectorField2D<T>,
}

impl<T: Scalar> Stencils<T> {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            lower: VectorField2D::zeros(grid),
            upper: VectorField2D::zeros(grid),
        }
    }

    fn fields(&self) -> [&VectorField2D<T>; 2] {
        [&self.lower, &self.upper]
    }
}

/// Boundary data `u = xy`.
pub fn boundary_value<T: Scalar>(x: T, y: T) -> T {
    x * y
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Config2D<T> {
    pub gamma: T,
    pub h: T,
    /// Convexity splitting constant of the Allen-Cahn term.
    pub a: T,
    /// Inner Bregman rounds per gradient-flow step.
    pub k_inner: usize,
    /// Gauss-Seidel sweeps per u-update.
    pub sweeps: usize,
    pub tol: T,
    pub max_iter: usize,
    /// Also require `max |U_n - U_{n-1}|/h ≤ step_tol` before stopping.
    pub step_tol: Option<T>,
}

impl<T: Scalar> Default for Config2D<T> {
    /// `h = 0.04`, `a = 2.5`, `γ = 1`, five Bregman rounds of one sweep each.
    /// With `γ = h` the constraint error decays far too slowly to reach
    /// `tol = 1e-10`; `γ ≳ 2` stalls.
    fn default() -> Self {
        Self {
            gamma: T::one(),
            h: T::lit(0.04),
            a: T::lit(2.5),
            k_inner: 5,
            sweeps: 1,
            tol: T::lit(1e-10),
            max_iter: 100_000,
            step_tol: Some(T::lit(1e-8)),
        }
    }
}

impl<T: Scalar> Config2D<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("h", self.h), ("tol", self.tol)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(invalid_param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.a >= T::zero()) {
            return Err(invalid_param("splitting_a", "must be >= 0"));
        }
        if self.k_inner == 0 || self.sweeps == 0 {
            return Err(invalid_param(
                "K",
                "need at least one inner round and one sweep",
            ));
        }
        if let Some(s) = self.step_tol {
            if !(s > T::zero()) {
                return Err(invalid_param("step_tol", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State2D<T> {
    pub u: Field2D<T>,
    pub d: Stencils<T>,
    pub b: Stencils<T>,
}

impl<T: Scalar> State2D<T> {
    /// `u = u0` in the interior, `xy` on the boundary, `d = ∇u`, `b = 0`.
    pub fn new(grid: &Grid2D, u0: &Field2D<T>) -> Result<Self> {
        let n = grid.n();
        if u0.values.len() != (n + 1) * (n + 1) {
            return Err(RelaxError::InvalidInput(
                "initial field does not match grid".into(),
            ));
        }
        let mut u = u0.clone();
        pin_boundary(grid, &mut u);
        Ok(Self {
            d: u.gradient(grid),
            b: Stencils::zeros(grid),
            u,
        })
    }
}

fn pin_boundary<T: Scalar>(grid: &Grid2D, u: &mut Field2D<T>) {
    let n = grid.n();
    for j in 0..=n {
        for i in 0..=n {
            if grid.is_boundary(i, j) {
                u.values[grid.node(i, j)] = boundary_value(grid.coord(i), grid.coord(j));
            }
        }
    }
}

/// `cfg.sweeps` lexicographic Gauss-Seidel sweeps of the u-update with the
/// previous gradient-flow iterate `u_prev`.
fn sweep_u<T: Scalar>(
    grid: &Grid2D,
    state: &mut State2D<T>,
    u_prev: &[T],
    cfg: &Config2D<T>,
    iteration: usize,
) -> Result<()> {
    let n = grid.n();
    let delta = grid.delta::<T>();
    let c = cfg.gamma * cfg.h / (delta * delta);
    let denom = T::one() + cfg.a * cfg.h + T::lit(4.0) * c;
    let one_a = T::one() + cfg.a;
    let half = T::lit(0.5);
    let (d, b) = (&state.d, &state.b);
    let r =
        |f: &VectorField2D<T>, g: &VectorField2D<T>, k: usize| (f.x[k] - g.x[k], f.y[k] - g.y[k]);
    let u = &mut state.u.values;
    for _ in 0..cfg.sweeps {
        for j in 1..n {
            for i in 1..n {
                let k = grid.node(i, j);
                let up = u_prev[k];
                let nbrs = u[k - 1] + u[k + 1] + u[k - (n + 1)] + u[k + (n + 1)];
                // lower pairing: horizontal edges of row j live in cells (., j)
                let (lx_w, _) = r(&d.lower, &b.lower, grid.cell(i - 1, j));
                let (lx_e, ly_n) = r(&d.lower, &b.lower, grid.cell(i, j));
                let (_, ly_s) = r(&d.lower, &b.lower, grid.cell(i, j - 1));
                // upper pairing: horizontal edges of row j live in cells (., j - 1)
                let (ux_w, _) = r(&d.upper, &b.upper, grid.cell(i - 1, j - 1));
                let (ux_e, uy_s) = r(&d.upper, &b.upper, grid.cell(i, j - 1));
                let (_, uy_n) = r(&d.upper, &b.upper, grid.cell(i, j));
                let div = half * ((lx_w - lx_e + ly_s - ly_n) + (ux_w - ux_e + uy_s - uy_n));
                let val =
                    (up + cfg.h * (one_a * up - up * up * up) + c * (nbrs + delta * div)) / denom;
                if !val.is_finite() {
                    return Err(RelaxError::Divergence {
                        what: "u",
                        index: k,
                        iteration,
                    });
                }
                u[k] = val;
            }
        }
    }
    Ok(())
}

/// One u-update from the current state, which also serves as the previous
/// gradient-flow iterate.
pub fn update_u_2d<T: Scalar>(
    grid: &Grid2D,
    state: &State2D<T>,
    cfg: &Config2D<T>,
) -> Result<Field2D<T>> {
    cfg.validate()?;
    let mut next = state.clone();
    let prev = state.u.values.clone();
    sweep_u(grid, &mut next, &prev, cfg, 0)?;
    Ok(next.u)
}

/// `d = shrink2d(∇u + b)` on every cell of both pairings.
pub fn update_d_2d<T: Scalar>(grid: &Grid2D, state: &State2D<T>, cfg: &Config2D<T>) -> Stencils<T> {
    let g = state.u.gradient(grid);
    let mut d = Stencils::zeros(grid);
    for (out, (gf, bf)) in [&mut d.lower, &mut d.upper]
        .into_iter()
        .zip(g.fields().into_iter().zip(state.b.fields()))
    {
        for c in 0..gf.x.len() {
            let (dx, dy) = shrink2d_unchecked(gf.x[c] + bf.x[c], gf.y[c] + bf.y[c], cfg.gamma);
            out.x[c] = dx;
            out.y[c] = dy;
        }
    }
    d
}

/// `b + (∇u - d)` on both pairings.
pub fn update_b_2d<T: Scalar>(grid: &Grid2D, state: &State2D<T>) -> Stencils<T> {
    let g = state.u.gradient(grid);
    let mut b = state.b.clone();
    for (out, (gf, df)) in [&mut b.lower, &mut b.upper]
        .into_iter()
        .zip(g.fields().into_iter().zip(state.d.fields()))
    {
        for c in 0..gf.x.len() {
            out.x[c] = out.x[c] + gf.x[c] - df.x[c];
            out.y[c] = out.y[c] + gf.y[c] - df.y[c];
        }
    }
    b
}

/// Fused d- and b-updates over both pairings; returns the constraint error
/// `Σ |∇u - d|²` of the result and the energy of `u`.
fn shrink_and_add_back<T: Scalar>(grid: &Grid2D, state: &mut State2D<T>, gamma: T) -> (T, T) {
    let n = grid.n();
    let delta = grid.delta::<T>();
    let inv = delta.recip();
    let quarter = T::lit(0.25);
    let u = &state.u.values;
    let mut err = T::zero();
    let mut energy = T::zero();
    for j in 0..n {
        for i in 0..n {
            let c = grid.cell(i, j);
            let k = grid.node(i, j);
            let ku = grid.node(i, j + 1);
            let gy = (u[ku] - u[k]) * inv;
            let lower_x = (u[k + 1] - u[k]) * inv;
            let upper_x = (u[ku + 1] - u[ku]) * inv;
            energy = energy
                + quarter * (T::one() - u[k] * u[k]).powi(2)
                + quarter * (T::one() - u[ku] * u[ku]).powi(2);
            for (gx, d, b) in [
                (lower_x, &mut state.d.lower, &mut state.b.lower),
                (upper_x, &mut state.d.upper, &mut state.b.upper),
            ] {
                let (dx, dy) = shrink2d_unchecked(gx + b.x[c], gy + b.y[c], gamma);
                d.x[c] = dx;
                d.y[c] = dy;
                let (rx, ry) = (gx - dx, gy - dy);
                b.x[c] = b.x[c] + rx;
                b.y[c] = b.y[c] + ry;
                err = err + rx * rx + ry * ry;
                energy = energy + ((gx * gx + gy * gy).sqrt() - T::one()).max(T::zero());
            }
        }
    }
    (err, energy * delta * delta * T::lit(0.5))
}

/// `Σ |∇u - d|²` over all cells of both pairings, unweighted.
pub fn constraint_error_2d<T: Scalar>(grid: &Grid2D, u: &Field2D<T>, d: &Stencils<T>) -> T {
    let g = u.gradient(grid);
    g.fields()
        .into_iter()
        .zip(d.fields())
        .map(|(gf, df)| {
            (0..gf.x.len())
                .map(|c| (gf.x[c] - df.x[c]).powi(2) + (gf.y[c] - df.y[c]).powi(2))
                .sum::<T>()
        })
        .sum()
}

/// `Σ_cells ½Σ_pairings [(|∇u| - 1)₊ + ¼(1 - u²)²] Δ²`, the potential taken at
/// the lower node for the lower pairing and the upper node for the upper one.
pub fn energy_2d<T: Scalar>(grid: &Grid2D, u: &Field2D<T>) -> T {
    let n = grid.n();
    let delta = grid.delta::<T>();
    let g = u.gradient(grid);
    let quarter = T::lit(0.25);
    let well = |v: T| quarter * (T::one() - v * v).powi(2);
    let mut acc = T::zero();
    for j in 0..n {
        for i in 0..n {
            let c = grid.cell(i, j);
            let lo = g.lower.x[c].hypot(g.lower.y[c]);
            let hi = g.upper.x[c].hypot(g.upper.y[c]);
            acc = acc
                + (lo - T::one()).max(T::zero())
                + (hi - T::one()).max(T::zero())
                + well(u.values[grid.node(i, j)])
                + well(u.values[grid.node(i, j + 1)]);
        }
    }
    acc * delta * delta * T::lit(0.5)
}

#[derive(Debug, Clone)]
pub struct Report2D<T> {
    pub u: Field2D<T>,
    pub d: Stencils<T>,
    pub b: Stencils<T>,
    pub energy_history: Vec<T>,
    pub constraint_history: Vec<T>,
    pub iterations: usize,
    pub final_energy: T,
    pub converged: bool,
}

/// Iterates gradient-flow steps until the constraint error drops below
/// `cfg.tol` (and the step is stationary when `step_tol` is set).
pub fn solve_2d<T: Scalar>(
    grid: &Grid2D,
    u0: &Field2D<T>,
    cfg: &Config2D<T>,
) -> Result<Report2D<T>> {
    cfg.validate()?;
    let mut state = State2D::new(grid, u0)?;
    let mut energy_history = Vec::new();
    let mut constraint_history = Vec::new();
    let mut converged = false;
    let mut prev = state.u.values.clone();
    for it in 1..=cfg.max_iter {
        let (mut err, mut energy) = (T::zero(), T::zero());
        for _ in 0..cfg.k_inner {
            sweep_u(grid, &mut state, &prev, cfg, it)?;
            (err, energy) = shrink_and_add_back(grid, &mut state, cfg.gamma);
        }
        let step = state
            .u
            .values
            .iter()
            .zip(&prev)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
            / cfg.h;
        prev.copy_from_slice(&state.u.values);
        energy_history.push(energy);
        constraint_history.push(err);
        if err <= cfg.tol && cfg.step_tol.is_none_or(|s| step <= s) {
            converged = true;
            break;
        }
    }
    Ok(Report2D {
        iterations: energy_history.len(),
        final_energy: *energy_history.last().unwrap_or(&T::nan()),
        u: state.u,
        d: state.d,
        b: state.b,
        energy_history,
        constraint_history,
        converged,
    })
}

/// `xy + s ε (1 - x²)(1 - y²)`; the sign `s` selects the basin.
pub fn bump_initial<T: Scalar>(grid: &Grid2D, sign: T, eps: T) -> Field2D<T> {
    Field2D::from_fn(grid, |x, y| {
        x * y + sign * eps * (T::one() - x * x) * (T::one() - y * y)
    })
}

#[derive(Serialize)]
struct GridJson {
    n: usize,
    delta: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    /// `u[j][i]` at `(x[i], y[j])`.
    u: Vec<Vec<f64>>,
}

impl<T: Scalar> Field2D<T> {
    /// Writes `x,y,u`, one row per node.
    pub fn write_csv<W: Write>(&self, grid: &Grid2D, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "u"])?;
        let n = grid.n();
        for j in 0..=n {
            for i in 0..=n {
                w.write_record([
                    grid.coord::<T>(i).as_f64().to_string(),
                    grid.coord::<T>(j).as_f64().to_string(),
                    self.at(grid, i, j).as_f64().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Contour-ready JSON: axes plus a row-per-`y` matrix.
    pub fn write_grid_json<W: Write>(&self, grid: &Grid2D, out: W) -> Result<()> {
        let n = grid.n();
        let axis: Vec<f64> = (0..=n).map(|i| grid.coord::<T>(i).as_f64()).collect();
        let g = GridJson {
            n,
            delta: grid.delta::<T>().as_f64(),
            x: axis.clone(),
            y: axis,
            u: (0..=n)
                .map(|j| (0..=n).map(|i| self.at(grid, i, j).as_f64()).collect())
                .collect(),
        };
        serde_json::to_writer(out, &g)?;
        Ok(())
    }
}
