use crate::error::{invalid_param, Result};
use crate::scalar::Scalar;

use super::grid::Grid1D;

/// Shape of the lower-order term `V(x, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialForm {
    /// `V ≡ 0`.
    Zero,
    /// `(u - g(x))²`, convex; never split.
    QuadraticTracking,
    /// `(u² - 1)²`, split as `2a u² + (u⁴ - 2(1+a)u² + 1)`.
    DoubleWell,
    /// `(u² - g(x))²`, split as `2a u² + (u⁴ - 2(g+a)u² + g²)`.
    TrackingWell,
}

/// Lower-order potential tabulated on the nodes of a grid, together with its
/// convexity splitting `V = V₊ + V₋`. `V₊` is always a quadratic in `u`, so the
/// implicit part of each gradient-flow step stays linear.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialV<T> {
    form: PotentialForm,
    g: Vec<T>,
    a: T,
}

impl<T: Scalar> PotentialV<T> {
    pub fn zero(grid: &Grid1D<T>) -> Self {
        Self {
            form: PotentialForm::Zero,
            g: vec![T::zero(); grid.n_nodes()],
            a: T::zero(),
        }
    }

    pub fn quadratic_tracking(grid: &Grid1D<T>, g: impl Fn(T) -> T) -> Result<Self> {
        Self::build(PotentialForm::QuadraticTracking, grid, g, T::zero())
    }

    pub fn double_well(grid: &Grid1D<T>, a: T) -> Result<Self> {
        Self::build(PotentialForm::DoubleWell, grid, |_| T::one(), a)
    }

    pub fn tracking_well(grid: &Grid1D<T>, g: impl Fn(T) -> T, a: T) -> Result<Self> {
        Self::build(PotentialForm::TrackingWell, grid, g, a)
    }

    fn check_splitting(form: PotentialForm, a: T) -> Result<()> {
        if !(a >= T::zero()) || !a.is_finite() {
            return Err(invalid_param(
                "splitting_a",
                format!("must be >= 0, got {a}"),
            ));
        }
        if matches!(
            form,
            PotentialForm::DoubleWell | PotentialForm::TrackingWell
        ) && !(a > T::zero())
        {
            return Err(invalid_param(
                "splitting_a",
                "well potentials are nonconvex in u and need a > 0",
            ));
        }
        Ok(())
    }

    fn build(form: PotentialForm, grid: &Grid1D<T>, g: impl Fn(T) -> T, a: T) -> Result<Self> {
        Self::check_splitting(form, a)?;
        let g: Vec<T> = grid.nodes().into_iter().map(g).collect();
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(invalid_param("g", format!("non-finite at node {i}")));
        }
        Ok(Self { form, g, a })
    }

    /// Same potential with a different splitting constant.
    pub fn with_splitting(&self, a: T) -> Result<Self> {
        Self::check_splitting(self.form, a)?;
        Ok(Self {
            form: self.form,
            g: self.g.clone(),
            a,
        })
    }

    pub fn form(&self) -> PotentialForm {
        self.form
    }

    pub fn splitting(&self) -> T {
        self.a
    }

    pub fn g(&self) -> &[T] {
        &self.g
    }

    pub fn n_nodes(&self) -> usize {
        self.g.len()
    }

    /// `V(x_i, u)`.
    #[inline]
    pub fn value(&self, i: usize, u: T) -> T {
        match self.form {
            PotentialForm::Zero => T::zero(),
            PotentialForm::QuadraticTracking => (u - self.g[i]).powi(2),
            PotentialForm::DoubleWell | PotentialForm::TrackingWell => (u * u - self.g[i]).powi(2),
        }
    }

    /// `∂V/∂u (x_i, u)`.
    #[inline]
    pub fn derivative(&self, i: usize, u: T) -> T {
        match self.form {
            PotentialForm::Zero => T::zero(),
            PotentialForm::QuadraticTracking => T::lit(2.0) * (u - self.g[i]),
            PotentialForm::DoubleWell | PotentialForm::TrackingWell => {
                T::lit(4.0) * u * (u * u - self.g[i])
            }
        }
    }

    /// Coefficient `c` of the implicit part: `∂V₊/∂u = c·u - r`.
    #[inline]
    pub fn implicit_coefficient(&self) -> T {
        match self.form {
            PotentialForm::Zero => T::zero(),
            PotentialForm::QuadraticTracking => T::lit(2.0),
            PotentialForm::DoubleWell | PotentialForm::TrackingWell => T::lit(4.0) * self.a,
        }
    }

    /// Right-hand side contributed at node `i` when the previous step is `u_prev`:
    /// `r - ∂V₋/∂u(u_prev)`.
    #[inline]
    pub fn explicit_rhs(&self, i: usize, u_prev: T) -> T {
        match self.form {
            PotentialForm::Zero => T::zero(),
            PotentialForm::QuadraticTracking => T::lit(2.0) * self.g[i],
            PotentialForm::DoubleWell | PotentialForm::TrackingWell => {
                let four = T::lit(4.0);
                four * (self.g[i] + self.a) * u_prev - four * u_prev.powi(3)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resplitting_keeps_the_potential() {
        let grid = Grid1D::new(-1.0, 1.0, 4).unwrap();
        let v = PotentialV::tracking_well(&grid, |x: f64| 0.5 + 0.25 * x, 4.1).unwrap();
        let w = v.with_splitting(2.0).unwrap();
        assert_eq!(w.g(), v.g());
        assert_eq!(w.splitting(), 2.0);
        assert_eq!(w.value(3, 0.7), v.value(3, 0.7));
        assert!(v.with_splitting(0.0).is_err());
    }

    #[test]
    fn splitting_reassembles_the_derivative() {
        let grid = Grid1D::new(-1.0, 1.0, 8).unwrap();
        let v = PotentialV::tracking_well(&grid, |x: f64| 0.5 + 0.25 * x, 4.1).unwrap();
        for i in 0..grid.n_nodes() {
            for &u in &[-1.3, -0.2, 0.0, 0.7, 1.9] {
                // V'(u) = c u - (explicit rhs at u)
                let split = v.implicit_coefficient() * u - v.explicit_rhs(i, u);
                assert!((split - v.derivative(i, u)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn well_requires_positive_splitting() {
        let grid = Grid1D::new(-1.0, 1.0, 8).unwrap();
        assert!(PotentialV::double_well(&grid, 0.0).is_err());
        assert!(PotentialV::double_well(&grid, -1.0).is_err());
        assert!(PotentialV::quadratic_tracking(&grid, |_| f64::NAN).is_err());
    }
}
