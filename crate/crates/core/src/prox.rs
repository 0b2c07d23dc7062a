//! Proximal maps of the envelope term.
//!
//! `shrink1d` is the prox of a convex piecewise-linear function, a
//! translation `z - s/γ` on each segment with plateaus at the kinks.
//! `shrink2d` is the prox of `(|d| - 1)_+` in the plane.

use crate::envelope::PiecewiseLinearEnvelope;
use crate::error::{invalid_param, Result};
use crate::scalar::Scalar;

/// Kinks and slopes of `∂W̄`, copied from an envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkTable<T> {
    kinks: Vec<T>,
    /// `slopes[0] = s_-`, `slopes[1..=M]` the segment slopes, `slopes[M+1] = s_+`.
    slopes: Vec<T>,
}

impl<T: Scalar> ShrinkTable<T> {
    pub fn from_envelope(env: &PiecewiseLinearEnvelope<T>) -> Self {
        let mut slopes = Vec::with_capacity(env.slopes().len() + 2);
        slopes.push(env.left_slope());
        slopes.extend_from_slice(env.slopes());
        slopes.push(env.right_slope());
        Self {
            kinks: env.breakpoints().to_vec(),
            slopes,
        }
    }

    pub fn kinks(&self) -> &[T] {
        &self.kinks
    }

    /// Subdifferential `[s_i, s_{i+1}]` of the envelope at kink `i`.
    pub fn subdifferential(&self, i: usize) -> (T, T) {
        (self.slopes[i], self.slopes[i + 1])
    }

    /// Minimizer of `W̄(d) + (γ/2)(d - z)²`. `gamma` must be positive; the
    /// checked entry point is [`shrink1d`].
    #[inline]
    pub fn shrink(&self, z: T, gamma: T) -> T {
        let inv = gamma.recip();
        // plateau i covers z ∈ [d_i + s_i/γ, d_i + s_{i+1}/γ]; the lower ends
        // are strictly increasing in i.
        let lower = |i: usize| self.kinks[i] + self.slopes[i] * inv;
        let m = self.kinks.len();
        let (mut lo, mut hi) = (0usize, m);
        // find the number of plateaus whose lower end is <= z
        while lo < hi {
            let mid = (lo + hi) / 2;
            if lower(mid) <= z {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == 0 {
            // left of the first plateau; only reachable with finite s_-
            return z - self.slopes[0] * inv;
        }
        let i = lo - 1;
        let upper = self.kinks[i] + self.slopes[i + 1] * inv;
        if z <= upper {
            self.kinks[i]
        } else {
            z - self.slopes[i + 1] * inv
        }
    }
}

/// Checked 1D piecewise shrink.
pub fn shrink1d<T: Scalar>(table: &ShrinkTable<T>, z: T, gamma: T) -> Result<T> {
    check_gamma(gamma)?;
    Ok(table.shrink(z, gamma))
}

/// Prox of `(√(dx²+dy²) - 1)_+` with weight `γ/2` on the quadratic.
pub fn shrink2d<T: Scalar>(nu_x: T, nu_y: T, gamma: T) -> Result<(T, T)> {
    check_gamma(gamma)?;
    Ok(shrink2d_unchecked(nu_x, nu_y, gamma))
}

#[inline]
pub(crate) fn shrink2d_unchecked<T: Scalar>(nu_x: T, nu_y: T, gamma: T) -> (T, T) {
    let rho = (nu_x * nu_x + nu_y * nu_y).sqrt();
    if rho <= T::lit(1e-300) {
        return (T::zero(), T::zero());
    }
    let scale = (T::one() - (gamma * rho).recip()).max(T::one().min(rho.recip()));
    (scale * nu_x, scale * nu_y)
}

fn check_gamma<T: Scalar>(gamma: T) -> Result<()> {
    if gamma > T::zero() && gamma.is_finite() {
        Ok(())
    } else {
        Err(invalid_param(
            "gamma",
            format!("must be positive, got {gamma}"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{build_envelope, SampledFunction};

    fn double_well_table() -> (PiecewiseLinearEnvelope<f64>, ShrinkTable<f64>) {
        let f = SampledFunction::tabulate(|d: f64| (d * d - 1.0).powi(2), -2.0, 2.0, 4096).unwrap();
        let env = build_envelope(&f).unwrap();
        let t = ShrinkTable::from_envelope(&env);
        (env, t)
    }

    fn grid_argmin(obj: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n)
            .map(|k| lo + k as f64 * step)
            .min_by(|a, b| obj(*a).partial_cmp(&obj(*b)).unwrap())
            .unwrap()
    }

    #[test]
    fn flat_segment_returns_z() {
        let (_, t) = double_well_table();
        assert!((shrink1d(&t, 0.3, 1.0).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn clamps_below_domain_with_infinite_left_slope() {
        let f = SampledFunction::tabulate(|d: f64| (d * d - 1.0).powi(2), 0.0, 3.0, 4096).unwrap();
        let t = ShrinkTable::from_envelope(&build_envelope(&f).unwrap());
        // the plateau at d = 0 reaches up to s_1/γ with s_1 ≈ -1.09
        for gamma in [10.0, 100.0, 1e4] {
            assert_eq!(shrink1d(&t, -0.5, gamma).unwrap(), 0.0);
        }
        // weak coupling moves the prox toward the minimum of the envelope
        let env = build_envelope(&f).unwrap();
        let obj = |d: f64| env.eval(d) + 0.5 * (d + 0.5).powi(2);
        let bf = grid_argmin(obj, 0.0, 1.5, 1e-6);
        assert!((shrink1d(&t, -0.5, 1.0).unwrap() - bf).abs() < 1e-5);
    }

    #[test]
    fn matches_grid_brute_force_near_well() {
        let (env, t) = double_well_table();
        let z = 1.05;
        let obj = |d: f64| env.eval(d) + 0.5 * (d - z).powi(2);
        let bf = grid_argmin(obj, 0.9, 1.2, 1e-6);
        let s = shrink1d(&t, z, 1.0).unwrap();
        assert!((s - bf).abs() < 1e-6, "{s} vs {bf}");
    }

    #[test]
    fn kink_plateau_uses_closed_interval() {
        let env = PiecewiseLinearEnvelope::from_parts(
            vec![-1.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0],
            f64::NEG_INFINITY,
            f64::INFINITY,
        )
        .unwrap();
        let t = ShrinkTable::from_envelope(&env);
        let gamma = 2.0;
        // plateau at kink 0 is [0 - 1/2, 0 + 1/2]
        assert_eq!(t.shrink(-0.5, gamma), 0.0);
        assert_eq!(t.shrink(0.5, gamma), 0.0);
        assert!((t.shrink(0.75, gamma) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn finite_end_slopes_extrapolate() {
        let env =
            PiecewiseLinearEnvelope::<f64>::from_parts(vec![0.0, 1.0], vec![0.0, 0.0], -1.0, 1.0)
                .unwrap();
        let t = ShrinkTable::from_envelope(&env);
        assert!((t.shrink(-3.0, 1.0) - (-2.0)).abs() < 1e-15);
        assert!((t.shrink(3.0, 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(t.shrink(-0.5, 1.0), 0.0);
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        let (_, t) = double_well_table();
        assert!(shrink1d(&t, 0.0, 0.0).is_err());
        assert!(shrink1d(&t, 0.0, -1.0).is_err());
        assert!(shrink2d(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn shrink2d_cases() {
        assert_eq!(shrink2d(0.3, 0.4, 1.0).unwrap(), (0.3, 0.4));
        assert_eq!(shrink2d(0.0, 0.0, 1.0).unwrap(), (0.0, 0.0));
        let (dx, dy) = shrink2d(3.0, 4.0, 1.0).unwrap();
        let obj = |x: f64, y: f64| {
            (x.hypot(y) - 1.0).max(0.0) + 0.5 * ((x - 3.0).powi(2) + (y - 4.0).powi(2))
        };
        // coarse-to-fine grid search
        let (mut bx, mut by) = (0.0, 0.0);
        let (mut cx, mut cy, mut half) = (3.0, 4.0, 2.0);
        for _ in 0..6 {
            let n = 200;
            let mut best = f64::INFINITY;
            for i in 0..=n {
                for j in 0..=n {
                    let x = cx - half + 2.0 * half * i as f64 / n as f64;
                    let y = cy - half + 2.0 * half * j as f64 / n as f64;
                    let v = obj(x, y);
                    if v < best {
                        best = v;
                        bx = x;
                        by = y;
                    }
                }
            }
            cx = bx;
            cy = by;
            half *= 0.05;
        }
        assert!(
            (dx - bx).abs() < 1e-6 && (dy - by).abs() < 1e-6,
            "({dx},{dy}) vs ({bx},{by})"
        );
        assert!(obj(dx, dy) <= obj(bx, by) + 1e-12);
    }
}
