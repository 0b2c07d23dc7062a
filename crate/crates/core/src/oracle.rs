//! Semi-analytic minimizers from the control Hamiltonian.
//!
//! On smooth pieces the optimal `(u, v = u')` follows a planar ODE whose
//! Hamiltonian is conserved. The two hard-coded systems below are the
//! one-sided well with `V = u²` and the double well with `V = (u²-1)²`;
//! shooting on their level sets gives the switching point `x*` and the
//! energy of the relaxed minimizer.

use std::io::Write;

use crate::error::{RelaxError, Result};
use crate::scalar::Scalar;

/// Denominators below this magnitude abort the integration.
pub const SINGULAR_DENOMINATOR: f64 = 1e-10;
/// RK4 steps per unit length.
pub const STEPS_PER_UNIT: usize = 10_000;
/// Bisection tolerance for switching points and events.
pub const SHOOTING_TOL: f64 = 1e-10;

/// Planar system `u' = v`, `v' = N(u, v) / D(u, v)` with conserved `H`.
#[derive(Clone, Copy)]
pub struct HamiltonianSystem<T> {
    pub name: &'static str,
    /// `(N, D)`; the right-hand side is `(v, N/D)`.
    pub vector_field: fn(T, T) -> (T, T),
    pub hamiltonian: fn(T, T) -> T,
    /// Running cost `W̄(v) + V(u)` on the trajectory.
    pub lagrangian: fn(T, T) -> T,
}

impl<T> std::fmt::Debug for HamiltonianSystem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianSystem")
            .field("name", &self.name)
            .finish()
    }
}

impl<T: Scalar> HamiltonianSystem<T> {
    fn rhs(&self, x: T, u: T, v: T) -> Result<(T, T)> {
        let (num, den) = (self.vector_field)(u, v);
        if !(den.abs() >= T::lit(SINGULAR_DENOMINATOR)) {
            return Err(RelaxError::OdeSingularity {
                x: x.as_f64(),
                denominator: den.as_f64(),
            });
        }
        Ok((v, num / den))
    }

    fn rk4_step(&self, x: T, u: T, v: T, s: T) -> Result<(T, T)> {
        let half = T::lit(0.5);
        let (k1u, k1v) = self.rhs(x, u, v)?;
        let (k2u, k2v) = self.rhs(x + half * s, u + half * s * k1u, v + half * s * k1v)?;
        let (k3u, k3v) = self.rhs(x + half * s, u + half * s * k2u, v + half * s * k2v)?;
        let (k4u, k4v) = self.rhs(x + s, u + s * k3u, v + s * k3v)?;
        let sixth = s / T::lit(6.0);
        let two = T::lit(2.0);
        Ok((
            u + sixth * (k1u + two * k2u + two * k3u + k4u),
            v + sixth * (k1v + two * k2v + two * k3v + k4v),
        ))
    }
}

/// `u' = v`, `v' = u/(6v² - 2)`; valid for `v ≥ √(2/3)`.
pub fn example1_system<T: Scalar>() -> HamiltonianSystem<T> {
    HamiltonianSystem {
        name: "example1",
        vector_field: |u, v| (u, T::lit(6.0) * v * v - T::lit(2.0)),
        hamiltonian: |u, v| {
            if v * v >= T::lit(2.0 / 3.0) {
                T::lit(3.0) * v.powi(4) - T::lit(2.0) * v * v - T::one() - u * u
            } else {
                -(T::one() + u * u)
            }
        },
        lagrangian: |u, v| (v * v - T::one()).powi(2) + u * u,
    }
}

/// `u' = v`, `v' = u(u² - 1)/(3v² - 1)`; valid for `|v| ≥ 1`.
pub fn example2_system<T: Scalar>() -> HamiltonianSystem<T> {
    HamiltonianSystem {
        name: "example2",
        vector_field: |u, v| (u * (u * u - T::one()), T::lit(3.0) * v * v - T::one()),
        hamiltonian: |u, v| {
            let w = (u * u - T::one()).powi(2);
            if v.abs() >= T::one() {
                (v * v - T::one()) * (T::lit(3.0) * v * v + T::one()) - w
            } else {
                -w
            }
        },
        lagrangian: |u, v| (v * v - T::one()).powi(2) + (u * u - T::one()).powi(2),
    }
}

/// Samples `(x, u, v)` of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub x: Vec<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(x: Vec<T>, u: Vec<T>, v: Vec<T>) -> Result<Self> {
        if x.len() != u.len() || x.len() != v.len() || x.is_empty() {
            return Err(RelaxError::InvalidInput(
                "trajectory columns differ in length".into(),
            ));
        }
        Ok(Self { x, u, v })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn last(&self) -> (T, T, T) {
        let n = self.len() - 1;
        (self.x[n], self.u[n], self.v[n])
    }

    /// Writes `x,u,v,H`.
    pub fn write_csv<W: Write>(&self, sys: &HamiltonianSystem<T>, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "u", "v", "H"])?;
        for i in 0..self.len() {
            w.write_record([
                self.x[i].as_f64().to_string(),
                self.u[i].as_f64().to_string(),
                self.v[i].as_f64().to_string(),
                (sys.hamiltonian)(self.u[i], self.v[i]).as_f64().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Classical RK4 with `n_steps` equal steps from `x0` to `x1`.
pub fn integrate<T: Scalar>(
    sys: &HamiltonianSystem<T>,
    u0: T,
    v0: T,
    x0: T,
    x1: T,
    n_steps: usize,
) -> Result<Trajectory<T>> {
    if n_steps == 0 {
        return Err(RelaxError::InvalidInput("need at least one step".into()));
    }
    let s = (x1 - x0) / T::from_usize_lossy(n_steps);
    let mut traj = Trajectory {
        x: Vec::with_capacity(n_steps + 1),
        u: Vec::with_capacity(n_steps + 1),
        v: Vec::with_capacity(n_steps + 1),
    };
    let (mut u, mut v) = (u0, v0);
    traj.x.push(x0);
    traj.u.push(u);
    traj.v.push(v);
    for k in 0..n_steps {
        let x = x0 + s * T::from_usize_lossy(k);
        (u, v) = sys.rk4_step(x, u, v, s)?;
        traj.x.push(if k + 1 == n_steps { x1 } else { x + s });
        traj.u.push(u);
        traj.v.push(v);
    }
    Ok(traj)
}

/// `max_i |H(u_i, v_i) - H(u_0, v_0)|`.
pub fn hamiltonian_check<T: Scalar>(sys: &HamiltonianSystem<T>, traj: &Trajectory<T>) -> T {
    let h0 = (sys.hamiltonian)(traj.u[0], traj.v[0]);
    traj.u.iter().zip(&traj.v).fold(T::zero(), |m, (&u, &v)| {
        m.max(((sys.hamiltonian)(u, v) - h0).abs())
    })
}

#[derive(Debug, Clone)]
pub struct ShootingResult<T> {
    pub x_star: T,
    /// The smooth arc, in the original `x` coordinate.
    pub trajectory: Trajectory<T>,
    pub energy: T,
    pub hamiltonian_drift: T,
    /// Value of `H` at the start of the arc.
    pub level: T,
}

fn steps_for(length: f64) -> usize {
    // even, for Simpson's rule
    let n = (length * STEPS_PER_UNIT as f64).ceil() as usize;
    (n + n % 2).max(2)
}

/// Composite Simpson on a uniform trajectory with an even number of steps.
fn simpson<T: Scalar>(traj: &Trajectory<T>, f: impl Fn(T, T) -> T) -> T {
    let n = traj.len() - 1;
    let s = (traj.x[n] - traj.x[0]) / T::from_usize_lossy(n);
    let mut acc = f(traj.u[0], traj.v[0]) + f(traj.u[n], traj.v[n]);
    for i in 1..n {
        let w = if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        acc = acc + w * f(traj.u[i], traj.v[i]);
    }
    acc * s / T::lit(3.0)
}

/// One-sided well: `u = 0` on `[0, x*]`, then the arc from
/// `(u, v) = (0, √(2/3))` at `x*` with `u(1) = 1/2`.
pub fn shoot_example1<T: Scalar>() -> Result<ShootingResult<T>> {
    let sys = example1_system::<T>();
    let v0 = T::lit(2.0 / 3.0).sqrt();
    let end_value = |xs: f64| -> Result<T> {
        let traj = integrate(
            &sys,
            T::zero(),
            v0,
            T::lit(xs),
            T::one(),
            steps_for(1.0 - xs),
        )?;
        Ok(traj.last().1 - T::lit(0.5))
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0 - 1e-6);
    let (flo, fhi) = (end_value(lo)?, end_value(hi)?);
    if !(flo > T::zero() && fhi < T::zero()) {
        return Err(RelaxError::Shooting(format!(
            "u(1) - 1/2 does not change sign on [0, 1): {flo}, {fhi}"
        )));
    }
    while hi - lo > SHOOTING_TOL {
        let mid = 0.5 * (lo + hi);
        if end_value(mid)? > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xs = 0.5 * (lo + hi);
    let trajectory = integrate(
        &sys,
        T::zero(),
        v0,
        T::lit(xs),
        T::one(),
        steps_for(1.0 - xs),
    )?;
    // W̄(0) = 1 and V(0) = 0 on the flat part
    let energy = T::lit(xs) + simpson(&trajectory, sys.lagrangian);
    Ok(ShootingResult {
        x_star: T::lit(xs),
        hamiltonian_drift: hamiltonian_check(&sys, &trajectory),
        level: (sys.hamiltonian)(T::zero(), v0),
        energy,
        trajectory,
    })
}

/// Double well: `u = 1` on `(x*, -x*)` and mirror-symmetric arcs outside.
/// The right arc starts at `(u, v) = (1, -1)` and ends where `u = 0`, at
/// `x = 1`; its length `L` gives `x* = L - 1`.
pub fn shoot_example2<T: Scalar>() -> Result<ShootingResult<T>> {
    let sys = example2_system::<T>();
    let budget = 2.0;
    let s = T::lit(1.0 / STEPS_PER_UNIT as f64);
    let (mut u, mut v) = (T::one(), -T::one());
    let mut x = T::zero();
    let mut length = None;
    for _ in 0..(budget * STEPS_PER_UNIT as f64) as usize {
        let (un, vn) = sys.rk4_step(x, u, v, s)?;
        if un <= T::zero() {
            // bisection on the length of the final step
            let (mut a, mut b) = (T::zero(), s);
            while (b - a).as_f64() > SHOOTING_TOL * 1e-3 {
                let m = (a + b) * T::lit(0.5);
                if sys.rk4_step(x, u, v, m)?.0 > T::zero() {
                    a = m;
                } else {
                    b = m;
                }
            }
            length = Some(x + (a + b) * T::lit(0.5));
            break;
        }
        (u, v) = (un, vn);
        x = x + s;
    }
    let length =
        length.ok_or_else(|| RelaxError::Shooting("u never reached 0 within x-budget 2".into()))?;
    let x_star = length - T::one();
    // re-integrate on a uniform grid ending at the event, in original x
    let trajectory = integrate(
        &sys,
        T::one(),
        -T::one(),
        -x_star,
        T::one(),
        steps_for(length.as_f64()),
    )?;
    let energy = T::lit(2.0) * simpson(&trajectory, sys.lagrangian);
    Ok(ShootingResult {
        x_star,
        hamiltonian_drift: hamiltonian_check(&sys, &trajectory),
        level: (sys.hamiltonian)(T::one(), -T::one()),
        energy,
        trajectory,
    })
}

/// Samples the assembled minimizer `ū` at `x`.
pub fn assembled_example1<T: Scalar>(res: &ShootingResult<T>, x: T) -> T {
    if x <= res.x_star {
        T::zero()
    } else {
        interpolate(&res.trajectory, x)
    }
}

/// Samples the assembled, even minimizer `ū` at `x ∈ [-1, 1]`.
pub fn assembled_example2<T: Scalar>(res: &ShootingResult<T>, x: T) -> T {
    let y = x.abs();
    if y < -res.x_star {
        T::one()
    } else {
        interpolate(&res.trajectory, y)
    }
}

fn interpolate<T: Scalar>(traj: &Trajectory<T>, x: T) -> T {
    let k = traj.x.partition_point(|&t| t <= x).clamp(1, traj.len() - 1);
    let (x0, x1) = (traj.x[k - 1], traj.x[k]);
    let t = ((x - x0) / (x1 - x0)).max(T::zero()).min(T::one());
    traj.u[k - 1] + t * (traj.u[k] - traj.u[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_system() -> HamiltonianSystem<f64> {
        HamiltonianSystem {
            name: "linear",
            vector_field: |_, _| (0.0, 1.0),
            hamiltonian: |_, v| v,
            lagrangian: |_, _| 0.0,
        }
    }

    #[test]
    fn linear_flow_is_exact() {
        let t = integrate(&linear_system(), 0.0, 1.0, 0.0, 1.0, 7).unwrap();
        assert_eq!(t.len(), 8);
        assert!((t.last().1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_denominator_is_reported() {
        // v = 1/√3 makes 3v² - 1 vanish
        let sys = example2_system::<f64>();
        let err = integrate(&sys, 0.5, 1.0 / 3f64.sqrt(), 0.0, 0.1, 10).unwrap_err();
        assert!(matches!(err, RelaxError::OdeSingularity { .. }));
    }

    #[test]
    fn example1_reaches_half_at_published_switch() {
        let sys = example1_system::<f64>();
        let xs = 0.4039;
        let t = integrate(&sys, 0.0, (2.0f64 / 3.0).sqrt(), xs, 1.0, 6000).unwrap();
        assert!((t.last().1 - 0.5).abs() < 1e-3);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let sys = example2_system::<f64>();
        let end = |n| integrate(&sys, 1.0, -1.0, 0.0, 0.5, n).unwrap().last().1;
        let (a, b, c) = (end(10), end(20), end(40));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn example2_is_reversible() {
        let sys = example2_system::<f64>();
        let fwd = integrate(&sys, 1.0, -1.0, 0.0, 0.7, 7000).unwrap();
        let bwd = integrate(&sys, 1.0, 1.0, 0.0, -0.7, 7000).unwrap();
        for i in 0..fwd.len() {
            assert!((fwd.u[i] - bwd.u[i]).abs() < 1e-8);
            assert!((fwd.v[i] + bwd.v[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn shooting_values() {
        let r1 = shoot_example1::<f64>().unwrap();
        assert!((r1.x_star - 0.4039).abs() < 1e-3);
        assert!((r1.energy - 0.505445).abs() < 1e-4, "{}", r1.energy);
        assert!((r1.level + 1.0).abs() < 1e-12);
        assert!(r1.hamiltonian_drift < 1e-6);
        let r2 = shoot_example2::<f64>().unwrap();
        assert!((r2.x_star + 0.0529).abs() < 1e-3, "{}", r2.x_star);
        assert!((r2.energy - 1.0241).abs() < 1e-3, "{}", r2.energy);
        assert!(r2.level.abs() < 1e-12 && r2.hamiltonian_drift < 1e-6);
        assert!(r2.trajectory.v.iter().all(|v| v.abs() >= 1.0 - 1e-12));
        assert!(r2.trajectory.last().1.abs() < 1e-6);
    }

    #[test]
    fn moment_solution_leaves_level_set() {
        let sys = example1_system::<f64>();
        let x: Vec<f64> = (0..=600).map(|k| 0.4 + 0.6 * k as f64 / 600.0).collect();
        let u = x.iter().map(|x| 5.0 / 6.0 * x - 1.0 / 3.0).collect();
        let v = vec![5.0 / 6.0; x.len()];
        let t = Trajectory::new(x, u, v).unwrap();
        assert!(hamiltonian_check(&sys, &t) > 1e-3);
    }

    #[test]
    fn assembled_profiles() {
        let r = shoot_example2::<f64>().unwrap();
        assert_eq!(assembled_example2(&r, 0.0), 1.0);
        assert!(assembled_example2(&r, 1.0).abs() < 1e-6);
        assert!((assembled_example2(&r, -0.5) - assembled_example2(&r, 0.5)).abs() < 1e-15);
        let r = shoot_example1::<f64>().unwrap();
        assert_eq!(assembled_example1(&r, 0.2), 0.0);
        assert!((assembled_example1(&r, 1.0) - 0.5).abs() < 1e-8);
    }
}
