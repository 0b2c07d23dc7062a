//! Ready-made one-dimensional test problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envelope::{build_envelope, SampledFunction, DEFAULT_SAMPLES};
use crate::error::{invalid_param, Result};
use crate::scalar::Scalar;
use crate::solver1d::{
    BoundaryCondition, Grid1D, GridFunction1D, PotentialV, Problem1D, SolverConfig,
};

/// Default seed for the random potential of example 5.
pub const DEFAULT_SEED: u64 = 20_190_417;
/// Number of random samples of the example 5 potential.
pub const RANDOM_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example {
    /// One-sided well, `V = u²`, `u(0) = 0`, `u(1) = 1/2`.
    OneSidedWell,
    /// Double well in `u_x` and in `u`, zero Dirichlet data on `[-1, 1]`.
    DoubleWell,
    /// Triple well `(d²-1)²((d-2)²-1)²`, otherwise as `DoubleWell`.
    TripleWell,
    /// Double well in `u_x`, tracking `g = sin(2πx)/6 + eˣ/2`, natural ends.
    Tracking,
    /// Random potential in `u_x`, `V = (u² - g)²`, natural ends.
    RandomWell,
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::OneSidedWell => "example1",
            Example::DoubleWell => "example2",
            Example::TripleWell => "example3",
            Example::Tracking => "example4",
            Example::RandomWell => "example5",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Example::OneSidedWell,
            Example::DoubleWell,
            Example::TripleWell,
            Example::Tracking,
            Example::RandomWell,
        ]
        .into_iter()
        .find(|e| e.name() == name)
    }

    pub fn default_dx(self) -> f64 {
        match self {
            Example::OneSidedWell | Example::DoubleWell | Example::TripleWell => 1.0 / 128.0,
            Example::Tracking | Example::RandomWell => 1.0 / 256.0,
        }
    }
}

/// Sign of the initial guess for problems with two symmetric minimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    fn sign<T: Scalar>(self) -> T {
        match self {
            Branch::Plus => T::one(),
            Branch::Minus => -T::one(),
        }
    }
}

/// Everything needed to run and post-process one problem.
#[derive(Debug, Clone)]
pub struct Setup1D<T> {
    /// `None` for user-defined problems.
    pub example: Option<Example>,
    pub grid: Grid1D<T>,
    pub problem: Problem1D<T>,
    pub config: SolverConfig<T>,
    /// The sampled nonconvex integrand the envelope was built from.
    pub samples: SampledFunction<T>,
    pub seed: Option<u64>,
}

/// `(d² - 1)²` restricted to `d ≥ 0`.
pub fn one_sided_well<T: Scalar>(d: T) -> T {
    (d * d - T::one()).powi(2)
}

pub fn double_well<T: Scalar>(d: T) -> T {
    (d * d - T::one()).powi(2)
}

pub fn triple_well<T: Scalar>(d: T) -> T {
    let two = T::lit(2.0);
    (d * d - T::one()).powi(2) * ((d - two).powi(2) - T::one()).powi(2)
}

/// `sin(2πx)/6 + eˣ/2`.
pub fn tracking_target<T: Scalar>(x: T) -> T {
    (T::lit(2.0) * T::PI() * x).sin() / T::lit(6.0) + x.exp() / T::lit(2.0)
}

/// `sin(2πx)/4 + 1/2`.
pub fn random_well_target<T: Scalar>(x: T) -> T {
    (T::lit(2.0) * T::PI() * x).sin() / T::lit(4.0) + T::lit(0.5)
}

/// `RANDOM_SAMPLES` values drawn from U(0, 1) at equispaced points of `[lo, hi]`.
pub fn random_samples<T: Scalar>(seed: u64, lo: T, hi: T) -> Result<SampledFunction<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = RANDOM_SAMPLES;
    let nodes: Vec<T> = (0..n)
        .map(|k| lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(n - 1))
        .collect();
    let values: Vec<T> = (0..n).map(|_| T::lit(rng.gen::<f64>())).collect();
    SampledFunction::new(nodes, values)
}

/// Builds the named problem at spacing `dx` with its default configuration.
pub fn setup<T: Scalar>(
    example: Example,
    dx: T,
    branch: Branch,
    seed: Option<u64>,
) -> Result<Setup1D<T>> {
    let two = T::lit(2.0);
    let (samples, grid, potential, bc) = match example {
        Example::OneSidedWell => {
            let grid = Grid1D::with_spacing(T::zero(), T::one(), dx)?;
            let s =
                SampledFunction::tabulate(one_sided_well, T::zero(), T::lit(3.0), DEFAULT_SAMPLES)?;
            let v = PotentialV::quadratic_tracking(&grid, |_| T::zero())?;
            (
                s,
                grid,
                v,
                BoundaryCondition::Dirichlet {
                    left: T::zero(),
                    right: T::lit(0.5),
                },
            )
        }
        Example::DoubleWell | Example::TripleWell => {
            let grid = Grid1D::with_spacing(-T::one(), T::one(), dx)?;
            let s = if example == Example::DoubleWell {
                SampledFunction::tabulate(double_well, -T::lit(3.0), T::lit(3.0), DEFAULT_SAMPLES)?
            } else {
                SampledFunction::tabulate(triple_well, -two, T::lit(4.0), DEFAULT_SAMPLES)?
            };
            let v = PotentialV::double_well(&grid, T::lit(4.0))?;
            (
                s,
                grid,
                v,
                BoundaryCondition::Dirichlet {
                    left: T::zero(),
                    right: T::zero(),
                },
            )
        }
        Example::Tracking => {
            let grid = Grid1D::with_spacing(-T::one(), T::one(), dx)?;
            let s =
                SampledFunction::tabulate(double_well, -T::lit(3.0), T::lit(3.0), DEFAULT_SAMPLES)?;
            let v = PotentialV::quadratic_tracking(&grid, tracking_target)?;
            (s, grid, v, BoundaryCondition::Natural)
        }
        Example::RandomWell => {
            let grid = Grid1D::with_spacing(-T::one(), T::one(), dx)?;
            let s = random_samples(seed.unwrap_or(DEFAULT_SEED), -T::one(), T::one())?;
            let v = PotentialV::tracking_well(&grid, random_well_target, T::lit(4.1))?;
            (s, grid, v, BoundaryCondition::Natural)
        }
    };
    let envelope = build_envelope(&samples)?;
    let mut problem = Problem1D::new(envelope, potential);
    let mut config = SolverConfig::for_spacing(dx, bc);
    let sign: T = branch.sign();
    match example {
        Example::OneSidedWell => {}
        Example::DoubleWell | Example::TripleWell => {
            let u0 = GridFunction1D::from_fn_nodes(&grid, |_| sign)?;
            problem = problem.with_initial_guess(u0);
        }
        Example::Tracking => {
            config.gs_sweeps = 20;
        }
        Example::RandomWell => {
            config.gs_sweeps = 20;
            config.k_inner = 10;
            let u0 = GridFunction1D::from_fn_nodes(&grid, |x| sign * random_well_target(x).sqrt())?;
            problem = problem.with_initial_guess(u0);
        }
    }
    Ok(Setup1D {
        example: Some(example),
        grid,
        problem,
        config,
        samples,
        seed: (example == Example::RandomWell).then(|| seed.unwrap_or(DEFAULT_SEED)),
    })
}

/// Parses `0.0078125`, `2^-7` or `1/128`.
pub fn parse_spacing(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = if let Some(exp) = s.strip_prefix("2^") {
        let k: i32 = exp
            .trim_matches(|c| c == '(' || c == ')')
            .parse()
            .map_err(|_| invalid_param("dx", format!("bad exponent in `{s}`")))?;
        2f64.powi(k)
    } else if let Some((num, den)) = s.split_once('/') {
        let num: f64 = num
            .trim()
            .parse()
            .map_err(|_| invalid_param("dx", format!("bad number `{s}`")))?;
        let den: f64 = den
            .trim()
            .parse()
            .map_err(|_| invalid_param("dx", format!("bad number `{s}`")))?;
        num / den
    } else {
        s.parse()
            .map_err(|_| invalid_param("dx", format!("bad number `{s}`")))?
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid_param("dx", format!("must be positive, got `{s}`")))
    }
}
