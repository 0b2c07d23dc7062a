//! Convex envelope of a tabulated 1D potential.
//!
//! The envelope is the lower convex hull of the sample points, built with a
//! monotone chain in one pass over the (already sorted) abscissae. Collinear
//! interior points are dropped so that consecutive slopes are strictly
//! increasing; the shrink table and the measure reconstruction both rely on
//! that.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid_param, RelaxError, Result};
use crate::scalar::Scalar;

/// Relative tolerance used to decide that a sample lies on a hull chord.
pub const COLLINEAR_RTOL: f64 = 1e-12;

/// Default number of sample intervals when tabulating analytic potentials.
pub const DEFAULT_SAMPLES: usize = 4096;

/// Relative distance outside the breakpoint range still treated as inside.
/// A converged split Bregman iterate only satisfies `d = u_x` to about
/// `sqrt(tol)` per cell, so gradients of a solution may poke out slightly.
pub const DOMAIN_SLACK: f64 = 1e-6;

/// Tabulated potential `W` on `[nodes[0], nodes[last]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    nodes: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> SampledFunction<T> {
    pub fn new(nodes: Vec<T>, values: Vec<T>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(RelaxError::InvalidInput(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 2 {
            return Err(RelaxError::InvalidInput(
                "at least two samples are required".into(),
            ));
        }
        if let Some(i) = nodes
            .iter()
            .chain(values.iter())
            .position(|v| !v.is_finite())
        {
            return Err(RelaxError::InvalidInput(format!(
                "non-finite sample entry at position {i}"
            )));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(RelaxError::InvalidInput(format!(
                "nodes must be strictly increasing (violated at index {})",
                i + 1
            )));
        }
        Ok(Self { nodes, values })
    }

    /// Samples `w` at `n_intervals + 1` equispaced points of `[a, b]`.
    pub fn tabulate(w: impl Fn(T) -> T, a: T, b: T, n_intervals: usize) -> Result<Self> {
        if !(a < b) {
            return Err(invalid_param("domain", "require a < b"));
        }
        if n_intervals < 1 {
            return Err(invalid_param("n_intervals", "must be at least 1"));
        }
        let step = (b - a) / T::from_usize_lossy(n_intervals);
        let nodes: Vec<T> = (0..=n_intervals)
            .map(|i| {
                if i == n_intervals {
                    b
                } else {
                    a + step * T::from_usize_lossy(i)
                }
            })
            .collect();
        let values = nodes.iter().map(|&d| w(d)).collect();
        Self::new(nodes, values)
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn domain(&self) -> (T, T) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// Largest sample spacing.
    pub fn max_spacing(&self) -> T {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_value(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Piecewise-linear interpolant of the samples; `None` outside the domain.
    pub fn interpolate(&self, d: T) -> Option<T> {
        let (lo, hi) = self.domain();
        if d < lo || d > hi {
            return None;
        }
        let k = self.nodes.partition_point(|&x| x <= d);
        if k == self.nodes.len() {
            return Some(self.values[k - 1]);
        }
        let (x0, x1) = (self.nodes[k - 1], self.nodes[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        Some(y0 + (y1 - y0) * (d - x0) / (x1 - x0))
    }
}

/// Piecewise-linear convex envelope with extended-real end slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearEnvelope<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    slopes: Vec<T>,
    left_slope: T,
    right_slope: T,
}

impl<T: Scalar> PiecewiseLinearEnvelope<T> {
    /// Assembles an envelope from its parts, checking convexity.
    pub fn from_parts(
        breakpoints: Vec<T>,
        values: Vec<T>,
        left_slope: T,
        right_slope: T,
    ) -> Result<Self> {
        if breakpoints.len() != values.len() || breakpoints.len() < 2 {
            return Err(RelaxError::InvalidInput(
                "envelope needs at least two breakpoints with matching values".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RelaxError::InvalidInput(
                "envelope breakpoints must be strictly increasing".into(),
            ));
        }
        let slopes: Vec<T> = breakpoints
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let env = Self {
            breakpoints,
            values,
            slopes,
            left_slope,
            right_slope,
        };
        env.check_convex()?;
        Ok(env)
    }

    fn check_convex(&self) -> Result<()> {
        if self.slopes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(RelaxError::InvalidInput(
                "envelope slopes must be strictly increasing".into(),
            ));
        }
        let first = self.slopes[0];
        let last = self.slopes[self.slopes.len() - 1];
        if self.left_slope.is_nan() || self.right_slope.is_nan() {
            return Err(RelaxError::InvalidInput("NaN end slope".into()));
        }
        if self.left_slope > first || self.right_slope < last {
            return Err(RelaxError::InvalidInput(
                "end slopes must bracket the segment slopes".into(),
            ));
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn slopes(&self) -> &[T] {
        &self.slopes
    }

    pub fn left_slope(&self) -> T {
        self.left_slope
    }

    pub fn right_slope(&self) -> T {
        self.right_slope
    }

    /// Replaces the extrapolation slopes (default is a hard clamp, `∓∞`).
    pub fn with_end_slopes(mut self, left: T, right: T) -> Result<Self> {
        self.left_slope = left;
        self.right_slope = right;
        self.check_convex()?;
        Ok(self)
    }

    pub fn domain(&self) -> (T, T) {
        (
            self.breakpoints[0],
            self.breakpoints[self.breakpoints.len() - 1],
        )
    }

    /// Evaluates the envelope. Outside the breakpoint range the end slopes
    /// extrapolate; an infinite end slope makes the value `+∞` there.
    pub fn eval(&self, d: T) -> T {
        let (lo, hi) = self.domain();
        if d < lo {
            return if self.left_slope.is_finite() {
                self.values[0] + self.left_slope * (d - lo)
            } else {
                T::infinity()
            };
        }
        if d > hi {
            return if self.right_slope.is_finite() {
                self.values[self.values.len() - 1] + self.right_slope * (d - hi)
            } else {
                T::infinity()
            };
        }
        let k = self
            .breakpoints
            .partition_point(|&x| x <= d)
            .clamp(1, self.breakpoints.len() - 1);
        self.values[k - 1] + self.slopes[k - 1] * (d - self.breakpoints[k - 1])
    }

    /// Pulls `d` back onto the breakpoint range if it lies outside by at most
    /// [`DOMAIN_SLACK`] times the range width; `None` if it is further out.
    pub fn snap_to_domain(&self, d: T) -> Option<T> {
        let (lo, hi) = self.domain();
        let slack = T::lit(DOMAIN_SLACK) * (hi - lo).max(T::one());
        if d < lo {
            (d >= lo - slack).then_some(lo)
        } else if d > hi {
            (d <= hi + slack).then_some(hi)
        } else {
            Some(d)
        }
    }

    pub fn to_json(&self) -> EnvelopeJson {
        EnvelopeJson {
            breakpoints: self.breakpoints.iter().map(|v| v.as_f64()).collect(),
            values: self.values.iter().map(|v| v.as_f64()).collect(),
            slopes: self.slopes.iter().map(|v| v.as_f64()).collect(),
            left_slope: ExtendedReal(self.left_slope.as_f64()),
            right_slope: ExtendedReal(self.right_slope.as_f64()),
        }
    }

    /// Rebuilds an envelope from its JSON form. Slopes are recomputed from
    /// breakpoints and values and must agree with the stored ones.
    pub fn from_json(json: &EnvelopeJson) -> Result<Self> {
        let env = Self::from_parts(
            json.breakpoints.iter().map(|&v| T::lit(v)).collect(),
            json.values.iter().map(|&v| T::lit(v)).collect(),
            T::lit(json.left_slope.0),
            T::lit(json.right_slope.0),
        )?;
        if json.slopes.len() != env.slopes.len() {
            return Err(RelaxError::InvalidInput(format!(
                "expected {} slopes, found {}",
                env.slopes.len(),
                json.slopes.len()
            )));
        }
        for (stored, computed) in json.slopes.iter().zip(&env.slopes) {
            let c = computed.as_f64();
            if (stored - c).abs() > 1e-9 * (1.0 + c.abs()) {
                return Err(RelaxError::InvalidInput(format!(
                    "stored slope {stored} disagrees with breakpoints ({c})"
                )));
            }
        }
        Ok(env)
    }
}

/// Lower convex hull of the samples of `f`.
pub fn build_envelope<T: Scalar>(f: &SampledFunction<T>) -> Result<PiecewiseLinearEnvelope<T>> {
    if f.len() < 2 {
        return Err(RelaxError::InvalidInput(
            "at least two samples are required".into(),
        ));
    }
    let scale = f.max_abs_value().max(T::one());
    let tol = T::lit(COLLINEAR_RTOL) * scale;
    let (xs, ys) = (f.nodes(), f.values());

    let mut hull: Vec<usize> = Vec::with_capacity(f.len());
    for k in 0..f.len() {
        while hull.len() >= 2 {
            let i0 = hull[hull.len() - 2];
            let i1 = hull[hull.len() - 1];
            let chord = ys[i0] + (ys[k] - ys[i0]) * (xs[i1] - xs[i0]) / (xs[k] - xs[i0]);
            if ys[i1] >= chord - tol {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }

    PiecewiseLinearEnvelope::from_parts(
        hull.iter().map(|&i| xs[i]).collect(),
        hull.iter().map(|&i| ys[i]).collect(),
        T::neg_infinity(),
        T::infinity(),
    )
}

/// Free-function form of [`PiecewiseLinearEnvelope::eval`].
pub fn eval_envelope<T: Scalar>(env: &PiecewiseLinearEnvelope<T>, d: T) -> T {
    env.eval(d)
}

/// Gradient intervals over which the envelope is affine and lies strictly
/// below the samples somewhere.
///
/// A hull segment is non-contact when some sample strictly inside it sits more
/// than `tol` above it. Consecutive segments are grouped into maximal affine
/// pieces (every inner breakpoint within `tol` of the chord joining the outer
/// ends); each piece is reported from its first to its last non-contact
/// segment.
/// An isolated contact point inside an affine piece, as at `d = 1` for the
/// triple well, therefore does not split the interval.
pub fn non_contact_intervals<T: Scalar>(
    env: &PiecewiseLinearEnvelope<T>,
    f: &SampledFunction<T>,
    tol: T,
) -> Vec<(T, T)> {
    let bps = env.breakpoints();
    let vals = env.values();
    let (xs, ys) = (f.nodes(), f.values());

    let mut flagged = vec![false; bps.len() - 1];
    let mut k = 0usize;
    for (seg, flag) in flagged.iter_mut().enumerate() {
        let (lo, hi) = (bps[seg], bps[seg + 1]);
        while k < xs.len() && xs[k] <= lo {
            k += 1;
        }
        let mut j = k;
        while j < xs.len() && xs[j] < hi {
            if ys[j] - env.eval(xs[j]) > tol {
                *flag = true;
            }
            j += 1;
        }
        k = j;
    }

    let affine = |start: usize, end: usize| {
        let (x0, y0) = (bps[start], vals[start]);
        let (x1, y1) = (bps[end], vals[end]);
        (start + 1..end).all(|m| {
            let chord = y0 + (y1 - y0) * (bps[m] - x0) / (x1 - x0);
            chord - vals[m] <= tol
        })
    };

    let mut out = Vec::new();
    let mut start = 0usize;
    while start < flagged.len() {
        // grow the affine piece starting at breakpoint `start`
        let mut end = start + 1;
        while end < flagged.len() && affine(start, end + 1) {
            end += 1;
        }
        // contact segments at either end of the piece are not part of it
        let first = (start..end).find(|&s| flagged[s]);
        let last = (start..end).rev().find(|&s| flagged[s]);
        if let (Some(a), Some(b)) = (first, last) {
            out.push((bps[a], bps[b + 1]));
        }
        start = end;
    }
    out
}

/// Extended real that serializes `±∞` as the strings `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedReal(pub f64);

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtendedReal(v)),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(ExtendedReal(f64::INFINITY)),
                "-inf" => Ok(ExtendedReal(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number, \"inf\" or \"-inf\", found {other:?}"
                ))),
            },
        }
    }
}

/// Wire format of an envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeJson {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub left_slope: ExtendedReal,
    pub right_slope: ExtendedReal,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_well(d: f64) -> f64 {
        (d * d - 1.0).powi(2)
    }

    fn triple_well(d: f64) -> f64 {
        (d * d - 1.0).powi(2) * ((d - 2.0).powi(2) - 1.0).powi(2)
    }

    /// Brute-force envelope at `d`: inf over all chords of sample pairs
    /// bracketing `d` (Carathéodory with two points in 1D).
    fn brute_force_envelope(f: &SampledFunction<f64>, d: f64) -> f64 {
        let (xs, ys) = (f.nodes(), f.values());
        let mut best = f64::INFINITY;
        for i in 0..xs.len() {
            if xs[i] > d {
                break;
            }
            for j in i..xs.len() {
                if xs[j] < d {
                    continue;
                }
                let v = if j == i {
                    ys[i]
                } else {
                    ys[i] + (ys[j] - ys[i]) * (d - xs[i]) / (xs[j] - xs[i])
                };
                best = best.min(v);
            }
        }
        best
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(SampledFunction::new(vec![0.0], vec![1.0]).is_err());
        assert!(SampledFunction::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn double_well_envelope_is_flat_between_wells() {
        let f = SampledFunction::tabulate(double_well, -2.0, 2.0, 4096).unwrap();
        let env = build_envelope(&f).unwrap();
        for k in 0..=400 {
            let d = -2.0 + 4.0 * k as f64 / 400.0;
            let exact = if d.abs() < 1.0 { 0.0 } else { double_well(d) };
            // chord error of a convex function: max W'' h² / 8 with W'' <= 44 here
            let h: f64 = 4.0 / 4096.0;
            assert!((env.eval(d) - exact).abs() <= 44.0 * h * h / 8.0, "d={d}");
        }
        assert_eq!(env.eval(0.0), 0.0);
        assert!((env.eval(2.0) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn convex_function_keeps_every_sample() {
        let f = SampledFunction::tabulate(|d: f64| d * d, -1.0, 1.0, 64).unwrap();
        let env = build_envelope(&f).unwrap();
        assert_eq!(env.breakpoints().len(), f.len());
        assert!(non_contact_intervals(&env, &f, 1e-9).is_empty());
    }

    #[test]
    fn one_sided_well_has_tangent_segment() {
        let f = SampledFunction::tabulate(double_well, 0.0, 2.0, 4096).unwrap();
        let env = build_envelope(&f).unwrap();
        let a = (2.0f64 / 3.0).sqrt();
        let slope = -(4.0 / 3.0) * a;
        assert!((env.slopes()[0] - slope).abs() < 1e-3);
        assert!((env.breakpoints()[1] - a).abs() < 2e-3);
        assert!((env.values()[1] - 1.0 / 9.0).abs() < 1e-3);
        // closed-form segment and brute-force hull agree at d = 0.5
        let closed = 1.0 + slope * 0.5;
        assert!((closed - 0.455_668).abs() < 1e-5);
        assert!((env.eval(0.5) - closed).abs() < 1e-5);
        assert!((env.eval(0.5) - brute_force_envelope(&f, 0.5)).abs() < 1e-12);
        assert_eq!(env.eval(-0.1), f64::INFINITY);
    }

    #[test]
    fn matches_brute_force_on_coarse_triple_well() {
        let f = SampledFunction::tabulate(triple_well, -2.0, 4.0, 120).unwrap();
        let env = build_envelope(&f).unwrap();
        for k in 0..=240 {
            let d = -2.0 + 6.0 * k as f64 / 240.0;
            let bf = brute_force_envelope(&f, d);
            assert!((env.eval(d) - bf).abs() < 1e-9 * (1.0 + bf.abs()), "d={d}");
        }
    }

    #[test]
    fn double_well_non_contact_interval() {
        let f = SampledFunction::tabulate(double_well, -2.0, 2.0, 4096).unwrap();
        let env = build_envelope(&f).unwrap();
        let iv = non_contact_intervals(&env, &f, 1e-6 * f.max_abs_value());
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 1.0).abs() < 1e-3 && (iv[0].1 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn triple_well_non_contact_interval_spans_outer_wells() {
        // Independent check: a dense brute-force hull puts the zero-level set
        // of the envelope on [-1, 3].
        let coarse = SampledFunction::tabulate(triple_well, -2.0, 4.0, 600).unwrap();
        for d in [-0.9, 0.0, 1.0, 2.0, 2.9] {
            assert!(brute_force_envelope(&coarse, d) < 1e-3);
        }
        let f = SampledFunction::tabulate(triple_well, -2.0, 4.0, 4096).unwrap();
        let env = build_envelope(&f).unwrap();
        let iv = non_contact_intervals(&env, &f, 1e-6 * f.max_abs_value());
        assert_eq!(iv.len(), 1, "{iv:?}");
        assert!(
            (iv[0].0 + 1.0).abs() < 2e-3 && (iv[0].1 - 3.0).abs() < 2e-3,
            "{iv:?}"
        );
    }

    #[test]
    fn extrapolates_with_finite_end_slopes() {
        let env =
            PiecewiseLinearEnvelope::from_parts(vec![0.0, 1.0], vec![0.0, 1.0], -2.0, 3.0).unwrap();
        assert_eq!(env.eval(-1.0), 2.0);
        assert_eq!(env.eval(2.0), 4.0);
        assert!(
            PiecewiseLinearEnvelope::from_parts(vec![0.0, 1.0], vec![0.0, 1.0], 2.0, 3.0).is_err()
        );
    }

    #[test]
    fn json_round_trip_with_infinite_slopes() {
        let f = SampledFunction::tabulate(double_well, 0.0, 2.0, 64).unwrap();
        let env = build_envelope(&f).unwrap();
        let text = serde_json::to_string(&env.to_json()).unwrap();
        assert!(text.contains("\"left_slope\":\"-inf\""));
        assert!(text.contains("\"right_slope\":\"inf\""));
        let back: EnvelopeJson = serde_json::from_str(&text).unwrap();
        let env2 = PiecewiseLinearEnvelope::<f64>::from_json(&back).unwrap();
        assert_eq!(env, env2);
        let bad = text.replace("\"-inf\"", "\"minus\"");
        assert!(serde_json::from_str::<EnvelopeJson>(&bad).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let f = SampledFunction::tabulate(|d: f32| (d * d - 1.0).powi(2), -2.0, 2.0, 512).unwrap();
        let env = build_envelope(&f).unwrap();
        assert!(env.eval(0.0).abs() < 1e-4);
    }
}
