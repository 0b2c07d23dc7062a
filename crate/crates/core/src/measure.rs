//! Two-atom Young measures recovered from relaxed minimizers.
//!
//! Where the gradient of a relaxed minimizer falls inside a non-contact
//! interval `(d_L, d_R)` of the envelope, minimizing sequences of the
//! original problem oscillate between `d_L` and `d_R` in the proportions
//! that reproduce the mean gradient.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::envelope::{non_contact_intervals, PiecewiseLinearEnvelope, SampledFunction};
use crate::error::{RelaxError, Result};
use crate::scalar::Scalar;
use crate::solver1d::{Grid1D, SolveReport};

/// Relative threshold on `W - W̄` separating genuine non-contact from hull noise.
pub const GAP_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub loc: f64,
    pub w: f64,
}

/// A probability measure with one or two atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure<T> {
    atoms: Vec<(T, T)>,
}

impl<T: Scalar> AtomicMeasure<T> {
    pub fn dirac(at: T) -> Self {
        Self {
            atoms: vec![(at, T::one())],
        }
    }

    /// `(d_R - m)/(d_R - d_L) δ_{d_L} + (m - d_L)/(d_R - d_L) δ_{d_R}`.
    pub fn split(d_left: T, d_right: T, mean: T) -> Result<Self> {
        if !(d_left < d_right) || !(d_left <= mean && mean <= d_right) {
            return Err(RelaxError::InvalidInput(format!(
                "mean {mean} not inside [{d_left}, {d_right}]"
            )));
        }
        let wl = (d_right - mean) / (d_right - d_left);
        Ok(Self {
            atoms: vec![(d_left, wl), (d_right, T::one() - wl)],
        })
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn is_dirac(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn mean(&self) -> T {
        self.atoms.iter().map(|&(x, w)| x * w).sum()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.atoms.iter().map(|&(x, w)| f(x) * w).sum()
    }

    pub fn to_atoms(&self) -> Vec<Atom> {
        self.atoms
            .iter()
            .map(|&(loc, w)| Atom {
                loc: loc.as_f64(),
                w: w.as_f64(),
            })
            .collect()
    }
}

/// Measure for a gradient `ux` given precomputed non-contact intervals.
/// Two atoms when `ux` lies inside an interval by more than `tol`, else `δ_ux`.
pub fn measure_at<T: Scalar>(
    envelope: &PiecewiseLinearEnvelope<T>,
    intervals: &[(T, T)],
    ux: T,
    tol: T,
) -> Result<AtomicMeasure<T>> {
    let ux = snap(envelope, ux)?;
    for &(dl, dr) in intervals {
        if ux > dl + tol && ux < dr - tol {
            return AtomicMeasure::split(dl, dr, ux);
        }
    }
    Ok(AtomicMeasure::dirac(ux))
}

fn snap<T: Scalar>(envelope: &PiecewiseLinearEnvelope<T>, ux: T) -> Result<T> {
    envelope.snap_to_domain(ux).ok_or_else(|| {
        let (lo, hi) = envelope.domain();
        RelaxError::Domain {
            value: ux.as_f64(),
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        }
    })
}

/// Envelope, its samples and non-contact intervals, ready for reconstruction.
#[derive(Debug, Clone)]
pub struct MeasureModel<T> {
    envelope: PiecewiseLinearEnvelope<T>,
    samples: SampledFunction<T>,
    intervals: Vec<(T, T)>,
    tol: T,
}

impl<T: Scalar> MeasureModel<T> {
    /// Uses `tol = GAP_RTOL · max|W|` on the samples.
    pub fn new(envelope: PiecewiseLinearEnvelope<T>, samples: SampledFunction<T>) -> Self {
        let tol = T::lit(GAP_RTOL) * samples.max_abs_value().max(T::min_positive_value());
        Self::with_tolerance(envelope, samples, tol)
    }

    pub fn with_tolerance(
        envelope: PiecewiseLinearEnvelope<T>,
        samples: SampledFunction<T>,
        tol: T,
    ) -> Self {
        let intervals = non_contact_intervals(&envelope, &samples, tol);
        Self {
            envelope,
            samples,
            intervals,
            tol,
        }
    }

    pub fn intervals(&self) -> &[(T, T)] {
        &self.intervals
    }

    pub fn tolerance(&self) -> T {
        self.tol
    }

    pub fn envelope(&self) -> &PiecewiseLinearEnvelope<T> {
        &self.envelope
    }

    /// `W(d) - W̄(d)` with `W` interpolated from the samples.
    pub fn gap(&self, d: T) -> Option<T> {
        self.samples
            .interpolate(d)
            .map(|w| w - self.envelope.eval(d))
    }

    /// Two atoms exactly when `ux` is in a non-contact interval and the
    /// gap `W(ux) - W̄(ux)` exceeds the tolerance.
    pub fn measure_at(&self, ux: T) -> Result<AtomicMeasure<T>> {
        let ux = snap(&self.envelope, ux)?;
        let gap = self.gap(ux).unwrap_or(T::zero());
        if gap > self.tol {
            if let Some(&(dl, dr)) = self.intervals.iter().find(|&&(dl, dr)| dl < ux && ux < dr) {
                return AtomicMeasure::split(dl, dr, ux);
            }
        }
        Ok(AtomicMeasure::dirac(ux))
    }

    /// Applies [`measure_at`](Self::measure_at) to every cell gradient.
    pub fn measure_field(
        &self,
        report: &SolveReport<T>,
        grid: &Grid1D<T>,
    ) -> Result<ParametrizedMeasure<T>> {
        self.measure_field_from_gradients(&report.ux(grid), grid)
    }

    pub fn measure_field_from_gradients(
        &self,
        ux: &[T],
        grid: &Grid1D<T>,
    ) -> Result<ParametrizedMeasure<T>> {
        if ux.len() != grid.n_cells() {
            return Err(RelaxError::InvalidInput(
                "one gradient per cell expected".into(),
            ));
        }
        let measures = ux
            .iter()
            .map(|&g| self.measure_at(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(ParametrizedMeasure {
            x: grid.cell_centers(),
            measures,
        })
    }
}

/// One measure per cell, located at the cell centre.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrizedMeasure<T> {
    pub x: Vec<T>,
    pub measures: Vec<AtomicMeasure<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurePoint {
    pub x: f64,
    pub atoms: Vec<Atom>,
}

impl<T: Scalar> ParametrizedMeasure<T> {
    pub fn to_points(&self) -> Vec<MeasurePoint> {
        self.x
            .iter()
            .zip(&self.measures)
            .map(|(x, m)| MeasurePoint {
                x: x.as_f64(),
                atoms: m.to_atoms(),
            })
            .collect()
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.to_points())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationInterval {
    pub x0: f64,
    pub x1: f64,
    #[serde(rename = "dL")]
    pub d_left: f64,
    #[serde(rename = "dR")]
    pub d_right: f64,
    /// Mean weight of `d_L` over the interval.
    pub weight_left: f64,
    /// Mean weight of `d_R` over the interval.
    pub weight_right: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub intervals: Vec<OscillationInterval>,
}

impl OscillationReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// Maximal runs of cells carrying the same two-atom pair, bridging gaps of
/// at most one cell. Endpoints are the centres of the first and last cells.
pub fn oscillation_report<T: Scalar>(pm: &ParametrizedMeasure<T>) -> OscillationReport {
    let pair = |m: &AtomicMeasure<T>| (!m.is_dirac()).then(|| (m.atoms[0].0, m.atoms[1].0));
    let n = pm.measures.len();
    let mut intervals = Vec::new();
    let mut j = 0;
    while j < n {
        let Some(p) = pair(&pm.measures[j]) else {
            j += 1;
            continue;
        };
        let start = j;
        let mut end = j;
        let mut k = j + 1;
        while k < n {
            if pair(&pm.measures[k]) == Some(p) {
                end = k;
                k += 1;
            } else if k + 1 < n
                && pair(&pm.measures[k]).is_none()
                && pair(&pm.measures[k + 1]) == Some(p)
            {
                end = k + 1;
                k += 2;
            } else {
                break;
            }
        }
        let members: Vec<&AtomicMeasure<T>> = pm.measures[start..=end]
            .iter()
            .filter(|m| !m.is_dirac())
            .collect();
        let count = members.len() as f64;
        let wl = members.iter().map(|m| m.atoms[0].1.as_f64()).sum::<f64>() / count;
        intervals.push(OscillationInterval {
            x0: pm.x[start].as_f64(),
            x1: pm.x[end].as_f64(),
            d_left: p.0.as_f64(),
            d_right: p.1.as_f64(),
            weight_left: wl,
            weight_right: 1.0 - wl,
        });
        j = end + 1;
    }
    OscillationReport { intervals }
}
