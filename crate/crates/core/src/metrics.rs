// SPDX-License-Identifier: Apache-2.0

//! Entanglement and memory-effect measures.
//!
//! `fidelity` is the linear overlap `tr(σρ)`, not the Uhlmann fidelity; the two
//! agree only when one argument is pure.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linops::{eig_hermitian, CMatrix, DensityMatrix, C64};

/// Eigenvalues of ρρ̃ below this are treated as zero.
pub const EIGEN_CLIP: f64 = -1e-10;

fn require_two_qubits(rho: &DensityMatrix) -> Result<()> {
    let subs = rho.space().subsystems();
    let ok = rho.dim() == 4 && (subs.len() == 1 || subs.iter().all(|(_, d)| *d == 2));
    if !ok {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    Ok(())
}

fn sigma_y_sigma_y() -> CMatrix {
    let mut yy = CMatrix::zeros(4, 4);
    yy[(0, 3)] = C64::new(-1.0, 0.0);
    yy[(1, 2)] = C64::new(1.0, 0.0);
    yy[(2, 1)] = C64::new(1.0, 0.0);
    yy[(3, 0)] = C64::new(-1.0, 0.0);
    yy
}

/// Descending λᵢ: square roots of the eigenvalues of ρρ̃ with
/// ρ̃ = (σy⊗σy)ρ*(σy⊗σy).
///
/// Computed as the singular values of √ρ (σy⊗σy) √ρ*, which share the
/// spectrum of √(√ρ ρ̃ √ρ) and avoid squaring small eigenvalues.
pub fn wootters_lambdas(rho: &DensityMatrix) -> Result<[f64; 4]> {
    require_two_qubits(rho)?;
    let (vals, vecs) = eig_hermitian(&rho.to_operator())?;
    let v = vecs.matrix();
    let roots: Vec<f64> = vals
        .iter()
        .map(|&x| if x < EIGEN_CLIP { 0.0 } else { x.max(0.0).sqrt() })
        .collect();
    let sqrt_rho = CMatrix::from_fn(4, 4, |i, j| {
        (0..4).map(|k| v[(i, k)] * roots[k] * v[(j, k)].conj()).sum()
    });
    let a = &sqrt_rho * sigma_y_sigma_y() * sqrt_rho.map(|z| z.conj());
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok([sv[0], sv[1], sv[2], sv[3]])
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let l = wootters_lambdas(rho)?;
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// Linear overlap `tr(σρ)`. Symmetric in its arguments bit for bit.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.space() != sigma.space() {
        return Err(Error::SpaceMismatch(format!(
            "{} vs {}",
            rho.space(),
            sigma.space()
        )));
    }
    let a = rho.matrix();
    let b = sigma.matrix();
    let d = rho.dim();
    let mut total = 0.0;
    for i in 0..d {
        total += (a[(i, i)] * b[(i, i)]).re;
        for j in i + 1..d {
            let x = (a[(i, j)] * b[(j, i)]).re;
            let y = (a[(j, i)] * b[(i, j)]).re;
            // order-independent pair sum
            total += if x <= y { x + y } else { y + x };
        }
    }
    Ok(total)
}

/// `tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Strictly time-ordered real samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid("series", "times and values differ in length"));
        }
        if times.len() < 2 {
            return Err(invalid("series", "need at least two samples"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("series", "times must be strictly increasing"));
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(invalid("series", "samples must be finite"));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation; `t` must lie within the sampled range.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x < t);
        if k < self.times.len() && self.times[k] == t {
            return self.values[k];
        }
        let k = k.clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Samples inside `[t0, t1]`, with interpolated endpoints.
    pub fn restrict(&self, t0: f64, t1: f64) -> Result<TimeSeries> {
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        if !(t0 < t1) || t0 < first || t1 > last {
            return Err(Error::EmptyWindow);
        }
        let mut times = vec![t0];
        let mut values = vec![self.value_at(t0)];
        for (&t, &v) in self.times.iter().zip(&self.values) {
            if t > t0 && t < t1 {
                times.push(t);
                values.push(v);
            }
        }
        times.push(t1);
        values.push(self.value_at(t1));
        TimeSeries::new(times, values).map_err(|_| Error::EmptyWindow)
    }
}

/// Σ |v_{k+1} − v_k| over consecutive samples.
pub fn total_variation(ts: &TimeSeries) -> f64 {
    ts.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// One maximal rising stretch of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Revival {
    /// Time of the local minimum the rise starts from, s.
    pub start: f64,
    /// Time of the local maximum ending the rise, s.
    pub peak_time: f64,
    /// Peak minus preceding minimum.
    pub height: f64,
}

/// Entanglement-based non-Markovianity over a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonMarkovReport {
    /// The measure; twice the summed rises.
    #[serde(rename = "I")]
    pub measure: f64,
    pub total_variation: f64,
    /// `E(t0) − E(tmax)`.
    pub delta_e: f64,
    pub t0: f64,
    pub tmax: f64,
    pub revivals: Vec<Revival>,
}

impl NonMarkovReport {
    pub fn max_revival(&self) -> Option<&Revival> {
        self.revivals
            .iter()
            .max_by(|a, b| a.height.total_cmp(&b.height))
    }
}

/// `I = ∫|dE/dt| dt − [E(t0) − E(tmax)]` on the piecewise-linear series.
///
/// Evaluated as twice the sum of the positive increments, which equals the
/// defining difference and is exactly zero on non-increasing data.
pub fn non_markovianity(ts: &TimeSeries, t0: f64, tmax: f64) -> Result<NonMarkovReport> {
    let window = ts.restrict(t0, tmax)?;
    let v = window.values();
    let t = window.times();
    let tv = total_variation(&window);
    let delta_e = v[0] - v[v.len() - 1];
    let rises: f64 = v.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum();

    let mut revivals = Vec::new();
    let mut k = 0;
    while k + 1 < v.len() {
        if v[k + 1] > v[k] {
            let start = k;
            while k + 1 < v.len() && v[k + 1] > v[k] {
                k += 1;
            }
            revivals.push(Revival {
                start: t[start],
                peak_time: t[k],
                height: v[k] - v[start],
            });
        } else {
            k += 1;
        }
    }

    Ok(NonMarkovReport {
        measure: 2.0 * rises,
        total_variation: tv,
        delta_e,
        t0,
        tmax,
        revivals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{SpaceLabel, ONE, ZERO};

    fn two_qubits() -> SpaceLabel {
        SpaceLabel::new([("a", 2), ("b", 2)]).unwrap()
    }

    fn phi_minus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(
            &two_qubits(),
            &[C64::new(s, 0.0), ZERO, ZERO, C64::new(-s, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn bell_and_mixed_extremes() {
        assert!((concurrence(&phi_minus()).unwrap() - 1.0).abs() < 1e-12);
        let mm = DensityMatrix::maximally_mixed(&two_qubits());
        assert!(concurrence(&mm).unwrap().abs() < 1e-12);
    }

    #[test]
    fn concurrence_rejects_wrong_dimension() {
        let s = SpaceLabel::single("a", 3).unwrap();
        let rho = DensityMatrix::maximally_mixed(&s);
        assert!(concurrence(&rho).is_err());
    }

    #[test]
    fn fidelity_basics() {
        let bell = phi_minus();
        assert!((fidelity(&bell, &bell).unwrap() - 1.0).abs() < 1e-15);
        let q = SpaceLabel::single("q", 2).unwrap();
        let zero = DensityMatrix::basis(&q, 0).unwrap();
        let one = DensityMatrix::basis(&q, 1).unwrap();
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        let mm = DensityMatrix::maximally_mixed(&two_qubits());
        assert!((fidelity(&mm, &bell).unwrap() - 0.25).abs() < 1e-15);
        assert!(fidelity(&zero, &bell).is_err());
    }

    #[test]
    fn purity_extremes() {
        assert!((purity(&phi_minus()) - 1.0).abs() < 1e-15);
        let s = SpaceLabel::single("a", 5).unwrap();
        assert!((purity(&DensityMatrix::maximally_mixed(&s)) - 0.2).abs() < 1e-15);
        let q = SpaceLabel::single("q", 2).unwrap();
        let a = DensityMatrix::basis(&q, 0).unwrap();
        let b = DensityMatrix::pure(&q, &[ONE, ONE]).unwrap();
        let mix = a.mix(&b, 0.3).unwrap();
        assert!(purity(&mix) <= purity(&a).max(purity(&b)));
    }

    #[test]
    fn total_variation_cases() {
        let t: Vec<f64> = (0..4).map(|k| k as f64).collect();
        let mono = TimeSeries::new(t.clone(), vec![1.0, 0.7, 0.4, 0.1]).unwrap();
        assert!((total_variation(&mono) - 0.9).abs() < 1e-15);
        let flat = TimeSeries::new(t.clone(), vec![0.3; 4]).unwrap();
        assert_eq!(total_variation(&flat), 0.0);
        let bumpy = TimeSeries::new(t, vec![1.0, 0.0, 0.5, 0.0]).unwrap();
        assert_eq!(total_variation(&bumpy), 2.0);
    }

    #[test]
    fn series_validation() {
        assert!(TimeSeries::new(vec![0.0], vec![1.0]).is_err());
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn monotone_decay_is_markovian() {
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 1e-7).collect();
        let v: Vec<f64> = t.iter().map(|&x| (-x / 5e-6).exp()).collect();
        let ts = TimeSeries::new(t.clone(), v).unwrap();
        let r = non_markovianity(&ts, t[0], t[199]).unwrap();
        assert_eq!(r.measure, 0.0);
        assert!(r.revivals.is_empty());
    }

    #[test]
    fn flat_endpoints_give_total_variation() {
        let t: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let ts = TimeSeries::new(t, vec![0.5, 0.1, 0.4, 0.2, 0.5]).unwrap();
        let r = non_markovianity(&ts, 0.0, 4.0).unwrap();
        assert_eq!(r.delta_e, 0.0);
        assert!((r.measure - r.total_variation).abs() < 1e-15);
        assert_eq!(r.revivals.len(), 2);
    }

    #[test]
    fn window_interpolation_and_errors() {
        let ts = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let r = non_markovianity(&ts, 0.5, 1.5).unwrap();
        assert!((r.measure - 1.0).abs() < 1e-15);
        assert_eq!(r.revivals[0].start, 0.5);
        assert_eq!(r.revivals[0].peak_time, 1.0);
        assert!((r.revivals[0].height - 0.5).abs() < 1e-15);
        assert_eq!(non_markovianity(&ts, 1.0, 1.0).unwrap_err(), Error::EmptyWindow);
        assert_eq!(non_markovianity(&ts, -1.0, 1.0).unwrap_err(), Error::EmptyWindow);
    }
}
