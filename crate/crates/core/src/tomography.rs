// SPDX-License-Identifier: Apache-2.0

//! Shot-limited state tomography with bootstrap error bars.
//!
//! Each setting measures a ±1-valued observable `O`. A shot reads "bright"
//! with probability `(1 + c·tr(ρO))/2` for readout contrast `c`, so the
//! unbiased estimate from `k` bright shots out of `n` is `(2k/n − 1)/c`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::two_qubit_space;
use crate::error::{invalid, Error, Result};
use crate::linops::{eig_hermitian, kron, pauli_on, CMatrix, DensityMatrix, Operator, C64};
use crate::metrics::concurrence;
use crate::model::{ANCILLA, ELECTRON};

/// Smallest accepted bootstrap size.
pub const MIN_RESAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct TomographySetting {
    pub label: String,
    pub observable: Operator,
}

/// The fifteen two-qubit Pauli products other than `II`, electron factor first.
pub fn pauli_settings() -> Vec<TomographySetting> {
    let space = two_qubit_space();
    let single = |name: &str| -> Vec<(char, Operator)> {
        let [x, y, z] = pauli_on(name).expect("qubit");
        let id = Operator::identity(x.space());
        vec![('I', id), ('X', x), ('Y', y), ('Z', z)]
    };
    let (e, n) = (single(ELECTRON), single(ANCILLA));
    let mut out = Vec::with_capacity(15);
    for (a, oa) in &e {
        for (b, ob) in &n {
            if *a == 'I' && *b == 'I' {
                continue;
            }
            let op = kron(oa, ob).expect("disjoint names");
            debug_assert_eq!(op.space(), &space);
            out.push(TomographySetting {
                label: format!("{a}{b}"),
                observable: op,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutEntry {
    pub label: String,
    pub estimate: f64,
    pub shots: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    pub entries: Vec<ReadoutEntry>,
    pub contrast: f64,
    pub seed: u64,
}

impl TomographyRecord {
    /// Record holding the exact expectation values, as if shots were unlimited.
    pub fn noiseless(rho: &DensityMatrix, settings: &[TomographySetting], shots: u64) -> Result<Self> {
        let entries = settings
            .iter()
            .map(|s| {
                Ok(ReadoutEntry {
                    label: s.label.clone(),
                    estimate: expectation(rho, &s.observable)?,
                    shots,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            entries,
            contrast: 1.0,
            seed: 0,
        })
    }

    fn validate(&self, settings: &[TomographySetting]) -> Result<()> {
        if self.entries.len() != settings.len() {
            return Err(Error::DimensionMismatch {
                expected: settings.len(),
                found: self.entries.len(),
            });
        }
        for (e, s) in self.entries.iter().zip(settings) {
            if e.label != s.label {
                return Err(invalid("record", format!("entry `{}` does not match setting `{}`", e.label, s.label)));
            }
            if e.shots == 0 || !e.estimate.is_finite() {
                return Err(invalid("record", format!("entry `{}` has no shots or a non-finite estimate", e.label)));
            }
        }
        check_contrast(self.contrast)
    }
}

fn check_contrast(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(invalid("tomography.contrast", format!("{c} outside (0, 1]")));
    }
    Ok(())
}

fn expectation(rho: &DensityMatrix, o: &Operator) -> Result<f64> {
    if rho.space() != o.space() {
        return Err(Error::SpaceMismatch(format!("state on {}, observable on {}", rho.space(), o.space())));
    }
    Ok((rho.matrix() * o.matrix()).trace().re)
}

fn sample_estimate(rng: &mut ChaCha8Rng, expectation: f64, shots: u64, contrast: f64) -> f64 {
    let p = ((1.0 + contrast * expectation) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots, p).expect("p in [0, 1]").sample(rng);
    (2.0 * k as f64 / shots as f64 - 1.0) / contrast
}

/// Binomial shot sampling of every setting in order from one seeded stream.
pub fn simulate_readout(
    rho: &DensityMatrix,
    settings: &[TomographySetting],
    shots: u64,
    contrast: f64,
    seed: u64,
) -> Result<TomographyRecord> {
    check_contrast(contrast)?;
    if shots == 0 {
        return Err(invalid("tomography.shots", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = settings
        .iter()
        .map(|s| {
            let ev = expectation(rho, &s.observable)?;
            Ok(ReadoutEntry {
                label: s.label.clone(),
                estimate: sample_estimate(&mut rng, ev, shots, contrast),
                shots,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TomographyRecord {
        entries,
        contrast,
        seed,
    })
}

/// Linear-inversion map from expectation values to a Hermitian unit-trace
/// matrix, fixed for a setting list.
#[derive(Clone, Debug)]
pub struct Reconstructor {
    dim: usize,
    /// Pseudo-inverse from `[1, e₁, …, e_m]` to real Hermitian coordinates.
    pinv: DMatrix<f64>,
    labels: Vec<String>,
}

/// Real basis of d×d Hermitian matrices: diagonal units, then symmetric and
/// antisymmetric off-diagonal pairs for each `k < l`.
fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = C64::new(1.0, 0.0);
        out.push(m);
    }
    for k in 0..d {
        for l in k + 1..d {
            let mut s = CMatrix::zeros(d, d);
            s[(k, l)] = C64::new(1.0, 0.0);
            s[(l, k)] = C64::new(1.0, 0.0);
            out.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(k, l)] = C64::new(0.0, -1.0);
            a[(l, k)] = C64::new(0.0, 1.0);
            out.push(a);
        }
    }
    out
}

impl Reconstructor {
    pub fn new(settings: &[TomographySetting]) -> Result<Self> {
        let space = two_qubit_space();
        let d = space.dim();
        let basis = hermitian_basis(d);
        let rows = settings.len() + 1;
        let mut a = DMatrix::<f64>::zeros(rows, basis.len());
        for (j, b) in basis.iter().enumerate() {
            a[(0, j)] = b.trace().re;
            for (i, s) in settings.iter().enumerate() {
                if s.observable.space() != &space {
                    return Err(Error::SpaceMismatch(format!("setting `{}` not on {space}", s.label)));
                }
                s.observable.require_hermitian()?;
                a[(i + 1, j)] = (s.observable.matrix() * b).trace().re;
            }
        }
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
        if rank < basis.len() {
            return Err(Error::RankDeficient {
                rank,
                needed: basis.len(),
            });
        }
        let pinv = svd.pseudo_inverse(1e-10 * smax).map_err(|e| invalid("settings", e))?;
        Ok(Self {
            dim: d,
            pinv,
            labels: settings.iter().map(|s| s.label.clone()).collect(),
        })
    }

    /// Unprojected linear-inversion estimate.
    pub fn linear_inversion(&self, estimates: &[f64]) -> Result<CMatrix> {
        if estimates.len() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                found: estimates.len(),
            });
        }
        let mut rhs = Vec::with_capacity(estimates.len() + 1);
        rhs.push(1.0);
        rhs.extend_from_slice(estimates);
        let coeffs = &self.pinv * nalgebra::DVector::from_vec(rhs);
        let basis = hermitian_basis(self.dim);
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (c, b) in coeffs.iter().zip(&basis) {
            m += b * C64::new(*c, 0.0);
        }
        Ok(m)
    }

    /// Linear inversion followed by projection onto the closest density matrix.
    pub fn reconstruct(&self, estimates: &[f64]) -> Result<DensityMatrix> {
        let m = self.linear_inversion(estimates)?;
        project_to_density(&Operator::new(two_qubit_space(), m)?.hermitian_part())
    }
}

/// Closest unit-trace PSD matrix in Frobenius norm to a Hermitian unit-trace
/// `m`: negative eigenvalues are zeroed from the bottom up and their weight
/// spread evenly over the remaining ones.
pub fn project_to_density(m: &Operator) -> Result<DensityMatrix> {
    let (mut values, vectors) = eig_hermitian(m)?;
    let tr: f64 = values.iter().sum();
    let d = values.len();
    for v in &mut values {
        *v += (1.0 - tr) / d as f64;
    }
    let mut acc = 0.0;
    let mut keep = d;
    while keep > 0 && values[keep - 1] + acc / (keep as f64) < 0.0 {
        acc += values[keep - 1];
        values[keep - 1] = 0.0;
        keep -= 1;
    }
    for v in values.iter_mut().take(keep) {
        *v += acc / keep as f64;
    }
    let v = vectors.matrix();
    let scaled = CMatrix::from_fn(d, d, |i, j| v[(i, j)] * values[j]);
    let rho = scaled * v.adjoint();
    let rho = (&rho + rho.adjoint()).map(|z| z * 0.5);
    DensityMatrix::new(m.space().clone(), rho)
}

/// Linear inversion plus PSD projection of a record.
pub fn reconstruct(record: &TomographyRecord, settings: &[TomographySetting]) -> Result<DensityMatrix> {
    record.validate(settings)?;
    let est: Vec<f64> = record.entries.iter().map(|e| e.estimate).collect();
    Reconstructor::new(settings)?.reconstruct(&est)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    /// Row-major standard deviations of the real parts.
    pub sigma_re: Vec<f64>,
    /// Row-major standard deviations of the imaginary parts.
    pub sigma_im: Vec<f64>,
    pub concurrence_mean: f64,
    pub concurrence_sigma: f64,
    pub n_resamples: usize,
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Parametric bootstrap: each resample redraws every setting's count
/// binomially around its recorded estimate. Resample `k` draws from stream
/// `k` of a generator seeded with `seed`.
pub fn bootstrap_errors(
    record: &TomographyRecord,
    settings: &[TomographySetting],
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapReport> {
    if n_resamples < MIN_RESAMPLES {
        return Err(invalid("tomography.n_resamples", format!("must be at least {MIN_RESAMPLES}")));
    }
    record.validate(settings)?;
    let recon = Reconstructor::new(settings)?;
    let samples: Vec<DensityMatrix> = (0..n_resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let est: Vec<f64> = record
                .entries
                .iter()
                .map(|e| sample_estimate(&mut rng, e.estimate, e.shots, record.contrast))
                .collect();
            recon.reconstruct(&est)
        })
        .collect::<Result<_>>()?;
    let d = recon.dim;
    let mut sigma_re = Vec::with_capacity(d * d);
    let mut sigma_im = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let re: Vec<f64> = samples.iter().map(|r| r.get(i, j).re).collect();
            let im: Vec<f64> = samples.iter().map(|r| r.get(i, j).im).collect();
            sigma_re.push(std_dev(&re));
            sigma_im.push(std_dev(&im));
        }
    }
    let cs: Vec<f64> = samples.iter().map(concurrence).collect::<Result<_>>()?;
    Ok(BootstrapReport {
        sigma_re,
        sigma_im,
        concurrence_mean: cs.iter().sum::<f64>() / cs.len() as f64,
        concurrence_sigma: std_dev(&cs),
        n_resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{logical_index, phi_minus, prepare_bell, PreparationSpec};
    use crate::metrics::fidelity;

    #[test]
    fn settings_are_complete() {
        let s = pauli_settings();
        assert_eq!(s.len(), 15);
        assert!(s.iter().all(|x| x.observable.is_hermitian()));
        Reconstructor::new(&s).unwrap();
        assert!(matches!(Reconstructor::new(&s[..10]), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn noiseless_round_trip() {
        let s = pauli_settings();
        let rho = prepare_bell(&PreparationSpec::calibrated()).unwrap();
        let rec = TomographyRecord::noiseless(&rho, &s, 1).unwrap();
        let back = reconstruct(&rec, &s).unwrap();
        assert!((back.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-10));
        let pure = phi_minus();
        let back = reconstruct(&TomographyRecord::noiseless(&pure, &s, 1).unwrap(), &s).unwrap();
        assert!(fidelity(&back, &pure).unwrap() >= 0.999);
    }

    #[test]
    fn zero_record_gives_maximally_mixed() {
        let s = pauli_settings();
        let mut rec = TomographyRecord::noiseless(&phi_minus(), &s, 10).unwrap();
        for e in &mut rec.entries {
            e.estimate = 0.0;
        }
        let back = reconstruct(&rec, &s).unwrap();
        let mixed = DensityMatrix::maximally_mixed(&two_qubit_space());
        assert!((back.matrix() - mixed.matrix()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn readout_is_deterministic_and_rejects_zero_contrast() {
        let s = pauli_settings();
        let rho = phi_minus();
        let a = simulate_readout(&rho, &s, 1000, 0.3, 7).unwrap();
        let b = simulate_readout(&rho, &s, 1000, 0.3, 7).unwrap();
        assert_eq!(a, b);
        assert!(simulate_readout(&rho, &s, 1000, 0.0, 7).is_err());
        assert!(simulate_readout(&rho, &s, 0, 0.3, 7).is_err());
    }

    #[test]
    fn direct_population_difference() {
        let s = pauli_settings();
        let rho = DensityMatrix::from_operator(
            Operator::from_diagonal(&two_qubit_space(), &[0.4, 0.3, 0.2, 0.1]).unwrap(),
        )
        .unwrap();
        let zi = s.iter().position(|x| x.label == "ZI").unwrap();
        let shots = 1_000_000;
        let rec = simulate_readout(&rho, &s, shots, 1.0, 3).unwrap();
        let truth: f64 = 0.4 + 0.3 - 0.2 - 0.1;
        let sigma = (1.0 - truth * truth).sqrt() / (shots as f64).sqrt();
        assert!((rec.entries[zi].estimate - truth).abs() < 4.0 * sigma);
    }

    #[test]
    fn large_shot_limit_converges() {
        let s = pauli_settings();
        let rho = prepare_bell(&PreparationSpec::calibrated()).unwrap();
        let shots = 100_000_000u64;
        let c = 0.3;
        let rec = simulate_readout(&rho, &s, shots, c, 1).unwrap();
        for (e, set) in rec.entries.iter().zip(&s) {
            let truth = expectation(&rho, &set.observable).unwrap();
            let p = (1.0 + c * truth) / 2.0;
            let sigma = 2.0 * (p * (1.0 - p) / shots as f64).sqrt() / c;
            assert!((e.estimate - truth).abs() <= 3.0 * sigma, "{}", e.label);
        }
    }

    #[test]
    fn readout_z_scores_are_standard_normal() {
        let s = pauli_settings();
        let rho = prepare_bell(&PreparationSpec::calibrated()).unwrap();
        let (shots, c) = (100_000_000u64, 0.3);
        let mut zs = Vec::new();
        for seed in 0..40 {
            let rec = simulate_readout(&rho, &s, shots, c, seed).unwrap();
            for (e, set) in rec.entries.iter().zip(&s) {
                let truth = expectation(&rho, &set.observable).unwrap();
                let p = (1.0 + c * truth) / 2.0;
                zs.push((e.estimate - truth) / (2.0 * (p * (1.0 - p) / shots as f64).sqrt() / c));
            }
        }
        let n = zs.len() as f64;
        let mean = zs.iter().sum::<f64>() / n;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
        // 600 draws: σ(mean) ≈ 0.04, σ(var) ≈ 0.06
        assert!(mean.abs() < 0.15, "mean {mean}");
        assert!((var - 1.0).abs() < 0.25, "var {var}");
    }

    #[test]
    fn phi_minus_signature() {
        let s = pauli_settings();
        let rec = simulate_readout(&phi_minus(), &s, 1_000_000, 0.3, 5).unwrap();
        let rho = reconstruct(&rec, &s).unwrap();
        let (a, b) = (logical_index("00").unwrap(), logical_index("11").unwrap());
        let main = rho.get(a, b);
        assert!(main.re < -0.4);
        for i in 0..4 {
            for j in 0..4 {
                if i != j && !((i, j) == (a, b) || (i, j) == (b, a)) {
                    assert!(rho.get(i, j).norm() < main.norm() / 4.0);
                }
            }
        }
    }

    #[test]
    fn projection_clips_and_renormalizes() {
        let space = two_qubit_space();
        let m = Operator::from_diagonal(&space, &[0.7, 0.4, 0.1, -0.2]).unwrap();
        let p = project_to_density(&m).unwrap();
        // −0.2 removed, its weight spread: 0.7−0.2/3, 0.4−0.2/3, 0.1−0.2/3
        let want = [0.7 - 0.2 / 3.0, 0.4 - 0.2 / 3.0, 0.1 - 0.2 / 3.0, 0.0];
        for (k, w) in want.iter().enumerate() {
            assert!((p.get(k, k).re - w).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_is_deterministic_and_scales() {
        let s = pauli_settings();
        let rho = prepare_bell(&PreparationSpec::calibrated()).unwrap();
        let rec = simulate_readout(&rho, &s, 1_000_000, 0.3, 1).unwrap();
        let a = bootstrap_errors(&rec, &s, 200, 9).unwrap();
        let b = bootstrap_errors(&rec, &s, 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(bootstrap_errors(&rec, &s, 50, 9).is_err());
        let rec4 = simulate_readout(&rho, &s, 4_000_000, 0.3, 1).unwrap();
        let c = bootstrap_errors(&rec4, &s, 200, 9).unwrap();
        let ratio = a.concurrence_sigma / c.concurrence_sigma;
        assert!((ratio - 2.0).abs() <= 0.5, "ratio {ratio}");
        let big = simulate_readout(&rho, &s, 100_000_000, 0.3, 1).unwrap();
        assert!(bootstrap_errors(&big, &s, 200, 9).unwrap().concurrence_sigma < 0.005);
    }
}
