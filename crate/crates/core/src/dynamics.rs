// SPDX-License-Identifier: Apache-2.0

//! Pulse sequences and time evolution.
//!
//! Pulses are ideal instantaneous rotations `exp(−i θ n·S)` on a named
//! subsystem. A pulse scheduled exactly at a sample time is applied before the
//! state is recorded.
//!
//! The working electron subspace is `{Ms=+1, Ms=0}` (physical indices 0 and
//! 1). Qubit labels follow the level names: electron `1` is Ms=+1 and `0` is
//! Ms=0; ancilla `1` is MI=+1/2 and `0` is MI=−1/2. Label `ab` is therefore the
//! physical basis state with digits `(1−a, 1−b)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linops::{
    expm_hermitian, kron, partial_trace, spin_operators_on, CMatrix, DensityMatrix, Operator,
    Propagator, SpaceLabel, C64, ZERO,
};
use crate::metrics::{concurrence, fidelity};
use crate::model::{system_hamiltonian, BathConfiguration, SystemParams, ANCILLA, ELECTRON, NITROGEN};

/// Largest bath handled by [`evolve_with_bath`].
pub const EXACT_BATH_LIMIT: usize = 8;

/// Instantaneous rotation by `angle` about `axis` on subsystem `target`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub time: f64,
    pub target: String,
    pub axis: [f64; 3],
    pub angle: f64,
}

impl Pulse {
    pub fn pi_x(time: f64, target: &str) -> Self {
        Self {
            time,
            target: target.to_string(),
            axis: [1.0, 0.0, 0.0],
            angle: PI,
        }
    }

    /// Unitary on the whole of `space`.
    pub fn unitary(&self, space: &SpaceLabel) -> Result<Operator> {
        let dim = space
            .dim_of(&self.target)
            .ok_or_else(|| Error::UnknownSubsystem(self.target.clone()))?;
        let spin = (dim as f64 - 1.0) / 2.0;
        let [sx, sy, sz] = spin_operators_on(&self.target, spin)?;
        let gen = &(&sx.scale(self.axis[0]) + &sy.scale(self.axis[1])) + &sz.scale(self.axis[2]);
        // exp(−i θ n·S) = exp(−i 2π (θ/2π) n·S)
        let local = expm_hermitian(&gen.scale(self.angle / (2.0 * PI)), 1.0)?;
        local.embed(space)
    }
}

/// Time-ordered pulses over `[0, duration]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    duration: f64,
    pulses: Vec<Pulse>,
    label: String,
}

impl PulseSequence {
    pub fn new(duration: f64, pulses: Vec<Pulse>, label: impl Into<String>) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(invalid("duration", format!("{duration} is not positive")));
        }
        for p in &pulses {
            if !(0.0..=duration).contains(&p.time) {
                return Err(invalid("pulse.time", format!("{} outside [0, {duration}]", p.time)));
            }
            let n = (p.axis.iter().map(|x| x * x).sum::<f64>()).sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(invalid("pulse.axis", "axis must be a unit vector"));
            }
        }
        if pulses.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(invalid("pulses", "pulse times must be strictly increasing"));
        }
        Ok(Self {
            duration,
            pulses,
            label: label.into(),
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of pulses applied by time `t` (inclusive).
    pub fn pulses_until(&self, t: f64) -> usize {
        self.pulses.partition_point(|p| p.time <= t)
    }
}

/// Free-induction sequence: no pulses.
pub fn make_fid(duration: f64) -> Result<PulseSequence> {
    PulseSequence::new(duration, Vec::new(), "fid")
}

/// `n_pulses` π-x pulses on the electron at `(k − ½)·duration/n_pulses`.
pub fn make_pdd(n_pulses: usize, duration: f64) -> Result<PulseSequence> {
    if n_pulses == 0 {
        return Err(invalid("n_pulses", "must be at least 1"));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(invalid("duration", format!("{duration} is not positive")));
    }
    let spacing = duration / n_pulses as f64;
    let pulses = (1..=n_pulses)
        .map(|k| Pulse::pi_x((k as f64 - 0.5) * spacing, ELECTRON))
        .collect();
    PulseSequence::new(duration, pulses, format!("pdd{n_pulses}"))
}

/// Hahn echo: a single π pulse at mid-sequence.
pub fn make_hahn(duration: f64) -> Result<PulseSequence> {
    let mut seq = make_pdd(1, duration)?;
    seq.label = "hahn".into();
    Ok(seq)
}

/// Family of sequences parameterised by total duration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Fid,
    Hahn,
    Pdd,
}

/// Sequence family plus pulse count; `n_pulses` is ignored for FID and Hahn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SequenceShape {
    pub kind: SequenceKind,
    pub n_pulses: usize,
}

impl SequenceShape {
    pub fn build(&self, duration: f64) -> Result<PulseSequence> {
        match self.kind {
            SequenceKind::Fid => make_fid(duration),
            SequenceKind::Hahn => make_hahn(duration),
            SequenceKind::Pdd => make_pdd(self.n_pulses, duration),
        }
    }

    pub fn pulse_count(&self) -> usize {
        match self.kind {
            SequenceKind::Fid => 0,
            SequenceKind::Hahn => 1,
            SequenceKind::Pdd => self.n_pulses,
        }
    }
}

/// Electron + ancilla working space, `e[2] ⊗ n[2]`.
pub fn two_qubit_space() -> SpaceLabel {
    SpaceLabel::new([(ELECTRON, 2), (ANCILLA, 2)]).expect("static labels")
}

/// Physical index of a two-qubit label such as `"01"`.
pub fn logical_index(label: &str) -> Result<usize> {
    let bits: Vec<usize> = label
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(invalid("label", format!("`{label}` is not a two-qubit label"))),
        })
        .collect::<Result<_>>()?;
    if bits.len() != 2 {
        return Err(invalid("label", format!("`{label}` is not a two-qubit label")));
    }
    Ok((1 - bits[0]) * 2 + (1 - bits[1]))
}

/// The target Bell state (|00⟩ − |11⟩)/√2.
pub fn phi_minus() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = vec![ZERO; 4];
    psi[logical_index("00").unwrap()] = C64::new(s, 0.0);
    psi[logical_index("11").unwrap()] = C64::new(-s, 0.0);
    DensityMatrix::pure(&two_qubit_space(), &psi).expect("normalized")
}

/// Imperfect Bell-state preparation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreparationSpec {
    /// Nuclear polarization degree P; the ancilla starts with populations
    /// (1+P)/2 in `0` and (1−P)/2 in `1`.
    pub polarization: f64,
    /// Systematic over-rotation of the nuclear π/2 pulse, rad.
    pub pulse_angle_error: f64,
}

/// Result of [`calibrate_preparation`].
pub const CALIBRATED_POLARIZATION: f64 = 1.0;
/// Result of [`calibrate_preparation`].
pub const CALIBRATED_ANGLE_ERROR: f64 = 0.81;

impl PreparationSpec {
    pub fn ideal() -> Self {
        Self {
            polarization: 1.0,
            pulse_angle_error: 0.0,
        }
    }

    /// Pair returned by the default calibration grid search against the
    /// measured fidelity 0.88 and concurrence 0.67.
    pub fn calibrated() -> Self {
        Self {
            polarization: CALIBRATED_POLARIZATION,
            pulse_angle_error: CALIBRATED_ANGLE_ERROR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.polarization) {
            return Err(invalid("preparation.polarization", "must lie in [0, 1]"));
        }
        if !self.pulse_angle_error.is_finite() {
            return Err(invalid("preparation.pulse_angle_error", "must be finite"));
        }
        Ok(())
    }
}

impl Default for PreparationSpec {
    fn default() -> Self {
        Self::calibrated()
    }
}

/// Rotation by `angle` about `axis` inside the two-level transition `upper ↔ lower`.
fn transition_rotation(upper: &str, lower: &str, angle: f64, axis: [f64; 3]) -> Result<Operator> {
    let (a, b) = (logical_index(upper)?, logical_index(lower)?);
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let mi = C64::new(0.0, -s);
    let mut u = CMatrix::identity(4, 4);
    u[(a, a)] = C64::new(c, 0.0) + mi * axis[2];
    u[(b, b)] = C64::new(c, 0.0) - mi * axis[2];
    u[(a, b)] = mi * C64::new(axis[0], -axis[1]);
    u[(b, a)] = mi * C64::new(axis[0], axis[1]);
    Operator::new(two_qubit_space(), u)
}

/// Prepares φ⁻: MW π on `00↔10`, RF π/2 on `10↔11`, MW π on `00↔10`, applied
/// to the partially polarized `|0⟩_e` state.
pub fn prepare_bell(spec: &PreparationSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    let space = two_qubit_space();
    let p = spec.polarization;
    let mut diag = [0.0; 4];
    diag[logical_index("00")?] = (1.0 + p) / 2.0;
    diag[logical_index("01")?] = (1.0 - p) / 2.0;
    let mut rho = DensityMatrix::from_operator(Operator::from_diagonal(&space, &diag)?)?;
    let steps = [
        transition_rotation("00", "10", PI, [1.0, 0.0, 0.0])?,
        transition_rotation("10", "11", PI / 2.0 + spec.pulse_angle_error, [-1.0, 0.0, 0.0])?,
        transition_rotation("00", "10", PI, [1.0, 0.0, 0.0])?,
    ];
    for u in &steps {
        rho = rho.conjugate_by(u)?;
    }
    Ok(rho)
}

/// Outcome of [`calibrate_preparation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub spec: PreparationSpec,
    pub fidelity: f64,
    pub concurrence: f64,
}

/// Grid search for the preparation that best matches a target
/// (fidelity, concurrence) pair in squared distance. Ties keep the first
/// grid point in `(polarization, angle error)` order.
pub fn calibrate_preparation(
    target_fidelity: f64,
    target_concurrence: f64,
    polarizations: &[f64],
    angle_errors: &[f64],
) -> Result<Calibration> {
    let target = phi_minus();
    let mut best: Option<(f64, Calibration)> = None;
    for &p in polarizations {
        for &e in angle_errors {
            let spec = PreparationSpec {
                polarization: p,
                pulse_angle_error: e,
            };
            let rho = prepare_bell(&spec)?;
            let f = fidelity(&rho, &target)?;
            let c = concurrence(&rho)?;
            let d = (f - target_fidelity).powi(2) + (c - target_concurrence).powi(2);
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((
                    d,
                    Calibration {
                        spec,
                        fidelity: f,
                        concurrence: c,
                    },
                ));
            }
        }
    }
    best.map(|(_, c)| c)
        .ok_or_else(|| invalid("calibration", "empty search grid"))
}

/// The grid used for the default calibration: polarization in steps of 0.01
/// over `[0, 1]`, angle error in steps of 0.005 rad over `[0, π/2]`.
pub fn default_calibration_grid() -> (Vec<f64>, Vec<f64>) {
    let p = (0..=100).map(|k| k as f64 * 0.01).collect();
    let e = (0..=314).map(|k| k as f64 * 0.005).collect();
    (p, e)
}

fn check_times(times: &[f64], duration: f64) -> Result<()> {
    let sorted = times.windows(2).all(|w| w[1] >= w[0]);
    let inside = times.iter().all(|&t| (0.0..=duration).contains(&t));
    if !sorted || !inside {
        return Err(Error::InvalidTimes { duration });
    }
    Ok(())
}

fn propagate(rho: &mut CMatrix, u: &CMatrix) {
    let next = u * &*rho * u.adjoint();
    *rho = (&next + next.adjoint()).map(|z| z * 0.5);
}

/// Piecewise evolution under a static Hamiltonian `h` (Hz) interleaved with
/// the pulses of `seq`; returns the state at each sample time.
pub fn evolve(
    rho0: &DensityMatrix,
    h: &Operator,
    seq: &PulseSequence,
    sample_times: &[f64],
) -> Result<Vec<DensityMatrix>> {
    check_space(rho0, h)?;
    evolve_with(rho0, &Propagator::new(h)?, seq, sample_times)
}

fn check_space(rho0: &DensityMatrix, h: &Operator) -> Result<()> {
    if h.space() != rho0.space() {
        return Err(Error::SpaceMismatch(format!(
            "Hamiltonian on {} but state on {}",
            h.space(),
            rho0.space()
        )));
    }
    Ok(())
}

fn evolve_with(
    rho0: &DensityMatrix,
    prop: &Propagator,
    seq: &PulseSequence,
    sample_times: &[f64],
) -> Result<Vec<DensityMatrix>> {
    check_times(sample_times, seq.duration())?;
    let space = rho0.space().clone();
    let pulse_ops: Vec<CMatrix> = seq
        .pulses()
        .iter()
        .map(|p| p.unitary(&space).map(Operator::into_matrix))
        .collect::<Result<_>>()?;

    let mut rho = rho0.matrix().clone();
    let mut now = 0.0;
    let mut next_pulse = 0;
    let mut out = Vec::with_capacity(sample_times.len());
    for &ts in sample_times {
        while next_pulse < pulse_ops.len() && seq.pulses()[next_pulse].time <= ts {
            let tp = seq.pulses()[next_pulse].time;
            if tp > now {
                propagate(&mut rho, &prop.matrix_at(tp - now));
                now = tp;
            }
            propagate(&mut rho, &pulse_ops[next_pulse]);
            next_pulse += 1;
        }
        if ts > now {
            propagate(&mut rho, &prop.matrix_at(ts - now));
            now = ts;
        }
        out.push(DensityMatrix::from_parts_unchecked(space.clone(), rho.clone()));
    }
    Ok(out)
}

fn endpoints_with(
    rho0: &DensityMatrix,
    prop: &Propagator,
    shape: SequenceShape,
    durations: &[f64],
) -> Result<Vec<DensityMatrix>> {
    durations
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(rho0.clone());
            }
            let seq = shape.build(t)?;
            Ok(evolve_with(rho0, prop, &seq, &[t])?.remove(0))
        })
        .collect()
}

/// Final state of `shape.build(T)` for every `T` in `durations`; `T = 0`
/// returns `rho0`.
pub fn evolve_endpoints(
    rho0: &DensityMatrix,
    h: &Operator,
    shape: SequenceShape,
    durations: &[f64],
) -> Result<Vec<DensityMatrix>> {
    check_space(rho0, h)?;
    endpoints_with(rho0, &Propagator::new(h)?, shape, durations)
}

/// Rotating-frame Hamiltonian matching a system space made of `e[2]` and
/// optionally `n[2]` and `N14[3]`, in that order.
pub fn system_hamiltonian_for(space: &SpaceLabel, params: &SystemParams) -> Result<Operator> {
    let with_n = space.contains(ANCILLA);
    let with_n14 = space.contains(NITROGEN);
    let h = system_hamiltonian(params, with_n, with_n14)?;
    if h.space() != space {
        return Err(Error::SpaceMismatch(format!(
            "system state on {space}, expected {}",
            h.space()
        )));
    }
    Ok(h)
}

/// Projector onto one electron level (`0` = Ms=+1, `1` = Ms=0), embedded in `space`.
fn electron_projector(space: &SpaceLabel, level: usize) -> Result<Operator> {
    let mut diag = [0.0; 2];
    diag[level] = 1.0;
    Operator::from_diagonal(&SpaceLabel::single(ELECTRON, 2)?, &diag)?.embed(space)
}

/// Full system + bath Hamiltonian in the rotating frame.
pub fn system_bath_hamiltonian(
    system_space: &SpaceLabel,
    params: &SystemParams,
    bath: &BathConfiguration,
) -> Result<Operator> {
    let h_sys = system_hamiltonian_for(system_space, params)?;
    let members: Vec<usize> = (0..bath.len()).collect();
    let (h0, h1) = bath.conditional_hamiltonians(params, &members)?;
    let bath_space = h0.space().clone();
    let p_plus = electron_projector(system_space, 0)?;
    let p_zero = electron_projector(system_space, 1)?;
    let total = &(&kron(&h_sys, &Operator::identity(&bath_space))? + &kron(&p_zero, &h0)?)
        + &kron(&p_plus, &h1)?;
    Ok(total.hermitian_part())
}

/// Exact evolution of system ⊗ bath with the bath starting maximally mixed;
/// returns the reduced system state at each sample time.
pub fn evolve_with_bath(
    rho0: &DensityMatrix,
    params: &SystemParams,
    bath: &BathConfiguration,
    seq: &PulseSequence,
    sample_times: &[f64],
) -> Result<Vec<DensityMatrix>> {
    with_bath(rho0, params, bath, |full, prop| evolve_with(full, prop, seq, sample_times))
}

/// [`evolve_with_bath`] at the end of `shape.build(T)` for each `T` in
/// `durations`, sharing one diagonalization.
pub fn evolve_with_bath_endpoints(
    rho0: &DensityMatrix,
    params: &SystemParams,
    bath: &BathConfiguration,
    shape: SequenceShape,
    durations: &[f64],
) -> Result<Vec<DensityMatrix>> {
    with_bath(rho0, params, bath, |full, prop| endpoints_with(full, prop, shape, durations))
}

fn with_bath(
    rho0: &DensityMatrix,
    params: &SystemParams,
    bath: &BathConfiguration,
    run: impl Fn(&DensityMatrix, &Propagator) -> Result<Vec<DensityMatrix>>,
) -> Result<Vec<DensityMatrix>> {
    if bath.len() > EXACT_BATH_LIMIT {
        return Err(Error::BathTooLarge {
            size: bath.len(),
            limit: EXACT_BATH_LIMIT,
        });
    }
    let system_space = rho0.space().clone();
    if bath.is_empty() {
        let h = system_hamiltonian_for(&system_space, params)?;
        return run(rho0, &Propagator::new(&h)?);
    }
    let h = system_bath_hamiltonian(&system_space, params, bath)?;
    let bath_space = BathConfiguration::cluster_space(&(0..bath.len()).collect::<Vec<_>>())?;
    let full = rho0.tensor(&DensityMatrix::maximally_mixed(&bath_space))?;
    let keep: Vec<&str> = system_space.names().collect();
    run(&full, &Propagator::new(&h)?)?
        .iter()
        .map(|r| partial_trace(r, &keep))
        .collect()
}

/// Electron `|+⟩ = (|Ms=+1⟩ + |Ms=0⟩)/√2`.
pub fn electron_plus() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::pure(
        &SpaceLabel::single(ELECTRON, 2).expect("static label"),
        &[C64::new(s, 0.0), C64::new(s, 0.0)],
    )
    .expect("normalized")
}

/// Electron coherence `tr[U⁽⁰⁾ ρ_B U⁽¹⁾†]` read off a state evolved from
/// `|+⟩`, where `U⁽ᵐ⁾` is the bath propagator of the branch that started in
/// level `m`. `flipped` is true after an odd number of π pulses.
pub fn electron_coherence(rho: &DensityMatrix, flipped: bool) -> Result<C64> {
    let e = partial_trace(rho, &[ELECTRON])?;
    // the Ms=0 branch sits in row 1 before an odd flip count and in row 0 after
    let value = if flipped { e.get(0, 1) } else { e.get(1, 0) };
    Ok(value * 2.0)
}

/// Identity-check helper: `true` when the operator is `c·I` for some phase `c`.
pub fn is_scalar_identity(u: &Operator, tol: f64) -> bool {
    let c = u.get(0, 0);
    (u - &Operator::identity(u.space()).scale_complex(c)).max_abs() <= tol && (c.norm() - 1.0).abs() <= tol
}
