// SPDX-License-Identifier: Apache-2.0

//! One simulation run: bath sampling, coherence, two-qubit decay, analysis
//! and optional tomography.

use nvdyn::cce::{ancilla_decay, cce_coherence_endpoints, decohere, CoherenceCurve};
use nvdyn::dynamics::{
    electron_coherence, electron_plus, evolve_endpoints, evolve_with_bath_endpoints, phi_minus,
    prepare_bell, system_hamiltonian_for,
};
use nvdyn::linops::{partial_trace, DensityMatrix, SpaceLabel, C64};
use nvdyn::metrics::{concurrence, fidelity, non_markovianity, NonMarkovReport, TimeSeries};
use nvdyn::model::{sample_bath, BathConfiguration, ANCILLA, ELECTRON, NITROGEN};
use nvdyn::tomography::{bootstrap_errors, pauli_settings, reconstruct, simulate_readout, BootstrapReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BathMethod, RunConfig};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub concurrence: Vec<f64>,
    pub coherence_abs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concurrence_sigma: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Bath size of each realisation.
    pub bath_spins: Vec<usize>,
    /// Clusters per order, summed over realisations.
    pub clusters_per_order: Vec<usize>,
    pub guard_hits: usize,
    pub clipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Preparation {
    pub fidelity: f64,
    pub concurrence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomographyOutput {
    pub reconstructed: Vec<DensityMatrix>,
    pub concurrence: Vec<f64>,
    pub bootstrap: Vec<BootstrapReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub report: NonMarkovReport,
    pub states: Vec<DensityMatrix>,
    pub preparation: Preparation,
    pub diagnostics: Diagnostics,
    pub tomography: Option<TomographyOutput>,
}

fn numerical(e: nvdyn::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

/// The bath realisations of a run.
pub fn sample_baths(cfg: &RunConfig) -> Result<Vec<BathConfiguration>, CliError> {
    let b = &cfg.bath;
    (0..b.n_seeds as u64)
        .map(|k| {
            sample_bath(b.seed.wrapping_add(k), b.abundance, b.r_min, b.r_max, &cfg.system)
                .map_err(|e| CliError::Config(e.to_string()))
        })
        .collect()
}

/// Ensemble-averaged CCE coherence along the trajectory grid.
pub fn bath_coherence(
    cfg: &RunConfig,
    baths: &[BathConfiguration],
    times: &[f64],
    diag: &mut Diagnostics,
) -> Result<CoherenceCurve, CliError> {
    let shape = cfg.sequence.shape();
    let settings = cfg.bath.cce();
    let results = baths
        .par_iter()
        .map(|bath| cce_coherence_endpoints(bath, &cfg.system, shape, times, &settings))
        .collect::<Result<Vec<_>, _>>()
        .map_err(numerical)?;
    diag.clusters_per_order = vec![0; settings.max_order];
    let mut curves = Vec::with_capacity(results.len());
    for r in results {
        for (total, n) in diag.clusters_per_order.iter_mut().zip(&r.clusters_per_order) {
            *total += n;
        }
        diag.guard_hits += r.guard_hits;
        diag.clipped += r.clipped;
        curves.push(r.curve);
    }
    CoherenceCurve::average(&curves).map_err(numerical)
}

fn system_initial_state(cfg: &RunConfig) -> Result<DensityMatrix, CliError> {
    let rho = prepare_bell(&cfg.preparation).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.system.n14.is_some() {
        // the spectator starts unpolarized
        let n14 = SpaceLabel::single(NITROGEN, 3).map_err(numerical)?;
        rho.tensor(&DensityMatrix::maximally_mixed(&n14)).map_err(numerical)
    } else {
        Ok(rho)
    }
}

fn two_qubit(states: Vec<DensityMatrix>) -> Result<Vec<DensityMatrix>, CliError> {
    states
        .iter()
        .map(|r| {
            if r.space().len() == 2 {
                Ok(r.clone())
            } else {
                partial_trace(r, &[ELECTRON, ANCILLA]).map_err(numerical)
            }
        })
        .collect()
}

/// Runs the configured experiment.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let times = cfg.sequence.times();
    let shape = cfg.sequence.shape();
    let rho_sys = system_initial_state(cfg)?;
    let rho_prep = prepare_bell(&cfg.preparation).map_err(numerical)?;
    let preparation = Preparation {
        fidelity: fidelity(&rho_prep, &phi_minus()).map_err(numerical)?,
        concurrence: concurrence(&rho_prep).map_err(numerical)?,
    };
    let baths = sample_baths(cfg)?;
    let mut diagnostics = Diagnostics {
        bath_spins: baths.iter().map(BathConfiguration::len).collect(),
        ..Default::default()
    };

    let decay: Vec<f64> = times
        .iter()
        .map(|&t| ancilla_decay(cfg.decay.profile, t, cfg.system.t2n_star))
        .collect();

    let (states, coherence): (Vec<DensityMatrix>, Vec<C64>) = match cfg.bath.method {
        BathMethod::Cce => {
            let h = system_hamiltonian_for(rho_sys.space(), &cfg.system).map_err(numerical)?;
            let free = two_qubit(evolve_endpoints(&rho_sys, &h, shape, &times).map_err(numerical)?)?;
            let curve = bath_coherence(cfg, &baths, &times, &mut diagnostics)?;
            let states = free
                .iter()
                .zip(curve.values())
                .zip(curve.flipped())
                .zip(&decay)
                .map(|(((r, &l), &f), &g)| decohere(r, l, f, g))
                .collect::<Result<_, _>>()
                .map_err(numerical)?;
            (states, curve.values().to_vec())
        }
        BathMethod::Exact => exact_states(cfg, &baths, &rho_sys, &times, &decay)?,
    };

    for s in &states {
        s.validate().map_err(numerical)?;
    }
    let conc: Vec<f64> = states.iter().map(concurrence).collect::<Result<_, _>>().map_err(numerical)?;
    let series = TimeSeries::new(times.clone(), conc.clone()).map_err(numerical)?;
    let (t0, tmax) = cfg.window();
    let report = non_markovianity(&series, t0, tmax).map_err(numerical)?;

    let tomography = if cfg.tomography.enabled {
        Some(run_tomography(cfg, &states)?)
    } else {
        None
    };
    let trajectory = Trajectory {
        times,
        concurrence: conc,
        coherence_abs: coherence.iter().map(|z| z.norm()).collect(),
        concurrence_sigma: tomography
            .as_ref()
            .map(|t| t.bootstrap.iter().map(|b| b.concurrence_sigma).collect()),
    };
    Ok(RunOutcome {
        trajectory,
        report,
        states,
        preparation,
        diagnostics,
        tomography,
    })
}

/// Exact propagation per bath realisation, averaged over realisations.
fn exact_states(
    cfg: &RunConfig,
    baths: &[BathConfiguration],
    rho_sys: &DensityMatrix,
    times: &[f64],
    decay: &[f64],
) -> Result<(Vec<DensityMatrix>, Vec<C64>), CliError> {
    let shape = cfg.sequence.shape();
    let flipped: Vec<bool> = times.iter().map(|&t| t > 0.0 && shape.pulse_count() % 2 == 1).collect();
    let per_bath = baths
        .par_iter()
        .map(|bath| {
            let sys = evolve_with_bath_endpoints(rho_sys, &cfg.system, bath, shape, times)?;
            let plus = evolve_with_bath_endpoints(&electron_plus(), &cfg.system, bath, shape, times)?;
            let l = plus
                .iter()
                .zip(&flipped)
                .map(|(r, &f)| electron_coherence(r, f))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((sys, l))
        })
        .collect::<Result<Vec<_>, nvdyn::Error>>()
        .map_err(|e| match e {
            nvdyn::Error::BathTooLarge { .. } => CliError::Config(format!("bath.method: {e}")),
            other => numerical(other),
        })?;
    let n = per_bath.len() as f64;
    let mut states = Vec::with_capacity(times.len());
    let mut coherence = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let mut mat = per_bath[0].0[k].matrix() * C64::new(0.0, 0.0);
        let mut l = C64::new(0.0, 0.0);
        for (sys, ls) in &per_bath {
            mat += sys[k].matrix();
            l += ls[k];
        }
        let avg = DensityMatrix::new(per_bath[0].0[k].space().clone(), mat / C64::new(n, 0.0))
            .map_err(numerical)?;
        let two = two_qubit(vec![avg])?.remove(0);
        states.push(decohere(&two, C64::new(1.0, 0.0), false, decay[k]).map_err(numerical)?);
        coherence.push(l / n);
    }
    Ok((states, coherence))
}

/// Readout, reconstruction and bootstrap for every sampled state. State `k`
/// is read out with seed `seed + 2k` and bootstrapped with `seed + 2k + 1`.
pub fn run_tomography(cfg: &RunConfig, states: &[DensityMatrix]) -> Result<TomographyOutput, CliError> {
    let t = &cfg.tomography;
    let settings = pauli_settings();
    let rows = states
        .par_iter()
        .enumerate()
        .map(|(k, rho)| {
            let base = t.seed.wrapping_add(2 * k as u64);
            let record = simulate_readout(rho, &settings, t.shots, t.contrast, base)?;
            let rec = reconstruct(&record, &settings)?;
            let c = concurrence(&rec)?;
            let boot = bootstrap_errors(&record, &settings, t.n_resamples, base.wrapping_add(1))?;
            Ok((rec, c, boot))
        })
        .collect::<Result<Vec<_>, nvdyn::Error>>()
        .map_err(numerical)?;
    let mut out = TomographyOutput {
        reconstructed: Vec::with_capacity(rows.len()),
        concurrence: Vec::with_capacity(rows.len()),
        bootstrap: Vec::with_capacity(rows.len()),
    };
    for (r, c, b) in rows {
        out.reconstructed.push(r);
        out.concurrence.push(c);
        out.bootstrap.push(b);
    }
    Ok(out)
}
