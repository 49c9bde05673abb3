// SPDX-License-Identifier: Apache-2.0

//! Cross-checks of the cluster expansion against exact diagonalization on
//! small baths.

use nvdyn::cce::{cce_coherence, CceSettings};
use nvdyn::dynamics::{electron_coherence, electron_plus, evolve_with_bath, make_hahn, make_pdd, PulseSequence};
use nvdyn::model::{sample_bath, BathConfiguration, SystemParams};
use serde::Serialize;

/// Full-order agreement required pointwise.
pub const FULL_ORDER_TOL: f64 = 1e-8;
/// Order-2 RMS deviation allowed.
pub const ORDER2_RMS_TOL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BathCheck {
    pub seed: u64,
    pub sequence: String,
    pub spins: usize,
    /// Largest pointwise |L_cce − L_exact| at full order.
    pub full_order_max_error: f64,
    /// RMS of the complex deviation at order 2.
    pub order2_rms: f64,
}

impl BathCheck {
    pub fn passed(&self) -> bool {
        self.full_order_max_error <= FULL_ORDER_TOL
            && self.order2_rms <= ORDER2_RMS_TOL
            && self.full_order_max_error <= self.order2_rms.max(FULL_ORDER_TOL)
    }
}

/// Deterministic bath of 2–6 spins: the nearest occupied sites of a dense
/// sample between 2.5 and 7 Å.
pub fn small_bath(seed: u64, params: &SystemParams) -> nvdyn::Result<BathConfiguration> {
    let want = 2 + (seed % 5) as usize;
    let mut s = seed;
    loop {
        let bath = sample_bath(s, 0.05, 2.5, 7.0, params)?;
        if bath.len() >= want {
            return Ok(bath.subset(&(0..want).collect::<Vec<_>>()));
        }
        s = s.wrapping_add(1_000_003);
    }
}

fn exact_curve(params: &SystemParams, bath: &BathConfiguration, seq: &PulseSequence, times: &[f64]) -> nvdyn::Result<Vec<nvdyn::linops::C64>> {
    evolve_with_bath(&electron_plus(), params, bath, seq, times)?
        .iter()
        .zip(times)
        .map(|(r, &t)| electron_coherence(r, seq.pulses_until(t) % 2 == 1))
        .collect()
}

/// Compares full-order and order-2 expansions with exact evolution under a
/// Hahn echo and PDD2, sampled 41 times over 40 μs, for `n_baths` seeds.
pub fn cce_vs_exact(params: &SystemParams, n_baths: u64) -> nvdyn::Result<Vec<BathCheck>> {
    let duration = 40e-6;
    let times: Vec<f64> = (0..=40).map(|k| duration * k as f64 / 40.0).collect();
    let seqs = [make_hahn(duration)?, make_pdd(2, duration)?];
    let mut out = Vec::new();
    for seed in 0..n_baths {
        let bath = small_bath(seed, params)?;
        for seq in &seqs {
            let exact = exact_curve(params, &bath, seq, &times)?;
            let full = CceSettings {
                max_order: bath.len(),
                pair_cutoff: 0.0,
            };
            let two = CceSettings {
                max_order: 2,
                pair_cutoff: 0.0,
            };
            let lf = cce_coherence(&bath, params, seq, &times, &full)?.curve;
            let l2 = cce_coherence(&bath, params, seq, &times, &two)?.curve;
            let full_err = lf.values().iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let ms = l2.values().iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / times.len() as f64;
            out.push(BathCheck {
                seed,
                sequence: seq.label().to_string(),
                spins: bath.len(),
                full_order_max_error: full_err,
                order2_rms: ms.sqrt(),
            });
        }
    }
    Ok(out)
}
