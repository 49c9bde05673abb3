// SPDX-License-Identifier: Apache-2.0

use nvdyn::cce::{apply_decay, cce_coherence, decohere, CceSettings, CoherenceCurve, DecayProfile};
use nvdyn::dynamics::{evolve, make_pdd, phi_minus, two_qubit_space, PulseSequence, Pulse};
use nvdyn::linops::{
    kron, partial_trace, spin_operators_on, CMatrix, DensityMatrix, Operator, SpaceLabel, C64,
};
use nvdyn::metrics::{concurrence, fidelity, non_markovianity, purity, total_variation, TimeSeries};
use nvdyn::model::{BathConfiguration, SystemParams, ELECTRON};
use nvdyn::tomography::{pauli_settings, reconstruct, TomographyRecord};
use proptest::prelude::*;

fn complex_matrix(d: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d)
        .prop_map(move |v| CMatrix::from_fn(d, d, |i, j| C64::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1])))
}

/// G·G† / tr, full rank with probability one.
fn state_on(space: SpaceLabel) -> impl Strategy<Value = DensityMatrix> {
    complex_matrix(space.dim()).prop_map(move |g| {
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix::new(space.clone(), m / tr).unwrap()
    })
}

fn two_qubit_state() -> impl Strategy<Value = DensityMatrix> {
    state_on(two_qubit_space())
}

fn qubit_state(name: &'static str) -> impl Strategy<Value = DensityMatrix> {
    state_on(SpaceLabel::single(name, 2).unwrap())
}

/// exp(−i H) for a random Hermitian H on one qubit.
fn local_unitary(name: &'static str) -> impl Strategy<Value = Operator> {
    complex_matrix(2).prop_map(move |g| {
        let h = Operator::new(SpaceLabel::single(name, 2).unwrap(), &g + g.adjoint()).unwrap();
        nvdyn::linops::expm_hermitian(&h, 1.0).unwrap()
    })
}

fn series() -> impl Strategy<Value = TimeSeries> {
    prop::collection::vec(0.0f64..1.0, 2..60).prop_map(|v| {
        let t = (0..v.len()).map(|k| k as f64 * 1e-6).collect();
        TimeSeries::new(t, v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concurrence_is_local_unitary_invariant(
        rho in two_qubit_state(),
        u in local_unitary("e"),
        v in local_unitary("n"),
    ) {
        let uv = kron(&u, &v).unwrap();
        let c0 = concurrence(&rho).unwrap();
        let c1 = concurrence(&rho.conjugate_by(&uv).unwrap()).unwrap();
        prop_assert!((c0 - c1).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&c0));
    }

    #[test]
    fn product_states_are_unentangled(a in qubit_state("e"), b in qubit_state("n")) {
        prop_assert!(concurrence(&a.tensor(&b).unwrap()).unwrap() <= 1e-10);
    }

    #[test]
    fn fidelity_is_symmetric(a in two_qubit_state(), b in two_qubit_state()) {
        prop_assert_eq!(fidelity(&a, &b).unwrap(), fidelity(&b, &a).unwrap());
    }

    #[test]
    fn purity_of_mixture_bounded(a in two_qubit_state(), b in two_qubit_state(), w in 0.0f64..1.0) {
        let m = a.mix(&b, w).unwrap();
        prop_assert!(purity(&m) <= purity(&a).max(purity(&b)) + 1e-12);
        prop_assert!(purity(&m) > 0.0 && purity(&m) <= 1.0 + 1e-12);
    }

    #[test]
    fn total_variation_additive_at_sample_points(ts in series(), cut in 0.0f64..1.0) {
        let n = ts.len();
        let k = ((n - 1) as f64 * cut).round() as usize;
        prop_assume!(k > 0 && k < n - 1);
        let left = TimeSeries::new(ts.times()[..=k].to_vec(), ts.values()[..=k].to_vec()).unwrap();
        let right = TimeSeries::new(ts.times()[k..].to_vec(), ts.values()[k..].to_vec()).unwrap();
        let whole = total_variation(&ts);
        prop_assert!((whole - total_variation(&left) - total_variation(&right)).abs() <= 1e-12);
    }

    #[test]
    fn measure_is_non_negative_and_consistent(ts in series()) {
        let (t0, t1) = (ts.times()[0], *ts.times().last().unwrap());
        let r = non_markovianity(&ts, t0, t1).unwrap();
        prop_assert!(r.measure >= -1e-12);
        prop_assert!((r.measure - (r.total_variation - r.delta_e)).abs() <= 1e-12);
        let non_increasing = ts.values().windows(2).all(|w| w[1] <= w[0]);
        prop_assert_eq!(r.measure == 0.0, non_increasing);
        prop_assert_eq!(r.revivals.is_empty(), non_increasing);
    }

    #[test]
    fn evolution_preserves_density_invariants(
        rho in two_qubit_state(),
        g in complex_matrix(4),
        t in 1e-9f64..1e-6,
    ) {
        let h = Operator::new(two_qubit_space(), (&g + g.adjoint()) * C64::new(1e6, 0.0)).unwrap();
        let seq = make_pdd(3, t).unwrap();
        let times = [0.0, t / 3.0, t / 2.0, t];
        for r in evolve(&rho, &h, &seq, &times).unwrap() {
            prop_assert!(r.validate().is_ok());
            prop_assert!((purity(&r) - purity(&rho)).abs() <= 1e-10);
        }
    }

    #[test]
    fn decay_keeps_states_valid(
        rho in two_qubit_state(),
        re in -1.0f64..1.0,
        im in -1.0f64..1.0,
        g in 0.0f64..1.0,
        flipped in any::<bool>(),
    ) {
        let out = decohere(&rho, C64::new(re, im), flipped, g).unwrap();
        prop_assert!(out.validate().is_ok());
        prop_assert!(concurrence(&out).unwrap() <= 1.0);
    }

    #[test]
    fn noiseless_tomography_is_identity(rho in two_qubit_state()) {
        let s = pauli_settings();
        let back = reconstruct(&TomographyRecord::noiseless(&rho, &s, 1).unwrap(), &s).unwrap();
        prop_assert!((back.matrix() - rho.matrix()).iter().all(|z| z.norm() <= 1e-10));
    }

    #[test]
    fn partial_trace_of_product_recovers_factors(a in qubit_state("e"), b in state_on(SpaceLabel::single("x", 3).unwrap())) {
        let ab = a.tensor(&b).unwrap();
        let ra = partial_trace(&ab, &["e"]).unwrap();
        let rb = partial_trace(&ab, &["x"]).unwrap();
        prop_assert!((ra.matrix() - a.matrix()).iter().all(|z| z.norm() <= 1e-12));
        prop_assert!((rb.matrix() - b.matrix()).iter().all(|z| z.norm() <= 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn expansion_is_invariant_under_relabeling(
        offsets in prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5), 4),
        rotate in 1usize..4,
    ) {
        let p = SystemParams::default();
        let base = [[3.0, 1.0, 2.0], [-3.0, 2.0, 4.0], [2.5, -4.0, -1.0], [-1.0, -3.0, 5.0]];
        let pos: Vec<[f64; 3]> = base.iter().zip(&offsets).map(|(b, o)| [b[0] + o.0, b[1] + o.1, b[2] + o.2]).collect();
        let mut perm = pos.clone();
        perm.rotate_left(rotate);
        let a = BathConfiguration::from_positions(&pos, &p).unwrap();
        let b = BathConfiguration::from_positions(&perm, &p).unwrap();
        let seq = make_pdd(2, 30e-6).unwrap();
        let times: Vec<f64> = (0..=15).map(|k| k as f64 * 2e-6).collect();
        let s = CceSettings { max_order: 3, pair_cutoff: 0.0 };
        let la = cce_coherence(&a, &p, &seq, &times, &s).unwrap().curve;
        let lb = cce_coherence(&b, &p, &seq, &times, &s).unwrap().curve;
        for (x, y) in la.values().iter().zip(lb.values()) {
            prop_assert!((x - y).norm() <= 1e-10);
            prop_assert!(x.norm() <= 1.0 + 1e-9);
        }
        prop_assert!((la.values()[0] - C64::new(1.0, 0.0)).norm() <= 1e-10);
    }
}

#[test]
fn werner_family_concurrence() {
    // p·|φ⁻⟩⟨φ⁻| + (1−p)·I/4 is invariant under the spin flip, so the λ are its
    // eigenvalues (1+3p)/4 and (1−p)/4 (three times): C = (3p−1)/2
    let mixed = DensityMatrix::maximally_mixed(&two_qubit_space());
    for k in 0..=5 {
        let p = k as f64 * 0.2;
        let w = phi_minus().mix(&mixed, p).unwrap();
        let want = ((3.0 * p - 1.0) / 2.0).max(0.0);
        assert!((concurrence(&w).unwrap() - want).abs() < 1e-10, "p={p}");
    }
}

#[test]
fn decay_of_unity_curve_is_identity() {
    let rho = phi_minus();
    let curve = CoherenceCurve::unity(vec![0.0, 1e-6]);
    for r in apply_decay(&rho, &curve, DecayProfile::None, 56e-6).unwrap() {
        assert_eq!(r.matrix(), rho.matrix());
    }
}

#[test]
fn rotation_about_z_keeps_populations() {
    let q = SpaceLabel::single(ELECTRON, 2).unwrap();
    let rho = DensityMatrix::basis(&q, 0).unwrap();
    let seq = PulseSequence::new(
        1.0,
        vec![Pulse { time: 0.5, target: ELECTRON.into(), axis: [0.0, 0.0, 1.0], angle: 1.3 }],
        "z",
    )
    .unwrap();
    let [_, _, sz] = spin_operators_on(ELECTRON, 0.5).unwrap();
    let out = evolve(&rho, &sz.scale(0.0), &seq, &[1.0]).unwrap();
    assert!((out[0].get(0, 0).re - 1.0).abs() < 1e-15);
}
