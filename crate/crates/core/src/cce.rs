// SPDX-License-Identifier: Apache-2.0

//! Cluster correlation expansion of the electron coherence.
//!
//! The coherence of a bath starting at infinite temperature is
//! `L(t) = tr[U⁽⁰⁾(t) ρ_B U⁽¹⁾(t)†]`, where `U⁽ᵐ⁾` is the bath propagator for
//! the branch whose electron started in level `m` (`0` = Ms=0, `1` = Ms=+1)
//! and toggles at every π pulse. The expansion approximates it by
//! `Π_C L̃_C` over connected clusters, with cumulants
//! `L̃_C = L_C / Π_{S ⊊ C} L̃_S`.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{PulseSequence, SequenceShape};
use crate::error::{invalid, Error, Result};
use crate::linops::{CMatrix, DensityMatrix, Propagator, C64, ONE};
use crate::model::{BathConfiguration, SystemParams, ANCILLA, ELECTRON};

/// Largest cluster evaluated by exact propagation.
pub const MAX_CLUSTER_ORDER: usize = 8;

/// Cumulant denominators smaller than this are treated as breakdown.
pub const GUARD_THRESHOLD: f64 = 1e-8;

/// Connected set of bath spins, indices sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cluster {
    members: Vec<usize>,
}

impl Cluster {
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(invalid("cluster", "needs at least one member"));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }
}

/// Expansion controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CceSettings {
    pub max_order: usize,
    /// Minimum `|b_ij|` (Hz) for two spins to share a cluster.
    pub pair_cutoff: f64,
}

impl Default for CceSettings {
    fn default() -> Self {
        Self {
            max_order: 2,
            pair_cutoff: 5.0,
        }
    }
}

impl CceSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_order == 0 {
            return Err(invalid("bath.max_order", "must be at least 1"));
        }
        if self.max_order > MAX_CLUSTER_ORDER {
            return Err(Error::OversizeCluster {
                size: self.max_order,
                limit: MAX_CLUSTER_ORDER,
            });
        }
        if self.pair_cutoff.is_nan() || self.pair_cutoff < 0.0 {
            return Err(invalid("bath.pair_cutoff", "must be non-negative"));
        }
        Ok(())
    }
}

/// Sampled coherence with the pulse parity at each point.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceCurve {
    times: Vec<f64>,
    values: Vec<C64>,
    flipped: Vec<bool>,
}

impl CoherenceCurve {
    pub fn new(times: Vec<f64>, values: Vec<C64>, flipped: Vec<bool>) -> Result<Self> {
        if values.len() != times.len() || flipped.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len().min(flipped.len()),
            });
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("times", "must be sorted"));
        }
        Ok(Self {
            times,
            values,
            flipped,
        })
    }

    /// `L ≡ 1` on the given grid.
    pub fn unity(times: Vec<f64>) -> Self {
        let n = times.len();
        Self {
            times,
            values: vec![ONE; n],
            flipped: vec![false; n],
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn flipped(&self) -> &[bool] {
        &self.flipped
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// Pointwise mean of curves sharing a time grid.
    pub fn average(curves: &[CoherenceCurve]) -> Result<CoherenceCurve> {
        let first = curves.first().ok_or_else(|| invalid("curves", "empty ensemble"))?;
        let mut sum = vec![C64::new(0.0, 0.0); first.len()];
        for c in curves {
            if c.times != first.times || c.flipped != first.flipped {
                return Err(invalid("curves", "time grids differ"));
            }
            for (s, v) in sum.iter_mut().zip(&c.values) {
                *s += v;
            }
        }
        let n = curves.len() as f64;
        CoherenceCurve::new(
            first.times.clone(),
            sum.into_iter().map(|s| s / n).collect(),
            first.flipped.clone(),
        )
    }
}

/// Clusters of up to `max_order` spins that are connected through couplings
/// `|b_ij| > pair_cutoff`, sorted by order then lexicographically.
pub fn enumerate_clusters(bath: &BathConfiguration, settings: &CceSettings) -> Result<Vec<Cluster>> {
    settings.validate()?;
    let n = bath.len();
    let mut neighbors = vec![Vec::new(); n];
    for (&(i, j), &b) in &bath.pair_couplings {
        if b.abs() > settings.pair_cutoff {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
    }
    let mut level: BTreeSet<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
    let mut out: Vec<Cluster> = level.iter().map(|m| Cluster { members: m.clone() }).collect();
    for _ in 2..=settings.max_order {
        let mut next = BTreeSet::new();
        for members in &level {
            for &m in members {
                for &v in &neighbors[m] {
                    if let Err(pos) = members.binary_search(&v) {
                        let mut grown = members.clone();
                        grown.insert(pos, v);
                        next.insert(grown);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        out.extend(next.iter().map(|m| Cluster { members: m.clone() }));
        level = next;
    }
    Ok(out)
}

/// Conditional bath propagators of one cluster.
struct ClusterPropagators {
    p0: Propagator,
    p1: Propagator,
}

impl ClusterPropagators {
    fn new(cluster: &Cluster, bath: &BathConfiguration, params: &SystemParams) -> Result<Self> {
        if cluster.order() > MAX_CLUSTER_ORDER {
            return Err(Error::OversizeCluster {
                size: cluster.order(),
                limit: MAX_CLUSTER_ORDER,
            });
        }
        if let Some(&k) = cluster.members.iter().find(|&&k| k >= bath.len()) {
            return Err(invalid("cluster", format!("member {k} outside bath of {}", bath.len())));
        }
        let (h0, h1) = bath.conditional_hamiltonians(params, &cluster.members)?;
        Ok(Self {
            p0: Propagator::new(&h0)?,
            p1: Propagator::new(&h1)?,
        })
    }

    /// `L` at each sample time of `seq`, with the parity after the pulses
    /// applied by then.
    fn coherence(&self, seq: &PulseSequence, times: &[f64]) -> Vec<(C64, bool)> {
        let d = self.p0.eigenvalues().len();
        // ua: branch that started in Ms=0, ub: started in Ms=+1
        let mut ua = CMatrix::identity(d, d);
        let mut ub = CMatrix::identity(d, d);
        let mut now = 0.0;
        let mut parity = false;
        let mut next = 0;
        let pulses = seq.pulses();
        let step = |ua: &mut CMatrix, ub: &mut CMatrix, dt: f64, parity: bool| {
            let (a, b) = if parity {
                (self.p1.matrix_at(dt), self.p0.matrix_at(dt))
            } else {
                (self.p0.matrix_at(dt), self.p1.matrix_at(dt))
            };
            *ua = a * &*ua;
            *ub = b * &*ub;
        };
        let mut out = Vec::with_capacity(times.len());
        for &ts in times {
            while next < pulses.len() && pulses[next].time <= ts {
                let tp = pulses[next].time;
                if tp > now {
                    step(&mut ua, &mut ub, tp - now, parity);
                    now = tp;
                }
                parity = !parity;
                next += 1;
            }
            if ts > now {
                step(&mut ua, &mut ub, ts - now, parity);
                now = ts;
            }
            let tr: C64 = ua.iter().zip(ub.iter()).map(|(a, b)| a * b.conj()).sum();
            out.push((tr / d as f64, parity));
        }
        out
    }
}

fn check_times(seq: &PulseSequence, times: &[f64]) -> Result<()> {
    let sorted = times.windows(2).all(|w| w[1] >= w[0]);
    let inside = times.iter().all(|&t| (0.0..=seq.duration()).contains(&t));
    if !sorted || !inside {
        return Err(Error::InvalidTimes {
            duration: seq.duration(),
        });
    }
    Ok(())
}

/// Exact coherence of one cluster sampled during `seq`.
pub fn cluster_coherence(
    cluster: &Cluster,
    bath: &BathConfiguration,
    params: &SystemParams,
    seq: &PulseSequence,
    times: &[f64],
) -> Result<CoherenceCurve> {
    check_times(seq, times)?;
    let props = ClusterPropagators::new(cluster, bath, params)?;
    let (values, flipped) = props.coherence(seq, times).into_iter().unzip();
    CoherenceCurve::new(times.to_vec(), values, flipped)
}

/// Exact coherence of one cluster at the end of `shape.build(T)` for each
/// `T` in `durations`.
pub fn cluster_coherence_endpoints(
    cluster: &Cluster,
    bath: &BathConfiguration,
    params: &SystemParams,
    shape: SequenceShape,
    durations: &[f64],
) -> Result<CoherenceCurve> {
    let props = ClusterPropagators::new(cluster, bath, params)?;
    endpoint_curve(&props, shape, durations)
}

fn endpoint_curve(props: &ClusterPropagators, shape: SequenceShape, durations: &[f64]) -> Result<CoherenceCurve> {
    let mut values = Vec::with_capacity(durations.len());
    let mut flipped = Vec::with_capacity(durations.len());
    for &t in durations {
        if t == 0.0 {
            values.push(ONE);
            flipped.push(false);
            continue;
        }
        let seq = shape.build(t)?;
        let (v, f) = props.coherence(&seq, &[t])[0];
        values.push(v);
        flipped.push(f);
    }
    CoherenceCurve::new(durations.to_vec(), values, flipped)
}

/// Expansion output.
#[derive(Clone, Debug, PartialEq)]
pub struct CceResult {
    pub curve: CoherenceCurve,
    /// Number of clusters at each order, index 0 = singletons.
    pub clusters_per_order: Vec<usize>,
    /// Time points where a cumulant denominator fell below [`GUARD_THRESHOLD`].
    pub guard_hits: usize,
    /// Points whose product magnitude exceeded 1 and was clipped.
    pub clipped: usize,
}

fn combine(
    clusters: &[Cluster],
    raw: Vec<Vec<C64>>,
    times: Vec<f64>,
    flipped: Vec<bool>,
    max_order: usize,
) -> Result<CceResult> {
    let n_t = times.len();
    let mut cumulants: HashMap<&[usize], Vec<C64>> = HashMap::with_capacity(clusters.len());
    let mut total = vec![ONE; n_t];
    let mut guard_hits = 0;
    let mut clusters_per_order = vec![0; max_order];
    for (cluster, l_c) in clusters.iter().zip(raw) {
        clusters_per_order[cluster.order() - 1] += 1;
        let m = cluster.members();
        let mut cum = l_c;
        if m.len() > 1 {
            let mut denom = vec![ONE; n_t];
            // proper non-empty subsets in mask order
            for mask in 1..(1u32 << m.len()) - 1 {
                let sub: Vec<usize> = (0..m.len()).filter(|&b| mask >> b & 1 == 1).map(|b| m[b]).collect();
                if let Some(c) = cumulants.get(sub.as_slice()) {
                    for (d, v) in denom.iter_mut().zip(c) {
                        *d *= v;
                    }
                }
            }
            for (c, d) in cum.iter_mut().zip(&denom) {
                if d.norm() < GUARD_THRESHOLD {
                    *c = ONE;
                    guard_hits += 1;
                } else {
                    *c /= d;
                }
            }
        }
        for (t, c) in total.iter_mut().zip(&cum) {
            *t *= c;
        }
        cumulants.insert(m, cum);
    }
    let mut clipped = 0;
    for v in &mut total {
        let r = v.norm();
        if r > 1.0 {
            *v /= r;
            clipped += 1;
        }
    }
    Ok(CceResult {
        curve: CoherenceCurve::new(times, total, flipped)?,
        clusters_per_order,
        guard_hits,
        clipped,
    })
}

/// Expansion of the coherence sampled during a single sequence.
pub fn cce_coherence(
    bath: &BathConfiguration,
    params: &SystemParams,
    seq: &PulseSequence,
    times: &[f64],
    settings: &CceSettings,
) -> Result<CceResult> {
    check_times(seq, times)?;
    let clusters = enumerate_clusters(bath, settings)?;
    let raw: Vec<Vec<C64>> = clusters
        .par_iter()
        .map(|c| {
            let props = ClusterPropagators::new(c, bath, params)?;
            Ok(props.coherence(seq, times).into_iter().map(|(v, _)| v).collect())
        })
        .collect::<Result<_>>()?;
    let flipped = times.iter().map(|&t| seq.pulses_until(t) % 2 == 1).collect();
    combine(&clusters, raw, times.to_vec(), flipped, settings.max_order)
}

/// Expansion of the end-of-sequence coherence for a family of durations.
pub fn cce_coherence_endpoints(
    bath: &BathConfiguration,
    params: &SystemParams,
    shape: SequenceShape,
    durations: &[f64],
    settings: &CceSettings,
) -> Result<CceResult> {
    if durations.windows(2).any(|w| w[1] < w[0]) || durations.iter().any(|&t| !(t >= 0.0)) {
        return Err(invalid("durations", "must be sorted and non-negative"));
    }
    let clusters = enumerate_clusters(bath, settings)?;
    let raw: Vec<Vec<C64>> = clusters
        .par_iter()
        .map(|c| {
            let props = ClusterPropagators::new(c, bath, params)?;
            Ok(endpoint_curve(&props, shape, durations)?.values)
        })
        .collect::<Result<_>>()?;
    let odd = shape.pulse_count() % 2 == 1;
    let flipped = durations.iter().map(|&t| odd && t > 0.0).collect();
    combine(&clusters, raw, durations.to_vec(), flipped, settings.max_order)
}

/// Ancilla dephasing envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayProfile {
    Gaussian,
    Exponential,
    None,
}

/// Ancilla coherence factor at time `t`.
pub fn ancilla_decay(profile: DecayProfile, t: f64, t2n_star: f64) -> f64 {
    if !t2n_star.is_finite() {
        return 1.0;
    }
    let x = t / t2n_star;
    match profile {
        DecayProfile::Gaussian => (-x * x).exp(),
        DecayProfile::Exponential => (-x.abs()).exp(),
        DecayProfile::None => 1.0,
    }
}

/// Multiplies the electron coherence blocks of `rho` by `l` and the ancilla
/// coherences by `g`. Rows in Ms=0 against columns in Ms=+1 take `l` before
/// an odd number of flips and `l*` after; `|l|` is capped at 1.
pub fn decohere(rho: &DensityMatrix, l: C64, flipped: bool, g: f64) -> Result<DensityMatrix> {
    let space = rho.space();
    let e_pos = space
        .position(ELECTRON)
        .ok_or_else(|| Error::UnknownSubsystem(ELECTRON.into()))?;
    if space.dim_of(ELECTRON) != Some(2) {
        return Err(Error::SpaceMismatch(format!("electron must be a qubit in {space}")));
    }
    if !(0.0..=1.0).contains(&g) {
        return Err(invalid("ancilla decay", format!("factor {g} outside [0, 1]")));
    }
    let n_pos = space.position(ANCILLA);
    let l = if l.norm() > 1.0 { l / l.norm() } else { l };
    let l = if flipped { l.conj() } else { l };
    let d = rho.dim();
    let digits: Vec<Vec<usize>> = (0..d).map(|k| space.digits(k)).collect();
    let mat = CMatrix::from_fn(d, d, |i, j| {
        let (di, dj) = (&digits[i], &digits[j]);
        let mut f = match (di[e_pos], dj[e_pos]) {
            (1, 0) => l,
            (0, 1) => l.conj(),
            _ => ONE,
        };
        if let Some(p) = n_pos {
            if di[p] != dj[p] {
                f *= g;
            }
        }
        rho.get(i, j) * f
    });
    DensityMatrix::new(space.clone(), mat)
}

/// Decay of a fixed state along a coherence curve.
pub fn apply_decay(
    rho0: &DensityMatrix,
    curve: &CoherenceCurve,
    profile: DecayProfile,
    t2n_star: f64,
) -> Result<Vec<DensityMatrix>> {
    curve
        .times()
        .iter()
        .zip(curve.values())
        .zip(curve.flipped())
        .map(|((&t, &l), &f)| decohere(rho0, l, f, ancilla_decay(profile, t, t2n_star)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        electron_plus, evolve_with_bath, make_fid, make_hahn, make_pdd, phi_minus, SequenceKind,
    };
    use crate::metrics::concurrence;
    use std::f64::consts::PI;

    fn params() -> SystemParams {
        SystemParams::default()
    }

    fn small_bath() -> BathConfiguration {
        BathConfiguration::from_positions(
            &[[3.1, 0.4, 2.0], [4.0, -1.2, 3.3], [-2.5, 2.2, 4.1], [1.0, 4.4, -2.0]],
            &params(),
        )
        .unwrap()
    }

    #[test]
    fn singletons_only_at_order_one() {
        let bath = small_bath();
        let s = CceSettings {
            max_order: 1,
            pair_cutoff: 0.0,
        };
        let cl = enumerate_clusters(&bath, &s).unwrap();
        assert_eq!(cl.len(), bath.len());
        assert!(cl.iter().all(|c| c.order() == 1));
    }

    #[test]
    fn infinite_cutoff_has_no_pairs() {
        let s = CceSettings {
            max_order: 3,
            pair_cutoff: f64::INFINITY,
        };
        let cl = enumerate_clusters(&small_bath(), &s).unwrap();
        assert_eq!(cl.len(), 4);
    }

    #[test]
    fn pair_count_matches_brute_force() {
        let bath = small_bath();
        for cutoff in [0.0, 1.0, 10.0, 50.0, 200.0] {
            let s = CceSettings {
                max_order: 2,
                pair_cutoff: cutoff,
            };
            let pairs = enumerate_clusters(&bath, &s).unwrap().iter().filter(|c| c.order() == 2).count();
            let mut brute = 0;
            for i in 0..bath.len() {
                for j in i + 1..bath.len() {
                    if bath.coupling(i, j).abs() > cutoff {
                        brute += 1;
                    }
                }
            }
            assert_eq!(pairs, brute, "cutoff {cutoff}");
        }
    }

    #[test]
    fn full_graph_enumerates_every_subset() {
        let s = CceSettings {
            max_order: 4,
            pair_cutoff: 0.0,
        };
        let cl = enumerate_clusters(&small_bath(), &s).unwrap();
        assert_eq!(cl.len(), 15);
        let mut sorted = cl.clone();
        sorted.sort_by(|a, b| (a.order(), a.members()).cmp(&(b.order(), b.members())));
        assert_eq!(cl, sorted);
    }

    #[test]
    fn settings_validation() {
        let mut s = CceSettings::default();
        s.max_order = 0;
        assert!(s.validate().is_err());
        s.max_order = 9;
        assert!(matches!(s.validate(), Err(Error::OversizeCluster { .. })));
        s.max_order = 2;
        s.pair_cutoff = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn decoupled_cluster_keeps_full_coherence() {
        let mut bath = small_bath();
        for s in &mut bath.spins {
            s.hyperfine = [0.0; 3];
        }
        let c = Cluster::new(vec![0, 2]).unwrap();
        let seq = make_pdd(2, 30e-6).unwrap();
        let times: Vec<f64> = (0..=30).map(|k| k as f64 * 1e-6).collect();
        let curve = cluster_coherence(&c, &bath, &params(), &seq, &times).unwrap();
        for v in curve.values() {
            assert!((v - ONE).norm() < 1e-12);
        }
    }

    /// One spin, free evolution: L = cos(φ₀/2)cos(φ₁/2) + n₀·n₁ sin(φ₀/2)sin(φ₁/2).
    fn fid_singleton(p: &SystemParams, a: [f64; 3], t: f64) -> f64 {
        let wl = p.larmor_c13();
        let v1 = [a[0], a[1], a[2] + wl];
        let w1 = (v1[0] * v1[0] + v1[1] * v1[1] + v1[2] * v1[2]).sqrt();
        let dot = v1[2] / w1 * wl.signum();
        let (h0, h1) = (PI * wl.abs() * t, PI * w1 * t);
        h0.cos() * h1.cos() + dot * h0.sin() * h1.sin()
    }

    #[test]
    fn singleton_fid_matches_closed_form() {
        let p = params();
        let bath = small_bath();
        let c = Cluster::new(vec![1]).unwrap();
        let seq = make_fid(40e-6).unwrap();
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 1e-7).collect();
        let curve = cluster_coherence(&c, &bath, &p, &seq, &times).unwrap();
        for (&t, v) in times.iter().zip(curve.values()) {
            let want = fid_singleton(&p, bath.spins[1].hyperfine, t);
            assert!((v.norm() - want.abs()).abs() < 1e-9, "t={t}");
        }
        assert!((curve.values()[0] - ONE).norm() < 1e-12);
    }

    #[test]
    fn singleton_echo_revives_at_larmor_period() {
        let p = params();
        let bath = small_bath();
        let tl = 1.0 / p.larmor_c13();
        let c = Cluster::new(vec![0]).unwrap();
        let shape = SequenceShape {
            kind: SequenceKind::Hahn,
            n_pulses: 1,
        };
        let curve = cluster_coherence_endpoints(&c, &bath, &p, shape, &[0.0, 0.7 * tl, 2.0 * tl]).unwrap();
        assert!((curve.values()[2].norm() - 1.0).abs() < 1e-6);
        assert!(curve.values()[1].norm() < 0.999);
        assert_eq!(curve.flipped(), &[false, true, true]);
    }

    #[test]
    fn order_one_is_product_of_singletons() {
        let p = params();
        let bath = small_bath();
        let seq = make_hahn(20e-6).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 1e-6).collect();
        let s = CceSettings {
            max_order: 1,
            pair_cutoff: 0.0,
        };
        let res = cce_coherence(&bath, &p, &seq, &times, &s).unwrap();
        let mut prod = vec![ONE; times.len()];
        for k in 0..bath.len() {
            let c = cluster_coherence(&Cluster::new(vec![k]).unwrap(), &bath, &p, &seq, &times).unwrap();
            for (a, b) in prod.iter_mut().zip(c.values()) {
                *a *= b;
            }
        }
        for (a, b) in res.curve.values().iter().zip(&prod) {
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(res.guard_hits, 0);
    }

    #[test]
    fn full_order_matches_exact_evolution() {
        let p = params();
        let bath = small_bath();
        let seq = make_pdd(2, 40e-6).unwrap();
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 1e-6).collect();
        let s = CceSettings {
            max_order: bath.len(),
            pair_cutoff: 0.0,
        };
        let res = cce_coherence(&bath, &p, &seq, &times, &s).unwrap();
        let exact = evolve_with_bath(&electron_plus(), &p, &bath, &seq, &times).unwrap();
        for ((rho, l), &f) in exact.iter().zip(res.curve.values()).zip(res.curve.flipped()) {
            let want = crate::dynamics::electron_coherence(rho, f).unwrap();
            assert!((want - l).norm() < 1e-8, "{want} vs {l}");
        }
    }

    #[test]
    fn null_spin_does_not_change_coherence() {
        let p = params();
        let bath = small_bath();
        let mut extended = bath.clone();
        extended.spins.push(crate::model::BathSpin {
            position: [9.0, 9.0, 9.0],
            hyperfine: [0.0; 3],
        });
        let seq = make_pdd(2, 30e-6).unwrap();
        let times: Vec<f64> = (0..=30).map(|k| k as f64 * 1e-6).collect();
        let s = CceSettings {
            max_order: 3,
            pair_cutoff: 0.0,
        };
        let a = cce_coherence(&bath, &p, &seq, &times, &s).unwrap();
        let b = cce_coherence(&extended, &p, &seq, &times, &s).unwrap();
        for (x, y) in a.curve.values().iter().zip(b.curve.values()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn decay_identity_and_full_dephasing() {
        let rho = phi_minus();
        let curve = CoherenceCurve::unity(vec![0.0, 1e-5, 1e-4]);
        for r in apply_decay(&rho, &curve, DecayProfile::Gaussian, f64::INFINITY).unwrap() {
            assert!((r.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-15));
        }
        let zero = decohere(&rho, C64::new(0.0, 0.0), false, 1.0).unwrap();
        assert!(concurrence(&zero).unwrap() < 1e-12);
        zero.validate().unwrap();
    }

    #[test]
    fn x_state_concurrence_follows_envelope() {
        // for φ⁻ the only coherence is |00⟩⟨11|, so C = C₀·|L|·g
        let rho = phi_minus();
        let t2 = 56e-6;
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 8e-6).collect();
        let values: Vec<C64> = times.iter().map(|&t| C64::new((-t / 30e-6).exp(), 0.0)).collect();
        let curve = CoherenceCurve::new(times.clone(), values.clone(), vec![false; times.len()]).unwrap();
        let states = apply_decay(&rho, &curve, DecayProfile::Gaussian, t2).unwrap();
        for ((r, &t), l) in states.iter().zip(&times).zip(&values) {
            let want = (l.norm() * (-(t / t2).powi(2)).exp()).max(0.0);
            assert!((concurrence(r).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_profiles() {
        assert_eq!(ancilla_decay(DecayProfile::None, 1.0, 1.0), 1.0);
        assert!((ancilla_decay(DecayProfile::Gaussian, 2.0, 1.0) - (-4.0f64).exp()).abs() < 1e-15);
        assert!((ancilla_decay(DecayProfile::Exponential, 2.0, 1.0) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn endpoint_and_single_sequence_agree_at_end() {
        let p = params();
        let bath = small_bath();
        let shape = SequenceShape {
            kind: SequenceKind::Pdd,
            n_pulses: 2,
        };
        let s = CceSettings::default();
        let t = 25e-6;
        let a = cce_coherence_endpoints(&bath, &p, shape, &[t], &s).unwrap();
        let b = cce_coherence(&bath, &p, &make_pdd(2, t).unwrap(), &[t], &s).unwrap();
        assert_eq!(a.curve.values(), b.curve.values());
    }
}
