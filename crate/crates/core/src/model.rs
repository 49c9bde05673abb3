// SPDX-License-Identifier: Apache-2.0

//! Physical model: the NV electron (spin 1), its first-shell ¹³C ancilla
//! (spin 1/2), an optional ¹⁴N spectator (spin 1) and a random ¹³C bath.
//!
//! Geometry: the vacancy sits at the origin and the nitrogen on the
//! nearest-neighbour site along `[111]`, which is rotated onto `z`. Positions
//! are in Å, couplings in Hz, fields in Gauss.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linops::{spin_operators_on, tol, Operator, SpaceLabel, CMatrix, ZERO};

/// Subsystem label of the NV electron spin.
pub const ELECTRON: &str = "e";
/// Subsystem label of the ¹³C ancilla qubit.
pub const ANCILLA: &str = "n";
/// Subsystem label of the ¹⁴N spectator.
pub const NITROGEN: &str = "N14";

/// Conventional cubic cell constant of diamond, Å.
pub const DIAMOND_LATTICE_CONSTANT: f64 = 3.567;

const MU0_OVER_4PI: f64 = 1e-7;
const PLANCK: f64 = 6.626_070_15e-34;
const GAUSS_PER_TESLA: f64 = 1e4;
const ANGSTROM3: f64 = 1e-30;

/// Secular hyperfine coupling of the ¹⁴N spectator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct N14Coupling {
    /// Hz. Only this component enters the secular Hamiltonian.
    pub a_parallel: f64,
    /// Hz. Carried for completeness; dropped by the secular approximation.
    pub a_perp: f64,
}

impl Default for N14Coupling {
    /// Typical literature magnitudes for ¹⁴N in NV; not measured values for
    /// the sample studied here.
    fn default() -> Self {
        Self {
            a_parallel: -2.16e6,
            a_perp: -2.7e6,
        }
    }
}

/// Parameters of the central electron–ancilla system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Zero-field splitting, Hz.
    pub d: f64,
    /// Electron gyromagnetic ratio, Hz/G.
    pub gamma_e: f64,
    /// ¹³C gyromagnetic ratio, Hz/G.
    pub gamma_c: f64,
    /// Field along the NV axis, G.
    pub b_z: f64,
    /// Ancilla hyperfine tensor, Hz, row = electron axis, column = nuclear axis.
    pub hyperfine: [[f64; 3]; 3],
    /// Ancilla coherence time used by the phenomenological decay, s.
    pub t2n_star: f64,
    /// Optional ¹⁴N spectator coupling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n14: Option<N14Coupling>,
}

impl Default for SystemParams {
    /// Measured constants for the field, gyromagnetic ratios and T2n*. The
    /// ancilla tensor is a placeholder: axially symmetric about the NV axis
    /// with first-shell magnitudes, since the real tensor is sample specific.
    fn default() -> Self {
        Self {
            d: 2.87e9,
            gamma_e: 2.802e6,
            gamma_c: 1.071e3,
            b_z: 60.0,
            hyperfine: [[120e6, 0.0, 0.0], [0.0, 120e6, 0.0], [0.0, 0.0, 130e6]],
            t2n_star: 56e-6,
            n14: None,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(invalid("system.d", "zero-field splitting must be positive"));
        }
        if !(self.b_z.is_finite() && self.b_z >= 0.0) {
            return Err(invalid("system.b_z", "field must be non-negative"));
        }
        if !(self.t2n_star.is_finite() && self.t2n_star > 0.0) {
            return Err(invalid("system.t2n_star", "must be positive"));
        }
        if !self.gamma_e.is_finite() || !self.gamma_c.is_finite() {
            return Err(invalid("system.gamma", "gyromagnetic ratios must be finite"));
        }
        if self.hyperfine.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("system.hyperfine", "entries must be finite"));
        }
        if let Some(n) = &self.n14 {
            if !n.a_parallel.is_finite() || !n.a_perp.is_finite() {
                return Err(invalid("system.n14", "couplings must be finite"));
            }
        }
        Ok(())
    }

    /// Bare ¹³C Larmor frequency γ_c·B_z, Hz.
    pub fn larmor_c13(&self) -> f64 {
        self.gamma_c * self.b_z
    }

    /// Electron–¹³C point-dipole prefactor, Hz·Å³.
    pub fn hyperfine_prefactor(&self) -> f64 {
        MU0_OVER_4PI * PLANCK * (self.gamma_e * GAUSS_PER_TESLA) * (self.gamma_c * GAUSS_PER_TESLA)
            / ANGSTROM3
    }

    /// ¹³C–¹³C point-dipole prefactor, Hz·Å³.
    pub fn nuclear_prefactor(&self) -> f64 {
        let g = self.gamma_c * GAUSS_PER_TESLA;
        MU0_OVER_4PI * PLANCK * g * g / ANGSTROM3
    }
}

/// Lab-frame Hamiltonian γₑB Sz + D Sz² + S·Ã·I + γ_c B Iz on
/// `e[3] ⊗ n[2] ⊗ N14[3]`, with the ancilla and spectator optional.
pub fn build_central_hamiltonian(
    params: &SystemParams,
    include_ancilla: bool,
    include_n14: bool,
) -> Result<Operator> {
    params.validate()?;
    let mut subsystems = vec![(ELECTRON, 3)];
    if include_ancilla {
        subsystems.push((ANCILLA, 2));
    }
    if include_n14 {
        subsystems.push((NITROGEN, 3));
    }
    let space = SpaceLabel::new(subsystems)?;
    let [sx, sy, sz] = spin_operators_on(ELECTRON, 1.0)?;
    let (sx, sy, sz) = (sx.embed(&space)?, sy.embed(&space)?, sz.embed(&space)?);

    let mut h = sz.scale(params.gamma_e * params.b_z);
    h = &h + &(&sz * &sz).scale(params.d);

    if include_ancilla {
        let [ix, iy, iz] = spin_operators_on(ANCILLA, 0.5)?;
        let i_ops = [ix.embed(&space)?, iy.embed(&space)?, iz.embed(&space)?];
        let s_ops = [&sx, &sy, &sz];
        for (a, s_a) in s_ops.iter().enumerate() {
            for (b, i_b) in i_ops.iter().enumerate() {
                let coupling = params.hyperfine[a][b];
                if coupling != 0.0 {
                    h = &h + &(*s_a * i_b).scale(coupling);
                }
            }
        }
        h = &h + &i_ops[2].scale(params.gamma_c * params.b_z);
    }

    if include_n14 {
        let n14 = params.n14.unwrap_or_default();
        let [_, _, nz] = spin_operators_on(NITROGEN, 1.0)?;
        h = &h + &(&sz * &nz.embed(&space)?).scale(n14.a_parallel);
    }

    Ok(h.hermitian_part())
}

/// Restricts an operator on a spin-1 electron to the `{Ms=+1, Ms=0}` levels.
/// The electron subsystem of the result has dimension 2 (index 0 = Ms=+1).
pub fn project_two_level(h: &Operator) -> Result<Operator> {
    let space = h.space();
    let pos = space
        .position(ELECTRON)
        .ok_or_else(|| Error::UnknownSubsystem(ELECTRON.into()))?;
    if space.subsystems()[pos].1 != 3 {
        return Err(Error::SpaceMismatch(format!(
            "expected a spin-1 electron subsystem, found {space}"
        )));
    }
    let reduced = SpaceLabel::new(space.subsystems().iter().enumerate().map(|(k, (n, d))| {
        if k == pos {
            (n.clone(), 2)
        } else {
            (n.clone(), *d)
        }
    }))?;
    // electron digit 2 (Ms = −1) is dropped, digits 0 and 1 map to themselves
    let keep: Vec<usize> = (0..space.dim())
        .filter(|&i| space.digits(i)[pos] < 2)
        .collect();
    let d = keep.len();
    let mat = CMatrix::from_fn(d, d, |i, j| h.get(keep[i], keep[j]));
    Operator::new(reduced, mat)
}

/// Secular rotating frame of a two-level-electron operator: electron
/// off-diagonal blocks are dropped and each electron block is shifted by its
/// mean energy, which removes D and the electron Zeeman offset.
pub fn secular_rotating_frame(h: &Operator) -> Result<Operator> {
    let space = h.space();
    let pos = space
        .position(ELECTRON)
        .ok_or_else(|| Error::UnknownSubsystem(ELECTRON.into()))?;
    if space.subsystems()[pos].1 != 2 {
        return Err(Error::SpaceMismatch(format!(
            "expected a two-level electron subsystem, found {space}"
        )));
    }
    let d = space.dim();
    let e_digit: Vec<usize> = (0..d).map(|i| space.digits(i)[pos]).collect();
    let block = d / 2;
    let mut means = [0.0; 2];
    for i in 0..d {
        means[e_digit[i]] += h.get(i, i).re / block as f64;
    }
    let mat = CMatrix::from_fn(d, d, |i, j| {
        if e_digit[i] != e_digit[j] {
            ZERO
        } else if i == j {
            h.get(i, j) - means[e_digit[i]]
        } else {
            h.get(i, j)
        }
    });
    Ok(Operator::new(space.clone(), mat)?.hermitian_part())
}

/// Rotating-frame Hamiltonian of the working two-level electron, optionally
/// with the ancilla and the ¹⁴N spectator.
pub fn system_hamiltonian(
    params: &SystemParams,
    include_ancilla: bool,
    include_n14: bool,
) -> Result<Operator> {
    let full = build_central_hamiltonian(params, include_ancilla, include_n14)?;
    secular_rotating_frame(&project_two_level(&full)?)
}

/// Secular electron–nuclear point-dipole components `(A_zx, A_zy, A_zz)`, Hz.
pub fn dipolar_hyperfine(position: [f64; 3], params: &SystemParams) -> Result<[f64; 3]> {
    let r = norm(position);
    if r == 0.0 || !r.is_finite() {
        return Err(Error::ZeroPosition);
    }
    let n = position.map(|x| x / r);
    let scale = params.hyperfine_prefactor() / (r * r * r);
    Ok([
        scale * (-3.0 * n[2] * n[0]),
        scale * (-3.0 * n[2] * n[1]),
        scale * (1.0 - 3.0 * n[2] * n[2]),
    ])
}

/// Secular homonuclear dipolar coefficient `b_ij`, Hz; the pair Hamiltonian
/// is `b_ij (Iz Iz − (Ix Ix + Iy Iy)/2)`.
pub fn nuclear_dipolar(p_i: [f64; 3], p_j: [f64; 3], params: &SystemParams) -> Result<f64> {
    let d = [p_j[0] - p_i[0], p_j[1] - p_i[1], p_j[2] - p_i[2]];
    let r = norm(d);
    if r == 0.0 {
        return Err(Error::CoincidentPositions);
    }
    let cos = d[2] / r;
    Ok(params.nuclear_prefactor() * (1.0 - 3.0 * cos * cos) / (r * r * r))
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Rotation taking the cubic `[111]` direction onto `z`.
fn nv_frame() -> [[f64; 3]; 3] {
    let s2 = std::f64::consts::SQRT_2;
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    [
        [1.0 / s2, -1.0 / s2, 0.0],
        [1.0 / s6, 1.0 / s6, -2.0 / s6],
        [1.0 / s3, 1.0 / s3, 1.0 / s3],
    ]
}

/// Carbon sites of the diamond lattice in the NV frame with
/// `r_min ≤ |r| ≤ r_max`; the vacancy and the nitrogen site are excluded.
pub fn diamond_sites(r_min: f64, r_max: f64) -> Vec<[f64; 3]> {
    const BASIS: [[f64; 3]; 8] = [
        [0.0, 0.0, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
        [0.5, 0.5, 0.0],
        [0.25, 0.25, 0.25],
        [0.25, 0.75, 0.75],
        [0.75, 0.25, 0.75],
        [0.75, 0.75, 0.25],
    ];
    let a = DIAMOND_LATTICE_CONSTANT;
    let rot = nv_frame();
    let n = (r_max / a).ceil() as i64 + 1;
    let nitrogen = [0.25 * a, 0.25 * a, 0.25 * a];
    let mut sites = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                for b in &BASIS {
                    let p = [
                        (i as f64 + b[0]) * a,
                        (j as f64 + b[1]) * a,
                        (k as f64 + b[2]) * a,
                    ];
                    if p == nitrogen {
                        continue;
                    }
                    let r = norm(p);
                    if r == 0.0 || r < r_min || r > r_max {
                        continue;
                    }
                    let q = [0, 1, 2].map(|row| {
                        rot[row][0] * p[0] + rot[row][1] * p[1] + rot[row][2] * p[2]
                    });
                    sites.push(q);
                }
            }
        }
    }
    sites
}

/// One bath ¹³C nucleus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpin {
    /// Å, NV frame.
    pub position: [f64; 3],
    /// `(A_zx, A_zy, A_zz)`, Hz.
    pub hyperfine: [f64; 3],
}

impl BathSpin {
    pub fn species(&self) -> &'static str {
        "13C"
    }
}

/// A sampled ¹³C bath with all pairwise secular dipolar couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct BathConfiguration {
    pub spins: Vec<BathSpin>,
    /// `(i, j) → b_ij` in Hz, `i < j`.
    pub pair_couplings: BTreeMap<(usize, usize), f64>,
    pub seed: u64,
    pub r_min: f64,
    pub r_max: f64,
    pub abundance: f64,
}

impl BathConfiguration {
    /// Bath from explicit positions (Å), couplings filled from the point-dipole model.
    pub fn from_positions(positions: &[[f64; 3]], params: &SystemParams) -> Result<Self> {
        let spins = positions
            .iter()
            .map(|&p| {
                Ok(BathSpin {
                    position: p,
                    hyperfine: dipolar_hyperfine(p, params)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut pair_couplings = BTreeMap::new();
        for i in 0..spins.len() {
            for j in i + 1..spins.len() {
                let b = nuclear_dipolar(spins[i].position, spins[j].position, params)?;
                pair_couplings.insert((i, j), b);
            }
        }
        let r_max = positions.iter().map(|&p| norm(p)).fold(0.0, f64::max);
        let r_min = positions.iter().map(|&p| norm(p)).fold(f64::INFINITY, f64::min);
        Ok(Self {
            spins,
            pair_couplings,
            seed: 0,
            r_min: if r_min.is_finite() { r_min } else { 0.0 },
            r_max,
            abundance: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Symmetric accessor for `b_ij`; zero on the diagonal.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.pair_couplings.get(&key).copied().unwrap_or(0.0)
    }

    /// Subset of the bath keeping spins in `members` order.
    pub fn subset(&self, members: &[usize]) -> BathConfiguration {
        let spins = members.iter().map(|&k| self.spins[k].clone()).collect();
        let mut pair_couplings = BTreeMap::new();
        for (a, &i) in members.iter().enumerate() {
            for (b, &j) in members.iter().enumerate().skip(a + 1) {
                pair_couplings.insert((a, b), self.coupling(i, j));
            }
        }
        BathConfiguration {
            spins,
            pair_couplings,
            seed: self.seed,
            r_min: self.r_min,
            r_max: self.r_max,
            abundance: self.abundance,
        }
    }

    /// Space label of a set of bath spins, one qubit `c{index}` each.
    pub fn cluster_space(members: &[usize]) -> Result<SpaceLabel> {
        SpaceLabel::new(members.iter().map(|k| (format!("c{k}"), 2)))
    }

    /// Bath Hamiltonians conditioned on the electron in `Ms = 0` and `Ms = +1`
    /// (rotating frame), restricted to `members`.
    pub fn conditional_hamiltonians(
        &self,
        params: &SystemParams,
        members: &[usize],
    ) -> Result<(Operator, Operator)> {
        let space = Self::cluster_space(members)?;
        let larmor = params.larmor_c13();
        let mut h0 = Operator::zeros(&space);
        let mut coupling = Operator::zeros(&space);
        let mut ops = Vec::with_capacity(members.len());
        for &k in members {
            let [ix, iy, iz] = spin_operators_on(&format!("c{k}"), 0.5)?;
            ops.push([ix.embed(&space)?, iy.embed(&space)?, iz.embed(&space)?]);
        }
        for (slot, &k) in members.iter().enumerate() {
            let [ix, iy, iz] = &ops[slot];
            h0 = &h0 + &iz.scale(larmor);
            let a = self.spins[k].hyperfine;
            coupling = &coupling + &(&(&ix.scale(a[0]) + &iy.scale(a[1])) + &iz.scale(a[2]));
        }
        for (sa, &i) in members.iter().enumerate() {
            for (sb, &j) in members.iter().enumerate().skip(sa + 1) {
                let b = self.coupling(i, j);
                if b == 0.0 {
                    continue;
                }
                let [xi, yi, zi] = &ops[sa];
                let [xj, yj, zj] = &ops[sb];
                let flipflop = &(xi * xj) + &(yi * yj);
                let term = &(zi * zj) - &flipflop.scale(0.5);
                h0 = &h0 + &term.scale(b);
            }
        }
        let h1 = &h0 + &coupling;
        Ok((h0.hermitian_part(), h1.hermitian_part()))
    }
}

/// Samples a ¹³C bath: every lattice site in `[r_min, r_max]` is occupied
/// independently with probability `abundance`, in enumeration order, using a
/// ChaCha8 stream seeded with `seed`.
pub fn sample_bath(
    seed: u64,
    abundance: f64,
    r_min: f64,
    r_max: f64,
    params: &SystemParams,
) -> Result<BathConfiguration> {
    if !(0.0..=1.0).contains(&abundance) {
        return Err(invalid("bath.abundance", format!("{abundance} outside [0, 1]")));
    }
    if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
        return Err(invalid("bath.r_min", "require 0 < r_min < r_max"));
    }
    params.validate()?;
    let sites = diamond_sites(r_min, r_max);
    if sites.is_empty() {
        return Err(Error::EmptyLattice);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let occupied: Vec<[f64; 3]> = sites
        .into_iter()
        .filter(|_| rng.random::<f64>() < abundance)
        .collect();
    let mut bath = BathConfiguration::from_positions(&occupied, params)?;
    bath.seed = seed;
    bath.r_min = r_min;
    bath.r_max = r_max;
    bath.abundance = abundance;
    Ok(bath)
}

/// Hermiticity check helper used by tests and audits.
pub fn is_hermitian(h: &Operator) -> bool {
    h.hermiticity_error() <= tol::HERMITIAN
}
