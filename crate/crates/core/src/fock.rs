//! Amplitude-level simulation of one or two photons in a small register of
//! optical modes.
//!
//! A state is a map from canonically ordered photon configurations to the
//! amplitude of the corresponding *normalized* Fock basis state. Each photon
//! carries a mode index and an internal label (0 or 1). Photons with equal
//! labels are identical bosons; photons with different labels never interfere,
//! which is how partial distinguishability (finite HOM visibility) enters.
//!
//! Linear optics acts on creation operators, so two-photon terms are converted
//! to creation-polynomial coefficients, transformed photon by photon and
//! converted back. A doubly occupied configuration `a†a†|0⟩ = √2 |2⟩` is the
//! only place where the two pictures differ.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{check_unit, Error, Result};

/// Normalization tolerance accepted for user-supplied amplitudes.
pub const INPUT_NORM_TOL: f64 = 1e-9;

/// Label of an optical fibre mode inside a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(pub usize);

impl From<usize> for ModeIndex {
    fn from(i: usize) -> Self {
        ModeIndex(i)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// One photon: where it is, and which internal (distinguishability) label it carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Photon {
    pub mode: usize,
    pub label: u8,
}

impl Photon {
    pub fn new(mode: ModeIndex, label: u8) -> Self {
        Photon {
            mode: mode.0,
            label,
        }
    }
}

/// Sorted list of photons; the canonical key of a basis state.
pub type Configuration = Vec<Photon>;

/// Which output of a coupler picks up the negative amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    /// `a_i† → r a_i† + t a_j†`, `a_j† → t a_i† − r a_j†`.
    #[default]
    Minus,
    /// `a_i† → −r a_i† + t a_j†`, `a_j† → t a_i† + r a_j†`.
    Plus,
}

/// A lossless two-mode coupler with intensity reflectance `R` and `T = 1 − R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerSpec {
    reflectance: f64,
    pub convention: SignConvention,
}

impl CouplerSpec {
    pub fn new(reflectance: f64) -> Result<Self> {
        Self::with_convention(reflectance, SignConvention::Minus)
    }

    pub fn with_convention(reflectance: f64, convention: SignConvention) -> Result<Self> {
        check_unit("reflectance", reflectance)?;
        Ok(CouplerSpec {
            reflectance,
            convention,
        })
    }

    pub fn balanced() -> Self {
        CouplerSpec {
            reflectance: 0.5,
            convention: SignConvention::Minus,
        }
    }

    pub fn reflectance(&self) -> f64 {
        self.reflectance
    }

    pub fn transmittance(&self) -> f64 {
        1.0 - self.reflectance
    }

    /// Amplitude reflectance `r = √R`.
    pub fn r(&self) -> f64 {
        self.reflectance.sqrt()
    }

    /// Amplitude transmittance `t = √T`.
    pub fn t(&self) -> f64 {
        self.transmittance().sqrt()
    }

    /// Transfer matrix `m[out][in]` over the ordered pair `(i, j)`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (r, t) = (self.r(), self.t());
        match self.convention {
            SignConvention::Minus => [[r, t], [t, -r]],
            SignConvention::Plus => [[-r, t], [t, r]],
        }
    }
}

/// Pure state of one or two photons over `num_modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    num_modes: usize,
    photons: usize,
    terms: BTreeMap<Configuration, Complex64>,
    survival: f64,
}

/// Factor between a normalized Fock amplitude and its creation-polynomial coefficient.
fn bunching_factor(config: &[Photon]) -> f64 {
    if config.len() == 2 && config[0] == config[1] {
        SQRT_2
    } else {
        1.0
    }
}

impl FockState {
    /// Builds a state from arbitrary (possibly unsorted, possibly repeated)
    /// configuration descriptions. Amplitudes of equal configurations add.
    pub fn from_terms<I>(num_modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Configuration, Complex64)>,
    {
        let mut map = BTreeMap::new();
        let mut photons = None;
        for (mut config, amp) in terms {
            if config.is_empty() || config.len() > 2 {
                return Err(Error::UnsupportedSize(config.len()));
            }
            if let Some(p) = config.iter().find(|p| p.mode >= num_modes) {
                return Err(Error::ModeOutOfRange {
                    mode: p.mode,
                    num_modes,
                });
            }
            if config.iter().any(|p| p.label > 1) {
                return Err(Error::Configuration("internal label must be 0 or 1".into()));
            }
            match photons {
                None => photons = Some(config.len()),
                Some(n) if n != config.len() => {
                    return Err(Error::Configuration(
                        "all terms must carry the same photon number".into(),
                    ))
                }
                _ => {}
            }
            config.sort_unstable();
            *map.entry(config).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let photons = photons.ok_or(Error::UnsupportedSize(0))?;
        Ok(FockState {
            num_modes,
            photons,
            terms: map,
            survival: 1.0,
        })
    }

    /// One photon (label 0) in a superposition of modes.
    pub fn single_photon(num_modes: usize, amplitudes: &[(ModeIndex, Complex64)]) -> Result<Self> {
        let labeled: Vec<_> = amplitudes
            .iter()
            .map(|&(m, a)| (Photon::new(m, 0), a))
            .collect();
        Self::single_photon_labeled(num_modes, &labeled)
    }

    /// One photon whose amplitudes may spread over internal labels too.
    pub fn single_photon_labeled(
        num_modes: usize,
        amplitudes: &[(Photon, Complex64)],
    ) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::UnsupportedSize(0));
        }
        let state = Self::from_terms(num_modes, amplitudes.iter().map(|&(p, a)| (vec![p], a)))?;
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > INPUT_NORM_TOL {
            return Err(Error::Normalization { norm_sqr });
        }
        Ok(state)
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn photon_number(&self) -> usize {
        self.photons
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Configuration, &Complex64)> {
        self.terms.iter()
    }

    /// Amplitude of a configuration given in any photon order.
    pub fn amplitude(&self, config: &[Photon]) -> Complex64 {
        let mut key = config.to_vec();
        key.sort_unstable();
        self.terms
            .get(&key)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// Accumulated probability of surviving every attenuation applied so far.
    pub fn survival(&self) -> f64 {
        self.survival
    }

    /// Probability discarded by attenuation so far.
    pub fn loss_probability(&self) -> f64 {
        1.0 - self.survival
    }

    /// `|⟨self|other⟩|²`, unnormalized.
    pub fn overlap_sqr(&self, other: &FockState) -> f64 {
        self.terms
            .iter()
            .map(|(c, a)| a.conj() * other.amplitude(c))
            .sum::<Complex64>()
            .norm_sqr()
    }

    fn check_mode(&self, m: ModeIndex) -> Result<()> {
        if m.0 < self.num_modes {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange {
                mode: m.0,
                num_modes: self.num_modes,
            })
        }
    }

    fn with_terms(&self, terms: BTreeMap<Configuration, Complex64>) -> FockState {
        FockState {
            num_modes: self.num_modes,
            photons: self.photons,
            terms,
            survival: self.survival,
        }
    }

    /// Bosonic product of two single-photon states on the same register.
    /// The result is rescaled so its squared norm is the product of the input norms.
    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        let total = self.photons + other.photons;
        if self.photons != 1 || other.photons != 1 {
            return Err(Error::UnsupportedSize(total));
        }
        if self.num_modes != other.num_modes {
            return Err(Error::RegisterMismatch(self.num_modes, other.num_modes));
        }
        let mut poly: BTreeMap<Configuration, Complex64> = BTreeMap::new();
        for (ca, aa) in &self.terms {
            for (cb, ab) in &other.terms {
                let mut key = vec![ca[0], cb[0]];
                key.sort_unstable();
                *poly.entry(key).or_insert(Complex64::new(0.0, 0.0)) += aa * ab;
            }
        }
        let mut terms: BTreeMap<_, _> = poly
            .into_iter()
            .map(|(c, p)| {
                let f = bunching_factor(&c);
                (c, p * f)
            })
            .collect();
        let target = self.norm_sqr() * other.norm_sqr();
        let got: f64 = terms.values().map(|a| a.norm_sqr()).sum();
        if got > 0.0 {
            let scale = (target / got).sqrt();
            terms.values_mut().for_each(|a| *a *= scale);
        }
        Ok(FockState {
            num_modes: self.num_modes,
            photons: total,
            terms,
            survival: self.survival * other.survival,
        })
    }

    /// Applies a linear map on creation operators, given per mode as a list of
    /// `(target mode, coefficient)`. Modes absent from `map` are left untouched.
    fn linear_map(&self, map: &BTreeMap<usize, Vec<(usize, f64)>>) -> FockState {
        let image = |p: Photon| -> Vec<(Photon, f64)> {
            match map.get(&p.mode) {
                Some(targets) => targets
                    .iter()
                    .map(|&(m, c)| {
                        (
                            Photon {
                                mode: m,
                                label: p.label,
                            },
                            c,
                        )
                    })
                    .collect(),
                None => vec![(p, 1.0)],
            }
        };
        let mut poly: BTreeMap<Configuration, Complex64> = BTreeMap::new();
        for (config, amp) in &self.terms {
            let coeff = amp / bunching_factor(config);
            match config.as_slice() {
                [p] => {
                    for (q, c) in image(*p) {
                        *poly.entry(vec![q]).or_insert(Complex64::new(0.0, 0.0)) += coeff * c;
                    }
                }
                [p1, p2] => {
                    let img2 = image(*p2);
                    for (q1, c1) in image(*p1) {
                        for &(q2, c2) in &img2 {
                            let mut key = vec![q1, q2];
                            key.sort_unstable();
                            *poly.entry(key).or_insert(Complex64::new(0.0, 0.0)) +=
                                coeff * (c1 * c2);
                        }
                    }
                }
                _ => unreachable!("photon number is validated on construction"),
            }
        }
        let terms = poly
            .into_iter()
            .filter(|(_, p)| *p != Complex64::new(0.0, 0.0))
            .map(|(c, p)| {
                let f = bunching_factor(&c);
                (c, p * f)
            })
            .collect();
        self.with_terms(terms)
    }

    /// Two-mode coupler on modes `(i, j)`; see [`SignConvention`].
    pub fn apply_coupler(
        &self,
        i: ModeIndex,
        j: ModeIndex,
        coupler: &CouplerSpec,
    ) -> Result<FockState> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(Error::InvalidCoupler(i.0));
        }
        let m = coupler.matrix();
        let mut map = BTreeMap::new();
        map.insert(i.0, vec![(i.0, m[0][0]), (j.0, m[1][0])]);
        map.insert(j.0, vec![(i.0, m[0][1]), (j.0, m[1][1])]);
        Ok(self.linear_map(&map))
    }

    /// Phase `e^{ikφ}` on every term with `k` photons in mode `m`.
    pub fn apply_phase(&self, m: ModeIndex, phi: f64) -> Result<FockState> {
        self.check_mode(m)?;
        let terms = self
            .terms
            .iter()
            .map(|(c, a)| {
                let k = c.iter().filter(|p| p.mode == m.0).count();
                (c.clone(), a * Complex64::from_polar(1.0, k as f64 * phi))
            })
            .collect();
        Ok(self.with_terms(terms))
    }

    /// No-loss branch of a lossy mode with intensity transmittance `eta`:
    /// each term is scaled by `eta^{k/2}`.
    pub fn apply_attenuation(&self, m: ModeIndex, eta: f64) -> Result<FockState> {
        self.check_mode(m)?;
        check_unit("transmittance", eta)?;
        let before = self.norm_sqr();
        let terms: BTreeMap<_, _> = self
            .terms
            .iter()
            .map(|(c, a)| {
                let k = c.iter().filter(|p| p.mode == m.0).count() as i32;
                (c.clone(), a * eta.sqrt().powi(k))
            })
            .collect();
        let mut out = self.with_terms(terms);
        if before > 0.0 {
            out.survival *= out.norm_sqr() / before;
        }
        Ok(out)
    }

    /// Keeps only the terms with exactly one photon in `group_a` and one in
    /// `group_b` and reads them as a two-qubit (dual-rail) state.
    pub fn postselect_coincidence(
        &self,
        group_a: [ModeIndex; 2],
        group_b: [ModeIndex; 2],
    ) -> Result<Coincidence> {
        for m in group_a.iter().chain(group_b.iter()) {
            self.check_mode(*m)?;
        }
        if group_a[0] == group_a[1] || group_b[0] == group_b[1] {
            return Err(Error::Configuration("group lists a mode twice".into()));
        }
        if group_a.iter().any(|m| group_b.contains(m)) {
            return Err(Error::Configuration("groups overlap".into()));
        }
        if self.photons != 2 {
            return Err(Error::Configuration(format!(
                "coincidence post-selection needs two photons, state has {}",
                self.photons
            )));
        }
        let rail = |group: &[ModeIndex; 2], p: &Photon| group.iter().position(|m| m.0 == p.mode);
        let mut branches: BTreeMap<(u8, u8), [[Complex64; 2]; 2]> = BTreeMap::new();
        for (config, amp) in &self.terms {
            let (p, q) = (&config[0], &config[1]);
            let hit = match (rail(&group_a, p), rail(&group_b, q)) {
                (Some(a), Some(b)) => Some((a, b, p.label, q.label)),
                _ => match (rail(&group_a, q), rail(&group_b, p)) {
                    (Some(a), Some(b)) => Some((a, b, q.label, p.label)),
                    _ => None,
                },
            };
            if let Some((a, b, la, lb)) = hit {
                let entry = branches
                    .entry((la, lb))
                    .or_insert([[Complex64::new(0.0, 0.0); 2]; 2]);
                entry[a][b] += amp;
            }
        }
        let success_prob = branches
            .values()
            .flat_map(|v| v.iter().flatten())
            .map(|a| a.norm_sqr())
            .sum();
        Ok(Coincidence {
            branches,
            success_prob,
        })
    }
}

/// Result of coincidence post-selection: one unnormalized 2×2 amplitude array
/// `[rail of A][rail of B]` per pair of internal labels `(label in A, label in B)`.
/// Different label pairs are orthogonal photon states, so the dual-rail
/// state is the incoherent sum of the branches.
#[derive(Debug, Clone, PartialEq)]
pub struct Coincidence {
    pub branches: BTreeMap<(u8, u8), [[Complex64; 2]; 2]>,
    pub success_prob: f64,
}

impl Coincidence {
    /// The amplitude array when the retained state is pure (a single label branch).
    pub fn pure_amplitudes(&self) -> Option<[[Complex64; 2]; 2]> {
        let mut nonzero = self
            .branches
            .values()
            .filter(|v| v.iter().flatten().any(|a| a.norm_sqr() > 0.0));
        let first = nonzero.next().copied();
        match nonzero.next() {
            None => first.or(Some([[Complex64::new(0.0, 0.0); 2]; 2])),
            Some(_) => None,
        }
    }

    /// Unnormalized two-qubit density matrix, index `2·a + b`.
    pub fn density(&self) -> [[Complex64; 4]; 4] {
        let mut rho = [[Complex64::new(0.0, 0.0); 4]; 4];
        for v in self.branches.values() {
            let flat = [v[0][0], v[0][1], v[1][0], v[1][1]];
            for (x, ax) in flat.iter().enumerate() {
                for (y, ay) in flat.iter().enumerate() {
                    rho[x][y] += ax * ay.conj();
                }
            }
        }
        rho
    }

    /// Probability of finding the A photon on rail `a` and the B photon on rail `b`.
    pub fn rail_probabilities(&self) -> [[f64; 2]; 2] {
        let mut p = [[0.0; 2]; 2];
        for v in self.branches.values() {
            for a in 0..2 {
                for b in 0..2 {
                    p[a][b] += v[a][b].norm_sqr();
                }
            }
        }
        p
    }
}
