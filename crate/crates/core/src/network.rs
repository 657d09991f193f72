//! The cloner circuit on a four-mode register.
//!
//! Register layout: the signal qubit is dual-rail on modes 0/1, the ancilla
//! photon enters mode 2 and mode 3 is the vacuum port of the second coupler.
//! The first coupler mixes modes 0 and 2, the second mixes modes 1 and 3, in
//! place, so after the couplers modes 0/1 are the rails of clone A and modes
//! 2/3 the rails of clone B.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::design::CloneDesign;
use crate::error::{check_unit, Error, Result};
use crate::fock::{Coincidence, CouplerSpec, FockState, ModeIndex, Photon};

pub const NUM_MODES: usize = 4;

pub const SIGNAL_0: ModeIndex = ModeIndex(0);
pub const SIGNAL_1: ModeIndex = ModeIndex(1);
pub const ANCILLA_0: ModeIndex = ModeIndex(2);
pub const ANCILLA_1: ModeIndex = ModeIndex(3);

pub const CLONE_A0: ModeIndex = ModeIndex(0);
pub const CLONE_A1: ModeIndex = ModeIndex(1);
pub const CLONE_B0: ModeIndex = ModeIndex(2);
pub const CLONE_B1: ModeIndex = ModeIndex(3);

pub const CLONE_A: [ModeIndex; 2] = [CLONE_A0, CLONE_A1];
pub const CLONE_B: [ModeIndex; 2] = [CLONE_B0, CLONE_B1];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// An equatorial input `(|0⟩ + e^{iφ}|1⟩)/√2`, optionally unbalanced.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InputSpec {
    pub phi: f64,
    /// Shift of the rail-0 intensity away from 1/2: `|a0|² = 1/2 + imbalance`.
    /// `0.5` puts the whole photon on rail 0, `-0.5` on rail 1.
    #[serde(default)]
    pub imbalance: f64,
}

impl InputSpec {
    pub fn equatorial(phi: f64) -> Self {
        InputSpec {
            phi,
            imbalance: 0.0,
        }
    }

    pub fn signal_amplitudes(&self) -> Result<[Complex64; 2]> {
        if !(-0.5..=0.5).contains(&self.imbalance) {
            return Err(Error::OutOfRange {
                name: "imbalance",
                value: self.imbalance,
            });
        }
        let p0 = 0.5 + self.imbalance;
        Ok([
            Complex64::new(p0.sqrt(), 0.0),
            Complex64::from_polar((1.0 - p0).max(0.0).sqrt(), self.phi),
        ])
    }
}

/// Signal photon on modes 0/1 and the ancilla photon on mode 2. The ancilla
/// carries label 0 with weight `overlap_mu` and label 1 otherwise.
pub fn prepare_input(spec: &InputSpec, overlap_mu: f64) -> Result<FockState> {
    check_unit("overlap_mu", overlap_mu)?;
    let [a0, a1] = spec.signal_amplitudes()?;
    let signal = FockState::single_photon(NUM_MODES, &[(SIGNAL_0, a0), (SIGNAL_1, a1)])?;
    let mut anc = vec![(
        Photon::new(ANCILLA_0, 0),
        Complex64::new(overlap_mu.sqrt(), 0.0),
    )];
    if overlap_mu < 1.0 {
        anc.push((
            Photon::new(ANCILLA_0, 1),
            Complex64::new((1.0 - overlap_mu).sqrt(), 0.0),
        ));
    }
    let ancilla = FockState::single_photon_labeled(NUM_MODES, &anc)?;
    signal.tensor(&ancilla)
}

/// Couplers plus the output-rail phases that make the post-selected map
/// exactly `|0⟩ → |00⟩`, `|1⟩ → √q|10⟩ + √(1−q)|01⟩` up to a positive prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct ClonerNetwork {
    pub design: CloneDesign,
    pub vrc0: CouplerSpec,
    pub vrc1: CouplerSpec,
    /// Phase per register mode applied after the couplers.
    pub compensation: [f64; NUM_MODES],
}

impl ClonerNetwork {
    pub fn new(design: CloneDesign) -> Result<Self> {
        let vrc0 = CouplerSpec::new(design.r0)?;
        let vrc1 = CouplerSpec::new(design.r1)?;
        let compensation = calibrate_compensation(&vrc0, &vrc1)?;
        Ok(ClonerNetwork {
            design,
            vrc0,
            vrc1,
            compensation,
        })
    }

    /// Same calibrated compensation phases, different physical couplers.
    pub fn with_couplers(&self, vrc0: CouplerSpec, vrc1: CouplerSpec) -> Self {
        ClonerNetwork {
            vrc0,
            vrc1,
            ..self.clone()
        }
    }

    /// Couplers only, without compensation.
    pub fn couple(&self, input: &FockState) -> Result<FockState> {
        input
            .apply_coupler(SIGNAL_0, ANCILLA_0, &self.vrc0)?
            .apply_coupler(SIGNAL_1, ANCILLA_1, &self.vrc1)
    }

    pub fn compensate(&self, state: &FockState) -> Result<FockState> {
        let mut out = state.clone();
        for (mode, &theta) in self.compensation.iter().enumerate() {
            if theta != 0.0 {
                out = out.apply_phase(ModeIndex(mode), theta)?;
            }
        }
        Ok(out)
    }

    pub fn propagate(&self, input: &FockState) -> Result<FockState> {
        self.compensate(&self.couple(input)?)
    }
}

fn calibrate_compensation(vrc0: &CouplerSpec, vrc1: &CouplerSpec) -> Result<[f64; NUM_MODES]> {
    let raw = |imbalance: f64| -> Result<[[Complex64; 2]; 2]> {
        let input = prepare_input(
            &InputSpec {
                phi: 0.0,
                imbalance,
            },
            1.0,
        )?;
        let out = input
            .apply_coupler(SIGNAL_0, ANCILLA_0, vrc0)?
            .apply_coupler(SIGNAL_1, ANCILLA_1, vrc1)?
            .postselect_coincidence(CLONE_A, CLONE_B)?;
        out.pure_amplitudes()
            .ok_or_else(|| Error::Internal("calibration state is not pure".into()))
    };
    let zero = raw(0.5)?;
    let one = raw(-0.5)?;
    let arg = |z: Complex64| if z.norm() > 1e-15 { z.arg() } else { 0.0 };
    // Global phase fixed by leaving rail A0 alone.
    let b0 = -arg(zero[0][0]);
    let a1 = -arg(one[1][0]) - b0;
    let b1 = -arg(one[0][1]);
    let wrap = |x: f64| x.rem_euclid(std::f64::consts::TAU);
    Ok([0.0, wrap(a1), wrap(b0), wrap(b1)])
}

/// Post-selected two-clone amplitudes `[A rail][B rail]` and the success probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloneOutput {
    pub amplitudes: [[Complex64; 2]; 2],
    pub success_prob: f64,
}

impl CloneOutput {
    pub fn normalized(&self) -> Result<[[Complex64; 2]; 2]> {
        if self.success_prob <= 0.0 {
            return Err(Error::DegeneratePostselection);
        }
        let s = self.success_prob.sqrt();
        Ok(self.amplitudes.map(|row| row.map(|a| a / s)))
    }
}

pub fn run_input(design: &CloneDesign, input: &InputSpec) -> Result<CloneOutput> {
    let net = ClonerNetwork::new(*design)?;
    let out = net
        .propagate(&prepare_input(input, 1.0)?)?
        .postselect_coincidence(CLONE_A, CLONE_B)?;
    let amplitudes = out
        .pure_amplitudes()
        .ok_or_else(|| Error::Internal("ideal output is not pure".into()))?;
    Ok(CloneOutput {
        amplitudes,
        success_prob: out.success_prob,
    })
}

/// Ideal network on the equatorial input with phase `phi`.
pub fn run_ideal(design: &CloneDesign, phi: f64) -> Result<CloneOutput> {
    run_input(design, &InputSpec::equatorial(phi))
}

/// Projection outcome probabilities; `+` is the input state, `−` its orthogonal complement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutcomeProbs {
    pub pp: f64,
    pub mm: f64,
    pub pm: f64,
    pub mp: f64,
}

impl OutcomeProbs {
    /// From a `[A outcome][B outcome]` table with index 0 = `+`.
    pub fn from_table(t: [[f64; 2]; 2]) -> Self {
        OutcomeProbs {
            pp: t[0][0],
            mm: t[1][1],
            pm: t[0][1],
            mp: t[1][0],
        }
    }

    pub fn total(&self) -> f64 {
        self.pp + self.mm + self.pm + self.mp
    }

    pub fn normalized(&self) -> Result<Self> {
        let s = self.total();
        if s <= 0.0 {
            return Err(Error::DegeneratePostselection);
        }
        Ok(OutcomeProbs {
            pp: self.pp / s,
            mm: self.mm / s,
            pm: self.pm / s,
            mp: self.mp / s,
        })
    }

    pub fn fidelities(&self) -> Result<(f64, f64)> {
        let n = self.normalized()?;
        Ok((n.pp + n.pm, n.pp + n.mp))
    }
}

fn equatorial_pair(phi: f64) -> [[Complex64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let e = Complex64::from_polar(h, phi);
    [[Complex64::new(h, 0.0), e], [Complex64::new(h, 0.0), -e]]
}

/// Analytic projection of every branch of `co` onto `{ψ(φ), ψ⊥(φ)}` for each clone.
/// Unnormalized: the entries sum to the success probability.
pub fn project_outcomes(co: &Coincidence, phi: f64) -> OutcomeProbs {
    let basis = equatorial_pair(phi);
    let mut t = [[0.0; 2]; 2];
    for v in co.branches.values() {
        for (a, pa) in basis.iter().enumerate() {
            for (b, pb) in basis.iter().enumerate() {
                let mut amp = ZERO;
                for x in 0..2 {
                    for y in 0..2 {
                        amp += pa[x].conj() * pb[y].conj() * v[x][y];
                    }
                }
                t[a][b] += amp.norm_sqr();
            }
        }
    }
    OutcomeProbs::from_table(t)
}

/// Measurement block per clone: phase `−setting` on rail 1, a balanced coupler,
/// then one detector per rail. Detector 0 is the `+` outcome.
pub fn detect(state: &FockState, setting_a: f64, setting_b: f64) -> Result<OutcomeProbs> {
    let bs = CouplerSpec::balanced();
    let out = state
        .apply_phase(CLONE_A1, -setting_a)?
        .apply_phase(CLONE_B1, -setting_b)?
        .apply_coupler(CLONE_A0, CLONE_A1, &bs)?
        .apply_coupler(CLONE_B0, CLONE_B1, &bs)?
        .postselect_coincidence(CLONE_A, CLONE_B)?;
    Ok(OutcomeProbs::from_table(out.rail_probabilities()))
}

/// Normalized probabilities of the four `(±, ±)` outcomes for the ideal network.
pub fn joint_outcome_probs(design: &CloneDesign, phi: f64) -> Result<OutcomeProbs> {
    let net = ClonerNetwork::new(*design)?;
    let co = net
        .propagate(&prepare_input(&InputSpec::equatorial(phi), 1.0)?)?
        .postselect_coincidence(CLONE_A, CLONE_B)?;
    project_outcomes(&co, phi).normalized()
}

pub fn clone_fidelities_ideal(design: &CloneDesign, phi: f64) -> Result<(f64, f64)> {
    joint_outcome_probs(design, phi)?.fidelities()
}

/// Tallies `C^{++}, C^{−−}, C^{+−}, C^{−+}`; first sign is clone A.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoincidenceCounts {
    pub c_pp: f64,
    pub c_mm: f64,
    pub c_pm: f64,
    pub c_mp: f64,
}

impl CoincidenceCounts {
    pub fn new(c_pp: f64, c_mm: f64, c_pm: f64, c_mp: f64) -> Self {
        CoincidenceCounts {
            c_pp,
            c_mm,
            c_pm,
            c_mp,
        }
    }

    pub fn total(&self) -> f64 {
        self.c_pp + self.c_mm + self.c_pm + self.c_mp
    }

    pub fn scaled(&self, k: f64) -> Self {
        CoincidenceCounts::new(self.c_pp * k, self.c_mm * k, self.c_pm * k, self.c_mp * k)
    }
}

impl std::ops::Add for CoincidenceCounts {
    type Output = CoincidenceCounts;

    fn add(self, o: Self) -> Self {
        CoincidenceCounts::new(
            self.c_pp + o.c_pp,
            self.c_mm + o.c_mm,
            self.c_pm + o.c_pm,
            self.c_mp + o.c_mp,
        )
    }
}

impl std::iter::Sum for CoincidenceCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(CoincidenceCounts::default(), |a, b| a + b)
    }
}

pub fn fidelities_from_counts(counts: &CoincidenceCounts) -> Result<(f64, f64)> {
    let all = [counts.c_pp, counts.c_mm, counts.c_pm, counts.c_mp];
    if all.iter().any(|c| *c < 0.0 || !c.is_finite()) {
        return Err(Error::OutOfRange {
            name: "coincidence count",
            value: all.into_iter().fold(f64::NAN, f64::min),
        });
    }
    let total = counts.total();
    if total <= 0.0 {
        return Err(Error::EmptyData);
    }
    Ok((
        (counts.c_pp + counts.c_pm) / total,
        (counts.c_pp + counts.c_mp) / total,
    ))
}
