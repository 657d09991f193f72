//! Imperfection models and Monte-Carlo coincidence counting.
//!
//! Every repetition draws from its own ChaCha stream derived from
//! `(seed, stream id)`, so a run is reproducible no matter how repetitions or
//! cells are scheduled.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::CloneDesign;
use crate::error::{check_unit, Error, Result};
use crate::fock::{CouplerSpec, FockState, ModeIndex};
use crate::network::{
    detect, prepare_input, ClonerNetwork, CoincidenceCounts, InputSpec, OutcomeProbs, CLONE_A0,
    CLONE_A1, CLONE_B0, CLONE_B1, SIGNAL_0, SIGNAL_1,
};

/// Optical path that may carry extra loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    /// Signal rail 0 between the splitter and the first coupler.
    S0,
    /// Signal rail 1 between the splitter and the second coupler.
    S1,
    A0,
    A1,
    B0,
    B1,
}

impl Arm {
    pub const ALL: [Arm; 6] = [Arm::S0, Arm::S1, Arm::A0, Arm::A1, Arm::B0, Arm::B1];

    pub fn mode(&self) -> ModeIndex {
        match self {
            Arm::S0 => SIGNAL_0,
            Arm::S1 => SIGNAL_1,
            Arm::A0 => CLONE_A0,
            Arm::A1 => CLONE_A1,
            Arm::B0 => CLONE_B0,
            Arm::B1 => CLONE_B1,
        }
    }

    fn before_couplers(&self) -> bool {
        matches!(self, Arm::S0 | Arm::S1)
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Arm::S0 => "s0",
            Arm::S1 => "s1",
            Arm::A0 => "a0",
            Arm::A1 => "a1",
            Arm::B0 => "b0",
            Arm::B1 => "b1",
        };
        f.write_str(s)
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arm::ALL
            .into_iter()
            .find(|a| a.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Configuration(format!("unknown arm '{s}'")))
    }
}

/// Detector order: `D0A` (`+` of clone A), `D1A`, `D0B`, `D1B`.
pub type DetectorEfficiencies = [f64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Spectral/temporal overlap of the two photons; equals the HOM visibility.
    pub overlap_mu: f64,
    /// Standard deviation of the phase random walk after one second, radians.
    pub drift_rate_sigma: f64,
    pub stabilization_period_s: f64,
    /// Phase error left behind by one stabilization cycle, radians.
    pub stabilization_residual_sigma: f64,
    /// Extra intensity transmittance per arm; missing arms are lossless.
    pub arm_transmittances: BTreeMap<Arm, f64>,
    pub detector_efficiencies: DetectorEfficiencies,
    /// Standard deviation of the realized coupler reflectance around its target.
    pub coupler_setting_error: f64,
    /// Single-photon interference visibility of each clone's interferometer.
    pub interferometer_visibility: f64,
    /// Time slices per stabilization period used to integrate the drift.
    pub drift_slices: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::paper_like()
    }
}

impl NoiseModel {
    /// Noise preset fitted to land 1–2 % below the ideal fidelities.
    pub fn paper_like() -> Self {
        NoiseModel {
            overlap_mu: 0.98,
            drift_rate_sigma: PI / 1000.0,
            stabilization_period_s: 3.0,
            stabilization_residual_sigma: 0.02,
            arm_transmittances: BTreeMap::new(),
            detector_efficiencies: [0.5; 4],
            coupler_setting_error: 0.005,
            interferometer_visibility: 0.98,
            drift_slices: 6,
        }
    }

    pub fn ideal() -> Self {
        NoiseModel {
            overlap_mu: 1.0,
            drift_rate_sigma: 0.0,
            stabilization_period_s: 3.0,
            stabilization_residual_sigma: 0.0,
            arm_transmittances: BTreeMap::new(),
            detector_efficiencies: [1.0; 4],
            coupler_setting_error: 0.0,
            interferometer_visibility: 1.0,
            drift_slices: 1,
        }
    }

    /// True when the model introduces no imperfection at all.
    pub fn is_ideal(&self) -> bool {
        self.overlap_mu == 1.0
            && self.drift_rate_sigma == 0.0
            && self.stabilization_residual_sigma == 0.0
            && self.arm_transmittances.values().all(|&t| t == 1.0)
            && self.detector_efficiencies.iter().all(|&e| e == 1.0)
            && self.coupler_setting_error == 0.0
            && self.interferometer_visibility == 1.0
    }

    pub fn arm_transmittance(&self, arm: Arm) -> f64 {
        self.arm_transmittances.get(&arm).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("overlap_mu", self.overlap_mu)?;
        check_unit("interferometer_visibility", self.interferometer_visibility)?;
        for &t in self.arm_transmittances.values() {
            check_unit("arm transmittance", t)?;
        }
        for &e in &self.detector_efficiencies {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::OutOfRange {
                    name: "detector efficiency",
                    value: e,
                });
            }
        }
        for (name, v) in [
            ("drift_rate_sigma", self.drift_rate_sigma),
            (
                "stabilization_residual_sigma",
                self.stabilization_residual_sigma,
            ),
            ("coupler_setting_error", self.coupler_setting_error),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::OutOfRange { name, value: v });
            }
        }
        if !(self.stabilization_period_s > 0.0) {
            return Err(Error::OutOfRange {
                name: "stabilization_period_s",
                value: self.stabilization_period_s,
            });
        }
        if self.drift_slices == 0 {
            return Err(Error::OutOfRange {
                name: "drift_slices",
                value: 0.0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Length of one measurement window, seconds.
    pub duration_s: f64,
    /// Generated photon pairs per second.
    pub pair_rate_hz: f64,
    pub seed: u64,
    pub repetitions: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            duration_s: 3.0,
            pair_rate_hz: 1000.0,
            seed: 2007,
            repetitions: 40,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::OutOfRange {
                name: "duration_s",
                value: self.duration_s,
            });
        }
        if !(self.pair_rate_hz >= 0.0 && self.pair_rate_hz.is_finite()) {
            return Err(Error::OutOfRange {
                name: "pair_rate_hz",
                value: self.pair_rate_hz,
            });
        }
        if self.repetitions == 0 {
            return Err(Error::OutOfRange {
                name: "repetitions",
                value: 0.0,
            });
        }
        Ok(())
    }

    /// Expected number of generated pairs in one repetition.
    pub fn pairs_per_repetition(&self) -> f64 {
        self.pair_rate_hz * self.duration_s
    }

    /// Same run with a seed derived from `(self.seed, cell)`.
    pub fn for_cell(&self, cell: u64) -> Self {
        RunConfig {
            seed: mix_seed(self.seed, cell),
            ..*self
        }
    }
}

/// SplitMix64 finalizer over the pair.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const SETTING_STREAM: u64 = 0;

fn phase_stream(rep: usize) -> u64 {
    2 * rep as u64 + 1
}

fn count_stream(rep: usize) -> u64 {
    2 * rep as u64 + 2
}

/// Coincidence probability for one photon in each input of an `R:T` coupler
/// when the photons overlap with weight `mu`.
pub fn hom_coincidence_probability(r: f64, mu: f64) -> Result<f64> {
    check_unit("R", r)?;
    check_unit("mu", mu)?;
    let t = 1.0 - r;
    Ok(mu * (t - r).powi(2) + (1.0 - mu) * (t * t + r * r))
}

/// Dip visibility `(P_dist − P)/P_dist` at reflectance `r`.
pub fn hom_visibility(r: f64, mu: f64) -> Result<f64> {
    let dist = hom_coincidence_probability(r, 0.0)?;
    Ok((dist - hom_coincidence_probability(r, mu)?) / dist)
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("sigma is validated as finite and non-negative")
}

/// Wiener increment over `duration_s`: zero mean, standard deviation `sigma_rate·√duration`.
pub fn sample_phase_drift<R: Rng + ?Sized>(sigma_rate: f64, duration_s: f64, rng: &mut R) -> f64 {
    let sd = sigma_rate * duration_s.max(0.0).sqrt();
    if sd == 0.0 {
        return 0.0;
    }
    normal(sd).sample(rng)
}

/// One stabilization: the accumulated error is estimated and cancelled,
/// leaving a fresh residual error.
pub fn stabilization_cycle<R: Rng + ?Sized>(
    _current_phase_error: f64,
    model: &NoiseModel,
    rng: &mut R,
) -> f64 {
    let sd = model.stabilization_residual_sigma;
    if sd == 0.0 {
        return 0.0;
    }
    normal(sd).sample(rng)
}

fn detector_pair_factors(eff: &DetectorEfficiencies) -> [f64; 4] {
    let [a0, a1, b0, b1] = *eff;
    // Same order as the count fields: ++, −−, +−, −+.
    [a0 * b0, a1 * b1, a0 * b1, a1 * b0]
}

/// Divides every tally by the product of the two detector efficiencies involved.
pub fn rescale_counts(
    counts: &CoincidenceCounts,
    efficiencies: &DetectorEfficiencies,
) -> Result<CoincidenceCounts> {
    if let Some(&e) = efficiencies.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::ZeroEfficiency(e));
    }
    let [pp, mm, pm, mp] = detector_pair_factors(efficiencies);
    Ok(CoincidenceCounts::new(
        counts.c_pp / pp,
        counts.c_mm / mm,
        counts.c_pm / pm,
        counts.c_mp / mp,
    ))
}

/// The noisy network up to (but excluding) the drifting phases and detection.
#[derive(Debug, Clone)]
pub struct NoisyCloner {
    state: FockState,
    phi: f64,
    visibility: f64,
}

impl NoisyCloner {
    /// `vrc_reflectances` are the realized couplers; compensation stays the
    /// one calibrated for the nominal design.
    pub fn build(
        design: &CloneDesign,
        phi: f64,
        noise: &NoiseModel,
        vrc_reflectances: (f64, f64),
    ) -> Result<Self> {
        let nominal = ClonerNetwork::new(*design)?;
        let net = nominal.with_couplers(
            CouplerSpec::new(vrc_reflectances.0)?,
            CouplerSpec::new(vrc_reflectances.1)?,
        );
        let mut state = prepare_input(&InputSpec::equatorial(phi), noise.overlap_mu)?;
        for arm in Arm::ALL.iter().filter(|a| a.before_couplers()) {
            state = state.apply_attenuation(arm.mode(), noise.arm_transmittance(*arm))?;
        }
        state = net.propagate(&state)?;
        for arm in Arm::ALL.iter().filter(|a| !a.before_couplers()) {
            state = state.apply_attenuation(arm.mode(), noise.arm_transmittance(*arm))?;
        }
        Ok(NoisyCloner {
            state,
            phi,
            visibility: noise.interferometer_visibility,
        })
    }

    /// Unnormalized detection probabilities with interferometer phase errors
    /// `drift_a` (rail A1) and `drift_b` (rail B1).
    ///
    /// Visibility `V < 1` is a dephasing of each clone's rails, realized
    /// exactly as a mixture of a π flip on rail 1 (weight `(1−V)/2`) and no flip.
    pub fn outcome_probs(&self, drift_a: f64, drift_b: f64) -> Result<OutcomeProbs> {
        let keep = 0.5 * (1.0 + self.visibility);
        let flips: &[(f64, f64)] = if self.visibility == 1.0 {
            &[(0.0, 1.0)]
        } else {
            &[(0.0, keep), (PI, 1.0 - keep)]
        };
        let mut acc = OutcomeProbs::default();
        for &(flip_a, w_a) in flips {
            for &(flip_b, w_b) in flips {
                let drifted = self
                    .state
                    .apply_phase(CLONE_A1, drift_a + flip_a)?
                    .apply_phase(CLONE_B1, drift_b + flip_b)?;
                let p = detect(&drifted, self.phi, self.phi)?;
                let w = w_a * w_b;
                acc.pp += w * p.pp;
                acc.mm += w * p.mm;
                acc.pm += w * p.pm;
                acc.mp += w * p.mp;
            }
        }
        Ok(acc)
    }
}

/// Draws the realized coupler reflectances for one run.
pub fn realized_reflectances(design: &CloneDesign, noise: &NoiseModel, seed: u64) -> (f64, f64) {
    if noise.coupler_setting_error == 0.0 {
        return (design.r0, design.r1);
    }
    let mut rng = rng_stream(seed, SETTING_STREAM);
    let n = normal(noise.coupler_setting_error);
    let r0 = (design.r0 + n.sample(&mut rng)).clamp(0.0, 1.0);
    let r1 = (design.r1 + n.sample(&mut rng)).clamp(0.0, 1.0);
    (r0, r1)
}

/// Window-averaged detection probabilities of one repetition, with the phase
/// errors of both interferometers drifting from their post-stabilization values.
fn repetition_probs(
    cloner: &NoisyCloner,
    noise: &NoiseModel,
    cfg: &RunConfig,
    rep: usize,
) -> Result<OutcomeProbs> {
    let mut rng = rng_stream(cfg.seed, phase_stream(rep));
    let mut err_a = stabilization_cycle(0.0, noise, &mut rng);
    let mut err_b = stabilization_cycle(0.0, noise, &mut rng);
    let periods = (cfg.duration_s / noise.stabilization_period_s)
        .ceil()
        .max(1.0) as usize;
    let slices = periods * noise.drift_slices;
    let dt = cfg.duration_s / slices as f64;
    let mut acc = OutcomeProbs::default();
    for k in 0..slices {
        if k > 0 && k % noise.drift_slices == 0 {
            err_a = stabilization_cycle(err_a, noise, &mut rng);
            err_b = stabilization_cycle(err_b, noise, &mut rng);
        }
        err_a += sample_phase_drift(noise.drift_rate_sigma, dt, &mut rng);
        err_b += sample_phase_drift(noise.drift_rate_sigma, dt, &mut rng);
        let p = cloner.outcome_probs(err_a, err_b)?;
        acc.pp += p.pp;
        acc.mm += p.mm;
        acc.pm += p.pm;
        acc.mp += p.mp;
    }
    let n = slices as f64;
    Ok(OutcomeProbs {
        pp: acc.pp / n,
        mm: acc.mm / n,
        pm: acc.pm / n,
        mp: acc.mp / n,
    })
}

fn mean_counts(p: &OutcomeProbs, noise: &NoiseModel, cfg: &RunConfig) -> [f64; 4] {
    let pairs = cfg.pairs_per_repetition();
    let f = detector_pair_factors(&noise.detector_efficiencies);
    [
        pairs * p.pp * f[0],
        pairs * p.mm * f[1],
        pairs * p.pm * f[2],
        pairs * p.mp * f[3],
    ]
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Counting {
    Poisson,
    Expected,
}

fn run(
    design: &CloneDesign,
    phi: f64,
    noise: &NoiseModel,
    cfg: &RunConfig,
    counting: Counting,
) -> Result<Vec<CoincidenceCounts>> {
    noise.validate()?;
    cfg.validate()?;
    let cloner = NoisyCloner::build(
        design,
        phi,
        noise,
        realized_reflectances(design, noise, cfg.seed),
    )?;
    (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let probs = repetition_probs(&cloner, noise, cfg, rep)?;
            let means = mean_counts(&probs, noise, cfg);
            let c = match counting {
                Counting::Expected => means,
                Counting::Poisson => {
                    let mut rng = rng_stream(cfg.seed, count_stream(rep));
                    means.map(|m| poisson(m, &mut rng))
                }
            };
            Ok(CoincidenceCounts::new(c[0], c[1], c[2], c[3]))
        })
        .collect()
}

/// Raw (not efficiency-corrected) coincidence tallies, one per repetition.
pub fn simulate_run(
    design: &CloneDesign,
    phi: f64,
    noise: &NoiseModel,
    cfg: &RunConfig,
) -> Result<Vec<CoincidenceCounts>> {
    run(design, phi, noise, cfg, Counting::Poisson)
}

/// Like [`simulate_run`] with the same phase and setting draws, but returning
/// the Poisson means instead of samples.
pub fn expected_run(
    design: &CloneDesign,
    phi: f64,
    noise: &NoiseModel,
    cfg: &RunConfig,
) -> Result<Vec<CoincidenceCounts>> {
    run(design, phi, noise, cfg, Counting::Expected)
}

/// Pooled statistics of a set of measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub f_a: f64,
    pub f_b: f64,
    pub err_a: f64,
    pub err_b: f64,
    /// Efficiency-corrected coincidences per generated pair.
    pub success_rate: f64,
    pub success_rate_err: f64,
    /// Raw coincidences.
    pub total_counts: f64,
    pub measurements: usize,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl RunSummary {
    /// Rescales each measurement, pools them for the fidelities and uses the
    /// spread of per-measurement estimates as the statistical error. With a
    /// single usable measurement the binomial error `√(F(1−F)/N)` is reported.
    pub fn from_measurements(
        raw: &[CoincidenceCounts],
        efficiencies: &DetectorEfficiencies,
        pairs_per_measurement: f64,
    ) -> Result<Self> {
        let rescaled = raw
            .iter()
            .map(|c| rescale_counts(c, efficiencies))
            .collect::<Result<Vec<_>>>()?;
        let pooled: CoincidenceCounts = rescaled.iter().copied().sum();
        let (f_a, f_b) = crate::network::fidelities_from_counts(&pooled)?;
        let total_counts: f64 = raw.iter().map(|c| c.total()).sum();

        let per: Vec<(f64, f64)> = rescaled
            .iter()
            .filter(|c| c.total() > 0.0)
            .map(crate::network::fidelities_from_counts)
            .collect::<Result<_>>()?;
        let (err_a, err_b) = if per.len() >= 2 {
            let a: Vec<f64> = per.iter().map(|p| p.0).collect();
            let b: Vec<f64> = per.iter().map(|p| p.1).collect();
            (mean_and_stderr(&a).1, mean_and_stderr(&b).1)
        } else {
            (
                (f_a * (1.0 - f_a) / total_counts).sqrt(),
                (f_b * (1.0 - f_b) / total_counts).sqrt(),
            )
        };

        let pairs = pairs_per_measurement * raw.len() as f64;
        let (success_rate, success_rate_err) = if pairs > 0.0 {
            let rate = pooled.total() / pairs;
            (rate, rate / total_counts.sqrt())
        } else {
            (0.0, 0.0)
        };
        Ok(RunSummary {
            f_a,
            f_b,
            err_a,
            err_b,
            success_rate,
            success_rate_err,
            total_counts,
            measurements: raw.len(),
        })
    }
}
