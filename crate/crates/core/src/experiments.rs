//! Experiment configuration, plot-ready CSV tables and the commands behind the
//! `cloner` binary.
//!
//! Configuration files are TOML with `[design]`, `[noise]`, `[run]` and
//! `[output]` sections. Every field is optional.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{
    pc_tradeoff_curve, solve_reflectances, universal_tradeoff_curve, CloneDesign, TradeoffPoint,
};
use crate::error::{Error, Result};
use crate::network::clone_fidelities_ideal;
use crate::noise::{simulate_run, NoiseModel, RunConfig, RunSummary};

pub const SEED_ENV: &str = "CLONER_SEED";
pub const DEFAULT_SEED: u64 = 2007;
pub const TABLE_Q_VALUES: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    #[default]
    DesignTable,
    Tradeoff,
    PhaseScan,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Ideal,
}

impl Preset {
    pub fn noise(&self) -> NoiseModel {
        match self {
            Preset::Paper => NoiseModel::paper_like(),
            Preset::Ideal => NoiseModel::ideal(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSection {
    pub q_values: Vec<f64>,
    pub phi_start_deg: f64,
    pub phi_stop_deg: f64,
    pub phi_step_deg: f64,
    /// Samples per theoretical trade-off curve.
    pub curve_points: usize,
}

impl Default for DesignSection {
    fn default() -> Self {
        DesignSection {
            q_values: TABLE_Q_VALUES.to_vec(),
            phi_start_deg: 0.0,
            phi_stop_deg: 360.0,
            phi_step_deg: 20.0,
            curve_points: 101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub duration_s: f64,
    pub pair_rate_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub repetitions: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        let d = RunConfig::default();
        RunSection {
            duration_s: d.duration_s,
            pair_rate_hz: d.pair_rate_hz,
            seed: None,
            repetitions: d.repetitions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output file; `-` writes to standard output.
    pub path: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { path: "-".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub design: DesignSection,
    pub noise: NoiseModel,
    pub run: RunSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> std::result::Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.design;
        if d.q_values.is_empty() {
            return Err(Error::Configuration("q_values is empty".into()));
        }
        if let Some(&q) = d.q_values.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::OutOfRange {
                name: "q",
                value: q,
            });
        }
        if !(d.phi_step_deg > 0.0 && d.phi_step_deg.is_finite()) {
            return Err(Error::OutOfRange {
                name: "phi_step_deg",
                value: d.phi_step_deg,
            });
        }
        if !(d.phi_stop_deg >= d.phi_start_deg) {
            return Err(Error::Configuration(
                "phi_stop_deg must not be below phi_start_deg".into(),
            ));
        }
        if d.curve_points < 2 {
            return Err(Error::OutOfRange {
                name: "curve_points",
                value: d.curve_points as f64,
            });
        }
        if self.output.path.is_empty() {
            return Err(Error::Configuration("output path is empty".into()));
        }
        self.noise.validate()?;
        self.run_config().validate()
    }

    /// Phase grid in degrees, both ends included.
    pub fn phi_grid_deg(&self) -> Vec<f64> {
        let d = &self.design;
        let n = ((d.phi_stop_deg - d.phi_start_deg) / d.phi_step_deg + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|k| d.phi_start_deg + k as f64 * d.phi_step_deg)
            .collect()
    }

    /// Run parameters; without an explicit seed, [`DEFAULT_SEED`].
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            duration_s: self.run.duration_s,
            pair_rate_hz: self.run.pair_rate_hz,
            seed: self.run.seed.unwrap_or(DEFAULT_SEED),
            repetitions: self.run.repetitions,
        }
    }
}

/// Formats with six significant digits in plain decimal notation.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return "nan".into();
    }
    let decimals = (5 - x.abs().log10().floor() as i32).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(header: &[&'static str]) -> Self {
        CsvTable {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push_numbers(&mut self, leading: Option<&str>, values: &[f64]) {
        let mut row: Vec<String> = leading.map(str::to_string).into_iter().collect();
        row.extend(values.iter().map(|v| format_sig6(*v)));
        self.rows.push(row);
    }

    /// Parsed numeric column, for tests and downstream tooling.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| *h == name)?;
        self.rows.iter().map(|r| r[idx].parse().ok()).collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    /// Writes to `path`, or to standard output when `path` is `-`.
    pub fn write_to(&self, path: &str) -> io::Result<()> {
        let text = self.to_csv_string();
        if path == "-" {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        } else {
            std::fs::write(Path::new(path), text)
        }
    }
}

pub fn cmd_design_table(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let mut t = CsvTable::new(&["q", "R0", "R1", "F_A", "F_B"]);
    for &q in &cfg.design.q_values {
        let d = solve_reflectances(q)?;
        t.push_numbers(None, &[d.q, d.r0, d.r1, d.f_a, d.f_b]);
    }
    Ok(t)
}

/// One simulated `(q, φ)` cell. The seed depends only on the cell indices.
fn simulate_cell(
    design: &CloneDesign,
    q_index: usize,
    phi_index: usize,
    phi_deg: f64,
    cfg: &ExperimentConfig,
) -> Result<Vec<crate::network::CoincidenceCounts>> {
    let run = cfg
        .run_config()
        .for_cell((q_index as u64) << 32 | phi_index as u64);
    simulate_run(design, phi_deg.to_radians(), &cfg.noise, &run)
}

/// Pools every repetition at every phase of the grid, per q.
pub fn simulate_per_q(cfg: &ExperimentConfig) -> Result<Vec<(CloneDesign, RunSummary)>> {
    let grid = cfg.phi_grid_deg();
    let run = cfg.run_config();
    cfg.design
        .q_values
        .par_iter()
        .enumerate()
        .map(|(qi, &q)| {
            let design = solve_reflectances(q)?;
            let cells = grid
                .par_iter()
                .enumerate()
                .map(|(pi, &phi)| simulate_cell(&design, qi, pi, phi, cfg))
                .collect::<Result<Vec<_>>>()?;
            let raw: Vec<_> = cells.into_iter().flatten().collect();
            let summary = RunSummary::from_measurements(
                &raw,
                &cfg.noise.detector_efficiencies,
                run.pairs_per_repetition(),
            )?;
            Ok((design, summary))
        })
        .collect()
}

pub fn cmd_tradeoff(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let mut t = CsvTable::new(&["family", "parameter", "F_A", "F_B", "err_A", "err_B"]);
    let n = cfg.design.curve_points;
    let curves: Vec<TradeoffPoint> = pc_tradeoff_curve(n)?
        .into_iter()
        .chain(universal_tradeoff_curve(n)?)
        .collect();
    for p in curves {
        t.push_numbers(
            Some(p.family.as_str()),
            &[p.parameter, p.f_a, p.f_b, 0.0, 0.0],
        );
    }
    if !cfg.noise.is_ideal() {
        for (d, s) in simulate_per_q(cfg)? {
            t.push_numbers(Some("simulated"), &[d.q, s.f_a, s.f_b, s.err_a, s.err_b]);
        }
    }
    Ok(t)
}

/// Per-phase fidelities. With an ideal noise model the rows are exact.
pub fn cmd_phase_scan(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let mut t = CsvTable::new(&["q", "phi_deg", "F_A", "F_B", "err_A", "err_B"]);
    let grid = cfg.phi_grid_deg();
    let run = cfg.run_config();
    for (qi, &q) in cfg.design.q_values.iter().enumerate() {
        let design = solve_reflectances(q)?;
        let rows = grid
            .par_iter()
            .enumerate()
            .map(|(pi, &phi)| {
                if cfg.noise.is_ideal() {
                    let (fa, fb) = clone_fidelities_ideal(&design, phi.to_radians())?;
                    return Ok([q, phi, fa, fb, 0.0, 0.0]);
                }
                let raw = simulate_cell(&design, qi, pi, phi, cfg)?;
                let s = RunSummary::from_measurements(
                    &raw,
                    &cfg.noise.detector_efficiencies,
                    run.pairs_per_repetition(),
                )?;
                Ok([q, phi, s.f_a, s.f_b, s.err_a, s.err_b])
            })
            .collect::<Result<Vec<_>>>()?;
        for r in rows {
            t.push_numbers(None, &r);
        }
    }
    Ok(t)
}

pub fn cmd_monte_carlo(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let mut t = CsvTable::new(&["q", "F_A", "F_B", "err_A", "err_B", "success_rate"]);
    for (d, s) in simulate_per_q(cfg)? {
        t.push_numbers(None, &[d.q, s.f_a, s.f_b, s.err_a, s.err_b, s.success_rate]);
    }
    Ok(t)
}

pub fn run_command(cfg: &ExperimentConfig) -> Result<CsvTable> {
    cfg.validate()?;
    match cfg.command {
        Command::DesignTable => cmd_design_table(cfg),
        Command::Tradeoff => cmd_tradeoff(cfg),
        Command::PhaseScan => cmd_phase_scan(cfg),
        Command::MonteCarlo => cmd_monte_carlo(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round3(x: f64) -> f64 {
        (x * 1000.0).round() / 1000.0
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.5), "0.500000");
        assert_eq!(format_sig6(360.0), "360.000");
        assert_eq!(format_sig6(0.8535533905932737), "0.853553");
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1.00000");
        assert_eq!(format_sig6(0.00123456789), "0.00123457");
    }

    #[test]
    fn phi_grid() {
        let cfg = ExperimentConfig::default();
        let g = cfg.phi_grid_deg();
        assert_eq!(g.len(), 19);
        assert_eq!((g[0], g[18]), (0.0, 360.0));
    }

    #[test]
    fn design_table_rows() {
        let mut cfg = ExperimentConfig::default();
        cfg.design.q_values = vec![0.6, 1.0];
        let t = cmd_design_table(&cfg).unwrap();
        let row = |i: usize| -> Vec<f64> {
            t.rows[i]
                .iter()
                .map(|s| round3(s.parse().unwrap()))
                .collect()
        };
        assert_eq!(row(0), vec![0.6, 0.801, 0.271, 0.887, 0.816]);
        assert_eq!(row(1), vec![1.0, 1.0, 1.0, 1.0, 0.5]);

        cfg.design.q_values = vec![0.5];
        assert_eq!(cmd_design_table(&cfg).unwrap().rows.len(), 1);
    }

    #[test]
    fn ideal_phase_scan_is_flat() {
        let mut cfg = ExperimentConfig {
            noise: NoiseModel::ideal(),
            ..ExperimentConfig::default()
        };
        cfg.design.q_values = vec![0.5];
        let t = cmd_phase_scan(&cfg).unwrap();
        assert_eq!(t.rows.len(), 19);
        for r in &t.rows {
            assert_eq!(&r[2..], ["0.853553", "0.853553", "0", "0"]);
        }
    }

    #[test]
    fn validation_errors() {
        let mut cfg = ExperimentConfig::default();
        cfg.design.q_values.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.design.phi_step_deg = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.design.q_values = vec![1.5];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_parse_errors() {
        assert!(ExperimentConfig::from_toml_str("[design]\nq_values = \"x\"").is_err());
        assert!(ExperimentConfig::from_toml_str("[bogus]\na = 1").is_err());
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }
}
