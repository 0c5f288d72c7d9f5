//! Experiment configuration: a TOML file with reference defaults for every
//! field, power values accepted in watts or as dBm/mW strings, and exactly
//! one sweep axis.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::channel::path_loss;
use crate::error::{Error, Result};
use crate::genetic::{GaConfig, TerminationMode};
use crate::mars::{MarsConfig, Schedule, UpdateRule};
use crate::metrics::{LnaMode, SystemParams};

/// A power quantity: plain numbers are watts, strings carry a unit suffix
/// ("20dBm", "800 mW", "0.1W").
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PowerValue {
    Watts(f64),
    Text(String),
}

impl PowerValue {
    pub fn to_watts(&self, field: &str) -> Result<f64> {
        match self {
            PowerValue::Watts(w) => Ok(*w),
            PowerValue::Text(s) => parse_power_text(s)
                .ok_or_else(|| Error::Config(format!("{field}: cannot parse power value {s:?}"))),
        }
    }
}

fn parse_power_text(s: &str) -> Option<f64> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    if let Some(num) = t.strip_suffix("dbm") {
        let dbm: f64 = num.parse().ok()?;
        return Some(10f64.powf(dbm / 10.0) / 1000.0);
    }
    if let Some(num) = t.strip_suffix("mw") {
        let mw: f64 = num.parse().ok()?;
        return Some(mw / 1000.0);
    }
    if let Some(num) = t.strip_suffix('w') {
        return num.parse().ok();
    }
    None
}

fn dbm(v: f64) -> PowerValue {
    PowerValue::Watts(10f64.powf(v / 10.0) / 1000.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub n_t: usize,
    pub n_ant: usize,
    pub n_rf: usize,
    pub n_s: usize,
    pub p_t: PowerValue,
    pub n0: PowerValue,
    pub beta: f64,
    pub p_bb: PowerValue,
    pub p_rf: PowerValue,
    pub p_adc: PowerValue,
    pub p_lna: PowerValue,
    pub p_ps: PowerValue,
    pub p_o: PowerValue,
    pub p_max: PowerValue,
    pub r_req: f64,
    pub fc_ghz: f64,
    pub d_m: f64,
    pub l_paths: usize,
    pub lna_mode: LnaMode,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            n_t: 4,
            n_ant: 128,
            n_rf: 32,
            n_s: 4,
            p_t: dbm(20.0),
            n0: dbm(-85.0),
            beta: 0.3,
            p_bb: PowerValue::Watts(0.8),
            p_rf: PowerValue::Watts(0.04),
            p_adc: PowerValue::Watts(0.1),
            p_lna: PowerValue::Watts(0.01),
            p_ps: PowerValue::Watts(0.01),
            p_o: dbm(25.0),
            p_max: dbm(44.0),
            r_req: 3.0,
            fc_ghz: 28.0,
            d_m: 100.0,
            l_paths: 10,
            lna_mode: LnaMode::PerElement,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    pub n_conn: usize,
    pub rf_group: usize,
    pub ant_group: usize,
}

impl Default for TopologySection {
    fn default() -> Self {
        Self {
            n_conn: 4,
            rf_group: 4,
            ant_group: 4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarsSection {
    pub eta_r: f64,
    pub eta_a: f64,
    pub kappa: f64,
    pub max_iters: usize,
    pub update_rule: UpdateRule,
}

impl Default for MarsSection {
    fn default() -> Self {
        let d = MarsConfig::default();
        Self {
            eta_r: d.eta_r,
            eta_a: d.eta_a,
            kappa: d.kappa,
            max_iters: d.max_iters,
            update_rule: d.update_rule,
        }
    }
}

impl MarsSection {
    pub fn to_config(&self, schedule: Schedule) -> MarsConfig {
        MarsConfig {
            eta_r: self.eta_r,
            eta_a: self.eta_a,
            kappa: self.kappa,
            max_iters: self.max_iters,
            update_rule: self.update_rule,
            schedule,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub n_g: usize,
    pub n_e: usize,
    pub n_crx: usize,
    pub n_mu: usize,
    pub xi: f64,
    pub iota1: f64,
    pub iota2: f64,
    pub max_generations: usize,
    pub termination: TerminationMode,
}

impl Default for GaSection {
    fn default() -> Self {
        let d = GaConfig::default();
        Self {
            n_g: d.n_g,
            n_e: d.n_e,
            n_crx: d.n_crx,
            n_mu: d.n_mu,
            xi: d.xi,
            iota1: d.iota1,
            iota2: d.iota2,
            max_generations: d.max_generations,
            termination: d.termination,
        }
    }
}

impl GaSection {
    pub fn to_config(&self) -> GaConfig {
        GaConfig {
            n_g: self.n_g,
            n_e: self.n_e,
            n_crx: self.n_crx,
            n_mu: self.n_mu,
            xi: self.xi,
            iota1: self.iota1,
            iota2: self.iota2,
            max_generations: self.max_generations,
            termination: self.termination,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    /// Sweep cap for the round-robin baseline.
    pub bm2_max_sweeps: usize,
    /// Subarray-pattern enumeration cap.
    pub bm4_cap: u64,
    /// Joint selection-bit cap for the exhaustive oracle.
    pub oracle_cap_bits: usize,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            bm2_max_sweeps: 50,
            bm4_cap: 100_000,
            oracle_cap_bits: 16,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub sweep: String,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<String>,
    pub output: PathBuf,
    /// Run the genetic beamformer stage after each selection and report
    /// rate/EE with the evolved beamformers.
    pub run_hbf: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            sweep: "beta".into(),
            values: vec![0.3],
            trials: 50,
            seed: 1,
            algorithms: vec!["mars_s".into()],
            output: PathBuf::from("out"),
            run_hbf: false,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    system: SystemSection,
    topology: TopologySection,
    mars: MarsSection,
    ga: GaSection,
    benchmarks: BenchmarkSection,
    experiment: ExperimentSection,
}

/// The axis a sweep varies. Count-valued axes require integral values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Beta,
    RReq,
    NConn,
    EtaR,
    EtaA,
    RfGroup,
    AntGroup,
    /// Both group sizes together.
    Group,
    NAnt,
    NRf,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::RReq => "r_req",
            SweepAxis::NConn => "n_conn",
            SweepAxis::EtaR => "eta_r",
            SweepAxis::EtaA => "eta_a",
            SweepAxis::RfGroup => "rf_group",
            SweepAxis::AntGroup => "ant_group",
            SweepAxis::Group => "group",
            SweepAxis::NAnt => "n_ant",
            SweepAxis::NRf => "n_rf",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "beta" => SweepAxis::Beta,
            "r_req" => SweepAxis::RReq,
            "n_conn" => SweepAxis::NConn,
            "eta_r" => SweepAxis::EtaR,
            "eta_a" => SweepAxis::EtaA,
            "rf_group" => SweepAxis::RfGroup,
            "ant_group" => SweepAxis::AntGroup,
            "group" => SweepAxis::Group,
            "n_ant" => SweepAxis::NAnt,
            "n_rf" => SweepAxis::NRf,
            other => {
                return Err(Error::Config(format!(
                    "experiment.sweep: unknown axis {other:?}"
                )))
            }
        })
    }
}

/// The selectable algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    MarsS,
    MarsP,
    Bm1,
    Bm2,
    Bm3,
    Bm4,
    Bm5,
    Oracle,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::MarsS => "mars_s",
            Algorithm::MarsP => "mars_p",
            Algorithm::Bm1 => "bm1",
            Algorithm::Bm2 => "bm2",
            Algorithm::Bm3 => "bm3",
            Algorithm::Bm4 => "bm4",
            Algorithm::Bm5 => "bm5",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mars_s" => Algorithm::MarsS,
            "mars_p" => Algorithm::MarsP,
            "bm1" => Algorithm::Bm1,
            "bm2" => Algorithm::Bm2,
            "bm3" => Algorithm::Bm3,
            "bm4" => Algorithm::Bm4,
            "bm5" => Algorithm::Bm5,
            "oracle" => Algorithm::Oracle,
            other => {
                return Err(Error::Config(format!(
                    "experiment.algorithms: unknown algorithm {other:?}"
                )))
            }
        })
    }
}

/// Fully validated experiment description. Power fields are in watts and the
/// large-scale gain is already derived from carrier and distance.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub fc_ghz: f64,
    pub d_m: f64,
    pub l_paths: usize,
    pub topology: TopologySection,
    pub mars: MarsSection,
    pub ga: GaSection,
    pub benchmarks: BenchmarkSection,
    pub sweep: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub output: PathBuf,
    pub run_hbf: bool,
}

fn build(raw: RawConfig) -> Result<ExperimentConfig> {
    let s = &raw.system;
    let large = path_loss(s.fc_ghz, s.d_m)
        .map_err(|e| Error::Config(format!("system.fc_ghz/system.d_m: {e}")))?;
    let params = SystemParams {
        n_t: s.n_t,
        n_ant: s.n_ant,
        n_rf: s.n_rf,
        n_s: s.n_s,
        p_t: s.p_t.to_watts("system.p_t")?,
        n0: s.n0.to_watts("system.n0")?,
        beta: s.beta,
        p_bb: s.p_bb.to_watts("system.p_bb")?,
        p_rf: s.p_rf.to_watts("system.p_rf")?,
        p_adc: s.p_adc.to_watts("system.p_adc")?,
        p_lna: s.p_lna.to_watts("system.p_lna")?,
        p_ps: s.p_ps.to_watts("system.p_ps")?,
        p_o: s.p_o.to_watts("system.p_o")?,
        p_max: s.p_max.to_watts("system.p_max")?,
        r_req: s.r_req,
        rho: large.rho,
        lna_mode: s.lna_mode,
    };
    params
        .validate()
        .map_err(|e| Error::Config(format!("system: {e}")))?;
    if s.l_paths == 0 {
        return Err(Error::Config("system.l_paths must be at least 1".into()));
    }

    let t = &raw.topology;
    if t.n_conn == 0 {
        return Err(Error::Config("topology.n_conn must be at least 1".into()));
    }
    if t.rf_group == 0 || t.rf_group > s.n_rf {
        return Err(Error::Config(format!(
            "topology.rf_group must lie in 1..={}",
            s.n_rf
        )));
    }
    if t.ant_group == 0 || t.ant_group > s.n_ant {
        return Err(Error::Config(format!(
            "topology.ant_group must lie in 1..={}",
            s.n_ant
        )));
    }

    raw.mars
        .to_config(Schedule::Sequential)
        .validate()
        .map_err(|e| Error::Config(format!("mars: {e}")))?;
    raw.ga
        .to_config()
        .validate()
        .map_err(|e| Error::Config(format!("ga: {e}")))?;

    let e = &raw.experiment;
    if e.trials == 0 {
        return Err(Error::Config("experiment.trials must be at least 1".into()));
    }
    if e.values.is_empty() {
        return Err(Error::Config(
            "experiment.values needs at least one sweep value".into(),
        ));
    }
    if e.algorithms.is_empty() {
        return Err(Error::Config(
            "experiment.algorithms needs at least one entry".into(),
        ));
    }
    let sweep: SweepAxis = e.sweep.parse()?;
    let algorithms = e
        .algorithms
        .iter()
        .map(|a| a.parse())
        .collect::<Result<Vec<Algorithm>>>()?;

    Ok(ExperimentConfig {
        params,
        fc_ghz: s.fc_ghz,
        d_m: s.d_m,
        l_paths: s.l_paths,
        topology: raw.topology,
        mars: raw.mars,
        ga: raw.ga,
        benchmarks: raw.benchmarks,
        sweep,
        values: e.values.clone(),
        trials: e.trials,
        seed: e.seed,
        algorithms,
        output: e.output.clone(),
        run_hbf: e.run_hbf,
    })
}

/// Parse a config from TOML text. Parse errors carry the offending line;
/// validation errors name the field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    build(raw)
}

/// Load and validate a config file. An empty file yields the full set of
/// reference defaults.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_config(&text)
}
