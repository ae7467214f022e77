//! Typed experiment description assembled from a parsed configuration:
//! what to compute (mode), over which grid (sweep), with which system,
//! antenna and receiver settings, per curve.

use crate::config::{self, ConfigError, RawConfig};
use harvest_core::montecarlo::Combiner;
use harvest_core::units;
use harvest_core::{AntennaPattern, SystemParams};
use std::f64::consts::TAU;

/// What quantity the experiment evaluates at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Harvested-power coverage for users aligned with their serving
    /// station.
    EnergyConnected,
    /// Harvested-power coverage for users with no serving alignment.
    EnergyNonconnected,
    /// Population mix of the two coverage kinds weighted by the
    /// connected fraction.
    Overall,
    /// Mean useful harvested power (optionally counting only power
    /// above an outage threshold).
    AvgPower,
    /// Joint decode-and-harvest success under power splitting.
    Swipt,
    /// Same success probability for multi-antenna receiver front ends.
    CombinerStudy,
    /// Lower-frequency comparison network (maximal ratio transmission,
    /// no blockage).
    UhfCompare,
}

impl Mode {
    fn parse(raw: &str) -> Result<Self, String> {
        Ok(match raw {
            "energy-connected" => Mode::EnergyConnected,
            "energy-nonconnected" => Mode::EnergyNonconnected,
            "overall" => Mode::Overall,
            "avg-power" => Mode::AvgPower,
            "swipt" => Mode::Swipt,
            "combiner-study" => Mode::CombinerStudy,
            "uhf-compare" => Mode::UhfCompare,
            other => return Err(format!("unknown mode `{other}`")),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::EnergyConnected => "energy-connected",
            Mode::EnergyNonconnected => "energy-nonconnected",
            Mode::Overall => "overall",
            Mode::AvgPower => "avg-power",
            Mode::Swipt => "swipt",
            Mode::CombinerStudy => "combiner-study",
            Mode::UhfCompare => "uhf-compare",
        }
    }
}

/// Which engines populate the result columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engines {
    Analytic,
    Sim,
    Both,
}

impl Engines {
    pub fn parse(raw: &str) -> Result<Self, String> {
        Ok(match raw {
            "analytic" => Engines::Analytic,
            "sim" | "simulate" => Engines::Sim,
            "both" => Engines::Both,
            other => return Err(format!("unknown engine set `{other}`")),
        })
    }

    pub fn wants_analytic(&self) -> bool {
        matches!(self, Engines::Analytic | Engines::Both)
    }

    pub fn wants_sim(&self) -> bool {
        matches!(self, Engines::Sim | Engines::Both)
    }
}

/// The swept variable. The grid is stored in the file unit named here;
/// the runner converts per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Energy outage threshold in dBm.
    ThresholdDbm,
    /// Transmit array size (uniform linear fit).
    TxElements,
    /// Receive array size.
    RxElements,
    /// Station density per square kilometer.
    DensityPerKm2,
    /// Power-splitting ratio toward the decoder.
    SplitRatio,
    /// Decoder SINR threshold in dB.
    SinrDb,
}

impl SweepVar {
    fn parse(raw: &str) -> Result<Self, String> {
        Ok(match raw {
            "threshold-dbm" => SweepVar::ThresholdDbm,
            "tx-elements" => SweepVar::TxElements,
            "rx-elements" => SweepVar::RxElements,
            "density-per-km2" => SweepVar::DensityPerKm2,
            "split-ratio" => SweepVar::SplitRatio,
            "sinr-db" => SweepVar::SinrDb,
            other => return Err(format!("unknown sweep variable `{other}`")),
        })
    }

    /// CSV column header for the swept value.
    pub fn column(&self) -> &'static str {
        match self {
            SweepVar::ThresholdDbm => "threshold_dbm",
            SweepVar::TxElements => "tx_elements",
            SweepVar::RxElements => "rx_elements",
            SweepVar::DensityPerKm2 => "density_per_km2",
            SweepVar::SplitRatio => "split_ratio",
            SweepVar::SinrDb => "sinr_db",
        }
    }

    pub fn integer_valued(&self) -> bool {
        matches!(self, SweepVar::TxElements | SweepVar::RxElements)
    }
}

/// Closed-form variant used by the analytic engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approximation {
    /// Full expressions.
    Exact,
    /// Fixed-radius ball shortcut for the blockage geometry
    /// (connected-mode coverage and mean only).
    LosBall,
    /// Hypothetical proportional-in-density reference line anchored at
    /// the first grid density (mean power over a density sweep only).
    LinearInDensity,
}

impl Approximation {
    fn parse(raw: &str) -> Result<Self, String> {
        Ok(match raw {
            "exact" => Approximation::Exact,
            "los-ball" => Approximation::LosBall,
            "linear-in-density" => Approximation::LinearInDensity,
            other => return Err(format!("unknown approximation `{other}`")),
        })
    }
}

/// Which statistic the comparison-network mode reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Coverage,
    MeanPower,
}

impl Statistic {
    fn parse(raw: &str) -> Result<Self, String> {
        Ok(match raw {
            "coverage" => Statistic::Coverage,
            "mean-power" => Statistic::MeanPower,
            other => return Err(format!("unknown statistic `{other}`")),
        })
    }
}

/// Transmit-side antenna description.
#[derive(Debug, Clone)]
pub enum AntennaChoice {
    /// Explicit sectored pattern.
    Pattern(AntennaPattern),
    /// Uniform-linear-array fit with a fixed element count.
    Ula(u32),
    /// Element count supplied by the sweep variable.
    Swept,
}

/// Fixed receiver-side settings (some are replaced by the sweep).
#[derive(Debug, Clone)]
pub struct ReceiverSettings {
    /// Energy outage threshold for connected-mode coverage and the mean,
    /// watts.
    pub threshold_connected: f64,
    /// Energy outage threshold for nonconnected-mode coverage, watts.
    pub threshold_nonconnected: f64,
    /// Decoder SINR threshold, linear.
    pub sinr_threshold: f64,
    /// Harvested-energy requirement for joint success, watts.
    pub energy_threshold: f64,
    /// Fraction of received power routed to the decoder.
    pub split_ratio: f64,
    pub combiner: Combiner,
    pub elements: u32,
}

/// One curve: a labelled full configuration sharing the scenario's grid.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub label: String,
    pub mode: Mode,
    pub engines: Engines,
    pub approximation: Approximation,
    pub statistic: Statistic,
    pub approx_terms: u32,
    pub params: SystemParams,
    pub antenna: AntennaChoice,
    pub rx_pattern: AntennaPattern,
    pub receiver: ReceiverSettings,
    /// Path-loss exponent of the comparison network (that model has a
    /// single one, separate from the blockage-state pair).
    pub uhf_path_loss_exp: f64,
}

/// A full experiment: shared sweep grid plus one or more curves.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub sweep: SweepVar,
    /// Grid in the sweep variable's file unit, strictly increasing.
    pub grid: Vec<f64>,
    pub trials: Option<u64>,
    pub seed: u64,
    pub curves: Vec<CurveSpec>,
}

// ---------------------------------------------------------------------------
// Assembly from a raw configuration
// ---------------------------------------------------------------------------

/// Flat typed settings bag; applied key by key, then materialized.
/// Curves clone the base bag and apply their overrides on top.
#[derive(Debug, Clone)]
struct Settings {
    params: SystemParams,
    // Derived-by-default fields kept separate so an explicit value
    // survives later overrides of what the default derives from.
    noise_power: Option<f64>,
    intercept_los: Option<f64>,
    intercept_nlos: Option<f64>,
    uhf_path_loss_exp: f64,
    // [antenna]
    main_gain: Option<f64>,
    side_gain: Option<f64>,
    main_width: Option<f64>,
    side_width: Option<f64>,
    tx_elements: Option<u32>,
    rx_main_gain: Option<f64>,
    rx_side_gain: Option<f64>,
    rx_main_width: Option<f64>,
    rx_side_width: Option<f64>,
    // [receiver]
    receiver: ReceiverSettings,
    // [run]
    name: Option<String>,
    mode: Option<Mode>,
    engines: Engines,
    approximation: Approximation,
    statistic: Statistic,
    approx_terms: u32,
    trials: Option<u64>,
    seed: u64,
    // [sweep]
    sweep_var: Option<SweepVar>,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<u64>,
}

impl Default for Settings {
    fn default() -> Self {
        let params = SystemParams::default_28ghz();
        Settings {
            params,
            noise_power: None,
            intercept_los: None,
            intercept_nlos: None,
            uhf_path_loss_exp: 3.6,
            main_gain: None,
            side_gain: None,
            main_width: None,
            side_width: None,
            tx_elements: None,
            rx_main_gain: None,
            rx_side_gain: None,
            rx_main_width: None,
            rx_side_width: None,
            receiver: ReceiverSettings {
                threshold_connected: 0.0,
                threshold_nonconnected: 0.0,
                sinr_threshold: 1.0,
                energy_threshold: 0.0,
                split_ratio: 0.5,
                combiner: Combiner::Single,
                elements: 1,
            },
            name: None,
            mode: None,
            engines: Engines::Both,
            approximation: Approximation::Exact,
            statistic: Statistic::Coverage,
            approx_terms: 5,
            trials: None,
            seed: 0,
            sweep_var: None,
            values: None,
            start: None,
            stop: None,
            points: None,
        }
    }
}

fn val<T>(key: &str, parsed: Result<T, String>) -> Result<T, ConfigError> {
    parsed.map_err(|msg| ConfigError::value(key, msg))
}

impl Settings {
    fn apply(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        let p = &mut self.params;
        match key {
            // -------------------------------------------------- [system]
            "system.bs_density" => p.bs_density = val(key, config::density_per_m2(raw))?,
            "system.user_density" => p.user_density = val(key, config::density_per_m2(raw))?,
            "system.tx_power" => p.tx_power = val(key, config::power_watts(raw))?,
            "system.blockage_beta" => p.blockage_beta = val(key, config::bare_f64(raw))?,
            "system.alpha_los" => p.alpha_los = val(key, config::bare_f64(raw))?,
            "system.alpha_nlos" => p.alpha_nlos = val(key, config::bare_f64(raw))?,
            "system.intercept_los" => self.intercept_los = Some(val(key, config::bare_f64(raw))?),
            "system.intercept_nlos" => self.intercept_nlos = Some(val(key, config::bare_f64(raw))?),
            "system.nakagami_los" => p.nakagami_los = val(key, config::bare_u32(raw))?,
            "system.nakagami_nlos" => p.nakagami_nlos = val(key, config::bare_u32(raw))?,
            "system.rectifier_eff" => p.rectifier_eff = val(key, config::bare_f64(raw))?,
            "system.activation_threshold" => {
                p.activation_threshold = val(key, config::power_watts(raw))?
            }
            "system.min_distance" => p.min_distance = val(key, config::length_m(raw))?,
            "system.noise_power" => self.noise_power = Some(val(key, config::power_watts(raw))?),
            "system.conversion_noise" => p.conversion_noise = val(key, config::power_watts(raw))?,
            "system.bandwidth" => p.bandwidth = val(key, config::frequency_hz(raw))?,
            "system.carrier_freq" => p.carrier_freq = val(key, config::frequency_hz(raw))?,
            "system.connected_fraction" => {
                p.connected_fraction = val(key, config::bare_f64(raw))?
            }
            "system.path_loss_exp" => self.uhf_path_loss_exp = val(key, config::bare_f64(raw))?,
            // ------------------------------------------------- [antenna]
            "antenna.main_gain" => self.main_gain = Some(val(key, config::ratio_linear(raw))?),
            "antenna.side_gain" => self.side_gain = Some(val(key, config::ratio_linear(raw))?),
            "antenna.main_width" => self.main_width = Some(val(key, config::angle_radians(raw))?),
            "antenna.side_width" => self.side_width = Some(val(key, config::angle_radians(raw))?),
            "antenna.tx_elements" => self.tx_elements = Some(val(key, config::bare_u32(raw))?),
            "antenna.rx_main_gain" => {
                self.rx_main_gain = Some(val(key, config::ratio_linear(raw))?)
            }
            "antenna.rx_side_gain" => {
                self.rx_side_gain = Some(val(key, config::ratio_linear(raw))?)
            }
            "antenna.rx_main_width" => {
                self.rx_main_width = Some(val(key, config::angle_radians(raw))?)
            }
            "antenna.rx_side_width" => {
                self.rx_side_width = Some(val(key, config::angle_radians(raw))?)
            }
            // ------------------------------------------------ [receiver]
            "receiver.threshold_connected" => {
                self.receiver.threshold_connected = val(key, config::power_watts(raw))?
            }
            "receiver.threshold_nonconnected" => {
                self.receiver.threshold_nonconnected = val(key, config::power_watts(raw))?
            }
            "receiver.sinr_threshold" => {
                self.receiver.sinr_threshold = val(key, config::ratio_linear(raw))?
            }
            "receiver.energy_threshold" => {
                self.receiver.energy_threshold = val(key, config::power_watts(raw))?
            }
            "receiver.split_ratio" => self.receiver.split_ratio = val(key, config::bare_f64(raw))?,
            "receiver.combiner" => {
                self.receiver.combiner = match raw {
                    "single" => Combiner::Single,
                    "switch-greedy" => Combiner::SwitchGreedy,
                    "switch-exhaustive" => Combiner::SwitchExhaustive,
                    "mrc" => Combiner::Mrc,
                    other => {
                        return Err(ConfigError::value(key, format!("unknown combiner `{other}`")))
                    }
                }
            }
            "receiver.elements" => self.receiver.elements = val(key, config::bare_u32(raw))?,
            // ----------------------------------------------------- [run]
            "run.name" => self.name = Some(raw.to_string()),
            "run.mode" => self.mode = Some(val(key, Mode::parse(raw))?),
            "run.engines" => self.engines = val(key, Engines::parse(raw))?,
            "run.approximation" => self.approximation = val(key, Approximation::parse(raw))?,
            "run.statistic" => self.statistic = val(key, Statistic::parse(raw))?,
            "run.approx_terms" => self.approx_terms = val(key, config::bare_u32(raw))?,
            "run.trials" => self.trials = Some(val(key, config::bare_u64(raw))?),
            "run.seed" => self.seed = val(key, config::bare_u64(raw))?,
            // --------------------------------------------------- [sweep]
            "sweep.variable" => self.sweep_var = Some(val(key, SweepVar::parse(raw))?),
            "sweep.values" => {
                let mut values = Vec::new();
                for token in raw.split_whitespace() {
                    values.push(val(key, config::bare_f64(token))?);
                }
                self.values = Some(values);
            }
            "sweep.start" => self.start = Some(val(key, config::bare_f64(raw))?),
            "sweep.stop" => self.stop = Some(val(key, config::bare_f64(raw))?),
            "sweep.points" => self.points = Some(val(key, config::bare_u64(raw))?),
            other => {
                return Err(ConfigError::value(other, "unknown configuration key"));
            }
        }
        Ok(())
    }

    fn grid(&self) -> Result<Vec<f64>, ConfigError> {
        let explicit = self.values.is_some();
        let ranged = self.start.is_some() || self.stop.is_some() || self.points.is_some();
        if explicit && ranged {
            return Err(ConfigError::Invalid(
                "sweep: give either `values` or `start`/`stop`/`points`, not both".into(),
            ));
        }
        let grid = if let Some(values) = &self.values {
            values.clone()
        } else {
            let (Some(start), Some(stop), Some(points)) = (self.start, self.stop, self.points)
            else {
                return Err(ConfigError::Invalid(
                    "sweep: need `values` or all of `start`, `stop`, `points`".into(),
                ));
            };
            if points == 0 {
                return Err(ConfigError::value("sweep.points", "must be at least 1"));
            }
            if points == 1 {
                vec![start]
            } else {
                (0..points)
                    .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
                    .collect()
            }
        };
        if grid.is_empty() {
            return Err(ConfigError::Invalid("sweep: grid is empty".into()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ConfigError::Invalid(
                "sweep: grid must be strictly increasing".into(),
            ));
        }
        Ok(grid)
    }

    fn rx_pattern(&self) -> Result<AntennaPattern, ConfigError> {
        let any = self.rx_main_gain.is_some()
            || self.rx_side_gain.is_some()
            || self.rx_main_width.is_some()
            || self.rx_side_width.is_some();
        if !any {
            return Ok(AntennaPattern::omni());
        }
        let (Some(main), Some(side), Some(width)) =
            (self.rx_main_gain, self.rx_side_gain, self.rx_main_width)
        else {
            return Err(ConfigError::Invalid(
                "antenna: a receive pattern needs rx_main_gain, rx_side_gain and rx_main_width"
                    .into(),
            ));
        };
        let side_width = self.rx_side_width.unwrap_or(TAU - width);
        AntennaPattern::new(main, side, width, side_width)
            .map_err(|e| ConfigError::Invalid(format!("antenna (receive side): {e}")))
    }

    fn antenna(&self, sweep: SweepVar) -> Result<AntennaChoice, ConfigError> {
        let pattern_keys =
            self.main_gain.is_some() || self.side_gain.is_some() || self.main_width.is_some();
        if sweep == SweepVar::TxElements {
            if pattern_keys || self.tx_elements.is_some() {
                return Err(ConfigError::Invalid(
                    "sweep.variable=tx-elements supplies the transmit array size; remove \
                     antenna.tx_elements and explicit pattern keys"
                        .into(),
                ));
            }
            return Ok(AntennaChoice::Swept);
        }
        if let Some(n) = self.tx_elements {
            if pattern_keys {
                return Err(ConfigError::Invalid(
                    "antenna: give either tx_elements or an explicit pattern, not both".into(),
                ));
            }
            return Ok(AntennaChoice::Ula(n));
        }
        let (Some(main), Some(side), Some(width)) =
            (self.main_gain, self.side_gain, self.main_width)
        else {
            return Err(ConfigError::Invalid(
                "antenna: set tx_elements or all of main_gain, side_gain, main_width".into(),
            ));
        };
        let side_width = self.side_width.unwrap_or(TAU - width);
        let tx = AntennaPattern::new(main, side, width, side_width)
            .map_err(|e| ConfigError::Invalid(format!("antenna: {e}")))?;
        Ok(AntennaChoice::Pattern(tx))
    }

    fn build_params(&self) -> Result<SystemParams, ConfigError> {
        let mut params = self.params.clone();
        let default_intercept = units::free_space_intercept(params.carrier_freq);
        params.intercept_los = self.intercept_los.unwrap_or(default_intercept);
        params.intercept_nlos = self.intercept_nlos.unwrap_or(default_intercept);
        params.noise_power = self
            .noise_power
            .unwrap_or_else(|| units::thermal_noise_watts(params.bandwidth, 10.0));
        params
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("system: {e}")))?;
        Ok(params)
    }

    fn into_curve(self, label: String, sweep: SweepVar) -> Result<CurveSpec, ConfigError> {
        let mode = self
            .mode
            .ok_or_else(|| ConfigError::value("run.mode", "required"))?;
        Ok(CurveSpec {
            label,
            mode,
            engines: self.engines,
            approximation: self.approximation,
            statistic: self.statistic,
            approx_terms: self.approx_terms,
            params: self.build_params()?,
            antenna: self.antenna(sweep)?,
            rx_pattern: self.rx_pattern()?,
            receiver: self.receiver.clone(),
            uhf_path_loss_exp: self.uhf_path_loss_exp,
        })
    }
}

/// Keys that only make sense for the whole experiment, not per curve.
fn reject_scenario_level(key: &str) -> Result<(), ConfigError> {
    if key.starts_with("sweep.") || matches!(key, "run.name" | "run.trials" | "run.seed") {
        return Err(ConfigError::value(
            key,
            "is scenario-wide and cannot be overridden per curve",
        ));
    }
    Ok(())
}

fn check_label(label: &str) -> Result<(), ConfigError> {
    if label.is_empty() {
        return Err(ConfigError::Invalid("curve label is empty".into()));
    }
    if label
        .chars()
        .any(|c| c == ',' || c == '"' || c.is_control())
    {
        return Err(ConfigError::Invalid(format!(
            "curve label `{label}` may not contain commas, quotes or control characters"
        )));
    }
    Ok(())
}

/// Assemble and cross-validate a scenario. `fallback_name` names the
/// experiment when the file has no `run.name` (the bundled name or the
/// file stem).
pub fn build(fallback_name: &str, raw: &RawConfig) -> Result<Scenario, ConfigError> {
    let mut base = Settings::default();
    for (key, value) in &raw.base {
        base.apply(key, value)?;
    }
    let sweep = base
        .sweep_var
        .ok_or_else(|| ConfigError::value("sweep.variable", "required"))?;
    let grid = base.grid()?;
    let name = base.name.clone().unwrap_or_else(|| fallback_name.to_string());
    let trials = base.trials;
    let seed = base.seed;

    let mut curves = Vec::new();
    if raw.curves.is_empty() {
        curves.push(base.clone().into_curve(name.clone(), sweep)?);
    } else {
        for (i, raw_curve) in raw.curves.iter().enumerate() {
            let mut settings = base.clone();
            for (key, value) in &raw_curve.overrides {
                reject_scenario_level(key)?;
                settings.apply(key, value)?;
            }
            let label = raw_curve
                .label
                .clone()
                .unwrap_or_else(|| format!("curve{}", i + 1));
            check_label(&label)?;
            curves.push(settings.into_curve(label, sweep)?);
        }
    }

    let scenario = Scenario {
        name,
        sweep,
        grid,
        trials,
        seed,
        curves,
    };
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    /// Cross-field conflict checks. Every rejection names the
    /// conflicting keys so a misconfiguration is directly actionable.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let conflict = |msg: String| Err(ConfigError::Invalid(msg));
        let mut labels: Vec<&str> = self.curves.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.curves.len() {
            return conflict("curve labels must be unique".to_string());
        }

        // Sweep-grid value ranges.
        for &x in &self.grid {
            match self.sweep {
                SweepVar::SplitRatio if !(x > 0.0 && x < 1.0) => {
                    return conflict(format!(
                        "sweep value {x} out of range: split-ratio grids must lie strictly \
                         between 0 and 1"
                    ));
                }
                SweepVar::DensityPerKm2 if !(x > 0.0) => {
                    return conflict(format!("sweep value {x}: densities must be positive"));
                }
                SweepVar::TxElements | SweepVar::RxElements
                    if x.fract() != 0.0 || !(x >= 1.0) =>
                {
                    return conflict(format!(
                        "sweep value {x}: element counts must be positive integers"
                    ));
                }
                _ => {}
            }
        }

        let any_sim = self.curves.iter().any(|c| c.engines.wants_sim());
        match self.trials {
            None if any_sim => {
                return conflict(
                    "run.trials is required when any curve requests the simulation engine"
                        .to_string(),
                );
            }
            Some(0) => return conflict("run.trials: at least one trial required".to_string()),
            _ => {}
        }

        for curve in &self.curves {
            self.validate_curve(curve)?;
        }
        Ok(())
    }

    fn validate_curve(&self, c: &CurveSpec) -> Result<(), ConfigError> {
        let conflict = |msg: String| {
            Err(ConfigError::Invalid(format!(
                "curve `{}`: {msg}",
                c.label
            )))
        };
        let mode = c.mode;

        // Sweep-mode compatibility.
        match self.sweep {
            SweepVar::SplitRatio | SweepVar::SinrDb | SweepVar::RxElements
                if !matches!(mode, Mode::Swipt | Mode::CombinerStudy) =>
            {
                return conflict(format!(
                    "sweep.variable={} needs run.mode=swipt or combiner-study, not {}",
                    self.sweep.column(),
                    mode.name()
                ));
            }
            SweepVar::TxElements if matches!(mode, Mode::CombinerStudy) => {
                return conflict(
                    "sweep.variable=tx-elements conflicts with run.mode=combiner-study \
                     (sweep rx-elements instead)"
                        .to_string(),
                );
            }
            SweepVar::ThresholdDbm if mode == Mode::Overall => {
                return conflict(
                    "run.mode=overall mixes two fixed thresholds \
                     (receiver.threshold_connected / threshold_nonconnected); sweep \
                     tx-elements or density-per-km2 instead"
                        .to_string(),
                );
            }
            _ => {}
        }
        if self.sweep == SweepVar::TxElements && mode != Mode::UhfCompare {
            // The array fit needs at least 4 elements to give a valid
            // sectored pattern.
            if let Some(&bad) = self.grid.iter().find(|&&x| x < 4.0) {
                return conflict(format!(
                    "sweep value {bad}: the linear-array fit needs at least 4 elements"
                ));
            }
        }
        if self.sweep == SweepVar::RxElements && c.receiver.combiner == Combiner::Single {
            return conflict(
                "sweep.variable=rx-elements conflicts with receiver.combiner=single; choose \
                 switch-greedy, switch-exhaustive or mrc"
                    .to_string(),
            );
        }

        // Engine availability.
        if c.engines.wants_analytic() {
            match mode {
                Mode::CombinerStudy => {
                    return conflict(
                        "run.engines includes analytic but run.mode=combiner-study has no \
                         closed form; set run.engines=sim"
                            .to_string(),
                    );
                }
                Mode::UhfCompare => {
                    return conflict(
                        "run.engines includes analytic but run.mode=uhf-compare is \
                         simulation-only; set run.engines=sim"
                            .to_string(),
                    );
                }
                Mode::Swipt => {
                    if c.receiver.combiner != Combiner::Single || c.receiver.elements != 1 {
                        return conflict(
                            "the joint-success closed form covers a single-antenna receiver \
                             only; set receiver.combiner=single and receiver.elements=1, or \
                             run.engines=sim"
                                .to_string(),
                        );
                    }
                }
                _ => {}
            }
        }

        // Approximation scope.
        match c.approximation {
            Approximation::Exact => {}
            Approximation::LosBall => {
                if !matches!(mode, Mode::EnergyConnected | Mode::AvgPower) {
                    return conflict(format!(
                        "run.approximation=los-ball applies to energy-connected or avg-power, \
                         not {}",
                        mode.name()
                    ));
                }
                if mode == Mode::AvgPower
                    && self.sweep != SweepVar::ThresholdDbm
                    && c.receiver.threshold_connected != 0.0
                {
                    return conflict(
                        "run.approximation=los-ball evaluates the zero-threshold mean; clear \
                         receiver.threshold_connected"
                            .to_string(),
                    );
                }
            }
            Approximation::LinearInDensity => {
                if mode != Mode::AvgPower || self.sweep != SweepVar::DensityPerKm2 {
                    return conflict(
                        "run.approximation=linear-in-density needs run.mode=avg-power with \
                         sweep.variable=density-per-km2"
                            .to_string(),
                    );
                }
                if c.engines.wants_sim() {
                    return conflict(
                        "run.approximation=linear-in-density is a reference line; set \
                         run.engines=analytic"
                            .to_string(),
                    );
                }
            }
        }

        // Statistic scope.
        if c.statistic == Statistic::MeanPower && mode != Mode::UhfCompare {
            return conflict(
                "run.statistic=mean-power applies to run.mode=uhf-compare (use \
                 run.mode=avg-power for the millimeter-wave mean)"
                    .to_string(),
            );
        }

        // Mode-specific receiver checks.
        match mode {
            Mode::Swipt | Mode::CombinerStudy => {
                if c.params.connected_fraction < 1.0 {
                    return conflict(format!(
                        "run.mode={} assumes a fully connected population; \
                         system.connected_fraction is {} (must be 1)",
                        mode.name(),
                        c.params.connected_fraction
                    ));
                }
                if self.sweep != SweepVar::SplitRatio
                    && !(c.receiver.split_ratio > 0.0 && c.receiver.split_ratio < 1.0)
                {
                    return conflict(format!(
                        "receiver.split_ratio = {} must lie strictly between 0 and 1",
                        c.receiver.split_ratio
                    ));
                }
                if self.sweep != SweepVar::SinrDb && !(c.receiver.sinr_threshold > 0.0) {
                    return conflict(format!(
                        "receiver.sinr_threshold = {} must be positive",
                        c.receiver.sinr_threshold
                    ));
                }
                if c.receiver.combiner == Combiner::Single && c.receiver.elements != 1 {
                    return conflict(format!(
                        "receiver.combiner=single conflicts with receiver.elements = {}",
                        c.receiver.elements
                    ));
                }
            }
            Mode::UhfCompare => {
                if !matches!(c.antenna, AntennaChoice::Ula(_) | AntennaChoice::Swept) {
                    return conflict(
                        "run.mode=uhf-compare uses maximal ratio transmission; set \
                         antenna.tx_elements (or sweep tx-elements) instead of an explicit \
                         pattern"
                            .to_string(),
                    );
                }
                if !(c.uhf_path_loss_exp > 2.0) {
                    return conflict(format!(
                        "system.path_loss_exp = {} must exceed 2",
                        c.uhf_path_loss_exp
                    ));
                }
            }
            _ => {
                if c.receiver.combiner != Combiner::Single || c.receiver.elements != 1 {
                    return conflict(format!(
                        "receiver.combiner/receiver.elements apply to run.mode=swipt or \
                         combiner-study, not {}",
                        mode.name()
                    ));
                }
            }
        }
        Ok(())
    }
}
