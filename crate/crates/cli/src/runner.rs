//! Experiment execution: evaluates every curve of a scenario over the
//! shared sweep grid and collects one result row per point.

use crate::scenario::{
    AntennaChoice, Approximation, CurveSpec, Mode, ReceiverSettings, Scenario, Statistic, SweepVar,
};
use harvest_core::analysis::{CoverageMode, CoverageModel, EnergyCoverageQuery, SwiptQuery};
use harvest_core::montecarlo::{
    simulate_avg_power, simulate_energy_coverage, simulate_swipt, simulate_uhf_avg_power,
    simulate_uhf_baseline, Combiner, CoverageEstimate, ReceiverSpec, UhfBaseline,
};
use harvest_core::{gain_distribution, ula_gain_distribution, units, GainDistribution, SystemParams};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("curve `{curve}` at {column} = {value}: {detail}")]
    Numerical {
        curve: String,
        column: &'static str,
        value: f64,
        detail: String,
    },
}

/// One evaluated grid point of one curve.
#[derive(Debug, Clone)]
pub struct Row {
    pub curve: String,
    /// Swept value in the sweep variable's file unit.
    pub sweep_value: f64,
    pub analytic: Option<f64>,
    pub simulated: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub trials: Option<u64>,
    pub wall: Duration,
}

/// All rows of an experiment, in curve order then grid order.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub sweep_column: &'static str,
    pub integer_sweep: bool,
    pub has_analytic: bool,
    pub has_simulated: bool,
    pub rows: Vec<Row>,
}

pub fn run_experiment(scenario: &Scenario) -> Result<ResultTable, RunError> {
    let mut rows = Vec::new();
    for curve in &scenario.curves {
        if curve.approximation == Approximation::LinearInDensity {
            run_linear_reference(scenario, curve, &mut rows)?;
        } else {
            for &x in &scenario.grid {
                rows.push(run_point(scenario, curve, x)?);
            }
        }
    }
    Ok(ResultTable {
        sweep_column: scenario.sweep.column(),
        integer_sweep: scenario.sweep.integer_valued(),
        has_analytic: scenario.curves.iter().any(|c| c.engines.wants_analytic()),
        has_simulated: scenario.curves.iter().any(|c| c.engines.wants_sim()),
        rows,
    })
}

fn numerical(
    scenario: &Scenario,
    curve: &CurveSpec,
    value: f64,
    err: impl std::fmt::Display,
) -> RunError {
    RunError::Numerical {
        curve: curve.label.clone(),
        column: scenario.sweep.column(),
        value,
        detail: err.to_string(),
    }
}

/// System, receiver and threshold settings with the swept value folded
/// in. Thresholds are resolved to watts here.
struct PointSetup {
    params: SystemParams,
    receiver: ReceiverSettings,
    /// Transmit array size when the antenna is described by an element
    /// count (fixed or swept).
    elements: Option<u32>,
}

fn materialize(scenario: &Scenario, curve: &CurveSpec, x: f64) -> PointSetup {
    let mut params = curve.params.clone();
    let mut receiver = curve.receiver.clone();
    let mut elements = match curve.antenna {
        AntennaChoice::Ula(n) => Some(n),
        AntennaChoice::Swept => None,
        AntennaChoice::Pattern(_) => None,
    };
    match scenario.sweep {
        SweepVar::ThresholdDbm => {
            let watts = units::dbm_to_watts(x);
            match curve.mode {
                Mode::EnergyConnected | Mode::AvgPower | Mode::UhfCompare => {
                    receiver.threshold_connected = watts;
                }
                Mode::EnergyNonconnected => receiver.threshold_nonconnected = watts,
                Mode::Swipt | Mode::CombinerStudy => receiver.energy_threshold = watts,
                Mode::Overall => unreachable!("rejected at validation"),
            }
        }
        SweepVar::TxElements => elements = Some(x as u32),
        SweepVar::RxElements => receiver.elements = x as u32,
        SweepVar::DensityPerKm2 => params.bs_density = x * 1e-6,
        SweepVar::SplitRatio => receiver.split_ratio = x,
        SweepVar::SinrDb => receiver.sinr_threshold = units::db_to_linear(x),
    }
    PointSetup {
        params,
        receiver,
        elements,
    }
}

fn gains_for(curve: &CurveSpec, setup: &PointSetup) -> Result<GainDistribution, String> {
    match (&curve.antenna, setup.elements) {
        (AntennaChoice::Pattern(tx), _) => Ok(gain_distribution(tx, &curve.rx_pattern)),
        (_, Some(n)) => ula_gain_distribution(n, &curve.rx_pattern)
            .map(|(_, gains)| gains)
            .map_err(|e| e.to_string()),
        (AntennaChoice::Swept, None) => unreachable!("sweep supplies the element count"),
        (AntennaChoice::Ula(_), None) => unreachable!("elements carried over"),
    }
}

fn receiver_spec(receiver: &ReceiverSettings) -> ReceiverSpec {
    match receiver.combiner {
        Combiner::Single => ReceiverSpec::single(),
        Combiner::SwitchGreedy => ReceiverSpec::switch_greedy(receiver.elements),
        Combiner::SwitchExhaustive => ReceiverSpec::switch_exhaustive(receiver.elements),
        Combiner::Mrc => ReceiverSpec::mrc(receiver.elements),
    }
}

fn uhf_baseline(curve: &CurveSpec, setup: &PointSetup) -> UhfBaseline {
    UhfBaseline {
        bs_density: setup.params.bs_density,
        tx_power: setup.params.tx_power,
        tx_antennas: setup.elements.expect("validated: element count present"),
        path_loss_exp: curve.uhf_path_loss_exp,
        carrier_freq: setup.params.carrier_freq,
        min_distance: setup.params.min_distance,
        rectifier_eff: setup.params.rectifier_eff,
        activation_threshold: setup.params.activation_threshold,
    }
}

fn run_point(scenario: &Scenario, curve: &CurveSpec, x: f64) -> Result<Row, RunError> {
    let started = Instant::now();
    let setup = materialize(scenario, curve, x);
    let fail = |e: &dyn std::fmt::Display| numerical(scenario, curve, x, e);

    let mut analytic = None;
    let mut simulated = None;
    let mut ci_halfwidth = None;
    let mut trials_used = None;

    if curve.mode == Mode::UhfCompare {
        let uhf = uhf_baseline(curve, &setup);
        let psi = setup.receiver.threshold_connected;
        let trials = scenario.trials.expect("validated: sim requested");
        let est = match curve.statistic {
            Statistic::Coverage => simulate_uhf_baseline(psi, trials, scenario.seed, &uhf),
            Statistic::MeanPower => simulate_uhf_avg_power(psi, trials, scenario.seed, &uhf),
        }
        .map_err(|e| fail(&e))?;
        simulated = Some(est.estimate);
        ci_halfwidth = Some(est.ci_halfwidth);
        trials_used = Some(est.trials);
    } else {
        let gains = gains_for(curve, &setup).map_err(|e| fail(&e))?;
        if curve.engines.wants_analytic() {
            analytic = Some(analytic_value(curve, &setup, &gains).map_err(|e| fail(&e))?);
        }
        if curve.engines.wants_sim() {
            let trials = scenario.trials.expect("validated: sim requested");
            let est =
                simulate_value(curve, &setup, &gains, trials, scenario.seed).map_err(|e| fail(&e))?;
            simulated = Some(est.estimate);
            ci_halfwidth = Some(est.ci_halfwidth);
            trials_used = Some(est.trials);
        }
    }

    Ok(Row {
        curve: curve.label.clone(),
        sweep_value: x,
        analytic,
        simulated,
        ci_halfwidth,
        trials: trials_used,
        wall: started.elapsed(),
    })
}

fn analytic_value(
    curve: &CurveSpec,
    setup: &PointSetup,
    gains: &GainDistribution,
) -> Result<f64, String> {
    let model = CoverageModel::new(&setup.params, gains).map_err(|e| e.to_string())?;
    let r = &setup.receiver;
    let value = match curve.mode {
        Mode::EnergyConnected => {
            let q = EnergyCoverageQuery::connected(r.threshold_connected)
                .with_terms(curve.approx_terms);
            if curve.approximation == Approximation::LosBall {
                model.energy_coverage_fast(&q)
            } else {
                model.energy_coverage(&q)
            }
        }
        Mode::EnergyNonconnected => {
            let q = EnergyCoverageQuery::nonconnected(r.threshold_nonconnected)
                .with_terms(curve.approx_terms);
            model.energy_coverage(&q)
        }
        Mode::Overall => model.overall_energy_coverage(
            setup.params.connected_fraction,
            r.threshold_connected,
            r.threshold_nonconnected,
            curve.approx_terms,
        ),
        Mode::AvgPower => {
            if curve.approximation == Approximation::LosBall {
                model.avg_power_connected_approx()
            } else if r.threshold_connected == 0.0 {
                model.avg_power_connected_limit()
            } else {
                model.avg_power_connected(r.threshold_connected, curve.approx_terms)
            }
        }
        Mode::Swipt => {
            let q = SwiptQuery::new(r.sinr_threshold, r.energy_threshold, r.split_ratio);
            model.swipt_success(&q)
        }
        Mode::CombinerStudy | Mode::UhfCompare => {
            unreachable!("analytic engine rejected at validation")
        }
    };
    value.map_err(|e| e.to_string())
}

fn simulate_value(
    curve: &CurveSpec,
    setup: &PointSetup,
    gains: &GainDistribution,
    trials: u64,
    seed: u64,
) -> Result<CoverageEstimate, String> {
    let r = &setup.receiver;
    let p = &setup.params;
    match curve.mode {
        Mode::EnergyConnected => simulate_energy_coverage(
            CoverageMode::Connected,
            r.threshold_connected,
            trials,
            seed,
            p,
            gains,
        )
        .map_err(|e| e.to_string()),
        Mode::EnergyNonconnected => simulate_energy_coverage(
            CoverageMode::Nonconnected,
            r.threshold_nonconnected,
            trials,
            seed,
            p,
            gains,
        )
        .map_err(|e| e.to_string()),
        Mode::Overall => {
            // Mix the two coverage kinds with the connected fraction;
            // the halfwidths add linearly (conservative for the mix).
            let eps = p.connected_fraction;
            let con = simulate_energy_coverage(
                CoverageMode::Connected,
                r.threshold_connected,
                trials,
                seed,
                p,
                gains,
            )
            .map_err(|e| e.to_string())?;
            let ncon = simulate_energy_coverage(
                CoverageMode::Nonconnected,
                r.threshold_nonconnected,
                trials,
                seed,
                p,
                gains,
            )
            .map_err(|e| e.to_string())?;
            Ok(CoverageEstimate {
                estimate: eps * con.estimate + (1.0 - eps) * ncon.estimate,
                ci_halfwidth: eps * con.ci_halfwidth + (1.0 - eps) * ncon.ci_halfwidth,
                ..con
            })
        }
        Mode::AvgPower => simulate_avg_power(
            CoverageMode::Connected,
            r.threshold_connected,
            trials,
            seed,
            p,
            gains,
        )
        .map_err(|e| e.to_string()),
        Mode::Swipt | Mode::CombinerStudy => {
            let q = SwiptQuery::new(r.sinr_threshold, r.energy_threshold, r.split_ratio);
            simulate_swipt(&q, &receiver_spec(r), trials, seed, p, gains)
                .map_err(|e| e.to_string())
        }
        Mode::UhfCompare => unreachable!("handled by the caller"),
    }
}

/// Proportional-in-density reference: the exact mean at the first grid
/// density, scaled linearly along the sweep.
fn run_linear_reference(
    scenario: &Scenario,
    curve: &CurveSpec,
    rows: &mut Vec<Row>,
) -> Result<(), RunError> {
    let started = Instant::now();
    let anchor = scenario.grid[0];
    let setup = materialize(scenario, curve, anchor);
    let fail = |e: &dyn std::fmt::Display| numerical(scenario, curve, anchor, e);
    let gains = gains_for(curve, &setup).map_err(|e| fail(&e))?;
    let model = CoverageModel::new(&setup.params, &gains).map_err(|e| fail(&e))?;
    let base = model.avg_power_connected_limit().map_err(|e| fail(&e))?;
    let wall = started.elapsed() / scenario.grid.len() as u32;
    for &x in &scenario.grid {
        rows.push(Row {
            curve: curve.label.clone(),
            sweep_value: x,
            analytic: Some(base * x / anchor),
            simulated: None,
            ci_halfwidth: None,
            trials: None,
            wall,
        });
    }
    Ok(())
}
