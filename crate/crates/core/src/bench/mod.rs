//! Monte Carlo benchmark harness.
//!
//! A [`Scenario`] names a network and placement document plus the trial
//! plan. [`run_wls_campaign`] corrupts and solves once per trial seed,
//! [`run_interval_once`] solves a single corruption and times repeated
//! solves, [`compare`] does both and reports the timing ratio.

mod report;

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use report::{
    emit_report, ComparisonReport, EnclosureSummary, EstimateReport, Format, MethodLabel,
    PartErrors, Report, TimingReport, TrialRecord,
};

use crate::cases::BundledCase;
use crate::estimator::{self, EstimatorError};
use crate::measurement::{
    corrupt, redundancy, synthesize, MeasurementClass, MeasurementError, MeasurementSet,
    PlacementSpec, Rates,
};
use crate::network::{
    parse_network, solve_power_flow, Network, NetworkError, PowerFlowSolution, StateVector,
    DEFAULT_PF_MAX_ITER, DEFAULT_PF_TOL,
};
use crate::wls::{gauss_newton, WlsError, WlsProblem, DEFAULT_WLS_MAX_ITER, DEFAULT_WLS_TOL};

pub const WARMUP_RUNS: usize = 3;
/// Timed interval solves per report.
pub const TIMED_REPEATS: usize = 30;
/// Upper limit on sequential WLS solves timed for the ratio.
pub const WLS_TIMING_TRIALS: usize = 200;
pub const THREADS_ENV: &str = "HULLSTATE_THREADS";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error("trial {trial}: {source}")]
    Wls { trial: usize, source: WlsError },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("serialization failure: {0}")]
    Serialization(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Wls,
    Interval,
    Compare,
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wls" => Ok(Method::Wls),
            "interval" => Ok(Method::Interval),
            "compare" => Ok(Method::Compare),
            other => Err(BenchError::InvalidScenario(format!(
                "unknown method {other:?}"
            ))),
        }
    }
}

/// Per-class noise rates replacing the placement document's. A rate of 0
/// leaves that class noiseless; σ then still comes from the document rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseOverride {
    pub scada: Option<f64>,
    pub pseudo: Option<f64>,
}

impl NoiseOverride {
    pub fn none() -> Self {
        NoiseOverride::default()
    }

    pub fn zero() -> Self {
        NoiseOverride {
            scada: Some(0.0),
            pseudo: Some(0.0),
        }
    }
}

/// Gauss-Newton stopping rule used by every WLS solve of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GnSettings {
    fn default() -> Self {
        GnSettings {
            tol: DEFAULT_WLS_TOL,
            max_iter: DEFAULT_WLS_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub network_source: String,
    pub network_document: String,
    pub placement_source: String,
    pub placement_document: String,
    pub trials: usize,
    pub base_seed: u64,
    /// Load multiplier applied before the truth power flow.
    pub load_scale: Option<f64>,
    pub noise: NoiseOverride,
    pub method: Method,
    #[serde(default)]
    pub gn: GnSettings,
}

impl Scenario {
    pub fn new(
        network_source: impl Into<String>,
        network_document: impl Into<String>,
        placement_source: impl Into<String>,
        placement_document: impl Into<String>,
    ) -> Self {
        Scenario {
            network_source: network_source.into(),
            network_document: network_document.into(),
            placement_source: placement_source.into(),
            placement_document: placement_document.into(),
            trials: 1,
            base_seed: 0,
            load_scale: None,
            noise: NoiseOverride::none(),
            method: Method::Compare,
            gn: GnSettings::default(),
        }
    }

    pub fn bundled(case: BundledCase) -> Self {
        Scenario::new(
            format!("bundled:{}", case.name),
            case.network,
            format!("bundled:{}", case.name),
            case.placement,
        )
    }

    pub fn from_files(network: &Path, placement: &Path) -> Result<Self, BenchError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|e| BenchError::Io(format!("{}: {e}", p.display())))
        };
        Ok(Scenario::new(
            network.display().to_string(),
            read(network)?,
            placement.display().to_string(),
            read(placement)?,
        ))
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn with_load_scale(mut self, scale: Option<f64>) -> Self {
        self.load_scale = scale;
        self
    }

    pub fn with_noise(mut self, noise: NoiseOverride) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_gn(mut self, gn: GnSettings) -> Self {
        self.gn = gn;
        self
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(BenchError::InvalidScenario(
                "trials must be at least 1".into(),
            ));
        }
        if let Some(s) = self.load_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(BenchError::InvalidScenario(format!("load scale {s}")));
            }
        }
        if !(self.gn.tol.is_finite() && self.gn.tol > 0.0) || self.gn.max_iter == 0 {
            return Err(BenchError::InvalidScenario(format!(
                "Gauss-Newton tol {} / max iterations {}",
                self.gn.tol, self.gn.max_iter
            )));
        }
        for r in [self.noise.scada, self.noise.pseudo].into_iter().flatten() {
            if !(0.0..1.0).contains(&r) {
                return Err(BenchError::InvalidScenario(format!(
                    "noise rate {r} outside [0, 1)"
                )));
            }
        }
        Ok(())
    }

    pub fn seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials).map(|i| self.seed(i)).collect()
    }

    /// SHA-256 of the canonical JSON form, documents included.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Truth and noiseless measurements for a scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub network: Network,
    pub truth: PowerFlowSolution,
    pub clean: MeasurementSet,
    pub load_scale: f64,
    noisy_scada: bool,
    noisy_pseudo: bool,
}

impl Prepared {
    pub fn truth_state(&self) -> StateVector {
        self.truth.states()
    }

    /// The measurement set of one trial.
    pub fn measurements(&self, seed: u64) -> MeasurementSet {
        if !self.noisy_scada && !self.noisy_pseudo {
            return self.clean.clone();
        }
        let mut ms = corrupt(&self.clean, seed);
        for m in &mut ms.measurements {
            let noisy = match m.class {
                MeasurementClass::Scada => self.noisy_scada,
                MeasurementClass::Pseudo => self.noisy_pseudo,
            };
            if !noisy {
                m.noisy_value = m.true_value;
            }
        }
        ms
    }

    pub fn redundancy(&self) -> f64 {
        redundancy(&self.clean, &self.network)
    }
}

pub fn prepare(sc: &Scenario) -> Result<Prepared, BenchError> {
    sc.validate()?;
    let base = parse_network(&sc.network_document)?;
    let load_scale = sc.load_scale.unwrap_or(1.0);
    let network = match sc.load_scale {
        Some(s) => base.with_load_scale(s)?,
        None => base,
    };
    let truth = solve_power_flow(&network, DEFAULT_PF_TOL, DEFAULT_PF_MAX_ITER)?;
    let mut spec = PlacementSpec::parse(&sc.placement_document)?;
    let pick = |o: Option<f64>, doc: f64| match o {
        Some(r) if r > 0.0 => r,
        _ => doc,
    };
    let rates = Rates {
        scada: pick(sc.noise.scada, spec.rates.scada),
        pseudo: pick(sc.noise.pseudo, spec.rates.pseudo),
    };
    spec = spec.with_rates(rates)?;
    let clean = synthesize(&spec, &network, &truth)?;
    Ok(Prepared {
        network,
        truth,
        clean,
        load_scale,
        noisy_scada: sc.noise.scada != Some(0.0),
        noisy_pseudo: sc.noise.pseudo != Some(0.0),
    })
}

/// Absolute error per bus.
pub fn bus_errors(est: &StateVector, truth: &StateVector) -> Vec<PartErrors> {
    (0..truth.len())
        .map(|k| PartErrors {
            real: (est.vr[k] - truth.vr[k]).abs(),
            imag: (est.vx[k] - truth.vx[k]).abs(),
        })
        .collect()
}

/// Thread count from `HULLSTATE_THREADS`, else the machine's parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

struct TrialOutcome {
    errors: Vec<PartErrors>,
    iterations: usize,
    seconds: f64,
}

fn wls_trial(
    prep: &Prepared,
    gn: GnSettings,
    seed: u64,
    truth: &StateVector,
) -> Result<TrialOutcome, WlsError> {
    let ms = prep.measurements(seed);
    let t = Instant::now();
    let res = gauss_newton(&WlsProblem::new(&prep.network, &ms), gn.tol, gn.max_iter)?;
    let seconds = t.elapsed().as_secs_f64();
    Ok(TrialOutcome {
        errors: bus_errors(&res.x_hat, truth),
        iterations: res.iterations,
        seconds,
    })
}

fn bus_ids(net: &Network) -> Vec<String> {
    (0..net.bus_count())
        .map(|k| net.bus_id(k).to_string())
        .collect()
}

pub fn run_wls_campaign(sc: &Scenario) -> Result<EstimateReport, BenchError> {
    let prep = prepare(sc)?;
    wls_campaign(sc, &prep)
}

fn wls_campaign(sc: &Scenario, prep: &Prepared) -> Result<EstimateReport, BenchError> {
    let truth = prep.truth_state();
    let threads = thread_count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::InvalidScenario(e.to_string()))?;
    let outcomes: Vec<Result<TrialOutcome, WlsError>> = pool.install(|| {
        (0..sc.trials)
            .into_par_iter()
            .map(|i| wls_trial(prep, sc.gn, sc.seed(i), &truth))
            .collect()
    });
    let mut trials = Vec::with_capacity(sc.trials);
    let nb = truth.len();
    let mut sq = vec![PartErrors::default(); nb];
    let mut worst_bus = vec![PartErrors::default(); nb];
    let mut samples = Vec::with_capacity(sc.trials);
    for (i, out) in outcomes.into_iter().enumerate() {
        let out = out.map_err(|source| BenchError::Wls { trial: i, source })?;
        for (k, e) in out.errors.iter().enumerate() {
            sq[k].real += e.real * e.real;
            sq[k].imag += e.imag * e.imag;
            worst_bus[k] = worst_bus[k].max(*e);
        }
        samples.push(out.seconds);
        trials.push(TrialRecord {
            index: i,
            seed: sc.seed(i),
            mae: PartErrors::max_of(&out.errors),
            iterations: out.iterations,
            seconds: out.seconds,
        });
    }
    let n = sc.trials as f64;
    let rmse: Vec<PartErrors> = sq
        .iter()
        .map(|s| PartErrors {
            real: (s.real / n).sqrt(),
            imag: (s.imag / n).sqrt(),
        })
        .collect();
    let mae = trials
        .iter()
        .fold(PartErrors::default(), |a, t| a.max(t.mae));
    Ok(EstimateReport {
        method: MethodLabel::Wls,
        scenario_hash: sc.hash(),
        network_source: sc.network_source.clone(),
        placement_source: sc.placement_source.clone(),
        base_seed: sc.base_seed,
        seeds: sc.seeds(),
        load_scale: prep.load_scale,
        redundancy: prep.redundancy(),
        bus_ids: bus_ids(&prep.network),
        per_bus_abs_error: worst_bus,
        max_rmse: Some(PartErrors::max_of(&rmse)),
        per_bus_rmse: Some(rmse),
        mae,
        trials,
        timing: TimingReport::from_samples(&samples, 0, threads),
        gn: Some(sc.gn),
        enclosure: None,
    })
}

pub fn run_interval_once(sc: &Scenario) -> Result<EstimateReport, BenchError> {
    let prep = prepare(sc)?;
    interval_once(sc, &prep)
}

fn interval_once(sc: &Scenario, prep: &Prepared) -> Result<EstimateReport, BenchError> {
    let truth = prep.truth_state();
    let ms = prep.measurements(sc.base_seed);
    let est = estimator::estimate(&prep.network, &ms)?;
    for _ in 0..WARMUP_RUNS {
        estimator::estimate(&prep.network, &ms)?;
    }
    let mut samples = Vec::with_capacity(TIMED_REPEATS);
    for _ in 0..TIMED_REPEATS {
        let t = Instant::now();
        std::hint::black_box(estimator::estimate(&prep.network, &ms)?);
        samples.push(t.elapsed().as_secs_f64());
    }
    let timing = TimingReport::from_samples(&samples, WARMUP_RUNS, 1);
    let errors = bus_errors(&est.state, &truth);
    let mae = PartErrors::max_of(&errors);
    let nb = truth.len();
    let states = est.enclosure.states();
    let mut max_radius = PartErrors::default();
    for k in 0..nb {
        max_radius = max_radius.max(PartErrors {
            real: states[k].rad(),
            imag: states[nb + k].rad(),
        });
    }
    let contains_truth =
        (0..nb).all(|k| states[k].contains(truth.vr[k]) && states[nb + k].contains(truth.vx[k]));
    let enc = &est.enclosure;
    Ok(EstimateReport {
        method: MethodLabel::Interval,
        scenario_hash: sc.hash(),
        network_source: sc.network_source.clone(),
        placement_source: sc.placement_source.clone(),
        base_seed: sc.base_seed,
        seeds: vec![sc.base_seed],
        load_scale: prep.load_scale,
        redundancy: prep.redundancy(),
        bus_ids: bus_ids(&prep.network),
        per_bus_abs_error: errors,
        per_bus_rmse: None,
        mae,
        max_rmse: None,
        trials: vec![TrialRecord {
            index: 0,
            seed: sc.base_seed,
            mae,
            iterations: enc.iterations,
            seconds: timing.median_seconds,
        }],
        timing,
        gn: None,
        enclosure: Some(EnclosureSummary {
            beta: enc.beta,
            alpha: enc.alpha,
            iterations: enc.iterations,
            nested_checks: enc.nested_checks,
            max_radius,
            contains_truth,
            distances: enc.distances.clone(),
        }),
    })
}

/// Sequential WLS solves over the first trial seeds, after a warm-up.
pub fn time_wls_trials(sc: &Scenario, prep: &Prepared) -> Result<TimingReport, BenchError> {
    let truth = prep.truth_state();
    for _ in 0..WARMUP_RUNS {
        wls_trial(prep, sc.gn, sc.base_seed, &truth)
            .map_err(|source| BenchError::Wls { trial: 0, source })?;
    }
    let count = sc.trials.clamp(TIMED_REPEATS, WLS_TIMING_TRIALS);
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let out = wls_trial(prep, sc.gn, sc.seed(i % sc.trials), &truth).map_err(|source| {
            BenchError::Wls {
                trial: i % sc.trials,
                source,
            }
        })?;
        samples.push(out.seconds);
    }
    Ok(TimingReport::from_samples(&samples, WARMUP_RUNS, 1))
}

pub fn compare(sc: &Scenario) -> Result<ComparisonReport, BenchError> {
    let prep = prepare(sc)?;
    let wls = wls_campaign(sc, &prep)?;
    let interval = interval_once(sc, &prep)?;
    let wls_timing = time_wls_trials(sc, &prep)?;
    let interval_seconds = interval.timing.median_seconds;
    let mean_wls_trial_seconds = wls_timing.mean_seconds;
    Ok(ComparisonReport {
        scenario_hash: sc.hash(),
        ratio: interval_seconds / mean_wls_trial_seconds,
        wls,
        interval,
        wls_timing,
        interval_seconds,
        mean_wls_trial_seconds,
    })
}

/// Dispatches on `sc.method`.
pub fn run(sc: &Scenario) -> Result<Report, BenchError> {
    Ok(match sc.method {
        Method::Wls => Report::Estimate(run_wls_campaign(sc)?),
        Method::Interval => Report::Estimate(run_interval_once(sc)?),
        Method::Compare => Report::Comparison(compare(sc)?),
    })
}

fn min_voltage(net: &Network, scale: f64) -> Option<f64> {
    let n = net.with_load_scale(scale).ok()?;
    let sol = solve_power_flow(&n, DEFAULT_PF_TOL, DEFAULT_PF_MAX_ITER).ok()?;
    Some(
        sol.voltages
            .iter()
            .map(|v| v.norm())
            .fold(f64::INFINITY, f64::min),
    )
}

/// Load multiplier that puts the lowest bus voltage at `v_floor`, found by
/// bisection. A power flow that fails to converge counts as too heavy.
pub fn find_load_scale(net: &Network, v_floor: f64, tol: f64) -> Result<f64, BenchError> {
    let heavy = |s: f64| min_voltage(net, s).is_none_or(|v| v < v_floor);
    if heavy(0.0) {
        return Err(BenchError::InvalidScenario(format!(
            "no load scale reaches a minimum voltage of {v_floor}"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while !heavy(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(BenchError::InvalidScenario(format!(
                "minimum voltage stays above {v_floor} under any load"
            )));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if heavy(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}
