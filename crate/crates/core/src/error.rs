//! Crate-wide error with a stable, machine-readable category per failure.

use thiserror::Error;

use crate::bench::BenchError;
use crate::estimator::EstimatorError;
use crate::interval::IntervalError;
use crate::measurement::MeasurementError;
use crate::network::NetworkError;
use crate::wls::WlsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Wls(#[from] WlsError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// `module.failure`, e.g. `"network.non_radial_topology"`.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Network(e) => network_category(e),
            Error::Measurement(e) => measurement_category(e),
            Error::Wls(e) => wls_category(e),
            Error::Estimator(e) => estimator_category(e),
            Error::Interval(e) => interval_category(e),
            Error::Bench(e) => bench_category(e),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Network(_) => 10,
            Error::Measurement(_) => 11,
            Error::Wls(_) => 12,
            Error::Estimator(_) | Error::Interval(_) => 13,
            Error::Bench(e) => match e {
                BenchError::Network(_) => 10,
                BenchError::Measurement(_) => 11,
                BenchError::Wls { .. } => 12,
                BenchError::Estimator(_) => 13,
                BenchError::InvalidScenario(_) => 14,
                BenchError::Io(_) | BenchError::Serialization(_) => 15,
            },
        }
    }
}

fn network_category(e: &NetworkError) -> &'static str {
    match e {
        NetworkError::Malformed(_) => "network.malformed",
        NetworkError::UnitMissing(_) => "network.unit_missing",
        NetworkError::DuplicateBusId(_) => "network.duplicate_bus_id",
        NetworkError::UnknownBus(_) => "network.unknown_bus",
        NetworkError::NoSlackBus => "network.no_slack_bus",
        NetworkError::MultipleSlackBuses(_) => "network.multiple_slack_buses",
        NetworkError::SelfLoop(_) => "network.self_loop",
        NetworkError::ZeroImpedance { .. } => "network.zero_impedance",
        NetworkError::NonRadialTopology { .. } => "network.non_radial_topology",
        NetworkError::DisconnectedGraph(_) => "network.disconnected_graph",
        NetworkError::InvalidValue(_) => "network.invalid_value",
        NetworkError::UnknownBranch { .. } => "network.unknown_branch",
        NetworkError::NonConvergence { .. } => "network.non_convergence",
    }
}

fn measurement_category(e: &MeasurementError) -> &'static str {
    match e {
        MeasurementError::Malformed(_) => "measurement.malformed",
        MeasurementError::UnknownElement(_) => "measurement.unknown_element",
        MeasurementError::InsufficientRedundancy { .. } => "measurement.insufficient_redundancy",
        MeasurementError::InvalidRate(_) => "measurement.invalid_rate",
    }
}

fn wls_category(e: &WlsError) -> &'static str {
    match e {
        WlsError::UnknownElement(_) => "wls.unknown_element",
        WlsError::SingularGainMatrix => "wls.singular_gain_matrix",
        WlsError::NonConvergence { .. } => "wls.non_convergence",
        WlsError::Underdetermined { .. } => "wls.underdetermined",
        WlsError::StateLength { .. } => "wls.state_length",
    }
}

fn estimator_category(e: &EstimatorError) -> &'static str {
    match e {
        EstimatorError::UnpairedPQ(_) => "estimator.unpaired_pq",
        EstimatorError::UnknownElement(_) => "estimator.unknown_element",
        EstimatorError::RankDeficient { .. } => "estimator.rank_deficient",
        EstimatorError::SingularMidpoint => "estimator.singular_midpoint",
        EstimatorError::ContractionFailure { .. } => "estimator.contraction_failure",
        EstimatorError::EmptyIntersection { .. } => "estimator.empty_intersection",
        EstimatorError::IterationCap { .. } => "estimator.iteration_cap",
        EstimatorError::NestingViolation { .. } => "estimator.nesting_violation",
        EstimatorError::Interval(e) => interval_category(e),
    }
}

fn interval_category(e: &IntervalError) -> &'static str {
    match e {
        IntervalError::InvalidBounds { .. } => "interval.invalid_bounds",
        IntervalError::EmptyIntersection { .. } => "interval.empty_intersection",
        IntervalError::DimensionMismatch { .. } => "interval.dimension_mismatch",
    }
}

fn bench_category(e: &BenchError) -> &'static str {
    match e {
        BenchError::Network(e) => network_category(e),
        BenchError::Measurement(e) => measurement_category(e),
        BenchError::Wls { source, .. } => wls_category(source),
        BenchError::Estimator(e) => estimator_category(e),
        BenchError::InvalidScenario(_) => "bench.invalid_scenario",
        BenchError::Io(_) => "bench.io_failure",
        BenchError::Serialization(_) => "bench.serialization",
    }
}
