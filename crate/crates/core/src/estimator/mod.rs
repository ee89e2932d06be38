//! Linearized interval state estimator.
//!
//! Pipeline: [`build_linear_model`] → [`to_rectangular`] →
//! [`relax_to_intervals`] → [`augment`] → [`krawczyk_init_structured`] →
//! [`krawczyk_solve`]. The estimate is the midpoint of the state part of the
//! final box; the box itself is a sound enclosure, not necessarily the
//! tightest hull.

mod krawczyk;
mod linear;

use std::time::{Duration, Instant};

use thiserror::Error;

pub use krawczyk::{
    augment, krawczyk_init, krawczyk_init_structured, krawczyk_solve, krawczyk_step,
    AugmentedSystem, KrawczykInit, KrawczykOutcome, DEFAULT_EPS, DEFAULT_ITERATION_CAP,
};
pub use linear::{
    build_linear_model, linearize_reciprocal, reciprocal_error, reciprocal_error_bound,
    relax_to_intervals, to_rectangular, ComplexRow, IntervalSystem, LinearModel, MagnitudeRow,
    Part, RealSystem, RowProvenance, RowSource, ThinQr, SIGMA_MULTIPLE,
};

use crate::interval::{IntervalError, IntervalVector};
use crate::measurement::MeasurementSet;
use crate::network::{Network, StateVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("unpaired active/reactive measurement: {0}")]
    UnpairedPQ(String),
    #[error("measurement references unknown element: {0}")]
    UnknownElement(String),
    #[error("linear model has rank {rank} < {n} (placement not observable)")]
    RankDeficient { rank: usize, n: usize },
    #[error("midpoint of the augmented matrix is singular")]
    SingularMidpoint,
    #[error("‖I − C𝒜‖∞ = {beta} is not below 1")]
    ContractionFailure { beta: f64 },
    #[error("Krawczyk image missed the current box at iteration {iteration}")]
    EmptyIntersection { iteration: usize },
    #[error("Krawczyk iteration hit the cap of {cap} (last distance {distance:e})")]
    IterationCap { cap: usize, distance: f64 },
    #[error("box grew at iteration {iteration}")]
    NestingViolation { iteration: usize },
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    /// Dense LU of the whole `(m+n)×(m+n)` midpoint.
    DenseLu,
    /// Block formula from a QR of `Mid(A)`.
    #[default]
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub eps: f64,
    pub iteration_cap: usize,
    pub preconditioner: Preconditioner,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            eps: DEFAULT_EPS,
            iteration_cap: DEFAULT_ITERATION_CAP,
            preconditioner: Preconditioner::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enclosure {
    /// States `[V_r; V_x]` then the dummy residual vector.
    pub hull: IntervalVector,
    pub iterations: usize,
    pub beta: f64,
    pub alpha: f64,
    pub x_mid: StateVector,
    pub distances: Vec<f64>,
    pub nested_checks: usize,
    pub rows: usize,
}

impl Enclosure {
    /// The state part of the box.
    pub fn states(&self) -> &[crate::interval::Interval] {
        &self.hull.as_slice()[..2 * self.x_mid.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timing {
    /// Model construction through relaxation and augmentation.
    pub build: Duration,
    /// Preconditioner and iteration.
    pub solve: Duration,
}

impl Timing {
    pub fn total(&self) -> Duration {
        self.build + self.solve
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalEstimate {
    pub state: StateVector,
    pub enclosure: Enclosure,
    pub timing: Timing,
}

/// Runs the iteration on an already augmented system.
pub fn solve_enclosure(
    aug: &AugmentedSystem,
    bus_count: usize,
    config: &EstimatorConfig,
) -> Result<Enclosure, EstimatorError> {
    let init = match config.preconditioner {
        Preconditioner::DenseLu => krawczyk_init(aug)?,
        Preconditioner::Structured => krawczyk_init_structured(aug)?,
    };
    let out = krawczyk_solve(&init, config.eps, config.iteration_cap)?;
    let mid = out.hull.mid();
    let x_mid = StateVector::from_stacked(&mid.as_slice()[..2 * bus_count]);
    Ok(Enclosure {
        hull: out.hull,
        iterations: out.iterations,
        beta: init.beta,
        alpha: init.alpha,
        x_mid,
        distances: out.distances,
        nested_checks: out.nested_checks,
        rows: aug.m,
    })
}

/// Builds the interval system for `ms` on `net`, ready for the iteration.
pub fn build_augmented(
    net: &Network,
    ms: &MeasurementSet,
) -> Result<AugmentedSystem, EstimatorError> {
    let model = build_linear_model(net, ms)?;
    let sys = to_rectangular(&model, ms)?;
    Ok(augment(&relax_to_intervals(&sys)))
}

pub fn estimate(net: &Network, ms: &MeasurementSet) -> Result<IntervalEstimate, EstimatorError> {
    estimate_with(net, ms, &EstimatorConfig::default())
}

pub fn estimate_with(
    net: &Network,
    ms: &MeasurementSet,
    config: &EstimatorConfig,
) -> Result<IntervalEstimate, EstimatorError> {
    let t0 = Instant::now();
    let aug = build_augmented(net, ms)?;
    let t1 = Instant::now();
    let enclosure = solve_enclosure(&aug, net.bus_count(), config)?;
    let t2 = Instant::now();
    Ok(IntervalEstimate {
        state: enclosure.x_mid.clone(),
        enclosure,
        timing: Timing {
            build: t1 - t0,
            solve: t2 - t1,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{corrupt, synthesize, PlacementSpec, Rates};
    use crate::network::{parse_network, solve_power_flow};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn feeder() -> Network {
        parse_network(
            r#"{
            "base": {"s_kva": 1000.0, "v_kv": 4.16},
            "buses": [
                {"id": "s", "kind": "slack"},
                {"id": "a", "kind": "pq", "p_load_kw": 120.0, "q_load_kvar": 60.0},
                {"id": "b", "kind": "pq", "p_load_kw": 80.0, "q_load_kvar": 30.0},
                {"id": "c", "kind": "pq", "p_load_kw": 40.0, "q_load_kvar": 20.0, "dg_kva": 50.0}
            ],
            "branches": [
                {"from": "s", "to": "a", "r_ohm": 0.2, "x_ohm": 0.4},
                {"from": "a", "to": "b", "r_ohm": 0.3, "x_ohm": 0.3},
                {"from": "a", "to": "c", "r_ohm": 0.5, "x_ohm": 0.2}
            ]
        }"#,
        )
        .unwrap()
    }

    fn placement() -> PlacementSpec {
        PlacementSpec {
            vmag: vec!["s".into(), "b".into()],
            flow: vec!["s-a".into(), "a-c".into()],
            inj_pseudo: ["a", "b", "c"].iter().map(|s| s.to_string()).collect(),
            rates: Rates::default(),
            notes: None,
        }
    }

    fn dense_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        (a.transpose() * a)
            .cholesky()
            .unwrap()
            .solve(&(a.transpose() * b))
    }

    #[test]
    fn noiseless_estimate_is_close_to_truth() {
        let net = feeder();
        let sol = solve_power_flow(&net, 1e-12, 30).unwrap();
        let ms = synthesize(&placement(), &net, &sol).unwrap();
        let est = estimate(&net, &ms).unwrap();
        let (er, ex) = est.state.max_abs_error(&sol.states());
        assert!(er < 1e-3 && ex < 1e-3, "{er} {ex}");
        assert!(est.enclosure.beta < 1.0);
        assert_eq!(est.enclosure.nested_checks, est.enclosure.iterations);
    }

    #[test]
    fn noisy_truth_stays_inside_enclosure_of_point_solutions() {
        // Any point system inside the intervals has its least-squares
        // solution in the box.
        let net = feeder();
        let sol = solve_power_flow(&net, 1e-12, 30).unwrap();
        let ms = corrupt(&synthesize(&placement(), &net, &sol).unwrap(), 11);
        let est = estimate(&net, &ms).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let mut draw = ms.clone();
            for m in &mut draw.measurements {
                m.noisy_value += rng.random_range(-3.0..=3.0) * m.sigma;
            }
            let sys = to_rectangular(&build_linear_model(&net, &draw).unwrap(), &draw).unwrap();
            let x = dense_lstsq(&sys.a, &sys.b);
            let y = &sys.a * &x - &sys.b;
            let point: Vec<f64> = x.iter().chain(y.iter()).copied().collect();
            assert!(est.enclosure.hull.contains_point(&point));
        }
    }

    #[test]
    fn degenerate_midpoint_is_least_squares() {
        let net = feeder();
        let sol = solve_power_flow(&net, 1e-12, 30).unwrap();
        let ms = corrupt(&synthesize(&placement(), &net, &sol).unwrap(), 3).with_sigma_scale(0.0);
        let sys = to_rectangular(&build_linear_model(&net, &ms).unwrap(), &ms).unwrap();
        let x = dense_lstsq(&sys.a, &sys.b);
        for pre in [Preconditioner::DenseLu, Preconditioner::Structured] {
            let cfg = EstimatorConfig {
                preconditioner: pre,
                ..Default::default()
            };
            let est = estimate_with(&net, &ms, &cfg).unwrap();
            let got = DVector::from_vec(est.state.stacked());
            assert!((got - &x).amax() < 1e-8);
        }
    }

    #[test]
    fn unobservable_placement_reports_rank() {
        let net = feeder();
        let sol = solve_power_flow(&net, 1e-12, 30).unwrap();
        let mut ms = synthesize(&placement(), &net, &sol).unwrap();
        // keep magnitudes and the s-a flow only
        ms.measurements.truncate(4);
        assert!(matches!(
            estimate(&net, &ms),
            Err(EstimatorError::RankDeficient { .. })
        ));
    }

    fn fixed_steps(net: &Network, ms: &MeasurementSet, steps: usize) -> Option<IntervalVector> {
        let init = krawczyk_init_structured(&build_augmented(net, ms).ok()?).ok()?;
        let mut x = init.x0.clone();
        for _ in 0..steps {
            x = krawczyk_step(&init, &x).ok()?;
        }
        Some(x)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        // Same number of steps on both sides: X'⁽ʲ⁾ ⊇ X⁽ʲ⁾ by induction.
        #[test]
        fn wider_noise_never_shrinks_the_box(seed in 0u64..1000, factor in 1.0f64..2.5) {
            let net = feeder();
            let sol = solve_power_flow(&net, 1e-12, 30).unwrap();
            let ms = corrupt(&synthesize(&placement(), &net, &sol).unwrap(), seed);
            let wide = ms.with_sigma_scale(factor);
            let (Some(narrow), Some(wide)) = (fixed_steps(&net, &ms, 8), fixed_steps(&net, &wide, 8)) else {
                return Ok(());
            };
            for (n, w) in narrow.iter().zip(wide.iter()) {
                let slack = 1e-12 * (1.0 + n.mag());
                prop_assert!(w.lo() <= n.lo() + slack && w.hi() >= n.hi() - slack);
            }
        }
    }
}
