//! Measurement placement, synthesis from a power-flow solution, and seeded
//! Gaussian corruption.
//!
//! Noise levels are given as a maximum relative error `rate`; the maximum
//! error is read as a 3σ bound, so `σ = rate·|true| / 3`. A floor
//! [`SIGMA_MIN`] keeps weights finite for quantities whose true value is zero.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Network, PowerFlowSolution};

pub const SIGMA_MIN: f64 = 1e-4;
pub const DEFAULT_SCADA_RATE: f64 = 0.01;
pub const DEFAULT_PSEUDO_RATE: f64 = 0.20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasurementError {
    #[error("malformed placement document: {0}")]
    Malformed(String),
    #[error("placement references unknown element {0:?}")]
    UnknownElement(String),
    #[error("insufficient redundancy: {m} measurements for {n} states")]
    InsufficientRedundancy { m: usize, n: usize },
    #[error("noise rate {0} outside (0, 1)")]
    InvalidRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasurementKind {
    Vmag { bus: usize },
    Pflow { from: usize, to: usize },
    Qflow { from: usize, to: usize },
    Pinj { bus: usize },
    Qinj { bus: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementClass {
    Scada,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub kind: MeasurementKind,
    pub class: MeasurementClass,
    pub true_value: f64,
    pub noisy_value: f64,
    pub sigma: f64,
}

impl Measurement {
    pub fn noise(&self) -> f64 {
        self.noisy_value - self.true_value
    }
}

/// Ordered measurements; the order fixes matrix row order downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub measurements: Vec<Measurement>,
    pub rng_seed: Option<u64>,
    pub state_count: usize,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Measurement> {
        self.measurements.iter()
    }

    pub fn redundancy(&self) -> f64 {
        self.len() as f64 / self.state_count as f64
    }

    /// Every σ multiplied by `factor`; values untouched.
    pub fn with_sigma_scale(&self, factor: f64) -> MeasurementSet {
        let mut out = self.clone();
        for m in &mut out.measurements {
            m.sigma *= factor;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub scada: f64,
    pub pseudo: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Rates {
            scada: DEFAULT_SCADA_RATE,
            pseudo: DEFAULT_PSEUDO_RATE,
        }
    }
}

/// Location lists per measurement type. Branches are written `"from-to"`;
/// flows are metered at the `from` end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSpec {
    #[serde(default)]
    pub vmag: Vec<String>,
    #[serde(default)]
    pub flow: Vec<String>,
    #[serde(default)]
    pub inj_pseudo: Vec<String>,
    #[serde(default)]
    pub rates: Rates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl PlacementSpec {
    pub fn parse(document: &str) -> Result<Self, MeasurementError> {
        let spec: PlacementSpec = serde_json::from_str(document)
            .map_err(|e| MeasurementError::Malformed(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), MeasurementError> {
        for r in [self.rates.scada, self.rates.pseudo] {
            if !(r > 0.0 && r < 1.0) {
                return Err(MeasurementError::InvalidRate(r));
            }
        }
        Ok(())
    }

    pub fn with_rates(mut self, rates: Rates) -> Result<Self, MeasurementError> {
        self.rates = rates;
        self.validate()?;
        Ok(self)
    }

    pub fn measurement_count(&self) -> usize {
        self.vmag.len() + 2 * self.flow.len() + 2 * self.inj_pseudo.len()
    }
}

pub fn sigma_from_max_error(true_value: f64, rate: f64) -> f64 {
    (rate * true_value.abs() / 3.0).max(SIGMA_MIN)
}

/// Number of estimated quantities used for redundancy: both rectangular
/// parts at every bus.
pub fn state_count(net: &Network) -> usize {
    2 * net.bus_count()
}

pub fn redundancy(ms: &MeasurementSet, net: &Network) -> f64 {
    ms.len() as f64 / state_count(net) as f64
}

fn resolve_bus(net: &Network, id: &str) -> Result<usize, MeasurementError> {
    net.bus_index(id)
        .map_err(|_| MeasurementError::UnknownElement(id.to_string()))
}

fn resolve_branch(net: &Network, label: &str) -> Result<(usize, usize), MeasurementError> {
    let unknown = || MeasurementError::UnknownElement(label.to_string());
    let (a, b) = label.split_once('-').ok_or_else(unknown)?;
    let i = resolve_bus(net, a.trim())?;
    let k = resolve_bus(net, b.trim())?;
    net.branch_between(i, k).ok_or_else(unknown)?;
    Ok((i, k))
}

/// Builds noiseless measurements (`noisy_value == true_value`) in spec order:
/// magnitudes, then P/Q per flow, then P/Q per pseudo injection.
pub fn synthesize(
    spec: &PlacementSpec,
    net: &Network,
    sol: &PowerFlowSolution,
) -> Result<MeasurementSet, MeasurementError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.measurement_count());
    let mut push = |kind, class, value: f64| {
        let rate = match class {
            MeasurementClass::Scada => spec.rates.scada,
            MeasurementClass::Pseudo => spec.rates.pseudo,
        };
        out.push(Measurement {
            kind,
            class,
            true_value: value,
            noisy_value: value,
            sigma: sigma_from_max_error(value, rate),
        });
    };
    for id in &spec.vmag {
        let bus = resolve_bus(net, id)?;
        push(
            MeasurementKind::Vmag { bus },
            MeasurementClass::Scada,
            sol.voltages[bus].norm(),
        );
    }
    for label in &spec.flow {
        let (from, to) = resolve_branch(net, label)?;
        let s = sol
            .branch_flow(net, from, to)
            .map_err(|_| MeasurementError::UnknownElement(label.clone()))?;
        push(
            MeasurementKind::Pflow { from, to },
            MeasurementClass::Scada,
            s.re,
        );
        push(
            MeasurementKind::Qflow { from, to },
            MeasurementClass::Scada,
            s.im,
        );
    }
    for id in &spec.inj_pseudo {
        let bus = resolve_bus(net, id)?;
        let s = sol.injections[bus];
        push(
            MeasurementKind::Pinj { bus },
            MeasurementClass::Pseudo,
            s.re,
        );
        push(
            MeasurementKind::Qinj { bus },
            MeasurementClass::Pseudo,
            s.im,
        );
    }
    let n = state_count(net);
    if out.len() < n {
        return Err(MeasurementError::InsufficientRedundancy { m: out.len(), n });
    }
    Ok(MeasurementSet {
        measurements: out,
        rng_seed: None,
        state_count: n,
    })
}

/// Adds independent `N(0, σ²)` noise to every true value. The same seed always
/// gives bit-identical output. Noise is not truncated.
pub fn corrupt(ms: &MeasurementSet, seed: u64) -> MeasurementSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measurements = ms
        .measurements
        .iter()
        .map(|m| {
            let e: f64 = StandardNormal.sample(&mut rng);
            Measurement {
                noisy_value: m.true_value + m.sigma * e,
                ..m.clone()
            }
        })
        .collect();
    MeasurementSet {
        measurements,
        rng_seed: Some(seed),
        state_count: ms.state_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{parse_network, solve_power_flow};

    fn two_bus() -> (Network, PowerFlowSolution) {
        let net = parse_network(
            r#"{
            "base": {"s_kva": 1000.0, "v_kv": 1.0},
            "buses": [
                {"id": "1", "kind": "slack"},
                {"id": "2", "kind": "pq", "p_load_kw": 100.0, "q_load_kvar": 50.0}
            ],
            "branches": [{"from": "1", "to": "2", "r_ohm": 0.01, "x_ohm": 0.02}]
        }"#,
        )
        .unwrap();
        let sol = solve_power_flow(&net, 1e-10, 30).unwrap();
        (net, sol)
    }

    fn spec(vmag: &[&str], flow: &[&str], inj: &[&str]) -> PlacementSpec {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        PlacementSpec {
            vmag: s(vmag),
            flow: s(flow),
            inj_pseudo: s(inj),
            rates: Rates::default(),
            notes: None,
        }
    }

    #[test]
    fn sigma_rule() {
        assert!((sigma_from_max_error(1.0, 0.01) - 0.01 / 3.0).abs() < 1e-18);
        assert_eq!(sigma_from_max_error(0.0, 0.2), SIGMA_MIN);
        assert!((sigma_from_max_error(0.15, 0.20) - 0.01).abs() < 1e-15);
        assert!((sigma_from_max_error(-0.15, 0.20) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn two_bus_counting() {
        let (net, sol) = two_bus();
        let ms = synthesize(&spec(&["1", "2"], &[], &["1", "2"]), &net, &sol).unwrap();
        assert_eq!(ms.len(), 6);
        assert_eq!(state_count(&net), 4);
        assert!((redundancy(&ms, &net) - 1.5).abs() < 1e-15);
        assert!(ms.iter().all(|m| m.noisy_value == m.true_value));

        // One flow pair adds 2 rows; doubling the flow list adds 2 more.
        let one = synthesize(&spec(&["1", "2"], &["1-2"], &["1", "2"]), &net, &sol).unwrap();
        let two = synthesize(&spec(&["1", "2"], &["1-2", "1-2"], &["1", "2"]), &net, &sol).unwrap();
        assert!((redundancy(&one, &net) - 8.0 / 4.0).abs() < 1e-15);
        assert!((redundancy(&two, &net) - 10.0 / 4.0).abs() < 1e-15);

        let eq = synthesize(&spec(&[], &["1-2"], &["2"]), &net, &sol).unwrap();
        assert_eq!(eq.redundancy(), 1.0);
    }

    #[test]
    fn synthesis_errors() {
        let (net, sol) = two_bus();
        assert_eq!(
            synthesize(&spec(&[], &[], &[]), &net, &sol).unwrap_err(),
            MeasurementError::InsufficientRedundancy { m: 0, n: 4 }
        );
        assert!(matches!(
            synthesize(&spec(&["7"], &[], &["1", "2"]), &net, &sol),
            Err(MeasurementError::UnknownElement(_))
        ));
        assert!(matches!(
            synthesize(&spec(&[], &["1+2"], &["1", "2"]), &net, &sol),
            Err(MeasurementError::UnknownElement(_))
        ));
        let bad = spec(&["1"], &[], &["1", "2"])
            .with_rates(Rates {
                scada: 0.0,
                pseudo: 0.2,
            })
            .unwrap_err();
        assert_eq!(bad, MeasurementError::InvalidRate(0.0));
    }

    #[test]
    fn flow_orientation_follows_label() {
        let (net, sol) = two_bus();
        let fwd = synthesize(&spec(&["1", "2"], &["1-2"], &["2"]), &net, &sol).unwrap();
        let rev = synthesize(&spec(&["1", "2"], &["2-1"], &["2"]), &net, &sol).unwrap();
        let p = |ms: &MeasurementSet| ms.measurements[2].true_value;
        assert!(p(&fwd) > 0.0 && p(&rev) < 0.0);
        assert!(p(&fwd) + p(&rev) > 0.0, "losses are positive");
    }

    #[test]
    fn corruption_is_deterministic() {
        let (net, sol) = two_bus();
        let ms = synthesize(&spec(&["1", "2"], &["1-2"], &["1", "2"]), &net, &sol).unwrap();
        let a = corrupt(&ms, 42);
        let b = corrupt(&ms, 42);
        assert_eq!(a, b);
        assert_ne!(a, corrupt(&ms, 43));
        assert_eq!(a.rng_seed, Some(42));
    }

    #[test]
    fn floored_sigma_keeps_noise_small() {
        let zero = Measurement {
            kind: MeasurementKind::Pinj { bus: 1 },
            class: MeasurementClass::Pseudo,
            true_value: 0.0,
            noisy_value: 0.0,
            sigma: sigma_from_max_error(0.0, DEFAULT_PSEUDO_RATE),
        };
        let ms = MeasurementSet {
            measurements: vec![zero; 50],
            rng_seed: None,
            state_count: 4,
        };
        for seed in 0..200 {
            for m in corrupt(&ms, seed).iter() {
                assert_eq!(m.sigma, SIGMA_MIN);
                assert!(m.noise().abs() <= 5.0 * SIGMA_MIN);
            }
        }
    }

    #[test]
    fn serialization_preserves_order_and_values() {
        let (net, sol) = two_bus();
        let ms = corrupt(
            &synthesize(&spec(&["1", "2"], &["1-2"], &["1", "2"]), &net, &sol).unwrap(),
            9,
        );
        let text = serde_json::to_string(&ms).unwrap();
        let back: MeasurementSet = serde_json::from_str(&text).unwrap();
        assert_eq!(ms, back);
    }

    #[test]
    fn placement_document_parses() {
        let spec = PlacementSpec::parse(
            r#"{"vmag": ["1"], "flow": ["1-2"], "inj_pseudo": ["2"], "rates": {"scada": 0.01, "pseudo": 0.2}}"#,
        )
        .unwrap();
        assert_eq!(spec.measurement_count(), 5);
        assert!(PlacementSpec::parse(r#"{"rates": {"scada": 1.5, "pseudo": 0.2}}"#).is_err());
    }
}
