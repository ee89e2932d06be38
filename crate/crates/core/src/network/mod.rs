//! Radial distribution network model.
//!
//! A [`Network`] is built once from a JSON [`NetworkDocument`] and converted to
//! per-unit at ingestion. Bus order is the document order; every matrix and
//! vector downstream is indexed the same way.

mod flows;
mod powerflow;

use std::collections::{HashMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use flows::{
    branch_flow, branch_flow_partials, bus_injection, bus_injection_partials, Partial,
};
pub use powerflow::{
    solve_power_flow, BranchFlow, PowerFlowSolution, DEFAULT_PF_MAX_ITER, DEFAULT_PF_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("malformed network document: {0}")]
    Malformed(String),
    #[error("missing or invalid unit declaration: {0}")]
    UnitMissing(String),
    #[error("duplicate bus id {0:?}")]
    DuplicateBusId(String),
    #[error("unknown bus {0:?}")]
    UnknownBus(String),
    #[error("network has no slack bus")]
    NoSlackBus,
    #[error("network has {0} slack buses, expected exactly one")]
    MultipleSlackBuses(usize),
    #[error("branch {0:?} connects a bus to itself")]
    SelfLoop(String),
    #[error("branch {from}-{to} has zero impedance")]
    ZeroImpedance { from: String, to: String },
    #[error("topology is not radial: {buses} buses, {branches} branches")]
    NonRadialTopology { buses: usize, branches: usize },
    #[error("bus {0:?} is not connected to the slack bus")]
    DisconnectedGraph(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("no branch between {from} and {to}")]
    UnknownBranch { from: String, to: String },
    #[error("power flow did not converge in {max_iter} iterations (mismatch {mismatch:e})")]
    NonConvergence { max_iter: usize, mismatch: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseDoc {
    pub s_kva: Option<f64>,
    pub v_kv: Option<f64>,
}

fn default_pf() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusDoc {
    pub id: String,
    pub kind: BusKind,
    #[serde(default)]
    pub p_load_kw: f64,
    #[serde(default)]
    pub q_load_kvar: f64,
    #[serde(default)]
    pub dg_kva: f64,
    #[serde(default = "default_pf")]
    pub dg_pf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDoc {
    pub from: String,
    pub to: String,
    pub r_ohm: f64,
    pub x_ohm: f64,
}

/// On-disk network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub base: Option<BaseDoc>,
    pub buses: Vec<BusDoc>,
    pub branches: Vec<BranchDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Base {
    pub s_kva: f64,
    pub v_kv: f64,
}

impl Base {
    pub fn z_ohm(&self) -> f64 {
        self.v_kv * self.v_kv * 1000.0 / self.s_kva
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub kind: BusKind,
    /// Consumed power, p.u.
    pub load: Complex64,
    /// Generated power, p.u. (zero when no DG is attached).
    pub dg_injection: Complex64,
}

impl Bus {
    /// Net scheduled injection into the network.
    pub fn scheduled_injection(&self) -> Complex64 {
        self.dg_injection - self.load
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    /// Series admittance, p.u.
    pub y: Complex64,
}

/// Validated per-unit network.
#[derive(Debug, Clone)]
pub struct Network {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    base: Base,
    slack: usize,
    index: HashMap<String, usize>,
    // (neighbour, branch index) per bus
    adjacency: Vec<Vec<(usize, usize)>>,
    document: NetworkDocument,
}

/// Symmetric lookup of series admittances by bus pair.
#[derive(Debug, Clone, Default)]
pub struct AdmittanceMap {
    map: HashMap<(usize, usize), Complex64>,
}

impl AdmittanceMap {
    pub fn get(&self, i: usize, k: usize) -> Option<Complex64> {
        self.map.get(&(i.min(k), i.max(k))).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub fn parse_network(document: &str) -> Result<Network, NetworkError> {
    let doc: NetworkDocument =
        serde_json::from_str(document).map_err(|e| NetworkError::Malformed(e.to_string()))?;
    Network::from_document(doc)
}

pub fn build_admittance(net: &Network) -> AdmittanceMap {
    let map = net
        .branches
        .iter()
        .map(|b| ((b.from.min(b.to), b.from.max(b.to)), b.y))
        .collect();
    AdmittanceMap { map }
}

impl Network {
    pub fn from_document(doc: NetworkDocument) -> Result<Self, NetworkError> {
        let base = match &doc.base {
            Some(BaseDoc {
                s_kva: Some(s),
                v_kv: Some(v),
            }) if *s > 0.0 && *v > 0.0 && s.is_finite() && v.is_finite() => Base {
                s_kva: *s,
                v_kv: *v,
            },
            Some(_) => {
                return Err(NetworkError::UnitMissing(
                    "base.s_kva and base.v_kv must be positive".into(),
                ))
            }
            None => return Err(NetworkError::UnitMissing("base".into())),
        };

        let mut index = HashMap::new();
        let mut buses = Vec::with_capacity(doc.buses.len());
        for (k, b) in doc.buses.iter().enumerate() {
            if index.insert(b.id.clone(), k).is_some() {
                return Err(NetworkError::DuplicateBusId(b.id.clone()));
            }
            for (name, v) in [
                ("p_load_kw", b.p_load_kw),
                ("q_load_kvar", b.q_load_kvar),
                ("dg_kva", b.dg_kva),
            ] {
                if !v.is_finite() {
                    return Err(NetworkError::InvalidValue(format!("bus {}: {name}", b.id)));
                }
            }
            if b.dg_kva < 0.0 || !(b.dg_pf > 0.0 && b.dg_pf <= 1.0) {
                return Err(NetworkError::InvalidValue(format!(
                    "bus {}: dg_kva must be >= 0 and dg_pf in (0, 1]",
                    b.id
                )));
            }
            let load = Complex64::new(b.p_load_kw, b.q_load_kvar) / base.s_kva;
            let q_share = (1.0 - b.dg_pf * b.dg_pf).max(0.0).sqrt();
            let dg_injection = Complex64::new(b.dg_pf, q_share) * (b.dg_kva / base.s_kva);
            buses.push(Bus {
                id: b.id.clone(),
                kind: b.kind,
                load,
                dg_injection,
            });
        }

        let slacks: Vec<usize> = buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Slack)
            .map(|(k, _)| k)
            .collect();
        let slack = match slacks.as_slice() {
            [] => return Err(NetworkError::NoSlackBus),
            [s] => *s,
            many => return Err(NetworkError::MultipleSlackBuses(many.len())),
        };

        let z_base = base.z_ohm();
        let mut branches = Vec::with_capacity(doc.branches.len());
        let mut adjacency = vec![Vec::new(); buses.len()];
        for br in &doc.branches {
            let from = *index
                .get(&br.from)
                .ok_or_else(|| NetworkError::UnknownBus(br.from.clone()))?;
            let to = *index
                .get(&br.to)
                .ok_or_else(|| NetworkError::UnknownBus(br.to.clone()))?;
            if from == to {
                return Err(NetworkError::SelfLoop(br.from.clone()));
            }
            if !br.r_ohm.is_finite() || !br.x_ohm.is_finite() {
                return Err(NetworkError::InvalidValue(format!(
                    "branch {}-{} impedance",
                    br.from, br.to
                )));
            }
            let z = Complex64::new(br.r_ohm, br.x_ohm) / z_base;
            if z.norm() == 0.0 {
                return Err(NetworkError::ZeroImpedance {
                    from: br.from.clone(),
                    to: br.to.clone(),
                });
            }
            let bi = branches.len();
            adjacency[from].push((to, bi));
            adjacency[to].push((from, bi));
            branches.push(Branch {
                from,
                to,
                y: z.inv(),
            });
        }

        if branches.len() + 1 != buses.len() {
            return Err(NetworkError::NonRadialTopology {
                buses: buses.len(),
                branches: branches.len(),
            });
        }
        let mut seen = vec![false; buses.len()];
        let mut queue = VecDeque::from([slack]);
        seen[slack] = true;
        while let Some(k) = queue.pop_front() {
            for &(l, _) in &adjacency[k] {
                if !seen[l] {
                    seen[l] = true;
                    queue.push_back(l);
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(NetworkError::DisconnectedGraph(buses[k].id.clone()));
        }

        Ok(Network {
            buses,
            branches,
            base,
            slack,
            index,
            adjacency,
            document: doc,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_index(&self, id: &str) -> Result<usize, NetworkError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| NetworkError::UnknownBus(id.to_string()))
    }

    pub fn bus_id(&self, k: usize) -> &str {
        &self.buses[k].id
    }

    /// Neighbours of `k` together with the connecting branch index.
    pub fn neighbours(&self, k: usize) -> &[(usize, usize)] {
        &self.adjacency[k]
    }

    pub fn branch_between(&self, i: usize, k: usize) -> Option<&Branch> {
        self.adjacency
            .get(i)?
            .iter()
            .find(|(l, _)| *l == k)
            .map(|&(_, b)| &self.branches[b])
    }

    /// Admittance between adjacent buses.
    pub fn admittance(&self, i: usize, k: usize) -> Result<Complex64, NetworkError> {
        self.branch_between(i, k)
            .map(|b| b.y)
            .ok_or_else(|| self.unknown_branch(i, k))
    }

    pub(crate) fn unknown_branch(&self, i: usize, k: usize) -> NetworkError {
        let name = |x: usize| {
            self.buses
                .get(x)
                .map(|b| b.id.clone())
                .unwrap_or_else(|| format!("#{x}"))
        };
        NetworkError::UnknownBranch {
            from: name(i),
            to: name(k),
        }
    }

    /// The document this network was built from, values as ingested.
    pub fn document(&self) -> &NetworkDocument {
        &self.document
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document).expect("network document serializes")
    }

    /// Copy of this network with every bus load multiplied by `factor`.
    /// DG injections are unchanged.
    pub fn with_load_scale(&self, factor: f64) -> Result<Network, NetworkError> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(NetworkError::InvalidValue(format!("load scale {factor}")));
        }
        let mut doc = self.document.clone();
        for b in &mut doc.buses {
            b.p_load_kw *= factor;
            b.q_load_kvar *= factor;
        }
        Network::from_document(doc)
    }
}

/// Rectangular bus voltages, stacked as `[V_r; V_x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub vr: Vec<f64>,
    pub vx: Vec<f64>,
}

impl StateVector {
    pub fn flat(n_bus: usize) -> Self {
        StateVector {
            vr: vec![1.0; n_bus],
            vx: vec![0.0; n_bus],
        }
    }

    pub fn from_voltages(v: &[Complex64]) -> Self {
        StateVector {
            vr: v.iter().map(|c| c.re).collect(),
            vx: v.iter().map(|c| c.im).collect(),
        }
    }

    /// Splits a stacked `[V_r; V_x]` slice. Panics on odd length.
    pub fn from_stacked(x: &[f64]) -> Self {
        assert!(
            x.len().is_multiple_of(2),
            "stacked state must have even length"
        );
        let n = x.len() / 2;
        StateVector {
            vr: x[..n].to_vec(),
            vx: x[n..].to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.vr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vr.is_empty()
    }

    pub fn voltages(&self) -> Vec<Complex64> {
        self.vr
            .iter()
            .zip(&self.vx)
            .map(|(&r, &x)| Complex64::new(r, x))
            .collect()
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.vr.iter().chain(&self.vx).copied().collect()
    }

    /// Largest componentwise absolute difference, real and imaginary parts
    /// reported separately.
    pub fn max_abs_error(&self, truth: &StateVector) -> (f64, f64) {
        let m = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        (m(&self.vr, &truth.vr), m(&self.vx, &truth.vx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_bus_doc() -> String {
        r#"{
            "base": {"s_kva": 1000.0, "v_kv": 1.0},
            "buses": [
                {"id": "1", "kind": "slack"},
                {"id": "2", "kind": "pq", "p_load_kw": 100.0, "q_load_kvar": 50.0}
            ],
            "branches": [{"from": "1", "to": "2", "r_ohm": 0.01, "x_ohm": 0.02}]
        }"#
        .to_string()
    }

    #[test]
    fn two_bus_admittance_is_reciprocal() {
        let net = parse_network(&two_bus_doc()).unwrap();
        let y = net.admittance(0, 1).unwrap();
        assert!((y - Complex64::new(20.0, -40.0)).norm() < 1e-10);
        let map = build_admittance(&net);
        assert_eq!(map.get(0, 1), map.get(1, 0));
        assert_eq!(map.len(), 1);
        assert!((net.buses()[1].load - Complex64::new(0.1, 0.05)).norm() < 1e-15);
    }

    fn doc_with(f: impl FnOnce(&mut NetworkDocument)) -> Result<Network, NetworkError> {
        let mut doc: NetworkDocument = serde_json::from_str(&two_bus_doc()).unwrap();
        f(&mut doc);
        Network::from_document(doc)
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            doc_with(|d| d.buses[1].kind = BusKind::Slack).unwrap_err(),
            NetworkError::MultipleSlackBuses(2)
        );
        assert_eq!(
            doc_with(|d| d.buses[0].kind = BusKind::Pq).unwrap_err(),
            NetworkError::NoSlackBus
        );
        assert!(matches!(
            doc_with(|d| d.buses[1].id = "1".into()),
            Err(NetworkError::DuplicateBusId(_))
        ));
        assert!(matches!(
            doc_with(|d| d.base = None),
            Err(NetworkError::UnitMissing(_))
        ));
        assert!(matches!(
            doc_with(|d| d.base.as_mut().unwrap().v_kv = None),
            Err(NetworkError::UnitMissing(_))
        ));
        assert!(matches!(
            doc_with(|d| {
                d.branches[0].r_ohm = 0.0;
                d.branches[0].x_ohm = 0.0;
            }),
            Err(NetworkError::ZeroImpedance { .. })
        ));
        assert!(matches!(
            doc_with(|d| d.branches[0].to = "1".into()),
            Err(NetworkError::SelfLoop(_))
        ));
        assert!(matches!(
            doc_with(|d| d.branches.push(d.branches[0].clone())),
            Err(NetworkError::NonRadialTopology { .. })
        ));
        assert!(matches!(
            doc_with(|d| d.branches[0].to = "9".into()),
            Err(NetworkError::UnknownBus(_))
        ));
        assert!(matches!(
            parse_network("{not json"),
            Err(NetworkError::Malformed(_))
        ));
    }

    #[test]
    fn disconnected_graph_detected() {
        // 4 buses, 3 branches, but a cycle among 2-3-4 leaves 1 isolated.
        let doc = r#"{
            "base": {"s_kva": 1000.0, "v_kv": 1.0},
            "buses": [
                {"id": "1", "kind": "slack"}, {"id": "2", "kind": "pq"},
                {"id": "3", "kind": "pq"}, {"id": "4", "kind": "pq"}
            ],
            "branches": [
                {"from": "2", "to": "3", "r_ohm": 0.01, "x_ohm": 0.02},
                {"from": "3", "to": "4", "r_ohm": 0.01, "x_ohm": 0.02},
                {"from": "4", "to": "2", "r_ohm": 0.01, "x_ohm": 0.02}
            ]
        }"#;
        assert!(matches!(
            parse_network(doc),
            Err(NetworkError::DisconnectedGraph(_))
        ));
    }

    #[test]
    fn document_round_trip_is_exact() {
        let net = parse_network(&two_bus_doc()).unwrap();
        let again = parse_network(&net.to_json()).unwrap();
        assert_eq!(net.document(), again.document());
        assert_eq!(net.branches(), again.branches());
        assert_eq!(net.buses(), again.buses());
    }

    #[test]
    fn dg_uses_power_factor() {
        let net = doc_with(|d| {
            d.buses[1].dg_kva = 200.0;
            d.buses[1].dg_pf = 0.95;
        })
        .unwrap();
        let s = net.buses()[1].dg_injection * 1000.0;
        assert!((s.re - 190.0).abs() < 1e-12);
        assert!((s.im - 200.0 * (1.0f64 - 0.95 * 0.95).sqrt()).abs() < 1e-12);
    }
}
