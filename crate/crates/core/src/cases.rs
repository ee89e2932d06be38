//! Networks and placements shipped with the crate.

use crate::measurement::{MeasurementError, PlacementSpec};
use crate::network::{parse_network, Network, NetworkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundledCase {
    pub name: &'static str,
    pub network: &'static str,
    pub placement: &'static str,
}

impl BundledCase {
    pub fn network(&self) -> Result<Network, NetworkError> {
        parse_network(self.network)
    }

    pub fn placement(&self) -> Result<PlacementSpec, MeasurementError> {
        PlacementSpec::parse(self.placement)
    }
}

pub const IEEE34_NETWORK: &str = include_str!("../data/ieee34_mod.json");
/// 4 magnitudes, 5 flow pairs, 33 pseudo injection pairs.
pub const TABLE1_PLACEMENT: &str = include_str!("../data/table1.json");
pub const R1221_PLACEMENT: &str = include_str!("../data/table1_r1221.json");
pub const R1265_PLACEMENT: &str = include_str!("../data/table1_r1265.json");

pub const TWO_BUS: BundledCase = BundledCase {
    name: "two_bus",
    network: include_str!("../data/two_bus.json"),
    placement: include_str!("../data/two_bus_placement.json"),
};

pub const SIX_BUS: BundledCase = BundledCase {
    name: "six_bus",
    network: include_str!("../data/six_bus.json"),
    placement: include_str!("../data/six_bus_placement.json"),
};

pub const IEEE34: BundledCase = BundledCase {
    name: "ieee34",
    network: IEEE34_NETWORK,
    placement: TABLE1_PLACEMENT,
};

pub const IEEE34_R1221: BundledCase = BundledCase {
    name: "ieee34_r1221",
    network: IEEE34_NETWORK,
    placement: R1221_PLACEMENT,
};

pub const IEEE34_R1265: BundledCase = BundledCase {
    name: "ieee34_r1265",
    network: IEEE34_NETWORK,
    placement: R1265_PLACEMENT,
};

pub const ALL: [BundledCase; 5] = [TWO_BUS, SIX_BUS, IEEE34, IEEE34_R1221, IEEE34_R1265];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{redundancy, synthesize};
    use crate::network::{solve_power_flow, DEFAULT_PF_MAX_ITER, DEFAULT_PF_TOL};

    #[test]
    fn every_case_parses_and_solves() {
        for case in ALL {
            let net = case.network().unwrap();
            let spec = case.placement().unwrap();
            let sol = solve_power_flow(&net, DEFAULT_PF_TOL, DEFAULT_PF_MAX_ITER).unwrap();
            synthesize(&spec, &net, &sol).unwrap();
        }
    }

    #[test]
    fn ieee34_profile_and_redundancies() {
        let net = IEEE34.network().unwrap();
        assert_eq!(net.bus_count(), 34);
        let sol = solve_power_flow(&net, DEFAULT_PF_TOL, DEFAULT_PF_MAX_ITER).unwrap();
        for v in &sol.voltages {
            assert!((0.95..=1.05).contains(&v.norm()), "{}", v.norm());
        }
        for id in ["822", "838", "856", "864"] {
            let bus = &net.buses()[net.bus_index(id).unwrap()];
            assert!((bus.dg_injection.norm() - 0.08).abs() < 1e-12);
        }
        let expect = [
            (IEEE34, 80, 1.176),
            (IEEE34_R1221, 83, 1.221),
            (IEEE34_R1265, 86, 1.265),
        ];
        for (case, m, r) in expect {
            let ms = synthesize(&case.placement().unwrap(), &net, &sol).unwrap();
            assert_eq!(ms.len(), m);
            assert!((redundancy(&ms, &net) - r).abs() < 5e-4);
        }
    }
}
