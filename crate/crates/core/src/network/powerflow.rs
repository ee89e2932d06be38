//! Newton-Raphson power flow in rectangular coordinates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::flows::{branch_flow, bus_injection, bus_injection_partials};
use super::{Network, NetworkError, StateVector};

pub const DEFAULT_PF_TOL: f64 = 1e-10;
pub const DEFAULT_PF_MAX_ITER: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchFlow {
    pub from: usize,
    pub to: usize,
    /// Power leaving `from` towards `to`.
    pub s_from: Complex64,
    /// Power leaving `to` towards `from`.
    pub s_to: Complex64,
}

impl BranchFlow {
    pub fn losses(&self) -> Complex64 {
        self.s_from + self.s_to
    }
}

#[derive(Debug, Clone)]
pub struct PowerFlowSolution {
    pub voltages: Vec<Complex64>,
    pub flows: Vec<BranchFlow>,
    pub injections: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
}

impl PowerFlowSolution {
    pub fn states(&self) -> StateVector {
        StateVector::from_voltages(&self.voltages)
    }

    pub fn branch_flow(
        &self,
        net: &Network,
        i: usize,
        k: usize,
    ) -> Result<Complex64, NetworkError> {
        if i >= self.voltages.len() || k >= self.voltages.len() {
            return Err(net.unknown_branch(i, k));
        }
        branch_flow(net, &self.voltages, i, k)
    }

    pub fn bus_injection(&self, net: &Network, k: usize) -> Result<Complex64, NetworkError> {
        self.injections
            .get(k)
            .copied()
            .ok_or_else(|| NetworkError::UnknownBus(format!("#{k} of {}", net.bus_count())))
    }

    pub fn total_losses(&self) -> Complex64 {
        self.flows.iter().map(BranchFlow::losses).sum()
    }
}

/// Solves for bus voltages with the slack fixed at `1∠0`.
///
/// Always takes at least one Newton step; `iterations` counts steps.
pub fn solve_power_flow(
    net: &Network,
    tol: f64,
    max_iter: usize,
) -> Result<PowerFlowSolution, NetworkError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(NetworkError::InvalidValue(format!("tolerance {tol}")));
    }
    let n = net.bus_count();
    let slack = net.slack();
    let pq: Vec<usize> = (0..n).filter(|&k| k != slack).collect();
    let mut col = vec![usize::MAX; n];
    for (c, &k) in pq.iter().enumerate() {
        col[k] = c;
    }
    let p = pq.len();
    let spec: Vec<Complex64> = net
        .buses()
        .iter()
        .map(|b| b.scheduled_injection())
        .collect();

    let mut v = vec![Complex64::new(1.0, 0.0); n];
    let mismatch = |v: &[Complex64]| -> DVector<f64> {
        let mut f = DVector::zeros(2 * p);
        for (r, &k) in pq.iter().enumerate() {
            let d = bus_injection(net, v, k) - spec[k];
            f[r] = d.re;
            f[p + r] = d.im;
        }
        f
    };

    let mut f = mismatch(&v);
    let mut worst = f.amax();
    for it in 1..=max_iter {
        let mut jac = DMatrix::<f64>::zeros(2 * p, 2 * p);
        for (r, &k) in pq.iter().enumerate() {
            for part in bus_injection_partials(net, &v, k) {
                let c = col[part.bus];
                if c == usize::MAX {
                    continue;
                }
                jac[(r, c)] = part.d_vr.re;
                jac[(r, p + c)] = part.d_vx.re;
                jac[(p + r, c)] = part.d_vr.im;
                jac[(p + r, p + c)] = part.d_vx.im;
            }
        }
        let step = jac.lu().solve(&(-&f)).ok_or(NetworkError::NonConvergence {
            max_iter,
            mismatch: worst,
        })?;
        for (c, &k) in pq.iter().enumerate() {
            v[k] += Complex64::new(step[c], step[p + c]);
        }
        f = mismatch(&v);
        worst = f.amax();
        if !worst.is_finite() {
            break;
        }
        if worst <= tol {
            return Ok(finish(net, v, it, worst));
        }
    }
    Err(NetworkError::NonConvergence {
        max_iter,
        mismatch: worst,
    })
}

fn finish(
    net: &Network,
    v: Vec<Complex64>,
    iterations: usize,
    max_mismatch: f64,
) -> PowerFlowSolution {
    let flows = net
        .branches()
        .iter()
        .map(|b| BranchFlow {
            from: b.from,
            to: b.to,
            s_from: v[b.from] * (b.y * (v[b.from] - v[b.to])).conj(),
            s_to: v[b.to] * (b.y * (v[b.to] - v[b.from])).conj(),
        })
        .collect();
    let injections = (0..net.bus_count())
        .map(|k| bus_injection(net, &v, k))
        .collect();
    PowerFlowSolution {
        voltages: v,
        flows,
        injections,
        converged: true,
        iterations,
        max_mismatch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    fn two_bus(p_kw: f64, q_kvar: f64) -> Network {
        parse_network(&format!(
            r#"{{
            "base": {{"s_kva": 1000.0, "v_kv": 1.0}},
            "buses": [
                {{"id": "1", "kind": "slack"}},
                {{"id": "2", "kind": "pq", "p_load_kw": {p_kw}, "q_load_kvar": {q_kvar}}}
            ],
            "branches": [{{"from": "1", "to": "2", "r_ohm": 0.01, "x_ohm": 0.02}}]
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn flat_network_solves_in_one_step() {
        let net = two_bus(0.0, 0.0);
        let sol = solve_power_flow(&net, DEFAULT_PF_TOL, DEFAULT_PF_MAX_ITER).unwrap();
        assert_eq!(sol.iterations, 1);
        for v in &sol.voltages {
            assert_eq!(*v, Complex64::new(1.0, 0.0));
        }
        assert!(sol.flows.iter().all(|f| f.s_from.norm() == 0.0));
    }

    #[test]
    fn two_bus_matches_fixed_point_oracle() {
        let net = two_bus(100.0, 50.0);
        let sol = solve_power_flow(&net, DEFAULT_PF_TOL, DEFAULT_PF_MAX_ITER).unwrap();

        // V2 = 1 - z * conj(S_load / V2), iterated to a fixed point.
        let z = Complex64::new(0.01, 0.02);
        let load = Complex64::new(0.1, 0.05);
        let mut v2 = Complex64::new(1.0, 0.0);
        for _ in 0..200 {
            v2 = Complex64::new(1.0, 0.0) - z * (load / v2).conj();
        }
        assert!((sol.voltages[1] - v2).norm() < 1e-10);

        // Sending-end power equals the load plus I^2 Z losses.
        let i = (load / v2).conj();
        let expected = load + z * i.norm_sqr();
        let s12 = sol.branch_flow(&net, 0, 1).unwrap();
        assert!((s12 - expected).norm() < 1e-10);

        // A load-only leaf injects minus its load.
        let s2 = sol.bus_injection(&net, 1).unwrap();
        assert!((s2 + load).norm() < 1e-10);
    }

    #[test]
    fn infeasible_loading_fails() {
        let net = two_bus(50_000.0, 50_000.0);
        assert!(matches!(
            solve_power_flow(&net, DEFAULT_PF_TOL, 20),
            Err(NetworkError::NonConvergence { .. })
        ));
        assert!(solve_power_flow(&net, 0.0, 20).is_err());
    }
}
