//! Exact (non-linearized) branch-flow and injection functions in rectangular
//! coordinates, with their partial derivatives. Shared by the power-flow
//! solver and the WLS Jacobian.

use num_complex::Complex64;

use super::{Network, NetworkError};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Derivatives of a complex quantity `S` with respect to one bus voltage:
/// `d_vr = dS/dV_r`, `d_vx = dS/dV_x`. Real and imaginary parts give the
/// P and Q rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partial {
    pub bus: usize,
    pub d_vr: Complex64,
    pub d_vx: Complex64,
}

fn current_into_network(net: &Network, v: &[Complex64], k: usize) -> Complex64 {
    net.neighbours(k)
        .iter()
        .map(|&(l, b)| net.branches()[b].y * (v[k] - v[l]))
        .sum()
}

/// `S_ik = V_i [y_ik (V_i - V_k)]*`, power leaving bus `i` towards `k`.
pub fn branch_flow(
    net: &Network,
    v: &[Complex64],
    i: usize,
    k: usize,
) -> Result<Complex64, NetworkError> {
    let y = net.admittance(i, k)?;
    Ok(v[i] * (y * (v[i] - v[k])).conj())
}

/// `S_k = V_k [sum_l y_lk (V_k - V_l)]*`, positive when bus `k` injects
/// power into the network.
pub fn bus_injection(net: &Network, v: &[Complex64], k: usize) -> Complex64 {
    v[k] * current_into_network(net, v, k).conj()
}

pub fn branch_flow_partials(
    net: &Network,
    v: &[Complex64],
    i: usize,
    k: usize,
) -> Result<[Partial; 2], NetworkError> {
    let y = net.admittance(i, k)?;
    let ic = (y * (v[i] - v[k])).conj();
    let vyc = v[i] * y.conj();
    Ok([
        Partial {
            bus: i,
            d_vr: ic + vyc,
            d_vx: J * ic - J * vyc,
        },
        Partial {
            bus: k,
            d_vr: -vyc,
            d_vx: J * vyc,
        },
    ])
}

pub fn bus_injection_partials(net: &Network, v: &[Complex64], k: usize) -> Vec<Partial> {
    let ic = current_into_network(net, v, k).conj();
    let y_self: Complex64 = net
        .neighbours(k)
        .iter()
        .map(|&(_, b)| net.branches()[b].y)
        .sum();
    let vyc = v[k] * y_self.conj();
    let mut out = Vec::with_capacity(net.neighbours(k).len() + 1);
    out.push(Partial {
        bus: k,
        d_vr: ic + vyc,
        d_vx: J * ic - J * vyc,
    });
    for &(l, b) in net.neighbours(k) {
        // Y_kl = -y_kl
        let vyl = v[k] * (-net.branches()[b].y).conj();
        out.push(Partial {
            bus: l,
            d_vr: vyl,
            d_vx: -J * vyl,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    fn three_bus() -> Network {
        parse_network(
            r#"{
            "base": {"s_kva": 1000.0, "v_kv": 1.0},
            "buses": [
                {"id": "a", "kind": "slack"}, {"id": "b", "kind": "pq"}, {"id": "c", "kind": "pq"}
            ],
            "branches": [
                {"from": "a", "to": "b", "r_ohm": 0.01, "x_ohm": 0.02},
                {"from": "b", "to": "c", "r_ohm": 0.03, "x_ohm": 0.01}
            ]
        }"#,
        )
        .unwrap()
    }

    fn perturb(v: &[Complex64], bus: usize, d: Complex64) -> Vec<Complex64> {
        let mut w = v.to_vec();
        w[bus] += d;
        w
    }

    #[test]
    fn equal_voltages_carry_no_flow() {
        let net = three_bus();
        let v = vec![Complex64::new(0.98, -0.01); 3];
        assert_eq!(
            branch_flow(&net, &v, 0, 1).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert!(bus_injection(&net, &v, 1).norm() < 1e-15);
    }

    #[test]
    fn single_branch_hand_arithmetic() {
        let net = three_bus();
        let v = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.98, 0.0),
            Complex64::new(0.97, 0.0),
        ];
        // y = 20 - j40, I = y * 0.02 = 0.4 - j0.8, S = 1 * conj(I) = 0.4 + j0.8
        let s = branch_flow(&net, &v, 0, 1).unwrap();
        assert!((s - Complex64::new(0.4, 0.8)).norm() < 1e-12);
        assert!(branch_flow(&net, &v, 0, 2).is_err());
    }

    #[test]
    fn partials_match_central_differences() {
        let net = three_bus();
        let v = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.97, -0.02),
            Complex64::new(0.95, -0.03),
        ];
        let h = 1e-6;
        let check = |p: &Partial, f: &dyn Fn(&[Complex64]) -> Complex64| {
            let dr = (f(&perturb(&v, p.bus, Complex64::new(h, 0.0)))
                - f(&perturb(&v, p.bus, Complex64::new(-h, 0.0))))
                / (2.0 * h);
            let dx = (f(&perturb(&v, p.bus, Complex64::new(0.0, h)))
                - f(&perturb(&v, p.bus, Complex64::new(0.0, -h))))
                / (2.0 * h);
            assert!((dr - p.d_vr).norm() < 1e-6, "{dr} vs {}", p.d_vr);
            assert!((dx - p.d_vx).norm() < 1e-6, "{dx} vs {}", p.d_vx);
        };
        for p in branch_flow_partials(&net, &v, 1, 2).unwrap() {
            check(&p, &|w| branch_flow(&net, w, 1, 2).unwrap());
        }
        for p in bus_injection_partials(&net, &v, 1) {
            check(&p, &|w| bus_injection(&net, w, 1));
        }
    }
}
