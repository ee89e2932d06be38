//! Nonlinear weighted-least-squares estimation by Gauss-Newton.
//!
//! States are rectangular voltages of the non-slack buses; the slack is held at
//! `1∠0` and its columns are eliminated, so `n = 2·(N_bus − 1)`. Each step
//! solves `(HᵀWH) Δx = HᵀW (z − h(x))` by Cholesky. If a full step increases
//! the objective the step is halved until it does not.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::measurement::{MeasurementKind, MeasurementSet};
use crate::network::{
    branch_flow, branch_flow_partials, bus_injection, bus_injection_partials, Network, Partial,
    StateVector,
};

pub const DEFAULT_WLS_TOL: f64 = 1e-6;
pub const DEFAULT_WLS_MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WlsError {
    #[error("measurement references unknown element: {0}")]
    UnknownElement(String),
    #[error("gain matrix is singular (placement not observable)")]
    SingularGainMatrix,
    #[error("Gauss-Newton did not converge in {max_iter} iterations (last step {last_step:e})")]
    NonConvergence { max_iter: usize, last_step: f64 },
    #[error("{m} measurements cannot determine {n} states")]
    Underdetermined { m: usize, n: usize },
    #[error("state has {found} buses, network has {expected}")]
    StateLength { expected: usize, found: usize },
}

/// Everything Gauss-Newton needs: measurements, their weights `1/σ²` in the
/// same row order, and the starting state.
#[derive(Debug, Clone)]
pub struct WlsProblem<'a> {
    pub net: &'a Network,
    pub ms: &'a MeasurementSet,
    pub weights: Vec<f64>,
    pub x0: StateVector,
}

impl<'a> WlsProblem<'a> {
    /// Flat start with `W = R⁻¹` taken from the measurement σ.
    pub fn new(net: &'a Network, ms: &'a MeasurementSet) -> Self {
        WlsProblem {
            net,
            ms,
            weights: ms.iter().map(|m| 1.0 / (m.sigma * m.sigma)).collect(),
            x0: StateVector::flat(net.bus_count()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WlsResult {
    pub x_hat: StateVector,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    /// `‖Δx‖∞` of every accepted step.
    pub step_trace: Vec<f64>,
    /// Objective before the first step and after each accepted step.
    pub objective_trace: Vec<f64>,
    pub halvings: usize,
}

/// Column index of each bus's `V_r` among the states, `None` for the slack.
fn state_columns(net: &Network) -> Vec<Option<usize>> {
    let mut c = 0;
    (0..net.bus_count())
        .map(|k| {
            if k == net.slack() {
                None
            } else {
                c += 1;
                Some(c - 1)
            }
        })
        .collect()
}

fn check_len(net: &Network, x: &StateVector) -> Result<(), WlsError> {
    if x.len() != net.bus_count() {
        return Err(WlsError::StateLength {
            expected: net.bus_count(),
            found: x.len(),
        });
    }
    Ok(())
}

fn check_bus(net: &Network, k: usize) -> Result<(), WlsError> {
    if k >= net.bus_count() {
        return Err(WlsError::UnknownElement(format!("bus #{k}")));
    }
    Ok(())
}

fn flow(net: &Network, v: &[Complex64], from: usize, to: usize) -> Result<Complex64, WlsError> {
    check_bus(net, from)?;
    check_bus(net, to)?;
    branch_flow(net, v, from, to).map_err(|e| WlsError::UnknownElement(e.to_string()))
}

/// Exact measurement functions `h(x)`.
pub fn h_eval(
    net: &Network,
    x: &StateVector,
    kinds: &[MeasurementKind],
) -> Result<Vec<f64>, WlsError> {
    check_len(net, x)?;
    let v = x.voltages();
    kinds
        .iter()
        .map(|kind| {
            Ok(match *kind {
                MeasurementKind::Vmag { bus } => {
                    check_bus(net, bus)?;
                    v[bus].norm()
                }
                MeasurementKind::Pflow { from, to } => flow(net, &v, from, to)?.re,
                MeasurementKind::Qflow { from, to } => flow(net, &v, from, to)?.im,
                MeasurementKind::Pinj { bus } => {
                    check_bus(net, bus)?;
                    bus_injection(net, &v, bus).re
                }
                MeasurementKind::Qinj { bus } => {
                    check_bus(net, bus)?;
                    bus_injection(net, &v, bus).im
                }
            })
        })
        .collect()
}

/// Analytic `∂h/∂x`, `m × 2(N−1)`, columns `[V_r; V_x]` of non-slack buses.
pub fn jacobian(
    net: &Network,
    x: &StateVector,
    kinds: &[MeasurementKind],
) -> Result<DMatrix<f64>, WlsError> {
    check_len(net, x)?;
    let cols = state_columns(net);
    let p = net.bus_count() - 1;
    let v = x.voltages();
    let mut h = DMatrix::zeros(kinds.len(), 2 * p);
    let mut put = |row: usize, parts: &[Partial], imag: bool| {
        for part in parts {
            if let Some(c) = cols[part.bus] {
                let (dr, dx) = if imag {
                    (part.d_vr.im, part.d_vx.im)
                } else {
                    (part.d_vr.re, part.d_vx.re)
                };
                h[(row, c)] += dr;
                h[(row, p + c)] += dx;
            }
        }
    };
    for (row, kind) in kinds.iter().enumerate() {
        match *kind {
            MeasurementKind::Vmag { bus } => {
                check_bus(net, bus)?;
                let mag = v[bus].norm();
                let part = Partial {
                    bus,
                    d_vr: Complex64::new(v[bus].re / mag, 0.0),
                    d_vx: Complex64::new(v[bus].im / mag, 0.0),
                };
                put(row, &[part], false);
            }
            MeasurementKind::Pflow { from, to } | MeasurementKind::Qflow { from, to } => {
                check_bus(net, from)?;
                check_bus(net, to)?;
                let parts = branch_flow_partials(net, &v, from, to)
                    .map_err(|e| WlsError::UnknownElement(e.to_string()))?;
                put(row, &parts, matches!(kind, MeasurementKind::Qflow { .. }));
            }
            MeasurementKind::Pinj { bus } | MeasurementKind::Qinj { bus } => {
                check_bus(net, bus)?;
                let parts = bus_injection_partials(net, &v, bus);
                put(row, &parts, matches!(kind, MeasurementKind::Qinj { .. }));
            }
        }
    }
    Ok(h)
}

fn objective(residual: &DVector<f64>, weights: &[f64]) -> f64 {
    residual.iter().zip(weights).map(|(r, w)| w * r * r).sum()
}

fn apply_step(
    x: &StateVector,
    cols: &[Option<usize>],
    p: usize,
    dx: &DVector<f64>,
    scale: f64,
) -> StateVector {
    let mut out = x.clone();
    for (k, c) in cols.iter().enumerate() {
        if let Some(c) = *c {
            out.vr[k] += scale * dx[c];
            out.vx[k] += scale * dx[p + c];
        }
    }
    out
}

pub fn gauss_newton(
    problem: &WlsProblem<'_>,
    tol: f64,
    max_iter: usize,
) -> Result<WlsResult, WlsError> {
    let net = problem.net;
    let kinds: Vec<MeasurementKind> = problem.ms.iter().map(|m| m.kind).collect();
    let z = DVector::from_iterator(kinds.len(), problem.ms.iter().map(|m| m.noisy_value));
    let p = net.bus_count() - 1;
    if kinds.len() < 2 * p {
        return Err(WlsError::Underdetermined {
            m: kinds.len(),
            n: 2 * p,
        });
    }
    let sqrt_w = DVector::from_iterator(kinds.len(), problem.weights.iter().map(|w| w.sqrt()));
    let cols = state_columns(net);

    let mut x = problem.x0.clone();
    x.vr[net.slack()] = 1.0;
    x.vx[net.slack()] = 0.0;
    let residual = |x: &StateVector| -> Result<DVector<f64>, WlsError> {
        Ok(&z - DVector::from_vec(h_eval(net, x, &kinds)?))
    };
    let mut r = residual(&x)?;
    let mut j = objective(&r, &problem.weights);
    let mut step_trace = Vec::new();
    let mut objective_trace = vec![j];
    let mut halvings = 0;

    for it in 1..=max_iter {
        let mut hs = jacobian(net, &x, &kinds)?;
        for (mut row, w) in hs.row_iter_mut().zip(sqrt_w.iter()) {
            row *= *w;
        }
        let rs = r.component_mul(&sqrt_w);
        let gain = hs.tr_mul(&hs);
        let rhs = hs.tr_mul(&rs);
        let dx = gain
            .cholesky()
            .ok_or(WlsError::SingularGainMatrix)?
            .solve(&rhs);

        let mut scale = 1.0;
        let (x_new, r_new, j_new) = loop {
            let cand = apply_step(&x, &cols, p, &dx, scale);
            let rc = residual(&cand)?;
            let jc = objective(&rc, &problem.weights);
            if jc <= j * (1.0 + 1e-12) + f64::MIN_POSITIVE || halvings_exhausted(scale) {
                break (cand, rc, jc);
            }
            scale *= 0.5;
            halvings += 1;
        };
        let step = scale * dx.amax();
        x = x_new;
        r = r_new;
        j = j_new;
        step_trace.push(step);
        objective_trace.push(j);
        if step < tol {
            return Ok(WlsResult {
                x_hat: x,
                iterations: it,
                converged: true,
                objective: j,
                step_trace,
                objective_trace,
                halvings,
            });
        }
    }
    Err(WlsError::NonConvergence {
        max_iter,
        last_step: step_trace.last().copied().unwrap_or(f64::NAN),
    })
}

fn halvings_exhausted(scale: f64) -> bool {
    scale < 0.5f64.powi(MAX_HALVINGS as i32)
}

/// `Hᵀ W (z − h(x))` at `x`; zero at a stationary point.
pub fn gradient(problem: &WlsProblem<'_>, x: &StateVector) -> Result<DVector<f64>, WlsError> {
    let kinds: Vec<MeasurementKind> = problem.ms.iter().map(|m| m.kind).collect();
    let h = jacobian(problem.net, x, &kinds)?;
    let hx = h_eval(problem.net, x, &kinds)?;
    let wr = DVector::from_iterator(
        kinds.len(),
        problem
            .ms
            .iter()
            .zip(&hx)
            .zip(&problem.weights)
            .map(|((m, h), w)| w * (m.noisy_value - h)),
    );
    Ok(h.tr_mul(&wr))
}
