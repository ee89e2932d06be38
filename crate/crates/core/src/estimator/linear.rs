//! Linearized measurement model `BV + DV* = E`, its rectangular real form
//! `Ax = b`, and the ±3σ interval relaxation.
//!
//! With `1/V ≈ 2 − V` a flow `S_ik = V_i [y (V_i − V_k)]*` becomes
//! `S_ik V_i + y* V_i* − y* V_k* = 2 S_ik`, and an injection
//! `S_k = V_k [Σ y_lk (V_k − V_l)]*` becomes
//! `S_k V_k + (Σ y_lk*) V_k* − Σ y_lk* V_l* = 2 S_k`.
//! Both are linear in `V` once the measured `S` is plugged in.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::EstimatorError;
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::measurement::{MeasurementKind, MeasurementSet};
use crate::network::{Network, StateVector};

/// Interval half-width in units of σ.
pub const SIGMA_MULTIPLE: f64 = 3.0;

/// `2 − V`, the first-order expansion of `1/V` about `1`.
pub fn linearize_reciprocal(v: Complex64) -> Complex64 {
    Complex64::new(2.0, 0.0) - v
}

/// `|1/V − (2 − V)|`.
pub fn reciprocal_error(v: Complex64) -> f64 {
    (v.inv() - linearize_reciprocal(v)).norm()
}

/// Tail bound `|ΔV|² / (1 − |ΔV|)` with `ΔV = V − 1`, valid for `|ΔV| < 1`.
pub fn reciprocal_error_bound(v: Complex64) -> f64 {
    let d = (v - 1.0).norm();
    d * d / (1.0 - d)
}

/// Where a complex row came from: indices into the measurement set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSource {
    Flow {
        from: usize,
        to: usize,
        p: usize,
        q: usize,
    },
    Injection {
        bus: usize,
        p: usize,
        q: usize,
    },
}

impl RowSource {
    fn pq(&self) -> (usize, usize) {
        match *self {
            RowSource::Flow { p, q, .. } | RowSource::Injection { p, q, .. } => (p, q),
        }
    }

    /// Bus whose `V` coefficient carries the measured `S`.
    pub fn measured_bus(&self) -> usize {
        match *self {
            RowSource::Flow { from, .. } => from,
            RowSource::Injection { bus, .. } => bus,
        }
    }
}

/// `Σ b_k V_k + Σ d_k V_k* = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRow {
    pub b_coeffs: Vec<(usize, Complex64)>,
    pub d_coeffs: Vec<(usize, Complex64)>,
    pub rhs: Complex64,
    pub source: RowSource,
}

impl ComplexRow {
    /// `Σ b V + Σ d V* − rhs`.
    pub fn residual(&self, v: &[Complex64]) -> Complex64 {
        let bv: Complex64 = self.b_coeffs.iter().map(|&(k, c)| c * v[k]).sum();
        let dv: Complex64 = self.d_coeffs.iter().map(|&(k, c)| c * v[k].conj()).sum();
        bv + dv - self.rhs
    }
}

/// `V_{bus,r} = value`, the small-angle reading of a magnitude measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeRow {
    pub bus: usize,
    pub value: f64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub complex_rows: Vec<ComplexRow>,
    pub magnitude_rows: Vec<MagnitudeRow>,
    pub bus_count: usize,
    pub slack: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Location {
    Flow(usize, usize),
    Injection(usize),
}

fn unknown(what: String) -> EstimatorError {
    EstimatorError::UnknownElement(what)
}

/// Pairs P with Q at each location and writes one complex row per pair, in
/// order of first appearance.
pub fn build_linear_model(
    net: &Network,
    ms: &MeasurementSet,
) -> Result<LinearModel, EstimatorError> {
    let n = net.bus_count();
    let check = |k: usize| {
        if k < n {
            Ok(())
        } else {
            Err(unknown(format!("bus #{k}")))
        }
    };
    let mut order: Vec<Location> = Vec::new();
    let mut pairs: HashMap<Location, (Option<usize>, Option<usize>)> = HashMap::new();
    let mut magnitude_rows = Vec::new();
    for (idx, m) in ms.iter().enumerate() {
        let (loc, is_p) = match m.kind {
            MeasurementKind::Vmag { bus } => {
                check(bus)?;
                magnitude_rows.push(MagnitudeRow {
                    bus,
                    value: m.noisy_value,
                    index: idx,
                });
                continue;
            }
            MeasurementKind::Pflow { from, to } => (Location::Flow(from, to), true),
            MeasurementKind::Qflow { from, to } => (Location::Flow(from, to), false),
            MeasurementKind::Pinj { bus } => (Location::Injection(bus), true),
            MeasurementKind::Qinj { bus } => (Location::Injection(bus), false),
        };
        let slot = pairs.entry(loc).or_insert_with(|| {
            order.push(loc);
            (None, None)
        });
        let target = if is_p { &mut slot.0 } else { &mut slot.1 };
        if target.is_some() {
            return Err(EstimatorError::UnpairedPQ(format!(
                "duplicate measurement #{idx}"
            )));
        }
        *target = Some(idx);
    }

    let value = |i: usize| ms.measurements[i].noisy_value;
    let mut complex_rows = Vec::with_capacity(order.len());
    for loc in order {
        let (p, q) = match pairs[&loc] {
            (Some(p), Some(q)) => (p, q),
            (Some(i), None) | (None, Some(i)) => {
                return Err(EstimatorError::UnpairedPQ(format!(
                    "measurement #{i} has no matching active/reactive partner"
                )))
            }
            (None, None) => unreachable!(),
        };
        let s = Complex64::new(value(p), value(q));
        let row = match loc {
            Location::Flow(i, k) => {
                check(i)?;
                check(k)?;
                let y = net
                    .admittance(i, k)
                    .map_err(|e| unknown(e.to_string()))?
                    .conj();
                ComplexRow {
                    b_coeffs: vec![(i, s)],
                    d_coeffs: vec![(i, y), (k, -y)],
                    rhs: 2.0 * s,
                    source: RowSource::Flow {
                        from: i,
                        to: k,
                        p,
                        q,
                    },
                }
            }
            Location::Injection(k) => {
                check(k)?;
                let mut d = Vec::with_capacity(net.neighbours(k).len() + 1);
                let mut y_self = Complex64::new(0.0, 0.0);
                for &(l, b) in net.neighbours(k) {
                    let y = net.branches()[b].y.conj();
                    y_self += y;
                    d.push((l, -y));
                }
                d.insert(0, (k, y_self));
                ComplexRow {
                    b_coeffs: vec![(k, s)],
                    d_coeffs: d,
                    rhs: 2.0 * s,
                    source: RowSource::Injection { bus: k, p, q },
                }
            }
        };
        complex_rows.push(row);
    }
    Ok(LinearModel {
        complex_rows,
        magnitude_rows,
        bus_count: n,
        slack: net.slack(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Real,
    Imag,
}

/// What one real row means and which σ feed its intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowProvenance {
    Power {
        source: RowSource,
        part: Part,
        sigma_p: f64,
        sigma_q: f64,
    },
    Magnitude {
        bus: usize,
        sigma: f64,
    },
    Slack {
        part: Part,
    },
}

/// Thin QR of a tall matrix, `A = QR` with `Q` m×n and `R` n×n.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinQr {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl ThinQr {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let qr = a.clone().qr();
        ThinQr {
            q: qr.q(),
            r: qr.r(),
        }
    }

    /// Count of `|R_ii|` above `max |R_ii| · ε · max(m, n)`.
    pub fn rank(&self) -> usize {
        let d = self.r.diagonal();
        let max = d.amax();
        let tol = max * f64::EPSILON * self.q.nrows().max(self.q.ncols()) as f64;
        d.iter().filter(|v| v.abs() > tol).count()
    }
}

/// `A x = b` with `x = [V_r; V_x]` over all buses, slack included.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub provenance: Vec<RowProvenance>,
    pub bus_count: usize,
    /// Set by [`to_rectangular`], which needs it for the rank check.
    pub factor: Option<ThinQr>,
}

impl RealSystem {
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn residual(&self, x: &StateVector) -> DVector<f64> {
        &self.a * DVector::from_vec(x.stacked()) - &self.b
    }
}

/// Stacks complex rows into real/imaginary rows, then magnitude rows, then
/// the two exact slack rows.
pub fn to_rectangular(
    model: &LinearModel,
    ms: &MeasurementSet,
) -> Result<RealSystem, EstimatorError> {
    let mut sys = stack(model, ms);
    if sys.rows() < sys.cols() {
        return Err(EstimatorError::RankDeficient {
            rank: sys.rows(),
            n: sys.cols(),
        });
    }
    let factor = ThinQr::new(&sys.a);
    let rank = factor.rank();
    if rank < sys.cols() {
        return Err(EstimatorError::RankDeficient {
            rank,
            n: sys.cols(),
        });
    }
    sys.factor = Some(factor);
    Ok(sys)
}

fn stack(model: &LinearModel, ms: &MeasurementSet) -> RealSystem {
    let n = model.bus_count;
    let m = 2 * model.complex_rows.len() + model.magnitude_rows.len() + 2;
    let mut a = DMatrix::zeros(m, 2 * n);
    let mut b = DVector::zeros(m);
    let mut provenance = Vec::with_capacity(m);
    let sigma = |i: usize| ms.measurements[i].sigma;
    let mut r = 0;
    for row in &model.complex_rows {
        for &(k, c) in &row.b_coeffs {
            a[(r, k)] += c.re;
            a[(r, n + k)] -= c.im;
            a[(r + 1, k)] += c.im;
            a[(r + 1, n + k)] += c.re;
        }
        for &(k, c) in &row.d_coeffs {
            a[(r, k)] += c.re;
            a[(r, n + k)] += c.im;
            a[(r + 1, k)] += c.im;
            a[(r + 1, n + k)] -= c.re;
        }
        b[r] = row.rhs.re;
        b[r + 1] = row.rhs.im;
        let (p, q) = row.source.pq();
        for part in [Part::Real, Part::Imag] {
            provenance.push(RowProvenance::Power {
                source: row.source,
                part,
                sigma_p: sigma(p),
                sigma_q: sigma(q),
            });
        }
        r += 2;
    }
    for mag in &model.magnitude_rows {
        a[(r, mag.bus)] = 1.0;
        b[r] = mag.value;
        provenance.push(RowProvenance::Magnitude {
            bus: mag.bus,
            sigma: sigma(mag.index),
        });
        r += 1;
    }
    a[(r, model.slack)] = 1.0;
    b[r] = 1.0;
    provenance.push(RowProvenance::Slack { part: Part::Real });
    a[(r + 1, n + model.slack)] = 1.0;
    provenance.push(RowProvenance::Slack { part: Part::Imag });
    RealSystem {
        a,
        b,
        provenance,
        bus_count: n,
        factor: None,
    }
}

/// Interval counterpart of [`RealSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSystem {
    pub a: IntervalMatrix,
    pub b: IntervalVector,
    /// QR of the point system the intervals were centred on.
    pub factor: Option<ThinQr>,
}

fn widen(c: f64, r: f64) -> Interval {
    // r ≥ 0 by construction
    Interval::centered(c, r).expect("nonnegative radius")
}

/// Replaces each measured value by `[v − 3σ, v + 3σ]` wherever it appears.
///
/// In the real-part row of a power pair, `P` sits on the `V_r` coefficient of
/// the metered bus and `−Q` on its `V_x` coefficient; in the imaginary-part
/// row `Q` sits on `V_r` and `P` on `V_x`. The rhs is `2P` or `2Q`.
pub fn relax_to_intervals(sys: &RealSystem) -> IntervalSystem {
    let (m, cols) = sys.a.shape();
    let n = sys.bus_count;
    let mut a = IntervalMatrix::from_point(&sys.a);
    let mut b = Vec::with_capacity(m);
    let k = SIGMA_MULTIPLE;
    for (r, prov) in sys.provenance.iter().enumerate() {
        let rhs = sys.b[r];
        match *prov {
            RowProvenance::Power {
                source,
                part,
                sigma_p,
                sigma_q,
            } => {
                let bus = source.measured_bus();
                let (on_r, on_x, on_rhs) = match part {
                    Part::Real => (sigma_p, sigma_q, sigma_p),
                    Part::Imag => (sigma_q, sigma_p, sigma_q),
                };
                a.set(r, bus, widen(sys.a[(r, bus)], k * on_r));
                a.set(r, n + bus, widen(sys.a[(r, n + bus)], k * on_x));
                b.push(widen(rhs, 2.0 * k * on_rhs));
            }
            RowProvenance::Magnitude { sigma, .. } => b.push(widen(rhs, k * sigma)),
            RowProvenance::Slack { .. } => b.push(Interval::point(rhs)),
        }
    }
    debug_assert_eq!(a.cols(), cols);
    IntervalSystem {
        a,
        b: IntervalVector::new(b),
        factor: sys.factor.clone(),
    }
}
