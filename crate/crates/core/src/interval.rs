//! Closed real intervals with Moore arithmetic, plus dense interval vectors
//! and matrices.
//!
//! Endpoints are computed with round-to-nearest. There is no directed rounding,
//! so enclosures are exact only up to double-precision rounding; at the
//! tolerances used by the estimators (1e-4 stop rule, errors around 1e-3) this
//! is far below anything observable. Division is not provided.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("invalid interval bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("empty intersection of [{a_lo}, {a_hi}] and [{b_lo}, {b_hi}]")]
    EmptyIntersection {
        a_lo: f64,
        a_hi: f64,
        b_lo: f64,
        b_hi: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
}

fn mismatch(expected: impl fmt::Display, found: impl fmt::Display) -> IntervalError {
    IntervalError::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl TryFrom<(f64, f64)> for Interval {
    type Error = IntervalError;

    fn try_from((lo, hi): (f64, f64)) -> Result<Self, Self::Error> {
        Interval::new(lo, hi)
    }
}

impl From<Interval> for (f64, f64) {
    fn from(iv: Interval) -> Self {
        (iv.lo, iv.hi)
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    /// Rejects `lo > hi` and NaN endpoints.
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(IntervalError::InvalidBounds { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// `[mid - rad, mid + rad]`; `rad` must be non-negative.
    pub fn centered(mid: f64, rad: f64) -> Result<Self, IntervalError> {
        Interval::new(mid - rad, mid + rad)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn rad(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Magnitude `max(|lo|, |hi|)`.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Result<Interval, IntervalError> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            return Err(IntervalError::EmptyIntersection {
                a_lo: self.lo,
                a_hi: self.hi,
                b_lo: other.lo,
                b_hi: other.hi,
            });
        }
        Ok(Interval { lo, hi })
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Hausdorff distance `max(|a.lo - b.lo|, |a.hi - b.hi|)`.
    pub fn distance(&self, other: &Interval) -> f64 {
        (self.lo - other.lo).abs().max((self.hi - other.hi).abs())
    }

    /// Point multiple `c * self`.
    pub fn scale(&self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval {
                lo: c * self.lo,
                hi: c * self.hi,
            }
        } else {
            Interval {
                lo: c * self.hi,
                hi: c * self.lo,
            }
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;

    fn sub(self, rhs: Interval) -> Interval {
        self + (-rhs)
    }
}

impl Mul for Interval {
    type Output = Interval;

    fn mul(self, rhs: Interval) -> Interval {
        let (a, b, c, d) = (
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        );
        Interval {
            lo: a.min(b).min(c.min(d)),
            hi: a.max(b).max(c.max(d)),
        }
    }
}

/// Fixed-length vector of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    elems: Vec<Interval>,
}

impl IntervalVector {
    pub fn new(elems: Vec<Interval>) -> Self {
        IntervalVector { elems }
    }

    pub fn from_points(values: &[f64]) -> Self {
        IntervalVector {
            elems: values.iter().copied().map(Interval::point).collect(),
        }
    }

    /// Every component equal to `[-alpha, alpha]`.
    pub fn symmetric_box(len: usize, alpha: f64) -> Result<Self, IntervalError> {
        let iv = Interval::new(-alpha, alpha)?;
        Ok(IntervalVector {
            elems: vec![iv; len],
        })
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn as_slice(&self) -> &[Interval] {
        &self.elems
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.elems.iter()
    }

    pub fn into_inner(self) -> Vec<Interval> {
        self.elems
    }

    pub fn mid(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.elems.iter().map(Interval::mid))
    }

    pub fn rad(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.elems.iter().map(Interval::rad))
    }

    /// `max_i max(|lo_i|, |hi_i|)`.
    pub fn inf_norm(&self) -> f64 {
        self.elems.iter().map(Interval::mag).fold(0.0, f64::max)
    }

    /// Largest componentwise Hausdorff distance.
    pub fn distance(&self, other: &IntervalVector) -> Result<f64, IntervalError> {
        self.check_len(other)?;
        Ok(self
            .elems
            .iter()
            .zip(&other.elems)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max))
    }

    pub fn intersect(&self, other: &IntervalVector) -> Result<IntervalVector, IntervalError> {
        self.check_len(other)?;
        let elems = self
            .elems
            .iter()
            .zip(&other.elems)
            .map(|(a, b)| a.intersect(b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntervalVector { elems })
    }

    pub fn is_subset_of(&self, other: &IntervalVector) -> bool {
        self.len() == other.len()
            && self
                .elems
                .iter()
                .zip(&other.elems)
                .all(|(a, b)| a.is_subset_of(b))
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.len() == x.len() && self.elems.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    fn check_len(&self, other: &IntervalVector) -> Result<(), IntervalError> {
        if self.len() != other.len() {
            return Err(mismatch(self.len(), other.len()));
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for IntervalVector {
    type Output = Interval;

    fn index(&self, i: usize) -> &Interval {
        &self.elems[i]
    }
}

impl FromIterator<Interval> for IntervalVector {
    fn from_iter<I: IntoIterator<Item = Interval>>(iter: I) -> Self {
        IntervalVector {
            elems: iter.into_iter().collect(),
        }
    }
}

/// Dense row-major interval matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Interval>) -> Result<Self, IntervalError> {
        if rows == 0 || cols == 0 {
            return Err(mismatch("positive dimensions", format!("{rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(mismatch(rows * cols, entries.len()));
        }
        Ok(IntervalMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntervalMatrix {
            rows,
            cols,
            entries: vec![Interval::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntervalMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Interval::point(1.0));
        }
        m
    }

    pub fn from_point(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut out = IntervalMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.set(i, j, Interval::point(m[(i, j)]));
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Interval) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Interval] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mid(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mid())
    }

    pub fn rad(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).rad())
    }

    pub fn transpose(&self) -> IntervalMatrix {
        let mut out = IntervalMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn is_subset_of(&self, other: &IntervalMatrix) -> bool {
        self.shape() == other.shape()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.is_subset_of(b))
    }

    /// Maximum row sum of entry magnitudes.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(Interval::mag).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, v: &IntervalVector) -> Result<IntervalVector, IntervalError> {
        if v.len() != self.cols {
            return Err(mismatch(self.cols, v.len()));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.iter())
                    .fold(Interval::ZERO, |acc, (&a, &x)| acc + a * x)
            })
            .collect())
    }

    pub fn matmul(&self, other: &IntervalMatrix) -> Result<IntervalMatrix, IntervalError> {
        if self.cols != other.rows {
            return Err(mismatch(
                format!("{} rows", self.cols),
                format!("{} rows", other.rows),
            ));
        }
        let mut out = IntervalMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Interval::ZERO;
                for k in 0..self.cols {
                    acc = acc + self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// `c * self` for a point matrix `c`, skipping zero entries of `self`.
    ///
    /// Accumulates in midpoint-radius form, `c·[m ± r] = c·m ± |c|·r`, which
    /// for a point factor is the same set `matmul` produces with `c` promoted
    /// to degenerate intervals.
    pub fn left_mul_point(&self, c: &DMatrix<f64>) -> Result<IntervalMatrix, IntervalError> {
        if c.ncols() != self.rows {
            return Err(mismatch(
                format!("{} columns", self.rows),
                format!("{} columns", c.ncols()),
            ));
        }
        let n = c.nrows();
        let cs = c.as_slice();
        // column-major n × cols accumulators
        let mut mid = vec![0.0; n * self.cols];
        let mut rad = vec![0.0; n * self.cols];
        for k in 0..self.rows {
            let ck = &cs[k * n..(k + 1) * n];
            for (j, e) in self.row(k).iter().enumerate() {
                if *e == Interval::ZERO {
                    continue;
                }
                let (em, er) = (e.mid(), e.rad());
                for (d, &cv) in mid[j * n..(j + 1) * n].iter_mut().zip(ck) {
                    *d += cv * em;
                }
                if er > 0.0 {
                    for (d, &cv) in rad[j * n..(j + 1) * n].iter_mut().zip(ck) {
                        *d += cv.abs() * er;
                    }
                }
            }
        }
        let mut entries = Vec::with_capacity(n * self.cols);
        for i in 0..n {
            for j in 0..self.cols {
                let (m, r) = (mid[j * n + i], rad[j * n + i]);
                entries.push(Interval {
                    lo: m - r,
                    hi: m + r,
                });
            }
        }
        Ok(IntervalMatrix {
            rows: n,
            cols: self.cols,
            entries,
        })
    }

    /// `I - self` for a square matrix.
    pub fn identity_minus(&self) -> Result<IntervalMatrix, IntervalError> {
        if self.rows != self.cols {
            return Err(mismatch(
                "square matrix",
                format!("{}x{}", self.rows, self.cols),
            ));
        }
        let mut out = self.clone();
        for e in out.entries.iter_mut() {
            *e = -*e;
        }
        for i in 0..self.rows {
            let d = out.get(i, i);
            out.set(i, i, Interval::point(1.0) + d);
        }
        Ok(out)
    }
}

/// Point matrix times interval vector, `sum_k c_ik [v_k]` per row.
pub fn point_matvec(c: &DMatrix<f64>, v: &IntervalVector) -> Result<IntervalVector, IntervalError> {
    if c.ncols() != v.len() {
        return Err(mismatch(c.ncols(), v.len()));
    }
    Ok((0..c.nrows())
        .map(|i| {
            v.iter()
                .enumerate()
                .fold(Interval::ZERO, |acc, (k, x)| acc + x.scale(c[(i, k)]))
        })
        .collect())
}
