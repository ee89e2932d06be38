//! Augmented square system and the Krawczyk iteration.
//!
//! The overdetermined `[A] x = [b]` is embedded in the square system
//!
//! ```text
//! [ A  −I ] [x]   [b]
//! [ 0  Aᵀ ] [y] = [0]
//! ```
//!
//! At the midpoint the second block says `Aᵀ(Ax − b) = 0`, i.e. `x` is the
//! least-squares solution and `y = Ax − b` its residual.

use nalgebra::{DMatrix, DVector};

use super::linear::{IntervalSystem, ThinQr};
use super::EstimatorError;
use crate::interval::{point_matvec, Interval, IntervalError, IntervalMatrix, IntervalVector};

pub const DEFAULT_EPS: f64 = 1e-4;
pub const DEFAULT_ITERATION_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    pub script_a: IntervalMatrix,
    pub script_b: IntervalVector,
    /// Rows of the original system.
    pub m: usize,
    /// Unknowns of the original system.
    pub n: usize,
    /// QR of the original point matrix, reused by the block preconditioner.
    pub factor: Option<ThinQr>,
}

pub fn augment(ivs: &IntervalSystem) -> AugmentedSystem {
    let (m, n) = ivs.a.shape();
    let size = m + n;
    let mut a = IntervalMatrix::zeros(size, size);
    for i in 0..m {
        for j in 0..n {
            let v = ivs.a.get(i, j);
            a.set(i, j, v);
            a.set(m + j, n + i, v);
        }
        a.set(i, n + i, Interval::point(-1.0));
    }
    let mut b = ivs.b.as_slice().to_vec();
    b.resize(size, Interval::ZERO);
    AugmentedSystem {
        script_a: a,
        script_b: IntervalVector::new(b),
        m,
        n,
        factor: ivs.factor.clone(),
    }
}

/// `I − C·𝒜`, either as a full interval matrix or in factored form.
#[derive(Debug, Clone)]
pub enum ResidualOperator {
    /// Evaluated entrywise in interval arithmetic.
    Dense(IntervalMatrix),
    /// `I − C𝒜 ⊆ E + [−|C|R, |C|R]` with `R = rad(𝒜)` and the point
    /// residual `E = I − C·Mid(𝒜)`. Applied as `±(|C|(R|X|) + e‖X‖∞)` where
    /// `e` holds the row sums of `|E|`.
    Factored {
        abs_c: DMatrix<f64>,
        /// Nonzero entries `(row, col, r)` of `R`.
        radius: Vec<(usize, usize, f64)>,
        e_rows: DVector<f64>,
    },
}

impl ResidualOperator {
    pub fn apply(&self, x: &IntervalVector) -> Result<IntervalVector, EstimatorError> {
        match self {
            ResidualOperator::Dense(k) => Ok(k.matvec(x)?),
            ResidualOperator::Factored {
                abs_c,
                radius,
                e_rows,
            } => {
                if x.len() != abs_c.ncols() {
                    return Err(IntervalError::DimensionMismatch {
                        expected: abs_c.ncols().to_string(),
                        found: x.len().to_string(),
                    }
                    .into());
                }
                let mut v = DVector::zeros(abs_c.ncols());
                for &(k, j, r) in radius {
                    v[k] += r * x[j].mag();
                }
                let mut w = abs_c * v;
                w.axpy(x.iter().map(Interval::mag).fold(0.0, f64::max), e_rows, 1.0);
                Ok(w.iter()
                    .map(|&w| Interval::centered(0.0, w).expect("w ≥ 0"))
                    .collect())
            }
        }
    }
}

/// Preconditioner and starting box.
#[derive(Debug, Clone)]
pub struct KrawczykInit {
    pub c: DMatrix<f64>,
    pub x0: IntervalVector,
    pub beta: f64,
    pub alpha: f64,
    /// `I − C·𝒜`
    pub operator: ResidualOperator,
    /// `C·𝒝`
    pub cb: IntervalVector,
}

fn start_box(
    c: DMatrix<f64>,
    operator: ResidualOperator,
    beta: f64,
    cb: IntervalVector,
) -> Result<KrawczykInit, EstimatorError> {
    if beta.is_nan() || beta >= 1.0 {
        return Err(EstimatorError::ContractionFailure { beta });
    }
    let alpha = cb.inf_norm() / (1.0 - beta);
    let x0 = IntervalVector::symmetric_box(cb.len(), alpha)?;
    Ok(KrawczykInit {
        c,
        x0,
        beta,
        alpha,
        operator,
        cb,
    })
}

/// `C = Mid(𝒜)⁻¹` by dense LU of the full augmented midpoint; `I − C𝒜` is
/// formed entrywise.
pub fn krawczyk_init(aug: &AugmentedSystem) -> Result<KrawczykInit, EstimatorError> {
    let c = aug
        .script_a
        .mid()
        .try_inverse()
        .ok_or(EstimatorError::SingularMidpoint)?;
    let k = aug.script_a.left_mul_point(&c)?.identity_minus()?;
    let beta = k.inf_norm();
    let cb = point_matvec(&c, &aug.script_b)?;
    start_box(c, ResidualOperator::Dense(k), beta, cb)
}

/// Same `C`, assembled blockwise from a thin QR of `Mid(A)`:
///
/// ```text
/// C = [ A⁺        (AᵀA)⁻¹ ]
///     [ AA⁺ − I   (A⁺)ᵀ   ]
/// ```
///
/// with `A⁺ = R⁻¹Qᵀ` and `(AᵀA)⁻¹ = A⁺A⁺ᵀ`. Uses the QR carried by `aug` when
/// there is one. `I − C𝒜` is kept in factored form.
pub fn krawczyk_init_structured(aug: &AugmentedSystem) -> Result<KrawczykInit, EstimatorError> {
    let (m, n) = (aug.m, aug.n);
    let size = m + n;
    // Only the A block is read; the rest follows from the layout of `augment`.
    let mut a_nz = Vec::new();
    let mut radius = Vec::new();
    let mut row_rad = DVector::zeros(size);
    for i in 0..m {
        for (j, e) in aug.script_a.row(i)[..n].iter().enumerate() {
            if *e == Interval::ZERO {
                continue;
            }
            let (c, r) = (e.mid(), e.rad());
            if c != 0.0 {
                a_nz.push((i, j, c));
            }
            if r > 0.0 {
                radius.push((i, j, r));
                radius.push((m + j, n + i, r));
                row_rad[i] += r;
                row_rad[m + j] += r;
            }
        }
    }
    let computed;
    let factor = match &aug.factor {
        Some(f) => f,
        None => {
            let mut a_mid = DMatrix::zeros(m, n);
            for &(i, j, a) in &a_nz {
                a_mid[(i, j)] = a;
            }
            computed = ThinQr::new(&a_mid);
            &computed
        }
    };
    if factor.rank() < n {
        return Err(EstimatorError::SingularMidpoint);
    }
    // Z = A⁺ᵀ from Z Rᵀ = Q, one column at a time
    let r = &factor.r;
    let mut z = factor.q.clone();
    for j in (0..n).rev() {
        let (head, tail) = z.as_mut_slice().split_at_mut((j + 1) * m);
        let zj = &mut head[j * m..];
        for k in j + 1..n {
            let rjk = r[(j, k)];
            if rjk != 0.0 {
                let zk = &tail[(k - j - 1) * m..(k - j) * m];
                zj.iter_mut().zip(zk).for_each(|(a, b)| *a -= rjk * b);
            }
        }
        let d = r[(j, j)];
        zj.iter_mut().for_each(|a| *a /= d);
    }
    let gram_inv = z.transpose() * &z;
    // (AA⁺ − I)ᵀ through the sparse A
    let mut proj_t = DMatrix::<f64>::zeros(m, m);
    for &(i, k, a) in &a_nz {
        proj_t.column_mut(i).axpy(a, &z.column(k), 1.0);
    }
    for i in 0..m {
        proj_t[(i, i)] -= 1.0;
    }
    let mut c = DMatrix::zeros(size, size);
    c.view_mut((0, 0), (n, m)).tr_copy_from(&z);
    c.view_mut((0, m), (n, n)).copy_from(&gram_inv);
    c.view_mut((n, 0), (m, m)).tr_copy_from(&proj_t);
    c.view_mut((n, m), (m, n)).copy_from(&z);

    // row sums of |I − C·Mid(𝒜)|
    let mut cm = DMatrix::<f64>::zeros(size, size);
    for &(i, j, a) in &a_nz {
        cm.column_mut(j).axpy(a, &c.column(i), 1.0);
        cm.column_mut(n + i).axpy(a, &c.column(m + j), 1.0);
    }
    for i in 0..m {
        cm.column_mut(n + i).axpy(-1.0, &c.column(i), 1.0);
    }
    let mut e_rows = DVector::<f64>::zeros(size);
    for (j, col) in cm.column_iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            e_rows[i] += if i == j { (1.0 - v).abs() } else { v.abs() };
        }
    }

    let abs_c = c.abs();
    let beta = (&abs_c * row_rad + &e_rows).max();
    let b_mid = aug.script_b.mid();
    let b_rad = aug.script_b.rad();
    let cb_mid = &c * b_mid;
    let cb_rad = &abs_c * b_rad;
    let cb = cb_mid
        .iter()
        .zip(cb_rad.iter())
        .map(|(&m, &r)| Interval::centered(m, r).expect("r ≥ 0"))
        .collect();
    let operator = ResidualOperator::Factored {
        abs_c,
        radius,
        e_rows,
    };
    start_box(c, operator, beta, cb)
}

/// `K(X) = (C𝒝 + (I − C𝒜) X) ∩ X`.
pub fn krawczyk_step(
    init: &KrawczykInit,
    x: &IntervalVector,
) -> Result<IntervalVector, EstimatorError> {
    let image = init.operator.apply(x)?;
    let image: IntervalVector = init
        .cb
        .iter()
        .zip(image.iter())
        .map(|(a, b)| *a + *b)
        .collect();
    Ok(image.intersect(x)?)
}

/// Raw iteration result; the estimator maps it back to bus voltages.
#[derive(Debug, Clone, PartialEq)]
pub struct KrawczykOutcome {
    pub hull: IntervalVector,
    pub iterations: usize,
    /// `‖X⁽ʲ⁺¹⁾ − X⁽ʲ⁾‖∞` per iteration.
    pub distances: Vec<f64>,
    /// Iterations at which `X⁽ʲ⁺¹⁾ ⊆ X⁽ʲ⁾` was checked.
    pub nested_checks: usize,
}

/// Iterates from `init.x0` until successive boxes are within `eps`.
pub fn krawczyk_solve(
    init: &KrawczykInit,
    eps: f64,
    cap: usize,
) -> Result<KrawczykOutcome, EstimatorError> {
    let mut x = init.x0.clone();
    let mut distances = Vec::new();
    for it in 1..=cap {
        let next = krawczyk_step(init, &x).map_err(|e| match e {
            EstimatorError::Interval(IntervalError::EmptyIntersection { .. }) => {
                EstimatorError::EmptyIntersection { iteration: it }
            }
            other => other,
        })?;
        if !next.is_subset_of(&x) {
            return Err(EstimatorError::NestingViolation { iteration: it });
        }
        let d = next.distance(&x)?;
        distances.push(d);
        x = next;
        if d <= eps {
            return Ok(KrawczykOutcome {
                hull: x,
                iterations: it,
                distances,
                nested_checks: it,
            });
        }
    }
    Err(EstimatorError::IterationCap {
        cap,
        distance: distances.last().copied().unwrap_or(f64::NAN),
    })
}
