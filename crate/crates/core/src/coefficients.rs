//! Scalar data of the dynamical ansatz
//!
//! ```text
//! R̂(p)^{i1 i2}_{j1 j2} = δ^{i1}_{j2} δ^{i2}_{j1} a_{i1 i2}(p) + δ^{i1}_{j1} δ^{i2}_{j2} b_{i1 i2}(p)
//! ```
//!
//! The diagonal flips `a_ii` are the grading values `q` / `−q⁻¹`. The
//! off-diagonal `b_ij(p)` come from the integration constants `b⁰`:
//!
//! ```text
//! b_ij(p) = λ u_ij b⁰_ij / (u_ij b⁰_ij + b⁰_ji),   u_ij = U_i(p_i) / U_j(p_j)
//! ```
//!
//! with `U_i(p) = q^{2p/h}` for even indices and `q^{−2p/h}` for odd ones.
//! `U_i(p + h) = a_i² U_i(p)`, which is all the shift recursions need, and
//! the phase of `(−q⁻¹)^{p/h}` never enters. The flips `a_ij` are fixed by
//! the product `a_ij a_ji = 1 + b_ij b_ji` up to a gauge.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentum::Momentum;
use crate::report::{aggregate, fmt_f64, fmt_scalar, CheckReport, SubResidual};
use crate::tensor::{re, Residual, Scalar};

/// `|q − q⁻¹|` below this is treated as the undeformed point.
pub const MIN_LAMBDA: f64 = 1e-14;

/// A denominator this small relative to its terms is a pole.
const POLE_REL_TOL: f64 = 1e-13;

pub fn lambda_of(q: Scalar) -> Scalar {
    q - q.inv()
}

pub fn nondegenerate_lambda(q: Scalar) -> Result<Scalar> {
    if !(q.re.is_finite() && q.im.is_finite()) || q.norm() == 0.0 {
        return Err(Error::InvalidParameter(format!("q must be finite and nonzero, got {q}")));
    }
    let lambda = lambda_of(q);
    if lambda.norm() < MIN_LAMBDA {
        return Err(Error::DegenerateDeformation(lambda.norm()));
    }
    Ok(lambda)
}

/// `q^x` on the principal branch.
pub fn q_power(q: Scalar, x: Scalar) -> Scalar {
    (x * q.ln()).exp()
}

/// `[x]_q = (q^x − q^{−x}) / (q − q⁻¹)`, principal branch.
pub fn q_bracket(x: Scalar, q: Scalar) -> Result<Scalar> {
    let lambda = nondegenerate_lambda(q)?;
    Ok((q_power(q, x) - q_power(q, -x)) / lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradingSignature {
    n: usize,
    k: usize,
    q: Scalar,
    a: Vec<Scalar>,
}

impl GradingSignature {
    /// Indices `0..k` are even (`a_i = q`), `k..n` odd (`a_i = −q⁻¹`).
    /// `k = n` is the pure `GL_q(N)` case.
    pub fn new(n: usize, k: usize, q: Scalar) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if k > n {
            return Err(Error::InvalidParameter(format!("K = {k} exceeds N = {n}")));
        }
        nondegenerate_lambda(q)?;
        let a = (0..n).map(|i| if i < k { q } else { -q.inv() }).collect();
        Ok(Self { n, k, q, a })
    }

    pub fn gl(n: usize, q: Scalar) -> Result<Self> {
        Self::new(n, n, q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> Scalar {
        self.q
    }

    pub fn lambda(&self) -> Scalar {
        lambda_of(self.q)
    }

    pub fn a(&self, i: usize) -> Scalar {
        self.a[i]
    }

    pub fn values(&self) -> &[Scalar] {
        &self.a
    }

    /// 0 for even indices, 1 for odd ones.
    pub fn grading(&self, i: usize) -> u8 {
        u8::from(i >= self.k)
    }

    pub fn is_pure(&self) -> bool {
        self.k == self.n
    }

    fn parity_sign(&self, i: usize) -> f64 {
        if self.grading(i) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Integration constants `b⁰_ij = b_ij(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BZero {
    /// The limit `b⁰_ij → ∞` for `i < j`, kept symbolic.
    Canonical,
    Finite { matrix: DMatrix<Scalar>, label: String },
}

impl BZero {
    pub fn explicit(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("b0 must be a non-empty square matrix".into()));
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self::Finite { matrix, label: "explicit".into() })
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self, Self::Canonical)
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Canonical => None,
            Self::Finite { matrix, .. } => Some(matrix.nrows()),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<Scalar> {
        match self {
            Self::Canonical => None,
            Self::Finite { matrix, .. } => Some(matrix[(i, j)]),
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            Self::Canonical => "canonical".into(),
            Self::Finite { matrix, label } => {
                let entries: Vec<String> = matrix.row_iter().flat_map(|r| r.iter().map(|z| fmt_scalar(*z)).collect::<Vec<_>>()).collect();
                format!("{label}[{}]", entries.join(","))
            }
        }
    }
}

/// `b⁰_ij = λ β_i / (β_i − β_j)` for distinct `β`: solves the sum and cyclic
/// conditions identically, and tends to the canonical limit as the `β`
/// coalesce in decreasing order.
pub fn beta_family(n: usize, beta: &[Scalar], q: Scalar) -> Result<BZero> {
    if beta.len() != n {
        return Err(Error::DimensionMismatch(format!("{} beta values for N = {n}", beta.len())));
    }
    let lambda = nondegenerate_lambda(q)?;
    let scale = beta.iter().map(|b| b.norm()).fold(0.0, f64::max);
    for i in 0..n {
        for j in (i + 1)..n {
            if (beta[i] - beta[j]).norm() <= 1e-10 * scale {
                return Err(Error::CoincidentBeta(i, j));
            }
        }
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            re(0.0)
        } else {
            lambda * beta[i] / (beta[i] - beta[j])
        }
    });
    let label = format!(
        "beta({})",
        beta.iter().map(|b| fmt_scalar(*b)).collect::<Vec<_>>().join(",")
    );
    Ok(BZero::Finite { matrix, label })
}

/// The constant choice `b⁰_ij = λ` for `i > j`, `0` for `i < j`. With the
/// upper-triangular gauge it reproduces the constant `GL_q(N)` R-matrix.
pub fn constant_b0(n: usize, q: Scalar) -> Result<BZero> {
    let lambda = nondegenerate_lambda(q)?;
    let matrix = DMatrix::from_fn(n, n, |i, j| if i > j { lambda } else { re(0.0) });
    Ok(BZero::Finite { matrix, label: "constant".into() })
}

/// Checks `b⁰_ii = 0`, `b⁰_ij + b⁰_ji = λ` and the cyclic condition
/// `b⁰_ij b⁰_jk b⁰_ki + b⁰_ik b⁰_kj b⁰_ji = 0`. Each violation is measured
/// relative to the size of its terms (at least `|λ|` resp. `|λ|³`).
pub fn validate_b0(b0: &BZero, q: Scalar, tol: f64) -> CheckReport {
    let digest = format!("q={} b0={}", fmt_scalar(q), b0.descriptor());
    let lambda = lambda_of(q);
    let l = lambda.norm();
    let matrix = match b0 {
        BZero::Canonical => {
            return CheckReport::new("b0_constraints", Residual::ZERO, tol, digest);
        }
        BZero::Finite { matrix, .. } => matrix,
    };
    if matrix.nrows() != matrix.ncols() {
        return CheckReport::skipped("b0_constraints", "b0 is not square", tol, digest);
    }
    let n = matrix.nrows();
    let b = |i: usize, j: usize| matrix[(i, j)];

    let mut worst_diag = (Residual::ZERO, String::from("diagonal"));
    for i in 0..n {
        let abs = b(i, i).norm();
        let r = Residual { absolute: abs, relative: abs / l.max(f64::MIN_POSITIVE) };
        if r.relative > worst_diag.0.relative {
            worst_diag = (r, format!("diagonal ({})", i + 1));
        }
    }

    let mut worst_sum = (Residual::ZERO, String::from("sum"));
    for i in 0..n {
        for j in (i + 1)..n {
            let abs = (b(i, j) + b(j, i) - lambda).norm();
            let scale = l.max(b(i, j).norm() + b(j, i).norm());
            let r = Residual { absolute: abs, relative: abs / scale };
            if r.relative > worst_sum.0.relative {
                worst_sum = (r, format!("sum ({},{})", i + 1, j + 1));
            }
        }
    }

    let mut worst_cyclic = (Residual::ZERO, String::from("cyclic"));
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let t1 = b(i, j) * b(j, k) * b(k, i);
                let t2 = b(i, k) * b(k, j) * b(j, i);
                let abs = (t1 + t2).norm();
                let scale = (l * l * l).max(t1.norm() + t2.norm());
                let r = Residual { absolute: abs, relative: abs / scale };
                if r.relative > worst_cyclic.0.relative {
                    worst_cyclic = (r, format!("cyclic ({},{},{})", i + 1, j + 1, k + 1));
                }
            }
        }
    }

    let parts = [worst_diag, worst_sum, worst_cyclic]
        .into_iter()
        .map(|(residual, label)| SubResidual { label, residual })
        .collect();
    aggregate("b0_constraints", parts, tol, digest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `a_ij = a_ji = √(1 + b_ij b_ji)`.
    Unitary,
    /// `a_ij = 1 + b_ij b_ji` for `i < j`, `a_ij = 1` for `i > j`.
    UpperTriangular,
}

impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gauge::Unitary => "unitary",
            Gauge::UpperTriangular => "upper_triangular",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientScheme {
    sig: GradingSignature,
    b0: BZero,
    gauge: Gauge,
    h: f64,
}

impl CoefficientScheme {
    pub fn new(sig: GradingSignature, b0: BZero, gauge: Gauge, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
        }
        if let Some(dim) = b0.dim() {
            if dim != sig.n() {
                return Err(Error::DimensionMismatch(format!(
                    "b0 is {dim}×{dim} but N = {}",
                    sig.n()
                )));
            }
        }
        Ok(Self { sig, b0, gauge, h })
    }

    pub fn sig(&self) -> &GradingSignature {
        &self.sig
    }

    pub fn b0(&self) -> &BZero {
        &self.b0
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.sig.n()
    }

    pub fn lambda(&self) -> Scalar {
        self.sig.lambda()
    }

    /// Same scheme with a different Planck constant.
    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.sig.clone(), self.b0.clone(), self.gauge, h)
    }

    pub fn with_gauge(&self, gauge: Gauge) -> Self {
        Self { gauge, ..self.clone() }
    }

    pub fn digest(&self) -> String {
        format!(
            "N={} K={} q={} h={} gauge={} b0={}",
            self.sig.n(),
            self.sig.k(),
            fmt_scalar(self.sig.q()),
            fmt_f64(self.h),
            self.gauge,
            self.b0.descriptor()
        )
    }

    fn check_momentum(&self, m: &Momentum, indices: &[usize]) -> Result<()> {
        if m.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "momentum has {} components, scheme has N = {}",
                m.len(),
                self.n()
            )));
        }
        if (m.h() - self.h).abs() > 1e-12 * self.h {
            return Err(Error::InvalidParameter(format!(
                "momentum h = {} differs from scheme h = {}",
                m.h(),
                self.h
            )));
        }
        for &i in indices {
            if i >= self.n() {
                return Err(Error::IndexOutOfRange { index: i, len: self.n() });
            }
        }
        Ok(())
    }

    /// `(p_i − p_j)/h` for equal grading, `(p_i + p_j)/h` for opposite grading.
    pub fn pair_argument(&self, m: &Momentum, i: usize, j: usize) -> f64 {
        let sigma = self.sig.parity_sign(i) * self.sig.parity_sign(j);
        (m.p()[i] - sigma * m.p()[j]) / m.h()
    }

    /// `log u_ij = 2 log q · (s_i p_i − s_j p_j)/h`, `s = ±1` by grading.
    fn log_u(&self, m: &Momentum, i: usize, j: usize) -> Scalar {
        let two_log_q = 2.0 * self.sig.q().ln();
        let si = self.sig.parity_sign(i);
        let sj = self.sig.parity_sign(j);
        two_log_q * ((si * m.p()[i] - sj * m.p()[j]) / m.h())
    }

    /// Distance, in units of the pair argument, from the current point to the
    /// nearest pole of `b_ij`. `None` when `b_ij` has no poles.
    pub fn pole_distance(&self, m: &Momentum, i: usize, j: usize) -> Option<f64> {
        let log_w = match &self.b0 {
            BZero::Canonical => re(0.0),
            BZero::Finite { matrix, .. } => {
                let (bij, bji) = (matrix[(i, j)], matrix[(j, i)]);
                if bij.norm() == 0.0 || bji.norm() == 0.0 {
                    return None;
                }
                (-bji / bij).ln()
            }
        };
        // log u = s_i·ℓ·x with ℓ = 2 log q, so poles sit at
        // x_k = s_i (log w + 2πik) / ℓ.
        let ell = 2.0 * self.sig.q().ln();
        if ell.norm() == 0.0 {
            return None;
        }
        let si = self.sig.parity_sign(i);
        let x = self.pair_argument(m, i, j);
        let x0 = log_w * si / ell;
        let step = Scalar::new(0.0, 2.0 * PI) * si / ell;
        let offset = re(x) - x0;
        let k_star = (offset * step.conj()).re / step.norm_sqr();
        let best = [k_star.floor() - 1.0, k_star.floor(), k_star.ceil(), k_star.ceil() + 1.0]
            .into_iter()
            .map(|k| (offset - step * k).norm())
            .fold(f64::INFINITY, f64::min);
        Some(best)
    }

    pub fn b(&self, m: &Momentum, i: usize, j: usize) -> Result<Scalar> {
        self.check_momentum(m, &[i, j])?;
        self.b_unchecked(m, i, j)
    }

    fn b_unchecked(&self, m: &Momentum, i: usize, j: usize) -> Result<Scalar> {
        if i == j {
            return Ok(re(0.0));
        }
        let lambda = self.lambda();
        let pole = |reason: String| Error::Resonance { i, j, reason };
        match &self.b0 {
            BZero::Canonical => {
                // λ u/(u − 1) written as λ e^{E/2} / (2 sinh(E/2)). The same
                // closed form serves i > j, where it equals λ − b_ji without
                // the cancellation of that subtraction.
                let half = self.log_u(m, i, j) * 0.5;
                let denom = half.sinh() * 2.0;
                let value = lambda * half.exp() / denom;
                if denom.norm() <= POLE_REL_TOL || !value.re.is_finite() || !value.im.is_finite() {
                    return Err(pole(format!(
                        "canonical denominator vanishes at argument {}",
                        self.pair_argument(m, i, j)
                    )));
                }
                Ok(value)
            }
            BZero::Finite { matrix, .. } => {
                let (bij, bji) = (matrix[(i, j)], matrix[(j, i)]);
                let log_u = self.log_u(m, i, j);
                // Divide through by whichever of u, 1 is larger.
                let (t1, t2) = if log_u.re >= 0.0 {
                    (bij, (-log_u).exp() * bji)
                } else {
                    (log_u.exp() * bij, bji)
                };
                let denom = t1 + t2;
                let size = t1.norm() + t2.norm();
                if size == 0.0 || denom.norm() <= POLE_REL_TOL * size {
                    return Err(pole(format!(
                        "u·b0_ij + b0_ji vanishes at argument {}",
                        self.pair_argument(m, i, j)
                    )));
                }
                Ok(lambda * t1 / denom)
            }
        }
    }

    /// The flip coefficient `a_ij(p)`; `a_ii` is the grading value.
    pub fn a(&self, m: &Momentum, i: usize, j: usize) -> Result<Scalar> {
        self.check_momentum(m, &[i, j])?;
        if i == j {
            return Ok(self.sig.a(i));
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let product = re(1.0) + self.b_unchecked(m, lo, hi)? * self.b_unchecked(m, hi, lo)?;
        Ok(match self.gauge {
            Gauge::UpperTriangular => {
                if i < j {
                    product
                } else {
                    re(1.0)
                }
            }
            // +0.0 normalises a negative-zero imaginary part so that real
            // negative products always take the +i branch.
            Gauge::Unitary => Scalar::new(product.re, product.im + 0.0).sqrt(),
        })
    }
}

pub fn b_of_p(scheme: &CoefficientScheme, m: &Momentum, i: usize, j: usize) -> Result<Scalar> {
    scheme.b(m, i, j)
}

pub fn a_of_p(scheme: &CoefficientScheme, m: &Momentum, i: usize, j: usize) -> Result<Scalar> {
    scheme.a(m, i, j)
}

/// Shift recursions for `b_ij` against an arbitrary coefficient function.
///
/// ```text
/// b_ij(p_i + h, p_j) = b_ij a_i / (1/a_i + b_ij)
/// b_ij(p_i, p_j + h) = (b_ij / a_j) / (a_j − b_ij)
/// b_ij(p_i + nh, p_j + mh) = λ A b_ij / (A b_ij + A⁻¹ b_ji),  A = a_i^n a_j^{−m}
/// ```
pub fn check_recursions_with<F>(
    sig: &GradingSignature,
    m: &Momentum,
    tol: f64,
    digest: &str,
    b: F,
) -> Result<CheckReport>
where
    F: Fn(&Momentum, usize, usize) -> Result<Scalar>,
{
    const STEPS: [(i32, i32); 4] = [(1, 1), (2, 1), (1, 2), (-1, 1)];
    let n = sig.n();
    let lambda = sig.lambda();
    let mut eq21 = (Vec::new(), Vec::new());
    let mut eq22 = (Vec::new(), Vec::new());
    let mut eq23: Vec<(Vec<Scalar>, Vec<Scalar>)> = vec![(Vec::new(), Vec::new()); STEPS.len()];

    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (ai, aj) = (sig.a(i), sig.a(j));
            let bij = b(m, i, j)?;
            let bji = b(m, j, i)?;

            eq21.0.push(b(&m.shift(i, 1)?, i, j)?);
            eq21.1.push(bij * ai / (ai.inv() + bij));

            eq22.0.push(b(&m.shift(j, 1)?, i, j)?);
            eq22.1.push((bij / aj) / (aj - bij));

            for (slot, &(steps_i, steps_j)) in eq23.iter_mut().zip(STEPS.iter()) {
                let shifted = m.shift(i, steps_i)?.shift(j, steps_j)?;
                let big_a = ai.powi(steps_i) * aj.powi(-steps_j);
                slot.0.push(b(&shifted, i, j)?);
                slot.1.push(lambda * big_a * bij / (big_a * bij + big_a.inv() * bji));
            }
        }
    }

    let mut parts = vec![
        SubResidual { label: "shift_i".into(), residual: Residual::between_scalars(&eq21.0, &eq21.1)? },
        SubResidual { label: "shift_j".into(), residual: Residual::between_scalars(&eq22.0, &eq22.1)? },
    ];
    for ((lhs, rhs), (si, sj)) in eq23.iter().zip(STEPS) {
        parts.push(SubResidual {
            label: format!("shift_general({si},{sj})"),
            residual: Residual::between_scalars(lhs, rhs)?,
        });
    }
    Ok(aggregate("recursions", parts, tol, digest))
}

pub fn check_recursions(scheme: &CoefficientScheme, m: &Momentum, tol: f64) -> Result<CheckReport> {
    let digest = format!("{} p={}", scheme.digest(), fmt_momentum(m));
    check_recursions_with(scheme.sig(), m, tol, &digest, |mm, i, j| scheme.b(mm, i, j))
}

/// Pointwise constraints at one momentum: `b_ij + b_ji = λ`,
/// `a_ij a_ji − b_ij b_ji = 1`, `a_i² − λ a_i − 1 = 0`, and
/// `b_ij b_jk b_ki + b_ik b_kj b_ji = 0`.
pub fn check_constraints(scheme: &CoefficientScheme, m: &Momentum, tol: f64) -> Result<CheckReport> {
    let n = scheme.n();
    let lambda = scheme.lambda();
    let mut sum = (Vec::new(), Vec::new());
    let mut product = (Vec::new(), Vec::new());
    let mut grading = (Vec::new(), Vec::new());
    let mut cyclic = (Vec::new(), Vec::new());

    for i in 0..n {
        let ai = scheme.a(m, i, i)?;
        grading.0.push(ai * ai);
        grading.1.push(lambda * ai + 1.0);
        if scheme.b(m, i, i)? != re(0.0) {
            return Err(Error::InvalidParameter("b_ii must vanish".into()));
        }
        for j in (i + 1)..n {
            let (bij, bji) = (scheme.b(m, i, j)?, scheme.b(m, j, i)?);
            let (aij, aji) = (scheme.a(m, i, j)?, scheme.a(m, j, i)?);
            sum.0.push(bij + bji);
            sum.1.push(lambda);
            product.0.push(aij * aji - bij * bji);
            product.1.push(re(1.0));
            for k in (j + 1)..n {
                let b = |x, y| scheme.b(m, x, y);
                cyclic.0.push(b(i, j)? * b(j, k)? * b(k, i)?);
                cyclic.1.push(-(b(i, k)? * b(k, j)? * b(j, i)?));
            }
        }
    }
    let digest = format!("{} p={}", scheme.digest(), fmt_momentum(m));
    let parts = vec![
        SubResidual { label: "sum".into(), residual: Residual::between_scalars(&sum.0, &sum.1)? },
        SubResidual { label: "product".into(), residual: Residual::between_scalars(&product.0, &product.1)? },
        SubResidual { label: "grading".into(), residual: Residual::between_scalars(&grading.0, &grading.1)? },
        SubResidual { label: "cyclic".into(), residual: Residual::between_scalars(&cyclic.0, &cyclic.1)? },
    ];
    Ok(aggregate("constraints", parts, tol, digest))
}

pub fn fmt_momentum(m: &Momentum) -> String {
    format!(
        "[{}]/h={}",
        m.p().iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","),
        fmt_f64(m.h())
    )
}
