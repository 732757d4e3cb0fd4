//! Builders for every R-matrix family: the constant Hecke matrix of
//! `GL_q(N)`, the dynamical `R̂(p)` in both the general multiparametric form
//! and the closed `SL_q(N)` / `SL_q(K|N−K)` forms, their baxterizations, the
//! rational (Yangian-limit) matrix and the classical `r₀(p)`.
//!
//! All arity-2 matrices use the row index `(i1, i2)` and column index
//! `(j1, j2)` of `R̂^{i1 i2}_{j1 j2}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coefficients::{nondegenerate_lambda, q_bracket, q_power, CoefficientScheme, Gauge};
use crate::error::{Error, Result};
use crate::momentum::Momentum;
use crate::tensor::{c, flat_index, permutation, re, Operator, Scalar};

/// Relative Hecke residual accepted by [`build_baxterized`] before it will
/// use `R̂⁻¹ = R̂ − λ`.
pub const HECKE_PRECHECK_TOL: f64 = 1e-9;

/// Fills the ansatz `δ^{i1}_{j2} δ^{i2}_{j1} a_{i1 i2} + δ^{i1}_{j1} δ^{i2}_{j2} b_{i1 i2}`.
fn ansatz<A, B>(n: usize, mut a: A, mut b: B) -> Result<Operator>
where
    A: FnMut(usize, usize) -> Result<Scalar>,
    B: FnMut(usize, usize) -> Result<Scalar>,
{
    let mut op = Operator::zeros(n, 2)?;
    for i1 in 0..n {
        for i2 in 0..n {
            let row = flat_index(&[i1, i2], n);
            let flip_col = flat_index(&[i2, i1], n);
            op.set(row, flip_col, op.entry(row, flip_col) + a(i1, i2)?);
            if i1 != i2 {
                op.set(row, row, op.entry(row, row) + b(i1, i2)?);
            }
        }
    }
    Ok(op)
}

/// `R̂ = P R` with `R = q Σ E_ii⊗E_ii + Σ_{i≠j} E_ii⊗E_jj + λ Σ_{i<j} E_ij⊗E_ji`.
pub fn build_constant_r(n: usize, q: Scalar) -> Result<Operator> {
    let lambda = nondegenerate_lambda(q)?;
    let r = Operator::from_fn(n, 2, |row, col| {
        let (i, j) = (row / n, row % n);
        let (k, l) = (col / n, col % n);
        let mut v = re(0.0);
        if row == col {
            v += if i == j { q } else { re(1.0) };
        }
        // E_ij ⊗ E_ji maps e_j ⊗ e_i to e_i ⊗ e_j.
        if i < j && k == j && l == i {
            v += lambda;
        }
        v
    })?;
    permutation(n)?.try_mul(&r)
}

/// The dynamical `R̂(p)` with coefficients from `scheme`.
pub fn build_dynamical_r(scheme: &CoefficientScheme, m: &Momentum) -> Result<Operator> {
    ansatz(scheme.n(), |i, j| scheme.a(m, i, j), |i, j| scheme.b(m, i, j))
}

/// `q^{−1/N}`.
pub fn sl_factor(n: usize, q: Scalar) -> Scalar {
    q_power(q, re(-1.0 / n as f64))
}

/// `q^{1/(N−K) − 1/K}`.
pub fn super_factor(n: usize, k: usize, q: Scalar) -> Scalar {
    q_power(q, re(1.0 / (n - k) as f64 - 1.0 / k as f64))
}

/// `b(x) = q^{x/h} / [x/h]_q`.
fn closed_b(x: f64, h: f64, q: Scalar, pair: (usize, usize)) -> Result<Scalar> {
    let d = re(x / h);
    let bracket = q_bracket(d, q)?;
    if bracket.norm() <= 1e-13 {
        return Err(Error::Resonance { i: pair.0, j: pair.1, reason: format!("[{}]_q vanishes", x / h) });
    }
    Ok(q_power(q, d) / bracket)
}

/// `a(x) = ([x/h + 1]_q [x/h − 1]_q)^{1/2} / [x/h]_q`, taken as the principal
/// root of the squared ratio so that `a(x) = a(−x)` and `a → 1` far from the
/// poles.
fn closed_a(x: f64, h: f64, q: Scalar, pair: (usize, usize)) -> Result<Scalar> {
    let d = x / h;
    let mid = q_bracket(re(d), q)?;
    if mid.norm() <= 1e-13 {
        return Err(Error::Resonance { i: pair.0, j: pair.1, reason: format!("[{d}]_q vanishes") });
    }
    let ratio = q_bracket(re(d + 1.0), q)? * q_bracket(re(d - 1.0), q)? / (mid * mid);
    Ok(Scalar::new(ratio.re, ratio.im + 0.0).sqrt())
}

/// `q^{−1/N} R̂(p)` for `SL_q(N)` in the closed form
/// `b_ij = q^{d}/[d]_q`, `a_ij = a_ji = ([d+1]_q [d−1]_q)^{1/2}/[d]_q`, `d = (p_i − p_j)/h`.
pub fn build_dynamical_sl(scheme: &CoefficientScheme, m: &Momentum) -> Result<Operator> {
    let sig = scheme.sig();
    if !sig.is_pure() {
        return Err(Error::InvalidParameter("SL_q(N) builder needs K = N".into()));
    }
    if !scheme.b0().is_canonical() || scheme.gauge() != Gauge::Unitary {
        return Err(Error::InvalidParameter(
            "SL_q(N) builder needs canonical b0 and the unitary gauge".into(),
        ));
    }
    check_len(scheme, m)?;
    let (q, h, n) = (sig.q(), m.h(), sig.n());
    let p = m.p();
    let core = ansatz(
        n,
        |i, j| if i == j { Ok(q) } else { closed_a(p[i] - p[j], h, q, (i, j)) },
        |i, j| closed_b(p[i] - p[j], h, q, (i, j)),
    )?;
    Ok(core.scale(sl_factor(n, q)))
}

/// `q^{1/(N−K) − 1/K} R̂(p)` for `SL_q(K|N−K)`, sector by sector:
///
/// * diagonal flips `(−1)^{(i)} q^{1−2(i)}`;
/// * even–even: `a(p_i − p_j)`, `b(p_i − p_j)`;
/// * odd–odd: `a(p_i − p_j)`, `b(p_j − p_i)`;
/// * even–odd: `a(p_i + p_j)`, `b(p_i + p_j)`;
/// * odd–even: `a(p_i + p_j)`, `b(−p_i − p_j)`.
///
/// The `a`/`b` terms enter only for `i1 ≠ i2`, where `(i, j) = (i1, i2)`.
pub fn build_super_sl(scheme: &CoefficientScheme, m: &Momentum) -> Result<Operator> {
    let sig = scheme.sig();
    let (n, k) = (sig.n(), sig.k());
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "SL_q(K|N-K) builder needs 1 <= K <= N-1, got K = {k}, N = {n}"
        )));
    }
    if !scheme.b0().is_canonical() {
        return Err(Error::InvalidParameter("SL_q(K|N-K) builder needs canonical b0".into()));
    }
    check_len(scheme, m)?;
    let (q, h) = (sig.q(), m.h());
    let p = m.p();
    let even = |i: usize| sig.grading(i) == 0;
    let core = ansatz(
        n,
        |i, j| {
            if i == j {
                return Ok(if even(i) { q } else { -q.inv() });
            }
            let x = if even(i) == even(j) { p[i] - p[j] } else { p[i] + p[j] };
            closed_a(x, h, q, (i, j))
        },
        |i, j| {
            let x = match (even(i), even(j)) {
                (true, true) => p[i] - p[j],
                (false, false) => p[j] - p[i],
                (true, false) => p[i] + p[j],
                (false, true) => -p[i] - p[j],
            };
            closed_b(x, h, q, (i, j))
        },
    )?;
    Ok(core.scale(super_factor(n, k, q)))
}

fn check_len(scheme: &CoefficientScheme, m: &Momentum) -> Result<()> {
    if m.len() != scheme.n() {
        return Err(Error::DimensionMismatch(format!(
            "momentum has {} components, N = {}",
            m.len(),
            scheme.n()
        )));
    }
    Ok(())
}

/// `y⁻¹ R̂ − y R̂⁻¹` with `R̂⁻¹ = R̂ − λ`, no Hecke precondition.
pub fn baxterize_unchecked(base: &Operator, y: Scalar, lambda: Scalar) -> Operator {
    let inverse = base.add_identity(-lambda);
    &base.scale(y.inv()) - &inverse.scale(y)
}

/// Baxterization of a Hecke matrix.
pub fn build_baxterized(base: &Operator, y: Scalar, lambda: Scalar) -> Result<Operator> {
    if y.norm() == 0.0 {
        return Err(Error::InvalidParameter("spectral parameter y must be nonzero".into()));
    }
    let residual = hecke_residual(base, lambda)?;
    if residual > HECKE_PRECHECK_TOL {
        return Err(Error::NotHecke(residual));
    }
    Ok(baxterize_unchecked(base, y, lambda))
}

/// Relative Frobenius residual of `A² = λA + 1`.
pub fn hecke_residual(a: &Operator, lambda: Scalar) -> Result<f64> {
    let lhs = a.try_mul(a)?;
    let rhs = a.scale(lambda).add_identity(re(1.0));
    Ok(crate::tensor::residual(&lhs, &rhs)?.relative)
}

/// Multiplicative parameter for the additive one: `y = −exp(λθ/2)`, so that
/// `R̂(p, y)/λ → θ R̂⁰(p) − 1` as `λ → 0`.
pub fn multiplicative_from_additive(theta: Scalar, lambda: Scalar) -> Scalar {
    -(lambda * theta * 0.5).exp()
}

/// `R̂⁰(p)`: the ansatz with `a_ii = 1`, `b_ij = h/(p_i − p_j)` and
/// `a_ij = a_ji = ((p_i − p_j)² − h²)^{1/2} / (p_i − p_j)`.
pub fn build_yangian_base(m: &Momentum) -> Result<Operator> {
    let (p, h) = (m.p(), m.h());
    let n = m.len();
    let coincident = |i: usize, j: usize| Error::Resonance {
        i,
        j,
        reason: "coincident momenta".into(),
    };
    ansatz(
        n,
        |i, j| {
            if i == j {
                return Ok(re(1.0));
            }
            let d = p[i] - p[j];
            if d.abs() <= 1e-14 * h {
                return Err(coincident(i, j));
            }
            Ok(Scalar::new(1.0 - (h / d).powi(2), 0.0).sqrt())
        },
        |i, j| {
            let d = p[i] - p[j];
            if d.abs() <= 1e-14 * h {
                return Err(coincident(i, j));
            }
            Ok(re(h / d))
        },
    )
}

/// `R̂(p, θ) = θ R̂⁰(p) − 1`.
pub fn build_yangian_r(m: &Momentum, theta: Scalar) -> Result<Operator> {
    Ok(build_yangian_base(m)?.scale(theta).add_identity(re(-1.0)))
}

/// `θ P − 1`, the rational R-matrix without momentum dependence.
pub fn build_yang_constant(n: usize, theta: Scalar) -> Result<Operator> {
    Ok(permutation(n)?.scale(theta).add_identity(re(-1.0)))
}

/// `r₀(p) = Σ_{j<k} (i/(p_j − p_k)) (E_jk ⊗ E_kj − E_kj ⊗ E_jk)`.
pub fn build_classical_r0(m: &Momentum) -> Result<Operator> {
    let n = m.len();
    let p = m.p();
    let mut op = Operator::zeros(n, 2)?;
    for j in 0..n {
        for k in (j + 1)..n {
            let d = p[j] - p[k];
            if d.abs() <= 1e-14 * m.h() {
                return Err(Error::Resonance { i: j, j: k, reason: "coincident momenta".into() });
            }
            let coeff = c(0.0, 1.0 / d);
            // E_jk ⊗ E_kj: e_k ⊗ e_j ↦ e_j ⊗ e_k
            let (r1, c1) = (flat_index(&[j, k], n), flat_index(&[k, j], n));
            op.set(r1, c1, op.entry(r1, c1) + coeff);
            op.set(c1, r1, op.entry(c1, r1) - coeff);
        }
    }
    Ok(op)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RMatrixKind {
    ConstantGlq,
    Dynamical,
    DynamicalSl,
    DynamicalSuperSl,
    BaxterizedTrig,
    BaxterizedConstant,
    YangianRational,
    ClassicalR0,
}

impl RMatrixKind {
    pub const ALL: [RMatrixKind; 8] = [
        RMatrixKind::ConstantGlq,
        RMatrixKind::Dynamical,
        RMatrixKind::DynamicalSl,
        RMatrixKind::DynamicalSuperSl,
        RMatrixKind::BaxterizedTrig,
        RMatrixKind::BaxterizedConstant,
        RMatrixKind::YangianRational,
        RMatrixKind::ClassicalR0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RMatrixKind::ConstantGlq => "constant_glq",
            RMatrixKind::Dynamical => "dynamical",
            RMatrixKind::DynamicalSl => "dynamical_sl",
            RMatrixKind::DynamicalSuperSl => "dynamical_super_sl",
            RMatrixKind::BaxterizedTrig => "baxterized_trig",
            RMatrixKind::BaxterizedConstant => "baxterized_constant",
            RMatrixKind::YangianRational => "yangian_rational",
            RMatrixKind::ClassicalR0 => "classical_r0",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            RMatrixKind::ConstantGlq => "constant Hecke R-matrix of GL_q(N)",
            RMatrixKind::Dynamical => "dynamical R(p) of GL_q(K|N-K), any valid b0 and gauge",
            RMatrixKind::DynamicalSl => "q^(-1/N) R(p) for SL_q(N), closed canonical form",
            RMatrixKind::DynamicalSuperSl => "q^(1/(N-K)-1/K) R(p) for SL_q(K|N-K), closed canonical form",
            RMatrixKind::BaxterizedTrig => "y^-1 R(p) - y R(p)^-1",
            RMatrixKind::BaxterizedConstant => "y^-1 R - y R^-1 for the constant matrix",
            RMatrixKind::YangianRational => "theta R0(p) - 1, rational limit",
            RMatrixKind::ClassicalR0 => "classical r0(p) on positive roots",
        }
    }
}

impl fmt::Display for RMatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully specified family member: given a momentum it produces an arity-2
/// operator.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrixSpec {
    kind: RMatrixKind,
    n: usize,
    q: Scalar,
    scheme: Option<CoefficientScheme>,
    spectral: Option<Scalar>,
}

impl RMatrixSpec {
    pub fn constant(n: usize, q: Scalar) -> Result<Self> {
        nondegenerate_lambda(q)?;
        Ok(Self { kind: RMatrixKind::ConstantGlq, n, q, scheme: None, spectral: None })
    }

    pub fn dynamical(scheme: CoefficientScheme) -> Self {
        Self::with_scheme(RMatrixKind::Dynamical, scheme, None)
    }

    pub fn dynamical_sl(scheme: CoefficientScheme) -> Result<Self> {
        if !scheme.sig().is_pure() || !scheme.b0().is_canonical() || scheme.gauge() != Gauge::Unitary {
            return Err(Error::InvalidParameter(
                "dynamical_sl needs K = N, canonical b0 and the unitary gauge".into(),
            ));
        }
        Ok(Self::with_scheme(RMatrixKind::DynamicalSl, scheme, None))
    }

    pub fn dynamical_super_sl(scheme: CoefficientScheme) -> Result<Self> {
        let (n, k) = (scheme.n(), scheme.sig().k());
        if k == 0 || k >= n || !scheme.b0().is_canonical() {
            return Err(Error::InvalidParameter(
                "dynamical_super_sl needs 1 <= K <= N-1 and canonical b0".into(),
            ));
        }
        Ok(Self::with_scheme(RMatrixKind::DynamicalSuperSl, scheme, None))
    }

    pub fn baxterized_trig(scheme: CoefficientScheme, y: Scalar) -> Self {
        Self::with_scheme(RMatrixKind::BaxterizedTrig, scheme, Some(y))
    }

    pub fn baxterized_constant(n: usize, q: Scalar, y: Scalar) -> Result<Self> {
        nondegenerate_lambda(q)?;
        Ok(Self { kind: RMatrixKind::BaxterizedConstant, n, q, scheme: None, spectral: Some(y) })
    }

    pub fn yangian(n: usize, theta: Scalar) -> Self {
        Self { kind: RMatrixKind::YangianRational, n, q: re(1.0), scheme: None, spectral: Some(theta) }
    }

    pub fn classical_r0(n: usize) -> Self {
        Self { kind: RMatrixKind::ClassicalR0, n, q: re(1.0), scheme: None, spectral: None }
    }

    fn with_scheme(kind: RMatrixKind, scheme: CoefficientScheme, spectral: Option<Scalar>) -> Self {
        Self { kind, n: scheme.n(), q: scheme.sig().q(), scheme: Some(scheme), spectral }
    }

    pub fn kind(&self) -> RMatrixKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scheme(&self) -> Option<&CoefficientScheme> {
        self.scheme.as_ref()
    }

    /// Scalar prefactor in front of the Hecke-normalised matrix.
    pub fn normalization(&self) -> Scalar {
        match self.kind {
            RMatrixKind::DynamicalSl => sl_factor(self.n, self.q),
            RMatrixKind::DynamicalSuperSl => {
                let k = self.scheme.as_ref().map(|s| s.sig().k()).unwrap_or(self.n);
                super_factor(self.n, k, self.q)
            }
            _ => re(1.0),
        }
    }

    /// `λ` of the Hecke relation obeyed by `build / normalization`, when the
    /// family obeys one.
    pub fn hecke_lambda(&self) -> Option<Scalar> {
        match self.kind {
            RMatrixKind::ConstantGlq
            | RMatrixKind::Dynamical
            | RMatrixKind::DynamicalSl
            | RMatrixKind::DynamicalSuperSl => Some(self.q - self.q.inv()),
            _ => None,
        }
    }

    fn scheme_ref(&self) -> Result<&CoefficientScheme> {
        self.scheme
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter(format!("{} needs a coefficient scheme", self.kind)))
    }

    pub fn build(&self, m: &Momentum) -> Result<Operator> {
        let spectral = || {
            self.spectral
                .ok_or_else(|| Error::InvalidParameter(format!("{} needs a spectral parameter", self.kind)))
        };
        match self.kind {
            RMatrixKind::ConstantGlq => build_constant_r(self.n, self.q),
            RMatrixKind::Dynamical => build_dynamical_r(self.scheme_ref()?, m),
            RMatrixKind::DynamicalSl => build_dynamical_sl(self.scheme_ref()?, m),
            RMatrixKind::DynamicalSuperSl => build_super_sl(self.scheme_ref()?, m),
            RMatrixKind::BaxterizedTrig => {
                let scheme = self.scheme_ref()?;
                build_baxterized(&build_dynamical_r(scheme, m)?, spectral()?, scheme.lambda())
            }
            RMatrixKind::BaxterizedConstant => build_baxterized(
                &build_constant_r(self.n, self.q)?,
                spectral()?,
                self.q - self.q.inv(),
            ),
            RMatrixKind::YangianRational => build_yangian_r(m, spectral()?),
            RMatrixKind::ClassicalR0 => build_classical_r0(m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{beta_family, constant_b0, lambda_of, BZero, GradingSignature};
    use crate::momentum::random_generic;
    use crate::tensor::{embed, residual, Slot};

    fn scheme(n: usize, k: usize, q: Scalar, b0: BZero, gauge: Gauge, h: f64) -> CoefficientScheme {
        CoefficientScheme::new(GradingSignature::new(n, k, q).unwrap(), b0, gauge, h).unwrap()
    }

    fn hecke_abs(a: &Operator, lambda: Scalar) -> f64 {
        let lhs = a * a;
        let rhs = a.scale(lambda).add_identity(re(1.0));
        residual(&lhs, &rhs).unwrap().absolute
    }

    #[test]
    fn constant_one_dimensional_is_q() {
        let r = build_constant_r(1, re(2.0)).unwrap();
        assert_eq!(r.entry(0, 0), re(2.0));
        assert!(hecke_abs(&r, re(1.5)) < 1e-15);
    }

    #[test]
    fn constant_hecke_and_braid() {
        let r = build_constant_r(2, re(2.0)).unwrap();
        assert!(hecke_abs(&r, re(1.5)) < 1e-13);

        let q = re(2.0);
        let r = build_constant_r(3, q).unwrap();
        let r12 = embed(&r, Slot::S12, 3).unwrap();
        let r23 = embed(&r, Slot::S23, 3).unwrap();
        let braid = residual(&(&(&r12 * &r23) * &r12), &(&(&r23 * &r12) * &r23)).unwrap();
        assert!(braid.absolute < 1e-13);
    }

    #[test]
    fn constant_is_a_member_of_the_dynamical_family() {
        let q = c(0.6, 0.3);
        let s = scheme(3, 3, q, constant_b0(3, q).unwrap(), Gauge::UpperTriangular, 0.1);
        let m = random_generic(3, 0.1, 2, 1.0).unwrap();
        let dynamical = build_dynamical_r(&s, &m).unwrap();
        let constant = build_constant_r(3, q).unwrap();
        assert!(residual(&dynamical, &constant).unwrap().absolute < 1e-15);
    }

    #[test]
    fn dynamical_one_dimensional_is_q() {
        let s = scheme(1, 1, re(2.0), BZero::Canonical, Gauge::Unitary, 0.1);
        let m = Momentum::new(vec![0.3], 0.1).unwrap();
        assert_eq!(build_dynamical_r(&s, &m).unwrap().entry(0, 0), re(2.0));
    }

    #[test]
    fn dynamical_hecke_and_factored_form() {
        let q = re(2.0);
        let s = scheme(2, 2, q, BZero::Canonical, Gauge::Unitary, 0.1);
        let m = random_generic(2, 0.1, 4, 1.0).unwrap();
        let r = build_dynamical_r(&s, &m).unwrap();
        assert!(hecke_abs(&r, s.lambda()) < 1e-11);
        let factored = &r.add_identity(-q) * &r.add_identity(q.inv());
        assert!(factored.frobenius_norm() < 1e-11);
    }

    #[test]
    fn dynamical_hecke_for_all_variants() {
        let h = 0.1;
        for q in [re(2.0), re(1.3), c(0.6, 0.3)] {
            for (n, k) in [(2, 2), (3, 3), (4, 4), (2, 1), (3, 1), (4, 2)] {
                let beta: Vec<Scalar> = (0..n).map(|i| re(1.0 + 0.7 * i as f64)).collect();
                for b0 in [BZero::Canonical, beta_family(n, &beta, q).unwrap()] {
                    for gauge in [Gauge::Unitary, Gauge::UpperTriangular] {
                        let s = scheme(n, k, q, b0.clone(), gauge, h);
                        let m = (0..50)
                            .map(|seed| random_generic(n, h, seed, 1.0).unwrap())
                            .find(|m| crate::momentum::resonance_check(m, &s, h / 10.0).ok)
                            .unwrap();
                        let r = build_dynamical_r(&s, &m).unwrap();
                        assert!(hecke_residual(&r, s.lambda()).unwrap() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn sl_closed_form_matches_general_route() {
        let h = 0.1;
        for q in [re(2.0), re(1.5), c(0.6, 0.3)] {
            for n in [2, 3, 4] {
                let s = scheme(n, n, q, BZero::Canonical, Gauge::Unitary, h);
                let m = random_generic(n, h, 17, 1.0).unwrap();
                let closed = build_dynamical_sl(&s, &m).unwrap();
                let general = build_dynamical_r(&s, &m).unwrap().scale(sl_factor(n, q));
                assert!(residual(&closed, &general).unwrap().relative < 1e-12);
            }
        }
    }

    #[test]
    fn sl_two_by_two_structure() {
        let q = re(2.0);
        let h = 0.1;
        let s = scheme(2, 2, q, BZero::Canonical, Gauge::Unitary, h);
        let m = Momentum::new(vec![0.23, -0.11], h).unwrap();
        let r = build_dynamical_sl(&s, &m).unwrap();
        let f = sl_factor(2, q);
        let d = (0.23 + 0.11) / h;
        let b12 = q_power(q, re(d)) / q_bracket(re(d), q).unwrap();
        assert!((r.get(&[0, 1], &[0, 1]) / f - b12).norm() < 1e-13);
        // a_12 = a_21
        assert!((r.get(&[0, 1], &[1, 0]) - r.get(&[1, 0], &[0, 1])).norm() < 1e-15);
        assert!(build_dynamical_sl(&s.with_gauge(Gauge::UpperTriangular), &m).is_err());
    }

    #[test]
    fn normalized_builders_obey_rescaled_hecke() {
        let h = 0.1;
        for q in [re(2.0), re(1.3), c(0.6, 0.3)] {
            for (n, k) in [(2, 1), (3, 1), (4, 2)] {
                let s = scheme(n, k, q, BZero::Canonical, Gauge::Unitary, h);
                let m = random_generic(n, h, 23, 1.0).unwrap();
                let r = build_super_sl(&s, &m).unwrap();
                let f = super_factor(n, k, q);
                let lhs = &r * &r;
                let rhs = r.scale(f * s.lambda()).add_identity(f * f);
                assert!(residual(&lhs, &rhs).unwrap().relative < 1e-10);
            }
        }
    }

    #[test]
    fn super_equal_blocks_have_unit_factor() {
        assert!((super_factor(4, 2, re(2.0)) - re(1.0)).norm() < 1e-15);
    }

    #[test]
    fn super_diagonal_entries() {
        let q = re(2.0);
        let s = scheme(3, 1, q, BZero::Canonical, Gauge::Unitary, 0.1);
        let m = random_generic(3, 0.1, 5, 1.0).unwrap();
        let r = build_super_sl(&s, &m).unwrap();
        let f = super_factor(3, 1, q);
        assert!((r.get(&[0, 0], &[0, 0]) - q * f).norm() < 1e-14);
        for i in 1..3 {
            assert!((r.get(&[i, i], &[i, i]) + q.inv() * f).norm() < 1e-14);
        }
    }

    #[test]
    fn super_closed_form_matches_general_route() {
        let h = 0.1;
        for q in [re(2.0), c(0.6, 0.3)] {
            for (n, k) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
                let s = scheme(n, k, q, BZero::Canonical, Gauge::Unitary, h);
                let m = random_generic(n, h, 31, 1.0).unwrap();
                let closed = build_super_sl(&s, &m).unwrap();
                let general = build_dynamical_r(&s, &m).unwrap().scale(super_factor(n, k, q));
                assert!(residual(&closed, &general).unwrap().relative < 1e-12);
            }
        }
    }

    #[test]
    fn super_mixed_sector_depends_on_sum() {
        let q = re(2.0);
        let h = 0.1;
        let s = scheme(2, 1, q, BZero::Canonical, Gauge::Unitary, h);
        let m = Momentum::new(vec![0.234, -0.517], h).unwrap();
        let moved = Momentum::new(vec![0.234 + 0.061, -0.517 - 0.061], h).unwrap();
        let a = build_super_sl(&s, &m).unwrap();
        let b = build_super_sl(&s, &moved).unwrap();
        for (row, col) in [([0, 1], [0, 1]), ([1, 0], [1, 0]), ([0, 1], [1, 0]), ([1, 0], [0, 1])] {
            assert!((a.get(&row, &col) - b.get(&row, &col)).norm() < 1e-12);
        }
    }

    #[test]
    fn super_rejects_bad_k() {
        let s = scheme(3, 3, re(2.0), BZero::Canonical, Gauge::Unitary, 0.1);
        let m = random_generic(3, 0.1, 1, 1.0).unwrap();
        assert!(build_super_sl(&s, &m).is_err());
        let s0 = scheme(3, 0, re(2.0), BZero::Canonical, Gauge::Unitary, 0.1);
        assert!(build_super_sl(&s0, &m).is_err());
    }

    #[test]
    fn baxterized_at_one_is_lambda_identity() {
        let q = re(2.0);
        let s = scheme(3, 3, q, BZero::Canonical, Gauge::Unitary, 0.1);
        let m = random_generic(3, 0.1, 6, 1.0).unwrap();
        let r = build_dynamical_r(&s, &m).unwrap();
        let l = s.lambda();
        let bax = build_baxterized(&r, re(1.0), l).unwrap();
        let expected = Operator::identity(3, 2).unwrap().scale(l);
        assert!(residual(&bax, &expected).unwrap().relative < 1e-13);

        // Oracle: explicit numerical inverse.
        let inv = r.matrix().clone().try_inverse().unwrap();
        let y = c(1.3, -0.2);
        let direct = Operator::from_matrix(3, 2, r.matrix() / y - inv * y).unwrap();
        let bax = build_baxterized(&r, y, l).unwrap();
        assert!(residual(&bax, &direct).unwrap().relative < 1e-12);
    }

    #[test]
    fn baxterized_unitarity_scalar() {
        let q = re(2.0);
        let l = lambda_of(q);
        let y = re(3.0);
        let scalar = l * l - (y - y.inv()).powi(2);
        assert!((scalar - re(2.25 - (8.0f64 / 3.0).powi(2))).norm() < 1e-14);
        assert!((scalar.re - (-4.861_111_111_111_111)).abs() < 1e-12);

        let r = build_constant_r(3, q).unwrap();
        let prod = &build_baxterized(&r, y, l).unwrap() * &build_baxterized(&r, y.inv(), l).unwrap();
        let expected = Operator::identity(3, 2).unwrap().scale(scalar);
        assert!(residual(&prod, &expected).unwrap().relative < 1e-10);
    }

    #[test]
    fn baxterized_constant_solves_spectral_ybe() {
        let q = re(1.7);
        let l = lambda_of(q);
        let r = build_constant_r(3, q).unwrap();
        let (y, z) = (re(1.3), c(0.7, 0.2));
        let b = |w: Scalar, slot| embed(&build_baxterized(&r, w, l).unwrap(), slot, 3).unwrap();
        let lhs = &(&b(y, Slot::S12) * &b(y * z, Slot::S23)) * &b(z, Slot::S12);
        let rhs = &(&b(z, Slot::S23) * &b(y * z, Slot::S12)) * &b(y, Slot::S23);
        assert!(residual(&lhs, &rhs).unwrap().relative < 1e-12);
    }

    #[test]
    fn baxterized_rejects_bad_input() {
        let bad = Operator::identity(2, 2).unwrap().scale(re(3.0));
        assert!(matches!(build_baxterized(&bad, re(1.0), re(1.5)), Err(Error::NotHecke(_))));
        let r = build_constant_r(2, re(2.0)).unwrap();
        assert!(build_baxterized(&r, re(0.0), re(1.5)).is_err());
    }

    #[test]
    fn yangian_base_properties() {
        let h = 0.1;
        let m = random_generic(3, h, 8, 1.0).unwrap();
        let r0 = build_yangian_base(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let bij = r0.get(&[i, j], &[i, j]);
                    let bji = r0.get(&[j, i], &[j, i]);
                    assert!((bij + bji).norm() < 1e-15);
                }
            }
        }
        let sq = &r0 * &r0;
        assert!(residual(&sq, &Operator::identity(3, 2).unwrap()).unwrap().absolute < 1e-11);
        let at_zero = build_yangian_r(&m, re(0.0)).unwrap();
        assert_eq!(at_zero, Operator::identity(3, 2).unwrap().scale(re(-1.0)));
        let coincident = Momentum::new(vec![0.2, 0.2], h).unwrap();
        assert!(build_yangian_r(&coincident, re(1.0)).is_err());
    }

    #[test]
    fn classical_r0_properties() {
        let m = Momentum::new(vec![1.0, -1.0], 0.1).unwrap();
        let r0 = build_classical_r0(&m).unwrap();
        assert_eq!(r0.get(&[0, 1], &[1, 0]), c(0.0, 0.5));
        assert_eq!(r0.get(&[1, 0], &[0, 1]), c(0.0, -0.5));
        assert_eq!(r0.trace(), re(0.0));

        let m = random_generic(4, 0.1, 3, 1.0).unwrap();
        let r0 = build_classical_r0(&m).unwrap();
        let p = permutation(4).unwrap();
        let swapped = &(&p * &r0) * &p;
        assert!(residual(&swapped, &r0.scale(re(-1.0))).unwrap().absolute < 1e-15);
        assert_eq!(r0.trace(), re(0.0));
    }

    #[test]
    fn spec_builds_every_kind() {
        let q = re(2.0);
        let h = 0.1;
        let m = random_generic(3, h, 2, 1.0).unwrap();
        let canon = scheme(3, 3, q, BZero::Canonical, Gauge::Unitary, h);
        let sup = scheme(3, 1, q, BZero::Canonical, Gauge::Unitary, h);
        let specs = vec![
            RMatrixSpec::constant(3, q).unwrap(),
            RMatrixSpec::dynamical(canon.clone()),
            RMatrixSpec::dynamical_sl(canon.clone()).unwrap(),
            RMatrixSpec::dynamical_super_sl(sup.clone()).unwrap(),
            RMatrixSpec::baxterized_trig(canon.clone(), re(1.3)),
            RMatrixSpec::baxterized_constant(3, q, re(0.8)).unwrap(),
            RMatrixSpec::yangian(3, re(0.4)),
            RMatrixSpec::classical_r0(3),
        ];
        let kinds: Vec<RMatrixKind> = specs.iter().map(|s| s.kind()).collect();
        assert_eq!(kinds, RMatrixKind::ALL.to_vec());
        for spec in &specs {
            let op = spec.build(&m).unwrap();
            assert_eq!((op.local_dim(), op.arity()), (3, 2));
            if let Some(l) = spec.hecke_lambda() {
                let core = op.scale(spec.normalization().inv());
                assert!(hecke_residual(&core, l).unwrap() < 1e-10, "{}", spec.kind());
            }
        }
        assert!(RMatrixSpec::dynamical_sl(sup).is_err());
        assert!(RMatrixSpec::dynamical_super_sl(canon).is_err());
    }
}
